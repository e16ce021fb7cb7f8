use crate::error::{Error, Result};

/// Least-squares line `log2(error) = intercept + slope * log2(N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
}

impl RateFit {
    pub fn predict(&self, n: f64) -> f64 {
        (self.intercept + self.slope * n.log2()).exp2()
    }
}

/// Fits the empirical convergence order of `errors` over sample sizes `ns`.
pub fn fit_rate(ns: &[f64], errors: &[f64]) -> Result<RateFit> {
    if ns.len() != errors.len() {
        return Err(Error::Precondition(format!(
            "{} sample sizes but {} errors",
            ns.len(),
            errors.len()
        )));
    }
    if ns.len() < 3 {
        return Err(Error::Precondition(format!(
            "rate fit needs at least 3 grid points, got {}",
            ns.len()
        )));
    }
    if let Some(bad) = errors.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::Domain(format!("error value {bad} is not positive")));
    }
    if let Some(bad) = ns.iter().find(|n| !(**n > 0.0 && n.is_finite())) {
        return Err(Error::Domain(format!("sample size {bad} is not positive")));
    }
    let xs: Vec<f64> = ns.iter().map(|n| n.log2()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.log2()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all sample sizes are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        intercept: my - slope * mx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<f64> {
        (8..=16).map(|m| f64::from(1u32 << m)).collect()
    }

    #[test]
    fn exact_power_laws() {
        let ns = grid();
        for (power, c) in [(1.0, 3.0), (0.0, 0.25), (2.0, 10.0)] {
            let errors: Vec<f64> = ns.iter().map(|n| c / n.powf(power)).collect();
            let fit = fit_rate(&ns, &errors).unwrap();
            assert!((fit.slope + power).abs() < 1e-12, "{fit:?}");
            assert!((fit.intercept - c.log2()).abs() < 1e-9);
            assert!((fit.predict(1024.0) - c / 1024f64.powf(power)).abs() < 1e-9);
        }
    }

    #[test]
    fn domain_errors() {
        let ns = [256.0, 512.0, 1024.0];
        assert!(matches!(fit_rate(&ns, &[1.0, 0.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_rate(&ns, &[1.0, -2.0, 1.0]), Err(Error::Domain(_))));
        assert!(matches!(fit_rate(&ns[..2], &[1.0, 1.0]), Err(Error::Precondition(_))));
        assert!(fit_rate(&[4.0; 3], &[1.0, 2.0, 3.0]).is_err());
    }
}
