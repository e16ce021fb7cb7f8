//! `%g`-style float formatting for CSV output.

/// Formats `x` with `sig` significant digits the way C's `%.{sig}g` does:
/// fixed notation for moderate exponents, scientific otherwise, trailing
/// zeros removed.
pub fn format_g(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= sig as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (sig as i32 - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf() {
        // Expected strings from C printf("%.9g") / printf("%.17g").
        let cases: [(f64, usize, &str); 12] = [
            (0.0, 9, "0"),
            (0.5, 17, "0.5"),
            (0.1, 17, "0.10000000000000001"),
            (2.5446, 9, "2.5446"),
            (1.0 / 3.0, 9, "0.333333333"),
            (123456789.0, 9, "123456789"),
            (1234567890.0, 9, "1.23456789e+09"),
            (0.0001, 9, "0.0001"),
            (0.00001234, 9, "1.234e-05"),
            (-7.25e-12, 9, "-7.25e-12"),
            (99999999.95, 9, "100000000"),
            (0.75, 17, "0.75"),
        ];
        for (x, sig, want) in cases {
            assert_eq!(format_g(x, sig), want, "{x}");
        }
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for &x in &[0.1, 1.0 / 3.0, 2f64.powi(-52), 0.999_999_999_999_999_8, 123.456] {
            assert_eq!(format_g(x, 17).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn special_values() {
        assert_eq!(format_g(f64::NAN, 9), "nan");
        assert_eq!(format_g(f64::NEG_INFINITY, 9), "-inf");
    }
}
