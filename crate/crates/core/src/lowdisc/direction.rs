//! Direction numbers for the base-2 Sobol' sequence, in the text layout
//! published by Joe and Kuo (`d s a m_1 ... m_s`, one dimension per line).

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest bit depth whose outputs are exact in an `f64` mantissa.
pub const MAX_BIT_DEPTH: u32 = 52;
pub const DEFAULT_BIT_DEPTH: u32 = 52;

static JOE_KUO_64: &str = include_str!("../../data/new-joe-kuo-6.64");

/// Primitive polynomial and initial values for one Sobol' dimension.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DimensionRecord {
    /// Polynomial degree `s`.
    pub degree: u32,
    /// Interior coefficients `a`, packed with the highest-order one first.
    pub coeff: u32,
    /// `m_1 .. m_s`; every value odd with `m_k < 2^k`.
    pub initial: Vec<u64>,
}

impl DimensionRecord {
    fn validate(&self, line: usize) -> Result<()> {
        let bad = |message: String| Error::Parse {
            key: format!("line {line}"),
            message,
        };
        if self.degree == 0 || self.degree > MAX_BIT_DEPTH {
            return Err(bad(format!("degree {} out of range", self.degree)));
        }
        if self.initial.len() != self.degree as usize {
            return Err(bad(format!(
                "degree {} needs {} initial values, found {}",
                self.degree,
                self.degree,
                self.initial.len()
            )));
        }
        if u64::from(self.coeff) >= 1u64 << (self.degree - 1) {
            return Err(bad(format!(
                "coefficient {} too wide for degree {}",
                self.coeff, self.degree
            )));
        }
        for (k, &m) in self.initial.iter().enumerate() {
            if m % 2 == 0 || m >= 1u64 << (k + 1) {
                return Err(bad(format!("m_{} = {m} must be odd and below 2^{}", k + 1, k + 1)));
            }
        }
        Ok(())
    }

    /// `m_1 .. m_bits`, extending the initial values with the recurrence
    /// of the primitive polynomial.
    fn extended(&self, bits: usize) -> Vec<u64> {
        let s = self.degree as usize;
        let mut m = self.initial.clone();
        m.truncate(bits);
        for k in s..bits {
            // m_k = 2 a_1 m_{k-1} ^ 4 a_2 m_{k-2} ^ ... ^ 2^s m_{k-s} ^ m_{k-s}
            let mut value = m[k - s] ^ (m[k - s] << s);
            for j in 1..s {
                if (self.coeff >> (s - 1 - j)) & 1 == 1 {
                    value ^= m[k - j] << j;
                }
            }
            m.push(value);
        }
        m
    }
}

/// Generating data for a base-2 Sobol' sequence.
///
/// Dimension 1 is the van der Corput sequence and has no record; record
/// `j` (0-based) describes dimension `j + 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionNumbers {
    records: Vec<DimensionRecord>,
    bit_depth: u32,
}

impl DirectionNumbers {
    /// Parses the Joe–Kuo text format. A non-numeric header line, blank
    /// lines and trailing whitespace are tolerated. Dimensions must be
    /// listed consecutively starting at 2.
    pub fn parse(text: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if records.is_empty() && fields[0].parse::<u64>().is_err() {
                // header
                continue;
            }
            let nums = fields
                .iter()
                .map(|f| f.parse::<u64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse {
                    key: format!("line {line_no}"),
                    message: e.to_string(),
                })?;
            if nums.len() < 4 {
                return Err(Error::Parse {
                    key: format!("line {line_no}"),
                    message: "expected `d s a m_1 ... m_s`".into(),
                });
            }
            let expected_dim = records.len() as u64 + 2;
            if nums[0] != expected_dim {
                return Err(Error::Parse {
                    key: format!("line {line_no}"),
                    message: format!("expected dimension {expected_dim}, found {}", nums[0]),
                });
            }
            let narrow = |v: u64, what: &str| {
                u32::try_from(v).map_err(|_| Error::Parse {
                    key: format!("line {line_no}"),
                    message: format!("{what} {v} too large"),
                })
            };
            let record = DimensionRecord {
                degree: narrow(nums[1], "degree")?,
                coeff: narrow(nums[2], "coefficient")?,
                initial: nums[3..].to_vec(),
            };
            record.validate(line_no)?;
            records.push(record);
        }
        Ok(DirectionNumbers {
            records,
            bit_depth: DEFAULT_BIT_DEPTH,
        })
    }

    /// The bundled table: the first 64 dimensions of `new-joe-kuo-6.21201`.
    pub fn joe_kuo() -> &'static DirectionNumbers {
        static TABLE: OnceLock<DirectionNumbers> = OnceLock::new();
        TABLE.get_or_init(|| DirectionNumbers::parse(JOE_KUO_64).expect("bundled table is valid"))
    }

    pub fn with_bit_depth(mut self, bit_depth: u32) -> Result<Self> {
        if bit_depth == 0 || bit_depth > MAX_BIT_DEPTH {
            return Err(Error::Config(format!(
                "bit depth {bit_depth} outside [1, {MAX_BIT_DEPTH}]"
            )));
        }
        self.bit_depth = bit_depth;
        Ok(self)
    }

    /// Number of records, i.e. dimensions beyond the first.
    pub fn dimension_count(&self) -> usize {
        self.records.len()
    }

    /// Largest dimension the table can generate.
    pub fn max_dim(&self) -> usize {
        self.records.len() + 1
    }

    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    pub fn records(&self) -> &[DimensionRecord] {
        &self.records
    }

    /// Direction integers `v_1 .. v_B` of dimension `dim` (0-based), scaled
    /// so that the output coordinate is `x / 2^B` with `B = bit_depth`.
    pub fn directions(&self, dim: usize) -> Result<Vec<u64>> {
        let bits = self.bit_depth as usize;
        let m = if dim == 0 {
            vec![1u64; bits]
        } else {
            self.records
                .get(dim - 1)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "dimension {} exceeds direction-number table ({} dimensions)",
                        dim + 1,
                        self.max_dim()
                    ))
                })?
                .extended(bits)
        };
        Ok(m.iter()
            .enumerate()
            .map(|(k, &mk)| mk << (bits - 1 - k))
            .collect())
    }
}
