//! Simplex-valued data and the additive log-ratio (ALR) transform.
//!
//! A [`Composition`] is a point in the simplex: G strictly positive parts
//! summing to one. [`alr_forward`] maps it to G−1 real coordinates by taking
//! the log of each part over the *last* part, which acts as the reference;
//! [`alr_inverse`] maps back. [`validate_and_normalize`] turns raw tabular
//! data (percentages, proportions, or arbitrary positive weights) into a
//! validated [`CompositionDataset`].

use thiserror::Error;

/// Tolerance on the sum of parts after construction.
const SUM_TOLERANCE: f64 = 1e-9;
/// Raw sums may deviate from 1 by at most this much before construction rejects.
const RAW_SUM_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Error, PartialEq)]
pub enum SimplexError {
    #[error("part {index} is not strictly positive")]
    ZeroPart { index: usize },
    #[error("row {row}, column {col}: entry {value} is not strictly positive")]
    NonPositiveEntry { row: usize, col: usize, value: f64 },
    #[error("row {row}: sum {sum} deviates from the expected total by more than 1%")]
    RowSumError { row: usize, sum: f64 },
    #[error("composition sum {sum} deviates from 1 by more than {RAW_SUM_TOLERANCE}")]
    BadSum { sum: f64 },
    #[error("ALR coordinate {index} is not finite")]
    NonFinite { index: usize },
    #[error("ALR inverse overflowed: coordinate spread exceeds floating-point range")]
    Overflow,
    #[error("a composition needs at least 2 parts, found {found}")]
    TooFewParts { found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("row {row} has {found} parts, expected {expected}")]
    UnequalParts { row: usize, expected: usize, found: usize },
    #[error("{found} labels for {rows} rows")]
    LabelMismatch { rows: usize, found: usize },
}

/// One simplex-valued observation: G strictly positive parts summing to 1.
///
/// Construction renormalizes inputs whose raw sum deviates from 1 by at most
/// 1e-2 and rejects anything further off; after construction the parts sum to
/// 1 within 1e-9. Immutable thereafter.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    parts: Vec<f64>,
}

impl Composition {
    pub fn new(parts: Vec<f64>) -> Result<Self, SimplexError> {
        if parts.len() < 2 {
            return Err(SimplexError::TooFewParts { found: parts.len() });
        }
        for (i, &p) in parts.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(SimplexError::ZeroPart { index: i });
            }
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > RAW_SUM_TOLERANCE {
            return Err(SimplexError::BadSum { sum });
        }
        let parts = parts.into_iter().map(|p| p / sum).collect::<Vec<_>>();
        debug_assert!((parts.iter().sum::<f64>() - 1.0).abs() <= SUM_TOLERANCE);
        Ok(Self { parts })
    }

    /// Number of parts G.
    pub fn num_parts(&self) -> usize {
        self.parts.len()
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }
}

/// A collection of compositions with a common number of parts.
#[derive(Debug, Clone)]
pub struct CompositionDataset {
    rows: Vec<Composition>,
    labels: Option<Vec<String>>,
}

impl CompositionDataset {
    pub fn new(rows: Vec<Composition>, labels: Option<Vec<String>>) -> Result<Self, SimplexError> {
        let Some(first) = rows.first() else {
            return Err(SimplexError::EmptyDataset);
        };
        let parts = first.num_parts();
        for (i, row) in rows.iter().enumerate() {
            if row.num_parts() != parts {
                return Err(SimplexError::UnequalParts {
                    row: i,
                    expected: parts,
                    found: row.num_parts(),
                });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(SimplexError::LabelMismatch {
                    rows: rows.len(),
                    found: labels.len(),
                });
            }
        }
        Ok(Self { rows, labels })
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// Number of parts G shared by every row.
    pub fn num_parts(&self) -> usize {
        self.rows[0].num_parts()
    }

    pub fn rows(&self) -> &[Composition] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }
}

/// ALR transform: coordinate j is log(parts[j] / parts[G-1]) for j < G−1.
///
/// The last part is the reference denominator and is dropped from the output.
pub fn alr_forward(c: &Composition) -> Result<Vec<f64>, SimplexError> {
    let parts = c.parts();
    for (i, &p) in parts.iter().enumerate() {
        if !(p > 0.0) {
            return Err(SimplexError::ZeroPart { index: i });
        }
    }
    let reference = parts[parts.len() - 1];
    Ok(parts[..parts.len() - 1]
        .iter()
        .map(|&p| (p / reference).ln())
        .collect())
}

/// Inverse ALR: maps g real coordinates to a (g+1)-part composition.
///
/// Exponentials are shifted by the coordinate maximum so the sum never
/// overflows; the error is reserved for coordinate spreads so extreme that a
/// part underflows to zero (|y| beyond ~700 after shifting).
pub fn alr_inverse(y: &[f64]) -> Result<Composition, SimplexError> {
    for (i, &v) in y.iter().enumerate() {
        if !v.is_finite() {
            return Err(SimplexError::NonFinite { index: i });
        }
    }
    // The implicit reference coordinate is 0; include it in the shift.
    let shift = y.iter().fold(0.0_f64, |m, &v| m.max(v));
    let mut parts: Vec<f64> = y.iter().map(|&v| (v - shift).exp()).collect();
    parts.push((-shift).exp());
    let denom: f64 = parts.iter().sum();
    for p in &mut parts {
        *p /= denom;
    }
    if parts.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
        return Err(SimplexError::Overflow);
    }
    Composition::new(parts)
}

/// Totals a raw row may be expressed against: proportions or percentages.
const KNOWN_TOTALS: [f64; 2] = [1.0, 100.0];

/// Validate raw rows and normalize each by its own sum.
///
/// Scale handling: a row whose sum is within 50% (in ratio) of a recognized
/// total (1 or 100) is treated as data on that scale and must match it within
/// 1%, else the row is rejected as a broken proportion/percentage row. Rows at
/// other magnitudes are taken as raw positive weights and renormalized as-is.
pub fn validate_and_normalize(
    raw: &[Vec<f64>],
    labels: Option<Vec<String>>,
) -> Result<CompositionDataset, SimplexError> {
    if raw.is_empty() {
        return Err(SimplexError::EmptyDataset);
    }
    let mut rows = Vec::with_capacity(raw.len());
    for (i, row) in raw.iter().enumerate() {
        if row.len() < 2 {
            return Err(SimplexError::TooFewParts { found: row.len() });
        }
        for (j, &v) in row.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SimplexError::NonPositiveEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        let sum: f64 = row.iter().sum();
        for &total in &KNOWN_TOTALS {
            let ratio = sum / total;
            if (0.5..=1.5).contains(&ratio) && (ratio - 1.0).abs() > 0.01 {
                return Err(SimplexError::RowSumError { row: i, sum });
            }
        }
        let parts = row.iter().map(|&v| v / sum).collect::<Vec<_>>();
        rows.push(Composition::new(parts)?);
    }
    CompositionDataset::new(rows, labels)
}
