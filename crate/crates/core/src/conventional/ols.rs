use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Coefficients of a least-squares fit `y ≈ coefficients · x + intercept`.
#[derive(Clone, Debug, PartialEq)]
pub struct OlsFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Ratio of largest to smallest singular value of the design matrix.
    pub condition: f64,
}

/// Designs with a condition number above this are treated as rank deficient.
const MAX_CONDITION: f64 = 1e10;

/// Ordinary least squares with an intercept, solved through the SVD of the design matrix.
pub fn ols_fit(xs: &[Vec<f64>], ys: &[f64]) -> Result<OlsFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::input(format!("ols_fit: {n} rows but {} targets", ys.len())));
    }
    let dim = xs.first().map_or(0, Vec::len);
    if xs.iter().any(|x| x.len() != dim) {
        return Err(Error::input("ols_fit: rows have different lengths"));
    }
    if n < dim + 1 {
        return Err(Error::Fit {
            msg: format!("{n} samples cannot determine {} parameters", dim + 1),
            condition: f64::INFINITY,
        });
    }
    if xs.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::input("ols_fit: non-finite data"));
    }

    let design = DMatrix::from_fn(n, dim + 1, |r, c| if c < dim { xs[r][c] } else { 1.0 });
    let target = DVector::from_column_slice(ys);
    let svd = design.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition = if s_min > 0.0 { s_max / s_min } else { f64::INFINITY };
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Fit {
            msg: "design matrix is rank deficient".into(),
            condition,
        });
    }
    let beta = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Fit { msg: e.to_string(), condition })?;
    Ok(OlsFit {
        coefficients: beta.as_slice()[..dim].to_vec(),
        intercept: beta[dim],
        condition,
    })
}

/// Zero-intercept slope `Σxy / Σx²`; `None` when every `x` is zero.
pub fn slope_through_origin(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    Some(sxy / sxx)
}
