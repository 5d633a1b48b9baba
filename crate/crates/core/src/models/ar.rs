//! Autoregression on first differences of TT, order chosen by AIC.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `d[t] = intercept + sum_i coefficients[i] * d[t-1-i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArCoefficients {
    pub order: usize,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub aic: f64,
}

impl ArCoefficients {
    /// One-step forecast from the most recent differences, newest first.
    pub fn forecast(&self, recent: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(recent).map(|(c, d)| c * d).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArFit {
    pub model: ArCoefficients,
    /// Orders skipped because their design matrix was rank deficient.
    pub singular_orders: Vec<usize>,
}

const RANK_TOL: f64 = 1e-10;

/// Least squares via Householder QR; `None` when the design is rank deficient.
fn least_squares(x: DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let qr = x.qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..r.ncols()).map(|i| r[(i, i)].abs()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    if max == 0.0 || diag.iter().any(|d| *d <= RANK_TOL * max) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
}

/// Fits AR(p) with intercept on the first differences of `tt` for every
/// `p <= p_max` on a common sample (the first `p_max` differences are held
/// back as lags), and keeps the order with the lowest AIC (ties: lower order).
pub fn fit_ar_diff(tt: &[f64], p_max: usize) -> Result<ArFit> {
    if tt.len() < p_max + 10 {
        return Err(Error::InsufficientHistory(format!(
            "AR on differences needs at least {} observations, got {}",
            p_max + 10,
            tt.len()
        )));
    }
    let diffs: Vec<f64> = tt.windows(2).map(|w| w[1] - w[0]).collect();
    let n = diffs.len() - p_max;
    let y = DVector::from_iterator(n, diffs[p_max..].iter().copied());

    let mut best: Option<ArCoefficients> = None;
    let mut singular_orders = Vec::new();
    for p in 0..=p_max {
        let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { diffs[p_max + i - j] });
        let Some(beta) = least_squares(x.clone(), &y) else {
            singular_orders.push(p);
            continue;
        };
        let sse = (&y - &x * &beta).norm_squared();
        let sigma2 = (sse / n as f64).max(f64::MIN_POSITIVE);
        let aic = n as f64 * sigma2.ln() + 2.0 * (p + 1) as f64;
        if best.as_ref().is_none_or(|b| aic < b.aic) {
            best = Some(ArCoefficients {
                order: p,
                intercept: beta[0],
                coefficients: beta.iter().skip(1).copied().collect(),
                aic,
            });
        }
    }
    let model = match best {
        Some(m) => m,
        None => {
            // Only reachable when even the intercept column is degenerate (n == 0).
            log::warn!("AR design singular for every order; using drift-only model");
            let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
            ArCoefficients {
                order: 0,
                intercept: mean,
                coefficients: Vec::new(),
                aic: f64::INFINITY,
            }
        }
    };
    if !singular_orders.is_empty() {
        log::warn!("AR orders {singular_orders:?} skipped: singular design");
    }
    Ok(ArFit { model, singular_orders })
}
