//! Time-rescaling residuals: compensator increments between consecutive
//! same-type events, pooled over both types, checked against Exp(1).

use crate::error::{Error, Result};
use crate::events::EventStream;
use crate::model::MarkedHawkesParams;

use super::likelihood::initial_intensity;

/// Number of probability levels in the Q-Q output.
pub const QQ_LEVELS: usize = 199;

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub residuals: Vec<f64>,
    pub ks_statistic: f64,
    pub ks_pvalue: f64,
    /// (theoretical, empirical) quantiles at `k/200`, `k = 1..=199`.
    pub qq_points: Vec<(f64, f64)>,
}

/// `∫ λᵢ` between consecutive type-`i` events, both types pooled in the
/// order the later event occurs.
pub fn time_rescaled(params: &MarkedHawkesParams, stream: &EventStream) -> Result<Vec<f64>> {
    let lam0 = initial_intensity(params, &stream.events)?;
    let mu = params.base.mu.0;
    let beta = params.base.beta.0;
    let mut x = [lam0.0[0] - mu[0], lam0.0[1] - mu[1]];
    let mut cum = [0.0f64; 2];
    let mut at_last: [Option<f64>; 2] = [None, None];
    let mut last = 0.0;
    let mut out = Vec::with_capacity(stream.len());
    for e in &stream.events {
        let dt = e.time - last;
        if dt < 0.0 {
            return Err(Error::Data(format!("unsorted events: {} after {last}", e.time)));
        }
        last = e.time;
        for i in 0..2 {
            cum[i] += mu[i] * dt - x[i] * (-beta[i] * dt).exp_m1() / beta[i];
            x[i] *= (-beta[i] * dt).exp();
        }
        let i = e.side.index();
        if let Some(prev) = at_last[i] {
            out.push(cum[i] - prev);
        }
        at_last[i] = Some(cum[i]);
        let jump = params.jump(i, e.mark as f64);
        x[0] += jump.0[0];
        x[1] += jump.0[1];
    }
    Ok(out)
}

pub fn residual_report(params: &MarkedHawkesParams, stream: &EventStream) -> Result<ResidualReport> {
    let residuals = time_rescaled(params, stream)?;
    if residuals.len() < 10 {
        return Err(Error::InsufficientData(format!("{} residuals, need 10", residuals.len())));
    }
    let (ks_statistic, ks_pvalue) = ks_exponential(&residuals);
    Ok(ResidualReport {
        qq_points: qq_exponential(&residuals),
        residuals,
        ks_statistic,
        ks_pvalue,
    })
}

/// One-sample Kolmogorov–Smirnov test against Exp(1): statistic and the
/// asymptotic p-value with the `√n + 0.12 + 0.11/√n` small-sample factor.
pub fn ks_exponential(xs: &[f64]) -> (f64, f64) {
    let mut u: Vec<f64> = xs.iter().map(|x| -(-x.max(0.0)).exp_m1()).collect();
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let d = u
        .iter()
        .enumerate()
        .map(|(k, &v)| ((k as f64 + 1.0) / n - v).max(v - k as f64 / n))
        .fold(0.0, f64::max);
    let sn = n.sqrt();
    (d, kolmogorov_q((sn + 0.12 + 0.11 / sn) * d))
}

/// `Q(λ) = 2 Σ (−1)^{k−1} e^{−2k²λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Exp(1) Q-Q pairs at `k/(QQ_LEVELS+1)`; empirical quantiles by linear
/// interpolation between order statistics.
pub fn qq_exponential(xs: &[f64]) -> Vec<(f64, f64)> {
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    (1..=QQ_LEVELS)
        .map(|k| {
            let p = k as f64 / (QQ_LEVELS + 1) as f64;
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let emp = s[lo] + (h - lo as f64) * (s[hi] - s[lo]);
            (-(-p).ln_1p(), emp)
        })
        .collect()
}
