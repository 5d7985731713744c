//! Rolling one-step forecasts of daily Hawkes volatility: AR(2) on the
//! stock series, and the stock series on its own lag plus the pre-market
//! futures volatility. Errors are scored by RMSRE with the forecast in the
//! denominator.

use crate::error::{Error, Result};
use crate::par::Execution;

use super::regression::ols;

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastReport {
    pub model: String,
    /// `(day index, forecast, realised)` for every scored day.
    pub forecasts: Vec<(usize, f64, f64)>,
    pub rmsre: f64,
    /// Some refit was close to a unit root (AR(2) only).
    pub near_unit_root: bool,
}

/// `√(mean(((forecast − actual) / forecast)²))`.
pub fn rmsre(forecasts: &[(usize, f64, f64)]) -> f64 {
    let n = forecasts.len() as f64;
    (forecasts.iter().map(|(_, f, a)| ((f - a) / f).powi(2)).sum::<f64>() / n).sqrt()
}

/// Largest modulus of the roots of `z² − φ₁z − φ₂`.
pub fn ar2_root_modulus(phi1: f64, phi2: f64) -> f64 {
    let disc = phi1 * phi1 + 4.0 * phi2;
    if disc >= 0.0 {
        let s = disc.sqrt();
        ((phi1 + s) / 2.0).abs().max(((phi1 - s) / 2.0).abs())
    } else {
        (-phi2).sqrt()
    }
}

/// Threshold on [`ar2_root_modulus`] above which a fit is flagged.
pub const UNIT_ROOT_FLAG: f64 = 0.99;

fn check_len(n: usize, train: usize) -> Result<()> {
    if train < 5 || n < train + 2 {
        return Err(Error::InsufficientData(format!("{n} observations for a {train}-day training window")));
    }
    Ok(())
}

/// One-step AR(2) forecast of day `n` from a fit on days `n−train … n−1`.
fn ar2_step(h: &[f64], n: usize, train: usize) -> Option<(f64, bool)> {
    let lo = n.saturating_sub(train).max(2);
    let y = &h[lo..n];
    let l1 = &h[lo - 1..n - 1];
    let l2 = &h[lo - 2..n - 2];
    let fit = ols(y, &[l1, l2]).ok()?;
    let flag = ar2_root_modulus(fit.coef[1], fit.coef[2]) > UNIT_ROOT_FLAG;
    Some((fit.predict(&[h[n - 1], h[n - 2]]), flag))
}

pub fn ar2_forecast(h: &[f64], train: usize, exec: Execution) -> Result<ForecastReport> {
    check_len(h.len(), train)?;
    let steps = exec.map(h.len() - train, |k| ar2_step(h, train + k, train));
    let mut forecasts = Vec::new();
    let mut near_unit_root = false;
    for (k, s) in steps.into_iter().enumerate() {
        let n = train + k;
        let (f, flag) = s.ok_or_else(|| Error::Numerical(format!("AR(2) refit failed at day {n}")))?;
        near_unit_root |= flag;
        forecasts.push((n, f, h[n]));
    }
    Ok(ForecastReport {
        model: "ar2".into(),
        rmsre: rmsre(&forecasts),
        forecasts,
        near_unit_root,
    })
}

/// `h^s_n = ψ₀ + ψ₁h^s_{n−1} + ψ₂h^f_n + ε`, refitted on the trailing
/// window; forecast `ψ̂₀ + ψ̂₁h^s_{n−1} + ψ̂₂h^f_n` for day `n`.
pub fn futures_lm_forecast(stock: &[f64], futures: &[f64], train: usize, exec: Execution) -> Result<ForecastReport> {
    if stock.len() != futures.len() {
        return Err(Error::Data("stock and futures series lengths differ".into()));
    }
    check_len(stock.len(), train)?;
    let steps = exec.map(stock.len() - train, |k| {
        let n = train + k;
        let lo = n.saturating_sub(train).max(1);
        let fit = ols(&stock[lo..n], &[&stock[lo - 1..n - 1], &futures[lo..n]]).ok()?;
        Some(fit.predict(&[stock[n - 1], futures[n]]))
    });
    let mut forecasts = Vec::new();
    for (k, s) in steps.into_iter().enumerate() {
        let n = train + k;
        let f = s.ok_or_else(|| Error::Numerical(format!("futures model refit failed at day {n}")))?;
        forecasts.push((n, f, stock[n]));
    }
    Ok(ForecastReport {
        model: "futures_lm".into(),
        rmsre: rmsre(&forecasts),
        forecasts,
        near_unit_root: false,
    })
}
