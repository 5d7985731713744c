//! GJR-GARCH(1,1) daily variance: Gaussian MLE, one-step forecasts and
//! rolling refits.
//!
//! The asymmetric ARCH term uses the squared previous return,
//! `g²ₙ = ω + (α + γ·1{Rₙ₋₁<0}) R²ₙ₋₁ + β g²ₙ₋₁`, which is what the
//! stationarity bound `α + γ/2 + β < 1` refers to.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::optim::{minimize, numeric_gradient, numeric_hessian, BfgsOptions};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GjrParams {
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl GjrParams {
    pub fn persistence(&self) -> f64 {
        self.alpha + 0.5 * self.gamma + self.beta
    }

    /// Parameter invariants plus `α + γ ≥ 0`, which keeps the recursion
    /// positive after negative returns.
    pub fn validate(&self) -> Result<()> {
        let ok = self.omega > 0.0
            && self.alpha >= 0.0
            && self.beta >= 0.0
            && self.alpha + self.gamma >= 0.0
            && self.persistence() < 1.0
            && [self.omega, self.alpha, self.gamma, self.beta].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!("invalid GJR parameters {self:?}")))
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.omega, self.alpha, self.gamma, self.beta]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GjrFit {
    pub params: GjrParams,
    /// Order `ω, α, γ, β`.
    pub std_errors: Option<[f64; 4]>,
    pub loglik: f64,
    pub converged: bool,
}

fn sample_variance(r: &[f64]) -> f64 {
    let n = r.len() as f64;
    let m = r.iter().sum::<f64>() / n;
    r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}

/// `g²₁ … g²ₙ₊₁` for the returns, starting from the sample variance; the
/// last entry is the one-step-ahead forecast.
pub fn gjr_variances(p: &GjrParams, returns: &[f64]) -> Result<Vec<f64>> {
    if returns.len() < 2 {
        return Err(Error::InsufficientData("need at least 2 returns".into()));
    }
    let mut g2 = Vec::with_capacity(returns.len() + 1);
    g2.push(sample_variance(returns));
    for (n, r) in returns.iter().enumerate() {
        let lev = if *r < 0.0 { p.gamma } else { 0.0 };
        g2.push(p.omega + (p.alpha + lev) * r * r + p.beta * g2[n]);
    }
    Ok(g2)
}

/// One-step forecast `ĝ²ₙ₊₁` after the last return.
pub fn gjr_forecast(p: &GjrParams, returns: &[f64]) -> Result<f64> {
    Ok(*gjr_variances(p, returns)?.last().expect("non-empty"))
}

/// Gaussian log-likelihood `Σ −½(log 2π + log g²ₙ + R²ₙ/g²ₙ)`.
pub fn gjr_loglik(p: &GjrParams, returns: &[f64]) -> Option<f64> {
    let g2 = gjr_variances(p, returns).ok()?;
    let mut ll = 0.0;
    for (r, v) in returns.iter().zip(&g2) {
        if !(*v > 0.0) {
            return None;
        }
        ll -= 0.5 * ((2.0 * std::f64::consts::PI).ln() + v.ln() + r * r / v);
    }
    ll.is_finite().then_some(ll)
}

/// Optimiser coordinates `(log ω, log α, γ, log β)`.
fn from_x(x: &[f64]) -> GjrParams {
    GjrParams {
        omega: x[0].exp(),
        alpha: x[1].exp(),
        gamma: x[2],
        beta: x[3].exp(),
    }
}

fn feasible_loglik(x: &[f64], returns: &[f64]) -> Option<f64> {
    let p = from_x(x);
    p.validate().ok()?;
    gjr_loglik(&p, returns)
}

pub fn gjr_fit(returns: &[f64]) -> Result<GjrFit> {
    if returns.len() < 50 {
        return Err(Error::InsufficientData(format!("{} returns, need 50", returns.len())));
    }
    let n = returns.len() as f64;
    let var = sample_variance(returns);
    if !(var > 0.0) {
        return Err(Error::InsufficientData("constant returns".into()));
    }
    let objective = |x: &[f64]| {
        let f = -feasible_loglik(x, returns)? / n;
        let g = numeric_gradient(|y| feasible_loglik(y, returns).map(|v| -v / n), x, 1e-6)?;
        Some((f, g))
    };
    let opts = BfgsOptions {
        max_step: 1.0,
        ..Default::default()
    };
    let mut best: Option<crate::optim::BfgsResult> = None;
    for (a, gm, b) in [(0.05, 0.05, 0.85), (0.1, 0.1, 0.6), (0.1, 0.0, 0.3)] {
        let omega = var * (1.0 - a - 0.5 * gm - b);
        let x0 = [omega.ln(), f64::ln(a), gm, f64::ln(b)];
        let r = minimize(objective, &x0, &opts);
        if best.as_ref().is_none_or(|bst| r.f < bst.f) {
            best = Some(r);
        }
    }
    let r = best.expect("three starts");
    if !r.f.is_finite() {
        return Err(Error::Numerical("GJR fit: no feasible start".into()));
    }
    let params = from_x(&r.x);
    let std_errors = numeric_hessian(|y| feasible_loglik(y, returns), &r.x, 1e-4).and_then(|h| {
        let info = -DMatrix::from_row_slice(4, 4, &h);
        let cov = info.cholesky()?.inverse();
        let jac = [params.omega, params.alpha, 1.0, params.beta];
        let mut se = [0.0; 4];
        for k in 0..4 {
            let v = cov[(k, k)];
            if !(v > 0.0) {
                return None;
            }
            se[k] = jac[k] * v.sqrt();
        }
        Some(se)
    });
    Ok(GjrFit {
        params,
        std_errors,
        loglik: -r.f * n,
        converged: r.converged(),
    })
}

/// For each `n ≥ m`, refits on returns `n−m .. n` and forecasts `g_n`
/// (the volatility, not the variance). Entries before `m`, and failed
/// refits, are `None`.
pub fn gjr_rolling(returns: &[f64], m: usize, exec: Execution) -> Result<Vec<Option<f64>>> {
    if returns.len() < m {
        return Err(Error::InsufficientData(format!("{} returns, window {m}", returns.len())));
    }
    let tail = exec.map(returns.len() + 1 - m, |k| {
        let w = &returns[k..k + m];
        let fit = gjr_fit(w).ok()?;
        gjr_forecast(&fit.params, w).ok().map(f64::sqrt)
    });
    let mut out = vec![None; m];
    out.extend(tail);
    out.truncate(returns.len());
    Ok(out)
}

/// Simulated returns `Rₙ = gₙ·εₙ` with standard normal `εₙ`, started at the
/// unconditional variance `ω / (1 − α − γ/2 − β)`.
pub fn gjr_simulate(p: &GjrParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g2 = p.omega / (1.0 - p.persistence());
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(&mut rng);
        let r = g2.sqrt() * e;
        out.push(r);
        let lev = if r < 0.0 { p.gamma } else { 0.0 };
        g2 = p.omega + (p.alpha + lev) * r * r + p.beta * g2;
    }
    Ok(out)
}

impl GjrFit {
    pub fn within(&self, truth: &GjrParams, k: f64) -> bool {
        let Some(se) = self.std_errors else {
            return false;
        };
        let est = self.params.to_array();
        truth
            .to_array()
            .iter()
            .zip(est.iter().zip(se))
            .all(|(t, (e, s))| (t - e).abs() <= k * s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forecast_hand_trace() {
        let p = GjrParams {
            omega: 0.1,
            alpha: 0.2,
            gamma: 0.3,
            beta: 0.4,
        };
        let r = [1.0, -2.0, 0.5];
        // sample variance of (1, −2, 0.5): mean −1/6, Σd² = 186/36
        let g1 = 31.0 / 12.0;
        let g2 = 0.1 + 0.2 * 1.0 + 0.4 * g1;
        let g3 = 0.1 + 0.5 * 4.0 + 0.4 * g2;
        let g4 = 0.1 + 0.2 * 0.25 + 0.4 * g3;
        let v = gjr_variances(&p, &r).unwrap();
        for (a, b) in v.iter().zip([g1, g2, g3, g4]) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert_eq!(gjr_forecast(&p, &r).unwrap(), v[3]);
    }

    #[test]
    fn recovers_simulated_params() {
        let truth = GjrParams {
            omega: 2e-6,
            alpha: 0.05,
            gamma: 0.1,
            beta: 0.85,
        };
        let r = gjr_simulate(&truth, 5000, 3).unwrap();
        let fit = gjr_fit(&r).unwrap();
        assert!(fit.converged);
        assert!(fit.within(&truth, 3.0), "{fit:?}");
    }

    #[test]
    fn iid_returns_degenerate() {
        let p = GjrParams {
            omega: 1e-4,
            alpha: 0.0,
            gamma: 0.0,
            beta: 0.0,
        };
        let r = gjr_simulate(&p, 3000, 5).unwrap();
        let fit = gjr_fit(&r).unwrap();
        let q = fit.params;
        // ω and β trade off when α = γ = 0; the implied level is pinned down
        let level = q.omega / (1.0 - q.beta);
        assert!((level / sample_variance(&r) - 1.0).abs() < 0.1, "{q:?}");
        assert!(q.alpha < 0.03 && q.alpha + q.gamma < 0.05, "{q:?}");
    }

    #[test]
    fn recursion_stays_positive() {
        let p = GjrParams {
            omega: 1e-6,
            alpha: 0.0,
            gamma: 0.2,
            beta: 0.8,
        };
        let r = gjr_simulate(&p, 2000, 1).unwrap();
        assert!(gjr_variances(&p, &r).unwrap().iter().all(|v| *v > 0.0));
    }

    #[test]
    fn rolling_alignment() {
        let p = GjrParams {
            omega: 1e-5,
            alpha: 0.05,
            gamma: 0.05,
            beta: 0.8,
        };
        let r = gjr_simulate(&p, 130, 2).unwrap();
        let v = gjr_rolling(&r, 100, Execution::Sequential).unwrap();
        assert_eq!(v.len(), 130);
        assert!(v[..100].iter().all(Option::is_none));
        assert!(v[100..].iter().all(Option::is_some));
        let fit = gjr_fit(&r[..100]).unwrap();
        let want = gjr_forecast(&fit.params, &r[..100]).unwrap().sqrt();
        assert!((v[100].unwrap() - want).abs() < 1e-15);
    }
}
