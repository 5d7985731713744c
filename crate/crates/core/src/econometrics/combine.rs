//! `σₙ = θ₁gₙ + θ₂hₙ` fitted by maximising `Σ −log σₙ − Rₙ²/(2σₙ²)`.
//! θ is unconstrained in sign; points with some `σₙ ≤ 0` are infeasible.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::optim::{minimize, BfgsOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombinedWeights {
    pub theta1: f64,
    pub theta2: f64,
    pub std_errors: Option<[f64; 2]>,
    pub loglik: f64,
    /// `h` carries no information beyond `g` (zero or proportional); θ₂ is
    /// then fixed at 0.
    pub collinear: bool,
    pub converged: bool,
}

pub fn combined_loglik(theta: [f64; 2], g: &[f64], h: &[f64], r: &[f64]) -> Option<f64> {
    let mut ll = 0.0;
    for ((gn, hn), rn) in g.iter().zip(h).zip(r) {
        let s = theta[0] * gn + theta[1] * hn;
        if !(s > 0.0) {
            return None;
        }
        ll -= s.ln() + rn * rn / (2.0 * s * s);
    }
    Some(ll)
}

fn grad_hess(theta: [f64; 2], g: &[f64], h: &[f64], r: &[f64]) -> ([f64; 2], [[f64; 2]; 2]) {
    let mut d = [0.0; 2];
    let mut hh = [[0.0; 2]; 2];
    for ((gn, hn), rn) in g.iter().zip(h).zip(r) {
        let x = [*gn, *hn];
        let s = theta[0] * gn + theta[1] * hn;
        let d1 = -1.0 / s + rn * rn / (s * s * s);
        let d2 = 1.0 / (s * s) - 3.0 * rn * rn / (s * s * s * s);
        for k in 0..2 {
            d[k] += d1 * x[k];
            for l in 0..2 {
                hh[k][l] += d2 * x[k] * x[l];
            }
        }
    }
    (d, hh)
}

/// `|corr(g, h)| ≈ 1` through the origin, or `h ≡ 0`.
fn is_collinear(g: &[f64], h: &[f64]) -> bool {
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let hh: f64 = h.iter().map(|v| v * v).sum();
    let gh: f64 = g.iter().zip(h).map(|(a, b)| a * b).sum();
    hh == 0.0 || gh * gh >= gg * hh * (1.0 - 1e-12)
}

pub fn combined_weights(g: &[f64], h: &[f64], r: &[f64]) -> Result<CombinedWeights> {
    if g.len() != h.len() || g.len() != r.len() {
        return Err(Error::Data("combined weights: series lengths differ".into()));
    }
    if g.len() < 3 {
        return Err(Error::InsufficientData("combined weights: need at least 3 days".into()));
    }
    let n = g.len() as f64;
    if is_collinear(g, h) {
        // σ = θg has the closed form θ² = mean(R²/g²)
        let t1 = (g.iter().zip(r).map(|(gn, rn)| rn * rn / (gn * gn)).sum::<f64>() / n).sqrt();
        let (_, hh) = grad_hess([t1, 0.0], g, h, r);
        return Ok(CombinedWeights {
            theta1: t1,
            theta2: 0.0,
            std_errors: (hh[0][0] < 0.0).then(|| [(-1.0 / hh[0][0]).sqrt(), f64::NAN]),
            loglik: combined_loglik([t1, 0.0], g, h, r).unwrap_or(f64::NAN),
            collinear: true,
            converged: true,
        });
    }
    let objective = |x: &[f64]| {
        let th = [x[0], x[1]];
        let v = combined_loglik(th, g, h, r)?;
        let (d, _) = grad_hess(th, g, h, r);
        Some((-v / n, vec![-d[0] / n, -d[1] / n]))
    };
    let scale = |x: &[f64]| (r.iter().zip(x).map(|(rn, xn)| rn * rn / (xn * xn)).sum::<f64>() / n).sqrt();
    let x0 = [0.5 * scale(g), 0.5 * scale(h)];
    let res = minimize(objective, &x0, &BfgsOptions::default());
    let theta = [res.x[0], res.x[1]];
    let (_, hh) = grad_hess(theta, g, h, r);
    let info = -Matrix2::new(hh[0][0], hh[0][1], hh[1][0], hh[1][1]);
    let std_errors = info
        .cholesky()
        .map(|c| c.inverse())
        .map(|cov| [cov[(0, 0)].sqrt(), cov[(1, 1)].sqrt()]);
    Ok(CombinedWeights {
        theta1: theta[0],
        theta2: theta[1],
        std_errors,
        loglik: -res.f * n,
        collinear: false,
        converged: res.converged(),
    })
}
