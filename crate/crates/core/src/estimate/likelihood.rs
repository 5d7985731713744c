//! Point-process log-likelihood `Σ log λ_side(τ⁻) − Σᵢ ∫₀ᵀ λᵢ` and its
//! gradient in one left-to-right pass.
//!
//! For row `i` and source type `j` the recursion keeps
//! `R = Σ e^{−βᵢ(t−τ)}` and `Q = Σ (z−1) e^{−βᵢ(t−τ)}` over past type-`j`
//! events, plus `S`, `P` with the extra factor `(t − τ)` for the β
//! derivative. The window opens in the stationary state: the excess
//! intensity at time zero is `E[λ] − μ` with plain per-type mark means.

use crate::error::{Error, Result};
use crate::events::{Event, EventStream};
use crate::mat2::{Mat2, Vec2};
use crate::model::{MarkSummaries, MarkedHawkesParams};
use crate::moments::expected_intensity_marked;

/// Index of `μᵢ`, `αᵢⱼ`, `βᵢ`, `ηᵢⱼ` in the 12-vector layout of
/// [`MarkedHawkesParams::to_array`].
pub const fn mu_ix(i: usize) -> usize {
    i
}
pub const fn alpha_ix(i: usize, j: usize) -> usize {
    2 + 2 * i + j
}
pub const fn beta_ix(i: usize) -> usize {
    6 + i
}
pub const fn eta_ix(i: usize, j: usize) -> usize {
    8 + 2 * i + j
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodEval {
    pub value: f64,
    /// Derivatives in the [`MarkedHawkesParams::to_array`] order.
    pub gradient: [f64; 12],
}

/// Per-type sample mean of the marks (1 for a type with no events).
pub fn plain_mark_means(events: &[Event]) -> Vec2 {
    let mut sum = [0.0; 2];
    let mut n = [0.0; 2];
    for e in events {
        sum[e.side.index()] += e.mark as f64;
        n[e.side.index()] += 1.0;
    }
    Vec2([0, 1].map(|k| if n[k] > 0.0 { sum[k] / n[k] } else { 1.0 }))
}

/// Stationary intensity used at the window start.
pub fn initial_intensity(params: &MarkedHawkesParams, events: &[Event]) -> Result<Vec2> {
    let m = plain_mark_means(events);
    expected_intensity_marked(params, &MarkSummaries::independent(m, m))
}

pub fn log_likelihood(params: &MarkedHawkesParams, stream: &EventStream) -> Result<f64> {
    Ok(evaluate(params, &stream.events, stream.horizon)?.value)
}

pub fn log_likelihood_grad(params: &MarkedHawkesParams, stream: &EventStream) -> Result<LikelihoodEval> {
    evaluate(params, &stream.events, stream.horizon)
}

/// Left-limit intensities `λ(τ⁻)` at every event.
pub fn fitted_intensities(params: &MarkedHawkesParams, stream: &EventStream) -> Result<Vec<Vec2>> {
    let lam0 = initial_intensity(params, &stream.events)?;
    let mu = params.base.mu.0;
    let beta = params.base.beta.0;
    let mut x = [lam0.0[0] - mu[0], lam0.0[1] - mu[1]];
    let mut last = 0.0;
    let mut out = Vec::with_capacity(stream.events.len());
    for e in &stream.events {
        let dt = e.time - last;
        if dt < 0.0 {
            return Err(unsorted(e.time, last));
        }
        last = e.time;
        for i in 0..2 {
            x[i] *= (-beta[i] * dt).exp();
        }
        out.push(Vec2([mu[0] + x[0], mu[1] + x[1]]));
        let jump = params.jump(e.side.index(), e.mark as f64);
        x[0] += jump.0[0];
        x[1] += jump.0[1];
    }
    Ok(out)
}

fn unsorted(t: f64, prev: f64) -> Error {
    Error::Data(format!("unsorted events: {t} after {prev}"))
}

fn evaluate(params: &MarkedHawkesParams, events: &[Event], horizon: f64) -> Result<LikelihoodEval> {
    if let Some(last) = events.last() {
        if last.time > horizon {
            return Err(Error::Data(format!("event at {} beyond horizon {horizon}", last.time)));
        }
    }
    let zbar = plain_mark_means(events);
    let elam = expected_intensity_marked(params, &MarkSummaries::independent(zbar, zbar))?;
    let mu = params.base.mu.0;
    let beta = params.base.beta.0;
    let alpha = params.base.alpha.0;
    let eta = params.eta.0;
    let x0 = [elam.0[0] - mu[0], elam.0[1] - mu[1]];

    let mut r = [[0.0f64; 2]; 2];
    let mut q = [[0.0f64; 2]; 2];
    let mut s = [[0.0f64; 2]; 2];
    let mut pq = [[0.0f64; 2]; 2];
    let mut d0 = [1.0f64; 2];
    // integral accumulators: Σ(1−e), Σ(z−1)(1−e), Σ lag·e, Σ (z−1)·lag·e
    let mut i1 = [[0.0f64; 2]; 2];
    let mut i1z = [[0.0f64; 2]; 2];
    let mut dd = [[0.0f64; 2]; 2];
    let mut ddz = [[0.0f64; 2]; 2];

    let mut ll = 0.0;
    let mut g = [0.0f64; 12];
    let mut gx0 = [0.0f64; 2];
    let mut last = 0.0;
    for e in events {
        let dt = e.time - last;
        if dt < 0.0 {
            return Err(unsorted(e.time, last));
        }
        last = e.time;
        if dt > 0.0 {
            for i in 0..2 {
                let d = (-beta[i] * dt).exp();
                for j in 0..2 {
                    s[i][j] = d * (s[i][j] + dt * r[i][j]);
                    r[i][j] *= d;
                    pq[i][j] = d * (pq[i][j] + dt * q[i][j]);
                    q[i][j] *= d;
                }
                d0[i] *= d;
            }
        }
        let i = e.side.index();
        let lam = mu[i] + x0[i] * d0[i] + alpha[i][0] * r[i][0] + alpha[i][1] * r[i][1] + eta[i][0] * q[i][0] + eta[i][1] * q[i][1];
        if !(lam > 0.0) || !lam.is_finite() {
            return Err(Error::Numerical(format!("non-positive intensity {lam} at t={}", e.time)));
        }
        ll += lam.ln();
        let inv = 1.0 / lam;
        g[mu_ix(i)] += inv;
        let mut dbeta = e.time * x0[i] * d0[i];
        for j in 0..2 {
            g[alpha_ix(i, j)] += r[i][j] * inv;
            g[eta_ix(i, j)] += q[i][j] * inv;
            dbeta += alpha[i][j] * s[i][j] + eta[i][j] * pq[i][j];
        }
        g[beta_ix(i)] -= dbeta * inv;
        gx0[i] += d0[i] * inv;

        let j = i;
        let zm1 = e.mark as f64 - 1.0;
        let lag = horizon - e.time;
        for row in 0..2 {
            r[row][j] += 1.0;
            q[row][j] += zm1;
            let decay = (-beta[row] * lag).exp();
            let one_minus = -(-beta[row] * lag).exp_m1();
            i1[row][j] += one_minus;
            i1z[row][j] += zm1 * one_minus;
            dd[row][j] += lag * decay;
            ddz[row][j] += zm1 * lag * decay;
        }
    }

    for i in 0..2 {
        let b = beta[i];
        let t = horizon;
        let tail = -(-b * t).exp_m1();
        let mut comp = mu[i] * t + x0[i] * tail / b;
        g[mu_ix(i)] -= t;
        let mut dbeta = x0[i] * (t * (-b * t).exp() / b - tail / (b * b));
        gx0[i] -= tail / b;
        for j in 0..2 {
            comp += (alpha[i][j] * i1[i][j] + eta[i][j] * i1z[i][j]) / b;
            g[alpha_ix(i, j)] -= i1[i][j] / b;
            g[eta_ix(i, j)] -= i1z[i][j] / b;
            dbeta += alpha[i][j] * (dd[i][j] / b - i1[i][j] / (b * b)) + eta[i][j] * (ddz[i][j] / b - i1z[i][j] / (b * b));
        }
        g[beta_ix(i)] -= dbeta;
        ll -= comp;
    }

    // chain the start state x₀ = E[λ] − μ through M E[λ] = βμ,
    // M = diag(β) − α − η∘(Z̄ − 1)
    let m = Mat2::diag(params.base.beta) - params.base.alpha - params.eta.hadamard(&Mat2::new(
        zbar.0[0] - 1.0,
        zbar.0[1] - 1.0,
        zbar.0[0] - 1.0,
        zbar.0[1] - 1.0,
    ));
    let w = m.transpose().solve(&Vec2(gx0))?.0;
    let ev = elam.0;
    for i in 0..2 {
        g[mu_ix(i)] += w[i] * beta[i] - gx0[i];
        g[beta_ix(i)] += w[i] * (mu[i] - ev[i]);
        for k in 0..2 {
            g[alpha_ix(i, k)] += w[i] * ev[k];
            g[eta_ix(i, k)] += w[i] * ev[k] * (zbar.0[k] - 1.0);
        }
    }
    if !ll.is_finite() {
        return Err(Error::Numerical("non-finite log-likelihood".into()));
    }
    Ok(LikelihoodEval { value: ll, gradient: g })
}
