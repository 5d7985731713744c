//! BFGS minimiser with Armijo backtracking, shared by the Hawkes, GJR and
//! combined-weight fits.
//!
//! The objective returns `None` where it is undefined (unstable parameters,
//! non-positive intensity, …); the line search treats that as +∞ and
//! shrinks the step.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    /// Stop when `‖∇f‖∞` falls below this.
    pub gtol: f64,
    /// Stop when the accepted step's `‖Δx‖∞` falls below this.
    pub xtol: f64,
    pub max_iter: usize,
    /// Largest `‖Δx‖∞` tried by the line search.
    pub max_step: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            gtol: 1e-6,
            xtol: 1e-8,
            max_iter: 500,
            max_step: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Gradient,
    Step,
    MaxIter,
    LineSearch,
    BadStart,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

impl BfgsResult {
    pub fn converged(&self) -> bool {
        matches!(self.termination, Termination::Gradient | Termination::Step)
    }

    pub fn grad_norm(&self) -> f64 {
        inf_norm(&self.grad)
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
{
    let n = x0.len();
    let mut evaluations = 1;
    let mut x = x0.to_vec();
    let Some((mut fx, mut g)) = f(&x).filter(|(v, g)| v.is_finite() && g.iter().all(|d| d.is_finite())) else {
        return BfgsResult {
            x,
            f: f64::INFINITY,
            grad: vec![f64::NAN; n],
            iterations: 0,
            evaluations,
            termination: Termination::BadStart,
        };
    };
    // inverse Hessian approximation, row-major
    let mut h = identity(n);
    let mut fresh = true;
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if inf_norm(&g) < opts.gtol {
            termination = Termination::Gradient;
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        if dot(&d, &g) >= 0.0 {
            h = identity(n);
            fresh = true;
            d = g.iter().map(|v| -v).collect();
        }
        let longest = inf_norm(&d);
        let mut step = if longest > opts.max_step {
            opts.max_step / longest
        } else {
            1.0
        };
        let slope = dot(&d, &g);
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            evaluations += 1;
            if let Some((ft, gt)) = f(&trial) {
                if ft.is_finite() && gt.iter().all(|v| v.is_finite()) && ft <= fx + 1e-4 * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if fresh {
                termination = Termination::LineSearch;
                break;
            }
            // retry once along steepest descent
            h = identity(n);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        x = xn;
        fx = fnew;
        g = gn;
        if inf_norm(&s) < opts.xtol {
            termination = if inf_norm(&g) < opts.gtol {
                Termination::Gradient
            } else {
                Termination::Step
            };
            break;
        }
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if fresh {
                // scale the initial approximation to the observed curvature
                let scale = sy / dot(&y, &y);
                h.iter_mut().for_each(|v| *v *= scale);
            }
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
    }
    BfgsResult {
        x,
        f: fx,
        grad: g,
        iterations,
        evaluations,
        termination,
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut h = vec![0.0; n * n];
    for i in 0..n {
        h[i * n + i] = 1.0;
    }
    h
}

/// `H ← (I − ρsyᵀ) H (I − ρysᵀ) + ρssᵀ`, `ρ = 1/(sᵀy)`.
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

/// Central-difference gradient with steps `h·max(1, |xᵢ|)`.
pub fn numeric_gradient<F>(mut f: F, x: &[f64], h: f64) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(1.0);
            xp[i] = x[i] + step;
            let up = f(&xp)?;
            xp[i] = x[i] - step;
            let down = f(&xp)?;
            xp[i] = x[i];
            Some((up - down) / (2.0 * step))
        })
        .collect()
}

/// Central-difference Hessian with steps `h·max(1, |xᵢ|)`, symmetrised;
/// row-major `n × n`.
pub fn numeric_hessian<F>(mut f: F, x: &[f64], h: f64) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    let n = x.len();
    let steps: Vec<f64> = x.iter().map(|v| h * v.abs().max(1.0)).collect();
    let f0 = f(x)?;
    let mut out = vec![0.0; n * n];
    let mut xp = x.to_vec();
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                xp[i] = x[i] + steps[i];
                let up = f(&xp)?;
                xp[i] = x[i] - steps[i];
                let down = f(&xp)?;
                xp[i] = x[i];
                (up - 2.0 * f0 + down) / (steps[i] * steps[i])
            } else {
                let mut corner = |si: f64, sj: f64| {
                    xp[i] = x[i] + si * steps[i];
                    xp[j] = x[j] + sj * steps[j];
                    let v = f(&xp);
                    xp[i] = x[i];
                    xp[j] = x[j];
                    v
                };
                let pp = corner(1.0, 1.0)?;
                let pm = corner(1.0, -1.0)?;
                let mp = corner(-1.0, 1.0)?;
                let mm = corner(-1.0, -1.0)?;
                (pp - pm - mp + mm) / (4.0 * steps[i] * steps[j])
            };
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    Some(out)
}
