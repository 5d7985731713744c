//! Maximum-likelihood fitting, standard errors, residual diagnostics,
//! empirical mark summaries and rolling intraday estimation.

mod intraday;
mod likelihood;
mod marks;
mod residuals;

use std::io::{Read, Write};

use nalgebra::DMatrix;

pub use intraday::{intraday_rolling, IntradayOptions, IntradayPoint, IntradayVolSeries};
pub use likelihood::{
    alpha_ix, beta_ix, eta_ix, fitted_intensities, initial_intensity, log_likelihood, log_likelihood_grad, mu_ix,
    plain_mark_means, LikelihoodEval,
};
pub use marks::mark_summaries;
pub use residuals::{ks_exponential, qq_exponential, residual_report, time_rescaled, ResidualReport, QQ_LEVELS};

use crate::error::{Error, Result};
use crate::events::{EventStream, Side};
use crate::model::{Constraint, MarkedHawkesParams, PARAM_NAMES};
use crate::optim::{minimize, BfgsOptions};

/// Total event rate the initialisation grid is expressed in; starts are
/// rescaled in time to the observed rate.
const REFERENCE_RATE: f64 = 0.6;
const START_BETA: [f64; 5] = [0.35, 0.5, 0.65, 0.8, 0.93];
const START_SELF: [f64; 5] = [0.05, 0.1, 0.15, 0.2, 0.22];
const START_CROSS: [f64; 5] = [0.02, 0.05, 0.08, 0.1, 0.15];
const START_ETA: [f64; 5] = [0.0005, 0.005, 0.02, 0.04, 0.072];

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub constraint: Constraint,
    pub min_events_per_side: usize,
    /// Extra start tried before the grid (warm start).
    pub init: Option<MarkedHawkesParams>,
    /// With a warm start, skip the grid unless the warm start fails.
    pub grid_on_failure_only: bool,
    pub bfgs: BfgsOptions,
    /// Compute standard errors.
    pub std_errors: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            constraint: Constraint::General,
            min_events_per_side: 50,
            init: None,
            grid_on_failure_only: true,
            bfgs: BfgsOptions::default(),
            std_errors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: MarkedHawkesParams,
    /// `None` when the observed information is not positive definite.
    /// Parameters held fixed (η for unmarked data) carry NaN.
    pub std_errors: Option<[f64; 12]>,
    pub loglik: f64,
    pub converged: bool,
    pub n_events: usize,
    pub constraint: Constraint,
    pub iterations: usize,
    /// `‖∇‖∞` of the per-event objective in log-parameter space.
    pub grad_norm: f64,
    pub diagnostics: String,
}

/// Which of the 12 parameters move together under a constraint.
fn free_groups(constraint: Constraint, marked: bool) -> Vec<Vec<usize>> {
    let mut g: Vec<Vec<usize>> = match constraint {
        Constraint::General => (0..12).map(|k| vec![k]).collect(),
        Constraint::Symmetric => vec![
            vec![mu_ix(0)],
            vec![mu_ix(1)],
            vec![alpha_ix(0, 0), alpha_ix(1, 1)],
            vec![alpha_ix(0, 1), alpha_ix(1, 0)],
            vec![beta_ix(0)],
            vec![beta_ix(1)],
            vec![eta_ix(0, 0), eta_ix(1, 1)],
            vec![eta_ix(0, 1), eta_ix(1, 0)],
        ],
    };
    if !marked {
        g.retain(|grp| grp[0] < eta_ix(0, 0));
    }
    g
}

struct Problem<'a> {
    stream: &'a EventStream,
    groups: Vec<Vec<usize>>,
    scale: f64,
}

impl Problem<'_> {
    fn expand(&self, free: &[f64]) -> MarkedHawkesParams {
        let mut a = [0.0; 12];
        for (grp, v) in self.groups.iter().zip(free) {
            for &k in grp {
                a[k] = *v;
            }
        }
        MarkedHawkesParams::from_array(&a)
    }

    fn contract(&self, p: &MarkedHawkesParams) -> Vec<f64> {
        let a = p.to_array();
        self.groups
            .iter()
            .map(|grp| grp.iter().map(|&k| a[k]).sum::<f64>() / grp.len() as f64)
            .collect()
    }

    /// Log-likelihood and its gradient in the free parameters.
    fn eval(&self, free: &[f64]) -> Option<(f64, Vec<f64>)> {
        let r = log_likelihood_grad(&self.expand(free), self.stream).ok()?;
        let g = self.groups.iter().map(|grp| grp.iter().map(|&k| r.gradient[k]).sum()).collect();
        Some((r.value, g))
    }

    /// Negative per-event log-likelihood in log-parameters.
    fn objective(&self, phi: &[f64]) -> Option<(f64, Vec<f64>)> {
        let p: Vec<f64> = phi.iter().map(|v| v.exp()).collect();
        let (v, g) = self.eval(&p)?;
        Some((-v / self.scale, g.iter().zip(&p).map(|(gk, pk)| -gk * pk / self.scale).collect()))
    }
}

fn grid_start(stream: &EventStream, k: usize, constraint: Constraint) -> MarkedHawkesParams {
    let t = stream.horizon;
    let rate = [stream.count(Side::Up) as f64 / t, stream.count(Side::Down) as f64 / t];
    let s = ((rate[0] + rate[1]) / REFERENCE_RATE).max(1e-6);
    let b = START_BETA[k] * s;
    let (a_self, a_cross, e) = (START_SELF[k] * s, START_CROSS[k] * s, START_ETA[k] * s);
    let rho = (START_SELF[k] + START_CROSS[k]) / START_BETA[k];
    let mu = |i: usize| (rate[i] * (1.0 - rho)).max(1e-3 * s);
    let mut a = [
        mu(0),
        mu(1),
        a_self,
        a_cross,
        a_cross,
        a_self,
        b,
        b,
        e,
        0.5 * e,
        0.5 * e,
        e,
    ];
    if constraint == Constraint::Symmetric {
        let m = 0.5 * (a[0] + a[1]);
        a[0] = m.max(1e-3 * s);
        a[1] = a[0];
    }
    MarkedHawkesParams::from_array(&a)
}

/// Fits by maximum likelihood from the warm start (if any) and a fixed
/// grid of five starts, keeping the best converged run.
pub fn fit_mle(stream: &EventStream, opts: &FitOptions) -> Result<FitResult> {
    for side in [Side::Up, Side::Down] {
        let n = stream.count(side);
        if n < opts.min_events_per_side {
            return Err(Error::InsufficientData(format!(
                "{n} {side:?} events, need {}",
                opts.min_events_per_side
            )));
        }
    }
    let marked = stream.events.iter().any(|e| e.mark > 1);
    let problem = Problem {
        stream,
        groups: free_groups(opts.constraint, marked),
        scale: stream.len().max(1) as f64,
    };

    let mut starts: Vec<MarkedHawkesParams> = Vec::new();
    if let Some(init) = opts.init {
        starts.push(init);
    }
    let grid: Vec<MarkedHawkesParams> = (0..START_BETA.len()).map(|k| grid_start(stream, k, opts.constraint)).collect();

    let mut best: Option<(crate::optim::BfgsResult, usize)> = None;
    let mut notes = Vec::new();
    let mut tried = 0;
    let mut run = |start: &MarkedHawkesParams, best: &mut Option<(crate::optim::BfgsResult, usize)>| {
        tried += 1;
        let phi0: Vec<f64> = problem
            .contract(start)
            .iter()
            .map(|v| v.max(1e-8).ln())
            .collect();
        let r = minimize(|phi| problem.objective(phi), &phi0, &opts.bfgs);
        notes.push(format!("start{}:{:?}", tried, r.termination));
        let better = match best {
            None => true,
            Some((b, _)) => (r.converged() && !b.converged()) || (r.converged() == b.converged() && r.f < b.f),
        };
        if r.f.is_finite() && better {
            *best = Some((r, tried));
        }
    };
    for s in &starts {
        run(s, &mut best);
    }
    let warm_ok = best.as_ref().is_some_and(|(b, _)| b.converged());
    if !(warm_ok && opts.grid_on_failure_only) {
        for s in &grid {
            run(s, &mut best);
        }
    }
    let diagnostics = notes.join(";");
    let Some((r, _)) = best else {
        return Ok(FitResult {
            params: grid[0],
            std_errors: None,
            loglik: f64::NAN,
            converged: false,
            n_events: stream.len(),
            constraint: opts.constraint,
            iterations: 0,
            grad_norm: f64::NAN,
            diagnostics,
        });
    };
    let free: Vec<f64> = r.x.iter().map(|v| v.exp()).collect();
    let params = problem.expand(&free);
    let loglik = -r.f * problem.scale;
    let std_errors = if opts.std_errors {
        standard_errors(&problem, &free)
    } else {
        None
    };
    Ok(FitResult {
        params,
        std_errors,
        loglik,
        converged: r.converged(),
        n_events: stream.len(),
        constraint: opts.constraint,
        iterations: r.iterations,
        grad_norm: r.grad_norm(),
        diagnostics,
    })
}

/// `√diag((−H)⁻¹)` with `H` the central-difference Jacobian of the
/// analytic gradient at the estimate (free parameters, original scale).
fn standard_errors(problem: &Problem, free: &[f64]) -> Option<[f64; 12]> {
    let k = free.len();
    let mut h = DMatrix::<f64>::zeros(k, k);
    let mut x = free.to_vec();
    for c in 0..k {
        let step = 1e-4 * free[c];
        x[c] = free[c] + step;
        let (_, up) = problem.eval(&x)?;
        x[c] = free[c] - step;
        let (_, down) = problem.eval(&x)?;
        x[c] = free[c];
        for r in 0..k {
            h[(r, c)] = (up[r] - down[r]) / (2.0 * step);
        }
    }
    let info = -(&h + h.transpose()) * 0.5;
    let cov = info.cholesky()?.inverse();
    let mut out = [f64::NAN; 12];
    for (g, grp) in problem.groups.iter().enumerate() {
        let v = cov[(g, g)];
        if !(v > 0.0) {
            return None;
        }
        for &idx in grp {
            out[idx] = v.sqrt();
        }
    }
    Some(out)
}

const EXTRA_COLUMNS: [&str; 4] = ["llh", "n_events", "converged", "constraint"];

/// Writes each `(date, fit)` pair as two rows: the estimate row,
/// then an `se` row with the standard errors.
pub fn write_fit_csv<W: Write>(fits: &[(String, FitResult)], mut w: W) -> Result<()> {
    let header: Vec<&str> = std::iter::once("date")
        .chain(PARAM_NAMES)
        .chain(EXTRA_COLUMNS)
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (date, fit) in fits {
        let vals: Vec<String> = fit.params.to_array().iter().map(|v| v.to_string()).collect();
        writeln!(
            w,
            "{date},{},{},{},{},{}",
            vals.join(","),
            fit.loglik,
            fit.n_events,
            fit.converged,
            fit.constraint.as_str()
        )?;
        let se: Vec<String> = match fit.std_errors {
            Some(se) => se.iter().map(|v| v.to_string()).collect(),
            None => vec!["NA".to_string(); 12],
        };
        writeln!(w, "se,{},,,,", se.join(","))?;
    }
    Ok(())
}

pub fn read_fit_csv<R: Read>(r: R) -> Result<Vec<(String, FitResult)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.len() < 14 || &headers[0] != "date" || &headers[13] != "llh" {
        return Err(Error::Data(format!("unexpected fit header {headers:?}")));
    }
    let num = |s: &str, what: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::Data(format!("bad {what} value '{s}'")))
    };
    let mut out: Vec<(String, FitResult)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let mut a = [0.0; 12];
        if &rec[0] == "se" {
            let Some((_, fit)) = out.last_mut() else {
                return Err(Error::Data("se row without estimate row".into()));
            };
            if &rec[1] == "NA" {
                fit.std_errors = None;
            } else {
                for k in 0..12 {
                    a[k] = num(&rec[k + 1], PARAM_NAMES[k])?;
                }
                fit.std_errors = Some(a);
            }
            continue;
        }
        for k in 0..12 {
            a[k] = num(&rec[k + 1], PARAM_NAMES[k])?;
        }
        let get = |i: usize| rec.get(i).unwrap_or("");
        let n_events = get(14).parse().unwrap_or(0);
        let converged = get(15) != "false";
        let constraint = match get(16) {
            "" => Constraint::General,
            s => s.parse()?,
        };
        out.push((
            rec[0].to_string(),
            FitResult {
                params: MarkedHawkesParams::from_array(&a),
                std_errors: None,
                loglik: num(&rec[13], "llh")?,
                converged,
                n_events,
                constraint,
                iterations: 0,
                grad_norm: f64::NAN,
                diagnostics: String::new(),
            },
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{Mat2, Vec2};
    use crate::model::HawkesParams;
    use crate::simulate::{simulate, MarkModel};

    fn truth() -> MarkedHawkesParams {
        HawkesParams::new(Vec2([0.2, 0.25]), Mat2::new(0.3, 0.1, 0.15, 0.25), Vec2([0.9, 0.8]))
            .marked(Mat2::new(0.04, 0.01, 0.02, 0.03))
    }

    #[test]
    fn recovers_simulated_params() {
        let s = simulate(&truth(), &MarkModel::Geometric { mean: 1.5 }, 40_000.0, 21)
            .unwrap()
            .into_event_stream(0.01);
        let fit = fit_mle(&s, &FitOptions::default()).unwrap();
        assert!(fit.converged, "{}", fit.diagnostics);
        let se = fit.std_errors.expect("positive definite information");
        let est = fit.params.to_array();
        for (k, t) in truth().to_array().iter().enumerate() {
            assert!((est[k] - t).abs() < 4.0 * se[k], "{}: {} vs {t} (se {})", PARAM_NAMES[k], est[k], se[k]);
        }
        // the optimum beats the truth
        assert!(fit.loglik >= log_likelihood(&truth(), &s).unwrap());
    }

    #[test]
    fn symmetric_fit_is_exactly_symmetric() {
        let mut p = truth();
        p.base.alpha = Mat2::new(0.25, 0.1, 0.1, 0.25);
        p.eta = Mat2::new(0.03, 0.01, 0.01, 0.03);
        let s = simulate(&p, &MarkModel::Geometric { mean: 1.5 }, 10_000.0, 4)
            .unwrap()
            .into_event_stream(0.01);
        let opts = FitOptions {
            constraint: Constraint::Symmetric,
            ..Default::default()
        };
        let fit = fit_mle(&s, &opts).unwrap();
        let a = fit.params.base.alpha;
        let e = fit.params.eta;
        assert_eq!(a.get(0, 0), a.get(1, 1));
        assert_eq!(a.get(0, 1), a.get(1, 0));
        assert_eq!(e.get(0, 0), e.get(1, 1));
        assert_eq!(e.get(0, 1), e.get(1, 0));
        let se = fit.std_errors.unwrap();
        assert_eq!(se[alpha_ix(0, 1)], se[alpha_ix(1, 0)]);
    }

    #[test]
    fn poisson_truth_gives_insignificant_excitation() {
        let p = MarkedHawkesParams::unmarked(HawkesParams::poisson(Vec2([0.2, 0.3])));
        let s = simulate(&p, &MarkModel::Constant, 20_000.0, 5).unwrap().into_event_stream(0.01);
        let fit = fit_mle(&s, &FitOptions::default()).unwrap();
        let a = fit.params.base.alpha.0;
        // unmarked data: η is not estimated
        assert_eq!(fit.params.eta, Mat2::ZERO);
        if let Some(se) = fit.std_errors {
            for i in 0..2 {
                for j in 0..2 {
                    assert!(a[i][j] < 3.0 * se[alpha_ix(i, j)] + 1e-3, "alpha{i}{j} = {}", a[i][j]);
                }
            }
        } else {
            assert!(a.iter().flatten().all(|v| *v < 0.05));
        }
        assert!((fit.params.base.mu.0[0] - 0.2).abs() < 0.03);
    }

    #[test]
    fn too_few_events() {
        let p = MarkedHawkesParams::unmarked(HawkesParams::poisson(Vec2([0.2, 0.3])));
        let s = simulate(&p, &MarkModel::Constant, 100.0, 5).unwrap().into_event_stream(0.01);
        assert!(matches!(fit_mle(&s, &FitOptions::default()), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn fit_csv_roundtrip() {
        let fit = FitResult {
            params: truth(),
            std_errors: Some([0.01; 12]),
            loglik: -1234.5,
            converged: true,
            n_events: 999,
            constraint: Constraint::Symmetric,
            iterations: 3,
            grad_norm: 0.0,
            diagnostics: String::new(),
        };
        let mut buf = Vec::new();
        write_fit_csv(&[("2019-10-01".into(), fit.clone())], &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("date,mu1,mu2,a11,a12,a21,a22,b1,b2,e11,e12,e21,e22,llh,"));
        let back = read_fit_csv(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].0, "2019-10-01");
        assert_eq!(back[0].1.params, fit.params);
        assert_eq!(back[0].1.std_errors, fit.std_errors);
        assert_eq!(back[0].1.loglik, fit.loglik);
        assert_eq!(back[0].1.constraint, Constraint::Symmetric);
    }
}
