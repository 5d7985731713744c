//! Rolling-window fits through a session, each warm-started from the
//! previous window, producing a restricted marked volatility series.

use crate::events::EventStream;
use crate::model::{Constraint, MarkedHawkesParams};
use crate::moments::{count_variance, price_volatility, MarkDependence, VolMode};

use super::{fit_mle, mark_summaries, FitOptions, FitResult};

#[derive(Debug, Clone, PartialEq)]
pub struct IntradayOptions {
    pub window: f64,
    pub step: f64,
    pub constraint: Constraint,
    /// Horizon the variance is scaled to, in seconds.
    pub vol_horizon: f64,
    pub tick_size: f64,
    pub dependence: MarkDependence,
    pub min_events_per_side: usize,
}

impl Default for IntradayOptions {
    fn default() -> Self {
        IntradayOptions {
            window: 1800.0,
            step: 10.0,
            constraint: Constraint::Symmetric,
            vol_horizon: 23_400.0,
            tick_size: 0.01,
            dependence: MarkDependence::Dependent,
            min_events_per_side: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntradayPoint {
    pub window_end: f64,
    /// `None` marks a gap (failed fit or variance).
    pub vol: Option<f64>,
    pub fit: Option<FitResult>,
    pub error: Option<String>,
}

pub type IntradayVolSeries = Vec<IntradayPoint>;

fn window_vol(fit: &FitResult, sub: &EventStream, opts: &IntradayOptions) -> crate::Result<f64> {
    let marks = mark_summaries(&fit.params, sub, opts.dependence)?;
    let mode = match opts.dependence {
        MarkDependence::Dependent => VolMode::Restricted,
        MarkDependence::Independent => VolMode::Independent,
    };
    let var = count_variance(&fit.params, &marks, opts.vol_horizon, mode)?;
    price_volatility(var, opts.tick_size)
}

/// Window ends run `window, window + step, …` up to the session horizon.
pub fn intraday_rolling(stream: &EventStream, opts: &IntradayOptions) -> IntradayVolSeries {
    let mut out = Vec::new();
    let mut warm: Option<MarkedHawkesParams> = None;
    let mut k = 0usize;
    loop {
        let end = opts.window + k as f64 * opts.step;
        if end > stream.horizon + 1e-9 || !(opts.step > 0.0) {
            break;
        }
        k += 1;
        let sub = stream.window(end - opts.window, end);
        let fit_opts = FitOptions {
            constraint: opts.constraint,
            min_events_per_side: opts.min_events_per_side,
            init: warm,
            std_errors: false,
            ..Default::default()
        };
        let point = match fit_mle(&sub, &fit_opts) {
            Ok(fit) if fit.converged => {
                warm = Some(fit.params);
                match window_vol(&fit, &sub, opts) {
                    Ok(v) => IntradayPoint {
                        window_end: end,
                        vol: Some(v),
                        fit: Some(fit),
                        error: None,
                    },
                    Err(e) => IntradayPoint {
                        window_end: end,
                        vol: None,
                        fit: Some(fit),
                        error: Some(e.to_string()),
                    },
                }
            }
            Ok(fit) => IntradayPoint {
                window_end: end,
                vol: None,
                error: Some(format!("not converged: {}", fit.diagnostics)),
                fit: Some(fit),
            },
            Err(e) => IntradayPoint {
                window_end: end,
                vol: None,
                fit: None,
                error: Some(e.to_string()),
            },
        };
        out.push(point);
    }
    out
}
