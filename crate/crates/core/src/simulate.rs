//! Ogata thinning for the marked bivariate Hawkes process.
//!
//! The intensity above baseline, `x = λ − μ`, decays at rate `βᵢ` per row,
//! so between events the total intensity only falls and its current value
//! is a valid thinning bound until the next accepted event. Each path runs
//! `burn_in` seconds before time zero; those events are discarded.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Geometric};

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Side};
use crate::mat2::Vec2;
use crate::model::{stability, MarkSummaries, MarkedHawkesParams};
use crate::moments::expected_intensity_marked;
use crate::par::Execution;

/// Bounds on the conditional mean of intensity-linked marks.
pub const LINKED_MEAN_RANGE: (f64, f64) = (1.0, 50.0);

/// Default cap on the expected (and realised) number of simulated events.
pub const DEFAULT_MAX_EVENTS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq)]
pub enum MarkModel {
    /// Every mark is one tick.
    Constant,
    /// `1 + Geometric(1/mean)` on {1, 2, …}.
    Geometric { mean: f64 },
    /// Draws `support[k]` with probability `probs[k]`.
    Empirical { support: Vec<u32>, probs: Vec<f64> },
    /// Geometric with mean `intercept + slope · (λ₁ + λ₂)` clipped to
    /// [`LINKED_MEAN_RANGE`], evaluated just before the event.
    IntensityLinked { intercept: f64, slope: f64 },
}

impl MarkModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            MarkModel::Constant => Ok(()),
            MarkModel::Geometric { mean } => {
                if mean.is_finite() && *mean >= 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParams(format!("geometric mark mean {mean} < 1")))
                }
            }
            MarkModel::Empirical { support, probs } => {
                if support.is_empty() || support.len() != probs.len() {
                    return Err(Error::InvalidParams("empirical marks: support/probs mismatch".into()));
                }
                if support.contains(&0) {
                    return Err(Error::InvalidParams("empirical marks: zero in support".into()));
                }
                if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParams("empirical marks: probabilities must sum to 1".into()));
                }
                Ok(())
            }
            MarkModel::IntensityLinked { intercept, slope } => {
                if intercept.is_finite() && slope.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidParams("intensity-linked marks: non-finite coefficient".into()))
                }
            }
        }
    }

    /// Mark summaries implied by the model when marks are independent of the
    /// intensity. `None` for the intensity-linked model, whose summaries
    /// have to be estimated from data.
    pub fn summaries(&self) -> Option<MarkSummaries> {
        match self {
            MarkModel::Constant => Some(MarkSummaries::ones()),
            MarkModel::Geometric { mean } => Some(MarkSummaries::geometric(Vec2([*mean, *mean]))),
            MarkModel::Empirical { support, probs } => {
                let m1: f64 = support.iter().zip(probs).map(|(&z, p)| z as f64 * p).sum();
                let m2: f64 = support.iter().zip(probs).map(|(&z, p)| (z as f64).powi(2) * p).sum();
                Some(MarkSummaries::independent(Vec2([m1, m1]), Vec2([m2, m2])))
            }
            MarkModel::IntensityLinked { .. } => None,
        }
    }

    /// Summaries used for the stability check. For intensity-linked marks
    /// the mean mark is taken at the fixed point `m = clip(a + b·ΣE[λ](m))`.
    fn nominal_summaries(&self, params: &MarkedHawkesParams) -> Result<MarkSummaries> {
        if let Some(s) = self.summaries() {
            return Ok(s);
        }
        let MarkModel::IntensityLinked { intercept, slope } = *self else {
            unreachable!()
        };
        let mut m = clip_mean(intercept);
        for _ in 0..100 {
            let s = MarkSummaries::geometric(Vec2([m, m]));
            let e = expected_intensity_marked(params, &s)?;
            let next = clip_mean(intercept + slope * e.sum());
            if (next - m).abs() < 1e-12 {
                break;
            }
            m = next;
        }
        Ok(MarkSummaries::geometric(Vec2([m, m])))
    }
}

fn clip_mean(m: f64) -> f64 {
    m.clamp(LINKED_MEAN_RANGE.0, LINKED_MEAN_RANGE.1)
}

enum Sampler {
    Constant,
    Geometric(Geometric),
    Empirical(Vec<u32>, WeightedIndex<f64>),
    Linked(f64, f64),
}

impl Sampler {
    fn new(model: &MarkModel) -> Result<Self> {
        Ok(match model {
            MarkModel::Constant => Sampler::Constant,
            MarkModel::Geometric { mean } => Sampler::Geometric(geometric(*mean)?),
            MarkModel::Empirical { support, probs } => Sampler::Empirical(
                support.clone(),
                WeightedIndex::new(probs).map_err(|e| Error::InvalidParams(e.to_string()))?,
            ),
            MarkModel::IntensityLinked { intercept, slope } => Sampler::Linked(*intercept, *slope),
        })
    }

    fn draw<R: Rng>(&self, rng: &mut R, total_intensity: f64) -> u32 {
        match self {
            Sampler::Constant => 1,
            Sampler::Geometric(g) => 1 + g.sample(rng) as u32,
            Sampler::Empirical(support, w) => support[w.sample(rng)],
            Sampler::Linked(a, b) => {
                let g = geometric(clip_mean(a + b * total_intensity)).expect("clipped mean is valid");
                1 + g.sample(rng) as u32
            }
        }
    }
}

fn geometric(mean: f64) -> Result<Geometric> {
    Geometric::new(1.0 / mean).map_err(|e| Error::InvalidParams(e.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Seconds simulated and discarded before time zero; `None` uses
    /// [`default_burn_in`].
    pub burn_in: Option<f64>,
    pub max_events: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            burn_in: None,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimPath {
    pub events: Vec<Event>,
    /// `λ(horizon)`.
    pub final_intensity: Vec2,
    pub seed: u64,
    pub horizon: f64,
}

impl SimPath {
    pub fn into_event_stream(self, tick_size: f64) -> EventStream {
        EventStream {
            session_open_ns: 0,
            tick_size,
            horizon: self.horizon,
            events: self.events,
        }
    }

    pub fn net_ticks(&self) -> i64 {
        self.events.iter().map(|e| e.side.sign() * e.mark as i64).sum()
    }
}

/// `10 · max(1/βᵢ) / (1 − ρ)` seconds.
pub fn default_burn_in(params: &MarkedHawkesParams, marks: &MarkSummaries) -> f64 {
    let rho = stability(params, marks).spectral_radius;
    let slowest = params.base.beta.0.iter().map(|b| 1.0 / b).fold(0.0, f64::max);
    10.0 * slowest / (1.0 - rho)
}

/// Seed of path `index` under master seed `seed` (splitmix64 finaliser
/// applied to the pair).
pub fn path_seed(seed: u64, index: u64) -> u64 {
    splitmix(seed ^ splitmix(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Validated, ready-to-run simulation setup shared by every path.
struct Plan {
    params: MarkedHawkesParams,
    sampler: Sampler,
    start: Vec2,
    burn_in: f64,
    max_events: usize,
}

impl Plan {
    fn new(params: &MarkedHawkesParams, marks: &MarkModel, horizon: f64, opts: &SimOptions) -> Result<Plan> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParams(format!("horizon must be positive, got {horizon}")));
        }
        marks.validate()?;
        let summaries = marks.nominal_summaries(params)?;
        params.validate(&summaries)?;
        let elam = expected_intensity_marked(params, &summaries)?;
        let burn_in = opts.burn_in.unwrap_or_else(|| default_burn_in(params, &summaries));
        if !(burn_in >= 0.0 && burn_in.is_finite()) {
            return Err(Error::InvalidParams(format!("burn-in must be non-negative, got {burn_in}")));
        }
        let expected = elam.sum() * (horizon + burn_in);
        if expected > opts.max_events as f64 {
            return Err(Error::Runaway {
                expected,
                cap: opts.max_events,
            });
        }
        Ok(Plan {
            params: *params,
            sampler: Sampler::new(marks)?,
            start: elam - params.base.mu,
            burn_in,
            max_events: opts.max_events,
        })
    }

    /// Runs one path, reporting retained events to `on_event`; returns
    /// `λ(horizon)`.
    fn run<F: FnMut(f64, Side, u32)>(&self, horizon: f64, seed: u64, mut on_event: F) -> Result<Vec2> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = self.params.base.mu.0;
        let beta = self.params.base.beta.0;
        let mut x = self.start.0;
        let mut t = -self.burn_in;
        let mut accepted = 0usize;
        loop {
            let bound = mu[0] + mu[1] + x[0] + x[1];
            let w: f64 = Exp1.sample(&mut rng);
            let dt = w / bound;
            if t + dt >= horizon {
                let rest = horizon - t;
                x = [x[0] * (-beta[0] * rest).exp(), x[1] * (-beta[1] * rest).exp()];
                break;
            }
            t += dt;
            x = [x[0] * (-beta[0] * dt).exp(), x[1] * (-beta[1] * dt).exp()];
            let l0 = mu[0] + x[0];
            let l1 = mu[1] + x[1];
            let total = l0 + l1;
            debug_assert!(total <= bound * (1.0 + 1e-12), "thinning bound violated");
            let u = rng.random::<f64>() * bound;
            if u >= total {
                continue;
            }
            let side = if u < l0 { 0 } else { 1 };
            let mark = self.sampler.draw(&mut rng, total);
            let jump = self.params.jump(side, mark as f64);
            x = [x[0] + jump.0[0], x[1] + jump.0[1]];
            accepted += 1;
            if accepted > self.max_events {
                return Err(Error::Runaway {
                    expected: accepted as f64,
                    cap: self.max_events,
                });
            }
            if t > 0.0 {
                on_event(t, Side::from_index(side), mark);
            }
        }
        Ok(Vec2([mu[0] + x[0], mu[1] + x[1]]))
    }
}

pub fn simulate(params: &MarkedHawkesParams, marks: &MarkModel, horizon: f64, seed: u64) -> Result<SimPath> {
    simulate_with(params, marks, horizon, seed, &SimOptions::default())
}

pub fn simulate_with(
    params: &MarkedHawkesParams,
    marks: &MarkModel,
    horizon: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<SimPath> {
    let plan = Plan::new(params, marks, horizon, opts)?;
    let mut events = Vec::new();
    let final_intensity = plan.run(horizon, seed, |time, side, mark| events.push(Event { time, side, mark }))?;
    Ok(SimPath {
        events,
        final_intensity,
        seed,
        horizon,
    })
}

/// Tick-weighted `N₁(t) − N₂(t)` for paths `0..n_paths`, seeded by
/// [`path_seed`]. Events are not stored.
pub fn net_counts(
    params: &MarkedHawkesParams,
    marks: &MarkModel,
    t: f64,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<i64>> {
    let plan = Plan::new(params, marks, t, &SimOptions::default())?;
    exec.map(n_paths, |i| {
        let mut net = 0i64;
        plan.run(t, path_seed(seed, i as u64), |_, side, mark| net += side.sign() * mark as i64)?;
        Ok(net)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl McEstimate {
    /// Sample variance with the fourth-moment standard error
    /// `√((m₄ − m₂²)/n)`.
    pub fn from_samples(xs: &[f64]) -> Result<McEstimate> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::InsufficientData(format!("need at least 2 paths, got {n}")));
        }
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let (m2, m4) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
            let d2 = (x - mean).powi(2);
            (a + d2, b + d2 * d2)
        });
        let (m2, m4) = (m2 / nf, m4 / nf);
        Ok(McEstimate {
            mean,
            variance: m2 * nf / (nf - 1.0),
            std_error: ((m4 - m2 * m2).max(0.0) / nf).sqrt(),
            n_paths: n,
        })
    }

    /// `|value − variance| / std_error`.
    pub fn z_score(&self, value: f64) -> f64 {
        (value - self.variance).abs() / self.std_error
    }
}

pub fn mc_variance(
    params: &MarkedHawkesParams,
    marks: &MarkModel,
    t: f64,
    n_paths: usize,
    seed: u64,
) -> Result<McEstimate> {
    mc_variance_with(params, marks, t, n_paths, seed, Execution::default())
}

pub fn mc_variance_with(
    params: &MarkedHawkesParams,
    marks: &MarkModel,
    t: f64,
    n_paths: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    if n_paths < 2 {
        return Err(Error::InsufficientData(format!("need at least 2 paths, got {n_paths}")));
    }
    let nets = net_counts(params, marks, t, n_paths, seed, exec)?;
    let xs: Vec<f64> = nets.iter().map(|&v| v as f64).collect();
    McEstimate::from_samples(&xs)
}
