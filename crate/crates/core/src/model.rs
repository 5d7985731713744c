//! Parameter bundles, stability gating and mark-summary containers.
//!
//! Units: rates are per second, times are seconds from session open, marks
//! are integer ticks.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mat2::{Mat2, Vec2};

/// Column names in the order used by flat parameter vectors and fit tables.
pub const PARAM_NAMES: [&str; 12] = [
    "mu1", "mu2", "a11", "a12", "a21", "a22", "b1", "b2", "e11", "e12", "e21", "e22",
];

/// Bivariate exponential Hawkes parameters: baseline `mu`, excitation
/// `alpha` (row i = target, column j = source) and per-row decay `beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HawkesParams {
    pub mu: Vec2,
    pub alpha: Mat2,
    pub beta: Vec2,
}

/// Marked extension with linear impact `g(z) = eta ∘ (Z − 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedHawkesParams {
    pub base: HawkesParams,
    pub eta: Mat2,
}

/// Covariance-adjusted mark moments.
///
/// `zbar[i][j]` is the intensity-weighted mean mark of type-`j` events (so
/// each column repeats one value), `zbar2` the analogous second moment,
/// `zbar_ll` the mean weighted by `λᵢλⱼ` and `zbar_nl` weighted by `Nᵢλⱼ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkSummaries {
    pub zbar: Mat2,
    pub zbar2: Mat2,
    pub zbar_ll: Mat2,
    pub zbar_nl: Mat2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    pub spectral_radius: f64,
    pub stable: bool,
    pub effective_branching: Mat2,
}

/// Parameter equality constraints applied during estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Constraint {
    #[default]
    General,
    /// `alpha` and `eta` symmetric with equal diagonals.
    Symmetric,
}

impl Constraint {
    pub fn as_str(&self) -> &'static str {
        match self {
            Constraint::General => "general",
            Constraint::Symmetric => "symmetric",
        }
    }
}

impl std::str::FromStr for Constraint {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "general" => Ok(Constraint::General),
            "symmetric" => Ok(Constraint::Symmetric),
            _ => Err(Error::InvalidParams(format!("unknown constraint '{s}'"))),
        }
    }
}

fn column_constant(v: Vec2) -> Mat2 {
    Mat2::new(v.0[0], v.0[1], v.0[0], v.0[1])
}

impl MarkSummaries {
    /// Unit marks: every summary is all-ones.
    pub fn ones() -> Self {
        MarkSummaries {
            zbar: Mat2::ONES,
            zbar2: Mat2::ONES,
            zbar_ll: Mat2::ONES,
            zbar_nl: Mat2::ONES,
        }
    }

    /// Marks independent of the intensities: all first-moment summaries
    /// collapse to the plain per-type means.
    pub fn independent(mean: Vec2, second: Vec2) -> Self {
        let zbar = column_constant(mean);
        MarkSummaries {
            zbar,
            zbar2: column_constant(second),
            zbar_ll: zbar,
            zbar_nl: zbar,
        }
    }

    /// Independent geometric marks on {1, 2, …}: `E[z²] = 2m² − m`.
    pub fn geometric(mean: Vec2) -> Self {
        let second = Vec2(mean.0.map(|m| 2.0 * m * m - m));
        Self::independent(mean, second)
    }

    /// Copy with `zbar_ll` and `zbar_nl` replaced by `zbar`.
    pub fn as_independent(&self) -> Self {
        MarkSummaries {
            zbar_ll: self.zbar,
            zbar_nl: self.zbar,
            ..*self
        }
    }

    pub fn mean_marks(&self) -> Vec2 {
        self.zbar.diagonal()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, m) in [
            ("zbar", self.zbar),
            ("zbar2", self.zbar2),
            ("zbar_ll", self.zbar_ll),
            ("zbar_nl", self.zbar_nl),
        ] {
            if !m.is_finite() {
                return Err(Error::InvalidParams(format!("{name} not finite")));
            }
            if m.0.iter().flatten().any(|&v| v < 1.0 - 1e-12) {
                return Err(Error::InvalidParams(format!("{name} below 1")));
            }
        }
        Ok(())
    }
}

impl HawkesParams {
    pub fn new(mu: Vec2, alpha: Mat2, beta: Vec2) -> Self {
        HawkesParams { mu, alpha, beta }
    }

    pub fn poisson(mu: Vec2) -> Self {
        HawkesParams {
            mu,
            alpha: Mat2::ZERO,
            beta: Vec2::splat(1.0),
        }
    }

    pub fn beta_mat(&self) -> Mat2 {
        Mat2::diag(self.beta)
    }

    /// `β⁻¹ α`
    pub fn branching(&self) -> Mat2 {
        branching(&self.alpha, self.beta)
    }

    pub fn stability(&self) -> StabilityReport {
        report(self.branching())
    }

    pub fn marked(self, eta: Mat2) -> MarkedHawkesParams {
        MarkedHawkesParams { base: self, eta }
    }

    fn check_signs(&self) -> Result<()> {
        if !self.mu.is_finite() || !self.alpha.is_finite() || !self.beta.is_finite() {
            return Err(Error::InvalidParams("non-finite parameter".into()));
        }
        if self.mu.0.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParams("mu nonpositive".into()));
        }
        if self.beta.0.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidParams("beta nonpositive".into()));
        }
        if self.alpha.0.iter().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidParams("alpha negative".into()));
        }
        Ok(())
    }

    /// Checks sign invariants and the unmarked stationarity condition.
    pub fn validate(&self) -> Result<()> {
        self.check_signs()?;
        let s = self.stability();
        if !s.stable {
            return Err(Error::Unstable {
                radius: s.spectral_radius,
            });
        }
        Ok(())
    }
}

fn branching(kernel: &Mat2, beta: Vec2) -> Mat2 {
    Mat2::from_fn(|i, j| kernel.get(i, j) / beta.0[i])
}

fn report(b: Mat2) -> StabilityReport {
    let rho = b.spectral_radius();
    StabilityReport {
        spectral_radius: rho,
        stable: rho < 1.0,
        effective_branching: b,
    }
}

impl MarkedHawkesParams {
    pub fn unmarked(base: HawkesParams) -> Self {
        MarkedHawkesParams {
            base,
            eta: Mat2::ZERO,
        }
    }

    /// Mean jump matrix `α − η + η ∘ Z̄`.
    pub fn effective_kernel(&self, marks: &MarkSummaries) -> Mat2 {
        self.base.alpha - self.eta + self.eta.hadamard(&marks.zbar)
    }

    /// Jump added to the intensity by a type-`side` event with mark `z`:
    /// column `side` of `α + η ∘ (Z − 1)`.
    pub fn jump(&self, side: usize, mark: f64) -> Vec2 {
        let a = self.base.alpha.col(side);
        let e = self.eta.col(side);
        a + e.scale(mark - 1.0)
    }

    pub fn to_array(&self) -> [f64; 12] {
        let p = &self.base;
        [
            p.mu.0[0],
            p.mu.0[1],
            p.alpha.0[0][0],
            p.alpha.0[0][1],
            p.alpha.0[1][0],
            p.alpha.0[1][1],
            p.beta.0[0],
            p.beta.0[1],
            self.eta.0[0][0],
            self.eta.0[0][1],
            self.eta.0[1][0],
            self.eta.0[1][1],
        ]
    }

    pub fn from_array(a: &[f64; 12]) -> Self {
        MarkedHawkesParams {
            base: HawkesParams {
                mu: Vec2([a[0], a[1]]),
                alpha: Mat2::new(a[2], a[3], a[4], a[5]),
                beta: Vec2([a[6], a[7]]),
            },
            eta: Mat2::new(a[8], a[9], a[10], a[11]),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        let a = self.base.alpha;
        let e = self.eta;
        a.0[0][0] == a.0[1][1] && a.0[0][1] == a.0[1][0] && e.0[0][0] == e.0[1][1] && e.0[0][1] == e.0[1][0]
    }

    pub fn validate(&self, marks: &MarkSummaries) -> Result<()> {
        self.base.check_signs()?;
        if !self.eta.is_finite() || self.eta.0.iter().flatten().any(|&v| v < 0.0) {
            return Err(Error::InvalidParams("eta negative".into()));
        }
        marks.validate()?;
        let s = stability(self, marks);
        if !s.stable {
            return Err(Error::Unstable {
                radius: s.spectral_radius,
            });
        }
        Ok(())
    }

    /// Flat `key=value` text, one parameter per line.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, v) in PARAM_NAMES.iter().zip(self.to_array()) {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Parses the `key=value` block. `e*` keys default to zero; blank lines
    /// and `#` comments are skipped; unrecognised keys are ignored.
    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        let mut out = [0.0; 12];
        for (slot, name) in out.iter_mut().zip(PARAM_NAMES) {
            match map.get(name) {
                Some(v) => {
                    *slot = v.parse::<f64>().map_err(|_| {
                        Error::InvalidParams(format!("{name}: cannot parse '{v}'"))
                    })?
                }
                None if name.starts_with('e') => {}
                None => return Err(Error::InvalidParams(format!("missing key {name}"))),
            }
        }
        Ok(Self::from_array(&out))
    }
}

/// Parses flat `key=value` lines into an ordered map.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::InvalidParams(format!("line {}: expected key=value", lineno + 1)))?;
        if map.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
            return Err(Error::InvalidParams(format!("duplicate key {}", k.trim())));
        }
    }
    Ok(map)
}

/// Spectral radius of `β⁻¹(α − η + η ∘ Z̄)`; with `η = 0` and unit marks this
/// is the unmarked branching matrix `β⁻¹α`.
pub fn stability(params: &MarkedHawkesParams, marks: &MarkSummaries) -> StabilityReport {
    report(branching(&params.effective_kernel(marks), params.base.beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_row() -> MarkedHawkesParams {
        // 2019-10-01 estimates
        MarkedHawkesParams::from_array(&[
            0.2017, 0.2437, 0.1447, 0.0894, 0.1248, 0.157, 0.5994, 0.7947, 0.0271, 0.0137, 0.0164,
            0.0455,
        ])
    }

    #[test]
    fn poisson_is_stable_with_zero_radius() {
        let p = MarkedHawkesParams::unmarked(HawkesParams::poisson(Vec2::new(0.2, 0.3)));
        let s = stability(&p, &MarkSummaries::ones());
        assert_eq!(s.spectral_radius, 0.0);
        assert!(s.stable);
    }

    #[test]
    fn constant_alpha_radius() {
        let p = HawkesParams::new(Vec2::splat(0.2), Mat2::splat(0.1), Vec2::splat(0.5));
        // β⁻¹α = all 0.2, row sums 0.4
        assert!((p.stability().spectral_radius - 0.4).abs() < 1e-15);
    }

    #[test]
    fn table_row_with_marks_is_stable() {
        let p = table_row();
        let marks = MarkSummaries {
            zbar: Mat2::splat(1.2),
            zbar2: Mat2::splat(1.6),
            zbar_ll: Mat2::splat(1.2),
            zbar_nl: Mat2::splat(1.2),
        };
        let s = stability(&p, &marks);
        // oracle: eigenvalues of the effective branching matrix via the quadratic formula
        let k = p.base.alpha - p.eta + p.eta.scale(1.2);
        let b = Mat2::from_fn(|i, j| k.get(i, j) / p.base.beta.0[i]);
        let tr = b.trace();
        let disc = tr * tr - 4.0 * b.det();
        let r = ((tr + disc.sqrt()) / 2.0).abs().max(((tr - disc.sqrt()) / 2.0).abs());
        assert!((s.spectral_radius - r).abs() < 1e-14);
        assert!(s.stable);
    }

    #[test]
    fn unmarked_reduction_exact() {
        let p = table_row();
        let unmarked = MarkedHawkesParams::unmarked(p.base);
        let s = stability(&unmarked, &MarkSummaries::ones());
        assert_eq!(s.effective_branching, p.base.branching());
        // η ≠ 0 with unit marks also reduces, since g(1) = 0
        assert_eq!(stability(&p, &MarkSummaries::ones()).effective_branching, p.base.branching());
    }

    #[test]
    fn time_rescaling_leaves_branching_unchanged() {
        let p = table_row().base;
        let c = 3.7;
        let q = HawkesParams::new(p.mu.scale(c), p.alpha.scale(c), p.beta.scale(c));
        assert!((q.branching() - p.branching()).max_abs() < 1e-15);
    }

    #[test]
    fn validate_cases() {
        let ok = HawkesParams::new(Vec2::new(0.2, 0.3), Mat2::ZERO, Vec2::splat(1.0));
        assert!(ok.validate().is_ok());
        let bad = HawkesParams::new(Vec2::new(-0.1, 0.3), Mat2::ZERO, Vec2::splat(1.0));
        assert_eq!(bad.validate(), Err(Error::InvalidParams("mu nonpositive".into())));

        let stable = HawkesParams::new(
            Vec2::new(0.2, 0.3),
            Mat2::new(0.3, 0.1, 0.2, 0.25),
            Vec2::new(0.8, 0.6),
        );
        let rho = stable.stability().spectral_radius;
        let scaled = HawkesParams {
            alpha: stable.alpha.scale(1.05 / rho),
            ..stable
        };
        match scaled.validate() {
            Err(Error::Unstable { radius }) => assert!((radius - 1.05).abs() < 1e-12),
            other => panic!("expected unstable, got {other:?}"),
        }
    }

    #[test]
    fn kv_roundtrip() {
        let p = table_row();
        let back = MarkedHawkesParams::from_kv(&p.to_kv()).unwrap();
        assert_eq!(back, p);
        let unmarked = "mu1=0.2\nmu2=0.3\na11=0\na12=0\na21=0\na22=0\nb1=1\nb2=1\n";
        let q = MarkedHawkesParams::from_kv(unmarked).unwrap();
        assert_eq!(q.eta, Mat2::ZERO);
        assert!(MarkedHawkesParams::from_kv("mu1=0.2\n").is_err());
    }

    #[test]
    fn geometric_second_moment() {
        let m = MarkSummaries::geometric(Vec2::splat(1.5));
        assert_eq!(m.zbar2.get(0, 0), 3.0);
        assert_eq!(m.zbar.col(0), Vec2::splat(1.5));
        assert!(m.validate().is_ok());
    }
}
