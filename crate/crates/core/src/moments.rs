//! Closed-form stationary moments and the variance of the net signed count
//! `N₁(t) − N₂(t)`, for both the unmarked and the marked model.
//!
//! Every linear system here is 2×2 or a 4×4 vectorized Sylvester-type
//! system solved through [`crate::mat2::kron_solve4`]. Solutions are checked
//! by substituting back into the matrix equation they came from.
//!
//! Orientation: the unmarked `A`, `B` describe `E[λ Nᵀ] ≈ A t + B`, the
//! marked ones describe `E[N λᵀ] ≈ A t + B`, so with unit marks the marked
//! `B` is the transpose of the unmarked one.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::mat2::{eig2, hadamard_vec_lhs, hadamard_vec_rhs, kron_solve4, CMat2, Eigen2, Mat2, Mat4, Vec2};
use crate::model::{stability, HawkesParams, MarkSummaries, MarkedHawkesParams};

/// Substitute-back tolerance for every solved system.
pub const RESIDUAL_TOL: f64 = 1e-8;

const U: Vec2 = Vec2::new(1.0, -1.0);

/// Homogeneous part of `E[λ Nᵀ]`: `V diag(e^{ξt}) C` with `C` fixed by
/// `E[λ₀ N₀ᵀ] = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transient {
    pub eigen: Eigen2,
    pub coeff: CMat2,
}

impl Transient {
    /// `∫₀ᵗ V diag(e^{ξs}) C ds`, real part.
    pub fn integral(&self, t: f64) -> Mat2 {
        let v = self.eigen.vector_matrix();
        let d = CMat2::diag(self.eigen.values.map(|xi| ((xi * t).exp() - 1.0) / xi));
        v.mul(&d).mul(&self.coeff).re()
    }

    /// `V diag(e^{ξt}) C`, real part.
    pub fn at(&self, t: f64) -> Mat2 {
        let v = self.eigen.vector_matrix();
        let d = CMat2::diag(self.eigen.values.map(|xi| (xi * t).exp()));
        v.mul(&d).mul(&self.coeff).re()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSolution {
    /// `E[λ]`
    pub elam: Vec2,
    /// `E[λ λᵀ]`
    pub elam2: Mat2,
    pub a_mat: Mat2,
    pub b_mat: Mat2,
    /// Transient term; `None` when `α − β` is defective or for marked solves.
    pub homo: Option<Transient>,
}

/// How mark summaries enter the restricted variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MarkDependence {
    /// Use `Z̄_{λλᵀ}` as estimated from data.
    #[default]
    Dependent,
    /// `Z̄ = Z̄_{Nλᵀ} = Z̄_{λλᵀ}`.
    Independent,
}

/// Marked variance with a flag for the negative outputs that inconsistent
/// non-parametric mark summaries can produce.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullVariance {
    pub variance: f64,
    pub negative: bool,
}

fn check_stable(params: &MarkedHawkesParams, marks: &MarkSummaries) -> Result<()> {
    let s = stability(params, marks);
    if !s.stable {
        return Err(Error::Unstable {
            radius: s.spectral_radius,
        });
    }
    Ok(())
}

fn rel_residual(sum: Mat2, terms: &[Mat2]) -> f64 {
    let scale: f64 = terms.iter().map(Mat2::frobenius).sum();
    if scale == 0.0 {
        sum.frobenius()
    } else {
        sum.frobenius() / scale
    }
}

fn ensure_residual(what: &str, r: f64) -> Result<()> {
    if r.is_finite() && r < RESIDUAL_TOL {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{what} residual {r:.3e}")))
    }
}

/// Stationary mean intensity `(β − α)⁻¹ β μ`.
pub fn expected_intensity(params: &HawkesParams) -> Result<Vec2> {
    expected_intensity_marked(&MarkedHawkesParams::unmarked(*params), &MarkSummaries::ones())
}

/// Stationary mean intensity of the marked model, `(β − α + η − η∘Z̄)⁻¹ β μ`.
pub fn expected_intensity_marked(params: &MarkedHawkesParams, marks: &MarkSummaries) -> Result<Vec2> {
    check_stable(params, marks)?;
    let p = &params.base;
    let m = p.beta_mat() - params.effective_kernel(marks);
    let elam = m.solve(&p.beta.hadamard(&p.mu))?;
    if elam.0.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(Error::Numerical(format!("non-positive mean intensity {:?}", elam.0)));
    }
    Ok(elam)
}

/// Left side of the unmarked Sylvester equation for `E[λλᵀ]`; zero at the
/// solution.
pub fn sylvester_residual_unmarked(params: &HawkesParams, elam: &Vec2, elam2: &Mat2) -> f64 {
    let k = params.alpha - params.beta_mat();
    let bm = params.beta.hadamard(&params.mu);
    let t1 = *elam2 * k.transpose();
    let t2 = k * *elam2;
    let t3 = elam.outer(&bm);
    let t4 = bm.outer(elam);
    let t5 = params.alpha * Mat2::diag(*elam) * params.alpha.transpose();
    rel_residual(t1 + t2 + t3 + t4 + t5, &[t1, t2, t3, t4, t5])
}

/// `E[λλᵀ]` for the unmarked model from its Sylvester equation.
pub fn second_moment_unmarked(params: &HawkesParams) -> Result<Mat2> {
    let elam = expected_intensity(params)?;
    second_moment_unmarked_with(params, &elam)
}

fn second_moment_unmarked_with(params: &HawkesParams, elam: &Vec2) -> Result<Mat2> {
    let k = params.alpha - params.beta_mat();
    let lhs = Mat2::IDENTITY.kron(&k) + k.kron(&Mat2::IDENTITY);
    let bm = params.beta.hadamard(&params.mu);
    let rhs = (elam.outer(&bm) + bm.outer(elam) + params.alpha * Mat2::diag(*elam) * params.alpha.transpose())
        .scale(-1.0)
        .vec();
    let sol = kron_solve4(&lhs, &rhs)?;
    let x = Mat2::unvec(&sol.x);
    let x = (x + x.transpose()).scale(0.5);
    ensure_residual("E[λλᵀ]", sylvester_residual_unmarked(params, elam, &x))?;
    Ok(x)
}

/// Expected quadratic jump term
/// `G = (α−η+η∘Z̄) Dg(E[λ]) (α−η)ᵀ + (α−η) Dg(E[λ]) (η∘Z̄)ᵀ + (η∘√Z̄⁽²⁾) Dg(E[λ]) (η∘√Z̄⁽²⁾)ᵀ`.
pub fn g_matrix(params: &MarkedHawkesParams, marks: &MarkSummaries, elam: &Vec2) -> Mat2 {
    let a_minus_e = params.base.alpha - params.eta;
    let ez = params.eta.hadamard(&marks.zbar);
    let ez2 = params.eta.hadamard(&marks.zbar2.map(f64::sqrt));
    let d = Mat2::diag(*elam);
    (a_minus_e + ez) * d * a_minus_e.transpose()
        + a_minus_e * d * ez.transpose()
        + ez2 * d * ez2.transpose()
}

/// Relative residual of the marked second-moment equation.
pub fn sylvester_residual_marked(
    params: &MarkedHawkesParams,
    marks: &MarkSummaries,
    elam: &Vec2,
    elam2: &Mat2,
) -> f64 {
    let p = &params.base;
    let k = p.alpha - p.beta_mat();
    let bm = p.beta.hadamard(&p.mu);
    let inner = k * *elam2;
    let hterm = params.eta * marks.zbar_ll.transpose().add_scalar(-1.0).hadamard(elam2);
    let drift = bm.outer(elam);
    let g = g_matrix(params, marks, elam);
    let terms = [
        inner,
        inner.transpose(),
        hterm,
        hterm.transpose(),
        drift,
        drift.transpose(),
        g,
    ];
    let sum = terms.iter().fold(Mat2::ZERO, |acc, m| acc + *m);
    rel_residual(sum, &terms)
}

/// `E[λλᵀ]` for the marked model from the vectorized system
/// `H vec(E[λλᵀ]) = −vec(T(βμE[λ]ᵀ) + G)`.
pub fn second_moment_marked(params: &MarkedHawkesParams, marks: &MarkSummaries) -> Result<Mat2> {
    let elam = expected_intensity_marked(params, marks)?;
    second_moment_marked_with(params, marks, &elam)
}

fn second_moment_marked_with(params: &MarkedHawkesParams, marks: &MarkSummaries, elam: &Vec2) -> Result<Mat2> {
    let p = &params.base;
    let k = p.alpha - p.beta_mat();
    let n = marks.zbar_ll.add_scalar(-1.0);
    let h: Mat4 = Mat2::IDENTITY.kron(&k)
        + k.kron(&Mat2::IDENTITY)
        + hadamard_vec_lhs(&params.eta, &n.transpose())
        + hadamard_vec_rhs(&params.eta.transpose(), &n);
    let bm = p.beta.hadamard(&p.mu);
    let rhs = (bm.outer(elam).sym_sum() + g_matrix(params, marks, elam)).scale(-1.0).vec();
    let sol = kron_solve4(&h, &rhs)?;
    let x = Mat2::unvec(&sol.x);
    let x = (x + x.transpose()).scale(0.5);
    ensure_residual("marked E[λλᵀ]", sylvester_residual_marked(params, marks, elam, &x))?;
    Ok(x)
}

/// Relative residual of `B = (α−β)⁻¹(A − E[λλᵀ] − α Dg(E[λ]))` written as
/// `(α−β)B − A + E[λλᵀ] + α Dg(E[λ]) = 0`.
pub fn basic_b_residual(params: &HawkesParams, sol: &MomentSolution) -> f64 {
    let k = params.alpha - params.beta_mat();
    let t1 = k * sol.b_mat;
    let t2 = -sol.a_mat;
    let t3 = sol.elam2;
    let t4 = params.alpha * Mat2::diag(sol.elam);
    rel_residual(t1 + t2 + t3 + t4, &[t1, t2, t3, t4])
}

/// `A = E[λ]E[λ]ᵀ`, `B` from its closed form, and the transient term.
pub fn solve_ab_unmarked(params: &HawkesParams) -> Result<MomentSolution> {
    let elam = expected_intensity(params)?;
    let elam2 = second_moment_unmarked_with(params, &elam)?;
    let k = params.alpha - params.beta_mat();
    let a_mat = elam.outer(&elam);
    let b_mat = k.inverse()? * (a_mat - elam2 - params.alpha * Mat2::diag(elam));
    let mut sol = MomentSolution {
        elam,
        elam2,
        a_mat,
        b_mat,
        homo: None,
    };
    ensure_residual("B", basic_b_residual(params, &sol))?;
    sol.homo = match eig2(&k) {
        Ok(eigen) => {
            let v = eigen.vector_matrix();
            let coeff = v.inverse()?.mul(&CMat2::from_real(&b_mat)).scale(Complex64::new(-1.0, 0.0));
            Some(Transient { eigen, coeff })
        }
        Err(Error::Defective) => None,
        Err(e) => return Err(e),
    };
    Ok(sol)
}

/// Relative residual of `A(α−β)ᵀ + (A∘(Z̄_{Nλᵀ}−1))ηᵀ + Dg(Z̄)E[λ](βμ)ᵀ = 0`.
pub fn eq_a_residual(params: &MarkedHawkesParams, zbar: &Mat2, zbar_nl: &Mat2, elam: &Vec2, a: &Mat2) -> f64 {
    let p = &params.base;
    let k = p.alpha - p.beta_mat();
    let t1 = *a * k.transpose();
    let t2 = a.hadamard(&zbar_nl.add_scalar(-1.0)) * params.eta.transpose();
    let t3 = zbar.diag_part().mul_vec(elam).outer(&p.beta.hadamard(&p.mu));
    rel_residual(t1 + t2 + t3, &[t1, t2, t3])
}

fn b_source(params: &MarkedHawkesParams, marks: &MarkSummaries) -> Mat2 {
    let a_minus_e = params.base.alpha - params.eta;
    a_minus_e.hadamard(&marks.zbar) + params.eta.hadamard(&marks.zbar2)
}

/// Relative residual of
/// `B(α−β)ᵀ + (B∘(Z̄_{Nλᵀ}−1))ηᵀ + Z̄_{λλᵀ}ᵀ∘E[λλᵀ] + Dg(E[λ])((α−η)∘Z̄ + η∘Z̄⁽²⁾)ᵀ − A = 0`.
pub fn eq_b_residual(
    params: &MarkedHawkesParams,
    marks: &MarkSummaries,
    zbar_nl: &Mat2,
    sol: &MomentSolution,
) -> f64 {
    let k = params.base.alpha - params.base.beta_mat();
    let b = sol.b_mat;
    let t1 = b * k.transpose();
    let t2 = b.hadamard(&zbar_nl.add_scalar(-1.0)) * params.eta.transpose();
    let t3 = marks.zbar_ll.transpose().hadamard(&sol.elam2);
    let t4 = Mat2::diag(sol.elam) * b_source(params, marks).transpose();
    let t5 = -sol.a_mat;
    rel_residual(t1 + t2 + t3 + t4 + t5, &[t1, t2, t3, t4, t5])
}

fn ab_operator(params: &MarkedHawkesParams, zbar_nl: &Mat2) -> Mat4 {
    let k = params.base.alpha - params.base.beta_mat();
    Mat2::IDENTITY.kron(&k) + hadamard_vec_lhs(&params.eta, &zbar_nl.add_scalar(-1.0).transpose())
}

fn solve_b_marked(
    params: &MarkedHawkesParams,
    marks: &MarkSummaries,
    op: &Mat4,
    elam: &Vec2,
    elam2: &Mat2,
    a_mat: &Mat2,
) -> Result<Mat2> {
    let src = marks.zbar_ll.hadamard(elam2) + b_source(params, marks) * Mat2::diag(*elam) - a_mat.transpose();
    let sol = kron_solve4(op, &src.scale(-1.0).vec())?;
    Ok(Mat2::unvec(&sol.x).transpose())
}

/// `A` and `B` of the marked model (general form, using `Z̄_{Nλᵀ}`).
pub fn solve_ab_marked(params: &MarkedHawkesParams, marks: &MarkSummaries) -> Result<MomentSolution> {
    let elam = expected_intensity_marked(params, marks)?;
    let elam2 = second_moment_marked_with(params, marks, &elam)?;
    let p = &params.base;
    let op = ab_operator(params, &marks.zbar_nl);
    let a_src = p.beta.hadamard(&p.mu).outer(&elam) * marks.zbar.diag_part();
    let a_mat = Mat2::unvec(&kron_solve4(&op, &a_src.scale(-1.0).vec())?.x).transpose();
    ensure_residual("A", eq_a_residual(params, &marks.zbar, &marks.zbar_nl, &elam, &a_mat))?;
    let b_mat = solve_b_marked(params, marks, &op, &elam, &elam2, &a_mat)?;
    let sol = MomentSolution {
        elam,
        elam2,
        a_mat,
        b_mat,
        homo: None,
    };
    ensure_residual("B", eq_b_residual(params, marks, &marks.zbar_nl, &sol))?;
    Ok(sol)
}

/// Restricted solution: `Z̄_{Nλᵀ}` replaced by `Z̄`, `A = Dg(Z̄)E[λ]E[λ]ᵀ`.
pub fn solve_ab_restricted(params: &MarkedHawkesParams, marks: &MarkSummaries) -> Result<MomentSolution> {
    let marks = MarkSummaries {
        zbar_nl: marks.zbar,
        ..*marks
    };
    let elam = expected_intensity_marked(params, &marks)?;
    let elam2 = second_moment_marked_with(params, &marks, &elam)?;
    let a_mat = marks.zbar.diag_part().mul_vec(&elam).outer(&elam);
    let op = ab_operator(params, &marks.zbar);
    let b_mat = solve_b_marked(params, &marks, &op, &elam, &elam2, &a_mat)?;
    let sol = MomentSolution {
        elam,
        elam2,
        a_mat,
        b_mat,
        homo: None,
    };
    ensure_residual("B", eq_b_residual(params, &marks, &marks.zbar, &sol))?;
    Ok(sol)
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParams(format!("horizon must be positive, got {t}")));
    }
    Ok(())
}

/// Count variance `uᵀ(2B + Dg(E[λ]))u · t`, transient term dropped.
pub fn variance_unmarked(params: &HawkesParams, t: f64) -> Result<f64> {
    check_horizon(t)?;
    let sol = solve_ab_unmarked(params)?;
    Ok(U.dot(&(sol.b_mat.scale(2.0) + Mat2::diag(sol.elam)).mul_vec(&U)) * t)
}

/// Count variance including the exponentially decaying transient of
/// `E[λNᵀ]`; exact for the stationary unmarked model at every `t`.
pub fn variance_unmarked_exact(params: &HawkesParams, t: f64) -> Result<f64> {
    check_horizon(t)?;
    let sol = solve_ab_unmarked(params)?;
    let homo = sol.homo.ok_or(Error::Defective)?;
    let integral = sol.b_mat.scale(t) + homo.integral(t);
    let enn = integral.sym_sum() + Mat2::diag(sol.elam).scale(t);
    Ok(U.dot(&enn.mul_vec(&U)))
}

/// Marked count variance `uᵀE[NNᵀ]u − (uᵀDg(Z̄)E[λ]t)²` with
/// `E[NNᵀ] ≈ T{Z̄_{Nλᵀ}∘(½At² + Bt)} + Z̄⁽²⁾∘Dg(E[λ])t`.
pub fn variance_marked_full(params: &MarkedHawkesParams, marks: &MarkSummaries, t: f64) -> Result<FullVariance> {
    check_horizon(t)?;
    let sol = solve_ab_marked(params, marks)?;
    // With Z̄_{Nλᵀ} = Z̄ the t² terms cancel identically; otherwise collect
    // the t² coefficient before scaling so the cancellation happens at O(1).
    let quad = if marks.zbar_nl == marks.zbar {
        0.0
    } else {
        let drift = U.dot(&marks.zbar.diag_part().mul_vec(&sol.elam));
        U.dot(&marks.zbar_nl.hadamard(&sol.a_mat.scale(0.5)).sym_sum().mul_vec(&U)) - drift * drift
    };
    let lin = marks.zbar_nl.hadamard(&sol.b_mat).sym_sum() + marks.zbar2.hadamard(&Mat2::diag(sol.elam));
    let variance = quad * t * t + U.dot(&lin.mul_vec(&U)) * t;
    Ok(FullVariance {
        variance,
        negative: variance < 0.0,
    })
}

/// Restricted marked count variance `uᵀ[T{Z̄∘B} + Z̄⁽²⁾∘Dg(E[λ])]u · t`.
pub fn variance_marked_restricted(
    params: &MarkedHawkesParams,
    marks: &MarkSummaries,
    t: f64,
    dependence: MarkDependence,
) -> Result<f64> {
    check_horizon(t)?;
    let marks = match dependence {
        MarkDependence::Dependent => *marks,
        MarkDependence::Independent => marks.as_independent(),
    };
    let sol = solve_ab_restricted(params, &marks)?;
    let inner = marks.zbar.hadamard(&sol.b_mat).sym_sum() + marks.zbar2.hadamard(&Mat2::diag(sol.elam));
    Ok(U.dot(&inner.mul_vec(&U)) * t)
}

/// Which closed-form count variance to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VolMode {
    /// Unmarked model; η and the marks are ignored.
    Unmarked,
    /// Marked model with the `t²` drift term.
    Full,
    /// Linear-in-`t` marked variance with the supplied summaries.
    Restricted,
    /// Linear-in-`t` marked variance with independent marks.
    Independent,
}

impl VolMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            VolMode::Unmarked => "unmarked",
            VolMode::Full => "full",
            VolMode::Restricted => "restricted",
            VolMode::Independent => "independent",
        }
    }
}

impl std::str::FromStr for VolMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unmarked" => Ok(VolMode::Unmarked),
            "full" => Ok(VolMode::Full),
            "restricted" => Ok(VolMode::Restricted),
            "independent" => Ok(VolMode::Independent),
            _ => Err(Error::InvalidParams(format!("unknown vol mode '{s}'"))),
        }
    }
}

/// `Var(N₁(t) − N₂(t))` under `mode`. The full marked form may be negative.
pub fn count_variance(params: &MarkedHawkesParams, marks: &MarkSummaries, t: f64, mode: VolMode) -> Result<f64> {
    match mode {
        VolMode::Unmarked => variance_unmarked(&params.base, t),
        VolMode::Full => Ok(variance_marked_full(params, marks, t)?.variance),
        VolMode::Restricted => variance_marked_restricted(params, marks, t, MarkDependence::Dependent),
        VolMode::Independent => variance_marked_restricted(params, marks, t, MarkDependence::Independent),
    }
}

/// Price standard deviation from a count variance: `tick · √variance`.
pub fn price_volatility(count_variance: f64, tick_size: f64) -> Result<f64> {
    if count_variance < 0.0 {
        return Err(Error::NegativeVariance(count_variance));
    }
    if !(tick_size > 0.0) {
        return Err(Error::InvalidParams("tick size must be positive".into()));
    }
    Ok(tick_size * count_variance.sqrt())
}
