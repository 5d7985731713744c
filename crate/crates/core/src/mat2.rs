//! Exact-dimension linear algebra: 2×2 matrices, 2-vectors, and the 4×4
//! vectorized systems that the moment equations reduce to.
//!
//! Vectorization is column-major throughout: `vec(X) = [x11, x21, x12, x22]`.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Condition numbers above this are rejected by [`kron_solve4`].
pub const MAX_CONDITION: f64 = 1e12;

/// Relative eigenvalue gap below which a 2×2 spectrum counts as repeated.
pub const REPEATED_EIG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2(pub [f64; 2]);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[f64; 2]; 2]);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec4(pub [f64; 4]);

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat4(pub [[f64; 4]; 4]);

impl Vec2 {
    pub const fn new(a: f64, b: f64) -> Self {
        Vec2([a, b])
    }

    pub const fn splat(v: f64) -> Self {
        Vec2([v, v])
    }

    pub fn dot(&self, o: &Vec2) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1]
    }

    pub fn sum(&self) -> f64 {
        self.0[0] + self.0[1]
    }

    pub fn hadamard(&self, o: &Vec2) -> Vec2 {
        Vec2([self.0[0] * o.0[0], self.0[1] * o.0[1]])
    }

    pub fn scale(&self, s: f64) -> Vec2 {
        Vec2([self.0[0] * s, self.0[1] * s])
    }

    /// `self · otherᵀ`
    pub fn outer(&self, o: &Vec2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i] * o.0[j])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);
    pub const ZERO: Mat2 = Mat2([[0.0, 0.0], [0.0, 0.0]]);
    pub const ONES: Mat2 = Mat2([[1.0, 1.0], [1.0, 1.0]]);

    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Mat2([[a11, a12], [a21, a22]])
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        Mat2([[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]])
    }

    pub fn splat(v: f64) -> Self {
        Mat2([[v, v], [v, v]])
    }

    pub fn diag(v: Vec2) -> Self {
        Mat2([[v.0[0], 0.0], [0.0, v.0[1]]])
    }

    /// Diagonal matrix built from the diagonal of `self`.
    pub fn diag_part(&self) -> Mat2 {
        Mat2([[self.0[0][0], 0.0], [0.0, self.0[1][1]]])
    }

    pub fn diagonal(&self) -> Vec2 {
        Vec2([self.0[0][0], self.0[1][1]])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn col(&self, j: usize) -> Vec2 {
        Vec2([self.0[0][j], self.0[1][j]])
    }

    pub fn row(&self, i: usize) -> Vec2 {
        Vec2(self.0[i])
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[j][i])
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat2 {
        Mat2::from_fn(|i, j| f(self.0[i][j]))
    }

    pub fn hadamard(&self, o: &Mat2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][j] * o.0[i][j])
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        self.map(|v| v * s)
    }

    pub fn add_scalar(&self, s: f64) -> Mat2 {
        self.map(|v| v + s)
    }

    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        Vec2([self.row(0).dot(v), self.row(1).dot(v)])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> f64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    /// `M + Mᵀ`
    pub fn sym_sum(&self) -> Mat2 {
        *self + self.transpose()
    }

    /// Inverse via the adjugate. Errors when the determinant vanishes
    /// relative to the entry scale.
    pub fn inverse(&self) -> Result<Mat2> {
        let d = self.det();
        let scale = self.max_abs().powi(2);
        if !d.is_finite() || d.abs() <= 1e-14 * scale || scale == 0.0 {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
            });
        }
        let [[a, b], [c, e]] = self.0;
        Ok(Mat2([[e / d, -b / d], [-c / d, a / d]]))
    }

    pub fn solve(&self, rhs: &Vec2) -> Result<Vec2> {
        Ok(self.inverse()?.mul_vec(rhs))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (self.0[0][1] - self.0[1][0]).abs() <= tol * self.max_abs().max(1.0)
    }

    /// Column-major vectorization.
    pub fn vec(&self) -> Vec4 {
        Vec4([self.0[0][0], self.0[1][0], self.0[0][1], self.0[1][1]])
    }

    pub fn unvec(v: &Vec4) -> Mat2 {
        Mat2([[v.0[0], v.0[2]], [v.0[1], v.0[3]]])
    }

    /// Kronecker product `self ⊗ o`.
    pub fn kron(&self, o: &Mat2) -> Mat4 {
        let mut m = [[0.0; 4]; 4];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m[2 * i + k][2 * j + l] = self.0[i][j] * o.0[k][l];
                    }
                }
            }
        }
        Mat4(m)
    }

    /// Spectral radius (largest eigenvalue modulus).
    pub fn spectral_radius(&self) -> f64 {
        let half_tr = 0.5 * self.trace();
        let disc = half_tr * half_tr - self.det();
        if disc >= 0.0 {
            let r = disc.sqrt();
            (half_tr + r).abs().max((half_tr - r).abs())
        } else {
            // complex pair: |ξ|² = det
            self.det().abs().sqrt()
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][j] + o.0[i][j])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][j] - o.0[i][j])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j])
    }
}

impl Vec4 {
    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl Mat4 {
    pub const IDENTITY: Mat4 = Mat4([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]);

    pub fn zero() -> Self {
        Mat4([[0.0; 4]; 4])
    }

    pub fn diag(v: &Vec4) -> Self {
        let mut m = Mat4::zero();
        for i in 0..4 {
            m.0[i][i] = v.0[i];
        }
        m
    }

    pub fn mul_vec(&self, v: &Vec4) -> Vec4 {
        let mut out = [0.0; 4];
        for (o, row) in out.iter_mut().zip(self.0.iter()) {
            *o = row.iter().zip(v.0.iter()).map(|(a, b)| a * b).sum();
        }
        Vec4(out)
    }

    pub fn scale(&self, s: f64) -> Mat4 {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }

    /// Induced 1-norm (max column sum).
    pub fn norm_one(&self) -> f64 {
        (0..4)
            .map(|j| (0..4).map(|i| self.0[i][j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|v| v.is_finite())
    }
}

impl Add for Mat4 {
    type Output = Mat4;
    fn add(self, o: Mat4) -> Mat4 {
        let mut m = self;
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] += o.0[i][j];
            }
        }
        m
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, o: Mat4) -> Mat4 {
        let mut m = Mat4::zero();
        for i in 0..4 {
            for j in 0..4 {
                m.0[i][j] = (0..4).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        m
    }
}

/// LU factors with partial pivoting for a 4×4 system.
struct Lu4 {
    lu: [[f64; 4]; 4],
    perm: [usize; 4],
}

impl Lu4 {
    fn factor(a: &Mat4) -> Option<Lu4> {
        let mut lu = a.0;
        let mut perm = [0, 1, 2, 3];
        let scale = a.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
        if scale == 0.0 || !scale.is_finite() {
            return None;
        }
        for k in 0..4 {
            let p = (k..4)
                .max_by(|&x, &y| lu[x][k].abs().total_cmp(&lu[y][k].abs()))
                .unwrap();
            if lu[p][k].abs() <= f64::EPSILON * scale {
                return None;
            }
            lu.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..4 {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in k + 1..4 {
                    lu[i][j] -= f * lu[k][j];
                }
            }
        }
        Some(Lu4 { lu, perm })
    }

    fn solve(&self, b: &Vec4) -> Vec4 {
        let mut y = [0.0; 4];
        for i in 0..4 {
            y[i] = b.0[self.perm[i]] - (0..i).map(|j| self.lu[i][j] * y[j]).sum::<f64>();
        }
        let mut x = [0.0; 4];
        for i in (0..4).rev() {
            let s: f64 = (i + 1..4).map(|j| self.lu[i][j] * x[j]).sum();
            x[i] = (y[i] - s) / self.lu[i][i];
        }
        Vec4(x)
    }

    fn inverse_norm_one(&self) -> f64 {
        let mut cols = [[0.0; 4]; 4];
        for (j, col) in cols.iter_mut().enumerate() {
            let mut e = [0.0; 4];
            e[j] = 1.0;
            *col = self.solve(&Vec4(e)).0;
        }
        cols.iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Solution of a 4×4 system together with its 1-norm condition number.
#[derive(Debug, Clone, Copy)]
pub struct Solve4 {
    pub x: Vec4,
    pub condition: f64,
}

/// Solves `lhs · x = rhs` by partial-pivot elimination, rejecting singular
/// systems and those with condition number above [`MAX_CONDITION`].
pub fn kron_solve4(lhs: &Mat4, rhs: &Vec4) -> Result<Solve4> {
    let lu = Lu4::factor(lhs).ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    let condition = lhs.norm_one() * lu.inverse_norm_one();
    if !condition.is_finite() || condition > MAX_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let mut x = lu.solve(rhs);
    // one step of iterative refinement
    let ax = lhs.mul_vec(&x);
    let r = Vec4(std::array::from_fn(|i| rhs.0[i] - ax.0[i]));
    let dx = lu.solve(&r);
    for i in 0..4 {
        x.0[i] += dx.0[i];
    }
    Ok(Solve4 { x, condition })
}

/// Matrix `L` with `vec(M (N ∘ X)) = L · vec(X)` for every `X`.
pub fn hadamard_vec_lhs(m: &Mat2, n: &Mat2) -> Mat4 {
    let mut out = Mat4::zero();
    for block in 0..2 {
        let nc = n.col(block);
        for i in 0..2 {
            for j in 0..2 {
                out.0[2 * block + i][2 * block + j] = m.0[i][j] * nc.0[j];
            }
        }
    }
    out
}

/// Matrix `R` with `vec((N ∘ X) M) = R · vec(X)` for symmetric `X`.
///
/// Only valid for symmetric `X`: the off-diagonal entry `x12` is read
/// from whichever slot of `vec(X)` the layout places it in.
pub fn hadamard_vec_rhs(m: &Mat2, n: &Mat2) -> Mat4 {
    let [[m11, m12], [m21, m22]] = m.0;
    let [[n11, n12], [n21, n22]] = n.0;
    Mat4([
        [m11 * n11, m21 * n12, 0.0, 0.0],
        [0.0, 0.0, m11 * n21, m21 * n22],
        [m12 * n11, m22 * n12, 0.0, 0.0],
        [0.0, 0.0, m12 * n21, m22 * n22],
    ])
}

/// Eigen-decomposition of a 2×2 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    /// Eigenvalues, larger real part first for real spectra.
    pub values: [Complex64; 2],
    /// `vectors[k]` is the unit-norm eigenvector for `values[k]`.
    pub vectors: [[Complex64; 2]; 2],
}

impl Eigen2 {
    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// Eigenvector matrix with eigenvectors as columns.
    pub fn vector_matrix(&self) -> CMat2 {
        CMat2([
            [self.vectors[0][0], self.vectors[1][0]],
            [self.vectors[0][1], self.vectors[1][1]],
        ])
    }

    /// `V · diag(ξ) · V⁻¹`
    pub fn reconstruct(&self) -> Result<CMat2> {
        let v = self.vector_matrix();
        let d = CMat2::diag(self.values);
        Ok(v.mul(&d).mul(&v.inverse()?))
    }
}

/// Eigenvalues and unit eigenvectors of `m`; [`Error::Defective`] when the
/// spectrum is repeated and the eigenspace is one-dimensional.
pub fn eig2(m: &Mat2) -> Result<Eigen2> {
    if !m.is_finite() {
        return Err(Error::InvalidParams("non-finite matrix".into()));
    }
    let [[a, b], [c, d]] = m.0;
    let half_tr = 0.5 * (a + d);
    let disc = 0.25 * (a - d) * (a - d) + b * c;
    let root = Complex64::new(disc, 0.0).sqrt();
    let xi1 = Complex64::new(half_tr, 0.0) + root;
    let xi2 = Complex64::new(half_tr, 0.0) - root;

    let mag = xi1.norm().max(xi2.norm());
    let repeated = (xi1 - xi2).norm() <= REPEATED_EIG_TOL * mag.max(f64::MIN_POSITIVE);
    if repeated {
        let scalar = b == 0.0 && c == 0.0;
        if !scalar && (b.abs() + c.abs()) > REPEATED_EIG_TOL * m.max_abs() {
            return Err(Error::Defective);
        }
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        return Ok(Eigen2 {
            values: [xi1, xi2],
            vectors: [[one, zero], [zero, one]],
        });
    }

    let vec_for = |xi: Complex64| -> [Complex64; 2] {
        // rows of (m - ξI) give two candidate null vectors
        let c1 = [Complex64::new(b, 0.0), xi - a];
        let c2 = [xi - d, Complex64::new(c, 0.0)];
        let n1 = (c1[0].norm_sqr() + c1[1].norm_sqr()).sqrt();
        let n2 = (c2[0].norm_sqr() + c2[1].norm_sqr()).sqrt();
        let (v, n) = if n1 >= n2 { (c1, n1) } else { (c2, n2) };
        [v[0] / n, v[1] / n]
    };

    Ok(Eigen2 {
        values: [xi1, xi2],
        vectors: [vec_for(xi1), vec_for(xi2)],
    })
}

/// Complex 2×2 matrix, used for eigenvector bases and transient terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMat2(pub [[Complex64; 2]; 2]);

impl CMat2 {
    pub fn from_real(m: &Mat2) -> Self {
        CMat2([
            [m.0[0][0].into(), m.0[0][1].into()],
            [m.0[1][0].into(), m.0[1][1].into()],
        ])
    }

    pub fn diag(v: [Complex64; 2]) -> Self {
        let z = Complex64::new(0.0, 0.0);
        CMat2([[v[0], z], [z, v[1]]])
    }

    pub fn mul(&self, o: &CMat2) -> CMat2 {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j];
            }
        }
        CMat2(m)
    }

    pub fn scale(&self, s: Complex64) -> CMat2 {
        let mut m = *self;
        m.0.iter_mut().flatten().for_each(|v| *v *= s);
        m
    }

    pub fn inverse(&self) -> Result<CMat2> {
        let [[a, b], [c, d]] = self.0;
        let det = a * d - b * c;
        if det.norm() <= 1e-14 {
            return Err(Error::IllConditioned {
                condition: f64::INFINITY,
            });
        }
        Ok(CMat2([[d / det, -b / det], [-c / det, a / det]]))
    }

    /// Real part, discarding imaginary residue.
    pub fn re(&self) -> Mat2 {
        Mat2::from_fn(|i, j| self.0[i][j].re)
    }

    pub fn max_im(&self) -> f64 {
        self.0.iter().flatten().fold(0.0_f64, |m, v| m.max(v.im.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_residual(m: &Mat2, e: &Eigen2, k: usize) -> f64 {
        let v = e.vectors[k];
        let cm = CMat2::from_real(m);
        let mv0 = cm.0[0][0] * v[0] + cm.0[0][1] * v[1];
        let mv1 = cm.0[1][0] * v[0] + cm.0[1][1] * v[1];
        let r0 = mv0 - e.values[k] * v[0];
        let r1 = mv1 - e.values[k] * v[1];
        (r0.norm_sqr() + r1.norm_sqr()).sqrt() / m.max_abs()
    }

    #[test]
    fn eig_diagonal() {
        let m = Mat2::new(-0.5, 0.0, 0.0, -0.8);
        let e = eig2(&m).unwrap();
        assert!(e.is_real());
        assert_eq!(e.values[0].re, -0.5);
        assert_eq!(e.values[1].re, -0.8);
        assert!((e.vectors[0][0].re.abs() - 1.0).abs() < 1e-15);
        assert_eq!(e.vectors[0][1].norm(), 0.0);
        assert!((e.vectors[1][1].re.abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eig_swap_matrix() {
        let m = Mat2::new(0.0, 1.0, 1.0, 0.0);
        let e = eig2(&m).unwrap();
        assert!((e.values[0].re - 1.0).abs() < 1e-15);
        assert!((e.values[1].re + 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((e.vectors[0][0].re - s).abs() < 1e-15);
        assert!((e.vectors[0][1].re - s).abs() < 1e-15);
        assert!((e.vectors[1][0].re.abs() - s).abs() < 1e-15);
        assert!((e.vectors[1][0].re + e.vectors[1][1].re).abs() < 1e-15);
    }

    #[test]
    fn eig_table_row_matches_quadratic_roots() {
        // α − β for the 2019-10-01 estimates
        let m = Mat2::new(-0.455, 0.089, 0.125, -0.638);
        // characteristic polynomial x² − tr x + det
        let tr: f64 = -0.455 - 0.638;
        let det = (-0.455) * (-0.638) - 0.089 * 0.125;
        let disc = tr * tr - 4.0 * det;
        let r1 = (tr + disc.sqrt()) / 2.0;
        let r2 = (tr - disc.sqrt()) / 2.0;
        let e = eig2(&m).unwrap();
        assert!((e.values[0].re - r1).abs() < 1e-14);
        assert!((e.values[1].re - r2).abs() < 1e-14);
        for k in 0..2 {
            assert!(rel_residual(&m, &e, k) < 1e-10);
        }
    }

    #[test]
    fn eig_complex_pair() {
        let m = Mat2::new(-0.5, -0.3, 0.4, -0.6);
        let e = eig2(&m).unwrap();
        assert!(!e.is_real());
        for k in 0..2 {
            assert!(rel_residual(&m, &e, k) < 1e-10);
        }
        let rec = e.reconstruct().unwrap();
        assert!((rec.re() - m).max_abs() < 1e-12);
        assert!(rec.max_im() < 1e-12);
    }

    #[test]
    fn eig_defective_flagged() {
        let m = Mat2::new(-0.5, 1.0, 0.0, -0.5);
        assert_eq!(eig2(&m), Err(Error::Defective));
        // scalar multiple of identity is not defective
        assert!(eig2(&Mat2::IDENTITY.scale(-0.3)).is_ok());
    }

    #[test]
    fn kron_solve_identity_and_scaling() {
        let s = kron_solve4(&Mat4::IDENTITY, &Vec4([1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(s.x, Vec4([1.0, 2.0, 3.0, 4.0]));
        let s = kron_solve4(&Mat4::IDENTITY.scale(2.0), &Vec4([2.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(s.x, Vec4([1.0, 0.0, 0.0, 1.0]));
        assert!((s.condition - 1.0).abs() < 1e-15);
    }

    #[test]
    fn kron_solve_rejects_singular() {
        let mut m = Mat4::IDENTITY;
        m.0[3][3] = 0.0;
        assert!(matches!(
            kron_solve4(&m, &Vec4([1.0; 4])),
            Err(Error::IllConditioned { .. })
        ));
        let mut m = Mat4::IDENTITY;
        m.0[3][3] = 1e-14;
        match kron_solve4(&m, &Vec4([1.0; 4])) {
            Err(Error::IllConditioned { condition }) => assert!(condition > 1e12),
            other => panic!("expected ill-conditioned, got {other:?}"),
        }
    }

    #[test]
    fn hadamard_identities_trivial_cases() {
        let m = Mat2::IDENTITY;
        assert_eq!(hadamard_vec_lhs(&m, &Mat2::ONES), Mat4::IDENTITY);
        assert_eq!(hadamard_vec_rhs(&m, &Mat2::ONES).mul_vec(&Vec4([1.0, 2.0, 2.0, 3.0])),
            Vec4([1.0, 2.0, 2.0, 3.0]));
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        assert_eq!(hadamard_vec_lhs(&a, &Mat2::ZERO), Mat4::zero());
        assert_eq!(hadamard_vec_rhs(&a, &Mat2::ZERO), Mat4::zero());
    }

    #[test]
    fn kron_matches_definition() {
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let b = Mat2::new(0.0, 5.0, 6.0, 7.0);
        let k = a.kron(&b);
        assert_eq!(k.0[0], [0.0, 5.0, 0.0, 10.0]);
        assert_eq!(k.0[3], [18.0, 21.0, 24.0, 28.0]);
        // vec(M X + X N) = (I ⊗ M + Nᵀ ⊗ I) vec(X)
        let x = Mat2::new(0.3, -1.0, 2.0, 0.7);
        let lhs = (a * x + x * b).vec();
        let op = Mat2::IDENTITY.kron(&a) + b.transpose().kron(&Mat2::IDENTITY);
        let rhs = op.mul_vec(&x.vec());
        for i in 0..4 {
            assert!((lhs.0[i] - rhs.0[i]).abs() < 1e-14);
        }
    }
}
