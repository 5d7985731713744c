//! Ordinary least squares and the futures→stock adjusted-R² surface.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::par::Execution;

/// Minimum paired days for a surface cell.
pub const MIN_CELL_DAYS: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first.
    pub coef: Vec<f64>,
    /// `None` when `XᵀX` is singular.
    pub std_errors: Option<Vec<f64>>,
    pub r2: f64,
    pub adj_r2: f64,
    pub n: usize,
}

impl OlsFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.coef[0] + self.coef[1..].iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// `y = b₀ + Σ bₖ xₖ + e` by minimum-norm least squares (SVD). `adj R² = 1 − (1−R²)(n−1)/(n−p−1)`
/// with `p` regressors (`(n−2)` for a single regressor).
pub fn ols(y: &[f64], regressors: &[&[f64]]) -> Result<OlsFit> {
    let n = y.len();
    let p = regressors.len();
    if regressors.iter().any(|x| x.len() != n) {
        return Err(Error::Data("ols: regressor length mismatch".into()));
    }
    if n < p + 2 {
        return Err(Error::InsufficientData(format!("ols: {n} observations for {p} regressors")));
    }
    let x = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { regressors[j - 1][i] });
    let yv = DVector::from_column_slice(y);
    // Slopes from centred, unit-scaled regressors (constant columns become
    // exactly zero and drop out of the rank), then the intercept.
    let means: Vec<f64> = regressors.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let scales: Vec<f64> = regressors
        .iter()
        .zip(&means)
        .map(|(c, m)| {
            let ss = c.iter().map(|v| (v - m).powi(2)).sum::<f64>().sqrt();
            if ss > 1e-12 * m.abs() * (n as f64).sqrt() { ss } else { 0.0 }
        })
        .collect();
    let z = DMatrix::from_fn(n, p, |i, j| {
        if scales[j] > 0.0 { (regressors[j][i] - means[j]) / scales[j] } else { 0.0 }
    });
    let ymean = yv.mean();
    let yc = yv.map(|v| v - ymean);
    let mut coef = DVector::zeros(p + 1);
    if p > 0 {
        let svd = z.svd(true, true);
        let tol = 1e-10 * svd.singular_values.max();
        let b = svd.solve(&yc, tol).map_err(|e| Error::Numerical(e.to_string()))?;
        for j in 0..p {
            if scales[j] > 0.0 {
                coef[j + 1] = b[j] / scales[j];
            }
        }
    }
    coef[0] = ymean - (0..p).map(|j| coef[j + 1] * means[j]).sum::<f64>();
    let resid = &yv - &x * &coef;
    let sse = resid.norm_squared();
    let mean = yv.mean();
    let sst: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r2 = if sst > 0.0 { 1.0 - sse / sst } else { 1.0 };
    let dof = (n - p - 1) as f64;
    let adj_r2 = 1.0 - (1.0 - r2) * (n - 1) as f64 / dof;
    let sigma2 = sse / dof;
    let std_errors = (x.transpose() * &x)
        .try_inverse()
        .map(|inv| (0..=p).map(|k| (sigma2 * inv[(k, k)]).max(0.0).sqrt()).collect());
    Ok(OlsFit {
        coef: coef.iter().copied().collect(),
        std_errors,
        r2,
        adj_r2,
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceCell {
    pub t1: f64,
    pub t2: f64,
    /// `None` with fewer than [`MIN_CELL_DAYS`] paired days.
    pub adj_r2: Option<f64>,
    pub n: usize,
}

/// Series of daily vols keyed by the cut time (seconds).
pub type CutSeries = (f64, Vec<Option<f64>>);

/// Regresses each stock series `h^s(T₁)` on each futures series `h^f(T₂)`
/// over the days where both exist; cells are listed `T₁`-major.
pub fn futures_r2_surface(stock: &[CutSeries], futures: &[CutSeries], exec: Execution) -> Result<Vec<SurfaceCell>> {
    let pairs: Vec<(usize, usize)> = (0..stock.len()).flat_map(|a| (0..futures.len()).map(move |b| (a, b))).collect();
    let cells = exec.map_slice(&pairs, |&(a, b)| {
        let (t1, ys) = &stock[a];
        let (t2, xs) = &futures[b];
        let (y, x): (Vec<f64>, Vec<f64>) = ys
            .iter()
            .zip(xs)
            .filter_map(|(y, x)| Some(((*y)?, (*x)?)))
            .unzip();
        let adj_r2 = if y.len() >= MIN_CELL_DAYS {
            ols(&y, &[&x]).ok().map(|f| f.adj_r2).filter(|v| v.is_finite())
        } else {
            None
        };
        SurfaceCell {
            t1: *t1,
            t2: *t2,
            adj_r2,
            n: y.len(),
        }
    });
    if cells.iter().all(|c| c.adj_r2.is_none()) {
        return Err(Error::InsufficientData("R² surface: every cell is missing".into()));
    }
    Ok(cells)
}

/// The cell with the largest adjusted R².
pub fn surface_argmax(cells: &[SurfaceCell]) -> Option<SurfaceCell> {
    cells
        .iter()
        .filter(|c| c.adj_r2.is_some())
        .max_by(|a, b| a.adj_r2.unwrap().total_cmp(&b.adj_r2.unwrap()))
        .copied()
}
