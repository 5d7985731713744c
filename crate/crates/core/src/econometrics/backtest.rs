//! Exceedance counts and coverage curves of `|ΔP|` against `k·σ`.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Exceedance {
    pub count: usize,
    pub fraction: f64,
    /// Indices of the days with `|ΔP| > k·σ`.
    pub flagged: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoveragePoint {
    pub k: f64,
    /// Share of days with `|ΔP| ≤ k·σ`.
    pub fraction: f64,
    /// `2Φ(k) − 1`.
    pub normal: f64,
}

fn check(abs_changes: &[f64], vols: &[f64]) -> Result<()> {
    if abs_changes.len() != vols.len() {
        return Err(Error::Data(format!(
            "{} price changes vs {} vols",
            abs_changes.len(),
            vols.len()
        )));
    }
    if abs_changes.is_empty() {
        return Err(Error::InsufficientData("no days to backtest".into()));
    }
    Ok(())
}

pub fn backtest_exceedance(abs_changes: &[f64], vols: &[f64], k: f64) -> Result<Exceedance> {
    check(abs_changes, vols)?;
    let flagged: Vec<usize> = abs_changes
        .iter()
        .zip(vols)
        .enumerate()
        .filter(|(_, (d, s))| d.abs() > k * **s)
        .map(|(i, _)| i)
        .collect();
    Ok(Exceedance {
        count: flagged.len(),
        fraction: flagged.len() as f64 / abs_changes.len() as f64,
        flagged,
    })
}

pub fn coverage_curve(abs_changes: &[f64], vols: &[f64], k_grid: &[f64]) -> Result<Vec<CoveragePoint>> {
    check(abs_changes, vols)?;
    let n = abs_changes.len() as f64;
    let std = Normal::standard();
    Ok(k_grid
        .iter()
        .map(|&k| {
            let inside = abs_changes.iter().zip(vols).filter(|(d, s)| d.abs() <= k * **s).count();
            CoveragePoint {
                k,
                fraction: inside as f64 / n,
                normal: 2.0 * std.cdf(k) - 1.0,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normal_days(n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let vols: Vec<f64> = (0..n).map(|i| 0.5 + (i % 7) as f64 * 0.3).collect();
        let d = vols
            .iter()
            .map(|s| {
                let e: f64 = StandardNormal.sample(&mut rng);
                (s * e).abs()
            })
            .collect();
        (d, vols)
    }

    #[test]
    fn normal_tail() {
        let n = 20_000;
        let (d, v) = normal_days(n);
        let e = backtest_exceedance(&d, &v, 2.0).unwrap();
        let p = 0.0455;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((e.fraction - p).abs() < 3.0 * se, "{}", e.fraction);
        assert_eq!(backtest_exceedance(&d, &v, 0.0).unwrap().fraction, 1.0);
    }

    #[test]
    fn coverage_tracks_normal_and_complements_backtest() {
        let n = 20_000;
        let (d, v) = normal_days(n);
        let grid: Vec<f64> = (0..=40).map(|k| k as f64 * 0.1).collect();
        let c = coverage_curve(&d, &v, &grid).unwrap();
        for pt in &c {
            let se = (pt.normal * (1.0 - pt.normal) / n as f64).sqrt().max(1e-9);
            assert!((pt.fraction - pt.normal).abs() < 3.0 * se + 1e-12, "{pt:?}");
            let e = backtest_exceedance(&d, &v, pt.k).unwrap();
            assert_eq!(e.fraction + pt.fraction, 1.0);
        }
        assert_eq!(c[0].fraction, 0.0);
        assert_eq!(coverage_curve(&d, &v, &[1e9]).unwrap()[0].fraction, 1.0);
    }

    #[test]
    fn mismatch() {
        assert!(backtest_exceedance(&[1.0], &[1.0, 2.0], 2.0).is_err());
        assert!(coverage_curve(&[1.0], &[], &[1.0]).is_err());
    }
}
