//! Empirical mark summaries: fitted-intensity-weighted sample means of the
//! marks at each type's events.

use crate::error::{Error, Result};
use crate::events::{Event, EventStream};
use crate::mat2::{Mat2, Vec2};
use crate::model::{MarkSummaries, MarkedHawkesParams};
use crate::moments::MarkDependence;

use super::likelihood::fitted_intensities;

/// Column `j` of every summary averages the type-`j` marks with weights
/// `λ̂ⱼ` (`Z̄`, `Z̄⁽²⁾`), `λ̂ᵢλ̂ⱼ` (`Z̄_{λλᵀ}`) and `Nᵢλ̂ⱼ` (`Z̄_{Nλᵀ}`, with
/// `Nᵢ` the tick-weighted count before the event). `Independent` uses the
/// plain per-type sample moments for all four.
pub fn mark_summaries(
    params: &MarkedHawkesParams,
    stream: &EventStream,
    dependence: MarkDependence,
) -> Result<MarkSummaries> {
    if dependence == MarkDependence::Independent {
        let mut s1 = [0.0; 2];
        let mut s2 = [0.0; 2];
        let mut n = [0.0; 2];
        for e in &stream.events {
            let j = e.side.index();
            let z = e.mark as f64;
            s1[j] += z;
            s2[j] += z * z;
            n[j] += 1.0;
        }
        if n.contains(&0.0) {
            return Err(Error::Data("mark summaries: a type has no events".into()));
        }
        return Ok(MarkSummaries::independent(
            Vec2([s1[0] / n[0], s1[1] / n[1]]),
            Vec2([s2[0] / n[0], s2[1] / n[1]]),
        ));
    }

    let lam = fitted_intensities(params, stream)?;
    weighted_summaries(&stream.events, &lam)
}

/// Dependent-mode summaries from the intensities `lam[n] = λ̂(τₙ⁻)`.
fn weighted_summaries(events: &[Event], lam: &[Vec2]) -> Result<MarkSummaries> {
    // [num, den] per matrix entry
    let mut z1 = [[0.0f64; 2]; 2];
    let mut z2 = [[0.0f64; 2]; 2];
    let mut w1 = [0.0f64; 2];
    let mut ll = [[[0.0f64; 2]; 2]; 2];
    let mut nl = [[[0.0f64; 2]; 2]; 2];
    let mut counts = [0.0f64; 2];
    for (e, l) in events.iter().zip(lam) {
        let j = e.side.index();
        let z = e.mark as f64;
        let lj = l.0[j];
        w1[j] += lj;
        z1[0][j] += lj * z;
        z2[0][j] += lj * z * z;
        for i in 0..2 {
            let wl = l.0[i] * lj;
            ll[i][j][0] += wl * z;
            ll[i][j][1] += wl;
            let wn = counts[i] * lj;
            nl[i][j][0] += wn * z;
            nl[i][j][1] += wn;
        }
        counts[j] += z;
    }
    let ratio = |num: f64, den: f64, what: &str| {
        if den > 0.0 {
            Ok(num / den)
        } else {
            Err(Error::Data(format!("mark summaries: zero total weight for {what}")))
        }
    };
    let mut zbar = Mat2::ZERO;
    let mut zbar2 = Mat2::ZERO;
    let mut zbar_ll = Mat2::ZERO;
    let mut zbar_nl = Mat2::ZERO;
    for j in 0..2 {
        let m1 = ratio(z1[0][j], w1[j], "zbar")?;
        let m2 = ratio(z2[0][j], w1[j], "zbar2")?;
        for i in 0..2 {
            zbar.0[i][j] = m1;
            zbar2.0[i][j] = m2;
            zbar_ll.0[i][j] = ratio(ll[i][j][0], ll[i][j][1], "zbar_ll")?;
            zbar_nl.0[i][j] = ratio(nl[i][j][0], nl[i][j][1], "zbar_nl")?;
        }
    }
    Ok(MarkSummaries {
        zbar,
        zbar2,
        zbar_ll,
        zbar_nl,
    })
}
