//! Quote ingestion, mid prices, grid filtering into up/down tick events,
//! realized volatility and daily bars.
//!
//! Times are integer nanoseconds throughout; the filter grid is anchored
//! at the session open and the prevailing mid at a grid point is the last
//! observation at or before it.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::events::{Event, EventStream, Side};

/// Quotes are snapped to multiples of `1 / PRICE_SCALE` before the mid is
/// formed, so equal decimal mids compare equal however they arise.
pub const PRICE_SCALE: f64 = 1e8;

/// Tolerance, in ticks, for a mid change to count as a whole number of ticks.
pub const TICK_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct QuoteTick {
    pub ts_ns: i64,
    pub bid: f64,
    pub ask: f64,
    pub symbol: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidPoint {
    pub ts_ns: i64,
    pub mid: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QualityReport {
    pub rows: usize,
    pub crossed: usize,
    pub out_of_order: usize,
    pub malformed: usize,
}

impl QualityReport {
    pub fn to_kv(&self) -> String {
        format!(
            "rows={}\ncrossed={}\nout_of_order={}\nmalformed={}\n",
            self.rows, self.crossed, self.out_of_order, self.malformed
        )
    }
}

/// A trading session `[open, close]` in nanoseconds UTC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub date: String,
    pub open_ns: i64,
    pub close_ns: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DailyBar {
    pub date: String,
    pub open: f64,
    pub close: f64,
    /// `(close − open) / open`.
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealizedVol {
    /// `√Σ r²` of interval log-returns.
    pub log_rv: f64,
    /// `√Σ ΔS²` of interval price changes (currency).
    pub price_rv: f64,
    pub intervals: usize,
}

/// Streaming reader over the `ts_ns,bid,ask,symbol` tick CSV. Malformed
/// rows are skipped and counted rather than aborting the file.
pub struct TickReader<R: Read> {
    records: csv::StringRecordsIntoIter<R>,
    quality: QualityReport,
}

impl<R: Read> TickReader<R> {
    pub fn new(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let headers = rdr.headers()?;
        if headers.iter().collect::<Vec<_>>() != ["ts_ns", "bid", "ask", "symbol"] {
            return Err(Error::Data(format!("unexpected tick header {headers:?}")));
        }
        Ok(TickReader {
            records: rdr.into_records(),
            quality: QualityReport::default(),
        })
    }

    pub fn quality(&self) -> &QualityReport {
        &self.quality
    }
}

impl<R: Read> Iterator for TickReader<R> {
    type Item = QuoteTick;

    fn next(&mut self) -> Option<QuoteTick> {
        for rec in self.records.by_ref() {
            self.quality.rows += 1;
            let parsed = rec.ok().and_then(|rec| {
                Some(QuoteTick {
                    ts_ns: rec.get(0)?.parse().ok()?,
                    bid: rec.get(1)?.parse().ok()?,
                    ask: rec.get(2)?.parse().ok()?,
                    symbol: rec.get(3)?.to_string(),
                })
            });
            match parsed {
                Some(t) if t.bid.is_finite() && t.ask.is_finite() => return Some(t),
                _ => self.quality.malformed += 1,
            }
        }
        None
    }
}

/// Mid prices with consecutive duplicates collapsed. Crossed quotes
/// (`ask < bid`), non-positive bids and out-of-order timestamps are skipped
/// and counted in `quality`.
pub fn mid_price<I: IntoIterator<Item = QuoteTick>>(ticks: I, quality: &mut QualityReport) -> Vec<MidPoint> {
    let mut out: Vec<MidPoint> = Vec::new();
    let mut last_ts = i64::MIN;
    for t in ticks {
        if t.ts_ns < last_ts {
            quality.out_of_order += 1;
            continue;
        }
        if t.ask < t.bid {
            quality.crossed += 1;
            continue;
        }
        if !(t.bid > 0.0) {
            quality.malformed += 1;
            continue;
        }
        last_ts = t.ts_ns;
        let mid = ((t.bid * PRICE_SCALE).round() + (t.ask * PRICE_SCALE).round()) / (2.0 * PRICE_SCALE);
        if out.last().is_some_and(|m| m.mid == mid) {
            continue;
        }
        out.push(MidPoint { ts_ns: t.ts_ns, mid });
    }
    out
}

/// Index of the last mid at or before `ts`.
fn prevailing(mids: &[MidPoint], ts: i64) -> Option<usize> {
    mids.partition_point(|m| m.ts_ns <= ts).checked_sub(1)
}

/// Samples the prevailing mid at `open + k·dt`, `k = 1, 2, …` up to the
/// close. Each change between consecutive samples becomes one event at the
/// time the sampled price was set, with mark `|Δ| / tick`.
pub fn filter_grid(mids: &[MidPoint], session: &Session, dt_ns: i64, tick_size: f64) -> Result<EventStream> {
    if dt_ns <= 0 || !(tick_size > 0.0) {
        return Err(Error::InvalidParams("dt and tick size must be positive".into()));
    }
    if session.close_ns <= session.open_ns {
        return Err(Error::InvalidParams("session close must follow open".into()));
    }
    if mids.windows(2).any(|w| w[1].ts_ns < w[0].ts_ns) {
        return Err(Error::Data("mids are not time-sorted".into()));
    }
    let n_grid = (session.close_ns - session.open_ns) / dt_ns;
    let mut prev = prevailing(mids, session.open_ns).map(|i| mids[i].mid);
    let mut events = Vec::new();
    for k in 1..=n_grid {
        let g = session.open_ns + k * dt_ns;
        let Some(ix) = prevailing(mids, g) else {
            continue;
        };
        let cur = mids[ix].mid;
        let Some(p) = prev else {
            prev = Some(cur);
            continue;
        };
        if cur != p {
            let ticks = (cur - p) / tick_size;
            let mark = ticks.abs().round();
            if (ticks.abs() - mark).abs() > TICK_TOLERANCE || mark == 0.0 {
                return Err(Error::TickSizeMismatch {
                    change: cur - p,
                    tick: tick_size,
                });
            }
            // the mid that set the sampled price: the earliest record of the
            // run ending at `ix` with this value (runs are deduplicated)
            let set_at = mids[ix].ts_ns.max(session.open_ns);
            events.push(Event {
                time: (set_at - session.open_ns) as f64 / 1e9,
                side: if ticks > 0.0 { Side::Up } else { Side::Down },
                mark: mark as u32,
            });
        }
        prev = Some(cur);
    }
    let horizon = (session.close_ns - session.open_ns) as f64 / 1e9;
    EventStream::new(session.open_ns, tick_size, horizon, events)
}

/// Rebuilds the grid-sampled price path from events: the price after the
/// last event at or before each grid point.
pub fn reconstruct_grid(stream: &EventStream, initial: f64, dt_ns: i64, n_grid: i64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_grid as usize);
    let mut price_ticks = 0i64;
    let mut it = stream.events.iter().peekable();
    for k in 1..=n_grid {
        let g = (k * dt_ns) as f64 / 1e9;
        while let Some(e) = it.next_if(|e| e.time <= g + 0.5e-9) {
            price_ticks += e.side.sign() * e.mark as i64;
        }
        out.push(initial + price_ticks as f64 * stream.tick_size);
    }
    out
}

/// Realized volatility of the mid sampled every `interval_ns` from the
/// session open (last observation carried forward). Sessions without a
/// quote inside `[open, close]` are an error.
pub fn realized_vol(mids: &[MidPoint], session: &Session, interval_ns: i64) -> Result<RealizedVol> {
    if interval_ns <= 0 {
        return Err(Error::InvalidParams("interval must be positive".into()));
    }
    let lo = mids.partition_point(|m| m.ts_ns < session.open_ns);
    if mids.get(lo).is_none_or(|m| m.ts_ns > session.close_ns) {
        return Err(Error::InsufficientData(format!("no quotes in session {}", session.date)));
    }
    let n = (session.close_ns - session.open_ns) / interval_ns;
    let samples: Vec<f64> = (0..=n)
        .filter_map(|k| prevailing(mids, session.open_ns + k * interval_ns).map(|i| mids[i].mid))
        .collect();
    if samples.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} realized-vol samples in session {}",
            samples.len(),
            session.date
        )));
    }
    let (mut l2, mut p2) = (0.0, 0.0);
    for w in samples.windows(2) {
        l2 += (w[1] / w[0]).ln().powi(2);
        p2 += (w[1] - w[0]).powi(2);
    }
    Ok(RealizedVol {
        log_rv: l2.sqrt(),
        price_rv: p2.sqrt(),
        intervals: samples.len() - 1,
    })
}

/// One bar per session from the first and last mid inside `[open, close]`;
/// sessions without quotes are returned as gaps.
pub fn daily_bars(mids: &[MidPoint], calendar: &[Session]) -> (Vec<DailyBar>, Vec<String>) {
    let mut bars = Vec::new();
    let mut gaps = Vec::new();
    for s in calendar {
        let lo = mids.partition_point(|m| m.ts_ns < s.open_ns);
        let hi = mids.partition_point(|m| m.ts_ns <= s.close_ns);
        if lo >= hi {
            gaps.push(s.date.clone());
            continue;
        }
        let (open, close) = (mids[lo].mid, mids[hi - 1].mid);
        bars.push(DailyBar {
            date: s.date.clone(),
            open,
            close,
            ret: (close - open) / open,
        });
    }
    (bars, gaps)
}

pub fn write_mids_csv<W: Write>(mids: &[MidPoint], mut w: W) -> Result<()> {
    writeln!(w, "ts_ns,mid")?;
    for m in mids {
        writeln!(w, "{},{}", m.ts_ns, m.mid)?;
    }
    Ok(())
}

pub fn write_bars_csv<W: Write>(bars: &[DailyBar], mut w: W) -> Result<()> {
    writeln!(w, "date,open,close,ret")?;
    for b in bars {
        writeln!(w, "{},{},{},{}", b.date, b.open, b.close, b.ret)?;
    }
    Ok(())
}

pub fn read_bars_csv<R: Read>(r: R) -> Result<Vec<DailyBar>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "open", "close", "ret"] {
        return Err(Error::Data(format!("unexpected bar header {headers:?}")));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let num = |i: usize| {
                rec[i]
                    .parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad number '{}'", &rec[i])))
            };
            Ok(DailyBar {
                date: rec[0].to_string(),
                open: num(1)?,
                close: num(2)?,
                ret: num(3)?,
            })
        })
        .collect()
}

/// Calendar CSV: `date,open_ns,close_ns`.
pub fn read_calendar_csv<R: Read>(r: R) -> Result<Vec<Session>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["date", "open_ns", "close_ns"] {
        return Err(Error::Data(format!("unexpected calendar header {headers:?}")));
    }
    rdr.records()
        .map(|rec| {
            let rec = rec?;
            let num = |i: usize| {
                rec[i]
                    .parse::<i64>()
                    .map_err(|_| Error::Data(format!("bad timestamp '{}'", &rec[i])))
            };
            Ok(Session {
                date: rec[0].to_string(),
                open_ns: num(1)?,
                close_ns: num(2)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: i64 = 1_000_000_000;
    const MS: i64 = 1_000_000;

    fn tick(ts: i64, bid: f64, ask: f64) -> QuoteTick {
        QuoteTick {
            ts_ns: ts,
            bid,
            ask,
            symbol: "X".into(),
        }
    }

    fn mid(ts: i64, mid: f64) -> MidPoint {
        MidPoint { ts_ns: ts, mid }
    }

    fn session(secs: i64) -> Session {
        Session {
            date: "d".into(),
            open_ns: 0,
            close_ns: secs * S,
        }
    }

    #[test]
    fn mid_dedup_and_crossed() {
        let mut q = QualityReport::default();
        let m = mid_price([tick(0, 100.00, 100.02)], &mut q);
        assert_eq!(m, vec![mid(0, 100.01)]);
        let m = mid_price([tick(0, 100.00, 100.02), tick(1, 100.01, 100.01)], &mut q);
        assert_eq!(m.len(), 1);
        let m = mid_price([tick(0, 100.0, 100.02), tick(5, 100.0, 100.02), tick(9, 100.0, 100.02)], &mut q);
        assert_eq!(m.len(), 1);
        let mut ticks: Vec<QuoteTick> = (0..10).map(|k| tick(k, 100.0 + k as f64 * 0.01, 100.02 + k as f64 * 0.01)).collect();
        ticks[4] = tick(4, 100.05, 100.03);
        let m = mid_price(ticks, &mut q);
        assert_eq!(m.len(), 9);
        assert_eq!(q.crossed, 1);
    }

    #[test]
    fn filter_hand_traces() {
        let dt = 100 * MS;
        // single +0.01 change at 0.03 s
        let s = filter_grid(&[mid(0, 100.0), mid(30 * MS, 100.01)], &session(1), dt, 0.01).unwrap();
        assert_eq!(s.events, vec![Event { time: 0.03, side: Side::Up, mark: 1 }]);
        // +0.01 at 0.02 and −0.01 at 0.07: nets to zero at the grid point
        let s = filter_grid(&[mid(0, 100.0), mid(20 * MS, 100.01), mid(70 * MS, 100.0)], &session(1), dt, 0.01).unwrap();
        assert!(s.events.is_empty());
        // +0.03 at 0.04: one event, mark 3
        let s = filter_grid(&[mid(0, 100.0), mid(40 * MS, 100.03)], &session(1), dt, 0.01).unwrap();
        assert_eq!(s.events, vec![Event { time: 0.04, side: Side::Up, mark: 3 }]);
        // +0.01 at 0.02 then +0.01 at 0.07: stamped at the last change
        let s = filter_grid(&[mid(0, 100.0), mid(20 * MS, 100.01), mid(70 * MS, 100.02)], &session(1), dt, 0.01).unwrap();
        assert_eq!(s.events, vec![Event { time: 0.07, side: Side::Up, mark: 2 }]);
    }

    #[test]
    fn filter_tick_mismatch() {
        let r = filter_grid(&[mid(0, 100.0), mid(30 * MS, 100.005)], &session(1), 100 * MS, 0.01);
        assert!(matches!(r, Err(Error::TickSizeMismatch { .. })));
    }

    #[test]
    fn filter_reconstructs_grid_path() {
        // a random-walk mid with many sub-grid changes
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 33) as i64
        };
        let mut mids = vec![mid(0, 50.0)];
        let mut ticks = 5000i64;
        let mut t = 0;
        for _ in 0..3000 {
            t += 1 + next() % (60 * MS);
            ticks += next() % 5 - 2;
            let m = ticks as f64 * 0.01;
            if mids.last().unwrap().mid != m {
                mids.push(mid(t, m));
            }
        }
        let sess = Session {
            date: "d".into(),
            open_ns: 0,
            close_ns: t + S,
        };
        let dt = 100 * MS;
        let s = filter_grid(&mids, &sess, dt, 0.01).unwrap();
        let n_grid = (sess.close_ns - sess.open_ns) / dt;
        assert!(s.len() as i64 <= n_grid);
        let rebuilt = reconstruct_grid(&s, 50.0, dt, n_grid);
        for k in 1..=n_grid {
            let want = mids[prevailing(&mids, k * dt).unwrap()].mid;
            assert!((rebuilt[(k - 1) as usize] - want).abs() < 1e-9, "grid {k}");
        }
        assert!(s.events.windows(2).all(|w| w[0].time < w[1].time));
    }

    #[test]
    fn realized_vol_cases() {
        let sess = session(3000);
        let flat = realized_vol(&[mid(0, 100.0)], &sess, 300 * S).unwrap();
        assert_eq!(flat.log_rv, 0.0);
        // alternating 100 / 101 every interval
        let mids: Vec<MidPoint> = (0..=10).map(|k| mid(k * 300 * S, if k % 2 == 0 { 100.0 } else { 101.0 })).collect();
        let rv = realized_vol(&mids, &sess, 300 * S).unwrap();
        let r = (101.0f64 / 100.0).ln();
        assert!((rv.log_rv - (10.0f64).sqrt() * r).abs() < 1e-12);
        assert!((rv.price_rv - (10.0f64).sqrt()).abs() < 1e-12);
        assert!(realized_vol(&[], &sess, 300 * S).is_err());
        // quotes only before the session: no carried-over day
        let later = Session {
            date: "later".into(),
            open_ns: 10_000 * S,
            close_ns: 13_000 * S,
        };
        assert!(matches!(realized_vol(&mids, &later, 300 * S), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn bars() {
        let cal: Vec<Session> = (0..3)
            .map(|d| Session {
                date: format!("day{d}"),
                open_ns: d * 100 * S,
                close_ns: d * 100 * S + 50 * S,
            })
            .collect();
        let mids = vec![
            mid(0, 100.0),
            mid(10 * S, 101.0),
            mid(100 * S, 50.0),
            mid(140 * S, 50.0),
            mid(200 * S, 10.0),
            mid(249 * S, 11.0),
        ];
        let (bars, gaps) = daily_bars(&mids, &cal);
        assert!(gaps.is_empty());
        assert_eq!(bars.len(), 3);
        assert!((bars[0].ret - 0.01).abs() < 1e-15);
        assert_eq!(bars[1].ret, 0.0);
        assert_eq!(bars[2].date, "day2");
        let (bars, gaps) = daily_bars(&mids[..2], &cal);
        assert_eq!((bars.len(), gaps.len()), (1, 2));
        let mut buf = Vec::new();
        write_bars_csv(&bars, &mut buf).unwrap();
        assert_eq!(read_bars_csv(&buf[..]).unwrap(), bars);
    }

    #[test]
    fn tick_reader_counts_bad_rows() {
        let text = "ts_ns,bid,ask,symbol\n1,100.00,100.02,X\nfoo,1,2,X\n2,100.01,100.03,X\n";
        let mut rdr = TickReader::new(text.as_bytes()).unwrap();
        let ticks: Vec<QuoteTick> = rdr.by_ref().collect();
        assert_eq!(ticks.len(), 2);
        assert_eq!(rdr.quality().malformed, 1);
        assert_eq!(rdr.quality().rows, 3);
    }
}
