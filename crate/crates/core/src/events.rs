//! Up/down price-change events with integer tick marks, and the event CSV
//! format (`time_s,side,mark`) shared by the filter, the simulator and the
//! estimator.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Spacing used to separate simultaneous events, in seconds.
pub const TIE_BREAK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Up,
    Down,
}

impl Side {
    /// 0 for up moves, 1 for down moves.
    pub fn index(self) -> usize {
        match self {
            Side::Up => 0,
            Side::Down => 1,
        }
    }

    pub fn from_index(i: usize) -> Side {
        if i == 0 {
            Side::Up
        } else {
            Side::Down
        }
    }

    pub fn sign(self) -> i64 {
        match self {
            Side::Up => 1,
            Side::Down => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Seconds from session open.
    pub time: f64,
    pub side: Side,
    /// Jump size in ticks, at least 1.
    pub mark: u32,
}

/// Time-ordered events on `(0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventStream {
    pub session_open_ns: i64,
    pub tick_size: f64,
    pub horizon: f64,
    pub events: Vec<Event>,
}

impl EventStream {
    /// Validates ordering and marks. Events sharing a timestamp are pushed
    /// apart by [`TIE_BREAK`] in arrival order; decreasing times are an error.
    pub fn new(session_open_ns: i64, tick_size: f64, horizon: f64, mut events: Vec<Event>) -> Result<Self> {
        break_ties(&mut events)?;
        if let Some(e) = events.iter().find(|e| e.mark == 0) {
            return Err(Error::Data(format!("zero mark at t={}", e.time)));
        }
        if let Some(last) = events.last() {
            if last.time > horizon {
                return Err(Error::Data(format!(
                    "event at {} beyond horizon {horizon}",
                    last.time
                )));
            }
        }
        Ok(EventStream {
            session_open_ns,
            tick_size,
            horizon,
            events,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, side: Side) -> usize {
        self.events.iter().filter(|e| e.side == side).count()
    }

    /// Tick-weighted net count `Σ sign · mark`.
    pub fn net_ticks(&self) -> i64 {
        self.events.iter().map(|e| e.side.sign() * e.mark as i64).sum()
    }

    /// Events in `[start, end]`, re-timed to start at zero.
    pub fn window(&self, start: f64, end: f64) -> EventStream {
        let events = self
            .events
            .iter()
            .filter(|e| e.time > start && e.time <= end)
            .map(|e| Event {
                time: e.time - start,
                ..*e
            })
            .collect();
        EventStream {
            session_open_ns: self.session_open_ns + (start * 1e9).round() as i64,
            tick_size: self.tick_size,
            horizon: end - start,
            events,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_events_csv(&self.events, w)
    }
}

fn break_ties(events: &mut [Event]) -> Result<()> {
    let mut prev_raw = f64::NEG_INFINITY;
    for k in 0..events.len() {
        let raw = events[k].time;
        if raw < prev_raw {
            return Err(Error::Data(format!("unsorted events: {raw} after {prev_raw}")));
        }
        prev_raw = raw;
        if k > 0 && events[k].time <= events[k - 1].time {
            events[k].time = events[k - 1].time + TIE_BREAK;
        }
    }
    Ok(())
}

/// Writes `time_s,side,mark` rows; time with nanosecond precision and side
/// as `1` / `-1`.
pub fn write_events_csv<W: Write>(events: &[Event], mut w: W) -> Result<()> {
    writeln!(w, "time_s,side,mark")?;
    for e in events {
        writeln!(w, "{:.9},{},{}", e.time, e.side.sign(), e.mark)?;
    }
    Ok(())
}

/// Reads the event CSV. `+1` is accepted for up moves.
pub fn read_events_csv<R: Read>(r: R) -> Result<Vec<Event>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time_s", "side", "mark"] {
        return Err(Error::Data(format!("unexpected event header {headers:?}")));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Data(format!("row {}: bad {what}", i + 1));
        let time: f64 = rec[0].parse().map_err(|_| bad("time"))?;
        let side = match &rec[1] {
            "1" | "+1" => Side::Up,
            "-1" => Side::Down,
            _ => return Err(bad("side")),
        };
        let mark: u32 = rec[2].parse().map_err(|_| bad("mark"))?;
        if !time.is_finite() || time < 0.0 {
            return Err(bad("time"));
        }
        out.push(Event { time, side, mark });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(time: f64, side: Side, mark: u32) -> Event {
        Event { time, side, mark }
    }

    #[test]
    fn ties_are_separated_in_arrival_order() {
        let s = EventStream::new(
            0,
            0.01,
            10.0,
            vec![ev(1.0, Side::Up, 1), ev(1.0, Side::Down, 2), ev(1.0, Side::Up, 1)],
        )
        .unwrap();
        assert_eq!(s.events[1].time, 1.0 + TIE_BREAK);
        assert!((s.events[2].time - (1.0 + 2.0 * TIE_BREAK)).abs() < 1e-15);
        assert_eq!(s.events[1].side, Side::Down);
    }

    #[test]
    fn unsorted_rejected() {
        let r = EventStream::new(0, 0.01, 10.0, vec![ev(2.0, Side::Up, 1), ev(1.0, Side::Up, 1)]);
        assert!(matches!(r, Err(Error::Data(_))));
    }

    #[test]
    fn csv_roundtrip() {
        let events = vec![ev(0.03, Side::Up, 1), ev(1.25, Side::Down, 3)];
        let mut buf = Vec::new();
        write_events_csv(&events, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "time_s,side,mark\n0.030000000,1,1\n1.250000000,-1,3\n");
        assert_eq!(read_events_csv(&buf[..]).unwrap(), events);
        let plus = "time_s,side,mark\n0.5,+1,2\n";
        assert_eq!(read_events_csv(plus.as_bytes()).unwrap()[0].side, Side::Up);
    }

    #[test]
    fn window_retimes() {
        let s = EventStream::new(
            0,
            0.01,
            10.0,
            vec![ev(1.0, Side::Up, 1), ev(5.0, Side::Down, 1), ev(9.0, Side::Up, 2)],
        )
        .unwrap();
        let w = s.window(4.0, 9.0);
        assert_eq!(w.horizon, 5.0);
        assert_eq!(w.events.len(), 2);
        assert_eq!(w.events[0].time, 1.0);
        assert_eq!(w.net_ticks(), 1);
    }
}
