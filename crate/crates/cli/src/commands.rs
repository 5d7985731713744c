//! One function per subcommand. Each reads its settings, writes its
//! artifacts atomically and records a manifest next to the first output.

use std::collections::HashMap;
use std::io::Read;
use std::path::{Path, PathBuf};

use hawkes_vol::econometrics::{
    ar2_forecast, backtest_exceedance, combined_weights, coverage_curve, futures_lm_forecast, futures_r2_surface,
    gjr_fit, gjr_rolling, surface_argmax, CutSeries, ForecastReport,
};
use hawkes_vol::estimate::{
    fit_mle, intraday_rolling, mark_summaries, read_fit_csv, residual_report, write_fit_csv, FitOptions,
    IntradayOptions,
};
use hawkes_vol::events::{read_events_csv, write_events_csv, EventStream};
use hawkes_vol::marketdata::{
    daily_bars, filter_grid, mid_price, read_bars_csv, read_calendar_csv, realized_vol, write_bars_csv, DailyBar,
    MidPoint, QualityReport, Session, TickReader,
};
use hawkes_vol::moments::{count_variance, price_volatility, MarkDependence, VolMode};
use hawkes_vol::par::Execution;
use hawkes_vol::simulate::{mc_variance, path_seed, simulate, MarkModel};
use hawkes_vol::{Constraint, MarkSummaries, MarkedHawkesParams};

use crate::config::parse_grid;
use crate::error::CliError;
use crate::io::{opt, read_vol_csv, write_atomic, Run, VolRow};

type CmdResult = Result<(), CliError>;

const EXEC: Execution = Execution::Parallel;

fn cfg<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn secs_to_ns(key: &str, s: f64) -> Result<i64, CliError> {
    let ns = (s * 1e9).round();
    if ns < 1.0 {
        return Err(CliError::Config(format!("{key} is below one nanosecond")));
    }
    Ok(ns as i64)
}

fn file_label(p: &Path) -> String {
    p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned())
}

/// Parameters from a `key=value` block or a fit CSV (row `date`, default
/// the first).
fn load_params(run: &Run) -> Result<MarkedHawkesParams, CliError> {
    let path = run.settings.path("params")?;
    let mut text = String::new();
    run.open("params", &path)?.read_to_string(&mut text)?;
    if text.starts_with("date,") {
        let fits = read_fit_csv(text.as_bytes()).map_err(cfg)?;
        let pick = run.settings.get("date");
        let row = match &pick {
            Some(d) => fits.into_iter().find(|(date, _)| date == d),
            None => fits.into_iter().next(),
        };
        row.map(|(_, f)| f.params)
            .ok_or_else(|| CliError::Config(format!("no fit row {}", pick.unwrap_or_default())))
    } else {
        MarkedHawkesParams::from_kv(&text).map_err(cfg)
    }
}

pub fn parse_mark_model(s: &str) -> Result<MarkModel, CliError> {
    let bad = || CliError::Config(format!("bad mark_model '{s}'"));
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let m = match parts.as_slice() {
        ["constant"] => MarkModel::Constant,
        ["geometric", mean] => MarkModel::Geometric { mean: num(mean)? },
        ["linked", a, b] => MarkModel::IntensityLinked {
            intercept: num(a)?,
            slope: num(b)?,
        },
        ["empirical", body] => {
            let mut support = Vec::new();
            let mut probs = Vec::new();
            for item in body.split(';') {
                let (z, p) = item.split_once('=').ok_or_else(bad)?;
                support.push(z.trim().parse::<u32>().map_err(|_| bad())?);
                probs.push(num(p)?);
            }
            MarkModel::Empirical { support, probs }
        }
        _ => return Err(bad()),
    };
    m.validate().map_err(cfg)?;
    Ok(m)
}

fn read_stream(run: &Run, key: &str, path: &Path, horizon: f64, tick: f64) -> Result<EventStream, CliError> {
    let events = read_events_csv(run.open(key, path)?)?;
    Ok(EventStream::new(0, tick, horizon, events)?)
}

/// Events truncated to `[0, cut_s]` when `cut_s` is set.
fn maybe_cut(run: &Run, stream: EventStream) -> Result<EventStream, CliError> {
    match run.settings.get("cut_s") {
        None => Ok(stream),
        Some(v) => {
            let cut: f64 = v.parse().map_err(|_| CliError::Config(format!("cannot parse cut_s='{v}'")))?;
            if !(cut > 0.0 && cut <= stream.horizon) {
                return Err(CliError::Config(format!("cut_s {cut} outside (0, horizon]")));
            }
            Ok(stream.window(0.0, cut))
        }
    }
}

pub fn filter(run: &Run) -> CmdResult {
    let s = &run.settings;
    let input = s.path("input")?;
    let output = s.path("output")?;
    let session = Session {
        date: s.string_or("date", &file_label(&input)),
        open_ns: s.parse_required("open_ns")?,
        close_ns: s.parse_required("close_ns")?,
    };
    let dt_ns = secs_to_ns("dt", s.positive("dt", "0.1")?)?;
    let tick = s.positive("tick_size", "0.01")?;
    let mut reader = TickReader::new(run.open("input", &input)?)?;
    let mut quality = QualityReport::default();
    let mids = mid_price(reader.by_ref(), &mut quality);
    quality.rows = reader.quality().rows;
    quality.malformed += reader.quality().malformed;
    let stream = filter_grid(&mids, &session, dt_ns, tick)?;
    write_atomic(&output, |w| Ok(stream.write_csv(w)?))?;
    run.result("events", stream.len());
    run.result("rows", quality.rows);
    run.result("crossed", quality.crossed);
    run.result("out_of_order", quality.out_of_order);
    run.result("malformed", quality.malformed);
    run.write_manifest(&[&output])
}

pub fn fit(run: &Run) -> CmdResult {
    let s = &run.settings;
    let inputs = s.paths("input")?;
    let output = s.path("output")?;
    let horizon = s.positive("horizon", "23400")?;
    let tick = s.positive("tick_size", "0.01")?;
    let marked = s.bool_or("marked", true)?;
    let opts = FitOptions {
        constraint: s.parse_or::<Constraint>("constraint", "general")?,
        min_events_per_side: s.parse_or("min_events", "50")?,
        ..Default::default()
    };
    let mut streams = Vec::new();
    for p in &inputs {
        let mut st = maybe_cut(run, read_stream(run, "input", p, horizon, tick)?)?;
        if !marked {
            st.events.iter_mut().for_each(|e| e.mark = 1);
        }
        streams.push((file_label(p), st));
    }
    let fits = EXEC.map_slice(&streams, |(date, st)| fit_mle(st, &opts).map(|f| (date.clone(), f)));
    let fits = fits.into_iter().collect::<hawkes_vol::Result<Vec<_>>>()?;
    write_atomic(&output, |w| Ok(write_fit_csv(&fits, w)?))?;
    run.result("days", fits.len());
    run.result("converged", fits.iter().filter(|(_, f)| f.converged).count());
    run.write_manifest(&[&output])
}

fn vol_modes(text: &str) -> Result<Vec<VolMode>, CliError> {
    text.split(',').map(|m| m.trim().parse::<VolMode>().map_err(cfg)).collect()
}

pub fn vol(run: &Run) -> CmdResult {
    let s = &run.settings;
    let input = s.path("input")?;
    let output = s.path("output")?;
    let mode: VolMode = s.string_or("mode", "unmarked").parse().map_err(cfg)?;
    let horizon = s.positive("horizon", "23400")?;
    let tick = s.positive("tick_size", "0.01")?;
    let fits = read_fit_csv(run.open("input", &input)?)?;
    let marks: Vec<MarkSummaries> = if mode == VolMode::Unmarked {
        vec![MarkSummaries::ones(); fits.len()]
    } else {
        let Some(_) = s.get("events") else {
            return Err(CliError::Config(format!("mode {} needs events for the mark summaries", mode.as_str())));
        };
        let paths = s.paths("events")?;
        if paths.len() != fits.len() {
            return Err(CliError::Config(format!("{} event files for {} fits", paths.len(), fits.len())));
        }
        let dep = if mode == VolMode::Independent {
            MarkDependence::Independent
        } else {
            MarkDependence::Dependent
        };
        let mut out = Vec::new();
        for ((_, fit), p) in fits.iter().zip(&paths) {
            let st = maybe_cut(run, read_stream(run, "events", p, horizon, tick)?)?;
            out.push(mark_summaries(&fit.params, &st, dep)?);
        }
        out
    };
    let mut rows = Vec::new();
    for ((date, fit), m) in fits.iter().zip(&marks) {
        let var = count_variance(&fit.params, m, horizon, mode)?;
        rows.push((date.clone(), var, price_volatility(var, tick)?));
    }
    write_atomic(&output, |w| {
        writeln!(w, "date,mode,horizon,count_variance,vol")?;
        for (d, var, v) in &rows {
            writeln!(w, "{d},{},{horizon},{var},{v}", mode.as_str())?;
        }
        Ok(())
    })?;
    run.result("days", rows.len());
    run.write_manifest(&[&output])
}

pub fn simulate_cmd(run: &Run) -> CmdResult {
    let s = &run.settings;
    let output = s.path("output")?;
    let params = load_params(run)?;
    let marks = parse_mark_model(&s.string_or("mark_model", "constant"))?;
    let horizon = s.positive("horizon", "23400")?;
    let seed: u64 = s.parse_or("seed", "1")?;
    let index: u64 = s.parse_or("index", "0")?;
    let path_seed = path_seed(seed, index);
    run.seed("master", seed);
    run.seed("path", path_seed);
    let path = simulate(&params, &marks, horizon, path_seed).map_err(|e| match e {
        hawkes_vol::Error::InvalidParams(_) | hawkes_vol::Error::Unstable { .. } => cfg(e),
        e => e.into(),
    })?;
    write_atomic(&output, |w| Ok(write_events_csv(&path.events, w)?))?;
    run.result("events", path.events.len());
    run.result("net_ticks", path.net_ticks());
    run.write_manifest(&[&output])
}

pub fn mc_check(run: &Run) -> CmdResult {
    let s = &run.settings;
    let output = s.path("output")?;
    let params = load_params(run)?;
    let model = parse_mark_model(&s.string_or("mark_model", "constant"))?;
    let summaries = model
        .summaries()
        .ok_or_else(|| CliError::Config("mc-check needs marks independent of the intensity".into()))?;
    params.validate(&summaries).map_err(cfg)?;
    let default_modes = if model == MarkModel::Constant && params.eta.max_abs() == 0.0 {
        "unmarked,full,restricted,independent"
    } else {
        "full,restricted,independent"
    };
    let modes = vol_modes(&s.string_or("mode", default_modes))?;
    let t = s.positive("horizon", "10000")?;
    let paths: usize = s.parse_or("paths", "10000")?;
    let seed: u64 = s.parse_or("seed", "1")?;
    run.seed("master", seed);
    let mc = mc_variance(&params, &model, t, paths, seed)?;
    let mut rows = Vec::new();
    for m in modes {
        let closed = count_variance(&params, &summaries, t, m)?;
        let z = mc.z_score(closed);
        rows.push((m, closed, z, z < 3.0));
    }
    write_atomic(&output, |w| {
        writeln!(w, "mode,closed_form,mc_variance,mc_se,z,result")?;
        for (m, c, z, ok) in &rows {
            writeln!(
                w,
                "{},{c},{},{},{z},{}",
                m.as_str(),
                mc.variance,
                mc.std_error,
                if *ok { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    })?;
    for (m, c, z, ok) in &rows {
        println!(
            "{} mode={} closed_form={c} mc={} se={} z={z:.3}",
            if *ok { "PASS" } else { "FAIL" },
            m.as_str(),
            mc.variance,
            mc.std_error
        );
    }
    let failed: Vec<&str> = rows.iter().filter(|r| !r.3).map(|r| r.0.as_str()).collect();
    run.result("failed", failed.len());
    run.write_manifest(&[&output])?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!("closed form outside 3 SE of Monte Carlo for {}", failed.join(","))))
    }
}

pub fn residuals(run: &Run) -> CmdResult {
    let s = &run.settings;
    let input = s.path("input")?;
    let output = s.path("output")?;
    let params = load_params(run)?;
    let horizon = s.positive("horizon", "23400")?;
    let tick = s.positive("tick_size", "0.01")?;
    let st = maybe_cut(run, read_stream(run, "input", &input, horizon, tick)?)?;
    let rep = residual_report(&params, &st)?;
    write_atomic(&output, |w| {
        writeln!(w, "theoretical,empirical")?;
        for (a, b) in &rep.qq_points {
            writeln!(w, "{a},{b}")?;
        }
        Ok(())
    })?;
    run.result("n", rep.residuals.len());
    run.result("ks_statistic", rep.ks_statistic);
    run.result("ks_pvalue", rep.ks_pvalue);
    run.write_manifest(&[&output])
}

pub fn intraday(run: &Run) -> CmdResult {
    let s = &run.settings;
    let input = s.path("input")?;
    let output = s.path("output")?;
    let horizon = s.positive("horizon", "23400")?;
    let tick = s.positive("tick_size", "0.01")?;
    let opts = IntradayOptions {
        window: s.positive("window", "1800")?,
        step: s.positive("step", "10")?,
        constraint: s.parse_or("constraint", "symmetric")?,
        vol_horizon: s.positive("vol_horizon", &horizon.to_string())?,
        tick_size: tick,
        dependence: match s.string_or("dependence", "dependent").as_str() {
            "dependent" => MarkDependence::Dependent,
            "independent" => MarkDependence::Independent,
            v => return Err(CliError::Config(format!("unknown dependence '{v}'"))),
        },
        min_events_per_side: s.parse_or("min_events", "20")?,
    };
    if opts.window > horizon {
        return Err(CliError::Config("window exceeds the session horizon".into()));
    }
    let st = read_stream(run, "input", &input, horizon, tick)?;
    let series = intraday_rolling(&st, &opts);
    write_atomic(&output, |w| {
        writeln!(w, "window_end,vol,status")?;
        for p in &series {
            let status = p.error.as_deref().map_or("ok".to_string(), |e| e.replace([',', '\n'], ";"));
            writeln!(w, "{},{},{status}", p.window_end, opt(p.vol))?;
        }
        Ok(())
    })?;
    run.result("windows", series.len());
    run.result("gaps", series.iter().filter(|p| p.vol.is_none()).count());
    run.write_manifest(&[&output])
}

fn read_mids(run: &Run, path: &Path) -> Result<Vec<MidPoint>, CliError> {
    let mut reader = TickReader::new(run.open("input", path)?)?;
    let mut quality = QualityReport::default();
    let mids = mid_price(reader.by_ref(), &mut quality);
    run.result("malformed", quality.malformed + reader.quality().malformed);
    run.result("crossed", quality.crossed);
    run.result("out_of_order", quality.out_of_order);
    Ok(mids)
}

pub fn rv(run: &Run) -> CmdResult {
    let s = &run.settings;
    let input = s.path("input")?;
    let output = s.path("output")?;
    let calendar = read_calendar_csv(run.open("calendar", &s.path("calendar")?)?)?;
    let interval = secs_to_ns("interval", s.positive("interval", "300")?)?;
    let bars_out = s.get("bars").map(PathBuf::from);
    let mids = read_mids(run, &input)?;
    let rvs = EXEC.map_slice(&calendar, |sess| realized_vol(&mids, sess, interval));
    let mut gaps = Vec::new();
    write_atomic(&output, |w| {
        writeln!(w, "date,log_rv,price_rv,intervals")?;
        for (sess, r) in calendar.iter().zip(&rvs) {
            match r {
                Ok(r) => writeln!(w, "{},{},{},{}", sess.date, r.log_rv, r.price_rv, r.intervals)?,
                Err(hawkes_vol::Error::InsufficientData(_)) => gaps.push(sess.date.clone()),
                Err(e) => return Err(e.clone().into()),
            }
        }
        Ok(())
    })?;
    let mut outputs: Vec<&Path> = vec![&output];
    if let Some(p) = &bars_out {
        let (bars, _) = daily_bars(&mids, &calendar);
        write_atomic(p, |w| Ok(write_bars_csv(&bars, w)?))?;
        outputs.push(p);
    }
    run.result("sessions", calendar.len());
    run.result("gaps", gaps.join(";"));
    run.write_manifest(&outputs)
}

/// Bars joined with a vol CSV on date, dropping days without a vol.
fn bars_with_vols(run: &Run) -> Result<Vec<(DailyBar, f64)>, CliError> {
    let s = &run.settings;
    let bars = read_bars_csv(run.open("bars", &s.path("bars")?)?)?;
    let vols = read_vol_csv(run.open("vols", &s.path("vols")?)?, "vol")?;
    let by_date: HashMap<&str, f64> = vols
        .iter()
        .filter_map(|r| Some((r.date.as_str(), r.vol?)))
        .collect();
    let joined: Vec<(DailyBar, f64)> = bars
        .into_iter()
        .filter_map(|b| {
            let v = *by_date.get(b.date.as_str())?;
            Some((b, v))
        })
        .collect();
    if joined.is_empty() {
        return Err(CliError::Data("no dates shared by bars and vols".into()));
    }
    Ok(joined)
}

pub fn backtest(run: &Run) -> CmdResult {
    let output = run.settings.path("output")?;
    let k: f64 = run.settings.positive("k", "2")?;
    let joined = bars_with_vols(run)?;
    let d: Vec<f64> = joined.iter().map(|(b, _)| (b.close - b.open).abs()).collect();
    let v: Vec<f64> = joined.iter().map(|(_, v)| *v).collect();
    let e = backtest_exceedance(&d, &v, k)?;
    write_atomic(&output, |w| {
        writeln!(w, "date,abs_change,vol,exceed")?;
        let mut flagged = e.flagged.iter().peekable();
        for (i, ((b, vol), dd)) in joined.iter().zip(&d).enumerate() {
            let hit = flagged.next_if_eq(&&i).is_some();
            writeln!(w, "{},{dd},{vol},{}", b.date, u8::from(hit))?;
        }
        Ok(())
    })?;
    run.result("days", d.len());
    run.result("count", e.count);
    run.result("fraction", e.fraction);
    run.write_manifest(&[&output])
}

pub fn coverage(run: &Run) -> CmdResult {
    let output = run.settings.path("output")?;
    let grid = parse_grid(&run.settings.string_or("k_grid", "0:4:0.1"))?;
    let joined = bars_with_vols(run)?;
    let d: Vec<f64> = joined.iter().map(|(b, _)| (b.close - b.open).abs()).collect();
    let v: Vec<f64> = joined.iter().map(|(_, v)| *v).collect();
    let curve = coverage_curve(&d, &v, &grid)?;
    write_atomic(&output, |w| {
        writeln!(w, "k,fraction,normal")?;
        for p in &curve {
            writeln!(w, "{},{},{}", p.k, p.fraction, p.normal)?;
        }
        Ok(())
    })?;
    let worst = curve.iter().map(|p| (p.fraction - p.normal).abs()).fold(0.0, f64::max);
    run.result("days", d.len());
    run.result("max_abs_gap", worst);
    run.write_manifest(&[&output])
}

pub fn garch(run: &Run) -> CmdResult {
    let s = &run.settings;
    let output = s.path("output")?;
    let bars = read_bars_csv(run.open("bars", &s.path("bars")?)?)?;
    let window: usize = s.parse_or("garch_window", "1500")?;
    let returns: Vec<f64> = bars.iter().map(|b| b.ret).collect();
    let fit = gjr_fit(&returns)?;
    let vols: Vec<Option<f64>> = if window == 0 {
        let g2 = hawkes_vol::econometrics::gjr_variances(&fit.params, &returns)?;
        g2[..returns.len()].iter().map(|v| Some(v.sqrt())).collect()
    } else {
        gjr_rolling(&returns, window, EXEC)?
    };
    write_atomic(&output, |w| {
        writeln!(w, "date,vol")?;
        for (b, v) in bars.iter().zip(&vols) {
            writeln!(w, "{},{}", b.date, opt(*v))?;
        }
        Ok(())
    })?;
    let p = fit.params;
    run.result("omega", p.omega);
    run.result("alpha", p.alpha);
    run.result("gamma", p.gamma);
    run.result("beta", p.beta);
    run.result("loglik", fit.loglik);
    if let Some(se) = fit.std_errors {
        run.result("se", se.map(|v| v.to_string()).join(";"));
    }
    run.write_manifest(&[&output])
}

pub fn combine(run: &Run) -> CmdResult {
    let s = &run.settings;
    let output = s.path("output")?;
    let price_units = match s.string_or("vol_units", "price").as_str() {
        "price" => true,
        "return" => false,
        v => return Err(CliError::Config(format!("vol_units must be price or return, got '{v}'"))),
    };
    let joined = bars_with_vols(run)?;
    let garch = read_vol_csv(run.open("garch", &s.path("garch")?)?, "vol")?;
    let g_by: HashMap<&str, f64> = garch.iter().filter_map(|r| Some((r.date.as_str(), r.vol?))).collect();
    let (mut g, mut h, mut r) = (Vec::new(), Vec::new(), Vec::new());
    for (b, v) in &joined {
        if let Some(gv) = g_by.get(b.date.as_str()) {
            g.push(*gv);
            h.push(if price_units { v / b.open } else { *v });
            r.push(b.ret);
        }
    }
    let c = combined_weights(&g, &h, &r)?;
    let se = c.std_errors.map(|s| [Some(s[0]), Some(s[1])]).unwrap_or([None, None]);
    write_atomic(&output, |w| {
        writeln!(w, "theta1,theta2,se1,se2,loglik,collinear,converged,n")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            c.theta1,
            c.theta2,
            opt(se[0].filter(|v| v.is_finite())),
            opt(se[1].filter(|v| v.is_finite())),
            c.loglik,
            c.collinear,
            c.converged,
            g.len()
        )?;
        Ok(())
    })?;
    run.result("theta1", c.theta1);
    run.result("theta2", c.theta2);
    run.write_manifest(&[&output])
}

/// Long `date,cut_s,vol` rows regrouped per cut, aligned on a shared date
/// list.
fn cut_series(rows: &[VolRow], dates: &[String]) -> Result<Vec<CutSeries>, CliError> {
    let mut by_cut: Vec<(f64, HashMap<&str, f64>)> = Vec::new();
    for r in rows {
        let cut = r
            .cut_s
            .ok_or_else(|| CliError::Data(format!("row {} has no cut_s", r.date)))?;
        let slot = match by_cut.iter().position(|(c, _)| *c == cut) {
            Some(i) => i,
            None => {
                by_cut.push((cut, HashMap::new()));
                by_cut.len() - 1
            }
        };
        if let Some(v) = r.vol {
            by_cut[slot].1.insert(r.date.as_str(), v);
        }
    }
    by_cut.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(by_cut
        .into_iter()
        .map(|(c, m)| (c, dates.iter().map(|d| m.get(d.as_str()).copied()).collect()))
        .collect())
}

fn all_dates(a: &[VolRow], b: &[VolRow]) -> Vec<String> {
    let mut d: Vec<String> = a.iter().chain(b).map(|r| r.date.clone()).collect();
    d.sort();
    d.dedup();
    d
}

pub fn r2surface(run: &Run) -> CmdResult {
    let s = &run.settings;
    let output = s.path("output")?;
    let stock = read_vol_csv(run.open("stock", &s.path("stock")?)?, "vol")?;
    let futures = read_vol_csv(run.open("futures", &s.path("futures")?)?, "vol")?;
    let dates = all_dates(&stock, &futures);
    let cells = futures_r2_surface(&cut_series(&stock, &dates)?, &cut_series(&futures, &dates)?, EXEC)?;
    write_atomic(&output, |w| {
        writeln!(w, "t1,t2,adj_r2,n")?;
        for c in &cells {
            writeln!(w, "{},{},{},{}", c.t1, c.t2, opt(c.adj_r2), c.n)?;
        }
        Ok(())
    })?;
    if let Some(best) = surface_argmax(&cells) {
        run.result("argmax_t1", best.t1);
        run.result("argmax_t2", best.t2);
        run.result("argmax_adj_r2", opt(best.adj_r2));
    }
    run.write_manifest(&[&output])
}

pub fn forecast(run: &Run) -> CmdResult {
    let s = &run.settings;
    let output = s.path("output")?;
    let train: usize = s.parse_or("train", "400")?;
    let stock = read_vol_csv(run.open("stock", &s.path("stock")?)?, "vol")?;
    let futures = match s.get("futures") {
        Some(p) => read_vol_csv(run.open("futures", Path::new(&p))?, "vol")?,
        None => Vec::new(),
    };
    let stock_dates: Vec<String> = stock.iter().filter(|r| r.vol.is_some()).map(|r| r.date.clone()).collect();
    let stock_v: Vec<f64> = stock.iter().filter_map(|r| r.vol).collect();
    let mut reports: Vec<(Option<f64>, ForecastReport, Vec<String>)> = Vec::new();
    reports.push((None, ar2_forecast(&stock_v, train, EXEC)?, stock_dates.clone()));
    for (cut, fut) in cut_series(&futures, &stock_dates)? {
        let (dates, (sv, fv)): (Vec<String>, (Vec<f64>, Vec<f64>)) = stock_dates
            .iter()
            .zip(&stock_v)
            .zip(&fut)
            .filter_map(|((d, s), f)| Some((d.clone(), (*s, (*f)?))))
            .unzip();
        reports.push((Some(cut), futures_lm_forecast(&sv, &fv, train, EXEC)?, dates));
    }
    write_atomic(&output, |w| {
        writeln!(w, "model,cut_s,rmsre,n,near_unit_root")?;
        for (cut, r, _) in &reports {
            writeln!(w, "{},{},{},{},{}", r.model, opt(*cut), r.rmsre, r.forecasts.len(), r.near_unit_root)?;
        }
        Ok(())
    })?;
    let mut outputs: Vec<&Path> = vec![&output];
    let detail = s.get("detail").map(PathBuf::from);
    if let Some(p) = &detail {
        write_atomic(p, |w| {
            writeln!(w, "model,cut_s,date,forecast,actual")?;
            for (cut, r, dates) in &reports {
                for (n, f, a) in &r.forecasts {
                    writeln!(w, "{},{},{},{f},{a}", r.model, opt(*cut), dates[*n])?;
                }
            }
            Ok(())
        })?;
        outputs.push(p);
    }
    for (cut, r, _) in &reports {
        run.result(&format!("rmsre.{}.{}", r.model, opt(*cut)), r.rmsre);
    }
    run.write_manifest(&outputs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mark_models() {
        assert_eq!(parse_mark_model("constant").unwrap(), MarkModel::Constant);
        assert_eq!(parse_mark_model("geometric:2.5").unwrap(), MarkModel::Geometric { mean: 2.5 });
        assert_eq!(
            parse_mark_model("empirical:1=0.75;3=0.25").unwrap(),
            MarkModel::Empirical {
                support: vec![1, 3],
                probs: vec![0.75, 0.25]
            }
        );
        assert!(matches!(parse_mark_model("linked:1:0.5"), Ok(MarkModel::IntensityLinked { .. })));
        assert!(parse_mark_model("geometric:0.5").is_err());
        assert!(parse_mark_model("empirical:1=0.5").is_err());
        assert!(parse_mark_model("poisson").is_err());
    }

    #[test]
    fn cut_series_alignment() {
        let rows = vec![
            VolRow { date: "b".into(), cut_s: Some(60.0), vol: Some(2.0) },
            VolRow { date: "a".into(), cut_s: Some(30.0), vol: Some(1.0) },
            VolRow { date: "a".into(), cut_s: Some(60.0), vol: None },
        ];
        let dates = vec!["a".to_string(), "b".to_string()];
        let cs = cut_series(&rows, &dates).unwrap();
        assert_eq!(cs, vec![(30.0, vec![Some(1.0), None]), (60.0, vec![None, Some(2.0)])]);
    }
}
