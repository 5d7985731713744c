use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hawkes-vol"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(p: &Path) -> String {
    std::fs::read_to_string(format!("{}.manifest", p.display())).unwrap()
}

fn stderr_line(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).lines().last().unwrap_or_default().to_string()
}

const OPEN: &str = "1700000000000000000";
const CLOSE: &str = "1700000002000000000";

#[test]
fn filter_fixture_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("events.csv");
    let stdout = ok(&[
        "filter",
        "--input",
        s(&fixture("ticks_handtraced.csv")),
        "--output",
        s(&out),
        "--open_ns",
        OPEN,
        "--close_ns",
        CLOSE,
    ]);
    let got = std::fs::read(&out).unwrap();
    let want = std::fs::read(fixture("events_handtraced.csv")).unwrap();
    assert_eq!(got, want);
    assert!(stdout.contains("crossed=1") && stdout.contains("out_of_order=1") && stdout.contains("malformed=1"));
    let m = manifest(&out);
    assert!(m.contains("command=filter\n"));
    assert!(m.contains("config.dt=0.1\n"));
    assert!(m.lines().any(|l| l.starts_with("input.0.sha256=") && l.len() == "input.0.sha256=".len() + 64));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("events.csv");
    std::fs::write(
        &cfg,
        format!(
            "input={}\noutput={}\nopen_ns={OPEN}\nclose_ns={CLOSE}\ndt=0.5\n",
            s(&fixture("ticks_handtraced.csv")),
            s(&out)
        ),
    )
    .unwrap();
    ok(&["filter", "--config", s(&cfg), "--dt", "0.1"]);
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(fixture("events_handtraced.csv")).unwrap()
    );
    assert!(manifest(&out).contains("config.dt=0.1\n"));
    // the file's 0.5 s grid alone: everything before 0.5 s nets to zero
    ok(&["filter", "--config", s(&cfg)]);
    let coarse = std::fs::read_to_string(&out).unwrap();
    assert_eq!(coarse, "time_s,side,mark\n1.200000000,1,4\n1.950000000,-1,1\n");
}

#[test]
fn poisson_vol() {
    let dir = tempfile::tempdir().unwrap();
    let fit = dir.path().join("fit.csv");
    std::fs::write(
        &fit,
        "date,mu1,mu2,a11,a12,a21,a22,b1,b2,e11,e12,e21,e22,llh,n_events,converged,constraint\n\
         d1,0.2,0.3,0,0,0,0,1,1,0,0,0,0,-1,10,true,general\n\
         se,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,,,,\n",
    )
    .unwrap();
    let out = dir.path().join("vol.csv");
    ok(&["vol", "--input", s(&fit), "--output", s(&out), "--horizon", "23400", "--tick_size", "0.01"]);
    let text = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let vol: f64 = row[4].parse().unwrap();
    assert!((vol - 0.01 * 11700f64.sqrt()).abs() < 1e-12 * vol, "{vol}");
    assert_eq!(row[3].parse::<f64>().unwrap(), 11700.0);
}

#[test]
fn mc_check_fixture_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mc.csv");
    let stdout = ok(&[
        "mc-check",
        "--params",
        s(&fixture("stable_params.kv")),
        "--mark_model",
        "geometric:1.5",
        "--paths",
        "4000",
        "--seed",
        "11",
        "--output",
        s(&out),
    ]);
    let pass: Vec<&str> = stdout.lines().filter(|l| l.starts_with("PASS")).collect();
    assert_eq!(pass.len(), 3, "{stdout}");
    assert!(manifest(&out).contains("seed.master=11\n"));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let p = fixture("stable_params.kv");
    for out in [&a, &b] {
        ok(&["simulate", "--params", s(&p), "--horizon", "2000", "--seed", "5", "--output", s(out)]);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let strip = |m: String| {
        m.lines()
            .filter(|l| !l.starts_with("created_unix=") && !l.starts_with("config.output=") && !l.starts_with("output."))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(manifest(&a)), strip(manifest(&b)));
    ok(&["simulate", "--params", s(&p), "--horizon", "2000", "--seed", "5", "--index", "1", "--output", s(&b)]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn simulate_fit_vol_residuals_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture("stable_params.kv");
    let ev = dir.path().join("day1.csv");
    ok(&[
        "simulate",
        "--params",
        s(&p),
        "--mark_model",
        "geometric:1.5",
        "--horizon",
        "23400",
        "--seed",
        "3",
        "--output",
        s(&ev),
    ]);
    let fit = dir.path().join("fit.csv");
    ok(&["fit", "--input", s(&ev), "--constraint", "symmetric", "--output", s(&fit), "--jobs", "1"]);
    let text = std::fs::read_to_string(&fit).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("day1,"));
    assert!(text.lines().nth(2).unwrap().starts_with("se,"));

    let vol = dir.path().join("vol.csv");
    ok(&["vol", "--input", s(&fit), "--mode", "restricted", "--events", s(&ev), "--output", s(&vol)]);
    let v: f64 = std::fs::read_to_string(&vol).unwrap().lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!(v > 0.0 && v.is_finite());
    // restricted mode without events is a configuration error
    let out = run(&["vol", "--input", s(&fit), "--mode", "restricted", "--output", s(&vol)]);
    assert_eq!(out.status.code(), Some(2));

    let qq = dir.path().join("qq.csv");
    let stdout = ok(&["residuals", "--params", s(&fit), "--input", s(&ev), "--output", s(&qq)]);
    assert_eq!(std::fs::read_to_string(&qq).unwrap().lines().count(), 200);
    let pval: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("ks_pvalue="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&pval));
}

#[test]
fn intraday_series() {
    let dir = tempfile::tempdir().unwrap();
    let ev = dir.path().join("ev.csv");
    ok(&["simulate", "--params", s(&fixture("stable_params.kv")), "--horizon", "3600", "--seed", "9", "--output", s(&ev)]);
    let out = dir.path().join("intraday.csv");
    ok(&[
        "intraday", "--input", s(&ev), "--horizon", "3600", "--window", "1800", "--step", "600", "--output", s(&out),
    ]);
    let text = std::fs::read_to_string(&out).unwrap();
    let ends: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ends, ["1800", "2400", "3000", "3600"]);
}

#[test]
fn rv_and_bars() {
    let dir = tempfile::tempdir().unwrap();
    let cal = dir.path().join("cal.csv");
    std::fs::write(&cal, format!("date,open_ns,close_ns\nd1,{OPEN},{CLOSE}\nd2,1800000000000000000,1800000001000000000\n")).unwrap();
    let out = dir.path().join("rv.csv");
    let bars = dir.path().join("bars.csv");
    let stdout = ok(&[
        "rv",
        "--input",
        s(&fixture("ticks_handtraced.csv")),
        "--calendar",
        s(&cal),
        "--interval",
        "1",
        "--bars",
        s(&bars),
        "--output",
        s(&out),
    ]);
    // samples at 0, 1, 2 s: 100.01, 100.01, 100.04
    let rv = std::fs::read_to_string(&out).unwrap();
    let row: Vec<&str> = rv.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "d1");
    assert!((row[2].parse::<f64>().unwrap() - 0.03).abs() < 1e-9);
    assert_eq!(row[3], "2");
    assert!(stdout.contains("gaps=d2"), "{stdout}");
    let b = std::fs::read_to_string(&bars).unwrap();
    assert_eq!(b.lines().count(), 2);
    assert!(b.lines().nth(1).unwrap().starts_with("d1,100.01,100.04,"));
}

/// Daily bars and vols where |ΔP| / vol is standard normal.
fn daily_inputs(dir: &Path, n: usize) -> (PathBuf, PathBuf) {
    let mut bars = String::from("date,open,close,ret\n");
    let mut vols = String::from("date,mode,horizon,count_variance,vol\n");
    let mut x: u64 = 42;
    let mut unif = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((x >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    for d in 0..n {
        let vol = 0.5 + unif();
        let z = (-2.0 * unif().ln()).sqrt() * (2.0 * std::f64::consts::PI * unif()).cos();
        let open = 100.0;
        let close = open + vol * z;
        writeln!(bars, "{d:05},{open},{close},{}", (close - open) / open).unwrap();
        writeln!(vols, "{d:05},restricted,23400,0,{vol}").unwrap();
    }
    let b = dir.join("bars.csv");
    let v = dir.join("vols.csv");
    std::fs::write(&b, bars).unwrap();
    std::fs::write(&v, vols).unwrap();
    (b, v)
}

#[test]
fn backtest_coverage_garch_combine() {
    let dir = tempfile::tempdir().unwrap();
    let (bars, vols) = daily_inputs(dir.path(), 1500);
    let bt = dir.path().join("bt.csv");
    let stdout = ok(&["backtest", "--bars", s(&bars), "--vols", s(&vols), "--k", "2", "--output", s(&bt)]);
    let frac: f64 = stdout.lines().find_map(|l| l.strip_prefix("fraction=")).unwrap().parse().unwrap();
    assert!((0.03..=0.07).contains(&frac), "{frac}");
    assert_eq!(std::fs::read_to_string(&bt).unwrap().lines().count(), 1501);

    let cov = dir.path().join("cov.csv");
    ok(&["coverage", "--bars", s(&bars), "--vols", s(&vols), "--k_grid", "1,2,3", "--output", s(&cov)]);
    let c = std::fs::read_to_string(&cov).unwrap();
    for line in c.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((f[1] - f[2]).abs() < 0.05, "{line}");
    }

    let g = dir.path().join("garch.csv");
    ok(&["garch", "--bars", s(&bars), "--garch_window", "0", "--output", s(&g)]);
    assert_eq!(std::fs::read_to_string(&g).unwrap().lines().count(), 1501);

    let comb = dir.path().join("comb.csv");
    ok(&["combine", "--bars", s(&bars), "--vols", s(&vols), "--garch", s(&g), "--output", s(&comb)]);
    let row = std::fs::read_to_string(&comb).unwrap();
    let f: Vec<&str> = row.lines().nth(1).unwrap().split(',').collect();
    // returns are generated from the vols alone, so θ₂ carries the weight
    let t2: f64 = f[1].parse().unwrap();
    assert!(t2 > 0.5, "{row}");
}

#[test]
fn r2surface_and_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let mut x: u64 = 7;
    let mut unif = || {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((x >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    };
    let n = 520;
    let fut: Vec<f64> = (0..n).map(|_| 1.0 + unif()).collect();
    let mut stock = vec![1.5];
    for d in 1..n {
        stock.push(0.3 + 0.3 * stock[d - 1] + 0.6 * fut[d] + 0.05 * (unif() - 0.5));
    }
    let mut st = String::from("date,cut_s,vol\n");
    let mut fu = String::from("date,cut_s,vol\n");
    for d in 0..n {
        writeln!(st, "{d:05},23400,{}", stock[d]).unwrap();
        writeln!(fu, "{d:05},1800,{}", fut[d] + 0.5 * (unif() - 0.5)).unwrap();
        writeln!(fu, "{d:05},3600,{}", fut[d]).unwrap();
    }
    let sp = dir.path().join("stock.csv");
    let fp = dir.path().join("futures.csv");
    std::fs::write(&sp, st).unwrap();
    std::fs::write(&fp, fu).unwrap();

    let surf = dir.path().join("surface.csv");
    let stdout = ok(&["r2surface", "--stock", s(&sp), "--futures", s(&fp), "--output", s(&surf)]);
    assert!(stdout.contains("argmax_t2=3600"), "{stdout}");
    assert_eq!(std::fs::read_to_string(&surf).unwrap().lines().count(), 3);

    let fc = dir.path().join("fc.csv");
    let detail = dir.path().join("detail.csv");
    ok(&["forecast", "--stock", s(&sp), "--futures", s(&fp), "--train", "400", "--detail", s(&detail), "--output", s(&fc)]);
    let text = std::fs::read_to_string(&fc).unwrap();
    let rm: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(rm.len(), 3);
    assert!(rm[1] < rm[0] && rm[2] < rm[0], "{text}");
    assert_eq!(std::fs::read_to_string(&detail).unwrap().lines().count(), 1 + 3 * 120);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    // 2: missing key, bad value, unknown flag
    for args in [
        vec!["filter", "--output", s(&out)],
        vec!["vol", "--input", "nope.csv", "--output", s(&out), "--tick_size", "-1"],
        vec!["vol", "--frobnicate", "1"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert!(stderr_line(&o).starts_with("error code=2 kind=config msg="), "{}", stderr_line(&o));
    }
    // 3: tick size that does not divide the price changes
    let o = run(&[
        "filter",
        "--input",
        s(&fixture("ticks_handtraced.csv")),
        "--output",
        s(&out),
        "--open_ns",
        OPEN,
        "--close_ns",
        CLOSE,
        "--tick_size",
        "0.02",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr_line(&o).starts_with("error code=3 kind=data msg="));
    assert!(!out.exists());
    // 4: an unstable fitted parameter set
    let fit = dir.path().join("fit.csv");
    std::fs::write(
        &fit,
        "date,mu1,mu2,a11,a12,a21,a22,b1,b2,e11,e12,e21,e22,llh,n_events,converged,constraint\n\
         d1,0.2,0.3,1.5,0,0,0.5,1,1,0,0,0,0,-1,10,true,general\n\
         se,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,NA,,,,\n",
    )
    .unwrap();
    let o = run(&["vol", "--input", s(&fit), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr_line(&o).starts_with("error code=4 kind=numerical msg="));
}

#[test]
fn help_lists_commands() {
    let h = ok(&["--help"]);
    for c in [
        "filter", "fit", "vol", "simulate", "mc-check", "residuals", "intraday", "rv", "backtest", "coverage", "garch",
        "combine", "r2surface", "forecast",
    ] {
        assert!(h.contains(c), "{c}");
    }
}
