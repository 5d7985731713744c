//! Flat `key=value` run configuration. Values come from an optional config
//! file and are overridden by command-line flags of the same name; every
//! value a command actually reads is recorded for the manifest.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::CliError;

macro_rules! keys {
    ($($name:ident: $help:literal,)*) => {
        /// Every configurable key, one `--key VALUE` flag each.
        #[derive(Debug, Default, Clone, clap::Args)]
        pub struct Keys {
            $(
                #[arg(long = stringify!($name), value_name = "VALUE", help = $help, global = true, allow_hyphen_values = true)]
                pub $name: Option<String>,
            )*
        }

        impl Keys {
            pub const NAMES: &'static [&'static str] = &[$(stringify!($name)),*];

            fn pairs(&self) -> Vec<(&'static str, Option<&str>)> {
                vec![$((stringify!($name), self.$name.as_deref())),*]
            }
        }
    };
}

keys! {
    input: "Input file(s); comma-separated where a command takes several",
    output: "Output artifact path",
    params: "Parameter file: key=value block or fit CSV",
    date: "Row of a fit CSV to use (default: first)",
    events: "Event CSV(s) supplying mark summaries, comma-separated",
    calendar: "Session calendar CSV (date,open_ns,close_ns)",
    bars: "Daily bar CSV (date,open,close,ret)",
    vols: "Daily volatility CSV with date and vol columns",
    garch: "GJR volatility CSV from the garch command",
    stock: "Stock volatility CSV",
    futures: "Futures volatility CSV (date,cut_s,vol)",
    detail: "Optional per-day output path",
    open_ns: "Session open, ns since epoch",
    close_ns: "Session close, ns since epoch",
    dt: "Filter grid spacing in seconds [0.1]",
    tick_size: "Tick size in currency [0.01]",
    horizon: "Session length / variance horizon in seconds [23400]",
    vol_horizon: "Intraday variance horizon in seconds [horizon]",
    cut_s: "Use only events up to this many seconds after the open",
    window: "Intraday window in seconds [1800]",
    step: "Intraday step in seconds [10]",
    constraint: "general | symmetric",
    marked: "Fit the marked model: true | false [true]",
    dependence: "Mark dependence: dependent | independent [dependent]",
    mode: "Variance form(s): unmarked, full, restricted, independent",
    mark_model: "constant | geometric:MEAN | empirical:Z=P;... | linked:A:B",
    seed: "Master seed [1]",
    index: "Path index under the master seed [0]",
    paths: "Monte Carlo paths [10000]",
    min_events: "Minimum events per side for a fit",
    interval: "Realized-vol sampling interval in seconds [300]",
    k: "Exceedance multiple of sigma [2]",
    k_grid: "Coverage grid: list a,b,c or range start:stop:step [0:4:0.1]",
    garch_window: "Rolling GJR window in days; 0 fits the full sample once [1500]",
    vol_units: "Units of the vols series: price | return [price]",
    train: "Forecast training window in days [400]",
    jobs: "Worker threads (default: all cores)",
}

#[derive(Debug)]
pub struct Settings {
    values: BTreeMap<String, String>,
    used: RefCell<BTreeMap<String, String>>,
}

impl Settings {
    /// Merges the config file (if any) with the flags; flags win.
    pub fn load(config: Option<&Path>, flags: &Keys) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        if let Some(path) = config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
            let map = hawkes_vol::model::parse_kv(&text).map_err(|e| CliError::Config(e.to_string()))?;
            for (k, v) in map {
                if !Keys::NAMES.contains(&k.as_str()) {
                    return Err(CliError::Config(format!("unknown config key '{k}'")));
                }
                values.insert(k, v);
            }
        }
        for (k, v) in flags.pairs() {
            if let Some(v) = v {
                values.insert(k.to_string(), v.to_string());
            }
        }
        Ok(Settings {
            values,
            used: RefCell::new(BTreeMap::new()),
        })
    }

    #[cfg(test)]
    pub fn from_pairs(pairs: &[(&str, &str)]) -> Self {
        Settings {
            values: pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            used: RefCell::new(BTreeMap::new()),
        }
    }

    /// Effective values of every key read so far.
    pub fn used(&self) -> BTreeMap<String, String> {
        self.used.borrow().clone()
    }

    fn note(&self, key: &str, value: &str) {
        self.used.borrow_mut().insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let v = self.values.get(key).cloned();
        if let Some(v) = &v {
            self.note(key, v);
        }
        v
    }

    pub fn required(&self, key: &str) -> Result<String, CliError> {
        self.get(key)
            .ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    pub fn string_or(&self, key: &str, default: &str) -> String {
        let v = self.values.get(key).cloned().unwrap_or_else(|| default.to_string());
        self.note(key, &v);
        v
    }

    pub fn parse_or<T: FromStr>(&self, key: &str, default: &str) -> Result<T, CliError> {
        let v = self.string_or(key, default);
        v.parse()
            .map_err(|_| CliError::Config(format!("cannot parse {key}='{v}'")))
    }

    pub fn parse_required<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.required(key)?;
        v.parse()
            .map_err(|_| CliError::Config(format!("cannot parse {key}='{v}'")))
    }

    /// A finite, strictly positive number.
    pub fn positive(&self, key: &str, default: &str) -> Result<f64, CliError> {
        let v: f64 = self.parse_or(key, default)?;
        if v.is_finite() && v > 0.0 {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{key} must be positive, got {v}")))
        }
    }

    pub fn path(&self, key: &str) -> Result<PathBuf, CliError> {
        self.required(key).map(PathBuf::from)
    }

    pub fn paths(&self, key: &str) -> Result<Vec<PathBuf>, CliError> {
        let v = self.required(key)?;
        let out: Vec<PathBuf> = v
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(PathBuf::from)
            .collect();
        if out.is_empty() {
            return Err(CliError::Config(format!("{key} lists no paths")));
        }
        Ok(out)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.string_or(key, if default { "true" } else { "false" }).as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            v => Err(CliError::Config(format!("{key} must be true or false, got '{v}'"))),
        }
    }
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Config(format!("bad grid '{text}'"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [a, b, s] => {
            let (a, b, s) = (num(a)?, num(b)?, num(s)?);
            if !(s > 0.0) || b < a {
                return Err(bad());
            }
            let n = ((b - a) / s + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * s).collect())
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}
