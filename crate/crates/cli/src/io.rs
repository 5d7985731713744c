//! Artifact plumbing: atomic writes, input digests and the run manifest.

use std::cell::RefCell;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::error::CliError;

/// Writes through a temp file in the target directory, then renames it
/// into place, so readers never see a partial artifact.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::Config(format!("cannot write to {}: {e}", dir.display())))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| CliError::Config(format!("cannot create {}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut f = open_plain(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn open_plain(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))
}

/// One command invocation: settings plus everything the manifest records.
pub struct Run {
    pub command: &'static str,
    pub settings: Settings,
    inputs: RefCell<Vec<(String, PathBuf, String)>>,
    seeds: RefCell<Vec<(String, u64)>>,
    results: RefCell<Vec<(String, String)>>,
}

impl Run {
    pub fn new(command: &'static str, settings: Settings) -> Self {
        Run {
            command,
            settings,
            inputs: RefCell::new(Vec::new()),
            seeds: RefCell::new(Vec::new()),
            results: RefCell::new(Vec::new()),
        }
    }

    /// Opens an input, recording its digest under `key`.
    pub fn open(&self, key: &str, path: &Path) -> Result<BufReader<File>, CliError> {
        let digest = sha256_file(path)?;
        self.inputs.borrow_mut().push((key.to_string(), path.to_path_buf(), digest));
        Ok(BufReader::new(open_plain(path)?))
    }

    pub fn seed(&self, name: &str, value: u64) {
        self.seeds.borrow_mut().push((name.to_string(), value));
    }

    /// A summary value recorded in the manifest (and echoed to stdout).
    pub fn result(&self, name: &str, value: impl ToString) {
        let v = value.to_string();
        println!("{name}={v}");
        self.results.borrow_mut().push((name.to_string(), v));
    }

    pub fn manifest_path(output: &Path) -> PathBuf {
        let mut s = output.as_os_str().to_owned();
        s.push(".manifest");
        PathBuf::from(s)
    }

    /// Line-oriented `key=value`; only `created_unix` varies between
    /// identical runs.
    pub fn manifest(&self, outputs: &[&Path]) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &str| {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        };
        line("command", self.command);
        line("version", env!("CARGO_PKG_VERSION"));
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        line("created_unix", &now.to_string());
        for (k, v) in self.settings.used() {
            if k != "jobs" {
                line(&format!("config.{k}"), &v);
            }
        }
        for (i, (key, path, digest)) in self.inputs.borrow().iter().enumerate() {
            line(&format!("input.{i}.key"), key);
            line(&format!("input.{i}.path"), &path.display().to_string());
            line(&format!("input.{i}.sha256"), digest);
        }
        for (name, v) in self.seeds.borrow().iter() {
            line(&format!("seed.{name}"), &v.to_string());
        }
        for (name, v) in self.results.borrow().iter() {
            line(&format!("result.{name}"), v);
        }
        for (i, p) in outputs.iter().enumerate() {
            line(&format!("output.{i}"), &p.display().to_string());
        }
        s
    }

    pub fn write_manifest(&self, outputs: &[&Path]) -> Result<(), CliError> {
        let Some(first) = outputs.first() else {
            return Ok(());
        };
        let text = self.manifest(outputs);
        write_atomic(&Self::manifest_path(first), |w| Ok(w.write_all(text.as_bytes())?))
    }
}

/// Formats an optional number, `NA` when missing.
pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// A daily series read from any CSV with `date` and `vol` columns and an
/// optional `cut_s` column; `NA` or empty vols are missing.
#[derive(Debug, Clone, PartialEq)]
pub struct VolRow {
    pub date: String,
    pub cut_s: Option<f64>,
    pub vol: Option<f64>,
}

pub fn read_vol_csv<R: Read>(r: R, value_column: &str) -> Result<Vec<VolRow>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let date = col("date").ok_or_else(|| CliError::Data("vol CSV has no date column".into()))?;
    let vol = col(value_column).ok_or_else(|| CliError::Data(format!("vol CSV has no {value_column} column")))?;
    let cut = col("cut_s");
    let num = |s: &str| -> Result<Option<f64>, CliError> {
        if s.is_empty() || s == "NA" {
            return Ok(None);
        }
        s.parse::<f64>()
            .map(Some)
            .map_err(|_| CliError::Data(format!("bad number '{s}'")))
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        out.push(VolRow {
            date: rec[date].to_string(),
            cut_s: match cut {
                Some(c) => num(&rec[c])?,
                None => None,
            },
            vol: num(&rec[vol])?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, |w| Ok(w.write_all(b"one\n")?)).unwrap();
        write_atomic(&p, |w| Ok(w.write_all(b"two\n")?)).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "two\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn failed_body_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let r = write_atomic(&p, |_| Err(CliError::Numerical("boom".into())));
        assert!(r.is_err());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn digest_of_known_text() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("abc");
        std::fs::write(&p, "abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn vol_csv_with_gaps() {
        let text = "date,cut_s,vol\nd1,3600,0.5\nd2,3600,NA\n";
        let rows = read_vol_csv(text.as_bytes(), "vol").unwrap();
        assert_eq!(rows[0].vol, Some(0.5));
        assert_eq!(rows[1].cut_s, Some(3600.0));
        assert_eq!(rows[1].vol, None);
        assert!(read_vol_csv("day,vol\n".as_bytes(), "vol").is_err());
    }
}
