use std::fs;
use std::path::{Path, PathBuf};

use crate::config::Resolver;
use crate::CliResult;

pub const MANIFEST: &str = "manifest.txt";

/// Output directory plus the manifest that every file in it refers to.
pub struct Run {
    pub dir: PathBuf,
}

impl Run {
    /// Create the directory and write the manifest from the resolved
    /// parameters. Nothing time- or host-dependent goes into it.
    pub fn start(subcommand: &str, res: &Resolver, out: &Path, seed: u64) -> CliResult<Self> {
        let params = res.finish()?;
        fs::create_dir_all(out)?;
        let mut text = String::new();
        text.push_str(&format!("subcommand = {subcommand}\n"));
        text.push_str(&format!("config = {}\n", res.config_path().unwrap_or("none")));
        text.push_str(&format!("seed = {seed}\n"));
        text.push_str(&format!("out = {}\n", out.display()));
        text.push_str(&format!("version = {} {}\n", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")));
        for (k, v) in params {
            if k != "seed" && k != "out" {
                text.push_str(&format!("{k} = {v}\n"));
            }
        }
        fs::write(out.join(MANIFEST), text)?;
        Ok(Self { dir: out.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a CSV whose last column names the manifest.
    pub fn write_csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path)?;
        let mut h = header.to_vec();
        h.push("manifest".into());
        w.write_record(&h)?;
        for r in rows {
            let mut r = r.clone();
            r.push(MANIFEST.into());
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(path)
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text)?;
        Ok(path)
    }
}

pub fn out_dir(res: &Resolver, flag: Option<PathBuf>) -> CliResult<PathBuf> {
    let s: String = res.get("out", flag.map(|p| p.display().to_string()), "tracegn-out".into())?;
    Ok(PathBuf::from(s))
}

/// Shortest round-trip float formatting, identical on every run.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn opt_num<T: ToString>(v: Option<T>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}
