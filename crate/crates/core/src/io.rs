//! CSV and JSON export, and the on-disk cache for bisection reports.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::BisectionReport;
use crate::error::{Error, Result};
use crate::phi::PhiSolution;
use crate::profile::ProfileSolution;
use crate::residual::ResidualCell;

/// Tag stored with every cache entry; bump when numerics change.
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "+bisect.1");
pub const CACHE_DIR_ENV: &str = "SELFSIM_CACHE_DIR";
const DEFAULT_CACHE_DIR: &str = ".selfsim-cache";

/// Shortest round-trip decimal.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        ryu::Buffer::new().format_finite(x).to_owned()
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn csv<const K: usize>(header: [&str; K], rows: impl Iterator<Item = [f64; K]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn profile_csv(sol: &ProfileSolution) -> String {
    csv(
        ["r", "f", "fp", "g", "w", "wp", "E"],
        sol.samples.iter().map(|s| [s.r, s.f, s.fp, s.g, s.w, s.wp, s.e]),
    )
}

pub fn phi_csv(sol: &PhiSolution) -> String {
    let h = sol.params.p / 2.0;
    csv(
        ["xi", "phi", "phi_over_xi_p2", "slack_upper"],
        sol.samples.iter().map(|s| [s.xi, s.phi, s.phi * s.xi.powf(-h), s.deficit]),
    )
}

/// Excluded cells are written with an empty residual.
pub fn residual_csv(cells: &[ResidualCell]) -> String {
    let mut out = String::from("t,r,residual\n");
    for c in cells {
        out.push_str(&fmt_f64(c.t));
        out.push(',');
        out.push_str(&fmt_f64(c.r));
        out.push(',');
        if let Some(v) = c.residual {
            out.push_str(&fmt_f64(v));
        }
        out.push('\n');
    }
    out
}

/// Pretty JSON terminated by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.into(), source })?;
    }
    fs::write(path, text).map_err(|source| Error::Io { path: path.into(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CacheKey {
    #[serde(rename = "N")]
    pub n: u32,
    pub p: f64,
    pub tol_beta: f64,
    pub r_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub version: String,
    pub key: CacheKey,
    pub report: BisectionReport,
}

#[derive(Debug, Clone)]
pub struct BisectCache {
    pub dir: PathBuf,
}

impl BisectCache {
    /// `dir`, else the environment override, else a local default.
    pub fn locate(dir: Option<PathBuf>) -> BisectCache {
        let dir = dir
            .or_else(|| std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        BisectCache { dir }
    }

    pub fn path(&self, key: &CacheKey) -> PathBuf {
        // bit patterns keep distinct keys distinct in the file name
        self.dir.join(format!(
            "bisect-N{}-p{:016x}-tol{:016x}-rmax{:016x}.json",
            key.n,
            key.p.to_bits(),
            key.tol_beta.to_bits(),
            key.r_max.to_bits()
        ))
    }

    /// A stored report for `key`, or `None` when missing, unreadable or stale.
    pub fn get(&self, key: &CacheKey) -> Option<BisectionReport> {
        let entry: CacheEntry = read_json(&self.path(key)).ok()?;
        (entry.version == CODE_VERSION && entry.key == *key).then_some(entry.report)
    }

    pub fn put(&self, key: &CacheKey, report: &BisectionReport) -> Result<()> {
        let entry = CacheEntry { version: CODE_VERSION.into(), key: *key, report: report.clone() };
        let path = self.path(key);
        let tmp = path.with_extension("json.tmp");
        write_json(&tmp, &entry)?;
        fs::rename(&tmp, &path).map_err(|source| Error::Io { path, source })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{BisectionStatus, HistoryEntry, Verdict};

    fn report() -> BisectionReport {
        BisectionReport {
            n: 2,
            p: 1.6,
            beta_star: 0.1 + 0.2,
            bracket_lo: 0.3,
            bracket_hi: 0.30000001,
            iterations: 1,
            tol_beta: 1e-8,
            r_max: 30f64.exp(),
            history: vec![HistoryEntry { beta: 1.0 / 3.0, verdict: Verdict::C, witness_r: 12.5 }],
            status: BisectionStatus::Converged,
        }
    }

    #[test]
    fn shortest_round_trip() {
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1.0), "1.0");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn bisection_json_keys_in_order() {
        let s = to_json(&report());
        let keys = ["\"N\"", "\"p\"", "\"beta_star\"", "\"bracket_lo\"", "\"bracket_hi\"", "\"iterations\"",
            "\"tol_beta\"", "\"r_max\"", "\"history\""];
        let pos: Vec<usize> = keys.iter().map(|k| s.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert!(s.ends_with('\n'));
        let back: BisectionReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, report());
    }

    #[test]
    fn cache_round_trip_and_staleness() {
        let dir = tempfile::tempdir().unwrap();
        let cache = BisectCache { dir: dir.path().into() };
        let key = CacheKey { n: 2, p: 1.6, tol_beta: 1e-8, r_max: 30f64.exp() };
        assert!(cache.get(&key).is_none());
        cache.put(&key, &report()).unwrap();
        assert_eq!(to_json(&cache.get(&key).unwrap()), to_json(&report()));

        let other = CacheKey { tol_beta: 1e-7, ..key };
        assert!(cache.get(&other).is_none());

        let mut stale: CacheEntry = read_json(&cache.path(&key)).unwrap();
        stale.version = "0.0.0+old".into();
        write_json(&cache.path(&key), &stale).unwrap();
        assert!(cache.get(&key).is_none());
    }

    #[test]
    fn io_errors_carry_the_path() {
        let e = read_json::<CacheEntry>(Path::new("/nonexistent/dir/x.json")).unwrap_err();
        assert!(e.to_string().contains("/nonexistent/dir/x.json"));
    }
}
