//! Deterministic serialization: tables and Q-grids rendered to CSV or JSON,
//! collected in memory, then committed to the output directory in one go.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tnt_core::husimi::QGrid;

use crate::config::{OutputFormat, Resolved};
use crate::error::CliResult;

/// C-style `%.12e`: twelve mantissa digits and a signed, at least two-digit
/// exponent.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Named columns of equal length.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<(String, Vec<f64>)>,
}

impl Table {
    pub fn new() -> Self {
        Self { columns: Vec::new() }
    }

    pub fn with(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.columns.push((name.into(), values));
        self
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.1.len())
    }

    fn csv(&self, hash: &str) -> String {
        debug_assert!(self.columns.iter().all(|c| c.1.len() == self.rows()));
        let mut out = format!("# config_hash={hash}\n");
        out += &self.columns.iter().map(|c| c.0.as_str()).collect::<Vec<_>>().join(",");
        out.push('\n');
        for i in 0..self.rows() {
            out += &self.columns.iter().map(|c| sci(c.1[i])).collect::<Vec<_>>().join(",");
            out.push('\n');
        }
        out
    }

    fn json(&self, hash: &str) -> Value {
        let mut data = serde_json::Map::new();
        for (name, values) in &self.columns {
            data.insert(name.clone(), json!(values.iter().map(|&v| finite_or_null(v)).collect::<Vec<_>>()));
        }
        json!({
            "config_hash": hash,
            "columns": self.columns.iter().map(|c| c.0.clone()).collect::<Vec<_>>(),
            "data": data,
        })
    }
}

impl Default for Table {
    fn default() -> Self {
        Self::new()
    }
}

fn finite_or_null(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn qgrid_csv(q: &QGrid, hash: &str, label: &str) -> String {
    let mut out = format!("# config_hash={hash}\n");
    out += &format!("# n_theta={},n_phi={},normalized={}{label}\n", q.n_theta, q.n_phi, u8::from(q.normalized));
    for row in q.rows() {
        out += &row.iter().map(|&v| sci(v)).collect::<Vec<_>>().join(",");
        out.push('\n');
    }
    out
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

/// Files produced by one command, held until [`Bundle::commit`].
pub struct Bundle {
    hash: String,
    format: OutputFormat,
    files: Vec<(String, String)>,
}

impl Bundle {
    pub fn new(resolved: &Resolved) -> Self {
        Self { hash: resolved.hash(), format: resolved.format, files: Vec::new() }
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    fn push(&mut self, name: String, body: String) {
        debug_assert!(!self.files.iter().any(|f| f.0 == name), "duplicate output {name}");
        self.files.push((name, body));
    }

    pub fn table(&mut self, stem: &str, table: &Table) {
        match self.format {
            OutputFormat::Csv => self.push(format!("{stem}.csv"), table.csv(&self.hash)),
            OutputFormat::Json => self.push(format!("{stem}.json"), pretty(&table.json(&self.hash))),
        }
    }

    /// `label` is appended to the CSV shape line, e.g. `",chi_t=0.0238"`.
    pub fn qgrid(&mut self, stem: &str, q: &QGrid, label: &str) {
        match self.format {
            OutputFormat::Csv => self.push(format!("{stem}.csv"), qgrid_csv(q, &self.hash, label)),
            OutputFormat::Json => {
                let rows: Vec<Vec<f64>> = q.rows().map(|r| r.to_vec()).collect();
                let v = json!({
                    "config_hash": self.hash,
                    "n_theta": q.n_theta,
                    "n_phi": q.n_phi,
                    "normalized": q.normalized,
                    "label": label.trim_start_matches(','),
                    "values": rows,
                });
                self.push(format!("{stem}.json"), pretty(&v));
            }
        }
    }

    /// Scalar summaries are always JSON; `config_hash` is added.
    pub fn summary(&mut self, stem: &str, mut v: Value) {
        if let Value::Object(map) = &mut v {
            map.insert("config_hash".into(), json!(self.hash));
        }
        self.push(format!("{stem}.json"), pretty(&v));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|f| f.0.clone()).collect()
    }

    /// Writes everything plus `manifest.json` into a staging directory next
    /// to `out`, then moves the files into `out`. On failure nothing is left
    /// behind in `out` from this run.
    pub fn commit(mut self, out: &Path, command: &str, preset: Option<&str>, resolved: &Resolved) -> CliResult<Vec<PathBuf>> {
        let manifest = Manifest {
            tool: "tnt-readout".into(),
            version: tnt_core::VERSION.into(),
            command: command.into(),
            preset: preset.map(str::to_string),
            config_hash: self.hash.clone(),
            config: resolved.clone(),
            files: self.names(),
        };
        self.files.push(("manifest.json".into(), pretty(&serde_json::to_value(&manifest).expect("manifest serializes"))));

        let staging = staging_dir(out);
        let result = (|| -> CliResult<Vec<PathBuf>> {
            if staging.exists() {
                fs::remove_dir_all(&staging)?;
            }
            fs::create_dir_all(&staging)?;
            for (name, body) in &self.files {
                fs::write(staging.join(name), body)?;
            }
            fs::create_dir_all(out)?;
            let mut written = Vec::new();
            for (name, _) in &self.files {
                let dest = out.join(name);
                fs::rename(staging.join(name), &dest)?;
                written.push(dest);
            }
            Ok(written)
        })();
        let _ = fs::remove_dir_all(&staging);
        result
    }
}

fn staging_dir(out: &Path) -> PathBuf {
    let name = out.file_name().map_or_else(|| "out".into(), |n| n.to_string_lossy().into_owned());
    let parent = out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parent.join(format!(".{name}.partial-{}", std::process::id()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub preset: Option<String>,
    pub config_hash: String,
    pub config: Resolved,
    pub files: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RunConfig;

    #[test]
    fn c_style_exponent() {
        assert_eq!(sci(0.0), "0.000000000000e+00");
        assert_eq!(sci(1.0), "1.000000000000e+00");
        assert_eq!(sci(-1234.5), "-1.234500000000e+03");
        assert_eq!(sci(2.5e-7), "2.500000000000e-07");
        assert_eq!(sci(1e100), "1.000000000000e+100");
        assert_eq!(sci(f64::NAN), "nan");
    }

    #[test]
    fn csv_layout() {
        let t = Table::new().with("sigma", vec![0.0, 0.5]).with("fc", vec![100.0, 42.0]);
        let s = t.csv("abc");
        assert_eq!(
            s,
            "# config_hash=abc\nsigma,fc\n0.000000000000e+00,1.000000000000e+02\n5.000000000000e-01,4.200000000000e+01\n"
        );
        assert!(!s.contains('\r'));
    }

    #[test]
    fn commit_writes_manifest_and_cleans_staging() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("run");
        let resolved = RunConfig::default().resolve().unwrap();
        let mut b = Bundle::new(&resolved);
        b.table("t", &Table::new().with("x", vec![1.0]));
        let files = b.commit(&out, "run", None, &resolved).unwrap();
        assert_eq!(files.len(), 2);
        let m: Manifest = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.config.hash(), m.config_hash);
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(leftovers.len(), 1, "{leftovers:?}");
    }
}
