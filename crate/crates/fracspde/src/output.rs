//! CSV and JSON writers.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fracspde_core::convergence::RateTable;
use fracspde_core::cq::TrajectoryResult;
use fracspde_core::fem::FemFunction;
use fracspde_core::noise::{BoxIncrementField, HurstPair, NoiseGridSpec};
use serde::Serialize;

use crate::config::Config;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn table_csv(table: &RateTable) -> String {
    let mut s = String::from("level,m_t,n_x,error,rate\n");
    for (k, (&(m_t, n_x), e)) in table.levels.iter().zip(&table.errors).enumerate() {
        let rate = table.rates.get(k.wrapping_sub(1)).filter(|_| k > 0).map(|&r| fmt_f64(r)).unwrap_or_default();
        let _ = writeln!(s, "{k},{m_t},{n_x},{},{rate}", fmt_f64(*e));
    }
    s
}

#[derive(Debug, Serialize)]
pub struct TableSummary<'a> {
    pub mode: &'static str,
    pub config: &'a Config,
    pub seed: u64,
    pub synthetic_rate: Option<f64>,
    pub params: [f64; 3],
    pub errors: &'a [f64],
    pub rates: &'a [f64],
    pub mean_rate: Option<f64>,
    pub theoretical_rate: Option<f64>,
    pub wall_time_seconds: f64,
}

/// Nodal values including the two boundary zeros: `j,x,u`.
pub fn solution_csv(u: &FemFunction) -> String {
    let mut s = String::from("j,x,u\n");
    for j in 0..=u.mesh().elements() {
        let _ = writeln!(s, "{j},{},{}", fmt_f64(u.mesh().node(j)), fmt_f64(u.nodal(j)));
    }
    s
}

/// Long format `step,t,j,x,u`.
pub fn snapshots_csv(result: &TrajectoryResult, tau: f64) -> String {
    let mut s = String::from("step,t,j,x,u\n");
    for (step, u) in &result.snapshots {
        let t = fmt_f64(*step as f64 * tau);
        for j in 0..=u.mesh().elements() {
            let _ = writeln!(s, "{step},{t},{j},{},{}", fmt_f64(u.mesh().node(j)), fmt_f64(u.nodal(j)));
        }
    }
    s
}

pub fn field_csv(field: &BoxIncrementField, hurst: HurstPair, seed: u64) -> String {
    let spec = field.spec();
    let mut s = String::from("# m_t n_x tau h H1 H2 seed\n");
    let _ = writeln!(
        s,
        "# {} {} {} {} {} {} {seed}",
        spec.m_t(),
        spec.n_x(),
        fmt_f64(spec.tau()),
        fmt_f64(spec.h()),
        fmt_f64(hurst.h1()),
        fmt_f64(hurst.h2())
    );
    for row in field.values().as_slice().chunks(spec.n_x()) {
        let line: Vec<_> = row.iter().map(|&v| fmt_f64(v)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

#[derive(Debug, PartialEq)]
pub struct FieldDump {
    pub m_t: usize,
    pub n_x: usize,
    pub tau: f64,
    pub h: f64,
    pub h1: f64,
    pub h2: f64,
    pub seed: u64,
    pub values: Vec<f64>,
}

/// Inverse of [`field_csv`].
pub fn parse_field_csv(text: &str) -> Result<FieldDump, String> {
    let mut lines = text.lines();
    if lines.next() != Some("# m_t n_x tau h H1 H2 seed") {
        return Err("missing header line".into());
    }
    let meta: Vec<&str> = lines
        .next()
        .and_then(|l| l.strip_prefix("# "))
        .ok_or("missing metadata line")?
        .split(' ')
        .collect();
    if meta.len() != 7 {
        return Err(format!("expected 7 metadata fields, found {}", meta.len()));
    }
    let int = |s: &str| s.parse::<u64>().map_err(|e| format!("{s}: {e}"));
    let float = |s: &str| s.parse::<f64>().map_err(|e| format!("{s}: {e}"));
    let (m_t, n_x) = (int(meta[0])? as usize, int(meta[1])? as usize);
    let mut values = Vec::with_capacity(m_t * n_x);
    for line in lines {
        for v in line.split(',') {
            values.push(float(v)?);
        }
    }
    if values.len() != m_t * n_x {
        return Err(format!("expected {} values, found {}", m_t * n_x, values.len()));
    }
    Ok(FieldDump {
        m_t,
        n_x,
        tau: float(meta[2])?,
        h: float(meta[3])?,
        h1: float(meta[4])?,
        h2: float(meta[5])?,
        seed: int(meta[6])?,
        values,
    })
}

impl FieldDump {
    pub fn grid(&self, t_final: f64, length: f64) -> Result<NoiseGridSpec, fracspde_core::Error> {
        NoiseGridSpec::new(self.m_t, self.n_x, t_final, length)
    }
}

/// Record of one CLI invocation. Feeding it back through `--config`
/// replays the run.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub command: String,
    pub config: &'a Config,
    pub seed: u64,
    pub workers: usize,
    pub versions: Versions,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub fracspde: &'static str,
    pub fracspde_core: &'static str,
}

impl Default for Versions {
    fn default() -> Self {
        Versions { fracspde: env!("CARGO_PKG_VERSION"), fracspde_core: fracspde_core::VERSION }
    }
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Collects written files so the manifest can list them.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputDir { root: root.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<PathBuf> {
        let path = self.root.join(name);
        std::fs::write(&path, contents)?;
        self.written.push(name.to_owned());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        self.write(name, &text)
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fracspde_core::noise::{sample_sheet_increments, trajectory_rng};

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn field_dump_round_trips() {
        let spec = NoiseGridSpec::new(3, 4, 0.3, 2.0).unwrap();
        let hurst = HurstPair::new(0.3, 0.4).unwrap();
        let field = sample_sheet_increments(spec, hurst, &mut trajectory_rng(17)).unwrap();
        let dump = parse_field_csv(&field_csv(&field, hurst, 17)).unwrap();
        assert_eq!((dump.m_t, dump.n_x, dump.seed), (3, 4, 17));
        assert_eq!((dump.h1, dump.h2, dump.tau, dump.h), (0.3, 0.4, spec.tau(), spec.h()));
        assert_eq!(dump.values, field.values().as_slice());
    }
}
