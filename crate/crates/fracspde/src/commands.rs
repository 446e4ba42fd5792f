//! Implementations of the CLI subcommands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use fracspde_core::convergence::StudyMode;
use fracspde_core::cq::Discretization;
use fracspde_core::noise::{NoiseGridSpec, SheetSampler};

use crate::config::{preset, Config, ConfigError};
use crate::output::{self, OutputDir, RunManifest, TableSummary, Versions};
use crate::study::{run_study, synthetic_table, StudyError};
use crate::verify::{Report, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error("solver failed: {0}")]
    Core(#[from] fracspde_core::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl CommandError {
    /// 1 for runtime failures, 2 for configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: usize,
    pub out: PathBuf,
    pub paper_scale: bool,
}

impl Common {
    fn load(&self) -> Result<Config, ConfigError> {
        match &self.config {
            Some(path) => Config::load(path),
            None => Err(ConfigError::Field { field: "--config".into(), message: "a configuration file is required".into() }),
        }
    }
}

fn finish(
    mut out: OutputDir,
    command: String,
    config: &Config,
    seed: u64,
    common: &Common,
    started: f64,
) -> Result<Vec<PathBuf>, CommandError> {
    let mut outputs = out.written().to_vec();
    outputs.push("manifest.json".into());
    let manifest = RunManifest {
        command,
        config,
        seed,
        workers: common.workers.max(1),
        versions: Versions::default(),
        started_unix: started,
        finished_unix: output::unix_now(),
        outputs,
    };
    out.write_json("manifest.json", &manifest)?;
    Ok(out.written().iter().map(|f| common.out.join(f)).collect())
}

/// One trajectory on the configured grid; the noise seed is the run seed.
pub fn solve(common: &Common) -> Result<Vec<PathBuf>, CommandError> {
    let started = output::unix_now();
    let mut config = common.load()?;
    let spec = config.problem_spec()?;
    let grid = config.grid()?;
    let seed = config.resolve_seed(common.seed)?;
    config.seed = Some(seed);

    let noise_grid = NoiseGridSpec::new(grid.m_t, grid.n_x, spec.t_final(), spec.length())?;
    let noise = SheetSampler::new(noise_grid, spec.hurst())?.sample_seeded(seed);
    let disc = Discretization::new(spec, grid.m_t, grid.n_x)?;
    let result = disc.run(&noise, &config.output.snapshots)?;

    let mut out = OutputDir::create(&common.out)?;
    out.write("solution.csv", &output::solution_csv(&result.final_state))?;
    if !result.snapshots.is_empty() {
        out.write("snapshots.csv", &output::snapshots_csv(&result, disc.tau()))?;
    }
    finish(out, "solve".into(), &config, seed, common, started)
}

pub fn sample_noise(common: &Common) -> Result<Vec<PathBuf>, CommandError> {
    let started = output::unix_now();
    let mut config = common.load()?;
    let spec = config.problem_spec()?;
    let grid = config.grid()?;
    let seed = config.resolve_seed(common.seed)?;
    config.seed = Some(seed);

    let noise_grid = NoiseGridSpec::new(grid.m_t, grid.n_x, spec.t_final(), spec.length())?;
    let field = SheetSampler::new(noise_grid, spec.hurst())?.sample_seeded(seed);
    let mut out = OutputDir::create(&common.out)?;
    out.write("noise.csv", &output::field_csv(&field, spec.hurst(), seed))?;
    finish(out, "sample-noise".into(), &config, seed, common, started)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TableOptions {
    /// `(alpha, H1, H2)` of the built-in preset; ignored with `--config`.
    pub params: Option<(f64, f64, f64)>,
    pub synthetic_rate: Option<f64>,
}

/// First row of each table.
pub fn default_params(mode: StudyMode) -> (f64, f64, f64) {
    match mode {
        StudyMode::Temporal => (0.3, 0.3, 0.5),
        StudyMode::Spatial => (0.3, 0.5, 0.5),
    }
}

pub fn table(mode: StudyMode, common: &Common, options: TableOptions) -> Result<Vec<PathBuf>, CommandError> {
    let started = output::unix_now();
    let clock = Instant::now();
    let mut config = match &common.config {
        Some(path) => {
            let mut c = Config::load(path)?;
            if common.paper_scale {
                let p = &c.problem;
                c.study = preset(mode, p.alpha, p.h1, p.h2, true).study;
            }
            c
        }
        None => {
            let (a, h1, h2) = options.params.unwrap_or_else(|| default_params(mode));
            preset(mode, a, h1, h2, common.paper_scale)
        }
    };
    let seed = config.resolve_seed(common.seed)?;
    config.seed = Some(seed);
    let study = config.study_config(mode, seed)?;

    let table = match options.synthetic_rate {
        Some(rate) => synthetic_table(&study, rate)?,
        None => run_study(study, common.workers)?,
    };
    let wall = clock.elapsed().as_secs_f64();

    let mut out = OutputDir::create(&common.out)?;
    out.write(&format!("table_{}.csv", mode.name()), &output::table_csv(&table))?;
    let summary = TableSummary {
        mode: mode.name(),
        config: &config,
        seed,
        synthetic_rate: options.synthetic_rate,
        params: [table.alpha, table.h1, table.h2],
        errors: &table.errors,
        rates: &table.rates,
        mean_rate: table.mean_rate,
        theoretical_rate: table.theoretical_rate,
        wall_time_seconds: wall,
    };
    out.write_json(&format!("summary_{}.json", mode.name()), &summary)?;
    finish(out, format!("table {}", mode.name()), &config, seed, common, started)
}

/// Runs `suite` and writes `verify_<suite>.json` when `out` is given.
pub fn verify(suite: Suite, out: Option<&Path>) -> Result<Report, CommandError> {
    let report = suite.run();
    if let Some(dir) = out {
        OutputDir::create(dir)?.write_json(&format!("verify_{suite}.json"), &report)?;
    }
    Ok(report)
}
