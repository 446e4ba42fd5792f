//! Monte Carlo convergence studies with coupled noise.
//!
//! Every trajectory draws one sheet on the finest noise grid of the study;
//! each solver resolution consumes that sheet aggregated down to its own
//! grid, so differences between neighbouring levels measure discretization
//! error on a shared realization.

use alloc::format;
use alloc::vec::Vec;

use crate::cq::Discretization;
use crate::error::{Error, Result};
use crate::fem::{l2_norm, refine_embed, FemFunction};
use crate::noise::{aggregate, BoxIncrementField, NoiseGridSpec, SheetSampler};
use crate::problem::{regularity_index, ProblemSpec};
use crate::noise::HurstPair;

/// Root-mean-square temporal rate `(2 H2 + (H1 - 1) alpha) / 2`.
pub fn theoretical_temporal_rate(alpha: f64, h1: f64, h2: f64) -> Result<f64> {
    let index = regularity_index(alpha, HurstPair::new(h1, h2)?);
    if index <= 0.0 {
        return Err(Error::StandingAssumption { alpha, h1, h2, value: index });
    }
    Ok(index / 2.0)
}

/// Root-mean-square spatial rate `(2 sigma + 2 H1 - 1) / 2` with
/// `sigma = min(2 H2 / alpha - 1/2, 1)`.
pub fn theoretical_spatial_rate(alpha: f64, h1: f64, h2: f64) -> Result<f64> {
    HurstPair::new(h1, h2)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid("alpha", format!("must lie in (0, 1], got {alpha}")));
    }
    let sigma = (2.0 * h2 / alpha - 0.5).min(1.0);
    let rate = (2.0 * sigma + 2.0 * h1 - 1.0) / 2.0;
    if rate <= 0.0 {
        return Err(Error::invalid("rate", format!("predicted spatial rate {rate} is not positive")));
    }
    Ok(rate)
}

/// `ln(e_k / e_{k+1}) / ln 2` for consecutive entries.
pub fn successive_rates(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| libm::log(w[0] / w[1]) / core::f64::consts::LN_2).collect()
}

/// Root mean square accumulated in the order samples are pushed.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RmsAccumulator {
    sum_sq: f64,
    count: usize,
}

impl RmsAccumulator {
    pub fn push(&mut self, sample: f64) {
        self.sum_sq += sample * sample;
        self.count += 1;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn rms(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            libm::sqrt(self.sum_sq / self.count as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    Temporal,
    Spatial,
}

impl StudyMode {
    pub fn name(&self) -> &'static str {
        match self {
            StudyMode::Temporal => "temporal",
            StudyMode::Spatial => "spatial",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub spec: ProblemSpec,
    /// Number of Monte Carlo trajectories.
    pub trajectories: usize,
    /// Step counts (temporal) or element counts (spatial), doubling.
    pub levels: Vec<usize>,
    /// Element count (temporal) or step count (spatial) held fixed.
    pub fixed: usize,
    pub base_seed: u64,
    pub mode: StudyMode,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trajectories == 0 {
            return Err(Error::invalid("trajectories", "need at least one trajectory"));
        }
        if self.levels.is_empty() {
            return Err(Error::invalid("levels", "need at least one refinement level"));
        }
        if self.levels[0] == 0 {
            return Err(Error::invalid("levels", "levels must be positive"));
        }
        if let Some(w) = self.levels.windows(2).find(|w| w[1] != 2 * w[0]) {
            return Err(Error::invalid("levels", format!("levels must double: {} -> {}", w[0], w[1])));
        }
        if self.fixed == 0 {
            return Err(Error::invalid("fixed", "fixed resolution must be positive"));
        }
        let min_elements = match self.mode {
            StudyMode::Temporal => self.fixed,
            StudyMode::Spatial => self.levels[0],
        };
        if min_elements < 2 {
            return Err(Error::invalid("n_x", "meshes need at least 2 elements"));
        }
        Ok(())
    }

    /// `(m_t, n_x)` of every reported level.
    pub fn level_grids(&self) -> Vec<(usize, usize)> {
        self.levels.iter().map(|&v| self.grid_at(v)).collect()
    }

    fn grid_at(&self, varying: usize) -> (usize, usize) {
        match self.mode {
            StudyMode::Temporal => (varying, self.fixed),
            StudyMode::Spatial => (self.fixed, varying),
        }
    }

    /// Finest solver resolution: twice the last level.
    pub fn finest_grid(&self) -> (usize, usize) {
        self.grid_at(2 * self.levels[self.levels.len() - 1])
    }

    pub fn noise_grid(&self) -> Result<NoiseGridSpec> {
        let (m_t, n_x) = self.finest_grid();
        NoiseGridSpec::new(m_t, n_x, self.spec.t_final(), self.spec.length())
    }

    pub fn trajectory_seed(&self, index: usize) -> u64 {
        self.base_seed.wrapping_add(index as u64)
    }
}

/// Per-level RMS errors and observed rates of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTable {
    pub alpha: f64,
    pub h1: f64,
    pub h2: f64,
    pub mode: StudyMode,
    /// `(m_t, n_x)` per level.
    pub levels: Vec<(usize, usize)>,
    pub errors: Vec<f64>,
    /// `rates[k]` compares levels `k` and `k + 1`.
    pub rates: Vec<f64>,
    pub mean_rate: Option<f64>,
    pub theoretical_rate: Option<f64>,
}

impl RateTable {
    pub fn from_errors(config: &StudyConfig, errors: Vec<f64>) -> Result<Self> {
        if errors.len() != config.levels.len() {
            return Err(Error::DimensionMismatch { what: "error levels", expected: config.levels.len(), found: errors.len() });
        }
        let rates = successive_rates(&errors);
        let mean_rate = if rates.is_empty() { None } else { Some(rates.iter().sum::<f64>() / rates.len() as f64) };
        let (alpha, hurst) = (config.spec.alpha(), config.spec.hurst());
        let theoretical_rate = match config.mode {
            StudyMode::Temporal => theoretical_temporal_rate(alpha, hurst.h1(), hurst.h2()),
            StudyMode::Spatial => theoretical_spatial_rate(alpha, hurst.h1(), hurst.h2()),
        }
        .ok();
        Ok(RateTable {
            alpha,
            h1: hurst.h1(),
            h2: hurst.h2(),
            mode: config.mode,
            levels: config.level_grids(),
            errors,
            rates,
            mean_rate,
            theoretical_rate,
        })
    }
}

/// Everything a study needs that is shared across trajectories: the noise
/// sampler on the finest grid and one discretization per resolution.
#[derive(Debug, Clone)]
pub struct StudyPlan {
    config: StudyConfig,
    sampler: SheetSampler,
    // levels followed by the finest comparison grid
    discretizations: Vec<Discretization>,
}

impl StudyPlan {
    pub fn new(config: StudyConfig) -> Result<Self> {
        config.validate()?;
        let sampler = SheetSampler::new(config.noise_grid()?, config.spec.hurst())?;
        let mut grids = config.level_grids();
        grids.push(config.finest_grid());
        let discretizations = grids
            .iter()
            .map(|&(m_t, n_x)| Discretization::new(config.spec, m_t, n_x))
            .collect::<Result<Vec<_>>>()?;
        Ok(StudyPlan { config, sampler, discretizations })
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn sampler(&self) -> &SheetSampler {
        &self.sampler
    }

    /// Finest-grid sheet of trajectory `index`.
    pub fn noise(&self, index: usize) -> BoxIncrementField {
        self.sampler.sample_seeded(self.config.trajectory_seed(index))
    }

    /// `||u_level - u_next||_{L^2}` for every level of trajectory `index`.
    pub fn trajectory_errors(&self, index: usize) -> Result<Vec<f64>> {
        let fine = self.noise(index);
        let (fm, fn_) = (fine.spec().m_t(), fine.spec().n_x());
        let mut finals = Vec::with_capacity(self.discretizations.len());
        for disc in &self.discretizations {
            let noise = aggregate(&fine, fm / disc.m_t(), fn_ / disc.mesh().elements())?;
            finals.push(disc.run(&noise, &[])?.final_state);
        }
        finals.windows(2).map(|w| level_gap(&w[0], &w[1])).collect()
    }

    /// Sequential study: RMS over trajectories in index order.
    pub fn run(&self) -> Result<RateTable> {
        let mut acc = alloc::vec![RmsAccumulator::default(); self.config.levels.len()];
        for i in 0..self.config.trajectories {
            for (a, e) in acc.iter_mut().zip(self.trajectory_errors(i)?) {
                a.push(e);
            }
        }
        RateTable::from_errors(&self.config, acc.iter().map(RmsAccumulator::rms).collect())
    }
}

/// L2 distance between solutions at neighbouring levels; the coarse one is
/// embedded exactly into the finer mesh when the meshes differ.
pub fn level_gap(coarse: &FemFunction, fine: &FemFunction) -> Result<f64> {
    let ratio = fine.mesh().elements() / coarse.mesh().elements();
    if ratio == 0 || coarse.mesh().elements() * ratio != fine.mesh().elements() || !ratio.is_power_of_two() {
        return Err(Error::invalid("mesh", "finer mesh must be a dyadic refinement"));
    }
    let embedded = refine_embed(coarse, ratio.trailing_zeros());
    Ok(l2_norm(&embedded.sub(fine)?))
}

/// `||u_tau - u_{tau/2}||` at `T` for a sheet sampled on the finer grid.
/// `fine_noise` must have `n_x` space boxes and a multiple of `2 m_t` time boxes.
pub fn error_temporal_on(spec: &ProblemSpec, fine_noise: &BoxIncrementField, m_t: usize) -> Result<f64> {
    let g = fine_noise.spec();
    if m_t == 0 || !g.m_t().is_multiple_of(2 * m_t) {
        return Err(Error::NotDivisible { dimension: "time", size: g.m_t(), factor: 2 * m_t });
    }
    let n_x = g.n_x();
    let half = aggregate(fine_noise, g.m_t() / (2 * m_t), 1)?;
    let full = aggregate(fine_noise, g.m_t() / m_t, 1)?;
    let a = Discretization::new(*spec, m_t, n_x)?.run(&full, &[])?;
    let b = Discretization::new(*spec, 2 * m_t, n_x)?.run(&half, &[])?;
    level_gap(&a.final_state, &b.final_state)
}

/// Temporal error sample of the trajectory seeded `seed`, noise drawn on
/// the `(2 m_t, n_x)` grid.
pub fn error_temporal(spec: &ProblemSpec, seed: u64, m_t: usize, n_x: usize) -> Result<f64> {
    let grid = NoiseGridSpec::new(2 * m_t, n_x, spec.t_final(), spec.length())?;
    let noise = SheetSampler::new(grid, spec.hurst())?.sample_seeded(seed);
    error_temporal_on(spec, &noise, m_t)
}

/// `||u_h - u_{h/2}||` at `T`. `fine_noise` must have `m_t` time boxes and
/// a multiple of `2 n_x` space boxes.
pub fn error_spatial_on(spec: &ProblemSpec, fine_noise: &BoxIncrementField, n_x: usize) -> Result<f64> {
    let g = fine_noise.spec();
    if n_x == 0 || !g.n_x().is_multiple_of(2 * n_x) {
        return Err(Error::NotDivisible { dimension: "space", size: g.n_x(), factor: 2 * n_x });
    }
    let m_t = g.m_t();
    let half = aggregate(fine_noise, 1, g.n_x() / (2 * n_x))?;
    let full = aggregate(fine_noise, 1, g.n_x() / n_x)?;
    let a = Discretization::new(*spec, m_t, n_x)?.run(&full, &[])?;
    let b = Discretization::new(*spec, m_t, 2 * n_x)?.run(&half, &[])?;
    level_gap(&a.final_state, &b.final_state)
}

pub fn error_spatial(spec: &ProblemSpec, seed: u64, n_x: usize, m_t: usize) -> Result<f64> {
    let grid = NoiseGridSpec::new(m_t, 2 * n_x, spec.t_final(), spec.length())?;
    let noise = SheetSampler::new(grid, spec.hurst())?.sample_seeded(seed);
    error_spatial_on(spec, &noise, n_x)
}

/// Least-squares fit of `log E||u(T) - u(T - lag)||^2` against `log lag`.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderEstimate {
    /// Slope of the mean-square increments.
    pub ms_exponent: f64,
    /// Slope of the RMS increments, half of `ms_exponent`.
    pub rms_slope: f64,
    /// Standard error of `ms_exponent`.
    pub std_error: f64,
    /// `(lag in time units, RMS increment)`.
    pub points: Vec<(f64, f64)>,
}

/// Mean-square time regularity of the discrete solution at `T`, from
/// `trajectories` independent runs on an `(m_t, n_x)` grid. `lags` are step
/// multiples.
pub fn holder_diagnostic(
    spec: &ProblemSpec,
    m_t: usize,
    n_x: usize,
    trajectories: usize,
    lags: &[usize],
    base_seed: u64,
) -> Result<HolderEstimate> {
    if trajectories < 50 {
        return Err(Error::invalid("m", format!("need at least 50 trajectories, got {trajectories}")));
    }
    if lags.len() < 3 {
        return Err(Error::invalid("lags", "need at least three lags for a slope with error"));
    }
    if let Some(bad) = lags.iter().find(|&&g| g == 0 || g > m_t) {
        return Err(Error::invalid("lags", format!("lag {bad} outside 1..={m_t}")));
    }
    let disc = Discretization::new(*spec, m_t, n_x)?;
    let sampler = SheetSampler::new(NoiseGridSpec::new(m_t, n_x, spec.t_final(), spec.length())?, spec.hurst())?;
    let snaps: Vec<usize> = lags.iter().map(|g| m_t - g).collect();
    let mut acc = alloc::vec![RmsAccumulator::default(); lags.len()];
    for i in 0..trajectories {
        let run = disc.run(&sampler.sample_seeded(base_seed.wrapping_add(i as u64)), &snaps)?;
        for (a, (_, earlier)) in acc.iter_mut().zip(&run.snapshots) {
            a.push(l2_norm(&run.final_state.sub(earlier)?));
        }
    }
    let points: Vec<(f64, f64)> = lags.iter().zip(&acc).map(|(g, a)| (*g as f64 * disc.tau(), a.rms())).collect();
    if points.iter().any(|(_, r)| !(*r > 0.0)) {
        return Err(Error::Degenerate("zero increments, regression rejected"));
    }
    let xs: Vec<f64> = points.iter().map(|(x, _)| libm::log(*x)).collect();
    let ys: Vec<f64> = points.iter().map(|(_, y)| 2.0 * libm::log(*y)).collect();
    let (slope, se) = linear_fit(&xs, &ys);
    Ok(HolderEstimate { ms_exponent: slope, rms_slope: slope / 2.0, std_error: se, points })
}

// slope and its standard error
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| {
        let r = y - my - slope * (x - mx);
        r * r
    }).sum();
    (slope, libm::sqrt(rss / (n - 2.0) / sxx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::NonlinearSource;

    #[test]
    fn rates_recover_synthetic_order() {
        for r in [0.08, 0.5, 1.0, 2.0] {
            let errs: Vec<f64> = (0..5).map(|k| 3.7 * libm::pow(2.0, -r * k as f64)).collect();
            for got in successive_rates(&errs) {
                assert!((got - r).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reference_rate_column_is_mean_of_successive_rates() {
        let e = [1.012e-5, 8.111e-6, 5.976e-6, 4.188e-6];
        let rates = successive_rates(&e);
        let mean = rates.iter().sum::<f64>() / 3.0;
        assert!((mean - 0.4243).abs() < 5e-5, "{mean}");
    }

    #[test]
    fn theoretical_rates_reject_outside_theory() {
        assert!(theoretical_temporal_rate(0.9, 0.1, 0.1).is_err());
        assert!(theoretical_spatial_rate(0.9, 0.05, 0.05).is_err());
        assert!((theoretical_temporal_rate(1.0, 0.5, 0.5).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn config_requires_doubling() {
        let spec = ProblemSpec::new(0.5, HurstPair::brownian(), 1.0, 1.0, 1.0, NonlinearSource::Zero).unwrap();
        let mut c = StudyConfig { spec, trajectories: 2, levels: alloc::vec![4, 8, 12], fixed: 8, base_seed: 1, mode: StudyMode::Temporal };
        assert!(c.validate().is_err());
        c.levels = alloc::vec![4, 8, 16];
        c.validate().unwrap();
        assert_eq!(c.finest_grid(), (32, 8));
        c.mode = StudyMode::Spatial;
        assert_eq!(c.finest_grid(), (8, 32));
    }

    #[test]
    fn plan_errors_match_pairwise_errors() {
        let spec = ProblemSpec::new(0.6, HurstPair::new(0.4, 0.3).unwrap(), 1.0, 1.0, 0.5, NonlinearSource::Sine { amplitude: 1.0 })
            .unwrap();
        let config = StudyConfig { spec, trajectories: 1, levels: alloc::vec![4, 8], fixed: 8, base_seed: 11, mode: StudyMode::Temporal };
        let plan = StudyPlan::new(config).unwrap();
        let errs = plan.trajectory_errors(0).unwrap();
        let fine = plan.noise(0);
        for (k, m_t) in [4usize, 8].into_iter().enumerate() {
            let e = error_temporal_on(&spec, &fine, m_t).unwrap();
            assert!((e - errs[k]).abs() <= 1e-14 * e, "{e} vs {}", errs[k]);
        }
    }
}
