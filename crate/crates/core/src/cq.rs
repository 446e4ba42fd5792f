//! Backward Euler convolution quadrature in time, P1 elements in space.
//!
//! With `U^0 = 0` each step solves
//!
//! ```text
//! (M/tau + d_0 S) U^n = M U^{n-1}/tau - sum_{i=1}^{n-1} d_i S U^{n-i}
//!                       + F(U^{n-1}) + beta Xi^n
//! ```
//!
//! where `d_i` are the weights of `((1 - zeta)/tau)^{1-alpha}`, `F` is the
//! lagged nonlinear load and `Xi^n` the load of the Wong-Zakai field on the
//! time box `(t_{n-1}, t_n]`.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fem::{
    assemble_mass, assemble_stiffness, load_noise_into, load_nonlinear_into, thomas_solve, FemFunction,
    Mesh1D, TridiagonalFactor, TridiagonalMatrix,
};
use crate::noise::{wong_zakai_values, BoxIncrementField};
use crate::problem::ProblemSpec;

/// Power-series coefficients `d_0, d_1, ...` of `((1 - zeta)/tau)^gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqWeights {
    gamma: f64,
    tau: f64,
    d: Vec<f64>,
}

impl CqWeights {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.d
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }
}

/// `d_i = tau^{-gamma} g_i` with `g_0 = 1`, `g_i = g_{i-1} (i - 1 - gamma) / i`.
pub fn cq_weights(gamma: f64, tau: f64, count: usize) -> Result<CqWeights> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::invalid("gamma", format!("order must lie in [0, 1), got {gamma}")));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::invalid("tau", format!("step must be positive, got {tau}")));
    }
    if count == 0 {
        return Err(Error::invalid("count", "need at least one weight"));
    }
    let scale = libm::pow(tau, -gamma);
    let mut d = Vec::with_capacity(count);
    let mut g = 1.0;
    d.push(scale);
    for i in 1..count {
        g *= (i as f64 - 1.0 - gamma) / i as f64;
        d.push(scale * g);
    }
    Ok(CqWeights { gamma, tau, d })
}

/// Matrices shared by every trajectory on one `(m_t, n_x)` grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    spec: ProblemSpec,
    mesh: Mesh1D,
    m_t: usize,
    tau: f64,
    weights: CqWeights,
    mass: TridiagonalMatrix,
    stiffness: TridiagonalMatrix,
    system: TridiagonalFactor,
}

impl Discretization {
    pub fn new(spec: ProblemSpec, m_t: usize, n_x: usize) -> Result<Self> {
        if m_t == 0 {
            return Err(Error::invalid("m_t", "need at least one time step"));
        }
        let mesh = Mesh1D::new(spec.length(), n_x)?;
        let tau = spec.t_final() / m_t as f64;
        let weights = cq_weights(1.0 - spec.alpha(), tau, m_t)?;
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        let system = mass.combine(1.0 / tau, &stiffness, weights.d[0]).factor()?;
        Ok(Discretization { spec, mesh, m_t, tau, weights, mass, stiffness, system })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn weights(&self) -> &CqWeights {
        &self.weights
    }

    pub fn mass(&self) -> &TridiagonalMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &TridiagonalMatrix {
        &self.stiffness
    }

    /// Marches all `m_t` steps. `noise` must live on exactly this grid.
    pub fn run(&self, noise: &BoxIncrementField, snapshots: &[usize]) -> Result<TrajectoryResult> {
        self.check_noise(noise)?;
        if let Some(bad) = snapshots.iter().find(|&&s| s > self.m_t) {
            return Err(Error::invalid("snapshots", format!("index {bad} exceeds m_t = {}", self.m_t)));
        }
        let levels = wong_zakai_values(noise);
        let dim = self.mesh.interior_nodes();
        let d = self.weights.as_slice();
        let beta = self.spec.beta();
        let source = self.spec.source();
        let inv_tau = 1.0 / self.tau;

        let mut taken: Vec<Option<FemFunction>> = alloc::vec![None; snapshots.len()];
        let record = |n: usize, u: &[f64], taken: &mut Vec<Option<FemFunction>>| {
            for (slot, &s) in taken.iter_mut().zip(snapshots) {
                if s == n {
                    *slot = Some(FemFunction::new(self.mesh, u.to_vec()).expect("interior length"));
                }
            }
        };

        let mut u = alloc::vec![0.0; dim];
        record(0, &u, &mut taken);
        // S U^k for k = 1..n-1, row k-1
        let mut stiff_history = alloc::vec![0.0; self.m_t * dim];
        let mut rhs = alloc::vec![0.0; dim];
        let mut nonlinear = alloc::vec![0.0; dim];
        let mut noise_load = alloc::vec![0.0; dim];
        for n in 1..=self.m_t {
            self.mass.apply_into(&u, &mut rhs);
            rhs.iter_mut().for_each(|v| *v *= inv_tau);
            for i in 1..n {
                let past = &stiff_history[(n - i - 1) * dim..(n - i) * dim];
                let di = d[i];
                for (r, p) in rhs.iter_mut().zip(past) {
                    *r -= di * p;
                }
            }
            load_nonlinear_into(&self.mesh, &u, &source, &mut nonlinear);
            load_noise_into(&self.mesh, levels.row(n - 1), &mut noise_load)?;
            for ((r, f), x) in rhs.iter_mut().zip(&nonlinear).zip(&noise_load) {
                *r += f + beta * x;
            }
            self.system.solve_in_place(&mut rhs);
            core::mem::swap(&mut u, &mut rhs);
            self.stiffness.apply_into(&u, &mut stiff_history[(n - 1) * dim..n * dim]);
            record(n, &u, &mut taken);
        }
        Ok(TrajectoryResult {
            final_state: FemFunction::new(self.mesh, u)?,
            snapshots: snapshots.iter().copied().zip(taken.into_iter().map(|s| s.expect("recorded"))).collect(),
            m_t: self.m_t,
            n_x: self.mesh.elements(),
            seed: None,
        })
    }

    fn check_noise(&self, noise: &BoxIncrementField) -> Result<()> {
        let g = noise.spec();
        if g.m_t() != self.m_t {
            return Err(Error::DimensionMismatch { what: "noise time boxes", expected: self.m_t, found: g.m_t() });
        }
        if g.n_x() != self.mesh.elements() {
            return Err(Error::DimensionMismatch {
                what: "noise space boxes",
                expected: self.mesh.elements(),
                found: g.n_x(),
            });
        }
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
        if rel(g.t_final(), self.spec.t_final()) > 1e-12 || rel(g.length(), self.spec.length()) > 1e-12 {
            return Err(Error::invalid("noise", "noise grid does not cover the problem domain"));
        }
        Ok(())
    }
}

/// Final state and requested snapshots of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryResult {
    pub final_state: FemFunction,
    /// `(step index, state)` in request order; index 0 is the initial state.
    pub snapshots: Vec<(usize, FemFunction)>,
    pub m_t: usize,
    pub n_x: usize,
    pub seed: Option<u64>,
}

/// Full-scheme solve of one trajectory on the `(m_t, n_x)` grid.
pub fn run_trajectory(
    spec: &ProblemSpec,
    m_t: usize,
    n_x: usize,
    noise: &BoxIncrementField,
    snapshots: &[usize],
) -> Result<TrajectoryResult> {
    Discretization::new(*spec, m_t, n_x)?.run(noise, snapshots)
}

/// A single step of the scheme from the stored history `U^1..U^{n-1}`,
/// assembling and solving the system afresh. `noise_load` is the
/// unscaled `(xi_R(t_n), hat_j)` vector.
#[allow(clippy::too_many_arguments)]
pub fn step(
    n: usize,
    history: &[Vec<f64>],
    weights: &CqWeights,
    mass: &TridiagonalMatrix,
    stiffness: &TridiagonalMatrix,
    mesh: &Mesh1D,
    noise_load: &[f64],
    spec: &ProblemSpec,
) -> Result<Vec<f64>> {
    if n == 0 || history.len() != n - 1 {
        return Err(Error::DimensionMismatch { what: "history length", expected: n.saturating_sub(1), found: history.len() });
    }
    if weights.len() < n {
        return Err(Error::DimensionMismatch { what: "weights", expected: n, found: weights.len() });
    }
    let dim = mass.dim();
    let tau = weights.tau();
    let d = weights.as_slice();
    let zero = alloc::vec![0.0; dim];
    let previous = history.last().unwrap_or(&zero);
    let mut rhs: Vec<f64> = mass.apply(previous).iter().map(|v| v / tau).collect();
    for i in 1..n {
        let su = stiffness.apply(&history[n - i - 1]);
        for (r, s) in rhs.iter_mut().zip(&su) {
            *r -= d[i] * s;
        }
    }
    let mut f = alloc::vec![0.0; dim];
    load_nonlinear_into(mesh, previous, &spec.source(), &mut f);
    for ((r, fv), x) in rhs.iter_mut().zip(&f).zip(noise_load) {
        *r += fv + spec.beta() * x;
    }
    thomas_solve(&mass.combine(1.0 / tau, stiffness, d[0]), &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{HurstPair, NoiseGridSpec, SheetSampler};
    use crate::problem::NonlinearSource;

    #[test]
    fn zero_order_weights() {
        let w = cq_weights(0.0, 0.3, 6).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn half_order_weights() {
        // (1 - z)^{1/2} = 1 - z/2 - z^2/8 - z^3/16 - 5 z^4/128 - ...
        let w = cq_weights(0.5, 1.0, 5).unwrap();
        let expect = [1.0, -0.5, -0.125, -0.0625, -5.0 / 128.0];
        for (a, b) in w.as_slice().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let w = cq_weights(0.5, 0.25, 1).unwrap();
        assert_eq!(w.as_slice(), &[2.0]);
    }

    #[test]
    fn weights_reject_bad_order() {
        assert!(cq_weights(1.0, 1.0, 3).is_err());
        assert!(cq_weights(-0.1, 1.0, 3).is_err());
        assert!(cq_weights(0.5, 0.0, 3).is_err());
        assert!(cq_weights(0.5, 1.0, 0).is_err());
    }

    fn spec(alpha: f64, beta: f64, f: NonlinearSource) -> ProblemSpec {
        ProblemSpec::new(alpha, HurstPair::new(0.4, 0.4).unwrap(), beta, 1.0, 0.5, f).unwrap()
    }

    fn noise(m_t: usize, n_x: usize, seed: u64) -> BoxIncrementField {
        let g = NoiseGridSpec::new(m_t, n_x, 0.5, 1.0).unwrap();
        SheetSampler::new(g, HurstPair::new(0.4, 0.4).unwrap()).unwrap().sample_seeded(seed)
    }

    #[test]
    fn incremental_run_matches_reference_step() {
        let s = spec(0.6, 1.3, NonlinearSource::Sine { amplitude: 2.0 });
        let disc = Discretization::new(s, 12, 8).unwrap();
        let xi = noise(12, 8, 3);
        let all: Vec<usize> = (0..=12).collect();
        let run = disc.run(&xi, &all).unwrap();
        let levels = wong_zakai_values(&xi);
        let mut history: Vec<Vec<f64>> = Vec::new();
        for n in 1..=12 {
            let load = crate::fem::load_noise(disc.mesh(), levels.row(n - 1)).unwrap();
            let u = step(n, &history, disc.weights(), disc.mass(), disc.stiffness(), disc.mesh(), &load, &s).unwrap();
            let got = run.snapshots[n].1.coeffs();
            for (a, b) in u.iter().zip(got) {
                assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "step {n}: {a} vs {b}");
            }
            history.push(u);
        }
        assert_eq!(&run.final_state, &run.snapshots[12].1);
    }

    #[test]
    fn rejects_mismatched_noise() {
        let s = spec(0.5, 1.0, NonlinearSource::Zero);
        assert!(run_trajectory(&s, 8, 8, &noise(4, 8, 1), &[]).is_err());
        assert!(run_trajectory(&s, 8, 8, &noise(8, 4, 1), &[]).is_err());
        assert!(run_trajectory(&s, 8, 8, &noise(8, 8, 1), &[9]).is_err());
    }
}
