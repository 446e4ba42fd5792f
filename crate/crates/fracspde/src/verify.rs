//! Self-check suites behind `fracspde verify <suite>`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use fracspde_core::convergence::successive_rates;
use fracspde_core::cq::{cq_weights, Discretization};
use fracspde_core::fem::{assemble_mass, assemble_stiffness, refine_embed, thomas_solve, FemFunction, Mesh1D};
use fracspde_core::noise::{aggregate, increment_autocovariance, BoxIncrementField, HurstPair, NoiseGridSpec, SheetSampler};
use fracspde_core::spectral::{
    contour_quadrature_kernel, mittag_leffler, resolvent_kernel, spectral_reference_constant_source, ContourSpec,
    SourceProfile,
};
use fracspde_core::quadrature::composite_gauss;
use fracspde_core::{NonlinearSource, ProblemSpec, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Ml,
    Cq,
    Fem,
    Noise,
    Oracle,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Ml, Suite::Cq, Suite::Fem, Suite::Noise, Suite::Oracle];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Ml => "ml",
            Suite::Cq => "cq",
            Suite::Fem => "fem",
            Suite::Noise => "noise",
            Suite::Oracle => "oracle",
        }
    }

    pub fn run(self) -> Report {
        let checks = match self {
            Suite::Ml => ml_checks(),
            Suite::Cq => cq_checks(),
            Suite::Fem => fem_checks(),
            Suite::Noise => noise_checks(),
            Suite::Oracle => oracle_checks(),
        };
        Report::new(self, checks)
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}; expected one of ml, cq, fem, noise, oracle"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation, or the measured quantity.
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    /// Passes when `value <= tolerance`; a NaN value fails.
    pub fn within(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), passed: value <= tolerance, value, tolerance }
    }

    fn failed(name: impl Into<String>, err: fracspde_core::Error) -> Self {
        Check { name: format!("{}: {err}", name.into()), passed: false, value: f64::NAN, tolerance: 0.0 }
    }

    fn from_result(name: &str, tolerance: f64, value: Result<f64>) -> Self {
        match value {
            Ok(v) => Check::within(name, v, tolerance),
            Err(e) => Check::failed(name, e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        Report { suite, passed: checks.iter().all(|c| c.passed), checks }
    }
}

fn max_deviation(points: impl IntoIterator<Item = f64>, f: impl Fn(f64) -> Result<(f64, f64)>) -> Result<f64> {
    let mut worst = 0.0f64;
    for z in points {
        let (got, want) = f(z)?;
        worst = worst.max((got - want).abs() / want.abs().max(1.0));
        if got.is_nan() {
            return Ok(f64::NAN);
        }
    }
    Ok(worst)
}

fn grid(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |i| a + (b - a) * i as f64 / n as f64)
}

pub fn ml_checks() -> Vec<Check> {
    const TOL: f64 = 1e-10;
    let mut checks = vec![
        Check::from_result(
            "E_{1,1}(z) = exp(z), z in [-20, 0]",
            TOL,
            max_deviation(grid(-20.0, 0.0, 400), |z| Ok((mittag_leffler(1.0, 1.0, z)?, z.exp()))),
        ),
        Check::from_result(
            "E_{2,1}(-z^2) = cos(z), z in [0, 5]",
            TOL,
            max_deviation(grid(0.0, 5.0, 400), |z| Ok((mittag_leffler(2.0, 1.0, -z * z)?, z.cos()))),
        ),
        Check::from_result(
            "E_{1,2}(z) = (exp(z) - 1) / z, z in [-20, 2]",
            TOL,
            max_deviation(grid(-20.0, 2.0, 440).filter(|z| *z != 0.0), |z| {
                Ok((mittag_leffler(1.0, 2.0, z)?, z.exp_m1() / z))
            }),
        ),
    ];
    let mut worst: Result<f64> = Ok(0.0);
    'grid: for alpha in [0.3, 0.5, 0.7] {
        for lambda in [1.0, 10.0] {
            for t in [0.1, 1.0] {
                let gap = contour_quadrature_kernel(alpha, lambda, t, &ContourSpec::default_for(t))
                    .and_then(|c| Ok((c.value - resolvent_kernel(alpha, lambda, t)?).abs()));
                match gap {
                    Ok(g) => worst = worst.map(|w| w.max(g)),
                    Err(e) => {
                        worst = Err(e);
                        break 'grid;
                    }
                }
            }
        }
    }
    checks.push(Check::from_result("contour quadrature vs series, 12 (alpha, lambda, t) cases", 1e-8, worst));
    checks
}

/// `(-1)^i binom(1/2, i)` from the central binomial coefficients.
pub fn half_binomial_weights(count: usize) -> Vec<f64> {
    let mut central = 1.0;
    (0..count)
        .map(|i| {
            if i > 0 {
                central *= (2 * i - 1) as f64 / (2 * i) as f64;
            }
            -central / (2.0 * i as f64 - 1.0)
        })
        .collect()
}

/// Worst deviation of `d^(gamma) * d^(1-gamma)` from `[1/tau, -1/tau, 0, ...]`.
pub fn convolution_identity_gap(gamma: f64, tau: f64, count: usize) -> Result<f64> {
    let a = cq_weights(gamma, tau, count)?;
    let b = cq_weights(1.0 - gamma, tau, count)?;
    let (a, b) = (a.as_slice(), b.as_slice());
    let mut worst = 0.0f64;
    for n in 0..count {
        let conv: f64 = (0..=n).map(|i| a[i] * b[n - i]).sum();
        let want = match n {
            0 => 1.0 / tau,
            1 => -1.0 / tau,
            _ => 0.0,
        };
        worst = worst.max((conv - want).abs());
    }
    Ok(worst)
}

pub fn cq_checks() -> Vec<Check> {
    let weights = cq_weights(0.5, 1.0, 64).map(|w| {
        w.as_slice().iter().zip(half_binomial_weights(64)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    });
    let mut checks = vec![Check::from_result("64 weights gamma=0.5 tau=1 vs binomial expansion", 1e-13, weights)];
    for gamma in [0.3, 0.5, 0.7] {
        checks.push(Check::from_result(
            &format!("convolution identity gamma={gamma}"),
            1e-12,
            convolution_identity_gap(gamma, 1.0, 256),
        ));
    }
    checks
}

/// Discrete sine modes are generalized eigenvectors of the P1 pencil with
/// eigenvalue `6 (1 - cos theta) / (h^2 (2 + cos theta))`.
pub fn fem_eigen_residual(length: f64, n_x: usize) -> Result<f64> {
    let mesh = Mesh1D::new(length, n_x)?;
    let (m, s) = (assemble_mass(&mesh), assemble_stiffness(&mesh));
    let h = mesh.h();
    let mut worst = 0.0f64;
    for k in 1..n_x {
        let theta = k as f64 * PI / n_x as f64;
        let lambda = 6.0 * (1.0 - theta.cos()) / (h * h * (2.0 + theta.cos()));
        let v: Vec<f64> = (1..n_x).map(|j| (j as f64 * theta).sin()).collect();
        let (sv, mv) = (s.apply(&v), m.apply(&v));
        let norm = sv.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let r = sv.iter().zip(&mv).map(|(a, b)| (a - lambda * b).abs()).fold(0.0, f64::max);
        worst = worst.max(r / norm);
    }
    Ok(worst)
}

pub fn fem_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    checks.push(Check::from_result("generalized eigenpairs of the P1 pencil", 1e-12, fem_eigen_residual(0.7, 40)));

    let solve = (|| -> Result<f64> {
        let mesh = Mesh1D::new(1.0, 50)?;
        let a = assemble_mass(&mesh).combine(1.0, &assemble_stiffness(&mesh), 0.3);
        let rhs: Vec<f64> = (0..a.dim()).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let x = thomas_solve(&a, &rhs)?;
        Ok(a.apply(&x).iter().zip(&rhs).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
    })();
    checks.push(Check::from_result("tridiagonal solve residual", 1e-12, solve));

    let mass_norm = (|| -> Result<f64> {
        let mesh = Mesh1D::new(2.0, 32)?;
        let u = FemFunction::interpolate(mesh, |x| x * (2.0 - x));
        let quad = assemble_mass(&mesh).quadratic_form(u.coeffs());
        let exact = composite_gauss(|x| u.eval(x).powi(2), 0.0, 2.0, 32, 3);
        Ok((quad - exact).abs())
    })();
    checks.push(Check::from_result("mass quadratic form equals the element-wise integral", 1e-12, mass_norm));

    let embed = (|| -> Result<f64> {
        let mesh = Mesh1D::new(1.0, 8)?;
        let u = FemFunction::interpolate(mesh, |x| (3.0 * x).sin() * x);
        let fine = refine_embed(&u, 3);
        Ok(grid(0.0, 1.0, 97).map(|x| (fine.eval(x) - u.eval(x)).abs()).fold(0.0, f64::max))
    })();
    checks.push(Check::from_result("refine_embed preserves the function", 1e-14, embed));
    checks
}

/// Worst empirical covariance deviation on a 4x4 grid, in standard errors.
pub fn noise_covariance_z_score(hurst: HurstPair, samples: usize, seed: u64) -> Result<f64> {
    let spec = NoiseGridSpec::new(4, 4, 1.0, 1.0)?;
    let sampler = SheetSampler::new(spec, hurst)?;
    let mut rng = fracspde_core::noise::trajectory_rng(seed);
    let d = 16;
    let mut sum = vec![0.0; d];
    let mut prod = vec![0.0; d * d];
    for _ in 0..samples {
        let field = sampler.sample(&mut rng);
        let v = field.values().as_slice();
        for a in 0..d {
            sum[a] += v[a];
            for b in 0..d {
                prod[a * d + b] += v[a] * v[b];
            }
        }
    }
    let n = samples as f64;
    let exact = |a: usize, b: usize| {
        let (ta, xa, tb, xb) = (a / 4, a % 4, b / 4, b % 4);
        increment_autocovariance(hurst.h2(), spec.tau(), ta.abs_diff(tb))
            * increment_autocovariance(hurst.h1(), spec.h(), xa.abs_diff(xb))
    };
    let mut worst = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let emp = prod[a * d + b] / n - sum[a] * sum[b] / (n * n);
            let se = ((exact(a, a) * exact(b, b) + exact(a, b).powi(2)) / n).sqrt();
            worst = worst.max((emp - exact(a, b)).abs() / se);
        }
    }
    Ok(worst)
}

/// Worst gap between block sums of a sampled sheet and its aggregation.
pub fn aggregation_gap(field: &BoxIncrementField, factor_t: usize, factor_x: usize) -> Result<f64> {
    let coarse = aggregate(field, factor_t, factor_x)?;
    let fine = field.values();
    let mut worst = 0.0f64;
    for i in 0..coarse.spec().m_t() {
        for j in 0..coarse.spec().n_x() {
            let mut s = 0.0;
            for a in 0..factor_t {
                for b in 0..factor_x {
                    s += fine[(i * factor_t + a, j * factor_x + b)];
                }
            }
            worst = worst.max((coarse.values()[(i, j)] - s).abs());
        }
    }
    let total = (fine.sum() - coarse.values().sum()).abs();
    Ok(worst.max(total))
}

pub fn noise_checks() -> Vec<Check> {
    let pairs = [(0.5, 0.5), (0.25, 0.25), (0.2, 0.4)];
    let mut checks = Vec::new();
    for (h1, h2) in pairs {
        let z = HurstPair::new(h1, h2).and_then(|h| noise_covariance_z_score(h, 20_000, 2024));
        checks.push(Check::from_result(&format!("4x4 covariance within 5 SE, H=({h1},{h2})"), 5.0, z));
        let gap = (|| -> Result<f64> {
            let spec = NoiseGridSpec::new(16, 32, 0.5, 0.5)?;
            let field = SheetSampler::new(spec, HurstPair::new(h1, h2)?)?.sample_seeded(7);
            let mut worst = 0.0f64;
            for (ft, fx) in [(2, 2), (4, 1), (1, 8), (16, 32)] {
                worst = worst.max(aggregation_gap(&field, ft, fx)?);
            }
            Ok(worst)
        })();
        checks.push(Check::from_result(&format!("aggregation sums, H=({h1},{h2})"), 1e-12, gap));
    }
    checks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeterministicOrders {
    pub alpha: f64,
    pub spatial_errors: Vec<f64>,
    pub spatial_order: f64,
    pub temporal_errors: Vec<f64>,
    pub temporal_order: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `beta = 0`, `f = 1` on `l = T = 1` against the 200-mode spectral solution.
pub fn deterministic_orders(alpha: f64) -> Result<DeterministicOrders> {
    let (length, t_final) = (1.0, 1.0);
    let spec = ProblemSpec::new(alpha, HurstPair::brownian(), 0.0, length, t_final, NonlinearSource::Constant(1.0))?;
    let reference = spectral_reference_constant_source(&SourceProfile::Constant(1.0), t_final, 200, alpha, length)?;
    let error = |m_t: usize, n_x: usize| -> Result<f64> {
        let noise = BoxIncrementField::zeros(NoiseGridSpec::new(m_t, n_x, t_final, length)?);
        let u = Discretization::new(spec, m_t, n_x)?.run(&noise, &[])?.final_state;
        Ok(reference.l2_distance(&u))
    };
    let spatial_errors = [16, 32, 64].into_iter().map(|n| error(2048, n)).collect::<Result<Vec<_>>>()?;
    let temporal_errors = [32, 64, 128].into_iter().map(|m| error(m, 512)).collect::<Result<Vec<_>>>()?;
    Ok(DeterministicOrders {
        alpha,
        spatial_order: mean(&successive_rates(&spatial_errors)),
        spatial_errors,
        temporal_order: mean(&successive_rates(&temporal_errors)),
        temporal_errors,
    })
}

pub fn oracle_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    for alpha in [0.5, 0.8] {
        match deterministic_orders(alpha) {
            Ok(o) => {
                checks.push(Check::within(
                    format!("spatial order 2 +- 0.25, alpha={alpha} (measured {:.4})", o.spatial_order),
                    (o.spatial_order - 2.0).abs(),
                    0.25,
                ));
                checks.push(Check::within(
                    format!("temporal order 1 +- 0.25, alpha={alpha} (measured {:.4})", o.temporal_order),
                    (o.temporal_order - 1.0).abs(),
                    0.25,
                ));
            }
            Err(e) => checks.push(Check::failed(format!("deterministic orders alpha={alpha}"), e)),
        }
    }
    checks
}
