//! Fractional Brownian sheet box increments and the piecewise-constant
//! Wong-Zakai field built from them.
//!
//! The sheet has product covariance, so the increment over the box
//! `I_i x D_j` (time box `i`, space box `j`) has covariance
//! `gamma_t(|i - i'|) * gamma_x(|j - j'|)` where each factor is the
//! autocovariance of fractional Gaussian noise on a uniform grid. A sample
//! is therefore `L_t Z L_x^T` with `Z` i.i.d. standard normal and `L_t`,
//! `L_x` Cholesky factors of the two Toeplitz covariances.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Relative tolerance for tiny negative Cholesky pivots, scaled by the
/// largest diagonal entry.
pub const PSD_TOLERANCE: f64 = 1e-12;

/// Spatial (`h1`) and temporal (`h2`) Hurst exponents, both in `(0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HurstPair {
    h1: f64,
    h2: f64,
}

impl HurstPair {
    pub fn new(h1: f64, h2: f64) -> Result<Self> {
        check_hurst("h1", h1)?;
        check_hurst("h2", h2)?;
        Ok(HurstPair { h1, h2 })
    }

    /// Brownian sheet, i.e. space-time white noise increments.
    pub fn brownian() -> Self {
        HurstPair { h1: 0.5, h2: 0.5 }
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }
}

fn check_hurst(name: &'static str, h: f64) -> Result<()> {
    if h > 0.0 && h <= 0.5 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("Hurst exponent must lie in (0, 1/2], got {h}")))
    }
}

/// Uniform box grid over `(0, T] x (0, l)`: `m_t` time boxes of width `tau`
/// and `n_x` space boxes of width `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseGridSpec {
    m_t: usize,
    n_x: usize,
    tau: f64,
    h: f64,
}

impl NoiseGridSpec {
    /// Grid covering `(0, t_final] x (0, length)`.
    pub fn new(m_t: usize, n_x: usize, t_final: f64, length: f64) -> Result<Self> {
        if m_t == 0 {
            return Err(Error::invalid("m_t", "need at least one time box"));
        }
        if n_x == 0 {
            return Err(Error::invalid("n_x", "need at least one space box"));
        }
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::invalid("t_final", format!("must be positive, got {t_final}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("l", format!("must be positive, got {length}")));
        }
        Ok(NoiseGridSpec { m_t, n_x, tau: t_final / m_t as f64, h: length / n_x as f64 })
    }

    pub fn m_t(&self) -> usize {
        self.m_t
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn t_final(&self) -> f64 {
        self.tau * self.m_t as f64
    }

    pub fn length(&self) -> f64 {
        self.h * self.n_x as f64
    }

    /// Grid with boxes merged `factor_t` at a time in time and `factor_x`
    /// in space.
    pub fn coarsen(&self, factor_t: usize, factor_x: usize) -> Result<Self> {
        if factor_t == 0 || !self.m_t.is_multiple_of(factor_t) {
            return Err(Error::NotDivisible { dimension: "time", size: self.m_t, factor: factor_t });
        }
        if factor_x == 0 || !self.n_x.is_multiple_of(factor_x) {
            return Err(Error::NotDivisible { dimension: "space", size: self.n_x, factor: factor_x });
        }
        Ok(NoiseGridSpec {
            m_t: self.m_t / factor_t,
            n_x: self.n_x / factor_x,
            tau: self.tau * factor_t as f64,
            h: self.h * factor_x as f64,
        })
    }
}

/// Sheet increments over every box of a grid; entry `(i, j)` is the
/// increment over time box `i` and space box `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxIncrementField {
    spec: NoiseGridSpec,
    values: Matrix,
}

impl BoxIncrementField {
    pub fn new(spec: NoiseGridSpec, values: Matrix) -> Result<Self> {
        if values.rows() != spec.m_t {
            return Err(Error::DimensionMismatch {
                what: "increment rows",
                expected: spec.m_t,
                found: values.rows(),
            });
        }
        if values.cols() != spec.n_x {
            return Err(Error::DimensionMismatch {
                what: "increment columns",
                expected: spec.n_x,
                found: values.cols(),
            });
        }
        if values.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::Degenerate("non-finite sheet increment"));
        }
        Ok(BoxIncrementField { spec, values })
    }

    pub fn zeros(spec: NoiseGridSpec) -> Self {
        BoxIncrementField { spec, values: Matrix::zeros(spec.m_t, spec.n_x) }
    }

    pub fn spec(&self) -> &NoiseGridSpec {
        &self.spec
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        BoxIncrementField { spec: self.spec, values: self.values.scale(c) }
    }
}

/// Lower-triangular `L` with `L L^T` equal to a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceFactor {
    lower: Matrix,
}

impl CovarianceFactor {
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// `L L^T`.
    pub fn reconstruct(&self) -> Matrix {
        self.lower.matmul(&self.lower.transpose())
    }
}

/// Autocovariance at integer lag `k` of increments of fractional Brownian
/// motion with Hurst exponent `hurst` over boxes of width `step`.
pub fn increment_autocovariance(hurst: f64, step: f64, lag: usize) -> f64 {
    let two_h = 2.0 * hurst;
    let k = lag as f64;
    let raw = if lag == 0 {
        1.0
    } else {
        0.5 * (libm::pow(k + 1.0, two_h) + libm::pow(k - 1.0, two_h) - 2.0 * libm::pow(k, two_h))
    };
    raw * libm::pow(step, two_h)
}

/// Covariance of `n` consecutive increments over boxes of width `step`.
/// Symmetric Toeplitz, positive semi-definite.
pub fn increment_covariance_1d(hurst: f64, step: f64, n: usize) -> Result<Matrix> {
    check_hurst("hurst", hurst)?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::invalid("step", format!("box width must be positive, got {step}")));
    }
    if n == 0 {
        return Err(Error::invalid("n", "need at least one increment"));
    }
    let lags: Vec<f64> = (0..n).map(|k| increment_autocovariance(hurst, step, k)).collect();
    Ok(Matrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]))
}

/// Cholesky factor of a symmetric positive semi-definite matrix. Pivots in
/// `[-PSD_TOLERANCE * max_diag, 0]` are clamped to zero and their column
/// below the diagonal is zeroed.
pub fn cholesky_factor(cov: &Matrix) -> Result<CovarianceFactor> {
    let n = cov.rows();
    if cov.cols() != n {
        return Err(Error::DimensionMismatch { what: "covariance columns", expected: n, found: cov.cols() });
    }
    let max_diag = (0..n).map(|i| cov[(i, i)]).fold(0.0, f64::max);
    let tol = PSD_TOLERANCE * max_diag;
    let mut lower = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = cov[(j, j)];
        for k in 0..j {
            pivot -= lower[(j, k)] * lower[(j, k)];
        }
        if pivot < -tol || pivot.is_nan() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        if pivot <= tol.max(0.0) {
            // numerically rank deficient: the column carries no new variance
            continue;
        }
        let d = libm::sqrt(pivot);
        lower[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = cov[(i, j)];
            for k in 0..j {
                s -= lower[(i, k)] * lower[(j, k)];
            }
            lower[(i, j)] = s / d;
        }
    }
    Ok(CovarianceFactor { lower })
}

/// Deterministic random stream for one trajectory.
pub fn trajectory_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Holds the two covariance factors for one grid so that many trajectories
/// can be drawn without refactorizing. Immutable and `Sync`.
#[derive(Debug, Clone)]
pub struct SheetSampler {
    spec: NoiseGridSpec,
    hurst: HurstPair,
    time_factor: CovarianceFactor,
    space_factor: CovarianceFactor,
}

impl SheetSampler {
    pub fn new(spec: NoiseGridSpec, hurst: HurstPair) -> Result<Self> {
        let time_factor = cholesky_factor(&increment_covariance_1d(hurst.h2, spec.tau, spec.m_t)?)?;
        let space_factor = cholesky_factor(&increment_covariance_1d(hurst.h1, spec.h, spec.n_x)?)?;
        Ok(SheetSampler { spec, hurst, time_factor, space_factor })
    }

    pub fn spec(&self) -> &NoiseGridSpec {
        &self.spec
    }

    pub fn hurst(&self) -> HurstPair {
        self.hurst
    }

    pub fn time_factor(&self) -> &CovarianceFactor {
        &self.time_factor
    }

    pub fn space_factor(&self) -> &CovarianceFactor {
        &self.space_factor
    }

    /// Draws `L_t Z L_x^T`. Standard normals are consumed in row-major
    /// order of `Z` (time index outer).
    pub fn sample<R: RngCore + ?Sized>(&self, rng: &mut R) -> BoxIncrementField {
        let (m, n) = (self.spec.m_t, self.spec.n_x);
        let mut z = Matrix::zeros(m, n);
        for i in 0..m {
            for v in z.row_mut(i) {
                *v = StandardNormal.sample(rng);
            }
        }
        let lx = self.space_factor.lower();
        let lt = self.time_factor.lower();
        // Y = Z L_x^T, Y[i][j] = sum_{k <= j} Z[i][k] L_x[j][k]
        let mut y = Matrix::zeros(m, n);
        for i in 0..m {
            let zi = z.row(i);
            let yi = y.row_mut(i);
            for (j, out) in yi.iter_mut().enumerate() {
                let lj = &lx.row(j)[..=j];
                *out = zi[..=j].iter().zip(lj).map(|(a, b)| a * b).sum();
            }
        }
        // V = L_t Y, V[i] = sum_{k <= i} L_t[i][k] Y[k]
        let mut values = Matrix::zeros(m, n);
        for i in 0..m {
            for k in 0..=i {
                let c = lt[(i, k)];
                if c == 0.0 {
                    continue;
                }
                let src = y.row(k);
                for (d, s) in values.row_mut(i).iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
        BoxIncrementField { spec: self.spec, values }
    }

    pub fn sample_seeded(&self, seed: u64) -> BoxIncrementField {
        self.sample(&mut trajectory_rng(seed))
    }
}

/// One-shot sampling; builds the covariance factors on every call.
pub fn sample_sheet_increments<R: RngCore + ?Sized>(
    spec: NoiseGridSpec,
    hurst: HurstPair,
    rng: &mut R,
) -> Result<BoxIncrementField> {
    Ok(SheetSampler::new(spec, hurst)?.sample(rng))
}

/// Sums `factor_t x factor_x` blocks of boxes into the boxes of the coarser
/// grid. Exact by additivity of the sheet measure.
pub fn aggregate(field: &BoxIncrementField, factor_t: usize, factor_x: usize) -> Result<BoxIncrementField> {
    let spec = field.spec.coarsen(factor_t, factor_x)?;
    let mut values = Matrix::zeros(spec.m_t, spec.n_x);
    for i in 0..field.spec.m_t {
        let row = field.values.row(i);
        let out = values.row_mut(i / factor_t);
        for (j, v) in row.iter().enumerate() {
            out[j / factor_x] += v;
        }
    }
    Ok(BoxIncrementField { spec, values })
}

/// Levels of the piecewise-constant Wong-Zakai field: increment divided by
/// box area `tau * h`.
pub fn wong_zakai_values(field: &BoxIncrementField) -> Matrix {
    field.values.scale(1.0 / (field.spec.tau * field.spec.h))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(m: usize, n: usize) -> NoiseGridSpec {
        NoiseGridSpec::new(m, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn brownian_covariance_is_diagonal() {
        let tau = 0.125;
        let c = increment_covariance_1d(0.5, tau, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { tau } else { 0.0 };
                assert!((c[(i, j)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rough_lag_one_covariance() {
        let c = increment_covariance_1d(0.25, 1.0, 4).unwrap();
        assert!((c[(0, 1)] - (-0.292_893_218_813_452_5)).abs() < 1e-12);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c[(i, j)], c[(j, i)]);
                assert_eq!(c[(i, j)], c[(0, i.abs_diff(j))]);
            }
        }
    }

    #[test]
    fn rejects_smooth_hurst() {
        assert!(increment_covariance_1d(0.7, 1.0, 4).is_err());
        assert!(increment_covariance_1d(0.0, 1.0, 4).is_err());
        assert!(HurstPair::new(0.3, 0.6).is_err());
    }

    #[test]
    fn cholesky_trivial_cases() {
        let f = cholesky_factor(&Matrix::identity(5)).unwrap();
        assert_eq!(f.lower(), &Matrix::identity(5));
        let f = cholesky_factor(&Matrix::from_row_major(1, 1, alloc::vec![9.0])).unwrap();
        assert_eq!(f.lower()[(0, 0)], 3.0);
    }

    #[test]
    fn cholesky_reconstructs_rough_covariance() {
        let cov = increment_covariance_1d(0.25, 1.0, 8).unwrap();
        let f = cholesky_factor(&cov).unwrap();
        let rel = f.reconstruct().max_abs_diff(&cov) / cov.frobenius_norm();
        assert!(rel < 1e-10, "{rel}");
    }

    #[test]
    fn cholesky_reports_indefinite_pivot() {
        let m = Matrix::from_row_major(2, 2, alloc::vec![1.0, 2.0, 2.0, 1.0]);
        match cholesky_factor(&m) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cholesky_clamps_rank_deficiency() {
        // rank one: [1 1; 1 1]
        let m = Matrix::from_row_major(2, 2, alloc::vec![1.0, 1.0, 1.0, 1.0]);
        let f = cholesky_factor(&m).unwrap();
        assert!(f.reconstruct().max_abs_diff(&m) < 1e-15);
    }

    #[test]
    fn sampling_is_deterministic() {
        let s = SheetSampler::new(grid(6, 5), HurstPair::new(0.3, 0.2).unwrap()).unwrap();
        assert_eq!(s.sample_seeded(7), s.sample_seeded(7));
        assert_ne!(s.sample_seeded(7), s.sample_seeded(8));
    }

    #[test]
    fn aggregate_identity_and_blocks() {
        let s = SheetSampler::new(grid(4, 4), HurstPair::brownian()).unwrap();
        let f = s.sample_seeded(1);
        assert_eq!(aggregate(&f, 1, 1).unwrap(), f);

        let spec = NoiseGridSpec::new(2, 2, 1.0, 1.0).unwrap();
        let ones = BoxIncrementField::new(spec, Matrix::from_row_major(2, 2, alloc::vec![1.0; 4])).unwrap();
        let c = aggregate(&ones, 2, 2).unwrap();
        assert_eq!(c.values().as_slice(), &[4.0]);
        assert_eq!(c.spec().tau(), 1.0);
    }

    #[test]
    fn aggregate_names_bad_dimension() {
        let f = BoxIncrementField::zeros(grid(4, 6));
        match aggregate(&f, 3, 1) {
            Err(Error::NotDivisible { dimension, .. }) => assert_eq!(dimension, "time"),
            other => panic!("{other:?}"),
        }
        match aggregate(&f, 2, 4) {
            Err(Error::NotDivisible { dimension, .. }) => assert_eq!(dimension, "space"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wong_zakai_divides_by_box_area() {
        let spec = NoiseGridSpec::new(2, 2, 1.0, 1.0).unwrap(); // tau*h = 0.25
        let f = BoxIncrementField::new(spec, Matrix::from_row_major(2, 2, alloc::vec![0.5, 0.0, 0.0, -1.0]))
            .unwrap();
        let lv = wong_zakai_values(&f);
        assert_eq!(lv.as_slice(), &[2.0, 0.0, 0.0, -4.0]);
        assert!(wong_zakai_values(&BoxIncrementField::zeros(spec)).as_slice().iter().all(|v| *v == 0.0));
    }
}
