//! Continuous piecewise-linear elements on a uniform mesh of `(0, l)` with
//! homogeneous Dirichlet data. Boundary nodes are eliminated, so every
//! vector and matrix here is indexed by the `n - 1` interior nodes.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::problem::NonlinearSource;
use crate::quadrature::GAUSS3_UNIT;

/// Uniform partition of `(0, l)` into `n` elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    length: f64,
    elements: usize,
}

impl Mesh1D {
    pub fn new(length: f64, elements: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("l", format!("must be positive, got {length}")));
        }
        if elements < 2 {
            return Err(Error::invalid("n", format!("need at least 2 elements, got {elements}")));
        }
        Ok(Mesh1D { length, elements })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn interior_nodes(&self) -> usize {
        self.elements - 1
    }

    pub fn h(&self) -> f64 {
        self.length / self.elements as f64
    }

    /// `x_j = j h`, `j = 0..=n`.
    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.h()
    }

    pub fn refined(&self, factor: usize) -> Self {
        Mesh1D { length: self.length, elements: self.elements * factor }
    }
}

/// Symmetric tridiagonal matrix stored by bands.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    /// `off[i]` couples rows `i` and `i + 1`.
    off: Vec<f64>,
    diag: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("dim", "matrix must be non-empty"));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::DimensionMismatch { what: "off-diagonal band", expected: diag.len() - 1, found: off.len() });
        }
        Ok(TridiagonalMatrix { off, diag })
    }

    /// Constant bands `(off, diag, off)`.
    pub fn constant(dim: usize, diag: f64, off: f64) -> Self {
        TridiagonalMatrix { off: alloc::vec![off; dim.saturating_sub(1)], diag: alloc::vec![diag; dim] }
    }

    pub fn identity(dim: usize) -> Self {
        TridiagonalMatrix::constant(dim, 1.0, 0.0)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off(&self) -> &[f64] {
        &self.off
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &TridiagonalMatrix, b: f64) -> Self {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        TridiagonalMatrix {
            off: self.off.iter().zip(&other.off).map(|(x, y)| a * x + b * y).collect(),
            diag: self.diag.iter().zip(&other.diag).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.dim()];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.dim();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            y[i] = v;
        }
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn factor(&self) -> Result<TridiagonalFactor> {
        TridiagonalFactor::new(self)
    }
}

/// Thomas-algorithm elimination of a tridiagonal matrix, reusable across
/// right-hand sides.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalFactor {
    off: Vec<f64>,
    // eliminated pivots
    pivot: Vec<f64>,
    // super-diagonal over pivot
    upper: Vec<f64>,
}

impl TridiagonalFactor {
    fn new(m: &TridiagonalMatrix) -> Result<Self> {
        let n = m.dim();
        let scale = m.diag.iter().map(|d| d.abs()).fold(0.0, f64::max);
        let mut pivot = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n.saturating_sub(1));
        let mut p = m.diag[0];
        for i in 0..n {
            if i > 0 {
                p = m.diag[i] - m.off[i - 1] * upper[i - 1];
            }
            if p.abs() <= f64::EPSILON * scale || !p.is_finite() {
                return Err(Error::Singular { row: i });
            }
            pivot.push(p);
            if i + 1 < n {
                upper.push(m.off[i] / p);
            }
        }
        Ok(TridiagonalFactor { off: m.off.clone(), pivot, upper })
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.pivot.len();
        assert_eq!(x.len(), n, "right-hand side has wrong length");
        x[0] /= self.pivot[0];
        for i in 1..n {
            x[i] = (x[i] - self.off[i - 1] * x[i - 1]) / self.pivot[i];
        }
        for i in (0..n - 1).rev() {
            x[i] -= self.upper[i] * x[i + 1];
        }
    }
}

pub fn thomas_solve(m: &TridiagonalMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.dim() {
        return Err(Error::DimensionMismatch { what: "right-hand side", expected: m.dim(), found: rhs.len() });
    }
    Ok(m.factor()?.solve(rhs))
}

/// Consistent mass matrix, bands `(h/6, 2h/3, h/6)`.
pub fn assemble_mass(mesh: &Mesh1D) -> TridiagonalMatrix {
    let h = mesh.h();
    TridiagonalMatrix::constant(mesh.interior_nodes(), 4.0 * h / 6.0, h / 6.0)
}

/// Stiffness matrix, bands `(-1/h, 2/h, -1/h)`.
pub fn assemble_stiffness(mesh: &Mesh1D) -> TridiagonalMatrix {
    let h = mesh.h();
    TridiagonalMatrix::constant(mesh.interior_nodes(), 2.0 / h, -1.0 / h)
}

/// Element of the P1 space: interior nodal values, zero at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct FemFunction {
    mesh: Mesh1D,
    coeffs: Vec<f64>,
}

impl FemFunction {
    pub fn new(mesh: Mesh1D, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != mesh.interior_nodes() {
            return Err(Error::DimensionMismatch {
                what: "interior coefficients",
                expected: mesh.interior_nodes(),
                found: coeffs.len(),
            });
        }
        Ok(FemFunction { mesh, coeffs })
    }

    pub fn zero(mesh: Mesh1D) -> Self {
        FemFunction { coeffs: alloc::vec![0.0; mesh.interior_nodes()], mesh }
    }

    /// Nodal interpolant of `f` (boundary values of `f` are ignored).
    pub fn interpolate(mesh: Mesh1D, f: impl Fn(f64) -> f64) -> Self {
        let coeffs = (1..mesh.elements()).map(|j| f(mesh.node(j))).collect();
        FemFunction { mesh, coeffs }
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Value at node `j = 0..=n`, including the zero boundary nodes.
    pub fn nodal(&self, j: usize) -> f64 {
        if j == 0 || j == self.mesh.elements() {
            0.0
        } else {
            self.coeffs[j - 1]
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.mesh.h();
        if x <= 0.0 || x >= self.mesh.length() {
            return 0.0;
        }
        let e = ((x / h) as usize).min(self.mesh.elements() - 1);
        let s = x / h - e as f64;
        (1.0 - s) * self.nodal(e) + s * self.nodal(e + 1)
    }

    pub fn scaled(&self, c: f64) -> Self {
        FemFunction { mesh: self.mesh, coeffs: self.coeffs.iter().map(|v| c * v).collect() }
    }

    pub fn sub(&self, other: &FemFunction) -> Result<Self> {
        if self.mesh != other.mesh {
            return Err(Error::DimensionMismatch {
                what: "mesh elements",
                expected: self.mesh.elements(),
                found: other.mesh.elements(),
            });
        }
        Ok(FemFunction { mesh: self.mesh, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() })
    }
}

/// `(f(u_h), hat_j)` for every interior node, 3-point Gauss per element.
pub fn load_nonlinear(u: &FemFunction, f: &NonlinearSource) -> Vec<f64> {
    let mut load = alloc::vec![0.0; u.mesh.interior_nodes()];
    load_nonlinear_into(u.mesh(), u.coeffs(), f, &mut load);
    load
}

pub(crate) fn load_nonlinear_into(mesh: &Mesh1D, coeffs: &[f64], f: &NonlinearSource, load: &mut [f64]) {
    load.iter_mut().for_each(|v| *v = 0.0);
    if let NonlinearSource::Zero = f {
        return;
    }
    let n = mesh.elements();
    let h = mesh.h();
    let nodal = |j: usize| if j == 0 || j == n { 0.0 } else { coeffs[j - 1] };
    for e in 0..n {
        let (ul, ur) = (nodal(e), nodal(e + 1));
        let (mut to_left, mut to_right) = (0.0, 0.0);
        for (s, w) in GAUSS3_UNIT {
            let fv = f.eval((1.0 - s) * ul + s * ur) * w * h;
            to_left += fv * (1.0 - s);
            to_right += fv * s;
        }
        if e > 0 {
            load[e - 1] += to_left;
        }
        if e + 1 < n {
            load[e] += to_right;
        }
    }
}

/// `(xi, hat_j)` for a field that is constant on each element; `levels[e]`
/// is the value on element `e`.
pub fn load_noise(mesh: &Mesh1D, levels: &[f64]) -> Result<Vec<f64>> {
    let mut load = alloc::vec![0.0; mesh.interior_nodes()];
    load_noise_into(mesh, levels, &mut load)?;
    Ok(load)
}

pub(crate) fn load_noise_into(mesh: &Mesh1D, levels: &[f64], load: &mut [f64]) -> Result<()> {
    if levels.len() != mesh.elements() {
        return Err(Error::DimensionMismatch { what: "noise boxes per mesh", expected: mesh.elements(), found: levels.len() });
    }
    let half_h = 0.5 * mesh.h();
    for (j, v) in load.iter_mut().enumerate() {
        *v = (levels[j] + levels[j + 1]) * half_h;
    }
    Ok(())
}

/// Exact `L^2(0, l)` norm of a P1 function, `sqrt(U^T M U)`.
pub fn l2_norm(u: &FemFunction) -> f64 {
    libm::sqrt(assemble_mass(&u.mesh).quadratic_form(&u.coeffs).max(0.0))
}

/// The same function represented on the mesh refined `2^levels` times.
pub fn refine_embed(u: &FemFunction, levels: u32) -> FemFunction {
    let mut current = u.clone();
    for _ in 0..levels {
        let n = current.mesh.elements();
        let fine = current.mesh.refined(2);
        let mut coeffs = Vec::with_capacity(fine.interior_nodes());
        for j in 0..n {
            if j > 0 {
                coeffs.push(current.nodal(j));
            }
            coeffs.push(0.5 * (current.nodal(j) + current.nodal(j + 1)));
        }
        // the loop pushes a midpoint for every element: 2n - 1 values total
        current = FemFunction { mesh: fine, coeffs };
    }
    current
}
