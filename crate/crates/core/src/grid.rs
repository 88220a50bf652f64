//! Uniform midpoint grids, sampled complex fields and the grid-coordinate
//! Fourier transform.
//!
//! Every continuum integral in the toolkit is a midpoint Riemann sum with
//! uniform weight `Δk`. The Fourier transform uses the kernel `e^{+iqk}`
//! evaluated at true grid coordinates, so a field living on a grid with a
//! nonzero center picks up the corresponding linear phase.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::format::Sig17;

/// Relative tolerance used when deciding whether two grids describe the same
/// sampling.
const GRID_MATCH_TOL: f64 = 1e-12;

/// Uniform 1D grid, midpoint convention: `k_i = center - span/2 + (i + 1/2) Δk`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModeGrid {
    center: f64,
    span: f64,
    n: usize,
}

pub fn make_grid(center: f64, span: f64, n_points: usize) -> Result<ModeGrid> {
    ModeGrid::new(center, span, n_points)
}

impl ModeGrid {
    pub fn new(center: f64, span: f64, n_points: usize) -> Result<Self> {
        if !center.is_finite() {
            return invalid(format!("grid center must be finite, got {center}"));
        }
        if !(span.is_finite() && span > 0.0) {
            return invalid(format!("grid span must be positive, got {span}"));
        }
        if n_points < 2 {
            return invalid(format!("grid needs at least 2 points, got {n_points}"));
        }
        Ok(Self { center, span, n: n_points })
    }

    /// Grid with the given spacing rather than span.
    pub fn with_spacing(center: f64, spacing: f64, n_points: usize) -> Result<Self> {
        Self::new(center, spacing * n_points as f64, n_points)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn span(&self) -> f64 {
        self.span
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.span / self.n as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.center + (i as f64 + 0.5 - 0.5 * self.n as f64) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Lower and upper edges of the covered interval.
    pub fn bounds(&self) -> (f64, f64) {
        (self.center - 0.5 * self.span, self.center + 0.5 * self.span)
    }

    /// Index of the grid point nearest to `x`, or `None` outside the covered
    /// interval.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.bounds();
        if !(x >= lo && x <= hi) {
            return None;
        }
        let idx = ((x - lo) / self.spacing()).floor() as usize;
        Some(idx.min(self.n - 1))
    }

    /// Conjugate grid: same point count, spacing `2π/(n Δk)`, centered at zero.
    pub fn conjugate(&self) -> ModeGrid {
        ModeGrid { center: 0.0, span: 2.0 * PI / self.spacing(), n: self.n }
    }

    /// Same sampling up to a relative tolerance of 1e-12.
    pub fn same_as(&self, other: &ModeGrid) -> bool {
        let scale = self.span.abs().max(other.span.abs());
        self.n == other.n
            && (self.span - other.span).abs() <= GRID_MATCH_TOL * scale
            && (self.center - other.center).abs() <= GRID_MATCH_TOL * scale.max(self.center.abs())
    }

    pub(crate) fn ensure_same(&self, other: &ModeGrid, what: &str) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            invalid(format!("grid mismatch in {what}: {self:?} vs {other:?}"))
        }
    }
}

#[derive(Serialize, Deserialize)]
pub(crate) struct GridRepr {
    center: Sig17,
    span: Sig17,
    n: usize,
}

impl From<&ModeGrid> for GridRepr {
    fn from(g: &ModeGrid) -> Self {
        GridRepr { center: Sig17(g.center), span: Sig17(g.span), n: g.n }
    }
}

impl TryFrom<GridRepr> for ModeGrid {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        ModeGrid::new(r.center.0, r.span.0, r.n)
    }
}

impl Serialize for ModeGrid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridRepr::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModeGrid {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = GridRepr::deserialize(d)?;
        ModeGrid::try_from(repr).map_err(serde::de::Error::custom)
    }
}

/// Complex samples on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Field1D {
    grid: ModeGrid,
    values: Vec<C64>,
}

impl Field1D {
    pub fn new(grid: ModeGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return invalid(format!(
                "field has {} samples but grid has {} points",
                values.len(),
                grid.len()
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: ModeGrid, f: impl Fn(f64) -> C64) -> Self {
        let values = grid.points().into_iter().map(f).collect();
        Self { grid, values }
    }

    pub fn zeros(grid: ModeGrid) -> Self {
        Self { grid, values: vec![C64::new(0.0, 0.0); grid.len()] }
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    /// `Σ |f|² Δk`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn scaled(&self, factor: C64) -> Field1D {
        Field1D { grid: self.grid, values: self.values.iter().map(|v| v * factor).collect() }
    }
}

/// `Σ a*(k) b(k) Δk`.
pub fn inner_product(a: &Field1D, b: &Field1D) -> Result<C64> {
    a.grid.ensure_same(&b.grid, "inner product")?;
    let sum: C64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.grid.spacing())
}

/// Complex samples on a signal × idler grid pair, row-major with the signal
/// index outer.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    grid_s: ModeGrid,
    grid_i: ModeGrid,
    values: Vec<C64>,
}

impl Field2D {
    pub fn new(grid_s: ModeGrid, grid_i: ModeGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid_s.len() * grid_i.len() {
            return invalid(format!(
                "field has {} samples, expected {}x{}",
                values.len(),
                grid_s.len(),
                grid_i.len()
            ));
        }
        Ok(Self { grid_s, grid_i, values })
    }

    pub fn from_fn(grid_s: ModeGrid, grid_i: ModeGrid, f: impl Fn(f64, f64) -> C64) -> Self {
        let ks = grid_s.points();
        let ki = grid_i.points();
        let mut values = Vec::with_capacity(ks.len() * ki.len());
        for &k in &ks {
            for &kp in &ki {
                values.push(f(k, kp));
            }
        }
        Self { grid_s, grid_i, values }
    }

    pub fn from_fn_indexed(grid_s: ModeGrid, grid_i: ModeGrid, f: impl Fn(usize, usize) -> C64) -> Self {
        let (ns, ni) = (grid_s.len(), grid_i.len());
        let values = (0..ns * ni).map(|c| f(c / ni, c % ni)).collect();
        Self { grid_s, grid_i, values }
    }

    pub fn zeros(grid_s: ModeGrid, grid_i: ModeGrid) -> Self {
        Self { grid_s, grid_i, values: vec![C64::new(0.0, 0.0); grid_s.len() * grid_i.len()] }
    }

    pub fn grid_s(&self) -> &ModeGrid {
        &self.grid_s
    }

    pub fn grid_i(&self) -> &ModeGrid {
        &self.grid_i
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.grid_s.len(), self.grid_i.len())
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.grid_i.len() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        let n_i = self.grid_i.len();
        self.values[i * n_i + j] = v;
    }

    pub fn row(&self, i: usize) -> &[C64] {
        let n_i = self.grid_i.len();
        &self.values[i * n_i..(i + 1) * n_i]
    }

    /// Cell measure `Δk Δk′`.
    pub fn cell_area(&self) -> f64 {
        self.grid_s.spacing() * self.grid_i.spacing()
    }

    /// `Σ |f|² Δk Δk′`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: C64) -> Field2D {
        self.map(|v| v * factor)
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Field2D {
        Field2D {
            grid_s: self.grid_s,
            grid_i: self.grid_i,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Same values relabelled onto other grids of identical shape.
    pub fn with_grids(&self, grid_s: ModeGrid, grid_i: ModeGrid) -> Result<Field2D> {
        Field2D::new(grid_s, grid_i, self.values.clone())
    }

    /// Swap the two axes (signal ↔ idler).
    pub fn transposed(&self) -> Field2D {
        let (n_s, n_i) = self.shape();
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..n_i {
            for i in 0..n_s {
                values.push(self.get(i, j));
            }
        }
        Field2D { grid_s: self.grid_i, grid_i: self.grid_s, values }
    }

    /// Largest pointwise deviation from another field on the same grids.
    pub fn max_abs_diff(&self, other: &Field2D) -> Result<f64> {
        self.ensure_same_grids(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn ensure_same_grids(&self, other: &Field2D) -> Result<()> {
        self.grid_s.ensure_same(&other.grid_s, "signal axis")?;
        self.grid_i.ensure_same(&other.grid_i, "idler axis")
    }

    pub(crate) fn to_matrix(&self) -> DMatrix<C64> {
        let (n_s, n_i) = self.shape();
        DMatrix::from_row_slice(n_s, n_i, &self.values)
    }

    pub(crate) fn from_matrix(grid_s: ModeGrid, grid_i: ModeGrid, m: &DMatrix<C64>) -> Field2D {
        let mut values = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                values.push(m[(i, j)]);
            }
        }
        Field2D { grid_s, grid_i, values }
    }
}

/// `Σ a* b Δk Δk′` over two fields on the same grids.
pub fn inner_product_2d(a: &Field2D, b: &Field2D) -> Result<C64> {
    a.ensure_same_grids(b)?;
    let sum: C64 = a.values.iter().zip(&b.values).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.cell_area())
}

/// Sign of the Fourier exponent on one axis.
///
/// `Plus` is the forward transform `∫ f(k) e^{+iqk} dk` with measure `Δk`;
/// `Minus` is the inverse `(1/2π) ∫ f(q) e^{-iqk} dq` with measure `Δq/2π`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn exponent(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn measure(self, spacing: f64) -> f64 {
        match self {
            Sign::Plus => spacing,
            Sign::Minus => spacing / (2.0 * PI),
        }
    }
}

/// Transform matrix `T[m][i] = e^{i s q_m k_i} w` for one axis.
fn axis_kernel(input: &ModeGrid, output: &ModeGrid, sign: Sign) -> DMatrix<C64> {
    let k = input.points();
    let q = output.points();
    let s = sign.exponent();
    let w = sign.measure(input.spacing());
    DMatrix::from_fn(q.len(), k.len(), |m, i| C64::from_polar(w, s * q[m] * k[i]))
}

/// 2D transform onto the conjugate grids (centered at zero).
pub fn dft2(f: &Field2D, sign_s: Sign, sign_i: Sign) -> Field2D {
    let out_s = f.grid_s.conjugate();
    let out_i = f.grid_i.conjugate();
    dft2_onto(f, sign_s, sign_i, &out_s, &out_i)
}

/// 2D transform evaluated on explicitly chosen output grids.
///
/// `L̃(q_m, q′_n) = Σ_ij L(k_i, k′_j) e^{i s_s q_m k_i} e^{i s_i q′_n k′_j} w_s w_i`.
pub fn dft2_onto(
    f: &Field2D,
    sign_s: Sign,
    sign_i: Sign,
    out_s: &ModeGrid,
    out_i: &ModeGrid,
) -> Field2D {
    let ts = axis_kernel(&f.grid_s, out_s, sign_s);
    let ti = axis_kernel(&f.grid_i, out_i, sign_i);
    let m = f.to_matrix();
    let out = ts * m * ti.transpose();
    Field2D::from_matrix(*out_s, *out_i, &out)
}
