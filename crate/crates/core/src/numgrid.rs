//! Uniform time grids, boundary quadrature and trapezoid product integration.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Deref, DerefMut};

use crate::error::{invalid, Result};

/// Uniform grid `t_i = i * dt` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(invalid("time horizon must be positive and finite"));
        }
        if n_steps < 2 {
            return Err(invalid("time grid needs at least 2 steps"));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// Number of nodes, `n_steps + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.dt()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Trapezoid weights on `[0, T]`.
    pub fn weights(&self) -> Vec<f64> {
        let dt = self.dt();
        let mut w = vec![dt; self.len()];
        w[0] = 0.5 * dt;
        w[self.n_steps] = 0.5 * dt;
        w
    }

    /// Samples `f(t_i)` of a closure.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Samples {
        Samples(self.nodes().map(f).collect())
    }

    /// Same grid with `n_steps` doubled.
    pub fn refined(&self) -> Self {
        Self {
            horizon: self.horizon,
            n_steps: 2 * self.n_steps,
        }
    }

    pub(crate) fn check(&self, s: &[f64], what: &str) -> Result<()> {
        if s.len() != self.len() {
            return Err(invalid(alloc::format!(
                "{what}: {} samples on a grid with {} nodes",
                s.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

/// Quadrature nodes on the controlled boundary `Γ`.
///
/// Points are arc-length coordinates along `Γ`; weights integrate against the
/// surface measure `dΓ`. A single point with weight 1 models the end of a beam.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl BoundaryGrid {
    /// A single boundary point (beam end) at `x`, with unit weight.
    pub fn point(x: f64) -> Self {
        Self {
            points: vec![x],
            weights: vec![1.0],
        }
    }

    /// Trapezoid nodes on a straight edge `[0, length]`, endpoints included.
    pub fn uniform_edge(length: f64, nodes: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid("boundary edge length must be positive"));
        }
        if nodes < 2 {
            return Err(invalid("boundary_nodes must be at least 2"));
        }
        let h = length / (nodes - 1) as f64;
        let points = (0..nodes)
            .map(|j| if j + 1 == nodes { length } else { j as f64 * h })
            .collect();
        let mut weights = vec![h; nodes];
        weights[0] = 0.5 * h;
        weights[nodes - 1] = 0.5 * h;
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `|Γ|`, the total weight.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `∫_Γ f g dΓ` for profiles sampled on this grid.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.len());
        debug_assert_eq!(g.len(), self.len());
        self.weights
            .iter()
            .zip(f.iter().zip(g))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    /// `‖f‖_{L²(Γ)}`.
    pub fn norm(&self, f: &[f64]) -> f64 {
        libm::sqrt(self.inner(f, f))
    }
}

/// Scalar samples on the nodes of a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Samples(pub Vec<f64>);

impl Samples {
    pub fn zeros(grid: &TimeGrid) -> Self {
        Self(vec![0.0; grid.len()])
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

impl Deref for Samples {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Samples {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Samples {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Boundary-valued samples on `Σ = Γ × [0, T]`, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySamples {
    n_time: usize,
    n_boundary: usize,
    data: Vec<f64>,
}

impl BoundarySamples {
    pub fn zeros(grid: &TimeGrid, bg: &BoundaryGrid) -> Self {
        Self {
            n_time: grid.len(),
            n_boundary: bg.len(),
            data: vec![0.0; grid.len() * bg.len()],
        }
    }

    /// `F(x_j, t_i) = f(x_j, t_i)`.
    pub fn from_fn(grid: &TimeGrid, bg: &BoundaryGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::zeros(grid, bg);
        for (i, t) in grid.nodes().enumerate() {
            for (j, &x) in bg.points().iter().enumerate() {
                out.data[i * out.n_boundary + j] = f(x, t);
            }
        }
        out
    }

    /// Separable field `profile(x) * temporal(t)`.
    pub fn separable(profile: &[f64], temporal: &[f64]) -> Self {
        let mut data = Vec::with_capacity(profile.len() * temporal.len());
        for &s in temporal {
            data.extend(profile.iter().map(|p| p * s));
        }
        Self {
            n_time: temporal.len(),
            n_boundary: profile.len(),
            data,
        }
    }

    pub fn from_raw(n_time: usize, n_boundary: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_time * n_boundary {
            return Err(invalid(
                "boundary samples: data length does not match shape",
            ));
        }
        Ok(Self {
            n_time,
            n_boundary,
            data,
        })
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    pub fn n_boundary(&self) -> usize {
        self.n_boundary
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_boundary + j]
    }

    /// Boundary profile at time node `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_boundary..(i + 1) * self.n_boundary]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        debug_assert_eq!(self.data.len(), other.data.len());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    /// Multiplies node `i` by `factor[i]`.
    pub fn scale_in_time(&self, factor: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, f) in factor.iter().enumerate() {
            for v in &mut out.data[i * self.n_boundary..(i + 1) * self.n_boundary] {
                *v *= f;
            }
        }
        out
    }

    /// `t ↦ ∫_Γ profile · F(·, t) dΓ`.
    pub fn project(&self, bg: &BoundaryGrid, profile: &[f64]) -> Samples {
        Samples(
            (0..self.n_time)
                .map(|i| bg.inner(self.row(i), profile))
                .collect(),
        )
    }

    pub(crate) fn check(&self, grid: &TimeGrid, bg: &BoundaryGrid, what: &str) -> Result<()> {
        if self.n_time != grid.len() || self.n_boundary != bg.len() {
            return Err(invalid(alloc::format!(
                "{what}: shape {}x{} does not match grids {}x{}",
                self.n_time,
                self.n_boundary,
                grid.len(),
                bg.len()
            )));
        }
        Ok(())
    }
}

/// Trapezoid approximation of `(f * g)(t_i) = ∫_0^{t_i} f(t_i - s) g(s) ds`.
pub fn conv(grid: &TimeGrid, f: &[f64], g: &[f64]) -> Result<Samples> {
    grid.check(f, "conv f")?;
    grid.check(g, "conv g")?;
    let dt = grid.dt();
    let mut out = vec![0.0; grid.len()];
    for (i, o) in out.iter_mut().enumerate().skip(1) {
        let mut acc = 0.5 * (f[i] * g[0] + f[0] * g[i]);
        for j in 1..i {
            acc += f[i - j] * g[j];
        }
        *o = dt * acc;
    }
    Ok(Samples(out))
}

/// Trapezoid approximation of `∫_0^T f g dt`.
pub fn inner_time(grid: &TimeGrid, f: &[f64], g: &[f64]) -> Result<f64> {
    grid.check(f, "inner_time f")?;
    grid.check(g, "inner_time g")?;
    let n = grid.n_steps();
    let interior: f64 = (1..n).map(|i| f[i] * g[i]).sum();
    Ok(grid.dt() * (interior + 0.5 * (f[0] * g[0] + f[n] * g[n])))
}

/// Tensor-product quadrature of `∫_Σ F G dΣ`.
pub fn inner_sigma(
    grid: &TimeGrid,
    bg: &BoundaryGrid,
    f: &BoundarySamples,
    g: &BoundarySamples,
) -> Result<f64> {
    f.check(grid, bg, "inner_sigma F")?;
    g.check(grid, bg, "inner_sigma G")?;
    let wt = grid.weights();
    Ok(wt
        .iter()
        .enumerate()
        .map(|(i, w)| w * bg.inner(f.row(i), g.row(i)))
        .sum())
}
