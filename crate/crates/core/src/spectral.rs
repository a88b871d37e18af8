//! Modal bases of the bilaplacian with boundary trace data.
//!
//! A basis stores the ordered square roots `λ_n` of the eigenvalues of
//! `A = Δ²` (so `A φ_n = λ_n² φ_n`) together with the boundary observations
//! `𝒯φ_n` for both control cases, sampled on a [`BoundaryGrid`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};
use libm::{pow, sin, sqrt};

use crate::error::{invalid, Result};
use crate::numgrid::BoundaryGrid;

/// Which boundary condition carries the control.
///
/// * `A`: `γ₀u = g, γ₁u = 0`, observed through `𝒯φ = -γ₁Δφ`.
/// * `B`: `γ₀u = 0, γ₁u = g`, observed through `𝒯φ = γ₀Δφ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlCase {
    A,
    B,
}

impl ControlCase {
    /// Exponent `p` in `Ψ_n = 𝒯φ_n / λ_n^p`.
    pub fn trace_exponent(self) -> f64 {
        match self {
            ControlCase::A => 1.5,
            ControlCase::B => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// Hinged beam on `(0, 1)`, controlled at `x = 0`.
    Beam,
    /// Hinged rectangle `(0, a) × (0, b)`, controlled on the edge `y = 0`.
    Rectangle {
        a: f64,
        b: f64,
        /// `(m, k)` index of each retained mode.
        modes: Vec<(usize, usize)>,
    },
    /// Prescribed `λ_n` and `‖Ψ_n‖` at a single boundary point.
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalBasis {
    lambda: Vec<f64>,
    trace_a: Vec<Vec<f64>>,
    trace_b: Vec<Vec<f64>>,
    boundary: BoundaryGrid,
    geometry: Geometry,
}

impl ModalBasis {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn boundary(&self) -> &BoundaryGrid {
        &self.boundary
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    /// `𝒯φ_n` on the boundary grid (0-based `n`).
    pub fn trace(&self, case: ControlCase, n: usize) -> &[f64] {
        match case {
            ControlCase::A => &self.trace_a[n],
            ControlCase::B => &self.trace_b[n],
        }
    }

    /// Keeps the first `n` modes.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        if n == 0 || n > self.len() {
            return Err(invalid("truncation must keep between 1 and N modes"));
        }
        let geometry = match &self.geometry {
            Geometry::Rectangle { a, b, modes } => Geometry::Rectangle {
                a: *a,
                b: *b,
                modes: modes[..n].to_vec(),
            },
            g => g.clone(),
        };
        Ok(Self {
            lambda: self.lambda[..n].to_vec(),
            trace_a: self.trace_a[..n].to_vec(),
            trace_b: self.trace_b[..n].to_vec(),
            boundary: self.boundary.clone(),
            geometry,
        })
    }

    /// Largest `α` with `λ_n² ≥ α n²` over the retained modes.
    pub fn growth_constant(&self) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .map(|(i, l)| l * l / ((i + 1) * (i + 1)) as f64)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Hinged beam on `(0, 1)`: `φ_n = √2 sin(nπx)`, `λ_n = n²π²`.
///
/// The control acts at `x = 0`, so `bg` must be a single point there. The
/// case-A observation is `-γ₁Δφ_n = -√2 (nπ)³`. For case B the basis uses the
/// amplitude `-√2 (nπ)²` of `Δφ_n`; the pointwise trace `γ₀Δφ_n` of a hinged
/// mode vanishes at the end, so this is a prescribed observation profile with
/// the normalization `|Ψ_n| = √2` rather than a computed trace.
pub fn beam_hinged_basis(n_modes: usize, bg: &BoundaryGrid) -> Result<ModalBasis> {
    if n_modes < 1 {
        return Err(invalid("beam basis needs at least one mode"));
    }
    if bg.len() != 1 || bg.points()[0] != 0.0 {
        return Err(invalid(
            "beam basis is controlled at the single point x = 0",
        ));
    }
    let lambda: Vec<f64> = (1..=n_modes).map(|n| pow(n as f64 * PI, 2.0)).collect();
    let trace_a = (1..=n_modes)
        .map(|n| vec![-SQRT_2 * pow(n as f64 * PI, 3.0)])
        .collect();
    let trace_b = (1..=n_modes)
        .map(|n| vec![-SQRT_2 * pow(n as f64 * PI, 2.0)])
        .collect();
    Ok(ModalBasis {
        lambda,
        trace_a,
        trace_b,
        boundary: bg.clone(),
        geometry: Geometry::Beam,
    })
}

/// Hinged rectangle `(0, a) × (0, b)` controlled on the edge `y = 0`.
///
/// Modes `φ_{mk} = (2/√(ab)) sin(mπx/a) sin(kπy/b)` with
/// `λ_{mk} = (mπ/a)² + (kπ/b)²`, ordered by `λ` and then by `(m, k)`.
/// The case-A trace on the edge is
/// `-γ₁Δφ_{mk} = -λ_{mk} (2/√(ab)) (kπ/b) sin(mπx/a)` (outward normal `-y`).
/// Hinged modes have `Δφ = 0` on the boundary, so the case-B trace is zero.
pub fn rectangle_hinged_basis(
    a: f64,
    b: f64,
    n_modes: usize,
    bg: &BoundaryGrid,
) -> Result<ModalBasis> {
    if !(a.is_finite() && a > 0.0 && b.is_finite() && b > 0.0) {
        return Err(invalid("rectangle sides must be positive"));
    }
    if n_modes < 1 {
        return Err(invalid("rectangle basis needs at least one mode"));
    }
    if bg
        .points()
        .iter()
        .any(|x| *x < 0.0 || *x > a * (1.0 + 1e-12))
    {
        return Err(invalid("boundary grid must lie on the edge [0, a]"));
    }

    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(n_modes * n_modes);
    for m in 1..=n_modes {
        for k in 1..=n_modes {
            let lam = pow(m as f64 * PI / a, 2.0) + pow(k as f64 * PI / b, 2.0);
            candidates.push((lam, m, k));
        }
    }
    candidates.sort_by(|x, y| {
        let tie = 1e-12 * f64::max(x.0, y.0);
        if (x.0 - y.0).abs() <= tie {
            (x.1, x.2).cmp(&(y.1, y.2))
        } else {
            x.0.total_cmp(&y.0)
        }
    });
    candidates.truncate(n_modes);

    let norm = 2.0 / sqrt(a * b);
    let mut lambda = Vec::with_capacity(n_modes);
    let mut trace_a = Vec::with_capacity(n_modes);
    let mut modes = Vec::with_capacity(n_modes);
    for &(lam, m, k) in &candidates {
        let amp = -lam * norm * (k as f64 * PI / b);
        trace_a.push(
            bg.points()
                .iter()
                .map(|x| amp * sin(m as f64 * PI * x / a))
                .collect(),
        );
        lambda.push(lam);
        modes.push((m, k));
    }
    let trace_b = vec![vec![0.0; bg.len()]; n_modes];
    Ok(ModalBasis {
        lambda,
        trace_a,
        trace_b,
        boundary: bg.clone(),
        geometry: Geometry::Rectangle { a, b, modes },
    })
}

/// Basis with prescribed `λ_n` and `Ψ_n` at a single unit-weight point.
///
/// Traces are `psi_n λ_n^{3/2}` (case A) and `psi_n λ_n` (case B), so that
/// `Ψ_n = psi_norms[n]` in either case. A zero entry gives a mode that the
/// control cannot see.
pub fn synthetic_basis(lambda: &[f64], psi_norms: &[f64]) -> Result<ModalBasis> {
    if lambda.len() != psi_norms.len() {
        return Err(invalid(
            "synthetic basis: lambda and psi_norms differ in length",
        ));
    }
    if lambda.is_empty() {
        return Err(invalid("synthetic basis needs at least one mode"));
    }
    if lambda.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(invalid("synthetic basis: lambda must be positive"));
    }
    if lambda.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("synthetic basis: lambda must be nondecreasing"));
    }
    Ok(ModalBasis {
        lambda: lambda.to_vec(),
        trace_a: lambda
            .iter()
            .zip(psi_norms)
            .map(|(l, p)| vec![p * pow(*l, 1.5)])
            .collect(),
        trace_b: lambda
            .iter()
            .zip(psi_norms)
            .map(|(l, p)| vec![p * l])
            .collect(),
        boundary: BoundaryGrid::point(0.0),
        geometry: Geometry::Synthetic,
    })
}

/// The normalized traces `Ψ_n = 𝒯φ_n / λ_n^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsiSequence {
    pub case: ControlCase,
    pub profiles: Vec<Vec<f64>>,
}

impl PsiSequence {
    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    /// `‖Ψ_n‖_{L²(Γ)}` for every mode.
    pub fn norms(&self, bg: &BoundaryGrid) -> Vec<f64> {
        self.profiles.iter().map(|p| bg.norm(p)).collect()
    }

    /// Indices of modes with an identically zero profile.
    pub fn degenerate_modes(&self) -> Vec<usize> {
        self.profiles
            .iter()
            .enumerate()
            .filter(|(_, p)| p.iter().all(|v| *v == 0.0))
            .map(|(i, _)| i)
            .collect()
    }

    /// `max ‖Ψ_n‖ / min ‖Ψ_n‖`; infinite when a mode is degenerate.
    pub fn norm_ratio(&self, bg: &BoundaryGrid) -> f64 {
        let norms = self.norms(bg);
        let max = norms.iter().copied().fold(0.0, f64::max);
        let min = norms.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    }
}

pub fn psi_sequence(basis: &ModalBasis, case: ControlCase) -> PsiSequence {
    let p = case.trace_exponent();
    PsiSequence {
        case,
        profiles: (0..basis.len())
            .map(|n| {
                let scale = pow(basis.lambda[n], p);
                basis.trace(case, n).iter().map(|v| v / scale).collect()
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Y,
    X,
}

/// Modal coefficients `({w_n}, {w_n'})` of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalState {
    pub case: ControlCase,
    pub space: Space,
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
}

impl ModalState {
    pub fn new(
        case: ControlCase,
        space: Space,
        position: Vec<f64>,
        velocity: Vec<f64>,
    ) -> Result<Self> {
        if position.len() != velocity.len() {
            return Err(invalid(
                "modal state: position and velocity differ in length",
            ));
        }
        Ok(Self {
            case,
            space,
            position,
            velocity,
        })
    }

    pub fn zeros(case: ControlCase, space: Space, n: usize) -> Self {
        Self {
            case,
            space,
            position: vec![0.0; n],
            velocity: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    fn weighted_norm(&self, lambda: &[f64], wp: f64, wv: f64) -> Result<f64> {
        if lambda.len() != self.len() {
            return Err(invalid("modal state and basis differ in mode count"));
        }
        let sum: f64 = lambda
            .iter()
            .zip(self.position.iter().zip(&self.velocity))
            .map(|(l, (w, v))| pow(*l, wp) * w * w + pow(*l, wv) * v * v)
            .sum();
        Ok(sqrt(sum))
    }

    /// Case A: `Σ λ³|w|² + λ|w'|²`; case B: `Σ λ²|w|² + |w'|²`.
    pub fn norm_y(&self, lambda: &[f64]) -> Result<f64> {
        match self.case {
            ControlCase::A => self.weighted_norm(lambda, 3.0, 1.0),
            ControlCase::B => self.weighted_norm(lambda, 2.0, 0.0),
        }
    }

    /// Case A: `Σ λ⁻¹|w|² + λ⁻³|w'|²`; case B: `Σ |w|² + λ⁻²|w'|²`.
    pub fn norm_x(&self, lambda: &[f64]) -> Result<f64> {
        match self.case {
            ControlCase::A => self.weighted_norm(lambda, -1.0, -3.0),
            ControlCase::B => self.weighted_norm(lambda, 0.0, -2.0),
        }
    }

    /// `ℓ²` coordinates of an `X` state: `(λ^{1-p} w_n, λ^{-p} w_n')`.
    pub fn x_coordinates(&self, lambda: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.case.trace_exponent();
        let xi = lambda
            .iter()
            .zip(&self.position)
            .map(|(l, w)| w * pow(*l, 1.0 - p))
            .collect();
        let eta = lambda
            .iter()
            .zip(&self.velocity)
            .map(|(l, v)| v * pow(*l, -p))
            .collect();
        (xi, eta)
    }

    /// Inverse of [`ModalState::x_coordinates`].
    pub fn from_x_coordinates(case: ControlCase, lambda: &[f64], xi: &[f64], eta: &[f64]) -> Self {
        let p = case.trace_exponent();
        Self {
            case,
            space: Space::X,
            position: lambda
                .iter()
                .zip(xi)
                .map(|(l, x)| x * pow(*l, p - 1.0))
                .collect(),
            velocity: lambda
                .iter()
                .zip(eta)
                .map(|(l, e)| e * pow(*l, p))
                .collect(),
        }
    }
}

/// `(ξ̃_n, η̃_n)`: case A `(λ^{3/2}ξ_n, λ^{1/2}η_n)`, case B `(λξ_n, η_n)`.
pub fn coeffs_weighted(state: &ModalState, lambda: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if lambda.len() != state.len() {
        return Err(invalid("modal state and basis differ in mode count"));
    }
    let p = state.case.trace_exponent();
    let xi = lambda
        .iter()
        .zip(&state.position)
        .map(|(l, x)| pow(*l, p) * x)
        .collect();
    let eta = lambda
        .iter()
        .zip(&state.velocity)
        .map(|(l, e)| pow(*l, p - 1.0) * e)
        .collect();
    Ok((xi, eta))
}

/// Inverse of [`coeffs_weighted`], giving a `Y`-space state.
pub fn from_weighted(case: ControlCase, lambda: &[f64], xi_t: &[f64], eta_t: &[f64]) -> ModalState {
    let p = case.trace_exponent();
    ModalState {
        case,
        space: Space::Y,
        position: lambda
            .iter()
            .zip(xi_t)
            .map(|(l, x)| x / pow(*l, p))
            .collect(),
        velocity: lambda
            .iter()
            .zip(eta_t)
            .map(|(l, e)| e / pow(*l, p - 1.0))
            .collect(),
    }
}
