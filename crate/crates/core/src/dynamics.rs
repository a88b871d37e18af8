//! Modal time evolution.
//!
//! Every mode is a scalar oscillator `y'' = -ω² y + f(t)`. Both solvers here
//! advance the oscillatory part with its exact propagator and only discretize
//! the smooth or memory parts, so a coarse grid (`λ dt` up to 2) keeps the
//! phase of high modes exact:
//!
//! * [`solve_zn`] treats `f = K * y` by trapezoid history and a linear
//!   interpolant of `f` inside each step.
//! * [`forward_simulate`] writes the Prony memory of the raw equation as
//!   auxiliary ODE states and applies the boundary forcing through the
//!   trapezoid rule of the Duhamel integral.

use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, cosh, sin, sinh, sqrt};
use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::kernels::{
    damping_shift, forcing_f1, maccamy_data, MacCamyData, MemoryKernel, ResolventKernel,
};
use crate::linalg::expm;
use crate::numgrid::{conv, BoundaryGrid, BoundarySamples, Samples, TimeGrid};
use crate::spectral::{ControlCase, ModalBasis, ModalState, Space};

/// `λ dt` above which a run is refused.
pub const RESOLUTION_LIMIT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    Fine,
    /// `1 < λ dt <= 2`: fewer than ~6 samples per period of the fastest mode.
    Coarse,
}

pub fn check_resolution(lambda_max: f64, dt: f64) -> Result<Resolution> {
    let product = lambda_max * dt;
    if product > RESOLUTION_LIMIT {
        return Err(Error::Unresolved {
            lambda: lambda_max,
            dt,
            product,
            limit: RESOLUTION_LIMIT,
        });
    }
    Ok(if product > 1.0 {
        Resolution::Coarse
    } else {
        Resolution::Fine
    })
}

/// Exact one-step propagator of `y'' = -ω² y + f` with `f` linear in the step.
#[derive(Debug, Clone, Copy)]
struct Propagator {
    h: f64,
    omega2: f64,
    /// cos(ωh)
    c0: f64,
    /// sin(ωh) / (ωh)
    s1: f64,
    /// (1 - cos ωh) / (ωh)²
    g2: f64,
    /// (1 - sin(ωh)/(ωh)) / (ωh)²
    g3: f64,
}

impl Propagator {
    fn new(omega2: f64, h: f64) -> Self {
        let x = omega2 * h * h;
        let (c0, s1, g2, g3) = if x.abs() < 0.5 {
            // entire series in -x; 12 terms reach roundoff for |x| < 0.5
            let mut c0 = 0.0;
            let mut s1 = 0.0;
            let mut g2 = 0.0;
            let mut g3 = 0.0;
            let mut pow = 1.0;
            let mut fact = 1.0; // (2k)!
            for k in 0..12u32 {
                let k2 = 2.0 * k as f64;
                if k > 0 {
                    fact *= (k2 - 1.0) * k2;
                }
                c0 += pow / fact;
                s1 += pow / (fact * (k2 + 1.0));
                g2 += pow / (fact * (k2 + 1.0) * (k2 + 2.0));
                g3 += pow / (fact * (k2 + 1.0) * (k2 + 2.0) * (k2 + 3.0));
                pow *= -x;
            }
            (c0, s1, g2, g3)
        } else if x > 0.0 {
            let th = sqrt(x);
            let c0 = cos(th);
            let s1 = sin(th) / th;
            (c0, s1, (1.0 - c0) / x, (1.0 - s1) / x)
        } else {
            let th = sqrt(-x);
            let c0 = cosh(th);
            let s1 = sinh(th) / th;
            (c0, s1, (1.0 - c0) / x, (1.0 - s1) / x)
        };
        Self {
            h,
            omega2,
            c0,
            s1,
            g2,
            g3,
        }
    }

    /// Position update without the `f_{k+1}` contribution.
    fn position_explicit(&self, y: f64, v: f64, f: f64) -> f64 {
        let h = self.h;
        self.c0 * y + h * self.s1 * v + h * h * (self.g2 - self.g3) * f
    }

    fn position_implicit_weight(&self) -> f64 {
        self.h * self.h * self.g3
    }

    fn velocity(&self, y: f64, v: f64, f: f64, f_next: f64) -> f64 {
        let h = self.h;
        -self.omega2 * h * self.s1 * y
            + self.c0 * v
            + h * ((self.s1 - self.g2) * f + self.g2 * f_next)
    }
}

/// Solves `y'' = -ω² y + (K * y)(t)` with `y(0) = y0`, `y'(0) = v0`.
fn memory_oscillator(
    omega2: f64,
    kernel: &[f64],
    h: f64,
    y0: f64,
    v0: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = kernel.len();
    let prop = Propagator::new(omega2, h);
    let mut y = vec![0.0; n];
    let mut v = vec![0.0; n];
    y[0] = y0;
    v[0] = v0;
    let has_memory = kernel.iter().any(|k| *k != 0.0);
    let k0 = kernel[0];
    let mut f = 0.0;
    for k in 0..n - 1 {
        let explicit = prop.position_explicit(y[k], v[k], f);
        let (y_next, f_next) = if has_memory {
            let mut hist = 0.5 * kernel[k + 1] * y[0];
            for j in 1..=k {
                hist += kernel[k + 1 - j] * y[j];
            }
            let p = h * hist;
            let wi = prop.position_implicit_weight();
            let y_next = (explicit + wi * p) / (1.0 - 0.5 * wi * h * k0);
            (y_next, p + 0.5 * h * k0 * y_next)
        } else {
            (explicit, 0.0)
        };
        y[k + 1] = y_next;
        v[k + 1] = prop.velocity(y[k], v[k], f, f_next);
        f = f_next;
    }
    (y, v)
}

/// The memory cosine `z_n` and its companions on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ZnSolution {
    pub lambda: f64,
    pub grid: TimeGrid,
    /// `z_n`, with `z(0) = 1`, `z'(0) = 0`.
    pub z: Samples,
    pub dz: Samples,
    /// `Z_n(t) = ∫_0^t z_n`, solved as the companion with `Z(0) = 0`, `Z'(0) = 1`.
    pub big_z: Samples,
    pub resolution: Resolution,
}

/// Solves `z'' = -λ² z + b z + K * z`, `z(0) = 1`, `z'(0) = 0`.
///
/// `data` must describe the undamped (`a = 0`) equation; run
/// [`damping_shift`](crate::kernels::damping_shift) first when `a ≠ 0`.
pub fn solve_zn(data: &MacCamyData, lambda: f64, grid: &TimeGrid) -> Result<ZnSolution> {
    if !data.is_undamped() {
        return Err(invalid(
            "solve_zn needs a = 0; apply the damping shift first",
        ));
    }
    if data.grid != *grid {
        return Err(invalid("solve_zn: MacCamy data lives on a different grid"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("solve_zn: lambda must be positive"));
    }
    let resolution = check_resolution(lambda, grid.dt())?;
    let omega2 = lambda * lambda - data.b;
    let h = grid.dt();
    let (z, dz) = memory_oscillator(omega2, &data.k, h, 1.0, 0.0);
    let (big_z, _) = memory_oscillator(omega2, &data.k, h, 0.0, 1.0);
    Ok(ZnSolution {
        lambda,
        grid: *grid,
        z: Samples(z),
        dz: Samples(dz),
        big_z: Samples(big_z),
        resolution,
    })
}

/// `z_n` for every mode of a basis.
pub fn solve_zset(
    data: &MacCamyData,
    basis: &ModalBasis,
    grid: &TimeGrid,
) -> Result<Vec<ZnSolution>> {
    basis
        .lambda()
        .iter()
        .map(|&l| solve_zn(data, l, grid))
        .collect()
}

/// Residuals of the integral representation of `z_n` and `∫z_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolterraResidual {
    /// `max |z - [cos λt + (b/λ) sin λ· * z + (1/λ)(sin λ· * K) * z]|`
    pub z_line: f64,
    /// `∫z` line with every sign flipped to minus.
    pub z_int_printed: f64,
    /// `∫z = sin(λt)/λ + (b/λ²)(1 - cos λ·) * z + (1/λ²)(1 - cos λ·) * K * z`
    pub z_int_corrected: f64,
}

/// Checks a [`ZnSolution`] against its variation-of-constants representation.
///
/// Integrating the `z` line once fixes every sign of the `∫z` line to `+`; the
/// all-minus variant is evaluated too so the two can be compared.
pub fn zn_volterra_residual(
    sol: &ZnSolution,
    data: &MacCamyData,
    grid: &TimeGrid,
) -> Result<VolterraResidual> {
    if sol.grid != *grid || data.grid != *grid {
        return Err(invalid("zn_volterra_residual: grid mismatch"));
    }
    let lam = sol.lambda;
    let b = data.b;
    let s = grid.sample(|t| sin(lam * t));
    let c = grid.sample(|t| cos(lam * t));
    let one_minus_c = Samples(c.iter().map(|v| 1.0 - v).collect());

    let s_z = conv(grid, &s, &sol.z)?;
    let s_k = conv(grid, &s, &data.k)?;
    let sk_z = conv(grid, &s_k, &sol.z)?;
    let k_z = conv(grid, &data.k, &sol.z)?;
    let omc_z = conv(grid, &one_minus_c, &sol.z)?;
    let omc_kz = conv(grid, &one_minus_c, &k_z)?;

    let mut z_line: f64 = 0.0;
    let mut printed: f64 = 0.0;
    let mut corrected: f64 = 0.0;
    for i in 0..grid.len() {
        let rhs = c[i] + (b / lam) * s_z[i] + sk_z[i] / lam;
        z_line = z_line.max((sol.z[i] - rhs).abs());
        let int = s[i] / lam + (b / (lam * lam)) * omc_z[i] + omc_kz[i] / (lam * lam);
        corrected = corrected.max((sol.big_z[i] - int).abs());
        printed = printed.max((sol.big_z[i] + int).abs());
    }
    Ok(VolterraResidual {
        z_line,
        z_int_printed: printed,
        z_int_corrected: corrected,
    })
}

/// `(u_n(T), u_n'(T))` of the elastic system driven by `g` from rest:
/// `u_n(T) = -∫_0^T ∫_Γ g(x, T-s) sin(λs)/λ 𝒯φ_n dΣ`,
/// `u_n'(T) = -∫_0^T ∫_Γ g(x, T-s) cos(λs) 𝒯φ_n dΣ`.
pub fn elastic_modal_response(
    lambda: f64,
    trace: &[f64],
    g: &BoundarySamples,
    grid: &TimeGrid,
    bg: &BoundaryGrid,
) -> Result<(f64, f64)> {
    g.check(grid, bg, "elastic_modal_response g")?;
    if trace.len() != bg.len() {
        return Err(invalid(
            "elastic_modal_response: trace profile does not match boundary grid",
        ));
    }
    let forcing = g.project(bg, trace);
    let horizon = grid.horizon();
    let mut u = 0.0;
    let mut up = 0.0;
    for ((t, w), b) in grid.nodes().zip(grid.weights()).zip(forcing.iter()) {
        let s = horizon - t;
        u -= w * b * sin(lambda * s) / lambda;
        up -= w * b * cos(lambda * s);
    }
    Ok((u, up))
}

/// Per-mode samples of `w_n` and `w_n'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTrajectory {
    pub grid: TimeGrid,
    pub case: ControlCase,
    pub lambda: Vec<f64>,
    pub position: Vec<Samples>,
    pub velocity: Vec<Samples>,
}

impl ModalTrajectory {
    pub fn n_modes(&self) -> usize {
        self.lambda.len()
    }

    pub fn state_at(&self, i: usize) -> ModalState {
        ModalState {
            case: self.case,
            space: Space::X,
            position: self.position.iter().map(|p| p[i]).collect(),
            velocity: self.velocity.iter().map(|v| v[i]).collect(),
        }
    }

    pub fn final_state(&self) -> ModalState {
        self.state_at(self.grid.n_steps())
    }

    /// `Σ_n w_n'² + λ_n² w_n²` at every node.
    pub fn energy(&self) -> Samples {
        Samples(
            (0..self.grid.len())
                .map(|i| {
                    self.lambda
                        .iter()
                        .zip(self.position.iter().zip(&self.velocity))
                        .map(|(l, (w, v))| v[i] * v[i] + l * l * w[i] * w[i])
                        .sum()
                })
                .collect(),
        )
    }
}

fn check_initial(basis: &ModalBasis, initial: &ModalState) -> Result<()> {
    if initial.len() != basis.len() {
        return Err(invalid(alloc::format!(
            "initial state has {} modes, basis has {}",
            initial.len(),
            basis.len()
        )));
    }
    Ok(())
}

/// Simulates `w'' + Δ²w + ∫_0^t M(t-s) Δ²w(s) ds = 0` driven by the boundary
/// control `g`, mode by mode:
///
/// `w_n'' = -λ_n² w_n - B_n - ∫_0^t M(t-s) [λ_n² w_n(s) + B_n(s)] ds`,
/// `B_n(t) = ∫_Γ 𝒯φ_n g(·, t) dΓ`.
///
/// Each Prony term becomes an auxiliary state
/// `m_i' = -δ_i m_i + γ_i (λ_n² w_n + B_n)`, the homogeneous system is advanced
/// by its matrix exponential, and `B_n` enters through the trapezoid rule of
/// the Duhamel integral. The resolvent is never used, so this is an
/// independent check of everything built on the MacCamy form.
pub fn forward_simulate(
    basis: &ModalBasis,
    kernel: &MemoryKernel,
    case: ControlCase,
    g: &BoundarySamples,
    initial: &ModalState,
    grid: &TimeGrid,
) -> Result<ModalTrajectory> {
    let bg = basis.boundary();
    g.check(grid, bg, "forward_simulate g")?;
    check_initial(basis, initial)?;
    let lambda_max = basis.lambda().iter().copied().fold(0.0, f64::max);
    check_resolution(lambda_max, grid.dt())?;

    let terms = kernel.terms();
    let dim = 2 + terms.len();
    let h = grid.dt();
    let mut position = Vec::with_capacity(basis.len());
    let mut velocity = Vec::with_capacity(basis.len());

    for n in 0..basis.len() {
        let lam = basis.lambda()[n];
        let forcing = g.project(bg, basis.trace(case, n));

        // state (λ w, w', m_1, ..., m_P)
        let mut a = DMatrix::<f64>::zeros(dim, dim);
        a[(0, 1)] = lam;
        a[(1, 0)] = -lam;
        let mut c = DVector::<f64>::zeros(dim);
        c[1] = -1.0;
        for (i, t) in terms.iter().enumerate() {
            a[(1, 2 + i)] = -1.0;
            a[(2 + i, 0)] = t.gamma * lam;
            a[(2 + i, 2 + i)] = -t.delta;
            c[2 + i] = t.gamma;
        }
        let phi = expm(&(a * h));

        let mut state = DVector::<f64>::zeros(dim);
        state[0] = lam * initial.position[n];
        state[1] = initial.velocity[n];
        let mut wn = vec![0.0; grid.len()];
        let mut vn = vec![0.0; grid.len()];
        wn[0] = initial.position[n];
        vn[0] = initial.velocity[n];

        // `full` carries weight h at the current node; reported states remove half of it.
        let mut full = &state + &c * (0.5 * h * forcing[0]);
        for k in 1..grid.len() {
            full = &phi * &full + &c * (h * forcing[k]);
            let reported = &full - &c * (0.5 * h * forcing[k]);
            wn[k] = reported[0] / lam;
            vn[k] = reported[1];
        }
        position.push(Samples(wn));
        velocity.push(Samples(vn));
    }

    Ok(ModalTrajectory {
        grid: *grid,
        case,
        lambda: basis.lambda().to_vec(),
        position,
        velocity,
    })
}

/// Assembles the solution of the MacCamy form mode by mode:
/// with `v = e^{-(a/2)t} w`,
/// `v_n = v_n(0) z_n + v_n'(0) Z_n + Z_n * [e^{-(a/2)·}(F₁ - B_n)]`.
pub fn transformed_response(
    basis: &ModalBasis,
    res: &ResolventKernel,
    case: ControlCase,
    g: &BoundarySamples,
    initial: &ModalState,
    grid: &TimeGrid,
) -> Result<ModalTrajectory> {
    let bg = basis.boundary();
    g.check(grid, bg, "transformed_response g")?;
    check_initial(basis, initial)?;
    let (shift, shifted) = damping_shift(&maccamy_data(res));
    let half_a = 0.5 * shift.a;
    let zero = Samples::zeros(grid);

    let mut position = Vec::with_capacity(basis.len());
    let mut velocity = Vec::with_capacity(basis.len());
    for n in 0..basis.len() {
        let sol = solve_zn(&shifted, basis.lambda()[n], grid)?;
        let (w0, w1) = (initial.position[n], initial.velocity[n]);
        let f1 = forcing_f1(res, w0, w1, &zero, grid)?;
        let b = g.project(bg, basis.trace(case, n));
        let f = Samples(
            (0..grid.len())
                .map(|i| shift.multiplier[i] * (f1[i] - b[i]))
                .collect(),
        );
        let v0 = w0;
        let v1 = w1 - half_a * w0;
        let zf = conv(grid, &sol.big_z, &f)?;
        let dzf = conv(grid, &sol.z, &f)?;
        let mut wn = vec![0.0; grid.len()];
        let mut wpn = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            let v = v0 * sol.z[i] + v1 * sol.big_z[i] + zf[i];
            let vp = v0 * sol.dz[i] + v1 * sol.z[i] + dzf[i];
            wn[i] = shift.inverse_multiplier[i] * v;
            wpn[i] = shift.inverse_multiplier[i] * (vp + half_a * v);
        }
        position.push(Samples(wn));
        velocity.push(Samples(wpn));
    }
    Ok(ModalTrajectory {
        grid: *grid,
        case,
        lambda: basis.lambda().to_vec(),
        position,
        velocity,
    })
}

/// `𝒯ψ(x, t) = Σ_n 𝒯φ_n(x) [ξ_n z_n(t) + η_n ∫_0^t z_n]` for the memory
/// equation started at `ψ(0) = ξ`, `ψ'(0) = η` with homogeneous boundary data.
pub fn adjoint_trace(
    basis: &ModalBasis,
    case: ControlCase,
    xi: &[f64],
    eta: &[f64],
    zset: &[ZnSolution],
    grid: &TimeGrid,
) -> Result<BoundarySamples> {
    let n = basis.len();
    if xi.len() != n || eta.len() != n || zset.len() != n {
        return Err(invalid(
            "adjoint_trace: coefficient or z_n count differs from basis",
        ));
    }
    if zset.iter().any(|z| z.grid != *grid) {
        return Err(invalid("adjoint_trace: z_n on a different grid"));
    }
    let bg = basis.boundary();
    let mut out = BoundarySamples::zeros(grid, bg);
    for (m, z) in zset.iter().enumerate() {
        if xi[m] == 0.0 && eta[m] == 0.0 {
            continue;
        }
        let temporal: Vec<f64> = (0..grid.len())
            .map(|i| xi[m] * z.z[i] + eta[m] * z.big_z[i])
            .collect();
        out.axpy(
            1.0,
            &BoundarySamples::separable(basis.trace(case, m), &temporal),
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::resolvent;
    use crate::spectral::{beam_hinged_basis, synthetic_basis};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;
    use libm::exp;

    fn beam(n: usize) -> ModalBasis {
        beam_hinged_basis(n, &BoundaryGrid::point(0.0)).unwrap()
    }

    fn elastic_data(grid: &TimeGrid) -> MacCamyData {
        MacCamyData::from_parts(grid, 0.0, 0.0, Samples::zeros(grid)).unwrap()
    }

    /// Exact `z` for `K(t) = κ e^{-μt}` from the augmented system
    /// `z'' = -ω² z + m`, `m' = -μ m + κ z`.
    fn exact_memory_cosine(
        omega2: f64,
        kappa: f64,
        mu: f64,
        grid: &TimeGrid,
        y0: f64,
        v0: f64,
    ) -> Vec<f64> {
        let a = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -omega2, 0.0, 1.0, kappa, 0.0, -mu]);
        grid.nodes()
            .map(|t| {
                let e = expm(&(a.clone() * t));
                e[(0, 0)] * y0 + e[(0, 1)] * v0
            })
            .collect()
    }

    #[test]
    fn propagator_series_matches_closed_form() {
        for x in [0.49, 0.51, -0.49, -0.51, 1e-8, 2.5, -3.0] {
            let p = Propagator::new(x, 1.0);
            let (c0, s1) = if x > 0.0 {
                (cos(sqrt(x)), sin(sqrt(x)) / sqrt(x))
            } else {
                (cosh(sqrt(-x)), sinh(sqrt(-x)) / sqrt(-x))
            };
            assert_abs_diff_eq!(p.c0, c0, epsilon = 1e-14);
            assert_abs_diff_eq!(p.s1, s1, epsilon = 1e-14);
            if x.abs() > 1e-3 {
                assert_abs_diff_eq!(p.g2, (1.0 - c0) / x, epsilon = 1e-13);
                assert_abs_diff_eq!(p.g3, (1.0 - s1) / x, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn memoryless_zn_is_cosine() {
        let grid = TimeGrid::new(1.0, 10_000).unwrap();
        let lam = PI * PI;
        let sol = solve_zn(&elastic_data(&grid), lam, &grid).unwrap();
        for (i, t) in grid.nodes().enumerate() {
            assert_abs_diff_eq!(sol.z[i], cos(lam * t), epsilon = 1e-5);
            assert_abs_diff_eq!(sol.big_z[i], sin(lam * t) / lam, epsilon = 1e-5);
        }
        assert_eq!((sol.z[0], sol.dz[0], sol.big_z[0]), (1.0, 0.0, 0.0));
    }

    #[test]
    fn zn_with_memory_is_second_order() {
        let (b, kappa, mu) = (-0.6875, 1.125, 1.75);
        let lam = 4.0 * PI * PI;
        let err = |n: usize| {
            let grid = TimeGrid::new(1.0, n).unwrap();
            let data =
                MacCamyData::from_parts(&grid, 0.0, b, grid.sample(|t| kappa * exp(-mu * t)))
                    .unwrap();
            let sol = solve_zn(&data, lam, &grid).unwrap();
            let exact = exact_memory_cosine(lam * lam - b, kappa, mu, &grid, 1.0, 0.0);
            let exact_int = exact_memory_cosine(lam * lam - b, kappa, mu, &grid, 0.0, 1.0);
            let e1 = sol
                .z
                .iter()
                .zip(&exact)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let e2 = sol
                .big_z
                .iter()
                .zip(&exact_int)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            (e1, e2)
        };
        let (a1, a2) = err(250);
        let (b1, b2) = err(500);
        assert!(a1 < 1e-4 && a2 < 1e-5, "{a1} {a2}");
        assert!(
            libm::log2(a1 / b1) >= 1.9,
            "z order {}",
            libm::log2(a1 / b1)
        );
        assert!(
            libm::log2(a2 / b2) >= 1.9,
            "Z order {}",
            libm::log2(a2 / b2)
        );
    }

    #[test]
    fn zn_refuses_coarse_grids_and_damped_data() {
        let grid = TimeGrid::new(1.0, 100).unwrap();
        let data = elastic_data(&grid);
        assert!(matches!(
            solve_zn(&data, 250.0, &grid),
            Err(Error::Unresolved { .. })
        ));
        assert_eq!(
            solve_zn(&data, 150.0, &grid).unwrap().resolution,
            Resolution::Coarse
        );
        let damped = MacCamyData::from_parts(&grid, 0.5, 0.0, Samples::zeros(&grid)).unwrap();
        assert!(solve_zn(&damped, 1.0, &grid).is_err());
    }

    #[test]
    fn volterra_residuals() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let lam = PI * PI;
        let el = elastic_data(&grid);
        let sol = solve_zn(&el, lam, &grid).unwrap();
        let r = zn_volterra_residual(&sol, &el, &grid).unwrap();
        assert!(r.z_line <= 1e-10);
        assert!(r.z_int_corrected <= 1e-10);
        assert!(r.z_int_printed > 1.0 / lam);

        let kernel = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let res = |n: usize| {
            let grid = TimeGrid::new(1.0, n).unwrap();
            let (_, data) = damping_shift(&maccamy_data(&resolvent(&kernel, &grid)));
            let sol = solve_zn(&data, 4.0 * PI * PI, &grid).unwrap();
            zn_volterra_residual(&sol, &data, &grid).unwrap()
        };
        let coarse = res(1000);
        let fine = res(2000);
        assert!(
            coarse.z_line <= 1e-4 && coarse.z_int_corrected <= 1e-4,
            "{coarse:?}"
        );
        assert!(coarse.z_line / fine.z_line >= 2.0);
    }

    #[test]
    fn elastic_response_examples() {
        let grid = TimeGrid::new(1.0, 2000).unwrap();
        let b = beam(1);
        let bg = b.boundary().clone();
        let lam = b.lambda()[0];
        let tr = b.trace(ControlCase::B, 0).to_vec();
        let zero = BoundarySamples::zeros(&grid, &bg);
        assert_eq!(
            elastic_modal_response(lam, &tr, &zero, &grid, &bg).unwrap(),
            (0.0, 0.0)
        );

        let g = BoundarySamples::from_fn(&grid, &bg, |_, t| sin(lam * (1.0 - t)));
        let (u, up) = elastic_modal_response(lam, &tr, &g, &grid, &bg).unwrap();
        // ∫_0^T sin²(λs) ds and ∫_0^T sin(λs) cos(λs) ds in closed form
        let s2 = 0.5 - sin(2.0 * lam) / (4.0 * lam);
        let sc = sin(lam) * sin(lam) / (2.0 * lam);
        assert_abs_diff_eq!(u, -tr[0] * s2 / lam, epsilon = 1e-5);
        assert_abs_diff_eq!(up, -tr[0] * sc, epsilon = 1e-5);
    }

    #[test]
    fn free_elastic_mode() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let b = beam(3);
        let g = BoundarySamples::zeros(&grid, b.boundary());
        let init =
            ModalState::new(ControlCase::B, Space::Y, vec![1.0, 0.0, 0.0], vec![0.0; 3]).unwrap();
        let tr = forward_simulate(
            &b,
            &MemoryKernel::elastic(),
            ControlCase::B,
            &g,
            &init,
            &grid,
        )
        .unwrap();
        let lam = b.lambda()[0];
        for (i, t) in grid.nodes().enumerate() {
            assert_abs_diff_eq!(tr.position[0][i], cos(lam * t), epsilon = 1e-10);
            assert_eq!(tr.position[1][i], 0.0);
        }
    }

    #[test]
    fn elastic_simulation_matches_duhamel_quadrature() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let b = beam(6);
        let g =
            BoundarySamples::from_fn(&grid, b.boundary(), |_, t| exp(-t) * sin(7.0 * t) + t * t);
        let init = ModalState::zeros(ControlCase::B, Space::X, 6);
        let tr = forward_simulate(
            &b,
            &MemoryKernel::elastic(),
            ControlCase::B,
            &g,
            &init,
            &grid,
        )
        .unwrap();
        let fin = tr.final_state();
        for n in 0..6 {
            let (u, up) = elastic_modal_response(
                b.lambda()[n],
                b.trace(ControlCase::B, n),
                &g,
                &grid,
                b.boundary(),
            )
            .unwrap();
            assert_abs_diff_eq!(fin.position[n], u, epsilon = 1e-10);
            assert_abs_diff_eq!(fin.velocity[n], up, epsilon = 1e-8);
        }
    }

    #[test]
    fn forced_simulation_is_second_order() {
        // g ≡ 1: u_n(T) = -𝒯φ_n (1 - cos λT) / λ²
        let b = beam(4);
        let err = |n: usize| {
            let grid = TimeGrid::new(1.0, n).unwrap();
            let g = BoundarySamples::from_fn(&grid, b.boundary(), |_, _| 1.0);
            let init = ModalState::zeros(ControlCase::B, Space::X, 4);
            let tr = forward_simulate(
                &b,
                &MemoryKernel::elastic(),
                ControlCase::B,
                &g,
                &init,
                &grid,
            )
            .unwrap();
            (0..4)
                .map(|m| {
                    let lam = b.lambda()[m];
                    let tr0 = b.trace(ControlCase::B, m)[0];
                    (tr.final_state().position[m] + tr0 * (1.0 - cos(lam)) / (lam * lam)).abs()
                })
                .fold(0.0, f64::max)
        };
        let order = libm::log2(err(200) / err(400));
        assert!(order >= 1.9, "order {order}");
    }

    #[test]
    fn maccamy_form_matches_raw_equation() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let b = beam(4);
        let kernel = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let res = resolvent(&kernel, &grid);
        let init = ModalState::new(
            ControlCase::B,
            Space::Y,
            vec![0.3, -1.0, 0.5, 0.2],
            vec![2.0, 0.0, -7.0, 30.0],
        )
        .unwrap();
        let g = BoundarySamples::from_fn(&grid, b.boundary(), |_, t| cos(3.0 * t));
        let raw = forward_simulate(&b, &kernel, ControlCase::B, &g, &init, &grid).unwrap();
        let mc = transformed_response(&b, &res, ControlCase::B, &g, &init, &grid).unwrap();
        for n in 0..4 {
            let scale = raw.position[n].max_abs();
            let err = raw.position[n]
                .iter()
                .zip(mc.position[n].iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err / scale <= 1e-3, "mode {n}: {}", err / scale);
        }
    }

    #[test]
    fn positive_memory_feeds_energy() {
        // MacCamy gives w'' + λ²w ≈ a w': energy grows like e^{aT} for high modes
        let grid = TimeGrid::new(1.0, 2000).unwrap();
        let b = synthetic_basis(&[400.0], &[1.0]).unwrap();
        let g = BoundarySamples::zeros(&grid, b.boundary());
        let init = ModalState::new(ControlCase::A, Space::Y, vec![1.0], vec![0.0]).unwrap();
        let kernel = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let tr = forward_simulate(&b, &kernel, ControlCase::A, &g, &init, &grid).unwrap();
        let e = tr.energy();
        let growth = e[grid.n_steps()] / e[0];
        assert!((growth / exp(0.5) - 1.0).abs() < 0.2, "growth {growth}");
    }

    #[test]
    fn adjoint_trace_examples() {
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let b = beam(2);
        let zset = solve_zset(&elastic_data(&grid), &b, &grid).unwrap();
        let zero = adjoint_trace(&b, ControlCase::B, &[0.0; 2], &[0.0; 2], &zset, &grid).unwrap();
        assert!(zero.as_slice().iter().all(|v| *v == 0.0));

        let tr = adjoint_trace(&b, ControlCase::B, &[1.0, 0.0], &[0.0, 0.0], &zset, &grid).unwrap();
        let lam = b.lambda()[0];
        let t0 = b.trace(ControlCase::B, 0)[0];
        for (i, t) in grid.nodes().enumerate() {
            assert_abs_diff_eq!(tr.at(i, 0), t0 * cos(lam * t), epsilon = 1e-9);
        }

        let tr = adjoint_trace(&b, ControlCase::B, &[2.0, 0.0], &[3.0, 0.0], &zset, &grid).unwrap();
        for i in 0..grid.len() {
            assert_abs_diff_eq!(
                tr.at(i, 0),
                t0 * (2.0 * zset[0].z[i] + 3.0 * zset[0].big_z[i]),
                epsilon = 1e-12
            );
        }
        assert!(adjoint_trace(&b, ControlCase::B, &[1.0], &[0.0], &zset, &grid).is_err());
    }
}
