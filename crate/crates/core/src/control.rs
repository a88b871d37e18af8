//! The moment method for boundary control.
//!
//! A control `g` on `Σ = Γ × (0, T)` drives mode `n` of the elastic system to
//!
//! `u_n(T)  = -λ_n^{p-1} ⟨g, Ψ_n sin λ_n(T - ·)⟩`,
//! `u_n'(T) = -λ_n^p     ⟨g, Ψ_n cos λ_n(T - ·)⟩`,
//!
//! so in the `X` coordinates `(λ^{1-p} w, λ^{-p} w')` every state component is
//! minus one pairing with a moment function. With memory, after the damping
//! shift, `sin λ_n s` and `cos λ_n s` become `λ_n Z_n(s)` and `z_n(s)` and the
//! pairing is taken against the shifted control `e^{-(a/2)σ} g`.
//!
//! Moment functions are separable (`Ψ_n(x)` times a function of `σ`) and are
//! stored already time-reversed, so `σ` is the control's own time.

use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, sin, sqrt};
use nalgebra::DMatrix;

use crate::dynamics::{elastic_modal_response, forward_simulate, ZnSolution};
use crate::error::{invalid, Error, Result};
use crate::kernels::{damping_shift, maccamy_data, resolvent, DampingShift, MemoryKernel};
use crate::linalg::{cholesky_orthonormalizer, cholesky_solve, singular_values, symmetric_eigen};
use crate::numgrid::{inner_sigma, inner_time, BoundaryGrid, BoundarySamples, Samples, TimeGrid};
use crate::spectral::{from_weighted, ControlCase, ModalBasis, ModalState, PsiSequence, Space};

/// Relative eigenvalue floor (against `trace(G) / 2N`) below which a Gram
/// matrix is treated as singular.
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentKind {
    Elastic,
    Visco,
}

/// `2N` moment functions ordered `[sin/Z modes 1..N, cos/z modes 1..N]` and
/// their Gram matrix in `L²(Σ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystem {
    pub case: ControlCase,
    pub kind: MomentKind,
    grid: TimeGrid,
    boundary: BoundaryGrid,
    lambda: Vec<f64>,
    profiles: Vec<Vec<f64>>,
    temporal: Vec<Samples>,
    gram: DMatrix<f64>,
    shift: DampingShift,
}

impl MomentSystem {
    fn assemble(
        basis: &ModalBasis,
        psi: &PsiSequence,
        kind: MomentKind,
        grid: &TimeGrid,
        temporal: Vec<Samples>,
        shift: DampingShift,
    ) -> Result<Self> {
        let n = basis.len();
        if psi.len() != n {
            return Err(invalid(
                "moment functions: Ψ sequence and basis differ in mode count",
            ));
        }
        let bg = basis.boundary();
        let dim = 2 * n;
        let mut gram = DMatrix::<f64>::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let space = bg.inner(&psi.profiles[i % n], &psi.profiles[j % n]);
                let v = if space == 0.0 {
                    0.0
                } else {
                    space * inner_time(grid, &temporal[i], &temporal[j])?
                };
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        Ok(Self {
            case: psi.case,
            kind,
            grid: *grid,
            boundary: bg.clone(),
            lambda: basis.lambda().to_vec(),
            profiles: psi.profiles.clone(),
            temporal,
            gram,
            shift,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.lambda.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn boundary(&self) -> &BoundaryGrid {
        &self.boundary
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn shift(&self) -> &DampingShift {
        &self.shift
    }

    pub fn gram_entry(&self, i: usize, j: usize) -> f64 {
        self.gram[(i, j)]
    }

    pub fn gram_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.gram.row(i).iter().copied().collect())
            .collect()
    }

    /// Eigenvalues of the Gram matrix, ascending.
    pub fn gram_eigenvalues(&self) -> Vec<f64> {
        symmetric_eigen(&self.gram).0
    }

    pub fn gram_trace(&self) -> f64 {
        self.gram.trace()
    }

    /// `max eig / min eig`; infinite when the Gram matrix is singular.
    pub fn gram_condition(&self) -> f64 {
        let eig = self.gram_eigenvalues();
        let min = eig[0];
        if min <= 0.0 {
            f64::INFINITY
        } else {
            eig[eig.len() - 1] / min
        }
    }

    /// `DEGENERACY_THRESHOLD · trace(G) / 2N`.
    pub fn degeneracy_threshold(&self) -> f64 {
        DEGENERACY_THRESHOLD * self.gram_trace() / self.dim() as f64
    }

    /// Time profile of moment function `k` (argument already reversed).
    pub fn temporal(&self, k: usize) -> &Samples {
        &self.temporal[k]
    }

    /// Spatial profile `Ψ_n` of moment function `k`.
    pub fn profile(&self, k: usize) -> &[f64] {
        &self.profiles[k % self.n_modes()]
    }

    /// Moment function `k` sampled on `Σ`.
    pub fn function(&self, k: usize) -> BoundarySamples {
        BoundarySamples::separable(self.profile(k), &self.temporal[k])
    }

    /// `⟨g̃, f_k⟩_{L²(Σ)}` for every `k`, where `g̃` is the shifted control.
    pub fn pair(&self, shifted: &BoundarySamples) -> Result<Vec<f64>> {
        shifted.check(&self.grid, &self.boundary, "moment pairing g")?;
        let projected: Vec<Samples> = self
            .profiles
            .iter()
            .map(|p| shifted.project(&self.boundary, p))
            .collect();
        (0..self.dim())
            .map(|k| {
                inner_time(
                    &self.grid,
                    &projected[k % self.n_modes()],
                    &self.temporal[k],
                )
            })
            .collect()
    }

    /// Moments that a control must match so that the state at `T` is `target`.
    pub fn target_moments(&self, target: &ModalState) -> Result<Vec<f64>> {
        self.check_state(target)?;
        let t = self.grid.horizon();
        let (mut w, mut wp) = (target.position.clone(), target.velocity.clone());
        for n in 0..self.n_modes() {
            let (v, vp) = self.shift.shift_state(t, w[n], wp[n]);
            w[n] = v;
            wp[n] = vp;
        }
        let shifted = ModalState::new(self.case, Space::X, w, wp)?;
        Ok(moments_from_state(&shifted, &self.lambda))
    }

    /// State at `T` predicted by the moment formulas for the physical control `g`.
    pub fn predict_state(&self, g: &BoundarySamples) -> Result<ModalState> {
        let shifted = g.scale_in_time(&self.shift.multiplier);
        let m = self.pair(&shifted)?;
        let n = self.n_modes();
        let xi: Vec<f64> = m[..n].iter().map(|v| -v).collect();
        let eta: Vec<f64> = m[n..].iter().map(|v| -v).collect();
        let mut state = ModalState::from_x_coordinates(self.case, &self.lambda, &xi, &eta);
        let t = self.grid.horizon();
        for k in 0..n {
            let (w, wp) = self
                .shift
                .unshift_state(t, state.position[k], state.velocity[k]);
            state.position[k] = w;
            state.velocity[k] = wp;
        }
        Ok(state)
    }

    fn check_state(&self, s: &ModalState) -> Result<()> {
        if s.case != self.case || s.len() != self.n_modes() {
            return Err(invalid(
                "modal state does not match the moment system (case or mode count)",
            ));
        }
        Ok(())
    }
}

/// `f_n^{sin}(x, σ) = Ψ_n(x) sin λ_n(T - σ)`, `f_n^{cos}(x, σ) = Ψ_n(x) cos λ_n(T - σ)`.
pub fn elastic_moment_functions(
    basis: &ModalBasis,
    psi: &PsiSequence,
    grid: &TimeGrid,
) -> Result<MomentSystem> {
    let horizon = grid.horizon();
    let sines = basis
        .lambda()
        .iter()
        .map(|&l| grid.sample(|s| sin(l * (horizon - s))));
    let cosines = basis
        .lambda()
        .iter()
        .map(|&l| grid.sample(|s| cos(l * (horizon - s))));
    let temporal = sines.chain(cosines).collect();
    MomentSystem::assemble(
        basis,
        psi,
        MomentKind::Elastic,
        grid,
        temporal,
        DampingShift::identity(grid),
    )
}

/// `f_n^{Z}(x, σ) = Ψ_n(x) λ_n Z_n(T - σ)`, `f_n^{z}(x, σ) = Ψ_n(x) z_n(T - σ)`.
///
/// `zset` must come from the shifted (`a = 0`) data of `shift`; controls are
/// paired after multiplication by `shift.multiplier`.
pub fn visco_moment_functions(
    basis: &ModalBasis,
    psi: &PsiSequence,
    zset: &[ZnSolution],
    shift: &DampingShift,
    grid: &TimeGrid,
) -> Result<MomentSystem> {
    if zset.len() != basis.len() {
        return Err(invalid(alloc::format!(
            "visco moment functions: {} z_n solutions for {} modes",
            zset.len(),
            basis.len()
        )));
    }
    if zset.iter().any(|z| z.grid != *grid) || shift.grid != *grid {
        return Err(invalid(
            "visco moment functions: z_n or shift on a different grid",
        ));
    }
    let last = grid.n_steps();
    let reversed =
        |s: &Samples, scale: f64| Samples((0..=last).map(|i| scale * s[last - i]).collect());
    let big = zset.iter().map(|z| reversed(&z.big_z, z.lambda));
    let small = zset.iter().map(|z| reversed(&z.z, 1.0));
    let temporal = big.chain(small).collect();
    MomentSystem::assemble(basis, psi, MomentKind::Visco, grid, temporal, shift.clone())
}

/// `-(λ^{1-p} w_n, λ^{-p} w_n')`, ordered positions then velocities.
fn moments_from_state(state: &ModalState, lambda: &[f64]) -> Vec<f64> {
    let (xi, eta) = state.x_coordinates(lambda);
    xi.iter().chain(&eta).map(|v| -v).collect()
}

/// Elastic moments for `target`: the pairings `⟨g, f_k⟩` that place the
/// elastic system at `target` at time `T`.
pub fn target_moments(basis: &ModalBasis, target: &ModalState) -> Result<Vec<f64>> {
    if target.len() != basis.len() {
        return Err(invalid("target and basis differ in mode count"));
    }
    Ok(moments_from_state(target, basis.lambda()))
}

/// A boundary control on `Σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFunction {
    pub g: BoundarySamples,
    /// `‖g‖_{L²(Σ)}` of the physical control.
    pub norm: f64,
    /// Coefficients `c` of `g̃ = Σ c_k f_k`.
    pub coefficients: Vec<f64>,
    /// `sqrt(cᵀ G c)`, the norm of the shifted control.
    pub shifted_norm: f64,
}

fn check_degeneracy(ms: &MomentSystem) -> Result<()> {
    let min_eig = ms.gram_eigenvalues()[0];
    let threshold = ms.degeneracy_threshold();
    // NaN eigenvalues count as degenerate
    if min_eig.is_nan() || min_eig <= threshold {
        return Err(Error::GramDegenerate { min_eig, threshold });
    }
    Ok(())
}

/// Minimum-norm control with moments `m`: `g̃ = Σ c_k f_k`, `G c = m`, unshifted
/// to the physical control `g = e^{(a/2)σ} g̃`.
pub fn synthesize_control(ms: &MomentSystem, m: &[f64]) -> Result<ControlFunction> {
    if m.len() != ms.dim() {
        return Err(invalid(alloc::format!(
            "moment vector has length {}, expected {}",
            m.len(),
            ms.dim()
        )));
    }
    check_degeneracy(ms)?;
    let c = cholesky_solve(&ms.gram, m).ok_or(Error::GramDegenerate {
        min_eig: ms.gram_eigenvalues()[0],
        threshold: ms.degeneracy_threshold(),
    })?;
    let mut shifted = BoundarySamples::zeros(&ms.grid, &ms.boundary);
    for (k, ck) in c.iter().enumerate() {
        if *ck != 0.0 {
            shifted.axpy(*ck, &ms.function(k));
        }
    }
    let gc = &ms.gram * nalgebra::DVector::from_column_slice(&c);
    let shifted_norm = sqrt(
        c.iter()
            .zip(gc.iter())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0),
    );
    let g = shifted.scale_in_time(&ms.shift.inverse_multiplier);
    let norm = sqrt(inner_sigma(&ms.grid, &ms.boundary, &g, &g)?);
    Ok(ControlFunction {
        g,
        norm,
        coefficients: c,
        shifted_norm,
    })
}

/// `Λ_T g`: the elastic state at `T` reached from rest.
pub fn reach_elastic(
    basis: &ModalBasis,
    case: ControlCase,
    g: &BoundarySamples,
    grid: &TimeGrid,
) -> Result<ModalState> {
    let mut state = ModalState::zeros(case, Space::X, basis.len());
    for n in 0..basis.len() {
        let (u, up) = elastic_modal_response(
            basis.lambda()[n],
            basis.trace(case, n),
            g,
            grid,
            basis.boundary(),
        )?;
        state.position[n] = u;
        state.velocity[n] = up;
    }
    Ok(state)
}

/// `Λ_T^V g`: the viscoelastic state at `T` reached from rest, by simulation of
/// the raw equation.
pub fn reach_visco(
    basis: &ModalBasis,
    kernel: &MemoryKernel,
    case: ControlCase,
    g: &BoundarySamples,
    grid: &TimeGrid,
) -> Result<ModalState> {
    let rest = ModalState::zeros(case, Space::X, basis.len());
    Ok(forward_simulate(basis, kernel, case, g, &rest, grid)?.final_state())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReachReport {
    pub target: ModalState,
    pub achieved: ModalState,
    pub residual_abs: f64,
    /// Residual over `‖target‖_X`; equals the absolute residual for a zero target.
    pub residual_rel: f64,
    pub control_norm: f64,
    pub gram_condition: f64,
}

pub fn reach_report(
    ms: &MomentSystem,
    lambda: &[f64],
    target: &ModalState,
    achieved: &ModalState,
    control: &ControlFunction,
) -> Result<ReachReport> {
    if target.len() != achieved.len() || target.case != achieved.case {
        return Err(invalid(
            "target and achieved states differ in case or mode count",
        ));
    }
    let diff = ModalState::new(
        target.case,
        Space::X,
        achieved
            .position
            .iter()
            .zip(&target.position)
            .map(|(a, b)| a - b)
            .collect(),
        achieved
            .velocity
            .iter()
            .zip(&target.velocity)
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let residual_abs = diff.norm_x(lambda)?;
    let scale = target.norm_x(lambda)?;
    Ok(ReachReport {
        target: target.clone(),
        achieved: achieved.clone(),
        residual_abs,
        residual_rel: if scale > 0.0 {
            residual_abs / scale
        } else {
            residual_abs
        },
        control_norm: control.norm,
        gram_condition: ms.gram_condition(),
    })
}

/// The elastic moment functions orthonormalized in `L²(Σ)`; a natural probe
/// set for [`compactness_diagnostic`].
pub fn moment_probes(ms: &MomentSystem) -> Result<Vec<BoundarySamples>> {
    check_degeneracy(ms)?;
    let coeffs = cholesky_orthonormalizer(&ms.gram).ok_or(Error::GramDegenerate {
        min_eig: ms.gram_eigenvalues()[0],
        threshold: ms.degeneracy_threshold(),
    })?;
    let functions: Vec<BoundarySamples> = (0..ms.dim()).map(|k| ms.function(k)).collect();
    Ok((0..ms.dim())
        .map(|j| {
            let mut q = BoundarySamples::zeros(&ms.grid, &ms.boundary);
            for (k, f) in functions.iter().enumerate().take(j + 1) {
                q.axpy(coeffs[(k, j)], f);
            }
            q
        })
        .collect())
}

/// Singular values (nonincreasing) of `𝒦_T = Λ_T^V - Λ_T` on the probes, in
/// `X` coordinates.
///
/// `Λ_T^V` acts in the shifted variables: a probe `q` is applied as the physical
/// control `e^{(a/2)σ} q` and the final state is shifted back by `e^{-(a/2)T}`.
/// Without the shift the difference would contain the bounded but non-compact
/// factor `e^{(a/2)T} - 1`. Both maps come from the same raw-equation
/// simulator, so an empty kernel gives exactly zero.
pub fn compactness_diagnostic(
    basis: &ModalBasis,
    kernel: &MemoryKernel,
    case: ControlCase,
    grid: &TimeGrid,
    probes: &[BoundarySamples],
) -> Result<Vec<f64>> {
    if probes.is_empty() {
        return Err(invalid("compactness diagnostic needs at least one probe"));
    }
    let (shift, _) = damping_shift(&maccamy_data(&resolvent(kernel, grid)));
    let elastic = MemoryKernel::elastic();
    let n = basis.len();
    let t = grid.horizon();
    let mut columns = DMatrix::<f64>::zeros(2 * n, probes.len());
    for (j, q) in probes.iter().enumerate() {
        let g = q.scale_in_time(&shift.inverse_multiplier);
        let mut visco = reach_visco(basis, kernel, case, &g, grid)?;
        for k in 0..n {
            let (v, vp) = shift.shift_state(t, visco.position[k], visco.velocity[k]);
            visco.position[k] = v;
            visco.velocity[k] = vp;
        }
        let plain = reach_visco(basis, &elastic, case, q, grid)?;
        let (xv, ev) = visco.x_coordinates(basis.lambda());
        let (xp, ep) = plain.x_coordinates(basis.lambda());
        for k in 0..n {
            columns[(k, j)] = xv[k] - xp[k];
            columns[(n + k, j)] = ev[k] - ep[k];
        }
    }
    Ok(singular_values(&columns))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnihilatorReport {
    pub min_eig: f64,
    pub threshold: f64,
    /// `Y`-space state whose adjoint trace vanishes at truncation, when the
    /// Gram matrix is singular.
    pub witness: Option<ModalState>,
}

/// Smallest Gram eigenvalue and, below the threshold, the null vector mapped
/// back to a state: `ξ̃_n = c_{N+n}` (paired with `z_n`), `η̃_n = c_n` (paired
/// with `λ_n Z_n`).
pub fn annihilator_diagnostic(ms: &MomentSystem) -> AnnihilatorReport {
    let (values, vectors) = symmetric_eigen(&ms.gram);
    let min_eig = values[0];
    let threshold = ms.degeneracy_threshold();
    let witness = (min_eig <= threshold).then(|| {
        let n = ms.n_modes();
        let c = vectors.column(0);
        let eta_t: Vec<f64> = (0..n).map(|k| c[k]).collect();
        let xi_t: Vec<f64> = (0..n).map(|k| c[n + k]).collect();
        from_weighted(ms.case, &ms.lambda, &xi_t, &eta_t)
    });
    AnnihilatorReport {
        min_eig,
        threshold,
        witness,
    }
}

/// `max |A_ij - B_ij|` over two Gram matrices of equal size.
pub fn gram_difference(a: &MomentSystem, b: &MomentSystem) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(invalid("Gram matrices differ in size"));
    }
    Ok((&a.gram - &b.gram).abs().max())
}

/// Zero vector of the right length for `ms`.
pub fn zero_moments(ms: &MomentSystem) -> Vec<f64> {
    vec![0.0; ms.dim()]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::solve_zset;
    use crate::spectral::{beam_hinged_basis, psi_sequence, synthetic_basis};
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn beam(n: usize) -> ModalBasis {
        beam_hinged_basis(n, &BoundaryGrid::point(0.0)).unwrap()
    }

    fn elastic_system(basis: &ModalBasis, case: ControlCase, grid: &TimeGrid) -> MomentSystem {
        elastic_moment_functions(basis, &psi_sequence(basis, case), grid).unwrap()
    }

    fn visco_system(
        basis: &ModalBasis,
        kernel: &MemoryKernel,
        case: ControlCase,
        grid: &TimeGrid,
    ) -> MomentSystem {
        let (shift, data) = damping_shift(&maccamy_data(&resolvent(kernel, grid)));
        let zset = solve_zset(&data, basis, grid).unwrap();
        visco_moment_functions(basis, &psi_sequence(basis, case), &zset, &shift, grid).unwrap()
    }

    fn unit_target(case: ControlCase, n: usize, lambda: &[f64], seed: u64) -> ModalState {
        // deterministic pseudo-random X coordinates, normalized
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let xi: Vec<f64> = (0..n).map(|_| next()).collect();
        let eta: Vec<f64> = (0..n).map(|_| next()).collect();
        let norm = sqrt(xi.iter().chain(&eta).map(|v| v * v).sum::<f64>());
        let xi: Vec<f64> = xi.iter().map(|v| v / norm).collect();
        let eta: Vec<f64> = eta.iter().map(|v| v / norm).collect();
        ModalState::from_x_coordinates(case, lambda, &xi, &eta)
    }

    #[test]
    fn full_period_gram_is_diagonal() {
        let b = synthetic_basis(&[1.0], &[1.0]).unwrap();
        let grid = TimeGrid::new(2.0 * PI, 4000).unwrap();
        let ms = elastic_system(&b, ControlCase::A, &grid);
        assert_abs_diff_eq!(ms.gram_entry(0, 0), PI, epsilon = 1e-9);
        assert_abs_diff_eq!(ms.gram_entry(1, 1), PI, epsilon = 1e-9);
        assert_abs_diff_eq!(ms.gram_entry(0, 1), 0.0, epsilon = 1e-12);

        let m = [0.7, -0.2];
        let c = synthesize_control(&ms, &m).unwrap();
        assert_abs_diff_eq!(
            c.coefficients[0],
            0.7 / ms.gram_entry(0, 0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            c.coefficients[1],
            -0.2 / ms.gram_entry(1, 1),
            epsilon = 1e-12
        );
    }

    #[test]
    fn off_diagonal_closed_form() {
        let b = synthetic_basis(&[PI * PI], &[1.0]).unwrap();
        let grid = TimeGrid::new(1.0, 4000).unwrap();
        let ms = elastic_system(&b, ControlCase::B, &grid);
        let l = PI * PI;
        let exact = sin(l) * sin(l) / (2.0 * l);
        assert_abs_diff_eq!(ms.gram_entry(0, 1), exact, epsilon = 1e-6);
    }

    #[test]
    fn gram_matches_sigma_inner_product() {
        let b = beam(3);
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let ms = visco_system(
            &b,
            &MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap(),
            ControlCase::A,
            &grid,
        );
        for i in 0..6 {
            for j in 0..6 {
                let direct =
                    inner_sigma(&grid, b.boundary(), &ms.function(i), &ms.function(j)).unwrap();
                assert_abs_diff_eq!(ms.gram_entry(i, j), direct, epsilon = 1e-12);
                assert_eq!(ms.gram_entry(i, j), ms.gram_entry(j, i));
            }
        }
    }

    #[test]
    fn memoryless_visco_system_is_elastic() {
        let b = beam(4);
        let grid = TimeGrid::new(1.0, 4000).unwrap();
        let e = elastic_system(&b, ControlCase::B, &grid);
        let v = visco_system(&b, &MemoryKernel::elastic(), ControlCase::B, &grid);
        assert!(gram_difference(&e, &v).unwrap() < 1e-4);
    }

    #[test]
    fn single_mode_target_moment() {
        let b = beam(3);
        let mut target = ModalState::zeros(ControlCase::B, Space::X, 3);
        target.position[0] = 1.0;
        let m = target_moments(&b, &target).unwrap();
        assert_eq!(m, vec![-1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let zero = ModalState::zeros(ControlCase::B, Space::X, 3);
        assert!(target_moments(&b, &zero).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn zero_moments_give_zero_control() {
        let b = beam(2);
        let grid = TimeGrid::new(1.0, 200).unwrap();
        let ms = elastic_system(&b, ControlCase::B, &grid);
        let c = synthesize_control(&ms, &zero_moments(&ms)).unwrap();
        assert!(c.g.as_slice().iter().all(|v| *v == 0.0));
        assert_eq!(c.norm, 0.0);
    }

    #[test]
    fn single_constraint_norm() {
        let b = synthetic_basis(&[3.0], &[1.0]).unwrap();
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let ms = elastic_system(&b, ControlCase::B, &grid);
        let c = synthesize_control(&ms, &[1.0, 0.0]).unwrap();
        let det =
            ms.gram_entry(0, 0) * ms.gram_entry(1, 1) - ms.gram_entry(0, 1) * ms.gram_entry(0, 1);
        let norm_sq = ms.gram_entry(1, 1) / det;
        assert_abs_diff_eq!(c.norm, sqrt(norm_sq), epsilon = 1e-10);
        assert_abs_diff_eq!(c.norm, c.shifted_norm, epsilon = 1e-10);
    }

    #[test]
    fn elastic_round_trip() {
        let b = beam(8);
        for horizon in [1.0, 0.5] {
            let grid = TimeGrid::new(horizon, (horizon * 1000.0) as usize).unwrap();
            let ms = elastic_system(&b, ControlCase::B, &grid);
            let target = unit_target(ControlCase::B, 8, b.lambda(), 7);
            let c = synthesize_control(&ms, &ms.target_moments(&target).unwrap()).unwrap();
            let achieved = reach_elastic(&b, ControlCase::B, &c.g, &grid).unwrap();
            let r = reach_report(&ms, b.lambda(), &target, &achieved, &c).unwrap();
            assert!(r.residual_rel <= 1e-3, "T={horizon}: {}", r.residual_rel);
        }
    }

    #[test]
    fn visco_round_trip_improves_with_refinement() {
        let b = beam(8);
        let kernel = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let run = |n: usize| {
            let grid = TimeGrid::new(1.0, n).unwrap();
            let ms = visco_system(&b, &kernel, ControlCase::B, &grid);
            let target = unit_target(ControlCase::B, 8, b.lambda(), 11);
            let c = synthesize_control(&ms, &ms.target_moments(&target).unwrap()).unwrap();
            let achieved = reach_visco(&b, &kernel, ControlCase::B, &c.g, &grid).unwrap();
            reach_report(&ms, b.lambda(), &target, &achieved, &c)
                .unwrap()
                .residual_rel
        };
        let coarse = run(1000);
        let fine = run(2000);
        assert!(coarse <= 1e-2, "{coarse}");
        assert!(fine < coarse, "{fine} vs {coarse}");
    }

    #[test]
    fn moment_prediction_matches_simulation() {
        let b = beam(5);
        let kernel = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let ms = visco_system(&b, &kernel, ControlCase::A, &grid);
        let g = BoundarySamples::from_fn(&grid, b.boundary(), |_, t| sin(5.0 * t) + t);
        let predicted = ms.predict_state(&g).unwrap();
        let simulated = reach_visco(&b, &kernel, ControlCase::A, &g, &grid).unwrap();
        let diff = ModalState::new(
            ControlCase::A,
            Space::X,
            predicted
                .position
                .iter()
                .zip(&simulated.position)
                .map(|(a, b)| a - b)
                .collect(),
            predicted
                .velocity
                .iter()
                .zip(&simulated.velocity)
                .map(|(a, b)| a - b)
                .collect(),
        )
        .unwrap();
        let rel = diff.norm_x(b.lambda()).unwrap() / simulated.norm_x(b.lambda()).unwrap();
        assert!(rel <= 1e-3, "{rel}");
    }

    #[test]
    fn compactness_vanishes_without_memory() {
        let b = beam(4);
        let grid = TimeGrid::new(1.0, 500).unwrap();
        let ms = elastic_system(&b, ControlCase::B, &grid);
        let probes = moment_probes(&ms).unwrap();
        for (i, p) in probes.iter().enumerate() {
            for (j, q) in probes.iter().enumerate() {
                let ip = inner_sigma(&grid, b.boundary(), p, q).unwrap();
                assert_abs_diff_eq!(ip, if i == j { 1.0 } else { 0.0 }, epsilon = 1e-8);
            }
        }
        let sv =
            compactness_diagnostic(&b, &MemoryKernel::elastic(), ControlCase::B, &grid, &probes)
                .unwrap();
        assert!(sv.iter().all(|s| *s <= 1e-10));
        let kernel = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let sv = compactness_diagnostic(&b, &kernel, ControlCase::B, &grid, &probes).unwrap();
        assert!(sv.windows(2).all(|w| w[0] >= w[1]));
        assert!(sv[0] > 1e-4);
    }

    #[test]
    fn annihilator_finds_invisible_mode() {
        let b = synthetic_basis(&[10.0, 40.0, 90.0, 160.0], &[1.0, 1.0, 0.0, 1.0]).unwrap();
        let grid = TimeGrid::new(1.0, 1000).unwrap();
        let ms = visco_system(&b, &MemoryKernel::elastic(), ControlCase::B, &grid);
        let r = annihilator_diagnostic(&ms);
        let w = r.witness.expect("mode 3 is invisible");
        for k in [0, 1, 3] {
            assert_abs_diff_eq!(w.position[k], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(w.velocity[k], 0.0, epsilon = 1e-12);
        }
        assert!(w.position[2].abs() + w.velocity[2].abs() > 0.0);
        assert!(matches!(
            synthesize_control(&ms, &zero_moments(&ms)),
            Err(Error::GramDegenerate { .. })
        ));

        let beam_ms = elastic_system(&beam(4), ControlCase::B, &grid);
        let r = annihilator_diagnostic(&beam_ms);
        assert!(r.min_eig > r.threshold && r.witness.is_none());
    }
}
