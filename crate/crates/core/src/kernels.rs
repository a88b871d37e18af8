//! Memory kernels, resolvent kernels and the MacCamy reformulation.
//!
//! The viscoelastic equation `w'' + Δ²w + ∫_0^t M(t-s) Δ²w(s) ds = F` is turned
//! into `w'' + Δ²w = a w' + b w + K * w + F₁` by solving the constitutive
//! Volterra equation for `Δ²w`. Here `R + M * R = M`, `a = R(0)`, `b = R'(0)`
//! and `K = R''`.

use alloc::vec::Vec;
use libm::exp;

use crate::error::{invalid, Result};
use crate::numgrid::{conv, Samples, TimeGrid};

/// One exponential `γ e^{-δ t}` of a Prony series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PronyTerm {
    pub gamma: f64,
    pub delta: f64,
}

/// Relaxation kernel `M(t) = Σ γ_i e^{-δ_i t}`. Empty means purely elastic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MemoryKernel {
    terms: Vec<PronyTerm>,
}

impl MemoryKernel {
    pub fn new(terms: Vec<PronyTerm>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if !t.gamma.is_finite() || !t.delta.is_finite() {
                return Err(invalid(alloc::format!("kernel term {i} is not finite")));
            }
            if t.delta < 0.0 {
                return Err(invalid(alloc::format!(
                    "kernel term {i}: delta must be >= 0, got {}",
                    t.delta
                )));
            }
        }
        Ok(Self { terms })
    }

    /// Kernel from `(gamma, delta)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(gamma, delta)| PronyTerm { gamma, delta })
                .collect(),
        )
    }

    pub fn elastic() -> Self {
        Self::default()
    }

    pub fn terms(&self) -> &[PronyTerm] {
        &self.terms
    }

    pub fn is_elastic(&self) -> bool {
        self.terms.iter().all(|t| t.gamma == 0.0)
    }

    /// Same kernel with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| PronyTerm {
                    gamma: t.gamma * factor,
                    delta: t.delta,
                })
                .collect(),
        }
    }

    /// `M^{(order)}(t)` for `order` in 0..=2.
    pub fn derivative(&self, order: u32, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|p| {
                let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
                sign * p.gamma * libm::pow(p.delta, order as f64) * exp(-p.delta * t)
            })
            .sum()
    }

    pub fn value(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }
}

/// `M`, `M'`, `M''` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSamples {
    pub m: Samples,
    pub dm: Samples,
    pub ddm: Samples,
}

pub fn eval_kernel(kernel: &MemoryKernel, grid: &TimeGrid) -> KernelSamples {
    KernelSamples {
        m: grid.sample(|t| kernel.derivative(0, t)),
        dm: grid.sample(|t| kernel.derivative(1, t)),
        ddm: grid.sample(|t| kernel.derivative(2, t)),
    }
}

/// Samples of the resolvent `R` and its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventKernel {
    pub grid: TimeGrid,
    pub r: Samples,
    pub dr: Samples,
    pub ddr: Samples,
}

impl ResolventKernel {
    /// `max_i |R + M * R - M|(t_i)`, with the convolution by trapezoid.
    pub fn residual(&self, kernel: &MemoryKernel) -> Samples {
        let m = self.grid.sample(|t| kernel.value(t));
        let mr = conv(&self.grid, &m, &self.r).expect("resolvent samples live on their grid");
        Samples(
            self.r
                .iter()
                .zip(mr.iter().zip(m.iter()))
                .map(|(r, (c, m))| r + c - m)
                .collect(),
        )
    }
}

/// Solves `R + M * R = M` by trapezoid forward substitution.
///
/// `R'` and `R''` come from the differentiated identities
/// `R' = M' - M(0) R - M' * R` and `R'' = M'' - M(0) R' - M'(0) R - M'' * R`.
pub fn resolvent(kernel: &MemoryKernel, grid: &TimeGrid) -> ResolventKernel {
    let ks = eval_kernel(kernel, grid);
    let n = grid.len();
    let dt = grid.dt();
    let m = &ks.m;

    let mut r = alloc::vec![0.0; n];
    r[0] = m[0];
    let diag = 1.0 + 0.5 * dt * m[0];
    for i in 1..n {
        let mut acc = 0.5 * m[i] * r[0];
        for j in 1..i {
            acc += m[i - j] * r[j];
        }
        r[i] = (m[i] - dt * acc) / diag;
    }
    let r = Samples(r);

    let dm_r = conv(grid, &ks.dm, &r).expect("same grid");
    let dr = Samples((0..n).map(|i| ks.dm[i] - m[0] * r[i] - dm_r[i]).collect());
    let ddm_r = conv(grid, &ks.ddm, &r).expect("same grid");
    let ddr = Samples(
        (0..n)
            .map(|i| ks.ddm[i] - m[0] * dr[i] - ks.dm[0] * r[i] - ddm_r[i])
            .collect(),
    );

    ResolventKernel {
        grid: *grid,
        r,
        dr,
        ddr,
    }
}

/// Constants of the MacCamy form `w'' + Δ²w = a w' + b w + K * w + F₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct MacCamyData {
    pub grid: TimeGrid,
    pub a: f64,
    pub b: f64,
    pub k: Samples,
    /// Set once the `a w'` term has been removed by the damping shift.
    pub damping_removed: bool,
}

impl MacCamyData {
    /// Data assembled from known constants, e.g. a closed-form resolvent.
    pub fn from_parts(grid: &TimeGrid, a: f64, b: f64, k: Samples) -> Result<Self> {
        grid.check(&k, "MacCamy kernel K")?;
        Ok(Self {
            grid: *grid,
            a,
            b,
            k,
            damping_removed: a == 0.0,
        })
    }

    /// True when solvers may take `a = 0`.
    pub fn is_undamped(&self) -> bool {
        self.damping_removed || self.a == 0.0
    }
}

pub fn maccamy_data(res: &ResolventKernel) -> MacCamyData {
    MacCamyData {
        grid: res.grid,
        a: res.r[0],
        b: res.dr[0],
        k: res.ddr.clone(),
        damping_removed: false,
    }
}

/// The substitution `v(t) = e^{-(a/2)t} w(t)` and its inverse, sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingShift {
    pub a: f64,
    pub grid: TimeGrid,
    /// `e^{-(a/2) t_i}`
    pub multiplier: Samples,
    /// `e^{(a/2) t_i}`
    pub inverse_multiplier: Samples,
}

impl DampingShift {
    /// The identity shift (`a = 0`).
    pub fn identity(grid: &TimeGrid) -> Self {
        Self {
            a: 0.0,
            grid: *grid,
            multiplier: grid.sample(|_| 1.0),
            inverse_multiplier: grid.sample(|_| 1.0),
        }
    }

    fn factor(&self, t: f64) -> f64 {
        exp(-0.5 * self.a * t)
    }

    /// `(w(t), w'(t)) ↦ (v(t), v'(t))` at time `t`.
    pub fn shift_state(&self, t: f64, w: f64, wp: f64) -> (f64, f64) {
        let e = self.factor(t);
        (e * w, e * (wp - 0.5 * self.a * w))
    }

    /// `(v(t), v'(t)) ↦ (w(t), w'(t))` at time `t`.
    pub fn unshift_state(&self, t: f64, v: f64, vp: f64) -> (f64, f64) {
        let e = 1.0 / self.factor(t);
        (e * v, e * (vp + 0.5 * self.a * v))
    }
}

/// Builds the shift pair for `data.a` and the MacCamy data of the shifted
/// unknown.
///
/// With `w = e^{(a/2)t} v` the shifted equation reads
/// `v'' + Δ²v = (b + a²/4) v + K̃ * v + e^{-(a/2)t} F₁` where
/// `K̃(t) = e^{-(a/2)t} K(t)`; the returned data carries these constants with
/// `a = 0` and `damping_removed` set.
pub fn damping_shift(data: &MacCamyData) -> (DampingShift, MacCamyData) {
    let grid = data.grid;
    let a = if data.damping_removed { 0.0 } else { data.a };
    let multiplier = grid.sample(|t| exp(-0.5 * a * t));
    let inverse_multiplier = grid.sample(|t| exp(0.5 * a * t));
    let k = Samples(
        data.k
            .iter()
            .zip(multiplier.iter())
            .map(|(k, e)| k * e)
            .collect(),
    );
    let shifted = MacCamyData {
        grid,
        a: 0.0,
        b: data.b + 0.25 * a * a,
        k,
        damping_removed: true,
    };
    (
        DampingShift {
            a,
            grid,
            multiplier,
            inverse_multiplier,
        },
        shifted,
    )
}

/// Per-mode forcing `F₁ = -R w₁ - R' w₀ + F - R * F`.
pub fn forcing_f1(
    res: &ResolventKernel,
    w0: f64,
    w1: f64,
    forcing: &[f64],
    grid: &TimeGrid,
) -> Result<Samples> {
    if *grid != res.grid {
        return Err(invalid("forcing_f1: resolvent lives on a different grid"));
    }
    grid.check(forcing, "forcing_f1 F")?;
    let rf = conv(grid, &res.r, forcing)?;
    Ok(Samples(
        (0..grid.len())
            .map(|i| -res.r[i] * w1 - res.dr[i] * w0 + forcing[i] - rf[i])
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn max_err(s: &[f64], f: impl Fn(f64) -> f64, g: &TimeGrid) -> f64 {
        g.nodes()
            .zip(s)
            .map(|(t, v)| (v - f(t)).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn kernel_evaluation() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        let one = MemoryKernel::from_pairs(&[(1.0, 0.0)]).unwrap();
        let ks = eval_kernel(&one, &g);
        assert!(ks.m.iter().all(|v| *v == 1.0));
        assert!(ks.dm.iter().all(|v| *v == 0.0));
        assert!(ks.ddm.iter().all(|v| *v == 0.0));

        let ks = eval_kernel(&MemoryKernel::elastic(), &g);
        assert!(ks.m.iter().chain(ks.dm.iter()).all(|v| *v == 0.0));

        let k = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        assert_abs_diff_eq!(k.derivative(0, 0.0), 0.5);
        assert_abs_diff_eq!(k.derivative(1, 0.0), -0.5);
        assert_abs_diff_eq!(k.derivative(2, 0.0), 0.5);
        assert!(MemoryKernel::from_pairs(&[(1.0, -0.1)]).is_err());
    }

    #[test]
    fn resolvent_of_constant_kernel() {
        // R = e^{-t}: e^{-t} + ∫_0^t e^{-s} ds = 1
        let g = TimeGrid::new(1.0, 1000).unwrap();
        let k = MemoryKernel::from_pairs(&[(1.0, 0.0)]).unwrap();
        let res = resolvent(&k, &g);
        assert!(max_err(&res.r, |t| exp(-t), &g) <= 1e-6);
        let mc = maccamy_data(&res);
        assert_abs_diff_eq!(mc.a, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mc.b, -1.0, epsilon = 1e-12);
        assert!(max_err(&mc.k, |t| exp(-t), &g) <= 1e-6);
    }

    #[test]
    fn resolvent_of_single_exponential() {
        // ansatz R = γ e^{-(γ+δ)t}
        let g = TimeGrid::new(2.0, 2000).unwrap();
        let k = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let res = resolvent(&k, &g);
        assert!(max_err(&res.r, |t| 0.5 * exp(-1.5 * t), &g) <= 1e-6);
        assert!(max_err(&res.dr, |t| -0.75 * exp(-1.5 * t), &g) <= 1e-6);
        assert!(max_err(&res.ddr, |t| 1.125 * exp(-1.5 * t), &g) <= 1e-6);
        assert!(res.residual(&k).max_abs() <= 1e-12);

        let mc = maccamy_data(&res);
        assert_abs_diff_eq!(mc.a, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(mc.b, -0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(mc.k[0], 1.125, epsilon = 1e-15);
    }

    #[test]
    fn elastic_resolvent_vanishes() {
        let g = TimeGrid::new(1.0, 100).unwrap();
        let res = resolvent(&MemoryKernel::elastic(), &g);
        assert!(res
            .r
            .iter()
            .chain(res.dr.iter())
            .chain(res.ddr.iter())
            .all(|v| *v == 0.0));
        let mc = maccamy_data(&res);
        assert_eq!((mc.a, mc.b), (0.0, 0.0));
        assert!(mc.is_undamped());
    }

    #[test]
    fn resolvent_residual_converges() {
        // residual measured with a fine-grid convolution of the coarse R
        let k = MemoryKernel::from_pairs(&[(0.8, 0.3), (0.4, 2.0)]).unwrap();
        let err = |n: usize| {
            let g = TimeGrid::new(1.0, n).unwrap();
            let res = resolvent(&k, &g);
            let exact_fine = {
                let gf = TimeGrid::new(1.0, 64 * n).unwrap();
                resolvent(&k, &gf)
            };
            g.nodes()
                .enumerate()
                .map(|(i, _)| (res.r[i] - exact_fine.r[64 * i]).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(50) / err(100);
        assert!(ratio > 3.5, "order ratio {ratio}");
    }

    #[test]
    fn small_kernels_give_small_resolvents() {
        for eps in [1e-2, 1e-3] {
            let g = TimeGrid::new(1.0, 500).unwrap();
            let k = MemoryKernel::from_pairs(&[(eps, 1.0)]).unwrap();
            let res = resolvent(&k, &g);
            let mmax = eval_kernel(&MemoryKernel::from_pairs(&[(1.0, 1.0)]).unwrap(), &g)
                .m
                .max_abs();
            assert!(res.r.max_abs() <= 1.1 * eps * mmax);
        }
    }

    #[test]
    fn damping_shift_pair() {
        let g = TimeGrid::new(2.0, 4).unwrap();
        let mc = MacCamyData::from_parts(&g, 0.0, 0.0, Samples::zeros(&g)).unwrap();
        let (s, _) = damping_shift(&mc);
        assert!(s.multiplier.iter().all(|v| *v == 1.0));

        let mut mc = MacCamyData::from_parts(&g, 1.0, 0.3, g.sample(|t| exp(-t))).unwrap();
        mc.damping_removed = false;
        let (s, shifted) = damping_shift(&mc);
        assert_abs_diff_eq!(s.multiplier[4], 0.367_879_441_171_442_3, epsilon = 1e-7);
        for (m, i) in s.multiplier.iter().zip(s.inverse_multiplier.iter()) {
            assert_abs_diff_eq!(m * i, 1.0, epsilon = 1e-15);
        }
        assert!(shifted.damping_removed);
        assert_eq!(shifted.a, 0.0);
        assert_abs_diff_eq!(shifted.b, 0.3 + 0.25);
        assert_abs_diff_eq!(shifted.k[4], exp(-2.0) * exp(-1.0), epsilon = 1e-15);

        let (v, vp) = s.shift_state(0.0, 2.0, 5.0);
        assert_abs_diff_eq!(v, 2.0);
        assert_abs_diff_eq!(vp, 5.0 - 0.5 * 2.0);
        let (w, wp) = s.unshift_state(
            1.3,
            s.shift_state(1.3, 0.7, -0.2).0,
            s.shift_state(1.3, 0.7, -0.2).1,
        );
        assert_abs_diff_eq!(w, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(wp, -0.2, epsilon = 1e-14);
    }

    #[test]
    fn f1_examples() {
        let g = TimeGrid::new(1.0, 1000).unwrap();
        let k = MemoryKernel::from_pairs(&[(0.5, 1.0)]).unwrap();
        let res = resolvent(&k, &g);
        let zero = Samples::zeros(&g);
        let f1 = forcing_f1(&res, 0.0, 0.0, &zero, &g).unwrap();
        assert!(f1.iter().all(|v| *v == 0.0));

        let f1 = forcing_f1(&res, 0.0, 1.0, &zero, &g).unwrap();
        assert!(max_err(&f1, |t| -0.5 * exp(-1.5 * t), &g) <= 1e-6);

        let el = resolvent(&MemoryKernel::elastic(), &g);
        let f = g.sample(libm::cos);
        assert_eq!(forcing_f1(&el, 0.3, 0.2, &f, &g).unwrap(), f);

        let other = TimeGrid::new(1.0, 10).unwrap();
        assert!(forcing_f1(&res, 0.0, 0.0, &zero, &other).is_err());
    }
}
