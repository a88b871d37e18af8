//! The four experiments behind the subcommands. Each writes its CSV artifacts
//! plus a manifest and returns the headline numbers.

use std::path::Path;

use anyhow::Result;
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use viscoctl_core::control::{
    annihilator_diagnostic, compactness_diagnostic, elastic_moment_functions, moment_probes,
    reach_elastic, reach_report, reach_visco, synthesize_control, visco_moment_functions,
    AnnihilatorReport, MomentSystem, ReachReport,
};
use viscoctl_core::dynamics::{check_resolution, forward_simulate, solve_zset, Resolution};
use viscoctl_core::kernels::{damping_shift, eval_kernel, maccamy_data, resolvent};
use viscoctl_core::numgrid::{inner_sigma, BoundarySamples, TimeGrid};
use viscoctl_core::spectral::{psi_sequence, ControlCase, ModalBasis, ModalState};
use viscoctl_core::Error;

use crate::config::ExperimentConfig;
use crate::output::{num, CsvTable, OutputDir, Report};

#[derive(Debug, Clone)]
pub struct ResolventSummary {
    pub a: f64,
    pub b: f64,
    pub k0: f64,
    pub max_residual: f64,
}

/// Writes `resolvent.csv`: `t, M, R, R', R'', residual`.
pub fn run_resolvent(cfg: &ExperimentConfig, out: &Path) -> Result<ResolventSummary> {
    let dir = OutputDir::create(out)?;
    dir.write_manifest("resolvent", &cfg.source)?;
    let grid = cfg.grid();
    let res = resolvent(&cfg.kernel, &grid);
    let m = eval_kernel(&cfg.kernel, &grid).m;
    let residual = res.residual(&cfg.kernel);
    let mut table = CsvTable::new(["t", "M", "R", "dR", "ddR", "residual"]);
    for (i, t) in grid.nodes().enumerate() {
        table.push_numbers([t, m[i], res.r[i], res.dr[i], res.ddr[i], residual[i]]);
    }
    table.write(&dir.path("resolvent.csv"))?;
    let mc = maccamy_data(&res);
    let summary = ResolventSummary {
        a: mc.a,
        b: mc.b,
        k0: mc.k[0],
        max_residual: residual.max_abs(),
    };
    info!(
        "resolvent: a = {}, b = {}, K(0) = {}, max residual {:.3e}",
        summary.a, summary.b, summary.k0, summary.max_residual
    );
    Ok(summary)
}

fn guard_resolution(basis: &ModalBasis, grid: &TimeGrid) -> Result<Resolution> {
    let lambda_max = basis.lambda().iter().copied().fold(0.0, f64::max);
    let r = check_resolution(lambda_max, grid.dt())?;
    if r == Resolution::Coarse {
        warn!(
            "lambda_max * dt = {:.3}: fewer than ~6 steps per period of the fastest mode",
            lambda_max * grid.dt()
        );
    }
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct SimulateSummary {
    pub final_state: ModalState,
    pub initial_energy: f64,
    pub final_energy: f64,
}

/// Writes `trajectory.csv`: `t, w_1..w_N, dw_1..dw_N, energy`.
pub fn run_simulate(cfg: &ExperimentConfig, out: &Path) -> Result<SimulateSummary> {
    let dir = OutputDir::create(out)?;
    dir.write_manifest("simulate", &cfg.source)?;
    let grid = cfg.grid();
    let basis = cfg.modal_basis()?;
    guard_resolution(&basis, &grid)?;
    let (amp, freq) = (cfg.drive.amplitude, cfg.drive.frequency);
    let g = BoundarySamples::from_fn(&grid, basis.boundary(), |_, t| amp * (freq * t).sin());
    let traj = forward_simulate(
        &basis,
        &cfg.kernel,
        cfg.case,
        &g,
        &cfg.initial_state(),
        &grid,
    )?;
    let energy = traj.energy();

    let n = basis.len();
    let header = std::iter::once("t".to_owned())
        .chain((1..=n).map(|k| format!("w_{k}")))
        .chain((1..=n).map(|k| format!("dw_{k}")))
        .chain(std::iter::once("energy".to_owned()));
    let mut table = CsvTable::new(header);
    for (i, t) in grid.nodes().enumerate() {
        let row = std::iter::once(t)
            .chain(traj.position.iter().map(|p| p[i]))
            .chain(traj.velocity.iter().map(|v| v[i]))
            .chain(std::iter::once(energy[i]));
        table.push_numbers(row);
    }
    table.write(&dir.path("trajectory.csv"))?;
    Ok(SimulateSummary {
        final_state: traj.final_state(),
        initial_energy: energy[0],
        final_energy: energy[grid.n_steps()],
    })
}

/// Random state of unit `X` norm with Gaussian coordinates.
pub fn random_unit_target(case: ControlCase, lambda: &[f64], seed: u64) -> ModalState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = lambda.len();
    let coords: Vec<f64> = (0..2 * n)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let norm = coords.iter().map(|v| v * v).sum::<f64>().sqrt();
    let coords: Vec<f64> = coords.iter().map(|v| v / norm).collect();
    ModalState::from_x_coordinates(case, lambda, &coords[..n], &coords[n..])
}

/// Gaussian white-noise controls of unit `L²(Σ)` norm.
pub fn random_probes(
    basis: &ModalBasis,
    grid: &TimeGrid,
    count: usize,
    seed: u64,
) -> Result<Vec<BoundarySamples>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bg = basis.boundary();
    (0..count)
        .map(|_| {
            let data = (0..grid.len() * bg.len())
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let q = BoundarySamples::from_raw(grid.len(), bg.len(), data)?;
            let norm = inner_sigma(grid, bg, &q, &q)?.sqrt();
            Ok(q.scale_in_time(&vec![1.0 / norm; grid.len()]))
        })
        .collect()
}

/// The visco moment system for `cfg`, built on the damping-shifted data.
pub fn visco_system(
    cfg: &ExperimentConfig,
    basis: &ModalBasis,
    grid: &TimeGrid,
) -> Result<MomentSystem> {
    let (shift, data) = damping_shift(&maccamy_data(&resolvent(&cfg.kernel, grid)));
    let zset = solve_zset(&data, basis, grid)?;
    Ok(visco_moment_functions(
        basis,
        &psi_sequence(basis, cfg.case),
        &zset,
        &shift,
        grid,
    )?)
}

fn write_gram(ms: &MomentSystem, path: &Path) -> Result<()> {
    let mut table = CsvTable::new((1..=ms.dim()).map(|k| format!("c{k}")));
    for row in ms.gram_rows() {
        table.push_numbers(row);
    }
    table.write(path)
}

#[derive(Debug, Clone)]
pub struct ControlSummary {
    pub report: ReachReport,
    pub gram_min_eig: f64,
}

/// Synthesizes the minimum-norm control for the configured target and
/// verifies it by simulation. Writes `gram.csv`, `control.csv`, `report.csv`.
pub fn run_control(cfg: &ExperimentConfig, out: &Path, visco: bool) -> Result<ControlSummary> {
    let dir = OutputDir::create(out)?;
    dir.write_manifest(
        if visco { "control --visco" } else { "control" },
        &cfg.source,
    )?;
    let grid = cfg.grid();
    let basis = cfg.modal_basis()?;
    guard_resolution(&basis, &grid)?;
    if !visco && !cfg.kernel.is_elastic() {
        info!("kernel ignored: elastic control requested (pass --visco to include memory)");
    }
    let ms = if visco {
        visco_system(cfg, &basis, &grid)?
    } else {
        elastic_moment_functions(&basis, &psi_sequence(&basis, cfg.case), &grid)?
    };
    write_gram(&ms, &dir.path("gram.csv"))?;

    let target = cfg
        .explicit_target()
        .unwrap_or_else(|| random_unit_target(cfg.case, basis.lambda(), cfg.seed));
    let control = synthesize_control(&ms, &ms.target_moments(&target)?)?;
    let achieved = if visco {
        reach_visco(&basis, &cfg.kernel, cfg.case, &control.g, &grid)?
    } else {
        reach_elastic(&basis, cfg.case, &control.g, &grid)?
    };
    let report = reach_report(&ms, basis.lambda(), &target, &achieved, &control)?;
    let gram_min_eig = ms.gram_eigenvalues()[0];

    let bg = basis.boundary();
    let header = std::iter::once("t".to_owned())
        .chain(bg.points().iter().map(|x| format!("g(x={})", num(*x))));
    let mut table = CsvTable::new(header);
    for (i, t) in grid.nodes().enumerate() {
        table.push_numbers(std::iter::once(t).chain(control.g.row(i).iter().copied()));
    }
    table.write(&dir.path("control.csv"))?;

    let mut rep = Report::new();
    rep.text("system", if visco { "visco" } else { "elastic" });
    rep.number("residual_abs", report.residual_abs);
    rep.number("residual_rel", report.residual_rel);
    rep.number("control_norm", report.control_norm);
    rep.number("gram_condition", report.gram_condition);
    rep.number("gram_min_eig", gram_min_eig);
    for k in 0..basis.len() {
        rep.number(format!("target_w_{}", k + 1), target.position[k]);
        rep.number(format!("target_dw_{}", k + 1), target.velocity[k]);
        rep.number(format!("achieved_w_{}", k + 1), achieved.position[k]);
        rep.number(format!("achieved_dw_{}", k + 1), achieved.velocity[k]);
    }
    rep.write(&dir.path("report.csv"))?;
    info!(
        "control: relative X residual {:.3e}, control norm {:.3e}, Gram condition {:.3e}",
        report.residual_rel, report.control_norm, report.gram_condition
    );
    Ok(ControlSummary {
        report,
        gram_min_eig,
    })
}

#[derive(Debug, Clone)]
pub struct DiagnosticsSummary {
    pub psi_norms: Vec<f64>,
    pub elastic_eigs: Vec<f64>,
    pub visco_eigs: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub annihilator: AnnihilatorReport,
}

/// Writes `psi_norms.csv`, `gram_eigs.csv`, `svd.csv`, `annihilator.csv`.
pub fn run_diagnostics(cfg: &ExperimentConfig, out: &Path) -> Result<DiagnosticsSummary> {
    let dir = OutputDir::create(out)?;
    dir.write_manifest("diagnostics", &cfg.source)?;
    let grid = cfg.grid();
    let basis = cfg.modal_basis()?;
    guard_resolution(&basis, &grid)?;
    let bg = basis.boundary();

    let psi = psi_sequence(&basis, cfg.case);
    let psi_norms = psi.norms(bg);
    let mut table = CsvTable::new(["mode", "lambda", "psi_norm"]);
    for (k, (l, p)) in basis.lambda().iter().zip(&psi_norms).enumerate() {
        table.push_raw(vec![(k + 1).to_string(), num(*l), num(*p)]);
    }
    table.write(&dir.path("psi_norms.csv"))?;

    let elastic = elastic_moment_functions(&basis, &psi, &grid)?;
    let visco = visco_system(cfg, &basis, &grid)?;
    let elastic_eigs = elastic.gram_eigenvalues();
    let visco_eigs = visco.gram_eigenvalues();
    let mut table = CsvTable::new(["index", "elastic", "visco"]);
    for (k, (e, v)) in elastic_eigs.iter().zip(&visco_eigs).enumerate() {
        table.push_raw(vec![(k + 1).to_string(), num(*e), num(*v)]);
    }
    table.write(&dir.path("gram_eigs.csv"))?;

    let probes = if cfg.probe_count > 0 {
        Some(random_probes(&basis, &grid, cfg.probe_count, cfg.seed)?)
    } else {
        match moment_probes(&elastic) {
            Ok(p) => Some(p),
            Err(Error::GramDegenerate { min_eig, .. }) => {
                warn!("elastic Gram is degenerate (min eig {min_eig:.3e}); compactness diagnostic skipped, set probe_count for random probes");
                None
            }
            Err(e) => return Err(e.into()),
        }
    };
    let singular_values = match probes {
        Some(p) => compactness_diagnostic(&basis, &cfg.kernel, cfg.case, &grid, &p)?,
        None => Vec::new(),
    };
    let mut table = CsvTable::new(["index", "sigma"]);
    for (k, s) in singular_values.iter().enumerate() {
        table.push_raw(vec![(k + 1).to_string(), num(*s)]);
    }
    table.write(&dir.path("svd.csv"))?;

    let annihilator = annihilator_diagnostic(&visco);
    let mut rep = Report::new();
    rep.number("min_eig", annihilator.min_eig);
    rep.number("threshold", annihilator.threshold);
    rep.text(
        "witness",
        if annihilator.witness.is_some() {
            "found"
        } else {
            "none"
        },
    );
    if let Some(w) = &annihilator.witness {
        for k in 0..w.len() {
            rep.number(format!("witness_w_{}", k + 1), w.position[k]);
            rep.number(format!("witness_dw_{}", k + 1), w.velocity[k]);
        }
    }
    rep.write(&dir.path("annihilator.csv"))?;

    Ok(DiagnosticsSummary {
        psi_norms,
        elastic_eigs,
        visco_eigs,
        singular_values,
        annihilator,
    })
}
