//! The five subcommands. Each writes its artifacts under the output directory
//! and returns whether its check passed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::{Config, OracleProfile};
use super::output::{fmt_real, io_err, write_series, write_snapshots, Report};
use crate::dynamics::{run, RunOptions, RunRecord, SolverConfig, State, StopReason};
use crate::elliptic::{check_divergence, velocity_from_stream, StreamSolver};
use crate::error::{Error, Result};
use crate::grid::{integrate, Grid, Parity, ScalarField};
use crate::initdata::bump;
use crate::monitors::empirical_theorem_constants;
use crate::oracle1d::{blowup_time, compare_2d, decoupled, fixture_state, Profile1D};
use crate::tracker::pi_conservation_check;

/// Result of a subcommand: pass/fail plus the report it wrote.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    pub report: Report,
    pub dir: PathBuf,
}

/// `base / seed_label`, or `base` when no label is given.
pub fn output_dir(cfg: &Config, out: Option<&Path>, seed_label: Option<&str>) -> PathBuf {
    let base = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.directory.clone());
    match seed_label {
        Some(l) => base.join(l),
        None => base,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// Simulates the configured data and writes `config.txt`, `series.csv`,
/// `snapshots/` and `report.txt`. Passes on a clean stop.
pub fn cmd_run(cfg: &Config, dir: &Path) -> Result<(Outcome, RunRecord)> {
    let grid = cfg.grid.grid();
    let init = cfg.data.state(&grid)?;
    ensure_dir(&dir.join("snapshots"))?;
    let echo = dir.join("config.txt");
    fs::write(&echo, cfg.to_text()).map_err(io_err(&echo))?;

    let stride = cfg.output.snapshot_stride;
    let mut last_snap = None;
    let rec = run(init, &cfg.solver, &RunOptions::default(), |step, state, _| {
        if step == 0 || (stride > 0 && step % stride == 0) {
            write_snapshots(dir, step, state)?;
            last_snap = Some(step);
        }
        Ok(())
    })?;
    if last_snap != Some(rec.steps) {
        write_snapshots(dir, rec.steps, &rec.final_state)?;
    }
    write_series(dir, &rec, cfg.output.series_stride)?;

    let report = run_report(cfg, &rec);
    report.write(&dir.join("report.txt"))?;
    let passed = rec.stop != StopReason::Diverged;
    Ok((Outcome { passed, report, dir: dir.to_path_buf() }, rec))
}

/// Summary of a run; deterministic (no wall-clock entries).
pub fn run_report(cfg: &Config, rec: &RunRecord) -> Report {
    let mut r = Report::new();
    let min = |it: &mut dyn Iterator<Item = f64>| it.filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
    let max = |it: &mut dyn Iterator<Item = f64>| it.filter(|v| !v.is_nan()).fold(f64::NEG_INFINITY, f64::max);
    let p = &rec.prediction;
    r.text("stop_reason", rec.stop.as_str())
        .real("t_stop", rec.final_state.t)
        .text("steps", rec.steps)
        .text("rows", rec.rows.len())
        .text("nu_mode", cfg.solver.nu_mode.as_str())
        .real("nu", cfg.solver.nu)
        .text("limiter", cfg.solver.limiter.as_str())
        .real("J0", rec.trajectory.j0)
        .real("y0", rec.trajectory.y0)
        .real("t_riccati_lower", p.t_riccati_lower)
        .real("t_theorem_cap", p.t_theorem_cap)
        .opt("t_extrapolated", p.t_extrapolated)
        .opt("fit_quality", p.fit_quality)
        .text("fit_samples", p.fit_samples)
        .text("trajectory_exited", rec.trajectory.exited)
        .real("traj_pi_deviation_max", pi_conservation_check(&rec.trajectory))
        .real("riccati_residual_max", max(&mut rec.riccati_residual().into_iter()))
        .real("margin_max_principle_min", min(&mut rec.margins.iter().map(|m| m.max_principle)))
        .real("pi_l2_drift_min", min(&mut rec.margins.iter().map(|m| m.pi_l2_drift)))
        .real("pi_l2_drift_max", max(&mut rec.margins.iter().map(|m| m.pi_l2_drift)))
        .opt("margin_gamma_min", rec.margins.iter().filter_map(|m| m.gamma).reduce(f64::min))
        .real("margin_integral_ineq_min", min(&mut rec.integral_margin().into_iter()));
    let swirl_max = max(&mut rec.margins.iter().map(|m| m.swirl_ratio));
    r.real("swirl_ratio_max", swirl_max)
        .real("swirl_cap", cfg.tolerance.swirl_cap)
        .text("swirl_within_cap", swirl_max <= cfg.tolerance.swirl_cap);
    if cfg.solver.effective_nu() > 0.0 {
        r.real("enstrophy_violation_max", rec.enstrophy_violation())
            .real("enstrophy_rhs", crate::monitors::enstrophy_rhs(rec.init_row(), cfg.solver.effective_nu()));
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonRow {
    pub n: usize,
    pub linf_error: f64,
    pub divergence: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// `phi = exp(-r^2 - z^2)`, `Omega = (10 - 4 r^2 - 4 z^2) phi`.
pub fn manufactured_omega(grid: &Grid) -> ScalarField {
    ScalarField::from_fn(grid, Parity::Even, |r, z| {
        let s = r * r + z * z;
        (10.0 - 4.0 * s) * (-s).exp()
    })
}

pub fn poisson_study(sizes: &[usize], r_max: f64, z_half: f64, tol: f64, max_iter: usize) -> Result<Vec<PoissonRow>> {
    sizes
        .iter()
        .map(|&n| {
            let g = Grid::new(n, n, r_max, z_half)?;
            let stream = StreamSolver::new(&g).solve(&manufactured_omega(&g), tol, max_iter)?;
            let exact = ScalarField::from_fn(&g, Parity::Even, |r, z| (-(r * r) - z * z).exp());
            let linf_error =
                stream.phi.values().iter().zip(exact.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let vel = velocity_from_stream(&stream);
            Ok(PoissonRow {
                n,
                linf_error,
                divergence: check_divergence(&vel),
                residual: stream.residual_linf,
                iterations: stream.iterations,
            })
        })
        .collect()
}

/// `log2(e_k / e_{k+1})` for consecutive entries.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

pub fn cmd_poisson_check(cfg: &Config, dir: &Path) -> Result<Outcome> {
    ensure_dir(dir)?;
    let pc = &cfg.poisson;
    let rows = poisson_study(&pc.sizes, pc.r_max, pc.z_half, cfg.tolerance.elliptic_tol, cfg.tolerance.elliptic_max_iter)?;
    let orders = observed_orders(&rows.iter().map(|r| r.linf_error).collect::<Vec<_>>());
    let div_ratios: Vec<f64> = rows.windows(2).map(|w| w[0].divergence / w[1].divergence).collect();

    let mut csv = String::from("n,linf_error,order,divergence,divergence_ratio,residual,iterations\n");
    for (k, row) in rows.iter().enumerate() {
        let order = if k == 0 { f64::NAN } else { orders[k - 1] };
        let ratio = if k == 0 { f64::NAN } else { div_ratios[k - 1] };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.n,
            fmt_real(row.linf_error),
            fmt_real(order),
            fmt_real(row.divergence),
            fmt_real(ratio),
            fmt_real(row.residual),
            row.iterations
        );
    }
    let path = dir.join("poisson.csv");
    fs::write(&path, csv).map_err(io_err(&path))?;

    let min_order = orders.iter().copied().fold(f64::INFINITY, f64::min);
    let passed = min_order >= cfg.tolerance.min_order;
    let last = rows.last().expect("at least two sizes");
    let mut r = Report::new();
    r.text("sizes", pc.sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","))
        .real("order_min", min_order)
        .real("order_required", cfg.tolerance.min_order)
        .real("finest_linf_error", last.linf_error)
        .real("finest_divergence", last.divergence)
        .real("divergence_ratio_min", div_ratios.iter().copied().fold(f64::INFINITY, f64::min))
        .text("passed", passed);
    r.write(&dir.join("poisson_report.txt"))?;
    Ok(Outcome { passed, report: r, dir: dir.to_path_buf() })
}

/// On-axis profile `(J0 + y0 z) chi(z^2 / rho^2)` of the data family.
pub fn family_profile(j0: f64, y0: f64, rho: f64, z_half: f64) -> Profile1D {
    let v0 = move |z: f64| (j0 + y0 * z) * bump(z * z / (rho * rho));
    let dv0 = move |z: f64| {
        let s = z * z / (rho * rho);
        if s >= 1.0 {
            return 0.0;
        }
        let b = bump(s);
        let db = -b / ((1.0 - s) * (1.0 - s));
        y0 * b + (j0 + y0 * z) * db * 2.0 * z / (rho * rho)
    };
    Profile1D::analytic(v0, dv0, (-z_half, z_half))
}

/// Profile and grid used by the oracle command.
pub fn oracle_setup(cfg: &Config) -> Result<(Profile1D, Grid)> {
    let oc = &cfg.oracle;
    Ok(match oc.profile {
        OracleProfile::Sine => (Profile1D::sine(), Grid::new(oc.nr, oc.nz, 1.0, std::f64::consts::PI)?),
        OracleProfile::Family => {
            let d = &cfg.data;
            (
                family_profile(d.j0, d.y0, d.support_radius, cfg.grid.z_half),
                Grid::new(oc.nr, oc.nz, cfg.grid.r_max, cfg.grid.z_half)?,
            )
        }
    })
}

/// Tracked decoupled run of the oracle fixture, stopped once the axis
/// gradient reaches `gradient_factor * max v0'`.
pub fn oracle_blowup_run(p: &Profile1D, grid: &Grid, solver: &SolverConfig, gradient_factor: f64) -> Result<RunRecord> {
    let t_star = blowup_time(p);
    if !t_star.is_finite() {
        return Err(Error::Invalid("oracle profile never steepens".into()));
    }
    let cfg = SolverConfig {
        gradient_stop: gradient_factor / (2.0 * t_star),
        t_end: 2.0 * t_star,
        dt_max: solver.dt_max.min(1e-2 * t_star),
        ..decoupled(solver)
    };
    run(fixture_state(p, grid), &cfg, &RunOptions::default(), |_, _, _| Ok(()))
}

/// Largest absolute Riccati residual while `f <= factor * y0`.
pub fn riccati_residual_below(rec: &RunRecord, factor: f64) -> f64 {
    let y0 = rec.trajectory.y0;
    rec.riccati_residual()
        .iter()
        .zip(&rec.trajectory.samples)
        .take_while(|(_, s)| s.f <= factor * y0)
        .map(|(r, _)| r.abs())
        .filter(|r| !r.is_nan())
        .fold(0.0, f64::max)
}

pub fn cmd_oracle(cfg: &Config, dir: &Path) -> Result<Outcome> {
    ensure_dir(dir)?;
    let (p, grid) = oracle_setup(cfg)?;
    let t_star = blowup_time(&p);
    let rows = compare_2d(&p, &grid, &cfg.solver, &cfg.oracle.times)?;
    let rec = oracle_blowup_run(&p, &grid, &cfg.solver, cfg.oracle.gradient_factor)?;

    let mut csv = String::from("t,linf,l2,linf_rel\n");
    for row in &rows {
        let _ = writeln!(csv, "{},{},{},{}", fmt_real(row.t), fmt_real(row.linf), fmt_real(row.l2), fmt_real(row.linf_rel));
    }
    let path = dir.join("oracle.csv");
    fs::write(&path, csv).map_err(io_err(&path))?;

    let worst = rows.iter().map(|r| r.linf_rel).fold(0.0, f64::max);
    let t_ext = rec.prediction.t_extrapolated;
    let rel = t_ext.map(|t| t / t_star - 1.0);
    let within_cap = worst <= cfg.tolerance.oracle_linf_cap;
    let blowup_ok = rel.is_some_and(|e| e.abs() <= cfg.tolerance.oracle_blowup_tol);
    let mut r = Report::new();
    r.real("t_star_exact", t_star)
        .real("linf_rel_max", worst)
        .real("linf_rel_cap", cfg.tolerance.oracle_linf_cap)
        .text("stop_reason", rec.stop.as_str())
        .opt("t_extrapolated", t_ext)
        .opt("t_extrapolated_rel_error", rel)
        .real("t_extrapolated_tol", cfg.tolerance.oracle_blowup_tol)
        .real("riccati_residual_max_below_10y0", riccati_residual_below(&rec, 10.0))
        .text("passed", within_cap && blowup_ok);
    r.write(&dir.join("oracle_report.txt"))?;
    Ok(Outcome { passed: within_cap && blowup_ok, report: r, dir: dir.to_path_buf() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub nr: usize,
    pub nz: usize,
    /// Weighted L2 distance of `Pi` to the next finer level on this level's nodes.
    pub l2_diff: f64,
    pub linf_diff: f64,
    /// Weighted L2 distance of `Pi` to the finest level.
    pub l2_ref: f64,
}

/// Injection of a finer nested grid's field onto `coarse` nodes.
fn inject(fine: &ScalarField, coarse: &Grid) -> ScalarField {
    let g = fine.grid();
    let sr = (g.nr() - 1) / (coarse.nr() - 1);
    let sz = (g.nz() - 1) / (coarse.nz() - 1);
    let mut out = ScalarField::zeros(coarse, fine.parity());
    for i in 0..coarse.nr() {
        for j in 0..coarse.nz() {
            out.set(i, j, fine.at(i * sr, j * sz));
        }
    }
    out
}

fn distance(a: &ScalarField, b: &ScalarField) -> (f64, f64) {
    let mut d = a.clone();
    d.axpy(-1.0, b);
    (integrate(&d, |v| v * v).sqrt(), d.max_abs())
}

/// Levels of the convergence study, keeping the `[grid]` cell aspect.
pub fn convergence_grids(cfg: &Config) -> Result<Vec<Grid>> {
    let (nr, nz) = (cfg.grid.nr, cfg.grid.nz);
    cfg.convergence
        .levels
        .iter()
        .map(|&n| {
            let cells = (nz - 1) * (n - 1);
            if cells % (nr - 1) != 0 || (cells / (nr - 1)) % 2 != 0 {
                return Err(Error::Invalid(format!("level nr = {n} does not keep the [grid] aspect with odd nz")));
            }
            Ok(Grid::new(n, cells / (nr - 1) + 1, cfg.grid.r_max, cfg.grid.z_half)?)
        })
        .collect()
}

/// Runs the configured data to a pre-steepening time on each level and
/// measures `Pi` differences between consecutive levels.
pub fn convergence_study(cfg: &Config) -> Result<(f64, Vec<ConvergenceRow>)> {
    let grids = convergence_grids(cfg)?;
    let y0 = cfg.data.y0;
    let t = if y0 > 0.0 { cfg.convergence.t_fraction / (2.0 * y0) } else { cfg.convergence.t_fraction };
    let solver = SolverConfig {
        t_end: t,
        gradient_stop: f64::INFINITY,
        limiter: cfg.convergence.limiter,
        ..cfg.solver.clone()
    };
    let finals = grids
        .iter()
        .map(|g| {
            let rec = run(cfg.data.state(g)?, &solver, &RunOptions::default(), |_, _, _| Ok(()))?;
            if rec.stop == StopReason::Diverged {
                return Err(Error::Invalid(format!("level {}x{} diverged", g.nr(), g.nz())));
            }
            Ok(rec.final_state)
        })
        .collect::<Result<Vec<State>>>()?;
    let finest = finals.last().expect("at least three levels");
    let rows = finals[..finals.len() - 1]
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let g = s.grid();
            let (l2_diff, linf_diff) = distance(&s.pi, &inject(&finals[k + 1].pi, g));
            let (l2_ref, _) = distance(&s.pi, &inject(&finest.pi, g));
            ConvergenceRow { nr: g.nr(), nz: g.nz(), l2_diff, linf_diff, l2_ref }
        })
        .collect();
    Ok((t, rows))
}

pub fn cmd_convergence(cfg: &Config, dir: &Path) -> Result<Outcome> {
    ensure_dir(dir)?;
    let (t, rows) = convergence_study(cfg)?;
    let orders = observed_orders(&rows.iter().map(|r| r.l2_diff).collect::<Vec<_>>());
    let mut csv = String::from("nr,nz,l2_diff,linf_diff,l2_ref,order\n");
    for (k, row) in rows.iter().enumerate() {
        let order = if k == 0 { f64::NAN } else { orders[k - 1] };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            row.nr,
            row.nz,
            fmt_real(row.l2_diff),
            fmt_real(row.linf_diff),
            fmt_real(row.l2_ref),
            fmt_real(order)
        );
    }
    let path = dir.join("convergence.csv");
    fs::write(&path, csv).map_err(io_err(&path))?;
    let finest_order = orders.last().copied().unwrap_or(f64::NAN);
    let passed = finest_order >= cfg.tolerance.min_order;
    let mut r = Report::new();
    r.real("t_probe", t)
        .real("order_finest", finest_order)
        .real("order_required", cfg.tolerance.min_order)
        .text("passed", passed);
    r.write(&dir.join("convergence_report.txt"))?;
    Ok(Outcome { passed, report: r, dir: dir.to_path_buf() })
}

pub fn cmd_predict(cfg: &Config, dir: &Path) -> Result<Outcome> {
    ensure_dir(dir)?;
    let init = cfg.data.state(&cfg.grid.grid())?;
    let t = empirical_theorem_constants(&init, &cfg.solver)?;
    let mut r = Report::new();
    r.real("J0_measured", t.j0)
        .real("y0_measured", t.y0)
        .real("linf_pi0", t.linf_pi0)
        .real("l2_pi0", t.l2_pi0)
        .real("l1_pi0", t.l1_pi0)
        .real("linf_omega0", t.linf_omega0)
        .real("l2_omega0", t.l2_omega0)
        .real("l1_omega0", t.l1_omega0)
        .real("swirl_constant_viscous", t.swirl_constant_viscous)
        .real("swirl_constant_inviscid", t.swirl_constant_inviscid)
        .text("swirl_probe_used", t.probe_used)
        .real("inviscid_size", t.inviscid_size)
        .real("inviscid_threshold", t.inviscid_threshold)
        .text("y0_above_inviscid_threshold", t.y0 >= t.inviscid_threshold)
        .opt("t_riccati_lower", t.t_riccati_lower)
        .opt("t_star", t.t_star)
        .text("theorem_regime", t.theorem_regime);
    r.write(&dir.join("predict_report.txt"))?;
    Ok(Outcome { passed: true, report: r, dir: dir.to_path_buf() })
}

