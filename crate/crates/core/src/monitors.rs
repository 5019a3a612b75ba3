//! Runtime checks of the a priori estimates and the per-step diagnostic row.
//!
//! All norms use the R^3 measure `2 pi r dr dz`. Estimates whose constants are
//! not known explicitly are recorded as empirical ratios rather than asserted.

use std::f64::consts::PI;

use crate::dynamics::{SolverConfig, State, ViscosityMode};
use crate::elliptic::{velocity_from_stream, StreamSolver, VelocityField};
use crate::grid::{d_dr, d_dz, integrate, norm, Grid, Norm, Parity, ScalarField};
use crate::initdata::measure_origin_data;
use crate::tracker::AxisRow;

/// Relative slack of the max-principle check.
pub const MAX_PRINCIPLE_SLACK: f64 = 1e-6;
/// Relative slack of the Gamma transport check.
pub const GAMMA_SLACK: f64 = 1e-3;

/// Diagnostics sampled from one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorRow {
    pub t: f64,
    pub linf_pi: f64,
    pub l2_pi: f64,
    pub l1_pi: f64,
    pub l2_omega: f64,
    pub l1_omega: f64,
    pub linf_omega: f64,
    /// `|Omega + Pi|_inf`.
    pub linf_gamma: f64,
    /// `|u_r / r|_inf`.
    pub swirl_sup: f64,
    /// `max_z d_z Pi(t, 0, z)`.
    pub max_f_axis: f64,
    /// `|grad Omega|_2^2`.
    pub grad_omega_sq: f64,
    /// `|d_z Omega|_2^2`.
    pub dz_omega_sq: f64,
    /// `2 pi int Omega(t, 0, z)^2 dz`.
    pub axis_omega_sq: f64,
    /// Discrete `d/dt |Omega|^2 + nu * dissipation`, the left side of the
    /// enstrophy inequality. NaN on the first row.
    pub enstrophy_flux: f64,
}

impl MonitorRow {
    pub fn sample(state: &State, vel: &VelocityField) -> Self {
        let g = *state.grid();
        let mut gamma = state.omega.clone();
        gamma.axpy(1.0, &state.pi);
        let dr = d_dr(&state.omega);
        let dz = d_dz(&state.omega);
        let sq = |f: &ScalarField| integrate(f, |v| v * v);
        let axis_omega_sq = 2.0 * PI * line_integral(&g, state.omega.axis(), |v| v * v);
        let dz_sq = sq(&dz);
        Self {
            t: state.t,
            linf_pi: norm(&state.pi, Norm::Linf),
            l2_pi: norm(&state.pi, Norm::L2),
            l1_pi: norm(&state.pi, Norm::L1),
            l2_omega: norm(&state.omega, Norm::L2),
            l1_omega: norm(&state.omega, Norm::L1),
            linf_omega: norm(&state.omega, Norm::Linf),
            linf_gamma: gamma.max_abs(),
            swirl_sup: vel.swirl_ratio.max_abs(),
            max_f_axis: AxisRow::new(state, vel).max_gradient(),
            grad_omega_sq: sq(&dr) + dz_sq,
            dz_omega_sq: dz_sq,
            axis_omega_sq,
            enstrophy_flux: f64::NAN,
        }
    }

    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.linf_pi,
            self.l2_pi,
            self.l1_pi,
            self.l2_omega,
            self.linf_gamma,
            self.swirl_sup,
            self.max_f_axis,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// The viscous part `nu * (G + axis term)` of the enstrophy left side.
    fn dissipation(&self, mode: ViscosityMode, nu: f64) -> f64 {
        match mode {
            ViscosityMode::Full => nu * (self.grad_omega_sq + self.axis_omega_sq),
            ViscosityMode::ZOnly => nu * self.dz_omega_sq,
            ViscosityMode::None => 0.0,
        }
    }
}

fn line_integral(g: &Grid, line: &[f64], h: impl Fn(f64) -> f64) -> f64 {
    let n = line.len();
    line.iter()
        .enumerate()
        .map(|(j, &v)| if j == 0 || j == n - 1 { 0.5 * h(v) } else { h(v) })
        .sum::<f64>()
        * g.dz()
}

/// `|Pi_0|_inf (1 + 1e-6) - |Pi(t)|_inf`.
pub fn check_max_principle(row: &MonitorRow, init: &MonitorRow) -> f64 {
    init.linf_pi * (1.0 + MAX_PRINCIPLE_SLACK) - row.linf_pi
}

/// Signed relative drift `(|Pi_0|_2 - |Pi(t)|_2) / |Pi_0|_2`; zero for zero data.
pub fn check_pi_l2(row: &MonitorRow, init: &MonitorRow) -> f64 {
    if init.l2_pi == 0.0 {
        return 0.0;
    }
    (init.l2_pi - row.l2_pi) / init.l2_pi
}

/// `|Gamma_0|_inf (1 + 1e-3) - |Gamma(t)|_inf`, only meaningful without
/// viscosity.
pub fn check_gamma_transport(row: &MonitorRow, init: &MonitorRow, mode: ViscosityMode) -> Option<f64> {
    (mode == ViscosityMode::None).then_some(init.linf_gamma * (1.0 + GAMMA_SLACK) - row.linf_gamma)
}

/// Right side `4 |Pi_0|_inf^2 |Pi_0|_2^2 max(1, 1/nu)` of the enstrophy bound.
pub fn enstrophy_rhs(init: &MonitorRow, nu: f64) -> f64 {
    let scale = if nu > 0.0 { (1.0 / nu).max(1.0) } else { f64::INFINITY };
    let p = 4.0 * init.linf_pi.powi(2) * init.l2_pi.powi(2);
    if p == 0.0 {
        0.0
    } else {
        p * scale
    }
}

/// Worst `lhs - rhs` over the series (rows with NaN flux are skipped). Returns
/// `-rhs` when no row has a flux yet.
pub fn check_enstrophy(rows: &[MonitorRow], init: &MonitorRow, nu: f64) -> f64 {
    let rhs = enstrophy_rhs(init, nu);
    rows.iter()
        .filter(|r| r.enstrophy_flux.is_finite())
        .map(|r| r.enstrophy_flux - rhs)
        .reduce(f64::max)
        .unwrap_or(-rhs)
}

/// Empirical swirl constant: `|u_r/r|_inf^2 / (|Omega|_2 |d_z Omega|_2)` with
/// viscosity, `|u_r/r|_inf / |Omega|_{L1 + Linf}` without. `0/0` is 0.
pub fn check_swirl_bound(row: &MonitorRow, mode: ViscosityMode) -> f64 {
    let (num, den) = match mode {
        ViscosityMode::None => (row.swirl_sup, row.l1_omega + row.linf_omega),
        _ => (row.swirl_sup.powi(2), row.l2_omega * row.dz_omega_sq.sqrt()),
    };
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Named slack values for one row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub max_principle: f64,
    pub pi_l2_drift: f64,
    pub gamma: Option<f64>,
    pub swirl_ratio: f64,
}

/// Stateful per-step evaluator: keeps the initial row and the previous one to
/// difference `|Omega|^2` in time.
#[derive(Debug, Clone)]
pub struct Monitor {
    mode: ViscosityMode,
    nu: f64,
    init: Option<MonitorRow>,
    prev: Option<MonitorRow>,
}

impl Monitor {
    pub fn new(cfg: &SolverConfig) -> Self {
        Self { mode: cfg.nu_mode, nu: cfg.effective_nu(), init: None, prev: None }
    }

    pub fn init(&self) -> Option<&MonitorRow> {
        self.init.as_ref()
    }

    /// Samples `state` and fills in the enstrophy flux from the previous row
    /// (time difference of `|Omega|^2` with trapezoidal dissipation).
    pub fn observe(&mut self, state: &State, vel: &VelocityField) -> MonitorRow {
        let mut row = MonitorRow::sample(state, vel);
        if let Some(prev) = &self.prev {
            let dt = row.t - prev.t;
            if dt > 0.0 {
                let de = (row.l2_omega.powi(2) - prev.l2_omega.powi(2)) / dt;
                let diss = 0.5 * (row.dissipation(self.mode, self.nu) + prev.dissipation(self.mode, self.nu));
                row.enstrophy_flux = de + diss;
            }
        }
        if self.init.is_none() {
            self.init = Some(row.clone());
        }
        self.prev = Some(row.clone());
        row
    }

    pub fn margins(&self, row: &MonitorRow) -> Margins {
        let init = self.init.as_ref().unwrap_or(row);
        Margins {
            max_principle: check_max_principle(row, init),
            pi_l2_drift: check_pi_l2(row, init),
            gamma: check_gamma_transport(row, init, self.mode),
            swirl_ratio: check_swirl_bound(row, self.mode),
        }
    }
}

/// Quantities that place initial data relative to the blow-up theorems.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoremReport {
    pub y0: f64,
    pub j0: f64,
    pub linf_pi0: f64,
    pub l2_pi0: f64,
    pub l1_pi0: f64,
    pub linf_omega0: f64,
    pub l2_omega0: f64,
    pub l1_omega0: f64,
    /// Viscous swirl constant measured on `Omega_0`, or on a unit Gaussian
    /// probe when `Omega_0 = 0`.
    pub swirl_constant_viscous: f64,
    /// Inviscid swirl constant `C_3`, measured the same way.
    pub swirl_constant_inviscid: f64,
    pub probe_used: bool,
    /// `|Omega_0|_{L1 + Linf} + |Pi_0|_{L1 + Linf}`.
    pub inviscid_size: f64,
    /// `4 (C_3 S)^(1/2)`: the inviscid threshold form for `y0`.
    pub inviscid_threshold: f64,
    pub t_riccati_lower: Option<f64>,
    pub t_star: Option<f64>,
    /// `J0 > 0` and `y0 > 0`.
    pub theorem_regime: bool,
}

pub fn empirical_theorem_constants(init: &State, cfg: &SolverConfig) -> crate::error::Result<TheoremReport> {
    let g = *init.grid();
    let (j0, y0) = measure_origin_data(&init.pi);
    let probe_used = init.omega.max_abs() == 0.0;
    let omega = if probe_used {
        ScalarField::from_fn(&g, Parity::Even, |r, z| (-(r * r) - z * z).exp())
    } else {
        init.omega.clone()
    };
    let stream = StreamSolver::new(&g).solve(&omega, cfg.elliptic_tol, cfg.elliptic_max_iter)?;
    let vel = velocity_from_stream(&stream);
    let probe = MonitorRow::sample(&State { omega, pi: init.pi.clone(), t: init.t }, &vel);
    let c_visc = check_swirl_bound(&probe, ViscosityMode::Full);
    let c_inv = check_swirl_bound(&probe, ViscosityMode::None);

    let linf_pi0 = norm(&init.pi, Norm::Linf);
    let l1_pi0 = norm(&init.pi, Norm::L1);
    let linf_omega0 = norm(&init.omega, Norm::Linf);
    let l1_omega0 = norm(&init.omega, Norm::L1);
    let size = linf_omega0 + l1_omega0 + linf_pi0 + l1_pi0;
    let positive = y0 > 0.0;
    Ok(TheoremReport {
        y0,
        j0,
        linf_pi0,
        l2_pi0: norm(&init.pi, Norm::L2),
        l1_pi0,
        linf_omega0,
        l2_omega0: norm(&init.omega, Norm::L2),
        l1_omega0,
        swirl_constant_viscous: c_visc,
        swirl_constant_inviscid: c_inv,
        probe_used,
        inviscid_size: size,
        inviscid_threshold: 4.0 * (c_inv * size).sqrt(),
        t_riccati_lower: positive.then(|| 2.0 / y0),
        t_star: positive.then(|| 4.0 / y0),
        theorem_regime: positive && j0 > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::zero_state;

    fn grid() -> Grid {
        Grid::new(33, 65, 4.0, 4.0).unwrap()
    }

    #[test]
    fn constant_pi_margins() {
        let g = grid();
        let s = State::new(ScalarField::zeros(&g, Parity::Even), ScalarField::constant(&g, Parity::Even, -2.0));
        let row = MonitorRow::sample(&s, &VelocityField::zeros(&g));
        assert!((check_max_principle(&row, &row) - 2e-6).abs() < 1e-15);
        assert_eq!(check_pi_l2(&row, &row), 0.0);
        assert_eq!(check_gamma_transport(&row, &row, ViscosityMode::Full), None);
    }

    #[test]
    fn zero_data_everything_zero() {
        let g = grid();
        let s = zero_state(&g);
        let mut m = Monitor::new(&SolverConfig { nu_mode: ViscosityMode::None, ..Default::default() });
        let r0 = m.observe(&s, &VelocityField::zeros(&g));
        let mut s1 = s.clone();
        s1.t = 0.1;
        let r1 = m.observe(&s1, &VelocityField::zeros(&g));
        assert_eq!(r1.enstrophy_flux, 0.0);
        let mg = m.margins(&r1);
        assert_eq!(mg.gamma, Some(0.0));
        assert_eq!(mg.swirl_ratio, 0.0);
        assert_eq!(check_enstrophy(&[r0, r1], m.init().unwrap(), 1.0), 0.0);

        let rep = empirical_theorem_constants(&s, &SolverConfig::default()).unwrap();
        assert_eq!((rep.y0, rep.j0), (0.0, 0.0));
        assert!(rep.t_star.is_none() && !rep.theorem_regime && rep.probe_used);
        assert!(rep.swirl_constant_viscous > 0.0 && rep.swirl_constant_viscous.is_finite());
    }

    #[test]
    fn gaussian_norms_and_gradient() {
        // |e^{-|x|^2}|_2^2 = (pi/2)^{3/2}; |grad|^2 = 3 (pi/2)^{3/2}
        let g = Grid::new(129, 257, 6.0, 6.0).unwrap();
        let om = ScalarField::from_fn(&g, Parity::Even, |r, z| (-(r * r) - z * z).exp());
        let s = State::new(om, ScalarField::zeros(&g, Parity::Even));
        let row = MonitorRow::sample(&s, &VelocityField::zeros(&g));
        let c = (PI / 2.0).powf(1.5);
        assert!((row.l2_omega.powi(2) / c - 1.0).abs() < 1e-4);
        assert!((row.grad_omega_sq / (3.0 * c) - 1.0).abs() < 1e-2);
        assert!((row.dz_omega_sq / c - 1.0).abs() < 1e-2);
        // 2 pi int e^{-2 z^2} dz = 2 pi sqrt(pi / 2)
        assert!((row.axis_omega_sq / (2.0 * PI * (PI / 2.0).sqrt()) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn swirl_ratio_stable_under_refinement() {
        let ratio = |n: usize| {
            let g = Grid::new(n, 2 * n - 1, 6.0, 6.0).unwrap();
            let om = ScalarField::from_fn(&g, Parity::Even, |r, z| (-(r * r) - z * z).exp());
            let s = State::new(om, ScalarField::zeros(&g, Parity::Even));
            let rep = empirical_theorem_constants(&s, &SolverConfig::default()).unwrap();
            (rep.swirl_constant_viscous, rep.swirl_constant_inviscid)
        };
        let (a, b) = ratio(65);
        let (c, d) = ratio(129);
        assert!(a.is_finite() && b.is_finite());
        assert!((a / c - 1.0).abs() < 0.02 && (b / d - 1.0).abs() < 0.02, "{a} {c} {b} {d}");
    }

    #[test]
    fn enstrophy_rhs_scaling() {
        let g = grid();
        let s = State::new(ScalarField::zeros(&g, Parity::Even), ScalarField::constant(&g, Parity::Even, 1.0));
        let row = MonitorRow::sample(&s, &VelocityField::zeros(&g));
        let base = 4.0 * row.l2_pi.powi(2);
        assert!((enstrophy_rhs(&row, 1.0) - base).abs() < 1e-9 * base);
        assert!((enstrophy_rhs(&row, 0.5) - 2.0 * base).abs() < 1e-9 * base);
        assert!((enstrophy_rhs(&row, 4.0) - base).abs() < 1e-9 * base);
    }
}
