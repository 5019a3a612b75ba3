//! Right-hand sides of the (Omega, Pi) system and the SSP-RK3 integrator.
//!
//! ```text
//! d_t Omega + (u_r d_r + u_z d_z) Omega + d_z(Pi^2) = nu D Omega
//! d_t Pi    + (u_r d_r + (u_z - 2 Pi) d_z) Pi       = 0
//! ```
//!
//! where `D` is the 5-D Laplacian (full viscosity), `d_zz` (z-only) or zero.

mod advection;
mod run;

pub use advection::{advect, hall_flux_z, Limiter};
pub use run::{run, RunOptions, RunRecord, StopReason};

use crate::elliptic::{StreamSolver, VelocityField, DEFAULT_TOL};
use crate::error::EllipticError;
use crate::grid::{d2_dz2, laplacian5, Grid, Parity, ScalarField};

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    /// `omega_theta / r`, even.
    pub omega: ScalarField,
    /// `b_theta / r`, even.
    pub pi: ScalarField,
    pub t: f64,
}

impl State {
    pub fn new(omega: ScalarField, pi: ScalarField) -> Self {
        debug_assert_eq!(omega.grid(), pi.grid());
        Self { omega, pi, t: 0.0 }
    }

    pub fn grid(&self) -> &Grid {
        self.omega.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.omega.is_finite() && self.pi.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViscosityMode {
    Full,
    /// Diffusion in z only.
    ZOnly,
    None,
}

impl ViscosityMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViscosityMode::Full => "full",
            ViscosityMode::ZOnly => "z_only",
            ViscosityMode::None => "none",
        }
    }
}

impl std::str::FromStr for ViscosityMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(ViscosityMode::Full),
            "z_only" => Ok(ViscosityMode::ZOnly),
            "none" => Ok(ViscosityMode::None),
            other => Err(format!("unknown nu_mode `{other}` (expected full, z_only or none)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub nu_mode: ViscosityMode,
    pub nu: f64,
    pub cfl: f64,
    pub t_end: f64,
    /// Stop once `max_z d_z Pi(t, 0, z)` reaches this value.
    pub gradient_stop: f64,
    pub limiter: Limiter,
    pub dt_max: f64,
    /// When false the velocity is held at zero and Omega does not feed back.
    pub couple_velocity: bool,
    pub elliptic_tol: f64,
    pub elliptic_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            nu_mode: ViscosityMode::Full,
            nu: 1.0,
            cfl: 0.5,
            t_end: 1.0,
            gradient_stop: 400.0,
            limiter: Limiter::Minmod,
            dt_max: 1e-2,
            couple_velocity: true,
            elliptic_tol: DEFAULT_TOL,
            elliptic_max_iter: 8,
        }
    }
}

impl SolverConfig {
    /// Viscosity actually applied (zero in inviscid mode regardless of `nu`).
    pub fn effective_nu(&self) -> f64 {
        match self.nu_mode {
            ViscosityMode::None => 0.0,
            _ => self.nu,
        }
    }
}

/// Floor applied to every speed maximum in [`stable_dt`].
const SPEED_FLOOR: f64 = 1e-30;

/// Time derivatives `(dOmega/dt, dPi/dt)`; zero on the outer boundary nodes.
pub fn rhs(state: &State, vel: &VelocityField, cfg: &SolverConfig) -> (ScalarField, ScalarField) {
    let g = *state.grid();
    let mut pi_speed = vel.u_z.clone();
    pi_speed.axpy(-2.0, &state.pi);

    let mut d_pi = advect(&state.pi, &vel.u_r, &pi_speed, cfg.limiter);
    d_pi.values_mut().iter_mut().for_each(|v| *v = -*v);

    let mut d_omega = advect(&state.omega, &vel.u_r, &vel.u_z, cfg.limiter);
    d_omega.axpy(1.0, &hall_flux_z(&state.pi, &pi_speed, cfg.limiter));
    d_omega.values_mut().iter_mut().for_each(|v| *v = -*v);

    let nu = cfg.effective_nu();
    if nu > 0.0 {
        let diffusion = match cfg.nu_mode {
            ViscosityMode::Full => laplacian5(&state.omega).expect("omega is even"),
            ViscosityMode::ZOnly => d2_dz2(&state.omega),
            ViscosityMode::None => unreachable!(),
        };
        d_omega.axpy(nu, &diffusion);
    }
    hold_boundary(&mut d_omega, &g);
    hold_boundary(&mut d_pi, &g);
    (d_omega, d_pi)
}

fn hold_boundary(f: &mut ScalarField, g: &Grid) {
    let (nr, nz) = (g.nr(), g.nz());
    for i in 0..nr {
        f.set(i, 0, 0.0);
        f.set(i, nz - 1, 0.0);
    }
    for j in 0..nz {
        f.set(nr - 1, j, 0.0);
    }
}

/// Advective limit `cfl / (max|u_z - 2 Pi| / dz + max|u_r| / dr)`, the explicit
/// diffusion limit when viscous, and `dt_max`.
pub fn stable_dt(state: &State, vel: &VelocityField, cfg: &SolverConfig) -> f64 {
    let g = state.grid();
    let az = vel
        .u_z
        .values()
        .iter()
        .zip(state.pi.values())
        .fold(0.0_f64, |m, (u, p)| m.max((u - 2.0 * p).abs()))
        .max(SPEED_FLOOR);
    let ar = vel.u_r.max_abs().max(SPEED_FLOOR);
    let mut dt = cfg.cfl / (az / g.dz() + ar / g.dr());
    let nu = cfg.effective_nu();
    if nu > 0.0 {
        let h2 = match cfg.nu_mode {
            ViscosityMode::Full => g.dr().min(g.dz()).powi(2),
            _ => g.dz().powi(2),
        };
        dt = dt.min(0.25 * h2 / nu);
    }
    dt.min(cfg.dt_max)
}

/// Owns the precomputed elliptic solver for one grid and advances states.
#[derive(Debug)]
pub struct Integrator {
    cfg: SolverConfig,
    solver: StreamSolver,
}

impl Integrator {
    pub fn new(grid: &Grid, cfg: SolverConfig) -> Self {
        Self { cfg, solver: StreamSolver::new(grid) }
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &Grid {
        self.solver.grid()
    }

    /// Velocity consistent with `omega`, or zero when decoupled.
    pub fn velocity(&self, omega: &ScalarField) -> Result<VelocityField, EllipticError> {
        if !self.cfg.couple_velocity {
            return Ok(VelocityField::zeros(omega.grid()));
        }
        let stream = self.solver.solve(omega, self.cfg.elliptic_tol, self.cfg.elliptic_max_iter)?;
        Ok(crate::elliptic::velocity_from_stream(&stream))
    }

    pub fn stable_dt(&self, state: &State, vel: &VelocityField) -> f64 {
        stable_dt(state, vel, &self.cfg)
    }

    /// One SSP-RK3 step of size `dt` from `state`, whose velocity is `vel`.
    /// Stages two and three re-solve the stream function.
    pub fn advance(&self, state: &State, vel: &VelocityField, dt: f64) -> Result<State, EllipticError> {
        let euler = |s: &State, v: &VelocityField| -> State {
            let (dw, dp) = rhs(s, v, &self.cfg);
            let mut omega = s.omega.clone();
            omega.axpy(dt, &dw);
            let mut pi = s.pi.clone();
            pi.axpy(dt, &dp);
            State { omega, pi, t: s.t + dt }
        };
        let blend = |a: &State, wa: f64, b: &State, wb: f64, t: f64| -> State {
            let mut omega = a.omega.scaled(wa);
            omega.axpy(wb, &b.omega);
            let mut pi = a.pi.scaled(wa);
            pi.axpy(wb, &b.pi);
            State { omega, pi, t }
        };

        let s1 = euler(state, vel);
        let v1 = self.stage_velocity(&s1)?;
        let s2 = blend(state, 0.75, &euler(&s1, &v1), 0.25, state.t + 0.5 * dt);
        let v2 = self.stage_velocity(&s2)?;
        let out = blend(state, 1.0 / 3.0, &euler(&s2, &v2), 2.0 / 3.0, state.t + dt);
        Ok(out)
    }

    fn stage_velocity(&self, s: &State) -> Result<VelocityField, EllipticError> {
        if !s.omega.is_finite() {
            // Let the caller see the divergence instead of an elliptic failure.
            return Ok(VelocityField::zeros(s.grid()));
        }
        self.velocity(&s.omega)
    }

    /// Solves for the velocity, picks `stable_dt` and advances once.
    pub fn step(&self, state: &State) -> Result<State, EllipticError> {
        let vel = self.velocity(&state.omega)?;
        let dt = self.stable_dt(state, &vel);
        self.advance(state, &vel, dt)
    }

    /// Advances until `t_target` exactly, clipping the last step.
    pub fn advance_to(&self, mut state: State, t_target: f64) -> Result<State, EllipticError> {
        while state.t < t_target && state.is_finite() {
            let vel = self.velocity(&state.omega)?;
            let dt = self.stable_dt(&state, &vel).min(t_target - state.t);
            state = self.advance(&state, &vel, dt)?;
            if t_target - state.t <= 1e-14 * t_target.abs().max(1.0) {
                state.t = t_target;
            }
        }
        Ok(state)
    }
}

/// Even fields for a fresh state on `grid`.
pub fn zero_state(grid: &Grid) -> State {
    State::new(ScalarField::zeros(grid, Parity::Even), ScalarField::zeros(grid, Parity::Even))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{norm, Norm};

    fn grid() -> Grid {
        Grid::new(17, 33, 2.0, 2.0).unwrap()
    }

    #[test]
    fn hall_term_vanishes_without_pi() {
        let g = grid();
        let omega = ScalarField::from_fn(&g, Parity::Even, |r, z| (-(r * r) - z * z).exp());
        let state = State::new(omega.clone(), ScalarField::zeros(&g, Parity::Even));
        let cfg = SolverConfig { nu_mode: ViscosityMode::None, nu: 0.0, ..Default::default() };
        let integ = Integrator::new(&g, cfg.clone());
        let vel = integ.velocity(&state.omega).unwrap();
        let (dw, dp) = rhs(&state, &vel, &cfg);
        assert_eq!(dp.max_abs(), 0.0);
        let mut expect = advect(&omega, &vel.u_r, &vel.u_z, cfg.limiter);
        expect.values_mut().iter_mut().for_each(|v| *v = -*v);
        hold_boundary(&mut expect, &g);
        assert_eq!(dw, expect);
    }

    #[test]
    fn constant_pi_is_steady() {
        let g = grid();
        let state = State::new(ScalarField::zeros(&g, Parity::Even), ScalarField::constant(&g, Parity::Even, 0.7));
        let integ = Integrator::new(&g, SolverConfig::default());
        let next = integ.step(&state).unwrap();
        assert!(next.t > 0.0);
        assert_eq!(next.omega.max_abs(), 0.0);
        assert!(next.pi.values().iter().all(|&v| (v - 0.7).abs() < 1e-15));
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = grid();
        let cfg = SolverConfig { nu_mode: ViscosityMode::None, ..Default::default() };
        let s = Integrator::new(&g, cfg).step(&zero_state(&g)).unwrap();
        assert_eq!(s.omega.max_abs() + s.pi.max_abs(), 0.0);
        assert_eq!(s.t, 1e-2);
    }

    #[test]
    fn pi_rhs_matches_burgers_flux() {
        // Omega = 0, velocity off: dPi = d_z(Pi^2) on each r-line.
        let g = Grid::new(9, 257, 1.0, 3.0).unwrap();
        let v0 = |z: f64| 1.0 + 0.5 * (z * 0.8).tanh();
        let chi = |r: f64| (-(r * r)).exp();
        let pi = ScalarField::from_fn(&g, Parity::Even, |r, z| v0(z) * chi(r));
        let state = State::new(ScalarField::zeros(&g, Parity::Even), pi);
        let cfg = SolverConfig { couple_velocity: false, limiter: Limiter::VanLeer, ..Default::default() };
        let (_, dp) = rhs(&state, &VelocityField::zeros(&g), &cfg);
        let mut worst = 0.0_f64;
        for i in 0..g.nr() - 1 {
            for j in 1..g.nz() - 1 {
                let z = g.z(j);
                let p = v0(z) * chi(g.r(i));
                let dpz = 0.5 * 0.8 / (0.8 * z).cosh().powi(2) * chi(g.r(i));
                worst = worst.max((dp.at(i, j) - 2.0 * p * dpz).abs());
            }
        }
        assert!(worst < 5e-3, "{worst}");
    }

    #[test]
    fn stable_dt_formulas() {
        let g = Grid::new(9, 21, 1.0, 1.0).unwrap(); // dz = 0.1
        let state = State::new(ScalarField::zeros(&g, Parity::Even), ScalarField::constant(&g, Parity::Even, -1.0));
        let vel = VelocityField::zeros(&g);
        let cfg = SolverConfig { nu_mode: ViscosityMode::None, nu: 0.0, dt_max: 1.0, ..Default::default() };
        assert!((stable_dt(&state, &vel, &cfg) - 0.025).abs() < 1e-15);

        let g = Grid::new(21, 41, 1.0, 1.0).unwrap(); // dr = dz = 0.05
        let z = zero_state(&g);
        let cfg = SolverConfig { nu: 1.0, dt_max: 1.0, ..Default::default() };
        assert!(stable_dt(&z, &VelocityField::zeros(&g), &cfg) <= 6.25e-4 + 1e-18);

        let cfg = SolverConfig { nu_mode: ViscosityMode::None, dt_max: 0.01, ..Default::default() };
        assert_eq!(stable_dt(&z, &VelocityField::zeros(&g), &cfg), 0.01);
    }

    #[test]
    fn max_principle_for_pi_on_short_run() {
        let g = Grid::new(33, 65, 3.0, 3.0).unwrap();
        let pi = ScalarField::from_fn(&g, Parity::Even, |r, z| {
            let s = (r * r + z * z) / 1.0;
            if s < 1.0 {
                (1.0 + 4.0 * z) * (1.0 - 1.0 / (1.0 - s)).exp()
            } else {
                0.0
            }
        });
        let p0 = pi.max_abs();
        let l2_0 = norm(&pi, Norm::L2);
        let mut state = State::new(ScalarField::zeros(&g, Parity::Even), pi);
        let integ = Integrator::new(&g, SolverConfig { t_end: 0.05, ..Default::default() });
        for _ in 0..20 {
            state = integ.step(&state).unwrap();
            assert!(state.pi.max_abs() <= p0 * (1.0 + 1e-6));
        }
        assert!(norm(&state.pi, Norm::L2) <= l2_0 * 1.001);
    }
}
