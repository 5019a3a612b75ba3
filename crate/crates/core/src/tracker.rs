//! On-axis characteristic tracking and blow-up estimation.
//!
//! The characteristic `dphi/dt = (u_z - 2 Pi)(t, 0, phi)` is integrated with an
//! explicit midpoint step whose speed at the half step averages the axis rows
//! at the old and new time levels. Along it we record `f = d_z Pi`,
//! `g = u_r / r` and `Pi`. Differentiating the Pi equation in z on the axis and
//! using `d_z u_z = -2 d_r u_r` there gives `f' = 2 f^2 + 2 g f`, which is what
//! [`riccati_residual`] checks.

use crate::dynamics::State;
use crate::elliptic::VelocityField;
use crate::grid::{d_dz_line, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerSample {
    pub t: f64,
    /// z-position of the characteristic.
    pub phi: f64,
    /// `d_z Pi(t, 0, phi)`.
    pub f: f64,
    /// `(u_r / r)(t, 0, phi)`.
    pub g: f64,
    /// `Pi(t, 0, phi)`.
    pub pi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisTrajectory {
    pub samples: Vec<TrackerSample>,
    pub y0: f64,
    pub j0: f64,
    pub exited: bool,
}

/// The axis data the tracker needs from one time level.
#[derive(Debug, Clone)]
pub struct AxisRow {
    grid: Grid,
    speed: Vec<f64>,
    pi: Vec<f64>,
    dpi: Vec<f64>,
    swirl: Vec<f64>,
}

impl AxisRow {
    pub fn new(state: &State, vel: &VelocityField) -> Self {
        let grid = *state.grid();
        let pi = state.pi.axis().to_vec();
        let speed = vel.u_z.axis().iter().zip(&pi).map(|(u, p)| u - 2.0 * p).collect();
        let mut dpi = vec![0.0; pi.len()];
        d_dz_line(&pi, grid.dz(), &mut dpi);
        Self { grid, speed, pi, dpi, swirl: vel.swirl_ratio.axis().to_vec() }
    }

    /// Largest `d_z Pi` on the axis (central differences at interior nodes).
    pub fn max_gradient(&self) -> f64 {
        self.dpi[1..self.dpi.len() - 1].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn sample(&self, t: f64, phi: f64) -> TrackerSample {
        TrackerSample {
            t,
            phi,
            f: interp_cubic(&self.dpi, &self.grid, phi),
            g: interp_cubic(&self.swirl, &self.grid, phi),
            pi: interp_cubic(&self.pi, &self.grid, phi),
        }
    }

    fn speed_at(&self, z: f64) -> f64 {
        interp_cubic(&self.speed, &self.grid, z)
    }
}

/// Four-point Lagrange interpolation of a z-line, stencil clamped inside the
/// domain.
pub fn interp_cubic(line: &[f64], grid: &Grid, z: f64) -> f64 {
    let n = line.len();
    let x = (z + grid.z_half()) / grid.dz();
    let j = (x.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = x - j as f64;
    let (p0, p1, p2, p3) = (line[j - 1], line[j], line[j + 1], line[j + 2]);
    // nodes at s = -1, 0, 1, 2
    let l0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let l1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let l2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let l3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    p0 * l0 + p1 * l1 + p2 * l2 + p3 * l3
}

impl AxisTrajectory {
    /// Starts a characteristic at `z0` and records the first sample.
    pub fn seed(state: &State, vel: &VelocityField, z0: f64) -> Self {
        let row = AxisRow::new(state, vel);
        Self::seed_from_row(&row, state.t, z0)
    }

    pub fn seed_from_row(row: &AxisRow, t: f64, z0: f64) -> Self {
        let first = row.sample(t, z0);
        Self { samples: vec![first], y0: first.f, j0: first.pi, exited: false }
    }

    pub fn last(&self) -> &TrackerSample {
        self.samples.last().expect("seeded trajectories are nonempty")
    }

    /// Moves the characteristic from the `old` time level to `new` (`dt` apart)
    /// and records a sample from `new`. Marks the trajectory exited instead if
    /// it would leave the domain.
    pub fn advance(&mut self, old: &AxisRow, new: &AxisRow, new_t: f64, dt: f64) {
        if self.exited {
            return;
        }
        let phi = self.last().phi;
        let mid = phi + 0.5 * dt * old.speed_at(phi);
        let speed_mid = 0.5 * (old.speed_at(mid) + new.speed_at(mid));
        let next = phi + dt * speed_mid;
        let zh = old.grid.z_half();
        if !next.is_finite() || next <= -zh || next >= zh {
            self.exited = true;
            return;
        }
        self.samples.push(new.sample(new_t, next));
    }

    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }
}

/// Convenience form taking full states; see [`AxisTrajectory::advance`].
pub fn advance_tracker(
    traj: &mut AxisTrajectory,
    old: (&State, &VelocityField),
    new: (&State, &VelocityField),
    dt: f64,
) {
    let old_row = AxisRow::new(old.0, old.1);
    let new_row = AxisRow::new(new.0, new.1);
    traj.advance(&old_row, &new_row, new.0.t, dt);
}

/// Centered `df/dt - (2 f^2 + 2 g f)` at interior samples, normalized by
/// `max(1, f^2)`. The first and last entries are NaN.
pub fn riccati_residual(traj: &AxisTrajectory) -> Vec<f64> {
    let s = &traj.samples;
    let n = s.len();
    let mut out = vec![f64::NAN; n];
    for k in 1..n.saturating_sub(1) {
        let (a, b, c) = (&s[k - 1], &s[k], &s[k + 1]);
        let h1 = b.t - a.t;
        let h2 = c.t - b.t;
        if h1 <= 0.0 || h2 <= 0.0 {
            continue;
        }
        // Second-order derivative on a nonuniform three-point stencil.
        let dfdt = -h2 / (h1 * (h1 + h2)) * a.f + (h2 - h1) / (h1 * h2) * b.f + h1 / (h2 * (h1 + h2)) * c.f;
        let model = 2.0 * b.f * b.f + 2.0 * b.g * b.f;
        out[k] = (dfdt - model) / (b.f * b.f).max(1.0);
    }
    out
}

/// `f(t) - f(0) - int f^2 + int swirl_sup^2` by the trapezoid rule, one entry
/// per sample. `swirl_sup[k]` is `|u_r/r|_inf` at the time of sample `k`.
pub fn integral_inequality_check(traj: &AxisTrajectory, swirl_sup: &[f64]) -> Vec<f64> {
    let s = &traj.samples;
    let n = s.len().min(swirl_sup.len());
    let mut out = Vec::with_capacity(n);
    let mut int_f2 = 0.0;
    let mut int_w2 = 0.0;
    for k in 0..n {
        if k > 0 {
            let h = s[k].t - s[k - 1].t;
            int_f2 += 0.5 * h * (s[k].f.powi(2) + s[k - 1].f.powi(2));
            int_w2 += 0.5 * h * (swirl_sup[k].powi(2) + swirl_sup[k - 1].powi(2));
        }
        out.push(s[k].f - s[0].f - int_f2 + int_w2);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupPrediction {
    /// `2 / y0`: blow-up time of the lower-bound function.
    pub t_riccati_lower: f64,
    /// `4 / y0`: the horizon within which blow-up is guaranteed.
    pub t_theorem_cap: f64,
    /// Root of the least-squares line through `(t, 1/f)`; `None` when no
    /// blow-up was detected in the horizon.
    pub t_extrapolated: Option<f64>,
    /// Coefficient of determination of that fit.
    pub fit_quality: Option<f64>,
    pub fit_samples: usize,
}

impl BlowupPrediction {
    pub fn detected(&self) -> bool {
        self.t_extrapolated.is_some()
    }
}

/// Fit window: the last 30% of the samples, restricted to those with
/// `f >= 5 y0`. Requires at least three such samples with `f` increasing.
pub fn predict_blowup(traj: &AxisTrajectory) -> BlowupPrediction {
    let y0 = traj.y0;
    let (lower, cap) = if y0 > 0.0 { (2.0 / y0, 4.0 / y0) } else { (f64::INFINITY, f64::INFINITY) };
    let none = BlowupPrediction {
        t_riccati_lower: lower,
        t_theorem_cap: cap,
        t_extrapolated: None,
        fit_quality: None,
        fit_samples: 0,
    };
    if !(y0 > 0.0) {
        return none;
    }
    let n = traj.samples.len();
    let start = (0.7 * n as f64).floor() as usize;
    let window: Vec<&TrackerSample> = traj.samples[start..].iter().filter(|s| s.f >= 5.0 * y0).collect();
    if window.len() < 3 || window.windows(2).any(|w| w[1].f <= w[0].f) {
        return none;
    }
    let m = window.len() as f64;
    let (st, sy) = window.iter().fold((0.0, 0.0), |(a, b), s| (a + s.t, b + 1.0 / s.f));
    let (tm, ym) = (st / m, sy / m);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for s in &window {
        let dx = s.t - tm;
        let dy = 1.0 / s.f - ym;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx <= 0.0 {
        return none;
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return none;
    }
    let intercept = ym - slope * tm;
    let ss_res = syy - slope * sxy;
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    BlowupPrediction {
        t_extrapolated: Some(-intercept / slope),
        fit_quality: Some(r2),
        fit_samples: window.len(),
        ..none
    }
}

/// `max_t |Pi(t, 0, phi(t)) - J0|`.
pub fn pi_conservation_check(traj: &AxisTrajectory) -> f64 {
    traj.samples.iter().fold(0.0_f64, |m, s| m.max((s.pi - traj.j0).abs()))
}
