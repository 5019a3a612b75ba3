//! Exact characteristic solution of `d_t v - 2 v d_z v = 0`.
//!
//! Values are carried along `z(t) = z0 - 2 v0(z0) t`. Before the first crossing
//! the foot map `z0 -> z0 - 2 v0(z0) t` is strictly increasing, so the foot of
//! any point is found by bracketing plus safeguarded Newton.

use std::fmt;
use std::sync::Arc;

use crate::dynamics::{Integrator, SolverConfig, State, ViscosityMode};
use crate::error::{OracleError, Result};
use crate::grid::{Grid, Parity, ScalarField};

type Func = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial profile `v0` with its derivative.
#[derive(Clone)]
pub struct Profile1D {
    v0: Func,
    dv0: Func,
    pub z_domain: (f64, f64),
}

impl fmt::Debug for Profile1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile1D").field("z_domain", &self.z_domain).finish_non_exhaustive()
    }
}

impl Profile1D {
    pub fn analytic(
        v0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dv0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        z_domain: (f64, f64),
    ) -> Self {
        Self { v0: Arc::new(v0), dv0: Arc::new(dv0), z_domain }
    }

    /// `sin z` on `[-pi, pi]`.
    pub fn sine() -> Self {
        Self::analytic(f64::sin, f64::cos, (-std::f64::consts::PI, std::f64::consts::PI))
    }

    pub fn linear(j0: f64, y0: f64, z_domain: (f64, f64)) -> Self {
        Self::analytic(move |z| j0 + y0 * z, move |_| y0, z_domain)
    }

    /// Cubic (Catmull-Rom) interpolation of uniform samples on `z_domain`,
    /// held constant outside it.
    pub fn sampled(values: Vec<f64>, z_domain: (f64, f64)) -> Self {
        assert!(values.len() >= 4, "need at least four samples");
        let h = (z_domain.1 - z_domain.0) / (values.len() - 1) as f64;
        let vals = Arc::new(values);
        let (a, b) = (Arc::clone(&vals), vals);
        let z_lo = z_domain.0;
        Self {
            v0: Arc::new(move |z| catmull_rom(&a, z_lo, h, z).0),
            dv0: Arc::new(move |z| catmull_rom(&b, z_lo, h, z).1),
            z_domain,
        }
    }

    pub fn v0(&self, z: f64) -> f64 {
        (self.v0)(z)
    }

    pub fn dv0(&self, z: f64) -> f64 {
        (self.dv0)(z)
    }
}

/// Value and derivative of the Catmull-Rom spline through `v`.
fn catmull_rom(v: &[f64], z0: f64, h: f64, z: f64) -> (f64, f64) {
    let n = v.len();
    let x = (z - z0) / h;
    if x <= 0.0 {
        return (v[0], 0.0);
    }
    if x >= (n - 1) as f64 {
        return (v[n - 1], 0.0);
    }
    let k = (x.floor() as usize).min(n - 2);
    let s = x - k as f64;
    let p = |i: isize| v[i.clamp(0, n as isize - 1) as usize];
    let k = k as isize;
    let (p0, p1, p2, p3) = (p(k - 1), p(k), p(k + 1), p(k + 2));
    let m1 = 0.5 * (p2 - p0);
    let m2 = 0.5 * (p3 - p1);
    let (s2, s3) = (s * s, s * s * s);
    let val = (2.0 * s3 - 3.0 * s2 + 1.0) * p1 + (s3 - 2.0 * s2 + s) * m1 + (-2.0 * s3 + 3.0 * s2) * p2 + (s3 - s2) * m2;
    let der = (6.0 * s2 - 6.0 * s) * p1 + (3.0 * s2 - 4.0 * s + 1.0) * m1 + (-6.0 * s2 + 6.0 * s) * p2 + (3.0 * s2 - 2.0 * s) * m2;
    (val, der / h)
}

/// `1 / (2 sup v0')`, or infinity when `v0` never increases.
pub fn blowup_time(p: &Profile1D) -> f64 {
    const N: usize = 4096;
    let (a, b) = p.z_domain;
    let h = (b - a) / N as f64;
    let (mut best_z, mut best) = (a, f64::NEG_INFINITY);
    for k in 0..=N {
        let z = a + k as f64 * h;
        let d = p.dv0(z);
        if d > best {
            best = d;
            best_z = z;
        }
    }
    // golden-section refinement around the best sample
    let (mut lo, mut hi) = ((best_z - h).max(a), (best_z + h).min(b));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if p.dv0(x1) >= p.dv0(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best = best.max(p.dv0(0.5 * (lo + hi)));
    if best > 0.0 {
        0.5 / best
    } else {
        f64::INFINITY
    }
}

/// `v(t, z)` by inverting the foot map.
pub fn burgers_exact(p: &Profile1D, t: f64, z: f64) -> Result<f64, OracleError> {
    if t == 0.0 {
        return Ok(p.v0(z));
    }
    let blowup = blowup_time(p);
    if t >= blowup {
        return Err(OracleError::CharacteristicCrossing { t, blowup });
    }
    Ok(p.v0(foot(p, t, z)?))
}

/// Root `z0` of `z0 - 2 v0(z0) t - z`.
fn foot(p: &Profile1D, t: f64, z: f64) -> Result<f64, OracleError> {
    let map = |z0: f64| z0 - 2.0 * p.v0(z0) * t - z;
    let (mut lo, mut hi) = (z, z);
    let mut step = 1e-3 + 2.0 * t * p.v0(z).abs();
    let mut found = false;
    for _ in 0..200 {
        if map(lo) <= 0.0 && map(hi) >= 0.0 {
            found = true;
            break;
        }
        if map(lo) > 0.0 {
            lo -= step;
        }
        if map(hi) < 0.0 {
            hi += step;
        }
        step *= 2.0;
    }
    if !found {
        return Err(OracleError::NoBracket(z));
    }
    let tol = 1e-15 * (1.0 + z.abs());
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = map(x);
        if fx.abs() <= tol {
            break;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let d = 1.0 - 2.0 * p.dv0(x) * t;
        let newton = x - fx / d;
        x = if d > 0.0 && newton >= lo && newton <= hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            break;
        }
    }
    Ok(x)
}

/// `v0(z) exp(-r^2)`: each r-line is an independent copy of the 1-D problem
/// when the velocity is switched off.
pub fn fixture_state(p: &Profile1D, grid: &Grid) -> State {
    let pi = ScalarField::from_fn(grid, Parity::Even, |r, z| p.v0(z) * (-(r * r)).exp());
    State::new(ScalarField::zeros(grid, Parity::Even), pi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleRow {
    pub t: f64,
    pub linf: f64,
    /// Trapezoidal `(int |e|^2 dz)^(1/2)` on the axis line.
    pub l2: f64,
    /// `linf / max |v(t)|`.
    pub linf_rel: f64,
}

/// `cfg` with the velocity switched off. `Omega` no longer feeds back into
/// `Pi`, so its diffusion is dropped as well (it would only shrink the step).
pub fn decoupled(cfg: &SolverConfig) -> SolverConfig {
    SolverConfig { couple_velocity: false, nu_mode: ViscosityMode::None, ..cfg.clone() }
}

/// Axis errors of the decoupled 2-D run against [`burgers_exact`] at each
/// requested time (ascending).
pub fn compare_2d(p: &Profile1D, grid: &Grid, cfg: &SolverConfig, times: &[f64]) -> Result<Vec<OracleRow>> {
    let cfg = decoupled(cfg);
    let integ = Integrator::new(grid, cfg);
    let mut state = fixture_state(p, grid);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        state = integ.advance_to(state, t)?;
        out.push(axis_error(p, &state)?);
    }
    Ok(out)
}

pub fn axis_error(p: &Profile1D, state: &State) -> Result<OracleRow, OracleError> {
    let g = state.grid();
    let axis = state.pi.axis();
    let (mut linf, mut l2, mut vmax) = (0.0_f64, 0.0, 0.0_f64);
    for (j, &v) in axis.iter().enumerate() {
        let exact = burgers_exact(p, state.t, g.z(j))?;
        let e = (v - exact).abs();
        linf = linf.max(e);
        vmax = vmax.max(exact.abs());
        let w = if j == 0 || j == axis.len() - 1 { 0.5 } else { 1.0 };
        l2 += w * e * e * g.dz();
    }
    Ok(OracleRow { t: state.t, linf, l2: l2.sqrt(), linf_rel: if vmax > 0.0 { linf / vmax } else { linf } })
}

/// Errors at `t` on successively refined grids and their successive ratios.
pub fn refinement_study(p: &Profile1D, grids: &[Grid], cfg: &SolverConfig, t: f64) -> Result<(Vec<OracleRow>, Vec<f64>)> {
    let rows = grids
        .iter()
        .map(|g| compare_2d(p, g, cfg, &[t]).map(|r| r[0]))
        .collect::<Result<Vec<_>>>()?;
    let ratios = rows.windows(2).map(|w| w[0].linf / w[1].linf).collect();
    Ok((rows, ratios))
}
