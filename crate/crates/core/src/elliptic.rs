//! Stream-function solve `-(d_rr + (3/r) d_r + d_zz) phi = Omega` and velocity
//! recovery.
//!
//! The discrete operator is exactly [`laplacian5`] on the unknown nodes
//! (`i < nr - 1`, `0 < j < nz - 1`), with `phi = 0` on `r = r_max` and
//! `z = +-z_half`. Its z-part has constant coefficients and Dirichlet ends, so a
//! type-I discrete sine transform diagonalizes it; what remains is one
//! tridiagonal system in r per sine mode. Each solve is followed by an
//! independent residual check with [`laplacian5`], and by iterative refinement
//! when the check fails.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::EllipticError;
use crate::grid::{d_dr, d_dz, laplacian5, Grid, Parity, ScalarField};

#[derive(Debug, Clone)]
pub struct StreamField {
    pub phi: ScalarField,
    pub residual_linf: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct VelocityField {
    /// Odd in r, exactly zero on the axis.
    pub u_r: ScalarField,
    pub u_z: ScalarField,
    /// `u_r / r`, computed as `-d_z phi` so the axis value needs no division.
    pub swirl_ratio: ScalarField,
}

impl VelocityField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            u_r: ScalarField::zeros(grid, Parity::Odd),
            u_z: ScalarField::zeros(grid, Parity::Even),
            swirl_ratio: ScalarField::zeros(grid, Parity::Even),
        }
    }
}

/// Default relative residual target.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Precomputed transform plan and per-mode LU factors for one grid.
pub struct StreamSolver {
    grid: Grid,
    fft: Arc<dyn Fft<f64>>,
    /// Interior z-node count `nz - 2`.
    modes: usize,
    /// Radial unknowns `nr - 1`.
    rows: usize,
    sup: Vec<f64>,
    /// `modes x rows`: reciprocal pivots of the Thomas elimination per mode.
    inv_pivot: Vec<f64>,
    /// `modes x rows`: eliminated sub-diagonal multipliers.
    mult: Vec<f64>,
}

impl std::fmt::Debug for StreamSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StreamSolver").field("grid", &self.grid).finish_non_exhaustive()
    }
}

impl StreamSolver {
    pub fn new(grid: &Grid) -> Self {
        let modes = grid.nz() - 2;
        let rows = grid.nr() - 1;
        let fft = FftPlanner::new().plan_fft_forward(2 * (modes + 1));
        let idr2 = 1.0 / (grid.dr() * grid.dr());

        // Radial part of laplacian5 restricted to the unknowns, as a tridiagonal
        // (sub, diag, sup); the Dirichlet node nr-1 drops out.
        let mut sub = vec![0.0; rows];
        let mut diag = vec![0.0; rows];
        let mut sup = vec![0.0; rows];
        diag[0] = -8.0 * idr2;
        sup[0] = 8.0 * idr2;
        for i in 1..rows {
            let c = 1.5 / i as f64;
            sub[i] = (1.0 - c) * idr2;
            diag[i] = -2.0 * idr2;
            sup[i] = (1.0 + c) * idr2;
        }

        let idz2 = 1.0 / (grid.dz() * grid.dz());
        let mut inv_pivot = vec![0.0; modes * rows];
        let mut mult = vec![0.0; modes * rows];
        for k in 0..modes {
            let theta = std::f64::consts::PI * (k + 1) as f64 / (modes + 1) as f64;
            let lambda = (2.0 - 2.0 * theta.cos()) * idz2;
            let ip = &mut inv_pivot[k * rows..(k + 1) * rows];
            let m = &mut mult[k * rows..(k + 1) * rows];
            let mut piv = diag[0] - lambda;
            ip[0] = 1.0 / piv;
            for i in 1..rows {
                m[i] = sub[i] / piv;
                piv = diag[i] - lambda - m[i] * sup[i - 1];
                ip[i] = 1.0 / piv;
            }
        }

        Self { grid: *grid, fft, modes, rows, sup, inv_pivot, mult }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Solves `-laplacian5(phi) = omega` to `tol * max(1, |omega|_inf)` in the
    /// max norm, using at most `max_iter` direct solves (the first plus
    /// refinement passes).
    pub fn solve(&self, omega: &ScalarField, tol: f64, max_iter: usize) -> Result<StreamField, EllipticError> {
        if omega.parity() != Parity::Even {
            return Err(crate::error::GridError::OddParity.into());
        }
        if !omega.is_finite() {
            return Err(EllipticError::NonFinite);
        }
        let target = tol * omega.max_abs().max(1.0);
        let mut phi = ScalarField::zeros(&self.grid, Parity::Even);
        let mut rhs = omega.clone();
        let mut best: Option<StreamField> = None;
        for it in 1..=max_iter.max(1) {
            let correction = self.direct(&rhs);
            phi.axpy(1.0, &correction);
            let residual = self.residual_into(&phi, omega, &mut rhs);
            let better = best.as_ref().is_none_or(|b| residual < b.residual_linf);
            if better {
                best = Some(StreamField { phi: phi.clone(), residual_linf: residual, iterations: it });
            }
            if residual <= target {
                return Ok(best.expect("set above"));
            }
        }
        let best = best.expect("at least one pass");
        Err(EllipticError::NotConverged {
            tol: target,
            residual: best.residual_linf,
            iterations: max_iter.max(1),
            best: Box::new(best),
        })
    }

    /// Writes `omega + laplacian5(phi)` on unknown nodes into `out` (zero on
    /// Dirichlet nodes) and returns its max norm.
    fn residual_into(&self, phi: &ScalarField, omega: &ScalarField, out: &mut ScalarField) -> f64 {
        let lap = laplacian5(phi).expect("phi is even");
        let (nr, nz) = (self.grid.nr(), self.grid.nz());
        let mut worst = 0.0_f64;
        for i in 0..nr {
            for j in 0..nz {
                let v = if i == nr - 1 || j == 0 || j == nz - 1 {
                    0.0
                } else {
                    omega.at(i, j) + lap.at(i, j)
                };
                worst = worst.max(v.abs());
                out.set(i, j, v);
            }
        }
        worst
    }

    /// One direct solve of the discrete system with right-hand side `omega`.
    fn direct(&self, omega: &ScalarField) -> ScalarField {
        let (nz, m, rows) = (self.grid.nz(), self.modes, self.rows);
        // Forward sine transform of every unknown row: hat[i * m + k].
        let mut hat = vec![0.0; rows * m];
        let src = omega.values();
        hat.par_chunks_mut(2 * m).enumerate().for_each(|(p, out)| {
            let i0 = 2 * p;
            let a = &src[i0 * nz + 1..i0 * nz + 1 + m];
            let b = if out.len() == 2 * m { Some(&src[(i0 + 1) * nz + 1..(i0 + 1) * nz + 1 + m]) } else { None };
            let (oa, ob) = out.split_at_mut(m);
            self.dst_pair(a, b, oa, ob);
        });

        // Tridiagonal solve per mode, in mode-major scratch.
        let mut sol = vec![0.0; m * rows];
        sol.par_chunks_mut(rows).enumerate().for_each(|(k, x)| {
            let ip = &self.inv_pivot[k * rows..(k + 1) * rows];
            let mu = &self.mult[k * rows..(k + 1) * rows];
            // (L_r - lambda_k) x = -hat
            x[0] = -hat[k];
            for i in 1..rows {
                x[i] = -hat[i * m + k] - mu[i] * x[i - 1];
            }
            x[rows - 1] *= ip[rows - 1];
            for i in (0..rows - 1).rev() {
                x[i] = (x[i] - self.sup[i] * x[i + 1]) * ip[i];
            }
        });

        // Back to physical space: inverse DST-I is DST-I scaled by 2/(m+1).
        let scale = 2.0 / (m + 1) as f64;
        let mut phi = ScalarField::zeros(&self.grid, Parity::Even);
        let out = phi.values_mut();
        out[..rows * nz].par_chunks_mut(2 * nz).enumerate().for_each(|(p, dst)| {
            let i0 = 2 * p;
            let mut a = vec![0.0; m];
            let mut b = vec![0.0; m];
            for k in 0..m {
                a[k] = sol[k * rows + i0];
            }
            let two = dst.len() == 2 * nz;
            if two {
                for k in 0..m {
                    b[k] = sol[k * rows + i0 + 1];
                }
            }
            let mut xa = vec![0.0; m];
            let mut xb = vec![0.0; m];
            self.dst_pair(&a, if two { Some(&b) } else { None }, &mut xa, &mut xb);
            for k in 0..m {
                dst[1 + k] = scale * xa[k];
            }
            if two {
                for k in 0..m {
                    dst[nz + 1 + k] = scale * xb[k];
                }
            }
        });
        phi
    }

    /// DST-I of one or two real sequences with a single complex FFT of the
    /// odd extensions packed as `a + i b`.
    fn dst_pair(&self, a: &[f64], b: Option<&[f64]>, out_a: &mut [f64], out_b: &mut [f64]) {
        let m = self.modes;
        let n = 2 * (m + 1);
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for k in 0..m {
            let im = b.map_or(0.0, |b| b[k]);
            buf[k + 1] = Complex::new(a[k], im);
            buf[n - 1 - k] = Complex::new(-a[k], -im);
        }
        self.fft.process(&mut buf);
        // FFT(odd ext of x) = -2i X, so a -> -Im/2 and b -> Re/2.
        for k in 0..m {
            let y = buf[k + 1];
            out_a[k] = -0.5 * y.im;
            if b.is_some() {
                out_b[k] = 0.5 * y.re;
            }
        }
    }
}

/// One-shot convenience wrapper around [`StreamSolver`].
pub fn solve_stream(omega: &ScalarField, tol: f64, max_iter: usize) -> Result<StreamField, EllipticError> {
    StreamSolver::new(omega.grid()).solve(omega, tol, max_iter)
}

/// `u_r = -r d_z phi`, `u_z = 2 phi + r d_r phi`, `u_r / r = -d_z phi`.
pub fn velocity_from_stream(stream: &StreamField) -> VelocityField {
    velocity_from_phi(&stream.phi)
}

pub fn velocity_from_phi(phi: &ScalarField) -> VelocityField {
    let g = *phi.grid();
    let dz = d_dz(phi);
    let dr = d_dr(phi);
    let mut u_r = ScalarField::zeros(&g, Parity::Odd);
    let mut u_z = ScalarField::zeros(&g, Parity::Even);
    let mut swirl = ScalarField::zeros(&g, Parity::Even);
    for i in 0..g.nr() {
        let r = g.r(i);
        for j in 0..g.nz() {
            let pz = dz.at(i, j);
            u_r.set(i, j, -r * pz);
            u_z.set(i, j, 2.0 * phi.at(i, j) + r * dr.at(i, j));
            swirl.set(i, j, -pz);
        }
    }
    u_r.enforce_parity();
    VelocityField { u_r, u_z, swirl_ratio: swirl }
}

/// Max norm of `d_r u_r + u_r/r + d_z u_z` over nodes off the outer boundary.
pub fn check_divergence(vel: &VelocityField) -> f64 {
    let g = *vel.u_r.grid();
    let dur = d_dr(&vel.u_r);
    let duz = d_dz(&vel.u_z);
    let mut worst = 0.0_f64;
    for i in 0..g.nr() - 1 {
        for j in 1..g.nz() - 1 {
            let d = dur.at(i, j) + vel.swirl_ratio.at(i, j) + duz.at(i, j);
            worst = worst.max(d.abs());
        }
    }
    worst
}
