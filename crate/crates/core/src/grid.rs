//! Uniform (r, z) mesh on `[0, r_max] x [-z_half, z_half]` and the discrete
//! calculus used by every other module.
//!
//! Fields are stored row-major with one row per radial node, so `values[i * nz + j]`
//! is the value at `(r_i, z_j)` and each row is a contiguous z-line. The axis
//! `r = 0` is handled with a single parity ghost: `f(-dr) = +f(dr)` for even
//! fields and `-f(dr)` for odd ones.

use std::f64::consts::PI;

use crate::error::GridError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nr: usize,
    nz: usize,
    r_max: f64,
    z_half: f64,
    dr: f64,
    dz: f64,
}

impl Grid {
    pub fn new(nr: usize, nz: usize, r_max: f64, z_half: f64) -> Result<Self, GridError> {
        if nr < 8 {
            return Err(GridError::TooFewRadialNodes(nr));
        }
        if nz < 9 || nz.is_multiple_of(2) {
            return Err(GridError::BadAxialNodes(nz));
        }
        if !(r_max > 0.0) {
            return Err(GridError::NonPositiveExtent { name: "r_max", value: r_max });
        }
        if !(z_half > 0.0) {
            return Err(GridError::NonPositiveExtent { name: "z_half", value: z_half });
        }
        Ok(Self {
            nr,
            nz,
            r_max,
            z_half,
            dr: r_max / (nr - 1) as f64,
            dz: 2.0 * z_half / (nz - 1) as f64,
        })
    }

    pub fn nr(&self) -> usize {
        self.nr
    }
    pub fn nz(&self) -> usize {
        self.nz
    }
    pub fn r_max(&self) -> f64 {
        self.r_max
    }
    pub fn z_half(&self) -> f64 {
        self.z_half
    }
    pub fn dr(&self) -> f64 {
        self.dr
    }
    pub fn dz(&self) -> f64 {
        self.dz
    }
    pub fn len(&self) -> usize {
        self.nr * self.nz
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.nz + j
    }

    #[inline]
    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    #[inline]
    pub fn z(&self, j: usize) -> f64 {
        // Symmetric about the midpoint so that z(mid) is exactly 0.
        let mid = self.mid_z();
        if j >= mid {
            (j - mid) as f64 * self.dz
        } else {
            -((mid - j) as f64 * self.dz)
        }
    }

    /// Index of the `z = 0` node.
    pub fn mid_z(&self) -> usize {
        (self.nz - 1) / 2
    }

    /// Same extents, spacing halved in both directions.
    pub fn refined(&self) -> Self {
        Self::new(2 * self.nr - 1, 2 * self.nz - 1, self.r_max, self.z_half)
            .expect("refinement of a valid grid is valid")
    }

    /// Same extents, spacing doubled; `None` when the node counts do not allow it.
    pub fn coarsened(&self) -> Option<Self> {
        if !(self.nr - 1).is_multiple_of(2) || !(self.nz - 1).is_multiple_of(2) {
            return None;
        }
        Self::new((self.nr - 1) / 2 + 1, (self.nz - 1) / 2 + 1, self.r_max, self.z_half).ok()
    }
}

/// Behavior of a field under `r -> -r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }

    #[inline]
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
    parity: Parity,
}

impl ScalarField {
    pub fn zeros(grid: &Grid, parity: Parity) -> Self {
        Self { grid: *grid, values: vec![0.0; grid.len()], parity }
    }

    pub fn constant(grid: &Grid, parity: Parity, c: f64) -> Self {
        let mut f = Self { grid: *grid, values: vec![c; grid.len()], parity };
        f.enforce_parity();
        f
    }

    /// Samples `f(r, z)` at every node. Odd fields get an exact zero on the axis.
    pub fn from_fn(grid: &Grid, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nr {
            let r = grid.r(i);
            for j in 0..grid.nz {
                values.push(f(r, grid.z(j)));
            }
        }
        let mut out = Self { grid: *grid, values, parity };
        out.enforce_parity();
        out
    }

    pub fn from_values(grid: &Grid, parity: Parity, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::ShapeMismatch { expected: grid.len(), got: values.len() });
        }
        let mut out = Self { grid: *grid, values, parity };
        out.enforce_parity();
        Ok(out)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn parity(&self) -> Parity {
        self.parity
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.nz + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let nz = self.grid.nz;
        self.values[i * nz + j] = v;
    }

    /// The z-line at radial index `i`.
    pub fn row(&self, i: usize) -> &[f64] {
        let nz = self.grid.nz;
        &self.values[i * nz..(i + 1) * nz]
    }

    pub fn axis(&self) -> &[f64] {
        self.row(0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn enforce_parity(&mut self) {
        if self.parity == Parity::Odd {
            let nz = self.grid.nz;
            self.values[..nz].iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// `self + a * other`, elementwise.
    pub fn axpy(&mut self, a: f64, other: &ScalarField) {
        debug_assert_eq!(self.grid, other.grid);
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn debug_check_parity(&self) {
        if cfg!(debug_assertions) && self.parity == Parity::Odd {
            debug_assert!(self.axis().iter().all(|&v| v == 0.0), "odd field nonzero on axis");
        }
    }
}

/// Which norm to take; all are over R^3 with measure `2 pi r dr dz`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

/// Second-order central difference in r with the parity ghost on the axis and a
/// one-sided stencil at `r_max`. The result has the opposite parity.
pub fn d_dr(f: &ScalarField) -> ScalarField {
    f.debug_check_parity();
    let g = f.grid;
    let (nr, nz) = (g.nr, g.nz);
    let inv2h = 0.5 / g.dr;
    let mut out = ScalarField::zeros(&g, f.parity.flip());
    let v = &f.values;
    let o = &mut out.values;
    // Axis: (f(dr) - f(-dr)) / 2dr with f(-dr) = sign * f(dr).
    if f.parity == Parity::Odd {
        for j in 0..nz {
            o[j] = 2.0 * v[nz + j] * inv2h;
        }
    }
    for i in 1..nr - 1 {
        for j in 0..nz {
            o[i * nz + j] = (v[(i + 1) * nz + j] - v[(i - 1) * nz + j]) * inv2h;
        }
    }
    let i = nr - 1;
    for j in 0..nz {
        o[i * nz + j] = (3.0 * v[i * nz + j] - 4.0 * v[(i - 1) * nz + j] + v[(i - 2) * nz + j]) * inv2h;
    }
    out
}

/// Second-order central difference in z, one-sided at both z-boundaries.
pub fn d_dz(f: &ScalarField) -> ScalarField {
    f.debug_check_parity();
    let g = f.grid;
    let mut out = ScalarField::zeros(&g, f.parity);
    for i in 0..g.nr {
        let nz = g.nz;
        d_dz_line(&f.values[i * nz..(i + 1) * nz], g.dz, &mut out.values[i * nz..(i + 1) * nz]);
    }
    out
}

pub(crate) fn d_dz_line(line: &[f64], dz: f64, out: &mut [f64]) {
    let n = line.len();
    let inv2h = 0.5 / dz;
    out[0] = (-3.0 * line[0] + 4.0 * line[1] - line[2]) * inv2h;
    for j in 1..n - 1 {
        out[j] = (line[j + 1] - line[j - 1]) * inv2h;
    }
    out[n - 1] = (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]) * inv2h;
}

/// Compact second difference in z (one-sided four-point stencil at the ends).
pub fn d2_dz2(f: &ScalarField) -> ScalarField {
    let g = f.grid;
    let nz = g.nz;
    let inv = 1.0 / (g.dz * g.dz);
    let mut out = ScalarField::zeros(&g, f.parity);
    for i in 0..g.nr {
        let l = &f.values[i * nz..(i + 1) * nz];
        let o = &mut out.values[i * nz..(i + 1) * nz];
        o[0] = (2.0 * l[0] - 5.0 * l[1] + 4.0 * l[2] - l[3]) * inv;
        for j in 1..nz - 1 {
            o[j] = (l[j + 1] - 2.0 * l[j] + l[j - 1]) * inv;
        }
        o[nz - 1] = (2.0 * l[nz - 1] - 5.0 * l[nz - 2] + 4.0 * l[nz - 3] - l[nz - 4]) * inv;
    }
    out.enforce_parity();
    out
}

/// The 5-D radial Laplacian `d_rr + (3/r) d_r + d_zz` of an even field.
///
/// On the axis the radial part is `4 d_rr f`, the limit of `d_rr + (3/r) d_r`
/// for even functions, which with the ghost `f(-dr) = f(dr)` is
/// `8 (f_1 - f_0) / dr^2`.
pub fn laplacian5(f: &ScalarField) -> Result<ScalarField, GridError> {
    if f.parity != Parity::Even {
        return Err(GridError::OddParity);
    }
    let g = f.grid;
    let (nr, nz) = (g.nr, g.nz);
    let idr2 = 1.0 / (g.dr * g.dr);
    let mut out = d2_dz2(f);
    let v = &f.values;
    let o = &mut out.values;
    for j in 0..nz {
        o[j] += 8.0 * (v[nz + j] - v[j]) * idr2;
    }
    for i in 1..nr - 1 {
        let c = 1.5 / i as f64; // (3 / r_i) * dr / 2
        for j in 0..nz {
            let fm = v[(i - 1) * nz + j];
            let f0 = v[i * nz + j];
            let fp = v[(i + 1) * nz + j];
            o[i * nz + j] += (fp - 2.0 * f0 + fm + c * (fp - fm)) * idr2;
        }
    }
    let i = nr - 1;
    let r = g.r(i);
    for j in 0..nz {
        let f0 = v[i * nz + j];
        let f1 = v[(i - 1) * nz + j];
        let f2 = v[(i - 2) * nz + j];
        let f3 = v[(i - 3) * nz + j];
        let d2 = (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) * idr2;
        let d1 = (3.0 * f0 - 4.0 * f1 + f2) / (2.0 * g.dr);
        o[i * nz + j] += d2 + 3.0 / r * d1;
    }
    Ok(out)
}

/// Radial quadrature weight for node `i` (the `2 pi r` factor included).
///
/// Trapezoid rule for the integrand `r f(r)` with the Euler-Maclaurin end
/// corrections: exact slope `f(0)` at the axis, one-sided slope at `r_max`.
#[inline]
pub(crate) fn radial_weight(g: &Grid, i: usize) -> f64 {
    let h = g.dr;
    let w = match i {
        0 => return 2.0 * PI * h * h / 12.0,
        i if i == g.nr - 1 => h * (0.5 - 1.0 / 12.0),
        i if i == g.nr - 2 => h * (1.0 + 1.0 / 12.0),
        _ => h,
    };
    2.0 * PI * g.r(i) * w
}

#[inline]
pub(crate) fn axial_weight(g: &Grid, j: usize) -> f64 {
    if j == 0 || j == g.nz - 1 {
        0.5 * g.dz
    } else {
        g.dz
    }
}

/// Integral over R^3 of `h(value)` with product-trapezoid weights, summed in a
/// fixed order.
pub(crate) fn integrate(f: &ScalarField, h: impl Fn(f64) -> f64) -> f64 {
    let g = &f.grid;
    let mut total = 0.0;
    for i in 0..g.nr {
        let wr = radial_weight(g, i);
        let row = f.row(i);
        let mut s = 0.0;
        for (j, &v) in row.iter().enumerate() {
            s += axial_weight(g, j) * h(v);
        }
        total += wr * s;
    }
    total
}

pub fn norm(f: &ScalarField, which: Norm) -> f64 {
    match which {
        Norm::Linf => f.max_abs(),
        Norm::L1 => integrate(f, f64::abs),
        Norm::L2 => integrate(f, |v| v * v).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn max_err(a: &ScalarField, exact: impl Fn(f64, f64) -> f64, skip_boundary: bool) -> f64 {
        let g = a.grid();
        let mut e = 0.0_f64;
        for i in 0..g.nr() {
            for j in 0..g.nz() {
                if skip_boundary && (i == g.nr() - 1 || j == 0 || j == g.nz() - 1) {
                    continue;
                }
                e = e.max((a.at(i, j) - exact(g.r(i), g.z(j))).abs());
            }
        }
        e
    }

    #[test]
    fn grid_spacings() {
        let g = Grid::new(9, 9, 1.0, 1.0).unwrap();
        assert_eq!(g.dr(), 0.125);
        assert_eq!(g.dz(), 0.25);
        let g = Grid::new(257, 513, 4.0, 8.0).unwrap();
        assert_eq!(g.dr(), 0.015625);
        assert_eq!(g.dz(), 0.03125);
        assert_eq!(g.z(g.mid_z()), 0.0);
        assert_eq!(g.z(0), -8.0);
        assert_eq!(g.z(512), 8.0);
        assert_eq!(g.r(0), 0.0);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(Grid::new(8, 8, 1.0, 1.0), Err(GridError::BadAxialNodes(8))));
        assert!(Grid::new(7, 9, 1.0, 1.0).is_err());
        assert!(Grid::new(9, 9, 0.0, 1.0).is_err());
        assert!(Grid::new(9, 9, 1.0, -1.0).is_err());
    }

    #[test]
    fn derivatives_of_simple_fields() {
        let g = Grid::new(17, 17, 1.0, 1.0).unwrap();
        let r2 = ScalarField::from_fn(&g, Parity::Even, |r, _| r * r);
        let d = d_dr(&r2);
        assert_eq!(d.parity(), Parity::Odd);
        assert!(d.axis().iter().all(|&v| v == 0.0));
        assert!(max_err(&d, |r, _| 2.0 * r, false) < 1e-12);

        let c = ScalarField::constant(&g, Parity::Even, 3.0);
        assert_eq!(d_dr(&c).max_abs(), 0.0);
        assert_eq!(d_dz(&c).max_abs(), 0.0);

        let z = ScalarField::from_fn(&g, Parity::Even, |_, z| z);
        assert!(max_err(&d_dz(&z), |_, _| 1.0, false) < 1e-12);
    }

    fn refinement_ratio(build: impl Fn(&Grid) -> f64) -> f64 {
        let g1 = Grid::new(33, 65, 3.0, 3.0).unwrap();
        build(&g1) / build(&g1.refined())
    }

    #[test]
    fn d_dr_converges_second_order() {
        let ratio = refinement_ratio(|g| {
            let f = ScalarField::from_fn(g, Parity::Even, |r, _| (-r * r).exp());
            max_err(&d_dr(&f), |r, _| -2.0 * r * (-r * r).exp(), false)
        });
        assert!(ratio >= 3.5, "ratio {ratio}");
    }

    #[test]
    fn d_dz_converges_second_order() {
        let ratio = refinement_ratio(|g| {
            let f = ScalarField::from_fn(g, Parity::Even, |_, z| z.sin());
            max_err(&d_dz(&f), |_, z| z.cos(), false)
        });
        assert!(ratio >= 3.5, "ratio {ratio}");
    }

    #[test]
    fn laplacian5_polynomial_and_gaussian() {
        let g = Grid::new(17, 17, 1.0, 1.0).unwrap();
        let r2 = ScalarField::from_fn(&g, Parity::Even, |r, _| r * r);
        let l = laplacian5(&r2).unwrap();
        assert!(max_err(&l, |_, _| 8.0, false) < 1e-10);
        assert_relative_eq!(l.at(0, 3), 8.0, epsilon = 1e-12);

        let c = ScalarField::constant(&g, Parity::Even, 2.0);
        assert!(laplacian5(&c).unwrap().max_abs() < 1e-12);

        let odd = ScalarField::from_fn(&g, Parity::Odd, |r, _| r);
        assert!(matches!(laplacian5(&odd), Err(GridError::OddParity)));

        // Symbolic oracle: Δ5 e^{-r²-z²} = (4r² + 4z² - 10) e^{-r²-z²}
        let exact = |r: f64, z: f64| (4.0 * r * r + 4.0 * z * z - 10.0) * (-r * r - z * z).exp();
        let ratio = refinement_ratio(|g| {
            let f = ScalarField::from_fn(g, Parity::Even, |r, z| (-r * r - z * z).exp());
            max_err(&laplacian5(&f).unwrap(), exact, false)
        });
        assert!(ratio >= 3.5, "ratio {ratio}");
    }

    #[test]
    fn norms() {
        let g = Grid::new(9, 9, 1.0, 1.0).unwrap();
        let z = ScalarField::zeros(&g, Parity::Even);
        for n in [Norm::L1, Norm::L2, Norm::Linf] {
            assert_eq!(norm(&z, n), 0.0);
        }
        // Exact: 2π ∫0^1 ∫-1^1 r dz dr = 2π; trapezoid integrates r exactly.
        let one = ScalarField::constant(&g, Parity::Even, 1.0);
        assert_relative_eq!(norm(&one, Norm::L1), 2.0 * PI, max_relative = 1e-12);
        assert_eq!(norm(&one, Norm::Linf), 1.0);
    }

    #[test]
    fn gaussian_l2_norm_matches_closed_form() {
        // (2π · 1/4 · sqrt(π/2))^{1/2}
        let exact = (2.0 * PI * 0.25 * (PI / 2.0).sqrt()).sqrt();
        let err = |g: &Grid| {
            let f = ScalarField::from_fn(g, Parity::Even, |r, z| (-r * r - z * z).exp());
            (norm(&f, Norm::L2) - exact).abs()
        };
        let g = Grid::new(33, 65, 6.0, 6.0).unwrap();
        assert!(err(&g) < 1e-3);
        assert!(err(&g.refined()) < err(&g) / 3.5);
    }
}
