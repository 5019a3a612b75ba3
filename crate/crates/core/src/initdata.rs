//! Compactly supported initial data with prescribed `Pi_0(0,0) = J0` and
//! `d_z Pi_0(0,0) = y0`.

use crate::dynamics::State;
use crate::error::DataError;
use crate::grid::{Grid, Parity, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaKind {
    Zero,
    /// `amplitude * exp(-(r^2 + z^2) / radius^2) * chi`.
    GaussianBump { amplitude: f64, radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataFamily {
    pub j0: f64,
    pub y0: f64,
    pub support_radius: f64,
    pub omega0: OmegaKind,
}

impl Default for DataFamily {
    fn default() -> Self {
        Self { j0: 1.0, y0: 8.0, support_radius: 1.0, omega0: OmegaKind::Zero }
    }
}

/// `exp(1 - 1/(1 - s))` for `s < 1`, else 0.
pub fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (1.0 - 1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

impl DataFamily {
    pub fn validate(&self, grid: &Grid) -> Result<(), DataError> {
        let limit = grid.r_max().min(grid.z_half()) / 3.0;
        if !(self.support_radius > 0.0 && self.support_radius < limit) {
            return Err(DataError::SupportTooLarge { rho: self.support_radius, limit });
        }
        if !(self.j0 >= 0.0) {
            return Err(DataError::NegativeJ0(self.j0));
        }
        if let OmegaKind::GaussianBump { radius, .. } = self.omega0 {
            if !(radius > 0.0) {
                return Err(DataError::BadBumpRadius(radius));
            }
        }
        Ok(())
    }

    fn chi(&self, r: f64, z: f64) -> f64 {
        bump((r * r + z * z) / (self.support_radius * self.support_radius))
    }

    pub fn state(&self, grid: &Grid) -> Result<State, DataError> {
        Ok(State::new(build_omega0(self, grid)?, build_pi0(self, grid)?))
    }
}

/// `Pi_0 = (J0 + y0 z) chi((r^2 + z^2) / rho^2)`.
pub fn build_pi0(fam: &DataFamily, grid: &Grid) -> Result<ScalarField, DataError> {
    fam.validate(grid)?;
    Ok(ScalarField::from_fn(grid, Parity::Even, |r, z| (fam.j0 + fam.y0 * z) * fam.chi(r, z)))
}

pub fn build_omega0(fam: &DataFamily, grid: &Grid) -> Result<ScalarField, DataError> {
    fam.validate(grid)?;
    Ok(match fam.omega0 {
        OmegaKind::Zero => ScalarField::zeros(grid, Parity::Even),
        OmegaKind::GaussianBump { amplitude, radius } => ScalarField::from_fn(grid, Parity::Even, |r, z| {
            amplitude * (-(r * r + z * z) / (radius * radius)).exp() * fam.chi(r, z)
        }),
    })
}

/// `(Pi_0(0,0), central d_z Pi_0(0,0))`.
pub fn measure_origin_data(pi0: &ScalarField) -> (f64, f64) {
    let g = pi0.grid();
    let m = g.mid_z();
    let axis = pi0.axis();
    (axis[m], (axis[m + 1] - axis[m - 1]) / (2.0 * g.dz()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(65, 129, 4.0, 8.0).unwrap()
    }

    #[test]
    fn origin_values() {
        let g = grid();
        let p = build_pi0(&DataFamily { y0: 0.0, ..Default::default() }, &g).unwrap();
        assert_eq!(measure_origin_data(&p), (1.0, 0.0));
        let p = build_pi0(&DataFamily::default(), &g).unwrap();
        let (j, y) = measure_origin_data(&p);
        assert_eq!(j, 1.0);
        // chi'' = -2 at the origin in s, so the error is O(dz^2) with a small constant
        assert!((y - 8.0).abs() < 16.0 * g.dz().powi(2), "{y}");
    }

    #[test]
    fn round_trip_is_second_order() {
        let err = |nz: usize| {
            let g = Grid::new(33, nz, 4.0, 8.0).unwrap();
            let p = build_pi0(&DataFamily { j0: 0.0, y0: 1.0, ..Default::default() }, &g).unwrap();
            let (j, y) = measure_origin_data(&p);
            assert_eq!(j, 0.0);
            (y - 1.0).abs()
        };
        let ratio = err(129) / err(257);
        assert!(ratio > 3.5, "{ratio}");
    }

    #[test]
    fn support_is_compact() {
        let g = grid();
        let fam = DataFamily { omega0: OmegaKind::GaussianBump { amplitude: 1.0, radius: 0.5 }, ..Default::default() };
        let p = build_pi0(&fam, &g).unwrap();
        let w = build_omega0(&fam, &g).unwrap();
        for i in 0..g.nr() {
            for j in 0..g.nz() {
                if g.r(i).powi(2) + g.z(j).powi(2) >= 1.0 {
                    assert_eq!(p.at(i, j), 0.0);
                    assert_eq!(w.at(i, j), 0.0);
                }
            }
        }
        assert_eq!(w.max_abs(), 1.0);
        let zero = build_omega0(&DataFamily::default(), &g).unwrap();
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn rejects_bad_families() {
        let g = grid();
        let big = DataFamily { support_radius: 1.5, ..Default::default() };
        assert!(matches!(build_pi0(&big, &g), Err(DataError::SupportTooLarge { .. })));
        let neg = DataFamily { j0: -1.0, ..Default::default() };
        assert!(matches!(build_pi0(&neg, &g), Err(DataError::NegativeJ0(_))));
        let bad = DataFamily { omega0: OmegaKind::GaussianBump { amplitude: 1.0, radius: 0.0 }, ..Default::default() };
        assert!(matches!(build_omega0(&bad, &g), Err(DataError::BadBumpRadius(_))));
    }

    #[test]
    fn linear_core_measures_slope() {
        let g = grid();
        let p = ScalarField::from_fn(&g, Parity::Even, |r, z| z * bump(r * r + z * z));
        let (j, y) = measure_origin_data(&p);
        assert_eq!(j, 0.0);
        assert!((y - 1.0).abs() < 2.0 * g.dz().powi(2));
        assert_eq!(measure_origin_data(&ScalarField::zeros(&g, Parity::Even)), (0.0, 0.0));
    }
}
