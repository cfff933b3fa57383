//! Density field of a configuration and the norms compared against the PDE.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("grid of {fine} points does not contain the {coarse} field knots")]
    GridMismatch { coarse: usize, fine: usize },
}

/// `X(x_k) = eta_k / ell` at `x_k = k / N`, linearly interpolated in between
/// with periodic wrap.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    knots: Vec<f64>,
}

impl DensityField {
    pub fn from_knots(knots: Vec<f64>) -> Self {
        assert!(!knots.is_empty());
        Self { knots }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn n(&self) -> usize {
        self.knots.len()
    }

    pub fn eval(&self, x: f64) -> f64 {
        interpolate_periodic(&self.knots, x)
    }

    /// Maximum over the torus; attained at a knot.
    pub fn sup(&self) -> f64 {
        self.knots.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exact integral over the torus: the trapezoid rule on a periodic
    /// piecewise-linear function reduces to the knot mean.
    pub fn l1_norm(&self) -> f64 {
        self.knots.iter().map(|x| x.abs()).sum::<f64>() / self.n() as f64
    }
}

pub fn field_from_config(counts: &[u64], ell: u64) -> DensityField {
    let ell = ell as f64;
    DensityField::from_knots(counts.iter().map(|&c| c as f64 / ell).collect())
}

pub fn l1_norm(field: &DensityField) -> f64 {
    field.l1_norm()
}

fn interpolate_periodic(knots: &[f64], x: f64) -> f64 {
    let n = knots.len();
    let pos = x.rem_euclid(1.0) * n as f64;
    let k = (pos.floor() as usize).min(n - 1);
    let t = pos - k as f64;
    (1.0 - t) * knots[k] + t * knots[(k + 1) % n]
}

/// `max |field - u|` over the points `j / M` and `(j + 1/2) / M` of the grid
/// carrying `u`; `M` must be a multiple of the field's `N`.
pub fn sup_distance(field: &DensityField, u: &[f64]) -> Result<f64, MetricsError> {
    let coarse = field.n();
    let fine = u.len();
    if fine == 0 || fine % coarse != 0 {
        return Err(MetricsError::GridMismatch { coarse, fine });
    }
    // Positions are taken in coarse-cell units so that fine points lying on
    // a knot read the knot value exactly.
    let ratio = fine / coarse;
    let knots = field.knots();
    let at = |j: usize, half: bool| {
        let k = j / ratio;
        let t = ((j % ratio) as f64 + if half { 0.5 } else { 0.0 }) / ratio as f64;
        (1.0 - t) * knots[k] + t * knots[(k + 1) % coarse]
    };
    let mut worst: f64 = 0.0;
    for j in 0..fine {
        worst = worst.max((at(j, false) - u[j]).abs());
        let u_mid = 0.5 * (u[j] + u[(j + 1) % fine]);
        worst = worst.max((at(j, true) - u_mid).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interpolation_examples() {
        let x = field_from_config(&[2, 4], 2);
        assert_eq!(x.eval(0.0), 1.0);
        assert_eq!(x.eval(0.5), 2.0);
        assert_eq!(x.eval(0.25), 1.5);
        assert_eq!(x.eval(0.75), 1.5);
        assert_eq!(x.l1_norm(), 1.5);

        let flat = field_from_config(&[7; 5], 7);
        for i in 0..50 {
            assert_eq!(flat.eval(i as f64 / 50.0), 1.0);
        }
        assert_eq!(flat.l1_norm(), 1.0);

        let spike = field_from_config(&[0, 10, 0, 0], 10);
        assert_eq!(spike.sup(), 1.0);
        assert_eq!(spike.eval(0.25), 1.0);
        assert_eq!(spike.l1_norm(), 0.25);
    }

    #[test]
    fn distance_examples() {
        let flat = field_from_config(&[3; 4], 3);
        assert_eq!(sup_distance(&flat, &[1.0; 4]).unwrap(), 0.0);
        assert_eq!(sup_distance(&flat, &[1.0; 16]).unwrap(), 0.0);
        let x = field_from_config(&[2, 4], 2);
        assert_eq!(sup_distance(&x, &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(
            sup_distance(&x, &[1.0; 3]),
            Err(MetricsError::GridMismatch { coarse: 2, fine: 3 })
        );
    }

    proptest! {
        #[test]
        fn l1_is_mass_over_scale(counts in prop::collection::vec(0u64..500, 2..64), ell in 1u64..50) {
            let field = field_from_config(&counts, ell);
            let total: u64 = counts.iter().sum();
            let expected = total as f64 / (ell as f64 * counts.len() as f64);
            prop_assert!((field.l1_norm() - expected).abs() <= 1e-12 * expected.max(1.0));
        }

        #[test]
        fn distance_to_own_knots_is_zero(counts in prop::collection::vec(0u64..500, 2..64), ell in 1u64..50) {
            let field = field_from_config(&counts, ell);
            let knots = field.knots().to_vec();
            prop_assert_eq!(sup_distance(&field, &knots).unwrap(), 0.0);
        }

        #[test]
        fn values_stay_between_extreme_knots(counts in prop::collection::vec(0u64..500, 2..64), x in 0.0f64..1.0) {
            let field = field_from_config(&counts, 3);
            let lo = field.knots().iter().copied().fold(f64::INFINITY, f64::min);
            let v = field.eval(x);
            prop_assert!(v >= lo - 1e-12 && v <= field.sup() + 1e-12);
        }
    }
}
