//! Seeded random test geometry and coefficients.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::simplex::GeometricSimplex;

/// Edge matrices with `σ_min / σ_max` below this are redrawn.
const MIN_SHAPE_RATIO: f64 = 0.1;

/// The reference simplex with every coordinate perturbed uniformly in `±0.3`,
/// redrawn until reasonably shaped.
pub fn random_simplex<R: Rng>(d: usize, rng: &mut R) -> GeometricSimplex {
    loop {
        let reference = GeometricSimplex::reference(d);
        let points: Vec<DVector<f64>> = reference
            .points()
            .iter()
            .map(|p| p.map(|c| c + rng.random_range(-0.3..0.3)))
            .collect();
        let edges = DMatrix::from_fn(d, d, |i, j| points[j + 1][i] - points[0][i]);
        let sv = edges.singular_values();
        if sv.min() < MIN_SHAPE_RATIO * sv.max() {
            continue;
        }
        if let Ok(t) = GeometricSimplex::new(points) {
            return t;
        }
    }
}

pub fn random_vector<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}
