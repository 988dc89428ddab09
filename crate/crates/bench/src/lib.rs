//! Fixtures for the benchmarks.

use nalgebra::Vector3;
use polaron_core::{build_cylindrical_grid, CutoffProfile, PolarizationKind, PolaronModel, PolaronParams};

/// Ring of `n_az` nodes around ẑ at photon-number ceiling `n_max`.
pub fn ring_model(n_az: usize, n_max: usize) -> PolaronModel {
    let grid = build_cylindrical_grid(1, 1, n_az, 0.5, 1.5, Vector3::z()).expect("valid ring");
    PolaronModel::new(
        PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, 0.3),
        grid,
        n_max,
        CutoffProfile::Sharp { kappa: 0.05, lambda: 2.0 },
        PolarizationKind::Xy,
    )
    .expect("valid model")
}
