//! Shared fixtures for the benchmarks.

use magbands_core::field::{sample_field, FieldRealization, FieldSpec, ProfileFunction};
use magbands_core::grid::Grid1D;

pub fn landau(n_points: usize) -> FieldRealization {
    sample_field(&FieldSpec::Constant { b0: 1.0 }, &Grid1D::new(-20.0, 20.0, n_points).unwrap(), None).unwrap()
}

pub fn poisson(n_points: usize, seed: u64) -> FieldRealization {
    let spec = FieldSpec::Poisson { rho: 2.0, profile: ProfileFunction::Bump { amplitude: 0.25, half_width: 1.0 } };
    sample_field(&spec, &Grid1D::new(-20.0, 20.0, n_points).unwrap(), Some(seed)).unwrap()
}
