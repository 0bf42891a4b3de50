//! Band structure and transport for a charged particle in the plane under a
//! magnetic field `b(x)` that depends on one coordinate only.
//!
//! The Hamiltonian is translation invariant in `x2`, so it splits into a
//! family of one-dimensional fiber operators `H(k) = (P^2 + (k - a(x))^2) / 2`
//! where `a` is the anti-derivative of `b`. The crate samples random fields,
//! solves the fibers, assembles bands and propagates wave packets.

// `!(x > 0.0)` is the NaN-rejecting form used in the validators.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod fiber;
pub mod field;
pub mod grid;
pub mod io;
pub mod plot;
pub mod rng;
pub mod tridiag;
pub mod verify;

pub use bands::{
    assemble_bands, default_kgrid, spectrum_sets, sweep, velocity_bands, verify_shift_covariance,
    BandFunction, BandInterval, BandStructure, FiberSweep, SpectrumClassification,
};
pub use config::{DynamicsConfig, RunConfig};
pub use dynamics::{
    evolve, prepare_packet, BallisticProbe, FiberedWavePacket, ObservableSeries, PacketSpec,
    ProfileChoice, VelocityOperatorData,
};
pub use error::{Error, Result};
pub use fiber::{
    fh_velocity, solve_at, solve_fiber, velocity_bound_check, EigenSolution, SolverOptions,
};
pub use field::{
    field_metric, sample_field, shift_field, vector_potential, FieldRealization, FieldSpec,
    VectorPotential,
};
pub use grid::{Grid1D, KGrid};
pub use verify::{run_suite, Tolerances, VerifyReport};
