use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use magbands_core::bands::FiberSweep;
use magbands_core::dynamics::{
    asymptotic_velocity_apply, evolve, prepare_packet, q1_second_moment, FiberedWavePacket,
    PacketSpec, ProfileChoice, VelocityOperatorData,
};
use magbands_core::fiber::SolverOptions;
use magbands_core::field::{sample_field, FieldSpec};
use magbands_core::grid::{Grid1D, KGrid};
use proptest::prelude::*;

fn sweep(spec: FieldSpec, half: f64, h: f64, kgrid: KGrid, n_max: usize) -> Arc<FiberSweep> {
    let f = sample_field(&spec, &Grid1D::with_spacing(-half, half, h).unwrap(), None).unwrap();
    Arc::new(FiberSweep::solve(&f, &kgrid, n_max, &SolverOptions::default()).unwrap())
}

fn landau(n_max: usize) -> Arc<FiberSweep> {
    sweep(
        FieldSpec::Constant { b0: 1.0 },
        15.0,
        0.02,
        KGrid::new(-4.0, 4.0, 81).unwrap(),
        n_max,
    )
}

fn multi_band(center: f64) -> PacketSpec {
    PacketSpec {
        profile: ProfileChoice::Gaussian { center, width: 1.0 },
        ..PacketSpec::ground_state(0.0, 0.5)
    }
}

#[test]
fn landau_packets_return_after_one_cyclotron_period() {
    let p = prepare_packet(landau(8), &multi_band(0.7)).unwrap();
    // levels n + 1/2 all pick up the phase -1 at t = 2 pi
    let overlap = p.inner(&evolve(&p, 2.0 * PI)).norm() / p.norm().powi(2);
    assert!((overlap - 1.0).abs() < 1e-4, "{overlap}");
    let half = p.inner(&evolve(&p, PI)).norm() / p.norm().powi(2);
    assert!(half < 0.99, "{half}");
}

#[test]
fn landau_ground_packet_has_constant_q1_spread_and_no_drift() {
    let s = landau(4);
    let data = VelocityOperatorData::new(&s);
    let p = prepare_packet(s, &PacketSpec::ground_state(0.5, 0.4)).unwrap();
    let q0 = q1_second_moment(&p, &data);
    for t in [1.0, 10.0, 100.0] {
        let q = q1_second_moment(&evolve(&p, t), &data);
        assert!((q - q0).abs() < 1e-10, "t = {t}: {q} vs {q0}");
    }
    assert!(asymptotic_velocity_apply(&p, &data).norm() < 1e-8);
}

#[test]
fn snake_gaussian_packet_is_captured_by_nine_bands() {
    let s = sweep(
        FieldSpec::Step {
            b_left: -1.0,
            b_right: 1.0,
        },
        15.0,
        0.02,
        KGrid::new(-4.0, 4.0, 81).unwrap(),
        8,
    );
    let p = prepare_packet(s, &multi_band(0.0)).unwrap();
    assert!(p.capture >= 0.999, "{}", p.capture);
    assert!((p.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn narrow_snake_packet_moves_at_the_ground_slope() {
    let s = sweep(
        FieldSpec::Step {
            b_left: -1.0,
            b_right: 1.0,
        },
        10.0,
        0.002,
        KGrid::new(-1.0, 1.0, 201).unwrap(),
        1,
    );
    let data = VelocityOperatorData::new(&s);
    let p = prepare_packet(s, &PacketSpec::ground_state(0.0, 0.1)).unwrap();
    let v = asymptotic_velocity_apply(&p, &data).norm();
    let expected = 1.0 / PI.sqrt();
    assert!((v - expected).abs() < 0.05 * expected, "{v} vs {expected}");
}

fn shared_packet() -> &'static FiberedWavePacket {
    static PACKET: OnceLock<FiberedWavePacket> = OnceLock::new();
    PACKET.get_or_init(|| prepare_packet(landau(8), &multi_band(0.3)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn evolution_is_a_one_parameter_group(s in -50.0f64..50.0, t in -50.0f64..50.0) {
        let p = shared_packet();
        let twice = evolve(&evolve(p, s), t);
        let once = evolve(p, s + t);
        let diff: f64 = twice
            .coefficients
            .iter()
            .flatten()
            .zip(once.coefficients.iter().flatten())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        prop_assert!(diff.sqrt() < 1e-9);
        prop_assert!((twice.norm() - p.norm()).abs() < 1e-12);
    }
}
