//! k-sweeps of the fiber spectrum, band intervals and their classification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiber::{fh_velocity, solve_at, EigenSolution, SolverOptions};
use crate::field::{shift_field, vector_potential, FieldRealization, FieldSpec, VectorPotential};
use crate::grid::{Grid1D, KGrid};

/// Default relative flatness tolerance.
pub const DEFAULT_TOL_FLAT: f64 = 1e-6;

/// Energy scale the box must confine: `(n_max + 1) * max |b|`, an upper
/// bound for the top Landau level of the strongest local field.
pub fn target_energy(field: &FieldRealization, n_max: usize) -> f64 {
    (n_max as f64 + 1.0) * field.max_abs().max(f64::MIN_POSITIVE)
}

/// The k-window that [`KGrid::covering`] picks for this field.
pub fn default_kgrid(field: &FieldRealization, n_max: usize, n_k: usize) -> Result<KGrid> {
    let a = vector_potential(field);
    KGrid::covering(
        &a.values,
        target_energy(field, n_max),
        SolverOptions::default().wall_factor,
        n_k,
    )
}

/// All fibers of a k-sweep with their Feynman-Hellmann slopes.
#[derive(Debug, Clone)]
pub struct FiberSweep {
    pub potential: VectorPotential,
    pub kgrid: KGrid,
    pub n_max: usize,
    pub solutions: Vec<EigenSolution>,
    pub velocities: Vec<Vec<f64>>,
}

impl FiberSweep {
    /// Solve every fiber of `kgrid` in parallel; results stay in k order.
    pub fn solve(
        field: &FieldRealization,
        kgrid: &KGrid,
        n_max: usize,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let potential = vector_potential(field);
        Self::solve_potential(potential, kgrid, n_max, opts)
    }

    pub fn solve_potential(
        potential: VectorPotential,
        kgrid: &KGrid,
        n_max: usize,
        opts: &SolverOptions,
    ) -> Result<Self> {
        let solved: Vec<(EigenSolution, Vec<f64>)> = (0..kgrid.len())
            .into_par_iter()
            .map(|j| {
                let sol = solve_at(&potential, kgrid.k(j), n_max, opts)?;
                let v = fh_velocity(&sol, &potential);
                Ok((sol, v))
            })
            .collect::<Result<_>>()?;
        let (solutions, velocities) = solved.into_iter().unzip();
        Ok(FiberSweep {
            potential,
            kgrid: *kgrid,
            n_max,
            solutions,
            velocities,
        })
    }

    pub fn band_functions(&self) -> Vec<BandFunction> {
        (0..=self.n_max)
            .map(|n| BandFunction {
                n,
                kgrid: self.kgrid,
                energies: self.solutions.iter().map(|s| s.eigenvalues[n]).collect(),
                velocities: self.velocities.iter().map(|v| v[n]).collect(),
            })
            .collect()
    }
}

/// `eps_n(k_j)` and `d eps_n / dk (k_j)` for one band index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFunction {
    pub n: usize,
    pub kgrid: KGrid,
    pub energies: Vec<f64>,
    pub velocities: Vec<f64>,
}

pub fn sweep(field: &FieldRealization, kgrid: &KGrid, n_max: usize) -> Result<Vec<BandFunction>> {
    Ok(FiberSweep::solve(field, kgrid, n_max, &SolverOptions::default())?.band_functions())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandInterval {
    pub n: usize,
    pub inf: f64,
    pub sup: f64,
    pub bandwidth: f64,
    pub flat: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandMetadata {
    pub field: FieldSpec,
    pub seed: Option<u64>,
    pub grid: Grid1D,
}

/// Band intervals over the sampled k-window.
///
/// The intervals are inner approximations: the extrema are taken over the
/// finite window recorded in `kgrid` only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub bands: Vec<BandInterval>,
    pub kgrid: KGrid,
    pub n_max: usize,
    pub tol_flat: f64,
    pub inner_approximation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<BandMetadata>,
}

impl BandStructure {
    pub fn with_metadata(mut self, field: &FieldRealization) -> Self {
        self.metadata = Some(BandMetadata {
            field: field.spec.clone(),
            seed: field.seed,
            grid: field.grid,
        });
        self
    }
}

pub fn assemble_bands(funcs: &[BandFunction], tol_flat: f64) -> Result<BandStructure> {
    let first = funcs
        .first()
        .ok_or_else(|| Error::InvalidArgument("no band functions to assemble".into()))?;
    let bands = funcs
        .iter()
        .map(|f| {
            let inf = f.energies.iter().cloned().fold(f64::INFINITY, f64::min);
            let sup = f.energies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let bandwidth = sup - inf;
            BandInterval {
                n: f.n,
                inf,
                sup,
                bandwidth,
                flat: bandwidth <= tol_flat * inf.max(1.0),
            }
        })
        .collect();
    Ok(BandStructure {
        bands,
        kgrid: first.kgrid,
        n_max: funcs.len() - 1,
        tol_flat,
        inner_approximation: true,
        metadata: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClassification {
    /// Union of the non-flat bands, overlapping intervals merged, ascending.
    pub ac_intervals: Vec<(f64, f64)>,
    /// Energies of the flat bands.
    pub pp_points: Vec<f64>,
}

pub fn spectrum_sets(bs: &BandStructure) -> SpectrumClassification {
    let mut intervals: Vec<(f64, f64)> = bs
        .bands
        .iter()
        .filter(|b| !b.flat)
        .map(|b| (b.inf, b.sup))
        .collect();
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ac_intervals: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in intervals {
        match ac_intervals.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => ac_intervals.push((lo, hi)),
        }
    }
    let pp_points = bs
        .bands
        .iter()
        .filter(|b| b.flat)
        .map(|b| 0.5 * (b.inf + b.sup))
        .collect();
    SpectrumClassification {
        ac_intervals,
        pp_points,
    }
}

/// `[min_k d eps_n/dk, max_k d eps_n/dk]` per band.
pub fn velocity_bands(funcs: &[BandFunction]) -> Vec<(f64, f64)> {
    funcs
        .iter()
        .map(|f| {
            f.velocities
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(*v), hi.max(*v))
                })
        })
        .collect()
}

/// Largest `|eps_n(k; shifted b) - eps_n(k + a(z); b)|` over `n <= n_max` and the k-grid.
///
/// The shifted field lives on the shrunk window; the right-hand side is
/// solved on the same window translated by `z`, so both sides diagonalize
/// matrices of identical size.
pub fn verify_shift_covariance(
    field: &FieldRealization,
    z: f64,
    kgrid: &KGrid,
    n_max: usize,
) -> Result<f64> {
    let shifted = shift_field(field, z)?;
    let len = shifted.grid.len();
    let steps = field.grid.len() - len;
    let start = if z >= 0.0 { steps } else { 0 };

    let a = vector_potential(field);
    let a_z = a
        .at(z)
        .ok_or_else(|| Error::InvalidArgument(format!("shift {z} outside the box")))?;
    // same origin anchor as the full box, so only k moves by a(z)
    let a_translated = VectorPotential {
        grid: field.grid.window(start, len)?,
        values: a.values[start..start + len].to_vec(),
    };
    let a_shifted = vector_potential(&shifted);
    let opts = SolverOptions::default();

    let deviations: Vec<f64> = (0..kgrid.len())
        .into_par_iter()
        .map(|j| {
            let k = kgrid.k(j);
            let lhs = solve_at(&a_shifted, k, n_max, &opts)?;
            let rhs = solve_at(&a_translated, k + a_z, n_max, &opts)?;
            Ok(lhs
                .eigenvalues
                .iter()
                .zip(&rhs.eigenvalues)
                .map(|(l, r)| (l - r).abs())
                .fold(0.0, f64::max))
        })
        .collect::<Result<_>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_field;

    fn landau() -> FieldRealization {
        let grid = Grid1D::new(-30.0, 30.0, 3001).unwrap();
        sample_field(&FieldSpec::Constant { b0: 1.0 }, &grid, None).unwrap()
    }

    #[test]
    fn single_non_flat_band() {
        let f = BandFunction {
            n: 0,
            kgrid: KGrid::new(0.0, 1.0, 3).unwrap(),
            energies: vec![1.0, 1.5, 2.0],
            velocities: vec![0.5, 0.5, 0.5],
        };
        let bs = assemble_bands(&[f], DEFAULT_TOL_FLAT).unwrap();
        let s = spectrum_sets(&bs);
        assert_eq!(s.ac_intervals, vec![(1.0, 2.0)]);
        assert!(s.pp_points.is_empty());
    }

    #[test]
    fn overlapping_bands_merge() {
        let kgrid = KGrid::new(0.0, 1.0, 2).unwrap();
        let mk = |n, e: Vec<f64>| BandFunction {
            n,
            kgrid,
            energies: e,
            velocities: vec![0.0; 2],
        };
        let bs = assemble_bands(
            &[
                mk(0, vec![1.0, 2.0]),
                mk(1, vec![1.5, 3.0]),
                mk(2, vec![4.0, 4.0]),
            ],
            1e-6,
        )
        .unwrap();
        let s = spectrum_sets(&bs);
        assert_eq!(s.ac_intervals, vec![(1.0, 3.0)]);
        assert_eq!(s.pp_points, vec![4.0]);
    }

    #[test]
    fn empty_sweep_is_rejected() {
        assert!(assemble_bands(&[], 1e-6).is_err());
    }

    #[test]
    fn landau_sweep_is_flat() {
        let field = landau();
        let kgrid = KGrid::new(-5.0, 5.0, 21).unwrap();
        let funcs = sweep(&field, &kgrid, 3).unwrap();
        for f in &funcs {
            for e in &f.energies {
                assert!((e - (f.n as f64 + 0.5)).abs() < 2e-3);
            }
        }
        let bs = assemble_bands(&funcs, DEFAULT_TOL_FLAT).unwrap();
        assert!(bs.bands.iter().all(|b| b.flat));
        let s = spectrum_sets(&bs);
        assert!(s.ac_intervals.is_empty());
        assert_eq!(s.pp_points.len(), 4);
        for (lo, hi) in velocity_bands(&funcs) {
            assert!(lo.abs() < 1e-8 && hi.abs() < 1e-8);
        }
    }

    #[test]
    fn shift_covariance_trivial_cases() {
        let field = landau();
        let kgrid = KGrid::new(-3.0, 3.0, 7).unwrap();
        assert_eq!(
            verify_shift_covariance(&field, 0.0, &kgrid, 2).unwrap(),
            0.0
        );
        assert!(verify_shift_covariance(&field, 2.0, &kgrid, 2).unwrap() <= 1e-6);
        assert!(verify_shift_covariance(&field, -1.0, &kgrid, 2).unwrap() <= 1e-6);
    }

    #[test]
    fn default_kgrid_for_landau() {
        let kg = default_kgrid(&landau(), 3, 11).unwrap();
        // target 4, wall margin sqrt(32)
        assert!((kg.k_max - (30.0 - 32f64.sqrt())).abs() < 1e-9);
        assert!((kg.k_min + kg.k_max).abs() < 1e-9);
    }
}
