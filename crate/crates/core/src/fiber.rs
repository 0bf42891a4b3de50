//! The effective one-dimensional Hamiltonian `H(k) = (P^2 + (k - a(x))^2) / 2`
//! on a Dirichlet box, discretized with the three-point Laplacian.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::VectorPotential;
use crate::grid::Grid1D;
use crate::tridiag::SymTridiagonal;

/// `v(x) = (k - a(x))^2 / 2` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePotential {
    pub grid: Grid1D,
    pub k: f64,
    pub values: Vec<f64>,
}

pub fn effective_potential(a: &VectorPotential, k: f64) -> EffectivePotential {
    let values = a
        .values
        .iter()
        .map(|ai| 0.5 * (k - ai) * (k - ai))
        .collect();
    EffectivePotential {
        grid: a.grid,
        k,
        values,
    }
}

/// Discretized fiber operator: diagonal `1/h^2 + v_i`, off-diagonal `-1/(2h^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberOperator {
    pub grid: Grid1D,
    pub k: f64,
    pub potential: Vec<f64>,
    pub diagonal: Vec<f64>,
    pub off_diagonal: f64,
}

impl FiberOperator {
    pub fn to_tridiagonal(&self) -> SymTridiagonal {
        SymTridiagonal::new(
            self.diagonal.clone(),
            vec![self.off_diagonal; self.diagonal.len() - 1],
        )
    }

    /// The smaller of the two wall values of the effective potential.
    pub fn wall_potential(&self) -> f64 {
        self.potential[0].min(self.potential[self.potential.len() - 1])
    }
}

pub fn assemble_fiber(a: &VectorPotential, k: f64) -> FiberOperator {
    let h = a.grid.spacing();
    let kinetic = 1.0 / (h * h);
    let EffectivePotential { grid, values, .. } = effective_potential(a, k);
    let diagonal = values.iter().map(|v| kinetic + v).collect();
    FiberOperator {
        grid,
        k,
        potential: values,
        diagonal,
        off_diagonal: -0.5 * kinetic,
    }
}

/// Outcome of the wall check for a target energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxCheck {
    Adequate,
    /// Wall potential above the target energy but below `wall_factor` times it.
    Marginal,
}

/// Compare the wall potential with `wall_factor * energy`.
///
/// Below `energy` itself the eigenfunctions reach the walls and the fiber is
/// rejected; between the two a warning is logged.
pub fn check_box(op: &FiberOperator, energy: f64, wall_factor: f64) -> Result<BoxCheck> {
    let wall = op.wall_potential();
    if wall < energy {
        return Err(Error::BoxInadequate {
            k: op.k,
            wall_potential: wall,
            energy,
        });
    }
    if wall < wall_factor * energy {
        log::warn!(
            "fiber k = {}: wall potential {wall:.3e} below {wall_factor} x {energy:.3e}",
            op.k
        );
        return Ok(BoxCheck::Marginal);
    }
    Ok(BoxCheck::Adequate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Adjacent eigenvalues closer than this (relative) are reported as a collision.
    pub degeneracy_tol: f64,
    /// Warn when the wall potential is below this multiple of the top eigenvalue.
    pub wall_factor: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            degeneracy_tol: 1e-9,
            wall_factor: 4.0,
        }
    }
}

/// Lowest eigenpairs of one fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    pub k: f64,
    pub grid: Grid1D,
    /// Strictly increasing, strictly positive.
    pub eigenvalues: Vec<f64>,
    /// `h`-orthonormal, first component above `1e-8` in magnitude is positive.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl EigenSolution {
    pub fn n_bands(&self) -> usize {
        self.eigenvalues.len()
    }
}

pub fn solve_fiber(op: &FiberOperator, n_max: usize) -> Result<EigenSolution> {
    solve_fiber_with(op, n_max, &SolverOptions::default())
}

pub fn solve_fiber_with(
    op: &FiberOperator,
    n_max: usize,
    opts: &SolverOptions,
) -> Result<EigenSolution> {
    let n = op.grid.len();
    if n_max + 1 > n.saturating_sub(2) {
        return Err(Error::InvalidArgument(format!(
            "n_max = {n_max} needs more than {n} grid points"
        )));
    }
    let t = op.to_tridiagonal();
    let (values, vectors) = t
        .lowest_eigenpairs(n_max + 1)
        .map_err(|f| Error::NoConvergence {
            k: op.k,
            n: f.index,
            residual: f.residual,
            order: n,
            norm: t.norm_bound(),
        })?;

    for (j, w) in values.windows(2).enumerate() {
        let gap = w[1] - w[0];
        if !(gap > opts.degeneracy_tol * w[1].abs().max(1.0)) {
            return Err(Error::Degenerate { k: op.k, n: j, gap });
        }
    }
    if !(values[0] > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "fiber k = {} has non-positive ground energy {}",
            op.k, values[0]
        )));
    }
    check_box(op, values[n_max], opts.wall_factor)?;

    let scale = 1.0 / op.grid.spacing().sqrt();
    let eigenvectors = vectors
        .into_iter()
        .map(|v| {
            let mut phi: Vec<f64> = v.into_iter().map(|x| x * scale).collect();
            if phi
                .iter()
                .find(|x| x.abs() > 1e-8)
                .is_some_and(|x| *x < 0.0)
            {
                phi.iter_mut().for_each(|x| *x = -*x);
            }
            phi
        })
        .collect();
    Ok(EigenSolution {
        k: op.k,
        grid: op.grid,
        eigenvalues: values,
        eigenvectors,
    })
}

/// Assemble and solve the fiber at `k`, tagging any error with `k`.
pub fn solve_at(
    a: &VectorPotential,
    k: f64,
    n_max: usize,
    opts: &SolverOptions,
) -> Result<EigenSolution> {
    solve_fiber_with(&assemble_fiber(a, k), n_max, opts).map_err(|e| e.at_fiber(k))
}

/// Feynman-Hellmann slopes `d eps_n / dk = h sum_i phi_n(x_i)^2 (k - a_i)`.
pub fn fh_velocity(sol: &EigenSolution, a: &VectorPotential) -> Vec<f64> {
    assert_eq!(
        sol.grid.len(),
        a.values.len(),
        "solution and potential live on different grids"
    );
    let h = sol.grid.spacing();
    sol.eigenvectors
        .iter()
        .map(|phi| {
            h * phi
                .iter()
                .zip(&a.values)
                .map(|(p, ai)| p * p * (sol.k - ai))
                .sum::<f64>()
        })
        .collect()
}

/// Absolute guard band of the group-velocity check.
pub const VELOCITY_GUARD: f64 = 1e-8;

/// Per band: does `v_n^2 < 2 eps_n` hold with margin [`VELOCITY_GUARD`]?
pub fn velocity_bound_check(sol: &EigenSolution, velocities: &[f64]) -> Vec<bool> {
    assert_eq!(sol.eigenvalues.len(), velocities.len());
    sol.eigenvalues
        .iter()
        .zip(velocities)
        .map(|(e, v)| v * v < 2.0 * e - VELOCITY_GUARD)
        .collect()
}
