//! Shot-noise fields: Poisson impurities and i.i.d. lattice couplings.

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::spec::{DistributionModel, ProfileFunction};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::rng::FieldRng;

/// Window on which impurities are drawn: the box enlarged by the profile support.
pub fn impurity_window(grid: &Grid1D, profile: &ProfileFunction) -> (f64, f64) {
    let s = profile.support_radius();
    (grid.x_min() - s, grid.x_max() + s)
}

/// Impurity positions of a Poisson point process of intensity `rho` on `window`.
pub fn poisson_points(rho: f64, window: (f64, f64), rng: &mut FieldRng) -> Result<Vec<f64>> {
    if !(rho > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "Poisson intensity must be > 0, got {rho}"
        )));
    }
    let (lo, hi) = window;
    let mean = rho * (hi - lo);
    let count = Poisson::new(mean)
        .map_err(|e| Error::InvalidSpec(format!("Poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    Ok((0..count)
        .map(|_| lo + (hi - lo) * rng.random::<f64>())
        .collect())
}

/// Superpose `weight * u(x - y)` for each `(y, weight)` onto the grid.
pub fn superpose(
    grid: &Grid1D,
    profile: &ProfileFunction,
    sources: impl IntoIterator<Item = (f64, f64)>,
) -> Vec<f64> {
    let mut values = vec![0.0; grid.len()];
    let s = profile.support_radius();
    let h = grid.spacing();
    let last = grid.len() as isize - 1;
    for (y, w) in sources {
        let lo = (((y - s - grid.x_min()) / h).floor() as isize).clamp(0, last) as usize;
        let hi = (((y + s - grid.x_min()) / h).ceil() as isize).clamp(0, last) as usize;
        for (i, v) in values.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *v += w * profile.eval(grid.x(i) - y);
        }
    }
    values
}

pub(crate) fn poisson_values(
    grid: &Grid1D,
    rho: f64,
    profile: &ProfileFunction,
    rng: &mut FieldRng,
) -> Result<Vec<f64>> {
    let points = poisson_points(rho, impurity_window(grid, profile), rng)?;
    Ok(superpose(
        grid,
        profile,
        points.into_iter().map(|y| (y, 1.0)),
    ))
}

pub(crate) fn lattice_values(
    grid: &Grid1D,
    distribution: &DistributionModel,
    profile: &ProfileFunction,
    rng: &mut FieldRng,
) -> Vec<f64> {
    let (lo, hi) = impurity_window(grid, profile);
    let sites = (lo.ceil() as i64)..=(hi.floor() as i64);
    let couplings: Vec<(f64, f64)> = sites
        .map(|j| (j as f64, distribution.sample(rng)))
        .collect();
    superpose(grid, profile, couplings)
}
