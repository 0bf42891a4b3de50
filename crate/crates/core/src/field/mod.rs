//! Magnetic-field realizations on a grid and the quantities derived from them.

mod gaussian;
mod poisson;
mod spec;

pub use gaussian::{
    mercer_eigenpairs, sample_gaussian_circulant, sample_gaussian_kl, CirculantEmbedding,
    KarhunenLoeve, MercerBasis, MAX_CLIPPED_FRACTION,
};
pub use poisson::{impurity_window, poisson_points, superpose};
pub use spec::{CovarianceModel, DistributionModel, FieldSpec, GaussianSpec, ProfileFunction};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::rng::field_rng;

/// A field profile `b(x)` sampled on a grid, with the spec and seed that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldRealization {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub spec: FieldSpec,
    pub seed: Option<u64>,
}

impl FieldRealization {
    pub fn new(grid: Grid1D, values: Vec<f64>, spec: FieldSpec, seed: Option<u64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        FieldRealization {
            grid,
            values,
            spec,
            seed,
        }
    }

    /// Realization with explicit values, e.g. loaded from disk or built in tests.
    pub fn from_values(
        grid: Grid1D,
        values: Vec<f64>,
        spec: FieldSpec,
        seed: Option<u64>,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} grid points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "non-finite field value at index {i}"
            )));
        }
        Ok(FieldRealization {
            grid,
            values,
            spec,
            seed,
        })
    }

    /// Sub-window `[start, start + len)` of the realization.
    pub fn restrict(&self, start: usize, len: usize) -> Result<FieldRealization> {
        let grid = self.grid.window(start, len)?;
        Ok(FieldRealization {
            grid,
            values: self.values[start..start + len].to_vec(),
            spec: self.spec.clone(),
            seed: self.seed,
        })
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Anti-derivative `a(x)` of a field with `a = 0` at the grid point nearest the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorPotential {
    pub grid: Grid1D,
    pub values: Vec<f64>,
}

impl VectorPotential {
    /// Value at the grid point nearest to `x`.
    pub fn at(&self, x: f64) -> Option<f64> {
        self.grid.nearest_index(x).map(|i| self.values[i])
    }
}

/// Draw (or evaluate) a realization of `spec` on `grid`.
///
/// Random specs require a seed; the result is a pure function of
/// `(spec, grid, seed)`.
pub fn sample_field(
    spec: &FieldSpec,
    grid: &Grid1D,
    seed: Option<u64>,
) -> Result<FieldRealization> {
    spec.validate()?;
    if !spec.is_random() {
        let tie = 1e-9 * grid.spacing();
        let values = grid
            .points()
            .map(|x| {
                spec.deterministic_value(x, tie)
                    .expect("deterministic spec")
            })
            .collect();
        return Ok(FieldRealization::new(*grid, values, spec.clone(), None));
    }
    let seed = seed.ok_or(Error::MissingSeed)?;
    let mut rng = field_rng(seed);
    let values = match spec {
        FieldSpec::Gaussian(g) => gaussian::circulant_values(g, grid, &mut rng)?,
        FieldSpec::SquaredGaussian { b_minus, inner } => {
            gaussian::circulant_values(inner, grid, &mut rng)?
                .into_iter()
                .map(|g| b_minus + g * g)
                .collect()
        }
        FieldSpec::Poisson { rho, profile } => {
            poisson::poisson_values(grid, *rho, profile, &mut rng)?
        }
        FieldSpec::LatticeIid {
            distribution,
            profile,
        } => poisson::lattice_values(grid, distribution, profile, &mut rng),
        _ => unreachable!("deterministic specs handled above"),
    };
    Ok(FieldRealization::new(
        *grid,
        values,
        spec.clone(),
        Some(seed),
    ))
}

/// Impurity positions behind a Poisson realization (same random stream as [`sample_field`]).
pub fn poisson_impurities(spec: &FieldSpec, grid: &Grid1D, seed: u64) -> Result<Vec<f64>> {
    match spec {
        FieldSpec::Poisson { rho, profile } => {
            spec.validate()?;
            poisson_points(*rho, impurity_window(grid, profile), &mut field_rng(seed))
        }
        _ => Err(Error::InvalidArgument(format!(
            "{} is not a Poisson spec",
            spec.id()
        ))),
    }
}

/// Cumulative trapezoidal integral of the field, anchored at the origin.
pub fn vector_potential(field: &FieldRealization) -> VectorPotential {
    let grid = field.grid;
    let b = &field.values;
    let half_h = 0.5 * grid.spacing();
    let i0 = grid.origin_index();
    let mut a = vec![0.0; b.len()];
    for i in i0 + 1..b.len() {
        a[i] = a[i - 1] + half_h * (b[i - 1] + b[i]);
    }
    for i in (0..i0).rev() {
        a[i] = a[i + 1] - half_h * (b[i] + b[i + 1]);
    }
    VectorPotential { grid, values: a }
}

fn trapezoid(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    h * (values[1..n - 1].iter().sum::<f64>() + 0.5 * (values[0] + values[n - 1]))
}

/// Box average `(1 / |box|) * integral of b`.
pub fn spatial_mean(field: &FieldRealization) -> f64 {
    trapezoid(&field.values, field.grid.spacing()) / field.grid.length()
}

/// Finite-box estimate of the growth rate `liminf |a(x)| / |x|`: the smaller
/// of the two wall ratios.
pub fn growth_rate(a: &VectorPotential) -> f64 {
    let g = &a.grid;
    let ends = [
        (g.x_min(), a.values[0]),
        (g.x_max(), a.values[a.values.len() - 1]),
    ];
    ends.iter()
        .filter(|(x, _)| x.abs() > 0.0)
        .map(|(x, v)| v.abs() / x.abs())
        .fold(f64::INFINITY, f64::min)
}

/// Unit cells `[j, j + 1]` inside the grid as `(j, first index)`; integers must be grid points.
fn unit_cells(grid: &Grid1D) -> Result<(Vec<(i64, usize)>, usize)> {
    let h = grid.spacing();
    let per_cell = (1.0 / h).round();
    if per_cell < 1.0 || (per_cell * h - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidGrid(format!(
            "unit cells need 1/h to be an integer, h = {h}"
        )));
    }
    let per_cell = per_cell as usize;
    let j_lo = (grid.x_min() - 1e-9).ceil() as i64;
    let j_hi = (grid.x_max() + 1e-9).floor() as i64 - 1;
    let mut cells = Vec::new();
    for j in j_lo..=j_hi {
        let i = grid
            .nearest_index(j as f64)
            .filter(|&i| (grid.x(i) - j as f64).abs() <= 1e-6 * h)
            .ok_or_else(|| Error::InvalidGrid(format!("integer {j} is not a grid point")))?;
        cells.push((j, i));
    }
    Ok((cells, per_cell))
}

/// Local distance `sum_j 2^-|j| min(1, int_j^{j+1} |b - b2|)` over the unit
/// cells inside the grid. Cells outside contribute nothing; see
/// [`field_metric_tail_bound`] for what is left out.
pub fn field_metric(b: &FieldRealization, b2: &FieldRealization) -> Result<f64> {
    if !b.grid.same_as(&b2.grid) {
        return Err(Error::GridMismatch(
            "field_metric needs both fields on the same grid".into(),
        ));
    }
    let (cells, per_cell) = unit_cells(&b.grid)?;
    let h = b.grid.spacing();
    let diff: Vec<f64> = b
        .values
        .iter()
        .zip(&b2.values)
        .map(|(x, y)| (x - y).abs())
        .collect();
    Ok(cells
        .iter()
        .map(|&(j, i)| {
            2f64.powi(-(j.unsigned_abs() as i32)) * trapezoid(&diff[i..=i + per_cell], h).min(1.0)
        })
        .sum())
}

/// Largest possible contribution of the unit cells not covered by the grid.
pub fn field_metric_tail_bound(grid: &Grid1D) -> Result<f64> {
    let (cells, _) = unit_cells(grid)?;
    let covered: f64 = cells
        .iter()
        .map(|&(j, _)| 2f64.powi(-(j.unsigned_abs() as i32)))
        .sum();
    Ok(3.0 - covered)
}

/// Translate a realization, `(shift b)(x) = b(x + z)`, keeping only the part
/// of the box where both sides are sampled. `z` must be a multiple of the spacing.
pub fn shift_field(field: &FieldRealization, z: f64) -> Result<FieldRealization> {
    let (start, len, steps) = shift_layout(&field.grid, z)?;
    let grid = field.grid.window(start, len)?;
    let src = if z >= 0.0 { steps } else { 0 };
    Ok(FieldRealization {
        grid,
        values: field.values[src..src + len].to_vec(),
        spec: field.spec.clone(),
        seed: field.seed,
    })
}

/// `(start, len, steps)`: the shifted field lives on `[start, start + len)`,
/// and `steps = |z| / h`.
pub(crate) fn shift_layout(grid: &Grid1D, z: f64) -> Result<(usize, usize, usize)> {
    let h = grid.spacing();
    let steps = (z / h).round();
    if (z - steps * h).abs() > 1e-9 * h.max(z.abs()) {
        return Err(Error::InvalidArgument(format!(
            "shift {z} is not a multiple of the spacing {h}"
        )));
    }
    if z.abs() >= grid.length() {
        return Err(Error::InvalidArgument(format!(
            "shift {z} exceeds the box length {}",
            grid.length()
        )));
    }
    let steps = steps.abs() as usize;
    let len = grid.len() - steps;
    let start = if z >= 0.0 { 0 } else { steps };
    Ok((start, len, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(half: f64, n: usize) -> Grid1D {
        Grid1D::new(-half, half, n).unwrap()
    }

    fn poisson_spec() -> FieldSpec {
        FieldSpec::Poisson {
            rho: 1.5,
            profile: ProfileFunction::Bump {
                amplitude: 0.5,
                half_width: 0.6,
            },
        }
    }

    #[test]
    fn constant_potential_is_linear() {
        let g = grid(10.0, 2001);
        let f = sample_field(&FieldSpec::Constant { b0: 1.0 }, &g, None).unwrap();
        assert!(f.values.iter().all(|&b| b == 1.0));
        let a = vector_potential(&f);
        for (x, a) in g.points().zip(&a.values) {
            assert!((a - x).abs() < 1e-12, "{x} {a}");
        }
        assert_eq!(a.values[g.origin_index()], 0.0);
    }

    #[test]
    fn step_tie_and_potential() {
        let g = grid(10.0, 201);
        let f = sample_field(
            &FieldSpec::Step {
                b_left: -1.0,
                b_right: 1.0,
            },
            &g,
            None,
        )
        .unwrap();
        assert_eq!(f.values[100], 1.0);
        assert_eq!(f.values[99], -1.0);
        let a = vector_potential(&f);
        let h = g.spacing();
        for (x, a) in g.points().zip(&a.values) {
            // one cell of quadrature error at the jump
            assert!((a - x.abs()).abs() <= h + 1e-12);
        }
        assert!(spatial_mean(&f).abs() <= h);
        assert!((growth_rate(&a) - 1.0).abs() <= h);
    }

    #[test]
    fn random_specs_need_a_seed_and_are_reproducible() {
        let g = grid(10.0, 501);
        assert!(matches!(
            sample_field(&poisson_spec(), &g, None),
            Err(Error::MissingSeed)
        ));
        let a = sample_field(&poisson_spec(), &g, Some(5)).unwrap();
        let b = sample_field(&poisson_spec(), &g, Some(5)).unwrap();
        let c = sample_field(&poisson_spec(), &g, Some(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn impurities_reproduce_the_field() {
        let g = grid(8.0, 801);
        let spec = poisson_spec();
        let field = sample_field(&spec, &g, Some(11)).unwrap();
        let points = poisson_impurities(&spec, &g, 11).unwrap();
        let FieldSpec::Poisson { profile, .. } = &spec else {
            unreachable!()
        };
        assert_eq!(
            superpose(&g, profile, points.iter().map(|&y| (y, 1.0))),
            field.values
        );
    }

    #[test]
    fn metric_of_unit_difference() {
        let g = grid(10.0, 2001);
        let one = sample_field(&FieldSpec::Constant { b0: 1.0 }, &g, None).unwrap();
        let zero =
            FieldRealization::from_values(g, vec![0.0; g.len()], one.spec.clone(), None).unwrap();
        // cells [-10, 10]: sum_{j=-10}^{9} 2^-|j| = 3 - 2^-10 - 2^-9 ... evaluated directly
        let expected: f64 = (-10..=9).map(|j: i32| 2f64.powi(-j.abs())).sum();
        assert!((field_metric(&one, &zero).unwrap() - expected).abs() < 1e-12);
        assert!((field_metric_tail_bound(&g).unwrap() - (3.0 - expected)).abs() < 1e-12);
        assert_eq!(field_metric(&one, &one).unwrap(), 0.0);
        let off = Grid1D::new(-10.0, 10.0, 301).unwrap();
        let other = sample_field(&FieldSpec::Constant { b0: 1.0 }, &off, None).unwrap();
        assert!(field_metric(&one, &other).is_err());
    }

    #[test]
    fn shift_reevaluates_the_step() {
        let g = grid(10.0, 201);
        let f = sample_field(
            &FieldSpec::Step {
                b_left: -1.0,
                b_right: 1.0,
            },
            &g,
            None,
        )
        .unwrap();
        let s = shift_field(&f, 1.0).unwrap();
        assert_eq!(s.grid.len(), 191);
        for (x, b) in s.grid.points().zip(&s.values) {
            let expected = if x + 1.0 >= -1e-9 { 1.0 } else { -1.0 };
            assert_eq!(*b, expected, "x = {x}");
        }
        let back = shift_field(&f, -1.0).unwrap();
        for (x, b) in back.grid.points().zip(&back.values) {
            let expected = if x - 1.0 >= -1e-9 { 1.0 } else { -1.0 };
            assert_eq!(*b, expected, "x = {x}");
        }
        assert!(shift_field(&f, 0.05).is_err());
        assert_eq!(shift_field(&f, 0.0).unwrap(), f);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn potential_is_linear(alpha in -3.0..3.0f64, beta in -3.0..3.0f64, s1 in 0u64..1000, s2 in 0u64..1000) {
            let g = grid(6.0, 241);
            let b1 = sample_field(&poisson_spec(), &g, Some(s1)).unwrap();
            let b2 = sample_field(&poisson_spec(), &g, Some(s2)).unwrap();
            let combo: Vec<f64> = b1.values.iter().zip(&b2.values).map(|(x, y)| alpha * x + beta * y).collect();
            let bc = FieldRealization::from_values(g, combo, b1.spec.clone(), None).unwrap();
            let (a1, a2, ac) = (vector_potential(&b1), vector_potential(&b2), vector_potential(&bc));
            for i in 0..g.len() {
                let lin = alpha * a1.values[i] + beta * a2.values[i];
                prop_assert!((ac.values[i] - lin).abs() <= 1e-12 * (1.0 + lin.abs()));
            }
        }

        #[test]
        fn positive_field_has_increasing_potential(seed in 0u64..10_000) {
            let g = grid(6.0, 241);
            let spec = FieldSpec::Poisson { rho: 3.0, profile: ProfileFunction::Bump { amplitude: 1.0, half_width: 1.0 } };
            let f = sample_field(&spec, &g, Some(seed)).unwrap();
            let shifted = FieldRealization::from_values(g, f.values.iter().map(|b| b + 0.1).collect(), spec, None).unwrap();
            let a = vector_potential(&shifted);
            prop_assert!(a.values.windows(2).all(|w| w[1] > w[0]));
        }

        #[test]
        fn metric_is_a_pseudometric(s1 in 0u64..500, s2 in 0u64..500, s3 in 0u64..500) {
            let g = grid(5.0, 201);
            let f = |s| sample_field(&poisson_spec(), &g, Some(s)).unwrap();
            let (x, y, z) = (f(s1), f(s2), f(s3));
            let dxy = field_metric(&x, &y).unwrap();
            prop_assert!((dxy - field_metric(&y, &x).unwrap()).abs() < 1e-15);
            prop_assert!(dxy <= field_metric(&x, &z).unwrap() + field_metric(&z, &y).unwrap() + 1e-12);
            prop_assert!(dxy <= 3.0);
        }
    }
}
