//! Stationary Gaussian fields: circulant-embedding sampler and the
//! Karhunen-Loeve sampler built on a discretized Mercer expansion.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::FftPlanner;

use super::spec::{validate_gaussian, CovarianceModel, FieldSpec, GaussianSpec};
use super::FieldRealization;
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::rng::field_rng;

/// Largest fraction of spectral mass the embedding may discard.
pub const MAX_CLIPPED_FRACTION: f64 = 0.01;

/// Negative embedding eigenvalues below this fraction of the largest are rounding noise.
const EMBEDDING_TOLERANCE: f64 = 1e-10;

/// Circulant embedding of a stationary covariance on a grid.
///
/// The covariance row of the `n`-point grid is mirrored onto a circle of
/// `2(n - 1)` points; the FFT of that row gives the eigenvalues of the
/// circulant matrix, whose square roots scale white noise in Fourier space.
#[derive(Debug, Clone)]
pub struct CirculantEmbedding {
    n: usize,
    /// `sqrt(max(lambda, 0) / M)` per Fourier mode.
    scale: Vec<f64>,
    clipped_fraction: f64,
}

impl CirculantEmbedding {
    pub fn new(cov: &CovarianceModel, grid: &Grid1D) -> Result<Self> {
        cov.validate()?;
        let n = grid.len();
        let m = 2 * (n - 1);
        let h = grid.spacing();
        let mut row: Vec<Complex64> = (0..m)
            .map(|j| {
                let lag = j.min(m - j) as f64 * h;
                Complex64::new(cov.eval(lag), 0.0)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut row);

        let lambda: Vec<f64> = row.iter().map(|z| z.re).collect();
        let max = lambda.iter().cloned().fold(0.0, f64::max);
        let min = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = EMBEDDING_TOLERANCE * max.max(f64::MIN_POSITIVE);
        if cov.is_tabulated() && min < -tol {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: min,
                max_eigenvalue: max,
            });
        }
        let negative: f64 = lambda.iter().filter(|l| **l < 0.0).map(|l| -l).sum();
        let total: f64 = lambda.iter().map(|l| l.abs()).sum();
        let clipped_fraction = if total > 0.0 { negative / total } else { 0.0 };
        if clipped_fraction > MAX_CLIPPED_FRACTION {
            return Err(Error::ClippedMass {
                fraction: clipped_fraction,
                limit: MAX_CLIPPED_FRACTION,
            });
        }
        if min < -tol {
            log::warn!(
                "circulant embedding: clipped negative eigenvalues (min {min:.3e}, {:.3e} of spectral mass)",
                clipped_fraction
            );
        }
        let scale = lambda
            .iter()
            .map(|l| (l.max(0.0) / m as f64).sqrt())
            .collect();
        Ok(CirculantEmbedding {
            n,
            scale,
            clipped_fraction,
        })
    }

    pub fn clipped_fraction(&self) -> f64 {
        self.clipped_fraction
    }

    /// One zero-mean sample on the grid.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let m = self.scale.len();
        let mut modes: Vec<Complex64> = self
            .scale
            .iter()
            .map(|s| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(s * re, s * im)
            })
            .collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut modes);
        modes[..self.n].iter().map(|z| z.re).collect()
    }
}

/// Stationary Gaussian realization with mean `mu` via circulant embedding.
pub fn sample_gaussian_circulant(
    spec: &GaussianSpec,
    grid: &Grid1D,
    seed: u64,
) -> Result<FieldRealization> {
    validate_gaussian(spec)?;
    let values = circulant_values(spec, grid, &mut field_rng(seed))?;
    Ok(FieldRealization::new(
        *grid,
        values,
        FieldSpec::Gaussian(spec.clone()),
        Some(seed),
    ))
}

pub(crate) fn circulant_values<R: Rng + ?Sized>(
    spec: &GaussianSpec,
    grid: &Grid1D,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if spec.covariance.variance() == 0.0 {
        return Ok(vec![spec.mu; grid.len()]);
    }
    let embedding = CirculantEmbedding::new(&spec.covariance, grid)?;
    Ok(embedding
        .sample(rng)
        .into_iter()
        .map(|g| spec.mu + g)
        .collect())
}

/// Discretized Mercer expansion of a covariance on `[-half_length, half_length]`.
#[derive(Debug, Clone)]
pub struct MercerBasis {
    /// Grid indices `[start, start + len)` covered by the interval.
    pub start: usize,
    pub len: usize,
    /// Eigenvalues `c_j`, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions on the covered points, orthonormal with weight `h`.
    pub eigenfunctions: Vec<Vec<f64>>,
}

/// The `m` largest eigenpairs of the integral operator with kernel `c(x - y)`
/// on `[-half_length, half_length]`, discretized as `h * [c(x_i - x_j)]`.
pub fn mercer_eigenpairs(
    cov: &CovarianceModel,
    grid: &Grid1D,
    half_length: f64,
    m: usize,
) -> Result<MercerBasis> {
    cov.validate()?;
    if m == 0 {
        return Err(Error::InvalidArgument(
            "Mercer expansion needs m >= 1".into(),
        ));
    }
    if !(half_length > 0.0)
        || -half_length < grid.x_min() - 1e-9
        || half_length > grid.x_max() + 1e-9
    {
        return Err(Error::InvalidArgument(format!(
            "interval [-{half_length}, {half_length}] is not inside the grid [{}, {}]",
            grid.x_min(),
            grid.x_max()
        )));
    }
    let h = grid.spacing();
    let slack = 1e-9 * h;
    let idx: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.x(i).abs() <= half_length + slack)
        .collect();
    let (start, len) = (idx[0], idx.len());
    if m > len {
        return Err(Error::InvalidArgument(format!(
            "requested {m} eigenpairs but the interval holds {len} grid points"
        )));
    }
    let kernel = DMatrix::from_fn(len, len, |i, j| {
        h * cov.eval(grid.x(start + i) - grid.x(start + j))
    });
    let eig = SymmetricEigen::new(kernel);
    let mut order: Vec<usize> = (0..len).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let norm = 1.0 / h.sqrt();
    let (eigenvalues, eigenfunctions) = order
        .into_iter()
        .take(m)
        .map(|j| {
            let col = eig.eigenvectors.column(j);
            let mut phi: Vec<f64> = col.iter().map(|v| v * norm).collect();
            if phi
                .iter()
                .find(|v| v.abs() > 1e-8)
                .is_some_and(|v| *v < 0.0)
            {
                phi.iter_mut().for_each(|v| *v = -*v);
            }
            (eig.eigenvalues[j], phi)
        })
        .unzip();
    Ok(MercerBasis {
        start,
        len,
        eigenvalues,
        eigenfunctions,
    })
}

/// Karhunen-Loeve sampler `b = mu + sum_j gamma_j phi_j` with independent
/// `gamma_j ~ N(0, c_j)`; the field equals `mu` outside the expansion interval.
#[derive(Debug, Clone)]
pub struct KarhunenLoeve {
    grid: Grid1D,
    mu: f64,
    basis: Option<MercerBasis>,
}

impl KarhunenLoeve {
    pub fn new(spec: &GaussianSpec, grid: &Grid1D, half_length: f64, m: usize) -> Result<Self> {
        validate_gaussian(spec)?;
        let basis = if m == 0 {
            None
        } else {
            Some(mercer_eigenpairs(&spec.covariance, grid, half_length, m)?)
        };
        Ok(KarhunenLoeve {
            grid: *grid,
            mu: spec.mu,
            basis,
        })
    }

    pub fn basis(&self) -> Option<&MercerBasis> {
        self.basis.as_ref()
    }

    /// Draw the coefficients `gamma_j`.
    pub fn coefficients<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.basis.as_ref().map_or_else(Vec::new, |b| {
            b.eigenvalues
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c.max(0.0).sqrt() * z
                })
                .collect()
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let gamma = self.coefficients(rng);
        self.synthesize(&gamma)
    }

    pub fn synthesize(&self, gamma: &[f64]) -> Vec<f64> {
        let mut values = vec![self.mu; self.grid.len()];
        if let Some(b) = &self.basis {
            for (g, phi) in gamma.iter().zip(&b.eigenfunctions) {
                for (v, p) in values[b.start..b.start + b.len].iter_mut().zip(phi) {
                    *v += g * p;
                }
            }
        }
        values
    }
}

pub fn sample_gaussian_kl(
    spec: &GaussianSpec,
    grid: &Grid1D,
    half_length: f64,
    m: usize,
    seed: u64,
) -> Result<FieldRealization> {
    let kl = KarhunenLoeve::new(spec, grid, half_length, m)?;
    let values = kl.sample(&mut field_rng(seed));
    Ok(FieldRealization::new(
        *grid,
        values,
        FieldSpec::Gaussian(spec.clone()),
        Some(seed),
    ))
}
