//! Wave packets in the fibered band basis: exact evolution, localization along
//! `x1` and ballistic transport along `x2`.
//!
//! A packet is stored as coefficients `c_n(k_j)` against the fiber
//! eigenfunctions of a [`FiberSweep`]. Norms and inner products use the
//! rectangle rule in `k`, `||psi||^2 = dk * sum_j sum_n |c_n(k_j)|^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bands::FiberSweep;
use crate::error::{Error, Result};
use crate::field::{growth_rate, VectorPotential};

/// Default minimum norm fraction kept by the band truncation.
pub const DEFAULT_MIN_CAPTURE: f64 = 0.999;
/// Largest allowed `|c|` at the k-window edges relative to the peak.
pub const EDGE_DECAY: f64 = 1e-6;
/// Below this `|t * delta|` the averaged phase uses its Taylor series.
const TAU_SERIES_CUTOFF: f64 = 1e-6;

/// The `x1` shape of a packet at each fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileChoice {
    /// The fiber ground state, so only the lowest band is populated.
    #[default]
    GroundState,
    /// A normalized Gaussian `(pi w^2)^(-1/4) exp(-(x - center)^2 / (2 w^2))`, the same at every k.
    Gaussian { center: f64, width: f64 },
}

fn default_min_capture() -> f64 {
    DEFAULT_MIN_CAPTURE
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    /// Center along `x2`, carried by the phase `exp(-i k x2_center)`.
    #[serde(default)]
    pub x2_center: f64,
    #[serde(default)]
    pub k_center: f64,
    /// Standard deviation of `|c(k)|^2` in k.
    pub sigma_k: f64,
    #[serde(default)]
    pub profile: ProfileChoice,
    #[serde(default = "default_min_capture")]
    pub min_capture: f64,
}

impl PacketSpec {
    pub fn ground_state(k_center: f64, sigma_k: f64) -> Self {
        PacketSpec {
            x2_center: 0.0,
            k_center,
            sigma_k,
            profile: ProfileChoice::GroundState,
            min_capture: DEFAULT_MIN_CAPTURE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_k > 0.0 && self.sigma_k.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "sigma_k must be positive, got {}",
                self.sigma_k
            )));
        }
        if !(self.x2_center.is_finite() && self.k_center.is_finite()) {
            return Err(Error::InvalidSpec("packet center must be finite".into()));
        }
        if let ProfileChoice::Gaussian { center, width } = self.profile {
            if !(width > 0.0 && width.is_finite() && center.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "Gaussian profile needs a positive width, got {width}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&self.min_capture) {
            return Err(Error::InvalidSpec(format!(
                "min_capture must lie in [0, 1], got {}",
                self.min_capture
            )));
        }
        Ok(())
    }
}

/// Band coefficients `c_n(k_j)` of a packet, `coefficients[j][n]`.
#[derive(Debug, Clone)]
pub struct FiberedWavePacket {
    pub sweep: Arc<FiberSweep>,
    pub coefficients: Vec<Vec<Complex64>>,
    /// Norm fraction kept by the band truncation at preparation.
    pub capture: f64,
    /// Time elapsed since preparation.
    pub time: f64,
}

impl FiberedWavePacket {
    fn with_coefficients(&self, coefficients: Vec<Vec<Complex64>>) -> Self {
        FiberedWavePacket {
            sweep: Arc::clone(&self.sweep),
            coefficients,
            capture: self.capture,
            time: self.time,
        }
    }

    fn dk(&self) -> f64 {
        self.sweep.kgrid.spacing()
    }

    pub fn norm(&self) -> f64 {
        norm(self)
    }

    /// `||psi||^2` weighted by the fiber energies, i.e. `||H^(1/2) psi||^2`.
    pub fn energy(&self) -> f64 {
        let per_k: Vec<f64> = self
            .coefficients
            .iter()
            .zip(&self.sweep.solutions)
            .map(|(c, sol)| {
                c.iter()
                    .zip(&sol.eigenvalues)
                    .map(|(c, e)| e * c.norm_sqr())
                    .sum()
            })
            .collect();
        self.dk() * per_k.iter().sum::<f64>()
    }

    /// `<self, other>` in the band basis; both must share the sweep.
    pub fn inner(&self, other: &FiberedWavePacket) -> Complex64 {
        let per_k: Vec<Complex64> = self
            .coefficients
            .iter()
            .zip(&other.coefficients)
            .map(|(a, b)| a.iter().zip(b).map(|(a, b)| a.conj() * b).sum())
            .collect();
        self.dk() * per_k.iter().sum::<Complex64>()
    }

    /// `x1`-wavefunction of fiber `j`, `sum_n c_n(k_j) phi_n(x)` on the grid.
    pub fn fiber_wavefunction(&self, j: usize) -> Vec<Complex64> {
        let sol = &self.sweep.solutions[j];
        let mut psi = vec![Complex64::new(0.0, 0.0); sol.grid.len()];
        for (c, phi) in self.coefficients[j].iter().zip(&sol.eigenvectors) {
            for (p, f) in psi.iter_mut().zip(phi) {
                *p += c * f;
            }
        }
        psi
    }
}

pub fn norm(packet: &FiberedWavePacket) -> f64 {
    let per_k: Vec<f64> = packet
        .coefficients
        .iter()
        .map(|c| c.iter().map(|c| c.norm_sqr()).sum())
        .collect();
    (packet.dk() * per_k.iter().sum::<f64>()).sqrt()
}

/// Build a Gaussian-in-k packet on the fibers of `sweep`, normalized after truncation.
pub fn prepare_packet(sweep: Arc<FiberSweep>, spec: &PacketSpec) -> Result<FiberedWavePacket> {
    spec.validate()?;
    let kgrid = sweep.kgrid;
    let envelope = |k: f64| {
        let d = k - spec.k_center;
        Complex64::from_polar(
            (-d * d / (4.0 * spec.sigma_k * spec.sigma_k)).exp(),
            -k * spec.x2_center,
        )
    };
    let n_bands = sweep.n_max + 1;

    let (coefficients, capture) = match spec.profile {
        ProfileChoice::GroundState => {
            let c = (0..kgrid.len())
                .map(|j| {
                    let mut row = vec![Complex64::new(0.0, 0.0); n_bands];
                    row[0] = envelope(kgrid.k(j));
                    row
                })
                .collect();
            (c, 1.0)
        }
        ProfileChoice::Gaussian { center, width } => {
            let grid = sweep.potential.grid;
            let h = grid.spacing();
            let scale = (PI * width * width).powf(-0.25);
            let chi: Vec<f64> = grid
                .points()
                .map(|x| scale * (-(x - center).powi(2) / (2.0 * width * width)).exp())
                .collect();
            let chi_norm2 = h * chi.iter().map(|v| v * v).sum::<f64>();
            let rows: Vec<(Vec<Complex64>, f64, f64)> = (0..kgrid.len())
                .into_par_iter()
                .map(|j| {
                    let g = envelope(kgrid.k(j));
                    let proj: Vec<f64> = sweep.solutions[j]
                        .eigenvectors
                        .iter()
                        .map(|phi| h * phi.iter().zip(&chi).map(|(p, c)| p * c).sum::<f64>())
                        .collect();
                    let kept = proj.iter().map(|p| p * p).sum::<f64>() * g.norm_sqr();
                    (
                        proj.iter().map(|p| g * p).collect(),
                        kept,
                        g.norm_sqr() * chi_norm2,
                    )
                })
                .collect();
            let kept: f64 = rows.iter().map(|r| r.1).sum();
            let total: f64 = rows.iter().map(|r| r.2).sum();
            (rows.into_iter().map(|r| r.0).collect(), kept / total)
        }
    };

    if capture < spec.min_capture {
        return Err(Error::CaptureTooLow {
            capture,
            minimum: spec.min_capture,
        });
    }

    let mut packet = FiberedWavePacket {
        sweep,
        coefficients,
        capture,
        time: 0.0,
    };
    let peak = packet
        .coefficients
        .iter()
        .flatten()
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    let edge = [0, kgrid.len() - 1]
        .iter()
        .flat_map(|&j| packet.coefficients[j].iter())
        .map(|c| c.norm())
        .fold(0.0, f64::max);
    if !(peak > 0.0) || edge > EDGE_DECAY * peak {
        return Err(Error::PacketNotDecaying {
            ratio: if peak > 0.0 {
                edge / peak
            } else {
                f64::INFINITY
            },
        });
    }
    let scale = 1.0 / packet.norm();
    for c in packet.coefficients.iter_mut().flatten() {
        *c *= scale;
    }
    Ok(packet)
}

/// Propagate by `t`: `c_n(k) -> exp(-i t eps_n(k)) c_n(k)`.
pub fn evolve(packet: &FiberedWavePacket, t: f64) -> FiberedWavePacket {
    let coefficients = packet
        .coefficients
        .par_iter()
        .zip(&packet.sweep.solutions)
        .map(|(c, sol)| {
            c.iter()
                .zip(&sol.eigenvalues)
                .map(|(c, e)| c * Complex64::from_polar(1.0, -t * e))
                .collect()
        })
        .collect();
    let mut out = packet.with_coefficients(coefficients);
    out.time += t;
    out
}

/// Per-fiber matrices in the band basis, all real symmetric and row-major.
#[derive(Debug, Clone)]
pub struct VelocityOperatorData {
    pub n_bands: usize,
    /// `d eps_n / dk` per fiber.
    pub velocities: Vec<Vec<f64>>,
    /// `<phi_n, (k - a) phi_m>`.
    pub velocity_matrix: Vec<Vec<f64>>,
    /// `<phi_n, x^2 phi_m>`.
    pub position_squared: Vec<Vec<f64>>,
    /// `<phi_n, a^2 phi_m>`.
    pub potential_squared: Vec<Vec<f64>>,
}

impl VelocityOperatorData {
    pub fn new(sweep: &FiberSweep) -> Self {
        let n_bands = sweep.n_max + 1;
        let a = &sweep.potential.values;
        let grid = sweep.potential.grid;
        let h = grid.spacing();
        let x: Vec<f64> = grid.points().collect();
        let x2: Vec<f64> = x.iter().map(|x| x * x).collect();
        let a2: Vec<f64> = a.iter().map(|a| a * a).collect();

        let gram = |phi: &[Vec<f64>], w: &[f64]| {
            let mut m = vec![0.0; n_bands * n_bands];
            for n in 0..n_bands {
                for l in n..n_bands {
                    let v = h * phi[n]
                        .iter()
                        .zip(&phi[l])
                        .zip(w)
                        .map(|((p, q), w)| p * q * w)
                        .sum::<f64>();
                    m[n * n_bands + l] = v;
                    m[l * n_bands + n] = v;
                }
            }
            m
        };
        let per_k: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = sweep
            .solutions
            .par_iter()
            .map(|sol| {
                let kma: Vec<f64> = a.iter().map(|a| sol.k - a).collect();
                (
                    gram(&sol.eigenvectors, &kma),
                    gram(&sol.eigenvectors, &x2),
                    gram(&sol.eigenvectors, &a2),
                )
            })
            .collect();
        let mut velocity_matrix = Vec::with_capacity(per_k.len());
        let mut position_squared = Vec::with_capacity(per_k.len());
        let mut potential_squared = Vec::with_capacity(per_k.len());
        for (m, q, p) in per_k {
            velocity_matrix.push(m);
            position_squared.push(q);
            potential_squared.push(p);
        }
        VelocityOperatorData {
            n_bands,
            velocities: sweep.velocities.clone(),
            velocity_matrix,
            position_squared,
            potential_squared,
        }
    }

    fn quadratic_form(&self, mats: &[Vec<f64>], packet: &FiberedWavePacket) -> f64 {
        let nb = self.n_bands;
        let per_k: Vec<f64> = mats
            .par_iter()
            .zip(&packet.coefficients)
            .map(|(m, c)| {
                let mut s = 0.0;
                for n in 0..nb {
                    for l in 0..nb {
                        s += m[n * nb + l] * (c[n].conj() * c[l]).re;
                    }
                }
                s
            })
            .collect();
        packet.dk() * per_k.iter().sum::<f64>()
    }
}

/// `||Q1 psi||`, the spread of the packet along `x1`.
pub fn q1_second_moment(packet: &FiberedWavePacket, data: &VelocityOperatorData) -> f64 {
    data.quadratic_form(&data.position_squared, packet)
        .max(0.0)
        .sqrt()
}

/// `||a(Q1) psi||`.
pub fn potential_norm(packet: &FiberedWavePacket, data: &VelocityOperatorData) -> f64 {
    data.quadratic_form(&data.potential_squared, packet)
        .max(0.0)
        .sqrt()
}

/// Time average of `exp(i s delta)` over `s` in `[0, t]`.
pub fn averaged_phase(delta: f64, t: f64) -> Complex64 {
    let x = t * delta;
    if x.abs() < TAU_SERIES_CUTOFF {
        Complex64::new(1.0 - x * x / 6.0, 0.5 * x)
    } else {
        Complex64::new(x.sin() / x, 2.0 * (0.5 * x).sin().powi(2) / x)
    }
}

/// `V_t psi`, the velocity along `x2` averaged over `[0, t]` in the Heisenberg picture.
pub fn time_averaged_velocity_apply(
    packet: &FiberedWavePacket,
    data: &VelocityOperatorData,
    t: f64,
) -> FiberedWavePacket {
    let nb = data.n_bands;
    let coefficients = packet
        .coefficients
        .par_iter()
        .zip(&packet.sweep.solutions)
        .zip(&data.velocity_matrix)
        .map(|((c, sol), m)| {
            let e = &sol.eigenvalues;
            (0..nb)
                .map(|n| {
                    (0..nb)
                        .map(|l| m[n * nb + l] * averaged_phase(e[n] - e[l], t) * c[l])
                        .sum()
                })
                .collect()
        })
        .collect();
    packet.with_coefficients(coefficients)
}

/// `V_inf psi`: multiply each band component by its group velocity.
pub fn asymptotic_velocity_apply(
    packet: &FiberedWavePacket,
    data: &VelocityOperatorData,
) -> FiberedWavePacket {
    let coefficients = packet
        .coefficients
        .iter()
        .zip(&data.velocities)
        .map(|(c, v)| c.iter().zip(v).map(|(c, v)| c * v).collect())
        .collect();
    packet.with_coefficients(coefficients)
}

/// `Q2 psi0 = i d/dk psi0` and the quantities the ballistic residual needs from it.
///
/// The derivative acts on the full `x1`-wavefunction of each fiber, so it
/// includes the k-dependence of the eigenfunctions.
#[derive(Debug, Clone)]
pub struct BallisticProbe {
    pub initial: FiberedWavePacket,
    /// `||Q2 psi0||^2`.
    pub q2_norm_squared: f64,
    /// `<phi_n(k_j), (Q2 psi0)(k_j)>`.
    pub projections: Vec<Vec<Complex64>>,
    /// `Re <psi0, Q2 psi0>`.
    pub q2_mean_initial: f64,
    asymptotic: FiberedWavePacket,
}

impl BallisticProbe {
    pub fn new(packet0: &FiberedWavePacket, data: &VelocityOperatorData) -> Result<Self> {
        let n_k = packet0.coefficients.len();
        if n_k < 3 {
            return Err(Error::InvalidArgument(
                "Q2 needs at least 3 k-points".into(),
            ));
        }
        let dk = packet0.dk();
        let h = packet0.sweep.potential.grid.spacing();
        let psi: Vec<Vec<Complex64>> = (0..n_k)
            .into_par_iter()
            .map(|j| packet0.fiber_wavefunction(j))
            .collect();
        let rows: Vec<(f64, Vec<Complex64>)> = (0..n_k)
            .into_par_iter()
            .map(|j| {
                let (lo, hi, span) = match j {
                    0 => (0, 1, dk),
                    j if j == n_k - 1 => (j - 1, j, dk),
                    j => (j - 1, j + 1, 2.0 * dk),
                };
                let factor = Complex64::new(0.0, 1.0 / span);
                let w: Vec<Complex64> = psi[hi]
                    .iter()
                    .zip(&psi[lo])
                    .map(|(a, b)| factor * (a - b))
                    .collect();
                let norm2 = h * w.iter().map(|w| w.norm_sqr()).sum::<f64>();
                let proj = packet0.sweep.solutions[j]
                    .eigenvectors
                    .iter()
                    .map(|phi| h * phi.iter().zip(&w).map(|(p, w)| p * w).sum::<Complex64>())
                    .collect();
                (norm2, proj)
            })
            .collect();
        let q2_norm_squared = dk * rows.iter().map(|r| r.0).sum::<f64>();
        let projections: Vec<Vec<Complex64>> = rows.into_iter().map(|r| r.1).collect();
        let mean: Complex64 = packet0
            .coefficients
            .iter()
            .zip(&projections)
            .map(|(c, p)| {
                c.iter()
                    .zip(p)
                    .map(|(c, p)| c.conj() * p)
                    .sum::<Complex64>()
            })
            .sum();
        Ok(BallisticProbe {
            initial: packet0.clone(),
            q2_norm_squared,
            projections,
            q2_mean_initial: dk * mean.re,
            asymptotic: asymptotic_velocity_apply(packet0, data),
        })
    }

    /// `||Q2 psi0 / t + V_t psi0 - V_inf psi0||`.
    pub fn residual(&self, data: &VelocityOperatorData, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Err(Error::InvalidArgument(
                "ballistic residual is undefined at t = 0".into(),
            ));
        }
        let vt = time_averaged_velocity_apply(&self.initial, data, t);
        let dk = self.initial.dk();
        let mut cross = 0.0;
        let mut u2 = 0.0;
        for ((vt, vinf), p) in vt
            .coefficients
            .iter()
            .zip(&self.asymptotic.coefficients)
            .zip(&self.projections)
        {
            for ((a, b), p) in vt.iter().zip(vinf).zip(p) {
                let u = a - b;
                cross += (p.conj() * u).re;
                u2 += u.norm_sqr();
            }
        }
        let r2 = self.q2_norm_squared / (t * t) + 2.0 * dk * cross / t + dk * u2;
        Ok(r2.max(0.0).sqrt())
    }

    /// `Re <psi_t, Q2 psi_t> = Re <psi0, Q2 psi0> + t Re <psi0, V_t psi0>`.
    pub fn q2_mean(&self, data: &VelocityOperatorData, t: f64) -> f64 {
        if t == 0.0 {
            return self.q2_mean_initial;
        }
        let vt = time_averaged_velocity_apply(&self.initial, data, t);
        self.q2_mean_initial + t * self.initial.inner(&vt).re
    }

    pub fn q2_norm(&self) -> f64 {
        self.q2_norm_squared.sqrt()
    }
}

pub fn ballistic_residual(
    packet0: &FiberedWavePacket,
    data: &VelocityOperatorData,
    t: f64,
) -> Result<f64> {
    BallisticProbe::new(packet0, data)?.residual(data, t)
}

/// The time-independent ceiling on `||Q1 psi_t||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationBound {
    /// Radius beyond which `|a(x)| >= growth_rate * |x| / 2` on the grid.
    pub r: f64,
    pub growth_rate: f64,
    /// `||H^(1/2) psi0||`.
    pub energy_norm: f64,
    /// `||a(Q1) psi0||`.
    pub potential_norm: f64,
    pub bound: f64,
}

/// `r + (2 / b) (2 sqrt(2) ||H^(1/2) psi0|| + ||a(Q1) psi0||)`, with `b` the
/// box estimate of the growth rate of `|a|`.
pub fn localization_bound(
    packet0: &FiberedWavePacket,
    data: &VelocityOperatorData,
    potential: &VectorPotential,
) -> Result<LocalizationBound> {
    let rate = growth_rate(potential);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "vector potential does not grow (rate {rate})"
        )));
    }
    let r = potential
        .grid
        .points()
        .zip(&potential.values)
        .filter(|(x, a)| a.abs() < 0.5 * rate * x.abs())
        .map(|(x, _)| x.abs())
        .fold(0.0, f64::max);
    let energy_norm = packet0.energy().max(0.0).sqrt();
    let a_norm = potential_norm(packet0, data);
    Ok(LocalizationBound {
        r,
        growth_rate: rate,
        energy_norm,
        potential_norm: a_norm,
        bound: r + (2.0 / rate) * (2.0 * 2f64.sqrt() * energy_norm + a_norm),
    })
}

/// Observables sampled along one evolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    pub energy: Vec<f64>,
    pub q1_second_moment: Vec<f64>,
    pub q2_mean: Vec<f64>,
    pub ballistic_residual: Vec<f64>,
}

impl ObservableSeries {
    pub fn max_norm_drift(&self) -> f64 {
        relative_drift(&self.norm)
    }

    pub fn max_energy_drift(&self) -> f64 {
        relative_drift(&self.energy)
    }
}

fn relative_drift(values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return 0.0;
    };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    values
        .iter()
        .map(|v| (v - first).abs() / scale)
        .fold(0.0, f64::max)
}

/// `n` log-spaced times from 1 to `horizon`.
pub fn log_times(horizon: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![horizon],
        _ => (0..n)
            .map(|i| horizon.powf(i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Evaluate all observables at `times` (each must be nonzero).
pub fn simulate(
    packet0: &FiberedWavePacket,
    data: &VelocityOperatorData,
    times: &[f64],
) -> Result<ObservableSeries> {
    let probe = BallisticProbe::new(packet0, data)?;
    let mut series = ObservableSeries {
        times: times.to_vec(),
        norm: Vec::with_capacity(times.len()),
        energy: Vec::with_capacity(times.len()),
        q1_second_moment: Vec::with_capacity(times.len()),
        q2_mean: Vec::with_capacity(times.len()),
        ballistic_residual: Vec::with_capacity(times.len()),
    };
    for &t in times {
        let psi = evolve(packet0, t);
        series.norm.push(psi.norm());
        series.energy.push(psi.energy());
        series.q1_second_moment.push(q1_second_moment(&psi, data));
        series.q2_mean.push(probe.q2_mean(data, t));
        series.ballistic_residual.push(probe.residual(data, t)?);
    }
    Ok(series)
}
