use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stationary covariance function `c(x)` of a Gaussian field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceModel {
    /// `variance * exp(-x^2 / (2 l^2))`
    GaussianKernel {
        variance: f64,
        correlation_length: f64,
    },
    /// `variance * exp(-|x| / l)`
    ExponentialKernel {
        variance: f64,
        correlation_length: f64,
    },
    /// Linear interpolation of `values` over `lags` in `|x|`, zero past the last lag.
    Tabulated { lags: Vec<f64>, values: Vec<f64> },
}

impl CovarianceModel {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            CovarianceModel::GaussianKernel {
                variance,
                correlation_length,
            } => {
                let r = x / correlation_length;
                variance * (-0.5 * r * r).exp()
            }
            CovarianceModel::ExponentialKernel {
                variance,
                correlation_length,
            } => variance * (-x.abs() / correlation_length).exp(),
            CovarianceModel::Tabulated { lags, values } => {
                interpolate(lags, values, x.abs()).unwrap_or(0.0)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn is_tabulated(&self) -> bool {
        matches!(self, CovarianceModel::Tabulated { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceModel::GaussianKernel {
                variance,
                correlation_length,
            }
            | CovarianceModel::ExponentialKernel {
                variance,
                correlation_length,
            } => {
                if !(*variance >= 0.0) || !variance.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "covariance variance must be >= 0, got {variance}"
                    )));
                }
                if !(*correlation_length > 0.0) || !correlation_length.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "correlation length must be > 0, got {correlation_length}"
                    )));
                }
            }
            CovarianceModel::Tabulated { lags, values } => {
                check_table(lags, values, "covariance")?;
                if lags[0] != 0.0 {
                    return Err(Error::InvalidSpec(
                        "tabulated covariance must start at lag 0".into(),
                    ));
                }
                if values[0] < 0.0 || values.iter().any(|v| v.abs() > values[0]) {
                    return Err(Error::InvalidSpec(
                        "tabulated covariance must satisfy c(0) >= |c(x)|".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Single-impurity profile `u` of shot-noise and lattice fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileFunction {
    /// Raised-cosine bump `amplitude * (1 + cos(pi x / half_width))` on `|x| < half_width`.
    /// Its integral is `2 * amplitude * half_width`.
    Bump { amplitude: f64, half_width: f64 },
    /// Linear interpolation of `values` over `offsets`, zero outside.
    Tabulated { offsets: Vec<f64>, values: Vec<f64> },
}

impl ProfileFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            ProfileFunction::Bump {
                amplitude,
                half_width,
            } => {
                if x.abs() < *half_width {
                    amplitude * (1.0 + (std::f64::consts::PI * x / half_width).cos())
                } else {
                    0.0
                }
            }
            ProfileFunction::Tabulated { offsets, values } => {
                interpolate(offsets, values, x).unwrap_or(0.0)
            }
        }
    }

    /// Half-width of an interval centred at 0 outside which `u` vanishes.
    pub fn support_radius(&self) -> f64 {
        match self {
            ProfileFunction::Bump { half_width, .. } => *half_width,
            ProfileFunction::Tabulated { offsets, .. } => offsets
                .first()
                .map_or(0.0, |f| f.abs())
                .max(offsets.last().map_or(0.0, |l| l.abs())),
        }
    }

    pub fn integral(&self) -> f64 {
        match self {
            ProfileFunction::Bump {
                amplitude,
                half_width,
            } => 2.0 * amplitude * half_width,
            ProfileFunction::Tabulated { offsets, values } => {
                trapezoid_table(offsets, values, |v| v)
            }
        }
    }

    pub fn abs_integral(&self) -> f64 {
        match self {
            ProfileFunction::Bump {
                amplitude,
                half_width,
            } => 2.0 * amplitude.abs() * half_width,
            // linear pieces that cross zero are split at the root
            ProfileFunction::Tabulated { offsets, values } => offsets
                .windows(2)
                .zip(values.windows(2))
                .map(|(x, v)| {
                    let dx = x[1] - x[0];
                    if v[0] * v[1] >= 0.0 {
                        0.5 * dx * (v[0].abs() + v[1].abs())
                    } else {
                        0.5 * dx * (v[0] * v[0] + v[1] * v[1]) / (v[0].abs() + v[1].abs())
                    }
                })
                .sum(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ProfileFunction::Bump {
                amplitude,
                half_width,
            } => {
                if !amplitude.is_finite() || !(*half_width > 0.0) || !half_width.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "bump needs finite amplitude and positive half-width, got {amplitude}, {half_width}"
                    )));
                }
            }
            ProfileFunction::Tabulated { offsets, values } => {
                check_table(offsets, values, "profile")?
            }
        }
        if self.integral() == 0.0 {
            return Err(Error::InvalidSpec(
                "profile must have a non-zero integral".into(),
            ));
        }
        Ok(())
    }
}

/// Common law of the lattice couplings `g_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionModel {
    Uniform { low: f64, high: f64 },
    Normal { mean: f64, std_dev: f64 },
    Discrete { values: Vec<f64>, weights: Vec<f64> },
}

impl DistributionModel {
    pub fn mean(&self) -> f64 {
        match self {
            DistributionModel::Uniform { low, high } => 0.5 * (low + high),
            DistributionModel::Normal { mean, .. } => *mean,
            DistributionModel::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            DistributionModel::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            DistributionModel::Normal { mean, std_dev } => Normal::new(*mean, *std_dev)
                .expect("validated std_dev")
                .sample(rng),
            DistributionModel::Discrete { values, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (v, w) in values.iter().zip(weights) {
                    if u < *w {
                        return *v;
                    }
                    u -= w;
                }
                *values.last().expect("validated non-empty")
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            DistributionModel::Uniform { low, high } => {
                low.is_finite() && high.is_finite() && low <= high
            }
            DistributionModel::Normal { mean, std_dev } => {
                mean.is_finite() && *std_dev >= 0.0 && std_dev.is_finite()
            }
            DistributionModel::Discrete { values, weights } => {
                !values.is_empty()
                    && values.len() == weights.len()
                    && weights.iter().all(|w| *w >= 0.0)
                    && weights.iter().sum::<f64>() > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!(
                "invalid coupling distribution {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mu: f64,
    pub covariance: CovarianceModel,
}

/// Magnetic-field profile `b(x)`, deterministic or random.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    Constant {
        b0: f64,
    },
    /// `b_left` for `x < 0`, `b_right` for `x >= 0`.
    Step {
        b_left: f64,
        b_right: f64,
    },
    /// Iwatsuka-type profile interpolating between two constant values over `width`.
    Tanh {
        b_minus_inf: f64,
        b_plus_inf: f64,
        width: f64,
    },
    Gaussian(GaussianSpec),
    /// `b_minus + g^2` with `g` drawn from `inner`.
    SquaredGaussian {
        b_minus: f64,
        inner: GaussianSpec,
    },
    /// Shot noise `sum_p u(x - y_p)` over a Poisson point set of intensity `rho`.
    Poisson {
        rho: f64,
        profile: ProfileFunction,
    },
    /// `sum_j g_j u(x - j)` over integer sites with i.i.d. couplings.
    LatticeIid {
        distribution: DistributionModel,
        profile: ProfileFunction,
    },
}

impl FieldSpec {
    pub fn is_random(&self) -> bool {
        !matches!(
            self,
            FieldSpec::Constant { .. } | FieldSpec::Step { .. } | FieldSpec::Tanh { .. }
        )
    }

    /// Short identifier used in file names and summaries.
    pub fn id(&self) -> &'static str {
        match self {
            FieldSpec::Constant { .. } => "constant",
            FieldSpec::Step { .. } => "step",
            FieldSpec::Tanh { .. } => "tanh",
            FieldSpec::Gaussian(_) => "gaussian",
            FieldSpec::SquaredGaussian { .. } => "squared_gaussian",
            FieldSpec::Poisson { .. } => "poisson",
            FieldSpec::LatticeIid { .. } => "lattice_iid",
        }
    }

    /// Expected value of `b(x)` (for deterministic specs, the mean of the two asymptotes).
    pub fn mean_value(&self) -> f64 {
        match self {
            FieldSpec::Constant { b0 } => *b0,
            FieldSpec::Step { b_left, b_right } => 0.5 * (b_left + b_right),
            FieldSpec::Tanh {
                b_minus_inf,
                b_plus_inf,
                ..
            } => 0.5 * (b_minus_inf + b_plus_inf),
            FieldSpec::Gaussian(g) => g.mu,
            FieldSpec::SquaredGaussian { b_minus, inner } => {
                b_minus + inner.mu * inner.mu + inner.covariance.variance()
            }
            FieldSpec::Poisson { rho, profile } => rho * profile.integral(),
            FieldSpec::LatticeIid {
                distribution,
                profile,
            } => distribution.mean() * profile.integral(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{what} must be finite")))
            }
        };
        match self {
            FieldSpec::Constant { b0 } => {
                finite(*b0, "b0")?;
                if *b0 == 0.0 {
                    return Err(Error::InvalidSpec("constant field must be non-zero".into()));
                }
            }
            FieldSpec::Step { b_left, b_right } => {
                finite(*b_left, "b_left")?;
                finite(*b_right, "b_right")?;
            }
            FieldSpec::Tanh {
                b_minus_inf,
                b_plus_inf,
                width,
            } => {
                finite(*b_minus_inf, "b_minus_inf")?;
                finite(*b_plus_inf, "b_plus_inf")?;
                if !(*width > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "tanh width must be > 0, got {width}"
                    )));
                }
            }
            FieldSpec::Gaussian(g) => validate_gaussian(g)?,
            FieldSpec::SquaredGaussian { b_minus, inner } => {
                if !(*b_minus > 0.0) || !b_minus.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "squared-Gaussian infimum must be > 0, got {b_minus}"
                    )));
                }
                inner.covariance.validate()?;
                finite(inner.mu, "mu")?;
            }
            FieldSpec::Poisson { rho, profile } => {
                if !(*rho > 0.0) || !rho.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "Poisson intensity must be > 0, got {rho}"
                    )));
                }
                profile.validate()?;
            }
            FieldSpec::LatticeIid {
                distribution,
                profile,
            } => {
                distribution.validate()?;
                profile.validate()?;
                if distribution.mean() == 0.0 {
                    return Err(Error::InvalidSpec(
                        "lattice coupling law must have non-zero mean".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Value of a deterministic profile at `x`; `None` for random specs.
    ///
    /// `tie` is the tolerance below which `|x|` counts as the origin, where a
    /// step takes its right limit.
    pub fn deterministic_value(&self, x: f64, tie: f64) -> Option<f64> {
        match self {
            FieldSpec::Constant { b0 } => Some(*b0),
            FieldSpec::Step { b_left, b_right } => Some(if x >= -tie { *b_right } else { *b_left }),
            FieldSpec::Tanh {
                b_minus_inf,
                b_plus_inf,
                width,
            } => Some(
                0.5 * (b_minus_inf + b_plus_inf)
                    + 0.5 * (b_plus_inf - b_minus_inf) * (x / width).tanh(),
            ),
            _ => None,
        }
    }
}

pub(crate) fn validate_gaussian(g: &GaussianSpec) -> Result<()> {
    if !g.mu.is_finite() || g.mu == 0.0 {
        return Err(Error::InvalidSpec(format!(
            "Gaussian mean must be finite and non-zero, got {}",
            g.mu
        )));
    }
    g.covariance.validate()
}

fn check_table(xs: &[f64], ys: &[f64], what: &str) -> Result<()> {
    if xs.len() < 2 || xs.len() != ys.len() {
        return Err(Error::InvalidSpec(format!(
            "tabulated {what} needs >= 2 rows of matching length"
        )));
    }
    if xs.windows(2).any(|w| !(w[1] > w[0])) || xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "tabulated {what} must have finite, strictly increasing abscissae"
        )));
    }
    Ok(())
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.is_empty() || x < xs[0] || x > xs[xs.len() - 1] {
        return None;
    }
    let i = xs.partition_point(|&v| v <= x);
    if i == xs.len() {
        return Some(ys[ys.len() - 1]);
    }
    let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

fn trapezoid_table(xs: &[f64], ys: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (f(y[0]) + f(y[1])))
        .sum()
}
