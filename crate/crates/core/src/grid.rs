use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on a closed interval `[x_min, x_max]` that contains the origin.
///
/// The spacing is stored rather than recomputed so that sub-windows keep the
/// parent spacing bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid1D {
    x_min: f64,
    spacing: f64,
    n_points: usize,
}

/// Serialized form of a [`Grid1D`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl TryFrom<GridSpec> for Grid1D {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid1D::new(spec.x_min, spec.x_max, spec.n_points)
    }
}

impl From<Grid1D> for GridSpec {
    fn from(grid: Grid1D) -> Self {
        GridSpec {
            x_min: grid.x_min,
            x_max: grid.x_max(),
            n_points: grid.n_points,
        }
    }
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 points, got {n_points}"
            )));
        }
        if x_min > 0.0 || x_max < 0.0 {
            return Err(Error::InvalidGrid(format!(
                "the origin must lie inside the box, got [{x_min}, {x_max}]"
            )));
        }
        let spacing = (x_max - x_min) / (n_points - 1) as f64;
        Ok(Grid1D {
            x_min,
            spacing,
            n_points,
        })
    }

    /// Grid on `[x_min, x_max]` with spacing at most `h`.
    pub fn with_spacing(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "spacing must be positive, got {h}"
            )));
        }
        let cells = ((x_max - x_min) / h - 1e-9).ceil().max(2.0) as usize;
        Grid1D::new(x_min, x_max, cells + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_min + (self.n_points - 1) as f64 * self.spacing
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn length(&self) -> f64 {
        self.x_max() - self.x_min
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Index of the grid point nearest to the origin (ties go to the lower index).
    pub fn origin_index(&self) -> usize {
        let raw = (-self.x_min / self.spacing).round();
        let i = raw.clamp(0.0, (self.n_points - 1) as f64) as usize;
        if i > 0 && self.x(i - 1).abs() <= self.x(i).abs() {
            i - 1
        } else {
            i
        }
    }

    /// Index of the grid point nearest to `x`, if `x` lies inside the box.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        let r = (x - self.x_min) / self.spacing;
        if r < -0.5 || r > (self.n_points - 1) as f64 + 0.5 {
            return None;
        }
        Some((r.round().max(0.0) as usize).min(self.n_points - 1))
    }

    /// Contiguous sub-grid of `len` points starting at index `start`, keeping the spacing.
    pub fn window(&self, start: usize, len: usize) -> Result<Grid1D> {
        if len < 3 || start + len > self.n_points {
            return Err(Error::InvalidGrid(format!(
                "window [{start}, {}) does not fit a grid of {} points",
                start + len,
                self.n_points
            )));
        }
        let x_min = self.x(start);
        let grid = Grid1D {
            x_min,
            spacing: self.spacing,
            n_points: len,
        };
        if grid.x_min > 1e-12 * self.spacing || grid.x_max() < -1e-12 * self.spacing {
            return Err(Error::InvalidGrid(format!(
                "window [{}, {}] no longer contains the origin",
                grid.x_min,
                grid.x_max()
            )));
        }
        Ok(grid)
    }

    /// True if `other` has the same points up to rounding.
    pub fn same_as(&self, other: &Grid1D) -> bool {
        self.n_points == other.n_points
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
            && (self.x_min - other.x_min).abs() <= 1e-9 * self.spacing
    }
}

/// Uniform grid of wave numbers `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KGrid {
    pub k_min: f64,
    pub k_max: f64,
    pub n_k: usize,
}

impl KGrid {
    pub fn new(k_min: f64, k_max: f64, n_k: usize) -> Result<Self> {
        if n_k < 2 {
            return Err(Error::InvalidArgument(format!(
                "k-grid needs at least 2 points, got {n_k}"
            )));
        }
        if !(k_min.is_finite() && k_max.is_finite()) || k_min >= k_max {
            return Err(Error::InvalidArgument(format!(
                "need k_min < k_max, got [{k_min}, {k_max}]"
            )));
        }
        Ok(KGrid { k_min, k_max, n_k })
    }

    pub fn spacing(&self) -> f64 {
        (self.k_max - self.k_min) / (self.n_k - 1) as f64
    }

    #[inline]
    pub fn k(&self, j: usize) -> f64 {
        self.k_min + j as f64 * self.spacing()
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n_k).map(|j| self.k(j)).collect()
    }

    pub fn len(&self) -> usize {
        self.n_k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Default k-window for a vector potential on a finite box.
    ///
    /// Starts from `[min a - m, max a + m]` with turning-point margin
    /// `m = sqrt(2 * target_energy)` and removes every `k` whose effective
    /// potential at either wall would fall below `wall_factor * target_energy`.
    /// The largest remaining interval is returned.
    pub fn covering(a: &[f64], target_energy: f64, wall_factor: f64, n_k: usize) -> Result<Self> {
        if a.len() < 2 || !(target_energy > 0.0) {
            return Err(Error::InvalidArgument(
                "covering k-grid needs a potential and a positive target energy".into(),
            ));
        }
        let (lo, hi) = a
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let margin = (2.0 * target_energy).sqrt();
        let wall_margin = (2.0 * wall_factor * target_energy).sqrt();
        let walls = [a[0], a[a.len() - 1]];

        // Candidate interval minus the open windows around the wall values.
        let mut pieces = vec![(lo - margin, hi + margin)];
        for w in walls {
            let (cut_lo, cut_hi) = (w - wall_margin, w + wall_margin);
            pieces = pieces
                .into_iter()
                .flat_map(|(p_lo, p_hi)| {
                    let mut out = Vec::with_capacity(2);
                    if cut_hi <= p_lo || cut_lo >= p_hi {
                        out.push((p_lo, p_hi));
                    } else {
                        if cut_lo > p_lo {
                            out.push((p_lo, cut_lo));
                        }
                        if cut_hi < p_hi {
                            out.push((cut_hi, p_hi));
                        }
                    }
                    out
                })
                .collect();
        }
        let best = pieces
            .into_iter()
            .filter(|(l, h)| h > l)
            .max_by(|x, y| (x.1 - x.0).total_cmp(&(y.1 - y.0)))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "box too small: no wave number keeps both walls above {wall_factor} x {target_energy}"
                ))
            })?;
        KGrid::new(best.0, best.1, n_k)
    }
}
