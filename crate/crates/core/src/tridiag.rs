//! Lowest eigenpairs of a real symmetric tridiagonal matrix.
//!
//! Eigenvalues come from Sturm-sequence bisection, which converges to full
//! working precision independently for every index. Eigenvectors come from
//! inverse iteration with a pivoted tridiagonal LU factorization, followed by
//! a modified Gram-Schmidt pass against the vectors already found.

/// Symmetric tridiagonal matrix stored as its diagonal and first off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

/// Why an eigenpair could not be delivered.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveFailure {
    pub index: usize,
    pub residual: f64,
}

const MAX_BISECTION_STEPS: usize = 256;
const INVERSE_ITERATIONS: usize = 3;

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(
            !diag.is_empty() && off.len() + 1 == diag.len(),
            "off-diagonal must be one shorter than the diagonal"
        );
        SymTridiagonal { diag, off }
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.order();
        (0..n).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            (lo.min(self.diag[i] - r), hi.max(self.diag[i] + r))
        })
    }

    /// Infinity-norm bound `max(|lo|, |hi|)` of the Gershgorin interval.
    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }

    fn pivmin(&self) -> f64 {
        let e2 = self.off.iter().fold(1.0f64, |m, e| m.max(e * e));
        f64::MIN_POSITIVE * e2
    }

    /// Number of eigenvalues strictly below `x` (Sturm count).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = self.pivmin();
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.order() {
            if i > 0 {
                let e = self.off[i - 1];
                q = self.diag[i] - x - e * e / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `count` smallest eigenvalues, ascending, by bisection.
    pub fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let n = self.order();
        assert!(
            count <= n,
            "asked for {count} eigenvalues of an order-{n} matrix"
        );
        let (g_lo, g_hi) = self.gershgorin();
        let width = (g_hi - g_lo).max(f64::MIN_POSITIVE);
        let pivmin = self.pivmin();
        let mut values = Vec::with_capacity(count);
        let mut floor = g_lo - 2.0 * f64::EPSILON * width - pivmin;
        for j in 0..count {
            let mut lo = floor;
            let mut hi = g_hi + 2.0 * f64::EPSILON * width + pivmin;
            for _ in 0..MAX_BISECTION_STEPS {
                let tol = 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) + pivmin;
                if hi - lo <= tol {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if self.count_below(mid) > j {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let value = 0.5 * (lo + hi);
            values.push(value);
            floor = lo;
        }
        values
    }

    /// `y = T x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.order();
        (0..n)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.off[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Eigenvector for the eigenvalue `lambda`, unit 2-norm, orthogonalized against `previous`.
    fn eigenvector(&self, lambda: f64, previous: &[Vec<f64>], seed: u64) -> Vec<f64> {
        let lu = ShiftedLu::factor(self, lambda);
        let mut x = start_vector(self.order(), seed);
        for _ in 0..INVERSE_ITERATIONS {
            lu.solve_in_place(&mut x);
            orthogonalize(&mut x, previous);
            normalize(&mut x);
        }
        x
    }

    /// The `count` lowest eigenpairs with unit 2-norm eigenvectors.
    pub fn lowest_eigenpairs(
        &self,
        count: usize,
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>), SolveFailure> {
        let values = self.lowest_eigenvalues(count);
        let norm = self.norm_bound().max(f64::MIN_POSITIVE);
        let tol = 1e3 * f64::EPSILON * norm * (self.order() as f64).sqrt();
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
        for (j, &lambda) in values.iter().enumerate() {
            let v = self.eigenvector(lambda, &vectors, j as u64);
            let r = residual(self, lambda, &v);
            if !(r <= tol) {
                return Err(SolveFailure {
                    index: j,
                    residual: r,
                });
            }
            vectors.push(v);
        }
        Ok((values, vectors))
    }
}

fn residual(t: &SymTridiagonal, lambda: f64, v: &[f64]) -> f64 {
    t.apply(v)
        .iter()
        .zip(v)
        .map(|(tv, x)| (tv - lambda * x).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Deterministic start vector with no special symmetry.
fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15u64 ^ seed.wrapping_mul(0xD1B5_4A32_D192_ED03);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return;
    }
    x.iter_mut().for_each(|v| *v /= scale);
    let nrm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    x.iter_mut().for_each(|v| *v /= nrm);
}

fn orthogonalize(x: &mut [f64], previous: &[Vec<f64>]) {
    for p in previous {
        let dot: f64 = x.iter().zip(p).map(|(a, b)| a * b).sum();
        x.iter_mut().zip(p).for_each(|(a, b)| *a -= dot * b);
    }
}

/// LU factorization with partial pivoting of `T - lambda I`.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &SymTridiagonal, lambda: f64) -> Self {
        let n = t.order();
        let mut u0: Vec<f64> = t.diag.iter().map(|d| d - lambda).collect();
        let mut u1 = t.off.clone();
        let mut u2 = vec![0.0; n.saturating_sub(2)];
        let mut mult = vec![0.0; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * t.norm_bound().max(f64::MIN_POSITIVE);
        for i in 0..n.saturating_sub(1) {
            let sub = t.off[i];
            if u0[i].abs() >= sub.abs() {
                if u0[i] == 0.0 {
                    u0[i] = tiny;
                }
                let m = sub / u0[i];
                mult[i] = m;
                u0[i + 1] -= m * u1[i];
            } else {
                let m = u0[i] / sub;
                mult[i] = m;
                swapped[i] = true;
                let row_super = u1[i];
                let next_diag = u0[i + 1];
                u0[i] = sub;
                u1[i] = next_diag;
                if i + 1 < n - 1 {
                    u2[i] = u1[i + 1];
                    u1[i + 1] *= -m;
                }
                u0[i + 1] = row_super - m * next_diag;
            }
        }
        for u in u0.iter_mut() {
            if u.abs() < tiny {
                *u = if *u < 0.0 { -tiny } else { tiny };
            }
        }
        ShiftedLu {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve_in_place(&self, y: &mut [f64]) {
        let n = y.len();
        for i in 0..n - 1 {
            if self.swapped[i] {
                y.swap(i, i + 1);
            }
            y[i + 1] -= self.mult[i] * y[i];
        }
        y[n - 1] /= self.u0[n - 1];
        if n > 1 {
            y[n - 2] = (y[n - 2] - self.u1[n - 2] * y[n - 1]) / self.u0[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            y[i] = (y[i] - self.u1[i] * y[i + 1] - self.u2[i] * y[i + 2]) / self.u0[i];
        }
    }
}
