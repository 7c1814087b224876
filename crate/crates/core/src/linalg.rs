//! Small dense linear algebra: real eigenvalues via Hessenberg QR, Cholesky
//! solves, and a block power iteration for the dominant eigenvalue modulus of
//! a (large, sparse) operator.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{self, tags};

/// Iteration cap for [`dominant_modulus`].
pub const POWER_MAX_ITERS: usize = 500;
/// Relative change between successive Ritz estimates that counts as converged.
pub const POWER_REL_TOL: f64 = 1e-6;
/// Subspace width for [`dominant_modulus`].
pub const POWER_BLOCK: usize = 32;
const RITZ_EVERY: usize = 5;

/// Eigenvalues `(re, im)` of a dense row-major `n x n` matrix.
///
/// Reduces to upper Hessenberg form by stabilized elimination and then runs
/// the Francis double-shift QR iteration. Order of the output is unspecified.
pub fn eigenvalues(matrix: &[f64], n: usize) -> Result<Vec<(f64, f64)>> {
    if matrix.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            actual: matrix.len(),
        });
    }
    if let Some(index) = matrix.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut a = Hess::new(matrix.to_vec(), n);
    a.reduce();
    a.qr_eigenvalues()
}

/// Row-major square matrix with 1-based accessors, which keeps the QR sweep
/// close to its textbook index arithmetic.
struct Hess {
    n: usize,
    d: Vec<f64>,
}

impl Hess {
    fn new(d: Vec<f64>, n: usize) -> Self {
        Hess { n, d }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.d[(i - 1) * self.n + (j - 1)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.d[(i - 1) * self.n + (j - 1)]
    }

    fn reduce(&mut self) {
        let n = self.n;
        for m in 2..n {
            let mut x: f64 = 0.0;
            let mut i = m;
            for j in m..=n {
                if self.at(j, m - 1).abs() > x.abs() {
                    x = self.at(j, m - 1);
                    i = j;
                }
            }
            if i != m {
                for j in (m - 1)..=n {
                    let t = self.at(i, j);
                    *self.at_mut(i, j) = self.at(m, j);
                    *self.at_mut(m, j) = t;
                }
                for j in 1..=n {
                    let t = self.at(j, i);
                    *self.at_mut(j, i) = self.at(j, m);
                    *self.at_mut(j, m) = t;
                }
            }
            if x != 0.0 {
                for i in (m + 1)..=n {
                    let mut y = self.at(i, m - 1);
                    if y != 0.0 {
                        y /= x;
                        *self.at_mut(i, m - 1) = y;
                        for j in m..=n {
                            let v = self.at(m, j);
                            *self.at_mut(i, j) -= y * v;
                        }
                        for j in 1..=n {
                            let v = self.at(j, i);
                            *self.at_mut(j, m) += y * v;
                        }
                    }
                }
            }
        }
        for i in 3..=n {
            for j in 1..(i - 1) {
                *self.at_mut(i, j) = 0.0;
            }
        }
    }

    fn qr_eigenvalues(&mut self) -> Result<Vec<(f64, f64)>> {
        let n = self.n;
        let mut wr = vec![0.0; n + 1];
        let mut wi = vec![0.0; n + 1];
        let mut anorm = 0.0;
        for i in 1..=n {
            for j in i.saturating_sub(1).max(1)..=n {
                anorm += self.at(i, j).abs();
            }
        }
        let mut nn = n;
        let mut t = 0.0;
        while nn >= 1 {
            let mut its = 0;
            loop {
                let mut l = nn;
                while l >= 2 {
                    let mut s = self.at(l - 1, l - 1).abs() + self.at(l, l).abs();
                    if s == 0.0 {
                        s = anorm;
                    }
                    if self.at(l, l - 1).abs() + s == s {
                        *self.at_mut(l, l - 1) = 0.0;
                        break;
                    }
                    l -= 1;
                }
                let mut x = self.at(nn, nn);
                if l == nn {
                    wr[nn] = x + t;
                    wi[nn] = 0.0;
                    nn -= 1;
                } else {
                    let mut y = self.at(nn - 1, nn - 1);
                    let mut w = self.at(nn, nn - 1) * self.at(nn - 1, nn);
                    if l == nn - 1 {
                        let p = 0.5 * (y - x);
                        let q = p * p + w;
                        let mut z = libm::sqrt(q.abs());
                        x += t;
                        if q >= 0.0 {
                            z = p + z.copysign(p);
                            wr[nn - 1] = x + z;
                            wr[nn] = x + z;
                            if z != 0.0 {
                                wr[nn] = x - w / z;
                            }
                            wi[nn - 1] = 0.0;
                            wi[nn] = 0.0;
                        } else {
                            wr[nn - 1] = x + p;
                            wr[nn] = x + p;
                            wi[nn - 1] = -z;
                            wi[nn] = z;
                        }
                        nn -= 2;
                    } else {
                        if its == 60 {
                            return Err(Error::Numerical("QR iteration did not converge"));
                        }
                        if its == 10 || its == 20 || its == 40 {
                            // exceptional shift
                            t += x;
                            for i in 1..=nn {
                                *self.at_mut(i, i) -= x;
                            }
                            let s = self.at(nn, nn - 1).abs() + self.at(nn - 1, nn - 2).abs();
                            x = 0.75 * s;
                            y = x;
                            w = -0.4375 * s * s;
                        }
                        its += 1;
                        self.double_shift_sweep(l, nn, x, y, w);
                    }
                }
                if nn < 2 || l + 1 >= nn {
                    break;
                }
            }
        }
        Ok((1..=n).map(|i| (wr[i], wi[i])).collect())
    }

    fn double_shift_sweep(&mut self, l: usize, nn: usize, x0: f64, y0: f64, w: f64) {
        let (mut p, mut q, mut r): (f64, f64, f64);
        let mut m = nn - 2;
        loop {
            let z = self.at(m, m);
            let rr = x0 - z;
            let s = y0 - z;
            p = (rr * s - w) / self.at(m + 1, m) + self.at(m, m + 1);
            q = self.at(m + 1, m + 1) - z - rr - s;
            r = self.at(m + 2, m + 1);
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let u = self.at(m, m - 1).abs() * (q.abs() + r.abs());
            let v = p.abs() * (self.at(m - 1, m - 1).abs() + z.abs() + self.at(m + 1, m + 1).abs());
            if u + v == v {
                break;
            }
            m -= 1;
        }
        for i in (m + 2)..=nn {
            *self.at_mut(i, i - 2) = 0.0;
            if i != m + 2 {
                *self.at_mut(i, i - 3) = 0.0;
            }
        }
        let mut x = 0.0;
        for k in m..nn {
            if k != m {
                p = self.at(k, k - 1);
                q = self.at(k + 1, k - 1);
                r = if k != nn - 1 { self.at(k + 2, k - 1) } else { 0.0 };
                x = p.abs() + q.abs() + r.abs();
                if x != 0.0 {
                    p /= x;
                    q /= x;
                    r /= x;
                }
            }
            let s = libm::sqrt(p * p + q * q + r * r).copysign(p);
            if s != 0.0 {
                if k == m {
                    if l != m {
                        *self.at_mut(k, k - 1) = -self.at(k, k - 1);
                    }
                } else {
                    *self.at_mut(k, k - 1) = -s * x;
                }
                p += s;
                x = p / s;
                let y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nn {
                    p = self.at(k, j) + q * self.at(k + 1, j);
                    if k != nn - 1 {
                        p += r * self.at(k + 2, j);
                        *self.at_mut(k + 2, j) -= p * z;
                    }
                    *self.at_mut(k + 1, j) -= p * y;
                    *self.at_mut(k, j) -= p * x;
                }
                let mmin = nn.min(k + 3);
                for i in l..=mmin {
                    p = x * self.at(i, k) + y * self.at(i, k + 1);
                    if k != nn - 1 {
                        p += z * self.at(i, k + 2);
                        *self.at_mut(i, k + 2) -= p * r;
                    }
                    *self.at_mut(i, k + 1) -= p * q;
                    *self.at_mut(i, k) -= p;
                }
            }
        }
    }
}

/// Largest eigenvalue modulus of a dense row-major matrix.
pub fn spectral_radius_dense(matrix: &[f64], n: usize) -> Result<f64> {
    Ok(eigenvalues(matrix, n)?
        .into_iter()
        .map(|(re, im)| libm::hypot(re, im))
        .fold(0.0, f64::max))
}

/// Estimates the dominant eigenvalue modulus of the linear operator `apply`
/// (`y = A x`, both of length `n`).
///
/// Block power iteration: a `min(n, 32)`-dimensional subspace is pushed
/// through the operator and re-orthonormalized every step; every few steps
/// the Rayleigh-Ritz projection `Qᵀ A Q` is solved exactly and its largest
/// eigenvalue modulus is the estimate. Unlike single-vector power iteration
/// this converges when the dominant eigenvalues form a complex pair or a
/// tight cluster, which is the normal situation for random recurrent
/// matrices. When the block spans the whole space the answer is exact.
pub fn dominant_modulus<F>(n: usize, seed: u64, mut apply: F) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if n == 0 {
        return Err(Error::DegenerateSpectrum("empty operator"));
    }
    let b = n.min(POWER_BLOCK);
    let mut rng = rng::stream(seed, tags::SPECTRAL, 0);
    let mut q: Vec<Vec<f64>> = (0..b)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    if b == n {
        // Exact: the canonical basis makes the projection the matrix itself.
        for (j, col) in q.iter_mut().enumerate() {
            col.iter_mut().for_each(|v| *v = 0.0);
            col[j] = 1.0;
        }
        return finish(ritz_modulus(&q, n, &mut apply)?);
    }
    orthonormalize(&mut q, &mut rng);

    let mut prev: Option<f64> = None;
    let mut image = vec![0.0; n];
    for iter in 1..=POWER_MAX_ITERS {
        for col in q.iter_mut() {
            apply(col, &mut image);
            col.copy_from_slice(&image);
        }
        orthonormalize(&mut q, &mut rng);
        if iter % RITZ_EVERY == 0 {
            let est = ritz_modulus(&q, n, &mut apply)?;
            if let Some(p) = prev {
                if (est - p).abs() <= POWER_REL_TOL * est.max(f64::MIN_POSITIVE) {
                    return finish(est);
                }
            }
            prev = Some(est);
        }
    }
    Err(Error::DegenerateSpectrum("power iteration did not converge"))
}

fn finish(est: f64) -> Result<f64> {
    if !(est.is_finite()) || est <= 1e-12 {
        Err(Error::DegenerateSpectrum("dominant eigenvalue is zero"))
    } else {
        Ok(est)
    }
}

fn ritz_modulus<F>(q: &[Vec<f64>], n: usize, apply: &mut F) -> Result<f64>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let b = q.len();
    let mut aq = vec![0.0; n];
    let mut h = vec![0.0; b * b];
    for j in 0..b {
        apply(&q[j], &mut aq);
        for i in 0..b {
            h[i * b + j] = dot(&q[i], &aq);
        }
    }
    spectral_radius_dense(&h, b)
}

/// Modified Gram-Schmidt with one re-orthogonalization pass. Columns that
/// collapse (rank-deficient operators) are replaced by fresh random vectors.
fn orthonormalize<R: Rng>(q: &mut [Vec<f64>], rng: &mut R) {
    for j in 0..q.len() {
        let mut attempts = 0;
        loop {
            let before = norm(&q[j]);
            for _ in 0..2 {
                for k in 0..j {
                    let (done, rest) = q.split_at_mut(j);
                    let c = dot(&done[k], &rest[0]);
                    axpy(-c, &done[k], &mut rest[0]);
                }
            }
            let after = norm(&q[j]);
            if after > 1e-10 * before && after > 1e-300 {
                q[j].iter_mut().for_each(|v| *v /= after);
                break;
            }
            attempts += 1;
            assert!(attempts < 64, "unable to complete an orthonormal basis");
            q[j].iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// In-place Cholesky factorization `A = L Lᵀ` of a symmetric positive
/// definite row-major matrix; the lower triangle of `a` receives `L`.
pub fn cholesky(a: &mut [f64], n: usize) -> Result<()> {
    if a.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            actual: a.len(),
        });
    }
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Numerical("matrix is not positive definite"));
        }
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let (row_j, row_i) = (j * n, i * n);
            let mut s = a[row_i + j];
            for k in 0..j {
                s -= a[row_i + k] * a[row_j + k];
            }
            a[row_i + j] = s / d;
        }
    }
    Ok(())
}

/// Solves `L Lᵀ X = B` in place, where `l` holds a factor from [`cholesky`]
/// and `b` is row-major `n x k`.
pub fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64], k: usize) {
    debug_assert_eq!(b.len(), n * k);
    for c in 0..k {
        for i in 0..n {
            let mut s = b[i * k + c];
            for j in 0..i {
                s -= l[i * n + j] * b[j * k + c];
            }
            b[i * k + c] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = b[i * k + c];
            for j in (i + 1)..n {
                s -= l[j * n + i] * b[j * k + c];
            }
            b[i * k + c] = s / l[i * n + i];
        }
    }
}
