//! Dependency-free complex linear algebra kernels.
//!
//! The design matrices in this crate can be dense, sparse, or implicit
//! (tensor-product evaluation), so everything here works through the
//! [`LinearOperator`] trait: LSQR for least-squares solves, power iteration
//! for operator norms, and a complex Jacobi eigensolver plus Householder QR
//! on explicit matrices as small-scale oracles and cross-checks.

use num_complex::ComplexFloat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::{C64, Error, Result};

/// A complex linear map `A: C^ncols -> C^nrows` given by matrix-vector
/// products with `A` and its conjugate transpose.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x` (overwrites `y`).
    fn apply(&self, x: &[C64], y: &mut [C64]);
    /// `x = A^* y` (overwrites `x`).
    fn apply_adjoint(&self, y: &[C64], x: &mut [C64]);
}

/// The conjugate transpose `A^*` of a wrapped operator, as an operator.
///
/// Lets the same LSQR machinery solve systems in `A^*` (minimum-norm
/// solutions of underdetermined consistent systems, e.g. cubature weights)
/// without materializing anything.
pub struct AdjointOperator<'a, A: LinearOperator + ?Sized>(pub &'a A);

impl<A: LinearOperator + ?Sized> LinearOperator for AdjointOperator<'_, A> {
    fn nrows(&self) -> usize {
        self.0.ncols()
    }

    fn ncols(&self) -> usize {
        self.0.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.0.apply_adjoint(x, y);
    }

    fn apply_adjoint(&self, y: &[C64], x: &mut [C64]) {
        self.0.apply(y, x);
    }
}

/// Conjugated inner product `<a, b> = sum conj(a_i) b_i`.
pub fn cdot(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Euclidean norm.
pub fn norm2(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn scale(a: &mut [C64], s: f64) {
    for x in a {
        *x *= s;
    }
}

/// Deterministic pseudo-random unit vector for iteration starts.
///
/// Seeded only by the length and a caller tag, so repeated runs (and parallel
/// trials) see identical starting vectors.
pub(crate) fn seeded_unit_vector(len: usize, tag: u64) -> Vec<C64> {
    let mut rng = ChaCha12Rng::seed_from_u64(0x5851_f42d_4c95_7f2d ^ tag);
    rng.set_stream(len as u64);
    let mut v: Vec<C64> = (0..len)
        .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let n = norm2(&v);
    scale(&mut v, 1.0 / n);
    v
}

/// Row-major dense complex matrix; the explicit-storage end of
/// [`LinearOperator`] and the substrate for the QR and Jacobi routines.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub data: Vec<C64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        DenseMatrix {
            nrows,
            ncols,
            data: vec![C64::new(0.0, 0.0); nrows * ncols],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.ncols + j]
    }

    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut C64 {
        &mut self.data[i * self.ncols + j]
    }

    /// Materialize any operator column by column (test/oracle use only).
    pub fn from_operator(op: &dyn LinearOperator) -> Self {
        let (n, m) = (op.nrows(), op.ncols());
        let mut out = DenseMatrix::zeros(n, m);
        let mut e = vec![C64::new(0.0, 0.0); m];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..m {
            e[j] = C64::new(1.0, 0.0);
            op.apply(&e, &mut col);
            e[j] = C64::new(0.0, 0.0);
            for i in 0..n {
                *out.at_mut(i, j) = col[i];
            }
        }
        out
    }
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            *yi = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_adjoint(&self, y: &[C64], x: &mut [C64]) {
        x.fill(C64::new(0.0, 0.0));
        for (i, yi) in y.iter().enumerate() {
            let row = &self.data[i * self.ncols..(i + 1) * self.ncols];
            for (xj, a) in x.iter_mut().zip(row) {
                *xj += a.conj() * yi;
            }
        }
    }
}

/// Why LSQR stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsqrTermination {
    /// Residual criterion `|r| <= btol |b| + atol |A| |x|`.
    ResidualTol,
    /// Normal-equation criterion `|A* r| <= atol |A| |r|`.
    NormalEqTol,
    /// The right-hand side was (numerically) zero; solution is zero.
    ZeroRhs,
    /// Iteration limit reached before either tolerance.
    IterationLimit,
}

/// Convergence report for one LSQR solve.
#[derive(Debug, Clone, Copy)]
pub struct LsqrReport {
    pub iterations: usize,
    pub termination: LsqrTermination,
    /// Final residual norm `|b - A x|`.
    pub residual_norm: f64,
    /// Final normal-equation residual `|A^*(b - A x)|`.
    pub normal_residual_norm: f64,
    /// Frobenius-norm estimate of `A` accumulated from the bidiagonalization.
    pub anorm: f64,
    /// Condition-number estimate of `A`.
    pub cond: f64,
    /// Solution norm `|x|`.
    pub xnorm: f64,
}

/// LSQR (Paige & Saunders) for `min_x |A x - b|` with a complex operator.
///
/// Golub–Kahan bidiagonalization keeps all rotation scalars real; both
/// standard stopping rules use the same `tol` for atol and btol. Reaching the
/// iteration limit is reported, not an error: callers that need a certified
/// solve inspect [`LsqrReport::termination`].
pub fn lsqr(op: &dyn LinearOperator, b: &[C64], tol: f64, maxit: usize) -> Result<(Vec<C64>, LsqrReport)> {
    let (n, m) = (op.nrows(), op.ncols());
    if b.len() != n {
        return Err(Error::mismatch(format!(
            "lsqr: rhs length {} vs operator rows {n}",
            b.len()
        )));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::invalid(format!("lsqr: tolerance {tol} outside (0,1)")));
    }

    let mut x = vec![C64::new(0.0, 0.0); m];
    let mut u = b.to_vec();
    let bnorm = norm2(&u);
    if bnorm == 0.0 {
        return Ok((
            x,
            LsqrReport {
                iterations: 0,
                termination: LsqrTermination::ZeroRhs,
                residual_norm: 0.0,
                normal_residual_norm: 0.0,
                anorm: 0.0,
                cond: 0.0,
                xnorm: 0.0,
            },
        ));
    }
    let mut beta = bnorm;
    scale(&mut u, 1.0 / beta);
    let mut v = vec![C64::new(0.0, 0.0); m];
    op.apply_adjoint(&u, &mut v);
    let mut alpha = norm2(&v);
    if alpha > 0.0 {
        scale(&mut v, 1.0 / alpha);
    }
    let mut w = v.clone();

    let mut phibar = beta;
    let mut rhobar = alpha;
    let mut bbnorm = 0.0; // sum of alpha^2 + beta^2 -> |A|_F^2 estimate
    let mut ddnorm = 0.0; // for the condition estimate
    let mut xnorm_est = 0.0;

    let mut arnorm = alpha * beta;
    let mut rnorm = beta;
    let mut iterations = 0;
    let mut termination = LsqrTermination::IterationLimit;

    let mut tmp_n = vec![C64::new(0.0, 0.0); n];
    let mut tmp_m = vec![C64::new(0.0, 0.0); m];

    if arnorm == 0.0 {
        // b is orthogonal to the range: x = 0 is the least-squares solution.
        return Ok((
            x,
            LsqrReport {
                iterations: 0,
                termination: LsqrTermination::NormalEqTol,
                residual_norm: rnorm,
                normal_residual_norm: 0.0,
                anorm: 0.0,
                cond: 0.0,
                xnorm: 0.0,
            },
        ));
    }

    while iterations < maxit {
        iterations += 1;

        // Bidiagonalization step: beta u = A v - alpha u; alpha v = A* u - beta v.
        op.apply(&v, &mut tmp_n);
        for (ui, ti) in u.iter_mut().zip(&tmp_n) {
            *ui = ti - alpha * *ui;
        }
        beta = norm2(&u);
        bbnorm += alpha * alpha + beta * beta;
        if beta > 0.0 {
            scale(&mut u, 1.0 / beta);
            op.apply_adjoint(&u, &mut tmp_m);
            for (vi, ti) in v.iter_mut().zip(&tmp_m) {
                *vi = ti - beta * *vi;
            }
            alpha = norm2(&v);
            if alpha > 0.0 {
                scale(&mut v, 1.0 / alpha);
            }
        }

        // Givens rotation eliminating beta from the lower bidiagonal.
        let rho = rhobar.hypot(beta);
        let c = rhobar / rho;
        let s = beta / rho;
        let theta = s * alpha;
        rhobar = -c * alpha;
        let phi = c * phibar;
        phibar *= s;

        // Update x and the search direction w.
        let t1 = phi / rho;
        let t2 = -theta / rho;
        for j in 0..m {
            let wj = w[j];
            x[j] += t1 * wj;
            w[j] = v[j] + t2 * wj;
            ddnorm += (wj.norm_sqr()) / (rho * rho);
        }

        rnorm = phibar;
        arnorm = phibar * alpha * c.abs();
        xnorm_est = norm2(&x);

        let anorm = bbnorm.sqrt();
        // S1: residual small relative to the data.
        if rnorm <= tol * bnorm + tol * anorm * xnorm_est {
            termination = LsqrTermination::ResidualTol;
            break;
        }
        // S2: least-squares optimality.
        if rnorm > 0.0 && arnorm <= tol * anorm * rnorm {
            termination = LsqrTermination::NormalEqTol;
            break;
        }
    }

    let anorm = bbnorm.sqrt();
    let report = LsqrReport {
        iterations,
        termination,
        residual_norm: rnorm,
        normal_residual_norm: arnorm,
        anorm,
        cond: anorm * ddnorm.sqrt(),
        xnorm: xnorm_est,
    };
    Ok((x, report))
}

/// Least-squares solve through explicit Householder QR (oracle path).
///
/// Returns the minimizer of `|A x - b|`. Errors with [`Error::Singular`] when
/// a diagonal of `R` falls below `1e-10` times the largest, signalling rank
/// deficiency at the library's working threshold.
pub fn householder_qr_solve(a: &DenseMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let (n, m) = (a.nrows, a.ncols);
    if b.len() != n {
        return Err(Error::mismatch(format!(
            "qr solve: rhs length {} vs {n} rows",
            b.len()
        )));
    }
    if n < m {
        return Err(Error::invalid(format!(
            "qr solve: system is underdetermined ({n} rows < {m} cols)"
        )));
    }
    let mut r = a.clone();
    let mut rhs = b.to_vec();

    for k in 0..m {
        // Householder vector for column k below the diagonal.
        let mut sigma = 0.0;
        for i in k..n {
            sigma += r.at(i, k).norm_sqr();
        }
        let sigma = sigma.sqrt();
        if sigma == 0.0 {
            return Err(Error::Singular(format!("qr solve: zero column {k}")));
        }
        let akk = r.at(k, k);
        // alpha = -exp(i arg(akk)) * sigma avoids cancellation.
        let phase = if akk.abs() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            akk / akk.abs()
        };
        let alpha = -phase * sigma;
        let mut v = vec![C64::new(0.0, 0.0); n - k];
        v[0] = akk - alpha;
        for i in (k + 1)..n {
            v[i - k] = r.at(i, k);
        }
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            // Column already triangular.
            continue;
        }
        // Apply H = I - 2 v v^* / |v|^2 to the trailing block and rhs.
        for j in k..m {
            let mut dot = C64::new(0.0, 0.0);
            for i in k..n {
                dot += v[i - k].conj() * r.at(i, j);
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..n {
                *r.at_mut(i, j) -= f * v[i - k];
            }
        }
        let mut dot = C64::new(0.0, 0.0);
        for i in k..n {
            dot += v[i - k].conj() * rhs[i];
        }
        let f = 2.0 * dot / vnorm2;
        for i in k..n {
            rhs[i] -= f * v[i - k];
        }
    }

    // Rank check on the diagonal of R.
    let dmax = (0..m).map(|k| r.at(k, k).abs()).fold(0.0f64, f64::max);
    for k in 0..m {
        if r.at(k, k).abs() < 1e-10 * dmax {
            return Err(Error::Singular(format!(
                "qr solve: |R[{k},{k}]| = {:.3e} below rank threshold",
                r.at(k, k).abs()
            )));
        }
    }

    // Back substitution R x = (Q^* b)[..m].
    let mut x = vec![C64::new(0.0, 0.0); m];
    for k in (0..m).rev() {
        let mut acc = rhs[k];
        for j in (k + 1)..m {
            acc -= r.at(k, j) * x[j];
        }
        x[k] = acc / r.at(k, k);
    }
    Ok(x)
}

/// All eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Ascending order. Quadratically convergent; intended for the moderate sizes
/// (`m` up to a few hundred) where the Gram matrix is assembled explicitly.
pub fn hermitian_eigenvalues(h: &DenseMatrix) -> Result<Vec<f64>> {
    let m = h.nrows;
    if h.ncols != m {
        return Err(Error::mismatch(format!(
            "hermitian_eigenvalues: {}x{} is not square",
            h.nrows, h.ncols
        )));
    }
    let mut a = h.clone();
    // Symmetrize defensively; inputs are Hermitian up to rounding.
    for p in 0..m {
        for q in (p + 1)..m {
            let avg = 0.5 * (a.at(p, q) + a.at(q, p).conj());
            *a.at_mut(p, q) = avg;
            *a.at_mut(q, p) = avg.conj();
        }
        let d = a.at(p, p).re;
        *a.at_mut(p, p) = C64::new(d, 0.0);
    }

    let norm = |a: &DenseMatrix| -> f64 {
        let mut s = 0.0;
        for p in 0..m {
            for q in (p + 1)..m {
                s += a.at(p, q).norm_sqr();
            }
        }
        s.sqrt()
    };
    let scale_ref = (0..m)
        .map(|p| a.at(p, p).abs())
        .fold(norm(&a), f64::max)
        .max(f64::MIN_POSITIVE);

    for _sweep in 0..60 {
        if norm(&a) <= 1e-14 * scale_ref {
            break;
        }
        for p in 0..m {
            for q in (p + 1)..m {
                let apq = a.at(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                // Unitary 2x2 diagonalization: with a_pq = |a_pq| e^{i phi},
                // the rotation J = [[c, s e^{i phi}], [-s e^{-i phi}, c]]
                // zeroes the (p,q) entry for the classic real-Jacobi (c, s).
                let app = a.at(p, p).re;
                let aqq = a.at(q, q).re;
                let phase = apq / apq.abs();
                let tau = (aqq - app) / (2.0 * apq.abs());
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // Update rows/columns p and q: A <- J^* A J.
                for k in 0..m {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a.at(k, p);
                    let akq = a.at(k, q);
                    let new_kp = c * akp - s * phase.conj() * akq;
                    let new_kq = s * phase * akp + c * akq;
                    *a.at_mut(k, p) = new_kp;
                    *a.at_mut(p, k) = new_kp.conj();
                    *a.at_mut(k, q) = new_kq;
                    *a.at_mut(q, k) = new_kq.conj();
                }
                let off = apq.abs();
                let new_pp = app - t * off;
                let new_qq = aqq + t * off;
                *a.at_mut(p, p) = C64::new(new_pp, 0.0);
                *a.at_mut(q, q) = C64::new(new_qq, 0.0);
                *a.at_mut(p, q) = C64::new(0.0, 0.0);
                *a.at_mut(q, p) = C64::new(0.0, 0.0);
            }
        }
    }
    if norm(&a) > 1e-10 * scale_ref {
        return Err(Error::NoConvergence(
            "jacobi sweeps failed to annihilate off-diagonal mass".into(),
        ));
    }

    let mut ev: Vec<f64> = (0..m).map(|p| a.at(p, p).re).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    Ok(ev)
}

/// Result of a power iteration.
#[derive(Debug, Clone, Copy)]
pub struct PowerReport {
    /// Dominant eigenvalue of the Hermitian operator (signed).
    pub eigenvalue: f64,
    pub iterations: usize,
    /// Final residual `|B v - lambda v|`.
    pub residual: f64,
}

/// Power iteration for the dominant (largest-magnitude) eigenvalue of a
/// Hermitian operator given as a closure `y = B x`.
///
/// Deterministic: the start vector depends only on `dim` and `tag`. Stops when
/// both the Rayleigh quotient increment and the eigen-residual fall below
/// `tol` (relative); returns the best estimate with its residual either way.
pub fn power_iteration<F>(dim: usize, tag: u64, tol: f64, maxit: usize, mut apply: F) -> Result<PowerReport>
where
    F: FnMut(&[C64], &mut [C64]),
{
    if dim == 0 {
        return Err(Error::invalid("power_iteration: zero-dimensional operator"));
    }
    let mut v = seeded_unit_vector(dim, tag);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut lambda = 0.0f64;
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=maxit {
        iterations = it;
        apply(&v, &mut w);
        // Rayleigh quotient (Hermitian: real up to rounding).
        let rq = cdot(&v, &w).re;
        let mut res2 = 0.0;
        for (wi, vi) in w.iter().zip(&v) {
            res2 += (wi - rq * vi).norm_sqr();
        }
        residual = res2.sqrt();
        let wnorm = norm2(&w);
        if wnorm == 0.0 {
            // Operator annihilated the start vector: dominant eigenvalue 0.
            return Ok(PowerReport {
                eigenvalue: 0.0,
                iterations: it,
                residual: 0.0,
            });
        }
        let increment = (rq - lambda).abs();
        lambda = rq;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / wnorm;
        }
        let scale = lambda.abs().max(wnorm);
        if increment <= tol * scale.max(1e-300) && residual <= tol.sqrt() * scale {
            return Ok(PowerReport {
                eigenvalue: lambda,
                iterations: it,
                residual,
            });
        }
    }
    Ok(PowerReport {
        eigenvalue: lambda,
        iterations,
        residual,
    })
}

/// Solve a small real dense system by Gaussian elimination with partial
/// pivoting (used for wavelet refinement fixed points).
pub fn solve_real_dense(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = a.len();
    if n == 0 || a.iter().any(|row| row.len() != n) || b.len() != n {
        return Err(Error::mismatch("solve_real_dense: non-square system"));
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| m[i][k].abs().partial_cmp(&m[j][k].abs()).unwrap())
            .unwrap();
        if m[piv][k].abs() < 1e-300 {
            return Err(Error::Singular("solve_real_dense: zero pivot".into()));
        }
        m.swap(k, piv);
        rhs.swap(k, piv);
        for i in (k + 1)..n {
            let f = m[i][k] / m[k][k];
            for j in k..n {
                m[i][j] -= f * m[k][j];
            }
            rhs[i] -= f * rhs[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for j in (k + 1)..n {
            acc -= m[k][j] * x[j];
        }
        x[k] = acc / m[k][k];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn random_dense(n: usize, m: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, m);
        for v in &mut a.data {
            *v = C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        }
        a
    }

    fn random_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn dense_adjoint_identity() {
        // <A x, y> must equal <x, A* y> exactly up to rounding.
        let a = random_dense(7, 4, 11);
        let x = random_vec(4, 12);
        let y = random_vec(7, 13);
        let mut ax = vec![C64::new(0.0, 0.0); 7];
        a.apply(&x, &mut ax);
        let mut aty = vec![C64::new(0.0, 0.0); 4];
        a.apply_adjoint(&y, &mut aty);
        let lhs = cdot(&ax, &y);
        let rhs = cdot(&x, &aty);
        assert_relative_eq!(lhs.re, rhs.re, max_relative = 1e-13);
        assert_relative_eq!(lhs.im, rhs.im, max_relative = 1e-13);
    }

    #[test]
    fn lsqr_matches_qr_on_inconsistent_system() {
        // Overdetermined, rhs outside the range: both solvers must agree on
        // the least-squares minimizer to 1e-6 (and in fact much better).
        for seed in [1u64, 2, 3] {
            let a = random_dense(40, 7, seed);
            let b = random_vec(40, 100 + seed);
            let xq = householder_qr_solve(&a, &b).unwrap();
            let (xl, report) = lsqr(&a, &b, 5e-8, 100).unwrap();
            assert!(report.iterations < 100);
            let diff: f64 = xq
                .iter()
                .zip(&xl)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-6, "seed {seed}: QR/LSQR differ by {diff}");
        }
    }

    #[test]
    fn lsqr_iteration_count_under_good_conditioning() {
        // Condition number sqrt(3): LSQR at tol 5e-8 stays within 17
        // iterations. Build A = Q1 S Q2^* from Householder-orthonormalized
        // random blocks with singular values in [1, sqrt(3)].
        let n = 120;
        let m = 24;
        let q1 = {
            // Orthonormalize the columns of a random n x m block (Gram-Schmidt).
            let a = random_dense(n, m, 21);
            let mut cols: Vec<Vec<C64>> = (0..m)
                .map(|j| (0..n).map(|i| a.at(i, j)).collect())
                .collect();
            for j in 0..m {
                for k in 0..j {
                    let proj = cdot(&cols[k], &cols[j]);
                    let ck = cols[k].clone();
                    for (c, p) in cols[j].iter_mut().zip(&ck) {
                        *c -= proj * p;
                    }
                }
                let nn = norm2(&cols[j]);
                for c in cols[j].iter_mut() {
                    *c /= nn;
                }
            }
            cols
        };
        let mut a = DenseMatrix::zeros(n, m);
        for j in 0..m {
            // Singular values interpolate 1..sqrt(3).
            let s = 1.0 + (3.0f64.sqrt() - 1.0) * (j as f64) / ((m - 1) as f64);
            for i in 0..n {
                *a.at_mut(i, j) = q1[j][i] * s;
            }
        }
        let b = random_vec(n, 1234);
        let (_, report) = lsqr(&a, &b, 5e-8, 100).unwrap();
        assert!(
            report.iterations <= 17,
            "cond sqrt(3) run took {} iterations",
            report.iterations
        );
        assert!(report.termination != LsqrTermination::IterationLimit);
    }

    #[test]
    fn lsqr_zero_rhs() {
        let a = random_dense(5, 3, 77);
        let b = vec![C64::new(0.0, 0.0); 5];
        let (x, report) = lsqr(&a, &b, 1e-10, 50).unwrap();
        assert!(x.iter().all(|z| z.abs() == 0.0));
        assert_eq!(report.termination, LsqrTermination::ZeroRhs);
    }

    #[test]
    fn qr_exact_on_square_system() {
        let a = random_dense(6, 6, 5);
        let xtrue = random_vec(6, 6);
        let mut b = vec![C64::new(0.0, 0.0); 6];
        a.apply(&xtrue, &mut b);
        let x = householder_qr_solve(&a, &b).unwrap();
        for (p, q) in x.iter().zip(&xtrue) {
            assert!((p - q).abs() < 1e-10);
        }
    }

    #[test]
    fn qr_rejects_rank_deficiency() {
        let mut a = random_dense(8, 3, 9);
        // Make column 2 = column 0 exactly.
        for i in 0..8 {
            let v = a.at(i, 0);
            *a.at_mut(i, 2) = v;
        }
        let b = random_vec(8, 10);
        match householder_qr_solve(&a, &b) {
            Err(Error::Singular(_)) => {}
            other => panic!("expected Singular, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_matches_reference_eigenvalues() {
        // 4x4 Hermitian with eigenvalues frozen from 50-digit arithmetic.
        let mut h = DenseMatrix::zeros(4, 4);
        let entries = [
            [(2.0, 0.0), (0.3, -0.4), (0.0, 0.1), (0.5, 0.0)],
            [(0.3, 0.4), (1.0, 0.0), (-0.2, 0.6), (0.1, 0.1)],
            [(0.0, -0.1), (-0.2, -0.6), (3.0, 0.0), (0.7, 0.0)],
            [(0.5, 0.0), (0.1, -0.1), (0.7, 0.0), (0.8, 0.0)],
        ];
        for i in 0..4 {
            for j in 0..4 {
                *h.at_mut(i, j) = C64::new(entries[i][j].0, entries[i][j].1);
            }
        }
        let ev = hermitian_eigenvalues(&h).unwrap();
        let want = [
            0.3615272910617368,
            0.7811927826190115,
            2.2217512699735734,
            3.4355286563456783,
        ];
        for (got, expect) in ev.iter().zip(want) {
            assert_relative_eq!(*got, expect, max_relative = 1e-13);
        }
    }

    #[test]
    fn jacobi_similarity_invariants() {
        // Random Hermitian: eigenvalues preserve trace and Frobenius norm,
        // and the largest matches power iteration.
        let g = random_dense(12, 12, 42);
        let mut h = DenseMatrix::zeros(12, 12);
        for i in 0..12 {
            for j in 0..12 {
                let v = 0.5 * (g.at(i, j) + g.at(j, i).conj());
                *h.at_mut(i, j) = v;
            }
        }
        let ev = hermitian_eigenvalues(&h).unwrap();
        let trace: f64 = (0..12).map(|i| h.at(i, i).re).sum();
        assert_relative_eq!(ev.iter().sum::<f64>(), trace, max_relative = 1e-12);
        let fro2: f64 = h.data.iter().map(|z| z.norm_sqr()).sum();
        assert_relative_eq!(
            ev.iter().map(|l| l * l).sum::<f64>(),
            fro2,
            max_relative = 1e-12
        );
        let dominant = ev
            .iter()
            .map(|l| l.abs())
            .fold(0.0f64, f64::max);
        let report = power_iteration(12, 0, 1e-10, 5000, |x, y| h.apply(x, y)).unwrap();
        assert_relative_eq!(report.eigenvalue.abs(), dominant, max_relative = 1e-7);
    }

    #[test]
    fn power_iteration_on_diagonal_operator() {
        let mut d = DenseMatrix::zeros(5, 5);
        for (i, lam) in [0.3, -2.5, 1.0, 0.9, 2.4].into_iter().enumerate() {
            *d.at_mut(i, i) = C64::new(lam, 0.0);
        }
        let report = power_iteration(5, 1, 1e-12, 10_000, |x, y| d.apply(x, y)).unwrap();
        assert_relative_eq!(report.eigenvalue, -2.5, max_relative = 1e-9);
    }

    #[test]
    fn gaussian_elimination_solves() {
        let a = vec![
            vec![2.0, 1.0, -1.0],
            vec![-3.0, -1.0, 2.0],
            vec![-2.0, 1.0, 2.0],
        ];
        let b = vec![8.0, -11.0, -3.0];
        let x = solve_real_dense(&a, &b).unwrap();
        let want = [2.0, 3.0, -1.0];
        for (got, expect) in x.iter().zip(want) {
            assert_relative_eq!(*got, expect, max_relative = 1e-12);
        }
    }
}
