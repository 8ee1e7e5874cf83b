//! Dense real-matrix kernels: linear solves, eigenvalues, singular values,
//! Sylvester equations, the continuous algebraic Riccati equation and a
//! discrete Riccati-like fixed point.
//!
//! Everything operates on `f64` matrices of modest size (tens of rows). All
//! functions are pure and safe to call concurrently.

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

/// Dense, row-major-constructed real matrix used across the crate.
pub type Matrix = DMatrix<f64>;
/// Dense real column vector.
pub type Vector = DVector<f64>;

/// Default residual tolerance for linear-algebra post-conditions.
pub const TOL_RESIDUAL: f64 = 1e-10;
/// Condition-number bound above which a matrix is treated as singular.
pub const COND_BOUND: f64 = 1e12;

const CARE_RESIDUAL_REL: f64 = 1e-8;
const DARE_TOL_REL: f64 = 1e-12;
const DARE_MAX_ITER: usize = 10_000;
/// QR-iteration budget: sweeps per matrix dimension before giving up.
const SCHUR_MAX_TOTAL_SWEEPS: usize = 40;

#[derive(Debug, Clone, Error)]
pub enum MatError {
    #[error("matrix is numerically singular (condition estimate {cond:.3e})")]
    SingularMatrix { cond: f64 },
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("non-finite entry in input matrix")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("Sylvester solvability violated: spectra of the coefficients overlap (min gap {gap:.3e})")]
    SpectrumOverlap { gap: f64 },
    #[error("Riccati equation has no stabilizing solution: {0}")]
    NotStabilizable(String),
    #[error("Riccati solution asymmetry {drift:.3e} exceeds tolerance")]
    AsymmetryDrift { drift: f64 },
    #[error("B'PB became numerically singular during the fixed-point iteration")]
    PivotBreakdown,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type MatResult<T> = Result<T, MatError>;

/// Multiset of eigenvalues of a real matrix, closed under conjugation.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    values: Vec<Complex<f64>>,
}

impl ComplexSpectrum {
    pub fn new(mut values: Vec<Complex<f64>>) -> Self {
        // Canonical order: by real part, then imaginary part. Keeps reports
        // and serialized output deterministic.
        values.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        Self { values }
    }

    pub fn values(&self) -> &[Complex<f64>] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min_real_part(&self) -> f64 {
        self.values.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    pub fn max_real_part(&self) -> f64 {
        self.values.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn spectral_radius(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Union of two spectra as multisets.
    pub fn union(&self, other: &ComplexSpectrum) -> ComplexSpectrum {
        let mut v = self.values.clone();
        v.extend_from_slice(&other.values);
        ComplexSpectrum::new(v)
    }

    /// Greedy minimum-distance perfect matching between two equal-cardinality
    /// multisets; returns the largest matched distance.
    pub fn matched_distance(&self, other: &ComplexSpectrum) -> MatResult<f64> {
        if self.len() != other.len() {
            return Err(MatError::DimensionMismatch(format!(
                "spectra have cardinality {} and {}",
                self.len(),
                other.len()
            )));
        }
        let n = self.len();
        if n == 0 {
            return Ok(0.0);
        }
        let mut pairs = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                pairs.push((i, j, (self.values[i] - other.values[j]).norm()));
            }
        }
        pairs.sort_by(|a, b| (a.2, a.0, a.1).partial_cmp(&(b.2, b.0, b.1)).unwrap());
        let mut used_left = vec![false; n];
        let mut used_right = vec![false; n];
        let mut matched = 0;
        let mut max_gap = 0.0f64;
        for (i, j, d) in pairs {
            if !used_left[i] && !used_right[j] {
                used_left[i] = true;
                used_right[j] = true;
                max_gap = max_gap.max(d);
                matched += 1;
                if matched == n {
                    break;
                }
            }
        }
        Ok(max_gap)
    }
}

fn check_finite(m: &Matrix) -> MatResult<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(MatError::NonFinite)
    }
}

fn frobenius(m: &Matrix) -> f64 {
    m.norm()
}

/// Condition estimate from the extreme singular values.
pub fn condition_estimate(a: &Matrix) -> f64 {
    let sv = a.clone().singular_values();
    let smax = sv.iter().fold(0.0f64, |acc, &s| acc.max(s));
    let smin = sv.iter().fold(f64::INFINITY, |acc, &s| acc.min(s));
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Solves `A X = B` for a square, well-conditioned `A`.
pub fn solve_linear(a: &Matrix, b: &Matrix) -> MatResult<Matrix> {
    check_finite(a)?;
    check_finite(b)?;
    if !a.is_square() {
        return Err(MatError::DimensionMismatch("A must be square".into()));
    }
    if a.nrows() != b.nrows() {
        return Err(MatError::DimensionMismatch(format!(
            "A is {}x{} but B has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let cond = condition_estimate(a);
    if !cond.is_finite() || cond >= COND_BOUND {
        return Err(MatError::SingularMatrix { cond });
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or(MatError::SingularMatrix { cond })
}

fn is_lower_triangular(a: &Matrix) -> bool {
    let n = a.nrows();
    (0..n).all(|i| ((i + 1)..n).all(|j| a[(i, j)] == 0.0))
}

fn is_upper_triangular(a: &Matrix) -> bool {
    let n = a.nrows();
    (0..n).all(|j| ((j + 1)..n).all(|i| a[(i, j)] == 0.0))
}

/// All eigenvalues of a square real matrix.
///
/// Triangular inputs (up to a roundoff-level perturbation of the off-
/// triangular part) short-circuit to their diagonal. This keeps structured
/// graph matrices exact even when the eigenvalues are defective, and it
/// sidesteps QR-iteration stalls on nearly diagonal matrices with repeated
/// eigenvalues. Zeroing entries below `4 ulp * max|a_ij|` stays within the
/// backward-stability contract.
pub fn eigvals(a: &Matrix) -> MatResult<ComplexSpectrum> {
    check_finite(a)?;
    if !a.is_square() {
        return Err(MatError::DimensionMismatch("eigvals needs a square matrix".into()));
    }
    let tiny = 4.0 * f64::EPSILON * a.amax();
    let cleaned = Matrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        if i != j && a[(i, j)].abs() <= tiny {
            0.0
        } else {
            a[(i, j)]
        }
    });
    if is_lower_triangular(&cleaned) || is_upper_triangular(&cleaned) {
        let vals = (0..a.nrows()).map(|i| Complex::new(a[(i, i)], 0.0)).collect();
        return Ok(ComplexSpectrum::new(vals));
    }
    let (_, t) = real_schur(a)?;
    Ok(quasi_triangular_eigenvalues(&t))
}

/// Eigenvalues of a real quasi-upper-triangular matrix, block by block.
fn quasi_triangular_eigenvalues(t: &Matrix) -> ComplexSpectrum {
    let mut vals = Vec::with_capacity(t.nrows());
    for (start, size) in schur_blocks(t) {
        if size == 1 {
            vals.push(Complex::new(t[(start, start)], 0.0));
        } else {
            let tr = t[(start, start)] + t[(start + 1, start + 1)];
            let det = t[(start, start)] * t[(start + 1, start + 1)]
                - t[(start, start + 1)] * t[(start + 1, start)];
            let disc = 0.25 * tr * tr - det;
            if disc >= 0.0 {
                // Real pair left unsplit by the deflation path.
                let root = disc.sqrt();
                vals.push(Complex::new(0.5 * tr + root, 0.0));
                vals.push(Complex::new(0.5 * tr - root, 0.0));
            } else {
                let im = (-disc).sqrt();
                vals.push(Complex::new(0.5 * tr, im));
                vals.push(Complex::new(0.5 * tr, -im));
            }
        }
    }
    ComplexSpectrum::new(vals)
}

/// Largest singular value.
pub fn sigma_max(a: &Matrix) -> MatResult<f64> {
    check_finite(a)?;
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(a.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |acc, &s| acc.max(s)))
}

/// Applies `P = I - 2 w w'` on the left to rows `row..row+w.len()` of `m`,
/// touching only columns at or after `col_start` (earlier columns of those
/// rows hold already-annihilated entries).
fn reflect_rows(m: &mut Matrix, w: &[f64], row: usize, col_start: usize) {
    let ncols = m.ncols();
    for j in col_start..ncols {
        let mut s = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            s += wk * m[(row + k, j)];
        }
        s *= 2.0;
        for (k, &wk) in w.iter().enumerate() {
            m[(row + k, j)] -= s * wk;
        }
    }
}

/// Applies `P = I - 2 w w'` on the right to columns `col..col+w.len()` of `m`.
fn reflect_cols(m: &mut Matrix, w: &[f64], col: usize) {
    let nrows = m.nrows();
    for i in 0..nrows {
        let mut s = 0.0;
        for (k, &wk) in w.iter().enumerate() {
            s += wk * m[(i, col + k)];
        }
        s *= 2.0;
        for (k, &wk) in w.iter().enumerate() {
            m[(i, col + k)] -= s * wk;
        }
    }
}

/// Householder vector mapping `v` to a multiple of `e1`; returns `None` when
/// `v` is already there (no reflection needed).
fn householder_vector(v: &mut [f64]) -> Option<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let beta = if v[0] >= 0.0 { -norm } else { norm };
    v[0] -= beta;
    let wnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if wnorm == 0.0 {
        return None;
    }
    for x in v.iter_mut() {
        *x /= wnorm;
    }
    Some(beta)
}

/// One implicit double-shift sweep on the window `lo..=hi` (size >= 3) with
/// the shift pair encoded by its trace and determinant.
fn francis_sweep(t: &mut Matrix, q: &mut Matrix, lo: usize, hi: usize, tra: f64, det: f64) {
    let h11 = t[(lo, lo)];
    let h12 = t[(lo, lo + 1)];
    let h21 = t[(lo + 1, lo)];
    let h22 = t[(lo + 1, lo + 1)];
    let h32 = t[(lo + 2, lo + 1)];
    let mut v = [
        h11 * h11 + h12 * h21 - tra * h11 + det,
        h21 * (h11 + h22 - tra),
        h21 * h32,
    ];
    for k in lo..hi - 1 {
        let mut w = v;
        if let Some(beta) = householder_vector(&mut w) {
            if k > lo {
                t[(k, k - 1)] = beta;
                t[(k + 1, k - 1)] = 0.0;
                t[(k + 2, k - 1)] = 0.0;
            }
            reflect_rows(t, &w, k, k);
            reflect_cols(t, &w, k);
            reflect_cols(q, &w, k);
        }
        v[0] = t[(k + 1, k)];
        v[1] = t[(k + 2, k)];
        if k + 3 <= hi {
            v[2] = t[(k + 3, k)];
        } else {
            v[2] = 0.0;
        }
    }
    let mut w = [v[0], v[1]];
    if let Some(beta) = householder_vector(&mut w) {
        t[(hi - 1, hi - 2)] = beta;
        t[(hi, hi - 2)] = 0.0;
        reflect_rows(t, &w, hi - 1, hi - 1);
        reflect_cols(t, &w, hi - 1);
        reflect_cols(q, &w, hi - 1);
    }
}

/// Rotates a deflated 2x2 block with real eigenvalues into triangular form;
/// complex pairs are left in place.
fn split_real_2x2(t: &mut Matrix, q: &mut Matrix, k: usize) {
    if t[(k + 1, k)] == 0.0 {
        return;
    }
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let c = t[(k + 1, k)];
    let d = t[(k + 1, k + 1)];
    let tr = a + d;
    let det = a * d - b * c;
    let disc = 0.25 * tr * tr - det;
    if disc < 0.0 {
        return;
    }
    let root = disc.sqrt();
    let lambda = if tr >= 0.0 { 0.5 * tr + root } else { 0.5 * tr - root };
    // Eigenvector from the numerically larger row of (A - lambda I).
    let cand1 = (b, lambda - a);
    let cand2 = (lambda - d, c);
    let (x, y) = if cand1.0.hypot(cand1.1) >= cand2.0.hypot(cand2.1) {
        cand1
    } else {
        cand2
    };
    let norm = x.hypot(y);
    if norm == 0.0 {
        t[(k + 1, k)] = 0.0;
        return;
    }
    let (cs, sn) = (x / norm, y / norm);
    // Givens similarity with first column (cs, sn).
    let n = t.nrows();
    for j in 0..n {
        let (r0, r1) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = cs * r0 + sn * r1;
        t[(k + 1, j)] = -sn * r0 + cs * r1;
    }
    for i in 0..n {
        let (c0, c1) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = cs * c0 + sn * c1;
        t[(i, k + 1)] = -sn * c0 + cs * c1;
    }
    for i in 0..q.nrows() {
        let (c0, c1) = (q[(i, k)], q[(i, k + 1)]);
        q[(i, k)] = cs * c0 + sn * c1;
        q[(i, k + 1)] = -sn * c0 + cs * c1;
    }
    t[(k + 1, k)] = 0.0;
}

/// Real Schur form `A = Q T Q'` via Hessenberg reduction and a Francis
/// double-shift QR iteration with exceptional shifts every ten stalled
/// sweeps. Deflated 2x2 blocks with real eigenvalues are split, so the
/// remaining 2x2 blocks always carry complex pairs.
fn real_schur(a: &Matrix) -> MatResult<(Matrix, Matrix)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Matrix::zeros(0, 0), Matrix::zeros(0, 0)));
    }
    if n == 1 {
        return Ok((Matrix::identity(1, 1), a.clone()));
    }
    let (mut q, mut t) = if n == 2 {
        (Matrix::identity(2, 2), a.clone())
    } else {
        let hess = nalgebra::linalg::Hessenberg::new(a.clone());
        hess.unpack()
    };

    let eps = f64::EPSILON;
    let tiny = f64::MIN_POSITIVE;
    let mut hi = n - 1;
    let mut window_iters = 0usize;
    let mut total_iters = 0usize;
    loop {
        // Deflate negligible subdiagonal entries.
        for k in 0..hi {
            let bound = eps * (t[(k, k)].abs() + t[(k + 1, k + 1)].abs());
            if t[(k + 1, k)].abs() <= bound.max(tiny) {
                t[(k + 1, k)] = 0.0;
            }
        }
        // Active window [lo, hi] ending at hi.
        let mut lo = hi;
        while lo > 0 && t[(lo, lo - 1)] != 0.0 {
            lo -= 1;
        }
        if lo == hi {
            if hi <= 1 {
                break;
            }
            hi -= 1;
            window_iters = 0;
            continue;
        }
        if lo + 1 == hi {
            split_real_2x2(&mut t, &mut q, lo);
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            window_iters = 0;
            continue;
        }
        window_iters += 1;
        total_iters += 1;
        if total_iters > SCHUR_MAX_TOTAL_SWEEPS * n {
            return Err(MatError::NoConvergence);
        }
        let (tra, det) = if window_iters.is_multiple_of(10) {
            // Exceptional shift; breaks the symmetric-spectrum cycles the
            // plain Francis shift cannot escape.
            let s = t[(hi, hi - 1)].abs() + t[(hi - 1, hi - 2)].abs();
            let h11 = 0.75 * s + t[(hi, hi)];
            let h12 = -0.4375 * s;
            let h21 = s;
            let h22 = h11;
            (h11 + h22, h11 * h22 - h12 * h21)
        } else {
            let hnn = t[(hi, hi)];
            let hmm = t[(hi - 1, hi - 1)];
            let hnm = t[(hi - 1, hi)];
            let hmn = t[(hi, hi - 1)];
            (hnn + hmm, hnn * hmm - hnm * hmn)
        };
        francis_sweep(&mut t, &mut q, lo, hi, tra, det);
    }
    Ok((q, t))
}

/// Diagonal-block layout (start, size) of a quasi-upper-triangular matrix.
fn schur_blocks(t: &Matrix) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

/// Solves the small Sylvester system `A Z + sign * Z B = C` through its
/// Kronecker form. Intended for blocks no larger than 2x2.
fn solve_block_sylvester(a: &Matrix, b: &Matrix, c: &Matrix, sign: f64) -> MatResult<Matrix> {
    let r = a.nrows();
    let s = b.nrows();
    let mut k = Matrix::zeros(r * s, r * s);
    // vec() stacks columns: A Z -> (I ⊗ A), Z B -> (B^T ⊗ I).
    for j in 0..s {
        for i in 0..r {
            for ii in 0..r {
                k[(j * r + i, j * r + ii)] += a[(i, ii)];
            }
            for jj in 0..s {
                k[(j * r + i, jj * r + i)] += sign * b[(jj, j)];
            }
        }
    }
    let rhs = Vector::from_iterator(r * s, (0..s).flat_map(|j| (0..r).map(move |i| (i, j))).map(|(i, j)| c[(i, j)]));
    let sol = k
        .lu()
        .solve(&rhs)
        .ok_or(MatError::SpectrumOverlap { gap: 0.0 })?;
    Ok(Matrix::from_fn(r, s, |i, j| sol[j * r + i]))
}

/// Solves `S Y + Y T = D` where `S` and `T` are quasi-upper-triangular,
/// sweeping T's diagonal blocks left to right and back-substituting over S's
/// blocks bottom to top.
fn quasi_triangular_sylvester(s: &Matrix, t: &Matrix, d: &Matrix) -> MatResult<Matrix> {
    let p = s.nrows();
    let q = t.nrows();
    let s_blocks = schur_blocks(s);
    let t_blocks = schur_blocks(t);
    let mut y = Matrix::zeros(p, q);
    for &(jc, js) in &t_blocks {
        // Right-hand side for this column block, minus contributions of the
        // already-solved columns through T's strictly-upper part.
        let mut rhs = d.view((0, jc), (p, js)).into_owned();
        if jc > 0 {
            rhs -= y.view((0, 0), (p, jc)) * t.view((0, jc), (jc, js));
        }
        let t_jj = t.view((jc, jc), (js, js)).into_owned();
        for &(ic, is) in s_blocks.iter().rev() {
            let mut g = rhs.view((ic, 0), (is, js)).into_owned();
            if ic + is < p {
                g -= s.view((ic, ic + is), (is, p - ic - is)) * y.view((ic + is, jc), (p - ic - is, js));
            }
            let s_ii = s.view((ic, ic), (is, is)).into_owned();
            let z = solve_block_sylvester(&s_ii, &t_jj, &g, 1.0)?;
            y.view_mut((ic, jc), (is, js)).copy_from(&z);
        }
    }
    Ok(y)
}

/// Solves the Sylvester equation `E1 X + X E2 = F` by reduction of both
/// coefficients to real Schur form and quasi-triangular back-substitution.
pub fn solve_sylvester(e1: &Matrix, e2: &Matrix, f: &Matrix) -> MatResult<Matrix> {
    check_finite(e1)?;
    check_finite(e2)?;
    check_finite(f)?;
    if !e1.is_square() || !e2.is_square() {
        return Err(MatError::DimensionMismatch("E1 and E2 must be square".into()));
    }
    if f.nrows() != e1.nrows() || f.ncols() != e2.nrows() {
        return Err(MatError::DimensionMismatch(format!(
            "F must be {}x{}, got {}x{}",
            e1.nrows(),
            e2.nrows(),
            f.nrows(),
            f.ncols()
        )));
    }
    // Solvability requires the spectra of E1 and -E2 to be disjoint.
    let l1 = eigvals(e1)?;
    let l2 = eigvals(e2)?;
    let scale = frobenius(e1).max(frobenius(e2)).max(1.0);
    let mut gap = f64::INFINITY;
    for a in l1.values() {
        for b in l2.values() {
            gap = gap.min((a + b).norm());
        }
    }
    if gap <= 1e-10 * scale {
        return Err(MatError::SpectrumOverlap { gap });
    }

    let (u, s) = real_schur(e1)?;
    let (v, t) = real_schur(e2)?;
    let d = u.transpose() * f * &v;
    let y = quasi_triangular_sylvester(&s, &t, &d)?;
    Ok(u * y * v.transpose())
}

/// Swaps two adjacent diagonal blocks of a real Schur form in place,
/// updating the accumulated orthogonal factor.
fn swap_schur_blocks(t: &mut Matrix, q: &mut Matrix, i: usize, r: usize, s: usize) -> MatResult<()> {
    let n = t.nrows();
    let m = r + s;
    let a11 = t.view((i, i), (r, r)).into_owned();
    let a12 = t.view((i, i + r), (r, s)).into_owned();
    let a22 = t.view((i + r, i + r), (s, s)).into_owned();
    // [X; I] spans the invariant subspace of the trailing block:
    // A11 X - X A22 = -A12.
    let x = solve_block_sylvester(&a11, &a22, &(-a12), -1.0)?;
    let mut basis = Matrix::zeros(m, m);
    basis.view_mut((0, 0), (r, s)).copy_from(&x);
    basis.view_mut((r, 0), (s, s)).copy_from(&Matrix::identity(s, s));
    for k in 0..r {
        basis[(k, s + k)] = 1.0;
    }
    let g = basis.qr().q();

    let t_rows = g.transpose() * t.view((i, 0), (m, n));
    t.view_mut((i, 0), (m, n)).copy_from(&t_rows);
    let t_cols = t.view((0, i), (n, m)) * &g;
    t.view_mut((0, i), (n, m)).copy_from(&t_cols);
    let q_cols = q.view((0, i), (n, m)) * &g;
    q.view_mut((0, i), (n, m)).copy_from(&q_cols);

    // The swap leaves the new lower-left sub-block zero up to roundoff.
    for col in i..i + s {
        for row in i + s..i + m {
            t[(row, col)] = 0.0;
        }
    }
    if s == 1 && i + 1 < n {
        t[(i + 1, i)] = 0.0;
    }
    Ok(())
}

fn block_real_part(t: &Matrix, start: usize, size: usize) -> f64 {
    if size == 1 {
        t[(start, start)]
    } else {
        0.5 * (t[(start, start)] + t[(start + 1, start + 1)])
    }
}

/// Reorders a real Schur form so every eigenvalue with negative real part
/// comes first. Returns the number of rows spanned by the stable group.
fn reorder_schur_stable_first(t: &mut Matrix, q: &mut Matrix) -> MatResult<usize> {
    loop {
        let blocks = schur_blocks(t);
        let mut swapped = false;
        for w in blocks.windows(2) {
            let (i1, s1) = w[0];
            let (_, s2) = w[1];
            let re1 = block_real_part(t, i1, s1);
            let re2 = block_real_part(t, i1 + s1, s2);
            if re1 >= 0.0 && re2 < 0.0 {
                swap_schur_blocks(t, q, i1, s1, s2)?;
                swapped = true;
                break;
            }
        }
        if !swapped {
            break;
        }
    }
    let stable_rows = schur_blocks(t)
        .iter()
        .take_while(|&&(i, s)| block_real_part(t, i, s) < 0.0)
        .map(|&(_, s)| s)
        .sum();
    Ok(stable_rows)
}

fn symmetrize(p: &Matrix) -> Matrix {
    0.5 * (p + p.transpose())
}

fn check_spd(m: &Matrix, name: &str) -> MatResult<()> {
    if !m.is_square() {
        return Err(MatError::InvalidArgument(format!("{name} must be square")));
    }
    let asym = frobenius(&(m - m.transpose()));
    if asym > 1e-10 * frobenius(m).max(1.0) {
        return Err(MatError::InvalidArgument(format!("{name} must be symmetric")));
    }
    let eigs = symmetrize(m).symmetric_eigen().eigenvalues;
    if eigs.iter().any(|&l| l <= 0.0) {
        return Err(MatError::InvalidArgument(format!("{name} must be positive definite")));
    }
    Ok(())
}

/// Inverse symmetric square root of a symmetric positive-definite matrix.
pub fn spd_inverse_sqrt(q: &Matrix) -> MatResult<Matrix> {
    check_spd(q, "Q")?;
    let se = symmetrize(q).symmetric_eigen();
    let mut d = Matrix::zeros(q.nrows(), q.nrows());
    for i in 0..q.nrows() {
        d[(i, i)] = 1.0 / se.eigenvalues[i].sqrt();
    }
    Ok(&se.eigenvectors * d * se.eigenvectors.transpose())
}

fn care_residual(a: &Matrix, s: &Matrix, q: &Matrix, p: &Matrix) -> Matrix {
    a.transpose() * p + p * a + q - p * s * p
}

/// Solves the continuous algebraic Riccati equation
/// `A'P + PA + Q - P B R^-1 B' P = 0` for the stabilizing `P` via the stable
/// invariant subspace of the Hamiltonian, plus one Newton refinement step.
pub fn solve_care(a: &Matrix, b: &Matrix, q: &Matrix, r: &Matrix) -> MatResult<Matrix> {
    check_finite(a)?;
    check_finite(b)?;
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(MatError::DimensionMismatch("A must be n x n and B n x m".into()));
    }
    check_spd(q, "Q")?;
    check_spd(r, "R")?;
    if r.nrows() != b.ncols() {
        return Err(MatError::DimensionMismatch("R must match the input dimension".into()));
    }

    let s = b * solve_linear(r, &b.transpose())?;
    let mut h = Matrix::zeros(2 * n, 2 * n);
    h.view_mut((0, 0), (n, n)).copy_from(a);
    h.view_mut((0, n), (n, n)).copy_from(&(-&s));
    h.view_mut((n, 0), (n, n)).copy_from(&(-q));
    h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));

    let (mut qf, mut tf) = real_schur(&h)?;
    let stable = reorder_schur_stable_first(&mut tf, &mut qf)?;
    if stable != n {
        return Err(MatError::NotStabilizable(format!(
            "Hamiltonian has {stable} stable eigenvalues, expected {n}"
        )));
    }
    let u1 = qf.view((0, 0), (n, n)).into_owned();
    let u2 = qf.view((n, 0), (n, n)).into_owned();
    let p_t = solve_linear(&u1.transpose(), &u2.transpose())
        .map_err(|_| MatError::NotStabilizable("stable subspace basis is degenerate".into()))?;
    let p_raw = p_t.transpose();

    let drift = frobenius(&(&p_raw - p_raw.transpose()));
    if drift > 1e-6 * frobenius(&p_raw).max(1.0) {
        return Err(MatError::AsymmetryDrift { drift });
    }
    let mut p = symmetrize(&p_raw);

    // One Newton step: (A - SP)' D + D (A - SP) = -residual(P).
    let a_cl = a - &s * &p;
    let rhs = -care_residual(a, &s, q, &p);
    if let Ok(delta) = solve_sylvester(&a_cl.transpose(), &a_cl, &rhs) {
        p = symmetrize(&(p + delta));
    }

    let res = frobenius(&care_residual(a, &s, q, &p));
    if res > CARE_RESIDUAL_REL * frobenius(q).max(1.0) {
        return Err(MatError::NotStabilizable(format!(
            "residual {res:.3e} did not converge"
        )));
    }
    let closed = eigvals(&(a - &s * &p))?;
    if closed.max_real_part() >= 0.0 {
        return Err(MatError::NotStabilizable(
            "closed loop is not asymptotically stable".into(),
        ));
    }
    Ok(p)
}

fn dare_cheap_map(a: &Matrix, b: &Matrix, q: &Matrix, p: &Matrix) -> MatResult<Matrix> {
    let btpb = b.transpose() * p * b;
    let cond = condition_estimate(&btpb);
    if !cond.is_finite() || cond >= COND_BOUND {
        return Err(MatError::PivotBreakdown);
    }
    let btpa = b.transpose() * p * a;
    let gain = solve_linear(&btpb, &btpa).map_err(|_| MatError::PivotBreakdown)?;
    Ok(q + a.transpose() * p * a - a.transpose() * p * b * gain)
}

/// Solves the discrete Riccati-like equation
/// `A'PA - P + Q - A'PB (B'PB)^-1 B'PA = 0` by the fixed-point iteration
/// seeded at `P = Q`, symmetrizing every step.
pub fn solve_dare_cheap(a: &Matrix, b: &Matrix, q: &Matrix) -> MatResult<Matrix> {
    check_finite(a)?;
    check_finite(b)?;
    let n = a.nrows();
    if !a.is_square() || b.nrows() != n {
        return Err(MatError::DimensionMismatch("A must be n x n and B n x m".into()));
    }
    if b.ncols() > n {
        return Err(MatError::InvalidArgument("more inputs than states".into()));
    }
    check_spd(q, "Q")?;

    let mut p = q.clone();
    for _ in 0..DARE_MAX_ITER {
        let next = symmetrize(&dare_cheap_map(a, b, q, &p)?);
        let delta = frobenius(&(&next - &p));
        p = next;
        if delta <= DARE_TOL_REL * frobenius(&p).max(1.0) {
            return Ok(p);
        }
    }
    Err(MatError::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat(rows: usize, cols: usize, data: &[f64]) -> Matrix {
        Matrix::from_row_slice(rows, cols, data)
    }

    #[test]
    fn solve_linear_identity() {
        let a = Matrix::identity(2, 2);
        let b = mat(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let x = solve_linear(&a, &b).unwrap();
        assert_relative_eq!(x, b, epsilon = 1e-14);
    }

    #[test]
    fn solve_linear_diagonal() {
        let a = mat(2, 2, &[2.0, 0.0, 0.0, 4.0]);
        let b = mat(2, 1, &[2.0, 8.0]);
        let x = solve_linear(&a, &b).unwrap();
        assert_relative_eq!(x, mat(2, 1, &[1.0, 2.0]), epsilon = 1e-14);
    }

    #[test]
    fn solve_linear_newton_seed() {
        // Closed-form 2x2 inverse: det = 5.2116, X = A^-1 B.
        let a = mat(2, 2, &[-0.84, 1.0, -4.8, -0.49]);
        let b = mat(2, 2, &[-2.28, 0.0, 0.6, 0.0]);
        let x = solve_linear(&a, &b).unwrap();
        let det: f64 = 5.2116;
        let expected = mat(2, 2, &[0.5172 / det, 0.0, -11.448 / det, 0.0]);
        assert_relative_eq!(x, expected, epsilon = 1e-12);
        assert!((x[(0, 0)] - 0.0992).abs() < 5e-5);
        assert!((x[(1, 0)] + 2.1966).abs() < 5e-5);
        let resid = (&a * &x - &b).norm();
        assert!(resid <= 1e-10 * b.norm().max(1.0));
    }

    #[test]
    fn solve_linear_rejects_singular() {
        let a = mat(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = Matrix::identity(2, 2);
        assert!(matches!(solve_linear(&a, &b), Err(MatError::SingularMatrix { .. })));
    }

    #[test]
    fn eigvals_diagonal() {
        let a = Matrix::from_diagonal(&Vector::from_vec(vec![1.0, 2.0, 3.0]));
        let s = eigvals(&a).unwrap();
        let re: Vec<f64> = s.values().iter().map(|z| z.re).collect();
        assert_eq!(re, vec![1.0, 2.0, 3.0]);
        assert!(s.values().iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn eigvals_rotation_generator() {
        let a = mat(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = eigvals(&a).unwrap();
        assert_eq!(s.len(), 2);
        for z in s.values() {
            assert!(z.re.abs() < 1e-12);
            assert!((z.im.abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn eigvals_pinned_laplacian_exact() {
        // L+B of the three-agent fixture is lower triangular; the defective
        // eigenvalue pair {1,1} must come out exact.
        let lb = mat(3, 3, &[1.0, 0.0, 0.0, -1.0, 1.0, 0.0, -1.0, 0.0, 2.0]);
        let s = eigvals(&lb).unwrap();
        let mut re: Vec<f64> = s.values().iter().map(|z| z.re).collect();
        re.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(re, vec![1.0, 1.0, 2.0]);
    }

    #[test]
    fn sigma_max_cases() {
        assert_eq!(sigma_max(&Matrix::identity(3, 3)).unwrap(), 1.0);
        assert_eq!(sigma_max(&mat(2, 2, &[3.0, 0.0, 0.0, 4.0])).unwrap(), 4.0);
        assert_eq!(sigma_max(&Matrix::zeros(2, 3)).unwrap(), 0.0);
    }

    #[test]
    fn sylvester_scalar() {
        let x = solve_sylvester(&mat(1, 1, &[2.0]), &mat(1, 1, &[3.0]), &mat(1, 1, &[10.0])).unwrap();
        assert_relative_eq!(x[(0, 0)], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn sylvester_identity_coefficient() {
        let f = mat(2, 3, &[1.0, -2.0, 0.5, 3.0, 4.0, -1.0]);
        let x = solve_sylvester(&Matrix::identity(2, 2), &Matrix::zeros(3, 3), &f).unwrap();
        assert_relative_eq!(x, f, epsilon = 1e-12);
    }

    #[test]
    fn sylvester_complex_spectrum_residual() {
        // Both coefficients have complex eigenvalue pairs, which exercises the
        // 2x2 blocks of the quasi-triangular sweep.
        let e1 = mat(3, 3, &[0.5, 2.0, 0.0, -2.0, 0.5, 1.0, 0.0, 0.0, 1.5]);
        let e2 = mat(2, 2, &[0.2, 1.0, -1.0, 0.2]);
        let f = mat(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = solve_sylvester(&e1, &e2, &f).unwrap();
        let resid = (&e1 * &x + &x * &e2 - &f).norm();
        assert!(resid <= 1e-10 * f.norm().max(1.0), "residual {resid}");
    }

    #[test]
    fn sylvester_detects_overlap() {
        let e1 = mat(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let e2 = mat(2, 2, &[-1.0, 0.0, 0.0, -3.0]);
        let f = Matrix::identity(2, 2);
        assert!(matches!(
            solve_sylvester(&e1, &e2, &f),
            Err(MatError::SpectrumOverlap { .. })
        ));
    }

    #[test]
    fn care_scalar_analytic() {
        // a=0: -p^2 + 1 = 0 -> p = 1; a=1: p^2 - 2p - 1 = 0 -> p = 1 + sqrt(2).
        let one = Matrix::identity(1, 1);
        let p = solve_care(&Matrix::zeros(1, 1), &one, &one, &one).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0, epsilon = 1e-10);
        let p = solve_care(&one, &one, &one, &one).unwrap();
        assert_relative_eq!(p[(0, 0)], 1.0 + 2.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn care_identity_pair() {
        let n = 2;
        let p = solve_care(
            &Matrix::zeros(n, n),
            &Matrix::identity(n, n),
            &Matrix::identity(n, n),
            &Matrix::identity(n, n),
        )
        .unwrap();
        assert_relative_eq!(p, Matrix::identity(n, n), epsilon = 1e-10);
    }

    #[test]
    fn care_six_states_two_inputs() {
        // Larger unstable plant with a tall input matrix: the Hamiltonian has
        // twelve eigenvalues and the reordering must pull six stable ones to
        // the front through mixed 1x1/2x2 swaps.
        let a = mat(
            6,
            6,
            &[
                0.5, 1.0, 0.0, 0.2, -0.3, 0.1, //
                -1.0, 0.5, 0.4, 0.0, 0.2, -0.2, //
                0.0, 0.3, -0.2, 1.5, 0.0, 0.4, //
                0.1, 0.0, -1.5, -0.2, 0.3, 0.0, //
                0.2, -0.1, 0.0, 0.3, 0.8, 0.5, //
                0.0, 0.2, 0.4, 0.0, -0.5, 0.8,
            ],
        );
        let b = mat(
            6,
            2,
            &[
                1.0, 0.0, //
                0.0, 0.2, //
                0.3, 1.0, //
                0.0, 0.4, //
                0.5, 0.0, //
                0.2, 0.6,
            ],
        );
        let q = Matrix::identity(6, 6);
        let r = Matrix::identity(2, 2);
        let p = solve_care(&a, &b, &q, &r).unwrap();
        let s = &b * &b.transpose();
        let resid = care_residual(&a, &s, &q, &p).norm();
        assert!(resid <= 1e-8 * q.norm(), "residual {resid}");
        assert!(eigvals(&(&a - &s * &p)).unwrap().max_real_part() < 0.0);
        assert!(p.clone().symmetric_eigen().eigenvalues.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn sylvester_many_complex_pairs() {
        // Three rotation blocks against two: every diagonal block of both
        // Schur forms is 2x2.
        let mut e1 = Matrix::zeros(6, 6);
        for (k, (re, im)) in [(2.0, 1.0), (1.5, 3.0), (3.0, 0.5)].iter().enumerate() {
            e1[(2 * k, 2 * k)] = *re;
            e1[(2 * k, 2 * k + 1)] = *im;
            e1[(2 * k + 1, 2 * k)] = -im;
            e1[(2 * k + 1, 2 * k + 1)] = *re;
        }
        // Couple the blocks so the Schur form is not already block diagonal.
        e1[(0, 3)] = 0.7;
        e1[(1, 4)] = -0.4;
        let rot = Matrix::from_row_slice(2, 2, &[0.6, 0.8, -0.8, 0.6]);
        let e1 = &rot.kronecker(&Matrix::identity(3, 3)).transpose()
            * &e1
            * rot.kronecker(&Matrix::identity(3, 3));
        let mut e2 = Matrix::zeros(4, 4);
        for (k, (re, im)) in [(1.0, 2.0), (0.5, 0.9)].iter().enumerate() {
            e2[(2 * k, 2 * k)] = *re;
            e2[(2 * k, 2 * k + 1)] = *im;
            e2[(2 * k + 1, 2 * k)] = -im;
            e2[(2 * k + 1, 2 * k + 1)] = *re;
        }
        e2[(0, 2)] = 0.3;
        let f = Matrix::from_fn(6, 4, |i, j| ((i * 4 + j) as f64 * 0.37).sin());
        let x = solve_sylvester(&e1, &e2, &f).unwrap();
        let resid = (&e1 * &x + &x * &e2 - &f).norm();
        assert!(resid <= 1e-10 * f.norm().max(1.0), "residual {resid}");
    }

    #[test]
    fn care_requires_spd_weights() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::identity(2, 2);
        let q_bad = mat(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            solve_care(&a, &b, &q_bad, &Matrix::identity(2, 2)),
            Err(MatError::InvalidArgument(_))
        ));
    }

    #[test]
    fn dare_cheap_scalar_deadbeat() {
        for a_val in [0.3, -1.7, 4.0] {
            let a = mat(1, 1, &[a_val]);
            let p = solve_dare_cheap(&a, &Matrix::identity(1, 1), &Matrix::identity(1, 1)).unwrap();
            assert_eq!(p[(0, 0)], 1.0);
        }
    }

    #[test]
    fn dare_cheap_square_input_is_q() {
        let a = mat(2, 2, &[0.9, 0.2, -0.4, 0.5]);
        let b = mat(2, 2, &[1.0, 0.3, -0.2, 2.0]);
        let q = Matrix::identity(2, 2);
        let p = solve_dare_cheap(&a, &b, &q).unwrap();
        assert_relative_eq!(p, q, epsilon = 1e-12);
    }

    #[test]
    fn dare_cheap_fixed_point_resubstitution() {
        let a = mat(2, 2, &[0.9, 0.2, -0.4, 0.5]);
        let b = mat(2, 1, &[1.0, 0.5]);
        let q = Matrix::identity(2, 2);
        let p = solve_dare_cheap(&a, &b, &q).unwrap();
        let back = dare_cheap_map(&a, &b, &q, &p).unwrap();
        assert!((&back - &p).norm() <= 1e-10 * p.norm());
    }

    #[test]
    fn dare_cheap_pivot_breakdown() {
        let a = Matrix::identity(2, 2);
        let b = Matrix::zeros(2, 1);
        assert!(matches!(
            solve_dare_cheap(&a, &b, &Matrix::identity(2, 2)),
            Err(MatError::PivotBreakdown)
        ));
    }

    #[test]
    fn schur_handles_plus_minus_symmetric_spectra() {
        // Hamiltonian-structured matrices have spectra symmetric about the
        // imaginary axis; plain Francis shifts cycle on them without the
        // exceptional-shift escape.
        let a = mat(2, 2, &[-0.489522612113649, 0.12021490328645443, 0.0, 0.592896181253396]);
        let n = 2;
        let mut h = Matrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&a);
        h.view_mut((0, n), (n, n)).copy_from(&(-Matrix::identity(n, n)));
        h.view_mut((n, 0), (n, n)).copy_from(&(-Matrix::identity(n, n)));
        h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
        let spectrum = eigvals(&h).unwrap();
        let negated = ComplexSpectrum::new(spectrum.values().iter().map(|z| -z).collect());
        let gap = spectrum.matched_distance(&negated).unwrap();
        assert!(gap <= 1e-10, "spectrum not symmetric: gap {gap}");
    }

    #[test]
    fn matched_distance_permutation_invariant() {
        let s1 = ComplexSpectrum::new(vec![
            Complex::new(1.0, 2.0),
            Complex::new(-3.0, 0.0),
            Complex::new(1.0, -2.0),
        ]);
        let s2 = ComplexSpectrum::new(vec![
            Complex::new(-3.0, 0.0),
            Complex::new(1.0, -2.0),
            Complex::new(1.0, 2.0),
        ]);
        assert_eq!(s1.matched_distance(&s2).unwrap(), 0.0);
    }

    fn spaced_diag_matrix(n: usize, base: f64, seed: &[f64]) -> Matrix {
        // Diagonally dominant with well-separated diagonal: keeps both the
        // Sylvester solvability gap and conditioning comfortable.
        Matrix::from_fn(n, n, |i, j| {
            if i == j {
                base + 2.0 * i as f64
            } else {
                0.3 * seed[(i * n + j) % seed.len()]
            }
        })
    }

    proptest! {
        #[test]
        fn sylvester_residual_random(
            p in 1usize..=8,
            q in 1usize..=8,
            seed in proptest::collection::vec(-1.0f64..1.0, 64),
            fseed in proptest::collection::vec(-5.0f64..5.0, 64),
        ) {
            let e1 = spaced_diag_matrix(p, 3.0, &seed);
            let e2 = spaced_diag_matrix(q, 2.5, &fseed);
            let f = Matrix::from_fn(p, q, |i, j| fseed[(i * q + j) % fseed.len()]);
            let x = solve_sylvester(&e1, &e2, &f).unwrap();
            let resid = (&e1 * &x + &x * &e2 - &f).norm();
            prop_assert!(resid <= 1e-9 * f.norm().max(1.0), "residual {}", resid);
        }

        #[test]
        fn eigvals_spectral_moments(
            n in 2usize..=6,
            aseed in proptest::collection::vec(-2.0f64..2.0, 36),
        ) {
            // Sum of eigenvalues equals the trace and the sum of squares
            // equals trace(A^2); catches joint errors across the spectrum.
            let a = Matrix::from_fn(n, n, |i, j| aseed[i * n + j]);
            let s = eigvals(&a).unwrap();
            let scale = a.norm().max(1.0);
            let sum: Complex<f64> = s.values().iter().sum();
            prop_assert!((sum.re - a.trace()).abs() <= 1e-9 * scale, "trace {} vs {}", sum.re, a.trace());
            prop_assert!(sum.im.abs() <= 1e-9 * scale);
            let sum_sq: Complex<f64> = s.values().iter().map(|z| z * z).sum();
            let tr_sq = (&a * &a).trace();
            prop_assert!((sum_sq.re - tr_sq).abs() <= 1e-8 * scale * scale);
        }

        #[test]
        fn eigvals_hamiltonian_symmetry(
            n in 1usize..=4,
            aseed in proptest::collection::vec(-2.0f64..2.0, 16),
        ) {
            let a = Matrix::from_fn(n, n, |i, j| aseed[i * n + j]);
            let mut h = Matrix::zeros(2 * n, 2 * n);
            h.view_mut((0, 0), (n, n)).copy_from(&a);
            h.view_mut((0, n), (n, n)).copy_from(&(-Matrix::identity(n, n)));
            h.view_mut((n, 0), (n, n)).copy_from(&(-Matrix::identity(n, n)));
            h.view_mut((n, n), (n, n)).copy_from(&(-a.transpose()));
            let spectrum = eigvals(&h).unwrap();
            let negated = ComplexSpectrum::new(spectrum.values().iter().map(|z| -z).collect());
            let gap = spectrum.matched_distance(&negated).unwrap();
            prop_assert!(gap <= 1e-8 * h.norm().max(1.0), "gap {}", gap);
        }

        #[test]
        fn eigvals_similarity_invariance(
            n in 2usize..=6,
            aseed in proptest::collection::vec(-2.0f64..2.0, 36),
            tseed in proptest::collection::vec(-0.2f64..0.2, 36),
        ) {
            let a = Matrix::from_fn(n, n, |i, j| aseed[i * n + j]);
            // T = I + small perturbation stays well-conditioned.
            let t = Matrix::identity(n, n) + Matrix::from_fn(n, n, |i, j| tseed[i * n + j]);
            let t_inv = t.clone().try_inverse().unwrap();
            let sim = &t_inv * &a * &t;
            let gap = eigvals(&a).unwrap().matched_distance(&eigvals(&sim).unwrap()).unwrap();
            prop_assert!(gap <= 1e-8 * a.norm().max(1.0), "gap {}", gap);
        }

        #[test]
        fn sigma_max_scales_homogeneously(
            rows in 1usize..=5,
            cols in 1usize..=5,
            alpha in -10.0f64..10.0,
            seed in proptest::collection::vec(-3.0f64..3.0, 25),
        ) {
            let a = Matrix::from_fn(rows, cols, |i, j| seed[i * cols + j]);
            let lhs = sigma_max(&(alpha * &a)).unwrap();
            let rhs = alpha.abs() * sigma_max(&a).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
        }

        #[test]
        fn care_random_stabilizable(
            n in 1usize..=4,
            aseed in proptest::collection::vec(-1.0f64..1.0, 16),
        ) {
            let a = Matrix::from_fn(n, n, |i, j| aseed[i * n + j]);
            let b = Matrix::identity(n, n);
            let q = Matrix::identity(n, n);
            let r = Matrix::identity(n, n);
            let p = solve_care(&a, &b, &q, &r).unwrap();
            // Symmetry is exact after the final symmetrization.
            prop_assert!((&p - p.transpose()).norm() <= 1e-12 * p.norm());
            let res = care_residual(&a, &(&b * &b.transpose()), &q, &p).norm();
            prop_assert!(res <= 1e-8 * q.norm(), "residual {}", res);
            let closed = eigvals(&(&a - &b * &b.transpose() * &p)).unwrap();
            prop_assert!(closed.max_real_part() < 0.0);
        }
    }
}

