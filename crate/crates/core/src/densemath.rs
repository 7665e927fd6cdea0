//! Dense complex linear algebra for the small matrices this crate works with.
//!
//! Everything here is self-contained: a cyclic complex Jacobi eigensolver for
//! Hermitian matrices, a one-sided Jacobi SVD, and the handful of derived
//! quantities the rest of the crate needs (trace norm, operator norm, PSD
//! square root, Kronecker product, partial trace). Matrices are stored
//! row-major and are expected to stay well below 64×64.

use std::cmp::Ordering;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Maximum number of Jacobi sweeps before reporting `NoConvergence`.
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalues below this are clipped to zero by [`psd_sqrt`]; anything more
/// negative is rejected.
pub const PSD_CLIP: f64 = 1e-10;

/// Relative symmetry tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::from_vec(n_rows, n_cols, rows.concat())
    }

    /// Real-valued matrix from row-major entries. Panics on length mismatch.
    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count");
        Self {
            rows,
            cols,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&c)
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        let mut m = Self::zeros(u.len(), v.len());
        for (i, ui) in u.iter().enumerate() {
            for (j, vj) in v.iter().enumerate() {
                m[(i, j)] = ui * vj.conj();
            }
        }
        m
    }

    /// Matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let n_cols = columns.len();
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::DimensionMismatch("ragged columns".into()));
        }
        let mut m = Self::zeros(n_rows, n_cols);
        for (j, col) in columns.iter().enumerate() {
            m.set_column(j, col);
        }
        if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[C64]) {
        assert_eq!(values.len(), self.rows, "column length");
        for (i, &z) in values.iter().enumerate() {
            self[(i, j)] = z;
        }
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entry modulus of `A − A†`.
    pub fn hermitian_deviation(&self) -> f64 {
        assert!(self.is_square(), "hermitian_deviation on non-square matrix");
        let n = self.rows;
        let mut dev = 0.0f64;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// Largest entry modulus of `A†A − I`.
    pub fn unitary_deviation(&self) -> f64 {
        let gram = &self.adjoint() * self;
        (&gram - &Self::identity(self.cols)).max_abs()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.cols, "matrix-vector shape");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `AB − BA`.
    pub fn commutator(a: &Self, b: &Self) -> Self {
        &(a * b) - &(b * a)
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let av = self.mul_vec(v);
        v.iter().zip(&av).map(|(x, y)| x.conj() * y).sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product shape");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (d, b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sum shape");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "difference shape");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Spectral decomposition of a Hermitian matrix. Eigenvalues ascend; the
/// columns of `eigenvectors` are the matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V·f(Λ)·V†`.
    pub fn reassemble_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let n = v.rows();
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * v[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Which tensor factor an operation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

impl Subsystem {
    pub fn other(self) -> Self {
        match self {
            Subsystem::A => Subsystem::B,
            Subsystem::B => Subsystem::A,
        }
    }
}

fn check_square(a: &ComplexMatrix, what: &str) -> Result<usize> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{what} requires a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    Ok(a.rows())
}

fn check_finite(a: &ComplexMatrix) -> Result<()> {
    if a.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Unitary acting on coordinates `(p, q)` that diagonalizes the Hermitian
/// 2×2 block `[[app, apq], [conj(apq), aqq]]` via `J†·B·J`.
/// Returned as `(j_pp, j_pq, j_qp, j_qq)`.
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (C64, C64, C64, C64) {
    let g = apq.norm();
    let phase = (apq / g).conj();
    let theta = (aqq - app) / (2.0 * g);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    (
        C64::new(c, 0.0),
        C64::new(s, 0.0),
        phase * (-s),
        phase * c,
    )
}

/// Cyclic Jacobi on a Hermitian matrix held in `m` (row-major, n×n).
/// Accumulates rotations into `v` when given.
fn jacobi_sweeps(m: &mut ComplexMatrix, mut v: Option<&mut ComplexMatrix>) -> Result<()> {
    let n = m.rows();
    let scale = m.frobenius_norm();
    if scale == 0.0 || n < 2 {
        return Ok(());
    }
    let stop = 1e-15 * scale;
    let negligible = 1e-300_f64.max(f64::EPSILON * 1e-3 * scale);
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            return Ok(());
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.norm() <= negligible {
                    continue;
                }
                let (jpp, jpq, jqp, jqq) = jacobi_rotation(m[(p, p)].re, m[(q, q)].re, apq);
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = mkp * jpp + mkq * jqp;
                    m[(k, q)] = mkp * jpq + mkq * jqq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = jpp.conj() * mpk + jqp.conj() * mqk;
                    m[(q, k)] = jpq.conj() * mpk + jqq.conj() * mqk;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                if let Some(v) = v.as_deref_mut() {
                    for k in 0..n {
                        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                        v[(k, p)] = vkp * jpp + vkq * jqp;
                        v[(k, q)] = vkp * jpq + vkq * jqq;
                    }
                }
            }
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
}

fn hermitian_checked(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_square(a, "hermitian_eig")?;
    check_finite(a)?;
    let asymmetry = a.hermitian_deviation();
    if asymmetry > HERMITIAN_TOL * a.max_abs() {
        return Err(Error::NotHermitian { asymmetry });
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (a + &a.adjoint()).scale_real(0.5);
    Ok(sym)
}

/// Rotates `v` so its first non-negligible entry is real and positive.
fn fix_phase(v: &mut [C64]) {
    if let Some(lead) = v.iter().copied().find(|z| z.norm() > 1e-12) {
        let rot = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

fn lexicographic(a: &[C64], b: &[C64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        let ord = x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im));
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Eigenvalues are returned ascending. Each eigenvector is phase-fixed so its
/// first non-negligible entry is real positive; eigenvectors sharing an
/// eigenvalue (to 1e-12 relative) are ordered lexicographically by the
/// (real, imag) parts of their entries.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEigen> {
    let mut m = hermitian_checked(a)?;
    let n = m.rows();
    let mut v = ComplexMatrix::identity(n);
    jacobi_sweeps(&mut m, Some(&mut v))?;

    let mut pairs: Vec<(f64, Vec<C64>)> = (0..n)
        .map(|k| {
            let mut col = v.column(k);
            fix_phase(&mut col);
            (m[(k, k)].re, col)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let tie = 1e-12 * a.max_abs().max(f64::MIN_POSITIVE);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= tie {
            end += 1;
        }
        pairs[start..end].sort_by(|x, y| lexicographic(&x.1, &y.1));
        start = end;
    }

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let columns: Vec<Vec<C64>> = pairs.into_iter().map(|p| p.1).collect();
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors: ComplexMatrix::from_columns(&columns)?,
    })
}

/// Eigenvalues only (ascending); skips eigenvector accumulation.
pub fn hermitian_eigenvalues(a: &ComplexMatrix) -> Result<Vec<f64>> {
    let mut m = hermitian_checked(a)?;
    jacobi_sweeps(&mut m, None)?;
    let mut ev: Vec<f64> = (0..m.rows()).map(|k| m[(k, k)].re).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Thin singular value decomposition `A = U·diag(s)·V†` with `s` descending.
///
/// For an m×n input with k = min(m, n): `u` is m×k, `v` is n×k, both with
/// orthonormal columns.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// One-sided (Hestenes) Jacobi SVD.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    check_finite(a)?;
    if a.rows() < a.cols() {
        let t = svd(&a.adjoint())?;
        return Ok(Svd {
            u: t.v,
            singular_values: t.singular_values,
            v: t.u,
        });
    }
    let (m, n) = (a.rows(), a.cols());
    // Column-major working copy: cols[j] is column j of A·V.
    let mut cols: Vec<Vec<C64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v = ComplexMatrix::identity(n);
    let tol = 2.0 * (m.max(2) as f64) * f64::EPSILON;

    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = cols[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = cols[q].iter().map(|z| z.norm_sqr()).sum();
                let gamma: C64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x.conj() * y).sum();
                if alpha == 0.0 || beta == 0.0 || gamma.norm() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let (jpp, jpq, jqp, jqq) = jacobi_rotation(alpha, beta, gamma);
                for k in 0..m {
                    let (x, y) = (cols[p][k], cols[q][k]);
                    cols[p][k] = x * jpp + y * jqp;
                    cols[q][k] = x * jpq + y * jqq;
                }
                for k in 0..n {
                    let (x, y) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = x * jpp + y * jqp;
                    v[(k, q)] = x * jpq + y * jqq;
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let largest = norms.iter().copied().fold(0.0, f64::max);
    let floor = largest * (m as f64) * f64::EPSILON;
    let mut u_cols: Vec<Option<Vec<C64>>> = Vec::with_capacity(n);
    let mut singular_values = Vec::with_capacity(n);
    let mut v_sorted = ComplexMatrix::zeros(n, n);
    for (slot, &j) in order.iter().enumerate() {
        singular_values.push(norms[j]);
        v_sorted.set_column(slot, &v.column(j));
        if norms[j] > floor {
            u_cols.push(Some(cols[j].iter().map(|z| z / norms[j]).collect()));
        } else {
            u_cols.push(None);
        }
    }
    let u = complete_columns(m, u_cols);
    Ok(Svd {
        u,
        singular_values,
        v: v_sorted,
    })
}

fn orthogonalize_against(v: &mut [C64], basis: &[Vec<C64>]) -> f64 {
    for _ in 0..2 {
        for b in basis {
            let overlap: C64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= overlap * bi;
            }
        }
    }
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Fills `None` slots with unit vectors orthogonal to every other column,
/// drawn from the standard basis by Gram-Schmidt.
fn complete_columns(m: usize, slots: Vec<Option<Vec<C64>>>) -> ComplexMatrix {
    let mut fixed: Vec<Vec<C64>> = slots.iter().flatten().cloned().collect();
    let mut candidate = 0;
    let mut out = ComplexMatrix::zeros(m, slots.len());
    for (j, slot) in slots.into_iter().enumerate() {
        let col = match slot {
            Some(c) => c,
            None => loop {
                assert!(candidate < m, "ran out of completion candidates");
                let mut e = vec![ZERO; m];
                e[candidate] = ONE;
                candidate += 1;
                let norm = orthogonalize_against(&mut e, &fixed);
                if norm > 1e-6 {
                    let unit: Vec<C64> = e.iter().map(|z| z / norm).collect();
                    fixed.push(unit.clone());
                    break unit;
                }
            },
        };
        out.set_column(j, &col);
    }
    out
}

/// Extends the orthonormal columns of an m×k matrix to a full m×m unitary.
pub fn complete_to_unitary(partial: &ComplexMatrix) -> ComplexMatrix {
    let m = partial.rows();
    let mut slots: Vec<Option<Vec<C64>>> =
        (0..partial.cols()).map(|j| Some(partial.column(j))).collect();
    slots.resize(m, None);
    complete_columns(m, slots)
}

/// Schatten-1 norm: the sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> Result<f64> {
    check_square(a, "trace_norm")?;
    Ok(svd(a)?.singular_values.iter().sum())
}

/// Trace norm of a Hermitian matrix, from its eigenvalues.
pub fn hermitian_trace_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?.iter().map(|l| l.abs()).sum())
}

/// Largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> Result<f64> {
    Ok(svd(a)?.singular_values.first().copied().unwrap_or(0.0))
}

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues in `[-1e-10, 0)` are clipped to zero.
pub fn psd_sqrt(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(a)?;
    check_psd(&eig.eigenvalues)?;
    Ok(eig.reassemble_with(|l| l.max(0.0).sqrt()))
}

pub(crate) fn check_psd(eigenvalues: &[f64]) -> Result<()> {
    match eigenvalues.first() {
        Some(&min) if min < -PSD_CLIP => Err(Error::NotPsd {
            min_eigenvalue: min,
        }),
        _ => Ok(()),
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac, br, bc) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Partial trace of a `(dA·dB)`-square operator over `traced`, with the
/// global index convention `i = x_A·dB + x_B`.
pub fn partial_trace(a: &ComplexMatrix, dims: (usize, usize), traced: Subsystem) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if !a.is_square() || a.rows() != da * db {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of a {}x{} matrix with dims ({da}, {db})",
            a.rows(),
            a.cols()
        )));
    }
    let out = match traced {
        Subsystem::B => {
            let mut r = ComplexMatrix::zeros(da, da);
            for i in 0..da {
                for j in 0..da {
                    r[(i, j)] = (0..db).map(|k| a[(i * db + k, j * db + k)]).sum();
                }
            }
            r
        }
        Subsystem::A => {
            let mut r = ComplexMatrix::zeros(db, db);
            for i in 0..db {
                for j in 0..db {
                    r[(i, j)] = (0..da).map(|k| a[(k * db + i, k * db + j)]).sum();
                }
            }
            r
        }
    };
    Ok(out)
}
