//! Bipartite quantum states, orthonormal bases and the Schmidt decomposition.
//!
//! Global index convention: amplitude / matrix index `i = x_A·dB + x_B`.

mod file;
mod spec;

pub use file::{parse_state_file, read_state_file, write_state_file, StateFile};
pub use spec::{make_state, StateSpec};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::densemath::{
    complete_to_unitary, hermitian_eig, kron, partial_trace, svd, ComplexMatrix, Subsystem, C64,
    ONE, ZERO,
};
use crate::error::{Error, Result};

/// Default cap on the total dimension `dA·dB`.
pub const DEFAULT_DIM_CAP: usize = 64;

/// Tolerance for normalization, hermiticity, trace and positivity checks.
pub const STATE_TOL: f64 = 1e-10;

/// Tolerance accepted when reading external data (state files); inputs inside
/// it are renormalized exactly.
pub const INPUT_TOL: f64 = 1e-8;

/// Schmidt coefficients above this count toward the Schmidt rank.
pub const SCHMIDT_CUTOFF: f64 = 1e-9;

/// Local dimensions of `H_A ⊗ H_B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BipartiteDims {
    a: usize,
    b: usize,
}

impl BipartiteDims {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        Self::with_cap(a, b, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(a: usize, b: usize, cap: usize) -> Result<Self> {
        if a < 2 || b < 2 {
            return Err(Error::InvalidState(format!(
                "dims must both be at least 2, got ({a}, {b})"
            )));
        }
        if a * b > cap {
            return Err(Error::InvalidState(format!(
                "dims ({a}, {b}) exceed the total-dimension cap {cap}"
            )));
        }
        Ok(Self { a, b })
    }

    /// A single system of dimension `d` viewed as `H_A ⊗ C¹`.
    pub fn single(d: usize) -> Result<Self> {
        if !(2..=DEFAULT_DIM_CAP).contains(&d) {
            return Err(Error::InvalidState(format!("single-system dimension {d}")));
        }
        Ok(Self { a: d, b: 1 })
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn total(&self) -> usize {
        self.a * self.b
    }

    pub fn local(&self, side: Subsystem) -> usize {
        match side {
            Subsystem::A => self.a,
            Subsystem::B => self.b,
        }
    }

    pub fn swapped(&self) -> Self {
        Self {
            a: self.b,
            b: self.a,
        }
    }

    pub fn as_tuple(&self) -> (usize, usize) {
        (self.a, self.b)
    }
}

/// Normalized pure state on `H_A ⊗ H_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartitePureState {
    dims: BipartiteDims,
    amplitudes: Vec<C64>,
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

impl BipartitePureState {
    pub fn new(dims: BipartiteDims, amplitudes: Vec<C64>) -> Result<Self> {
        Self::with_tolerance(dims, amplitudes, STATE_TOL)
    }

    /// Accepts `|‖ψ‖² − 1| ≤ tol` and renormalizes exactly.
    pub fn with_tolerance(dims: BipartiteDims, amplitudes: Vec<C64>, tol: f64) -> Result<Self> {
        if amplitudes.len() != dims.total() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for dims {:?}",
                amplitudes.len(),
                dims.as_tuple()
            )));
        }
        if amplitudes.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n2 = norm_sqr(&amplitudes);
        if (n2 - 1.0).abs() > tol {
            return Err(Error::InvalidState(format!("squared norm {n2} is not 1")));
        }
        let inv = 1.0 / n2.sqrt();
        Ok(Self {
            dims,
            amplitudes: amplitudes.into_iter().map(|z| z * inv).collect(),
        })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(dims: BipartiteDims, amplitudes: Vec<C64>) -> Result<Self> {
        let n2 = norm_sqr(&amplitudes);
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::InvalidState("zero or non-finite vector".into()));
        }
        let inv = 1.0 / n2.sqrt();
        Self::new(dims, amplitudes.into_iter().map(|z| z * inv).collect())
    }

    /// `|ψ_A⟩ ⊗ |ψ_B⟩`.
    pub fn product(psi_a: &[C64], psi_b: &[C64]) -> Result<Self> {
        let dims = BipartiteDims::new(psi_a.len(), psi_b.len())?;
        let amps = psi_a
            .iter()
            .flat_map(|a| psi_b.iter().map(move |b| a * b))
            .collect();
        Self::normalized(dims, amps)
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    /// Amplitudes reshaped to the dA×dB matrix `M[x_A][x_B]`.
    pub fn amplitude_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_vec(self.dims.a, self.dims.b, self.amplitudes.clone())
            .expect("amplitude count checked at construction")
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn projector(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    pub fn to_density(&self) -> DensityOperator {
        DensityOperator {
            dims: self.dims,
            matrix: self.projector(),
        }
    }

    /// Reduced state of the `kept` subsystem.
    pub fn reduced(&self, kept: Subsystem) -> ComplexMatrix {
        let m = self.amplitude_matrix();
        match kept {
            Subsystem::A => &m * &m.adjoint(),
            Subsystem::B => {
                // ρ_B[j][k] = Σ_i M[i][j]·conj(M[i][k]), the transpose of M†M
                let g = &m.adjoint() * &m;
                let mut t = ComplexMatrix::zeros(g.rows(), g.cols());
                for j in 0..g.rows() {
                    for k in 0..g.cols() {
                        t[(j, k)] = g[(k, j)];
                    }
                }
                t
            }
        }
    }

    /// The same state with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        let (a, b) = self.dims.as_tuple();
        let mut amps = vec![ZERO; a * b];
        for i in 0..a {
            for j in 0..b {
                amps[j * a + i] = self.amplitudes[i * b + j];
            }
        }
        Self {
            dims: self.dims.swapped(),
            amplitudes: amps,
        }
    }

    pub fn apply_local_unitary(&self, u_a: &ComplexMatrix, u_b: &ComplexMatrix) -> Result<Self> {
        let u = local_unitary(self.dims, u_a, u_b)?;
        Self::normalized(self.dims, u.mul_vec(&self.amplitudes))
    }
}

/// Density operator on `H_A ⊗ H_B`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    dims: BipartiteDims,
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(dims: BipartiteDims, matrix: ComplexMatrix) -> Result<Self> {
        let n = dims.total();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dims {:?}",
                matrix.rows(),
                matrix.cols(),
                dims.as_tuple()
            )));
        }
        let asym = matrix.hermitian_deviation();
        if asym > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {asym:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min = hermitian_eig(&matrix)?.eigenvalues[0];
        if min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { dims, matrix })
    }

    /// Accepts inputs within `tol` of the invariants, then symmetrizes, clips
    /// negative eigenvalues and renormalizes the trace exactly.
    pub fn with_tolerance(dims: BipartiteDims, matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        let n = dims.total();
        if matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for dims {:?}",
                matrix.rows(),
                matrix.cols(),
                dims.as_tuple()
            )));
        }
        let asym = matrix.hermitian_deviation();
        if asym > tol {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {asym:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let sym = (&matrix + &matrix.adjoint()).scale_real(0.5);
        let eig = hermitian_eig(&sym)?;
        if eig.eigenvalues[0] < -tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                eig.eigenvalues[0]
            )));
        }
        let clipped = if eig.eigenvalues[0] < 0.0 {
            eig.reassemble_with(|l| l.max(0.0))
        } else {
            sym
        };
        let t = clipped.trace().re;
        Self::new(dims, clipped.scale_real(1.0 / t))
    }

    /// Builds `Σ_k p_k |ψ_k⟩⟨ψ_k|` from a pure-state ensemble.
    pub fn mixture(weights: &[f64], states: &[BipartitePureState]) -> Result<Self> {
        let dims = states
            .first()
            .ok_or_else(|| Error::InvalidState("empty ensemble".into()))?
            .dims();
        let mut m = ComplexMatrix::zeros(dims.total(), dims.total());
        for (w, s) in weights.iter().zip(states) {
            if s.dims() != dims {
                return Err(Error::DimensionMismatch("ensemble dims differ".into()));
            }
            m = &m + &s.projector().scale_real(*w);
        }
        Self::with_tolerance(dims, m, INPUT_TOL)
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn reduced(&self, kept: Subsystem) -> ComplexMatrix {
        partial_trace(&self.matrix, self.dims.as_tuple(), kept.other())
            .expect("dims checked at construction")
    }

    /// Number of eigenvalues above `cutoff`.
    pub fn rank(&self, cutoff: f64) -> Result<usize> {
        Ok(hermitian_eig(&self.matrix)?
            .eigenvalues
            .iter()
            .filter(|&&l| l > cutoff)
            .count())
    }

    /// The pure state this operator projects onto, if it is rank one to
    /// within `tol` (largest eigenvalue ≥ 1 − tol).
    pub fn as_pure(&self, tol: f64) -> Result<Option<BipartitePureState>> {
        let eig = hermitian_eig(&self.matrix)?;
        let n = eig.eigenvalues.len();
        if eig.eigenvalues[n - 1] < 1.0 - tol {
            return Ok(None);
        }
        let v = eig.eigenvectors.column(n - 1);
        Ok(Some(BipartitePureState::normalized(self.dims, v)?))
    }

    pub fn swapped(&self) -> Self {
        let (a, b) = self.dims.as_tuple();
        let perm = |i: usize| (i % b) * a + i / b;
        let n = a * b;
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(perm(i), perm(j))] = self.matrix[(i, j)];
            }
        }
        Self {
            dims: self.dims.swapped(),
            matrix: m,
        }
    }

    pub fn apply_local_unitary(&self, u_a: &ComplexMatrix, u_b: &ComplexMatrix) -> Result<Self> {
        let u = local_unitary(self.dims, u_a, u_b)?;
        let m = &(&u * &self.matrix) * &u.adjoint();
        Self::with_tolerance(self.dims, m, INPUT_TOL)
    }
}

fn local_unitary(
    dims: BipartiteDims,
    u_a: &ComplexMatrix,
    u_b: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    for (u, d, name) in [(u_a, dims.a(), "U_A"), (u_b, dims.b(), "U_B")] {
        if u.rows() != d || u.cols() != d {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, expected {d}x{d}",
                u.rows(),
                u.cols()
            )));
        }
        let deviation = u.unitary_deviation();
        if deviation > STATE_TOL {
            return Err(Error::NotUnitary { deviation });
        }
    }
    Ok(kron(u_a, u_b))
}

/// `op ⊗ I_B` (side A) or `I_A ⊗ op` (side B).
pub fn embed_local(op: &ComplexMatrix, dims: BipartiteDims, side: Subsystem) -> ComplexMatrix {
    match side {
        Subsystem::A => kron(op, &ComplexMatrix::identity(dims.b())),
        Subsystem::B => kron(&ComplexMatrix::identity(dims.a()), op),
    }
}

/// Either kind of bipartite state.
#[derive(Clone, Debug, PartialEq)]
pub enum State {
    Pure(BipartitePureState),
    Density(DensityOperator),
}

impl State {
    pub fn dims(&self) -> BipartiteDims {
        match self {
            State::Pure(p) => p.dims(),
            State::Density(d) => d.dims(),
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            State::Pure(p) => p.to_density(),
            State::Density(d) => d.clone(),
        }
    }

    pub fn apply_local_unitary(&self, u_a: &ComplexMatrix, u_b: &ComplexMatrix) -> Result<Self> {
        Ok(match self {
            State::Pure(p) => State::Pure(p.apply_local_unitary(u_a, u_b)?),
            State::Density(d) => State::Density(d.apply_local_unitary(u_a, u_b)?),
        })
    }
}

/// Orthonormal basis whose kets are the columns of a unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis {
    vectors: ComplexMatrix,
}

impl OrthonormalBasis {
    pub fn new(vectors: ComplexMatrix) -> Result<Self> {
        if !vectors.is_square() || vectors.rows() == 0 {
            return Err(Error::InvalidBasis(format!(
                "basis matrix must be square, got {}x{}",
                vectors.rows(),
                vectors.cols()
            )));
        }
        let deviation = vectors.unitary_deviation();
        if deviation > STATE_TOL {
            return Err(Error::InvalidBasis(format!(
                "columns not orthonormal (deviation {deviation:.3e})"
            )));
        }
        Ok(Self { vectors })
    }

    pub fn computational(d: usize) -> Self {
        Self {
            vectors: ComplexMatrix::identity(d),
        }
    }

    /// Discrete Fourier basis `|k⟩ = Σ_j ω^{jk}|j⟩/√d`.
    pub fn fourier(d: usize) -> Self {
        let mut m = ComplexMatrix::zeros(d, d);
        let norm = 1.0 / (d as f64).sqrt();
        for j in 0..d {
            for k in 0..d {
                let phase = 2.0 * std::f64::consts::PI * (j * k) as f64 / d as f64;
                m[(j, k)] = C64::from_polar(norm, phase);
            }
        }
        Self { vectors: m }
    }

    /// Haar-distributed random basis.
    pub fn haar_random<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self {
            vectors: haar_unitary(d, rng),
        }
    }

    /// `{|x_A⟩⊗|x_B⟩}` ordered by the global index convention.
    pub fn product(a: &Self, b: &Self) -> Self {
        Self {
            vectors: kron(&a.vectors, &b.vectors),
        }
    }

    pub fn dim(&self) -> usize {
        self.vectors.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    pub fn projector(&self, k: usize) -> ComplexMatrix {
        let v = self.vector(k);
        ComplexMatrix::outer(&v, &v)
    }

    /// Born probabilities `⟨k|ρ|k⟩` of every basis element.
    pub fn born_probabilities(&self, rho: &ComplexMatrix) -> Vec<f64> {
        (0..self.dim())
            .map(|k| rho.expectation(&self.vector(k)).re)
            .collect()
    }
}

/// Haar-random unitary: Gram-Schmidt on a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let mut columns: Vec<Vec<C64>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v = gaussian_vector(d, rng);
            for c in &columns {
                let overlap: C64 = c.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= overlap * ci;
                }
            }
            let n = norm_sqr(&v).sqrt();
            if n < 1e-8 {
                break;
            }
            columns.push(v.into_iter().map(|z| z / n).collect());
        }
        if columns.len() == d {
            return ComplexMatrix::from_columns(&columns).expect("finite columns");
        }
    }
}

/// Vector of independent standard complex Gaussians.
pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<C64> {
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect()
}

/// Haar-random pure state (normalized complex Gaussian amplitudes).
pub fn haar_pure_state<R: Rng + ?Sized>(dims: BipartiteDims, rng: &mut R) -> BipartitePureState {
    loop {
        let v = gaussian_vector(dims.total(), rng);
        if let Ok(s) = BipartitePureState::normalized(dims, v) {
            return s;
        }
    }
}

/// Random mixed state of rank `rank`: partial trace of a Haar-random pure
/// state on the system and an ancilla of dimension `rank`.
pub fn random_mixed_state<R: Rng + ?Sized>(
    dims: BipartiteDims,
    rank: usize,
    rng: &mut R,
) -> Result<DensityOperator> {
    if rank == 0 || rank > dims.total() {
        return Err(Error::BadSpec(format!(
            "rank {rank} outside 1..={}",
            dims.total()
        )));
    }
    let n = dims.total();
    let g = ComplexMatrix::from_vec(n, rank, gaussian_vector(n * rank, rng))?;
    let m = &g * &g.adjoint();
    let t = m.trace().re;
    DensityOperator::with_tolerance(dims, m.scale_real(1.0 / t), INPUT_TOL)
}

/// `Σ_j c_j |a_j⟩⊗|b_j⟩` with descending coefficients `c_j = √λ_j`.
#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub coefficients: Vec<f64>,
    pub basis_a: OrthonormalBasis,
    pub basis_b: OrthonormalBasis,
    pub rank: usize,
}

impl SchmidtDecomposition {
    /// Squared coefficients `λ_j`, the spectrum of either reduced state.
    pub fn probabilities(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c * c).collect()
    }

    pub fn reassemble(&self) -> Vec<C64> {
        let (da, db) = (self.basis_a.dim(), self.basis_b.dim());
        let mut amps = vec![ZERO; da * db];
        for (j, &c) in self.coefficients.iter().enumerate() {
            let a = self.basis_a.vector(j);
            let b = self.basis_b.vector(j);
            for (xa, va) in a.iter().enumerate() {
                for (xb, vb) in b.iter().enumerate() {
                    amps[xa * db + xb] += va * vb * c;
                }
            }
        }
        amps
    }
}

pub fn schmidt(state: &BipartitePureState) -> Result<SchmidtDecomposition> {
    schmidt_with_cutoff(state, SCHMIDT_CUTOFF)
}

/// Schmidt decomposition from the SVD of the amplitude matrix
/// `M = U·Σ·V†`: `|ψ⟩ = Σ_k σ_k (U e_k) ⊗ (conj(V) e_k)`.
pub fn schmidt_with_cutoff(state: &BipartitePureState, cutoff: f64) -> Result<SchmidtDecomposition> {
    let s = svd(&state.amplitude_matrix())?;
    let v_conj = {
        let v = &s.v;
        let mut c = ComplexMatrix::zeros(v.rows(), v.cols());
        for i in 0..v.rows() {
            for j in 0..v.cols() {
                c[(i, j)] = v[(i, j)].conj();
            }
        }
        c
    };
    let rank = s.singular_values.iter().filter(|&&c| c > cutoff).count();
    Ok(SchmidtDecomposition {
        coefficients: s.singular_values,
        basis_a: OrthonormalBasis::new(complete_to_unitary(&s.u))?,
        basis_b: OrthonormalBasis::new(complete_to_unitary(&v_conj))?,
        rank,
    })
}

/// Computational ket `|x_A, x_B⟩`.
pub fn computational_ket(dims: BipartiteDims, x_a: usize, x_b: usize) -> Result<BipartitePureState> {
    if x_a >= dims.a() || x_b >= dims.b() {
        return Err(Error::BadSpec(format!(
            "ket |{x_a},{x_b}> outside dims {:?}",
            dims.as_tuple()
        )));
    }
    let mut amps = vec![ZERO; dims.total()];
    amps[x_a * dims.b() + x_b] = ONE;
    BipartitePureState::new(dims, amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densemath::hermitian_eigenvalues;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn dims(a: usize, b: usize) -> BipartiteDims {
        BipartiteDims::new(a, b).unwrap()
    }

    fn real_state(a: usize, b: usize, amps: &[f64]) -> BipartitePureState {
        BipartitePureState::new(dims(a, b), amps.iter().map(|&x| C64::new(x, 0.0)).collect())
            .unwrap()
    }

    #[test]
    fn dims_validation() {
        assert!(BipartiteDims::new(1, 2).is_err());
        assert!(BipartiteDims::new(8, 9).is_err());
        assert!(BipartiteDims::new(8, 8).is_ok());
        assert!(BipartiteDims::with_cap(3, 3, 8).is_err());
    }

    #[test]
    fn pure_state_rejects_bad_norm() {
        let err = BipartitePureState::new(dims(2, 2), vec![ONE, ONE, ZERO, ZERO]);
        assert!(matches!(err, Err(Error::InvalidState(_))));
    }

    #[test]
    fn schmidt_examples() {
        let s = schmidt(&real_state(2, 2, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-14);

        let h = 1.0 / 2f64.sqrt();
        let s = schmidt(&real_state(2, 2, &[h, 0.0, 0.0, h])).unwrap();
        assert_eq!(s.rank, 2);
        for c in &s.coefficients {
            assert!((c - h).abs() < 1e-14);
        }

        let s = schmidt(&real_state(2, 2, &[0.75f64.sqrt(), 0.0, 0.0, 0.5])).unwrap();
        assert!((s.coefficients[0] - 3f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((s.coefficients[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn schmidt_reassembles_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for &(a, b) in &[(2, 2), (2, 3), (3, 3), (2, 4)] {
            for _ in 0..100 {
                let psi = haar_pure_state(dims(a, b), &mut rng);
                let s = schmidt(&psi).unwrap();
                let back = s.reassemble();
                let err = back
                    .iter()
                    .zip(psi.amplitudes())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                assert!(err < 1e-9, "({a},{b}) err {err}");
                let total: f64 = s.probabilities().iter().sum();
                assert!((total - 1.0).abs() < 1e-10);

                // spectrum of ρ_A equals squared Schmidt coefficients
                let mut ev = hermitian_eigenvalues(&psi.reduced(Subsystem::A)).unwrap();
                ev.reverse();
                for (l, c) in ev.iter().zip(&s.coefficients) {
                    assert!((l - c * c).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn reduced_states_match_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = haar_pure_state(dims(2, 3), &mut rng);
        let rho = psi.to_density();
        for side in [Subsystem::A, Subsystem::B] {
            let direct = psi.reduced(side);
            let traced = rho.reduced(side);
            assert!((&direct - &traced).max_abs() < 1e-14);
        }
    }

    #[test]
    fn swapping_exchanges_marginals() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = haar_pure_state(dims(2, 3), &mut rng);
        let sw = psi.swapped();
        assert_eq!(sw.dims().as_tuple(), (3, 2));
        assert!((&sw.reduced(Subsystem::A) - &psi.reduced(Subsystem::B)).max_abs() < 1e-14);
        let rho = psi.to_density().swapped();
        assert!((&rho.matrix().clone() - &sw.projector()).max_abs() < 1e-14);
    }

    #[test]
    fn local_unitaries() {
        let h = 1.0 / 2f64.sqrt();
        let had = ComplexMatrix::from_real(2, 2, &[h, h, h, -h]);
        let ket00 = real_state(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let plus = ket00.apply_local_unitary(&had, &had).unwrap();
        for z in plus.amplitudes() {
            assert!((z - C64::new(0.5, 0.0)).norm() < 1e-14);
        }

        let id = ComplexMatrix::identity(2);
        assert_eq!(ket00.apply_local_unitary(&id, &id).unwrap(), ket00);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let bell = real_state(2, 2, &[h, 0.0, 0.0, h]);
        for _ in 0..20 {
            let ua = haar_unitary(2, &mut rng);
            let ub = haar_unitary(2, &mut rng);
            let moved = bell.apply_local_unitary(&ua, &ub).unwrap();
            for c in schmidt(&moved).unwrap().coefficients {
                assert!((c - h).abs() < 1e-12);
            }
        }

        let bad = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(
            ket00.apply_local_unitary(&bad, &id),
            Err(Error::NotUnitary { .. })
        ));
        assert!(matches!(
            ket00.apply_local_unitary(&ComplexMatrix::identity(3), &id),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn random_mixed_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for rank in 1..=4 {
            let rho = random_mixed_state(dims(2, 2), rank, &mut rng).unwrap();
            assert_eq!(rho.rank(1e-9).unwrap(), rank);
        }
        assert!(random_mixed_state(dims(2, 2), 5, &mut rng).is_err());
    }

    #[test]
    fn density_tolerant_constructor_renormalizes() {
        let m = ComplexMatrix::diag_real(&[0.5 + 4e-9, 0.5, 0.0, -1e-9]);
        let rho = DensityOperator::with_tolerance(dims(2, 2), m.clone(), INPUT_TOL).unwrap();
        assert!((rho.matrix().trace().re - 1.0).abs() < 1e-15);
        assert!(DensityOperator::new(dims(2, 2), m).is_err());
        let bad = ComplexMatrix::diag_real(&[0.6, 0.5, 0.0, -0.1]);
        assert!(DensityOperator::with_tolerance(dims(2, 2), bad, INPUT_TOL).is_err());
    }

    #[test]
    fn as_pure_detects_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let psi = haar_pure_state(dims(3, 2), &mut rng);
        let back = psi.to_density().as_pure(1e-8).unwrap().unwrap();
        let overlap: C64 = back
            .amplitudes()
            .iter()
            .zip(psi.amplitudes())
            .map(|(x, y)| x.conj() * y)
            .sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        let mixed = random_mixed_state(dims(2, 2), 2, &mut rng).unwrap();
        assert!(mixed.as_pure(1e-8).unwrap().is_none());
    }

    #[test]
    fn bases() {
        for d in 2..6 {
            assert!(OrthonormalBasis::new(OrthonormalBasis::fourier(d).matrix().clone()).is_ok());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = OrthonormalBasis::haar_random(5, &mut rng);
        assert!(b.matrix().unitary_deviation() < 1e-12);
        assert!(OrthonormalBasis::new(ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0])).is_err());
    }
}
