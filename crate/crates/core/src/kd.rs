//! Kirkwood-Dirac quasiprobability tables, their nonreality, and state
//! reconstruction from a table.
//!
//! Tables are stored x-major: `values[x * n_y + y]`.

use std::io::Write;

use crate::densemath::{hermitian_eig, hermitian_eigenvalues, ComplexMatrix, Subsystem, C64, I};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::states::{embed_local, BipartiteDims, DensityOperator, OrthonormalBasis};

/// Tolerance on the normalization and marginal checks.
pub const KD_TOL: f64 = 1e-10;

/// Overlaps `|⟨y|x⟩|` at or below this make reconstruction fail.
pub const RECONSTRUCTION_CUTOFF: f64 = 1e-8;

/// Which first basis the table is indexed by.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KdForm {
    /// First basis is a basis of the whole space (product basis or a
    /// single-system basis).
    Full,
    /// First basis lives on `H_A`; `x_B` has been summed out.
    Marginal,
}

#[derive(Clone, Debug)]
pub struct KdDistribution {
    values: Vec<C64>,
    n_x: usize,
    n_y: usize,
    first_basis: OrthonormalBasis,
    second_basis: OrthonormalBasis,
    dims: BipartiteDims,
    form: KdForm,
}

impl KdDistribution {
    /// Validates normalization and both marginals against the state.
    fn checked(
        values: Vec<C64>,
        rho: &DensityOperator,
        first_basis: OrthonormalBasis,
        second_basis: OrthonormalBasis,
        form: KdForm,
    ) -> Result<Self> {
        let n_x = first_basis.dim();
        let n_y = second_basis.dim();
        let total: C64 = values.iter().sum();
        if (total.re - 1.0).abs() > KD_TOL || total.im.abs() > KD_TOL {
            return Err(Error::KdInvariant(format!("table sums to {total}")));
        }
        let born_y = second_basis.born_probabilities(rho.matrix());
        for (y, p) in born_y.iter().enumerate() {
            let s: C64 = (0..n_x).map(|x| values[x * n_y + y]).sum();
            if (s - C64::new(*p, 0.0)).norm() > KD_TOL {
                return Err(Error::KdInvariant(format!(
                    "sum over x at y = {y} is {s}, Born probability {p}"
                )));
            }
        }
        let local = match form {
            KdForm::Full => rho.matrix().clone(),
            KdForm::Marginal => rho.reduced(Subsystem::A),
        };
        let born_x = first_basis.born_probabilities(&local);
        for (x, p) in born_x.iter().enumerate() {
            let s: C64 = values[x * n_y..(x + 1) * n_y].iter().sum();
            if (s - C64::new(*p, 0.0)).norm() > KD_TOL {
                return Err(Error::KdInvariant(format!(
                    "sum over y at x = {x} is {s}, Born probability {p}"
                )));
            }
        }
        Ok(Self {
            values,
            n_x,
            n_y,
            first_basis,
            second_basis,
            dims: rho.dims(),
            form,
        })
    }

    pub fn value(&self, x: usize, y: usize) -> C64 {
        self.values[x * self.n_y + y]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn first_basis(&self) -> &OrthonormalBasis {
        &self.first_basis
    }

    pub fn second_basis(&self) -> &OrthonormalBasis {
        &self.second_basis
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn form(&self) -> KdForm {
        self.form
    }

    /// Writes `x,y,re,im` rows, x-major, with a header.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "re", "im"])?;
        for x in 0..self.n_x {
            for y in 0..self.n_y {
                let v = self.value(x, y);
                w.write_record([x.to_string(), y.to_string(), sig12(v.re), sig12(v.im)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_dim(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{what} has dimension {got}, expected {want}"
        )));
    }
    Ok(())
}

fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// `⟨y|(Π_x ⊗ I_B)ρ|y⟩` for every `x` of a basis of `H_A` and `y` of `H_AB`.
pub fn kd_marginal(
    rho: &DensityOperator,
    basis_a: &OrthonormalBasis,
    basis_y: &OrthonormalBasis,
) -> Result<KdDistribution> {
    let dims = rho.dims();
    check_dim("first basis", basis_a.dim(), dims.a())?;
    check_dim("second basis", basis_y.dim(), dims.total())?;
    let (da, db) = dims.as_tuple();
    let xs: Vec<Vec<C64>> = (0..da).map(|x| basis_a.vector(x)).collect();
    let mut values = vec![C64::new(0.0, 0.0); da * dims.total()];
    for y in 0..basis_y.dim() {
        let yv = basis_y.vector(y);
        let w = rho.matrix().mul_vec(&yv);
        for (x, xv) in xs.iter().enumerate() {
            // Σ_b conj(⟨x,b|y⟩)·⟨x,b|ρy⟩
            let mut acc = C64::new(0.0, 0.0);
            for b in 0..db {
                let mut py = C64::new(0.0, 0.0);
                let mut pw = C64::new(0.0, 0.0);
                for a in 0..da {
                    let c = xv[a].conj();
                    py += c * yv[a * db + b];
                    pw += c * w[a * db + b];
                }
                acc += py.conj() * pw;
            }
            values[x * basis_y.dim() + y] = acc;
        }
    }
    KdDistribution::checked(values, rho, basis_a.clone(), basis_y.clone(), KdForm::Marginal)
}

/// `⟨y|x⟩⟨x|ρ|y⟩` for a first basis of the whole space.
pub fn kd_with_bases(
    rho: &DensityOperator,
    first: &OrthonormalBasis,
    second: &OrthonormalBasis,
) -> Result<KdDistribution> {
    let n = rho.dims().total();
    check_dim("first basis", first.dim(), n)?;
    check_dim("second basis", second.dim(), n)?;
    let ys: Vec<Vec<C64>> = (0..n).map(|y| second.vector(y)).collect();
    let rho_y: Vec<Vec<C64>> = ys.iter().map(|y| rho.matrix().mul_vec(y)).collect();
    let mut values = vec![C64::new(0.0, 0.0); n * n];
    for x in 0..n {
        let xv = first.vector(x);
        for y in 0..n {
            values[x * n + y] = dot(&ys[y], &xv) * dot(&xv, &rho_y[y]);
        }
    }
    KdDistribution::checked(values, rho, first.clone(), second.clone(), KdForm::Full)
}

/// Full table with the product first basis `|x_A, x_B⟩`, indexed by
/// `x = x_A·dB + x_B`.
pub fn kd_full(
    rho: &DensityOperator,
    basis_a: &OrthonormalBasis,
    basis_b: &OrthonormalBasis,
    basis_y: &OrthonormalBasis,
) -> Result<KdDistribution> {
    let dims = rho.dims();
    check_dim("basis of A", basis_a.dim(), dims.a())?;
    check_dim("basis of B", basis_b.dim(), dims.b())?;
    kd_with_bases(rho, &OrthonormalBasis::product(basis_a, basis_b), basis_y)
}

/// `Σ |Im Pr|` over the table.
pub fn nonreality(dist: &KdDistribution) -> f64 {
    dist.values.iter().map(|z| z.im.abs()).sum()
}

/// `i[P, ρ]`, Hermitian whenever `P` and `ρ` are.
fn skew_commutator(p: &ComplexMatrix, rho: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::commutator(p, rho).scale(I)
}

/// Per-`x` terms `‖[Π_x ⊗ I, ρ]‖₁ / 2` for a local basis on `side`.
pub fn inner_sup_terms(
    rho: &DensityOperator,
    basis: &OrthonormalBasis,
    side: Subsystem,
) -> Result<Vec<f64>> {
    let dims = rho.dims();
    check_dim("local basis", basis.dim(), dims.local(side))?;
    (0..basis.dim())
        .map(|x| {
            let p = embed_local(&basis.projector(x), dims, side);
            let ev = hermitian_eigenvalues(&skew_commutator(&p, rho.matrix()))?;
            Ok(ev.iter().map(|l| l.abs()).sum::<f64>() / 2.0)
        })
        .collect()
}

/// Supremum of the nonreality over all second bases, evaluated in closed
/// form as `Σ_x ‖[Π_x ⊗ I, ρ]‖₁ / 2`.
pub fn inner_sup_nonreality(rho: &DensityOperator, basis_a: &OrthonormalBasis) -> Result<f64> {
    Ok(inner_sup_terms(rho, basis_a, Subsystem::A)?.iter().sum())
}

/// Second basis attaining the `x` term of the supremum: the eigenbasis of
/// `i[Π_x ⊗ I, ρ]`.
pub fn optimal_second_basis(
    rho: &DensityOperator,
    basis_a: &OrthonormalBasis,
    x: usize,
) -> Result<OrthonormalBasis> {
    let dims = rho.dims();
    check_dim("first basis", basis_a.dim(), dims.a())?;
    let p = embed_local(&basis_a.projector(x), dims, Subsystem::A);
    let eig = hermitian_eig(&skew_commutator(&p, rho.matrix()))?;
    OrthonormalBasis::new(eig.eigenvectors)
}

/// KD-nonreality coherence of a single-system state: `Σ_x ‖[Π_x, ρ]‖₁ / 2`.
pub fn kd_coherence(rho_local: &ComplexMatrix, basis: &OrthonormalBasis) -> Result<f64> {
    if !rho_local.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} local state is not square",
            rho_local.rows(),
            rho_local.cols()
        )));
    }
    check_dim("basis", basis.dim(), rho_local.rows())?;
    let mut total = 0.0;
    for x in 0..basis.dim() {
        let ev = hermitian_eigenvalues(&skew_commutator(&basis.projector(x), rho_local))?;
        total += ev.iter().map(|l| l.abs()).sum::<f64>() / 2.0;
    }
    Ok(total)
}

/// Inverts a full-form table: `ρ = Σ Pr(x,y)·|x⟩⟨y| / ⟨y|x⟩`.
pub fn reconstruct_state(dist: &KdDistribution) -> Result<ComplexMatrix> {
    reconstruct_state_with_cutoff(dist, RECONSTRUCTION_CUTOFF)
}

pub fn reconstruct_state_with_cutoff(dist: &KdDistribution, cutoff: f64) -> Result<ComplexMatrix> {
    if dist.form != KdForm::Full {
        return Err(Error::Domain(
            "reconstruction needs a table over a basis of the whole space".into(),
        ));
    }
    let n = dist.n_x;
    let xs: Vec<Vec<C64>> = (0..n).map(|x| dist.first_basis.vector(x)).collect();
    let ys: Vec<Vec<C64>> = (0..dist.n_y).map(|y| dist.second_basis.vector(y)).collect();
    let mut rho = ComplexMatrix::zeros(n, n);
    for (x, xv) in xs.iter().enumerate() {
        for (y, yv) in ys.iter().enumerate() {
            let overlap = dot(yv, xv);
            if overlap.norm() <= cutoff {
                return Err(Error::BasisPairSingular {
                    x,
                    y,
                    overlap: overlap.norm(),
                });
            }
            let c = dist.value(x, y) / overlap;
            for i in 0..n {
                let ci = c * xv[i];
                for j in 0..n {
                    rho[(i, j)] += ci * yv[j].conj();
                }
            }
        }
    }
    Ok(rho)
}
