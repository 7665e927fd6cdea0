//! Synthetic measurement records and the estimators built on them.
//!
//! `Im Pr_KD(x, y)` is estimated from two projective experiments in the basis
//! `{|y⟩}`: one on `U†ρU` with `U = (1 − Π) + iΠ`, `Π = Π_x ⊗ I`, and one on
//! the dephased state `ΠρΠ + (1 − Π)ρ(1 − Π)`. Half the difference of the two
//! outcome probabilities of `y` equals `Im Pr_KD(x, y)`.

use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::Serialize;

use crate::densemath::{hermitian_eig, ComplexMatrix, Subsystem, I};
use crate::entanglement::pure_entanglement;
use crate::error::{Error, Result};
use crate::optimize::{minimize_over_bases, Diagnostics, OptimizerConfig};
use crate::seeding::task_rng;
use crate::states::{embed_local, BipartitePureState, DensityOperator, OrthonormalBasis};

/// Stream tags for the two preparations.
const ROTATED: u64 = 1;
const DEPHASED: u64 = 2;

/// Aggregated outcomes of one projective experiment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ShotRecord {
    pub preparation: String,
    pub basis: String,
    pub outcome: usize,
    pub count: u64,
}

impl ShotRecord {
    fn from_counts(preparation: &str, basis: &str, counts: &[u64]) -> Vec<Self> {
        counts
            .iter()
            .enumerate()
            .map(|(outcome, &count)| Self {
                preparation: preparation.to_string(),
                basis: basis.to_string(),
                outcome,
                count,
            })
            .collect()
    }
}

/// Writes `preparation,basis,outcome,count` rows with a header.
pub fn write_shot_records<W: Write>(records: &[ShotRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Multinomial draw as a chain of binomials.
fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = shots;
    let mut mass: f64 = probs.iter().sum();
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if k + 1 == probs.len() {
            counts[k] = left;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 0.0 };
        let n = Binomial::new(left, q).expect("probability clamped to [0, 1]").sample(rng);
        counts[k] = n;
        left -= n;
        mass -= p;
    }
    counts
}

fn born(rho: &ComplexMatrix, basis: &OrthonormalBasis) -> Vec<f64> {
    basis
        .born_probabilities(rho)
        .into_iter()
        .map(|p| p.max(0.0))
        .collect()
}

/// Outcome counts of measuring `rho` in `basis`, drawn with `seed`.
pub fn sample_born(
    rho: &DensityOperator,
    basis: &OrthonormalBasis,
    shots: u64,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    if shots == 0 {
        return Err(Error::Domain("at least one shot is required".into()));
    }
    if basis.dim() != rho.dims().total() {
        return Err(Error::DimensionMismatch(format!(
            "basis of dimension {} for a state of dimension {}",
            basis.dim(),
            rho.dims().total()
        )));
    }
    let mut rng = task_rng(seed, &[]);
    let counts = multinomial(&born(rho.matrix(), basis), shots, &mut rng);
    Ok(ShotRecord::from_counts("rho", "basis", &counts))
}

/// Estimate of an imaginary part with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ImKdEstimate {
    pub value: f64,
    pub std_error: f64,
    pub shots_used: u64,
}

/// The two measured preparations for outcome `x`.
fn preparations(rho: &DensityOperator, projector: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let n = projector.rows();
    let q = &ComplexMatrix::identity(n) - projector;
    let u = &q + &projector.scale(I);
    let rotated = &(&u.adjoint() * rho.matrix()) * &u;
    let r = rho.matrix();
    let dephased = &(&(projector * r) * projector) + &(&(&q * r) * &q);
    (rotated, dephased)
}

struct RowSample {
    estimates: Vec<ImKdEstimate>,
    records: Vec<ShotRecord>,
}

fn sample_row(
    rho: &DensityOperator,
    basis_a: &OrthonormalBasis,
    basis_y: &OrthonormalBasis,
    x: usize,
    shots: u64,
    seed: u64,
) -> Result<RowSample> {
    let dims = rho.dims();
    if basis_a.dim() != dims.a() || basis_y.dim() != dims.total() {
        return Err(Error::DimensionMismatch(format!(
            "bases of dimension ({}, {}) for dims {:?}",
            basis_a.dim(),
            basis_y.dim(),
            dims.as_tuple()
        )));
    }
    if x >= basis_a.dim() {
        return Err(Error::Domain(format!("outcome index {x} out of range")));
    }
    if shots < 2 {
        return Err(Error::Domain("two preparations need at least two shots".into()));
    }
    let projector = embed_local(&basis_a.projector(x), dims, Subsystem::A);
    let (rotated, dephased) = preparations(rho, &projector);
    let n1 = shots / 2;
    let n2 = shots - n1;
    let c1 = multinomial(&born(&rotated, basis_y), n1, &mut task_rng(seed, &[ROTATED, x as u64]));
    let c2 = multinomial(&born(&dephased, basis_y), n2, &mut task_rng(seed, &[DEPHASED, x as u64]));
    let estimates = c1
        .iter()
        .zip(&c2)
        .map(|(&a, &b)| {
            let f1 = a as f64 / n1 as f64;
            let f2 = b as f64 / n2 as f64;
            ImKdEstimate {
                value: (f1 - f2) / 2.0,
                std_error: 0.5 * (f1 * (1.0 - f1) / n1 as f64 + f2 * (1.0 - f2) / n2 as f64).sqrt(),
                shots_used: shots,
            }
        })
        .collect();
    let label = format!("x={x}");
    let mut records = ShotRecord::from_counts("rotated", &label, &c1);
    records.extend(ShotRecord::from_counts("dephased", &label, &c2));
    Ok(RowSample { estimates, records })
}

/// Estimates of `Im Pr_KD(x, y)` for every `y`, from `shots` shots split
/// evenly between the two preparations.
pub fn estimate_im_kd_row(
    rho: &DensityOperator,
    basis_a: &OrthonormalBasis,
    basis_y: &OrthonormalBasis,
    x: usize,
    shots: u64,
    seed: u64,
) -> Result<Vec<ImKdEstimate>> {
    Ok(sample_row(rho, basis_a, basis_y, x, shots, seed)?.estimates)
}

/// Estimate of `Im Pr_KD(x, y)` alone.
pub fn estimate_im_kd(
    rho: &DensityOperator,
    basis_a: &OrthonormalBasis,
    basis_y: &OrthonormalBasis,
    x: usize,
    y: usize,
    shots: u64,
    seed: u64,
) -> Result<ImKdEstimate> {
    if y >= basis_y.dim() {
        return Err(Error::Domain(format!("outcome index {y} out of range")));
    }
    Ok(estimate_im_kd_row(rho, basis_a, basis_y, x, shots, seed)?[y])
}

/// Outcome of [`estimate_entanglement_sampled`].
#[derive(Clone, Debug)]
pub struct SampledEntanglement {
    pub estimate: f64,
    pub closed_form: f64,
    pub basis: OrthonormalBasis,
    /// Records behind the estimate at the final basis.
    pub records: Vec<ShotRecord>,
    pub diagnostics: Diagnostics,
}

/// Sampled inner supremum for one basis of A: for each `x`, the second basis
/// is the eigenbasis of `i[Π_x ⊗ I, ρ]` and `Σ_y |Im Pr_KD|` is estimated.
fn sampled_objective(
    rho: &DensityOperator,
    basis_a: &OrthonormalBasis,
    shots: u64,
    seed: u64,
    mut keep: Option<&mut Vec<ShotRecord>>,
) -> Result<f64> {
    let dims = rho.dims();
    let mut total = 0.0;
    for x in 0..basis_a.dim() {
        let p = embed_local(&basis_a.projector(x), dims, Subsystem::A);
        let k = ComplexMatrix::commutator(&p, rho.matrix()).scale(I);
        let basis_y = OrthonormalBasis::new(hermitian_eig(&k)?.eigenvectors)?;
        let row = sample_row(rho, basis_a, &basis_y, x, shots, seed)?;
        total += row.estimates.iter().map(|e| e.value.abs()).sum::<f64>();
        if let Some(out) = keep.as_deref_mut() {
            out.extend(row.records);
        }
    }
    Ok(total)
}

/// Entanglement of a pure state estimated from synthetic records: basis
/// search over A with the inner supremum replaced by its sampled estimate.
/// `shots_per_cell` shots are spent on every outcome `x` of the basis of A.
pub fn estimate_entanglement_sampled(
    state: &BipartitePureState,
    shots_per_cell: u64,
    config: &OptimizerConfig,
) -> Result<SampledEntanglement> {
    let rho = state.to_density();
    let anchor = hermitian_eig(&state.reduced(Subsystem::A))?.eigenvectors;
    let search = minimize_over_bases(
        |b| sampled_objective(&rho, b, shots_per_cell, config.seed, None).unwrap_or(f64::INFINITY),
        rho.dims().a(),
        config,
        &[anchor],
    )?;
    let mut records = Vec::new();
    let estimate = sampled_objective(&rho, &search.basis, shots_per_cell, config.seed, Some(&mut records))?;
    Ok(SampledEntanglement {
        estimate,
        closed_form: pure_entanglement(state)?.value,
        basis: search.basis,
        records,
        diagnostics: search.diagnostics,
    })
}
