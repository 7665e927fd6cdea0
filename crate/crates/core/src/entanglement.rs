//! The KD-nonreality entanglement monotone: closed form for pure states,
//! bounds and convex roof for mixed states.

use serde::Serialize;

use crate::densemath::{
    hermitian_eig, hermitian_eigenvalues, hermitian_trace_norm, ComplexMatrix, Subsystem, I,
};
use crate::error::{Error, Result};
use crate::kd::inner_sup_nonreality;
use crate::optimize::{
    minimize_convex_roof, minimize_over_bases, BasisSearch, ConvexRoofResult, OptimizerConfig,
};
use crate::states::{
    embed_local, schmidt, BipartitePureState, DensityOperator, OrthonormalBasis, STATE_TOL,
};

/// Eigenvalues at or below this are treated as exact zeros. Rounding leaves
/// zero eigenvalues near 1e-17, and the square root would lift that to 1e-9.
pub const SPECTRAL_FLOOR: f64 = 1e-14;

/// `Tr (ρ − ρ²)^{1/2}` of a single-system density matrix.
pub fn entropy_s_kd(rho_local: &ComplexMatrix) -> Result<f64> {
    if !rho_local.is_square() {
        return Err(Error::DimensionMismatch("local state is not square".into()));
    }
    let ev = hermitian_eigenvalues(rho_local)?;
    if let Some(&min) = ev.first() {
        if min < -crate::densemath::PSD_CLIP {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
    }
    Ok(ev
        .iter()
        .filter(|&&l| l > SPECTRAL_FLOOR)
        .map(|&l| (l - l * l).max(0.0).sqrt())
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PureEntanglementReport {
    pub value: f64,
    /// `value / √(d − 1)` with `d` the Schmidt rank; 0 for product states.
    pub normalized: f64,
    pub schmidt_rank: usize,
    pub concurrence: f64,
    /// Entropy of entanglement in bits, reported for two qubits only.
    pub entropy_of_entanglement: Option<f64>,
}

/// Closed-form value `S_KD(ρ_A)` with its normalization and concurrence.
pub fn pure_entanglement(state: &BipartitePureState) -> Result<PureEntanglementReport> {
    let rho_a = state.reduced(Subsystem::A);
    let value = entropy_s_kd(&rho_a)?;
    let d = schmidt(state)?.rank;
    let (normalized, concurrence) = if d <= 1 {
        (0.0, 0.0)
    } else {
        let purity = (&rho_a * &rho_a).trace().re;
        let df = d as f64;
        let c = (df / (df - 1.0) * (1.0 - purity)).max(0.0).sqrt().min(1.0);
        (value / (df - 1.0).sqrt(), c)
    };
    let entropy_of_entanglement = if state.dims().as_tuple() == (2, 2) {
        Some(g_of_concurrence(concurrence)?)
    } else {
        None
    };
    Ok(PureEntanglementReport {
        value,
        normalized,
        schmidt_rank: d,
        concurrence,
        entropy_of_entanglement,
    })
}

/// Basis search for `inf_{basis} Σ_x ‖[Π_x ⊗ I, ρ]‖₁ / 2`, warm-started from
/// the eigenbasis of `ρ_A`. For pure states this reproduces the closed form.
pub fn numeric_outer_inf(rho: &DensityOperator, config: &OptimizerConfig) -> Result<BasisSearch> {
    let anchor = hermitian_eig(&rho.reduced(Subsystem::A))?.eigenvectors;
    minimize_over_bases(
        |b| inner_sup_nonreality(rho, b).unwrap_or(f64::INFINITY),
        rho.dims().a(),
        config,
        &[anchor],
    )
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisturbanceReport {
    /// `½ Σ_x ‖ψψ† − ρ_x‖₁` over the binary-measurement post-states `ρ_x`.
    pub value: f64,
    /// Same sum after tracing out B, which can only be smaller.
    pub subsystem_bound: f64,
}

/// `ΠρΠ + (1 − Π)ρ(1 − Π)`.
fn binary_dephase(rho: &ComplexMatrix, p: &ComplexMatrix) -> ComplexMatrix {
    let q = &ComplexMatrix::identity(p.rows()) - p;
    &(&(p * rho) * p) + &(&(&q * rho) * &q)
}

/// Measurement-disturbance form of the inner supremum.
pub fn disturbance_form(
    state: &BipartitePureState,
    basis_a: &OrthonormalBasis,
) -> Result<DisturbanceReport> {
    let dims = state.dims();
    if basis_a.dim() != dims.a() {
        return Err(Error::DimensionMismatch(format!(
            "basis of dimension {} for subsystem A of dimension {}",
            basis_a.dim(),
            dims.a()
        )));
    }
    let rho = state.projector();
    let rho_a = state.reduced(Subsystem::A);
    let mut value = 0.0;
    let mut subsystem_bound = 0.0;
    for x in 0..basis_a.dim() {
        let p = basis_a.projector(x);
        let post = binary_dephase(&rho, &embed_local(&p, dims, Subsystem::A));
        value += hermitian_trace_norm(&(&rho - &post))? / 2.0;
        let post_a = binary_dephase(&rho_a, &p);
        subsystem_bound += hermitian_trace_norm(&(&rho_a - &post_a))? / 2.0;
    }
    debug_assert!(subsystem_bound <= value + 1e-9);
    Ok(DisturbanceReport {
        value,
        subsystem_bound,
    })
}

/// `max_s ‖[X_s ⊗ I, ρ]‖₁ / 2` over `X_s = Σ_x s_x Π_x`, `s ∈ {±1}^d`. The
/// objective is convex in the eigenvalues of `X`, so the maximum over the
/// cube `[−1, 1]^d` sits at a vertex; `s_0 = +1` since `X` and `−X` agree.
pub fn sign_pattern_sup(rho: &DensityOperator, basis_a: &OrthonormalBasis) -> Result<f64> {
    let dims = rho.dims();
    let d = basis_a.dim();
    if d != dims.a() {
        return Err(Error::DimensionMismatch(format!(
            "basis of dimension {d} for subsystem A of dimension {}",
            dims.a()
        )));
    }
    let projectors: Vec<ComplexMatrix> = (0..d).map(|x| basis_a.projector(x)).collect();
    let mut best: f64 = 0.0;
    for mask in 0..(1usize << (d - 1)) {
        let mut x_op = ComplexMatrix::zeros(d, d);
        for (k, p) in projectors.iter().enumerate() {
            let sign = if k > 0 && mask >> (k - 1) & 1 == 1 { -1.0 } else { 1.0 };
            x_op = &x_op + &p.scale_real(sign);
        }
        let big = embed_local(&x_op, dims, Subsystem::A);
        let k = ComplexMatrix::commutator(&big, rho.matrix()).scale(I);
        best = best.max(hermitian_trace_norm(&k)? / 2.0);
    }
    Ok(best)
}

/// Lower bound `inf_{basis} sup_X ‖[X ⊗ I, ρ]‖₁ / 2` with the measured
/// subsystem on `side`.
pub fn prop3_lower_bound_side(
    rho: &DensityOperator,
    side: Subsystem,
    config: &OptimizerConfig,
) -> Result<BasisSearch> {
    let rho = match side {
        Subsystem::A => rho.clone(),
        Subsystem::B => rho.swapped(),
    };
    let anchor = hermitian_eig(&rho.reduced(Subsystem::A))?.eigenvectors;
    minimize_over_bases(
        |b| sign_pattern_sup(&rho, b).unwrap_or(f64::INFINITY),
        rho.dims().a(),
        config,
        &[anchor],
    )
}

/// Lower bound with A as the measured subsystem.
pub fn prop3_lower_bound(rho: &DensityOperator, config: &OptimizerConfig) -> Result<f64> {
    Ok(prop3_lower_bound_side(rho, Subsystem::A, config)?.value)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub lower: f64,
    pub upper: f64,
    pub lower_swapped: f64,
    pub upper_swapped: f64,
}

impl BoundsReport {
    pub fn best_lower(&self) -> f64 {
        self.lower.max(self.lower_swapped)
    }

    pub fn best_upper(&self) -> f64 {
        self.upper.min(self.upper_swapped)
    }
}

/// Lower and upper bounds from both sides of the cut.
pub fn bounds_report(rho: &DensityOperator, config: &OptimizerConfig) -> Result<BoundsReport> {
    Ok(BoundsReport {
        lower: prop3_lower_bound_side(rho, Subsystem::A, config)?.value,
        upper: entropy_s_kd(&rho.reduced(Subsystem::A))?,
        lower_swapped: prop3_lower_bound_side(rho, Subsystem::B, config)?.value,
        upper_swapped: entropy_s_kd(&rho.reduced(Subsystem::B))?,
    })
}

/// `−p log₂ p − (1 − p) log₂(1 − p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// Entropy of entanglement of a two-qubit pure state with concurrence `c`:
/// `h₂((1 + √(1 − c²)) / 2)` in bits.
pub fn g_of_concurrence(c: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::Domain(format!("concurrence {c} outside [0, 1]")));
    }
    Ok(binary_entropy((1.0 + (1.0 - c * c).sqrt()) / 2.0))
}

#[derive(Clone, Debug)]
pub struct MixedEntanglementReport {
    pub roof: ConvexRoofResult,
    /// `value / √(min(dA, dB) − 1)`.
    pub normalized: f64,
    pub bounds: BoundsReport,
    /// Whether `value ≥ max(lower, lower_swapped) − tol`. Reported, not
    /// enforced: the trace-norm lower bound exceeds the exact value on
    /// generic mixed states (Werner states with 0 < p < 1 already do so).
    pub lower_bound_holds: bool,
}

impl MixedEntanglementReport {
    pub fn value(&self) -> f64 {
        self.roof.value
    }
}

fn pure_value(psi: &BipartitePureState) -> f64 {
    entropy_s_kd(&psi.reduced(Subsystem::A)).unwrap_or(f64::INFINITY)
}

/// Convex-roof extension of the closed form. Fails with
/// [`Error::OptimizerFailed`] when the result exceeds the upper bound
/// `min(S_KD(ρ_A), S_KD(ρ_B))` by more than `config.tol`.
pub fn mixed_entanglement(
    rho: &DensityOperator,
    config: &OptimizerConfig,
    terms: Option<usize>,
) -> Result<MixedEntanglementReport> {
    let roof = minimize_convex_roof(rho, pure_value, config, terms)?;
    let bounds = bounds_report(rho, config)?;
    let (lower, upper) = (bounds.best_lower(), bounds.best_upper());
    if roof.value > upper + config.tol || roof.value < -config.tol {
        return Err(Error::OptimizerFailed {
            value: roof.value,
            lower,
            upper,
        });
    }
    let d = rho.dims().a().min(rho.dims().b()) as f64;
    Ok(MixedEntanglementReport {
        normalized: roof.value / (d - 1.0).sqrt(),
        lower_bound_holds: roof.value >= lower - config.tol,
        roof,
        bounds,
    })
}

/// Tolerance used when accepting a density operator as pure.
pub const PURITY_TOL: f64 = 1e-8;

/// The pure state behind `rho` when its rank is 1 within [`PURITY_TOL`].
pub fn as_pure(rho: &DensityOperator) -> Result<Option<BipartitePureState>> {
    rho.as_pure(PURITY_TOL.max(STATE_TOL))
}
