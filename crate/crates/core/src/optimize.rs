//! Multistart Nelder–Mead search over orthonormal bases and over pure-state
//! decompositions of a density operator.
//!
//! A `d×d` unitary is parametrized by `d²` angles: a `(θ, φ)` pair for each
//! index pair `i < j` (in lexicographic order), followed by `d` diagonal
//! phases. The unitary is the ordered product of the two-index rotations,
//! times the diagonal phase matrix on the right.

use rand::Rng;

use crate::densemath::{hermitian_eig, trace_norm, ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::seeding::task_rng;
use crate::states::{BipartitePureState, DensityOperator, OrthonormalBasis};

/// Stop once the simplex fits in a box of this size (radians).
pub const SIMPLEX_DIAMETER_TOL: f64 = 1e-7;
/// Stop once the best value improved by less than this ...
pub const STALL_IMPROVEMENT: f64 = 1e-9;
/// ... over this many iterations.
pub const STALL_WINDOW: usize = 50;
/// Decomposition weights below this are dropped.
pub const WEIGHT_CUTOFF: f64 = 1e-12;
/// Eigenvalues of ρ at or below this do not count toward its rank.
pub const RANK_CUTOFF: f64 = 1e-12;
/// Largest default decomposition size.
pub const MAX_DEFAULT_TERMS: usize = 16;
/// Bound on how often a converged simplex is rebuilt around its best vertex.
const MAX_REBUILDS: usize = 4;

/// Angles of a `dim × dim` unitary.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisParams {
    dim: usize,
    angles: Vec<f64>,
}

impl BasisParams {
    /// Number of angles for dimension `dim`.
    pub fn count(dim: usize) -> usize {
        dim * dim
    }

    /// Number of rotation angles, the part that moves the basis projectors.
    pub fn rotation_count(dim: usize) -> usize {
        dim * (dim - 1)
    }

    pub fn new(dim: usize, angles: Vec<f64>) -> Result<Self> {
        if angles.len() != Self::count(dim) {
            return Err(Error::BadParamCount {
                expected: Self::count(dim),
                got: angles.len(),
            });
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, angles })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            angles: vec![0.0; Self::count(dim)],
        }
    }

    /// Rotation angles from `rotations`, diagonal phases zero.
    fn from_rotations(dim: usize, rotations: &[f64]) -> Self {
        let mut p = Self::zeros(dim);
        p.angles[..rotations.len()].copy_from_slice(rotations);
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn unitary(&self) -> ComplexMatrix {
        let d = self.dim;
        let mut u = ComplexMatrix::identity(d);
        let mut k = 0;
        for i in 0..d {
            for j in i + 1..d {
                let (theta, phi) = (self.angles[k], self.angles[k + 1]);
                k += 2;
                let (s, c) = theta.sin_cos();
                let e = C64::from_polar(1.0, phi);
                for r in 0..d {
                    let (ui, uj) = (u[(r, i)], u[(r, j)]);
                    u[(r, i)] = ui * c + uj * e * s;
                    u[(r, j)] = uj * c - ui * e.conj() * s;
                }
            }
        }
        for j in 0..d {
            let ph = C64::from_polar(1.0, self.angles[k + j]);
            for r in 0..d {
                u[(r, j)] *= ph;
            }
        }
        u
    }
}

pub fn materialize_basis(params: &BasisParams) -> Result<OrthonormalBasis> {
    OrthonormalBasis::new(params.unitary())
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Slack allowed when checking results against known bounds.
    pub tol: f64,
    pub seed: u64,
    pub simplex_scale: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 32,
            max_iters: 2000,
            tol: 1e-6,
            seed: 0,
            simplex_scale: 0.3,
        }
    }
}

impl OptimizerConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Domain("restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Domain(format!("tolerance {} must be positive", self.tol)));
        }
        if !(self.simplex_scale > 0.0) || self.max_iters == 0 {
            return Err(Error::Domain("simplex scale and max_iters must be positive".into()));
        }
        Ok(())
    }
}

/// How a multistart search went.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostics {
    /// Starts evaluated, the fixed ones included.
    pub restarts_run: usize,
    pub best_restart: usize,
    /// Simplex iterations summed over all starts.
    pub iterations: usize,
    pub evaluations: usize,
    /// Whether the winning start met a stopping tolerance before `max_iters`.
    pub converged: bool,
}

struct Outcome {
    x: Vec<f64>,
    value: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

fn simplex_diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

/// One Nelder–Mead descent from `x0`.
fn nelder_mead(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    scale: f64,
    max_iters: usize,
) -> Outcome {
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        let value = eval(x0, &mut evaluations);
        return Outcome {
            x: vec![],
            value,
            iterations: 0,
            evaluations,
            converged: true,
        };
    }
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += scale;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evaluations)).collect();
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        history.push(values[0]);
        if simplex_diameter(&simplex) < SIMPLEX_DIAMETER_TOL {
            converged = true;
            break;
        }
        if history.len() > STALL_WINDOW
            && history[history.len() - 1 - STALL_WINDOW] - values[0] < STALL_IMPROVEMENT
        {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let reflected = along(1.0);
        let fr = eval(&reflected, &mut evaluations);
        if fr < values[0] {
            let expanded = along(2.0);
            let fe = eval(&expanded, &mut evaluations);
            if fe < fr {
                simplex[n] = expanded;
                values[n] = fe;
            } else {
                simplex[n] = reflected;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = reflected;
            values[n] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[n] {
            let c = along(0.5);
            let fc = eval(&c, &mut evaluations);
            (c, fc)
        } else {
            let c = along(-0.5);
            let fc = eval(&c, &mut evaluations);
            (c, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = contracted;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            let shrunk: Vec<f64> = simplex[0]
                .iter()
                .zip(&simplex[i])
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            values[i] = eval(&shrunk, &mut evaluations);
            simplex[i] = shrunk;
        }
    }
    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("simplex is nonempty");
    Outcome {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        evaluations,
        converged,
    }
}

/// Nelder–Mead, with the simplex rebuilt around the best vertex after each
/// convergence until a rebuild stops paying off.
fn descend(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], config: &OptimizerConfig) -> Outcome {
    let mut out = nelder_mead(f, x0, config.simplex_scale, config.max_iters);
    let mut scale = config.simplex_scale;
    for _ in 0..MAX_REBUILDS {
        let budget = config.max_iters.saturating_sub(out.iterations);
        if !out.converged || budget == 0 || x0.is_empty() {
            break;
        }
        scale *= 0.5;
        let next = nelder_mead(f, &out.x, scale, budget);
        let gain = out.value - next.value;
        out = Outcome {
            iterations: out.iterations + next.iterations,
            evaluations: out.evaluations + next.evaluations,
            converged: next.converged,
            ..if next.value < out.value { next } else { out }
        };
        if gain < STALL_IMPROVEMENT {
            break;
        }
    }
    out
}

/// `true` when `(value, x)` should replace the incumbent `(best_value, best_x)`.
fn better(value: f64, x: &[f64], best: Option<(f64, &[f64])>) -> bool {
    match best {
        None => true,
        Some((bv, bx)) => {
            value < bv || (value == bv && x.partial_cmp(bx) == Some(std::cmp::Ordering::Less))
        }
    }
}

/// Result of [`minimize_over_bases`].
#[derive(Clone, Debug)]
pub struct BasisSearch {
    pub basis: OrthonormalBasis,
    pub value: f64,
    pub diagnostics: Diagnostics,
}

/// Minimizes `objective` over orthonormal bases of a `dim`-dimensional space.
///
/// Start 0 is the computational basis, the next starts are the given
/// `anchors` (unitaries whose columns are good initial bases), and then come
/// `config.restarts` starts with seeded uniform angles. Each start searches
/// over `anchor · U(angles)`, with the computational basis as anchor for the
/// random starts.
pub fn minimize_over_bases<F>(
    objective: F,
    dim: usize,
    config: &OptimizerConfig,
    anchors: &[ComplexMatrix],
) -> Result<BasisSearch>
where
    F: Fn(&OrthonormalBasis) -> f64,
{
    config.validate()?;
    if dim < 1 {
        return Err(Error::DimensionMismatch("basis dimension 0".into()));
    }
    for a in anchors {
        OrthonormalBasis::new(a.clone())?;
        if a.rows() != dim {
            return Err(Error::DimensionMismatch(format!(
                "anchor of dimension {} for a search in dimension {dim}",
                a.rows()
            )));
        }
    }
    let n = BasisParams::rotation_count(dim);
    let identity = ComplexMatrix::identity(dim);
    let mut starts: Vec<(&ComplexMatrix, Vec<f64>)> = vec![(&identity, vec![0.0; n])];
    starts.extend(anchors.iter().map(|a| (a, vec![0.0; n])));
    for i in 0..config.restarts {
        let mut rng = task_rng(config.seed, &[i as u64]);
        let x: Vec<f64> = (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        starts.push((&identity, x));
    }

    let to_basis = |anchor: &ComplexMatrix, x: &[f64]| -> Option<OrthonormalBasis> {
        let u = BasisParams::from_rotations(dim, x).unitary();
        OrthonormalBasis::new(anchor * &u).ok()
    };

    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut best_converged = false;
    for (idx, (anchor, x0)) in starts.iter().enumerate() {
        let mut f = |x: &[f64]| to_basis(anchor, x).map_or(f64::INFINITY, |b| objective(&b));
        let out = descend(&mut f, x0, config);
        iterations += out.iterations;
        evaluations += out.evaluations;
        if better(out.value, &out.x, best.as_ref().map(|(v, x, _)| (*v, x.as_slice()))) {
            best = Some((out.value, out.x, idx));
            best_converged = out.converged;
        }
    }
    let (value, x, best_restart) = best.expect("at least one start");
    let basis = to_basis(starts[best_restart].0, &x)
        .ok_or_else(|| Error::InvalidBasis("optimizer left the unitary group".into()))?;
    Ok(BasisSearch {
        basis,
        value,
        diagnostics: Diagnostics {
            restarts_run: starts.len(),
            best_restart,
            iterations,
            evaluations,
            converged: best_converged,
        },
    })
}

/// A pure-state decomposition found by [`minimize_convex_roof`].
#[derive(Clone, Debug)]
pub struct ConvexRoofResult {
    pub value: f64,
    pub probabilities: Vec<f64>,
    pub pure_states: Vec<BipartitePureState>,
    /// Decomposition size searched over.
    pub terms: usize,
    pub diagnostics: Diagnostics,
}

impl ConvexRoofResult {
    /// `‖Σ_k p_k |ψ_k⟩⟨ψ_k| − ρ‖₁`.
    pub fn reassembly_error(&self, rho: &DensityOperator) -> Result<f64> {
        let n = rho.dims().total();
        let mut sum = ComplexMatrix::zeros(n, n);
        for (p, psi) in self.probabilities.iter().zip(&self.pure_states) {
            sum = &sum + &psi.projector().scale_real(*p);
        }
        trace_norm(&(&sum - rho.matrix()))
    }
}

/// Eigenpairs of ρ above [`RANK_CUTOFF`], largest first.
fn spectral_terms(rho: &DensityOperator) -> Result<Vec<(f64, Vec<C64>)>> {
    let eig = hermitian_eig(rho.matrix())?;
    Ok((0..eig.eigenvalues.len())
        .rev()
        .filter(|&k| eig.eigenvalues[k] > RANK_CUTOFF)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors.column(k)))
        .collect())
}

/// Unnormalized decomposition vectors `ψ̃_k = Σ_j W_kj √q_j e_j` for the
/// first `r` columns `W` of `u`.
fn decomposition(u: &ComplexMatrix, spectrum: &[(f64, Vec<C64>)]) -> Vec<Vec<C64>> {
    let n = spectrum[0].1.len();
    (0..u.rows())
        .map(|k| {
            let mut v = vec![C64::new(0.0, 0.0); n];
            for (j, (q, e)) in spectrum.iter().enumerate() {
                let w = u[(k, j)] * q.sqrt();
                for (vi, ei) in v.iter_mut().zip(e) {
                    *vi += w * ei;
                }
            }
            v
        })
        .collect()
}

/// Weights and normalized states of a decomposition, dropping negligible terms.
fn normalize_terms(
    rho: &DensityOperator,
    vectors: Vec<Vec<C64>>,
) -> Vec<(f64, BipartitePureState)> {
    vectors
        .into_iter()
        .filter_map(|v| {
            let p: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            if p < WEIGHT_CUTOFF {
                return None;
            }
            BipartitePureState::normalized(rho.dims(), v)
                .ok()
                .map(|psi| (p, psi))
        })
        .collect()
}

/// Minimizes `Σ_k p_k·functional(ψ_k)` over decompositions `ρ = Σ_k p_k|ψ_k⟩⟨ψ_k|`
/// with at most `terms` members (default `min(rank², 16)`).
///
/// Start 0 is the eigendecomposition of ρ. Decompositions are the first
/// `rank` columns of a `terms × terms` unitary applied to the scaled
/// eigenvectors.
pub fn minimize_convex_roof<F>(
    rho: &DensityOperator,
    functional: F,
    config: &OptimizerConfig,
    terms: Option<usize>,
) -> Result<ConvexRoofResult>
where
    F: Fn(&BipartitePureState) -> f64,
{
    config.validate()?;
    let spectrum = spectral_terms(rho)?;
    let r = spectrum.len();
    if r == 0 {
        return Err(Error::InvalidState("density operator has no support".into()));
    }
    let k = terms.unwrap_or((r * r).min(MAX_DEFAULT_TERMS));
    if k < r {
        return Err(Error::Domain(format!(
            "{k} decomposition terms cannot represent a rank-{r} state"
        )));
    }
    let eval_terms = |members: &[(f64, BipartitePureState)]| -> f64 {
        members.iter().map(|(p, psi)| p * functional(psi)).sum()
    };

    let rotations = BasisParams::rotation_count(k);
    let n = rotations + r;
    let params_of = |x: &[f64]| -> BasisParams {
        let mut p = BasisParams::from_rotations(k, &x[..rotations]);
        p.angles[rotations..rotations + r].copy_from_slice(&x[rotations..]);
        p
    };
    let members_of = |x: &[f64]| normalize_terms(rho, decomposition(&params_of(x).unitary(), &spectrum));

    let mut starts: Vec<Vec<f64>> = vec![vec![0.0; n]];
    if k > 1 {
        for i in 0..config.restarts {
            let mut rng = task_rng(config.seed, &[i as u64]);
            starts.push(
                (0..n)
                    .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
                    .collect(),
            );
        }
    }

    let mut best: Option<(f64, Vec<f64>, usize)> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut best_converged = false;
    for (idx, x0) in starts.iter().enumerate() {
        let out = if k == 1 {
            Outcome {
                value: eval_terms(&members_of(x0)),
                x: x0.clone(),
                iterations: 0,
                evaluations: 1,
                converged: true,
            }
        } else {
            let mut f = |x: &[f64]| eval_terms(&members_of(x));
            descend(&mut f, x0, config)
        };
        iterations += out.iterations;
        evaluations += out.evaluations;
        if better(out.value, &out.x, best.as_ref().map(|(v, x, _)| (*v, x.as_slice()))) {
            best = Some((out.value, out.x, idx));
            best_converged = out.converged;
        }
    }
    let (value, x, best_restart) = best.expect("at least one start");
    let (probabilities, pure_states) = members_of(&x).into_iter().unzip();
    let result = ConvexRoofResult {
        value,
        probabilities,
        pure_states,
        terms: k,
        diagnostics: Diagnostics {
            restarts_run: starts.len(),
            best_restart,
            iterations,
            evaluations,
            converged: best_converged,
        },
    };
    let total: f64 = result.probabilities.iter().sum();
    let err = result.reassembly_error(rho)?;
    if (total - 1.0).abs() > 1e-9 || err > 1e-8 {
        return Err(Error::InvalidDecomposition(format!(
            "weights sum to {total}, reassembly error {err:.3e}"
        )));
    }
    Ok(result)
}
