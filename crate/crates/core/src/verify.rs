//! Self-check suites run by `kdent verify`. Each suite draws seeded random
//! instances, compares two routes to the same quantity and reports the
//! largest deviation seen.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::densemath::{hermitian_eigenvalues, svd, trace_norm, ComplexMatrix, Subsystem, C64};
use crate::entanglement::{
    bounds_report, disturbance_form, g_of_concurrence, mixed_entanglement, numeric_outer_inf,
    prop3_lower_bound, pure_entanglement,
};
use crate::error::{Error, Result};
use crate::kd::inner_sup_nonreality;
use crate::optimize::OptimizerConfig;
use crate::seeding::task_rng;
use crate::states::{
    haar_pure_state, haar_unitary, make_state, random_mixed_state, BipartiteDims,
    BipartitePureState, OrthonormalBasis, State, StateSpec,
};
use crate::weakvalue::estimate_entanglement_sampled;

/// Largest total dimension accepted by the suites.
pub const VERIFY_DIM_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemma1,
    Prop1,
    Prop2,
    Prop3,
    Prop4,
    Prop5,
    Concurrence,
    Roof,
    Weak,
}

impl Suite {
    pub const ALL: [Suite; 9] = [
        Suite::Lemma1,
        Suite::Prop1,
        Suite::Prop2,
        Suite::Prop3,
        Suite::Prop4,
        Suite::Prop5,
        Suite::Concurrence,
        Suite::Roof,
        Suite::Weak,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemma1 => "lemma1",
            Suite::Prop1 => "prop1",
            Suite::Prop2 => "prop2",
            Suite::Prop3 => "prop3",
            Suite::Prop4 => "prop4",
            Suite::Prop5 => "prop5",
            Suite::Concurrence => "concurrence",
            Suite::Roof => "roof",
            Suite::Weak => "weak",
        }
    }

    /// Suites selected by a `--suite` value (`all` expands to every suite).
    pub fn parse_selection(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Self::ALL.to_vec());
        }
        Ok(vec![s.parse()?])
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Parse {
                field: "suite".into(),
                message: format!("unknown suite `{s}`"),
            })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub checks: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Running maximum of deviations against one tolerance.
struct Tally {
    tolerance: f64,
    max_deviation: f64,
    checks: usize,
    failed: bool,
}

impl Tally {
    fn new(tolerance: f64) -> Self {
        Self {
            tolerance,
            max_deviation: 0.0,
            checks: 0,
            failed: false,
        }
    }

    /// Records a deviation measured against the suite tolerance.
    fn deviation(&mut self, d: f64) {
        self.checks += 1;
        self.max_deviation = self.max_deviation.max(d);
        if !(d <= self.tolerance) {
            self.failed = true;
        }
    }

    /// Records an inequality check with its own slack; `excess` > 0 fails.
    fn bound(&mut self, excess: f64, slack: f64) {
        self.checks += 1;
        if !(excess <= slack) {
            self.failed = true;
            self.max_deviation = self.max_deviation.max(excess);
        }
    }

    fn finish(self, suite: Suite, note: Option<String>) -> SuiteResult {
        SuiteResult {
            suite,
            passed: !self.failed,
            max_deviation: self.max_deviation,
            tolerance: self.tolerance,
            checks: self.checks,
            note,
        }
    }
}

/// Pure state with Schmidt probabilities `probs` in random local bases.
fn schmidt_state(dims: BipartiteDims, probs: &[f64], rng: &mut ChaCha8Rng) -> Result<BipartitePureState> {
    let mut amps = vec![C64::new(0.0, 0.0); dims.total()];
    for (j, p) in probs.iter().enumerate() {
        amps[j * dims.b() + j] = C64::new(p.sqrt(), 0.0);
    }
    let psi = BipartitePureState::normalized(dims, amps)?;
    psi.apply_local_unitary(&haar_unitary(dims.a(), rng), &haar_unitary(dims.b(), rng))
}

/// Random Schmidt probabilities whose coefficients are all at least `min_coeff`.
fn spread_probabilities(d: usize, min_coeff: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..d).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
        let s: f64 = w.iter().sum();
        let p: Vec<f64> = w.iter().map(|x| x / s).collect();
        if p.iter().all(|&x| x.sqrt() >= min_coeff) {
            return p;
        }
    }
}

fn pure_dims(dims: Option<BipartiteDims>) -> Result<Vec<BipartiteDims>> {
    Ok(match dims {
        Some(d) => vec![d],
        None => vec![
            BipartiteDims::new(2, 2)?,
            BipartiteDims::new(2, 3)?,
            BipartiteDims::new(3, 3)?,
        ],
    })
}

fn lemma1(seed: u64) -> Result<SuiteResult> {
    let mut t = Tally::new(1e-10);
    for i in 0..20u64 {
        let mut rng = task_rng(seed, &[1, i]);
        let d = 2 + (i as usize % 5);
        let v = haar_unitary(d, &mut rng);
        let z: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let o = &(&v * &ComplexMatrix::diag(&z)) * &v.adjoint();
        let norm = trace_norm(&o)?;
        let eig_sum: f64 = (0..d).map(|k| o.expectation(&v.column(k)).norm()).sum();
        t.deviation((eig_sum - norm).abs());
        for _ in 0..10 {
            let b = haar_unitary(d, &mut rng);
            let s: f64 = (0..d).map(|k| o.expectation(&b.column(k)).norm()).sum();
            t.bound(s - norm, 1e-9);
        }
    }
    Ok(t.finish(Suite::Lemma1, None))
}

fn prop1(seed: u64, dims: Option<BipartiteDims>) -> Result<SuiteResult> {
    let dims = dims.unwrap_or(BipartiteDims::new(2, 2)?);
    let mut t = Tally::new(1e-6);
    for i in 0..20u64 {
        let mut rng = task_rng(seed, &[2, i]);
        let a = haar_unitary(dims.a(), &mut rng).column(0);
        let b = haar_unitary(dims.b(), &mut rng).column(0);
        let product = BipartitePureState::product(&a, &b)?;
        t.deviation(pure_entanglement(&product)?.value);
        let probs = spread_probabilities(dims.a().min(dims.b()), 0.1, &mut rng);
        let entangled = schmidt_state(dims, &probs, &mut rng)?;
        t.bound(1e-3 - pure_entanglement(&entangled)?.value, 0.0);
    }
    Ok(t.finish(Suite::Prop1, None))
}

fn prop2(seed: u64, dims: Option<BipartiteDims>, config: &OptimizerConfig) -> Result<SuiteResult> {
    let mut t = Tally::new(1e-4);
    for (k, d) in pure_dims(dims)?.into_iter().enumerate() {
        for i in 0..10u64 {
            let psi = haar_pure_state(d, &mut task_rng(seed, &[3, k as u64, i]));
            let closed = pure_entanglement(&psi)?.value;
            let numeric = numeric_outer_inf(&psi.to_density(), config)?.value;
            t.deviation((numeric - closed).abs());
        }
    }
    Ok(t.finish(Suite::Prop2, None))
}

fn prop3(seed: u64, dims: Option<BipartiteDims>, config: &OptimizerConfig) -> Result<SuiteResult> {
    let mut t = Tally::new(1e-6);
    for (k, d) in pure_dims(dims)?.into_iter().enumerate() {
        for i in 0..5u64 {
            let psi = haar_pure_state(d, &mut task_rng(seed, &[4, k as u64, i]));
            let e = pure_entanglement(&psi)?.value;
            let lower = prop3_lower_bound(&psi.to_density(), config)?;
            let cap = ((d.a().min(d.b()) - 1) as f64).sqrt();
            t.bound(lower - e, 1e-6);
            t.bound(e - cap, 1e-9);
        }
    }
    Ok(t.finish(Suite::Prop3, None))
}

fn prop4(seed: u64, dims: Option<BipartiteDims>) -> Result<SuiteResult> {
    let mut t = Tally::new(1e-9);
    for (k, d) in pure_dims(dims)?.into_iter().enumerate() {
        for i in 0..10u64 {
            let mut rng = task_rng(seed, &[5, k as u64, i]);
            let psi = haar_pure_state(d, &mut rng);
            let basis = OrthonormalBasis::haar_random(d.a(), &mut rng);
            let dist = disturbance_form(&psi, &basis)?;
            t.deviation((dist.value - inner_sup_nonreality(&psi.to_density(), &basis)?).abs());
            t.bound(dist.subsystem_bound - dist.value, 1e-9);
        }
    }
    Ok(t.finish(Suite::Prop4, None))
}

fn prop5(seed: u64, dims: Option<BipartiteDims>, config: &OptimizerConfig) -> Result<SuiteResult> {
    let dims = dims.unwrap_or(BipartiteDims::new(2, 2)?);
    let mut t = Tally::new(config.tol);
    for i in 0..5u64 {
        let psi = haar_pure_state(dims, &mut task_rng(seed, &[6, 0, i]));
        let e = pure_entanglement(&psi)?.value;
        let b = bounds_report(&psi.to_density(), config)?;
        t.bound(b.best_lower() - e, config.tol);
        t.bound(e - b.best_upper(), config.tol);
    }
    let mut exceeded = 0;
    let n_mixed = 5u64;
    for i in 0..n_mixed {
        let rho = random_mixed_state(dims, 2, &mut task_rng(seed, &[6, 1, i]))?;
        let r = mixed_entanglement(&rho, config, None)?;
        t.bound(r.value() - r.bounds.best_upper(), config.tol);
        if !r.lower_bound_holds {
            exceeded += 1;
        }
    }
    let note = (exceeded > 0).then(|| {
        format!(
            "trace-norm lower bound exceeded the convex-roof value on {exceeded} of {n_mixed} mixed states (not a valid bound for mixed states)"
        )
    });
    Ok(t.finish(Suite::Prop5, note))
}

fn concurrence(seed: u64) -> Result<SuiteResult> {
    let mut t = Tally::new(1e-9);
    let dims = BipartiteDims::new(2, 2)?;
    for i in 0..20u64 {
        let psi = haar_pure_state(dims, &mut task_rng(seed, &[7, i]));
        let r = pure_entanglement(&psi)?;
        let lambdas = svd(&psi.amplitude_matrix())?
            .singular_values
            .iter()
            .map(|s| s * s)
            .collect::<Vec<_>>();
        let direct_c = 2.0 * (lambdas[0] * lambdas[1]).sqrt();
        t.deviation((r.normalized - r.concurrence).abs());
        t.deviation((r.concurrence - direct_c).abs());
        let von_neumann: f64 = hermitian_eigenvalues(&psi.reduced(Subsystem::A))?
            .iter()
            .filter(|&&l| l > 0.0)
            .map(|&l| -l * l.log2())
            .sum();
        t.deviation((g_of_concurrence(r.concurrence)? - von_neumann).abs());
    }
    Ok(t.finish(Suite::Concurrence, None))
}

fn roof(config: &OptimizerConfig) -> Result<SuiteResult> {
    let mut t = Tally::new(2e-3);
    for p in [0.2, 0.4, 0.5, 0.6, 0.8, 1.0] {
        let rho = make_state(&StateSpec::Werner { p }, None)?.to_density();
        let r = mixed_entanglement(&rho, config, Some(4))?;
        let expected = f64::max(0.0, (3.0 * p - 1.0) / 2.0);
        t.deviation((r.normalized - expected).abs());
    }
    Ok(t.finish(Suite::Roof, None))
}

fn weak(config: &OptimizerConfig) -> Result<SuiteResult> {
    let mut t = Tally::new(0.02);
    for spec in ["bell", "product", "schmidt:0.75,0.25"] {
        let State::Pure(psi) = make_state(&spec.parse()?, None)? else {
            unreachable!("builtin is pure")
        };
        let r = estimate_entanglement_sampled(&psi, 1_000_000, config)?;
        t.deviation((r.estimate - r.closed_form).abs());
    }
    Ok(t.finish(Suite::Weak, None))
}

/// Runs one suite. `dims` restricts the random instances of the suites that
/// draw bipartite states of arbitrary dimension.
pub fn run_suite(
    suite: Suite,
    dims: Option<BipartiteDims>,
    config: &OptimizerConfig,
) -> Result<SuiteResult> {
    if let Some(d) = dims {
        if d.total() > VERIFY_DIM_CAP {
            return Err(Error::Parse {
                field: "dims".into(),
                message: format!(
                    "verification dims {:?} exceed the cap of {VERIFY_DIM_CAP} total",
                    d.as_tuple()
                ),
            });
        }
    }
    let seed = config.seed;
    match suite {
        Suite::Lemma1 => lemma1(seed),
        Suite::Prop1 => prop1(seed, dims),
        Suite::Prop2 => prop2(seed, dims, config),
        Suite::Prop3 => prop3(seed, dims, config),
        Suite::Prop4 => prop4(seed, dims),
        Suite::Prop5 => prop5(seed, dims, config),
        Suite::Concurrence => concurrence(seed),
        Suite::Roof => roof(config),
        Suite::Weak => weak(config),
    }
}
