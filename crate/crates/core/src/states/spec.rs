//! Builtin state constructors, addressable by short text specs such as
//! `bell`, `werner:0.5` or `random-pure:7`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    computational_ket, haar_pure_state, random_mixed_state, BipartiteDims, BipartitePureState,
    DensityOperator, State, INPUT_TOL,
};
use crate::densemath::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// A builtin state. `dims` left as `None` picks the variant's natural
/// default (two qubits, or d×d for `MaxEntangled`).
#[derive(Clone, Debug, PartialEq)]
pub enum StateSpec {
    /// `|x_A, x_B⟩`.
    Ket { x_a: usize, x_b: usize },
    /// `(|00⟩ + |11⟩)/√2`.
    Bell,
    /// `Σ_k |kk⟩/√d`, d = min(dA, dB).
    MaxEntangled { d: usize },
    /// `p·|Φ+⟩⟨Φ+| + (1 − p)·I/4`, two qubits.
    Werner { p: f64 },
    /// `|+⟩_A ⊗ |0⟩_B` with `|+⟩` the uniform superposition.
    Product,
    /// `Σ_j √λ_j |jj⟩` for the given Schmidt probabilities `λ`.
    Schmidt { probabilities: Vec<f64> },
    /// Haar-random pure state.
    RandomPure { seed: u64 },
    /// Random mixed state of the given rank.
    RandomMixed { rank: usize, seed: u64 },
}

impl StateSpec {
    fn default_dims(&self) -> (usize, usize) {
        match self {
            StateSpec::MaxEntangled { d } => (*d, *d),
            StateSpec::Schmidt { probabilities } => {
                let d = probabilities.len().max(2);
                (d, d)
            }
            _ => (2, 2),
        }
    }
}

impl fmt::Display for StateSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateSpec::Ket { x_a, x_b } => write!(f, "ket:{x_a},{x_b}"),
            StateSpec::Bell => write!(f, "bell"),
            StateSpec::MaxEntangled { d } => write!(f, "max-entangled:{d}"),
            StateSpec::Werner { p } => write!(f, "werner:{p}"),
            StateSpec::Product => write!(f, "product"),
            StateSpec::Schmidt { probabilities } => {
                let parts: Vec<String> = probabilities.iter().map(f64::to_string).collect();
                write!(f, "schmidt:{}", parts.join(","))
            }
            StateSpec::RandomPure { seed } => write!(f, "random-pure:{seed}"),
            StateSpec::RandomMixed { rank, seed } => write!(f, "random-mixed:{rank}:{seed}"),
        }
    }
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadSpec(msg.into())
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| bad(format!("cannot parse {what} from `{s}`")))
}

impl FromStr for StateSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let need = |what: &str| arg.ok_or_else(|| bad(format!("`{name}` needs :{what}")));
        let spec = match name {
            "bell" => StateSpec::Bell,
            "product" => StateSpec::Product,
            "ket" => {
                let (a, b) = need("XA,XB")?
                    .split_once(',')
                    .ok_or_else(|| bad("ket expects ket:XA,XB"))?;
                StateSpec::Ket {
                    x_a: parse_num(a, "x_A")?,
                    x_b: parse_num(b, "x_B")?,
                }
            }
            "max-entangled" | "ghz-like" => StateSpec::MaxEntangled {
                d: parse_num(need("D")?, "d")?,
            },
            "werner" => StateSpec::Werner {
                p: parse_num(need("P")?, "p")?,
            },
            "schmidt" => StateSpec::Schmidt {
                probabilities: need("L1,L2,...")?
                    .split(',')
                    .map(|x| parse_num(x, "Schmidt probability"))
                    .collect::<Result<_>>()?,
            },
            "random-pure" => StateSpec::RandomPure {
                seed: parse_num(need("SEED")?, "seed")?,
            },
            "random-mixed" => {
                let (r, seed) = need("RANK:SEED")?
                    .split_once(':')
                    .ok_or_else(|| bad("random-mixed expects random-mixed:RANK:SEED"))?;
                StateSpec::RandomMixed {
                    rank: parse_num(r, "rank")?,
                    seed: parse_num(seed, "seed")?,
                }
            }
            other => return Err(bad(format!("unknown builtin `{other}`"))),
        };
        Ok(spec)
    }
}

/// Materializes a builtin spec. `dims` overrides the spec's natural
/// dimensions where that makes sense.
pub fn make_state(spec: &StateSpec, dims: Option<BipartiteDims>) -> Result<State> {
    let dims = match dims {
        Some(d) => d,
        None => {
            let (a, b) = spec.default_dims();
            BipartiteDims::new(a, b)?
        }
    };
    let real = |amps: Vec<f64>| -> Vec<C64> { amps.into_iter().map(|x| C64::new(x, 0.0)).collect() };
    let state = match spec {
        StateSpec::Ket { x_a, x_b } => State::Pure(computational_ket(dims, *x_a, *x_b)?),
        StateSpec::Bell => {
            if dims.as_tuple() != (2, 2) {
                return Err(bad("bell is a two-qubit state; use max-entangled:D"));
            }
            State::Pure(max_entangled(dims, 2)?)
        }
        StateSpec::MaxEntangled { d } => {
            if *d < 2 || *d > dims.a().min(dims.b()) {
                return Err(bad(format!(
                    "max-entangled:{d} does not fit dims {:?}",
                    dims.as_tuple()
                )));
            }
            State::Pure(max_entangled(dims, *d)?)
        }
        StateSpec::Werner { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(bad(format!("werner parameter {p} outside [0, 1]")));
            }
            if dims.as_tuple() != (2, 2) {
                return Err(bad("werner states are two-qubit states"));
            }
            let phi = max_entangled(dims, 2)?.projector();
            let m = &phi.scale_real(*p) + &ComplexMatrix::identity(4).scale_real((1.0 - p) / 4.0);
            State::Density(DensityOperator::with_tolerance(dims, m, INPUT_TOL)?)
        }
        StateSpec::Product => {
            let plus = vec![C64::new(1.0, 0.0); dims.a()];
            let mut zero = vec![C64::new(0.0, 0.0); dims.b()];
            zero[0] = C64::new(1.0, 0.0);
            let amps: Vec<C64> = plus
                .iter()
                .flat_map(|a| zero.iter().map(move |b| a * b))
                .collect();
            State::Pure(BipartitePureState::normalized(dims, amps)?)
        }
        StateSpec::Schmidt { probabilities } => {
            if probabilities.len() > dims.a().min(dims.b()) {
                return Err(bad("more Schmidt probabilities than min(dA, dB)"));
            }
            if probabilities.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
                return Err(bad("Schmidt probabilities must be nonnegative"));
            }
            let total: f64 = probabilities.iter().sum();
            if (total - 1.0).abs() > INPUT_TOL {
                return Err(bad(format!("Schmidt probabilities sum to {total}, not 1")));
            }
            let mut amps = vec![0.0; dims.total()];
            for (j, l) in probabilities.iter().enumerate() {
                amps[j * dims.b() + j] = l.sqrt();
            }
            State::Pure(BipartitePureState::with_tolerance(dims, real(amps), INPUT_TOL)?)
        }
        StateSpec::RandomPure { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            State::Pure(haar_pure_state(dims, &mut rng))
        }
        StateSpec::RandomMixed { rank, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            State::Density(random_mixed_state(dims, *rank, &mut rng)?)
        }
    };
    Ok(state)
}

/// `Σ_{k<d} |kk⟩/√d` embedded in `dims`.
pub(crate) fn max_entangled(dims: BipartiteDims, d: usize) -> Result<BipartitePureState> {
    let amp = 1.0 / (d as f64).sqrt();
    let mut amps = vec![C64::new(0.0, 0.0); dims.total()];
    for k in 0..d {
        amps[k * dims.b() + k] = C64::new(amp, 0.0);
    }
    BipartitePureState::new(dims, amps)
}
