//! Born-rule probabilities for the Hardy state measured by the two
//! superobservers.
//!
//! Each lab is modeled by the two-dimensional span of `|C0>, |C1>` (resp.
//! `|D0>, |D1>`): the correlating unitaries take the ready state and the
//! friend's qubit into that span, and every superobserver effect acts
//! within it. Joint basis order is Alice-major:
//! `|C0 D0>, |C0 D1>, |C1 D0>, |C1 D1>`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::scenario::{Behavior, Cell, Party, ScenarioConfig, ScenarioError};

/// Tolerance for norms, hermiticity, idempotence and imaginary residues.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance on per-context probability sums.
pub const SUM_TOL: f64 = 1e-9;
/// Default cutoff below which a probability counts as impossible.
pub const DEFAULT_EPSILON: f64 = 1e-9;
/// Largest accepted cutoff.
pub const MAX_EPSILON: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantumError {
    #[error("state is not normalized: squared norm {0}")]
    NotNormalized(f64),
    #[error("no measurement for setting {0}; settings are 1 and 2")]
    UnknownSetting(u32),
    #[error("the Hardy model needs x, y in {{1, 2}} and a, b in {{0, 1}}")]
    UnsupportedConfig,
    #[error("expected a {expected}-dimensional state, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("probability for {cell} has imaginary part {imag}")]
    ComplexProbability { cell: Cell, imag: f64 },
    #[error("probability for {cell} is {value}, outside [0, 1]")]
    OutOfRange { cell: Cell, value: f64 },
    #[error("probabilities in context (x={x}, y={y}) sum to {sum}")]
    Normalization { x: u32, y: u32, sum: f64 },
    #[error("epsilon {0} outside (0, 1e-3]")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A normalized pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: DVector<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self, QuantumError> {
        let amplitudes = DVector::from_vec(amplitudes);
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > EXACT_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(StateVector { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        self.amplitudes.as_slice()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `<self| op |self>`.
    pub fn expectation(&self, op: &DMatrix<Complex64>) -> Complex64 {
        self.amplitudes.dotc(&(op * &self.amplitudes))
    }
}

/// `(|C0 D0> + |C0 D1> + |C1 D0>) / sqrt(3)`.
pub fn hardy_state() -> StateVector {
    let s = Complex64::new(1.0 / 3f64.sqrt(), 0.0);
    let z = Complex64::new(0.0, 0.0);
    StateVector::new(vec![s, s, s, z]).expect("normalized")
}

/// A projective measurement element on one lab, with its outcome label.
#[derive(Debug, Clone, PartialEq)]
pub struct Effect {
    pub outcome: u32,
    pub matrix: DMatrix<Complex64>,
}

impl Effect {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (&self.matrix - self.matrix.adjoint()).camax() <= tol
    }

    pub fn is_idempotent(&self, tol: f64) -> bool {
        (&self.matrix * &self.matrix - &self.matrix).camax() <= tol
    }
}

fn projector(v: &[Complex64]) -> DMatrix<Complex64> {
    let v = DVector::from_column_slice(v);
    &v * v.adjoint()
}

/// Setting 1 reads the friend: `{|0><0|, I - |0><0|}`. Setting 2 measures
/// `{|+><+|, I - |+><+|}`. Outcome labels are 0 then 1. Both labs use the
/// same effects in their own basis.
pub fn measurement_effects(party: Party, setting: u32) -> Result<Vec<Effect>, QuantumError> {
    let _ = party;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let first = match setting {
        1 => projector(&[one, zero]),
        2 => projector(&[h, h]),
        s => return Err(QuantumError::UnknownSetting(s)),
    };
    let rest = DMatrix::identity(2, 2) - &first;
    Ok(vec![
        Effect {
            outcome: 0,
            matrix: first,
        },
        Effect {
            outcome: 1,
            matrix: rest,
        },
    ])
}

/// Probabilities `P(a, b | x, y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    probs: BTreeMap<Cell, f64>,
}

#[derive(Serialize)]
struct ProbEntry {
    a: u32,
    b: u32,
    x: u32,
    y: u32,
    p: f64,
}

impl ProbTable {
    pub fn get(&self, cell: Cell) -> Option<f64> {
        self.probs.get(&cell).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Cell, f64)> + '_ {
        self.probs.iter().map(|(c, p)| (*c, *p))
    }

    /// Entries sorted by `(x, y, a, b)`.
    pub fn to_json(&self) -> String {
        let mut entries: Vec<ProbEntry> = self
            .probs
            .iter()
            .map(|(c, &p)| ProbEntry {
                a: c.a,
                b: c.b,
                x: c.x,
                y: c.y,
                p,
            })
            .collect();
        entries.sort_by_key(|e| (e.x, e.y, e.a, e.b));
        serde_json::to_string_pretty(&serde_json::json!({ "entries": entries }))
            .expect("table serializes")
    }
}

/// `P(a, b | x, y) = <psi| A_x(a) ⊗ B_y(b) |psi>` for every cell of the
/// (binary, two-setting) scenario. Imaginary parts and excursions outside
/// `[0, 1]` up to `EXACT_TOL` are rounding noise and are dropped.
pub fn born_table(state: &StateVector, config: &ScenarioConfig) -> Result<ProbTable, QuantumError> {
    let binary = |v: &[u32], want: [u32; 2]| v.len() == 2 && want.iter().all(|w| v.contains(w));
    if !(binary(&config.x_values, [1, 2])
        && binary(&config.y_values, [1, 2])
        && binary(&config.a_values, [0, 1])
        && binary(&config.b_values, [0, 1]))
    {
        return Err(QuantumError::UnsupportedConfig);
    }
    if state.dim() != 4 {
        return Err(QuantumError::Dimension {
            expected: 4,
            actual: state.dim(),
        });
    }

    let mut probs = BTreeMap::new();
    for (x, y) in config.contexts() {
        let alice = measurement_effects(Party::Alice, x)?;
        let bob = measurement_effects(Party::Bob, y)?;
        let mut sum = 0.0;
        for ea in &alice {
            for eb in &bob {
                let cell = Cell::new(ea.outcome, eb.outcome, x, y);
                let value = state.expectation(&ea.matrix.kronecker(&eb.matrix));
                if value.im.abs() > EXACT_TOL {
                    return Err(QuantumError::ComplexProbability {
                        cell,
                        imag: value.im,
                    });
                }
                if !(-EXACT_TOL..=1.0 + EXACT_TOL).contains(&value.re) {
                    return Err(QuantumError::OutOfRange {
                        cell,
                        value: value.re,
                    });
                }
                sum += value.re;
                probs.insert(cell, value.re.clamp(0.0, 1.0));
            }
        }
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(QuantumError::Normalization { x, y, sum });
        }
    }
    Ok(ProbTable { probs })
}

/// Possibilistic reading of a probability table: a cell is possible iff its
/// probability exceeds `epsilon`.
pub fn possibilistic(
    table: &ProbTable,
    config: ScenarioConfig,
    epsilon: f64,
) -> Result<Behavior, QuantumError> {
    Ok(Behavior::from_fn(config, |cell| {
        table.get(cell).is_some_and(|p| p > epsilon)
    })?)
}

/// The Hardy behavior in the default two-friend scenario.
pub fn hardy_behavior(epsilon: f64) -> Result<Behavior, QuantumError> {
    if !(epsilon > 0.0 && epsilon <= MAX_EPSILON) {
        return Err(QuantumError::InvalidEpsilon(epsilon));
    }
    let config = ScenarioConfig::default();
    let table = born_table(&hardy_state(), &config)?;
    possibilistic(&table, config, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::HardyEvent;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn hardy_state_amplitudes() {
        let psi = hardy_state();
        assert!((psi.norm_squared() - 1.0).abs() <= EXACT_TOL);
        assert_eq!(psi.amplitudes()[3], c(0.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let other = StateVector::new(vec![c(s), c(s), c(0.0), c(0.0)]).unwrap();
        assert!((psi.inner(&other).re - (2.0f64 / 3.0).sqrt()).abs() <= EXACT_TOL);
        assert!(psi.inner(&other).im.abs() <= EXACT_TOL);
    }

    #[test]
    fn effect_matrices() {
        let a1 = measurement_effects(Party::Alice, 1).unwrap();
        assert_eq!(
            a1[0].matrix,
            DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)])
        );
        let a2 = measurement_effects(Party::Alice, 2).unwrap();
        for z in a2[0].matrix.iter() {
            assert!((z - c(0.5)).norm() <= EXACT_TOL);
        }
        for party in [Party::Alice, Party::Bob] {
            for setting in [1, 2] {
                let effects = measurement_effects(party, setting).unwrap();
                let total = effects
                    .iter()
                    .fold(DMatrix::zeros(2, 2), |acc, e| acc + &e.matrix);
                assert!((total - DMatrix::<Complex64>::identity(2, 2)).camax() <= EXACT_TOL);
                for e in &effects {
                    assert!(e.is_hermitian(EXACT_TOL));
                    assert!(e.is_idempotent(EXACT_TOL));
                }
            }
        }
        assert_eq!(
            measurement_effects(Party::Bob, 3),
            Err(QuantumError::UnknownSetting(3))
        );
    }

    #[test]
    fn hardy_probabilities() {
        let t = born_table(&hardy_state(), &ScenarioConfig::default()).unwrap();
        for e in HardyEvent::IMPOSSIBLE {
            assert!(t.get(e.cell()).unwrap().abs() <= EXACT_TOL, "{e}");
        }
        assert!((t.get(HardyEvent::E1.cell()).unwrap() - 1.0 / 12.0).abs() <= EXACT_TOL);
        assert!((t.get(Cell::new(0, 0, 1, 1)).unwrap() - 1.0 / 3.0).abs() <= EXACT_TOL);
        for (_, p) in t.iter() {
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn hardy_behavior_pattern() {
        let beh = hardy_behavior(DEFAULT_EPSILON).unwrap();
        let zeros: Vec<Cell> = beh.impossible_cells();
        let mut expected: Vec<Cell> = HardyEvent::IMPOSSIBLE.iter().map(|e| e.cell()).collect();
        expected.sort();
        assert_eq!(zeros, expected);
        assert!(beh.is_possible(HardyEvent::E1.cell()));
        assert_eq!(beh, Behavior::hardy(ScenarioConfig::default()).unwrap());
    }

    #[test]
    fn epsilon_range() {
        assert!(hardy_behavior(0.0).is_err());
        assert!(hardy_behavior(2e-3).is_err());
        assert!(hardy_behavior(f64::NAN).is_err());
        assert!(hardy_behavior(1e-3).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            StateVector::new(vec![c(1.0), c(1.0)]),
            Err(QuantumError::NotNormalized(_))
        ));
        let two = StateVector::new(vec![c(1.0), c(0.0)]).unwrap();
        assert!(matches!(
            born_table(&two, &ScenarioConfig::default()),
            Err(QuantumError::Dimension { .. })
        ));
        let config = ScenarioConfig {
            x_values: vec![1, 2, 3],
            ..ScenarioConfig::default()
        };
        assert_eq!(
            born_table(&hardy_state(), &config),
            Err(QuantumError::UnsupportedConfig)
        );
    }
}
