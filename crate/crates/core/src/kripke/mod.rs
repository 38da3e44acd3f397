//! Finite Kripke models, the truth-condition evaluator, and the depth-1
//! satisfiability decision.

mod depth1;
mod model;

use thiserror::Error;

use crate::formula::{Atom, AtomError, SyntaxError};

pub use depth1::{
    solve_depth1, Clause, DeflationStep, Depth1Model, Depth1Problem, Elimination, Exclusion,
    SatResult, UnsatCore, ValuationPoint, REFERENCE_WORLD,
};
pub use model::KripkeModel;

#[derive(Debug, Error)]
pub enum KripkeError {
    #[error("a Kripke model needs at least one world")]
    NoWorlds,
    #[error("unknown world {0:?}")]
    UnknownWorld(String),
    #[error("world {0:?} declared twice")]
    DuplicateWorld(String),
    #[error("valuation key {key:?} is not an atom: {source}")]
    ValuationKey { key: String, source: SyntaxError },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
}

impl PartialEq for KripkeError {
    fn eq(&self, other: &Self) -> bool {
        use KripkeError::*;
        match (self, other) {
            (NoWorlds, NoWorlds) => true,
            (UnknownWorld(a), UnknownWorld(b)) | (DuplicateWorld(a), DuplicateWorld(b)) => a == b,
            (ValuationKey { key: a, .. }, ValuationKey { key: b, .. }) => a == b,
            _ => false,
        }
    }
}

/// Invalid depth-1 problem.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("formula outside the depth-1 fragment: {0}")]
    Fragment(String),
    #[error("variable {0:?} has no domain")]
    UnknownVariable(String),
    #[error("atom {0} uses a value outside its variable's domain")]
    UnknownValue(Atom),
    #[error("variable {0:?} has an empty domain")]
    EmptyDomain(String),
    #[error("value {value:?} listed twice for {variable:?}")]
    DuplicateValue { variable: String, value: String },
    #[error(transparent)]
    Atom(AtomError),
}

/// `M, w |= f`.
pub fn evaluate(
    model: &KripkeModel,
    world: &str,
    f: &crate::formula::Formula,
) -> Result<bool, KripkeError> {
    model.evaluate(world, f)
}

/// `M |= f`: `f` holds at every world.
pub fn valid(model: &KripkeModel, f: &crate::formula::Formula) -> bool {
    model.valid(f)
}
