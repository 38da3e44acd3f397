//! Satisfiability for depth-1 modal constraints evaluated at one reference
//! world `w0`.
//!
//! Every constraint is asserted at `w0` and nests no modality, so a model is
//! determined by which worlds `w0` can see. Totality of the valuation (each
//! variable takes exactly one value per world) means each accessible world
//! is characterized by a [`ValuationPoint`]; the question becomes which
//! subsets `S` of the valuation grid satisfy
//!
//! * `MustAll(φ)`: every point of `S` satisfies `φ` (from `[]φ`),
//! * `Forbidden(φ)`: no point of `S` satisfies `φ` (from `~<>φ`),
//! * `Required(φ)`: some point of `S` satisfies `φ` (from `<>φ`),
//! * `Conditional(φ, ψ)`: if some point satisfies `φ` then some point
//!   satisfies `ψ` (from `<>φ -> <>ψ`).
//!
//! Solutions are closed under union. The first two are per-point filters,
//! `Required` only gets easier as `S` grows, and a witness for `φ` in
//! `S1 ∪ S2` lies in `S1` or `S2`, which then also holds a `ψ` witness. So
//! there is a greatest set satisfying everything except `Required`, and the
//! problem is satisfiable iff that set meets every `Required` clause. The
//! greatest set is reached by deflation: start from the filtered grid and,
//! while some `Conditional` has a witnessed antecedent and no witnessed
//! consequent, drop every antecedent point. Any solution inside the current
//! set has no consequent point either, hence no antecedent point, so no
//! solution is ever lost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::{KripkeModel, ProblemError};
use crate::formula::{Atom, Formula};

/// Name of the reference world in models rebuilt from a solution.
pub const REFERENCE_WORLD: &str = "w0";

/// One constraint of the fragment, asserted at the reference world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Clause {
    MustAll(Formula),
    Forbidden(Formula),
    Required(Formula),
    Conditional(Formula, Formula),
}

impl Clause {
    /// The modal formula this clause stands for.
    pub fn to_formula(&self) -> Formula {
        match self {
            Clause::MustAll(f) => Formula::boxed(f.clone()),
            Clause::Forbidden(f) => Formula::not(Formula::diamond(f.clone())),
            Clause::Required(f) => Formula::diamond(f.clone()),
            Clause::Conditional(f, g) => {
                Formula::implies(Formula::diamond(f.clone()), Formula::diamond(g.clone()))
            }
        }
    }

    /// Classifies a modal formula into the fragment.
    pub fn from_formula(f: &Formula) -> Result<Clause, ProblemError> {
        let clause = match f {
            Formula::Box(g) => Clause::MustAll((**g).clone()),
            Formula::Diamond(g) => Clause::Required((**g).clone()),
            Formula::Not(inner) => match &**inner {
                Formula::Diamond(g) => Clause::Forbidden((**g).clone()),
                _ => return Err(ProblemError::Fragment(f.to_string())),
            },
            Formula::Implies(l, r) => match (&**l, &**r) {
                (Formula::Diamond(g), Formula::Diamond(h)) => {
                    Clause::Conditional((**g).clone(), (**h).clone())
                }
                _ => return Err(ProblemError::Fragment(f.to_string())),
            },
            _ => return Err(ProblemError::Fragment(f.to_string())),
        };
        if clause.bodies().iter().any(|b| !b.is_propositional()) {
            return Err(ProblemError::Fragment(f.to_string()));
        }
        Ok(clause)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Clause::MustAll(_) => "must-all",
            Clause::Forbidden(_) => "forbidden",
            Clause::Required(_) => "required",
            Clause::Conditional(..) => "conditional",
        }
    }

    fn bodies(&self) -> Vec<&Formula> {
        match self {
            Clause::MustAll(f) | Clause::Forbidden(f) | Clause::Required(f) => vec![f],
            Clause::Conditional(f, g) => vec![f, g],
        }
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_formula())
    }
}

/// A total assignment of one value to every variable.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ValuationPoint {
    assignment: BTreeMap<String, String>,
}

impl ValuationPoint {
    pub fn new(assignment: BTreeMap<String, String>) -> Self {
        ValuationPoint { assignment }
    }

    pub fn get(&self, variable: &str) -> Option<&str> {
        self.assignment.get(variable).map(String::as_str)
    }

    pub fn assignment(&self) -> &BTreeMap<String, String> {
        &self.assignment
    }

    /// Propositional truth of `f` at this point. Panics on modal input.
    pub fn satisfies(&self, f: &Formula) -> bool {
        f.eval_propositional(&|a: &Atom| self.get(a.variable()) == Some(a.value()))
            .expect("propositional formula")
    }

    /// World label used when the point is turned into a Kripke world.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for ValuationPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .assignment
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Finite domains plus a list of fragment clauses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Depth1Problem {
    atom_domains: BTreeMap<String, Vec<String>>,
    constraints: Vec<Clause>,
}

impl Depth1Problem {
    pub fn new(
        atom_domains: BTreeMap<String, Vec<String>>,
        constraints: Vec<Clause>,
    ) -> Result<Self, ProblemError> {
        for (var, values) in &atom_domains {
            if values.is_empty() {
                return Err(ProblemError::EmptyDomain(var.clone()));
            }
            let mut seen = BTreeSet::new();
            for v in values {
                Atom::new(var.as_str(), v.as_str()).map_err(ProblemError::Atom)?;
                if !seen.insert(v) {
                    return Err(ProblemError::DuplicateValue {
                        variable: var.clone(),
                        value: v.clone(),
                    });
                }
            }
        }
        for clause in &constraints {
            for body in clause.bodies() {
                if !body.is_propositional() {
                    return Err(ProblemError::Fragment(clause.to_string()));
                }
                for atom in body.atoms() {
                    let Some(values) = atom_domains.get(atom.variable()) else {
                        return Err(ProblemError::UnknownVariable(atom.variable().to_string()));
                    };
                    if !values.iter().any(|v| v == atom.value()) {
                        return Err(ProblemError::UnknownValue(atom.clone()));
                    }
                }
            }
        }
        Ok(Depth1Problem {
            atom_domains,
            constraints,
        })
    }

    /// Builds a problem from modal formulas, each of which must have one of
    /// the shapes `[]φ`, `~<>φ`, `<>φ` or `<>φ -> <>ψ` with `φ, ψ`
    /// modality-free.
    pub fn from_formulas(
        atom_domains: BTreeMap<String, Vec<String>>,
        formulas: &[Formula],
    ) -> Result<Self, ProblemError> {
        let clauses = formulas
            .iter()
            .map(Clause::from_formula)
            .collect::<Result<Vec<_>, _>>()?;
        Depth1Problem::new(atom_domains, clauses)
    }

    pub fn atom_domains(&self) -> &BTreeMap<String, Vec<String>> {
        &self.atom_domains
    }

    pub fn constraints(&self) -> &[Clause] {
        &self.constraints
    }

    /// Same problem with the clause at `index` removed.
    pub fn without(&self, index: usize) -> Depth1Problem {
        let mut constraints = self.constraints.clone();
        constraints.remove(index);
        Depth1Problem {
            atom_domains: self.atom_domains.clone(),
            constraints,
        }
    }

    /// The "exactly one value per world" axioms for every variable, as
    /// `[]` formulas over the domain.
    pub fn exactly_one_value_formulas(&self) -> Vec<Formula> {
        self.atom_domains
            .iter()
            .map(|(var, values)| {
                let options = values.iter().map(|chosen| {
                    Formula::conjunction(values.iter().map(|v| {
                        let atom = Formula::eq(var, v);
                        if v == chosen {
                            atom
                        } else {
                            Formula::not(atom)
                        }
                    }))
                    .expect("nonempty domain")
                });
                Formula::boxed(Formula::disjunction(options).expect("nonempty domain"))
            })
            .collect()
    }

    /// Every valuation point, in lexicographic order of (variable, value
    /// position), last variable fastest.
    pub fn grid(&self) -> Vec<ValuationPoint> {
        let grid = Grid::new(self);
        (0..grid.size).map(|i| grid.point(i)).collect()
    }

    /// Direct check of the four clause conditions on a candidate world set.
    pub fn is_solution(&self, points: &[ValuationPoint]) -> bool {
        let any = |f: &Formula| points.iter().any(|p| p.satisfies(f));
        self.constraints.iter().all(|c| match c {
            Clause::MustAll(f) => points.iter().all(|p| p.satisfies(f)),
            Clause::Forbidden(f) => !any(f),
            Clause::Required(f) => any(f),
            Clause::Conditional(f, g) => !any(f) || any(g),
        })
    }
}

/// Why a grid point is not in the deflated set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exclusion {
    /// Fails the `MustAll` clause with this index.
    MustAll(usize),
    /// Satisfies the `Forbidden` clause with this index.
    Forbidden(usize),
    /// Removed by the deflation step with this sequence number.
    Deflated(usize),
}

/// One firing of a `Conditional` clause during deflation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeflationStep {
    /// Position in the overall deflation sequence.
    pub sequence: usize,
    /// Index of the conditional clause whose consequent had no witness.
    pub clause: usize,
    pub removed: Vec<ValuationPoint>,
}

/// A grid point that would satisfy the uncovered `Required` clause, and the
/// reason it is unavailable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Elimination {
    pub point: ValuationPoint,
    pub exclusion: Exclusion,
}

/// Explanation of unsatisfiability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsatCore {
    /// Index of a `Required` clause with no surviving witness.
    pub required: usize,
    pub formula: Formula,
    /// All grid points satisfying the required formula.
    pub candidates: Vec<Elimination>,
    /// Deflation steps the candidates' removal depends on, transitively,
    /// in execution order.
    pub chain: Vec<DeflationStep>,
}

/// A set of accessible worlds satisfying a problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Depth1Model {
    points: Vec<ValuationPoint>,
}

impl Depth1Model {
    pub fn points(&self) -> &[ValuationPoint] {
        &self.points
    }

    /// The Kripke model `{w0} ∪ S` with `w0` seeing every point of `S`.
    /// `w0` itself carries no atoms.
    pub fn to_kripke(&self) -> KripkeModel {
        let mut worlds = vec![REFERENCE_WORLD.to_string()];
        let mut relation = Vec::new();
        let mut valuation: BTreeMap<Atom, Vec<String>> = BTreeMap::new();
        for p in &self.points {
            let label = p.label();
            relation.push((REFERENCE_WORLD.to_string(), label.clone()));
            for (var, val) in p.assignment() {
                let atom = Atom::new(var.as_str(), val.as_str()).expect("validated domain");
                valuation.entry(atom).or_default().push(label.clone());
            }
            worlds.push(label);
        }
        KripkeModel::new(worlds, relation, valuation).expect("labels are distinct")
    }

    /// Rebuilds the Kripke model and evaluates every clause formula and
    /// every exactly-one-value axiom at `w0`. Returns the formulas that do
    /// not hold; empty means the model is confirmed.
    pub fn recheck(&self, problem: &Depth1Problem) -> Vec<Formula> {
        let model = self.to_kripke();
        problem
            .constraints()
            .iter()
            .map(Clause::to_formula)
            .chain(problem.exactly_one_value_formulas())
            .filter(|f| !model.evaluate(REFERENCE_WORLD, f).expect("w0 exists"))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Model(Depth1Model),
    Unsat(UnsatCore),
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Model(_))
    }

    pub fn model(&self) -> Option<&Depth1Model> {
        match self {
            SatResult::Model(m) => Some(m),
            SatResult::Unsat(_) => None,
        }
    }

    pub fn core(&self) -> Option<&UnsatCore> {
        match self {
            SatResult::Model(_) => None,
            SatResult::Unsat(c) => Some(c),
        }
    }
}

struct Grid<'a> {
    vars: Vec<&'a str>,
    domains: Vec<&'a [String]>,
    position: BTreeMap<&'a str, usize>,
    size: usize,
}

impl<'a> Grid<'a> {
    fn new(problem: &'a Depth1Problem) -> Self {
        let vars: Vec<&str> = problem.atom_domains.keys().map(String::as_str).collect();
        let domains: Vec<&[String]> = problem.atom_domains.values().map(Vec::as_slice).collect();
        let position = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        let size = domains.iter().map(|d| d.len()).product();
        Grid {
            vars,
            domains,
            position,
            size,
        }
    }

    fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.domains.len()];
        for (slot, domain) in digits.iter_mut().zip(&self.domains).rev() {
            *slot = index % domain.len();
            index /= domain.len();
        }
        digits
    }

    fn point(&self, index: usize) -> ValuationPoint {
        let digits = self.digits(index);
        ValuationPoint::new(
            self.vars
                .iter()
                .zip(&self.domains)
                .zip(digits)
                .map(|((var, dom), d)| (var.to_string(), dom[d].clone()))
                .collect(),
        )
    }

    /// Truth table of a propositional formula over the whole grid.
    fn truth_table(&self, f: &Formula) -> Vec<bool> {
        (0..self.size)
            .map(|i| {
                let digits = self.digits(i);
                f.eval_propositional(&|a: &Atom| {
                    let p = self.position[a.variable()];
                    self.domains[p][digits[p]] == a.value()
                })
                .expect("propositional formula")
            })
            .collect()
    }
}

/// Decides a depth-1 problem by greatest-fixpoint deflation.
///
/// On success the returned model is the largest solution. On failure the
/// core names the first `Required` clause, in clause order, that has no
/// witness left.
pub fn solve_depth1(problem: &Depth1Problem) -> SatResult {
    let grid = Grid::new(problem);
    let mut excluded: Vec<Option<Exclusion>> = vec![None; grid.size];

    for (k, clause) in problem.constraints.iter().enumerate() {
        match clause {
            Clause::MustAll(f) => {
                for (i, ok) in grid.truth_table(f).into_iter().enumerate() {
                    if !ok && excluded[i].is_none() {
                        excluded[i] = Some(Exclusion::MustAll(k));
                    }
                }
            }
            Clause::Forbidden(f) => {
                for (i, hit) in grid.truth_table(f).into_iter().enumerate() {
                    if hit && excluded[i].is_none() {
                        excluded[i] = Some(Exclusion::Forbidden(k));
                    }
                }
            }
            Clause::Required(_) | Clause::Conditional(..) => {}
        }
    }

    let conditionals: Vec<(usize, Vec<bool>, Vec<bool>)> = problem
        .constraints
        .iter()
        .enumerate()
        .filter_map(|(k, c)| match c {
            Clause::Conditional(f, g) => Some((k, grid.truth_table(f), grid.truth_table(g))),
            _ => None,
        })
        .collect();

    let witnessed = |table: &[bool], excluded: &[Option<Exclusion>]| {
        table.iter().zip(excluded).any(|(&t, e)| t && e.is_none())
    };

    let mut steps: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut changed = true;
    while changed {
        changed = false;
        for (k, antecedent, consequent) in &conditionals {
            if witnessed(antecedent, &excluded) && !witnessed(consequent, &excluded) {
                let sequence = steps.len();
                let removed: Vec<usize> = (0..grid.size)
                    .filter(|&i| antecedent[i] && excluded[i].is_none())
                    .collect();
                for &i in &removed {
                    excluded[i] = Some(Exclusion::Deflated(sequence));
                }
                steps.push((*k, removed));
                changed = true;
            }
        }
    }

    for (k, clause) in problem.constraints.iter().enumerate() {
        let Clause::Required(f) = clause else {
            continue;
        };
        let table = grid.truth_table(f);
        if witnessed(&table, &excluded) {
            continue;
        }
        let candidate_ids: Vec<usize> = (0..grid.size).filter(|&i| table[i]).collect();

        // Collect deflation steps the exclusions depend on.
        let mut needed = BTreeSet::new();
        let mut queue: Vec<usize> = candidate_ids
            .iter()
            .filter_map(|&i| match excluded[i] {
                Some(Exclusion::Deflated(s)) => Some(s),
                _ => None,
            })
            .collect();
        while let Some(s) = queue.pop() {
            if !needed.insert(s) {
                continue;
            }
            let clause = steps[s].0;
            let consequent = &conditionals
                .iter()
                .find(|(k, ..)| *k == clause)
                .expect("step refers to a conditional")
                .2;
            for (i, &holds) in consequent.iter().enumerate() {
                if let (true, Some(Exclusion::Deflated(t))) = (holds, excluded[i]) {
                    if t < s {
                        queue.push(t);
                    }
                }
            }
        }

        return SatResult::Unsat(UnsatCore {
            required: k,
            formula: f.clone(),
            candidates: candidate_ids
                .into_iter()
                .map(|i| Elimination {
                    point: grid.point(i),
                    exclusion: excluded[i].expect("no witness survives"),
                })
                .collect(),
            chain: needed
                .into_iter()
                .map(|s| DeflationStep {
                    sequence: s,
                    clause: steps[s].0,
                    removed: steps[s].1.iter().map(|&i| grid.point(i)).collect(),
                })
                .collect(),
        });
    }

    SatResult::Model(Depth1Model {
        points: (0..grid.size)
            .filter(|&i| excluded[i].is_none())
            .map(|i| grid.point(i))
            .collect(),
    })
}
