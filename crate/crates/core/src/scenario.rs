//! Two-party extended Wigner's friend scenario: settings and outcome domains,
//! observed possibilistic behaviors, the possibilistic no-signalling check,
//! and the encoder to depth-1 modal constraints.
//!
//! Variables: `X`, `Y` are Alice's and Bob's interventions, `A`, `B` their
//! outcomes, `C`, `D` the outcomes recorded by their friends. Alice's reading
//! setting (`X = read_x`) copies the friend's record, so `A = C` there;
//! likewise `B = D` at `Y = read_y`. `X` lies outside the past light cone of
//! `B, Y, C, D` and `Y` outside that of `A, X, C, D`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;
use crate::kripke::{Clause, Depth1Problem};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("domain {0} is empty")]
    EmptyDomain(&'static str),
    #[error("domain {domain} lists {value} twice")]
    DuplicateValue { domain: &'static str, value: u32 },
    #[error("reading setting {setting} for {party} is not in its setting domain")]
    ReadSetting { party: Party, setting: u32 },
    #[error("{party} has a friend but no reading setting")]
    MissingReadSetting { party: Party },
    #[error("cell {0} lies outside the scenario domains")]
    CellOutOfDomain(Cell),
    #[error("context (x={x}, y={y}) has no possible outcome")]
    EmptyContext { x: u32, y: u32 },
    #[error("malformed behavior file: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "Alice",
            Party::Bob => "Bob",
        })
    }
}

/// Settings, outcome domains and friend configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub x_values: Vec<u32>,
    pub y_values: Vec<u32>,
    pub a_values: Vec<u32>,
    pub b_values: Vec<u32>,
    pub friend_a: bool,
    pub friend_b: bool,
    pub read_x: Option<u32>,
    pub read_y: Option<u32>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            x_values: vec![1, 2],
            y_values: vec![1, 2],
            a_values: vec![0, 1],
            b_values: vec![0, 1],
            friend_a: true,
            friend_b: true,
            read_x: Some(1),
            read_y: Some(1),
        }
    }
}

impl ScenarioConfig {
    /// Default domains with neither superobserver having a friend: an
    /// ordinary Bell scenario.
    pub fn friendless() -> Self {
        ScenarioConfig {
            friend_a: false,
            friend_b: false,
            read_x: None,
            read_y: None,
            ..ScenarioConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (name, values) in [
            ("x_values", &self.x_values),
            ("y_values", &self.y_values),
            ("a_values", &self.a_values),
            ("b_values", &self.b_values),
        ] {
            if values.is_empty() {
                return Err(ScenarioError::EmptyDomain(name));
            }
            let mut seen = BTreeSet::new();
            for &v in values {
                if !seen.insert(v) {
                    return Err(ScenarioError::DuplicateValue {
                        domain: name,
                        value: v,
                    });
                }
            }
        }
        for (party, friend, read, settings) in [
            (Party::Alice, self.friend_a, self.read_x, &self.x_values),
            (Party::Bob, self.friend_b, self.read_y, &self.y_values),
        ] {
            if !friend {
                continue;
            }
            match read {
                None => return Err(ScenarioError::MissingReadSetting { party }),
                Some(s) if !settings.contains(&s) => {
                    return Err(ScenarioError::ReadSetting { party, setting: s })
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Values of Charlie's record, or `None` without Alice's friend.
    pub fn c_values(&self) -> Option<&[u32]> {
        self.friend_a.then_some(self.a_values.as_slice())
    }

    /// Values of Debbie's record, or `None` without Bob's friend.
    pub fn d_values(&self) -> Option<&[u32]> {
        self.friend_b.then_some(self.b_values.as_slice())
    }

    /// Reading setting of Alice when she has a friend.
    pub fn alice_reading(&self) -> Option<u32> {
        if self.friend_a {
            self.read_x
        } else {
            None
        }
    }

    pub fn bob_reading(&self) -> Option<u32> {
        if self.friend_b {
            self.read_y
        } else {
            None
        }
    }

    /// All measurement contexts `(x, y)`.
    pub fn contexts(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.x_values
            .iter()
            .flat_map(move |&x| self.y_values.iter().map(move |&y| (x, y)))
    }

    /// All cells in lexicographic `(a, b, x, y)` order of domain positions.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.a_values.iter().flat_map(move |&a| {
            self.b_values.iter().flat_map(move |&b| {
                self.x_values
                    .iter()
                    .flat_map(move |&x| self.y_values.iter().map(move |&y| Cell { a, b, x, y }))
            })
        })
    }

    pub fn cell_count(&self) -> usize {
        self.a_values.len() * self.b_values.len() * self.x_values.len() * self.y_values.len()
    }

    /// Dense index of a cell, matching the order of [`ScenarioConfig::cells`].
    pub fn cell_index(&self, cell: Cell) -> Option<usize> {
        let pos = |vals: &[u32], v: u32| vals.iter().position(|&w| w == v);
        let ai = pos(&self.a_values, cell.a)?;
        let bi = pos(&self.b_values, cell.b)?;
        let xi = pos(&self.x_values, cell.x)?;
        let yi = pos(&self.y_values, cell.y)?;
        let (nb, nx, ny) = (
            self.b_values.len(),
            self.x_values.len(),
            self.y_values.len(),
        );
        Some(((ai * nb + bi) * nx + xi) * ny + yi)
    }
}

/// Outcomes and settings of one observation, `(A=a, B=b, X=x, Y=y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Cell {
    pub a: u32,
    pub b: u32,
    pub x: u32,
    pub y: u32,
}

impl Cell {
    pub const fn new(a: u32, b: u32, x: u32, y: u32) -> Self {
        Cell { a, b, x, y }
    }

    /// `A=a & B=b & X=x & Y=y`.
    pub fn event(&self) -> Formula {
        Formula::conjunction([
            var_eq("A", self.a),
            var_eq("B", self.b),
            var_eq("X", self.x),
            var_eq("Y", self.y),
        ])
        .expect("four conjuncts")
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(A={},B={},X={},Y={})", self.a, self.b, self.x, self.y)
    }
}

/// The four events of the Hardy-type argument.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HardyEvent {
    /// Possible: `(A=1, B=1, X=2, Y=2)`.
    E1,
    /// Impossible: `(A=0, B=1, X=1, Y=2)`.
    E2,
    /// Impossible: `(A=1, B=0, X=2, Y=1)`.
    E3,
    /// Impossible: `(A=1, B=1, X=1, Y=1)`.
    E4,
}

impl HardyEvent {
    pub const ALL: [HardyEvent; 4] = [
        HardyEvent::E1,
        HardyEvent::E2,
        HardyEvent::E3,
        HardyEvent::E4,
    ];
    pub const IMPOSSIBLE: [HardyEvent; 3] = [HardyEvent::E2, HardyEvent::E3, HardyEvent::E4];

    pub const fn cell(self) -> Cell {
        match self {
            HardyEvent::E1 => Cell::new(1, 1, 2, 2),
            HardyEvent::E2 => Cell::new(0, 1, 1, 2),
            HardyEvent::E3 => Cell::new(1, 0, 2, 1),
            HardyEvent::E4 => Cell::new(1, 1, 1, 1),
        }
    }

    pub fn of_cell(cell: Cell) -> Option<HardyEvent> {
        HardyEvent::ALL.into_iter().find(|e| e.cell() == cell)
    }
}

impl fmt::Display for HardyEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for HardyEvent {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "E1" => Ok(HardyEvent::E1),
            "E2" => Ok(HardyEvent::E2),
            "E3" => Ok(HardyEvent::E3),
            "E4" => Ok(HardyEvent::E4),
            _ => Err(format!("unknown event {s:?}, expected E1..E4")),
        }
    }
}

/// A possibility table over `(a, b, x, y)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    config: ScenarioConfig,
    possible: Vec<bool>,
}

impl Behavior {
    pub fn from_fn(
        config: ScenarioConfig,
        mut possible: impl FnMut(Cell) -> bool,
    ) -> Result<Self, ScenarioError> {
        config.validate()?;
        let table: Vec<bool> = config.cells().map(&mut possible).collect();
        let beh = Behavior {
            config,
            possible: table,
        };
        beh.check_contexts()?;
        Ok(beh)
    }

    /// Behavior whose possible cells are exactly `cells`.
    pub fn from_possible_cells(
        config: ScenarioConfig,
        cells: impl IntoIterator<Item = Cell>,
    ) -> Result<Self, ScenarioError> {
        config.validate()?;
        let mut table = vec![false; config.cell_count()];
        for cell in cells {
            let i = config
                .cell_index(cell)
                .ok_or(ScenarioError::CellOutOfDomain(cell))?;
            table[i] = true;
        }
        let beh = Behavior {
            config,
            possible: table,
        };
        beh.check_contexts()?;
        Ok(beh)
    }

    /// Every cell possible.
    pub fn all_possible(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        Behavior::from_fn(config, |_| true)
    }

    /// Hardy pattern: every cell possible except E2, E3 and E4.
    pub fn hardy(config: ScenarioConfig) -> Result<Self, ScenarioError> {
        Behavior::from_fn(config, |c| {
            !HardyEvent::IMPOSSIBLE.iter().any(|e| e.cell() == c)
        })
    }

    fn check_contexts(&self) -> Result<(), ScenarioError> {
        for (x, y) in self.config.contexts() {
            let nonempty = self.config.a_values.iter().any(|&a| {
                self.config
                    .b_values
                    .iter()
                    .any(|&b| self.is_possible(Cell { a, b, x, y }))
            });
            if !nonempty {
                return Err(ScenarioError::EmptyContext { x, y });
            }
        }
        Ok(())
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    /// Cells outside the domains are reported impossible.
    pub fn is_possible(&self, cell: Cell) -> bool {
        self.config
            .cell_index(cell)
            .is_some_and(|i| self.possible[i])
    }

    pub fn possible_cells(&self) -> Vec<Cell> {
        self.config
            .cells()
            .filter(|&c| self.is_possible(c))
            .collect()
    }

    pub fn impossible_cells(&self) -> Vec<Cell> {
        self.config
            .cells()
            .filter(|&c| !self.is_possible(c))
            .collect()
    }

    /// Copy with the possibility of one cell changed.
    pub fn with_cell(&self, cell: Cell, possible: bool) -> Result<Behavior, ScenarioError> {
        let i = self
            .config
            .cell_index(cell)
            .ok_or(ScenarioError::CellOutOfDomain(cell))?;
        let mut next = self.clone();
        next.possible[i] = possible;
        next.check_contexts()?;
        Ok(next)
    }

    /// Same table read under a different friend configuration.
    pub fn with_config(&self, config: ScenarioConfig) -> Result<Behavior, ScenarioError> {
        let cells = self.possible_cells();
        Behavior::from_possible_cells(config, cells)
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let file: BehaviorFile =
            serde_json::from_str(text).map_err(|e| ScenarioError::Json(e.to_string()))?;
        let read_x = file.read_x.or(file.friend_a.then_some(1));
        let read_y = file.read_y.or(file.friend_b.then_some(1));
        let config = ScenarioConfig {
            x_values: file.x_values,
            y_values: file.y_values,
            a_values: file.a_values,
            b_values: file.b_values,
            friend_a: file.friend_a,
            friend_b: file.friend_b,
            read_x,
            read_y,
        };
        let cells = file
            .possible
            .into_iter()
            .map(|[a, b, x, y]| Cell { a, b, x, y });
        Behavior::from_possible_cells(config, cells)
    }

    /// Pretty JSON with possible cells in canonical order.
    pub fn to_json(&self) -> String {
        let c = &self.config;
        let file = BehaviorFile {
            x_values: c.x_values.clone(),
            y_values: c.y_values.clone(),
            a_values: c.a_values.clone(),
            b_values: c.b_values.clone(),
            friend_a: c.friend_a,
            friend_b: c.friend_b,
            read_x: c.read_x,
            read_y: c.read_y,
            possible: self
                .possible_cells()
                .into_iter()
                .map(|c| [c.a, c.b, c.x, c.y])
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("behavior serializes")
    }
}

fn default_settings() -> Vec<u32> {
    vec![1, 2]
}

fn default_outcomes() -> Vec<u32> {
    vec![0, 1]
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BehaviorFile {
    #[serde(default = "default_settings")]
    x_values: Vec<u32>,
    #[serde(default = "default_settings")]
    y_values: Vec<u32>,
    #[serde(default = "default_outcomes")]
    a_values: Vec<u32>,
    #[serde(default = "default_outcomes")]
    b_values: Vec<u32>,
    #[serde(default = "default_true")]
    friend_a: bool,
    #[serde(default = "default_true")]
    friend_b: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    read_x: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    read_y: Option<u32>,
    possible: Vec<[u32; 4]>,
}

/// One party's marginal possibility differs between two contexts that only
/// differ in the other party's setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PnsViolation {
    pub party: Party,
    pub outcome: u32,
    /// The two `(x, y)` contexts compared.
    pub contexts: [(u32, u32); 2],
    /// Marginal possibility of `outcome` in each context.
    pub possible: [bool; 2],
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PnsReport {
    pub holds: bool,
    pub violations: Vec<PnsViolation>,
}

/// Possibilistic no-signalling: `OR_b possible(a,b,x,y)` does not depend on
/// `y`, and `OR_a possible(a,b,x,y)` does not depend on `x`.
///
/// Each setting of the other party is compared against that party's first
/// setting.
pub fn check_pns(beh: &Behavior) -> PnsReport {
    let c = beh.config();
    let mut violations = Vec::new();

    let alice_marginal = |a: u32, x: u32, y: u32| {
        c.b_values
            .iter()
            .any(|&b| beh.is_possible(Cell { a, b, x, y }))
    };
    for &a in &c.a_values {
        for &x in &c.x_values {
            let y0 = c.y_values[0];
            let m0 = alice_marginal(a, x, y0);
            for &y in &c.y_values[1..] {
                let m = alice_marginal(a, x, y);
                if m != m0 {
                    violations.push(PnsViolation {
                        party: Party::Alice,
                        outcome: a,
                        contexts: [(x, y0), (x, y)],
                        possible: [m0, m],
                    });
                }
            }
        }
    }

    let bob_marginal = |b: u32, x: u32, y: u32| {
        c.a_values
            .iter()
            .any(|&a| beh.is_possible(Cell { a, b, x, y }))
    };
    for &b in &c.b_values {
        for &y in &c.y_values {
            let x0 = c.x_values[0];
            let m0 = bob_marginal(b, x0, y);
            for &x in &c.x_values[1..] {
                let m = bob_marginal(b, x, y);
                if m != m0 {
                    violations.push(PnsViolation {
                        party: Party::Bob,
                        outcome: b,
                        contexts: [(x0, y), (x, y)],
                        possible: [m0, m],
                    });
                }
            }
        }
    }

    PnsReport {
        holds: violations.is_empty(),
        violations,
    }
}

fn var_eq(var: &str, value: u32) -> Formula {
    Formula::eq(var, &value.to_string())
}

fn domain(values: &[u32]) -> Vec<String> {
    values.iter().map(u32::to_string).collect()
}

/// `[](Z=read -> (O=v1 & F=v1) | (O=v2 & F=v2) | ...)`: reading the friend
/// copies the record into the superobserver's outcome.
fn reading_clause(setting: &str, read: u32, outcome: &str, record: &str, values: &[u32]) -> Clause {
    let copies = values
        .iter()
        .map(|&v| Formula::and(var_eq(outcome, v), var_eq(record, v)));
    Clause::MustAll(Formula::implies(
        var_eq(setting, read),
        Formula::disjunction(copies).expect("nonempty outcome domain"),
    ))
}

/// `<>E -> <>(E & Z=z)` for every nonempty subset of `eligible`, every
/// assignment to it, and every value `z`.
fn agency_clauses(
    intervention: &str,
    values: &[u32],
    eligible: &[(&str, &[u32])],
    out: &mut Vec<Clause>,
) {
    for mask in 1u32..(1 << eligible.len()) {
        let chosen: Vec<&(&str, &[u32])> = eligible
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, v)| v)
            .collect();
        let combos: usize = chosen.iter().map(|(_, dom)| dom.len()).product();
        for mut index in 0..combos {
            // mixed radix, last variable fastest
            let mut atoms = Vec::with_capacity(chosen.len());
            for (var, dom) in chosen.iter().rev() {
                atoms.push(var_eq(var, dom[index % dom.len()]));
                index /= dom.len();
            }
            atoms.reverse();
            let event = Formula::conjunction(atoms).expect("nonempty subset");
            for &z in values {
                out.push(Clause::Conditional(
                    event.clone(),
                    Formula::and(event.clone(), var_eq(intervention, z)),
                ));
            }
        }
    }
}

/// Translates a behavior into depth-1 constraints at the reference world.
///
/// Clause order: one `Required`/`Forbidden` per cell in canonical order,
/// then the reading clauses (Alice, Bob), then the agency conditionals for
/// `X` followed by those for `Y`.
pub fn encode(beh: &Behavior) -> Depth1Problem {
    let c = beh.config();
    let mut domains = BTreeMap::from([
        ("A".to_string(), domain(&c.a_values)),
        ("B".to_string(), domain(&c.b_values)),
        ("X".to_string(), domain(&c.x_values)),
        ("Y".to_string(), domain(&c.y_values)),
    ]);
    if let Some(cv) = c.c_values() {
        domains.insert("C".to_string(), domain(cv));
    }
    if let Some(dv) = c.d_values() {
        domains.insert("D".to_string(), domain(dv));
    }

    let mut clauses = Vec::new();
    for cell in c.cells() {
        clauses.push(if beh.is_possible(cell) {
            Clause::Required(cell.event())
        } else {
            Clause::Forbidden(cell.event())
        });
    }

    if let Some(read) = c.alice_reading() {
        clauses.push(reading_clause("X", read, "A", "C", &c.a_values));
    }
    if let Some(read) = c.bob_reading() {
        clauses.push(reading_clause("Y", read, "B", "D", &c.b_values));
    }

    // X is outside the past light cone of B, C, D, Y; Y outside that of A, C, D, X.
    let mut eligible_x: Vec<(&str, &[u32])> = vec![("B", &c.b_values)];
    let mut eligible_y: Vec<(&str, &[u32])> = vec![("A", &c.a_values)];
    if let Some(cv) = c.c_values() {
        eligible_x.push(("C", cv));
        eligible_y.push(("C", cv));
    }
    if let Some(dv) = c.d_values() {
        eligible_x.push(("D", dv));
        eligible_y.push(("D", dv));
    }
    eligible_x.push(("Y", &c.y_values));
    eligible_y.push(("X", &c.x_values));

    agency_clauses("X", &c.x_values, &eligible_x, &mut clauses);
    agency_clauses("Y", &c.y_values, &eligible_y, &mut clauses);

    Depth1Problem::new(domains, clauses).expect("encoder emits well-formed clauses")
}

/// Index of the `Forbidden` clause for `cell` in an encoded problem.
pub fn forbidden_clause_index(problem: &Depth1Problem, cell: Cell) -> Option<usize> {
    let event = cell.event();
    problem
        .constraints()
        .iter()
        .position(|c| matches!(c, Clause::Forbidden(f) if *f == event))
}
