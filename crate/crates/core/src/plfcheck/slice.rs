//! Greatest valid sub-table for one value of the friends' records.

use serde::Serialize;

use super::FriendOutcomes;
use crate::scenario::{Behavior, Cell, Party, ScenarioConfig};

/// Why a cell of a slice is false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellFate {
    /// Impossible in the observed behavior (and consistent with the reading
    /// protocol).
    Impossible,
    /// Contradicts the reading protocol of this party (`A = C` at
    /// `X = read_x`, or `B = D` at `Y = read_y`).
    Reading { party: Party },
    /// Zeroed by the deflation step with this index.
    Eliminated { step: usize },
}

/// A marginal-equality repair: for one fixed outcome and setting of the
/// non-intervening party, the marginal is empty at `empty_setting`, so every
/// cell of the group at the other settings is zeroed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Removal {
    pub step: usize,
    /// Party whose setting is varied: `Alice` varies `X`, `Bob` varies `Y`.
    pub intervention: Party,
    /// Outcome of the other party held fixed (`b` for `X`, `a` for `Y`).
    pub fixed_outcome: u32,
    /// Setting of the other party held fixed (`y` for `X`, `x` for `Y`).
    pub fixed_setting: u32,
    /// Setting of the intervening party at which the marginal is empty.
    pub empty_setting: u32,
    /// Cells of the group at `empty_setting`; all false at firing time.
    pub support: Vec<Cell>,
    /// Cells that were true and got zeroed.
    pub killed: Vec<Cell>,
}

/// Cells sharing a fixed outcome and setting of the party that is not
/// intervening, across all of the intervening party's outcomes and settings.
pub(crate) fn group_cells(
    config: &ScenarioConfig,
    intervention: Party,
    outcome: u32,
    setting: u32,
) -> Vec<Cell> {
    match intervention {
        Party::Alice => config
            .x_values
            .iter()
            .flat_map(|&x| {
                config.a_values.iter().map(move |&a| Cell {
                    a,
                    b: outcome,
                    x,
                    y: setting,
                })
            })
            .collect(),
        Party::Bob => config
            .y_values
            .iter()
            .flat_map(|&y| {
                config.b_values.iter().map(move |&b| Cell {
                    a: outcome,
                    b,
                    x: setting,
                    y,
                })
            })
            .collect(),
    }
}

/// Reading constraint a cell breaks for the given friend outcomes, if any.
pub(crate) fn reading_violation(
    config: &ScenarioConfig,
    friends: FriendOutcomes,
    cell: Cell,
) -> Option<Party> {
    if let (Some(read), Some(c)) = (config.alice_reading(), friends.c) {
        if cell.x == read && cell.a != c {
            return Some(Party::Alice);
        }
    }
    if let (Some(read), Some(d)) = (config.bob_reading(), friends.d) {
        if cell.y == read && cell.b != d {
            return Some(Party::Bob);
        }
    }
    None
}

/// The maximal sub-table of a behavior for one `(c, d)` slice, with the
/// reason every false cell is false.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubTable {
    config: ScenarioConfig,
    friends: FriendOutcomes,
    table: Vec<bool>,
    fates: Vec<Option<CellFate>>,
    removals: Vec<Removal>,
}

impl SubTable {
    pub fn friends(&self) -> FriendOutcomes {
        self.friends
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn contains(&self, cell: Cell) -> bool {
        self.config.cell_index(cell).is_some_and(|i| self.table[i])
    }

    pub fn cells(&self) -> Vec<Cell> {
        self.config.cells().filter(|&c| self.contains(c)).collect()
    }

    /// `None` for cells present in the table.
    pub fn fate(&self, cell: Cell) -> Option<CellFate> {
        self.config.cell_index(cell).and_then(|i| self.fates[i])
    }

    /// Deflation steps in execution order.
    pub fn removals(&self) -> &[Removal] {
        &self.removals
    }

    /// The behavior masked by the reading constraints, before deflation.
    pub fn initial_cells(&self) -> Vec<Cell> {
        self.config
            .cells()
            .filter(|&c| {
                self.contains(c) || matches!(self.fate(c), Some(CellFate::Eliminated { .. }))
            })
            .collect()
    }
}

/// Greatest sub-table of `beh` satisfying the reading constraints for
/// `friends` and both marginal equalities, found by deflation.
///
/// Starting from the reading-masked behavior, any group whose marginal is
/// empty at some setting of the intervening party must be empty at every
/// setting in any valid sub-table, so the whole group is zeroed. Groups
/// are scanned with `X` groups in `(b, y)` order, then `Y` groups in
/// `(a, x)` order, until nothing changes. Valid sub-tables are closed under
/// union, so the fixpoint is the union of all of them whatever the order;
/// the order only fixes the recorded steps.
pub fn maximal_subtable(beh: &Behavior, friends: FriendOutcomes) -> SubTable {
    let config = beh.config().clone();
    let mut table = Vec::with_capacity(config.cell_count());
    let mut fates = Vec::with_capacity(config.cell_count());
    for cell in config.cells() {
        // a reading violation is reported even when the cell is also impossible
        let fate = match reading_violation(&config, friends, cell) {
            Some(party) => Some(CellFate::Reading { party }),
            None => (!beh.is_possible(cell)).then_some(CellFate::Impossible),
        };
        table.push(fate.is_none());
        fates.push(fate);
    }

    let mut sub = SubTable {
        config,
        friends,
        table,
        fates,
        removals: Vec::new(),
    };

    let x_groups: Vec<(u32, u32)> = sub
        .config
        .b_values
        .iter()
        .flat_map(|&b| sub.config.y_values.iter().map(move |&y| (b, y)))
        .collect();
    let y_groups: Vec<(u32, u32)> = sub
        .config
        .a_values
        .iter()
        .flat_map(|&a| sub.config.x_values.iter().map(move |&x| (a, x)))
        .collect();

    let mut changed = true;
    while changed {
        changed = false;
        for &(b, y) in &x_groups {
            changed |= repair_group(&mut sub, Party::Alice, b, y);
        }
        for &(a, x) in &y_groups {
            changed |= repair_group(&mut sub, Party::Bob, a, x);
        }
    }
    sub
}

/// Zeroes a group whose marginal is empty at some setting but not all.
fn repair_group(sub: &mut SubTable, intervention: Party, outcome: u32, setting: u32) -> bool {
    let config = &sub.config;
    let (settings, outcomes) = match intervention {
        Party::Alice => (&config.x_values, &config.a_values),
        Party::Bob => (&config.y_values, &config.b_values),
    };
    let cell_at = |own_outcome: u32, own_setting: u32| match intervention {
        Party::Alice => Cell::new(own_outcome, outcome, own_setting, setting),
        Party::Bob => Cell::new(outcome, own_outcome, setting, own_setting),
    };

    let marginal: Vec<bool> = settings
        .iter()
        .map(|&s| outcomes.iter().any(|&o| sub.contains(cell_at(o, s))))
        .collect();
    let Some(empty_pos) = marginal.iter().position(|m| !m) else {
        return false;
    };
    if !marginal.iter().any(|&m| m) {
        return false;
    }

    let empty_setting = settings[empty_pos];
    let support: Vec<Cell> = outcomes
        .iter()
        .map(|&o| cell_at(o, empty_setting))
        .collect();
    let step = sub.removals.len();
    let mut killed = Vec::new();
    for (&s, &m) in settings.iter().zip(&marginal) {
        if !m {
            continue;
        }
        for &o in outcomes {
            let cell = cell_at(o, s);
            let i = config.cell_index(cell).expect("cell in domain");
            if sub.table[i] {
                sub.table[i] = false;
                sub.fates[i] = Some(CellFate::Eliminated { step });
                killed.push(cell);
            }
        }
    }
    sub.removals.push(Removal {
        step,
        intervention,
        fixed_outcome: outcome,
        fixed_setting: setting,
        empty_setting,
        support,
        killed,
    });
    true
}
