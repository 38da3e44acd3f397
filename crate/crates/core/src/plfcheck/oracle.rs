//! Exhaustive feasibility check, kept free of any code shared with the
//! deflation in `slice`.
//!
//! Per slice, every subset of the behavior's possible cells is tried as a
//! bitmask; a subset is valid when it respects the reading protocol and
//! both marginal equalities. The behavior is feasible iff the union of all
//! valid subsets over all slices covers every possible cell.

use std::collections::BTreeSet;

use super::{FriendOutcomes, PlfError};
use crate::scenario::{Behavior, Cell, ScenarioConfig};

/// Largest number of behavior cells per slice the oracle accepts.
pub const MAX_SLICE_CELLS: usize = 24;

struct Layout {
    cells: Vec<Cell>,
    /// For each marginal group, the bitmask of its cells at each setting of
    /// the intervening party.
    groups: Vec<Vec<u32>>,
}

impl Layout {
    fn new(config: &ScenarioConfig) -> Result<Self, PlfError> {
        let cells: Vec<Cell> = config.cells().collect();
        if cells.len() > MAX_SLICE_CELLS {
            return Err(PlfError::DomainTooLarge {
                cells: cells.len(),
                limit: MAX_SLICE_CELLS,
            });
        }
        let bit = |pred: &dyn Fn(&Cell) -> bool| -> u32 {
            cells
                .iter()
                .enumerate()
                .filter(|(_, c)| pred(c))
                .fold(0u32, |m, (i, _)| m | (1 << i))
        };
        let mut groups = Vec::new();
        // Bob's (b, y) marginal across Alice's settings.
        for &b in &config.b_values {
            for &y in &config.y_values {
                groups.push(
                    config
                        .x_values
                        .iter()
                        .map(|&x| bit(&|c: &Cell| c.b == b && c.y == y && c.x == x))
                        .collect(),
                );
            }
        }
        // Alice's (a, x) marginal across Bob's settings.
        for &a in &config.a_values {
            for &x in &config.x_values {
                groups.push(
                    config
                        .y_values
                        .iter()
                        .map(|&y| bit(&|c: &Cell| c.a == a && c.x == x && c.y == y))
                        .collect(),
                );
            }
        }
        Ok(Layout { cells, groups })
    }

    fn mask_of(&self, pred: impl Fn(&Cell) -> bool) -> u32 {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| pred(c))
            .fold(0u32, |m, (i, _)| m | (1 << i))
    }

    fn marginals_agree(&self, table: u32) -> bool {
        self.groups.iter().all(|per_setting| {
            let first = table & per_setting[0] != 0;
            per_setting.iter().all(|&m| (table & m != 0) == first)
        })
    }

    fn to_cells(&self, table: u32) -> BTreeSet<Cell> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(i, _)| table & (1 << i) != 0)
            .map(|(_, c)| *c)
            .collect()
    }
}

fn reads_consistently(config: &ScenarioConfig, friends: FriendOutcomes, c: &Cell) -> bool {
    let alice_ok = match (config.friend_a, config.read_x, friends.c) {
        (true, Some(rx), Some(cv)) => c.x != rx || c.a == cv,
        _ => true,
    };
    let bob_ok = match (config.friend_b, config.read_y, friends.d) {
        (true, Some(ry), Some(dv)) => c.y != ry || c.b == dv,
        _ => true,
    };
    alice_ok && bob_ok
}

/// Cells of the behavior allowed in this slice by the reading protocol.
fn candidates(layout: &Layout, beh: &Behavior, friends: FriendOutcomes) -> u32 {
    let config = beh.config();
    layout.mask_of(|c| beh.is_possible(*c) && reads_consistently(config, friends, c))
}

/// Iterates over every submask of `mask`, including `0` and `mask`.
fn submasks(mask: u32) -> impl Iterator<Item = u32> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let current = next?;
        next = if current == 0 {
            None
        } else {
            Some((current - 1) & mask)
        };
        Some(current)
    })
}

/// Every valid sub-table of `beh` for one slice.
pub fn valid_subtables(
    beh: &Behavior,
    friends: FriendOutcomes,
) -> Result<Vec<BTreeSet<Cell>>, PlfError> {
    let layout = Layout::new(beh.config())?;
    let mask = candidates(&layout, beh, friends);
    Ok(submasks(mask)
        .filter(|&t| layout.marginals_agree(t))
        .map(|t| layout.to_cells(t))
        .collect())
}

/// Union of all valid sub-tables of one slice.
pub fn brute_force_slice_union(
    beh: &Behavior,
    friends: FriendOutcomes,
) -> Result<BTreeSet<Cell>, PlfError> {
    let layout = Layout::new(beh.config())?;
    let mask = candidates(&layout, beh, friends);
    let union = submasks(mask)
        .filter(|&t| layout.marginals_agree(t))
        .fold(0u32, |acc, t| acc | t);
    Ok(layout.to_cells(union))
}

/// Whether `table` is a valid sub-table of `beh` for the slice: contained
/// in the behavior, consistent with the reading protocol, marginals equal.
pub fn is_valid_subtable(beh: &Behavior, friends: FriendOutcomes, table: &BTreeSet<Cell>) -> bool {
    let config = beh.config();
    let contained = table
        .iter()
        .all(|c| beh.is_possible(*c) && reads_consistently(config, friends, c));
    if !contained {
        return false;
    }
    let any = |pred: &dyn Fn(&Cell) -> bool| table.iter().any(pred);
    let bob_side = config.b_values.iter().all(|&b| {
        config.y_values.iter().all(|&y| {
            let first = any(&|c| c.b == b && c.y == y && c.x == config.x_values[0]);
            config
                .x_values
                .iter()
                .all(|&x| any(&|c| c.b == b && c.y == y && c.x == x) == first)
        })
    });
    let alice_side = config.a_values.iter().all(|&a| {
        config.x_values.iter().all(|&x| {
            let first = any(&|c| c.a == a && c.x == x && c.y == config.y_values[0]);
            config
                .y_values
                .iter()
                .all(|&y| any(&|c| c.a == a && c.x == x && c.y == y) == first)
        })
    });
    bob_side && alice_side
}

/// Feasibility by exhaustive enumeration of per-slice sub-tables.
pub fn brute_force_feasible(beh: &Behavior) -> Result<bool, PlfError> {
    let layout = Layout::new(beh.config())?;
    let possible = layout.mask_of(|c| beh.is_possible(*c));
    let mut covered = 0u32;
    for friends in FriendOutcomes::all(beh.config()) {
        let mask = candidates(&layout, beh, friends);
        for t in submasks(mask) {
            if layout.marginals_agree(t) {
                covered |= t;
            }
        }
    }
    Ok(covered == possible)
}
