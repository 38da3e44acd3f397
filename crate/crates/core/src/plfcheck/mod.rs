//! Possibilistic Local Friendliness feasibility of a behavior.
//!
//! A behavior is feasible iff there is an extended table over
//! `(a, b, c, d, x, y)` that respects the reading protocol, keeps each
//! party's marginal possibilities independent of the other party's setting
//! for every fixed `(c, d)`, and marginalizes over `(c, d)` back to the
//! behavior. Both kinds of constraint mention a single `(c, d)`, so the
//! table splits into independent slices joined only by the coverage
//! requirement. Per slice the valid sub-tables are closed under union (see
//! `docs/slice-decomposition.md`), which makes the union of the per-slice
//! maxima the best possible cover: the behavior is feasible iff that union
//! covers every possible cell.

mod oracle;
mod slice;
mod trace;

use serde::Serialize;
use thiserror::Error;

use crate::scenario::{Behavior, Cell, ScenarioConfig};

pub use oracle::{
    brute_force_feasible, brute_force_slice_union, is_valid_subtable, valid_subtables,
    MAX_SLICE_CELLS,
};
pub use slice::{maximal_subtable, CellFate, Removal, SubTable};
pub use trace::{Branch, ProofTrace, ReplayError, TraceStep};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlfError {
    #[error("extended table and behavior use different scenario configurations")]
    ConfigMismatch,
    #[error("{cells} cells per slice exceeds the brute-force bound of {limit}")]
    DomainTooLarge { cells: usize, limit: usize },
}

/// Values of the friends' records. A coordinate is `None` when that
/// superobserver has no friend.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FriendOutcomes {
    pub c: Option<u32>,
    pub d: Option<u32>,
}

impl FriendOutcomes {
    /// Every slice of the extended table, `c` major.
    pub fn all(config: &ScenarioConfig) -> Vec<FriendOutcomes> {
        let cs: Vec<Option<u32>> = match config.c_values() {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        let ds: Vec<Option<u32>> = match config.d_values() {
            Some(v) => v.iter().copied().map(Some).collect(),
            None => vec![None],
        };
        cs.iter()
            .flat_map(|&c| ds.iter().map(move |&d| FriendOutcomes { c, d }))
            .collect()
    }
}

impl std::fmt::Display for FriendOutcomes {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if let Some(c) = self.c {
            parts.push(format!("C={c}"));
        }
        if let Some(d) = self.d {
            parts.push(format!("D={d}"));
        }
        if parts.is_empty() {
            f.write_str("(no friends)")
        } else {
            f.write_str(&parts.join(", "))
        }
    }
}

/// A possibility assignment over superobserver and friend outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedTable {
    config: ScenarioConfig,
    slices: Vec<FriendOutcomes>,
    /// `entries[s][i]`: slice `s`, behavior cell index `i`.
    entries: Vec<Vec<bool>>,
}

impl ExtendedTable {
    /// The all-impossible table.
    pub fn empty(config: ScenarioConfig) -> Self {
        let slices = FriendOutcomes::all(&config);
        let entries = vec![vec![false; config.cell_count()]; slices.len()];
        ExtendedTable {
            config,
            slices,
            entries,
        }
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn slices(&self) -> &[FriendOutcomes] {
        &self.slices
    }

    fn slot(&self, friends: FriendOutcomes, cell: Cell) -> Option<(usize, usize)> {
        let s = self.slices.iter().position(|&f| f == friends)?;
        let i = self.config.cell_index(cell)?;
        Some((s, i))
    }

    pub fn get(&self, friends: FriendOutcomes, cell: Cell) -> bool {
        self.slot(friends, cell)
            .is_some_and(|(s, i)| self.entries[s][i])
    }

    /// Sets one entry; returns false if the coordinates are out of range.
    pub fn set(&mut self, friends: FriendOutcomes, cell: Cell, value: bool) -> bool {
        match self.slot(friends, cell) {
            Some((s, i)) => {
                self.entries[s][i] = value;
                true
            }
            None => false,
        }
    }

    /// All true entries, slice-major.
    pub fn true_entries(&self) -> Vec<(FriendOutcomes, Cell)> {
        self.slices
            .iter()
            .flat_map(|&f| {
                self.config
                    .cells()
                    .filter(move |&c| self.get(f, c))
                    .map(move |c| (f, c))
            })
            .collect()
    }

    /// JSON listing the true entries as `[a, b, c, d, x, y]`, with `null`
    /// for an absent friend.
    pub fn to_json(&self) -> serde_json::Value {
        let entries: Vec<serde_json::Value> = self
            .true_entries()
            .into_iter()
            .map(|(f, c)| serde_json::json!([c.a, c.b, f.c, f.d, c.x, c.y]))
            .collect();
        serde_json::json!({ "entries": entries })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub feasible: bool,
    pub witness: Option<ExtendedTable>,
    pub trace: Option<ProofTrace>,
}

/// Decides feasibility. Feasible verdicts carry the union of the per-slice
/// maximal sub-tables as witness; infeasible ones carry a proof trace for
/// the first uncovered possible cell in canonical order.
pub fn plf_feasible(beh: &Behavior) -> Verdict {
    let config = beh.config();
    let slices: Vec<SubTable> = FriendOutcomes::all(config)
        .into_iter()
        .map(|f| maximal_subtable(beh, f))
        .collect();

    let uncovered = beh
        .possible_cells()
        .into_iter()
        .find(|&cell| !slices.iter().any(|s| s.contains(cell)));

    match uncovered {
        None => {
            let mut witness = ExtendedTable::empty(config.clone());
            for sub in &slices {
                for cell in sub.cells() {
                    witness.set(sub.friends(), cell, true);
                }
            }
            Verdict {
                feasible: true,
                witness: Some(witness),
                trace: None,
            }
        }
        Some(target) => Verdict {
            feasible: false,
            witness: None,
            trace: Some(ProofTrace::build(target, &slices)),
        },
    }
}

/// Checks every extended-table condition and that the table marginalizes
/// to `beh`:
///
/// * reading: `A = C` at `X = read_x`, `B = D` at `Y = read_y`;
/// * `OR_a` independent of `x` for fixed `(b, c, d, y)`, `OR_b` independent
///   of `y` for fixed `(a, c, d, x)`;
/// * `OR_{a,b}` independent of `(x, y)` for fixed `(c, d)` (implied by the
///   previous two, checked anyway);
/// * every context has some true entry;
/// * `OR_{c,d}` equals the behavior cell for cell.
pub fn validate_extended_table(t: &ExtendedTable, beh: &Behavior) -> Result<bool, PlfError> {
    let config = beh.config();
    if t.config != *config {
        return Err(PlfError::ConfigMismatch);
    }

    for &f in &t.slices {
        for cell in config.cells() {
            if t.get(f, cell) && slice::reading_violation(config, f, cell).is_some() {
                return Ok(false);
            }
        }

        for &b in &config.b_values {
            for &y in &config.y_values {
                let m: Vec<bool> = config
                    .x_values
                    .iter()
                    .map(|&x| {
                        config
                            .a_values
                            .iter()
                            .any(|&a| t.get(f, Cell { a, b, x, y }))
                    })
                    .collect();
                if m.iter().any(|&v| v != m[0]) {
                    return Ok(false);
                }
            }
        }
        for &a in &config.a_values {
            for &x in &config.x_values {
                let m: Vec<bool> = config
                    .y_values
                    .iter()
                    .map(|&y| {
                        config
                            .b_values
                            .iter()
                            .any(|&b| t.get(f, Cell { a, b, x, y }))
                    })
                    .collect();
                if m.iter().any(|&v| v != m[0]) {
                    return Ok(false);
                }
            }
        }

        let joint: Vec<bool> = config
            .contexts()
            .map(|(x, y)| {
                config.a_values.iter().any(|&a| {
                    config
                        .b_values
                        .iter()
                        .any(|&b| t.get(f, Cell { a, b, x, y }))
                })
            })
            .collect();
        if joint.iter().any(|&v| v != joint[0]) {
            return Ok(false);
        }
    }

    for (x, y) in config.contexts() {
        let nonempty = t.slices.iter().any(|&f| {
            config.a_values.iter().any(|&a| {
                config
                    .b_values
                    .iter()
                    .any(|&b| t.get(f, Cell { a, b, x, y }))
            })
        });
        if !nonempty {
            return Ok(false);
        }
    }

    for cell in config.cells() {
        let covered = t.slices.iter().any(|&f| t.get(f, cell));
        if covered != beh.is_possible(cell) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{HardyEvent, ScenarioConfig};

    fn cd(c: u32, d: u32) -> FriendOutcomes {
        FriendOutcomes {
            c: Some(c),
            d: Some(d),
        }
    }

    #[test]
    fn hardy_is_infeasible_with_four_branch_trace() {
        let beh = Behavior::hardy(ScenarioConfig::default()).unwrap();
        let v = plf_feasible(&beh);
        assert!(!v.feasible);
        assert!(v.witness.is_none());
        let trace = v.trace.unwrap();
        assert_eq!(trace.target, HardyEvent::E1.cell());
        assert_eq!(trace.branches.len(), 4);
        trace.replay(&beh).unwrap();
    }

    #[test]
    fn hardy_branches_cite_the_three_impossible_events() {
        let beh = Behavior::hardy(ScenarioConfig::default()).unwrap();
        let trace = plf_feasible(&beh).trace.unwrap();
        let cited = |f: FriendOutcomes| -> Vec<HardyEvent> {
            let branch = trace.branches.iter().find(|b| b.friends == f).unwrap();
            branch
                .steps
                .iter()
                .flat_map(|s| s.support.iter())
                .filter(|(_, fate)| *fate == CellFate::Impossible)
                .filter_map(|(c, _)| HardyEvent::of_cell(*c))
                .collect()
        };
        assert_eq!(cited(cd(0, 0)), vec![HardyEvent::E2]);
        assert_eq!(cited(cd(0, 1)), vec![HardyEvent::E2]);
        assert_eq!(cited(cd(1, 0)), vec![HardyEvent::E3]);
        assert_eq!(cited(cd(1, 1)), vec![HardyEvent::E4]);
    }

    #[test]
    fn all_possible_is_feasible_with_valid_witness() {
        let beh = Behavior::all_possible(ScenarioConfig::default()).unwrap();
        let v = plf_feasible(&beh);
        assert!(v.feasible);
        assert!(v.trace.is_none());
        assert_eq!(
            validate_extended_table(v.witness.as_ref().unwrap(), &beh),
            Ok(true)
        );
    }

    #[test]
    fn predetermined_outcomes_sit_on_c0_d0() {
        let beh = Behavior::from_fn(ScenarioConfig::default(), |c| c.a == 0 && c.b == 0).unwrap();
        let v = plf_feasible(&beh);
        assert!(v.feasible);
        let w = v.witness.unwrap();
        assert!(w.true_entries().iter().all(|(f, _)| *f == cd(0, 0)));
        assert_eq!(validate_extended_table(&w, &beh), Ok(true));
    }

    #[test]
    fn validator_rejects_tampered_witnesses() {
        let beh = Behavior::all_possible(ScenarioConfig::default()).unwrap();
        let w = plf_feasible(&beh).witness.unwrap();

        let mut reading = w.clone();
        // a=1 with c=0 at the reading setting x=1
        assert!(reading.set(cd(0, 0), Cell::new(1, 0, 1, 2), true));
        assert_eq!(validate_extended_table(&reading, &beh), Ok(false));

        // (1,1,1,1) is only hosted by slice (1,1)
        let mut uncovered = w.clone();
        assert!(w.get(cd(1, 1), Cell::new(1, 1, 1, 1)));
        uncovered.set(cd(1, 1), Cell::new(1, 1, 1, 1), false);
        assert_eq!(validate_extended_table(&uncovered, &beh), Ok(false));

        let other = Behavior::all_possible(ScenarioConfig::friendless()).unwrap();
        assert_eq!(
            validate_extended_table(&w, &other),
            Err(PlfError::ConfigMismatch)
        );
    }

    #[test]
    fn validator_rejects_marginal_mismatch() {
        let beh = Behavior::from_fn(ScenarioConfig::default(), |c| c.a == 0 && c.b == 0).unwrap();
        let mut w = plf_feasible(&beh).witness.unwrap();
        // extra entry in slice (0,1) outside the behavior and the marginals
        w.set(cd(0, 1), Cell::new(0, 1, 2, 2), true);
        assert_eq!(validate_extended_table(&w, &beh), Ok(false));
    }

    #[test]
    fn friendless_slices() {
        let config = ScenarioConfig::friendless();
        assert_eq!(
            FriendOutcomes::all(&config),
            vec![FriendOutcomes { c: None, d: None }]
        );
        let beh = Behavior::hardy(config).unwrap();
        assert!(plf_feasible(&beh).feasible);
    }
}
