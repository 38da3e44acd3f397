//! Case-split explanations of infeasibility, one branch per `(c, d)`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use super::slice::{group_cells, reading_violation, CellFate, SubTable};
use super::FriendOutcomes;
use crate::scenario::{Behavior, Cell, HardyEvent, Party};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportCell {
    pub cell: Cell,
    pub fate: CellFate,
}

/// One marginal repair that the target's elimination depends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    /// Step number within the slice's deflation.
    pub step: usize,
    pub intervention: Party,
    pub fixed_outcome: u32,
    pub fixed_setting: u32,
    pub empty_setting: u32,
    /// Every cell of the group at the empty setting, with the reason it is
    /// false.
    #[serde(serialize_with = "serialize_support")]
    pub support: Vec<(Cell, CellFate)>,
    pub killed: Vec<Cell>,
}

fn serialize_support<S: serde::Serializer>(
    support: &[(Cell, CellFate)],
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(support.len()))?;
    for &(cell, fate) in support {
        seq.serialize_element(&SupportCell { cell, fate })?;
    }
    seq.end()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Branch {
    pub friends: FriendOutcomes,
    /// How the target ends up false in this slice.
    pub target_fate: CellFate,
    /// Steps the target's elimination depends on, in execution order.
    pub steps: Vec<TraceStep>,
}

/// Why a possible cell cannot be hosted by any `(c, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProofTrace {
    pub target: Cell,
    pub branches: Vec<Branch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("branches do not cover every (c, d): missing {0}")]
    MissingBranch(FriendOutcomes),
    #[error(
        "branch {friends}, step {step}: support does not match the group at the empty setting"
    )]
    SupportMismatch {
        friends: FriendOutcomes,
        step: usize,
    },
    #[error("branch {friends}, step {step}: support cell {cell} is still possible")]
    LiveSupport {
        friends: FriendOutcomes,
        step: usize,
        cell: Cell,
    },
    #[error("branch {friends}, step {step}: recorded reason for {cell} does not hold")]
    WrongFate {
        friends: FriendOutcomes,
        step: usize,
        cell: Cell,
    },
    #[error("branch {friends}, step {step}: killed cell {cell} was not live")]
    DeadKill {
        friends: FriendOutcomes,
        step: usize,
        cell: Cell,
    },
    #[error("branch {0}: target survives the replay")]
    TargetSurvives(FriendOutcomes),
}

impl ProofTrace {
    pub(super) fn build(target: Cell, slices: &[SubTable]) -> ProofTrace {
        let branches = slices
            .iter()
            .map(|sub| {
                let target_fate = sub
                    .fate(target)
                    .expect("target is uncovered in every slice");
                let mut needed = BTreeSet::new();
                let mut queue = Vec::new();
                if let CellFate::Eliminated { step } = target_fate {
                    queue.push(step);
                }
                while let Some(s) = queue.pop() {
                    if !needed.insert(s) {
                        continue;
                    }
                    for &cell in &sub.removals()[s].support {
                        if let Some(CellFate::Eliminated { step }) = sub.fate(cell) {
                            queue.push(step);
                        }
                    }
                }
                let steps = needed
                    .into_iter()
                    .map(|s| {
                        let r = &sub.removals()[s];
                        TraceStep {
                            step: r.step,
                            intervention: r.intervention,
                            fixed_outcome: r.fixed_outcome,
                            fixed_setting: r.fixed_setting,
                            empty_setting: r.empty_setting,
                            support: r
                                .support
                                .iter()
                                .map(|&c| (c, sub.fate(c).expect("support is false")))
                                .collect(),
                            killed: r.killed.clone(),
                        }
                    })
                    .collect();
                Branch {
                    friends: sub.friends(),
                    target_fate,
                    steps,
                }
            })
            .collect();
        ProofTrace { target, branches }
    }

    /// Re-derives every branch from the behavior alone: start from the
    /// reading-masked table, check each step's trigger and recorded reasons
    /// against the current table, apply it, and confirm the target ends up
    /// false.
    pub fn replay(&self, beh: &Behavior) -> Result<(), ReplayError> {
        let config = beh.config();
        for f in FriendOutcomes::all(config) {
            if !self.branches.iter().any(|b| b.friends == f) {
                return Err(ReplayError::MissingBranch(f));
            }
        }

        for branch in &self.branches {
            let friends = branch.friends;
            let mut live: BTreeSet<Cell> = config
                .cells()
                .filter(|&c| beh.is_possible(c) && reading_violation(config, friends, c).is_none())
                .collect();
            let mut applied = BTreeSet::new();

            for step in &branch.steps {
                let group = group_cells(
                    config,
                    step.intervention,
                    step.fixed_outcome,
                    step.fixed_setting,
                );
                let at_empty: Vec<Cell> = group
                    .iter()
                    .copied()
                    .filter(|c| setting_of(step.intervention, *c) == step.empty_setting)
                    .collect();
                let support: Vec<Cell> = step.support.iter().map(|(c, _)| *c).collect();
                if support != at_empty {
                    return Err(ReplayError::SupportMismatch {
                        friends,
                        step: step.step,
                    });
                }
                for &(cell, fate) in &step.support {
                    if live.contains(&cell) {
                        return Err(ReplayError::LiveSupport {
                            friends,
                            step: step.step,
                            cell,
                        });
                    }
                    let fate_holds = match fate {
                        CellFate::Impossible => !beh.is_possible(cell),
                        CellFate::Reading { party } => {
                            reading_violation(config, friends, cell) == Some(party)
                        }
                        CellFate::Eliminated { step } => applied.contains(&step),
                    };
                    if !fate_holds {
                        return Err(ReplayError::WrongFate {
                            friends,
                            step: step.step,
                            cell,
                        });
                    }
                }
                for &cell in &step.killed {
                    if !live.contains(&cell) {
                        return Err(ReplayError::DeadKill {
                            friends,
                            step: step.step,
                            cell,
                        });
                    }
                }
                for cell in group {
                    live.remove(&cell);
                }
                applied.insert(step.step);
            }

            if live.contains(&self.target) {
                return Err(ReplayError::TargetSurvives(friends));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("trace serializes")
    }

    /// Human-readable case split.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{} is possible, but no values of the friends' records can accompany it.",
            self.target
        );
        for branch in &self.branches {
            let _ = writeln!(out, "Case {}:", branch.friends);
            if let CellFate::Reading { party } = branch.target_fate {
                let _ = writeln!(
                    out,
                    "  {} contradicts {}'s reading of the friend's record.",
                    self.target, party
                );
                continue;
            }
            for step in &branch.steps {
                write_step(&mut out, branch.friends, step);
            }
            let _ = writeln!(
                out,
                "  Hence {} is excluded when {}.",
                self.target, branch.friends
            );
        }
        let _ = writeln!(
            out,
            "All values of the friends' records are exhausted: contradiction."
        );
        out
    }
}

fn setting_of(intervention: Party, cell: Cell) -> u32 {
    match intervention {
        Party::Alice => cell.x,
        Party::Bob => cell.y,
    }
}

fn write_step(out: &mut String, friends: FriendOutcomes, step: &TraceStep) {
    let (setting_var, fixed) = match step.intervention {
        Party::Alice => (
            "X",
            format!("B={}, Y={}", step.fixed_outcome, step.fixed_setting),
        ),
        Party::Bob => (
            "Y",
            format!("A={}, X={}", step.fixed_outcome, step.fixed_setting),
        ),
    };
    let _ = writeln!(
        out,
        "  [{}] {setting_var} cannot change whether ({fixed}) is possible, yet at {setting_var}={} no outcome remains:",
        step.step, step.empty_setting
    );
    for &(cell, fate) in &step.support {
        let reason = match fate {
            CellFate::Impossible => match HardyEvent::of_cell(cell) {
                Some(e) => format!("is impossible ({e})"),
                None => "is impossible".to_string(),
            },
            CellFate::Reading {
                party: Party::Alice,
            } => {
                format!("breaks Alice's reading A=C with {friends}")
            }
            CellFate::Reading { party: Party::Bob } => {
                format!("breaks Bob's reading B=D with {friends}")
            }
            CellFate::Eliminated { step } => format!("was excluded at [{step}]"),
        };
        let _ = writeln!(out, "      {cell} {reason}");
    }
    let killed: Vec<String> = step.killed.iter().map(Cell::to_string).collect();
    let _ = writeln!(out, "    so {} are excluded.", killed.join(", "));
}
