use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::KripkeError;
use crate::formula::{parse_atom, Atom, Formula};

/// A finite Kripke model `<W, R, V>`.
///
/// No frame conditions are imposed on the relation. Atoms missing from the
/// valuation are false at every world.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    worlds: Vec<String>,
    index: BTreeMap<String, usize>,
    successors: Vec<Vec<usize>>,
    valuation: BTreeMap<Atom, BTreeSet<usize>>,
}

impl KripkeModel {
    pub fn new<W, R, V>(worlds: W, relation: R, valuation: V) -> Result<Self, KripkeError>
    where
        W: IntoIterator,
        W::Item: Into<String>,
        R: IntoIterator<Item = (String, String)>,
        V: IntoIterator<Item = (Atom, Vec<String>)>,
    {
        let worlds: Vec<String> = worlds.into_iter().map(Into::into).collect();
        if worlds.is_empty() {
            return Err(KripkeError::NoWorlds);
        }
        let mut index = BTreeMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(KripkeError::DuplicateWorld(w.clone()));
            }
        }
        let lookup = |w: &str| {
            index
                .get(w)
                .copied()
                .ok_or_else(|| KripkeError::UnknownWorld(w.to_string()))
        };

        let mut successors = vec![Vec::new(); worlds.len()];
        for (from, to) in relation {
            let (from, to) = (lookup(&from)?, lookup(&to)?);
            if !successors[from].contains(&to) {
                successors[from].push(to);
            }
        }
        for succ in &mut successors {
            succ.sort_unstable();
        }

        let mut val: BTreeMap<Atom, BTreeSet<usize>> = BTreeMap::new();
        for (atom, ws) in valuation {
            let entry = val.entry(atom).or_default();
            for w in ws {
                entry.insert(lookup(&w)?);
            }
        }

        Ok(KripkeModel {
            worlds,
            index,
            successors,
            valuation: val,
        })
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn contains_world(&self, w: &str) -> bool {
        self.index.contains_key(w)
    }

    /// Worlds accessible from `w`, in declaration order.
    pub fn accessible(&self, w: &str) -> Result<Vec<&str>, KripkeError> {
        let i = self.world_index(w)?;
        Ok(self.successors[i]
            .iter()
            .map(|&j| self.worlds[j].as_str())
            .collect())
    }

    fn world_index(&self, w: &str) -> Result<usize, KripkeError> {
        self.index
            .get(w)
            .copied()
            .ok_or_else(|| KripkeError::UnknownWorld(w.to_string()))
    }

    /// `M, w |= f`.
    pub fn evaluate(&self, w: &str, f: &Formula) -> Result<bool, KripkeError> {
        let i = self.world_index(w)?;
        Ok(self.eval_at(i, f))
    }

    /// True iff `f` holds at every world of the model.
    pub fn valid(&self, f: &Formula) -> bool {
        (0..self.worlds.len()).all(|i| self.eval_at(i, f))
    }

    fn eval_at(&self, w: usize, f: &Formula) -> bool {
        match f {
            Formula::Atom(a) => self.valuation.get(a).is_some_and(|ws| ws.contains(&w)),
            Formula::Not(g) => !self.eval_at(w, g),
            Formula::And(l, r) => self.eval_at(w, l) && self.eval_at(w, r),
            Formula::Or(l, r) => self.eval_at(w, l) || self.eval_at(w, r),
            Formula::Implies(l, r) => !self.eval_at(w, l) || self.eval_at(w, r),
            Formula::Iff(l, r) => self.eval_at(w, l) == self.eval_at(w, r),
            Formula::Box(g) => self.successors[w].iter().all(|&v| self.eval_at(v, g)),
            Formula::Diamond(g) => self.successors[w].iter().any(|&v| self.eval_at(v, g)),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, KripkeError> {
        let file: ModelFile = serde_json::from_str(text)?;
        let mut valuation = Vec::with_capacity(file.valuation.len());
        for (key, ws) in file.valuation {
            let atom =
                parse_atom(&key).map_err(|source| KripkeError::ValuationKey { key, source })?;
            valuation.push((atom, ws));
        }
        let relation = file.relation.into_iter().map(|[a, b]| (a, b));
        KripkeModel::new(file.worlds, relation, valuation)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            worlds: self.worlds.clone(),
            relation: self
                .successors
                .iter()
                .enumerate()
                .flat_map(|(i, succ)| {
                    succ.iter()
                        .map(move |&j| [self.worlds[i].clone(), self.worlds[j].clone()])
                })
                .collect(),
            valuation: self
                .valuation
                .iter()
                .map(|(atom, ws)| {
                    let mut names: Vec<String> =
                        ws.iter().map(|&i| self.worlds[i].clone()).collect();
                    names.sort();
                    (atom.to_string(), names)
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    worlds: Vec<String>,
    #[serde(default)]
    relation: Vec<[String; 2]>,
    #[serde(default)]
    valuation: BTreeMap<String, Vec<String>>,
}
