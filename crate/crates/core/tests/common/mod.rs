#![allow(dead_code)]

use std::collections::BTreeMap;

use plf::formula::Formula;
use plf::kripke::{Clause, Depth1Problem};
use plf::scenario::{Behavior, ScenarioConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each cell possible with probability 1/2, redrawn until every context has
/// a possible cell.
pub fn random_behavior(rng: &mut ChaCha8Rng, config: &ScenarioConfig) -> Behavior {
    loop {
        let bits: Vec<bool> = (0..config.cell_count()).map(|_| rng.gen()).collect();
        if let Ok(b) = Behavior::from_fn(config.clone(), |c| bits[config.cell_index(c).unwrap()]) {
            return b;
        }
    }
}

/// Behaviors with only a few impossible cells, which are the ones likely
/// to be feasible.
pub fn sparse_zero_behavior(
    rng: &mut ChaCha8Rng,
    config: &ScenarioConfig,
    zeros: usize,
) -> Behavior {
    loop {
        let mut bits = vec![true; config.cell_count()];
        for _ in 0..zeros {
            let i = rng.gen_range(0..bits.len());
            bits[i] = false;
        }
        if let Ok(b) = Behavior::from_fn(config.clone(), |c| bits[config.cell_index(c).unwrap()]) {
            return b;
        }
    }
}

/// Every behavior of `config` with no empty context.
pub fn all_behaviors(config: &ScenarioConfig) -> Vec<Behavior> {
    let n = config.cell_count();
    assert!(n <= 20);
    (0u32..1 << n)
        .filter_map(|mask| {
            Behavior::from_fn(config.clone(), |c| {
                mask & (1 << config.cell_index(c).unwrap()) != 0
            })
            .ok()
        })
        .collect()
}

pub fn boolean_domains(nvars: usize) -> BTreeMap<String, Vec<String>> {
    (0..nvars)
        .map(|i| (format!("V{i}"), vec!["0".to_string(), "1".to_string()]))
        .collect()
}

/// Random modality-free formula over the given domains.
pub fn random_prop(
    rng: &mut ChaCha8Rng,
    domains: &BTreeMap<String, Vec<String>>,
    depth: u32,
) -> Formula {
    let vars: Vec<&String> = domains.keys().collect();
    if depth == 0 || rng.gen_bool(0.3) {
        let var = *vars.choose(rng).unwrap();
        let val = domains[var].choose(rng).unwrap();
        return Formula::eq(var, val);
    }
    let sub = |rng: &mut ChaCha8Rng| random_prop(rng, domains, depth - 1);
    match rng.gen_range(0..5) {
        0 => Formula::not(sub(rng)),
        1 => Formula::and(sub(rng), sub(rng)),
        2 => Formula::or(sub(rng), sub(rng)),
        3 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::iff(sub(rng), sub(rng)),
    }
}

/// Random problem in the depth-1 fragment over `nvars` boolean variables.
/// `MustAll` and `Forbidden` clauses are kept rare so that a fair share of
/// instances is satisfiable.
pub fn random_problem(rng: &mut ChaCha8Rng, nvars: usize) -> Depth1Problem {
    let domains = boolean_domains(nvars);
    let n = rng.gen_range(1..=6);
    let clauses = (0..n)
        .map(|_| {
            let roll = rng.gen_range(0..10);
            match roll {
                0 => Clause::MustAll(random_prop(rng, &domains, 2)),
                1 => Clause::Forbidden(random_prop(rng, &domains, 2)),
                2..=4 => Clause::Required(random_prop(rng, &domains, 2)),
                _ => Clause::Conditional(
                    random_prop(rng, &domains, 2),
                    random_prop(rng, &domains, 2),
                ),
            }
        })
        .collect();
    Depth1Problem::new(domains, clauses).unwrap()
}

/// Random formula with modalities and arbitrary atom names.
pub fn random_formula(rng: &mut ChaCha8Rng, depth: u32) -> Formula {
    if depth == 0 || rng.gen_bool(0.25) {
        const VARS: [&str; 5] = ["A", "b", "Xy", "q_1", "Zz9"];
        const VALS: [&str; 5] = ["true", "0", "1", "on", "x_2"];
        return Formula::eq(VARS.choose(rng).unwrap(), VALS.choose(rng).unwrap());
    }
    let sub = |rng: &mut ChaCha8Rng| random_formula(rng, depth - 1);
    match rng.gen_range(0..7) {
        0 => Formula::not(sub(rng)),
        1 => Formula::diamond(sub(rng)),
        2 => Formula::boxed(sub(rng)),
        3 => Formula::and(sub(rng), sub(rng)),
        4 => Formula::or(sub(rng), sub(rng)),
        5 => Formula::implies(sub(rng), sub(rng)),
        _ => Formula::iff(sub(rng), sub(rng)),
    }
}
