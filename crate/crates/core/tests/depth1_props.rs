mod common;

use std::collections::BTreeSet;

use plf::formula::{Atom, Formula};
use plf::kripke::{
    solve_depth1, Clause, Depth1Problem, Exclusion, KripkeModel, SatResult, ValuationPoint,
};
use rand::Rng;

/// `w0` seeing one world per point, built here rather than through the
/// library's own conversion.
fn kripke_of(points: &[ValuationPoint]) -> KripkeModel {
    let names: Vec<String> = (0..points.len()).map(|i| format!("p{i}")).collect();
    let mut valuation: Vec<(Atom, Vec<String>)> = Vec::new();
    for (p, name) in points.iter().zip(&names) {
        for (var, val) in p.assignment() {
            valuation.push((
                Atom::new(var.as_str(), val.as_str()).unwrap(),
                vec![name.clone()],
            ));
        }
    }
    KripkeModel::new(
        std::iter::once("w0".to_string()).chain(names.iter().cloned()),
        names.iter().map(|n| ("w0".to_string(), n.clone())),
        valuation,
    )
    .unwrap()
}

fn satisfied_by(problem: &Depth1Problem, points: &[ValuationPoint]) -> bool {
    let m = kripke_of(points);
    problem
        .constraints()
        .iter()
        .all(|c| m.evaluate("w0", &c.to_formula()).unwrap())
}

fn points_of(grid: &[ValuationPoint], mask: u32) -> Vec<ValuationPoint> {
    grid.iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, p)| p.clone())
        .collect()
}

/// Naive deflation where every truth value comes from the evaluator.
fn naive_deflation(problem: &Depth1Problem) -> bool {
    let grid = problem.grid();
    let mut live: Vec<ValuationPoint> = grid
        .into_iter()
        .filter(|p| {
            let m = kripke_of(std::slice::from_ref(p));
            problem.constraints().iter().all(|c| match c {
                Clause::MustAll(f) => m.evaluate("p0", f).unwrap(),
                Clause::Forbidden(f) => !m.evaluate("p0", f).unwrap(),
                _ => true,
            })
        })
        .collect();
    loop {
        let m = kripke_of(&live);
        let broken = problem.constraints().iter().find_map(|c| match c {
            Clause::Conditional(f, _) if !m.evaluate("w0", &c.to_formula()).unwrap() => {
                Some(f.clone())
            }
            _ => None,
        });
        let Some(antecedent) = broken else { break };
        let keep: Vec<bool> = (0..live.len())
            .map(|i| !m.evaluate(&format!("p{i}"), &antecedent).unwrap())
            .collect();
        live = live
            .into_iter()
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|(p, _)| p)
            .collect();
    }
    satisfied_by(problem, &live)
}

#[test]
fn exhaustive_subsets_agree_with_solver() {
    let mut rng = common::rng(11);
    let mut sat = 0;
    for _ in 0..300 {
        let nvars = rng.gen_range(1..=3);
        let problem = common::random_problem(&mut rng, nvars);
        let grid = problem.grid();
        let solutions: Vec<u32> = (0u32..1 << grid.len())
            .filter(|&m| satisfied_by(&problem, &points_of(&grid, m)))
            .collect();

        // union-closure
        for &s in &solutions {
            for &t in &solutions {
                assert!(solutions.contains(&(s | t)), "union of two solutions fails");
            }
        }

        let result = solve_depth1(&problem);
        assert_eq!(result.is_sat(), !solutions.is_empty());
        if let SatResult::Model(m) = &result {
            sat += 1;
            let greatest = solutions.iter().fold(0, |a, &s| a | s);
            let got: BTreeSet<_> = m.points().iter().cloned().collect();
            let want: BTreeSet<_> = points_of(&grid, greatest).into_iter().collect();
            assert_eq!(got, want, "model is not the greatest solution");
        }
    }
    assert!(sat > 50 && sat < 250, "unbalanced sample: {sat} sat of 300");
}

#[test]
fn naive_deflation_agrees_with_solver() {
    let mut rng = common::rng(12);
    for _ in 0..200 {
        let nvars = rng.gen_range(4..=6);
        let problem = common::random_problem(&mut rng, nvars);
        let result = solve_depth1(&problem);
        assert_eq!(result.is_sat(), naive_deflation(&problem));
    }
}

#[test]
fn models_pass_recheck_and_cores_are_honest() {
    let mut rng = common::rng(13);
    for _ in 0..300 {
        let nvars = rng.gen_range(1..=6);
        let problem = common::random_problem(&mut rng, nvars);
        match solve_depth1(&problem) {
            SatResult::Model(m) => {
                assert!(m.recheck(&problem).is_empty());
                assert!(satisfied_by(&problem, m.points()));
            }
            SatResult::Unsat(core) => {
                let Clause::Required(f) = &problem.constraints()[core.required] else {
                    panic!("core does not name a required clause");
                };
                assert_eq!(&core.formula, f);
                let expected: Vec<ValuationPoint> = problem
                    .grid()
                    .into_iter()
                    .filter(|p| p.satisfies(f))
                    .collect();
                let got: Vec<ValuationPoint> =
                    core.candidates.iter().map(|e| e.point.clone()).collect();
                assert_eq!(got, expected);
                for e in &core.candidates {
                    match e.exclusion {
                        Exclusion::MustAll(i) => {
                            let Clause::MustAll(g) = &problem.constraints()[i] else {
                                panic!()
                            };
                            assert!(!e.point.satisfies(g));
                        }
                        Exclusion::Forbidden(i) => {
                            let Clause::Forbidden(g) = &problem.constraints()[i] else {
                                panic!()
                            };
                            assert!(e.point.satisfies(g));
                        }
                        Exclusion::Deflated(s) => {
                            let step = core
                                .chain
                                .iter()
                                .find(|d| d.sequence == s)
                                .expect("step in chain");
                            assert!(step.removed.contains(&e.point));
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn empty_world_set_satisfies_only_negative_clauses() {
    let domains = common::boolean_domains(2);
    let p = Formula::eq("V0", "1");
    let problem = Depth1Problem::new(
        domains,
        vec![
            Clause::Forbidden(p.clone()),
            Clause::Conditional(p.clone(), Formula::eq("V1", "1")),
        ],
    )
    .unwrap();
    assert!(satisfied_by(&problem, &[]));
    assert!(solve_depth1(&problem).is_sat());
}
