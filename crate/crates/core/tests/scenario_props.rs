mod common;

use plf::kripke::{solve_depth1, Clause, ValuationPoint};
use plf::plfcheck::plf_feasible;
use plf::scenario::{check_pns, encode, Behavior, ScenarioConfig};
use rand::Rng;

fn conditional_holds(points: &[ValuationPoint], clause: &Clause) -> bool {
    match clause {
        Clause::Conditional(f, g) => {
            !points.iter().any(|p| p.satisfies(f)) || points.iter().any(|p| p.satisfies(g))
        }
        _ => true,
    }
}

#[test]
fn finest_agency_clauses_imply_coarser_ones() {
    let mut rng = common::rng(21);
    let config = ScenarioConfig::default();
    let mut nonempty = 0;
    for _ in 0..300 {
        let beh = common::random_behavior(&mut rng, &config);
        let problem = encode(&beh);
        let conditionals: Vec<&Clause> = problem
            .constraints()
            .iter()
            .filter(|c| matches!(c, Clause::Conditional(..)))
            .collect();
        let width = |c: &Clause| match c {
            Clause::Conditional(f, _) => f.atoms().len(),
            _ => 0,
        };
        let finest_width = conditionals.iter().map(|c| width(c)).max().unwrap();
        let finest: Vec<&Clause> = conditionals
            .iter()
            .copied()
            .filter(|c| width(c) == finest_width)
            .collect();

        // Deflate a dense random world set with the finest clauses only.
        let density = rng.gen_range(0.6..1.0);
        let mut set: Vec<ValuationPoint> = problem
            .grid()
            .into_iter()
            .filter(|_| rng.gen_bool(density))
            .collect();
        while let Some(Clause::Conditional(f, _)) =
            finest.iter().find(|c| !conditional_holds(&set, c)).copied()
        {
            set.retain(|p| !p.satisfies(f));
        }
        if !set.is_empty() {
            nonempty += 1;
        }
        for c in &conditionals {
            assert!(conditional_holds(&set, c), "coarse clause {c} fails");
        }
    }
    assert!(nonempty > 30, "only {nonempty} nontrivial world sets");
}

#[test]
fn encoding_is_deterministic() {
    let mut rng = common::rng(22);
    let config = ScenarioConfig::default();
    for _ in 0..50 {
        let beh = common::random_behavior(&mut rng, &config);
        let copy = Behavior::from_json(&beh.to_json()).unwrap();
        assert_eq!(encode(&beh), encode(&copy));
    }
}

#[test]
fn friendless_modal_route_is_pns() {
    let mut rng = common::rng(23);
    let config = ScenarioConfig::friendless();
    let mut holds = 0;
    for i in 0..600 {
        let beh = if i % 2 == 0 {
            common::random_behavior(&mut rng, &config)
        } else {
            common::sparse_zero_behavior(&mut rng, &config, 2)
        };
        let pns = check_pns(&beh).holds;
        holds += pns as usize;
        assert_eq!(
            solve_depth1(&encode(&beh)).is_sat(),
            pns,
            "{}",
            beh.to_json()
        );
    }
    assert!(holds > 50);
}

#[test]
fn friendless_modal_route_is_pns_exhaustively_on_small_domains() {
    for (xs, ys) in [
        (vec![1], vec![1]),
        (vec![1], vec![1, 2]),
        (vec![1, 2], vec![1]),
    ] {
        let config = ScenarioConfig {
            x_values: xs,
            y_values: ys,
            ..ScenarioConfig::friendless()
        };
        for beh in common::all_behaviors(&config) {
            assert_eq!(solve_depth1(&encode(&beh)).is_sat(), check_pns(&beh).holds);
            assert_eq!(plf_feasible(&beh).feasible, check_pns(&beh).holds);
        }
    }
}

#[test]
fn one_friend_scenarios_encode_and_agree() {
    let mut rng = common::rng(24);
    for (friend_a, friend_b) in [(true, false), (false, true)] {
        let config = ScenarioConfig {
            friend_a,
            friend_b,
            read_x: friend_a.then_some(1),
            read_y: friend_b.then_some(1),
            ..ScenarioConfig::default()
        };
        for _ in 0..100 {
            let beh = common::random_behavior(&mut rng, &config);
            assert_eq!(
                solve_depth1(&encode(&beh)).is_sat(),
                plf_feasible(&beh).feasible
            );
        }
    }
}
