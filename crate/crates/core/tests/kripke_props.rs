use plf::formula::{parse, Atom, Formula};
use plf::kripke::{evaluate, valid, KripkeModel};
use proptest::prelude::*;

const WORLDS: [&str; 5] = ["w0", "w1", "w2", "w3", "w4"];

#[derive(Debug, Clone)]
struct ModelSpec {
    worlds: usize,
    edges: Vec<(usize, usize)>,
    p_true: Vec<usize>,
    q_true: Vec<usize>,
}

impl ModelSpec {
    fn build(&self) -> KripkeModel {
        let name = |i: usize| WORLDS[i].to_string();
        KripkeModel::new(
            (0..self.worlds).map(name),
            self.edges.iter().map(|&(a, b)| (name(a), name(b))),
            [
                (
                    Atom::bare("P").unwrap(),
                    self.p_true.iter().map(|&i| name(i)).collect(),
                ),
                (
                    Atom::bare("Q").unwrap(),
                    self.q_true.iter().map(|&i| name(i)).collect(),
                ),
            ],
        )
        .unwrap()
    }
}

fn model() -> impl Strategy<Value = ModelSpec> {
    (1usize..=5).prop_flat_map(|n| {
        (
            Just(n),
            proptest::collection::vec((0..n, 0..n), 0..=n * n),
            proptest::collection::vec(0..n, 0..=n),
            proptest::collection::vec(0..n, 0..=n),
        )
            .prop_map(|(worlds, edges, p_true, q_true)| ModelSpec {
                worlds,
                edges,
                p_true,
                q_true,
            })
    })
}

fn formula() -> impl Strategy<Value = Formula> {
    prop_oneof![
        Just(Formula::eq("P", "true")),
        Just(Formula::eq("Q", "true"))
    ]
    .prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::diamond),
            inner.clone().prop_map(Formula::boxed),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::implies(l, r)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn box_is_dual_of_diamond(shape in model(), f in formula()) {
        let m = shape.build();
        let boxed = Formula::boxed(f.clone());
        let dual = Formula::not(Formula::diamond(Formula::not(f.clone())));
        let diamond = Formula::diamond(f.clone());
        let dual_d = Formula::not(Formula::boxed(Formula::not(f)));
        for w in m.worlds() {
            prop_assert_eq!(evaluate(&m, w, &boxed), evaluate(&m, w, &dual));
            prop_assert_eq!(evaluate(&m, w, &diamond), evaluate(&m, w, &dual_d));
        }
    }

    #[test]
    fn connectives_are_classical(shape in model(), f in formula(), g in formula()) {
        let m = shape.build();
        for w in m.worlds() {
            let ev = |h: &Formula| evaluate(&m, w, h).unwrap();
            let (a, b) = (ev(&f), ev(&g));
            prop_assert_eq!(ev(&Formula::not(f.clone())), !a);
            prop_assert_eq!(ev(&Formula::and(f.clone(), g.clone())), a && b);
            prop_assert_eq!(ev(&Formula::or(f.clone(), g.clone())), a || b);
            prop_assert_eq!(ev(&Formula::implies(f.clone(), g.clone())), !a || b);
            prop_assert_eq!(ev(&Formula::iff(f.clone(), g.clone())), a == b);
        }
    }

    #[test]
    fn modalities_quantify_over_successors(shape in model(), f in formula()) {
        let m = shape.build();
        for w in m.worlds() {
            let succ = m.accessible(w).unwrap();
            let holds: Vec<bool> = succ.iter().map(|v| evaluate(&m, v, &f).unwrap()).collect();
            prop_assert_eq!(evaluate(&m, w, &Formula::diamond(f.clone())).unwrap(), holds.iter().any(|&h| h));
            prop_assert_eq!(evaluate(&m, w, &Formula::boxed(f.clone())).unwrap(), holds.iter().all(|&h| h));
        }
    }

    #[test]
    fn validity_is_truth_everywhere(shape in model(), f in formula()) {
        let m = shape.build();
        let everywhere = m.worlds().iter().all(|w| evaluate(&m, w, &f).unwrap());
        prop_assert_eq!(valid(&m, &f), everywhere);
    }

    #[test]
    fn json_roundtrip(shape in model()) {
        let m = shape.build();
        prop_assert_eq!(KripkeModel::from_json(&m.to_json()).unwrap(), m);
    }
}

#[test]
fn truth_needs_reflexivity() {
    let t = parse("[]Q -> Q").unwrap();
    let irreflexive = KripkeModel::new(["w"], Vec::new(), Vec::new()).unwrap();
    assert!(!evaluate(&irreflexive, "w", &t).unwrap());
    let reflexive =
        KripkeModel::new(["w"], [("w".to_string(), "w".to_string())], Vec::new()).unwrap();
    assert!(evaluate(&reflexive, "w", &t).unwrap());
}

#[test]
fn seriality_needs_a_successor() {
    let d = parse("[]Q -> <>Q").unwrap();
    let dead_end = KripkeModel::new(
        ["w"],
        Vec::new(),
        [(Atom::bare("Q").unwrap(), vec!["w".to_string()])],
    )
    .unwrap();
    assert!(!evaluate(&dead_end, "w", &d).unwrap());
}
