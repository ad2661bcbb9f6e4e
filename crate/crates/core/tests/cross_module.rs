use loosecycle::{
    build_ak, count_loose_hamilton, extremal_construction, find_generic_hamilton, find_loose_hamilton,
    greedy_pack, validate_loose_cycle, Certificate, Count, KGraph, Outcome, SearchBudget,
};
use proptest::prelude::*;

fn budget() -> SearchBudget {
    SearchBudget::default()
}

#[test]
fn extremal_graphs_have_no_hamilton_cycle_of_any_kind() {
    for (k, n) in [(3, 9), (3, 11), (4, 10)] {
        let ex = extremal_construction(n, k).unwrap();
        assert!(matches!(find_loose_hamilton(&ex.graph, &budget()).unwrap(), Outcome::None));
        assert!(matches!(find_generic_hamilton(&ex.graph, &budget()).unwrap(), Outcome::None));
    }
}

#[test]
fn found_cycles_survive_certificate_round_trip() {
    let g = KGraph::complete(9, 3).unwrap();
    let c = find_loose_hamilton(&g, &budget()).unwrap().found().unwrap();
    let cert = Certificate::loose_cycle(&c);
    let back: Certificate = serde_json::from_str(&cert.to_json()).unwrap();
    assert_eq!(back, cert);
    back.check(&g, true).unwrap();
    // Dropping one edge of the host breaks the certificate.
    let kept: Vec<Vec<usize>> = g.edges().filter(|e| *e != c.edges[0].as_slice()).map(<[usize]>::to_vec).collect();
    let h = KGraph::new(9, 3, kept).unwrap();
    assert!(back.check(&h, true).is_err());
}

#[test]
fn ak_gadget_packs_into_itself() {
    for k in 3..=5 {
        let a = build_ak(k).unwrap();
        let p = greedy_pack(&a.graph);
        assert_eq!(p.len(), 1);
        p.validate(&a.graph).unwrap();
    }
}

#[test]
fn count_and_search_agree_on_small_random_hosts() {
    for seed in 0..20 {
        let g = KGraph::random(7, 3, 0.6, seed).unwrap();
        let found = find_loose_hamilton(&g, &budget()).unwrap();
        let Count::Exact(count) = count_loose_hamilton(&g, &budget()).unwrap() else {
            panic!("count ran out of budget");
        };
        match found {
            Outcome::Found(c) => {
                validate_loose_cycle(&g, &c, true).unwrap();
                assert!(count > 0);
            }
            Outcome::None => assert_eq!(count, 0),
            Outcome::BudgetExhausted => panic!("search ran out of budget"),
        }
    }
}

proptest! {
    #[test]
    fn text_format_round_trips(n in 3usize..12, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = KGraph::random(n, 3, p, seed).unwrap();
        let back = KGraph::parse_text(&g.to_text()).unwrap();
        prop_assert_eq!(back.n(), g.n());
        prop_assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}
