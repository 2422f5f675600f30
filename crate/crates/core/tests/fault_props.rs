mod common;

use std::collections::{BTreeSet, HashSet};

use proptest::prelude::*;
use qcycle::faultsim::{coverage, coverage_all, enumerate_faults, FaultScenario};
use qcycle::lighttrail::*;
use qcycle::routing::{route_cycle, CommunicationSet, CycleRoute};
use qcycle::{Edge, NodeId, Topology};

/// A random topology, a few routed cycles on it, and a random failure set.
#[derive(Debug, Clone)]
struct Fixture {
    g: Topology,
    cycles: Vec<CycleRoute>,
    failed: Vec<Edge>,
}

fn fixture() -> impl Strategy<Value = Fixture> {
    (5usize..=10, 0.2f64..0.7, any::<u64>(), 1usize..4, 0usize..4).prop_map(|(n, d, seed, k, f)| {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let mut rng = common::rng(seed);
        let g = common::random_connected_graph(n, d, &mut rng);
        let mut cycles = Vec::new();
        for _ in 0..k {
            let size = rng.random_range(1..=4usize.min(n));
            let mut nodes: Vec<NodeId> = (1..=n as NodeId).collect();
            nodes.shuffle(&mut rng);
            let c = CommunicationSet::new(&g, nodes[..size].iter().copied()).unwrap();
            if let Ok(cycle) = route_cycle(&g, &c) {
                cycles.push(cycle);
            }
        }
        let mut edges = g.edges().to_vec();
        edges.shuffle(&mut rng);
        edges.truncate(f);
        Fixture { g, cycles, failed: edges }
    })
}

fn pairs(s: &ServedPairs) -> BTreeSet<(NodeId, NodeId)> {
    s.iter().collect()
}

fn rules(model: FaultModel) -> DeliveryRules {
    DeliveryRules::with_model(model)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn served_pairs_match_trail_oracle(fx in fixture()) {
        let seqs: Vec<Vec<NodeId>> = fx.cycles.iter().map(|c| c.sequence().to_vec()).collect();
        let failed: HashSet<Edge> = fx.failed.iter().copied().collect();
        let raw: Vec<(NodeId, NodeId)> = fx.failed.iter().map(|e| e.endpoints()).collect();
        for mode in [TrailMode::Single, TrailMode::Paired] {
            for model in [FaultModel::Truncated, FaultModel::WholeCycle] {
                let plan = DeploymentPlan::new(fx.g.n(), mode, fx.cycles.clone());
                let got = pairs(&served_pairs_plan(&plan, &failed, rules(model)));
                let expect = common::plan_pairs(&seqs, mode == TrailMode::Paired, &raw, model == FaultModel::WholeCycle);
                prop_assert_eq!(got, expect, "{} {}", mode, model);
            }
        }
    }

    #[test]
    fn more_faults_never_serve_more(fx in fixture()) {
        for mode in [TrailMode::Single, TrailMode::Paired] {
            let plan = DeploymentPlan::new(fx.g.n(), mode, fx.cycles.clone());
            for model in [FaultModel::Truncated, FaultModel::WholeCycle] {
                let mut previous = served_pairs_plan(&plan, &HashSet::new(), rules(model));
                let mut failed = HashSet::new();
                for &e in &fx.failed {
                    failed.insert(e);
                    let now = served_pairs_plan(&plan, &failed, rules(model));
                    prop_assert!(previous.is_superset(&now));
                    previous = now;
                }
            }
        }
    }

    #[test]
    fn paired_and_truncated_dominate(fx in fixture()) {
        let failed: HashSet<Edge> = fx.failed.iter().copied().collect();
        let single = DeploymentPlan::new(fx.g.n(), TrailMode::Single, fx.cycles.clone());
        let paired = single.with_mode(TrailMode::Paired);
        for model in [FaultModel::Truncated, FaultModel::WholeCycle] {
            let s = served_pairs_plan(&single, &failed, rules(model));
            let p = served_pairs_plan(&paired, &failed, rules(model));
            prop_assert!(p.is_superset(&s));
        }
        for plan in [&single, &paired] {
            let truncated = served_pairs_plan(plan, &failed, rules(FaultModel::Truncated));
            let whole = served_pairs_plan(plan, &failed, rules(FaultModel::WholeCycle));
            prop_assert!(truncated.is_superset(&whole));
        }
        prop_assert_eq!(links_used(&paired), 2 * links_used(&single));
    }

    #[test]
    fn two_fault_coverage_bounded_by_each_single(fx in fixture()) {
        let plan = DeploymentPlan::new(fx.g.n(), TrailMode::Paired, fx.cycles.clone());
        let singles = enumerate_faults(&fx.g, 1).unwrap();
        let single_cov = coverage_all(&plan, &singles, DeliveryRules::default());
        for s in enumerate_faults(&fx.g, 2).unwrap().iter().take(60) {
            let c = coverage(&plan, s, DeliveryRules::default());
            for (one, cov) in singles.iter().zip(&single_cov) {
                if one.is_subset_of(s) {
                    prop_assert!(c.served <= cov.served);
                }
            }
        }
    }
}

#[test]
fn scenario_counts_are_binomial() {
    let mut rng = common::rng(4);
    for n in 3..=12 {
        let g = common::random_connected_graph(n, 0.4, &mut rng);
        let m = g.num_edges();
        let one = enumerate_faults(&g, 1).unwrap();
        let two = enumerate_faults(&g, 2).unwrap();
        assert_eq!(one.len(), m);
        assert_eq!(two.len(), m * (m - 1) / 2);
        let distinct: BTreeSet<&FaultScenario> = two.iter().collect();
        assert_eq!(distinct.len(), two.len());
    }
}

#[test]
fn square_examples_match_oracle() {
    let g = Topology::new(4, &[(1, 2), (2, 3), (3, 4), (4, 1)]).unwrap();
    let c = CycleRoute::new(&g, vec![1, 2, 3, 4, 1]).unwrap();
    let single = DeploymentPlan::new(4, TrailMode::Single, vec![c.clone()]);
    let s = pairs(&served_pairs_plan(&single, &HashSet::new(), DeliveryRules::default()));
    let all: BTreeSet<(NodeId, NodeId)> =
        (1..=4).flat_map(|a| (1..=4).filter(move |&b| b != a).map(move |b| (a, b))).collect();
    let missing: BTreeSet<_> = all.difference(&s).copied().collect();
    assert_eq!(missing, BTreeSet::from([(3, 2), (4, 2), (4, 3)]));
    let paired = single.with_mode(TrailMode::Paired);
    let failed = HashSet::from([Edge::new(2, 3)]);
    let p = pairs(&served_pairs_plan(&paired, &failed, DeliveryRules::default()));
    assert_eq!(p, common::plan_pairs(&[vec![1, 2, 3, 4, 1]], true, &[(2, 3)], false));
    assert!(!p.contains(&(2, 3)) && !p.contains(&(3, 2)));
}
