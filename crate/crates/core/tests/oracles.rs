mod common;

use common::*;
use parkroute::benchmarks::{customer_order, modified_tsp, no_parking_benchmark, relaxed_ms, split_order};
use parkroute::heuristic::{heuristic_solve, route_parking, solve_par, solve_ssa, HeuristicOptions};
use parkroute::servicesets::{enumerate_catalog, reduce_catalog, walk_time, SetRules};
use parkroute::{check_feasible, solve_exact, ExactOptions, Instance, ModelOptions, SearchBudget, SolveStatus};

fn optimum(inst: &Instance, structure: ModelOptions, reduced: bool) -> f64 {
    let cat = enumerate_catalog(inst).unwrap();
    let cat = if reduced { reduce_catalog(&cat) } else { cat };
    let r = solve_exact(
        inst,
        &cat,
        &ExactOptions {
            structure,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let sol = r.solution.unwrap();
    assert!(check_feasible(inst, &cat, &sol).is_empty());
    sol.total
}

#[test]
fn walk_time_matches_permutations() {
    for seed in 0..6 {
        let inst = random_instance(seed, 8, 6, 1.0);
        for spot in [1, 4, 8] {
            for size in 1..=6 {
                let members: Vec<usize> = (1..=8).filter(|&k| k != spot).take(size).collect();
                let mut with_spot = members.clone();
                with_spot[0] = spot;
                with_spot.sort_unstable();
                for set in [&members, &with_spot] {
                    let fast = walk_time(&inst, spot, set).unwrap();
                    let slow = walk_brute(&inst, spot, set);
                    assert!((fast - slow).abs() < 1e-9, "seed {seed} spot {spot} {set:?}: {fast} vs {slow}");
                }
            }
        }
    }
}

#[test]
fn exact_matches_full_enumeration() {
    for seed in 0..24 {
        let n = 2 + seed as usize % 4;
        let q = 1 + seed as usize % 3;
        let inst = random_instance(seed, n, q, [0.3, 2.0, 6.0][seed as usize % 3]);
        for reduced in [false, true] {
            let fast = optimum(&inst, ModelOptions::default(), reduced);
            let slow = optimum_brute(&inst, reduced);
            assert!((fast - slow).abs() < 1e-9, "seed {seed} reduced {reduced}: {fast} vs {slow}");
        }
    }
}

#[test]
fn split_matches_order_respecting_enumeration() {
    for seed in 0..16 {
        let n = 2 + seed as usize % 7;
        let inst = random_instance(40 + seed, n, 1 + seed as usize % 3, [0.5, 3.0][seed as usize % 2]);
        let (order, exact) = customer_order(&inst);
        assert!(exact);
        for reduced in [false, true] {
            let (_, fast) = split_order(&inst, SetRules { reduced }, &order).unwrap();
            let slow = split_brute(&inst, reduced, &order);
            assert!((fast - slow).abs() < 1e-9, "seed {seed}: {fast} vs {slow}");
        }
    }
}

#[test]
fn two_customer_split_takes_the_cheapest_structure() {
    // Park at both, or park at one and walk to the other (alone or as a
    // pair, which costs the same round trip).
    let inst = random_instance(7, 2, 2, 5.0);
    let order = customer_order(&inst).0;
    let (a, b) = (order[0], order[1]);
    let both = inst.drive(0, a) + inst.park(a) + inst.drive(a, b) + inst.park(b) + inst.drive(b, 0);
    let once = |spot: usize| inst.drive(0, spot) + inst.park(spot) + inst.drive(spot, 0) + 2.0 * inst.walk(a, b);
    let expected = both.min(once(a)).min(once(b));
    let (_, got) = split_order(&inst, SetRules::default(), &order).unwrap();
    assert!((got - expected).abs() < 1e-9);
}

#[test]
fn parking_assignment_matches_opening_enumeration() {
    for seed in 0..20 {
        let n = 1 + seed as usize % 10;
        let inst = random_instance(100 + seed, n, 3, [0.2, 1.0, 4.0, 10.0][seed as usize % 4]);
        let pa = solve_par(&inst);
        assert!(pa.exact);
        let slow = par_brute(&inst);
        assert!((pa.objective - slow).abs() < 1e-9, "seed {seed}: {} vs {slow}", pa.objective);
        for &s in &pa.opened {
            assert!(!pa.customers_of(s).is_empty(), "opened spot {s} serves nobody");
        }
    }
}

#[test]
fn set_partition_matches_brute_force() {
    for seed in 0..12 {
        let inst = random_instance(200 + seed, 7, 1 + seed as usize % 4, 1.0);
        for spot in [1, 5] {
            for size in 1..=6 {
                let group: Vec<usize> = (1..=7).filter(|&k| k != spot).take(size).collect();
                let mut with_spot = group.clone();
                with_spot[size - 1] = spot;
                with_spot.sort_unstable();
                for k in [&group, &with_spot] {
                    for reduced in [false, true] {
                        let fast = solve_ssa(&inst, SetRules { reduced }, spot, k).unwrap();
                        let slow = partition_brute(&inst, reduced, spot, k);
                        assert!(fast.exact);
                        assert!((fast.walk_min - slow).abs() < 1e-9, "seed {seed} {k:?}: {} vs {slow}", fast.walk_min);
                    }
                }
            }
        }
    }
}

#[test]
fn routing_matches_permutations() {
    for seed in 0..8 {
        let inst = random_instance(300 + seed, 7, 2, 1.0);
        let spots: Vec<usize> = (1..=7).filter(|k| (k + seed as usize) % 2 == 0).collect();
        let r = route_parking(&inst, &spots).unwrap();
        assert!(r.routing_exact);
        let slow = permutations(&spots)
            .iter()
            .map(|p| drive_sequence(&inst, p))
            .fold(f64::INFINITY, f64::min);
        assert!((r.drive_min - slow).abs() < 1e-9);
    }
}

#[test]
fn every_benchmark_is_feasible_and_dominated() {
    let budget = SearchBudget::default();
    for (i, inst) in family(12, 3, 7).iter().enumerate() {
        let cat = enumerate_catalog(inst).unwrap();
        let opt = optimum(inst, ModelOptions::default(), false);
        let mut results = vec![
            no_parking_benchmark(inst, &cat, &budget).unwrap(),
            modified_tsp(inst, &cat, &budget).unwrap(),
        ];
        for alpha in [0.6, 0.8] {
            results.push(relaxed_ms(inst, &cat, alpha, &budget).unwrap());
        }
        for r in &results {
            assert!(check_feasible(inst, &cat, &r.solution).is_empty(), "{} on {i}", r.name);
            assert!((r.solution.total - r.completion).abs() < 1e-9);
            assert!(r.completion >= opt - 1e-9, "{} on {i}: {} < {opt}", r.name, r.completion);
        }
        let heuristic = heuristic_solve(inst, &HeuristicOptions::default()).unwrap();
        assert!(check_feasible(inst, &cat, &heuristic.solution).is_empty());
        assert!(heuristic.solution.total >= opt - 1e-9);
    }
}

#[test]
fn no_parking_benchmark_is_exact_without_search_time() {
    for inst in family(8, 3, 7) {
        let free = inst.with_uniform_park_time(0.0);
        let cat = enumerate_catalog(&free).unwrap();
        let r = no_parking_benchmark(&free, &cat, &SearchBudget::default()).unwrap();
        let opt = optimum_brute(&free, false);
        assert!((r.completion - opt).abs() < 1e-9);
        assert!((r.model_objective - r.completion).abs() < 1e-9);
    }
}

#[test]
fn structure_rules_keep_the_optimum() {
    let variants = [
        ModelOptions {
            vi_claim4: true,
            ..Default::default()
        },
        ModelOptions {
            vi_corollary1: true,
            ..Default::default()
        },
        ModelOptions {
            vi_claim5: true,
            ..Default::default()
        },
        ModelOptions {
            vi_corollary3: true,
            ..Default::default()
        },
        ModelOptions {
            var_reduction: true,
            ..Default::default()
        },
        ModelOptions::all(),
    ];
    for (i, inst) in family(10, 3, 7).iter().enumerate() {
        let base = optimum(inst, ModelOptions::default(), false);
        for v in variants {
            let got = optimum(inst, v, false);
            assert!((got - base).abs() < 1e-6, "instance {i} {v:?}: {got} vs {base}");
        }
    }
}

#[test]
fn raising_every_search_time_costs_at_least_that_much() {
    for inst in family(8, 3, 6) {
        let base = optimum(&inst, ModelOptions::default(), false);
        let delta = 0.75;
        let raised = inst.with_park_times(|k| inst.park(k) + delta);
        let up = optimum(&raised, ModelOptions::default(), false);
        assert!(up >= base + delta - 1e-9);
    }
}

#[test]
fn heuristic_handles_a_hundred_customers() {
    let inst = random_instance(77, 100, 6, 3.0);
    let started = std::time::Instant::now();
    let h = heuristic_solve(&inst, &HeuristicOptions::default()).unwrap();
    let took = started.elapsed().as_secs_f64();
    assert!(took < 60.0, "{took:.1}s");
    let b = h.solution.breakdown;
    assert!((h.solution.total - (b.park_min + b.drive_min + b.walk_min + b.load_min)).abs() < 1e-9);
    let served: usize = h.solution.stops.iter().map(|s| s.customers()).sum();
    assert_eq!(served, 100);
}
