//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls the solver code paths under test; only instance
//! accessors are used.

#![allow(dead_code)]

use std::collections::HashMap;

use parkroute::instance::{gen_geo_instance, GeoParams};
use parkroute::Instance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random metric instance: Euclidean points, walking slower than driving,
/// search times drawn per location around `base_p`.
pub fn random_instance(seed: u64, n: usize, q: usize, base_p: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let walk_factor = [12.0, 15.0, 20.0, 25.0][rng.gen_range(0..4)];
    let inst = gen_geo_instance(&GeoParams {
        n,
        seed,
        drive_factor: 10.0,
        walk_factor,
        park_time: base_p,
        capacity: Some(q),
        load: 0.25,
    })
    .unwrap();
    let ps: Vec<f64> = (0..n).map(|_| base_p * rng.gen_range(0.25..1.75)).collect();
    inst.with_park_times(|k| ps[k - 1])
}

/// The shared family used by several acceptance criteria: 20 instances
/// with `n` in 4..=8, `q` in 1..=3 and mixed search times.
pub fn family(count: usize, n_lo: usize, n_hi: usize) -> Vec<Instance> {
    (0..count)
        .map(|i| {
            let n = n_lo + i % (n_hi - n_lo + 1);
            let q = 1 + i % 3;
            let base_p = [0.5, 2.0, 4.0, 8.0][i % 4];
            random_instance(1000 + i as u64, n, q, base_p)
        })
        .collect()
}

pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

/// Every partition of `items` into nonempty blocks.
pub fn set_partitions(items: &[usize]) -> Vec<Vec<Vec<usize>>> {
    let Some((&first, rest)) = items.split_first() else {
        return vec![vec![]];
    };
    let mut out = Vec::new();
    for part in set_partitions(rest) {
        for i in 0..part.len() {
            let mut p = part.clone();
            p[i].insert(0, first);
            out.push(p);
        }
        let mut p = part;
        p.insert(0, vec![first]);
        out.push(p);
    }
    out
}

/// Walking cost of visiting `order` from `spot` and returning.
pub fn walk_sequence(inst: &Instance, spot: usize, order: &[usize]) -> f64 {
    let mut at = spot;
    let mut cost = 0.0;
    for &k in order {
        cost += inst.walk(at, k);
        at = k;
    }
    cost + inst.walk(at, spot)
}

/// Cheapest walking tour by trying every visiting order.
pub fn walk_brute(inst: &Instance, spot: usize, members: &[usize]) -> f64 {
    permutations(members)
        .iter()
        .map(|p| walk_sequence(inst, spot, p))
        .fold(f64::INFINITY, f64::min)
}

pub fn drive_sequence(inst: &Instance, stops: &[usize]) -> f64 {
    let mut at = 0;
    let mut cost = 0.0;
    for &s in stops {
        cost += inst.drive(at, s);
        at = s;
    }
    cost + inst.drive(at, 0)
}

/// Within capacity and, under the reduced rules, not a multi-customer
/// set containing its own parking spot.
pub fn allowed(inst: &Instance, reduced: bool, spot: usize, set: &[usize]) -> bool {
    let q = inst.capacity_count.unwrap_or(usize::MAX);
    let w_ok = match (&inst.weights, inst.capacity_weight) {
        (Some(w), Some(cap)) => set.iter().map(|&k| w[k - 1]).sum::<f64>() <= cap + 1e-9,
        _ => true,
    };
    let v_ok = match (&inst.volumes, inst.capacity_volume) {
        (Some(v), Some(cap)) => set.iter().map(|&k| v[k - 1]).sum::<f64>() <= cap + 1e-9,
        _ => true,
    };
    set.len() <= q && w_ok && v_ok && !(reduced && set.len() >= 2 && set.contains(&spot))
}

/// Cheapest split of `group` into allowed walking sets from `spot`.
pub fn partition_brute(inst: &Instance, reduced: bool, spot: usize, group: &[usize]) -> f64 {
    set_partitions(group)
        .iter()
        .filter(|p| p.iter().all(|s| allowed(inst, reduced, spot, s)))
        .map(|p| p.iter().map(|s| walk_brute(inst, spot, s)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Optimum by enumerating every set of parking stops, every visiting order
/// of those stops, every assignment of customers to stops and every
/// partition of each stop's customers. Stops that serve nobody are
/// skipped, which loses nothing on metric instances.
pub fn optimum_brute(inst: &Instance, reduced: bool) -> f64 {
    let locs = &inst.parking_locations;
    let n = inst.n;
    let mut memo: HashMap<(usize, u32), f64> = HashMap::new();
    let mut best = f64::INFINITY;
    for subset in 1u32..(1 << locs.len()) {
        let stops: Vec<usize> = (0..locs.len()).filter(|b| subset >> b & 1 == 1).map(|b| locs[b]).collect();
        if stops.len() > n {
            continue;
        }
        let tour = permutations(&stops)
            .iter()
            .map(|p| drive_sequence(inst, p))
            .fold(f64::INFINITY, f64::min);
        let park: f64 = stops.iter().map(|&s| inst.park(s)).sum();
        let k = stops.len();
        let mut walk = f64::INFINITY;
        let mut choice = vec![0usize; n];
        'assign: loop {
            let mut masks = vec![0u32; k];
            for (c, &s) in choice.iter().enumerate() {
                masks[s] |= 1 << c;
            }
            if masks.iter().all(|&m| m != 0) {
                let mut total = 0.0;
                for (s, &m) in masks.iter().enumerate() {
                    let spot = stops[s];
                    total += *memo.entry((spot, m)).or_insert_with(|| {
                        let group: Vec<usize> = (0..n).filter(|c| m >> c & 1 == 1).map(|c| c + 1).collect();
                        partition_brute(inst, reduced, spot, &group)
                    });
                }
                walk = walk.min(total);
            }
            for d in choice.iter_mut() {
                *d += 1;
                if *d < k {
                    continue 'assign;
                }
                *d = 0;
            }
            break;
        }
        best = best.min(tour + park + walk);
    }
    best + inst.total_load()
}

/// Parking-assignment optimum: every nonempty set of opened spots, each
/// customer walking one way to its nearest opened spot.
pub fn par_brute(inst: &Instance) -> f64 {
    let locs = &inst.parking_locations;
    let mut best = f64::INFINITY;
    for subset in 1u64..(1 << locs.len()) {
        let open: Vec<usize> = (0..locs.len()).filter(|b| subset >> b & 1 == 1).map(|b| locs[b]).collect();
        let cost: f64 = open.iter().map(|&s| inst.park(s)).sum::<f64>()
            + (1..=inst.n)
                .map(|k| open.iter().map(|&s| inst.walk(s, k)).fold(f64::INFINITY, f64::min))
                .sum::<f64>();
        best = best.min(cost);
    }
    best
}

/// Every cut of `order` into blocks, every parking spot inside each block
/// and every cut of each block into contiguous sets walked in order.
/// Returns the cost without loading.
pub fn split_brute(inst: &Instance, reduced: bool, order: &[usize]) -> f64 {
    fn go(inst: &Instance, reduced: bool, order: &[usize], a: usize, at: usize) -> f64 {
        let n = order.len();
        if a == n {
            return inst.drive(at, 0);
        }
        let mut best = f64::INFINITY;
        for b in a + 1..=n {
            let block = &order[a..b];
            for &spot in block.iter().filter(|s| inst.parking_locations.contains(s)) {
                let len = block.len();
                for cuts in 0u32..(1 << (len - 1)) {
                    let mut walk = 0.0;
                    let mut start = 0;
                    let mut ok = true;
                    for end in 1..=len {
                        if end == len || cuts >> (end - 1) & 1 == 1 {
                            let set = &block[start..end];
                            let mut sorted = set.to_vec();
                            sorted.sort_unstable();
                            if !allowed(inst, reduced, spot, &sorted) {
                                ok = false;
                                break;
                            }
                            walk += walk_sequence(inst, spot, set);
                            start = end;
                        }
                    }
                    if ok {
                        let c = inst.drive(at, spot) + inst.park(spot) + walk + go(inst, reduced, order, b, spot);
                        best = best.min(c);
                    }
                }
            }
        }
        best
    }
    go(inst, reduced, order, 0, 0)
}

/// Relative gap of `value` over `optimum`, in percent.
pub fn gap_pct(value: f64, optimum: f64) -> f64 {
    100.0 * (value - optimum) / optimum
}
