//! Walking service sets: which customer groups the carrier can serve on one
//! walk, and what that walk costs from a given parking spot.

use std::collections::HashMap;
use std::fmt::Write as _;

use dashmap::DashMap;
use serde::Serialize;

use crate::instance::Instance;
use crate::par::{self, Parallelism};
use crate::tsp::{held_karp, FnCosts};
use crate::{Error, Result};

/// Largest set for which walking tours are priced exactly.
pub const MAX_WALK_SET: usize = 12;

/// Default cap on materialized `(parking spot, set)` pairs.
pub const DEFAULT_MAX_PAIRS: u128 = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceSet {
    /// Customer ids, ascending.
    pub members: Vec<usize>,
    pub total_weight: f64,
    pub total_volume: f64,
}

impl ServiceSet {
    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, customer: usize) -> bool {
        self.members.binary_search(&customer).is_ok()
    }
}

/// Admissibility rule applied to `(parking spot, set)` pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SetRules {
    /// Forbid serving a multi-customer set that contains the parking spot's
    /// own customer from that spot; the customer is served alone instead.
    pub reduced: bool,
}

impl SetRules {
    pub fn admissible(&self, spot: usize, members: &[usize]) -> bool {
        !(self.reduced && members.len() >= 2 && members.binary_search(&spot).is_ok())
    }
}

/// The enumerated feasible service sets of an instance.
#[derive(Debug, Clone)]
pub struct ServiceSetCatalog {
    n: usize,
    sets: Vec<ServiceSet>,
    /// Sets containing customer `k`, stored at `k - 1`.
    membership: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
    spots: Vec<usize>,
    rules: SetRules,
}

#[derive(Debug, Clone, Copy)]
pub struct CatalogConfig {
    pub max_pairs: u128,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            max_pairs: DEFAULT_MAX_PAIRS,
        }
    }
}

/// Enumerates every customer subset that satisfies all active capacities,
/// ordered by size and then lexicographically.
pub fn enumerate_catalog(inst: &Instance) -> Result<ServiceSetCatalog> {
    enumerate_catalog_with(inst, CatalogConfig::default())
}

pub fn enumerate_catalog_with(inst: &Instance, cfg: CatalogConfig) -> Result<ServiceSetCatalog> {
    let n = inst.n;
    let spots = inst.parking_locations.len() as u128;
    if inst.capacity_weight.is_none() && inst.capacity_volume.is_none() {
        let q = inst.capacity_count.unwrap_or(n).min(n);
        let pairs = spots * count_sets(n, q);
        if pairs > cfg.max_pairs {
            return Err(Error::CatalogTooLarge {
                pairs,
                cap: cfg.max_pairs,
            });
        }
    }
    let max_size = inst.capacity_count.unwrap_or(n).min(n);
    let weight = |k: usize| inst.weights.as_ref().map_or(0.0, |w| w[k - 1]);
    let volume = |k: usize| inst.volumes.as_ref().map_or(0.0, |v| v[k - 1]);

    let mut sets = Vec::new();
    let mut cur = Vec::with_capacity(max_size);
    for size in 1..=max_size {
        let before = sets.len();
        collect_sets(inst, size, 1, &mut cur, &mut sets, cfg.max_pairs / spots.max(1))?;
        if sets.len() == before {
            // No set of this size fits, so none larger will.
            break;
        }
    }
    let sets: Vec<ServiceSet> = sets
        .into_iter()
        .map(|members: Vec<usize>| ServiceSet {
            total_weight: members.iter().map(|&k| weight(k)).sum(),
            total_volume: members.iter().map(|&k| volume(k)).sum(),
            members,
        })
        .collect();

    let mut membership = vec![Vec::new(); n];
    let mut index = HashMap::with_capacity(sets.len());
    for (j, s) in sets.iter().enumerate() {
        for &k in &s.members {
            membership[k - 1].push(j);
        }
        index.insert(s.members.clone(), j);
    }
    if let Some(k) = (1..=n).find(|&k| membership[k - 1].is_empty()) {
        return Err(Error::Infeasible(format!("customer {k} fits in no service set")));
    }
    Ok(ServiceSetCatalog {
        n,
        sets,
        membership,
        index,
        spots: inst.parking_locations.clone(),
        rules: SetRules::default(),
    })
}

fn collect_sets(
    inst: &Instance,
    size: usize,
    from: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    max_sets: u128,
) -> Result<()> {
    if cur.len() == size {
        out.push(cur.clone());
        if out.len() as u128 > max_sets {
            return Err(Error::CatalogTooLarge {
                pairs: out.len() as u128 * inst.parking_locations.len() as u128,
                cap: max_sets * inst.parking_locations.len() as u128,
            });
        }
        return Ok(());
    }
    let need = size - cur.len();
    for k in from..=inst.n + 1 - need {
        cur.push(k);
        // Prefix pruning is exact because weights and volumes are nonnegative.
        if inst.fits(cur) {
            collect_sets(inst, size, k + 1, cur, out, max_sets)?;
        }
        cur.pop();
    }
    Ok(())
}

/// Applies the rule that a customer whose own location is a parking spot is
/// never part of a multi-customer set served from that spot.
pub fn reduce_catalog(cat: &ServiceSetCatalog) -> ServiceSetCatalog {
    let mut out = cat.clone();
    out.rules = SetRules { reduced: true };
    out
}

impl ServiceSetCatalog {
    pub fn sets(&self) -> &[ServiceSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spots(&self) -> &[usize] {
        &self.spots
    }

    pub fn rules(&self) -> SetRules {
        self.rules
    }

    pub fn is_reduced(&self) -> bool {
        self.rules.reduced
    }

    /// Sets containing `customer`.
    pub fn containing(&self, customer: usize) -> &[usize] {
        &self.membership[customer - 1]
    }

    pub fn find(&self, members: &[usize]) -> Option<usize> {
        self.index.get(members).copied()
    }

    pub fn pair_admissible(&self, spot: usize, set: usize) -> bool {
        self.spots.binary_search(&spot).is_ok() && self.rules.admissible(spot, &self.sets[set].members)
    }

    /// `|spots| * |sets|` before any reduction.
    pub fn pair_count(&self) -> u128 {
        self.spots.len() as u128 * self.sets.len() as u128
    }

    /// Pairs removed by the reduction rule (zero when not reduced).
    pub fn removed_pair_count(&self) -> u128 {
        if !self.rules.reduced {
            return 0;
        }
        self.spots
            .iter()
            .map(|&i| self.containing(i).iter().filter(|&&j| self.sets[j].size() >= 2).count() as u128)
            .sum()
    }

    pub fn admissible_pair_count(&self) -> u128 {
        self.pair_count() - self.removed_pair_count()
    }

    pub fn reduction_percent(&self) -> f64 {
        100.0 * self.removed_pair_count() as f64 / self.pair_count() as f64
    }

    /// Walk-cost cache bound to `inst`, which must be the instance this
    /// catalog was enumerated from (or one sharing its walking matrix).
    pub fn costs<'a>(&'a self, inst: &'a Instance) -> WalkCosts<'a> {
        debug_assert_eq!(inst.n, self.n);
        WalkCosts {
            inst,
            cat: self,
            memo: DashMap::new(),
        }
    }

    /// CSV listing of the catalog: `set_id,members` and, when an instance
    /// is given, one walking-cost column per parking spot (empty when the
    /// pair is inadmissible).
    pub fn to_csv(&self, costs: Option<&WalkCosts<'_>>) -> Result<String> {
        let mut out = String::from("set_id,members");
        if costs.is_some() {
            for s in &self.spots {
                write!(out, ",w{s}").unwrap();
            }
        }
        out.push('\n');
        for (j, set) in self.sets.iter().enumerate() {
            let members: Vec<String> = set.members.iter().map(|m| m.to_string()).collect();
            write!(out, "{j},{}", members.join(" ")).unwrap();
            if let Some(c) = costs {
                for &s in &self.spots {
                    if self.pair_admissible(s, j) {
                        write!(out, ",{:.6}", c.get(s, j)?).unwrap();
                    } else {
                        out.push(',');
                    }
                }
            }
            out.push('\n');
        }
        Ok(out)
    }
}

/// Lazily memoized walking costs `w(spot, set)`. Safe to share across
/// threads; concurrent inserts of the same key store the same value.
pub struct WalkCosts<'a> {
    inst: &'a Instance,
    cat: &'a ServiceSetCatalog,
    memo: DashMap<(u32, u32), f64>,
}

impl WalkCosts<'_> {
    pub fn get(&self, spot: usize, set: usize) -> Result<f64> {
        let key = (spot as u32, set as u32);
        if let Some(v) = self.memo.get(&key) {
            return Ok(*v);
        }
        let v = walk_time(self.inst, spot, &self.cat.sets[set].members)?;
        self.memo.insert(key, v);
        Ok(v)
    }

    /// Fills the cache for every admissible pair, spots in parallel.
    pub fn precompute(&self, mode: Parallelism) -> Result<()> {
        let spots = self.cat.spots.clone();
        let rows = par::map(mode, &spots, |&s| -> Result<Vec<(usize, f64)>> {
            (0..self.cat.len())
                .filter(|&j| self.cat.pair_admissible(s, j))
                .map(|j| Ok((j, walk_time(self.inst, s, &self.cat.sets[j].members)?)))
                .collect()
        });
        for (s, row) in spots.iter().zip(rows) {
            for (j, v) in row? {
                self.memo.insert((*s as u32, j as u32), v);
            }
        }
        Ok(())
    }

    pub fn cached(&self) -> usize {
        self.memo.len()
    }
}

/// Minimum walking time from `spot` through all of `members` and back.
pub fn walk_time(inst: &Instance, spot: usize, members: &[usize]) -> Result<f64> {
    Ok(walk_tour(inst, spot, members)?.0)
}

/// Minimum walking tour and its service order. Among optimal orders the
/// lexicographically smallest customer sequence is returned.
pub fn walk_tour(inst: &Instance, spot: usize, members: &[usize]) -> Result<(f64, Vec<usize>)> {
    if members.len() > MAX_WALK_SET {
        return Err(Error::UnsupportedSetSize {
            size: members.len(),
            max: MAX_WALK_SET,
        });
    }
    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    if let [only] = sorted[..] {
        return Ok((inst.walk(spot, only) + inst.walk(only, spot), sorted));
    }
    let tour = held_karp(&FnCosts {
        k: sorted.len(),
        from_base: |j| inst.walk(spot, sorted[j]),
        to_base: |j| inst.walk(sorted[j], spot),
        between: |a, b| inst.walk(sorted[a], sorted[b]),
    });
    let order = tour.order.iter().map(|&j| sorted[j]).collect();
    Ok((tour.cost, order))
}

/// Cost of walking `order` from `spot` and back.
pub fn walk_order_cost(inst: &Instance, spot: usize, order: &[usize]) -> f64 {
    match (order.first(), order.last()) {
        (Some(&f), Some(&l)) => {
            inst.walk(spot, f) + order.windows(2).map(|w| inst.walk(w[0], w[1])).sum::<f64>() + inst.walk(l, spot)
        }
        _ => 0.0,
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of nonempty subsets of size at most `q` of `n` customers.
pub fn count_sets(n: usize, q: usize) -> u128 {
    (1..=q.min(n)).map(|s| binomial(n as u64, s as u64)).sum()
}

/// `(parking, set)` pairs when every customer location is a parking spot
/// and only the package count limits set size.
pub fn count_pairs(n: usize, q: usize) -> u128 {
    n as u128 * count_sets(n, q)
}

/// Pairs removed by [`reduce_catalog`] under the same assumptions: for each
/// spot, the multi-customer sets that contain it.
pub fn count_removed_pairs(n: usize, q: usize) -> u128 {
    if n == 0 {
        return 0;
    }
    n as u128
        * (2..=q.min(n))
            .map(|s| binomial(n as u64 - 1, s as u64 - 1))
            .sum::<u128>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_geo_instance, GeoParams, Matrix};

    fn line_instance(n: usize, q: usize) -> Instance {
        let drive = Matrix::from_fn(n + 1, |i, j| (i as f64 - j as f64).abs());
        let walk = Matrix::from_fn(n, |i, j| 3.0 * (i as f64 - j as f64).abs());
        Instance::new(drive, walk, vec![1.0; n], Some(q), 0.0).unwrap()
    }

    #[test]
    fn catalog_order_and_counts() {
        let inst = line_instance(4, 2);
        let cat = enumerate_catalog(&inst).unwrap();
        assert_eq!(cat.len(), 4 + 6);
        assert_eq!(cat.sets()[0].members, vec![1]);
        assert_eq!(cat.sets()[4].members, vec![1, 2]);
        assert_eq!(cat.sets()[9].members, vec![3, 4]);
        assert_eq!(cat.containing(2).len(), 1 + 3);
        assert_eq!(cat.find(&[2, 4]), Some(8));
    }

    #[test]
    fn weight_capacity_filters_sets() {
        // Oracle: brute-force subset filter over 3 customers.
        let mut inst = line_instance(3, 2);
        inst.capacity_weight = Some(10.0);
        inst.weights = Some(vec![5.0, 5.0, 9.0]);
        let w = [5.0, 5.0, 9.0];
        let mut expected = vec![];
        for mask in 1u32..8 {
            let members: Vec<usize> = (0..3).filter(|b| mask & (1 << b) != 0).map(|b| b + 1).collect();
            let weight: f64 = members.iter().map(|&k| w[k - 1]).sum();
            if members.len() <= 2 && weight <= 10.0 {
                expected.push(members);
            }
        }
        expected.sort_by(|a, b| a.len().cmp(&b.len()).then(a.cmp(b)));
        let cat = enumerate_catalog(&inst).unwrap();
        let got: Vec<Vec<usize>> = cat.sets().iter().map(|s| s.members.clone()).collect();
        assert_eq!(got, expected);
        assert_eq!(got, vec![vec![1], vec![2], vec![3], vec![1, 2]]);
        assert_eq!(cat.sets()[3].total_weight, 10.0);
    }

    #[test]
    fn hard_cap_triggers_resource_error() {
        let inst = line_instance(30, 4);
        let err = enumerate_catalog_with(&inst, CatalogConfig { max_pairs: 10_000 }).unwrap_err();
        assert!(matches!(err, Error::CatalogTooLarge { .. }));
    }

    #[test]
    fn walk_time_small_cases() {
        let inst = line_instance(3, 3);
        assert_eq!(walk_time(&inst, 2, &[2]).unwrap(), 0.0);
        // W(1,3) = 6, round trip 12.
        assert_eq!(walk_time(&inst, 1, &[3]).unwrap(), 12.0);
    }

    #[test]
    fn walk_time_two_customers_brute_force() {
        // Spot i=1, a=2, b=3 with W(i,a)=2, W(i,b)=5, W(a,b)=2.
        let mut walk = Matrix::zeros(3);
        for (i, j, v) in [(0, 1, 2.0), (0, 2, 5.0), (1, 2, 2.0)] {
            walk.set(i, j, v);
            walk.set(j, i, v);
        }
        let drive = Matrix::from_fn(4, |i, j| if i == j { 0.0 } else { 1.0 });
        let inst = Instance::new(drive, walk, vec![0.0; 3], Some(2), 0.0).unwrap();
        let brute = [[2usize, 3], [3, 2]]
            .iter()
            .map(|o| inst.walk(1, o[0]) + inst.walk(o[0], o[1]) + inst.walk(o[1], 1))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(brute, 9.0);
        let (cost, order) = walk_tour(&inst, 1, &[2, 3]).unwrap();
        assert_eq!(cost, brute);
        assert_eq!(order, vec![2, 3]);
    }

    #[test]
    fn oversized_walk_set_is_rejected() {
        let inst = line_instance(13, 13);
        let all: Vec<usize> = (1..=13).collect();
        assert!(matches!(walk_time(&inst, 1, &all), Err(Error::UnsupportedSetSize { .. })));
    }

    #[test]
    fn reduction_removes_exactly_own_multi_sets() {
        let inst = line_instance(5, 3);
        let cat = enumerate_catalog(&inst).unwrap();
        let red = reduce_catalog(&cat);
        for &i in red.spots() {
            for (j, s) in red.sets().iter().enumerate() {
                let expect = !(s.contains(i) && s.size() >= 2);
                assert_eq!(red.pair_admissible(i, j), expect);
                assert!(cat.pair_admissible(i, j));
            }
        }
        assert_eq!(red.removed_pair_count(), count_removed_pairs(5, 3));
        assert_eq!(red.pair_count(), count_pairs(5, 3));
    }

    #[test]
    fn analytic_counts_match_table() {
        let rows = [
            (1, 2_500u128, 2_500u128),
            (2, 63_750, 61_300),
            (3, 1_043_750, 982_500),
            (4, 12_558_750, 11_576_300),
        ];
        for (q, y, y_hat) in rows {
            assert_eq!(count_pairs(50, q), y);
            assert_eq!(count_pairs(50, q) - count_removed_pairs(50, q), y_hat);
        }
        assert_eq!(count_pairs(50, 5), 118_496_750);
    }

    #[test]
    fn precompute_matches_lazy_in_both_modes() {
        let inst = gen_geo_instance(&GeoParams {
            n: 7,
            seed: 2,
            ..GeoParams::default()
        })
        .unwrap();
        let cat = enumerate_catalog(&inst).unwrap();
        let lazy = cat.costs(&inst);
        for mode in [Parallelism::Sequential, Parallelism::Parallel] {
            let eager = cat.costs(&inst);
            eager.precompute(mode).unwrap();
            assert_eq!(eager.cached(), cat.len() * cat.spots().len());
            for &s in cat.spots() {
                for j in 0..cat.len() {
                    assert_eq!(eager.get(s, j).unwrap(), lazy.get(s, j).unwrap());
                }
            }
        }
        let csv = cat.to_csv(Some(&lazy)).unwrap();
        assert_eq!(csv.lines().count(), cat.len() + 1);
        assert!(csv.starts_with("set_id,members,w1,"));
    }
}
