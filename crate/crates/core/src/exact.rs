//! Exact solver for desk-scale instances.
//!
//! The search runs over the set `P` of parking locations the vehicle
//! visits. Given `P`, the cheapest driving route is a travelling-salesman
//! tour through `P` and the depot, and the cheapest walking plan is a
//! minimum-cost partition of the customers into catalog sets, each served
//! from its best admissible spot in `P`. Both pieces are solved exactly by
//! dynamic programming over subsets:
//!
//! * one reverse Held-Karp table over all spot subsets prices every route;
//! * a set-partition DP over customer masks prices every walking plan.
//!
//! Candidates are visited in order of a lower bound (parking + route +
//! the walking plan with every spot available), so the search stops as
//! soon as the bound passes the incumbent.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::model::{structural_violations, ModelOptions, Solution, Stop, Violation};
use crate::par::{self, Parallelism};
use crate::servicesets::{walk_tour, ServiceSetCatalog};
use crate::{Error, Result, TIE_EPS};

/// Largest number of parking locations the exact solver accepts.
pub const MAX_SPOTS: usize = 16;
/// Largest number of customers the exact solver accepts.
pub const MAX_CUSTOMERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Candidate parking sets evaluated before giving up.
    pub max_nodes: u64,
    pub max_seconds: f64,
    /// Treat an unproven incumbent as an error instead of returning it.
    pub require_proof: bool,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: 10_000_000,
            max_seconds: 300.0,
            require_proof: false,
        }
    }
}

impl SearchBudget {
    pub fn with_seconds(mut self, s: f64) -> Self {
        self.max_seconds = s;
        self
    }

    pub fn with_nodes(mut self, n: u64) -> Self {
        self.max_nodes = n;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.max_nodes == 0 || !(self.max_seconds > 0.0) {
            return Err(Error::Invalid("search budget limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ExactOptions {
    pub budget: SearchBudget,
    pub parallelism: Parallelism,
    /// Structural requirements imposed on the search. Each keeps at least
    /// one optimum on metric instances, so the value should not change.
    pub structure: ModelOptions,
}

impl ExactOptions {
    pub fn with_budget(budget: SearchBudget) -> Self {
        ExactOptions {
            budget,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Timeout,
}

impl SolveStatus {
    /// Process exit code used by the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            SolveStatus::Optimal => 0,
            SolveStatus::Feasible => 2,
            SolveStatus::Timeout => 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExactResult {
    /// Best solution found; `None` only on timeout without an incumbent.
    pub solution: Option<Solution>,
    pub status: SolveStatus,
    /// Valid lower bound on the optimum, loading included.
    pub bound: f64,
    pub nodes: u64,
    pub elapsed: Duration,
}

impl ExactResult {
    pub fn value(&self) -> Option<f64> {
        self.solution.as_ref().map(|s| s.total)
    }
}

/// Checks coverage, capacity, stop distinctness, catalog membership and
/// pair admissibility. An empty list means the solution is feasible.
pub fn check_feasible(inst: &Instance, cat: &ServiceSetCatalog, sol: &Solution) -> Vec<Violation> {
    let mut out = structural_violations(inst, sol);
    for stop in &sol.stops {
        for set in &stop.sets {
            let mut members = set.members.clone();
            members.sort_unstable();
            match cat.find(&members) {
                None => out.push(Violation::NotInCatalog { members }),
                Some(j) if !cat.pair_admissible(stop.location, j) => out.push(Violation::Inadmissible {
                    stop: stop.location,
                    members,
                }),
                Some(_) => {}
            }
        }
    }
    out
}

/// Precomputed data shared by every candidate evaluation.
struct Tables<'a> {
    inst: &'a Instance,
    cat: &'a ServiceSetCatalog,
    structure: ModelOptions,
    spots: Vec<usize>,
    /// Catalog sets as customer bitmasks (bit `c - 1`).
    set_mask: Vec<u32>,
    /// For each customer bit, the sets whose lowest member is that bit.
    by_low: Vec<Vec<usize>>,
    /// `walk[s * |S| + j]`, infinite when the pair is inadmissible.
    walk: Vec<f64>,
    /// `route[P * m + l]`: from spot `l` through every spot of `P`
    /// (excluding `l`), then home.
    route: Vec<f64>,
    full: u32,
}

impl<'a> Tables<'a> {
    fn new(inst: &'a Instance, cat: &'a ServiceSetCatalog, structure: ModelOptions, mode: Parallelism) -> Result<Self> {
        let n = inst.n;
        let spots = cat.spots().to_vec();
        let m = spots.len();
        if m > MAX_SPOTS {
            return Err(Error::SubproblemTooLarge { size: m, max: MAX_SPOTS });
        }
        if n > MAX_CUSTOMERS {
            return Err(Error::SubproblemTooLarge {
                size: n,
                max: MAX_CUSTOMERS,
            });
        }
        if (structure.vi_claim4 || structure.vi_corollary1) && !inst.parks_at_all_customers() {
            return Err(Error::Unsupported(
                "own-location singleton structure assumes every customer location is a parking location".into(),
            ));
        }
        let rules = structure.rules(cat);
        let sets = cat.sets();
        let set_mask: Vec<u32> = sets
            .iter()
            .map(|s| s.members.iter().fold(0u32, |acc, &c| acc | 1 << (c - 1)))
            .collect();
        let mut by_low = vec![Vec::new(); n];
        for (j, &mask) in set_mask.iter().enumerate() {
            by_low[mask.trailing_zeros() as usize].push(j);
        }
        let rows = par::map(mode, &spots, |&s| -> Result<Vec<f64>> {
            sets.iter()
                .map(|set| {
                    if rules.admissible(s, &set.members) {
                        Ok(walk_tour(inst, s, &set.members)?.0)
                    } else {
                        Ok(f64::INFINITY)
                    }
                })
                .collect()
        });
        let mut walk = Vec::with_capacity(m * sets.len());
        for r in rows {
            walk.extend(r?);
        }
        for c in 1..=n {
            let coverable = cat
                .containing(c)
                .iter()
                .any(|&j| (0..m).any(|s| walk[s * sets.len() + j].is_finite()));
            if !coverable {
                return Err(Error::Infeasible(format!(
                    "customer {c} is in no set that can be served from a parking location"
                )));
            }
        }

        let route = route_table(inst, &spots);
        Ok(Tables {
            inst,
            cat,
            structure,
            spots,
            set_mask,
            by_low,
            walk,
            route,
            full: if n == 32 { u32::MAX } else { (1u32 << n) - 1 },
        })
    }

    fn m(&self) -> usize {
        self.spots.len()
    }

    /// Cheapest closed drive through the spots in `p` (bitmask over spot
    /// indices).
    fn tour(&self, p: u32) -> f64 {
        if p == 0 {
            return 0.0;
        }
        let m = self.m();
        (0..m)
            .filter(|&l| p & (1 << l) != 0)
            .map(|l| self.inst.drive(0, self.spots[l]) + self.route[(p & !(1 << l)) as usize * m + l])
            .fold(f64::INFINITY, f64::min)
    }

    /// Spot visiting order for `p`, lexicographically smallest among ties.
    fn tour_order(&self, p: u32) -> Vec<usize> {
        let m = self.m();
        let best = self.tour(p);
        let mut order = Vec::new();
        let mut rest = p;
        let mut at: Option<usize> = None;
        let mut remaining = best;
        while rest != 0 {
            // Spot indices follow ascending location ids.
            let next = (0..m)
                .filter(|&l| rest & (1 << l) != 0)
                .find(|&l| {
                    let leg = match at {
                        None => self.inst.drive(0, self.spots[l]),
                        Some(a) => self.inst.drive(self.spots[a], self.spots[l]),
                    };
                    leg + self.route[(rest & !(1 << l)) as usize * m + l] <= remaining + TIE_EPS
                })
                .expect("route table is consistent");
            rest &= !(1 << next);
            remaining = self.route[rest as usize * m + next];
            at = Some(next);
            order.push(self.spots[next]);
        }
        order
    }

    fn park(&self, p: u32) -> f64 {
        (0..self.m())
            .filter(|&l| p & (1 << l) != 0)
            .map(|l| self.inst.park(self.spots[l]))
            .sum()
    }

    /// Customers whose own location is in `p`.
    fn own_mask(&self, p: u32) -> u32 {
        (0..self.m())
            .filter(|&l| p & (1 << l) != 0)
            .fold(0u32, |acc, l| acc | 1 << (self.spots[l] - 1))
    }

    /// Best spot index in `p` for each set, with its walking cost.
    fn set_costs(&self, p: u32) -> Vec<(f64, usize)> {
        let ns = self.set_mask.len();
        (0..ns)
            .map(|j| {
                let mut best = (f64::INFINITY, usize::MAX);
                for l in 0..self.m() {
                    if p & (1 << l) != 0 {
                        let w = self.walk[l * ns + j];
                        if w < best.0 {
                            best = (w, l);
                        }
                    }
                }
                best
            })
            .collect()
    }

    /// Minimum-cost partition of `target` into catalog sets under the given
    /// per-set costs. Returns the cost and the chosen set indices.
    fn partition(&self, target: u32, costs: &[(f64, usize)], dp: &mut Vec<f64>, pick: &mut Vec<u32>) -> (f64, Vec<usize>) {
        let size = (target as usize) + 1;
        if dp.len() < size {
            dp.resize(size, 0.0);
            pick.resize(size, 0);
        }
        dp[0] = 0.0;
        let mut s: u32 = 0;
        loop {
            s = s.wrapping_sub(target) & target;
            if s == 0 {
                break;
            }
            let low = s.trailing_zeros() as usize;
            let mut best = f64::INFINITY;
            let mut arg = u32::MAX;
            for &j in &self.by_low[low] {
                let mask = self.set_mask[j];
                if mask & !s != 0 {
                    continue;
                }
                let c = costs[j].0 + dp[(s & !mask) as usize];
                if c < best {
                    best = c;
                    arg = j as u32;
                }
            }
            dp[s as usize] = best;
            pick[s as usize] = arg;
        }
        let value = dp[target as usize];
        let mut chosen = Vec::new();
        if value.is_finite() {
            let mut s = target;
            while s != 0 {
                let j = pick[s as usize] as usize;
                chosen.push(j);
                s &= !self.set_mask[j];
            }
        }
        (value, chosen)
    }

    /// Walking plan for `p`. Under the own-location structure, each
    /// customer of a visited location is served alone there and the DP runs
    /// over the rest.
    fn plan(&self, p: u32, dp: &mut Vec<f64>, pick: &mut Vec<u32>) -> Option<(f64, Vec<(usize, usize)>)> {
        let costs = self.set_costs(p);
        let forced = if self.structure.vi_claim4 || self.structure.vi_corollary1 {
            self.own_mask(p)
        } else {
            0
        };
        let (mut value, chosen) = self.partition(self.full & !forced, &costs, dp, pick);
        if !value.is_finite() {
            return None;
        }
        let mut plan: Vec<(usize, usize)> = chosen.into_iter().map(|j| (j, costs[j].1)).collect();
        for l in 0..self.m() {
            if p & (1 << l) != 0 && forced & (1 << (self.spots[l] - 1)) != 0 {
                let j = self.cat.find(&[self.spots[l]]).expect("singletons are always in the catalog");
                let w = self.walk[l * self.set_mask.len() + j];
                if !w.is_finite() {
                    return None;
                }
                value += w;
                plan.push((j, l));
            }
        }
        Some((value, plan))
    }
}

/// `route[P * m + l]` = cheapest path from spot `l` through all of `P`
/// (with `l` not in `P`) and back to the depot, on driving times only.
fn route_table(inst: &Instance, spots: &[usize]) -> Vec<f64> {
    let m = spots.len();
    let states = 1usize << m;
    let mut t = vec![f64::INFINITY; states * m];
    for l in 0..m {
        t[l] = inst.drive(spots[l], 0);
    }
    for p in 1..states {
        for l in 0..m {
            if p & (1 << l) != 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut bits = p;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let c = inst.drive(spots[l], spots[j]) + t[(p & !(1 << j)) * m + j];
                if c < best {
                    best = c;
                }
            }
            t[p * m + l] = best;
        }
    }
    t
}

struct Candidate {
    p: u32,
    bound: f64,
}

struct Evaluated {
    value: f64,
    stops: usize,
    order: Vec<usize>,
    plan: Vec<(usize, usize)>,
}

impl Evaluated {
    /// Strictly better under the tie rules: lower cost, then fewer stops,
    /// then the lexicographically smaller stop sequence.
    fn beats(&self, other: &Evaluated) -> bool {
        if self.value < other.value - TIE_EPS {
            return true;
        }
        if self.value > other.value + TIE_EPS {
            return false;
        }
        (self.stops, &self.order) < (other.stops, &other.order)
    }
}

fn evaluate(t: &Tables<'_>, c: &Candidate, dp: &mut Vec<f64>, pick: &mut Vec<u32>) -> Option<Evaluated> {
    let (walk, plan) = t.plan(c.p, dp, pick)?;
    let stops = c.p.count_ones() as usize;
    let used: u32 = plan.iter().fold(0, |acc, &(_, l)| acc | 1 << l);
    if t.structure.vi_claim5 && used != c.p {
        return None;
    }
    if t.structure.vi_corollary3 && stops > plan.len() {
        return None;
    }
    Some(Evaluated {
        value: t.park(c.p) + t.tour(c.p) + walk,
        stops,
        order: t.tour_order(c.p),
        plan,
    })
}

fn materialize(t: &Tables<'_>, e: &Evaluated) -> Result<Solution> {
    let inst = t.inst;
    let sets = t.cat.sets();
    let stops = e
        .order
        .iter()
        .map(|&loc| {
            let l = t.spots.binary_search(&loc).expect("stop is a spot");
            let mut served: Vec<Vec<usize>> = e
                .plan
                .iter()
                .filter(|&&(_, s)| s == l)
                .map(|&(j, _)| sets[j].members.clone())
                .collect();
            served.sort();
            Stop::new(inst, loc, &served)
        })
        .collect::<Result<Vec<_>>>()?;
    Solution::from_stops(inst, stops)
}

/// Solves the instance to proven optimality within the budget.
///
/// Errors when the instance is too large for the subset tables, when some
/// customer cannot be served at all, or when `require_proof` is set and
/// the budget runs out.
pub fn solve_exact(inst: &Instance, cat: &ServiceSetCatalog, opts: &ExactOptions) -> Result<ExactResult> {
    opts.budget.validate()?;
    let start = Instant::now();
    let deadline = Duration::from_secs_f64(opts.budget.max_seconds);
    let t = Tables::new(inst, cat, opts.structure, opts.parallelism)?;
    let m = t.m();

    // Lower bound: walking plan with every spot available.
    let mut dp = Vec::new();
    let mut pick = Vec::new();
    let all_costs = t.set_costs(((1u64 << m) - 1) as u32);
    let (walk_floor, _) = t.partition(t.full, &all_costs, &mut dp, &mut pick);
    let mut cands: Vec<Candidate> = (1u32..(1u64 << m) as u32)
        .map(|p| Candidate {
            p,
            bound: t.park(p) + t.tour(p) + walk_floor,
        })
        .collect();
    cands.sort_by(|a, b| {
        a.bound
            .total_cmp(&b.bound)
            .then(a.p.count_ones().cmp(&b.p.count_ones()))
            .then(a.p.cmp(&b.p))
    });

    let load = inst.total_load();
    let mut best: Option<Evaluated> = None;
    let mut nodes = 0u64;
    let mut next_bound: Option<f64> = None;
    let chunk = if opts.parallelism.is_parallel() {
        64 * par::threads(opts.parallelism)
    } else {
        1
    };
    let mut i = 0;
    while i < cands.len() {
        let cutoff = best.as_ref().map_or(f64::INFINITY, |b| b.value + TIE_EPS);
        if cands[i].bound > cutoff {
            break;
        }
        if nodes >= opts.budget.max_nodes || start.elapsed() >= deadline {
            next_bound = Some(cands[i].bound);
            break;
        }
        let end = (i + chunk).min(cands.len());
        let batch: Vec<&Candidate> = cands[i..end].iter().filter(|c| c.bound <= cutoff).collect();
        let results: Vec<Option<Evaluated>> = if chunk == 1 {
            batch.iter().map(|c| evaluate(&t, c, &mut dp, &mut pick)).collect()
        } else {
            par::map(opts.parallelism, &batch, |c| {
                let (mut d, mut p) = (Vec::new(), Vec::new());
                evaluate(&t, c, &mut d, &mut p)
            })
        };
        nodes += (end - i) as u64;
        for r in results.into_iter().flatten() {
            if best.as_ref().is_none_or(|b| r.beats(b)) {
                best = Some(r);
            }
        }
        i = end;
    }

    let elapsed = start.elapsed();
    let proven = next_bound.is_none();
    let (status, bound) = match (&best, proven) {
        (Some(b), true) => (SolveStatus::Optimal, b.value + load),
        (Some(b), false) => (SolveStatus::Feasible, b.value.min(next_bound.unwrap()) + load),
        (None, false) => (SolveStatus::Timeout, next_bound.unwrap() + load),
        (None, true) => {
            return Err(Error::Infeasible(
                "no parking plan satisfies the requested structure".into(),
            ))
        }
    };
    if status != SolveStatus::Optimal && opts.budget.require_proof {
        return Err(Error::BudgetExhausted);
    }
    let solution = best.as_ref().map(|b| materialize(&t, b)).transpose()?;
    Ok(ExactResult {
        solution,
        status,
        bound,
        nodes,
        elapsed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_grid_instance, GridParams, Matrix};
    use crate::servicesets::{enumerate_catalog, reduce_catalog};

    fn value(inst: &Instance, structure: ModelOptions) -> f64 {
        let cat = enumerate_catalog(inst).unwrap();
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
        r.value().unwrap()
    }

    #[test]
    fn single_customer() {
        let drive = Matrix::from_rows("d", &[vec![0.0, 2.0], vec![3.0, 0.0]]).unwrap();
        let inst = Instance::new(drive, Matrix::zeros(1), vec![1.5], Some(1), 0.5).unwrap();
        assert_eq!(value(&inst, ModelOptions::default()), 2.0 + 1.5 + 3.0 + 0.5);
    }

    #[test]
    fn two_by_two_single_stop_beats_park_all() {
        // Park once at (1,1): serve it alone, walk to (1,2) and back, and
        // pair (2,1) with (2,2) on a 4-block loop. 4 + 2.2 + 1.6 * 6 = 15.8,
        // below the park-all value 8 + 4 * 2.2.
        let mut gp = GridParams::unit(2, 2).with_park_time(2.2);
        gp.walk_rate = 1.6;
        let g = gen_grid_instance(&gp, true).unwrap();
        let v = value(&g.instance, ModelOptions::default());
        assert!((v - 15.8).abs() < 1e-6, "{v}");
    }

    #[test]
    fn reduction_catalog_is_checked() {
        let g = gen_grid_instance(&GridParams::unit(2, 2), true).unwrap();
        let inst = &g.instance;
        let cat = reduce_catalog(&enumerate_catalog(inst).unwrap());
        let sol = Solution::from_stops(
            inst,
            vec![Stop::new(inst, 1, &[vec![1, 2]]).unwrap(), Stop::new(inst, 3, &[vec![3], vec![4]]).unwrap()],
        )
        .unwrap();
        let v = check_feasible(inst, &cat, &sol);
        assert_eq!(v, vec![Violation::Inadmissible { stop: 1, members: vec![1, 2] }]);
        let empty = Solution {
            stops: vec![],
            breakdown: Default::default(),
            total: 0.0,
        };
        assert_eq!(check_feasible(inst, &cat, &empty).len(), 4);
    }

    #[test]
    fn budget_exhaustion_reports_bound() {
        let g = gen_grid_instance(&GridParams::unit(2, 2).with_park_time(0.5), true).unwrap();
        let cat = enumerate_catalog(&g.instance).unwrap();
        let full = solve_exact(&g.instance, &cat, &ExactOptions::default()).unwrap();
        let r = solve_exact(&g.instance, &cat, &ExactOptions::with_budget(SearchBudget::default().with_nodes(1))).unwrap();
        assert_ne!(r.status, SolveStatus::Optimal);
        assert!(r.bound <= full.value().unwrap() + 1e-9);
        let strict = SearchBudget {
            require_proof: true,
            ..SearchBudget::default().with_nodes(1)
        };
        assert!(matches!(
            solve_exact(&g.instance, &cat, &ExactOptions::with_budget(strict)),
            Err(Error::BudgetExhausted)
        ));
    }

    #[test]
    fn too_many_spots_is_rejected() {
        let g = gen_grid_instance(&GridParams::unit(6, 1), true).unwrap();
        let cat = enumerate_catalog(&g.instance).unwrap();
        assert!(matches!(
            solve_exact(&g.instance, &cat, &ExactOptions::default()),
            Err(Error::SubproblemTooLarge { .. })
        ));
    }
}
