//! Two-echelon location-routing heuristic.
//!
//! 1. Parking assignment: open parking spots and assign every customer to
//!    one, trading search time against one-way walking. This is an
//!    uncapacitated facility location problem, solved by branch-and-bound
//!    with a dual-ascent bound.
//! 2. Routing: a driving tour over the opened spots.
//! 3. Set assignment: at each spot, the cheapest partition of its customers
//!    into walking tours that fit the carrier.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::instance::Instance;
use crate::model::{Solution, Stop};
use crate::par::{self, Parallelism};
use crate::servicesets::{walk_tour, SetRules, MAX_WALK_SET};
use crate::tsp::{shortest_tour, FnCosts};
use crate::{Error, Result, TIE_EPS};

/// Largest customer group partitioned exactly at one spot.
pub const SSA_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParkingAssignment {
    /// Opened parking spots, ascending.
    pub opened: Vec<usize>,
    /// Spot serving customer `k`, stored at `k - 1`.
    pub assign: Vec<usize>,
    pub objective: f64,
    /// False when the search stopped on its limits.
    pub exact: bool,
}

impl ParkingAssignment {
    /// Customers assigned to `spot`, ascending.
    pub fn customers_of(&self, spot: usize) -> Vec<usize> {
        (1..=self.assign.len()).filter(|&k| self.assign[k - 1] == spot).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParOptions {
    pub max_nodes: u64,
    pub max_seconds: f64,
}

impl Default for ParOptions {
    fn default() -> Self {
        ParOptions {
            max_nodes: 200_000,
            max_seconds: 30.0,
        }
    }
}

/// Facility-location data: opening costs and one-way walking costs.
struct Ufl {
    spots: Vec<usize>,
    open_cost: Vec<f64>,
    /// `cost[k][j]`: client `k` (0-based) served by facility `j`.
    cost: Vec<Vec<f64>>,
    /// Facilities per client, cheapest first, ties by index.
    sorted: Vec<Vec<usize>>,
}

impl Ufl {
    fn new(inst: &Instance) -> Self {
        let spots = inst.parking_locations.clone();
        let open_cost = spots.iter().map(|&s| inst.park(s)).collect();
        let cost: Vec<Vec<f64>> = inst
            .customers()
            .map(|k| spots.iter().map(|&s| inst.walk(s, k)).collect())
            .collect();
        let sorted = cost
            .iter()
            .map(|row: &Vec<f64>| {
                let mut idx: Vec<usize> = (0..row.len()).collect();
                idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Ufl {
            spots,
            open_cost,
            cost,
            sorted,
        }
    }

    fn m(&self) -> usize {
        self.spots.len()
    }

    /// Objective of opening exactly `open` (facility flags).
    fn value(&self, open: &[bool]) -> f64 {
        let fixed: f64 = (0..self.m()).filter(|&j| open[j]).map(|j| self.open_cost[j]).sum();
        let assign: f64 = self
            .sorted
            .iter()
            .enumerate()
            .map(|(k, order)| {
                order
                    .iter()
                    .find(|&&j| open[j])
                    .map_or(f64::INFINITY, |&j| self.cost[k][j])
            })
            .sum();
        fixed + assign
    }

    /// Dual-ascent lower bound with `open` paid for and `closed` removed.
    /// Also returns the leftover slack per facility.
    fn bound(&self, state: &[Status]) -> (f64, Vec<f64>) {
        let m = self.m();
        let mut slack: Vec<f64> = (0..m)
            .map(|j| match state[j] {
                Status::Open => 0.0,
                Status::Free => self.open_cost[j],
                Status::Closed => f64::NAN,
            })
            .collect();
        let avail: Vec<Vec<usize>> = self
            .sorted
            .iter()
            .map(|o| o.iter().copied().filter(|&j| state[j] != Status::Closed).collect())
            .collect();
        if avail.iter().any(|a| a.is_empty()) {
            return (f64::INFINITY, slack);
        }
        let mut v: Vec<f64> = avail.iter().enumerate().map(|(k, a)| self.cost[k][a[0]]).collect();
        // Number of facilities with cost <= v[k] for each client.
        let mut reach: Vec<usize> = avail
            .iter()
            .enumerate()
            .map(|(k, a)| a.iter().take_while(|&&j| self.cost[k][j] <= v[k]).count())
            .collect();
        let mut blocked = vec![false; v.len()];
        loop {
            let mut moved = false;
            for k in 0..v.len() {
                if blocked[k] {
                    continue;
                }
                let a = &avail[k];
                let target = a.get(reach[k]).map_or(f64::INFINITY, |&j| self.cost[k][j]);
                let room = a[..reach[k]].iter().map(|&j| slack[j]).fold(f64::INFINITY, f64::min);
                let need = target - v[k];
                if room < need {
                    // A facility this client already reaches is tight.
                    if room > 0.0 {
                        for &j in &a[..reach[k]] {
                            slack[j] -= room;
                        }
                        v[k] += room;
                        moved = true;
                    }
                    blocked[k] = true;
                    continue;
                }
                for &j in &a[..reach[k]] {
                    slack[j] -= need;
                }
                v[k] = target;
                moved = true;
                while reach[k] < a.len() && self.cost[k][a[reach[k]]] <= v[k] {
                    reach[k] += 1;
                }
            }
            if !moved {
                break;
            }
        }
        let fixed: f64 = (0..m).filter(|&j| state[j] == Status::Open).map(|j| self.open_cost[j]).sum();
        (fixed + v.iter().sum::<f64>(), slack)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Free,
    Open,
    Closed,
}

struct Incumbent {
    value: f64,
    open: Vec<bool>,
}

impl Incumbent {
    fn key(&self) -> (usize, Vec<usize>) {
        let idx: Vec<usize> = (0..self.open.len()).filter(|&j| self.open[j]).collect();
        (idx.len(), idx)
    }

    /// Cost first, then fewer spots, then lexicographically smaller set.
    fn offer(&mut self, value: f64, open: &[bool]) {
        let cand = Incumbent {
            value,
            open: open.to_vec(),
        };
        let better = value < self.value - TIE_EPS || (value <= self.value + TIE_EPS && cand.key() < self.key());
        if better {
            *self = cand;
        }
    }
}

fn local_search(ufl: &Ufl) -> Vec<bool> {
    let m = ufl.m();
    let mut open = vec![false; m];
    // Greedy add from the empty set.
    let mut cur = f64::INFINITY;
    loop {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..m {
            if open[j] {
                continue;
            }
            open[j] = true;
            let v = ufl.value(&open);
            open[j] = false;
            if v < cur - TIE_EPS && best.is_none_or(|(b, _)| v < b - TIE_EPS) {
                best = Some((v, j));
            }
        }
        match best {
            Some((v, j)) => {
                open[j] = true;
                cur = v;
            }
            None => break,
        }
    }
    // Drop and swap until no improvement.
    loop {
        let mut improved = false;
        for j in 0..m {
            if !open[j] || open.iter().filter(|&&o| o).count() == 1 {
                continue;
            }
            open[j] = false;
            let v = ufl.value(&open);
            if v < cur - TIE_EPS {
                cur = v;
                improved = true;
            } else {
                open[j] = true;
            }
        }
        for a in 0..m {
            for b in 0..m {
                if open[a] && !open[b] {
                    open[a] = false;
                    open[b] = true;
                    let v = ufl.value(&open);
                    if v < cur - TIE_EPS {
                        cur = v;
                        improved = true;
                    } else {
                        open[a] = true;
                        open[b] = false;
                    }
                }
            }
        }
        if !improved {
            return open;
        }
    }
}

/// Chooses parking spots and assigns customers to them, minimizing search
/// time plus one-way walking time. Capacity is ignored here.
pub fn solve_par(inst: &Instance) -> ParkingAssignment {
    solve_par_with(inst, ParOptions::default())
}

pub fn solve_par_with(inst: &Instance, opts: ParOptions) -> ParkingAssignment {
    let ufl = Ufl::new(inst);
    let m = ufl.m();
    let start = Instant::now();
    let deadline = Duration::from_secs_f64(opts.max_seconds);
    let seed = local_search(&ufl);
    let mut inc = Incumbent {
        value: ufl.value(&seed),
        open: seed,
    };
    let mut nodes = 0u64;
    let mut exact = true;
    let mut stack = vec![vec![Status::Free; m]];
    while let Some(state) = stack.pop() {
        if nodes >= opts.max_nodes || start.elapsed() >= deadline {
            exact = false;
            break;
        }
        nodes += 1;
        let (lb, slack) = ufl.bound(&state);
        if lb > inc.value + TIE_EPS {
            continue;
        }
        // Primal: open facilities plus the free ones the dual made tight.
        let mut trial: Vec<bool> = (0..m)
            .map(|j| state[j] == Status::Open || (state[j] == Status::Free && slack[j] <= TIE_EPS))
            .collect();
        if trial.iter().any(|&o| o) {
            inc.offer(ufl.value(&trial), &trial);
        }
        let free: Vec<usize> = (0..m).filter(|&j| state[j] == Status::Free).collect();
        if free.is_empty() {
            trial = state.iter().map(|&s| s == Status::Open).collect();
            if trial.iter().any(|&o| o) {
                inc.offer(ufl.value(&trial), &trial);
            }
            continue;
        }
        let pivot = *free
            .iter()
            .min_by(|&&a, &&b| slack[a].total_cmp(&slack[b]).then(a.cmp(&b)))
            .expect("free facility");
        let mut closed = state.clone();
        closed[pivot] = Status::Closed;
        let mut opened = state;
        opened[pivot] = Status::Open;
        // Depth-first, opening explored first.
        stack.push(closed);
        stack.push(opened);
    }
    let open = inc.open;
    let opened: Vec<usize> = (0..m).filter(|&j| open[j]).map(|j| ufl.spots[j]).collect();
    let assign: Vec<usize> = ufl
        .sorted
        .iter()
        .map(|order| ufl.spots[*order.iter().find(|&&j| open[j]).expect("one spot open")])
        .collect();
    ParkingAssignment {
        opened,
        assign,
        objective: inc.value,
        exact,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Route {
    /// Stops in driving order (depot excluded).
    pub stops: Vec<usize>,
    pub drive_min: f64,
    pub routing_exact: bool,
}

/// Driving tour from the depot through `spots` and back.
pub fn route_parking(inst: &Instance, spots: &[usize]) -> Result<Route> {
    if spots.is_empty() {
        return Err(Error::Invalid("cannot route an empty parking set".into()));
    }
    let mut sorted = spots.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let tour = shortest_tour(&FnCosts {
        k: sorted.len(),
        from_base: |j| inst.drive(0, sorted[j]),
        to_base: |j| inst.drive(sorted[j], 0),
        between: |a, b| inst.drive(sorted[a], sorted[b]),
    });
    Ok(Route {
        stops: tour.order.iter().map(|&j| sorted[j]).collect(),
        drive_min: tour.cost,
        routing_exact: tour.exact,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SsaResult {
    /// Walking sets, each ascending; sets sorted.
    pub sets: Vec<Vec<usize>>,
    pub walk_min: f64,
    pub exact: bool,
}

/// Cheapest partition of `members` into walking tours from `spot`. Sets
/// must fit the carrier and be admissible under `rules`. Exact up to
/// [`SSA_EXACT_MAX`] customers; larger groups fall back to a greedy
/// nearest-neighbour packing flagged non-exact.
pub fn solve_ssa(inst: &Instance, rules: SetRules, spot: usize, members: &[usize]) -> Result<SsaResult> {
    let mut ks = members.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Ok(SsaResult {
            sets: vec![],
            walk_min: 0.0,
            exact: true,
        });
    }
    if ks.len() > SSA_EXACT_MAX {
        return greedy_ssa(inst, rules, spot, &ks);
    }
    let k = ks.len();
    let max_size = inst.capacity_count.unwrap_or(k).min(k).min(MAX_WALK_SET);
    let mut memo: HashMap<u32, f64> = HashMap::new();
    let mut set_cost = |mask: u32| -> Result<f64> {
        if let Some(&v) = memo.get(&mask) {
            return Ok(v);
        }
        let group: Vec<usize> = (0..k).filter(|&b| mask & (1 << b) != 0).map(|b| ks[b]).collect();
        let v = if inst.fits(&group) && rules.admissible(spot, &group) {
            walk_tour(inst, spot, &group)?.0
        } else {
            f64::INFINITY
        };
        memo.insert(mask, v);
        Ok(v)
    };
    let full = (1u32 << k) - 1;
    let mut dp = vec![f64::INFINITY; 1 << k];
    let mut pick = vec![0u32; 1 << k];
    dp[0] = 0.0;
    for s in 1..=full {
        let low = s & s.wrapping_neg();
        let others: Vec<u32> = (0..k as u32).map(|b| 1 << b).filter(|&b| b != low && s & b != 0).collect();
        // Sets made of the lowest member plus up to max_size - 1 others.
        let mut best = f64::INFINITY;
        let mut arg = 0;
        let mut stack: Vec<(u32, usize)> = vec![(low, 0)];
        while let Some((set, from)) = stack.pop() {
            let c = set_cost(set)?;
            if c.is_finite() {
                let total = c + dp[(s & !set) as usize];
                if total < best - TIE_EPS || (total <= best + TIE_EPS && set < arg) {
                    best = total;
                    arg = set;
                }
            }
            if (set.count_ones() as usize) < max_size {
                for (t, &b) in others.iter().enumerate().skip(from) {
                    stack.push((set | b, t + 1));
                }
            }
        }
        dp[s as usize] = best;
        pick[s as usize] = arg;
    }
    if !dp[full as usize].is_finite() {
        return Err(Error::Infeasible(format!("customers at spot {spot} cannot be partitioned")));
    }
    let mut sets = Vec::new();
    let mut s = full;
    while s != 0 {
        let set = pick[s as usize];
        sets.push((0..k).filter(|&b| set & (1 << b) != 0).map(|b| ks[b]).collect::<Vec<_>>());
        s &= !set;
    }
    sets.sort();
    Ok(SsaResult {
        sets,
        walk_min: dp[full as usize],
        exact: true,
    })
}

fn greedy_ssa(inst: &Instance, rules: SetRules, spot: usize, ks: &[usize]) -> Result<SsaResult> {
    let max_size = inst.capacity_count.unwrap_or(ks.len()).min(MAX_WALK_SET);
    let mut left: Vec<usize> = ks.to_vec();
    let mut sets = Vec::new();
    let mut walk = 0.0;
    while !left.is_empty() {
        let first = *left
            .iter()
            .min_by(|&&a, &&b| inst.walk(spot, a).total_cmp(&inst.walk(spot, b)).then(a.cmp(&b)))
            .expect("nonempty");
        let mut group = vec![first];
        left.retain(|&c| c != first);
        let mut at = first;
        while group.len() < max_size {
            let next = left
                .iter()
                .copied()
                .filter(|&c| {
                    let mut g = group.clone();
                    g.push(c);
                    g.sort_unstable();
                    inst.fits(&g) && rules.admissible(spot, &g)
                })
                .min_by(|&a, &b| inst.walk(at, a).total_cmp(&inst.walk(at, b)).then(a.cmp(&b)));
            match next {
                Some(c) => {
                    group.push(c);
                    left.retain(|&x| x != c);
                    at = c;
                }
                None => break,
            }
        }
        group.sort_unstable();
        walk += walk_tour(inst, spot, &group)?.0;
        sets.push(group);
    }
    sets.sort();
    Ok(SsaResult {
        sets,
        walk_min: walk,
        exact: false,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeuristicOptions {
    pub par: Option<ParOptions>,
    pub parallelism: Parallelism,
    pub rules: SetRules,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeuristicDiagnostics {
    pub opened: usize,
    pub par_objective: f64,
    pub par_exact: bool,
    pub routing_exact: bool,
    pub ssa_exact: bool,
}

#[derive(Debug, Clone)]
pub struct HeuristicResult {
    pub solution: Solution,
    pub diagnostics: HeuristicDiagnostics,
}

/// Parking assignment, then routing over the opened spots, then the set
/// partition at each spot.
pub fn heuristic_solve(inst: &Instance, opts: &HeuristicOptions) -> Result<HeuristicResult> {
    let pa = solve_par_with(inst, opts.par.unwrap_or_default());
    let route = route_parking(inst, &pa.opened)?;
    let groups: Vec<(usize, Vec<usize>)> = route.stops.iter().map(|&s| (s, pa.customers_of(s))).collect();
    let parts = par::map(opts.parallelism, &groups, |(s, ks)| solve_ssa(inst, opts.rules, *s, ks));
    let mut ssa_exact = true;
    let mut stops = Vec::with_capacity(groups.len());
    for ((s, _), part) in groups.iter().zip(parts) {
        let part = part?;
        ssa_exact &= part.exact;
        stops.push(Stop::new(inst, *s, &part.sets)?);
    }
    let solution = Solution::from_stops(inst, stops)?;
    Ok(HeuristicResult {
        solution,
        diagnostics: HeuristicDiagnostics {
            opened: pa.opened.len(),
            par_objective: pa.objective,
            par_exact: pa.exact,
            routing_exact: route.routing_exact,
            ssa_exact,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Matrix;

    fn pair(p: f64, w12: f64) -> Instance {
        let drive = Matrix::from_rows("d", &[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let walk = Matrix::from_rows("w", &[vec![0.0, w12], vec![w12, 0.0]]).unwrap();
        Instance::new(drive, walk, vec![p, p], Some(2), 0.0).unwrap()
    }

    #[test]
    fn single_customer_opens_own_spot() {
        let drive = Matrix::from_rows("d", &[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let inst = Instance::new(drive, Matrix::zeros(1), vec![4.0], Some(1), 0.0).unwrap();
        let pa = solve_par(&inst);
        assert_eq!(pa.opened, vec![1]);
        assert_eq!(pa.objective, 4.0);
        assert!(pa.exact);
    }

    #[test]
    fn expensive_parking_opens_one() {
        let pa = solve_par(&pair(10.0, 1.0));
        assert_eq!(pa.opened, vec![1]);
        assert_eq!(pa.objective, 11.0);
        assert_eq!(pa.assign, vec![1, 1]);
    }

    #[test]
    fn cheap_parking_opens_both() {
        let pa = solve_par(&pair(0.1, 1.0));
        assert_eq!(pa.opened, vec![1, 2]);
        assert!((pa.objective - 0.2).abs() < 1e-12);
    }

    #[test]
    fn single_spot_route() {
        let inst = pair(1.0, 1.0);
        let r = route_parking(&inst, &[2]).unwrap();
        assert_eq!(r.stops, vec![2]);
        assert_eq!(r.drive_min, 2.0);
        assert!(r.routing_exact);
    }

    #[test]
    fn ssa_trivial_cases() {
        let inst = pair(1.0, 3.0);
        let r = solve_ssa(&inst, SetRules::default(), 1, &[2]).unwrap();
        assert_eq!((r.sets.clone(), r.walk_min), (vec![vec![2]], 6.0));
        let r = solve_ssa(&inst, SetRules::default(), 1, &[1]).unwrap();
        assert_eq!((r.sets.clone(), r.walk_min), (vec![vec![1]], 0.0));
    }

    #[test]
    fn ssa_prefers_cheaper_pair() {
        // Three customers on a line; from spot 1 the pair {2,3} is one walk.
        let drive = Matrix::from_fn(4, |i, k| (i as f64 - k as f64).abs());
        let walk = Matrix::from_fn(3, |i, k| 2.0 * (i as f64 - k as f64).abs());
        let inst = Instance::new(drive, walk, vec![1.0; 3], Some(2), 0.0).unwrap();
        let r = solve_ssa(&inst, SetRules::default(), 1, &[2, 3]).unwrap();
        assert_eq!(r.sets, vec![vec![2, 3]]);
        assert_eq!(r.walk_min, 8.0);
    }

    #[test]
    fn heuristic_far_apart_customers() {
        let drive = Matrix::from_rows("d", &[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 2.0], vec![1.0, 2.0, 0.0]]).unwrap();
        let walk = Matrix::from_rows("w", &[vec![0.0, 50.0], vec![50.0, 0.0]]).unwrap();
        let inst = Instance::new(drive, walk, vec![0.5, 0.5], Some(2), 0.0).unwrap();
        let h = heuristic_solve(&inst, &HeuristicOptions::default()).unwrap();
        assert_eq!(h.solution.stops.len(), 2);
        assert_eq!(h.solution.total, 1.0 + 0.5 + 2.0 + 0.5 + 1.0);
    }
}
