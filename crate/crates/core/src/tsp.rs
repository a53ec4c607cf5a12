//! Closed tours from a fixed base (depot or parking spot) through a small
//! node set.
//!
//! Nodes are addressed by local index `0..k`. Callers list nodes in
//! ascending id order, so the lexicographic tie-break on local indices is
//! also lexicographic on ids.

use crate::TIE_EPS;

/// Largest node count solved by Held-Karp in [`shortest_tour`].
pub const HELD_KARP_MAX: usize = 13;

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    /// Visiting order as local node indices (base excluded).
    pub order: Vec<usize>,
    pub cost: f64,
    /// True when `order` is proven optimal.
    pub exact: bool,
}

/// Travel costs around a base point.
pub trait TourCosts {
    fn nodes(&self) -> usize;
    fn from_base(&self, j: usize) -> f64;
    fn to_base(&self, j: usize) -> f64;
    fn between(&self, a: usize, b: usize) -> f64;

    fn cost_of(&self, order: &[usize]) -> f64 {
        match (order.first(), order.last()) {
            (Some(&f), Some(&l)) => {
                self.from_base(f)
                    + order.windows(2).map(|w| self.between(w[0], w[1])).sum::<f64>()
                    + self.to_base(l)
            }
            _ => 0.0,
        }
    }
}

/// Adapter for closures.
pub struct FnCosts<A, B, C> {
    pub k: usize,
    pub from_base: A,
    pub to_base: B,
    pub between: C,
}

impl<A, B, C> TourCosts for FnCosts<A, B, C>
where
    A: Fn(usize) -> f64,
    B: Fn(usize) -> f64,
    C: Fn(usize, usize) -> f64,
{
    fn nodes(&self) -> usize {
        self.k
    }
    fn from_base(&self, j: usize) -> f64 {
        (self.from_base)(j)
    }
    fn to_base(&self, j: usize) -> f64 {
        (self.to_base)(j)
    }
    fn between(&self, a: usize, b: usize) -> f64 {
        (self.between)(a, b)
    }
}

/// Exact minimum tour by Held-Karp. Among optimal tours the
/// lexicographically smallest visiting order is returned.
///
/// Panics if the node count exceeds 20.
pub fn held_karp<T: TourCosts + ?Sized>(costs: &T) -> Tour {
    let k = costs.nodes();
    assert!(k <= 20, "held_karp limited to 20 nodes");
    if k == 0 {
        return Tour {
            order: vec![],
            cost: 0.0,
            exact: true,
        };
    }
    let full = (1usize << k) - 1;
    // togo[rest * k + j]: cheapest path that starts at j, visits every node
    // in `rest` and returns to the base; j is not in rest.
    let mut togo = vec![f64::INFINITY; (full + 1) * k];
    for j in 0..k {
        togo[j] = costs.to_base(j);
    }
    for rest in 1..=full {
        for j in 0..k {
            if rest & (1 << j) != 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut bits = rest;
            while bits != 0 {
                let nx = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let c = costs.between(j, nx) + togo[(rest & !(1 << nx)) * k + nx];
                if c < best {
                    best = c;
                }
            }
            togo[rest * k + j] = best;
        }
    }
    let start_cost = |j: usize| costs.from_base(j) + togo[(full & !(1 << j)) * k + j];
    let cost = (0..k).map(start_cost).fold(f64::INFINITY, f64::min);
    // Forward reconstruction, smallest index first among ties.
    let mut order = Vec::with_capacity(k);
    let first = (0..k).find(|&j| start_cost(j) <= cost + TIE_EPS).expect("finite tour");
    order.push(first);
    let mut rest = full & !(1 << first);
    let mut cur = first;
    let mut remaining = togo[rest * k + cur];
    while rest != 0 {
        let nx = (0..k)
            .filter(|&j| rest & (1 << j) != 0)
            .find(|&j| costs.between(cur, j) + togo[(rest & !(1 << j)) * k + j] <= remaining + TIE_EPS)
            .expect("consistent table");
        rest &= !(1 << nx);
        remaining = togo[rest * k + nx];
        cur = nx;
        order.push(nx);
    }
    Tour {
        cost: costs.cost_of(&order),
        order,
        exact: true,
    }
}

/// Held-Karp up to [`HELD_KARP_MAX`] nodes, otherwise nearest neighbour
/// followed by 2-opt and Or-opt (flagged non-exact).
pub fn shortest_tour<T: TourCosts + ?Sized>(costs: &T) -> Tour {
    if costs.nodes() <= HELD_KARP_MAX {
        held_karp(costs)
    } else {
        let order = improve(costs, nearest_neighbour(costs));
        Tour {
            cost: costs.cost_of(&order),
            order,
            exact: false,
        }
    }
}

pub fn nearest_neighbour<T: TourCosts + ?Sized>(costs: &T) -> Vec<usize> {
    let k = costs.nodes();
    let mut used = vec![false; k];
    let mut order = Vec::with_capacity(k);
    let mut cur: Option<usize> = None;
    for _ in 0..k {
        let next = (0..k)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| {
                let ca = cur.map_or_else(|| costs.from_base(a), |c| costs.between(c, a));
                let cb = cur.map_or_else(|| costs.from_base(b), |c| costs.between(c, b));
                ca.total_cmp(&cb)
            })
            .expect("unvisited node");
        used[next] = true;
        order.push(next);
        cur = Some(next);
    }
    order
}

/// 2-opt and Or-opt (segments of 1 to 3 nodes) until no improving move.
/// Moves are priced by full re-evaluation so asymmetric costs are handled.
pub fn improve<T: TourCosts + ?Sized>(costs: &T, mut order: Vec<usize>) -> Vec<usize> {
    let k = order.len();
    if k < 3 {
        return order;
    }
    let mut best = costs.cost_of(&order);
    loop {
        let mut improved = false;
        // 2-opt: reverse order[i..=j].
        for i in 0..k - 1 {
            for j in i + 1..k {
                order[i..=j].reverse();
                let c = costs.cost_of(&order);
                if c < best - TIE_EPS {
                    best = c;
                    improved = true;
                } else {
                    order[i..=j].reverse();
                }
            }
        }
        // Or-opt: move a segment to another position.
        for len in 1..=3.min(k - 1) {
            let mut i = 0;
            while i + len <= k {
                let seg: Vec<usize> = order[i..i + len].to_vec();
                let mut rest: Vec<usize> = order[..i].to_vec();
                rest.extend_from_slice(&order[i + len..]);
                let mut moved = false;
                for pos in 0..=rest.len() {
                    if pos == i {
                        continue;
                    }
                    let mut cand = rest[..pos].to_vec();
                    cand.extend_from_slice(&seg);
                    cand.extend_from_slice(&rest[pos..]);
                    let c = costs.cost_of(&cand);
                    if c < best - TIE_EPS {
                        best = c;
                        order = cand;
                        improved = true;
                        moved = true;
                        break;
                    }
                }
                if !moved {
                    i += 1;
                }
            }
        }
        if !improved {
            return order;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perms(k: usize) -> Vec<Vec<usize>> {
        fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == used.len() {
                out.push(cur.clone());
                return;
            }
            for j in 0..used.len() {
                if !used[j] {
                    used[j] = true;
                    cur.push(j);
                    rec(cur, used, out);
                    cur.pop();
                    used[j] = false;
                }
            }
        }
        let mut out = vec![];
        rec(&mut vec![], &mut vec![false; k], &mut out);
        out
    }

    fn planar(pts: &[(f64, f64)]) -> impl TourCosts + '_ {
        // Base is pts[0]; nodes are pts[1..].
        let d = move |a: usize, b: usize| {
            let (p, q) = (pts[a], pts[b]);
            ((p.0 - q.0).powi(2) + (p.1 - q.1).powi(2)).sqrt()
        };
        FnCosts {
            k: pts.len() - 1,
            from_base: move |j| d(0, j + 1),
            to_base: move |j| d(j + 1, 0),
            between: move |a, b| d(a + 1, b + 1),
        }
    }

    #[test]
    fn held_karp_matches_permutations() {
        let pts = [(0.0, 0.0), (1.0, 5.0), (4.0, 1.0), (2.0, 2.0), (5.0, 5.0), (0.5, 3.0), (3.0, 4.5)];
        let costs = planar(&pts);
        let hk = held_karp(&costs);
        let brute = perms(6)
            .iter()
            .map(|p| costs.cost_of(p))
            .fold(f64::INFINITY, f64::min);
        assert!((hk.cost - brute).abs() < 1e-9);
    }

    #[test]
    fn lexicographic_tie_break_picks_smaller_direction() {
        // Square: both directions cost the same.
        let pts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let hk = held_karp(&planar(&pts));
        assert_eq!(hk.order, vec![0, 1, 2]);
    }

    #[test]
    fn triangle_avoids_long_edge() {
        // Nodes a, b, c with one very long edge a-c; from_base symmetric.
        let big = 100.0;
        let m = [[0.0, 1.0, big], [1.0, 0.0, 1.0], [big, 1.0, 0.0]];
        let costs = FnCosts {
            k: 3,
            from_base: |_| 1.0,
            to_base: |_| 1.0,
            between: |a: usize, b: usize| m[a][b],
        };
        let hk = held_karp(&costs);
        assert_eq!(hk.cost, 4.0);
        assert_eq!(hk.order[1], 1, "b must sit between a and c");
    }

    #[test]
    fn local_search_never_beats_held_karp() {
        let pts: Vec<(f64, f64)> = (0..14)
            .map(|i| {
                let t = i as f64;
                ((t * 7.3).sin() * 10.0, (t * 3.1).cos() * 10.0)
            })
            .collect();
        let costs = planar(&pts);
        let hk = held_karp(&costs);
        let ls = improve(&costs, nearest_neighbour(&costs));
        assert!(hk.cost <= costs.cost_of(&ls) + 1e-9);
        let st = shortest_tour(&costs);
        assert!(st.exact);
        assert_eq!(st.cost, hk.cost);
    }
}
