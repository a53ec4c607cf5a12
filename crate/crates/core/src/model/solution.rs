use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::servicesets::{walk_order_cost, walk_tour};
use crate::{Error, Result, TOL};

/// One walking tour: the customers served and the order they are visited.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServedSet {
    /// Customer ids, ascending.
    pub members: Vec<usize>,
    pub order: Vec<usize>,
}

impl ServedSet {
    /// Set served with its cheapest walking order from `spot`.
    pub fn optimal(inst: &Instance, spot: usize, members: &[usize]) -> Result<Self> {
        let mut members = members.to_vec();
        members.sort_unstable();
        let (_, order) = walk_tour(inst, spot, &members)?;
        Ok(ServedSet { members, order })
    }
}

/// A parking event and the sets served from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Stop {
    pub location: usize,
    pub sets: Vec<ServedSet>,
}

impl Stop {
    pub fn new(inst: &Instance, location: usize, sets: &[Vec<usize>]) -> Result<Self> {
        Ok(Stop {
            location,
            sets: sets
                .iter()
                .map(|m| ServedSet::optimal(inst, location, m))
                .collect::<Result<_>>()?,
        })
    }

    pub fn customers(&self) -> usize {
        self.sets.iter().map(|s| s.members.len()).sum()
    }
}

/// Minutes spent per activity over the whole tour.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Breakdown {
    pub park_min: f64,
    pub drive_min: f64,
    pub walk_min: f64,
    pub load_min: f64,
}

impl Breakdown {
    pub fn total(&self) -> f64 {
        self.park_min + self.drive_min + self.walk_min + self.load_min
    }
}

/// A complete delivery tour: depot, the stops in order, depot.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub stops: Vec<Stop>,
    pub breakdown: Breakdown,
    pub total: f64,
}

impl Solution {
    /// Builds a solution and fills in its cost; fails on infeasibility.
    pub fn from_stops(inst: &Instance, stops: Vec<Stop>) -> Result<Self> {
        let mut sol = Solution {
            stops,
            breakdown: Breakdown::default(),
            total: 0.0,
        };
        let b = evaluate_solution(inst, &sol)?;
        sol.breakdown = b;
        sol.total = b.total();
        Ok(sol)
    }

    /// Re-prices the same stops and sets on another instance with the same
    /// customers, re-optimizing walking orders.
    pub fn recost(&self, inst: &Instance) -> Result<Self> {
        let stops = self
            .stops
            .iter()
            .map(|s| {
                let sets: Vec<Vec<usize>> = s.sets.iter().map(|x| x.members.clone()).collect();
                Stop::new(inst, s.location, &sets)
            })
            .collect::<Result<_>>()?;
        Solution::from_stops(inst, stops)
    }

    pub fn stop_locations(&self) -> Vec<usize> {
        self.stops.iter().map(|s| s.location).collect()
    }

    pub fn set_count(&self) -> usize {
        self.stops.iter().map(|s| s.sets.len()).sum()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SolutionFile::from(self)).expect("solution serializes")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let file: SolutionFile = serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        file.try_into()
    }
}

/// Wire layout: `{stops[], served[][], breakdown{}, total}`.
#[derive(Debug, Serialize, Deserialize)]
struct SolutionFile {
    stops: Vec<usize>,
    served: Vec<Vec<ServedSet>>,
    breakdown: Breakdown,
    total: f64,
}

impl From<&Solution> for SolutionFile {
    fn from(sol: &Solution) -> Self {
        SolutionFile {
            stops: sol.stop_locations(),
            served: sol.stops.iter().map(|s| s.sets.clone()).collect(),
            breakdown: sol.breakdown,
            total: sol.total,
        }
    }
}

impl TryFrom<SolutionFile> for Solution {
    type Error = Error;

    fn try_from(f: SolutionFile) -> Result<Self> {
        if f.stops.len() != f.served.len() {
            return Err(Error::Dimension {
                what: "served",
                expected: f.stops.len(),
                found: f.served.len(),
            });
        }
        Ok(Solution {
            stops: f
                .stops
                .into_iter()
                .zip(f.served)
                .map(|(location, sets)| Stop { location, sets })
                .collect(),
            breakdown: f.breakdown,
            total: f.total,
        })
    }
}

/// A reason a solution is not a valid delivery tour.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Missing(usize),
    Duplicated(usize),
    UnknownCustomer(usize),
    NotParkingLocation(usize),
    RepeatedStop(usize),
    OverCapacity { stop: usize, members: Vec<usize> },
    BadOrder { stop: usize, members: Vec<usize> },
    NotInCatalog { members: Vec<usize> },
    Inadmissible { stop: usize, members: Vec<usize> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Missing(c) => write!(f, "customer {c} is not served"),
            Violation::Duplicated(c) => write!(f, "customer {c} is served more than once"),
            Violation::UnknownCustomer(c) => write!(f, "unknown customer id {c}"),
            Violation::NotParkingLocation(l) => write!(f, "location {l} is not a parking location"),
            Violation::RepeatedStop(l) => write!(f, "parking location {l} is visited more than once"),
            Violation::OverCapacity { stop, members } => {
                write!(f, "set {members:?} at stop {stop} exceeds the carrier capacity")
            }
            Violation::BadOrder { stop, members } => {
                write!(f, "walking order at stop {stop} is not a permutation of {members:?}")
            }
            Violation::NotInCatalog { members } => write!(f, "set {members:?} is not in the catalog"),
            Violation::Inadmissible { stop, members } => {
                write!(f, "set {members:?} may not be served from its member location {stop}")
            }
        }
    }
}

/// Structural checks that do not need a catalog.
pub(crate) fn structural_violations(inst: &Instance, sol: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen_stop = vec![false; inst.n + 1];
    let mut served = vec![0usize; inst.n + 1];
    for stop in &sol.stops {
        let l = stop.location;
        if inst.parking_locations.binary_search(&l).is_err() {
            out.push(Violation::NotParkingLocation(l));
        } else if std::mem::replace(&mut seen_stop[l], true) {
            out.push(Violation::RepeatedStop(l));
        }
        for set in &stop.sets {
            let mut sorted_order = set.order.clone();
            sorted_order.sort_unstable();
            let mut members = set.members.clone();
            members.sort_unstable();
            if sorted_order != members || members.windows(2).any(|w| w[0] == w[1]) {
                out.push(Violation::BadOrder {
                    stop: l,
                    members: set.members.clone(),
                });
            }
            let mut known = true;
            for &c in &members {
                if c == 0 || c > inst.n {
                    out.push(Violation::UnknownCustomer(c));
                    known = false;
                } else {
                    served[c] += 1;
                }
            }
            if known && !inst.fits(&members) {
                out.push(Violation::OverCapacity {
                    stop: l,
                    members: set.members.clone(),
                });
            }
        }
    }
    for c in inst.customers() {
        match served[c] {
            0 => out.push(Violation::Missing(c)),
            1 => {}
            _ => out.push(Violation::Duplicated(c)),
        }
    }
    out
}

/// Prices a solution: driving legs, one search time per stop, the walking
/// tours in their stated order and `n * f` loading. Infeasible solutions
/// are rejected with every violation listed.
pub fn evaluate_solution(inst: &Instance, sol: &Solution) -> Result<Breakdown> {
    let violations = structural_violations(inst, sol);
    if !violations.is_empty() {
        return Err(Error::InfeasibleSolution(violations));
    }
    let mut b = Breakdown {
        load_min: inst.total_load(),
        ..Breakdown::default()
    };
    let mut at = 0;
    for stop in &sol.stops {
        b.drive_min += inst.drive(at, stop.location);
        b.park_min += inst.park(stop.location);
        for set in &stop.sets {
            b.walk_min += walk_order_cost(inst, stop.location, &set.order);
        }
        at = stop.location;
    }
    b.drive_min += inst.drive(at, 0);
    Ok(b)
}

/// True when two totals agree within the crate tolerance.
pub fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}
