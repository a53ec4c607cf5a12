//! Complete-grid analysis: the value of the tour that parks at every
//! customer, the parking-time thresholds below which that tour is optimal,
//! and constructed tours that beat it above the thresholds.
//!
//! Grid points are `(a, b)` with `1 <= a, b <= s`, `s = sqrt_n`, and the
//! depot at `(0, 0)`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::exact::{solve_exact, ExactOptions, SearchBudget, SolveStatus, MAX_SPOTS};
use crate::instance::{gen_grid_instance, GridInstance, GridParams};
use crate::model::{Solution, Stop};
use crate::par::{self, Parallelism};
use crate::servicesets::enumerate_catalog;
use crate::{Error, Result};

fn grid(gp: &GridParams) -> Result<GridInstance> {
    gen_grid_instance(gp, true)
}

/// Rectilinear blocks from the depot to the nearest customer, scanned
/// over the grid points without building the instance.
pub fn min_distance(gp: &GridParams) -> i64 {
    let s = gp.sqrt_n as i64;
    (1..=s).flat_map(|a| (1..=s).map(move |b| a + b)).min().unwrap_or(0)
}

/// Closed-form completion time of the tour that parks at every customer:
/// `(2 MinDistance + n) l d + n f + n p`.
pub fn tsp_park_all_value(gp: &GridParams) -> Result<f64> {
    gp.validate()?;
    let n = gp.n() as f64;
    let min_d = min_distance(gp) as f64;
    Ok((2.0 * min_d + n) * gp.drive_rate * gp.block_len + n * gp.load + n * gp.park_time)
}

/// Largest parking time at which parking everywhere stays optimal, for
/// carrier capacity 1 to 3.
pub fn threshold_p(q: usize, gp: &GridParams) -> Result<f64> {
    let (l, w, d) = (gp.block_len, gp.walk_rate, gp.drive_rate);
    match q {
        1 | 2 => Ok(l * (2.0 * w - d)),
        3 => Ok(l * (4.0 / 3.0 * w - d)),
        _ => Err(Error::Unsupported(format!("no parking-time threshold is known for capacity {q}"))),
    }
}

/// Serpentine over the `s x rows` block from `(1,1)` to `(1,2)`: row 1
/// left to right, columns `s` down to 2 alternating over rows `2..=rows`,
/// then column 1 from the top back down to row 2.
fn serpentine(s: i64, rows: i64) -> Vec<(i64, i64)> {
    let mut path: Vec<(i64, i64)> = (1..=s).map(|a| (a, 1)).collect();
    for (t, a) in (2..=s).rev().enumerate() {
        if t % 2 == 0 {
            path.extend((2..=rows).map(|b| (a, b)));
        } else {
            path.extend((2..=rows).rev().map(|b| (a, b)));
        }
    }
    path.extend((2..=rows).rev().map(|b| (1, b)));
    path
}

fn singles(g: &GridInstance, path: &[(i64, i64)]) -> Result<Vec<Stop>> {
    path.iter()
        .map(|&(a, b)| {
            let id = g.id_at(a, b);
            Stop::new(&g.instance, id, &[vec![id]])
        })
        .collect()
}

/// The tour that parks at every customer along a serpentine path entering
/// at the customer closest to the depot.
pub fn tsp_park_all(gp: &GridParams) -> Result<Solution> {
    let g = grid(gp)?;
    let s = gp.sqrt_n as i64;
    let stops = singles(&g, &serpentine(s, s))?;
    Solution::from_stops(&g.instance, stops)
}

/// Witness for capacity 2 or less: park along a serpentine over the lower
/// `s - 1` rows and walk from each top-row-minus-one spot to the customer
/// directly above.
pub fn construct_q2(gp: &GridParams) -> Result<Solution> {
    if gp.sqrt_n < 4 {
        return Err(Error::Unsupported("the capacity-2 construction needs a side of at least 4".into()));
    }
    let g = grid(gp)?;
    let s = gp.sqrt_n as i64;
    let stops = serpentine(s, s - 1)
        .into_iter()
        .map(|(a, b)| {
            let id = g.id_at(a, b);
            let mut sets = vec![vec![id]];
            if b == s - 1 {
                sets.push(vec![g.id_at(a, s)]);
            }
            Stop::new(&g.instance, id, &sets)
        })
        .collect::<Result<Vec<_>>>()?;
    Solution::from_stops(&g.instance, stops)
}

/// Closed form of [`construct_q2`].
pub fn construct_q2_value(gp: &GridParams) -> f64 {
    let (n, s) = (gp.n() as f64, gp.sqrt_n as f64);
    (4.0 + n - s) * gp.drive_rate * gp.block_len + (n - s) * gp.park_time + 2.0 * gp.walk_rate * gp.block_len * s + n * gp.load
}

/// Witness for capacity 3: a parking path that leaves out six customers
/// in the top-right corner, served as two walks of three.
pub fn construct_q3(gp: &GridParams) -> Result<Solution> {
    if gp.sqrt_n < 6 {
        return Err(Error::Unsupported("the capacity-3 construction needs a side of at least 6".into()));
    }
    if gp.capacity < 3 {
        return Err(Error::Unsupported("the capacity-3 construction walks sets of three".into()));
    }
    let g = grid(gp)?;
    let s = gp.sqrt_n as i64;
    let id = |a: i64, b: i64| g.id_at(a, b);
    let mut plan: Vec<(i64, i64, Vec<Vec<usize>>)> = Vec::new();
    let mut park = |a: i64, b: i64| plan.push((a, b, vec![vec![id(a, b)]]));

    for a in 1..=s {
        park(a, 1);
    }
    for i in 1..=(s - 4) / 2 {
        for a in (2..=s).rev() {
            park(a, 2 * i);
        }
        for a in 2..=s {
            park(a, 2 * i + 1);
        }
    }
    park(s, s - 2);
    park(s - 1, s - 2);
    let mut with_walk = |a: i64, b: i64, walk: [(i64, i64); 3]| {
        let mut set: Vec<usize> = walk.iter().map(|&(x, y)| id(x, y)).collect();
        set.sort_unstable();
        plan.push((a, b, vec![vec![id(a, b)], set]));
    };
    with_walk(s - 1, s - 1, [(s - 1, s), (s, s), (s, s - 1)]);
    with_walk(s - 2, s - 1, [(s - 2, s), (s - 3, s), (s - 3, s - 1)]);
    let mut park = |a: i64, b: i64| plan.push((a, b, vec![vec![id(a, b)]]));
    park(s - 2, s - 2);
    park(s - 3, s - 2);
    let mut x = s - 4;
    while x >= 2 {
        for b in s - 2..=s {
            park(x, b);
        }
        for b in (s - 2..=s).rev() {
            park(x - 1, b);
        }
        x -= 2;
    }
    for b in (2..=s - 3).rev() {
        park(1, b);
    }

    let stops = plan
        .into_iter()
        .map(|(a, b, sets)| Stop::new(&g.instance, id(a, b), &sets))
        .collect::<Result<Vec<_>>>()?;
    Solution::from_stops(&g.instance, stops)
}

/// Closed form of [`construct_q3`].
pub fn construct_q3_value(gp: &GridParams) -> f64 {
    let n = gp.n() as f64;
    (4.0 + n - 6.0) * gp.block_len * gp.drive_rate + (n - 6.0) * gp.park_time + 8.0 * gp.block_len * gp.walk_rate + n * gp.load
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    TspOptimal,
    TspSuboptimal,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::TspOptimal => "tsp_optimal",
            Regime::TspSuboptimal => "tsp_suboptimal",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub gp: GridParams,
    pub q: usize,
    pub threshold: f64,
    pub p: f64,
    pub tsp_value: f64,
    /// Exact optimum when the grid is small enough to solve.
    pub oracle_value: Option<f64>,
    pub oracle_status: Option<SolveStatus>,
    /// Best tour found that is not the park-everywhere tour.
    #[serde(skip)]
    pub witness: Option<Solution>,
    pub witness_value: Option<f64>,
    pub regime: Regime,
}

/// Evaluates one grid at one parking time: the closed-form tour value,
/// the exact optimum when the grid has at most 16 customers, and the
/// constructed witness when one is defined for this size and capacity.
pub fn analyze(gp: &GridParams, budget: &SearchBudget) -> Result<ThresholdReport> {
    let q = gp.capacity;
    let threshold = threshold_p(q, gp)?;
    let tsp_value = tsp_park_all_value(gp)?;
    let (mut oracle_value, mut oracle_status) = (None, None);
    let mut witness = None;
    if gp.n() <= MAX_SPOTS {
        let g = grid(gp)?;
        let cat = enumerate_catalog(&g.instance)?;
        let r = solve_exact(&g.instance, &cat, &ExactOptions::with_budget(*budget))?;
        oracle_status = Some(r.status);
        oracle_value = r.value();
        witness = r.solution.filter(|s| s.total < tsp_value - 1e-9);
    }
    if witness.is_none() {
        let built = match q {
            1 | 2 if gp.sqrt_n >= 4 => Some(construct_q2(gp)?),
            3 if gp.sqrt_n >= 6 => Some(construct_q3(gp)?),
            _ => None,
        };
        witness = built.filter(|s| s.total < tsp_value - 1e-9);
    }
    let witness_value = witness.as_ref().map(|s| s.total);
    let regime = if witness_value.is_some() {
        Regime::TspSuboptimal
    } else {
        Regime::TspOptimal
    };
    Ok(ThresholdReport {
        gp: *gp,
        q,
        threshold,
        p: gp.park_time,
        tsp_value,
        oracle_value,
        oracle_status,
        witness,
        witness_value,
        regime,
    })
}

/// Runs [`analyze`] for each parking time, in parallel over the values.
pub fn sweep(gp: &GridParams, ps: &[f64], mode: Parallelism, budget: &SearchBudget) -> Result<Vec<ThresholdReport>> {
    par::map(mode, ps, |&p| analyze(&gp.with_park_time(p), budget))
        .into_iter()
        .collect()
}

/// Checks both directions of the threshold statement for each parking
/// time: at or below the threshold the exact optimum equals the
/// park-everywhere value, above it some witness is strictly cheaper.
/// Returns the reports and the parking times where the statement failed.
pub fn verify_claims(gp: &GridParams, ps: &[f64], mode: Parallelism, budget: &SearchBudget) -> Result<(Vec<ThresholdReport>, Vec<f64>)> {
    let reports = sweep(gp, ps, mode, budget)?;
    let failed = reports
        .iter()
        .filter(|r| {
            if r.p <= r.threshold + 1e-12 {
                match r.oracle_value {
                    Some(v) => (v - r.tsp_value).abs() > 1e-6,
                    None => false,
                }
            } else {
                r.regime != Regime::TspSuboptimal
            }
        })
        .map(|r| r.p)
        .collect();
    Ok((reports, failed))
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

/// CSV with columns `p,tsp_value,oracle_value,witness_value,regime`.
pub fn sweep_csv(reports: &[ThresholdReport]) -> String {
    let mut out = String::from("p,tsp_value,oracle_value,witness_value,regime\n");
    for r in reports {
        writeln!(
            out,
            "{:.6},{:.6},{},{},{}",
            r.p,
            r.tsp_value,
            cell(r.oracle_value),
            cell(r.witness_value),
            r.regime.as_str()
        )
        .unwrap();
    }
    out
}
