//! The mixed-integer formulation: arc variables `x(i,k)` over parking
//! locations and the depot, service variables `y(i,j)` for admissible
//! (spot, set) pairs, and integer package-flow variables `v(i,k)` that
//! eliminate subtours.
//!
//! Rows carry stable tags (`eq2.depart`, `eq7.flow.source`,
//! `vi.claim4.3`, ...) so callers can find them without relying on order.

mod lp;
mod solution;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::instance::Instance;
use crate::servicesets::{ServiceSetCatalog, SetRules};
use crate::{Error, Result, TOL};

pub use lp::{export_lp, parse_lp};
pub use solution::{evaluate_solution, same_time, Breakdown, ServedSet, Solution, Stop, Violation};
pub(crate) use solution::structural_violations;

/// Optional rows and the variable reduction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// A parked-at customer location serves that customer alone.
    pub vi_claim4: bool,
    /// Aggregate of the previous rows: stops equal own-location singletons.
    pub vi_corollary1: bool,
    /// Every arc into a spot implies a set served there.
    pub vi_claim5: bool,
    /// Parking events never outnumber the sets served.
    pub vi_corollary3: bool,
    /// Drop `y(i,j)` when `i` belongs to a multi-customer set `j`.
    pub var_reduction: bool,
}

impl ModelOptions {
    pub fn all() -> Self {
        ModelOptions {
            vi_claim4: true,
            vi_corollary1: true,
            vi_claim5: true,
            vi_corollary3: true,
            var_reduction: true,
        }
    }

    /// Set rules after combining the catalog's own rule with the reduction.
    pub fn rules(&self, cat: &ServiceSetCatalog) -> SetRules {
        SetRules {
            reduced: self.var_reduction || cat.is_reduced(),
        }
    }

    pub(crate) fn flags(&self) -> [(&'static str, bool); 5] {
        [
            ("vi_claim4", self.vi_claim4),
            ("vi_corollary1", self.vi_corollary1),
            ("vi_claim5", self.vi_claim5),
            ("vi_corollary3", self.vi_corollary3),
            ("var_reduction", self.var_reduction),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarKey {
    X(usize, usize),
    /// Parking spot and catalog set index.
    Y(usize, usize),
    V(usize, usize),
}

impl VarKey {
    pub fn name(&self) -> String {
        match *self {
            VarKey::X(i, k) => format!("x_{i}_{k}"),
            VarKey::Y(i, j) => format!("y_{i}_{j}"),
            VarKey::V(i, k) => format!("v_{i}_{k}"),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        let mut parts = name.split('_');
        let head = parts.next()?;
        let a = parts.next()?.parse().ok()?;
        let b = parts.next()?.parse().ok()?;
        if parts.next().is_some() {
            return None;
        }
        match head {
            "x" => Some(VarKey::X(a, b)),
            "y" => Some(VarKey::Y(a, b)),
            "v" => Some(VarKey::V(a, b)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub key: VarKey,
    pub kind: VarKind,
    /// Upper bound; binaries are 1.
    pub upper: f64,
    /// Objective coefficient.
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub tag: String,
    /// `(variable index, coefficient)`, in variable order.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, point: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * point[v]).sum()
    }

    pub fn holds(&self, point: &[f64]) -> bool {
        let l = self.lhs(point);
        match self.sense {
            Sense::Le => l <= self.rhs + TOL,
            Sense::Eq => (l - self.rhs).abs() <= TOL,
            Sense::Ge => l >= self.rhs - TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipModel {
    pub name: String,
    pub options: ModelOptions,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    index: HashMap<VarKey, usize>,
}

/// Variable and row counts without materializing the model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ModelDimensions {
    pub x: u128,
    pub y: u128,
    pub v: u128,
    pub rows: u128,
}

impl ModelDimensions {
    pub fn variables(&self) -> u128 {
        self.x + self.y + self.v
    }
}

impl MipModel {
    pub(crate) fn from_parts(name: String, options: ModelOptions, variables: Vec<Variable>, constraints: Vec<Constraint>) -> Self {
        let index = variables.iter().enumerate().map(|(i, v)| (v.key, i)).collect();
        MipModel {
            name,
            options,
            variables,
            constraints,
            index,
        }
    }

    pub fn var(&self, key: VarKey) -> Option<usize> {
        self.index.get(&key).copied()
    }

    pub fn count(&self, pred: impl Fn(&VarKey) -> bool) -> usize {
        self.variables.iter().filter(|v| pred(&v.key)).count()
    }

    pub fn rows_tagged(&self, prefix: &str) -> impl Iterator<Item = &Constraint> {
        let prefix = prefix.to_string();
        self.constraints.iter().filter(move |c| c.tag.starts_with(&prefix))
    }

    pub fn row(&self, tag: &str) -> Option<&Constraint> {
        self.constraints.iter().find(|c| c.tag == tag)
    }

    pub fn objective(&self, point: &[f64]) -> f64 {
        self.variables.iter().zip(point).map(|(v, x)| v.cost * x).sum()
    }

    /// Tags of rows the point violates, plus bound and integrality
    /// failures reported as `bound.<var>`.
    pub fn check_point(&self, point: &[f64]) -> Vec<String> {
        let mut bad: Vec<String> = self
            .variables
            .iter()
            .zip(point)
            .filter(|(v, &x)| x < -TOL || x > v.upper + TOL || (x - x.round()).abs() > TOL)
            .map(|(v, _)| format!("bound.{}", v.key.name()))
            .collect();
        bad.extend(self.constraints.iter().filter(|c| !c.holds(point)).map(|c| c.tag.clone()));
        bad
    }

    /// Maps a solution onto the model's variables. Package flow on each
    /// arc equals the packages still on board.
    pub fn point_from_solution(&self, cat: &ServiceSetCatalog, sol: &Solution) -> Result<Vec<f64>> {
        let mut point = vec![0.0; self.variables.len()];
        let mut set = |key: VarKey, value: f64| -> Result<()> {
            let v = self
                .var(key)
                .ok_or_else(|| Error::Invalid(format!("solution uses {} which is not in the model", key.name())))?;
            point[v] = value;
            Ok(())
        };
        let n = cat.n() as f64;
        let mut on_board = n;
        let mut at = 0;
        for stop in &sol.stops {
            set(VarKey::X(at, stop.location), 1.0)?;
            set(VarKey::V(at, stop.location), on_board)?;
            for s in &stop.sets {
                let j = cat
                    .find(&s.members)
                    .ok_or_else(|| Error::Invalid(format!("set {:?} is not in the catalog", s.members)))?;
                set(VarKey::Y(stop.location, j), 1.0)?;
                on_board -= s.members.len() as f64;
            }
            at = stop.location;
        }
        set(VarKey::X(at, 0), 1.0)?;
        Ok(point)
    }
}

fn check_options(inst: &Instance, options: &ModelOptions) -> Result<()> {
    if (options.vi_claim4 || options.vi_corollary1) && !inst.parks_at_all_customers() {
        return Err(Error::Unsupported(
            "own-location singleton rows assume every customer location is a parking location".into(),
        ));
    }
    Ok(())
}

/// Builds the formulation. The objective prices `x(i,k)` at
/// `D(i,k) + p_k` and `y(i,j)` at `w(i,j) + f |j|`.
pub fn build_model(inst: &Instance, cat: &ServiceSetCatalog, options: ModelOptions) -> Result<MipModel> {
    check_options(inst, &options)?;
    let rules = options.rules(cat);
    let n = inst.n;
    let costs = cat.costs(inst);
    let spots = cat.spots().to_vec();
    let nodes: Vec<usize> = std::iter::once(0).chain(spots.iter().copied()).collect();

    let mut vars = Vec::new();
    for &i in &nodes {
        for &k in &nodes {
            if i != k {
                vars.push(Variable {
                    key: VarKey::X(i, k),
                    kind: VarKind::Binary,
                    upper: 1.0,
                    cost: inst.drive_and_park(i, k),
                });
            }
        }
    }
    for &i in &spots {
        for (j, s) in cat.sets().iter().enumerate() {
            if rules.admissible(i, &s.members) {
                vars.push(Variable {
                    key: VarKey::Y(i, j),
                    kind: VarKind::Binary,
                    upper: 1.0,
                    cost: costs.get(i, j)? + inst.load_per_package * s.size() as f64,
                });
            }
        }
    }
    for &i in &nodes {
        for &k in &spots {
            if i != k {
                vars.push(Variable {
                    key: VarKey::V(i, k),
                    kind: VarKind::Integer,
                    upper: n as f64,
                    cost: 0.0,
                });
            }
        }
    }
    let index: HashMap<VarKey, usize> = vars.iter().enumerate().map(|(i, v)| (v.key, i)).collect();
    let id = |k: VarKey| index.get(&k).copied();
    let y_at = |i: usize| -> Vec<usize> { (0..cat.len()).filter_map(|j| id(VarKey::Y(i, j))).collect() };

    let mut rows = Vec::new();
    let mut push = |tag: String, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64| {
        let mut terms = terms;
        terms.sort_by_key(|t| t.0);
        rows.push(Constraint { tag, terms, sense, rhs });
    };
    let into = |i: usize| -> Vec<usize> { nodes.iter().filter_map(|&k| id(VarKey::X(k, i))).collect() };
    let out_of = |i: usize| -> Vec<usize> { nodes.iter().filter_map(|&k| id(VarKey::X(i, k))).collect() };
    let ones = |v: Vec<usize>, c: f64| v.into_iter().map(move |i| (i, c));

    push("eq2.depart".into(), ones(out_of(0), 1.0).collect(), Sense::Eq, 1.0);
    push("eq3.return".into(), ones(into(0), 1.0).collect(), Sense::Eq, 1.0);
    for c in 1..=n {
        let terms = spots
            .iter()
            .flat_map(|&k| cat.containing(c).iter().filter_map(move |&j| id(VarKey::Y(k, j))))
            .map(|v| (v, 1.0))
            .collect();
        push(format!("eq4.serve.{c}"), terms, Sense::Eq, 1.0);
    }
    for &i in &spots {
        let terms = ones(into(i), 1.0).chain(ones(out_of(i), -1.0)).collect();
        push(format!("eq5.balance.{i}"), terms, Sense::Eq, 0.0);
    }
    for &i in &spots {
        for j in 0..cat.len() {
            if let Some(y) = id(VarKey::Y(i, j)) {
                let terms = std::iter::once((y, 1.0)).chain(ones(into(i), -1.0)).collect();
                push(format!("eq6.link.{i}.{j}"), terms, Sense::Le, 0.0);
            }
        }
    }
    let source = spots.iter().filter_map(|&k| id(VarKey::V(0, k))).map(|v| (v, 1.0)).collect();
    push("eq7.flow.source".into(), source, Sense::Eq, n as f64);
    for &i in &nodes {
        for &k in &spots {
            if let (Some(v), Some(x)) = (id(VarKey::V(i, k)), id(VarKey::X(i, k))) {
                push(format!("eq8.flow.cap.{i}.{k}"), vec![(v, 1.0), (x, -(n as f64))], Sense::Le, 0.0);
            }
        }
    }
    for &i in &spots {
        let mut terms: Vec<(usize, f64)> = nodes
            .iter()
            .filter_map(|&k| id(VarKey::V(k, i)))
            .map(|v| (v, 1.0))
            .chain(spots.iter().filter_map(|&k| id(VarKey::V(i, k))).map(|v| (v, -1.0)))
            .collect();
        terms.extend(
            (0..cat.len()).filter_map(|j| id(VarKey::Y(i, j)).map(|y| (y, -(cat.sets()[j].size() as f64)))),
        );
        push(format!("eq9.flow.conserve.{i}"), terms, Sense::Eq, 0.0);
    }

    let singleton = |i: usize| cat.find(&[i]).and_then(|j| id(VarKey::Y(i, j)));
    if options.vi_claim4 {
        for &i in &spots {
            let mut terms: Vec<(usize, f64)> = ones(into(i), 1.0).collect();
            terms.extend(singleton(i).map(|y| (y, -1.0)));
            push(format!("vi.claim4.{i}"), terms, Sense::Eq, 0.0);
        }
    }
    if options.vi_corollary1 {
        let mut terms: Vec<(usize, f64)> = spots.iter().flat_map(|&i| ones(into(i), 1.0)).collect();
        terms.extend(spots.iter().filter_map(|&i| singleton(i)).map(|y| (y, -1.0)));
        push("vi.corollary1".into(), terms, Sense::Eq, 0.0);
    }
    if options.vi_claim5 {
        for &i in &spots {
            for &k in &nodes {
                if let Some(x) = id(VarKey::X(k, i)) {
                    let terms = std::iter::once((x, 1.0)).chain(ones(y_at(i), -1.0)).collect();
                    push(format!("vi.claim5.{k}.{i}"), terms, Sense::Le, 0.0);
                }
            }
        }
    }
    if options.vi_corollary3 {
        let mut terms: Vec<(usize, f64)> = spots.iter().flat_map(|&i| ones(into(i), 1.0)).collect();
        terms.extend(spots.iter().flat_map(|&i| ones(y_at(i), -1.0)));
        push("vi.corollary3".into(), terms, Sense::Le, 0.0);
    }

    let name = inst.name.clone().unwrap_or_else(|| format!("cdpp-n{n}"));
    Ok(MipModel::from_parts(name, options, vars, rows))
}

/// Counts the variables and rows [`build_model`] would create. Only the
/// catalog is walked, so this is cheap even when the model itself would
/// not fit in memory.
pub fn model_dimensions(inst: &Instance, cat: &ServiceSetCatalog, options: ModelOptions) -> Result<ModelDimensions> {
    check_options(inst, &options)?;
    let rules = options.rules(cat);
    let m = cat.spots().len() as u128;
    let n = inst.n as u128;
    let x = (m + 1) * m;
    let v = m * m;
    let y: u128 = cat
        .spots()
        .iter()
        .map(|&i| cat.sets().iter().filter(|s| rules.admissible(i, &s.members)).count() as u128)
        .sum();
    let mut rows = 2 + n + m + y + 1 + v + m;
    if options.vi_claim4 {
        rows += m;
    }
    if options.vi_corollary1 {
        rows += 1;
    }
    if options.vi_claim5 {
        rows += m * m;
    }
    if options.vi_corollary3 {
        rows += 1;
    }
    Ok(ModelDimensions { x, y, v, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_grid_instance, GridParams, Matrix};
    use crate::servicesets::enumerate_catalog;

    fn two_customers(q: usize) -> Instance {
        let drive = Matrix::from_rows("d", &[vec![0.0, 3.0, 4.0], vec![3.0, 0.0, 2.0], vec![4.0, 2.0, 0.0]]).unwrap();
        let walk = Matrix::from_rows("w", &[vec![0.0, 5.0], vec![5.0, 0.0]]).unwrap();
        Instance::new(drive, walk, vec![1.0, 1.5], Some(q), 0.0).unwrap()
    }

    #[test]
    fn two_customer_counts() {
        let inst = two_customers(1);
        let cat = enumerate_catalog(&inst).unwrap();
        let m = build_model(&inst, &cat, ModelOptions::all()).unwrap();
        // Arcs over {0,1,2} minus loops; flows exclude arcs into the depot.
        assert_eq!(m.count(|k| matches!(k, VarKey::X(..))), 6);
        assert_eq!(m.count(|k| matches!(k, VarKey::Y(..))), 4);
        assert_eq!(m.count(|k| matches!(k, VarKey::V(..))), 4);
        let dims = model_dimensions(&inst, &cat, ModelOptions::all()).unwrap();
        assert_eq!(dims.variables(), m.variables.len() as u128);
        assert_eq!(dims.rows, m.constraints.len() as u128);
    }

    #[test]
    fn dimensions_agree_for_every_option_mix() {
        let inst = two_customers(2);
        let cat = enumerate_catalog(&inst).unwrap();
        for bits in 0..32u32 {
            let o = ModelOptions {
                vi_claim4: bits & 1 != 0,
                vi_corollary1: bits & 2 != 0,
                vi_claim5: bits & 4 != 0,
                vi_corollary3: bits & 8 != 0,
                var_reduction: bits & 16 != 0,
            };
            let m = build_model(&inst, &cat, o).unwrap();
            let d = model_dimensions(&inst, &cat, o).unwrap();
            assert_eq!((d.x + d.y + d.v, d.rows), (m.variables.len() as u128, m.constraints.len() as u128));
        }
    }

    #[test]
    fn claim4_rows_have_expected_shape() {
        let inst = two_customers(2);
        let cat = enumerate_catalog(&inst).unwrap();
        let m = build_model(&inst, &cat, ModelOptions { vi_claim4: true, ..Default::default() }).unwrap();
        let row = m.row("vi.claim4.1").unwrap();
        let names: Vec<(String, f64)> = row.terms.iter().map(|&(v, c)| (m.variables[v].key.name(), c)).collect();
        let j = cat.find(&[1]).unwrap();
        assert!(names.contains(&("x_0_1".into(), 1.0)));
        assert!(names.contains(&("x_2_1".into(), 1.0)));
        assert!(names.contains(&(format!("y_1_{j}"), -1.0)));
        assert_eq!(row.sense, Sense::Eq);
        assert_eq!(row.rhs, 0.0);
    }

    #[test]
    fn own_location_rows_need_full_parking() {
        let mut inst = two_customers(2);
        inst.parking_locations = vec![1];
        let cat = enumerate_catalog(&inst).unwrap();
        let err = build_model(&inst, &cat, ModelOptions { vi_claim4: true, ..Default::default() });
        assert!(matches!(err, Err(Error::Unsupported(_))));
        assert!(build_model(&inst, &cat, ModelOptions { vi_claim5: true, ..Default::default() }).is_ok());
    }

    #[test]
    fn solution_point_satisfies_every_row() {
        let g = gen_grid_instance(&GridParams::unit(2, 2).with_park_time(0.5), true).unwrap();
        let inst = &g.instance;
        let cat = enumerate_catalog(inst).unwrap();
        let m = build_model(inst, &cat, ModelOptions::all()).unwrap();
        let sol = Solution::from_stops(
            inst,
            vec![
                Stop::new(inst, 1, &[vec![1], vec![2]]).unwrap(),
                Stop::new(inst, 3, &[vec![3], vec![4]]).unwrap(),
            ],
        )
        .unwrap();
        let point = m.point_from_solution(&cat, &sol).unwrap();
        assert!(m.check_point(&point).is_empty(), "{:?}", m.check_point(&point));
        assert!((m.objective(&point) - sol.total).abs() < 1e-9);
    }

    #[test]
    fn subtour_point_is_rejected() {
        let g = gen_grid_instance(&GridParams::unit(2, 1), true).unwrap();
        let inst = &g.instance;
        let cat = enumerate_catalog(inst).unwrap();
        let m = build_model(inst, &cat, ModelOptions::default()).unwrap();
        // Tour 0-1-0 plus a detached cycle 2-4-2, every customer served.
        let mut point = vec![0.0; m.variables.len()];
        for key in [VarKey::X(0, 1), VarKey::X(1, 0), VarKey::X(2, 4), VarKey::X(4, 2)] {
            point[m.var(key).unwrap()] = 1.0;
        }
        for c in 1..=4 {
            let spot = if c == 3 { 4 } else { c };
            point[m.var(VarKey::Y(spot, cat.find(&[c]).unwrap())).unwrap()] = 1.0;
        }
        point[m.var(VarKey::V(0, 1)).unwrap()] = 4.0;
        let bad = m.check_point(&point);
        assert!(bad.iter().any(|t| t.starts_with("eq9.flow.conserve")), "{bad:?}");
    }
}
