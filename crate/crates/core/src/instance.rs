//! Problem data: customers, depot, travel-time matrices, parking search
//! times and carrier capacities.
//!
//! Location ids are `0` for the depot and `1..=n` for customers. Parking
//! locations are a subset of the customer locations; the depot is never a
//! parking spot and returning to it costs no search time.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, TOL};

/// Dense square matrix of minutes.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Matrix { dim, data }
    }

    pub fn from_rows(what: &'static str, rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    what,
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.dim.max(1)).take(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Matrix {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: Option<String>,
    /// Number of customers.
    pub n: usize,
    /// Optional planar coordinates, depot first.
    pub coords: Option<Vec<[f64; 2]>>,
    /// Driving minutes over locations `0..=n`.
    pub drive: Matrix,
    /// Walking minutes over customers; row/column `k - 1` is customer `k`.
    pub walk: Matrix,
    /// Search time for parking at location `k`, stored at `k - 1`.
    pub park_time: Vec<f64>,
    /// Packages the carrier can take on one walk; `None` is unbounded.
    pub capacity_count: Option<usize>,
    pub capacity_weight: Option<f64>,
    pub weights: Option<Vec<f64>>,
    pub capacity_volume: Option<f64>,
    pub volumes: Option<Vec<f64>>,
    /// Loading minutes per package.
    pub load_per_package: f64,
    /// Parking locations (customer ids, sorted).
    pub parking_locations: Vec<usize>,
}

impl Instance {
    /// Assembles and structurally checks an instance. Parking defaults to
    /// every customer location.
    pub fn new(drive: Matrix, walk: Matrix, park_time: Vec<f64>, capacity: Option<usize>, load: f64) -> Result<Self> {
        let n = park_time.len();
        let inst = Instance {
            name: None,
            n,
            coords: None,
            drive,
            walk,
            park_time,
            capacity_count: capacity,
            capacity_weight: None,
            weights: None,
            capacity_volume: None,
            volumes: None,
            load_per_package: load,
            parking_locations: (1..=n).collect(),
        };
        inst.check()?;
        Ok(inst)
    }

    #[inline]
    pub fn drive(&self, from: usize, to: usize) -> f64 {
        self.drive.get(from, to)
    }

    /// Walking minutes between two customer locations (ids `>= 1`).
    #[inline]
    pub fn walk(&self, from: usize, to: usize) -> f64 {
        debug_assert!(from >= 1 && to >= 1, "walking is defined between customer locations");
        self.walk.get(from - 1, to - 1)
    }

    /// Search time for parking at `loc`; zero at the depot.
    #[inline]
    pub fn park(&self, loc: usize) -> f64 {
        if loc == 0 {
            0.0
        } else {
            self.park_time[loc - 1]
        }
    }

    /// Time to drive from `from` to `to` and park there.
    #[inline]
    pub fn drive_and_park(&self, from: usize, to: usize) -> f64 {
        self.drive(from, to) + self.park(to)
    }

    pub fn customers(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }

    /// True when every customer location may be used for parking.
    pub fn parks_at_all_customers(&self) -> bool {
        self.parking_locations.len() == self.n && self.parking_locations.iter().copied().eq(1..=self.n)
    }

    /// Loading time of the whole tour, which is independent of routing.
    pub fn total_load(&self) -> f64 {
        self.n as f64 * self.load_per_package
    }

    /// Whether the customers can be carried on a single walk.
    pub fn fits(&self, members: &[usize]) -> bool {
        if let Some(q) = self.capacity_count {
            if members.len() > q {
                return false;
            }
        }
        if let (Some(cap), Some(w)) = (self.capacity_weight, &self.weights) {
            if members.iter().map(|&c| w[c - 1]).sum::<f64>() > cap + TOL {
                return false;
            }
        }
        if let (Some(cap), Some(v)) = (self.capacity_volume, &self.volumes) {
            if members.iter().map(|&c| v[c - 1]).sum::<f64>() > cap + TOL {
                return false;
            }
        }
        true
    }

    pub fn with_park_times(&self, p: impl Fn(usize) -> f64) -> Instance {
        let mut out = self.clone();
        for (k, slot) in out.park_time.iter_mut().enumerate() {
            *slot = p(k + 1);
        }
        out
    }

    pub fn with_uniform_park_time(&self, p: f64) -> Instance {
        self.with_park_times(|_| p)
    }

    /// Structural checks: dimensions, signs, diagonals and parking ids.
    pub fn check(&self) -> Result<()> {
        let n = self.n;
        if n == 0 {
            return Err(Error::Invalid("instance has no customers".into()));
        }
        if self.drive.dim() != n + 1 {
            return Err(Error::Dimension {
                what: "drive matrix",
                expected: n + 1,
                found: self.drive.dim(),
            });
        }
        if self.walk.dim() != n {
            return Err(Error::Dimension {
                what: "walk matrix",
                expected: n,
                found: self.walk.dim(),
            });
        }
        if self.park_time.len() != n {
            return Err(Error::Dimension {
                what: "park_time",
                expected: n,
                found: self.park_time.len(),
            });
        }
        check_matrix("drive matrix", &self.drive)?;
        check_matrix("walk matrix", &self.walk)?;
        for (k, &p) in self.park_time.iter().enumerate() {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::NegativeTime {
                    what: "park_time",
                    index: (k + 1, k + 1),
                    value: p,
                });
            }
        }
        if !(self.load_per_package >= 0.0) {
            return Err(Error::NegativeTime {
                what: "load time",
                index: (0, 0),
                value: self.load_per_package,
            });
        }
        if let Some(c) = &self.coords {
            if c.len() != n + 1 {
                return Err(Error::Dimension {
                    what: "coords",
                    expected: n + 1,
                    found: c.len(),
                });
            }
        }
        for (what, v) in [("weights", &self.weights), ("volumes", &self.volumes)] {
            if let Some(v) = v {
                if v.len() != n {
                    return Err(Error::Dimension {
                        what,
                        expected: n,
                        found: v.len(),
                    });
                }
            }
        }
        if self.capacity_count == Some(0) {
            return Err(Error::Invalid("capacity q must be at least 1".into()));
        }
        if self.parking_locations.is_empty() {
            return Err(Error::Invalid("no parking locations".into()));
        }
        if self.parking_locations.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("parking locations must be sorted and distinct".into()));
        }
        if let Some(&bad) = self.parking_locations.iter().find(|&&l| l == 0 || l > n) {
            return Err(Error::Invalid(format!(
                "parking location {bad} is not a customer location"
            )));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_instance()
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from(self)).expect("instance serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json_string()).map_err(|e| Error::io(path, e))
    }
}

fn check_matrix(what: &'static str, m: &Matrix) -> Result<()> {
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let v = m.get(i, j);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::NegativeTime {
                    what,
                    index: (i, j),
                    value: v,
                });
            }
        }
        if m.get(i, i) != 0.0 {
            return Err(Error::Invalid(format!("{what} has nonzero diagonal at {i}")));
        }
    }
    Ok(())
}

/// On-disk JSON layout.
#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<[f64; 2]>>,
    drive: Vec<Vec<f64>>,
    walk: Vec<Vec<f64>>,
    park_time: Vec<f64>,
    #[serde(default)]
    q: Option<usize>,
    #[serde(default)]
    f: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    volumes: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap_weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cap_volume: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parking_locations: Option<Vec<usize>>,
}

impl InstanceFile {
    fn into_instance(self) -> Result<Instance> {
        let n = self.n;
        if self.drive.len() != n + 1 {
            return Err(Error::Dimension {
                what: "drive matrix",
                expected: n + 1,
                found: self.drive.len(),
            });
        }
        let drive = Matrix::from_rows("drive matrix", &self.drive)?;
        // Walking rows may include the depot; it is dropped.
        let walk = match self.walk.len() {
            len if len == n => Matrix::from_rows("walk matrix", &self.walk)?,
            len if len == n + 1 => {
                let full = Matrix::from_rows("walk matrix", &self.walk)?;
                Matrix::from_fn(n, |i, j| full.get(i + 1, j + 1))
            }
            len => {
                return Err(Error::Dimension {
                    what: "walk matrix",
                    expected: n,
                    found: len,
                })
            }
        };
        let mut parking_locations = self.parking_locations.unwrap_or_else(|| (1..=n).collect());
        parking_locations.sort_unstable();
        let inst = Instance {
            name: self.name,
            n,
            coords: self.coords,
            drive,
            walk,
            park_time: self.park_time,
            capacity_count: self.q,
            capacity_weight: self.cap_weight,
            weights: self.weights,
            capacity_volume: self.cap_volume,
            volumes: self.volumes,
            load_per_package: self.f,
            parking_locations,
        };
        inst.check()?;
        Ok(inst)
    }
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            name: inst.name.clone(),
            n: inst.n,
            coords: inst.coords.clone(),
            drive: inst.drive.rows(),
            walk: inst.walk.rows(),
            park_time: inst.park_time.clone(),
            q: inst.capacity_count,
            f: inst.load_per_package,
            weights: inst.weights.clone(),
            volumes: inst.volumes.clone(),
            cap_weight: inst.capacity_weight,
            cap_volume: inst.capacity_volume,
            parking_locations: if inst.parks_at_all_customers() {
                None
            } else {
                Some(inst.parking_locations.clone())
            },
        }
    }
}

/// Triangle-inequality violations of one matrix.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TriangleViolations {
    pub count: usize,
    pub worst_excess: f64,
    /// `(a, b, c)` with `M(a,c) - M(a,b) - M(b,c)` maximal, in location ids.
    pub worst: Option<(usize, usize, usize)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Asymmetry {
    pub count: usize,
    pub max_gap: f64,
}

/// Findings of [`validate_instance`]. Nothing here makes an instance unusable.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub drive_triangle: TriangleViolations,
    pub walk_triangle: TriangleViolations,
    pub drive_asymmetry: Asymmetry,
    pub walk_asymmetry: Asymmetry,
}

impl ValidationReport {
    pub fn is_metric(&self) -> bool {
        self.drive_triangle.count == 0 && self.walk_triangle.count == 0
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "drive: {} triangle violations (worst excess {:.6}), {} asymmetric pairs",
            self.drive_triangle.count, self.drive_triangle.worst_excess, self.drive_asymmetry.count
        )?;
        write!(
            f,
            "walk:  {} triangle violations (worst excess {:.6}), {} asymmetric pairs",
            self.walk_triangle.count, self.walk_triangle.worst_excess, self.walk_asymmetry.count
        )
    }
}

/// Reports metric violations and asymmetries. Returns an error only when a
/// single customer's package cannot be carried at all.
pub fn validate_instance(inst: &Instance) -> Result<ValidationReport> {
    for k in inst.customers() {
        if let (Some(cap), Some(w)) = (inst.capacity_weight, &inst.weights) {
            if w[k - 1] > cap + TOL {
                return Err(Error::CapacityInfeasible {
                    customer: k,
                    resource: "weight",
                    demand: w[k - 1],
                    capacity: cap,
                });
            }
        }
        if let (Some(cap), Some(v)) = (inst.capacity_volume, &inst.volumes) {
            if v[k - 1] > cap + TOL {
                return Err(Error::CapacityInfeasible {
                    customer: k,
                    resource: "volume",
                    demand: v[k - 1],
                    capacity: cap,
                });
            }
        }
    }
    Ok(ValidationReport {
        drive_triangle: triangle(&inst.drive, 0),
        walk_triangle: triangle(&inst.walk, 1),
        drive_asymmetry: asymmetry(&inst.drive),
        walk_asymmetry: asymmetry(&inst.walk),
    })
}

fn triangle(m: &Matrix, id_offset: usize) -> TriangleViolations {
    let mut out = TriangleViolations::default();
    let d = m.dim();
    for a in 0..d {
        for b in 0..d {
            if b == a {
                continue;
            }
            let ab = m.get(a, b);
            for c in 0..d {
                if c == a || c == b {
                    continue;
                }
                let excess = m.get(a, c) - ab - m.get(b, c);
                if excess > TOL {
                    out.count += 1;
                    if excess > out.worst_excess {
                        out.worst_excess = excess;
                        out.worst = Some((a + id_offset, b + id_offset, c + id_offset));
                    }
                }
            }
        }
    }
    out
}

fn asymmetry(m: &Matrix) -> Asymmetry {
    let mut out = Asymmetry::default();
    for i in 0..m.dim() {
        for j in i + 1..m.dim() {
            let gap = (m.get(i, j) - m.get(j, i)).abs();
            if gap > TOL {
                out.count += 1;
                out.max_gap = out.max_gap.max(gap);
            }
        }
    }
    out
}

/// Parameters of the random geometric generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeoParams {
    pub n: usize,
    pub seed: u64,
    /// Driving minutes per unit of Euclidean distance.
    pub drive_factor: f64,
    /// Walking minutes per unit of Euclidean distance.
    pub walk_factor: f64,
    pub park_time: f64,
    pub capacity: Option<usize>,
    pub load: f64,
}

impl Default for GeoParams {
    fn default() -> Self {
        GeoParams {
            n: 8,
            seed: 1,
            drive_factor: 10.0,
            walk_factor: 30.0,
            park_time: 2.0,
            capacity: Some(3),
            load: 0.0,
        }
    }
}

/// Depot and customers uniform in the unit square; times are Euclidean
/// distance times the respective rate.
pub fn gen_geo_instance(params: &GeoParams) -> Result<Instance> {
    if params.n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    if params.walk_factor < params.drive_factor {
        return Err(Error::Invalid("walking rate must not be below the driving rate".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let pts: Vec<[f64; 2]> = (0..=params.n).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    let dist = |a: usize, b: usize| {
        if a == b {
            0.0
        } else {
            let (dx, dy) = (pts[a][0] - pts[b][0], pts[a][1] - pts[b][1]);
            (dx * dx + dy * dy).sqrt()
        }
    };
    let drive = Matrix::from_fn(params.n + 1, |i, j| dist(i, j) * params.drive_factor);
    let walk = Matrix::from_fn(params.n, |i, j| dist(i + 1, j + 1) * params.walk_factor);
    let mut inst = Instance::new(drive, walk, vec![params.park_time; params.n], params.capacity, params.load)?;
    inst.name = Some(format!("geo-n{}-s{}", params.n, params.seed));
    inst.coords = Some(pts);
    Ok(inst)
}

/// A complete `sqrt_n x sqrt_n` grid of customers with uniform parking time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub sqrt_n: usize,
    /// Block length in distance units.
    pub block_len: f64,
    /// Driving minutes per distance unit.
    pub drive_rate: f64,
    /// Walking minutes per distance unit.
    pub walk_rate: f64,
    pub park_time: f64,
    pub load: f64,
    pub capacity: usize,
}

impl GridParams {
    pub fn unit(sqrt_n: usize, capacity: usize) -> Self {
        GridParams {
            sqrt_n,
            block_len: 1.0,
            drive_rate: 1.0,
            walk_rate: 1.0,
            park_time: 0.0,
            load: 0.0,
            capacity,
        }
    }

    pub fn n(&self) -> usize {
        self.sqrt_n * self.sqrt_n
    }

    pub fn with_park_time(mut self, p: f64) -> Self {
        self.park_time = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.sqrt_n < 2 || self.sqrt_n % 2 != 0 {
            return Err(Error::Invalid(format!(
                "grid side {} must be even and at least 2",
                self.sqrt_n
            )));
        }
        if !(self.block_len > 0.0 && self.drive_rate > 0.0 && self.walk_rate > 0.0) {
            return Err(Error::Invalid("block length and rates must be positive".into()));
        }
        if self.drive_rate > self.walk_rate {
            return Err(Error::Invalid("driving rate must not exceed walking rate".into()));
        }
        if !(self.park_time >= 0.0 && self.load >= 0.0) {
            return Err(Error::Invalid("parking and loading times must be nonnegative".into()));
        }
        if self.capacity == 0 {
            return Err(Error::Invalid("capacity must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridInstance {
    pub instance: Instance,
    pub params: GridParams,
    /// Integer grid points by location id; index 0 is the depot.
    pub points: Vec<(i64, i64)>,
    /// Rectilinear block distance from the depot to the closest customer.
    pub min_distance: i64,
}

impl GridInstance {
    /// Customer id at grid point `(a, b)`, `1 <= a, b <= sqrt_n`.
    pub fn id_at(&self, a: i64, b: i64) -> usize {
        let s = self.params.sqrt_n as i64;
        debug_assert!((1..=s).contains(&a) && (1..=s).contains(&b));
        ((b - 1) * s + a) as usize
    }

    pub fn blocks(&self, i: usize, k: usize) -> i64 {
        let (p, q) = (self.points[i], self.points[k]);
        (p.0 - q.0).abs() + (p.1 - q.1).abs()
    }
}

/// Builds the grid instance. Customer `(a, b)` gets id `(b-1)*sqrt_n + a`.
/// With `depot_at_origin` the depot sits at `(0, 0)`; otherwise it sits
/// beside the middle of the left edge at `(0, sqrt_n/2)`.
pub fn gen_grid_instance(gp: &GridParams, depot_at_origin: bool) -> Result<GridInstance> {
    gp.validate()?;
    let s = gp.sqrt_n as i64;
    let depot = if depot_at_origin { (0, 0) } else { (0, s / 2) };
    let mut points = vec![depot];
    for b in 1..=s {
        for a in 1..=s {
            points.push((a, b));
        }
    }
    let blocks = |i: usize, k: usize| {
        let (p, q) = (points[i], points[k]);
        ((p.0 - q.0).abs() + (p.1 - q.1).abs()) as f64
    };
    let n = gp.n();
    let drive = Matrix::from_fn(n + 1, |i, k| blocks(i, k) * gp.block_len * gp.drive_rate);
    let walk = Matrix::from_fn(n, |i, k| blocks(i + 1, k + 1) * gp.block_len * gp.walk_rate);
    let mut instance = Instance::new(drive, walk, vec![gp.park_time; n], Some(gp.capacity), gp.load)?;
    instance.name = Some(format!("grid-{}x{}", s, s));
    instance.coords = Some(
        points
            .iter()
            .map(|&(a, b)| [a as f64 * gp.block_len, b as f64 * gp.block_len])
            .collect(),
    );
    let min_distance = (1..=n)
        .map(|k| (points[k].0 - depot.0).abs() + (points[k].1 - depot.1).abs())
        .min()
        .expect("grid has customers");
    Ok(GridInstance {
        instance,
        params: *gp,
        points,
        min_distance,
    })
}
