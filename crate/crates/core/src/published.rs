//! Loader for instance directories of plain CSV matrices.
//!
//! One directory per instance:
//!
//! ```text
//! drive.csv      (n+1) x (n+1) driving minutes, depot first
//! walk.csv       n x n walking minutes, or (n+1) x (n+1) with the depot first
//! park_time.csv  n search times, one per line or comma separated
//! params.json    {"q": 3, "f": 2.8, "name": "...", "optimum": 123.4}
//! ```
//!
//! `name` and `optimum` are optional; `optimum` records a known optimal
//! completion time for comparison. Only local files are read.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::instance::{Instance, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Deserialize)]
struct Params {
    q: Option<usize>,
    #[serde(default)]
    f: f64,
    name: Option<String>,
    optimum: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PublishedInstance {
    pub instance: Instance,
    pub optimum: Option<f64>,
    pub dir: PathBuf,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn numbers(path: &Path, text: &str) -> Result<Vec<Vec<f64>>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("{}: {e}: {x:?}", path.display())))
                })
                .collect()
        })
        .collect()
}

fn matrix(dir: &Path, file: &str, what: &'static str) -> Result<Matrix> {
    let path = dir.join(file);
    Matrix::from_rows(what, &numbers(&path, &read(&path)?)?)
}

/// Loads one instance directory.
pub fn load_dir(dir: impl AsRef<Path>) -> Result<PublishedInstance> {
    let dir = dir.as_ref();
    let params: Params =
        serde_json::from_str(&read(&dir.join("params.json"))?).map_err(|e| Error::Parse(e.to_string()))?;
    let drive = matrix(dir, "drive.csv", "drive matrix")?;
    let mut walk = matrix(dir, "walk.csv", "walk matrix")?;
    let park_path = dir.join("park_time.csv");
    let park: Vec<f64> = numbers(&park_path, &read(&park_path)?)?.into_iter().flatten().collect();
    let n = park.len();
    if walk.dim() == n + 1 {
        walk = Matrix::from_fn(n, |i, k| walk.get(i + 1, k + 1));
    }
    let mut instance = Instance::new(drive, walk, park, params.q, params.f)?;
    instance.name = params
        .name
        .or_else(|| dir.file_name().map(|s| s.to_string_lossy().into_owned()));
    Ok(PublishedInstance {
        instance,
        optimum: params.optimum,
        dir: dir.to_path_buf(),
    })
}

/// Loads every instance directory under `root`, sorted by path.
pub fn load_all(root: impl AsRef<Path>) -> Result<Vec<PublishedInstance>> {
    let root = root.as_ref();
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| Error::io(root, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("params.json").is_file())
        .collect();
    dirs.sort();
    dirs.iter().map(load_dir).collect()
}
