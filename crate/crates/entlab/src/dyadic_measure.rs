//! Sparse probability measures on dyadic grids.
//!
//! A [`GridSpec`] fixes the dimension, the level `n` and a per-axis box.
//! A [`Dist`] assigns nonnegative mass to integer cell tuples; cell `k` on
//! an axis is the half-open interval `[k 2^-n, (k+1) 2^-n)`, so indices are
//! absolute and may be negative. Storing the law of `D_n(X)` this way makes
//! every statement about `H_n(X)` an exact statement about a finite
//! pmf.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Error, Result, FORMAT_VERSION};

/// Integer cell-index tuple, one entry per axis.
pub type Cell = Vec<i64>;

/// Largest supported level. Keeps `index * 2^-level` exact in `f64`.
pub const MAX_LEVEL: u32 = 48;

/// Mass tolerance for constructed distributions.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// `2^e` as an exact `f64`.
pub fn pow2(e: i32) -> f64 {
    2f64.powi(e)
}

/// Left endpoint of cell `k` at `level`.
pub fn left_endpoint(k: i64, level: u32) -> f64 {
    k as f64 * pow2(-(level as i32))
}

/// Index of the level-`level` cell containing `x`.
pub fn cell_of(x: f64, level: u32) -> i64 {
    (x * pow2(level as i32)).floor() as i64
}

/// Discretization context: dimension, level and a closed-open box per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    level: u32,
    bounds: Vec<(f64, f64)>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    dim: usize,
    level: u32,
    #[serde(rename = "box")]
    bounds: Vec<(f64, f64)>,
}

impl Serialize for GridSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        GridRepr {
            dim: self.dim(),
            level: self.level,
            bounds: self.bounds.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let repr = GridRepr::deserialize(d)?;
        if repr.dim != repr.bounds.len() {
            return Err(serde::de::Error::custom("dim does not match the number of box axes"));
        }
        GridSpec::new(repr.level, repr.bounds).map_err(serde::de::Error::custom)
    }
}

impl GridSpec {
    pub fn new(level: u32, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if level > MAX_LEVEL {
            return Err(Error::InvalidGrid(format!("level {level} exceeds {MAX_LEVEL}")));
        }
        let scale = pow2(level as i32);
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidGrid(format!("bad box interval [{lo}, {hi})")));
            }
            if (lo * scale).fract() != 0.0 || (hi * scale).fract() != 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "box endpoints [{lo}, {hi}) are not multiples of 2^-{level}"
                )));
            }
            if (lo * scale).abs() > 2f64.powi(52) || (hi * scale).abs() > 2f64.powi(52) {
                return Err(Error::InvalidGrid("box too large for the level".into()));
            }
        }
        Ok(GridSpec { level, bounds })
    }

    /// `[0,1)^dim` at `level`.
    pub fn unit(dim: usize, level: u32) -> Self {
        assert!(dim >= 1 && level <= MAX_LEVEL);
        GridSpec {
            level,
            bounds: vec![(0.0, 1.0); dim],
        }
    }

    /// The same box on every axis.
    pub fn cube(dim: usize, level: u32, lo: f64, hi: f64) -> Result<Self> {
        GridSpec::new(level, vec![(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn cell_width(&self) -> f64 {
        pow2(-(self.level as i32))
    }

    /// Half-open range of admissible cell indices on `axis`.
    pub fn index_range(&self, axis: usize) -> (i64, i64) {
        let scale = pow2(self.level as i32);
        let (lo, hi) = self.bounds[axis];
        ((lo * scale) as i64, (hi * scale) as i64)
    }

    pub fn contains(&self, cell: &[i64]) -> bool {
        cell.len() == self.dim()
            && cell.iter().enumerate().all(|(axis, &k)| {
                let (a, b) = self.index_range(axis);
                a <= k && k < b
            })
    }

    /// Largest box side length.
    pub fn diam(&self) -> f64 {
        self.bounds.iter().map(|&(lo, hi)| hi - lo).fold(0.0, f64::max)
    }

    /// The grid at another level. Coarsening widens the box outward to the
    /// coarser lattice; refining keeps it.
    pub fn at_level(&self, new_level: u32) -> GridSpec {
        if new_level >= self.level {
            return GridSpec {
                level: new_level,
                bounds: self.bounds.clone(),
            };
        }
        let scale = pow2(new_level as i32);
        let bounds = self
            .bounds
            .iter()
            .map(|&(lo, hi)| ((lo * scale).floor() / scale, (hi * scale).ceil() / scale))
            .collect();
        GridSpec {
            level: new_level,
            bounds,
        }
    }

    /// Axes of `self` followed by axes of `other`. Both must share a level.
    pub fn concat(&self, other: &GridSpec) -> Result<GridSpec> {
        if self.level != other.level {
            return Err(Error::InvalidGrid("cannot concatenate grids at different levels".into()));
        }
        let mut bounds = self.bounds.clone();
        bounds.extend_from_slice(&other.bounds);
        Ok(GridSpec {
            level: self.level,
            bounds,
        })
    }

    /// Sub-grid on the listed axes, in the listed order.
    pub fn select(&self, axes: &[usize]) -> Result<GridSpec> {
        check_axes(axes, self.dim())?;
        Ok(GridSpec {
            level: self.level,
            bounds: axes.iter().map(|&a| self.bounds[a]).collect(),
        })
    }
}

fn check_axes(axes: &[usize], dim: usize) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::InvalidParameter("axis list must be nonempty".into()));
    }
    let mut seen = BTreeSet::new();
    for &axis in axes {
        if axis >= dim {
            return Err(Error::AxisOutOfRange { axis, dim });
        }
        if !seen.insert(axis) {
            return Err(Error::InvalidParameter(format!("axis {axis} listed twice")));
        }
    }
    Ok(())
}

/// Finite set of cells on some grid.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    cells: BTreeSet<Cell>,
}

impl Event {
    pub fn new<I: IntoIterator<Item = Cell>>(cells: I) -> Self {
        Event {
            cells: cells.into_iter().collect(),
        }
    }

    /// Support cells of `d` satisfying `pred`.
    pub fn from_predicate(d: &Dist, pred: impl Fn(&[i64]) -> bool) -> Self {
        Event::new(d.iter().map(|(c, _)| c).filter(|c| pred(c)).cloned())
    }

    pub fn contains(&self, cell: &[i64]) -> bool {
        self.cells.contains(cell)
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Cell> {
        self.cells.iter()
    }
}

/// Probability measure on the cells of a [`GridSpec`].
#[derive(Clone, Debug, PartialEq)]
pub struct Dist {
    grid: GridSpec,
    mass: BTreeMap<Cell, f64>,
}

impl Dist {
    /// Builds a distribution, summing repeated cells and dropping zeros.
    /// Total mass must be 1 within [`MASS_TOLERANCE`].
    pub fn new<I: IntoIterator<Item = (Cell, f64)>>(grid: GridSpec, entries: I) -> Result<Self> {
        let mass = collect_masses(&grid, entries)?;
        let total: f64 = mass.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDist(format!("total mass {total} is not 1")));
        }
        Ok(Dist { grid, mass })
    }

    /// Builds a distribution from nonnegative weights, normalizing them.
    pub fn from_weights<I: IntoIterator<Item = (Cell, f64)>>(grid: GridSpec, entries: I) -> Result<Self> {
        let mut mass = collect_masses(&grid, entries)?;
        let total: f64 = mass.values().sum();
        if total <= 0.0 {
            return Err(Error::InvalidDist("weights sum to zero".into()));
        }
        for v in mass.values_mut() {
            *v /= total;
        }
        Ok(Dist { grid, mass })
    }

    /// Uniform law on distinct cells.
    pub fn uniform<I: IntoIterator<Item = Cell>>(grid: GridSpec, cells: I) -> Result<Self> {
        let cells: BTreeSet<Cell> = cells.into_iter().collect();
        if cells.is_empty() {
            return Err(Error::InvalidDist("uniform law on an empty set".into()));
        }
        let p = 1.0 / cells.len() as f64;
        Dist::new(grid, cells.into_iter().map(|c| (c, p)))
    }

    pub fn point(grid: GridSpec, cell: Cell) -> Result<Self> {
        Dist::new(grid, [(cell, 1.0)])
    }

    /// Internal constructor for maps already known to be valid.
    pub(crate) fn from_parts(grid: GridSpec, mass: BTreeMap<Cell, f64>) -> Self {
        debug_assert!(mass.keys().all(|c| grid.contains(c)));
        debug_assert!(mass.values().all(|&v| v > 0.0));
        Dist { grid, mass }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn level(&self) -> u32 {
        self.grid.level()
    }

    /// Number of support cells.
    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    /// Support cells and masses in cell order.
    pub fn iter(&self) -> impl Iterator<Item = (&Cell, f64)> + '_ {
        self.mass.iter().map(|(c, &m)| (c, m))
    }

    pub fn masses(&self) -> &BTreeMap<Cell, f64> {
        &self.mass
    }

    pub fn mass_of(&self, cell: &[i64]) -> f64 {
        self.mass.get(cell).copied().unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Left endpoints of a support cell.
    pub fn point_of(&self, cell: &[i64]) -> Vec<f64> {
        cell.iter().map(|&k| left_endpoint(k, self.level())).collect()
    }

    /// Law of the listed axes, in the listed order. A full permutation
    /// reorders axes.
    pub fn marginal(&self, axes: &[usize]) -> Result<Dist> {
        check_axes(axes, self.dim())?;
        let grid = self.grid.select(axes)?;
        let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
        for (cell, m) in self.iter() {
            let key: Cell = axes.iter().map(|&a| cell[a]).collect();
            *out.entry(key).or_insert(0.0) += m;
        }
        Ok(Dist::from_parts(grid, out))
    }

    /// Restriction to `e`, renormalized, together with `P(e)`.
    pub fn condition_on_event(&self, e: &Event) -> Result<(Dist, f64)> {
        for cell in e.iter() {
            if !self.grid.contains(cell) {
                return Err(Error::OutsideBox { cell: cell.clone() });
            }
        }
        let p_e: f64 = self.iter().filter(|(c, _)| e.contains(c)).map(|(_, m)| m).sum();
        if p_e <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        let mass = self
            .iter()
            .filter(|(c, _)| e.contains(c))
            .map(|(c, m)| (c.clone(), m / p_e))
            .collect();
        Ok((Dist::from_parts(self.grid.clone(), mass), p_e))
    }

    /// Conditional law of the remaining axes given `axis` takes value `cell`.
    pub fn conditional_slice(&self, axis: usize, cell: i64) -> Result<Dist> {
        let dim = self.dim();
        if axis >= dim {
            return Err(Error::AxisOutOfRange { axis, dim });
        }
        if dim < 2 {
            return Err(Error::InvalidParameter("slicing needs at least two axes".into()));
        }
        let rest: Vec<usize> = (0..dim).filter(|&a| a != axis).collect();
        let grid = self.grid.select(&rest)?;
        let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
        let mut p = 0.0;
        for (c, m) in self.iter().filter(|(c, _)| c[axis] == cell) {
            p += m;
            let key: Cell = rest.iter().map(|&a| c[a]).collect();
            *out.entry(key).or_insert(0.0) += m;
        }
        if p <= 0.0 {
            return Err(Error::ZeroProbability);
        }
        for v in out.values_mut() {
            *v /= p;
        }
        Ok(Dist::from_parts(grid, out))
    }

    /// Independent coupling; the coarser factor is refined first.
    pub fn product(&self, other: &Dist) -> Dist {
        let level = self.level().max(other.level());
        let a = self.change_level(level);
        let b = other.change_level(level);
        let grid = a.grid.concat(&b.grid).expect("levels agree");
        let mut mass = BTreeMap::new();
        for (ca, ma) in a.iter() {
            for (cb, mb) in b.iter() {
                let mut cell = ca.clone();
                cell.extend_from_slice(cb);
                mass.insert(cell, ma * mb);
            }
        }
        Dist::from_parts(grid, mass)
    }

    /// Coarsening sums children exactly; refining splits each cell's mass
    /// uniformly among its children.
    pub fn change_level(&self, new_level: u32) -> Dist {
        let level = self.level();
        if new_level == level {
            return self.clone();
        }
        let grid = self.grid.at_level(new_level);
        let mut out: BTreeMap<Cell, f64> = BTreeMap::new();
        if new_level < level {
            let shift = level - new_level;
            for (cell, m) in self.iter() {
                let key: Cell = cell.iter().map(|&k| k >> shift).collect();
                *out.entry(key).or_insert(0.0) += m;
            }
        } else {
            let shift = new_level - level;
            let per_axis = 1i64 << shift;
            let children = (per_axis as u64).pow(self.dim() as u32);
            let share = 1.0 / children as f64;
            for (cell, m) in self.iter() {
                for t in 0..children {
                    let mut rem = t;
                    let key: Cell = cell
                        .iter()
                        .map(|&k| {
                            let off = (rem % per_axis as u64) as i64;
                            rem /= per_axis as u64;
                            (k << shift) + off
                        })
                        .collect();
                    out.insert(key, m * share);
                }
            }
        }
        Dist::from_parts(grid, out)
    }

    /// JSON document `{format_version, grid, cells}`; masses are decimal
    /// strings that parse back to the same `f64`.
    pub fn to_json_value(&self) -> Value {
        let cells: Vec<Value> = self
            .iter()
            .map(|(cell, m)| {
                let mut row: Vec<Value> = cell.iter().map(|&k| Value::from(k)).collect();
                row.push(Value::String(format!("{m}")));
                Value::Array(row)
            })
            .collect();
        serde_json::json!({
            "format_version": FORMAT_VERSION,
            "grid": self.grid,
            "cells": cells,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("serializable")
    }

    pub fn from_json_value(v: &Value) -> Result<Dist> {
        let grid: GridSpec = serde_json::from_value(
            v.get("grid").cloned().ok_or_else(|| Error::Parse("missing grid".into()))?,
        )?;
        let rows = v
            .get("cells")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing cells array".into()))?;
        let mut entries = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row.as_array().ok_or_else(|| Error::Parse("cell row is not an array".into()))?;
            if row.len() != grid.dim() + 1 {
                return Err(Error::Parse(format!("cell row {row:?} has wrong length")));
            }
            let cell = row[..grid.dim()]
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| Error::Parse(format!("bad index {x}"))))
                .collect::<Result<Cell>>()?;
            let m = match &row[grid.dim()] {
                Value::String(s) => s.parse::<f64>().map_err(|e| Error::Parse(format!("bad mass {s:?}: {e}")))?,
                Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse("bad mass".into()))?,
                other => return Err(Error::Parse(format!("bad mass {other}"))),
            };
            entries.push((cell, m));
        }
        Dist::new(grid, entries)
    }

    pub fn from_json_str(s: &str) -> Result<Dist> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Dist::from_json_value(&v)
    }
}

fn collect_masses<I: IntoIterator<Item = (Cell, f64)>>(grid: &GridSpec, entries: I) -> Result<BTreeMap<Cell, f64>> {
    let mut mass: BTreeMap<Cell, f64> = BTreeMap::new();
    for (cell, m) in entries {
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::InvalidDist(format!("mass {m} at {cell:?} is not a nonnegative number")));
        }
        if !grid.contains(&cell) {
            return Err(Error::OutsideBox { cell });
        }
        if m > 0.0 {
            *mass.entry(cell).or_insert(0.0) += m;
        }
    }
    if mass.is_empty() {
        return Err(Error::InvalidDist("no positive mass".into()));
    }
    Ok(mass)
}
