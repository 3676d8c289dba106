//! The finite dyadic probability space on `[0,1)`.
//!
//! A [`DyadicGrid`] of depth `N` carries `2^N` leaf cells, each with a
//! strictly positive measure (uniform `2^-N` by default). Cubes at level `k`
//! are the half-open intervals `[i 2^-k, (i+1) 2^-k)`; the children of
//! `(k, i)` are `(k+1, 2i)` and `(k+1, 2i+1)` and cube measures are additive
//! over children. Functions live on leaves as plain `f64` vectors.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dyadic interval, identified by its level and position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cube {
    pub level: usize,
    pub index: usize,
}

impl Cube {
    pub fn new(level: usize, index: usize) -> Self {
        debug_assert!(index < (1usize << level));
        Cube { level, index }
    }

    pub fn root() -> Self {
        Cube { level: 0, index: 0 }
    }

    pub fn parent(&self) -> Option<Cube> {
        if self.level == 0 {
            None
        } else {
            Some(Cube::new(self.level - 1, self.index / 2))
        }
    }

    pub fn left_child(&self) -> Cube {
        Cube::new(self.level + 1, 2 * self.index)
    }

    pub fn right_child(&self) -> Cube {
        Cube::new(self.level + 1, 2 * self.index + 1)
    }

    /// The ancestor of `self` at the coarser level `k`.
    pub fn ancestor(&self, k: usize) -> Cube {
        assert!(k <= self.level);
        Cube::new(k, self.index >> (self.level - k))
    }

    pub fn contains(&self, other: &Cube) -> bool {
        other.level >= self.level && other.ancestor(self.level).index == self.index
    }

    /// Endpoints of the interval as exact dyadic rationals.
    pub fn endpoints(&self) -> (f64, f64) {
        let w = 1.0 / (1u64 << self.level) as f64;
        (self.index as f64 * w, (self.index + 1) as f64 * w)
    }
}

impl fmt::Display for Cube {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (a, b) = self.endpoints();
        write!(f, "({},{})=[{},{})", self.level, self.index, a, b)
    }
}

/// Depth-`N` dyadic filtration of `[0,1)` with per-leaf measures.
#[derive(Debug, Clone)]
pub struct DyadicGrid {
    depth: usize,
    /// `masses[k][i]` is the measure of the cube `(k, i)`; `masses[depth]`
    /// holds the leaf measures.
    masses: Vec<Vec<f64>>,
    uniform: bool,
    regularity: f64,
}

impl PartialEq for DyadicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.masses[self.depth] == other.masses[other.depth]
    }
}

impl DyadicGrid {
    /// Uniform grid: every leaf has measure `2^-depth`.
    pub fn uniform(depth: usize) -> Arc<Self> {
        let leaves = 1usize << depth;
        let m = 1.0 / leaves as f64;
        Self::with_measures(depth, vec![m; leaves]).expect("uniform measures are valid")
    }

    /// Grid with explicit leaf measures. Total mass need not be 1, but every
    /// entry must be strictly positive and finite.
    pub fn with_measures(depth: usize, leaf_measure: Vec<f64>) -> Result<Arc<Self>> {
        let leaves = 1usize << depth;
        if leaf_measure.len() != leaves {
            return Err(Error::BadMeasure(format!(
                "expected {} leaf measures, got {}",
                leaves,
                leaf_measure.len()
            )));
        }
        if let Some(m) = leaf_measure.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::BadMeasure(format!("nonpositive leaf measure {m}")));
        }
        let mut masses = vec![Vec::new(); depth + 1];
        masses[depth] = leaf_measure;
        for k in (0..depth).rev() {
            let child = &masses[k + 1];
            masses[k] = (0..child.len() / 2)
                .map(|i| child[2 * i] + child[2 * i + 1])
                .collect();
        }
        let uniform = masses[depth].windows(2).all(|w| w[0] == w[1]);
        let mut regularity: f64 = 1.0;
        for k in 1..=depth {
            for i in 0..masses[k].len() {
                regularity = regularity.max(masses[k - 1][i / 2] / masses[k][i]);
            }
        }
        if depth == 0 {
            regularity = 1.0;
        }
        Ok(Arc::new(DyadicGrid {
            depth,
            masses,
            uniform,
            regularity,
        }))
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn leaf_count(&self) -> usize {
        1usize << self.depth
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// Max over cubes of `mass(parent)/mass(child)`; 2 for uniform measure.
    pub fn regularity(&self) -> f64 {
        if self.depth == 0 {
            1.0
        } else if self.uniform {
            2.0
        } else {
            self.regularity
        }
    }

    pub fn total_mass(&self) -> f64 {
        self.masses[0][0]
    }

    pub fn leaf_measures(&self) -> &[f64] {
        &self.masses[self.depth]
    }

    pub fn cube_mass(&self, cube: Cube) -> f64 {
        self.masses[cube.level][cube.index]
    }

    /// Leaf index range `[lo, hi)` covered by a cube.
    pub fn leaf_range(&self, cube: Cube) -> std::ops::Range<usize> {
        let span = 1usize << (self.depth - cube.level);
        cube.index * span..(cube.index + 1) * span
    }

    pub fn cubes_at_level(&self, k: usize) -> impl Iterator<Item = Cube> {
        (0..1usize << k).map(move |i| Cube::new(k, i))
    }

    /// All cubes of the grid, coarse to fine.
    pub fn all_cubes(&self) -> impl Iterator<Item = Cube> + '_ {
        (0..=self.depth).flat_map(|k| self.cubes_at_level(k))
    }

    pub fn leaf_cube(&self, leaf: usize) -> Cube {
        Cube::new(self.depth, leaf)
    }
}

/// A function constant on the leaves of a [`DyadicGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<DyadicGrid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<DyadicGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.leaf_count() {
            return Err(Error::LengthMismatch {
                expected: grid.leaf_count(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(GridFunction { grid, values })
    }

    pub fn constant(grid: Arc<DyadicGrid>, c: f64) -> Self {
        let n = grid.leaf_count();
        GridFunction::new(grid, vec![c; n]).expect("constant is finite")
    }

    pub fn zero(grid: Arc<DyadicGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Indicator of a cube.
    pub fn indicator(grid: Arc<DyadicGrid>, cube: Cube) -> Self {
        let mut v = vec![0.0; grid.leaf_count()];
        for i in grid.leaf_range(cube) {
            v[i] = 1.0;
        }
        GridFunction { grid, values: v }
    }

    pub fn grid(&self) -> &Arc<DyadicGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn abs(&self) -> GridFunction {
        self.map(f64::abs)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise binary combination; panics on grid mismatch.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        assert!(self.same_grid(other), "grid mismatch");
        GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// `∫ f dμ` over the whole space.
    pub fn integral(&self) -> f64 {
        self.integral_on(Cube::root())
    }

    /// `∫_Q f dμ`.
    pub fn integral_on(&self, cube: Cube) -> f64 {
        let m = self.grid.leaf_measures();
        self.grid
            .leaf_range(cube)
            .map(|i| self.values[i] * m[i])
            .sum()
    }

    /// Measure-weighted average over a cube.
    pub fn average_on(&self, cube: Cube) -> f64 {
        self.integral_on(cube) / self.grid.cube_mass(cube)
    }

    /// `μ{x : pred(f(x))}` as a sum of leaf measures.
    pub fn measure_where(&self, pred: impl Fn(f64) -> bool) -> f64 {
        let m = self.grid.leaf_measures();
        self.values
            .iter()
            .zip(m)
            .filter(|(v, _)| pred(**v))
            .map(|(_, m)| m)
            .sum()
    }

    /// `(∫ |f|^p dμ)^{1/p}` for `p > 0`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p > 0.0, "p must be positive");
        let m = self.grid.leaf_measures();
        let s: f64 = self
            .values
            .iter()
            .zip(m)
            .map(|(v, m)| v.abs().powf(p) * m)
            .sum();
        s.powf(1.0 / p)
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Per-leaf stopping level in `{0,…,N} ∪ {∞}`.
///
/// Adaptedness: wherever `ν(x) = k`, the value `k` is constant on the whole
/// level-`k` cube containing `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingTime {
    grid: Arc<DyadicGrid>,
    levels: Vec<u32>,
}

impl StoppingTime {
    pub const INFINITY: u32 = u32::MAX;

    pub fn new(grid: Arc<DyadicGrid>, levels: Vec<u32>) -> Result<Self> {
        if levels.len() != grid.leaf_count() {
            return Err(Error::LengthMismatch {
                expected: grid.leaf_count(),
                got: levels.len(),
            });
        }
        let st = StoppingTime { grid, levels };
        st.check_adapted()?;
        Ok(st)
    }

    pub fn constant(grid: Arc<DyadicGrid>, level: u32) -> Self {
        let n = grid.leaf_count();
        Self::new(grid, vec![level; n]).expect("constant stopping time is adapted")
    }

    fn check_adapted(&self) -> Result<()> {
        let depth = self.grid.depth();
        for (leaf, &k) in self.levels.iter().enumerate() {
            if k == Self::INFINITY {
                continue;
            }
            let k = k as usize;
            if k > depth {
                return Err(Error::LevelOutOfRange { level: k, depth });
            }
            let cube = self.grid.leaf_cube(leaf).ancestor(k);
            let range = self.grid.leaf_range(cube);
            if self.levels[range.clone()].iter().any(|&v| v as usize != k) {
                return Err(Error::NotAdapted {
                    level: k,
                    index: cube.index,
                });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> &Arc<DyadicGrid> {
        &self.grid
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn level_at(&self, leaf: usize) -> Option<usize> {
        let v = self.levels[leaf];
        (v != Self::INFINITY).then_some(v as usize)
    }

    pub fn is_finite_at(&self, leaf: usize) -> bool {
        self.levels[leaf] != Self::INFINITY
    }

    /// The cubes on which the stopping time equals its (finite) value,
    /// i.e. the atoms of the stopped σ-algebra inside `{ν < ∞}`.
    pub fn atoms(&self) -> Vec<Cube> {
        let mut out = Vec::new();
        let mut leaf = 0;
        while leaf < self.levels.len() {
            match self.level_at(leaf) {
                Some(k) => {
                    let cube = self.grid.leaf_cube(leaf).ancestor(k);
                    out.push(cube);
                    leaf = self.grid.leaf_range(cube).end;
                }
                None => leaf += 1,
            }
        }
        out
    }
}
