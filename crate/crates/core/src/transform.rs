//! Martingale transforms, their maximal truncations, and square functions,
//! including the variants localized at a stopping time.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DyadicGrid, GridFunction, StoppingTime};
use crate::martingale::{all_cond_expect, all_mart_diff};

/// Predictable multiplier sequence: `σ_k` is constant on level-`(k-1)` cubes
/// (with the convention that `σ_0` is constant on the level-0 cube), stored
/// as one value per cube per level so predictability holds by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictableSigns {
    grid: Arc<DyadicGrid>,
    /// `levels[k]` has `2^{max(k,1)-1}` entries.
    levels: Vec<Vec<f64>>,
    bound: f64,
}

fn expected_len(k: usize) -> usize {
    1usize << (k.max(1) - 1)
}

impl PredictableSigns {
    /// Bounded multipliers: requires `sup_k ||σ_k||_∞ <= 1`.
    pub fn new(grid: Arc<DyadicGrid>, levels: Vec<Vec<f64>>) -> Result<Self> {
        let s = Self::new_unbounded(grid, levels)?;
        if s.bound > 1.0 {
            return Err(Error::Parse(format!(
                "multiplier bound {} exceeds 1; use new_unbounded to override",
                s.bound
            )));
        }
        Ok(s)
    }

    /// Multipliers with an explicitly recorded (possibly > 1) bound.
    pub fn new_unbounded(grid: Arc<DyadicGrid>, levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != grid.depth() + 1 {
            return Err(Error::NotPredictable(levels.len()));
        }
        for (k, vals) in levels.iter().enumerate() {
            if vals.len() != expected_len(k) {
                return Err(Error::NotPredictable(k));
            }
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        let bound = levels
            .iter()
            .flatten()
            .fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(PredictableSigns { grid, levels, bound })
    }

    /// `σ_k ≡ c` at every level.
    pub fn constant(grid: Arc<DyadicGrid>, c: f64) -> Self {
        let levels = (0..=grid.depth()).map(|k| vec![c; expected_len(k)]).collect();
        Self::new_unbounded(grid, levels).expect("constant multipliers are well formed")
    }

    /// Independent ±1 signs per cube per level (the CLI's
    /// "rademacher-random" generator).
    pub fn rademacher(grid: Arc<DyadicGrid>, rng: &mut impl rand::Rng) -> Self {
        let levels = (0..=grid.depth())
            .map(|k| {
                (0..expected_len(k))
                    .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        Self::new(grid, levels).expect("signs are bounded by 1")
    }

    pub fn grid(&self) -> &Arc<DyadicGrid> {
        &self.grid
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// `σ_k(x)` for the leaf `x`.
    pub fn at(&self, k: usize, leaf: usize) -> f64 {
        if k == 0 {
            self.levels[0][0]
        } else {
            self.levels[k][leaf >> (self.grid.depth() - (k - 1))]
        }
    }

    pub fn to_json(&self) -> SignsJson {
        SignsJson {
            levels: self
                .levels
                .iter()
                .enumerate()
                .map(|(k, values)| SignsLevelJson {
                    level: k,
                    values: values.clone(),
                })
                .collect(),
        }
    }

    pub fn from_json(grid: Arc<DyadicGrid>, json: &SignsJson) -> Result<Self> {
        let mut levels = vec![Vec::new(); grid.depth() + 1];
        for lvl in &json.levels {
            if lvl.level > grid.depth() {
                return Err(Error::NotPredictable(lvl.level));
            }
            levels[lvl.level] = lvl.values.clone();
        }
        for (k, vals) in levels.iter_mut().enumerate() {
            if vals.is_empty() {
                *vals = vec![0.0; expected_len(k)];
            }
        }
        Self::new_unbounded(grid, levels)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignsJson {
    pub levels: Vec<SignsLevelJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignsLevelJson {
    pub level: usize,
    pub values: Vec<f64>,
}

fn check_grids(f: &GridFunction, sigma: &PredictableSigns, nu: Option<&StoppingTime>) -> Result<()> {
    if !(Arc::ptr_eq(f.grid(), sigma.grid()) || **f.grid() == **sigma.grid()) {
        return Err(Error::GridMismatch);
    }
    if let Some(nu) = nu {
        if !(Arc::ptr_eq(f.grid(), nu.grid()) || **f.grid() == **nu.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    Ok(())
}

/// Partial sums of the (localized) martingale transform at every truncation
/// level: entry `ℓ` holds
///   `Σ_{0<=k<=ℓ} σ_k df_k            ` without a stopping time, and
///   `σ_ν E_ν f · δ_{ℓ>=ν} + Σ_{ν<k<=ℓ} σ_k df_k` localized at `ν`
/// (zero where `ν = ∞`).
pub fn transform_prefixes(
    f: &GridFunction,
    sigma: &PredictableSigns,
    nu: Option<&StoppingTime>,
) -> Result<Vec<GridFunction>> {
    check_grids(f, sigma, nu)?;
    let grid = f.grid();
    let depth = grid.depth();
    let diffs = all_mart_diff(f);
    let exps = all_cond_expect(f);
    let n = grid.leaf_count();
    let mut prefixes = Vec::with_capacity(depth + 1);
    let mut acc = vec![0.0; n];
    for l in 0..=depth {
        for x in 0..n {
            match nu {
                None => {
                    acc[x] += sigma.at(l, x) * diffs[l].values()[x];
                }
                Some(nu) => match nu.level_at(x) {
                    Some(start) if l == start => {
                        acc[x] = sigma.at(start, x) * exps[start].values()[x];
                    }
                    Some(start) if l > start => {
                        acc[x] += sigma.at(l, x) * diffs[l].values()[x];
                    }
                    _ => {}
                },
            }
        }
        prefixes.push(GridFunction::new(grid.clone(), acc.clone())?);
    }
    Ok(prefixes)
}

/// `T f = Σ_k σ_k df_k`, or the localized `T_{(ν)} f` when `ν` is given.
pub fn martingale_transform(
    f: &GridFunction,
    sigma: &PredictableSigns,
    nu: Option<&StoppingTime>,
) -> Result<GridFunction> {
    let prefixes = transform_prefixes(f, sigma, nu)?;
    Ok(prefixes.into_iter().next_back().expect("depth+1 prefixes"))
}

/// `T* f = sup_ℓ |Σ_{k<=ℓ} σ_k df_k|`, or its localized version. The sup
/// ranges over `ℓ ∈ {0,…,N}`; at leaf depth the partial sums are exhausted.
pub fn transform_max_trunc(
    f: &GridFunction,
    sigma: &PredictableSigns,
    nu: Option<&StoppingTime>,
) -> Result<GridFunction> {
    let prefixes = transform_prefixes(f, sigma, nu)?;
    let grid = f.grid();
    let mut out = vec![0.0f64; grid.leaf_count()];
    for p in &prefixes {
        for (o, v) in out.iter_mut().zip(p.values()) {
            *o = (*o).max(v.abs());
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// Truncated square-function values at every level: entry `m` holds
///   `(Σ_{k<=m} (df_k)²)^{1/2}`                  without a stopping time, and
///   `(|E_ν f|² δ_{m>=ν} + Σ_{ν<k<=m} (df_k)²)^{1/2}` localized at `ν`.
pub fn square_prefixes(
    f: &GridFunction,
    nu: Option<&StoppingTime>,
) -> Result<Vec<GridFunction>> {
    if let Some(nu) = nu {
        if !(Arc::ptr_eq(f.grid(), nu.grid()) || **f.grid() == **nu.grid()) {
            return Err(Error::GridMismatch);
        }
    }
    let grid = f.grid();
    let depth = grid.depth();
    let diffs = all_mart_diff(f);
    let exps = all_cond_expect(f);
    let n = grid.leaf_count();
    let mut acc = vec![0.0; n];
    let mut prefixes = Vec::with_capacity(depth + 1);
    for m in 0..=depth {
        for x in 0..n {
            match nu {
                None => {
                    acc[x] += diffs[m].values()[x].powi(2);
                }
                Some(nu) => match nu.level_at(x) {
                    Some(start) if m == start => {
                        acc[x] = exps[start].values()[x].powi(2);
                    }
                    Some(start) if m > start => {
                        acc[x] += diffs[m].values()[x].powi(2);
                    }
                    _ => {}
                },
            }
        }
        prefixes.push(GridFunction::new(
            grid.clone(),
            acc.iter().map(|v| v.sqrt()).collect(),
        )?);
    }
    Ok(prefixes)
}

/// `S f = (Σ_m (df_m)²)^{1/2}`, or the localized `S_{(ν)} f`.
pub fn square_function(f: &GridFunction, nu: Option<&StoppingTime>) -> Result<GridFunction> {
    let prefixes = square_prefixes(f, nu)?;
    Ok(prefixes.into_iter().next_back().expect("depth+1 prefixes"))
}
