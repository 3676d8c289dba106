//! Sparse families of sets, their audits, the equivalent stopping-time
//! representation, and the three sparse operators.
//!
//! Two representations are supported. The adapted form stores, per level
//! `k`, the union `S_k` of level-`k` cubes; η-sparsity is the conditional
//! bound `μ(A \ ∪_{m>k} S_m) >= η μ(A)` for every level-`k` cube `A ⊆ S_k`
//! (atoms suffice since the σ-algebras are atomic). The flat form is a
//! plain list of leaf masks over an arbitrary finite measure space, with
//! optional disjoint witness sets of relative mass `>= η`; rectangle
//! families in two parameters are not nested and must use this form.

use std::sync::Arc;

use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicGrid, GridFunction, StoppingTime};
use crate::martingale::all_cond_expect;
use crate::percentile::{check_ratio, cond_percentile, weighted_percentile};
use crate::report::DominationReport;

/// Adapted sequence `{S_k}` of cube unions.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptedFamily {
    grid: Arc<DyadicGrid>,
    /// `levels[k]` holds the sorted indices of the level-`k` cubes in `S_k`.
    levels: Vec<Vec<usize>>,
    /// Claimed sparsity ratio.
    pub eta: f64,
}

impl AdaptedFamily {
    pub fn new(grid: Arc<DyadicGrid>, mut levels: Vec<Vec<usize>>, eta: f64) -> Result<Self> {
        if levels.len() > grid.depth() + 1 {
            return Err(Error::MalformedFamily(format!(
                "{} level sets on a depth-{} grid",
                levels.len(),
                grid.depth()
            )));
        }
        levels.resize(grid.depth() + 1, Vec::new());
        for (k, idx) in levels.iter_mut().enumerate() {
            idx.sort_unstable();
            idx.dedup();
            if idx.iter().any(|&i| i >= 1usize << k) {
                return Err(Error::MalformedFamily(format!("cube index out of range at level {k}")));
            }
        }
        Ok(AdaptedFamily { grid, levels, eta })
    }

    pub fn empty(grid: Arc<DyadicGrid>) -> Self {
        let levels = vec![Vec::new(); grid.depth() + 1];
        AdaptedFamily {
            grid,
            levels,
            eta: 1.0,
        }
    }

    pub fn grid(&self) -> &Arc<DyadicGrid> {
        &self.grid
    }

    pub fn level_cubes(&self, k: usize) -> &[usize] {
        &self.levels[k]
    }

    pub fn is_empty(&self) -> bool {
        self.levels.iter().all(|l| l.is_empty())
    }

    pub fn cube_count(&self) -> usize {
        self.levels.iter().map(|l| l.len()).sum()
    }

    pub fn cubes(&self) -> impl Iterator<Item = Cube> + '_ {
        self.levels
            .iter()
            .enumerate()
            .flat_map(|(k, idx)| idx.iter().map(move |&i| Cube::new(k, i)))
    }

    /// Leaf mask of `∪_{m >= k} S_m`.
    pub fn union_from(&self, k: usize) -> Vec<bool> {
        let mut mask = vec![false; self.grid.leaf_count()];
        for m in k..self.levels.len() {
            for &i in &self.levels[m] {
                for leaf in self.grid.leaf_range(Cube::new(m, i)) {
                    mask[leaf] = true;
                }
            }
        }
        mask
    }

    pub fn to_json(&self) -> AdaptedFamilyJson {
        AdaptedFamilyJson {
            levels: self
                .levels
                .iter()
                .enumerate()
                .filter(|(_, idx)| !idx.is_empty())
                .map(|(k, idx)| AdaptedLevelJson {
                    k,
                    cubes: idx.iter().map(|&i| [k, i]).collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(grid: Arc<DyadicGrid>, json: &AdaptedFamilyJson, eta: f64) -> Result<Self> {
        let mut levels = vec![Vec::new(); grid.depth() + 1];
        for lvl in &json.levels {
            if lvl.k > grid.depth() {
                return Err(Error::MalformedFamily(format!("level {} too deep", lvl.k)));
            }
            for c in &lvl.cubes {
                if c[0] != lvl.k {
                    return Err(Error::MalformedFamily(format!(
                        "cube [{},{}] listed under level {}",
                        c[0], c[1], lvl.k
                    )));
                }
                levels[lvl.k].push(c[1]);
            }
        }
        Self::new(grid, levels, eta)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptedFamilyJson {
    pub levels: Vec<AdaptedLevelJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaptedLevelJson {
    pub k: usize,
    pub cubes: Vec<[usize; 2]>,
}

/// One member of a flat family.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatSet {
    pub mask: Vec<bool>,
    pub witness: Option<Vec<bool>>,
}

/// Flat list of measurable sets over a finite measure space given by leaf
/// masses (a dyadic grid, a product grid, or anything else).
#[derive(Debug, Clone, PartialEq)]
pub struct FlatFamily {
    masses: Vec<f64>,
    sets: Vec<FlatSet>,
    pub eta: f64,
}

pub fn mask_mass(masses: &[f64], mask: &[bool]) -> f64 {
    masses
        .iter()
        .zip(mask)
        .filter(|(_, b)| **b)
        .map(|(m, _)| m)
        .sum()
}

impl FlatFamily {
    pub fn new(masses: Vec<f64>, sets: Vec<FlatSet>, eta: f64) -> Result<Self> {
        for s in &sets {
            if s.mask.len() != masses.len() {
                return Err(Error::MalformedFamily("mask length mismatch".into()));
            }
            if mask_mass(&masses, &s.mask) <= 0.0 {
                return Err(Error::MalformedFamily("set of zero measure".into()));
            }
            if let Some(w) = &s.witness {
                if w.len() != masses.len() {
                    return Err(Error::MalformedFamily("witness length mismatch".into()));
                }
                if w.iter().zip(&s.mask).any(|(w, m)| *w && !*m) {
                    return Err(Error::MalformedFamily("witness escapes its set".into()));
                }
            }
        }
        Ok(FlatFamily { masses, sets, eta })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn sets(&self) -> &[FlatSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `M_S f` over the flat family: per-point max of `|⟨f⟩_R|`.
    pub fn maximal(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; self.masses.len()];
        for s in &self.sets {
            let avg = set_average(&self.masses, &s.mask, values).abs();
            for (o, b) in out.iter_mut().zip(&s.mask) {
                if *b {
                    *o = (*o).max(avg);
                }
            }
        }
        out
    }

    /// `A_S f` over the flat family: per-point sum of `|⟨f⟩_R|`.
    pub fn sum_operator(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.masses.len()];
        for s in &self.sets {
            let avg = set_average(&self.masses, &s.mask, values).abs();
            for (o, b) in out.iter_mut().zip(&s.mask) {
                if *b {
                    *o += avg;
                }
            }
        }
        out
    }

    /// `C_S f` over the flat family: per-point sum of `P_R^r(|f|)`.
    pub fn cancellative(&self, values: &[f64], r: f64) -> Result<Vec<f64>> {
        check_ratio(r)?;
        let mut out = vec![0.0; self.masses.len()];
        for s in &self.sets {
            let p = set_percentile(&self.masses, &s.mask, values, r, true);
            for (o, b) in out.iter_mut().zip(&s.mask) {
                if *b {
                    *o += p;
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> FlatFamilyJson {
        FlatFamilyJson {
            sets: self
                .sets
                .iter()
                .map(|s| FlatSetJson {
                    mask: encode_mask(&s.mask),
                    witness: s.witness.as_ref().map(|w| encode_mask(w)),
                })
                .collect(),
        }
    }

    pub fn from_json(masses: Vec<f64>, json: &FlatFamilyJson, eta: f64) -> Result<Self> {
        let n = masses.len();
        let sets = json
            .sets
            .iter()
            .map(|s| {
                Ok(FlatSet {
                    mask: decode_mask(&s.mask, n)?,
                    witness: s.witness.as_ref().map(|w| decode_mask(w, n)).transpose()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(masses, sets, eta)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatFamilyJson {
    pub sets: Vec<FlatSetJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatSetJson {
    pub mask: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

pub fn encode_mask(mask: &[bool]) -> String {
    let mut bytes = vec![0u8; (mask.len() + 7) / 8];
    for (i, b) in mask.iter().enumerate() {
        if *b {
            bytes[i / 8] |= 1 << (i % 8);
        }
    }
    base64::engine::general_purpose::STANDARD.encode(bytes)
}

pub fn decode_mask(text: &str, len: usize) -> Result<Vec<bool>> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(text)
        .map_err(|e| Error::Parse(format!("bad base64 mask: {e}")))?;
    if bytes.len() != (len + 7) / 8 {
        return Err(Error::MalformedFamily("mask length mismatch".into()));
    }
    Ok((0..len).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect())
}

/// Measure-weighted average of `values` over a mask.
pub fn set_average(masses: &[f64], mask: &[bool], values: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..masses.len() {
        if mask[i] {
            num += values[i] * masses[i];
            den += masses[i];
        }
    }
    num / den
}

/// Percentile of `values` (or `|values|`) over a mask at ratio `r`.
pub fn set_percentile(masses: &[f64], mask: &[bool], values: &[f64], r: f64, absolute: bool) -> f64 {
    let mut samples: Vec<(f64, f64)> = (0..masses.len())
        .filter(|&i| mask[i])
        .map(|i| {
            let v = if absolute { values[i].abs() } else { values[i] };
            (v, masses[i])
        })
        .collect();
    weighted_percentile(&mut samples, r)
}

/// Either representation of a sparse family.
#[derive(Debug, Clone, PartialEq)]
pub enum SparseFamily {
    Adapted(AdaptedFamily),
    Flat(FlatFamily),
}

impl SparseFamily {
    pub fn claimed_eta(&self) -> f64 {
        match self {
            SparseFamily::Adapted(a) => a.eta,
            SparseFamily::Flat(f) => f.eta,
        }
    }
}

/// Audits η-sparsity. For the adapted form this is the per-atom conditional
/// check; for the flat form, stored witnesses are validated when present and
/// otherwise witnesses are certified greedily in insertion order
/// (`E_R = R \ shadow-so-far`). The report's `best_constant` is the worst
/// overlap fraction, audited against `1 - η`; `measured["achieved_eta"]`
/// carries the sparsity the family actually attains.
pub fn verify_sparsity(family: &SparseFamily, eta: f64) -> DominationReport {
    let (worst_overlap, witness) = match family {
        SparseFamily::Adapted(fam) => {
            let mut worst = 0.0f64;
            let mut witness = 0usize;
            for k in 0..fam.levels.len() {
                if fam.levels[k].is_empty() {
                    continue;
                }
                let later = fam.union_from(k + 1);
                for &i in &fam.levels[k] {
                    let cube = Cube::new(k, i);
                    let range = fam.grid.leaf_range(cube);
                    let mass = fam.grid.cube_mass(cube);
                    let overlap: f64 = range
                        .clone()
                        .filter(|&leaf| later[leaf])
                        .map(|leaf| fam.grid.leaf_measures()[leaf])
                        .sum();
                    let frac = overlap / mass;
                    if frac > worst {
                        worst = frac;
                        witness = range.start;
                    }
                }
            }
            (worst, witness)
        }
        SparseFamily::Flat(fam) => {
            let mut worst = 0.0f64;
            let mut witness = 0usize;
            let mut shadow = vec![false; fam.masses.len()];
            let mut claimed = vec![false; fam.masses.len()];
            for s in &fam.sets {
                let mass = mask_mass(&fam.masses, &s.mask);
                let witness_mass = match &s.witness {
                    Some(w) => {
                        // stored witnesses must be pairwise disjoint
                        let ok = w.iter().zip(&claimed).all(|(a, b)| !(*a && *b));
                        for (c, a) in claimed.iter_mut().zip(w) {
                            *c |= *a;
                        }
                        if ok {
                            mask_mass(&fam.masses, w)
                        } else {
                            0.0
                        }
                    }
                    None => {
                        let free: f64 = (0..fam.masses.len())
                            .filter(|&i| s.mask[i] && !shadow[i])
                            .map(|i| fam.masses[i])
                            .sum();
                        free
                    }
                };
                for (sh, b) in shadow.iter_mut().zip(&s.mask) {
                    *sh |= *b;
                }
                let frac = 1.0 - witness_mass / mass;
                if frac > worst {
                    worst = frac;
                    witness = s.mask.iter().position(|b| *b).unwrap_or(0);
                }
            }
            (worst, witness)
        }
    };
    DominationReport {
        id: "sparsity".to_string(),
        best_constant: worst_overlap,
        witness_leaf: witness,
        proof_constant: Some(1.0 - eta),
        pass: worst_overlap <= 1.0 - eta,
        measured: [("achieved_eta".to_string(), 1.0 - worst_overlap)]
            .into_iter()
            .collect(),
    }
}

/// Adapted family -> increasing sequence of stopping times:
/// `ν_0 = inf{m : x ∈ S_m}`, `ν_j = inf{m > ν_{j-1} : x ∈ S_m}`.
pub fn to_stopping_times(family: &AdaptedFamily) -> Vec<StoppingTime> {
    let grid = &family.grid;
    let n = grid.leaf_count();
    // level membership per leaf
    let member: Vec<Vec<bool>> = (0..family.levels.len())
        .map(|k| {
            let mut mask = vec![false; n];
            for &i in &family.levels[k] {
                for leaf in grid.leaf_range(Cube::new(k, i)) {
                    mask[leaf] = true;
                }
            }
            mask
        })
        .collect();
    let mut out = Vec::new();
    let mut prev: Vec<i64> = vec![-1; n];
    loop {
        let mut levels = vec![StoppingTime::INFINITY; n];
        let mut any = false;
        for x in 0..n {
            for m in (prev[x] + 1) as usize..member.len() {
                if member[m][x] {
                    levels[x] = m as u32;
                    any = true;
                    break;
                }
            }
        }
        if !any {
            break;
        }
        for x in 0..n {
            if levels[x] != StoppingTime::INFINITY {
                prev[x] = levels[x] as i64;
            } else {
                prev[x] = member.len() as i64;
            }
        }
        out.push(StoppingTime::new(grid.clone(), levels).expect("level sets are adapted"));
    }
    out
}

/// Inverse conversion: `S_m = ∪_j {ν_j = m}`.
pub fn from_stopping_times(
    grid: Arc<DyadicGrid>,
    times: &[StoppingTime],
    eta: f64,
) -> Result<AdaptedFamily> {
    let mut levels = vec![Vec::new(); grid.depth() + 1];
    for nu in times {
        for cube in nu.atoms() {
            levels[cube.level].push(cube.index);
        }
    }
    AdaptedFamily::new(grid, levels, eta)
}

/// Audits the stopping-time sparsity condition: for every `j` and every atom
/// `A` of the stopped σ-algebra inside `E_j = {ν_j < ∞}`,
/// `μ(A ∩ E_{j+1}) <= bound · μ(A)`. Returns the worst conditional ratio.
pub fn stopping_sequence_worst_ratio(times: &[StoppingTime]) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..times.len() {
        let next: Option<&StoppingTime> = times.get(j + 1);
        for atom in times[j].atoms() {
            let grid = times[j].grid();
            let mass = grid.cube_mass(atom);
            let hit: f64 = match next {
                Some(nu) => grid
                    .leaf_range(atom)
                    .filter(|&x| nu.is_finite_at(x))
                    .map(|x| grid.leaf_measures()[x])
                    .sum(),
                None => 0.0,
            };
            worst = worst.max(hit / mass);
        }
    }
    worst
}

/// Operator selector for [`apply_sparse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SparseMode {
    /// `A_S f = Σ_k 1_{S_k} |E_k f|`
    Sum,
    /// `M_S f = sup_k 1_{S_k} |E_k f|`
    Max,
    /// `C_S f = Σ_k 1_{S_k} P_k^r(|f|)`
    Cancellative,
}

/// Applies the selected sparse operator; `r` is required only for the
/// cancellative mode.
pub fn apply_sparse(
    f: &GridFunction,
    family: &SparseFamily,
    mode: SparseMode,
    r: Option<f64>,
) -> Result<GridFunction> {
    let grid = f.grid();
    match family {
        SparseFamily::Adapted(fam) => {
            if !(Arc::ptr_eq(&fam.grid, grid) || *fam.grid == **grid) {
                return Err(Error::GridMismatch);
            }
            let mut out = vec![0.0; grid.leaf_count()];
            let per_level: Vec<Option<GridFunction>> = match mode {
                SparseMode::Cancellative => {
                    let r = r.ok_or(Error::BadRatio(-1.0))?;
                    check_ratio(r)?;
                    let absf = f.abs();
                    (0..fam.levels.len())
                        .map(|k| {
                            if fam.levels[k].is_empty() {
                                Ok(None)
                            } else {
                                cond_percentile(&absf, k, r).map(Some)
                            }
                        })
                        .collect::<Result<_>>()?
                }
                _ => {
                    let es = all_cond_expect(f);
                    (0..fam.levels.len())
                        .map(|k| {
                            if fam.levels[k].is_empty() {
                                None
                            } else {
                                Some(es[k].clone())
                            }
                        })
                        .collect()
                }
            };
            for (k, maybe) in per_level.iter().enumerate() {
                let Some(vals) = maybe else { continue };
                for &i in &fam.levels[k] {
                    for leaf in grid.leaf_range(Cube::new(k, i)) {
                        let v = vals.values()[leaf].abs();
                        match mode {
                            SparseMode::Sum | SparseMode::Cancellative => out[leaf] += v,
                            SparseMode::Max => out[leaf] = out[leaf].max(v),
                        }
                    }
                }
            }
            GridFunction::new(grid.clone(), out)
        }
        SparseFamily::Flat(fam) => {
            if fam.masses.len() != grid.leaf_count() {
                return Err(Error::GridMismatch);
            }
            let vals = match mode {
                SparseMode::Sum => fam.sum_operator(f.values()),
                SparseMode::Max => fam.maximal(f.values()),
                SparseMode::Cancellative => {
                    let r = r.ok_or(Error::BadRatio(-1.0))?;
                    fam.cancellative(f.values(), r)?
                }
            };
            GridFunction::new(grid.clone(), vals)
        }
    }
}

/// Random adapted family, built from the deepest level up so that the
/// per-atom η-sparsity bound holds at selection time: a level-`k` cube may
/// join `S_k` only if the union of the already chosen deeper sets covers at
/// most `(1-η)` of it.
pub fn random_adapted_family(
    grid: &Arc<DyadicGrid>,
    eta: f64,
    density: f64,
    rng: &mut impl rand::Rng,
) -> AdaptedFamily {
    let n = grid.leaf_count();
    let mut deeper = vec![false; n];
    let mut levels = vec![Vec::new(); grid.depth() + 1];
    for k in (0..=grid.depth()).rev() {
        let mut chosen = Vec::new();
        for cube in grid.cubes_at_level(k) {
            let range = grid.leaf_range(cube);
            let covered: f64 = range
                .clone()
                .filter(|&i| deeper[i])
                .map(|i| grid.leaf_measures()[i])
                .sum();
            let eligible = covered <= (1.0 - eta) * grid.cube_mass(cube);
            if eligible && rng.gen_bool(density) {
                chosen.push(cube.index);
            }
        }
        for &i in &chosen {
            for leaf in grid.leaf_range(Cube::new(k, i)) {
                deeper[leaf] = true;
            }
        }
        levels[k] = chosen;
    }
    AdaptedFamily::new(grid.clone(), levels, eta).expect("constructed family is well formed")
}

/// The nested chain `S_j = [0, 2^{-gj})` at level `gj`; exactly
/// `(1 - 2^{-g})`-sparse.
pub fn nested_chain(grid: &Arc<DyadicGrid>, gap: usize) -> AdaptedFamily {
    assert!(gap >= 1);
    let mut levels = vec![Vec::new(); grid.depth() + 1];
    let mut k = 0;
    while k <= grid.depth() {
        levels[k].push(0);
        k += gap;
    }
    let eta = 1.0 - 0.5f64.powi(gap as i32);
    AdaptedFamily::new(grid.clone(), levels, eta).expect("chain is well formed")
}
