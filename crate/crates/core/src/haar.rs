//! Haar expansion and Haar shift operators of complexity `(t, s)` on the
//! one-dimensional dyadic system.
//!
//! The fixed basis is `h_Q = |Q|^{-1/2} (1_{Q_left} - 1_{Q_right})`, one
//! wavelet per cube of level `< N`, which requires the uniform measure.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicGrid, GridFunction};

/// `⟨f, h_Q⟩` for every cube of level `< N`, keyed by cube.
pub fn haar_expand(f: &GridFunction) -> Result<BTreeMap<Cube, f64>> {
    let grid = f.grid();
    if !grid.is_uniform() {
        return Err(Error::NonUniformHaar);
    }
    let mut out = BTreeMap::new();
    for k in 0..grid.depth() {
        for cube in grid.cubes_at_level(k) {
            out.insert(cube, haar_coefficient(f, cube));
        }
    }
    Ok(out)
}

/// Single Haar coefficient `⟨f, h_Q⟩ = |Q|^{-1/2} (∫_{Q_l} f - ∫_{Q_r} f)`.
pub fn haar_coefficient(f: &GridFunction, cube: Cube) -> f64 {
    let grid = f.grid();
    debug_assert!(cube.level < grid.depth());
    let scale = 1.0 / grid.cube_mass(cube).sqrt();
    scale * (f.integral_on(cube.left_child()) - f.integral_on(cube.right_child()))
}

/// Adds `c · h_S` to a leaf vector.
fn add_haar(grid: &DyadicGrid, out: &mut [f64], cube: Cube, c: f64) {
    let amp = c / grid.cube_mass(cube).sqrt();
    for i in grid.leaf_range(cube.left_child()) {
        out[i] += amp;
    }
    for i in grid.leaf_range(cube.right_child()) {
        out[i] -= amp;
    }
}

/// Reconstruction `⟨f⟩ + Σ_Q ⟨f,h_Q⟩ h_Q`, exact on uniform grids.
pub fn haar_reconstruct(
    grid: &Arc<DyadicGrid>,
    mean: f64,
    coeffs: &BTreeMap<Cube, f64>,
) -> Result<GridFunction> {
    let mut out = vec![mean; grid.leaf_count()];
    for (cube, c) in coeffs {
        add_haar(grid, &mut out, *cube, *c);
    }
    GridFunction::new(grid.clone(), out)
}

/// A Haar shift of complexity `(t, s)`: coefficients `α^Q_{TS}` move the
/// Haar coefficient of `T ∈ D_t(Q)` to the wavelet of `S ∈ D_s(Q)`. Stored
/// sparsely so single-scale and banded shifts cost `O(support)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarShiftSpec {
    pub t: usize,
    pub s: usize,
    /// Keyed by `(Q, T, S)`.
    alpha: BTreeMap<(Cube, Cube, Cube), f64>,
}

impl HaarShiftSpec {
    pub fn new(t: usize, s: usize) -> Self {
        HaarShiftSpec {
            t,
            s,
            alpha: BTreeMap::new(),
        }
    }

    /// Inserts a coefficient after checking the generation constraints.
    pub fn insert(&mut self, q: Cube, tc: Cube, sc: Cube, value: f64) -> Result<()> {
        if tc.level != q.level + self.t || !q.contains(&tc) {
            return Err(Error::BadCoefficient(format!(
                "T cube {tc} is not a generation-{} descendant of {q}",
                self.t
            )));
        }
        if sc.level != q.level + self.s || !q.contains(&sc) {
            return Err(Error::BadCoefficient(format!(
                "S cube {sc} is not a generation-{} descendant of {q}",
                self.s
            )));
        }
        if !value.is_finite() {
            return Err(Error::NonFinite);
        }
        self.alpha.insert((q, tc, sc), value);
        Ok(())
    }

    pub fn coefficients(&self) -> impl Iterator<Item = (&(Cube, Cube, Cube), &f64)> {
        self.alpha.iter()
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    /// `||α||_{ℓ∞}`: the largest stored magnitude.
    pub fn norm_bound(&self) -> f64 {
        self.alpha.values().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// Checks that every key fits inside the grid: wavelets need children,
    /// so `T` and `S` must live at level `<= depth - 1`.
    pub fn validate_for(&self, grid: &DyadicGrid) -> Result<()> {
        let max_level = grid.depth().saturating_sub(1);
        for (q, tc, sc) in self.alpha.keys() {
            if tc.level > max_level || sc.level > max_level {
                return Err(Error::BadCoefficient(format!(
                    "key (Q={q}, T={tc}, S={sc}) exceeds depth {}",
                    grid.depth()
                )));
            }
        }
        Ok(())
    }

    /// The identity-on-the-Haar-span multiplier: `t = s = 0`,
    /// `α^Q_{QQ} = 1` for every cube, so `Sh f = f - ⟨f⟩`.
    pub fn identity_multiplier(grid: &DyadicGrid) -> Self {
        let mut spec = HaarShiftSpec::new(0, 0);
        for k in 0..grid.depth() {
            for q in grid.cubes_at_level(k) {
                spec.insert(q, q, q, 1.0).expect("valid key");
            }
        }
        spec
    }

    /// Dense random coefficients in `[-1, 1]` for every admissible
    /// `(Q, T, S)` triple of the grid.
    pub fn random(grid: &DyadicGrid, t: usize, s: usize, rng: &mut impl rand::Rng) -> Self {
        let mut spec = HaarShiftSpec::new(t, s);
        let max_root = grid.depth().saturating_sub(1 + t.max(s));
        for k in 0..=max_root {
            for q in grid.cubes_at_level(k) {
                for ti in 0..1usize << t {
                    let tc = Cube::new(k + t, (q.index << t) + ti);
                    for si in 0..1usize << s {
                        let sc = Cube::new(k + s, (q.index << s) + si);
                        spec.insert(q, tc, sc, rng.gen_range(-1.0..=1.0))
                            .expect("valid key");
                    }
                }
            }
        }
        spec
    }

    pub fn to_json(&self) -> HaarShiftJson {
        HaarShiftJson {
            t: self.t,
            s: self.s,
            alpha: self
                .alpha
                .iter()
                .map(|((q, tc, sc), v)| HaarCoefficientJson {
                    q: [q.level, q.index],
                    t: [tc.level, tc.index],
                    s: [sc.level, sc.index],
                    value: *v,
                })
                .collect(),
        }
    }

    pub fn from_json(json: &HaarShiftJson) -> Result<Self> {
        let mut spec = HaarShiftSpec::new(json.t, json.s);
        for c in &json.alpha {
            spec.insert(
                Cube::new(c.q[0], c.q[1]),
                Cube::new(c.t[0], c.t[1]),
                Cube::new(c.s[0], c.s[1]),
                c.value,
            )?;
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HaarShiftJson {
    pub t: usize,
    pub s: usize,
    pub alpha: Vec<HaarCoefficientJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HaarCoefficientJson {
    pub q: [usize; 2],
    pub t: [usize; 2],
    pub s: [usize; 2],
    pub value: f64,
}

fn keys_under<'a>(
    spec: &'a HaarShiftSpec,
    root: Option<Cube>,
) -> impl Iterator<Item = (&'a (Cube, Cube, Cube), &'a f64)> {
    spec.coefficients()
        .filter(move |((q, _, _), _)| root.map_or(true, |r| r.contains(q)))
}

/// Per-level contributions of the shift at each leaf: entry `k` holds
/// `Σ_{Q ∈ D_k} Σ_{T,S} α^Q_{TS} ⟨f,h_T⟩ h_S(x)`.
fn level_contributions(
    f: &GridFunction,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
) -> Result<Vec<Vec<f64>>> {
    let grid = f.grid();
    if !grid.is_uniform() {
        return Err(Error::NonUniformHaar);
    }
    spec.validate_for(grid)?;
    let coeffs = haar_expand(f)?;
    let mut levels = vec![vec![0.0; grid.leaf_count()]; grid.depth() + 1];
    for ((q, tc, sc), &a) in keys_under(spec, root) {
        let ft = coeffs[tc];
        add_haar(grid, &mut levels[q.level], *sc, a * ft);
    }
    Ok(levels)
}

/// `Sh f`, optionally localized to `root` (summing only over `Q ⊆ root`).
pub fn apply_shift(
    f: &GridFunction,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
) -> Result<GridFunction> {
    let grid = f.grid();
    let levels = level_contributions(f, spec, root)?;
    let mut out = vec![0.0; grid.leaf_count()];
    for lvl in &levels {
        for (o, v) in out.iter_mut().zip(lvl) {
            *o += v;
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// The adjoint shift: coefficient map transposed, `⟨Sh f, g⟩ = ⟨f, Sh† g⟩`.
pub fn apply_shift_adjoint(
    f: &GridFunction,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
) -> Result<GridFunction> {
    let grid = f.grid();
    if !grid.is_uniform() {
        return Err(Error::NonUniformHaar);
    }
    spec.validate_for(grid)?;
    let coeffs = haar_expand(f)?;
    let mut out = vec![0.0; grid.leaf_count()];
    for ((_, tc, sc), &a) in keys_under(spec, root) {
        add_haar(grid, &mut out, *tc, a * coeffs[sc]);
    }
    GridFunction::new(grid.clone(), out)
}

/// Windowed shift `Σ_{ℓ<=k<=m} Σ_{Q∈D_k} …`, the linear pieces whose sup is
/// the maximal truncation.
pub fn apply_shift_window(
    f: &GridFunction,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
    window: (usize, usize),
) -> Result<GridFunction> {
    let grid = f.grid();
    let levels = level_contributions(f, spec, root)?;
    let mut out = vec![0.0; grid.leaf_count()];
    for lvl in &levels[window.0..=window.1.min(grid.depth())] {
        for (o, v) in out.iter_mut().zip(lvl) {
            *o += v;
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// `Sh* f(x) = sup over level windows [ℓ,m] ⊆ [0,N] of the windowed sum`,
/// computed from prefix sums of the per-level contributions; always
/// `>= |Sh f|` pointwise because the full window participates.
pub fn shift_max_trunc(
    f: &GridFunction,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
) -> Result<GridFunction> {
    let grid = f.grid();
    let levels = level_contributions(f, spec, root)?;
    let mut out = vec![0.0; grid.leaf_count()];
    for x in 0..out.len() {
        let mut prefix = 0.0;
        let mut lo = 0.0f64;
        let mut hi = 0.0f64;
        let mut best = 0.0f64;
        for lvl in &levels {
            prefix += lvl[x];
            best = best.max(prefix - lo).max(hi - prefix);
            lo = lo.min(prefix);
            hi = hi.max(prefix);
        }
        out[x] = best;
    }
    GridFunction::new(grid.clone(), out)
}

/// Adjoint of the windowed shift: transposed coefficients, same window.
fn apply_shift_window_adjoint(
    f: &GridFunction,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
    window: (usize, usize),
) -> Result<GridFunction> {
    let grid = f.grid();
    if !grid.is_uniform() {
        return Err(Error::NonUniformHaar);
    }
    let coeffs = haar_expand(f)?;
    let mut out = vec![0.0; grid.leaf_count()];
    for ((q, tc, sc), &a) in keys_under(spec, root) {
        if q.level >= window.0 && q.level <= window.1 {
            add_haar(grid, &mut out, *tc, a * coeffs[sc]);
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// Power-iteration estimate of the operator norm of a windowed, localized
/// shift: `steps` iterations of `W†W` on a seeded random start, restricted
/// to functions supported on `root`.
pub fn windowed_norm(
    grid: &Arc<DyadicGrid>,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
    window: (usize, usize),
    steps: usize,
    seed: u64,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let support = root
        .map(|r| grid.leaf_range(r))
        .unwrap_or(0..grid.leaf_count());
    let mut v = vec![0.0; grid.leaf_count()];
    for i in support.clone() {
        v[i] = rng.gen_range(-1.0..=1.0);
    }
    let mut vf = GridFunction::new(grid.clone(), v)?;
    let mut estimate = 0.0;
    for _ in 0..steps {
        let n = vf.lp_norm(2.0);
        if n == 0.0 {
            return Ok(0.0);
        }
        vf = vf.map(|x| x / n);
        let wv = apply_shift_window(&vf, spec, root, window)?;
        estimate = wv.lp_norm(2.0);
        let mut next = apply_shift_window_adjoint(&wv, spec, root, window)?.into_values();
        if let Some(r) = root {
            let keep = grid.leaf_range(r);
            for (i, val) in next.iter_mut().enumerate() {
                if !keep.contains(&i) {
                    *val = 0.0;
                }
            }
        }
        vf = GridFunction::new(grid.clone(), next)?;
    }
    Ok(estimate)
}

/// Measured stand-in for the operator norm of the maximal truncation
/// `Sh*_root`: the max of the power-iteration norms over all level windows.
/// This is a lower bound for the true sublinear norm; audits that consume it
/// apply the documented 1.01 safety factor.
pub fn measured_max_trunc_norm(
    grid: &Arc<DyadicGrid>,
    spec: &HaarShiftSpec,
    root: Option<Cube>,
    steps: usize,
    seed: u64,
) -> Result<f64> {
    let lo = root.map_or(0, |r| r.level);
    let hi = grid.depth();
    let mut best = 0.0f64;
    for l in lo..=hi {
        for m in l..=hi {
            best = best.max(windowed_norm(grid, spec, root, (l, m), steps, seed)?);
        }
    }
    Ok(best)
}

/// One step of the shadow enlargement from the Haar-shift argument:
/// `A' = {x ∈ root : M_root(1_A)(x) > 1/(2^d+1)}` with `d = 1`, realized as
/// the union of the maximal dyadic cubes where the indicator averages above
/// one third.
pub fn enlarge_once(grid: &DyadicGrid, mask: &[bool], root: Cube) -> Vec<bool> {
    let third = 1.0 / 3.0;
    let depth = grid.depth();
    let mut out = vec![false; mask.len()];
    fn mask_mass(grid: &DyadicGrid, mask: &[bool], cube: Cube) -> f64 {
        grid.leaf_range(cube)
            .filter(|&i| mask[i])
            .map(|i| grid.leaf_measures()[i])
            .sum()
    }
    let mut stack = vec![(root, mask_mass(grid, mask, root))];
    while let Some((cube, m)) = stack.pop() {
        if m <= 0.0 {
            continue;
        }
        if m / grid.cube_mass(cube) > third {
            for i in grid.leaf_range(cube) {
                out[i] = true;
            }
            continue;
        }
        if cube.level == depth {
            continue;
        }
        let l = cube.left_child();
        let r = cube.right_child();
        stack.push((l, mask_mass(grid, mask, l)));
        stack.push((r, mask_mass(grid, mask, r)));
    }
    out
}

/// `A^{(n)}`: n-fold enlargement.
pub fn iterated_enlargement(grid: &DyadicGrid, mask: &[bool], root: Cube, n: usize) -> Vec<bool> {
    let mut cur = mask.to_vec();
    for _ in 0..n {
        cur = enlarge_once(grid, &cur, root);
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn haar_atom(grid: &Arc<DyadicGrid>, cube: Cube) -> GridFunction {
        let mut v = vec![0.0; grid.leaf_count()];
        add_haar(grid, &mut v, cube, 1.0);
        GridFunction::new(grid.clone(), v).unwrap()
    }

    #[test]
    fn expansion_basics() {
        let g = DyadicGrid::uniform(2);
        let c = GridFunction::constant(g.clone(), 5.0);
        assert!(haar_expand(&c).unwrap().values().all(|&v| v == 0.0));

        let root_atom = haar_atom(&g, Cube::root());
        let coeffs = haar_expand(&root_atom).unwrap();
        assert_eq!(coeffs[&Cube::root()], 1.0);
        assert_eq!(coeffs[&Cube::new(1, 0)], 0.0);
        assert_eq!(coeffs[&Cube::new(1, 1)], 0.0);

        let f = GridFunction::new(g, vec![1.0, 3.0, 5.0, 7.0]).unwrap();
        // direct inner product: (1+3)/4 - (5+7)/4 = -2
        assert_eq!(haar_expand(&f).unwrap()[&Cube::root()], -2.0);
    }

    #[test]
    fn expansion_reconstructs_exactly() {
        let g = DyadicGrid::uniform(5);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = GridFunction::new(
            g.clone(),
            (0..32)
                .map(|_| rng.gen_range(-(1 << 16)..(1 << 16)) as f64 / 1024.0)
                .collect(),
        )
        .unwrap();
        let coeffs = haar_expand(&f).unwrap();
        let back = haar_reconstruct(&g, f.integral(), &coeffs).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn expansion_rejects_non_uniform() {
        let g = DyadicGrid::with_measures(1, vec![0.25, 0.75]).unwrap();
        let f = GridFunction::constant(g, 1.0);
        assert!(matches!(haar_expand(&f), Err(Error::NonUniformHaar)));
    }

    #[test]
    fn zero_and_identity_shift() {
        let g = DyadicGrid::uniform(3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = GridFunction::new(
            g.clone(),
            (0..8).map(|_| rng.gen_range(-8..8) as f64 / 2.0).collect(),
        )
        .unwrap();
        let zero = HaarShiftSpec::new(0, 0);
        assert_eq!(apply_shift(&f, &zero, None).unwrap().values(), &[0.0; 8]);
        assert_eq!(shift_max_trunc(&f, &zero, None).unwrap().values(), &[0.0; 8]);

        let id = HaarShiftSpec::identity_multiplier(&g);
        let sh = apply_shift(&f, &id, None).unwrap();
        let mean = f.integral();
        for (a, b) in sh.values().iter().zip(f.values()) {
            assert!((a - (b - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_coefficient_moves_one_wavelet() {
        let g = DyadicGrid::uniform(3);
        let tcube = Cube::new(1, 0);
        let scube = Cube::new(1, 1);
        let mut spec = HaarShiftSpec::new(1, 1);
        spec.insert(Cube::root(), tcube, scube, 1.0).unwrap();
        let f = haar_atom(&g, tcube);
        let sh = apply_shift(&f, &spec, None).unwrap();
        let want = haar_atom(&g, scube);
        for (a, b) in sh.values().iter().zip(want.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        // only one window contributes, so the maximal truncation is |h_S|
        let st = shift_max_trunc(&f, &spec, None).unwrap();
        for (a, b) in st.values().iter().zip(want.values()) {
            assert!((a - b.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn insert_validates_generations() {
        let mut spec = HaarShiftSpec::new(1, 0);
        // T must sit exactly one generation below Q
        assert!(spec.insert(Cube::root(), Cube::new(2, 0), Cube::root(), 1.0).is_err());
        assert!(spec.insert(Cube::root(), Cube::new(1, 0), Cube::new(1, 0), 1.0).is_err());
        assert!(spec.insert(Cube::root(), Cube::new(1, 0), Cube::root(), 1.0).is_ok());
    }

    #[test]
    fn adjoint_relation_exact() {
        let g = DyadicGrid::uniform(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = HaarShiftSpec::random(&g, 1, 2, &mut rng);
        let f = GridFunction::new(
            g.clone(),
            (0..16).map(|_| rng.gen_range(-8..8) as f64 / 4.0).collect(),
        )
        .unwrap();
        let h = GridFunction::new(
            g.clone(),
            (0..16).map(|_| rng.gen_range(-8..8) as f64 / 4.0).collect(),
        )
        .unwrap();
        let lhs = apply_shift(&f, &spec, None)
            .unwrap()
            .zip_with(&h, |a, b| a * b)
            .integral();
        let rhs = apply_shift_adjoint(&h, &spec, None)
            .unwrap()
            .zip_with(&f, |a, b| a * b)
            .integral();
        assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn max_trunc_dominates_shift_and_windows() {
        let g = DyadicGrid::uniform(5);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = HaarShiftSpec::random(&g, 0, 1, &mut rng);
        let f = GridFunction::new(
            g.clone(),
            (0..32).map(|_| rng.gen_range(-8..8) as f64 / 4.0).collect(),
        )
        .unwrap();
        let st = shift_max_trunc(&f, &spec, None).unwrap();
        let sh = apply_shift(&f, &spec, None).unwrap();
        for (a, b) in st.values().iter().zip(sh.values()) {
            assert!(*a >= b.abs() - 1e-12);
        }
        // window enumeration oracle
        for l in 0..=5 {
            for m in l..=5 {
                let w = apply_shift_window(&f, &spec, None, (l, m)).unwrap();
                for (a, b) in st.values().iter().zip(w.values()) {
                    assert!(*a >= b.abs() - 1e-12, "window ({l},{m})");
                }
            }
        }
    }

    #[test]
    fn l2_norm_estimate_tracks_coefficient_bound() {
        let g = DyadicGrid::uniform(6);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = HaarShiftSpec::random(&g, 0, 0, &mut rng);
        let full = (0usize, 6usize);
        let norm = windowed_norm(&g, &spec, None, full, 50, 7).unwrap();
        let bound = spec.norm_bound();
        assert!(norm > 0.05 * bound, "norm {norm} too small vs ||α|| = {bound}");
        assert!(norm <= 4.0 * bound, "norm {norm} too large vs ||α|| = {bound}");
    }

    #[test]
    fn shadow_growth_bound() {
        // |A^{(n)}| <= 3^n |A| for the iterated enlargement at d = 1.
        let g = DyadicGrid::uniform(7);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let mask: Vec<bool> = (0..128).map(|_| rng.gen_bool(0.1)).collect();
            let base: f64 = mask
                .iter()
                .enumerate()
                .filter(|(_, b)| **b)
                .map(|(i, _)| g.leaf_measures()[i])
                .sum();
            for n in 1..=3 {
                let big = iterated_enlargement(&g, &mask, Cube::root(), n);
                let grown: f64 = big
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| **b)
                    .map(|(i, _)| g.leaf_measures()[i])
                    .sum();
                assert!(grown <= 3f64.powi(n as i32) * base + 1e-12);
                // enlargement is monotone
                for (b, m) in big.iter().zip(&mask) {
                    assert!(*b || !*m);
                }
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let g = DyadicGrid::uniform(3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = HaarShiftSpec::random(&g, 1, 0, &mut rng);
        let text = serde_json::to_string(&spec.to_json()).unwrap();
        let parsed: HaarShiftJson = serde_json::from_str(&text).unwrap();
        assert_eq!(HaarShiftSpec::from_json(&parsed).unwrap(), spec);
    }
}
