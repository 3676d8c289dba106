//! The alternating-rescaling transformation showing that plain sparse
//! averages cannot dominate the dyadic maximal function, plus the audit of
//! which cubes any candidate family is forced to contain.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicGrid, GridFunction};

/// `f_J = (f ∘ φ_J) 1_J`: the copy of `f` squeezed onto the dyadic interval
/// `J` of the deeper output grid, by exact index arithmetic.
fn add_rescaled(out: &mut [f64], out_depth: usize, f: &GridFunction, j: Cube, weight: f64) {
    let f_depth = f.grid().depth();
    debug_assert!(j.level + f_depth <= out_depth);
    let span = 1usize << (out_depth - j.level - f_depth); // output cells per f-leaf
    let start = j.index << (out_depth - j.level);
    for (leaf, &v) in f.values().iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        let base = start + leaf * span;
        for cell in base..base + span {
            out[cell] += weight * v;
        }
    }
}

/// `R_N f`: `2^N` concatenated copies of `f` at scale `2^-N`.
pub fn rescale_concat(f: &GridFunction, n: usize) -> GridFunction {
    let out_depth = n + f.grid().depth();
    let grid = DyadicGrid::uniform(out_depth);
    let mut out = vec![0.0; grid.leaf_count()];
    for idx in 0..1usize << n {
        add_rescaled(&mut out, out_depth, f, Cube::new(n, idx), 1.0);
    }
    GridFunction::new(grid, out).expect("rescaled values are finite")
}

/// Indices of `D'_N`: the level-`N` intervals minus the two inside
/// `[0, 2^{-N+1})`, the two inside `[1/2, 1/2 + 2^{-N+1})` and the two
/// inside `[1 - 2^{-N+1}, 1)`.
pub fn retained_indices(n: usize) -> Vec<usize> {
    let total = 1usize << n;
    let half = total / 2;
    (0..total)
        .filter(|&i| i >= 2 && i != half && i != half + 1 && i < total - 2)
        .collect()
}

/// The layer transformation
/// `T_N f = A Σ_{n=2}^{2^N-1} (-1)^n f_{J_n} + 2^{N-1} f_{[1-2^{-N+1},1)}`.
///
/// Exactly satisfied properties, checked in the audits:
///   (1) `|⟨T_N f⟩_J| >= A |⟨f⟩_I|` for all `J ∈ D'_N`,
///   (2) `⟨T_N f⟩_{[0,2^{-k})} = 0` for `k = 1..N`,
///   (3) `⟨T_N f⟩_I = ⟨f⟩_I`.
pub fn build_tn(f: &GridFunction, n: usize, a: f64) -> Result<GridFunction> {
    if n < 3 {
        return Err(Error::Parse(format!("layer parameter N={n} must be >= 3")));
    }
    let out_depth = n + f.grid().depth();
    if out_depth > 26 {
        return Err(Error::DepthOverflow {
            needed: out_depth,
            have: 26,
        });
    }
    let grid = DyadicGrid::uniform(out_depth);
    let mut out = vec![0.0; grid.leaf_count()];
    let total = 1usize << n;
    for idx in 2..total {
        let sign = if idx % 2 == 0 { 1.0 } else { -1.0 };
        add_rescaled(&mut out, out_depth, f, Cube::new(n, idx), sign * a);
    }
    // tail copy on [1 - 2^{-N+1}, 1), the last level-(N-1) interval
    let tail = Cube::new(n - 1, (1usize << (n - 1)) - 1);
    add_rescaled(&mut out, out_depth, f, tail, (1usize << (n - 1)) as f64);
    GridFunction::new(grid, out)
}

/// One layer record of the iterated construction.
#[derive(Debug, Clone)]
pub struct CounterexampleAudit {
    /// Cubes any family satisfying the domination at constant `C_0` is
    /// forced to contain (root plus, per layer, the retained intervals with
    /// average above `C_0`).
    pub forced: Vec<Cube>,
    /// Best achievable sparsity ratio of the forced set: the laminar bound
    /// `min_Q μ(Q) / Σ_{Q' ⊆ Q} μ(Q')`.
    pub best_ratio: f64,
}

pub struct CounterexampleSequence {
    pub function: GridFunction,
    pub audit: CounterexampleAudit,
    pub layers: usize,
    pub per_layer_n: usize,
    pub amplitude: f64,
    pub c0: f64,
}

/// Builds `f_n` by iterating the layer transformation `n` times starting
/// from `f_0 ≡ 1`, then enumerates the forced cubes and their best
/// achievable sparsity ratio. The amplitude must satisfy `A >= 8 C_0`.
pub fn counterexample_sequence(
    layers: usize,
    per_layer_n: usize,
    a: f64,
    c0: f64,
) -> Result<CounterexampleSequence> {
    if a < 8.0 * c0 {
        return Err(Error::Parse(format!(
            "amplitude {a} below the required 8*C0 = {}",
            8.0 * c0
        )));
    }
    let mut f = GridFunction::constant(DyadicGrid::uniform(0), 1.0);
    for _ in 0..layers {
        f = build_tn(&f, per_layer_n, a)?;
    }
    let audit = forced_set_audit(&f, layers, per_layer_n, c0);
    Ok(CounterexampleSequence {
        function: f,
        audit,
        layers,
        per_layer_n,
        amplitude: a,
        c0,
    })
}

/// Recursive forced-cube enumeration on the actual grid function: a cube is
/// forced when the construction pins a nonzero average above `C_0` on it.
/// Returns the forced cubes and, per cube, the total measure of forced
/// cubes inside it; the family is laminar so the best achievable sparsity
/// ratio is the min of `μ(Q)/subtree-measure`.
pub fn forced_set_audit(
    f: &GridFunction,
    layers: usize,
    per_layer_n: usize,
    c0: f64,
) -> CounterexampleAudit {
    let grid = f.grid();
    let mut forced = Vec::new();
    let mut best = f64::INFINITY;

    fn descend(
        f: &GridFunction,
        grid: &Arc<DyadicGrid>,
        cube: Cube,
        layers_left: usize,
        per_layer_n: usize,
        c0: f64,
        forced: &mut Vec<Cube>,
        best: &mut f64,
    ) -> f64 {
        forced.push(cube);
        let mut subtree = grid.cube_mass(cube);
        if layers_left > 0 {
            for rel in retained_indices(per_layer_n) {
                let child = Cube::new(
                    cube.level + per_layer_n,
                    (cube.index << per_layer_n) + rel,
                );
                if f.average_on(child).abs() > c0 {
                    subtree += descend(
                        f,
                        grid,
                        child,
                        layers_left - 1,
                        per_layer_n,
                        c0,
                        forced,
                        best,
                    );
                }
            }
        }
        let ratio = grid.cube_mass(cube) / subtree;
        *best = best.min(ratio);
        subtree
    }

    descend(
        f,
        grid,
        Cube::root(),
        layers,
        per_layer_n,
        c0,
        &mut forced,
        &mut best,
    );
    CounterexampleAudit {
        forced,
        best_ratio: best,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn left_prefix_average(f: &GridFunction, k: usize) -> f64 {
        f.average_on(Cube::new(k, 0))
    }

    #[test]
    fn layer_properties_exact() {
        for n in [3usize, 4, 5] {
            let one = GridFunction::constant(DyadicGrid::uniform(0), 1.0);
            let a = 16.0;
            let t = build_tn(&one, n, a).unwrap();
            // (3) ⟨T_N f⟩_I = ⟨f⟩_I
            assert_eq!(t.integral(), 1.0);
            // (2) zero averages on [0, 2^{-k}) for k = 1..N
            for k in 1..=n {
                assert_eq!(left_prefix_average(&t, k), 0.0, "k={k}");
            }
            // (1) |⟨T_N f⟩_J| >= A on every retained interval
            for idx in retained_indices(n) {
                let avg = t.average_on(Cube::new(n, idx));
                assert!(avg.abs() >= a, "interval {idx}: {avg}");
                assert_eq!(avg.abs(), a);
            }
        }
    }

    #[test]
    fn right_half_average_growth() {
        // averages on the right-edge chain grow like 2^k ⟨f⟩ (the N = 4
        // staircase pattern), while the left chain vanishes
        let one = GridFunction::constant(DyadicGrid::uniform(0), 1.0);
        let n = 4;
        let t = build_tn(&one, n, 8.0).unwrap();
        for k in 1..n {
            let right = Cube::new(k, (1usize << k) - 1);
            assert_eq!(t.average_on(right), (1u64 << k) as f64);
            assert_eq!(left_prefix_average(&t, k), 0.0);
        }
    }

    #[test]
    fn concatenation_helper() {
        let g = DyadicGrid::uniform(1);
        let f = GridFunction::new(g, vec![1.0, -1.0]).unwrap();
        let r = rescale_concat(&f, 2);
        assert_eq!(r.grid().depth(), 3);
        assert_eq!(
            r.values(),
            &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0]
        );
    }

    #[test]
    fn zero_layers_is_trivial() {
        let seq = counterexample_sequence(0, 4, 8.0, 1.0).unwrap();
        assert_eq!(seq.audit.forced, vec![Cube::root()]);
        assert_eq!(seq.audit.best_ratio, 1.0);
    }

    #[test]
    fn forced_ratio_strictly_decreasing() {
        let c0 = 1.0;
        let a = 8.0 * c0;
        let mut prev = f64::INFINITY;
        for n in 0..=2 {
            let seq = counterexample_sequence(n, 4, a, c0).unwrap();
            assert!(
                seq.audit.best_ratio < prev,
                "ratio must strictly decrease: {} !< {prev}",
                seq.audit.best_ratio
            );
            prev = seq.audit.best_ratio;
        }
    }

    #[test]
    fn forced_ratio_matches_laminar_oracle() {
        // exhaustive check at depth 8: enumerate every forced cube's subtree
        // sum directly from the definition
        let seq = counterexample_sequence(2, 4, 8.0, 1.0).unwrap();
        let f = &seq.function;
        let grid = f.grid();
        assert_eq!(grid.depth(), 8);
        let forced = &seq.audit.forced;
        let mut best = f64::INFINITY;
        for q in forced {
            let subtree: f64 = forced
                .iter()
                .filter(|q2| q.contains(q2))
                .map(|q2| grid.cube_mass(*q2))
                .sum();
            best = best.min(grid.cube_mass(*q) / subtree);
        }
        assert!((best - seq.audit.best_ratio).abs() < 1e-12);
        // every non-root forced cube really carries a large average
        for q in forced.iter().filter(|q| q.level > 0) {
            assert!(f.average_on(*q).abs() > seq.c0);
        }
    }

    #[test]
    fn amplitude_below_threshold_rejected() {
        assert!(counterexample_sequence(1, 4, 4.0, 1.0).is_err());
        assert!(build_tn(&GridFunction::constant(DyadicGrid::uniform(0), 1.0), 2, 8.0).is_err());
    }
}
