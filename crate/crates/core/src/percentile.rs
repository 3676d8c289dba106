//! Conditional percentiles and the percentile maximal function.
//!
//! For a set `Q` of positive measure and `0 < r < 1`, the percentile of `f`
//! over `Q` at ratio `r` is the smallest attained value `λ` with
//! `μ{x ∈ Q : f(x) > λ} <= r μ(Q)`. On step functions this coincides with
//! the infimum definition, so no interpolation is ever performed and the
//! arithmetic stays exact on dyadic data. At `r = 1/2` it is a median.

use crate::error::{Error, Result};
use crate::grid::{Cube, GridFunction, StoppingTime};

pub fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(Error::BadRatio(r))
    }
}

/// Percentile of a weighted sample: smallest value `v` whose strict
/// super-level mass is at most `r` times the total mass.
///
/// Both defining bounds hold for the returned value:
///   (1) `mass{f > v} <= r total`,
///   (2) `mass{f < v} <= (1-r) total`.
pub fn weighted_percentile(samples: &mut Vec<(f64, f64)>, r: f64) -> f64 {
    debug_assert!(!samples.is_empty());
    samples.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));
    let total: f64 = samples.iter().map(|(_, m)| m).sum();
    let bound = r * total;
    // Walk value groups from below; the strict tail mass above a group is
    // total minus everything up to and including the group.
    let mut below_and_at = 0.0;
    let mut i = 0;
    while i < samples.len() {
        let v = samples[i].0;
        while i < samples.len() && samples[i].0 == v {
            below_and_at += samples[i].1;
            i += 1;
        }
        if total - below_and_at <= bound {
            return v;
        }
    }
    samples.last().expect("nonempty").0
}

/// `P_Q^r(f)`: percentile of `f` over the cube `Q`.
pub fn percentile_on_cube(f: &GridFunction, cube: Cube, r: f64) -> Result<f64> {
    check_ratio(r)?;
    let grid = f.grid();
    let measures = grid.leaf_measures();
    let mut samples: Vec<(f64, f64)> = grid
        .leaf_range(cube)
        .map(|i| (f.values()[i], measures[i]))
        .collect();
    Ok(weighted_percentile(&mut samples, r))
}

/// `P_k^r f`: the k-th conditional percentile, constant on level-`k` cubes.
///
/// Because the level-`k` σ-algebra is atomic, checking the percentile bounds
/// on each cube certifies them on every level-`k` measurable set.
pub fn cond_percentile(f: &GridFunction, k: usize, r: f64) -> Result<GridFunction> {
    check_ratio(r)?;
    let grid = f.grid();
    if k > grid.depth() {
        return Err(Error::LevelOutOfRange {
            level: k,
            depth: grid.depth(),
        });
    }
    let mut out = vec![0.0; grid.leaf_count()];
    for cube in grid.cubes_at_level(k) {
        let p = percentile_on_cube(f, cube, r)?;
        for i in grid.leaf_range(cube) {
            out[i] = p;
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// `P_ν^r(f) = Σ_k 1_{ν=k} P_k^r(f)`, zero where `ν = ∞`.
pub fn stopped_percentile(f: &GridFunction, nu: &StoppingTime, r: f64) -> Result<GridFunction> {
    check_ratio(r)?;
    let grid = f.grid();
    let mut out = vec![0.0; grid.leaf_count()];
    for cube in nu.atoms() {
        let p = percentile_on_cube(f, cube, r)?;
        for i in grid.leaf_range(cube) {
            out[i] = p;
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// `P_r f = sup_{k <= stop} P_k^r |f|`.
///
/// The deepest level stands in for the `k -> ∞` limit: at leaf level the
/// conditional percentile of `|f|` is `|f|` itself, so `P_r f >= |f|`
/// pointwise whenever `stop = N`.
pub fn percentile_maximal(f: &GridFunction, r: f64, stop: usize) -> Result<GridFunction> {
    check_ratio(r)?;
    let grid = f.grid();
    if stop > grid.depth() {
        return Err(Error::LevelOutOfRange {
            level: stop,
            depth: grid.depth(),
        });
    }
    let absf = f.abs();
    let mut out = vec![f64::NEG_INFINITY; grid.leaf_count()];
    for k in 0..=stop {
        let pk = cond_percentile(&absf, k, r)?;
        for (o, v) in out.iter_mut().zip(pk.values()) {
            *o = (*o).max(*v);
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// `P_r f` over the full filtration.
pub fn percentile_maximal_full(f: &GridFunction, r: f64) -> Result<GridFunction> {
    percentile_maximal(f, r, f.grid().depth())
}

/// Checks the weak-type bound `μ{P_r f > λ} <= (1/r) μ{|f| > λ}` at every
/// candidate level `λ` (all attained values of `P_r f` and `|f|`, plus 0).
/// Returns the worst ratio `lhs/rhs` observed (`0/0` counts as 0).
pub fn weak_type_worst_ratio(f: &GridFunction, p: &GridFunction, r: f64) -> f64 {
    let absf = f.abs();
    let mut candidates: Vec<f64> = p
        .values()
        .iter()
        .chain(absf.values())
        .copied()
        .chain(std::iter::once(0.0))
        .collect();
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();
    let mut worst = 0.0f64;
    for &lambda in &candidates {
        let lhs = p.measure_where(|v| v > lambda);
        let rhs = absf.measure_where(|v| v > lambda) / r;
        if lhs > 0.0 {
            if rhs == 0.0 {
                return f64::INFINITY;
            }
            worst = worst.max(lhs / rhs);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicGrid;
    use crate::martingale::cond_expect;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force oracle: scan every attained value in increasing order and
    /// return the first satisfying the strict super-level bound.
    fn percentile_oracle(vals: &[f64], masses: &[f64], r: f64) -> f64 {
        let total: f64 = masses.iter().sum();
        let mut cands: Vec<f64> = vals.to_vec();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cands.dedup();
        for c in cands {
            let tail: f64 = vals
                .iter()
                .zip(masses)
                .filter(|(v, _)| **v > c)
                .map(|(_, m)| m)
                .sum();
            if tail <= r * total {
                return c;
            }
        }
        unreachable!("largest value always satisfies the bound");
    }

    #[test]
    fn percentile_of_constant() {
        let g = DyadicGrid::uniform(3);
        let f = GridFunction::constant(g, -2.0);
        for r in [0.1, 0.5, 0.9] {
            assert_eq!(percentile_on_cube(&f, Cube::root(), r).unwrap(), -2.0);
        }
    }

    // Brute-force over candidate level sets: f = (0,0,1,1) on [0,1).
    #[test]
    fn percentile_level_sets() {
        let g = DyadicGrid::uniform(2);
        let f = GridFunction::new(g.clone(), vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(percentile_on_cube(&f, Cube::root(), 0.5).unwrap(), 0.0);
        assert_eq!(percentile_on_cube(&f, Cube::root(), 0.25).unwrap(), 1.0);
        let spike = GridFunction::new(g, vec![0.0, 0.0, 0.0, 8.0]).unwrap();
        // |{f > 0}| = 1/4 <= 1/2
        assert_eq!(percentile_on_cube(&spike, Cube::root(), 0.5).unwrap(), 0.0);
        assert!(percentile_on_cube(&spike, Cube::root(), 0.0).is_err());
        assert!(percentile_on_cube(&spike, Cube::root(), 1.0).is_err());
    }

    #[test]
    fn percentile_matches_oracle_on_random_data() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = DyadicGrid::uniform(4);
        for _ in 0..50 {
            let vals: Vec<f64> = (0..16).map(|_| rng.gen_range(-4..=4) as f64 / 2.0).collect();
            let f = GridFunction::new(g.clone(), vals.clone()).unwrap();
            for r in [0.1, 0.25, 0.5, 0.75] {
                let got = percentile_on_cube(&f, Cube::root(), r).unwrap();
                let want = percentile_oracle(&vals, g.leaf_measures(), r);
                assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn defining_bounds_hold_on_every_cube() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = DyadicGrid::uniform(5);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..32).map(|_| rng.gen_range(-8..=8) as f64 / 4.0).collect();
            let f = GridFunction::new(g.clone(), vals).unwrap();
            for r in [0.1, 0.5] {
                for k in 0..=5 {
                    let p = cond_percentile(&f, k, r).unwrap();
                    for cube in g.cubes_at_level(k) {
                        let range = g.leaf_range(cube);
                        let pv = p.values()[range.start];
                        let mass = g.cube_mass(cube);
                        let over: f64 = range
                            .clone()
                            .filter(|&i| f.values()[i] > pv)
                            .map(|i| g.leaf_measures()[i])
                            .sum();
                        let under: f64 = range
                            .clone()
                            .filter(|&i| f.values()[i] < pv)
                            .map(|i| g.leaf_measures()[i])
                            .sum();
                        assert!(over <= r * mass, "bound (1) failed");
                        assert!(under <= (1.0 - r) * mass, "bound (2) failed");
                    }
                }
            }
        }
    }

    #[test]
    fn leaf_level_percentile_is_identity() {
        let g = DyadicGrid::uniform(3);
        let f = GridFunction::new(
            g,
            vec![0.5, -1.0, 2.0, 0.0, 3.0, -0.25, 1.0, 1.0],
        )
        .unwrap();
        for r in [0.1, 0.5, 0.9] {
            assert_eq!(cond_percentile(&f, 3, r).unwrap(), f);
        }
    }

    #[test]
    fn percentile_fixes_measurable_functions() {
        // P_k^r(E_k f) = E_k f
        let g = DyadicGrid::uniform(3);
        let f = GridFunction::new(
            g,
            vec![1.0, 7.0, -2.0, 4.0, 0.0, 0.0, 3.0, -5.0],
        )
        .unwrap();
        for k in 0..=3 {
            let ek = cond_expect(&f, k).unwrap();
            for r in [0.25, 0.5] {
                assert_eq!(cond_percentile(&ek, k, r).unwrap(), ek);
            }
        }
    }

    #[test]
    fn per_atom_percentile_of_indicator() {
        let g = DyadicGrid::uniform(2);
        let f = GridFunction::new(g, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let p = cond_percentile(&f, 1, 0.5).unwrap();
        assert_eq!(p.values(), &[0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn maximal_of_spike() {
        let g = DyadicGrid::uniform(2);
        let f = GridFunction::new(g, vec![0.0, 0.0, 0.0, 8.0]).unwrap();
        let p = percentile_maximal_full(&f, 0.5).unwrap();
        assert_eq!(p.values(), &[0.0, 0.0, 0.0, 8.0]);
    }

    #[test]
    fn maximal_dominates_abs_and_constants() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = DyadicGrid::uniform(4);
        let vals: Vec<f64> = (0..16).map(|_| rng.gen_range(-100..100) as f64 / 8.0).collect();
        let f = GridFunction::new(g.clone(), vals).unwrap();
        let p = percentile_maximal_full(&f, 0.25).unwrap();
        for (pv, fv) in p.values().iter().zip(f.values()) {
            assert!(*pv >= fv.abs());
        }
        let c = GridFunction::constant(g, -3.0);
        let pc = percentile_maximal_full(&c, 0.25).unwrap();
        assert_eq!(pc.values(), &[3.0; 16]);
    }

    #[test]
    fn weak_type_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let g = DyadicGrid::uniform(6);
        for _ in 0..20 {
            let vals: Vec<f64> = (0..64)
                .map(|_| rng.gen_range(-(1 << 20)..(1 << 20)) as f64 / (1 << 19) as f64)
                .collect();
            let f = GridFunction::new(g.clone(), vals).unwrap();
            for r in [0.1, 0.25, 0.5] {
                let p = percentile_maximal_full(&f, r).unwrap();
                let worst = weak_type_worst_ratio(&f, &p, r);
                assert!(worst <= 1.0, "weak-type ratio {worst} > 1 at r={r}");
            }
        }
    }

    #[test]
    fn lp_norm_bound() {
        // ||P_r f||_p <= r^{-1/p} ||f||_p for p in {1/2, 1, 2}
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DyadicGrid::uniform(6);
        for _ in 0..10 {
            let vals: Vec<f64> = (0..64)
                .map(|_| rng.gen_range(-(1 << 20)..(1 << 20)) as f64 / (1 << 19) as f64)
                .collect();
            let f = GridFunction::new(g.clone(), vals).unwrap();
            for r in [0.1, 0.5] {
                let p = percentile_maximal_full(&f, r).unwrap();
                for q in [0.5, 1.0, 2.0] {
                    let lhs = p.lp_norm(q);
                    let rhs = r.powf(-1.0 / q) * f.lp_norm(q);
                    assert!(lhs <= rhs * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn percentile_moment_bound() {
        // P_k^r(f) <= r^{-1/q} (E_k |f|^q)^{1/q} pointwise for q in {1/2,1,2},
        // here for nonnegative f as used in the sparse operator bounds.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let g = DyadicGrid::uniform(5);
        for _ in 0..10 {
            let vals: Vec<f64> = (0..32).map(|_| rng.gen::<f64>() * 4.0).collect();
            let f = GridFunction::new(g.clone(), vals).unwrap();
            for r in [0.1, 0.5] {
                for k in 0..=5 {
                    let p = cond_percentile(&f, k, r).unwrap();
                    for q in [0.5, 1.0, 2.0] {
                        let fq = f.map(|v| v.abs().powf(q));
                        let ek = cond_expect(&fq, k).unwrap();
                        for (pv, ev) in p.values().iter().zip(ek.values()) {
                            let bound = (ev / r).powf(1.0 / q);
                            assert!(*pv <= bound * (1.0 + 1e-12));
                        }
                    }
                }
            }
        }
    }
}
