//! Conditional expectations, martingale differences and Doob's maximal
//! function on a dyadic grid.

use crate::error::{Error, Result};
use crate::grid::{GridFunction, StoppingTime};

/// `E_k[f]`: the measure-weighted average of `f` on each level-`k` cube,
/// written back as a leaf function.
pub fn cond_expect(f: &GridFunction, k: usize) -> Result<GridFunction> {
    let grid = f.grid();
    if k > grid.depth() {
        return Err(Error::LevelOutOfRange {
            level: k,
            depth: grid.depth(),
        });
    }
    let mut out = vec![0.0; grid.leaf_count()];
    for cube in grid.cubes_at_level(k) {
        let avg = f.average_on(cube);
        for i in grid.leaf_range(cube) {
            out[i] = avg;
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// All conditional expectations `E_0 f, …, E_N f` in one bottom-up sweep.
///
/// Averages are computed from exact child sums so that, for dyadic-rational
/// inputs on uniform grids, `all_cond_expect(f)[k]` agrees bit for bit with
/// `cond_expect(f, k)`.
pub fn all_cond_expect(f: &GridFunction) -> Vec<GridFunction> {
    let grid = f.grid();
    let depth = grid.depth();
    // integrals[k][i] = ∫_{(k,i)} f dμ
    let mut integrals: Vec<Vec<f64>> = vec![Vec::new(); depth + 1];
    integrals[depth] = f
        .values()
        .iter()
        .zip(grid.leaf_measures())
        .map(|(v, m)| v * m)
        .collect();
    for k in (0..depth).rev() {
        integrals[k] = (0..1usize << k)
            .map(|i| integrals[k + 1][2 * i] + integrals[k + 1][2 * i + 1])
            .collect();
    }
    (0..=depth)
        .map(|k| {
            let mut out = vec![0.0; grid.leaf_count()];
            for cube in grid.cubes_at_level(k) {
                let avg = integrals[k][cube.index] / grid.cube_mass(cube);
                for i in grid.leaf_range(cube) {
                    out[i] = avg;
                }
            }
            GridFunction::new(grid.clone(), out).expect("averages of finite values are finite")
        })
        .collect()
}

/// `df_k = E_k f - E_{k-1} f` for `k >= 1`, and `df_0 = E_0 f`.
pub fn mart_diff(f: &GridFunction, k: usize) -> Result<GridFunction> {
    if k == 0 {
        return cond_expect(f, 0);
    }
    let ek = cond_expect(f, k)?;
    let ekm1 = cond_expect(f, k - 1)?;
    Ok(ek.zip_with(&ekm1, |a, b| a - b))
}

/// All martingale differences `df_0, …, df_N`.
pub fn all_mart_diff(f: &GridFunction) -> Vec<GridFunction> {
    let es = all_cond_expect(f);
    let mut out = Vec::with_capacity(es.len());
    out.push(es[0].clone());
    for k in 1..es.len() {
        out.push(es[k].zip_with(&es[k - 1], |a, b| a - b));
    }
    out
}

/// Window for the Doob maximal function: either a fixed starting level or a
/// stopping time (the sup then runs over `k >= ν(x)`, empty when `ν = ∞`).
pub enum MaxStart<'a> {
    Level(usize),
    Stopped(&'a StoppingTime),
}

impl From<usize> for MaxStart<'_> {
    fn from(k: usize) -> Self {
        MaxStart::Level(k)
    }
}

/// Doob's maximal function `sup_k |E_k f|` over the window `[start, stop]`.
///
/// With a stopping-time start, the output is `sup_{k >= ν(x)} |E_k f(x)|`
/// and `0` where `ν(x) = ∞`.
pub fn doob_maximal(f: &GridFunction, start: MaxStart<'_>, stop: usize) -> Result<GridFunction> {
    let grid = f.grid();
    if stop > grid.depth() {
        return Err(Error::LevelOutOfRange {
            level: stop,
            depth: grid.depth(),
        });
    }
    let es = all_cond_expect(f);
    let mut out = vec![0.0; grid.leaf_count()];
    match start {
        MaxStart::Level(s) => {
            if s > stop {
                return Err(Error::LevelOutOfRange {
                    level: s,
                    depth: stop,
                });
            }
            for x in 0..out.len() {
                let mut best = 0.0f64;
                for e in &es[s..=stop] {
                    best = best.max(e.values()[x].abs());
                }
                out[x] = best;
            }
        }
        MaxStart::Stopped(nu) => {
            if !std::sync::Arc::ptr_eq(nu.grid(), grid) && **nu.grid() != **grid {
                return Err(Error::GridMismatch);
            }
            for x in 0..out.len() {
                if let Some(s) = nu.level_at(x) {
                    if s > stop {
                        continue;
                    }
                    let mut best = 0.0f64;
                    for e in &es[s..=stop] {
                        best = best.max(e.values()[x].abs());
                    }
                    out[x] = best;
                }
            }
        }
    }
    GridFunction::new(grid.clone(), out)
}

/// `M f = sup_{0 <= k <= N} |E_k f|`.
pub fn doob_maximal_full(f: &GridFunction) -> GridFunction {
    doob_maximal(f, MaxStart::Level(0), f.grid().depth()).expect("full window is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Cube, DyadicGrid};

    fn f1357() -> GridFunction {
        let g = DyadicGrid::uniform(2);
        GridFunction::new(g, vec![1.0, 3.0, 5.0, 7.0]).unwrap()
    }

    #[test]
    fn cond_expect_pairwise_average() {
        let f = f1357();
        assert_eq!(cond_expect(&f, 1).unwrap().values(), &[2.0, 2.0, 6.0, 6.0]);
        assert_eq!(cond_expect(&f, 2).unwrap(), f);
        assert_eq!(cond_expect(&f, 0).unwrap().values(), &[4.0; 4]);
        assert!(cond_expect(&f, 3).is_err());
    }

    #[test]
    fn cond_expect_preserves_integral() {
        let f = f1357();
        for k in 0..=2 {
            assert_eq!(cond_expect(&f, k).unwrap().integral(), f.integral());
        }
    }

    #[test]
    fn mart_diff_values() {
        let f = f1357();
        assert_eq!(
            mart_diff(&f, 1).unwrap().values(),
            &[-2.0, -2.0, 2.0, 2.0]
        );
        // df_0 = E_0 f
        assert_eq!(mart_diff(&f, 0).unwrap().values(), &[4.0; 4]);
        // constant function has vanishing differences at every k >= 1
        let c = GridFunction::constant(f.grid().clone(), 3.25);
        for k in 1..=2 {
            assert_eq!(mart_diff(&c, k).unwrap().values(), &[0.0; 4]);
        }
    }

    #[test]
    fn mart_diff_mean_zero_on_parent_cubes() {
        let f = f1357();
        for k in 1..=2usize {
            let d = mart_diff(&f, k).unwrap();
            for cube in f.grid().cubes_at_level(k - 1) {
                assert_eq!(d.integral_on(cube), 0.0);
            }
        }
    }

    #[test]
    fn telescoping_sum_recovers_f() {
        let f = f1357();
        let mut acc = GridFunction::zero(f.grid().clone());
        for d in all_mart_diff(&f) {
            acc = acc.zip_with(&d, |a, b| a + b);
        }
        assert_eq!(acc, f);
    }

    // Enumerate all dyadic ancestors of each leaf by hand.
    #[test]
    fn doob_on_indicator() {
        let g = DyadicGrid::uniform(2);
        let f = GridFunction::indicator(g, Cube::new(2, 0));
        let m = doob_maximal_full(&f);
        assert_eq!(m.values(), &[1.0, 0.5, 0.25, 0.25]);
    }

    #[test]
    fn doob_constant_and_leaf_window() {
        let g = DyadicGrid::uniform(2);
        let c = GridFunction::constant(g.clone(), -2.5);
        assert_eq!(doob_maximal_full(&c).values(), &[2.5; 4]);
        let f = f1357();
        let leaf_only = doob_maximal(&f, MaxStart::Level(2), 2).unwrap();
        assert_eq!(leaf_only.values(), &[1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn doob_stopped_start_zero_at_infinity() {
        let g = DyadicGrid::uniform(2);
        let f = f1357();
        let nu = StoppingTime::new(
            g,
            vec![1, 1, StoppingTime::INFINITY, StoppingTime::INFINITY],
        )
        .unwrap();
        let m = doob_maximal(&f, MaxStart::Stopped(&nu), 2).unwrap();
        assert_eq!(m.values(), &[2.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn doob_weak_1_1() {
        // μ{Mf > λ} ≤ (1/λ)∫_{Mf>λ} |f| for λ > 0, at every attained value.
        let g = DyadicGrid::uniform(3);
        let f = GridFunction::new(
            g,
            vec![1.0, 0.0, -4.0, 0.25, 2.0, 2.0, -0.5, 8.0],
        )
        .unwrap();
        let m = doob_maximal_full(&f);
        for &lambda in m.values() {
            if lambda <= 0.0 {
                continue;
            }
            let lhs = m.measure_where(|v| v > lambda);
            let rhs: f64 = f
                .values()
                .iter()
                .zip(m.values())
                .zip(f.grid().leaf_measures())
                .filter(|((_, mv), _)| **mv > lambda)
                .map(|((fv, _), mass)| fv.abs() * mass)
                .sum::<f64>()
                / lambda;
            assert!(lhs <= rhs + 1e-12, "weak (1,1) failed at λ={lambda}");
        }
    }
}
