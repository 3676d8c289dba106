//! Whitney decomposition of open level sets and the smooth
//! Calderón–Zygmund decomposition built on its partition of unity.

use crate::bumps::BumpDictionary;
use crate::cutoff::Cutoff;
use crate::error::{Error, Result};
use crate::line::{CellRange, LineFunction};
use crate::maximal::smooth_maximal;

/// Grid-aligned dyadic Whitney intervals of the open set `omega` (a cell
/// mask) inside `window`: maximal dyadic ranges `R ⊆ Ω` with
/// `ℓ(R) <= dist(R, window \ Ω) <= 4 ℓ(R)`. Cells within two cells of the
/// boundary may stay uncovered (the finest representable scale); everything
/// deeper inside is covered and the selected ranges are pairwise disjoint.
pub fn whitney_decomposition(
    omega: &[bool],
    window: CellRange,
) -> Vec<CellRange> {
    let n = omega.len();
    // distance (in cells) to the nearest complement cell within the window
    let mut dist = vec![usize::MAX / 2; n];
    for i in window.cells() {
        if !omega[i] {
            dist[i] = 0;
        }
    }
    for i in window.start + 1..window.end() {
        dist[i] = dist[i].min(dist[i - 1] + 1);
    }
    for i in (window.start..window.end() - 1).rev() {
        dist[i] = dist[i].min(dist[i + 1] + 1);
    }
    // candidate dyadic ranges satisfying both distance bounds
    let mut candidates: std::collections::HashSet<(usize, usize)> = Default::default();
    let mut len = 1usize;
    while len <= window.len {
        let mut start = (window.start + len - 1) / len * len; // grid-aligned
        while start + len <= window.end() {
            let range = CellRange::new(start, len);
            if range.cells().all(|i| omega[i]) {
                // closed-set distance: (min cell distance - 1) cells
                let d = range.cells().map(|i| dist[i]).min().unwrap();
                if d >= 1 {
                    let gap = d - 1;
                    if len <= gap && gap <= 4 * len {
                        candidates.insert((start, len));
                    }
                }
            }
            start += len;
        }
        len *= 2;
    }
    // keep only maximal candidates (dyadic: ancestors are aligned)
    let mut out: Vec<CellRange> = candidates
        .iter()
        .filter(|(start, len)| {
            let mut l = *len * 2;
            while l <= window.len {
                let anc = (start / l * l, l);
                if candidates.contains(&anc) {
                    return false;
                }
                l *= 2;
            }
            true
        })
        .map(|&(start, len)| CellRange::new(start, len))
        .collect();
    out.sort_by_key(|r| r.start);
    out
}

/// Worst-case count of overlapping 9/8-dilates at a point.
pub fn whitney_overlap_count(intervals: &[CellRange], grid: &crate::line::LineGrid) -> usize {
    let mut worst = 0usize;
    for i in 0..grid.cells {
        let x = grid.midpoint(i);
        let count = intervals
            .iter()
            .filter(|r| {
                let c = r.center(grid);
                let half = r.length(grid) * 9.0 / 16.0;
                (x - c).abs() < half
            })
            .count();
        worst = worst.max(count);
    }
    worst
}

pub struct BadPart {
    pub values: Vec<f64>,
    pub interval: CellRange,
    pub constant: f64,
}

pub struct CzDecomposition {
    pub good: LineFunction,
    pub bad: Vec<BadPart>,
    pub whitney: Vec<CellRange>,
    pub omega: Vec<bool>,
    /// Measured `||g||_∞ / m_Q` over 3Q.
    pub good_sup_ratio: f64,
    /// Measured `max_j |c_j| / m_Q`.
    pub constant_ratio: f64,
}

/// Smooth Calderón–Zygmund decomposition of `f` at threshold `m_q` on the
/// cube `q`: `Ω = {M^s_{3Q} f > m_Q}` is Whitney-decomposed, a partition of
/// unity is built from the fixed cutoff, and `f = g + Σ b_j` with mean-zero
/// bad parts `b_j = f η_j - c_j η_j`.
pub fn smooth_cz_decomposition(
    f: &LineFunction,
    q: CellRange,
    s: f64,
    dict: &BumpDictionary,
    m_q: f64,
) -> Result<CzDecomposition> {
    let grid = f.grid();
    let q3 = q.dilate_clipped(grid, 3.0);
    let maximal = smooth_maximal(f, s, Some(dict), Some(q3))?;
    let omega: Vec<bool> = (0..grid.cells)
        .map(|i| q3.cells().contains(&i) && maximal.values()[i] > m_q)
        .collect();
    if q3.cells().all(|i| omega[i]) {
        return Err(Error::ThresholdTooSmall);
    }
    let whitney = whitney_decomposition(&omega, q3);

    let cutoff = Cutoff::new(0);
    let h = grid.width();
    // ψ_{R_j} sampled at cell midpoints
    let psis: Vec<Vec<f64>> = whitney
        .iter()
        .map(|r| {
            let c = r.center(grid);
            let len = r.length(grid);
            (0..grid.cells)
                .map(|i| cutoff.eval_scaled(grid.midpoint(i), c, len))
                .collect()
        })
        .collect();
    let mut denom = vec![0.0f64; grid.cells];
    for psi in &psis {
        for (d, v) in denom.iter_mut().zip(psi) {
            *d += v;
        }
    }
    let mut bad = Vec::new();
    let mut sum_bad = vec![0.0f64; grid.cells];
    let mut constant_ratio = 0.0f64;
    for (r, psi) in whitney.iter().zip(&psis) {
        let eta: Vec<f64> = (0..grid.cells)
            .map(|i| {
                if omega[i] && denom[i] > 0.0 {
                    psi[i] / denom[i]
                } else {
                    0.0
                }
            })
            .collect();
        let eta_int: f64 = eta.iter().sum::<f64>() * h;
        if eta_int == 0.0 {
            continue;
        }
        let f_eta: f64 = f
            .values()
            .iter()
            .zip(&eta)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * h;
        let c_j = f_eta / eta_int;
        constant_ratio = constant_ratio.max(c_j.abs() / m_q);
        let values: Vec<f64> = f
            .values()
            .iter()
            .zip(&eta)
            .map(|(fv, ev)| (fv - c_j) * ev)
            .collect();
        for (sb, v) in sum_bad.iter_mut().zip(&values) {
            *sb += v;
        }
        bad.push(BadPart {
            values,
            interval: *r,
            constant: c_j,
        });
    }
    let good = LineFunction::new(
        grid.clone(),
        f.values()
            .iter()
            .zip(&sum_bad)
            .map(|(a, b)| a - b)
            .collect(),
    )?;
    let good_sup_ratio = q3
        .cells()
        .map(|i| good.values()[i].abs())
        .fold(0.0f64, f64::max)
        / m_q;
    Ok(CzDecomposition {
        good,
        bad,
        whitney,
        omega,
        good_sup_ratio,
        constant_ratio,
    })
}
