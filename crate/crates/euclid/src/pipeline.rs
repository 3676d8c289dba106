//! Sparse extraction for discretized Calderón–Zygmund operators.
//!
//! The recursion runs the good-λ style selection: at each node `Q` the bad
//! set collects the cells where the localized transform exceeds its
//! `2r`-percentile or the sharp function exceeds its own, children are the
//! maximal dyadic ranges more than half covered by the bad set, and the
//! remainder of `Q` is the witness. With `r = 2^{-d-4} = 1/32` at `d = 1`
//! the children always carry at most a quarter of the node, so the family
//! is 1/2-sparse with room to spare.

use sparsedom_core::report::{best_ratio, DominationReport};
use sparsedom_core::sparse::{FlatFamily, FlatSet};

use crate::bumps::BumpDictionary;
use crate::cutoff::Cutoff;
use crate::error::Result;
use crate::kernel::{apply_kernel, CZKernelSpec};
use crate::line::{range_percentile, CellRange, LineFunction};
use crate::maximal::smooth_maximal;
use crate::sharp::{grand_sharp_maximal, localized_transform};

pub const CZO_RATIO: f64 = 1.0 / 32.0; // 2^{-d-4} at d = 1

pub struct CzoExtraction {
    pub family: FlatFamily,
    pub nodes: Vec<CellRange>,
    pub report: DominationReport,
    /// Worst per-node children/parent mass ratio (guaranteed <= 1/2).
    pub worst_node_ratio: f64,
    /// Worst per-node constant of the localized estimate
    /// `P_Q^{2r}(|f_Q|) <= C (1/r) P_Q^r(M^s_{3Q} f)`.
    pub worst_local_constant: f64,
}

/// Maximal dyadic subranges of `q` whose bad-cell fraction exceeds 1/2.
fn stopping_children(q: CellRange, bad: &[bool]) -> Vec<CellRange> {
    fn descend(range: CellRange, bad: &[bool], out: &mut Vec<CellRange>) {
        let count = range.cells().filter(|&i| bad[i]).count();
        if count == 0 {
            return;
        }
        if 2 * count > range.len {
            out.push(range);
            return;
        }
        if range.len == 1 {
            return;
        }
        let (l, r) = range.halves();
        descend(l, bad, out);
        descend(r, bad, out);
    }
    let mut out = Vec::new();
    // the root fraction is at most 1/4, so descent always starts by
    // splitting
    let (l, r) = q.halves();
    descend(l, bad, &mut out);
    descend(r, bad, &mut out);
    out
}

/// Runs the extraction for `f` supported on `q0` (power-of-two cell count,
/// with `3Q0` inside the grid).
pub fn czo_extract_sparse(
    spec: &CZKernelSpec,
    f: &LineFunction,
    q0: CellRange,
    dict: &BumpDictionary,
) -> Result<CzoExtraction> {
    let grid = f.grid();
    let r = CZO_RATIO;
    let cutoff = Cutoff::new(0);
    spec.validate()?;

    let mut nodes = Vec::new();
    let mut rhs = vec![0.0f64; grid.cells];
    let mut worst_node_ratio = 0.0f64;
    let mut worst_local_constant = 0.0f64;
    let mut stack = vec![q0];
    while let Some(q) = stack.pop() {
        nodes.push(q);
        let q3 = q.dilate_clipped(grid, 3.0);
        let ms = smooth_maximal(f, spec.s, Some(dict), Some(q3))?;
        let m_q = range_percentile(ms.values(), q, r, false);
        for cell in q.cells() {
            rhs[cell] += m_q;
        }
        if q.len == 1 {
            continue;
        }
        let fq = localized_transform(spec, f, q, q, &cutoff);
        let sharp = grand_sharp_maximal(spec, f, q, &cutoff)?;
        let a_q = {
            let mut samples: Vec<(f64, f64)> = fq.iter().map(|v| (v.abs(), 1.0)).collect();
            sparsedom_core::percentile::weighted_percentile(&mut samples, 2.0 * r)
        };
        let b_q = {
            let mut samples: Vec<(f64, f64)> = sharp.iter().map(|v| (*v, 1.0)).collect();
            sparsedom_core::percentile::weighted_percentile(&mut samples, 2.0 * r)
        };
        if m_q > 0.0 {
            worst_local_constant = worst_local_constant.max(a_q * r / m_q);
        } else if a_q > 0.0 {
            worst_local_constant = f64::INFINITY;
        }
        let mut bad = vec![false; grid.cells];
        let mut any = false;
        for (slot, cell) in q.cells().enumerate() {
            if fq[slot].abs() > a_q || sharp[slot] > b_q {
                bad[cell] = true;
                any = true;
            }
        }
        if !any {
            continue;
        }
        let children = stopping_children(q, &bad);
        let child_cells: usize = children.iter().map(|c| c.len).sum();
        worst_node_ratio = worst_node_ratio.max(child_cells as f64 / q.len as f64);
        for child in children {
            stack.push(child);
        }
    }

    // flat family with witnesses node \ children
    nodes.sort_by_key(|r| (usize::MAX - r.len, r.start));
    let sets: Vec<FlatSet> = nodes
        .iter()
        .map(|node| {
            let mut mask = vec![false; grid.cells];
            for i in node.cells() {
                mask[i] = true;
            }
            let mut witness = mask.clone();
            for other in &nodes {
                if other != node && node.contains(other) {
                    for i in other.cells() {
                        witness[i] = false;
                    }
                }
            }
            FlatSet {
                mask,
                witness: Some(witness),
            }
        })
        .collect();
    let masses = vec![grid.width(); grid.cells];
    let family = FlatFamily::new(masses, sets, 0.5)?;

    let tf = apply_kernel(spec, f, q0);
    let lhs: Vec<f64> = tf.iter().map(|v| v.abs()).collect();
    let rhs_on_q0: Vec<f64> = q0.cells().map(|i| rhs[i]).collect();
    let (best, witness) = best_ratio(&lhs, &rhs_on_q0);
    let report = DominationReport {
        id: "czo: |Tf| <= C_dom Σ_Q P_Q^r(M^s_{3Q} f) 1_Q".into(),
        best_constant: best,
        witness_leaf: q0.start + witness,
        proof_constant: None,
        pass: true,
        measured: [
            ("r".to_string(), r),
            ("worst_node_ratio".to_string(), worst_node_ratio),
            ("worst_local_constant".to_string(), worst_local_constant),
            ("dict_size".to_string(), dict.len() as f64),
            ("nodes".to_string(), nodes.len() as f64),
        ]
        .into_iter()
        .collect(),
    };
    Ok(CzoExtraction {
        family,
        nodes,
        report,
        worst_node_ratio,
        worst_local_constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line::LineGrid;
    use sparsedom_core::sparse::{verify_sparsity, SparseFamily};

    fn setup(cells: usize) -> (std::sync::Arc<LineGrid>, CellRange, BumpDictionary) {
        // grid [-1, 3), Q0 = [0, 1): 3Q0 = [-1, 2) stays inside
        let g = LineGrid::new(-1.0, 3.0, cells).unwrap();
        let q0 = CellRange::new(cells / 4, cells / 4);
        let dict = BumpDictionary::new(1.0, 8).unwrap();
        (g, q0, dict)
    }

    #[test]
    fn zero_function_gives_root_only() {
        let (g, q0, dict) = setup(256);
        let f = LineFunction::zero(g);
        let spec = CZKernelSpec::hilbert(1.0);
        let out = czo_extract_sparse(&spec, &f, q0, &dict).unwrap();
        assert_eq!(out.nodes.len(), 1);
        assert_eq!(out.report.best_constant, 0.0);
    }

    #[test]
    fn haar_atom_pipeline() {
        let (g, q0, dict) = setup(1 << 10);
        // Haar-type atom on Q0: +1 on the left half, -1 on the right half
        let mut values = vec![0.0; g.cells];
        let (l, r) = q0.halves();
        for i in l.cells() {
            values[i] = 1.0;
        }
        for i in r.cells() {
            values[i] = -1.0;
        }
        let f = LineFunction::new(g, values).unwrap();
        let spec = CZKernelSpec::hilbert(1.0);
        let out = czo_extract_sparse(&spec, &f, q0, &dict).unwrap();
        assert!(out.worst_node_ratio <= 0.5, "node ratio {}", out.worst_node_ratio);
        let sparsity = verify_sparsity(&SparseFamily::Flat(out.family.clone()), 0.5);
        assert!(sparsity.pass);
        assert!(out.report.best_constant.is_finite());
        assert_eq!(out.report.measured["r"], 1.0 / 32.0);
        // a handful of intervals, on the order of the depth
        assert!(out.nodes.len() <= 8 * 10);
    }

    #[test]
    fn smoothed_power_kernel_pipeline() {
        let (g, q0, dict) = setup(512);
        let f = LineFunction::indicator(g.clone(), 0.125, 0.375);
        let spec = CZKernelSpec::smoothed_power(0.02, 1.0);
        let out = czo_extract_sparse(&spec, &f, q0, &dict).unwrap();
        assert!(out.worst_node_ratio <= 0.5);
        let sparsity = verify_sparsity(&SparseFamily::Flat(out.family.clone()), 0.5);
        assert!(sparsity.pass);
        assert!(out.report.best_constant.is_finite());
    }
}
