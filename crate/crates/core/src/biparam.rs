//! Product dyadic rectangles and the biparametric (strong) maximal
//! functions. Rectangles are not nested, so sparse subfamilies extracted
//! here always live in the flat representation with explicit witnesses.

use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicGrid};

/// Tensor product of two dyadic grids; cells are stored row-major with the
/// first axis major.
#[derive(Debug, Clone)]
pub struct ProductGrid {
    axis1: Arc<DyadicGrid>,
    axis2: Arc<DyadicGrid>,
    cell_masses: Vec<f64>,
}

/// A dyadic rectangle `Q1 × Q2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rectangle {
    pub q1: Cube,
    pub q2: Cube,
}

impl ProductGrid {
    pub fn new(axis1: Arc<DyadicGrid>, axis2: Arc<DyadicGrid>) -> Self {
        let (n1, n2) = (axis1.leaf_count(), axis2.leaf_count());
        let mut cell_masses = Vec::with_capacity(n1 * n2);
        for i1 in 0..n1 {
            for i2 in 0..n2 {
                cell_masses.push(axis1.leaf_measures()[i1] * axis2.leaf_measures()[i2]);
            }
        }
        ProductGrid {
            axis1,
            axis2,
            cell_masses,
        }
    }

    pub fn uniform(depth1: usize, depth2: usize) -> Self {
        Self::new(DyadicGrid::uniform(depth1), DyadicGrid::uniform(depth2))
    }

    pub fn depths(&self) -> (usize, usize) {
        (self.axis1.depth(), self.axis2.depth())
    }

    pub fn cell_count(&self) -> usize {
        self.cell_masses.len()
    }

    pub fn cell_masses(&self) -> &[f64] {
        &self.cell_masses
    }

    pub fn cell_index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.axis2.leaf_count() + i2
    }

    pub fn rect_mass(&self, r: Rectangle) -> f64 {
        self.axis1.cube_mass(r.q1) * self.axis2.cube_mass(r.q2)
    }

    /// Cell mask of a rectangle.
    pub fn rect_mask(&self, r: Rectangle) -> Vec<bool> {
        let mut mask = vec![false; self.cell_count()];
        for i1 in self.axis1.leaf_range(r.q1) {
            for i2 in self.axis2.leaf_range(r.q2) {
                mask[self.cell_index(i1, i2)] = true;
            }
        }
        mask
    }

    /// All dyadic rectangles within the level caps, coarse to fine, in
    /// `(k1, i1, k2, i2)` order.
    pub fn rectangles(&self, cap1: usize, cap2: usize) -> Vec<Rectangle> {
        let mut out = Vec::new();
        for k1 in 0..=cap1.min(self.axis1.depth()) {
            for i1 in 0..1usize << k1 {
                for k2 in 0..=cap2.min(self.axis2.depth()) {
                    for i2 in 0..1usize << k2 {
                        out.push(Rectangle {
                            q1: Cube::new(k1, i1),
                            q2: Cube::new(k2, i2),
                        });
                    }
                }
            }
        }
        out
    }

    pub fn integral_on(&self, values: &[f64], r: Rectangle) -> f64 {
        let mut acc = 0.0;
        for i1 in self.axis1.leaf_range(r.q1) {
            for i2 in self.axis2.leaf_range(r.q2) {
                let c = self.cell_index(i1, i2);
                acc += values[c] * self.cell_masses[c];
            }
        }
        acc
    }

    pub fn average_on(&self, values: &[f64], r: Rectangle) -> f64 {
        self.integral_on(values, r) / self.rect_mass(r)
    }
}

/// All rectangles with their averages attached, in canonical order. The
/// count is `(Σ_{k<=N1} 2^k)(Σ_{j<=N2} 2^j)` without caps.
pub fn enumerate_rectangles(
    pg: &ProductGrid,
    values: &[f64],
    caps: Option<(usize, usize)>,
) -> Vec<(Rectangle, f64)> {
    let (n1, n2) = pg.depths();
    let (cap1, cap2) = caps.unwrap_or((n1, n2));
    // separable reduction: integrals per (k1,k2) table
    let fine: Vec<f64> = values
        .iter()
        .zip(&pg.cell_masses)
        .map(|(v, m)| v * m)
        .collect();
    let mut tables: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n2 + 1]; n1 + 1];
    tables[n1][n2] = fine;
    for k2 in (0..n2).rev() {
        let prev = &tables[n1][k2 + 1];
        let cols = 1usize << (k2 + 1);
        let mut cur = vec![0.0; (1usize << n1) * (cols / 2)];
        for i1 in 0..1usize << n1 {
            for i2 in 0..cols / 2 {
                cur[i1 * (cols / 2) + i2] =
                    prev[i1 * cols + 2 * i2] + prev[i1 * cols + 2 * i2 + 1];
            }
        }
        tables[n1][k2] = cur;
    }
    for k2 in 0..=n2 {
        for k1 in (0..n1).rev() {
            let prev = &tables[k1 + 1][k2];
            let cols = 1usize << k2;
            let rows = 1usize << (k1 + 1);
            let mut cur = vec![0.0; (rows / 2) * cols];
            for i1 in 0..rows / 2 {
                for i2 in 0..cols {
                    cur[i1 * cols + i2] =
                        prev[2 * i1 * cols + i2] + prev[(2 * i1 + 1) * cols + i2];
                }
            }
            tables[k1][k2] = cur;
        }
    }
    let mut out = Vec::new();
    for k1 in 0..=cap1.min(n1) {
        for i1 in 0..1usize << k1 {
            for k2 in 0..=cap2.min(n2) {
                let cols = 1usize << k2;
                for i2 in 0..cols {
                    let r = Rectangle {
                        q1: Cube::new(k1, i1),
                        q2: Cube::new(k2, i2),
                    };
                    let avg = tables[k1][k2][i1 * cols + i2] / pg.rect_mass(r);
                    out.push((r, avg));
                }
            }
        }
    }
    out
}

/// `M_{D×D} f`: per cell, the sup of `|⟨f⟩_R|` over rectangles containing
/// the cell.
pub fn strong_maximal(pg: &ProductGrid, values: &[f64]) -> Vec<f64> {
    let (n1, n2) = pg.depths();
    let rects = enumerate_rectangles(pg, values, None);
    // index averages by (k1,k2) for ancestor lookups
    let mut avg: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); n2 + 1]; n1 + 1];
    for (r, a) in &rects {
        let t = &mut avg[r.q1.level][r.q2.level];
        if t.is_empty() {
            *t = vec![0.0; (1usize << r.q1.level) * (1usize << r.q2.level)];
        }
        t[r.q1.index * (1usize << r.q2.level) + r.q2.index] = *a;
    }
    let mut out = vec![0.0; pg.cell_count()];
    for i1 in 0..1usize << n1 {
        for i2 in 0..1usize << n2 {
            let mut best = 0.0f64;
            for k1 in 0..=n1 {
                let a1 = i1 >> (n1 - k1);
                for k2 in 0..=n2 {
                    let a2 = i2 >> (n2 - k2);
                    best = best.max(avg[k1][k2][a1 * (1usize << k2) + a2].abs());
                }
            }
            out[pg.cell_index(i1, i2)] = best;
        }
    }
    out
}

/// `P^r_{D×D} f`: per cell, the sup over containing rectangles of the
/// percentile of `|f|` over the rectangle.
pub fn rect_percentile_maximal(pg: &ProductGrid, values: &[f64], r: f64) -> Result<Vec<f64>> {
    crate::percentile::check_ratio(r)?;
    let (n1, n2) = pg.depths();
    let mut out = vec![0.0f64; pg.cell_count()];
    for k1 in 0..=n1 {
        for i1 in 0..1usize << k1 {
            for k2 in 0..=n2 {
                for i2 in 0..1usize << k2 {
                    let rect = Rectangle {
                        q1: Cube::new(k1, i1),
                        q2: Cube::new(k2, i2),
                    };
                    let mut samples: Vec<(f64, f64)> = Vec::new();
                    for c1 in pg.axis1.leaf_range(rect.q1) {
                        for c2 in pg.axis2.leaf_range(rect.q2) {
                            let c = pg.cell_index(c1, c2);
                            samples.push((values[c].abs(), pg.cell_masses[c]));
                        }
                    }
                    let p = crate::percentile::weighted_percentile(&mut samples, r);
                    for c1 in pg.axis1.leaf_range(rect.q1) {
                        for c2 in pg.axis2.leaf_range(rect.q2) {
                            let c = pg.cell_index(c1, c2);
                            out[c] = out[c].max(p);
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Writes a product function as row-major CSV: header `n1,n2`, the two
/// depths, then one value per line.
pub fn write_product_csv(w: &mut impl Write, pg: &ProductGrid, values: &[f64]) -> Result<()> {
    let (n1, n2) = pg.depths();
    writeln!(w, "n1,n2")?;
    writeln!(w, "{n1},{n2}")?;
    for v in values {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

/// Writes a rectangle dump as CSV `k1,i1,k2,i2,average`.
pub fn write_rectangles_csv(w: &mut impl Write, rects: &[(Rectangle, f64)]) -> Result<()> {
    writeln!(w, "k1,i1,k2,i2,average")?;
    for (r, a) in rects {
        writeln!(
            w,
            "{},{},{},{},{a}",
            r.q1.level, r.q1.index, r.q2.level, r.q2.index
        )?;
    }
    Ok(())
}

/// Reads a product function from the CSV format above.
pub fn read_product_csv(text: &str) -> Result<(ProductGrid, Vec<f64>)> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty csv".into()))?;
    if header.trim() != "n1,n2" {
        return Err(Error::Parse(format!("bad header {header:?}")));
    }
    let dims = lines.next().ok_or_else(|| Error::Parse("missing dims".into()))?;
    let mut parts = dims.split(',');
    let n1: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse("bad n1".into()))?;
    let n2: usize = parts
        .next()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse("bad n2".into()))?;
    let values: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    let pg = ProductGrid::uniform(n1, n2);
    if values.len() != pg.cell_count() {
        return Err(Error::LengthMismatch {
            expected: pg.cell_count(),
            got: values.len(),
        });
    }
    Ok((pg, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rectangle_counts() {
        let pg = ProductGrid::uniform(1, 1);
        assert_eq!(pg.rectangles(1, 1).len(), 9);
        let pg0 = ProductGrid::uniform(0, 0);
        assert_eq!(pg0.rectangles(0, 0).len(), 1);
        let pg2 = ProductGrid::uniform(2, 3);
        // (1+2+4)(1+2+4+8) = 105
        assert_eq!(pg2.rectangles(2, 3).len(), 105);
    }

    #[test]
    fn constant_averages() {
        let pg = ProductGrid::uniform(2, 2);
        let values = vec![3.0; pg.cell_count()];
        for (_, a) in enumerate_rectangles(&pg, &values, None) {
            assert_eq!(a, 3.0);
        }
        assert_eq!(strong_maximal(&pg, &values), vec![3.0; 16]);
    }

    #[test]
    fn averages_match_direct_sum() {
        let pg = ProductGrid::uniform(3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let values: Vec<f64> = (0..pg.cell_count())
            .map(|_| rng.gen_range(-16..16) as f64 / 4.0)
            .collect();
        for (r, a) in enumerate_rectangles(&pg, &values, None) {
            let direct = pg.average_on(&values, r);
            assert!((a - direct).abs() < 1e-12);
        }
    }

    // enumerate the 9 rectangles by hand
    #[test]
    fn single_cell_indicator_maximal() {
        let pg = ProductGrid::uniform(1, 1);
        let mut values = vec![0.0; 4];
        values[pg.cell_index(0, 0)] = 1.0;
        let m = strong_maximal(&pg, &values);
        assert_eq!(m[pg.cell_index(0, 0)], 1.0);
        assert_eq!(m[pg.cell_index(0, 1)], 0.5);
        assert_eq!(m[pg.cell_index(1, 0)], 0.5);
        assert_eq!(m[pg.cell_index(1, 1)], 0.25);
    }

    #[test]
    fn single_cell_indicator_percentile() {
        let pg = ProductGrid::uniform(1, 1);
        let mut values = vec![0.0; 4];
        values[pg.cell_index(0, 0)] = 1.0;
        let p = rect_percentile_maximal(&pg, &values, 0.5).unwrap();
        // the cell rectangle contributes 1 on the cell; every larger
        // rectangle has percentile 0
        assert_eq!(p[pg.cell_index(0, 0)], 1.0);
        assert_eq!(p[pg.cell_index(0, 1)], 0.0);
        assert_eq!(p[pg.cell_index(1, 0)], 0.0);
        assert_eq!(p[pg.cell_index(1, 1)], 0.0);
    }

    #[test]
    fn percentile_maximal_dominates_abs() {
        let pg = ProductGrid::uniform(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let values: Vec<f64> = (0..16).map(|_| rng.gen_range(-8..8) as f64 / 2.0).collect();
        let p = rect_percentile_maximal(&pg, &values, 0.5).unwrap();
        for (pv, v) in p.iter().zip(&values) {
            assert!(*pv >= v.abs());
        }
    }

    #[test]
    fn strong_maximal_dominates_each_axis() {
        // the one-parameter maximal along either axis is a sub-family sup
        let pg = ProductGrid::uniform(3, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..64).map(|_| rng.gen_range(-8..8) as f64 / 2.0).collect();
        let m = strong_maximal(&pg, &values);
        let (n1, n2) = pg.depths();
        // axis-1 maximal: rectangles Q1 × (full axis-2 leaf cube)
        for i1 in 0..1usize << n1 {
            for i2 in 0..1usize << n2 {
                let mut best = 0.0f64;
                for k1 in 0..=n1 {
                    let rect = Rectangle {
                        q1: Cube::new(k1, i1 >> (n1 - k1)),
                        q2: Cube::new(n2, i2),
                    };
                    best = best.max(pg.average_on(&values, rect).abs());
                }
                assert!(m[pg.cell_index(i1, i2)] >= best - 1e-12);
            }
        }
    }

    #[test]
    fn rectangles_are_not_nested() {
        // two overlapping, incomparable rectangles exist already at 1×1
        let pg = ProductGrid::uniform(1, 1);
        let r1 = Rectangle {
            q1: Cube::new(1, 0),
            q2: Cube::new(0, 0),
        };
        let r2 = Rectangle {
            q1: Cube::new(0, 0),
            q2: Cube::new(1, 0),
        };
        let m1 = pg.rect_mask(r1);
        let m2 = pg.rect_mask(r2);
        let overlap = m1.iter().zip(&m2).any(|(a, b)| *a && *b);
        let nested =
            m1.iter().zip(&m2).all(|(a, b)| !*a || *b) || m1.iter().zip(&m2).all(|(a, b)| !*b || *a);
        assert!(overlap && !nested);
    }

    #[test]
    fn csv_roundtrip() {
        let pg = ProductGrid::uniform(2, 1);
        let values: Vec<f64> = (0..8).map(|i| i as f64 / 4.0).collect();
        let mut buf = Vec::new();
        write_product_csv(&mut buf, &pg, &values).unwrap();
        let (pg2, values2) = read_product_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(pg2.depths(), (2, 1));
        assert_eq!(values2, values);
    }
}
