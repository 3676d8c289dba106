//! Uniform cell grid on an interval of the line, the carrier for the
//! Euclidean bench. Functions are constant on cells and sampled at
//! midpoints; integrals are exact cell sums.

use std::sync::Arc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LineGrid {
    pub a: f64,
    pub b: f64,
    pub cells: usize,
}

impl LineGrid {
    pub fn new(a: f64, b: f64, cells: usize) -> Result<Arc<Self>> {
        if !(b > a) || cells < 2 {
            return Err(Error::BadGrid(format!("[{a},{b}) with {cells} cells")));
        }
        Ok(Arc::new(LineGrid { a, b, cells }))
    }

    pub fn width(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.width()
    }

    pub fn left_edge(&self, i: usize) -> f64 {
        self.a + i as f64 * self.width()
    }

    /// Cell index containing `x`, clamped to the grid.
    pub fn cell_of(&self, x: f64) -> usize {
        let raw = ((x - self.a) / self.width()).floor();
        (raw.max(0.0) as usize).min(self.cells - 1)
    }

    /// Doubled grid: same interval, half the cell width, values repeated.
    pub fn refine(&self) -> Arc<LineGrid> {
        LineGrid::new(self.a, self.b, self.cells * 2).expect("refinement is valid")
    }
}

/// A grid-aligned interval, as a contiguous cell range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRange {
    pub start: usize,
    pub len: usize,
}

impl CellRange {
    pub fn new(start: usize, len: usize) -> Self {
        debug_assert!(len > 0);
        CellRange { start, len }
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    pub fn cells(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }

    pub fn contains(&self, other: &CellRange) -> bool {
        self.start <= other.start && other.end() <= self.end()
    }

    /// Endpoints in coordinates.
    pub fn bounds(&self, grid: &LineGrid) -> (f64, f64) {
        (grid.left_edge(self.start), grid.left_edge(self.end()))
    }

    pub fn length(&self, grid: &LineGrid) -> f64 {
        self.len as f64 * grid.width()
    }

    pub fn center(&self, grid: &LineGrid) -> f64 {
        let (lo, hi) = self.bounds(grid);
        0.5 * (lo + hi)
    }

    /// The concentric `λ`-dilate, clipped to the grid.
    pub fn dilate_clipped(&self, grid: &LineGrid, lambda: f64) -> CellRange {
        let extra = ((lambda - 1.0) * self.len as f64 / 2.0).round() as usize;
        let start = self.start.saturating_sub(extra);
        let end = (self.end() + extra).min(grid.cells);
        CellRange::new(start, end - start)
    }

    /// Halves of a range with even length.
    pub fn halves(&self) -> (CellRange, CellRange) {
        debug_assert!(self.len % 2 == 0);
        (
            CellRange::new(self.start, self.len / 2),
            CellRange::new(self.start + self.len / 2, self.len / 2),
        )
    }

    /// All dyadic subranges (the range itself, its halves, and so on down
    /// to single cells); requires a power-of-two length.
    pub fn dyadic_subranges(&self) -> Vec<CellRange> {
        debug_assert!(self.len.is_power_of_two());
        let mut out = Vec::new();
        let mut len = self.len;
        loop {
            let count = self.len / len;
            for i in 0..count {
                out.push(CellRange::new(self.start + i * len, len));
            }
            if len == 1 {
                break;
            }
            len /= 2;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineFunction {
    grid: Arc<LineGrid>,
    values: Vec<f64>,
}

impl LineFunction {
    pub fn new(grid: Arc<LineGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells {
            return Err(Error::BadGrid(format!(
                "{} values on a {}-cell grid",
                values.len(),
                grid.cells
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(LineFunction { grid, values })
    }

    pub fn zero(grid: Arc<LineGrid>) -> Self {
        let n = grid.cells;
        LineFunction {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples a closed-form function at cell midpoints.
    pub fn sample(grid: Arc<LineGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..grid.cells).map(|i| f(grid.midpoint(i))).collect();
        LineFunction::new(grid, values)
    }

    /// Indicator of `[lo, hi)` by exact cell coverage fractions.
    pub fn indicator(grid: Arc<LineGrid>, lo: f64, hi: f64) -> Self {
        let h = grid.width();
        let values = (0..grid.cells)
            .map(|i| {
                let a = grid.left_edge(i);
                let b = a + h;
                ((b.min(hi) - a.max(lo)).max(0.0)) / h
            })
            .collect();
        let n = grid.cells;
        let _ = n;
        LineFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<LineGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> LineFunction {
        LineFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_with(&self, other: &LineFunction, f: impl Fn(f64, f64) -> f64) -> LineFunction {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        LineFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&x, &y)| f(x, y))
                .collect(),
        }
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.width()
    }

    pub fn integral_on(&self, range: CellRange) -> f64 {
        self.values[range.cells()].iter().sum::<f64>() * self.grid.width()
    }

    pub fn average_on(&self, range: CellRange) -> f64 {
        self.values[range.cells()].iter().sum::<f64>() / range.len as f64
    }

    pub fn inner(&self, other: &LineFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * self.grid.width()
    }

    /// `∫ x^k f(x) dx`, exact for the piecewise-constant representative via
    /// the primitive `x^{k+1}/(k+1)`.
    pub fn moment(&self, k: u32) -> f64 {
        let h = self.grid.width();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let a = self.grid.left_edge(i);
                let b = a + h;
                v * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0)
            })
            .sum()
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        let h = self.grid.width();
        self.values
            .iter()
            .map(|v| v.abs().powf(p) * h)
            .sum::<f64>()
            .powf(1.0 / p)
    }

    /// Same values duplicated onto the doubled grid.
    pub fn refine(&self) -> LineFunction {
        let grid = self.grid.refine();
        let mut values = Vec::with_capacity(self.values.len() * 2);
        for v in &self.values {
            values.push(*v);
            values.push(*v);
        }
        LineFunction { grid, values }
    }
}

/// Percentile of `|f|` or `f` over a cell range at ratio `r` (uniform cell
/// masses), with the same smallest-attained-value semantics as the dyadic
/// side.
pub fn range_percentile(values: &[f64], range: CellRange, r: f64, absolute: bool) -> f64 {
    let mut samples: Vec<(f64, f64)> = range
        .cells()
        .map(|i| {
            let v = if absolute { values[i].abs() } else { values[i] };
            (v, 1.0)
        })
        .collect();
    sparsedom_core::percentile::weighted_percentile(&mut samples, r)
}

/// CSV export `x_midpoint,value`.
pub fn write_line_csv(w: &mut impl std::io::Write, f: &LineFunction) -> Result<()> {
    writeln!(w, "x,value")?;
    for (i, v) in f.values().iter().enumerate() {
        writeln!(w, "{},{v:?}", f.grid().midpoint(i))?;
    }
    Ok(())
}
