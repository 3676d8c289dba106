//! Grid-function import/export and the named generators used by the CLI.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, DyadicGrid, GridFunction};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFunctionJson {
    pub depth: usize,
    pub values: Vec<f64>,
}

pub fn to_json(f: &GridFunction) -> GridFunctionJson {
    GridFunctionJson {
        depth: f.grid().depth(),
        values: f.values().to_vec(),
    }
}

pub fn from_json(json: &GridFunctionJson) -> Result<GridFunction> {
    let grid = DyadicGrid::uniform(json.depth);
    GridFunction::new(grid, json.values.clone())
}

/// One leaf value per row; `{:?}` guarantees parse round-trip.
pub fn to_csv(f: &GridFunction) -> String {
    let mut out = String::new();
    for v in f.values() {
        out.push_str(&format!("{v:?}\n"));
    }
    out
}

pub fn from_csv(grid: Arc<DyadicGrid>, text: &str) -> Result<GridFunction> {
    let values: Vec<f64> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
        .collect::<Result<_>>()?;
    GridFunction::new(grid, values)
}

/// Generator names accepted by the CLI. Random values are dyadic rationals
/// (multiples of `2^-20`) so that cube averages on uniform grids stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    Constant,
    Haar,
    Indicator,
    RandomUniform,
    RandomSigned,
}

impl std::str::FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Generator::Constant),
            "haar" => Ok(Generator::Haar),
            "indicator" => Ok(Generator::Indicator),
            "random-uniform" => Ok(Generator::RandomUniform),
            "random-signed" => Ok(Generator::RandomSigned),
            other => Err(Error::Parse(format!("unknown generator {other:?}"))),
        }
    }
}

const DYADIC_DENOM: i64 = 1 << 20;

pub fn dyadic_uniform(rng: &mut impl Rng) -> f64 {
    rng.gen_range(0..=DYADIC_DENOM) as f64 / DYADIC_DENOM as f64
}

pub fn dyadic_signed(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-DYADIC_DENOM..=DYADIC_DENOM) as f64 / DYADIC_DENOM as f64
}

pub fn generate(gen: Generator, grid: Arc<DyadicGrid>, rng: &mut impl Rng) -> GridFunction {
    let n = grid.leaf_count();
    match gen {
        Generator::Constant => GridFunction::constant(grid, 1.0),
        Generator::Haar => {
            // the root Haar wavelet, L²-normalized
            let mut v = vec![1.0; n];
            for x in v.iter_mut().skip(n / 2) {
                *x = -1.0;
            }
            if n == 1 {
                v[0] = 1.0;
            }
            GridFunction::new(grid, v).expect("finite")
        }
        Generator::Indicator => GridFunction::indicator(
            grid.clone(),
            Cube::new(grid.depth(), 0),
        ),
        Generator::RandomUniform => {
            let v = (0..n).map(|_| dyadic_uniform(rng)).collect();
            GridFunction::new(grid, v).expect("finite")
        }
        Generator::RandomSigned => {
            let v = (0..n).map(|_| dyadic_signed(rng)).collect();
            GridFunction::new(grid, v).expect("finite")
        }
    }
}
