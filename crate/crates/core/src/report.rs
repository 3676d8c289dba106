//! Per-inequality audit records.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::grid::GridFunction;

/// Outcome of a pointwise domination audit `lhs <= C * rhs`.
///
/// `best_constant` is the max over leaves of `lhs/rhs` with the conventions
/// `0/0 := 0` and `positive/0 := ∞`. When a proof constant is attached, the
/// audit passes iff `best_constant <= proof_constant`; without one the
/// constant is reported only and the audit passes vacuously.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominationReport {
    pub id: String,
    #[serde(
        serialize_with = "serialize_maybe_inf",
        deserialize_with = "deserialize_maybe_inf"
    )]
    pub best_constant: f64,
    pub witness_leaf: usize,
    pub proof_constant: Option<f64>,
    pub pass: bool,
    /// Measured auxiliary constants (operator norms, r, R, C_0, …).
    pub measured: BTreeMap<String, f64>,
}

fn serialize_maybe_inf<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("inf")
    }
}

fn deserialize_maybe_inf<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum NumOrStr {
        Num(f64),
        #[allow(dead_code)]
        Str(String),
    }
    Ok(match NumOrStr::deserialize(d)? {
        NumOrStr::Num(v) => v,
        NumOrStr::Str(_) => f64::INFINITY,
    })
}

impl DominationReport {
    pub fn with_measured(mut self, key: &str, value: f64) -> Self {
        self.measured.insert(key.to_string(), value);
        self
    }

    pub fn aggregate_pass(reports: &[DominationReport]) -> bool {
        reports.iter().all(|r| r.pass)
    }
}

/// Best pointwise constant of `lhs <= C * rhs`, with witness leaf.
pub fn check_domination(
    id: &str,
    lhs: &GridFunction,
    rhs: &GridFunction,
    proof_constant: Option<f64>,
) -> DominationReport {
    assert!(lhs.same_grid(rhs), "grid mismatch");
    let (best, witness) = best_ratio(lhs.values(), rhs.values());
    DominationReport {
        id: id.to_string(),
        best_constant: best,
        witness_leaf: witness,
        proof_constant,
        pass: proof_constant.map_or(true, |c| best <= c),
        measured: BTreeMap::new(),
    }
}

/// Max over positions of `lhs/rhs` (0/0 := 0, positive/0 := ∞) and its
/// argmax.
pub fn best_ratio(lhs: &[f64], rhs: &[f64]) -> (f64, usize) {
    let mut best = 0.0f64;
    let mut witness = 0usize;
    for (i, (&a, &b)) in lhs.iter().zip(rhs).enumerate() {
        let ratio = if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a / b
        };
        if ratio > best {
            best = ratio;
            witness = i;
        }
    }
    (best, witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::DyadicGrid;

    #[test]
    fn constant_one_for_equal_functions() {
        let g = DyadicGrid::uniform(2);
        let f = GridFunction::new(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = check_domination("eq", &f, &f, Some(1.0));
        assert_eq!(r.best_constant, 1.0);
        assert!(r.pass);
    }

    #[test]
    fn zero_lhs_gives_zero_constant() {
        let g = DyadicGrid::uniform(2);
        let z = GridFunction::zero(g.clone());
        let f = GridFunction::new(g, vec![0.0, 1.0, 0.0, 2.0]).unwrap();
        let r = check_domination("zero", &z, &f, Some(0.5));
        assert_eq!(r.best_constant, 0.0);
        assert!(r.pass);
    }

    // direct ratio max: lhs = (2,0), rhs = (1,1) -> constant 2 at leaf 0
    #[test]
    fn ratio_max_and_witness() {
        let g = DyadicGrid::uniform(1);
        let lhs = GridFunction::new(g.clone(), vec![2.0, 0.0]).unwrap();
        let rhs = GridFunction::new(g, vec![1.0, 1.0]).unwrap();
        let r = check_domination("ratio", &lhs, &rhs, Some(2.0));
        assert_eq!(r.best_constant, 2.0);
        assert_eq!(r.witness_leaf, 0);
        assert!(r.pass);
    }

    #[test]
    fn infinite_constant_serializes() {
        let g = DyadicGrid::uniform(1);
        let lhs = GridFunction::new(g.clone(), vec![1.0, 0.0]).unwrap();
        let rhs = GridFunction::zero(g);
        let r = check_domination("inf", &lhs, &rhs, Some(10.0));
        assert!(r.best_constant.is_infinite());
        assert!(!r.pass);
        let text = serde_json::to_string(&r).unwrap();
        let back: DominationReport = serde_json::from_str(&text).unwrap();
        assert!(back.best_constant.is_infinite());
    }

    #[test]
    fn reported_only_passes() {
        let g = DyadicGrid::uniform(1);
        let lhs = GridFunction::new(g.clone(), vec![5.0, 1.0]).unwrap();
        let rhs = GridFunction::new(g, vec![1.0, 1.0]).unwrap();
        let r = check_domination("reported", &lhs, &rhs, None);
        assert_eq!(r.best_constant, 5.0);
        assert!(r.pass);
    }
}
