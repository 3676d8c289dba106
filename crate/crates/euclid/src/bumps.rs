//! Finite dictionaries of smooth, L∞-normalized bump functions.
//!
//! Each member is a plateau cutoff scaled onto a subwindow of the unit
//! interval, multiplied by a Chebyshev polynomial of degree at most `m+2`,
//! then renormalized so that, on the verification mesh,
//! `|φ^(α)| <= 1` for `α <= m` and the order-`m` increment satisfies the
//! `δ`-Hölder bound with constant 1 (`s = m + δ`). The dictionary
//! under-approximates the full smooth class from below; audits that use it
//! on the right of an inequality log the size and check stabilization as
//! the size grows.

use crate::cutoff::{PlateauBump, Poly};
use crate::error::{Error, Result};

/// Integer/Hölder split `s = m + δ` with `δ ∈ (0, 1]` (and `δ = 0` only at
/// `s = 0`).
pub fn split_smoothness(s: f64) -> (usize, f64) {
    if s <= 0.0 {
        return (0, 0.0);
    }
    let m = (s.ceil() - 1.0).max(0.0) as usize;
    (m, s - m as f64)
}

#[derive(Debug, Clone, Copy)]
struct Window {
    width: f64,
    offset: f64,
}

const WINDOWS: [Window; 10] = [
    Window { width: 1.0, offset: 0.0 },
    Window { width: 0.75, offset: 0.0 },
    Window { width: 0.75, offset: 0.125 },
    Window { width: 0.75, offset: 0.25 },
    Window { width: 0.5, offset: 0.0 },
    Window { width: 0.5, offset: 0.25 },
    Window { width: 0.5, offset: 0.5 },
    Window { width: 0.25, offset: 0.0 },
    Window { width: 0.25, offset: 0.375 },
    Window { width: 0.25, offset: 0.75 },
];

#[derive(Debug, Clone)]
pub struct BumpMember {
    window: Window,
    /// Chebyshev factor and its derivatives, as polynomials in `u`.
    poly_derivs: Vec<Poly>,
    pub degree: usize,
    /// Renormalization making the mesh bounds hold with constant 1.
    pub scale: f64,
}

impl BumpMember {
    /// n-th derivative of the unnormalized profile at `u ∈ [0,1]` (Leibniz
    /// over the plateau factor and the polynomial factor).
    fn raw_deriv(&self, bump: &PlateauBump, n: usize, u: f64) -> f64 {
        let w = self.window;
        let t = (u - w.offset) / w.width;
        if t <= 0.0 || t >= 1.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        let mut binom = 1.0;
        for i in 0..=n {
            if i > 0 {
                binom = binom * (n - i + 1) as f64 / i as f64;
            }
            let b = bump.deriv(i, t) / w.width.powi(i as i32);
            let p = self.poly_derivs[n - i].eval(u);
            acc += binom * b * p;
        }
        acc
    }

    /// Normalized value at `u`.
    pub fn eval(&self, bump: &PlateauBump, u: f64) -> f64 {
        self.scale * self.raw_deriv(bump, 0, u)
    }

    pub fn deriv(&self, bump: &PlateauBump, n: usize, u: f64) -> f64 {
        self.scale * self.raw_deriv(bump, n, u)
    }
}

#[derive(Debug, Clone)]
pub struct BumpDictionary {
    pub s: f64,
    pub m: usize,
    pub delta: f64,
    bump: PlateauBump,
    members: Vec<BumpMember>,
}

const MESH: usize = 257;

impl BumpDictionary {
    /// Builds and normalizes `size` members for smoothness `s > 0`.
    pub fn new(s: f64, size: usize) -> Result<Self> {
        if s <= 0.0 {
            return Err(Error::BadParameter(
                "dictionary requires s > 0; s = 0 degenerates to sign patterns".into(),
            ));
        }
        let (m, delta) = split_smoothness(s);
        let bump = PlateauBump::new(m + 2);
        let mut members = Vec::new();
        'outer: for window in WINDOWS {
            for degree in 0..=m + 2 {
                if members.len() >= size {
                    break 'outer;
                }
                let cheb = Poly::chebyshev(degree).compose_affine(2.0, -1.0);
                let mut poly_derivs = vec![cheb];
                for _ in 0..m + 1 {
                    poly_derivs.push(poly_derivs.last().unwrap().derivative());
                }
                let mut member = BumpMember {
                    window,
                    poly_derivs,
                    degree,
                    scale: 1.0,
                };
                let factor = normalization_factor(&member, &bump, m, delta);
                member.scale = 1.0 / factor;
                members.push(member);
            }
        }
        let dict = BumpDictionary {
            s,
            m,
            delta,
            bump,
            members,
        };
        dict.validate()?;
        Ok(dict)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[BumpMember] {
        &self.members
    }

    pub fn eval(&self, member: &BumpMember, u: f64) -> f64 {
        member.eval(&self.bump, u)
    }

    /// Re-checks every member on a shifted mesh: `|φ^(α)| <= 1` for
    /// `α <= m` and the Hölder-`δ` increment bound at order `m`.
    pub fn validate(&self) -> Result<()> {
        let pts: Vec<f64> = (0..MESH)
            .map(|i| (i as f64 + 0.31) / (MESH as f64 - 0.38))
            .filter(|u| *u < 1.0)
            .collect();
        let tol = 1.0 + 1e-9;
        for (idx, member) in self.members.iter().enumerate() {
            for alpha in 0..=self.m {
                for &u in &pts {
                    let v = member.deriv(&self.bump, alpha, u).abs();
                    if v > tol {
                        return Err(Error::BadBump(format!(
                            "member {idx}: |deriv {alpha}| = {v} at u = {u}"
                        )));
                    }
                }
            }
            let holder = holder_quotient(member, &self.bump, self.m, self.delta, &pts);
            if holder > tol {
                return Err(Error::BadBump(format!(
                    "member {idx}: Hölder quotient {holder}"
                )));
            }
        }
        Ok(())
    }
}

fn mesh_points() -> Vec<f64> {
    (0..MESH).map(|i| i as f64 / (MESH as f64 - 1.0)).collect()
}

fn holder_quotient(
    member: &BumpMember,
    bump: &PlateauBump,
    m: usize,
    delta: f64,
    pts: &[f64],
) -> f64 {
    if delta >= 1.0 {
        // Lipschitz: bounded by the next derivative
        return pts
            .iter()
            .map(|&u| member.deriv(bump, m + 1, u).abs())
            .fold(0.0, f64::max);
    }
    let vals: Vec<f64> = pts.iter().map(|&u| member.deriv(bump, m, u)).collect();
    let mut worst = 0.0f64;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let q = (vals[i] - vals[j]).abs() / (pts[j] - pts[i]).powf(delta);
            worst = worst.max(q);
        }
    }
    worst
}

fn normalization_factor(member: &BumpMember, bump: &PlateauBump, m: usize, delta: f64) -> f64 {
    let pts = mesh_points();
    let mut factor = 0.0f64;
    for alpha in 0..=m {
        for &u in &pts {
            factor = factor.max(member.raw_deriv(bump, alpha, u).abs());
        }
    }
    let unnormalized = BumpMember {
        scale: 1.0,
        ..member.clone()
    };
    factor = factor.max(holder_quotient(&unnormalized, bump, m, delta, &pts));
    // margin so the sup between normalization mesh points stays below 1
    1.05 * factor.max(1e-12)
}
