//! Fixed smooth cutoff and plateau-bump prototypes, built from a polynomial
//! smoothstep with hard-coded degree. All derivatives are exact coefficient
//! arithmetic, so normalization and mesh validation share the same numbers.

/// Dense polynomial with ascending coefficients.
#[derive(Debug, Clone)]
pub struct Poly {
    pub coeffs: Vec<f64>,
}

impl Poly {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Poly { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> Poly {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| i as f64 * c)
            .collect();
        Poly { coeffs }
    }

    /// `p(a x + b)`.
    pub fn compose_affine(&self, a: f64, b: f64) -> Poly {
        // Horner over polynomials in (a x + b)
        let mut acc = Poly::new(vec![0.0]);
        for &c in self.coeffs.iter().rev() {
            // acc = acc * (a x + b) + c
            let mut next = vec![0.0; acc.coeffs.len() + 1];
            for (i, &v) in acc.coeffs.iter().enumerate() {
                next[i] += v * b;
                next[i + 1] += v * a;
            }
            next[0] += c;
            acc = Poly::new(next);
        }
        acc
    }

    pub fn scale(&self, s: f64) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Chebyshev polynomial `T_n` on `[-1, 1]`.
    pub fn chebyshev(n: usize) -> Poly {
        let mut t0 = Poly::new(vec![1.0]);
        let mut t1 = Poly::new(vec![0.0, 1.0]);
        if n == 0 {
            return t0;
        }
        for _ in 1..n {
            // t2 = 2x·t1 - t0
            let mut c = vec![0.0; t1.coeffs.len() + 1];
            for (i, &v) in t1.coeffs.iter().enumerate() {
                c[i + 1] += 2.0 * v;
            }
            for (i, &v) in t0.coeffs.iter().enumerate() {
                c[i] -= v;
            }
            t0 = t1;
            t1 = Poly::new(c);
        }
        t1
    }
}

/// Smoothstep of order `K`: `S(t) = ∫_0^t u^K (1-u)^K du / B`, a polynomial
/// that is 0 at 0, 1 at 1, with K vanishing derivatives at both ends.
#[derive(Debug, Clone)]
pub struct SmoothStep {
    /// `derivs[n]` is the n-th derivative of `S` as a polynomial.
    derivs: Vec<Poly>,
    pub order: usize,
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

impl SmoothStep {
    pub fn new(k: usize, max_deriv: usize) -> Self {
        // u^K (1-u)^K = Σ_j C(K,j) (-1)^j u^{K+j}
        let mut integ = vec![0.0; 2 * k + 2];
        for j in 0..=k {
            integ[k + j + 1] = binomial(k, j) * (-1f64).powi(j as i32) / (k + j + 1) as f64;
        }
        let mut s = Poly::new(integ);
        let b = s.eval(1.0);
        s = s.scale(1.0 / b);
        let mut derivs = vec![s];
        for _ in 0..max_deriv {
            let d = derivs.last().unwrap().derivative();
            derivs.push(d);
        }
        SmoothStep { derivs, order: k }
    }

    /// n-th derivative at `t`, clamped outside `[0, 1]` to the constants
    /// 0 and 1 (derivatives vanish there up to order K).
    pub fn deriv(&self, n: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        self.derivs[n].eval(t)
    }
}

/// The cutoff ψ: 1 on `[-1/2, 1/2]`, supported on `(1 + 1/8)[-1/2, 1/2] =
/// [-9/16, 9/16]`, with polynomial smoothstep transitions.
#[derive(Debug, Clone)]
pub struct Cutoff {
    step: SmoothStep,
}

/// Smoothstep degree; C^8 is plenty for the kernel smoothness orders the
/// bench ships (s <= 3).
pub const CUTOFF_SMOOTHNESS: usize = 8;

impl Cutoff {
    pub fn new(max_deriv: usize) -> Self {
        Cutoff {
            step: SmoothStep::new(CUTOFF_SMOOTHNESS, max_deriv),
        }
    }

    /// n-th derivative of ψ at `x`.
    pub fn deriv(&self, n: usize, x: f64) -> f64 {
        let ax = x.abs();
        if ax <= 0.5 {
            return if n == 0 { 1.0 } else { 0.0 };
        }
        if ax >= 9.0 / 16.0 {
            return 0.0;
        }
        // on (1/2, 9/16): ψ(x) = S(9 - 16 x)
        let inner = self.step.deriv(n, 9.0 - 16.0 * ax) * (-16f64).powi(n as i32);
        if x >= 0.0 {
            inner
        } else {
            // mirror symmetry
            inner * (-1f64).powi(n as i32)
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.deriv(0, x)
    }

    /// `ψ_Q(x) = ψ((x - center)/len)`: 1 on the interval, supported on its
    /// 9/8-dilate.
    pub fn eval_scaled(&self, x: f64, center: f64, len: f64) -> f64 {
        self.eval((x - center) / len)
    }
}

/// Plateau bump on `[0,1]`: smoothstep ramps of relative width `ρ = 1/4`
/// around a flat middle; vanishes to high order at both endpoints so the
/// support stays inside the unit interval.
#[derive(Debug, Clone)]
pub struct PlateauBump {
    step: SmoothStep,
}

pub const PLATEAU_RAMP: f64 = 0.25;

impl PlateauBump {
    pub fn new(max_deriv: usize) -> Self {
        PlateauBump {
            step: SmoothStep::new(CUTOFF_SMOOTHNESS, max_deriv),
        }
    }

    /// n-th derivative of the bump at `u ∈ [0,1]`.
    pub fn deriv(&self, n: usize, u: f64) -> f64 {
        let rho = PLATEAU_RAMP;
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        if u < rho {
            self.step.deriv(n, u / rho) / rho.powi(n as i32)
        } else if u > 1.0 - rho {
            self.step.deriv(n, (1.0 - u) / rho) * (-1f64 / rho).powi(n as i32)
        } else if n == 0 {
            1.0
        } else {
            0.0
        }
    }
}
