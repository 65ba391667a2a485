//! Finite sums of complex exponentials, `f(x) = offset + Σ w_j e^{ρ_j x}`.
//!
//! Every scale-type function of a model with rational Laplace exponent has this form,
//! so derivatives, antiderivatives and truncated Laplace integrals are all exact.
//! Antiderivatives go through the entire functions `φ_m(z) = Σ_n z^n/(n+m)!`, which
//! have no removable singularity at `z = 0` (the confluent case is automatic).

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub weight: Complex64,
    pub rate: Complex64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpMix {
    pub terms: Vec<ExpTerm>,
    pub offset: f64,
}

const FACT: [f64; 8] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];

/// `φ_m(z) = Σ_{n≥0} z^n/(n+m)!`, so `φ_0 = e^z`, `φ_1 = (e^z − 1)/z`, and
/// `x^m φ_m(ρx)` is the m-fold antiderivative of `e^{ρx}` vanishing at 0.
pub fn phi_fn(m: usize, z: Complex64) -> Complex64 {
    assert!(m < FACT.len(), "phi_fn order {m} not supported");
    if z.norm() < 2.0 {
        // Power series; terms decay like 2^n/n!.
        let mut term = Complex64::new(1.0 / FACT[m], 0.0);
        let mut sum = term;
        for n in 1..80 {
            term = term * z / (n + m) as f64;
            sum += term;
            if term.norm() <= 1e-18 * sum.norm() {
                break;
            }
        }
        return sum;
    }
    let mut p = z.exp();
    for k in 1..=m {
        p = (p - 1.0 / FACT[k - 1]) / z;
    }
    p
}

impl ExpMix {
    pub fn new(terms: Vec<ExpTerm>, offset: f64) -> Self {
        ExpMix { terms, offset }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Complex64, Complex64)>) -> Self {
        let terms = pairs.into_iter().map(|(weight, rate)| ExpTerm { weight, rate }).collect();
        ExpMix { terms, offset: 0.0 }
    }

    /// Complex value; the imaginary part is rounding noise for conjugate-paired mixes.
    pub fn eval_complex(&self, x: f64) -> Complex64 {
        let mut s = Complex64::new(self.offset, 0.0);
        for t in &self.terms {
            s += t.weight * (t.rate * x).exp();
        }
        s
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval_complex(x).re
    }

    /// k-th derivative at x.
    pub fn deriv(&self, x: f64, k: u32) -> f64 {
        if k == 0 {
            return self.eval(x);
        }
        let mut s = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            s += t.weight * t.rate.powu(k) * (t.rate * x).exp();
        }
        s.re
    }

    /// `∫₀ˣ f(y) dy`.
    pub fn integral(&self, x: f64) -> f64 {
        let mut s = Complex64::new(self.offset * x, 0.0);
        for t in &self.terms {
            s += t.weight * x * phi_fn(1, t.rate * x);
        }
        s.re
    }

    /// `∫₀ˣ ∫₀ʸ f(u) du dy`.
    pub fn double_integral(&self, x: f64) -> f64 {
        let mut s = Complex64::new(0.5 * self.offset * x * x, 0.0);
        for t in &self.terms {
            s += t.weight * x * x * phi_fn(2, t.rate * x);
        }
        s.re
    }

    /// Truncated Laplace (Dickson–Hipp) transform `∫₀ˣ e^{−θy} f(y) dy`.
    pub fn dickson_hipp(&self, theta: f64, x: f64) -> f64 {
        let mut s = self.offset * x * phi_fn(1, Complex64::new(-theta * x, 0.0));
        for t in &self.terms {
            s += t.weight * x * phi_fn(1, (t.rate - theta) * x);
        }
        s.re
    }

    /// Laplace transform `∫₀^∞ e^{−sx} f(x) dx` for `s` right of every rate.
    pub fn laplace(&self, s: f64) -> f64 {
        let mut acc = Complex64::new(if self.offset != 0.0 { self.offset / s } else { 0.0 }, 0.0);
        for t in &self.terms {
            acc += t.weight / (s - t.rate);
        }
        acc.re
    }

    /// Exact derivative as a new mixture.
    pub fn derivative(&self) -> ExpMix {
        ExpMix {
            terms: self.terms.iter().map(|t| ExpTerm { weight: t.weight * t.rate, rate: t.rate }).collect(),
            offset: 0.0,
        }
    }

    pub fn scaled(&self, a: f64) -> ExpMix {
        ExpMix {
            terms: self.terms.iter().map(|t| ExpTerm { weight: t.weight * a, rate: t.rate }).collect(),
            offset: self.offset * a,
        }
    }

    /// Same rates, weights multiplied term by term by `g(rate)`.
    pub fn reweighted(&self, g: impl Fn(Complex64) -> Complex64) -> ExpMix {
        ExpMix {
            terms: self.terms.iter().map(|t| ExpTerm { weight: t.weight * g(t.rate), rate: t.rate }).collect(),
            offset: 0.0,
        }
    }

    /// Largest imaginary residue over a grid, relative to `1 + |value|`.
    pub fn max_imag_residue(&self, xs: &[f64]) -> f64 {
        xs.iter()
            .map(|&x| {
                let v = self.eval_complex(x);
                v.im.abs() / (1.0 + v.re.abs())
            })
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn phi_fn_small_and_large() {
        for &z in &[1e-9, 0.3, -1.7, 2.5, -8.0, 15.0] {
            let e = f64::exp(z);
            let p1 = if z.abs() < 1e-6 { 1.0 + z / 2.0 } else { (e - 1.0) / z };
            let p2 = if z.abs() < 1e-3 { 0.5 + z / 6.0 } else { (e - 1.0 - z) / (z * z) };
            assert!((phi_fn(1, c(z)).re - p1).abs() < 1e-13 * p1.abs().max(1.0), "phi1 {z}");
            assert!((phi_fn(2, c(z)).re - p2).abs() < 1e-12 * p2.abs().max(1.0), "phi2 {z}");
        }
        assert_eq!(phi_fn(1, c(0.0)).re, 1.0);
        assert_eq!(phi_fn(2, c(0.0)).re, 0.5);
    }

    #[test]
    fn phi_fn_continuous_across_switch() {
        for &arg in &[0.0, 0.9, 2.2, 3.5] {
            let dir = Complex64::from_polar(1.0, arg);
            for m in 0..4 {
                let a = phi_fn(m, dir * (2.0 - 1e-12));
                let b = phi_fn(m, dir * (2.0 + 1e-12));
                assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "m={m} arg={arg}");
            }
        }
    }

    #[test]
    fn calculus_on_sinh() {
        // sinh(x) = ½eˣ − ½e^{−x}
        let f = ExpMix::from_pairs([(c(0.5), c(1.0)), (c(-0.5), c(-1.0))]);
        for &x in &[0.0, 0.4, 1.0, 3.0] {
            assert!((f.eval(x) - x.sinh()).abs() < 1e-14 * (1.0 + x.sinh()));
            assert!((f.deriv(x, 1) - x.cosh()).abs() < 1e-14 * x.cosh());
            assert!((f.integral(x) - (x.cosh() - 1.0)).abs() < 1e-13 * x.cosh());
            assert!((f.double_integral(x) - (x.sinh() - x)).abs() < 1e-13 * x.cosh());
        }
        assert!((f.laplace(3.0) - 1.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn dickson_hipp_confluent() {
        // ∫₀ˣ e^{−y} eʸ dy = x
        let f = ExpMix::from_pairs([(c(1.0), c(1.0))]);
        assert!((f.dickson_hipp(1.0, 2.5) - 2.5).abs() < 1e-15);
        // ∫₀ˣ e^{−2y}(1 + eʸ) dy
        let g = ExpMix::new(vec![ExpTerm { weight: c(1.0), rate: c(1.0) }], 1.0);
        let x: f64 = 1.3;
        let exact = (1.0 - (-2.0 * x).exp()) / 2.0 + (1.0 - (-x).exp());
        assert!((g.dickson_hipp(2.0, x) - exact).abs() < 1e-15);
    }

    #[test]
    fn conjugate_pair_is_real() {
        let z = Complex64::new(-0.5, 2.0);
        let w = Complex64::new(0.3, -0.7);
        let f = ExpMix::from_pairs([(w, z), (w.conj(), z.conj())]);
        let xs: Vec<f64> = (0..50).map(|i| i as f64 * 0.2).collect();
        assert!(f.max_imag_residue(&xs) < 1e-15);
        assert!(f.derivative().max_imag_residue(&xs) < 1e-15);
    }
}
