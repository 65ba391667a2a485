//! Spectrally negative Lévy risk model with hyperexponential claims.
//!
//! The surplus is `X(t) = x + c t + σ B(t) − Σ C_k` with claims arriving at rate `λ`
//! and claim density `Σ p_i μ_i e^{−μ_i y}`. Its Laplace exponent is
//!
//! ```text
//! κ(θ) = (σ²/2) θ² + c θ − λ θ Σ p_i / (μ_i + θ)
//! ```
//!
//! In the compensated Lévy–Khintchine form the linear coefficient is the mean
//! drift `p = c − λ Σ p_i/μ_i`; both parametrizations describe the same process.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One exponential component of the claim-size mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub weight: f64,
    pub rate: f64,
}

/// Model parameters. `sigma2` is σ², so the quadratic coefficient of κ is `sigma2 / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyModel {
    pub c: f64,
    #[serde(default)]
    pub sigma2: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub phases: Vec<Phase>,
}

impl LevyModel {
    /// Builds and validates a model.
    pub fn new(c: f64, sigma2: f64, lambda: f64, phases: Vec<Phase>) -> Result<Self> {
        let m = LevyModel { c, sigma2, lambda, phases };
        m.validate()?;
        Ok(m)
    }

    /// Cramér–Lundberg model with a single exponential claim class.
    pub fn cramer_lundberg(c: f64, lambda: f64, mu: f64) -> Result<Self> {
        Self::new(c, 0.0, lambda, vec![Phase { weight: 1.0, rate: mu }])
    }

    /// Brownian motion with drift `c` and variance `sigma2`.
    pub fn brownian(c: f64, sigma2: f64) -> Result<Self> {
        Self::new(c, sigma2, 0.0, Vec::new())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: LevyModel = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidModel(msg));
        if !self.c.is_finite() || !self.sigma2.is_finite() || !self.lambda.is_finite() {
            return bad("parameters must be finite".into());
        }
        if self.sigma2 < 0.0 {
            return bad(format!("sigma2 = {} must be nonnegative", self.sigma2));
        }
        if self.lambda < 0.0 {
            return bad(format!("lambda = {} must be nonnegative", self.lambda));
        }
        if self.sigma2 == 0.0 && self.c <= 0.0 {
            return bad("need sigma2 > 0 or c > 0".into());
        }
        if self.lambda > 0.0 {
            if self.phases.is_empty() {
                return bad("lambda > 0 requires at least one claim phase".into());
            }
            let mut total = 0.0;
            for (i, ph) in self.phases.iter().enumerate() {
                if !(ph.weight > 0.0 && ph.weight <= 1.0) {
                    return bad(format!("phase {i}: weight {} not in (0, 1]", ph.weight));
                }
                if !(ph.rate > 0.0 && ph.rate.is_finite()) {
                    return bad(format!("phase {i}: rate {} must be positive", ph.rate));
                }
                total += ph.weight;
            }
            if (total - 1.0).abs() > 1e-12 {
                return bad(format!("phase weights sum to {total}, expected 1"));
            }
            for i in 0..self.phases.len() {
                for j in 0..i {
                    let (a, b) = (self.phases[i].rate, self.phases[j].rate);
                    if (a - b).abs() <= 1e-9 * a.max(b) {
                        return bad(format!("phase rates {a} and {b} are not distinct"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Phases that actually contribute (none when λ = 0).
    pub fn active_phases(&self) -> &[Phase] {
        if self.lambda > 0.0 {
            &self.phases
        } else {
            &[]
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn has_gaussian(&self) -> bool {
        self.sigma2 > 0.0
    }

    /// Mean claim size `Σ p_i/μ_i`.
    pub fn mean_claim(&self) -> f64 {
        self.active_phases().iter().map(|p| p.weight / p.rate).sum()
    }

    /// `p = κ'(0+) = c − λ E[C]`.
    pub fn drift_mean(&self) -> f64 {
        self.c - self.lambda * self.mean_claim()
    }

    fn min_rate(&self) -> f64 {
        self.active_phases().iter().map(|p| p.rate).fold(f64::INFINITY, f64::min)
    }

    /// κ(θ) at a complex argument.
    pub fn laplace_exponent(&self, theta: Complex64) -> Result<Complex64> {
        for ph in self.active_phases() {
            if (theta + ph.rate).norm() < 1e-12 {
                return Err(Error::PoleAtTheta { theta: theta.re });
            }
        }
        Ok(self.kappa_c(theta))
    }

    pub(crate) fn kappa_c(&self, t: Complex64) -> Complex64 {
        let mut jump = Complex64::new(0.0, 0.0);
        for ph in self.active_phases() {
            jump += ph.weight / (t + ph.rate);
        }
        0.5 * self.sigma2 * t * t + self.c * t - self.lambda * t * jump
    }

    pub(crate) fn kappa_prime_c(&self, t: Complex64) -> Complex64 {
        let mut jump = Complex64::new(0.0, 0.0);
        for ph in self.active_phases() {
            let d = t + ph.rate;
            jump += ph.weight * ph.rate / (d * d);
        }
        self.sigma2 * t + self.c - self.lambda * jump
    }

    /// κ(θ) for real θ > −min μ_i.
    pub fn kappa(&self, t: f64) -> f64 {
        let mut jump = 0.0;
        for ph in self.active_phases() {
            jump += ph.weight / (t + ph.rate);
        }
        0.5 * self.sigma2 * t * t + self.c * t - self.lambda * t * jump
    }

    pub fn kappa_prime(&self, t: f64) -> f64 {
        let mut jump = 0.0;
        for ph in self.active_phases() {
            let d = t + ph.rate;
            jump += ph.weight * ph.rate / (d * d);
        }
        self.sigma2 * t + self.c - self.lambda * jump
    }

    pub fn kappa_second(&self, t: f64) -> f64 {
        let mut jump = 0.0;
        for ph in self.active_phases() {
            let d = t + ph.rate;
            jump += ph.weight * ph.rate / (d * d * d);
        }
        self.sigma2 + 2.0 * self.lambda * jump
    }

    /// Divided difference `κ[θ, ρ] = (κ(θ) − κ(ρ))/(θ − ρ)`, written without subtraction
    /// so it stays exact when `θ ≈ ρ` (then it equals κ'(θ)).
    pub fn kappa_dd(&self, t: f64, rho: Complex64) -> Complex64 {
        let mut jump = Complex64::new(0.0, 0.0);
        for ph in self.active_phases() {
            jump += ph.weight * ph.rate / ((t + ph.rate) * (rho + ph.rate));
        }
        0.5 * self.sigma2 * (rho + t) + self.c - self.lambda * jump
    }

    /// `∂/∂θ κ[θ, ρ]`.
    pub fn kappa_dd_dtheta(&self, t: f64, rho: Complex64) -> Complex64 {
        let mut jump = Complex64::new(0.0, 0.0);
        for ph in self.active_phases() {
            let d = t + ph.rate;
            jump += ph.weight * ph.rate / (d * d * (rho + ph.rate));
        }
        0.5 * self.sigma2 + self.lambda * jump
    }

    /// Right inverse `Φ_s = sup{θ ≥ 0 : κ(θ) = s}`.
    ///
    /// κ is convex on `[0, ∞)`, so Newton started to the right of the largest root
    /// decreases monotonically onto it.
    pub fn phi(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::DomainError(format!("phi requires s >= 0, got {s}")));
        }
        if s == 0.0 && self.drift_mean() >= 0.0 {
            return Ok(0.0);
        }
        const MAX_ITER: usize = 200;
        let mut hi = 1.0_f64;
        let mut it = 0;
        while self.kappa(hi) <= s {
            hi *= 2.0;
            it += 1;
            if it > MAX_ITER || !hi.is_finite() {
                return Err(Error::ConvergenceFailure { what: "phi bracketing", iterations: it });
            }
        }
        let mut t = hi;
        for _ in 0..MAX_ITER {
            let f = self.kappa(t) - s;
            let d = self.kappa_prime(t);
            if f <= 0.0 || d <= 0.0 {
                return Ok(t);
            }
            let step = f / d;
            let next = t - step;
            if step <= 4.0 * f64::EPSILON * t.abs().max(1e-300) || next >= t {
                return Ok(next.min(t));
            }
            t = next;
        }
        Err(Error::ConvergenceFailure { what: "phi Newton", iterations: MAX_ITER })
    }

    /// Lundberg adjustment coefficient `R > 0` with `κ(−R) = 0`; requires positive drift
    /// and at least one claim phase.
    pub fn adjustment_coefficient(&self) -> Result<f64> {
        let p = self.drift_mean();
        if p <= 0.0 {
            return Err(Error::NonpositiveDrift(p));
        }
        if self.active_phases().is_empty() {
            if self.sigma2 > 0.0 {
                return Ok(2.0 * self.c / self.sigma2);
            }
            return Err(Error::DomainError("no claims: ruin is impossible".into()));
        }
        // κ is convex on (−μ_min, ∞), positive near −μ_min and negative just left of 0.
        let mu = self.min_rate();
        let (mut lo, mut hi) = (-mu * (1.0 - 1e-15), 0.0_f64);
        for _ in 0..2000 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.kappa(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(-0.5 * (lo + hi))
    }

    /// All roots of `κ(θ) = s`, i.e. the zeros of `(κ(θ) − s) Π(μ_i + θ)`.
    ///
    /// The largest real root is exactly `phi(s)`; the rest have negative real part and
    /// complex roots appear in conjugate pairs.
    pub fn root_set(&self, s: f64) -> Result<Vec<Complex64>> {
        let phi = self.phi(s)?;
        let coeffs = self.numerator_poly(s);
        let raw = poly_roots(&coeffs)?;

        let scale = raw.iter().map(|z| z.norm()).fold(1e-300, f64::max);
        let mut reals = Vec::new();
        let mut uppers = Vec::new();
        let mut lowers = 0usize;
        for z0 in raw {
            let z = self.polish(z0, s);
            if z.im.abs() <= 1e-10 * (1.0 + z.re.abs()) {
                let mut re = self.polish(Complex64::new(z.re, 0.0), s).re;
                if s == 0.0 && re.abs() < 1e-13 {
                    re = 0.0;
                }
                reals.push(re);
            } else if z.im > 0.0 {
                uppers.push(z);
            } else {
                lowers += 1;
            }
        }
        if lowers != uppers.len() {
            return Err(Error::ConvergenceFailure { what: "root_set conjugate pairing", iterations: 0 });
        }
        reals.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let top = reals.first().copied().ok_or(Error::ConvergenceFailure {
            what: "root_set: no real root",
            iterations: 0,
        })?;
        if (top - phi).abs() > 1e-6 * (1.0 + phi) {
            return Err(Error::ConvergenceFailure { what: "root_set: largest real root disagrees with phi", iterations: 0 });
        }
        reals[0] = phi;

        let mut roots: Vec<Complex64> = reals.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        for z in uppers {
            roots.push(z);
            roots.push(z.conj());
        }
        for i in 0..roots.len() {
            for j in 0..i {
                let (a, b) = (roots[i], roots[j]);
                let tol = 1e-8 * a.norm().max(b.norm()).max(1e-8 * scale);
                if (a - b).norm() <= tol {
                    return Err(Error::DegenerateRoots { s, a: format!("{a}"), b: format!("{b}") });
                }
            }
        }
        Ok(roots)
    }

    /// Newton refinement of a root of `κ(θ) = s`; keeps the better of the iterates.
    fn polish(&self, z0: Complex64, s: f64) -> Complex64 {
        let mut z = z0;
        let mut best = z0;
        let mut best_res = (self.kappa_c(z0) - s).norm();
        for _ in 0..8 {
            let f = self.kappa_c(z) - s;
            let d = self.kappa_prime_c(z);
            if d.norm() == 0.0 || !f.is_finite() {
                break;
            }
            z -= f / d;
            let res = (self.kappa_c(z) - s).norm();
            if !res.is_finite() {
                break;
            }
            if res < best_res {
                best = z;
                best_res = res;
            } else {
                break;
            }
        }
        best
    }

    /// Ascending coefficients of `[(σ²/2)θ² + cθ − s] Π(μ_i+θ) − λθ Σ_i p_i Π_{j≠i}(μ_j+θ)`.
    fn numerator_poly(&self, s: f64) -> Vec<f64> {
        let phases = self.active_phases();
        let mut poly = vec![-s, self.c, 0.5 * self.sigma2];
        for ph in phases {
            poly = poly_mul_linear(&poly, ph.rate);
        }
        for (i, ph) in phases.iter().enumerate() {
            let mut term = vec![0.0, -self.lambda * ph.weight];
            for (j, other) in phases.iter().enumerate() {
                if j != i {
                    term = poly_mul_linear(&term, other.rate);
                }
            }
            for (k, v) in term.into_iter().enumerate() {
                poly[k] += v;
            }
        }
        while poly.len() > 1 && *poly.last().unwrap() == 0.0 {
            poly.pop();
        }
        poly
    }
}

/// Multiplies an ascending-coefficient polynomial by `(a + θ)`.
fn poly_mul_linear(p: &[f64], a: f64) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + 1];
    for (k, &v) in p.iter().enumerate() {
        out[k] += a * v;
        out[k + 1] += v;
    }
    out
}

/// Roots of an ascending-coefficient polynomial via companion-matrix eigenvalues.
fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[n];
    if n == 1 {
        return Ok(vec![Complex64::new(-coeffs[0] / lead, 0.0)]);
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    for i in 0..n {
        m[(i, n - 1)] = -coeffs[i] / lead;
    }
    let eig = m.complex_eigenvalues();
    let roots: Vec<Complex64> = eig.iter().copied().collect();
    if roots.iter().any(|z| !z.is_finite()) {
        return Err(Error::ConvergenceFailure { what: "companion eigenvalues", iterations: 0 });
    }
    Ok(roots)
}

/// Catalog of small reference models used in examples and tests.
pub fn catalog(name: &str) -> Option<LevyModel> {
    let ph = |weight, rate| Phase { weight, rate };
    let m = match name.to_ascii_lowercase().as_str() {
        "m1" => LevyModel { c: 1.0, sigma2: 0.0, lambda: 1.0, phases: vec![ph(1.0, 2.0)] },
        "m2" => LevyModel { c: 0.0, sigma2: 2.0, lambda: 0.0, phases: Vec::new() },
        "m3" => LevyModel { c: 2.0, sigma2: 0.5, lambda: 1.5, phases: vec![ph(0.4, 1.0), ph(0.6, 3.0)] },
        "m4" => LevyModel { c: 1.5, sigma2: 0.0, lambda: 1.0, phases: vec![ph(0.3, 0.5), ph(0.7, 2.5)] },
        _ => return None,
    };
    Some(m)
}

pub const CATALOG_NAMES: [&str; 4] = ["m1", "m2", "m3", "m4"];
