//! Scale functions of a spectrally negative model and their Parisian counterparts.
//!
//! With roots `ρ_j` of `κ(θ) = q` and weights `w_j = 1/κ'(ρ_j)`,
//!
//! ```text
//! W_q(x)    = Σ w_j e^{ρ_j x}
//! Z_q(x,θ)  = Σ w_j κ[θ,ρ_j] e^{ρ_j x}                      κ[a,b] = (κ(a)−κ(b))/(a−b)
//! Z_q(x)    = Z_q(x,0)
//! Z_{q,r}(x,θ) = Σ w_j κ[θ,ρ_j] κ[Φ',ρ_j] / κ[θ,Φ'] e^{ρ_j x}   Φ' = Φ_{q+r}
//! ```
//!
//! The divided-difference weights reproduce `e^{θx}(1 − (κ(θ)−q)∫₀ˣ e^{−θy}W_q(y)dy)`
//! exactly but never subtract nearly equal quantities, so `θ = Φ_q`, `θ = Φ_{q+r}` and
//! large `x` need no special branches.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::expmix::{ExpMix, ExpTerm};
use crate::levy_model::LevyModel;

/// Exponential parameter that may be `+∞` (used for the `W`-type limit of `Z`-type laws).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Theta {
    Finite(f64),
    Infinite,
}

impl From<f64> for Theta {
    fn from(t: f64) -> Self {
        if t == f64::INFINITY {
            Theta::Infinite
        } else {
            Theta::Finite(t)
        }
    }
}

impl std::str::FromStr for Theta {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" => Ok(Theta::Infinite),
            other => other
                .parse::<f64>()
                .map(Theta::from)
                .map_err(|_| Error::Parse(format!("expected a number or `inf`, got `{s}`"))),
        }
    }
}

/// Members of the `θ = 0` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Z0Kind {
    Z,
    Zbar,
    Z1,
}

#[derive(Debug, Clone)]
pub struct ScaleContext {
    model: LevyModel,
    q: f64,
    roots: Vec<Complex64>,
    phi_q: f64,
    w: ExpMix,
    z0: ExpMix,
}

impl ScaleContext {
    pub fn build(model: &LevyModel, q: f64) -> Result<Self> {
        if !(q >= 0.0) || !q.is_finite() {
            return Err(Error::DomainError(format!("q = {q} must be finite and nonnegative")));
        }
        model.validate()?;
        let roots = model.root_set(q)?;
        let phi_q = model.phi(q)?;
        let w = ExpMix::from_pairs(roots.iter().map(|&r| (1.0 / model.kappa_prime_c(r), r)));
        let z0 = w.reweighted(|r| model.kappa_dd(0.0, r));
        Ok(ScaleContext { model: model.clone(), q, roots, phi_q, w, z0 })
    }

    pub fn model(&self) -> &LevyModel {
        &self.model
    }
    pub fn q(&self) -> f64 {
        self.q
    }
    pub fn phi_q(&self) -> f64 {
        self.phi_q
    }
    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }
    /// `W_q` as an exponential mixture.
    pub fn w_mix(&self) -> &ExpMix {
        &self.w
    }
    /// `p = κ'(0+)`.
    pub fn drift(&self) -> f64 {
        self.model.drift_mean()
    }

    /// `W_q^{(k)}(x)`, zero for `x < 0`. At `x = 0` derivatives are right limits.
    pub fn eval_w(&self, x: f64, order: u32) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.w.deriv(x, order)
    }

    /// `W̄_q(x) = ∫₀ˣ W_q`.
    pub fn eval_wbar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.w.integral(x)
    }

    /// `W_q(0+)`: `1/c` without a Gaussian part, otherwise 0.
    pub fn w_at_zero(&self) -> f64 {
        if self.model.has_gaussian() {
            0.0
        } else {
            1.0 / self.model.c
        }
    }

    /// `Z_q(·,θ)` as an exponential mixture.
    pub fn z_mix(&self, theta: f64) -> ExpMix {
        self.w.reweighted(|r| self.model.kappa_dd(theta, r))
    }

    /// `∂_θ Z_q(·,θ)` as an exponential mixture.
    pub fn z_dtheta_mix(&self, theta: f64) -> ExpMix {
        self.w.reweighted(|r| self.model.kappa_dd_dtheta(theta, r))
    }

    /// `Z_q(x,θ)` (`dtheta = false`) or `∂_θ Z_q(x,θ)` (`dtheta = true`).
    /// For `x ≤ 0` the exterior value `e^{θx}` (resp. `x e^{θx}`) is returned.
    pub fn eval_z(&self, x: f64, theta: f64, dtheta: bool) -> f64 {
        if x <= 0.0 {
            let e = (theta * x).exp();
            return if dtheta { x * e } else { e };
        }
        if dtheta {
            self.z_dtheta_mix(theta).eval(x)
        } else {
            self.z_mix(theta).eval(x)
        }
    }

    /// `∂_x^k Z_q(x,θ)` for `x ≥ 0` (right limits at 0).
    pub fn eval_z_dx(&self, x: f64, theta: f64, order: u32) -> f64 {
        if order == 0 {
            return self.eval_z(x, theta, false);
        }
        self.z_mix(theta).deriv(x.max(0.0), order)
    }

    /// `Z_q(x,θ)` through the truncated-Laplace representation
    /// `e^{θx}(1 − (κ(θ)−q) ∫₀ˣ e^{−θy} W_q(y) dy)`. Loses accuracy where the bracket
    /// cancels; kept as an independent evaluation route.
    pub fn eval_z_dickson_hipp(&self, x: f64, theta: f64) -> f64 {
        if x <= 0.0 {
            return (theta * x).exp();
        }
        let k = self.model.kappa(theta) - self.q;
        (theta * x).exp() * (1.0 - k * self.w.dickson_hipp(theta, x))
    }

    /// `Z_q`, `Z̄_q` or `Z_{1,q} = Z̄_q − p W̄_q`.
    pub fn eval_z0_family(&self, x: f64, kind: Z0Kind) -> f64 {
        match kind {
            Z0Kind::Z => self.eval_z0(x, 0),
            Z0Kind::Zbar => self.eval_zbar(x),
            Z0Kind::Z1 => self.eval_z1(x, 0),
        }
    }

    /// `Z_q^{(k)}(x)`; `Z_q = 1` on `x ≤ 0`.
    pub fn eval_z0(&self, x: f64, order: u32) -> f64 {
        if x <= 0.0 && order == 0 {
            return 1.0;
        }
        self.z0.deriv(x.max(0.0), order)
    }

    /// `Z̄_q(x) = ∫₀ˣ Z_q`; equals `x` on `x ≤ 0`.
    pub fn eval_zbar(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return x;
        }
        self.z0.integral(x)
    }

    /// `Z_{1,q}^{(k)}(x)` with `Z_{1,q}' = Z_q − p W_q`, `Z_{1,q}'' = q W_q − p W_q'`.
    pub fn eval_z1(&self, x: f64, order: u32) -> f64 {
        let p = self.drift();
        match order {
            0 => self.eval_zbar(x) - p * self.eval_wbar(x),
            1 => self.eval_z0(x, 0) - p * self.eval_w(x, 0),
            k => self.q * self.eval_w(x, k - 2) - p * self.eval_w(x, k - 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParisianContext {
    base: ScaleContext,
    r: f64,
    phi_qr: f64,
    w_qr: ExpMix,
}

impl ParisianContext {
    pub fn build(model: &LevyModel, q: f64, r: f64) -> Result<Self> {
        let base = ScaleContext::build(model, q)?;
        Self::from_base(base, r)
    }

    pub fn from_base(base: ScaleContext, r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::DomainError(format!("observation rate r = {r} must be positive")));
        }
        let phi_qr = base.model.phi(base.q + r)?;
        let w_qr = base.z_mix(phi_qr);
        Ok(ParisianContext { base, r, phi_qr, w_qr })
    }

    pub fn base(&self) -> &ScaleContext {
        &self.base
    }
    pub fn model(&self) -> &LevyModel {
        &self.base.model
    }
    pub fn q(&self) -> f64 {
        self.base.q
    }
    pub fn r(&self) -> f64 {
        self.r
    }
    pub fn phi_q(&self) -> f64 {
        self.base.phi_q
    }
    pub fn phi_qr(&self) -> f64 {
        self.phi_qr
    }

    /// `Z_{q,r}(·,θ)` as an exponential mixture over the roots of `κ = q`.
    pub fn z_qr_mix(&self, theta: f64) -> ExpMix {
        let m = &self.base.model;
        let denom = m.kappa_dd(theta, Complex64::new(self.phi_qr, 0.0));
        ExpMix {
            terms: self
                .base
                .w
                .terms
                .iter()
                .map(|t| ExpTerm {
                    weight: t.weight * m.kappa_dd(theta, t.rate) * m.kappa_dd(self.phi_qr, t.rate) / denom,
                    rate: t.rate,
                })
                .collect(),
            offset: 0.0,
        }
    }

    /// `W_{q,r}(x) = Z_q(x, Φ_{q+r})` and its x-derivatives; `W_{q,r}(0) = 1`.
    pub fn eval_w_qr(&self, x: f64, order: u32) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.w_qr.deriv(x, order)
    }

    /// `Φ_{q+r}/(q+r) · W_{q,r}`: the normalization under which `W_{q,r} → W_q` as `r → ∞`.
    /// Only the resolvent density depends on the normalization.
    pub fn eval_w_qr_normalized(&self, x: f64, order: u32) -> f64 {
        self.phi_qr / (self.q() + self.r) * self.eval_w_qr(x, order)
    }

    /// `∂_x^k Z_{q,r}(x,θ)`; `θ = ∞` selects `W_{q,r}`.
    pub fn eval_parisian_z(&self, x: f64, theta: Theta, deriv_x: u32) -> f64 {
        match theta {
            Theta::Infinite => self.eval_w_qr(x, deriv_x),
            Theta::Finite(t) => {
                if x < 0.0 && deriv_x == 0 {
                    return self.eval_parisian_z_assembled(x, t);
                }
                self.z_qr_mix(t).deriv(x.max(0.0), deriv_x)
            }
        }
    }

    /// `Z_{q,r}(x,θ)` assembled as `[r Z_q(x,θ) + (q−κ(θ)) Z_q(x,Φ')]/(q+r−κ(θ))`, with the
    /// removable singularity at `θ = Φ'` replaced by `Z_q(x,Φ') − r ∂_θZ_q(x,Φ')/κ'(Φ')`.
    pub fn eval_parisian_z_assembled(&self, x: f64, theta: f64) -> f64 {
        let q = self.q();
        let r = self.r;
        let m = &self.base.model;
        let gap = q + r - m.kappa(theta);
        if gap.abs() < 1e-8 * (q + r) {
            let p = self.phi_qr;
            return self.base.eval_z(x, p, false) - r / m.kappa_prime(p) * self.base.eval_z(x, p, true);
        }
        (r * self.base.eval_z(x, theta, false) + (q - m.kappa(theta)) * self.base.eval_z(x, self.phi_qr, false)) / gap
    }

    /// `Z'_{q,r}(x) = (q/(q+r)) Φ' Z_q(x,Φ')` and `Z''_{q,r}(x) = (q/(q+r)) Φ' (Φ' Z_q(x,Φ') − r W_q(x))`.
    pub fn eval_z_qr_prime_closed(&self, x: f64, order: u32) -> f64 {
        let q = self.q();
        let f = q / (q + self.r) * self.phi_qr;
        match order {
            1 => f * self.base.eval_z(x, self.phi_qr, false),
            2 => f * (self.phi_qr * self.base.eval_z(x, self.phi_qr, false) - self.r * self.base.eval_w(x, 0)),
            _ => panic!("order must be 1 or 2"),
        }
    }

    /// `𝒮(x) = (r/(q+r))(Z̄_q(x) + p/q)` and its first two derivatives.
    pub fn eval_scripts(&self, x: f64, order: u32) -> Result<f64> {
        let q = self.q();
        if q == 0.0 {
            return Err(Error::QZero("the bailout function S carries p/q"));
        }
        let a = self.r / (q + self.r);
        Ok(match order {
            0 => a * (self.base.eval_zbar(x) + self.base.drift() / q),
            1 => a * self.base.eval_z0(x, 0),
            2 => a * q * self.base.eval_w(x, 0),
            k => a * q * self.base.eval_w(x, k - 2),
        })
    }
}

/// Penalty `w(y)` applied to the deficit `y ≤ 0` at ruin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Penalty {
    /// `w(y) = e^{θy}`.
    Exponential { theta: f64 },
    /// `w(y) = k y + K`.
    Linear { k: f64, big_k: f64 },
    /// `w(y) = K`.
    Constant { big_k: f64 },
}

impl Penalty {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            Penalty::Exponential { theta } => (theta * y).exp(),
            Penalty::Linear { k, big_k } => k * y + big_k,
            Penalty::Constant { big_k } => big_k,
        }
    }

    /// Parses `exp:θ`, `linear:k,K` or `const:K`.
    pub fn parse(s: &str) -> Result<Self> {
        let unsupported = || Error::UnsupportedPenalty(s.to_string());
        let (name, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|a| a.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| unsupported())?
        };
        match (name.trim().to_ascii_lowercase().as_str(), nums.as_slice()) {
            ("exp" | "exponential", [t]) => Ok(Penalty::Exponential { theta: *t }),
            ("linear", [k, kk]) => Ok(Penalty::Linear { k: *k, big_k: *kk }),
            ("const" | "constant", [kk]) => Ok(Penalty::Constant { big_k: *kk }),
            _ => Err(unsupported()),
        }
    }
}

/// The smooth Gerber–Shiu function `𝒮_w`: the q-harmonic function equal to `w` on `(−∞, 0]`.
#[derive(Debug, Clone)]
pub struct GerberShiu<'a> {
    ctx: &'a ScaleContext,
    penalty: Penalty,
    zmix: Option<ExpMix>,
}

pub fn build_gerber_shiu(ctx: &ScaleContext, penalty: Penalty) -> Result<GerberShiu<'_>> {
    let zmix = match penalty {
        Penalty::Exponential { theta } => {
            if !(theta >= 0.0) || !theta.is_finite() {
                return Err(Error::UnsupportedPenalty(format!("exp:{theta}")));
            }
            Some(ctx.z_mix(theta))
        }
        Penalty::Linear { k, big_k } if !(k.is_finite() && big_k.is_finite()) => {
            return Err(Error::UnsupportedPenalty(format!("linear:{k},{big_k}")));
        }
        Penalty::Constant { big_k } if !big_k.is_finite() => {
            return Err(Error::UnsupportedPenalty(format!("const:{big_k}")));
        }
        _ => None,
    };
    Ok(GerberShiu { ctx, penalty, zmix })
}

impl GerberShiu<'_> {
    pub fn penalty(&self) -> Penalty {
        self.penalty
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.penalty.eval(x);
        }
        self.derivative(x, 0)
    }

    /// `𝒮_w^{(k)}(x)` for `x ≥ 0` (right limits at 0).
    pub fn derivative(&self, x: f64, order: u32) -> f64 {
        let x = x.max(0.0);
        match self.penalty {
            Penalty::Exponential { .. } => self.zmix.as_ref().unwrap().deriv(x, order),
            Penalty::Linear { k, big_k } => k * self.ctx.eval_z1(x, order) + big_k * self.ctx.eval_z0(x, order),
            Penalty::Constant { big_k } => big_k * self.ctx.eval_z0(x, order),
        }
    }
}
