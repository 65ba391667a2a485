//! First-passage, severity, bailout and dividend-penalty laws in closed form.
//!
//! Classical laws take a [`ScaleContext`]; the Poisson-observed (Parisian) versions take a
//! [`ParisianContext`] and replace `W_q, Z_q` by `W_{q,r}, Z_{q,r}`. Notation:
//! `τ_b^+` first passage above `b`, `τ_0^-` first passage below 0, `T_0^-` first
//! observation (at rate `r`) of a negative surplus, `R` dividends paid at an upper
//! barrier, `R_*` capital injected at the lower boundary.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::scale_kernel::{build_gerber_shiu, ParisianContext, Penalty, ScaleContext, Theta};

/// A law value with named intermediate quantities for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LawResult {
    pub value: f64,
    pub components: BTreeMap<&'static str, f64>,
}

impl LawResult {
    fn new(value: f64) -> Self {
        LawResult { value, components: BTreeMap::new() }
    }

    fn with(mut self, name: &'static str, v: f64) -> Self {
        self.components.insert(name, v);
        self
    }
}

/// Which boundary condition applies at the lower level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Absorbed,
    Reflected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfiniteMode {
    /// `E_x[e^{−qτ_0^- + θX(τ_0^-)}; τ_0^- < ∞]`.
    Ruin,
    /// `E_x[e^{−qτ_0^-} Z_q(X(τ_0^-), Φ_q)]`-type recovery transform.
    Recovery,
}

fn check_interval(x: f64, b: f64) -> Result<()> {
    if !(x.is_finite() && b.is_finite()) || x < 0.0 || x > b || b <= 0.0 {
        return Err(Error::DomainError(format!("need 0 <= x <= b with b > 0, got x = {x}, b = {b}")));
    }
    Ok(())
}

/// `Z_q'(x,θ) = θ Z_q(x,θ) + (q − κ(θ)) W_q(x)`.
fn z_prime(ctx: &ScaleContext, x: f64, theta: f64) -> f64 {
    ctx.eval_z_dx(x, theta, 1)
}

/// `E_x[e^{−qτ_b^+}; τ_b^+ < τ_a^-] = W_q(x−a)/W_q(b−a)`.
pub fn two_sided_exit(ctx: &ScaleContext, x: f64, a: f64, b: f64) -> Result<LawResult> {
    if !(a < b) || x < a || x > b {
        return Err(Error::DomainError(format!("need a <= x <= b, a < b; got a = {a}, x = {x}, b = {b}")));
    }
    let num = ctx.eval_w(x - a, 0);
    let den = ctx.eval_w(b - a, 0);
    Ok(LawResult::new(num / den).with("W(x-a)", num).with("W(b-a)", den))
}

/// `E_x[e^{−qτ_0^- + θX(τ_0^-)}; τ_0^- < τ_b^+] = Z_q(x,θ) − W_q(x) Z_q(b,θ)/W_q(b)`.
pub fn severity_absorbed(ctx: &ScaleContext, x: f64, b: f64, theta: f64) -> Result<LawResult> {
    check_interval(x, b)?;
    let zx = ctx.eval_z(x, theta, false);
    let zb = ctx.eval_z(b, theta, false);
    let wx = ctx.eval_w(x, 0);
    let wb = ctx.eval_w(b, 0);
    Ok(LawResult::new(zx - wx * zb / wb).with("Z(x,theta)", zx).with("Z(b,theta)", zb).with("W(x)", wx).with("W(b)", wb))
}

/// Severity of ruin with dividends paid at `b`:
/// `Z_q(x,θ) − W_q(x) Z_q'(b,θ)/W_q'(b)`.
pub fn severity_reflected(ctx: &ScaleContext, x: f64, b: f64, theta: f64) -> Result<LawResult> {
    check_interval(x, b)?;
    let zx = ctx.eval_z(x, theta, false);
    let dzb = z_prime(ctx, b, theta);
    let wx = ctx.eval_w(x, 0);
    let dwb = ctx.eval_w(b, 1);
    Ok(LawResult::new(zx - wx * dzb / dwb).with("Z(x,theta)", zx).with("Z'(b,theta)", dzb).with("W'(b)", dwb))
}

/// Ruin transform without an upper barrier, `Z_q(x,θ) − W_q(x)(κ(θ)−q)/(θ−Φ_q)`, or the
/// recovery-time transform `Z_q(x,Φ_q) − q W_q(x)/Φ_q`.
pub fn severity_infinite(ctx: &ScaleContext, x: f64, theta: f64, mode: InfiniteMode) -> Result<LawResult> {
    if !(x >= 0.0) {
        return Err(Error::DomainError(format!("x = {x} must be nonnegative")));
    }
    let phi = ctx.phi_q();
    if ctx.q() == 0.0 && phi == 0.0 {
        return Err(Error::QZero("infinite-horizon transform needs q > 0 or negative drift"));
    }
    let wx = ctx.eval_w(x, 0);
    match mode {
        InfiniteMode::Ruin => {
            // (κ(θ) − q)/(θ − Φ_q) is the divided difference κ[θ, Φ_q].
            let slope = ctx.model().kappa_dd(theta, phi.into()).re;
            let zx = ctx.eval_z(x, theta, false);
            Ok(LawResult::new(zx - wx * slope).with("Z(x,theta)", zx).with("W(x)", wx).with("kappa[theta,Phi]", slope))
        }
        InfiniteMode::Recovery => {
            let zx = ctx.eval_z(x, phi, false);
            Ok(LawResult::new(zx - ctx.q() * wx / phi).with("Z(x,Phi)", zx).with("W(x)", wx))
        }
    }
}

/// `E_x[e^{−qτ_b^+ − θR_*(τ_b^+)}]` for the process reflected at 0: `Z_q(x,θ)/Z_q(b,θ)`;
/// `θ = ∞` gives `W_q(x)/W_q(b)`.
pub fn bailouts_to_level(ctx: &ScaleContext, x: f64, b: f64, theta: Theta) -> Result<LawResult> {
    check_interval(x, b)?;
    let (num, den) = match theta {
        Theta::Finite(t) => (ctx.eval_z(x, t, false), ctx.eval_z(b, t, false)),
        Theta::Infinite => (ctx.eval_w(x, 0), ctx.eval_w(b, 0)),
    };
    Ok(LawResult::new(num / den).with("numerator", num).with("denominator", den))
}

/// `E_x[e^{−qτ_0^- + θX(τ_0^-) − ϑR(τ_0^-)}; τ_0^- < ∞]` with dividends paid at `b`:
/// `Z_q(x,θ) − W_q(x)(Z_q'(b,θ) + ϑZ_q(b,θ))/(W_q'(b) + ϑW_q(b))`.
/// `ϑ = ∞` kills every path that reaches `b` and reduces to [`severity_absorbed`].
pub fn dividends_penalty_classic(ctx: &ScaleContext, x: f64, b: f64, theta: f64, vartheta: Theta) -> Result<LawResult> {
    check_interval(x, b)?;
    let zx = ctx.eval_z(x, theta, false);
    let wx = ctx.eval_w(x, 0);
    let zb = ctx.eval_z(b, theta, false);
    let wb = ctx.eval_w(b, 0);
    let ratio = match vartheta {
        Theta::Infinite => zb / wb,
        Theta::Finite(v) => {
            if v < 0.0 {
                return Err(Error::DomainError(format!("vartheta = {v} must be nonnegative")));
            }
            (z_prime(ctx, b, theta) + v * zb) / (ctx.eval_w(b, 1) + v * wb)
        }
    };
    Ok(LawResult::new(zx - wx * ratio).with("Z(x,theta)", zx).with("W(x)", wx).with("ratio", ratio))
}

/// Gerber–Shiu function for penalty `w` with absorption at `b` or dividends at `b`.
pub fn gs_exit(ctx: &ScaleContext, x: f64, b: f64, penalty: Penalty, boundary: Boundary) -> Result<LawResult> {
    check_interval(x, b)?;
    let gs = build_gerber_shiu(ctx, penalty)?;
    let sx = gs.value(x);
    let wx = ctx.eval_w(x, 0);
    let ratio = match boundary {
        Boundary::Absorbed => gs.value(b) / ctx.eval_w(b, 0),
        Boundary::Reflected => gs.derivative(b, 1) / ctx.eval_w(b, 1),
    };
    Ok(LawResult::new(sx - wx * ratio).with("S_w(x)", sx).with("W(x)", wx).with("ratio", ratio))
}

/// Parisian up-crossing law `Z_{q,r}(x,θ)/Z_{q,r}(b,θ)` (Parisian reflection, injection
/// cost `θ`), or `W_{q,r}(x)/W_{q,r}(b) = E_x[e^{−qτ_b^+}; τ_b^+ < T_0^-]` for `θ = ∞`.
pub fn parisian_up_exit(pctx: &ParisianContext, x: f64, b: f64, theta: Theta) -> Result<LawResult> {
    check_interval(x, b)?;
    let num = pctx.eval_parisian_z(x, theta, 0);
    let den = pctx.eval_parisian_z(b, theta, 0);
    Ok(LawResult::new(num / den).with("numerator", num).with("denominator", den))
}

/// `E_x[e^{−qT_0^- + θX(T_0^-)}; T_0^- < τ_b^+] = Z_{q,r}(x,θ) − W_{q,r}(x) Z_{q,r}(b,θ)/W_{q,r}(b)`.
pub fn parisian_severity(pctx: &ParisianContext, x: f64, b: f64, theta: f64) -> Result<LawResult> {
    check_interval(x, b)?;
    let zx = pctx.eval_parisian_z(x, Theta::Finite(theta), 0);
    let zb = pctx.eval_parisian_z(b, Theta::Finite(theta), 0);
    let wx = pctx.eval_w_qr(x, 0);
    let wb = pctx.eval_w_qr(b, 0);
    Ok(LawResult::new(zx - wx * zb / wb).with("Z_qr(x,theta)", zx).with("Z_qr(b,theta)", zb).with("W_qr(x)", wx).with("W_qr(b)", wb))
}

fn check_resolvent(x: f64, a: f64, b: f64) -> Result<()> {
    if !(a < b) || x < a || x > b {
        return Err(Error::DomainError(format!("need a <= x <= b, a < b; got a = {a}, x = {x}, b = {b}")));
    }
    Ok(())
}

/// The two-sided Parisian resolvent kernel `W(x−a)W(b−y)/W(b−a) − W(x−y)` on `(a,b)`, built
/// from the normalized `W = Φ_{q+r}/(q+r) · W_{q,r}`.
///
/// Its integral over `(a,b)` is the total discounted time before `τ_b^+ ∧ T_0^-`, which
/// includes the time spent below `a`. It is not the occupation density of subsets of
/// `(a,b)`; [`ParisianOccupation`] gives that one.
pub fn parisian_resolvent(pctx: &ParisianContext, x: f64, a: f64, b: f64, y: f64) -> Result<LawResult> {
    check_resolvent(x, a, b)?;
    if !(y > a && y < b) {
        return Err(Error::DomainError(format!("y = {y} must lie in (a, b) = ({a}, {b})")));
    }
    let w = |z: f64| pctx.eval_w_qr_normalized(z, 0);
    let first = w(x - a) * w(b - y) / w(b - a);
    let second = if x >= y { w(x - y) } else { 0.0 };
    Ok(LawResult::new(first - second).with("first", first).with("second", second))
}

/// `∫_a^b` of [`parisian_resolvent`] in closed form.
pub fn parisian_resolvent_integral(pctx: &ParisianContext, x: f64, a: f64, b: f64) -> Result<LawResult> {
    check_resolvent(x, a, b)?;
    let scale = pctx.phi_qr() / (pctx.q() + pctx.r());
    let wmix = pctx.base().z_mix(pctx.phi_qr());
    let w = |z: f64| scale * wmix.eval(z);
    let wbar = |z: f64| scale * wmix.integral(z);
    let first = w(x - a) * wbar(b - a) / w(b - a);
    let second = wbar(x - a);
    Ok(LawResult::new(first - second).with("first", first).with("second", second))
}

/// Band integral `∫_{y0}^{y1}` of [`parisian_resolvent`] in closed form, `a ≤ y0 < y1 ≤ b`.
pub fn parisian_resolvent_band(pctx: &ParisianContext, x: f64, a: f64, b: f64, y0: f64, y1: f64) -> Result<LawResult> {
    check_resolvent(x, a, b)?;
    if !(a <= y0 && y0 < y1 && y1 <= b) {
        return Err(Error::DomainError(format!("band [{y0}, {y1}] must lie inside [{a}, {b}]")));
    }
    let scale = pctx.phi_qr() / (pctx.q() + pctx.r());
    let wmix = pctx.base().z_mix(pctx.phi_qr());
    let w = |z: f64| scale * wmix.eval(z);
    let wbar = |z: f64| if z <= 0.0 { 0.0 } else { scale * wmix.integral(z) };
    // ∫ W(b−y) dy over the band and ∫ W(x−y) dy over the part of the band below x.
    let first = w(x - a) / w(b - a) * (wbar(b - y0) - wbar(b - y1));
    let second = wbar(x - y0) - wbar(x - y1);
    Ok(LawResult::new(first - second).with("first", first).with("second", second))
}

/// Occupation measure of the process killed at Parisian ruin below `a` and at `τ_b^+`.
///
/// Parisian ruin with Exp(r) delays is killing at rate `q + r·1{X < a}`, so the density is
/// `W_{q,r}(x−a) W^ω(b−a, y−a)/W_{q,r}(b−a) − W^ω(x−a, y−a)` for every `y < b`, where
/// `W^ω(x,y) = W_q(x−y)` for `y ≥ 0` and, for `y < 0 ≤ x`,
/// `W^ω(x,y) = W_q(x−y) + r ∫_y^0 W_q(x−z) W_{q+r}(z−y) dz`.
/// Unlike [`parisian_resolvent`], this charges time spent below `a` to `y < a`.
///
/// With `W_q = Σ w_j e^{ρ_j ·}` and `W_{q+r} = Σ v_k e^{η_k ·}`, the identity
/// `Σ_k v_k/(η_k − ρ_j) = 1/r` collapses the convolution to
/// `W^ω(x,y) = r Σ_k v_k e^{−η_k y} G_k(x)`, `G_k(x) = Σ_j w_j e^{ρ_j x}/(η_k − ρ_j)`.
/// The growing mode `η = Φ_{q+r}` has `G = W_{q,r}/r` and drops out of the density exactly.
pub struct ParisianOccupation<'a> {
    pctx: &'a ParisianContext,
    killed: ScaleContext,
}

impl<'a> ParisianOccupation<'a> {
    pub fn new(pctx: &'a ParisianContext) -> Result<Self> {
        let killed = ScaleContext::build(pctx.model(), pctx.q() + pctx.r())?;
        Ok(Self { pctx, killed })
    }

    fn g(&self, eta: Complex64, x: f64) -> Complex64 {
        self.pctx.base().w_mix().terms.iter().map(|w| w.weight * (w.rate * x).exp() / (eta - w.rate)).sum()
    }

    pub fn density(&self, x: f64, a: f64, b: f64, y: f64) -> Result<LawResult> {
        check_resolvent(x, a, b)?;
        if !(y < b) {
            return Err(Error::DomainError(format!("y = {y} must lie below b = {b}")));
        }
        let ratio = self.pctx.eval_w_qr(x - a, 0) / self.pctx.eval_w_qr(b - a, 0);
        let base = self.pctx.base();
        if y >= a {
            let first = ratio * base.eval_w(b - y, 0);
            let second = base.eval_w(x - y, 0);
            return Ok(LawResult::new(first - second).with("first", first).with("second", second));
        }
        let phi = self.pctx.phi_qr();
        let mut v = Complex64::new(0.0, 0.0);
        for t in &self.killed.w_mix().terms {
            if (t.rate - phi).norm() <= 1e-9 * (1.0 + phi) {
                continue;
            }
            v += t.weight * (-t.rate * (y - a)).exp() * (ratio * self.g(t.rate, b - a) - self.g(t.rate, x - a));
        }
        Ok(LawResult::new(self.pctx.r() * v.re))
    }

    /// `∫_{y0}^{y1}` of the density by adaptive quadrature, split at `a` and `x`.
    pub fn band(&self, x: f64, a: f64, b: f64, y0: f64, y1: f64) -> Result<LawResult> {
        check_resolvent(x, a, b)?;
        if !(y0 < y1 && y1 <= b && y0.is_finite()) {
            return Err(Error::DomainError(format!("band [{y0}, {y1}] must be finite and lie below {b}")));
        }
        let mut cuts = vec![y0];
        cuts.extend([a, x].into_iter().filter(|&c| c > y0 && c < y1));
        cuts.push(y1);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let f = |y: f64| if y >= b { 0.0 } else { self.density(x, a, b, y).map(|l| l.value).unwrap_or(0.0) };
        let mut total = 0.0;
        let mut err = 0.0;
        for w in cuts.windows(2) {
            let qd = integrate(f, w[0], w[1], 1e-13, 1e-12);
            total += qd.value;
            err += qd.error;
        }
        Ok(LawResult::new(total).with("quadrature_error", err))
    }

    /// Mass of the whole measure, integrating down to where the density is below rounding.
    pub fn total(&self, x: f64, a: f64, b: f64) -> Result<LawResult> {
        let m = self.pctx.model();
        let mu = m.active_phases().iter().map(|p| p.rate).fold(self.pctx.phi_qr(), f64::min);
        self.band(x, a, b, a - 60.0 / mu, b)
    }
}

/// `Ω = W_{q,r}'(b)/W_{q,r}(b)`: rate of the exponential law of dividends paid from `b`
/// before Parisian ruin. Also returns the second algebraic form `Φ_{q+r} − r W_q(b)/Z_q(b,Φ_{q+r})`.
pub fn omega(pctx: &ParisianContext, b: f64) -> (f64, f64) {
    let direct = pctx.eval_w_qr(b, 1) / pctx.eval_w_qr(b, 0);
    let alt = pctx.phi_qr() - pctx.r() * pctx.base().eval_w(b, 0) / pctx.eval_w_qr(b, 0);
    (direct, alt)
}

/// `E_x[e^{−qT_0^- + θX(T_0^-) − ϑR(T_0^-)}; T_0^- < ∞]` with dividends at `b` and Parisian ruin:
/// `Z_{q,r}(x,θ) − W_{q,r}(x)(Z_{q,r}'(b,θ) + ϑZ_{q,r}(b,θ))/(W_{q,r}'(b) + ϑW_{q,r}(b))`.
pub fn parisian_dividends_penalty(pctx: &ParisianContext, x: f64, b: f64, theta: f64, vartheta: Theta) -> Result<LawResult> {
    check_interval(x, b)?;
    let t = Theta::Finite(theta);
    let zx = pctx.eval_parisian_z(x, t, 0);
    let wx = pctx.eval_w_qr(x, 0);
    let zb = pctx.eval_parisian_z(b, t, 0);
    let wb = pctx.eval_w_qr(b, 0);
    let ratio = match vartheta {
        Theta::Infinite => zb / wb,
        Theta::Finite(v) => {
            if v < 0.0 {
                return Err(Error::DomainError(format!("vartheta = {v} must be nonnegative")));
            }
            (pctx.eval_parisian_z(b, t, 1) + v * zb) / (pctx.eval_w_qr(b, 1) + v * wb)
        }
    };
    Ok(LawResult::new(zx - wx * ratio).with("Z_qr(x,theta)", zx).with("W_qr(x)", wx).with("ratio", ratio))
}

/// Same law written with classical scale functions:
/// `[Z_q(x,θ) − Z_q(x,Φ') H(b,θ)/H(b,Φ')] r/(r+q−κ(θ))`,
/// `H(b,θ) = (θ+ϑ)Z_q(b,θ) − (κ(θ)−q)W_q(b)`. Singular at `θ = Φ'`.
pub fn parisian_dividends_penalty_h_form(pctx: &ParisianContext, x: f64, b: f64, theta: f64, vartheta: f64) -> Result<LawResult> {
    check_interval(x, b)?;
    let base = pctx.base();
    let m = pctx.model();
    let q = pctx.q();
    let r = pctx.r();
    let phi = pctx.phi_qr();
    let h = |t: f64| (t + vartheta) * base.eval_z(b, t, false) - (m.kappa(t) - q) * base.eval_w(b, 0);
    let gap = r + q - m.kappa(theta);
    if gap.abs() < 1e-8 * (q + r) {
        return Err(Error::DomainError("theta too close to Phi_{q+r} for this form".into()));
    }
    let v = (base.eval_z(x, theta, false) - base.eval_z(x, phi, false) * h(theta) / h(phi)) * r / gap;
    Ok(LawResult::new(v).with("H(b,theta)", h(theta)).with("H(b,Phi)", h(phi)))
}

/// Factorized form at `x = b`:
/// `Ω/(Ω+ϑ) · (Z_q(b,θ) − Ω^{-1}(θZ_q(b,θ) + (q−κ(θ))W_q(b))) · r/(r+q−κ(θ))`.
pub fn parisian_dividends_penalty_factorized(pctx: &ParisianContext, b: f64, theta: f64, vartheta: f64) -> Result<LawResult> {
    check_interval(b, b)?;
    let base = pctx.base();
    let q = pctx.q();
    let r = pctx.r();
    let k = pctx.model().kappa(theta);
    let gap = r + q - k;
    if gap.abs() < 1e-8 * (q + r) {
        return Err(Error::DomainError("theta too close to Phi_{q+r} for this form".into()));
    }
    let (om, _) = omega(pctx, b);
    let zb = base.eval_z(b, theta, false);
    let v = om / (om + vartheta) * (zb - (theta * zb + (q - k) * base.eval_w(b, 0)) / om) * r / gap;
    Ok(LawResult::new(v).with("Omega", om))
}

/// `E_x[e^{−r T_{<0}}]` for the total time `T_{<0}` spent below zero (q = 0 context):
/// `p (Φ_r/r) Z_0(x, Φ_r)`.
pub fn time_in_red(ctx_q0: &ScaleContext, x: f64, r: f64) -> Result<LawResult> {
    if ctx_q0.q() != 0.0 {
        return Err(Error::DomainError(format!("time_in_red needs a q = 0 context, got q = {}", ctx_q0.q())));
    }
    if !(r > 0.0) || !(x >= 0.0) {
        return Err(Error::DomainError(format!("need r > 0 and x >= 0, got r = {r}, x = {x}")));
    }
    let p = ctx_q0.drift();
    if p <= 0.0 {
        return Err(Error::NonpositiveDrift(p));
    }
    let phi_r = ctx_q0.model().phi(r)?;
    let z = ctx_q0.eval_z(x, phi_r, false);
    Ok(LawResult::new(p * phi_r / r * z).with("Phi_r", phi_r).with("Z(x,Phi_r)", z))
}
