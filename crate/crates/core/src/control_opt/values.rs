//! Value functions of barrier dividend strategies with classical or Parisian bailouts.

use crate::error::{Error, Result};
use crate::scale_kernel::{build_gerber_shiu, ParisianContext, Penalty, ScaleContext, Theta};

fn check_interval(x: f64, b: f64) -> Result<()> {
    if !(x.is_finite() && b.is_finite()) || x < 0.0 || x > b {
        return Err(Error::DomainError(format!("need 0 <= x <= b, got x = {x}, b = {b}")));
    }
    Ok(())
}

fn require_q(q: f64, what: &'static str) -> Result<()> {
    if q == 0.0 {
        return Err(Error::QZero(what));
    }
    Ok(())
}

/// Expected discounted dividends at barrier `b` until classical ruin: `W_q(x)/W_q'(b)`.
pub fn vf_dividends_classic(ctx: &ScaleContext, x: f64, b: f64) -> Result<f64> {
    check_interval(x, b)?;
    Ok(ctx.eval_w(x, 0) / ctx.eval_w(b, 1))
}

/// Dividends until ruin plus the terminal penalty `w(X(τ_0^-))`:
/// `𝒮_w(x) + W_q(x)(1 − 𝒮_w'(b))/W_q'(b)` on `[0, b]`, and `x − b + V(b)` above `b`.
pub fn value_definetti(ctx: &ScaleContext, x: f64, b: f64, penalty: Penalty) -> Result<f64> {
    if !(x >= 0.0 && b >= 0.0) {
        return Err(Error::DomainError(format!("need x, b >= 0, got x = {x}, b = {b}")));
    }
    let gs = build_gerber_shiu(ctx, penalty)?;
    let g = (1.0 - gs.derivative(b, 1)) / ctx.eval_w(b, 1);
    if x > b {
        return Ok(x - b + gs.value(b) + ctx.eval_w(b, 0) * g);
    }
    Ok(gs.value(x) + ctx.eval_w(x, 0) * g)
}

/// The linear-penalty de Finetti value assembled directly from `Z_{1,q}` and `Z_q`
/// (no Gerber–Shiu object): `kZ_1(x) + KZ(x) + W(x)(1 − kZ_1'(b) − KqW(b))/W'(b)`.
pub fn value_definetti_linear(ctx: &ScaleContext, x: f64, b: f64, k: f64, big_k: f64) -> Result<f64> {
    check_interval(x, b)?;
    let p = ctx.drift();
    let q = ctx.q();
    let z1x = ctx.eval_zbar(x) - p * ctx.eval_wbar(x);
    let zx = 1.0 + q * ctx.eval_wbar(x);
    let dz1b = 1.0 + q * ctx.eval_wbar(b) - p * ctx.eval_w(b, 0);
    let dzb = q * ctx.eval_w(b, 0);
    Ok(k * z1x + big_k * zx + ctx.eval_w(x, 0) * (1.0 - k * dz1b - big_k * dzb) / ctx.eval_w(b, 1))
}

/// Doubly reflected process (dividends at `b`, classical bailouts at 0), infinite horizon.
/// Returns `(dividends, bailouts)`:
/// dividends `Z_q(x)/(qW_q(b))`, bailouts `Z_q(x)Z_{1,q}'(b)/(qW_q(b)) − Z_{1,q}(x)`.
pub fn slg_classic_parts(ctx: &ScaleContext, x: f64, b: f64) -> Result<(f64, f64)> {
    check_interval(x, b)?;
    let q = ctx.q();
    require_q(q, "discounted infinite-horizon dividends diverge")?;
    let zx = ctx.eval_z0(x, 0);
    let dzb = q * ctx.eval_w(b, 0);
    let div = zx / dzb;
    let bail = zx * ctx.eval_z1(b, 1) / dzb - ctx.eval_z1(x, 0);
    Ok((div, bail))
}

/// SLG objective with classical bailouts: dividends minus `k` times bailouts.
pub fn value_slg_classic(ctx: &ScaleContext, x: f64, b: f64, k: f64) -> Result<f64> {
    let (div, bail) = slg_classic_parts(ctx, x, b)?;
    Ok(div - k * bail)
}

/// Components of the Parisian value functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParisianPart {
    /// Dividends at `b` until Parisian ruin: `W_{q,r}(x)/W_{q,r}'(b)`.
    VfDiv,
    /// Parisian bailouts until `τ_b^+`: `Z_{q,r}(x)𝒮(b)/Z_{q,r}(b) − 𝒮(x)`.
    VfBail,
    /// Dividends with Parisian reflection at 0, infinite horizon: `Z_{q,r}(x)/Z_{q,r}'(b)`.
    VsDiv,
    /// Dividends until cumulative bailouts exceed an Exp(θ) level: `Z_{q,r}(x,θ)/Z_{q,r}'(b,θ)`.
    VsDivTheta(f64),
    /// Parisian bailouts with dividends at `b`, infinite horizon: `Z_{q,r}(x)𝒮'(b)/Z_{q,r}'(b) − 𝒮(x)`.
    VsBail,
}

pub fn value_parisian(pctx: &ParisianContext, x: f64, b: f64, part: ParisianPart) -> Result<f64> {
    check_interval(x, b)?;
    let z = |y: f64, k: u32| pctx.eval_parisian_z(y, Theta::Finite(0.0), k);
    match part {
        ParisianPart::VfDiv => Ok(pctx.eval_w_qr(x, 0) / pctx.eval_w_qr(b, 1)),
        ParisianPart::VfBail => Ok(z(x, 0) * pctx.eval_scripts(b, 0)? / z(b, 0) - pctx.eval_scripts(x, 0)?),
        ParisianPart::VsDiv => {
            require_q(pctx.q(), "discounted infinite-horizon dividends diverge")?;
            Ok(z(x, 0) / z(b, 1))
        }
        ParisianPart::VsDivTheta(t) => {
            let th = Theta::Finite(t);
            Ok(pctx.eval_parisian_z(x, th, 0) / pctx.eval_parisian_z(b, th, 1))
        }
        ParisianPart::VsBail => Ok(z(x, 0) * pctx.eval_scripts(b, 1)? / z(b, 1) - pctx.eval_scripts(x, 0)?),
    }
}

/// SLG value with Parisian bailouts at proportional cost `k`:
/// `k𝒮(x) + Z_{q,r}(x)(1 − k𝒮'(b))/Z_{q,r}'(b)`.
pub fn slg_parisian_value(pctx: &ParisianContext, x: f64, b: f64, k: f64) -> Result<f64> {
    check_interval(x, b)?;
    if k < 0.0 {
        return Err(Error::DomainError(format!("bailout cost k = {k} must be nonnegative")));
    }
    let s = pctx.eval_scripts(x, 0)?;
    let ds = pctx.eval_scripts(b, 1)?;
    let z = pctx.eval_parisian_z(x, Theta::Finite(0.0), 0);
    let dz = pctx.eval_parisian_z(b, Theta::Finite(0.0), 1);
    Ok(k * s + z * (1.0 - k * ds) / dz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::catalog;

    fn ctx(name: &str, q: f64) -> ScaleContext {
        ScaleContext::build(&catalog(name).unwrap(), q).unwrap()
    }
    fn pctx(name: &str, q: f64, r: f64) -> ParisianContext {
        ParisianContext::build(&catalog(name).unwrap(), q, r).unwrap()
    }

    #[test]
    fn vf_dividends_examples() {
        let c = ctx("m2", 1.0);
        for &(x, b) in &[(0.0, 1.0), (0.5, 1.0), (1.3, 2.0)] {
            let v = vf_dividends_classic(&c, x, b).unwrap();
            assert!((v - f64::sinh(x) / f64::cosh(b)).abs() < 1e-13);
        }
        let c = ctx("m1", 2.0 / 3.0);
        let v = vf_dividends_classic(&c, 1.0, 1.0).unwrap();
        let w1 = 9.0 / 7.0 * 1f64.exp() - 2.0 / 7.0 * (-4.0f64 / 3.0).exp();
        let dw1 = 9.0 / 7.0 * 1f64.exp() + 8.0 / 21.0 * (-4.0f64 / 3.0).exp();
        assert!((v - w1 / dw1).abs() < 1e-13);
    }

    #[test]
    fn definetti_reductions() {
        let c = ctx("m4", 0.3);
        let zero = Penalty::Constant { big_k: 0.0 };
        for &x in &[0.0, 0.4, 1.0] {
            let a = value_definetti(&c, x, 1.0, zero).unwrap();
            assert!((a - vf_dividends_classic(&c, x, 1.0).unwrap()).abs() < 1e-14);
        }
        let vb = value_definetti(&c, 1.0, 1.0, zero).unwrap();
        let vx = value_definetti(&c, 2.7, 1.0, zero).unwrap();
        assert!((vx - vb - 1.7).abs() < 1e-13);
    }

    #[test]
    fn definetti_linear_two_assemblies() {
        for name in ["m1", "m3", "m4"] {
            let c = ctx(name, 0.25);
            for &(k, kk) in &[(1.0, 0.0), (0.5, -0.3), (2.0, 0.7)] {
                for &x in &[0.0, 0.6, 1.5] {
                    let a = value_definetti(&c, x, 1.5, Penalty::Linear { k, big_k: kk }).unwrap();
                    let d = value_definetti_linear(&c, x, 1.5, k, kk).unwrap();
                    assert!((a - d).abs() < 1e-12 * (1.0 + a.abs()), "{name} k={k} K={kk} x={x}");
                }
            }
        }
    }

    #[test]
    fn slg_classic_examples() {
        let c = ctx("m3", 0.5);
        let (d, _) = slg_classic_parts(&c, 0.7, 1.5).unwrap();
        assert!((value_slg_classic(&c, 0.7, 1.5, 0.0).unwrap() - d).abs() < 1e-15);
        assert!((d - c.eval_z0(0.7, 0) / (0.5 * c.eval_w(1.5, 0))).abs() < 1e-14);
        let v = value_slg_classic(&c, 0.0, 1.5, 0.0).unwrap();
        assert!((v - 1.0 / (0.5 * c.eval_w(1.5, 0))).abs() < 1e-13);
        assert!(matches!(value_slg_classic(&ctx("m1", 0.0), 0.0, 1.0, 1.0), Err(Error::QZero(_))));
    }

    #[test]
    fn slg_classic_boundary_conditions() {
        // With σ > 0 the bailout value has slope −1 at 0 and 0 at b; dividends have slope 1 at b.
        let c = ctx("m3", 0.4);
        let b = 1.2;
        let h = 1e-5;
        let d = |x: f64, i: usize| {
            let f = |y| {
                let (dv, bl) = slg_classic_parts(&c, y, b).unwrap();
                [dv, bl][i]
            };
            if x == 0.0 {
                (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h)
            } else {
                (3.0 * f(b) - 4.0 * f(b - h) + f(b - 2.0 * h)) / (2.0 * h)
            }
        };
        assert!((d(0.0, 1) + 1.0).abs() < 1e-6);
        assert!(d(b, 1).abs() < 1e-6);
        assert!((d(b, 0) - 1.0).abs() < 1e-6);
        assert!(slg_classic_parts(&c, 0.3, b).unwrap().1 > 0.0);
    }

    #[test]
    fn parisian_parts() {
        let p = pctx("m1", 2.0 / 3.0, 1.0 / 3.0);
        let a = value_parisian(&p, 0.5, 1.5, ParisianPart::VsDivTheta(0.0)).unwrap();
        let b = value_parisian(&p, 0.5, 1.5, ParisianPart::VsDiv).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(value_parisian(&p, 1.5, 1.5, ParisianPart::VfBail).unwrap().abs() < 1e-14);
        let p2 = pctx("m2", 1.0, 3.0);
        assert!(p2.eval_scripts(0.0, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn slg_parisian_equals_parts() {
        for name in ["m1", "m3", "m4"] {
            let p = pctx(name, 1.0 / 3.0, 1.0 / 3.0);
            for &k in &[0.0, 1.0, 2.0, 5.0] {
                for &x in &[0.0, 0.5, 1.0] {
                    let v = slg_parisian_value(&p, x, 1.0, k).unwrap();
                    let d = value_parisian(&p, x, 1.0, ParisianPart::VsDiv).unwrap();
                    let bl = value_parisian(&p, x, 1.0, ParisianPart::VsBail).unwrap();
                    assert!((v - (d - k * bl)).abs() < 1e-10 * (1.0 + v.abs()), "{name} k={k} x={x}");
                }
            }
        }
    }
}
