//! Efficiency of zero-barrier payout under Parisian bailouts.
//!
//! Paying dividends at `b = 0` is optimal (G'(0+) <= 0) iff `k <= k(q,r)` where
//!
//! ```text
//! k(q,r) = (1 + q/r) (Φ_{q+r} − r W_q(0+)) / (Φ_{q+r} − (q+r) W_q(0+))
//! ```

use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::scale_kernel::ParisianContext;

fn check_rates(q: f64, r: f64) -> Result<()> {
    if !(q >= 0.0 && q.is_finite()) || !(r > 0.0 && r.is_finite()) {
        return Err(Error::DomainError(format!("need q >= 0 and r > 0, got q = {q}, r = {r}")));
    }
    Ok(())
}

/// `k(q,r)` from `Φ_{q+r}` and `W_q(0+)` only; no root set is needed.
/// Returns `+∞` when `Φ_{q+r} <= (q+r)W_q(0+)` (e.g. pure drift).
pub fn efficiency_threshold(model: &LevyModel, q: f64, r: f64) -> Result<f64> {
    check_rates(q, r)?;
    model.validate()?;
    let p = model.phi(q + r)?;
    let w0 = if model.has_gaussian() { 0.0 } else { 1.0 / model.c };
    let den = p - (q + r) * w0;
    if den <= 1e-14 * p.max(1.0) {
        return Ok(f64::INFINITY);
    }
    Ok((1.0 + q / r) * (p - r * w0) / den)
}

pub fn efficiency_index(pctx: &ParisianContext) -> Result<f64> {
    efficiency_threshold(pctx.model(), pctx.q(), pctx.r())
}

/// `k <= k(q,r)` up to a relative tolerance of `1e-12`.
pub fn is_efficient(pctx: &ParisianContext, k: f64) -> Result<bool> {
    let kk = efficiency_index(pctx)?;
    Ok(k <= kk * (1.0 + 1e-12))
}

/// Smallest extra discount `q' >= 0` making cost `k` efficient: `k(q + q', r) >= k`.
/// Zero when `k` is already efficient. Bisection on the increasing map `q ↦ k(q,r)`.
pub fn solve_patience(model: &LevyModel, q: f64, r: f64, k: f64) -> Result<f64> {
    check_rates(q, r)?;
    if !(k.is_finite()) {
        return Err(Error::DomainError(format!("bailout cost k = {k} must be finite")));
    }
    let f = |extra: f64| efficiency_threshold(model, q + extra, r).map(|v| v - k);
    if f(0.0)? >= -1e-12 * k.abs() {
        return Ok(0.0);
    }
    let cap = 2f64.powi(60) * q.max(r);
    let mut lo = 0.0;
    let mut hi = q.max(r).max(1e-8);
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Err(Error::NoSolution(format!("k({q} + q', {r}) stays below {k} up to q' = {cap:e}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.max(1e-300) {
            break;
        }
    }
    Ok(hi)
}
