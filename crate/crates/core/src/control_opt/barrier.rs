//! Barrier functions `G(b)` whose maximizer is the optimal dividend barrier, and a
//! grid-plus-golden-section optimizer.

use crate::error::{Error, Result};
use crate::scale_kernel::{build_gerber_shiu, GerberShiu, ParisianContext, Penalty, ScaleContext, Theta};

const GRID_INTERVALS: usize = 1000;
const REFINE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierKind {
    /// `(1 − 𝒮_w'(b))/W_q'(b)`.
    DeFinettiClassic { penalty: Penalty },
    /// `(1 − kZ_q(b))/(qW_q(b))`; differs from the SLG value ratio by the constant `kp/q`.
    SlgClassic { k: f64 },
    /// `(1 − k𝒮'(b))/Z_{q,r}'(b)`.
    SlgParisian { k: f64 },
}

pub enum BarrierFunction<'a> {
    DeFinetti { ctx: &'a ScaleContext, gs: GerberShiu<'a> },
    SlgClassic { ctx: &'a ScaleContext, k: f64 },
    SlgParisian { pctx: &'a ParisianContext, k: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSolution {
    pub b_star: f64,
    pub g_star: f64,
    /// `G'(b*)`; at a boundary optimum this is the right derivative at 0.
    pub dg_star: f64,
    pub is_boundary: bool,
    pub b_max: f64,
    /// `(b, G(b))` on the scan grid.
    pub grid: Vec<(f64, f64)>,
    pub refinement_tol: f64,
}

impl<'a> BarrierFunction<'a> {
    /// The de Finetti and classical SLG kinds need `ctx`; the Parisian kind needs `pctx`.
    pub fn new(kind: BarrierKind, ctx: Option<&'a ScaleContext>, pctx: Option<&'a ParisianContext>) -> Result<Self> {
        let need = |what: &str| Error::DomainError(format!("{what} context required for this barrier kind"));
        match kind {
            BarrierKind::DeFinettiClassic { penalty } => {
                let ctx = ctx.ok_or_else(|| need("classical"))?;
                Ok(Self::DeFinetti { ctx, gs: build_gerber_shiu(ctx, penalty)? })
            }
            BarrierKind::SlgClassic { k } => {
                let ctx = ctx.ok_or_else(|| need("classical"))?;
                if ctx.q() == 0.0 {
                    return Err(Error::QZero("SLG barrier function divides by q"));
                }
                Ok(Self::SlgClassic { ctx, k })
            }
            BarrierKind::SlgParisian { k } => {
                let pctx = pctx.ok_or_else(|| need("Parisian"))?;
                if pctx.q() == 0.0 {
                    return Err(Error::QZero("SLG barrier function divides by q"));
                }
                Ok(Self::SlgParisian { pctx, k })
            }
        }
    }

    fn phi_q(&self) -> f64 {
        match self {
            Self::DeFinetti { ctx, .. } | Self::SlgClassic { ctx, .. } => ctx.phi_q(),
            Self::SlgParisian { pctx, .. } => pctx.phi_q(),
        }
    }

    /// `50/Φ_q`, or 100 when `Φ_q = 0`.
    pub fn default_b_max(&self) -> f64 {
        let p = self.phi_q();
        if p > 0.0 {
            50.0 / p
        } else {
            100.0
        }
    }

    pub fn value(&self, b: f64) -> f64 {
        match self {
            Self::DeFinetti { ctx, gs } => (1.0 - gs.derivative(b, 1)) / ctx.eval_w(b, 1),
            Self::SlgClassic { ctx, k } => {
                if b == 0.0 && ctx.w_at_zero() == 0.0 {
                    // σ > 0: W(0) = 0 and Z(0) = 1, so the ratio blows up unless k = 1,
                    // where it tends to 0.
                    let num = 1.0 - k;
                    return if num == 0.0 { 0.0 } else { num.signum() * f64::INFINITY };
                }
                (1.0 - k * ctx.eval_z0(b, 0)) / (ctx.q() * ctx.eval_w(b, 0))
            }
            Self::SlgParisian { pctx, k } => {
                (1.0 - k * pctx.eval_scripts(b, 1).unwrap()) / pctx.eval_parisian_z(b, Theta::Finite(0.0), 1)
            }
        }
    }

    /// Closed-form `G'(b)`.
    pub fn derivative(&self, b: f64) -> f64 {
        match self {
            Self::DeFinetti { ctx, gs } => {
                let d1 = ctx.eval_w(b, 1);
                let d2 = ctx.eval_w(b, 2);
                (-gs.derivative(b, 2) * d1 - (1.0 - gs.derivative(b, 1)) * d2) / (d1 * d1)
            }
            Self::SlgClassic { ctx, k } => {
                let q = ctx.q();
                let w = ctx.eval_w(b, 0);
                let dw = ctx.eval_w(b, 1);
                (-k * q * w * w - (1.0 - k * ctx.eval_z0(b, 0)) * dw) / (q * w * w)
            }
            Self::SlgParisian { pctx, k } => {
                let d1 = pctx.eval_parisian_z(b, Theta::Finite(0.0), 1);
                let d2 = pctx.eval_parisian_z(b, Theta::Finite(0.0), 2);
                let s1 = pctx.eval_scripts(b, 1).unwrap();
                let s2 = pctx.eval_scripts(b, 2).unwrap();
                (-k * s2 * d1 - (1.0 - k * s1) * d2) / (d1 * d1)
            }
        }
    }
}

/// `G(b)` for the given kind; convenience wrapper over [`BarrierFunction`].
pub fn barrier_function(kind: BarrierKind, ctx: Option<&ScaleContext>, pctx: Option<&ParisianContext>, b: f64) -> Result<f64> {
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::DomainError(format!("barrier level b = {b} must be finite and nonnegative")));
    }
    Ok(BarrierFunction::new(kind, ctx, pctx)?.value(b))
}

fn golden_max(f: &impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - inv * (hi - lo);
    let mut x2 = lo + inv * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Maximizes `G` on `[0, b_max]`: the last global maximum on a 1001-point grid, refined by
/// golden section to `1e-8`. Fails with `TailIncreasing` if `G` still increases at `b_max`.
pub fn optimize_barrier(g: &BarrierFunction, b_max: Option<f64>) -> Result<BarrierSolution> {
    let b_max = b_max.unwrap_or_else(|| g.default_b_max());
    if !(b_max > 0.0 && b_max.is_finite()) {
        return Err(Error::DomainError(format!("b_max = {b_max} must be positive")));
    }
    let h = b_max / GRID_INTERVALS as f64;
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    let mut grid = Vec::with_capacity(GRID_INTERVALS + 1);
    for i in 0..=GRID_INTERVALS {
        let b = i as f64 * h;
        let v = g.value(b);
        if v.is_nan() {
            return Err(Error::DomainError(format!("barrier function is NaN at b = {b}")));
        }
        if v >= best_val {
            best = i;
            best_val = v;
        }
        grid.push((b, v));
    }
    let f = |b: f64| g.value(b);
    let solution = |b_star: f64, is_boundary: bool, grid: Vec<(f64, f64)>| BarrierSolution {
        b_star,
        g_star: g.value(b_star),
        dg_star: g.derivative(b_star),
        is_boundary,
        b_max,
        grid,
        refinement_tol: REFINE_TOL,
    };
    let b_ref = if best == GRID_INTERVALS {
        if g.derivative(b_max) > 0.0 {
            return Err(Error::TailIncreasing { b_max });
        }
        golden_max(&f, b_max - h, b_max, REFINE_TOL)
    } else if best == 0 {
        if !(g.derivative(0.0) > 0.0) {
            return Ok(solution(0.0, true, grid));
        }
        golden_max(&f, 0.0, h, REFINE_TOL)
    } else {
        golden_max(&f, (best - 1) as f64 * h, (best + 1) as f64 * h, REFINE_TOL)
    };
    if b_ref < REFINE_TOL || g.value(0.0) > g.value(b_ref) {
        return Ok(solution(0.0, true, grid));
    }
    Ok(solution(b_ref, false, grid))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_model::{catalog, LevyModel};

    #[test]
    fn closed_form_derivatives_match_differences() {
        let m = catalog("m4").unwrap();
        let ctx = ScaleContext::build(&m, 0.2).unwrap();
        let pctx = ParisianContext::build(&m, 0.2, 0.5).unwrap();
        let kinds = [
            BarrierKind::DeFinettiClassic { penalty: Penalty::Linear { k: 0.5, big_k: 0.1 } },
            BarrierKind::SlgClassic { k: 2.0 },
            BarrierKind::SlgParisian { k: 2.0 },
        ];
        for kind in kinds {
            let g = BarrierFunction::new(kind, Some(&ctx), Some(&pctx)).unwrap();
            for &b in &[0.3, 1.0, 2.5] {
                let h = 1e-5;
                let fd = (g.value(b + h) - g.value(b - h)) / (2.0 * h);
                assert!((fd - g.derivative(b)).abs() < 1e-6 * (1.0 + fd.abs()), "{kind:?} b={b}");
            }
        }
    }

    #[test]
    fn de_finetti_interior_optimum() {
        let ctx = ScaleContext::build(&catalog("m1").unwrap(), 0.1).unwrap();
        let g = BarrierFunction::new(BarrierKind::DeFinettiClassic { penalty: Penalty::Constant { big_k: 0.0 } }, Some(&ctx), None)
            .unwrap();
        let s = optimize_barrier(&g, None).unwrap();
        assert!(!s.is_boundary && s.b_star > 0.0);
        // W''(b*) = 0 at the optimum of 1/W'.
        assert!(ctx.eval_w(s.b_star, 2).abs() < 1e-6);
        assert!(s.dg_star.abs() < 1e-6);
    }

    #[test]
    fn zero_barrier_when_drift_dominates() {
        // With q large relative to λ the premium rate is best paid out at once.
        let ctx = ScaleContext::build(&catalog("m1").unwrap(), 1.0).unwrap();
        let g = BarrierFunction::new(BarrierKind::DeFinettiClassic { penalty: Penalty::Constant { big_k: 0.0 } }, Some(&ctx), None)
            .unwrap();
        let s = optimize_barrier(&g, None).unwrap();
        assert!(s.is_boundary && s.b_star == 0.0);
        assert!(s.dg_star <= REFINE_TOL);
    }

    #[test]
    fn slg_classic_threshold() {
        // σ = 0: b* = 0 exactly when k <= 1 + q/λ.
        let m = LevyModel::cramer_lundberg(1.5, 1.0, 1.0).unwrap();
        let ctx = ScaleContext::build(&m, 0.2).unwrap();
        for &(k, zero) in &[(1.1, true), (1.19, true), (1.25, false), (3.0, false)] {
            let g = BarrierFunction::new(BarrierKind::SlgClassic { k }, Some(&ctx), None).unwrap();
            let s = optimize_barrier(&g, None).unwrap();
            assert_eq!(s.is_boundary, zero, "k = {k}, b* = {}", s.b_star);
        }
    }

    #[test]
    fn slg_classic_gaussian_at_zero() {
        let ctx = ScaleContext::build(&catalog("m3").unwrap(), 0.3).unwrap();
        let g = |k| BarrierFunction::new(BarrierKind::SlgClassic { k }, Some(&ctx), None).unwrap().value(0.0);
        assert_eq!(g(0.5), f64::INFINITY);
        assert_eq!(g(2.0), f64::NEG_INFINITY);
        assert_eq!(g(1.0), 0.0);
    }

    #[test]
    fn tail_increasing_is_reported() {
        let ctx = ScaleContext::build(&catalog("m1").unwrap(), 0.1).unwrap();
        let g = BarrierFunction::new(BarrierKind::DeFinettiClassic { penalty: Penalty::Constant { big_k: 0.0 } }, Some(&ctx), None)
            .unwrap();
        let s = optimize_barrier(&g, None).unwrap();
        assert!(matches!(optimize_barrier(&g, Some(0.5 * s.b_star)), Err(Error::TailIncreasing { .. })));
    }

    #[test]
    fn parisian_value_at_zero_barrier() {
        let pctx = ParisianContext::build(&catalog("m1").unwrap(), 1.0 / 3.0, 1.0 / 3.0).unwrap();
        for &k in &[1.0, 2.0, 4.0, 6.0] {
            let g = BarrierFunction::new(BarrierKind::SlgParisian { k }, None, Some(&pctx)).unwrap();
            let (q, r, p) = (pctx.q(), pctx.r(), pctx.phi_qr());
            assert!((g.value(0.0) - (q + r - k * r) / (q * p)).abs() < 1e-13);
        }
    }
}
