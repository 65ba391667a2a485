//! Infinitesimal generator of the model applied to a smooth test function:
//!
//! ```text
//! 𝒢h(x) = (σ²/2) h''(x) + c h'(x) + λ ∫_0^∞ (h(x−y) − h(x)) F(dy)
//! ```
//!
//! The jump integral is computed by adaptive quadrature, split at `y = x` where `h` may
//! switch to its exterior extension.

use crate::levy_model::LevyModel;
use crate::quadrature::integrate;

/// `𝒢h(x)` given `h` on the whole line and the derivatives `h'(x)`, `h''(x)`.
/// `tol` is the absolute tolerance of the jump integral.
pub fn apply_generator(model: &LevyModel, x: f64, h: impl Fn(f64) -> f64, dh: f64, d2h: f64, tol: f64) -> f64 {
    let hx = h(x);
    let mut jump = 0.0;
    let phases = model.active_phases();
    if !phases.is_empty() {
        let mu_min = phases.iter().map(|p| p.rate).fold(f64::INFINITY, f64::min);
        let density = |y: f64| phases.iter().map(|p| p.weight * p.rate * (-p.rate * y).exp()).sum::<f64>();
        let integrand = |y: f64| (h(x - y) - hx) * density(y);
        let upper = x.max(0.0) + 50.0 / mu_min;
        let split = x.clamp(0.0, upper);
        if split > 0.0 {
            jump += integrate(integrand, 0.0, split, 0.5 * tol, 0.0).value;
        }
        jump += integrate(integrand, split, upper, 0.5 * tol, 0.0).value;
    }
    0.5 * model.sigma2 * d2h + model.c * dh + model.lambda * jump
}
