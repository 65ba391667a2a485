//! Pairs each simulated functional with the closed-form law it should reproduce.

use serde::Serialize;

use crate::control_opt::{slg_parisian_value, value_parisian, value_slg_classic, vf_dividends_classic, ParisianPart};
use crate::error::{Error, Result};
use crate::levy_model::LevyModel;
use crate::mc_oracle::{estimate, Functional, Lower, MCEstimate, PathConfig, Upper};
use crate::passage_laws::{
    bailouts_to_level, dividends_penalty_classic, parisian_dividends_penalty, parisian_severity,
    parisian_up_exit, severity_absorbed, severity_infinite, severity_reflected, time_in_red, two_sided_exit, InfiniteMode, ParisianOccupation,
};
use crate::scale_kernel::{ParisianContext, ScaleContext, Theta};

pub const CHECK_NAMES: [&str; 16] = [
    "two_sided",
    "severity_absorbed",
    "severity_reflected",
    "severity_infinite",
    "bailouts_to_level",
    "dividends_penalty",
    "vf_dividends",
    "slg_classic",
    "parisian_up_exit",
    "parisian_severity",
    "parisian_dividends_penalty",
    "parisian_occupation_band",
    "parisian_vf_dividends",
    "parisian_vf_bailouts",
    "slg_parisian",
    "time_in_red",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckParams {
    pub q: f64,
    pub r: f64,
    pub x: f64,
    pub b: f64,
    pub theta: Theta,
    pub vartheta: Theta,
    pub k: f64,
    /// Occupation band `[lo, hi]` for `parisian_occupation_band`; may extend below 0.
    pub band: (f64, f64),
}

impl Default for CheckParams {
    fn default() -> Self {
        Self {
            q: 0.0,
            r: 1.0,
            x: 1.0,
            b: 2.0,
            theta: Theta::Finite(0.0),
            vartheta: Theta::Finite(0.0),
            k: 1.0,
            band: (0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCheck {
    pub config: PathConfig,
    pub functional: Functional,
    pub analytic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheckResult {
    pub mc: MCEstimate,
    pub analytic: f64,
    /// `(mean − analytic)/std_error`.
    pub z_score: f64,
}

fn finite(t: Theta, what: &str) -> Result<f64> {
    match t {
        Theta::Finite(v) => Ok(v),
        Theta::Infinite => Err(Error::DomainError(format!("{what} must be finite for this check"))),
    }
}

pub fn build_crosscheck(model: &LevyModel, name: &str, p: &CheckParams) -> Result<CrossCheck> {
    let cfg = |upper, lower| PathConfig { x0: p.x, q: p.q, upper, lower, horizon: None };
    let ctx = || ScaleContext::build(model, p.q);
    let pctx = || ParisianContext::build(model, p.q, p.r);
    let (b, r) = (p.b, p.r);
    let (config, functional, analytic) = match name {
        "two_sided" => (
            cfg(Upper::Exit(b), Lower::ClassicalAbsorb),
            Functional::UpExit { theta: Theta::Finite(0.0) },
            two_sided_exit(&ctx()?, p.x, 0.0, b)?.value,
        ),
        "severity_absorbed" => {
            let th = finite(p.theta, "theta")?;
            (cfg(Upper::Exit(b), Lower::ClassicalAbsorb), Functional::Severity { theta: th }, severity_absorbed(&ctx()?, p.x, b, th)?.value)
        }
        "severity_reflected" => {
            let th = finite(p.theta, "theta")?;
            (cfg(Upper::Reflect(b), Lower::ClassicalAbsorb), Functional::Severity { theta: th }, severity_reflected(&ctx()?, p.x, b, th)?.value)
        }
        "severity_infinite" => {
            let th = finite(p.theta, "theta")?;
            (
                cfg(Upper::None, Lower::ClassicalAbsorb),
                Functional::Severity { theta: th },
                severity_infinite(&ctx()?, p.x, th, InfiniteMode::Ruin)?.value,
            )
        }
        "bailouts_to_level" => (
            cfg(Upper::Exit(b), Lower::ClassicalReflect),
            Functional::UpExit { theta: p.theta },
            bailouts_to_level(&ctx()?, p.x, b, p.theta)?.value,
        ),
        "dividends_penalty" => {
            let th = finite(p.theta, "theta")?;
            (
                cfg(Upper::Reflect(b), Lower::ClassicalAbsorb),
                Functional::Joint { theta: th, vartheta: p.vartheta },
                dividends_penalty_classic(&ctx()?, p.x, b, th, p.vartheta)?.value,
            )
        }
        "vf_dividends" => {
            (cfg(Upper::Reflect(b), Lower::ClassicalAbsorb), Functional::Dividends, vf_dividends_classic(&ctx()?, p.x, b)?)
        }
        "slg_classic" => (
            cfg(Upper::Reflect(b), Lower::ClassicalReflect),
            Functional::DividendsMinusBailouts { k: p.k },
            value_slg_classic(&ctx()?, p.x, b, p.k)?,
        ),
        "parisian_up_exit" => {
            // θ = ∞ keeps only paths with no injection, i.e. Parisian absorption.
            let lower = if p.theta == Theta::Infinite { Lower::ParisianAbsorb(r) } else { Lower::ParisianReflect(r) };
            (cfg(Upper::Exit(b), lower), Functional::UpExit { theta: p.theta }, parisian_up_exit(&pctx()?, p.x, b, p.theta)?.value)
        }
        "parisian_severity" => {
            let th = finite(p.theta, "theta")?;
            (
                cfg(Upper::Exit(b), Lower::ParisianAbsorb(r)),
                Functional::Severity { theta: th },
                parisian_severity(&pctx()?, p.x, b, th)?.value,
            )
        }
        "parisian_dividends_penalty" => {
            let th = finite(p.theta, "theta")?;
            (
                cfg(Upper::Reflect(b), Lower::ParisianAbsorb(r)),
                Functional::Joint { theta: th, vartheta: p.vartheta },
                parisian_dividends_penalty(&pctx()?, p.x, b, th, p.vartheta)?.value,
            )
        }
        "parisian_occupation_band" => {
            let (lo, hi) = p.band;
            (
                cfg(Upper::Exit(b), Lower::ParisianAbsorb(r)),
                Functional::Occupation { lo, hi },
                ParisianOccupation::new(&pctx()?)?.band(p.x, 0.0, b, lo, hi)?.value,
            )
        }
        "parisian_vf_dividends" => (
            cfg(Upper::Reflect(b), Lower::ParisianAbsorb(r)),
            Functional::Dividends,
            value_parisian(&pctx()?, p.x, b, ParisianPart::VfDiv)?,
        ),
        "parisian_vf_bailouts" => (
            cfg(Upper::Exit(b), Lower::ParisianReflect(r)),
            Functional::Bailouts,
            value_parisian(&pctx()?, p.x, b, ParisianPart::VfBail)?,
        ),
        "slg_parisian" => (
            cfg(Upper::Reflect(b), Lower::ParisianReflect(r)),
            Functional::DividendsMinusBailouts { k: p.k },
            slg_parisian_value(&pctx()?, p.x, b, p.k)?,
        ),
        "time_in_red" => {
            let ctx0 = ScaleContext::build(model, 0.0)?;
            (
                PathConfig { x0: p.x, q: 0.0, upper: Upper::None, lower: Lower::None, horizon: None },
                Functional::TimeInRed { r },
                time_in_red(&ctx0, p.x, r)?.value,
            )
        }
        other => {
            return Err(Error::DomainError(format!("unknown check `{other}`; expected one of: {}", CHECK_NAMES.join(", "))));
        }
    };
    Ok(CrossCheck { config, functional, analytic })
}

/// Builds the check and runs `n_paths` simulations.
pub fn run_crosscheck(model: &LevyModel, name: &str, p: &CheckParams, n_paths: usize, seed: u64) -> Result<CrossCheckResult> {
    let cc = build_crosscheck(model, name, p)?;
    let mc = estimate(model, &cc.config, cc.functional, n_paths, seed)?;
    let z_score = if mc.std_error > 0.0 {
        (mc.mean - cc.analytic) / mc.std_error
    } else if (mc.mean - cc.analytic).abs() <= 1e-12 * (1.0 + cc.analytic.abs()) {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(CrossCheckResult { mc, analytic: cc.analytic, z_score })
}
