//! Exact event-driven simulation of the compound Poisson risk process (σ = 0) with
//! barriers, classical or Poisson-observed ruin/reflection, and discounted accounting.
//!
//! Between claims the path is linear with slope `c`, so barrier hits, time in the red,
//! band occupation and discounted premium integrals are computed in closed form. The
//! only discretization is the truncation horizon (or escape level), whose bias is
//! reported as `tail_bound`.
//!
//! Path `i` uses `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, so results do not
//! depend on the number of worker threads. Set `PARISIAN_SCALE_THREADS` to bound them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::levy_model::{LevyModel, Phase};
use crate::scale_kernel::Theta;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Upper {
    None,
    /// Stop at the first passage above `b`.
    Exit(f64),
    /// Pay everything above `b` as dividends.
    Reflect(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lower {
    None,
    ClassicalAbsorb,
    ClassicalReflect,
    /// Ruin if the process is negative at an observation time of a Poisson(r) clock.
    ParisianAbsorb(f64),
    /// Inject capital back to 0 at observation times where the process is negative.
    ParisianReflect(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathConfig {
    pub x0: f64,
    pub q: f64,
    pub upper: Upper,
    pub lower: Lower,
    /// Truncation time. `None` picks `(40 + ln(1 + x0 + b))/q` when `q > 0`.
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    /// `e^{−qτ_b^+ − θ R_*(τ_b^+)}` on `{τ_b^+ < ruin}`; `θ = ∞` keeps paths with no injection.
    UpExit { theta: Theta },
    /// `e^{−qτ + θX(τ)}` at ruin.
    Severity { theta: f64 },
    /// `∫ e^{−qt} dR`.
    Dividends,
    /// `∫ e^{−qt} dR_*`.
    Bailouts,
    DividendsMinusBailouts { k: f64 },
    /// `e^{−r ∫ 1{X < 0} dt}` with `q = 0`.
    TimeInRed { r: f64 },
    /// `e^{−qτ + θX(τ) − ϑR(τ)}` at ruin, `R` undiscounted.
    Joint { theta: f64, vartheta: Theta },
    /// `∫ e^{−qt} 1{lo <= X(t) <= hi} dt`.
    Occupation { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum StopCause {
    UpExit,
    Ruin,
    Horizon,
    /// Reached the escape level used to truncate undiscounted transforms.
    Escape,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PathEvent {
    Claim { t: f64, size: f64, level: f64 },
    Observation { t: f64, level: f64 },
    Injection { t: f64, amount: f64 },
    Dividend { t: f64, amount: f64 },
    Stop { t: f64, cause: StopCause, level: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct PathSummary {
    pub stop_time: f64,
    pub cause: Option<StopCause>,
    pub level: f64,
    pub discount_at_stop: f64,
    pub dividends: f64,
    pub disc_dividends: f64,
    pub injections: f64,
    pub disc_injections: f64,
    pub claims: f64,
    pub premium: f64,
    pub red_time: f64,
    pub occupation: f64,
    pub n_claims: u64,
    pub n_observations: u64,
}

impl PathSummary {
    /// `x0 + premium − claims + injections − dividends − level`; zero up to rounding.
    pub fn balance_residual(&self, x0: f64) -> f64 {
        x0 + self.premium - self.claims + self.injections - self.dividends - self.level
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub summary: PathSummary,
    pub events: Vec<PathEvent>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub ci95: [f64; 2],
    /// Bound on the truncation bias.
    pub tail_bound: f64,
}

impl MCEstimate {
    /// `|mean − target| <= z·SE + tail_bound`.
    pub fn agrees_with(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.std_error + self.tail_bound
    }
}

/// The RNG for path `index` of a run seeded with `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub(crate) fn exp_time(rng: &mut impl Rng, rate: f64) -> f64 {
    if rate <= 0.0 {
        return f64::INFINITY;
    }
    let e: f64 = rng.sample(Exp1);
    e / rate
}

pub(crate) fn claim_size(rng: &mut impl Rng, phases: &[Phase]) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut rate = phases[phases.len() - 1].rate;
    for ph in phases {
        acc += ph.weight;
        if u < acc {
            rate = ph.rate;
            break;
        }
    }
    exp_time(rng, rate)
}

/// `∫_{t1}^{t2} e^{−qt} dt`.
pub(crate) fn disc_int(q: f64, t1: f64, t2: f64) -> f64 {
    if q == 0.0 {
        return t2 - t1;
    }
    (-q * t1).exp() * -(-q * (t2 - t1)).exp_m1() / q
}

/// Pairwise summation over an ordered slice.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

pub(crate) fn summarize(values: &[f64], tail_bound: f64) -> MCEstimate {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if n > 1 { pairwise_sum(&dev) / (n - 1) as f64 } else { 0.0 };
    let se = (var / n as f64).sqrt();
    MCEstimate { mean, std_error: se, n_paths: n, ci95: [mean - 1.96 * se, mean + 1.96 * se], tail_bound }
}

/// Runs `f` on a pool limited by `PARISIAN_SCALE_THREADS` when that variable is set.
pub(crate) fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match std::env::var("PARISIAN_SCALE_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}

fn barrier_level(u: Upper) -> f64 {
    match u {
        Upper::Exit(b) | Upper::Reflect(b) => b,
        Upper::None => 0.0,
    }
}

/// Resolved truncation: horizon time and an optional escape level.
#[derive(Debug, Clone, Copy)]
struct Truncation {
    horizon: f64,
    escape: Option<f64>,
    tail_bound: f64,
}

fn truncation(model: &LevyModel, cfg: &PathConfig, functional: Option<Functional>) -> Result<Truncation> {
    let q = cfg.q;
    let b = barrier_level(cfg.upper).max(0.0);
    let bounded = matches!(
        functional,
        Some(Functional::UpExit { .. } | Functional::Severity { .. } | Functional::Joint { .. } | Functional::TimeInRed { .. })
    );
    let per_unit = match functional {
        Some(Functional::Dividends) => model.c / q,
        Some(Functional::Bailouts) => (model.c + model.lambda * model.mean_claim()) / q,
        Some(Functional::DividendsMinusBailouts { k }) => (model.c + k.abs() * model.lambda * model.mean_claim()) / q,
        Some(Functional::Occupation { .. }) => 1.0 / q,
        _ => 1.0,
    };
    if let Some(t) = cfg.horizon {
        if !(t > 0.0) {
            return Err(Error::DomainError(format!("horizon = {t} must be positive")));
        }
        let tail = if q > 0.0 { (-q * t).exp() * per_unit } else { f64::INFINITY };
        return Ok(Truncation { horizon: t, escape: None, tail_bound: tail });
    }
    if q > 0.0 {
        let t = (40.0 + (1.0 + cfg.x0.max(0.0) + b).ln()) / q;
        return Ok(Truncation { horizon: t, escape: None, tail_bound: (-q * t).exp() * per_unit });
    }
    if matches!(cfg.upper, Upper::Exit(_)) {
        return Ok(Truncation { horizon: f64::INFINITY, escape: None, tail_bound: 0.0 });
    }
    if cfg.upper == Upper::None && bounded {
        // Beyond 40/R the chance of ever going negative again is below e^{−40}.
        let r = model.adjustment_coefficient()?;
        let esc = cfg.x0.max(0.0) + 40.0 / r;
        return Ok(Truncation { horizon: f64::INFINITY, escape: Some(esc), tail_bound: (-40.0f64).exp() });
    }
    Err(Error::HorizonRequired("q = 0 and the path has no almost-surely finite stopping time"))
}

fn validate(model: &LevyModel, cfg: &PathConfig) -> Result<()> {
    model.validate()?;
    if model.sigma2 != 0.0 {
        return Err(Error::SigmaUnsupported(model.sigma2));
    }
    if !(model.c > 0.0) {
        return Err(Error::DomainError(format!("simulation needs a positive premium rate, got c = {}", model.c)));
    }
    if !(cfg.q >= 0.0 && cfg.q.is_finite() && cfg.x0.is_finite()) {
        return Err(Error::DomainError(format!("need finite q >= 0 and x0, got q = {}, x0 = {}", cfg.q, cfg.x0)));
    }
    match cfg.upper {
        Upper::Exit(b) | Upper::Reflect(b) if !(b >= 0.0 && b.is_finite()) => {
            return Err(Error::DomainError(format!("barrier b = {b} must be finite and nonnegative")));
        }
        _ => {}
    }
    match cfg.lower {
        Lower::ParisianAbsorb(r) | Lower::ParisianReflect(r) if !(r > 0.0 && r.is_finite()) => {
            return Err(Error::DomainError(format!("observation rate r = {r} must be positive")));
        }
        _ => {}
    }
    Ok(())
}

struct Engine<'a> {
    model: &'a LevyModel,
    cfg: &'a PathConfig,
    trunc: Truncation,
    band: Option<(f64, f64)>,
}

impl Engine<'_> {
    /// Linear segment from level `x` over `[t1, t2]`.
    fn drift_segment(&self, s: &mut PathSummary, x: f64, t1: f64, t2: f64) {
        let c = self.model.c;
        if x < 0.0 {
            s.red_time += (t2 - t1).min(-x / c);
        }
        if let Some((lo, hi)) = self.band {
            let a = (t1 + (lo - x) / c).max(t1);
            let b = (t1 + (hi - x) / c).min(t2);
            if b > a {
                s.occupation += disc_int(self.cfg.q, a, b);
            }
        }
    }

    fn run(&self, rng: &mut impl Rng, mut events: Option<&mut Vec<PathEvent>>) -> PathSummary {
        let model = self.model;
        let cfg = self.cfg;
        let q = cfg.q;
        let c = model.c;
        let phases = model.active_phases();
        let lam = if phases.is_empty() { 0.0 } else { model.lambda };
        let obs_rate = match cfg.lower {
            Lower::ParisianAbsorb(r) | Lower::ParisianReflect(r) => r,
            _ => 0.0,
        };
        let mut log = |e: PathEvent| {
            if let Some(ev) = events.as_deref_mut() {
                ev.push(e);
            }
        };
        let mut s = PathSummary::default();
        let mut t = 0.0;
        let mut x = cfg.x0;

        let stop = |s: &mut PathSummary, t: f64, x: f64, cause: StopCause| {
            s.stop_time = t;
            s.level = x;
            s.cause = Some(cause);
            s.discount_at_stop = (-q * t).exp();
            s.premium = c * t;
        };

        // Initial position.
        if let Upper::Reflect(b) = cfg.upper {
            if x > b {
                s.dividends += x - b;
                s.disc_dividends += x - b;
                log(PathEvent::Dividend { t: 0.0, amount: x - b });
                x = b;
            }
        }
        if let Upper::Exit(b) = cfg.upper {
            if x >= b {
                stop(&mut s, 0.0, x, StopCause::UpExit);
                log(PathEvent::Stop { t: 0.0, cause: StopCause::UpExit, level: x });
                return s;
            }
        }
        if x < 0.0 {
            match cfg.lower {
                Lower::ClassicalAbsorb => {
                    stop(&mut s, 0.0, x, StopCause::Ruin);
                    log(PathEvent::Stop { t: 0.0, cause: StopCause::Ruin, level: x });
                    return s;
                }
                Lower::ClassicalReflect => {
                    s.injections -= x;
                    s.disc_injections -= x;
                    log(PathEvent::Injection { t: 0.0, amount: -x });
                    x = 0.0;
                }
                _ => {}
            }
        }

        let horizon = self.trunc.horizon;
        let mut t_claim = exp_time(rng, lam);
        let mut t_obs = exp_time(rng, obs_rate);
        loop {
            let next = t_claim.min(t_obs).min(horizon);
            // Exit-type stops reached while drifting.
            let exit_level = match (cfg.upper, self.trunc.escape) {
                (Upper::Exit(b), _) => Some((b, StopCause::UpExit)),
                (_, Some(e)) => Some((e, StopCause::Escape)),
                _ => None,
            };
            if let Some((lvl, cause)) = exit_level {
                let t_hit = t + (lvl - x).max(0.0) / c;
                if t_hit <= next {
                    self.drift_segment(&mut s, x, t, t_hit);
                    stop(&mut s, t_hit, lvl, cause);
                    log(PathEvent::Stop { t: t_hit, cause, level: lvl });
                    return s;
                }
            }
            match cfg.upper {
                Upper::Reflect(b) if t + (b - x) / c < next => {
                    let t_hit = t + (b - x) / c;
                    self.drift_segment(&mut s, x, t, t_hit);
                    let amount = c * (next - t_hit);
                    s.dividends += amount;
                    s.disc_dividends += c * disc_int(q, t_hit, next);
                    if let Some((lo, hi)) = self.band {
                        if lo <= b && b <= hi {
                            s.occupation += disc_int(q, t_hit, next);
                        }
                    }
                    x = b;
                }
                _ => {
                    self.drift_segment(&mut s, x, t, next);
                    x += c * (next - t);
                }
            }
            t = next;
            if t >= horizon {
                stop(&mut s, t, x, StopCause::Horizon);
                log(PathEvent::Stop { t, cause: StopCause::Horizon, level: x });
                return s;
            }
            if t == t_claim {
                let size = claim_size(rng, phases);
                x -= size;
                s.claims += size;
                s.n_claims += 1;
                log(PathEvent::Claim { t, size, level: x });
                if x < 0.0 {
                    match cfg.lower {
                        Lower::ClassicalAbsorb => {
                            stop(&mut s, t, x, StopCause::Ruin);
                            log(PathEvent::Stop { t, cause: StopCause::Ruin, level: x });
                            return s;
                        }
                        Lower::ClassicalReflect => {
                            s.injections -= x;
                            s.disc_injections -= x * (-q * t).exp();
                            log(PathEvent::Injection { t, amount: -x });
                            x = 0.0;
                        }
                        _ => {}
                    }
                }
                t_claim = t + exp_time(rng, lam);
            } else {
                s.n_observations += 1;
                log(PathEvent::Observation { t, level: x });
                if x < 0.0 {
                    match cfg.lower {
                        Lower::ParisianAbsorb(_) => {
                            stop(&mut s, t, x, StopCause::Ruin);
                            log(PathEvent::Stop { t, cause: StopCause::Ruin, level: x });
                            return s;
                        }
                        Lower::ParisianReflect(_) => {
                            s.injections -= x;
                            s.disc_injections -= x * (-q * t).exp();
                            log(PathEvent::Injection { t, amount: -x });
                            x = 0.0;
                        }
                        _ => {}
                    }
                }
                t_obs = t + exp_time(rng, obs_rate);
            }
        }
    }
}

fn band_of(f: Option<Functional>) -> Option<(f64, f64)> {
    match f {
        Some(Functional::Occupation { lo, hi }) => Some((lo, hi)),
        _ => None,
    }
}

/// Simulates path `index` of the run seeded with `seed`, recording every event.
pub fn simulate_path(model: &LevyModel, cfg: &PathConfig, functional: Option<Functional>, seed: u64, index: u64) -> Result<PathRecord> {
    validate(model, cfg)?;
    let trunc = truncation(model, cfg, functional)?;
    let engine = Engine { model, cfg, trunc, band: band_of(functional) };
    let mut events = Vec::new();
    let summary = engine.run(&mut path_rng(seed, index), Some(&mut events));
    Ok(PathRecord { summary, events })
}

/// Value of `functional` on one simulated path.
pub fn functional_value(f: Functional, s: &PathSummary) -> f64 {
    let cause = s.cause;
    match f {
        Functional::UpExit { theta } => {
            if cause != Some(StopCause::UpExit) {
                return 0.0;
            }
            let w = match theta {
                Theta::Infinite => (s.injections == 0.0) as u8 as f64,
                Theta::Finite(th) => (-th * s.injections).exp(),
            };
            s.discount_at_stop * w
        }
        Functional::Severity { theta } => {
            if cause != Some(StopCause::Ruin) {
                return 0.0;
            }
            s.discount_at_stop * (theta * s.level).exp()
        }
        Functional::Dividends => s.disc_dividends,
        Functional::Bailouts => s.disc_injections,
        Functional::DividendsMinusBailouts { k } => s.disc_dividends - k * s.disc_injections,
        Functional::TimeInRed { r } => (-r * s.red_time).exp(),
        Functional::Joint { theta, vartheta } => {
            if cause != Some(StopCause::Ruin) {
                return 0.0;
            }
            let w = match vartheta {
                Theta::Infinite => (s.dividends == 0.0) as u8 as f64,
                Theta::Finite(v) => (-v * s.dividends).exp(),
            };
            s.discount_at_stop * (theta * s.level).exp() * w
        }
        Functional::Occupation { .. } => s.occupation,
    }
}

/// Monte-Carlo estimate of `E[functional]` over `n_paths` independent paths.
pub fn estimate(model: &LevyModel, cfg: &PathConfig, functional: Functional, n_paths: usize, seed: u64) -> Result<MCEstimate> {
    validate(model, cfg)?;
    if n_paths < 2 {
        return Err(Error::DomainError("need at least two paths".into()));
    }
    if let Functional::TimeInRed { r } = functional {
        if cfg.q != 0.0 || !(r > 0.0) {
            return Err(Error::DomainError("time in the red needs q = 0 and r > 0".into()));
        }
    }
    let trunc = truncation(model, cfg, Some(functional))?;
    let engine = Engine { model, cfg, trunc, band: band_of(Some(functional)) };
    let values: Vec<f64> = with_pool(|| {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| functional_value(functional, &engine.run(&mut path_rng(seed, i), None)))
            .collect()
    });
    Ok(summarize(&values, trunc.tail_bound))
}
