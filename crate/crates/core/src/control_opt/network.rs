//! Central-branch reinsurance network under the claims-line policy.
//!
//! Subsidiary `i` keeps a share `α_i` of its claims and cedes `1 − α_i` to the central
//! branch (CB). With `a_i = α_i/(1−α_i)` the claims line is `u_i = a_i u_0`. The CB pays
//! dividends at barrier `b`; subsidiaries pay out whatever keeps them on the line:
//! premium in excess of `a_i` times the CB's reserve growth, plus lump sums after claims
//! ceded by others. Claims of subsidiary `j` move it onto the line by themselves, because
//! `a_j(1−α_j) = α_j`.
//!
//! The MC estimator accounts for the dividends directly and, on the same path, through
//! the one-dimensional integrand
//!
//! ```text
//! dR_0 + c̃ dt − γ dX_0 − Σ_i (γ/a_i − 1) dX_i,   γ = Σ a_i,  c̃ = γ Σ c_i/a_i,
//! ```
//!
//! with `X_0 = c_0 t − C_0(t) − R_0(t)` (the CB's own business net of its dividends) and
//! `X_i = c_i t − α_i C_i(t)`. Both integrals run over `[0, τ)`, where `τ` is CB ruin.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy_model::{LevyModel, Phase};
use crate::mc_oracle::{claim_size, disc_int, exp_time, path_rng, summarize, with_pool, MCEstimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subsidiary {
    pub c: f64,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub phases: Vec<Phase>,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub q: f64,
    pub c0: f64,
    /// Claims on the CB's own book; none by default.
    #[serde(default)]
    pub cb_lambda: f64,
    #[serde(default)]
    pub cb_phases: Vec<Phase>,
    pub subsidiaries: Vec<Subsidiary>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NetworkCheck {
    pub cheap: bool,
    pub gamma: f64,
    pub c_tilde: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkMc {
    /// Direct accounting of all dividends paid in the network.
    pub estimate: MCEstimate,
    /// The same paths valued through the one-dimensional integrand.
    pub integrand_estimate: MCEstimate,
    pub max_identity_gap: f64,
    /// Events before CB ruin that would have required a subsidiary bailout, or a
    /// negative subsidiary dividend rate.
    pub cone_violations: u64,
    /// Largest distance of a subsidiary reserve from the claims line before ruin.
    pub max_line_deviation: f64,
    pub ruined_paths: usize,
}

impl NetworkSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsidiaries.is_empty() {
            return Err(Error::InvalidModel("network needs at least one subsidiary".into()));
        }
        if !(self.q >= 0.0 && self.q.is_finite()) || !(self.c0 >= 0.0 && self.c0.is_finite()) {
            return Err(Error::InvalidModel(format!("need q >= 0 and c0 >= 0, got q = {}, c0 = {}", self.q, self.c0)));
        }
        for (i, s) in self.subsidiaries.iter().enumerate() {
            if !(s.alpha > 0.0 && s.alpha < 1.0) {
                return Err(Error::RetentionOutOfRange { index: i + 1, alpha: s.alpha });
            }
            LevyModel::new(s.c, 0.0, s.lambda, s.phases.clone())?;
        }
        if self.cb_lambda > 0.0 {
            LevyModel::new(self.c0.max(1.0), 0.0, self.cb_lambda, self.cb_phases.clone())?;
        }
        Ok(())
    }

    fn ratios(&self) -> Vec<f64> {
        self.subsidiaries.iter().map(|s| s.alpha / (1.0 - s.alpha)).collect()
    }
}

pub fn network_check(spec: &NetworkSpec) -> Result<NetworkCheck> {
    spec.validate()?;
    let a = spec.ratios();
    let gamma: f64 = a.iter().sum();
    let cheap = spec.subsidiaries.iter().zip(&a).all(|(s, ai)| spec.c0 <= s.c / ai);
    let c_tilde = gamma * spec.subsidiaries.iter().zip(&a).map(|(s, ai)| s.c / ai).sum::<f64>();
    Ok(NetworkCheck { cheap, gamma, c_tilde })
}

/// `u_i = u_0 α_i/(1−α_i)`.
pub fn network_claims_line(spec: &NetworkSpec, u0: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    if !(u0 >= 0.0) {
        return Err(Error::DomainError(format!("u0 = {u0} must be nonnegative")));
    }
    Ok(spec.ratios().into_iter().map(|a| u0 * a).collect())
}

struct PathOutcome {
    direct: f64,
    integrand: f64,
    violations: u64,
    deviation: f64,
    ruined: bool,
}

fn run_path(spec: &NetworkSpec, chk: &NetworkCheck, a: &[f64], u0: f64, b: f64, horizon: f64, rng: &mut impl Rng) -> PathOutcome {
    let q = spec.q;
    let c0 = spec.c0;
    let gamma = chk.gamma;
    let subs = &spec.subsidiaries;
    let rates: Vec<f64> = std::iter::once(if spec.cb_phases.is_empty() { 0.0 } else { spec.cb_lambda })
        .chain(subs.iter().map(|s| if s.phases.is_empty() { 0.0 } else { s.lambda }))
        .collect();
    let total_rate: f64 = rates.iter().sum();
    // Coefficient of dX_i in the integrand.
    let coef: Vec<f64> = a.iter().map(|ai| gamma / ai - 1.0).collect();

    let mut out = PathOutcome { direct: 0.0, integrand: 0.0, violations: 0, deviation: 0.0, ruined: false };
    let mut x0 = u0;
    let mut res: Vec<f64> = a.iter().map(|ai| ai * u0).collect();
    let mut t = 0.0;

    if x0 > b {
        let lump = x0 - b;
        out.direct += lump + a.iter().map(|ai| ai * lump).sum::<f64>();
        // dR_0 = lump and dX_0 = −lump.
        out.integrand += lump + gamma * lump;
        for (r, ai) in res.iter_mut().zip(a) {
            *r -= ai * lump;
        }
        x0 = b;
    }
    for (i, s) in subs.iter().enumerate() {
        if s.c - a[i] * c0 < 0.0 {
            out.violations += 1;
        }
    }

    loop {
        let next = (t + exp_time(rng, total_rate)).min(horizon);
        let t_hit = if x0 >= b {
            t
        } else if c0 > 0.0 {
            t + (b - x0) / c0
        } else {
            f64::INFINITY
        };
        // Below the barrier: the CB accumulates, subsidiaries pay c_i − a_i c_0.
        let t1 = t_hit.min(next);
        if t1 > t {
            let d = disc_int(q, t, t1);
            out.direct += d * subs.iter().zip(a).map(|(s, ai)| s.c - ai * c0).sum::<f64>();
            out.integrand += d * (chk.c_tilde - gamma * c0 - subs.iter().zip(&coef).map(|(s, k)| k * s.c).sum::<f64>());
            let dt = t1 - t;
            x0 += c0 * dt;
            for ((r, ai), s) in res.iter_mut().zip(a).zip(subs) {
                *r += s.c * dt - (s.c - ai * c0) * dt;
            }
        }
        // At the barrier: everything is paid out.
        if next > t1 {
            let d = disc_int(q, t1, next);
            out.direct += d * (c0 + subs.iter().map(|s| s.c).sum::<f64>());
            out.integrand += d * (c0 + chk.c_tilde - subs.iter().zip(&coef).map(|(s, k)| k * s.c).sum::<f64>());
            x0 = b;
        }
        t = next;
        if t >= horizon {
            return out;
        }

        // Claim arrival: pick the source by rate.
        let mut u = rng.random::<f64>() * total_rate;
        let mut src = rates.len() - 1;
        for (i, r) in rates.iter().enumerate() {
            if u < *r {
                src = i;
                break;
            }
            u -= r;
        }
        let disc = (-q * t).exp();
        let (cb_loss, own) = if src == 0 {
            let size = claim_size(rng, &spec.cb_phases);
            (size, None)
        } else {
            let j = src - 1;
            let size = claim_size(rng, &subs[j].phases);
            ((1.0 - subs[j].alpha) * size, Some((j, size)))
        };
        x0 -= cb_loss;
        if x0 < 0.0 {
            out.ruined = true;
            return out;
        }
        match own {
            None => {
                // dX_0 = −C_0.
                let mut lumps = 0.0;
                for (r, ai) in res.iter_mut().zip(a) {
                    lumps += ai * cb_loss;
                    *r -= ai * cb_loss;
                }
                out.direct += disc * lumps;
                out.integrand += disc * gamma * cb_loss;
            }
            Some((j, size)) => {
                let kept = subs[j].alpha * size;
                res[j] -= kept;
                if res[j] < -1e-12 {
                    out.violations += 1;
                }
                let mut lumps = 0.0;
                for (i, (r, ai)) in res.iter_mut().zip(a).enumerate() {
                    if i != j {
                        lumps += ai * cb_loss;
                        *r -= ai * cb_loss;
                    }
                }
                out.direct += disc * lumps;
                // dX_j = −α_j C.
                out.integrand += disc * coef[j] * kept;
            }
        }
        for (r, ai) in res.iter().zip(a) {
            if *r < -1e-12 {
                out.violations += 1;
            }
            out.deviation = out.deviation.max((r - ai * x0).abs());
        }
    }
}

/// Total discounted dividends of the network until CB ruin, starting on the claims line
/// with CB reserve `u0` and CB barrier `b`. `horizon = None` truncates at
/// `(40 + ln(1 + u0 + b))/q`.
pub fn network_value_mc(spec: &NetworkSpec, u0: f64, b: f64, horizon: Option<f64>, n_paths: usize, seed: u64) -> Result<NetworkMc> {
    let chk = network_check(spec)?;
    if !chk.cheap {
        return Err(Error::NotCheap);
    }
    if !(u0 >= 0.0 && b >= 0.0 && u0.is_finite() && b.is_finite()) {
        return Err(Error::DomainError(format!("need u0, b >= 0, got u0 = {u0}, b = {b}")));
    }
    if n_paths < 2 {
        return Err(Error::DomainError("need at least two paths".into()));
    }
    let q = spec.q;
    let horizon = match horizon {
        Some(t) if t > 0.0 => t,
        Some(t) => return Err(Error::DomainError(format!("horizon = {t} must be positive"))),
        None if q > 0.0 => (40.0 + (1.0 + u0 + b).ln()) / q,
        None => return Err(Error::HorizonRequired("network dividends with q = 0")),
    };
    let rate_sum = spec.c0 + spec.subsidiaries.iter().map(|s| s.c).sum::<f64>();
    let tail = if q > 0.0 { (-q * horizon).exp() * rate_sum / q } else { f64::INFINITY };
    let a = spec.ratios();
    let outcomes: Vec<PathOutcome> = with_pool(|| {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| run_path(spec, &chk, &a, u0, b, horizon, &mut path_rng(seed, i)))
            .collect()
    });
    let direct: Vec<f64> = outcomes.iter().map(|o| o.direct).collect();
    let integrand: Vec<f64> = outcomes.iter().map(|o| o.integrand).collect();
    Ok(NetworkMc {
        estimate: summarize(&direct, tail),
        integrand_estimate: summarize(&integrand, tail),
        max_identity_gap: outcomes.iter().map(|o| (o.direct - o.integrand).abs()).fold(0.0, f64::max),
        cone_violations: outcomes.iter().map(|o| o.violations).sum(),
        max_line_deviation: outcomes.iter().map(|o| o.deviation).fold(0.0, f64::max),
        ruined_paths: outcomes.iter().filter(|o| o.ruined).count(),
    })
}
