use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use parisian_scale::control_opt::{
    efficiency_index, is_efficient, network_check, network_value_mc, optimize_barrier, slg_parisian_value, solve_patience, value_definetti, value_parisian,
    value_slg_classic, vf_dividends_classic, BarrierFunction, BarrierKind, NetworkSpec, ParisianPart,
};
use parisian_scale::crosscheck::{run_crosscheck, CheckParams, CHECK_NAMES};
use parisian_scale::levy_model::CATALOG_NAMES;
use parisian_scale::passage_laws::{
    bailouts_to_level, dividends_penalty_classic, parisian_dividends_penalty, parisian_severity, parisian_up_exit,
    severity_absorbed, severity_infinite, severity_reflected, time_in_red, two_sided_exit, InfiniteMode, ParisianOccupation,
};
use parisian_scale::{catalog, Error, LevyModel, ParisianContext, Penalty, ScaleContext, Theta};

const LAWS: [&str; 12] = [
    "two_sided",
    "severity_absorbed",
    "severity_reflected",
    "severity_infinite",
    "bailouts_to_level",
    "dividends_penalty",
    "parisian_up_exit",
    "parisian_severity",
    "parisian_dividends_penalty",
    "parisian_occupation",
    "parisian_occupation_total",
    "time_in_red",
];

const OBJECTIVES: [&str; 8] = [
    "vf_dividends",
    "definetti",
    "slg_classic",
    "parisian_vf_dividends",
    "parisian_vf_bailouts",
    "parisian_vs_dividends",
    "parisian_vs_bailouts",
    "slg_parisian",
];

const SCALE_COLUMNS: [&str; 10] = ["x", "W", "dW", "Wbar", "Z", "Zbar", "Z_theta", "W_qr", "Z_qr", "S"];

#[derive(Parser, Debug)]
#[command(name = "parisian-scale", version, about = "Scale functions, passage laws and dividend barriers for Levy risk models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate scale functions over an x grid.
    Scale {
        #[command(flatten)]
        p: Params,
        /// Comma-separated subset of x,W,dW,Wbar,Z,Zbar,Z_theta,W_qr,Z_qr,S.
        #[arg(long)]
        columns: Option<String>,
    },
    /// Evaluate a first-passage law over an x grid (a y grid for `parisian_occupation`).
    Law {
        name: String,
        #[command(flatten)]
        p: Params,
    },
    /// Evaluate a value function over an x grid; without --b the optimal barrier is used.
    Value {
        objective: String,
        #[command(flatten)]
        p: Params,
        /// Terminal penalty for `definetti`: exp:T, linear:k,K or const:K.
        #[arg(long)]
        penalty: Option<String>,
    },
    /// Efficiency threshold k(q,r), whether --k is efficient, and the patience needed otherwise.
    Efficiency {
        #[command(flatten)]
        p: Params,
    },
    /// Monte-Carlo cross-check of one functional against its closed form.
    Simulate {
        name: String,
        #[command(flatten)]
        p: Params,
        /// Occupation band lo:hi for `parisian_occupation_band`.
        #[arg(long, allow_hyphen_values = true)]
        band: Option<String>,
    },
    /// Reinsurance network: cheapness check and Monte-Carlo value.
    Network {
        /// Network JSON file.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        u0: f64,
        #[arg(long, default_value_t = 0.0)]
        b: f64,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Params {
    /// Model JSON file or catalog name (m1, m2, m3, m4).
    #[arg(long)]
    model: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    #[arg(long)]
    r: Option<f64>,
    /// `inf` is accepted.
    #[arg(long)]
    theta: Option<Theta>,
    #[arg(long)]
    vartheta: Option<Theta>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long = "K")]
    big_k: Option<f64>,
    /// a:b:n, n equally spaced points.
    #[arg(long = "x-grid", allow_hyphen_values = true)]
    x_grid: Option<String>,
    /// Single starting point (simulate, parisian_occupation).
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100_000)]
    paths: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::PoleAtTheta { .. }
            | Error::ConvergenceFailure { .. }
            | Error::DegenerateRoots { .. }
            | Error::NoSolution(_)
            | Error::TailIncreasing { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Usage(msg.into()))
}

impl Params {
    fn model(&self) -> Res<LevyModel> {
        let Some(spec) = &self.model else { return usage("--model is required") };
        let path = Path::new(spec);
        if path.is_file() {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {spec}: {e}")))?;
            return Ok(LevyModel::from_json(&text)?);
        }
        match catalog(spec) {
            Some(m) => Ok(m),
            None => usage(format!("`{spec}` is neither a model file nor a catalog name ({})", CATALOG_NAMES.join(", "))),
        }
    }

    fn rate(&self) -> Res<f64> {
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return usage(format!("--q must be a finite nonnegative rate, got {}", self.q));
        }
        Ok(self.q)
    }

    fn r(&self) -> Res<f64> {
        match self.r {
            Some(r) if r > 0.0 && r.is_finite() => Ok(r),
            Some(r) => usage(format!("--r must be positive, got {r}")),
            None => usage("--r is required"),
        }
    }

    fn b(&self) -> Res<f64> {
        self.b.ok_or_else(|| Failure::Usage("--b is required".into()))
    }

    fn x(&self) -> Res<f64> {
        self.x.ok_or_else(|| Failure::Usage("--x is required".into()))
    }

    fn k(&self) -> Res<f64> {
        self.k.ok_or_else(|| Failure::Usage("--k is required".into()))
    }

    fn theta(&self) -> Theta {
        self.theta.unwrap_or(Theta::Finite(0.0))
    }

    fn theta_finite(&self) -> Res<f64> {
        match self.theta() {
            Theta::Finite(t) => Ok(t),
            Theta::Infinite => usage("--theta must be finite here"),
        }
    }

    fn vartheta(&self) -> Theta {
        self.vartheta.unwrap_or(Theta::Finite(0.0))
    }

    fn grid(&self) -> Res<Vec<f64>> {
        let Some(g) = &self.x_grid else { return usage("--x-grid a:b:n is required") };
        parse_grid(g)
    }

    fn ctx(&self) -> Res<ScaleContext> {
        Ok(ScaleContext::build(&self.model()?, self.rate()?)?)
    }

    fn pctx(&self) -> Res<ParisianContext> {
        Ok(ParisianContext::build(&self.model()?, self.rate()?, self.r()?)?)
    }
}

fn parse_grid(s: &str) -> Res<Vec<f64>> {
    let bad = || Failure::Usage(format!("grid `{s}` must look like a:b:n"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts.as_slice() else { return Err(bad()) };
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    let n: usize = n.trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    if b <= a {
        return usage(format!("grid `{s}` must be strictly increasing"));
    }
    Ok((0..n).map(|i| if i == n - 1 { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect())
}

fn parse_band(s: &str) -> Res<(f64, f64)> {
    let bad = || Failure::Usage(format!("band `{s}` must look like lo:hi with lo < hi"));
    let (lo, hi) = s.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(bad())
    }
}

fn sink(out: &Option<PathBuf>) -> Res<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", p.display())))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_csv(out: &Option<PathBuf>, header: &[&str], rows: &[Vec<f64>]) -> Res<()> {
    let io_err = |e: csv::Error| Failure::Numerical(format!("write failed: {e}"));
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v:.16e}"))).map_err(io_err)?;
    }
    w.flush().map_err(|e| Failure::Numerical(format!("write failed: {e}")))
}

fn write_json(out: &Option<PathBuf>, value: serde_json::Value) -> Res<()> {
    let mut w = sink(out)?;
    let text = serde_json::to_string_pretty(&value).map_err(|e| Failure::Numerical(e.to_string()))?;
    writeln!(w, "{text}").map_err(|e| Failure::Numerical(format!("write failed: {e}")))
}

fn cmd_scale(p: &Params, columns: Option<&str>) -> Res<()> {
    let cols: Vec<&str> = match columns {
        Some(c) => c.split(',').map(str::trim).collect(),
        None if p.r.is_some() => SCALE_COLUMNS.to_vec(),
        None => SCALE_COLUMNS[..7].to_vec(),
    };
    if let Some(bad) = cols.iter().find(|c| !SCALE_COLUMNS.contains(c)) {
        return usage(format!("unknown column `{bad}`; expected one of: {}", SCALE_COLUMNS.join(", ")));
    }
    let ctx = p.ctx()?;
    let needs_r = cols.iter().any(|c| matches!(*c, "W_qr" | "Z_qr" | "S"));
    let pctx = if needs_r { Some(ParisianContext::from_base(ctx.clone(), p.r()?)?) } else { None };
    let theta = p.theta_finite()?;
    let mut rows = Vec::new();
    for x in p.grid()? {
        let mut row = Vec::with_capacity(cols.len());
        for c in &cols {
            let v = match *c {
                "x" => x,
                "W" => ctx.eval_w(x, 0),
                "dW" => ctx.eval_w(x, 1),
                "Wbar" => ctx.eval_wbar(x),
                "Z" => ctx.eval_z0(x, 0),
                "Zbar" => ctx.eval_zbar(x),
                "Z_theta" => ctx.eval_z(x, theta, false),
                "W_qr" => pctx.as_ref().unwrap().eval_w_qr(x, 0),
                "Z_qr" => pctx.as_ref().unwrap().eval_parisian_z(x, Theta::Finite(0.0), 0),
                "S" => pctx.as_ref().unwrap().eval_scripts(x, 0)?,
                _ => unreachable!(),
            };
            row.push(v);
        }
        rows.push(row);
    }
    write_csv(&p.out, &cols, &rows)
}

fn cmd_law(name: &str, p: &Params) -> Res<()> {
    if !LAWS.contains(&name) {
        return usage(format!("unknown law `{name}`; expected one of: {}", LAWS.join(", ")));
    }
    let grid = p.grid()?;
    let mut rows = Vec::with_capacity(grid.len());
    let var = if name == "parisian_occupation" { "y" } else { "x" };
    let parisian = name.starts_with("parisian_");
    let ctx = if parisian || name == "time_in_red" { None } else { Some(p.ctx()?) };
    let pctx = if parisian { Some(p.pctx()?) } else { None };
    let ctx0 = if name == "time_in_red" { Some(ScaleContext::build(&p.model()?, 0.0)?) } else { None };
    let occ = match &pctx {
        Some(pc) if name.starts_with("parisian_occupation") => Some(ParisianOccupation::new(pc)?),
        _ => None,
    };
    for g in grid {
        let v = match name {
            "two_sided" => two_sided_exit(ctx.as_ref().unwrap(), g, 0.0, p.b()?)?.value,
            "severity_absorbed" => severity_absorbed(ctx.as_ref().unwrap(), g, p.b()?, p.theta_finite()?)?.value,
            "severity_reflected" => severity_reflected(ctx.as_ref().unwrap(), g, p.b()?, p.theta_finite()?)?.value,
            "severity_infinite" => severity_infinite(ctx.as_ref().unwrap(), g, p.theta_finite()?, InfiniteMode::Ruin)?.value,
            "bailouts_to_level" => bailouts_to_level(ctx.as_ref().unwrap(), g, p.b()?, p.theta())?.value,
            "dividends_penalty" => {
                dividends_penalty_classic(ctx.as_ref().unwrap(), g, p.b()?, p.theta_finite()?, p.vartheta())?.value
            }
            "parisian_up_exit" => parisian_up_exit(pctx.as_ref().unwrap(), g, p.b()?, p.theta())?.value,
            "parisian_severity" => parisian_severity(pctx.as_ref().unwrap(), g, p.b()?, p.theta_finite()?)?.value,
            "parisian_dividends_penalty" => {
                parisian_dividends_penalty(pctx.as_ref().unwrap(), g, p.b()?, p.theta_finite()?, p.vartheta())?.value
            }
            "parisian_occupation" => occ.as_ref().unwrap().density(p.x()?, 0.0, p.b()?, g)?.value,
            "parisian_occupation_total" => occ.as_ref().unwrap().total(g, 0.0, p.b()?)?.value,
            "time_in_red" => time_in_red(ctx0.as_ref().unwrap(), g, p.r()?)?.value,
            _ => unreachable!(),
        };
        rows.push(vec![g, v]);
    }
    write_csv(&p.out, &[var, "value"], &rows)
}

fn cmd_value(objective: &str, p: &Params, penalty: Option<&str>) -> Res<()> {
    if !OBJECTIVES.contains(&objective) {
        return usage(format!("unknown objective `{objective}`; expected one of: {}", OBJECTIVES.join(", ")));
    }
    let parisian = objective.starts_with("parisian_") || objective == "slg_parisian";
    let ctx = if parisian { None } else { Some(p.ctx()?) };
    let pctx = if parisian { Some(p.pctx()?) } else { None };
    let pen = match penalty {
        Some(s) => Penalty::parse(s)?,
        None => Penalty::Linear { k: p.k.unwrap_or(0.0), big_k: p.big_k.unwrap_or(0.0) },
    };
    let b = match (p.b, objective) {
        (Some(b), _) => b,
        (None, "definetti" | "slg_classic" | "slg_parisian") => {
            let kind = match objective {
                "definetti" => BarrierKind::DeFinettiClassic { penalty: pen },
                "slg_classic" => BarrierKind::SlgClassic { k: p.k()? },
                _ => BarrierKind::SlgParisian { k: p.k()? },
            };
            let g = BarrierFunction::new(kind, ctx.as_ref(), pctx.as_ref())?;
            optimize_barrier(&g, None)?.b_star
        }
        (None, _) => return usage(format!("--b is required for `{objective}`")),
    };
    let mut rows = Vec::new();
    for x_in in p.grid()? {
        // Above the barrier the excess is paid out at once; bailout-only parts do not see it.
        let x = x_in.min(b);
        let payout = match objective {
            "definetti" | "parisian_vf_bailouts" | "parisian_vs_bailouts" => 0.0,
            _ => x_in - x,
        };
        let x = if objective == "definetti" { x_in } else { x };
        let v = payout + match objective {
            "vf_dividends" => vf_dividends_classic(ctx.as_ref().unwrap(), x, b)?,
            "definetti" => value_definetti(ctx.as_ref().unwrap(), x, b, pen)?,
            "slg_classic" => value_slg_classic(ctx.as_ref().unwrap(), x, b, p.k()?)?,
            "slg_parisian" => slg_parisian_value(pctx.as_ref().unwrap(), x, b, p.k()?)?,
            _ => {
                let part = match objective {
                    "parisian_vf_dividends" => ParisianPart::VfDiv,
                    "parisian_vf_bailouts" => ParisianPart::VfBail,
                    "parisian_vs_bailouts" => ParisianPart::VsBail,
                    _ => match p.theta {
                        Some(Theta::Finite(t)) => ParisianPart::VsDivTheta(t),
                        _ => ParisianPart::VsDiv,
                    },
                };
                value_parisian(pctx.as_ref().unwrap(), x, b, part)?
            }
        };
        rows.push(vec![x_in, b, v]);
    }
    write_csv(&p.out, &["x", "b", "value"], &rows)
}

fn cmd_efficiency(p: &Params) -> Res<()> {
    let pctx = p.pctx()?;
    let k = p.k()?;
    let threshold = efficiency_index(&pctx)?;
    let efficient = is_efficient(&pctx, k)?;
    let patience = solve_patience(pctx.model(), pctx.q(), pctx.r(), k)?;
    write_json(&p.out, json!({ "threshold": threshold, "efficient": efficient, "patience": patience }))
}

fn cmd_simulate(name: &str, p: &Params, band: Option<&str>) -> Res<()> {
    if !CHECK_NAMES.contains(&name) {
        return usage(format!("unknown functional `{name}`; expected one of: {}", CHECK_NAMES.join(", ")));
    }
    let d = CheckParams::default();
    let params = CheckParams {
        q: p.rate()?,
        r: p.r.unwrap_or(d.r),
        x: p.x.unwrap_or(d.x),
        b: p.b.unwrap_or(d.b),
        theta: p.theta.unwrap_or(d.theta),
        vartheta: p.vartheta.unwrap_or(d.vartheta),
        k: p.k.unwrap_or(d.k),
        band: band.map(parse_band).transpose()?.unwrap_or(d.band),
    };
    let res = run_crosscheck(&p.model()?, name, &params, p.paths, p.seed)?;
    write_json(
        &p.out,
        json!({
            "functional": name,
            "mean": res.mc.mean,
            "se": res.mc.std_error,
            "ci95": res.mc.ci95,
            "analytic": res.analytic,
            "z_score": res.z_score,
            "n_paths": res.mc.n_paths,
            "tail_bound": res.mc.tail_bound,
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_network(spec: &Path, u0: f64, b: f64, horizon: Option<f64>, seed: u64, paths: usize, out: &Option<PathBuf>) -> Res<()> {
    let text = fs::read_to_string(spec).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", spec.display())))?;
    let net = NetworkSpec::from_json(&text)?;
    let check = network_check(&net)?;
    let (mc_value, se) = if check.cheap {
        let mc = network_value_mc(&net, u0, b, horizon, paths, seed)?;
        (Some(mc.estimate.mean), Some(mc.estimate.std_error))
    } else {
        (None, None)
    };
    write_json(
        out,
        json!({ "cheap": check.cheap, "gamma": check.gamma, "c_tilde": check.c_tilde, "mc_value": mc_value, "se": se }),
    )
}

fn run(cli: Cli) -> Res<()> {
    match cli.command {
        Command::Scale { p, columns } => cmd_scale(&p, columns.as_deref()),
        Command::Law { name, p } => cmd_law(&name, &p),
        Command::Value { objective, p, penalty } => cmd_value(&objective, &p, penalty.as_deref()),
        Command::Efficiency { p } => cmd_efficiency(&p),
        Command::Simulate { name, p, band } => cmd_simulate(&name, &p, band.as_deref()),
        Command::Network { spec, u0, b, horizon, seed, paths, out } => cmd_network(&spec, u0, b, horizon, seed, paths, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(1)
        }
    }
}
