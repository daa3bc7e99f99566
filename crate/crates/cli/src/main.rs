mod format;

use std::io::{self, Read, Write};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{Map, Value};
use thiserror::Error;

use sp_copula::copula::copula_sample;
use sp_copula::dist::check_order;
use sp_copula::oracle::verify_all;
use sp_copula::precedence::{
    classify, eta_best, eta_discrete_exact, eta_exact, eta_mc, eta_quadrature, sp_level, PrecedenceError,
    PrecedenceReport,
};
use sp_copula::tba::{rank_prospects, Prospect};
use sp_copula::{Component, CopulaSpec, Distribution, Method, Relation};

use format::{g12, Meta};

const THREADS_ENV: &str = "SP_COPULA_THREADS";

#[derive(Parser)]
#[command(name = "sp-copula", version, about = "Stochastic precedence under copula dependence")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON input file, or - for stdin.
    #[arg(long, global = true)]
    spec: Option<String>,
    #[arg(long, global = true, default_value_t = 1_000_000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 512)]
    grid: usize,
    #[arg(long, global = true, value_enum, default_value_t = Output::Json)]
    output: Output,
    /// Precedence level for `eta` and `classify`.
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true, default_value = "st")]
    relation: Relation,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// P(X₁ ≤ X₂); with --gamma, test precedence at that level.
    Eta,
    /// Tie mass P(X₁ = X₂).
    Xi,
    /// L_γ and B_γ membership of a copula.
    Classify,
    /// Stochastic order check between two marginals.
    Order,
    /// Target-based prospect ranking.
    Rank,
    /// Draw copula samples.
    Sample,
    /// Differential checks of the worked examples.
    Verify,
    /// η along a parameter sweep.
    Curve,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum Output {
    Json,
    Csv,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Precedence(#[from] PrecedenceError),
    #[error("{0}")]
    Library(String),
}

enum Outcome {
    Done,
    Inconclusive,
    ChecksFailed,
}

#[derive(Deserialize, Default, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
enum MethodChoice {
    #[default]
    Auto,
    ClosedForm,
    DiscreteExact,
    Quadrature,
    MonteCarlo,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PrecedenceInput {
    copula: CopulaSpec,
    g1: Option<Distribution>,
    g2: Option<Distribution>,
    #[serde(default)]
    method: MethodChoice,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CopulaInput {
    copula: CopulaSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OrderInput {
    g1: Distribution,
    g2: Distribution,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RankInput {
    target: Distribution,
    prospects: Vec<Prospect>,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum CurveFamily {
    #[default]
    Gaussian,
    Shuffle,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveInput {
    #[serde(default)]
    family: CurveFamily,
    g1: Option<Distribution>,
    g2: Option<Distribution>,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
}

struct Ctx {
    cli: Cli,
    workers: usize,
    out: Vec<u8>,
}

impl Ctx {
    fn read_input<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        let path = self
            .cli
            .spec
            .as_deref()
            .ok_or_else(|| CliError::Input("--spec is required for this command".into()))?;
        let text = if path == "-" {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).map_err(|e| CliError::Input(e.to_string()))?;
            s
        } else {
            std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{path}: {e}")))?
        };
        serde_json::from_str(&text).map_err(|e| CliError::Input(e.to_string()))
    }

    fn optional_input<T: for<'de> Deserialize<'de>>(&self) -> Result<Option<T>, CliError> {
        if self.cli.spec.is_none() {
            return Ok(None);
        }
        self.read_input().map(Some)
    }

    fn meta(&self, samples: u64, method: &str) -> Meta {
        Meta { seed: self.cli.seed, samples, method: method.into(), workers: self.workers }
    }

    fn emit_json(&mut self, value: impl serde::Serialize, meta: Meta) {
        let mut doc = match serde_json::to_value(value).expect("serializable output") {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("result".into(), other);
                m
            }
        };
        meta.insert_into(&mut doc);
        serde_json::to_writer_pretty(&mut self.out, &Value::Object(doc)).expect("in-memory write");
        self.out.push(b'\n');
    }

    fn emit_csv(&mut self, meta: Meta, header: &str, rows: impl IntoIterator<Item = String>) {
        self.out.extend_from_slice(meta.csv_header().as_bytes());
        self.out.extend_from_slice(header.as_bytes());
        self.out.push(b'\n');
        for r in rows {
            self.out.extend_from_slice(r.as_bytes());
            self.out.push(b'\n');
        }
    }
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::ClosedForm => "closed_form",
        Method::DiscreteExact => "discrete_exact",
        Method::Quadrature => "quadrature",
        Method::MonteCarlo => "monte_carlo",
    }
}

fn precedence_report(ctx: &Ctx, input: &PrecedenceInput) -> Result<PrecedenceReport, CliError> {
    let (samples, seed, tol) = (ctx.cli.samples, ctx.cli.seed, ctx.cli.tol);
    let (g1, g2) = match (&input.g1, &input.g2) {
        (Some(a), Some(b)) => (a.clone(), b.clone()),
        (None, None) => {
            let (eta, xi) = eta_exact(&input.copula, None, None).expect("registry covers every copula");
            let u = Distribution::standard_uniform();
            return match input.method {
                MethodChoice::Auto | MethodChoice::ClosedForm => Ok(closed(eta, xi)),
                MethodChoice::Quadrature => Ok(eta_quadrature(&input.copula, &u, &u, tol)?),
                MethodChoice::MonteCarlo => Ok(eta_mc(&input.copula, &u, &u, samples, seed)?),
                MethodChoice::DiscreteExact => Err(PrecedenceError::NotDiscrete.into()),
            };
        }
        _ => return Err(CliError::Input("give both g1 and g2 or neither".into())),
    };
    let c = &input.copula;
    Ok(match input.method {
        MethodChoice::Auto => eta_best(c, &g1, &g2, samples, seed, tol)?,
        MethodChoice::ClosedForm => {
            let (eta, xi) = eta_exact(c, Some(&g1), Some(&g2))
                .ok_or_else(|| CliError::Library("no closed form for this copula and marginals".into()))?;
            closed(eta, xi)
        }
        MethodChoice::DiscreteExact => eta_discrete_exact(c, &g1, &g2)?,
        MethodChoice::Quadrature => eta_quadrature(c, &g1, &g2, tol)?,
        MethodChoice::MonteCarlo => eta_mc(c, &g1, &g2, samples, seed)?,
    })
}

fn closed(eta: f64, xi: f64) -> PrecedenceReport {
    PrecedenceReport {
        eta,
        xi,
        method: Method::ClosedForm,
        stderr_eta: 0.0,
        stderr_xi: 0.0,
        samples: 0,
        seed: None,
    }
}

fn report_doc(r: &PrecedenceReport) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("eta".into(), r.eta.into());
    m.insert("xi".into(), r.xi.into());
    m.insert("strict".into(), r.strict().into());
    m.insert("stderr_eta".into(), r.stderr_eta.into());
    m.insert("stderr_xi".into(), r.stderr_xi.into());
    m
}

fn run_eta(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let input: PrecedenceInput = ctx.read_input()?;
    let mut outcome = Outcome::Done;
    let (report, holds) = match (ctx.cli.gamma, &input.g1, &input.g2, input.method) {
        (Some(gamma), Some(g1), Some(g2), MethodChoice::Auto) if ctx.cli.command == Command::Eta => {
            match sp_level(&input.copula, g1, g2, gamma, ctx.cli.samples, ctx.cli.seed) {
                Ok(level) => (level.report, Some(Value::Bool(level.holds))),
                Err(PrecedenceError::Inconclusive { report, .. }) => {
                    outcome = Outcome::Inconclusive;
                    (report, Some(Value::String("inconclusive".into())))
                }
                Err(e) => return Err(e.into()),
            }
        }
        (Some(gamma), ..) if ctx.cli.command == Command::Eta => {
            if !(0.0..=1.0).contains(&gamma) {
                return Err(PrecedenceError::InvalidGamma(gamma).into());
            }
            let r = precedence_report(ctx, &input)?;
            let holds = if r.method == Method::MonteCarlo && (r.eta - gamma).abs() <= 3.0 * r.stderr_eta {
                outcome = Outcome::Inconclusive;
                Value::String("inconclusive".into())
            } else {
                Value::Bool(r.eta >= gamma - r.stderr_eta.max(1e-12))
            };
            (r, Some(holds))
        }
        _ => (precedence_report(ctx, &input)?, None),
    };
    let meta = ctx.meta(report.samples, method_name(report.method));
    match ctx.cli.output {
        Output::Json => {
            let mut doc = report_doc(&report);
            if let (Some(g), Some(h)) = (ctx.cli.gamma, holds.clone()) {
                doc.insert("gamma".into(), g.into());
                doc.insert("holds".into(), h);
            }
            ctx.emit_json(Value::Object(doc), meta);
        }
        Output::Csv => {
            let row = format!(
                "{},{},{},{}",
                g12(report.eta),
                g12(report.xi),
                g12(report.stderr_eta),
                g12(report.stderr_xi)
            );
            ctx.emit_csv(meta, "eta,xi,stderr_eta,stderr_xi", [row]);
        }
    }
    Ok(outcome)
}

fn run_classify(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let input: CopulaInput = ctx.read_input()?;
    let gamma = ctx.cli.gamma.ok_or_else(|| CliError::Input("classify needs --gamma".into()))?;
    let verdict = classify(&input.copula, gamma, ctx.cli.tol)?;
    let meta = ctx.meta(0, "closed_form");
    match ctx.cli.output {
        Output::Json => ctx.emit_json(&verdict, meta),
        Output::Csv => {
            let row = format!(
                "{},{},{},{},{}",
                g12(verdict.gamma),
                verdict.in_l_gamma,
                verdict.in_b_gamma,
                g12(verdict.eta_value),
                g12(verdict.tolerance)
            );
            ctx.emit_csv(meta, "gamma,in_L_gamma,in_B_gamma,eta_value,tolerance", [row]);
        }
    }
    Ok(Outcome::Done)
}

fn run_order(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let input: OrderInput = ctx.read_input()?;
    let result = check_order(ctx.cli.relation, &input.g1, &input.g2, ctx.cli.grid)
        .map_err(|e| CliError::Library(e.to_string()))?;
    let meta = ctx.meta(0, "grid");
    match ctx.cli.output {
        Output::Json => ctx.emit_json(&result, meta),
        Output::Csv => {
            let w = result.witness.map(g12).unwrap_or_default();
            let row = format!("{},{},{},{}", result.relation, result.holds, w, result.grid_size);
            ctx.emit_csv(meta, "relation,holds,witness,grid_size", [row]);
        }
    }
    Ok(Outcome::Done)
}

fn run_rank(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let input: RankInput = ctx.read_input()?;
    let table = rank_prospects(&input.target, &input.prospects, ctx.cli.samples, ctx.cli.seed, ctx.cli.tol)
        .map_err(|e| CliError::Library(e.to_string()))?;
    let meta = ctx.meta(ctx.cli.samples as u64, "best_available");
    match ctx.cli.output {
        Output::Json => ctx.emit_json(&table, meta),
        Output::Csv => {
            let rows: Vec<String> = table
                .rows
                .iter()
                .map(|r| {
                    let kind = serde_json::to_value(r.kind).expect("kind");
                    format!("{},{},{},{}", r.name, g12(r.eta_or_bound), kind.as_str().unwrap_or(""), g12(r.stderr))
                })
                .collect();
            ctx.emit_csv(meta, "name,eta_or_bound,kind,stderr", rows);
        }
    }
    Ok(Outcome::Done)
}

fn run_sample(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let input: CopulaInput = ctx.read_input()?;
    let n = ctx.cli.samples;
    if n == 0 {
        return Err(CliError::Input("--samples must be at least 1".into()));
    }
    let draws = copula_sample(&input.copula, ctx.cli.seed, n);
    let meta = ctx.meta(n as u64, "sampling");
    match ctx.cli.output {
        Output::Json => ctx.emit_json(&draws, meta),
        Output::Csv => {
            let rows = draws.iter().map(|s| {
                let c = match s.component {
                    Component::AbsolutelyContinuous => "absolutely_continuous",
                    Component::Singular => "singular",
                };
                format!("{},{},{},{}", g12(s.u), g12(s.v), c, s.structural_tie)
            });
            let rows: Vec<String> = rows.collect();
            ctx.emit_csv(meta, "u,v,component,structural_tie", rows);
        }
    }
    Ok(Outcome::Done)
}

fn run_verify(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let checks = verify_all(ctx.cli.samples, ctx.cli.seed).map_err(|e| CliError::Library(e.to_string()))?;
    let all = checks.iter().all(|c| c.passed);
    let meta = ctx.meta(ctx.cli.samples as u64, "oracle");
    match ctx.cli.output {
        Output::Json => {
            let mut doc = Map::new();
            doc.insert("all_passed".into(), all.into());
            doc.insert("checks".into(), serde_json::to_value(&checks).expect("checks"));
            ctx.emit_json(Value::Object(doc), meta);
        }
        Output::Csv => {
            let rows: Vec<String> = checks
                .iter()
                .map(|c| format!("{},{},{},{},{}", c.name, g12(c.observed), g12(c.expected), g12(c.tolerance), c.passed))
                .collect();
            ctx.emit_csv(meta, "name,observed,expected,tolerance,passed", rows);
        }
    }
    Ok(if all { Outcome::Done } else { Outcome::ChecksFailed })
}

fn run_curve(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    let input: CurveInput = ctx.optional_input()?.unwrap_or(CurveInput {
        family: CurveFamily::Gaussian,
        g1: None,
        g2: None,
        from: None,
        to: None,
        step: None,
    });
    let g1 = input.g1.unwrap_or(Distribution::Normal { mean: 0.0, sd: 1.0 });
    let g2 = input.g2.unwrap_or(Distribution::Normal { mean: 1.0, sd: 1.0 });
    let (from, to, step) = match input.family {
        CurveFamily::Gaussian => (input.from.unwrap_or(-0.9), input.to.unwrap_or(0.9), input.step.unwrap_or(0.1)),
        CurveFamily::Shuffle => (input.from.unwrap_or(0.1), input.to.unwrap_or(1.0), input.step.unwrap_or(0.1)),
    };
    if step.is_nan() || step <= 0.0 || from.is_nan() || to.is_nan() || to < from {
        return Err(CliError::Input("curve needs step > 0 and to >= from".into()));
    }
    let count = ((to - from) / step + 1e-9).floor() as usize + 1;
    let mut points = Vec::with_capacity(count);
    let mut method = None;
    for k in 0..count {
        // round to the step's decimal grid so parameters print cleanly
        let p = ((from + k as f64 * step) * 1e12).round() / 1e12;
        let spec = match input.family {
            CurveFamily::Gaussian => CopulaSpec::gaussian(p),
            CurveFamily::Shuffle => CopulaSpec::shuffle(p),
        }
        .map_err(|e| CliError::Input(e.to_string()))?;
        let r = eta_best(&spec, &g1, &g2, ctx.cli.samples, ctx.cli.seed, ctx.cli.tol)?;
        method.get_or_insert(r.method);
        points.push((p, r));
    }
    let samples = points.iter().map(|(_, r)| r.samples).max().unwrap_or(0);
    let meta = ctx.meta(samples, method.map_or("none", method_name));
    match ctx.cli.output {
        Output::Json => {
            let pts: Vec<Value> = points
                .iter()
                .map(|(p, r)| serde_json::json!({"parameter": p, "eta": r.eta, "stderr_eta": r.stderr_eta}))
                .collect();
            let mut doc = Map::new();
            doc.insert("points".into(), pts.into());
            ctx.emit_json(Value::Object(doc), meta);
        }
        Output::Csv => {
            let rows: Vec<String> = points
                .iter()
                .map(|(p, r)| format!("{},{},{}", g12(*p), g12(r.eta), g12(r.stderr_eta)))
                .collect();
            ctx.emit_csv(meta, "parameter,eta,stderr_eta", rows);
        }
    }
    Ok(Outcome::Done)
}

fn workers_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .ok_or_else(|| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn dispatch(ctx: &mut Ctx) -> Result<Outcome, CliError> {
    match ctx.cli.command {
        Command::Eta | Command::Xi => run_eta(ctx),
        Command::Classify => run_classify(ctx),
        Command::Order => run_order(ctx),
        Command::Rank => run_rank(ctx),
        Command::Sample => run_sample(ctx),
        Command::Verify => run_verify(ctx),
        Command::Curve => run_curve(ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let workers = match workers_from_env() {
        Ok(w) => w,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let pool = sp_copula::rng::pool(Some(workers));
    let mut ctx = Ctx { cli, workers, out: Vec::new() };
    let result = pool.install(|| dispatch(&mut ctx));
    let _ = io::stdout().write_all(&ctx.out);
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive) => ExitCode::from(2),
        Ok(Outcome::ChecksFailed) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
