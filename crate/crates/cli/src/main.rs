mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bihari::bounds::{concave_bound, HCase, Variant};
use bihari::levy::generate;
use bihari::montecarlo::{
    cauchy_experiment, counterexample_mc, counterexample_ratio, run_trials, verify_concave_bound, verify_general_eta,
    verify_osgood, verify_random_integrator, within_sigmas, McReport, McSettings, Verdict,
};
use bihari::sde::{euler_simulate, ExitFlag};
use bihari::{EtaSpec, ExtReal, GTransform};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{
    levy_or_default, load_or_default, CauchyCheck, ConcaveCheck, CounterexampleCheck, GeneralEtaCheck, OsgoodCheck,
    RandomIntegratorCheck, SimulateConfig, CONFIG_SCHEMA_VERSION,
};
use output::{Format, Sink};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config schema 1)");

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed configs, invalid parameters.
    Usage(String),
}

impl From<bihari::Error> for CliError {
    fn from(e: bihari::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("i/o error: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "bihari", version = VERSION, about = "Stochastic Bihari-LaSalle bounds and their Monte Carlo checks")]
struct Cli {
    /// Worker threads for trial loops; 0 uses every core. Never changes results.
    #[arg(long, global = true, env = "BIHARI_WORKERS", default_value_t = 0)]
    workers: usize,
    /// Output format for tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write the primary output here instead of stdout (metadata goes to `<out>.meta.json`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum EtaName {
    Linear,
    Power,
    Xlog,
    Square,
    Xarctan,
}

#[derive(Args)]
struct EtaArgs {
    #[arg(long, value_enum, default_value_t = EtaName::Linear)]
    eta: EtaName,
    /// Scale `k` of eta.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    /// Exponent of the power nonlinearity.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// JSON file holding an eta spec; overrides --eta.
    #[arg(long)]
    eta_file: Option<PathBuf>,
}

impl EtaArgs {
    fn spec(&self) -> Result<EtaSpec, CliError> {
        if let Some(path) = &self.eta_file {
            return config::load(path);
        }
        Ok(match self.eta {
            EtaName::Linear => EtaSpec::linear(self.k)?,
            EtaName::Power => EtaSpec::power(self.k, self.a)?,
            EtaName::Xlog => EtaSpec::xlog(self.k)?,
            EtaName::Square => EtaSpec::square(self.k)?,
            EtaName::Xarctan => EtaSpec::xarctan(self.k)?,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    Pred,
    Nonneg,
    L1,
}

impl From<CaseArg> for HCase {
    fn from(c: CaseArg) -> Self {
        match c {
            CaseArg::Pred => HCase::Predictable,
            CaseArg::Nonneg => HCase::NonnegJumps,
            CaseArg::L1 => HCase::L1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Sup,
    Nosup,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Sup => Variant::Sup,
            VariantArg::Nosup => Variant::NoSup,
        }
    }
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Check {
    /// Sharp concave bound on ||X*_T||_p.
    #[value(alias = "thm31")]
    Concave,
    /// Weighted moment bound for random integrators.
    #[value(alias = "cor36")]
    RandomIntegrator,
    /// E[G(X_T)] and ||G(X*_T)||_p for general eta.
    #[value(alias = "thm38")]
    GeneralEta,
    Counterexample,
    Cauchy,
    Osgood,
}

impl Check {
    fn name(self) -> &'static str {
        match self {
            Check::Concave => "concave",
            Check::RandomIntegrator => "random-integrator",
            Check::GeneralEta => "general-eta",
            Check::Counterexample => "counterexample",
            Check::Cauchy => "cauchy",
            Check::Osgood => "osgood",
        }
    }

    fn default_trials(self) -> u64 {
        match self {
            Check::Concave | Check::RandomIntegrator | Check::GeneralEta => 100_000,
            Check::Counterexample => 1_000_000,
            Check::Cauchy => 2000,
            Check::Osgood => 10_000,
        }
    }
}

#[derive(Subcommand)]
enum TransformOp {
    /// G(x), or the p-transform when --p is given.
    Eval {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        x: Vec<f64>,
    },
    /// G^{-1}(y), or the inverse p-transform when --p is given.
    Invert {
        #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
        y: Vec<f64>,
    },
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate G = int_c^x du / eta(u) and its inverse.
    Transform {
        #[command(flatten)]
        eta: EtaArgs,
        #[arg(long, default_value_t = 1.0)]
        anchor: f64,
        #[arg(long)]
        p: Option<f64>,
        #[command(subcommand)]
        op: TransformOp,
    },
    /// Sharp concave bound on ||X*_T||_p for a deterministic integrator.
    Bound {
        #[command(flatten)]
        eta: EtaArgs,
        #[arg(long)]
        p: f64,
        #[arg(long = "case", value_enum, default_value_t = CaseArg::Pred)]
        hcase: CaseArg,
        #[arg(long, value_enum, default_value_t = VariantArg::Sup)]
        variant: VariantArg,
        #[arg(long)]
        h_norm: f64,
        #[arg(long)]
        a_t: f64,
    },
    /// Euler runs of a path-dependent SDE; one summary row per trial.
    Simulate {
        /// Preset name (`delay`) or a JSON file with `model` and optional `levy`.
        #[arg(long, default_value = "delay")]
        model: String,
        #[arg(long, default_value_t = 1)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "n", default_value_t = 256)]
        n_per_unit: u32,
        #[arg(long = "T", default_value_t = 1.0)]
        t_end: f64,
        /// Stop a run once |X| exceeds R / 3.
        #[arg(long = "cap-R", alias = "cap")]
        cap: Option<f64>,
        /// Emit every node (trial, t, x) instead of per-trial summaries.
        #[arg(long)]
        paths: bool,
    },
    /// Monte Carlo check of one inequality; prints a JSON report.
    Verify {
        #[arg(long, value_enum)]
        check: Check,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.99)]
        ci_level: f64,
    },
    /// Closed form and Monte Carlo table of the random-integrator counterexample.
    Counterexample {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        gamma: Vec<f64>,
        #[arg(long = "T", default_value_t = 2.0)]
        t_end: f64,
        /// Monte Carlo trials per row; 0 prints the closed form only.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exceedance frequencies of sup |X^(n) - X^(m)| for nested grids.
    Cauchy {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u32>>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long = "T")]
        t_end: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct ValueRow {
    input: f64,
    value: ExtReal,
}

#[derive(Serialize)]
struct BoundRow {
    value: ExtReal,
    theorem_tag: String,
    inner: f64,
    a_multiplier: f64,
    outer: f64,
    warnings: String,
}

#[derive(Serialize)]
struct SimRow {
    trial: u64,
    seed: u64,
    exit_flag: &'static str,
    cap_step: Option<usize>,
    #[serde(rename = "sup_abs_X")]
    sup_abs_x: f64,
    #[serde(rename = "X_T")]
    x_t: f64,
    jumps: usize,
}

#[derive(Serialize)]
struct NodeRow {
    trial: u64,
    t: f64,
    x: f64,
}

#[derive(Serialize)]
struct CounterexampleRow {
    p: f64,
    gamma: f64,
    #[serde(rename = "T")]
    t_end: f64,
    ratio_p_pow_p: f64,
    lower_bound: f64,
    mc_estimate: Option<f64>,
    mc_std_error: Option<f64>,
    verdict: Option<Verdict>,
}

#[derive(Serialize)]
struct VerifyOutput<'a, C: Serialize, R: Serialize> {
    check: &'static str,
    schema_version: u32,
    base_seed: u64,
    trials: u64,
    config: &'a C,
    verdict: Verdict,
    results: &'a R,
}

fn combine(verdicts: impl IntoIterator<Item = Verdict>) -> Verdict {
    let mut all = Verdict::Pass;
    for v in verdicts {
        match v {
            Verdict::Fail => return Verdict::Fail,
            Verdict::Inconclusive => all = Verdict::Inconclusive,
            Verdict::Pass => {}
        }
    }
    all
}

fn emit<C: Serialize, R: Serialize>(
    sink: &Sink,
    check: Check,
    settings: &McSettings,
    verdict: Verdict,
    config: &C,
    results: &R,
) -> Result<Verdict, CliError> {
    sink.json(&VerifyOutput {
        check: check.name(),
        schema_version: CONFIG_SCHEMA_VERSION,
        base_seed: settings.base_seed,
        trials: settings.trials,
        config,
        verdict,
        results,
    })?;
    Ok(verdict)
}

fn overall(reports: &[McReport]) -> Verdict {
    combine(reports.iter().map(|r| r.verdict))
}

fn verify(sink: &Sink, check: Check, config: Option<PathBuf>, s: McSettings) -> Result<Verdict, CliError> {
    let cfg = config.as_deref();
    match check {
        Check::Concave => {
            let c: ConcaveCheck = load_or_default(cfg)?;
            let r = [verify_concave_bound(&c.quadruple, c.p, c.hcase, c.variant, &s)?];
            emit(sink, check, &s, overall(&r), &c, &r)
        }
        Check::RandomIntegrator => {
            let c: RandomIntegratorCheck = load_or_default(cfg)?;
            let r = [verify_random_integrator(&c.quadruple, c.p, c.q, c.hcase, c.variant, &s)?];
            emit(sink, check, &s, overall(&r), &c, &r)
        }
        Check::GeneralEta => {
            let c: GeneralEtaCheck = load_or_default(cfg)?;
            let r = verify_general_eta(&c.quadruple, c.p, &s)?;
            emit(sink, check, &s, overall(&r), &c, &r)
        }
        Check::Counterexample => {
            let c: CounterexampleCheck = load_or_default(cfg)?;
            let r = [counterexample_mc(c.p, c.gamma, c.t_end, &s)?];
            emit(sink, check, &s, overall(&r), &c, &r)
        }
        Check::Osgood => {
            let c: OsgoodCheck = load_or_default(cfg)?;
            let r = verify_osgood(&c.quadruple, &c.ladder, c.delta, &s)?;
            emit(sink, check, &s, r.verdict, &c, &r)
        }
        Check::Cauchy => {
            let c: CauchyCheck = load_or_default(cfg)?;
            let model = c.model.build()?;
            let levy = levy_or_default(&c.model, &c.levy);
            let rows = cauchy_experiment(&model, &levy, &c.n_list, c.eps, c.t_end, &s)?;
            let ok = rows.windows(2).all(|w| within_sigmas((w[0].p_exceed, w[0].se), (w[1].p_exceed, w[1].se), 2.0));
            emit(sink, check, &s, if ok { Verdict::Pass } else { Verdict::Fail }, &c, &rows)
        }
    }
}

fn run(cli: Cli) -> Result<Verdict, CliError> {
    let sink = Sink::new(cli.out.clone(), cli.format);
    let workers = cli.workers;
    match cli.command {
        Command::Transform { eta, anchor, p, op } => {
            let t = GTransform::with_anchor(eta.spec()?, anchor)?;
            let rows: Vec<ValueRow> = match op {
                TransformOp::Eval { x } => x
                    .into_iter()
                    .map(|x| {
                        let value = match p {
                            Some(p) => t.tilde_g_p(p, x)?,
                            None => t.g(x)?,
                        };
                        Ok(ValueRow { input: x, value })
                    })
                    .collect::<Result<_, bihari::Error>>()?,
                TransformOp::Invert { y } => y
                    .into_iter()
                    .map(|y| {
                        let arg = ExtReal::from_f64(y);
                        let value = match p {
                            Some(p) => t.tilde_g_p_inverse(p, arg)?,
                            None => t.g_inverse(arg)?,
                        };
                        Ok(ValueRow { input: y, value })
                    })
                    .collect::<Result<_, bihari::Error>>()?,
            };
            sink.table(&rows)?;
        }
        Command::Bound { eta, p, hcase, variant, h_norm, a_t } => {
            let t = GTransform::new(eta.spec()?)?;
            let r = concave_bound(&t, p, hcase.into(), variant.into(), h_norm, a_t)?;
            for w in &r.warnings {
                eprintln!("warning: {w}");
            }
            sink.table(&[BoundRow {
                value: r.value,
                theorem_tag: r.theorem_tag,
                inner: r.constants_used.inner,
                a_multiplier: r.constants_used.a_multiplier,
                outer: r.constants_used.outer,
                warnings: r.warnings.join("; "),
            }])?;
        }
        Command::Simulate { model, trials, seed, n_per_unit, t_end, cap, paths } => {
            let c: SimulateConfig = match model.as_str() {
                "delay" | "example43" => SimulateConfig::default(),
                file => config::load(std::path::Path::new(file))?,
            };
            let model = c.model.build()?;
            let levy = levy_or_default(&c.model, &c.levy);
            let settings = McSettings::new(trials, seed).workers(workers);
            let runs = run_trials(&settings, |key| {
                let noise = generate(&levy, n_per_unit, t_end, key)?;
                Ok((euler_simulate(&model, &noise, cap)?, noise.total_events()))
            })?;
            if paths {
                let mut rows = Vec::new();
                for (trial, (run, _)) in runs.iter().enumerate() {
                    let dt = run.path.dt();
                    for (k, x) in run.path.scalars().into_iter().enumerate() {
                        rows.push(NodeRow { trial: trial as u64, t: k as f64 * dt, x });
                    }
                }
                sink.table(&rows)?;
            } else {
                let rows: Vec<SimRow> = runs
                    .iter()
                    .enumerate()
                    .map(|(trial, (run, jumps))| {
                        let (exit_flag, cap_step) = match run.exit {
                            ExitFlag::Completed => ("completed", None),
                            ExitFlag::Capped { step, .. } => ("capped", Some(step)),
                        };
                        SimRow {
                            trial: trial as u64,
                            seed: run.seed,
                            exit_flag,
                            cap_step,
                            x_t: run.path.terminal()[0],
                            sup_abs_x: run.path.running_sup_series().last().copied().unwrap_or(0.0),
                            jumps: *jumps,
                        }
                    })
                    .collect();
                sink.table(&rows)?;
            }
        }
        Command::Verify { check, config, trials, seed, ci_level } => {
            let mut settings = McSettings::new(trials.unwrap_or(check.default_trials()), seed).workers(workers);
            settings.ci_level = ci_level;
            return verify(&sink, check, config, settings);
        }
        Command::Counterexample { p, gamma, t_end, trials, seed } => {
            let mut rows = Vec::new();
            let mut verdicts = Vec::new();
            for g in gamma {
                let exact = counterexample_ratio(p, g, t_end)?;
                let mc = if trials > 0 {
                    Some(counterexample_mc(p, g, t_end, &McSettings::new(trials, seed).workers(workers))?)
                } else {
                    None
                };
                if let Some(r) = &mc {
                    verdicts.push(r.verdict);
                }
                rows.push(CounterexampleRow {
                    p,
                    gamma: g,
                    t_end,
                    ratio_p_pow_p: exact.ratio_p_pow_p,
                    lower_bound: exact.lower_bound_at_tn,
                    mc_estimate: mc.as_ref().map(|r| r.estimate),
                    mc_std_error: mc.as_ref().map(|r| r.std_error),
                    verdict: mc.as_ref().map(|r| r.verdict),
                });
            }
            sink.table(&rows)?;
            return Ok(combine(verdicts));
        }
        Command::Cauchy { config, n_list, eps, t_end, trials, seed } => {
            let mut c: CauchyCheck = load_or_default(config.as_deref())?;
            c.n_list = n_list.unwrap_or(c.n_list);
            c.eps = eps.unwrap_or(c.eps);
            c.t_end = t_end.unwrap_or(c.t_end);
            let model = c.model.build()?;
            let levy = levy_or_default(&c.model, &c.levy);
            let settings = McSettings::new(trials, seed).workers(workers);
            let rows = cauchy_experiment(&model, &levy, &c.n_list, c.eps, c.t_end, &settings)?;
            sink.table(&rows)?;
        }
    }
    Ok(Verdict::Pass)
}

/// 0 for PASS and INCONCLUSIVE, 1 for FAIL; usage errors exit with 2 elsewhere.
fn exit_code(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Fail => 1,
        Verdict::Pass | Verdict::Inconclusive => 0,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let sink = Sink::new(cli.out.clone(), cli.format);
    match run(cli) {
        Ok(verdict) => {
            if let Err(CliError::Usage(msg)) = sink.metadata(VERSION, started.elapsed()) {
                eprintln!("error: {msg}");
                return ExitCode::from(2);
            }
            ExitCode::from(exit_code(verdict))
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_map_to_exit_codes() {
        assert_eq!(exit_code(combine([Verdict::Pass, Verdict::Pass])), 0);
        assert_eq!(exit_code(combine([Verdict::Pass, Verdict::Inconclusive])), 0);
        assert_eq!(exit_code(combine([Verdict::Inconclusive, Verdict::Fail])), 1);
        assert_eq!(combine([]), Verdict::Pass);
    }

    #[test]
    fn version_names_the_schema() {
        assert!(VERSION.ends_with(&format!("(config schema {CONFIG_SCHEMA_VERSION})")));
    }

    #[test]
    fn flags_parse() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
