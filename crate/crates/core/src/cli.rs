//! The `bio` command line: argument types and the command runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::ccg::{solve_two_stage, CcgOptions, SubproblemMode};
use crate::error::{Error, Result};
use crate::formulations::{AlliedChannels, Allocation, BioConfig};
use crate::instance::{
    load_instance, read_json, save_instance, validate_instance, write_json, Instance, Violation,
};
use crate::simulator::{
    batch_evaluate, run_rolling_horizon, write_kpi_ledger, PolicyKind, PolicySpec, SimulationConfig,
};
use crate::synthetic::{generate_synthetic, SyntheticParams};
use crate::tuning::{scenario_profits, split_scenarios, tune_lambda, ScoringObjective, TuneMethod};
use crate::uncertainty::{
    load_means, load_uncertainty_set, sample_scenarios, ChannelBounds, DemandScenario,
    SampleFamily, UncertaintySet,
};

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "bio",
    version,
    about = "Optimistic-robust omnichannel inventory positioning"
)]
pub struct Cli {
    /// Directory that receives reports and the run manifest.
    #[arg(long, env = "BIO_OUT_DIR", default_value = "bio-out", global = true)]
    pub out_dir: PathBuf,
    /// Worker threads for scenario evaluation and grid search.
    #[arg(long, env = "BIO_THREADS", global = true)]
    pub threads: Option<usize>,
    /// Replace existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check an instance (and optionally an uncertainty set) for violations.
    Validate(ValidateArgs),
    /// Solve the two-stage model by column-and-constraint generation.
    Solve(SolveArgs),
    /// Choose λ by out-of-sample score.
    Tune(TuneArgs),
    /// Monte-Carlo profit distribution of a fixed allocation.
    Evaluate(EvaluateArgs),
    /// Rolling-horizon simulation with per-order fulfillment.
    Simulate(SimulateArgs),
    /// Write a seeded synthetic instance and its weekly means.
    GenInstance(GenInstanceArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub set: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    ExactMip,
    AlternatingHeuristic,
    AhThenMip,
}

impl From<ModeArg> for SubproblemMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::ExactMip => SubproblemMode::ExactMip,
            ModeArg::AlternatingHeuristic => SubproblemMode::AlternatingHeuristic,
            ModeArg::AhThenMip => SubproblemMode::AhThenMip,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    /// Optimism weight in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    pub lambda: f64,
    /// Apply λ to online demand as well as walk-in demand.
    #[arg(long)]
    pub both_channels: bool,
    #[arg(long)]
    pub integer: bool,
    #[arg(long)]
    pub repositioning: bool,
}

impl ModelArgs {
    fn config(&self) -> BioConfig {
        BioConfig {
            allied_channels: if self.both_channels {
                AlliedChannels::Both
            } else {
                AlliedChannels::WalkinOnly
            },
            integer_allocations: self.integer,
            repositioning: self.repositioning,
            ..BioConfig::with_lambda(self.lambda)
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CcgArgs {
    #[arg(long, default_value_t = CcgOptions::default().epsilon)]
    pub epsilon: f64,
    #[arg(long, default_value_t = CcgOptions::default().delta)]
    pub delta: f64,
    #[arg(long, default_value_t = CcgOptions::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = CcgOptions::default().max_seconds)]
    pub max_seconds: f64,
    #[arg(long, value_enum, default_value = "exact-mip")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = CcgOptions::default().heuristic_rounds)]
    pub heuristic_rounds: usize,
    /// Branch-and-bound node cap per subproblem.
    #[arg(long)]
    pub node_limit: Option<usize>,
}

impl CcgArgs {
    fn options(&self) -> CcgOptions {
        CcgOptions {
            epsilon: self.epsilon,
            delta: self.delta,
            max_iterations: self.max_iterations,
            max_seconds: self.max_seconds,
            subproblem_mode: self.mode.into(),
            heuristic_rounds: self.heuristic_rounds,
            subproblem_node_limit: self.node_limit,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    /// Instance file; repeat together with --set for several SKUs.
    #[arg(long, required = true)]
    pub instance: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub set: Vec<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub ccg: CcgArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyArg {
    Poisson,
    Uniform,
}

impl From<FamilyArg> for SampleFamily {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Poisson => SampleFamily::Poisson,
            FamilyArg::Uniform => SampleFamily::Uniform,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SampleArgs {
    /// Mean demand file, same layout as a scenario.
    #[arg(long)]
    pub means: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "poisson")]
    pub family: FamilyArg,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Grid,
    Bisection,
}

#[derive(Debug, Args, Serialize)]
pub struct TuneArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub set: PathBuf,
    #[command(flatten)]
    pub sampling: SampleArgs,
    /// Share of samples held out from selection.
    #[arg(long, default_value_t = 0.3)]
    pub holdout_fraction: f64,
    /// mean, worst, best or cvar:<level>.
    #[arg(long, default_value = "mean")]
    pub objective: ObjectiveArg,
    #[arg(long, value_enum, default_value = "grid")]
    pub method: MethodArg,
    /// Comma-separated λ grid.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub ccg: CcgArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Allocation file, or a solve report containing one.
    #[arg(long)]
    pub allocation: PathBuf,
    /// Needed for uniform sampling.
    #[arg(long)]
    pub set: Option<PathBuf>,
    #[command(flatten)]
    pub sampling: SampleArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub instance: PathBuf,
    /// Weekly mean demand (one period).
    #[arg(long)]
    pub means: PathBuf,
    /// pure_ro, bio:<λ>, basestock or pwl[:<discount>]; repeatable.
    #[arg(long = "policy")]
    pub policies: Vec<PolicyArg>,
    #[arg(long, default_value_t = SimulationConfig::default().weeks)]
    pub weeks: usize,
    #[arg(long, default_value_t = SimulationConfig::default().replications)]
    pub replications: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Planning look-ahead in weeks.
    #[arg(long, default_value_t = 2)]
    pub horizon: usize,
    #[arg(long)]
    pub credit_excess: bool,
    /// Keep per-day records in results.json.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GenInstanceArgs {
    #[arg(long, default_value_t = 5)]
    pub stores: usize,
    #[arg(long, default_value_t = 2)]
    pub dcs: usize,
    #[arg(long, default_value_t = 3)]
    pub zones: usize,
    #[arg(long, default_value_t = 2)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Full generator parameters as JSON; counts given on the command line
    /// still apply.
    #[arg(long)]
    pub params: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ObjectiveArg(pub ScoringObjective);

impl FromStr for ObjectiveArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let obj = match s {
            "mean" => ScoringObjective::Mean,
            "worst" => ScoringObjective::WorstCase,
            "best" => ScoringObjective::BestCase,
            _ => match s.strip_prefix("cvar:") {
                Some(level) => ScoringObjective::Cvar {
                    level: level.parse().map_err(|e| format!("cvar level: {e}"))?,
                },
                None => return Err(format!("unknown objective {s:?}")),
            },
        };
        Ok(ObjectiveArg(obj))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PolicyArg(pub PolicyKind);

impl FromStr for PolicyArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (name, value) = match s.split_once(':') {
            Some((n, v)) => (n, Some(v.parse::<f64>().map_err(|e| format!("{s}: {e}"))?)),
            None => (s, None),
        };
        let kind = match (name, value) {
            ("pure_ro", None) => PolicyKind::Bio {
                lambda: 0.0,
                integer: false,
                options: None,
            },
            ("bio", Some(lambda)) => PolicyKind::Bio {
                lambda,
                integer: false,
                options: None,
            },
            ("basestock", None) => PolicyKind::Basestock,
            ("pwl", v) => PolicyKind::Pwl {
                discount: v.unwrap_or(0.5),
            },
            _ => return Err(format!("unknown policy {s:?}")),
        };
        Ok(PolicyArg(kind))
    }
}

/// Collects output paths, refusing to clobber files unless forced.
struct Output {
    dir: PathBuf,
    force: bool,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path, force: bool) -> Self {
        Self {
            dir: dir.to_path_buf(),
            force,
            files: Vec::new(),
        }
    }

    fn path(&mut self, name: &str) -> Result<PathBuf> {
        let p = self.dir.join(name);
        if p.exists() && !self.force {
            return Err(Error::InvalidArgument(format!(
                "{} already exists; pass --force to overwrite",
                p.display()
            )));
        }
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent.display().to_string(), e))?;
        }
        self.files.push(name.to_string());
        Ok(p)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name)?;
        write_json(value, &p)
    }

    fn csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<()> {
        let p = self.path(name)?;
        let mut w = csv::Writer::from_path(&p)?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush().map_err(|e| Error::io(p.display().to_string(), e))
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    run: &'a Cli,
    files: &'a [String],
}

/// What a finished command reports back to the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// Human-readable summary lines.
    pub lines: Vec<String>,
    /// Nonzero when the command ran but found problems (validation).
    pub exit_code: u8,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    if let Some(n) = cli.threads {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let mut out = Output::new(&cli.out_dir, cli.force);
    // Fail before any work if the manifest would be clobbered.
    let manifest_path = out.path("manifest.json")?;
    out.files.clear();
    let outcome = match &cli.command {
        Command::Validate(a) => validate(a, &mut out)?,
        Command::Solve(a) => solve(a, &mut out)?,
        Command::Tune(a) => tune(a, &mut out)?,
        Command::Evaluate(a) => evaluate(a, &mut out)?,
        Command::Simulate(a) => simulate(a, &mut out)?,
        Command::GenInstance(a) => gen_instance(a, &mut out)?,
    };
    let manifest = Manifest {
        tool: "bio",
        version: env!("CARGO_PKG_VERSION"),
        run: cli,
        files: &out.files,
    };
    write_json(&manifest, &manifest_path)?;
    Ok(outcome)
}

fn validate(a: &ValidateArgs, out: &mut Output) -> Result<Outcome> {
    let inst = load_instance(&a.instance)?;
    let mut violations = validate_instance(&inst);
    if let Some(p) = &a.set {
        let set = load_uncertainty_set(p)?;
        if let Err(e) = set.check().and_then(|()| set.check_against(&inst)) {
            violations.push(Violation {
                rule: "uncertainty_set",
                indices: vec![],
                message: e.to_string(),
            });
        }
    }
    out.json("violations.json", &violations)?;
    let mut lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    lines.push(format!("{} violation(s)", violations.len()));
    Ok(Outcome {
        lines,
        exit_code: u8::from(!violations.is_empty()),
    })
}

fn solve(a: &SolveArgs, out: &mut Output) -> Result<Outcome> {
    if a.instance.len() != a.set.len() {
        return Err(Error::InvalidArgument(format!(
            "{} instance(s) but {} set(s)",
            a.instance.len(),
            a.set.len()
        )));
    }
    let cfg = a.model.config();
    let options = a.ccg.options();
    let multi = a.instance.len() > 1;
    let mut lines = Vec::new();
    for (k, (ip, sp)) in a.instance.iter().zip(&a.set).enumerate() {
        let inst = load_instance(ip)?;
        let set = load_uncertainty_set(sp)?;
        let prefix = if multi {
            format!("sku{k}/")
        } else {
            String::new()
        };
        let report = match solve_two_stage(&inst, &set, &cfg, &options) {
            Ok(r) => r,
            Err(Error::CcgFailed { partial, source }) => {
                out.json(&format!("{prefix}partial_report.json"), &partial)?;
                return Err(Error::CcgFailed { partial, source });
            }
            Err(e) => return Err(e),
        };
        out.json(&format!("{prefix}report.json"), &report)?;
        out.csv(&format!("{prefix}trace.csv"), &report.trace)?;
        let label = if multi {
            format!("{}: ", ip.display())
        } else {
            String::new()
        };
        lines.push(format!("{label}objective {}", report.objective));
        lines.push(format!("{label}allocation {:?}", report.allocation.x));
        lines.push(format!(
            "{label}bounds [{}, {}] gap {:.3e} after {} iteration(s), {:?}",
            report.lower_bound,
            report.upper_bound,
            report.gap(),
            report.iterations,
            report.termination
        ));
    }
    Ok(Outcome {
        lines,
        exit_code: 0,
    })
}

fn draw(
    inst: &Instance,
    set: Option<&UncertaintySet>,
    s: &SampleArgs,
) -> Result<Vec<DemandScenario>> {
    let means = load_means(&s.means)?;
    let fallback;
    let set = match set {
        Some(set) => set,
        None => {
            fallback = UncertaintySet {
                walkin: ChannelBounds::zero(inst.horizon, inst.num_nodes()),
                online: ChannelBounds::zero(inst.horizon, inst.num_zones()),
            };
            if matches!(s.family, FamilyArg::Uniform) {
                return Err(Error::InvalidArgument(
                    "uniform sampling needs --set".into(),
                ));
            }
            &fallback
        }
    };
    Ok(sample_scenarios(&means, set, s.samples, s.seed, s.family.into())?.scenarios)
}

fn tune(a: &TuneArgs, out: &mut Output) -> Result<Outcome> {
    let inst = load_instance(&a.instance)?;
    let set = load_uncertainty_set(&a.set)?;
    if !(0.0..1.0).contains(&a.holdout_fraction) {
        return Err(Error::InvalidArgument(
            "holdout fraction must lie in [0, 1)".into(),
        ));
    }
    let scenarios = draw(&inst, Some(&set), &a.sampling)?;
    let (validation, holdout) = split_scenarios(&scenarios, 1.0 - a.holdout_fraction);
    let method = match (a.method, &a.grid) {
        (MethodArg::Grid, Some(values)) => TuneMethod::Grid {
            values: values.clone(),
        },
        (MethodArg::Grid, None) => TuneMethod::default_grid(),
        (MethodArg::Bisection, _) => TuneMethod::Bisection,
    };
    let r = tune_lambda(
        &inst,
        &set,
        validation,
        holdout,
        &a.objective.0,
        &method,
        &a.model.config(),
        &a.ccg.options(),
    )?;
    out.json("tune.json", &r)?;
    out.csv("curve.csv", &r.curve)?;
    let mut lines = vec![format!("lambda {} score {}", r.lambda, r.score)];
    if let Some(h) = r.holdout_score {
        lines.push(format!("holdout score {h}"));
    }
    Ok(Outcome {
        lines,
        exit_code: 0,
    })
}

fn read_allocation(path: &Path) -> Result<Allocation> {
    let value: serde_json::Value = read_json(path)?;
    let inner = value.get("allocation").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        line: 0,
        column: 0,
        message: e.to_string(),
    })
}

#[derive(Serialize)]
struct ProfitRow {
    scenario: usize,
    profit: f64,
}

fn evaluate(a: &EvaluateArgs, out: &mut Output) -> Result<Outcome> {
    let inst = load_instance(&a.instance)?;
    let alloc = read_allocation(&a.allocation)?;
    let set = a.set.as_ref().map(load_uncertainty_set).transpose()?;
    let scenarios = draw(&inst, set.as_ref(), &a.sampling)?;
    let profits = scenario_profits(&inst, &alloc, &scenarios)?;
    let stats = batch_evaluate(&inst, &alloc, &scenarios)?;
    out.csv(
        "profits.csv",
        profits
            .iter()
            .enumerate()
            .map(|(scenario, &profit)| ProfitRow { scenario, profit }),
    )?;
    out.json("stats.json", &stats)?;
    Ok(Outcome {
        lines: vec![format!(
            "mean {} (se {}) min {} p05 {} p10 {} median {} max {}",
            stats.mean, stats.std_error, stats.min, stats.p05, stats.p10, stats.median, stats.max
        )],
        exit_code: 0,
    })
}

fn simulate(a: &SimulateArgs, out: &mut Output) -> Result<Outcome> {
    let inst = load_instance(&a.instance)?;
    let means = load_means(&a.means)?;
    let kinds: Vec<PolicyKind> = if a.policies.is_empty() {
        ["pure_ro", "bio:0.1", "basestock", "pwl:0.5"]
            .iter()
            .map(|s| s.parse::<PolicyArg>().expect("built-in policy").0)
            .collect()
    } else {
        a.policies.iter().map(|p| p.0.clone()).collect()
    };
    let cfg = SimulationConfig {
        weeks: a.weeks,
        replications: a.replications,
        seed: a.seed,
        credit_excess: a.credit_excess,
        record_trace: a.trace,
        ..SimulationConfig::default()
    };
    let mut results = Vec::new();
    let mut lines = Vec::new();
    for kind in kinds {
        let spec = PolicySpec {
            kind,
            horizon: a.horizon,
        };
        let r = run_rolling_horizon(&inst, &means, &spec, &cfg)?;
        lines.push(format!(
            "{}: realized profit {} ± {}, service level {}",
            r.policy,
            r.mean.realized_profit,
            r.std_error.realized_profit,
            r.mean.total_service_level
        ));
        results.push(r);
    }
    let ledger = out.path("kpi.csv")?;
    write_kpi_ledger(&ledger, &results)?;
    out.json("results.json", &results)?;
    Ok(Outcome {
        lines,
        exit_code: 0,
    })
}

fn gen_instance(a: &GenInstanceArgs, out: &mut Output) -> Result<Outcome> {
    let base: SyntheticParams = match &a.params {
        Some(p) => read_json(p)?,
        None => SyntheticParams::default(),
    };
    let params = SyntheticParams {
        stores: a.stores,
        dcs: a.dcs,
        zones: a.zones,
        horizon: a.horizon,
        ..base
    };
    let s = generate_synthetic(&params, a.seed)?;
    let ip = out.path("instance.json")?;
    save_instance(&s.instance, &ip)?;
    out.json("means.json", &s.weekly_means)?;
    Ok(Outcome {
        lines: vec![format!(
            "{} nodes, {} zones, horizon {}",
            s.instance.num_nodes(),
            s.instance.num_zones(),
            s.instance.horizon
        )],
        exit_code: 0,
    })
}
