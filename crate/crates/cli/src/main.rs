//! `ultralocal`: run catalog scenarios, check gains and compare controllers.
//!
//! Exit codes: 0 success, 1 configuration error, 2 a simulation diverged,
//! 3 `gains check` found the gains not Hurwitz.

mod overrides;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use ultralocal::scenario::{builtin_ids, family_by_name, FAMILY_NAMES};
use ultralocal::{
    builtin_scenario, builtin_scenarios, compare_controllers, compute_metrics, hurwitz_cubic, pi_from_ip,
    pid_from_ipd, Error, GainSet, Metrics, MetricsConfig, Scenario,
};

#[derive(Parser)]
#[command(name = "ultralocal", version, about = "Model-free control over ultra-local models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate catalog scenarios or a scenario file; writes trace.csv and metrics.json.
    Run(RunArgs),
    /// Routh–Hurwitz check and the equivalent classic gains.
    Gains {
        #[command(subcommand)]
        command: GainsCommand,
    },
    /// Run a family of controllers on a shared plant and reference.
    Compare(CompareArgs),
    /// List the built-in scenarios.
    List,
    /// Print a built-in scenario as a TOML scenario file.
    Show {
        #[arg(long)]
        scenario: String,
    },
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory.
    #[arg(long, env = "ULTRALOCAL_OUT", default_value = "out")]
    out: PathBuf,
    /// Also write an SVG plot per run.
    #[arg(long)]
    svg: bool,
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// Catalog id, or `all`.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    scenario: Option<String>,
    /// TOML scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Noise seed applied to every scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Override, e.g. `--set K_D=0`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum GainsCommand {
    Check {
        #[arg(long)]
        kp: f64,
        #[arg(long, default_value_t = 0.0)]
        ki: f64,
        #[arg(long, default_value_t = 0.0)]
        kd: f64,
        #[arg(long, default_value_t = 10.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.01)]
        h: f64,
    },
}

#[derive(Args)]
struct CompareArgs {
    /// One of ip-vs-ipd, ipid-sweep, derivative-modes.
    #[arg(long)]
    family: String,
    /// Multiplier on the iPID sweep's K_I values.
    #[arg(long, default_value_t = 1.0)]
    ki_scale: f64,
    /// Keep only controllers whose label contains one of these strings.
    #[arg(long)]
    only: Vec<String>,
    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Gains {
            command: GainsCommand::Check { kp, ki, kd, alpha, h },
        } => cmd_gains_check(kp, ki, kd, alpha, h),
        Command::Compare(args) => cmd_compare(args),
        Command::List => {
            for s in builtin_scenarios::<f64>() {
                println!("{:>3}  {}", s.id, s.description);
            }
            Ok(0)
        }
        Command::Show { scenario } => cmd_show(&scenario),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn lookup(id: &str) -> Result<Scenario> {
    builtin_scenario(id).map_err(|e| match e {
        Error::UnknownScenario(_) => {
            anyhow::anyhow!("unknown scenario {id:?}; available: {}, all", builtin_ids().join(", "))
        }
        other => other.into(),
    })
}

fn load_config(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let scenario: Scenario = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(scenario)
}

fn pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        b = b.num_threads(n);
    }
    Ok(b.build()?)
}

#[derive(Serialize)]
struct RunSummary<'a> {
    scenario: &'a str,
    description: &'a str,
    controller: &'a str,
    gains: GainSet<f64>,
    seed: u64,
    metrics: &'a Metrics<f64>,
}

fn cmd_run(args: RunArgs) -> Result<u8> {
    // everything is parsed and validated before the first simulation starts
    let overrides = overrides::parse_all(&args.overrides)?;
    let mut scenarios = match (&args.scenario, &args.config) {
        (_, Some(path)) => vec![load_config(path)?],
        (Some(id), None) if id == "all" => builtin_scenarios(),
        (Some(id), None) => vec![lookup(id)?],
        (None, None) => bail!("either --scenario or --config is required"),
    };
    for s in &mut scenarios {
        if let Some(seed) = args.seed {
            s.noise.seed = seed;
        }
        overrides::apply(s, &overrides).with_context(|| format!("scenario {}", s.id))?;
    }
    let pool = pool(args.output.jobs)?;
    let cfg = MetricsConfig::default();
    let out = &args.output;
    let results: Vec<Result<bool>> = pool.install(|| {
        scenarios
            .par_iter()
            .map(|s| {
                let outcome = s.run()?;
                let metrics = compute_metrics(&outcome, s, &cfg);
                let dir = out.out.join(&s.id);
                output::write_trace(&dir.join("trace.csv"), &outcome.trace)?;
                let summary = RunSummary {
                    scenario: &s.id,
                    description: &s.description,
                    controller: s.controller.kind.label(),
                    gains: s.controller.gains,
                    seed: s.noise.seed,
                    metrics: &metrics,
                };
                output::write_json(&dir.join("metrics.json"), &summary)?;
                if out.svg {
                    let title = format!("Scenario {}: {}", s.id, s.description);
                    output::write_atomic(&dir.join("plot.svg"), output::trace_svg(&title, &outcome.trace).as_bytes())?;
                }
                println!(
                    "scenario {:>2}: rmse {:.5}, settling {}, oscillation {}{}  -> {}",
                    s.id,
                    metrics.rmse,
                    metrics.settling_time.map_or("-".into(), |t| format!("{t:.2} s")),
                    metrics.oscillation_index,
                    if metrics.diverged { ", DIVERGED" } else { "" },
                    dir.display()
                );
                Ok(metrics.diverged)
            })
            .collect()
    });
    let mut diverged = false;
    for r in results {
        diverged |= r?;
    }
    Ok(if diverged { 2 } else { 0 })
}

fn cmd_gains_check(kp: f64, ki: f64, kd: f64, alpha: f64, h: f64) -> Result<u8> {
    if ![kp, ki, kd, alpha, h].iter().all(|v| v.is_finite()) {
        bail!("gains, alpha and h must be finite");
    }
    let v = hurwitz_cubic(kp, ki, kd);
    if ki == 0.0 {
        println!("polynomial: s^2 + {kd} s + {kp}  (K_I = 0, root at the origin factored out)");
    } else {
        println!("polynomial: s^3 + {kd} s^2 + {kp} s + {ki}");
    }
    println!("hurwitz: {} (margin {})", if v.hurwitz { "yes" } else { "no" }, v.margin);
    for (name, value) in &v.conditions {
        println!("  {name}: {value}  {}", if *value > 0.0 { "ok" } else { "violated" });
    }
    if alpha != 0.0 && h > 0.0 {
        let pid = pid_from_ipd(kp, kd, alpha, h);
        let pi = pi_from_ip(kp, alpha, h);
        println!("classic PID matching the sampled iPD (alpha = {alpha}, h = {h}): k_p = {}, k_i = {}, k_d = {}", pid.kp, pid.ki, pid.kd);
        println!("classic PI matching the sampled iP: k_p = {}, k_i = {}", pi.kp, pi.ki);
        println!("note: these identities hold only between the sampled recursions at this h; they are not a recipe for transferring tunings.");
    } else {
        println!("classic gains not shown: they need alpha != 0 and h > 0");
    }
    Ok(if v.hurwitz { 0 } else { 3 })
}

fn cmd_compare(args: CompareArgs) -> Result<u8> {
    if !args.ki_scale.is_finite() {
        bail!("--ki-scale must be finite");
    }
    let Some(mut family) = family_by_name::<f64>(&args.family, args.ki_scale) else {
        bail!("unknown family {:?}; available: {}", args.family, FAMILY_NAMES.join(", "));
    };
    if !args.only.is_empty() {
        family.controllers.retain(|(label, _)| args.only.iter().any(|o| label.contains(o.as_str())));
    }
    if family.controllers.is_empty() {
        bail!("family {:?} has no controllers to compare", family.name);
    }
    for (label, spec) in &family.controllers {
        family.base.with_controller(spec.clone()).validate().with_context(|| format!("controller {label}"))?;
    }
    let pool = pool(args.output.jobs)?;
    let run = pool.install(|| compare_controllers(&family.base, &family.controllers, &MetricsConfig::default()))?;
    let dir = args.output.out.join(format!("compare-{}", family.name));
    let md = format!("# {} on scenario {}\n\n{}", family.name, family.base.id, run.report.to_markdown());
    output::write_atomic(&dir.join("report.md"), md.as_bytes())?;
    output::write_json(&dir.join("report.json"), &run.report)?;
    for (label, outcome) in &run.outcomes {
        let sub = dir.join(output::slug(label));
        output::write_trace(&sub.join("trace.csv"), &outcome.trace)?;
        if args.output.svg {
            output::write_atomic(&sub.join("plot.svg"), output::trace_svg(label, &outcome.trace).as_bytes())?;
        }
    }
    print!("{}", run.report.to_markdown());
    println!("-> {}", dir.display());
    Ok(0)
}

fn cmd_show(id: &str) -> Result<u8> {
    let s = lookup(id)?;
    print!("{}", toml::to_string(&s)?);
    Ok(0)
}
