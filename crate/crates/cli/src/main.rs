use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser, Subcommand, ValueEnum};
use pec_core::planning::{
    expected_return, simulate, Availability, EpisodePolicy, PolicyArtifact, SimulationOptions, StationaryOptions,
};
use pec_core::projection::{project_with, ProjectionOptions};
use pec_core::{
    build_reward, compile_with, decompile, oracle_project, parse_domain, render_domain, solve_finite_horizon,
    solve_stationary, validate, CompileOptions, DecompileOptions, Domain, Exact, Mdp, PecMdp, PolicyTable, Query,
    RewardSpec, Scalar,
};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "pec", version, about = "Compile, query, plan and decompile PEC domains")]
struct Cli {
    /// Output format for reports written to standard output.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    /// Refuse to compile domains with more states than this.
    #[arg(long, global = true)]
    max_states: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Matrix,
    Oracle,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HorizonMode {
    Finite,
    Discounted,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a domain.
    Validate { domain: PathBuf },
    /// Compile a domain to the JSON MDP artifact.
    Compile {
        domain: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Answer projection queries.
    Project {
        domain: PathBuf,
        /// Target as `F=V[, F2=V2]@instant`.
        #[arg(long, required_unless_present = "queries")]
        query: Option<String>,
        /// Condition as `F=V[, F2=V2]@instant`.
        #[arg(long, requires = "query")]
        given: Option<String>,
        /// File with one `project "X" at I [given "Y" at J]` query per line.
        #[arg(long, conflicts_with = "query")]
        queries: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Engine::Matrix)]
        engine: Engine,
        /// Accept integer instants past the last declared one.
        #[arg(long)]
        extrapolate: bool,
    },
    /// Compute an optimal deterministic policy.
    Plan {
        domain: PathBuf,
        /// Reward specification (JSON).
        #[arg(long)]
        reward: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = HorizonMode::Finite)]
        horizon_mode: HorizonMode,
        /// Only offer situations with occurrence support at the state itself.
        #[arg(long)]
        strict: bool,
    },
    /// Translate a policy back into p-propositions.
    Decompile {
        domain: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Drop states reached with probability at most the threshold.
        #[arg(long, num_args = 0..=1, default_missing_value = "0")]
        prune: Option<f64>,
        /// Shorten conditions to minimal distinguishing assignments.
        #[arg(long)]
        minimize: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sample episodes and report empirical marginals.
    Simulate {
        domain: PathBuf,
        #[arg(long, default_value_t = 10_000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Follow this policy instead of the domain's own occurrences.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Also report returns under this reward specification.
        #[arg(long)]
        reward: Option<PathBuf>,
    },
}

/// Parse error already rendered against its source.
#[derive(Debug)]
struct Diagnostic(String);

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.0.trim_end())
    }
}

impl std::error::Error for Diagnostic {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Project {
        engine: Engine::Oracle,
        extrapolate: true,
        ..
    } = cli.command
    {
        Cli::command()
            .error(ErrorKind::ArgumentConflict, "--extrapolate is not supported by the oracle engine")
            .exit();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match e.downcast_ref::<Diagnostic>() {
                Some(d) => eprintln!("{d}"),
                None => eprintln!("error: {e:#}"),
            }
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Validate { domain } => {
            let d = load(domain)?;
            emit(
                cli.format,
                &ValidateReport {
                    valid: true,
                    states: d.state_count(),
                },
                |r| format!("{}: valid, {} states", domain.display(), r.states),
            )
        }
        Command::Compile { domain, output } => {
            let d = load(domain)?;
            let mdp: Mdp = compile_domain(cli, &d)?;
            let artifact = mdp.to_artifact();
            match output {
                Some(path) => {
                    write_json(path, &artifact)?;
                    let summary = CompileReport {
                        states: mdp.n_states(),
                        situations: mdp.n_situations(),
                        instants: mdp.horizon(),
                    };
                    emit(cli.format, &summary, |r| {
                        format!(
                            "{} states, {} situations, {} instants -> {}",
                            r.states,
                            r.situations,
                            r.instants,
                            path.display()
                        )
                    })
                }
                None => {
                    println!("{}", json(&artifact)?);
                    Ok(())
                }
            }
        }
        Command::Project {
            domain,
            query,
            given,
            queries,
            engine,
            extrapolate,
        } => {
            let d = load(domain)?;
            let list = match (query, queries) {
                (Some(q), _) => vec![Query::from_terms(q, given.as_deref())?],
                (None, Some(path)) => read(path)?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty() && !l.starts_with('#'))
                    .map(|l| Query::parse(l).map_err(anyhow::Error::from))
                    .collect::<Result<_>>()?,
                (None, None) => bail!("either --query or --queries is required"),
            };
            let answers = project_all(cli, &d, &list, *engine, *extrapolate)?;
            match cli.format {
                Format::Json => println!("{}", json(&answers)?),
                Format::Text if answers.len() == 1 => {
                    println!("{}", answers[0].probability);
                    println!("exact: {}", answers[0].exact);
                }
                Format::Text => {
                    for a in &answers {
                        println!("{}\t{}\t{}", a.query, a.probability, a.exact);
                    }
                }
            }
            Ok(())
        }
        Command::Plan {
            domain,
            reward,
            output,
            horizon_mode,
            strict,
        } => {
            let d = load(domain)?;
            let mdp: Mdp = compile_domain(cli, &d)?;
            let spec = load_reward(reward)?;
            let r = build_reward(&mdp, &spec)?;
            let availability = if *strict { Availability::Strict } else { Availability::PerStep };
            let (policy, values) = match horizon_mode {
                HorizonMode::Finite => {
                    let sol = solve_finite_horizon(&mdp, &r, availability);
                    (sol.policy, sol.values)
                }
                HorizonMode::Discounted => {
                    let opts = StationaryOptions {
                        availability,
                        ..StationaryOptions::default()
                    };
                    let sol = solve_stationary(&mdp, &r, &opts)?;
                    (sol.policy, vec![sol.values])
                }
            };
            let artifact = policy.to_artifact(&mdp, Some(&values));
            match output {
                Some(path) => {
                    write_json(path, &artifact)?;
                    let summary = PlanReport {
                        expected_return: decimal(expected_return(&mdp, &r, &policy)),
                    };
                    emit(cli.format, &summary, |s| {
                        format!("expected return {} -> {}", s.expected_return, path.display())
                    })
                }
                None => {
                    println!("{}", json(&artifact)?);
                    Ok(())
                }
            }
        }
        Command::Decompile {
            domain,
            policy,
            prune,
            minimize,
            output,
        } => {
            let d = load(domain)?;
            let mdp: Mdp = compile_domain(cli, &d)?;
            let artifact: PolicyArtifact = serde_json::from_str(&read(policy)?)
                .with_context(|| format!("{}: not a policy artifact", policy.display()))?;
            let table = PolicyTable::from_artifact(&artifact, &mdp)?;
            let set = decompile(
                &mdp,
                &table,
                DecompileOptions {
                    prune: *prune,
                    minimize: *minimize,
                },
            )?;
            let text = render_domain(&d.with_pprops(set.props()));
            match output {
                Some(path) => {
                    write(path, &text)?;
                    let summary = DecompileReport { pprops: set.len() };
                    emit(cli.format, &summary, |s| format!("{} p-propositions -> {}", s.pprops, path.display()))
                }
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
        Command::Simulate {
            domain,
            episodes,
            seed,
            policy,
            reward,
        } => {
            let d = load(domain)?;
            let mdp: Mdp = compile_domain(cli, &d)?;
            let table = match policy {
                Some(path) => {
                    let artifact: PolicyArtifact = serde_json::from_str(&read(path)?)
                        .with_context(|| format!("{}: not a policy artifact", path.display()))?;
                    Some(PolicyTable::from_artifact(&artifact, &mdp)?)
                }
                None => None,
            };
            let r = match reward {
                Some(path) => Some(build_reward(&mdp, &load_reward(path)?)?),
                None => None,
            };
            let report = simulate(
                &mdp,
                table.as_ref().map_or(EpisodePolicy::Domain, EpisodePolicy::Table),
                r.as_ref(),
                SimulationOptions {
                    episodes: *episodes,
                    seed: *seed,
                    keep_trajectories: false,
                },
            );
            let out = simulation_report(&d, &mdp, &report, *seed);
            emit(cli.format, &out, render_simulation)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &(json(value)? + "\n"))
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce(&T) -> String) -> Result<()> {
    match format {
        Format::Json => println!("{}", json(value)?),
        Format::Text => println!("{}", text(value)),
    }
    Ok(())
}

/// Parse and validate, rendering diagnostics against the source.
fn load(path: &Path) -> Result<Domain> {
    let src = read(path)?;
    let name = path.display().to_string();
    let d = parse_domain(&src).map_err(|e| Diagnostic(e.render(&src, &name)))?;
    let report = validate(&d);
    if !report.is_empty() {
        let lines: String = report.violations.iter().map(|v| format!("{name}: error: {v}\n")).collect();
        return Err(Diagnostic(lines).into());
    }
    Ok(d)
}

fn load_reward(path: &Path) -> Result<RewardSpec> {
    serde_json::from_str(&read(path)?).with_context(|| format!("{}: not a reward specification", path.display()))
}

fn compile_options(cli: &Cli) -> CompileOptions {
    let mut opts = CompileOptions::default();
    if let Some(n) = cli.max_states {
        opts.max_states = n;
    }
    opts
}

fn compile_domain<S: Scalar>(cli: &Cli, d: &Domain) -> Result<PecMdp<S>> {
    Ok(compile_with(d, &compile_options(cli))?)
}

/// `x` with 12 significant digits and no trailing zeros.
fn decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let places = (11 - magnitude).max(0) as usize;
    let s = format!("{x:.places$}");
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.') } else { &s };
    if s == "-0" { "0".into() } else { s.to_string() }
}

#[derive(Serialize)]
struct ValidateReport {
    valid: bool,
    states: usize,
}

#[derive(Serialize)]
struct CompileReport {
    states: usize,
    situations: usize,
    instants: usize,
}

#[derive(Serialize)]
struct PlanReport {
    expected_return: String,
}

#[derive(Serialize)]
struct DecompileReport {
    pprops: usize,
}

#[derive(Serialize)]
struct Answer {
    query: String,
    probability: String,
    exact: String,
}

fn project_all(cli: &Cli, d: &Domain, queries: &[Query], engine: Engine, extrapolate: bool) -> Result<Vec<Answer>> {
    let answer = |q: &Query, p: f64, exact: Exact| Answer {
        query: q.to_string(),
        probability: decimal(p),
        exact: exact.to_string(),
    };
    match engine {
        Engine::Matrix => {
            let fm: Mdp = compile_domain(cli, d)?;
            let em: PecMdp<Exact> = compile_domain(cli, d)?;
            let opts = ProjectionOptions { extrapolate };
            queries
                .iter()
                .map(|q| Ok(answer(q, project_with(&fm, q, opts)?, project_with(&em, q, opts)?)))
                .collect()
        }
        Engine::Oracle => queries
            .iter()
            .map(|q| Ok(answer(q, oracle_project::<f64>(d, q)?, oracle_project::<Exact>(d, q)?)))
            .collect(),
    }
}

#[derive(Serialize)]
struct Marginal {
    term: String,
    frequency: String,
}

#[derive(Serialize)]
struct Returns {
    mean: String,
    std_dev: String,
    std_error: String,
    min: String,
    max: String,
}

#[derive(Serialize)]
struct SimulationOutput {
    episodes: usize,
    seed: u64,
    marginals: Vec<Marginal>,
    returns: Option<Returns>,
}

fn simulation_report(
    d: &Domain,
    mdp: &Mdp,
    report: &pec_core::planning::SimulationReport,
    seed: u64,
) -> SimulationOutput {
    let mut marginals = Vec::new();
    for t in 0..mdp.horizon() {
        let label = mdp.instants.label_of(t).unwrap_or_default();
        for (i, f) in d.fluents.iter().enumerate() {
            for v in &f.values {
                let filter: Vec<bool> = (0..mdp.n_states())
                    .map(|s| mdp.codec.values_of(i)[mdp.codec.digit(s, i)] == *v)
                    .collect();
                marginals.push(Marginal {
                    term: format!("{}={v}@{label}", f.name),
                    frequency: decimal(report.frequency(&filter, t)),
                });
            }
        }
    }
    SimulationOutput {
        episodes: report.episodes,
        seed,
        marginals,
        returns: report.returns.map(|r| Returns {
            mean: decimal(r.mean),
            std_dev: decimal(r.variance.sqrt()),
            std_error: decimal(r.standard_error(report.episodes)),
            min: decimal(r.min),
            max: decimal(r.max),
        }),
    }
}

fn render_simulation(out: &SimulationOutput) -> String {
    let mut lines = vec![format!("episodes {} seed {}", out.episodes, out.seed)];
    lines.extend(out.marginals.iter().map(|m| format!("{}\t{}", m.term, m.frequency)));
    if let Some(r) = &out.returns {
        lines.push(format!(
            "return mean {} sd {} se {} min {} max {}",
            r.mean, r.std_dev, r.std_error, r.min, r.max
        ));
    }
    lines.join("\n")
}
