use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rankdp::attack::{attack_error_probability, EpsilonSchedule, ScheduleKind};
use rankdp::audit::{empirical_epsilon, exact_epsilon};
use rankdp::harness::learn::{learn_cells, results_csv, run_learning, summarize, summary_csv, summary_path, LearnConfig};
use rankdp::harness::moments::stage_moments;
use rankdp::harness::synth::synthesize_dataset;
use rankdp::harness::utility::{log_grid, utility_cells, utility_csv, utility_table};
use rankdp::harness::{attack_csv, resolve_workers, with_workers, CellSeed, RunManifest};
use rankdp::learn::ingest::{read_ranking_csv, write_ranking_csv};
use rankdp::{cell_seed, Error, MallowsMechanism, MechanismKind, Ranking};

#[derive(Parser)]
#[command(name = "rankdp", version, about = "Ranking differential privacy experiments")]
struct Cli {
    /// Worker threads (overridden by RANKDP_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Privatize every ranking in a dataset CSV.
    Synthesize(SynthesizeArgs),
    /// Measure the privacy loss of the Mallows synthesizer.
    Audit(AuditArgs),
    /// Expected concordance of both mechanisms, Monte Carlo and closed form.
    Utility(UtilityArgs),
    /// Error probability of the central-ranking attack.
    Attack(AttackArgs),
    /// Train ranking models on privatized rankings.
    Learn(LearnArgs),
    /// Stage insertion moments, empirical against closed form.
    StageMoments(StageMomentsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mechanism {
    Mallows,
    Laplace,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Empirical,
}

#[derive(Clone, Copy, ValueEnum)]
enum Schedule {
    Fixed,
    Sqrt,
    Logsqrt,
}

#[derive(Args)]
struct SynthesizeArgs {
    /// Ranking CSV: user_id,item_0,...,item_{m-1}[,epsilon]
    #[arg(long)]
    input: PathBuf,
    /// Budget for rows without an epsilon column value.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum, default_value = "mallows")]
    mechanism: Mechanism,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "exact")]
    mode: Mode,
    /// Draws per arm (empirical mode).
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Base ranking as comma-separated ranks; identity when absent.
    #[arg(long, value_delimiter = ',')]
    base: Option<Vec<usize>>,
    /// JSON destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct UtilityArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    m_list: Vec<usize>,
    /// Comma-separated values, or log:LO:HI:COUNT.
    #[arg(long, value_parser = parse_grid)]
    epsilon_grid: EpsilonGrid,
    #[arg(long, default_value_t = 5000, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    m_list: Vec<usize>,
    #[arg(long, value_enum, default_value = "fixed")]
    schedule: Schedule,
    /// Epsilon for the fixed schedule, the scale factor otherwise.
    #[arg(long)]
    c: f64,
    #[arg(long, value_delimiter = ',', required = true)]
    n_grid: Vec<usize>,
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(1..))]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct LearnArgs {
    /// Experiment configuration, TOML or JSON.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct StageMomentsArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON destination; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct EpsilonGrid(Vec<f64>);

fn parse_grid(s: &str) -> Result<EpsilonGrid, String> {
    let values = if let Some(rest) = s.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err("expected log:LO:HI:COUNT".into());
        };
        let lo: f64 = lo.parse().map_err(|_| format!("bad bound '{lo}'"))?;
        let hi: f64 = hi.parse().map_err(|_| format!("bad bound '{hi}'"))?;
        let n: usize = n.parse().map_err(|_| format!("bad count '{n}'"))?;
        if !(lo > 0.0 && hi >= lo && n >= 1) {
            return Err("need 0 < LO <= HI and COUNT >= 1".into());
        }
        log_grid(lo, hi, n)
    } else {
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad epsilon '{v}'")))
            .collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() {
        return Err("empty grid".into());
    }
    Ok(EpsilonGrid(values))
}

fn kind(m: Mechanism) -> MechanismKind {
    match m {
        Mechanism::Mallows => MechanismKind::Mallows,
        Mechanism::Laplace => MechanismKind::Laplace,
    }
}

fn write_output(path: &Path, text: &str) -> rankdp::Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn emit_json(output: Option<&Path>, value: &impl serde::Serialize) -> rankdp::Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))? + "\n";
    match output {
        Some(p) => write_output(p, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}

fn manifest(command: &str, spec: serde_json::Value, start: Instant, cells: Vec<CellSeed>, output: &Path) -> rankdp::Result<()> {
    RunManifest::new(command, spec, start.elapsed().as_secs_f64(), cells).write_beside(output)
}

fn run(cli: Cli) -> rankdp::Result<()> {
    let workers = resolve_workers(cli.threads)?;
    let start = Instant::now();
    with_workers(workers, move || match cli.command {
        Command::Synthesize(a) => {
            let file = fs::File::open(&a.input).map_err(|e| Error::Io(format!("{}: {e}", a.input.display())))?;
            let data = read_ranking_csv(BufReader::new(file))?;
            let out = synthesize_dataset(&data, a.epsilon, kind(a.mechanism), a.seed)?;
            let mut buf = Vec::new();
            write_ranking_csv(&mut buf, &out)?;
            write_output(&a.output, &String::from_utf8(buf).expect("CSV output is UTF-8"))?;
            let spec = json!({
                "input": a.input, "epsilon": a.epsilon, "mechanism": kind(a.mechanism).name(),
                "seed": a.seed, "rows": out.len(),
            });
            let cells = vec![CellSeed { cell: "synthesize".into(), seed: a.seed }];
            manifest("synthesize", spec, start, cells, &a.output)
        }
        Command::Audit(a) => {
            let mech = MallowsMechanism::new(a.epsilon, a.m)?;
            let base = match &a.base {
                Some(r) => Ranking::new(r.clone())?,
                None => Ranking::identity(a.m)?,
            };
            if base.m() != a.m {
                return Err(Error::SizeMismatch { expected: a.m, actual: base.m() });
            }
            let report = match a.mode {
                Mode::Exact => exact_epsilon(&mech, &base)?,
                Mode::Empirical => empirical_epsilon(&mech, &base, a.samples, a.seed)?,
            };
            emit_json(a.output.as_deref(), &report)?;
            if let Some(out) = &a.output {
                let spec = json!({
                    "m": a.m, "epsilon": a.epsilon, "mode": report.mode, "samples": a.samples,
                    "seed": a.seed, "base": base,
                });
                let cells = vec![CellSeed { cell: "audit".into(), seed: a.seed }];
                manifest("audit", spec, start, cells, out)?;
            }
            Ok(())
        }
        Command::Utility(a) => {
            let rows = utility_table(&a.m_list, &a.epsilon_grid.0, a.reps as usize, a.seed)?;
            write_output(&a.output, &utility_csv(&rows))?;
            let spec = json!({
                "m_list": a.m_list, "epsilon_grid": a.epsilon_grid.0, "reps": a.reps, "seed": a.seed,
            });
            manifest("utility", spec, start, utility_cells(&rows), &a.output)
        }
        Command::Attack(a) => {
            let schedule_kind = match a.schedule {
                Schedule::Fixed => ScheduleKind::Fixed,
                Schedule::Sqrt => ScheduleKind::Sqrt,
                Schedule::Logsqrt => ScheduleKind::LogSqrt,
            };
            let schedule = EpsilonSchedule::new(schedule_kind, a.c)?;
            let mut rows = Vec::new();
            for &m in &a.m_list {
                rows.extend(attack_error_probability(m, schedule, &a.n_grid, a.reps as usize, a.seed)?);
            }
            write_output(&a.output, &attack_csv(&rows))?;
            let cells = rows
                .iter()
                .map(|r| CellSeed {
                    cell: format!("attack m={} N={} rep=0", r.m, r.n),
                    seed: cell_seed(a.seed, "attack", r.m, r.epsilon, r.n, 0),
                })
                .collect();
            let spec = json!({
                "m_list": a.m_list, "schedule": schedule.name(), "c": a.c, "n_grid": a.n_grid,
                "reps": a.reps, "seed": a.seed,
            });
            manifest("attack", spec, start, cells, &a.output)
        }
        Command::Learn(a) => {
            let cfg = LearnConfig::from_path(&a.config)?;
            let rows = run_learning(&cfg)?;
            write_output(&a.output, &results_csv(&rows))?;
            write_output(&summary_path(&a.output), &summary_csv(&summarize(&rows)))?;
            let spec = serde_json::to_value(&cfg).map_err(|e| Error::Io(e.to_string()))?;
            manifest("learn", spec, start, learn_cells(&cfg), &a.output)
        }
        Command::StageMoments(a) => {
            let report = stage_moments(a.m, a.epsilon, a.samples as usize, a.seed)?;
            emit_json(a.output.as_deref(), &report)?;
            if let Some(out) = &a.output {
                let spec = json!({"m": a.m, "epsilon": a.epsilon, "samples": a.samples, "seed": a.seed});
                let cells = vec![CellSeed {
                    cell: "stage-moments".into(),
                    seed: cell_seed(a.seed, "stage-moments", a.m, a.epsilon, a.samples as usize, 0),
                }];
                manifest("stage-moments", spec, start, cells, out)?;
            }
            Ok(())
        }
    })?
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
