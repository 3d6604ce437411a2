use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use psg::experiments::{self, Computed, Mode};
use psg::io::{self, Format};
use psg::{classify_boundedness, Error, GameConfig, SamplingPlan, StrategySpec};

#[derive(Parser)]
#[command(name = "psg", version, about = "P-functions of prisoners search strategies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form P-function.
    Exact(GridArgs),
    /// Monte Carlo estimate of a P-function.
    Mc(GridArgs),
    /// Exhaustive P-function over all placements (small N).
    Oracle(GridArgs),
    /// Efficiency table for n = 100, 99, 50 on 100 boxes.
    Table1(TableArgs),
    /// Pairwise error distances between strategies.
    Errors(ErrorsArgs),
    /// Distance to the random strategy along a sequence of sizes.
    Convergence(ConvergenceArgs),
    /// Boundedness class of a strategy.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct Game {
    /// Number of boxes.
    #[arg(long = "N", default_value_t = 100)]
    boxes: usize,
    /// Number of players (keys); defaults to N.
    #[arg(long = "n")]
    keys: Option<usize>,
    /// Largest attempt budget; defaults to N.
    #[arg(long = "a-max")]
    a_max: Option<usize>,
}

impl Game {
    fn config(&self) -> psg::Result<GameConfig> {
        GameConfig::new(
            self.boxes,
            self.keys.unwrap_or(self.boxes),
            self.a_max.unwrap_or(self.boxes),
        )
    }
}

#[derive(Args)]
struct Sampling {
    /// Sampled placements.
    #[arg(long = "s", default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Sampling {
    fn plan(&self) -> SamplingPlan {
        SamplingPlan::new(self.samples, self.seed)
    }
}

#[derive(Args)]
struct Output {
    /// Result directory; without it results go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct GridArgs {
    /// Strategy, e.g. ks0, ks:D=3:E=R, bs:D=0:I=5:E=B, rs, pure-random, adi, gs.
    strategy: StrategySpec,
    #[command(flatten)]
    game: Game,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    sampling: Sampling,
    /// Exponent of the efficiency weight.
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ErrorsArgs {
    /// Strategies to compare (at least two).
    #[arg(default_values_t = ["ks0".parse::<StrategySpec>().unwrap(), StrategySpec::random(),
        "bs:D=0:I=1:E=N".parse().unwrap(), "ks:D=1:E=R".parse().unwrap()])]
    strategies: Vec<StrategySpec>,
    #[command(flatten)]
    game: Game,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ConvergenceArgs {
    strategy: StrategySpec,
    /// Box counts to visit.
    #[arg(long, value_delimiter = ',', default_value = "10,30,100")]
    sizes: Vec<usize>,
    /// Ratios n/N to visit at each size.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    ratios: Vec<f64>,
    #[command(flatten)]
    sampling: Sampling,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct ClassifyArgs {
    strategy: StrategySpec,
    #[command(flatten)]
    game: Game,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io = c.downcast_ref::<std::io::Error>().or_else(|| match c.downcast_ref::<Error>() {
            Some(Error::Io(io)) => Some(io),
            Some(Error::Csv(e)) => match e.kind() {
                csv::ErrorKind::Io(io) => Some(io),
                _ => None,
            },
            _ => None,
        });
        io.is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::CapExceeded { .. }) => 3,
        Some(
            Error::InvalidConfig(_)
            | Error::InvalidStrategy(_)
            | Error::Randomized(_)
            | Error::Unsupported(_)
            | Error::ShapeMismatch(_),
        ) => 2,
        _ => 1,
    }
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Exact(args) => grid(args, Mode::Exact),
        Command::Mc(args) => grid(args, Mode::Mc),
        Command::Oracle(args) => grid(args, Mode::Oracle),
        Command::Table1(args) => table1(args),
        Command::Errors(args) => errors(args),
        Command::Convergence(args) => convergence(args),
        Command::Classify(args) => classify(args),
    }
}

fn grid(args: GridArgs, mode: Mode) -> anyhow::Result<()> {
    let config = args.game.config()?;
    let plan = args.sampling.plan();
    let computed = experiments::run_pfunction(&args.strategy, &config, &plan, mode)?;
    let meta = json!({ "mode": mode, "seed": plan.seed, "s": plan.s });
    match args.output.out {
        Some(dir) => {
            for path in io::write_run(&dir, &computed, args.output.format, meta)? {
                println!("{}", path.display());
            }
        }
        None => print_grid(&computed, args.output.format)?,
    }
    Ok(())
}

fn print_grid(computed: &Computed, format: Format) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    let json = match (format, computed.rational()) {
        (Format::Csv, _) => return Ok(computed.grid().write_csv(stdout)?),
        (Format::Json, Some(p)) => p.to_json(true),
        (Format::Json, None) => computed.grid().to_json(false),
    };
    writeln!(stdout, "{}", serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

/// Writes `value` as JSON, or `rows` as CSV, to `out/name` or stdout.
fn emit(output: &Output, name: &str, value: Value, header: &[&str], rows: Vec<Vec<String>>) -> anyhow::Result<()> {
    let bytes = match output.format {
        Format::Json => {
            let mut b = serde_json::to_vec_pretty(&value)?;
            b.push(b'\n');
            b
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(header)?;
            for r in rows {
                w.write_record(r)?;
            }
            w.into_inner()?
        }
    };
    match &output.out {
        Some(dir) => {
            let path = dir.join(format!("{name}.{}", output.format.extension()));
            io::write_atomic(&path, &bytes)?;
            println!("{}", path.display());
        }
        None => std::io::stdout().lock().write_all(&bytes)?,
    }
    Ok(())
}

fn table1(args: TableArgs) -> anyhow::Result<()> {
    let plan = args.sampling.plan();
    let rows = experiments::table1(&plan, args.beta)?;
    let csv_rows = rows
        .iter()
        .map(|r| {
            vec![
                r.panel.to_string(),
                r.keys.to_string(),
                r.label.clone(),
                r.strategy.clone(),
                format!("{:.4}", r.eta),
            ]
        })
        .collect();
    let value = json!({ "plan": plan, "beta": args.beta, "rows": rows, "version": env!("CARGO_PKG_VERSION") });
    emit(&args.output, "table1", value, &["panel", "n", "label", "strategy", "eta"], csv_rows)
}

fn errors(args: ErrorsArgs) -> anyhow::Result<()> {
    let config = args.game.config()?;
    let plan = args.sampling.plan();
    let h = experiments::error_heatmap(&args.strategies, &config, &plan)?;
    let mut csv_rows = Vec::new();
    for (i, a) in h.strategies.iter().enumerate() {
        for (j, b) in h.strategies.iter().enumerate() {
            csv_rows.push(vec![a.clone(), b.clone(), format!("{:e}", h.epsilon[i][j])]);
        }
    }
    let value = json!({ "plan": plan, "heatmap": h, "version": env!("CARGO_PKG_VERSION") });
    emit(&args.output, "errors", value, &["strategy_i", "strategy_j", "epsilon"], csv_rows)
}

fn convergence(args: ConvergenceArgs) -> anyhow::Result<()> {
    let plan = args.sampling.plan();
    let mut sizes = Vec::new();
    for &n in &args.sizes {
        for &r in &args.ratios {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidConfig(format!("ratio {r} outside (0, 1]")).into());
            }
            sizes.push((n, ((n as f64 * r).round() as usize).max(1)));
        }
    }
    let points = experiments::convergence(&args.strategy, &sizes, &plan)?;
    let csv_rows = points
        .iter()
        .map(|p| vec![p.boxes.to_string(), p.keys.to_string(), format!("{:e}", p.epsilon), format!("{:e}", p.cdf_gap)])
        .collect();
    let value = json!({
        "strategy": args.strategy.to_string(),
        "plan": plan,
        "points": points,
        "version": env!("CARGO_PKG_VERSION"),
    });
    emit(&args.output, "convergence", value, &["N", "n", "epsilon", "cdf_gap"], csv_rows)
}

fn classify(args: ClassifyArgs) -> anyhow::Result<()> {
    let config = args.game.config()?;
    let c = classify_boundedness(&args.strategy, &config)?;
    let mut v = serde_json::to_value(&c)?;
    io::merge(&mut v, json!({ "strategy": args.strategy.to_string(), "config": config }));
    writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(&v)?)?;
    Ok(())
}
