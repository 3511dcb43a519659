//! `oedg` command-line runner.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use oedg::bench::{generate, parse_sizes, BaseKind, CtocParams, InstanceDescriptor, Scale, SuiteName, TopologyConfig};
use oedg::experiment::{
    grouping_csv, optimization_csvs, read_runs_jsonl, run_experiment, trajectories_csv, write_reports, ExperimentConfig,
    Manifest, Mode,
};
use oedg::problem::{Conflict, Topology};

#[derive(Parser)]
#[command(name = "oedg", version, about = "Overlapping differential grouping experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate one benchmark instance descriptor.
    Gen(GenArgs),
    /// Run a grouping experiment.
    Group(RunArgs),
    /// Run an optimization experiment.
    Optimize(RunArgs),
    /// Rebuild the CSV reports from a finished run directory.
    Report(ReportArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    topology: String,
    /// Subcomponent sizes, e.g. `12x5` or `100x5+50x5+25x10`.
    #[arg(long)]
    sizes: Option<String>,
    /// Number of equally sized subcomponents (with `--size`).
    #[arg(long)]
    subs: Option<usize>,
    #[arg(long, default_value_t = 10)]
    size: usize,
    /// Variables shared by linked subcomponents.
    #[arg(long, visible_alias = "m", default_value_t = 2)]
    overlap: usize,
    /// Complex topology: number of subcomponents.
    #[arg(long)]
    nsub: Option<usize>,
    /// Complex topology: subcomponent size.
    #[arg(long)]
    s: Option<usize>,
    /// Complex topology: extra-link probability.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value = "elliptic")]
    base: String,
    #[arg(long, default_value = "conforming")]
    conflict: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    name: Option<String>,
    /// Output file; the descriptor goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reload the written descriptor and re-check its structure.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    suite: Option<String>,
    #[arg(long)]
    scale: Option<String>,
    /// Instance descriptor files used instead of a suite.
    #[arg(long = "instance")]
    instances: Vec<PathBuf>,
    /// Comma-separated algorithms; the first is compared against the rest.
    #[arg(long, value_delimiter = ',')]
    algs: Vec<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long = "eps-n")]
    eps_n: Option<usize>,
    /// Report directory.
    #[arg(long, env = "OEDG_OUT_DIR")]
    out: Option<PathBuf>,
    /// Worker threads; reports do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding `runs.jsonl`.
    #[arg(long)]
    dir: PathBuf,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen(args) => gen(args).map(|_| ExitCode::SUCCESS),
        Command::Group(args) => experiment(args, Mode::Grouping),
        Command::Optimize(args) => experiment(args, Mode::Optimization),
        Command::Report(args) => report(&args.dir).map(|_| ExitCode::SUCCESS),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let topology: Topology = args.topology.parse()?;
    let base: BaseKind = args.base.parse()?;
    let conflict: Conflict = args.conflict.parse()?;
    let sizes = || -> Result<Vec<usize>> {
        match (&args.sizes, args.subs) {
            (Some(s), None) => Ok(parse_sizes(s)?),
            (None, Some(k)) => Ok(vec![args.size; k]),
            (Some(_), Some(_)) => bail!("give either --sizes or --subs, not both"),
            (None, None) => bail!("--sizes or --subs is required for a {} topology", args.topology),
        }
    };
    let mut config = match topology {
        Topology::Line => TopologyConfig::line(sizes()?, args.overlap, base, conflict, args.seed),
        Topology::Ring => TopologyConfig::ring(sizes()?, args.overlap, base, conflict, args.seed),
        Topology::Complex => {
            let n_sub = args.nsub.context("--nsub is required for a complex topology")?;
            let s = args.s.context("--s is required for a complex topology")?;
            TopologyConfig::complex(CtocParams { n_sub, s, p: args.p }, args.overlap, base, conflict, args.seed)
        }
        Topology::Custom => bail!("custom topologies cannot be generated"),
    };
    if let Some(name) = args.name {
        config = config.named(name);
    }
    let descriptor = generate(&config)?;
    match &args.out {
        Some(path) => {
            descriptor.save(path).with_context(|| format!("writing {}", path.display()))?;
            if args.verify {
                InstanceDescriptor::load(path)?.verify().context("reloaded descriptor failed verification")?;
            }
            eprintln!("wrote {} (n = {})", path.display(), descriptor.dimension);
        }
        None => {
            if args.verify {
                InstanceDescriptor::from_json(&descriptor.to_json()?)?.verify()?;
            }
            println!("{}", descriptor.to_json()?);
        }
    }
    Ok(())
}

fn experiment(args: RunArgs, mode: Mode) -> Result<ExitCode> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ExperimentConfig::from_toml(&text)?
        }
        None => ExperimentConfig::from_toml("algorithms = []")?,
    };
    config.mode = mode;
    if let Some(s) = &args.suite {
        config.suite = Some(s.parse::<SuiteName>()?);
    }
    if let Some(s) = &args.scale {
        config.scale = s.parse::<Scale>()?;
    }
    if !args.instances.is_empty() {
        config.instances = args.instances.clone();
    }
    if !args.algs.is_empty() {
        config.algorithms = args.algs.clone();
    }
    if let Some(r) = args.runs {
        config.runs = r;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(b) = args.budget {
        config.budget = Some(b);
    }
    if let Some(e) = args.eps_n {
        config.rdg3.eps_n = Some(e);
    }
    if let Some(o) = &args.out {
        config.out_dir = Some(o.clone());
    }
    let config = config.resolve()?;
    let out_dir = config.out_dir.clone().unwrap_or_else(|| PathBuf::from("oedg-out"));
    let threads = args
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let output = run_experiment(&config, threads)?;
    let files = write_reports(&out_dir, &output).with_context(|| format!("writing reports to {}", out_dir.display()))?;
    eprintln!(
        "{} of {} runs completed; wrote {} in {}",
        output.manifest.completed,
        output.manifest.cells,
        files.join(", "),
        out_dir.display()
    );
    if output.all_completed() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &output.manifest.failures {
            eprintln!("failed: {} / {} / run {}: {}", f.problem, f.algorithm, f.run, f.error);
        }
        Ok(ExitCode::from(2))
    }
}

fn report(dir: &Path) -> Result<()> {
    let runs = dir.join("runs.jsonl");
    let text = fs::read_to_string(&runs).with_context(|| format!("reading {}", runs.display()))?;
    let (config, records) = read_runs_jsonl(&text)?;
    let manifest_path = dir.join("manifest.json");
    let manifest: Manifest = match fs::read_to_string(&manifest_path) {
        Ok(m) => serde_json::from_str(&m).with_context(|| format!("parsing {}", manifest_path.display()))?,
        Err(_) => {
            let mut problems: Vec<String> = Vec::new();
            for r in &records {
                if !problems.contains(&r.problem) {
                    problems.push(r.problem.clone());
                }
            }
            Manifest {
                config,
                problems,
                cells: records.len(),
                completed: records.len(),
                failures: Vec::new(),
            }
        }
    };
    fs::write(dir.join("grouping.csv"), grouping_csv(&manifest, &records)?)?;
    if manifest.config.mode == Mode::Optimization {
        let (summary, wtl) = optimization_csvs(&manifest, &records)?;
        fs::write(dir.join("optimization.csv"), summary)?;
        fs::write(dir.join("wtl.csv"), &wtl)?;
        fs::write(dir.join("trajectories.csv"), trajectories_csv(&records))?;
        print!("{wtl}");
    } else {
        print!("{}", grouping_csv(&manifest, &records)?);
    }
    Ok(())
}
