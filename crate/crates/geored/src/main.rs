use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use geored::pipeline::{run_pipeline, Options, RunReport, Stage};
use geored::simulate::{simulate, write_grid_csv, write_residuals_csv};
use geored::{load_scenario, registry, LoadError, Scenario};
use geored_core::dynamics::K2Params;
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "geored", version, about = "Verify k-contact structures, reductions and field equations")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every pipeline stage.
    Verify(RunArgs),
    /// Check the structure and its Reeb fields.
    Reeb(RunArgs),
    /// Check the reduction conditions on the level set.
    Conditions(RunArgs),
    /// Verify the quotient structure.
    Reduce(RunArgs),
    /// Compare the kernel on the level set with the isotropy orbits.
    ProbeGroup(RunArgs),
    /// Integrate a k = 2 scenario on a grid.
    Simulate(SimArgs),
    /// List the built-in scenarios.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct Source {
    /// Built-in scenario id.
    #[arg(long, conflicts_with = "file")]
    scenario: Option<String>,
    /// Scenario file.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads when running several scenarios.
    #[arg(long)]
    jobs: Option<usize>,
    /// Show per-stage wall time in text output.
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    source: Source,
    /// Nodes by time steps, e.g. 512x2048.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "T")]
    t_end: Option<f64>,
    /// Section values as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-step residuals and energy as CSV.
    #[arg(long)]
    residuals: Option<PathBuf>,
}

/// Exit statuses.
enum Failure {
    Verdict,
    Input(anyhow::Error),
    Internal(anyhow::Error),
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(e)) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (args, stages) = match cli.cmd {
        Cmd::List => {
            for id in geored::registry::ids() {
                println!("{id}");
            }
            return Ok(());
        }
        Cmd::Simulate(a) => return run_simulate(a),
        Cmd::Verify(a) => (a, Stage::ALL.to_vec()),
        Cmd::Reeb(a) => (a, vec![Stage::Structure]),
        Cmd::Conditions(a) => (a, vec![Stage::Isotropy, Stage::Conditions]),
        Cmd::Reduce(a) => (a, vec![Stage::Reduction]),
        Cmd::ProbeGroup(a) => (a, vec![Stage::Isotropy, Stage::Kernel]),
    };
    if args.samples == 0 {
        return Err(Failure::Input(anyhow!("--samples must be positive")));
    }
    let single = args.source.scenario.is_some() || args.source.file.is_some();
    let scenarios = match resolve(&args.source)? {
        Some(s) => vec![s],
        None => registry(),
    };
    let opts = Options { seed: args.seed, samples: args.samples, stages, simulate: false };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .map_err(|e| Failure::Internal(e.into()))?;
    let reports: Vec<RunReport> = pool.install(|| scenarios.par_iter().map(|s| run_pipeline(s, &opts)).collect());
    let text = match args.format {
        Format::Json if single => reports[0].to_json(),
        Format::Json => serde_json::to_string_pretty(&reports).map_err(|e| Failure::Internal(e.into()))?,
        Format::Text => reports.iter().map(|r| r.to_text(args.timings)).collect::<Vec<_>>().join("\n"),
    };
    emit(&text, args.out.as_deref())?;
    if reports.iter().all(|r| r.verdict) {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn resolve(src: &Source) -> Result<Option<Scenario>, Failure> {
    if let Some(id) = &src.scenario {
        return geored::registry::get(id)
            .map(Some)
            .ok_or_else(|| Failure::Input(anyhow!("unknown scenario `{id}`; see `geored list`")));
    }
    match &src.file {
        Some(p) => Ok(Some(load_scenario(p)?)),
        None => Ok(None),
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, format!("{text}\n"))
            .with_context(|| format!("writing {}", p.display()))
            .map_err(Failure::Input),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_grid(s: &str) -> anyhow::Result<(usize, usize)> {
    let (n, m) = s.split_once(['x', 'X']).ok_or_else(|| anyhow!("--grid expects NxM, got `{s}`"))?;
    let n: usize = n.trim().parse().with_context(|| format!("bad node count in `{s}`"))?;
    let m: usize = m.trim().parse().with_context(|| format!("bad step count in `{s}`"))?;
    if n < 3 || m < 2 {
        bail!("--grid needs at least 3 nodes and 2 steps");
    }
    Ok((n, m))
}

fn sim_params(a: &SimArgs, base: Option<&K2Params>) -> anyhow::Result<K2Params> {
    let (nodes, steps) = match (&a.grid, base) {
        (Some(g), _) => parse_grid(g)?,
        (None, Some(p)) => (p.nodes, p.steps),
        (None, None) => bail!("the scenario has no [simulate] section; pass --grid"),
    };
    let t_end = match (a.t_end, base) {
        (Some(t), _) => t,
        (None, Some(p)) => p.t_end,
        (None, None) => bail!("pass --T"),
    };
    if !(t_end > 0.0 && t_end.is_finite()) {
        bail!("--T must be positive");
    }
    if let Some(dt) = a.dt {
        let implied = t_end / steps as f64;
        if (dt - implied).abs() > 1e-12 * implied.max(1.0) {
            bail!("--dt {dt} disagrees with T/M = {implied}");
        }
    }
    Ok(K2Params::new(nodes, steps, t_end))
}

fn run_simulate(a: SimArgs) -> Result<(), Failure> {
    let s = resolve(&a.source)?.ok_or_else(|| Failure::Input(anyhow!("pass --scenario or --file")))?;
    let p = sim_params(&a, s.model.simulate.as_ref()).map_err(Failure::Input)?;
    let sim = simulate(&s.model, &p).map_err(Failure::Input)?;
    let write = |path: &Path, f: &dyn Fn(&mut BufWriter<File>) -> io::Result<()>| -> Result<(), Failure> {
        let file = File::create(path).with_context(|| format!("creating {}", path.display())).map_err(Failure::Input)?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| Failure::Internal(e.into()))
    };
    if let Some(path) = &a.out {
        write(path, &|w| write_grid_csv(&sim, w))?;
    }
    if let Some(path) = &a.residuals {
        write(path, &|w| write_residuals_csv(&sim, w))?;
    }
    let energies = sim.energies();
    println!(
        "{}: {}x{} grid, T = {}, max residual {:.3e}, energy {:.6e} -> {:.6e}",
        s.id(),
        p.nodes,
        p.steps,
        p.t_end,
        sim.residual(),
        energies[0],
        energies[energies.len() - 1]
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_sizes() {
        assert_eq!(parse_grid("512x2048").unwrap(), (512, 2048));
        assert_eq!(parse_grid(" 8 X 4").unwrap(), (8, 4));
        assert!(parse_grid("512").is_err());
        assert!(parse_grid("2x10").is_err());
    }

    #[test]
    fn dt_must_match_the_grid() {
        let args = |dt: Option<f64>| SimArgs {
            source: Source { scenario: None, file: None },
            grid: Some("16x100".into()),
            dt,
            t_end: Some(1.0),
            out: None,
            residuals: None,
        };
        assert_eq!(sim_params(&args(Some(0.01)), None).unwrap().steps, 100);
        assert!(sim_params(&args(Some(0.02)), None).is_err());
        assert!(sim_params(&SimArgs { t_end: None, ..args(None) }, None).is_err());
    }
}
