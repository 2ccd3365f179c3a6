use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use slef_lab::config::{ConfigError, Experiment};
use slef_lab::{config_for, reject, resolve_out_dir, run, sweep};

#[derive(Parser)]
#[command(name = "slef-lab", version, about = "Numerical laboratory for -Δu = f(X) u^(-γ)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides SLEF_LAB_OUT and `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Parallel sub-runs of a sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenpair and criticality class of a sector or cap.
    Spectral(Common),
    /// Solve the singular problem and write the solution field.
    Solve(Common),
    /// One-dimensional flat or angular profile.
    Ode(Common),
    /// Growth-exponent fit along the bisector of a sector.
    Fit(Common),
    /// A_k or σ_k recursion trace.
    Recursion(Common),
    /// Ratio of two sector solutions near the vertex.
    Harnack(Common),
    /// Discontinuous-ratio experiment above the bumpy curve.
    Counterexample(Common),
    /// Capped source problems on a sector.
    Probe(Common),
    /// Run the template once per value of its `[sweep]` axis.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match cli.command {
        Command::Spectral(c) => (Some(Experiment::Spectral), c),
        Command::Solve(c) => (Some(Experiment::Solve), c),
        Command::Ode(c) => (Some(Experiment::Ode), c),
        Command::Fit(c) => (Some(Experiment::Fit), c),
        Command::Recursion(c) => (Some(Experiment::Recursion), c),
        Command::Harnack(c) => (Some(Experiment::Harnack), c),
        Command::Counterexample(c) => (Some(Experiment::Counterexample), c),
        Command::Probe(c) => (Some(Experiment::Probe), c),
        Command::Sweep(c) => (None, c),
    };
    let text = match std::fs::read_to_string(&common.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", common.config.display());
            return ExitCode::from(3);
        }
    };
    let Some(experiment) = experiment else {
        let dir = resolve_out_dir(common.out.as_deref(), slef_lab::config::parse_raw(&text).ok().as_ref());
        return match sweep(&text, &dir, common.jobs) {
            Ok((m, rows)) => {
                let failed = rows.iter().filter(|r| r.exit_code != 0).count();
                println!("{} runs, {failed} failed; results in {}", rows.len(), dir.display());
                ExitCode::from(m.exit_code as u8)
            }
            Err(e) => fail_config(&dir, "sweep", &text, e),
        };
    };
    match config_for(&text, experiment) {
        Ok(cfg) => {
            let dir = resolve_out_dir(common.out.as_deref(), Some(&cfg));
            let out = run(&cfg, &dir);
            match (&out.manifest.error, &out.summary) {
                (Some(e), _) => eprintln!("{e}"),
                (None, _) if experiment == Experiment::Spectral => {
                    // the eigenpair row itself is the result
                    if let Ok(row) = std::fs::read_to_string(dir.join("spectral.csv")) {
                        print!("{row}");
                    }
                }
                (None, Some(s)) => print!("{}", s.render(cfg.precision())),
                _ => {}
            }
            ExitCode::from(out.exit_code() as u8)
        }
        Err(e) => {
            let dir = resolve_out_dir(common.out.as_deref(), None);
            fail_config(&dir, experiment.name(), &text, e)
        }
    }
}

fn fail_config(dir: &std::path::Path, experiment: &str, text: &str, e: ConfigError) -> ExitCode {
    eprintln!("{e}");
    ExitCode::from(reject(dir, experiment, text, e).exit_code() as u8)
}
