use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use swarmhaptic::config::write_config;
use swarmhaptic::runner::{execute, validate, RunRequest};
use swarmhaptic::scenarios;
use swarmhaptic::trajectory::write_trajectory;

#[derive(Parser)]
#[command(version, about = "Tethered-quadrotor finger haptics simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario; writes log.csv, metrics.json and manifest.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Simulated duration in seconds.
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Parse and check inputs without running.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Write a bundled scenario as <name>.json and <name>.csv.
    Scenario {
        /// One of hover, press, piano, chord, three_groups, dual_tether, or all.
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            trajectory,
            out,
            seed,
            duration,
        } => execute(&RunRequest {
            config,
            trajectory,
            out: out.clone(),
            seed,
            duration,
        })
        .map(|m| {
            println!(
                "wrote {}: {} contacts, steady-state error {:.2}%, force RMS {:.4} N, real-time factor {:.1}",
                out.display(),
                m.contacts.len(),
                m.steady_state_error_pct,
                m.force_rms_error,
                m.real_time_factor.unwrap_or(f64::INFINITY)
            )
        }),
        Command::Validate { config, trajectory } => {
            validate(&config, trajectory.as_deref()).map(|summary| print!("{summary}"))
        }
        Command::Scenario { name, out } => write_scenarios(&name, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_scenarios(name: &str, out: &std::path::Path) -> swarmhaptic::Result<()> {
    let list = if name == "all" {
        scenarios::all()
    } else {
        match scenarios::by_name(name) {
            Some(s) => vec![s],
            None => {
                eprintln!(
                    "unknown scenario {name:?}; expected one of {:?} or \"all\"",
                    scenarios::NAMES
                );
                return Err(swarmhaptic::IoError::Parse {
                    path: name.into(),
                    line: 0,
                    message: "unknown scenario".into(),
                });
            }
        }
    };
    std::fs::create_dir_all(out).map_err(|e| swarmhaptic::IoError::Io {
        path: out.into(),
        source: e,
    })?;
    for s in list {
        write_config(&out.join(format!("{}.json", s.name)), &s.config)?;
        write_trajectory(&out.join(format!("{}.csv", s.name)), &s.trajectory)?;
        println!("{}: {}", s.name, s.description);
    }
    Ok(())
}
