use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfield::harness::{self, HarnessError, RunOptions};
use mfield::mesh::{build_mesh, MeshFile, MeshSpec};

#[derive(Parser)]
#[command(name = "mfield", version, about = "Free and interacting fields on discrete surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        #[command(flatten)]
        opts: RunArgs,
    },
    /// Write a generated mesh as JSON.
    Mesh {
        #[command(subcommand)]
        kind: MeshKind,
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Run the bundled scenario for a check: decomp, markov, rp, rp0, sew,
    /// interact, or a bundled scenario name.
    Verify {
        check: String,
        #[command(flatten)]
        opts: RunArgs,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides every check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output directory; defaults to `mfield-out/<scenario name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run independent checks concurrently.
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand)]
enum MeshKind {
    Torus {
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
    },
    Cylinder {
        #[arg(long)]
        circumference: usize,
        #[arg(long)]
        rows: usize,
        #[arg(long, default_value_t = 1.0)]
        spacing: f64,
    },
    Icosphere {
        #[arg(long, default_value_t = 1)]
        subdivisions: usize,
        /// Variant with vertices on the `x = 0` great circle.
        #[arg(long)]
        equatorial: bool,
    },
    Path {
        #[arg(long)]
        vertices: usize,
        #[arg(long, default_value_t = 1.0)]
        weight: f64,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
    },
}

fn run(text: &str, base_dir: &Path, args: RunArgs) -> Result<u8, HarnessError> {
    let scenario = harness::parse_scenario(text)?;
    let opts = RunOptions {
        seed: args.seed,
        tolerance: args.tol,
        parallel: args.parallel,
        base_dir: base_dir.to_path_buf(),
        fixtures: None,
    };
    let outcome = harness::run_scenario(&scenario, text, &opts)?;
    let dir = args
        .out
        .unwrap_or_else(|| Path::new("mfield-out").join(&scenario.name));
    harness::write_outputs(&outcome, &dir)?;
    print!("{}", outcome.report.summary());
    println!("report: {}", dir.join("report.json").display());
    Ok(outcome.report.exit_code())
}

fn mesh(kind: MeshKind, out: Option<PathBuf>) -> Result<u8, HarnessError> {
    let spec = match kind {
        MeshKind::Torus { nx, ny, spacing } => MeshSpec::TorusLattice { nx, ny, spacing },
        MeshKind::Cylinder {
            circumference,
            rows,
            spacing,
        } => MeshSpec::CylinderCollar {
            circumference,
            rows,
            spacing,
        },
        MeshKind::Icosphere {
            subdivisions,
            equatorial: false,
        } => MeshSpec::Icosphere { subdivisions },
        MeshKind::Icosphere {
            subdivisions,
            equatorial: true,
        } => MeshSpec::IcosphereEquatorial { subdivisions },
        MeshKind::Path { vertices, weight, mass } => MeshSpec::Path { vertices, weight, mass },
    };
    let mesh = build_mesh(&spec).map_err(|e| {
        HarnessError::Schema(harness::SchemaError {
            path: "mesh".into(),
            message: e.to_string(),
        })
    })?;
    let json = serde_json::to_string_pretty(&MeshFile::from(&mesh)).expect("mesh serializes") + "\n";
    match out {
        Some(path) => std::fs::write(path, json)?,
        None => print!("{json}"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, opts } => std::fs::read_to_string(&scenario)
            .map_err(|e| {
                HarnessError::Schema(harness::SchemaError {
                    path: String::new(),
                    message: format!("{}: {e}", scenario.display()),
                })
            })
            .and_then(|text| {
                let base = scenario.parent().unwrap_or(Path::new("."));
                run(&text, base, opts)
            }),
        Command::Mesh { kind, out } => mesh(kind, out),
        Command::Verify { check, opts } => match harness::bundled(&check) {
            Some(text) => run(text, Path::new("."), opts),
            None => {
                let names: Vec<&str> = harness::BUNDLED.iter().map(|(n, _)| *n).collect();
                eprintln!("unknown check `{check}`; bundled: {}", names.join(", "));
                return ExitCode::from(2);
            }
        },
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
