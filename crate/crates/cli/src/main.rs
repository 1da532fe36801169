use clap::{Parser, Subcommand};
use helmfem::adapt::AfemConfig;
use helmfem::experiments::{self, Experiment, ExperimentId, Mode};
use helmfem::mesh::read_mesh_file;
use helmfem::system::SolveOptions;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "helmfem", version, about = "Helmholtz-decomposition mixed FEM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one convergence study and write its history as CSV.
    Run(RunArgs),
    /// Run every verification check.
    Verify {
        /// Perturb p_h in one element to check that the oracles notice.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Print counts and quality of a mesh file.
    Info { file: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    experiment: String,
    #[arg(long, default_value = "adaptive")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    theta: f64,
    #[arg(long, default_value_t = 0.5)]
    kappa: f64,
    #[arg(long, default_value_t = 0.75)]
    rho: f64,
    #[arg(long, default_value_t = 200_000)]
    max_ndof: usize,
    /// Level cap; defaults to 1000 for adaptive and 12 for uniform runs.
    #[arg(long)]
    max_levels: Option<usize>,
    #[arg(long)]
    quad_degree: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

fn run(args: &RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let id: ExperimentId = args.experiment.parse()?;
    let mode: Mode = args.mode.parse()?;
    if args.k > 2 {
        eprintln!("warning: k = {} is outside the tested range 0..=2", args.k);
    }
    let exp = Experiment::new(id);
    let records = match mode {
        Mode::Uniform => {
            let options = SolveOptions {
                quad_degree: args.quad_degree,
                ..SolveOptions::default()
            };
            experiments::run_uniform(&exp, args.k, args.max_ndof, args.max_levels.unwrap_or(12), &options)?
        }
        Mode::Adaptive => {
            let mut config = AfemConfig::new(args.k);
            config.theta = args.theta;
            config.kappa = args.kappa;
            config.rho = args.rho;
            config.max_ndof = args.max_ndof;
            config.quad_degree = args.quad_degree;
            config.max_levels = args.max_levels.unwrap_or(1000);
            experiments::run_adaptive(&exp, &config)?
        }
    };
    let mut out = BufWriter::new(File::create(&args.out)?);
    experiments::write_csv(&mut out, id, mode, args.k, &records)?;
    out.flush()?;
    let last = records.last().expect("at least one level");
    println!(
        "{id} {mode} k={}: {} levels, final ndof {}, lambda {:.3e}, mu {:.3e}",
        args.k,
        records.len(),
        last.ndof,
        last.lambda,
        last.mu
    );
    match experiments::summary_rate(&records, mode) {
        Some((what, rate)) => println!(
            "rate of {what} over last {} levels: {rate:.3}",
            experiments::rate_window(mode)
        ),
        None => println!("rate: not enough levels"),
    }
    Ok(())
}

fn mesh_info(file: &PathBuf) -> Result<(), Box<dyn std::error::Error>> {
    let mesh = read_mesh_file(file)?;
    let c = mesh.validate()?;
    println!("triangles      {}", c.triangles);
    println!("vertices       {}", c.vertices);
    println!("edges          {}", c.edges);
    println!("interior edges {}", c.interior_edges);
    println!("boundary edges {}", c.boundary_edges);
    println!("min angle      {:.4} deg", c.min_angle.to_degrees());
    println!("area           {:.6}", mesh.domain_area());
    Ok(())
}

fn verify(inject_fault: bool) -> Result<bool, Box<dyn std::error::Error>> {
    let report = helmfem::verify::verify_all(inject_fault)?;
    for check in &report.checks {
        println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
    }
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", report.checks.len(), failed);
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args).map(|_| true),
        Command::Verify { inject_fault } => verify(*inject_fault),
        Command::Mesh {
            command: MeshCommand::Info { file },
        } => mesh_info(file).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
