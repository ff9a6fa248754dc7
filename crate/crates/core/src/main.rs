use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use radial_mmot::coulomb::SolverOptions;
use radial_mmot::measures::{Pattern, RadialMeasure};
use radial_mmot::report::{self, GridSpec, Report};
use radial_mmot::{Error, Result};

/// Radial Coulomb multimarginal transport experiments.
///
/// Exit codes: 0 claim confirmed, 2 inconclusive at tolerance, 1 error.
/// Thread count follows RAYON_NUM_THREADS.
#[derive(Parser)]
#[command(version, about, long_about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact radial cost, minimizing angles and frozen-angle costs.
    Cost {
        r1: f64,
        r2: f64,
        r3: f64,
        /// Fourth radius for the four-charge cost.
        #[arg(long)]
        n4: Option<f64>,
        /// Write a JSON-lines record here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Swap violation of the DDI map on the equally spaced measure.
    Ce145 {
        /// Spacing parameter; searched when omitted.
        #[arg(long)]
        eps: Option<f64>,
        /// Write the JSON-lines violation report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Violations for every map of the three-cell class on the two-scale measure.
    Ceclass {
        #[arg(long)]
        eps: Option<f64>,
        /// Position of the far block; searched when omitted.
        #[arg(long = "M")]
        far: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sampled c-monotonicity check of the DDI map on the three-block measure.
    ExampleCpi {
        #[arg(long = "M")]
        far: Option<f64>,
        /// Number of random orbit pairs.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hessian determinant margin at (pi, 0) over a grid of (r2, r3).
    ///
    /// CSV columns: r1,r2,r3,margin,sign (sign in {-1,0,1}); only points with
    /// r1 <= r2 <= r3 are written. Goes to stdout unless --out is given.
    Region {
        #[arg(long, default_value_t = 1.0)]
        r1: f64,
        /// NxM:lo:hi, N values of r2 and M values of r3 over [lo, hi].
        #[arg(long, default_value = "200x200:1:15")]
        grid: GridSpec,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solution curves of the two stationarity equations on the angle torus.
    ///
    /// CSV columns: branch,theta3,theta2 with branch one of vertical_0, vertical_pi,
    /// diagonal_0, diagonal_pi; theta2 = nan marks a gap. Rows with branch =
    /// intersection list the crossings. Goes to stdout unless --out is given.
    Curves {
        #[arg(long, num_args = 3, default_values_t = [1.0, 3.5, 60.0])]
        r: Vec<f64>,
        /// Number of theta3 samples.
        #[arg(long, default_value_t = 360)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Splits of eight equally spaced radii into two quadruples.
    Fourmarg {
        #[arg(long, default_value_t = 0.005)]
        eps: f64,
        /// Further eps values whose minimizer must agree.
        #[arg(long, value_delimiter = ',', default_values_t = [0.02, 0.01, 0.005])]
        sweep: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Discrete Kantorovich optimum against the plans of cyclical maps.
    ///
    /// CSV columns: n,pattern,plan_value,lp_value,gap,lp_on_graph, where gap is
    /// plan_value - lp_value; patterns without a plan show nan. Goes to stdout unless
    /// --out is given.
    Lp {
        /// JSON array of {"lo", "hi", "density"} pieces.
        #[arg(long)]
        measure: PathBuf,
        /// Atoms per marginal.
        #[arg(long, default_value_t = 12)]
        n: usize,
        /// "all" or a comma-separated list such as DDI,DID.
        #[arg(long, default_value = "all")]
        patterns: String,
        /// Marginal count used with --patterns all.
        #[arg(long, default_value_t = 3)]
        cells: usize,
        /// Skip the second resolution 2n.
        #[arg(long)]
        no_refine: bool,
        /// Write the LP plan at n atoms as JSON lines.
        #[arg(long)]
        plan_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text)
        .map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
}

/// Summary to stdout, artifact to `out` if given.
fn emit_json(rep: &impl Report, out: Option<&Path>) -> Result<u8> {
    for line in rep.summary() {
        println!("{line}");
    }
    if let Some(p) = out {
        write(p, &rep.artifact())?;
    }
    Ok(rep.status().exit_code())
}

/// CSV to `out`, or to stdout with the summary on stderr.
fn emit_csv(rep: &impl Report, out: Option<&Path>) -> Result<u8> {
    match out {
        Some(p) => {
            write(p, &rep.artifact())?;
            for line in rep.summary() {
                println!("{line}");
            }
        }
        None => {
            print!("{}", rep.artifact());
            for line in rep.summary() {
                eprintln!("{line}");
            }
        }
    }
    Ok(rep.status().exit_code())
}

fn parse_patterns(spec: &str, cells: usize) -> Result<Vec<Pattern>> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(Pattern::all_cyclical(cells));
    }
    spec.split(',').map(|s| s.trim().parse()).collect()
}

fn run(cli: Cli) -> Result<u8> {
    let opts = SolverOptions::default();
    match cli.command {
        Command::Cost {
            r1,
            r2,
            r3,
            n4,
            out,
        } => {
            let mut radii = vec![r1, r2, r3];
            radii.extend(n4);
            emit_json(&report::cost(&radii, &opts)?, out.as_deref())
        }
        Command::Ce145 { eps, out } => emit_json(&report::ce145(eps, &opts)?, out.as_deref()),
        Command::Ceclass { eps, far, out } => {
            emit_json(&report::ceclass(eps, far, &opts)?, out.as_deref())
        }
        Command::ExampleCpi {
            far,
            samples,
            seed,
            out,
        } => emit_json(
            &report::example_cpi(far, samples, seed, &opts)?,
            out.as_deref(),
        ),
        Command::Region { r1, grid, out } => emit_csv(&report::region(r1, grid)?, out.as_deref()),
        Command::Curves { r, samples, out } => {
            let radii = [r[0], r[1], r[2]];
            emit_csv(&report::curves(radii, samples, &opts)?, out.as_deref())
        }
        Command::Fourmarg { eps, sweep, out } => {
            emit_json(&report::fourmarg(eps, &sweep, &opts)?, out.as_deref())
        }
        Command::Lp {
            measure,
            n,
            patterns,
            cells,
            no_refine,
            plan_out,
            out,
        } => {
            let rho = RadialMeasure::from_file(&measure)?;
            let patterns = parse_patterns(&patterns, cells)?;
            let rep = report::lp(&rho, n, &patterns, !no_refine, &opts)?;
            if let Some(p) = &plan_out {
                write(p, &rep.plan_json_lines())?;
            }
            emit_csv(&rep, out.as_deref())
        }
    }
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
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
