//! The `yinset` command line.
//!
//! Exit codes: 0 success, 1 validation failure, 2 parse, usage or I/O
//! error, 3 internal failure. Errors go to stderr as `error: <kind>: <detail>`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::boolean::{apply, Op};
use crate::brep::GElement;
use crate::error::{Error, Result};
use crate::geom::{Aabb, Tolerance};
use crate::io;
use crate::mars::{track, MarsParams, VelocityField};
use crate::verify::{pointwise_law_check, DEFAULT_SAMPLES};

/// Environment variable overriding the default ε.
pub const EPSILON_ENV: &str = "YINSET_EPSILON";

#[derive(Debug, Parser)]
#[command(name = "yinset", version, about = "Boolean algebra on 3D Yin sets given as OBJ boundary meshes")]
struct Cli {
    /// Absolute tolerance ε; defaults to 1e-9 times the inputs' bounding-box diagonal.
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Args)]
struct Binary {
    a: PathBuf,
    b: PathBuf,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Intersection of A and B.
    Meet(Binary),
    /// Union of A and B.
    Join(Binary),
    /// A without B.
    Diff(Binary),
    /// Complement of A.
    Complement {
        a: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Prints `components=N holes=H`.
    Topology { a: PathBuf },
    /// Loads and validates A.
    Validate { a: PathBuf },
    /// Writes the inclusion Hasse diagram of A as DOT.
    Hasse {
        a: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Tracks A through a velocity field, writing one OBJ per checkpoint.
    Track {
        a: PathBuf,
        /// zero, translation, rotation or deformation.
        #[arg(long)]
        field: String,
        /// Final time (also the deformation period).
        #[arg(long = "T", default_value_t = 3.0)]
        t_end: f64,
        #[arg(long = "hL", default_value_t = 1.0 / 32.0)]
        h_l: f64,
        #[arg(long, default_value_t = 0.1)]
        rtiny: f64,
        /// Minimum interior angle in degrees.
        #[arg(long, default_value_t = MarsParams::DEFAULT_ALPHA_DEGREES)]
        alpha: f64,
        /// Time step; defaults to hL.
        #[arg(long)]
        dt: Option<f64>,
        /// Comma-separated checkpoint times; defaults to 0,T/8,T/4,T/2,3T/4,T.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Vec<f64>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Checks RESULT = OP(A, B) pointwise at random samples.
    Oracle {
        #[arg(long)]
        op: Op,
        /// A B RESULT, or A RESULT for complement.
        #[arg(num_args = 2..=3, required = true)]
        files: Vec<PathBuf>,
        #[arg(short = 'n', default_value_t = DEFAULT_SAMPLES)]
        n: usize,
        /// Minimum agreement fraction for success.
        #[arg(long, default_value_t = 0.999)]
        threshold: f64,
    },
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotClosed { .. } | Error::NotRealizable(_) | Error::DegenerateInput => 1,
        Error::Parse { .. } | Error::Io { .. } | Error::InvalidParameter(_) | Error::InvalidTolerance(_) => 2,
        _ => 3,
    }
}

fn tolerance(explicit: Option<f64>, bounds: &Aabb) -> Result<Tolerance> {
    if let Some(e) = explicit {
        return Tolerance::new(e);
    }
    if let Ok(v) = std::env::var(EPSILON_ENV) {
        let e: f64 = v.trim().parse().map_err(|_| Error::InvalidParameter(format!("{EPSILON_ENV}={v:?} is not a number")))?;
        return Tolerance::new(e);
    }
    Ok(Tolerance::for_bounds(bounds))
}

/// Reads every input, then builds them under one shared ε.
fn load(paths: &[&Path], epsilon: Option<f64>) -> Result<(Vec<GElement>, Tolerance)> {
    let docs: Vec<io::ObjDocument> = paths.iter().map(|p| io::read_document(p)).collect::<Result<_>>()?;
    let bounds = docs.iter().fold(Aabb::empty(), |b, d| b.union(&d.bounds()));
    let tol = tolerance(epsilon, &bounds)?;
    let gs = docs.iter().map(|d| d.to_element(tol)).collect::<Result<_>>()?;
    Ok((gs, tol))
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let eps = cli.epsilon;
    let stdout_err = |e: std::io::Error| Error::Io { path: PathBuf::from("<stdout>"), source: e };
    match cli.cmd {
        Command::Meet(b) => binary(Op::Meet, b, eps),
        Command::Join(b) => binary(Op::Join, b, eps),
        Command::Diff(b) => binary(Op::Difference, b, eps),
        Command::Complement { a, output } => {
            let (gs, tol) = load(&[&a], eps)?;
            io::write_spadopag(&apply(Op::Complement, &gs[0], &GElement::Bottom, tol)?, &output)?;
            Ok(0)
        }
        Command::Topology { a } => {
            let (gs, _) = load(&[&a], eps)?;
            let t = gs[0].topology();
            writeln!(out, "components={} holes={}", t.components, t.total_holes()).map_err(stdout_err)?;
            Ok(0)
        }
        Command::Validate { a } => {
            let (gs, _) = load(&[&a], eps)?;
            let n = gs[0].surfaces().len();
            writeln!(out, "valid surfaces={n}").map_err(stdout_err)?;
            Ok(0)
        }
        Command::Hasse { a, output } => {
            let (gs, tol) = load(&[&a], eps)?;
            io::write_hasse_dot(&gs[0], &output, tol)?;
            Ok(0)
        }
        Command::Track { a, field, t_end, h_l, rtiny, alpha, dt, checkpoints, output } => {
            let (gs, tol) = load(&[&a], eps)?;
            let params = MarsParams::new(h_l, rtiny, alpha.to_radians(), dt.unwrap_or(h_l))?;
            let u = VelocityField::from_name(&field, t_end)?;
            let times = if checkpoints.is_empty() { crate::mars::standard_checkpoints(t_end) } else { checkpoints };
            let report = track(&gs[0], &u, &params, t_end, &times, tol)?;
            fs::create_dir_all(&output).map_err(|source| Error::Io { path: output.clone(), source })?;
            for c in &report.checkpoints {
                io::write_spadopag(&c.element, &output.join(format!("t_{:.6}.obj", c.t)))?;
                writeln!(out, "t={} components={} holes={}", c.t, c.topology.components, c.topology.total_holes())
                    .map_err(stdout_err)?;
            }
            writeln!(
                out,
                "steps={} splits={} collapses={} quality_unreached={} worst_angle_deg={:.3} topology_preserved={}",
                report.steps,
                report.regularize.splits,
                report.regularize.collapses,
                report.quality_unreached,
                report.worst_angle.to_degrees(),
                report.topology_preserved()
            )
            .map_err(stdout_err)?;
            Ok(0)
        }
        Command::Oracle { op, files, n, threshold } => {
            let paths: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
            let (gs, tol) = load(&paths, eps)?;
            let (lhs, rhs, result) = match (op, gs.as_slice()) {
                (Op::Complement, [a, r]) => (a, &GElement::Bottom, r),
                (Op::Complement, _) => return Err(Error::InvalidParameter("complement takes A RESULT".into())),
                (_, [a, b, r]) => (a, b, r),
                _ => return Err(Error::InvalidParameter("binary operations take A B RESULT".into())),
            };
            let report = pointwise_law_check(result, lhs, rhs, op, n, 3.0 * tol.eps(), cli.seed, tol)?;
            writeln!(out, "{report}").map_err(stdout_err)?;
            Ok(if report.passes(threshold) { 0 } else { 1 })
        }
    }
}

fn binary(op: Op, b: Binary, eps: Option<f64>) -> Result<i32> {
    let (gs, tol) = load(&[&b.a, &b.b], eps)?;
    io::write_spadopag(&apply(op, &gs[0], &gs[1], tol)?, &b.output)?;
    Ok(0)
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("error: UsageError: {first}");
            return 2;
        }
    };
    match execute(cli, &mut std::io::stdout().lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {e}", e.kind());
            exit_code(&e)
        }
    }
}
