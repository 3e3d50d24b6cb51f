use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bspline_core::contours::write_contours;
use bspline_core::fitting::{fit_open_curve, fit_periodic, parameterize_closed, periodic_knots, Parameterization};
use bspline_core::io::{read_curve_spec, read_points_csv, write_curve_spec};
use bspline_core::phantom::{generate, PhantomKind, PhantomParams};
use bspline_core::subdivision::{convergence_report, subdivide_to_depth};
use bspline_core::{ControlPolygon, Error, RefinementMask};

mod reconstruct;

/// Failure carrying the process exit status.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Parse(_) | Error::Io(_) => 2,
            Error::RankDeficient { .. } => 4,
            Error::Insufficient(_) => 5,
            _ => 3,
        };
        Failure::new(code, e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(name = "bspline", version, about = "B-spline curves, subdivision, fitting and contour lofting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a curve-spec at one or more parameters.
    Eval {
        curve: PathBuf,
        #[arg(long = "ts", required = true, allow_negative_numbers = true)]
        ts: Vec<f64>,
    },
    /// Sample a curve-spec at evenly spaced parameters.
    Sample {
        curve: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Refine a control polygon.
    Subdivide {
        polygon: PathBuf,
        #[arg(long, default_value_t = 1)]
        depth: usize,
        /// Treat the polygon as open (end points fixed).
        #[arg(long)]
        open: bool,
        #[arg(long, value_enum, default_value_t = MaskKind::Cubic)]
        mask: MaskKind,
        /// Print `depth,distance` to the limit curve for depths 1..=depth.
        #[arg(long)]
        convergence_report: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Least-squares fit of a curve to ordered points.
    Fit {
        points: PathBuf,
        #[arg(long, default_value_t = 3)]
        degree: usize,
        #[arg(long)]
        num_control: usize,
        /// Fit a closed (periodic) curve.
        #[arg(long)]
        closed: bool,
        /// Uniform instead of chord-length parameters.
        #[arg(long)]
        uniform: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify contours and loft the region of interest into a mesh.
    Reconstruct(reconstruct::ReconstructArgs),
    /// Write a synthetic contour dataset and its labels.
    Phantom(PhantomArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MaskKind {
    Linear,
    Cubic,
}

#[derive(Args)]
struct PhantomArgs {
    #[arg(long, default_value = "cylinder")]
    kind: String,
    #[arg(long, default_value_t = 10)]
    slices: usize,
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long, default_value_t = 10.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.01)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Contour JSON; labels go to `<stem>.labels.csv` beside it.
    #[arg(long)]
    out: PathBuf,
}

fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::new(2, format!("cannot read {}: {e}", path.display())))
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut dyn Write) -> bspline_core::Result<()>,
) -> CmdResult {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io_fail = |e: std::io::Error| Failure::new(3, format!("cannot write {}: {e}", path.display()));
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_fail)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(io_fail)?;
    }
    tmp.persist(path).map_err(|e| io_fail(e.error))?;
    Ok(())
}

/// Sibling path `<stem>.<suffix>` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn emit(out: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> bspline_core::Result<()>) -> CmdResult {
    match out {
        Some(p) => write_atomic(p, body),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            Ok(())
        }
    }
}

fn cmd_eval(curve: &Path, ts: &[f64]) -> CmdResult {
    let curve = read_curve_spec(open_input(curve)?)?;
    let mut lines = String::new();
    for &t in ts {
        let p = curve.evaluate(t)?;
        lines.push_str(&format!("{} {} {}\n", p.x, p.y, p.z));
    }
    print!("{lines}");
    Ok(())
}

fn cmd_sample(curve: &Path, count: usize, out: Option<&Path>) -> CmdResult {
    let curve = read_curve_spec(open_input(curve)?)?;
    let set = curve.sample(count)?;
    log::info!("{} basis evaluations for {} samples", set.basis_evaluations, set.len());
    emit(out, |w| set.write_csv(w))
}

fn cmd_subdivide(
    polygon: &Path,
    depth: usize,
    open: bool,
    mask: MaskKind,
    report: bool,
    out: Option<&Path>,
) -> CmdResult {
    let points = read_points_csv(open_input(polygon)?)?;
    let poly = ControlPolygon::new(points, !open)?;
    let kernel = match mask {
        MaskKind::Linear => RefinementMask::linear(),
        MaskKind::Cubic => RefinementMask::cubic(),
    };
    let refined = subdivide_to_depth(&poly, &kernel, depth)?;
    if report {
        if open || matches!(mask, MaskKind::Linear) {
            return Err(Failure::new(
                3,
                "--convergence-report needs a closed polygon and the cubic mask",
            ));
        }
        let depths: Vec<usize> = (1..=depth).collect();
        let mut table = String::from("depth,distance\n");
        for (d, dist) in convergence_report(&poly, &kernel, &depths)? {
            table.push_str(&format!("{d},{dist:e}\n"));
        }
        eprint!("{table}");
    }
    emit(out, |w| refined.write_csv(w))
}

fn cmd_fit(
    points: &Path,
    degree: usize,
    num_control: usize,
    closed: bool,
    uniform: bool,
    out: Option<&Path>,
) -> CmdResult {
    let points = read_points_csv(open_input(points)?)?;
    let scheme = if uniform {
        Parameterization::Uniform
    } else {
        Parameterization::ChordLength
    };
    if points.len() < num_control {
        return Err(Failure::new(
            4,
            format!("{} points cannot determine {num_control} control points", points.len()),
        ));
    }
    let (curve, residual) = if closed {
        let params = parameterize_closed(&points, scheme)?;
        let knots = periodic_knots(&params, degree, num_control)?;
        let (curve, sol) = fit_periodic(&points, &params, degree, num_control, &knots)?;
        (curve, sol.residual_rms)
    } else {
        let (curve, sol, _) = fit_open_curve(&points, degree, num_control, scheme)?;
        (curve, sol.residual_rms)
    };
    eprintln!("residual_rms {residual:e}");
    emit(out, |w| write_curve_spec(&curve, w))
}

fn cmd_phantom(args: &PhantomArgs) -> CmdResult {
    let kind: PhantomKind = args.kind.parse()?;
    let params = PhantomParams {
        slices: args.slices,
        points_per_contour: args.points,
        radius: args.radius,
        noise: args.noise,
        seed: args.seed,
    };
    let phantom = generate(kind, &params)?;
    write_atomic(&args.out, |w| write_contours(&phantom.contours, w))?;
    write_atomic(&sibling(&args.out, "labels.csv"), |w| phantom.write_labels(w))?;
    log::info!("{} contours written to {}", phantom.contours.len(), args.out.display());
    Ok(())
}

fn configure_threads() -> CmdResult {
    let Ok(value) = std::env::var("BSPLINE_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::new(3, format!("BSPLINE_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::new(3, e.to_string()))
}

fn run(cli: Cli) -> CmdResult {
    configure_threads()?;
    match cli.command {
        Command::Eval { curve, ts } => cmd_eval(&curve, &ts),
        Command::Sample { curve, count, out } => cmd_sample(&curve, count, out.as_deref()),
        Command::Subdivide {
            polygon,
            depth,
            open,
            mask,
            convergence_report,
            out,
        } => cmd_subdivide(&polygon, depth, open, mask, convergence_report, out.as_deref()),
        Command::Fit {
            points,
            degree,
            num_control,
            closed,
            uniform,
            out,
        } => cmd_fit(&points, degree, num_control, closed, uniform, out.as_deref()),
        Command::Reconstruct(args) => reconstruct::run(&args),
        Command::Phantom(args) => cmd_phantom(&args),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
