use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use rknlab::bench::{
    convergence_run, cpu_bench, log_grid, normalize, slope_fit, write_csv, ConvergenceSettings,
    ErrorMode, Problem, ReferenceKind, SLOPE_WINDOW,
};
use rknlab::conditions::{
    export_solutions, optimize_six_stage, random_search, residuals, OptimizeOptions, SearchConfig,
};
use rknlab::integrate::Projection;
use rknlab::lie::method_error;
use rknlab::methods::{
    builtin_catalog, find_method, load_method, method_to_json, save_method, splitting_to_tableau,
    Scheme, SplittingMethod,
};
use rknlab::problems::{KeplerSetup, PLUMMER_SOFTENING};
use rknlab::reference::GbsConfig;

#[derive(Parser)]
#[command(name = "rknlab", version, about = "Splitting integrators with complex coefficients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect and check the method catalog.
    Methods {
        #[command(subcommand)]
        action: MethodsCmd,
    },
    /// Print the leading error coefficients of a method.
    Bch(MethodArg),
    /// Multistart Newton search for fifth-order methods.
    Search(SearchArgs),
    /// Add a stage to a drift-first method and minimize its leading error.
    Optimize(OptimizeArgs),
    /// Convergence and cost benchmarks.
    Bench {
        #[command(subcommand)]
        action: BenchCmd,
    },
}

#[derive(Subcommand)]
enum MethodsCmd {
    /// List catalog methods.
    List,
    /// Print a method as JSON.
    Show(MethodArg),
    /// Print order-condition residuals.
    Verify {
        /// Check every catalog method.
        #[arg(long)]
        all: bool,
        #[command(flatten)]
        method: OptionalMethodArg,
        /// Exit with status 2 when a residual exceeds this.
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Args)]
struct MethodArg {
    /// Catalog name, optionally suffixed with -adjoint or -conjugate.
    #[arg(long, required_unless_present = "file", conflicts_with = "file")]
    name: Option<String>,
    /// Method JSON file.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct OptionalMethodArg {
    #[arg(long, conflicts_with = "file")]
    name: Option<String>,
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 1000)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Half width of the square sampled for real and imaginary parts.
    #[arg(long, default_value_t = 2.0)]
    rect: f64,
    /// Directory for the method files and index.json.
    #[arg(long, default_value = "solutions")]
    out: PathBuf,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "UPPER")]
enum SchemeArg {
    Rkna,
    Rknb,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, default_value = "AC1")]
    base: String,
    /// Perturbed searches in addition to the embedding itself.
    #[arg(long, default_value_t = 32)]
    starts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the optimized method here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Error IQR against a reference over a grid of step sizes, as CSV.
    Convergence(ConvergenceArgs),
    /// Wall time per step on a Plummer sphere, normalized to leapfrog.
    Cpu(CpuArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemArg {
    Kepler,
    Plummer,
}

#[derive(Clone, Copy, ValueEnum)]
enum ErrorArg {
    Global,
    Local,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReferenceArg {
    Auto,
    Gbs,
}

#[derive(Args)]
struct ConvergenceArgs {
    #[arg(long, value_enum)]
    problem: ProblemArg,
    #[arg(long, value_delimiter = ',', default_value = "LEAPFROG,AC1")]
    methods: Vec<String>,
    /// Smallest step size (default: period/1000 for kepler, 5e-4 for plummer).
    #[arg(long)]
    hmin: Option<f64>,
    /// Largest step size (default: period/20 for kepler, 4e-3 for plummer).
    #[arg(long)]
    hmax: Option<f64>,
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// Seed of the Plummer sample.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV; a sidecar FILE.meta.json records the run settings.
    #[arg(long)]
    out: PathBuf,
    /// Duration (default: 50 periods for kepler, 2 time units for plummer).
    #[arg(long)]
    duration: Option<f64>,
    /// Plummer particle count (default 100).
    #[arg(long)]
    n: Option<usize>,
    /// Plummer with 400 particles.
    #[arg(long)]
    full: bool,
    #[arg(long)]
    eccentricity: Option<f64>,
    #[arg(long)]
    softening: Option<f64>,
    #[arg(long, value_enum, default_value = "global")]
    error: ErrorArg,
    #[arg(long, value_enum, default_value = "auto")]
    reference: ReferenceArg,
    /// Tolerance of the extrapolation reference (absolute and relative).
    #[arg(long, default_value_t = 1e-13)]
    gbs_tol: f64,
    /// Keep imaginary parts instead of discarding them after each step.
    #[arg(long)]
    no_projection: bool,
    /// Write 0 in the timing column so the output is byte-stable.
    #[arg(long)]
    no_timing: bool,
    /// Worker threads for the grid (default 1, so timings are not contended).
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Also write a gnuplot script plotting the CSV.
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Args)]
struct CpuArgs {
    #[arg(long, default_value_t = 10000)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    steps: usize,
    #[arg(long, value_delimiter = ',', default_value = "LEAPFROG,TRIPLEJUMP,BR1,AC1")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum CliError {
    Validation(String),
    Runtime(String),
}

type CliResult = Result<(), CliError>;

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn resolve(name: Option<&str>, file: Option<&Path>) -> Result<SplittingMethod, CliError> {
    match (name, file) {
        (Some(n), _) => find_method(n).map_err(|e| validation(format!("--name: {e}"))),
        (None, Some(f)) => load_method(f).map_err(|e| validation(format!("--file: {e}"))),
        (None, None) => Err(validation("expected --name or --file")),
    }
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(validation("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(runtime),
    }
}

fn cplx(z: num_complex::Complex64) -> String {
    if z.im == 0.0 {
        format!("{:+.6e}", z.re)
    } else {
        format!("{:+.6e} {:+.6e}i", z.re, z.im)
    }
}

fn methods(action: MethodsCmd) -> CliResult {
    match action {
        MethodsCmd::List => {
            println!("{:<12} {:<6} {:>5} {:>6} {:<8}", "name", "scheme", "order", "stages", "coeffs");
            for r in builtin_catalog() {
                let m = &r.method;
                let kind = if m.is_real() { "real" } else { "complex" };
                println!(
                    "{:<12} {:<6} {:>5} {:>6} {:<8}",
                    m.name(),
                    m.scheme(),
                    m.order(),
                    m.stages(),
                    kind
                );
            }
            Ok(())
        }
        MethodsCmd::Show(arg) => {
            let m = resolve(arg.name.as_deref(), arg.file.as_deref())?;
            print!("{}", method_to_json(&m));
            Ok(())
        }
        MethodsCmd::Verify { all, method, tol } => {
            if !(tol > 0.0) {
                return Err(validation("--tol must be positive"));
            }
            let list: Vec<SplittingMethod> = if all {
                builtin_catalog().into_iter().map(|r| r.method).collect()
            } else if method.name.is_none() && method.file.is_none() {
                return Err(validation("expected --all, --name or --file"));
            } else {
                vec![resolve(method.name.as_deref(), method.file.as_deref())?]
            };
            println!("{:<12} {:>5} {:>12} {:>12}  status", "name", "order", "residual", "canonicity");
            let mut failed = Vec::new();
            for m in &list {
                let t = splitting_to_tableau(m).map_err(runtime)?;
                let res = residuals(&t).max_norm_for_order(m.order());
                let ok = res < tol;
                if !ok {
                    failed.push(m.name().to_string());
                }
                println!(
                    "{:<12} {:>5} {:>12.3e} {:>12.3e}  {}",
                    m.name(),
                    m.order(),
                    res,
                    t.canonicity_defect(),
                    if ok { "ok" } else { "FAIL" }
                );
            }
            if failed.is_empty() {
                Ok(())
            } else {
                Err(validation(format!("residual above --tol {tol:e}: {}", failed.join(", "))))
            }
        }
    }
}

fn bch(arg: MethodArg) -> CliResult {
    let m = resolve(arg.name.as_deref(), arg.file.as_deref())?;
    let report = method_error(&m);
    println!("{}", m.name());
    for (label, c) in ["X11", "X16", "X17", "X19", "X20"].iter().zip(report.coefficients) {
        println!("  {label}  {}", cplx(c));
    }
    println!("  norm {:.6e}", report.norm);
    Ok(())
}

fn search(args: SearchArgs) -> CliResult {
    if !(args.rect > 0.0) {
        return Err(validation("--rect must be positive"));
    }
    let scheme = match args.scheme {
        SchemeArg::Rkna => Scheme::Rkna,
        SchemeArg::Rknb => Scheme::Rknb,
    };
    let mut cfg = SearchConfig::new(scheme, args.starts, args.seed);
    cfg.half_width = args.rect;
    let t0 = Instant::now();
    let found = with_threads(args.threads, || random_search(&cfg))?;
    export_solutions(&args.out, &found, &cfg).map_err(runtime)?;
    let real = found.iter().filter(|s| s.flags.real).count();
    let wanted = found
        .iter()
        .filter(|s| s.flags.positive_real_parts && s.flags.imaginary_leading_error)
        .count();
    println!(
        "{} solutions ({real} real, {wanted} complex with positive real parts and imaginary error) from {} starts in {:.1} s",
        found.len(),
        args.starts,
        t0.elapsed().as_secs_f64()
    );
    for s in found.iter().filter(|s| s.matches.is_some()) {
        println!("  {} = {}", s.method.name(), s.matches.as_deref().unwrap_or_default());
    }
    println!("wrote {}", args.out.join("index.json").display());
    Ok(())
}

fn optimize(args: OptimizeArgs) -> CliResult {
    let base = find_method(&args.base).map_err(|e| validation(format!("--base: {e}")))?;
    let opts = OptimizeOptions {
        starts: args.starts,
        seed: args.seed,
        ..Default::default()
    };
    let t0 = Instant::now();
    let out = with_threads(args.threads, || optimize_six_stage(&base, &opts))?.map_err(runtime)?;
    println!("base {} error norm      {:.4e}", base.name(), out.base_error.norm);
    println!("optimized error norm    {:.4e}", out.error.norm);
    println!("max residual            {:.2e}", out.residual);
    println!(
        "{} charts, {} evaluations, {:.1} s",
        out.rounds,
        out.evaluations,
        t0.elapsed().as_secs_f64()
    );
    match args.out {
        Some(path) => {
            save_method(&out.method, &path).map_err(runtime)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", method_to_json(&out.method)),
    }
    Ok(())
}

fn positive(flag: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(validation(format!("{flag} must be positive, got {x}")))
    }
}

fn convergence(args: ConvergenceArgs) -> CliResult {
    let methods: Vec<SplittingMethod> = args
        .methods
        .iter()
        .map(|n| find_method(n).map_err(|e| validation(format!("--methods: {e}"))))
        .collect::<Result<_, _>>()?;
    let (problem, default_duration, default_h) = match args.problem {
        ProblemArg::Kepler => {
            let e = args.eccentricity.unwrap_or(0.2);
            if !(0.0..1.0).contains(&e) {
                return Err(validation("--eccentricity must lie in [0, 1)"));
            }
            if args.softening.is_some_and(|s| s != 0.0) {
                return Err(validation("--softening is not supported for kepler"));
            }
            let setup = KeplerSetup::new(e, 1.0, 1.0);
            let period = setup.period();
            (Problem::Kepler { setup }, 50.0 * period, (period / 1000.0, period / 20.0))
        }
        ProblemArg::Plummer => {
            let n = match (args.full, args.n) {
                (true, Some(_)) => return Err(validation("--full conflicts with --n")),
                (true, None) => 400,
                (false, n) => n.unwrap_or(100),
            };
            if n < 2 {
                return Err(validation("--n must be at least 2"));
            }
            let softening = args.softening.unwrap_or(PLUMMER_SOFTENING);
            if !(softening >= 0.0) {
                return Err(validation("--softening must be non-negative"));
            }
            let problem = Problem::Plummer {
                n,
                seed: args.seed,
                softening,
            };
            (problem, 2.0, (5e-4, 4e-3))
        }
    };
    let duration = positive("--duration", args.duration.unwrap_or(default_duration))?;
    let hmin = positive("--hmin", args.hmin.unwrap_or(default_h.0))?;
    let hmax = positive("--hmax", args.hmax.unwrap_or(default_h.1))?;
    if hmin > hmax {
        return Err(validation("--hmin must not exceed --hmax"));
    }
    if hmax > duration {
        return Err(validation("--hmax must not exceed the duration"));
    }
    if args.points < 1 {
        return Err(validation("--points must be at least 1"));
    }
    let gbs_tol = positive("--gbs-tol", args.gbs_tol)?;
    if args.threads == 0 {
        return Err(validation("--threads must be at least 1"));
    }

    let mut settings = ConvergenceSettings::new(duration);
    settings.gbs = GbsConfig::with_tol(gbs_tol);
    settings.timing = !args.no_timing;
    settings.error = match args.error {
        ErrorArg::Global => ErrorMode::Global,
        ErrorArg::Local => ErrorMode::Local,
    };
    settings.reference = match args.reference {
        ReferenceArg::Auto => ReferenceKind::Auto,
        ReferenceArg::Gbs => ReferenceKind::Gbs,
    };
    if args.no_projection {
        settings.projection = Projection::None;
    }
    let hs = log_grid(hmin, hmax, args.points);

    let mut records = Vec::new();
    for m in &methods {
        let rs = with_threads(Some(args.threads), || convergence_run(m, &problem, &hs, &settings))?
            .map_err(runtime)?;
        match slope_fit(&rs, SLOPE_WINDOW) {
            Ok(p) => eprintln!("{:<12} slope {p:.2}", m.name()),
            Err(e) => eprintln!("{:<12} slope unavailable: {e}", m.name()),
        }
        for r in rs.iter().filter(|r| r.is_failed()) {
            eprintln!(
                "{:<12} h={:e} failed: {}",
                r.method,
                r.stepsize,
                r.failure.as_deref().unwrap_or_default()
            );
        }
        records.extend(rs);
    }

    let file = File::create(&args.out).map_err(|e| runtime(format!("--out: {e}")))?;
    write_csv(BufWriter::new(file), &records).map_err(runtime)?;

    let meta = json!({
        "csv": args.out.file_name().map(|s| s.to_string_lossy()),
        "problem": &problem,
        "units": "G = 1; kepler M = 1, a = 1; plummer standard units (M = 1, E = -1/4)",
        "duration": duration,
        "methods": args.methods,
        "hmin": hmin,
        "hmax": hmax,
        "points": args.points,
        "seed": args.seed,
        "projection": if args.no_projection { "none" } else { "discard_imaginary" },
        "error": settings.error,
        "reference": settings.reference,
        "gbs": { "atol": settings.gbs.atol, "rtol": settings.gbs.rtol, "max_columns": settings.gbs.max_columns },
        "fsal": settings.fsal,
        "timing": settings.timing,
        "threads": args.threads,
        "error_samples": "every step boundary, after projection",
    });
    let meta_path = sidecar(&args.out);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta).map_err(runtime)? + "\n")
        .map_err(runtime)?;
    if let Some(script) = &args.script {
        write_script(script, &args.out, &args.methods).map_err(runtime)?;
    }
    eprintln!("wrote {} and {}", args.out.display(), meta_path.display());
    Ok(())
}

fn sidecar(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn write_script(path: &Path, csv: &Path, methods: &[String]) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set logscale xy")?;
    writeln!(w, "set xlabel 'h'")?;
    writeln!(w, "set ylabel 'IQR of position error'")?;
    let plots: Vec<String> = methods
        .iter()
        .map(|m| {
            format!(
                "'{}' using (strcol(1) eq '{}' ? $3 : NaN):5 with linespoints title '{}'",
                csv.display(),
                m.to_ascii_uppercase(),
                m
            )
        })
        .collect();
    writeln!(w, "plot {}", plots.join(", \\\n     "))?;
    w.flush()
}

fn cpu(args: CpuArgs) -> CliResult {
    if args.n < 2 {
        return Err(validation("--n must be at least 2"));
    }
    if args.steps < 1 {
        return Err(validation("--steps must be at least 1"));
    }
    let methods: Vec<SplittingMethod> = args
        .methods
        .iter()
        .map(|n| find_method(n).map_err(|e| validation(format!("--methods: {e}"))))
        .collect::<Result<_, _>>()?;
    let mut results = Vec::new();
    for m in &methods {
        results.push(cpu_bench(m, args.n, args.steps, args.seed).map_err(runtime)?);
    }
    let base = if results.iter().any(|r| r.method == "LEAPFROG") {
        "LEAPFROG"
    } else {
        results[0].method.as_str()
    };
    let ratios = normalize(&results, base).unwrap_or_default();
    println!("{} particles, {} steps, normalized to {base}", args.n, args.steps);
    println!("{:<12} {:>8} {:>10} {:>14} {:>8}", "method", "arith", "evals/step", "ns/step", "ratio");
    for (r, (_, ratio)) in results.iter().zip(&ratios) {
        println!(
            "{:<12} {:>8} {:>10.2} {:>14.0} {:>8.2}",
            r.method,
            if r.complex_arithmetic { "complex" } else { "real" },
            r.force_evaluations_per_step,
            r.ns_per_step,
            ratio
        );
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Methods { action } => methods(action),
        Command::Bch(arg) => bch(arg),
        Command::Search(args) => search(args),
        Command::Optimize(args) => optimize(args),
        Command::Bench { action } => match action {
            BenchCmd::Convergence(args) => convergence(args),
            BenchCmd::Cpu(args) => cpu(args),
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
