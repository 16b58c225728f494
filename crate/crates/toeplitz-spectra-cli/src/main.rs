//! Batch front-end: reads a model file, runs one analysis command and writes
//! a CSV or JSON artifact. Exit codes: 0 success, 1 validation error,
//! 2 numerical failure, 3 failed cross-validation in `widom-check`.

mod artifacts;
mod model_file;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use toeplitz_spectra::spectra::{
    brillouin, chiral_windings, finite_spectrum, gamma_find, hypothesis_report, lambda_scan,
    quasimode, sigma_samples, winding_breakpoints, zero_mode_certificate, LambdaCloud,
    LAMBDA_RAW_TOL,
};
use toeplitz_spectra::widom::{widom_check_cases, WidomCheckCase, WIDOM_CHECK_TOL};
use toeplitz_spectra::{BlockSymbol, Rect, SpectraError};

use artifacts::{emit, fmt_f64, to_json, CsvWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(
    name = "toeplitz-spectra",
    about = "Spectral analysis of block-tridiagonal Laurent/Toeplitz operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Model file (JSON; see fixtures/ for the schema).
    #[arg(long, global = true)]
    model: Option<PathBuf>,

    /// Scan window re_min,re_max,im_min,im_max.
    #[arg(long, global = true, value_name = "A,B,C,D", allow_hyphen_values = true)]
    window: Option<String>,

    /// Grid resolution for scans.
    #[arg(long, global = true)]
    res: Option<f64>,

    /// Scaling parameter s of the symbol.
    #[arg(long, global = true, default_value_t = 1.0)]
    scale: f64,

    /// Section length in blocks (also the momentum node count for sigma and
    /// the quasimode length).
    #[arg(long, global = true)]
    n: Option<usize>,

    /// Seed for the randomized batteries.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Artifact format (point clouds default to csv, reports to json).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker thread cap (TOEPLITZ_SPECTRA_THREADS is the env equivalent).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Periodic spectrum samples over the momentum grid.
    Sigma,
    /// Equal-modulus set scan with refinement.
    Lambda,
    /// Spectral outliers (zeros of the prefix minor off the scanned set).
    Gamma,
    /// Finite-section spectrum with localization diagnostics.
    Finite,
    /// Seeded cross-validation of the determinant expansion.
    #[command(name = "widom-check")]
    WidomCheck {
        /// Number of random cases.
        #[arg(long, default_value_t = 100)]
        cases: usize,
    },
    /// Chiral leg windings and the zero-mode certificate.
    Chiral,
    /// Generalized Brillouin zone over the scanned equal-modulus set.
    Brillouin,
    /// Transfer-propagated quasimode at a scanned equal-modulus point.
    Quasimode,
    /// Hypothesis screening report.
    Hypotheses,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| {
            std::env::var("TOEPLITZ_SPECTRA_THREADS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(0);
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn validation(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn numerical(err: SpectraError) -> Failure {
    Failure {
        code: if err.is_validation() { 1 } else { 2 },
        message: format!("[{}] {err}", err.code()),
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    if let Command::WidomCheck { cases } = cli.command {
        return widom_check(cli, cases);
    }
    let model_path = cli
        .model
        .as_ref()
        .ok_or_else(|| validation("--model is required"))?;
    let symbol = model_file::load_model(model_path).map_err(validation)?;
    if !(cli.scale > 0.0) {
        return Err(validation("--scale must be positive"));
    }
    match cli.command {
        Command::Sigma => sigma(cli, &symbol),
        Command::Lambda => lambda(cli, &symbol),
        Command::Gamma => gamma(cli, &symbol),
        Command::Finite => finite(cli, &symbol),
        Command::Chiral => chiral(cli, &symbol),
        Command::Brillouin => brillouin_cmd(cli, &symbol),
        Command::Quasimode => quasimode_cmd(cli, &symbol),
        Command::Hypotheses => hypotheses(cli, &symbol),
        Command::WidomCheck { .. } => unreachable!(),
    }
}

fn parse_window(cli: &Cli, symbol: &BlockSymbol) -> Result<Rect, Failure> {
    match &cli.window {
        Some(text) => {
            let parts: Vec<f64> = text
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| validation(format!("cannot parse --window: {e}")))?;
            if parts.len() != 4 {
                return Err(validation("--window needs four numbers"));
            }
            if parts[0] >= parts[1] || parts[2] >= parts[3] {
                return Err(validation("--window must be nonempty"));
            }
            Ok(Rect::new(parts[0], parts[1], parts[2], parts[3]))
        }
        None => {
            let b = symbol.norm_bound() * 1.1 + 0.1;
            Ok(Rect::centered(b))
        }
    }
}

fn resolution(cli: &Cli, window: &Rect) -> Result<f64, Failure> {
    match cli.res {
        Some(r) if r > 0.0 => Ok(r),
        Some(_) => Err(validation("--res must be positive")),
        None => Ok(window.width().max(window.height()) / 200.0),
    }
}

fn format_or(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

fn scan(cli: &Cli, symbol: &BlockSymbol) -> Result<(LambdaCloud, Rect, f64), Failure> {
    let window = parse_window(cli, symbol)?;
    let res = resolution(cli, &window)?;
    let scaled = symbol.scale(cli.scale).map_err(numerical)?;
    Ok((
        lambda_scan(&scaled, &window, res, LAMBDA_RAW_TOL),
        window,
        res,
    ))
}

fn sigma(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let k_count = cli.n.unwrap_or(512).max(2);
    let samples = sigma_samples(symbol, cli.scale, k_count);
    match format_or(cli, Format::Csv) {
        Format::Csv => {
            let mut csv = CsvWriter::new(&["k", "band", "re", "im"]);
            for s in &samples {
                for (band, e) in s.fiber.iter().enumerate() {
                    csv.row(&[
                        fmt_f64(s.k),
                        band.to_string(),
                        fmt_f64(e.re),
                        fmt_f64(e.im),
                    ]);
                }
            }
            emit(cli.out.as_deref(), &csv.finish()).map_err(validation)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Fiber {
                k: f64,
                eigenvalues: Vec<[f64; 2]>,
            }
            let rows: Vec<Fiber> = samples
                .iter()
                .map(|s| Fiber {
                    k: s.k,
                    eigenvalues: s.fiber.iter().map(|e| [e.re, e.im]).collect(),
                })
                .collect();
            emit(cli.out.as_deref(), &to_json(&rows)).map_err(validation)
        }
    }
}

fn lambda(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let (cloud, _, _) = scan(cli, symbol)?;
    match format_or(cli, Format::Csv) {
        Format::Csv => {
            let mut csv = CsvWriter::new(&["re", "im", "middle_gap", "f_distance"]);
            for p in &cloud.points {
                let fd = p.nearest_f.map(|(_, d)| d).unwrap_or(f64::NAN);
                csv.row(&[
                    fmt_f64(p.energy.re),
                    fmt_f64(p.energy.im),
                    fmt_f64(p.middle_gap),
                    fmt_f64(fd),
                ]);
            }
            emit(cli.out.as_deref(), &csv.finish()).map_err(validation)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Point {
                re: f64,
                im: f64,
                middle_gap: f64,
            }
            #[derive(Serialize)]
            struct Report {
                points: Vec<Point>,
                f_points: Vec<[f64; 2]>,
            }
            let report = Report {
                points: cloud
                    .points
                    .iter()
                    .map(|p| Point {
                        re: p.energy.re,
                        im: p.energy.im,
                        middle_gap: p.middle_gap,
                    })
                    .collect(),
                f_points: cloud
                    .f_points
                    .iter()
                    .map(|f| [f.energy.re, f.energy.im])
                    .collect(),
            };
            emit(cli.out.as_deref(), &to_json(&report)).map_err(validation)
        }
    }
}

fn gamma(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let (cloud, window, _) = scan(cli, symbol)?;
    let scaled = symbol.scale(cli.scale).map_err(numerical)?;
    let search = gamma_find(&scaled, &window, &cloud);
    for w in &search.warnings {
        eprintln!("warning: {w}");
    }
    match format_or(cli, Format::Csv) {
        Format::Csv => {
            let mut csv = CsvWriter::new(&[
                "re",
                "im",
                "multiplicity",
                "side",
                "q_residual",
                "dim_right",
                "dim_left",
            ]);
            for p in &search.points {
                csv.row(&[
                    fmt_f64(p.energy.re),
                    fmt_f64(p.energy.im),
                    p.multiplicity.to_string(),
                    format!("{:?}", p.side).to_lowercase(),
                    fmt_f64(p.q_residual),
                    p.kernel_dims.0.to_string(),
                    p.kernel_dims.1.to_string(),
                ]);
            }
            emit(cli.out.as_deref(), &csv.finish()).map_err(validation)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Outlier {
                re: f64,
                im: f64,
                multiplicity: usize,
                side: toeplitz_spectra::spectra::Side,
                q_residual: f64,
                dim_right: usize,
                dim_left: usize,
            }
            #[derive(Serialize)]
            struct Report {
                outliers: Vec<Outlier>,
                warnings: Vec<String>,
            }
            let report = Report {
                outliers: search
                    .points
                    .iter()
                    .map(|p| Outlier {
                        re: p.energy.re,
                        im: p.energy.im,
                        multiplicity: p.multiplicity,
                        side: p.side,
                        q_residual: p.q_residual,
                        dim_right: p.kernel_dims.0,
                        dim_left: p.kernel_dims.1,
                    })
                    .collect(),
                warnings: search.warnings.clone(),
            };
            emit(cli.out.as_deref(), &to_json(&report)).map_err(validation)
        }
    }
}

fn finite(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let n = cli.n.unwrap_or(100);
    if n == 0 {
        return Err(validation("--n must be at least 1"));
    }
    let spec = finite_spectrum(symbol, n, cli.scale, true).map_err(numerical)?;
    let loc = spec.localization.as_ref().expect("vectors requested");
    match format_or(cli, Format::Csv) {
        Format::Csv => {
            let mut csv = CsvWriter::new(&["re", "im", "left_mass", "participation_ratio"]);
            for (e, m) in spec.eigenvalues.iter().zip(loc.iter()) {
                csv.row(&[
                    fmt_f64(e.re),
                    fmt_f64(e.im),
                    fmt_f64(m.left_mass),
                    fmt_f64(m.participation_ratio),
                ]);
            }
            emit(cli.out.as_deref(), &csv.finish()).map_err(validation)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Level {
                re: f64,
                im: f64,
                left_mass: f64,
                participation_ratio: f64,
            }
            let rows: Vec<Level> = spec
                .eigenvalues
                .iter()
                .zip(loc.iter())
                .map(|(e, m)| Level {
                    re: e.re,
                    im: e.im,
                    left_mass: m.left_mass,
                    participation_ratio: m.participation_ratio,
                })
                .collect();
            emit(cli.out.as_deref(), &to_json(&rows)).map_err(validation)
        }
    }
}

fn widom_check(cli: &Cli, cases: usize) -> Result<(), Failure> {
    if cases == 0 {
        return Err(validation("--cases must be at least 1"));
    }
    let results = widom_check_cases(cli.seed, cases);
    let mut all_pass = true;
    println!("case  L  N  gap        main       var2       var3       transfer   status");
    for case in &results {
        let status = if case.pass { "pass" } else { "FAIL" };
        if !case.pass {
            all_pass = false;
        }
        println!(
            "{:>4}  {}  {}  {:.3e}  {:.3e}  {:.3e}  {:.3e}  {:.3e}  {status}",
            case.index,
            case.block_size,
            case.n,
            case.middle_gap,
            case.rel_err_main,
            case.rel_err_variant2,
            case.rel_err_variant3,
            case.rel_err_transfer
        );
    }
    #[derive(Serialize)]
    struct Report<'a> {
        seed: u64,
        cases: usize,
        tolerance: f64,
        all_pass: bool,
        results: &'a [WidomCheckCase],
    }
    let report = Report {
        seed: cli.seed,
        cases,
        tolerance: WIDOM_CHECK_TOL,
        all_pass,
        results: &results,
    };
    if let Some(out) = cli.out.as_deref() {
        emit(Some(out), &to_json(&report)).map_err(validation)?;
    }
    if !all_pass {
        for case in results.iter().filter(|c| !c.pass) {
            eprintln!(
                "failed case {} (seed {}): L = {}, N = {}, E = {:?}, R = {:?}, V = {:?}, T = {:?}",
                case.index, cli.seed, case.block_size, case.n, case.energy, case.r, case.v, case.t
            );
        }
        return Err(Failure {
            code: 3,
            message: format!("widom-check failed for seed {}", cli.seed),
        });
    }
    Ok(())
}

fn chiral(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let certificate = zero_mode_certificate(symbol).map_err(numerical)?;
    let breakpoints = winding_breakpoints(symbol).map_err(numerical)?;
    let windings_at_scale = chiral_windings(symbol, cli.scale).ok();
    #[derive(Serialize)]
    struct Report {
        certificate: Option<toeplitz_spectra::spectra::ZeroModeCertificate>,
        breakpoints: Vec<f64>,
        scale: f64,
        windings_at_scale: Option<(i64, i64)>,
    }
    let report = Report {
        certificate,
        breakpoints,
        scale: cli.scale,
        windings_at_scale,
    };
    match format_or(cli, Format::Json) {
        Format::Json => emit(cli.out.as_deref(), &to_json(&report)).map_err(validation),
        Format::Csv => Err(validation("chiral emits a JSON report; use --format json")),
    }
}

fn brillouin_cmd(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let (cloud, _, _) = scan(cli, symbol)?;
    if cloud.points.is_empty() {
        return Err(Failure {
            code: 2,
            message: "no equal-modulus points found in the window".into(),
        });
    }
    let scaled = symbol.scale(cli.scale).map_err(numerical)?;
    let zone = brillouin(&scaled, &cloud.points);
    match format_or(cli, Format::Csv) {
        Format::Csv => {
            let mut csv = CsvWriter::new(&["re", "im", "branch", "energy_re", "energy_im"]);
            for p in &zone {
                for (branch, z) in [(0usize, p.lower), (1, p.upper)] {
                    csv.row(&[
                        fmt_f64(z.re),
                        fmt_f64(z.im),
                        branch.to_string(),
                        fmt_f64(p.energy.re),
                        fmt_f64(p.energy.im),
                    ]);
                }
            }
            emit(cli.out.as_deref(), &csv.finish()).map_err(validation)
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Pair {
                energy: [f64; 2],
                lower: [f64; 2],
                upper: [f64; 2],
            }
            let rows: Vec<Pair> = zone
                .iter()
                .map(|p| Pair {
                    energy: [p.energy.re, p.energy.im],
                    lower: [p.lower.re, p.lower.im],
                    upper: [p.upper.re, p.upper.im],
                })
                .collect();
            emit(cli.out.as_deref(), &to_json(&rows)).map_err(validation)
        }
    }
}

fn quasimode_cmd(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let n = cli.n.unwrap_or(64).max(4);
    let (cloud, _, _) = scan(cli, symbol)?;
    let point = cloud
        .points
        .iter()
        .min_by(|a, b| {
            (a.middle_gap, a.energy.re, a.energy.im)
                .partial_cmp(&(b.middle_gap, b.energy.re, b.energy.im))
                .unwrap()
        })
        .ok_or(Failure {
            code: 2,
            message: "no equal-modulus points found in the window".into(),
        })?;
    let scaled = symbol.scale(cli.scale).map_err(numerical)?;
    let qm = quasimode(&scaled, point.energy, n).map_err(numerical)?;
    let l = symbol.block_size();
    let site_amplitudes: Vec<f64> = (0..n)
        .map(|b| {
            (0..l)
                .map(|i| qm.vector[b * l + i].norm_sqr())
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    #[derive(Serialize)]
    struct Report {
        energy: [f64; 2],
        n: usize,
        residual: f64,
        c_estimate: f64,
        modulus_scale: f64,
        site_amplitudes: Vec<f64>,
    }
    let report = Report {
        energy: [point.energy.re, point.energy.im],
        n,
        residual: qm.residual,
        c_estimate: qm.c_estimate,
        modulus_scale: qm.scale,
        site_amplitudes,
    };
    match format_or(cli, Format::Json) {
        Format::Json => emit(cli.out.as_deref(), &to_json(&report)).map_err(validation),
        Format::Csv => {
            let mut csv = CsvWriter::new(&["site", "amplitude"]);
            for (site, amp) in report.site_amplitudes.iter().enumerate() {
                csv.row(&[(site + 1).to_string(), fmt_f64(*amp)]);
            }
            emit(cli.out.as_deref(), &csv.finish()).map_err(validation)
        }
    }
}

fn hypotheses(cli: &Cli, symbol: &BlockSymbol) -> Result<(), Failure> {
    let window = parse_window(cli, symbol)?;
    let scaled = symbol.scale(cli.scale).map_err(numerical)?;
    let report = hypothesis_report(&scaled, &window);
    match format_or(cli, Format::Json) {
        Format::Json => emit(cli.out.as_deref(), &to_json(&report)).map_err(validation),
        Format::Csv => Err(validation("hypotheses emits a JSON report; use --format json")),
    }
}
