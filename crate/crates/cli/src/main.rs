//! `opweave` — plan and verify weaved operator-basis changes.
//!
//! Subcommands: `weave` (emit W_M), `verify` (check the defining
//! properties), `plan` (DoC and gate-cost report), `u1` (lattice model
//! report), `spectrum` and `trotter` (dense oracle). Outputs are
//! deterministic; errors go to stderr as structured JSON records.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use opweave::error::Error;
use opweave::graph::coupling_graph;
use opweave::numerics::{
    build_hamiltonian, compare_spectra, redigitized_argument_ranges, spectrum, trotter_evolve,
    BasisMode, Digitization, SpectrumReport, TrotterBasis, U1Model,
};
use opweave::plan::{
    choose_partition, plan_report, HamiltonianShape, Partition, TermDegree,
};
use opweave::sparse::SparseRowMatrix;
use opweave::u1::{electric_form, magnetic_terms, model_report, rotate_model};
use opweave::u1::{LatticeGeometry, ModelParams, RescaleReport};
use opweave::weave::{verify_weaved, weave_general, CostLedger};

/// Environment variable naming the default directory for output files.
const OUT_DIR_ENV: &str = "OPWEAVE_OUT_DIR";

#[derive(Parser)]
#[command(name = "opweave", version, about = "Weaved operator-basis planning and U(1) lattice oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the weaved matrix W_M and emit it in coordinate text format.
    Weave(WeaveArgs),
    /// Check orthogonality, uniform first column and column sums.
    Verify(VerifyArgs),
    /// Degree-of-coupling and gate-cost report for an abstract Hamiltonian shape.
    Plan(PlanArgs),
    /// Report for the compact U(1) lattice model.
    U1(U1Args),
    /// Dense-oracle spectrum of the lattice Hamiltonian.
    Spectrum(SpectrumArgs),
    /// First-order Trotter evolution error against the exact exponential.
    Trotter(TrotterArgs),
}

#[derive(Args)]
struct WeaveArgs {
    /// Target dimension M.
    #[arg(long)]
    dim: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Build and verify W_M for this dimension.
    #[arg(long, conflicts_with = "input")]
    dim: Option<usize>,
    /// Verify a matrix from a coordinate-format file.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Verification tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// Number of operators.
    #[arg(long)]
    n: usize,
    /// Qubits per operator.
    #[arg(long)]
    nq: u32,
    /// Override the number of sub-blocks (default: round(log2 N)).
    #[arg(long)]
    subblocks: Option<usize>,
    /// Degree of the global function F (a positive integer or `inf`).
    #[arg(long, default_value = "inf")]
    deg_f: TermDegree,
    /// Degree of the global function G.
    #[arg(long, default_value = "2")]
    deg_g: TermDegree,
    /// Degree of the local function f.
    #[arg(long, default_value = "inf")]
    deg_local_f: TermDegree,
    /// Degree of the local function g.
    #[arg(long, default_value = "2")]
    deg_local_g: TermDegree,
    /// Also write the rotated coupling graph in DOT format.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct U1Args {
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ny: usize,
    #[arg(long)]
    nq: u32,
    /// Dimensionless gauge coupling.
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    /// Lattice spacing.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    subblocks: Option<usize>,
    /// Report file (stdout when omitted).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Export the electric coupling matrix in coordinate format.
    #[arg(long)]
    export_electric: Option<PathBuf>,
    /// Export the rotated electric coupling matrix in coordinate format.
    #[arg(long)]
    export_electric_rotated: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpectrumMode {
    Original,
    RotatedExact,
    Redigitized,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ny: usize,
    #[arg(long)]
    nq: u32,
    #[arg(long, value_enum, default_value_t = SpectrumMode::Original)]
    mode: SpectrumMode,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    subblocks: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrotterArgs {
    #[arg(long)]
    nx: usize,
    #[arg(long)]
    ny: usize,
    #[arg(long)]
    nq: u32,
    /// Evolution time.
    #[arg(long)]
    t: f64,
    /// Comma-separated step counts.
    #[arg(long, value_delimiter = ',', default_value = "4,8,16")]
    steps: Vec<u32>,
    #[arg(long, value_enum, default_value_t = CliBasis::Original)]
    basis: CliBasis,
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    #[arg(long)]
    subblocks: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CliBasis {
    Original,
    Weaved,
}

/// CLI-level failure: either an error bubbling up from the library or a
/// verification that ran fine but did not hold.
enum CliError {
    Core(Error),
    VerificationFailed(String),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        CliError::Core(err)
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Core(Error::Io(err))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Weave(args) => run_weave(args),
        Command::Verify(args) => run_verify(args),
        Command::Plan(args) => run_plan(args),
        Command::U1(args) => run_u1(args),
        Command::Spectrum(args) => run_spectrum(args),
        Command::Trotter(args) => run_trotter(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::VerificationFailed(msg)) => {
            let record = json!({ "error": { "code": "verification-failed", "message": msg } });
            eprintln!("{record}");
            ExitCode::from(1)
        }
        Err(CliError::Core(err)) => {
            let (code, label) = match &err {
                Error::ResourceCap(_) => (3u8, "resource-cap"),
                Error::InvalidArgument(_) | Error::DimensionMismatch(_) => (2, "invalid-argument"),
                Error::Parse { .. } => (2, "parse"),
                Error::NotHermitian(_) => (1, "not-hermitian"),
                Error::Eigensolver(_) => (1, "eigensolver"),
                Error::Io(_) => (1, "io"),
            };
            let record = json!({ "error": { "code": label, "message": err.to_string() } });
            eprintln!("{record}");
            ExitCode::from(code)
        }
    }
}

/// Resolve a path against the output-directory environment variable.
fn resolve_out(path: &Path) -> PathBuf {
    if path.is_absolute() {
        return path.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) => PathBuf::from(dir).join(path),
        None => path.to_path_buf(),
    }
}

fn write_output(path: Option<&PathBuf>, contents: &str) -> Result<(), Error> {
    match path {
        Some(p) => {
            let resolved = resolve_out(p);
            let mut f = BufWriter::new(File::create(resolved)?);
            f.write_all(contents.as_bytes())?;
            f.flush()?;
            Ok(())
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Error> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn partition_for(total: usize, subblocks: Option<usize>) -> Result<Partition, Error> {
    match subblocks {
        Some(ns) => Partition::equal_split(total, ns),
        None => choose_partition(total),
    }
}

fn run_weave(args: WeaveArgs) -> Result<(), CliError> {
    let mut ledger = CostLedger::new();
    let w = weave_general(args.dim, &mut ledger)?;
    let mut buf = Vec::new();
    w.write_coord(&mut buf)?;
    let text = String::from_utf8(buf).expect("coordinate output is ASCII");
    Ok(write_output(args.out.as_ref(), &text)?)
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    if args.tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive").into());
    }
    let matrix = match (&args.dim, &args.input) {
        (Some(dim), None) => {
            let mut ledger = CostLedger::new();
            weave_general(*dim, &mut ledger)?
        }
        (None, Some(path)) => {
            let file = File::open(path).map_err(Error::from)?;
            SparseRowMatrix::read_coord(BufReader::new(file))?
        }
        _ => return Err(Error::invalid("pass exactly one of --dim or --in").into()),
    };
    let report = verify_weaved(&matrix, args.tol)?;
    #[derive(Serialize)]
    struct VerifyOutput<'a> {
        dim: usize,
        tol: f64,
        #[serde(flatten)]
        report: &'a opweave::weave::VerifyReport,
    }
    let out = to_json(&VerifyOutput {
        dim: matrix.dim(),
        tol: args.tol,
        report: &report,
    })?;
    write_output(args.out.as_ref(), &out)?;
    if report.all_ok() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(format!(
            "matrix of dim {} failed verification at tol {:e}",
            matrix.dim(),
            args.tol
        )))
    }
}

fn run_plan(args: PlanArgs) -> Result<(), CliError> {
    let shape = HamiltonianShape {
        n_ops: args.n,
        local_f_degree: args.deg_local_f,
        local_g_degree: args.deg_local_g,
        global_f_degree: args.deg_f,
        global_g_degree: args.deg_g,
        qubits_per_op: args.nq,
    };
    let partition = partition_for(args.n, args.subblocks)?;
    let report = plan_report(&shape, &partition)?;
    if let Some(path) = &args.graph {
        let graph = coupling_graph(&shape, Some(&partition))?;
        let resolved = resolve_out(path);
        let mut f = BufWriter::new(File::create(resolved)?);
        f.write_all(graph.to_dot().as_bytes())?;
    }
    Ok(write_output(args.out.as_ref(), &to_json(&report)?)?)
}

fn run_u1(args: U1Args) -> Result<(), CliError> {
    let geo = LatticeGeometry::new(args.nx, args.ny)?;
    let params = ModelParams::new(args.g, args.a, args.nq)?;
    let partition = partition_for(geo.n_plaquettes(), args.subblocks)?;
    let report = model_report(&geo, &params, Some(&partition))?;
    if args.export_electric.is_some() || args.export_electric_rotated.is_some() {
        let electric = electric_form(&geo, &params);
        if let Some(path) = &args.export_electric {
            let mut f = BufWriter::new(File::create(resolve_out(path))?);
            electric.matrix.write_coord(&mut f)?;
        }
        if let Some(path) = &args.export_electric_rotated {
            let magnetic = magnetic_terms(&geo, &params);
            let rotated = rotate_model(&electric, &magnetic, &partition)?;
            let mut f = BufWriter::new(File::create(resolve_out(path))?);
            rotated.electric_matrix.write_coord(&mut f)?;
        }
    }
    Ok(write_output(args.report.as_ref(), &to_json(&report)?)?)
}

#[derive(Serialize)]
struct SpectrumOutput {
    nx: usize,
    ny: usize,
    n_p: usize,
    n_q: u32,
    mode: &'static str,
    partition: Vec<usize>,
    eigenvalues: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation_from_original: Option<DeviationOutput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rescale: Option<RescaleReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    argument_ranges: Option<Vec<(f64, f64)>>,
}

#[derive(Serialize)]
struct DeviationOutput {
    max_abs_diff: f64,
    relative_deviation: f64,
    low_sector_diff: f64,
}

fn run_spectrum(args: SpectrumArgs) -> Result<(), CliError> {
    let geo = LatticeGeometry::new(args.nx, args.ny)?;
    let params = ModelParams::new(args.g, args.a, args.nq)?;
    let model = U1Model::new(geo, params);
    let digit = Digitization::new(args.nq)?;
    let partition = partition_for(geo.n_plaquettes(), args.subblocks)?;

    let (mode_name, mode) = match args.mode {
        SpectrumMode::Original => ("original", BasisMode::Original),
        SpectrumMode::RotatedExact => ("rotated-exact", BasisMode::RotatedExact),
        SpectrumMode::Redigitized => ("redigitized", BasisMode::RotatedRedigitized),
    };
    let h = build_hamiltonian(&model, &digit, mode, Some(&partition))?;
    let eigenvalues = spectrum(&h)?;
    drop(h);

    let (deviation, rescale, ranges) = if mode == BasisMode::Original {
        (None, None, None)
    } else {
        let original = build_hamiltonian(&model, &digit, BasisMode::Original, None)?;
        let reference = spectrum(&original)?;
        let report: SpectrumReport =
            compare_spectra(reference, eigenvalues.clone(), args.nq)?;
        let deviation = Some(DeviationOutput {
            max_abs_diff: report.max_abs_diff,
            relative_deviation: report.relative_deviation,
            low_sector_diff: report.low_sector_diff,
        });
        // Rescale factors apply only when the rotated arguments are
        // digitized on fresh registers.
        if mode == BasisMode::RotatedRedigitized {
            let rotated = model.rotated(Some(&partition))?;
            let ranges = redigitized_argument_ranges(&model, &digit, Some(&partition))?;
            (deviation, Some(rotated.rescale.clone()), Some(ranges))
        } else {
            (deviation, None, None)
        }
    };

    let out = SpectrumOutput {
        nx: args.nx,
        ny: args.ny,
        n_p: geo.n_plaquettes(),
        n_q: args.nq,
        mode: mode_name,
        partition: partition.block_dims().to_vec(),
        eigenvalues,
        deviation_from_original: deviation,
        rescale,
        argument_ranges: ranges,
    };
    Ok(write_output(args.out.as_ref(), &to_json(&out)?)?)
}

#[derive(Serialize)]
struct TrotterOutput {
    nx: usize,
    ny: usize,
    n_q: u32,
    basis: &'static str,
    t: f64,
    rows: Vec<TrotterRow>,
}

#[derive(Serialize)]
struct TrotterRow {
    steps: u32,
    operator_norm_error: f64,
    unitarity_defect: f64,
}

fn run_trotter(args: TrotterArgs) -> Result<(), CliError> {
    if args.steps.is_empty() {
        return Err(Error::invalid("at least one step count is required").into());
    }
    let geo = LatticeGeometry::new(args.nx, args.ny)?;
    let params = ModelParams::new(args.g, args.a, args.nq)?;
    let model = U1Model::new(geo, params);
    let digit = Digitization::new(args.nq)?;
    let partition = partition_for(geo.n_plaquettes(), args.subblocks)?;
    let (basis_name, basis, mode) = match args.basis {
        CliBasis::Original => ("original", TrotterBasis::Original, BasisMode::Original),
        CliBasis::Weaved => (
            "weaved",
            TrotterBasis::Weaved,
            BasisMode::RotatedRedigitized,
        ),
    };
    let exact = build_hamiltonian(&model, &digit, mode, Some(&partition))?.evolution(args.t)?;
    let mut rows = Vec::new();
    for &steps in &args.steps {
        let u = trotter_evolve(&model, &digit, args.t, steps, basis, Some(&partition))?;
        rows.push(TrotterRow {
            steps,
            operator_norm_error: u.sub(&exact).operator_norm()?,
            unitarity_defect: u.unitarity_defect(),
        });
    }
    let out = TrotterOutput {
        nx: args.nx,
        ny: args.ny,
        n_q: args.nq,
        basis: basis_name,
        t: args.t,
        rows,
    };
    Ok(write_output(args.out.as_ref(), &to_json(&out)?)?)
}
