//! `hitchin`: command-line front end for the spectral-curve toolkit.
//!
//! Subcommands: `family`, `sample`, `actions`, `angles`, `verify`.
//! Complex numbers travel as `[re, im]` in every JSON document. With
//! `--out FILE` the canonical document is written to the file; with
//! `--json` the same document (plus a `manifest` field) goes to stdout.
//!
//! Exit codes: 0 pass, 1 verification failure, 2 input error, 3 numerical
//! failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use hitchin_core::action::{sample_config, solve_actions, ConfigurationPoints, PhaseConfiguration};
use hitchin_core::curve::HyperellipticCurve;
use hitchin_core::dynamics::{verify_commutativity, verify_darboux, BracketReport, VerifyParams};
use hitchin_core::error::Error as CoreError;
use hitchin_core::family::{CoefficientLayout, HamiltonianVector};
use hitchin_core::geometry::{angle_coordinates, PathPolicy};
use hitchin_core::lie::{check_degree_identity, invariant_data, LieAlgebraSpec, LieSeries};
use hitchin_core::quadrature::QuadratureParams;

#[derive(Parser)]
#[command(
    name = "hitchin",
    version,
    about = "Spectral curves and action-angle coordinates of hyperelliptic Hitchin systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesArg {
    A,
    B,
    C,
}

impl From<SeriesArg> for LieSeries {
    fn from(value: SeriesArg) -> Self {
        match value {
            SeriesArg::A => LieSeries::A,
            SeriesArg::B => LieSeries::B,
            SeriesArg::C => LieSeries::C,
        }
    }
}

#[derive(Args)]
struct SpecArgs {
    /// Lie series (A, B or C).
    #[arg(long, value_enum)]
    series: SeriesArg,
    /// Rank of the algebra.
    #[arg(long)]
    rank: u32,
}

impl SpecArgs {
    fn build(&self) -> Result<LieAlgebraSpec, CliError> {
        LieAlgebraSpec::new(self.series.into(), self.rank).map_err(CliError::from_input)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Write the canonical JSON document to this file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the document (with manifest) as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GeometryArgs {
    /// Absolute quadrature error target per path leg.
    #[arg(long, default_value_t = 1e-9)]
    quad_tol: f64,
    /// Safety margin around branch points, as a fraction of
    /// (1 + max branch modulus).
    #[arg(long, default_value_t = 0.05)]
    safety_margin: f64,
    /// Real part of an explicit base-point x (defaults to the policy's
    /// 3 * (1 + max branch modulus)).
    #[arg(long)]
    base_x: Option<f64>,
}

impl GeometryArgs {
    fn policy(&self) -> PathPolicy {
        PathPolicy {
            quad: QuadratureParams {
                target_abs_error: self.quad_tol,
                ..QuadratureParams::default()
            },
            margin_factor: self.safety_margin,
            base_x_override: self.base_x.map(|re| Complex64::new(re, 0.0)),
            ..PathPolicy::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the coefficient-space layout for an algebra and genus.
    Family {
        #[command(flatten)]
        spec: SpecArgs,
        /// Genus of the base curve (>= 2).
        #[arg(long)]
        genus: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Draw a phase configuration consistent with given Hamiltonians.
    Sample {
        #[command(flatten)]
        spec: SpecArgs,
        /// Base curve JSON file ({"genus": g, "coeffs": [[re, im], ...]}).
        #[arg(long)]
        curve: PathBuf,
        /// Hamiltonian JSON file ({"convention": "urav", "values": [...]}).
        /// Omitted: a seeded random vector is drawn.
        #[arg(long)]
        hamiltonians: Option<PathBuf>,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Recover the Hamiltonians from a configuration (linear solve).
    Actions {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        curve: PathBuf,
        /// Configuration JSON file ({"points": [{"x": .., "y": .., "lambda": ..}]}).
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Compute angle coordinates of a configuration.
    Angles {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long)]
        curve: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a verification suite; exit code 1 when any check fails.
    Verify {
        #[command(subcommand)]
        kind: VerifyKind,
    },
}

#[derive(Args)]
struct VerifyCommonArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Genus of the standard verification curve y^2 = x^(2g+1) + 1.
    #[arg(long)]
    genus: u32,
    /// Optional explicit curve file overriding the standard curve.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// RNG seed for Hamiltonians and sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Subcommand)]
enum VerifyKind {
    /// Degree identity and basis-count identities (exact).
    Counts {
        #[command(flatten)]
        common: VerifyCommonArgs,
    },
    /// Sample-then-solve round trips of the Hamiltonians.
    Roundtrip {
        #[command(flatten)]
        common: VerifyCommonArgs,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Pairwise Poisson brackets of the Hamiltonians.
    Commute {
        #[command(flatten)]
        common: VerifyCommonArgs,
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol_commute: f64,
    },
    /// The full {H_a, phi_b} matrix against the identity.
    Darboux {
        #[command(flatten)]
        common: VerifyCommonArgs,
        #[arg(long, default_value_t = 1e-5)]
        fd_step: f64,
        #[arg(long, default_value_t = 1e-3)]
        tol_darboux: f64,
        #[command(flatten)]
        geometry: GeometryArgs,
    },
}

// --- error-to-exit-code mapping ---------------------------------------------

enum CliError {
    /// Bad inputs: exit 2.
    Input(String),
    /// Numerical failure: exit 3.
    Numerical(String),
}

impl CliError {
    fn from_input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidRank { .. }
            | CoreError::UnsupportedSeries(_)
            | CoreError::DegenerateCurve(_)
            | CoreError::InvalidInput(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

// --- manifest -----------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    invocation: Vec<String>,
    seed: Option<u64>,
    tolerances: BTreeMap<&'static str, f64>,
    input_hashes: BTreeMap<String, String>,
}

impl RunManifest {
    fn new() -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION"),
            invocation: std::env::args().collect(),
            seed: None,
            tolerances: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
        }
    }

    fn hash_input(&mut self, path: &Path, bytes: &[u8]) {
        let digest = Sha256::digest(bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.input_hashes.insert(path.display().to_string(), hex);
    }
}

fn read_json<T: serde::de::DeserializeOwned>(
    path: &Path,
    manifest: &mut RunManifest,
) -> Result<T, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("reading {}: {e}", path.display())))?;
    manifest.hash_input(path, &bytes);
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Input(format!("parsing {}: {e}", path.display())))
}

/// Write the canonical document to --out (when given) and/or print it with
/// the manifest under --json; otherwise print the human summary.
fn emit(
    document: &Value,
    manifest: &RunManifest,
    output: &OutputArgs,
    human: &str,
) -> Result<(), CliError> {
    if let Some(path) = &output.out {
        let mut text =
            serde_json::to_string_pretty(document).map_err(|e| CliError::Input(e.to_string()))?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("writing {}: {e}", path.display())))?;
    }
    if output.json {
        let mut with_manifest = document.clone();
        if let Value::Object(map) = &mut with_manifest {
            map.insert(
                "manifest".into(),
                serde_json::to_value(manifest).map_err(|e| CliError::Input(e.to_string()))?,
            );
        }
        println!(
            "{}",
            serde_json::to_string_pretty(&with_manifest)
                .map_err(|e| CliError::Input(e.to_string()))?
        );
    } else {
        println!("{human}");
    }
    Ok(())
}

fn standard_curve(genus: u32) -> Result<HyperellipticCurve, CliError> {
    if genus < 2 {
        return Err(CliError::Input(format!("genus {genus} < 2")));
    }
    let mut coeffs = vec![Complex64::new(0.0, 0.0); (2 * genus + 1) as usize];
    coeffs[0] = Complex64::new(1.0, 0.0);
    HyperellipticCurve::new(genus, coeffs).map_err(CliError::from)
}

fn random_h(n: usize, seed: u64) -> HamiltonianVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    HamiltonianVector::new(
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect(),
    )
}

fn load_configuration(
    spec: LieAlgebraSpec,
    curve_path: &Path,
    config_path: &Path,
    manifest: &mut RunManifest,
) -> Result<PhaseConfiguration, CliError> {
    let curve: HyperellipticCurve = read_json(curve_path, manifest)?;
    let points: ConfigurationPoints = read_json(config_path, manifest)?;
    PhaseConfiguration::new(spec, curve, points.points).map_err(CliError::from)
}

// --- commands -----------------------------------------------------------------

fn cmd_family(
    spec: &SpecArgs,
    genus: u32,
    output: &OutputArgs,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    let spec = spec.build()?;
    let layout = CoefficientLayout::new(spec, genus).map_err(CliError::from)?;
    let data = invariant_data(spec);
    let document = json!({
        "series": spec.series().to_string(),
        "rank": spec.rank(),
        "genus": genus,
        "degrees": data.degrees,
        "dim_g": data.dim_g,
        "n_standard": data.n_standard,
        "n": layout.len(),
        "monomials": layout.monomials(),
    });
    let human = format!(
        "{spec}, genus {genus}: N = {} (dim g = {}, n = {}), degrees {:?}\nblocks: {}",
        layout.len(),
        data.dim_g,
        data.n_standard,
        data.degrees,
        (1..=data.degrees.len())
            .map(|i| format!("d={} -> {}", data.degrees[i - 1], layout.block(i).len()))
            .collect::<Vec<_>>()
            .join(", ")
    );
    emit(&document, manifest, output, &human)?;
    Ok(0)
}

fn cmd_sample(
    spec: &SpecArgs,
    curve_path: &Path,
    h_path: Option<&Path>,
    seed: u64,
    output: &OutputArgs,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.seed = Some(seed);
    let spec = spec.build()?;
    let curve: HyperellipticCurve = read_json(curve_path, manifest)?;
    let layout = CoefficientLayout::new(spec, curve.genus()).map_err(CliError::from)?;
    let h = match h_path {
        Some(path) => read_json::<HamiltonianVector>(path, manifest)?,
        None => random_h(layout.len(), seed),
    };
    let config = sample_config(&curve, spec, &h, seed)?;
    let shell = ConfigurationPoints {
        points: config.points().to_vec(),
    };
    let document = serde_json::to_value(&shell).map_err(|e| CliError::Input(e.to_string()))?;
    let human = format!(
        "sampled {} points for {spec} on the genus {} curve (seed {seed})",
        config.len(),
        curve.genus()
    );
    emit(&document, manifest, output, &human)?;
    Ok(0)
}

fn cmd_actions(
    spec: &SpecArgs,
    curve_path: &Path,
    config_path: &Path,
    output: &OutputArgs,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    let spec = spec.build()?;
    let config = load_configuration(spec, curve_path, config_path, manifest)?;
    let h = solve_actions(&config)?;
    let document = serde_json::to_value(&h).map_err(|e| CliError::Input(e.to_string()))?;
    let human = h
        .values()
        .iter()
        .enumerate()
        .map(|(j, v)| format!("H_{j} = {v}"))
        .collect::<Vec<_>>()
        .join("\n");
    emit(&document, manifest, output, &human)?;
    Ok(0)
}

fn cmd_angles(
    spec: &SpecArgs,
    curve_path: &Path,
    config_path: &Path,
    geometry: &GeometryArgs,
    output: &OutputArgs,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.tolerances.insert("quad_tol", geometry.quad_tol);
    manifest
        .tolerances
        .insert("safety_margin", geometry.safety_margin);
    let spec = spec.build()?;
    let config = load_configuration(spec, curve_path, config_path, manifest)?;
    let angles = angle_coordinates(&config, &geometry.policy())?;
    let document = serde_json::to_value(&angles).map_err(|e| CliError::Input(e.to_string()))?;
    let human = angles
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| format!("phi_{j} = {v}"))
        .collect::<Vec<_>>()
        .join("\n");
    emit(&document, manifest, output, &human)?;
    Ok(0)
}

fn verify_curve(
    common: &VerifyCommonArgs,
    manifest: &mut RunManifest,
) -> Result<HyperellipticCurve, CliError> {
    match &common.curve {
        Some(path) => read_json(path, manifest),
        None => standard_curve(common.genus),
    }
}

fn emit_reports(
    kind: &str,
    reports: &[BracketReport],
    common: &VerifyCommonArgs,
    manifest: &RunManifest,
) -> Result<u8, CliError> {
    let pass = reports.iter().all(|r| r.pass);
    let document = serde_json::to_value(reports).map_err(|e| CliError::Input(e.to_string()))?;
    let mut lines: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{kind} [{}, {}]: value {:.3e}{:+.3e}i target {:.1}{:+.1}i tol {:.1e} -> {}",
                r.pair[0],
                r.pair[1],
                r.value.re,
                r.value.im,
                r.target.re,
                r.target.im,
                r.tol,
                if r.pass { "pass" } else { "FAIL" }
            )
        })
        .collect();
    lines.push(format!(
        "verify {kind}: {}",
        if pass { "PASS" } else { "FAIL" }
    ));
    emit(&document, manifest, &common.output, &lines.join("\n"))?;
    Ok(u8::from(!pass))
}

fn cmd_verify_counts(
    common: &VerifyCommonArgs,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    let spec = common.spec.build()?;
    let data = invariant_data(spec);
    let layout = CoefficientLayout::new(spec, common.genus).map_err(CliError::from)?;
    let mut checks = Vec::new();
    let identity = check_degree_identity(spec);
    checks.push(json!({
        "check": "sum(2d_i - 1) == dim_g",
        "pass": identity,
    }));
    let mut pass = identity;
    for (idx, &d) in data.degrees.iter().enumerate() {
        let got = layout.block(idx + 1).len() as u32;
        let want = (2 * d - 1) * (common.genus - 1);
        checks.push(json!({
            "check": format!("block size for d = {d}"),
            "got": got,
            "want": want,
            "pass": got == want,
        }));
        pass &= got == want;
    }
    let total_ok = layout.len() as u32 == data.dim_g * (common.genus - 1);
    checks.push(json!({
        "check": "N == dim_g * (genus - 1)",
        "got": layout.len(),
        "want": data.dim_g * (common.genus - 1),
        "pass": total_ok,
    }));
    pass &= total_ok;

    let document = Value::Array(checks);
    let human = format!(
        "verify counts for {spec}, genus {}: {}",
        common.genus,
        if pass { "PASS" } else { "FAIL" }
    );
    emit(&document, manifest, &common.output, &human)?;
    Ok(u8::from(!pass))
}

fn cmd_verify_roundtrip(
    common: &VerifyCommonArgs,
    trials: u64,
    tol: f64,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.seed = Some(common.seed);
    manifest.tolerances.insert("tol", tol);
    let spec = common.spec.build()?;
    let curve = verify_curve(common, manifest)?;
    let layout = CoefficientLayout::new(spec, curve.genus()).map_err(CliError::from)?;

    let mut entries = Vec::new();
    let mut pass = true;
    for trial in 0..trials {
        let h_true = random_h(layout.len(), common.seed.wrapping_add(trial));
        let config = sample_config(
            &curve,
            spec,
            &h_true,
            common.seed.wrapping_add(10_000 + trial),
        )?;
        let h_rec = solve_actions(&config)?;
        let err = h_rec
            .values()
            .iter()
            .zip(h_true.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
            / h_true.max_abs().max(1e-300);
        let ok = err < tol;
        pass &= ok;
        entries.push(json!({
            "trial": trial,
            "relative_error": err,
            "tol": tol,
            "pass": ok,
        }));
    }
    let document = Value::Array(entries);
    let human = format!(
        "verify roundtrip for {spec}, genus {} ({trials} trials at {tol:.1e}): {}",
        curve.genus(),
        if pass { "PASS" } else { "FAIL" }
    );
    emit(&document, manifest, &common.output, &human)?;
    Ok(u8::from(!pass))
}

fn cmd_verify_commute(
    common: &VerifyCommonArgs,
    fd_step: f64,
    tol_commute: f64,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.seed = Some(common.seed);
    manifest.tolerances.insert("fd_step", fd_step);
    manifest.tolerances.insert("tol_commute", tol_commute);
    let spec = common.spec.build()?;
    let curve = verify_curve(common, manifest)?;
    let layout = CoefficientLayout::new(spec, curve.genus()).map_err(CliError::from)?;
    let h = random_h(layout.len(), common.seed);
    let params = VerifyParams {
        fd_step,
        tol_commute,
        ..VerifyParams::default()
    };
    let reports = verify_commutativity(&curve, spec, &h, common.seed, &params)?;
    emit_reports("commute", &reports, common, manifest)
}

fn cmd_verify_darboux(
    common: &VerifyCommonArgs,
    fd_step: f64,
    tol_darboux: f64,
    geometry: &GeometryArgs,
    manifest: &mut RunManifest,
) -> Result<u8, CliError> {
    manifest.seed = Some(common.seed);
    manifest.tolerances.insert("fd_step", fd_step);
    manifest.tolerances.insert("tol_darboux", tol_darboux);
    manifest.tolerances.insert("quad_tol", geometry.quad_tol);
    let spec = common.spec.build()?;
    let curve = verify_curve(common, manifest)?;
    let layout = CoefficientLayout::new(spec, curve.genus()).map_err(CliError::from)?;
    let h = random_h(layout.len(), common.seed);
    let params = VerifyParams {
        fd_step,
        tol_darboux,
        policy: geometry.policy(),
        ..VerifyParams::default()
    };
    let reports = verify_darboux(&curve, spec, &h, common.seed, &params)?;
    emit_reports("darboux", &reports, common, manifest)
}

fn run() -> Result<u8, CliError> {
    let cli = Cli::parse();
    let mut manifest = RunManifest::new();
    match &cli.command {
        Command::Family {
            spec,
            genus,
            output,
        } => cmd_family(spec, *genus, output, &mut manifest),
        Command::Sample {
            spec,
            curve,
            hamiltonians,
            seed,
            output,
        } => cmd_sample(
            spec,
            curve,
            hamiltonians.as_deref(),
            *seed,
            output,
            &mut manifest,
        ),
        Command::Actions {
            spec,
            curve,
            config,
            output,
        } => cmd_actions(spec, curve, config, output, &mut manifest),
        Command::Angles {
            spec,
            curve,
            config,
            geometry,
            output,
        } => cmd_angles(spec, curve, config, geometry, output, &mut manifest),
        Command::Verify { kind } => match kind {
            VerifyKind::Counts { common } => cmd_verify_counts(common, &mut manifest),
            VerifyKind::Roundtrip {
                common,
                trials,
                tol,
            } => cmd_verify_roundtrip(common, *trials, *tol, &mut manifest),
            VerifyKind::Commute {
                common,
                fd_step,
                tol_commute,
            } => cmd_verify_commute(common, *fd_step, *tol_commute, &mut manifest),
            VerifyKind::Darboux {
                common,
                fd_step,
                tol_darboux,
                geometry,
            } => cmd_verify_darboux(common, *fd_step, *tol_darboux, geometry, &mut manifest),
        },
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(CliError::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
