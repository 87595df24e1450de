//! Command-line front end. Every report embeds the run configuration and a SHA-256 of the
//! input files; all outputs are written atomically.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::crystal::{build_crystalline_measure, measures_after_removal, verify_pairing, DiscreteMeasure, Pairing, PAIRING_TOL};
use crate::frames::{
    build_interpolation_basis, build_sampling_operator, duffin_schaeffer_demo, estimate_frame_bounds, nearest_nodes, reconstruct,
    samples_for, FrameModel, Side,
};
use crate::io::{read_grid_function, read_json, sha256_hex, to_json, write_atomic, write_grid_function, MeasureFile, NodeFile};
use crate::nodes::{classify_pair_with, gen_power_nodes, smooth_enlarge_two_sided, thin_to_separated, ClassifyOptions, NodeSequence};
use crate::nonuniq::kp::{b_from_beta, conjugate, find_b0};
use crate::nonuniq::{
    build_kp, build_levin_product, construct_nonuniqueness_witness, prepare_witness, smooth_ray_zeros, truncation_stability,
    verify_levin_bounds, CrossOperator, FamilySide, LevinCheckConfig, Target, WitnessConfig,
};
use crate::spectral::{gelfand_shilov_scan, hermite_basis, hspq_norm, Grid, GridFunction, SpaceParams};
use crate::wirtinger::{default_corpus, run_suite, SuiteConfig};
use crate::{Error, Result, C64};

/// Exit status for precondition, configuration and input errors.
pub const EXIT_PRECONDITION: i32 = 2;
/// Exit status when a verification finds violations.
pub const EXIT_VERIFICATION: i32 = 3;
/// Exit status for usage errors.
pub const EXIT_USAGE: i32 = 64;

/// Truncation-stability bound for `nonuniq product` when `--tol` is not given.
const STABILITY_TOL: f64 = 0.05;

#[derive(Debug, Parser)]
#[command(name = "fourier-pairs", version, about = "Fourier uniqueness and non-uniqueness pairs: nodes, frames, witnesses")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
struct Global {
    /// Grid half-width X (command default when omitted).
    #[arg(long, global = true)]
    grid_x: Option<f64>,
    /// Grid size N (command default when omitted).
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Overrides the tolerance of the command's check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed for corpus jitter.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value_t = 2)]
    json_indent: usize,
    /// Omit the timestamp so reports are byte-reproducible.
    #[arg(long, global = true)]
    no_timestamp: bool,
}

impl Global {
    fn grid(&self, x: f64, n: usize) -> Result<Grid> {
        Grid::new(self.grid_x.unwrap_or(x), self.grid_n.unwrap_or(n))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Node generation and classification.
    #[command(subcommand)]
    Nodes(NodesCmd),
    /// Inequality suites.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Sampling frames and interpolation bases.
    #[command(subcommand)]
    Frame(FrameCmd),
    /// Non-uniqueness constructions.
    #[command(subcommand)]
    Nonuniq(NonuniqCmd),
    /// Crystalline measures.
    #[command(subcommand)]
    Crystal(CrystalCmd),
    /// Gelfand–Shilov decay diagnostics.
    #[command(subcommand)]
    Gs(GsCmd),
}

#[derive(Debug, Subcommand)]
enum NodesCmd {
    Gen(GenArgs),
    Classify(ClassifyArgs),
    Thin(ThinArgs),
    Enlarge(EnlargeArgs),
}

#[derive(Debug, Subcommand)]
enum VerifyCmd {
    Wirtinger(WirtingerArgs),
}

#[derive(Debug, Subcommand)]
enum FrameCmd {
    Estimate(FrameArgs),
    Basis(BasisArgs),
    Reconstruct(ReconstructArgs),
    DsDemo(DsArgs),
}

#[derive(Debug, Subcommand)]
enum NonuniqCmd {
    Kp(KpArgs),
    Product(ProductArgs),
    Family(WitnessArgs),
    Solve(SolveArgs),
    Build(BuildArgs),
}

#[derive(Debug, Subcommand)]
enum CrystalCmd {
    Emit(EmitArgs),
    Verify(PairingArgs),
}

#[derive(Debug, Subcommand)]
enum GsCmd {
    Diagnose(GsArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
struct Output {
    /// Report path; stdout when omitted.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GenArgs {
    #[arg(long)]
    p: f64,
    /// Gap parameter of Λ.
    #[arg(long)]
    a: f64,
    /// Gap parameter of M (defaults to `a`).
    #[arg(long)]
    a_mu: Option<f64>,
    /// Points per side.
    #[arg(long)]
    count: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ClassifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    tail_fraction: f64,
    #[arg(long, default_value_t = 0.02)]
    band: f64,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ThinArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EnlargeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Target density D in the coordinate `u = |γ|^p`.
    #[arg(long)]
    d: f64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
struct WirtingerArgs {
    /// Suite configuration JSON (defaults for missing fields).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Multiplies the constants; below 1 gives a negative control.
    #[arg(long)]
    constant_scale: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
struct FrameArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    s: f64,
    /// Hermite subspace dimension.
    #[arg(long, default_value_t = 40)]
    m: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
struct BasisArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Tidy CSV of basis norms (`side,node,norm`).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct ReconstructArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Grid-function sidecar JSON to reconstruct.
    #[arg(long, conflicts_with = "hermite")]
    function: Option<PathBuf>,
    /// Reconstruct `h_n` instead of a file.
    #[arg(long)]
    hermite: Option<usize>,
    /// Directory for the reconstructed function.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct DsArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Number of nodes nearest 0 to remove (at most 5).
    #[arg(long, default_value_t = 1)]
    remove: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
struct KpArgs {
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, conflicts_with = "beta")]
    b: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    /// Tidy CSV of `theta,k` samples.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

impl KpArgs {
    fn b(&self) -> Result<f64> {
        let s = self.s.unwrap_or_else(|| crate::nonuniq::kp::default_s(self.p, self.sigma));
        match (self.b, self.beta) {
            (Some(b), _) => Ok(b),
            (None, Some(beta)) => Ok(b_from_beta(self.p, s, beta)),
            (None, None) => Err(Error::Parameter("give --b or --beta".into())),
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
struct ProductArgs {
    #[command(flatten)]
    kp: KpArgs,
    /// Truncation radius R.
    #[arg(long, default_value_t = 30.0)]
    radius: f64,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct WitnessArgs {
    #[arg(long)]
    input: PathBuf,
    /// Witness configuration JSON (defaults for missing fields).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
enum SideArg {
    Space,
    Frequency,
}

#[derive(Debug, Clone, Args, Serialize)]
struct SolveArgs {
    #[command(flatten)]
    witness: WitnessArgs,
    #[arg(long, value_enum)]
    side: SideArg,
    #[arg(long, allow_hyphen_values = true)]
    node: f64,
    #[arg(long, default_value_t = 1.0)]
    value: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
struct BuildArgs {
    #[command(flatten)]
    witness: WitnessArgs,
    /// Directory for the witness grid function.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
struct EmitArgs {
    #[command(flatten)]
    frame: FrameArgs,
    /// Point x of `ν̂ = δ_x − Σ a_λ(x)δ_λ`; removed from Λ first if it is a node.
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
struct PairingArgs {
    #[arg(long)]
    nu: PathBuf,
    #[arg(long)]
    nu_hat: PathBuf,
    /// Test functions `h_0..h_n`.
    #[arg(long, default_value_t = 20)]
    hermite_max: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Debug, Clone, Args, Serialize)]
struct GsArgs {
    #[arg(long, conflicts_with = "hermite")]
    function: Option<PathBuf>,
    #[arg(long)]
    hermite: Option<usize>,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.4,0.8,1.6")]
    ladder: Vec<f64>,
    #[command(flatten)]
    output: Output,
}

/// Whether the command's checks passed.
enum Outcome {
    Ok,
    Failed(String),
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    global: &'a Global,
    config: &'a C,
    input_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp: Option<u64>,
    tolerance: Option<f64>,
    result: R,
}

struct Ctx {
    global: Global,
    command: String,
}

impl Ctx {
    fn emit<C: Serialize, R: Serialize>(&self, report: Option<&Path>, config: &C, inputs: &[&Path], tolerance: Option<f64>, result: R) -> Result<()> {
        let input_sha256 = if inputs.is_empty() {
            None
        } else {
            let data = inputs.iter().map(fs::read).collect::<std::io::Result<Vec<_>>>()?;
            Some(sha256_hex(data.iter().map(|d| d.as_slice())))
        };
        let timestamp = (!self.global.no_timestamp).then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
        let env = Envelope {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            global: &self.global,
            config,
            input_sha256,
            timestamp,
            tolerance,
            result,
        };
        let text = to_json(&env, self.global.json_indent)?;
        match report {
            Some(p) => write_atomic(p, text.as_bytes()),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn read_pair(path: &Path) -> Result<(NodeSequence, NodeSequence)> {
    NodeFile::read(path)?.to_pair()
}

fn frame_model(args: &FrameArgs, g: &Global) -> Result<FrameModel> {
    let (lambda, mu) = read_pair(&args.input)?;
    let params = SpaceParams::new(args.s, lambda.exponent(), mu.exponent())?;
    let op = build_sampling_operator(&lambda, &mu, params, g.grid(12.0, 4096)?)?;
    estimate_frame_bounds(&op, args.m)
}

fn witness_config(args: &WitnessArgs, g: &Global) -> Result<WitnessConfig> {
    let mut cfg: WitnessConfig = match &args.config {
        Some(p) => read_json(p)?,
        None => WitnessConfig::default(),
    };
    if let Some(x) = g.grid_x {
        cfg.grid_x = x;
    }
    if let Some(n) = g.grid_n {
        cfg.grid_n = n;
    }
    if let Some(t) = g.tol {
        cfg.witness_tol = t;
    }
    Ok(cfg)
}

fn witness_inputs(args: &WitnessArgs) -> Vec<&Path> {
    std::iter::once(args.input.as_path()).chain(args.config.as_deref()).collect()
}

fn load_function(file: &Option<PathBuf>, hermite: Option<usize>, grid: Grid) -> Result<GridFunction> {
    match (file, hermite) {
        (Some(p), _) => read_grid_function(p),
        (None, Some(n)) => Ok(hermite_basis(n, grid)?.swap_remove(n)),
        (None, None) => Err(Error::Parameter("give --function or --hermite".into())),
    }
}

#[derive(Serialize)]
struct ThinSummary {
    lambda_removed: Vec<f64>,
    mu_removed: Vec<f64>,
    lambda_separation: f64,
    mu_separation: f64,
    guarantee_applies: bool,
}

#[derive(Serialize)]
struct EnlargeSummary {
    lambda_added: Vec<f64>,
    mu_added: Vec<f64>,
}

#[derive(Serialize)]
struct BasisSummary {
    frame: crate::frames::FrameReport,
    nodes: usize,
    constant: f64,
    growth_slope_lambda: Option<f64>,
    growth_exponent_lambda: f64,
    fitted_norm_constant: f64,
    max_residual: f64,
}

#[derive(Serialize)]
struct ReconstructSummary {
    frame: crate::frames::FrameReport,
    relative_error: f64,
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct KpSummary {
    kp: crate::nonuniq::KpFunction,
    continuity_defect: f64,
    symmetry_defect: f64,
    lindelof_residual: f64,
    bound_margin: f64,
    b0: Option<f64>,
}

#[derive(Serialize)]
struct ProductSummary {
    levin: crate::nonuniq::LevinReport,
    zeros: usize,
    truncation_stability: f64,
    stability_tol: f64,
}

#[derive(Serialize)]
struct FamilySummary {
    side: FamilySide,
    nodes: Vec<f64>,
    constants: crate::nonuniq::FamilyConstants,
    cardinal_error: f64,
    cardinal_error_grid: f64,
}

#[derive(Serialize)]
struct SolveSummary {
    history: Vec<f64>,
    ratios: Vec<f64>,
    max_ratio: f64,
    converged: bool,
    interpolation_error: f64,
    contraction_max: f64,
}

#[derive(Serialize)]
struct BuildSummary<'a> {
    report: &'a crate::nonuniq::WitnessReport,
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct PairingRow {
    hermite: usize,
    pairing: Pairing,
    relative_gap: f64,
}

#[derive(Serialize)]
struct PairingSummary {
    rows: Vec<PairingRow>,
    worst_gap: f64,
    nu_l1: f64,
}

fn dispatch(cli: Cli) -> Result<Outcome> {
    let g = cli.global.clone();
    let name = |s: &str| s.to_string();
    match cli.command {
        Command::Nodes(cmd) => match cmd {
            NodesCmd::Gen(a) => {
                let q = conjugate(a.p);
                let lambda = gen_power_nodes(a.p, a.a, a.count)?;
                let mu = gen_power_nodes(q, a.a_mu.unwrap_or(a.a), a.count)?;
                let file = NodeFile::from_pair(&lambda, &mu);
                write_atomic(&a.out, to_json(&file, g.json_indent)?.as_bytes())?;
                Ok(Outcome::Ok)
            }
            NodesCmd::Classify(a) => {
                let ctx = Ctx { global: g, command: name("nodes classify") };
                let (lambda, mu) = read_pair(&a.input)?;
                let c = classify_pair_with(&lambda, &mu, ClassifyOptions { tail_fraction: a.tail_fraction, band: a.band })?;
                ctx.emit(a.output.report.as_deref(), &a, &[&a.input], Some(a.band), c)?;
                Ok(Outcome::Ok)
            }
            NodesCmd::Thin(a) => {
                let ctx = Ctx { global: g, command: name("nodes thin") };
                let (lambda, mu) = read_pair(&a.input)?;
                let tl = thin_to_separated(&lambda, a.delta)?;
                let tm = thin_to_separated(&mu, a.delta)?;
                let file = NodeFile::from_pair(&tl.nodes, &tm.nodes);
                write_atomic(&a.out, to_json(&file, ctx.global.json_indent)?.as_bytes())?;
                let summary = ThinSummary {
                    lambda_separation: tl.c_best,
                    mu_separation: tm.c_best,
                    guarantee_applies: tl.guarantee_applies && tm.guarantee_applies,
                    lambda_removed: tl.removed,
                    mu_removed: tm.removed,
                };
                ctx.emit(a.output.report.as_deref(), &a, &[&a.input], Some(a.delta), summary)?;
                Ok(Outcome::Ok)
            }
            NodesCmd::Enlarge(a) => {
                let ctx = Ctx { global: g, command: name("nodes enlarge") };
                let (lambda, mu) = read_pair(&a.input)?;
                let (el, al) = smooth_enlarge_two_sided(&lambda, a.d)?;
                let (em, am) = smooth_enlarge_two_sided(&mu, a.d)?;
                let file = NodeFile::from_pair(&el, &em);
                write_atomic(&a.out, to_json(&file, ctx.global.json_indent)?.as_bytes())?;
                ctx.emit(a.output.report.as_deref(), &a, &[&a.input], None, EnlargeSummary { lambda_added: al, mu_added: am })?;
                Ok(Outcome::Ok)
            }
        },
        Command::Verify(VerifyCmd::Wirtinger(a)) => {
            let ctx = Ctx { global: g.clone(), command: name("verify wirtinger") };
            let mut cfg: SuiteConfig = match &a.config {
                Some(p) => read_json(p)?,
                None => SuiteConfig::default(),
            };
            if let Some(x) = g.grid_x {
                cfg.grid_x = x;
            }
            if let Some(n) = g.grid_n {
                cfg.grid_n = n;
            }
            if let Some(t) = g.tol {
                cfg.tolerance = t;
            }
            if let Some(s) = g.seed {
                cfg.seed = Some(s);
            }
            if let Some(c) = a.constant_scale {
                cfg.constant_scale = c;
            }
            let corpus = default_corpus(&cfg)?;
            let rep = run_suite(&corpus, &cfg)?;
            let inputs: Vec<&Path> = a.config.as_deref().into_iter().collect();
            let passed = rep.passed();
            let violations = rep.total_violations();
            ctx.emit(a.output.report.as_deref(), &cfg, &inputs, Some(cfg.tolerance), rep)?;
            Ok(if passed { Outcome::Ok } else { Outcome::Failed(format!("{violations} violations")) })
        }
        Command::Frame(cmd) => match cmd {
            FrameCmd::Estimate(a) => {
                let ctx = Ctx { global: g.clone(), command: name("frame estimate") };
                let model = frame_model(&a, &g)?;
                ctx.emit(a.output.report.as_deref(), &a, &[&a.input], None, model.report())?;
                Ok(Outcome::Ok)
            }
            FrameCmd::Basis(a) => {
                let ctx = Ctx { global: g.clone(), command: name("frame basis") };
                let model = frame_model(&a.frame, &g)?;
                let basis = build_interpolation_basis(&model)?;
                if let Some(csv) = &a.csv {
                    let mut text = String::from("side,node,norm\n");
                    for (n, nr) in basis.nodes.iter().zip(&basis.norms) {
                        let side = if n.side == Side::Space { "lambda" } else { "mu" };
                        text.push_str(&format!("{side},{:.16e},{:.16e}\n", n.value, nr));
                    }
                    write_atomic(csv, text.as_bytes())?;
                }
                let half = model.op.grid.half_width();
                let summary = BasisSummary {
                    frame: model.report(),
                    nodes: basis.nodes.len(),
                    constant: basis.constant,
                    growth_slope_lambda: basis.growth_slope(Side::Space, 1.0, 0.8 * half).ok(),
                    growth_exponent_lambda: basis.growth_exponent(Side::Space),
                    fitted_norm_constant: basis.fitted_norm_constant(),
                    max_residual: basis.residual_norms.iter().copied().fold(0.0, f64::max),
                };
                ctx.emit(a.frame.output.report.as_deref(), &a, &[&a.frame.input], None, summary)?;
                Ok(Outcome::Ok)
            }
            FrameCmd::Reconstruct(a) => {
                let ctx = Ctx { global: g.clone(), command: name("frame reconstruct") };
                let model = frame_model(&a.frame, &g)?;
                let basis = build_interpolation_basis(&model)?;
                let f = load_function(&a.function, a.hermite, model.op.grid)?;
                let (sl, sm) = samples_for(&basis, &f)?;
                let rec = reconstruct(&basis, &sl, &sm)?;
                let diff = rec.add(&f.scale(C64::new(-1.0, 0.0)))?;
                let relative_error = (hspq_norm(&diff, &basis.params) / hspq_norm(&f, &basis.params)).sqrt();
                let output = match &a.out_dir {
                    Some(d) => {
                        fs::create_dir_all(d)?;
                        Some(write_grid_function(d, "reconstructed", &rec)?)
                    }
                    None => None,
                };
                let mut inputs: Vec<&Path> = vec![&a.frame.input];
                inputs.extend(a.function.as_deref());
                let tol = g.tol.unwrap_or(1e-6);
                ctx.emit(a.frame.output.report.as_deref(), &a, &inputs, Some(tol), ReconstructSummary { frame: model.report(), relative_error, output })?;
                Ok(if relative_error <= tol { Outcome::Ok } else { Outcome::Failed(format!("relative error {relative_error:.3e} > {tol:.1e}")) })
            }
            FrameCmd::DsDemo(a) => {
                let ctx = Ctx { global: g.clone(), command: name("frame ds-demo") };
                let model = frame_model(&a.frame, &g)?;
                let removed = nearest_nodes(&model, a.remove);
                let rep = duffin_schaeffer_demo(&model, &removed)?;
                ctx.emit(a.frame.output.report.as_deref(), &a, &[&a.frame.input], None, rep)?;
                Ok(Outcome::Ok)
            }
        },
        Command::Nonuniq(cmd) => match cmd {
            NonuniqCmd::Kp(a) => {
                let ctx = Ctx { global: g, command: name("nonuniq kp") };
                let kp = build_kp(a.p, a.sigma, a.b()?, a.s)?;
                if let Some(csv) = &a.csv {
                    let mut text = String::from("theta,k\n");
                    for i in 0..=720 {
                        let t = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / 720.0;
                        text.push_str(&format!("{t:.16e},{:.16e}\n", kp.eval(t)));
                    }
                    write_atomic(csv, text.as_bytes())?;
                }
                let summary = KpSummary {
                    continuity_defect: kp.continuity_defect(),
                    symmetry_defect: kp.symmetry_defect(),
                    lindelof_residual: kp.lindelof_residual(),
                    bound_margin: kp.claim_margin(),
                    b0: find_b0(a.p, a.sigma, a.s).ok(),
                    kp,
                };
                ctx.emit(a.output.report.as_deref(), &a, &[], None, summary)?;
                Ok(Outcome::Ok)
            }
            NonuniqCmd::Product(a) => {
                let ctx = Ctx { global: g.clone(), command: name("nonuniq product") };
                let kp = build_kp(a.kp.p, a.kp.sigma, a.kp.b()?, a.kp.s)?;
                let rays = smooth_ray_zeros(&kp, 2.0 * a.radius);
                let prod = build_levin_product(&kp, &rays, a.radius)?;
                let check = LevinCheckConfig { eps: a.eps, ..LevinCheckConfig::default() };
                let levin = verify_levin_bounds(&prod, &check)?;
                let stability = truncation_stability(&kp, &rays, a.radius, &check)?;
                let tol = g.tol.unwrap_or(STABILITY_TOL);
                let ok = levin.bounds_hold() && stability <= tol;
                let summary = ProductSummary { zeros: prod.zeros().len(), levin, truncation_stability: stability, stability_tol: tol };
                ctx.emit(a.kp.output.report.as_deref(), &a, &[], Some(tol), summary)?;
                Ok(if ok { Outcome::Ok } else { Outcome::Failed("Levin bounds or truncation stability failed".into()) })
            }
            NonuniqCmd::Family(a) => {
                let ctx = Ctx { global: g.clone(), command: name("nonuniq family") };
                let cfg = witness_config(&a, &g)?;
                let (lambda, mu) = read_pair(&a.input)?;
                let setup = prepare_witness(&lambda, &mu, &cfg)?;
                let (phi, psi) = setup.families(&cfg)?;
                let rows: Vec<FamilySummary> = [phi, psi]
                    .into_iter()
                    .map(|f| FamilySummary {
                        side: f.side,
                        nodes: f.nodes,
                        constants: f.constants,
                        cardinal_error: f.cardinal_error,
                        cardinal_error_grid: f.cardinal_error_grid,
                    })
                    .collect();
                ctx.emit(a.output.report.as_deref(), &cfg, &witness_inputs(&a), None, rows)?;
                Ok(Outcome::Ok)
            }
            NonuniqCmd::Solve(a) => {
                let ctx = Ctx { global: g.clone(), command: name("nonuniq solve") };
                let cfg = witness_config(&a.witness, &g)?;
                let (lambda, mu) = read_pair(&a.witness.input)?;
                let setup = prepare_witness(&lambda, &mu, &cfg)?;
                let (phi, psi) = setup.families(&cfg)?;
                let op = CrossOperator::new(&phi, &psi)?;
                let side = match a.side {
                    SideArg::Space => FamilySide::Space,
                    SideArg::Frequency => FamilySide::Frequency,
                };
                let sol = op.solve(&[Target { side, node: a.node, value: C64::new(a.value, 0.0) }], cfg.l, cfg.max_iter)?;
                let ok = sol.converged && sol.max_ratio <= cfg.contraction_max;
                let summary = SolveSummary {
                    history: sol.history,
                    ratios: sol.ratios,
                    max_ratio: sol.max_ratio,
                    converged: sol.converged,
                    interpolation_error: sol.interpolation_error,
                    contraction_max: cfg.contraction_max,
                };
                ctx.emit(a.witness.output.report.as_deref(), &(&cfg, &a), &witness_inputs(&a.witness), Some(cfg.contraction_max), summary)?;
                Ok(if ok { Outcome::Ok } else { Outcome::Failed("iteration did not contract".into()) })
            }
            NonuniqCmd::Build(a) => {
                let ctx = Ctx { global: g.clone(), command: name("nonuniq build") };
                let cfg = witness_config(&a.witness, &g)?;
                let (lambda, mu) = read_pair(&a.witness.input)?;
                let w = construct_nonuniqueness_witness(&lambda, &mu, &cfg)?;
                let output = match &a.out_dir {
                    Some(d) => {
                        fs::create_dir_all(d)?;
                        Some(write_grid_function(d, "witness", &w.f)?)
                    }
                    None => None,
                };
                let r = &w.report;
                let ok = r.vanishing_ok && r.max_contraction <= cfg.contraction_max && r.gs_best_c.is_some() && r.l2_norm >= 0.1;
                ctx.emit(a.witness.output.report.as_deref(), &cfg, &witness_inputs(&a.witness), Some(cfg.witness_tol), BuildSummary { report: r, output })?;
                Ok(if ok { Outcome::Ok } else { Outcome::Failed("witness checks failed".into()) })
            }
        },
        Command::Crystal(cmd) => match cmd {
            CrystalCmd::Emit(a) => {
                let ctx = Ctx { global: g.clone(), command: name("crystal emit") };
                let (lambda, mu) = read_pair(&a.frame.input)?;
                let params = SpaceParams::new(a.frame.s, lambda.exponent(), mu.exponent())?;
                let grid = g.grid(12.0, 4096)?;
                let is_node = lambda.points().iter().any(|v| (v - a.x).abs() <= 1e-12 * (1.0 + v.abs()));
                let (nu, nu_hat) = if is_node {
                    measures_after_removal(&lambda, &mu, params, grid, a.frame.m, &[a.x])?.swap_remove(0)
                } else {
                    let op = build_sampling_operator(&lambda, &mu, params, grid)?;
                    let model = estimate_frame_bounds(&op, a.frame.m)?;
                    build_crystalline_measure(&build_interpolation_basis(&model)?, a.x)?
                };
                fs::create_dir_all(&a.out_dir)?;
                let nu_path = a.out_dir.join("nu.json");
                let hat_path = a.out_dir.join("nu_hat.json");
                write_atomic(&nu_path, to_json(&nu.to_file(), ctx.global.json_indent)?.as_bytes())?;
                write_atomic(&hat_path, to_json(&nu_hat.to_file(), ctx.global.json_indent)?.as_bytes())?;
                let summary = serde_json::json!({
                    "nu": nu_path, "nu_hat": hat_path, "nu_l1": nu.l1_norm(), "nu_hat_l1": nu_hat.l1_norm(),
                    "nu_atoms": nu.support().len(), "nu_hat_atoms": nu_hat.support().len(), "removed_from_lambda": is_node,
                });
                ctx.emit(a.frame.output.report.as_deref(), &a, &[&a.frame.input], None, summary)?;
                Ok(Outcome::Ok)
            }
            CrystalCmd::Verify(a) => {
                let ctx = Ctx { global: g.clone(), command: name("crystal verify") };
                let nu = DiscreteMeasure::from_file(&read_json::<MeasureFile>(&a.nu)?)?;
                let nu_hat = DiscreteMeasure::from_file(&read_json::<MeasureFile>(&a.nu_hat)?)?;
                let tol = g.tol.unwrap_or(PAIRING_TOL);
                let basis = hermite_basis(a.hermite_max, g.grid(12.0, 4096)?)?;
                let rows = basis
                    .iter()
                    .enumerate()
                    .map(|(n, h)| {
                        let pairing = verify_pairing(&nu, &nu_hat, h)?;
                        Ok(PairingRow { hermite: n, relative_gap: pairing.relative_gap(), pairing })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let worst_gap = rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max);
                let ok = worst_gap <= tol;
                ctx.emit(a.output.report.as_deref(), &a, &[&a.nu, &a.nu_hat], Some(tol), PairingSummary { rows, worst_gap, nu_l1: nu.l1_norm() })?;
                Ok(if ok { Outcome::Ok } else { Outcome::Failed(format!("pairing gap {worst_gap:.3e} > {tol:.1e}")) })
            }
        },
        Command::Gs(GsCmd::Diagnose(a)) => {
            let ctx = Ctx { global: g.clone(), command: name("gs diagnose") };
            let f = load_function(&a.function, a.hermite, g.grid(12.0, 4096)?)?;
            let (rows, best) = gelfand_shilov_scan(&f, a.p, a.q, &a.ladder)?;
            let inputs: Vec<&Path> = a.function.as_deref().into_iter().collect();
            ctx.emit(a.output.report.as_deref(), &a, &inputs, None, serde_json::json!({ "rows": rows, "best_c": best }))?;
            Ok(Outcome::Ok)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("FOURIER_PAIRS_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0) {
        // A second call in the same process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Parses `args` (including the program name) and runs the command; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    configure_threads();
    match dispatch(cli) {
        Ok(Outcome::Ok) => 0,
        Ok(Outcome::Failed(msg)) => {
            eprintln!("verification failed: {msg}");
            EXIT_VERIFICATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Divergence(_) => EXIT_VERIFICATION,
                _ => EXIT_PRECONDITION,
            }
        }
    }
}
