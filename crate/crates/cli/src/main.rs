//! Command-line front end: loads groupoid / potential / XY / Markov files,
//! dispatches to the computation library, and emits a machine-readable run
//! report on standard output.
//!
//! Exit codes: 0 success, 1 input error (bad verb, flag, or file),
//! 2 validation failure (a named invariant does not hold).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use haar_thermo::dyn_def::{disintegrate, haar_jacobian, ks_entropy_via_jacobian, markov_jacobian};
use haar_thermo::groupoid::saturation_check;
use haar_thermo::sample;
use haar_thermo::thermo::{
    entropy, equilibrium_for, extremal_closed_forms, involution_check, modulus_candidate,
    pressure, ExtremalCase,
};
use haar_thermo::transfer::{
    invariant_from_seed, normalization_residual, normalize, verify_haar_invariance,
    verify_quasi_invariance, PairFunction,
};
use haar_thermo::transverse::{
    coco_invariance_check, jacobian_kernel, measure_from_transverse, TransverseMeasure,
};
use haar_thermo::xy::{
    eigenprob, h_vs_ruelle_check, leading_eigen, limit_quotient, ruelle_normalize,
    xy_quasi_invariance_check, CylinderFunction, XySpec,
};
use haar_thermo::{io, Error, FiniteGroupoid, Measure, PointId, SignedTransverseFunction};

#[derive(Parser)]
#[command(name = "haar", version, about = "Thermodynamic formalism on finite groupoids")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output format for the run report.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct GroupoidArgs {
    /// Groupoid file: {"points": [...], "classes": [[...]], "nu_hat": {...}?}
    #[arg(long)]
    groupoid: PathBuf,
}

#[derive(Args)]
struct PotentialArgs {
    /// Potential file: {"values": {point: real}}
    #[arg(long)]
    potential: PathBuf,
}

#[derive(Args)]
struct MeasureArgs {
    /// Measure file: {"mass": {point: real}}
    #[arg(long)]
    measure: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Normalize a potential so every class integrates e^V to 1.
    Normalize {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Build the invariant probability of the normalized transfer operator.
    Invariant {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Seed measure: "uniform" or "delta:POINT".
        #[arg(long, default_value = "uniform")]
        seed_measure: String,
    },
    /// Verify an invariance property of a measure.
    Verify {
        #[command(subcommand)]
        what: VerifyCmd,
    },
    /// Transverse-measure operations.
    Lambda {
        #[command(subcommand)]
        what: LambdaCmd,
    },
    /// Entropy of the equilibrium transverse measure of a potential.
    Entropy {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Seed measure: "uniform" or "delta:POINT".
        #[arg(long, default_value = "uniform")]
        seed_measure: String,
    },
    /// Pressure of U nu_hat with its argmax classes.
    Pressure {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Equilibrium transverse measure for a potential.
    Equilibrium {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
    },
    /// Legendre involution residual over sampled candidates.
    InvolutionCheck {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Closed forms for the pair or trivial groupoid, cross-checked.
    Extremal {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        /// Which extremal case the groupoid is expected to be.
        #[arg(long, value_enum)]
        case: ExtremalCaseArg,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// XY model operations.
    Xy {
        #[command(subcommand)]
        what: XyCmd,
    },
    /// Dynamically defined groupoids: disintegration and Jacobians.
    Dyn {
        #[command(subcommand)]
        what: DynCmd,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum ExtremalCaseArg {
    Pair,
    Trivial,
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Haar-invariance of a measure for a normalized potential.
    Haar {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Quasi-invariance of a measure for a modular function.
    Quasi {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        /// Modular file: {"potential": {...}} or {"table": [{x, y, value}]}
        #[arg(long)]
        modular: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Saturation: within each class, masses are all positive or all zero.
    Saturation {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        measure: MeasureArgs,
    },
}

#[derive(Subcommand)]
enum LambdaCmd {
    /// Evaluate the transverse measure (V, M) on a transverse function.
    Eval {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        /// Transverse function file: {"per_class": {class: {point: weight}}}
        #[arg(long)]
        transverse: PathBuf,
    },
    /// Rebuild M from the functional and compare: M -> Lambda -> M'.
    Roundtrip {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Invariance under cocycle-weighted convolution with sampled kernels.
    CocoCheck {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        potential: PotentialArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

#[derive(Args)]
struct XyArgs {
    /// XY spec file: {"alphabet", "a_priori", "depth", "potential", "base_symbol"?}
    #[arg(long)]
    xy: PathBuf,
}

#[derive(Subcommand)]
enum XyCmd {
    /// Leading eigenvalue and eigenfunction of the Ruelle operator.
    Eigen {
        #[command(flatten)]
        xy: XyArgs,
    },
    /// Integral of a cylinder indicator via the limit quotient at z0.
    LimitQuotient {
        #[command(flatten)]
        xy: XyArgs,
        /// Cylinder word as comma-separated alphabet labels; the integrand
        /// is its indicator.
        #[arg(long)]
        word: String,
        #[arg(long, default_value_t = 60)]
        iters: usize,
    },
    /// Normalized potential U = V + log phi - log(phi o shift) - log c.
    Normalize {
        #[command(flatten)]
        xy: XyArgs,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Quasi-invariance of the eigenprobability at a cylinder depth.
    VerifyQuasi {
        #[command(flatten)]
        xy: XyArgs,
        /// Cylinder depth for the exhaustive pair indicators.
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum DynCmd {
    /// Conditional measures of M over the classes (fibers) of the groupoid.
    Disintegrate {
        #[command(flatten)]
        groupoid: GroupoidArgs,
        #[command(flatten)]
        measure: MeasureArgs,
        /// Map file: {"map": {point: point}}; when given, M must be
        /// invariant for it and the classes must be its fibers.
        #[arg(long)]
        map: Option<PathBuf>,
    },
    /// Markov Jacobian J(x0, x1), or the per-point fiber Jacobian.
    Jacobian {
        /// Markov spec file: {"transition": [[...]], "stationary"?: [...]}
        #[arg(long)]
        markov: Option<PathBuf>,
        #[arg(long)]
        groupoid: Option<PathBuf>,
        #[arg(long)]
        measure: Option<PathBuf>,
    },
    /// Kolmogorov-Sinai entropy from the Markov Jacobian.
    KsEntropy {
        /// Markov spec file: {"transition": [[...]], "stationary"?: [...]}
        #[arg(long)]
        markov: PathBuf,
    },
}

/// A CLI failure carrying the exit code it maps to.
enum Failure {
    Input(String),
    Validation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Validation(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Validation(m) => m,
        }
    }
}

/// Library errors about malformed inputs map to exit 1, violated invariants
/// to exit 2.
fn classify(e: Error) -> Failure {
    match e {
        Error::DuplicatePoint(_)
        | Error::OverlappingPoint(_)
        | Error::UncoveredPoint(_)
        | Error::UnknownPoint(_)
        | Error::MapOutsideSpace(_)
        | Error::MissingModularEntry { .. }
        | Error::BadTableLength { .. }
        | Error::BadAPriori { .. }
        | Error::DepthExceeded { .. }
        | Error::Invalid(_)
        | Error::Parse(_) => Failure::Input(e.to_string()),
        _ => Failure::Validation(e.to_string()),
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct Output {
    value: serde_json::Value,
    provenance: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
}

#[derive(Serialize)]
struct Report {
    command: CommandEcho,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, Output>,
    diagnostics: BTreeMap<String, serde_json::Value>,
}

#[derive(Serialize)]
struct CommandEcho {
    verb: String,
    flags: BTreeMap<String, String>,
}

struct ReportBuilder {
    report: Report,
}

impl ReportBuilder {
    fn new(verb: &str) -> Self {
        ReportBuilder {
            report: Report {
                command: CommandEcho {
                    verb: verb.to_string(),
                    flags: BTreeMap::new(),
                },
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                diagnostics: BTreeMap::new(),
            },
        }
    }

    fn flag(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.report
            .command
            .flags
            .insert(name.to_string(), value.to_string());
        self
    }

    fn read(&mut self, name: &str, path: &Path) -> CliResult<String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
        let digest = format!("{:x}", Sha256::digest(text.as_bytes()));
        self.report
            .inputs
            .insert(name.to_string(), format!("sha256:{digest}"));
        self.flag(name, path.display());
        Ok(text)
    }

    fn output(&mut self, name: &str, value: impl Serialize, provenance: &'static str) {
        self.output_tol(name, value, provenance, None);
    }

    fn output_tol(
        &mut self,
        name: &str,
        value: impl Serialize,
        provenance: &'static str,
        tolerance: Option<f64>,
    ) {
        self.report.outputs.insert(
            name.to_string(),
            Output {
                value: serde_json::to_value(value).expect("serializable output"),
                provenance,
                tolerance,
            },
        );
    }

    fn diagnostic(&mut self, name: &str, value: impl Serialize) {
        self.report.diagnostics.insert(
            name.to_string(),
            serde_json::to_value(value).expect("serializable diagnostic"),
        );
    }

    fn emit(&self, format: Format) {
        match format {
            Format::Json => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&self.report).expect("serializable report")
                );
            }
            Format::Csv => {
                println!("name,value,provenance,tolerance");
                for (name, out) in &self.report.outputs {
                    let value = match &out.value {
                        serde_json::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    let tol = out
                        .tolerance
                        .map(|t| format!("{t:e}"))
                        .unwrap_or_default();
                    println!(
                        "{name},{},{},{tol}",
                        csv_quote(&value),
                        out.provenance
                    );
                }
            }
        }
    }
}

fn csv_quote(value: &str) -> String {
    if value.contains(',') || value.contains('"') {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn point_map(values: &[f64], g: &FiniteGroupoid) -> BTreeMap<String, f64> {
    g.space()
        .points()
        .map(|p| (g.space().label(p).to_string(), values[p.0]))
        .collect()
}

fn parse_seed_measure(text: &str, g: &FiniteGroupoid) -> CliResult<Measure> {
    if text == "uniform" {
        return Ok(Measure::uniform(g.n_points()));
    }
    if let Some(label) = text.strip_prefix("delta:") {
        let p = g
            .space()
            .id(label)
            .ok_or_else(|| Failure::Input(format!("unknown point `{label}` in --seed-measure")))?;
        return Ok(Measure::dirac(g.n_points(), p));
    }
    Err(Failure::Input(format!(
        "--seed-measure must be `uniform` or `delta:POINT`, got `{text}`"
    )))
}

fn load_groupoid(b: &mut ReportBuilder, args: &GroupoidArgs) -> CliResult<(FiniteGroupoid, haar_thermo::TransverseFunction)> {
    let text = b.read("groupoid", &args.groupoid)?;
    io::load_groupoid(&text).map_err(classify)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 2 on parse errors by default; unknown verbs and
            // flags are input errors here, so remap to 1 (help/version
            // requests still succeed)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    let format = cli.format;
    match run(cli) {
        Ok(builder) => {
            builder.emit(format);
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> CliResult<ReportBuilder> {
    match cli.command {
        Cmd::Normalize { groupoid, potential } => {
            let mut b = ReportBuilder::new("normalize");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let u = io::load_potential(&text, &g).map_err(classify)?;
            let v = normalize(&u, &nu_hat, &g);
            b.output("values", point_map(v.values(), &g), "closed_form");
            b.diagnostic("normalization_residual", normalization_residual(&v, &nu_hat, &g));
            Ok(b)
        }
        Cmd::Invariant {
            groupoid,
            potential,
            seed_measure,
        } => {
            let mut b = ReportBuilder::new("invariant");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let u = io::load_potential(&text, &g).map_err(classify)?;
            b.flag("seed-measure", &seed_measure);
            let seed = parse_seed_measure(&seed_measure, &g)?;
            let v = normalize(&u, &nu_hat, &g);
            let m = invariant_from_seed(&v, &seed, &nu_hat, &g).map_err(classify)?;
            let residual = verify_haar_invariance(&m, &v, &nu_hat, &g, None).map_err(classify)?;
            b.output("mass", point_map(m.masses(), &g), "closed_form");
            b.diagnostic("invariance_residual", residual);
            Ok(b)
        }
        Cmd::Verify { what } => run_verify(what),
        Cmd::Lambda { what } => run_lambda(what),
        Cmd::Entropy {
            groupoid,
            potential,
            seed_measure,
        } => {
            let mut b = ReportBuilder::new("entropy");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let u = io::load_potential(&text, &g).map_err(classify)?;
            b.flag("seed-measure", &seed_measure);
            let seed = parse_seed_measure(&seed_measure, &g)?;
            let v = normalize(&u, &nu_hat, &g);
            let m = invariant_from_seed(&v, &seed, &nu_hat, &g).map_err(classify)?;
            let lam = TransverseMeasure::from_parts_unchecked(v, m);
            b.output("value", entropy(&lam), "closed_form");
            Ok(b)
        }
        Cmd::Pressure { groupoid, potential } => {
            let mut b = ReportBuilder::new("pressure");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let u = io::load_potential(&text, &g).map_err(classify)?;
            let p = pressure(&u, &nu_hat, &g);
            let classes: Vec<String> = p.argmax_classes.iter().map(|&c| g.class_label(c)).collect();
            b.output("value", p.value, "closed_form");
            b.output("argmax_classes", classes, "closed_form");
            Ok(b)
        }
        Cmd::Equilibrium { groupoid, potential } => {
            let mut b = ReportBuilder::new("equilibrium");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let u = io::load_potential(&text, &g).map_err(classify)?;
            let eq = equilibrium_for(&u, &nu_hat, &g).map_err(classify)?;
            b.output("values", point_map(eq.lam.modulus().values(), &g), "closed_form");
            b.output("mass", point_map(eq.lam.base().masses(), &g), "closed_form");
            b.output("entropy", entropy(&eq.lam), "closed_form");
            let ties: Vec<String> = eq.ties.iter().map(|&c| g.class_label(c)).collect();
            b.diagnostic("tie_classes", ties);
            b.diagnostic("seed_point", g.space().label(eq.seed_point));
            Ok(b)
        }
        Cmd::InvolutionCheck {
            groupoid,
            potential,
            seed,
            samples,
            tol,
        } => {
            let mut b = ReportBuilder::new("involution-check");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let u = io::load_potential(&text, &g).map_err(classify)?;
            b.flag("seed", seed).flag("samples", samples).flag("tol", tol);
            let eq = equilibrium_for(&u, &nu_hat, &g).map_err(classify)?;
            let mut rng = sample::rng_from_seed(seed);
            let mut candidates = vec![modulus_candidate(&eq.lam, &nu_hat, &g).map_err(classify)?];
            for _ in 0..samples {
                let f = sample::random_potential(&mut rng, g.n_points(), 1.5);
                candidates.push(
                    SignedTransverseFunction::from_density(f.values(), &nu_hat, &g)
                        .map_err(classify)?,
                );
            }
            let residual = involution_check(&eq.lam, &candidates, &nu_hat, &g).map_err(classify)?;
            b.output_tol("residual", residual, "sampled_bound", Some(tol));
            if residual.abs() > tol {
                return Err(Failure::Validation(format!(
                    "Legendre involution residual {residual:e} exceeds {tol:e}"
                )));
            }
            Ok(b)
        }
        Cmd::Extremal {
            groupoid,
            potential,
            case,
            tol,
        } => {
            let mut b = ReportBuilder::new("extremal");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let u = io::load_potential(&text, &g).map_err(classify)?;
            let case = match case {
                ExtremalCaseArg::Pair => ExtremalCase::Pair,
                ExtremalCaseArg::Trivial => ExtremalCase::Trivial,
            };
            b.flag("case", match case {
                ExtremalCase::Pair => "pair",
                ExtremalCase::Trivial => "trivial",
            })
            .flag("tol", tol);
            let r = extremal_closed_forms(case, u.values(), &nu_hat, &g).map_err(classify)?;
            b.output("pressure", r.closed_pressure, "closed_form");
            b.output("entropy", r.closed_entropy, "closed_form");
            if let Some(gibbs) = &r.gibbs {
                b.output("gibbs", point_map(gibbs, &g), "closed_form");
            }
            b.diagnostic("pressure_residual", r.pressure_residual);
            b.diagnostic("entropy_residual", r.entropy_residual);
            if r.pressure_residual > tol || r.entropy_residual > tol {
                return Err(Failure::Validation(format!(
                    "closed forms disagree with the generic code paths beyond {tol:e}"
                )));
            }
            Ok(b)
        }
        Cmd::Xy { what } => run_xy(what),
        Cmd::Dyn { what } => run_dyn(what),
    }
}

fn run_verify(cmd: VerifyCmd) -> CliResult<ReportBuilder> {
    match cmd {
        VerifyCmd::Haar {
            groupoid,
            potential,
            measure,
            tol,
        } => {
            let mut b = ReportBuilder::new("verify haar");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let v = io::load_potential(&text, &g).map_err(classify)?;
            let text = b.read("measure", &measure.measure)?;
            let m = io::load_measure(&text, &g).map_err(classify)?;
            b.flag("tol", tol);
            let residual = verify_haar_invariance(&m, &v, &nu_hat, &g, None).map_err(classify)?;
            b.output_tol("residual", residual, "closed_form", Some(tol));
            b.output("passed", residual <= tol, "closed_form");
            if residual > tol {
                return Err(Failure::Validation(format!(
                    "Haar-invariance residual {residual:e} exceeds {tol:e}"
                )));
            }
            Ok(b)
        }
        VerifyCmd::Quasi {
            groupoid,
            measure,
            modular,
            tol,
        } => {
            let mut b = ReportBuilder::new("verify quasi");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("measure", &measure.measure)?;
            let m = io::load_measure(&text, &g).map_err(classify)?;
            let text = b.read("modular", &modular)?;
            let delta = io::load_modular(&text, &g).map_err(classify)?;
            b.flag("tol", tol);
            // exhaustive residual plus the argmax pair for the report
            let residual = verify_quasi_invariance(&m, &delta, &nu_hat, &g, None).map_err(classify)?;
            let mut worst_pair = None;
            let mut worst: f64 = -1.0;
            for c in g.classes() {
                for &a in g.members(c) {
                    for &x in g.members(c) {
                        let f = [PairFunction::indicator(g.n_points(), a, x)];
                        let r = verify_quasi_invariance(&m, &delta, &nu_hat, &g, Some(&f))
                            .map_err(classify)?;
                        if r > worst {
                            worst = r;
                            worst_pair = Some((a, x));
                        }
                    }
                }
            }
            b.output_tol("residual", residual, "closed_form", Some(tol));
            b.output("passed", residual <= tol, "closed_form");
            if let Some((a, x)) = worst_pair {
                b.diagnostic(
                    "worst_pair",
                    [g.space().label(a).to_string(), g.space().label(x).to_string()],
                );
            }
            if residual > tol {
                let (a, x) = worst_pair.expect("nonzero residual has a witness pair");
                return Err(Failure::Validation(format!(
                    "quasi-invariance residual {residual:e} exceeds {tol:e}; worst pair ({}, {})",
                    g.space().label(a),
                    g.space().label(x)
                )));
            }
            Ok(b)
        }
        VerifyCmd::Saturation { groupoid, measure } => {
            let mut b = ReportBuilder::new("verify saturation");
            let (g, _) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("measure", &measure.measure)?;
            let m = io::load_measure(&text, &g).map_err(classify)?;
            let report = saturation_check(&m, &g);
            b.output("passed", report.passed, "closed_form");
            if let Some(c) = report.witness_class {
                b.diagnostic("witness_class", g.class_label(c));
            }
            if !report.passed {
                let c = report.witness_class.expect("failed check has a witness");
                return Err(Failure::Validation(format!(
                    "saturation fails on class {}: mixed zero and positive masses",
                    g.class_label(c)
                )));
            }
            Ok(b)
        }
    }
}

fn run_lambda(cmd: LambdaCmd) -> CliResult<ReportBuilder> {
    match cmd {
        LambdaCmd::Eval {
            groupoid,
            potential,
            measure,
            transverse,
        } => {
            let mut b = ReportBuilder::new("lambda eval");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let v = io::load_potential(&text, &g).map_err(classify)?;
            let text = b.read("measure", &measure.measure)?;
            let m = io::load_measure(&text, &g).map_err(classify)?;
            let text = b.read("transverse", &transverse)?;
            let nu = io::load_transverse(&text, &g).map_err(classify)?;
            let lam = TransverseMeasure::new(v, m, &nu_hat, &g).map_err(classify)?;
            b.output("value", lam.eval_signed(&nu, &g), "closed_form");
            Ok(b)
        }
        LambdaCmd::Roundtrip {
            groupoid,
            potential,
            measure,
            tol,
        } => {
            let mut b = ReportBuilder::new("lambda roundtrip");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let v = io::load_potential(&text, &g).map_err(classify)?;
            let text = b.read("measure", &measure.measure)?;
            let m = io::load_measure(&text, &g).map_err(classify)?;
            b.flag("tol", tol);
            let lam = TransverseMeasure::new(v, m.clone(), &nu_hat, &g).map_err(classify)?;
            let m2 = measure_from_transverse(|nu| lam.eval(nu, &g), &nu_hat, &g, 1e-9)
                .map_err(classify)?;
            let residual = g
                .space()
                .points()
                .map(|p| (m.mass(p) - m2.mass(p)).abs())
                .fold(0.0f64, f64::max);
            b.output("mass", point_map(m2.masses(), &g), "closed_form");
            b.output_tol("residual", residual, "closed_form", Some(tol));
            if residual > tol {
                return Err(Failure::Validation(format!(
                    "round-trip residual {residual:e} exceeds {tol:e}"
                )));
            }
            Ok(b)
        }
        LambdaCmd::CocoCheck {
            groupoid,
            potential,
            measure,
            seed,
            samples,
            tol,
        } => {
            let mut b = ReportBuilder::new("lambda coco-check");
            let (g, nu_hat) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("potential", &potential.potential)?;
            let v = io::load_potential(&text, &g).map_err(classify)?;
            let text = b.read("measure", &measure.measure)?;
            let m = io::load_measure(&text, &g).map_err(classify)?;
            b.flag("seed", seed).flag("samples", samples).flag("tol", tol);
            let lam = TransverseMeasure::new(v, m, &nu_hat, &g).map_err(classify)?;
            let mut rng = sample::rng_from_seed(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let kernel = sample::random_unit_row_kernel(&mut rng, &g);
                let nu1 = sample::random_transverse(&mut rng, &g, 1.0);
                worst = worst
                    .max(coco_invariance_check(&lam, &nu1, &kernel, &g).map_err(classify)?);
            }
            let structured = jacobian_kernel(lam.modulus(), &nu_hat, &g);
            worst = worst.max(
                coco_invariance_check(&lam, &nu_hat, &structured, &g).map_err(classify)?,
            );
            b.output_tol("residual", worst, "sampled_bound", Some(tol));
            if worst > tol {
                return Err(Failure::Validation(format!(
                    "cocycle-convolution invariance residual {worst:e} exceeds {tol:e}"
                )));
            }
            Ok(b)
        }
    }
}

fn parse_word(spec: &XySpec, text: &str) -> CliResult<Vec<usize>> {
    text.split(',')
        .map(|label| {
            let label = label.trim();
            spec.alphabet()
                .iter()
                .position(|a| a == label)
                .ok_or_else(|| Failure::Input(format!("unknown alphabet symbol `{label}`")))
        })
        .collect()
}

fn run_xy(cmd: XyCmd) -> CliResult<ReportBuilder> {
    match cmd {
        XyCmd::Eigen { xy } => {
            let mut b = ReportBuilder::new("xy eigen");
            let text = b.read("xy", &xy.xy)?;
            let spec = io::load_xy(&text).map_err(classify)?;
            let (c, phi) = leading_eigen(&spec).map_err(classify)?;
            let rho = eigenprob(&spec, spec.k().max(2) - 1).map_err(classify)?;
            b.output_tol("eigenvalue", c, "iterative", Some(1e-12));
            b.output_tol("eigenfunction", phi.table(), "iterative", Some(1e-12));
            b.output_tol("eigenprobability", rho.weights(), "iterative", Some(1e-12));
            b.diagnostic("eigenfunction_depth", phi.depth());
            Ok(b)
        }
        XyCmd::LimitQuotient { xy, word, iters } => {
            let mut b = ReportBuilder::new("xy limit-quotient");
            let text = b.read("xy", &xy.xy)?;
            let spec = io::load_xy(&text).map_err(classify)?;
            b.flag("word", &word).flag("iters", iters);
            let w = parse_word(&spec, &word)?;
            let h = CylinderFunction::indicator(spec.d(), &w);
            let value = limit_quotient(&spec, &h, iters).map_err(classify)?;
            b.output("value", value, "iterative");
            let rho = eigenprob(&spec, w.len().max(spec.k() - 1)).map_err(classify)?;
            let exact = rho.integrate(&h).map_err(classify)?;
            b.diagnostic("eigenprob_integral", exact);
            b.diagnostic("gap", (value - exact).abs());
            Ok(b)
        }
        XyCmd::Normalize { xy, tol } => {
            let mut b = ReportBuilder::new("xy normalize");
            let text = b.read("xy", &xy.xy)?;
            let spec = io::load_xy(&text).map_err(classify)?;
            b.flag("tol", tol);
            let (c, phi) = leading_eigen(&spec).map_err(classify)?;
            let u = ruelle_normalize(&spec, c, &phi).map_err(classify)?;
            let residual = haar_thermo::xy::normalization_residual(&u);
            b.output("potential", u.potential(), "iterative");
            b.output_tol("residual", residual, "iterative", Some(tol));
            let one = CylinderFunction::constant(spec.d(), 1.0);
            let transfer_gap = h_vs_ruelle_check(&u, &one, u.k()).map_err(classify)?;
            b.diagnostic("transfer_operator_gap", transfer_gap);
            if residual > tol {
                return Err(Failure::Validation(format!(
                    "normalized potential residual {residual:e} exceeds {tol:e}"
                )));
            }
            Ok(b)
        }
        XyCmd::VerifyQuasi { xy, depth, tol } => {
            let mut b = ReportBuilder::new("xy verify-quasi");
            let text = b.read("xy", &xy.xy)?;
            let spec = io::load_xy(&text).map_err(classify)?;
            let depth = depth.unwrap_or(spec.k() + 1);
            b.flag("depth", depth).flag("tol", tol);
            let rho = eigenprob(&spec, depth).map_err(classify)?;
            let residual =
                xy_quasi_invariance_check(&spec, &rho, depth, true).map_err(classify)?;
            b.output_tol("residual", residual, "closed_form", Some(tol));
            b.output("passed", residual <= tol, "closed_form");
            if residual > tol {
                return Err(Failure::Validation(format!(
                    "quasi-invariance residual {residual:e} exceeds {tol:e}"
                )));
            }
            Ok(b)
        }
    }
}

fn run_dyn(cmd: DynCmd) -> CliResult<ReportBuilder> {
    match cmd {
        DynCmd::Disintegrate {
            groupoid,
            measure,
            map,
        } => {
            let mut b = ReportBuilder::new("dyn disintegrate");
            let (g, _) = load_groupoid(&mut b, &groupoid)?;
            let text = b.read("measure", &measure.measure)?;
            let m = io::load_measure(&text, &g).map_err(classify)?;
            let map_points: Option<Vec<PointId>> = match &map {
                None => None,
                Some(path) => {
                    let text = b.read("map", path)?;
                    Some(io::load_map(&text, &g).map_err(classify)?)
                }
            };
            let dis = disintegrate(map_points.as_deref(), &m, &g).map_err(classify)?;
            let conditionals: BTreeMap<String, BTreeMap<String, f64>> = g
                .classes()
                .map(|c| {
                    let by_point = g
                        .members(c)
                        .iter()
                        .enumerate()
                        .map(|(i, &p)| {
                            (g.space().label(p).to_string(), dis.conditionals[c.0][i])
                        })
                        .collect();
                    (g.class_label(c), by_point)
                })
                .collect();
            b.output("conditionals", conditionals, "closed_form");
            let fallback: Vec<String> = dis
                .uniform_fallback_classes
                .iter()
                .map(|&c| g.class_label(c))
                .collect();
            b.diagnostic("uniform_fallback_classes", fallback);
            b.diagnostic("identity_residual", dis.identity_residual);
            Ok(b)
        }
        DynCmd::Jacobian {
            markov,
            groupoid,
            measure,
        } => {
            let mut b = ReportBuilder::new("dyn jacobian");
            match (markov, groupoid, measure) {
                (Some(markov), None, None) => {
                    let text = b.read("markov", &markov)?;
                    let spec = io::load_markov(&text).map_err(classify)?;
                    let j = markov_jacobian(&spec).map_err(classify)?;
                    b.output("jacobian", &j, "closed_form");
                    b.diagnostic("stationary", spec.stationary());
                    Ok(b)
                }
                (None, Some(groupoid), Some(measure)) => {
                    let (g, _) = load_groupoid(&mut b, &GroupoidArgs { groupoid })?;
                    let text = b.read("measure", &measure)?;
                    let m = io::load_measure(&text, &g).map_err(classify)?;
                    let j = haar_jacobian(None, &m, &g).map_err(classify)?;
                    b.output("jacobian", point_map(&j, &g), "closed_form");
                    Ok(b)
                }
                _ => Err(Failure::Input(
                    "pass either --markov, or both --groupoid and --measure".into(),
                )),
            }
        }
        DynCmd::KsEntropy { markov } => {
            let mut b = ReportBuilder::new("dyn ks-entropy");
            let text = b.read("markov", &markov)?;
            let spec = io::load_markov(&text).map_err(classify)?;
            let value = ks_entropy_via_jacobian(&spec).map_err(classify)?;
            b.output("value", value, "closed_form");
            b.diagnostic("stationary", spec.stationary());
            Ok(b)
        }
    }
}
