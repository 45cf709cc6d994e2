//! Command-line driver for the cryptanalysis workbench: instance
//! generation, attack execution with exact ledgers, closed-form cost
//! evaluation, gain tables, walk and Grover simulation, adversary
//! numerics, and scaling sweeps.
//!
//! Exit codes: 0 success, 2 bad arguments, 3 infeasible size,
//! 4 attack failure, 1 anything else.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use qmitm_core::adversary::{
    adv_value, all_delta_masks, enumerate_inputs, lift_cf_to_ke2, optimize_adversary, verify_lift,
    verify_query_reduction, AdvError, AdversaryMatrix, Problem,
};
use qmitm_core::attacks::{run_attack, Algorithm, AttackError};
use qmitm_core::cost::{grover_cost, ke2_quantum_cost, ke4_quantum_cost, CostError, CostEstimate};
use qmitm_core::experiment::{
    emit_gains, run_scaling, scaling_to_csv, scaling_to_svg, scaling_to_table, ExperimentConfig,
    ExperimentError, MRule, ScalingAlgorithm, CONFIG_SCHEMA_VERSION,
};
use qmitm_core::oracle::{
    generate_family, plant_instance, Instance, InstanceDescriptor, OracleError,
};
use qmitm_core::simulator::{
    build_johnson_walk, grover_closed_form, grover_simulate, johnson_chain_spectral_gap,
    szegedy_walk_simulate, SimError,
};

#[derive(Parser)]
#[command(
    name = "qmitm",
    version,
    about = "Generic attacks on 2- and 4-fold iterated ideal block ciphers: exact ledgers, quantum cost models, desk-scale validation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance (binary blob + JSON descriptor)
    Gen(GenArgs),
    /// Run a classical attack against a stored instance
    Attack(AttackArgs),
    /// Evaluate a closed-form quantum cost model
    Cost(CostArgs),
    /// Print the gain table for a depth
    Gains(GainsArgs),
    /// Simulate the Szegedy walk on a Johnson graph
    Walk(WalkArgs),
    /// Simulate Grover search exactly
    Grover(GroverArgs),
    /// Adversary-bound numerics
    Adv(AdvArgs),
    /// Run a scaling sweep and fit exponents
    Scaling(ScalingArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of keys N
    #[arg(long)]
    n: usize,
    /// Block space M
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Planted keys, comma separated (derived from the seed if absent)
    #[arg(long, value_delimiter = ',')]
    keys: Option<Vec<usize>>,
    /// Plaintexts, comma separated (derived from the seed if absent)
    #[arg(long, value_delimiter = ',')]
    plaintexts: Option<Vec<u32>>,
    /// Number of pairs when plaintexts are derived
    #[arg(long, default_value_t = 2)]
    pairs: usize,
    /// Output path of the binary blob; the descriptor lands next to it
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AttackArgs {
    /// exhaustive | mitm2 | mitm4 | dissect4
    #[arg(long)]
    algo: String,
    /// Path to a generated instance blob
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CostArgs {
    /// ke2 | ke4 | grover
    #[arg(long)]
    attack: String,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    m: Option<u64>,
    /// Marked count for grover (default 1)
    #[arg(long, default_value_t = 1)]
    marked: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GainsArgs {
    #[arg(long)]
    depth: usize,
    /// csv | table
    #[arg(long, default_value = "table")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct WalkArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    steps: usize,
    /// Planted collision pair i,j
    #[arg(long, value_delimiter = ',', default_value = "0,1")]
    pair: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GroverArgs {
    #[arg(long)]
    m: usize,
    /// Number of marked elements (the first `marked` points)
    #[arg(long)]
    marked: usize,
    /// Iterations
    #[arg(long)]
    k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdvArgs {
    #[command(subcommand)]
    command: AdvCommand,
}

#[derive(Subcommand)]
enum AdvCommand {
    /// Lift a uniform d-CF adversary matrix to d-KE2 and check the
    /// tensor/norm/query-set structure
    Verify(AdvVerifyArgs),
    /// Adversary value of the uniform matrix for a problem
    Value(AdvValueArgs),
}

#[derive(Args)]
struct AdvVerifyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    p: u32,
    #[arg(long, default_value_t = 0)]
    c: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdvValueArgs {
    /// or2 | cf | ke2
    #[arg(long)]
    problem: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    c: u32,
    /// Hill-climb iterations on top of the uniform matrix (0 = none)
    #[arg(long, default_value_t = 0)]
    optimize: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    /// JSON config file; flags below are ignored when set
    #[arg(long)]
    config: Option<PathBuf>,
    /// exhaustive | mitm2 | mitm4 | dissect4 | ke2_cost | ke4_cost
    #[arg(long)]
    algo: Option<String>,
    /// Sizes N, comma separated, strictly increasing
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    /// n | n2 | n3 | fixed:<M>
    #[arg(long, default_value = "n")]
    m_rule: String,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[arg(long, default_value_t = 4)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the measured points as CSV here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write a log-log SVG plot here
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Measure plotted in the SVG
    #[arg(long, default_value = "time_units")]
    measure: String,
}

/// Everything that can go wrong, mapped onto the documented exit codes.
#[derive(Debug)]
enum AppError {
    Oracle(OracleError),
    Attack(AttackError),
    Cost(CostError),
    Sim(SimError),
    Adv(AdvError),
    Experiment(ExperimentError),
    Io(std::io::Error),
    BadArgs(String),
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AppError::Oracle(e) => write!(f, "{}", e),
            AppError::Attack(e) => write!(f, "{}", e),
            AppError::Cost(e) => write!(f, "{}", e),
            AppError::Sim(e) => write!(f, "{}", e),
            AppError::Adv(e) => write!(f, "{}", e),
            AppError::Experiment(e) => write!(f, "{}", e),
            AppError::Io(e) => write!(f, "{}", e),
            AppError::BadArgs(msg) => write!(f, "{}", msg),
        }
    }
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::BadArgs(_) => 2,
            AppError::Oracle(OracleError::InfeasibleSize(_)) => 3,
            AppError::Oracle(OracleError::Io(_)) => 1,
            AppError::Oracle(_) => 2,
            AppError::Attack(AttackError::NoKeyFound)
            | AppError::Attack(AttackError::AmbiguousKey) => 4,
            AppError::Attack(AttackError::Oracle(OracleError::InfeasibleSize(_))) => 3,
            AppError::Attack(_) => 2,
            AppError::Cost(CostError::InfeasibleSearch) => 3,
            AppError::Cost(_) => 2,
            AppError::Sim(SimError::DimensionTooLarge { .. }) => 3,
            AppError::Sim(_) => 2,
            AppError::Adv(AdvError::SizeGuard(_)) => 3,
            AppError::Adv(_) => 2,
            AppError::Experiment(e) => match e {
                ExperimentError::Oracle(OracleError::InfeasibleSize(_)) => 3,
                ExperimentError::Attack(AttackError::NoKeyFound)
                | ExperimentError::Attack(AttackError::AmbiguousKey) => 4,
                ExperimentError::Io(_) => 1,
                _ => 2,
            },
            AppError::Io(_) => 1,
        }
    }
}

macro_rules! from_error {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for AppError {
            fn from(e: $ty) -> Self {
                AppError::$variant(e)
            }
        }
    };
}

from_error!(Oracle, OracleError);
from_error!(Attack, AttackError);
from_error!(Cost, CostError);
from_error!(Sim, SimError);
from_error!(Adv, AdvError);
from_error!(Experiment, ExperimentError);
from_error!(Io, std::io::Error);

fn write_output(out: &Option<PathBuf>, text: &str) -> Result<(), AppError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("qmitm: {}", err);
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), AppError> {
    match command {
        Command::Gen(args) => cmd_gen(args),
        Command::Attack(args) => cmd_attack(args),
        Command::Cost(args) => cmd_cost(args),
        Command::Gains(args) => cmd_gains(args),
        Command::Walk(args) => cmd_walk(args),
        Command::Grover(args) => cmd_grover(args),
        Command::Adv(args) => match args.command {
            AdvCommand::Verify(v) => cmd_adv_verify(v),
            AdvCommand::Value(v) => cmd_adv_value(v),
        },
        Command::Scaling(args) => cmd_scaling(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), AppError> {
    let family = generate_family(args.seed, args.n, args.m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed ^ 0x5eed);
    let keys = match args.keys {
        Some(keys) => keys,
        None => (0..args.depth).map(|_| rng.gen_range(0..args.n)).collect(),
    };
    let plaintexts = match args.plaintexts {
        Some(p) => p,
        None => {
            let count = if args.depth == 4 { 4 } else { args.pairs };
            let mut out: Vec<u32> = Vec::with_capacity(count);
            while out.len() < count {
                let p = rng.gen_range(0..args.m as u32);
                if !out.contains(&p) {
                    out.push(p);
                }
            }
            out
        }
    };
    let instance = plant_instance(family, args.depth, &keys, &plaintexts)?;
    std::fs::write(&args.out, instance.to_bytes())?;
    let descriptor = InstanceDescriptor::describe(
        &instance,
        &args.out.file_name().unwrap_or_default().to_string_lossy(),
    );
    let json_path = args.out.with_extension("json");
    std::fs::write(
        &json_path,
        serde_json::to_string_pretty(&descriptor).unwrap(),
    )?;
    println!("wrote {} and {}", args.out.display(), json_path.display());
    Ok(())
}

#[derive(Serialize)]
struct AttackOutput {
    keys: Vec<usize>,
    forward_queries: u64,
    inverse_queries: u64,
    time_units: u64,
    peak_memory_units: u64,
    verified: bool,
}

fn load_instance(path: &Path) -> Result<Instance, AppError> {
    let bytes = std::fs::read(path)?;
    // seed is descriptor metadata; the binary alone carries the tables
    let seed = std::fs::read(path.with_extension("json"))
        .ok()
        .and_then(|data| serde_json::from_slice::<InstanceDescriptor>(&data).ok())
        .map(|d| d.seed)
        .unwrap_or(0);
    Ok(Instance::from_bytes(&bytes, seed)?)
}

fn cmd_attack(args: AttackArgs) -> Result<(), AppError> {
    let algo = Algorithm::parse(&args.algo)
        .ok_or_else(|| AppError::BadArgs(format!("unknown algorithm `{}`", args.algo)))?;
    let instance = load_instance(&args.instance)?;
    let result = run_attack(&instance, algo)?;
    let output = AttackOutput {
        keys: result.recovered_keys,
        forward_queries: result.ledger.forward_queries,
        inverse_queries: result.ledger.inverse_queries,
        time_units: result.ledger.time_units,
        peak_memory_units: result.ledger.peak_memory_units,
        verified: result.verified,
    };
    let mut text = serde_json::to_string_pretty(&output).unwrap();
    text.push('\n');
    write_output(&args.out, &text)
}

#[derive(Serialize)]
struct CostOutput {
    attack: String,
    n: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    m: Option<u64>,
    queries: f64,
    time_units: f64,
    memory_units: f64,
    time_exponent: String,
    space_exponent: String,
    time_space_exponent: String,
}

impl CostOutput {
    fn new(attack: &str, n: u64, m: Option<u64>, est: &CostEstimate) -> Self {
        CostOutput {
            attack: attack.to_string(),
            n,
            m,
            queries: est.queries,
            time_units: est.time_units,
            memory_units: est.memory_units,
            time_exponent: est.time_exponent.to_string(),
            space_exponent: est.space_exponent.to_string(),
            time_space_exponent: est.time_space_exponent().to_string(),
        }
    }
}

fn cmd_cost(args: CostArgs) -> Result<(), AppError> {
    let est = match args.attack.as_str() {
        "ke2" => CostOutput::new("ke2", args.n, None, &ke2_quantum_cost(args.n as usize)?),
        "ke4" => {
            let m = args.m.unwrap_or(args.n);
            CostOutput::new(
                "ke4",
                args.n,
                Some(m),
                &ke4_quantum_cost(args.n as usize, m as usize)?,
            )
        }
        "grover" => CostOutput::new("grover", args.n, None, &grover_cost(args.n, args.marked)?),
        other => return Err(AppError::BadArgs(format!("unknown attack `{}`", other))),
    };
    let mut text = serde_json::to_string_pretty(&est).unwrap();
    text.push('\n');
    write_output(&args.out, &text)
}

fn cmd_gains(args: GainsArgs) -> Result<(), AppError> {
    let csv = match args.format.as_str() {
        "csv" => true,
        "table" => false,
        other => return Err(AppError::BadArgs(format!("unknown format `{}`", other))),
    };
    let text = emit_gains(args.depth, csv)?;
    write_output(&args.out, &text)
}

fn cmd_walk(args: WalkArgs) -> Result<(), AppError> {
    if args.pair.len() != 2 {
        return Err(AppError::BadArgs("--pair needs exactly two indices".into()));
    }
    let op = build_johnson_walk(args.n, args.r, (args.pair[0], args.pair[1]))?;
    let report = szegedy_walk_simulate(&op, args.steps);
    let mut text = String::from("step,marked_mass\n");
    for (step, mass) in report.marked_mass_by_step.iter().enumerate() {
        text.push_str(&format!("{},{}\n", step, mass));
    }
    write_output(&args.out, &text)?;
    if args.out.is_some() {
        let gap = johnson_chain_spectral_gap(args.n, args.r)?;
        println!(
            "J({}, {}): dim {} gap {:.6} stationary {:.6} peak {:.6}",
            args.n,
            args.r,
            op.dimension(),
            gap,
            report.stationary_marked_mass,
            report
                .marked_mass_by_step
                .iter()
                .cloned()
                .fold(0.0, f64::max)
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct GroverOutput {
    space_size: usize,
    marked: usize,
    iterations: usize,
    marked_probability: f64,
    closed_form: f64,
    deviation: f64,
}

fn cmd_grover(args: GroverArgs) -> Result<(), AppError> {
    let marked: Vec<usize> = (0..args.marked).collect();
    let report = grover_simulate(args.m, &marked, args.k)?;
    let closed = grover_closed_form(args.m, args.marked, args.k);
    let output = GroverOutput {
        space_size: args.m,
        marked: args.marked,
        iterations: args.k,
        marked_probability: report.marked_probability,
        closed_form: closed,
        deviation: (report.marked_probability - closed).abs(),
    };
    let mut text = serde_json::to_string_pretty(&output).unwrap();
    text.push('\n');
    write_output(&args.out, &text)
}

fn cmd_adv_verify(args: AdvVerifyArgs) -> Result<(), AppError> {
    let cf = enumerate_inputs(Problem::DCf, args.n, args.m, args.p, args.c)?;
    let ke2 = enumerate_inputs(Problem::DKe2, args.n, args.m, args.p, args.c)?;
    let gamma_cf = AdversaryMatrix::uniform(&cf);
    let gamma_ke2 = lift_cf_to_ke2(&gamma_cf, &cf, &ke2)?;
    let lift = verify_lift(&gamma_cf, &cf, &gamma_ke2, &ke2)?;
    let reduction = verify_query_reduction(&gamma_ke2, &ke2, &gamma_cf, &cf)?;

    let verdict = |ok: bool| if ok { "pass" } else { "FAIL" };
    let mut text = String::new();
    text.push_str(&format!(
        "inputs: ke2 {} (yes {}, no {}, excluded multi {}, excluded direct {}), cf {}\n",
        ke2.len(),
        ke2.yes_count(),
        ke2.no_count(),
        ke2.excluded_multi_solution,
        ke2.excluded_outside_sector,
        cf.len()
    ));
    text.push_str(&format!("D = {}\n", lift.fiber_size));
    text.push_str(&format!("norm_cf = {:.9}\n", lift.norm_cf));
    text.push_str(&format!("norm_ke2 = {:.9}\n", lift.norm_ke2));
    text.push_str(&format!(
        "fibers constant: {}\n",
        verdict(lift.fibers_constant)
    ));
    text.push_str(&format!(
        "norm relation (dev {:.3e}): {}\n",
        lift.norm_relation_dev,
        verdict(lift.norm_relation_dev <= 1e-6)
    ));
    text.push_str(&format!(
        "tensor structure (dev {:.3e}): {}\n",
        lift.tensor_max_dev,
        verdict(lift.tensor_max_dev <= 1e-6)
    ));
    text.push_str(&format!(
        "query reduction (all {:.9} / I-set {:.9} / conjugated {:.9}): {}\n",
        reduction.max_over_all,
        reduction.max_over_i_set,
        reduction.max_after_conjugation,
        verdict(reduction.passes(1e-6))
    ));
    write_output(&args.out, &text)
}

fn cmd_adv_value(args: AdvValueArgs) -> Result<(), AppError> {
    let (enumeration, gamma) = match args.problem.as_str() {
        "or2" => {
            let e = enumerate_inputs(Problem::Or2, 2, 2, 0, 0)?;
            let g = AdversaryMatrix::uniform(&e);
            (e, g)
        }
        "cf" => {
            let e = enumerate_inputs(Problem::DCf, args.n, args.m, args.p, args.c)?;
            let g = AdversaryMatrix::uniform(&e);
            (e, g)
        }
        "ke2" => {
            let cf = enumerate_inputs(Problem::DCf, args.n, args.m, args.p, args.c)?;
            let e = enumerate_inputs(Problem::DKe2, args.n, args.m, args.p, args.c)?;
            let g = lift_cf_to_ke2(&AdversaryMatrix::uniform(&cf), &cf, &e)?;
            (e, g)
        }
        other => return Err(AppError::BadArgs(format!("unknown problem `{}`", other))),
    };
    let masks = all_delta_masks(&enumeration)?;
    let gamma = if args.optimize > 0 {
        optimize_adversary(&enumeration, args.optimize, args.seed)?
    } else {
        gamma
    };
    let value = adv_value(&gamma, &masks)?;
    write_output(&args.out, &format!("{:.9}\n", value))
}

fn cmd_scaling(args: ScalingArgs) -> Result<(), AppError> {
    let config = match &args.config {
        Some(path) => {
            let data = std::fs::read_to_string(path)?;
            serde_json::from_str::<ExperimentConfig>(&data)
                .map_err(|e| AppError::BadArgs(format!("config: {}", e)))?
        }
        None => {
            let algo_name = args
                .algo
                .as_deref()
                .ok_or_else(|| AppError::BadArgs("--algo or --config required".into()))?;
            let algorithm = ScalingAlgorithm::parse(algo_name)
                .ok_or_else(|| AppError::BadArgs(format!("unknown algorithm `{}`", algo_name)))?;
            let sizes = args
                .sizes
                .clone()
                .ok_or_else(|| AppError::BadArgs("--sizes required".into()))?;
            let m_rule = MRule::parse(&args.m_rule)
                .ok_or_else(|| AppError::BadArgs(format!("unknown m-rule `{}`", args.m_rule)))?;
            ExperimentConfig {
                schema_version: CONFIG_SCHEMA_VERSION,
                seed: args.seed,
                algorithm,
                sizes,
                m_rule,
                trials: args.trials,
                pairs: args.pairs,
            }
        }
    };
    let report = run_scaling(&config)?;
    print!("{}", scaling_to_table(&report));
    if let Some(path) = &args.out {
        std::fs::write(path, scaling_to_csv(&report))?;
    }
    if let Some(path) = &args.svg {
        let svg = scaling_to_svg(&report, &args.measure)
            .ok_or_else(|| AppError::BadArgs(format!("no positive series `{}`", args.measure)))?;
        std::fs::write(path, svg)?;
    }
    Ok(())
}
