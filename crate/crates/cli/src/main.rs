//! `rigidtop`: build, verify and tabulate rigid-topology certificates.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rigidtop::certificate::{self, CertificateFile};
use rigidtop::construction::parse_predicate_list;
use rigidtop::topology::certify;
use rigidtop::{Construction, Error, GroupSpec, Policy, Profile, StepRule};

const EXIT_OK: u8 = 0;
const EXIT_FAILED: u8 = 1;
const EXIT_RESOURCE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;
const EXIT_NO_INPUT: u8 = 66;

/// Radius of the ball whose elements get separation witnesses.
const TEST_RADIUS: u32 = 2;

#[derive(Parser)]
#[command(
    name = "rigidtop",
    version,
    about = "Staircase constructions of non-discrete, non-precompact group topologies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build stages, certify the topology and write a certificate file.
    Construct(ConstructArgs),
    /// Replay a certificate file and compare every recorded value.
    Verify { path: PathBuf },
    /// Print the rigidity defects recorded in a certificate.
    RigidityTable {
        path: PathBuf,
        /// Also write (stage, defect) rows as CSV.
        #[arg(long)]
        emit_plot: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ConstructArgs {
    /// z, free2, free<r>, heis or sl2z.
    #[arg(long)]
    group: String,
    /// paper, desk or custom:<M_1,M_2,...>.
    #[arg(long, default_value = "desk")]
    profile: String,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    stages: u64,
    /// default[:count], power:<element> or predicates:<file>.
    #[arg(long, default_value = "default")]
    policy: String,
    /// Largest table a stage may store.
    #[arg(long, env = "RIGIDTOP_NODE_CAP", value_parser = clap::value_parser!(u64).range(1..))]
    node_cap: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let code = match cli.command {
        Command::Construct(args) => construct(&args),
        Command::Verify { path } => verify(&path),
        Command::RigidityTable { path, emit_plot } => rigidity_table(&path, emit_plot.as_deref()),
    };
    ExitCode::from(code)
}

fn fail(code: u8, message: impl std::fmt::Display) -> u8 {
    eprintln!("rigidtop: {message}");
    code
}

fn error_code(e: &Error) -> u8 {
    if e.is_resource() {
        EXIT_RESOURCE
    } else if e.is_corrupt() {
        EXIT_DATA
    } else if matches!(e, Error::Config(_)) {
        EXIT_USAGE
    } else {
        EXIT_FAILED
    }
}

fn parse_policy(spec: &GroupSpec, text: &str) -> Result<Policy, u8> {
    if let Some(path) = text.strip_prefix("predicates:") {
        let body = std::fs::read_to_string(path).map_err(|e| fail(EXIT_NO_INPUT, format!("{path}: {e}")))?;
        let preds = parse_predicate_list(&body).map_err(|e| fail(EXIT_USAGE, e))?;
        return Ok(Policy::Predicates(preds));
    }
    Policy::parse(spec, text).map_err(|e| fail(EXIT_USAGE, e))
}

fn construct(args: &ConstructArgs) -> u8 {
    let setup = || -> Result<(GroupSpec, Profile, Policy), u8> {
        let spec = GroupSpec::from_label(&args.group).map_err(|e| fail(EXIT_USAGE, e))?;
        let rule: StepRule = args.profile.parse().map_err(|e| fail(EXIT_USAGE, e))?;
        let mut profile = Profile::new(rule);
        if let Some(cap) = args.node_cap {
            profile.node_cap = cap;
        }
        let policy = parse_policy(&spec, &args.policy)?;
        Ok((spec, profile, policy))
    };
    let (spec, profile, policy) = match setup() {
        Ok(v) => v,
        Err(code) => return code,
    };
    let stages = args.stages as usize;
    let construction = match Construction::build(spec, profile, policy, stages) {
        Ok(c) => c,
        Err(e) => return fail(error_code(&e), e),
    };
    let topology = match certify(&construction, TEST_RADIUS) {
        Ok(t) => t,
        Err(e) => return fail(error_code(&e), e),
    };
    let file = match CertificateFile::new(&construction, topology) {
        Ok(f) => f,
        Err(e) => return fail(error_code(&e), e),
    };
    let out = args.out.clone().unwrap_or_else(|| default_out(&args.group, &construction.profile.rule, stages));
    if let Err(e) = certificate::save_to_path(&file, &out) {
        return fail(EXIT_FAILED, format!("{}: {e}", out.display()));
    }
    print!("{}", report::summary(&file));
    println!("certificate: {}", out.display());
    let flags = file.topology.flags;
    if flags.hausdorff && flags.non_discrete && flags.non_precompact {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn default_out(group: &str, rule: &StepRule, stages: usize) -> PathBuf {
    let rule = match rule {
        StepRule::Custom(_) => "custom".to_string(),
        other => other.to_string(),
    };
    PathBuf::from(format!("{group}-{rule}-{stages}{}", certificate::EXTENSION))
}

fn read_certificate(path: &Path) -> Result<CertificateFile, u8> {
    let bytes = std::fs::read(path).map_err(|e| fail(EXIT_NO_INPUT, format!("{}: {e}", path.display())))?;
    certificate::load(&bytes).map_err(|e| fail(error_code(&e), format!("{}: {e}", path.display())))
}

fn verify(path: &Path) -> u8 {
    let file = match read_certificate(path) {
        Ok(f) => f,
        Err(code) => return code,
    };
    let report = match certificate::verify_replay(&file) {
        Ok(r) => r,
        Err(e) => return fail(error_code(&e), e),
    };
    print!("{}", report::replay_table(&report));
    if report.clean() {
        EXIT_OK
    } else {
        for item in report.mismatches() {
            eprintln!("rigidtop: mismatch in {}", item.field);
        }
        EXIT_FAILED
    }
}

fn rigidity_table(path: &Path, plot: Option<&Path>) -> u8 {
    let file = match read_certificate(path) {
        Ok(f) => f,
        Err(code) => return code,
    };
    let rows = match report::rigidity_rows(&file) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_DATA, e),
    };
    print!("{}", report::rigidity_table(&rows));
    if let Some(plot) = plot {
        if let Err(e) = report::write_plot(&rows, plot) {
            return fail(EXIT_FAILED, format!("{}: {e}", plot.display()));
        }
    }
    EXIT_OK
}
