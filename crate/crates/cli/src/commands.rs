//! Subcommand definitions and their drivers.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use quadreg::chains::{f_sigma, tau, BinaryString, GrowthFunction};
use quadreg::factors::{AtomLabel, QuadraticFactor};
use quadreg::gf::{FieldScalar, GroupElement, Prime, Space, SymMatrix};
use quadreg::gowers::BoundedFunction;
use quadreg::localnorms::{norm_p_eighth, norm_tw_eighth, omega_count, omega_predicted, FactorForms, LocalLabelTuple};
use quadreg::regularity::{assemble_main, cylinder_decompose, global_decompose, MainConfig, OracleKind};
use quadreg::set::SubsetOfG;
use quadreg::vc2::{vc2_dim, vc_dim};
use quadreg::Exec;
use serde::Serialize;

use crate::config::{Caps, ConfigError, RunConfig};
use crate::generate::{generate_set, SetKind};
use crate::io::{read_json, to_canonical_json, write_json, write_trace, FactorFile, PartitionFile, SetFile};
use crate::verify::{verify_suite, Level};

/// Exit code for malformed invocations.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "quadreg", version, about = "Quadratic regularity over F_p^n")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose a set into (nearly) uniform cells.
    Decompose(DecomposeArgs),
    /// Run the identity-check suite.
    Verify(VerifyArgs),
    /// VC and VC2 dimension of a set.
    Vc2(Vc2Args),
    /// Tables of tau and f_sigma as CSV.
    ChainBounds(ChainBoundsArgs),
    /// Per-atom local norm table as CSV.
    Norms(NormsArgs),
    /// Generate a set.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Global,
    Cylinder,
    Main,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Set file as written by `gen`.
    #[arg(long)]
    pub set: PathBuf,
    /// Must match the set file when given.
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: f64,
    #[arg(long, default_value = "linear:1")]
    pub rho: GrowthFunction,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "exhaustive")]
    pub oracle: OracleKind,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[arg(long)]
    pub attempts: Option<usize>,
    #[arg(long)]
    pub exhaustive_cap: Option<u128>,
    #[arg(long, default_value_t = 4)]
    pub c_inv: u32,
    /// k for `--mode main`.
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Starting factor for `--mode global`.
    #[arg(long)]
    pub start: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value = "quick")]
    pub level: Level,
    #[arg(long, default_value = "verify-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Vc2Args {
    #[arg(long)]
    pub set: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub kmax: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Table {
    Fsigma,
    Tau,
}

#[derive(Debug, Args)]
pub struct ChainBoundsArgs {
    #[arg(long, default_value = "linear:1")]
    pub rho: GrowthFunction,
    #[arg(long, value_enum, default_value = "fsigma")]
    pub table: Table,
    /// Longest σ for the f_σ table.
    #[arg(long, default_value_t = 6)]
    pub max_len: usize,
    #[arg(long, default_value_t = 3)]
    pub max_i: usize,
    #[arg(long, default_value_t = 5)]
    pub max_xy: i64,
}

#[derive(Debug, Args)]
pub struct NormsArgs {
    #[arg(long)]
    pub set: PathBuf,
    /// Factor file; the trivial factor when omitted.
    #[arg(long)]
    pub factor: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Random,
    AtomUnion,
    QuadraticVariety,
    Coset,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: GenKind,
    #[arg(long)]
    pub p: u32,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub density: f64,
    /// Factor file for `atom-union`.
    #[arg(long)]
    pub factor: Option<PathBuf>,
    /// Atom labels for `atom-union`, e.g. "0|1;2|2".
    #[arg(long)]
    pub labels: Option<String>,
    /// Symmetric matrix rows for `quadratic-variety`, e.g. "1,0;0,1".
    #[arg(long)]
    pub matrix: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub value: FieldScalar,
    /// Vectors for `coset`, e.g. "1,0,0;0,1,0".
    #[arg(long)]
    pub vectors: Option<String>,
    /// One offset per vector, e.g. "1,0".
    #[arg(long)]
    pub offsets: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_digits(s: &str) -> Result<Vec<FieldScalar>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().with_context(|| format!("bad number {t:?}")))
        .collect()
}

fn parse_rows(s: &str) -> Result<Vec<Vec<FieldScalar>>> {
    s.split(';').map(parse_digits).collect()
}

/// "a1 a2|b1" or "(a1,a2|b1)".
pub fn parse_label(s: &str) -> Result<AtomLabel> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (a, b) = s.split_once('|').with_context(|| format!("label {s:?} needs a '|'"))?;
    Ok(AtomLabel::new(parse_digits(a)?, parse_digits(b)?))
}

fn exec() -> Exec {
    Exec::default()
}

fn load_set(path: &Path) -> Result<(Space, SubsetOfG)> {
    read_json::<SetFile>(path)?.to_set()
}

fn write_out(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Decompose(args) => decompose(args),
        Command::Verify(args) => verify(args),
        Command::Vc2(args) => vc2(args),
        Command::ChainBounds(args) => chain_bounds(args),
        Command::Norms(args) => norms(args),
        Command::Gen(args) => gen(args),
    }
}

#[derive(Serialize)]
struct AssemblyFile {
    status: String,
    k: u32,
    epsilon: f64,
    mu: f64,
    union_complexity: (usize, usize),
    factor: FactorFile,
    deletions: usize,
    y: SetFile,
    sym_diff: usize,
    sym_diff_fraction: f64,
    homogeneous_fraction: f64,
    key_violations: Vec<usize>,
}

pub fn decompose(args: DecomposeArgs) -> Result<i32> {
    let (space, a) = load_set(&args.set)?;
    if args.p.is_some_and(|p| p != space.p().get()) || args.n.is_some_and(|n| n != space.n()) {
        bail!(ConfigError::Core(quadreg::Error::Invalid("--p/--n differ from the set file".into())));
    }
    let defaults = Caps::default();
    let config = RunConfig {
        p: space.p().get(),
        n: space.n(),
        delta: args.delta,
        epsilon: args.epsilon,
        rho: args.rho.clone(),
        seed: args.seed,
        oracle: args.oracle,
        c_inv: args.c_inv,
        caps: Caps {
            exhaustive_cap: args.exhaustive_cap.unwrap_or(defaults.exhaustive_cap),
            max_steps: args.max_steps.or(defaults.max_steps),
            attempts: args.attempts.unwrap_or(defaults.attempts),
        },
    };
    config.validate()?;
    let reg = config.regularity(exec());
    let rho_name = config.rho.to_string();
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let status = match args.mode {
        Mode::Global => {
            let start = args.start.as_deref().map(|p| read_json::<FactorFile>(p)?.to_factor()).transpose()?;
            let out = global_decompose(&space, &a, config.delta, &config.rho, &reg, start.as_ref())?;
            write_json(&args.out.join("partition.json"), &PartitionFile::from_global(&space, config.delta, &rho_name, &out))?;
            write_trace(&args.out.join("trace.csv"), &out.trace)?;
            out.status
        }
        Mode::Cylinder => {
            let out = cylinder_decompose(&space, &a, config.delta, &config.rho, &reg)?;
            write_json(&args.out.join("partition.json"), &PartitionFile::from_cylinder(&space, config.delta, &rho_name, &out))?;
            write_trace(&args.out.join("trace.csv"), &out.trace)?;
            out.status
        }
        Mode::Main => {
            let main = MainConfig { k: args.k, epsilon: config.epsilon, mu: args.mu, regularity: reg };
            let r = assemble_main(&space, &a, config.delta, &config.rho, &main)?;
            let part = PartitionFile::from_cylinder(&space, r.mu, &rho_name, &r.cylinder);
            write_json(&args.out.join("partition.json"), &part)?;
            write_trace(&args.out.join("trace.csv"), &r.cylinder.trace)?;
            let file = AssemblyFile {
                status: r.status.name().into(),
                k: args.k,
                epsilon: r.epsilon,
                mu: r.mu,
                union_complexity: r.union_complexity,
                factor: FactorFile::from_factor(&r.factor),
                deletions: r.deletions,
                y: SetFile::from_set(&space, &r.y),
                sym_diff: r.sym_diff,
                sym_diff_fraction: r.sym_diff_fraction,
                homogeneous_fraction: r.homogeneous_fraction,
                key_violations: r.key_violations,
            };
            write_json(&args.out.join("assembly.json"), &file)?;
            r.status
        }
    };
    eprintln!("{}", status.name());
    Ok(status.exit_code())
}

pub fn verify(args: VerifyArgs) -> Result<i32> {
    let report = verify_suite(args.level, exec())?;
    for c in &report.checks {
        println!("{c}");
    }
    report.write(&args.out)?;
    Ok(if report.passed { 0 } else { 1 })
}

pub fn vc2_json(space: &Space, a: &SubsetOfG, kmax: usize) -> Result<serde_json::Value> {
    let vc = vc_dim(space, a, kmax, exec())?;
    let vc2 = vc2_dim(space, a, kmax, exec())?;
    Ok(serde_json::json!({
        "kmax": kmax,
        "vc_dim": vc.value,
        "vc2_dim": vc2.value,
        "saturated": { "vc": vc.saturated, "vc2": vc2.saturated },
        "witnesses": { "vc": vc.witness, "vc2": vc2.witness },
    }))
}

pub fn vc2(args: Vc2Args) -> Result<i32> {
    let (space, a) = load_set(&args.set)?;
    print!("{}", to_canonical_json(&vc2_json(&space, &a, args.kmax)?)?);
    Ok(0)
}

pub fn chain_bounds(args: ChainBoundsArgs) -> Result<i32> {
    let mut w = csv::Writer::from_writer(std::io::stdout());
    match args.table {
        Table::Fsigma => {
            w.write_record(["sigma", "length", "ones", "disc", "a", "b"])?;
            for len in 0..=args.max_len {
                for i in 0..1u64 << len {
                    let s = BinaryString::from_index(len, i);
                    let (a, b) = f_sigma(&args.rho, &s);
                    let ones = quadreg::chains::ones_count(&s);
                    let disc = quadreg::chains::disc(&s);
                    w.write_record([s.to_string(), len.to_string(), ones.to_string(), disc.to_string(), a.to_string(), b.to_string()])?;
                }
            }
        }
        Table::Tau => {
            w.write_record(["i", "x", "y", "tau"])?;
            for i in 0..=args.max_i {
                for x in 0..=args.max_xy {
                    for y in 0..=args.max_xy {
                        w.write_record([i.to_string(), x.to_string(), y.to_string(), tau(&args.rho, i, x, y).to_string()])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(0)
}

/// One row of the `norms` table; `None` fields print empty.
#[derive(Debug, Serialize)]
pub struct NormRow {
    pub label: String,
    pub atom_size: usize,
    pub omega_count: u64,
    pub omega_predicted: f64,
    #[serde(rename = "normP8")]
    pub norm_p8: Option<f64>,
    #[serde(rename = "normTW8")]
    pub norm_tw8: Option<f64>,
    pub diff: Option<f64>,
}

/// Local norms of f = 1_A − α (α the density of A in G) on every atom, with
/// the canonical tuple d = (e, 0, 0; 0, 0, 0) for the TW norm.
pub fn norm_rows(space: &Space, a: &SubsetOfG, factor: &QuadraticFactor) -> Result<Vec<NormRow>> {
    let g = space.size() as i64;
    let nums = (0..space.size()).map(|x| a.contains(x) as i64 * g - a.len() as i64).collect();
    let f = BoundedFunction::from_rational(space, nums, g)?;
    let forms = FactorForms::new(space, factor);
    let (l, q) = factor.complexity();
    let degenerate = |r: quadreg::Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(quadreg::Error::DegenerateLabel(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let mut rows = Vec::new();
    for code in 0..factor.num_labels() {
        let e = factor.label(code);
        let omega = omega_count(&forms, &e, exec())?;
        let p8 = if omega == 0 { None } else { degenerate(norm_p_eighth(&forms, &f, &e, exec()))? };
        let tw8 = degenerate(norm_tw_eighth(&forms, &f, &LocalLabelTuple::canonical(&e), exec()))?;
        rows.push(NormRow {
            label: e.to_string(),
            atom_size: forms.atom(&e).len(),
            omega_count: omega,
            omega_predicted: omega_predicted(space.p(), space.n(), l, q),
            norm_p8: p8,
            norm_tw8: tw8,
            diff: p8.zip(tw8).map(|(p, t)| t - p),
        });
    }
    Ok(rows)
}

pub fn norms(args: NormsArgs) -> Result<i32> {
    let (space, a) = load_set(&args.set)?;
    let factor = match &args.factor {
        Some(path) => read_json::<FactorFile>(path)?.to_factor()?,
        None => QuadraticFactor::trivial(space.p(), space.n()),
    };
    if factor.p() != space.p() || factor.n() != space.n() {
        bail!(ConfigError::Core(quadreg::Error::Invalid("factor and set live in different spaces".into())));
    }
    let mut w = csv::Writer::from_writer(std::io::stdout());
    for r in norm_rows(&space, &a, &factor)? {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(0)
}

pub fn gen(args: GenArgs) -> Result<i32> {
    let space = Space::new(Prime::new(args.p).map_err(ConfigError::from)?, args.n).map_err(ConfigError::from)?;
    let missing = |what: &str| ConfigError::Core(quadreg::Error::Invalid(format!("--kind needs --{what}")));
    let kind = match args.kind {
        GenKind::Random => SetKind::Random { density: args.density },
        GenKind::AtomUnion => {
            let path = args.factor.as_ref().ok_or_else(|| missing("factor"))?;
            let labels = args.labels.as_ref().ok_or_else(|| missing("labels"))?;
            SetKind::AtomUnion {
                factor: read_json::<FactorFile>(path)?.to_factor()?,
                labels: labels.split(';').map(parse_label).collect::<Result<_>>()?,
            }
        }
        GenKind::QuadraticVariety => {
            let rows = parse_rows(args.matrix.as_ref().ok_or_else(|| missing("matrix"))?)?;
            SetKind::QuadraticVariety { m: SymMatrix::from_rows(&rows)?, value: args.value }
        }
        GenKind::Coset => {
            let vectors = parse_rows(args.vectors.as_ref().ok_or_else(|| missing("vectors"))?)?;
            let offsets = parse_digits(args.offsets.as_ref().ok_or_else(|| missing("offsets"))?)?;
            SetKind::Coset { vectors: vectors.into_iter().map(GroupElement).collect(), offsets }
        }
    };
    let set = generate_set(&space, &kind, args.seed)?;
    write_out(&args.out, &to_canonical_json(&SetFile::from_set(&space, &set))?)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse() {
        assert_eq!(parse_label("(0|1)").unwrap(), AtomLabel::new(vec![0], vec![1]));
        assert_eq!(parse_label("1 2|").unwrap(), AtomLabel::new(vec![1, 2], vec![]));
        assert!(parse_label("12").is_err());
    }

    #[test]
    fn cli_parses() {
        let cli = Cli::try_parse_from(["quadreg", "decompose", "--mode", "cylinder", "--set", "a.json", "--delta", "0.4", "--rho", "poly:2,2", "--out", "o"]).unwrap();
        match cli.command {
            Command::Decompose(d) => {
                assert_eq!(d.mode, Mode::Cylinder);
                assert_eq!(d.rho, GrowthFunction::poly(2, 2));
            }
            _ => panic!("wrong subcommand"),
        }
        assert!(Cli::try_parse_from(["quadreg", "decompose", "--mode", "sideways"]).is_err());
    }
}
