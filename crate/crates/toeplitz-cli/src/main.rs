//! Command-line front end: construction specs in, certified reports out.
//!
//! Exit codes: 0 success, 2 verification or computation failure, 1 usage
//! error. Output is deterministic for a given invocation: fixed enumeration
//! orders, sorted JSON keys, and no randomness beyond the --seed flag.
//! `TOEPLITZ_MEM_BUDGET` (bytes) caps any single materialization.

mod commands;
mod jsonfmt;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use toeplitz_core::{ConstructionSpec, Error, ToeplitzSystem};

#[derive(Parser)]
#[command(name = "toeplitz", version, about = "Exact computations on Toeplitz subshifts")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a window of the constructed point.
    Gen(commands::GenArgs),
    /// Level-n skeleton with its exactness certificate.
    Skeleton(commands::SkeletonArgs),
    /// Certified factor counts, optional CSV/plot data and exponent fit.
    Complexity(commands::ComplexityArgs),
    /// Build the level-n transport map and certify its defining identity.
    Phi(commands::PhiArgs),
    /// Construct a root of the shift and verify it extensionally.
    Roots(commands::RootsArgs),
    /// Odometer algebra on a period ladder: torsion, elements, minimality.
    Odometer(commands::OdometerArgs),
    /// Derive a block tower and check its combinatorial invariants.
    Blocks(commands::BlocksArgs),
    /// Emit a product construction spec realizing Z^d (+ Z/a when a > 1).
    Realize(commands::RealizeArgs),
    /// Run the invariant suite on one system, level by level.
    #[command(name = "verify-all")]
    VerifyAll(commands::VerifyAllArgs),
}

/// System selection shared by the point-centric subcommands.
#[derive(Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Constant hole word, e.g. "a?b?c".
    #[arg(long)]
    word: Option<String>,
    /// Comma-separated hole words, one per level.
    #[arg(long = "per-level", value_delimiter = ',', value_name = "W,W,...")]
    per_level: Option<Vec<String>>,
    /// Construction spec file (JSON).
    #[arg(long, value_name = "FILE")]
    spec: Option<PathBuf>,
}

impl Source {
    fn build(&self) -> Result<ToeplitzSystem, Error> {
        if let Some(w) = &self.word {
            return ToeplitzSystem::constant_word(w);
        }
        if let Some(ws) = &self.per_level {
            let refs: Vec<&str> = ws.iter().map(String::as_str).collect();
            return ToeplitzSystem::per_level(&refs);
        }
        let path = self.spec.as_ref().expect("clap enforces one source");
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
        ConstructionSpec::from_json(&text)?.build()
    }
}

pub fn parse_range(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected START:END")?;
    let start: i64 = a.trim().parse().map_err(|_| format!("bad start {a:?}"))?;
    let end: i64 = b.trim().parse().map_err(|_| format!("bad end {b:?}"))?;
    if start >= end {
        return Err(format!("empty range {start}:{end}"));
    }
    Ok((start, end))
}

pub fn parse_len_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: usize = a.trim().parse().map_err(|_| format!("bad low end {a:?}"))?;
    let hi: usize = b.trim().parse().map_err(|_| format!("bad high end {b:?}"))?;
    if lo < 1 || lo > hi {
        return Err(format!("need 1 <= LO <= HI, got {lo}:{hi}"));
    }
    Ok((lo, hi))
}

pub fn parse_powers(s: &str) -> Result<(u64, usize), String> {
    let (a, b) = s.split_once(':').ok_or("expected BASE:DEPTH")?;
    let base: u64 = a.trim().parse().map_err(|_| format!("bad base {a:?}"))?;
    let depth: usize = b.trim().parse().map_err(|_| format!("bad depth {b:?}"))?;
    if base < 2 || depth == 0 {
        return Err("need BASE >= 2 and DEPTH >= 1".into());
    }
    Ok((base, depth))
}

/// Parameter problems exit 1; failed verification or computation exits 2.
fn exit_for(err: &Error) -> i32 {
    match err {
        Error::InvalidWord(_)
        | Error::InvalidScale(_)
        | Error::ScaleMismatch(_)
        | Error::DepthOutOfRange { .. }
        | Error::NotCoprime { .. }
        | Error::NotGenerator(_)
        | Error::ParamsTooTight(_)
        | Error::PrimeCollision(_)
        | Error::InvalidSpec(_) => 1,
        _ => 2,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Gen(a) => commands::gen(a),
        Cmd::Skeleton(a) => commands::skeleton(a),
        Cmd::Complexity(a) => commands::complexity(a),
        Cmd::Phi(a) => commands::phi(a),
        Cmd::Roots(a) => commands::roots(a),
        Cmd::Odometer(a) => commands::odometer(a),
        Cmd::Blocks(a) => commands::blocks(a),
        Cmd::Realize(a) => commands::realize(a),
        Cmd::VerifyAll(a) => commands::verify_all(a),
    };
    match outcome {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_for(&e));
        }
    }
}
