//! `ipgaka`: provisioning, key derivation, sessions, attacks, benchmarks
//! and formula evaluation from the command line.

mod commands;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use ipgaka_core::protocol::Protocol;
use ipgaka_core::simnet::Scenario;

use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "ipgaka", version, about = "Grid-keyed, identity-concealing LTE authentication toolkit")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a grid file.
    GenGrid {
        #[arg(long)]
        n: usize,
        #[arg(long, value_parser = parse_seed)]
        seed: u64,
        /// Column widths in bits; defaults to the standard layout.
        #[arg(long, value_delimiter = ',')]
        widths: Option<Vec<u32>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Form a key sequence for a grid.
    GenKseq {
        #[arg(long, value_parser = existing_file)]
        grid: PathBuf,
        #[arg(long, value_parser = parse_seed)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Derive the root key of one epoch as 64 hex digits.
    DeriveKey {
        #[arg(long, value_parser = existing_file)]
        grid: PathBuf,
        #[arg(long, value_parser = existing_file)]
        kseq: PathBuf,
        /// Feeder seed.
        #[arg(long, value_parser = parse_seed)]
        seed: u64,
        #[arg(long)]
        epoch: u64,
    },
    /// Identity concealment.
    Imsi {
        #[command(subcommand)]
        op: ImsiOp,
    },
    /// Write matching UE and HSS subscriber state files.
    Provision {
        #[arg(long)]
        imsi: String,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, value_parser = parse_seed)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        epoch: u64,
        #[arg(long)]
        ue_out: PathBuf,
        #[arg(long)]
        hss_out: PathBuf,
    },
    /// Run authentication sessions and print their traces.
    RunSession {
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<Protocol>,
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
        /// Scenario file with network settings.
        #[arg(long, value_parser = existing_file)]
        config: Option<PathBuf>,
        /// UE state file; defaults to a freshly provisioned subscriber.
        #[arg(long, value_parser = existing_file)]
        ue: Option<PathBuf>,
        /// HSS state file for the subscriber.
        #[arg(long, value_parser = existing_file)]
        hss: Option<PathBuf>,
        #[arg(long)]
        sessions: Option<usize>,
        /// The UE answers without checking the network's token.
        #[arg(long)]
        skip_autn_check: bool,
    },
    /// Run one attack scenario and print the report.
    Attack {
        #[arg(long, value_parser = parse_scenario)]
        scenario: Option<Scenario>,
        #[arg(long, value_parser = parse_protocol)]
        protocol: Option<Protocol>,
        #[arg(long, value_parser = parse_seed)]
        seed: Option<u64>,
        #[arg(long, value_parser = existing_file)]
        config: Option<PathBuf>,
    },
    /// Run the benchmark grid and write CSV.
    Bench {
        #[arg(long, value_parser = existing_file)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a security formula exactly.
    Analyze {
        #[arg(value_enum)]
        formula: Formula,
        /// Comma separated `k=v` overrides.
        #[arg(long, default_value = "")]
        params: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum ImsiOp {
    /// Generate an ElGamal key pair.
    GenParams {
        #[arg(long, default_value_t = 2048)]
        bits: u64,
        #[arg(long, value_parser = parse_seed)]
        seed: u64,
        #[arg(long)]
        params_out: PathBuf,
        #[arg(long)]
        secret_out: PathBuf,
    },
    /// Print one `r,t` hex pair per block.
    Encrypt {
        #[arg(long, value_parser = existing_file)]
        params: PathBuf,
        #[arg(long)]
        imsi: String,
        /// Seed for the ephemeral exponents.
        #[arg(long, value_parser = parse_seed)]
        seed: u64,
    },
    /// Recover the identity from `r,t` pairs given in block order.
    Decrypt {
        #[arg(long, value_parser = existing_file)]
        params: PathBuf,
        #[arg(long, value_parser = existing_file)]
        secret: PathBuf,
        #[arg(long, required = true)]
        ct: Vec<String>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Formula {
    Breach,
    Lifetime,
    Throughput,
    Keys,
}

/// Seeds are hex, at most 64 bits, with an optional `0x`.
fn parse_seed(s: &str) -> Result<u64, String> {
    let digits = s.strip_prefix("0x").unwrap_or(s);
    if digits.is_empty() || digits.len() > 64 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(format!("expected 1 to 64 hex digits, got {s:?}"));
    }
    // Zero padding is accepted; the value itself must fit in 64 bits.
    let significant = digits.trim_start_matches('0');
    if significant.len() > 16 {
        return Err(format!("seed {s:?} exceeds 64 bits"));
    }
    Ok(if significant.is_empty() { 0 } else { u64::from_str_radix(significant, 16).expect("checked hex") })
}

fn parse_protocol(s: &str) -> Result<Protocol, String> {
    s.parse()
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: ipgaka_core::simnet::UnknownScenario| e.to_string())
}

fn existing_file(s: &str) -> Result<PathBuf, String> {
    let p = PathBuf::from(s);
    if p.is_file() {
        Ok(p)
    } else {
        Err(format!("no such file: {s}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds() {
        assert_eq!(parse_seed("1a"), Ok(0x1a));
        assert_eq!(parse_seed("0x1a"), Ok(0x1a));
        assert_eq!(parse_seed(&format!("{}01", "0".repeat(30))), Ok(1));
        assert_eq!(parse_seed("ffffffffffffffff"), Ok(u64::MAX));
        assert!(parse_seed("1ffffffffffffffff").is_err());
        assert!(parse_seed("").is_err());
        assert!(parse_seed("+1").is_err());
        assert!(parse_seed("zz").is_err());
    }
}
