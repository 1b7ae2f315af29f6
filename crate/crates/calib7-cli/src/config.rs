use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "calib7", version, about = "Verify G2 and coassociative constructions numerically")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the checks for a built-in family or an input lift; exit 0 iff all pass.
    Verify(RunConfig),
    /// Tabulate a, b, |rho| and the classification of a CR-holomorphic curve.
    Invariants(RunConfig),
    /// Sample the profile curve as CSV or SVG.
    Profile(RunConfig),
    /// Write a fixture lift as JSON.
    Export(RunConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Hl,
    Bundle,
    Fiber,
    TPlane,
    Binormal,
    RoundS2,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    #[arg(long, value_enum, conflicts_with = "input")]
    pub family: Option<Family>,
    /// CurveLift JSON file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<f64>,
    /// Nodes per dimension, `N` or `N,M`.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<[usize; 2]>,
    /// Parameter interval `A:B`.
    #[arg(long, value_parser = parse_range)]
    pub t_range: Option<(f64, f64)>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub fd_step: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_grid(s: &str) -> Result<[usize; 2], String> {
    let parts: Vec<&str> = s.split(',').collect();
    let num = |p: &str| p.trim().parse::<usize>().map_err(|_| format!("bad grid size {p:?}"));
    let g = match parts.as_slice() {
        [n] => [num(n)?, num(n)?],
        [n, m] => [num(n)?, num(m)?],
        _ => return Err("grid must be N or N,M".into()),
    };
    if g[0] < 4 || g[1] < 4 {
        return Err("grids need at least 4 nodes per dimension".into());
    }
    Ok(g)
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("range must be A:B")?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number {a:?}"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number {b:?}"))?;
    if !(a < b) {
        return Err("range needs A < B".into());
    }
    Ok((a, b))
}

impl RunConfig {
    /// Checks clap cannot express.
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [("tol", self.tol), ("fd-step", self.fd_step)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("--{name} must be positive"));
                }
            }
        }
        if let Some(k) = self.k {
            if !(k >= 0.0 && k.is_finite()) {
                return Err("--k must be nonnegative".into());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("5").unwrap(), [5, 5]);
        assert_eq!(parse_grid("5,7").unwrap(), [5, 7]);
        assert!(parse_grid("3").is_err());
        assert!(parse_grid("a").is_err());
    }

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("1.2:3").unwrap(), (1.2, 3.0));
        assert!(parse_range("3:1").is_err());
        assert!(parse_range("3").is_err());
    }
}
