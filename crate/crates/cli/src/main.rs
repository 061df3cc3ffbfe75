//! `spectral-reach` command-line front end.

mod commands;
mod input;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use spectral_reach::shaping::RewardKind;
use spectral_reach::verify::Suite;

use spectral_reach::envgrid::Coord;

use crate::input::{parse_coord, parse_dim, parse_seeds, Dim, Seeds};

#[derive(Debug, Parser)]
#[command(name = "spectral-reach", version, about = "Spectral reachability embeddings for grid worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct MapArgs {
    /// Map file (`.json` for continuous maps) or bundled map name.
    #[arg(long)]
    pub map: String,
    /// Cell size used to discretize continuous maps.
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbedKind {
    Lap,
    Ra,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Solve,
    Pinv,
    Mc,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Build the state graph and print its size.
    Env {
        #[command(flatten)]
        map: MapArgs,
        /// Graph JSON output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ground-truth LapRep or RA-LapRep embedding.
    Embed {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum)]
        kind: EmbedKind,
        #[arg(long, value_parser = parse_dim)]
        d: Dim,
        #[arg(long)]
        out: PathBuf,
    },
    /// Distance-to-goal grid and PPM raster.
    Heatmap {
        #[command(flatten)]
        map: MapArgs,
        /// Embedding CSV; computed from the map when absent.
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ra")]
        kind: EmbedKind,
        #[arg(long, value_parser = parse_dim, default_value = "full")]
        d: Dim,
        #[arg(long, value_parser = parse_coord)]
        goal: Coord,
        /// Scale distances to [0, 1] in the CSV.
        #[arg(long)]
        normalize: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant suites on the bundled graphs.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: Suite,
        /// JSON report output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learn an RA-LapRep from random-walk data.
    Learn {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, default_value_t = 10)]
        d: usize,
        /// Coverage temperature toward bias cells.
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(long)]
        seed: u64,
        /// Dataset episodes.
        #[arg(long, default_value_t = 2000)]
        episodes: usize,
        #[arg(long, default_value_t = 50_000)]
        iterations: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Q-learning with shaped rewards.
    Shape {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_delimiter = ',', value_parser = parse_reward_kind,
              default_value = "ra_laprep,laprep,l2,none")]
        kind: Vec<RewardKind>,
        /// One dimension, or a comma list to sweep RA-LapRep over.
        #[arg(long, value_delimiter = ',', value_parser = parse_dim, default_value = "10")]
        d: Vec<Dim>,
        /// Goal cell; repeat for several. Defaults to the map's `G` cells.
        #[arg(long, value_parser = parse_coord)]
        goal: Vec<Coord>,
        /// Seed count or comma list.
        #[arg(long, value_parser = parse_seeds)]
        seeds: Seeds,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Learned embedding CSV used for `ra_laprep`.
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Centrality and bottleneck selection.
    Bottleneck {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum, default_value = "ra")]
        kind: EmbedKind,
        #[arg(long, value_parser = parse_dim, default_value = "full")]
        d: Dim,
        #[arg(long)]
        embedding: Option<PathBuf>,
        #[arg(long, default_value_t = spectral_reach::bottleneck::DEFAULT_FRACTION)]
        frac: f64,
        /// Select the lowest centrality instead of the highest.
        #[arg(long)]
        invert: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Commute times by linear solve, pseudo-inverse or Monte Carlo.
    Commute {
        #[command(flatten)]
        map: MapArgs,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long, value_parser = parse_coord)]
        start: Option<Coord>,
        #[arg(long, value_parser = parse_coord)]
        goal: Option<Coord>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100_000)]
        walks: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse().map_err(|e: spectral_reach::Error| e.to_string())
}

fn parse_reward_kind(s: &str) -> Result<RewardKind, String> {
    s.parse().map_err(|e: spectral_reach::Error| e.to_string())
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("SPECTRAL_REACH_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow::anyhow!("SPECTRAL_REACH_THREADS must be a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match configure_threads().and_then(|()| commands::run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<spectral_reach::Error>().map_or(1, |e| e.exit_code());
            ExitCode::from(code as u8)
        }
    }
}
