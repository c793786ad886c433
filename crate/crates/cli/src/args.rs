use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use chi2norm::constants::IndexSet;
use chi2norm::{ConstantMethod, ThresholdSet};

use crate::config::{Overrides, CONFIG_ENV};
use crate::output::Format;

#[derive(Debug, Parser)]
#[command(name = "chi2norm", version, about = "χ² distance to the normal law: constants, bounds and checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// key = value configuration file; flags take precedence
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here instead of stdout
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, global = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, global = true)]
    pub max_subdivisions: Option<usize>,
    /// Hermite truncation order (default: adaptive, 40 doubling to 256)
    #[arg(long, global = true)]
    pub order: Option<usize>,
    /// Seed for the randomized checks in `verify`
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

impl GlobalArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_subdivisions: self.max_subdivisions,
            order: self.order,
            format: self.format,
            output: self.output.clone(),
            tier: None,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// χ² divergence of a density from the standard normal
    Chi2(Chi2Args),
    /// C_J(p) for one index set and p
    Constants(ConstantsArgs),
    /// C_J(1/n) for n = 2..10 and both index sets
    Table1(Table1Args),
    /// Explicit bound on χ²(S_n) from per-summand divergences
    Bound(BoundArgs),
    /// Subgaussian thresholds and MGF checks
    Subgaussian {
        #[command(subcommand)]
        action: SubgaussianCommand,
    },
    /// Run the invariant suite
    Verify(VerifyArgs),
    /// x, g(x), g_sym(x) samples
    Plotdata(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Chi2MethodArg {
    Direct,
    Series,
    Both,
}

#[derive(Debug, Args)]
pub struct Chi2Args {
    /// uniform, normal, beta:<shape>, mixture:<mu>, or <name>*<n>
    #[arg(long)]
    pub dist: String,
    /// Normalized sum of n independent copies
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    pub method: Chi2MethodArg,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long, value_parser = parse_index_set)]
    pub set: IndexSet,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value = "exact", value_parser = parse_method)]
    pub method: ConstantMethod,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// One row per (set, n) with argmax, certification and reference value
    #[arg(long)]
    pub detail: bool,
}

#[derive(Debug, Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// Common χ² of every summand
    #[arg(long, conflicts_with = "per_var")]
    pub avg_chi2: Option<f64>,
    #[arg(long)]
    pub symmetric: bool,
    /// Per-summand χ² values, comma separated
    #[arg(long, value_delimiter = ',')]
    pub per_var: Option<Vec<f64>>,
    /// Attach χ² of the normalized sum of this density as an oracle
    #[arg(long)]
    pub oracle: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum SubgaussianCommand {
    /// Smallest χ² threshold implying the subgaussian condition
    Threshold {
        /// first, basic or sym (default: all three)
        #[arg(long, value_parser = parse_threshold_set)]
        set: Option<ThresholdSet>,
    },
    /// Margins e^{t²} − E e^{tY} on a symmetric grid of t
    Check {
        #[arg(long)]
        dist: String,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value_t = 100)]
        t_steps: usize,
    },
}

#[derive(Debug, Args)]
#[command(args_conflicts_with_subcommands = true)]
pub struct VerifyArgs {
    /// Run tiers 1..=tier (1: identities, 2: constants, 3: oracle sums)
    #[arg(long)]
    pub tier: Option<u8>,
    #[command(subcommand)]
    pub action: Option<VerifyCommand>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Recurrence b_m against the oracle sum density
    Stein {
        #[arg(long, default_value = "uniform")]
        dist: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 24)]
        max_order: usize,
    },
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, default_value_t = 0.0)]
    pub x_min: f64,
    #[arg(long, default_value_t = 20.0)]
    pub x_max: f64,
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

fn parse_index_set(s: &str) -> Result<IndexSet, String> {
    s.parse().map_err(|e: chi2norm::Error| e.to_string())
}

fn parse_threshold_set(s: &str) -> Result<ThresholdSet, String> {
    s.parse().map_err(|e: chi2norm::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<ConstantMethod, String> {
    s.parse().map_err(|e: chi2norm::Error| e.to_string())
}
