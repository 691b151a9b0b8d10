//! Command-line arguments.

use std::ops::RangeInclusive;
use std::path::PathBuf;

use arcdet::harness::Format;
use arcdet::logdet::PrecisionPolicy;
use arcdet::{ConstantSign, Precision};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "ARCDET_OUTPUT_DIR";

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "arcdet",
    version,
    about = "Toeplitz determinants of symmetric arc indicators, their asymptotics, and CUE Monte Carlo"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// ln D_N(m, ε) by the direct recursion and by factorization.
    Det(DetArgs),
    /// Truncated large-N expansion, term by term.
    Asym(AsymArgs),
    /// Exact minus truncated expansion over an (ε, N) grid.
    Residual(ResidualArgs),
    /// Extrapolate free energies from exact one-interval determinants.
    Fit(FitArgs),
    /// Monte Carlo estimate of the power-gap probability.
    Mc(McArgs),
    /// Run the invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct OutputArgs {
    /// Output file; relative paths resolve against $ARCDET_OUTPUT_DIR when set.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Output file format.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,

    /// Default directory for output files.
    #[arg(long, env = OUTPUT_DIR_ENV, hide_env_values = true)]
    pub output_dir: Option<PathBuf>,
}

impl OutputArgs {
    /// Resolve `--out`, falling back to `default_name` inside the output
    /// directory. `None` means no file was requested and there is no default.
    pub fn destination(&self, default_name: Option<&str>) -> Option<PathBuf> {
        let dir = self.output_dir.clone();
        match (&self.out, default_name) {
            (Some(p), _) if p.is_absolute() => Some(p.clone()),
            (Some(p), _) => Some(dir.map(|d| d.join(p)).unwrap_or_else(|| p.clone())),
            (None, Some(name)) => {
                let file = format!("{name}.{}", self.format.extension());
                Some(
                    dir.map(|d| d.join(&file))
                        .unwrap_or_else(|| PathBuf::from(file)),
                )
            }
            (None, None) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Csv,
    Json,
}

impl FormatArg {
    pub fn format(self) -> Format {
        match self {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Direct,
    Factorized,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SignArg {
    #[default]
    Plus,
    Minus,
}

impl From<SignArg> for ConstantSign {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Plus => ConstantSign::Plus,
            SignArg::Minus => ConstantSign::Minus,
        }
    }
}

/// `auto`, `f64`, `dd`, or a bit count for MPFR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PrecisionArg {
    Auto,
    Fixed(Precision),
}

impl std::str::FromStr for PrecisionArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(PrecisionArg::Auto),
            "f64" | "native" | "double" => Ok(PrecisionArg::Fixed(Precision::Native)),
            "dd" | "double-double" => Ok(PrecisionArg::Fixed(Precision::DoubleDouble)),
            bits => match bits.parse::<u32>() {
                Ok(b) if b >= 53 => Ok(PrecisionArg::Fixed(Precision::Arbitrary(b))),
                _ => Err(format!(
                    "precision must be auto, f64, dd, or a bit count >= 53; got '{s}'"
                )),
            },
        }
    }
}

impl PrecisionArg {
    /// Escalation policy: `auto` climbs the ladder, a fixed tier runs only there.
    pub fn policy(self) -> PrecisionPolicy {
        match self {
            PrecisionArg::Auto => PrecisionPolicy::default(),
            PrecisionArg::Fixed(p) => PrecisionPolicy {
                start: p,
                max_bits: p.bits(),
                ..PrecisionPolicy::default()
            },
        }
    }
}

/// `A`, `A:B` or `A..=B` (inclusive).
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("invalid integer '{t}' in range '{s}'"))
    };
    let (a, b) = if let Some((a, b)) = s.split_once("..=") {
        (parse(a)?, parse(b)?)
    } else if let Some((a, b)) = s.split_once(':') {
        (parse(a)?, parse(b)?)
    } else {
        let a = parse(s)?;
        (a, a)
    };
    if a > b {
        return Err(format!("empty range '{s}'"));
    }
    Ok(a..=b)
}

#[derive(Debug, Args, Serialize)]
pub struct DetArgs {
    /// Number of arcs.
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    /// Matrix order.
    #[arg(long = "N", value_name = "N")]
    pub n: usize,
    /// Total arc fraction, in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    pub method: MethodArg,
    /// auto, f64, dd, or MPFR bits.
    #[arg(long, default_value = "auto")]
    pub precision: PrecisionArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct AsymArgs {
    #[arg(long, default_value_t = 1)]
    pub m: u32,
    #[arg(long = "N", value_name = "N")]
    pub n: usize,
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
    /// Keep powers n1^p with p >= -order.
    #[arg(long, default_value_t = 4)]
    pub order: u32,
    /// Sign in front of 3ζ'(-1) in the constant term.
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ResidualArgs {
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    /// N range, e.g. 90:100.
    #[arg(long = "N", value_name = "RANGE", value_parser = parse_range, default_value = "90:100")]
    #[serde(serialize_with = "ser_range")]
    pub n: RangeInclusive<usize>,
    /// Comma-separated ε values.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub epsilon: Vec<f64>,
    /// Even truncation order.
    #[arg(long, default_value_t = 4)]
    pub order: u32,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
    /// Use the reference configuration: m=5, N=90..=100, ε=0.1..0.6 step 0.05, order 4.
    #[arg(long, conflicts_with_all = ["m", "n", "epsilon", "order"])]
    pub figure2: bool,
    /// Also write per-n2 plot-data files next to the output.
    #[arg(long)]
    pub plot_data: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Free-energy order to extrapolate (orders 4.. are fitted in sequence).
    #[arg(long, default_value_t = 2)]
    pub g: u32,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub epsilon: Vec<f64>,
    /// Window of one-interval sizes n, e.g. 40:160.
    #[arg(long = "N", value_name = "RANGE", value_parser = parse_range, default_value = "40:160")]
    #[serde(serialize_with = "ser_range")]
    pub n: RangeInclusive<usize>,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct McArgs {
    #[arg(long = "N", value_name = "N", default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 5)]
    pub m: u32,
    #[arg(long, default_value_t = 0.8)]
    pub epsilon: f64,
    /// Recorded sweeps after burn-in, across all chains.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SelftestArgs {
    /// Reduced grids for a fast smoke run.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn ser_range<S: serde::Serializer>(r: &RangeInclusive<usize>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}:{}", r.start(), r.end()))
}
