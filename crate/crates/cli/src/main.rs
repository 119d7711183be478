//! `qsna` — quasi-sure no-arbitrage on finite multi-prior scenario trees.
//!
//! Exit codes are a stable contract: 0 for success (valid instance,
//! no-arbitrage holds, witness verifies, zero disagreements), 1 for a
//! domain-negative outcome, 2 for input errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use qsna_core::harness::{gen_instance, run_all, GeneratorConfig};
use qsna_core::market::io::{parse_instance, serialize_instance, ParseError};
use qsna_core::market::Violation;
use qsna_core::na;
use qsna_core::prior;
use qsna_core::rat::format_rat;
use qsna_core::ScenarioTree;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(
    name = "qsna",
    version,
    about = "Decide robust no-arbitrage on finite scenario trees, extract witnesses, construct certifying priors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Inclusive range flag: `3` or `1..3` (also accepts `1..=3`).
#[derive(Clone, Debug)]
struct RangeArg(usize, usize);

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |x: &str| {
            x.parse::<usize>().map_err(|_| format!("invalid range bound `{x}` in `{s}`"))
        };
        if let Some((lo, hi)) = s.split_once("..") {
            let hi = hi.strip_prefix('=').unwrap_or(hi);
            let (lo, hi) = (parse(lo)?, parse(hi)?);
            if lo == 0 || lo > hi {
                return Err(format!("range `{s}` is empty or starts at zero"));
            }
            Ok(RangeArg(lo, hi))
        } else {
            let n = parse(s)?;
            if n == 0 {
                return Err(format!("range `{s}` must be ≥ 1"));
            }
            Ok(RangeArg(n, n))
        }
    }
}

#[derive(Args)]
struct CorpusArgs {
    /// 64-bit seed for deterministic generation
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of periods, e.g. `2` or `1..3`
    #[arg(long, default_value = "1..3")]
    periods: RangeArg,
    /// Number of risky assets
    #[arg(long, default_value = "1..3")]
    dim: RangeArg,
    /// Labels per level
    #[arg(long, default_value = "2..3")]
    labels: RangeArg,
    /// Generator priors per node
    #[arg(long, default_value = "1..3")]
    generators: RangeArg,
    /// Largest denominator on the rational grid
    #[arg(long, default_value_t = 8)]
    denominator_bound: u64,
    /// Post-edit one relevant node so that arbitrage is guaranteed
    #[arg(long)]
    force_arbitrage: bool,
}

impl CorpusArgs {
    fn to_config(&self) -> GeneratorConfig {
        GeneratorConfig {
            seed: self.seed,
            periods: (self.periods.0, self.periods.1),
            asset_dim: (self.dim.0, self.dim.1),
            alphabet_size: (self.labels.0, self.labels.1),
            generators: (self.generators.0, self.generators.1),
            denominator_bound: self.denominator_bound,
            zero_mass: (1, 8),
            force_arbitrage: self.force_arbitrage,
            max_paths: Some(48),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file against the format and model invariants
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Decide quasi-sure no-arbitrage; report per-node verdicts
    CheckNa {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Extract an explicit arbitrage witness from a failing instance
    FindArbitrage {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Construct the dominating prior and its per-node certificate
    ConstructPstar {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Re-verify a witness file against an instance
    VerifyWitness {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        witness: PathBuf,
    },
    /// Generate a seeded random instance
    Gen {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the randomized verification harness
    Harness {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Number of instances to generate and check
        #[arg(long, default_value_t = 50)]
        instances: u64,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    };
    ExitCode::from(code)
}

#[derive(Debug)]
enum CliError {
    Io(String, std::io::Error),
    Parse(ParseError),
    InvalidInstance(Vec<Violation>),
    Config(qsna_core::harness::ConfigError),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(path, e) => write!(f, "{path}: {e}"),
            CliError::Parse(e) => write!(f, "{e}"),
            CliError::InvalidInstance(violations) => {
                writeln!(f, "instance is invalid:")?;
                for v in violations {
                    writeln!(f, "  {v}")?;
                }
                Ok(())
            }
            CliError::Config(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        EXIT_INPUT
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn emit(output: Option<&PathBuf>, content: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Io(path.display().to_string(), e)),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

/// Loads and fully validates an instance; any violation is an input error.
fn load_valid_tree(path: &Path) -> Result<ScenarioTree, CliError> {
    let text = read_file(path)?;
    let (tree, mut violations) = parse_instance(&text).map_err(CliError::Parse)?;
    violations.extend(tree.validate());
    if violations.is_empty() {
        Ok(tree)
    } else {
        Err(CliError::InvalidInstance(violations))
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Validate { input } => {
            let text = read_file(&input)?;
            let (tree, mut violations) = parse_instance(&text).map_err(CliError::Parse)?;
            violations.extend(tree.validate());
            if violations.is_empty() {
                println!("valid");
                Ok(EXIT_OK)
            } else {
                for v in &violations {
                    println!("{v}");
                }
                Ok(EXIT_NEGATIVE)
            }
        }
        Command::CheckNa { input, output, format } => {
            let tree = load_valid_tree(&input)?;
            let report = na::analyze(&tree);
            let content = match format {
                Format::Json => na::report_to_json(&tree, &report),
                Format::Text => na::report_to_text(&tree, &report),
            };
            emit(output.as_ref(), &content)?;
            Ok(if report.global_holds { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::FindArbitrage { input, output, format } => {
            let tree = load_valid_tree(&input)?;
            let report = na::analyze(&tree);
            let failing = report
                .verdicts
                .iter()
                .find(|(v, relevant)| !v.holds && *relevant);
            let Some((verdict, _)) = failing else {
                eprintln!("no arbitrage exists");
                return Ok(EXIT_NEGATIVE);
            };
            let witness = na::extract_arbitrage(
                &tree,
                &verdict.node,
                verdict.witness.as_ref().expect("failing verdict carries a witness"),
            )
            .expect("relevant failing node lifts to an arbitrage");
            let content = match format {
                Format::Json => na::witness_to_json(&tree, &witness),
                Format::Text => witness_to_text(&tree, &witness),
            };
            emit(output.as_ref(), &content)?;
            Ok(EXIT_OK)
        }
        Command::ConstructPstar { input, output, format } => {
            let tree = load_valid_tree(&input)?;
            let cert = prior::construct_p_star(&tree);
            let content = match format {
                Format::Json => prior::certificate_to_json(&tree, &cert),
                Format::Text => certificate_to_text(&tree, &cert),
            };
            emit(output.as_ref(), &content)?;
            Ok(if cert.valid { EXIT_OK } else { EXIT_NEGATIVE })
        }
        Command::VerifyWitness { input, witness } => {
            let tree = load_valid_tree(&input)?;
            let text = read_file(&witness)?;
            let parsed = match na::witness_from_json(&tree, &text) {
                Ok(w) => w,
                // a witness naming nodes this instance does not have fails
                // verification rather than parsing
                Err(ParseError::Node { location, source }) => {
                    println!("witness does not match instance: {location}: {source}");
                    return Ok(EXIT_NEGATIVE);
                }
                Err(e) => return Err(CliError::Parse(e)),
            };
            let failures = na::verify_witness(&tree, &parsed);
            if failures.is_empty() {
                println!("witness verified");
                Ok(EXIT_OK)
            } else {
                for v in &failures {
                    println!("{v}");
                }
                Ok(EXIT_NEGATIVE)
            }
        }
        Command::Gen { corpus, output } => {
            let config = corpus.to_config();
            let tree = gen_instance(&config).map_err(CliError::Config)?;
            emit(output.as_ref(), &serialize_instance(&tree))?;
            Ok(EXIT_OK)
        }
        Command::Harness { corpus, instances, output, format } => {
            let config = corpus.to_config();
            let report = run_all(&config, instances).map_err(CliError::Config)?;
            let content = match format {
                Format::Json => report.to_json(),
                Format::Text => report.to_text(),
            };
            emit(output.as_ref(), &content)?;
            Ok(if report.total_disagreements() == 0 { EXIT_OK } else { EXIT_NEGATIVE })
        }
    }
}

fn witness_to_text(tree: &ScenarioTree, witness: &na::ArbitrageWitness) -> String {
    let mut out = String::new();
    out.push_str("arbitrage witness\n");
    out.push_str(&format!(
        "  initial capital: {}\n",
        format_rat(&witness.strategy.initial_capital)
    ));
    for (node, pos) in &witness.strategy.positions {
        if !qsna_core::geom::is_zero_vec(pos) {
            out.push_str(&format!(
                "  position at `{}`: [{}]\n",
                tree.node_key(node),
                pos.iter().map(format_rat).collect::<Vec<_>>().join(", ")
            ));
        }
    }
    out.push_str(&format!("  profit path: `{}`\n", tree.node_key(&witness.profit_path)));
    out.push_str(&format!(
        "  profit-path mass: {}\n",
        format_rat(&tree.path_probability(&witness.measure, &witness.profit_path))
    ));
    out
}

fn certificate_to_text(tree: &ScenarioTree, cert: &prior::PStarCertificate) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "dominating-prior certificate: {}\n",
        if cert.valid { "VALID" } else { "INVALID" }
    ));
    for check in &cert.checks {
        if check.aff_match && check.ri_zero {
            continue;
        }
        out.push_str(&format!(
            "  node `{}`: affine hulls {}, relative interior {}\n",
            tree.node_key(&check.node),
            if check.aff_match { "match" } else { "differ" },
            if check.ri_zero { "contains 0" } else { "misses 0" },
        ));
    }
    out
}
