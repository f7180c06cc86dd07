mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use decoykit::anonymize::LossMetric;
use decoykit::ErrorClass;

#[derive(Parser)]
#[command(
    name = "decoykit",
    version,
    about = "k-anonymous releases with per-recipient decoy classes and leak attribution"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Anonymize a dataset by optimal global recoding
    Anonymize {
        /// Input table (CSV with header)
        #[arg(long)]
        data: PathBuf,
        /// Schema file (TOML)
        #[arg(long)]
        schema: PathBuf,
        /// Hierarchy file (TOML)
        #[arg(long)]
        hierarchies: PathBuf,
        #[arg(long)]
        k: usize,
        /// Maximum share of records that may be suppressed, in [0, 1]
        #[arg(long, default_value_t = 0.0)]
        suppression: f64,
        /// precision, discernibility or avg-class-size
        #[arg(long, default_value = "precision")]
        metric: LossMetric,
        /// Anonymize a uniform sample of this many records instead of the whole table
        #[arg(long)]
        sample: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for table.csv and manifest.json
        #[arg(long)]
        out: PathBuf,
    },
    /// Link a view to a population and list decoy candidates
    Feasibility {
        /// Directory written by `anonymize`
        #[arg(long)]
        view: PathBuf,
        /// Population table with the view's schema
        #[arg(long)]
        population: PathBuf,
        /// Output directory for feasibility.json and risk_profile.csv
        #[arg(long)]
        out: PathBuf,
    },
    /// Build per-recipient releases with decoys and write the secret registry
    Release {
        #[arg(long)]
        view: PathBuf,
        #[arg(long)]
        population: PathBuf,
        /// Decoy and hardening policy (TOML)
        #[arg(long)]
        policy: PathBuf,
        /// Comma-separated recipient ids
        #[arg(long, value_delimiter = ',', required = true)]
        recipients: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Release directory; one sub-directory per recipient
        #[arg(long)]
        out: PathBuf,
        /// Registry file; must lie outside the release directory
        #[arg(long)]
        registry: PathBuf,
    },
    /// Simulate colluding recipients comparing their releases
    Collude {
        /// Release directories (at least two)
        #[arg(long = "release", num_args = 1..)]
        releases: Vec<PathBuf>,
        #[arg(long)]
        hierarchies: PathBuf,
        /// Band for the close-to-k census; defaults to the releases' k
        #[arg(long)]
        k: Option<usize>,
        /// any: suspect if one peer lacks a same-origin class; all: if every peer does
        #[arg(long, default_value = "any")]
        mode: decoykit::collusion::PeerMode,
        /// Ignore equal values when testing same-origin
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 1)]
        bin_width: usize,
        /// Write the attack report here (JSON)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Attribute leaked material to a recipient
    Attribute {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        leak: PathBuf,
        /// Treat the leak as free text scanned line by line
        #[arg(long)]
        text: bool,
        /// Token delimiters for --text
        #[arg(long, default_value = decoykit::attribution::DEFAULT_DELIMITERS)]
        delimiters: String,
        /// Minimum share of a recipient's signatures needed for a verdict
        #[arg(long, default_value_t = 0.5)]
        floor: f64,
        /// Write the verdict here (JSON)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic population
    Synthpop {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Population spec (TOML); the built-in example spec when omitted
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Output directory for population.csv, schema.toml and hierarchies.toml
        #[arg(long)]
        out: PathBuf,
    },
    /// Repeat sample-anonymize-link runs and summarize them
    Report {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        hierarchies: PathBuf,
        #[arg(long)]
        sample: usize,
        #[arg(long, default_value_t = 50)]
        runs: usize,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        suppression: Vec<f64>,
        #[arg(long, default_value = "precision")]
        metric: LossMetric,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output table (CSV)
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(class: ErrorClass) -> u8 {
    match class {
        ErrorClass::Validation => 2,
        ErrorClass::Capacity => 3,
        ErrorClass::Io => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Anonymize {
            data,
            schema,
            hierarchies,
            k,
            suppression,
            metric,
            sample,
            seed,
            out,
        } => commands::anonymize(&data, &schema, &hierarchies, k, suppression, metric, sample, seed, &out),
        Command::Feasibility { view, population, out } => commands::feasibility(&view, &population, &out),
        Command::Release {
            view,
            population,
            policy,
            recipients,
            seed,
            out,
            registry,
        } => commands::release(&view, &population, &policy, &recipients, seed, &out, &registry),
        Command::Collude {
            releases,
            hierarchies,
            k,
            mode,
            strict,
            bin_width,
            out,
        } => commands::collude(&releases, &hierarchies, k, mode, strict, bin_width, out.as_deref()),
        Command::Attribute {
            registry,
            leak,
            text,
            delimiters,
            floor,
            out,
        } => commands::attribute(&registry, &leak, text, &delimiters, floor, out.as_deref()),
        Command::Synthpop { n, seed, spec, out } => commands::synthpop(n, seed, spec.as_deref(), &out),
        Command::Report {
            data,
            schema,
            hierarchies,
            sample,
            runs,
            k,
            suppression,
            metric,
            seed,
            out,
        } => commands::report(&data, &schema, &hierarchies, sample, runs, k, suppression, metric, seed, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.class()))
        }
    }
}
