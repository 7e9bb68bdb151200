//! Command-line front end: transpile, lower, roundtrip, eval,
//! verify-equivariance, compare, group-check, and stats over the JSON
//! formats of the core crate.
//!
//! Exit codes: 0 when the command succeeds and every check passes, 2 when a
//! check fails (the report still records why), 1 on usage or I/O errors.
//! Floating-point output is printed with 17 significant digits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gconvnet::error::Error;
use gconvnet::format::{
    self, load_network, store_network, Network,
};
use gconvnet::group::{validate_table, FiniteGroup, GroupDescriptor};
use gconvnet::signal::ChannelMap;
use gconvnet::transpile::{cnn_to_fnn, fnn_to_cnn, roundtrip_check, CheckConfig};
use gconvnet::verify::{check_equivariance, empirical_lp_distance, SampleSet};

#[derive(Parser)]
#[command(name = "gconvnet", version, about = "Finite-group network toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TransferArgs {
    /// Source network file.
    #[arg(long)]
    input: PathBuf,
    /// Where to write the converted network.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Where to write the transfer report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Number of random inputs for the equality check.
    #[arg(long = "check-samples", default_value_t = 100)]
    check_samples: usize,
    /// Seed for the check inputs.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a fully-connected network into a convolutional one.
    Transpile(TransferArgs),
    /// Convert a convolutional network into a fully-connected one.
    Lower(TransferArgs),
    /// Run fnn → cnn → fnn and check the round trip.
    Roundtrip(TransferArgs),
    /// Evaluate a network on a signal.
    Eval {
        #[arg(long)]
        input: PathBuf,
        /// Signal literal file ({"channels": C, "values": [...]}).
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check translation equivariance exhaustively over the group.
    VerifyEquivariance {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Empirical L^p distance between two networks on random samples.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Exponent: a positive number or "inf".
        #[arg(long)]
        p: String,
        #[arg(long, default_value_t = 16)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Close the sample set under all shifts first.
        #[arg(long, default_value_t = false)]
        symmetrize: bool,
    },
    /// Validate a group descriptor (inline JSON or a file path).
    GroupCheck {
        #[arg(long)]
        group: String,
    },
    /// Print size statistics of a network.
    Stats {
        #[arg(long)]
        input: PathBuf,
    },
}

/// 17 significant digits, enough to reproduce the double exactly.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Usage problems are exit code 1 regardless of clap's default.
            let _ = err.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Transpile(args) => transpile(args),
        Command::Lower(args) => lower(args),
        Command::Roundtrip(args) => roundtrip(args),
        Command::Eval { input, x, out } => eval(&input, &x, out.as_deref()),
        Command::VerifyEquivariance {
            input,
            samples,
            seed,
            tolerance,
        } => verify_equivariance(&input, samples, seed, tolerance),
        Command::Compare {
            a,
            b,
            p,
            samples,
            seed,
            symmetrize,
        } => compare(&a, &b, &p, samples, seed, symmetrize),
        Command::GroupCheck { group } => group_check(&group),
        Command::Stats { input } => stats(&input),
    }
}

fn check_config(args: &TransferArgs) -> CheckConfig {
    CheckConfig {
        samples: args.check_samples,
        seed: args.seed,
    }
}

fn transpile(args: TransferArgs) -> Result<ExitCode, Error> {
    let net = load_network(&args.input)?;
    let fnn = match net {
        Network::Fnn(fnn) => fnn,
        Network::Cnn(_) => {
            return Err(Error::InvalidParameter(
                "transpile expects a fully-connected network (use `lower` for the other direction)".into(),
            ))
        }
    };
    let (cnn, report) = fnn_to_cnn(&fnn, fnn.output_dim(), &check_config(&args))?;
    if let Some(out) = &args.out {
        store_network(&Network::Cnn(cnn), out)?;
    }
    if let Some(path) = &args.report {
        format::store_report(&report, path)?;
    }
    println!("direction: fnn_to_cnn");
    println!("special_case: {:?}", report.special_case);
    println!("source_weights: {}", report.source_weights);
    println!("target_weights: {}", report.target_weights);
    println!("bound_satisfied: {}", report.bound_satisfied);
    println!("equality_check: {}", fmt(report.equality_check));
    let passed = report.bound_satisfied && report.equality_passed;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn lower(args: TransferArgs) -> Result<ExitCode, Error> {
    let net = load_network(&args.input)?;
    let cnn = match net {
        Network::Cnn(cnn) => cnn,
        Network::Fnn(_) => {
            return Err(Error::InvalidParameter(
                "lower expects a convolutional network (use `transpile` for the other direction)".into(),
            ))
        }
    };
    let (fnn, report) = cnn_to_fnn(&cnn, &check_config(&args))?;
    if let Some(out) = &args.out {
        store_network(&Network::Fnn(fnn), out)?;
    }
    if let Some(path) = &args.report {
        format::store_report(&report, path)?;
    }
    println!("direction: cnn_to_fnn");
    println!("source_weights: {}", report.source_weights);
    println!("target_weights: {}", report.target_weights);
    println!("bound_factor: {}", report.bound_factor);
    println!("bound_satisfied: {}", report.bound_satisfied);
    println!("equality_check: {}", fmt(report.equality_check));
    let passed = report.bound_satisfied && report.equality_passed;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn roundtrip(args: TransferArgs) -> Result<ExitCode, Error> {
    let net = load_network(&args.input)?;
    let fnn = match net {
        Network::Fnn(fnn) => fnn,
        Network::Cnn(_) => {
            return Err(Error::InvalidParameter(
                "roundtrip expects a fully-connected network".into(),
            ))
        }
    };
    let config = check_config(&args);
    let mut rng = gconvnet::rng::seeded(config.seed);
    let inputs: Vec<_> = (0..config.samples)
        .map(|_| gconvnet::rng::normal_signal(fnn.group(), fnn.input_channels(), &mut rng))
        .collect();
    let report = roundtrip_check(&fnn, fnn.output_dim(), &inputs, &config)?;
    if let Some(path) = &args.report {
        format::store_report(&report, path)?;
    }
    println!("max_deviation: {}", fmt(report.max_deviation));
    println!("chained_bound_factor: {}", report.chained_bound_factor);
    println!("chained_bound_satisfied: {}", report.chained_bound_satisfied);
    let passed = report.deviation_passed
        && report.chained_bound_satisfied
        && report.transpile.bound_satisfied
        && report.transpile.equality_passed
        && report.lower.bound_satisfied
        && report.lower.equality_passed;
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn eval(input: &Path, x: &Path, out: Option<&Path>) -> Result<ExitCode, Error> {
    let net = load_network(input)?;
    let signal = format::load_signal(x, net.group())?;
    let document = match &net {
        Network::Fnn(fnn) => {
            let y = fnn.realize(&signal)?;
            serde_json::json!({ "values": y })
        }
        Network::Cnn(cnn) => {
            let y = cnn.realize(&signal)?;
            serde_json::json!({ "channels": y.channels(), "values": y.values() })
        }
    };
    let mut text =
        serde_json::to_string_pretty(&document).map_err(|e| Error::Parse(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Views any network as a map with a group-indexed codomain; fully-connected
/// outputs must split as channels × |G|.
fn as_channel_map(net: &Network) -> Result<Box<dyn ChannelMap + '_>, Error> {
    match net {
        Network::Cnn(cnn) => Ok(Box::new(cnn.clone())),
        Network::Fnn(fnn) => {
            let order = fnn.group().order();
            if fnn.output_dim() % order != 0 {
                return Err(Error::InvalidStructure(format!(
                    "output dimension {} does not split over a group of order {}; equivariance is undefined",
                    fnn.output_dim(),
                    order
                )));
            }
            Ok(Box::new(fnn.as_channel_map(fnn.output_dim() / order)?))
        }
    }
}

fn verify_equivariance(
    input: &Path,
    samples: usize,
    seed: u64,
    tolerance: f64,
) -> Result<ExitCode, Error> {
    let net = load_network(input)?;
    let map = as_channel_map(&net)?;
    let sample_set = SampleSet::random_normal(net.group(), map.in_channels(), samples, seed);
    let verdict = check_equivariance(map.as_ref(), &sample_set, tolerance)?;
    println!("passed: {}", verdict.passed);
    println!("max_deviation: {}", fmt(verdict.max_deviation));
    println!("tested_shifts: {}", verdict.tested_shifts);
    println!("samples: {samples}");
    println!("seed: {seed}");
    println!("tolerance: {}", fmt(verdict.tolerance));
    if let Some(witness) = &verdict.witness {
        println!(
            "witness: shift {} on sample {} deviates by {}",
            witness.shift,
            witness.sample_index,
            fmt(witness.deviation)
        );
    }
    Ok(if verdict.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn parse_p(text: &str) -> Result<f64, Error> {
    if text == "inf" {
        return Ok(f64::INFINITY);
    }
    let p: f64 = text
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("cannot parse p from {text:?}")))?;
    if p.is_nan() || p <= 0.0 {
        return Err(Error::InvalidParameter("p must be positive".into()));
    }
    Ok(p)
}

fn compare(
    a: &Path,
    b: &Path,
    p_text: &str,
    samples: usize,
    seed: u64,
    symmetrize: bool,
) -> Result<ExitCode, Error> {
    let p = parse_p(p_text)?;
    let net_a = load_network(a)?;
    let net_b = load_network(b)?;
    let map_a = as_channel_map(&net_a)?;
    let map_b = as_channel_map(&net_b)?;
    let mut sample_set =
        SampleSet::random_normal(net_a.group(), map_a.in_channels(), samples, seed);
    if symmetrize {
        sample_set = sample_set.symmetrize();
    }
    let distance = empirical_lp_distance(map_a.as_ref(), map_b.as_ref(), &sample_set, p)?;
    println!("p: {p_text}");
    println!("samples: {}", sample_set.len());
    println!("seed: {seed}");
    println!("symmetrized: {}", sample_set.is_symmetrized());
    println!("distance: {}", fmt(distance));
    Ok(ExitCode::SUCCESS)
}

fn group_check(argument: &str) -> Result<ExitCode, Error> {
    // Accept inline JSON first, then a path to a descriptor file.
    let descriptor: GroupDescriptor = match format::group_descriptor_from_str(argument) {
        Ok(d) => d,
        Err(inline_err) => {
            let path = Path::new(argument);
            if path.exists() {
                format::load_group_descriptor(path)?
            } else {
                return Err(inline_err);
            }
        }
    };
    match &descriptor {
        GroupDescriptor::Table { table } => {
            let validation = validate_table(table);
            if validation.is_ok() {
                println!("ok: table group of order {}", table.len());
                Ok(ExitCode::SUCCESS)
            } else {
                for violation in &validation.violations {
                    println!("violation: {violation}");
                }
                Ok(ExitCode::from(2))
            }
        }
        _ => {
            let group = FiniteGroup::from_descriptor(&descriptor)?;
            // Constructions are groups by construction; re-check anyway.
            let validation = group.validate();
            if validation.is_ok() {
                println!("ok: group of order {}", group.order());
                Ok(ExitCode::SUCCESS)
            } else {
                for violation in &validation.violations {
                    println!("violation: {violation}");
                }
                Ok(ExitCode::from(2))
            }
        }
    }
}

fn stats(input: &Path) -> Result<ExitCode, Error> {
    let net = load_network(input)?;
    match &net {
        Network::Fnn(fnn) => {
            println!("kind: fnn");
            println!("group_order: {}", fnn.group().order());
            println!("architecture: {:?}", fnn.architecture());
            println!("weights: {}", fnn.weight_count());
            println!("neurons: {}", fnn.neuron_count());
        }
        Network::Cnn(cnn) => {
            println!("kind: cnn");
            println!("group_order: {}", cnn.group().order());
            println!("channel_counts: {:?}", cnn.channel_counts());
            println!("filter_counts: {:?}", cnn.filter_counts());
            println!("conv_weights: {}", cnn.weight_count());
            println!("channels_total: {}", cnn.channel_total());
            let as_fnn = cnn.as_fnn();
            println!("fnn_architecture: {:?}", as_fnn.architecture());
            println!("fnn_weights: {}", as_fnn.weight_count());
            println!("fnn_neurons: {}", as_fnn.neuron_count());
        }
    }
    Ok(ExitCode::SUCCESS)
}
