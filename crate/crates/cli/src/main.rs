//! `fwaudit`: audit, rewrite, check, generate and benchmark firewall rulesets.
//!
//! Exit status: 0 clean, 1 findings (warnings or non-equivalence), 2 usage,
//! parse or domain errors. A path of `-` means standard input or output.

use std::fmt;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fwaudit::bench::{self, BenchPlan};
use fwaudit::io::{
    digest, emit_report, exit_hint, parse_domain, parse_ruleset_in, serialize_ruleset, ReportFormat,
};
use fwaudit::synth::{generate, GeneratorProfile, ProfileName};
use fwaudit::{
    complete_detection, rewrite, sample_equivalent, Algorithm, Decision, DomainSpec, Equivalence,
    Oracle, RewriteMode, Ruleset,
};
use serde::Deserialize;

const EXIT_CLEAN: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(
    name = "fwaudit",
    version,
    about = "Shadowing and redundancy audit for firewall rulesets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Audit a rule file and report shadowed and redundant rules.
    Audit {
        /// Rule file, or `-` for standard input.
        input: PathBuf,
        /// `detection` (shadowing only) or `complete` (shadowing and redundancy).
        #[arg(long, default_value = "complete")]
        algorithm: String,
        /// `json` or `text`.
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
        /// Domain used when the file has no `@domain` header.
        #[arg(long)]
        domain: Option<String>,
    },
    /// Audit, then keep only the rules that differ from a default policy.
    Rewrite {
        input: PathBuf,
        /// `positive` (default deny, keep accepts) or `negative` (default accept, keep denies).
        #[arg(long, default_value = "positive")]
        mode: String,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
        #[arg(long)]
        domain: Option<String>,
    },
    /// Check that two rule files decide every packet the same way.
    Check {
        original: PathBuf,
        transformed: PathBuf,
        /// Enumerate every packet of the domain (the default).
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        /// Compare on this many uniformly sampled packets instead.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Resolve unmatched packets with this decision on both sides.
        #[arg(long)]
        default: Option<String>,
        #[arg(long)]
        domain: Option<String>,
    },
    /// Generate a synthetic rule file.
    Gen {
        /// `beginner`, `intermediate` or `expert`.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Attribute bounds, e.g. `s=[0,63] d=[0,63]`; defaults to the IPv4 5-tuple.
        #[arg(long)]
        domain: Option<String>,
        /// Override the profile's overlap probability.
        #[arg(long)]
        overlap: Option<f64>,
        /// Probability that a rule accepts.
        #[arg(long)]
        bias: Option<f64>,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
    },
    /// Run the benchmark grid and write a CSV.
    Bench {
        /// TOML file with `algorithms`, `profiles`, `sizes`, `seeds`, `domain`, `worst_case`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated algorithms (overrides the config).
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        profiles: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, short, default_value = "-")]
        output: PathBuf,
    },
}

/// A failure that maps to the usage/parse exit status.
#[derive(Debug)]
struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<fwaudit::Error> for Failure {
    fn from(e: fwaudit::Error) -> Self {
        Failure(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn read_input(path: &Path) -> CliResult<String> {
    if path == Path::new("-") {
        let mut text = String::new();
        io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| Failure(format!("stdin: {e}")))?;
        Ok(text)
    } else {
        fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
    }
}

fn write_output(path: &Path, content: &[u8]) -> CliResult<()> {
    let result = if path == Path::new("-") {
        let mut out = io::stdout().lock();
        out.write_all(content).and_then(|_| out.flush())
    } else {
        fs::write(path, content)
    };
    result.map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn domain_or_default(spec: Option<&str>) -> CliResult<DomainSpec> {
    match spec {
        Some(s) => Ok(parse_domain(s)?),
        None => Ok(DomainSpec::ipv4_five_tuple()),
    }
}

fn load(path: &Path, domain: &DomainSpec) -> CliResult<(Ruleset, String)> {
    let text = read_input(path)?;
    let ruleset =
        parse_ruleset_in(&text, domain).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    Ok((ruleset, digest(text.as_bytes())))
}

fn parse_profile(name: &str) -> CliResult<ProfileName> {
    Ok(name.parse()?)
}

fn parse_algorithm(name: &str) -> CliResult<Algorithm> {
    Ok(name.parse()?)
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Audit {
            input,
            algorithm,
            format,
            output,
            domain,
        } => {
            let algorithm = parse_algorithm(&algorithm)?;
            let format: ReportFormat = format.parse()?;
            let domain = domain_or_default(domain.as_deref())?;
            let (ruleset, input_digest) = load(&input, &domain)?;
            let report = algorithm.run(&ruleset);
            let rendered = emit_report(&report, format, Some(&input_digest));
            write_output(&output, rendered.as_bytes())?;
            Ok(exit_hint(&report))
        }
        Command::Rewrite {
            input,
            mode,
            output,
            domain,
        } => {
            let mode: RewriteMode = mode.parse()?;
            let domain = domain_or_default(domain.as_deref())?;
            let (ruleset, _) = load(&input, &domain)?;
            let audited = complete_detection(&ruleset).transformed;
            let rewritten = rewrite(&audited, mode)?;
            write_output(&output, serialize_ruleset(&rewritten).as_bytes())?;
            Ok(EXIT_CLEAN)
        }
        Command::Check {
            original,
            transformed,
            exhaustive: _,
            samples,
            seed,
            default,
            domain,
        } => {
            let domain = domain_or_default(domain.as_deref())?;
            let (left, _) = load(&original, &domain)?;
            let (right, _) = load(&transformed, &domain)?;
            if left.domain() != right.domain() {
                return Err(Failure(format!(
                    "{} and {} declare different domains",
                    original.display(),
                    transformed.display()
                )));
            }
            let default: Option<Decision> = default.as_deref().map(str::parse).transpose()?;
            let verdict = match (samples, default) {
                (Some(n), None) => sample_equivalent(&left, &right, n, seed)?,
                (Some(_), Some(_)) => {
                    return Err(Failure("--default requires exhaustive checking".into()))
                }
                (None, None) => Oracle::default().equivalent(&left, &right)?,
                (None, Some(d)) => Oracle::default().equivalent_under(&left, &right, d)?,
            };
            match verdict {
                Equivalence::Equivalent => {
                    let how = match samples {
                        Some(n) => format!("on {n} sampled packets (seed {seed})"),
                        None => format!("on all {} packets", left.domain().packet_count()),
                    };
                    println!("equivalent {how}");
                    Ok(EXIT_CLEAN)
                }
                Equivalence::Differs {
                    packet,
                    left: l,
                    right: r,
                } => {
                    println!(
                        "not equivalent: packet {packet} gives {l} in {} but {r} in {}",
                        original.display(),
                        transformed.display()
                    );
                    Ok(EXIT_FINDINGS)
                }
            }
        }
        Command::Gen {
            profile,
            count,
            seed,
            domain,
            overlap,
            bias,
            output,
        } => {
            let name = parse_profile(&profile)?;
            let domain = domain_or_default(domain.as_deref())?;
            let mut profile = GeneratorProfile::new(name, seed);
            if let Some(p) = overlap {
                profile = profile.with_overlap(p)?;
            }
            if let Some(b) = bias {
                profile = profile.with_decision_bias(b)?;
            }
            let ruleset = generate(&profile, count, &domain)?;
            write_output(&output, serialize_ruleset(&ruleset).as_bytes())?;
            Ok(EXIT_CLEAN)
        }
        Command::Bench {
            config,
            algorithms,
            profiles,
            sizes,
            seeds,
            output,
        } => {
            let mut plan = match config {
                Some(path) => BenchConfig::load(&path)?.into_plan()?,
                None => BenchPlan::default(),
            };
            if let Some(list) = algorithms {
                plan.algorithms = list
                    .iter()
                    .map(|a| parse_algorithm(a))
                    .collect::<CliResult<_>>()?;
            }
            if let Some(list) = profiles {
                plan.profiles = list
                    .iter()
                    .map(|p| parse_profile(p))
                    .collect::<CliResult<_>>()?;
            }
            if let Some(list) = sizes {
                plan.sizes = list;
            }
            if let Some(n) = seeds {
                plan.seeds = n;
            }
            let records = bench::run(&plan)?;
            let mut csv = Vec::new();
            bench::write_csv(&records, &mut csv).map_err(|e| Failure(format!("csv: {e}")))?;
            write_output(&output, &csv)?;
            Ok(EXIT_CLEAN)
        }
    }
}

/// The `bench --config` file; absent keys keep the built-in plan's values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BenchConfig {
    algorithms: Option<Vec<String>>,
    profiles: Option<Vec<String>>,
    sizes: Option<Vec<usize>>,
    seeds: Option<u64>,
    domain: Option<String>,
    worst_case: Option<Vec<(usize, usize)>>,
}

impl BenchConfig {
    fn load(path: &Path) -> CliResult<Self> {
        let text = read_input(path)?;
        toml::from_str(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
    }

    fn into_plan(self) -> CliResult<BenchPlan> {
        let mut plan = BenchPlan::default();
        if let Some(list) = self.algorithms {
            plan.algorithms = list
                .iter()
                .map(|a| parse_algorithm(a))
                .collect::<CliResult<_>>()?;
        }
        if let Some(list) = self.profiles {
            plan.profiles = list
                .iter()
                .map(|p| parse_profile(p))
                .collect::<CliResult<_>>()?;
        }
        if let Some(sizes) = self.sizes {
            plan.sizes = sizes;
        }
        if let Some(seeds) = self.seeds {
            plan.seeds = seeds;
        }
        if let Some(domain) = self.domain {
            plan.domain = parse_domain(&domain)?;
        }
        if let Some(cases) = self.worst_case {
            plan.worst_case = cases;
        }
        Ok(plan)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_CLEAN
            });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("fwaudit: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
