//! Benchmark harness: runs audit algorithms over synthetic rulesets and
//! emits one CSV row per cell.

use std::io;

use serde::{Deserialize, Serialize};

use crate::audit::{Algorithm, AuditReport, WarningKind};
use crate::error::Result;
use crate::interval::DomainSpec;
use crate::synth::{generate, worst_case_family, GeneratorProfile, ProfileName};

pub const CSV_HEADER: &str =
    "algorithm,profile,n,p,seed,elapsed_ms,out_rules,out_boxes,shadowing_warnings,redundancy_warnings";

/// Profile label used for rows of the worst-case family.
pub const WORST_CASE_PROFILE: &str = "worst_case";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub algorithm: String,
    pub profile: String,
    pub n: usize,
    pub p: usize,
    pub seed: u64,
    pub elapsed_ms: f64,
    pub out_rules: usize,
    pub out_boxes: usize,
    pub shadowing_warnings: usize,
    pub redundancy_warnings: usize,
}

impl BenchRecord {
    fn from_report(profile: &str, seed: u64, p: usize, report: &AuditReport) -> Self {
        Self {
            algorithm: report.algorithm.as_str().to_string(),
            profile: profile.to_string(),
            n: report.stats.input_rules,
            p,
            seed,
            elapsed_ms: report.stats.elapsed_ms,
            out_rules: report.stats.output_rules,
            out_boxes: report.stats.output_boxes,
            shadowing_warnings: report.count(WarningKind::Shadowing),
            redundancy_warnings: report.count(WarningKind::Redundancy),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub algorithms: Vec<Algorithm>,
    pub profiles: Vec<ProfileName>,
    pub sizes: Vec<usize>,
    /// Seeds `0..seeds` are run for every cell.
    pub seeds: u64,
    pub domain: DomainSpec,
    /// `(n, p)` pairs of the worst-case family, audited with detection.
    pub worst_case: Vec<(usize, usize)>,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::Detection, Algorithm::CompleteDetection],
            profiles: ProfileName::ALL.to_vec(),
            sizes: vec![50, 100, 200],
            seeds: 5,
            domain: DomainSpec::ipv4_five_tuple(),
            worst_case: Vec::new(),
        }
    }
}

/// Runs every (algorithm, profile, n, seed) cell in that nesting order,
/// then the worst-case rows. Timing covers the audit only.
pub fn run(plan: &BenchPlan) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::new();
    let p = plan.domain.arity();
    for &algorithm in &plan.algorithms {
        for &profile in &plan.profiles {
            for &n in &plan.sizes {
                for seed in 0..plan.seeds {
                    let ruleset = generate(&GeneratorProfile::new(profile, seed), n, &plan.domain)?;
                    let report = algorithm.run(&ruleset);
                    records.push(BenchRecord::from_report(profile.as_str(), seed, p, &report));
                }
            }
        }
    }
    records.extend(worst_case_records(&plan.worst_case)?);
    Ok(records)
}

pub fn worst_case_records(cases: &[(usize, usize)]) -> Result<Vec<BenchRecord>> {
    cases
        .iter()
        .map(|&(n, p)| {
            let report = Algorithm::Detection.run(&worst_case_family(n, p)?);
            Ok(BenchRecord::from_report(WORST_CASE_PROFILE, 0, p, &report))
        })
        .collect()
}

pub fn write_csv<W: io::Write>(records: &[BenchRecord], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER.split(','))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: io::Read>(input: R) -> csv::Result<Vec<BenchRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

/// Median of the elapsed times (upper median for even counts).
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[values.len() / 2])
}
