//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use fwaudit::bench::{self, BenchPlan, WORST_CASE_PROFILE};
use fwaudit::oracle::Oracle;
use fwaudit::synth::{growth_bound, worst_case_family, ProfileName};
use fwaudit::{
    complete_detection, detection, rewrite, Algorithm, Decision, DomainSpec, RewriteMode, Rule,
    Ruleset, Warning, WarningKind,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<(), String> {
    let took = started.elapsed();
    ensure(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn conditions(rs: &Ruleset) -> Vec<(usize, Vec<fwaudit::Region>, Decision)> {
    rs.rules()
        .iter()
        .map(|r| (r.position(), r.condition().regions().to_vec(), r.decision()))
        .collect()
}

fn warn(rule: usize, kind: WarningKind) -> Warning {
    Warning { rule, kind }
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let report = detection(&table1());
    within(Duration::from_secs(1), started)?;
    let expected = vec![
        (1, vec![sd((1, 30), (20, 45))], Decision::Deny),
        (2, vec![sd((31, 60), (25, 35))], Decision::Accept),
        (
            3,
            vec![
                sd((61, 70), (20, 45)),
                sd((40, 60), (20, 24)),
                sd((40, 60), (36, 45)),
            ],
            Decision::Accept,
        ),
        (
            5,
            vec![sd((31, 39), (20, 24)), sd((31, 39), (36, 40))],
            Decision::Accept,
        ),
    ];
    let got = conditions(&report.transformed);
    ensure(got == expected, || format!("rules differ: {got:?}"))?;
    ensure(
        report.warnings == vec![warn(4, WarningKind::Shadowing)],
        || format!("warnings {:?}", report.warnings),
    )?;
    Ok(format!("exact match in {:.3} ms", report.stats.elapsed_ms))
}

fn criterion_2() -> Outcome {
    let started = Instant::now();
    let report = complete_detection(&table1());
    within(Duration::from_secs(1), started)?;
    let expected = vec![
        (1, vec![sd((1, 30), (20, 45))], Decision::Deny),
        (3, vec![sd((40, 70), (20, 45))], Decision::Accept),
        (5, vec![sd((31, 39), (20, 40))], Decision::Accept),
    ];
    let got = conditions(&report.transformed);
    ensure(got == expected, || format!("rules differ: {got:?}"))?;
    let warnings = vec![
        warn(2, WarningKind::Redundancy),
        warn(4, WarningKind::Shadowing),
    ];
    ensure(report.warnings == warnings, || {
        format!("warnings {:?}", report.warnings)
    })?;
    Ok(format!("exact match in {:.3} ms", report.stats.elapsed_ms))
}

fn criterion_3() -> Outcome {
    let oracle = Oracle::default();
    let redundant = fixture("redundant3.rules");
    let report = complete_detection(&redundant);
    ensure(
        report.warnings == vec![warn(2, WarningKind::Redundancy)],
        || format!("redundancy case warnings {:?}", report.warnings),
    )?;
    let found = oracle
        .find_redundant(&redundant)
        .map_err(|e| e.to_string())?;
    ensure(found == BTreeSet::from([2]), || {
        format!("oracle redundant {found:?}")
    })?;

    let shadowed = fixture("shadowed3.rules");
    let report = complete_detection(&shadowed);
    ensure(
        report.warnings == vec![warn(3, WarningKind::Shadowing)],
        || format!("shadowing case warnings {:?}", report.warnings),
    )?;
    let found = oracle.find_shadowed(&shadowed).map_err(|e| e.to_string())?;
    ensure(found == BTreeSet::from([3]), || {
        format!("oracle shadowed {found:?}")
    })?;
    Ok("R2 redundancy and R3 shadowing flagged, oracle agrees".into())
}

const SUITE_SIZE: u64 = 200;

fn criterion_4() -> Outcome {
    let oracle = Oracle::default();
    let started = Instant::now();
    let mut violations = Vec::new();
    for seed in 0..SUITE_SIZE {
        let input = random_small_ruleset(seed);
        let out = complete_detection(&input).transformed;
        if !oracle.equivalent(&input, &out).unwrap().holds() {
            violations.push(format!("seed {seed}: not equivalent"));
        }
        if !out.is_disjoint() {
            violations.push(format!("seed {seed}: not disjoint"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut order: Vec<usize> = (0..out.len()).collect();
        let renumbered = out.permuted(&order).unwrap();
        for _ in 0..20 {
            order.shuffle(&mut rng);
            let permuted = out.permuted(&order).unwrap();
            if !oracle.equivalent(&renumbered, &permuted).unwrap().holds() {
                violations.push(format!("seed {seed}: order matters for {order:?}"));
                break;
            }
        }
        let shadowed = oracle.find_shadowed(&out).unwrap();
        let redundant = oracle.find_redundant(&out).unwrap();
        if !shadowed.is_empty() || !redundant.is_empty() {
            violations.push(format!(
                "seed {seed}: output has shadowed {shadowed:?} redundant {redundant:?}"
            ));
        }
    }
    within(Duration::from_secs(60), started)?;
    ensure(violations.is_empty(), || {
        format!("{} violations: {:?}", violations.len(), violations)
    })?;
    Ok(format!(
        "{SUITE_SIZE} rulesets, 0 violations in {:.2} s",
        started.elapsed().as_secs_f64()
    ))
}

fn criterion_5() -> Outcome {
    let oracle = Oracle::default();
    let mut mismatches = Vec::new();
    let (mut audit_only, mut oracle_only) = (0, 0);
    for seed in 0..SUITE_SIZE {
        let input = random_small_ruleset(seed);
        let report = complete_detection(&input);
        let got: BTreeSet<Warning> = report.warnings.iter().copied().collect();
        let mut want = BTreeSet::new();
        for rule in oracle.find_shadowed(&input).unwrap() {
            want.insert(warn(rule, WarningKind::Shadowing));
        }
        for rule in oracle.find_redundant(&input).unwrap() {
            want.insert(warn(rule, WarningKind::Redundancy));
        }
        if got != want {
            audit_only += got.difference(&want).count();
            oracle_only += want.difference(&got).count();
            mismatches.push(format!(
                "seed {seed}: audit-only {:?} oracle-only {:?}",
                got.difference(&want).collect::<Vec<_>>(),
                want.difference(&got).collect::<Vec<_>>()
            ));
        }
    }
    ensure(mismatches.is_empty(), || {
        format!(
            "{} of {SUITE_SIZE} rulesets mismatch ({audit_only} audit-only warnings, \
             {oracle_only} oracle-only findings); first: {}",
            mismatches.len(),
            mismatches[0]
        )
    })?;
    Ok(format!("{SUITE_SIZE} rulesets, 0 mismatches"))
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let p = 2;
    for pair in 0..1000 {
        let b = fwaudit::Region::new(vec![
            random_interval(&mut rng, 0, 31),
            random_interval(&mut rng, 0, 31),
        ]);
        let a = fwaudit::Region::new(vec![
            random_interval(&mut rng, 0, 31),
            random_interval(&mut rng, 0, 31),
        ]);
        let pieces = b.subtract(&a).map_err(|e| e.to_string())?;
        ensure(pieces.len() <= 2 * p, || {
            format!("pair {pair}: {} pieces", pieces.len())
        })?;
        for x in 0..=31 {
            for y in 0..=31 {
                let pt = [x, y];
                let hits = pieces.iter().filter(|r| r.contains(&pt)).count();
                let expected = b.contains(&pt) && !a.contains(&pt);
                ensure(hits <= 1, || {
                    format!("pair {pair}: ({x},{y}) in {hits} pieces")
                })?;
                ensure((hits == 1) == expected, || {
                    format!("pair {pair}: ({x},{y}) misclassified")
                })?;
            }
        }
    }
    Ok("1000 pairs × 1024 points classified correctly, |result| ≤ 2p".into())
}

fn criterion_7() -> Outcome {
    let started = Instant::now();
    let cases = [(2, 2), (3, 2), (4, 2), (3, 3)];
    let records = bench::worst_case_records(&cases).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    bench::write_csv(&records, &mut csv).map_err(|e| e.to_string())?;
    let reread = bench::read_csv(csv.as_slice()).map_err(|e| e.to_string())?;
    ensure(reread == records, || "CSV did not round-trip".into())?;

    let mut measured = Vec::new();
    for (&(n, p), rec) in cases.iter().zip(&reread) {
        ensure(
            rec.profile == WORST_CASE_PROFILE && rec.n == n && rec.p == p,
            || format!("unexpected record {rec:?}"),
        )?;
        let direct = detection(&worst_case_family(n, p).unwrap())
            .stats
            .output_boxes;
        ensure(direct == rec.out_boxes, || {
            "CSV value differs from run".into()
        })?;
        let bound = growth_bound(n, p);
        ensure(rec.out_boxes as u128 <= bound, || {
            format!("(n={n},p={p}) measured {} > bound {bound}", rec.out_boxes)
        })?;
        measured.push(format!("({n},{p})={}≤{bound}", rec.out_boxes));
    }
    ensure(reread[0].out_boxes == 3, || {
        format!("(2,2) gave {} boxes, expected 3", reread[0].out_boxes)
    })?;
    within(Duration::from_secs(5), started)?;
    Ok(format!("measured {}", measured.join(" ")))
}

fn criterion_8() -> Outcome {
    let oracle = Oracle::default();
    let original = table1();
    let audited = complete_detection(&original).transformed;
    for (mode, kept) in [
        (RewriteMode::Positive, [3usize, 5].as_slice()),
        (RewriteMode::Negative, [1usize].as_slice()),
    ] {
        let rewritten = rewrite(&audited, mode).map_err(|e| e.to_string())?;
        let positions: Vec<usize> = rewritten.rules().iter().map(Rule::position).collect();
        ensure(positions == kept, || format!("{mode:?} kept {positions:?}"))?;
        let verdict = oracle
            .equivalent_under(&original, &rewritten, mode.default_decision())
            .map_err(|e| e.to_string())?;
        ensure(verdict.holds(), || format!("{mode:?}: {verdict:?}"))?;
    }
    Ok("positive ≡ original under default-deny, negative ≡ original under default-accept".into())
}

fn criterion_9() -> Outcome {
    let started = Instant::now();
    let plan = BenchPlan {
        algorithms: vec![Algorithm::Detection, Algorithm::CompleteDetection],
        profiles: vec![ProfileName::Expert],
        sizes: vec![1000],
        seeds: 1,
        domain: DomainSpec::ipv4_five_tuple(),
        worst_case: vec![],
    };
    let records = bench::run(&plan).map_err(|e| e.to_string())?;
    within(Duration::from_secs(300), started)?;
    let mut csv = Vec::new();
    bench::write_csv(&records, &mut csv).map_err(|e| e.to_string())?;
    let text = String::from_utf8(csv).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    ensure(lines.next() == Some(bench::CSV_HEADER), || {
        "bad CSV header".into()
    })?;
    ensure(lines.clone().count() == 2, || {
        "expected two data rows".into()
    })?;
    ensure(lines.all(|l| l.split(',').count() == 10), || {
        "ragged CSV row".into()
    })?;
    let times: Vec<String> = records
        .iter()
        .map(|r| {
            format!(
                "{} {:.0} ms / {} boxes",
                r.algorithm, r.elapsed_ms, r.out_boxes
            )
        })
        .collect();
    Ok(format!("expert n=1000: {}", times.join(", ")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("golden trace, detection", criterion_1),
        ("golden trace, complete detection", criterion_2),
        ("related-work counterexamples", criterion_3),
        ("theorem suite", criterion_4),
        ("warning exactness", criterion_5),
        ("exclusion algebra", criterion_6),
        ("growth accounting", criterion_7),
        ("rewriting soundness", criterion_8),
        ("scalability smoke", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
