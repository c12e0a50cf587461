#![allow(dead_code)]

use std::path::PathBuf;

use fwaudit::io::parse_ruleset;
use fwaudit::{Decision, DomainSpec, Interval, Region, Rule, Ruleset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn fixture(name: &str) -> Ruleset {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    parse_ruleset(&text).expect("fixture parses")
}

pub fn table1() -> Ruleset {
    fixture("table1.rules")
}

pub fn iv(lo: i64, hi: i64) -> Interval {
    Interval::new(lo, hi).unwrap()
}

pub fn region(bounds: &[(i64, i64)]) -> Region {
    Region::new(bounds.iter().map(|&(lo, hi)| iv(lo, hi)).collect())
}

/// A box of the five-attribute fixture domain with only source and
/// destination constrained.
pub fn sd(s: (i64, i64), d: (i64, i64)) -> Region {
    region(&[(0, 0), s, (0, 0), d, (0, 0)])
}

pub fn random_interval(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Interval {
    let a = rng.gen_range(lo..=hi);
    let b = rng.gen_range(lo..=hi);
    iv(a.min(b), a.max(b))
}

/// `n ∈ 1..=12` single-box rules on `[0,63]²` with uniform endpoints and
/// decisions.
pub fn random_small_ruleset(seed: u64) -> Ruleset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = DomainSpec::from_bounds(&[("s", 0, 63), ("d", 0, 63)]).unwrap();
    let n = rng.gen_range(1..=12);
    let rules = (1..=n)
        .map(|pos| {
            let r = Region::new(vec![
                random_interval(&mut rng, 0, 63),
                random_interval(&mut rng, 0, 63),
            ]);
            let d = if rng.gen_bool(0.5) {
                Decision::Accept
            } else {
                Decision::Deny
            };
            Rule::new(pos, r, d)
        })
        .collect();
    Ruleset::new(domain, rules).unwrap()
}
