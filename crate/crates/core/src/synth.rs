//! Synthetic rulesets.
//!
//! [`generate`] draws rulesets for the beginner/intermediate/expert officer
//! profiles, which differ in how often a new rule overlaps an earlier one.
//! [`worst_case_family`] builds nested corner-anchored boxes that make every
//! exclusion step split.
//!
//! Generation scheme: the widest attribute is cut into `n` slots. A fresh
//! rule takes the next unused slot, so fresh rules never meet any earlier
//! rule. With probability `overlap_probability` a rule is instead derived
//! from a uniformly chosen earlier rule: it stays in the parent's slot and
//! every attribute is either copied or re-drawn around a point of the
//! parent's interval, so the two boxes always intersect.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::Ruleset;
use crate::error::{Error, Result};
use crate::exclusion::{Decision, Rule};
use crate::interval::{DomainSpec, Interval, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Beginner,
    Intermediate,
    Expert,
}

impl ProfileName {
    pub const ALL: [ProfileName; 3] = [
        ProfileName::Beginner,
        ProfileName::Intermediate,
        ProfileName::Expert,
    ];

    pub fn default_overlap(&self) -> f64 {
        match self {
            ProfileName::Beginner => 0.05,
            ProfileName::Intermediate => 0.475,
            ProfileName::Expert => 0.90,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileName::Beginner => "beginner",
            ProfileName::Intermediate => "intermediate",
            ProfileName::Expert => "expert",
        }
    }
}

impl fmt::Display for ProfileName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beginner" => Ok(ProfileName::Beginner),
            "intermediate" => Ok(ProfileName::Intermediate),
            "expert" => Ok(ProfileName::Expert),
            other => Err(Error::Validation(format!(
                "unknown profile {other:?} (expected beginner, intermediate or expert)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorProfile {
    pub name: ProfileName,
    pub overlap_probability: f64,
    /// Probability that a rule accepts.
    pub decision_bias: f64,
    pub seed: u64,
}

impl GeneratorProfile {
    pub fn new(name: ProfileName, seed: u64) -> Self {
        Self {
            name,
            overlap_probability: name.default_overlap(),
            decision_bias: 0.5,
            seed,
        }
    }

    pub fn with_overlap(mut self, probability: f64) -> Result<Self> {
        check_fraction("overlap probability", probability)?;
        self.overlap_probability = probability;
        Ok(self)
    }

    pub fn with_decision_bias(mut self, bias: f64) -> Result<Self> {
        check_fraction("decision bias", bias)?;
        self.decision_bias = bias;
        Ok(self)
    }
}

fn check_fraction(what: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::Validation(format!("{what} {v} is outside [0, 1]")));
    }
    Ok(())
}

fn random_subrange(rng: &mut ChaCha8Rng, bounds: Interval, max_len: u128) -> Interval {
    let span = bounds.len();
    let len = rng.gen_range(1..=max_len.clamp(1, span)) as i64;
    let lo = rng.gen_range(bounds.lo()..=bounds.hi() - (len - 1));
    Interval::new(lo, lo + len - 1).expect("ordered")
}

/// Interval around a random point of `parent`, clamped to `bounds`.
fn around(rng: &mut ChaCha8Rng, parent: Interval, bounds: Interval) -> Interval {
    let x = rng.gen_range(parent.lo()..=parent.hi());
    let reach = (parent.len() / 2).min(i64::MAX as u128) as i64;
    let below = rng.gen_range(0..=reach);
    let above = rng.gen_range(0..=reach);
    let lo = x.saturating_sub(below).max(bounds.lo());
    let hi = x.saturating_add(above).min(bounds.hi());
    Interval::new(lo, hi).expect("contains x")
}

/// Deterministic synthetic ruleset of `n` rules for the given profile.
pub fn generate(profile: &GeneratorProfile, n: usize, domain: &DomainSpec) -> Result<Ruleset> {
    if n == 0 {
        return Err(Error::Validation("rule count must be at least 1".into()));
    }
    check_fraction("overlap probability", profile.overlap_probability)?;
    check_fraction("decision bias", profile.decision_bias)?;

    let mut rng = ChaCha8Rng::seed_from_u64(profile.seed);
    let bounds: Vec<Interval> = domain.attributes().iter().map(|a| a.bounds()).collect();
    let slot_attr = (0..bounds.len())
        .max_by_key(|&k| (bounds[k].len(), std::cmp::Reverse(k)))
        .expect("domain has attributes");
    let slot_span = bounds[slot_attr].len();
    let slots = (n as u128).min(slot_span);
    let slot_width = slot_span / slots;
    let slot_bounds = |s: u128| {
        let lo = bounds[slot_attr].lo() + (s * slot_width) as i64;
        let hi = if s + 1 == slots {
            bounds[slot_attr].hi()
        } else {
            lo + slot_width as i64 - 1
        };
        Interval::new(lo, hi).expect("slot")
    };

    let mut regions: Vec<Region> = Vec::with_capacity(n);
    let mut rule_slot: Vec<u128> = Vec::with_capacity(n);
    let mut fresh_used = 0u128;
    let mut rules = Vec::with_capacity(n);

    for position in 1..=n {
        let derive = !regions.is_empty() && rng.gen_bool(profile.overlap_probability);
        let (region, slot) = if derive {
            let parent = rng.gen_range(0..regions.len());
            let slot = rule_slot[parent];
            let pr: &Region = &regions[parent];
            let intervals = (0..bounds.len())
                .map(|k| {
                    let iv = pr.interval(k);
                    if rng.gen_bool(0.5) {
                        iv
                    } else if k == slot_attr {
                        around(&mut rng, iv, slot_bounds(slot))
                    } else {
                        around(&mut rng, iv, bounds[k])
                    }
                })
                .collect();
            (Region::new(intervals), slot)
        } else {
            let slot = fresh_used % slots;
            fresh_used += 1;
            let intervals = (0..bounds.len())
                .map(|k| {
                    if k == slot_attr {
                        let sb = slot_bounds(slot);
                        random_subrange(&mut rng, sb, sb.len())
                    } else if rng.gen_bool(0.5) {
                        bounds[k]
                    } else {
                        random_subrange(&mut rng, bounds[k], (bounds[k].len() / 8).max(1))
                    }
                })
                .collect();
            (Region::new(intervals), slot)
        };
        let decision = if rng.gen_bool(profile.decision_bias) {
            Decision::Accept
        } else {
            Decision::Deny
        };
        rules.push(Rule::new(position, region.clone(), decision));
        regions.push(region);
        rule_slot.push(slot);
    }
    Ruleset::new(domain.clone(), rules)
}

/// Corner-anchored nested boxes: rule `k` spans `[0, 10k]` on each of `p`
/// attributes named `a1..ap`; decisions alternate starting with deny.
pub fn worst_case_family(n: usize, p: usize) -> Result<Ruleset> {
    if n < 2 || p < 2 {
        return Err(Error::Validation(format!(
            "worst-case family needs n >= 2 and p >= 2 (got n={n}, p={p})"
        )));
    }
    let top = 10 * n as i64;
    let names: Vec<(String, i64, i64)> = (1..=p).map(|k| (format!("a{k}"), 0, top)).collect();
    let domain = DomainSpec::from_bounds(&names)?;
    let rules = (1..=n)
        .map(|k| {
            let iv = Interval::new(0, 10 * k as i64).expect("ordered");
            let decision = if k % 2 == 1 {
                Decision::Deny
            } else {
                Decision::Accept
            };
            Rule::new(k, Region::new(vec![iv; p]), decision)
        })
        .collect();
    Ruleset::new(domain, rules)
}

/// Nominal growth bound `1 + p + … + p^(n-1)`.
pub fn growth_bound(n: usize, p: usize) -> u128 {
    (0..n as u32).map(|e| (p as u128).pow(e)).sum()
}
