//! Brute-force ground truth for first-match rulesets.
//!
//! Everything here works packet by packet: [`evaluate`] is the first-match
//! classifier, and the [`Oracle`] enumerates the whole domain (up to a packet
//! budget) to decide equivalence and the shadowing/redundancy definitions
//! directly. None of it goes through the exclusion engine.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::audit::Ruleset;
use crate::error::{Error, Result};
use crate::exclusion::Decision;
use crate::interval::DomainSpec;

/// One concrete value per attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Packet(pub Vec<i64>);

impl Packet {
    pub fn values(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for Packet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Accept,
    Deny,
    NoMatch,
}

impl Outcome {
    /// Resolves `NoMatch` with a default policy.
    pub fn or_default(self, default: Decision) -> Decision {
        match self {
            Outcome::Accept => Decision::Accept,
            Outcome::Deny => Decision::Deny,
            Outcome::NoMatch => default,
        }
    }
}

impl From<Decision> for Outcome {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Accept => Outcome::Accept,
            Decision::Deny => Outcome::Deny,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Accept => "accept",
            Outcome::Deny => "deny",
            Outcome::NoMatch => "no_match",
        })
    }
}

/// Result of an equivalence check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    Differs {
        packet: Packet,
        left: Outcome,
        right: Outcome,
    },
}

impl Equivalence {
    pub fn holds(&self) -> bool {
        matches!(self, Equivalence::Equivalent)
    }
}

/// First-match evaluation.
pub fn evaluate(ruleset: &Ruleset, packet: &Packet) -> Result<Outcome> {
    ruleset.domain().check_point(packet.values())?;
    Ok(first_match(ruleset, packet.values()))
}

fn first_match(ruleset: &Ruleset, point: &[i64]) -> Outcome {
    first_match_index(ruleset, point)
        .map(|i| ruleset.rules()[i].decision().into())
        .unwrap_or(Outcome::NoMatch)
}

fn first_match_index(ruleset: &Ruleset, point: &[i64]) -> Option<usize> {
    ruleset.rules().iter().position(|r| r.matches(point))
}

/// Calls `f` for every packet of the domain in lexicographic order until it
/// returns `false`.
fn for_each_packet(domain: &DomainSpec, mut f: impl FnMut(&[i64]) -> bool) {
    let attrs = domain.attributes();
    let mut point: Vec<i64> = attrs.iter().map(|a| a.lo).collect();
    loop {
        if !f(&point) {
            return;
        }
        let mut k = attrs.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if point[k] < attrs[k].hi {
                point[k] += 1;
                break;
            }
            point[k] = attrs[k].lo;
        }
    }
}

pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Exhaustive checker bounded by a packet budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Oracle {
    pub budget: u128,
}

impl Default for Oracle {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
        }
    }
}

impl Oracle {
    pub fn with_budget(budget: u128) -> Self {
        Self { budget }
    }

    fn check_budget(&self, domain: &DomainSpec) -> Result<()> {
        let packets = domain.packet_count();
        if packets > self.budget {
            return Err(Error::DomainTooLarge {
                packets,
                budget: self.budget,
            });
        }
        Ok(())
    }

    fn check_pair(&self, left: &Ruleset, right: &Ruleset) -> Result<()> {
        if left.domain() != right.domain() {
            return Err(Error::Domain("rulesets declare different domains".into()));
        }
        self.check_budget(left.domain())
    }

    /// Compares three-valued outcomes on every packet; reports the
    /// lexicographically first disagreement.
    pub fn equivalent(&self, left: &Ruleset, right: &Ruleset) -> Result<Equivalence> {
        self.compare(left, right, |o| o)
    }

    /// Like [`Oracle::equivalent`] but with unmatched packets resolved by a
    /// default policy on both sides.
    pub fn equivalent_under(
        &self,
        left: &Ruleset,
        right: &Ruleset,
        default: Decision,
    ) -> Result<Equivalence> {
        self.compare(left, right, |o| o.or_default(default).into())
    }

    fn compare(
        &self,
        left: &Ruleset,
        right: &Ruleset,
        resolve: impl Fn(Outcome) -> Outcome,
    ) -> Result<Equivalence> {
        self.check_pair(left, right)?;
        let mut verdict = Equivalence::Equivalent;
        for_each_packet(left.domain(), |point| {
            let l = resolve(first_match(left, point));
            let r = resolve(first_match(right, point));
            if l != r {
                verdict = Equivalence::Differs {
                    packet: Packet(point.to_vec()),
                    left: l,
                    right: r,
                };
                return false;
            }
            true
        });
        Ok(verdict)
    }

    /// Positions of rules that are never the first match for any packet.
    pub fn find_shadowed(&self, ruleset: &Ruleset) -> Result<BTreeSet<usize>> {
        self.check_budget(ruleset.domain())?;
        let mut hit = vec![false; ruleset.len()];
        for_each_packet(ruleset.domain(), |point| {
            if let Some(i) = first_match_index(ruleset, point) {
                hit[i] = true;
            }
            true
        });
        Ok(ruleset
            .rules()
            .iter()
            .zip(hit)
            .filter(|(_, h)| !h)
            .map(|(r, _)| r.position())
            .collect())
    }

    /// Positions of non-shadowed rules whose removal leaves every packet's
    /// outcome unchanged.
    pub fn find_redundant(&self, ruleset: &Ruleset) -> Result<BTreeSet<usize>> {
        let shadowed = self.find_shadowed(ruleset)?;
        let mut redundant = BTreeSet::new();
        for rule in ruleset.rules() {
            if shadowed.contains(&rule.position()) {
                continue;
            }
            let reduced = ruleset.without(rule.position());
            if self.equivalent(ruleset, &reduced)?.holds() {
                redundant.insert(rule.position());
            }
        }
        Ok(redundant)
    }
}

/// Seeded uniform sampling; advisory only, a `Equivalent` verdict is not a
/// proof.
pub fn sample_equivalent(
    left: &Ruleset,
    right: &Ruleset,
    samples: usize,
    seed: u64,
) -> Result<Equivalence> {
    if samples == 0 {
        return Err(Error::Validation("need at least one sample".into()));
    }
    if left.domain() != right.domain() {
        return Err(Error::Domain("rulesets declare different domains".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let attrs = left.domain().attributes();
    let mut point = vec![0i64; attrs.len()];
    for _ in 0..samples {
        for (v, a) in point.iter_mut().zip(attrs) {
            *v = rng.gen_range(a.lo..=a.hi);
        }
        let l = first_match(left, &point);
        let r = first_match(right, &point);
        if l != r {
            return Ok(Equivalence::Differs {
                packet: Packet(point),
                left: l,
                right: r,
            });
        }
    }
    Ok(Equivalence::Equivalent)
}
