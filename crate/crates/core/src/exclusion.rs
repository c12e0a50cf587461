//! Rules and the exclusion operator `exclusion(b, a)`, which rewrites `b` so
//! that its condition keeps only the packets `a` does not match.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::{Condition, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Deny,
}

impl Decision {
    pub fn as_str(&self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Deny => "deny",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "accept" => Ok(Decision::Accept),
            "deny" => Ok(Decision::Deny),
            other => Err(Error::Validation(format!("unknown decision {other:?}"))),
        }
    }
}

/// A filtering rule: `condition → decision` at an original position.
///
/// The shadowing and redundancy flags are only ever set together with an
/// emptied condition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    position: usize,
    condition: Condition,
    decision: Decision,
    shadowing: bool,
    redundancy: bool,
}

impl Rule {
    pub fn new(position: usize, condition: impl Into<Condition>, decision: Decision) -> Self {
        Self {
            position,
            condition: condition.into(),
            decision,
            shadowing: false,
            redundancy: false,
        }
    }

    pub fn position(&self) -> usize {
        self.position
    }

    pub fn condition(&self) -> &Condition {
        &self.condition
    }

    pub fn decision(&self) -> Decision {
        self.decision
    }

    pub fn shadowing(&self) -> bool {
        self.shadowing
    }

    pub fn redundancy(&self) -> bool {
        self.redundancy
    }

    pub fn is_empty(&self) -> bool {
        self.condition.is_empty()
    }

    pub fn arity(&self) -> Option<usize> {
        self.condition.regions().first().map(Region::arity)
    }

    pub fn matches(&self, point: &[i64]) -> bool {
        self.condition.contains(point)
    }

    pub(crate) fn mark_shadowing(&mut self) {
        debug_assert!(self.condition.is_empty());
        self.shadowing = true;
    }

    pub(crate) fn mark_redundant(&mut self) {
        self.condition = Condition::empty();
        self.redundancy = true;
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}: ", self.position)?;
        if self.condition.is_empty() {
            f.write_str("∅")?;
        } else {
            f.write_str("{")?;
            for (i, r) in self.condition.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{r}")?;
            }
            f.write_str("}")?;
        }
        write!(f, " → {}", self.decision)
    }
}

/// Removes the packets of `a` from `b`.
///
/// The result keeps `b`'s position and decision and has both flags cleared.
/// Each box of `a` is subtracted in turn from every box of the working set,
/// so the output stays pairwise disjoint and covers exactly `b ∖ a`.
pub fn exclusion(b: &Rule, a: &Rule) -> Result<Rule> {
    if let (Some(bp), Some(ap)) = (b.arity(), a.arity()) {
        if bp != ap {
            return Err(Error::Arity {
                expected: bp,
                found: ap,
            });
        }
    }
    let condition = condition_difference(&b.condition, &a.condition);
    Ok(Rule {
        position: b.position,
        condition,
        decision: b.decision,
        shadowing: false,
        redundancy: false,
    })
}

/// Sequential refinement `b − a₁ − a₂ − …` over the boxes of `a`.
pub(crate) fn condition_difference(b: &Condition, a: &Condition) -> Condition {
    if b.is_empty() || a.is_empty() {
        return b.clone();
    }
    let (Some(b_hull), Some(a_hull)) = (b.bounding_region(), a.bounding_region()) else {
        return b.clone();
    };
    if !b_hull.overlaps(&a_hull) {
        return b.clone();
    }

    let mut working: Vec<Region> = b.regions().to_vec();
    let mut next = Vec::with_capacity(working.len());
    for cut in a.iter() {
        if !b_hull.overlaps(cut) {
            continue;
        }
        next.clear();
        for region in &working {
            region.subtract_into(cut, &mut next);
        }
        std::mem::swap(&mut working, &mut next);
        if working.is_empty() {
            break;
        }
    }
    Condition::from_disjoint(working)
}
