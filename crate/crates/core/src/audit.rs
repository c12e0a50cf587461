//! Audit passes over an ordered ruleset.
//!
//! [`detection`] rewrites every rule against all earlier ones and reports the
//! rules it empties as shadowing. [`complete_detection`] first excludes only
//! rules of the opposite decision, then walks the ruleset again separating
//! redundant rules (absorbed by later rules of the same decision) from
//! shadowed ones. Both produce a pairwise-disjoint ruleset that is
//! equivalent to the input under first-match evaluation.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exclusion::{exclusion, Decision, Rule};
use crate::interval::{DomainSpec, Region};

/// Ordered rules sharing one domain.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Ruleset {
    domain: DomainSpec,
    rules: Vec<Rule>,
}

impl Ruleset {
    /// Validates positions (strictly increasing) and that every box fits the
    /// domain.
    pub fn new(domain: DomainSpec, rules: Vec<Rule>) -> Result<Self> {
        for pair in rules.windows(2) {
            if pair[0].position() >= pair[1].position() {
                return Err(Error::Validation(format!(
                    "rule positions must be strictly increasing ({} then {})",
                    pair[0].position(),
                    pair[1].position()
                )));
            }
        }
        for rule in &rules {
            for region in rule.condition() {
                domain.check_region(region)?;
            }
        }
        Ok(Self { domain, rules })
    }

    pub fn empty(domain: DomainSpec) -> Self {
        Self {
            domain,
            rules: Vec::new(),
        }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn box_count(&self) -> usize {
        self.rules.iter().map(|r| r.condition().len()).sum()
    }

    pub fn get(&self, position: usize) -> Option<&Rule> {
        self.rules.iter().find(|r| r.position() == position)
    }

    /// Same rules minus the one at `position`.
    pub fn without(&self, position: usize) -> Ruleset {
        Ruleset {
            domain: self.domain.clone(),
            rules: self
                .rules
                .iter()
                .filter(|r| r.position() != position)
                .cloned()
                .collect(),
        }
    }

    /// Rules reordered by `order` (indices into the current sequence) and
    /// renumbered 1.. in the new order.
    pub fn permuted(&self, order: &[usize]) -> Result<Ruleset> {
        let mut seen = vec![false; self.rules.len()];
        if order.len() != self.rules.len() {
            return Err(Error::Validation("permutation length mismatch".into()));
        }
        let mut rules = Vec::with_capacity(order.len());
        for (k, &idx) in order.iter().enumerate() {
            if idx >= seen.len() || std::mem::replace(&mut seen[idx], true) {
                return Err(Error::Validation(format!("{order:?} is not a permutation")));
            }
            let old = &self.rules[idx];
            rules.push(Rule::new(k + 1, old.condition().clone(), old.decision()));
        }
        Ok(Ruleset {
            domain: self.domain.clone(),
            rules,
        })
    }

    /// Drops rules whose condition is empty.
    pub fn without_empty(&self) -> Ruleset {
        Ruleset {
            domain: self.domain.clone(),
            rules: self
                .rules
                .iter()
                .filter(|r| !r.is_empty())
                .cloned()
                .collect(),
        }
    }

    /// Returns the first pair of overlapping rules (by position), if any.
    pub fn first_overlap(&self) -> Option<(usize, usize)> {
        let hulls: Vec<Option<Region>> = self
            .rules
            .iter()
            .map(|r| r.condition().bounding_region())
            .collect();
        for (i, a) in self.rules.iter().enumerate() {
            let regions = a.condition().regions();
            for (x, ra) in regions.iter().enumerate() {
                if regions[x + 1..].iter().any(|rb| ra.overlaps(rb)) {
                    return Some((a.position(), a.position()));
                }
            }
            for (j, b) in self.rules.iter().enumerate().skip(i + 1) {
                let (Some(ha), Some(hb)) = (&hulls[i], &hulls[j]) else {
                    continue;
                };
                if !ha.overlaps(hb) {
                    continue;
                }
                let hit = a
                    .condition()
                    .iter()
                    .any(|ra| b.condition().iter().any(|rb| ra.overlaps(rb)));
                if hit {
                    return Some((a.position(), b.position()));
                }
            }
        }
        None
    }

    pub fn is_disjoint(&self) -> bool {
        self.first_overlap().is_none()
    }

    pub(crate) fn from_parts_unchecked(domain: DomainSpec, rules: Vec<Rule>) -> Self {
        Self { domain, rules }
    }
}

impl fmt::Display for Ruleset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WarningKind {
    Shadowing,
    Redundancy,
}

impl fmt::Display for WarningKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WarningKind::Shadowing => "shadowing",
            WarningKind::Redundancy => "redundancy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Warning {
    pub rule: usize,
    pub kind: WarningKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Detection,
    CompleteDetection,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Detection => "detection",
            Algorithm::CompleteDetection => "complete_detection",
        }
    }

    pub fn run(&self, ruleset: &Ruleset) -> AuditReport {
        match self {
            Algorithm::Detection => detection(ruleset),
            Algorithm::CompleteDetection => complete_detection(ruleset),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "detection" => Ok(Algorithm::Detection),
            "complete" | "complete_detection" | "complete-detection" => {
                Ok(Algorithm::CompleteDetection)
            }
            other => Err(Error::Validation(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditStats {
    pub input_rules: usize,
    pub output_rules: usize,
    pub output_boxes: usize,
    /// Largest total box count held by the working ruleset during the run.
    pub peak_boxes: usize,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub algorithm: Algorithm,
    /// Rewritten ruleset with emptied rules removed.
    pub transformed: Ruleset,
    /// Sorted by rule position.
    pub warnings: Vec<Warning>,
    pub stats: AuditStats,
}

impl AuditReport {
    pub fn has_warnings(&self) -> bool {
        !self.warnings.is_empty()
    }

    pub fn count(&self, kind: WarningKind) -> usize {
        self.warnings.iter().filter(|w| w.kind == kind).count()
    }
}

/// Working copy of a ruleset with a running box tally.
struct Workspace {
    rules: Vec<Rule>,
    boxes: usize,
    peak: usize,
}

impl Workspace {
    fn new(ruleset: &Ruleset) -> Self {
        let boxes = ruleset.box_count();
        Self {
            rules: ruleset.rules.clone(),
            boxes,
            peak: boxes,
        }
    }

    /// `rules[j] ← exclusion(rules[j], rules[i])`; emptied rules are left
    /// alone so their flags survive.
    fn exclude(&mut self, j: usize, i: usize) {
        if self.rules[j].is_empty() || self.rules[i].is_empty() {
            return;
        }
        // arity is shared through the ruleset invariant
        let next = exclusion(&self.rules[j], &self.rules[i]).expect("rules share a domain");
        self.replace(j, next);
    }

    fn replace(&mut self, j: usize, next: Rule) {
        self.boxes = self.boxes - self.rules[j].condition().len() + next.condition().len();
        self.peak = self.peak.max(self.boxes);
        self.rules[j] = next;
    }

    fn mark_redundant(&mut self, i: usize) {
        self.boxes -= self.rules[i].condition().len();
        self.rules[i].mark_redundant();
    }

    fn finish(self, algorithm: Algorithm, input: &Ruleset, started: Instant) -> AuditReport {
        let mut warnings = Vec::new();
        for rule in &self.rules {
            if rule.shadowing() {
                warnings.push(Warning {
                    rule: rule.position(),
                    kind: WarningKind::Shadowing,
                });
            }
            if rule.redundancy() {
                warnings.push(Warning {
                    rule: rule.position(),
                    kind: WarningKind::Redundancy,
                });
            }
        }
        warnings.sort();
        let transformed = Ruleset::from_parts_unchecked(
            input.domain.clone(),
            self.rules.into_iter().filter(|r| !r.is_empty()).collect(),
        );
        let stats = AuditStats {
            input_rules: input.len(),
            output_rules: transformed.len(),
            output_boxes: transformed.box_count(),
            peak_boxes: self.peak,
            elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        };
        AuditReport {
            algorithm,
            transformed,
            warnings,
            stats,
        }
    }
}

/// Excludes every rule from all later ones; emptied rules are flagged as
/// shadowing. The result is disjoint and equivalent to the input.
pub fn detection(ruleset: &Ruleset) -> AuditReport {
    let started = Instant::now();
    let mut ws = Workspace::new(ruleset);
    let n = ws.rules.len();
    for i in 0..n.saturating_sub(1) {
        for j in i + 1..n {
            ws.exclude(j, i);
            if ws.rules[j].is_empty() {
                ws.rules[j].mark_shadowing();
            }
        }
    }
    ws.finish(Algorithm::Detection, ruleset, started)
}

/// True when rule `index` (1-based) is fully absorbed by later rules with
/// the same decision. The ruleset is not modified.
pub fn test_redundancy(ruleset: &Ruleset, index: usize) -> Result<bool> {
    if index == 0 || index > ruleset.len() {
        return Err(Error::IndexOutOfRange {
            index,
            len: ruleset.len(),
        });
    }
    Ok(absorbed_by_later(&ruleset.rules, index - 1))
}

fn absorbed_by_later(rules: &[Rule], i: usize) -> bool {
    let mut probe = rules[i].clone();
    for later in &rules[i + 1..] {
        if later.decision() != probe.decision() {
            continue;
        }
        probe = exclusion(&probe, later).expect("rules share a domain");
        if probe.is_empty() {
            return true;
        }
    }
    false
}

/// Two-phase audit that distinguishes redundancy from shadowing.
///
/// Phase 1 excludes each rule from later rules of the other decision.
/// Phase 2 visits rules in order: a rule absorbed by later same-decision
/// rules is emptied and flagged redundant; otherwise it is excluded from
/// later same-decision rules, and any rule this empties is flagged
/// shadowing. Rules already emptied in phase 1 are not re-tested, so a rule
/// never carries both flags.
pub fn complete_detection(ruleset: &Ruleset) -> AuditReport {
    let started = Instant::now();
    let mut ws = Workspace::new(ruleset);
    let n = ws.rules.len();

    for i in 0..n.saturating_sub(1) {
        for j in i + 1..n {
            if ws.rules[i].decision() != ws.rules[j].decision() {
                ws.exclude(j, i);
            }
            if ws.rules[j].is_empty() {
                ws.rules[j].mark_shadowing();
            }
        }
    }

    for i in 0..n.saturating_sub(1) {
        if ws.rules[i].is_empty() {
            continue;
        }
        if absorbed_by_later(&ws.rules, i) {
            ws.mark_redundant(i);
            continue;
        }
        for j in i + 1..n {
            if ws.rules[i].decision() == ws.rules[j].decision() {
                ws.exclude(j, i);
            }
            if !ws.rules[j].redundancy() && ws.rules[j].is_empty() {
                ws.rules[j].mark_shadowing();
            }
        }
    }

    ws.finish(Algorithm::CompleteDetection, ruleset, started)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RewriteMode {
    /// Keep only accept rules; valid under a default-deny policy.
    Positive,
    /// Keep only deny rules; valid under a default-accept policy.
    Negative,
}

impl RewriteMode {
    /// Decision applied to unmatched packets for the rewrite to stay
    /// equivalent.
    pub fn default_decision(&self) -> Decision {
        match self {
            RewriteMode::Positive => Decision::Deny,
            RewriteMode::Negative => Decision::Accept,
        }
    }

    fn kept(&self) -> Decision {
        match self {
            RewriteMode::Positive => Decision::Accept,
            RewriteMode::Negative => Decision::Deny,
        }
    }
}

impl FromStr for RewriteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "positive" => Ok(RewriteMode::Positive),
            "negative" => Ok(RewriteMode::Negative),
            other => Err(Error::Validation(format!("unknown rewrite mode {other:?}"))),
        }
    }
}

/// Keeps only the rules of one decision from a disjoint ruleset.
pub fn rewrite(ruleset: &Ruleset, mode: RewriteMode) -> Result<Ruleset> {
    if let Some((first, second)) = ruleset.first_overlap() {
        return Err(Error::NotDisjoint { first, second });
    }
    let kept = mode.kept();
    Ok(Ruleset::from_parts_unchecked(
        ruleset.domain.clone(),
        ruleset
            .rules
            .iter()
            .filter(|r| r.decision() == kept && !r.is_empty())
            .cloned()
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::{Condition, Interval};

    fn one_dim(rules: &[(i64, i64, Decision)]) -> Ruleset {
        let domain = DomainSpec::from_bounds(&[("s", 0, 100)]).unwrap();
        let rules = rules
            .iter()
            .enumerate()
            .map(|(k, &(lo, hi, d))| {
                Rule::new(k + 1, Region::new(vec![Interval::new(lo, hi).unwrap()]), d)
            })
            .collect();
        Ruleset::new(domain, rules).unwrap()
    }

    use Decision::{Accept, Deny};

    #[test]
    fn ruleset_validation() {
        let domain = DomainSpec::from_bounds(&[("s", 0, 10)]).unwrap();
        let r = |p| Rule::new(p, Region::new(vec![Interval::point(3)]), Accept);
        assert!(Ruleset::new(domain.clone(), vec![r(2), r(1)]).is_err());
        assert!(Ruleset::new(domain.clone(), vec![r(1), r(1)]).is_err());
        let outside = Rule::new(1, Region::new(vec![Interval::new(5, 11).unwrap()]), Deny);
        assert!(Ruleset::new(domain, vec![outside]).is_err());
    }

    #[test]
    fn single_rule_is_untouched() {
        let rs = one_dim(&[(1, 10, Accept)]);
        for report in [detection(&rs), complete_detection(&rs)] {
            assert_eq!(report.transformed, rs);
            assert!(report.warnings.is_empty());
        }
    }

    #[test]
    fn duplicate_rule_is_shadowed() {
        let rs = one_dim(&[(1, 10, Accept), (1, 10, Accept)]);
        let report = detection(&rs);
        assert_eq!(
            report.warnings,
            vec![Warning {
                rule: 2,
                kind: WarningKind::Shadowing
            }]
        );
        assert_eq!(report.transformed.len(), 1);
    }

    #[test]
    fn redundancy_through_later_rule() {
        let rs = one_dim(&[(10, 50, Deny), (40, 70, Accept), (50, 80, Accept)]);
        let report = complete_detection(&rs);
        assert_eq!(
            report.warnings,
            vec![Warning {
                rule: 2,
                kind: WarningKind::Redundancy
            }]
        );
    }

    #[test]
    fn shadowing_through_union() {
        let rs = one_dim(&[(10, 50, Accept), (40, 90, Accept), (30, 80, Deny)]);
        let report = complete_detection(&rs);
        assert_eq!(
            report.warnings,
            vec![Warning {
                rule: 3,
                kind: WarningKind::Shadowing
            }]
        );
    }

    #[test]
    fn disjoint_accepts_are_clean() {
        let rs = one_dim(&[(0, 9, Accept), (10, 19, Accept), (30, 39, Accept)]);
        let report = complete_detection(&rs);
        assert!(report.warnings.is_empty());
        assert_eq!(report.transformed, rs);
    }

    #[test]
    fn test_redundancy_bounds() {
        let rs = one_dim(&[(1, 10, Accept), (1, 10, Accept)]);
        assert!(test_redundancy(&rs, 1).unwrap());
        assert!(!test_redundancy(&rs, 2).unwrap());
        assert!(matches!(
            test_redundancy(&rs, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(test_redundancy(&rs, 3).is_err());
    }

    #[test]
    fn rewrite_requires_disjointness() {
        let rs = one_dim(&[(1, 10, Accept), (5, 20, Deny)]);
        assert_eq!(
            rewrite(&rs, RewriteMode::Positive),
            Err(Error::NotDisjoint {
                first: 1,
                second: 2
            })
        );
        let all_deny = one_dim(&[(1, 10, Deny), (11, 20, Deny)]);
        assert_eq!(rewrite(&all_deny, RewriteMode::Negative).unwrap(), all_deny);
        assert!(rewrite(&all_deny, RewriteMode::Positive)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn overlapping_boxes_within_one_rule_detected() {
        let domain = DomainSpec::from_bounds(&[("s", 0, 10)]).unwrap();
        let cond = Condition::from_disjoint(vec![
            Region::new(vec![Interval::new(0, 5).unwrap()]),
            Region::new(vec![Interval::new(5, 6).unwrap()]),
        ]);
        let rs = Ruleset::from_parts_unchecked(domain, vec![Rule::new(1, cond, Accept)]);
        assert_eq!(rs.first_overlap(), Some((1, 1)));
    }

    #[test]
    fn permutation_checks() {
        let rs = one_dim(&[(1, 10, Accept), (11, 20, Deny)]);
        let p = rs.permuted(&[1, 0]).unwrap();
        assert_eq!(p.rules()[0].decision(), Deny);
        assert_eq!(p.rules()[0].position(), 1);
        assert!(rs.permuted(&[0, 0]).is_err());
        assert!(rs.permuted(&[0]).is_err());
    }
}
