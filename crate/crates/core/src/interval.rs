//! Closed integer intervals and the boxes (hyperrectangles) built from them.
//!
//! A [`Region`] is one interval per attribute of a [`DomainSpec`]; it is the
//! conjunctive term of a rule condition. A [`Condition`] is a list of
//! pairwise-disjoint regions kept in generation order. The empty condition is
//! the empty list.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` over the integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Interval {
    lo: i64,
    hi: i64,
}

impl Interval {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::Validation(format!(
                "interval [{lo},{hi}] has lo > hi"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(v: i64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn contains(&self, v: i64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn covers(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Number of integers in the interval; never zero.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> u128 {
        (self.hi as i128 - self.lo as i128 + 1) as u128
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    /// Points of `self` not in `other`, as at most two intervals in
    /// ascending order.
    pub fn subtract(&self, other: &Interval) -> impl Iterator<Item = Interval> {
        let pieces = if !self.overlaps(other) {
            [Some(*self), None]
        } else {
            let below = (self.lo < other.lo).then(|| Interval {
                lo: self.lo,
                hi: other.lo - 1,
            });
            let above = (other.hi < self.hi).then(|| Interval {
                lo: other.hi + 1,
                hi: self.hi,
            });
            [below, above]
        };
        pieces.into_iter().flatten()
    }
}

impl TryFrom<(i64, i64)> for Interval {
    type Error = Error;

    fn try_from((lo, hi): (i64, i64)) -> Result<Self> {
        Interval::new(lo, hi)
    }
}

impl From<Interval> for (i64, i64) {
    fn from(iv: Interval) -> Self {
        (iv.lo, iv.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.lo, self.hi)
    }
}

/// One named attribute and its inclusive bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub lo: i64,
    pub hi: i64,
}

impl Attribute {
    pub fn bounds(&self) -> Interval {
        Interval {
            lo: self.lo,
            hi: self.hi,
        }
    }
}

/// Ordered attribute list bounding every rule of a ruleset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Attribute>", into = "Vec<Attribute>")]
pub struct DomainSpec {
    attributes: Vec<Attribute>,
}

pub const IPV4_MAX: i64 = u32::MAX as i64;

impl DomainSpec {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Domain(
                "a domain needs at least one attribute".into(),
            ));
        }
        for (i, a) in attributes.iter().enumerate() {
            if a.lo > a.hi {
                return Err(Error::Domain(format!(
                    "attribute {} has lo {} > hi {}",
                    a.name, a.lo, a.hi
                )));
            }
            if a.name.is_empty() {
                return Err(Error::Domain(format!(
                    "attribute {} has an empty name",
                    i + 1
                )));
            }
            if attributes[..i].iter().any(|b| b.name == a.name) {
                return Err(Error::Domain(format!(
                    "duplicate attribute name {}",
                    a.name
                )));
            }
        }
        Ok(Self { attributes })
    }

    /// Builds a domain from `(name, lo, hi)` triples.
    pub fn from_bounds<S: AsRef<str>>(bounds: &[(S, i64, i64)]) -> Result<Self> {
        Self::new(
            bounds
                .iter()
                .map(|(name, lo, hi)| Attribute {
                    name: name.as_ref().to_string(),
                    lo: *lo,
                    hi: *hi,
                })
                .collect(),
        )
    }

    /// The IPv4 5-tuple: protocol, source, sport, destination, dport.
    pub fn ipv4_five_tuple() -> Self {
        Self::from_bounds(&[
            ("protocol", 0, 255),
            ("source", 0, IPV4_MAX),
            ("sport", 0, 65535),
            ("destination", 0, IPV4_MAX),
            ("dport", 0, 65535),
        ])
        .expect("static domain is valid")
    }

    pub fn arity(&self) -> usize {
        self.attributes.len()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    /// The region spanning the whole domain ("any" on every attribute).
    pub fn full_region(&self) -> Region {
        Region {
            intervals: self.attributes.iter().map(Attribute::bounds).collect(),
        }
    }

    /// Total number of packets, saturating at `u128::MAX`.
    pub fn packet_count(&self) -> u128 {
        self.attributes
            .iter()
            .fold(1u128, |acc, a| acc.saturating_mul(a.bounds().len()))
    }

    pub fn check_region(&self, region: &Region) -> Result<()> {
        if region.arity() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                found: region.arity(),
            });
        }
        for (a, iv) in self.attributes.iter().zip(region.intervals()) {
            if !a.bounds().covers(iv) {
                return Err(Error::Domain(format!(
                    "{iv} lies outside {} bounds [{},{}]",
                    a.name, a.lo, a.hi
                )));
            }
        }
        Ok(())
    }

    pub fn check_point(&self, values: &[i64]) -> Result<()> {
        if values.len() != self.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                found: values.len(),
            });
        }
        for (a, v) in self.attributes.iter().zip(values) {
            if !a.bounds().contains(*v) {
                return Err(Error::Domain(format!(
                    "value {v} lies outside {} bounds [{},{}]",
                    a.name, a.lo, a.hi
                )));
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<Attribute>> for DomainSpec {
    type Error = Error;

    fn try_from(attributes: Vec<Attribute>) -> Result<Self> {
        DomainSpec::new(attributes)
    }
}

impl From<DomainSpec> for Vec<Attribute> {
    fn from(d: DomainSpec) -> Self {
        d.attributes
    }
}

/// A box: one interval per attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Region {
    intervals: Vec<Interval>,
}

impl Region {
    pub fn new(intervals: Vec<Interval>) -> Self {
        Self { intervals }
    }

    pub fn arity(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, attribute: usize) -> Interval {
        self.intervals[attribute]
    }

    fn check_arity(&self, other: &Region) -> Result<()> {
        if self.arity() != other.arity() {
            return Err(Error::Arity {
                expected: self.arity(),
                found: other.arity(),
            });
        }
        Ok(())
    }

    pub fn intersects(&self, other: &Region) -> Result<bool> {
        self.check_arity(other)?;
        Ok(self.overlaps(other))
    }

    /// Arity-unchecked form of [`Region::intersects`].
    pub(crate) fn overlaps(&self, other: &Region) -> bool {
        debug_assert_eq!(self.arity(), other.arity());
        self.intervals
            .iter()
            .zip(&other.intervals)
            .all(|(a, b)| a.overlaps(b))
    }

    pub fn intersection(&self, other: &Region) -> Result<Option<Region>> {
        self.check_arity(other)?;
        Ok(self
            .intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>()
            .map(Region::new))
    }

    pub fn covers(&self, other: &Region) -> bool {
        self.arity() == other.arity()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| a.covers(b))
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.arity() == point.len()
            && self
                .intervals
                .iter()
                .zip(point)
                .all(|(iv, v)| iv.contains(*v))
    }

    /// Number of points in the box, saturating.
    pub fn volume(&self) -> u128 {
        self.intervals
            .iter()
            .fold(1u128, |acc, iv| acc.saturating_mul(iv.len()))
    }

    /// Slab decomposition of `self ∖ other`.
    ///
    /// Slab `k` fixes attributes before `k` to the intersection, attribute `k`
    /// to each residual piece of `self[k] − other[k]` and leaves later
    /// attributes as in `self`. Slabs come out in attribute order, lower
    /// residual first; empty slabs are dropped. Disjoint operands return
    /// `self` unchanged.
    pub fn subtract(&self, other: &Region) -> Result<Vec<Region>> {
        self.check_arity(other)?;
        let mut out = Vec::new();
        self.subtract_into(other, &mut out);
        Ok(out)
    }

    pub(crate) fn subtract_into(&self, other: &Region, out: &mut Vec<Region>) {
        debug_assert_eq!(self.arity(), other.arity());
        if !self.overlaps(other) {
            out.push(self.clone());
            return;
        }
        let mut prefix = self.intervals.clone();
        for k in 0..self.arity() {
            let mine = self.intervals[k];
            let theirs = other.intervals[k];
            for piece in mine.subtract(&theirs) {
                let mut slab = prefix.clone();
                slab[k] = piece;
                out.push(Region::new(slab));
            }
            // overlap is guaranteed on every attribute here
            prefix[k] = mine.intersect(&theirs).expect("overlapping boxes");
        }
    }

    /// Smallest region covering both.
    pub(crate) fn hull(&self, other: &Region) -> Region {
        Region::new(
            self.intervals
                .iter()
                .zip(&other.intervals)
                .map(|(a, b)| Interval {
                    lo: a.lo.min(b.lo),
                    hi: a.hi.max(b.hi),
                })
                .collect(),
        )
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(" ∧ ")?;
            }
            write!(f, "{iv}")?;
        }
        f.write_str(")")
    }
}

/// Pairwise-disjoint list of regions in generation order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Region>", into = "Vec<Region>")]
pub struct Condition {
    regions: Vec<Region>,
}

impl Condition {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a condition, rejecting overlapping or mixed-arity regions.
    pub fn new(regions: Vec<Region>) -> Result<Self> {
        for (i, a) in regions.iter().enumerate() {
            for b in &regions[..i] {
                if b.intersects(a)? {
                    return Err(Error::Validation(format!(
                        "condition regions {b} and {a} overlap"
                    )));
                }
            }
        }
        Ok(Self { regions })
    }

    pub(crate) fn from_disjoint(regions: Vec<Region>) -> Self {
        Self { regions }
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Region> {
        self.regions.iter()
    }

    pub fn contains(&self, point: &[i64]) -> bool {
        self.regions.iter().any(|r| r.contains(point))
    }

    /// Number of packets matched; regions are disjoint so volumes add.
    pub fn volume(&self) -> u128 {
        self.regions
            .iter()
            .fold(0u128, |acc, r| acc.saturating_add(r.volume()))
    }

    /// Bounding box of all regions, `None` when empty.
    pub fn bounding_region(&self) -> Option<Region> {
        let mut it = self.regions.iter();
        let first = it.next()?.clone();
        Some(it.fold(first, |acc, r| acc.hull(r)))
    }
}

impl From<Region> for Condition {
    fn from(region: Region) -> Self {
        Self {
            regions: vec![region],
        }
    }
}

impl TryFrom<Vec<Region>> for Condition {
    type Error = Error;

    fn try_from(regions: Vec<Region>) -> Result<Self> {
        Condition::new(regions)
    }
}

impl From<Condition> for Vec<Region> {
    fn from(c: Condition) -> Self {
        c.regions
    }
}

impl<'a> IntoIterator for &'a Condition {
    type Item = &'a Region;
    type IntoIter = std::slice::Iter<'a, Region>;

    fn into_iter(self) -> Self::IntoIter {
        self.regions.iter()
    }
}
