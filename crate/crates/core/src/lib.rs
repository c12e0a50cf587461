//! Shadowing and redundancy audit for ordered firewall rulesets.
//!
//! Rules are conditions over closed integer intervals (one per attribute)
//! evaluated with first-match semantics. The audit passes rewrite a ruleset
//! into an equivalent, pairwise-disjoint one whose order no longer matters,
//! and report the rules that were shadowed or redundant on the way. The
//! [`oracle`] module checks all of this by brute force on small domains.
//!
//! ```
//! use fwaudit::{complete_detection, io::parse_ruleset, WarningKind};
//!
//! let text = "\
//! @domain source=[1,100] destination=[1,100]
//! 1, [1,30], [20,45], deny
//! 2, [20,60], [25,35], accept
//! 3, [40,70], [20,45], accept
//! 4, [15,45], [25,30], deny
//! 5, [25,45], [20,40], accept
//! ";
//! let report = complete_detection(&parse_ruleset(text).unwrap());
//! assert_eq!(report.transformed.len(), 3);
//! assert_eq!(report.warnings[0].kind, WarningKind::Redundancy);
//! ```

pub mod audit;
pub mod bench;
pub mod error;
pub mod exclusion;
pub mod interval;
pub mod io;
pub mod oracle;
pub mod synth;

pub use audit::{
    complete_detection, detection, rewrite, test_redundancy, Algorithm, AuditReport, AuditStats,
    RewriteMode, Ruleset, Warning, WarningKind,
};
pub use error::{Error, Result};
pub use exclusion::{exclusion, Decision, Rule};
pub use interval::{Attribute, Condition, DomainSpec, Interval, Region};
pub use oracle::{evaluate, sample_equivalent, Equivalence, Oracle, Outcome, Packet};
