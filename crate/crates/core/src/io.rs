//! Rule files and audit reports.
//!
//! A rule file is UTF-8 text with one comma-separated record per line:
//!
//! ```text
//! # comment
//! @domain protocol=[0,255] source=[0,4294967295] sport=[0,65535] destination=[0,4294967295] dport=[0,65535]
//! 1, tcp, 10.0.0.[1,30], any, 10.0.0.7, 80, accept
//! 2, any, [1,30], any, [20,45], any, deny
//! 3.1, any, [61,70], any, [20,45], any, accept
//! 3.2, any, [40,60], any, [20,24], any, accept
//! ```
//!
//! The first field is the rule order, the last the decision, and the fields
//! in between follow the attributes of the `@domain` header (the IPv4
//! 5-tuple when the header is absent). Attribute values are `any`, a single
//! value, or a closed range `[a,b]`; values may be integers or dotted-quad
//! IPv4 addresses, and `a.b.c.[x,y]` ranges over the last octet. The
//! `protocol` attribute also takes `tcp`, `udp` and `icmp`.
//!
//! Records `N.1`, `N.2`, … are the boxes of one multi-box rule `N`; they are
//! only produced by serializing a transformed ruleset.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::audit::{Algorithm, AuditReport, AuditStats, Ruleset, Warning};
use crate::error::{Error, Result};
use crate::exclusion::{Decision, Rule};
use crate::interval::{Attribute, Condition, DomainSpec, Interval, Region};

pub const REPORT_SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Splits on `sep` outside square brackets.
fn split_top_level(s: &str, sep: impl Fn(char) -> bool) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            c if depth == 0 && sep(c) => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

fn parse_ipv4(s: &str) -> Option<i64> {
    let addr: std::net::Ipv4Addr = s.parse().ok()?;
    Some(u32::from(addr) as i64)
}

fn parse_scalar(s: &str) -> std::result::Result<i64, String> {
    let s = s.trim();
    if s.contains('.') {
        return parse_ipv4(s).ok_or_else(|| format!("invalid IPv4 address {s:?}"));
    }
    s.parse::<i64>()
        .map_err(|_| format!("invalid integer value {s:?}"))
}

fn protocol_number(name: &str) -> Option<i64> {
    match name.to_ascii_lowercase().as_str() {
        "icmp" => Some(1),
        "tcp" => Some(6),
        "udp" => Some(17),
        _ => None,
    }
}

#[derive(Debug)]
enum ValueError {
    Syntax(String),
    Inverted(i64, i64),
}

fn parse_range(s: &str) -> std::result::Result<(i64, i64), ValueError> {
    let inner = &s[1..s.len() - 1];
    let bounds: Vec<&str> = inner.split(',').collect();
    if bounds.len() != 2 {
        return Err(ValueError::Syntax(format!(
            "range {s:?} needs exactly two bounds"
        )));
    }
    let lo = parse_scalar(bounds[0]).map_err(ValueError::Syntax)?;
    let hi = parse_scalar(bounds[1]).map_err(ValueError::Syntax)?;
    if lo > hi {
        return Err(ValueError::Inverted(lo, hi));
    }
    Ok((lo, hi))
}

fn parse_value(attr: &Attribute, raw: &str) -> std::result::Result<(i64, i64), ValueError> {
    let s = raw.trim();
    if s.is_empty() {
        return Err(ValueError::Syntax(format!("empty value for {}", attr.name)));
    }
    if s.eq_ignore_ascii_case("any") || s == "*" {
        return Ok((attr.lo, attr.hi));
    }
    if attr.name == "protocol" {
        if let Some(p) = protocol_number(s) {
            return Ok((p, p));
        }
    }
    if s.starts_with('[') && s.ends_with(']') {
        return parse_range(s);
    }
    // a.b.c.[x,y]
    if let Some(open) = s.find('[') {
        let prefix = &s[..open];
        if !prefix.ends_with('.') || !s.ends_with(']') || prefix.matches('.').count() != 3 {
            return Err(ValueError::Syntax(format!("malformed address range {s:?}")));
        }
        let (lo, hi) = parse_range(&s[open..])?;
        if !(0..=255).contains(&lo) || !(0..=255).contains(&hi) {
            return Err(ValueError::Syntax(format!(
                "octet range out of 0..255 in {s:?}"
            )));
        }
        let base = parse_ipv4(&format!("{prefix}0"))
            .ok_or_else(|| ValueError::Syntax(format!("invalid address prefix {prefix:?}")))?;
        return Ok((base + lo, base + hi));
    }
    let v = parse_scalar(s).map_err(ValueError::Syntax)?;
    Ok((v, v))
}

/// Parses `name=[lo,hi]` entries separated by whitespace or `;`.
pub fn parse_domain(spec: &str) -> Result<DomainSpec> {
    let spec = spec.trim();
    if spec.eq_ignore_ascii_case("ipv4") {
        return Ok(DomainSpec::ipv4_five_tuple());
    }
    let mut attributes = Vec::new();
    for entry in split_top_level(spec, |c| c.is_whitespace() || c == ';') {
        let entry = entry.trim();
        if entry.is_empty() {
            continue;
        }
        let (name, range) = entry
            .split_once('=')
            .ok_or_else(|| Error::Domain(format!("expected name=[lo,hi], got {entry:?}")))?;
        let range = range.trim();
        if !(range.starts_with('[') && range.ends_with(']')) {
            return Err(Error::Domain(format!(
                "expected [lo,hi] bounds, got {range:?}"
            )));
        }
        let (lo, hi) = parse_range(range).map_err(|e| match e {
            ValueError::Syntax(m) => Error::Domain(m),
            ValueError::Inverted(lo, hi) => {
                Error::Domain(format!("attribute {name} has lo {lo} > hi {hi}"))
            }
        })?;
        attributes.push(Attribute {
            name: name.trim().to_string(),
            lo,
            hi,
        });
    }
    DomainSpec::new(attributes)
}

fn format_domain(domain: &DomainSpec) -> String {
    let parts: Vec<String> = domain
        .attributes()
        .iter()
        .map(|a| format!("{}=[{},{}]", a.name, a.lo, a.hi))
        .collect();
    parts.join(" ")
}

fn parse_order(raw: &str, line: usize) -> Result<(usize, Option<usize>)> {
    let parse = |s: &str| {
        s.trim().parse::<usize>().map_err(|_| Error::Parse {
            line,
            message: format!("invalid rule order {raw:?}"),
        })
    };
    let (order, sub) = match raw.trim().split_once('.') {
        Some((o, s)) => (parse(o)?, Some(parse(s)?)),
        None => (parse(raw)?, None),
    };
    if order == 0 || sub == Some(0) {
        return Err(Error::Parse {
            line,
            message: format!("rule order {raw:?} must be positive"),
        });
    }
    Ok((order, sub))
}

/// Parses a rule file whose domain defaults to the IPv4 5-tuple.
pub fn parse_ruleset(text: &str) -> Result<Ruleset> {
    parse_ruleset_in(text, &DomainSpec::ipv4_five_tuple())
}

/// Parses a rule file; a `@domain` header overrides `fallback`.
pub fn parse_ruleset_in(text: &str, fallback: &DomainSpec) -> Result<Ruleset> {
    let mut domain: Option<DomainSpec> = None;
    let mut groups: Vec<(usize, Option<usize>, Vec<Region>, Decision)> = Vec::new();
    let mut last_key: Option<(usize, usize)> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        if let Some(rest) = content.strip_prefix("@domain") {
            if domain.is_some() || !groups.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "@domain must appear once, before any rule".into(),
                });
            }
            domain = Some(parse_domain(rest).map_err(|e| Error::Parse {
                line,
                message: e.to_string(),
            })?);
            continue;
        }
        let domain = domain.get_or_insert_with(|| fallback.clone());

        let fields = split_top_level(content, |c| c == ',');
        let p = domain.arity();
        if fields.len() != p + 2 {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} comma-separated fields (order, {} attributes, decision), found {}",
                    p + 2,
                    p,
                    fields.len()
                ),
            });
        }
        let (order, sub) = parse_order(fields[0], line)?;
        let decision: Decision = fields[p + 1].parse().map_err(|_| Error::Parse {
            line,
            message: format!("invalid decision {:?}", fields[p + 1].trim()),
        })?;

        let mut intervals = Vec::with_capacity(p);
        for (attr, raw) in domain.attributes().iter().zip(&fields[1..=p]) {
            let (lo, hi) = parse_value(attr, raw).map_err(|e| match e {
                ValueError::Syntax(message) => Error::Parse { line, message },
                ValueError::Inverted(lo, hi) => Error::Validation(format!(
                    "line {line}: range [{lo},{hi}] for {} has lo > hi",
                    attr.name
                )),
            })?;
            if lo < attr.lo || hi > attr.hi {
                return Err(Error::Domain(format!(
                    "line {line}: [{lo},{hi}] lies outside {} bounds [{},{}]",
                    attr.name, attr.lo, attr.hi
                )));
            }
            intervals.push(Interval::new(lo, hi)?);
        }
        let region = Region::new(intervals);

        let key = (order, sub.unwrap_or(0));
        if let Some(prev) = last_key {
            if key <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("rule order {} is not increasing", fields[0].trim()),
                });
            }
        }
        last_key = Some(key);

        match groups.last_mut() {
            Some((o, Some(_), regions, d)) if *o == order && sub.is_some() => {
                if *d != decision {
                    return Err(Error::Parse {
                        line,
                        message: format!("boxes of rule {order} disagree on the decision"),
                    });
                }
                regions.push(region);
            }
            Some((o, ..)) if *o == order => {
                return Err(Error::Parse {
                    line,
                    message: format!("rule {order} mixes plain and sub-indexed records"),
                });
            }
            _ => groups.push((order, sub, vec![region], decision)),
        }
    }

    let domain = domain.unwrap_or_else(|| fallback.clone());
    let mut rules = Vec::with_capacity(groups.len());
    for (order, _, regions, decision) in groups {
        let condition =
            Condition::new(regions).map_err(|e| Error::Validation(format!("rule {order}: {e}")))?;
        rules.push(Rule::new(order, condition, decision));
    }
    Ruleset::new(domain, rules)
}

fn format_value(attr: &Attribute, iv: &Interval) -> String {
    if iv.lo() == attr.lo && iv.hi() == attr.hi {
        "any".to_string()
    } else if iv.is_point() {
        iv.lo().to_string()
    } else {
        format!("[{},{}]", iv.lo(), iv.hi())
    }
}

/// Deterministic text form; multi-box rules become `N.1`, `N.2`, … records.
pub fn serialize_ruleset(ruleset: &Ruleset) -> String {
    let domain = ruleset.domain();
    let mut out = String::new();
    writeln!(out, "@domain {}", format_domain(domain)).unwrap();
    for rule in ruleset.rules() {
        let multi = rule.condition().len() > 1;
        for (k, region) in rule.condition().iter().enumerate() {
            if multi {
                write!(out, "{}.{}", rule.position(), k + 1).unwrap();
            } else {
                write!(out, "{}", rule.position()).unwrap();
            }
            for (attr, iv) in domain.attributes().iter().zip(region.intervals()) {
                write!(out, ", {}", format_value(attr, iv)).unwrap();
            }
            writeln!(out, ", {}", rule.decision()).unwrap();
        }
    }
    out
}

/// Hex SHA-256 of the input bytes, used as the report's input digest.
pub fn digest(input: &[u8]) -> String {
    hex::encode(Sha256::digest(input))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            other => Err(Error::Validation(format!(
                "unknown report format {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleRecord {
    pub order: usize,
    pub condition: Vec<Region>,
    pub decision: Decision,
}

/// JSON report layout. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub version: String,
    #[serde(default)]
    pub input_digest: Option<String>,
    pub algorithm: Algorithm,
    pub domain: DomainSpec,
    pub warnings: Vec<Warning>,
    pub rules: Vec<RuleRecord>,
    pub stats: AuditStats,
    /// 0 when no warnings, 1 otherwise.
    pub exit_hint: u8,
}

impl ReportDocument {
    pub fn new(report: &AuditReport, input_digest: Option<String>) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            version: TOOL_VERSION.to_string(),
            input_digest,
            algorithm: report.algorithm,
            domain: report.transformed.domain().clone(),
            warnings: report.warnings.clone(),
            rules: report
                .transformed
                .rules()
                .iter()
                .map(|r| RuleRecord {
                    order: r.position(),
                    condition: r.condition().regions().to_vec(),
                    decision: r.decision(),
                })
                .collect(),
            stats: report.stats,
            exit_hint: exit_hint(report),
        }
    }

    pub fn to_report(&self) -> Result<AuditReport> {
        if self.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Report(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        let mut rules = Vec::with_capacity(self.rules.len());
        for rec in &self.rules {
            let condition = Condition::new(rec.condition.clone())?;
            rules.push(Rule::new(rec.order, condition, rec.decision));
        }
        Ok(AuditReport {
            algorithm: self.algorithm,
            transformed: Ruleset::new(self.domain.clone(), rules)?,
            warnings: self.warnings.clone(),
            stats: self.stats,
        })
    }
}

pub fn exit_hint(report: &AuditReport) -> u8 {
    u8::from(report.has_warnings())
}

fn describe_region(domain: &DomainSpec, region: &Region) -> String {
    let terms: Vec<String> = domain
        .attributes()
        .iter()
        .zip(region.intervals())
        .filter(|(a, iv)| !(iv.lo() == a.lo && iv.hi() == a.hi))
        .map(|(a, iv)| format!("{} in {}", a.name, iv))
        .collect();
    if terms.is_empty() {
        "any".to_string()
    } else {
        format!("({})", terms.join(" and "))
    }
}

fn render_text(report: &AuditReport, input_digest: Option<&str>) -> String {
    let domain = report.transformed.domain();
    let mut out = String::new();
    writeln!(out, "algorithm: {}", report.algorithm).unwrap();
    if let Some(d) = input_digest {
        writeln!(out, "input: sha256:{d}").unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "/* resulting rules */").unwrap();
    for rule in report.transformed.rules() {
        let boxes: Vec<String> = rule
            .condition()
            .iter()
            .map(|r| describe_region(domain, r))
            .collect();
        let cond = if boxes.len() == 1 {
            boxes[0].clone()
        } else {
            format!("{{{}}}", boxes.join(", "))
        };
        writeln!(out, "R{}: {} -> {}", rule.position(), cond, rule.decision()).unwrap();
    }
    writeln!(out).unwrap();
    writeln!(out, "/* warnings */").unwrap();
    if report.warnings.is_empty() {
        writeln!(out, "none").unwrap();
    }
    for w in &report.warnings {
        writeln!(out, "R{}: {}", w.rule, w.kind).unwrap();
    }
    writeln!(out).unwrap();
    let s = &report.stats;
    writeln!(
        out,
        "rules: {} -> {}, boxes: {} (peak {}), elapsed: {:.3} ms",
        s.input_rules, s.output_rules, s.output_boxes, s.peak_boxes, s.elapsed_ms
    )
    .unwrap();
    writeln!(out, "exit status: {}", exit_hint(report)).unwrap();
    out
}

pub fn emit_report(
    report: &AuditReport,
    format: ReportFormat,
    input_digest: Option<&str>,
) -> String {
    match format {
        ReportFormat::Json => {
            let doc = ReportDocument::new(report, input_digest.map(str::to_string));
            let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::Text => render_text(report, input_digest),
    }
}

pub fn parse_report(json: &str) -> Result<ReportDocument> {
    serde_json::from_str(json).map_err(|e| Error::Report(e.to_string()))
}
