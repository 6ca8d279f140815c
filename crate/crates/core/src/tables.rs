//! Class-number records, their line-delimited JSON format, and the audit
//! that runs every applicable congruence check on them.
//!
//! One record per line:
//!
//! ```text
//! {"field":{"kind":"cyclotomic","u":59},"h_minus":[[3,1],[59,1],[233,1]],"h_plus":[],
//!  "subfield_h":[{"disc":-59,"h":3}],"source":"washington-p412"}
//! ```
//!
//! Integers that do not fit in 64 bits are written as decimal strings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use serde_json::json;

use crate::abelian::{self, AbelianFieldSpec, DEFAULT_SUBGROUP_LIMIT};
use crate::arith::{self, Primality};
use crate::bounds::{self, BoundResult};
use crate::congruence::{
    self, corollary1_verdict, odd_part, theorem1_audit, theorem2_audit, DescentTarget,
    RankHypothesis, Status, Theorem, TwoPart, Verdict,
};
use crate::error::{Error, Result};

/// Nonnegative integer read from a JSON number or a decimal string.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nat(pub BigUint);

/// Signed counterpart of [`Nat`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Int(pub BigInt);

#[derive(Deserialize)]
#[serde(untagged)]
enum RawInt {
    U(u64),
    I(i64),
    S(String),
}

impl<'de> Deserialize<'de> for Int {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match RawInt::deserialize(d)
            .map_err(|_| de::Error::custom("expected an integer or a decimal string"))?
        {
            RawInt::U(u) => Ok(Int(BigInt::from(u))),
            RawInt::I(i) => Ok(Int(BigInt::from(i))),
            RawInt::S(s) => s
                .trim()
                .parse::<BigInt>()
                .map(Int)
                .map_err(|_| de::Error::custom(format!("\"{s}\" is not a decimal integer"))),
        }
    }
}

impl<'de> Deserialize<'de> for Nat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let Int(v) = Int::deserialize(d)?;
        v.to_biguint()
            .map(Nat)
            .ok_or_else(|| de::Error::custom(format!("{v} is negative")))
    }
}

impl Serialize for Nat {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.to_u64() {
            Some(u) => s.serialize_u64(u),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl Serialize for Int {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0.to_i64() {
            Some(i) => s.serialize_i64(i),
            None => s.serialize_str(&self.0.to_string()),
        }
    }
}

impl From<u64> for Nat {
    fn from(v: u64) -> Self {
        Nat(BigUint::from(v))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Real,
    Imaginary,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DescentData {
    pub n: u64,
    pub f_abs_disc: Nat,
    pub f_degree: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldDescriptor {
    /// `Q(zeta_u)`.
    Cyclotomic { u: u64 },
    /// `Q(zeta_l + zeta_l^{-1})`, `l` an odd prime.
    RealCyclotomic { l: u64 },
    /// An abelian field identified by degree and conductor.
    Abelian {
        degree: u64,
        conductor: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        abs_disc: Option<Nat>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        signature: Option<Signature>,
    },
    /// A Galois field known only through its degree and descent data.
    Galois {
        degree: u64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        descent: Vec<DescentData>,
    },
}

impl FieldDescriptor {
    pub fn degree(&self) -> u64 {
        match self {
            FieldDescriptor::Cyclotomic { u } => arith::euler_phi(*u),
            FieldDescriptor::RealCyclotomic { l } => (l - 1) / 2,
            FieldDescriptor::Abelian { degree, .. } | FieldDescriptor::Galois { degree, .. } => *degree,
        }
    }
}

impl fmt::Display for FieldDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldDescriptor::Cyclotomic { u } => write!(f, "Q(zeta_{u})"),
            FieldDescriptor::RealCyclotomic { l } => write!(f, "Q(zeta_{l})^+"),
            FieldDescriptor::Abelian { degree, conductor, abs_disc, signature } => {
                write!(f, "abelian N={degree} f={conductor}")?;
                if let Some(d) = abs_disc {
                    write!(f, " |D|={}", d.0)?;
                }
                if let Some(s) = signature {
                    write!(f, " {}", if *s == Signature::Real { "real" } else { "imaginary" })?;
                }
                Ok(())
            }
            FieldDescriptor::Galois { degree, .. } => write!(f, "galois N={degree}"),
        }
    }
}

/// Known class number information for a subfield, keyed by discriminant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubfieldClassNumber {
    pub disc: Int,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Nat>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub divisible_by: Vec<Nat>,
}

pub type FactorList = Vec<(Nat, u32)>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassNumberRecord {
    pub field: FieldDescriptor,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_minus: Option<FactorList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_plus: Option<FactorList>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<FactorList>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub p_ranks: BTreeMap<String, u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub subfield_h: Vec<SubfieldClassNumber>,
    /// Values taken from conjectural tables.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub conjectural: bool,
    pub source: String,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ProbablePrimePolicy {
    #[default]
    Allow,
    Reject,
}

#[derive(Clone, Debug, Default)]
pub struct ParseOptions {
    pub probable_primes: ProbablePrimePolicy,
}

/// Parses line-delimited records; blank lines are skipped.
pub fn parse_records(input: &str) -> Result<Vec<ClassNumberRecord>> {
    parse_records_with(input, &ParseOptions::default())
}

pub fn parse_records_with(input: &str, opts: &ParseOptions) -> Result<Vec<ClassNumberRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ClassNumberRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            line: line_no,
            message: format!("column {}: {}", e.column(), strip_position(&e.to_string())),
        })?;
        validate(&rec, opts).map_err(|message| Error::Parse { line: line_no, message })?;
        out.push(rec);
    }
    Ok(out)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

fn validate(rec: &ClassNumberRecord, opts: &ParseOptions) -> std::result::Result<(), String> {
    if rec.h_minus.is_none() && rec.h_plus.is_none() && rec.h.is_none() {
        return Err("record needs at least one of h_minus, h_plus, h".into());
    }
    match &rec.field {
        FieldDescriptor::Cyclotomic { u } => {
            if *u < 3 || u % 4 == 2 {
                return Err(format!("cyclotomic modulus {u} must be >= 3 and not 2 mod 4"));
            }
        }
        FieldDescriptor::RealCyclotomic { l } => {
            if *l < 5 || !arith::is_prime_u64(*l) {
                return Err(format!("real cyclotomic index {l} must be an odd prime >= 5"));
            }
        }
        FieldDescriptor::Abelian { degree, conductor, abs_disc, .. } => {
            if *degree == 0 || *conductor == 0 || conductor % 4 == 2 {
                return Err(format!("invalid abelian descriptor: degree {degree}, conductor {conductor}"));
            }
            let phi = arith::euler_phi(*conductor);
            if phi % degree != 0 {
                return Err(format!(
                    "degree {degree} does not divide phi({conductor}) = {phi}; no such subfield"
                ));
            }
            if abs_disc.as_ref().is_some_and(|d| d.0.is_zero()) {
                return Err("abs_disc must be positive".into());
            }
        }
        FieldDescriptor::Galois { degree, descent } => {
            if *degree == 0 {
                return Err("degree must be positive".into());
            }
            for d in descent {
                if !arith::is_prime_u64(d.n) || degree % d.n != 0 || d.f_degree * d.n != *degree {
                    return Err(format!(
                        "descent data n = {}, [F:Q] = {} inconsistent with degree {degree}",
                        d.n, d.f_degree
                    ));
                }
            }
        }
    }
    for (name, list) in [("h_minus", &rec.h_minus), ("h_plus", &rec.h_plus), ("h", &rec.h)] {
        if let Some(list) = list {
            validate_factors(name, list, opts)?;
        }
    }
    for (key, r) in &rec.p_ranks {
        let p: BigUint = key.parse().map_err(|_| format!("p_ranks key \"{key}\" is not an integer"))?;
        if !arith::is_prime(&p) {
            return Err(format!("p_ranks key {p} is not prime"));
        }
        if *r == 0 {
            return Err(format!("rank of {p} must be positive"));
        }
        let v = ClassData::from_record(rec).exponent(&p);
        if v == 0 {
            return Err(format!("p_ranks lists {p}, which divides no listed class number"));
        }
        if *r > v {
            return Err(format!("rank {r} of {p} exceeds its exponent {v}"));
        }
    }
    for s in &rec.subfield_h {
        if s.h.is_none() && s.divisible_by.is_empty() {
            return Err(format!("subfield_h entry for disc {} needs h or divisible_by", s.disc.0));
        }
        if s.h.as_ref().is_some_and(|h| h.0.is_zero()) {
            return Err("subfield class number must be positive".into());
        }
        for p in &s.divisible_by {
            if !arith::is_prime(&p.0) {
                return Err(format!("divisible_by entry {} is not prime", p.0));
            }
        }
    }
    Ok(())
}

fn validate_factors(name: &str, list: &FactorList, opts: &ParseOptions) -> std::result::Result<(), String> {
    let mut seen = BTreeSet::new();
    for (p, e) in list {
        if *e == 0 {
            return Err(format!("{name}: exponent of {} must be positive", p.0));
        }
        if !seen.insert(p.0.clone()) {
            return Err(format!("{name}: prime {} listed twice", p.0));
        }
        match arith::primality(&p.0) {
            Primality::Prime => {}
            Primality::ProbablePrime if opts.probable_primes == ProbablePrimePolicy::Allow => {}
            Primality::ProbablePrime => {
                return Err(format!("{name}: {} is only a probable prime", p.0));
            }
            Primality::Composite => {
                let msg = if p.0 <= BigUint::one() {
                    format!("{name}: {} is not prime", p.0)
                } else {
                    format!("{name}: {} = {} is not prime", p.0, arith::factorize(&p.0))
                };
                return Err(msg);
            }
        }
    }
    Ok(())
}

/// Canonical line-delimited form.
pub fn serialize_records(records: &[ClassNumberRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(&canonical(r)).expect("records serialize"));
        out.push('\n');
    }
    out
}

fn canonical(r: &ClassNumberRecord) -> ClassNumberRecord {
    let mut r = r.clone();
    for list in [&mut r.h_minus, &mut r.h_plus, &mut r.h].into_iter().flatten() {
        list.sort();
    }
    for s in &mut r.subfield_h {
        s.divisible_by.sort();
    }
    r
}

const BUILTIN: &str = include_str!("../data/builtin_dataset.jsonl");

/// The embedded dataset of published class-number examples.
pub fn builtin_paper_dataset() -> Vec<ClassNumberRecord> {
    parse_records(BUILTIN).expect("embedded dataset parses")
}

/// The embedded dataset in its on-disk form.
pub fn builtin_dataset_text() -> &'static str {
    BUILTIN
}

/// Class-number exponents assembled from a record.
#[derive(Clone, Debug)]
struct ClassData {
    exponents: BTreeMap<BigUint, u32>,
    /// False when only `h^-` is known.
    exact: bool,
}

impl ClassData {
    fn from_record(rec: &ClassNumberRecord) -> Self {
        let mut exponents = BTreeMap::new();
        let mut add = |list: &FactorList| {
            for (p, e) in list {
                *exponents.entry(p.0.clone()).or_insert(0) += e;
            }
        };
        let exact = if let Some(h) = &rec.h {
            add(h);
            true
        } else {
            let real = matches!(rec.field, FieldDescriptor::RealCyclotomic { .. })
                || matches!(rec.field, FieldDescriptor::Abelian { signature: Some(Signature::Real), .. });
            if let Some(m) = &rec.h_minus {
                add(m);
            }
            if let Some(p) = &rec.h_plus {
                add(p);
            }
            rec.h_plus.is_some() && (rec.h_minus.is_some() || real)
        };
        ClassData { exponents, exact }
    }

    fn exponent(&self, p: &BigUint) -> u32 {
        self.exponents.get(p).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, Default)]
pub struct AuditOptions {
    /// Process records on the rayon pool.
    pub parallel: bool,
    /// Cap on subgroup enumeration when resolving fields.
    pub subgroup_limit: Option<usize>,
}

/// One verdict of the audit.
#[derive(Clone, Debug)]
pub struct AuditRow {
    pub record: usize,
    pub label: String,
    pub p: BigUint,
    pub n: Option<u64>,
    pub conjectural: bool,
    pub verdict: Verdict,
}

#[derive(Clone, Debug)]
pub struct RecordSummary {
    pub record: usize,
    pub label: String,
    pub source: String,
    pub degree: u64,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub consistent: usize,
    pub violation: usize,
    pub inconclusive: usize,
}

impl Tally {
    fn add(&mut self, s: Status) {
        match s {
            Status::Consistent => self.consistent += 1,
            Status::Violation => self.violation += 1,
            Status::Inconclusive => self.inconclusive += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.consistent + self.violation + self.inconclusive
    }
}

#[derive(Clone, Debug)]
pub struct AuditReport {
    pub rows: Vec<AuditRow>,
    pub records: Vec<RecordSummary>,
    pub environment: Vec<String>,
}

impl AuditReport {
    pub fn tally(&self) -> Tally {
        let mut t = Tally::default();
        for r in &self.rows {
            t.add(r.verdict.status);
        }
        t
    }

    pub fn tally_by_theorem(&self) -> BTreeMap<Theorem, Tally> {
        let mut m: BTreeMap<Theorem, Tally> = BTreeMap::new();
        for r in &self.rows {
            m.entry(r.verdict.theorem()).or_default().add(r.verdict.status);
        }
        m
    }

    pub fn violations(&self) -> usize {
        self.tally().violation
    }

    /// Human-readable table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let label_w = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(5).max(5);
        let p_w = self.rows.iter().map(|r| r.p.to_string().len()).max().unwrap_or(1).max(1);
        out.push_str(&format!(
            "{:>3}  {:<label_w$}  {:>p_w$}  {:<10}  {:>4}  {:<12}  detail\n",
            "#", "field", "p", "theorem", "n", "status"
        ));
        for r in &self.rows {
            let n = r.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
            let detail = r.verdict.witness.summary();
            out.push_str(&format!(
                "{:>3}  {:<label_w$}  {:>p_w$}  {:<10}  {:>4}  {:<12}  {}\n",
                r.record + 1,
                r.label,
                r.p.to_string(),
                r.verdict.theorem().to_string(),
                n,
                r.verdict.status.to_string(),
                detail
            ));
        }
        for rec in &self.records {
            for note in &rec.notes {
                out.push_str(&format!("note: record {} ({}): {}\n", rec.record + 1, rec.label, note));
            }
        }
        for e in &self.environment {
            out.push_str(&format!("env: {e}\n"));
        }
        out.push_str(&self.summary_line());
        out.push('\n');
        out
    }

    pub fn summary_line(&self) -> String {
        let t = self.tally();
        format!(
            "summary: {} records, {} verdicts: {} consistent, {} violations, {} inconclusive",
            self.records.len(),
            t.total(),
            t.consistent,
            t.violation,
            t.inconclusive
        )
    }

    /// One JSON object per verdict, then one summary object.
    pub fn render_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let w = &r.verdict.witness;
            let bound = w.bound.as_ref().map(|b| {
                json!({
                    "abs_disc": b.abs_disc.to_string(),
                    "m": b.m,
                    "upper": b.display_upper(),
                    "exact": b.is_exact(),
                })
            });
            let obj = json!({
                "record": r.record + 1,
                "field": r.label,
                "p": r.p.to_string(),
                "theorem": r.verdict.theorem(),
                "n": r.n,
                "status": r.verdict.status,
                "conjectural": r.conjectural,
                "witness": {
                    "modulus": w.modulus,
                    "ranks": w.ranks,
                    "multiplicity_exact": w.multiplicity_exact,
                    "n": w.n,
                    "rank_used": w.rank_used,
                    "order": w.order,
                    "two_part": w.two_part,
                    "bound": bound,
                    "missing": w.missing,
                    "notes": w.notes,
                },
            });
            out.push_str(&obj.to_string());
            out.push('\n');
        }
        let t = self.tally();
        let by_theorem: BTreeMap<String, serde_json::Value> = self
            .tally_by_theorem()
            .into_iter()
            .map(|(k, v)| {
                (
                    k.to_string(),
                    json!({"consistent": v.consistent, "violation": v.violation, "inconclusive": v.inconclusive}),
                )
            })
            .collect();
        let notes: Vec<serde_json::Value> = self
            .records
            .iter()
            .flat_map(|r| r.notes.iter().map(move |n| json!({"record": r.record + 1, "note": n})))
            .collect();
        let summary = json!({
            "summary": {
                "records": self.records.len(),
                "verdicts": t.total(),
                "consistent": t.consistent,
                "violation": t.violation,
                "inconclusive": t.inconclusive,
                "by_theorem": by_theorem,
                "record_notes": notes,
                "environment": self.environment,
            }
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

/// Runs every applicable check on every prime of every record.
pub fn audit(records: &[ClassNumberRecord], opts: &AuditOptions) -> AuditReport {
    let work = |(i, r): (usize, &ClassNumberRecord)| audit_record(i, r, opts);
    let results: Vec<(Vec<AuditRow>, RecordSummary)> = if opts.parallel {
        records.par_iter().enumerate().map(work).collect()
    } else {
        records.iter().enumerate().map(work).collect()
    };
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (r, s) in results {
        rows.extend(r);
        summaries.push(s);
    }
    AuditReport {
        rows,
        records: summaries,
        environment: vec![
            "log in H_F is the natural logarithm; H_F is rounded up".into(),
            "primality: deterministic below 2^64, Miller-Rabin with 41 bases above".into(),
            "unknown ranks range over 1..=v_p; v_p from h^- alone is a lower bound".into(),
            "a prime dividing h^- is taken to divide h(K)".into(),
        ],
    }
}

/// Candidate abelian fields `K` matching the record, or why none could be found.
fn resolve_fields(field: &FieldDescriptor, limit: usize) -> std::result::Result<Vec<AbelianFieldSpec>, String> {
    match field {
        FieldDescriptor::Cyclotomic { u } => {
            AbelianFieldSpec::cyclotomic(*u).map(|k| vec![k]).map_err(|e| e.to_string())
        }
        FieldDescriptor::RealCyclotomic { l } => {
            AbelianFieldSpec::real_cyclotomic(*l).map(|k| vec![k]).map_err(|e| e.to_string())
        }
        FieldDescriptor::Abelian { degree, conductor, abs_disc, signature } => {
            let list = abelian::subfields_with_limit(*conductor, limit).map_err(|e| e.to_string())?;
            let found: Vec<AbelianFieldSpec> = list
                .fields
                .into_iter()
                .filter(|k| k.degree() == *degree && k.conductor() == *conductor)
                .filter(|k| abs_disc.as_ref().is_none_or(|d| k.abs_discriminant() == &d.0))
                .filter(|k| match signature {
                    Some(Signature::Real) => !k.is_imaginary(),
                    Some(Signature::Imaginary) => k.is_imaginary(),
                    None => true,
                })
                .collect();
            if found.is_empty() {
                let why = if list.complete { "" } else { " (subgroup enumeration truncated)" };
                Err(format!("no subfield of Q(zeta_{conductor}) matches the descriptor{why}"))
            } else {
                Ok(found)
            }
        }
        FieldDescriptor::Galois { .. } => Err("field is not given as an abelian field".into()),
    }
}

/// Subfields of degree `d` across all candidate fields, as signed discriminants.
fn subfield_discs(fields: &[AbelianFieldSpec], d: u64, limit: usize) -> Option<BTreeSet<BigInt>> {
    let mut out = BTreeSet::new();
    for k in fields {
        let list = k.subfields(limit);
        if !list.complete {
            return None;
        }
        out.extend(list.fields.iter().filter(|f| f.degree() == d).map(|f| f.discriminant()));
    }
    Some(out)
}

fn two_part_for(
    p: &BigUint,
    entries: &[SubfieldClassNumber],
    l_discs: Option<&BTreeSet<BigInt>>,
) -> TwoPart {
    let relevant: Vec<&SubfieldClassNumber> = entries
        .iter()
        .filter(|e| l_discs.is_none_or(|s| s.contains(&e.disc.0)))
        .collect();
    let unverified = if l_discs.is_none() { " (subfield not verified)" } else { "" };
    for e in &relevant {
        let divides = e.h.as_ref().is_some_and(|h| (&h.0 % p).is_zero()) || e.divisible_by.iter().any(|q| &q.0 == p);
        if divides {
            let what = match &e.h {
                Some(h) => format!("h = {}", h.0),
                None => format!("{p} | h"),
            };
            return TwoPart::Asserted(format!("L of discriminant {}, {what}{unverified}", e.disc.0));
        }
    }
    if let Some(discs) = l_discs {
        let all_known_false = !discs.is_empty()
            && discs.iter().all(|d| {
                relevant.iter().any(|e| e.disc.0 == *d && e.h.as_ref().is_some_and(|h| !(&h.0 % p).is_zero()))
            });
        if all_known_false {
            let list: Vec<String> = discs.iter().map(|d| d.to_string()).collect();
            return TwoPart::KnownFalse(format!("class numbers of L with discriminant {} are prime to {p}", list.join(", ")));
        }
    }
    TwoPart::Unknown
}

fn audit_record(index: usize, rec: &ClassNumberRecord, opts: &AuditOptions) -> (Vec<AuditRow>, RecordSummary) {
    let limit = opts.subgroup_limit.unwrap_or(DEFAULT_SUBGROUP_LIMIT);
    let label = rec.field.to_string();
    let degree = rec.field.degree();
    let data = ClassData::from_record(rec);
    let mut notes = Vec::new();
    let fields = match resolve_fields(&rec.field, limit) {
        Ok(f) => {
            if f.len() > 1 {
                notes.push(format!("{} abelian fields match; checks use all of them", f.len()));
            }
            Some(f)
        }
        Err(e) => {
            if !matches!(rec.field, FieldDescriptor::Galois { .. }) {
                notes.push(e);
            }
            None
        }
    };
    if !data.exact {
        notes.push("exponents come from h^- alone and are lower bounds".into());
    }

    let alpha0 = degree.trailing_zeros();
    let n1 = odd_part(degree);
    let l_discs = if degree % 2 == 0 && n1 > 1 {
        fields.as_ref().and_then(|f| subfield_discs(f, 1 << alpha0, limit))
    } else {
        None
    };
    if let Some(discs) = &l_discs {
        for e in &rec.subfield_h {
            if !discs.contains(&e.disc.0) {
                notes.push(format!(
                    "subfield_h entry with discriminant {} is not a subfield of degree {}",
                    e.disc.0,
                    1u64 << alpha0
                ));
            }
        }
    }

    // one bound per odd prime n | N, shared by every p
    let mut targets: Vec<(u64, std::result::Result<BoundResult, String>)> = Vec::new();
    for n in arith::prime_divisors(degree).into_iter().filter(|&n| n > 2) {
        let bound = match (&fields, &rec.field) {
            (Some(ks), _) => descent_bound(ks, n),
            (None, FieldDescriptor::Galois { descent, .. }) => match descent.iter().find(|d| d.n == n) {
                Some(d) => bounds::class_number_bound(&d.f_abs_disc.0, d.f_degree).map_err(|e| e.to_string()),
                None => Err(format!("no descent data for n = {n}")),
            },
            (None, _) => Err("field could not be resolved".into()),
        };
        targets.push((n, bound));
    }

    let mut rows = Vec::new();
    for (p, &v) in &data.exponents {
        let hyp = match rec.p_ranks.get(&p.to_string()) {
            Some(&r) => RankHypothesis::known(p.clone(), r, v),
            None => RankHypothesis::unknown(p.clone(), v),
        };
        let mut hyp = match hyp {
            Ok(h) => h,
            Err(_) => continue,
        };
        if !data.exact && rec.p_ranks.get(&p.to_string()).is_none() {
            hyp = hyp.with_inexact_multiplicity();
        }
        let push = |rows: &mut Vec<AuditRow>, n: Option<u64>, mut v: Verdict| {
            if rec.conjectural {
                v.witness.notes.push("conjectural table value".into());
            }
            rows.push(AuditRow {
                record: index,
                label: label.clone(),
                p: p.clone(),
                n,
                conjectural: rec.conjectural,
                verdict: v,
            });
        };
        if degree % 2 == 1 && degree > 1 {
            if let Ok(v) = corollary1_verdict(degree, &hyp) {
                push(&mut rows, None, v);
            }
        } else if n1 > 1 {
            let tp = two_part_for(p, &rec.subfield_h, l_discs.as_ref());
            let tp = if fields.is_none() && !matches!(tp, TwoPart::Asserted(_)) { TwoPart::Unknown } else { tp };
            if let Ok(v) = theorem1_audit(degree, &hyp, tp) {
                push(&mut rows, None, v);
            }
        }
        for (n, bound) in &targets {
            let v = match bound {
                Ok(b) => theorem2_audit(&DescentTarget::Bound { bound: b.clone(), n: *n }, &hyp)
                    .unwrap_or_else(|e| congruence::theorem2_missing(*n, &hyp, e.to_string())),
                Err(why) => congruence::theorem2_missing(*n, &hyp, why.clone()),
            };
            push(&mut rows, Some(*n), v);
        }
    }
    let summary = RecordSummary { record: index, label, source: rec.source.clone(), degree, notes };
    (rows, summary)
}

/// Largest `H_F` over candidate fields, each with its own best descent `F`.
fn descent_bound(fields: &[AbelianFieldSpec], n: u64) -> std::result::Result<BoundResult, String> {
    let mut bounds = Vec::new();
    for k in fields {
        let f = abelian::descent_subfield(k, n).map_err(|e| e.to_string())?;
        bounds.push(bounds::field_bound(&f).map_err(|e| e.to_string())?);
    }
    congruence::max_bound(bounds).ok_or_else(|| "no candidate field".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    const U59: &str = r#"{"field":{"kind":"cyclotomic","u":59},"h_minus":[[3,1],[59,1],[233,1]],"h_plus":[],"source":"t"}"#;

    fn parse_err(line: &str) -> String {
        match parse_records(line) {
            Err(Error::Parse { message, .. }) => message,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn parses_a_cyclotomic_record() {
        let recs = parse_records(U59).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].field, FieldDescriptor::Cyclotomic { u: 59 });
        assert_eq!(recs[0].h_plus, Some(vec![]));
        assert_eq!(recs[0].field.degree(), 58);
    }

    #[test]
    fn empty_input_is_empty() {
        assert!(parse_records("").unwrap().is_empty());
        assert!(parse_records("\n  \n").unwrap().is_empty());
    }

    #[test]
    fn rejects_composite_factor() {
        let line = r#"{"field":{"kind":"cyclotomic","u":59},"h_minus":[[91,1]],"source":"t"}"#;
        assert!(parse_err(line).contains("91 = 7 · 13 is not prime"));
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let text = format!("{U59}\n\n{{\"field\":{{\"kind\":\"cyclotomic\",\"u\":59}},\"h\":[[3,1]],\"source\":\"t\",\"extra\":1}}\n");
        match parse_records(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("unknown field `extra`"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let bad_kind = r#"{"field":{"kind":"cyclotomic","u":59,"l":3},"h":[[3,1]],"source":"t"}"#;
        assert!(parse_err(bad_kind).contains("unknown field"));
        assert!(parse_err("{not json").contains("column"));
    }

    #[test]
    fn validation_failures() {
        let no_h = r#"{"field":{"kind":"cyclotomic","u":59},"source":"t"}"#;
        assert!(parse_err(no_h).contains("at least one"));
        let bad_u = r#"{"field":{"kind":"cyclotomic","u":6},"h":[[3,1]],"source":"t"}"#;
        assert!(parse_err(bad_u).contains("2 mod 4"));
        let bad_l = r#"{"field":{"kind":"real_cyclotomic","l":15},"h_plus":[[3,1]],"source":"t"}"#;
        assert!(parse_err(bad_l).contains("odd prime"));
        let bad_deg = r#"{"field":{"kind":"abelian","degree":10,"conductor":9081},"h":[[3,1]],"source":"t"}"#;
        assert!(parse_err(bad_deg).contains("does not divide"));
        let dup = r#"{"field":{"kind":"cyclotomic","u":59},"h":[[3,1],[3,2]],"source":"t"}"#;
        assert!(parse_err(dup).contains("twice"));
        let zero = r#"{"field":{"kind":"cyclotomic","u":59},"h":[[3,0]],"source":"t"}"#;
        assert!(parse_err(zero).contains("positive"));
        let rank = r#"{"field":{"kind":"cyclotomic","u":59},"h":[[3,1]],"p_ranks":{"3":2},"source":"t"}"#;
        assert!(parse_err(rank).contains("exceeds"));
        let neg = r#"{"field":{"kind":"cyclotomic","u":59},"h":[[-3,1]],"source":"t"}"#;
        assert!(parse_err(neg).contains("negative"));
        let descent = r#"{"field":{"kind":"galois","degree":10,"descent":[{"n":3,"f_abs_disc":5,"f_degree":2}]},"h":[[3,1]],"source":"t"}"#;
        assert!(parse_err(descent).contains("inconsistent"));
    }

    #[test]
    fn big_integers_as_strings() {
        let line = r#"{"field":{"kind":"cyclotomic","u":167},"h_minus":[[11,1],["5123189985484229035947419",1]],"source":"t"}"#;
        let recs = parse_records(line).unwrap();
        let text = serialize_records(&recs);
        assert!(text.contains("\"5123189985484229035947419\""));
        assert_eq!(parse_records(&text).unwrap(), recs);
    }

    #[test]
    fn probable_prime_policy() {
        let big = "170141183460469231731687303715884105727"; // 2^127 - 1
        let line = format!(
            r#"{{"field":{{"kind":"cyclotomic","u":59}},"h":[["{big}",1]],"source":"t"}}"#
        );
        assert!(parse_records(&line).is_ok());
        let strict = ParseOptions { probable_primes: ProbablePrimePolicy::Reject };
        assert!(parse_records_with(&line, &strict).is_err());
    }

    #[test]
    fn serialization_is_canonical_and_idempotent() {
        let recs = builtin_paper_dataset();
        let once = serialize_records(&recs);
        let again = serialize_records(&parse_records(&once).unwrap());
        assert_eq!(once, again);
        assert_eq!(parse_records(&once).unwrap().len(), recs.len());
        // factor order does not matter on input
        let shuffled = r#"{"field":{"kind":"cyclotomic","u":59},"h_minus":[[233,1],[3,1],[59,1]],"h_plus":[],"source":"t"}"#;
        assert_eq!(serialize_records(&parse_records(shuffled).unwrap()), serialize_records(&parse_records(U59).unwrap()));
    }

    #[test]
    fn builtin_dataset_contents() {
        let recs = builtin_paper_dataset();
        assert_eq!(recs.len(), 49);
        let u167 = recs.iter().find(|r| r.field == FieldDescriptor::Cyclotomic { u: 167 }).unwrap();
        let big = BigUint::from(2u32 * 83 * 22107011) * BigUint::from(1396054413416693u64) + 1u32;
        assert!(u167.h_minus.as_ref().unwrap().iter().any(|(p, _)| p.0 == big));
        assert!(recs.iter().any(|r| matches!(&r.field,
            FieldDescriptor::Abelian { abs_disc: Some(d), .. } if d.0 == BigUint::from(13689u32))
            && r.h == Some(vec![(Nat::from(13), 1)])));
        let l8563 = recs.iter().find(|r| r.field == FieldDescriptor::RealCyclotomic { l: 8563 }).unwrap();
        assert_eq!(l8563.h_plus, Some(vec![(Nat::from(7), 2)]));
        assert!(l8563.conjectural);
        for r in &recs {
            for list in [&r.h_minus, &r.h_plus, &r.h].into_iter().flatten() {
                for (p, _) in list {
                    assert!(arith::is_prime(&p.0), "{} in {}", p.0, r.field);
                }
            }
        }
    }

    #[test]
    fn l8563_admits_ranks_one_and_two() {
        let recs: Vec<_> = builtin_paper_dataset()
            .into_iter()
            .filter(|r| r.field == FieldDescriptor::RealCyclotomic { l: 8563 })
            .collect();
        let rep = audit(&recs, &AuditOptions::default());
        let row = rep.rows.iter().find(|r| r.verdict.theorem() == Theorem::Corollary1).unwrap();
        assert_eq!(row.verdict.witness.ranks, vec![1, 2]);
        assert_eq!(row.verdict.status, Status::Consistent);
    }

    #[test]
    fn decimic_9491_example() {
        let recs: Vec<_> = builtin_paper_dataset()
            .into_iter()
            .filter(|r| matches!(r.field, FieldDescriptor::Abelian { conductor: 9491, .. }))
            .collect();
        let rep = audit(&recs, &AuditOptions::default());
        let t1 = |p: u64| {
            rep.rows
                .iter()
                .find(|r| r.p == BigUint::from(p) && r.verdict.theorem() == Theorem::Theorem1)
                .unwrap()
        };
        assert_eq!(t1(31).verdict.status, Status::Consistent);
        assert_eq!(t1(31).verdict.witness.n, Some(5));
        let three = t1(3);
        assert_eq!(three.verdict.status, Status::Consistent);
        assert_eq!(three.verdict.witness.n, None);
        assert!(matches!(three.verdict.witness.two_part, Some(TwoPart::Asserted(_))));
    }

    #[test]
    fn audit_flags_a_violation() {
        // 5 is neither 0 nor 1 mod 3, and the cubic field descends to Q
        let line = r#"{"field":{"kind":"abelian","degree":3,"conductor":7},"h":[[5,1]],"source":"t"}"#;
        let rep = audit(&parse_records(line).unwrap(), &AuditOptions::default());
        assert_eq!(rep.violations(), 2);
        assert!(rep.rows.iter().all(|r| r.verdict.witness.recheck() == r.verdict.status));
        // the same data from h^- alone is only inconclusive
        let line = r#"{"field":{"kind":"abelian","degree":3,"conductor":7},"h_minus":[[5,1]],"source":"t"}"#;
        let rep = audit(&parse_records(line).unwrap(), &AuditOptions::default());
        assert_eq!(rep.violations(), 0);
    }

    #[test]
    fn two_part_known_false_gives_violation() {
        let line = r#"{"field":{"kind":"cyclotomic","u":59},"h_minus":[[5,1]],"h_plus":[],"subfield_h":[{"disc":-59,"h":3}],"source":"t"}"#;
        let rep = audit(&parse_records(line).unwrap(), &AuditOptions::default());
        let t1 = rep.rows.iter().find(|r| r.verdict.theorem() == Theorem::Theorem1).unwrap();
        assert_eq!(t1.verdict.status, Status::Violation);
        assert!(matches!(t1.verdict.witness.two_part, Some(TwoPart::KnownFalse(_))));
    }

    #[test]
    fn report_tallies_match_rows() {
        let rep = audit(&builtin_paper_dataset(), &AuditOptions { parallel: true, subgroup_limit: None });
        let t = rep.tally();
        assert_eq!(t.total(), rep.rows.len());
        let by: usize = rep.tally_by_theorem().values().map(|t| t.total()).sum();
        assert_eq!(by, rep.rows.len());
        let mut keys = BTreeSet::new();
        for r in &rep.rows {
            assert!(keys.insert((r.record, r.p.clone(), r.verdict.theorem(), r.n)));
        }
        let jsonl = rep.render_jsonl();
        assert_eq!(jsonl.lines().count(), rep.rows.len() + 1);
        let last: serde_json::Value = serde_json::from_str(jsonl.lines().last().unwrap()).unwrap();
        assert_eq!(last["summary"]["violation"], 0);
        assert_eq!(last["summary"]["verdicts"], rep.rows.len());
        // deterministic regardless of parallelism
        let seq = audit(&builtin_paper_dataset(), &AuditOptions::default());
        assert_eq!(seq.render_jsonl(), jsonl);
    }
}
