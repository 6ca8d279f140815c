//! Congruence checks derived from the rank theorem.
//!
//! For a prime `p` dividing `h(K)` with `p`-rank `r`, every check reduces to
//! asking whether an odd prime `n` divides `p * (p^r - 1)`. When the rank is
//! not known, every `r` in `1..=v_p` is tried, `v_p` being the exponent of
//! `p` in the class number. A verdict is a violation only if no admissible
//! rank satisfies the conclusion; when `v_p` is only a lower bound, that
//! outcome is downgraded to inconclusive.

use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::abelian::{self, AbelianFieldSpec};
use crate::arith::{self, multiplicative_order, pow_mod};
use crate::bounds::{self, BoundResult};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Consistent,
    Violation,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Consistent => "CONSISTENT",
            Status::Violation => "VIOLATION",
            Status::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Which statement a verdict checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Odd degree `N`: `gcd(p (p^r - 1), N) > 1`.
    Corollary1,
    /// `N = 2^a N1`: either `gcd(p (p^r - 1), N1) > 1` or `p | h(L)`,
    /// `[L:Q] = 2^a`.
    Theorem1,
    /// `p > H_F` for `K/F` cyclic of prime degree `n` forces
    /// `p (p^r - 1) = 0 mod n`.
    Theorem2,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::Corollary1 => "corollary1",
            Theorem::Theorem1 => "theorem1",
            Theorem::Theorem2 => "theorem2",
        })
    }
}

/// What is known about the `p`-part of the class group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankHypothesis {
    p: BigUint,
    rank: Option<u32>,
    multiplicity: u32,
    multiplicity_exact: bool,
}

impl RankHypothesis {
    /// Rank `r` known, `1 <= r <= v`.
    pub fn known(p: BigUint, rank: u32, multiplicity: u32) -> Result<Self> {
        if rank == 0 || rank > multiplicity {
            return Err(Error::domain(format!(
                "rank {rank} outside 1..={multiplicity} for p = {p}"
            )));
        }
        Ok(RankHypothesis { p, rank: Some(rank), multiplicity, multiplicity_exact: true })
    }

    /// Rank unknown; every `r` in `1..=v` is admissible.
    pub fn unknown(p: BigUint, multiplicity: u32) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::domain(format!("p = {p} must divide the class number")));
        }
        Ok(RankHypothesis { p, rank: None, multiplicity, multiplicity_exact: true })
    }

    /// Marks `v` as a lower bound for the true exponent.
    pub fn with_inexact_multiplicity(mut self) -> Self {
        self.multiplicity_exact = false;
        self
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn rank(&self) -> Option<u32> {
        self.rank
    }

    pub fn multiplicity(&self) -> u32 {
        self.multiplicity
    }

    pub fn multiplicity_is_exact(&self) -> bool {
        self.multiplicity_exact
    }

    pub fn admissible_ranks(&self) -> Vec<u32> {
        match self.rank {
            Some(r) => vec![r],
            None => (1..=self.multiplicity).collect(),
        }
    }
}

/// Three-valued knowledge of `p | h(L)` for the 2-power-degree subfield `L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "state", content = "detail", rename_all = "snake_case")]
pub enum TwoPart {
    Unknown,
    Asserted(String),
    KnownFalse(String),
}

/// Everything needed to re-evaluate a verdict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub theorem: Theorem,
    pub p: BigUint,
    /// `N` for corollary 1, `N1` for theorem 1, `n` for theorem 2.
    pub modulus: u64,
    /// Ranks examined, in order.
    pub ranks: Vec<u32>,
    pub multiplicity_exact: bool,
    /// The odd prime dividing `p (p^r - 1)`, if found.
    pub n: Option<u64>,
    /// The rank that produced `n`.
    pub rank_used: Option<u32>,
    /// `ord_n(p)`, or `None` when `n | p`.
    pub order: Option<u64>,
    pub two_part: Option<TwoPart>,
    pub bound: Option<BoundResult>,
    /// Reason a check could not run.
    pub missing: Option<String>,
    pub notes: Vec<String>,
}

impl Witness {
    fn new(theorem: Theorem, hyp: &RankHypothesis, modulus: u64) -> Self {
        Witness {
            theorem,
            p: hyp.p.clone(),
            modulus,
            ranks: hyp.admissible_ranks(),
            multiplicity_exact: hyp.multiplicity_exact,
            n: None,
            rank_used: None,
            order: None,
            two_part: None,
            bound: None,
            missing: None,
            notes: Vec::new(),
        }
    }

    /// Recomputes the status from the recorded fields alone.
    pub fn recheck(&self) -> Status {
        if self.missing.is_some() {
            return Status::Inconclusive;
        }
        if let Some(b) = &self.bound {
            if !b.is_exceeded_by(&self.p) {
                return Status::Inconclusive;
            }
        }
        if first_witness(&self.p, &self.ranks, self.modulus).is_some() {
            return Status::Consistent;
        }
        let fallback = match (&self.theorem, &self.two_part) {
            (Theorem::Theorem1, Some(TwoPart::Asserted(_))) => return Status::Consistent,
            (Theorem::Theorem1, Some(TwoPart::Unknown) | None) => Status::Inconclusive,
            _ => Status::Violation,
        };
        if fallback == Status::Violation && !self.multiplicity_exact {
            Status::Inconclusive
        } else {
            fallback
        }
    }

    /// One-line human-readable summary.
    pub fn summary(&self) -> String {
        let mut parts = Vec::new();
        if let Some(m) = &self.missing {
            parts.push(format!("missing: {m}"));
        }
        if let Some(b) = &self.bound {
            let cmp = if b.is_exceeded_by(&self.p) { ">" } else { "<=" };
            let d = b.abs_disc.to_string();
            let d = if d.len() > 24 { format!("a {}-digit integer", d.len()) } else { d };
            parts.push(format!("p {cmp} H_F = {b} (|D_F| = {d}, m = {})", b.m));
        }
        match (self.n, self.rank_used) {
            (Some(n), Some(r)) => match self.order {
                None => parts.push(format!("n = {n} divides p")),
                Some(f) => parts.push(format!("n = {n}, ord_n(p) = {f} divides r = {r}")),
            },
            _ if self.missing.is_none() && self.bound.as_ref().is_none_or(|b| b.is_exceeded_by(&self.p)) => {
                parts.push(format!(
                    "no prime of {} divides p (p^r - 1) for r in {}",
                    self.modulus,
                    describe_ranks(&self.ranks)
                ));
                if !self.multiplicity_exact {
                    parts.push("exponent of p is only a lower bound".into());
                }
            }
            _ => {}
        }
        if self.n.is_none() {
            match &self.two_part {
                Some(TwoPart::Asserted(d)) => parts.push(format!("p | h(L): {d}")),
                Some(TwoPart::KnownFalse(d)) => parts.push(format!("p does not divide h(L): {d}")),
                Some(TwoPart::Unknown) => parts.push("h(L) unknown".into()),
                None => {}
            }
        }
        parts.extend(self.notes.iter().cloned());
        parts.join("; ")
    }
}

fn describe_ranks(ranks: &[u32]) -> String {
    match ranks {
        [r] => format!("{{{r}}}"),
        [a, .., b] => format!("{a}..={b}"),
        [] => "{}".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    pub witness: Witness,
}

impl Verdict {
    fn from_witness(witness: Witness) -> Self {
        Verdict { status: witness.recheck(), witness }
    }

    pub fn theorem(&self) -> Theorem {
        self.witness.theorem
    }
}

fn p_mod(p: &BigUint, n: u64) -> u64 {
    (p % n).to_u64().unwrap()
}

/// `p = 0 mod n` or `p^r = 1 mod n`.
pub fn rank_theorem_constraint(p: &BigUint, r: u32, n: u64) -> bool {
    let a = p_mod(p, n);
    a == 0 || pow_mod(a, r as u64, n) == 1 % n
}

/// Smallest prime `n | modulus` dividing `p (p^r - 1)` for some listed `r`,
/// with the first such `r`.
fn first_witness(p: &BigUint, ranks: &[u32], modulus: u64) -> Option<(u64, u32)> {
    arith::prime_divisors(modulus).into_iter().find_map(|n| {
        ranks.iter().find(|&&r| rank_theorem_constraint(p, r, n)).map(|&r| (n, r))
    })
}

fn fill_witness(w: &mut Witness) {
    if let Some((n, r)) = first_witness(&w.p, &w.ranks, w.modulus) {
        w.n = Some(n);
        w.rank_used = Some(r);
        let a = p_mod(&w.p, n);
        w.order = (a != 0).then(|| multiplicative_order(a as i64, n).unwrap());
    }
}

/// `N` odd: `p (p^r - 1)` and `N` must share a prime factor.
pub fn corollary1_verdict(n_degree: u64, hyp: &RankHypothesis) -> Result<Verdict> {
    if n_degree % 2 == 0 || n_degree < 3 {
        return Err(Error::domain(format!(
            "corollary 1 needs an odd degree N > 1, got {n_degree}; use theorem1_audit"
        )));
    }
    let mut w = Witness::new(Theorem::Corollary1, hyp, n_degree);
    fill_witness(&mut w);
    Ok(Verdict::from_witness(w))
}

/// `N = 2^a N1`, `N1 > 1` odd: an odd witness prime, or else `p | h(L)`.
pub fn theorem1_audit(n_degree: u64, hyp: &RankHypothesis, two_part: TwoPart) -> Result<Verdict> {
    let n1 = odd_part(n_degree);
    if n1 <= 1 {
        return Err(Error::domain(format!("degree {n_degree} has no odd prime factor")));
    }
    let mut w = Witness::new(Theorem::Theorem1, hyp, n1);
    fill_witness(&mut w);
    w.two_part = Some(two_part);
    Ok(Verdict::from_witness(w))
}

pub fn odd_part(mut n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    while n % 2 == 0 {
        n /= 2;
    }
    n
}

/// The field `F` below `K` in a theorem 2 check.
#[derive(Clone, Debug)]
pub enum DescentTarget<'a> {
    /// `F` is computed from the character group of `K`.
    Abelian { field: &'a AbelianFieldSpec, n: u64 },
    /// `F` given by its invariants.
    Explicit { f_abs_disc: BigUint, f_degree: u64, n: u64 },
    /// The bound for `F` was already evaluated.
    Bound { bound: BoundResult, n: u64 },
}

impl DescentTarget<'_> {
    fn n(&self) -> u64 {
        match self {
            DescentTarget::Abelian { n, .. }
            | DescentTarget::Explicit { n, .. }
            | DescentTarget::Bound { n, .. } => *n,
        }
    }
}

/// Theorem 2: if `p > H_F`, then `p (p^r - 1) = 0 mod n`.
pub fn theorem2_audit(target: &DescentTarget<'_>, hyp: &RankHypothesis) -> Result<Verdict> {
    let n = target.n();
    if n < 3 || !arith::is_prime_u64(n) {
        return Err(Error::domain(format!("theorem 2 needs an odd prime n, got {n}")));
    }
    let bound = match target {
        DescentTarget::Abelian { field, n } => {
            let f = abelian::descent_subfield(field, *n)?;
            bounds::field_bound(&f)?
        }
        DescentTarget::Explicit { f_abs_disc, f_degree, .. } => {
            bounds::class_number_bound(f_abs_disc, *f_degree)?
        }
        DescentTarget::Bound { bound, .. } => bound.clone(),
    };
    let mut w = Witness::new(Theorem::Theorem2, hyp, n);
    let gate_met = bound.is_exceeded_by(&w.p);
    w.bound = Some(bound);
    if gate_met {
        fill_witness(&mut w);
    }
    Ok(Verdict::from_witness(w))
}

/// Theorem 2 verdict when `F` cannot be determined.
pub fn theorem2_missing(n: u64, hyp: &RankHypothesis, reason: impl Into<String>) -> Verdict {
    let mut w = Witness::new(Theorem::Theorem2, hyp, n);
    w.missing = Some(reason.into());
    Verdict::from_witness(w)
}

/// Ranks in `1..=v` compatible with the rank theorem for `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeasibleRanks {
    pub ranks: Vec<u32>,
    /// `n | p`: the constraint is vacuous and every rank is listed.
    pub vacuous: bool,
}

/// `{ r in 1..=v : ord_n(p) | r }`.
pub fn feasible_ranks(p: &BigUint, v: u32, n: u64) -> Result<FeasibleRanks> {
    if n < 3 || !arith::is_prime_u64(n) {
        return Err(Error::domain(format!("n = {n} is not an odd prime")));
    }
    let a = p_mod(p, n);
    if a == 0 {
        return Ok(FeasibleRanks { ranks: (1..=v).collect(), vacuous: true });
    }
    let f = multiplicative_order(a as i64, n)?;
    let ranks = (1..=v).filter(|&r| r as u64 % f == 0).collect();
    Ok(FeasibleRanks { ranks, vacuous: false })
}

/// Exact rational comparison helper for callers holding several bounds.
pub fn max_bound(bounds: Vec<BoundResult>) -> Option<BoundResult> {
    bounds.into_iter().max_by(|a, b| {
        let (x, y): (&BigRational, &BigRational) = (&a.upper, &b.upper);
        x.cmp(y)
    })
}
