//! Unit groups `(Z/uZ)^*`, Dirichlet characters, Galois orbits of
//! characters, and subfields of `Q(zeta_u)` described by character
//! subgroups.
//!
//! A character mod `u` is stored as one exponent per unit-group generator:
//! `chi(g_i) = exp(2 pi i e_i / n_i)` where `n_i` is the order of `g_i`.
//! The character group is thereby identified with `prod Z/n_i`, and
//! character subgroups are handled as sets of mixed-radix indices into
//! that product.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::One;

use crate::arith::{self, factorize_u64, mod_inverse, pow_mod};
use crate::error::{Error, Result};

/// Default cap on the number of subgroups enumerated by [`subfields`].
pub const DEFAULT_SUBGROUP_LIMIT: usize = 100_000;

/// `Q(zeta_u) = Q(zeta_{u/2})` when `u = 2 mod 4`.
pub fn normalize_conductor(u: u64) -> u64 {
    if u % 4 == 2 {
        u / 2
    } else {
        u
    }
}

/// A cyclic factor of `(Z/uZ)^*`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generator {
    /// Residue mod `u`, congruent to 1 modulo the other prime-power factors.
    pub residue: u64,
    pub order: u64,
    /// The prime whose prime-power component this generator belongs to.
    pub prime: u64,
}

/// `(Z/uZ)^*` as a direct product of cyclic groups, with a discrete-log
/// table for every residue.
pub struct UnitGroupStructure {
    modulus: u64,
    generators: Vec<Generator>,
    prime_powers: Vec<(u64, u32)>,
    exponent: u64,
    strides: Vec<u64>,
    // logs[a * k + i] = discrete log of a to generator i; u32::MAX for non-units
    logs: Vec<u32>,
}

impl fmt::Debug for UnitGroupStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnitGroupStructure")
            .field("modulus", &self.modulus)
            .field("generators", &self.generators)
            .finish()
    }
}

fn primitive_root_prime(p: u64) -> u64 {
    if p == 2 {
        return 1;
    }
    let qs = arith::prime_divisors(p - 1);
    (2..p)
        .find(|&g| qs.iter().all(|&q| pow_mod(g, (p - 1) / q, p) != 1))
        .expect("primitive root exists")
}

/// Residue `x` with `x = r mod m` and `x = 1 mod (u / m)`.
fn crt_lift(r: u64, m: u64, u: u64) -> u64 {
    let rest = u / m;
    if rest == 1 {
        return r % m;
    }
    let inv = mod_inverse(rest % m, m).expect("coprime components");
    let t = ((r % m + m - 1) % m) as u128 * inv as u128 % m as u128;
    (1 + rest as u128 * t) as u64 % u
}

/// Builds the generator list and discrete-log table for `u`.
///
/// Rejects `u < 3` and `u = 2 mod 4`; normalize with
/// [`normalize_conductor`] first.
pub fn unit_group_structure(u: u64) -> Result<Arc<UnitGroupStructure>> {
    if u < 3 {
        return Err(Error::domain(format!("unit group modulus {u} < 3")));
    }
    if u % 4 == 2 {
        return Err(Error::domain(format!(
            "modulus {u} = 2 mod 4; normalize to {} first",
            u / 2
        )));
    }
    Ok(Arc::new(build_unit_group(u)))
}

/// Unit group for any `u >= 1`, including the trivial group mod 1 and 2.
fn build_unit_group(u: u64) -> UnitGroupStructure {
    let prime_powers = if u == 1 { Vec::new() } else { factorize_u64(u) };
    let mut generators = Vec::new();
    for &(p, e) in &prime_powers {
        let pe = p.pow(e);
        if p == 2 {
            if e >= 2 {
                generators.push(Generator { residue: crt_lift(pe - 1, pe, u), order: 2, prime: 2 });
            }
            if e >= 3 {
                generators.push(Generator {
                    residue: crt_lift(5, pe, u),
                    order: 1 << (e - 2),
                    prime: 2,
                });
            }
        } else {
            let mut g = primitive_root_prime(p);
            if e >= 2 && pow_mod(g, p - 1, p * p) == 1 {
                g += p;
            }
            generators.push(Generator {
                residue: crt_lift(g, pe, u),
                order: (p - 1) * p.pow(e - 1),
                prime: p,
            });
        }
    }
    let k = generators.len();
    let mut strides = Vec::with_capacity(k);
    let mut s = 1u64;
    for g in &generators {
        strides.push(s);
        s *= g.order;
    }
    let exponent = generators.iter().fold(1u64, |acc, g| acc.lcm(&g.order));

    let size = u.max(1) as usize;
    let mut logs = vec![u32::MAX; size * k.max(1)];
    if k == 0 {
        logs[0] = 0;
    } else {
        let total: u64 = s;
        let mut digits = vec![0u64; k];
        let mut residue = 1 % u;
        for _ in 0..total {
            for (i, &d) in digits.iter().enumerate() {
                logs[residue as usize * k + i] = d as u32;
            }
            for i in 0..k {
                // stepping digit i multiplies by g_i, also on wrap-around
                residue = residue * generators[i].residue % u;
                digits[i] += 1;
                if digits[i] < generators[i].order {
                    break;
                }
                digits[i] = 0;
            }
        }
    }
    UnitGroupStructure { modulus: u, generators, prime_powers, exponent, strides, logs }
}

impl UnitGroupStructure {
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn orders(&self) -> Vec<u64> {
        self.generators.iter().map(|g| g.order).collect()
    }

    /// `phi(u)`.
    pub fn size(&self) -> u64 {
        self.generators.iter().map(|g| g.order).product()
    }

    /// Exponent (Carmichael lambda) of the group.
    pub fn exponent(&self) -> u64 {
        self.exponent
    }

    /// Discrete logs of `a` with respect to the generators, `None` for
    /// non-units.
    pub fn discrete_log(&self, a: i64) -> Option<Vec<u64>> {
        let k = self.generators.len();
        let r = a.rem_euclid(self.modulus as i64) as usize;
        if k == 0 {
            return (self.modulus == 1 || r % 2 == 1).then(Vec::new);
        }
        let first = self.logs[r * k];
        if first == u32::MAX {
            return None;
        }
        Some(self.logs[r * k..(r + 1) * k].iter().map(|&x| x as u64).collect())
    }

    pub(crate) fn encode(&self, exps: &[u64]) -> u64 {
        exps.iter().zip(&self.strides).map(|(e, s)| e * s).sum()
    }

    pub(crate) fn decode(&self, mut idx: u64) -> Vec<u64> {
        self.generators
            .iter()
            .map(|g| {
                let e = idx % g.order;
                idx /= g.order;
                e
            })
            .collect()
    }

    fn mul_idx(&self, a: u64, b: u64) -> u64 {
        let (ea, eb) = (self.decode(a), self.decode(b));
        let sum: Vec<u64> = ea
            .iter()
            .zip(&eb)
            .zip(&self.generators)
            .map(|((x, y), g)| (x + y) % g.order)
            .collect();
        self.encode(&sum)
    }

    fn pow_idx(&self, a: u64, k: u64) -> u64 {
        let e: Vec<u64> = self
            .decode(a)
            .iter()
            .zip(&self.generators)
            .map(|(x, g)| ((*x as u128 * k as u128) % g.order as u128) as u64)
            .collect();
        self.encode(&e)
    }

    fn order_of_exponents(&self, exps: &[u64]) -> u64 {
        exps.iter()
            .zip(&self.generators)
            .fold(1u64, |acc, (e, g)| acc.lcm(&(g.order / e.gcd(&g.order))))
    }

    fn idx_order(&self, a: u64) -> u64 {
        self.order_of_exponents(&self.decode(a))
    }

    /// Conductor of the character with the given exponents, assembled
    /// from its prime-power components.
    fn conductor_of(&self, exps: &[u64]) -> u64 {
        let mut conductor = 1u64;
        for &(p, e) in &self.prime_powers {
            let comp: Vec<(usize, &Generator)> = self
                .generators
                .iter()
                .enumerate()
                .filter(|(_, g)| g.prime == p)
                .collect();
            if p == 2 {
                let minus = comp.first().map_or(0, |(i, _)| exps[*i]);
                let five = comp.get(1).map(|(i, g)| g.order / exps[*i].gcd(&g.order)).unwrap_or(1);
                if five > 1 {
                    conductor *= 4 * five;
                } else if minus != 0 {
                    conductor *= 4;
                }
            } else {
                let (i, g) = comp[0];
                let o = g.order / exps[i].gcd(&g.order);
                if o > 1 {
                    let mut j = 1;
                    while (p - 1) * p.pow(j - 1) % o != 0 {
                        j += 1;
                    }
                    debug_assert!(j <= e);
                    conductor *= p.pow(j);
                }
            }
        }
        conductor
    }
}

/// `k / d`, meaning `exp(2 pi i k / d)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RootOfUnity {
    pub k: u64,
    pub d: u64,
}

/// Value of a character: a root of unity, or zero off the units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CharValue {
    Zero,
    Root(RootOfUnity),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// A Dirichlet character mod `u`.
#[derive(Clone)]
pub struct DirichletCharacter {
    group: Arc<UnitGroupStructure>,
    exponents: Vec<u64>,
    order: u64,
    parity: Parity,
    conductor: u64,
}

impl fmt::Debug for DirichletCharacter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "chi_{}{:?}(ord {}, f {}, {:?})",
            self.group.modulus, self.exponents, self.order, self.conductor, self.parity
        )
    }
}

impl PartialEq for DirichletCharacter {
    fn eq(&self, other: &Self) -> bool {
        self.group.modulus == other.group.modulus && self.exponents == other.exponents
    }
}

impl Eq for DirichletCharacter {}

impl Hash for DirichletCharacter {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.group.modulus.hash(state);
        self.exponents.hash(state);
    }
}

impl PartialOrd for DirichletCharacter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for DirichletCharacter {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.group.modulus, &self.exponents).cmp(&(other.group.modulus, &other.exponents))
    }
}

impl DirichletCharacter {
    /// The character with the given generator exponents (reduced modulo
    /// the generator orders).
    pub fn new(group: &Arc<UnitGroupStructure>, exponents: &[u64]) -> Result<Self> {
        if exponents.len() != group.generators.len() {
            return Err(Error::domain(format!(
                "expected {} exponents, got {}",
                group.generators.len(),
                exponents.len()
            )));
        }
        let exps: Vec<u64> = exponents
            .iter()
            .zip(&group.generators)
            .map(|(e, g)| e % g.order)
            .collect();
        Ok(Self::from_reduced(group.clone(), exps))
    }

    fn from_reduced(group: Arc<UnitGroupStructure>, exponents: Vec<u64>) -> Self {
        let order = group.order_of_exponents(&exponents);
        let conductor = group.conductor_of(&exponents);
        let mut chi = DirichletCharacter { group, exponents, order, parity: Parity::Even, conductor };
        let minus_one = chi.group.modulus as i64 - 1;
        if let CharValue::Root(r) = chi.value(minus_one) {
            if r.k != 0 {
                chi.parity = Parity::Odd;
            }
        }
        chi
    }

    fn from_index(group: &Arc<UnitGroupStructure>, idx: u64) -> Self {
        Self::from_reduced(group.clone(), group.decode(idx))
    }

    pub(crate) fn index(&self) -> u64 {
        self.group.encode(&self.exponents)
    }

    pub fn trivial(group: &Arc<UnitGroupStructure>) -> Self {
        Self::from_reduced(group.clone(), vec![0; group.generators.len()])
    }

    pub fn group(&self) -> &Arc<UnitGroupStructure> {
        &self.group
    }

    pub fn modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn exponents(&self) -> &[u64] {
        &self.exponents
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn is_odd(&self) -> bool {
        self.parity == Parity::Odd
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn is_trivial(&self) -> bool {
        self.order == 1
    }

    pub fn is_primitive(&self) -> bool {
        self.conductor == self.group.modulus
    }

    /// `chi(a)` as an exact root of unity of denominator `ord(chi)`.
    pub fn value(&self, a: i64) -> CharValue {
        let Some(logs) = self.group.discrete_log(a) else {
            return CharValue::Zero;
        };
        let l = self.group.exponent;
        let mut s: u128 = 0;
        for ((e, lg), g) in self.exponents.iter().zip(&logs).zip(&self.group.generators) {
            s += *e as u128 * *lg as u128 * (l / g.order) as u128;
        }
        let s = (s % l as u128) as u64;
        let d = self.order;
        // s / l has denominator dividing d
        let k = (s as u128 * d as u128 / l as u128) as u64;
        CharValue::Root(RootOfUnity { k, d })
    }

    /// Exponent `k` with `chi(a) = zeta_d^k`, `None` off the units.
    pub fn value_exponent(&self, a: i64) -> Option<u64> {
        match self.value(a) {
            CharValue::Zero => None,
            CharValue::Root(r) => Some(r.k),
        }
    }

    /// Value of the primitive character inducing `self` at `a`, as an
    /// exponent of `zeta_{ord chi}`; `None` when `gcd(a, f) > 1`.
    pub fn primitive_value_exponent(&self, a: i64) -> Option<u64> {
        let f = self.conductor as i64;
        let u = self.group.modulus as i64;
        let a0 = a.rem_euclid(f.max(1));
        if (a0 as u64).gcd(&(f as u64)) != 1 && f > 1 {
            return None;
        }
        let mut lift = if f == 1 { 1 } else { a0 };
        while (lift as u64).gcd(&(u as u64)) != 1 {
            lift += f;
        }
        self.value_exponent(lift)
    }

    pub fn pow(&self, k: u64) -> Self {
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(&self.group.generators)
            .map(|(e, g)| ((*e as u128 * k as u128) % g.order as u128) as u64)
            .collect();
        Self::from_reduced(self.group.clone(), exps)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.modulus() != other.modulus() {
            return Err(Error::domain("characters have different moduli"));
        }
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(&other.exponents)
            .zip(&self.group.generators)
            .map(|((a, b), g)| (a + b) % g.order)
            .collect();
        Ok(Self::from_reduced(self.group.clone(), exps))
    }

    /// The inverse (complex conjugate) character.
    pub fn conj(&self) -> Self {
        let exps: Vec<u64> = self
            .exponents
            .iter()
            .zip(&self.group.generators)
            .map(|(e, g)| (g.order - e) % g.order)
            .collect();
        Self::from_reduced(self.group.clone(), exps)
    }
}

/// All `phi(u)` characters mod `u` (after conductor normalization), in
/// index order; the trivial character comes first.
pub fn characters(u: u64) -> Result<Vec<DirichletCharacter>> {
    let group = unit_group_structure(normalize_conductor(u))?;
    Ok(characters_of(&group))
}

pub fn characters_of(group: &Arc<UnitGroupStructure>) -> Vec<DirichletCharacter> {
    (0..group.size()).map(|i| DirichletCharacter::from_index(group, i)).collect()
}

pub fn char_value(chi: &DirichletCharacter, a: i64) -> CharValue {
    chi.value(a)
}

/// Characters closed under `chi -> chi^k`, `gcd(k, d) = 1`.
#[derive(Clone, Debug)]
pub struct CharacterOrbit {
    members: Vec<DirichletCharacter>,
}

impl CharacterOrbit {
    pub fn members(&self) -> &[DirichletCharacter] {
        &self.members
    }

    /// The member the orbit was generated from.
    pub fn representative(&self) -> &DirichletCharacter {
        &self.members[0]
    }

    pub fn order(&self) -> u64 {
        self.members[0].order
    }

    pub fn conductor(&self) -> u64 {
        self.members[0].conductor
    }

    pub fn parity(&self) -> Parity {
        self.members[0].parity
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Partitions `chars` into orbits under exponentiation by units mod the
/// character order. Orbits appear in order of their first member.
pub fn galois_orbits(chars: &[DirichletCharacter]) -> Vec<CharacterOrbit> {
    let mut seen: HashSet<(u64, Vec<u64>)> = HashSet::new();
    let mut orbits = Vec::new();
    for chi in chars {
        let key = (chi.modulus(), chi.exponents.clone());
        if seen.contains(&key) {
            continue;
        }
        let d = chi.order;
        let members: Vec<DirichletCharacter> = (1..=d)
            .filter(|k| k.gcd(&d) == 1)
            .map(|k| chi.pow(k))
            .collect();
        for m in &members {
            seen.insert((m.modulus(), m.exponents.clone()));
        }
        orbits.push(CharacterOrbit { members });
    }
    orbits
}

/// An abelian number field, given as a subgroup of the characters mod
/// its ambient modulus.
#[derive(Clone)]
pub struct AbelianFieldSpec {
    group: Arc<UnitGroupStructure>,
    members: Vec<DirichletCharacter>,
    conductor: u64,
    abs_discriminant: BigUint,
}

impl fmt::Debug for AbelianFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AbelianFieldSpec")
            .field("modulus", &self.group.modulus)
            .field("degree", &self.degree())
            .field("conductor", &self.conductor)
            .field("abs_discriminant", &self.abs_discriminant)
            .finish()
    }
}

impl PartialEq for AbelianFieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.group.modulus == other.group.modulus && self.members == other.members
    }
}

impl Eq for AbelianFieldSpec {}

impl AbelianFieldSpec {
    fn from_indices(group: &Arc<UnitGroupStructure>, mut idx: Vec<u64>) -> Self {
        idx.sort_unstable();
        let members: Vec<DirichletCharacter> =
            idx.iter().map(|&i| DirichletCharacter::from_index(group, i)).collect();
        Self::from_members(group.clone(), members)
    }

    fn from_members(group: Arc<UnitGroupStructure>, mut members: Vec<DirichletCharacter>) -> Self {
        members.sort();
        let conductor = members.iter().fold(1u64, |acc, c| acc.lcm(&c.conductor));
        let abs_discriminant = members
            .iter()
            .fold(BigUint::one(), |acc, c| acc * BigUint::from(c.conductor));
        AbelianFieldSpec { group, members, conductor, abs_discriminant }
    }

    /// The field cut out by an explicit set of characters, which must form
    /// a subgroup.
    pub fn from_characters(chars: Vec<DirichletCharacter>) -> Result<Self> {
        let Some(first) = chars.first() else {
            return Err(Error::domain("empty character set"));
        };
        let group = first.group.clone();
        let set: HashSet<u64> = chars.iter().map(|c| c.index()).collect();
        if chars.iter().any(|c| c.modulus() != group.modulus) {
            return Err(Error::domain("characters have different moduli"));
        }
        if !set.contains(&0) {
            return Err(Error::domain("character set lacks the trivial character"));
        }
        for &a in &set {
            for &b in &set {
                if !set.contains(&group.mul_idx(a, b)) {
                    return Err(Error::domain("character set is not closed under multiplication"));
                }
            }
        }
        Ok(Self::from_indices(&group, set.into_iter().collect()))
    }

    /// `Q(zeta_u)`: all characters mod `u`.
    pub fn cyclotomic(u: u64) -> Result<Self> {
        let group = unit_group_structure(normalize_conductor(u))?;
        Ok(Self::from_indices(&group, (0..group.size()).collect()))
    }

    /// `Q(zeta_l + zeta_l^{-1})`: the even characters mod `l`.
    pub fn real_cyclotomic(l: u64) -> Result<Self> {
        let group = unit_group_structure(normalize_conductor(l))?;
        let members: Vec<DirichletCharacter> =
            characters_of(&group).into_iter().filter(|c| !c.is_odd()).collect();
        Ok(Self::from_members(group, members))
    }

    /// `Q` inside the character group mod `u`.
    pub fn rationals(u: u64) -> Result<Self> {
        let group = unit_group_structure(normalize_conductor(u))?;
        Ok(Self::from_indices(&group, vec![0]))
    }

    pub fn ambient_modulus(&self) -> u64 {
        self.group.modulus
    }

    pub fn group(&self) -> &Arc<UnitGroupStructure> {
        &self.group
    }

    pub fn members(&self) -> &[DirichletCharacter] {
        &self.members
    }

    pub fn degree(&self) -> u64 {
        self.members.len() as u64
    }

    pub fn conductor(&self) -> u64 {
        self.conductor
    }

    pub fn abs_discriminant(&self) -> &BigUint {
        &self.abs_discriminant
    }

    pub fn is_imaginary(&self) -> bool {
        self.members.iter().any(|c| c.is_odd())
    }

    /// Signed discriminant: negative iff the number of complex places is odd.
    pub fn discriminant(&self) -> BigInt {
        let d = BigInt::from(self.abs_discriminant.clone());
        if self.is_imaginary() && (self.degree() / 2) % 2 == 1 {
            -d
        } else {
            d
        }
    }

    pub fn is_cyclic(&self) -> bool {
        self.members.iter().any(|c| c.order == self.degree())
    }

    pub fn contains(&self, chi: &DirichletCharacter) -> bool {
        self.members.binary_search(chi).is_ok()
    }

    /// Subfield relation: `self` is contained in `other`.
    pub fn is_subfield_of(&self, other: &AbelianFieldSpec) -> bool {
        self.group.modulus == other.group.modulus && self.members.iter().all(|c| other.contains(c))
    }

    fn indices(&self) -> Vec<u64> {
        self.members.iter().map(|c| c.index()).collect()
    }

    fn exponent_key(&self) -> Vec<&[u64]> {
        self.members.iter().map(|c| c.exponents()).collect()
    }

    /// All subfields of this field.
    pub fn subfields(&self, limit: usize) -> SubfieldList {
        let (subgroups, complete) = enumerate_subgroups(&self.group, &self.indices(), limit);
        let mut fields: Vec<AbelianFieldSpec> =
            subgroups.into_iter().map(|s| Self::from_indices(&self.group, s)).collect();
        sort_fields(&mut fields);
        SubfieldList { fields, complete }
    }
}

fn sort_fields(fields: &mut [AbelianFieldSpec]) {
    fields.sort_by(|a, b| {
        (a.degree(), &a.abs_discriminant, a.conductor)
            .cmp(&(b.degree(), &b.abs_discriminant, b.conductor))
            .then_with(|| a.exponent_key().cmp(&b.exponent_key()))
    });
}

/// Result of [`subfields`]: `complete` is false when the subgroup count
/// exceeded the limit and only prime-index subgroups plus the full group
/// were returned.
#[derive(Clone, Debug)]
pub struct SubfieldList {
    pub fields: Vec<AbelianFieldSpec>,
    pub complete: bool,
}

/// Subfields of `Q(zeta_u)`, sorted by degree, then discriminant.
pub fn subfields(u: u64) -> Result<Vec<AbelianFieldSpec>> {
    subfields_with_limit(u, DEFAULT_SUBGROUP_LIMIT).map(|l| l.fields)
}

pub fn subfields_with_limit(u: u64, limit: usize) -> Result<SubfieldList> {
    let k = AbelianFieldSpec::cyclotomic(u)?;
    Ok(k.subfields(limit))
}

/// The subfield `F` with `[K:F] = n`, minimizing `|D_F|`, then the
/// conductor, then the sorted exponent tuples.
pub fn descent_subfield(k: &AbelianFieldSpec, n: u64) -> Result<AbelianFieldSpec> {
    descent_candidates(k, n)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::domain(format!("no subfield of index {n}")))
}

/// Every subfield `F` of `K` with `[K:F] = n`, best first.
pub fn descent_candidates(k: &AbelianFieldSpec, n: u64) -> Result<Vec<AbelianFieldSpec>> {
    if n < 2 || !arith::is_prime_u64(n) {
        return Err(Error::domain(format!("descent index {n} is not prime")));
    }
    if k.degree() % n != 0 {
        return Err(Error::domain(format!(
            "{n} does not divide the degree {} of K",
            k.degree()
        )));
    }
    let mut fields: Vec<AbelianFieldSpec> = index_prime_subgroups(&k.group, &k.indices(), n)
        .into_iter()
        .map(|s| AbelianFieldSpec::from_indices(&k.group, s))
        .collect();
    sort_fields(&mut fields);
    Ok(fields)
}

// ---- subgroup machinery on character indices ----

/// `<S, g>` for a subgroup `S` (given as a sorted list).
fn adjoin(group: &UnitGroupStructure, s: &[u64], g: u64) -> Vec<u64> {
    let set: HashSet<u64> = s.iter().copied().collect();
    if set.contains(&g) {
        return s.to_vec();
    }
    let mut out: Vec<u64> = s.to_vec();
    let mut gk = g;
    while !set.contains(&gk) {
        out.extend(s.iter().map(|&x| group.mul_idx(x, gk)));
        gk = group.mul_idx(gk, g);
    }
    out.sort_unstable();
    out.dedup();
    out
}

fn product_set(group: &UnitGroupStructure, a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut out: Vec<u64> = a
        .iter()
        .flat_map(|&x| b.iter().map(move |&y| (x, y)))
        .map(|(x, y)| group.mul_idx(x, y))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Subgroups of the finite abelian group `x` (a subgroup of the character
/// group), via its Sylow decomposition. Returns `(subgroups, complete)`.
fn enumerate_subgroups(group: &UnitGroupStructure, x: &[u64], limit: usize) -> (Vec<Vec<u64>>, bool) {
    let size = x.len() as u64;
    if size == 1 {
        return (vec![x.to_vec()], true);
    }
    let primes = arith::prime_divisors(size);
    let mut per_prime: Vec<Vec<Vec<u64>>> = Vec::new();
    let mut total: usize = 1;
    let mut complete = true;
    for &p in &primes {
        let sylow: Vec<u64> = x
            .iter()
            .copied()
            .filter(|&c| {
                let mut o = group.idx_order(c);
                while o % p == 0 {
                    o /= p;
                }
                o == 1
            })
            .collect();
        match sylow_subgroups(group, &sylow, limit) {
            Some(list) => {
                total = total.saturating_mul(list.len());
                per_prime.push(list);
            }
            None => {
                complete = false;
                break;
            }
        }
        if total > limit {
            complete = false;
            break;
        }
    }
    if !complete {
        let mut out: Vec<Vec<u64>> = Vec::new();
        for &p in &primes {
            out.extend(index_prime_subgroups(group, x, p));
        }
        let mut full = x.to_vec();
        full.sort_unstable();
        out.push(full);
        return (out, false);
    }
    let mut acc: Vec<Vec<u64>> = vec![vec![0]];
    for list in per_prime {
        let mut next = Vec::with_capacity(acc.len() * list.len());
        for a in &acc {
            for b in &list {
                next.push(product_set(group, a, b));
            }
        }
        acc = next;
    }
    (acc, true)
}

/// All subgroups of a p-group by breadth-first adjunction; `None` past
/// `limit`.
fn sylow_subgroups(group: &UnitGroupStructure, p_group: &[u64], limit: usize) -> Option<Vec<Vec<u64>>> {
    let trivial = vec![0u64];
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    seen.insert(trivial.clone());
    let mut queue = VecDeque::from([trivial]);
    let mut out = Vec::new();
    while let Some(s) = queue.pop_front() {
        let members: HashSet<u64> = s.iter().copied().collect();
        for &g in p_group {
            if members.contains(&g) {
                continue;
            }
            let t = adjoin(group, &s, g);
            if seen.insert(t.clone()) {
                if seen.len() > limit {
                    return None;
                }
                queue.push_back(t);
            }
        }
        out.push(s);
    }
    Some(out)
}

/// Subgroups of index `n` (prime) in `x`: hyperplanes of `x / x^n`.
fn index_prime_subgroups(group: &UnitGroupStructure, x: &[u64], n: u64) -> Vec<Vec<u64>> {
    let mut xn: Vec<u64> = x.iter().map(|&c| group.pow_idx(c, n)).collect();
    xn.sort_unstable();
    xn.dedup();
    if xn.len() == x.len() {
        return Vec::new();
    }
    let mut basis: Vec<u64> = Vec::new();
    let mut span = xn.clone();
    let mut span_set: HashSet<u64> = span.iter().copied().collect();
    for &c in x {
        if span_set.contains(&c) {
            continue;
        }
        basis.push(c);
        span = adjoin(group, &span, c);
        span_set = span.iter().copied().collect();
        if span.len() == x.len() {
            break;
        }
    }
    let s = basis.len();
    let mut out = Vec::new();
    // functionals with first nonzero coordinate normalized to 1
    let total = (n as u128).pow(s as u32);
    for code in 0..total {
        let mut c = vec![0u64; s];
        let mut t = code;
        for ci in c.iter_mut() {
            *ci = (t % n as u128) as u64;
            t /= n as u128;
        }
        let Some(i0) = c.iter().position(|&v| v != 0) else {
            continue;
        };
        if c[i0] != 1 {
            continue;
        }
        let mut h = xn.clone();
        for j in 0..s {
            if j == i0 {
                continue;
            }
            let v = group.mul_idx(basis[j], group.pow_idx(basis[i0], (n - c[j]) % n));
            h = adjoin(group, &h, v);
        }
        out.push(h);
    }
    out
}

/// Conductor by definition: the least divisor `f` of `u` such that `chi`
/// is trivial on all units congruent to 1 mod `f`.
#[doc(hidden)]
pub fn conductor_by_definition(chi: &DirichletCharacter) -> u64 {
    let u = chi.modulus();
    arith::divisors(u)
        .into_iter()
        .find(|&f| {
            (1..u)
                .filter(|a| a.gcd(&u) == 1 && (a - 1) % f == 0)
                .all(|a| chi.value_exponent(a as i64) == Some(0))
        })
        .unwrap_or(u)
}

/// Sorted exponent tuples of a field's characters, for display.
pub fn describe_members(field: &AbelianFieldSpec) -> String {
    let parts: Vec<String> = field.members.iter().map(|c| format!("{:?}", c.exponents)).collect();
    parts.join(" ")
}

/// Cache of unit groups by modulus, so characters of the same modulus
/// share one discrete-log table.
#[derive(Default)]
pub struct UnitGroupCache {
    groups: HashMap<u64, Arc<UnitGroupStructure>>,
}

impl UnitGroupCache {
    pub fn get(&mut self, u: u64) -> Result<Arc<UnitGroupStructure>> {
        if let Some(g) = self.groups.get(&u) {
            return Ok(g.clone());
        }
        let g = unit_group_structure(u)?;
        self.groups.insert(u, g.clone());
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::euler_phi;

    #[test]
    fn unit_group_examples() {
        let g = unit_group_structure(59).unwrap();
        assert_eq!(g.orders(), vec![58]);
        assert_eq!(g.generators()[0].residue, 2);
        let g = unit_group_structure(4).unwrap();
        assert_eq!(g.orders(), vec![2]);
        assert_eq!(g.generators()[0].residue, 3);
        let g = unit_group_structure(572).unwrap();
        assert_eq!(g.orders(), vec![2, 10, 12]);
        assert_eq!(g.size(), 240);
        assert!(unit_group_structure(2).is_err());
        assert!(unit_group_structure(118).is_err());
        let g = unit_group_structure(32).unwrap();
        assert_eq!(g.orders(), vec![2, 8]);
    }

    #[test]
    fn generators_have_stated_orders_and_logs_are_unique() {
        for u in 3..=500u64 {
            if u % 4 == 2 {
                continue;
            }
            let g = unit_group_structure(u).unwrap();
            assert_eq!(g.size(), euler_phi(u), "u={u}");
            for gen in g.generators() {
                assert_eq!(arith::multiplicative_order(gen.residue as i64, u).unwrap(), gen.order);
            }
            let mut seen = HashSet::new();
            for a in 1..u {
                match g.discrete_log(a as i64) {
                    Some(l) => {
                        let back = l
                            .iter()
                            .zip(g.generators())
                            .fold(1u64, |acc, (e, gen)| acc * pow_mod(gen.residue, *e, u) % u);
                        assert_eq!(back, a);
                        assert!(seen.insert(l));
                    }
                    None => assert!(a.gcd(&u) > 1),
                }
            }
            assert_eq!(seen.len() as u64, euler_phi(u));
        }
    }

    #[test]
    fn characters_examples() {
        let chars = characters(59).unwrap();
        assert_eq!(chars.len(), 58);
        assert_eq!(chars.iter().filter(|c| c.is_odd()).count(), 29);
        let chars = characters(3).unwrap();
        assert_eq!(chars.len(), 2);
        assert!(!chars[0].is_odd() && chars[0].is_trivial());
        assert!(chars[1].is_odd());
        let chars = characters(4).unwrap();
        assert_eq!(chars.len(), 2);
        assert!(chars[1].is_odd());
        assert_eq!(chars[1].conductor(), 4);
        // u = 6 normalizes to 3
        assert_eq!(characters(6).unwrap().len(), 2);
    }

    #[test]
    fn char_value_examples() {
        let chars = characters(59).unwrap();
        assert_eq!(chars[0].value(5), CharValue::Root(RootOfUnity { k: 0, d: 1 }));
        let quad = chars.iter().find(|c| c.order() == 2).unwrap();
        assert_eq!(quad.value(-1), CharValue::Root(RootOfUnity { k: 1, d: 2 }));
        for c in &chars {
            assert_eq!(c.value(59), CharValue::Zero);
            assert_eq!(c.value(0), CharValue::Zero);
        }
    }

    #[test]
    fn conductors_match_definition() {
        for u in 3..=200u64 {
            if u % 4 == 2 {
                continue;
            }
            for chi in characters(u).unwrap() {
                assert_eq!(chi.conductor(), conductor_by_definition(&chi), "{chi:?}");
                assert_eq!(u % chi.conductor(), 0);
            }
        }
    }

    #[test]
    fn characters_are_multiplicative() {
        for u in [59u64, 63, 64, 120, 572] {
            let chars = characters(u).unwrap();
            for chi in chars.iter().step_by(7) {
                let d = chi.order();
                for a in 1..u as i64 {
                    for b in [2i64, 5, 7, u as i64 - 1] {
                        match (chi.value_exponent(a), chi.value_exponent(b), chi.value_exponent(a * b)) {
                            (Some(x), Some(y), Some(z)) => assert_eq!((x + y) % d, z),
                            (_, _, None) => {}
                            _ => panic!("value zero on a unit product"),
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn odd_count_is_half() {
        for u in 3..=500u64 {
            if u % 4 == 2 {
                continue;
            }
            let chars = characters(u).unwrap();
            assert_eq!(chars.len() as u64, euler_phi(u));
            assert_eq!(chars.iter().filter(|c| c.is_odd()).count() as u64 * 2, euler_phi(u));
        }
    }

    #[test]
    fn conductor_discriminant_for_primes() {
        for p in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61] {
            let k = AbelianFieldSpec::cyclotomic(p).unwrap();
            assert_eq!(k.abs_discriminant(), &BigUint::from(p).pow(p as u32 - 2));
        }
    }

    #[test]
    fn orbit_examples() {
        let sizes = |u| {
            let mut s: Vec<usize> = galois_orbits(&characters(u).unwrap()).iter().map(|o| o.len()).collect();
            s.sort();
            s
        };
        assert_eq!(sizes(59), vec![1, 1, 28, 28]);
        assert_eq!(sizes(3), vec![1, 1]);
        assert_eq!(sizes(23), vec![1, 1, 10, 10]);
    }

    #[test]
    fn orbits_have_phi_order_size() {
        for u in 3..=200u64 {
            if u % 4 == 2 {
                continue;
            }
            let chars = characters(u).unwrap();
            let orbits = galois_orbits(&chars);
            assert_eq!(orbits.iter().map(|o| o.len()).sum::<usize>(), chars.len());
            for o in &orbits {
                assert_eq!(o.len() as u64, euler_phi(o.order()));
                for m in o.members() {
                    assert_eq!(m.order(), o.order());
                    assert_eq!(m.conductor(), o.conductor());
                    assert_eq!(m.parity(), o.parity());
                }
            }
        }
    }

    #[test]
    fn subfields_examples() {
        let f = subfields(59).unwrap();
        let degs: Vec<u64> = f.iter().map(|x| x.degree()).collect();
        assert_eq!(degs, vec![1, 2, 29, 58]);
        let p = BigUint::from(59u32);
        assert_eq!(f[0].abs_discriminant(), &BigUint::one());
        assert_eq!(f[1].abs_discriminant(), &p);
        assert_eq!(f[2].abs_discriminant(), &p.pow(28));
        assert_eq!(f[3].abs_discriminant(), &p.pow(57));
        assert_eq!(f[1].discriminant(), BigInt::from(-59));
        let f = subfields(3).unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[1].abs_discriminant(), &BigUint::from(3u32));
        let f = subfields(4).unwrap();
        assert_eq!(f[1].abs_discriminant(), &BigUint::from(4u32));
        assert_eq!(f[1].discriminant(), BigInt::from(-4));
    }

    #[test]
    fn subfield_counts() {
        // Z/2 x Z/2 has five subgroups; Z/2 x Z/4 has eight (mod 15 and mod 16)
        assert_eq!(subfields(8).unwrap().len(), 5);
        assert_eq!(subfields(15).unwrap().len(), 8);
        assert_eq!(subfields(16).unwrap().len(), 8);
        // cyclic groups: one subgroup per divisor
        for p in [7u64, 13, 31, 61] {
            assert_eq!(subfields(p).unwrap().len(), arith::divisors(p - 1).len());
        }
        for f in subfields(572).unwrap() {
            assert_eq!(240 % f.degree(), 0);
            assert!(AbelianFieldSpec::from_characters(f.members().to_vec()).is_ok());
        }
    }

    #[test]
    fn subgroup_cap_falls_back_to_prime_index() {
        let all = subfields_with_limit(572, DEFAULT_SUBGROUP_LIMIT).unwrap();
        assert!(all.complete);
        let capped = subfields_with_limit(572, 3).unwrap();
        assert!(!capped.complete);
        let full = capped.fields.last().unwrap();
        assert_eq!(full.degree(), 240);
        for f in &capped.fields[..capped.fields.len() - 1] {
            assert!(arith::is_prime_u64(240 / f.degree()));
        }
    }

    #[test]
    fn descent_examples() {
        let k = AbelianFieldSpec::cyclotomic(59).unwrap();
        let f = descent_subfield(&k, 29).unwrap();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.abs_discriminant(), &BigUint::from(59u32));
        let k = AbelianFieldSpec::cyclotomic(3).unwrap();
        let f = descent_subfield(&k, 3);
        assert!(f.is_err(), "3 does not divide [Q(zeta_3):Q] = 2");
        let k = AbelianFieldSpec::cyclotomic(79).unwrap();
        let f = descent_subfield(&k, 13).unwrap();
        assert_eq!(f.degree(), 6);
        assert_eq!(f.conductor(), 79);
        assert_eq!(f.abs_discriminant(), &BigUint::from(79u32).pow(5));
        assert!(descent_subfield(&k, 5).is_err());
    }

    #[test]
    fn descent_has_right_degree() {
        for u in [63u64, 91, 117, 133, 572, 151, 127] {
            let k = AbelianFieldSpec::cyclotomic(u).unwrap();
            for n in arith::prime_divisors(k.degree()) {
                if n == 2 {
                    continue;
                }
                for f in descent_candidates(&k, n).unwrap() {
                    assert_eq!(f.degree() * n, k.degree());
                    assert!(f.is_subfield_of(&k));
                }
            }
        }
    }

    #[test]
    fn real_subfield() {
        let k = AbelianFieldSpec::real_cyclotomic(191).unwrap();
        assert_eq!(k.degree(), 95);
        assert!(!k.is_imaginary());
        assert!(k.is_cyclic());
        let f = descent_subfield(&k, 19).unwrap();
        assert_eq!(f.degree(), 5);
        assert_eq!(f.abs_discriminant(), &BigUint::from(191u32).pow(4));
    }

    #[test]
    fn conj_inverts() {
        for chi in characters(63).unwrap() {
            let prod = chi.mul(&chi.conj()).unwrap();
            assert!(prod.is_trivial());
        }
    }
}
