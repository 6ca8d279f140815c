//! Relative class numbers of cyclotomic fields.
//!
//! `h^-(Q(zeta_u)) = Q * w * prod_{chi odd} (-1/2) B_{1,chi}`, with the odd
//! characters grouped into Galois orbits. The product over one orbit is the
//! norm from `Q(zeta_d)` to `Q` of a single `-1/2 B_{1,chi}`, computed as the
//! resultant of its numerator polynomial with `Phi_d`. Resultants are
//! evaluated modulo primes `q = 1 mod d`, where `Phi_d` splits into linear
//! factors, and lifted by the Chinese remainder theorem past a coefficient
//! bound.
//!
//! [`maillet_hminus`] computes `h^-(Q(zeta_p))` independently from the
//! Maillet determinant.

use std::collections::HashMap;
use std::fmt;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::abelian::{self, CharacterOrbit, DirichletCharacter};
use crate::arith::{self, euler_phi, is_prime_u64, mul_mod, pow_mod, PrimeFactorization};
use crate::error::{Error, Result};

/// `Phi_d`, coefficients from the constant term up.
pub fn cyclotomic_polynomial(d: u64) -> Vec<BigInt> {
    assert!(d >= 1, "cyclotomic_polynomial: d must be positive");
    let mut memo: HashMap<u64, Vec<BigInt>> = HashMap::new();
    cyclotomic_memo(d, &mut memo)
}

fn cyclotomic_memo(d: u64, memo: &mut HashMap<u64, Vec<BigInt>>) -> Vec<BigInt> {
    if let Some(p) = memo.get(&d) {
        return p.clone();
    }
    // x^d - 1
    let mut num = vec![BigInt::zero(); d as usize + 1];
    num[0] = BigInt::from(-1);
    num[d as usize] = BigInt::one();
    for e in arith::divisors(d) {
        if e == d {
            continue;
        }
        let div = cyclotomic_memo(e, memo);
        num = exact_div_monic(&num, &div);
    }
    memo.insert(d, num.clone());
    num
}

fn exact_div_monic(num: &[BigInt], den: &[BigInt]) -> Vec<BigInt> {
    let mut rem = num.to_vec();
    let dn = den.len() - 1;
    let qlen = num.len() - dn;
    let mut q = vec![BigInt::zero(); qlen];
    for i in (0..qlen).rev() {
        let c = rem[i + dn].clone();
        if c.is_zero() {
            continue;
        }
        for (j, dc) in den.iter().enumerate() {
            rem[i + j] -= &c * dc;
        }
        q[i] = c;
    }
    debug_assert!(rem.iter().all(|c| c.is_zero()));
    q
}

fn rational_poly(p: &[BigInt]) -> Vec<BigRational> {
    p.iter().map(|c| BigRational::from_integer(c.clone())).collect()
}

fn trim(p: &mut Vec<BigRational>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

/// `(quotient, remainder)` over `Q`.
fn poly_divrem(a: &[BigRational], b: &[BigRational]) -> (Vec<BigRational>, Vec<BigRational>) {
    let mut r = a.to_vec();
    trim(&mut r);
    let mut b = b.to_vec();
    trim(&mut b);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if r.len() < b.len() {
        return (Vec::new(), r);
    }
    let mut q = vec![BigRational::zero(); r.len() - db];
    while r.len() > db && !r.is_empty() {
        let shift = r.len() - 1 - db;
        let c = r.last().unwrap() / &lead;
        for (j, bc) in b.iter().enumerate() {
            let t = &c * bc;
            r[shift + j] -= t;
        }
        q[shift] = c;
        r.pop();
        trim(&mut r);
    }
    (q, r)
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_sub(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().max(b.len());
    let mut out = vec![BigRational::zero(); n];
    for (i, x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, y) in b.iter().enumerate() {
        out[i] -= y;
    }
    trim(&mut out);
    out
}

/// An element of `Q(zeta_d)`: exactly `phi(d)` rational coefficients of a
/// polynomial in `zeta_d`, reduced modulo `Phi_d`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CyclotomicNumber {
    d: u64,
    coeffs: Vec<BigRational>,
}

impl fmt::Debug for CyclotomicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(zeta_{})[", self.d)?;
        for (i, c) in self.coeffs.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "]")
    }
}

impl CyclotomicNumber {
    /// Reduces `sum_j c_j zeta_d^j` (any length) modulo `Phi_d`.
    pub fn from_poly(d: u64, coeffs: &[BigRational]) -> Self {
        let phi = cyclotomic_polynomial(d);
        Self::reduce_with(d, coeffs, &phi)
    }

    fn reduce_with(d: u64, coeffs: &[BigRational], phi: &[BigInt]) -> Self {
        let n = phi.len() - 1;
        let mut c = coeffs.to_vec();
        if c.len() < n {
            c.resize(n, BigRational::zero());
        }
        for i in (n..c.len()).rev() {
            let lead = c[i].clone();
            if lead.is_zero() {
                continue;
            }
            for (j, pc) in phi.iter().enumerate() {
                if !pc.is_zero() {
                    c[i - n + j] -= &lead * BigRational::from_integer(pc.clone());
                }
            }
        }
        c.truncate(n);
        CyclotomicNumber { d, coeffs: c }
    }

    pub fn from_rational(d: u64, r: BigRational) -> Self {
        Self::from_poly(d, &[r])
    }

    pub fn zero(d: u64) -> Self {
        Self::from_poly(d, &[])
    }

    pub fn one(d: u64) -> Self {
        Self::from_rational(d, BigRational::one())
    }

    /// `zeta_d^k`.
    pub fn zeta_power(d: u64, k: u64) -> Self {
        let mut c = vec![BigRational::zero(); (k % d) as usize + 1];
        c[(k % d) as usize] = BigRational::one();
        Self::from_poly(d, &c)
    }

    pub fn order(&self) -> u64 {
        self.d
    }

    pub fn coefficients(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// The value as a rational, when it lies in `Q`.
    pub fn as_rational(&self) -> Option<BigRational> {
        self.coeffs[1..]
            .iter()
            .all(|c| c.is_zero())
            .then(|| self.coeffs[0].clone())
    }

    fn check(&self, other: &Self) {
        assert_eq!(self.d, other.d, "elements of different cyclotomic fields");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect();
        CyclotomicNumber { d: self.d, coeffs }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.check(other);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect();
        CyclotomicNumber { d: self.d, coeffs }
    }

    pub fn neg(&self) -> Self {
        CyclotomicNumber { d: self.d, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        CyclotomicNumber { d: self.d, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check(other);
        Self::from_poly(self.d, &poly_mul(&self.coeffs, &other.coeffs))
    }

    /// Multiplicative inverse, `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let phi = rational_poly(&cyclotomic_polynomial(self.d));
        // extended Euclid: s * a + t * phi = g
        let (mut r0, mut r1) = (phi.clone(), {
            let mut a = self.coeffs.clone();
            trim(&mut a);
            a
        });
        let (mut s0, mut s1): (Vec<BigRational>, Vec<BigRational>) =
            (Vec::new(), vec![BigRational::one()]);
        while !r1.is_empty() {
            let (q, r) = poly_divrem(&r0, &r1);
            let s = poly_sub(&s0, &poly_mul(&q, &s1));
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s);
        }
        // r0 is a nonzero constant since Phi_d is irreducible
        debug_assert_eq!(r0.len(), 1);
        let c = r0[0].clone();
        let s: Vec<BigRational> = s0.iter().map(|x| x / &c).collect();
        Some(Self::from_poly(self.d, &s))
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|i| self.mul(&i))
    }

    /// `sigma_k: zeta_d -> zeta_d^k`, `gcd(k, d) = 1`.
    pub fn galois(&self, k: u64) -> Self {
        assert_eq!(k.gcd(&self.d), 1, "galois: k must be a unit mod d");
        let d = self.d as usize;
        let mut c = vec![BigRational::zero(); d];
        for (j, x) in self.coeffs.iter().enumerate() {
            c[(j as u64 * k % self.d) as usize] += x;
        }
        let _ = d;
        Self::from_poly(self.d, &c)
    }

    /// Norm to `Q` as the product of all Galois conjugates.
    pub fn norm_by_conjugates(&self) -> BigRational {
        let mut acc = CyclotomicNumber::one(self.d);
        for k in 1..=self.d {
            if k.gcd(&self.d) == 1 {
                acc = acc.mul(&self.galois(k));
            }
        }
        acc.as_rational().expect("norm lies in Q")
    }

    /// Norm to `Q` via the resultant with `Phi_d`.
    pub fn norm(&self) -> BigRational {
        let den = self
            .coeffs
            .iter()
            .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        let res = resultant_with_cyclotomic(&ints, self.d);
        let phi = euler_phi(self.d) as u32;
        BigRational::new(res, den.pow(phi))
    }
}

/// Generalized Bernoulli number `B_{1,chi} = (1/f) sum_{a=1}^{f} chi'(a) a`
/// for the primitive character `chi'` of conductor `f` inducing `chi`,
/// as an element of `Q(zeta_d)`, `d = ord chi`.
pub fn b1_chi(chi: &DirichletCharacter) -> Result<CyclotomicNumber> {
    let (sums, f) = b1_exponent_sums(chi)?;
    let d = chi.order();
    let inv_f = BigRational::new(BigInt::one(), BigInt::from(f));
    let coeffs: Vec<BigRational> = sums
        .iter()
        .map(|s| BigRational::from_integer(BigInt::from(*s)) * &inv_f)
        .collect();
    Ok(CyclotomicNumber::from_poly(d, &coeffs))
}

/// `c_j = sum of a in [1, f]` with `chi'(a) = zeta_d^j`; returns `(c, f)`.
fn b1_exponent_sums(chi: &DirichletCharacter) -> Result<(Vec<u64>, u64)> {
    if chi.is_trivial() {
        return Err(Error::domain("B_{1,chi} requested for the trivial character"));
    }
    let d = chi.order() as usize;
    let f = chi.conductor();
    let mut sums = vec![0u64; d];
    for a in 1..=f {
        if let Some(k) = chi.primitive_value_exponent(a as i64) {
            sums[k as usize] += a;
        }
    }
    Ok((sums, f))
}

/// A prime `q = 1 mod d` below `below` together with a primitive `d`-th
/// root of unity mod `q`.
fn next_split_prime(d: u64, below: u64) -> (u64, u64) {
    let ells = arith::prime_divisors(d.max(2));
    let mut k = (below - 1) / d;
    loop {
        let q = k * d + 1;
        if q < below && is_prime_u64(q) {
            for x in 2u64.. {
                let w = pow_mod(x, (q - 1) / d, q);
                if d == 1 || ells.iter().all(|&l| d % l != 0 || pow_mod(w, d / l, q) != 1) {
                    return (q, w);
                }
            }
        }
        k -= 1;
    }
}

/// `Res(Phi_d, g) = prod_{gcd(k,d)=1} g(zeta_d^k)` for an integer
/// polynomial `g`, by evaluation at the roots of `Phi_d` modulo split
/// primes and CRT.
pub fn resultant_with_cyclotomic(g: &[BigInt], d: u64) -> BigInt {
    let phi = euler_phi(d);
    let l1: BigUint = g.iter().map(|c| c.magnitude().clone()).sum();
    if l1.is_zero() {
        return BigInt::zero();
    }
    // |g(alpha)| <= l1 on the unit circle
    let bound = BigInt::from(l1.pow(phi as u32)) * 2 + 1;
    let units: Vec<u64> = (1..=d).filter(|k| k.gcd(&d) == 1).collect();
    let mut modulus = BigInt::one();
    let mut value = BigInt::zero();
    let mut below = 1u64 << 62;
    while modulus <= bound {
        let (q, w) = next_split_prime(d, below);
        below = q;
        let gq: Vec<u64> = g
            .iter()
            .map(|c| c.mod_floor(&BigInt::from(q)).to_u64().unwrap())
            .collect();
        let mut prod = 1u64;
        for &k in &units {
            let x = pow_mod(w, k, q);
            let mut acc = 0u64;
            for &c in gq.iter().rev() {
                acc = (mul_mod(acc, x, q) + c) % q;
            }
            prod = mul_mod(prod, acc, q);
        }
        // Garner step: value += modulus * ((prod - value) * modulus^{-1} mod q)
        let qb = BigInt::from(q);
        let vq = value.mod_floor(&qb).to_u64().unwrap();
        let mq = modulus.mod_floor(&qb).to_u64().unwrap();
        let inv = arith::mod_inverse(mq, q).expect("split primes are distinct");
        let t = mul_mod((prod + q - vq) % q, inv, q);
        value += &modulus * BigInt::from(t);
        modulus *= qb;
    }
    let half = &modulus >> 1;
    if value > half {
        value -= &modulus;
    }
    value
}

/// `prod_{chi in orbit} (-1/2) B_{1,chi}`, a rational number.
pub fn orbit_norm(orbit: &CharacterOrbit) -> Result<BigRational> {
    if orbit.parity() != abelian::Parity::Odd {
        return Err(Error::domain("orbit_norm requires an orbit of odd characters"));
    }
    let chi = orbit.representative();
    let (sums, f) = b1_exponent_sums(chi)?;
    let d = chi.order();
    let g: Vec<BigInt> = sums.iter().map(|&s| BigInt::from(s)).collect();
    let res = resultant_with_cyclotomic(&g, d);
    let phi = euler_phi(d) as u32;
    // N(-g/(2f)) = (-1/(2f))^phi * Res(Phi_d, g)
    let mut num = res;
    if phi % 2 == 1 {
        num = -num;
    }
    Ok(BigRational::new(num, BigInt::from(2 * f).pow(phi)))
}

/// Norm of one orbit together with the data that identifies it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitNorm {
    /// Position of the orbit in the assembly order.
    pub id: usize,
    pub representative: Vec<u64>,
    pub order: u64,
    pub conductor: u64,
    pub size: usize,
    pub norm: BigRational,
}

#[derive(Clone, Debug)]
pub struct RelativeClassNumber {
    pub modulus: u64,
    pub value: BigUint,
    pub factorization: PrimeFactorization,
    /// Hasse unit index `Q`.
    pub unit_index: u64,
    /// Number of roots of unity `w`.
    pub roots_of_unity: u64,
    pub orbit_norms: Vec<OrbitNorm>,
}

#[derive(Clone, Debug, Default)]
pub struct HminusOptions {
    pub time_limit: Option<Duration>,
}

/// `h^-(Q(zeta_u))` with no time limit.
pub fn relative_class_number(u: u64) -> Result<RelativeClassNumber> {
    relative_class_number_with(u, &HminusOptions::default())
}

pub fn relative_class_number_with(u: u64, opts: &HminusOptions) -> Result<RelativeClassNumber> {
    let start = Instant::now();
    let u = abelian::normalize_conductor(u);
    if u < 3 {
        return Err(Error::domain(format!(
            "h^- needs a CM field: modulus {u} gives Q after normalization"
        )));
    }
    let over_time = |during: &str| -> Result<()> {
        match opts.time_limit {
            Some(limit) if start.elapsed() > limit => Err(Error::TimeLimit {
                seconds: limit.as_secs(),
                during: during.to_string(),
            }),
            _ => Ok(()),
        }
    };
    let chars = abelian::characters(u)?;
    let odd: Vec<DirichletCharacter> = chars.into_iter().filter(|c| c.is_odd()).collect();
    let mut orbits = abelian::galois_orbits(&odd);
    // largest orbits first; stable, so ties keep enumeration order
    orbits.sort_by(|a, b| b.len().cmp(&a.len()));
    over_time("enumerating characters")?;

    let norms: Vec<Result<BigRational>> = orbits
        .par_iter()
        .map(|o| {
            over_time("computing orbit norms")?;
            orbit_norm(o)
        })
        .collect();
    let unit_index: u64 = if arith::factorize_u64(u).len() == 1 { 1 } else { 2 };
    let roots_of_unity = if u % 2 == 1 { 2 * u } else { u };
    let mut product = BigRational::from_integer(BigInt::from(unit_index * roots_of_unity));
    let mut orbit_norms = Vec::with_capacity(orbits.len());
    for (id, (o, n)) in orbits.iter().zip(norms).enumerate() {
        let n = n?;
        product *= &n;
        orbit_norms.push(OrbitNorm {
            id,
            representative: o.representative().exponents().to_vec(),
            order: o.order(),
            conductor: o.conductor(),
            size: o.len(),
            norm: n,
        });
    }
    over_time("assembling h^-")?;
    if !product.is_integer() || product.numer().sign() != Sign::Plus {
        return Err(Error::NotInteger { modulus: u, value: product.to_string() });
    }
    let value = product.to_integer().magnitude().clone();
    let factorization = arith::factorize(&value);
    Ok(RelativeClassNumber {
        modulus: u,
        value,
        factorization,
        unit_index,
        roots_of_unity,
        orbit_norms,
    })
}

/// Determinant of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_determinant(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = t / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

/// `h^-(Q(zeta_p))` as `|det M| / p^{(p-3)/2}`, where `M` is the
/// `(p-1)/2`-square matrix of least positive residues of `r * s^{-1} mod p`.
pub fn maillet_hminus(p: u64) -> Result<BigUint> {
    if p < 5 || p % 2 == 0 || !is_prime_u64(p) {
        return Err(Error::domain(format!("maillet_hminus needs an odd prime p >= 5, got {p}")));
    }
    let half = (p - 1) / 2;
    let m: Vec<Vec<BigInt>> = (1..=half)
        .map(|r| {
            (1..=half)
                .map(|s| {
                    let sinv = arith::mod_inverse(s, p).unwrap();
                    BigInt::from(r * sinv % p)
                })
                .collect()
        })
        .collect();
    let det = bareiss_determinant(m).abs();
    let scale = BigInt::from(p).pow(((p - 3) / 2) as u32);
    let (q, r) = det.div_rem(&scale);
    if !r.is_zero() {
        return Err(Error::NotInteger { modulus: p, value: format!("{det} / {scale}") });
    }
    Ok(q.magnitude().clone())
}
