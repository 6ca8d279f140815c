//! Integer arithmetic: primality, factorization, Euler phi, Carmichael
//! lambda and multiplicative orders.
//!
//! Factorization is trial division by the primes below 2^16 followed by
//! Pollard's rho with Brent's cycle detection on the remaining cofactor.
//! Primality is deterministic below 2^64 (Miller-Rabin with the first
//! twelve prime bases); above that it is a 40-base Miller-Rabin test and
//! the result is reported as [`Primality::ProbablePrime`].

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const TRIAL_BOUND: u32 = 1 << 16;
const MR_BASES_U64: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
const MR_ROUNDS_BIG: usize = 40;

fn small_primes() -> &'static [u32] {
    static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let n = TRIAL_BOUND as usize;
        let mut sieve = vec![true; n];
        sieve[0] = false;
        sieve[1] = false;
        let mut i = 2;
        while i * i < n {
            if sieve[i] {
                let mut j = i * i;
                while j < n {
                    sieve[j] = false;
                    j += i;
                }
            }
            i += 1;
        }
        (0..n as u32).filter(|&k| sieve[k as usize]).collect()
    })
}

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Outcome of a primality test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Primality {
    Composite,
    Prime,
    /// Passed 40 Miller-Rabin rounds; only reported for n >= 2^64.
    ProbablePrime,
}

impl Primality {
    pub fn is_prime(self) -> bool {
        !matches!(self, Primality::Composite)
    }
}

fn miller_rabin_u64(n: u64, a: u64) -> bool {
    let a = a % n;
    if a == 0 {
        return true;
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality test for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &MR_BASES_U64 {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    MR_BASES_U64.iter().all(|&a| miller_rabin_u64(n, a))
}

fn miller_rabin_big(n: &BigUint, a: &BigUint, d: &BigUint, s: u64) -> bool {
    let one = BigUint::one();
    let n1 = n - &one;
    let mut x = a.modpow(d, n);
    if x == one || x == n1 {
        return true;
    }
    for _ in 1..s {
        x = &x * &x % n;
        if x == n1 {
            return true;
        }
    }
    false
}

/// Classify `n`. Exact below 2^64, probabilistic above.
pub fn primality(n: &BigUint) -> Primality {
    if let Some(small) = n.to_u64() {
        return if is_prime_u64(small) {
            Primality::Prime
        } else {
            Primality::Composite
        };
    }
    for &p in small_primes().iter().take(200) {
        if (n % p).is_zero() {
            return Primality::Composite;
        }
    }
    let one = BigUint::one();
    let n1 = n - &one;
    let s = n1.trailing_zeros().unwrap_or(0);
    let d = &n1 >> s;
    if !miller_rabin_big(n, &BigUint::from(2u32), &d, s) {
        return Primality::Composite;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_from(n));
    let lo = BigUint::from(3u32);
    for _ in 0..MR_ROUNDS_BIG {
        let a = rng.gen_biguint_range(&lo, &n1);
        if !miller_rabin_big(n, &a, &d, s) {
            return Primality::Composite;
        }
    }
    Primality::ProbablePrime
}

pub fn is_prime(n: &BigUint) -> bool {
    primality(n).is_prime()
}

fn seed_from(n: &BigUint) -> u64 {
    n.iter_u64_digits()
        .fold(0x9e37_79b9_7f4a_7c15u64, |h, d| (h ^ d).wrapping_mul(0x1000_0000_01b3).rotate_left(17))
}

/// One prime power `prime^exponent` of a factorization.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrimePower {
    pub prime: BigUint,
    pub exponent: u32,
    /// `false` when primality of `prime` is only probabilistic.
    pub certified: bool,
}

/// A positive integer together with its prime factorization, primes
/// strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PrimeFactorization {
    value: BigUint,
    factors: Vec<PrimePower>,
}

impl PrimeFactorization {
    /// Builds a factorization from already-known prime powers, checking
    /// primality and recomputing the value.
    pub fn from_prime_powers(pairs: &[(BigUint, u32)]) -> Result<Self> {
        let mut factors: Vec<PrimePower> = Vec::with_capacity(pairs.len());
        for (p, e) in pairs {
            if *e == 0 {
                return Err(Error::domain(format!("exponent of {p} must be positive")));
            }
            let status = primality(p);
            if !status.is_prime() {
                return Err(Error::domain(format!("{p} is not prime")));
            }
            factors.push(PrimePower {
                prime: p.clone(),
                exponent: *e,
                certified: status == Primality::Prime,
            });
        }
        factors.sort_by(|a, b| a.prime.cmp(&b.prime));
        // merge repeated primes
        let mut merged: Vec<PrimePower> = Vec::with_capacity(factors.len());
        for f in factors {
            match merged.last_mut() {
                Some(last) if last.prime == f.prime => last.exponent += f.exponent,
                _ => merged.push(f),
            }
        }
        let value = merged
            .iter()
            .fold(BigUint::one(), |acc, f| acc * f.prime.pow(f.exponent));
        Ok(PrimeFactorization { value, factors: merged })
    }

    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn factors(&self) -> &[PrimePower] {
        &self.factors
    }

    /// `(prime, exponent)` pairs.
    pub fn pairs(&self) -> Vec<(BigUint, u32)> {
        self.factors.iter().map(|f| (f.prime.clone(), f.exponent)).collect()
    }

    pub fn exponent_of(&self, p: &BigUint) -> u32 {
        self.factors
            .iter()
            .find(|f| &f.prime == p)
            .map_or(0, |f| f.exponent)
    }

    pub fn has_probable_primes(&self) -> bool {
        self.factors.iter().any(|f| !f.certified)
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }
}

impl fmt::Display for PrimeFactorization {
    /// `3 · 59 · 233`, `7^2 · 79241`, `1` for the empty product.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.factors.is_empty() {
            return write!(f, "1");
        }
        for (i, pp) in self.factors.iter().enumerate() {
            if i > 0 {
                write!(f, " · ")?;
            }
            if pp.exponent == 1 {
                write!(f, "{}", pp.prime)?;
            } else {
                write!(f, "{}^{}", pp.prime, pp.exponent)?;
            }
        }
        Ok(())
    }
}

fn brent_u64(n: u64, c: u64, seed: u64) -> Option<u64> {
    let f = |x: u64| (mul_mod(x, x, n) + c) % n;
    let mut y = seed % n;
    let m = 128u64;
    let mut g = 1u64;
    let mut r = 1u64;
    let mut q = 1u64;
    let mut x = y;
    let mut ys = y;
    while g == 1 {
        x = y;
        for _ in 0..r {
            y = f(y);
        }
        let mut k = 0;
        while k < r && g == 1 {
            ys = y;
            for _ in 0..m.min(r - k) {
                y = f(y);
                q = mul_mod(q, x.abs_diff(y), n);
            }
            g = q.gcd(&n);
            k += m;
        }
        r <<= 1;
    }
    if g == n {
        loop {
            ys = f(ys);
            g = x.abs_diff(ys).gcd(&n);
            if g > 1 {
                break;
            }
        }
    }
    (g != n).then_some(g)
}

fn brent_big(n: &BigUint, c: &BigUint, seed: &BigUint) -> Option<BigUint> {
    let f = |x: &BigUint| (x * x + c) % n;
    let one = BigUint::one();
    let mut y = seed % n;
    let m = 128u64;
    let mut g = one.clone();
    let mut r = 1u64;
    let mut q = one.clone();
    let mut x = y.clone();
    let mut ys = y.clone();
    let absdiff = |a: &BigUint, b: &BigUint| if a > b { a - b } else { b - a };
    while g == one {
        x = y.clone();
        for _ in 0..r {
            y = f(&y);
        }
        let mut k = 0;
        while k < r && g == one {
            ys = y.clone();
            for _ in 0..m.min(r - k) {
                y = f(&y);
                q = q * absdiff(&x, &y) % n;
            }
            g = q.gcd(n);
            k += m;
        }
        r <<= 1;
    }
    if &g == n {
        loop {
            ys = f(&ys);
            g = absdiff(&x, &ys).gcd(n);
            if g > one {
                break;
            }
        }
    }
    (&g != n).then_some(g)
}

/// Finds a nontrivial divisor of the odd composite `n`. The starting
/// point is derived from `n`; on cycle failure the polynomial constant
/// is incremented.
fn split(n: &BigUint) -> BigUint {
    let seed = seed_from(n);
    if let Some(small) = n.to_u64() {
        for c in 1u64.. {
            if let Some(d) = brent_u64(small, c, seed % small) {
                return BigUint::from(d);
            }
        }
        unreachable!()
    }
    let seed = BigUint::from(seed);
    let mut c = BigUint::one();
    loop {
        if let Some(d) = brent_big(n, &c, &seed) {
            return d;
        }
        c += 1u32;
    }
}

fn factor_into(n: BigUint, out: &mut Vec<(BigUint, u32)>) {
    if n.is_one() {
        return;
    }
    if is_prime(&n) {
        out.push((n, 1));
        return;
    }
    // perfect squares make rho slow to separate, peel them directly
    let r = n.sqrt();
    if &r * &r == n {
        factor_into(r.clone(), out);
        factor_into(r, out);
        return;
    }
    let d = split(&n);
    let q = &n / &d;
    factor_into(d, out);
    factor_into(q, out);
}

/// Complete prime factorization of `n >= 1`; `1` gives the empty list.
pub fn factorize(n: &BigUint) -> PrimeFactorization {
    assert!(!n.is_zero(), "factorize: n must be positive");
    let mut rest = n.clone();
    let mut raw: Vec<(BigUint, u32)> = Vec::new();
    for &p in small_primes() {
        if rest.is_one() {
            break;
        }
        let pb = BigUint::from(p);
        if &pb * &pb > rest {
            break;
        }
        let mut e = 0;
        while (&rest % p).is_zero() {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            raw.push((pb, e));
        }
    }
    factor_into(rest, &mut raw);
    PrimeFactorization::from_prime_powers(&raw).expect("factor_into yields primes")
}

/// Factorization of a machine integer as `(prime, exponent)` pairs.
pub fn factorize_u64(n: u64) -> Vec<(u64, u32)> {
    assert!(n > 0, "factorize_u64: n must be positive");
    let mut out = Vec::new();
    let mut rest = n;
    for &p in small_primes() {
        let p = p as u64;
        if p * p > rest {
            break;
        }
        let mut e = 0;
        while rest % p == 0 {
            rest /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    if rest > 1 {
        if is_prime_u64(rest) {
            out.push((rest, 1));
        } else {
            for pp in factorize(&BigUint::from(rest)).factors() {
                out.push((pp.prime.to_u64().unwrap(), pp.exponent));
            }
        }
    }
    out.sort_unstable();
    out
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize_u64(n).into_iter().map(|(p, _)| p).collect()
}

/// All positive divisors of `n`, ascending.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factorize_u64(n) {
        let len = divs.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

pub fn euler_phi(n: u64) -> u64 {
    assert!(n > 0, "euler_phi: n must be positive");
    factorize_u64(n)
        .into_iter()
        .fold(1, |acc, (p, e)| acc * (p - 1) * p.pow(e - 1))
}

/// Exponent of the unit group (Z/nZ)^*.
pub fn carmichael_lambda(n: u64) -> u64 {
    assert!(n > 0, "carmichael_lambda: n must be positive");
    factorize_u64(n).into_iter().fold(1, |acc, (p, e)| {
        let l = if p == 2 && e >= 3 {
            1 << (e - 2)
        } else {
            (p - 1) * p.pow(e - 1)
        };
        acc.lcm(&l)
    })
}

/// Inverse of `a` modulo `m`, if it exists.
pub fn mod_inverse(a: u64, m: u64) -> Option<u64> {
    let e = ((a % m) as i128).extended_gcd(&(m as i128));
    (e.gcd == 1).then(|| e.x.rem_euclid(m as i128) as u64)
}

/// Smallest `f >= 1` with `a^f = 1 mod n`, found by stripping prime
/// factors from the Carmichael exponent of `n`.
pub fn multiplicative_order(a: i64, n: u64) -> Result<u64> {
    if n < 2 {
        return Err(Error::domain(format!("multiplicative_order: modulus {n} < 2")));
    }
    let a = (a as i128).rem_euclid(n as i128) as u64;
    if a.gcd(&n) != 1 {
        return Err(Error::domain(format!(
            "multiplicative_order: gcd({a}, {n}) != 1"
        )));
    }
    let mut order = carmichael_lambda(n);
    for (p, _) in factorize_u64(order) {
        while order % p == 0 && pow_mod(a, order / p, n) == 1 {
            order /= p;
        }
    }
    Ok(order)
}

/// Order of `a mod n` for a big `a`.
pub fn multiplicative_order_big(a: &BigUint, n: u64) -> Result<u64> {
    let r = (a % n).to_u64().unwrap();
    multiplicative_order(r as i64, n)
}
