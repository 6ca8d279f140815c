//! The class-number bound
//! `H_F = 2^{m-1} / (m-1)! * sqrt(|D_F|) * (ln |D_F|)^{m-1}`, `m = [F:Q]`.
//!
//! Evaluation uses fixed-point interval arithmetic on big integers, so the
//! returned upper endpoint is a certified overestimate. Working precision
//! doubles until the enclosure is narrower than `2^-110` relative.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::abelian::AbelianFieldSpec;
use crate::error::{Error, Result};

/// Relative enclosure width accepted before returning.
const TARGET_BITS: u64 = 110;
const START_PRECISION: u32 = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundResult {
    pub abs_disc: BigUint,
    pub m: u64,
    /// Certified upper bound for `H_F`.
    pub upper: BigRational,
    /// Certified lower bound for `H_F`.
    pub lower: BigRational,
    /// Fixed-point bits used in the final evaluation.
    pub precision_bits: u32,
    pub note: Option<String>,
}

impl BoundResult {
    pub fn is_exact(&self) -> bool {
        self.upper == self.lower
    }

    /// True when the prime `p` exceeds the bound, i.e. `p > H_F` is certain.
    pub fn is_exceeded_by(&self, p: &BigUint) -> bool {
        BigRational::from_integer(BigInt::from(p.clone())) > self.upper
    }

    /// The upper endpoint to 10 significant digits, rounded up.
    pub fn display_upper(&self) -> String {
        format_rounded_up(&self.upper, 10)
    }

    pub fn to_f64(&self) -> f64 {
        rational_to_f64(&self.upper)
    }
}

impl fmt::Display for BoundResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_exact() {
            write!(f, "{}", self.display_upper())
        } else {
            write!(f, "{} (rounded up)", self.display_upper())
        }
    }
}

/// `H_F` for a field of absolute discriminant `abs_disc` and degree `m`.
pub fn class_number_bound(abs_disc: &BigUint, m: u64) -> Result<BoundResult> {
    class_number_bound_with(abs_disc, m, START_PRECISION)
}

/// As [`class_number_bound`], starting from at least `min_bits` of precision.
pub fn class_number_bound_with(abs_disc: &BigUint, m: u64, min_bits: u32) -> Result<BoundResult> {
    if abs_disc.is_zero() || m == 0 {
        return Err(Error::DegenerateBound(format!(
            "needs abs_disc >= 1 and m >= 1, got ({abs_disc}, {m})"
        )));
    }
    if abs_disc.is_one() && m >= 2 {
        return Err(Error::DegenerateBound(
            "formula gives 0 for |D| = 1 and m >= 2; the only field with |D| = 1 is Q, m = 1".into(),
        ));
    }
    let note = (m == 1 && !abs_disc.is_one())
        .then(|| "m = 1 with |D| > 1: formula yields sqrt|D|; hypothesis check deferred to user".to_string());
    let mut bits = min_bits.max(64);
    loop {
        let (lower, upper) = evaluate(abs_disc, m, bits);
        let width = &upper - &lower;
        let tight = width.is_zero()
            || width * BigRational::from_integer(BigInt::one() << TARGET_BITS) < lower;
        if tight {
            return Ok(BoundResult {
                abs_disc: abs_disc.clone(),
                m,
                upper,
                lower,
                precision_bits: bits,
                note,
            });
        }
        bits = bits.checked_mul(2).expect("precision overflow");
    }
}

/// `H_F` for an abelian field, `m = [F:Q]`.
pub fn field_bound(field: &AbelianFieldSpec) -> Result<BoundResult> {
    class_number_bound(field.abs_discriminant(), field.degree())
}

/// Closed interval `[lo, hi] * 2^-p` with nonnegative endpoints.
#[derive(Clone, Debug)]
struct Fixed {
    lo: BigUint,
    hi: BigUint,
}

fn ceil_shr(x: &BigUint, p: u32) -> BigUint {
    let q = x >> p;
    if (&q << p) == *x {
        q
    } else {
        q + 1u32
    }
}

fn ceil_div(a: &BigUint, b: &BigUint) -> BigUint {
    let (q, r) = a.div_rem(b);
    if r.is_zero() {
        q
    } else {
        q + 1u32
    }
}

impl Fixed {
    fn exact(x: BigUint) -> Self {
        Fixed { lo: x.clone(), hi: x }
    }

    fn mul(&self, o: &Fixed, p: u32) -> Fixed {
        Fixed { lo: (&self.lo * &o.lo) >> p, hi: ceil_shr(&(&self.hi * &o.hi), p) }
    }

    fn add(&self, o: &Fixed) -> Fixed {
        Fixed { lo: &self.lo + &o.lo, hi: &self.hi + &o.hi }
    }

    fn scale(&self, k: u64) -> Fixed {
        Fixed { lo: &self.lo * k, hi: &self.hi * k }
    }
}

/// `atanh(a/b)` for `0 <= a/b <= 1/3`.
fn atanh_ratio(a: &BigUint, b: &BigUint, p: u32) -> Fixed {
    let num = a << p;
    let t = Fixed { lo: &num / b, hi: ceil_div(&num, b) };
    let t2 = t.mul(&t, p);
    let mut pow = t;
    let mut sum = Fixed::exact(BigUint::zero());
    let mut k = 1u64;
    loop {
        let kb = BigUint::from(k);
        sum.lo += &pow.lo / &kb;
        sum.hi += ceil_div(&pow.hi, &kb);
        pow = pow.mul(&t2, p);
        k += 2;
        if pow.hi <= BigUint::one() {
            // tail <= pow / (1 - t^2) <= 9/8 ulp
            sum.hi += 2u32;
            return sum;
        }
    }
}

/// `ln x` for an integer `x >= 2`.
fn ln_int(x: &BigUint, p: u32) -> Fixed {
    let k = x.bits() - 1;
    let base = BigUint::one() << k;
    let ln2 = atanh_ratio(&BigUint::one(), &BigUint::from(3u32), p).scale(2);
    let frac = atanh_ratio(&(x - &base), &(x + &base), p).scale(2);
    ln2.scale(k).add(&frac)
}

fn sqrt_int(x: &BigUint, p: u32) -> Fixed {
    let shifted = x << (2 * p);
    let s = shifted.sqrt();
    if &s * &s == shifted {
        Fixed::exact(s)
    } else {
        Fixed { hi: &s + 1u32, lo: s }
    }
}

fn evaluate(d: &BigUint, m: u64, p: u32) -> (BigRational, BigRational) {
    let mut acc = sqrt_int(d, p);
    if m >= 2 {
        let ln = ln_int(d, p);
        for _ in 1..m {
            acc = acc.mul(&ln, p);
        }
    }
    let factorial: BigUint = (1..m).map(BigUint::from).product();
    let den = BigInt::from(factorial) << p;
    let two = BigInt::one() << (m - 1);
    let lo = BigRational::new(BigInt::from(acc.lo) * &two, den.clone());
    let hi = BigRational::new(BigInt::from(acc.hi) * &two, den);
    (lo, hi)
}

fn pow10(e: u32) -> BigInt {
    BigInt::from(10u32).pow(e)
}

/// Decimal exponent `e` with `10^e <= x < 10^{e+1}`, for `x > 0`.
fn decimal_exponent(x: &BigRational) -> i64 {
    let digits = |v: &BigInt| v.to_string().len() as i64;
    let mut e = digits(x.numer()) - digits(x.denom());
    let ten_pow = |e: i64| -> BigRational {
        if e >= 0 {
            BigRational::from_integer(pow10(e as u32))
        } else {
            BigRational::new(BigInt::one(), pow10((-e) as u32))
        }
    };
    while ten_pow(e) > *x {
        e -= 1;
    }
    while ten_pow(e + 1) <= *x {
        e += 1;
    }
    e
}

/// `x > 0` to `digits` significant figures, rounded toward `+inf`.
/// Exact integers are printed in full.
pub fn format_rounded_up(x: &BigRational, digits: u32) -> String {
    if x.is_integer() {
        return x.numer().to_string();
    }
    let mut e = decimal_exponent(x);
    let shift = digits as i64 - 1 - e;
    let scaled = if shift >= 0 {
        x * BigRational::from_integer(pow10(shift as u32))
    } else {
        x / BigRational::from_integer(pow10((-shift) as u32))
    };
    let mut mant = scaled.ceil().to_integer();
    if mant == pow10(digits) {
        mant = pow10(digits - 1);
        e += 1;
    }
    let s = mant.to_string();
    if (0..digits as i64).contains(&e) {
        let (int, frac) = s.split_at(e as usize + 1);
        if frac.is_empty() {
            int.to_string()
        } else {
            format!("{int}.{frac}")
        }
    } else if (-4..0).contains(&e) {
        format!("0.{}{}", "0".repeat((-e - 1) as usize), s)
    } else {
        format!("{}.{}e{}", &s[..1], &s[1..], e)
    }
}

fn rational_to_f64(x: &BigRational) -> f64 {
    // scale into the f64 range through the decimal exponent
    let e = decimal_exponent(x);
    let shift = 17 - e;
    let scaled = if shift >= 0 {
        x * BigRational::from_integer(pow10(shift as u32))
    } else {
        x / BigRational::from_integer(pow10((-shift) as u32))
    };
    let m: f64 = scaled.to_integer().to_string().parse().unwrap_or(f64::INFINITY);
    m * 10f64.powi(-(shift as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::{subfields, AbelianFieldSpec};

    fn b(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn exact_cases() {
        let one = class_number_bound(&b(1), 1).unwrap();
        assert!(one.is_exact());
        assert_eq!(one.upper, BigRational::one());
        assert_eq!(one.to_string(), "1");
        let sq = class_number_bound(&b(3969), 1).unwrap();
        assert_eq!(sq.upper, BigRational::from_integer(BigInt::from(63)));
        assert!(sq.note.is_some());
        for d in 1..200u64 {
            let r = class_number_bound(&b(d * d), 1).unwrap();
            assert_eq!(r.upper, BigRational::from_integer(BigInt::from(d)));
        }
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(class_number_bound(&b(1), 2), Err(Error::DegenerateBound(_))));
        assert!(class_number_bound(&b(0), 1).is_err());
        assert!(class_number_bound(&b(5), 0).is_err());
    }

    #[test]
    fn quadratic_59() {
        let r = class_number_bound(&b(59), 2).unwrap();
        assert_eq!(r.display_upper(), "62.64031880");
        assert!((r.to_f64() - 2.0 * 59f64.sqrt() * 59f64.ln()).abs() < 1e-9);
        assert!(r.is_exceeded_by(&b(233)));
        assert!(!r.is_exceeded_by(&b(3)));
        assert!(!r.is_exceeded_by(&b(62)));
        assert!(r.is_exceeded_by(&b(63)));
    }

    #[test]
    fn field_bounds_for_subfields_of_59() {
        let fields = subfields(59).unwrap();
        assert_eq!(field_bound(&fields[0]).unwrap().upper, BigRational::one());
        assert_eq!(field_bound(&fields[1]).unwrap(), class_number_bound(&b(59), 2).unwrap());
        let f29 = fields.iter().find(|f| f.degree() == 29).unwrap();
        assert_eq!(
            field_bound(f29).unwrap(),
            class_number_bound(&BigUint::from(59u32).pow(28), 29).unwrap()
        );
        let q = AbelianFieldSpec::rationals(59).unwrap();
        assert_eq!(field_bound(&q).unwrap().upper, BigRational::one());
    }

    #[test]
    fn formatting() {
        let r = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
        assert_eq!(format_rounded_up(&r(1, 3), 4), "0.3334");
        assert_eq!(format_rounded_up(&r(99999, 10000), 3), "10.0");
        assert_eq!(format_rounded_up(&r(7, 2), 10), "3.500000000");
        assert_eq!(format_rounded_up(&r(10_i64.pow(15) + 1, 3), 3), "3.34e14");
        assert_eq!(format_rounded_up(&r(1, 300000), 2), "3.4e-6");
    }

    #[test]
    fn enclosure_is_tight() {
        for (d, m) in [(59u64, 2u64), (3, 2), (10_000_019, 5), (2, 2), (1 << 40, 3)] {
            let r = class_number_bound(&b(d), m).unwrap();
            let width = &r.upper - &r.lower;
            assert!(width * BigRational::from_integer(BigInt::one() << 100) < r.lower);
        }
    }
}
