use cyclotomic_audit::bounds::class_number_bound;
use cyclotomic_audit::congruence::{
    corollary1_verdict, feasible_ranks, theorem2_audit, DescentTarget, RankHypothesis, Status,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn odd_prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 3;
    while n % 2 == 0 {
        n /= 2;
    }
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 2;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn pow_mod(b: u64, e: u32, m: u64) -> u64 {
    (0..e).fold(1 % m, |acc, _| acc * (b % m) % m)
}

/// Brute-force reading of the corollary for a known rank.
fn naive(n_degree: u64, p: u64, r: u32) -> bool {
    odd_prime_divisors(n_degree).iter().any(|&n| p % n == 0 || pow_mod(p, r, n) == 1)
}

proptest! {
    #[test]
    fn corollary1_matches_brute_force(half in 1u64..500, p in 2u64..2000, v in 1u32..5, r_seed in 0u32..5) {
        let n_degree = 2 * half + 1;
        let r = 1 + r_seed % v;
        let hyp = RankHypothesis::known(BigUint::from(p), r, v).unwrap();
        let verdict = corollary1_verdict(n_degree, &hyp).unwrap();
        let want = if naive(n_degree, p, r) { Status::Consistent } else { Status::Violation };
        prop_assert_eq!(verdict.status, want);
        prop_assert_eq!(verdict.witness.recheck(), verdict.status);
    }

    #[test]
    fn unknown_rank_is_consistent_if_any_rank_works(half in 1u64..300, p in 2u64..2000, v in 1u32..5) {
        let n_degree = 2 * half + 1;
        let hyp = RankHypothesis::unknown(BigUint::from(p), v).unwrap();
        let verdict = corollary1_verdict(n_degree, &hyp).unwrap();
        let any = (1..=v).any(|r| naive(n_degree, p, r));
        prop_assert_eq!(verdict.status == Status::Consistent, any);
    }

    #[test]
    fn inexact_multiplicity_never_violates(half in 1u64..300, p in 2u64..2000, v in 1u32..5) {
        let hyp = RankHypothesis::unknown(BigUint::from(p), v).unwrap().with_inexact_multiplicity();
        let verdict = corollary1_verdict(2 * half + 1, &hyp).unwrap();
        prop_assert_ne!(verdict.status, Status::Violation);
    }

    #[test]
    fn feasible_ranks_are_exactly_the_solutions(p in 2u64..5000, v in 1u32..8, idx in 0usize..20) {
        let primes = [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73];
        let n = primes[idx];
        let f = feasible_ranks(&BigUint::from(p), v, n).unwrap();
        if p % n == 0 {
            prop_assert!(f.vacuous);
            prop_assert_eq!(f.ranks, (1..=v).collect::<Vec<_>>());
        } else {
            let want: Vec<u32> = (1..=v).filter(|&r| pow_mod(p, r, n) == 1).collect();
            prop_assert!(!f.vacuous);
            prop_assert_eq!(f.ranks, want);
        }
    }

    #[test]
    fn theorem2_below_the_bound_is_inconclusive(d in 3u64..100_000, m in 1u64..6, p in 2u64..100, idx in 0usize..4) {
        let n = [3u64, 5, 7, 11][idx];
        let bound = class_number_bound(&BigUint::from(d), m).unwrap();
        let hyp = RankHypothesis::unknown(BigUint::from(p), 1).unwrap();
        let verdict = theorem2_audit(&DescentTarget::Bound { bound: bound.clone(), n }, &hyp).unwrap();
        if !bound.is_exceeded_by(&BigUint::from(p)) {
            prop_assert_eq!(verdict.status, Status::Inconclusive);
        } else {
            let ok = p % n == 0 || p % n == 1;
            prop_assert_eq!(verdict.status == Status::Consistent, ok);
        }
    }
}

#[test]
fn known_rank_examples() {
    // 3 has order 3 mod 13, 11 has order 1 mod 5
    assert_eq!(feasible_ranks(&BigUint::from(3u32), 3, 13).unwrap().ranks, [3]);
    assert_eq!(feasible_ranks(&BigUint::from(11u32), 2, 5).unwrap().ranks, [1, 2]);
    assert!(feasible_ranks(&BigUint::from(3u32), 3, 9).is_err());
}
