//! Rational-arithmetic versions of the effort distribution, for checking the
//! floating-point ones.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::PoolState;

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn ratio(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(num.into(), den.into())
}

/// `C(n - x, ns - 1) / C(n, ns)`, zero outside `1..=n-ns+1`.
pub fn effort_pmf(pool: PoolState, x: u64) -> BigRational {
    if x == 0 || x > pool.max_effort() {
        return BigRational::zero();
    }
    ratio(binomial(pool.n() - x, pool.ns() - 1), binomial(pool.n(), pool.ns()))
}

pub fn pmf_total(pool: PoolState) -> BigRational {
    (1..=pool.max_effort()).map(|x| effort_pmf(pool, x)).sum()
}

pub fn expected_effort(pool: PoolState) -> BigRational {
    (1..=pool.max_effort()).map(|x| effort_pmf(pool, x) * BigRational::from_integer(x.into())).sum()
}

pub fn expected_effort_closed_form(pool: PoolState) -> BigRational {
    BigRational::new((pool.n() + 1).into(), (pool.ns() + 1).into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), BigUint::from(10u32));
        assert_eq!(binomial(60, 30), BigUint::from(118264581564861424u64));
        assert_eq!(binomial(3, 4), BigUint::zero());
    }

    #[test]
    fn small_pool_is_exact() {
        let p = PoolState::new(5, 2).unwrap();
        assert_eq!(effort_pmf(p, 1), BigRational::new(2.into(), 5.into()));
        assert_eq!(pmf_total(p), BigRational::one());
        assert_eq!(expected_effort(p), BigRational::from_integer(2.into()));
    }
}
