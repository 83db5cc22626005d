use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoverageError {
    #[error("failure rate {0} must lie strictly between 0 and 1")]
    RateOutOfRange(f64),
    #[error("side {side}: f = {f} must be below n = {n}")]
    BudgetTooLarge { side: char, n: u64, f: u64 },
    #[error("side {side}: e*p*n = {value} >= 1, the closed form does not apply")]
    ClosedFormInvalid { side: char, value: f64 },
}

/// Side sizes, fault budgets and the per-node failure rate per hour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageInput {
    pub n_a: u64,
    pub n_b: u64,
    pub f_a: u64,
    pub f_b: u64,
    pub p: f64,
}

impl CoverageInput {
    pub fn validate(&self) -> Result<(), CoverageError> {
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(CoverageError::RateOutOfRange(self.p));
        }
        for (side, n, f) in [('A', self.n_a, self.f_a), ('B', self.n_b, self.f_b)] {
            if f >= n {
                return Err(CoverageError::BudgetTooLarge { side, n, f });
            }
        }
        Ok(())
    }

    fn sides(&self) -> [(char, u64, u64); 2] {
        [('A', self.n_a, self.f_a), ('B', self.n_b, self.f_b)]
    }
}

/// Probability that more than `f` of `n` independent nodes fail, each with
/// probability `p`, by direct summation in exact rationals.
pub fn binomial_tail_exact(n: u64, f: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    let mut sum = BigRational::zero();
    let mut binom = BigInt::one();
    for i in 0..=n {
        if i > f {
            let term = BigRational::from_integer(binom.clone()) * pow(p, i) * pow(&q, n - i);
            sum += term;
        }
        binom = binom * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    sum
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

/// Exact probability that the fault hypothesis fails on either side: the sum
/// of the two binomial tails.
pub fn failure_exact(input: &CoverageInput) -> Result<BigRational, CoverageError> {
    input.validate()?;
    let p = BigRational::from_float(input.p).ok_or(CoverageError::RateOutOfRange(input.p))?;
    Ok(input
        .sides()
        .iter()
        .map(|&(_, n, f)| binomial_tail_exact(n, f, &p))
        .sum())
}

/// Exact coverage lower bound `1 - tail_A - tail_B`.
pub fn coverage_exact(input: &CoverageInput) -> Result<BigRational, CoverageError> {
    Ok(BigRational::one() - failure_exact(input)?)
}

/// Geometric majorant of the two tails,
/// `sum over sides of sqrt(1/(2 pi (f+1))) (e p n/(f+1))^(f+1) / (1 - e p n)`.
/// Refused unless `e p n < 1` on both sides.
pub fn failure_closed_form<T: Scalar>(input: &CoverageInput) -> Result<T, CoverageError> {
    input.validate()?;
    let p = T::lit(input.p);
    let e = T::lit(std::f64::consts::E);
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let mut total = T::zero();
    for (side, n, f) in input.sides() {
        let epn = e * p * T::lit(n as f64);
        if epn >= T::one() {
            return Err(CoverageError::ClosedFormInvalid {
                side,
                value: epn.to_f64().unwrap_or(f64::NAN),
            });
        }
        let k = T::lit((f + 1) as f64);
        total = total + (T::one() / (two_pi * k)).sqrt() * (epn / k).powf(k) / (T::one() - epn);
    }
    Ok(total)
}

/// Closed-form coverage lower bound `1 - failure_closed_form`.
pub fn coverage_lower_bound<T: Scalar>(input: &CoverageInput) -> Result<T, CoverageError> {
    Ok(T::one() - failure_closed_form::<T>(input)?)
}

/// Both coverage figures; the closed form is absent where it does not apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport<T> {
    pub exact: f64,
    pub exact_failure: f64,
    pub closed_form: Option<T>,
    pub closed_form_failure: Option<T>,
    /// Whether the exact failure probability is at most the closed-form one,
    /// compared in exact arithmetic.
    pub majorant_holds: Option<bool>,
}

pub fn coverage_report<T: Scalar>(input: &CoverageInput) -> Result<CoverageReport<T>, CoverageError> {
    let exact_failure = failure_exact(input)?;
    let closed = match failure_closed_form::<T>(input) {
        Ok(v) => Some(v),
        Err(CoverageError::ClosedFormInvalid { .. }) => None,
        Err(e) => return Err(e),
    };
    let majorant_holds = closed.and_then(|c| {
        let c = BigRational::from_float(c.to_f64()?)?;
        Some(exact_failure <= c)
    });
    Ok(CoverageReport {
        exact: (BigRational::one() - &exact_failure).to_f64().unwrap_or(f64::NAN),
        exact_failure: exact_failure.to_f64().unwrap_or(f64::NAN),
        closed_form: closed.map(|c| T::one() - c),
        closed_form_failure: closed,
        majorant_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(n: u64, f: u64, p: f64) -> CoverageInput {
        CoverageInput {
            n_a: n,
            n_b: n,
            f_a: f,
            f_b: f,
            p,
        }
    }

    #[test]
    fn exact_tail_matches_complement() {
        let p = BigRational::new(1.into(), 10.into());
        let all = binomial_tail_exact(5, 0, &p);
        let none = BigRational::one() - num_traits::pow(BigRational::new(9.into(), 10.into()), 5);
        assert_eq!(all, none);
        assert!(binomial_tail_exact(5, 5, &p).is_zero());
    }

    #[test]
    fn closed_form_refused_for_large_rate() {
        let err = failure_closed_form::<f64>(&input(10, 3, 0.05)).unwrap_err();
        assert!(matches!(err, CoverageError::ClosedFormInvalid { side: 'A', .. }));
        let report = coverage_report::<f64>(&input(10, 3, 0.05)).unwrap();
        assert!(report.closed_form.is_none());
        assert!(report.exact > 0.0 && report.exact < 1.0);
    }

    #[test]
    fn rate_validation() {
        assert!(coverage_exact(&input(10, 3, 0.0)).is_err());
        assert!(coverage_exact(&input(10, 3, 1.0)).is_err());
        assert!(coverage_exact(&input(3, 3, 0.1)).is_err());
    }

    #[test]
    fn small_rate_approaches_one() {
        let a = coverage_lower_bound::<f64>(&input(10, 3, 1e-3)).unwrap();
        let b = coverage_lower_bound::<f64>(&input(10, 3, 1e-5)).unwrap();
        assert!(b > a);
        assert!(1.0 - b < 1e-17);
    }

    #[test]
    fn f32_agrees_with_f64_on_failure_term() {
        let a = failure_closed_form::<f64>(&input(10, 3, 1e-3)).unwrap();
        let b = failure_closed_form::<f32>(&input(10, 3, 1e-3)).unwrap();
        assert!(((b as f64) - a).abs() / a < 1e-5);
    }
}
