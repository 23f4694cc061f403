//! The A6519 sequence 1 2 1 4 1 2 1 8 ...: the largest power of two
//! dividing `n`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("A6519 is defined for n >= 1, got {0}")]
pub struct ScheduleError(pub u64);

/// `n AND -n` in two's complement.
pub fn a6519(n: u64) -> Result<u64, ScheduleError> {
    if n == 0 {
        return Err(ScheduleError(n));
    }
    Ok(n & n.wrapping_neg())
}

/// `f(n) = 1` for odd `n`, else `2 f(n / 2)`.
pub fn a6519_recursive(n: u64) -> Result<u64, ScheduleError> {
    match n {
        0 => Err(ScheduleError(n)),
        n if n % 2 == 1 => Ok(1),
        n => Ok(2 * a6519_recursive(n / 2)?),
    }
}

/// `((n XOR (n - 1)) + 1) / 2`.
pub fn a6519_xor(n: u64) -> Result<u64, ScheduleError> {
    if n == 0 {
        return Err(ScheduleError(n));
    }
    let x = (n ^ (n - 1)) as u128;
    Ok(x.div_ceil(2) as u64)
}

/// Depth limits `d_min * A6519(k)` for runs `k = 1, 2, ...`.
pub fn depth_schedule(d_min: u64) -> impl Iterator<Item = u64> {
    (1u64..).map(move |k| d_min.saturating_mul(k & k.wrapping_neg()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn first_terms() {
        let got: Vec<u64> = (1..=16).map(|n| a6519(n).unwrap()).collect();
        assert_eq!(got, vec![1, 2, 1, 4, 1, 2, 1, 8, 1, 2, 1, 4, 1, 2, 1, 16]);
        assert_eq!(a6519(12), Ok(4));
        assert_eq!(a6519(1 << 20), Ok(1 << 20));
        assert_eq!(a6519(1 << 63), Ok(1 << 63));
        assert_eq!(a6519_xor(1 << 63), Ok(1 << 63));
    }

    #[test]
    fn zero_is_rejected() {
        assert_eq!(a6519(0), Err(ScheduleError(0)));
        assert_eq!(a6519_recursive(0), Err(ScheduleError(0)));
        assert_eq!(a6519_xor(0), Err(ScheduleError(0)));
    }

    #[test]
    fn scaled_schedule() {
        let got: Vec<u64> = depth_schedule(32).take(8).collect();
        assert_eq!(got, vec![32, 64, 32, 128, 32, 64, 32, 256]);
    }

    proptest! {
        #[test]
        fn definitions_agree(n in 1u64..u64::MAX) {
            let f = a6519(n).unwrap();
            prop_assert_eq!(f, a6519_recursive(n).unwrap());
            prop_assert_eq!(f, a6519_xor(n).unwrap());
            prop_assert!(f.is_power_of_two());
            prop_assert_eq!(n % f, 0);
            prop_assert_eq!((n / f) % 2, 1);
        }
    }
}
