//! Executable forms of the A6519 identities and the series inequalities
//! behind the restart bound.
//!
//! The identities are checked exhaustively on integers. The inequalities
//! are checked on a grid of `gamma` values with each series evaluated to a
//! certified error: a check passes when the partial sum plus its tail
//! bound does not exceed the right-hand side.

use std::f64::consts::{E, LN_2};

use crate::luby::schedule::a6519;

/// Certified default tolerance for series truncation.
pub const SERIES_TOLERANCE: f64 = 1e-9;

/// Relative slack for inequalities that hold with equality at some point
/// (`1/(1-g) = 1 + g/(1-g)` when `a = 1`), where the two sides differ only
/// by rounding.
const ROUNDING_SLACK: f64 = 1e-12;

/// A partial sum with an upper bound on the omitted tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Series {
    pub value: f64,
    pub error: f64,
}

impl Series {
    pub fn upper(&self) -> f64 {
        self.value + self.error
    }
}

/// `0.01`, `0.05, 0.10, ..., 0.95`, `0.99`.
pub fn gamma_grid() -> Vec<f64> {
    let mut grid = vec![0.01];
    grid.extend((1..20).map(|k| k as f64 * 0.05));
    grid.push(0.99);
    grid
}

fn f(n: u64) -> u64 {
    a6519(n).expect("n >= 1")
}

/// Returns the first `(k, n, a, b)` violating `f(k 2^n + a 2^b) = 2^b` for
/// odd `a` with `a 2^b < 2^n`.
pub fn fractal_shift_counterexample(k_max: u64, n_max: u32) -> Option<(u64, u32, u64, u32)> {
    for n in 0..=n_max {
        for b in 0..n {
            let mut a = 1u64;
            while a << b < 1u64 << n {
                for k in 0..=k_max {
                    let index = (k << n) + (a << b);
                    if f(index) != 1 << b || f(a << b) != 1 << b {
                        return Some((k, n, a, b));
                    }
                }
                a += 2;
            }
        }
    }
    None
}

/// `sum_{c=1}^{2^n - 1} f(c)` by direct summation.
pub fn partial_sum(n: u32) -> u64 {
    (1..1u64 << n).map(f).sum()
}

/// The closed form `n 2^(n-1)`.
pub fn partial_sum_closed_form(n: u32) -> u64 {
    if n == 0 {
        0
    } else {
        u64::from(n) << (n - 1)
    }
}

/// Returns the first `k <= k_max` where `f(k) = 2^n` and `k = (2c+1) 2^n`
/// disagree for some `n`.
pub fn power_of_two_counterexample(k_max: u64) -> Option<u64> {
    (1..=k_max).find(|&k| {
        (0..64u32).any(|n| {
            let lhs = f(k) == 1u64 << n;
            let rhs = k % (1u64 << n) == 0 && (k >> n) % 2 == 1;
            lhs != rhs
        })
    })
}

/// Sum over `n >= 0` of `term(n)` for terms whose ratio `term(n+1)/term(n)`
/// is at most `ratio(n)` from index `n` on, with `ratio` non-increasing.
fn doubly_exponential_series(
    term: impl Fn(u32) -> f64,
    ratio: impl Fn(u32) -> f64,
    tolerance: f64,
) -> Series {
    let mut value = 0.0;
    let mut n = 0u32;
    loop {
        let t = term(n);
        value += t;
        let r = ratio(n);
        if r < 1.0 {
            let tail = t * r / (1.0 - r);
            if tail < tolerance || n >= 62 {
                return Series { value, error: tail };
            }
        }
        n += 1;
    }
}

/// `sum_{n>=0} 2^n g^(2^n)`.
pub fn sum_2n_gamma_2n(gamma: f64, tolerance: f64) -> Series {
    if gamma == 0.0 {
        return Series { value: 0.0, error: 0.0 };
    }
    // term(n+1)/term(n) = 2 g^(2^n), non-increasing in n.
    doubly_exponential_series(
        |n| 2f64.powi(n as i32) * gamma.powf(2f64.powi(n as i32)),
        |n| 2.0 * gamma.powf(2f64.powi(n as i32)),
        tolerance,
    )
}

/// `sum_{n>=0} g^(2^n)`.
pub fn sum_gamma_2n(gamma: f64, tolerance: f64) -> Series {
    if gamma == 0.0 {
        return Series { value: 0.0, error: 0.0 };
    }
    doubly_exponential_series(
        |n| gamma.powf(2f64.powi(n as i32)),
        |n| gamma.powf(2f64.powi(n as i32)),
        tolerance,
    )
}

/// `sum_{k>=1} g^k f(k)`, with the tail bounded through `f(k) <= k`.
pub fn a6519_generating(gamma: f64, tolerance: f64) -> Series {
    let mut value = 0.0;
    let mut power = 1.0;
    let mut k = 0u64;
    loop {
        k += 1;
        power *= gamma;
        value += power * f(k) as f64;
        // sum_{j>k} j g^j = g^(k+1) ((k+1) - k g) / (1-g)^2
        let kf = k as f64;
        let tail = power * gamma * ((kf + 1.0) - kf * gamma) / ((1.0 - gamma) * (1.0 - gamma));
        if tail < tolerance {
            return Series { value, error: tail };
        }
    }
}

/// One evaluated inequality.
#[derive(Clone, Debug)]
pub struct LemmaCheck {
    pub lemma: &'static str,
    pub gamma: f64,
    pub a: Option<u32>,
    pub lhs: Series,
    pub rhs: f64,
}

impl LemmaCheck {
    pub fn holds(&self) -> bool {
        self.lhs.upper() <= self.rhs + ROUNDING_SLACK * self.rhs.abs()
    }
}

pub const LEMMA_2N_GAMMA_2N: &str = "sum 2^n g^(2^n) <= (1/e + g/ln 2) / ln(1/g)";
pub const LEMMA_GAMMA_2N_INNER: &str = "sum g^(2^n) <= g ceil(log2(1/log2(1/g))) + 1";
pub const LEMMA_GAMMA_2N_OUTER: &str = "sum g^(2^n) <= log2(1/ln(1/g)) + log2 ln 16";
pub const LEMMA_GENERATIVE: &str =
    "sum g^k f(k) <= (1/e + 1/ln 2 + log2(ln 16)/2 + log2(1/(1-g))/2) / (1-g)";
pub const LEMMA_EXP_TO_LIN: &str = "1/(1-g^a) <= 1 + g/(a(1-g))";

pub fn check_2n_gamma_2n(gamma: f64) -> LemmaCheck {
    let ln_inv = (1.0 / gamma).ln();
    LemmaCheck {
        lemma: LEMMA_2N_GAMMA_2N,
        gamma,
        a: None,
        lhs: sum_2n_gamma_2n(gamma, SERIES_TOLERANCE),
        rhs: (1.0 / E + gamma / LN_2) / ln_inv,
    }
}

pub fn check_gamma_2n_inner(gamma: f64) -> LemmaCheck {
    let n = (1.0 / (1.0 / gamma).log2()).log2().ceil();
    LemmaCheck {
        lemma: LEMMA_GAMMA_2N_INNER,
        gamma,
        a: None,
        lhs: sum_gamma_2n(gamma, SERIES_TOLERANCE),
        rhs: gamma * n + 1.0,
    }
}

pub fn check_gamma_2n_outer(gamma: f64) -> LemmaCheck {
    LemmaCheck {
        lemma: LEMMA_GAMMA_2N_OUTER,
        gamma,
        a: None,
        lhs: sum_gamma_2n(gamma, SERIES_TOLERANCE),
        rhs: (1.0 / (1.0 / gamma).ln()).log2() + 16f64.ln().log2(),
    }
}

pub fn check_generative(gamma: f64) -> LemmaCheck {
    let rhs = (1.0 / E + 1.0 / LN_2 + 0.5 * 16f64.ln().log2() + 0.5 * (1.0 / (1.0 - gamma)).log2())
        / (1.0 - gamma);
    LemmaCheck {
        lemma: LEMMA_GENERATIVE,
        gamma,
        a: None,
        lhs: a6519_generating(gamma, SERIES_TOLERANCE),
        rhs,
    }
}

pub fn check_exp_to_lin(gamma: f64, a: u32) -> LemmaCheck {
    LemmaCheck {
        lemma: LEMMA_EXP_TO_LIN,
        gamma,
        a: Some(a),
        lhs: Series {
            value: 1.0 / (1.0 - gamma.powi(a as i32)),
            error: 0.0,
        },
        rhs: 1.0 + gamma / (f64::from(a) * (1.0 - gamma)),
    }
}

/// Every inequality at every grid point (and `a` in {1, 2, 4, 8}).
pub fn check_all_inequalities() -> Vec<LemmaCheck> {
    let mut checks = Vec::new();
    for gamma in gamma_grid() {
        checks.push(check_2n_gamma_2n(gamma));
        checks.push(check_gamma_2n_inner(gamma));
        checks.push(check_gamma_2n_outer(gamma));
        checks.push(check_generative(gamma));
        for a in [1, 2, 4, 8] {
            checks.push(check_exp_to_lin(gamma, a));
        }
    }
    checks
}
