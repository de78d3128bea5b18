//! Wigner 3j and 6j symbols via the Racah closed-form sums.
//!
//! Angular momenta are carried as [`HalfInt`], which stores twice the
//! quantum number so that half-integer arithmetic stays exact.

use std::fmt;

use crate::error::{Error, Result};

/// A non-negative or signed half-integer, stored as twice its value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn integer(n: i32) -> Self {
        HalfInt(2 * n)
    }

    /// Parses a float that must be an exact multiple of 1/2.
    pub fn try_from_f64(x: f64) -> Result<Self> {
        let twice = 2.0 * x;
        if !twice.is_finite() || twice.fract() != 0.0 || twice.abs() > i32::MAX as f64 {
            return Err(Error::invalid(format!("{x} is not a half-integer")));
        }
        Ok(HalfInt(twice as i32))
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

const FACTORIAL_TABLE_LEN: usize = 171;

fn factorial(n: i32) -> f64 {
    // 170! is the largest factorial representable in f64.
    static TABLE: std::sync::OnceLock<[f64; FACTORIAL_TABLE_LEN]> = std::sync::OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [1.0; FACTORIAL_TABLE_LEN];
        for i in 1..FACTORIAL_TABLE_LEN {
            t[i] = t[i - 1] * i as f64;
        }
        t
    });
    debug_assert!(n >= 0, "negative factorial argument {n}");
    table[n as usize]
}

/// Half of a sum of twice-values; callers guarantee the sum is even.
fn half(twice_sum: i32) -> i32 {
    debug_assert!(twice_sum % 2 == 0);
    twice_sum / 2
}

fn sign(exponent: i32) -> f64 {
    if exponent.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

fn triangle_ok(a: HalfInt, b: HalfInt, c: HalfInt) -> bool {
    let (a, b, c) = (a.0, b.0, c.0);
    (a + b + c) % 2 == 0 && c <= a + b && a <= b + c && b <= a + c
}

/// Triangle coefficient Δ(abc) = (a+b-c)!(a-b+c)!(-a+b+c)!/(a+b+c+1)!.
fn triangle_coefficient(a: HalfInt, b: HalfInt, c: HalfInt) -> f64 {
    let (a, b, c) = (a.0, b.0, c.0);
    factorial(half(a + b - c)) * factorial(half(a - b + c)) * factorial(half(-a + b + c))
        / factorial(half(a + b + c) + 1)
}

fn check_pair(j: HalfInt, m: HalfInt, label: &str) -> Result<()> {
    if j.0 < 0 {
        return Err(Error::invalid(format!("{label}: j = {j} is negative")));
    }
    if (j.0 - m.0) % 2 != 0 {
        return Err(Error::invalid(format!(
            "{label}: j = {j} and m = {m} differ by a non-integer"
        )));
    }
    if m.0.abs() > j.0 {
        return Err(Error::invalid(format!("{label}: |m| = |{m}| exceeds j = {j}")));
    }
    Ok(())
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Returns exactly zero when the triangle rule or `m1 + m2 + m3 = 0` fails.
pub fn wigner3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    check_pair(j1, m1, "first column")?;
    check_pair(j2, m2, "second column")?;
    check_pair(j3, m3, "third column")?;

    if m1.0 + m2.0 + m3.0 != 0 || !triangle_ok(j1, j2, j3) {
        return Ok(0.0);
    }

    let (tj1, tj2, tj3) = (j1.0, j2.0, j3.0);
    let (tm1, tm2, tm3) = (m1.0, m2.0, m3.0);

    let k_min = 0.max(half(tj2 - tj3 - tm1)).max(half(tj1 - tj3 + tm2));
    let k_max = half(tj1 + tj2 - tj3)
        .min(half(tj1 - tm1))
        .min(half(tj2 + tm2));

    let mut sum = 0.0;
    for k in k_min..=k_max {
        let denom = factorial(k)
            * factorial(half(tj3 - tj2 + tm1) + k)
            * factorial(half(tj3 - tj1 - tm2) + k)
            * factorial(half(tj1 + tj2 - tj3) - k)
            * factorial(half(tj1 - tm1) - k)
            * factorial(half(tj2 + tm2) - k);
        sum += sign(k) / denom;
    }

    let root = (triangle_coefficient(j1, j2, j3)
        * factorial(half(tj1 + tm1))
        * factorial(half(tj1 - tm1))
        * factorial(half(tj2 + tm2))
        * factorial(half(tj2 - tm2))
        * factorial(half(tj3 + tm3))
        * factorial(half(tj3 - tm3)))
    .sqrt();

    Ok(sign(half(tj1 - tj2 - tm3)) * root * sum)
}

/// Wigner 6j symbol `{j1 j2 j3; j4 j5 j6}`.
///
/// Each of the four triads `(j1 j2 j3)`, `(j1 j5 j6)`, `(j4 j2 j6)` and
/// `(j4 j5 j3)` must close; otherwise the symbol is exactly zero.
pub fn wigner6j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    j4: HalfInt,
    j5: HalfInt,
    j6: HalfInt,
) -> Result<f64> {
    for (i, j) in [j1, j2, j3, j4, j5, j6].into_iter().enumerate() {
        if j.0 < 0 {
            return Err(Error::invalid(format!("j{} = {j} is negative", i + 1)));
        }
    }
    let triads = [(j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3)];
    if !triads.iter().all(|&(a, b, c)| triangle_ok(a, b, c)) {
        return Ok(0.0);
    }

    let a = triads.map(|(a, b, c)| half(a.0 + b.0 + c.0));
    let b = [
        half(j1.0 + j2.0 + j4.0 + j5.0),
        half(j2.0 + j3.0 + j5.0 + j6.0),
        half(j3.0 + j1.0 + j6.0 + j4.0),
    ];
    let t_min = *a.iter().max().unwrap();
    let t_max = *b.iter().min().unwrap();

    let mut sum = 0.0;
    for t in t_min..=t_max {
        let denom = a.iter().map(|&ai| factorial(t - ai)).product::<f64>()
            * b.iter().map(|&bi| factorial(bi - t)).product::<f64>();
        sum += sign(t) * factorial(t + 1) / denom;
    }

    let root = triads
        .iter()
        .map(|&(a, b, c)| triangle_coefficient(a, b, c))
        .product::<f64>()
        .sqrt();
    Ok(root * sum)
}
