use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = BigRational;

const UNIT_ROUNDOFF: f64 = f64::EPSILON / 2.0;

/// Build a rational from a numerator/denominator pair of machine integers.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // numerator or denominator beyond f64 range
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

/// Prints "a" or "a/b".
pub fn fmt_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses "n", "n/d" or a finite decimal such as "-0.375" exactly.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        return (!d.is_zero()).then(|| Rational::new(n, d));
    }
    if let Some((w, f)) = t.split_once('.') {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let neg = w.starts_with('-');
        let w = if w.is_empty() || w == "-" || w == "+" { BigInt::zero() } else { w.parse::<BigInt>().ok()?.abs() };
        let scale = BigInt::from(10).pow(f.len() as u32);
        let frac: BigInt = f.parse().ok()?;
        let r = Rational::new(w * &scale + frac, scale);
        return Some(if neg { -r } else { r });
    }
    t.parse::<BigInt>().ok().map(Rational::from_integer)
}

/// The rational with smallest denominator in the closed interval [lo, hi].
/// Stern-Brocot descent via continued fractions.
pub fn simplest_between(lo: &Rational, hi: &Rational) -> Rational {
    assert!(lo <= hi);
    if lo.is_negative() && hi.is_positive() || lo.is_zero() || hi.is_zero() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_between(&-hi, &-lo);
    }
    let fl = lo.floor();
    if fl == *lo {
        return fl;
    }
    if fl.clone() + Rational::one() <= *hi {
        return fl + Rational::one();
    }
    // lo and hi share the integer part; recurse on reciprocals of the fractional parts
    let a = lo - &fl;
    let b = hi - &fl;
    let inner = simplest_between(&b.recip(), &a.recip());
    fl + inner.recip()
}

/// A coefficient is either an exact rational or a float with an absolute error radius.
#[derive(Clone, Debug)]
pub enum Coefficient {
    Exact(Rational),
    Approx { value: f64, radius: f64 },
}

impl PartialEq for Coefficient {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => a == b,
            (
                Coefficient::Approx { value: a, radius: ra },
                Coefficient::Approx { value: b, radius: rb },
            ) => a == b && ra == rb,
            _ => false,
        }
    }
}

impl Coefficient {
    pub fn exact(r: Rational) -> Self {
        Coefficient::Exact(r)
    }

    pub fn from_int(n: i64) -> Self {
        Coefficient::Exact(int(n))
    }

    pub fn approx(value: f64, radius: f64) -> Self {
        Coefficient::Approx { value, radius: radius.abs() }
    }

    pub fn zero() -> Self {
        Coefficient::Exact(Rational::zero())
    }

    pub fn one() -> Self {
        Coefficient::Exact(Rational::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Coefficient::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Coefficient::Exact(r) => Some(r),
            _ => None,
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Coefficient::Exact(r) => to_f64(r),
            Coefficient::Approx { value, .. } => *value,
        }
    }

    pub fn radius(&self) -> f64 {
        match self {
            Coefficient::Exact(_) => 0.0,
            Coefficient::Approx { radius, .. } => *radius,
        }
    }

    pub fn magnitude(&self) -> f64 {
        self.value().abs()
    }

    /// Exactly zero. Approximate values are never considered zero here;
    /// the series threshold decides that.
    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Exact(r) => r.is_zero(),
            Coefficient::Approx { .. } => false,
        }
    }

    fn loosen(&self) -> (f64, f64) {
        match self {
            Coefficient::Exact(r) => {
                let v = to_f64(r);
                let exact = Rational::from_float(v).map(|f| &f == r).unwrap_or(false);
                (v, if exact { 0.0 } else { UNIT_ROUNDOFF * v.abs() })
            }
            Coefficient::Approx { value, radius } => (*value, *radius),
        }
    }

    pub fn pow(&self, e: u32) -> Coefficient {
        let mut acc = Coefficient::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn recip(&self) -> Coefficient {
        match self {
            Coefficient::Exact(r) => Coefficient::Exact(r.recip()),
            Coefficient::Approx { value, radius } => {
                let v = 1.0 / value;
                let lower = (value.abs() - radius).max(f64::MIN_POSITIVE);
                Coefficient::approx(v, radius / (value.abs() * lower) + UNIT_ROUNDOFF * v.abs())
            }
        }
    }
}

impl<'a> Add<&'a Coefficient> for &'a Coefficient {
    type Output = Coefficient;
    fn add(self, rhs: &Coefficient) -> Coefficient {
        match (self, rhs) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => Coefficient::Exact(a + b),
            _ => {
                let (a, ra) = self.loosen();
                let (b, rb) = rhs.loosen();
                let v = a + b;
                Coefficient::approx(v, ra + rb + UNIT_ROUNDOFF * v.abs())
            }
        }
    }
}

impl<'a> Sub<&'a Coefficient> for &'a Coefficient {
    type Output = Coefficient;
    fn sub(self, rhs: &Coefficient) -> Coefficient {
        self + &(-rhs)
    }
}

impl<'a> Mul<&'a Coefficient> for &'a Coefficient {
    type Output = Coefficient;
    fn mul(self, rhs: &Coefficient) -> Coefficient {
        match (self, rhs) {
            (Coefficient::Exact(a), Coefficient::Exact(b)) => Coefficient::Exact(a * b),
            (Coefficient::Exact(a), _) | (_, Coefficient::Exact(a)) if a.is_zero() => {
                Coefficient::zero()
            }
            _ => {
                let (a, ra) = self.loosen();
                let (b, rb) = rhs.loosen();
                let v = a * b;
                Coefficient::approx(
                    v,
                    a.abs() * rb + b.abs() * ra + ra * rb + UNIT_ROUNDOFF * v.abs(),
                )
            }
        }
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        match self {
            Coefficient::Exact(r) => Coefficient::Exact(-r),
            Coefficient::Approx { value, radius } => Coefficient::approx(-value, *radius),
        }
    }
}

impl From<Rational> for Coefficient {
    fn from(r: Rational) -> Self {
        Coefficient::Exact(r)
    }
}

impl From<i64> for Coefficient {
    fn from(n: i64) -> Self {
        Coefficient::from_int(n)
    }
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficient::Exact(r) => write!(f, "{}", fmt_rational(r)),
            Coefficient::Approx { value, .. } => write!(f, "~{}", value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_literals() {
        assert_eq!(parse_rational("3/2"), Some(rat(3, 2)));
        assert_eq!(parse_rational("-0.375"), Some(rat(-3, 8)));
        assert_eq!(parse_rational(".5"), Some(rat(1, 2)));
        assert_eq!(parse_rational("7"), Some(int(7)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn simplest_rational_search() {
        assert_eq!(simplest_between(&rat(1, 3), &rat(1, 2)), rat(1, 2));
        assert_eq!(simplest_between(&rat(3, 10), &rat(4, 10)), rat(1, 3));
        assert_eq!(simplest_between(&rat(-7, 5), &rat(-6, 5)), rat(-4, 3));
        assert_eq!(simplest_between(&rat(-1, 5), &rat(1, 5)), int(0));
        assert_eq!(simplest_between(&rat(5, 2), &rat(5, 2)), rat(5, 2));
        assert_eq!(simplest_between(&rat(9, 10), &rat(11, 10)), int(1));
    }

    #[test]
    fn approx_radius_grows_under_arithmetic() {
        let a = Coefficient::approx(2f64.sqrt(), 1e-15);
        let sq = &a * &a;
        let diff = &sq - &Coefficient::from_int(2);
        assert!(diff.magnitude() <= diff.radius());
    }

    #[test]
    fn exact_times_zero_stays_exact() {
        let a = Coefficient::approx(1.5, 1e-16);
        assert_eq!(&a * &Coefficient::zero(), Coefficient::zero());
    }
}
