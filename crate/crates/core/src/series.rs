//! Bivariate series with rational x-exponents and integer y-exponents.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::coeff::{fmt_rational, int, to_f64, Coefficient, Rational};

/// Relative part of the zero threshold for approximate coefficients.
pub const RELATIVE_ZERO: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("operation needs integer exponents, found x^{0}")]
    FractionalExponent(String),
    #[error("fractional powers of x are only defined for x > 0 (got x = {0})")]
    Domain(f64),
    #[error("blow-up exponent must be positive")]
    NonPositiveExponent,
}

pub type Exponent = (Rational, u32);

#[derive(Clone, Debug, Default)]
pub struct BiSeries {
    terms: BTreeMap<Exponent, Coefficient>,
    /// Approximate terms that were dropped by the zero threshold while building this value.
    cancelled: usize,
}

impl PartialEq for BiSeries {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl BiSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Coefficient) -> Self {
        Self::monomial(c, Rational::zero(), 0)
    }

    pub fn monomial(c: Coefficient, ex: Rational, ey: u32) -> Self {
        Self::from_terms(vec![((ex, ey), c)])
    }

    /// Integer monomial c x^a y^b.
    pub fn mono(c: i64, a: u32, b: u32) -> Self {
        Self::monomial(Coefficient::from_int(c), int(a as i64), b)
    }

    pub fn x() -> Self {
        Self::mono(1, 1, 0)
    }

    pub fn y() -> Self {
        Self::mono(1, 0, 1)
    }

    pub fn from_terms<I: IntoIterator<Item = (Exponent, Coefficient)>>(it: I) -> Self {
        let mut terms: BTreeMap<Exponent, Coefficient> = BTreeMap::new();
        for (k, c) in it {
            assert!(!k.0.is_negative(), "negative x exponent");
            match terms.get_mut(&k) {
                Some(v) => *v = &*v + &c,
                None => {
                    terms.insert(k, c);
                }
            }
        }
        let mut s = BiSeries { terms, cancelled: 0 };
        s.normalize();
        s
    }

    fn normalize(&mut self) {
        let max = self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max);
        let rel = RELATIVE_ZERO * max;
        let mut dropped = 0;
        self.terms.retain(|_, c| match c {
            Coefficient::Exact(r) => !r.is_zero(),
            Coefficient::Approx { value, radius } => {
                let keep = value.abs() > radius.max(rel);
                if !keep {
                    dropped += 1;
                }
                keep
            }
        });
        self.cancelled += dropped;
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Coefficient)> {
        self.terms.iter()
    }

    pub fn coeff(&self, ex: &Rational, ey: u32) -> Option<&Coefficient> {
        self.terms.get(&(ex.clone(), ey))
    }

    pub fn support(&self) -> Vec<(Rational, Rational)> {
        self.terms.keys().map(|(a, b)| (a.clone(), int(*b as i64))).collect()
    }

    /// Number of approximate terms lost to the zero threshold during construction.
    pub fn cancelled_terms(&self) -> usize {
        self.cancelled
    }

    pub fn is_exact(&self) -> bool {
        self.terms.values().all(|c| c.is_exact())
    }

    pub fn max_magnitude(&self) -> f64 {
        self.terms.values().map(|c| c.magnitude()).fold(0.0, f64::max)
    }

    /// lcm of the denominators of the x-exponents (1 for the empty series).
    pub fn exponent_denominator(&self) -> BigInt {
        self.terms
            .keys()
            .fold(BigInt::one(), |acc, (e, _)| acc.lcm(e.denom()))
    }

    pub fn has_integer_exponents(&self) -> bool {
        self.terms.keys().all(|(e, _)| e.is_integer())
    }

    fn require_integer(&self) -> Result<(), SeriesError> {
        match self.terms.keys().find(|(e, _)| !e.is_integer()) {
            Some((e, _)) => Err(SeriesError::FractionalExponent(fmt_rational(e))),
            None => Ok(()),
        }
    }

    /// Largest e_x + e_y over the support.
    pub fn total_degree(&self) -> Rational {
        self.terms
            .keys()
            .map(|(a, b)| a + int(*b as i64))
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn y_degree(&self) -> u32 {
        self.terms.keys().map(|(_, b)| *b).max().unwrap_or(0)
    }

    pub fn add(&self, other: &BiSeries) -> BiSeries {
        let mut out = self.clone();
        out.cancelled += other.cancelled;
        for (k, c) in &other.terms {
            match out.terms.get_mut(k) {
                Some(v) => *v = &*v + c,
                None => {
                    out.terms.insert(k.clone(), c.clone());
                }
            }
        }
        out.normalize();
        out
    }

    pub fn neg(&self) -> BiSeries {
        BiSeries {
            terms: self.terms.iter().map(|(k, c)| (k.clone(), -c)).collect(),
            cancelled: self.cancelled,
        }
    }

    pub fn sub(&self, other: &BiSeries) -> BiSeries {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Coefficient) -> BiSeries {
        let mut out = BiSeries::from_terms(self.terms.iter().map(|(k, v)| (k.clone(), v * c)));
        out.cancelled += self.cancelled;
        out
    }

    pub fn mul(&self, other: &BiSeries) -> BiSeries {
        let mut acc: BTreeMap<Exponent, Coefficient> = BTreeMap::new();
        for ((a1, b1), c1) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                let k = (a1 + a2, b1 + b2);
                let p = c1 * c2;
                match acc.get_mut(&k) {
                    Some(v) => *v = &*v + &p,
                    None => {
                        acc.insert(k, p);
                    }
                }
            }
        }
        let mut out = BiSeries { terms: acc, cancelled: self.cancelled + other.cancelled };
        out.normalize();
        out
    }

    pub fn pow(&self, e: u32) -> BiSeries {
        let mut acc = BiSeries::constant(Coefficient::one());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// ∂_x^a ∂_y^b.
    pub fn mixed_derivative(&self, a: u32, b: u32) -> Result<BiSeries, SeriesError> {
        self.require_integer()?;
        let terms = self.terms.iter().filter_map(|((p, q), c)| {
            let pi = p.to_integer().to_u64()?;
            if pi < a as u64 || *q < b {
                return None;
            }
            let fx = falling(pi, a);
            let fy = falling(*q as u64, b);
            let factor = Coefficient::Exact(Rational::from_integer(fx * fy));
            Some(((p - int(a as i64), q - b), c * &factor))
        });
        Ok(BiSeries::from_terms(terms.collect::<Vec<_>>()))
    }

    /// Taylor re-expansion: returns T(u, v) = S(u + x0, v + y0).
    pub fn recenter(&self, x0: &Rational, y0: &Rational) -> Result<BiSeries, SeriesError> {
        self.require_integer()?;
        let mut out = Vec::new();
        for ((p, q), c) in &self.terms {
            let p = p.to_integer().to_u32().expect("exponent fits in u32");
            for i in 0..=p {
                let cx = binomial(p, i) * pow_rat(x0, p - i);
                if cx.is_zero() {
                    continue;
                }
                for j in 0..=*q {
                    let cy = binomial(*q, j) * pow_rat(y0, q - j);
                    if cy.is_zero() {
                        continue;
                    }
                    out.push(((int(i as i64), j), c * &Coefficient::Exact(&cx * &cy)));
                }
            }
        }
        Ok(BiSeries::from_terms(out))
    }

    /// P(x, x^m (r + y')) expanded in (x, y').
    pub fn blowup_substitute(&self, m: &Rational, r: &Coefficient) -> Result<BiSeries, SeriesError> {
        if !m.is_positive() {
            return Err(SeriesError::NonPositiveExponent);
        }
        let r_pows: Vec<Coefficient> = {
            let top = self.y_degree();
            let mut v = vec![Coefficient::one()];
            for i in 1..=top as usize {
                let next = &v[i - 1] * r;
                v.push(next);
            }
            v
        };
        let mut out = Vec::new();
        for ((p, q), c) in &self.terms {
            let ex = p + m * int(*q as i64);
            for j in 0..=*q {
                let rp = &r_pows[(q - j) as usize];
                if rp.is_zero() {
                    continue;
                }
                let binom = Coefficient::Exact(binomial(*q, j));
                out.push(((ex.clone(), j), &(c * &binom) * rp));
            }
        }
        let mut res = BiSeries::from_terms(out);
        res.cancelled += self.cancelled;
        Ok(res)
    }

    /// Swap the roles of x and y.
    pub fn transpose(&self) -> Result<BiSeries, SeriesError> {
        self.require_integer()?;
        Ok(BiSeries::from_terms(
            self.terms
                .iter()
                .map(|((p, q), c)| {
                    let p = p.to_integer().to_u32().expect("exponent fits in u32");
                    ((int(*q as i64), p), c.clone())
                })
                .collect::<Vec<_>>(),
        ))
    }

    /// Keep only the terms whose exponent satisfies `keep`.
    pub fn filter<F: Fn(&Rational, u32) -> bool>(&self, keep: F) -> BiSeries {
        BiSeries {
            terms: self
                .terms
                .iter()
                .filter(|((a, b), _)| keep(a, *b))
                .map(|(k, c)| (k.clone(), c.clone()))
                .collect(),
            cancelled: self.cancelled,
        }
    }

    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64, SeriesError> {
        self.evaluate_with_bound(x, y).map(|(v, _)| v)
    }

    /// Value together with a bound on its floating-point rounding error.
    pub fn evaluate_with_bound(&self, x: f64, y: f64) -> Result<(f64, f64), SeriesError> {
        if x <= 0.0 && !self.has_integer_exponents() {
            return Err(SeriesError::Domain(x));
        }
        let mut sum = 0.0;
        let mut biggest: f64 = 0.0;
        for ((p, q), c) in &self.terms {
            let xp = if p.is_integer() {
                x.powi(p.to_integer().to_i32().expect("exponent fits in i32"))
            } else {
                x.powf(to_f64(p))
            };
            let t = c.value() * xp * y.powi(*q as i32);
            biggest = biggest.max(t.abs());
            sum += t;
        }
        let bound = self.terms.len().max(1) as f64 * f64::EPSILON * biggest;
        Ok((sum, bound))
    }

    /// Flattened float form for repeated evaluation.
    pub fn compile(&self) -> CompiledSeries {
        CompiledSeries {
            terms: self
                .terms
                .iter()
                .map(|((p, q), c)| (c.value(), to_f64(p), *q as i32))
                .collect(),
        }
    }
}

fn falling(n: u64, k: u32) -> BigInt {
    (0..k as u64).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i))
}

pub(crate) fn binomial(n: u32, k: u32) -> Rational {
    let mut b = BigInt::one();
    for i in 0..k {
        b = b * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    Rational::from_integer(b)
}

fn pow_rat(r: &Rational, e: u32) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * r)
}

/// Float snapshot of a series: (coefficient, x-exponent, y-exponent).
#[derive(Clone, Debug)]
pub struct CompiledSeries {
    pub terms: Vec<(f64, f64, i32)>,
}

impl CompiledSeries {
    /// P(x, y) for x > 0.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.terms.iter().map(|(c, p, q)| c * x.powf(*p) * y.powi(*q)).sum()
    }

    /// P(x, y) / (x^a |y|^b), computed termwise in log space so that tiny x
    /// does not underflow.
    pub fn eval_scaled(&self, x: f64, y: f64, a: f64, b: i32) -> f64 {
        self.eval_scaled_log(x.ln(), y.abs().ln(), y < 0.0, a, b, 1.0)
    }

    /// P(x, t·y) / (x^a |y|^b) with x = e^lx, |y| = e^ly and y negative when `neg`.
    pub fn eval_scaled_log(&self, lx: f64, ly: f64, neg: bool, a: f64, b: i32, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|(c, p, q)| {
                let mag = ((p - a) * lx + (q - b) as f64 * ly).exp() * t.powi(*q);
                let sign = if neg && q % 2 == 1 { -1.0 } else { 1.0 };
                c * sign * mag
            })
            .sum()
    }
}

impl fmt::Display for BiSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((p, q), c)) in self.terms.iter().enumerate() {
            let (negative, body) = match c {
                Coefficient::Exact(r) => (r.is_negative(), Coefficient::Exact(r.abs())),
                Coefficient::Approx { value, radius } => {
                    (*value < 0.0, Coefficient::approx(value.abs(), *radius))
                }
            };
            if i == 0 {
                if negative {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if negative { " - " } else { " + " })?;
            }
            let mut factors: Vec<String> = Vec::new();
            let unit = matches!(&body, Coefficient::Exact(r) if r.is_one());
            if !unit {
                factors.push(body.to_string());
            }
            if !p.is_zero() {
                factors.push(if p.is_one() {
                    "x".into()
                } else if p.is_integer() {
                    format!("x^{}", p)
                } else {
                    format!("x^({})", fmt_rational(p))
                });
            }
            if *q > 0 {
                factors.push(if *q == 1 { "y".into() } else { format!("y^{}", q) });
            }
            if factors.is_empty() {
                factors.push("1".into());
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::rat;

    fn fig1() -> BiSeries {
        BiSeries::mono(1, 5, 1).add(&BiSeries::mono(-1, 3, 2)).add(&BiSeries::mono(1, 2, 4))
    }

    #[test]
    fn add_cancels_and_combines() {
        assert!(BiSeries::mono(1, 2, 0).add(&BiSeries::mono(-1, 2, 0)).is_zero());
        assert_eq!(BiSeries::mono(1, 1, 1).add(&BiSeries::mono(1, 1, 1)), BiSeries::mono(2, 1, 1));
        assert_eq!(fig1().len(), 3);
    }

    #[test]
    fn mul_binomial_and_half_powers() {
        let d = BiSeries::y().sub(&BiSeries::x());
        let sq = d.mul(&d);
        let expect = BiSeries::mono(1, 0, 2).add(&BiSeries::mono(-2, 1, 1)).add(&BiSeries::mono(1, 2, 0));
        assert_eq!(sq, expect);
        let h = BiSeries::monomial(Coefficient::one(), rat(1, 2), 0);
        assert_eq!(h.exponent_denominator(), BigInt::from(2));
        let x = h.mul(&h);
        assert_eq!(x, BiSeries::x());
        assert_eq!(x.exponent_denominator(), BigInt::one());
    }

    #[test]
    fn derivatives() {
        assert_eq!(BiSeries::mono(1, 2, 3).mixed_derivative(1, 1).unwrap(), BiSeries::mono(6, 1, 2));
        assert_eq!(BiSeries::mono(1, 1, 1).mixed_derivative(1, 1).unwrap(), BiSeries::mono(1, 0, 0));
        let axis = BiSeries::mono(1, 4, 0).add(&BiSeries::mono(3, 0, 5));
        assert!(axis.mixed_derivative(1, 1).unwrap().is_zero());
        let frac = BiSeries::monomial(Coefficient::one(), rat(1, 2), 1);
        assert!(frac.mixed_derivative(1, 0).is_err());
    }

    #[test]
    fn recenter_examples() {
        let s = BiSeries::mono(1, 2, 0);
        assert_eq!(s.recenter(&int(0), &int(0)).unwrap(), s);
        let shifted = s.recenter(&int(1), &int(0)).unwrap();
        let expect = BiSeries::mono(1, 0, 0).add(&BiSeries::mono(2, 1, 0)).add(&BiSeries::mono(1, 2, 0));
        assert_eq!(shifted, expect);
        let back = shifted.recenter(&int(-1), &int(0)).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn blowup_examples() {
        let d = BiSeries::y().sub(&BiSeries::x());
        let p = d.mul(&d);
        assert_eq!(p.blowup_substitute(&int(1), &Coefficient::one()).unwrap(), BiSeries::mono(1, 2, 2));
        let m0 = rat(3, 2);
        let got = BiSeries::y().blowup_substitute(&m0, &Coefficient::zero()).unwrap();
        assert_eq!(got, BiSeries::monomial(Coefficient::one(), m0, 1));
        let child = fig1().blowup_substitute(&rat(1, 2), &Coefficient::one()).unwrap();
        let leftmost = child.terms().map(|(k, _)| k.clone()).min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
        // terms with the smallest x-exponent: the lowest y among them is the leftmost vertex
        assert_eq!(leftmost, Some((int(4), 1)));
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(BiSeries::mono(1, 1, 1).evaluate(2.0, 3.0).unwrap(), 6.0);
        let h = BiSeries::monomial(Coefficient::one(), rat(1, 2), 0);
        assert_eq!(h.evaluate(4.0, 7.0).unwrap(), 2.0);
        assert!(h.evaluate(-1.0, 0.0).is_err());
        assert_eq!(fig1().evaluate(1.0, 1.0).unwrap(), 1.0);
        // integer exponents allow negative x
        assert_eq!(BiSeries::mono(1, 3, 0).evaluate(-2.0, 0.0).unwrap(), -8.0);
    }

    #[test]
    fn threshold_drops_cancelled_approximate_terms() {
        let r = Coefficient::approx(2f64.sqrt(), 1e-14);
        // y^2 - 2x^2 at y = x (sqrt2 + y')
        let p = BiSeries::mono(1, 0, 2).add(&BiSeries::mono(-2, 2, 0));
        let child = p.blowup_substitute(&int(1), &r).unwrap();
        assert!(child.coeff(&int(2), 0).is_none());
        assert!(child.cancelled_terms() >= 1);
        assert!(child.coeff(&int(2), 1).is_some());
    }

    #[test]
    fn canonical_print() {
        assert_eq!(fig1().to_string(), "x^2*y^4 - x^3*y^2 + x^5*y");
        assert_eq!(BiSeries::zero().to_string(), "0");
        assert_eq!(BiSeries::mono(1, 1, 1).to_string(), "x*y");
        assert_eq!(BiSeries::mono(-3, 0, 0).to_string(), "-3");
        let s = BiSeries::monomial(Coefficient::Exact(rat(3, 2)), rat(1, 2), 2);
        assert_eq!(s.to_string(), "3/2*x^(1/2)*y^2");
    }

    #[test]
    fn scaled_evaluation_matches_direct() {
        let c = fig1().compile();
        let (x, y) = (0.3, -0.7);
        let direct = c.eval(x, y);
        let scaled = c.eval_scaled(x, y, 3.0, 2) * x.powi(3) * y.abs().powi(2);
        assert!((direct - scaled).abs() < 1e-14);
    }
}
