//! Real roots of univariate edge polynomials, with exact multiplicities when
//! the coefficients are rational.

use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::coeff::{rat, simplest_between, to_f64, Coefficient, Rational};

/// Relative width to which real roots are refined.
pub const ROOT_TOLERANCE: f64 = 1e-14;
/// Two numerical roots closer than this (relative) are treated as one multiple root.
const CLUSTER_TOLERANCE: f64 = 1e-3;
const MAX_NEWTON: usize = 200;
const MAX_ABERTH: usize = 2000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("zero polynomial has no well-defined roots")]
    ZeroPolynomial,
    #[error("root refinement did not converge in [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },
}

/// Polynomial in one variable, coefficients in ascending degree.
#[derive(Debug, Clone, PartialEq)]
pub struct UniPoly(pub Vec<Coefficient>);

#[derive(Debug, Clone, PartialEq)]
pub struct RootReport {
    /// Nonzero real roots in increasing order with multiplicities.
    pub real: Vec<(Coefficient, u32)>,
    /// Non-real roots (both members of each conjugate pair).
    pub complex: Vec<(Complex64, u32)>,
    /// Multiplicity of the root at zero.
    pub zero_multiplicity: u32,
}

impl UniPoly {
    pub fn degree(&self) -> Option<usize> {
        self.0.iter().rposition(|c| !c.is_zero())
    }
}

pub fn roots_with_multiplicity(f: &UniPoly) -> Result<RootReport, RootError> {
    let deg = f.degree().ok_or(RootError::ZeroPolynomial)?;
    let low = f.0.iter().position(|c| !c.is_zero()).expect("nonzero");
    let trimmed: Vec<Coefficient> = f.0[low..=deg].to_vec();
    if trimmed.iter().all(|c| c.is_exact()) {
        let q: Vec<Rational> = trimmed.iter().map(|c| c.as_exact().unwrap().clone()).collect();
        exact_roots(&q, low as u32)
    } else {
        let v: Vec<f64> = trimmed.iter().map(|c| c.value()).collect();
        numeric_roots(&v, low as u32)
    }
}

// ---- exact polynomial arithmetic over Q -------------------------------------------

type QPoly = Vec<Rational>;

fn trim(mut p: QPoly) -> QPoly {
    while p.last().map_or(false, |c| c.is_zero()) {
        p.pop();
    }
    p
}

fn deriv(p: &QPoly) -> QPoly {
    trim(p.iter().enumerate().skip(1).map(|(i, c)| c * Rational::from_integer((i as i64).into())).collect())
}

fn sub(a: &QPoly, b: &QPoly) -> QPoly {
    let n = a.len().max(b.len());
    trim(
        (0..n)
            .map(|i| {
                a.get(i).cloned().unwrap_or_else(Rational::zero) - b.get(i).cloned().unwrap_or_else(Rational::zero)
            })
            .collect(),
    )
}

fn divrem(a: &QPoly, b: &QPoly) -> (QPoly, QPoly) {
    let b = trim(b.clone());
    assert!(!b.is_empty(), "division by zero polynomial");
    let mut r = trim(a.clone());
    if r.len() < b.len() {
        return (vec![], r);
    }
    let mut q = vec![Rational::zero(); r.len() - b.len() + 1];
    let lead = b.last().unwrap().clone();
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let c = r.last().unwrap() / &lead;
        for (i, bc) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &c * bc;
        }
        q[shift] = c;
        r.pop();
        r = trim(r);
    }
    (trim(q), r)
}

fn monic(p: QPoly) -> QPoly {
    let lead = p.last().cloned().expect("nonzero");
    p.into_iter().map(|c| c / &lead).collect()
}

fn gcd(a: &QPoly, b: &QPoly) -> QPoly {
    let (mut a, mut b) = (trim(a.clone()), trim(b.clone()));
    while !b.is_empty() {
        let (_, r) = divrem(&a, &b);
        a = b;
        b = r;
    }
    monic(a)
}

fn eval(p: &QPoly, x: &Rational) -> Rational {
    p.iter().rev().fold(Rational::zero(), |acc, c| acc * x + c)
}

/// Yun's square-free decomposition: returns (factor, multiplicity) with
/// nonconstant pairwise coprime square-free factors.
fn square_free(f: &QPoly) -> Vec<(QPoly, u32)> {
    let f = monic(f.clone());
    let df = deriv(&f);
    let a0 = gcd(&f, &df);
    let mut b = divrem(&f, &a0).0;
    let c = divrem(&df, &a0).0;
    let mut d = sub(&c, &deriv(&b));
    let mut out = Vec::new();
    let mut i = 1;
    while b.len() > 1 {
        let a = gcd(&b, &d);
        let nb = divrem(&b, &a).0;
        let nc = divrem(&d, &a).0;
        if a.len() > 1 {
            out.push((a, i));
        }
        d = sub(&nc, &deriv(&nb));
        b = nb;
        i += 1;
    }
    out
}

fn sturm_chain(g: &QPoly) -> Vec<QPoly> {
    let mut chain = vec![g.clone(), deriv(g)];
    loop {
        let n = chain.len();
        if chain[n - 1].is_empty() {
            chain.pop();
            break;
        }
        let (_, r) = divrem(&chain[n - 2], &chain[n - 1]);
        if r.is_empty() {
            break;
        }
        chain.push(r.into_iter().map(|c| -c).collect());
    }
    chain
}

fn variations(chain: &[QPoly], x: &Rational) -> usize {
    let signs: Vec<i32> = chain
        .iter()
        .map(|p| {
            let v = eval(p, x);
            if v.is_positive() {
                1
            } else if v.is_negative() {
                -1
            } else {
                0
            }
        })
        .filter(|s| *s != 0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn cauchy_bound(g: &QPoly) -> Rational {
    let lead = g.last().unwrap().abs();
    Rational::one() + g[..g.len() - 1].iter().map(|c| c.abs() / &lead).max().unwrap_or_else(Rational::zero)
}

/// A point of (a, b) where g does not vanish, near the midpoint.
fn split_point(g: &QPoly, a: &Rational, b: &Rational) -> Rational {
    let w = b - a;
    for k in [2i64, 3, 5, 7, 11, 13] {
        let t = a + &w / Rational::from_integer(k.into()) * Rational::from_integer((k / 2).into());
        if !eval(g, &t).is_zero() {
            return t;
        }
    }
    unreachable!("a square-free polynomial cannot vanish at six distinct points of an isolating interval")
}

/// Disjoint intervals (a, b], each holding exactly one root of square-free g.
fn isolate(g: &QPoly) -> Vec<(Rational, Rational)> {
    let chain = sturm_chain(g);
    let bound = cauchy_bound(g);
    let mut stack = vec![(-bound.clone(), bound)];
    let mut out = Vec::new();
    while let Some((a, b)) = stack.pop() {
        let n = variations(&chain, &a) - variations(&chain, &b);
        match n {
            0 => {}
            1 => out.push((a, b)),
            _ => {
                let m = split_point(g, &a, &b);
                stack.push((a, m.clone()));
                stack.push((m, b));
            }
        }
    }
    out.sort();
    out
}

/// Bisect an isolating interval; returns an exact root or the final bracket.
fn refine(g: &QPoly, mut a: Rational, mut b: Rational) -> Result<Rational, (Rational, Rational)> {
    if eval(g, &b).is_zero() {
        return Ok(b);
    }
    let sa = eval(g, &a).is_positive();
    let two = Rational::from_integer(2.into());
    for _ in 0..400 {
        let scale = to_f64(&a).abs().max(to_f64(&b).abs()).max(1.0);
        if to_f64(&(&b - &a)) <= 0.05 * ROOT_TOLERANCE * scale {
            break;
        }
        let m = (&a + &b) / &two;
        let v = eval(g, &m);
        if v.is_zero() {
            return Ok(m);
        }
        if v.is_positive() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    let q = simplest_between(&a, &b);
    if eval(g, &q).is_zero() {
        return Ok(q);
    }
    Err((a, b))
}

fn exact_roots(f: &QPoly, zero_mult: u32) -> Result<RootReport, RootError> {
    let mut real = Vec::new();
    let mut complex = Vec::new();
    for (g, mult) in square_free(f) {
        let isolating = isolate(&g);
        let nreal = isolating.len();
        for (a, b) in isolating {
            let c = match refine(&g, a, b) {
                Ok(r) => Coefficient::Exact(r),
                Err((lo, hi)) => {
                    let mid = to_f64(&((&lo + &hi) / rat(2, 1)));
                    Coefficient::approx(mid, ROOT_TOLERANCE * mid.abs().max(1.0))
                }
            };
            real.push((c, mult));
        }
        let ncomplex = g.len() - 1 - nreal;
        if ncomplex > 0 {
            let gv: Vec<f64> = g.iter().map(to_f64).collect();
            let mut zs = aberth(&gv)?;
            zs.sort_by(|a, b| b.im.abs().total_cmp(&a.im.abs()));
            complex.extend(zs.into_iter().take(ncomplex).map(|z| (z, mult)));
        }
    }
    real.sort_by(|a, b| a.0.value().total_cmp(&b.0.value()));
    Ok(RootReport { real, complex, zero_multiplicity: zero_mult })
}

// ---- numerical path ---------------------------------------------------------------

fn horner(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::zero();
    let mut d = Complex64::zero();
    for c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// All complex roots by Aberth-Ehrlich simultaneous iteration.
fn aberth(p: &[f64]) -> Result<Vec<Complex64>, RootError> {
    let n = p.len() - 1;
    if n == 0 {
        return Ok(vec![]);
    }
    let lead = p[n].abs();
    let radius = 1.0 + p[..n].iter().map(|c| c.abs() / lead).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64 + 0.4))
        .collect();
    for _ in 0..MAX_ABERTH {
        let mut moved: f64 = 0.0;
        for i in 0..n {
            let (v, d) = horner(p, z[i]);
            if v == Complex64::zero() {
                continue;
            }
            let ratio = v / d;
            let s: Complex64 = (0..n).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if w.is_finite() {
                z[i] -= w;
                moved = moved.max(w.norm() / z[i].norm().max(1.0));
            }
        }
        if moved < 1e-16 {
            return Ok(z);
        }
    }
    // multiple roots converge slowly; a loose result is still fine for clustering
    Ok(z)
}

fn numeric_roots(p: &[f64], zero_mult: u32) -> Result<RootReport, RootError> {
    let zs = aberth(p)?;
    // greedy clustering
    let mut used = vec![false; zs.len()];
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for i in 0..zs.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let mut cl = vec![zs[i]];
        for j in i + 1..zs.len() {
            if !used[j] && (zs[j] - zs[i]).norm() <= CLUSTER_TOLERANCE * zs[i].norm().max(1.0) {
                used[j] = true;
                cl.push(zs[j]);
            }
        }
        clusters.push(cl);
    }
    let mut real = Vec::new();
    let mut complex = Vec::new();
    for cl in clusters {
        let s = cl.len() as u32;
        let mean: Complex64 = cl.iter().sum::<Complex64>() / cl.len() as f64;
        if mean.im.abs() <= CLUSTER_TOLERANCE * mean.norm().max(1.0) {
            let r = newton_on_derivative(p, s as usize - 1, mean.re)?;
            real.push((Coefficient::approx(r, ROOT_TOLERANCE * r.abs().max(1.0)), s));
        } else {
            complex.push((mean, s));
        }
    }
    real.sort_by(|a, b| a.0.value().total_cmp(&b.0.value()));
    Ok(RootReport { real, complex, zero_multiplicity: zero_mult })
}

/// Newton iteration on the k-th derivative, where a root of multiplicity k+1 is simple.
fn newton_on_derivative(p: &[f64], k: usize, start: f64) -> Result<f64, RootError> {
    let mut q = p.to_vec();
    for _ in 0..k {
        q = q.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
    }
    let mut x = start;
    for _ in 0..MAX_NEWTON {
        let (v, d) = horner(&q, Complex64::new(x, 0.0));
        if v.re == 0.0 {
            return Ok(x);
        }
        let step = v.re / d.re;
        if !step.is_finite() {
            break;
        }
        x -= step;
        if step.abs() <= 0.25 * ROOT_TOLERANCE * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(RootError::NoConvergence {
        lo: start - CLUSTER_TOLERANCE * start.abs().max(1.0),
        hi: start + CLUSTER_TOLERANCE * start.abs().max(1.0),
    })
}
