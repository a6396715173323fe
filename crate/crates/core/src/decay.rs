//! Sharp L^p decay exponents read off the reduced Newton polygon of the phase.

use std::fmt::Write as _;

use num_traits::{One, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::coeff::{fmt_rational, int, simplest_between, to_f64, Rational};
use crate::polygon::{point_json, rat_json, reduced_polygon_of, Face, Membership, NewtonPolygon, Point, PolygonError, RayDirection};
use crate::series::{BiSeries, SeriesError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecayError {
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("p = {0} is outside (1, ∞); only the trivial estimates hold there")]
    ExponentOutOfRange(String),
    #[error("alpha must be positive, got {0}")]
    NonPositiveAlpha(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimate {
    Sharp,
    ValidNotSharp,
    Invalid,
}

impl Estimate {
    pub fn as_str(&self) -> &'static str {
        match self {
            Estimate::Sharp => "sharp",
            Estimate::ValidNotSharp => "valid-not-sharp",
            Estimate::Invalid => "invalid",
        }
    }
}

/// Endpoint estimate attached to a vertex (k, l): p = (k+l)/k, α = 1/(k+l).
#[derive(Debug, Clone, PartialEq)]
pub struct Endpoint {
    pub vertex: Point,
    pub p: Rational,
    pub alpha: Rational,
}

/// On [p_lo, p_hi] the sharp exponent is governed by `face`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub p_lo: Rational,
    /// None for p → ∞.
    pub p_hi: Option<Rational>,
    pub face: Face,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    pub polygon: NewtonPolygon,
    pub endpoints: Vec<Endpoint>,
    pub segments: Vec<Segment>,
}

fn check_p(p: &Rational) -> Result<(), DecayError> {
    if p <= &Rational::one() {
        return Err(DecayError::ExponentOutOfRange(fmt_rational(p)));
    }
    Ok(())
}

/// (1/p, 1/p').
fn dual_pair(p: &Rational) -> (Rational, Rational) {
    let a = p.recip();
    let b = Rational::one() - &a;
    (a, b)
}

pub fn endpoints(s: &BiSeries) -> Result<Vec<Endpoint>, DecayError> {
    let poly = reduced_polygon_of(s)?;
    Ok(endpoints_of(&poly))
}

fn endpoints_of(poly: &NewtonPolygon) -> Vec<Endpoint> {
    poly.vertices
        .iter()
        .map(|(k, l)| Endpoint { vertex: (k.clone(), l.clone()), p: (k + l) / k, alpha: (k + l).recip() })
        .collect()
}

/// Closed form: α = min over edges of (1/p + m/p')/c(m), 1/(p·u_min), 1/(p'·v_min).
pub fn sharp_alpha_of(poly: &NewtonPolygon, p: &Rational) -> Result<Rational, DecayError> {
    check_p(p)?;
    let (a, b) = dual_pair(p);
    let mut best = &a / &poly.leftmost().0;
    let right = &b / &poly.lowest().1;
    if right < best {
        best = right;
    }
    for e in &poly.edges {
        let c = &e.left.0 + &e.m * &e.left.1;
        let cand = (&a + &e.m * &b) / c;
        if cand < best {
            best = cand;
        }
    }
    Ok(best)
}

pub fn sharp_alpha(s: &BiSeries, p: &Rational) -> Result<Rational, DecayError> {
    sharp_alpha_of(&reduced_polygon_of(s)?, p)
}

/// Where (1/(pα), 1/(p'α)) sits relative to the polygon.
pub fn membership(poly: &NewtonPolygon, p: &Rational, alpha: &Rational) -> Result<Membership, DecayError> {
    check_p(p)?;
    if alpha <= &Rational::zero() {
        return Err(DecayError::NonPositiveAlpha(fmt_rational(alpha)));
    }
    let (a, b) = dual_pair(p);
    Ok(poly.contains(&(a / alpha), &(b / alpha)))
}

pub fn classify_estimate_of(poly: &NewtonPolygon, p: &Rational, alpha: &Rational) -> Result<Estimate, DecayError> {
    Ok(match membership(poly, p, alpha)? {
        Membership::Boundary => Estimate::Sharp,
        Membership::Interior => Estimate::ValidNotSharp,
        Membership::Exterior => Estimate::Invalid,
    })
}

pub fn classify_estimate(s: &BiSeries, p: &Rational, alpha: &Rational) -> Result<Estimate, DecayError> {
    classify_estimate_of(&reduced_polygon_of(s)?, p, alpha)
}

/// Sharp α found by bisection on membership alone, then snapped to the simplest
/// rational of the final bracket and confirmed to lie on the boundary.
/// Returns None if the snapped value is not a boundary point (bracket too wide).
pub fn sharp_alpha_by_search(poly: &NewtonPolygon, p: &Rational, steps: usize) -> Result<Option<Rational>, DecayError> {
    check_p(p)?;
    // α small puts the point far inside; α = 1/ (u_min p) already reaches the left ray
    let mut lo = Rational::new(1.into(), 1_000_000.into());
    let mut hi = Rational::one();
    while membership(poly, p, &lo)? == Membership::Exterior {
        lo /= int(2);
    }
    while membership(poly, p, &hi)? != Membership::Exterior {
        hi *= int(2);
    }
    for _ in 0..steps {
        let mid = (&lo + &hi) / int(2);
        match membership(poly, p, &mid)? {
            Membership::Exterior => hi = mid,
            Membership::Boundary => return Ok(Some(mid)),
            Membership::Interior => lo = mid,
        }
    }
    let cand = simplest_between(&lo, &hi);
    Ok((membership(poly, p, &cand)? == Membership::Boundary).then_some(cand))
}

impl DecayProfile {
    pub fn new(s: &BiSeries) -> Result<Self, DecayError> {
        Ok(Self::from_polygon(reduced_polygon_of(s)?))
    }

    /// Profile of S expanded around (x0, y0).
    pub fn at(s: &BiSeries, x0: &Rational, y0: &Rational) -> Result<Self, DecayError> {
        Self::new(&s.recenter(x0, y0)?)
    }

    pub fn from_polygon(polygon: NewtonPolygon) -> Self {
        let endpoints = endpoints_of(&polygon);
        // p = (k+l)/k decreases along the vertex list; walk it from the lowest vertex up
        let mut segments = Vec::new();
        let n = polygon.vertices.len();
        segments.push(Segment {
            p_lo: Rational::one(),
            p_hi: Some(endpoints[n - 1].p.clone()),
            face: Face::Ray { from: polygon.lowest().clone(), direction: RayDirection::Right },
        });
        for i in (0..polygon.edges.len()).rev() {
            segments.push(Segment {
                p_lo: endpoints[i + 1].p.clone(),
                p_hi: Some(endpoints[i].p.clone()),
                face: polygon.edges[i].face(),
            });
        }
        segments.push(Segment {
            p_lo: endpoints[0].p.clone(),
            p_hi: None,
            face: Face::Ray { from: polygon.leftmost().clone(), direction: RayDirection::Up },
        });
        DecayProfile { polygon, endpoints, segments }
    }

    pub fn alpha(&self, p: &Rational) -> Result<Rational, DecayError> {
        sharp_alpha_of(&self.polygon, p)
    }

    pub fn classify(&self, p: &Rational, alpha: &Rational) -> Result<Estimate, DecayError> {
        classify_estimate_of(&self.polygon, p, alpha)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "polygon": self.polygon.to_json(),
            "endpoints": self.endpoints.iter().map(|e| json!({
                "vertex": point_json(&e.vertex),
                "p": rat_json(&e.p),
                "alpha": rat_json(&e.alpha),
            })).collect::<Vec<_>>(),
            "alpha_breakpoints": self.segments.iter().map(|s| json!({
                "p_from": rat_json(&s.p_lo),
                "p_to": s.p_hi.as_ref().map(rat_json).unwrap_or(json!("inf")),
                "face": s.face.to_json(),
            })).collect::<Vec<_>>(),
        })
    }

    /// `p,alpha,alpha_float` rows for each p of the grid.
    pub fn alpha_csv(&self, ps: &[Rational]) -> Result<String, DecayError> {
        let mut out = String::from("p,alpha,alpha_float\n");
        for p in ps {
            let a = self.alpha(p)?;
            let _ = writeln!(out, "{},{},{}", fmt_rational(p), fmt_rational(&a), to_f64(&a));
        }
        Ok(out)
    }
}

/// Dyadic-ish p grid: 1 + i/n for i = 1..=n·(p_max - 1).
pub fn p_grid(n: i64, p_max: i64) -> Vec<Rational> {
    (1..=n * (p_max - 1)).map(|i| int(1) + Rational::new(i.into(), n.into())).collect()
}
