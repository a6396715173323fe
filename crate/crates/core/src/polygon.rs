//! Newton polygons of bivariate series, reduced polygons and faces.

use std::fmt::Write as _;

use num_traits::{Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::coeff::{fmt_rational, int, to_f64, Rational};
use crate::series::BiSeries;

pub type Point = (Rational, Rational);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolygonError {
    #[error("the zero series has no Newton polygon")]
    ZeroSeries,
    #[error("no term has both exponents positive")]
    NoMixedTerms,
    #[error("face is not a face of this polygon")]
    NotAFace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayDirection {
    /// Vertical ray going up from the leftmost vertex.
    Up,
    /// Horizontal ray going right from the lowest vertex.
    Right,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Face {
    Vertex(Point),
    Edge { left: Point, right: Point, m: Rational },
    Ray { from: Point, direction: RayDirection },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Vertex,
    CompactEdge,
    NoncompactRay,
}

impl Face {
    pub fn kind(&self) -> FaceKind {
        match self {
            Face::Vertex(_) => FaceKind::Vertex,
            Face::Edge { .. } => FaceKind::CompactEdge,
            Face::Ray { .. } => FaceKind::NoncompactRay,
        }
    }

    pub fn endpoints(&self) -> Vec<Point> {
        match self {
            Face::Vertex(p) => vec![p.clone()],
            Face::Edge { left, right, .. } => vec![left.clone(), right.clone()],
            Face::Ray { from, .. } => vec![from.clone()],
        }
    }

    pub fn m(&self) -> Option<&Rational> {
        match self {
            Face::Edge { m, .. } => Some(m),
            _ => None,
        }
    }

    /// Does the support point (u, v) lie on this face?
    pub fn holds(&self, u: &Rational, v: &Rational) -> bool {
        match self {
            Face::Vertex(p) => p.0 == *u && p.1 == *v,
            Face::Edge { left, right, m } => {
                *u >= left.0 && *u <= right.0 && u + m * v == &left.0 + m * &left.1
            }
            Face::Ray { from, direction: RayDirection::Up } => from.0 == *u && *v >= from.1,
            Face::Ray { from, direction: RayDirection::Right } => from.1 == *v && *u >= from.0,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Face::Vertex(p) => json!({"kind": "vertex", "endpoints": [point_json(p)]}),
            Face::Edge { left, right, m } => json!({
                "kind": "compact-edge",
                "endpoints": [point_json(left), point_json(right)],
                "m": rat_json(m),
            }),
            Face::Ray { from, direction } => json!({
                "kind": "noncompact-ray",
                "endpoints": [point_json(from)],
                "direction": match direction { RayDirection::Up => "up", RayDirection::Right => "right" },
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Boundary,
    Interior,
    Exterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub left: Point,
    pub right: Point,
    pub m: Rational,
}

impl Edge {
    pub fn face(&self) -> Face {
        Face::Edge { left: self.left.clone(), right: self.right.clone(), m: self.m.clone() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonPolygon {
    /// Sorted by increasing first coordinate (second coordinate strictly decreasing).
    pub vertices: Vec<Point>,
    pub edges: Vec<Edge>,
    pub reduced: bool,
}

/// Cross product sign of (b - a) x (c - a).
fn cross(a: &Point, b: &Point, c: &Point) -> Rational {
    (&b.0 - &a.0) * (&c.1 - &a.1) - (&b.1 - &a.1) * (&c.0 - &a.0)
}

impl NewtonPolygon {
    /// Polygon generated by the quadrants attached to `points`.
    pub fn from_points(points: &[Point], reduced: bool) -> Result<Self, PolygonError> {
        if points.is_empty() {
            return Err(PolygonError::ZeroSeries);
        }
        let mut pts = points.to_vec();
        pts.sort();
        // staircase: keep points whose v is strictly below everything to their left
        let mut stair: Vec<Point> = Vec::new();
        for p in pts {
            if stair.last().map_or(true, |l| p.1 < l.1) {
                stair.push(p);
            }
        }
        // lower hull; drop collinear points so only true vertices remain
        let mut hull: Vec<Point> = Vec::new();
        for p in stair {
            while hull.len() >= 2 && !cross(&hull[hull.len() - 2], &hull[hull.len() - 1], &p).is_positive() {
                hull.pop();
            }
            hull.push(p);
        }
        let edges = hull
            .windows(2)
            .map(|w| Edge {
                left: w[0].clone(),
                right: w[1].clone(),
                m: (&w[1].0 - &w[0].0) / (&w[0].1 - &w[1].1),
            })
            .collect();
        Ok(NewtonPolygon { vertices: hull, edges, reduced })
    }

    pub fn leftmost(&self) -> &Point {
        &self.vertices[0]
    }

    pub fn lowest(&self) -> &Point {
        self.vertices.last().expect("polygon has a vertex")
    }

    /// c(m) = min over vertices of u + m v.
    pub fn supporting_value(&self, m: &Rational) -> Rational {
        self.vertices
            .iter()
            .map(|(u, v)| u + m * v)
            .min()
            .expect("polygon has a vertex")
    }

    /// The face on which the supporting line with parameter m touches.
    pub fn face_at(&self, m: &Rational) -> Face {
        if let Some(e) = self.edges.iter().find(|e| &e.m == m) {
            return e.face();
        }
        let c = self.supporting_value(m);
        let v = self
            .vertices
            .iter()
            .find(|(u, v)| u + m * v == c)
            .expect("minimum is attained");
        Face::Vertex(v.clone())
    }

    pub fn faces(&self) -> Vec<Face> {
        let mut out = vec![Face::Ray { from: self.leftmost().clone(), direction: RayDirection::Up }];
        for (i, v) in self.vertices.iter().enumerate() {
            out.push(Face::Vertex(v.clone()));
            if let Some(e) = self.edges.get(i) {
                out.push(e.face());
            }
        }
        out.push(Face::Ray { from: self.lowest().clone(), direction: RayDirection::Right });
        out
    }

    pub fn is_face(&self, f: &Face) -> bool {
        self.faces().iter().any(|g| g == f)
    }

    pub fn contains(&self, u: &Rational, v: &Rational) -> Membership {
        let mut slack: Vec<Rational> = vec![u - &self.leftmost().0, v - &self.lowest().1];
        for e in &self.edges {
            slack.push(u + &e.m * v - (&e.left.0 + &e.m * &e.left.1));
        }
        if slack.iter().any(|s| s.is_negative()) {
            Membership::Exterior
        } else if slack.iter().any(|s| s.is_zero()) {
            Membership::Boundary
        } else {
            Membership::Interior
        }
    }

    pub fn transpose(&self) -> NewtonPolygon {
        let pts: Vec<Point> = self.vertices.iter().map(|(u, v)| (v.clone(), u.clone())).collect();
        NewtonPolygon::from_points(&pts, self.reduced).expect("nonempty")
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vertices": self.vertices.iter().map(point_json).collect::<Vec<_>>(),
            "edges": self.edges.iter().map(|e| json!({
                "from": point_json(&e.left),
                "to": point_json(&e.right),
                "m": rat_json(&e.m),
            })).collect::<Vec<_>>(),
            "reduced": self.reduced,
        })
    }

    /// Diagram in the usual style: shaded polygon, thick boundary, labelled vertices.
    pub fn to_svg(&self) -> String {
        let umax = self.vertices.iter().map(|p| to_f64(&p.0)).fold(1.0, f64::max) + 2.0;
        let vmax = self.vertices.iter().map(|p| to_f64(&p.1)).fold(1.0, f64::max) + 2.0;
        let size = 400.0;
        let pad = 40.0;
        let sc = (size - 2.0 * pad) / umax.max(vmax);
        let tx = |u: f64| pad + u * sc;
        let ty = |v: f64| size - pad - v * sc;
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        // axes
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, tx(0.0), ty(0.0), tx(umax), ty(0.0));
        let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, tx(0.0), ty(0.0), tx(0.0), ty(vmax));
        // shaded region
        let mut poly = format!("{},{} ", tx(to_f64(&self.leftmost().0)), ty(vmax));
        for (u, v) in &self.vertices {
            let _ = write!(poly, "{},{} ", tx(to_f64(u)), ty(to_f64(v)));
        }
        let _ = write!(poly, "{},{} {},{}", tx(umax), ty(to_f64(&self.lowest().1)), tx(umax), ty(vmax));
        let _ = writeln!(s, r#"<polygon points="{poly}" fill="lightgray" stroke="none"/>"#);
        // diagram
        let mut line = format!("{},{} ", tx(to_f64(&self.leftmost().0)), ty(vmax));
        for (u, v) in &self.vertices {
            let _ = write!(line, "{},{} ", tx(to_f64(u)), ty(to_f64(v)));
        }
        let _ = write!(line, "{},{}", tx(umax), ty(to_f64(&self.lowest().1)));
        let _ = writeln!(s, r#"<polyline points="{line}" fill="none" stroke="black" stroke-width="3"/>"#);
        for (u, v) in &self.vertices {
            let (x, y) = (tx(to_f64(u)), ty(to_f64(v)));
            let _ = writeln!(s, r#"<circle cx="{x}" cy="{y}" r="4" fill="black"/>"#);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="12">({},{})</text>"#,
                x + 6.0,
                y - 6.0,
                fmt_rational(u),
                fmt_rational(v)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

pub fn rat_json(r: &Rational) -> Value {
    if r.is_integer() {
        if let Ok(n) = r.to_integer().to_string().parse::<i64>() {
            return json!(n);
        }
    }
    json!(fmt_rational(r))
}

pub fn point_json(p: &Point) -> Value {
    json!([rat_json(&p.0), rat_json(&p.1)])
}

pub fn polygon_of(p: &BiSeries) -> Result<NewtonPolygon, PolygonError> {
    if p.is_zero() {
        return Err(PolygonError::ZeroSeries);
    }
    NewtonPolygon::from_points(&p.support(), false)
}

/// Polygon of the terms with both exponents at least one.
pub fn reduced_polygon_of(s: &BiSeries) -> Result<NewtonPolygon, PolygonError> {
    if s.is_zero() {
        return Err(PolygonError::ZeroSeries);
    }
    let pts: Vec<Point> = s
        .support()
        .into_iter()
        .filter(|(u, v)| u >= &int(1) && v >= &int(1))
        .collect();
    if pts.is_empty() {
        return Err(PolygonError::NoMixedTerms);
    }
    NewtonPolygon::from_points(&pts, true)
}

pub fn edge_polynomial(p: &BiSeries, f: &Face) -> Result<BiSeries, PolygonError> {
    let poly = polygon_of(p)?;
    if !poly.is_face(f) {
        return Err(PolygonError::NotAFace);
    }
    Ok(p.filter(|a, b| f.holds(a, &int(b as i64))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::rat;
    use crate::parser::parse_phase;

    fn pt(a: i64, b: i64) -> Point {
        (int(a), int(b))
    }

    fn fig1() -> BiSeries {
        parse_phase("x^5*y - x^3*y^2 + x^2*y^4").unwrap()
    }

    #[test]
    fn figure_one_vertices_and_edges() {
        let n = polygon_of(&fig1()).unwrap();
        assert_eq!(n.vertices, vec![pt(2, 4), pt(3, 2), pt(5, 1)]);
        let ms: Vec<_> = n.edges.iter().map(|e| e.m.clone()).collect();
        assert_eq!(ms, vec![rat(1, 2), int(2)]);
    }

    #[test]
    fn monomial_and_binomial() {
        let n = polygon_of(&BiSeries::mono(1, 3, 4)).unwrap();
        assert_eq!(n.vertices, vec![pt(3, 4)]);
        assert!(n.edges.is_empty());
        let b = polygon_of(&parse_phase("(y-x)^2").unwrap()).unwrap();
        assert_eq!(b.vertices, vec![pt(0, 2), pt(2, 0)]);
        assert_eq!(b.edges[0].m, int(1));
        assert!(b.edges[0].face().holds(&int(1), &int(1)));
    }

    #[test]
    fn reduced_examples() {
        let n = reduced_polygon_of(&parse_phase("x + y + x^2*y^2").unwrap()).unwrap();
        assert_eq!(n.vertices, vec![pt(2, 2)]);
        let n = reduced_polygon_of(&parse_phase("x^3*y + x*y^2").unwrap()).unwrap();
        assert_eq!(n.vertices, vec![pt(1, 2), pt(3, 1)]);
        assert_eq!(reduced_polygon_of(&parse_phase("x^5").unwrap()), Err(PolygonError::NoMixedTerms));
    }

    #[test]
    fn edge_polynomials() {
        let p = fig1();
        let e = Face::Edge { left: pt(2, 4), right: pt(3, 2), m: rat(1, 2) };
        assert_eq!(edge_polynomial(&p, &e).unwrap(), parse_phase("-x^3*y^2 + x^2*y^4").unwrap());
        assert_eq!(edge_polynomial(&p, &Face::Vertex(pt(3, 2))).unwrap(), BiSeries::mono(-1, 3, 2));
        let b = parse_phase("(y-x)^2").unwrap();
        let e = polygon_of(&b).unwrap().edges[0].face();
        assert_eq!(edge_polynomial(&b, &e).unwrap(), b);
        assert_eq!(edge_polynomial(&p, &Face::Vertex(pt(4, 4))), Err(PolygonError::NotAFace));
    }

    #[test]
    fn supporting_values() {
        let n = polygon_of(&fig1()).unwrap();
        assert_eq!(n.supporting_value(&rat(1, 2)), int(4));
        assert_eq!(n.supporting_value(&int(1)), int(5));
        assert_eq!(n.face_at(&int(1)), Face::Vertex(pt(3, 2)));
        let q = polygon_of(&BiSeries::mono(1, 2, 3)).unwrap();
        assert_eq!(q.supporting_value(&rat(1, 3)), int(3));
    }

    #[test]
    fn membership() {
        let q = polygon_of(&BiSeries::mono(1, 1, 1)).unwrap();
        assert_eq!(q.contains(&int(1), &int(1)), Membership::Boundary);
        assert_eq!(q.contains(&int(2), &int(3)), Membership::Interior);
        assert_eq!(q.contains(&rat(1, 2), &int(2)), Membership::Exterior);
        let n = polygon_of(&fig1()).unwrap();
        // (4, 3/2) is the midpoint of the m = 2 edge, so it sits on the diagram
        assert_eq!(n.contains(&int(4), &rat(3, 2)), Membership::Boundary);
        assert_eq!(n.contains(&int(4), &int(2)), Membership::Interior);
        assert_eq!(n.contains(&rat(5, 2), &int(3)), Membership::Boundary);
    }

    #[test]
    fn collinear_points_are_not_vertices() {
        let n = NewtonPolygon::from_points(&[pt(0, 2), pt(1, 1), pt(2, 0)], false).unwrap();
        assert_eq!(n.vertices, vec![pt(0, 2), pt(2, 0)]);
    }

    #[test]
    fn json_shape() {
        let n = polygon_of(&fig1()).unwrap();
        let j = n.to_json();
        assert_eq!(j["vertices"], json!([[2, 4], [3, 2], [5, 1]]));
        assert_eq!(j["edges"][0]["m"], json!("1/2"));
        assert_eq!(j["reduced"], json!(false));
        assert!(n.to_svg().starts_with("<svg"));
    }
}
