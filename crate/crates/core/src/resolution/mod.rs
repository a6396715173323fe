//! Iterated blow-ups that split a neighbourhood of the origin into regions on
//! which P behaves like a monomial.

mod boxes;
mod classify;
mod regions;
pub mod roots;

use std::collections::VecDeque;

use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::coeff::{fmt_rational, int, to_f64, Coefficient, Rational};
use crate::polygon::{polygon_of, rat_json, Edge, Face, NewtonPolygon, PolygonError};
use crate::series::{BiSeries, SeriesError};

pub use boxes::{box_cover, nominal_box, BoxCover, Rect, OVERLAP_CONSTANT};
pub use classify::{
    budget_sum, check_bookkeeping, classify_region, BookkeepingViolation, ClassifyError,
    LeafClass,
};
pub use regions::{verify_monomialization, Band, MonomializationReport};
pub use roots::{roots_with_multiplicity, RootError, RootReport, UniPoly};

/// Each band end is chosen so that the dominant term beats the others by this factor.
const BAND_DOMINANCE: f64 = 8.0;
/// A polygon vertex whose approximate coefficient is this close to its error radius is ambiguous.
const AMBIGUITY_FACTOR: f64 = 1e3;

#[derive(Debug, Error)]
pub enum ResolutionError {
    #[error("cannot resolve the zero series")]
    ZeroSeries,
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Root(#[from] RootError),
    #[error("stage limit {0} exceeded; a stable branch was probably not detected")]
    IterationLimitExceeded(usize),
    #[error("approximate coefficient of x^{ex}*y^{ey} ({value:e} ± {radius:e}) is too close to zero to decide the polygon")]
    ApproximateAmbiguity { ex: String, ey: u32, value: f64, radius: f64 },
    #[error("no epsilon down to {0:e} makes every region dominated by its face")]
    EpsilonSelection(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sector {
    /// (0, ε) × (−ε, ε).
    HalfPlane,
    /// x in (0, ε), |y| ≤ 2C x.
    East,
}

#[derive(Debug, Clone)]
pub struct ResolveConfig {
    pub max_stages: usize,
    /// Stable branches stop once the accumulated exponent exceeds this; default 2·(deg P + 2).
    pub truncation_order: Option<Rational>,
    pub sector: Sector,
    pub epsilon_max: f64,
    pub epsilon_samples: usize,
    pub epsilon_halvings: usize,
    /// Required ratio of dominant term to tail during ε selection.
    pub dominance: f64,
    pub seed: u64,
}

impl Default for ResolveConfig {
    fn default() -> Self {
        ResolveConfig {
            max_stages: 64,
            truncation_order: None,
            sector: Sector::HalfPlane,
            epsilon_max: 1.0 / 16.0,
            epsilon_samples: 512,
            epsilon_halvings: 20,
            dominance: 2.0,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainLink {
    pub m: Rational,
    pub root: Coefficient,
    pub multiplicity: u32,
}

#[derive(Debug, Clone)]
pub struct StandardTriple {
    pub stage: usize,
    pub series: BiSeries,
    pub chain: Vec<ChainLink>,
    pub epsilon: f64,
}

impl StandardTriple {
    /// M_{n-1} = m_0 + ... + m_{n-1}; y = γ(x) + y_n x^shift.
    pub fn shift(&self) -> Rational {
        self.chain.iter().fold(Rational::zero(), |acc, l| acc + &l.m)
    }

    /// (r_j, M_j) pairs of γ.
    pub fn gamma(&self) -> Vec<(Coefficient, Rational)> {
        let mut acc = Rational::zero();
        self.chain
            .iter()
            .map(|l| {
                acc = &acc + &l.m;
                (l.root.clone(), acc.clone())
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct EdgeInfo {
    pub edge: Edge,
    pub roots: RootReport,
    /// Band a ≤ |y_n| / x^m ≤ b where this edge, not a vertex, controls P.
    pub band: (f64, f64),
    /// Root-neighbourhood radius before any shrinking.
    pub rho: f64,
    /// Coefficients of P_E(1, r) by power of r.
    pub profile: Vec<(f64, i32)>,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub edge: usize,
    pub root: Coefficient,
    pub multiplicity: u32,
    pub rho: f64,
    pub child: usize,
}

#[derive(Debug, Clone)]
pub struct TreeNode {
    pub triple: StandardTriple,
    pub polygon: NewtonPolygon,
    /// (parent node, branch index in the parent).
    pub parent: Option<(usize, usize)>,
    /// Compact edges taking part in the split (all of them except in the east sector at stage 0).
    pub edges: Vec<EdgeInfo>,
    pub branches: Vec<Branch>,
    /// Single edge of the form c(y - r x^m)^s with s repeated from the parent.
    pub stable: bool,
    /// Last node of a truncated stable branch: only its leftmost vertex region is kept.
    pub terminal: bool,
    /// Index of the first vertex taking part (nonzero only in the east sector).
    pub first_vertex: usize,
    pub leaves: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ResolutionTree {
    pub nodes: Vec<TreeNode>,
    pub leaves: Vec<RegionDescriptor>,
    pub epsilon: f64,
    pub sector: Sector,
    /// East-sector constant C in |y| ≤ 2Cx.
    pub east_constant: f64,
    pub truncation_order: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    GoodVertex,
    GoodEdge,
    Bad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Minor,
    Major1,
    Major2,
    Unclassified,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Minor => "minor",
            Classification::Major1 => "major1",
            Classification::Major2 => "major2",
            Classification::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RegionDescriptor {
    pub kind: RegionKind,
    pub node: usize,
    pub stage: usize,
    pub face: Face,
    /// (p_n, q_n).
    pub exponents: (Rational, u32),
    pub gamma: Vec<(Coefficient, Rational)>,
    pub shift: Rational,
    pub rho: Option<f64>,
    /// Bounds of |y_n| in powers of x; None means unbounded below (|y_n| down to 0).
    pub m_range: (Rational, Option<Rational>),
    pub band: Band,
    /// |y_n| is also capped by this (ε at stage 0, the parent's ρ later; ignored in the east sector at stage 0).
    pub radius: f64,
    pub epsilon: f64,
    /// Normalisation κ in |P_n| ∼ κ |x^p y^q|.
    pub scale: f64,
    /// Relative distance from the leaf to the nearest real root of its edge (1 for vertex leaves).
    pub root_separation: f64,
    pub classification: Classification,
    pub truncated: bool,
}

impl RegionDescriptor {
    pub fn to_json(&self) -> Value {
        json!({
            "kind": match self.kind {
                RegionKind::GoodVertex => "good-vertex",
                RegionKind::GoodEdge => "good-edge",
                RegionKind::Bad => "bad",
            },
            "stage": self.stage,
            "face": self.face.to_json(),
            "exponents": [rat_json(&self.exponents.0), self.exponents.1],
            "gamma": self.gamma.iter().map(|(r, e)| json!([r.to_string(), rat_json(e)])).collect::<Vec<_>>(),
            "m_range": [rat_json(&self.m_range.0), self.m_range.1.as_ref().map(rat_json).unwrap_or(Value::Null)],
            "band": self.band.to_json(),
            "rho": self.rho,
            "classification": self.classification.as_str(),
            "truncated": self.truncated,
        })
    }
}

fn edge_profile(series: &BiSeries, e: &Edge) -> Vec<(Coefficient, u32)> {
    let f = e.face();
    series
        .terms()
        .filter(|((a, b), _)| f.holds(a, &int(*b as i64)))
        .map(|((_, b), c)| (c.clone(), *b))
        .collect()
}

/// Largest dyadic a with the lowest-power term dominating on |r| ≤ a, and smallest
/// dyadic b with the highest-power term dominating on |r| ≥ b.
fn edge_band(profile: &[(f64, i32)]) -> (f64, f64) {
    let top = profile.iter().max_by_key(|t| t.1).unwrap();
    let bot = profile.iter().min_by_key(|t| t.1).unwrap();
    let beats = |r: f64, lead: &(f64, i32)| {
        let others: f64 = profile.iter().filter(|t| t.1 != lead.1).map(|t| t.0.abs() * r.powi(t.1)).sum();
        lead.0.abs() * r.powi(lead.1) >= BAND_DOMINANCE * others
    };
    let mut b = 1.0;
    while !beats(b, top) {
        b *= 2.0;
    }
    while b > 1e-300 && beats(b / 2.0, top) {
        b /= 2.0;
    }
    let mut a = 1.0;
    while !beats(a, bot) {
        a /= 2.0;
    }
    while beats(a * 2.0, bot) && a * 2.0 < b {
        a *= 2.0;
    }
    (a, b)
}

fn check_ambiguity(series: &BiSeries, poly: &NewtonPolygon) -> Result<(), ResolutionError> {
    for (u, v) in &poly.vertices {
        let ey = v.to_integer().to_u32().expect("integer y exponent");
        if let Some(Coefficient::Approx { value, radius }) = series.coeff(u, ey) {
            if value.abs() <= AMBIGUITY_FACTOR * radius {
                return Err(ResolutionError::ApproximateAmbiguity {
                    ex: fmt_rational(u),
                    ey,
                    value: *value,
                    radius: *radius,
                });
            }
        }
    }
    Ok(())
}

struct Pending {
    series: BiSeries,
    chain: Vec<ChainLink>,
    parent: Option<(usize, usize)>,
    terminal: bool,
}

/// Build the ε-independent part of the tree.
fn build_nodes(p: &BiSeries, cfg: &ResolveConfig, d: &Rational) -> Result<(Vec<TreeNode>, f64), ResolutionError> {
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut east_constant = 0.0;
    let mut queue = VecDeque::from([Pending { series: p.clone(), chain: vec![], parent: None, terminal: false }]);
    while let Some(job) = queue.pop_front() {
        let stage = job.chain.len();
        if stage > cfg.max_stages {
            return Err(ResolutionError::IterationLimitExceeded(cfg.max_stages));
        }
        let polygon = polygon_of(&job.series)?;
        check_ambiguity(&job.series, &polygon)?;
        let idx = nodes.len();
        if let Some((par, b)) = job.parent {
            nodes[par].branches[b].child = idx;
        }
        let mut node = TreeNode {
            triple: StandardTriple { stage, series: job.series.clone(), chain: job.chain.clone(), epsilon: 0.0 },
            polygon: polygon.clone(),
            parent: job.parent,
            edges: vec![],
            branches: vec![],
            stable: false,
            terminal: job.terminal,
            first_vertex: 0,
            leaves: vec![],
        };
        let east = stage == 0 && cfg.sector == Sector::East;
        let one = int(1);
        for (ei, e) in polygon.edges.iter().enumerate() {
            if east && e.m < one {
                node.first_vertex = ei + 1;
                continue;
            }
            let prof = edge_profile(&job.series, e);
            let deg = prof.iter().map(|t| t.1).max().unwrap() as usize;
            let mut coeffs = vec![Coefficient::zero(); deg + 1];
            for (c, q) in &prof {
                coeffs[*q as usize] = c.clone();
            }
            let roots = roots_with_multiplicity(&UniPoly(coeffs))?;
            let mut pts: Vec<f64> = roots.real.iter().map(|(r, _)| r.value()).collect();
            pts.push(0.0);
            pts.sort_by(f64::total_cmp);
            let gap = pts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let rho = (gap / 2.0).min(0.25);
            let profile: Vec<(f64, i32)> = prof.iter().map(|(c, q)| (c.value(), *q as i32)).collect();
            let (mut a, mut b) = edge_band(&profile);
            for (r, _) in &roots.real {
                let r = r.value().abs();
                while a > (r - rho) / 2.0 {
                    a /= 2.0;
                }
                while b < r + 2.0 * rho {
                    b *= 2.0;
                }
            }
            if east && e.m == one {
                let max_root = roots.real.iter().map(|(r, _)| r.value().abs()).fold(0.0, f64::max);
                east_constant = 1024.0 * (1.0 + max_root);
            }
            node.edges.push(EdgeInfo { edge: e.clone(), roots, band: (a, b), rho, profile });
        }
        if east && east_constant == 0.0 {
            east_constant = 1024.0;
        }
        if job.terminal {
            nodes.push(node);
            continue;
        }
        if stage >= 1 && polygon.edges.len() == 1 && node.edges.len() == 1 {
            let info = &node.edges[0];
            let q_left = info.edge.left.1.to_integer().to_u32().unwrap();
            node.stable = info.roots.zero_multiplicity == 0
                && info.roots.complex.is_empty()
                && info.roots.real.len() == 1
                && info.roots.real[0].1 == q_left
                && Some(q_left) == job.chain.last().map(|l| l.multiplicity);
        }
        let accumulated = node.triple.shift();
        for (ei, info) in node.edges.iter().enumerate() {
            for (r, s) in &info.roots.real {
                let child = job.series.blowup_substitute(&info.edge.m, r)?;
                let mut chain = job.chain.clone();
                chain.push(ChainLink { m: info.edge.m.clone(), root: r.clone(), multiplicity: *s });
                let terminal = node.stable && &(&accumulated + &info.edge.m) > d;
                node.branches.push(Branch { edge: ei, root: r.clone(), multiplicity: *s, rho: info.rho, child: usize::MAX });
                queue.push_back(Pending {
                    series: child,
                    chain,
                    parent: Some((idx, node.branches.len() - 1)),
                    terminal,
                });
            }
        }
        nodes.push(node);
    }
    Ok((nodes, east_constant))
}

pub fn resolve(p: &BiSeries, cfg: &ResolveConfig) -> Result<ResolutionTree, ResolutionError> {
    if p.is_zero() {
        return Err(ResolutionError::ZeroSeries);
    }
    if !p.has_integer_exponents() {
        return Err(SeriesError::FractionalExponent(p.to_string()).into());
    }
    let d = cfg
        .truncation_order
        .clone()
        .unwrap_or_else(|| int(2) * (p.total_degree() + int(2)));
    let (nodes, east_constant) = build_nodes(p, cfg, &d)?;
    let mut tree = ResolutionTree {
        nodes,
        leaves: vec![],
        epsilon: cfg.epsilon_max,
        sector: cfg.sector,
        east_constant,
        truncation_order: d,
    };
    regions::select_epsilon(&mut tree, cfg)?;
    Ok(tree)
}

impl ResolutionTree {
    pub fn root(&self) -> &StandardTriple {
        &self.nodes[0].triple
    }

    pub fn series_of(&self, leaf: &RegionDescriptor) -> &BiSeries {
        &self.nodes[leaf.node].triple.series
    }

    /// Node indices from the root down to `node`.
    pub fn path(&self, node: usize) -> Vec<usize> {
        let mut out = vec![node];
        let mut cur = node;
        while let Some((p, _)) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out.reverse();
        out
    }

    pub fn to_json(&self) -> Value {
        let nodes: Vec<Value> = self
            .nodes
            .iter()
            .map(|n| {
                json!({
                    "stage": n.triple.stage,
                    "series": n.triple.series.to_string(),
                    "chain": n.triple.chain.iter().map(|l| json!([rat_json(&l.m), l.root.to_string(), l.multiplicity])).collect::<Vec<_>>(),
                    "polygon": n.polygon.to_json(),
                    "stable": n.stable,
                    "children": n.branches.iter().map(|b| json!({
                        "edge": n.edges[b.edge].edge.face().to_json(),
                        "root": b.root.to_string(),
                        "multiplicity": b.multiplicity,
                        "rho": b.rho,
                        "child": b.child,
                    })).collect::<Vec<_>>(),
                    "complex_roots": n.edges.iter().map(|e| e.roots.complex.len()).sum::<usize>(),
                    "leaves": n.leaves.iter().map(|&i| self.leaves[i].to_json()).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "epsilon": self.epsilon,
            "sector": match self.sector { Sector::HalfPlane => "half-plane", Sector::East => "east" },
            "truncation_order": rat_json(&self.truncation_order),
            "leaf_count": self.leaves.len(),
            "nodes": nodes,
        })
    }

    /// Plot of the (x, y) plane: sample points of each good region, curves y = γ(x) on top.
    pub fn to_svg(&self, samples_per_leaf: usize) -> String {
        use std::fmt::Write as _;
        let size = 480.0;
        let eps = self.epsilon;
        let ymax = match self.sector {
            Sector::HalfPlane => eps,
            Sector::East => 2.0 * self.east_constant * eps,
        };
        let tx = |x: f64| 20.0 + x / eps * (size - 40.0);
        let ty = |y: f64| size / 2.0 - y / ymax * (size / 2.0 - 20.0);
        let palette = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#ff9da7"];
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (i, leaf) in self.leaves.iter().enumerate() {
            let colour = palette[i % palette.len()];
            for (x, y) in regions::sample_original(leaf, samples_per_leaf, i as u64) {
                let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="1" fill="{colour}" fill-opacity="0.5"/>"#, tx(x), ty(y));
            }
        }
        for n in &self.nodes {
            if n.triple.stage == 0 {
                continue;
            }
            let gamma = n.triple.gamma();
            let mut pts = String::new();
            for k in 1..=200 {
                let x = eps * k as f64 / 200.0;
                let y: f64 = gamma.iter().map(|(r, e)| r.value() * x.powf(to_f64(e))).sum();
                let _ = write!(pts, "{:.2},{:.2} ", tx(x), ty(y));
            }
            let _ = writeln!(s, r#"<polyline points="{pts}" fill="none" stroke="black" stroke-width="1.5"/>"#);
        }
        s.push_str("</svg>\n");
        s
    }
}
