//! Good regions of a resolution tree: construction, sampling, the ε loop and
//! the monomialization check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::{
    Classification, RegionDescriptor, RegionKind, ResolutionError, ResolutionTree, ResolveConfig,
    Sector, TreeNode,
};
use crate::coeff::{int, to_f64, Rational};
use crate::polygon::Face;
use crate::series::BiSeries;

/// Edge leaves are split until P_E(1, r)/|r|^q varies by at most this factor.
const SPLIT_VARIATION: f64 = 4.0;
const SPLIT_GRID: usize = 33;
const MAX_SPLIT_DEPTH: usize = 24;
/// x is drawn log-uniformly from [ε·2^-X_OCTAVES, ε].
const X_OCTAVES: f64 = 10.0;
/// Octaves below the upper bound used when |y_n| has no lower bound.
const Y_OCTAVES: f64 = 40.0;
const MAX_REJECTIONS: usize = 64;

/// Where |y_n| lives for a given x.
#[derive(Debug, Clone, PartialEq)]
pub enum Band {
    /// lower·x^{m_high} ≤ |y_n| ≤ upper·x^{m_low}, both signs of y_n.
    Vertex { lower: f64, upper: f64 },
    /// y_n = r x^m with r in [r_lo, r_hi] (one sign).
    Edge { r_lo: f64, r_hi: f64 },
}

impl Band {
    pub fn to_json(&self) -> Value {
        match self {
            Band::Vertex { lower, upper } => json!({"kind": "vertex", "lower": lower, "upper": upper}),
            Band::Edge { r_lo, r_hi } => json!({"kind": "edge", "r_lo": r_lo, "r_hi": r_hi}),
        }
    }
}

/// A point of a region in log coordinates: x = e^lx, |y_n| = e^ly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Sample {
    pub lx: f64,
    pub ly: f64,
    pub neg: bool,
}

impl Sample {
    pub fn x(&self) -> f64 {
        self.lx.exp()
    }

    pub fn y_n(&self) -> f64 {
        let v = self.ly.exp();
        if self.neg {
            -v
        } else {
            v
        }
    }
}

impl RegionDescriptor {
    pub(crate) fn m_low_f64(&self) -> f64 {
        to_f64(&self.m_range.0)
    }

    pub(crate) fn m_high_f64(&self) -> Option<f64> {
        self.m_range.1.as_ref().map(to_f64)
    }

    /// Bounds of ln|y_n| at x = e^lx, or None when the slice is empty.
    pub(crate) fn log_y_range(&self, lx: f64) -> Option<(f64, f64)> {
        self.log_y_range_with(lx, self.m_low_f64(), self.m_high_f64())
    }

    /// `log_y_range` with the slope bounds already converted.
    pub(crate) fn log_y_range_with(&self, lx: f64, m_low: f64, m_high: Option<f64>) -> Option<(f64, f64)> {
        let cap = self.radius.ln();
        let (lo, hi) = match &self.band {
            Band::Vertex { lower, upper } => {
                let hi = (upper.ln() + m_low * lx).min(cap);
                let lo = match m_high {
                    Some(mh) if *lower > 0.0 => lower.ln() + mh * lx,
                    _ => hi - Y_OCTAVES * std::f64::consts::LN_2,
                };
                (lo, hi)
            }
            Band::Edge { r_lo, r_hi } => {
                let (a, b) = (r_lo.abs().min(r_hi.abs()), r_lo.abs().max(r_hi.abs()));
                (a.ln() + m_low * lx, (b.ln() + m_low * lx).min(cap))
            }
        };
        (lo < hi).then_some((lo, hi))
    }

    /// y = γ(x) + y_n x^shift.
    pub(crate) fn original_y(&self, x: f64, y_n: f64) -> f64 {
        let g: f64 = self.gamma.iter().map(|(r, e)| r.value() * x.powf(to_f64(e))).sum();
        g + y_n * x.powf(to_f64(&self.shift))
    }

    pub(crate) fn draw(&self, rng: &mut ChaCha8Rng) -> Option<Sample> {
        let top = self.epsilon.ln();
        for _ in 0..MAX_REJECTIONS {
            let lx = top - rng.gen::<f64>() * X_OCTAVES * std::f64::consts::LN_2;
            match &self.band {
                Band::Vertex { .. } => {
                    let Some((lo, hi)) = self.log_y_range(lx) else { continue };
                    let ly = lo + rng.gen::<f64>() * (hi - lo);
                    return Some(Sample { lx, ly, neg: rng.gen() });
                }
                Band::Edge { r_lo, r_hi } => {
                    let r = r_lo + rng.gen::<f64>() * (r_hi - r_lo);
                    let ly = r.abs().ln() + self.m_low_f64() * lx;
                    if ly > self.radius.ln() {
                        continue;
                    }
                    return Some(Sample { lx, ly, neg: r < 0.0 });
                }
            }
        }
        None
    }

    /// Terms of P_n that make up the dominant face.
    pub(crate) fn dominant_part(&self, p: &BiSeries) -> BiSeries {
        let f = self.face.clone();
        p.filter(|a, b| f.holds(a, &int(b as i64)))
    }
}

/// Points of a leaf mapped back to the original (x, y) plane.
pub(crate) fn sample_original(leaf: &RegionDescriptor, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .filter_map(|_| leaf.draw(&mut rng))
        .map(|s| (s.x(), leaf.original_y(s.x(), s.y_n())))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonomializationReport {
    pub samples: usize,
    pub passed: usize,
    pub pass_rate: f64,
    /// Largest max(r, 1/r) over the ratios |P| / (κ x^p |y|^q).
    pub worst_ratio: f64,
    /// Largest normalized y-derivative.
    pub worst_derivative: f64,
}

/// Samples the leaf and compares P_n with κ x^{p_n} |y_n|^{q_n}; `p` is the
/// series of the leaf's stage.
pub fn verify_monomialization(
    leaf: &RegionDescriptor,
    p: &BiSeries,
    samples: usize,
    c: f64,
    seed: u64,
) -> MonomializationReport {
    let compiled = p.compile();
    let a = to_f64(&leaf.exponents.0);
    let b = leaf.exponents.1 as i32;
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = MonomializationReport {
        samples: 0,
        passed: 0,
        pass_rate: 0.0,
        worst_ratio: 1.0,
        worst_derivative: 0.0,
    };
    for _ in 0..samples {
        let Some(s) = leaf.draw(&mut rng) else { continue };
        report.samples += 1;
        let ratio = compiled.eval_scaled_log(s.lx, s.ly, s.neg, a, b, 1.0).abs() / leaf.scale;
        let plus = compiled.eval_scaled_log(s.lx, s.ly, s.neg, a, b, 1.0 + h);
        let minus = compiled.eval_scaled_log(s.lx, s.ly, s.neg, a, b, 1.0 - h);
        let deriv = ((plus - minus) / (2.0 * h)).abs() * leaf.root_separation / leaf.scale;
        let spread = ratio.max(1.0 / ratio);
        report.worst_ratio = report.worst_ratio.max(spread);
        report.worst_derivative = report.worst_derivative.max(deriv);
        if spread <= c && deriv <= c {
            report.passed += 1;
        }
    }
    report.pass_rate = if report.samples == 0 { 1.0 } else { report.passed as f64 / report.samples as f64 };
    report
}

/// Does the dominant face beat the rest of P_n by `factor` on every sample?
fn dominated(leaf: &RegionDescriptor, p: &BiSeries, samples: usize, factor: f64, seed: u64) -> bool {
    let dom = leaf.dominant_part(p);
    let tail = p.sub(&dom).compile();
    let dom = dom.compile();
    let a = to_f64(&leaf.exponents.0);
    let b = leaf.exponents.1 as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).filter_map(|_| leaf.draw(&mut rng)).all(|s| {
        let d = dom.eval_scaled_log(s.lx, s.ly, s.neg, a, b, 1.0).abs();
        let t = tail.eval_scaled_log(s.lx, s.ly, s.neg, a, b, 1.0).abs();
        d >= factor * t
    })
}

fn profile_value(profile: &[(f64, i32)], r: f64, q_left: i32) -> f64 {
    let v: f64 = profile.iter().map(|(c, q)| c * r.powi(*q)).sum();
    v.abs() / r.abs().powi(q_left)
}

/// Split [lo, hi] (same sign, away from roots) into pieces where the edge profile
/// varies by at most SPLIT_VARIATION. Returns (lo, hi, scale).
fn split_piece(profile: &[(f64, i32)], q_left: i32, lo: f64, hi: f64, depth: usize, out: &mut Vec<(f64, f64, f64)>) {
    let (alo, ahi) = (lo.abs().min(hi.abs()), lo.abs().max(hi.abs()));
    let sign = if hi <= 0.0 { -1.0 } else { 1.0 };
    let ratio = ahi / alo;
    let vals: Vec<f64> = (0..SPLIT_GRID)
        .map(|i| {
            let r = alo * ratio.powf(i as f64 / (SPLIT_GRID - 1) as f64);
            profile_value(profile, sign * r, q_left)
        })
        .collect();
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vals.iter().cloned().fold(0.0, f64::max);
    if max <= SPLIT_VARIATION * min || depth >= MAX_SPLIT_DEPTH {
        out.push((lo, hi, (min * max).sqrt()));
        return;
    }
    let mid = sign * (alo * ahi).sqrt();
    split_piece(profile, q_left, lo, mid, depth + 1, out);
    split_piece(profile, q_left, mid, hi, depth + 1, out);
}

/// Parts of [lo, hi] outside the given open neighbourhoods.
fn subtract(lo: f64, hi: f64, holes: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pieces = vec![(lo, hi)];
    for &(a, b) in holes {
        pieces = pieces
            .into_iter()
            .flat_map(|(l, h)| {
                let mut v = Vec::new();
                if a > l {
                    v.push((l, a.min(h)));
                }
                if b < h {
                    v.push((b.max(l), h));
                }
                v.into_iter().filter(|(l, h)| l < h).collect::<Vec<_>>()
            })
            .collect();
    }
    pieces
}

fn node_radius(tree: &ResolutionTree, node: &TreeNode, eps: f64, rhos: &[Vec<f64>]) -> f64 {
    match node.parent {
        Some((p, b)) => rhos[p][b],
        None if tree.sector == Sector::East => f64::INFINITY,
        None => eps,
    }
}

/// Leaves of `node` for the given ε and branch radii.
fn node_leaves(tree: &ResolutionTree, idx: usize, eps: f64, rhos: &[Vec<f64>]) -> Vec<RegionDescriptor> {
    let node = &tree.nodes[idx];
    let stage = node.triple.stage;
    let radius = node_radius(tree, node, eps, rhos);
    let gamma = node.triple.gamma();
    let shift = node.triple.shift();
    let leaf = |kind, face, exponents, m_range, band, rho, scale, sep, truncated| RegionDescriptor {
        kind,
        node: idx,
        stage,
        face,
        exponents,
        gamma: gamma.clone(),
        shift: shift.clone(),
        rho,
        m_range,
        band,
        radius,
        epsilon: eps,
        scale,
        root_separation: sep,
        classification: Classification::Unclassified,
        truncated,
    };
    let series = &node.triple.series;
    let stage_rho = node.parent.map(|_| radius);
    let mut out = Vec::new();

    let verts = &node.polygon.vertices;
    let last = if node.terminal { node.first_vertex } else { verts.len() - 1 };
    for i in node.first_vertex..=last {
        let v = &verts[i];
        let ey = v.1.to_integer().try_into().expect("y exponent fits in u32");
        let c = series.coeff(&v.0, ey).expect("vertex is in the support").magnitude();
        let (m_low, upper) = if i > node.first_vertex {
            let e = &node.edges[i - 1 - node.first_vertex];
            (e.edge.m.clone(), e.band.0)
        } else if stage == 0 && tree.sector == Sector::East {
            (int(1), 2.0 * tree.east_constant)
        } else {
            (Rational::from_integer(0.into()), radius)
        };
        let (m_high, lower) = match node.edges.get(i - node.first_vertex) {
            Some(e) => (Some(e.edge.m.clone()), e.band.1),
            None => (None, 0.0),
        };
        out.push(leaf(
            RegionKind::GoodVertex,
            Face::Vertex(v.clone()),
            (v.0.clone(), ey),
            (m_low, m_high),
            Band::Vertex { lower, upper },
            stage_rho,
            c,
            1.0,
            node.terminal,
        ));
    }
    if node.terminal {
        return out;
    }

    for (ei, info) in node.edges.iter().enumerate() {
        let (a, b) = info.band;
        let roots: Vec<(f64, f64)> = node
            .branches
            .iter()
            .enumerate()
            .filter(|(_, br)| br.edge == ei)
            .map(|(bi, br)| (br.root.value(), rhos[idx][bi]))
            .collect();
        let mut holes: Vec<(f64, f64)> = roots.iter().map(|(r, rho)| (r - rho, r + rho)).collect();
        holes.sort_by(|x, y| x.0.total_cmp(&y.0));
        let edge_rho = roots.iter().map(|r| r.1).fold(info.rho, f64::min);
        let q_left: i32 = info.edge.left.1.to_integer().try_into().expect("y exponent fits");
        let p_left = info.edge.left.0.clone();
        let mut pieces = Vec::new();
        for (lo, hi) in subtract(-b, -a, &holes).into_iter().chain(subtract(a, b, &holes)) {
            split_piece(&info.profile, q_left, lo, hi, 0, &mut pieces);
        }
        for (lo, hi, scale) in pieces {
            let far = lo.abs().max(hi.abs());
            let dist = roots
                .iter()
                .map(|(r, _)| {
                    if *r >= lo && *r <= hi {
                        0.0
                    } else {
                        (r - lo).abs().min((r - hi).abs())
                    }
                })
                .fold(f64::INFINITY, f64::min);
            out.push(leaf(
                RegionKind::GoodEdge,
                info.edge.face(),
                (p_left.clone(), q_left as u32),
                (info.edge.m.clone(), Some(info.edge.m.clone())),
                Band::Edge { r_lo: lo, r_hi: hi },
                Some(edge_rho),
                scale,
                (dist / far).min(1.0),
                false,
            ));
        }
    }
    out
}

fn install_leaves(tree: &mut ResolutionTree, eps: f64, rhos: &[Vec<f64>]) {
    let mut leaves = Vec::new();
    for idx in 0..tree.nodes.len() {
        let ls = node_leaves(tree, idx, eps, rhos);
        let start = leaves.len();
        leaves.extend(ls);
        tree.nodes[idx].leaves = (start..leaves.len()).collect();
    }
    tree.leaves = leaves;
}

/// Largest dyadic ε (and branch radii) making every leaf dominated by its face.
pub(crate) fn select_epsilon(tree: &mut ResolutionTree, cfg: &ResolveConfig) -> Result<(), ResolutionError> {
    let mut eps = cfg.epsilon_max;
    let mut rhos: Vec<Vec<f64>> = tree.nodes.iter().map(|n| n.branches.iter().map(|b| b.rho).collect()).collect();
    for attempt in 0..=cfg.epsilon_halvings {
        install_leaves(tree, eps, &rhos);
        let failing: Vec<usize> = tree
            .leaves
            .iter()
            .enumerate()
            .filter(|(i, l)| {
                let seed = cfg.seed ^ (*i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                !dominated(l, &tree.nodes[l.node].triple.series, cfg.epsilon_samples, cfg.dominance, seed)
            })
            .map(|(i, _)| i)
            .collect();
        if failing.is_empty() {
            tree.epsilon = eps;
            for (n, r) in tree.nodes.iter_mut().zip(&rhos) {
                n.triple.epsilon = eps;
                for (b, rho) in n.branches.iter_mut().zip(r) {
                    b.rho = *rho;
                }
            }
            return Ok(());
        }
        if attempt == cfg.epsilon_halvings {
            break;
        }
        eps /= 2.0;
        let mut shrunk = vec![false; tree.nodes.len()];
        for i in failing {
            let node = tree.leaves[i].node;
            if let Some((p, b)) = tree.nodes[node].parent {
                if !shrunk[node] {
                    rhos[p][b] /= 2.0;
                    shrunk[node] = true;
                }
            }
        }
    }
    Err(ResolutionError::EpsilonSelection(eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_phase;
    use crate::resolution::{resolve, ResolveConfig};

    #[test]
    fn monomial_ratio_is_exactly_one() {
        let p = BiSeries::mono(3, 2, 5);
        let t = resolve(&p, &ResolveConfig::default()).unwrap();
        let r = verify_monomialization(&t.leaves[0], &p, 200, 1.0 + 1e-9, 1);
        assert_eq!(r.samples, 200);
        assert!((r.worst_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn double_line_stage_one_leaf() {
        let p = parse_phase("y^2 - 2*x*y + x^2").unwrap();
        let t = resolve(&p, &ResolveConfig::default()).unwrap();
        for leaf in t.leaves.iter().filter(|l| l.stage == 1) {
            let r = verify_monomialization(leaf, t.series_of(leaf), 1000, 8.0, 7);
            assert_eq!(r.pass_rate, 1.0);
            assert!((r.worst_ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn figure_one_middle_vertex() {
        let p = parse_phase("x^5*y - x^3*y^2 + x^2*y^4").unwrap();
        let cfg = ResolveConfig { epsilon_max: 1.0 / 32.0, ..Default::default() };
        let t = resolve(&p, &cfg).unwrap();
        let leaf = t
            .leaves
            .iter()
            .find(|l| l.stage == 0 && l.face == Face::Vertex((int(3), int(2))))
            .unwrap();
        let r = verify_monomialization(leaf, &p, 1000, 4.0, 3);
        assert_eq!(r.pass_rate, 1.0, "{r:?}");
    }

    #[test]
    fn every_leaf_passes_on_small_corpus() {
        for src in ["(y-x)^3 + x^7", "x^5*y - x^3*y^2 + x^2*y^4", "(y-x)*(y+2*x)^2*(y-x^2)", "(y - x*y - x)^2"] {
            let p = parse_phase(src).unwrap();
            let t = resolve(&p, &ResolveConfig::default()).unwrap();
            for (i, leaf) in t.leaves.iter().enumerate() {
                let r = verify_monomialization(leaf, t.series_of(leaf), 1000, 16.0, i as u64);
                assert_eq!(r.pass_rate, 1.0, "{src} leaf {i}: {r:?}");
            }
        }
    }

    #[test]
    fn subtract_holes() {
        assert_eq!(subtract(0.5, 4.0, &[(0.75, 1.25), (1.75, 2.25)]), vec![(0.5, 0.75), (1.25, 1.75), (2.25, 4.0)]);
    }
}
