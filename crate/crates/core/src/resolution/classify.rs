//! Bookkeeping identities along tree paths, leaf classification against a
//! vertex (k-1, l-1), and the dyadic budget sums.

use num_traits::Zero;
use thiserror::Error;

use super::{Classification, RegionDescriptor, ResolutionTree};
use crate::coeff::{fmt_rational, int, to_f64, Rational};
use crate::polygon::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("({0}, {1}) is not a vertex of the stage-0 polygon")]
    NotAVertex(i64, i64),
    #[error("need l >= k; transpose the phase first")]
    NeedsTranspose,
    #[error("negative exponent {name} = {value} at leaf {leaf}")]
    NegativeExponent { name: &'static str, value: String, leaf: usize },
    #[error("l - 1 = {l_minus_1} < s_0 = {s0} at leaf {leaf}")]
    VertexBelowMultiplicity { l_minus_1: i64, s0: u32, leaf: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BookkeepingViolation {
    /// Child leftmost vertex differs from (p_j + m_j q_j, s_j).
    LeftmostVertex { node: usize, expected: Point, found: Point },
    /// s_j > q_j, or the supporting line through the parent edge passes above the child's leftmost vertex.
    Induction { node: usize },
    /// The summed inequality fails at a leaf.
    Accumulated { leaf: usize, lhs: Rational, rhs: Rational },
    /// A major-2 leaf whose multiplicities are not all equal.
    Chain { leaf: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafClass {
    pub classification: Classification,
    pub nu: i64,
    pub mu: Rational,
}

/// Parent edge left endpoint (p_j, q_j) used to reach `node`.
fn parent_edge_left(tree: &ResolutionTree, node: usize) -> Option<Point> {
    let (par, b) = tree.nodes[node].parent?;
    let br = &tree.nodes[par].branches[b];
    Some(tree.nodes[par].edges[br.edge].edge.left.clone())
}

/// m_n of a leaf: the exponent controlling |y_n| from above.
fn leaf_m(leaf: &RegionDescriptor) -> &Rational {
    &leaf.m_range.0
}

/// Checks the tree-edge identities and, for every leaf, the accumulated inequality
/// (at m_low and at m_high when finite) and the equal-multiplicity chain for major-2 leaves.
pub fn check_bookkeeping(tree: &ResolutionTree, majors: &[usize]) -> Vec<BookkeepingViolation> {
    let mut out = Vec::new();
    for (idx, node) in tree.nodes.iter().enumerate().skip(1) {
        let (par, b) = node.parent.expect("non-root node has a parent");
        let br = &tree.nodes[par].branches[b];
        let left = parent_edge_left(tree, idx).unwrap();
        let m = &tree.nodes[par].edges[br.edge].edge.m;
        let expected = (&left.0 + m * &left.1, int(br.multiplicity as i64));
        let found = node.polygon.leftmost().clone();
        if found != expected {
            out.push(BookkeepingViolation::LeftmostVertex { node: idx, expected, found: found.clone() });
        }
        if int(br.multiplicity as i64) > left.1 || &left.0 + &left.1 * m > &found.0 + &found.1 * m {
            out.push(BookkeepingViolation::Induction { node: idx });
        }
    }
    for (li, leaf) in tree.leaves.iter().enumerate() {
        if leaf.stage == 0 {
            continue;
        }
        let path = tree.path(leaf.node);
        let chain = &tree.nodes[leaf.node].triple.chain;
        let left0 = parent_edge_left(tree, path[1]).unwrap();
        let base = &left0.0 + &chain[0].m * &left0.1;
        let mut check = |m_n: &Rational| {
            // sum over j = 1..=n of q_{j,l} m_j, with m_n taken from the leaf
            let mut rhs = base.clone();
            for (j, &nid) in path.iter().enumerate().skip(1) {
                let mj = if j < chain.len() { chain[j].m.clone() } else { m_n.clone() };
                rhs += &tree.nodes[nid].polygon.leftmost().1 * mj;
            }
            let lhs = &leaf.exponents.0 + m_n * int(leaf.exponents.1 as i64);
            if lhs > rhs {
                out.push(BookkeepingViolation::Accumulated { leaf: li, lhs, rhs });
            }
        };
        check(leaf_m(leaf));
        if let Some(mh) = &leaf.m_range.1 {
            check(mh);
        }
        if majors.contains(&li) {
            let q0l = tree.nodes[0].polygon.leftmost().1.clone();
            let mut qs = vec![q0l, left0.1.clone()];
            for (j, &nid) in path.iter().enumerate().skip(1) {
                qs.push(int(chain[j - 1].multiplicity as i64));
                qs.push(tree.nodes[nid].polygon.leftmost().1.clone());
            }
            qs.push(int(leaf.exponents.1 as i64));
            if qs.iter().any(|q| q != &qs[0]) {
                out.push(BookkeepingViolation::Chain { leaf: li });
            }
        }
    }
    out
}

/// Classify leaf `li` of `tree` against the stage-0 vertex (k-1, l-1).
pub fn classify_region(tree: &ResolutionTree, li: usize, k: u32, l: u32) -> Result<LeafClass, ClassifyError> {
    if l < k {
        return Err(ClassifyError::NeedsTranspose);
    }
    let vertex = (int(k as i64 - 1), int(l as i64 - 1));
    if !tree.nodes[0].polygon.vertices.contains(&vertex) {
        return Err(ClassifyError::NotAVertex(k as i64 - 1, l as i64 - 1));
    }
    let leaf = &tree.leaves[li];
    let (pn, qn) = (&leaf.exponents.0, leaf.exponents.1);
    let kl2 = (k + l - 2) as i64;
    let nu = kl2 - qn as i64;
    if leaf.stage == 0 {
        let major = k == 1 && pn.is_zero() && qn == l - 1;
        // μ has no role at stage 0; report the exponent of σ in C for completeness
        let mu = Rational::zero();
        return Ok(LeafClass {
            classification: if major { Classification::Major1 } else { Classification::Minor },
            nu,
            mu,
        });
    }
    let chain = &tree.nodes[leaf.node].triple.chain;
    let s0 = chain[0].multiplicity;
    if (l as i64 - 1) < s0 as i64 {
        return Err(ClassifyError::VertexBelowMultiplicity { l_minus_1: l as i64 - 1, s0, leaf: li });
    }
    let m0 = &chain[0].m;
    let m_n = leaf_m(leaf);
    let big_m = &leaf.shift + m_n;
    let mu = int(kl2) * &big_m + (int(1) - m0) * int(k as i64 - 1) - (pn + m_n * int(qn as i64));
    if nu < 0 {
        return Err(ClassifyError::NegativeExponent { name: "nu", value: nu.to_string(), leaf: li });
    }
    if mu < Rational::zero() {
        return Err(ClassifyError::NegativeExponent { name: "mu", value: fmt_rational(&mu), leaf: li });
    }
    let classification = if nu > 0 { Classification::Minor } else { Classification::Major2 };
    Ok(LeafClass { classification, nu, mu })
}

/// Number of dyadic scales summed in each direction.
const GRID: i32 = 160;

fn log_sum_exp2(v: &[f64]) -> f64 {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// Dyadic budget for one leaf: Σ of min(A, B[, C]) over (σ, ρ) = (2^-i, 2^-j).
/// At stage 0 the terms are grouped along level sets before summing; from stage 1
/// on the ρ-sum is taken for each σ and the worst σ is returned.
pub fn budget_sum(leaf: &RegionDescriptor, k: u32, l: u32, p: f64, lambda: f64) -> f64 {
    let ll = lambda.log2();
    let pp = p / (p - 1.0);
    let (pn, qn) = (to_f64(&leaf.exponents.0), leaf.exponents.1 as f64);
    let (k, l) = (k as f64, l as f64);
    let m_low = to_f64(leaf_m(leaf));
    // ρ ≥ σ^{m_high - m_low}
    let span = leaf.m_range.1.as_ref().map(|mh| to_f64(mh) - m_low);
    let j_max = |i: i32| -> i32 {
        match span {
            Some(s) => ((i as f64) * s).floor().min(GRID as f64) as i32,
            None => GRID,
        }
    };
    let m0 = leaf.gamma.first().map(|g| to_f64(&g.1)).unwrap_or(m_low);
    if leaf.stage == 0 {
        let vertex_case = pn == k - 1.0 && qn == l - 1.0;
        let mut groups: std::collections::BTreeMap<i64, f64> = Default::default();
        for i in 0..=GRID {
            for j in 0..=j_max(i) {
                let (ls, lr) = (-(i as f64), -(j as f64));
                let ly = lr + m0 * ls;
                let la = ls / p + ly / pp;
                let lb = -(ll + pn * ls + qn * ly) / p + ly * (1.0 - 2.0 / p);
                let key = if vertex_case {
                    lb + ll / (k + l)
                } else {
                    (k - 1.0) * ls + (l - 1.0) * ly - (pn * ls + qn * ly)
                };
                let v = la.min(lb);
                let g = groups.entry(key.round() as i64).or_insert(f64::NEG_INFINITY);
                *g = g.max(v);
            }
        }
        let logs: Vec<f64> = groups.values().cloned().collect();
        return log_sum_exp2(&logs).exp2();
    }
    let big_m = to_f64(&leaf.shift) + m_low;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..=GRID {
        let ls = -(i as f64);
        let terms: Vec<f64> = (0..=j_max(i))
            .map(|j| {
                let lr = -(j as f64);
                let ly = lr + big_m * ls;
                let la = ly + ls * (1.0 - m0) / p;
                let lb = -(ll + (pn + m_low * qn) * ls + qn * lr) / p + ly * (1.0 - 2.0 / p);
                let lc = la * (k - 1.0) / k + lb / k;
                la.min(lb).min(lc)
            })
            .collect();
        worst = worst.max(log_sum_exp2(&terms));
    }
    worst.exp2()
}
