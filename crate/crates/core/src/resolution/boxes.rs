//! Indicator box covers of the dyadic pieces of a good region.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::RegionDescriptor;
use crate::coeff::to_f64;

/// Bound on how many boxes of one cover any vertical or horizontal line meets.
pub const OVERLAP_CONSTANT: usize = 4;
/// Strips per side are capped; deeper pieces get wider strips.
const MAX_STRIPS: usize = 1 << 12;
/// x-samples across the single box of a stage-0 piece.
const STRIP_PROBES: usize = 9;
/// Step through x where the piece is empty.
const EMPTY_STEPS: f64 = 256.0;

/// Half-open rectangle [x0, x1) × [y0, y1) on one side (sign of y_n) of the curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub side: i8,
}

impl Rect {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

#[derive(Debug, Clone)]
pub struct BoxCover {
    pub sigma: f64,
    pub rho: f64,
    /// Nominal Δx × Δy of the boxes.
    pub nominal: (f64, f64),
    pub boxes: Vec<Rect>,
    /// Projection overlaps, counted separately on each side of the curve.
    pub overlap_x: usize,
    pub overlap_y: usize,
    pub constant: usize,
    /// Some strip was widened to the MAX_STRIPS floor.
    pub capped: bool,
}

impl BoxCover {
    pub fn within_constant(&self) -> bool {
        self.overlap_x <= self.constant && self.overlap_y <= self.constant
    }

    /// Fraction of sampled points of the (σ, ρ) piece that fall in some box.
    pub fn coverage(&self, leaf: &RegionDescriptor, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let geom = Geom::new(leaf, self.sigma, self.rho);
        let signs = leaf_signs(leaf);
        let (mut hit, mut total) = (0usize, 0usize);
        for _ in 0..samples {
            let x = self.sigma * (1.0 + rng.gen::<f64>());
            let Some((lo, hi)) = geom.shell_range(x) else { continue };
            let yn = lo + rng.gen::<f64>() * (hi - lo);
            let yn = if signs.len() == 2 && rng.gen() { -yn } else { yn * signs[0] };
            let y = geom.y(x, yn);
            total += 1;
            // positive-side strips come first; each side runs in increasing x
            let split = self.boxes.partition_point(|b| b.side == 1);
            let strips = if yn < 0.0 { &self.boxes[split..] } else { &self.boxes[..split] };
            let k = strips.partition_point(|b| b.x1 <= x);
            if strips.get(k).is_some_and(|b| b.contains(x, y)) {
                hit += 1;
            }
        }
        if total == 0 {
            1.0
        } else {
            hit as f64 / total as f64
        }
    }
}

/// Signs y_n takes in the leaf.
fn leaf_signs(leaf: &RegionDescriptor) -> Vec<f64> {
    match leaf.band {
        super::Band::Vertex { .. } => vec![1.0, -1.0],
        super::Band::Edge { r_hi, .. } => vec![if r_hi <= 0.0 { -1.0 } else { 1.0 }],
    }
}

/// Leaf geometry of one (σ, ρ) piece with every exponent converted to f64 once.
struct Geom<'a> {
    leaf: &'a RegionDescriptor,
    gamma: Vec<(f64, f64)>,
    shift: f64,
    m_low: f64,
    m_high: Option<f64>,
    /// ρσ^{m_low}
    base: f64,
}

impl<'a> Geom<'a> {
    fn new(leaf: &'a RegionDescriptor, sigma: f64, rho: f64) -> Self {
        let m_low = leaf.m_low_f64();
        Geom {
            leaf,
            gamma: leaf.gamma.iter().map(|(r, e)| (r.value(), to_f64(e))).collect(),
            shift: to_f64(&leaf.shift),
            m_low,
            m_high: leaf.m_high_f64(),
            base: rho * sigma.powf(m_low),
        }
    }

    /// |y_n| range of the piece x ∈ [σ, 2σ), |y_n| ∈ [ρσ^{m_n}, 2ρσ^{m_n}) at a given x.
    fn shell_range(&self, x: f64) -> Option<(f64, f64)> {
        if x >= self.leaf.epsilon {
            return None;
        }
        let (lo, hi) = self.leaf.log_y_range_with(x.ln(), self.m_low, self.m_high)?;
        let lo = lo.exp().max(self.base);
        let hi = hi.exp().min(2.0 * self.base);
        (lo < hi).then_some((lo, hi))
    }

    /// (γ(x), γ'(x), x^shift, d/dx x^shift), so that y = γ + y_n x^shift is linear in y_n.
    fn frame(&self, x: f64) -> Frame {
        let (mut g, mut dg) = (0.0, 0.0);
        for (r, e) in &self.gamma {
            let p = x.powf(e - 1.0);
            g += r * p * x;
            dg += r * e * p;
        }
        let p = x.powf(self.shift - 1.0);
        Frame { g, dg, xs: p * x, dxs: self.shift * p }
    }

    /// y = γ(x) + y_n x^shift.
    fn y(&self, x: f64, y_n: f64) -> f64 {
        self.frame(x).y(y_n)
    }
}

#[derive(Clone, Copy)]
struct Frame {
    g: f64,
    dg: f64,
    xs: f64,
    dxs: f64,
}

impl Frame {
    fn y(&self, y_n: f64) -> f64 {
        self.g + y_n * self.xs
    }

    /// dy/dx along constant y_n.
    fn slope(&self, y_n: f64) -> f64 {
        self.dg + y_n * self.dxs
    }
}

/// Nominal box size: (σ, ρσ^{m_0}) at stage 0, (ρσ^{M_n}σ^{1-m_0}, ρσ^{M_n}) later.
pub fn nominal_box(leaf: &RegionDescriptor, sigma: f64, rho: f64) -> (f64, f64) {
    let m_low = leaf.m_low_f64();
    if leaf.stage == 0 {
        return (sigma, rho * sigma.powf(m_low));
    }
    let m0 = to_f64(&leaf.gamma[0].1);
    let dy = rho * sigma.powf(to_f64(&leaf.shift) + m_low);
    (dy * sigma.powf(1.0 - m0), dy)
}

/// Largest number of half-open intervals sharing a point.
fn max_overlap(intervals: impl Iterator<Item = (f64, f64)>) -> usize {
    let mut events: Vec<(f64, i32)> = intervals.flat_map(|(a, b)| [(a, 1), (b, -1)]).collect();
    // ends sort before starts at the same coordinate
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut cur = 0i32;
    let mut best = 0i32;
    for (_, d) in events {
        cur += d;
        best = best.max(cur);
    }
    best as usize
}

/// Cover the (σ, ρ) piece of a leaf by boxes, separately for each sign of y_n.
/// Strips in x are chosen so that the curve moves by about two piece thicknesses
/// across each strip; each box spans the y-extent of the piece over its strip.
pub fn box_cover(leaf: &RegionDescriptor, sigma: f64, rho: f64) -> BoxCover {
    let nominal = nominal_box(leaf, sigma, rho);
    let mut cover = BoxCover {
        sigma,
        rho,
        nominal,
        boxes: vec![],
        overlap_x: 0,
        overlap_y: 0,
        constant: OVERLAP_CONSTANT,
        capped: false,
    };
    let x_end = (2.0 * sigma).min(leaf.epsilon);
    if x_end <= sigma {
        return cover;
    }
    let width = x_end - sigma;
    let geom = Geom::new(leaf, sigma, rho);
    let min_step = width / MAX_STRIPS as f64;
    let x_max = x_end * (1.0 - 1e-15);
    for sg in leaf_signs(leaf) {
        // band at x and the local step 2T/|slope| that keeps boxes about two thicknesses tall
        let probe = |x: f64| -> (Option<(Frame, f64, f64)>, Option<f64>) {
            let x = x.min(x_max);
            let Some((lo, hi)) = geom.shell_range(x) else { return (None, None) };
            let f = geom.frame(x);
            let thick = (hi - lo) * f.xs;
            let s = f.slope(sg * lo).abs().max(f.slope(sg * hi).abs());
            (Some((f, lo, hi)), Some(if s > 0.0 { 2.0 * thick / s } else { width }))
        };
        let mut push = |xa: f64, xb: f64, samples: &[Option<(Frame, f64, f64)>]| {
            let mut y0 = f64::INFINITY;
            let mut y1 = f64::NEG_INFINITY;
            for &(f, lo, hi) in samples.iter().flatten() {
                for yn in [lo, hi] {
                    let y = f.y(sg * yn);
                    y0 = y0.min(y);
                    y1 = y1.max(y);
                }
            }
            if y0 < y1 {
                let pad = 1e-12 * (y1 - y0).max(y1.abs());
                cover.boxes.push(Rect { x0: xa, x1: xb, y0: y0 - pad, y1: y1 + pad, side: sg as i8 });
            }
        };
        if leaf.stage == 0 {
            let samples: Vec<_> = (0..STRIP_PROBES)
                .map(|i| probe(sigma + width * i as f64 / (STRIP_PROBES - 1) as f64))
                .map(|(r, _)| r)
                .collect();
            push(sigma, x_end, &samples);
            continue;
        }
        let mut xa = sigma;
        let mut here = probe(xa);
        while xa < x_end {
            let mut step = here.1.unwrap_or(width / EMPTY_STEPS);
            let mut next = probe(xa + step);
            if let Some(s) = next.1 {
                if s < step {
                    step = s;
                    next = probe(xa + step);
                }
            }
            if step < min_step {
                cover.capped = true;
                step = min_step;
                next = probe(xa + step);
            }
            let xb = (xa + step).min(x_end);
            let mid = probe((xa + xb) / 2.0);
            push(xa, xb, &[here.0, mid.0, next.0]);
            xa = xb;
            here = next;
        }
    }
    for side in [1, -1] {
        let on_side = || cover.boxes.iter().filter(move |b| b.side == side);
        cover.overlap_x = cover.overlap_x.max(max_overlap(on_side().map(|b| (b.x0, b.x1))));
        cover.overlap_y = cover.overlap_y.max(max_overlap(on_side().map(|b| (b.y0, b.y1))));
    }
    cover
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_phase;
    use crate::resolution::{resolve, ResolveConfig};

    #[test]
    fn stage_zero_nominal_box() {
        // vertex (3, 1) sits right of the m = 2 edge
        let p = parse_phase("x*y*(y + x^2)").unwrap();
        let t = resolve(&p, &ResolveConfig::default()).unwrap();
        let leaf = t.leaves.iter().find(|l| l.exponents.1 == 1 && l.stage == 0 && l.m_range.1.is_none()).unwrap();
        assert_eq!(nominal_box(leaf, 0.25, 0.5), (0.25, 1.0 / 32.0));
    }

    #[test]
    fn double_line_overlap_on_grid() {
        let p = parse_phase("(y-x)^2").unwrap();
        let t = resolve(&p, &ResolveConfig::default()).unwrap();
        let leaf = t.leaves.iter().find(|l| l.stage == 1).unwrap();
        for i in 5..11 {
            for j in 0..6 {
                let c = box_cover(leaf, 2f64.powi(-i), 2f64.powi(-j));
                assert!(c.within_constant(), "σ=2^-{i} ρ=2^-{j}: {} {}", c.overlap_x, c.overlap_y);
                assert!(c.coverage(leaf, 500, 1) >= 0.99);
            }
        }
    }

    #[test]
    fn overlap_sweep() {
        assert_eq!(max_overlap([(0.0, 1.0), (1.0, 2.0)].into_iter()), 1);
        assert_eq!(max_overlap([(0.0, 1.5), (1.0, 2.0), (1.2, 1.3)].into_iter()), 3);
    }
}
