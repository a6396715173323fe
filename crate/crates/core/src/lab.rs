//! Discretized oscillatory integral operators and the numerical experiments
//! run on them.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use num_traits::{One, Signed};

use crate::coeff::{fmt_rational, to_f64, Rational};
use crate::polygon::{Membership, NewtonPolygon};
use crate::series::{BiSeries, SeriesError};

/// Grid points per oscillation demanded by the resolution rule N ≥ 8√(λ max|S|).
pub const RESOLUTION_FACTOR: f64 = 8.0;
pub const MIN_GRID: usize = 64;
/// Relative tolerance on the top singular value.
pub const NORM_TOLERANCE: f64 = 1e-6;
/// Largest |λS| allowed on a witness box.
pub const WITNESS_PHASE_BOUND: f64 = 1.0 / 1024.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("grid size {0} is below the minimum of 64")]
    GridTooSmall(usize),
    #[error("N = {n} under-resolves the phase at this λ; need N ≥ {required}")]
    UnderResolved { n: usize, required: usize },
    #[error("norm iteration did not converge; last relative gap {gap:e}")]
    NonConvergence { gap: f64 },
    #[error("|λS| reaches {value:e} on the witness box; try δ ≤ {suggest:e}")]
    DeltaTooLarge { value: f64, suggest: f64 },
    #[error("cannot fit a decay rate to nonpositive value {0}")]
    NonPositive(f64),
    #[error("need at least 3 points to fit, got {0}")]
    TooFewPoints(usize),
    #[error("hypothesis fails: {0}")]
    Hypothesis(String),
    #[error(transparent)]
    Series(#[from] SeriesError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    SmoothBump,
    BoxIndicator,
}

/// χ(x, y) = φ((x - x0)/h_x) φ((y - y0)/h_y), supported in [x0 - h_x, x0 + h_x] × [y0 - h_y, y0 + h_y].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSpec {
    pub center: (f64, f64),
    pub half_widths: (f64, f64),
    pub profile: Profile,
}

impl CutoffSpec {
    pub fn bump(center: (f64, f64), half_width: f64) -> Self {
        CutoffSpec { center, half_widths: (half_width, half_width), profile: Profile::SmoothBump }
    }

    pub fn indicator(center: (f64, f64), half_width: f64) -> Self {
        CutoffSpec { center, half_widths: (half_width, half_width), profile: Profile::BoxIndicator }
    }

    /// Indicator of [x0, x1] × [y0, y1].
    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Self {
        CutoffSpec {
            center: ((x.0 + x.1) / 2.0, (y.0 + y.1) / 2.0),
            half_widths: ((x.1 - x.0) / 2.0, (y.1 - y.0) / 2.0),
            profile: Profile::BoxIndicator,
        }
    }

    /// Indicator of the unit square [0, 1]².
    pub fn unit_square() -> Self {
        Self::indicator((0.5, 0.5), 0.5)
    }

    fn factor(&self, t: f64) -> f64 {
        match self.profile {
            Profile::BoxIndicator => {
                if t.abs() <= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Profile::SmoothBump => {
                if t.abs() >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - t * t)).exp()
                }
            }
        }
    }

    pub fn x_factor(&self, x: f64) -> f64 {
        self.factor((x - self.center.0) / self.half_widths.0)
    }

    pub fn y_factor(&self, y: f64) -> f64 {
        self.factor((y - self.center.1) / self.half_widths.1)
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.x_factor(x) * self.y_factor(y)
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.center.0 - self.half_widths.0, self.center.0 + self.half_widths.0)
    }

    pub fn y_range(&self) -> (f64, f64) {
        (self.center.1 - self.half_widths.1, self.center.1 + self.half_widths.1)
    }

    pub fn transpose(&self) -> Self {
        CutoffSpec {
            center: (self.center.1, self.center.0),
            half_widths: (self.half_widths.1, self.half_widths.0),
            profile: self.profile,
        }
    }
}

/// Uniform nodes on [a, b] with composite Simpson weights (3/8 rule on the last
/// three intervals when the interval count is odd).
pub fn simpson_grid(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 4);
    let h = (b - a) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| a + h * i as f64).collect();
    let mut w = vec![0.0; n];
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        for (k, c) in [1.0, 3.0, 3.0, 1.0].iter().enumerate() {
            w[s + k] += 3.0 * h / 8.0 * c;
        }
    }
    (xs, w)
}

/// Max of |S| over a g×g sample of the square.
fn max_abs_phase(s: &BiSeries, cutoff: &CutoffSpec, g: usize) -> f64 {
    let c = s.compile();
    let (xa, xb) = cutoff.x_range();
    let (ya, yb) = cutoff.y_range();
    let mut m: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            let x = xa + (xb - xa) * i as f64 / (g - 1) as f64;
            let y = ya + (yb - ya) * j as f64 / (g - 1) as f64;
            m = m.max(eval_phase(&c.terms, x, y).abs());
        }
    }
    m
}

fn eval_phase(terms: &[(f64, f64, i32)], x: f64, y: f64) -> f64 {
    terms.iter().map(|(c, p, q)| c * x.powi(*p as i32) * y.powi(*q)).sum()
}

/// Smallest N meeting the resolution rule for this phase, cutoff and λ.
pub fn required_grid(s: &BiSeries, cutoff: &CutoffSpec, lambda: f64) -> usize {
    (RESOLUTION_FACTOR * (lambda.abs() * max_abs_phase(s, cutoff, 33)).sqrt()).ceil() as usize
}

/// Tabulated S(x_i, y_j) = Σ_t c_t x_i^{p_t} y_j^{q_t}.
fn phase_table(s: &BiSeries, xs: &[f64], ys: &[f64]) -> Result<Vec<(f64, Vec<f64>, Vec<f64>)>, LabError> {
    if !s.has_integer_exponents() {
        return Err(SeriesError::FractionalExponent(s.to_string()).into());
    }
    Ok(s.compile()
        .terms
        .iter()
        .map(|(c, p, q)| {
            let p = *p as i32;
            (*c, xs.iter().map(|x| x.powi(p)).collect(), ys.iter().map(|y| y.powi(*q)).collect())
        })
        .collect())
}

/// T_λ f(x) = ∫ e^{iλS(x,y)} χ(x,y) f(y) dy on an N×N grid.
#[derive(Debug, Clone)]
pub struct DiscretizedOperator {
    pub n: usize,
    pub lambda: f64,
    pub cutoff: CutoffSpec,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    /// Row-major e^{iλS(x_i,y_j)} χ(x_i,y_j).
    kernel: Vec<Complex64>,
    /// Set when the grid breaks the resolution rule.
    pub warning: Option<LabError>,
}

impl DiscretizedOperator {
    pub fn new(s: &BiSeries, lambda: f64, cutoff: CutoffSpec, n: usize) -> Result<Self, LabError> {
        Self::from_fn(s, lambda, cutoff, n, |x, y| cutoff.eval(x, y))
    }

    /// Grid and resolution rule from `domain`, kernel cutoff from `chi`.
    /// Operators sharing `domain` and `n` act on the same grid and can be compared entrywise.
    pub fn from_fn(
        s: &BiSeries,
        lambda: f64,
        domain: CutoffSpec,
        n: usize,
        chi: impl Fn(f64, f64) -> f64 + Sync,
    ) -> Result<Self, LabError> {
        if n < MIN_GRID {
            return Err(LabError::GridTooSmall(n));
        }
        let (xa, xb) = domain.x_range();
        let (ya, yb) = domain.y_range();
        let (xs, wx) = simpson_grid(xa, xb, n);
        let (ys, wy) = simpson_grid(ya, yb, n);
        let table = phase_table(s, &xs, &ys)?;
        let mut kernel = vec![Complex64::new(0.0, 0.0); n * n];
        kernel.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
            for (j, k) in row.iter_mut().enumerate() {
                let c = chi(xs[i], ys[j]);
                if c == 0.0 {
                    continue;
                }
                let ph: f64 = table.iter().map(|(c, px, qy)| c * px[i] * qy[j]).sum();
                *k = Complex64::from_polar(c, lambda * ph);
            }
        });
        let required = required_grid(s, &domain, lambda);
        let warning = (n < required).then_some(LabError::UnderResolved { n, required });
        Ok(DiscretizedOperator { n, lambda, cutoff: domain, xs, ys, wx, wy, kernel, warning })
    }

    pub fn require_resolved(&self) -> Result<(), LabError> {
        match &self.warning {
            Some(w) => Err(w.clone()),
            None => Ok(()),
        }
    }

    pub fn kernel(&self, i: usize, j: usize) -> Complex64 {
        self.kernel[i * self.n + j]
    }

    /// (Tf)(x_i) = Σ_j K_ij w_j f_j.
    pub fn apply(&self, f: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(f.len(), self.n);
        let wf: Vec<Complex64> = f.iter().zip(&self.wy).map(|(v, w)| v * w).collect();
        self.kernel.par_chunks(self.n).map(|row| row.iter().zip(&wf).map(|(k, v)| k * v).sum()).collect()
    }

    /// (T*g)(y_j) = Σ_i conj(K_ij) w_i g_i.
    pub fn apply_adjoint(&self, g: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(g.len(), self.n);
        let n = self.n;
        let wg: Vec<Complex64> = g.iter().zip(&self.wx).map(|(v, w)| v * w).collect();
        self.kernel
            .par_chunks(n)
            .zip(wg.par_iter())
            .fold(
                || vec![Complex64::new(0.0, 0.0); n],
                |mut acc, (row, gi)| {
                    for (a, k) in acc.iter_mut().zip(row) {
                        *a += k.conj() * gi;
                    }
                    acc
                },
            )
            .reduce(
                || vec![Complex64::new(0.0, 0.0); n],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(&b) {
                        *x += y;
                    }
                    a
                },
            )
    }

    /// Operator for the conjugate phase with the roles of x and y exchanged.
    pub fn adjoint(s: &BiSeries, lambda: f64, cutoff: CutoffSpec, n: usize) -> Result<Self, LabError> {
        Self::new(&s.transpose()?, -lambda, cutoff.transpose(), n)
    }

    /// ⟨u, v⟩ = Σ w_i u_i conj(v_i) in L²(dx).
    pub fn inner_x(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter().zip(v).zip(&self.wx).map(|((a, b), w)| a * b.conj() * w).sum()
    }

    pub fn inner_y(&self, u: &[Complex64], v: &[Complex64]) -> Complex64 {
        u.iter().zip(v).zip(&self.wy).map(|((a, b), w)| a * b.conj() * w).sum()
    }

    /// B = W_x^{1/2} K W_y^{1/2} as a dense matrix (small N only).
    pub fn weighted_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.kernel(i, j) * (self.wx[i] * self.wy[j]).sqrt())
    }

    /// Largest singular value of B: the L²(dy) → L²(dx) norm of the discretization.
    /// Lanczos on BᴴB with full reorthogonalization.
    pub fn l2_norm_estimate(&self, iters: usize) -> Result<f64, LabError> {
        let n = self.n;
        // Simpson weights are positive, so BᴴB v = W_y^{1/2} T* T (W_y^{-1/2} v)
        let sy: Vec<f64> = self.wy.iter().map(|w| w.sqrt()).collect();
        let gram = |v: &[Complex64]| -> Vec<Complex64> {
            let f: Vec<Complex64> = v.iter().zip(&sy).map(|(a, s)| a / s).collect();
            let back = self.apply_adjoint(&self.apply(&f));
            back.iter().zip(&sy).map(|(a, s)| a * s).collect()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x6c61_6e63);
        let mut v: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        normalize(&mut v);
        let mut basis: Vec<Vec<Complex64>> = vec![v];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut last = f64::NAN;
        let mut gap = f64::INFINITY;
        for it in 0..iters.max(1) {
            let vj = basis.last().unwrap().clone();
            let mut w = gram(&vj);
            let a = dot(&vj, &w).re;
            alphas.push(a);
            for _ in 0..2 {
                for q in &basis {
                    let c = dot(q, &w);
                    for (x, y) in w.iter_mut().zip(q) {
                        *x -= c * y;
                    }
                }
            }
            let b = norm(&w);
            let theta = top_ritz(&alphas, &betas);
            gap = if last.is_nan() { f64::INFINITY } else { ((theta - last) / theta).abs() };
            last = theta;
            if b <= 1e-14 * theta.max(f64::MIN_POSITIVE) || (it >= 3 && gap < NORM_TOLERANCE * 1e-3) {
                return Ok(theta.max(0.0).sqrt());
            }
            betas.push(b);
            for x in w.iter_mut() {
                *x /= b;
            }
            basis.push(w);
        }
        Err(LabError::NonConvergence { gap })
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(a: &mut [Complex64]) {
    let n = norm(a);
    for x in a.iter_mut() {
        *x /= n;
    }
}

fn top_ritz(alphas: &[f64], betas: &[f64]) -> f64 {
    let k = alphas.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t).eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// ∬ e^{iλS} χ dx dy by tensor Simpson quadrature.
pub fn scalar_integral(s: &BiSeries, cutoff: &CutoffSpec, lambda: f64, n: usize) -> Result<Complex64, LabError> {
    let (xs, wx) = simpson_grid(cutoff.x_range().0, cutoff.x_range().1, n);
    let (ys, wy) = simpson_grid(cutoff.y_range().0, cutoff.y_range().1, n);
    let table = phase_table(s, &xs, &ys)?;
    let cy: Vec<f64> = ys.iter().map(|y| cutoff.y_factor(*y)).collect();
    Ok((0..n)
        .into_par_iter()
        .map(|i| {
            let cx = cutoff.x_factor(xs[i]) * wx[i];
            if cx == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            (0..n)
                .map(|j| {
                    let ph: f64 = table.iter().map(|(c, px, qy)| c * px[i] * qy[j]).sum();
                    Complex64::from_polar(cx * cy[j] * wy[j], lambda * ph)
                })
                .sum::<Complex64>()
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// f = 1 on [0, y_len] (a function of y).
    pub y_len: f64,
    /// g = 1 on [0, x_len] (a function of x).
    pub x_len: f64,
    pub pairing: Complex64,
    /// |⟨T f, g⟩| / (‖f‖_p ‖g‖_{p'}).
    pub ratio: f64,
}

/// Characteristic-function pair concentrated where the phase is nearly constant.
/// (a, b) = (1/(pα), 1/(p'α)); the box is [0, δλ^{-1/(a+bm)}] × [0, δλ^{-m/(a+bm)}],
/// read as [0, δ] × [0, δλ^{-1/b}] when m = ∞. Pure x- or y-terms of S only
/// modulate f and g and are dropped.
pub fn witness_pair(s: &BiSeries, cutoff: &CutoffSpec, m: f64, p: f64, alpha: f64, lambda: f64, delta: f64) -> Result<Witness, LabError> {
    let s = &mixed_part(s);
    let pp = p / (p - 1.0);
    let a = 1.0 / (p * alpha);
    let b = 1.0 / (pp * alpha);
    let (ex, ey) = if m.is_infinite() { (0.0, 1.0 / b) } else { (1.0 / (a + b * m), m / (a + b * m)) };
    let x_len = delta * lambda.powf(-ex);
    let y_len = delta * lambda.powf(-ey);
    let peak = {
        let c = s.compile();
        let mut mx: f64 = 0.0;
        for i in 0..=16 {
            for j in 0..=16 {
                mx = mx.max(eval_phase(&c.terms, x_len * i as f64 / 16.0, y_len * j as f64 / 16.0).abs());
            }
        }
        lambda * mx
    };
    if peak > WITNESS_PHASE_BOUND {
        // the phase is a sum of monomials, so shrinking δ by t scales it by at least t
        return Err(LabError::DeltaTooLarge { value: peak, suggest: delta * WITNESS_PHASE_BOUND / peak });
    }
    let g = 65;
    let (xs, wx) = simpson_grid(0.0, x_len, g);
    let (ys, wy) = simpson_grid(0.0, y_len, g);
    let table = phase_table(s, &xs, &ys)?;
    let mut pairing = Complex64::new(0.0, 0.0);
    for i in 0..g {
        for j in 0..g {
            let ph: f64 = table.iter().map(|(c, px, qy)| c * px[i] * qy[j]).sum();
            let chi = cutoff.eval(xs[i], ys[j]);
            pairing += Complex64::from_polar(chi * wx[i] * wy[j], lambda * ph);
        }
    }
    let ratio = pairing.norm() / (y_len.powf(1.0 / p) * x_len.powf(1.0 / pp));
    Ok(Witness { y_len, x_len, pairing, ratio })
}

/// Terms with both exponents positive.
pub fn mixed_part(s: &BiSeries) -> BiSeries {
    s.filter(|e, q| e.is_positive() && q > 0)
}

/// Slope m of a supporting line of the reduced polygon through (1/(pα), 1/(p'α)),
/// with m = ∞ for the horizontal ray. Fails when the point is not on the boundary.
pub fn supporting_m(poly: &NewtonPolygon, p: &Rational, alpha: &Rational) -> Result<f64, LabError> {
    let a = (p * alpha).recip();
    let b = ((p / (p - Rational::one())) * alpha).recip();
    if poly.contains(&a, &b) != Membership::Boundary {
        return Err(LabError::Hypothesis(format!(
            "({}, {}) is not on the boundary of the reduced polygon",
            fmt_rational(&a),
            fmt_rational(&b)
        )));
    }
    if let Some(i) = poly.vertices.iter().position(|v| v.0 == a && v.1 == b) {
        let lo = if i == 0 { 0.0 } else { to_f64(&poly.edges[i - 1].m) };
        return Ok(match poly.edges.get(i) {
            Some(e) => (lo + to_f64(&e.m)) / 2.0,
            None => lo + 1.0,
        });
    }
    if a == poly.leftmost().0 {
        return Ok(0.0);
    }
    if b == poly.lowest().1 {
        return Ok(f64::INFINITY);
    }
    let e = poly.edges.iter().find(|e| e.face().holds(&a, &b)).expect("boundary point lies on a face");
    Ok(to_f64(&e.m))
}

/// Does ∂_x^k ∂_y^l S stay away from zero on a g×g grid of the support?
pub fn check_ui1(s: &BiSeries, k: u32, l: u32, cutoff: &CutoffSpec, g: usize) -> Result<bool, LabError> {
    let d = s.mixed_derivative(k, l)?.compile();
    let (xa, xb) = cutoff.x_range();
    let (ya, yb) = cutoff.y_range();
    let g = g.max(2);
    for i in 0..g {
        for j in 0..g {
            let x = xa + (xb - xa) * i as f64 / (g - 1) as f64;
            let y = ya + (yb - ya) * j as f64 / (g - 1) as f64;
            if eval_phase(&d.terms, x, y).abs() <= 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Least-squares slope of ln(value) against ln(λ), with the RMS residual.
pub fn fit_decay(lambdas: &[f64], values: &[f64]) -> Result<(f64, f64), LabError> {
    if lambdas.len() < 3 || lambdas.len() != values.len() {
        return Err(LabError::TooFewPoints(lambdas.len().min(values.len())));
    }
    if let Some(v) = values.iter().find(|v| **v <= 0.0 || !v.is_finite()) {
        return Err(LabError::NonPositive(*v));
    }
    let xs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let resid = (xs.iter().zip(&ys).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum::<f64>() / n).sqrt();
    Ok((slope, resid))
}

/// Univariate polynomial given by ascending coefficients.
fn poly_eval(u: &[f64], t: f64) -> f64 {
    u.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn poly_deriv(u: &[f64]) -> Vec<f64> {
    u.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VdcReport {
    pub k: u32,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    /// max over the grid of |I(λ)| λ^{1/k}.
    pub constant: f64,
    pub slope: f64,
    pub residual: f64,
}

/// ∫_a^b e^{iλu(t)} dt with enough Simpson nodes to resolve the oscillation.
pub fn oscillatory_1d(u: &[f64], interval: (f64, f64), lambda: f64) -> Complex64 {
    let (a, b) = interval;
    let du = poly_deriv(u);
    let max_du = (0..=256).map(|i| poly_eval(&du, a + (b - a) * i as f64 / 256.0).abs()).fold(0.0, f64::max);
    let n = ((lambda.abs() * max_du * (b - a) * 20.0).ceil() as usize).clamp(1024, 1 << 24) | 1;
    let (ts, ws) = simpson_grid(a, b, n);
    ts.par_iter().zip(ws.par_iter()).map(|(t, w)| Complex64::from_polar(*w, lambda * poly_eval(u, *t))).sum()
}

/// Scalar van der Corput check: |∫ e^{iλu}| ≲ λ^{-1/k} when |u^{(k)}| > 0.
pub fn vdc_scalar(u: &[f64], k: u32, interval: (f64, f64), lambdas: &[f64]) -> Result<VdcReport, LabError> {
    let (a, b) = interval;
    let mut dk = u.to_vec();
    for _ in 0..k {
        dk = poly_deriv(&dk);
    }
    let probes: Vec<f64> = (0..=512).map(|i| a + (b - a) * i as f64 / 512.0).collect();
    if probes.iter().any(|t| poly_eval(&dk, *t).abs() <= 1e-12) {
        return Err(LabError::Hypothesis(format!("u^({k}) vanishes on [{a}, {b}]")));
    }
    if k == 1 {
        let d2 = poly_deriv(&poly_deriv(u));
        let signs: Vec<f64> = probes.iter().map(|t| poly_eval(&d2, *t)).filter(|v| v.abs() > 1e-12).collect();
        if signs.iter().any(|s| s.signum() != signs[0].signum()) {
            return Err(LabError::Hypothesis("u' is not monotone".into()));
        }
    }
    let values: Vec<f64> = lambdas.iter().map(|l| oscillatory_1d(u, interval, *l).norm()).collect();
    let constant = lambdas.iter().zip(&values).map(|(l, v)| v * l.powf(1.0 / k as f64)).fold(0.0, f64::max);
    let (slope, residual) = fit_decay(lambdas, &values)?;
    Ok(VdcReport { k, lambdas: lambdas.to_vec(), values, constant, slope, residual })
}

/// 2^lo, 2^(lo+1), ..., 2^hi.
pub fn dyadic_lambdas(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2f64.powi(e)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub label: String,
    pub lambdas: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_slope: f64,
    pub residual: f64,
    pub predicted_slope: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Fit within tolerance but closer than a fifth of it to the edge.
    pub borderline: bool,
}

impl ExperimentReport {
    pub fn new(label: &str, lambdas: Vec<f64>, values: Vec<f64>, predicted_slope: f64, tolerance: f64) -> Result<Self, LabError> {
        let (fitted_slope, residual) = fit_decay(&lambdas, &values)?;
        let err = (fitted_slope - predicted_slope).abs();
        Ok(ExperimentReport {
            label: label.to_string(),
            lambdas,
            values,
            fitted_slope,
            residual,
            predicted_slope,
            tolerance,
            pass: err <= tolerance,
            borderline: err <= tolerance && err > 0.8 * tolerance,
        })
    }

    pub fn verdict(&self) -> &'static str {
        if self.pass {
            "PASS"
        } else {
            "FAIL"
        }
    }

    /// Columns lambda, value, predicted, ratio; the prediction is anchored at the first λ.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("lambda,value,predicted,ratio\n");
        let (l0, v0) = (self.lambdas[0], self.values[0]);
        for (l, v) in self.lambdas.iter().zip(&self.values) {
            let pred = v0 * (l / l0).powf(self.predicted_slope);
            let _ = writeln!(s, "{l},{v:.12e},{pred:.12e},{:.6}", v / pred);
        }
        s
    }

    pub fn to_json(&self) -> Value {
        json!({
            "label": self.label,
            "lambdas": self.lambdas,
            "values": self.values,
            "fitted_slope": self.fitted_slope,
            "residual": self.residual,
            "predicted_slope": self.predicted_slope,
            "tolerance": self.tolerance,
            "verdict": self.verdict(),
            "borderline": self.borderline,
        })
    }
}

/// L² norms of T_λ over the λ grid, one operator at a time (each kernel is N² complex numbers).
pub fn run_l2_experiment(
    s: &BiSeries,
    cutoff: CutoffSpec,
    n: usize,
    lambdas: &[f64],
    predicted_alpha: f64,
    tolerance: f64,
) -> Result<ExperimentReport, LabError> {
    let mut values = Vec::with_capacity(lambdas.len());
    for &l in lambdas {
        let op = DiscretizedOperator::new(s, l, cutoff, n)?;
        op.require_resolved()?;
        values.push(op.l2_norm_estimate(200)?);
    }
    ExperimentReport::new(&format!("l2 norm of {s}"), lambdas.to_vec(), values, -predicted_alpha, tolerance)
}

/// Witness ratios over the λ grid.
#[allow(clippy::too_many_arguments)]
pub fn run_witness_experiment(
    s: &BiSeries,
    cutoff: &CutoffSpec,
    m: f64,
    p: f64,
    alpha: f64,
    delta: f64,
    lambdas: &[f64],
    tolerance: f64,
) -> Result<ExperimentReport, LabError> {
    let values = lambdas
        .par_iter()
        .map(|l| witness_pair(s, cutoff, m, p, alpha, *l, delta).map(|w| w.ratio))
        .collect::<Result<Vec<_>, _>>()?;
    ExperimentReport::new(&format!("witness for {s} at p = {p}"), lambdas.to_vec(), values, -alpha, tolerance)
}

/// |∬ e^{iλS} χ| over the λ grid.
pub fn run_scalar_experiment(
    s: &BiSeries,
    cutoff: &CutoffSpec,
    n: usize,
    lambdas: &[f64],
    predicted_slope: f64,
    tolerance: f64,
) -> Result<ExperimentReport, LabError> {
    let mut values = Vec::new();
    for &l in lambdas {
        let req = required_grid(s, cutoff, l);
        if n < req {
            return Err(LabError::UnderResolved { n, required: req });
        }
        values.push(scalar_integral(s, cutoff, l, n)?.norm());
    }
    ExperimentReport::new(&format!("scalar integral of {s}"), lambdas.to_vec(), values, predicted_slope, tolerance)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_phase;

    #[test]
    fn simpson_is_exact_on_cubics() {
        for n in [64, 65] {
            let (xs, w) = simpson_grid(0.0, 2.0, n);
            let q: f64 = xs.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
            assert!((q - 4.0).abs() < 1e-12, "n = {n}: {q}");
        }
    }

    #[test]
    fn norm_matches_dense_svd() {
        let s = parse_phase("x^2*y + x*y^3").unwrap();
        for (lambda, cutoff) in [(40.0, CutoffSpec::bump((0.0, 0.0), 1.0)), (200.0, CutoffSpec::unit_square())] {
            let op = DiscretizedOperator::new(&s, lambda, cutoff, 129).unwrap();
            let dense = op.weighted_matrix().singular_values().max();
            let est = op.l2_norm_estimate(200).unwrap();
            assert!(((est - dense) / dense).abs() < NORM_TOLERANCE, "{est} vs {dense}");
        }
    }

    #[test]
    fn adjoint_pairing() {
        let s = parse_phase("x*y - x^2*y^3").unwrap();
        let cutoff = CutoffSpec::bump((0.1, -0.2), 0.8);
        let op = DiscretizedOperator::new(&s, 30.0, cutoff, 97).unwrap();
        let adj = DiscretizedOperator::adjoint(&s, 30.0, cutoff, 97).unwrap();
        let f: Vec<Complex64> = op.ys.iter().map(|y| Complex64::new(y.cos(), y * y)).collect();
        let g: Vec<Complex64> = op.xs.iter().map(|x| Complex64::new(1.0 - x, x.sin())).collect();
        let lhs = op.inner_x(&op.apply(&f), &g);
        let mid = op.inner_y(&f, &op.apply_adjoint(&g));
        let rhs = adj.inner_x(&f, &adj.apply(&g));
        assert!((lhs - mid).norm() < 1e-12 * lhs.norm().max(1.0));
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn under_resolution_is_flagged() {
        let s = parse_phase("x*y").unwrap();
        let op = DiscretizedOperator::new(&s, 4096.0, CutoffSpec::unit_square(), 64).unwrap();
        assert!(matches!(op.require_resolved(), Err(LabError::UnderResolved { required: 512, .. })));
        assert_eq!(DiscretizedOperator::new(&s, 1.0, CutoffSpec::unit_square(), 63).unwrap_err(), LabError::GridTooSmall(63));
    }

    #[test]
    fn fit_recovers_power_law() {
        let l = dyadic_lambdas(2, 8);
        let v: Vec<f64> = l.iter().map(|x| 3.0 * x.powf(-0.25)).collect();
        let (slope, res) = fit_decay(&l, &v).unwrap();
        assert!((slope + 0.25).abs() < 1e-12 && res < 1e-12);
        assert!(matches!(fit_decay(&l, &vec![0.0; 7]), Err(LabError::NonPositive(_))));
    }

    #[test]
    fn quadratic_van_der_corput() {
        let r = vdc_scalar(&[0.0, 0.0, 1.0], 2, (-1.0, 1.0), &dyadic_lambdas(4, 12)).unwrap();
        assert!((r.slope + 0.5).abs() < 0.03, "{}", r.slope);
        // |∫_R e^{iλt²}| = √(π/λ)
        let i = oscillatory_1d(&[0.0, 0.0, 1.0], (-1.0, 1.0), 1e4).norm();
        assert!((i - (std::f64::consts::PI / 1e4).sqrt()).abs() < 2.0 / 1e4);
        assert!(matches!(vdc_scalar(&[0.0, 0.0, 0.0, 1.0], 2, (-1.0, 1.0), &[1.0]), Err(LabError::Hypothesis(_))));
    }

    #[test]
    fn witness_ratio_tracks_alpha() {
        let s = parse_phase("x*y").unwrap();
        let cutoff = CutoffSpec::unit_square();
        let w = witness_pair(&s, &cutoff, 1.0, 2.0, 0.5, 1e4, 1.0 / 32.0).unwrap();
        assert!((w.ratio / (1e4f64.powf(-0.5) / 32.0) - 1.0).abs() < 1e-3);
        assert!(matches!(witness_pair(&s, &cutoff, 1.0, 2.0, 0.5, 1e4, 1.0), Err(LabError::DeltaTooLarge { .. })));
    }

    #[test]
    fn ui1_detects_vanishing_derivative() {
        let s = parse_phase("x^2*y").unwrap();
        assert!(check_ui1(&s, 1, 1, &CutoffSpec::bump((0.0, 0.0), 1.0), 9).unwrap() == false);
        assert!(check_ui1(&s, 2, 1, &CutoffSpec::bump((0.0, 0.0), 1.0), 9).unwrap());
    }
}
