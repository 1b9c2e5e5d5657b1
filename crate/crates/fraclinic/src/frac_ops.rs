//! Discrete fractional Laplacian, Gagliardo seminorm and their Fourier counterparts.
//!
//! The operator is discretized by integrating the kernel `|z|^{-1-2s}` exactly against the
//! piecewise-linear interpolant of the symmetric second difference `2u(x) - u(x+z) - u(x-z)`,
//! except on the band `|z| < r h` where a quadratic model through the first second difference
//! is used. This gives
//!
//! `(L u)_i = sum_{k>=1} w_k (2 u_i - u_{i+k} - u_{i-k})`
//!
//! with all `w_k >= 0`, so the discrete seminorm `h sum_{i<j} w_{j-i} (u_i - u_j)^2` (plus the
//! exterior terms) is the quadratic form of `L`, and clamping can only decrease it.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::grid::{Extension, Grid, GridFunction};
use crate::quad;

/// `c_s = 2^{2s-1} s Gamma(s+1/2) / (sqrt(pi) Gamma(1-s))`.
pub fn cs_constant(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidInput(format!("s must lie in (0,1), got {s}")));
    }
    Ok((2f64).powf(2.0 * s - 1.0) * s * gamma(s + 0.5) / (std::f64::consts::PI.sqrt() * gamma(1.0 - s)))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct FracParams {
    pub s: f64,
    pub c_s: f64,
    /// Radius of the near-diagonal band, in cells.
    pub band: usize,
}

impl FracParams {
    pub fn new(s: f64) -> Result<Self> {
        Self::with_band(s, 1)
    }

    pub fn with_band(s: f64, band: usize) -> Result<Self> {
        let c_s = cs_constant(s)?;
        if !(1..=8).contains(&band) {
            return Err(Error::InvalidInput(format!("band radius must be 1..=8 cells, got {band}")));
        }
        Ok(Self { s, c_s, band })
    }
}

const SERIES_FROM: usize = 50;
const DIRECT_MAX: usize = 384;
const PAIR_MAX: usize = 20_001;

/// Second antiderivative of `t^{-1-2s}` (up to an affine function).
fn big_g(s: f64, t: f64) -> f64 {
    let e = 1.0 - 2.0 * s;
    if e == 0.0 {
        -t.ln() / (2.0 * s)
    } else {
        -(e * t.ln()).exp_m1() / (e * 2.0 * s)
    }
}

fn big_g1(s: f64, t: f64) -> f64 {
    -t.powf(-2.0 * s) / (2.0 * s)
}

/// n-th derivative of `t^{-a}`.
fn dpow(a: f64, n: usize, t: f64) -> f64 {
    let mut c = 1.0;
    for m in 0..n {
        c *= -(a + m as f64);
    }
    c * t.powf(-a - n as f64)
}

/// Weight for offset `k`, without the factor `2 c_s h^{-2s}`.
fn unit_weight(s: f64, band: usize, k: usize) -> f64 {
    let r = band;
    let mut w = 0.0;
    if k == 1 {
        w += (r as f64).powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s);
    }
    if k < r {
        return w;
    }
    let kf = k as f64;
    if k == r {
        return w + big_g(s, kf + 1.0) - big_g(s, kf) - big_g1(s, kf);
    }
    if k >= SERIES_FROM {
        let a = 1.0 + 2.0 * s;
        return w + dpow(a, 0, kf) + dpow(a, 2, kf) / 12.0 + dpow(a, 4, kf) / 360.0 + dpow(a, 6, kf) / 20160.0;
    }
    w + big_g(s, kf + 1.0) - 2.0 * big_g(s, kf) + big_g(s, kf - 1.0)
}

/// `sum_{k>=m} unit_weight(k)` for `m > band`.
fn unit_tail(s: f64, m: usize) -> f64 {
    let mf = m as f64;
    if m >= SERIES_FROM {
        // midpoint expansion of int_{m-1}^{m} t^{-2s}/(2s) dt
        let c = mf - 0.5;
        let a = 2.0 * s;
        let f = |n: usize| dpow(a, n, c) / a;
        return f(0) + f(2) / 24.0 + f(4) / 1920.0 + f(6) / 322_560.0;
    }
    big_g(s, mf - 1.0) - big_g(s, mf)
}

/// Weights `w_k` and tail sums `T(m) = sum_{k>=m} w_k` for one spacing.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub params: FracParams,
    pub h: f64,
    /// `w[k]` for `k = 0..len` (`w[0] = 0`).
    pub w: Vec<f64>,
    /// `tail[m]` for `m = 0..=len` (`tail[0]` unused).
    pub tail: Vec<f64>,
}

impl Kernel {
    pub fn new(params: FracParams, h: f64, len: usize) -> Self {
        let s = params.s;
        let scale = 2.0 * params.c_s * h.powf(-2.0 * s);
        let r = params.band;
        let mut w = vec![0.0; len.max(r + 2)];
        for (k, wk) in w.iter_mut().enumerate().skip(1) {
            *wk = scale * unit_weight(s, r, k);
        }
        let mut tail = vec![0.0; w.len() + 1];
        for m in (1..tail.len()).rev() {
            tail[m] = if m > r {
                scale * unit_tail(s, m)
            } else {
                tail[m + 1] + w[m]
            };
        }
        Self { params, h, w, tail }
    }

    /// Sum of all weights, `T(1)`.
    pub fn total(&self) -> f64 {
        self.tail[1]
    }
}

/// Smallest `2^a 3^b >= n`.
fn fast_len(n: usize) -> usize {
    let mut best = n.next_power_of_two();
    let mut p3 = 1;
    while p3 < best {
        let mut m = p3;
        while m < n {
            m *= 2;
        }
        best = best.min(m);
        p3 *= 3;
    }
    best
}

/// `L` on a fixed grid size, with an FFT Toeplitz product for large grids.
#[derive(Clone)]
pub struct FracOperator {
    pub kernel: Kernel,
    len: usize,
    fft: Option<FftPlan>,
}

#[derive(Clone)]
struct FftPlan {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    spectrum: Vec<Complex64>,
}

impl std::fmt::Debug for FracOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FracOperator").field("len", &self.len).field("h", &self.kernel.h).finish()
    }
}

impl FracOperator {
    pub fn new(params: FracParams, grid: &Grid) -> Self {
        Self::with_len(params, grid.h(), grid.len())
    }

    pub fn with_len(params: FracParams, h: f64, len: usize) -> Self {
        let kernel = Kernel::new(params, h, len);
        let fft = (len > DIRECT_MAX).then(|| {
            let m = fast_len(2 * len - 1);
            let mut planner = FftPlanner::new();
            let fwd = planner.plan_fft_forward(m);
            let inv = planner.plan_fft_inverse(m);
            let mut spectrum = vec![Complex64::new(0.0, 0.0); m];
            for k in 1..len {
                spectrum[k].re = kernel.w[k];
                spectrum[m - k].re = kernel.w[k];
            }
            fwd.process(&mut spectrum);
            let scale = 1.0 / m as f64;
            spectrum.iter_mut().for_each(|c| *c *= scale);
            FftPlan { fwd, inv, spectrum }
        });
        Self { kernel, len, fft }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn params(&self) -> &FracParams {
        &self.kernel.params
    }

    /// Diagonal entry of `L` (identical on every node).
    pub fn diagonal(&self) -> f64 {
        2.0 * self.kernel.total()
    }

    /// Gershgorin bound on the largest eigenvalue.
    pub fn spectral_bound(&self) -> f64 {
        4.0 * self.kernel.total()
    }

    /// `sum_{j != i} w_{|i-j|} u_j` over in-box nodes.
    fn offdiag(&self, u: &[f64], out: &mut [f64]) {
        let n = self.len;
        match &self.fft {
            None => {
                let w = &self.kernel.w;
                for i in 0..n {
                    let mut acc = 0.0;
                    for j in 0..n {
                        if j != i {
                            acc += w[i.abs_diff(j)] * u[j];
                        }
                    }
                    out[i] = acc;
                }
            }
            Some(plan) => {
                let m = plan.spectrum.len();
                let mut buf = vec![Complex64::new(0.0, 0.0); m];
                for (b, &v) in buf.iter_mut().zip(u) {
                    b.re = v;
                }
                plan.fwd.process(&mut buf);
                for (b, c) in buf.iter_mut().zip(&plan.spectrum) {
                    *b *= c;
                }
                plan.inv.process(&mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re;
                }
            }
        }
    }

    /// `(L u)_i` with constant exterior values `left`, `right`.
    pub fn apply_scalar(&self, u: &[f64], left: f64, right: f64, out: &mut [f64]) {
        let n = self.len;
        assert_eq!(u.len(), n);
        self.offdiag(u, out);
        let d = self.diagonal();
        let t = &self.kernel.tail;
        for i in 0..n {
            out[i] = d * u[i] - out[i];
            if left != 0.0 {
                out[i] -= left * t[i + 1];
            }
            if right != 0.0 {
                out[i] -= right * t[n - i];
            }
        }
    }

    /// `(L u)_i` evaluated as a sum of nonnegative-weighted differences (zero exterior).
    /// At a maximum of `u` every term is `>= 0`, so the result is exactly `>= 0` in floating point.
    pub fn apply_at(&self, u: &[f64], i: usize) -> f64 {
        let n = self.len;
        let w = &self.kernel.w;
        let t = &self.kernel.tail;
        let mut acc = 0.0;
        for (j, &uj) in u.iter().enumerate() {
            if j != i {
                acc += w[i.abs_diff(j)] * (u[i] - uj);
            }
        }
        acc + u[i] * (t[i + 1] + t[n - i])
    }

    /// `sum_i u_i (L u)_i` for zero exterior.
    pub fn quad_form(&self, u: &[f64]) -> f64 {
        let mut lu = vec![0.0; u.len()];
        self.apply_scalar(u, 0.0, 0.0, &mut lu);
        u.iter().zip(&lu).map(|(a, b)| a * b).sum()
    }
}

/// Exterior constant values per component, or `None` for tails that need padding.
fn constant_tails(q: &GridFunction) -> Option<(Vec<f64>, Vec<f64>)> {
    match q.extension() {
        Extension::Zero => Some((vec![0.0; q.ncomp()], vec![0.0; q.ncomp()])),
        Extension::Constant { left, right } => Some((left.clone(), right.clone())),
        Extension::PowerTail { .. } => None,
    }
}

const PAD_FACTOR: usize = 16;

/// Pads a power-tail profile with tail samples out to `PAD_FACTOR * X`; zero beyond.
fn pad_power_tail(q: &GridFunction, exponent: f64) -> (Grid, Vec<f64>, usize) {
    let g = q.grid();
    let n = g.len();
    let cells = (n - 1) / 2;
    let big = PAD_FACTOR * cells;
    let m = 2 * big + 1;
    let off = big - cells;
    let x_edge = g.half_width();
    let h = g.h();
    let mut vals = vec![0.0; m * q.ncomp()];
    for j in 0..q.ncomp() {
        let src = q.component(j);
        let dst = &mut vals[j * m..(j + 1) * m];
        dst[off..off + n].copy_from_slice(src);
        for k in 1..=off {
            let decay = (x_edge / (x_edge + k as f64 * h)).powf(exponent);
            dst[off - k] = src[0] * decay;
            dst[off + n - 1 + k] = src[n - 1] * decay;
        }
    }
    let grid = Grid::new(x_edge + off as f64 * h, m).expect("padded grid");
    (grid, vals, off)
}

/// Node values of `(-Delta)^s q`, honoring the declared extension.
pub fn frac_laplacian(q: &GridFunction, p: &FracParams) -> GridFunction {
    let g = *q.grid();
    let n = g.len();
    let mut out = vec![0.0; n * q.ncomp()];
    match constant_tails(q) {
        Some((left, right)) => {
            let op = FracOperator::new(*p, &g);
            for j in 0..q.ncomp() {
                op.apply_scalar(q.component(j), left[j], right[j], &mut out[j * n..(j + 1) * n]);
            }
        }
        None => {
            let Extension::PowerTail { exponent } = *q.extension() else { unreachable!() };
            let (pg, vals, off) = pad_power_tail(q, exponent);
            let m = pg.len();
            let op = FracOperator::new(*p, &pg);
            let mut buf = vec![0.0; m];
            for j in 0..q.ncomp() {
                op.apply_scalar(&vals[j * m..(j + 1) * m], 0.0, 0.0, &mut buf);
                out[j * n..(j + 1) * n].copy_from_slice(&buf[off..off + n]);
            }
        }
    }
    GridFunction::new(g, q.ncomp(), out, Extension::Zero).expect("finite output")
}

/// Pair-sum seminorm of one zero-exterior component: `h (sum_{i<j} w (v_i-v_j)^2 + sum_i v_i^2 ext_i)`.
fn pair_seminorm(kernel: &Kernel, v: &[f64]) -> f64 {
    let n = v.len();
    let w = &kernel.w;
    let t = &kernel.tail;
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let vi = v[i];
            let mut acc = vi * vi * (t[i + 1] + t[n - i]);
            for (k, &vj) in v[i + 1..].iter().enumerate() {
                let d = vi - vj;
                acc += w[k + 1] * d * d;
            }
            acc
        })
        .collect();
    kernel.h * rows.iter().sum::<f64>()
}

/// `c_s iint |q(x)-q(y)|^2 / |x-y|^{1+2s}`, summed over components.
///
/// Returns `+inf` for constant tails with different left and right values.
pub fn gagliardo_sq(q: &GridFunction, p: &FracParams) -> f64 {
    let g = q.grid();
    let n = g.len();
    match constant_tails(q) {
        Some((left, right)) => {
            if left.iter().zip(&right).any(|(a, b)| a != b) {
                return f64::INFINITY;
            }
            let kernel = Kernel::new(*p, g.h(), n);
            let op = (n > PAIR_MAX).then(|| FracOperator::new(*p, g));
            (0..q.ncomp())
                .map(|j| {
                    let c = left[j];
                    let v: Vec<f64> = q.component(j).iter().map(|x| x - c).collect();
                    match &op {
                        None => pair_seminorm(&kernel, &v),
                        Some(op) => (g.h() * op.quad_form(&v)).max(0.0),
                    }
                })
                .sum()
        }
        None => {
            let Extension::PowerTail { exponent } = *q.extension() else { unreachable!() };
            let (pg, vals, _) = pad_power_tail(q, exponent);
            let m = pg.len();
            let op = FracOperator::new(*p, &pg);
            (0..q.ncomp()).map(|j| (pg.h() * op.quad_form(&vals[j * m..(j + 1) * m])).max(0.0)).sum()
        }
    }
}

/// `c_s iint (q(x)-q(y)).(phi(x)-phi(y)) / |x-y|^{1+2s}` for zero-exterior profiles.
pub fn gagliardo_bilinear(q: &GridFunction, phi: &GridFunction, p: &FracParams) -> f64 {
    assert!(q.same_shape(phi));
    let g = q.grid();
    let n = g.len();
    let kernel = Kernel::new(*p, g.h(), n);
    let (w, t) = (&kernel.w, &kernel.tail);
    let mut total = 0.0;
    for j in 0..q.ncomp() {
        let (u, v) = (q.component(j), phi.component(j));
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut acc = u[i] * v[i] * (t[i + 1] + t[n - i]);
                for k in 1..n - i {
                    acc += w[k] * (u[i] - u[i + k]) * (v[i] - v[i + k]);
                }
                acc
            })
            .collect();
        total += g.h() * rows.iter().sum::<f64>();
    }
    total
}

/// `int |2 pi xi|^{2s} |q^(xi)|^2 d xi` by a zero-padded DFT. Requires zero extension.
pub fn gagliardo_sq_spectral(q: &GridFunction, p: &FracParams) -> Result<f64> {
    if *q.extension() != Extension::Zero {
        return Err(Error::InvalidInput("spectral seminorm needs a zero-extended profile".into()));
    }
    let g = q.grid();
    let n = g.len();
    let h = g.h();
    let m = 4 * n;
    let fft = FftPlanner::new().plan_fft_forward(m);
    let mut total = 0.0;
    for j in 0..q.ncomp() {
        let mut buf = vec![Complex64::new(0.0, 0.0); m];
        for (b, &v) in buf.iter_mut().zip(q.component(j)) {
            b.re = v;
        }
        fft.process(&mut buf);
        let mut acc = 0.0;
        for (k, c) in buf.iter().enumerate() {
            let kk = if k <= m / 2 { k as f64 } else { k as f64 - m as f64 };
            let xi = kk / (m as f64 * h);
            if k == 0 {
                continue;
            }
            acc += (2.0 * std::f64::consts::PI * xi.abs()).powf(2.0 * p.s) * c.norm_sqr();
        }
        total += acc * h * h / (m as f64 * h);
    }
    Ok(total)
}

/// `2 c_s B(s+1, s)`: the prefactor in `(-Delta)^s x_-^s = -C_s x^{-s}` for `x > 0`.
pub fn cs_barrier_exact(s: f64) -> Result<f64> {
    let c = cs_constant(s)?;
    Ok(2.0 * c * (ln_gamma(s + 1.0) + ln_gamma(s) - ln_gamma(2.0 * s + 1.0)).exp())
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CsEstimate {
    pub c_s: f64,
    pub exponent: f64,
    pub fit_residual: f64,
    pub h: f64,
}

/// Measures `C_s` by applying the discrete operator to `x_-^s` and fitting `-L u = C x^{-e}` on
/// `x in [1, 4]`. The far-left exterior (`y < -X`) is integrated exactly.
pub fn estimate_cs(p: &FracParams, grid: &Grid) -> Result<CsEstimate> {
    let s = p.s;
    let x_edge = grid.half_width();
    if x_edge < 8.0 {
        return Err(Error::InvalidInput("estimate_cs needs X >= 8".into()));
    }
    let u: Vec<f64> = (0..grid.len()).map(|i| (-grid.x(i)).max(0.0).powf(s)).collect();
    let op = FracOperator::new(*p, grid);
    let mut lu = vec![0.0; u.len()];
    op.apply_scalar(&u, 0.0, 0.0, &mut lu);
    // t = X / v, v = w^{1/s}: smooth integrand on w in (0, 1]
    let (gx, gw) = quad::gauss_legendre(64);
    let exterior = |x: f64| {
        let mut acc = 0.0;
        for (z, wt) in gx.iter().zip(&gw) {
            let w = 0.5 * (z + 1.0);
            let v = w.powf(1.0 / s);
            let t = x_edge / v;
            let jac = x_edge / (v * v) * v / (s * w);
            acc += 0.5 * wt * t.powf(s) * (x + t).powf(-1.0 - 2.0 * s) * jac;
        }
        2.0 * p.c_s * acc
    };
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in 0..grid.len() {
        let x = grid.x(i);
        if (1.0..=4.0 + 1e-12).contains(&x) {
            let val = -(lu[i] - exterior(x));
            if !(val > 0.0) {
                return Err(Error::Numerical(format!("operator of x_-^s not negative at x = {x}")));
            }
            xs.push(x);
            ys.push(val);
        }
    }
    let (slope, intercept, resid) = quad::loglog_slope(&xs, &ys);
    if resid > 0.05 {
        return Err(Error::Numerical(format!("C_s fit residual {resid} too large")));
    }
    Ok(CsEstimate { c_s: intercept.exp(), exponent: -slope, fit_residual: resid, h: grid.h() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(g: Grid) -> GridFunction {
        GridFunction::from_fn(g, |x| (-x * x).exp())
    }

    #[test]
    fn cs_at_half_is_one_over_two_pi() {
        let c = cs_constant(0.5).unwrap();
        assert!((c - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-15);
        assert!(cs_constant(0.0).is_err());
        assert!(cs_constant(1.0).is_err());
    }

    #[test]
    fn weights_positive_and_tails_consistent() {
        for &s in &[0.05, 0.25, 0.5, 0.75, 0.95] {
            for band in [1, 3] {
                let p = FracParams::with_band(s, band).unwrap();
                let k = Kernel::new(p, 0.1, 400);
                assert!(k.w[1..].iter().all(|&w| w > 0.0) || band > 1);
                assert!(k.w.iter().all(|&w| w >= 0.0));
                for m in 1..300 {
                    let rel = (k.tail[m] - (k.w[m] + k.tail[m + 1])).abs() / k.tail[m];
                    assert!(rel < 1e-10, "s={s} band={band} m={m} rel={rel}");
                }
            }
        }
    }

    #[test]
    fn series_matches_closed_form_at_switch() {
        for &s in &[0.1, 0.5, 0.9] {
            let k = SERIES_FROM as f64;
            let direct = big_g(s, k + 1.0) - 2.0 * big_g(s, k) + big_g(s, k - 1.0);
            let series = unit_weight(s, 1, SERIES_FROM);
            assert!(((direct - series) / series).abs() < 1e-9, "s={s}");
            let tdirect = big_g(s, k - 1.0) - big_g(s, k);
            assert!(((tdirect - unit_tail(s, SERIES_FROM)) / tdirect).abs() < 1e-11);
        }
    }

    #[test]
    fn constant_has_zero_operator_and_seminorm() {
        let g = Grid::new(3.0, 61).unwrap();
        let p = FracParams::new(0.4).unwrap();
        let q = GridFunction::new(g, 1, vec![2.5; 61], Extension::Constant { left: vec![2.5], right: vec![2.5] })
            .unwrap();
        assert!(frac_laplacian(&q, &p).sup_norm() < 1e-10);
        assert_eq!(gagliardo_sq(&q, &p), 0.0);
        let zero = GridFunction::zeros(g, 2);
        assert_eq!(gagliardo_sq(&zero, &p), 0.0);
        assert_eq!(gagliardo_sq_spectral(&zero, &p).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_constant_tails_have_infinite_seminorm() {
        let g = Grid::new(3.0, 7).unwrap();
        let p = FracParams::new(0.4).unwrap();
        let q = GridFunction::new(g, 1, vec![0.0; 7], Extension::Constant { left: vec![-1.0], right: vec![1.0] })
            .unwrap();
        assert!(gagliardo_sq(&q, &p).is_infinite());
    }

    #[test]
    fn fft_and_direct_agree() {
        let p = FracParams::new(0.3).unwrap();
        let n = DIRECT_MAX + 17;
        let g = Grid::new(5.0, n).unwrap();
        let u: Vec<f64> = (0..n).map(|i| (0.1 * i as f64).sin() + 0.2).collect();
        let fast = FracOperator::new(p, &g);
        let mut a = vec![0.0; n];
        fast.apply_scalar(&u, 0.3, -0.1, &mut a);
        for i in [0, 5, n / 2, n - 1] {
            let mut direct = fast.apply_at(&u, i);
            direct -= 0.3 * fast.kernel.tail[i + 1] + -0.1 * fast.kernel.tail[n - i];
            assert!((a[i] - direct).abs() < 1e-10 * fast.diagonal(), "i={i}");
        }
    }

    #[test]
    fn quadratic_form_matches_pair_sum() {
        let p = FracParams::new(0.6).unwrap();
        let g = Grid::new(4.0, 101).unwrap();
        let q = gauss(g);
        let op = FracOperator::new(p, &g);
        let a = g.h() * op.quad_form(q.values());
        let b = gagliardo_sq(&q, &p);
        assert!(((a - b) / b).abs() < 1e-12);
        let bl = gagliardo_bilinear(&q, &q, &p);
        assert!(((bl - b) / b).abs() < 1e-12);
    }

    #[test]
    fn gaussian_half_matches_spectral() {
        let p = FracParams::new(0.5).unwrap();
        let g = Grid::new(8.0, 1601).unwrap();
        let q = gauss(g);
        let a = gagliardo_sq(&q, &p);
        let b = gagliardo_sq_spectral(&q, &p).unwrap();
        assert!(((a - b) / b).abs() < 1e-2, "{a} vs {b}");
    }

    #[test]
    fn spectral_refuses_nonzero_extension() {
        let g = Grid::new(1.0, 5).unwrap();
        let q = GridFunction::zeros(g, 1).with_extension(Extension::PowerTail { exponent: 2.0 }).unwrap();
        assert!(gagliardo_sq_spectral(&q, &FracParams::new(0.5).unwrap()).is_err());
    }

    #[test]
    fn windowed_sine_quadrature_vs_spectral() {
        let p = FracParams::new(0.5).unwrap();
        let g = Grid::new(4.0, 1601).unwrap();
        let q = GridFunction::from_fn(g, |x| if x.abs() <= 1.0 { (std::f64::consts::PI * x).sin() } else { 0.0 });
        let a = gagliardo_sq(&q, &p);
        let b = gagliardo_sq_spectral(&q, &p).unwrap();
        assert!(((a - b) / b).abs() < 2e-2, "{a} vs {b}");
    }

    #[test]
    fn cosine_symbol() {
        // a wide smooth window so that the interior behaves like a pure mode
        let xi0 = 0.5;
        for &s in &[0.3, 0.5, 0.7] {
            let p = FracParams::new(s).unwrap();
            let g = Grid::new(60.0, 12001).unwrap();
            let win = |x: f64| (-(x / 25.0).powi(8)).exp();
            let q = GridFunction::from_fn(g, |x| win(x) * (2.0 * std::f64::consts::PI * xi0 * x).cos());
            let lq = frac_laplacian(&q, &p);
            let sym = (2.0 * std::f64::consts::PI * xi0).powf(2.0 * s);
            let mut err: f64 = 0.0;
            for i in 0..g.len() {
                let x = g.x(i);
                if x.abs() <= 5.0 {
                    err = err.max((lq.values()[i] - sym * q.values()[i]).abs());
                }
            }
            assert!(err / sym < 0.02, "s={s} rel err {}", err / sym);
        }
    }

    #[test]
    fn limits_in_s() {
        let g = Grid::new(20.0, 4001).unwrap();
        let q = gauss(g);
        let near_one = frac_laplacian(&q, &FracParams::new(0.99).unwrap());
        let near_zero = frac_laplacian(&q, &FracParams::new(0.01).unwrap());
        let (mut e1, mut e0): (f64, f64) = (0.0, 0.0);
        for i in 0..g.len() {
            let x = g.x(i);
            if x.abs() <= 2.0 {
                let lap = -(4.0 * x * x - 2.0) * (-x * x).exp();
                e1 = e1.max((near_one.values()[i] - lap).abs());
                e0 = e0.max((near_zero.values()[i] - q.values()[i]).abs());
            }
        }
        assert!(e1 / 2.0 < 0.05, "s=0.99 error {e1}");
        assert!(e0 < 0.05, "s=0.01 error {e0}");
    }

    #[test]
    fn cs_estimate_matches_closed_form() {
        for &s in &[0.25, 0.4, 0.5] {
            let p = FracParams::new(s).unwrap();
            let est = estimate_cs(&p, &Grid::new(16.0, 3201).unwrap()).unwrap();
            let exact = cs_barrier_exact(s).unwrap();
            assert!((est.exponent - s).abs() < 0.05, "s={s} exponent {}", est.exponent);
            assert!(((est.c_s - exact) / exact).abs() < 0.03, "s={s} {} vs {exact}", est.c_s);
        }
    }

    #[test]
    fn power_tail_seminorm_exceeds_truncated() {
        let g = Grid::new(5.0, 201).unwrap();
        let p = FracParams::new(0.4).unwrap();
        let q = GridFunction::from_fn(g, |x| 1.0 / (1.0 + x * x));
        let zero = gagliardo_sq(&q, &p);
        let tail = gagliardo_sq(&q.clone().with_extension(Extension::PowerTail { exponent: 2.0 }).unwrap(), &p);
        assert!(tail.is_finite() && tail > 0.0);
        assert!((tail - zero).abs() / zero < 0.2);
    }
}
