//! Potentials `V` (pinned problem), `W` and confinement matrices `L` (confined problem),
//! the cutoff operator, and sampling checks of the structural hypotheses.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Extension, GridFunction};

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
type XValueFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;
type XGradFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

pub type Params = BTreeMap<String, f64>;

fn param(p: &Params, key: &str, default: f64) -> f64 {
    p.get(key).copied().unwrap_or(default)
}

fn norm2(q: &[f64]) -> f64 {
    q.iter().map(|v| v * v).sum()
}

/// Potential `V` of the pinned problem, with its cutoff level `R`.
#[derive(Clone)]
pub struct PinnedPotential {
    pub name: String,
    pub ncomp: usize,
    pub cutoff: f64,
    /// Optional Hölder exponent of the gradient.
    pub gamma: Option<f64>,
    value: ValueFn,
    grad: GradFn,
}

impl std::fmt::Debug for PinnedPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PinnedPotential").field("name", &self.name).field("cutoff", &self.cutoff).finish()
    }
}

impl PinnedPotential {
    pub fn new(
        name: &str,
        ncomp: usize,
        cutoff: f64,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(Error::InvalidInput("cutoff level R must be positive".into()));
        }
        Ok(Self { name: name.into(), ncomp, cutoff, gamma: None, value: Arc::new(value), grad: Arc::new(grad) })
    }

    pub fn value(&self, q: &[f64]) -> f64 {
        (self.value)(q)
    }

    pub fn grad(&self, q: &[f64], out: &mut [f64]) {
        (self.grad)(q, out)
    }

    /// `V(0) = 0`, `V(q) < 0` for `q != 0`, and `V(q) <= V(T_R q)` outside the cube.
    pub fn check_hypotheses(&self, seed: u64, samples: usize) -> PinnedCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.ncomp;
        let v0 = self.value(&vec![0.0; n]);
        let (mut v1_worst, mut v2_worst) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut q = vec![0.0; n];
        for _ in 0..samples {
            let scale = 10f64.powf(rng.gen_range(-3.0..1.5)) * self.cutoff;
            for v in q.iter_mut() {
                *v = scale * rng.gen_range(-1.0..1.0);
            }
            if norm2(&q) == 0.0 {
                continue;
            }
            let v = self.value(&q);
            v1_worst = v1_worst.max(v);
            if q.iter().any(|x| x.abs() >= self.cutoff) {
                let t: Vec<f64> = q.iter().map(|x| x.clamp(-self.cutoff, self.cutoff)).collect();
                v2_worst = v2_worst.min(self.value(&t) - v);
            }
        }
        PinnedCheck {
            v_at_zero: v0,
            v1_worst,
            v2_worst,
            pass: v0 == 0.0 && v1_worst < 0.0 && v2_worst >= 0.0,
            seed,
            samples,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PinnedCheck {
    pub v_at_zero: f64,
    /// Largest sampled `V(q)` with `q != 0` (must be `< 0`).
    pub v1_worst: f64,
    /// Smallest sampled `V(T_R q) - V(q)` outside the cube (must be `>= 0`).
    pub v2_worst: f64,
    pub pass: bool,
    pub seed: u64,
    pub samples: usize,
}

/// Nonlinearity `W(x, q)` of the confined problem.
#[derive(Clone)]
pub struct ConfinedPotential {
    pub name: String,
    pub ncomp: usize,
    /// Ambrosetti-Rabinowitz exponent.
    pub mu: f64,
    /// Growth exponent `p` and constant `a_0`.
    pub growth: Option<(f64, f64)>,
    value: XValueFn,
    grad: XGradFn,
}

impl std::fmt::Debug for ConfinedPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConfinedPotential").field("name", &self.name).field("mu", &self.mu).finish()
    }
}

impl ConfinedPotential {
    pub fn new(
        name: &str,
        ncomp: usize,
        mu: f64,
        growth: Option<(f64, f64)>,
        value: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), ncomp, mu, growth, value: Arc::new(value), grad: Arc::new(grad) }
    }

    pub fn value(&self, x: f64, q: &[f64]) -> f64 {
        (self.value)(x, q)
    }

    pub fn grad(&self, x: f64, q: &[f64], out: &mut [f64]) {
        (self.grad)(x, q, out)
    }
}

/// Per-component diagonal data beyond `|x| >= d_from`.
#[derive(Clone)]
pub struct DiagonalTail {
    pub d_from: f64,
    d: Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>,
}

impl DiagonalTail {
    pub fn d(&self, j: usize, x: f64) -> f64 {
        (self.d)(j, x)
    }
}

/// Symmetric, coercive `L(x)`.
#[derive(Clone)]
pub struct ConfinementMatrix {
    pub name: String,
    pub ncomp: usize,
    pub alpha_l: f64,
    pub nonnegative: bool,
    pub tail: Option<DiagonalTail>,
    eval: Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>,
}

impl std::fmt::Debug for ConfinementMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConfinementMatrix").field("name", &self.name).field("alpha_l", &self.alpha_l).finish()
    }
}

impl ConfinementMatrix {
    /// `L(x) = l(x) Id`; `l` is also the diagonal tail.
    pub fn scalar(name: &str, ncomp: usize, alpha_l: f64, l: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let l = Arc::new(l);
        let l2 = l.clone();
        Self {
            name: name.into(),
            ncomp,
            alpha_l,
            nonnegative: true,
            tail: Some(DiagonalTail { d_from: 0.0, d: Arc::new(move |_, x| l2(x)) }),
            eval: Arc::new(move |x, out: &mut [f64]| {
                out.iter_mut().for_each(|v| *v = 0.0);
                let v = l(x);
                for j in 0..ncomp {
                    out[j * ncomp + j] = v;
                }
            }),
        }
    }

    pub fn general(
        name: &str,
        ncomp: usize,
        alpha_l: f64,
        nonnegative: bool,
        tail: Option<(f64, Arc<dyn Fn(usize, f64) -> f64 + Send + Sync>)>,
        eval: impl Fn(f64, &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            ncomp,
            alpha_l,
            nonnegative,
            tail: tail.map(|(d_from, d)| DiagonalTail { d_from, d }),
            eval: Arc::new(eval),
        }
    }

    /// Row-major `n x n` entries at `x`.
    pub fn at(&self, x: f64) -> Vec<f64> {
        let mut m = vec![0.0; self.ncomp * self.ncomp];
        (self.eval)(x, &mut m);
        m
    }

    /// `L(x) q . q`.
    pub fn quad(&self, x: f64, q: &[f64]) -> f64 {
        let m = self.at(x);
        let n = self.ncomp;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += m[i * n + j] * q[i] * q[j];
            }
        }
        acc
    }

    /// `inf_{|xi|=1} L(x) xi . xi` over a direction net.
    pub fn min_eig(&self, x: f64) -> f64 {
        let m = self.at(x);
        let n = self.ncomp;
        sphere_net(n)
            .iter()
            .map(|xi| {
                let mut acc = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        acc += m[i * n + j] * xi[i] * xi[j];
                    }
                }
                acc
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Symmetry, coercivity, diagonal tail and monotone divergence along `|x|` on samples.
    pub fn check_hypotheses(&self, x_max: f64, samples: usize) -> MatrixCheck {
        let n = self.ncomp;
        let mut sym = 0.0f64;
        let mut coerc = f64::INFINITY;
        let mut offdiag = 0.0f64;
        let mut nonneg_ok = true;
        let d_from = self.tail.as_ref().map_or(f64::INFINITY, |t| t.d_from);
        for k in 0..samples {
            let x = -x_max + 2.0 * x_max * k as f64 / (samples - 1) as f64;
            let m = self.at(x);
            for i in 0..n {
                for j in 0..n {
                    sym = sym.max((m[i * n + j] - m[j * n + i]).abs());
                    if m[i * n + j] < 0.0 {
                        nonneg_ok = false;
                    }
                    if i != j && x.abs() >= d_from {
                        offdiag = offdiag.max(m[i * n + j].abs());
                    }
                }
            }
            coerc = coerc.min(self.min_eig(x) - self.alpha_l);
        }
        let mut monotone = true;
        let start = if d_from.is_finite() { d_from } else { 0.0 };
        let mut prev = (self.min_eig(start).min(self.min_eig(-start)), start);
        for k in 1..=samples {
            let r = start + (x_max.max(start + 1.0) - start) * k as f64 / samples as f64;
            let v = self.min_eig(r).min(self.min_eig(-r));
            if v < prev.0 - 1e-12 * v.abs() {
                monotone = false;
            }
            prev = (v, r);
        }
        let far = self.min_eig(1e6).min(self.min_eig(-1e6));
        let diverges = monotone && far > 1e3 * self.alpha_l.max(1.0);
        MatrixCheck {
            symmetry_defect: sym,
            coercivity_margin: coerc,
            offdiag_beyond_d: offdiag,
            nonnegative_ok: !self.nonnegative || nonneg_ok,
            divergence_ok: diverges,
            pass: sym <= 1e-12 && coerc >= -1e-12 && offdiag == 0.0 && (!self.nonnegative || nonneg_ok) && diverges,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixCheck {
    pub symmetry_defect: f64,
    pub coercivity_margin: f64,
    pub offdiag_beyond_d: f64,
    pub nonnegative_ok: bool,
    pub divergence_ok: bool,
    pub pass: bool,
}

/// Deterministic net of unit vectors in `R^n`.
pub fn sphere_net(n: usize) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    match n {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..720).map(|k| {
            let t = 2.0 * PI * k as f64 / 720.0;
            vec![t.cos(), t.sin()]
        })
        .collect(),
        3 => {
            let mut out = Vec::new();
            for a in 0..=60 {
                let th = PI * a as f64 / 60.0;
                for b in 0..120 {
                    let ph = 2.0 * PI * b as f64 / 120.0;
                    out.push(vec![th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                }
            }
            out
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
            (0..20_000).map(|_| random_direction(&mut rng, n)).collect()
        }
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm2(&v).sqrt();
        if r > 1e-3 && r <= 1.0 {
            return v.iter().map(|x| x / r).collect();
        }
    }
}

/// Componentwise clamp to `[-R, R]`, including constant tails.
pub fn cutoff_tr(q: &GridFunction, r: f64) -> GridFunction {
    assert!(r > 0.0, "cutoff level must be positive");
    let mut out = q.map(|v| v.clamp(-r, r));
    if let Extension::Constant { left, right } = q.extension() {
        let c = |v: &Vec<f64>| v.iter().map(|x| x.clamp(-r, r)).collect();
        out = out.with_extension(Extension::Constant { left: c(left), right: c(right) }).expect("clamped tails");
    }
    out
}

/// Result of sampling the Ambrosetti-Rabinowitz inequality and the near-origin bound.
#[derive(Debug, Clone, Serialize)]
pub struct ArReport {
    pub mu: f64,
    pub pass: bool,
    /// Smallest `grad W . q - mu W`, relative to `|grad W . q|`.
    pub worst_margin: f64,
    pub violations: usize,
    /// Empirical `delta(eps)` with `0 < W < eps |q|^2` for `|q| <= delta`.
    pub delta: Vec<(f64, f64)>,
    pub seed: u64,
    pub samples: usize,
}

fn sample_point(rng: &mut ChaCha8Rng, n: usize, x_max: f64, log_r: (f64, f64)) -> (f64, Vec<f64>) {
    let x = rng.gen_range(-x_max..x_max);
    let r = 10f64.powf(rng.gen_range(log_r.0..log_r.1));
    let d = random_direction(rng, n);
    (x, d.iter().map(|v| r * v).collect())
}

pub fn check_ar(w: &ConfinedPotential, seed: u64, samples: usize) -> Result<ArReport> {
    if !(w.mu > 2.0) {
        return Err(Error::Hypothesis(format!("AR exponent must exceed 2, got {}", w.mu)));
    }
    let n = w.ncomp;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; n];
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..samples {
        let (x, q) = sample_point(&mut rng, n, 20.0, (-3.0, 2.0));
        let wv = w.value(x, &q);
        w.grad(x, &q, &mut g);
        let gq: f64 = g.iter().zip(&q).map(|(a, b)| a * b).sum();
        let margin = (gq - w.mu * wv) / gq.abs().max(f64::MIN_POSITIVE);
        worst = worst.min(margin);
        if !(wv > 0.0) || margin < -1e-12 {
            violations += 1;
        }
    }
    let delta = [1.0, 0.1].iter().map(|&eps| (eps, near_origin_delta(w, eps, seed))).collect();
    Ok(ArReport { mu: w.mu, pass: violations == 0, worst_margin: worst, violations, delta, seed, samples })
}

/// Largest `delta` (on a shell net, refined by bisection) with `0 < W(x,q) < eps |q|^2` for `|q| <= delta`.
pub fn near_origin_delta(w: &ConfinedPotential, eps: f64, seed: u64) -> f64 {
    let n = w.ncomp;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xde17a);
    let xs: Vec<f64> = (0..41).map(|k| -20.0 + k as f64).chain((0..16).map(|_| rng.gen_range(-20.0..20.0))).collect();
    let dirs = sphere_net(n);
    let shell_ok = |r: f64| {
        xs.iter().all(|&x| {
            dirs.iter().step_by((dirs.len() / 64).max(1)).all(|d| {
                let q: Vec<f64> = d.iter().map(|v| r * v).collect();
                let wv = w.value(x, &q);
                wv > 0.0 && wv < eps * r * r
            })
        })
    };
    let radii: Vec<f64> = (0..=220).map(|k| 10f64.powf(-8.0 + k as f64 * 0.05)).collect();
    let mut good = 0.0;
    let mut bad = None;
    for &r in &radii {
        if shell_ok(r) {
            good = r;
        } else {
            bad = Some(r);
            break;
        }
    }
    let Some(mut hi) = bad else { return good };
    let mut lo = good;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shell_ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `inf_{|xi|=1} W(x, xi)` over the direction net.
pub fn omega1(w: &ConfinedPotential, x: f64) -> Result<f64> {
    let v = sphere_net(w.ncomp).iter().map(|xi| w.value(x, xi)).fold(f64::INFINITY, f64::min);
    if !(v > 0.0) {
        return Err(Error::Hypothesis(format!("omega_1({x}) = {v} is not positive")));
    }
    Ok(v)
}

/// Counts samples with `|q| in [1, 5]` violating `W(x,q) >= omega_1(x) |q|^mu`.
pub fn check_wgeq(w: &ConfinedPotential, seed: u64, samples: usize) -> Result<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..samples {
        let x = rng.gen_range(-20.0..20.0);
        let r = rng.gen_range(1.0..5.0);
        let q: Vec<f64> = random_direction(&mut rng, w.ncomp).iter().map(|v| r * v).collect();
        let lhs = w.value(x, &q);
        let rhs = omega1(w, x)? * r.powf(w.mu);
        if lhs < rhs * (1.0 - 1e-12) {
            bad += 1;
        }
    }
    Ok(bad)
}

#[derive(Debug, Clone, Serialize)]
pub struct GrowthBounds {
    pub eps: f64,
    pub sigma: f64,
    pub r0: f64,
    pub a1: f64,
    pub a2: f64,
    /// Violations of `|grad W| <= eps |q| + sigma |q|^{p-1}` on fresh random samples.
    pub split_violations: usize,
    pub samples: usize,
    pub seed: u64,
}

const SIGMA_SAFETY: f64 = 1.05;

/// `r_0`, `a_1 = 1`, `a_2 = a_0 (r_0^{2-p} + 1)` and `sigma(eps)` for the split
/// `|grad_q W| <= eps |q| + sigma(eps) |q|^{p-1}`.
pub fn growth_bounds(w: &ConfinedPotential, eps: f64, seed: u64) -> Result<GrowthBounds> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let (p, a0) = w.growth.ok_or_else(|| Error::InvalidInput(format!("{} has no growth data", w.name)))?;
    let n = w.ncomp;
    let xs: Vec<f64> = (0..81).map(|k| -20.0 + 0.5 * k as f64).collect();
    let dirs = sphere_net(n);
    let dirs: Vec<&Vec<f64>> = dirs.iter().step_by((dirs.len() / 64).max(1)).collect();
    let mut g = vec![0.0; n];
    let mut grad_norm = |x: f64, q: &[f64]| {
        w.grad(x, q, &mut g);
        norm2(&g).sqrt()
    };
    let radii: Vec<f64> = (0..=400).map(|k| 10f64.powf(-6.0 + k as f64 * 0.0225)).collect();
    let mut r0 = 0.0;
    let mut sigma: f64 = 0.0;
    let mut r0_done = false;
    for &r in &radii {
        let mut shell_max: f64 = 0.0;
        for &x in &xs {
            for d in &dirs {
                let q: Vec<f64> = d.iter().map(|v| r * v).collect();
                let gn = grad_norm(x, &q);
                shell_max = shell_max.max(gn);
                sigma = sigma.max((gn - eps * r).max(0.0) / r.powf(p - 1.0));
            }
        }
        if !r0_done {
            if shell_max <= r {
                r0 = r;
            } else {
                r0_done = true;
            }
        }
    }
    if r0 == 0.0 {
        return Err(Error::Hypothesis(format!("{}: |grad W| <= |q| fails on every sampled shell", w.name)));
    }
    let sigma = sigma * SIGMA_SAFETY;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = 1000;
    let mut bad = 0;
    for _ in 0..samples {
        let (x, q) = sample_point(&mut rng, n, 20.0, (-5.0, 3.0));
        let r = norm2(&q).sqrt();
        if grad_norm(x, &q) > eps * r + sigma * r.powf(p - 1.0) {
            bad += 1;
        }
    }
    Ok(GrowthBounds {
        eps,
        sigma,
        r0,
        a1: 1.0,
        a2: a0 * (r0.powf(2.0 - p) + 1.0),
        split_violations: bad,
        samples,
        seed,
    })
}

/// Sup over samples of `|grad W . q / 2 - W| / |q|^2` for `|q| <= m`.
pub fn kappa_estimate(w: &ConfinedPotential, m: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; w.ncomp];
    let mut k: f64 = 0.0;
    for _ in 0..4000 {
        let (x, q) = sample_point(&mut rng, w.ncomp, 20.0, (-4.0, m.log10()));
        w.grad(x, &q, &mut g);
        let gq: f64 = g.iter().zip(&q).map(|(a, b)| a * b).sum();
        k = k.max((0.5 * gq - w.value(x, &q)).abs() / norm2(&q));
    }
    k
}

/// Whether `|d_j W| <= a_0 |q_j| (1 + |q|^{p-2})` holds on samples.
pub fn check_growth(w: &ConfinedPotential, seed: u64, samples: usize) -> Result<usize> {
    let (p, a0) = w.growth.ok_or_else(|| Error::InvalidInput(format!("{} has no growth data", w.name)))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = vec![0.0; w.ncomp];
    let mut bad = 0;
    for _ in 0..samples {
        let (x, q) = sample_point(&mut rng, w.ncomp, 20.0, (-3.0, 2.0));
        w.grad(x, &q, &mut g);
        let r = norm2(&q).sqrt();
        for j in 0..w.ncomp {
            if g[j].abs() > a0 * q[j].abs() * (1.0 + r.powf(p - 2.0)) * (1.0 + 1e-12) + 1e-300 {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

/// Named entries of the built-in catalog.
#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub kind: &'static str,
    pub formula: &'static str,
    pub params: &'static str,
}

pub fn builtin_library() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry { name: "quadratic-well", kind: "V", formula: "V(q) = -|q|^2", params: "R (default 1)" },
        CatalogEntry {
            name: "perturbed-cosine",
            kind: "V",
            formula: "V(q) = sum_j (cos q_j - 1) + eps (exp(-delta |q|^2) - 1)",
            params: "eps, delta (default 0.1), R (default 2 pi)",
        },
        CatalogEntry { name: "power-W", kind: "W", formula: "W(x,q) = |q|^p / p", params: "p (default 3)" },
        CatalogEntry {
            name: "modulated-power",
            kind: "W",
            formula: "W(x,q) = (2 + sin x) |q|^mu",
            params: "mu (default 3)",
        },
        CatalogEntry {
            name: "pn-perturbed",
            kind: "W",
            formula: "W(x,q) = -(1 - cos|q|)^(1+eps) + eps |q|^p",
            params: "eps (default 0.5), p (default 2.9), mu (default 2.7)",
        },
        CatalogEntry {
            name: "quadratic-confinement",
            kind: "L",
            formula: "L(x) = (1 + eps |x|^2) Id",
            params: "eps (default 1)",
        },
    ]
}

/// Builds and validates a catalog `V`.
pub fn pinned_potential(name: &str, ncomp: usize, p: &Params) -> Result<PinnedPotential> {
    let pot = match name {
        "quadratic-well" => PinnedPotential::new(
            name,
            ncomp,
            param(p, "R", 1.0),
            |q| -norm2(q),
            |q, g| {
                for (gj, qj) in g.iter_mut().zip(q) {
                    *gj = -2.0 * qj;
                }
            },
        )?,
        "perturbed-cosine" => {
            let eps = param(p, "eps", 0.1);
            let delta = param(p, "delta", 0.1);
            if !(eps > 0.0 && delta > 0.0) {
                return Err(Error::InvalidInput("perturbed-cosine needs eps, delta > 0".into()));
            }
            PinnedPotential::new(
                name,
                ncomp,
                param(p, "R", 2.0 * std::f64::consts::PI),
                move |q| q.iter().map(|v| v.cos() - 1.0).sum::<f64>() + eps * (-delta * norm2(q)).exp_m1(),
                move |q, g| {
                    let e = (-delta * norm2(q)).exp();
                    for (gj, qj) in g.iter_mut().zip(q) {
                        *gj = -qj.sin() - 2.0 * eps * delta * qj * e;
                    }
                },
            )?
        }
        other => return Err(Error::InvalidInput(format!("unknown pinned potential `{other}`"))),
    };
    let check = pot.check_hypotheses(7, 4000);
    if !check.pass {
        return Err(Error::Hypothesis(format!("{name} fails the structural checks: {check:?}")));
    }
    Ok(pot)
}

/// Builds and validates a catalog `W`.
pub fn confined_potential(name: &str, ncomp: usize, p: &Params) -> Result<ConfinedPotential> {
    let w = match name {
        "power-W" => {
            let pe = param(p, "p", 3.0);
            ConfinedPotential::new(
                name,
                ncomp,
                pe,
                Some((pe, 1.0)),
                move |_, q| norm2(q).powf(0.5 * pe) / pe,
                move |_, q, g| {
                    let f = norm2(q).powf(0.5 * pe - 1.0);
                    for (gj, qj) in g.iter_mut().zip(q) {
                        *gj = f * qj;
                    }
                },
            )
        }
        "modulated-power" => {
            let mu = param(p, "mu", 3.0);
            ConfinedPotential::new(
                name,
                ncomp,
                mu,
                Some((mu, 3.0 * mu)),
                move |x, q| (2.0 + x.sin()) * norm2(q).powf(0.5 * mu),
                move |x, q, g| {
                    let f = mu * (2.0 + x.sin()) * norm2(q).powf(0.5 * mu - 1.0);
                    for (gj, qj) in g.iter_mut().zip(q) {
                        *gj = f * qj;
                    }
                },
            )
        }
        "pn-perturbed" => {
            let eps = param(p, "eps", 0.5);
            let pe = param(p, "p", 2.9);
            let mu = param(p, "mu", 2.7);
            if !(pe > 2.0 && pe < 2.0 + 2.0 * eps) {
                return Err(Error::InvalidInput(format!("pn-perturbed needs p in (2, 2+2 eps), got p = {pe}")));
            }
            let a0 = (1.0 + eps) * 2f64.powf(eps) + eps * pe;
            ConfinedPotential::new(
                name,
                ncomp,
                mu,
                Some((pe, a0)),
                move |_, q| {
                    let r = norm2(q).sqrt();
                    -(1.0 - r.cos()).powf(1.0 + eps) + eps * r.powf(pe)
                },
                move |_, q, g| {
                    let r = norm2(q).sqrt();
                    if r == 0.0 {
                        g.iter_mut().for_each(|v| *v = 0.0);
                        return;
                    }
                    let dr = -(1.0 + eps) * (1.0 - r.cos()).powf(eps) * r.sin() + eps * pe * r.powf(pe - 1.0);
                    for (gj, qj) in g.iter_mut().zip(q) {
                        *gj = dr * qj / r;
                    }
                },
            )
        }
        other => return Err(Error::InvalidInput(format!("unknown confined potential `{other}`"))),
    };
    let ar = check_ar(&w, 11, 4000)?;
    if !ar.pass {
        return Err(Error::Hypothesis(format!("{name} violates the AR condition: {ar:?}")));
    }
    if check_growth(&w, 13, 2000)? > 0 {
        return Err(Error::Hypothesis(format!("{name} violates the growth bound")));
    }
    Ok(w)
}

/// Builds and validates a catalog `L`.
pub fn confinement_matrix(name: &str, ncomp: usize, p: &Params) -> Result<ConfinementMatrix> {
    let m = match name {
        "quadratic-confinement" => {
            let eps = param(p, "eps", 1.0);
            if !(eps > 0.0) {
                return Err(Error::InvalidInput("quadratic-confinement needs eps > 0".into()));
            }
            ConfinementMatrix::scalar(name, ncomp, 1.0, move |x| 1.0 + eps * x * x)
        }
        other => return Err(Error::InvalidInput(format!("unknown confinement matrix `{other}`"))),
    };
    let check = m.check_hypotheses(100.0, 401);
    if !check.pass {
        return Err(Error::Hypothesis(format!("{name} fails the structural checks: {check:?}")));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac_ops::{gagliardo_sq, FracParams};
    use crate::grid::Grid;

    fn none() -> Params {
        Params::new()
    }

    #[test]
    fn cutoff_identity_and_clamp() {
        let g = Grid::new(1.0, 11).unwrap();
        let q = GridFunction::from_fn(g, |x| 0.5 * x);
        assert_eq!(cutoff_tr(&q, 1.0), q);
        let big = GridFunction::from_fn(g, |_| 4.0);
        assert!(cutoff_tr(&big, 2.0).values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn cutoff_lowers_seminorm_on_random_profiles() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::new(3.0, 61).unwrap();
        let p = FracParams::new(0.5).unwrap();
        for _ in 0..20 {
            let vals: Vec<f64> = (0..61).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let q = GridFunction::new(g, 1, vals, Extension::Zero).unwrap();
            assert!(gagliardo_sq(&cutoff_tr(&q, 0.7), &p) <= gagliardo_sq(&q, &p));
        }
    }

    #[test]
    fn catalog_pinned_potentials_pass() {
        let v = pinned_potential("quadratic-well", 1, &none()).unwrap();
        assert_eq!(v.value(&[0.0]), 0.0);
        assert_eq!(v.value(&[2.0]), -4.0);
        let mut p = none();
        p.insert("eps".into(), 0.1);
        p.insert("delta".into(), 0.1);
        p.insert("R".into(), 2.0 * std::f64::consts::PI);
        let v = pinned_potential("perturbed-cosine", 2, &p).unwrap();
        assert!(v.check_hypotheses(99, 5000).pass);
        assert!(pinned_potential("nope", 1, &none()).is_err());
    }

    #[test]
    fn quadratic_well_v2_exact() {
        let v = pinned_potential("quadratic-well", 1, &none()).unwrap();
        for k in -50..=50 {
            let q = k as f64 * 0.1;
            assert!(v.value(&[q.clamp(-1.0, 1.0)]) >= v.value(&[q]));
        }
    }

    #[test]
    fn ar_homogeneous_and_modulated() {
        let w = confined_potential("power-W", 1, &none()).unwrap();
        let r = check_ar(&w, 1, 2000).unwrap();
        assert!(r.pass);
        assert!(r.worst_margin.abs() < 1e-12);
        let d = r.delta.iter().find(|(e, _)| *e == 1.0).unwrap().1;
        assert!((d - 3.0).abs() < 1e-6, "delta(1) = {d}");
        let m = confined_potential("modulated-power", 1, &none()).unwrap();
        assert!(check_ar(&m, 2, 2000).unwrap().pass);
    }

    #[test]
    fn ar_rejects_quadratic() {
        let w = ConfinedPotential::new("quad", 1, 2.0, None, |_, q| norm2(q), |_, q, g| g[0] = 2.0 * q[0]);
        assert!(matches!(check_ar(&w, 1, 10), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn pn_example_with_too_small_eps_fails_ar() {
        let mut p = none();
        p.insert("eps".into(), 0.25);
        p.insert("p".into(), 2.4);
        p.insert("mu".into(), 2.1);
        assert!(matches!(confined_potential("pn-perturbed", 1, &p), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn omega1_values() {
        let w = confined_potential("power-W", 1, &none()).unwrap();
        assert!((omega1(&w, 0.3).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let m = confined_potential("modulated-power", 1, &none()).unwrap();
        assert!((omega1(&m, 0.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(check_wgeq(&m, 5, 1000).unwrap(), 0);
        let w2 = confined_potential("power-W", 2, &none()).unwrap();
        assert!((omega1(&w2, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn growth_power() {
        let w = confined_potential("power-W", 1, &none()).unwrap();
        let b = growth_bounds(&w, 0.1, 4).unwrap();
        assert!((b.r0 - 1.0).abs() < 0.06, "r0 = {}", b.r0);
        assert_eq!(b.a1, 1.0);
        assert!((b.a2 - (b.r0.powf(-1.0) + 1.0)).abs() < 1e-12);
        assert_eq!(b.split_violations, 0);
        assert!((b.sigma - SIGMA_SAFETY).abs() < 1e-3, "sigma = {}", b.sigma);
    }

    #[test]
    fn growth_zero_potential() {
        let w = ConfinedPotential::new("zero", 1, 3.0, Some((3.0, 1.0)), |_, _| 0.0, |_, _, g| g[0] = 0.0);
        let b = growth_bounds(&w, 0.5, 1).unwrap();
        assert_eq!(b.sigma, 0.0);
        assert_eq!(b.split_violations, 0);
    }

    #[test]
    fn growth_pn_split() {
        let w = confined_potential("pn-perturbed", 1, &none()).unwrap();
        let b = growth_bounds(&w, 0.1, 8).unwrap();
        assert_eq!(b.split_violations, 0);
    }

    #[test]
    fn quadratic_confinement_checks() {
        let l = confinement_matrix("quadratic-confinement", 2, &none()).unwrap();
        assert_eq!(l.at(2.0), vec![5.0, 0.0, 0.0, 5.0]);
        assert!((l.min_eig(10.0) - 101.0).abs() < 1e-9);
    }

    #[test]
    fn kappa_for_power() {
        let w = confined_potential("power-W", 1, &none()).unwrap();
        // |q|^3/6 / q^2 = |q|/6 <= M/6
        let k = kappa_estimate(&w, 2.0, 1);
        assert!(k <= 2.0 / 6.0 + 1e-12 && k > 0.2);
    }
}
