//! Pinned minimization, symmetrization, decay diagnostics and the small experiments around it:
//! the `q(./eps)` scaling family, the whole-line gradient-flow probe, the regularity bootstrap
//! and empirical Hölder seminorms.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::energy_pinned;
use crate::error::{Error, Result};
use crate::frac_ops::{gagliardo_sq, FracOperator, FracParams};
use crate::grid::{max_min_combine, reflect, Extension, Grid, GridFunction, PinRegion};
use crate::potentials::PinnedPotential;
use crate::quad::{gauss_legendre, linear_fit, loglog_slope};

#[derive(Debug, Clone)]
pub struct PinnedProblem {
    pub frac: FracParams,
    pub potential: PinnedPotential,
    pub grid: Grid,
    pub pin: PinRegion,
    /// Datum on the pinned nodes, component-major (`ncomp * pin.indices.len()`).
    pub datum: Vec<f64>,
    /// Hölder exponent of the datum.
    pub alpha: f64,
    /// `beta_bar` used when `alpha == s`.
    pub beta_bar: Option<f64>,
}

impl PinnedProblem {
    pub fn new(
        frac: FracParams,
        potential: PinnedPotential,
        grid: Grid,
        pin: PinRegion,
        datum: impl Fn(f64) -> Vec<f64>,
        alpha: f64,
    ) -> Result<Self> {
        if frac.s <= 0.5 && pin.a == pin.b {
            return Err(Error::Hypothesis(format!(
                "a = b requires s > 1/2 (s = {}); the minimum is not attained otherwise",
                frac.s
            )));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidInput(format!("datum Hölder exponent must lie in (0,1), got {alpha}")));
        }
        let nc = potential.ncomp;
        let m = pin.indices.len();
        let mut d = vec![0.0; nc * m];
        for (k, &i) in pin.indices.iter().enumerate() {
            let v = datum(grid.x(i));
            if v.len() != nc {
                return Err(Error::InvalidInput(format!("datum has {} components, potential has {nc}", v.len())));
            }
            for j in 0..nc {
                if !v[j].is_finite() {
                    return Err(Error::InvalidInput(format!("datum is not finite at x = {}", grid.x(i))));
                }
                d[j * m + k] = v[j];
            }
        }
        Ok(Self { frac, potential, grid, pin, datum: d, alpha, beta_bar: None })
    }

    pub fn ncomp(&self) -> usize {
        self.potential.ncomp
    }

    /// Regularity target: `min{alpha, s}` unless they coincide.
    pub fn beta(&self) -> f64 {
        if (self.alpha - self.frac.s).abs() > 1e-15 {
            self.alpha.min(self.frac.s)
        } else {
            self.beta_bar.unwrap_or(0.5 * self.frac.s)
        }
    }

    fn datum_is_even(&self) -> bool {
        let m = self.pin.indices.len();
        let n = self.grid.len();
        (0..self.ncomp()).all(|j| {
            self.pin.indices.iter().enumerate().all(|(k, &i)| match self.pin.indices.binary_search(&(n - 1 - i)) {
                Ok(k2) => self.datum[j * m + k] == self.datum[j * m + k2],
                Err(_) => false,
            })
        })
    }

    /// Datum extended by a linear taper reaching zero one unit away from the pin region.
    pub fn initial_guess(&self) -> GridFunction {
        let n = self.grid.len();
        let nc = self.ncomp();
        let m = self.pin.indices.len();
        let (first, last) = (self.pin.indices[0], self.pin.indices[m - 1]);
        let (xa, xb) = (self.grid.x(first), self.grid.x(last));
        let mut v = vec![0.0; nc * n];
        for j in 0..nc {
            for i in 0..n {
                let x = self.grid.x(i);
                v[j * n + i] = if i < first {
                    self.datum[j * m] * (1.0 - (xa - x)).max(0.0)
                } else if i > last {
                    self.datum[j * m + m - 1] * (1.0 - (x - xb)).max(0.0)
                } else {
                    0.0
                };
            }
            for (k, &i) in self.pin.indices.iter().enumerate() {
                v[j * n + i] = self.datum[j * m + k];
            }
        }
        GridFunction::new(self.grid, nc, v, Extension::Zero).expect("finite datum")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PinnedOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub k_cut: usize,
    pub memory: usize,
    /// Energy below this signals an unbounded-below potential.
    pub energy_floor: f64,
    pub seed: u64,
}

impl Default for PinnedOptions {
    fn default() -> Self {
        Self { tol: 1e-6, max_iter: 20000, k_cut: 10, memory: 12, energy_floor: -1e12, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayMargins {
    pub window: f64,
    pub left_sup: f64,
    pub right_sup: f64,
    pub left_deriv_sup: f64,
    pub right_deriv_sup: f64,
    /// `k` in `|q| ~ |x|^{-k}` fitted on `X/8 <= |x| <= X/2`; absent if the tail is zero.
    pub tail_exponent: Option<f64>,
}

impl DecayMargins {
    pub fn sup(&self) -> f64 {
        self.left_sup.max(self.right_sup)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderEstimate {
    pub exponent: f64,
    pub seminorm: f64,
    pub sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub energy: f64,
    pub initial_energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cutoffs: usize,
    pub symmetrized: bool,
    pub evenness_defect: f64,
    pub sup_norm: f64,
    pub decay: DecayMargins,
    pub holder: Vec<HolderEstimate>,
    pub seed: u64,
}

/// Discrete pinned energy on the full nodal vector.
struct PinnedSystem<'a> {
    op: FracOperator,
    v: &'a PinnedPotential,
    n: usize,
    nc: usize,
    h: f64,
}

impl<'a> PinnedSystem<'a> {
    fn point(&self, u: &[f64], i: usize) -> Vec<f64> {
        (0..self.nc).map(|j| u[j * self.n + i]).collect()
    }

    fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = self.n;
        for j in 0..self.nc {
            self.op.apply_scalar(&u[j * n..(j + 1) * n], 0.0, 0.0, &mut out[j * n..(j + 1) * n]);
        }
    }

    /// Energy from `u` and `lu = L u`; writes the residual `L u - grad V(u)`.
    fn finish(&self, u: &[f64], lu: &[f64], res: &mut [f64]) -> f64 {
        let n = self.n;
        let quad: f64 = u.iter().zip(lu).map(|(a, b)| a * b).sum();
        let mut pot = 0.0;
        let mut g = vec![0.0; self.nc];
        for i in 0..n {
            let p = self.point(u, i);
            pot += self.v.value(&p);
            self.v.grad(&p, &mut g);
            for j in 0..self.nc {
                res[j * n + i] = lu[j * n + i] - g[j];
            }
        }
        self.h * (0.5 * quad - pot)
    }

    /// Energy and residual `L u - grad V(u)`; `lu` receives `L u`.
    fn eval(&self, u: &[f64], lu: &mut [f64], res: &mut [f64]) -> f64 {
        self.apply(u, lu);
        self.finish(u, lu, res)
    }

    /// `sum_i V(u_i + t d_i) - V(u_i)`, node by node to avoid cancellation.
    fn potential_change(&self, u: &[f64], d: &[f64], t: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let p = self.point(u, i);
            let q: Vec<f64> = (0..self.nc).map(|j| u[j * self.n + i] + t * d[j * self.n + i]).collect();
            acc += self.v.value(&q) - self.v.value(&p);
        }
        acc
    }
}

fn sup_free(res: &[f64], free: &[bool]) -> f64 {
    let n = free.len();
    res.iter().enumerate().filter(|(k, _)| free[k % n]).fold(0.0, |m, (_, r)| m.max(r.abs()))
}

/// Limited-memory BFGS on free nodes with Armijo backtracking; the cutoff `T_R` is applied every
/// `k_cut` iterations. For a symmetric problem with even datum the result is replaced by its
/// lower-energy even representative.
pub fn solve_pinned(prob: &PinnedProblem, opts: &PinnedOptions) -> Result<(GridFunction, SolveReport)> {
    let grid = prob.grid;
    let n = grid.len();
    let nc = prob.ncomp();
    let sys = PinnedSystem { op: FracOperator::new(prob.frac, &grid), v: &prob.potential, n, nc, h: grid.h() };
    let free_nodes = prob.pin.free_mask(n);
    let free: Vec<bool> = (0..nc * n).map(|k| free_nodes[k % n]).collect();
    let r_cut = prob.potential.cutoff;

    let mut u = prob.initial_guess().into_values();
    let mut lu = vec![0.0; nc * n];
    let mut res = vec![0.0; nc * n];
    let mut f = sys.eval(&u, &mut lu, &mut res);
    let initial_energy = f;
    // gradient in free coordinates is h * res
    let grad_of = |res: &[f64]| -> Vec<f64> {
        res.iter().zip(&free).map(|(r, &fr)| if fr { sys.h * r } else { 0.0 }).collect()
    };
    let mut g = grad_of(&res);
    let dinv = 1.0 / (sys.h * sys.op.diagonal().max(1e-300));
    let mut hist: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let (mut iterations, mut cutoffs) = (0usize, 0usize);
    let mut converged = sup_free(&res, &free_nodes) <= opts.tol;
    let mut ld = vec![0.0; nc * n];
    let mut res_t = vec![0.0; nc * n];

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        // two-loop recursion with scaled diagonal initial inverse Hessian
        let mut d: Vec<f64> = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, y, rho) in hist.iter().rev() {
            let a = rho * dot(s, &d);
            for k in 0..d.len() {
                d[k] -= a * y[k];
            }
            alphas.push(a);
        }
        let gamma = match hist.last() {
            Some((s, y, _)) => dot(s, y) / (dinv * dot(y, y)),
            None => 1.0,
        };
        for v in d.iter_mut() {
            *v *= gamma * dinv;
        }
        for ((s, y, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &d);
            for k in 0..d.len() {
                d[k] += (a - b) * s[k];
            }
        }
        for v in d.iter_mut() {
            *v = -*v;
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            hist.clear();
            d = g.iter().map(|v| -v * dinv).collect();
            slope = dot(&g, &d);
        }

        // energy change along d, computed as a difference so it stays accurate near convergence
        sys.apply(&d, &mut ld);
        let (a1, a2) = (dot(&lu, &d), dot(&d, &ld));
        let mut step = 1.0;
        let df = loop {
            let df = sys.h * (step * a1 + 0.5 * step * step * a2 - sys.potential_change(&u, &d, step));
            if df <= 1e-4 * step * slope {
                break Some(df);
            }
            step *= 0.5;
            if step < 1e-20 {
                break None;
            }
        };
        let Some(df) = df else {
            // no descent left at working precision
            break;
        };
        let s: Vec<f64> = d.iter().map(|v| step * v).collect();
        for k in 0..u.len() {
            u[k] += s[k];
            lu[k] += step * ld[k];
        }
        if iterations % 25 == 0 {
            f = sys.eval(&u, &mut lu, &mut res);
        } else {
            sys.finish(&u, &lu, &mut res);
            f += df;
        }
        if f < opts.energy_floor {
            return Err(Error::Numerical(format!(
                "energy {f} fell below the floor {}; V may violate V(q) < 0 growth assumptions",
                opts.energy_floor
            )));
        }
        let g_new = grad_of(&res);
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            hist.push((s, y, 1.0 / sy));
            if hist.len() > opts.memory {
                hist.remove(0);
            }
        }
        g = g_new;

        if opts.k_cut > 0 && iterations % opts.k_cut == 0 && u.iter().any(|v| v.abs() > r_cut) {
            let mut clamped = u.clone();
            for (k, v) in clamped.iter_mut().enumerate() {
                if free[k] {
                    *v = v.clamp(-r_cut, r_cut);
                }
            }
            f = sys.eval(&u, &mut lu, &mut res);
            let mut lc = vec![0.0; nc * n];
            let fc = sys.eval(&clamped, &mut lc, &mut res_t);
            if fc > f + 1e-12 * f.abs().max(1.0) {
                return Err(Error::Numerical(format!("cutoff raised the energy from {f} to {fc}")));
            }
            cutoffs += 1;
            u = clamped;
            lu = lc;
            res.copy_from_slice(&res_t);
            f = fc;
            g = grad_of(&res);
            hist.clear();
        }
        converged = sup_free(&res, &free_nodes) <= opts.tol;
    }

    let mut q = GridFunction::new(grid, nc, u, Extension::Zero)?;
    let mut symmetrized = false;
    if prob.pin.is_symmetric() && prob.datum_is_even() {
        let qs = even_symmetrize(&q, &prob.potential, &prob.frac)?;
        if energy_pinned(&qs, &prob.potential, &prob.frac).total <= energy_pinned(&q, &prob.potential, &prob.frac).total + 1e-12 * f.abs().max(1.0) {
            q = qs;
            symmetrized = true;
        }
    }
    let energy = sys.eval(q.values(), &mut lu, &mut res);
    let residual = sup_free(&res, &free_nodes);
    converged = residual <= opts.tol;
    let evenness_defect = evenness_defect(&q);
    let window = (grid.half_width() / 10.0).max(grid.h());
    let decay = check_decay(&q, window)?;
    let beta = prob.beta();
    let mut holder = vec![holder_seminorm(&q, beta)?];
    if prob.frac.s > 0.5 {
        holder.push(holder_seminorm(&q, prob.frac.s - 0.5)?);
    }
    let report = SolveReport {
        energy,
        initial_energy,
        residual,
        iterations,
        converged,
        cutoffs,
        symmetrized,
        evenness_defect,
        sup_norm: q.sup_norm(),
        decay,
        holder,
        seed: opts.seed,
    };
    Ok((q, report))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `sup |q(x) - q(-x)|`.
pub fn evenness_defect(q: &GridFunction) -> f64 {
    let r = reflect(q);
    q.values().iter().zip(r.values()).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
}

/// `max{q, q(-.)}` or `min{q, q(-.)}`, whichever has the lower pinned energy.
pub fn even_symmetrize(q: &GridFunction, v: &PinnedPotential, p: &FracParams) -> Result<GridFunction> {
    let (hi, lo) = max_min_combine(q, &reflect(q))?;
    let (eh, el) = (energy_pinned(&hi, v, p).total, energy_pinned(&lo, v, p).total);
    Ok(if eh <= el { hi } else { lo })
}

/// Value and derivative sup over the outer windows `[X - window, X]` and `[-X, -X + window]`.
pub fn check_decay(q: &GridFunction, window: f64) -> Result<DecayMargins> {
    let g = q.grid();
    let xh = g.half_width();
    if !(window > 0.0 && window < xh) {
        return Err(Error::InvalidInput(format!("decay window {window} must lie in (0, X)")));
    }
    let n = g.len();
    let h = g.h();
    let (mut ls, mut rs, mut ld, mut rd) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for j in 0..q.ncomp() {
        let c = q.component(j);
        for i in 0..n {
            let x = g.x(i);
            // one-sided at the box edges so the truncation jump does not count
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let der = (c[hi] - c[lo]) / ((hi - lo) as f64 * h);
            if x >= xh - window - 1e-12 {
                rs = rs.max(c[i].abs());
                rd = rd.max(der.abs());
            }
            if x <= -xh + window + 1e-12 {
                ls = ls.max(c[i].abs());
                ld = ld.max(der.abs());
            }
        }
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for i in g.center() + 1..n {
        let x = g.x(i);
        if x < xh / 8.0 || x > xh / 2.0 {
            continue;
        }
        let m = (0..q.ncomp()).map(|j| q.at(i, j).abs().max(q.at(n - 1 - i, j).abs())).fold(0.0, f64::max);
        if m > 0.0 {
            xs.push(x);
            ys.push(m);
        }
    }
    let tail_exponent = if xs.len() >= 3 { Some(-loglog_slope(&xs, &ys).0) } else { None };
    Ok(DecayMargins { window, left_sup: ls, right_sup: rs, left_deriv_sup: ld, right_deriv_sup: rd, tail_exponent })
}

/// Empirical `C^beta` seminorm `sup |q(x) - q(y)| / |x - y|^beta`. Exact over all pairs for
/// `N <= 4001`; otherwise all pairs within 64 nodes plus a strided global sample.
pub fn holder_seminorm(q: &GridFunction, beta: f64) -> Result<HolderEstimate> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("Hölder exponent must lie in (0,1], got {beta}")));
    }
    let g = q.grid();
    let n = g.len();
    let h = g.h();
    let stride = if n <= 4001 { 1 } else { n.div_ceil(2000) };
    let local = if stride == 1 { n } else { 64 };
    let mut best = 0.0f64;
    for j in 0..q.ncomp() {
        let c = q.component(j);
        let m = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut m = 0.0f64;
                let mut k = 1;
                while i + k < n {
                    let d = (c[i + k] - c[i]).abs() / ((k as f64) * h).powf(beta);
                    m = m.max(d);
                    k = if k < local { k + 1 } else { k + stride };
                }
                m
            })
            .reduce(|| 0.0, f64::max);
        best = best.max(m);
    }
    Ok(HolderEstimate { exponent: beta, seminorm: best, sup: q.sup_norm() })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub s: f64,
    pub m_val: f64,
    pub eps: Vec<f64>,
    pub energies: Vec<f64>,
    pub kinetic: Vec<f64>,
    pub potential: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub strictly_decreasing: bool,
}

/// `q_sharp = min{q_* / theta, M}` (or the mirrored branch for `M < 0`),
/// `q_*(x) = log(1 - log|x|)` on `(-1, 1)`.
pub fn q_sharp(x: f64, theta: f64, m_val: f64) -> f64 {
    let ax = x.abs();
    let qs = if ax >= 1.0 {
        0.0
    } else if ax == 0.0 {
        f64::INFINITY
    } else {
        (1.0 - ax.ln()).ln()
    };
    if m_val >= 0.0 {
        (qs / theta).min(m_val)
    } else {
        (-qs / theta).max(m_val)
    }
}

/// Cell averages of `f` on the grid, splitting the cell at 0 and at `+-edge` so integrable
/// singularities and kinks sit on sub-cell boundaries.
fn cell_average(g: &Grid, f: impl Fn(f64) -> f64 + Sync, breaks: &[f64]) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(8);
    let h = g.h();
    (0..g.len())
        .into_par_iter()
        .map(|i| {
            let (lo, hi) = (g.x(i) - 0.5 * h, g.x(i) + 0.5 * h);
            let mut cuts = vec![lo];
            cuts.extend(breaks.iter().copied().filter(|b| *b > lo && *b < hi));
            cuts.push(hi);
            let mut acc = 0.0;
            for w in cuts.windows(2) {
                let (m, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                acc += r * gx.iter().zip(&gw).map(|(t, wt)| wt * f(m + r * t)).sum::<f64>();
            }
            acc / h
        })
        .collect()
}

/// Energies of `q_eps = q_sharp(./eps)` on a fixed grid and the fitted slope of `log I` against
/// `log eps`. `theta = 1` for `s < 1/2` and `theta = 1/eps` for `s = 1/2`.
pub fn scaling_experiment(
    frac: &FracParams,
    v: &PinnedPotential,
    m_val: f64,
    eps_list: &[f64],
    grid: &Grid,
) -> Result<ScalingReport> {
    let s = frac.s;
    if !(s > 0.0 && s <= 0.5) {
        return Err(Error::InvalidInput(format!("scaling experiment needs s in (0, 1/2], got {s}")));
    }
    if eps_list.len() < 2 || eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput("eps list must be positive and strictly decreasing".into()));
    }
    if eps_list[0] >= grid.half_width() {
        return Err(Error::InvalidInput("box must contain the support [-eps, eps]".into()));
    }
    if v.ncomp != 1 {
        return Err(Error::InvalidInput("scaling experiment is scalar".into()));
    }
    let (mut energies, mut kinetic, mut potential) = (Vec::new(), Vec::new(), Vec::new());
    for &eps in eps_list {
        let theta = if s < 0.5 { 1.0 } else { 1.0 / eps };
        let vals = cell_average(grid, |x| q_sharp(x / eps, theta, m_val), &[-eps, 0.0, eps]);
        let q = GridFunction::new(*grid, 1, vals, Extension::Zero)
            .map_err(|_| Error::Numerical("q_sharp sampling produced non-finite values".into()))?;
        let k = 0.5 * gagliardo_sq(&q, frac);
        if !k.is_finite() {
            return Err(Error::Numerical(format!("seminorm of q_eps is not finite at eps = {eps}")));
        }
        let e = energy_pinned(&q, v, frac);
        kinetic.push(k);
        potential.push(e.potential_integral);
        energies.push(e.total);
    }
    let (slope, intercept, _) = loglog_slope(eps_list, &energies);
    let strictly_decreasing = energies.windows(2).all(|w| w[1] < w[0]);
    Ok(ScalingReport {
        s,
        m_val,
        eps: eps_list.to_vec(),
        energies,
        kinetic,
        potential,
        slope,
        intercept,
        strictly_decreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NonexistenceReport {
    pub s: f64,
    pub steps: usize,
    pub dt: f64,
    pub initial_sup: f64,
    pub final_sup: f64,
    pub converged: bool,
    /// Number of iterates with a positive maximum at which the obstruction was checked.
    pub max_checks: usize,
    /// Smallest `(-Delta)^s q` observed at the discrete maximum.
    pub min_op_at_max: f64,
    /// Smallest `(-Delta)^s q(xbar) - V'(q(xbar))` observed; at least `2 max q`.
    pub min_residual_at_max: f64,
    pub obstruction_holds: bool,
}

/// Explicit gradient flow `q_t = -((-Delta)^s q - V'(q))` on the whole line for `V = -|q|^2`.
/// Every iterate with a positive maximum is checked against `(-Delta)^s q(xbar) >= 0 > V'(q(xbar))`.
pub fn nonexistence_probe(
    frac: &FracParams,
    v: &PinnedPotential,
    q0: &GridFunction,
    sup_tol: f64,
    max_steps: usize,
) -> Result<NonexistenceReport> {
    if v.ncomp != 1 || q0.ncomp() != 1 {
        return Err(Error::InvalidInput("the probe is scalar".into()));
    }
    if (v.value(&[1.0]) + 1.0).abs() > 1e-14 || (v.value(&[0.5]) + 0.25).abs() > 1e-14 {
        return Err(Error::InvalidInput("the probe is stated for V(q) = -q^2".into()));
    }
    let g = *q0.grid();
    let n = g.len();
    let op = FracOperator::new(*frac, &g);
    let dt = 1.0 / (op.spectral_bound() + 2.0);
    let mut u = q0.values().to_vec();
    let mut lu = vec![0.0; n];
    let initial_sup = q0.sup_norm();
    let (mut checks, mut min_op, mut min_res) = (0usize, f64::INFINITY, f64::INFINITY);
    let mut holds = true;
    let mut steps = 0;
    let mut gv = [0.0];
    let sup = |u: &[f64]| u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while sup(&u) > sup_tol && steps < max_steps {
        let (imax, &umax) = u.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty");
        if umax > 0.0 {
            let lv = op.apply_at(&u, imax);
            v.grad(&[umax], &mut gv);
            checks += 1;
            min_op = min_op.min(lv);
            min_res = min_res.min(lv - gv[0]);
            if lv < -1e-8 || gv[0] >= 0.0 || lv - gv[0] < 2.0 * umax - 1e-8 {
                holds = false;
            }
        }
        op.apply_scalar(&u, 0.0, 0.0, &mut lu);
        for i in 0..n {
            v.grad(&[u[i]], &mut gv);
            u[i] -= dt * (lu[i] - gv[0]);
        }
        steps += 1;
    }
    let final_sup = sup(&u);
    Ok(NonexistenceReport {
        s: frac.s,
        steps,
        dt,
        initial_sup,
        final_sup,
        converged: final_sup <= sup_tol,
        max_checks: checks,
        min_op_at_max: if checks > 0 { min_op } else { 0.0 },
        min_residual_at_max: if checks > 0 { min_res } else { 0.0 },
        obstruction_holds: holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BootstrapReport {
    pub sequence: Vec<f64>,
    /// First `k` with `beta_k > 1`.
    pub crossed_at: Option<usize>,
    pub limit: f64,
    pub min_increment: f64,
}

/// `beta_k = 2s + gamma beta_{k-1}` until it exceeds 1 (at most 50 steps); limit `2s/(1-gamma)`.
pub fn bootstrap_exponents(s: f64, gamma: f64, beta_start: f64) -> Result<BootstrapReport> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidInput(format!("s must lie in (0,1), got {s}")));
    }
    if !(gamma > (1.0 - 2.0 * s).max(0.0) && gamma < 1.0) {
        return Err(Error::Hypothesis(format!(
            "gamma = {gamma} outside ({}, 1)",
            (1.0 - 2.0 * s).max(0.0)
        )));
    }
    if !(beta_start > 0.0 && beta_start <= s) {
        return Err(Error::InvalidInput(format!("beta_start must lie in (0, s], got {beta_start}")));
    }
    let mut seq = vec![beta_start];
    let mut crossed = None;
    for k in 1..=50 {
        let b = 2.0 * s + gamma * seq[k - 1];
        seq.push(b);
        if b > 1.0 {
            crossed = Some(k);
            break;
        }
    }
    let min_increment = seq.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    Ok(BootstrapReport { sequence: seq, crossed_at: crossed, limit: 2.0 * s / (1.0 - gamma), min_increment })
}

/// Least-squares decay rate of `log sup|q|` on outer windows against `log X`, for a family of runs.
pub fn decay_rate(box_sizes: &[f64], edge_sups: &[f64]) -> f64 {
    -linear_fit(
        &box_sizes.iter().map(|x| x.ln()).collect::<Vec<_>>(),
        &edge_sups.iter().map(|v| v.ln()).collect::<Vec<_>>(),
    )
    .0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::pin_indices;
    use crate::potentials::{pinned_potential, Params};

    fn well() -> PinnedPotential {
        pinned_potential("quadratic-well", 1, &Params::new()).unwrap()
    }

    #[test]
    fn zero_datum_gives_zero() {
        let g = Grid::new(10.0, 201).unwrap();
        let p = FracParams::new(0.75).unwrap();
        let pin = pin_indices(&g, -1.0, 1.0, 0.75).unwrap();
        let prob = PinnedProblem::new(p, well(), g, pin, |_| vec![0.0], 0.5).unwrap();
        let (q, rep) = solve_pinned(&prob, &PinnedOptions::default()).unwrap();
        assert_eq!(q.sup_norm(), 0.0);
        assert_eq!(rep.energy, 0.0);
        assert!(rep.converged);
    }

    #[test]
    fn small_pinned_solve_is_even_and_decays() {
        let g = Grid::new(10.0, 401).unwrap();
        let p = FracParams::new(0.75).unwrap();
        let pin = pin_indices(&g, -1.0, 1.0, 0.75).unwrap();
        let prob = PinnedProblem::new(p, well(), g, pin, |_| vec![1.0], 0.5).unwrap();
        let (q, rep) = solve_pinned(&prob, &PinnedOptions::default()).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!(rep.energy < rep.initial_energy);
        assert!(rep.evenness_defect <= 1e-8);
        assert!(q.sup_norm() <= 1.0 + 1e-12);
        assert!(rep.decay.sup() < 0.02);
    }

    #[test]
    fn single_point_pin_needs_large_s() {
        let g = Grid::new(10.0, 201).unwrap();
        assert!(pin_indices(&g, 0.0, 0.0, 0.4).is_err());
        let p = FracParams::new(0.4).unwrap();
        let pin = PinRegion { a: 0.0, b: 0.0, indices: vec![100] };
        assert!(matches!(PinnedProblem::new(p, well(), g, pin, |_| vec![1.0], 0.5), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn single_point_pin_is_symmetric() {
        let g = Grid::new(10.0, 401).unwrap();
        let p = FracParams::new(0.75).unwrap();
        let pin = pin_indices(&g, 0.0, 0.0, 0.75).unwrap();
        let prob = PinnedProblem::new(p, well(), g, pin, |_| vec![1.0], 0.5).unwrap();
        let (q, rep) = solve_pinned(&prob, &PinnedOptions::default()).unwrap();
        assert!(rep.converged);
        assert!(evenness_defect(&q) <= 1e-8);
        assert_eq!(q.at(200, 0), 1.0);
    }

    #[test]
    fn symmetrize_even_input_unchanged() {
        let g = Grid::new(5.0, 101).unwrap();
        let p = FracParams::new(0.6).unwrap();
        let q = GridFunction::from_fn(g, |x| (-x * x).exp());
        assert_eq!(even_symmetrize(&q, &well(), &p).unwrap(), q);
    }

    #[test]
    fn symmetrize_skewed_bump() {
        let g = Grid::new(5.0, 101).unwrap();
        let p = FracParams::new(0.6).unwrap();
        let q = GridFunction::from_fn(g, |x| (-(x - 0.7) * (x - 0.7)).exp() * 0.8);
        let e = energy_pinned(&q, &well(), &p).total;
        let out = even_symmetrize(&q, &well(), &p).unwrap();
        assert_eq!(evenness_defect(&out), 0.0);
        assert!(energy_pinned(&out, &well(), &p).total <= e + 1e-12);
    }

    #[test]
    fn decay_of_zero_and_smooth_tail() {
        let g = Grid::new(20.0, 801).unwrap();
        let z = GridFunction::zeros(g, 1);
        let m = check_decay(&z, 2.0).unwrap();
        assert_eq!(m.sup(), 0.0);
        assert!(m.tail_exponent.is_none());
        let q = GridFunction::from_fn(g, |x| 1.0 / (1.0 + x * x));
        let m = check_decay(&q, 2.0).unwrap();
        assert!(m.right_deriv_sup <= m.right_sup);
        assert!((m.tail_exponent.unwrap() - 2.0).abs() < 0.1);
        assert!(check_decay(&q, 30.0).is_err());
    }

    #[test]
    fn holder_of_sqrt_abs() {
        let g1 = Grid::new(1.0, 2001).unwrap();
        let q1 = GridFunction::from_fn(g1, |x| x.abs().sqrt());
        assert!((holder_seminorm(&q1, 0.5).unwrap().seminorm - 1.0).abs() < 0.5);
        let g2 = Grid::new(1.0, 8001).unwrap();
        let q2 = GridFunction::from_fn(g2, |x| x.abs().sqrt());
        let a = holder_seminorm(&q1, 0.6).unwrap().seminorm;
        let b = holder_seminorm(&q2, 0.6).unwrap().seminorm;
        // grows like h^{-0.1}
        assert!(b / a > 1.1);
        let c = GridFunction::from_fn(g1, |_| 3.0);
        assert_eq!(holder_seminorm(&c, 0.5).unwrap().seminorm, 0.0);
    }

    #[test]
    fn bootstrap_example() {
        let r = bootstrap_exponents(0.4, 0.5, 0.4).unwrap();
        assert_eq!(r.sequence, vec![0.4, 1.0, 1.3]);
        assert_eq!(r.crossed_at, Some(2));
        assert_eq!(r.limit, 1.6);
        assert!(r.min_increment >= 2.0 * 0.4 - 1.0 + 0.5);
        assert!(bootstrap_exponents(0.4, 0.1, 0.4).is_err());
        assert!(bootstrap_exponents(0.4, 0.999999, 0.4).unwrap().limit > 1e5);
    }

    #[test]
    fn probe_zero_is_fixed_point() {
        let g = Grid::new(5.0, 101).unwrap();
        let p = FracParams::new(0.5).unwrap();
        let r = nonexistence_probe(&p, &well(), &GridFunction::zeros(g, 1), 1e-6, 10).unwrap();
        assert_eq!(r.steps, 0);
        assert_eq!(r.final_sup, 0.0);
    }

    #[test]
    fn probe_flows_to_zero() {
        let g = Grid::new(10.0, 201).unwrap();
        let p = FracParams::new(0.5).unwrap();
        let q0 = GridFunction::from_fn(g, |x| (-x * x).exp());
        let r = nonexistence_probe(&p, &well(), &q0, 1e-6, 100000).unwrap();
        assert!(r.converged && r.obstruction_holds && r.max_checks > 0, "{r:?}");
        assert!(r.min_op_at_max >= -1e-8);
    }

    #[test]
    fn q_sharp_branches() {
        assert_eq!(q_sharp(0.0, 1.0, 1.0), 1.0);
        assert_eq!(q_sharp(0.0, 1.0, -1.0), -1.0);
        assert_eq!(q_sharp(1.5, 1.0, 1.0), 0.0);
        assert!((q_sharp(0.5, 1.0, 5.0) - (1.0 + 2f64.ln()).ln()).abs() < 1e-15);
    }
}
