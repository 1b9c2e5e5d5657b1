//! Mountain-pass solver for the confined system `(-Delta)^s q + L(x) q = grad_q W(x, q)`.
//!
//! The path is kept in the form `0 -> T u -> S q_end -> q_end`: a ray through the current
//! iterate `u`, a connecting arc at negative energy, and the tail of the ray through `q_end`.
//! Its maximum sits on the first ray, so each sweep descends `u` along the Riesz gradient and
//! re-maximizes along its ray. A step is accepted only if the path maximum decreases.

use serde::Serialize;

use crate::energy::ConfinedSystem;
use crate::error::{Error, Result};
use crate::frac_ops::FracParams;
use crate::grid::{Grid, GridFunction};
use crate::potentials::{growth_bounds, near_origin_delta, omega1, ConfinedPotential, ConfinementMatrix};
use crate::quad::integrate;

#[derive(Debug, Clone)]
pub struct ConfinedProblem {
    pub frac: FracParams,
    pub potential: ConfinedPotential,
    pub matrix: ConfinementMatrix,
    pub grid: Grid,
}

impl ConfinedProblem {
    pub fn system(&self) -> Result<ConfinedSystem> {
        ConfinedSystem::new(self.grid, self.frac, self.potential.clone(), self.matrix.clone())
    }
}

#[derive(Debug, Clone)]
pub struct Path {
    pub nodes: Vec<GridFunction>,
}

impl Path {
    /// `eta -> eta q_end` at `p` nodes.
    pub fn segment(q_end: &GridFunction, p: usize) -> Self {
        let p = p.max(2);
        let nodes = (0..p)
            .map(|k| {
                if k == p - 1 {
                    q_end.clone()
                } else {
                    q_end.map(|v| v * k as f64 / (p - 1) as f64)
                }
            })
            .collect();
        Self { nodes }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Endpoint {
    pub t_bar: f64,
    pub omega_integral: f64,
    pub diamond_norm: f64,
    pub norm: f64,
    pub energy: f64,
}

/// Smooth bump: 1 on `[-1, 1]`, `C^inf` transition to 0 on `1 < |x| < 2`.
pub fn diamond(x: f64) -> f64 {
    let ax = x.abs();
    if ax <= 1.0 {
        return 1.0;
    }
    if ax >= 2.0 {
        return 0.0;
    }
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let t = 2.0 - ax;
    f(t) / (f(t) + f(1.0 - t))
}

/// `q_end = t_bar q_diamond` with `t_bar = max{rho, (2 int omega_1 / ||q_diamond||^2)^{1/(2-mu)}} + 1`,
/// first component carrying the bump.
pub fn choose_endpoint(sys: &ConfinedSystem, rho: f64) -> Result<(GridFunction, Endpoint)> {
    let g = sys.grid;
    if g.half_width() < 2.0 {
        return Err(Error::InvalidInput("box must contain the bump support [-2, 2]".into()));
    }
    let n = g.len();
    let mut v = vec![0.0; sys.ncomp * n];
    for i in 0..n {
        v[i] = diamond(g.x(i));
    }
    let dn2 = sys.norm_sq(&v);
    let w = &sys.w;
    let om_err = std::cell::RefCell::new(None);
    let om = integrate(
        |x| match omega1(w, x) {
            Ok(v) => v,
            Err(e) => {
                om_err.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        -1.0,
        1.0,
        32,
    );
    if let Some(e) = om_err.into_inner() {
        return Err(e);
    }
    if !(om > 0.0 && om.is_finite()) {
        return Err(Error::Numerical(format!("int omega_1 = {om} is not a positive number")));
    }
    let mu = w.mu;
    let t_bar = rho.max((2.0 * om / dn2).powf(1.0 / (2.0 - mu))) + 1.0;
    let u: Vec<f64> = v.iter().map(|a| t_bar * a).collect();
    let energy = sys.energy(&u);
    let norm = sys.norm_sq(&u).sqrt();
    if !(energy < 0.0) {
        return Err(Error::Numerical(format!("I(q_end) = {energy} is not negative; omega_1 quadrature is off")));
    }
    if !(norm > rho) {
        return Err(Error::Numerical(format!("||q_end|| = {norm} does not exceed rho = {rho}")));
    }
    let ep = Endpoint { t_bar, omega_integral: om, diamond_norm: dn2.sqrt(), norm, energy };
    Ok((sys.to_grid_function(u), ep))
}

#[derive(Debug, Clone, Serialize)]
pub struct Embedding {
    /// `sup ||q||_r / ||q||` over the probes, `r` in `{2, p}`.
    pub c_bar: f64,
    /// `sup ||q||_inf / ||q||` over the probes.
    pub c_tilde: f64,
    pub probes: usize,
}

/// Probe family: Gaussians, compact bumps and windowed layers over a range of widths and shifts.
pub fn estimate_embedding(sys: &ConfinedSystem, p_exp: f64) -> Result<Embedding> {
    let g = sys.grid;
    let n = g.len();
    let xh = g.half_width();
    let mut shapes: Vec<Box<dyn Fn(f64) -> f64>> = Vec::new();
    for k in 0..24 {
        let w = 0.02 * (xh / 0.04).powf(k as f64 / 23.0);
        for c in [0.0, 0.5, 1.5] {
            shapes.push(Box::new(move |x: f64| (-((x - c) / w).powi(2)).exp()));
            shapes.push(Box::new(move |x: f64| diamond((x - c) / w)));
            shapes.push(Box::new(move |x: f64| ((x - c) / w).tanh() * (-((x - c) / (4.0 * w)).powi(2)).exp()));
        }
    }
    let (mut cb, mut ct) = (0.0f64, 0.0f64);
    let mut used = 0;
    for f in &shapes {
        let mut v = vec![0.0; sys.ncomp * n];
        for i in 0..n {
            v[i] = f(g.x(i));
        }
        let nrm = sys.norm_sq(&v).sqrt();
        if !(nrm > 0.0 && nrm.is_finite()) {
            continue;
        }
        used += 1;
        let q = sys.to_grid_function(v);
        let l2 = q.l2_norm();
        let lp = q.lt_power(p_exp).powf(1.0 / p_exp);
        cb = cb.max(l2.max(lp) / nrm);
        ct = ct.max(q.sup_norm() / nrm);
    }
    if used == 0 || !(cb > 0.0 && ct > 0.0) {
        return Err(Error::Numerical("probe family gave no finite embedding estimate".into()));
    }
    Ok(Embedding { c_bar: cb, c_tilde: ct, probes: used })
}

#[derive(Debug, Clone, Serialize)]
pub struct Geometry {
    pub rho: f64,
    pub beta: f64,
    pub embedding: Embedding,
    /// `delta` of the near-origin bound (`s > 1/2`) or `sigma c_bar^p` (`s <= 1/2`).
    pub auxiliary: f64,
}

/// `rho_2 = delta / c_tilde`, `beta_2 = rho_2^2 / 4` (needs `s > 1/2`).
pub fn rho_beta_large_s(delta: f64, c_tilde: f64) -> (f64, f64) {
    let rho = delta / c_tilde;
    (rho, 0.25 * rho * rho)
}

/// `rho_1 = (2 sigma~)^{-1/(p-2)}` so that `1 - (4 sigma~/p) rho_1^{p-2} = 1 - 2/p > 0`,
/// `beta_1 = rho_1^2 (1 - 2/p) / 4`, with `sigma~ = sigma c_bar^p`.
pub fn rho_beta_small_s(sigma_tilde: f64, p_exp: f64) -> (f64, f64) {
    let rho = (2.0 * sigma_tilde).powf(-1.0 / (p_exp - 2.0));
    let factor = 1.0 - 4.0 * sigma_tilde / p_exp * rho.powf(p_exp - 2.0);
    (rho, 0.25 * rho * rho * factor)
}

pub fn rho_beta(sys: &ConfinedSystem, seed: u64) -> Result<Geometry> {
    let s = sys.op.params().s;
    let p_exp = sys.w.growth.map(|g| g.0).unwrap_or(sys.w.mu);
    let emb = estimate_embedding(sys, p_exp)?;
    if s > 0.5 {
        let eps = sys.l.alpha_l.min(1.0) / 4.0;
        let delta = near_origin_delta(&sys.w, eps, seed);
        if !(delta > 0.0) {
            return Err(Error::Hypothesis("W is not o(|q|^2) near the origin".into()));
        }
        let (rho, beta) = rho_beta_large_s(delta, emb.c_tilde);
        Ok(Geometry { rho, beta, embedding: emb, auxiliary: delta })
    } else {
        let eps = 1.0 / (2.0 * emb.c_bar * emb.c_bar);
        let gb = growth_bounds(&sys.w, eps, seed)?;
        let sigma_tilde = gb.sigma * emb.c_bar.powf(p_exp);
        let (rho, beta) = rho_beta_small_s(sigma_tilde, p_exp);
        Ok(Geometry { rho, beta, embedding: emb, auxiliary: sigma_tilde })
    }
}

/// `(2 mu c / (mu - 2))^{1/2}`.
pub fn ps_norm_bound(c_level: f64, mu: f64) -> Result<f64> {
    if !(mu > 2.0) {
        return Err(Error::Hypothesis(format!("AR exponent must exceed 2, got {mu}")));
    }
    if !(c_level >= 0.0) {
        return Err(Error::InvalidInput(format!("level must be nonnegative, got {c_level}")));
    }
    Ok((2.0 * mu * c_level / (mu - 2.0)).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct MpOptions {
    pub path_nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for MpOptions {
    fn default() -> Self {
        Self { path_nodes: 33, tol: 1e-4, max_iter: 400, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PsEntry {
    pub level: f64,
    pub norm: f64,
    pub bound: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MpReport {
    pub c_est: f64,
    pub beta_geom: f64,
    pub rho: f64,
    pub upper: f64,
    /// `int W(x, q_end)`, an upper bound for the level of the initial segment.
    pub w_end_integral: f64,
    pub endpoint: Endpoint,
    pub geometry: Geometry,
    pub iterations: usize,
    pub converged: bool,
    pub dual_residual: f64,
    pub norm: f64,
    pub norm_bound: f64,
    pub l2_norm: f64,
    /// Smallest energy seen where a path crosses `||.|| = rho`.
    pub min_crossing_energy: f64,
    pub history: Vec<PsEntry>,
    /// `(eta, I(h(eta)))` on the final path.
    pub path_energy: Vec<(f64, f64)>,
    pub sandwich: bool,
    pub seed: u64,
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| a * xi + yi).collect()
}

/// Maximizer of `t -> I(t u)` on `t > 0` and the maximum value.
fn ray_max(sys: &ConfinedSystem, u: &[f64]) -> Result<(f64, f64)> {
    let a = sys.norm_sq(u);
    let f = |t: f64| {
        let tu: Vec<f64> = u.iter().map(|v| t * v).collect();
        0.5 * t * t * a - sys.w_integral(&tu)
    };
    // bracket: grow until the energy is decreasing and negative
    let mut ts = vec![0.0];
    let mut t = 1e-3;
    let mut vals = vec![0.0];
    for _ in 0..200 {
        let v = f(t);
        ts.push(t);
        vals.push(v);
        let k = vals.len() - 1;
        if v < 0.0 && vals[k] < vals[k - 1] {
            break;
        }
        t *= 1.25;
    }
    let k = vals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0);
    if k == 0 || k + 1 >= ts.len() {
        return Err(Error::Numerical("energy is not eventually negative along the ray".into()));
    }
    // bisection on d/dt I(t u) = t a - int grad W(x, t u) . u
    let n = sys.grid.len();
    let nc = sys.ncomp;
    let mut gw = vec![0.0; nc];
    let mut df = |t: f64| {
        let mut acc = 0.0;
        for i in 0..n {
            let p: Vec<f64> = (0..nc).map(|j| t * u[j * n + i]).collect();
            sys.w.grad(sys.grid.x(i), &p, &mut gw);
            acc += (0..nc).map(|j| gw[j] * u[j * n + i]).sum::<f64>();
        }
        t * a - sys.h() * acc
    };
    let (mut lo, mut hi) = (ts[k - 1], ts[k + 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if df(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tm = 0.5 * (lo + hi);
    Ok((tm, f(tm)))
}

/// Samples the path `0 -> T u -> S q_end -> q_end`, enlarging `T = S` until the connecting arc
/// stays at negative energy.
fn build_path(sys: &ConfinedSystem, u: &[f64], q_end: &[f64], p: usize) -> Vec<(f64, Vec<f64>, f64)> {
    let third = (p / 3).max(2);
    let mut scale = 2.0;
    loop {
        let tu: Vec<f64> = u.iter().map(|v| scale * v).collect();
        let sq: Vec<f64> = q_end.iter().map(|v| scale * v).collect();
        let mut out = Vec::with_capacity(3 * third + 1);
        for k in 0..third {
            let e = k as f64 / third as f64;
            let v: Vec<f64> = tu.iter().map(|a| a * e).collect();
            out.push((e / 3.0, v));
        }
        for k in 0..third {
            let e = k as f64 / third as f64;
            out.push(((1.0 + e) / 3.0, axpy(1.0 - e, &tu, &sq.iter().map(|a| a * e).collect::<Vec<_>>())));
        }
        for k in 0..=third {
            let e = k as f64 / third as f64;
            let m = scale + (1.0 - scale) * e;
            let v: Vec<f64> = if k == third { q_end.to_vec() } else { q_end.iter().map(|a| a * m).collect() };
            out.push(((2.0 + e) / 3.0, v));
        }
        let path: Vec<(f64, Vec<f64>, f64)> = out
            .into_iter()
            .map(|(eta, v)| {
                let e = if eta == 0.0 { 0.0 } else { sys.energy(&v) };
                (eta, v, e)
            })
            .collect();
        let arc_ok = path.iter().filter(|(eta, _, _)| *eta >= 1.0 / 3.0).all(|(_, _, e)| *e < 0.0);
        if arc_ok || scale > 1e6 {
            return path;
        }
        scale *= 2.0;
    }
}

/// Descends the path maximum; returns the critical point approximation and the report.
pub fn mountain_pass(prob: &ConfinedProblem, path_init: Option<Path>, opts: &MpOptions) -> Result<(GridFunction, MpReport)> {
    let sys = prob.system()?;
    let mu = sys.w.mu;
    let geometry = rho_beta(&sys, opts.seed)?;
    let (q_end, endpoint) = choose_endpoint(&sys, geometry.rho)?;
    let path0 = path_init.unwrap_or_else(|| Path::segment(&q_end, opts.path_nodes));
    let (first, last) = (&path0.nodes[0], &path0.nodes[path0.nodes.len() - 1]);
    if first.sup_norm() != 0.0 || last.values() != q_end.values() {
        return Err(Error::InvalidInput("path must start at 0 and end at q_end".into()));
    }
    // upper bound: max over the initial path (fine sampling of the segment as well)
    let mut upper = path0.nodes.iter().map(|q| sys.energy(q.values())).fold(f64::NEG_INFINITY, f64::max);
    let (_, seg_max) = ray_max(&sys, q_end.values())?;
    upper = upper.max(seg_max);
    let w_end_integral = sys.w_integral(q_end.values());

    // start from the path node of maximal energy
    let mut u = path0
        .nodes
        .iter()
        .max_by(|a, b| sys.energy(a.values()).total_cmp(&sys.energy(b.values())))
        .expect("non-empty path")
        .values()
        .to_vec();
    let (t, mut level) = ray_max(&sys, &u)?;
    u.iter_mut().for_each(|v| *v *= t);
    let crossing = |u: &[f64]| -> f64 {
        let nu = sys.norm_sq(u).sqrt();
        let t = geometry.rho / nu;
        sys.energy(&u.iter().map(|v| t * v).collect::<Vec<_>>())
    };
    let mut min_cross = crossing(&u);
    let mut res = vec![0.0; u.len()];
    let mut history = Vec::new();
    let mut tau = 1.0;
    let mut iterations = 0;
    let mut dual;
    let mut converged = false;
    loop {
        sys.residual(&u, &mut res);
        let grad = sys.riesz_solve(&res, 1e-12);
        dual = (sys.h() * res.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>()).max(0.0).sqrt();
        let norm = sys.norm_sq(&u).sqrt();
        history.push(PsEntry { level, norm, bound: ps_norm_bound(level.max(0.0), mu)?, dual_residual: dual });
        if level < geometry.beta {
            return Err(Error::Numerical(format!(
                "path maximum {level} fell below the geometric lower bound {}",
                geometry.beta
            )));
        }
        if dual <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = axpy(-tau, &grad, &u);
            if let Ok((t, l)) = ray_max(&sys, &trial) {
                if l < level {
                    u = trial.iter().map(|v| t * v).collect();
                    level = l;
                    accepted = true;
                    tau = (tau * 1.5).min(1.0);
                    break;
                }
            }
            tau *= 0.5;
        }
        if !accepted {
            break;
        }
        min_cross = min_cross.min(crossing(&u));
    }
    let path = build_path(&sys, &u, q_end.values(), opts.path_nodes);
    let path_max = path.iter().map(|p| p.2).fold(f64::NEG_INFINITY, f64::max);
    let c_est = level.max(path_max);
    let norm = sys.norm_sq(&u).sqrt();
    let q = sys.to_grid_function(u);
    let report = MpReport {
        c_est,
        beta_geom: geometry.beta,
        rho: geometry.rho,
        upper,
        w_end_integral,
        endpoint,
        iterations,
        converged,
        dual_residual: dual,
        norm,
        norm_bound: ps_norm_bound(c_est, mu)?,
        l2_norm: q.l2_norm(),
        min_crossing_energy: min_cross,
        history,
        path_energy: path.iter().map(|p| (p.0, p.2)).collect(),
        sandwich: geometry.beta <= c_est && c_est <= upper,
        geometry,
        seed: opts.seed,
    };
    Ok((q, report))
}

#[derive(Debug, Clone, Serialize)]
pub struct NontrivialityReport {
    pub k: f64,
    /// `inf_{|x| > K} min eig L(x)` by sampling.
    pub beta_k: f64,
    pub mass_total: f64,
    pub mass_inside: f64,
    pub mass_outside: f64,
    /// `int_{|x|>K} L q.q / beta(K)`, the bound on the outside mass.
    pub outside_bound: f64,
    pub trivial: bool,
    pub concentrated: bool,
}

pub fn nontriviality_audit(q: &GridFunction, l: &ConfinementMatrix, k: f64) -> Result<NontrivialityReport> {
    let g = q.grid();
    let xh = g.half_width();
    if !(k >= 0.0 && k < xh) {
        return Err(Error::InvalidInput(format!("K = {k} must lie in [0, X)")));
    }
    let beta_k = (0..=4000)
        .map(|i| k + (xh.max(2.0 * k + 10.0) - k) * i as f64 / 4000.0)
        .filter(|x| *x > k)
        .flat_map(|x| [l.min_eig(x), l.min_eig(-x)])
        .fold(f64::INFINITY, f64::min);
    let h = g.h();
    let (mut inside, mut outside, mut lq_out) = (0.0, 0.0, 0.0);
    for i in 0..g.len() {
        let x = g.x(i);
        let p = q.point(i);
        let m: f64 = p.iter().map(|v| v * v).sum();
        if x.abs() <= k {
            inside += h * m;
        } else {
            outside += h * m;
            lq_out += h * l.quad(x, &p);
        }
    }
    let total = inside + outside;
    let bound = lq_out / beta_k;
    Ok(NontrivialityReport {
        k,
        beta_k,
        mass_total: total,
        mass_inside: inside,
        mass_outside: outside,
        outside_bound: bound,
        trivial: total == 0.0,
        concentrated: total == 0.0 || (outside <= bound * (1.0 + 1e-12) && inside >= 0.5 * total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{confined_potential, confinement_matrix, Params};

    fn problem(s: f64, x: f64, n: usize) -> ConfinedProblem {
        ConfinedProblem {
            frac: FracParams::new(s).unwrap(),
            potential: confined_potential("power-W", 1, &Params::new()).unwrap(),
            matrix: confinement_matrix("quadratic-confinement", 1, &Params::new()).unwrap(),
            grid: Grid::new(x, n).unwrap(),
        }
    }

    #[test]
    fn ps_bound_values() {
        assert!((ps_norm_bound(1.0, 3.0).unwrap() - 6f64.sqrt()).abs() < 1e-15);
        assert_eq!(ps_norm_bound(0.0, 3.0).unwrap(), 0.0);
        assert!((ps_norm_bound(2.0, 4.0).unwrap() - 8f64.sqrt()).abs() < 1e-15);
        assert!(ps_norm_bound(1.0, 2.0).is_err());
    }

    #[test]
    fn geometry_formulas() {
        let (r, b) = rho_beta_large_s(0.2, 1.0);
        assert!((r - 0.2).abs() < 1e-15 && (b - 0.01).abs() < 1e-15);
        let (r, b) = rho_beta_small_s(0.7, 3.0);
        assert!(1.0 - 4.0 * 0.7 / 3.0 * r > 0.0);
        assert!(b > 0.0);
    }

    #[test]
    fn diamond_shape() {
        assert_eq!(diamond(0.3), 1.0);
        assert_eq!(diamond(-1.0), 1.0);
        assert_eq!(diamond(2.5), 0.0);
        assert!((diamond(1.5) - 0.5).abs() < 1e-15);
        assert!(diamond(1.2) > diamond(1.8));
    }

    #[test]
    fn endpoint_matches_formula() {
        let prob = problem(0.75, 8.0, 321);
        let sys = prob.system().unwrap();
        let rho = 0.3;
        let (q_end, ep) = choose_endpoint(&sys, rho).unwrap();
        // omega_1 = 1/3 for |q|^3/3, so int omega_1 = 2/3
        assert!((ep.omega_integral - 2.0 / 3.0).abs() < 1e-12);
        let d2 = ep.diamond_norm * ep.diamond_norm;
        let expect = rho.max((2.0 * (2.0 / 3.0) / d2).powf(1.0 / (2.0 - 3.0))) + 1.0;
        assert!((ep.t_bar - expect).abs() < 1e-12);
        assert!(ep.energy < 0.0 && ep.norm > rho);
        assert!((sys.energy(q_end.values()) - ep.energy).abs() < 1e-12);
    }

    #[test]
    fn ray_max_of_cubic() {
        let prob = problem(0.75, 6.0, 241);
        let sys = prob.system().unwrap();
        let g = sys.grid;
        let u: Vec<f64> = (0..g.len()).map(|i| (-g.x(i).powi(2)).exp()).collect();
        // I(tu) = t^2 a/2 - t^3 b/3 has its max at t = a/b
        let a = sys.norm_sq(&u);
        let b = 3.0 * sys.w_integral(&u);
        let (t, _) = ray_max(&sys, &u).unwrap();
        assert!((t - a / b).abs() < 1e-8 * t);
    }

    #[test]
    fn small_mountain_pass() {
        let prob = problem(0.75, 6.0, 241);
        let (q, rep) = mountain_pass(&prob, None, &MpOptions::default()).unwrap();
        assert!(rep.converged, "{:?}", rep.dual_residual);
        assert!(rep.sandwich);
        assert!(rep.norm <= 1.05 * rep.norm_bound);
        assert!(q.l2_norm() > 1e-3);
        assert!(rep.c_est <= rep.w_end_integral);
        for h in &rep.history {
            assert!(h.norm <= 1.05 * h.bound + 1e-12);
        }
    }

    #[test]
    fn audit_of_zero_and_beta_k() {
        let l = confinement_matrix("quadratic-confinement", 1, &Params::new()).unwrap();
        let g = Grid::new(20.0, 401).unwrap();
        let r = nontriviality_audit(&GridFunction::zeros(g, 1), &l, 10.0).unwrap();
        assert!(r.trivial && r.concentrated);
        assert!(r.beta_k >= 101.0);
        let r2 = nontriviality_audit(&GridFunction::zeros(g, 1), &l, 15.0).unwrap();
        assert!(r2.beta_k > r.beta_k);
    }
}
