//! A posteriori certificates: level-set sup bound, layer-based decay barrier, positive-part checks.

use serde::Serialize;

use crate::energy::{confinement_integral, hs_tilde_norm};
use crate::error::{Error, Result};
use crate::frac_ops::{estimate_cs, gagliardo_sq, FracOperator, FracParams};
use crate::grid::{Extension, Grid, GridFunction};
use crate::linalg::gmres;
use crate::mountain_pass::ConfinedProblem;
use crate::potentials::ConfinementMatrix;
use crate::quad::{linear_fit, loglog_slope};

#[derive(Debug, Clone, Serialize)]
pub struct DeGiorgiTrace {
    pub t: f64,
    pub levels: Vec<f64>,
    pub masses: Vec<f64>,
    pub delta: f64,
    pub mu_dg: f64,
    /// `exp` of the least-squares slope of `ln U_k`, `k >= 1`.
    pub mu_fit: f64,
    pub lt_norm: f64,
    pub bound: f64,
    pub measured_sup: f64,
    pub bound_holds: bool,
    pub step0_holds: bool,
    pub monotone: bool,
    /// `U_k <= delta^t mu_dg^k` for all `k`.
    pub ansatz_holds: bool,
    /// Nodes violating the truncation invariants (should be 0).
    pub invariant_violations: usize,
}

/// Integrability exponent for the level-set iteration; `t_half` is used at `s >= 1/2`.
pub fn degiorgi_exponent(s: f64, t_half: f64) -> Result<f64> {
    if s < 0.5 {
        Ok(2.0 / (1.0 - 2.0 * s))
    } else if t_half > 2.0 {
        Ok(t_half)
    } else {
        Err(Error::InvalidInput(format!("t must exceed 2, got {t_half}")))
    }
}

fn level(k: usize) -> f64 {
    1.0 - 0.5f64.powi(k as i32)
}

// U_k summed over components and both signs of q.
fn level_masses(q: &GridFunction, scale: f64, t: f64, k_max: usize) -> Vec<f64> {
    let h = q.grid().h();
    (0..=k_max)
        .map(|k| {
            let a = level(k);
            h * q.values().iter().map(|&v| (scale * v.abs() - a).max(0.0).powf(t)).sum::<f64>()
        })
        .collect()
}

fn count_invariant_violations(q: &GridFunction, scale: f64, k_max: usize) -> usize {
    let mut bad = 0;
    for &v in q.values() {
        for sign in [1.0, -1.0] {
            let phi = sign * scale * v;
            for k in 0..k_max {
                let wk = (phi - level(k)).max(0.0);
                let wk1 = (phi - level(k + 1)).max(0.0);
                if wk1 > wk {
                    bad += 1;
                }
                if wk1 > 0.0 && !(wk > 0.5f64.powi(k as i32 + 1) && phi > 0.0 && phi < 2f64.powi(k as i32 + 1) * wk) {
                    bad += 1;
                }
            }
        }
    }
    bad
}

/// Level-set sup certificate. `delta` is the largest value in `(0, 1)` for which the truncation
/// levels are exhausted by `k_max`, found by bisection.
pub fn degiorgi_verify(q: &GridFunction, s: f64, t_half: f64, k_max: usize) -> Result<DeGiorgiTrace> {
    let t = degiorgi_exponent(s, t_half)?;
    if k_max < 2 {
        return Err(Error::InvalidInput("k_max must be >= 2".into()));
    }
    let h = q.grid().h();
    let n = q.grid().len();
    let nc = q.ncomp();
    let lt_norm = (h * (0..n)
        .map(|i| (0..nc).map(|j| q.at(i, j).powi(2)).sum::<f64>().sqrt().powf(t))
        .sum::<f64>())
    .powf(1.0 / t);
    let measured_sup = q.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let levels: Vec<f64> = (0..=k_max).map(level).collect();
    if lt_norm == 0.0 {
        return Ok(DeGiorgiTrace {
            t,
            levels,
            masses: vec![0.0; k_max + 1],
            delta: 0.5,
            mu_dg: 0.0,
            mu_fit: 0.0,
            lt_norm,
            bound: 0.0,
            measured_sup,
            bound_holds: true,
            step0_holds: true,
            monotone: true,
            ansatz_holds: true,
            invariant_violations: 0,
        });
    }
    let admissible = |delta: f64| {
        let m = level_masses(q, delta / lt_norm, t, k_max);
        m[k_max] == 0.0 && m[0] <= delta.powf(t) * (1.0 + 1e-12)
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if admissible(1.0 - 1e-12) {
        lo = 1.0 - 1e-12;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
    }
    if !(lo > 0.0) || !admissible(lo) {
        return Err(Error::Numerical("no admissible delta: level masses do not decay".into()));
    }
    let delta = lo;
    let scale = delta / lt_norm;
    let masses = level_masses(q, scale, t, k_max);
    let mut mu_dg = 0.0f64;
    for k in 2..=k_max {
        if masses[k - 1] > 0.0 {
            mu_dg = mu_dg.max(masses[k] / masses[k - 1]);
        }
    }
    let (ks, lu): (Vec<f64>, Vec<f64>) =
        (1..=k_max).filter(|&k| masses[k] > 0.0).map(|k| (k as f64, masses[k].ln())).unzip();
    let mu_fit = if ks.len() >= 2 { linear_fit(&ks, &lu).0.exp() } else { mu_dg };
    let dt = delta.powf(t);
    let bound = lt_norm / delta;
    Ok(DeGiorgiTrace {
        t,
        levels,
        delta,
        mu_dg,
        mu_fit,
        lt_norm,
        bound,
        measured_sup,
        bound_holds: bound >= measured_sup,
        step0_holds: masses[0] <= dt * (1.0 + 1e-12),
        monotone: masses.windows(2).all(|w| w[1] <= w[0]),
        ansatz_holds: masses.iter().enumerate().all(|(k, &u)| u <= dt * mu_dg.powi(k as i32) * (1.0 + 1e-12)),
        invariant_violations: count_invariant_violations(q, scale, k_max),
        masses,
    })
}

#[derive(Debug, Clone)]
pub struct LayerSolution {
    pub s: f64,
    /// Monotone profile with constant extensions `-1`, `+1`.
    pub profile: GridFunction,
    /// Centered difference of the profile.
    pub beta: GridFunction,
    pub newton_iterations: usize,
    pub residual: f64,
    pub min_forward_diff: f64,
    pub tail_exponent: f64,
    pub beta_integral: f64,
}

impl LayerSolution {
    /// `1 - 3 profile^2` at node `i`.
    pub fn a(&self, i: usize) -> f64 {
        let u = self.profile.values()[i];
        1.0 - 3.0 * u * u
    }

    pub fn a_edge(&self) -> f64 {
        let n = self.profile.grid().len();
        self.a(0).max(self.a(n - 1))
    }
}

/// Monotone heteroclinic of `(-Delta)^s u = u - u^3`, pinned at `u(0) = 0`, by damped
/// Newton with GMRES inner solves.
pub fn layer_solution(s: f64, grid: &Grid) -> Result<LayerSolution> {
    let params = FracParams::new(s)?;
    if grid.half_width() < 20.0 {
        return Err(Error::InvalidInput("layer grid needs X >= 20".into()));
    }
    let n = grid.len();
    let c = grid.center();
    let op = FracOperator::new(params, grid);
    let residual = |u: &[f64], out: &mut [f64]| {
        op.apply_scalar(u, -1.0, 1.0, out);
        for i in 0..n {
            out[i] += u[i] * u[i] * u[i] - u[i];
        }
        out[c] = u[c];
    };
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut u: Vec<f64> = (0..n).map(|i| grid.x(i).tanh()).collect();
    let mut f = vec![0.0; n];
    residual(&u, &mut f);
    let mut fnorm = norm(&f);
    let dg = op.diagonal();
    let mut iters = 0;
    let tol = 1e-10;
    while f.iter().fold(0.0f64, |m, v| m.max(v.abs())) > tol {
        if iters >= 60 {
            return Err(Error::Numerical(format!("layer Newton did not converge, |F| = {fnorm:.3e}")));
        }
        iters += 1;
        let react: Vec<f64> = u.iter().map(|v| 3.0 * v * v - 1.0).collect();
        let mut diag: Vec<f64> = react.iter().map(|r| (dg + r).abs().max(0.5 * dg)).collect();
        diag[c] = 1.0;
        let jac = |v: &[f64], out: &mut [f64]| {
            op.apply_scalar(v, 0.0, 0.0, out);
            for i in 0..n {
                out[i] += react[i] * v[i];
            }
            out[c] = v[c];
        };
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let inner = (0.1 * fnorm).clamp(1e-12, 1e-4);
        let (du, _) = gmres(jac, &diag, &rhs, inner, 60, 20 * n.min(2000));
        let mut step = 1.0;
        let mut trial = vec![0.0; n];
        let mut ft = vec![0.0; n];
        loop {
            for i in 0..n {
                trial[i] = u[i] + step * du[i];
            }
            residual(&trial, &mut ft);
            let nt = norm(&ft);
            if nt < (1.0 - 1e-4 * step) * fnorm || (nt <= fnorm && step < 1e-3) {
                u.copy_from_slice(&trial);
                f.copy_from_slice(&ft);
                fnorm = nt;
                break;
            }
            step *= 0.5;
            if step < 1e-8 {
                return Err(Error::Numerical(format!("layer Newton stalled at |F| = {fnorm:.3e}")));
            }
        }
    }
    let min_forward_diff = u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    if min_forward_diff < -1e-10 {
        return Err(Error::Numerical(format!("layer profile not monotone: min step {min_forward_diff:.3e}")));
    }
    if (u[0] + 1.0).abs() > 0.05 || (u[n - 1] - 1.0).abs() > 0.05 {
        return Err(Error::Numerical(format!("layer endpoints {} {} not near -1, +1", u[0], u[n - 1])));
    }
    let h = grid.h();
    let beta: Vec<f64> = (0..n)
        .map(|i| {
            let l = if i > 0 { u[i - 1] } else { -1.0 };
            let r = if i + 1 < n { u[i + 1] } else { 1.0 };
            (r - l) / (2.0 * h)
        })
        .collect();
    let beta_integral = h * beta.iter().sum::<f64>();
    let x_edge = grid.half_width();
    let (xs, ys): (Vec<f64>, Vec<f64>) = (c..n)
        .map(|i| (grid.x(i), beta[i]))
        .filter(|&(x, b)| x >= x_edge / 20.0 && x <= x_edge / 4.0 && b > 0.0)
        .unzip();
    let tail_exponent = if xs.len() >= 2 { -loglog_slope(&xs, &ys).0 } else { f64::NAN };
    Ok(LayerSolution {
        s,
        profile: GridFunction::new(*grid, 1, u, Extension::Constant { left: vec![-1.0], right: vec![1.0] })?,
        beta: GridFunction::new(*grid, 1, beta, Extension::Zero)?,
        newton_iterations: iters,
        residual: f.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        min_forward_diff,
        tail_exponent,
        beta_integral,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierConstants {
    pub c_s: f64,
    pub r_bar: f64,
    pub r_tilde: f64,
    pub r0: f64,
    pub varsigma: f64,
    pub a_r0: f64,
    pub q_sup: f64,
    pub d_threshold: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BarrierCertificate {
    pub constants: BarrierConstants,
    pub amplitude: f64,
    pub eta: f64,
    pub v_min: Vec<f64>,
    pub w_min: Vec<f64>,
    pub beta_positive: bool,
    pub a_in_range: bool,
    pub a_edge: f64,
    pub pass: bool,
}

// q linearly interpolated at x, zero outside its box.
fn sample(q: &GridFunction, j: usize, x: f64) -> f64 {
    let g = q.grid();
    let x_edge = g.half_width();
    if x.abs() > x_edge {
        return 0.0;
    }
    let pos = (x + x_edge) / g.h();
    let i = (pos.floor() as usize).min(g.len() - 2);
    let f = pos - i as f64;
    (1.0 - f) * q.at(i, j) + f * q.at(i + 1, j)
}

// Smallest radius `r >= r_min` (on the layer grid) such that `ok` holds at every node with `|x| >= r`.
fn outward_radius(g: &Grid, r_min: f64, ok: impl Fn(usize) -> bool) -> Option<f64> {
    let mut worst: Option<f64> = None;
    for i in 0..g.len() {
        let ax = g.x(i).abs();
        if ax >= r_min && !ok(i) {
            worst = Some(worst.map_or(ax, |w: f64| w.max(ax)));
        }
    }
    match worst {
        None => Some(r_min),
        Some(w) if w + g.h() <= g.half_width() => Some((w + g.h()).max(r_min)),
        Some(_) => None,
    }
}

pub fn barrier_constants(q: &GridFunction, prob: &ConfinedProblem, layer: &LayerSolution) -> Result<BarrierConstants> {
    let s = prob.frac.s;
    if s > 0.5 {
        return Err(Error::InvalidInput("barrier certificate requires s <= 1/2".into()));
    }
    if (layer.s - s).abs() > 1e-12 {
        return Err(Error::InvalidInput("layer solution computed for a different s".into()));
    }
    let tail = prob
        .matrix
        .tail
        .as_ref()
        .ok_or_else(|| Error::Hypothesis("confinement matrix is not diagonal at infinity".into()))?;
    let (p_exp, a0) = prob
        .potential
        .growth
        .ok_or_else(|| Error::Hypothesis("potential has no declared growth bound".into()))?;
    let q_sup = q.sup_norm();
    let d_threshold = 3.0 + a0 * (1.0 + q_sup.powf(p_exp - 2.0));
    let lg = *layer.profile.grid();
    let too_small = || Error::InvalidInput(format!("R0 exceeds the layer box X = {}", lg.half_width()));
    let nc = q.ncomp();
    let r_bar = outward_radius(&lg, tail.d_from, |i| (0..nc).all(|j| tail.d(j, lg.x(i)) > d_threshold))
        .ok_or_else(too_small)?;
    let r_tilde = outward_radius(&lg, 0.0, |i| layer.a(i) <= -1.0).ok_or_else(too_small)?;
    let c_s = estimate_cs(&prob.frac, &Grid::new(16.0, 3201)?)?.c_s;
    let r0 = r_bar.max(r_tilde).max(1.0 + c_s.powf(1.0 / (2.0 * s)));
    if r0 > lg.half_width() {
        return Err(too_small());
    }
    let varsigma = (0..lg.len())
        .filter(|&i| lg.x(i).abs() <= r0)
        .map(|i| layer.beta.values()[i])
        .fold(f64::INFINITY, f64::min);
    if !(varsigma > 0.0) {
        return Err(Error::Numerical("layer derivative not positive on [-R0, R0]".into()));
    }
    Ok(BarrierConstants { c_s, r_bar, r_tilde, r0, varsigma, a_r0: q_sup / varsigma, q_sup, d_threshold })
}

fn barrier_minima(q: &GridFunction, layer: &LayerSolution, amp: f64, eta: f64, s: f64) -> (Vec<f64>, Vec<f64>) {
    let lg = layer.profile.grid();
    let beta = layer.beta.values();
    let nc = q.ncomp();
    let mut v_min = vec![f64::INFINITY; nc];
    let mut w_min = vec![f64::INFINITY; nc];
    for i in 0..lg.len() {
        let x = lg.x(i);
        let base = amp * beta[i] + eta * (1.0 + x.abs().powf(s));
        for j in 0..nc {
            let qj = sample(q, j, x);
            v_min[j] = v_min[j].min(base - qj);
            w_min[j] = w_min[j].min(base + qj);
        }
    }
    (v_min, w_min)
}

/// Evaluates `A beta -/+ q_j + eta (1 + |x|^s)` on every layer node.
pub fn build_barrier(
    q: &GridFunction,
    prob: &ConfinedProblem,
    layer: &LayerSolution,
    eta: f64,
    a_mult: f64,
) -> Result<BarrierCertificate> {
    if !(a_mult > 1.0) || !(eta > 0.0) {
        return Err(Error::InvalidInput("need A_mult > 1 and eta > 0".into()));
    }
    let constants = barrier_constants(q, prob, layer)?;
    certificate_from(q, prob.frac.s, layer, constants, eta, a_mult)
}

fn certificate_from(
    q: &GridFunction,
    s: f64,
    layer: &LayerSolution,
    constants: BarrierConstants,
    eta: f64,
    a_mult: f64,
) -> Result<BarrierCertificate> {
    let amplitude = a_mult * constants.a_r0;
    let (v_min, w_min) = barrier_minima(q, layer, amplitude, eta, s);
    let pass = v_min.iter().chain(&w_min).all(|&m| m >= -1e-8);
    if !pass && a_mult >= 2.0 {
        return Err(Error::Numerical(format!(
            "barrier certificate failed with A_mult = {a_mult}: minima {v_min:?} {w_min:?}"
        )));
    }
    let n = layer.profile.grid().len();
    Ok(BarrierCertificate {
        amplitude,
        eta,
        v_min,
        w_min,
        beta_positive: layer.beta.values().iter().all(|&b| b > 0.0),
        a_in_range: (0..n).all(|i| layer.a(i) > -2.0 && layer.a(i) <= 1.0),
        a_edge: layer.a_edge(),
        pass,
        constants,
    })
}

/// For each `eta`, the largest excess of `|q_j|` over `A beta + eta (1 + |x|^s)` (`<= 0` when the
/// bound holds).
pub fn eta_sweep(
    q: &GridFunction,
    prob: &ConfinedProblem,
    layer: &LayerSolution,
    a_mult: f64,
    etas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let constants = barrier_constants(q, prob, layer)?;
    let amp = a_mult * constants.a_r0;
    Ok(etas
        .iter()
        .map(|&eta| {
            let (v, w) = barrier_minima(q, layer, amp, eta, prob.frac.s);
            (eta, -v.iter().chain(&w).fold(f64::INFINITY, |m, &x| m.min(x)))
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct PositivePartReport {
    pub c_level: f64,
    pub seminorm_sq_u: f64,
    pub seminorm_sq_q: f64,
    pub confinement_u: f64,
    pub confinement_q: f64,
    pub norm_u: f64,
    pub contraction: bool,
    pub confinement_bound: bool,
}

/// `u = (q - c)^+` componentwise: checks `[u]_s <= [q]_s` and `int L u.u <= int L q.q`.
pub fn positive_part_membership(
    q: &GridFunction,
    l: &ConfinementMatrix,
    p: &FracParams,
    c_level: f64,
) -> Result<PositivePartReport> {
    if !(c_level > 0.0) {
        return Err(Error::InvalidInput("positive-part level must be > 0".into()));
    }
    let ext = match q.extension() {
        Extension::Constant { left, right } => Extension::Constant {
            left: left.iter().map(|v| (v - c_level).max(0.0)).collect(),
            right: right.iter().map(|v| (v - c_level).max(0.0)).collect(),
        },
        _ => Extension::Zero,
    };
    let u = GridFunction::new(*q.grid(), q.ncomp(), q.values().iter().map(|v| (v - c_level).max(0.0)).collect(), ext)?;
    let seminorm_sq_u = gagliardo_sq(&u, p);
    let seminorm_sq_q = gagliardo_sq(q, p);
    let confinement_u = confinement_integral(&u, l)?;
    let confinement_q = confinement_integral(q, l)?;
    let slack = |b: f64| 1e-12 * b.abs().max(1e-300);
    Ok(PositivePartReport {
        c_level,
        norm_u: hs_tilde_norm(&u, l, p)?,
        contraction: seminorm_sq_u <= seminorm_sq_q + slack(seminorm_sq_q),
        confinement_bound: confinement_u <= confinement_q + slack(confinement_q),
        seminorm_sq_u,
        seminorm_sq_q,
        confinement_u,
        confinement_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(g: Grid) -> GridFunction {
        GridFunction::from_fn(g, |x| 2.5 * (-x * x).exp() * (1.0 + 0.3 * x.sin()))
    }

    #[test]
    fn degiorgi_zero_profile() {
        let q = GridFunction::zeros(Grid::new(5.0, 101).unwrap(), 1);
        let tr = degiorgi_verify(&q, 0.4, 4.0, 20).unwrap();
        assert!(tr.masses.iter().all(|&u| u == 0.0));
        assert_eq!(tr.bound, 0.0);
    }

    #[test]
    fn degiorgi_bound_and_invariants() {
        let q = bump(Grid::new(6.0, 601).unwrap());
        let tr = degiorgi_verify(&q, 0.4, 4.0, 30).unwrap();
        assert!((tr.t - 10.0).abs() < 1e-12);
        assert!(tr.bound >= tr.measured_sup && tr.bound < 1.01 * tr.measured_sup, "{tr:?}");
        assert!(tr.step0_holds && tr.monotone);
        assert!(tr.mu_dg > 0.0 && tr.mu_dg < 1.0);
        assert_eq!(tr.invariant_violations, 0);
        // direct U_k at the accepted delta
        let h = q.grid().h();
        let k = 3;
        let a = 1.0 - 0.125;
        let direct: f64 =
            h * q.values().iter().map(|v| (tr.delta * v.abs() / tr.lt_norm - a).max(0.0).powf(tr.t)).sum::<f64>();
        assert!((direct - tr.masses[k]).abs() <= 1e-14 * direct.max(1e-300));
    }

    #[test]
    fn degiorgi_exponent_rules() {
        assert!((degiorgi_exponent(0.25, 4.0).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(degiorgi_exponent(0.5, 6.0).unwrap(), 6.0);
        assert!(degiorgi_exponent(0.5, 2.0).is_err());
    }

    #[test]
    fn layer_is_odd_monotone_and_decays() {
        let g = Grid::new(40.0, 801).unwrap();
        let lay = layer_solution(0.5, &g).unwrap();
        let u = lay.profile.values();
        let n = u.len();
        assert_eq!(u[g.center()], 0.0);
        for i in 0..n {
            assert!((u[i] + u[n - 1 - i]).abs() < 1e-8);
        }
        assert!(lay.min_forward_diff >= -1e-10);
        assert!((lay.beta_integral - 2.0).abs() < 0.05);
        assert!(lay.beta.values().iter().all(|&b| b > 0.0));
        assert!(lay.a_edge() < -1.8);
        assert!(layer_solution(0.5, &Grid::new(10.0, 101).unwrap()).is_err());
    }

    #[test]
    fn positive_part_checks() {
        let g = Grid::new(4.0, 161).unwrap();
        let p = FracParams::new(0.4).unwrap();
        let l = ConfinementMatrix::scalar("quad", 1, 1.0, |x| 1.0 + x * x);
        let small = GridFunction::from_fn(g, |x| 0.3 * (-x * x).exp());
        let r = positive_part_membership(&small, &l, &p, 0.5).unwrap();
        assert_eq!(r.norm_u, 0.0);
        let q = GridFunction::from_fn(g, |x| (-x * x).exp() * (1.0 + 0.5 * (3.0 * x).cos()));
        let r = positive_part_membership(&q, &l, &p, 0.5).unwrap();
        assert!(r.contraction && r.confinement_bound);
        let full = hs_tilde_norm(&q, &l, &p).unwrap();
        let e1 = (positive_part_membership(&q, &l, &p, 0.1).unwrap().norm_u - full).abs();
        let e2 = (positive_part_membership(&q, &l, &p, 0.01).unwrap().norm_u - full).abs();
        assert!(e2 < e1 && e2 < 0.05 * full);
    }
}
