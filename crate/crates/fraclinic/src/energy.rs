//! Pinned and confined energies, their first variations, the `~H^s` norm, and the
//! interpolation inequality check.
//!
//! Spatial integrals use `h * sum_i f(x_i)`, which is the trapezoid rule on the whole line for
//! zero-extended integrands. The same weights appear in the seminorm, so the discrete gradient is
//! exactly `h * (L q - grad V(q))`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frac_ops::{frac_laplacian, gagliardo_bilinear, gagliardo_sq, FracOperator, FracParams};
use crate::grid::{Extension, Grid, GridFunction};
use crate::potentials::{ConfinedPotential, ConfinementMatrix, PinnedPotential};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinnedEnergyValue {
    pub kinetic: f64,
    pub potential_integral: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfinedEnergyValue {
    pub kinetic: f64,
    pub confinement: f64,
    pub w_integral: f64,
    pub total: f64,
}

/// Tail samples `(x, q(x))` beyond the box for a power-tail profile, out to `16 X`.
fn power_tail_samples(q: &GridFunction, exponent: f64) -> Vec<(f64, Vec<f64>)> {
    let g = q.grid();
    let (x_edge, h, n) = (g.half_width(), g.h(), g.len());
    let steps = 15 * (n - 1) / 2;
    let mut out = Vec::with_capacity(2 * steps);
    for k in 1..=steps {
        let x = x_edge + k as f64 * h;
        let decay = (x_edge / x).powf(exponent);
        out.push((-x, (0..q.ncomp()).map(|j| q.at(0, j) * decay).collect()));
        out.push((x, (0..q.ncomp()).map(|j| q.at(n - 1, j) * decay).collect()));
    }
    out
}

/// `int f(x, q(x)) dx` including the extension; `None` when a constant tail makes it diverge.
fn integrate_pointwise(q: &GridFunction, f: impl Fn(f64, &[f64]) -> f64) -> Option<f64> {
    let g = q.grid();
    let h = g.h();
    let mut acc = 0.0;
    for i in 0..g.len() {
        acc += f(g.x(i), &q.point(i));
    }
    match q.extension() {
        Extension::Zero => {}
        Extension::Constant { left, right } => {
            let fl = f(-g.half_width() - h, left);
            let fr = f(g.half_width() + h, right);
            if fl != 0.0 || fr != 0.0 {
                return None;
            }
        }
        Extension::PowerTail { exponent } => {
            for (x, v) in power_tail_samples(q, *exponent) {
                acc += f(x, &v);
            }
        }
    }
    Some(h * acc)
}

pub fn energy_pinned(q: &GridFunction, v: &PinnedPotential, p: &FracParams) -> PinnedEnergyValue {
    let kinetic = 0.5 * gagliardo_sq(q, p);
    let potential_integral = integrate_pointwise(q, |_, z| v.value(z)).unwrap_or(f64::NEG_INFINITY);
    PinnedEnergyValue { kinetic, potential_integral, total: kinetic - potential_integral }
}

/// `L q - grad V(q)` on free nodes, zero on pinned nodes.
pub fn grad_energy_pinned(q: &GridFunction, v: &PinnedPotential, p: &FracParams, free: &[bool]) -> GridFunction {
    let g = *q.grid();
    let n = g.len();
    let mut out = frac_laplacian(q, p);
    let mut gv = vec![0.0; q.ncomp()];
    for i in 0..n {
        if !free[i] {
            for j in 0..q.ncomp() {
                out.values_mut()[j * n + i] = 0.0;
            }
            continue;
        }
        v.grad(&q.point(i), &mut gv);
        for j in 0..q.ncomp() {
            out.values_mut()[j * n + i] -= gv[j];
        }
    }
    out
}

/// `h sum_i a_i . b_i`.
pub fn dot_h(a: &GridFunction, b: &GridFunction) -> f64 {
    a.grid().h() * a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>()
}

/// `int L(x) q . q`, or an error if a power tail is not integrable against `L`.
pub fn confinement_integral(q: &GridFunction, l: &ConfinementMatrix) -> Result<f64> {
    if let Extension::PowerTail { exponent } = q.extension() {
        let x_edge = q.grid().half_width();
        let dens = |x: f64| l.min_eig(x).max(l.quad(x, &vec![1.0 / (q.ncomp() as f64).sqrt(); q.ncomp()])) * x.powf(1.0 - 2.0 * exponent);
        if dens(16.0 * x_edge) >= dens(x_edge) {
            return Err(Error::InvalidInput(format!(
                "confinement integral diverges for power tail with exponent {exponent}"
            )));
        }
    }
    integrate_pointwise(q, |x, z| l.quad(x, z))
        .ok_or_else(|| Error::InvalidInput("confinement integral diverges for constant tails".into()))
}

pub fn hs_tilde_norm(q: &GridFunction, l: &ConfinementMatrix, p: &FracParams) -> Result<f64> {
    Ok((gagliardo_sq(q, p) + confinement_integral(q, l)?).sqrt())
}

pub fn energy_confined(
    q: &GridFunction,
    w: &ConfinedPotential,
    l: &ConfinementMatrix,
    p: &FracParams,
) -> Result<ConfinedEnergyValue> {
    let kinetic = 0.5 * gagliardo_sq(q, p);
    let confinement = 0.5 * confinement_integral(q, l)?;
    let w_integral = integrate_pointwise(q, |x, z| w.value(x, z))
        .ok_or_else(|| Error::InvalidInput("W integral diverges for constant tails".into()))?;
    Ok(ConfinedEnergyValue { kinetic, confinement, w_integral, total: kinetic + confinement - w_integral })
}

/// `<I'(q), phi>` for zero-extended `q`, `phi`.
pub fn dirderiv_confined(
    q: &GridFunction,
    phi: &GridFunction,
    w: &ConfinedPotential,
    l: &ConfinementMatrix,
    p: &FracParams,
) -> f64 {
    let g = q.grid();
    let n = g.len();
    let mut lin = 0.0;
    let mut gw = vec![0.0; q.ncomp()];
    for i in 0..n {
        let x = g.x(i);
        let (qi, fi) = (q.point(i), phi.point(i));
        let m = l.at(x);
        w.grad(x, &qi, &mut gw);
        for a in 0..q.ncomp() {
            let mut lq = 0.0;
            for b in 0..q.ncomp() {
                lq += m[a * q.ncomp() + b] * qi[b];
            }
            lin += (lq - gw[a]) * fi[a];
        }
    }
    gagliardo_bilinear(q, phi, p) + g.h() * lin
}

/// Discrete confined functional on a fixed grid (zero extension), with cached operator and `L`.
#[derive(Clone, Debug)]
pub struct ConfinedSystem {
    pub grid: Grid,
    pub ncomp: usize,
    pub op: FracOperator,
    pub w: ConfinedPotential,
    pub l: ConfinementMatrix,
    lmat: Vec<Vec<f64>>,
}

impl ConfinedSystem {
    pub fn new(grid: Grid, p: FracParams, w: ConfinedPotential, l: ConfinementMatrix) -> Result<Self> {
        if w.ncomp != l.ncomp {
            return Err(Error::InvalidInput("W and L have different component counts".into()));
        }
        let lmat = (0..grid.len()).map(|i| l.at(grid.x(i))).collect();
        Ok(Self { grid, ncomp: w.ncomp, op: FracOperator::new(p, &grid), w, l, lmat })
    }

    pub fn h(&self) -> f64 {
        self.grid.h()
    }

    /// `L(x_i)` row-major.
    pub fn lmat(&self, i: usize) -> &[f64] {
        &self.lmat[i]
    }

    /// `A u + L(x) u` (no `W` term), component-major.
    pub fn linear(&self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.len();
        let nc = self.ncomp;
        for j in 0..nc {
            self.op.apply_scalar(&u[j * n..(j + 1) * n], 0.0, 0.0, &mut out[j * n..(j + 1) * n]);
        }
        for i in 0..n {
            let m = &self.lmat[i];
            for a in 0..nc {
                let mut acc = 0.0;
                for b in 0..nc {
                    acc += m[a * nc + b] * u[b * n + i];
                }
                out[a * n + i] += acc;
            }
        }
    }

    fn point(&self, u: &[f64], i: usize) -> Vec<f64> {
        let n = self.grid.len();
        (0..self.ncomp).map(|j| u[j * n + i]).collect()
    }

    pub fn w_integral(&self, u: &[f64]) -> f64 {
        let n = self.grid.len();
        self.h() * (0..n).map(|i| self.w.value(self.grid.x(i), &self.point(u, i))).sum::<f64>()
    }

    /// `||u||^2_{~H^s} = h <u, (A + L) u>`.
    pub fn norm_sq(&self, u: &[f64]) -> f64 {
        let mut lu = vec![0.0; u.len()];
        self.linear(u, &mut lu);
        self.h() * u.iter().zip(&lu).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.norm_sq(u) - self.w_integral(u)
    }

    /// Residual `(A + L) u - grad W(u)`; the gradient of [`energy`](Self::energy) is `h` times this.
    pub fn residual(&self, u: &[f64], out: &mut [f64]) {
        self.linear(u, out);
        let n = self.grid.len();
        let mut gw = vec![0.0; self.ncomp];
        for i in 0..n {
            self.w.grad(self.grid.x(i), &self.point(u, i), &mut gw);
            for j in 0..self.ncomp {
                out[j * n + i] -= gw[j];
            }
        }
    }

    /// Solves `(A + L) x = b` by Jacobi-preconditioned conjugate gradients.
    pub fn riesz_solve(&self, b: &[f64], tol: f64) -> Vec<f64> {
        let n = self.grid.len();
        let nc = self.ncomp;
        let d = self.op.diagonal();
        let diag: Vec<f64> = (0..nc * n).map(|k| d + self.lmat[k % n][(k / n) * nc + k / n]).collect();
        crate::linalg::pcg(|v, out| self.linear(v, out), &diag, b, tol, 20 * n + 200)
    }

    /// Dual norm `sup <I'(u), phi> / ||phi||` = `sqrt(h r . (A+L)^{-1} r)`.
    pub fn dual_norm(&self, residual: &[f64]) -> f64 {
        let z = self.riesz_solve(residual, 1e-12);
        (self.h() * residual.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>()).max(0.0).sqrt()
    }

    pub fn to_grid_function(&self, u: Vec<f64>) -> GridFunction {
        GridFunction::new(self.grid, self.ncomp, u, Extension::Zero).expect("finite values")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InterpReport {
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `(rhs - lhs) / max(rhs, tiny)`.
    pub margin: f64,
    pub pass: bool,
}

/// `||u||_r^r <= ||u||_p^{p(1-theta)} ||u||_q^{q theta}` with `r = p(1-theta) + q theta`.
pub fn interpolation_check(u: &GridFunction, p_exp: f64, q_exp: f64, theta: f64) -> Result<InterpReport> {
    if !(1.0 <= p_exp && p_exp < q_exp && q_exp.is_finite()) {
        return Err(Error::InvalidInput(format!("need 1 <= p < q < inf, got p = {p_exp}, q = {q_exp}")));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta must lie in (0,1), got {theta}")));
    }
    let r = p_exp * (1.0 - theta) + q_exp * theta;
    let lhs = u.lt_power(r);
    let rhs = u.lt_power(p_exp).powf(1.0 - theta) * u.lt_power(q_exp).powf(theta);
    let margin = (rhs - lhs) / rhs.max(f64::MIN_POSITIVE);
    Ok(InterpReport { r, lhs, rhs, margin, pass: lhs <= rhs * (1.0 + 1e-12) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{confined_potential, confinement_matrix, pinned_potential, Params};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump(g: Grid, c: f64) -> GridFunction {
        GridFunction::from_fn(g, move |x| (-(x - c) * (x - c)).exp())
    }

    #[test]
    fn zero_profile_has_zero_energy() {
        let g = Grid::new(4.0, 41).unwrap();
        let p = FracParams::new(0.4).unwrap();
        let v = pinned_potential("quadratic-well", 1, &Params::new()).unwrap();
        let e = energy_pinned(&GridFunction::zeros(g, 1), &v, &p);
        assert_eq!(e.total, 0.0);
        let w = confined_potential("power-W", 1, &Params::new()).unwrap();
        let l = confinement_matrix("quadratic-confinement", 1, &Params::new()).unwrap();
        assert_eq!(energy_confined(&GridFunction::zeros(g, 1), &w, &l, &p).unwrap().total, 0.0);
        let phi = bump(g, 0.5);
        assert_eq!(dirderiv_confined(&GridFunction::zeros(g, 1), &phi, &w, &l, &p), 0.0);
    }

    #[test]
    fn quadratic_well_recomposes() {
        let g = Grid::new(6.0, 241).unwrap();
        let p = FracParams::new(0.3).unwrap();
        let v = pinned_potential("quadratic-well", 1, &Params::new()).unwrap();
        let q = bump(g, 0.2);
        let e = energy_pinned(&q, &v, &p);
        let l2 = q.l2_norm();
        let expect = 0.5 * gagliardo_sq(&q, &p) + l2 * l2;
        assert!(((e.total - expect) / expect).abs() < 1e-12);
        assert_eq!(e.total, e.kinetic - e.potential_integral);
    }

    #[test]
    fn pinned_gradient_matches_central_difference() {
        let g = Grid::new(3.0, 61).unwrap();
        let p = FracParams::new(0.6).unwrap();
        let mut prm = Params::new();
        prm.insert("eps".into(), 0.1);
        prm.insert("delta".into(), 0.1);
        let v = pinned_potential("perturbed-cosine", 1, &prm).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let free: Vec<bool> = (0..61).map(|i| !(25..=35).contains(&i)).collect();
        for _ in 0..5 {
            let q = GridFunction::new(g, 1, (0..61).map(|_| rng.gen_range(-1.0..1.0)).collect(), Extension::Zero).unwrap();
            let psi_v: Vec<f64> = (0..61).map(|i| if free[i] { rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
            let psi = GridFunction::new(g, 1, psi_v, Extension::Zero).unwrap();
            let gr = grad_energy_pinned(&q, &v, &p, &free);
            for i in 25..=35 {
                assert_eq!(gr.values()[i], 0.0);
            }
            let tau = 1e-5;
            let fd = (energy_pinned(&q.axpby(1.0, &psi, tau), &v, &p).total
                - energy_pinned(&q.axpby(1.0, &psi, -tau), &v, &p).total)
                / (2.0 * tau);
            let an = dot_h(&gr, &psi);
            assert!(((fd - an) / an).abs() < 1e-5, "{fd} vs {an}");
        }
    }

    #[test]
    fn confined_derivative_matches_central_difference() {
        let g = Grid::new(4.0, 81).unwrap();
        let p = FracParams::new(0.75).unwrap();
        let w = confined_potential("modulated-power", 1, &Params::new()).unwrap();
        let l = confinement_matrix("quadratic-confinement", 1, &Params::new()).unwrap();
        let q = bump(g, 0.3).map(|v| 0.8 * v);
        let phi = GridFunction::from_fn(g, |x| (x * 1.3).sin() * (-x * x / 2.0).exp());
        let tau = 1e-5;
        let fd = (energy_confined(&q.axpby(1.0, &phi, tau), &w, &l, &p).unwrap().total
            - energy_confined(&q.axpby(1.0, &phi, -tau), &w, &l, &p).unwrap().total)
            / (2.0 * tau);
        let an = dirderiv_confined(&q, &phi, &w, &l, &p);
        assert!(((fd - an) / an).abs() < 1e-5, "{fd} vs {an}");
        let sys = ConfinedSystem::new(g, p, w.clone(), l.clone()).unwrap();
        let e = energy_confined(&q, &w, &l, &p).unwrap().total;
        assert!(((sys.energy(q.values()) - e) / e).abs() < 1e-12);
    }

    #[test]
    fn norm_is_homogeneous_and_zero_at_zero() {
        let g = Grid::new(4.0, 81).unwrap();
        let p = FracParams::new(0.5).unwrap();
        let l = confinement_matrix("quadratic-confinement", 1, &Params::new()).unwrap();
        assert_eq!(hs_tilde_norm(&GridFunction::zeros(g, 1), &l, &p).unwrap(), 0.0);
        let q = bump(g, 0.0);
        let a = hs_tilde_norm(&q, &l, &p).unwrap();
        let b = hs_tilde_norm(&q.map(|v| -2.5 * v), &l, &p).unwrap();
        assert!((b - 2.5 * a).abs() <= 1e-12 * b);
    }

    #[test]
    fn divergent_tail_is_reported() {
        let g = Grid::new(4.0, 41).unwrap();
        let l = confinement_matrix("quadratic-confinement", 1, &Params::new()).unwrap();
        let q = bump(g, 0.0).map(|v| v + 0.01).with_extension(Extension::PowerTail { exponent: 1.0 }).unwrap();
        assert!(confinement_integral(&q, &l).is_err());
        let ok = q.with_extension(Extension::PowerTail { exponent: 3.0 }).unwrap();
        assert!(confinement_integral(&ok, &l).is_ok());
    }

    #[test]
    fn interpolation_indicator_equality() {
        let g = Grid::new(2.0, 401).unwrap();
        // indicator of a set of measure one (nodes with |x| < 0.5, 100 nodes at h = 0.01)
        let u = GridFunction::from_fn(g, |x| if x.abs() < 0.4999 { 1.0 } else { 0.0 });
        let rep = interpolation_check(&u, 1.0, 3.0, 0.3).unwrap();
        assert!((rep.lhs - rep.rhs).abs() < 1e-12);
        assert!(interpolation_check(&u, 3.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn interpolation_gaussian_strict() {
        let g = Grid::new(8.0, 1601).unwrap();
        let u = GridFunction::from_fn(g, |x| (-x * x).exp());
        let rep = interpolation_check(&u, 2.0, 4.0, 0.5).unwrap();
        assert_eq!(rep.r, 3.0);
        // closed forms: int e^{-k x^2} = sqrt(pi/k)
        let pi = std::f64::consts::PI;
        let exact_lhs = (pi / 3.0).sqrt();
        let exact_rhs = (pi / 2.0).sqrt().powf(0.5) * (pi / 4.0).sqrt().powf(0.5);
        assert!((rep.lhs - exact_lhs).abs() < 1e-10 && (rep.rhs - exact_rhs).abs() < 1e-10);
        assert!(rep.lhs < rep.rhs && rep.margin > 1e-3);
    }
}
