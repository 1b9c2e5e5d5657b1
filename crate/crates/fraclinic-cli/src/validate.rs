//! Randomized property suites behind `validate`.

use fraclinic::certify::positive_part_membership;
use fraclinic::energy::{dirderiv_confined, energy_confined, hs_tilde_norm, interpolation_check};
use fraclinic::frac_ops::{gagliardo_sq, FracParams};
use fraclinic::grid::{Extension, Grid, GridFunction};
use fraclinic::pinned::bootstrap_exponents;
use fraclinic::potentials::{confined_potential, confinement_matrix, cutoff_tr, ConfinementMatrix, Params};
use fraclinic::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct Suite {
    pub name: &'static str,
    pub cases: usize,
    pub violations: usize,
    pub pass: bool,
}

fn suite(name: &'static str, cases: usize, violations: usize) -> Suite {
    Suite { name, cases, violations, pass: violations == 0 }
}

fn random_profile(g: Grid, rng: &mut ChaCha8Rng) -> GridFunction {
    let n = g.len();
    if rng.gen_bool(0.5) {
        let vals = (0..n).map(|i| if i == 0 || i + 1 == n { 0.0 } else { rng.gen_range(-2.0..2.0) }).collect();
        return GridFunction::new(g, 1, vals, Extension::Zero).expect("finite values");
    }
    let (a, c, w) = (rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.3..1.2));
    let edge = g.half_width();
    GridFunction::from_fn(g, move |x| a * (-((x - c) / w).powi(2)).exp() * (1.0 - (x / edge).powi(2)).powi(2))
}

pub fn run_all(seed: u64, cases: usize) -> Result<Vec<Suite>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Grid::new(3.0, 61)?;
    let l = confinement_matrix("quadratic-confinement", 1, &Params::new())?;
    let w = confined_potential("modulated-power", 1, &Params::new())?;
    let (mut cut, mut tri, mut hom, mut interp, mut pos, mut grad, mut emb) = (0, 0, 0, 0, 0, 0, 0);
    let l2 = ConfinementMatrix::scalar("shifted-quadratic", 1, 2.0, |x| 2.0 + x * x);
    let (p1, p2) = (FracParams::new(0.3)?, FracParams::new(0.6)?);
    for _ in 0..cases {
        let p = FracParams::new(rng.gen_range(0.05..0.95))?;
        let a = random_profile(g, &mut rng);
        let b = random_profile(g, &mut rng);
        let sq = gagliardo_sq(&a, &p);
        if gagliardo_sq(&cutoff_tr(&a, rng.gen_range(0.05..2.0)), &p) > sq * (1.0 + 1e-12) {
            cut += 1;
        }
        let (na, nb) = (hs_tilde_norm(&a, &l, &p)?, hs_tilde_norm(&b, &l, &p)?);
        if hs_tilde_norm(&a.axpby(1.0, &b, 1.0), &l, &p)? > (na + nb) * (1.0 + 1e-12) {
            tri += 1;
        }
        let lam: f64 = rng.gen_range(-3.0..3.0);
        if (hs_tilde_norm(&a.map(|v| lam * v), &l, &p)? - lam.abs() * na).abs() > 1e-12 * na * lam.abs().max(1.0) {
            hom += 1;
        }
        let pe = rng.gen_range(1.0..3.0);
        if !interpolation_check(&a, pe, pe + rng.gen_range(0.1..3.0), rng.gen_range(0.05..0.95))?.pass {
            interp += 1;
        }
        let r = positive_part_membership(&a, &l, &p, rng.gen_range(0.01..1.0))?;
        if !(r.contraction && r.confinement_bound) {
            pos += 1;
        }
        let tau = 1e-5;
        let fd = (energy_confined(&a.axpby(1.0, &b, tau), &w, &l, &p)?.total
            - energy_confined(&a.axpby(1.0, &b, -tau), &w, &l, &p)?.total)
            / (2.0 * tau);
        let an = dirderiv_confined(&a, &b, &w, &l, &p);
        if (fd - an).abs() > 1e-5 * an.abs().max(1e-2) {
            grad += 1;
        }
        let smooth = GridFunction::from_fn(g, {
            let (c, wd) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.4..1.2));
            move |x| (-((x - c) / wd).powi(2)).exp() * (1.0 - (x / 3.0).powi(2)).powi(3)
        });
        if hs_tilde_norm(&smooth, &l2, &p1)?.powi(2) > 1.5 * hs_tilde_norm(&smooth, &l2, &p2)?.powi(2) {
            emb += 1;
        }
    }
    let boot = bootstrap_exponents(0.4, 0.5, 0.4)?;
    let boot_bad = usize::from(!(boot.crossed_at == Some(2) && boot.limit == 1.6));
    Ok(vec![
        suite("cutoff monotonicity", cases, cut),
        suite("norm triangle inequality", cases, tri),
        suite("norm homogeneity", cases, hom),
        suite("interpolation inequality", cases, interp),
        suite("positive-part contraction", cases, pos),
        suite("confined gradient", cases, grad),
        suite("embedding (0.3, 0.6)", cases, emb),
        suite("bootstrap arithmetic", 1, boot_bad),
    ])
}
