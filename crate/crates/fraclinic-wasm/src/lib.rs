//! Flat `Float64Array` outputs: `n` abscissae followed by one block of `n` values per series.

use fraclinic::certify::layer_solution;
use fraclinic::frac_ops::{frac_laplacian, FracParams};
use fraclinic::grid::{pin_indices, Grid, GridFunction};
use fraclinic::pinned::{solve_pinned, PinnedOptions, PinnedProblem};
use fraclinic::potentials::{pinned_potential, Params};
use wasm_bindgen::prelude::*;

fn js(e: fraclinic::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn pack(g: &Grid, series: &[&[f64]]) -> Vec<f64> {
    let mut out = g.nodes();
    for s in series {
        out.extend_from_slice(s);
    }
    out
}

/// `[x, profile, beta]` of the monotone layer on `[-x_max, x_max]` with spacing `h`.
#[wasm_bindgen]
pub fn layer_profile(s: f64, x_max: f64, h: f64) -> Result<Vec<f64>, JsValue> {
    let g = Grid::with_spacing(x_max, h).map_err(js)?;
    let lay = layer_solution(s, &g).map_err(js)?;
    Ok(pack(&g, &[lay.profile.values(), lay.beta.values()]))
}

fn sample(kind: &str, x: f64) -> Option<f64> {
    Some(match kind {
        "gaussian" => (-x * x).exp(),
        "bump" => {
            if x.abs() < 1.0 {
                (-1.0 / (1.0 - x * x)).exp() * std::f64::consts::E
            } else {
                0.0
            }
        }
        "windowed-cosine" => (-(x / 4.0).powi(8)).exp() * (std::f64::consts::PI * x).cos(),
        "box" => f64::from(u8::from(x.abs() <= 1.0)),
        _ => return None,
    })
}

/// `[x, q, (-Delta)^s q]` for a named test function (`gaussian`, `bump`, `windowed-cosine`, `box`).
#[wasm_bindgen]
pub fn fractional_laplacian(s: f64, kind: &str, x_max: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let p = FracParams::new(s).map_err(js)?;
    let g = Grid::new(x_max, n).map_err(js)?;
    if sample(kind, 0.0).is_none() {
        return Err(JsValue::from_str(&format!("unknown test function `{kind}`")));
    }
    let q = GridFunction::from_fn(g, |x| sample(kind, x).unwrap_or(0.0));
    let lq = frac_laplacian(&q, &p);
    Ok(pack(&g, &[q.values(), lq.values()]))
}

/// `[x, q]` minimizing the pinned energy with `V = -q^2`, `q = datum` on `[a, b]`.
#[wasm_bindgen]
pub fn pinned_profile(s: f64, a: f64, b: f64, datum: f64, x_max: f64, n: usize) -> Result<Vec<f64>, JsValue> {
    let p = FracParams::new(s).map_err(js)?;
    let g = Grid::new(x_max, n).map_err(js)?;
    let v = pinned_potential("quadratic-well", 1, &Params::new()).map_err(js)?;
    let pin = pin_indices(&g, a, b, s).map_err(js)?;
    let prob = PinnedProblem::new(p, v, g, pin, |_| vec![datum], 0.5).map_err(js)?;
    let (q, _) = solve_pinned(&prob, &PinnedOptions::default()).map_err(js)?;
    Ok(pack(&g, &[q.values()]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts() {
        let v = layer_profile(0.5, 20.0, 0.1).unwrap();
        assert_eq!(v.len(), 3 * 401);
        assert_eq!(v[200 + 401], 0.0);
        let v = fractional_laplacian(0.5, "gaussian", 5.0, 101).unwrap();
        assert_eq!(v.len(), 303);
        assert!(v[202 + 50] > 0.0);
        let v = pinned_profile(0.75, -1.0, 1.0, 1.0, 10.0, 201).unwrap();
        assert_eq!(v.len(), 402);
        assert_eq!(v[201 + 100], 1.0);
    }
}
