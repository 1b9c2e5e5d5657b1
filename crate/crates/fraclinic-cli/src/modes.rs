use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fraclinic::certify::{build_barrier, degiorgi_verify, eta_sweep, layer_solution};
use fraclinic::frac_ops::FracParams;
use fraclinic::grid::{fmt17, pin_indices, Grid, GridFunction};
use fraclinic::mountain_pass::{mountain_pass, nontriviality_audit, ConfinedProblem, MpOptions};
use fraclinic::pinned::{scaling_experiment, solve_pinned, PinnedOptions, PinnedProblem};
use fraclinic::potentials::{confined_potential, confinement_matrix, pinned_potential, ConfinedPotential, ConfinementMatrix, PinnedPotential};
use fraclinic::{Error, Result};
use serde_json::{json, Value};

use crate::config::Config;
use crate::output::{json17, write_atomic};
use crate::validate;

const POTENTIAL_KEYS: &[&str] = &["name", "ncomp"];

fn catalog_params(name: &str) -> &'static [&'static str] {
    match name {
        "quadratic-well" => &["R"],
        "perturbed-cosine" => &["eps", "delta", "R"],
        "power-W" => &["p"],
        "modulated-power" => &["mu"],
        "pn-perturbed" => &["eps", "p", "mu"],
        "quadratic-confinement" => &["eps"],
        _ => &[],
    }
}

fn name_of<'a>(cfg: &'a Config, section: &str, default: &'a str) -> &'a str {
    cfg.str(section, "name").unwrap_or(default)
}

fn ncomp(cfg: &Config) -> Result<usize> {
    let n = cfg.usize_or("potential", "ncomp", 1)?;
    if n == 0 {
        return Err(Error::InvalidInput("ncomp must be >= 1".into()));
    }
    Ok(n)
}

fn frac(cfg: &Config, default: f64) -> Result<FracParams> {
    FracParams::new(cfg.f64_or("frac", "s", default)?)
}

fn grid(cfg: &Config, x: f64, n: usize) -> Result<Grid> {
    Grid::new(cfg.f64_or("grid", "x", x)?, cfg.usize_or("grid", "n", n)?)
}

fn v_potential(cfg: &Config) -> Result<PinnedPotential> {
    let name = name_of(cfg, "potential", "quadratic-well");
    cfg.check_params("potential", POTENTIAL_KEYS, catalog_params(name))?;
    pinned_potential(name, ncomp(cfg)?, &cfg.params("potential", POTENTIAL_KEYS)?)
}

fn w_potential(cfg: &Config) -> Result<ConfinedPotential> {
    let name = name_of(cfg, "potential", "power-W");
    cfg.check_params("potential", POTENTIAL_KEYS, catalog_params(name))?;
    confined_potential(name, ncomp(cfg)?, &cfg.params("potential", POTENTIAL_KEYS)?)
}

fn l_matrix(cfg: &Config) -> Result<ConfinementMatrix> {
    let name = name_of(cfg, "matrix", "quadratic-confinement");
    cfg.check_params("matrix", &["name"], catalog_params(name))?;
    confinement_matrix(name, ncomp(cfg)?, &cfg.params("matrix", &["name"])?)
}

fn confined_problem(cfg: &Config) -> Result<ConfinedProblem> {
    Ok(ConfinedProblem {
        frac: frac(cfg, 0.75)?,
        potential: w_potential(cfg)?,
        matrix: l_matrix(cfg)?,
        grid: grid(cfg, 8.0, 801)?,
    })
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

struct Artifacts<'a> {
    dir: &'a Path,
}

impl Artifacts<'_> {
    fn write(&self, name: &str, contents: &str) -> Result<()> {
        write_atomic(&self.dir.join(name), contents).map_err(Error::Io)
    }

    fn report(&self, name: &str, mode: &str, seed: u64, cfg: &Config, body: Value) -> Result<()> {
        let v = json!({ "mode": mode, "seed": seed, "config": cfg.echo(), "result": body });
        self.write(name, &json17(&v))
    }
}

/// Dispatches one mode; returns the process exit code on completion.
pub fn run(mode: &str, config_path: &Path, out: &Path, profile: Option<&Path>) -> Result<u8> {
    let text = fs::read_to_string(config_path)?;
    let cfg = Config::parse(&text)?;
    if let Some(m) = cfg.str("", "mode") {
        if m != mode {
            return Err(Error::InvalidInput(format!("config declares mode `{m}` but `{mode}` was requested")));
        }
    }
    let seed = cfg.usize_or("", "seed", 0)? as u64;
    fs::create_dir_all(out)?;
    let art = Artifacts { dir: out };
    match mode {
        "solve-pinned" => solve_pinned_mode(&cfg, seed, &art),
        "solve-confined" => solve_confined_mode(&cfg, seed, &art),
        "layer" => layer_mode(&cfg, seed, &art),
        "certify" => certify_mode(&cfg, seed, &art, profile.ok_or_else(|| Error::InvalidInput("--profile is required".into()))?),
        "validate" => {
            let suites = validate::run_all(seed, cfg.usize_or("validate", "cases", 100)?)?;
            let pass = suites.iter().all(|s| s.pass);
            for s in &suites {
                println!("{} {}: {} cases, {} violations", if s.pass { "PASS" } else { "FAIL" }, s.name, s.cases, s.violations);
            }
            art.report("validate.json", mode, seed, &cfg, json!({ "suites": to_value(&suites), "pass": pass }))?;
            Ok(if pass { 0 } else { 2 })
        }
        "scaling-experiment" => {
            let r = scaling_experiment(
                &frac(&cfg, 0.25)?,
                &v_potential(&cfg)?,
                cfg.f64_or("scaling", "m", 1.0)?,
                &cfg.list_or("scaling", "eps", &[1.0, 0.5, 0.25, 0.125])?,
                &grid(&cfg, 2.0, 4001)?,
            )?;
            println!("slope {:.6}", r.slope);
            art.report("scaling.json", mode, seed, &cfg, to_value(&r))?;
            Ok(0)
        }
        other => Err(Error::InvalidInput(format!("unknown mode `{other}`"))),
    }
}

fn solve_pinned_mode(cfg: &Config, seed: u64, art: &Artifacts) -> Result<u8> {
    let fp = frac(cfg, 0.75)?;
    let v = v_potential(cfg)?;
    let g = grid(cfg, 50.0, 4001)?;
    let pin = pin_indices(&g, cfg.f64_or("pin", "a", -1.0)?, cfg.f64_or("pin", "b", 1.0)?, fp.s)?;
    let nc = v.ncomp;
    let datum = cfg.list_or("pin", "datum", &[1.0])?;
    let datum = match datum.len() {
        1 => vec![datum[0]; nc],
        k if k == nc => datum,
        k => return Err(Error::InvalidInput(format!("datum has {k} values for {nc} components"))),
    };
    let prob = PinnedProblem::new(fp, v, g, pin, move |_| datum.clone(), cfg.f64_or("pin", "alpha", 0.5)?)?;
    let d = PinnedOptions::default();
    let opts = PinnedOptions {
        tol: cfg.f64_or("solver", "tol", d.tol)?,
        max_iter: cfg.usize_or("solver", "max_iter", d.max_iter)?,
        k_cut: cfg.usize_or("solver", "k_cut", d.k_cut)?,
        memory: cfg.usize_or("solver", "memory", d.memory)?,
        seed,
        ..d
    };
    let (q, rep) = solve_pinned(&prob, &opts)?;
    art.write("profile.csv", &q.to_csv())?;
    art.report("report.json", "solve-pinned", seed, cfg, to_value(&rep))?;
    println!("energy {:.10e} residual {:.3e} converged {}", rep.energy, rep.residual, rep.converged);
    Ok(if rep.converged { 0 } else { 2 })
}

fn solve_confined_mode(cfg: &Config, seed: u64, art: &Artifacts) -> Result<u8> {
    let prob = confined_problem(cfg)?;
    let d = MpOptions::default();
    let opts = MpOptions {
        path_nodes: cfg.usize_or("solver", "path_nodes", d.path_nodes)?,
        tol: cfg.f64_or("solver", "tol", d.tol)?,
        max_iter: cfg.usize_or("solver", "max_iter", d.max_iter)?,
        seed,
    };
    let (q, rep) = mountain_pass(&prob, None, &opts)?;
    let audit = nontriviality_audit(&q, &prob.matrix, prob.grid.half_width() / 2.0)?;
    art.write("qcrit.csv", &q.to_csv())?;
    art.report("report.json", "solve-confined", seed, cfg, json!({ "mountain_pass": to_value(&rep), "nontriviality": to_value(&audit) }))?;
    println!("level {:.10e} dual residual {:.3e} converged {}", rep.c_est, rep.dual_residual, rep.converged);
    Ok(if rep.converged { 0 } else { 2 })
}

fn default_layer_box(s: f64) -> (f64, f64) {
    if s < 0.3 {
        (2400.0, 0.2)
    } else {
        (200.0, 0.1)
    }
}

fn layer_mode(cfg: &Config, seed: u64, art: &Artifacts) -> Result<u8> {
    let s = cfg.f64_or("frac", "s", 0.4)?;
    let (x0, h0) = default_layer_box(s);
    let g = Grid::with_spacing(cfg.f64_or("layer", "x", x0)?, cfg.f64_or("layer", "h", h0)?)?;
    let lay = layer_solution(s, &g)?;
    let mut csv = String::from("x,profile,beta\n");
    for i in 0..g.len() {
        let _ = writeln!(csv, "{},{},{}", fmt17(g.x(i)), fmt17(lay.profile.values()[i]), fmt17(lay.beta.values()[i]));
    }
    art.write("layer.csv", &csv)?;
    let body = json!({
        "s": s,
        "x": g.half_width(),
        "n": g.len(),
        "newton_iterations": lay.newton_iterations,
        "residual": lay.residual,
        "min_forward_diff": lay.min_forward_diff,
        "tail_exponent": lay.tail_exponent,
        "a_edge": lay.a_edge(),
        "beta_integral": lay.beta_integral,
    });
    art.report("report.json", "layer", seed, cfg, body)?;
    println!("tail exponent {:.4} a(X) {:.4}", lay.tail_exponent, lay.a_edge());
    Ok(0)
}

fn certify_mode(cfg: &Config, seed: u64, art: &Artifacts, profile: &Path) -> Result<u8> {
    let file = fs::File::open(profile)?;
    let q = GridFunction::from_csv(std::io::BufReader::new(file))?;
    let mut prob = confined_problem(cfg)?;
    prob.grid = *q.grid();
    if q.ncomp() != prob.potential.ncomp {
        return Err(Error::InvalidInput(format!(
            "profile has {} components, potential has {}",
            q.ncomp(),
            prob.potential.ncomp
        )));
    }
    let s = prob.frac.s;
    let dg = degiorgi_verify(&q, s, cfg.f64_or("certify", "t", 4.0)?, cfg.usize_or("certify", "k_max", 30)?)?;
    let mut body = json!({ "degiorgi": to_value(&dg) });
    let mut pass = dg.bound_holds && dg.step0_holds && dg.mu_dg < 1.0;
    if s <= 0.5 {
        let (x0, h0) = default_layer_box(s);
        let lg = Grid::with_spacing(cfg.f64_or("certify", "layer_x", x0)?, cfg.f64_or("certify", "layer_h", h0)?)?;
        let layer = layer_solution(s, &lg)?;
        let a_mult = cfg.f64_or("certify", "a_mult", 2.0)?;
        let etas = cfg.list_or("certify", "eta", &[0.1, 0.01, 0.001])?;
        let cert = build_barrier(&q, &prob, &layer, etas[0], a_mult)?;
        let sweep = eta_sweep(&q, &prob, &layer, a_mult, &etas)?;
        pass &= cert.pass && sweep.iter().all(|&(_, ex)| ex <= 1e-8);
        body["barrier"] = to_value(&cert);
        body["eta_sweep"] = json!(sweep.iter().map(|(e, x)| json!({ "eta": e, "max_excess": x })).collect::<Vec<_>>());
    }
    body["pass"] = json!(pass);
    art.report("certificate.json", "certify", seed, cfg, body)?;
    println!("certified sup bound {:.10e} (measured {:.10e}) pass {pass}", dg.bound, dg.measured_sup);
    Ok(if pass { 0 } else { 2 })
}
