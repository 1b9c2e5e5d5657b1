//! Matrix-free Krylov solvers.

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Preconditioned conjugate gradients for SPD `A`, diagonal preconditioner `diag`.
/// Stops when `||r|| <= tol * ||b||`.
pub fn pcg(apply: impl Fn(&[f64], &mut [f64]), diag: &[f64], b: &[f64], tol: f64, max_iter: usize) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bn = dot(b, b).sqrt();
    if bn == 0.0 {
        return x;
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(diag).map(|(a, d)| a / d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        if dot(&r, &r).sqrt() <= tol * bn {
            break;
        }
        for k in 0..n {
            z[k] = r[k] / diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    x
}

/// Restarted GMRES(m) with right diagonal preconditioning. Returns the solution and the
/// final relative residual.
pub fn gmres(
    apply: impl Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    tol: f64,
    restart: usize,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = b.len();
    let mut x = vec![0.0; n];
    let bn = dot(b, b).sqrt();
    if bn == 0.0 {
        return (x, 0.0);
    }
    let mut tmp = vec![0.0; n];
    let mut rel = 1.0;
    let mut iters = 0;
    while iters < max_iter {
        apply(&x, &mut tmp);
        let r: Vec<f64> = b.iter().zip(&tmp).map(|(a, c)| a - c).collect();
        let beta = dot(&r, &r).sqrt();
        rel = beta / bn;
        if rel <= tol {
            break;
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|a| a / beta).collect()];
        let mut hmat = vec![vec![0.0; restart]; restart + 1];
        let (mut cs, mut sn) = (vec![0.0; restart], vec![0.0; restart]);
        let mut g = vec![0.0; restart + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..restart {
            iters += 1;
            let z: Vec<f64> = v[k].iter().zip(diag).map(|(a, d)| a / d).collect();
            let mut w = vec![0.0; n];
            apply(&z, &mut w);
            for (i, vi) in v.iter().enumerate() {
                let hik = dot(&w, vi);
                hmat[i][k] = hik;
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= hik * vj;
                }
            }
            let hn = dot(&w, &w).sqrt();
            hmat[k + 1][k] = hn;
            for i in 0..k {
                let t = cs[i] * hmat[i][k] + sn[i] * hmat[i + 1][k];
                hmat[i + 1][k] = -sn[i] * hmat[i][k] + cs[i] * hmat[i + 1][k];
                hmat[i][k] = t;
            }
            let den = (hmat[k][k] * hmat[k][k] + hmat[k + 1][k] * hmat[k + 1][k]).sqrt();
            cs[k] = hmat[k][k] / den;
            sn[k] = hmat[k + 1][k] / den;
            hmat[k][k] = den;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            rel = g[k + 1].abs() / bn;
            if rel <= tol || hn == 0.0 || iters >= max_iter {
                break;
            }
            v.push(w.iter().map(|a| a / hn).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= hmat[i][j] * y[j];
            }
            y[i] = acc / hmat[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for k in 0..n {
                x[k] += yj * v[j][k] / diag[k];
            }
        }
        if rel <= tol {
            break;
        }
    }
    (x, rel)
}
