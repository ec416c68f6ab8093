//! Matrix-free Lanczos with full reorthogonalization for the lowest eigenpairs.

use faer::{Mat, Side};

use crate::qcore::{inner, norm};
use crate::{Error, Result, C64};

pub struct LanczosResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<C64>>,
}

pub struct LanczosOptions {
    pub max_krylov: usize,
    pub tol: f64,
    pub max_restarts: usize,
    pub n_wanted: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions { max_krylov: 240, tol: 1e-11, max_restarts: 30, n_wanted: 2 }
    }
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn tridiag_eigen(alpha: &[f64], beta: &[f64]) -> (Vec<f64>, Mat<f64>) {
    let m = alpha.len();
    let t = Mat::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i == j + 1 {
            beta[j]
        } else if j == i + 1 {
            beta[i]
        } else {
            0.0
        }
    });
    let e = t.self_adjoint_eigen(Side::Lower).expect("tridiagonal eigensolve");
    let s = e.S();
    ((0..m).map(|i| s[i]).collect(), e.U().to_owned())
}

/// Lowest `n_wanted` eigenpairs of the Hermitian map `apply` restricted by `project`.
///
/// `project` must be an orthogonal projector commuting with the operator; it is
/// applied to the start vector and after every product.
pub fn lowest<A, P>(apply: A, project: P, start: Vec<C64>, opts: &LanczosOptions) -> Result<LanczosResult>
where
    A: Fn(&[C64]) -> Vec<C64>,
    P: Fn(&mut [C64]),
{
    let mut v0 = start;
    project(&mut v0);
    let mut nv = norm(&v0);
    if nv < 1e-12 {
        return Err(Error::Convergence { op: "lanczos", message: "start vector vanishes in the sector".into() });
    }
    v0.iter_mut().for_each(|x| *x /= nv);

    let want = opts.n_wanted.max(1);
    let mut locked: Vec<(f64, Vec<C64>)> = Vec::new();
    let mut restart_vec = v0;

    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<C64>> = vec![restart_vec.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let exhausted;
        loop {
            let k = basis.len() - 1;
            let mut w = apply(&basis[k]);
            project(&mut w);
            let a = inner(&basis[k], &w).re;
            alpha.push(a);
            // two passes of Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(q, &w);
                    axpy(&mut w, -c, q);
                }
            }
            let b = norm(&w);
            let m = alpha.len();
            let check = m >= want && (m % 4 == 0 || b < 1e-10 || m >= opts.max_krylov);
            if check {
                let (vals, vecs) = tridiag_eigen(&alpha, &beta);
                let ok = (0..want.min(m)).all(|i| (b * vecs[(m - 1, i)]).abs() <= opts.tol * vals[i].abs().max(1.0));
                if ok || b < 1e-10 || m >= opts.max_krylov {
                    let keep = want.min(m);
                    let ritz: Vec<Vec<C64>> = (0..keep)
                        .map(|i| {
                            let mut x = vec![C64::default(); basis[0].len()];
                            for (j, q) in basis.iter().enumerate() {
                                axpy(&mut x, C64::new(vecs[(j, i)], 0.0), q);
                            }
                            x
                        })
                        .collect();
                    exhausted = b < 1e-10;
                    if ok || exhausted {
                        let mut pairs: Vec<(f64, Vec<C64>)> = vals.into_iter().zip(ritz).collect();
                        for p in &mut pairs {
                            let nn = norm(&p.1);
                            p.1.iter_mut().for_each(|x| *x /= nn);
                        }
                        locked = pairs;
                        break;
                    }
                    // restart from the current ground Ritz vector plus a little of the next one
                    let mut r = ritz[0].clone();
                    if ritz.len() > 1 {
                        axpy(&mut r, C64::new(0.3, 0.0), &ritz[1]);
                    }
                    project(&mut r);
                    nv = norm(&r);
                    r.iter_mut().for_each(|x| *x /= nv);
                    restart_vec = r;
                    locked.clear();
                    break;
                }
            }
            if b < 1e-10 {
                exhausted = true;
                let (vals, vecs) = tridiag_eigen(&alpha, &beta);
                let keep = want.min(alpha.len());
                locked = (0..keep)
                    .map(|i| {
                        let mut x = vec![C64::default(); basis[0].len()];
                        for (j, q) in basis.iter().enumerate() {
                            axpy(&mut x, C64::new(vecs[(j, i)], 0.0), q);
                        }
                        let nn = norm(&x);
                        x.iter_mut().for_each(|y| *y /= nn);
                        (vals[i], x)
                    })
                    .collect();
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        if !locked.is_empty() || exhausted {
            let (values, vectors) = locked.into_iter().unzip();
            return Ok(LanczosResult { values, vectors });
        }
    }
    Err(Error::Convergence { op: "lanczos", message: format!("no convergence after {} restarts", opts.max_restarts) })
}
