//! Central tolerance policy. Every check in the crate reads from here.

/// Largest register handled with dense matrices.
pub const DENSE_QUBIT_CAP: usize = 14;
/// Largest register handled by matrix-free ground-state solves.
pub const SPARSE_QUBIT_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub norm: f64,
    pub spectral_cutoff: f64,
    pub fd_step: f64,
    pub derivative_floor: f64,
    pub probability_floor: f64,
    pub eigen_residual: f64,
    pub commutator: f64,
    pub eigenstate: f64,
}

pub const TOL: Tolerances = Tolerances {
    hermiticity: 1e-10,
    trace: 1e-10,
    min_eigenvalue: -1e-10,
    norm: 1e-12,
    spectral_cutoff: 1e-12,
    fd_step: 1e-5,
    derivative_floor: 1e-14,
    probability_floor: 1e-14,
    eigen_residual: 1e-8,
    commutator: 1e-10,
    eigenstate: 1e-8,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const GK_WK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const GK_WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// `(estimate, error, ∫|f|)` on one interval.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * GK_WK[7];
    let mut g = fc * GK_WG[3];
    let mut abs = fc.abs() * GK_WK[7];
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let (l, r) = (f(c - x), f(c + x));
        k += GK_WK[i] * (l + r);
        abs += GK_WK[i] * (l.abs() + r.abs());
        if i % 2 == 1 {
            g += GK_WG[i / 2] * (l + r);
        }
    }
    (k * h, ((k - g) * h).abs(), abs * h.abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut stack = vec![(a, b, tol, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, t, depth)) = stack.pop() {
        let (v, err, mag) = gk15(f, lo, hi);
        // below a few ulps of ∫|f| the error estimate is pure roundoff
        if err <= t.max(50.0 * f64::EPSILON * mag) || depth >= 50 {
            total += v;
        } else {
            let m = 0.5 * (lo + hi);
            stack.push((m, hi, 0.5 * t, depth + 1));
            stack.push((lo, m, 0.5 * t, depth + 1));
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_polynomial_and_singular_slope() {
        let v = integrate(&|x| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-12);
        let s = integrate(&|x: f64| x.sqrt(), 0.0, 1.0, 1e-12);
        assert!((s - 2.0 / 3.0).abs() < 1e-11);
    }
}
