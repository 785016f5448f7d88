//! Scalar root finding and adaptive quadrature.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    NoRootInBracket { a: f64, b: f64, fa: f64, fb: f64 },
    #[error("root finder did not converge in {0} iterations")]
    RootNotConverged(usize),
    #[error("quadrature on [{a}, {b}] reached error {err:e} after {intervals} subintervals")]
    QuadratureFailure { a: f64, b: f64, err: f64, intervals: usize },
    #[error("non-finite value at x = {0}")]
    NonFinite(f64),
}

/// Brent's method on a bracketing interval.
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Result<f64, NumericsError> {
    let (mut a, mut b) = (a, b);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() {
        return Err(NumericsError::NonFinite(a));
    }
    if !fb.is_finite() {
        return Err(NumericsError::NonFinite(b));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(NumericsError::NoRootInBracket { a, b, fa, fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(NumericsError::NonFinite(b));
        }
    }
    Err(NumericsError::RootNotConverged(max_iter))
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64), NumericsError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    if !fc.is_finite() {
        return Err(NumericsError::NonFinite(c));
    }
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let (f1, f2) = (f(c - x), f(c + x));
        if !f1.is_finite() {
            return Err(NumericsError::NonFinite(c - x));
        }
        if !f2.is_finite() {
            return Err(NumericsError::NonFinite(c + x));
        }
        kron += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    Ok((kron * h, ((kron - gauss) * h).abs()))
}

/// Adaptive Gauss-Kronrod (7/15) quadrature. Returns the value and the error estimate.
pub fn quad<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<(f64, f64), NumericsError> {
    const MAX_INTERVALS: usize = 2000;
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&mut f, a, b)?;
    let mut parts = vec![(a, b, v, e)];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(NumericsError::QuadratureFailure { a, b, err, intervals: parts.len() });
        }
        let (k, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, _, _) = parts.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, hi)?;
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn kronrod_weights_sum_to_interval_length() {
        let s: f64 = 2.0 * WGK[..7].iter().sum::<f64>() + WGK[7];
        assert_relative_eq!(s, 2.0, epsilon = 1e-15);
        let g: f64 = 2.0 * WG[..3].iter().sum::<f64>() + WG[3];
        assert_relative_eq!(g, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn brent_finds_cube_root() {
        let r = brent(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 100).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), epsilon = 1e-13);
    }

    #[test]
    fn brent_rejects_bad_bracket() {
        assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 50), Err(NumericsError::NoRootInBracket { .. })));
    }

    #[test]
    fn quad_polynomial_is_exact() {
        let (v, _) = quad(|x| 5.0 * x.powi(4) - 3.0 * x * x, -1.0, 2.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, 33.0 - 9.0, epsilon = 1e-12);
    }

    #[test]
    fn quad_handles_sqrt_endpoint() {
        let (v, _) = quad(|x| x.sqrt(), 0.0, 1.0, 1e-12, 1e-12).unwrap();
        assert_relative_eq!(v, 2.0 / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn quad_reports_divergence() {
        assert!(quad(|x| 1.0 / x, 0.0, 1.0, 1e-12, 1e-12).is_err());
    }

    #[test]
    fn fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 1.5 * v - 0.25).collect();
        let (s, b) = linear_fit(&x, &y);
        assert_relative_eq!(s, 1.5, epsilon = 1e-14);
        assert_relative_eq!(b, -0.25, epsilon = 1e-14);
    }
}
