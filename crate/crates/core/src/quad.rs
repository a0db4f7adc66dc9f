//! Gauss-Legendre rules and adaptive Simpson integration.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("adaptive quadrature on [{a}, {b}] did not reach tolerance {tol} (error estimate {estimate})")]
pub struct QuadError {
    pub a: f64,
    pub b: f64,
    pub tol: f64,
    pub estimate: f64,
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "a Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Integral of `f` over `[a, b]` with the `n`-point Gauss-Legendre rule.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter().zip(&w).map(|(&xi, &wi)| wi * f(mid + half * xi)).sum::<f64>() * half
}

/// Values that adaptive Simpson can integrate: scalars and fixed or
/// variable-length vectors.
pub trait Integrand: Clone {
    fn combine(&self, wa: f64, other: &Self, wb: f64) -> Self;
    fn max_abs(&self) -> f64;
}

impl Integrand for f64 {
    fn combine(&self, wa: f64, other: &Self, wb: f64) -> Self {
        wa * self + wb * other
    }

    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl<const N: usize> Integrand for [f64; N] {
    fn combine(&self, wa: f64, other: &Self, wb: f64) -> Self {
        std::array::from_fn(|i| wa * self[i] + wb * other[i])
    }

    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Integrand for Vec<f64> {
    fn combine(&self, wa: f64, other: &Self, wb: f64) -> Self {
        self.iter().zip(other).map(|(x, y)| wa * x + wb * y).collect()
    }

    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

fn sum3<T: Integrand>(x: &T, wx: f64, y: &T, wy: f64, z: &T, wz: f64) -> T {
    x.combine(wx, y, wy).combine(1.0, z, wz)
}

struct Simpson<'f, T, F: Fn(f64) -> T> {
    f: &'f F,
    max_depth: u32,
    worst: f64,
}

impl<T: Integrand, F: Fn(f64) -> T> Simpson<'_, T, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(&mut self, a: f64, b: f64, fa: &T, fm: &T, fb: &T, whole: &T, tol: f64, depth: u32) -> T {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let h = (b - a) / 12.0;
        let left = sum3(fa, h, &flm, 4.0 * h, fm, h);
        let right = sum3(fm, h, &frm, 4.0 * h, fb, h);
        let both = left.combine(1.0, &right, 1.0);
        let diff = both.combine(1.0, whole, -1.0);
        let err = diff.max_abs() / 15.0;
        if err <= tol || depth >= self.max_depth || m <= a || m >= b {
            if err > tol {
                self.worst = self.worst.max(err);
            }
            return both.combine(1.0, &diff, 1.0 / 15.0);
        }
        let l = self.recurse(a, m, fa, &flm, fm, &left, 0.5 * tol, depth + 1);
        let r = self.recurse(m, b, fm, &frm, fb, &right, 0.5 * tol, depth + 1);
        l.combine(1.0, &r, 1.0)
    }
}

/// Adaptive Simpson with Richardson correction and absolute tolerance `tol`
/// on every component.
pub fn adaptive_simpson<T: Integrand>(
    f: impl Fn(f64) -> T,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<T, QuadError> {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = sum3(&fa, (b - a) / 6.0, &fm, 4.0 * (b - a) / 6.0, &fb, (b - a) / 6.0);
    let mut state = Simpson {
        f: &f,
        max_depth,
        worst: 0.0,
    };
    let value = state.recurse(a, b, &fa, &fm, &fb, &whole, tol, 0);
    if state.worst > tol {
        return Err(QuadError {
            a,
            b,
            tol,
            estimate: state.worst,
        });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in [1, 2, 5, 16, 64] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for d in 0..(2 * n).min(40) {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(d as i32)).sum();
                assert!((approx - exact).abs() < 1e-12, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn gl_matches_known_integral() {
        let v = integrate_gl(|x| x.exp(), 0.0, 1.0, 10);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn simpson_scalar_and_vector() {
        let v = adaptive_simpson(|x: f64| x.sin(), 0.0, PI, 1e-12, 50).unwrap();
        assert!((v - 2.0).abs() < 1e-11);
        let v = adaptive_simpson(|x: f64| [x, x * x, (-x).exp()], 0.0, 2.0, 1e-12, 50).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-11 && (v[1] - 8.0 / 3.0).abs() < 1e-11);
        assert!((v[2] - (1.0 - (-2f64).exp())).abs() < 1e-11);
        let v = adaptive_simpson(|x: f64| vec![x.sqrt()], 0.0, 1.0, 1e-10, 60).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn simpson_reports_failure() {
        let r = adaptive_simpson(|x: f64| if x < 0.3 { 0.0 } else { 1.0 / (x - 0.3).max(1e-300).sqrt() }, 0.0, 1.0, 1e-14, 6);
        assert!(r.is_err());
    }
}
