//! Quadrature on the reference triangle (0,0),(1,0),(0,1) and the unit
//! interval.

use crate::error::{Result, WgError};

pub const MAX_DEGREE: usize = 6;

/// Points are barycentric `(l0, l1, l2)` with the reference coordinates
/// `xhat = (l1, l2)`. Weights sum to the reference area 1/2.
#[derive(Clone, Debug)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    pub fn reference_points(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, &w)| ([p[1], p[2]], w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Points in `[0, 1]`, weights summing to 1.
#[derive(Clone, Debug)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Rule exact for polynomials of total degree `<= degree` on the triangle.
pub fn quadrature(degree: usize) -> Result<QuadratureRule> {
    let third = 1.0 / 3.0;
    let (points, weights) = match degree {
        0 | 1 => (vec![[third; 3]], vec![0.5]),
        2 => {
            let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
            (vec![[a, b, b], [b, a, b], [b, b, a]], vec![1.0 / 6.0; 3])
        }
        d if d <= MAX_DEGREE => collapsed_rule(d),
        d => return Err(WgError::UnsupportedDegree(d)),
    };
    Ok(QuadratureRule {
        points,
        weights,
        degree,
    })
}

/// Gauss-Legendre rule on `[0, 1]` exact up to `degree`.
pub fn edge_quadrature(degree: usize) -> Result<EdgeRule> {
    if degree > MAX_DEGREE {
        return Err(WgError::UnsupportedDegree(degree));
    }
    let n = degree / 2 + 1;
    let (points, weights) = gauss_legendre_unit(n);
    Ok(EdgeRule {
        points,
        weights,
        degree,
    })
}

// Duffy collapse x = u, y = (1 - u) v: a degree-p integrand becomes degree
// p + 1 in u (with the Jacobian) and p in v.
fn collapsed_rule(degree: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let n = (degree + 2).div_ceil(2);
    let (gp, gw) = gauss_legendre_unit(n);
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (&u, &wu) in gp.iter().zip(&gw) {
        for (&v, &wv) in gp.iter().zip(&gw) {
            let x = u;
            let y = (1.0 - u) * v;
            points.push([1.0 - x - y, x, y]);
            weights.push(wu * wv * (1.0 - u));
        }
    }
    (points, weights)
}

fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut points = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        // map [-1,1] -> [0,1]
        points[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (points, weights)
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
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

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Closed form of the integral of x^a y^b over the reference triangle.
    fn exact_monomial(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn degree_zero_is_centroid() {
        let q = quadrature(0).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q.weights[0], 0.5);
        assert_eq!(q.points[0], [1.0 / 3.0; 3]);
    }

    #[test]
    fn known_integrals() {
        let q = quadrature(2).unwrap();
        let v: f64 = q.reference_points().map(|(p, w)| w * p[0] * p[0]).sum();
        assert!((v - 1.0 / 12.0).abs() < 1e-15);
        let q = quadrature(4).unwrap();
        let v: f64 = q
            .reference_points()
            .map(|(p, w)| w * p[0] * p[0] * p[1] * p[1])
            .sum();
        assert!((v - 1.0 / 180.0).abs() < 1e-15);
    }

    #[test]
    fn triangle_rules_are_exact() {
        for degree in 0..=MAX_DEGREE {
            let q = quadrature(degree).unwrap();
            let total: f64 = q.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-15);
            for p in q.points.iter() {
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let v: f64 = q
                        .reference_points()
                        .map(|(p, w)| w * p[0].powi(a as i32) * p[1].powi(b as i32))
                        .sum();
                    let exact = exact_monomial(a, b);
                    assert!(
                        (v - exact).abs() < 1e-14,
                        "degree {degree}: x^{a} y^{b} gave {v}, expected {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_rules_are_exact() {
        for degree in 0..=MAX_DEGREE {
            let q = edge_quadrature(degree).unwrap();
            for a in 0..=degree as i32 {
                let v: f64 = q
                    .points
                    .iter()
                    .zip(&q.weights)
                    .map(|(t, w)| w * t.powi(a))
                    .sum();
                assert!((v - 1.0 / (a as f64 + 1.0)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unsupported_degree() {
        assert!(matches!(quadrature(7), Err(WgError::UnsupportedDegree(7))));
        assert!(edge_quadrature(9).is_err());
    }
}
