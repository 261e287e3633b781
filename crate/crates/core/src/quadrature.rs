//! Gauss–Legendre rules on intervals and collapsed-coordinate rules on simplices.

use num_complex::Complex64;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
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
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre integration of a complex-valued integrand over [a, b].
pub fn integrate_complex<F>(a: f64, b: f64, panels: usize, order: usize, f: F) -> Complex64
where
    F: Fn(f64) -> Complex64,
{
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        let mut acc = Complex64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            acc += f(mid + 0.5 * h * xi) * *wi;
        }
        total += acc * (0.5 * h);
    }
    total
}

/// A quadrature point on the reference j-simplex, as barycentric coordinates
/// (length j+1) with a weight; weights sum to 1/j!.
#[derive(Clone, Debug)]
pub struct SimplexPoint {
    pub barycentric: Vec<f64>,
    pub weight: f64,
}

/// Collapsed-coordinate (Duffy) product rule with `m` Gauss points per direction.
/// Exact for polynomials of degree ≤ 2m − 1 on the reference simplex.
pub fn simplex_rule(dim: usize, m: usize) -> Vec<SimplexPoint> {
    if dim == 0 {
        return vec![SimplexPoint {
            barycentric: vec![1.0],
            weight: 1.0,
        }];
    }
    let (x, w) = gauss_legendre(m + dim - 1);
    let u: Vec<f64> = x.iter().map(|xi| 0.5 * (xi + 1.0)).collect();
    let wu: Vec<f64> = w.iter().map(|wi| 0.5 * wi).collect();
    let n = u.len();
    let mut out = Vec::with_capacity(n.pow(dim as u32));
    let mut idx = vec![0usize; dim];
    loop {
        let mut xi = vec![0.0; dim];
        let mut scale = 1.0;
        let mut weight = 1.0;
        for d in 0..dim {
            let ud = u[idx[d]];
            xi[d] = ud * scale;
            weight *= wu[idx[d]];
            if d + 1 < dim {
                weight *= (1.0 - ud).powi((dim - 1 - d) as i32);
            }
            scale *= 1.0 - ud;
        }
        let mut bary = Vec::with_capacity(dim + 1);
        bary.push(1.0 - xi.iter().sum::<f64>());
        bary.extend_from_slice(&xi);
        out.push(SimplexPoint {
            barycentric: bary,
            weight,
        });

        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < n {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == dim {
                return out;
            }
        }
    }
}
