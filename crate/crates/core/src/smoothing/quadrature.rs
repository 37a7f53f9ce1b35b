use crate::error::{invalid, Error, Result};
use crate::numeric::Matrix;

pub const MAX_QUADRATURE_DIM: usize = 4;
pub const MIN_QUADRATURE_ORDER: usize = 8;

/// Gauss–Hermite rule for the standard normal density.
///
/// Nodes and weights satisfy `Σ w_k g(t_k) ≈ E[g(v)]`, `v ~ N(0, 1)`, exactly
/// for polynomials of degree `< 2 * order`.
pub fn gauss_hermite(order: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on orthonormal physicists' Hermite polynomials,
    // then rescale to the probabilists' weight.
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let inv_sqrt_pi = 1.0 / std::f64::consts::PI.sqrt();
    for (t, w) in nodes.iter_mut().zip(weights.iter_mut()) {
        *t *= sqrt2;
        *w *= inv_sqrt_pi;
    }
    (nodes, weights)
}

/// Tensor-product Gauss–Hermite value of the smoothed objective
/// `h(L, x) = ∫ κ(v) f(L v + x) dv`.
///
/// Test-only reference; it never touches an oracle's call counter.
pub fn smoothed_value_oracle(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    l: &Matrix,
    order: usize,
) -> Result<f64> {
    let d = x.len();
    if d > MAX_QUADRATURE_DIM {
        return Err(Error::QuadratureTooLarge {
            dim: d,
            max: MAX_QUADRATURE_DIM,
        });
    }
    if l.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: l.dim(),
        });
    }
    if order < MIN_QUADRATURE_ORDER {
        return Err(invalid("order", format!("need >= {MIN_QUADRATURE_ORDER}, got {order}")));
    }
    let (nodes, weights) = gauss_hermite(order);
    let total = order.pow(d as u32);
    let mut idx = vec![0usize; d];
    let mut v = vec![0.0; d];
    let mut acc = 0.0;
    for _ in 0..total {
        let mut w = 1.0;
        for k in 0..d {
            v[k] = nodes[idx[k]];
            w *= weights[idx[k]];
        }
        let lv = l.mul_vec(&v);
        let u: Vec<f64> = lv.iter().zip(x).map(|(a, b)| a + b).collect();
        acc += w * f(&u);
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < order {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(acc)
}
