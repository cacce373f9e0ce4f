//! Quartic Lagrange weights on five equispaced nodes and their tensor-product
//! (biquartic) evaluation on 5×5 stencils.
//!
//! A 1D stencil has nodes `x_0 + p h`, `p = 0..4`; the evaluation point is
//! `x_0 + theta h`. Values on a 5×5 stencil are stored as `values[p + 5 q]`
//! with `p` along the stencil's x direction and `q` along its y direction.

/// Stencil offsets further than this from `[0, 4]` are outside the trust region.
pub const THETA_TRUST: f64 = 4.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Value,
    Derivative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticWeights {
    pub theta: f64,
    pub c: [f64; 5],
    pub kind: WeightKind,
}

impl QuarticWeights {
    /// `sum_p c_p g_p`; for derivative weights the result still needs `1/h`.
    pub fn apply(&self, g: &[f64; 5]) -> f64 {
        self.c.iter().zip(g).map(|(c, v)| c * v).sum()
    }
}

pub fn quartic_value_weights(theta: f64) -> QuarticWeights {
    let t = theta;
    let (a, b, c, d) = (t - 1.0, t - 2.0, t - 3.0, t - 4.0);
    QuarticWeights {
        theta,
        c: [
            d * c * b * a / 24.0,
            -d * c * b * t / 6.0,
            d * c * a * t / 4.0,
            -d * b * a * t / 6.0,
            c * b * a * t / 24.0,
        ],
        kind: WeightKind::Value,
    }
}

pub fn quartic_derivative_weights(theta: f64) -> QuarticWeights {
    let t = theta;
    let t2 = t * t;
    let t3 = t2 * t;
    QuarticWeights {
        theta,
        c: [
            (2.0 * t - 5.0) * (5.0 - 5.0 * t + t2) / 12.0,
            (24.0 - 52.0 * t + 27.0 * t2 - 4.0 * t3) / 6.0,
            (t - 2.0) * (3.0 - 8.0 * t + 2.0 * t2) / 2.0,
            (8.0 - 28.0 * t + 21.0 * t2 - 4.0 * t3) / 6.0,
            (2.0 * t - 3.0) * (1.0 - 3.0 * t + t2) / 12.0,
        ],
        kind: WeightKind::Derivative,
    }
}

/// Outer product `wx[p] * wy[q]` laid out as `[p + 5 q]`.
pub fn tensor(wx: &[f64; 5], wy: &[f64; 5]) -> [f64; 25] {
    let mut out = [0.0; 25];
    for q in 0..5 {
        for p in 0..5 {
            out[p + 5 * q] = wx[p] * wy[q];
        }
    }
    out
}

fn contract(values: &[f64; 25], wx: &[f64; 5], wy: &[f64; 5]) -> f64 {
    let mut acc = 0.0;
    for q in 0..5 {
        let row: f64 = (0..5).map(|p| wx[p] * values[p + 5 * q]).sum();
        acc += wy[q] * row;
    }
    acc
}

pub fn biquartic_eval(values: &[f64; 25], theta_x: f64, theta_y: f64) -> f64 {
    contract(
        values,
        &quartic_value_weights(theta_x).c,
        &quartic_value_weights(theta_y).c,
    )
}

/// Physical gradient of the biquartic interpolant on an upwind stencil with
/// direction signs `signs` and node steps `steps` (in cells).
pub fn biquartic_grad(
    values: &[f64; 25],
    theta_x: f64,
    theta_y: f64,
    signs: (f64, f64),
    steps: (usize, usize),
    h: f64,
) -> (f64, f64) {
    let vx = quartic_value_weights(theta_x).c;
    let vy = quartic_value_weights(theta_y).c;
    let dx = quartic_derivative_weights(theta_x).c;
    let dy = quartic_derivative_weights(theta_y).c;
    (
        signs.0 / (steps.0 as f64 * h) * contract(values, &dx, &vy),
        signs.1 / (steps.1 as f64 * h) * contract(values, &vx, &dy),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lagrange(theta: f64, p: usize) -> f64 {
        (0..5)
            .filter(|&q| q != p)
            .map(|q| (theta - q as f64) / (p as f64 - q as f64))
            .product()
    }

    #[test]
    fn value_weights_examples() {
        assert_eq!(quartic_value_weights(0.0).c, [1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(quartic_value_weights(2.0).c, [0.0, 0.0, 1.0, 0.0, 0.0]);
        let expected = [0.2734375, 1.09375, -0.546875, 0.21875, -0.0390625];
        let w = quartic_value_weights(0.5).c;
        for p in 0..5 {
            assert!((w[p] - expected[p]).abs() < 1e-15);
            assert!((w[p] - lagrange(0.5, p)).abs() < 1e-15);
        }
    }

    #[test]
    fn derivative_weights_examples() {
        let w3 = quartic_derivative_weights(3.0).c;
        let expect3 = [-1.0, 6.0, -18.0, 10.0, 3.0];
        for p in 0..5 {
            assert_eq!(w3[p] * 12.0, expect3[p]);
        }
        let w0 = quartic_derivative_weights(0.0).c;
        let expect0 = [-25.0 / 12.0, 4.0, -3.0, 4.0 / 3.0, -0.25];
        for p in 0..5 {
            assert!((w0[p] - expect0[p]).abs() < 1e-14);
        }
        let w2 = quartic_derivative_weights(2.0).c;
        let central = [1.0, -8.0, 0.0, 8.0, -1.0];
        for p in 0..5 {
            assert!((w2[p] * 12.0 - central[p]).abs() < 1e-14);
        }
    }

    #[test]
    fn nodal_exactness_and_partition() {
        for q in 0..5 {
            let w = quartic_value_weights(q as f64).c;
            for (p, v) in w.iter().enumerate() {
                assert_eq!(*v, if p == q { 1.0 } else { 0.0 });
            }
        }
        for t in [-0.7, 0.3, 1.9, 4.4] {
            let s: f64 = quartic_value_weights(t).c.iter().sum();
            assert!((s - 1.0).abs() < 1e-13);
            let d: f64 = quartic_derivative_weights(t).c.iter().sum();
            assert!(d.abs() < 1e-13);
        }
    }

    #[test]
    fn c0_vanishes_at_one() {
        assert!(quartic_value_weights(1.0).c[0].abs() < 1e-15);
        assert!(quartic_value_weights(0.5).c[0].abs() > 0.27);
    }

    #[test]
    fn biquartic_simple_cases() {
        let ones = [3.0; 25];
        assert!((biquartic_eval(&ones, 0.37, 2.9) - 3.0).abs() < 1e-13);
        let mut vals = [0.0; 25];
        for (k, v) in vals.iter_mut().enumerate() {
            *v = k as f64 * 1.5 - 4.0;
        }
        assert_eq!(biquartic_eval(&vals, 1.0, 2.0), vals[1 + 5 * 2]);
    }

    #[test]
    fn gradient_of_linear_is_exact() {
        // u = x + 2y on a stencil anchored at (0.2, -0.1), signs (-1, +1), steps (2, 1)
        let (h, x0, y0) = (0.05, 0.2, -0.1);
        let (sx, sy, rx, ry) = (-1.0, 1.0, 2, 1);
        let mut vals = [0.0; 25];
        for q in 0..5 {
            for p in 0..5 {
                let x = x0 + sx * (rx * p) as f64 * h;
                let y = y0 + sy * (ry * q) as f64 * h;
                vals[p + 5 * q] = x + 2.0 * y;
            }
        }
        let (gx, gy) = biquartic_grad(&vals, 0.3, 1.7, (sx, sy), (rx, ry), h);
        assert!((gx - 1.0).abs() < 1e-12);
        assert!((gy - 2.0).abs() < 1e-12);
    }
}
