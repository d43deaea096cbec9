//! One-dimensional rules and small helpers shared by the geometric and
//! space-time quadratures.

use std::f64::consts::PI;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the n-point rule by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one node");
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
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| (mid + half * x, half * w)).collect()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        self.on_interval(a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss rule: `n` nodes on each sub-interval of `breaks`.
pub fn composite(breaks: &[f64], n: usize) -> Vec<(f64, f64)> {
    let rule = GaussRule::new(n);
    breaks.windows(2).filter(|w| w[1] > w[0]).flat_map(|w| rule.on_interval(w[0], w[1])).collect()
}

/// Periodic trapezoid rule on [0, 2π) with `n` equispaced nodes.
pub fn periodic(n: usize) -> Vec<(f64, f64)> {
    let w = 2.0 * PI / n as f64;
    (0..n).map(|k| (k as f64 * w, w)).collect()
}

/// Refined order used for error estimates: one step of ×1.5.
pub fn refined(order: usize) -> usize {
    (order * 3).div_ceil(2).max(order + 1)
}

/// Fixed-order sum of `f64` values (bit-reproducible).
pub fn ordered_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    values.into_iter().fold(0.0, |acc, v| acc + v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_rules() {
        let r = GaussRule::new(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((r.nodes[0] + x).abs() < 1e-15 && (r.nodes[1] - x).abs() < 1e-15);
        assert!((r.weights[0] - 1.0).abs() < 1e-15);
        let r = GaussRule::new(3);
        assert_eq!(r.nodes[1], 0.0);
        assert!((r.weights[1] - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn polynomial_exactness() {
        for n in [1usize, 4, 9, 32, 48] {
            let r = GaussRule::new(n);
            for deg in 0..(2 * n) {
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                let got = r.integrate(-1.0, 1.0, |x| x.powi(deg as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} deg={deg} got={got}");
            }
        }
    }

    #[test]
    fn weights_sum_and_ordering() {
        let r = GaussRule::new(40);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(r.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(r.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn composite_and_periodic() {
        let pts = composite(&[0.0, 0.5, 2.0], 6);
        let s: f64 = pts.iter().map(|(x, w)| w * x.exp()).sum();
        assert!((s - (2f64.exp() - 1.0)).abs() < 1e-12);
        let s: f64 = periodic(16).iter().map(|(x, w)| w * x.cos().powi(2)).sum();
        assert!((s - PI).abs() < 1e-13);
    }
}
