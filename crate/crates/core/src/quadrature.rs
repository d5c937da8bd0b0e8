//! One-dimensional rules used to build per-target product quadratures.
//!
//! Kernels with a logarithmic ring singularity are integrated on the
//! preimage square `[0,1]²` in `(s, μ)`. Each axis is split at the target's
//! preimage coordinate and each piece gets a Gauss-Legendre rule graded
//! toward the split point by `u = t^p`.

use crate::special::gauss_legendre;

#[derive(Debug, Clone, PartialEq)]
pub struct Rule1d {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
}

impl Rule1d {
    /// Gauss-Legendre with `n` points on `[a, b]`.
    pub fn gauss(a: f64, b: f64, n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let h = 0.5 * (b - a);
        Self {
            x: x.iter().map(|t| a + h * (t + 1.0)).collect(),
            w: w.iter().map(|w| h * w).collect(),
        }
    }

    /// `n`-point rule on `[a, b]` clustered at `toward` (which must be `a` or `b`).
    pub fn graded(a: f64, b: f64, n: usize, power: f64, toward: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let len = b - a;
        let from_a = toward == a;
        let mut out = Self {
            x: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
        };
        for (xi, wi) in x.iter().zip(&w) {
            let t = 0.5 * (xi + 1.0);
            let u = t.powf(power);
            let du = 0.5 * wi * power * t.powf(power - 1.0);
            out.x.push(if from_a { a + len * u } else { b - len * u });
            out.w.push(len * du);
        }
        if !from_a {
            out.x.reverse();
            out.w.reverse();
        }
        out
    }

    /// `2n` points on `[0, len]`, split at `split` with both pieces graded toward it.
    pub fn split(split: f64, len: f64, n: usize, power: f64) -> Self {
        let tiny = 1e-12 * len;
        if split <= tiny {
            return Self::graded(0.0, len, 2 * n, power, 0.0);
        }
        if split >= len - tiny {
            return Self::graded(0.0, len, 2 * n, power, len);
        }
        let mut left = Self::graded(0.0, split, n, power, split);
        let right = Self::graded(split, len, n, power, split);
        left.x.extend(right.x);
        left.w.extend(right.w);
        left
    }

    /// Like [`Rule1d::split`] but the two pieces next to `split` are mirror
    /// images over a common half-width, so odd singular parts cancel. The
    /// leftover interval is graded toward its end nearest the split.
    pub fn centered(split: f64, len: f64, n: usize, power: f64) -> Self {
        let half = split.min(len - split);
        if half <= 1e-12 * len {
            return Self::split(split, len, n, power);
        }
        let mut out = Self::graded(split - half, split, n, power, split);
        let right = Self::graded(split, split + half, n, power, split);
        out.x.extend(right.x);
        out.w.extend(right.w);
        let rest = len - 2.0 * half;
        if rest > 1e-12 * len {
            let extra = if split + half < len {
                Self::graded(split + half, len, n, 2.0, split + half)
            } else {
                Self::graded(0.0, split - half, n, 2.0, split - half)
            };
            out.x.extend(extra.x);
            out.w.extend(extra.w);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.x.iter().zip(&self.w).map(|(x, w)| w * f(*x)).sum()
    }
}

/// Settings shared by all singular integrals.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct QuadratureSettings {
    /// Gauss points per piece; each axis rule has twice as many.
    pub points: usize,
    /// Grading exponent `p` in `u = t^p`.
    pub grading: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            points: 16,
            grading: 3.0,
        }
    }
}

impl QuadratureSettings {
    /// Enough points to integrate products of the highest radial modes of a
    /// basis with `radial_degree` terms; fewer leave the Jacobian's high
    /// modes under-resolved and its condition number growing with the grid.
    pub fn for_radial_degree(radial_degree: usize) -> Self {
        Self {
            points: (radial_degree + 8).max(16),
            grading: 2.0,
        }
    }

    pub fn rule(&self, split: f64, len: f64) -> Rule1d {
        Rule1d::split(split, len, self.points, self.grading)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_rules_integrate_polynomials() {
        for toward in [0.0, 1.0] {
            let r = Rule1d::graded(0.0, 1.0, 12, 3.0, toward);
            let v = r.integrate(|x| x.powi(5));
            assert!((v - 1.0 / 6.0).abs() < 1e-14);
            assert!(r.x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn split_rule_handles_log_singularity() {
        // ∫₀¹ ln|x - 0.3| dx
        let exact = 0.7 * (0.7f64.ln() - 1.0) + 0.3 * (0.3f64.ln() - 1.0);
        let r = Rule1d::split(0.3, 1.0, 16, 5.0);
        let v = r.integrate(|x| (x - 0.3).abs().ln());
        assert!((v - exact).abs() < 1e-9, "{}", v - exact);
        assert_eq!(r.len(), 32);
    }

    #[test]
    fn split_at_endpoints() {
        for s in [0.0, 1.0] {
            let r = Rule1d::split(s, 1.0, 8, 3.0);
            assert_eq!(r.len(), 16);
            assert!((r.integrate(|x| x * x) - 1.0 / 3.0).abs() < 1e-14);
        }
    }
}
