//! Complete elliptic integrals and orthogonal-polynomial helpers.
//!
//! The elliptic integrals use the parameter convention `m = k²`. Kernel code
//! near coincident points passes the complementary parameter `m1 = 1 - m`
//! directly, which avoids the cancellation in `1 - m` when `m → 1`.

use std::f64::consts::PI;

use crate::error::{Result, StarError};

const AGM_MAX_ITER: usize = 40;

/// Outcome of an arithmetic-geometric mean run: `K(m)`, `E(m)` and the
/// number of iterations used.
#[derive(Debug, Clone, Copy)]
pub struct EllipticPair {
    pub k: f64,
    pub e: f64,
    pub iterations: usize,
}

/// `K(m)` and `E(m)` from the complementary parameter `m1 = 1 - m`.
///
/// `m1` must lie in `(0, 1]`.
pub fn elliptic_ke_complement(m1: f64) -> EllipticPair {
    debug_assert!(m1 > 0.0 && m1 <= 1.0);
    let m = 1.0 - m1;
    let mut a = 1.0_f64;
    let mut b = m1.sqrt();
    // E = K (1 - sum 2^(n-1) c_n^2), c_0^2 = m
    let mut sum = 0.5 * m;
    let mut pow2 = 0.5;
    let mut iterations = 0;
    for _ in 0..AGM_MAX_ITER {
        if (a - b).abs() <= 1e-15 * a {
            break;
        }
        let c = 0.5 * (a - b);
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        pow2 *= 2.0;
        sum += pow2 * c * c;
        iterations += 1;
    }
    let k = PI / (2.0 * a);
    EllipticPair {
        k,
        e: k * (1.0 - sum),
        iterations,
    }
}

/// Complete elliptic integral of the first kind, `K(m) = ∫₀^{π/2} (1 - m sin²t)^{-1/2} dt`.
pub fn elliptic_k(m: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&m) {
        return Err(StarError::Domain(format!(
            "elliptic_k requires 0 <= m < 1, got {m}"
        )));
    }
    Ok(elliptic_ke_complement(1.0 - m).k)
}

/// Complete elliptic integral of the second kind.
pub fn elliptic_e(m: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&m) {
        return Err(StarError::Domain(format!(
            "elliptic_e requires 0 <= m <= 1, got {m}"
        )));
    }
    if m == 1.0 {
        return Ok(1.0);
    }
    Ok(elliptic_ke_complement(1.0 - m).e)
}

/// Number of AGM iterations needed for `K(m)`; exposed for convergence tests.
pub fn agm_iterations(m: f64) -> usize {
    elliptic_ke_complement(1.0 - m).iterations
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// `P_n(x)` and `P_n'(x)` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // P_n'(±1) = (±1)^{n+1} n(n+1)/2
        x.signum().powi(n as i32 + 1) * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Values `P_0(x) .. P_{n}(x)` and their derivatives.
pub fn legendre_table(n: usize, x: f64, p: &mut [f64], dp: &mut [f64]) {
    p[0] = 1.0;
    dp[0] = 0.0;
    if n == 0 {
        return;
    }
    p[1] = x;
    dp[1] = 1.0;
    for k in 2..=n {
        let kf = k as f64;
        p[k] = ((2.0 * kf - 1.0) * x * p[k - 1] - (kf - 1.0) * p[k - 2]) / kf;
        // P_k' = P_{k-2}' + (2k-1) P_{k-1}
        dp[k] = dp[k - 2] + (2.0 * kf - 1.0) * p[k - 1];
    }
}

/// Values `T_0(x) .. T_{n-1}(x)` and derivatives `T_k'(x)`.
pub fn chebyshev_table(n: usize, x: f64, t: &mut [f64], dt: &mut [f64]) {
    if n == 0 {
        return;
    }
    t[0] = 1.0;
    dt[0] = 0.0;
    if n == 1 {
        return;
    }
    t[1] = x;
    dt[1] = 1.0;
    for k in 2..n {
        t[k] = 2.0 * x * t[k - 1] - t[k - 2];
        dt[k] = 2.0 * t[k - 1] + 2.0 * x * dt[k - 1] - dt[k - 2];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Power series K(m) = π/2 Σ [(2n)!/(2^{2n} n!²)]² m^n, summed to convergence.
    fn k_series(m: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for n in 1..2000 {
            let nf = n as f64;
            let c = (2.0 * nf - 1.0) / (2.0 * nf);
            term *= c * c * m;
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        PI / 2.0 * sum
    }

    fn e_series(m: f64) -> f64 {
        let mut coef = 1.0;
        let mut sum = 1.0;
        let mut mp = 1.0;
        for n in 1..4000 {
            let nf = n as f64;
            let c = (2.0 * nf - 1.0) / (2.0 * nf);
            coef *= c * c;
            mp *= m;
            let term = coef * mp / (2.0 * nf - 1.0);
            sum -= term;
            if term < 1e-18 {
                break;
            }
        }
        PI / 2.0 * sum
    }

    #[test]
    fn k_at_zero_is_half_pi() {
        assert_eq!(elliptic_k(0.0).unwrap(), PI / 2.0);
    }

    #[test]
    fn k_matches_series() {
        for &m in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let k = elliptic_k(m).unwrap();
            let s = k_series(m);
            assert!((k - s).abs() < 1e-12 * s, "m={m}: {k} vs {s}");
        }
        // reference value K(1/2) = 1.8540746773013719...
        assert!((elliptic_k(0.5).unwrap() - 1.854_074_677_301_372).abs() < 1e-12);
    }

    #[test]
    fn e_matches_series() {
        for &m in &[0.1, 0.5, 0.8] {
            let e = elliptic_e(m).unwrap();
            assert!((e - e_series(m)).abs() < 1e-12, "m={m}");
        }
        assert_eq!(elliptic_e(1.0).unwrap(), 1.0);
    }

    #[test]
    fn k_rejects_m_at_or_above_one() {
        assert!(elliptic_k(1.0).is_err());
        assert!(elliptic_k(-0.1).is_err());
    }

    #[test]
    fn agm_iteration_count_is_small() {
        let mut worst = 0;
        let mut m = 0.0;
        while m <= 1.0 - 1e-10 {
            worst = worst.max(agm_iterations(m));
            m += 1e-3;
        }
        worst = worst.max(agm_iterations(1.0 - 1e-10));
        assert!(worst <= 8, "AGM needed {worst} iterations");
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in [1usize, 2, 5, 12, 33] {
            let (x, w) = gauss_legendre(n);
            let sum: f64 = w.iter().sum();
            assert!((sum - 2.0).abs() < 1e-13);
            // x^{2n-2} integrates to 2/(2n-1)
            let deg = 2 * n - 2;
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((q - 2.0 / (deg as f64 + 1.0)).abs() < 1e-12, "n={n}");
            assert!(x.windows(2).all(|p| p[0] < p[1]));
        }
    }

    #[test]
    fn recurrence_tables_match_closed_forms() {
        let x = 0.37;
        let mut p = [0.0; 5];
        let mut dp = [0.0; 5];
        legendre_table(4, x, &mut p, &mut dp);
        let p4 = (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0;
        let dp4 = (140.0 * x.powi(3) - 60.0 * x) / 8.0;
        assert!((p[4] - p4).abs() < 1e-15);
        assert!((dp[4] - dp4).abs() < 1e-14);
        let mut t = [0.0; 4];
        let mut dt = [0.0; 4];
        chebyshev_table(4, x, &mut t, &mut dt);
        assert!((t[3] - (4.0 * x.powi(3) - 3.0 * x)).abs() < 1e-15);
        assert!((dt[3] - (12.0 * x * x - 3.0)).abs() < 1e-14);
    }
}
