//! Azimuthally reduced Green's function kernels.
//!
//! With `A = p² + q² + dz²` and `B = 2pq`:
//!
//! * `G3(p,q,dz) = ∫₀^{2π} (A - B cos α)^{-1/2} dα = 4K(m)/√S`, the ring
//!   average of `1/|x - y|` in three dimensions;
//! * `K5(p,q,dz) = 4π ∫₀^π sin²α (A - B cos α)^{-3/2} dα`, the integral of
//!   `|X - Y|⁻³` over the 3-sphere of radius `q` in ℝ⁵,
//!
//! where `S = A + B`, `m = 2B/S` and `1 - m = ((p-q)² + dz²)/S`.

use std::f64::consts::PI;

use crate::error::{Result, StarError};
use crate::special::elliptic_ke_complement;

/// Normalization of the five-dimensional fundamental solution,
/// `Δ₅ (C₅ |X|⁻³) = δ`.
pub const C5: f64 = -1.0 / (8.0 * PI * PI);

/// Below this parameter the closed forms lose digits to cancellation and the
/// periodic trapezoid rule is used instead.
const SMALL_M: f64 = 0.5;
const TRAPEZOID_PANELS: usize = 24;

/// Kernel value with derivatives in `A` and `B`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelAB {
    pub value: f64,
    pub d_a: f64,
    pub d_b: f64,
}

impl KernelAB {
    /// `(p ∂_p + z_t ∂_{z_t}) K` with `dz = z_t ∓ y`.
    #[inline]
    pub fn target_scaling(&self, p: f64, q: f64, zt: f64, dz: f64) -> f64 {
        2.0 * (p * p + zt * dz) * self.d_a + 2.0 * p * q * self.d_b
    }

    /// `(q ∂_q + y ∂_y) K` for `dz = z_t - y`; pass `-y` for the mirror image.
    #[inline]
    pub fn source_scaling(&self, p: f64, q: f64, y: f64, dz: f64) -> f64 {
        2.0 * (q * q - y * dz) * self.d_a + 2.0 * p * q * self.d_b
    }

    /// `∂K/∂p` and `∂K/∂z_t`.
    #[inline]
    pub fn target_gradient(&self, p: f64, q: f64, dz: f64) -> (f64, f64) {
        (2.0 * p * self.d_a + 2.0 * q * self.d_b, 2.0 * dz * self.d_a)
    }
}

/// Both kernels at one source-target pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelPair {
    pub g3: KernelAB,
    pub k5: KernelAB,
}

/// `G3` and `K5` with first derivatives. Returns infinities for coincident points.
#[inline]
pub fn kernel_pair(p: f64, q: f64, dz: f64) -> KernelPair {
    let a = p * p + q * q + dz * dz;
    let b = 2.0 * p * q;
    let s = a + b;
    let d = (p - q) * (p - q) + dz * dz;
    if d == 0.0 {
        let inf = KernelAB {
            value: f64::INFINITY,
            d_a: f64::NEG_INFINITY,
            d_b: f64::INFINITY,
        };
        return KernelPair { g3: inf, k5: inf };
    }
    let m = 2.0 * b / s;
    if m < SMALL_M {
        trapezoid_pair(a, b)
    } else {
        closed_pair(a, b, s, d / s)
    }
}

fn trapezoid_pair(a: f64, b: f64) -> KernelPair {
    // even periodic integrands: the trapezoid rule on [0, π] is spectrally accurate
    let n = TRAPEZOID_PANELS;
    let h = PI / n as f64;
    let mut j1 = 0.0;
    let mut j3 = 0.0;
    let mut j3c = 0.0;
    let mut i3 = 0.0;
    let mut i5 = 0.0;
    let mut i5c = 0.0;
    for k in 0..=n {
        let al = k as f64 * h;
        let (sn, c) = al.sin_cos();
        let w = if k == 0 || k == n { 0.5 * h } else { h };
        let base = a - b * c;
        let r1 = 1.0 / base.sqrt();
        let r3 = r1 / base;
        let r5 = r3 / base;
        let s2 = sn * sn;
        j1 += w * r1;
        j3 += w * r3;
        j3c += w * c * r3;
        i3 += w * s2 * r3;
        i5 += w * s2 * r5;
        i5c += w * s2 * c * r5;
    }
    KernelPair {
        g3: KernelAB {
            value: 2.0 * j1,
            d_a: -j3,
            d_b: j3c,
        },
        k5: KernelAB {
            value: 4.0 * PI * i3,
            d_a: -6.0 * PI * i5,
            d_b: 6.0 * PI * i5c,
        },
    }
}

fn closed_pair(a: f64, b: f64, s: f64, m1: f64) -> KernelPair {
    let m = 1.0 - m1;
    let ke = elliptic_ke_complement(m1);
    let (k, e) = (ke.k, ke.e);
    let dk = (e - m1 * k) / (2.0 * m * m1);
    let de = (e - k) / (2.0 * m);
    let m_a = -m / s;
    let m_b = (2.0 - m) / s;
    let rs = 1.0 / s.sqrt();
    let rs3 = rs / s;

    let g3 = KernelAB {
        value: 4.0 * k * rs,
        d_a: 4.0 * dk * m_a * rs - 2.0 * k * rs3,
        d_b: 4.0 * dk * m_b * rs - 2.0 * k * rs3,
    };

    // I = 4 (A K - S E) / (B² √S)
    let f = a * k - s * e;
    let g = a * dk - s * de;
    let f_a = k - e + g * m_a;
    let f_b = g * m_b - e;
    let pre = 4.0 / (b * b);
    let i = pre * rs * f;
    let i_a = pre * (-0.5 * rs3 * f + rs * f_a);
    let i_b = pre * (-0.5 * rs3 * f + rs * f_b) - 2.0 * i / b;
    KernelPair {
        g3,
        k5: KernelAB {
            value: 4.0 * PI * i,
            d_a: 4.0 * PI * i_a,
            d_b: 4.0 * PI * i_b,
        },
    }
}

/// `G3(p, q, dz)`.
pub fn g3_kernel(p: f64, q: f64, dz: f64) -> f64 {
    kernel_pair(p, q, dz).g3.value
}

/// `K5(p, q, dz)` by the fast route.
pub fn k5_kernel(p: f64, q: f64, dz: f64) -> f64 {
    kernel_pair(p, q, dz).k5.value
}

/// `K5(p, q, dz)` by adaptive quadrature of its defining integral.
///
/// Used as the reference for the fast route.
pub fn linv_kernel(p: f64, q: f64, dz: f64) -> Result<f64> {
    let a = p * p + q * q + dz * dz;
    let b = 2.0 * p * q;
    if (p - q).abs() + dz.abs() == 0.0 {
        return Err(StarError::Domain(format!(
            "coincident source and target at p = q = {p}, dz = 0"
        )));
    }
    let f = |al: f64| {
        let (sn, c) = al.sin_cos();
        4.0 * PI * sn * sn * (a - b * c).powf(-1.5)
    };
    Ok(adaptive_simpson(&f, 0.0, PI, 1e-12, 60))
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let c = 0.5 * (a + b);
    let fc = f(c);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    let scale = whole.abs().max(1e-300);
    simpson_step(f, a, b, fa, fb, fc, whole, tol * scale, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let c = 0.5 * (a + b);
    let d = 0.5 * (a + c);
    let e = 0.5 * (c + b);
    let fd = f(d);
    let fe = f(e);
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, 0.5 * tol, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, 0.5 * tol, depth - 1)
}
