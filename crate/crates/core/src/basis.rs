//! Axisymmetric, equatorially even fields on the closed unit ball.
//!
//! A field is stored as `f(s, μ) = s² Σ a_{l,m} T_m(2s² - 1) P_{2l}(μ)`, so
//! `f(0) = 0`, evenness in `x₃` and axisymmetry hold for any coefficients.
//! Throughout, `η = f/s²` is the smooth quotient; for a deformation it equals
//! `λ - 1` where `λ` is the radial scaling of the map.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StarError};
use crate::special::{chebyshev_table, gauss_legendre, legendre_table};

/// Sizes of the tensor basis: `radial_degree` Chebyshev terms times
/// `l_modes` even Legendre terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Basis {
    pub radial_degree: usize,
    pub l_modes: usize,
}

impl Basis {
    pub fn new(radial_degree: usize, l_modes: usize) -> Result<Self> {
        if radial_degree < 2 || l_modes < 1 {
            return Err(StarError::Config(format!(
                "basis needs radial_degree >= 2 and l_modes >= 1, got ({radial_degree}, {l_modes})"
            )));
        }
        Ok(Self {
            radial_degree,
            l_modes,
        })
    }

    pub fn len(&self) -> usize {
        self.radial_degree * self.l_modes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of mode `(l-index, m)`; rows are Legendre orders.
    #[inline]
    pub fn index(&self, l: usize, m: usize) -> usize {
        l * self.radial_degree + m
    }

    /// `R_m(s) = T_m(2s²-1)` and `s R_m'(s)` for `m < radial_degree`.
    pub fn radial_values(&self, s: f64, r: &mut [f64], rs: &mut [f64]) {
        let sigma = s * s;
        chebyshev_table(self.radial_degree, 2.0 * sigma - 1.0, r, rs);
        for v in rs[..self.radial_degree].iter_mut() {
            *v *= 4.0 * sigma;
        }
    }

    /// `P_{2l}(μ)` and `P_{2l}'(μ)` for `l < l_modes`.
    pub fn angular_values(&self, mu: f64, p: &mut [f64], dp: &mut [f64]) {
        let top = 2 * (self.l_modes - 1);
        let mut full = vec![0.0; top + 1];
        let mut dfull = vec![0.0; top + 1];
        legendre_table(top, mu, &mut full, &mut dfull);
        for l in 0..self.l_modes {
            p[l] = full[2 * l];
            dp[l] = dfull[2 * l];
        }
    }
}

/// Quotient `η = f/s²` and its derivatives at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldPoint {
    pub eta: f64,
    /// `s ∂η/∂s`
    pub s_eta_s: f64,
    pub eta_mu: f64,
}

impl FieldPoint {
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        s * s * self.eta
    }
    /// `∂f/∂s` at fixed `μ`.
    #[inline]
    pub fn d_s(&self, s: f64) -> f64 {
        s * (2.0 * self.eta + self.s_eta_s)
    }
    #[inline]
    pub fn d_mu(&self, s: f64) -> f64 {
        s * s * self.eta_mu
    }
    /// `|∇f| / |x|`.
    #[inline]
    pub fn gradient_ratio(&self, mu: f64) -> f64 {
        let a = 2.0 * self.eta + self.s_eta_s;
        (a * a + (1.0 - mu * mu) * self.eta_mu * self.eta_mu).sqrt()
    }
}

/// Basis values tabulated at a list of radii.
#[derive(Debug, Clone)]
pub struct RadialTable {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub rs: Vec<f64>,
    pub width: usize,
}

impl RadialTable {
    pub fn new(basis: &Basis, s: &[f64]) -> Self {
        let w = basis.radial_degree;
        let mut r = vec![0.0; s.len() * w];
        let mut rs = vec![0.0; s.len() * w];
        for (i, &si) in s.iter().enumerate() {
            basis.radial_values(si, &mut r[i * w..(i + 1) * w], &mut rs[i * w..(i + 1) * w]);
        }
        Self {
            s: s.to_vec(),
            r,
            rs,
            width: w,
        }
    }
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.r[i * self.width..(i + 1) * self.width]
    }
    #[inline]
    pub fn row_s(&self, i: usize) -> &[f64] {
        &self.rs[i * self.width..(i + 1) * self.width]
    }
}

/// Basis values tabulated at a list of `μ`.
#[derive(Debug, Clone)]
pub struct AngularTable {
    pub mu: Vec<f64>,
    pub p: Vec<f64>,
    pub dp: Vec<f64>,
    pub width: usize,
}

impl AngularTable {
    pub fn new(basis: &Basis, mu: &[f64]) -> Self {
        let w = basis.l_modes;
        let mut p = vec![0.0; mu.len() * w];
        let mut dp = vec![0.0; mu.len() * w];
        for (j, &m) in mu.iter().enumerate() {
            basis.angular_values(m, &mut p[j * w..(j + 1) * w], &mut dp[j * w..(j + 1) * w]);
        }
        Self {
            mu: mu.to_vec(),
            p,
            dp,
            width: w,
        }
    }
    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.p[j * self.width..(j + 1) * self.width]
    }
    #[inline]
    pub fn row_mu(&self, j: usize) -> &[f64] {
        &self.dp[j * self.width..(j + 1) * self.width]
    }
}

/// Tensor-grid values of `η`, `s η_s` and `η_μ`, indexed `[i * n_mu + j]`.
#[derive(Debug, Clone)]
pub struct GridValues {
    pub n_s: usize,
    pub n_mu: usize,
    pub eta: Vec<f64>,
    pub s_eta_s: Vec<f64>,
    pub eta_mu: Vec<f64>,
}

impl GridValues {
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> FieldPoint {
        let k = i * self.n_mu + j;
        FieldPoint {
            eta: self.eta[k],
            s_eta_s: self.s_eta_s[k],
            eta_mu: self.eta_mu[k],
        }
    }
}

/// Collocation grid with integration weights for `∫_{B₁} · dx`.
///
/// Radial nodes are `s_i² = (1 - cos(π i/Ns))/2`, `i = 1..Ns`; angular nodes
/// are the positive roots of `P_{2Nμ}`.
#[derive(Debug, Clone)]
pub struct AxiGrid {
    pub basis: Basis,
    pub s: Vec<f64>,
    pub mu: Vec<f64>,
    /// Radial weights for `∫₀¹ g(s) s² ds`.
    pub w_s: Vec<f64>,
    /// Angular weights for `4π ∫₀¹ g(μ) dμ`.
    pub w_mu: Vec<f64>,
}

impl AxiGrid {
    pub fn new(basis: Basis) -> Self {
        let ns = basis.radial_degree;
        let nmu = basis.l_modes;
        let sigma: Vec<f64> = (1..=ns)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / ns as f64).cos()))
            .collect();
        let s: Vec<f64> = sigma.iter().map(|v| v.sqrt()).collect();

        let (x, w) = gauss_legendre(2 * nmu);
        let mu: Vec<f64> = x[nmu..].to_vec();
        let w_mu: Vec<f64> = w[nmu..].iter().map(|w| 4.0 * std::f64::consts::PI * w).collect();

        // interpolatory weights in σ for ∫₀¹ g √σ/2 dσ = ∫₀¹ g s² ds
        let mut vand = DMatrix::<f64>::zeros(ns, ns);
        let mut t = vec![0.0; ns];
        let mut dt = vec![0.0; ns];
        for (i, &sg) in sigma.iter().enumerate() {
            chebyshev_table(ns, 2.0 * sg - 1.0, &mut t, &mut dt);
            for m in 0..ns {
                vand[(m, i)] = t[m];
            }
        }
        // moments ∫₀¹ T_m(2s²-1) s² ds, exact with Gauss-Legendre in s
        let (gx, gw) = gauss_legendre(ns + 4);
        let mut moments = nalgebra::DVector::<f64>::zeros(ns);
        for (xk, wk) in gx.iter().zip(&gw) {
            let sk = 0.5 * (xk + 1.0);
            chebyshev_table(ns, 2.0 * sk * sk - 1.0, &mut t, &mut dt);
            for m in 0..ns {
                moments[m] += 0.5 * wk * t[m] * sk * sk;
            }
        }
        let w_s = vand
            .lu()
            .solve(&moments)
            .expect("Chebyshev Vandermonde matrix is nonsingular")
            .as_slice()
            .to_vec();
        Self {
            basis,
            s,
            mu,
            w_s,
            w_mu,
        }
    }

    pub fn len(&self) -> usize {
        self.s.len() * self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `(s, μ)` with flat index `i * Nμ + j`.
    #[inline]
    pub fn node(&self, k: usize) -> (f64, f64) {
        let nmu = self.mu.len();
        (self.s[k / nmu], self.mu[k % nmu])
    }

    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(|k| self.node(k))
    }

    #[inline]
    pub fn weight(&self, k: usize) -> f64 {
        let nmu = self.mu.len();
        self.w_s[k / nmu] * self.w_mu[k % nmu]
    }

    /// `∫_{B₁} g dx` from nodal values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(k, v)| self.weight(k) * v)
            .sum()
    }
}

/// Nodal interpolation onto the basis, `coefficients ↔ η at the nodes`.
#[derive(Debug, Clone)]
pub struct Interpolator {
    pub grid: AxiGrid,
    radial: RadialTable,
    angular: AngularTable,
    r_inv: DMatrix<f64>,
    p_inv: DMatrix<f64>,
}

impl Interpolator {
    pub fn new(basis: Basis) -> Self {
        let grid = AxiGrid::new(basis);
        let radial = RadialTable::new(&basis, &grid.s);
        let angular = AngularTable::new(&basis, &grid.mu);
        let ns = basis.radial_degree;
        let nmu = basis.l_modes;
        let r = DMatrix::from_fn(ns, ns, |i, m| radial.row(i)[m]);
        let p = DMatrix::from_fn(nmu, nmu, |j, l| angular.row(j)[l]);
        let r_inv = r.try_inverse().expect("radial collocation matrix is nonsingular");
        let p_inv = p.try_inverse().expect("angular collocation matrix is nonsingular");
        Self {
            grid,
            radial,
            angular,
            r_inv,
            p_inv,
        }
    }

    pub fn basis(&self) -> Basis {
        self.grid.basis
    }

    pub fn radial(&self) -> &RadialTable {
        &self.radial
    }

    pub fn angular(&self) -> &AngularTable {
        &self.angular
    }

    /// Coefficients from values of `η = f/s²` at the nodes.
    pub fn coefficients_from_eta(&self, eta: &[f64]) -> Vec<f64> {
        let b = self.basis();
        let (ns, nmu) = (b.radial_degree, b.l_modes);
        // E[i][j] = Σ R[i][m] A[l][m] P[j][l]  ⇒  A = P⁻¹ Eᵀ R⁻ᵀ
        let e = DMatrix::from_fn(ns, nmu, |i, j| eta[i * nmu + j]);
        let a = &self.p_inv * e.transpose() * self.r_inv.transpose();
        let mut out = vec![0.0; b.len()];
        for l in 0..nmu {
            for m in 0..ns {
                out[b.index(l, m)] = a[(l, m)];
            }
        }
        out
    }

    /// Coefficients from nodal values of `f` itself.
    pub fn coefficients_from_values(&self, f: &[f64]) -> Vec<f64> {
        let eta: Vec<f64> = f
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let (s, _) = self.grid.node(k);
                v / (s * s)
            })
            .collect();
        self.coefficients_from_eta(&eta)
    }

    /// Apply the inverse interpolation to each column of a nodal matrix
    /// whose rows are indexed like the grid (values of `f`, not `η`).
    pub fn project_columns(&self, nodal: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.grid.len();
        assert_eq!(nodal.nrows(), n);
        let mut out = DMatrix::zeros(n, nodal.ncols());
        let mut col = vec![0.0; n];
        for c in 0..nodal.ncols() {
            for k in 0..n {
                col[k] = nodal[(k, c)];
            }
            let coef = self.coefficients_from_values(&col);
            for k in 0..n {
                out[(k, c)] = coef[k];
            }
        }
        out
    }

    /// Matrix mapping coefficients to nodal values of `f`.
    pub fn evaluation_matrix(&self) -> DMatrix<f64> {
        let b = self.basis();
        let n = b.len();
        let nmu = b.l_modes;
        DMatrix::from_fn(n, n, |k, c| {
            let (i, j) = (k / nmu, k % nmu);
            let (l, m) = (c / b.radial_degree, c % b.radial_degree);
            let s = self.grid.s[i];
            s * s * self.radial.row(i)[m] * self.angular.row(j)[l]
        })
    }
}

/// A scalar field in the basis.
///
/// Deformations `ζ` and magnetic potentials `φ` share the representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiField {
    pub l_modes: usize,
    pub radial_degree: usize,
    /// Row-major by Legendre order.
    pub coefficients: Vec<f64>,
}

pub type DeformationField = AxiField;
pub type MagneticPotentialField = AxiField;

impl AxiField {
    pub fn zero(basis: Basis) -> Self {
        Self {
            l_modes: basis.l_modes,
            radial_degree: basis.radial_degree,
            coefficients: vec![0.0; basis.len()],
        }
    }

    pub fn from_coefficients(basis: Basis, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != basis.len() {
            return Err(StarError::Config(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coefficients.len()
            )));
        }
        if coefficients.iter().any(|c| !c.is_finite()) {
            return Err(StarError::Domain("non-finite field coefficient".into()));
        }
        Ok(Self {
            l_modes: basis.l_modes,
            radial_degree: basis.radial_degree,
            coefficients,
        })
    }

    /// `f = c|x|²`.
    pub fn quadratic(basis: Basis, c: f64) -> Self {
        let mut f = Self::zero(basis);
        f.coefficients[0] = c;
        f
    }

    /// Interpolate `f(s, μ)` at the collocation nodes.
    ///
    /// `f` must vanish like `s²` at the origin.
    pub fn interpolate<F: Fn(f64, f64) -> f64>(interp: &Interpolator, f: F) -> Self {
        let values: Vec<f64> = interp.grid.nodes().map(|(s, mu)| f(s, mu)).collect();
        Self {
            l_modes: interp.basis().l_modes,
            radial_degree: interp.basis().radial_degree,
            coefficients: interp.coefficients_from_values(&values),
        }
    }

    pub fn basis(&self) -> Basis {
        Basis {
            radial_degree: self.radial_degree,
            l_modes: self.l_modes,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.coefficients.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self + c·other`
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        assert_eq!(self.basis(), other.basis());
        let mut out = self.clone();
        for (a, b) in out.coefficients.iter_mut().zip(&other.coefficients) {
            *a += c * b;
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.iter().all(|c| *c == 0.0)
    }

    /// `η`, `s η_s`, `η_μ` at `(s, μ)`; `μ ∈ [-1, 1]`.
    pub fn eval(&self, s: f64, mu: f64) -> FieldPoint {
        let b = self.basis();
        let mut r = vec![0.0; b.radial_degree];
        let mut rs = vec![0.0; b.radial_degree];
        let mut p = vec![0.0; b.l_modes];
        let mut dp = vec![0.0; b.l_modes];
        b.radial_values(s, &mut r, &mut rs);
        b.angular_values(mu, &mut p, &mut dp);
        self.contract(&r, &rs, &p, &dp)
    }

    #[inline]
    pub fn contract(&self, r: &[f64], rs: &[f64], p: &[f64], dp: &[f64]) -> FieldPoint {
        let nr = self.radial_degree;
        let mut out = FieldPoint::default();
        for l in 0..self.l_modes {
            let row = &self.coefficients[l * nr..(l + 1) * nr];
            let mut cr = 0.0;
            let mut crs = 0.0;
            for m in 0..nr {
                cr += row[m] * r[m];
                crs += row[m] * rs[m];
            }
            out.eta += cr * p[l];
            out.s_eta_s += crs * p[l];
            out.eta_mu += cr * dp[l];
        }
        out
    }

    /// Field value at a point of ℝ³.
    pub fn value_at(&self, x: [f64; 3]) -> f64 {
        let (s, mu) = polar(x);
        if s == 0.0 {
            return 0.0;
        }
        self.eval(s, mu).value(s)
    }

    /// Cartesian gradient at a point of ℝ³ (zero at the origin).
    pub fn gradient_at(&self, x: [f64; 3]) -> [f64; 3] {
        let (s, mu) = polar(x);
        if s == 0.0 {
            return [0.0; 3];
        }
        let fp = self.eval(s, mu);
        let fs = fp.d_s(s);
        let fmu_over_s = s * fp.eta_mu;
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            let sh = x[k] / s;
            let e3 = if k == 2 { 1.0 } else { 0.0 };
            *gk = fs * sh + fmu_over_s * (e3 - mu * sh);
        }
        g
    }

    /// `η, s η_s, η_μ` on a tensor grid of tabulated radii and angles.
    pub fn eval_grid(&self, radial: &RadialTable, angular: &AngularTable) -> GridValues {
        let nr = self.radial_degree;
        let nl = self.l_modes;
        let ns = radial.s.len();
        let nmu = angular.mu.len();
        // c[l][i] = Σ_m a_{l,m} R_m(s_i)
        let mut c = vec![0.0; nl * ns];
        let mut cs = vec![0.0; nl * ns];
        for l in 0..nl {
            let row = &self.coefficients[l * nr..(l + 1) * nr];
            for i in 0..ns {
                let (r, rs) = (radial.row(i), radial.row_s(i));
                let mut a = 0.0;
                let mut b = 0.0;
                for m in 0..nr {
                    a += row[m] * r[m];
                    b += row[m] * rs[m];
                }
                c[l * ns + i] = a;
                cs[l * ns + i] = b;
            }
        }
        let mut out = GridValues {
            n_s: ns,
            n_mu: nmu,
            eta: vec![0.0; ns * nmu],
            s_eta_s: vec![0.0; ns * nmu],
            eta_mu: vec![0.0; ns * nmu],
        };
        for i in 0..ns {
            for j in 0..nmu {
                let (p, dp) = (angular.row(j), angular.row_mu(j));
                let mut e = 0.0;
                let mut es = 0.0;
                let mut em = 0.0;
                for l in 0..nl {
                    e += c[l * ns + i] * p[l];
                    es += cs[l * ns + i] * p[l];
                    em += c[l * ns + i] * dp[l];
                }
                let k = i * nmu + j;
                out.eta[k] = e;
                out.s_eta_s[k] = es;
                out.eta_mu[k] = em;
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(text)?;
        Self::from_coefficients(f.basis(), f.coefficients)
    }
}

/// `(|x|, x₃/|x|)`, with `μ = 1` at the origin.
#[inline]
pub fn polar(x: [f64; 3]) -> (f64, f64) {
    let s = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if s == 0.0 {
        (0.0, 1.0)
    } else {
        (s, (x[2] / s).clamp(-1.0, 1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_weights_integrate_ball_volume() {
        for (ns, nmu) in [(8, 4), (24, 12), (33, 7)] {
            let g = AxiGrid::new(Basis::new(ns, nmu).unwrap());
            let ones = vec![1.0; g.len()];
            let vol = g.integrate(&ones);
            assert!((vol - 4.0 * std::f64::consts::PI / 3.0).abs() < 1e-12, "{vol}");
            assert!(g.w_s.iter().all(|w| *w > 0.0));
            assert!(g.w_mu.iter().all(|w| *w > 0.0));
            assert!(g.s.iter().all(|s| *s > 0.0 && *s <= 1.0));
            assert!((g.s[ns - 1] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn grid_integrates_smooth_even_function() {
        let g = AxiGrid::new(Basis::new(16, 8).unwrap());
        // ∫ x₃² dx over B₁ = 4π/15
        let v: Vec<f64> = g.nodes().map(|(s, mu)| (s * mu).powi(2)).collect();
        assert!((g.integrate(&v) - 4.0 * std::f64::consts::PI / 15.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_round_trip() {
        let b = Basis::new(10, 5).unwrap();
        let it = Interpolator::new(b);
        let f = AxiField::interpolate(&it, |s, mu| s * s * (0.3 + s * s * mu * mu - 0.2 * s.powi(4)));
        for &(s, mu) in &[(0.3f64, 0.1f64), (0.77, 0.9), (1.0, 0.0)] {
            let exact = s * s * (0.3 + s * s * mu * mu - 0.2 * s.powi(4));
            assert!((f.eval(s, mu).value(s) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn evenness_is_exact() {
        let b = Basis::new(6, 4).unwrap();
        let coeffs: Vec<f64> = (0..b.len()).map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.5).collect();
        let f = AxiField::from_coefficients(b, coeffs).unwrap();
        for &(s, mu) in &[(0.2, 0.3), (0.9, 0.71)] {
            assert_eq!(f.eval(s, mu).eta, f.eval(s, -mu).eta);
        }
    }

    #[test]
    fn gradient_of_quadratic() {
        let f = AxiField::quadratic(Basis::new(4, 2).unwrap(), 0.7);
        let g = f.gradient_at([0.3, 0.2, -0.5]);
        for (gk, xk) in g.iter().zip([0.3, 0.2, -0.5]) {
            assert!((gk - 1.4 * xk).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_evaluation_matches_pointwise() {
        let b = Basis::new(7, 3).unwrap();
        let coeffs: Vec<f64> = (0..b.len()).map(|k| (k as f64 * 0.37).sin()).collect();
        let f = AxiField::from_coefficients(b, coeffs).unwrap();
        let rt = RadialTable::new(&b, &[0.1, 0.6]);
        let at = AngularTable::new(&b, &[0.0, 0.5, 0.99]);
        let gv = f.eval_grid(&rt, &at);
        for (i, &s) in [0.1, 0.6].iter().enumerate() {
            for (j, &mu) in [0.0, 0.5, 0.99].iter().enumerate() {
                let p = f.eval(s, mu);
                let q = gv.at(i, j);
                assert!((p.eta - q.eta).abs() < 1e-14);
                assert!((p.s_eta_s - q.s_eta_s).abs() < 1e-13);
                assert!((p.eta_mu - q.eta_mu).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let f = AxiField::quadratic(Basis::new(4, 2).unwrap(), 0.25);
        let back = AxiField::from_json(&f.to_json().unwrap()).unwrap();
        assert_eq!(f, back);
        assert!(f.to_json().unwrap().contains("\"l_modes\""));
    }
}
