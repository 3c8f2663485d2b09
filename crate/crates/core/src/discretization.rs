//! Radial grids, weighted quadrature and P1 finite-element assembly.
//!
//! Every integrand carries an endpoint exponent α: near r = R it behaves like
//! (R−r)^α times a smooth factor. The last cell is integrated with Gauss-Jacobi
//! for that exponent; all other cells use 4-point Gauss-Legendre.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::Write;
use std::sync::{Mutex, OnceLock};

use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};

/// 4-point Gauss-Legendre rule on [−1, 1].
pub const GAUSS4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Points used on the cell touching the surface.
pub const SURFACE_POINTS: usize = 8;

/// Gauss-Jacobi rule for the weight (1−x)^α on [−1, 1] (Golub-Welsch). α > −1.
///
/// Rules are cached by (n, α).
pub fn gauss_jacobi(n: usize, alpha: f64) -> Vec<(f64, f64)> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Vec<(f64, f64)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (n, alpha.to_bits());
    if let Some(rule) = cache.lock().unwrap().get(&key) {
        return rule.clone();
    }
    let a = alpha;
    let mut t = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        t[(k, k)] = if k == 0 {
            -a / (a + 2.0)
        } else {
            -a * a / ((2.0 * kf + a) * (2.0 * kf + a + 2.0))
        };
        if k + 1 < n {
            let j = kf + 1.0;
            let s = 2.0 * j + a;
            let off = (4.0 * j * (j + a) * j * (j + a) / (s * s * (s + 1.0) * (s - 1.0))).sqrt();
            t[(k, k + 1)] = off;
            t[(k + 1, k)] = off;
        }
    }
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let eig = SymmetricEigen::new(t);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], mu0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    rule.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    cache.lock().unwrap().insert(key, rule.clone());
    rule
}

/// Gauss-Legendre rule with n points.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    if n == 4 {
        return GAUSS4.to_vec();
    }
    gauss_jacobi(n, 0.0)
}

/// Quadrature nodes and weights for ∫_a^b f dr where f ~ (b−r)^α at b.
///
/// Weights absorb the Jacobi factor, so the caller evaluates the full integrand.
pub fn segment_rule(a: f64, b: f64, alpha: f64, n: usize) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    if alpha == 0.0 {
        return gauss_legendre(n).iter().map(|&(x, w)| (a + half * (1.0 + x), half * w)).collect();
    }
    gauss_jacobi(n, alpha)
        .iter()
        .map(|&(x, w)| (a + half * (1.0 + x), half * w / (1.0 - x).powf(alpha)))
        .collect()
}

/// Clustered radial grid r_i = R(1 − (1 − i/N)^p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub p: f64,
}

/// Grid with `n` cells and clustering exponent `p` toward r = R.
pub fn make_grid(radius: f64, n: usize, p: f64) -> Result<RadialGrid> {
    if n < 1 {
        return Err(Error::InvalidGrid(format!("need at least one cell, got {n}")));
    }
    if !(p >= 1.0) || !(radius > 0.0) {
        return Err(Error::InvalidGrid(format!("p = {p}, R = {radius}")));
    }
    let nf = n as f64;
    let mut nodes: Vec<f64> = (0..=n).map(|i| radius * (1.0 - (1.0 - i as f64 / nf).powf(p))).collect();
    nodes[0] = 0.0;
    nodes[n] = radius;
    Ok(RadialGrid { nodes, p })
}

impl RadialGrid {
    pub fn n_cells(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn radius(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn cell(&self, c: usize) -> (f64, f64) {
        (self.nodes[c], self.nodes[c + 1])
    }

    /// Index of the cell containing r (the last cell for r = R).
    pub fn locate(&self, r: f64) -> usize {
        let k = self.nodes.partition_point(|&x| x <= r);
        k.clamp(1, self.n_cells()) - 1
    }

    /// Quadrature for an integrand with surface exponent α on cell c.
    pub fn cell_rule(&self, c: usize, alpha: f64) -> Vec<(f64, f64)> {
        let (a, b) = self.cell(c);
        if c + 1 == self.n_cells() {
            segment_rule(a, b, alpha, SURFACE_POINTS)
        } else {
            segment_rule(a, b, 0.0, 4)
        }
    }

    /// Values of the two hats supported on cell c at r: (φ_c, φ_{c+1}).
    pub fn hats(&self, c: usize, r: f64) -> (f64, f64) {
        let (a, b) = self.cell(c);
        let t = (r - a) / (b - a);
        (1.0 - t, t)
    }

    /// Hat slopes on cell c: (φ_c′, φ_{c+1}′).
    pub fn hat_slopes(&self, c: usize) -> (f64, f64) {
        let (a, b) = self.cell(c);
        (-1.0 / (b - a), 1.0 / (b - a))
    }

    /// P1 interpolant of nodal `values` at r.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let c = self.locate(r);
        let (p0, p1) = self.hats(c, r);
        values[c] * p0 + values[c + 1] * p1
    }

    /// Derivative of the P1 interpolant on the cell containing r.
    pub fn interpolate_slope(&self, values: &[f64], r: f64) -> f64 {
        let c = self.locate(r);
        let (a, b) = self.cell(c);
        (values[c + 1] - values[c]) / (b - a)
    }
}

/// Weighted L² spaces on (0, R).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum WeightKind {
    /// ρ r² r² dr (radial displacement space).
    WSpace,
    /// (1/ρ)(dP/dρ) r² dr (density perturbations).
    YSpace,
    /// (R−r)^β r² dr.
    XBeta(f64),
    /// ρ r² dr.
    RhoR2,
    /// ρ(dρ/dP) r² dr, the potential space with zero-mean constraint.
    ESpace,
    /// r² dr.
    PlainR2,
}

impl WeightKind {
    pub fn eval(&self, eq: &Equilibrium, r: f64) -> f64 {
        let pr = eq.profile(r);
        let r2 = r * r;
        match *self {
            WeightKind::WSpace => pr.rho * r2 * r2,
            WeightKind::YSpace => pr.du_drho * r2,
            WeightKind::XBeta(beta) => (eq.radius - r).max(0.0).powf(beta) * r2,
            WeightKind::RhoR2 => pr.rho * r2,
            WeightKind::ESpace => pr.drho_du * r2,
            WeightKind::PlainR2 => r2,
        }
    }

    /// Exponent α with w ~ (R−r)^α at the surface.
    pub fn endpoint_exponent(&self, nu: f64) -> f64 {
        match *self {
            WeightKind::WSpace | WeightKind::RhoR2 => nu,
            WeightKind::YSpace => 1.0 - nu,
            WeightKind::XBeta(beta) => beta,
            WeightKind::ESpace => nu - 1.0,
            WeightKind::PlainR2 => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WeightKind::WSpace => "W_space",
            WeightKind::YSpace => "Y_space",
            WeightKind::XBeta(_) => "X_beta",
            WeightKind::RhoR2 => "rho_r2",
            WeightKind::ESpace => "E_space",
            WeightKind::PlainR2 => "plain_r2",
        }
    }
}

/// A radial coefficient with its surface exponent.
#[derive(Clone, Copy)]
pub struct Coef<'a> {
    pub f: &'a dyn Fn(f64) -> f64,
    pub alpha: f64,
}

impl<'a> Coef<'a> {
    pub fn new(f: &'a dyn Fn(f64) -> f64, alpha: f64) -> Self {
        Self { f, alpha }
    }
}

/// K_ij = ∫ a φ_i′φ_j′ dr + ∫ c φ_iφ_j dr with `c` the complete potential integrand.
pub fn assemble_local(grid: &RadialGrid, stiff: Option<Coef>, pot: Option<Coef>) -> DMatrix<f64> {
    let n = grid.n_nodes();
    let mut k = DMatrix::zeros(n, n);
    for c in 0..grid.n_cells() {
        if let Some(a) = stiff {
            let (s0, s1) = grid.hat_slopes(c);
            let integral: f64 = grid.cell_rule(c, a.alpha).iter().map(|&(r, w)| w * (a.f)(r)).sum();
            k[(c, c)] += integral * s0 * s0;
            k[(c, c + 1)] += integral * s0 * s1;
            k[(c + 1, c)] += integral * s0 * s1;
            k[(c + 1, c + 1)] += integral * s1 * s1;
        }
        if let Some(q) = pot {
            for (r, w) in grid.cell_rule(c, q.alpha) {
                let (p0, p1) = grid.hats(c, r);
                let v = w * (q.f)(r);
                k[(c, c)] += v * p0 * p0;
                k[(c, c + 1)] += v * p0 * p1;
                k[(c + 1, c)] += v * p0 * p1;
                k[(c + 1, c + 1)] += v * p1 * p1;
            }
        }
    }
    k
}

/// As [`assemble_local`] with the surface node eliminated.
///
/// On the last cell only φ_{N−1} survives; its square adds two to the surface
/// exponent of the potential integrand, which keeps the rule valid for α ≤ −1.
pub fn assemble_local_dirichlet(grid: &RadialGrid, stiff: Option<Coef>, pot: Option<Coef>) -> DMatrix<f64> {
    let n = grid.n_cells();
    let mut k = DMatrix::zeros(n, n);
    for c in 0..n {
        let last = c + 1 == n;
        if let Some(a) = stiff {
            let (s0, s1) = grid.hat_slopes(c);
            let integral: f64 = grid.cell_rule(c, a.alpha).iter().map(|&(r, w)| w * (a.f)(r)).sum();
            k[(c, c)] += integral * s0 * s0;
            if !last {
                k[(c, c + 1)] += integral * s0 * s1;
                k[(c + 1, c)] += integral * s0 * s1;
                k[(c + 1, c + 1)] += integral * s1 * s1;
            }
        }
        if let Some(q) = pot {
            let alpha = if last { q.alpha + 2.0 } else { q.alpha };
            for (r, w) in grid.cell_rule(c, alpha) {
                let (p0, p1) = grid.hats(c, r);
                let v = w * (q.f)(r);
                k[(c, c)] += v * p0 * p0;
                if !last {
                    k[(c, c + 1)] += v * p0 * p1;
                    k[(c + 1, c)] += v * p0 * p1;
                    k[(c + 1, c + 1)] += v * p1 * p1;
                }
            }
        }
    }
    k
}

/// Load vector b_i = ∫ f φ_i dr.
pub fn load_vector(grid: &RadialGrid, f: Coef) -> DVector<f64> {
    let mut b = DVector::zeros(grid.n_nodes());
    for c in 0..grid.n_cells() {
        for (r, w) in grid.cell_rule(c, f.alpha) {
            let (p0, p1) = grid.hats(c, r);
            let v = w * (f.f)(r);
            b[c] += v * p0;
            b[c + 1] += v * p1;
        }
    }
    b
}

/// Gram matrix ∫ φ_iφ_j w dr.
pub fn weighted_mass(grid: &RadialGrid, weight: WeightKind, eq: &Equilibrium) -> DMatrix<f64> {
    let f = |r: f64| weight.eval(eq, r);
    assemble_local(grid, None, Some(Coef::new(&f, weight.endpoint_exponent(eq.nu()))))
}

/// ∫ a φ_i′φ_j′ dr + ∫ c φ_iφ_j w dr; `a_alpha`, `c_alpha` are the surface exponents of a and c.
pub fn weighted_stiffness(
    grid: &RadialGrid,
    a: &dyn Fn(f64) -> f64,
    a_alpha: f64,
    c: &dyn Fn(f64) -> f64,
    c_alpha: f64,
    weight: WeightKind,
    eq: &Equilibrium,
) -> DMatrix<f64> {
    let pot = |r: f64| c(r) * weight.eval(eq, r);
    assemble_local(
        grid,
        Some(Coef::new(a, a_alpha)),
        Some(Coef::new(&pot, c_alpha + weight.endpoint_exponent(eq.nu()))),
    )
}

/// Symmetric part of `m` and the relative asymmetry ‖m − mᵀ‖/‖m‖ (Frobenius).
pub fn symmetrize(m: &DMatrix<f64>) -> (DMatrix<f64>, f64) {
    let t = m.transpose();
    let norm = m.norm();
    let asym = if norm > 0.0 { (m - &t).norm() / norm } else { 0.0 };
    ((m + t) * 0.5, asym)
}

/// Operator name, degree and exponent attached to an assembled form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormMeta {
    pub operator: String,
    pub l: usize,
    pub gamma: f64,
}

/// Symmetric pencil (K, M) in reduced coordinates.
///
/// Nodal values of a coefficient vector x are `basis · x` when a basis is set,
/// otherwise x itself.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    pub k: DMatrix<f64>,
    pub m: DMatrix<f64>,
    pub inner_product: WeightKind,
    pub constraint: Option<DVector<f64>>,
    pub meta: FormMeta,
    /// Relative asymmetry of the assembled blocks before symmetrization.
    pub asymmetry: f64,
    pub basis: Option<DMatrix<f64>>,
    /// The surface node is eliminated (value zero at r = R).
    pub drop_surface: bool,
    pub grid: RadialGrid,
    /// True when K and M are tridiagonal.
    pub tridiagonal: bool,
}

impl DiscreteForm {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// Nodal values of reduced coefficients.
    pub fn prolong(&self, x: &DVector<f64>) -> DVector<f64> {
        let v = match &self.basis {
            Some(p) => p * x,
            None => x.clone(),
        };
        if self.drop_surface {
            v.push(0.0)
        } else {
            v
        }
    }

    /// Rayleigh quotient xᵀKx / xᵀMx.
    pub fn rayleigh(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.k * x)) / x.dot(&(&self.m * x))
    }
}

/// Attach c_i = ∫ φ_i w_c dr (mapped through the basis) as a zero-mean constraint.
pub fn apply_zero_mean_constraint(mut form: DiscreteForm, c_weight: WeightKind, eq: &Equilibrium) -> Result<DiscreteForm> {
    let f = |r: f64| c_weight.eval(eq, r);
    let nodal = load_vector(&form.grid, Coef::new(&f, c_weight.endpoint_exponent(eq.nu())));
    let nodal = if form.drop_surface { nodal.rows(0, nodal.len() - 1).into_owned() } else { nodal };
    let c = match &form.basis {
        Some(p) => p.transpose() * nodal,
        None => nodal,
    };
    if c.amax() == 0.0 || !c.iter().all(|v| v.is_finite()) {
        return Err(Error::ConstraintDegenerate);
    }
    form.constraint = Some(c);
    Ok(form)
}

/// Write nonzero entries as CSV with header i,j,value.
pub fn export_matrix_csv<W: Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "value"])?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if v != 0.0 {
                w.write_record([i.to_string(), j.to_string(), format!("{v:e}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{build_equilibrium, GasLaw};
    use approx::assert_relative_eq;

    #[test]
    fn grid_formula() {
        let g = make_grid(1.0, 2, 1.0).unwrap();
        assert_eq!(g.nodes, vec![0.0, 0.5, 1.0]);
        let g = make_grid(1.0, 4, 2.0).unwrap();
        let want = [0.0, 1.0 - 9.0 / 16.0, 0.75, 1.0 - 1.0 / 16.0, 1.0];
        for (a, b) in g.nodes.iter().zip(want) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        assert!(make_grid(1.0, 4, 0.5).is_err());
    }

    #[test]
    fn jacobi_rule_moments() {
        // ∫_{−1}^{1} (1−x)^α x^k dx against a fine composite rule of the substituted integral.
        for &alpha in &[-0.6, 0.0, 0.5, 1.5, 3.2] {
            let rule = gauss_jacobi(6, alpha);
            for k in 0..12 {
                let q: f64 = rule.iter().map(|&(x, w)| w * x.powi(k)).sum();
                // exact: substitute s = 1 − x, ∫_0^2 s^α (1−s)^k ds via binomial expansion
                let mut exact = 0.0;
                let mut scale = 0.0;
                for j in 0..=k {
                    let binom = (0..j).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64);
                    let term = binom * 2f64.powf(alpha + j as f64 + 1.0) / (alpha + j as f64 + 1.0);
                    exact += (-1f64).powi(j) * term;
                    scale += term;
                }
                assert!((q - exact).abs() < 1e-14 * scale, "alpha={alpha} k={k}");
            }
        }
    }

    #[test]
    fn plain_mass_single_cell() {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        let r = eq.radius;
        let g = make_grid(r, 1, 1.0).unwrap();
        let m = weighted_mass(&g, WeightKind::PlainR2, &eq);
        // ∫ (1−t)² r² , ∫ t(1−t) r², ∫ t² r² with r = Rt
        let r3 = r * r * r;
        assert_relative_eq!(m[(0, 0)], r3 / 30.0, max_relative = 1e-13);
        assert_relative_eq!(m[(0, 1)], r3 / 20.0, max_relative = 1e-13);
        assert_relative_eq!(m[(1, 1)], r3 / 5.0, max_relative = 1e-13);
        let one = |_r: f64| 1.0;
        let zero = |_r: f64| 0.0;
        let k = weighted_stiffness(&g, &one, 0.0, &zero, 0.0, WeightKind::PlainR2, &eq);
        assert_relative_eq!(k[(0, 0)], 1.0 / r, max_relative = 1e-14);
        assert_relative_eq!(k[(0, 1)], -1.0 / r, max_relative = 1e-14);
    }

    #[test]
    fn w_space_surface_entry_positive() {
        let eq = build_equilibrium(GasLaw::unit(1.3).unwrap(), 8).unwrap();
        let g = make_grid(eq.radius, 16, 2.0).unwrap();
        let m = weighted_mass(&g, WeightKind::WSpace, &eq);
        assert!(m[(16, 16)] > 0.0);
        assert_eq!(m, m.transpose());
        let beta = eq.nu() - 1.0;
        let mx = weighted_mass(&g, WeightKind::XBeta(beta), &eq);
        assert!((1..=16).all(|i| mx[(i, i)].is_finite() && mx[(i, i)] > 0.0));
    }

    #[test]
    fn constraint_excludes_constants() {
        let eq = build_equilibrium(GasLaw::unit(1.5).unwrap(), 8).unwrap();
        let g = make_grid(eq.radius, 10, 2.0).unwrap();
        let m = weighted_mass(&g, WeightKind::PlainR2, &eq);
        let form = DiscreteForm {
            k: m.clone(),
            m,
            inner_product: WeightKind::PlainR2,
            constraint: None,
            meta: FormMeta { operator: "test".into(), l: 0, gamma: 1.5 },
            asymmetry: 0.0,
            basis: None,
            drop_surface: false,
            grid: g,
            tridiagonal: true,
        };
        let form = apply_zero_mean_constraint(form, WeightKind::PlainR2, &eq).unwrap();
        let c = form.constraint.unwrap();
        let total: f64 = c.sum();
        assert_relative_eq!(total, eq.radius.powi(3) / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn csv_export_header() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let mut buf = Vec::new();
        export_matrix_csv(&m, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("i,j,value\n"));
        assert_eq!(s.lines().count(), 3);
    }
}
