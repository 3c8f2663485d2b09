//! Degree-l vector modes ξ = rψ Y e_r + χ r∇Y + κ_t r∇^⊥Y and the maps between
//! displacements and densities.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::gravity::HlKernel;
use super::RadialField;
use crate::discretization::{load_vector, weighted_mass, Coef, RadialGrid, WeightKind};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};

/// One (l, m) component of a displacement field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorModeLM {
    pub l: usize,
    pub m: i64,
    pub psi: RadialField,
    pub chi: RadialField,
    pub kappa_t: RadialField,
}

impl VectorModeLM {
    pub fn new(l: usize, m: i64, psi: RadialField, chi: RadialField, kappa_t: RadialField) -> Result<Self> {
        if m.unsigned_abs() as usize > l {
            return Err(Error::InvalidParameter(format!("|m| = {} exceeds l = {l}", m.abs())));
        }
        if l == 0 && !(chi.is_zero() && kappa_t.is_zero()) {
            return Err(Error::InvalidParameter("l = 0 modes are purely radial".into()));
        }
        Ok(Self { l, m, psi, chi, kappa_t })
    }

    pub fn zeros(grid: &RadialGrid, l: usize, m: i64) -> Self {
        let z = RadialField::zeros(grid);
        Self { l, m, psi: z.clone(), chi: z.clone(), kappa_t: z }
    }

    pub fn radial(psi: RadialField) -> Self {
        let z = RadialField::zeros(&psi.grid);
        Self { l: 0, m: 0, psi, chi: z.clone(), kappa_t: z }
    }

    /// a·self + b·other, componentwise.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let mix = |x: &RadialField, y: &RadialField| {
            RadialField::new(&x.grid, x.values.iter().zip(&y.values).map(|(p, q)| a * p + b * q).collect())
        };
        Self {
            l: self.l,
            m: self.m,
            psi: mix(&self.psi, &other.psi),
            chi: mix(&self.chi, &other.chi),
            kappa_t: mix(&self.kappa_t, &other.kappa_t),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.combine(s, self, 0.0)
    }
}

/// Squared 𝔚 norm ∫ |f|² ρ r⁴ dr of P1 fields, via the exact Gram matrix.
pub struct WNorm {
    mass: DMatrix<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl WNorm {
    pub fn new(eq: &Equilibrium, grid: &RadialGrid) -> Self {
        let mass = weighted_mass(grid, WeightKind::WSpace, eq);
        let chol = mass.clone().cholesky().expect("W mass is positive definite");
        Self { mass, chol }
    }

    pub fn sq(&self, f: &RadialField) -> f64 {
        let v = DVector::from_column_slice(&f.values);
        v.dot(&(&self.mass * &v))
    }

    /// ‖ξ‖² = ‖ψ‖² + l(l+1)(‖χ‖² + ‖κ_t‖²).
    pub fn mode_sq(&self, x: &VectorModeLM) -> f64 {
        let ll = (x.l * (x.l + 1)) as f64;
        self.sq(&x.psi) + ll * (self.sq(&x.chi) + self.sq(&x.kappa_t))
    }

    pub fn mode(&self, x: &VectorModeLM) -> f64 {
        self.mode_sq(x).sqrt()
    }

    /// Coefficients of the 𝔚-projection whose load vector is b.
    pub fn project(&self, b: DVector<f64>) -> Vec<f64> {
        if b.iter().all(|&v| v == 0.0) {
            return vec![0.0; b.len()];
        }
        self.chol.solve(&b).iter().copied().collect()
    }

    pub fn project_columns(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }
}

/// Density perturbation g = (dρ/du)·h with h piecewise linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityField {
    pub h: RadialField,
}

impl DensityField {
    pub fn value(&self, eq: &Equilibrium, r: f64) -> f64 {
        eq.profile(r).drho_du * self.h.at(r)
    }

    pub fn is_zero(&self) -> bool {
        self.h.is_zero()
    }
}

/// Weak divergence: the 𝔜-orthogonal projection of
/// ǧ = (1/r²)(r³ρψ)′ − l(l+1)ρχ onto {(dρ/du)h}. The toroidal part never enters.
pub fn divergence_lm(eq: &Equilibrium, grid: &RadialGrid, l: usize, psi: &RadialField, chi: &RadialField) -> DensityField {
    let b = divergence_load(eq, grid, l, psi, chi);
    if b.iter().all(|&v| v == 0.0) {
        return DensityField { h: RadialField::zeros(grid) };
    }
    let c = weighted_mass(grid, WeightKind::ESpace, eq);
    let h = c.cholesky().expect("density mass is positive definite").solve(&b);
    DensityField { h: RadialField::new(grid, h.iter().copied().collect()) }
}

/// b_j = ∫ ǧ φ_j r² dr = −∫ ρr²(rψφ_j′ + l(l+1)χφ_j) dr.
pub fn divergence_load(eq: &Equilibrium, grid: &RadialGrid, l: usize, psi: &RadialField, chi: &RadialField) -> DVector<f64> {
    let nu = eq.nu();
    let ll = (l * (l + 1)) as f64;
    let mut b = DVector::zeros(grid.n_nodes());
    for c in 0..grid.n_cells() {
        let (s0, s1) = grid.hat_slopes(c);
        for (r, w) in grid.cell_rule(c, nu) {
            let (p0, p1) = grid.hats(c, r);
            let rho = eq.profile(r).rho * r * r;
            let ps = psi.values[c] * p0 + psi.values[c + 1] * p1;
            let ch = chi.values[c] * p0 + chi.values[c + 1] * p1;
            b[c] -= w * rho * (r * ps * s0 + ll * ch * p0);
            b[c + 1] -= w * rho * (r * ps * s1 + ll * ch * p1);
        }
    }
    b
}

/// Pointwise ǧ = (1/r²)(r³ρψ)′ − l(l+1)ρχ of P1 fields (surface exponent ν−1).
pub fn divergence_pointwise(eq: &Equilibrium, l: usize, psi: &RadialField, chi: &RadialField, r: f64) -> f64 {
    let p = eq.profile(r);
    let ps = psi.at(r);
    let dps = psi.slope(r);
    let ll = (l * (l + 1)) as f64;
    r * (3.0 * p.rho * ps + r * p.drho_dr * ps + r * p.rho * dps) - ll * p.rho * chi.at(r)
}

/// Ǧ = −(du/dρ)g + 4π𝖦𝓗_l g and Ǧ′ at r, for g = (dρ/du)h.
pub fn enthalpy_perturbation(eq: &Equilibrium, kern: &HlKernel, g: &DensityField, r: f64) -> (f64, f64) {
    let (h, dh) = kern.eval(r);
    let fpg = eq.four_pi_g();
    (-g.h.at(r) + fpg * h, -g.h.slope(r) + fpg * dh)
}

/// Load vectors of 𝐌̂_l g against P1 hats in 𝔚: (∫Ǧ′φ_iρr³, sqrt(l(l+1))∫Ǧφ_iρr²).
pub fn mhat_loads(eq: &Equilibrium, grid: &RadialGrid, l: usize, g: &DensityField) -> (DVector<f64>, DVector<f64>) {
    let mut b1 = DVector::zeros(grid.n_nodes());
    let mut b2 = DVector::zeros(grid.n_nodes());
    if g.is_zero() {
        return (b1, b2);
    }
    let nu = eq.nu();
    let gf = |r: f64| g.value(eq, r);
    let kern = HlKernel::new(grid, l, &gf, nu - 1.0);
    let sl = ((l * (l + 1)) as f64).sqrt();
    for c in 0..grid.n_cells() {
        for (r, w) in grid.cell_rule(c, nu) {
            let (p0, p1) = grid.hats(c, r);
            let (gg, dgg) = enthalpy_perturbation(eq, &kern, g, r);
            let rho = eq.profile(r).rho;
            let v1 = w * dgg * rho * r * r * r;
            let v2 = w * sl * gg * rho * r * r;
            b1[c] += v1 * p0;
            b1[c + 1] += v1 * p1;
            b2[c] += v2 * p0;
            b2[c + 1] += v2 * p1;
        }
    }
    (b1, b2)
}

/// 𝐌̂_l g = ((1/r)Ǧ′, sqrt(l(l+1))Ǧ/r²), each projected onto P1 in 𝔚.
#[allow(non_snake_case)]
pub fn Mhat_apply(eq: &Equilibrium, grid: &RadialGrid, l: usize, g: &DensityField) -> (RadialField, RadialField) {
    if g.is_zero() {
        return (RadialField::zeros(grid), RadialField::zeros(grid));
    }
    let (b1, b2) = mhat_loads(eq, grid, l, g);
    let wn = WNorm::new(eq, grid);
    let m1 = wn.project(b1);
    let m2 = if l == 0 { vec![0.0; grid.n_nodes()] } else { wn.project(b2) };
    (RadialField::new(grid, m1), RadialField::new(grid, m2))
}

/// 𝐌̂_l g as a vector mode (χ = M2/sqrt(l(l+1)), no toroidal part).
pub fn mhat_mode(eq: &Equilibrium, grid: &RadialGrid, l: usize, m: i64, g: &DensityField) -> VectorModeLM {
    let (m1, m2) = Mhat_apply(eq, grid, l, g);
    let chi = if l == 0 { RadialField::zeros(grid) } else { m2.scaled(1.0 / ((l * (l + 1)) as f64).sqrt()) };
    VectorModeLM { l, m, psi: m1, chi, kappa_t: RadialField::zeros(grid) }
}

/// L̂_l ξ = 𝐌̂_l div ξ.
pub fn apply_l(eq: &Equilibrium, grid: &RadialGrid, x: &VectorModeLM) -> VectorModeLM {
    let g = divergence_lm(eq, grid, x.l, &x.psi, &x.chi);
    mhat_mode(eq, grid, x.l, x.m, &g)
}

/// Λ_l(g) = ∫ (du/dρ)|g|² r² dr − 4π𝖦 ∫_0^∞ (r²|Ψ′|² + l(l+1)|Ψ|²) dr with Ψ = −𝓗_l g.
///
/// `g_alpha` is the surface exponent of g. The exterior part is added in closed form.
#[allow(non_snake_case)]
pub fn quadratic_form_Lambda(eq: &Equilibrium, grid: &RadialGrid, l: usize, g: &dyn Fn(f64) -> f64, g_alpha: f64) -> f64 {
    let (local, gravity) = lambda_parts(eq, grid, l, g, g_alpha);
    local - gravity
}

/// The two nonnegative parts of Λ_l(g): the compliance term and the gravitational energy.
pub fn lambda_parts(eq: &Equilibrium, grid: &RadialGrid, l: usize, g: &dyn Fn(f64) -> f64, g_alpha: f64) -> (f64, f64) {
    let nu = eq.nu();
    let mut local = 0.0;
    for c in 0..grid.n_cells() {
        for (r, w) in grid.cell_rule(c, 1.0 - nu + 2.0 * g_alpha) {
            let gv = g(r);
            if gv != 0.0 {
                local += w * eq.profile(r).du_drho * gv * gv * r * r;
            }
        }
    }
    if local == 0.0 {
        return (0.0, 0.0);
    }
    let kern = HlKernel::new(grid, l, g, g_alpha);
    (local, eq.four_pi_g() * kern.energy())
}

/// The quadratic form ⟨L̂ξ, ξ⟩ = Λ_l(div ξ) with the pointwise divergence.
pub fn mode_quadratic_form(eq: &Equilibrium, grid: &RadialGrid, x: &VectorModeLM) -> f64 {
    let g = |r: f64| divergence_pointwise(eq, x.l, &x.psi, &x.chi, r);
    quadratic_form_Lambda(eq, grid, x.l, &g, eq.nu() - 1.0)
}

/// I = ∫ 𝓗_l(ǧ) ǧ r² dr against ρ_O(‖ψ‖²_𝔚 + l(l+1)‖χ‖²_𝔚).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IBound {
    #[serde(rename = "I")]
    pub i: f64,
    pub bound: f64,
    pub pass: bool,
}

#[allow(non_snake_case)]
pub fn form_I_bound_check(eq: &Equilibrium, grid: &RadialGrid, l: usize, psi: &RadialField, chi: &RadialField) -> IBound {
    let nu = eq.nu();
    let g = |r: f64| divergence_pointwise(eq, l, psi, chi, r);
    let kern = HlKernel::new(grid, l, &g, nu - 1.0);
    let i = kern.pair(&g, nu - 1.0);
    let wn = WNorm::new(eq, grid);
    let ll = (l * (l + 1)) as f64;
    let bound = eq.law.rho_center * (wn.sq(psi) + ll * wn.sq(chi));
    IBound { i, bound, pass: i <= bound * (1.0 + 1e-10) }
}

/// ∫ f φ_j ρ r⁴ dr for a pointwise function; used to project smooth profiles into 𝔚.
pub fn w_project_fn(eq: &Equilibrium, grid: &RadialGrid, f: &dyn Fn(f64) -> f64) -> RadialField {
    let nu = eq.nu();
    let src = |r: f64| f(r) * eq.profile(r).rho * r.powi(4);
    let b = load_vector(grid, Coef::new(&src, nu));
    RadialField::new(grid, WNorm::new(eq, grid).project(b))
}
