//! The full density operator 𝓝_l = 𝓝_l00 + 𝓝_l01.
//!
//! 𝓝_l factors as −T∘B̃ with T = ∇·(ρ∇·) at degree l and B̃ g = (du/dρ)g − 4π𝖦𝓗_l g.
//! Its eigenproblem 𝓝_l g = λg is solved through the symmetric pencil
//!
//!   ⟨B̃g, g′⟩ = λ ⟨(−T)⁻¹g, g′⟩,
//!
//! with densities g = (dρ/du)h, h piecewise linear. The left form is exact on the
//! trial space; the right one is the compliance of the weighted Poisson problem.

use nalgebra::{DMatrix, DVector};

use super::gravity::gravity_matrix;
use super::potential::potential_stiffness;
use crate::discretization::{
    apply_zero_mean_constraint, symmetrize, weighted_mass, DiscreteForm, FormMeta, RadialGrid, WeightKind,
};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};

/// Pieces of the 𝓝_l pencil on the nodal coordinates h.
#[derive(Debug, Clone)]
pub struct NlBlocks {
    /// C_ij = ∫ φ_i (dρ/du) φ_j r² dr; equals ⟨(dρ/du)φ_i, (dρ/du)φ_j⟩ in 𝔜.
    pub density_mass: DMatrix<f64>,
    /// 𝒢_ij = ∫ 𝓗_l((dρ/du)φ_i)(dρ/du)φ_j r² dr, symmetrized.
    pub gravity: DMatrix<f64>,
    /// ‖𝒢 − 𝒢ᵀ‖/‖𝒢‖ before symmetrization.
    pub gravity_asymmetry: f64,
    /// ⟨(−T)⁻¹g_i, g_j⟩.
    pub compliance: DMatrix<f64>,
}

pub fn nl_blocks(eq: &Equilibrium, grid: &RadialGrid, l: usize) -> Result<NlBlocks> {
    let nu = eq.nu();
    let c = weighted_mass(grid, WeightKind::ESpace, eq);
    let w = |r: f64| eq.profile(r).drho_du;
    let (g, asym) = symmetrize(&gravity_matrix(grid, l, &w, nu - 1.0));
    let compliance = if l == 0 {
        radial_compliance(eq, grid)
    } else {
        let s = potential_stiffness(eq, grid, l);
        let ch = s
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("potential stiffness is not positive definite".into()))?;
        let x = ch.solve(&c);
        symmetrize(&(&c * x)).0
    };
    Ok(NlBlocks { density_mass: c, gravity: g, gravity_asymmetry: asym, compliance })
}

/// Assemble 𝓝_l as the pencil (K, M) = (C − 4π𝖦𝒢, ⟨(−T)⁻¹·,·⟩); l = 0 carries the
/// zero-mean constraint ∫ g r² dr = 0.
#[allow(non_snake_case)]
pub fn assemble_Nl(eq: &Equilibrium, grid: &RadialGrid, l: usize) -> Result<DiscreteForm> {
    let b = nl_blocks(eq, grid, l)?;
    let k = &b.density_mass - &b.gravity * eq.four_pi_g();
    let form = DiscreteForm {
        k,
        m: b.compliance,
        inner_product: WeightKind::YSpace,
        constraint: None,
        meta: FormMeta { operator: "Nl".into(), l, gamma: eq.gamma() },
        asymmetry: b.gravity_asymmetry,
        basis: None,
        drop_surface: false,
        grid: grid.clone(),
        tridiagonal: false,
    };
    if l == 0 {
        apply_zero_mean_constraint(form, WeightKind::ESpace, eq)
    } else {
        Ok(form)
    }
}

/// Radial compliance ∫ m_i m_j /(ρr²) dr with m the enclosed density moment.
///
/// For zero-mean g the enclosed moment ∫_0^r g s² ds equals −∫_r^R g s² ds. The
/// inner half of the star uses the first form and the outer half the second, which
/// gives a positive form on all of ℝ^{N+1} that is exact on the constrained subspace.
fn radial_compliance(eq: &Equilibrium, grid: &RadialGrid) -> DMatrix<f64> {
    let n = grid.n_cells();
    let nu = eq.nu();
    let w = |r: f64| eq.profile(r).drho_du * r * r;
    // full integrals of each local hat over each cell
    let mut cell_int = vec![[0.0; 2]; n];
    for (c, ci) in cell_int.iter_mut().enumerate() {
        for (r, wq) in grid.cell_rule(c, nu - 1.0) {
            let (p0, p1) = grid.hats(c, r);
            ci[0] += wq * w(r) * p0;
            ci[1] += wq * w(r) * p1;
        }
    }
    let mut total = vec![0.0; n + 1];
    for c in 0..n {
        total[c] += cell_int[c][0];
        total[c + 1] += cell_int[c][1];
    }
    let half = 0.5 * grid.radius();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for c in 0..n {
        let (a, b) = grid.cell(c);
        let last = c + 1 == n;
        for (r, wq) in grid.cell_rule(c, nu) {
            let scale = (wq / (eq.profile(r).rho * r * r)).sqrt();
            let mut v = DVector::zeros(n + 1);
            let part = |lo: f64, hi: f64, alpha: f64| {
                let mut s = [0.0; 2];
                for (x, wx) in crate::discretization::segment_rule(lo, hi, alpha, 8) {
                    let (p0, p1) = grid.hats(c, x);
                    s[0] += wx * w(x) * p0;
                    s[1] += wx * w(x) * p1;
                }
                s
            };
            if r < half {
                let inside = part(a, r, 0.0);
                for k in 0..c {
                    v[k] = total[k];
                }
                v[c] = inside[0] + if c > 0 { cell_int[c - 1][1] } else { 0.0 };
                v[c + 1] = inside[1];
            } else {
                let outside = part(r, b, if last { nu - 1.0 } else { 0.0 });
                v[c] = outside[0];
                v[c + 1] = outside[1] + if !last { cell_int[c + 1][0] } else { 0.0 };
                for k in c + 2..=n {
                    v[k] = total[k];
                }
            }
            cols.push(v * scale);
        }
    }
    let vm = DMatrix::from_columns(&cols);
    symmetrize(&(&vm * vm.transpose())).0
}

/// Density g(r) = (dρ/du)(r)·h(r) of nodal coefficients h.
pub fn nl_density(eq: &Equilibrium, grid: &RadialGrid, h: &[f64], r: f64) -> f64 {
    eq.profile(r).drho_du * grid.interpolate(h, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_grid;
    use crate::equilibrium::{build_equilibrium, GasLaw};

    #[test]
    fn blocks_symmetric_and_positive() {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 40, 2.0).unwrap();
        for l in 0..3 {
            let b = nl_blocks(&eq, &grid, l).unwrap();
            assert!(b.gravity_asymmetry < 1e-8, "l={l}: {}", b.gravity_asymmetry);
            assert!(b.compliance.clone().cholesky().is_some(), "l={l}");
        }
    }
}
