//! Local (differential) operators: 𝓛ˢˢ, 𝓝_l00 and A.

use nalgebra::{DMatrix, DVector};

use super::coefficients::q_l_interior;
use crate::discretization::{
    assemble_local, assemble_local_dirichlet, symmetrize, Coef, DiscreteForm, FormMeta, RadialGrid, WeightKind,
};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};

fn meta(name: &str, l: usize, eq: &Equilibrium) -> FormMeta {
    FormMeta { operator: name.to_string(), l, gamma: eq.gamma() }
}

/// 3Γ − 4 + 3(ρ/Γ)dΓ/dρ; the last term vanishes for the exact polytrope.
pub fn lss_potential_factor(gamma_eff: f64, rho_dgamma_drho_over_gamma: f64) -> f64 {
    3.0 * gamma_eff - 4.0 + 3.0 * rho_dgamma_drho_over_gamma
}

/// 𝓛ˢˢψ = −(1/(ρr⁴))(ΓP r⁴ψ′)′ − (3Γ−4)(u′/r)ψ in 𝔚, natural conditions at both ends.
#[allow(non_snake_case)]
pub fn assemble_Lss(eq: &Equilibrium, grid: &RadialGrid) -> DiscreteForm {
    let nu = eq.nu();
    let gamma = eq.gamma();
    let factor = lss_potential_factor(gamma, 0.0);
    let stiff = |r: f64| gamma * eq.profile(r).p * r.powi(4);
    let pot = |r: f64| {
        let p = eq.profile(r);
        -factor * p.du_dr_over_r * p.rho * r.powi(4)
    };
    let mass = |r: f64| eq.profile(r).rho * r.powi(4);
    let k = assemble_local(grid, Some(Coef::new(&stiff, nu + 1.0)), Some(Coef::new(&pot, nu)));
    let m = assemble_local(grid, None, Some(Coef::new(&mass, nu)));
    let (k, asym) = symmetrize(&k);
    DiscreteForm {
        k,
        m,
        inner_product: WeightKind::WSpace,
        constraint: None,
        meta: meta("Lss", 0, eq),
        asymmetry: asym,
        basis: None,
        drop_surface: false,
        grid: grid.clone(),
        tridiagonal: true,
    }
}

/// 𝓝_l00 in 𝔜: ∫ (r²/ρ)(dP/dρ)² g′h′ dr + ∫ q_l g h (1/ρ)(dP/dρ) r² dr.
///
/// The stiffness weight P behaves like (R−r)^{2−ν}, so ∫ dr/P converges at the surface
/// and the energy controls the value there: the Friedrichs extension from functions
/// supported away from R keeps g(R) = 0 (regular solution ~ (R−r)^{ν−1}). The surface
/// node is therefore eliminated. For ν ≥ 3 the hat next to the surface has infinite
/// energy and the operator is rejected.
#[allow(non_snake_case)]
pub fn assemble_Nl00(eq: &Equilibrium, grid: &RadialGrid, l: usize) -> Result<DiscreteForm> {
    let nu = eq.nu();
    if nu >= 3.0 {
        return Err(Error::NonConforming(format!(
            "the local density operator has no conforming P1 space for nu = {nu} >= 3"
        )));
    }
    let stiff = |r: f64| {
        let p = eq.profile(r);
        r * r * p.dpdrho * p.du_drho
    };
    let pot = |r: f64| {
        let p = eq.profile(r);
        q_l_interior(eq, l, r) * p.du_drho * r * r
    };
    let mass = |r: f64| eq.profile(r).du_drho * r * r;
    let (sc, pc, mc) = (Coef::new(&stiff, 2.0 - nu), Coef::new(&pot, 1.0 - nu), Coef::new(&mass, 1.0 - nu));
    let k = assemble_local_dirichlet(grid, Some(sc), Some(pc));
    let m = assemble_local_dirichlet(grid, None, Some(mc));
    let (k, asym) = symmetrize(&k);
    Ok(DiscreteForm {
        k,
        m,
        inner_product: WeightKind::YSpace,
        constraint: None,
        meta: meta("Nl00", l, eq),
        asymmetry: asym,
        basis: None,
        drop_surface: true,
        grid: grid.clone(),
        tridiagonal: true,
    })
}

/// A = −Δ⟨1⟩ − 4π𝖦 dρ/du in 𝔛₀ with y(R) = 0.
#[allow(non_snake_case)]
pub fn assemble_A(eq: &Equilibrium, grid: &RadialGrid) -> DiscreteForm {
    let (k, m) = a_blocks(eq, grid, true);
    DiscreteForm {
        k,
        m,
        inner_product: WeightKind::XBeta(0.0),
        constraint: None,
        meta: meta("A", 1, eq),
        asymmetry: 0.0,
        basis: None,
        drop_surface: true,
        grid: grid.clone(),
        tridiagonal: true,
    }
}

fn a_blocks(eq: &Equilibrium, grid: &RadialGrid, dirichlet: bool) -> (DMatrix<f64>, DMatrix<f64>) {
    let fpg = eq.four_pi_g();
    let nu = eq.nu();
    let stiff = |r: f64| r * r;
    let two = |_r: f64| 2.0;
    let grav = |r: f64| -fpg * eq.profile(r).drho_du * r * r;
    let mass = |r: f64| r * r;
    let asm = if dirichlet { assemble_local_dirichlet } else { assemble_local };
    let k = asm(grid, Some(Coef::new(&stiff, 0.0)), Some(Coef::new(&two, 0.0)))
        + asm(grid, None, Some(Coef::new(&grav, nu - 1.0)));
    let m = asm(grid, None, Some(Coef::new(&mass, 0.0)));
    (k, m)
}

/// Discrete residual of A applied to the translation profile u′:
/// ‖M⁻¹(K u′)‖_M / ‖u′‖_M over the rows of interior test functions.
pub fn a_translational_residual(eq: &Equilibrium, grid: &RadialGrid) -> f64 {
    let (k, m) = a_blocks(eq, grid, false);
    let n = grid.n_cells();
    let up = DVector::from_iterator(n + 1, grid.nodes.iter().map(|&r| eq.profile(r).du_dr));
    let res = (&k * &up).rows(0, n).into_owned();
    let mi = m.view((0, 0), (n, n)).into_owned();
    let rep = mi.clone().cholesky().expect("r² mass is positive definite").solve(&res);
    let num = rep.dot(&(&mi * &rep)).sqrt();
    let den = up.dot(&(&m * &up)).sqrt();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_grid;
    use crate::equilibrium::{build_equilibrium, GasLaw};

    #[test]
    fn lss_constant_is_null_at_four_thirds() {
        let eq = build_equilibrium(GasLaw::unit(4.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 50, 2.0).unwrap();
        let f = assemble_Lss(&eq, &grid);
        let ones = DVector::from_element(f.dim(), 1.0);
        assert!((&f.k * &ones).amax() < 1e-13 * f.k.amax());
    }

    #[test]
    fn nl00_rejects_high_index() {
        let eq = build_equilibrium(GasLaw::unit(4.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 20, 2.0).unwrap();
        assert!(matches!(assemble_Nl00(&eq, &grid, 1), Err(Error::NonConforming(_))));
        let eq = build_equilibrium(GasLaw::unit(1.4).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 20, 2.0).unwrap();
        let f = assemble_Nl00(&eq, &grid, 1).unwrap();
        assert!(f.drop_surface);
        assert_eq!(f.dim(), 20);
    }

    #[test]
    fn translation_residual_decreases() {
        let eq = build_equilibrium(GasLaw::unit(1.5).unwrap(), 8).unwrap();
        let r1 = a_translational_residual(&eq, &make_grid(eq.radius, 100, 2.0).unwrap());
        let r2 = a_translational_residual(&eq, &make_grid(eq.radius, 200, 2.0).unwrap());
        assert!(r2 < r1 / 3.0, "{r1} {r2}");
    }
}
