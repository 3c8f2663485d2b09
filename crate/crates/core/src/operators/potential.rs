//! The degenerate elliptic problem ∇·(ρ∇U) = f, degree by degree.

use nalgebra::{DMatrix, DVector};

use super::RadialField;
use crate::discretization::{assemble_local, load_vector, weighted_mass, Coef, RadialGrid, WeightKind};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};

/// S_ij = ∫ ρ(φ_i′φ_j′ r² + l(l+1)φ_iφ_j) dr.
pub fn potential_stiffness(eq: &Equilibrium, grid: &RadialGrid, l: usize) -> DMatrix<f64> {
    let nu = eq.nu();
    let ll = (l * (l + 1)) as f64;
    let a = |r: f64| eq.profile(r).rho * r * r;
    let c = |r: f64| ll * eq.profile(r).rho;
    let pot = if l == 0 { None } else { Some(Coef::new(&c, nu)) };
    assemble_local(grid, Some(Coef::new(&a, nu)), pot)
}

/// Relative size of ∫ f r² dr that still counts as zero mean.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// Solve S U = b with b already holding −∫ f φ_j r² dr. For l = 0 the solution is
/// normalized by ∫ U ρ(dρ/dP) r² dr = 0.
pub fn solve_potential_load(eq: &Equilibrium, grid: &RadialGrid, l: usize, b: &DVector<f64>) -> Result<DVector<f64>> {
    let s = potential_stiffness(eq, grid, l);
    if l > 0 {
        return s
            .cholesky()
            .map(|ch| ch.solve(b))
            .ok_or_else(|| Error::NumericalBreakdown("potential stiffness is not positive definite".into()));
    }
    let total: f64 = b.sum();
    let scale: f64 = b.iter().map(|v| v.abs()).sum();
    if total.abs() > COMPATIBILITY_TOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::IncompatibleSource(total));
    }
    let e = weighted_mass(grid, WeightKind::ESpace, eq) * DVector::from_element(grid.n_nodes(), 1.0);
    let n = grid.n_nodes();
    let mut big = DMatrix::zeros(n + 1, n + 1);
    big.view_mut((0, 0), (n, n)).copy_from(&s);
    for i in 0..n {
        big[(i, n)] = e[i];
        big[(n, i)] = e[i];
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from(b);
    let sol = big
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericalBreakdown("bordered potential system is singular".into()))?;
    Ok(sol.rows(0, n).into_owned())
}

/// Weak solution of ∫ρU′V′r² + l(l+1)∫ρUV = −∫ f V r² for a nodal source f.
pub fn solve_potential_l(eq: &Equilibrium, grid: &RadialGrid, l: usize, f: &RadialField) -> Result<RadialField> {
    let src = |r: f64| -f.at(r) * r * r;
    let b = load_vector(grid, Coef::new(&src, 0.0));
    let u = solve_potential_load(eq, grid, l, &b)?;
    Ok(RadialField::new(grid, u.iter().copied().collect()))
}

/// Dual-norm residual ‖S U − b‖ / ‖b‖ of a computed potential.
pub fn potential_residual(eq: &Equilibrium, grid: &RadialGrid, l: usize, f: &RadialField, u: &RadialField) -> f64 {
    let src = |r: f64| -f.at(r) * r * r;
    let b = load_vector(grid, Coef::new(&src, 0.0));
    let s = potential_stiffness(eq, grid, l);
    let uv = DVector::from_column_slice(&u.values);
    let mut r = s * uv - &b;
    if l == 0 {
        // the multiplier row absorbs a multiple of the constraint vector
        let e = weighted_mass(grid, WeightKind::ESpace, eq) * DVector::from_element(grid.n_nodes(), 1.0);
        let mu = r.dot(&e) / e.dot(&e);
        r -= e * mu;
    }
    r.norm() / b.norm().max(f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_grid;
    use crate::equilibrium::{build_equilibrium, GasLaw};

    #[test]
    fn zero_source() {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 30, 2.0).unwrap();
        for l in 0..3 {
            let u = solve_potential_l(&eq, &grid, l, &RadialField::zeros(&grid)).unwrap();
            assert!(u.values.iter().all(|v| v.abs() < 1e-14));
        }
    }

    #[test]
    fn incompatible_source_rejected() {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 30, 2.0).unwrap();
        let f = RadialField::from_fn(&grid, |_| 1.0);
        assert!(matches!(solve_potential_l(&eq, &grid, 0, &f), Err(Error::IncompatibleSource(_))));
        assert!(solve_potential_l(&eq, &grid, 1, &f).is_ok());
    }
}
