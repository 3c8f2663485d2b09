//! Resolvent of the degree-l operator and closed-form mode evolution.
//!
//! All maps here go through one discrete chain: densities g = (dρ/du)h with h
//! piecewise linear, 𝐌̂_l projected onto P1 fields in 𝔚, and the weak divergence
//! projected back onto densities. The discrete 𝓝_l is the matrix of h ↦ div 𝐌̂_l g,
//! so div ξ reproduces g to round-off whenever ξ is built from 𝐌̂_l g.

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::discretization::{weighted_mass, RadialGrid, WeightKind};
use crate::eigensolver::{solve_gsep, ModeSet};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::operators::{
    assemble_Nl, divergence_load, divergence_lm, mhat_loads, mhat_mode, DensityField, RadialField, VectorModeLM, WNorm,
};

/// Relative size of the solenoidal residue below which a trajectory counts as periodic.
pub const PERIODIC_TOL: f64 = 1e-10;
/// Relative mismatch allowed between div v0 and E·sqrt(λ)·φ.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// The discrete density operator h ↦ div 𝐌̂_l((dρ/du)h) with its projections.
pub struct DensityOperator<'a> {
    pub eq: &'a Equilibrium,
    pub grid: RadialGrid,
    pub l: usize,
    /// Columns are the images of the nodal unit vectors.
    pub matrix: DMatrix<f64>,
    density_mass: DMatrix<f64>,
    density_chol: Cholesky<f64, Dyn>,
    wnorm: WNorm,
}

impl<'a> DensityOperator<'a> {
    pub fn new(eq: &'a Equilibrium, grid: &RadialGrid, l: usize) -> Result<Self> {
        let n = grid.n_nodes();
        let wnorm = WNorm::new(eq, grid);
        let density_mass = weighted_mass(grid, WeightKind::ESpace, eq);
        let density_chol = density_mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NumericalBreakdown("density mass is not positive definite".into()))?;
        let mut b1 = DMatrix::zeros(n, n);
        let mut b2 = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut h = vec![0.0; n];
            h[k] = 1.0;
            let g = DensityField { h: RadialField::new(grid, h) };
            let (c1, c2) = mhat_loads(eq, grid, l, &g);
            b1.set_column(k, &c1);
            b2.set_column(k, &c2);
        }
        let psi = wnorm.project_columns(&b1);
        let sl = ((l * (l + 1)) as f64).sqrt();
        let chi = if l == 0 { DMatrix::zeros(n, n) } else { wnorm.project_columns(&b2) / sl };
        let mut d = DMatrix::zeros(n, n);
        for k in 0..n {
            let p = RadialField::new(grid, psi.column(k).iter().copied().collect());
            let c = RadialField::new(grid, chi.column(k).iter().copied().collect());
            d.set_column(k, &divergence_load(eq, grid, l, &p, &c));
        }
        let matrix = density_chol.solve(&d);
        Ok(Self { eq, grid: grid.clone(), l, matrix, density_mass, density_chol, wnorm })
    }

    /// 𝔜 norm of g = (dρ/du)h.
    pub fn density_norm(&self, h: &DVector<f64>) -> f64 {
        h.dot(&(&self.density_mass * h)).max(0.0).sqrt()
    }

    pub fn wnorm(&self) -> &WNorm {
        &self.wnorm
    }

    /// Nodal h of the weak divergence of a mode.
    pub fn divergence(&self, x: &VectorModeLM) -> DVector<f64> {
        let b = divergence_load(self.eq, &self.grid, self.l, &x.psi, &x.chi);
        if b.iter().all(|&v| v == 0.0) {
            return DVector::zeros(b.len());
        }
        self.density_chol.solve(&b)
    }

    pub fn density(&self, h: &DVector<f64>) -> DensityField {
        DensityField { h: RadialField::new(&self.grid, h.iter().copied().collect()) }
    }

    /// Refine an approximate eigenpair (λ0, h0) of the symmetric pencil into an
    /// eigenpair of the discrete operator by Rayleigh quotient iteration.
    pub fn refine_eigenpair(&self, lambda0: f64, h0: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let n = self.matrix.nrows();
        let mut x = h0 / h0.norm();
        let mut lambda = lambda0;
        let scale = self.matrix.norm();
        for it in 0..30 {
            let shift = if it < 3 { lambda0 } else { lambda };
            let a = &self.matrix - DMatrix::identity(n, n) * shift;
            let y = match a.lu().solve(&x) {
                Some(y) if y.iter().all(|v| v.is_finite()) => y,
                _ => break,
            };
            x = &y / y.norm();
            let ax = &self.matrix * &x;
            lambda = x.dot(&ax);
            if (ax - &x * lambda).norm() <= 1e-13 * scale {
                break;
            }
        }
        let res = (&self.matrix * &x - &x * lambda).norm();
        if res > 1e-9 * scale {
            return Err(Error::NumericalBreakdown(format!("eigenpair refinement stalled at residual {res:e}")));
        }
        Ok((lambda, x))
    }
}

/// (λ − 𝓝_l)⁻¹ div f followed by ξ = (f + 𝐌̂_l g)/λ.
pub struct Resolvent<'a> {
    pub op: DensityOperator<'a>,
    /// Spectrum of the symmetric 𝓝_l pencil on the same grid.
    pub spectrum: ModeSet,
}

impl<'a> Resolvent<'a> {
    pub fn new(eq: &'a Equilibrium, grid: &RadialGrid, l: usize) -> Result<Self> {
        let op = DensityOperator::new(eq, grid, l)?;
        let spectrum = solve_gsep(&assemble_Nl(eq, grid, l)?, None)?;
        Ok(Self { op, spectrum })
    }

    /// Returns ξ and the density g = (λ − 𝓝_l)⁻¹ div f.
    pub fn apply_with_density(&self, lambda: f64, f: &VectorModeLM) -> Result<(VectorModeLM, DensityField)> {
        if lambda == 0.0 || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("resolvent needs a finite nonzero lambda, got {lambda}")));
        }
        if f.l != self.op.l {
            return Err(Error::InvalidParameter(format!("mode degree {} differs from operator degree {}", f.l, self.op.l)));
        }
        for j in 0..self.spectrum.len() {
            let dist = (lambda - self.spectrum.lambdas[j]).abs();
            if dist <= 10.0 * self.spectrum.residual_scale(j) {
                return Err(Error::NearSpectrum { lambda, distance: dist });
            }
        }
        let d = self.op.divergence(f);
        let n = d.len();
        let h = if d.iter().all(|&v| v == 0.0) {
            DVector::zeros(n)
        } else {
            let a = DMatrix::identity(n, n) * lambda - &self.op.matrix;
            a.lu().solve(&d).ok_or(Error::NearSpectrum { lambda, distance: 0.0 })?
        };
        let g = self.op.density(&h);
        let m = mhat_mode(self.op.eq, &self.op.grid, f.l, f.m, &g);
        Ok((f.combine(1.0 / lambda, &m, 1.0 / lambda), g))
    }

    pub fn apply(&self, lambda: f64, f: &VectorModeLM) -> Result<VectorModeLM> {
        self.apply_with_density(lambda, f).map(|(x, _)| x)
    }
}

/// 𝔚-norm of λξ − L̂_l ξ − f relative to ‖f‖, with L̂_l ξ = 𝐌̂_l div ξ.
pub fn resolvent_residual(op: &DensityOperator, lambda: f64, xi: &VectorModeLM, f: &VectorModeLM) -> f64 {
    let g = op.density(&op.divergence(xi));
    let lx = mhat_mode(op.eq, &op.grid, xi.l, xi.m, &g);
    let r = xi.scaled(lambda).combine(1.0, &lx, -1.0).combine(1.0, f, -1.0);
    let nf = op.wnorm().mode(f);
    op.wnorm().mode(&r) / if nf > 0.0 { nf } else { 1.0 }
}

/// Time dependence of the non-solenoidal part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Branch {
    /// sin(ωt), ω = sqrt(λ).
    Oscillatory { omega: f64 },
    /// e^{rate·t}.
    Exponential { rate: f64 },
}

/// ξ̂(t) = 𝐁t + amplitude·f(t)·shape, sampled at `times`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeTrajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<VectorModeLM>,
    pub b_field: VectorModeLM,
    pub shape: VectorModeLM,
    pub amplitude: f64,
    pub branch: Branch,
    pub periodic_flag: bool,
    /// ‖ξ̂(t)‖ in 𝔚 at each sample.
    pub norms: Vec<f64>,
    /// (‖ψ‖, sqrt(l(l+1))‖χ‖, sqrt(l(l+1))‖κ_t‖) at each sample.
    pub component_norms: Vec<[f64; 3]>,
}

impl ModeTrajectory {
    fn build(
        wn: &WNorm,
        times: &[f64],
        b_field: VectorModeLM,
        shape: VectorModeLM,
        amplitude: f64,
        branch: Branch,
        periodic_flag: bool,
    ) -> Self {
        let mut tr = ModeTrajectory {
            times: times.to_vec(),
            snapshots: Vec::with_capacity(times.len()),
            b_field,
            shape,
            amplitude,
            branch,
            periodic_flag,
            norms: Vec::with_capacity(times.len()),
            component_norms: Vec::with_capacity(times.len()),
        };
        let sl = ((tr.shape.l * (tr.shape.l + 1)) as f64).sqrt();
        for &t in times {
            let x = tr.at(t);
            tr.norms.push(wn.mode(&x));
            tr.component_norms.push([wn.sq(&x.psi).sqrt(), sl * wn.sq(&x.chi).sqrt(), sl * wn.sq(&x.kappa_t).sqrt()]);
            tr.snapshots.push(x);
        }
        tr
    }

    pub fn time_factor(&self, t: f64) -> f64 {
        match self.branch {
            Branch::Oscillatory { omega } => (omega * t).sin(),
            Branch::Exponential { rate } => (rate * t).exp(),
        }
    }

    /// Closed-form ξ̂ at any time.
    pub fn at(&self, t: f64) -> VectorModeLM {
        self.b_field.combine(t, &self.shape, self.amplitude * self.time_factor(t))
    }

    /// CSV with header t,norm,psi_norm,chi_norm,kappa_t_norm.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "norm", "psi_norm", "chi_norm", "kappa_t_norm"])?;
        for (i, &t) in self.times.iter().enumerate() {
            let c = self.component_norms[i];
            w.write_record(&[t.to_string(), self.norms[i].to_string(), c[0].to_string(), c[1].to_string(), c[2].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// ξ̂(t) = 𝐁t + (E/λ)sin(sqrt(λ)t)𝐌̂_lφ with 𝐁 = v0 − (E/sqrt(λ))𝐌̂_lφ.
///
/// (λ, φ) must be an eigenpair of the discrete operator (see
/// [`DensityOperator::refine_eigenpair`]); div v0 must equal E·sqrt(λ)·φ.
pub fn evolve_mode(
    op: &DensityOperator,
    lambda: f64,
    phi: &DVector<f64>,
    e: f64,
    v0: &VectorModeLM,
    times: &[f64],
) -> Result<ModeTrajectory> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("periodic evolution needs lambda > 0, got {lambda}")));
    }
    if v0.l != op.l {
        return Err(Error::InvalidParameter(format!("mode degree {} differs from operator degree {}", v0.l, op.l)));
    }
    let w = lambda.sqrt();
    let target = phi * (e * w);
    let div = op.divergence(v0);
    let mismatch = op.density_norm(&(&div - &target));
    let scale = op.density_norm(&target).max(op.density_norm(&div));
    if mismatch > COMPATIBILITY_TOL * scale {
        return Err(Error::IncompatibleInitialData(mismatch / scale.max(f64::MIN_POSITIVE)));
    }
    let shape = mhat_mode(op.eq, &op.grid, op.l, v0.m, &op.density(phi));
    let b_field = v0.combine(1.0, &shape, -e / w);
    let nb = op.wnorm().mode(&b_field);
    let ref_scale = op.wnorm().mode(v0).max(op.wnorm().mode(&shape) * (e / w).abs());
    let periodic = nb <= PERIODIC_TOL * ref_scale || ref_scale == 0.0;
    Ok(ModeTrajectory::build(op.wnorm(), times, b_field, shape, e / lambda, Branch::Oscillatory { omega: w }, periodic))
}

/// ξ̂(t) = −(E/λ)e^{−λt}𝐌̂_0φ for a radial eigenpair (λ < 0, ψ) of 𝓛ˢˢ, φ = div(rψ e_r).
/// Spherically symmetric solenoidal fields vanish, so 𝐁 = 0.
pub fn negative_mode_growth(
    eq: &Equilibrium,
    grid: &RadialGrid,
    lambda: f64,
    psi: &RadialField,
    e: f64,
    times: &[f64],
) -> Result<ModeTrajectory> {
    if !(lambda < 0.0) {
        return Err(Error::NotUnstable(lambda));
    }
    let phi = divergence_lm(eq, grid, 0, psi, &RadialField::zeros(grid));
    let shape = mhat_mode(eq, grid, 0, 0, &phi);
    let wn = WNorm::new(eq, grid);
    let b_field = VectorModeLM::zeros(grid, 0, 0);
    Ok(ModeTrajectory::build(&wn, times, b_field, shape, -e / lambda, Branch::Exponential { rate: -lambda }, false))
}

/// Least-squares line y = a + bx; returns (slope, intercept, R²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_grid;
    use crate::equilibrium::{build_equilibrium, GasLaw};

    fn setup(n: usize) -> (Equilibrium, RadialGrid) {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, n, 2.0).unwrap();
        (eq, grid)
    }

    #[test]
    fn resolvent_of_zero_is_zero() {
        let (eq, grid) = setup(30);
        let res = Resolvent::new(&eq, &grid, 1).unwrap();
        let x = res.apply(0.37, &VectorModeLM::zeros(&grid, 1, 0)).unwrap();
        assert!(x.psi.is_zero() && x.chi.is_zero() && x.kappa_t.is_zero());
    }

    #[test]
    fn resolvent_chain_is_consistent() {
        let (eq, grid) = setup(40);
        for l in [0usize, 2] {
            let res = Resolvent::new(&eq, &grid, l).unwrap();
            let psi = RadialField::from_fn(&grid, |r| (1.0 + r).cos());
            let chi = if l == 0 { RadialField::zeros(&grid) } else { RadialField::from_fn(&grid, |r| r * r - 0.3) };
            let kt = if l == 0 { RadialField::zeros(&grid) } else { RadialField::from_fn(&grid, |r| r.sin()) };
            let f = VectorModeLM::new(l, 0, psi, chi, kt).unwrap();
            let lambda = 0.5 * (res.spectrum.lambdas[1] + res.spectrum.lambdas[2]);
            let (xi, g) = res.apply_with_density(lambda, &f).unwrap();
            let div = res.op.divergence(&xi);
            let gh = DVector::from_column_slice(&g.h.values);
            assert!(res.op.density_norm(&(&div - &gh)) <= 1e-8 * res.op.density_norm(&gh), "l={l}");
            assert!(resolvent_residual(&res.op, lambda, &xi, &f) < 1e-7, "l={l}");
        }
    }

    #[test]
    fn resolvent_rejects_eigenvalue() {
        let (eq, grid) = setup(30);
        let res = Resolvent::new(&eq, &grid, 1).unwrap();
        let lam = res.spectrum.lambdas[3];
        let z = RadialField::zeros(&grid);
        let f = VectorModeLM::new(1, 0, RadialField::from_fn(&grid, |r| r), z.clone(), z).unwrap();
        assert!(matches!(res.apply(lam, &f), Err(Error::NearSpectrum { .. })));
    }

    #[test]
    fn periodic_and_growing_trajectories() {
        let (eq, grid) = setup(40);
        let l = 1;
        let op = DensityOperator::new(&eq, &grid, l).unwrap();
        let ms = solve_gsep(&assemble_Nl(&eq, &grid, l).unwrap(), Some(3)).unwrap();
        let (lambda, phi) = op.refine_eigenpair(ms.lambdas[2], &DVector::from_column_slice(&ms.nodal[2])).unwrap();
        let e = 0.7;
        let shape = mhat_mode(&eq, &grid, l, 0, &op.density(&phi));
        let v0 = shape.scaled(e / lambda.sqrt());
        let period = 2.0 * std::f64::consts::PI / lambda.sqrt();
        let times: Vec<f64> = (0..30).map(|i| i as f64 * period / 10.0).collect();
        let tr = evolve_mode(&op, lambda, &phi, e, &v0, &times).unwrap();
        assert!(tr.periodic_flag);
        for i in 0..20 {
            let d = tr.snapshots[i + 10].combine(1.0, &tr.snapshots[i], -1.0);
            assert!(op.wnorm().mode(&d) <= 1e-8 * op.wnorm().mode(&v0));
        }
        let mut v1 = v0.clone();
        v1.kappa_t = RadialField::from_fn(&grid, |r| r * (1.0 - r / eq.radius));
        let tr = evolve_mode(&op, lambda, &phi, e, &v1, &times).unwrap();
        assert!(!tr.periodic_flag);
        let bad = v0.scaled(2.0);
        assert!(matches!(evolve_mode(&op, lambda, &phi, e, &bad, &times), Err(Error::IncompatibleInitialData(_))));
    }

    #[test]
    fn zero_data_zero_trajectory() {
        let (eq, grid) = setup(20);
        let op = DensityOperator::new(&eq, &grid, 1).unwrap();
        let phi = DVector::from_element(grid.n_nodes(), 1.0);
        let tr = evolve_mode(&op, 2.0, &phi, 0.0, &VectorModeLM::zeros(&grid, 1, 0), &[0.0, 1.0, 2.0]).unwrap();
        assert!(tr.norms.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stable_mode_is_not_unstable() {
        let (eq, grid) = setup(20);
        let psi = RadialField::from_fn(&grid, |_| 1.0);
        assert!(matches!(negative_mode_growth(&eq, &grid, 0.5, &psi, 1.0, &[0.0]), Err(Error::NotUnstable(_))));
    }

    #[test]
    fn fit_recovers_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let (s, c, r2) = linear_fit(&x, &y);
        assert!((s - 2.0).abs() < 1e-14 && (c + 1.0).abs() < 1e-14 && (r2 - 1.0).abs() < 1e-14);
    }
}
