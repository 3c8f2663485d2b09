//! Pointwise coefficients: q_l, the Liouville normal form and its endpoint data.

use serde::{Deserialize, Serialize};

use crate::discretization::RadialGrid;
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};

/// q_l at one radius, with the polytrope cross-check of its potential part.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QlEval {
    pub value: f64,
    /// −(3−γ)4π𝖦ρ + l(l+1)(dP/dρ)/r², valid for the exact polytrope.
    pub closed_form: f64,
    /// The derivative terms of q_l (everything except l(l+1)(dP/dρ)/r² − 4π𝖦ρ).
    pub potential_part: f64,
    /// −Δ(dP/dρ − u) = −(2−γ)4π𝖦ρ.
    pub potential_identity: f64,
    /// True where q_l diverges (r = 0, l ≥ 1); `value` is then +∞.
    pub singular: bool,
}

impl QlEval {
    /// |potential_part − potential_identity| relative to the size of the terms.
    pub fn identity_mismatch(&self) -> f64 {
        let scale = self.potential_part.abs().max(self.potential_identity.abs()).max(f64::MIN_POSITIVE);
        (self.potential_part - self.potential_identity).abs() / scale
    }
}

/// q_l(r) = −(ρ/r²)(r²/ρ·(dP/dρ)′)′ + [(1/r²)(r²ρ′/ρ)′ + l(l+1)/r²]dP/dρ − 4π𝖦ρ.
pub fn q_l_coefficient(eq: &Equilibrium, l: usize, r: f64) -> Result<QlEval> {
    let pr = eq.eval_profile(r)?;
    let gm1 = eq.gamma() - 1.0;
    let fpg = eq.four_pi_g();
    let ll = (l * (l + 1)) as f64;
    let identity = -(2.0 - eq.gamma()) * fpg * pr.rho;
    if r == 0.0 {
        let closed = -(3.0 - eq.gamma()) * fpg * pr.rho;
        let singular = l >= 1;
        let value = if singular { f64::INFINITY } else { closed };
        return Ok(QlEval {
            value,
            closed_form: value,
            potential_part: identity,
            potential_identity: identity,
            singular,
        });
    }
    if r >= eq.radius {
        return Ok(QlEval { value: 0.0, closed_form: 0.0, potential_part: 0.0, potential_identity: 0.0, singular: false });
    }
    let c2 = pr.dpdrho;
    let dc2 = gm1 * pr.du_dr;
    let d2c2 = gm1 * pr.d2u_dr2;
    let lr = pr.dlnrho;
    let dlr = pr.d2rho_over_rho - lr * lr;
    let term1 = -d2c2 - 2.0 / r * dc2 + lr * dc2;
    let term2 = c2 * (dlr + 2.0 * lr / r);
    let potential_part = term1 + term2;
    let centrifugal = ll * c2 / (r * r);
    Ok(QlEval {
        value: potential_part + centrifugal - fpg * pr.rho,
        closed_form: -(3.0 - eq.gamma()) * fpg * pr.rho + centrifugal,
        potential_part,
        potential_identity: identity,
        singular: false,
    })
}

/// q_l on the open interval, skipping the domain check (assembly use).
pub(crate) fn q_l_interior(eq: &Equilibrium, l: usize, r: f64) -> f64 {
    q_l_coefficient(eq, l, r.clamp(f64::MIN_POSITIVE, eq.radius)).map(|q| q.value).unwrap_or(0.0)
}

/// κ(γ) in its three algebraic forms.
pub fn kappa_forms(gamma: f64) -> [f64; 3] {
    let g1 = gamma - 1.0;
    [
        (5.0 - 3.0 * gamma) * (3.0 - gamma) / (4.0 * g1 * g1),
        0.75 + (3.0 - 2.0 * gamma) / (g1 * g1),
        -0.25 + (gamma - 2.0) * (gamma - 2.0) / (g1 * g1),
    ]
}

/// κ(γ), the coefficient of (x₊−x)^{−2} in the transformed potential.
pub fn kappa(gamma: f64) -> f64 {
    kappa_forms(gamma)[0]
}

/// Weyl classification of the surface endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndpointClass {
    LimitPoint,
    LimitCircle,
}

pub fn endpoint_class(gamma: f64) -> EndpointClass {
    if kappa(gamma) >= 0.75 {
        EndpointClass::LimitPoint
    } else {
        EndpointClass::LimitCircle
    }
}

/// Exponents (μ₊, μ₋) = (l+1, −l) of the regular and irregular branches y ~ x^μ at x = 0.
pub fn frobenius_roots(l: usize) -> (f64, f64) {
    let lf = l as f64;
    (0.5 * (1.0 + (2.0 * lf + 1.0)), 0.5 * (1.0 - (2.0 * lf + 1.0)))
}

/// Liouville normal form −y″ + q̂y = λy of the local operator 𝓝_l00.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiouvilleData {
    pub l: usize,
    pub r: Vec<f64>,
    pub x_of_r: Vec<f64>,
    pub x_plus: f64,
    /// Interior radii where q̂ is sampled.
    pub q_hat_r: Vec<f64>,
    /// q̂ with B = 2/r + 2(dρ/dP)(dP/dρ)′ − ρ′/ρ (the coefficient that makes y′ drop out).
    pub q_hat: Vec<f64>,
    /// q̂ with B = 2/r + (dρ/dP)(dP/dρ)′ − ρ′/ρ.
    pub q_hat_single_b: Vec<f64>,
    pub kappa_const: f64,
    pub endpoint_class: EndpointClass,
}

/// (q̂, q̂ with the single-coefficient B) at an interior radius.
pub fn q_hat_at(eq: &Equilibrium, l: usize, r: f64) -> (f64, f64) {
    let pr = eq.profile(r);
    let gm1 = eq.gamma() - 1.0;
    let c2 = pr.dpdrho;
    let lc = gm1 * pr.du_dr / c2;
    let dlc = gm1 * pr.d2u_dr2 / c2 - lc * lc;
    let lr = pr.dlnrho;
    let dlr = pr.d2rho_over_rho - lr * lr;
    let a = 4.0 / r + 3.0 * lc - 2.0 * lr;
    let da = -4.0 / (r * r) + 3.0 * dlc - 2.0 * dlr;
    let b = 2.0 / r + 2.0 * lc - lr;
    let b1 = 2.0 / r + lc - lr;
    let q = q_l_interior(eq, l, r);
    (q + 0.25 * c2 * (da - 0.25 * a * a + a * b), q + 0.25 * c2 * (da - 0.25 * a * a + a * b1))
}

/// x(r) = ∫₀^r sqrt(dρ/dP) dr at the grid nodes; the integrand ~ (R−r)^{−1/2} at the surface.
pub fn liouville_x(eq: &Equilibrium, grid: &RadialGrid) -> Result<Vec<f64>> {
    if !(eq.k_surface > 0.0 && eq.k_surface.is_finite()) {
        return Err(Error::EndpointModelError(format!("surface slope K = {}", eq.k_surface)));
    }
    let f = |r: f64| (1.0 / eq.profile(r).dpdrho).sqrt();
    let mut x = vec![0.0; grid.n_nodes()];
    for c in 0..grid.n_cells() {
        let seg: f64 = grid.cell_rule(c, -0.5).iter().map(|&(r, w)| w * f(r)).sum();
        x[c + 1] = x[c] + seg;
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::EndpointModelError("x(r) quadrature is not finite".into()));
    }
    Ok(x)
}

pub fn liouville_transform(eq: &Equilibrium, grid: &RadialGrid, l: usize) -> Result<LiouvilleData> {
    if l == 0 {
        return Err(Error::InvalidParameter("the Liouville form is set up for l >= 1".into()));
    }
    let x = liouville_x(eq, grid)?;
    let x_plus = *x.last().unwrap();
    let q_hat_r: Vec<f64> = grid.nodes[1..grid.n_cells()].to_vec();
    let (q_hat, q_hat_single_b) = q_hat_r.iter().map(|&r| q_hat_at(eq, l, r)).unzip();
    Ok(LiouvilleData {
        l,
        r: grid.nodes.clone(),
        x_of_r: x,
        x_plus,
        q_hat_r,
        q_hat,
        q_hat_single_b,
        kappa_const: kappa(eq.gamma()),
        endpoint_class: endpoint_class(eq.gamma()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_grid;
    use crate::equilibrium::{build_equilibrium, GasLaw};
    use approx::assert_relative_eq;

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(5.0 / 3.0).abs() < 1e-15, true);
        for k in kappa_forms(4.0 / 3.0) {
            assert_relative_eq!(k, 15.0 / 4.0, max_relative = 1e-13);
        }
        assert_eq!(endpoint_class(1.5), EndpointClass::LimitPoint);
        assert_eq!(endpoint_class(1.5 + 1e-9), EndpointClass::LimitCircle);
    }

    #[test]
    fn frobenius() {
        assert_eq!(frobenius_roots(1), (2.0, -1.0));
        assert_eq!(frobenius_roots(2), (3.0, -2.0));
    }

    #[test]
    fn q_l_potential_identity_and_degree_shift() {
        let eq = build_equilibrium(GasLaw::unit(1.5).unwrap(), 8).unwrap();
        for &s in &[0.05, 0.3, 0.6, 0.9, 0.99] {
            let r = s * eq.radius;
            let q0 = q_l_coefficient(&eq, 0, r).unwrap();
            let q1 = q_l_coefficient(&eq, 1, r).unwrap();
            assert!(q0.identity_mismatch() < 1e-8, "r={r}: {q0:?}");
            assert_relative_eq!(q0.value, q0.closed_form, max_relative = 1e-8, epsilon = 1e-10);
            let p = eq.profile(r);
            assert_relative_eq!(q1.value - q0.value, 2.0 / (r * r) * p.dpdrho, max_relative = 1e-12);
        }
        assert!(q_l_coefficient(&eq, 1, 0.0).unwrap().singular);
    }

    #[test]
    fn liouville_surface_behaviour() {
        let eq = build_equilibrium(GasLaw::unit(4.0 / 3.0).unwrap(), 8).unwrap();
        // q̂ (x₊−x)² approaches κ at the surface only with the two-coefficient B
        let big_r = eq.radius;
        let grid = make_grid(big_r, 400, 2.0).unwrap();
        let data = liouville_transform(&eq, &grid, 1).unwrap();
        let i = data.q_hat_r.len() - 3;
        let r = data.q_hat_r[i];
        let dx = data.x_plus - data.x_of_r[i + 1];
        let k = kappa(eq.gamma());
        assert!((data.q_hat[i] * dx * dx - k).abs() < 0.02 * k, "{} vs {k}", data.q_hat[i] * dx * dx);
        assert!((data.q_hat_single_b[i] * dx * dx - k).abs() > 0.5 * k);
        let _ = r;
    }
}
