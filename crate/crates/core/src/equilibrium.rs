//! Polytropic equilibria from the Lane-Emden equation.
//!
//! The dimensionless profile Θ(ξ) solves (1/ξ²)(ξ²Θ′)′ = −Θ^ν with Θ(0) = 1,
//! Θ′(0) = 0. The physical star is u(αξ) = u_O Θ(ξ), ρ = ρ_O Θ^ν, P = Aρ^γ.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Radius where the power series hands over to the integrator.
pub const XI_SERIES: f64 = 1e-3;
/// Below this distance to ξ₁ the surface expansion replaces the stored samples.
const SURFACE_MODEL_WIDTH: f64 = 2e-4;
/// Steps grow linearly with ξ beyond this radius (long tails near ν = 5).
const XI_GRADING: f64 = 5.0;
/// Near the zero the step is limited to a multiple of h times the distance estimate
/// Θ/|Θ′|, since Θ^ν is not smooth there.
const SURFACE_GRADING: f64 = 50.0;

/// Polytropic gas law P = Aρ^γ together with 𝖦 and the central density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasLaw {
    pub gamma: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "G")]
    pub g_const: f64,
    pub rho_center: f64,
}

impl GasLaw {
    pub fn new(gamma: f64, a: f64, g_const: f64, rho_center: f64) -> Result<Self> {
        let law = Self { gamma, a, g_const, rho_center };
        law.validate()?;
        Ok(law)
    }

    /// Unit law: A = 𝖦 = ρ_O = 1.
    pub fn unit(gamma: f64) -> Result<Self> {
        Self::new(gamma, 1.0, 1.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.2 && self.gamma < 2.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidGamma(self.gamma));
        }
        for (name, v) in [("A", self.a), ("G", self.g_const), ("rho_center", self.rho_center)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Polytropic index ν = 1/(γ−1).
    pub fn nu(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    /// Central enthalpy u_O = Aγ/(γ−1)·ρ_O^{γ−1}.
    pub fn u_center(&self) -> f64 {
        self.a * self.gamma / (self.gamma - 1.0) * self.rho_center.powf(self.gamma - 1.0)
    }
}

/// Sampled Lane-Emden solution up to its first zero.
#[derive(Debug, Clone)]
pub struct LaneEmdenSolution {
    pub nu: f64,
    /// Base step of the integrator.
    pub step: f64,
    pub xi_grid: Vec<f64>,
    pub theta: Vec<f64>,
    pub dtheta: Vec<f64>,
    pub xi1: f64,
    pub dtheta_at_xi1: f64,
}

fn rhs(nu: f64, xi: f64, y: [f64; 2]) -> [f64; 2] {
    [y[1], -y[0].max(0.0).powf(nu) - 2.0 * y[1] / xi]
}

fn rk4(nu: f64, xi: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let k1 = rhs(nu, xi, y);
    let y2 = [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]];
    let k2 = rhs(nu, xi + 0.5 * h, y2);
    let y3 = [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]];
    let k3 = rhs(nu, xi + 0.5 * h, y3);
    let y4 = [y[0] + h * k3[0], y[1] + h * k3[1]];
    let k4 = rhs(nu, xi + h, y4);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

fn series(nu: f64, xi: f64) -> (f64, f64, f64) {
    let x2 = xi * xi;
    (
        1.0 - x2 / 6.0 + nu * x2 * x2 / 120.0,
        -xi / 3.0 + nu * x2 * xi / 30.0,
        -1.0 / 3.0 + nu * x2 / 10.0,
    )
}

/// Rough upper estimate of ξ₁, used only to abort runaway integrations.
fn xi_max_guess(nu: f64) -> f64 {
    (20.0 / (5.0 - nu).powf(1.2)).max(10.0)
}

/// Integrate the Lane-Emden equation and locate its first zero to `tol`.
pub fn solve_lane_emden(nu: f64, tol: f64) -> Result<LaneEmdenSolution> {
    let h = tol.powf(0.25).clamp(1e-4, 1e-2);
    solve_lane_emden_with_step(nu, tol, h)
}

/// As [`solve_lane_emden`] with an explicit base step (used for convergence studies).
pub fn solve_lane_emden_with_step(nu: f64, tol: f64, h: f64) -> Result<LaneEmdenSolution> {
    if nu >= 5.0 {
        return Err(Error::NoFiniteRadius(nu));
    }
    if !(nu > 0.0) || !(tol > 0.0) || !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("nu={nu}, tol={tol}, h={h}")));
    }
    let xi_stop = 1.2 * xi_max_guess(nu);
    let (t0, d0, _) = series(nu, XI_SERIES);
    let mut xi_grid = vec![0.0, XI_SERIES];
    let mut theta = vec![1.0, t0];
    let mut dtheta = vec![0.0, d0];
    let mut xi = XI_SERIES;
    let mut y = [t0, d0];
    loop {
        let mut step = h * (xi / XI_GRADING).max(1.0);
        if y[1] < 0.0 {
            step = step.min((SURFACE_GRADING * h * y[0] / -y[1]).max(1e-3 * h));
        }
        let next = rk4(nu, xi, y, step);
        if next[0] <= 0.0 {
            let (mut lo, mut hi) = (0.0, step);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if rk4(nu, xi, y, mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let s = 0.5 * (lo + hi);
            let end = rk4(nu, xi, y, s);
            let xi1 = xi + s;
            xi_grid.push(xi1);
            theta.push(0.0);
            dtheta.push(end[1]);
            return Ok(LaneEmdenSolution { nu, step: h, xi_grid, theta, dtheta, xi1, dtheta_at_xi1: end[1] });
        }
        xi += step;
        y = next;
        xi_grid.push(xi);
        theta.push(y[0]);
        dtheta.push(y[1]);
        if xi > xi_stop {
            return Err(Error::ZeroNotFound(xi_stop));
        }
    }
}

impl LaneEmdenSolution {
    /// (Θ, Θ′, Θ″) at ξ ∈ [0, ξ₁]; zero beyond ξ₁.
    pub fn eval(&self, xi: f64) -> (f64, f64, f64) {
        let nu = self.nu;
        if xi < XI_SERIES {
            return series(nu, xi);
        }
        if xi >= self.xi1 {
            let d = self.dtheta_at_xi1;
            return (0.0, d, -2.0 * d / self.xi1);
        }
        let s = self.xi1 - xi;
        let (t, d) = if s < SURFACE_MODEL_WIDTH {
            // Harmonic part plus the leading Θ^ν correction.
            let a = -self.dtheta_at_xi1;
            let an = a.powf(nu);
            let t = a * self.xi1 * s / xi - an * s.powf(nu + 2.0) / ((nu + 1.0) * (nu + 2.0));
            let d = -a * self.xi1 * self.xi1 / (xi * xi) + an * s.powf(nu + 1.0) / (nu + 1.0);
            (t, d)
        } else {
            let k = self.xi_grid.partition_point(|&x| x <= xi) - 1;
            let y = rk4(nu, self.xi_grid[k], [self.theta[k], self.dtheta[k]], xi - self.xi_grid[k]);
            (y[0], y[1])
        };
        (t, d, -t.max(0.0).powf(nu) - 2.0 * d / xi)
    }

    /// Θ′(ξ)/ξ, regular at the centre.
    pub fn dtheta_over_xi(&self, xi: f64) -> f64 {
        if xi < XI_SERIES {
            -1.0 / 3.0 + self.nu * xi * xi / 30.0
        } else {
            self.eval(xi).1 / xi
        }
    }
}

/// Boundary and integral forms of the structural constant C(ν).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StructuralConstant {
    /// −ξ₁Θ′(ξ₁).
    pub boundary: f64,
    /// −1 + ∫₀^{ξ₁} Θ^ν ξ dξ.
    pub integral_xi: f64,
    /// −1 + ∫₀^{ξ₁} Θ^ν ξ² dξ.
    pub integral_xi2: f64,
    /// ∫₀^{ξ₁} Θ^ν ξ² dξ (equals −ξ₁²Θ′(ξ₁)).
    pub mass_integral: f64,
    pub diff_boundary_xi: f64,
    pub diff_boundary_xi2: f64,
    pub diff_xi_xi2: f64,
}

/// C(ν) = −ξ₁Θ′(ξ₁) with the two integral variants for comparison.
pub fn structural_constant(sol: &LaneEmdenSolution) -> StructuralConstant {
    let nu = sol.nu;
    let n = 4000;
    let mut i1 = 0.0;
    let mut i2 = 0.0;
    // Θ^ν ~ (ξ₁−ξ)^ν at the surface: Gauss-Jacobi on the last panel.
    let hpan = sol.xi1 / n as f64;
    for p in 0..n {
        let a = p as f64 * hpan;
        let b = if p + 1 == n { sol.xi1 } else { a + hpan };
        let alpha = if p + 1 == n { nu } else { 0.0 };
        for (xi, w) in crate::discretization::segment_rule(a, b, alpha, 8) {
            let f = sol.eval(xi).0.max(0.0).powf(nu) * w;
            i1 += f * xi;
            i2 += f * xi * xi;
        }
    }
    let boundary = -sol.xi1 * sol.dtheta_at_xi1;
    let integral_xi = -1.0 + i1;
    let integral_xi2 = -1.0 + i2;
    StructuralConstant {
        boundary,
        integral_xi,
        integral_xi2,
        mass_integral: i2,
        diff_boundary_xi: boundary - integral_xi,
        diff_boundary_xi2: boundary - integral_xi2,
        diff_xi_xi2: integral_xi - integral_xi2,
    }
}

/// Pointwise equilibrium quantities. Primes are d/dr.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Profile {
    pub rho: f64,
    pub u: f64,
    #[serde(rename = "P")]
    pub p: f64,
    /// dP/dρ = (γ−1)u.
    pub dpdrho: f64,
    pub du_dr: f64,
    pub drho_dr: f64,
    pub d2u_dr2: f64,
    /// u′/r, finite at the centre.
    pub du_dr_over_r: f64,
    /// ρ′/ρ.
    pub dlnrho: f64,
    /// ρ″/ρ.
    pub d2rho_over_rho: f64,
    /// dρ/du = ρ·dρ/dP.
    pub drho_du: f64,
    /// du/dρ = (1/ρ)dP/dρ.
    pub du_drho: f64,
}

/// Spherical polytrope with a physical vacuum boundary at r = R.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub law: GasLaw,
    pub lane_emden: LaneEmdenSolution,
    pub u_center: f64,
    pub alpha: f64,
    pub radius: f64,
    /// K = −u′(R) > 0.
    pub k_surface: f64,
    pub r_samples: Vec<f64>,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub dpdrho: Vec<f64>,
    pub du_dr: Vec<f64>,
    pub drho_dr: Vec<f64>,
}

/// Build the equilibrium of `law`, with `n_samples` equally spaced stored samples.
pub fn build_equilibrium(law: GasLaw, n_samples: usize) -> Result<Equilibrium> {
    law.validate()?;
    let le = solve_lane_emden(law.nu(), 1e-12)?;
    Equilibrium::from_lane_emden(law, le, n_samples)
}

impl Equilibrium {
    pub fn from_lane_emden(law: GasLaw, le: LaneEmdenSolution, n_samples: usize) -> Result<Self> {
        law.validate()?;
        let u_center = law.u_center();
        let alpha = (u_center / (4.0 * PI * law.g_const * law.rho_center)).sqrt();
        let radius = alpha * le.xi1;
        let k_surface = u_center / alpha * le.dtheta_at_xi1.abs();
        let mut eq = Equilibrium {
            law,
            lane_emden: le,
            u_center,
            alpha,
            radius,
            k_surface,
            r_samples: vec![],
            rho: vec![],
            u: vec![],
            p: vec![],
            dpdrho: vec![],
            du_dr: vec![],
            drho_dr: vec![],
        };
        let n = n_samples.max(2);
        for i in 0..n {
            let r = radius * i as f64 / (n - 1) as f64;
            let pr = eq.profile(r);
            eq.r_samples.push(r);
            eq.rho.push(pr.rho);
            eq.u.push(pr.u);
            eq.p.push(pr.p);
            eq.dpdrho.push(pr.dpdrho);
            eq.du_dr.push(pr.du_dr);
            eq.drho_dr.push(pr.drho_dr);
        }
        Ok(eq)
    }

    pub fn gamma(&self) -> f64 {
        self.law.gamma
    }

    pub fn nu(&self) -> f64 {
        self.law.nu()
    }

    pub fn four_pi_g(&self) -> f64 {
        4.0 * PI * self.law.g_const
    }

    /// Profile at r with domain check.
    pub fn eval_profile(&self, r: f64) -> Result<Profile> {
        if !(r >= 0.0 && r <= self.radius * (1.0 + 1e-14)) {
            return Err(Error::OutOfDomain { r, radius: self.radius });
        }
        Ok(self.profile(r.min(self.radius)))
    }

    /// Profile at r ∈ [0, R] without domain check.
    pub fn profile(&self, r: f64) -> Profile {
        let nu = self.nu();
        let gm1 = self.law.gamma - 1.0;
        let a = self.alpha;
        let xi = r / a;
        let (t, dt, d2t) = self.lane_emden.eval(xi);
        let t = t.max(0.0);
        let rho = self.law.rho_center * t.powf(nu);
        let u = self.u_center * t;
        let du_dr = self.u_center / a * dt;
        let (dlnrho, d2rho_over_rho) = if t > 0.0 {
            let q = dt / t;
            (nu * q / a, nu * ((nu - 1.0) * q * q + d2t / t) / (a * a))
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        let drho_dr = self.law.rho_center * nu * t.powf(nu - 1.0) * dt / a;
        Profile {
            rho,
            u,
            p: self.law.a * rho.powf(self.law.gamma),
            dpdrho: gm1 * u,
            du_dr,
            drho_dr,
            d2u_dr2: self.u_center / (a * a) * d2t,
            du_dr_over_r: self.u_center / (a * a) * self.lane_emden.dtheta_over_xi(xi),
            dlnrho,
            d2rho_over_rho,
            drho_du: self.law.rho_center / (gm1 * self.u_center) * t.powf(nu - 1.0),
            du_drho: gm1 * self.u_center / self.law.rho_center * t.powf(1.0 - nu),
        }
    }

    /// Hydrostatic residual (1/r²)(r²u′)′ + 4π𝖦ρ by centred differences of u on a
    /// uniform mesh of `n` cells, sup-norm over interior points away from the surface.
    pub fn hydrostatic_residual(&self, n: usize) -> f64 {
        let h = self.radius / n as f64;
        let mut worst: f64 = 0.0;
        for i in 1..n - 1 {
            let r = i as f64 * h;
            if r > 0.9 * self.radius {
                break;
            }
            let (um, u0, up) = (self.profile(r - h).u, self.profile(r).u, self.profile(r + h).u);
            let lap = (up - 2.0 * u0 + um) / (h * h) + (up - um) / (h * r);
            worst = worst.max((lap + self.four_pi_g() * self.profile(r).rho).abs());
        }
        worst
    }

    pub fn to_document(&self) -> EquilibriumDocument {
        EquilibriumDocument {
            gamma: self.law.gamma,
            a: self.law.a,
            g: self.law.g_const,
            rho_center: self.law.rho_center,
            xi1: self.lane_emden.xi1,
            radius: self.radius,
            alpha: self.alpha,
            k: self.k_surface,
            samples: (0..self.r_samples.len())
                .map(|i| Sample { r: self.r_samples[i], rho: self.rho[i], u: self.u[i], p: self.p[i] })
                .collect(),
        }
    }
}

impl EquilibriumDocument {
    /// Rebuild the equilibrium the document was written from.
    pub fn rebuild(&self) -> Result<Equilibrium> {
        build_equilibrium(GasLaw::new(self.gamma, self.a, self.g, self.rho_center)?, self.samples.len())
    }
}

/// One stored profile sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub r: f64,
    pub rho: f64,
    pub u: f64,
    #[serde(rename = "P")]
    pub p: f64,
}

/// Serialized equilibrium.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumDocument {
    pub gamma: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "G")]
    pub g: f64,
    pub rho_center: f64,
    pub xi1: f64,
    #[serde(rename = "R")]
    pub radius: f64,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub samples: Vec<Sample>,
}
