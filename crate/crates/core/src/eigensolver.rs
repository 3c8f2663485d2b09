//! Generalized symmetric eigenproblems Kx = λMx and a shooting oracle for the local
//! radial operators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::discretization::{DiscreteForm, FormMeta};
use crate::equilibrium::Equilibrium;
use crate::error::{Error, Result};
use crate::operators::q_l_interior;

/// Default bound on the relative residual of a returned eigenpair.
pub const SOLVER_TOL: f64 = 1e-10;

/// Sorted eigenpairs of one discrete form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeSet {
    pub meta: FormMeta,
    pub lambdas: Vec<f64>,
    /// ‖Kx − λMx‖ / ((‖K‖ + |λ|‖M‖)‖x‖), Frobenius matrix norms, constraint direction removed.
    pub residuals: Vec<f64>,
    /// Eigenvectors in the form's reduced coordinates, M-orthonormal.
    #[serde(skip)]
    pub vectors: Vec<DVector<f64>>,
    /// Nodal values of each eigenvector on the full grid.
    #[serde(skip)]
    pub nodal: Vec<Vec<f64>>,
    pub k_norm: f64,
    pub m_norm: f64,
}

impl ModeSet {
    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// Eigenvalue uncertainty implied by the residual of pair j.
    pub fn residual_scale(&self, j: usize) -> f64 {
        let r = self.residuals[j].max(f64::EPSILON);
        r * (self.k_norm + self.lambdas[j].abs() * self.m_norm) / self.m_norm
    }

    /// |λ_j| ≤ 10·(residual scale): indistinguishable from zero.
    pub fn is_numerical_kernel(&self, j: usize) -> bool {
        self.lambdas[j].abs() <= 10.0 * self.residual_scale(j)
    }

    /// Index of the eigenvalue of smallest magnitude.
    pub fn smallest_magnitude(&self) -> Option<usize> {
        (0..self.len()).min_by(|&a, &b| self.lambdas[a].abs().total_cmp(&self.lambdas[b].abs()))
    }

    /// JSON document {meta, lambdas, residuals, vectors?}.
    pub fn to_json(&self, with_vectors: bool) -> serde_json::Value {
        let mut v = serde_json::json!({
            "meta": self.meta,
            "lambdas": self.lambdas,
            "residuals": self.residuals,
        });
        if with_vectors {
            v["vectors"] = serde_json::json!(self.nodal);
        }
        v
    }
}

/// Orthonormal basis of the complement of c, as the trailing columns of a Householder
/// reflector. Returns v with Q = I − 2vvᵀ/(vᵀv).
fn householder(c: &DVector<f64>) -> DVector<f64> {
    let mut v = c.clone();
    let s = if c[0] >= 0.0 { 1.0 } else { -1.0 };
    v[0] += s * c.norm();
    v
}

/// Q A Q for symmetric A and Q = I − 2vvᵀ/(vᵀv), in O(n²).
fn reflect(a: &DMatrix<f64>, v: &DVector<f64>) -> DMatrix<f64> {
    let beta = 2.0 / v.dot(v);
    let av = a * v;
    let vav = v.dot(&av);
    let w = &av * beta - v * (0.5 * beta * beta * vav);
    let mut out = a.clone();
    out.ger(-1.0, &w, v, 1.0);
    out.ger(-1.0, v, &w, 1.0);
    out
}

fn apply_reflector(v: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    let beta = 2.0 / v.dot(v);
    y - v * (beta * v.dot(y))
}

fn relative_residual(form: &DiscreteForm, x: &DVector<f64>, lambda: f64, kn: f64, mn: f64) -> f64 {
    let mut r = &form.k * x - (&form.m * x) * lambda;
    if let Some(c) = &form.constraint {
        r -= c * (c.dot(&r) / c.dot(c));
    }
    r.norm() / ((kn + lambda.abs() * mn) * x.norm())
}

fn finish(form: &DiscreteForm, pairs: Vec<(f64, DVector<f64>)>) -> Result<ModeSet> {
    let kn = form.k.norm();
    let mn = form.m.norm();
    let mut lambdas = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    let mut nodal = Vec::with_capacity(pairs.len());
    for (lambda, x) in pairs {
        if !lambda.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBreakdown("non-finite eigenpair".into()));
        }
        residuals.push(relative_residual(form, &x, lambda, kn, mn));
        nodal.push(form.prolong(&x).iter().copied().collect());
        lambdas.push(lambda);
        vectors.push(x);
    }
    Ok(ModeSet { meta: form.meta.clone(), lambdas, residuals, vectors, nodal, k_norm: kn, m_norm: mn })
}

/// Dense solve: constraint projection, M = LLᵀ, symmetric QR on L⁻¹KL⁻ᵀ,
/// back-transformation. Returns the k smallest pairs (all when k is None).
pub fn solve_gsep(form: &DiscreteForm, k: Option<usize>) -> Result<ModeSet> {
    let n = form.dim();
    if n == 0 {
        return finish(form, Vec::new());
    }
    let (kr, mr, refl) = match &form.constraint {
        Some(c) => {
            if c.norm() == 0.0 {
                return Err(Error::ConstraintDegenerate);
            }
            let v = householder(c);
            let kq = reflect(&form.k, &v);
            let mq = reflect(&form.m, &v);
            (kq.view((1, 1), (n - 1, n - 1)).into_owned(), mq.view((1, 1), (n - 1, n - 1)).into_owned(), Some(v))
        }
        None => (form.k.clone(), form.m.clone(), None),
    };
    let m_dim = kr.nrows();
    if m_dim == 0 {
        return finish(form, Vec::new());
    }
    let chol = mr.cholesky().ok_or(Error::MassNotPD)?;
    let l = chol.l();
    let lk = l
        .solve_lower_triangular(&kr)
        .ok_or_else(|| Error::NumericalBreakdown("singular Cholesky factor".into()))?;
    let a = l
        .solve_lower_triangular(&lk.transpose())
        .ok_or_else(|| Error::NumericalBreakdown("singular Cholesky factor".into()))?;
    let a = (&a + a.transpose()) * 0.5;
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBreakdown("non-finite reduced matrix".into()));
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..m_dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let take = k.unwrap_or(m_dim).min(m_dim);
    let lt = l.transpose();
    let mut pairs = Vec::with_capacity(take);
    for &i in order.iter().take(take) {
        let z = eig.eigenvectors.column(i).into_owned();
        let y = lt
            .solve_upper_triangular(&z)
            .ok_or_else(|| Error::NumericalBreakdown("singular Cholesky factor".into()))?;
        let x = match &refl {
            Some(v) => {
                let mut full = DVector::zeros(n);
                full.rows_mut(1, n - 1).copy_from(&y);
                apply_reflector(v, &full)
            }
            None => y,
        };
        pairs.push((eig.eigenvalues[i], x));
    }
    finish(form, pairs)
}

/// Tridiagonal pencil extracted from a form.
struct Tri {
    kd: Vec<f64>,
    ke: Vec<f64>,
    md: Vec<f64>,
    me: Vec<f64>,
}

impl Tri {
    fn new(form: &DiscreteForm) -> Self {
        let n = form.dim();
        Tri {
            kd: (0..n).map(|i| form.k[(i, i)]).collect(),
            ke: (1..n).map(|i| form.k[(i, i - 1)]).collect(),
            md: (0..n).map(|i| form.m[(i, i)]).collect(),
            me: (1..n).map(|i| form.m[(i, i - 1)]).collect(),
        }
    }

    /// Number of eigenvalues below σ: negative pivots of LDLᵀ(K − σM).
    fn count(&self, sigma: f64) -> usize {
        let mut neg = 0;
        let mut d = self.kd[0] - sigma * self.md[0];
        if d < 0.0 {
            neg += 1;
        }
        for i in 1..self.kd.len() {
            let e = self.ke[i - 1] - sigma * self.me[i - 1];
            let prev = if d == 0.0 { f64::EPSILON * e.abs().max(f64::MIN_POSITIVE) } else { d };
            d = self.kd[i] - sigma * self.md[i] - e * e / prev;
            if d < 0.0 {
                neg += 1;
            }
        }
        neg
    }

    fn mul_m(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = x.len();
        DVector::from_fn(n, |i, _| {
            let mut s = self.md[i] * x[i];
            if i > 0 {
                s += self.me[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.me[i] * x[i + 1];
            }
            s
        })
    }

    /// Solve (K − σM)x = b by Gaussian elimination with partial pivoting.
    fn shifted_solve(&self, sigma: f64, b: &DVector<f64>) -> DVector<f64> {
        let n = b.len();
        let mut diag: Vec<f64> = (0..n).map(|i| self.kd[i] - sigma * self.md[i]).collect();
        let mut sup: Vec<f64> = (0..n.saturating_sub(1)).map(|i| self.ke[i] - sigma * self.me[i]).collect();
        let mut sub = sup.clone();
        let mut sup2 = vec![0.0; n];
        let mut rhs: Vec<f64> = b.iter().copied().collect();
        let tiny = f64::EPSILON * diag.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        for i in 0..n.saturating_sub(1) {
            if sub[i].abs() > diag[i].abs() {
                // swap rows i and i+1
                std::mem::swap(&mut diag[i], &mut sub[i]);
                let d1 = diag[i + 1];
                diag[i + 1] = sup[i];
                sup[i] = d1;
                if i + 1 < n - 1 {
                    sup2[i] = sup[i + 1];
                    sup[i + 1] = 0.0;
                }
                rhs.swap(i, i + 1);
            }
            if diag[i] == 0.0 {
                diag[i] = tiny;
            }
            let f = sub[i] / diag[i];
            diag[i + 1] -= f * sup[i];
            if i + 1 < n - 1 {
                sup[i + 1] -= f * sup2[i];
            }
            rhs[i + 1] -= f * rhs[i];
        }
        if diag[n - 1] == 0.0 {
            diag[n - 1] = tiny;
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut s = rhs[i];
            if i + 1 < n {
                s -= sup[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= sup2[i] * x[i + 2];
            }
            x[i] = s / diag[i];
        }
        DVector::from_vec(x)
    }
}

/// Number of eigenvalues of a tridiagonal form below σ (Sylvester inertia).
pub fn sturm_count(form: &DiscreteForm, sigma: f64) -> Result<usize> {
    if !form.tridiagonal || form.constraint.is_some() {
        return Err(Error::InvalidParameter("Sturm counting needs an unconstrained tridiagonal form".into()));
    }
    Ok(Tri::new(form).count(sigma))
}

/// The k smallest pairs of a tridiagonal form by Sturm bisection and inverse iteration.
pub fn solve_tridiagonal(form: &DiscreteForm, k: usize) -> Result<ModeSet> {
    if !form.tridiagonal || form.constraint.is_some() {
        return Err(Error::InvalidParameter("tridiagonal solver needs an unconstrained tridiagonal form".into()));
    }
    let n = form.dim();
    let k = k.min(n);
    if k == 0 {
        return finish(form, Vec::new());
    }
    let tri = Tri::new(form);
    let mass_only = Tri { kd: tri.md.clone(), ke: tri.me.clone(), md: vec![0.0; n], me: vec![0.0; n - 1] };
    if tri.md.iter().any(|&d| d <= 0.0) || mass_only.count(0.0) != 0 {
        return Err(Error::MassNotPD);
    }
    let scale = tri.kd.iter().zip(&tri.md).map(|(k, m)| (k / m).abs()).fold(1.0f64, f64::max);
    let mut lo = -scale;
    let mut guard = 0;
    while tri.count(lo) > 0 {
        lo *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::NumericalBreakdown("no lower spectral bound".into()));
        }
    }
    let mut hi = scale;
    guard = 0;
    while tri.count(hi) < k {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::NumericalBreakdown("no upper spectral bound".into()));
        }
    }
    let mut pairs: Vec<(f64, DVector<f64>)> = Vec::with_capacity(k);
    for j in 0..k {
        let (mut a, mut b) = (lo, hi);
        for _ in 0..300 {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if tri.count(mid) <= j {
                a = mid;
            } else {
                b = mid;
            }
        }
        let lambda = 0.5 * (a + b);
        let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.3 * ((i as f64) * 0.7).sin());
        for _ in 0..4 {
            let rhs = tri.mul_m(&x);
            x = tri.shifted_solve(lambda, &rhs);
            for (_, prev) in &pairs {
                let proj = prev.dot(&tri.mul_m(&x));
                x -= prev * proj;
            }
            let nm = x.dot(&tri.mul_m(&x)).sqrt();
            if !(nm.is_finite() && nm > 0.0) {
                return Err(Error::NumericalBreakdown("inverse iteration collapsed".into()));
            }
            x /= nm;
        }
        pairs.push((lambda, x));
        lo = a.min(lambda);
    }
    finish(form, pairs)
}

/// Local operators the shooting oracle can integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OperatorKind {
    Lss,
    Nl00,
    A,
}

/// Strong form −(P y′)′ + Q y = λ W y with logarithmic derivatives of P and W.
struct SlCoefficients<'a> {
    eq: &'a Equilibrium,
    kind: OperatorKind,
    l: usize,
}

struct SlPoint {
    p: f64,
    q: f64,
    w: f64,
    dlnp: f64,
    dlnw: f64,
}

impl SlCoefficients<'_> {
    fn at(&self, r: f64) -> SlPoint {
        let pr = self.eq.profile(r);
        let gamma = self.eq.gamma();
        match self.kind {
            OperatorKind::Lss => {
                let r4 = r.powi(4);
                let dlnp_rho = pr.dpdrho * pr.dlnrho * pr.rho / pr.p;
                SlPoint {
                    p: gamma * pr.p * r4,
                    q: -(3.0 * gamma - 4.0) * pr.du_dr_over_r * pr.rho * r4,
                    w: pr.rho * r4,
                    dlnp: dlnp_rho + 4.0 / r,
                    dlnw: pr.dlnrho + 4.0 / r,
                }
            }
            OperatorKind::Nl00 => {
                let w = pr.du_drho * r * r;
                SlPoint {
                    p: r * r * pr.dpdrho * pr.du_drho,
                    q: q_l_interior(self.eq, self.l, r) * w,
                    w,
                    dlnp: 2.0 / r + (2.0 * gamma - 3.0) * pr.dlnrho,
                    dlnw: 2.0 / r + (gamma - 2.0) * pr.dlnrho,
                }
            }
            OperatorKind::A => SlPoint {
                p: r * r,
                q: 2.0 - self.eq.four_pi_g() * pr.drho_du * r * r,
                w: r * r,
                dlnp: 2.0 / r,
                dlnw: 2.0 / r,
            },
        }
    }
}

/// Offset of the integration endpoints in the stretched variable s.
const SHOOT_EPS: f64 = 1e-4;
const SHOOT_MATCH: f64 = 0.5;
const SHOOT_TOL: f64 = 1e-12;

/// r(s) = R(1 − (1−s)²): linear at the centre, quadratic clustering at the surface.
fn r_of_s(radius: f64, s: f64) -> (f64, f64) {
    let t = 1.0 - s;
    (radius * (1.0 - t * t), 2.0 * radius * t)
}

/// Scaled Prüfer angle: tan θ = S y /(P y′), S = √(PW).
fn prufer_rhs(co: &SlCoefficients, radius: f64, lambda: f64, s: f64, theta: f64) -> f64 {
    let (r, drds) = r_of_s(radius, s);
    let c = co.at(r);
    let sw = (c.w / c.p).sqrt();
    let (sn, cs) = theta.sin_cos();
    drds * (sw * (cs * cs + (lambda - c.q / c.w) * sn * sn) + 0.5 * (c.dlnp + c.dlnw) * sn * cs)
}

/// Dormand–Prince 5(4) for a scalar equation on [a, b] (b < a allowed).
fn dopri_scalar(f: &dyn Fn(f64, f64) -> f64, a: f64, b: f64, y0: f64, tol: f64) -> Result<f64> {
    const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
    const A: [[f64; 6]; 7] = [
        [0.0; 6],
        [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
    const B4: [f64; 7] =
        [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];
    let dir = (b - a).signum();
    let span = (b - a).abs();
    let mut x = a;
    let mut y = y0;
    let mut h = 1e-3 * span;
    let mut steps = 0usize;
    while (b - x) * dir > 1e-15 * span {
        steps += 1;
        if steps > 2_000_000 {
            return Err(Error::NumericalBreakdown("shooting integration did not finish".into()));
        }
        h = h.min((b - x).abs());
        let hs = h * dir;
        let mut k = [0.0; 7];
        for i in 0..7 {
            let yi = y + hs * (0..i).map(|j| A[i][j] * k[j]).sum::<f64>();
            k[i] = f(x + C[i] * hs, yi);
        }
        let y5 = y + hs * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
        let y4 = y + hs * (0..7).map(|i| B4[i] * k[i]).sum::<f64>();
        let err = (y5 - y4).abs() / (tol * (1.0 + y5.abs()));
        if !err.is_finite() {
            return Err(Error::NumericalBreakdown("non-finite Prüfer angle".into()));
        }
        if err <= 1.0 {
            x += hs;
            y = y5;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Ok(y)
}

/// Prüfer mismatch D(λ) = θ_left(m) − θ_right(m); the n-th eigenvalue (from 0)
/// solves D(λ) = nπ and D increases with λ.
pub fn prufer_mismatch(eq: &Equilibrium, kind: OperatorKind, l: usize, lambda: f64) -> Result<f64> {
    if kind == OperatorKind::Nl00 && eq.nu() >= 3.0 {
        return Err(Error::NonConforming(format!("nu = {} >= 3", eq.nu())));
    }
    let co = SlCoefficients { eq, kind, l };
    let radius = eq.radius;
    let nu = eq.nu();
    let (s0, s1) = (SHOOT_EPS, 1.0 - SHOOT_EPS);

    let (r0, _) = r_of_s(radius, s0);
    let c0 = co.at(r0);
    let (y, z) = match kind {
        // bounded branch, flux from integrating (Q − λW) ~ r⁴
        OperatorKind::Lss => (1.0, (c0.q - lambda * c0.w) * r0 / 5.0),
        OperatorKind::Nl00 => (r0.powi(l as i32), c0.p * l as f64 * r0.powi(l as i32 - 1)),
        OperatorKind::A => (r0, c0.p),
    };
    let theta_l0 = ((c0.p * c0.w).sqrt() * y).atan2(z);

    let (r1, _) = r_of_s(radius, s1);
    let t = radius - r1;
    let c1 = co.at(r1);
    let theta_r1 = match kind {
        // bounded branch, W and Q vanish like (R−r)^ν
        OperatorKind::Lss => {
            let z = -(c1.q - lambda * c1.w) * t / (nu + 1.0);
            (c1.p * c1.w).sqrt().atan2(z)
        }
        // regular branch (R−r)^{ν−1}
        OperatorKind::Nl00 => {
            let z = -c1.p * (nu - 1.0) * t.powf(nu - 2.0);
            ((c1.p * c1.w).sqrt() * t.powf(nu - 1.0)).atan2(z)
        }
        OperatorKind::A => std::f64::consts::PI,
    };
    let f = |s: f64, th: f64| prufer_rhs(&co, radius, lambda, s, th);
    let left = dopri_scalar(&f, s0, SHOOT_MATCH, theta_l0, SHOOT_TOL)?;
    let right = dopri_scalar(&f, s1, SHOOT_MATCH, theta_r1, SHOOT_TOL)?;
    Ok(left - right)
}

/// Number of eigenvalues strictly below λ according to the Prüfer count.
pub fn shooting_count(eq: &Equilibrium, kind: OperatorKind, l: usize, lambda: f64) -> Result<usize> {
    let d = prufer_mismatch(eq, kind, l, lambda)?;
    Ok(if d <= 0.0 { 0 } else { (d / std::f64::consts::PI).ceil() as usize })
}

/// Eigenvalues in [lo, hi] of a local operator, bisected to 1e−8 relative.
pub fn shooting_oracle(eq: &Equilibrium, kind: OperatorKind, l: usize, window: (f64, f64)) -> Result<Vec<f64>> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::InvalidParameter(format!("invalid eigenvalue window [{lo}, {hi}]")));
    }
    if kind == OperatorKind::Nl00 && l == 0 {
        return Err(Error::InvalidParameter("the shooting start for the density operator needs l >= 1".into()));
    }
    let pi = std::f64::consts::PI;
    let d_lo = prufer_mismatch(eq, kind, l, lo)?;
    let d_hi = prufer_mismatch(eq, kind, l, hi)?;
    let first = (d_lo / pi).floor() as i64 + 1;
    let last = (d_hi / pi).ceil() as i64 - 1;
    let mut out = Vec::new();
    for n in first.max(0)..=last {
        let target = n as f64 * pi;
        let (mut a, mut b) = (lo, hi);
        while (b - a) > 1e-10 * a.abs().max(b.abs()).max(1e-300) {
            let mid = 0.5 * (a + b);
            if prufer_mismatch(eq, kind, l, mid)? < target {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(0.5 * (a + b));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{make_grid, WeightKind};
    use crate::equilibrium::{build_equilibrium, GasLaw};
    use crate::operators::{assemble_A, assemble_Lss, assemble_Nl00};

    fn plain_form(k: DMatrix<f64>, m: DMatrix<f64>, tridiagonal: bool) -> DiscreteForm {
        let grid = make_grid(1.0, k.nrows(), 1.0).unwrap();
        DiscreteForm {
            k,
            m,
            inner_product: WeightKind::PlainR2,
            constraint: None,
            meta: FormMeta { operator: "test".into(), l: 0, gamma: 0.0 },
            asymmetry: 0.0,
            basis: None,
            drop_surface: false,
            grid,
            tridiagonal,
        }
    }

    #[test]
    fn identity_pencil() {
        let m = DMatrix::from_fn(5, 5, |i, j| if i == j { 2.0 } else if i.abs_diff(j) == 1 { 0.5 } else { 0.0 });
        let ms = solve_gsep(&plain_form(m.clone(), m, false), None).unwrap();
        assert!(ms.lambdas.iter().all(|l| (l - 1.0).abs() < 1e-13));
    }

    fn laplace_form(n: usize) -> DiscreteForm {
        // hat elements on [0, π], Dirichlet at both ends
        let h = std::f64::consts::PI / n as f64;
        let dim = n - 1;
        let k = DMatrix::from_fn(dim, dim, |i, j| if i == j { 2.0 / h } else if i.abs_diff(j) == 1 { -1.0 / h } else { 0.0 });
        let m = DMatrix::from_fn(dim, dim, |i, j| if i == j { 4.0 * h / 6.0 } else if i.abs_diff(j) == 1 { h / 6.0 } else { 0.0 });
        plain_form(k, m, true)
    }

    #[test]
    fn laplacian_second_order() {
        let e1 = solve_gsep(&laplace_form(40), Some(3)).unwrap();
        let e2 = solve_gsep(&laplace_form(80), Some(3)).unwrap();
        for nmode in 1..=3 {
            let exact = (nmode * nmode) as f64;
            let a = (e1.lambdas[nmode - 1] - exact).abs();
            let b = (e2.lambdas[nmode - 1] - exact).abs();
            let order = (a / b).log2();
            assert!((order - 2.0).abs() < 0.05, "mode {nmode}: order {order}");
        }
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let f = laplace_form(60);
        let d = solve_gsep(&f, Some(6)).unwrap();
        let t = solve_tridiagonal(&f, 6).unwrap();
        for j in 0..6 {
            assert!((d.lambdas[j] - t.lambdas[j]).abs() < 1e-11 * d.lambdas[j]);
            assert!(t.residuals[j] < SOLVER_TOL);
        }
        assert_eq!(sturm_count(&f, 4.5).unwrap(), 2);
    }

    #[test]
    fn constrained_modes_satisfy_constraint() {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 60, 2.0).unwrap();
        let f = crate::operators::assemble_Nl(&eq, &grid, 0).unwrap();
        let ms = solve_gsep(&f, Some(5)).unwrap();
        let c = f.constraint.clone().unwrap();
        for (j, x) in ms.vectors.iter().enumerate() {
            assert!(c.dot(x).abs() < 1e-12 * c.norm() * x.norm());
            assert!(ms.residuals[j] < SOLVER_TOL);
            assert!((x.dot(&(&f.m * x)) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn shooting_matches_ritz_for_a() {
        let eq = build_equilibrium(GasLaw::unit(1.5).unwrap(), 8).unwrap();
        let lam = shooting_oracle(&eq, OperatorKind::A, 1, (-10.0, 10.0)).unwrap();
        let grid = make_grid(eq.radius, 800, 1.0).unwrap();
        let ms = solve_gsep(&assemble_A(&eq, &grid), Some(lam.len() + 1)).unwrap();
        assert!(!lam.is_empty());
        for (a, b) in lam.iter().zip(&ms.lambdas) {
            assert!((a - b).abs() < 1e-4 * a.abs().max(1e-2), "{a} {b}");
        }
    }

    #[test]
    fn shooting_window_below_spectrum_is_empty() {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        assert!(shooting_oracle(&eq, OperatorKind::Lss, 0, (-1e3, -9e2)).unwrap().is_empty());
    }

    #[test]
    fn lss_and_nl00_shooting_counts() {
        let eq = build_equilibrium(GasLaw::unit(5.0 / 3.0).unwrap(), 8).unwrap();
        let grid = make_grid(eq.radius, 400, 2.0).unwrap();
        let lss = solve_tridiagonal(&assemble_Lss(&eq, &grid), 4).unwrap();
        let shot = shooting_oracle(&eq, OperatorKind::Lss, 0, (-1.0, lss.lambdas[3] * 1.01)).unwrap();
        assert_eq!(shot.len(), 4, "{shot:?} vs {:?}", lss.lambdas);
        let nl = solve_tridiagonal(&assemble_Nl00(&eq, &grid, 1).unwrap(), 3).unwrap();
        let shot = shooting_oracle(&eq, OperatorKind::Nl00, 1, (-10.0, nl.lambdas[2] * 1.01)).unwrap();
        assert_eq!(shot.len(), 3, "{shot:?} vs {:?}", nl.lambdas);
    }
}
