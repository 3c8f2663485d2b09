//! The check suite: one named, self-contained numerical experiment per claim about
//! the polytrope operators, collected into a machine-readable report.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{make_grid, weighted_mass, DiscreteForm, FormMeta, RadialGrid, WeightKind};
use crate::dynamics::{evolve_mode, linear_fit, negative_mode_growth, DensityOperator};
use crate::eigensolver::{shooting_count, shooting_oracle, solve_gsep, solve_tridiagonal, OperatorKind};
use crate::equilibrium::{build_equilibrium, solve_lane_emden, solve_lane_emden_with_step, structural_constant, Equilibrium, GasLaw};
use crate::error::{Error, Result};
use crate::operators::{
    a_translational_residual, assemble_A, assemble_Lss, assemble_Nl, assemble_Nl00, divergence_load, endpoint_class,
    exterior_energy_numeric, form_I_bound_check, hl_apply, hl_weak_residual, kappa, kappa_forms, liouville_transform,
    mhat_mode, mode_quadratic_form, potential_stiffness, lambda_parts, EndpointClass, HlKernel, RadialField,
    VectorModeLM, WNorm,
};

const FOUR_THIRDS: f64 = 4.0 / 3.0;

/// What to run. Tolerances are multiplied by `tolerance_scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationConfig {
    pub gammas: Vec<f64>,
    pub ls: Vec<usize>,
    pub ns: Vec<usize>,
    pub p: f64,
    pub n_modes: usize,
    pub seed: u64,
    pub n_random: usize,
    pub tolerance_scale: f64,
    /// Names of checks to run; empty means all.
    pub only: Vec<String>,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            gammas: vec![1.3, FOUR_THIRDS, 1.5, 5.0 / 3.0],
            ls: vec![0, 1, 2],
            ns: vec![200, 400, 800],
            p: 2.0,
            n_modes: 8,
            seed: 20240607,
            n_random: 100,
            tolerance_scale: 1.0,
            only: Vec::new(),
        }
    }
}

impl VerificationConfig {
    pub fn validate(&self) -> Result<()> {
        for &g in &self.gammas {
            GasLaw::unit(g)?;
        }
        if self.ns.is_empty() || self.ns.iter().any(|&n| n < 8) {
            return Err(Error::InvalidParameter("the N list needs values >= 8".into()));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidGrid(format!("clustering exponent p = {} < 1", self.p)));
        }
        if !(self.tolerance_scale >= 0.0) {
            return Err(Error::InvalidParameter("tolerance scale must be >= 0".into()));
        }
        Ok(())
    }

    fn n_max(&self) -> usize {
        *self.ns.iter().max().unwrap_or(&400)
    }

    fn n_mid(&self) -> usize {
        let mut v = self.ns.clone();
        v.sort_unstable();
        v[v.len() / 2]
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// The statement being tested, in words.
    pub claim: String,
    pub measured: BTreeMap<String, f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub skipped: Option<String>,
    pub diagnostic: Option<String>,
    pub runtime_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub config: VerificationConfig,
    pub results: Vec<CheckResult>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.name == name)
    }

    /// Fixed-width table, one line per check.
    pub fn table(&self) -> String {
        let mut s = format!("{:<30} {:<6} {:>9}  {}\n", "check", "status", "time[s]", "notes");
        for r in &self.results {
            let status = if r.skipped.is_some() {
                "SKIP"
            } else if r.pass {
                "PASS"
            } else {
                "FAIL"
            };
            let note = r.skipped.clone().or_else(|| r.diagnostic.clone()).unwrap_or_default();
            s.push_str(&format!("{:<30} {:<6} {:>9.2}  {}\n", r.name, status, r.runtime_s, note));
        }
        s.push_str(&format!(
            "total {}  passed {}  failed {}  skipped {}\n",
            self.summary.total, self.summary.passed, self.summary.failed, self.summary.skipped
        ));
        s
    }
}

/// Shared inputs: one equilibrium per γ.
pub struct Context {
    pub config: VerificationConfig,
    equilibria: Vec<(f64, Equilibrium)>,
    i_bound: OnceLock<Result<Outcome>>,
}

impl Context {
    pub fn new(config: VerificationConfig) -> Result<Self> {
        config.validate()?;
        let mut equilibria = Vec::new();
        for &g in &config.gammas {
            equilibria.push((g, build_equilibrium(GasLaw::unit(g)?, 64)?));
        }
        Ok(Self { config, equilibria, i_bound: OnceLock::new() })
    }

    pub fn eq(&self, gamma: f64) -> Result<&Equilibrium> {
        self.equilibria
            .iter()
            .find(|(g, _)| (*g - gamma).abs() < 1e-12)
            .map(|(_, e)| e)
            .ok_or_else(|| Error::InvalidParameter(format!("gamma {gamma} not in the configuration")))
    }

    fn gammas(&self) -> impl Iterator<Item = (f64, &Equilibrium)> {
        self.equilibria.iter().map(|(g, e)| (*g, e))
    }

    fn tol(&self, base: f64) -> f64 {
        base * self.config.tolerance_scale
    }

    fn grid(&self, eq: &Equilibrium, n: usize) -> Result<RadialGrid> {
        make_grid(eq.radius, n, self.config.p)
    }

    fn rng(&self, salt: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.config.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
    }
}

/// Measurements of a running check.
#[derive(Clone)]
struct Outcome {
    measured: BTreeMap<String, f64>,
    tolerance: f64,
    pass: bool,
    skipped: Option<String>,
    diagnostic: Option<String>,
}

impl Outcome {
    fn new(tolerance: f64) -> Self {
        Self { measured: BTreeMap::new(), tolerance, pass: true, skipped: None, diagnostic: None }
    }

    fn skip(reason: &str) -> Self {
        let mut o = Self::new(0.0);
        o.skipped = Some(reason.to_string());
        o
    }

    fn put(&mut self, key: impl Into<String>, v: f64) {
        self.measured.insert(key.into(), v);
    }

    /// Merge the measurements and verdict of a sub-check.
    fn absorb(&mut self, other: Result<Outcome>, label: &str) {
        match other {
            Ok(o) if o.skipped.is_some() => {
                if self.diagnostic.is_none() {
                    self.diagnostic = Some(format!("{label} skipped: {}", o.skipped.unwrap_or_default()));
                }
            }
            Ok(o) => {
                self.measured.extend(o.measured);
                if !o.pass {
                    self.require(false, || format!("{label}: {}", o.diagnostic.unwrap_or_default()));
                }
            }
            Err(e) => self.require(false, || format!("{label}: error: {e}")),
        }
    }

    /// Record a condition; the first failing one is kept as diagnostic.
    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            if self.pass {
                self.diagnostic = Some(what());
            }
            self.pass = false;
        }
    }
}

type CheckFn = fn(&Context) -> Result<Outcome>;

struct CheckSpec {
    name: &'static str,
    claim: &'static str,
    run: CheckFn,
}

const CHECKS: &[CheckSpec] = &[
    CheckSpec { name: "lane_emden", claim: "xi1(nu=1) = pi; fourth-order self-convergence; hydrostatic residual decays at second order", run: check_lane_emden },
    CheckSpec { name: "zero_mode_4_3", claim: "0 is an eigenvalue of the radial operator at gamma = 4/3 with constant eigenfunction", run: check_zero_mode },
    CheckSpec { name: "sign_change_across_4_3", claim: "least radial eigenvalue is negative for gamma < 4/3 and positive for gamma > 4/3", run: check_sign_change },
    CheckSpec { name: "Lss_vs_N0_consistency", claim: "nonzero eigenvalues of the radial operator are eigenvalues of the l = 0 density operator", run: check_lss_vs_n0 },
    CheckSpec { name: "shooting_oracle_agreement", claim: "Rayleigh-Ritz and Pruefer shooting agree for the local density operator and A", run: check_shooting },
    CheckSpec { name: "A_translational_null", claim: "the translation profile u' solves A y = 0 without boundary condition; the least eigenvalue of A is positive", run: check_translation },
    CheckSpec { name: "mu1_positive", claim: "the least eigenvalue of A is positive", run: check_mu1 },
    CheckSpec { name: "Nl_simplicity", claim: "eigenvalues of the degree-l density operator are simple", run: check_simplicity },
    CheckSpec { name: "Lambda_positivity", claim: "Lambda_l(g) >= 0 for l >= 1, with I <= rho_O ||U||^2", run: check_lambda_positivity },
    CheckSpec { name: "I_bound", claim: "I <= rho_O ||U||^2", run: check_i_bound },
    CheckSpec { name: "kappa_identities", claim: "three forms of kappa(gamma) agree; limit point exactly for gamma <= 3/2", run: check_kappa },
    CheckSpec { name: "Hl_inverse", claim: "H_l inverts the degree-l radial Laplacian with the exterior decay", run: check_hl_inverse },
    CheckSpec { name: "toroidal_kernel", claim: "toroidal fields have zero divergence and zero quadratic form", run: check_toroidal_kernel },
    CheckSpec { name: "periodic_vs_growth", claim: "compatible data give periodic motion; a solenoidal residue grows linearly; a negative radial eigenvalue grows exponentially", run: check_periodic_vs_growth },
    CheckSpec { name: "exponential_growth", claim: "a negative radial eigenvalue gives the exponential branch e^{-lambda t}", run: check_exponential_growth },
    CheckSpec { name: "theorem6_lower_bound", claim: "every eigenvalue is at least min(least radial eigenvalue, 0)", run: check_lower_bound },
    CheckSpec { name: "maxmin_blocked", claim: "for gamma >= 4/3 the mixed trial infimum is 0 and never negative", run: check_maxmin },
    CheckSpec { name: "poincare_constant", claim: "weighted Poincare constant on zero-mean functions is positive and stable", run: check_poincare },
    CheckSpec { name: "C_nu_positive", claim: "C(nu) = -xi1 Theta'(xi1) > 0 and equals -1 + int Theta^nu xi dxi", run: check_c_nu },
    CheckSpec { name: "accumulation_trend", claim: "lambda_n / (n pi / x+)^2 approaches 1 for the local density operator", run: check_accumulation },
    CheckSpec { name: "eigen_consistency", claim: "pencil eigenvalues are eigenvalues of the discrete operator div(Mhat g)", run: check_eigen_consistency },
];

/// Names of all checks in execution order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

fn run_one(ctx: &Context, check: &CheckSpec) -> CheckResult {
    let t0 = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(|| (check.run)(ctx)));
    let runtime_s = t0.elapsed().as_secs_f64();
    let (out, crash) = match out {
        Ok(Ok(o)) => (o, None),
        Ok(Err(e)) => (Outcome::new(0.0), Some(format!("error: {e}"))),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            (Outcome::new(0.0), Some(format!("crash: {msg}")))
        }
    };
    let failed = crash.is_some();
    CheckResult {
        name: check.name.to_string(),
        claim: check.claim.to_string(),
        measured: out.measured,
        tolerance: out.tolerance,
        pass: out.pass && !failed,
        skipped: out.skipped,
        diagnostic: crash.or(out.diagnostic),
        runtime_s,
    }
}

/// Run one named check.
pub fn run_check(ctx: &Context, name: &str) -> Result<CheckResult> {
    let check = CHECKS
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown check {name}")))?;
    Ok(run_one(ctx, check))
}

/// Run every check (or the selected ones) concurrently; an empty γ list gives an
/// empty report.
pub fn run_all(config: &VerificationConfig) -> Result<VerificationReport> {
    let ctx = Context::new(config.clone())?;
    let selected: Vec<&CheckSpec> = if config.gammas.is_empty() {
        Vec::new()
    } else {
        CHECKS.iter().filter(|c| config.only.is_empty() || config.only.iter().any(|o| o == c.name)).collect()
    };
    let results: Vec<CheckResult> = std::thread::scope(|s| {
        let handles: Vec<_> = selected.iter().map(|c| s.spawn(|| run_one(&ctx, c))).collect();
        handles.into_iter().map(|h| h.join().expect("check threads catch their own panics")).collect()
    });
    let skipped = results.iter().filter(|r| r.skipped.is_some()).count();
    let failed = results.iter().filter(|r| !r.pass).count();
    let summary = Summary { total: results.len(), passed: results.len() - skipped - failed, failed, skipped };
    Ok(VerificationReport { config: config.clone(), results, summary })
}

/// Smooth random profile Σ_{k≤10} a_k sin(kπr/R)/k, a_k uniform in [−1, 1].
pub fn random_sine_profile(rng: &mut impl Rng, radius: f64) -> Vec<(f64, f64)> {
    (1..=10).map(|k| (rng.gen_range(-1.0..1.0) / k as f64, k as f64 * std::f64::consts::PI / radius)).collect()
}

fn eval_profile(coef: &[(f64, f64)], r: f64) -> f64 {
    coef.iter().map(|(a, w)| a * (w * r).sin()).sum()
}

/// Hat interpolant of a random sine profile.
pub fn random_field(rng: &mut impl Rng, grid: &RadialGrid) -> RadialField {
    let c = random_sine_profile(rng, grid.radius());
    RadialField::from_fn(grid, |r| eval_profile(&c, r))
}

fn order(e_coarse: f64, e_fine: f64, n_coarse: usize, n_fine: usize) -> f64 {
    (e_coarse / e_fine).ln() / (n_fine as f64 / n_coarse as f64).ln()
}

fn check_lane_emden(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-10));
    let le = solve_lane_emden(1.0, 1e-12)?;
    let err = (le.xi1 - std::f64::consts::PI).abs();
    o.put("xi1_nu1_error", err);
    o.require(err <= ctx.tol(1e-10), || format!("xi1(nu=1) off by {err:e}"));
    for nu in [1.0, 1.5] {
        let x: Vec<f64> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| solve_lane_emden_with_step(nu, 1e-14, h).map(|s| s.xi1))
            .collect::<Result<_>>()?;
        let p = ((x[0] - x[1]).abs() / (x[1] - x[2]).abs()).log2();
        o.put(format!("self_convergence_order_nu{nu}"), p);
        o.require(p >= 4.0 - ctx.tol(0.2), || format!("self-convergence order {p:.2} for nu = {nu}"));
    }
    let eq = build_equilibrium(GasLaw::unit(1.5)?, 8)?;
    let (r1, r2) = (eq.hydrostatic_residual(100), eq.hydrostatic_residual(200));
    let p = (r1 / r2).log2();
    o.put("hydrostatic_residual_200", r2);
    o.put("hydrostatic_order", p);
    o.require(p >= 2.0 - ctx.tol(0.1), || format!("hydrostatic residual order {p:.2}"));
    Ok(o)
}

fn check_zero_mode(ctx: &Context) -> Result<Outcome> {
    let Ok(eq) = ctx.eq(FOUR_THIRDS) else {
        return Ok(Outcome::skip("gamma = 4/3 not in the configuration"));
    };
    let mut o = Outcome::new(ctx.tol(1e-4));
    let mut prev: Option<(usize, f64, bool)> = None;
    let mut ns = ctx.config.ns.clone();
    ns.sort_unstable();
    for &n in &ns {
        let ms = solve_tridiagonal(&assemble_Lss(eq, &ctx.grid(eq, n)?), 3)?;
        let j = ms.smallest_magnitude().expect("three modes requested");
        let lam = ms.lambdas[j].abs();
        let next = ms.lambdas.iter().filter(|v| v.abs() > lam).map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        let x = &ms.nodal[j];
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let dev = x.iter().map(|v| (v / mean - 1.0).abs()).fold(0.0, f64::max);
        let kern = ms.is_numerical_kernel(j);
        o.put(format!("abs_lambda_N{n}"), lam);
        o.put(format!("ratio_to_lambda2_N{n}"), lam / next);
        o.put(format!("constant_deviation_N{n}"), dev);
        o.require(lam <= ctx.tol(1e-4) * next, || format!("|lambda|/lambda2 = {:e} at N = {n}", lam / next));
        o.require(dev <= ctx.tol(1e-3), || format!("eigenvector deviates from constant by {dev:e} at N = {n}"));
        if let Some((n0, l0, k0)) = prev {
            if !(k0 && kern) {
                let p = order(l0, lam, n0, n);
                o.put(format!("order_N{n0}_N{n}"), p);
                o.require(p >= 2.0 - ctx.tol(0.1), || format!("decay order {p:.2} between N = {n0} and {n}"));
            }
        }
        prev = Some((n, lam, kern));
    }
    Ok(o)
}

fn check_sign_change(ctx: &Context) -> Result<Outcome> {
    let below: Vec<_> = ctx.gammas().filter(|(g, _)| *g < FOUR_THIRDS - 1e-12).collect();
    let above: Vec<_> = ctx.gammas().filter(|(g, _)| *g > FOUR_THIRDS + 1e-12).collect();
    if below.is_empty() || above.is_empty() {
        return Ok(Outcome::skip("needs gamma values on both sides of 4/3"));
    }
    let mut o = Outcome::new(0.0);
    for (g, eq) in below.into_iter().chain(above) {
        for &n in &ctx.config.ns {
            let ms = solve_tridiagonal(&assemble_Lss(eq, &ctx.grid(eq, n)?), 1)?;
            let l1 = ms.lambdas[0];
            o.put(format!("lambda1_g{g:.4}_N{n}"), l1);
            let ok = if g < FOUR_THIRDS { l1 < 0.0 } else { l1 > 0.0 };
            o.require(ok, || format!("lambda1 = {l1:e} has the wrong sign at gamma = {g}, N = {n}"));
        }
    }
    Ok(o)
}

fn check_lss_vs_n0(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-3));
    let n = ctx.config.n_max();
    for (g, eq) in ctx.gammas() {
        let grid = ctx.grid(eq, n)?;
        let lss = solve_tridiagonal(&assemble_Lss(eq, &grid), 6)?;
        let n0 = solve_gsep(&assemble_Nl(eq, &grid, 0)?, Some(8))?;
        // nonzero eigenvalues of both, paired in order
        let top = lss.lambdas.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let nonzero = |v: &[f64]| -> Vec<f64> { v.iter().copied().filter(|x| x.abs() > 1e-6 * top).take(5).collect() };
        let (a, b) = (nonzero(&lss.lambdas), nonzero(&n0.lambdas));
        let matched = a.len().min(b.len());
        let worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs() / x.abs()).fold(0.0, f64::max);
        o.put(format!("max_rel_diff_g{g:.4}"), worst);
        o.put(format!("n_compared_g{g:.4}"), matched as f64);
        o.require(matched >= 5, || format!("fewer than five nonzero eigenvalues at gamma = {g}"));
        o.require(worst <= ctx.tol(1e-3), || format!("relative mismatch {worst:e} at gamma = {g}"));
    }
    Ok(o)
}

/// Grid exponent used for the local density operator: the regular surface branch
/// (R−r)^{ν−1} limits P1 accuracy to first order on the p = 2 grid.
pub const NL00_GRID_P: f64 = 4.0;

fn compare_with_shooting(
    o: &mut Outcome,
    eq: &Equilibrium,
    kind: OperatorKind,
    l: usize,
    form: &DiscreteForm,
    label: &str,
    tol: f64,
) -> Result<()> {
    let ritz = solve_tridiagonal(form, 6)?;
    let hi = 0.5 * (ritz.lambdas[4] + ritz.lambdas[5]);
    let lo = ritz.lambdas[0] - 1.0 - ritz.lambdas[0].abs();
    let shot = shooting_oracle(eq, kind, l, (lo, hi))?;
    o.require(shot.len() == 5, || format!("{label}: shooting found {} eigenvalues in the Ritz window", shot.len()));
    let worst = shot.iter().zip(&ritz.lambdas).map(|(s, r)| (s - r).abs() / s.abs()).fold(0.0, f64::max);
    o.put(format!("{label}_max_rel_diff"), worst);
    o.require(worst <= tol, || format!("{label}: relative mismatch {worst:e}"));
    // Sturm count consistency at a point inside the window
    let mid = 0.5 * (ritz.lambdas[2] + ritz.lambdas[3]);
    let c = shooting_count(eq, kind, l, mid)?;
    o.put(format!("{label}_count_mid"), c as f64);
    o.require(c == 3, || format!("{label}: shooting count {c} below the third gap"));
    Ok(())
}

fn check_shooting(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-4));
    let n = 2 * ctx.config.n_max();
    o.put("N", n as f64);
    for (g, eq) in ctx.gammas() {
        if eq.nu() < 3.0 {
            let grid = make_grid(eq.radius, n, NL00_GRID_P)?;
            compare_with_shooting(&mut o, eq, OperatorKind::Nl00, 1, &assemble_Nl00(eq, &grid, 1)?, &format!("Nl00_l1_g{g:.4}"), ctx.tol(1e-4))?;
        }
        let grid = ctx.grid(eq, n)?;
        compare_with_shooting(&mut o, eq, OperatorKind::A, 1, &assemble_A(eq, &grid), &format!("A_g{g:.4}"), ctx.tol(1e-4))?;
    }
    Ok(o)
}

fn check_translation(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-3));
    let mut ns = ctx.config.ns.clone();
    ns.sort_unstable();
    for (g, eq) in ctx.gammas() {
        let res: Vec<f64> = ns.iter().map(|&n| ctx.grid(eq, n).map(|gr| a_translational_residual(eq, &gr))).collect::<Result<_>>()?;
        let last = *res.last().expect("nonempty N list");
        o.put(format!("residual_g{g:.4}_N{}", ns[ns.len() - 1]), last);
        if ns[ns.len() - 1] >= 800 {
            o.require(last <= ctx.tol(1e-3), || format!("residual {last:e} at gamma = {g}"));
        }
        if ns.len() >= 2 {
            let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
            let y: Vec<f64> = res.iter().map(|r| r.ln()).collect();
            let p = -linear_fit(&x, &y).0;
            o.put(format!("order_g{g:.4}"), p);
            o.require(p >= 2.0 - ctx.tol(0.1), || format!("decay order {p:.2} at gamma = {g}"));
        }
    }
    // the null vector sits below a positive spectrum
    o.absorb(check_mu1(ctx), "mu1_positive");
    Ok(o)
}

fn check_mu1(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(0.0);
    let n = ctx.config.n_max();
    for (g, eq) in ctx.gammas() {
        let ms = solve_tridiagonal(&assemble_A(eq, &ctx.grid(eq, n)?), 1)?;
        let mu1 = ms.lambdas[0];
        let below = shooting_count(eq, OperatorKind::A, 1, 0.0)?;
        o.put(format!("mu1_g{g:.4}"), mu1);
        o.put(format!("shooting_count_below_0_g{g:.4}"), below as f64);
        o.require(mu1 > 0.0 && below == 0, || format!("mu1 = {mu1:e}, shooting count below 0 = {below} at gamma = {g}"));
    }
    Ok(o)
}

fn check_simplicity(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-3));
    let mut ns = ctx.config.ns.clone();
    ns.sort_unstable();
    let pair: Vec<usize> = if ns.len() >= 2 { ns[ns.len() - 2..].to_vec() } else { ns.clone() };
    let ls: Vec<usize> = ctx.config.ls.iter().copied().filter(|&l| l >= 1).collect();
    if ls.is_empty() {
        return Ok(Outcome::skip("no degree l >= 1 in the configuration"));
    }
    for (g, eq) in ctx.gammas() {
        for &l in &ls {
            for &n in &pair {
                let ms = solve_gsep(&assemble_Nl(eq, &ctx.grid(eq, n)?, l)?, Some(8))?;
                let top = ms.lambdas[ms.len() - 1].abs();
                let gap = ms.lambdas.windows(2).map(|w| (w[1] - w[0]) / top).fold(f64::INFINITY, f64::min);
                o.put(format!("min_rel_gap_g{g:.4}_l{l}_N{n}"), gap);
                o.require(gap >= ctx.tol(1e-3), || format!("relative gap {gap:e} at gamma = {g}, l = {l}, N = {n}"));
            }
        }
    }
    Ok(o)
}

fn positivity_degrees(ctx: &Context) -> Vec<usize> {
    let mut ls: Vec<usize> = vec![1, 2, 3];
    ls.extend(ctx.config.ls.iter().copied().filter(|&l| l >= 1));
    ls.sort_unstable();
    ls.dedup();
    ls
}

fn check_lambda_positivity(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-10));
    let n = ctx.config.n_mid();
    for (g, eq) in ctx.gammas() {
        let grid = ctx.grid(eq, n)?;
        let mut rng = ctx.rng(11 + (g * 1e6) as u64);
        for l in positivity_degrees(ctx) {
            let mut worst = f64::INFINITY;
            for _ in 0..ctx.config.n_random {
                let c = random_sine_profile(&mut rng, eq.radius);
                let gf = |r: f64| eq.profile(r).drho_du * eval_profile(&c, r);
                let (local, gravity) = lambda_parts(eq, &grid, l, &gf, eq.nu() - 1.0);
                worst = worst.min((local - gravity) / local);
            }
            o.put(format!("min_relative_Lambda_g{g:.4}_l{l}"), worst);
            o.require(worst >= -ctx.tol(1e-10), || format!("Lambda_{l} / scale = {worst:e} at gamma = {g}"));
        }
    }
    o.absorb(check_i_bound(ctx), "I_bound");
    Ok(o)
}

fn check_i_bound(ctx: &Context) -> Result<Outcome> {
    ctx.i_bound.get_or_init(|| measure_i_bound(ctx)).clone()
}

fn measure_i_bound(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(0.0);
    let n = ctx.config.n_mid();
    for (g, eq) in ctx.gammas() {
        let grid = ctx.grid(eq, n)?;
        let mut rng = ctx.rng(23 + (g * 1e6) as u64);
        let mut worst: f64 = 0.0;
        let ls = positivity_degrees(ctx);
        for k in 0..ctx.config.n_random {
            let l = ls[k % ls.len()];
            let psi = random_field(&mut rng, &grid);
            let chi = random_field(&mut rng, &grid);
            let b = form_I_bound_check(eq, &grid, l, &psi, &chi);
            worst = worst.max(b.i / b.bound);
        }
        o.put(format!("max_I_over_bound_g{g:.4}"), worst);
        o.require(worst <= 1.0, || format!("I exceeds the bound by the factor {worst} at gamma = {g}"));
    }
    Ok(o)
}

fn check_kappa(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-12));
    let mut rng = ctx.rng(31);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let g = rng.gen_range(1.2..2.0);
        let k = kappa_forms(g);
        let s = k.iter().map(|v| v.abs()).fold(1.0, f64::max);
        worst = worst.max(((k[0] - k[1]).abs().max((k[0] - k[2]).abs())) / s);
    }
    o.put("max_form_mismatch", worst);
    o.require(worst <= ctx.tol(1e-12), || format!("forms disagree by {worst:e}"));
    let k53 = kappa(5.0 / 3.0);
    o.put("kappa_5_3", k53);
    o.require(k53.abs() <= ctx.tol(1e-12), || format!("kappa(5/3) = {k53:e}"));
    let mut flips = Vec::new();
    let mut prev = endpoint_class(1.2 + 1e-9);
    for i in 1..=8000 {
        let g = 1.2 + 0.8 * i as f64 / 8000.0;
        let c = endpoint_class(g);
        if c != prev {
            flips.push(g);
        }
        prev = c;
    }
    o.put("n_class_flips", flips.len() as f64);
    let at = endpoint_class(1.5);
    let after = endpoint_class(1.5 + 1e-12);
    o.require(
        flips.len() == 1 && at == EndpointClass::LimitPoint && after == EndpointClass::LimitCircle,
        || format!("classification flips at {flips:?}"),
    );
    Ok(o)
}

fn check_hl_inverse(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-6));
    let n = ctx.config.n_mid();
    for (g, eq) in ctx.gammas() {
        let grid = ctx.grid(eq, n)?;
        let rr = eq.radius;
        let one = RadialField::from_fn(&grid, |_| 1.0);
        let h = hl_apply(&grid, 0, &one);
        let err = (h.h.values[0] - 0.5 * rr * rr).abs() / (0.5 * rr * rr);
        o.put(format!("H0_indicator_rel_error_g{g:.4}"), err);
        o.require(err <= ctx.tol(1e-8), || format!("H0(1)(0) relative error {err:e}"));
        for &l in &ctx.config.ls {
            let gf = move |r: f64| r.powi(l as i32) * ((3.0 * r).cos() + r * r);
            let res = hl_weak_residual(&grid, l, &gf, 0.0);
            o.put(format!("weak_residual_g{g:.4}_l{l}"), res);
            o.require(res <= ctx.tol(1e-6), || format!("weak residual {res:e} at l = {l}"));
            let kern = HlKernel::new(&grid, l, &gf, 0.0);
            let hr = kern.at_surface();
            let closed = (l + 1) as f64 * hr * hr * rr;
            let numeric = exterior_energy_numeric(hr, rr, l, 1e6 * rr);
            let tail = (closed - numeric).abs() / closed.abs();
            o.put(format!("tail_rel_diff_g{g:.4}_l{l}"), tail);
            o.require(tail <= ctx.tol(1e-4), || format!("exterior tail mismatch {tail:e} at l = {l}"));
        }
    }
    Ok(o)
}

fn check_toroidal_kernel(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(0.0);
    let n = ctx.config.n_mid();
    let ls = positivity_degrees(ctx);
    for (g, eq) in ctx.gammas() {
        let grid = ctx.grid(eq, n)?;
        let mut rng = ctx.rng(41 + (g * 1e6) as u64);
        let mut max_div: f64 = 0.0;
        let mut max_q: f64 = 0.0;
        for k in 0..ctx.config.n_random.min(20) {
            let l = ls[k % ls.len()];
            let z = RadialField::zeros(&grid);
            let x = VectorModeLM::new(l, 0, z.clone(), z, random_field(&mut rng, &grid))?;
            let d = divergence_load(eq, &grid, l, &x.psi, &x.chi);
            max_div = max_div.max(d.amax());
            max_q = max_q.max(mode_quadratic_form(eq, &grid, &x).abs());
            let lx = mhat_mode(eq, &grid, l, 0, &crate::operators::divergence_lm(eq, &grid, l, &x.psi, &x.chi));
            max_q = max_q.max(WNorm::new(eq, &grid).mode(&lx));
        }
        o.put(format!("max_divergence_g{g:.4}"), max_div);
        o.put(format!("max_quadratic_form_g{g:.4}"), max_q);
        o.require(max_div == 0.0 && max_q == 0.0, || format!("toroidal residue {max_div:e} / {max_q:e} at gamma = {g}"));
    }
    Ok(o)
}

fn periodic_gamma(ctx: &Context) -> Option<(f64, &Equilibrium)> {
    ctx.gammas().filter(|(g, _)| *g > FOUR_THIRDS + 1e-12).last()
}

fn check_periodic_vs_growth(ctx: &Context) -> Result<Outcome> {
    let Some((g, eq)) = periodic_gamma(ctx).or_else(|| ctx.gammas().last()) else {
        return Ok(Outcome::skip("no gamma configured"));
    };
    let l = ctx.config.ls.iter().copied().find(|&l| l >= 1).unwrap_or(1);
    let mut o = Outcome::new(ctx.tol(1e-8));
    o.put("gamma", g);
    o.put("l", l as f64);
    let grid = ctx.grid(eq, ctx.config.ns.iter().copied().min().unwrap_or(200).min(200))?;
    let op = DensityOperator::new(eq, &grid, l)?;
    let ms = solve_gsep(&assemble_Nl(eq, &grid, l)?, Some(3))?;
    let j = (0..ms.len()).rev().find(|&j| ms.lambdas[j] > 0.0 && !ms.is_numerical_kernel(j)).ok_or_else(|| Error::NumericalBreakdown("no positive mode".into()))?;
    let (lambda, phi) = op.refine_eigenpair(ms.lambdas[j], &DVector::from_column_slice(&ms.nodal[j]))?;
    let e = 0.5;
    let shape = mhat_mode(eq, &grid, l, 0, &op.density(&phi));
    let v0 = shape.scaled(e / lambda.sqrt());
    let period = 2.0 * std::f64::consts::PI / lambda.sqrt();
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * period / 10.0).collect();
    let tr = evolve_mode(&op, lambda, &phi, e, &v0, &times)?;
    let scale = op.wnorm().mode(&v0) * period;
    let mut worst: f64 = 0.0;
    for i in 0..=10 {
        for k in 1..=3 {
            let d = tr.snapshots[i + 10 * k].combine(1.0, &tr.snapshots[i], -1.0);
            worst = worst.max(op.wnorm().mode(&d) / scale);
        }
    }
    o.put("periodicity_defect", worst);
    o.require(tr.periodic_flag, || "compatible data flagged non-periodic".into());
    o.require(worst <= ctx.tol(1e-8), || format!("periodicity defect {worst:e}"));
    // add a toroidal residue
    let mut v1 = v0.clone();
    let mut rng = ctx.rng(53);
    v1.kappa_t = random_field(&mut rng, &grid);
    let late: Vec<f64> = (0..50).map(|i| 1e4 * period + i as f64 * period / 7.0).collect();
    let tr = evolve_mode(&op, lambda, &phi, e, &v1, &late)?;
    let nb = op.wnorm().mode(&tr.b_field);
    let (slope, _, r2) = linear_fit(&tr.times, &tr.norms);
    let rel = (slope - nb).abs() / nb;
    o.put("residue_norm", nb);
    o.put("fitted_slope", slope);
    o.put("slope_rel_error", rel);
    o.put("fit_r2", r2);
    o.require(!tr.periodic_flag, || "residue trajectory flagged periodic".into());
    o.require(rel <= ctx.tol(1e-6) && r2 >= 0.999, || format!("slope error {rel:e}, R2 = {r2}"));
    o.absorb(check_exponential_growth(ctx), "exponential_growth");
    Ok(o)
}

fn check_exponential_growth(ctx: &Context) -> Result<Outcome> {
    let Some((g, eq)) = ctx.gammas().find(|(g, _)| *g < FOUR_THIRDS - 1e-12) else {
        return Ok(Outcome::skip("no gamma below 4/3 in the configuration"));
    };
    let mut o = Outcome::new(ctx.tol(1e-2));
    o.put("gamma", g);
    let grid = ctx.grid(eq, ctx.config.n_mid())?;
    let ms = solve_tridiagonal(&assemble_Lss(eq, &grid), 1)?;
    let lambda = ms.lambdas[0];
    let psi = RadialField::new(&grid, ms.nodal[0].clone());
    let oracle = shooting_oracle(eq, OperatorKind::Lss, 0, (lambda - 1.0 - lambda.abs(), 0.0))?;
    let reference = *oracle.first().ok_or_else(|| Error::NumericalBreakdown("shooting found no negative eigenvalue".into()))?;
    let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.5 / lambda.abs()).collect();
    let tr = negative_mode_growth(eq, &grid, lambda, &psi, 1.0, &times)?;
    let logs: Vec<f64> = tr.norms.iter().map(|v| v.ln()).collect();
    let (slope, _, _) = linear_fit(&times, &logs);
    let rel = (slope - reference.abs()).abs() / reference.abs();
    o.put("lambda1_ritz", lambda);
    o.put("lambda1_shooting", reference);
    o.put("fitted_rate", slope);
    o.put("rate_rel_error", rel);
    o.require(rel <= ctx.tol(1e-2), || format!("fitted rate off by {rel:e}"));
    o.require(op_is_zero(&tr.b_field), || "spherically symmetric residue is nonzero".into());
    Ok(o)
}

fn op_is_zero(x: &VectorModeLM) -> bool {
    x.psi.is_zero() && x.chi.is_zero() && x.kappa_t.is_zero()
}

fn check_lower_bound(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-8));
    let n = ctx.config.n_mid();
    for (g, eq) in ctx.gammas() {
        let grid = ctx.grid(eq, n)?;
        let lss = solve_tridiagonal(&assemble_Lss(eq, &grid), ctx.config.n_modes.max(1))?;
        let window = (lss.lambdas[0] - 1.0 - lss.lambdas[0].abs(), lss.lambdas[0] + 1e-9 * lss.lambdas[0].abs().max(1.0));
        let shot = shooting_oracle(eq, OperatorKind::Lss, 0, window)?;
        let l1 = shot.first().copied().unwrap_or(lss.lambdas[0]).min(lss.lambdas[0]);
        let bound = l1.min(0.0);
        let mut all: Vec<f64> = lss.lambdas.clone();
        for &l in &ctx.config.ls {
            all.extend(solve_gsep(&assemble_Nl(eq, &grid, l)?, Some(ctx.config.n_modes.max(1)))?.lambdas);
        }
        let scale = all.iter().map(|v| v.abs()).fold(1.0, f64::max);
        let lowest = all.iter().copied().fold(f64::INFINITY, f64::min);
        o.put(format!("lambda1_ss_g{g:.4}"), l1);
        o.put(format!("lowest_g{g:.4}"), lowest);
        o.put(format!("margin_g{g:.4}"), (lowest - bound) / scale);
        o.require(lowest >= bound - ctx.tol(1e-8) * scale, || format!("eigenvalue {lowest:e} below bound {bound:e} at gamma = {g}"));
    }
    Ok(o)
}

fn check_maxmin(ctx: &Context) -> Result<Outcome> {
    let set: Vec<_> = ctx.gammas().filter(|(g, _)| *g >= FOUR_THIRDS - 1e-12).collect();
    if set.is_empty() {
        return Ok(Outcome::skip("no gamma >= 4/3 in the configuration"));
    }
    let mut o = Outcome::new(ctx.tol(1e-10));
    let n = ctx.config.n_mid();
    for (g, eq) in set {
        let grid = ctx.grid(eq, n)?;
        let wn = WNorm::new(eq, &grid);
        let mut rng = ctx.rng(61 + (g * 1e6) as u64);
        let mut min_q = f64::INFINITY;
        let mut n_negative = 0usize;
        let lss = assemble_Lss(eq, &grid);
        let degrees = positivity_degrees(ctx);
        for k in 0..ctx.config.n_random {
            let l = if k % 4 == 0 { 0 } else { degrees[k % degrees.len()] };
            let psi = random_field(&mut rng, &grid);
            let (q, norm) = if l == 0 {
                // radial trial field: the radial quadratic form
                let x = DVector::from_column_slice(&psi.values);
                (x.dot(&(&lss.k * &x)), x.dot(&(&lss.m * &x)))
            } else {
                let chi = random_field(&mut rng, &grid);
                let kt = random_field(&mut rng, &grid);
                let toroidal_weight = if k % 3 == 0 { 1.0 } else { 0.0 };
                let z = RadialField::zeros(&grid);
                let x = if k % 5 == 0 {
                    VectorModeLM::new(l, 0, z.clone(), z, kt)?
                } else {
                    VectorModeLM::new(l, 0, psi, chi, kt.scaled(toroidal_weight))?
                };
                (mode_quadratic_form(eq, &grid, &x), wn.mode_sq(&x))
            };
            let rq = q / norm;
            let scale = lss.k.norm() / lss.m.norm();
            if rq < -ctx.tol(1e-10) * scale {
                n_negative += 1;
            }
            min_q = min_q.min(rq);
        }
        o.put(format!("min_rayleigh_g{g:.4}"), min_q);
        o.put(format!("n_negative_g{g:.4}"), n_negative as f64);
        o.require(n_negative == 0, || format!("{n_negative} negative quotients at gamma = {g}"));
        o.require(min_q.abs() <= ctx.tol(1e-10), || format!("minimum quotient {min_q:e} at gamma = {g}"));
    }
    Ok(o)
}

fn check_poincare(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-2));
    let mut ns = ctx.config.ns.clone();
    ns.sort_unstable();
    for (g, eq) in ctx.gammas() {
        let mut vals = Vec::new();
        for &n in &ns {
            let grid = ctx.grid(eq, n)?;
            let k = potential_stiffness(eq, &grid, 0);
            let m = weighted_mass(&grid, WeightKind::ESpace, eq);
            let c = &m * DVector::from_element(grid.n_nodes(), 1.0);
            let form = DiscreteForm {
                k,
                m,
                inner_product: WeightKind::ESpace,
                constraint: Some(c),
                meta: FormMeta { operator: "poincare".into(), l: 0, gamma: g },
                asymmetry: 0.0,
                basis: None,
                drop_surface: false,
                grid,
                tridiagonal: false,
            };
            let ms = solve_gsep(&form, Some(1))?;
            vals.push(ms.lambdas[0]);
            o.put(format!("constant_g{g:.4}_N{n}"), ms.lambdas[0]);
        }
        let last = vals[vals.len() - 1];
        o.require(vals.iter().all(|&v| v > 0.0), || format!("nonpositive constant at gamma = {g}"));
        if vals.len() >= 2 {
            let change = (vals[vals.len() - 2] - last).abs() / last;
            o.put(format!("relative_change_g{g:.4}"), change);
            o.require(change <= ctx.tol(1e-2), || format!("constant changes by {change:e} under refinement at gamma = {g}"));
        }
    }
    Ok(o)
}

fn check_c_nu(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-8));
    for (g, eq) in ctx.gammas() {
        let sc = structural_constant(&eq.lane_emden);
        o.put(format!("C_g{g:.4}"), sc.boundary);
        o.put(format!("boundary_minus_xi_form_g{g:.4}"), sc.diff_boundary_xi);
        o.put(format!("boundary_minus_xi2_form_g{g:.4}"), sc.diff_boundary_xi2);
        o.require(sc.boundary > 0.0, || format!("C = {} at gamma = {g}", sc.boundary));
        o.require(sc.diff_boundary_xi.abs() <= ctx.tol(1e-8) * sc.boundary, || {
            format!("boundary and xi-weighted forms differ by {:e}", sc.diff_boundary_xi)
        });
    }
    Ok(o)
}

fn check_accumulation(ctx: &Context) -> Result<Outcome> {
    let set: Vec<_> = ctx.gammas().filter(|(_, e)| e.nu() < 3.0).collect();
    if set.is_empty() {
        return Ok(Outcome::skip("the local density operator needs gamma > 4/3"));
    }
    let mut o = Outcome::new(ctx.tol(0.2));
    let n = 2000;
    let ls: Vec<usize> = ctx.config.ls.iter().copied().filter(|&l| l >= 1).collect();
    let ls = if ls.is_empty() { vec![1] } else { ls };
    for (g, eq) in set {
        for &l in &ls {
            let grid = ctx.grid(eq, n)?;
            let ms = solve_tridiagonal(&assemble_Nl00(eq, &grid, l)?, 20)?;
            let xp = liouville_transform(eq, &grid, l)?.x_plus;
            for k in 15..=20 {
                let ratio = ms.lambdas[k - 1] / (k as f64 * std::f64::consts::PI / xp).powi(2);
                o.put(format!("ratio_g{g:.4}_l{l}_n{k}"), ratio);
                o.require((ratio - 1.0).abs() <= ctx.tol(0.2), || format!("ratio {ratio} at n = {k}, gamma = {g}, l = {l}"));
            }
        }
    }
    Ok(o)
}

fn check_eigen_consistency(ctx: &Context) -> Result<Outcome> {
    let mut o = Outcome::new(ctx.tol(1e-2));
    let n = ctx.config.ns.iter().copied().min().unwrap_or(200);
    for (g, eq) in ctx.gammas() {
        for &l in &ctx.config.ls {
            let grid = ctx.grid(eq, n)?;
            let op = DensityOperator::new(eq, &grid, l)?;
            let ms = solve_gsep(&assemble_Nl(eq, &grid, l)?, Some(4))?;
            let top = ms.lambdas.iter().map(|v| v.abs()).fold(0.0, f64::max);
            let mut worst: f64 = 0.0;
            for j in 0..ms.len() {
                if ms.lambdas[j].abs() <= 1e-6 * top {
                    continue;
                }
                let (lam, h) = op.refine_eigenpair(ms.lambdas[j], &DVector::from_column_slice(&ms.nodal[j]))?;
                let img = &op.matrix * &h;
                let defect = op.density_norm(&(img - &h * lam)) / (op.matrix.norm() * op.density_norm(&h));
                o.require(defect <= 1e-8, || format!("refined pair defect {defect:e}"));
                worst = worst.max((lam - ms.lambdas[j]).abs() / top);
            }
            o.put(format!("rel_shift_g{g:.4}_l{l}"), worst);
            o.require(worst <= ctx.tol(1e-2), || format!("shift {worst:e} at gamma = {g}, l = {l}"));
        }
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gamma_list_gives_empty_report() {
        let cfg = VerificationConfig { gammas: vec![], ..Default::default() };
        let rep = run_all(&cfg).unwrap();
        assert_eq!(rep.summary.total, 0);
        assert!(rep.results.is_empty());
    }

    #[test]
    fn four_thirds_only_skips_sign_change() {
        let cfg = VerificationConfig {
            gammas: vec![4.0 / 3.0],
            ns: vec![100, 200, 400],
            only: vec!["zero_mode_4_3".into(), "sign_change_across_4_3".into()],
            ..Default::default()
        };
        let rep = run_all(&cfg).unwrap();
        assert!(rep.get("zero_mode_4_3").unwrap().pass);
        assert!(rep.get("zero_mode_4_3").unwrap().skipped.is_none());
        assert!(rep.get("sign_change_across_4_3").unwrap().skipped.is_some());
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = VerificationConfig {
            gammas: vec![1.5],
            ns: vec![60, 120],
            n_random: 5,
            only: vec!["Lambda_positivity".into(), "maxmin_blocked".into(), "kappa_identities".into()],
            ..Default::default()
        };
        let a = run_all(&cfg).unwrap();
        let b = run_all(&cfg).unwrap();
        for (x, y) in a.results.iter().zip(&b.results) {
            assert_eq!(x.measured, y.measured);
        }
    }

    #[test]
    fn zero_tolerance_fails() {
        let cfg = VerificationConfig {
            gammas: vec![1.5],
            tolerance_scale: 0.0,
            only: vec!["Hl_inverse".into()],
            ..Default::default()
        };
        let rep = run_all(&cfg).unwrap();
        assert_eq!(rep.summary.failed, 1);
    }

    #[test]
    fn names_unique() {
        let mut names = check_names();
        let n = names.len();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), n);
    }
}
