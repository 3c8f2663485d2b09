//! The degree-l Newtonian kernel 𝓗_l and the gravitational energy form.
//!
//! 𝓗_l g(r) = (2l+1)⁻¹ [ r^l ∫_r^R g r′^{1−l} dr′ + r^{−l−1} ∫_0^r g r′^{l+2} dr′ ],
//! the bounded solution of −(1/r²)(r²H′)′ + l(l+1)H/r² = g that decays like r^{−l−1}
//! outside the star.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::RadialField;
use crate::discretization::{segment_rule, RadialGrid};

const INNER_POINTS: usize = 8;
const LOG_POINTS: usize = 16;

/// ∫_a^b f(s) s^{1−l} ds for 0 < a, with a logarithmic map when a ≪ b and l ≥ 2.
fn high_segment(f: &dyn Fn(f64) -> f64, l: usize, a: f64, b: f64, alpha: f64) -> f64 {
    let p = 1.0 - l as f64;
    if l >= 2 && a < 0.1 * b && alpha == 0.0 {
        let ln = (b / a).ln();
        return segment_rule(0.0, 1.0, 0.0, LOG_POINTS)
            .iter()
            .map(|&(t, w)| {
                let s = a * (ln * t).exp();
                w * f(s) * s.powf(p + 1.0) * ln
            })
            .sum();
    }
    segment_rule(a, b, alpha, INNER_POINTS).iter().map(|&(s, w)| w * f(s) * s.powf(p)).sum()
}

fn low_segment(f: &dyn Fn(f64) -> f64, l: usize, a: f64, b: f64) -> f64 {
    let p = l as f64 + 2.0;
    segment_rule(a, b, 0.0, INNER_POINTS).iter().map(|&(s, w)| w * f(s) * s.powf(p)).sum()
}

/// 𝓗_l of one density profile g with surface exponent α, evaluable anywhere.
pub struct HlKernel<'a> {
    grid: &'a RadialGrid,
    l: usize,
    g: &'a dyn Fn(f64) -> f64,
    alpha: f64,
    /// Σ_{c′<c} ∫_{c′} g r^{l+2}.
    lo_prefix: Vec<f64>,
    /// Σ_{c′>c} ∫_{c′} g r^{1−l}.
    hi_suffix: Vec<f64>,
}

impl<'a> HlKernel<'a> {
    pub fn new(grid: &'a RadialGrid, l: usize, g: &'a dyn Fn(f64) -> f64, alpha: f64) -> Self {
        let n = grid.n_cells();
        let lf = l as f64;
        let mut lo_prefix = vec![0.0; n + 1];
        let mut hi_cell = vec![0.0; n];
        for c in 0..n {
            let rule = grid.cell_rule(c, alpha);
            lo_prefix[c + 1] = lo_prefix[c] + rule.iter().map(|&(r, w)| w * g(r) * r.powf(lf + 2.0)).sum::<f64>();
            if c > 0 {
                hi_cell[c] = rule.iter().map(|&(r, w)| w * g(r) * r.powf(1.0 - lf)).sum();
            }
        }
        let mut hi_suffix = vec![0.0; n];
        for c in (0..n.saturating_sub(1)).rev() {
            hi_suffix[c] = hi_suffix[c + 1] + hi_cell[c + 1];
        }
        Self { grid, l, g, alpha, lo_prefix, hi_suffix }
    }

    fn last_alpha(&self, c: usize) -> f64 {
        if c + 1 == self.grid.n_cells() {
            self.alpha
        } else {
            0.0
        }
    }

    /// (∫_0^r g r′^{l+2}, ∫_r^R g r′^{1−l}) for r > 0.
    pub fn moments(&self, r: f64) -> (f64, f64) {
        let c = self.grid.locate(r);
        let (a, b) = self.grid.cell(c);
        let low = self.lo_prefix[c] + if r > a { low_segment(self.g, self.l, a, r) } else { 0.0 };
        let high = self.hi_suffix[c] + if r < b { high_segment(self.g, self.l, r, b, self.last_alpha(c)) } else { 0.0 };
        (low, high)
    }

    /// (H, dH/dr) at r ∈ [0, ∞); outside the star H = H(R)(R/r)^{l+1}.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let lf = self.l as f64;
        let k = 1.0 / (2.0 * lf + 1.0);
        let big_r = self.grid.radius();
        if r >= big_r {
            let hr = k * big_r.powf(-lf - 1.0) * self.lo_prefix[self.grid.n_cells()];
            let h = hr * (big_r / r).powf(lf + 1.0);
            return (h, -(lf + 1.0) * h / r);
        }
        if r == 0.0 {
            return match self.l {
                0 => (self.moments(self.grid.nodes[1]).1 + low_segment_zero(self), 0.0),
                1 => (0.0, k * (self.moments(self.grid.nodes[1]).1 + high_segment(self.g, 1, 0.0, self.grid.nodes[1], 0.0))),
                _ => (0.0, 0.0),
            };
        }
        let (low, high) = self.moments(r);
        let h = k * (r.powf(lf) * high + r.powf(-lf - 1.0) * low);
        let dh = k * (lf * r.powf(lf - 1.0) * high - (lf + 1.0) * r.powf(-lf - 2.0) * low);
        (h, dh)
    }

    pub fn at_surface(&self) -> f64 {
        let lf = self.l as f64;
        self.lo_prefix[self.grid.n_cells()] * self.grid.radius().powf(-lf - 1.0) / (2.0 * lf + 1.0)
    }

    /// ∫_0^R (r²H′² + l(l+1)H²) dr + (l+1)H(R)²R.
    pub fn energy(&self) -> f64 {
        let ll = (self.l * (self.l + 1)) as f64;
        let mut e = 0.0;
        for c in 0..self.grid.n_cells() {
            for (r, w) in self.grid.cell_rule(c, 0.0) {
                let (h, dh) = self.eval(r);
                e += w * (r * r * dh * dh + ll * h * h);
            }
        }
        let hr = self.at_surface();
        e + (self.l as f64 + 1.0) * hr * hr * self.grid.radius()
    }

    /// ∫_0^R H h r² dr for a second profile h with surface exponent `h_alpha`.
    pub fn pair(&self, h: &dyn Fn(f64) -> f64, h_alpha: f64) -> f64 {
        let mut s = 0.0;
        for c in 0..self.grid.n_cells() {
            for (r, w) in self.grid.cell_rule(c, h_alpha) {
                s += w * self.eval(r).0 * h(r) * r * r;
            }
        }
        s
    }
}

/// ∫_0^{r_1} g r′ dr′ for the l = 0 central value.
fn low_segment_zero(k: &HlKernel) -> f64 {
    segment_rule(0.0, k.grid.nodes[1], 0.0, INNER_POINTS).iter().map(|&(s, w)| w * (k.g)(s) * s).sum()
}

/// 𝓗_l applied to a nodal field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HlResult {
    #[serde(rename = "H")]
    pub h: RadialField,
    #[serde(rename = "dH")]
    pub dh: RadialField,
    #[serde(rename = "H_at_R")]
    pub h_at_r: f64,
}

pub fn hl_apply(grid: &RadialGrid, l: usize, g: &RadialField) -> HlResult {
    let f = |r: f64| g.at(r);
    let kern = HlKernel::new(grid, l, &f, 0.0);
    let (h, dh): (Vec<f64>, Vec<f64>) = grid.nodes.iter().map(|&r| kern.eval(r)).unzip();
    HlResult { h: RadialField::new(grid, h), dh: RadialField::new(grid, dh), h_at_r: kern.at_surface() }
}

/// Weak residual of the radial Poisson equation for H = 𝓗_l g, relative to the load:
/// max_j |∫ r²H′φ_j′ + l(l+1)Hφ_j − g φ_j r² − δ_{jN}R²H′(R)| / max_j |∫ g φ_j r²|.
pub fn hl_weak_residual(grid: &RadialGrid, l: usize, g: &dyn Fn(f64) -> f64, alpha: f64) -> f64 {
    let kern = HlKernel::new(grid, l, g, alpha);
    let ll = (l * (l + 1)) as f64;
    let n = grid.n_nodes();
    let mut res = vec![0.0; n];
    let mut load = vec![0.0; n];
    for c in 0..grid.n_cells() {
        let (s0, s1) = grid.hat_slopes(c);
        for (r, w) in grid.cell_rule(c, alpha) {
            let (p0, p1) = grid.hats(c, r);
            let (h, dh) = kern.eval(r);
            let gv = g(r) * r * r;
            res[c] += w * (r * r * dh * s0 + ll * h * p0 - gv * p0);
            res[c + 1] += w * (r * r * dh * s1 + ll * h * p1 - gv * p1);
            load[c] += w * gv * p0;
            load[c + 1] += w * gv * p1;
        }
    }
    let big_r = grid.radius();
    let (_, dh_r) = kern.eval(big_r);
    res[n - 1] -= big_r * big_r * dh_r;
    let scale = load.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    res.iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}

/// Numerical ∫_R^{L} (r²H′² + l(l+1)H²) dr for the exterior extension H(R)(R/r)^{l+1}.
pub fn exterior_energy_numeric(h_at_r: f64, big_r: f64, l: usize, cutoff: f64) -> f64 {
    let lf = l as f64;
    let ll = lf * (lf + 1.0);
    let smax = (cutoff / big_r).ln();
    let panels = 400;
    let mut e = 0.0;
    for p in 0..panels {
        let a = smax * p as f64 / panels as f64;
        let b = smax * (p + 1) as f64 / panels as f64;
        for (s, w) in segment_rule(a, b, 0.0, 8) {
            let r = big_r * s.exp();
            let h = h_at_r * (big_r / r).powf(lf + 1.0);
            let dh = -(lf + 1.0) * h / r;
            e += w * r * (r * r * dh * dh + ll * h * h);
        }
    }
    e
}

/// Gravitational energy matrix 𝒢_ij = ∫ 𝓗_l(g_i) g_j r² dr for g_i = w φ_i, where w has
/// surface exponent `alpha`. Returns the matrix before symmetrization.
pub fn gravity_matrix(grid: &RadialGrid, l: usize, w: &dyn Fn(f64) -> f64, alpha: f64) -> DMatrix<f64> {
    let n = grid.n_cells();
    let lf = l as f64;
    let k = 1.0 / (2.0 * lf + 1.0);
    // per-cell moments of the two local basis profiles
    let mut lo = vec![[0.0; 2]; n];
    let mut hi = vec![[0.0; 2]; n];
    for c in 0..n {
        for (r, wq) in grid.cell_rule(c, alpha) {
            let (p0, p1) = grid.hats(c, r);
            let v = wq * w(r);
            let (a, b) = (r.powf(lf + 2.0), r.powf(1.0 - lf));
            lo[c][0] += v * p0 * a;
            lo[c][1] += v * p1 * a;
            if c > 0 {
                hi[c][0] += v * p0 * b;
                hi[c][1] += v * p1 * b;
            }
        }
    }
    let mut g = DMatrix::zeros(n + 1, n + 1);
    for cp in 1..n {
        for c in 0..cp {
            for ki in 0..2 {
                for kj in 0..2 {
                    let v = k * lo[c][ki] * hi[cp][kj];
                    g[(c + ki, cp + kj)] += v;
                    g[(cp + kj, c + ki)] += v;
                }
            }
        }
    }
    // same-cell blocks: nested quadrature on the kernel r_<^{l+2} r_>^{1−l}
    for c in 0..n {
        let (a, b) = grid.cell(c);
        let last = c + 1 == n;
        // at the centre the kernel produces r^l log r terms for l ≥ 2
        let outer_rule = if c == 0 && l >= 2 && n > 1 { segment_rule(a, b, 0.0, 24) } else { grid.cell_rule(c, alpha) };
        for (r, wq) in outer_rule {
            let (p0, p1) = grid.hats(c, r);
            let outer = [wq * w(r) * p0, wq * w(r) * p1];
            for ki in 0..2 {
                let gi = |s: f64| {
                    let (q0, q1) = grid.hats(c, s);
                    w(s) * if ki == 0 { q0 } else { q1 }
                };
                let low = low_segment(&gi, l, a, r);
                let high = high_segment(&gi, l, r, b, if last { alpha } else { 0.0 });
                let inner = k * (r.powf(1.0 - lf) * low + r.powf(lf + 2.0) * high);
                g[(c + ki, c)] += outer[0] * inner;
                g[(c + ki, c + 1)] += outer[1] * inner;
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::make_grid;
    use approx::assert_relative_eq;

    #[test]
    fn indicator_closed_form() {
        let big_r = 2.0;
        let grid = make_grid(big_r, 40, 2.0).unwrap();
        let one = RadialField::from_fn(&grid, |_| 1.0);
        let out = hl_apply(&grid, 0, &one);
        assert_relative_eq!(out.h.values[0], big_r * big_r / 2.0, max_relative = 1e-12);
        for (i, &r) in grid.nodes.iter().enumerate() {
            assert_relative_eq!(out.h.values[i], big_r * big_r / 2.0 - r * r / 6.0, max_relative = 1e-12);
            assert_relative_eq!(out.dh.values[i], -r / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_input() {
        let grid = make_grid(1.0, 10, 2.0).unwrap();
        let out = hl_apply(&grid, 2, &RadialField::zeros(&grid));
        assert!(out.h.is_zero() && out.dh.is_zero() && out.h_at_r == 0.0);
    }

    #[test]
    fn weak_residual_small() {
        let grid = make_grid(1.0, 60, 2.0).unwrap();
        // a smooth 3D density has a degree-l component of the form r^l·(even function)
        for l in 0..4 {
            let g = |r: f64| r.powi(l as i32) * ((3.0 * r).cos() + r * r);
            let res = hl_weak_residual(&grid, l, &g, 0.0);
            assert!(res < 1e-10, "l={l}: {res}");
        }
    }

    #[test]
    fn matrix_matches_kernel_pairing() {
        let grid = make_grid(1.5, 12, 2.0).unwrap();
        let w = |r: f64| (1.5 - r).powf(0.7) * (1.0 + r);
        for l in 0..3 {
            let g = gravity_matrix(&grid, l, &w, 0.7);
            let i = 3;
            let j = 9;
            let gi = |r: f64| w(r) * grid.interpolate(&unit(13, i), r);
            let gj = |r: f64| w(r) * grid.interpolate(&unit(13, j), r);
            let kern = HlKernel::new(&grid, l, &gi, 0.7);
            assert_relative_eq!(g[(i, j)], kern.pair(&gj, 0.7), max_relative = 1e-9);
            let kern = HlKernel::new(&grid, l, &gi, 0.7);
            assert_relative_eq!(g[(i, i)], kern.pair(&gi, 0.7), max_relative = 1e-8);
            let asym = (&g - g.transpose()).norm() / g.norm();
            assert!(asym < 1e-8, "l={l} asym={asym}");
        }
    }

    fn unit(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn exterior_tail() {
        for l in 0..3 {
            let num = exterior_energy_numeric(0.7, 1.3, l, 1.3e6);
            assert_relative_eq!(num, (l as f64 + 1.0) * 0.49 * 1.3, max_relative = 1e-5);
        }
    }
}
