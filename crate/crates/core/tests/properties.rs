use nalgebra::DVector;
use polytrope_core::discretization::{assemble_local, make_grid, weighted_mass, Coef, WeightKind};
use polytrope_core::dynamics::{evolve_mode, DensityOperator};
use polytrope_core::eigensolver::{shooting_count, solve_gsep, solve_tridiagonal, sturm_count, OperatorKind};
use polytrope_core::equilibrium::{build_equilibrium, Equilibrium, GasLaw};
use polytrope_core::operators::{
    assemble_Lss, assemble_Nl, divergence_load, kappa_forms, lambda_parts, mhat_mode, mode_quadratic_form,
    quadratic_form_Lambda, RadialField, VectorModeLM,
};
use proptest::prelude::*;

fn eq(gamma: f64) -> Equilibrium {
    build_equilibrium(GasLaw::unit(gamma).unwrap(), 16).unwrap()
}

fn sine_field(coef: &[f64], radius: f64) -> impl Fn(f64) -> f64 + '_ {
    move |r: f64| {
        coef.iter()
            .enumerate()
            .map(|(k, a)| a * ((k + 1) as f64 * std::f64::consts::PI * r / radius).sin())
            .sum()
    }
}

fn poly(c: &[f64], r: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * r + a)
}

fn poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
    c.iter().enumerate().map(|(k, ck)| ck * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn surface_enthalpy_is_linear(gamma in 1.21f64..1.99) {
        let e = eq(gamma);
        prop_assert!(e.k_surface > 0.0);
        for i in 0..50 {
            let r = e.radius * (0.9 + 0.1 * i as f64 / 50.0);
            let ratio = e.profile(r).u / (e.radius - r) / e.k_surface;
            prop_assert!(ratio > 0.5 && ratio < 2.0, "u/(K(R-r)) = {} at r/R = {}", ratio, r / e.radius);
        }
    }

    #[test]
    fn kappa_forms_agree(gamma in 1.001f64..1.999) {
        prop_assume!((gamma - 1.0).abs() > 1e-3);
        let k = kappa_forms(gamma);
        let s = k.iter().map(|v| v.abs()).fold(1.0, f64::max);
        prop_assert!((k[0] - k[1]).abs() <= 1e-12 * s);
        prop_assert!((k[0] - k[2]).abs() <= 1e-12 * s);
    }

    #[test]
    fn polynomial_assembly_is_exact(
        c in prop::collection::vec(-2.0f64..2.0, 6),
        lin in prop::collection::vec(-1.0f64..1.0, 4),
        n in 3usize..30,
        p in 1.0f64..3.0,
    ) {
        // P1 reproduces linear functions, so vᵀKw is the exact integral of c·v·w
        let grid = make_grid(1.7, n, p).unwrap();
        let f = |r: f64| poly(&c, r);
        let k = assemble_local(&grid, None, Some(Coef::new(&f, 0.0)));
        let v = DVector::from_iterator(n + 1, grid.nodes.iter().map(|&r| lin[0] + lin[1] * r));
        let w = DVector::from_iterator(n + 1, grid.nodes.iter().map(|&r| lin[2] + lin[3] * r));
        let prod = [lin[0] * lin[2], lin[0] * lin[3] + lin[1] * lin[2], lin[1] * lin[3]];
        let mut full = vec![0.0; c.len() + 2];
        for (i, ci) in c.iter().enumerate() {
            for (j, pj) in prod.iter().enumerate() {
                full[i + j] += ci * pj;
            }
        }
        let exact = poly_integral(&full, 0.0, 1.7);
        let scale = poly_integral(&full.iter().map(|x| x.abs()).collect::<Vec<_>>(), 0.0, 1.7).max(1e-300);
        prop_assert!((v.dot(&(&k * &w)) - exact).abs() <= 1e-13 * scale);
    }

    #[test]
    fn degenerate_weight_mass_is_positive(beta in 0.01f64..3.99, n in 4usize..60) {
        let e = eq(1.5);
        let grid = make_grid(e.radius, n, 2.0).unwrap();
        let m = weighted_mass(&grid, WeightKind::XBeta(beta), &e);
        for i in 1..=n {
            prop_assert!(m[(i, i)].is_finite() && m[(i, i)] > 0.0);
        }
    }

    #[test]
    fn lambda_is_nonnegative_and_quadratic(
        gamma in 1.21f64..1.99,
        l in 1usize..4,
        coef in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let e = eq(gamma);
        let grid = make_grid(e.radius, 80, 2.0).unwrap();
        let s = sine_field(&coef, e.radius);
        let g = |r: f64| e.profile(r).drho_du * s(r);
        let g2 = |r: f64| 2.0 * g(r);
        let alpha = e.nu() - 1.0;
        let (local, gravity) = lambda_parts(&e, &grid, l, &g, alpha);
        prop_assert!(local - gravity >= -1e-10 * local);
        let twice = quadratic_form_Lambda(&e, &grid, l, &g2, alpha);
        prop_assert!((twice - 4.0 * (local - gravity)).abs() <= 1e-10 * local);
    }

    #[test]
    fn toroidal_fields_are_in_the_kernel(
        gamma in 1.21f64..1.99,
        l in 1usize..5,
        vals in prop::collection::vec(-1.0f64..1.0, 41),
    ) {
        let e = eq(gamma);
        let grid = make_grid(e.radius, 40, 2.0).unwrap();
        let z = RadialField::zeros(&grid);
        let x = VectorModeLM::new(l, 0, z.clone(), z, RadialField::new(&grid, vals)).unwrap();
        prop_assert!(divergence_load(&e, &grid, l, &x.psi, &x.chi).iter().all(|&v| v == 0.0));
        prop_assert_eq!(mode_quadratic_form(&e, &grid, &x), 0.0);
    }

    #[test]
    fn forms_are_symmetric(gamma in 1.21f64..1.99, l in 0usize..3) {
        let e = eq(gamma);
        let grid = make_grid(e.radius, 40, 2.0).unwrap();
        let f = assemble_Nl(&e, &grid, l).unwrap();
        let ks = f.k.norm();
        prop_assert!((&f.k - f.k.transpose()).norm() <= 1e-12 * ks);
        prop_assert!((&f.m - f.m.transpose()).norm() <= 1e-12 * f.m.norm());
        let ms = solve_gsep(&f, Some(1)).unwrap();
        prop_assert!(ms.lambdas[0].is_finite());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn eigenpairs_sorted_and_orthonormal(gamma in 1.21f64..1.99, n in 20usize..80) {
        let e = eq(gamma);
        let f = assemble_Lss(&e, &make_grid(e.radius, n, 2.0).unwrap());
        let ms = solve_gsep(&f, Some(6)).unwrap();
        prop_assert!(ms.lambdas.windows(2).all(|w| w[0] <= w[1]));
        for i in 0..ms.len() {
            for j in 0..ms.len() {
                let (a, b) = (DVector::from_column_slice(&ms.nodal[i]), DVector::from_column_slice(&ms.nodal[j]));
                let g = a.dot(&(&f.m * &b));
                let target = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - target).abs() < 1e-8, "gram({}, {}) = {}", i, j, g);
            }
        }
    }

    #[test]
    fn ritz_values_decrease_on_nested_grids(gamma in 1.21f64..1.99, n in 20usize..100) {
        // p = 2 grids with N and 2N cells are nested
        let e = eq(gamma);
        let coarse = solve_tridiagonal(&assemble_Lss(&e, &make_grid(e.radius, n, 2.0).unwrap()), 4).unwrap();
        let fine = solve_tridiagonal(&assemble_Lss(&e, &make_grid(e.radius, 2 * n, 2.0).unwrap()), 4).unwrap();
        for k in 0..4 {
            prop_assert!(fine.lambdas[k] <= coarse.lambdas[k] + 1e-9 * coarse.lambdas[k].abs().max(1.0));
        }
    }

    #[test]
    fn shooting_and_sturm_counts_agree(gamma in 1.25f64..1.95, frac in 0.1f64..0.9) {
        let e = eq(gamma);
        let f = assemble_Lss(&e, &make_grid(e.radius, 400, 2.0).unwrap());
        let ms = solve_tridiagonal(&f, 4).unwrap();
        // a point between the 3rd and 4th Ritz values, away from both
        let sigma = ms.lambdas[2] + frac * (ms.lambdas[3] - ms.lambdas[2]);
        prop_assert_eq!(sturm_count(&f, sigma).unwrap(), 3);
        prop_assert_eq!(shooting_count(&e, OperatorKind::Lss, 0, sigma).unwrap(), 3);
    }

    #[test]
    fn trajectory_start_and_constraint(gamma in 1.4f64..1.9, l in 1usize..3, e_amp in -2.0f64..2.0) {
        let e = eq(gamma);
        let grid = make_grid(e.radius, 60, 2.0).unwrap();
        let op = DensityOperator::new(&e, &grid, l).unwrap();
        let ms = solve_gsep(&assemble_Nl(&e, &grid, l).unwrap(), Some(3)).unwrap();
        let j = ms.len() - 1;
        let (lambda, phi) = op.refine_eigenpair(ms.lambdas[j], &DVector::from_column_slice(&ms.nodal[j])).unwrap();
        let shape = mhat_mode(&e, &grid, l, 0, &op.density(&phi));
        let mut v0 = shape.scaled(e_amp / lambda.sqrt());
        v0.kappa_t = RadialField::from_fn(&grid, |r| r * (e.radius - r));
        let tr = evolve_mode(&op, lambda, &phi, e_amp, &v0, &[0.0]).unwrap();
        let wn = op.wnorm();
        prop_assert_eq!(wn.mode(&tr.at(0.0)), 0.0);
        // centred difference at t = 0 is second order
        let err = |h: f64| wn.mode(&tr.at(h).combine(1.0 / (2.0 * h), &tr.at(-h), -1.0 / (2.0 * h)).combine(1.0, &v0, -1.0));
        let v0n = wn.mode(&v0);
        let (e1, e2) = (err(1e-2), err(5e-3));
        prop_assert!(e2 <= 1e-6 * v0n || e1 / e2 > 3.5, "{} {}", e1, e2);
        for t in [0.3, 1.7, 11.0] {
            let d = op.divergence(&tr.at(t));
            let target = &phi * (e_amp * (lambda.sqrt() * t).sin());
            let s = op.density_norm(&phi) * e_amp.abs();
            prop_assert!(op.density_norm(&(d - target)) <= 1e-7 * s.max(1e-300));
        }
    }
}
