use dispersive::cutoff::{bump, CutoffSpec};
use dispersive::jost::{solve_jost, Side, XGrid};
use dispersive::oracle::{self, Band, ModeFilter};
use dispersive::potentials::{Dimension, Potential};
use dispersive::resolvent3d::{b_kernel_norm, hs_norm_r0, Weights};
use dispersive::scattering::{classify_zero_energy, wronskian, Classification, ScatteringData};
use num_complex::Complex;
use proptest::prelude::*;

fn gaussian(amplitude: f64, width: f64) -> Potential<f64> {
    Potential::gaussian(Dimension::One, amplitude, width).unwrap()
}

fn cheap() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cheap())]

    #[test]
    fn weighted_norm_grows_with_weight_and_scales_linearly(
        amplitude in -3.0..3.0f64,
        width in 0.3..2.0f64,
        g1 in 0.0..2.0f64,
        dg in 0.0..1.0f64,
        c in -4.0..4.0f64,
    ) {
        let v = gaussian(amplitude, width);
        let lo = v.weighted_l1_norm(g1, None).unwrap().value;
        let hi = v.weighted_l1_norm(g1 + dg, None).unwrap().value;
        prop_assert!(lo <= hi * (1.0 + 1e-12) + 1e-14);
        let scaled = v.scaled_by(c).weighted_l1_norm(g1, None).unwrap().value;
        prop_assert!((scaled - c.abs() * lo).abs() <= 1e-10 * (1.0 + lo));
    }

    #[test]
    fn jost_profiles_are_conjugate_in_lambda(amplitude in -2.0..2.0f64, lambda in 0.05..6.0f64) {
        let v = gaussian(amplitude, 1.0);
        let grid = XGrid::spanning(-3.0, 3.0, 0.02).unwrap();
        for side in [Side::Plus, Side::Minus] {
            let t = solve_jost(&v, side, &[-lambda, lambda], grid, 1e-12).unwrap();
            prop_assert!(t.conjugation_defect() < 1e-10, "{:?}: {}", side, t.conjugation_defect());
        }
    }

    #[test]
    fn wronskian_is_constant_in_x_and_conjugate_in_lambda(
        amplitude in -2.0..2.0f64,
        lambda in 0.1..5.0f64,
        x0 in -1.5..1.5f64,
    ) {
        let v = gaussian(amplitude, 1.0);
        let grid = XGrid::spanning(-3.0, 3.0, 0.01).unwrap();
        let lambdas = [-lambda, lambda];
        let plus = solve_jost(&v, Side::Plus, &lambdas, grid, 1e-12).unwrap();
        let minus = solve_jost(&v, Side::Minus, &lambdas, grid, 1e-12).unwrap();
        let w0 = wronskian(&plus, &minus, lambda, 0.0).unwrap();
        let wx = wronskian(&plus, &minus, lambda, x0).unwrap();
        prop_assert!((w0 - wx).norm() <= 1e-6 * w0.norm().max(1.0), "W(0) = {w0}, W({x0}) = {wx}");
        let wm = wronskian(&plus, &minus, -lambda, 0.0).unwrap();
        prop_assert!((wm - w0.conj()).norm() <= 1e-9 * w0.norm().max(1.0));
    }

    #[test]
    fn repulsive_wells_stay_nonresonant_when_eps_halves(amplitude in 0.3..3.0f64, width in 0.5..2.0f64) {
        let v = gaussian(amplitude, width);
        let grid = XGrid::spanning(-1.0, 1.0, 0.01).unwrap();
        let lambdas = [0.0, 0.05, 0.1];
        let plus = solve_jost(&v, Side::Plus, &lambdas, grid, 1e-12).unwrap();
        let minus = solve_jost(&v, Side::Minus, &lambdas, grid, 1e-12).unwrap();
        let s = ScatteringData::compute(&plus, &minus, 0.0).unwrap();
        let l11 = v.weighted_l1_norm(1.0, None).unwrap().value;
        let a = classify_zero_energy(&s, 1e-4, l11).unwrap();
        let b = classify_zero_energy(&s, 5e-5, l11).unwrap();
        prop_assert_eq!(a.classification, Classification::Nonresonant);
        prop_assert_eq!(b.classification, Classification::Nonresonant);
    }

    #[test]
    fn cutoff_pieces_partition_unity(lambda0 in 0.01..10.0f64, k in 0.0..20.0f64, x in -3.0..3.0f64) {
        let cut = CutoffSpec { lambda0, truncation: 8.0 };
        prop_assert!((cut.low(k) + cut.high(k) - 1.0).abs() < 1e-15);
        let b = bump(x);
        prop_assert!((0.0..=1.0).contains(&b));
        prop_assert_eq!(b, bump(-x));
    }

    #[test]
    fn b_kernel_norm_is_at_most_twice_the_free_norm(
        lambda in 0.01..10.0f64,
        sigma in 1.05..2.0f64,
        alpha in 1.05..2.0f64,
    ) {
        let w = Weights::new(sigma, alpha);
        let b = b_kernel_norm(lambda, w, None).unwrap().value;
        let r0 = hs_norm_r0(w, lambda, 0, None).unwrap().value;
        prop_assert!(b <= 2.0 * r0 * (1.0 + 1e-9), "B = {b}, R0 = {r0}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn oracle_kernel_is_symmetric_and_time_reversible(amplitude in -3.0..3.0f64, t in 0.1..5.0f64) {
        let g = oracle::build(&gaussian(amplitude, 1.0), 8.0, 0.1).unwrap();
        let pts = [-2.0, -0.5, 0.0, 1.3, 3.0];
        let filter = ModeFilter::ac(Band::Window { truncation: 3.0 });
        let fwd = g.propagator(t, &filter, &pts, &pts).unwrap();
        let back = g.propagator(-t, &filter, &pts, &pts).unwrap();
        for i in 0..pts.len() {
            for j in 0..pts.len() {
                prop_assert!((fwd.at(i, j) - fwd.at(j, i)).norm() < 1e-10);
                prop_assert!((back.at(i, j) - fwd.at(i, j).conj()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn continuum_and_bound_parts_add_up(amplitude in -3.0..0.0f64, t in 0.1..5.0f64) {
        let g = oracle::build(&gaussian(amplitude, 1.0), 8.0, 0.1).unwrap();
        let pts = [-1.0, 0.0, 0.7];
        let full = g.propagator(t, &ModeFilter::full(), &pts, &pts).unwrap();
        let ac = g.propagator(t, &ModeFilter::ac(Band::All), &pts, &pts).unwrap();
        let idx: Vec<usize> = pts.iter().map(|x| g.nearest(*x).unwrap()).collect();
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                let bound: Complex<f64> = (0..g.negative_count())
                    .map(|n| {
                        let e = g.eigenvalues[n];
                        Complex::from_polar(1.0, t * e) * g.eigenvectors[(i, n)] * g.eigenvectors[(j, n)] / g.h
                    })
                    .sum();
                prop_assert!((ac.at(a, b) + bound - full.at(a, b)).norm() < 1e-9);
            }
        }
        // Splitting the window at any threshold keeps the sum.
        let cut = CutoffSpec { lambda0: 1.0, truncation: 3.0 };
        let window = g.propagator(t, &ModeFilter::ac(Band::Window { truncation: 3.0 }), &pts, &pts).unwrap();
        let low = g.propagator(t, &ModeFilter::ac(Band::Low { cut }), &pts, &pts).unwrap();
        let high = g.propagator(t, &ModeFilter::ac(Band::High { cut }), &pts, &pts).unwrap();
        for (k, w) in window.values.iter().enumerate() {
            prop_assert!((low.values[k] + high.values[k] - w).norm() < 1e-9);
        }
    }
}
