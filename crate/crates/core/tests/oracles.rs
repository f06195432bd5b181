use lattice_flow::dkg::{acceleration, KgParams, KgState, Verlet};
use lattice_flow::fourier::dft;
use lattice_flow::kernel::{default_quadrature_points, kernel_l1_norm, multiplier_kernel};
use lattice_flow::oracle::{
    assemble_dense, direct_dft, direct_kernel_coefficient, finite_diff_second, DenseOp,
};
use lattice_flow::random::FieldRng;
use lattice_flow::spectral::{
    bessel_power, bessel_symbol_at, discrete_laplacian, kg_propagator, laplacian_symbol,
    schrodinger_propagator,
};
use lattice_flow::{Exponent, Field, LatticeSpec, RealField};
use num_complex::Complex64;

const L2: Exponent = Exponent::Finite(2.0);

fn rel_l2(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().norm(L2) / b.norm(L2).max(f64::MIN_POSITIVE)
}

#[test]
fn dense_operators_match_the_spectral_path() {
    for h in [1.0, 0.5] {
        let spec = LatticeSpec::new(1, 8, h).unwrap();
        let mut rng = FieldRng::new(100);
        let fields: Vec<Field> = (0..20).map(|_| rng.complex_field(spec, 1.0)).collect();

        let lap = assemble_dense(DenseOp::Laplacian, &spec).unwrap();
        for f in &fields {
            assert!(rel_l2(&lap.apply(f).unwrap(), &discrete_laplacian(f)) <= 1e-12);
        }
        for alpha in [-1.0, -0.5, 0.25, 1.0] {
            let op = assemble_dense(DenseOp::BesselPower(alpha), &spec).unwrap();
            for f in &fields {
                let err = rel_l2(&bessel_power(f, alpha).unwrap(), &op.apply(f).unwrap());
                assert!(err <= 1e-8, "alpha {alpha}: {err:e}");
            }
        }
        for t in [0.5, 0.7] {
            let s = assemble_dense(DenseOp::SchrodingerPropagator(t), &spec).unwrap();
            let k = assemble_dense(DenseOp::KgPropagator(t), &spec).unwrap();
            assert!(s.unitarity_defect() <= 1e-10 && k.unitarity_defect() <= 1e-10);
            for f in &fields {
                assert!(rel_l2(&schrodinger_propagator(f, t), &s.apply(f).unwrap()) <= 1e-8);
                assert!(rel_l2(&kg_propagator(f, t), &k.apply(f).unwrap()) <= 1e-8);
            }
        }
    }
}

#[test]
fn direct_dft_agrees_with_the_fast_transform() {
    let spec = LatticeSpec::new(2, 8, 1.0).unwrap();
    let mut rng = FieldRng::new(101);
    let f = rng.complex_field(spec, 1.0);
    let g = rng.complex_field(spec, 1.0);
    assert!(rel_l2(&dft(&f), &direct_dft(&f).unwrap()) <= 1e-11);

    let c = Complex64::new(0.3, -1.2);
    let combo = f.zip_map(&g.scaled_complex(c), |a, b| a + b).unwrap();
    let lhs = direct_dft(&combo).unwrap();
    let rhs = direct_dft(&f)
        .unwrap()
        .zip_map(&direct_dft(&g).unwrap().scaled_complex(c), |a, b| a + b)
        .unwrap();
    assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12 * rhs.sup_norm());

    let delta = direct_dft(&Field::delta(spec, Complex64::new(2.0, 0.0))).unwrap();
    assert!(delta.values().iter().all(|z| (z - Complex64::new(2.0, 0.0)).norm() <= 1e-14));
}

#[test]
fn stencil_and_symbol_agree() {
    for (d, n, h) in [(1, 16, 1.0), (2, 8, 0.5), (3, 4, 0.25)] {
        let spec = LatticeSpec::new(d, n, h).unwrap();
        let f = FieldRng::new(102).complex_field(spec, 1.0);
        let via_stencil = dft(&discrete_laplacian(&f));
        let symbol = laplacian_symbol(spec);
        let via_symbol = Field::from_values(
            spec,
            dft(&f).values().iter().zip(symbol.values()).map(|(z, s)| -z * s).collect(),
        )
        .unwrap();
        assert!(rel_l2(&via_stencil, &via_symbol) <= 1e-10);

        let one_minus = f.zip_map(&discrete_laplacian(&f), |a, b| a - b).unwrap();
        assert!(rel_l2(&bessel_power(&f, 1.0).unwrap(), &one_minus) <= 1e-10);
    }
}

#[test]
fn resolvent_kernel_norm_matches_direct_summation() {
    let (h, radius) = (1.0, 12);
    let q = default_quadrature_points(radius);
    let m = |xi: &[f64]| Complex64::new(1.0 / bessel_symbol_at(h, xi), 0.0);
    let b = multiplier_kernel(&m, 1, h, radius, q, 1e-10).unwrap();
    assert!(b.converged());
    let mut direct = 0.0;
    for k in -(radius as isize)..=radius as isize {
        direct += direct_kernel_coefficient(&m, 1, h, &[k], 4 * q).unwrap().norm();
    }
    let l1 = kernel_l1_norm(&b).l1;
    assert!((l1 - direct).abs() <= 1e-6, "{l1} vs {direct}");
}

#[test]
fn shift_multipliers_give_shifted_deltas() {
    let h = 0.5;
    for j in [1isize, 3, -2] {
        let radius = 4;
        let q = default_quadrature_points(radius);
        let plus = move |xi: &[f64]| Complex64::from_polar(1.0, h * j as f64 * xi[0]);
        let minus = move |xi: &[f64]| Complex64::from_polar(1.0, -h * j as f64 * xi[0]);
        let bp = multiplier_kernel(&plus, 1, h, radius, q, 1e-10).unwrap();
        let bm = multiplier_kernel(&minus, 1, h, radius, q, 1e-10).unwrap();
        for k in -(radius as isize)..=radius as isize {
            let want = |at: isize| if k == at { 1.0 } else { 0.0 };
            assert!((bp.get(&[k]) - Complex64::new(want(j), 0.0)).norm() <= 1e-10);
            assert!((bm.get(&[k]) - Complex64::new(want(-j), 0.0)).norm() <= 1e-10);
        }
    }
}

#[test]
fn kernel_convolution_reproduces_the_multiplier() {
    let spec = LatticeSpec::new(1, 64, 1.0).unwrap();
    let radius = 24;
    let m = |xi: &[f64]| Complex64::new(1.0 / bessel_symbol_at(1.0, xi), 0.0);
    let b = multiplier_kernel(&m, 1, 1.0, radius, default_quadrature_points(radius), 1e-10).unwrap();
    let f = FieldRng::new(103).complex_field(spec, 1.0);
    let direct = b.convolve(&f).unwrap();
    assert!(rel_l2(&direct, &bessel_power(&f, -1.0).unwrap()) <= 1e-8);
}

#[test]
fn young_bound_for_kernel_operators() {
    let spec = LatticeSpec::new(2, 12, 0.5).unwrap();
    let radius = 5;
    let m = |xi: &[f64]| Complex64::new(bessel_symbol_at(0.5, xi).powf(-0.5), 0.0);
    let b = multiplier_kernel(&m, 2, 0.5, radius, default_quadrature_points(radius), 1e-8).unwrap();
    let l1 = kernel_l1_norm(&b).l1;
    let mut rng = FieldRng::new(104);
    for _ in 0..10 {
        let f = rng.complex_field(spec, 1.0);
        let tf = b.convolve(&f).unwrap();
        for p in Exponent::standard_grid() {
            assert!(tf.norm(p) <= l1 * f.norm(p) * (1.0 + 1e-6));
        }
    }
}

#[test]
fn virial_second_difference_converges_at_second_order() {
    let spec = LatticeSpec::new(1, 32, 1.0).unwrap();
    let params = KgParams::new(1.0, -1.0, RealField::constant(spec, 1.0)).unwrap();
    let mut rng = FieldRng::new(105);
    let s0 = KgState::new(rng.real_field(spec, 0.5), rng.real_field(spec, 0.5)).unwrap();
    let deviation = |tau: f64| {
        let scheme = Verlet::new(params.clone());
        let steps = (0.4 / tau).round() as usize;
        let mut states = vec![s0.clone()];
        for _ in 0..steps {
            let next = scheme.step(states.last().unwrap(), tau);
            states.push(next);
        }
        let series: Vec<f64> = states.iter().map(|s| s.u.norm(L2).powi(2)).collect();
        let fd = finite_diff_second(&series, tau).unwrap();
        // I'' = 2 Σ v² + 2 Σ u ü along the exact flow
        let stride = steps / 4;
        (1..4)
            .map(|j| {
                let s = &states[j * stride];
                let acc = acceleration(&s.u, &params);
                let exact = 2.0 * s.v.norm(L2).powi(2) + 2.0 * s.u.inner(&acc).unwrap();
                (fd[j * stride - 1] - exact).abs()
            })
            .fold(0.0, f64::max)
    };
    let ratio = deviation(0.01) / deviation(0.005);
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
}

// Sup-norm growth of M^α on the sign pattern of its own kernel equals the
// kernel's l1 norm, which for 0 < α < 1 exceeds (1 + 4d/h²)^α.
#[test]
fn fractional_bessel_power_exceeds_the_symbol_maximum_on_sign_data() {
    for (h, alpha, expected) in [(1.0, 0.5, 2.3552), (0.25, 0.25, 3.4368)] {
        let spec = LatticeSpec::new(1, 512, h).unwrap();
        let kernel = bessel_power(&Field::delta(spec, Complex64::new(1.0, 0.0)), alpha).unwrap();
        let l1: f64 = kernel.values().iter().map(|z| z.norm()).sum();
        assert!((l1 - expected).abs() < 1e-3, "l1 {l1}");
        // (M^α f)_0 = Σ_k b_k f_k for the symmetric kernel b
        let signs = Field::from_fn(spec, |i| Complex64::new(kernel.values()[i].re.signum(), 0.0));
        let growth = bessel_power(&signs, alpha).unwrap().sup_norm() / signs.sup_norm();
        let constant = (1.0 + 4.0 / (h * h)).powf(alpha);
        assert!((growth - l1).abs() < 1e-9 * l1);
        assert!(growth > 1.04 * constant, "growth {growth}, constant {constant}");
    }
}
