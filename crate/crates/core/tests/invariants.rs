use cocycle_core::dilation::extract_hp_params;
use cocycle_core::generator::check_conditionally_cp;
use cocycle_core::io::{read_trace, write_trace, GeneratorFile, HPParamsFile};
use cocycle_core::ito::{flat, ito_product, PseudoMetric};
use cocycle_core::linalg::{c, max_abs_diff, min_eigenvalue, CMat};
use cocycle_core::random::{random_complex, random_hermitian, random_hp_params, random_matrix, random_structure_matrix, seeded, Normalization};
use cocycle_core::sim::{simulate_transfer, slice_choi, CoherentFunction, TimeGrid, ToyFockModel};
use cocycle_core::{assemble_from_hp, HPParams};
use proptest::prelude::*;

fn draw_params(seed: u64, n: usize, d: usize, r: usize, martingale: bool) -> HPParams {
    let mut rng = seeded(seed);
    let norm = if martingale {
        Normalization::Martingale
    } else {
        Normalization::Submartingale(0.3)
    };
    random_hp_params(&mut rng, n, d, r, 0.6, norm).unwrap()
}

fn random_unitary(seed: u64, r: usize) -> CMat {
    let mut rng = seeded(seed);
    random_matrix(&mut rng, r, r, 1.0).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ito_product_is_associative(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=3) {
        let mut rng = seeded(seed);
        let a = random_structure_matrix(&mut rng, n, d, 1.0).unwrap();
        let b = random_structure_matrix(&mut rng, n, d, 1.0).unwrap();
        let g = random_structure_matrix(&mut rng, n, d, 1.0).unwrap();
        let left = ito_product(&ito_product(&a, &b).unwrap(), &g).unwrap();
        let right = ito_product(&a, &ito_product(&b, &g).unwrap()).unwrap();
        prop_assert!(left.max_abs_diff(&right) < 1e-12);
    }

    #[test]
    fn flat_is_an_involutive_anti_homomorphism(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=3) {
        let mut rng = seeded(seed);
        let metric = PseudoMetric::for_structure(n, d, random_hermitian(&mut rng, n, 1.0)).unwrap();
        let a = random_structure_matrix(&mut rng, n, d, 1.0).unwrap();
        let b = random_structure_matrix(&mut rng, n, d, 1.0).unwrap();
        let twice = flat(&flat(&a, &metric).unwrap(), &metric).unwrap();
        prop_assert!(twice.max_abs_diff(&a) < 1e-12);
        let lhs = flat(&ito_product(&a, &b).unwrap(), &metric).unwrap();
        let rhs = ito_product(&flat(&b, &metric).unwrap(), &flat(&a, &metric).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11);
        prop_assert!(metric.roundtrip_residual() <= 1e-14);
    }

    #[test]
    fn assembled_generators_are_symmetric_and_conditionally_cp(
        seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2, r in 1usize..=3, martingale in any::<bool>()
    ) {
        let p = draw_params(seed, n, d, r, martingale);
        let gen = assemble_from_hp(&p).unwrap();
        prop_assert!(gen.symmetry_residual() < 1e-12);
        let verdict = check_conditionally_cp(&gen, 1e-10).unwrap();
        prop_assert!(verdict.accepted(), "min eig {}", verdict.min_eig());
    }

    #[test]
    fn kraus_rotation_leaves_the_generator_unchanged(
        seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2, r in 1usize..=3
    ) {
        let p = draw_params(seed, n, d, r, true);
        let u = random_unitary(seed ^ 0x5eed, r);
        let rotated = p.with_kraus_unitary(&u).unwrap();
        let a = assemble_from_hp(&p).unwrap();
        let b = assemble_from_hp(&rotated).unwrap();
        prop_assert!(a.block_residual(&b) < 1e-12);
    }

    #[test]
    fn extraction_round_trips(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2, r in 1usize..=3, martingale in any::<bool>()) {
        let gen = assemble_from_hp(&draw_params(seed, n, d, r, martingale)).unwrap();
        let ex = extract_hp_params(&gen, 1e-9).unwrap();
        let back = assemble_from_hp(&ex.params).unwrap();
        prop_assert!(gen.block_residual(&back) <= 1e-8);
    }

    #[test]
    fn coefficient_files_round_trip_bit_exactly(seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2, r in 1usize..=3) {
        let p = draw_params(seed, n, d, r, false);
        let text = serde_json::to_string(&HPParamsFile::from_params(&p)).unwrap();
        let back = serde_json::from_str::<HPParamsFile>(&text).unwrap().to_params().unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn generator_files_round_trip_bit_exactly(seed in any::<u64>(), n in 1usize..=2, d in 1usize..=2) {
        let gen = assemble_from_hp(&draw_params(seed, n, d, 2, true)).unwrap();
        let text = serde_json::to_string(&GeneratorFile::from_generator(&gen)).unwrap();
        let back = serde_json::from_str::<GeneratorFile>(&text).unwrap().to_generator().unwrap();
        prop_assert_eq!(back, gen);
    }

    #[test]
    fn traces_round_trip_bit_exactly(seed in any::<u64>(), steps in 1usize..=16) {
        let p = draw_params(seed, 2, 1, 1, true);
        let grid = TimeGrid::new(0.7, steps).unwrap();
        let mut rng = seeded(seed);
        let f = CoherentFunction::constant(grid, &[random_complex(&mut rng)]).unwrap();
        let x = random_matrix(&mut rng, 2, 2, 1.0);
        let trace = simulate_transfer(&ToyFockModel::new(p, grid).unwrap(), &x, &f, &f).unwrap();
        let errors: Vec<f64> = (0..=steps).map(|k| k as f64 / 3.0).collect();
        let mut buf = Vec::new();
        write_trace(&mut buf, &trace, Some(&errors)).unwrap();
        let (back, back_err) = read_trace(buf.as_slice()).unwrap();
        prop_assert_eq!(back, trace);
        prop_assert_eq!(back_err, Some(errors));
    }

    #[test]
    fn slice_transfer_is_completely_positive_on_the_diagonal(
        seed in any::<u64>(), n in 1usize..=3, d in 1usize..=2, r in 1usize..=3
    ) {
        let p = draw_params(seed, n, d, r, true);
        let model = ToyFockModel::new(p, TimeGrid::new(1.0, 32).unwrap()).unwrap();
        let mut rng = seeded(seed.wrapping_add(1));
        let f: Vec<_> = (0..d).map(|_| random_complex(&mut rng)).collect();
        prop_assert!(min_eigenvalue(&slice_choi(&model, &f, &f).unwrap()) >= -1e-12);
    }

    #[test]
    fn vacuum_transfer_preserves_hermiticity(seed in any::<u64>()) {
        let p = draw_params(seed, 2, 1, 2, true);
        let grid = TimeGrid::new(1.0, 32).unwrap();
        let vac = CoherentFunction::vacuum(grid, 1);
        let x = CMat::from_fn(2, 2, |i, j| if i == j { c(1.0 + i as f64, 0.0) } else { c(0.3, if i < j { 0.2 } else { -0.2 }) });
        let trace = simulate_transfer(&ToyFockModel::new(p, grid).unwrap(), &x, &vac, &vac).unwrap();
        prop_assert!(trace.max_hermitian_residual() < 1e-13);
        prop_assert!(max_abs_diff(&trace.values[0], &x) == 0.0);
    }
}
