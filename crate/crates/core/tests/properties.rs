use phasewit::cli::RunConfig;
use phasewit::families::{coherent_product, noon_state, random_haar_state, NoonParams, RandomStateSpec};
use phasewit::fock::{displace_state, hermiticity_residual, FockCutoff, TwoModeState, C64};
use phasewit::measurement::{measurement_distribution, sample_histogram, MeasurementConfig, Mix, OutcomeHistogram};
use phasewit::phase_space::{
    build_moment_matrix, detect, husimi_criterion, phase_space_value, second_order_minor, CriterionKind, PhasePoint,
    Verdict, WidthAssignment, WidthParam, DETECT_TOL,
};
use phasewit::ppt::ppt_min_eig;
use phasewit::scan::{grid_scan, sigma_sweep, Axis, ScanRegion};
use proptest::prelude::*;

fn sq(d: usize) -> FockCutoff {
    FockCutoff::square(d).unwrap()
}

fn amp(r: f64) -> impl Strategy<Value = C64> {
    (-r..r, -r..r).prop_map(|(re, im)| C64::new(re, im))
}

fn point(r: f64) -> impl Strategy<Value = PhasePoint> {
    (amp(r), amp(r)).prop_map(|(a, b)| PhasePoint::new(a, b))
}

fn width() -> impl Strategy<Value = WidthParam> {
    (0.0..=1.0f64).prop_map(|s| WidthParam::new(s).unwrap())
}

fn random_state(d: usize, seed: u64, index: usize) -> TwoModeState {
    let spec = RandomStateSpec { d, seed, count: index + 1 };
    random_haar_state(&spec, index, sq(d)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_states_never_violate(g in amp(1.0), d in amp(1.0), p in point(1.5), s in width()) {
        let state = coherent_product(g, d, sq(18)).unwrap();
        prop_assert!(second_order_minor(&state, p, &WidthAssignment::uniform(s)).unwrap() >= -1e-10);
        let m = detect(&state, p, 2, &WidthAssignment::uniform(s), DETECT_TOL).unwrap();
        prop_assert!(m.min_eigenvalue >= -1e-10);
        prop_assert!(m.verdict != Verdict::Entangled);
    }

    #[test]
    fn husimi_is_nonnegative(seed in 0u64..1000, p in point(2.0)) {
        let state = random_state(3, seed, 0);
        prop_assert!(phase_space_value(&state, p, WidthParam::HUSIMI, WidthParam::HUSIMI).unwrap() >= -1e-14);
    }

    #[test]
    fn moment_matrix_is_hermitian(seed in 0u64..1000, p in point(1.5), s in width()) {
        let state = random_state(2, seed, 1);
        let m = build_moment_matrix(&state, p, 2, &WidthAssignment::uniform(s)).unwrap();
        prop_assert!(hermiticity_residual(&m.entries) < 1e-12);
    }

    #[test]
    fn detection_implies_ppt(seed in 0u64..1000, p in point(2.0)) {
        let state = random_state(3, seed, 2);
        let r = detect(&state, p, 2, &WidthAssignment::husimi(), DETECT_TOL).unwrap();
        if r.verdict == Verdict::Entangled {
            prop_assert!(ppt_min_eig(&state).unwrap().entangled);
        }
    }

    #[test]
    fn displacement_keeps_trace(seed in 0u64..1000, p in point(1.5)) {
        let state = random_state(3, seed, 0);
        let (moved, _) = displace_state(&state, p).unwrap();
        prop_assert!((moved.trace() - 1.0).abs() < 1e-10);
        let (a, b) = moved.mean_photon_numbers();
        prop_assert!(a >= 0.0 && b >= 0.0);
    }

    #[test]
    fn sweep_at_one_is_husimi(n in 1usize..4, p in point(1.5)) {
        let state = noon_state(&NoonParams::balanced(n), sq(20)).unwrap();
        let rows = sigma_sweep(&state, p, &[WidthParam::HUSIMI]).unwrap().rows;
        prop_assert!((rows[0].value - husimi_criterion(&state, p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn distributions_are_normalized(seed in 0u64..1000, p in point(1.0), theta in 0.0..6.3f64, k in 0usize..4) {
        let state = random_state(2, seed, 0);
        let mix = [Mix::None, Mix::Balanced, Mix::TransmitOnly, Mix::ReflectOnly][k];
        let h = measurement_distribution(&state, &MeasurementConfig::exact(p, mix, theta)).unwrap();
        prop_assert!((h.total() - 1.0).abs() < 1e-10);
        prop_assert!(h.values.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn sampling_is_seeded(seed in 0u64..10_000, shots in 1u64..5000) {
        let state = random_state(2, 4, 0);
        let dist = measurement_distribution(&state, &MeasurementConfig::exact(PhasePoint::origin(), Mix::Balanced, 0.0)).unwrap();
        let a = sample_histogram(&dist, shots, seed).unwrap();
        let b = sample_histogram(&dist, shots, seed).unwrap();
        prop_assert_eq!(&a.values, &b.values);
        prop_assert_eq!(a.total(), shots as f64);
    }

    #[test]
    fn histogram_file_form(seed in 0u64..1000, shots in 1u64..2000) {
        let state = random_state(2, seed, 0);
        let dist = measurement_distribution(&state, &MeasurementConfig::exact(PhasePoint::origin(), Mix::None, 0.0)).unwrap();
        let h = sample_histogram(&dist, shots, seed).unwrap();
        let back = OutcomeHistogram::from_json(&h.to_json()).unwrap();
        prop_assert_eq!(back.values, h.values);
    }

    #[test]
    fn config_file_form(n in proptest::option::of(1usize..9), seed in proptest::option::of(any::<u64>()),
                        tau in proptest::option::of(0.01..1.0f64), refine in proptest::option::of(any::<bool>())) {
        let cfg = RunConfig { n, seed, tau, refine, point: Some("0.5,0,-1,0.25".into()), ..RunConfig::default() };
        let back = RunConfig::from_json_str(&cfg.to_json().to_string()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

#[test]
fn scans_do_not_depend_on_thread_count() {
    let state = noon_state(&NoonParams::balanced(3), sq(16)).unwrap();
    let axis = Axis::new(-2.0, 2.0, 31).unwrap();
    let region = ScanRegion::real_plane(axis, axis);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| grid_scan(&state, &region, WidthParam::HUSIMI, CriterionKind::M2).unwrap().to_csv().unwrap())
    };
    assert_eq!(run(1), run(4));
}
