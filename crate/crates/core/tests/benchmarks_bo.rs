use betabo::acquisition::{AcquisitionKind, AcquisitionSpec};
use betabo::benchmarks::{
    boundary_distance, from_unit, partition_volumes, shift_domain, to_unit, BenchmarkFunction, BenchmarkSpec,
    DomainBox, FnBlackBox, Setting,
};
use betabo::bo::{run_bo, BoConfig};
use betabo::kernels::{KernelKind, MaternNu, UnitPoint};
use proptest::prelude::*;

fn domain(d: usize) -> impl Strategy<Value = DomainBox> {
    prop::collection::vec((-50.0..50.0f64, 1e-3..100.0f64), d).prop_map(|v| {
        let (lo, w): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        let hi = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
        DomainBox::new(lo, hi).unwrap()
    })
}

proptest! {
    #[test]
    fn unit_mapping_round_trips(
        (dom, u) in (1usize..6).prop_flat_map(|d| (domain(d), prop::collection::vec(0.0..=1.0f64, d)))
    ) {
        let u = UnitPoint::new(u).unwrap();
        let raw = from_unit(&u, &dom).unwrap();
        prop_assert!(dom.contains(&raw));
        let back = to_unit(&raw, &dom).unwrap();
        for (a, b) in u.coords().iter().zip(back.coords()) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn partitions_sum_to_one(d in 1usize..60, eps in 1e-4..0.4999f64) {
        let (c, f, v) = partition_volumes(d, eps).unwrap();
        prop_assert!((c + f + v - 1.0).abs() <= 1e-12);
        prop_assert!(c >= 0.0 && f >= -1e-12 && v >= 0.0);
    }

    #[test]
    fn boundary_distance_in_unit_range(u in prop::collection::vec(0.0..=1.0f64, 1..8)) {
        let v = boundary_distance(&UnitPoint::new(u).unwrap());
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn vertex_setting_places_optimum_at_margin(
        f in prop::sample::select(vec![BenchmarkFunction::Levy, BenchmarkFunction::Ackley, BenchmarkFunction::Griewank]),
        d in 1usize..12,
        eps in 0.01..0.2f64,
    ) {
        let spec = BenchmarkSpec::new(f, d, Setting::Vertex, eps).unwrap();
        let dom = shift_domain(&spec).unwrap();
        let (x_star, _) = f.first_optimum(d).unwrap();
        let u = to_unit(&x_star, &dom).unwrap();
        for c in u.coords() {
            prop_assert!((c - eps).abs() <= 1e-9);
        }
        prop_assert!((boundary_distance(&u) - 2.0 * eps).abs() <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn trajectories_are_monotone_and_in_bounds(
        kind in prop::sample::select(vec![KernelKind::Beta, KernelKind::Rbf, KernelKind::Matern(MaternNu::FiveHalves)]),
        acq in prop::sample::select(vec![AcquisitionKind::Ucb, AcquisitionKind::Ei, AcquisitionKind::Pi]),
        seed in any::<u64>(),
    ) {
        let dom = DomainBox::new(vec![-2.0, 0.0], vec![3.0, 0.5]).unwrap();
        let bb = FnBlackBox::new("bowl", dom.clone(), |x: &[f64]| (x[0] - 1.0).powi(2) + 4.0 * x[1]);
        let mut cfg = BoConfig::new(kind, AcquisitionSpec::with_defaults(acq), 6, seed);
        cfg.n_init = Some(4);
        let t = run_bo(&bb, &cfg).unwrap();
        prop_assert_eq!(t.records.len(), 10);
        let mut best = f64::INFINITY;
        for r in &t.records {
            best = best.min(r.y);
            prop_assert_eq!(r.best, best);
            prop_assert!(r.unit.coords().iter().all(|c| (0.0..=1.0).contains(c)));
            prop_assert!(dom.contains(&r.raw));
        }
    }
}

#[test]
fn identical_config_gives_identical_trajectory() {
    let bb = FnBlackBox::new("sum", DomainBox::unit(3), |x: &[f64]| x.iter().map(|v| (v - 0.7).abs()).sum());
    let cfg = BoConfig::new(KernelKind::Beta, AcquisitionSpec::with_defaults(AcquisitionKind::Ei), 5, 11);
    let a = run_bo(&bb, &cfg).unwrap();
    let b = run_bo(&bb, &cfg).unwrap();
    assert_eq!(a.records, b.records);
    let c = run_bo(&bb, &BoConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.records, c.records);
}
