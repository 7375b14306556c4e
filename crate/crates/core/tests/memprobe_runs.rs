use ftgap::memprobe::*;
use proptest::prelude::*;

fn small_setup(epochs: usize) -> ProbeSetup {
    let mut s = ProbeSetup::default();
    s.train.epochs = epochs;
    s
}

#[test]
fn gradients_match_finite_differences_for_every_architecture() {
    let data = gaussian_classes(24, 8, 3, 1.5, 4).unwrap();
    let xs: Vec<&[f64]> = data.x.iter().map(|v| v.as_slice()).collect();
    for kind in [ArchKind::Dense, ArchKind::Resex, ArchKind::DenseLs, ArchKind::DenseResidual, ArchKind::DenseStrongreg] {
        let mut arch = ArchConfig::new(kind);
        arch.hidden = (10, 6);
        let mut net = Network::new(&arch, 8, 3, 11).unwrap();
        let err = net.gradient_check(&xs, &data.y, 1e-5);
        assert!(err < 1e-4, "{}: {err}", kind.as_str());
    }
}

#[test]
fn noisy_labels_open_a_gap_for_dense() {
    let data = gaussian_classes(600, 20, 2, 2.0, 42).unwrap();
    let run = run_seed(&ArchConfig::new(ArchKind::Dense), &data, &small_setup(30), 0).unwrap();
    assert!(run.aug_norm > 0.0);
    assert!((run.flipped_fraction - 0.2).abs() < 0.06, "{}", run.flipped_fraction);
    assert!(run.mask_density.is_none());
}

#[test]
fn resex_keeps_its_fixed_branch_sparse() {
    let data = gaussian_classes(120, 20, 2, 2.0, 1).unwrap();
    let run = run_seed(&ArchConfig::resex(0.25), &data, &small_setup(3), 5).unwrap();
    let density = run.mask_density.unwrap();
    assert!((density - 3.0 / 20.0).abs() < 1e-12);
}

#[test]
fn runs_are_reproducible() {
    let data = gaussian_classes(90, 5, 2, 2.0, 3).unwrap();
    let a = run_seed(&ArchConfig::new(ArchKind::DenseLs), &data, &small_setup(4), 8).unwrap();
    let b = run_seed(&ArchConfig::new(ArchKind::DenseLs), &data, &small_setup(4), 8).unwrap();
    assert_eq!(a, b);
    let c = run_seed(&ArchConfig::new(ArchKind::DenseLs), &data, &small_setup(4), 9).unwrap();
    assert_ne!(a.epochs, c.epochs);
}

#[test]
fn dataset_csv_round_trip() {
    let data = gaussian_classes(30, 4, 3, 1.0, 2).unwrap();
    let mut buf = Vec::new();
    data.write_csv(&mut buf).unwrap();
    let back = Dataset::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.y, data.y);
    for (a, b) in back.x.iter().flatten().zip(data.x.iter().flatten()) {
        assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0));
    }
    let mut again = Vec::new();
    back.write_csv(&mut again).unwrap();
    assert_eq!(buf, again);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn noise_touches_only_the_expected_share(n in 200usize..1500, rate in 0.0f64..0.9, seed in 0u64..1000) {
        let labels: Vec<usize> = (0..n).map(|i| i % 4).collect();
        let excl = inject_noise(&labels, 4, &NoiseSpec { rate, mode: NoiseMode::SymmetricExclusive, seed }).unwrap();
        let changed = excl.iter().zip(&labels).filter(|(a, b)| a != b).count() as f64 / n as f64;
        let sd = (rate * (1.0 - rate) / n as f64).sqrt();
        prop_assert!((changed - rate).abs() <= 5.0 * sd + 1e-9, "{} vs {}", changed, rate);
        prop_assert!(excl.iter().all(|&l| l < 4));
        let again = inject_noise(&labels, 4, &NoiseSpec { rate, mode: NoiseMode::SymmetricExclusive, seed }).unwrap();
        prop_assert_eq!(excl, again);
    }
}
