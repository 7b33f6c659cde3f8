use rand::Rng;
use rand_distr::{Distribution, Normal};
use upriv::applications::{
    private_triangle_density, sample_multinomial, sample_rgg, uniformity_test, CollisionSource, PerturbedUniform,
};
use upriv::coinpress::{all_tuples_estimator, naive_estimator, subsampled_estimator, CoinPressConfig};
use upriv::dp::PrivacyBudget;
use upriv::hajek::{
    degenerate_xi, private_mean_local_hajek, subgaussian_pipeline, HajekParams, MaterializedSource, PipelineConfig,
};
use upriv::rng::seeded;
use upriv::ustat::{all_tuples, Dataset, FnKernel};

fn gaussian(n: usize, mean: f64, seed: u64) -> Dataset<f64> {
    let normal = Normal::new(mean, 1.0).unwrap();
    let mut rng = seeded(seed);
    Dataset::new((0..n).map(|_| normal.sample(&mut rng)).collect())
}

#[test]
fn every_pipeline_spends_exactly_its_declared_budget() {
    let h = FnKernel::sub_gaussian(2, 1.0, |a: &[&f64]| (a[0] + a[1]) / 2.0);
    let cfg = CoinPressConfig::default();
    let mut rng = seeded(1);
    for trial in 0..8u64 {
        let eps = rng.random_range(0.2..3.0);
        let n = rng.random_range(60..200);
        let d = gaussian(n, 0.5, trial);

        let mut b = PrivacyBudget::new(eps).unwrap();
        naive_estimator(&h, &d, 10.0, 1.0, eps, &cfg, &mut b, &mut rng).unwrap();
        assert!((b.spent() - eps).abs() <= 1e-12 * eps, "naive: {b}");

        let mut b = PrivacyBudget::new(eps).unwrap();
        all_tuples_estimator(&h, &d, 10.0, 1.0, eps, &cfg, &mut b, &mut rng).unwrap();
        assert!((b.spent() - eps).abs() <= 1e-12 * eps, "all tuples: {b}");

        let mut b = PrivacyBudget::new(eps).unwrap();
        subsampled_estimator(&h, &d, 10.0, 1.0, eps, 4 * n, &cfg, &mut b, &mut rng).unwrap();
        assert!((b.spent() - eps).abs() <= 1e-12 * eps, "subsampled: {b}");

        let mut b = PrivacyBudget::new(eps).unwrap();
        subgaussian_pipeline(&h, &d, 10.0, 1.0, eps, 0.05, &PipelineConfig::default(), &mut b, &mut rng).unwrap();
        assert!((b.spent() - eps).abs() <= 1e-12 * eps, "sub-Gaussian pipeline: {b}");

        let g = sample_rgg(n, 0.6, &mut rng).unwrap();
        let mut b = PrivacyBudget::new(2.0 * eps).unwrap();
        private_triangle_density::<f64, _>(&g, eps, &mut b, &mut rng).unwrap();
        assert!((b.spent() - 2.0 * eps).abs() <= 1e-12 * eps, "triangles: {b}");
    }
}

#[test]
fn overspending_is_refused() {
    let h = FnKernel::sub_gaussian(1, 1.0, |a: &[&f64]| *a[0]);
    let d = gaussian(100, 0.0, 2);
    let mut b = PrivacyBudget::new(0.5).unwrap();
    let r = naive_estimator(&h, &d, 10.0, 1.0, 1.0, &CoinPressConfig::default(), &mut b, &mut seeded(0));
    assert!(r.is_err());
}

#[test]
fn hajek_on_collision_data_tracks_the_u_statistic() {
    let m = 20;
    let d = sample_multinomial(&PerturbedUniform::uniform(m), 400, &mut seeded(3));
    let src = CollisionSource::<f64>::new(&d).unwrap();
    let xi = degenerate_xi(1.0, 2, 400, 0.01) + 6.0 / m as f64;
    let mut errs = Vec::new();
    for seed in 0..50 {
        let mut b = PrivacyBudget::new(1.0).unwrap();
        let rep = private_mean_local_hajek(&src, &HajekParams::new(1.0, 1.0, xi), &mut b, &mut seeded(seed))
            .unwrap()
            .expect_value("regular");
        errs.push((rep.estimate - 0.05).abs());
    }
    errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert!(errs[25] < 0.05, "median error {}", errs[25]);
}

#[test]
fn single_precision_instantiation() {
    let h = FnKernel::bounded(2, 1.0, |a: &[&u32]| if a[0] == a[1] { 1.0f32 } else { 0.0 });
    let d = sample_multinomial(&PerturbedUniform::uniform(5), 60, &mut seeded(4));
    let f = all_tuples(60, 2).unwrap();
    let src = MaterializedSource::<f32>::new(&h, &d, &f).unwrap();
    let mut b = PrivacyBudget::new(1.0).unwrap();
    let rep = private_mean_local_hajek(&src, &HajekParams::new(1.0, 1.0f32, 0.5), &mut b, &mut seeded(5))
        .unwrap()
        .expect_value("regular");
    assert!(rep.estimate.is_finite());
    let mut b = PrivacyBudget::new(1.0).unwrap();
    let out = uniformity_test::<f32, _>(&d, 5, 0.5, 1.0, &Default::default(), &mut b, &mut seeded(6)).unwrap();
    assert!(out.value().is_some());
}
