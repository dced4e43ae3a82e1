use deup::acquisition::expected_improvement;
use deup::benchmarks::{NoiseProfile, Oracle};
use deup::data::{Dataset, InputPoint, LabeledExample};
use deup::deup::{
    deup_fixed_train, replicate_groups, replicate_target, AleatoricEstimator, DeupSettings, FeatureLayout, FeatureSpec,
};
use deup::models::{ensemble_variance, GpConfig, Learner, MlpConfig};
use deup::rng::RngStream;
use deup::stats::{mean, sample_variance, spearman, standard_error};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn expected_improvement_matches_monte_carlo() {
    let mut rng = RngStream::new(10, "ei-mc");
    for case in 0..6 {
        let m: f64 = rng.gen_range(-2.0..2.0);
        let s: f64 = rng.gen_range(0.1..2.0);
        let best: f64 = rng.gen_range(-2.0..2.0);
        let xi = if case % 2 == 0 { 0.0 } else { 0.01 };
        let gains: Vec<f64> = (0..1_000_000)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (m + s * z - best - xi).max(0.0)
            })
            .collect();
        let (mc, se) = (mean(&gains), standard_error(&gains));
        let ei = expected_improvement(m, s * s, best, xi);
        assert!((ei - mc).abs() <= 3.0 * se, "case {case}: closed {ei} vs mc {mc} ± {se}");
    }
    assert!((expected_improvement(0.3, 1.0, 0.3, 0.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
}

#[test]
fn ensemble_variance_grows_far_from_data() {
    let learner = Learner::Mlp(MlpConfig { hidden: vec![32, 32], epochs: 200, ..MlpConfig::default() });
    let mut rng = RngStream::new(11, "ensemble");
    let mut larger = 0;
    for trial in 0..50 {
        let xs: Vec<Vec<f64>> = (0..6).map(|_| vec![rng.gen_range(0.0..1.0)]).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (5.0 * x[0]).sin() + 0.1 * rng.gen::<f64>()).collect();
        let d = Dataset::from_xy(&xs, &ys).unwrap();
        let stream = rng.substream(format!("members-{trial}"));
        let inside = ensemble_variance(&learner, &d, &InputPoint::scalar(0.5).unwrap(), 5, &stream).unwrap();
        let far = ensemble_variance(&learner, &d, &InputPoint::scalar(10.0).unwrap(), 5, &stream).unwrap();
        larger += usize::from(far > inside);
    }
    assert!(larger >= 45, "far variance larger on only {larger}/50 datasets");
}

fn truth(x: f64) -> f64 {
    (4.0 * x).sin() + 0.3 * x * x
}

fn labeled(rng: &mut RngStream, n: usize, lo: f64, hi: f64) -> Dataset {
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen_range(lo..hi)]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| truth(x[0])).collect();
    Dataset::from_xy(&xs, &ys).unwrap()
}

#[test]
fn fixed_train_ranks_held_out_errors() {
    let mut rng = RngStream::new(12, "fixed-train");
    let train = labeled(&mut rng, 12, -1.0, 1.0);
    let held_out = labeled(&mut rng, 12, -3.0, 3.0);
    let settings = DeupSettings::new(Learner::Gp(GpConfig::default()), FeatureSpec::new(FeatureLayout::variance_only()));
    let fitted = deup_fixed_train(&train, &held_out, &settings, AleatoricEstimator::zero(), &rng.substream("deup")).unwrap();
    let grid: Vec<f64> = (0..=120).map(|i| -3.0 + 0.05 * i as f64).collect();
    let u: Vec<f64> = grid.iter().map(|&x| fitted.model.total_uncertainty(&InputPoint::scalar(x).unwrap())).collect();
    let err: Vec<f64> = grid.iter().map(|&x| (fitted.model.mean(&[x]) - truth(x)).powi(2)).collect();
    let rho = spearman(&u, &err);
    assert!(rho >= 0.8, "spearman {rho}");
}

#[test]
fn epistemic_vanishes_at_noiseless_training_points() {
    let xs: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 * 0.25]).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x[0] - 1.0).collect();
    let train = Dataset::from_xy(&xs, &ys).unwrap();
    let oos = Dataset::from_xy(&[vec![2.5], vec![3.0], vec![-0.5]], &[6.5, 8.0, -2.5]).unwrap();
    let gp = GpConfig { fixed_noise_variance: Some(1e-6), ..GpConfig::default() };
    let settings = DeupSettings::new(Learner::Gp(gp), FeatureSpec::new(FeatureLayout::variance_only()));
    let fitted = deup_fixed_train(&train, &oos, &settings, AleatoricEstimator::zero(), &RngStream::new(13, "lin")).unwrap();
    for x in &xs {
        let e = fitted.model.epistemic(&InputPoint::new(x.clone()).unwrap());
        assert!(e <= 1e-4, "epistemic {e} at {x:?}");
    }
}

#[test]
fn replicate_targets_are_unbiased() {
    let oracle = Oracle::synth1d().with_noise(NoiseProfile::Constant(0.5)).unwrap();
    let mut design = RngStream::new(14, "design");
    let mut noise = RngStream::new(14, "noise");
    let mut d = Dataset::new();
    for g in 0..500u64 {
        let x = oracle.domain().sample_point(&mut design);
        for y in oracle.sample(&x, &mut noise, 5).unwrap() {
            d.push(LabeledExample::new(x.clone(), y).unwrap().with_replicate(g)).unwrap();
        }
    }
    let groups = replicate_groups(&d);
    assert_eq!(groups.len(), 500);
    let targets: Vec<f64> = groups.iter().map(|g| replicate_target(&g.outcomes).unwrap()).collect();
    let m = mean(&targets);
    assert!((0.2375..=0.2625).contains(&m), "mean replicate target {m}");
}

#[test]
fn constant_noise_has_the_stated_variance() {
    let oracle = Oracle::synth1d().with_noise(NoiseProfile::Constant(0.5)).unwrap();
    let draws = oracle.sample(&InputPoint::scalar(0.3).unwrap(), &mut RngStream::new(15, "draws"), 100_000).unwrap();
    let v = sample_variance(&draws);
    assert!((0.2375..=0.2625).contains(&v), "variance {v}");
}
