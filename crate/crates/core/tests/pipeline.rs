use navcbn_core::cbn::CbnModel;
use navcbn_core::counterfactual::{search_from_sample, SearchConfig, SearchOutcome};
use navcbn_core::discretization::{default_specs, fit_discretization};
use navcbn_core::evaluation::{binary_metrics, loocv, F1Mode};
use navcbn_core::exec::Execution;
use navcbn_core::features::{compute_all, FeatureSample, TotalRotationMode};
use navcbn_core::pipeline::{discretize, fit_model, predict_features, FitConfig, ModelBundle};
use navcbn_core::synthdata::{generate_raw, GeneratorConfig, NoiseConfig};
use navcbn_core::variables::{Cardinalities, Target};
use proptest::prelude::*;

fn features(participants: usize, per: usize, noise: NoiseConfig, label_noise: f64, seed: u64) -> Vec<FeatureSample> {
    let cfg = GeneratorConfig {
        participants,
        samples_per_participant: per,
        noise,
        label_noise,
        seed,
        ..Default::default()
    };
    compute_all(&generate_raw(&cfg, Execution::Parallel).unwrap(), TotalRotationMode::AsWritten).unwrap()
}

#[test]
fn noiseless_oracle_labels_are_learnable() {
    let train = features(20, 30, NoiseConfig::NONE, 0.0, 11);
    let test = features(20, 30, NoiseConfig::NONE, 0.0, 12);
    let model = fit_model(&train, &FitConfig::default()).unwrap();
    let (mut hit_c, mut hit_i) = (0, 0);
    for f in &test {
        let p = predict_features(&model, f).unwrap();
        hit_c += usize::from(p.competence == f.competence);
        hit_i += usize::from(p.intention == f.intention);
    }
    let n = test.len() as f64;
    assert!(hit_c as f64 / n >= 0.95, "competence accuracy {}", hit_c as f64 / n);
    assert!(hit_i as f64 / n >= 0.95, "intention accuracy {}", hit_i as f64 / n);
}

#[test]
fn every_cpt_row_is_a_distribution() {
    let data = features(6, 30, NoiseConfig::default(), 0.05, 3);
    let model = fit_model(&data, &FitConfig::default()).unwrap();
    for t in &model.tables {
        let mut u = vec![0usize; t.parents.len()];
        'rows: loop {
            let sum: f64 = t.distribution(&u).iter().sum();
            assert!((sum - 1.0).abs() <= 1e-12, "`{}` row {u:?} sums to {sum}", t.node);
            for i in 0..u.len() {
                u[i] += 1;
                if u[i] < t.parent_cardinalities[i] {
                    continue 'rows;
                }
                u[i] = 0;
            }
            break;
        }
    }
}

#[test]
fn discretization_is_bit_deterministic() {
    let data = features(6, 30, NoiseConfig::default(), 0.05, 4);
    let specs = default_specs(&Cardinalities::default());
    let a = serde_json::to_string(&fit_discretization(&data, &specs, 9).unwrap()).unwrap();
    let b = serde_json::to_string(&fit_discretization(&data, &specs, 9).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn loocv_report_is_reproducible_across_execution_modes() {
    let data = features(5, 24, NoiseConfig::default(), 0.05, 6);
    let cfg = FitConfig::default();
    let par = loocv(&data, &cfg, F1Mode::MacroClass, Execution::Parallel).unwrap();
    let seq = loocv(&data, &cfg, F1Mode::MacroClass, Execution::Sequential).unwrap();
    assert_eq!(serde_json::to_string(&par).unwrap(), serde_json::to_string(&seq).unwrap());
}

#[test]
fn bundle_file_round_trip_and_search() {
    let data = features(20, 30, NoiseConfig::default(), 0.05, 7);
    let search = SearchConfig {
        epsilon: 0.75,
        ..Default::default()
    };
    let bundle = ModelBundle::fit(&data, FitConfig::default(), search).unwrap();
    let dir = std::env::temp_dir().join(format!("navcbn-bundle-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.json");
    std::fs::write(&path, bundle.to_json().unwrap()).unwrap();
    let loaded = ModelBundle::load(&path).unwrap();
    std::fs::remove_dir_all(&dir).unwrap();
    assert_eq!(loaded, bundle);

    let model: &CbnModel = &loaded.model;
    let mut found = 0;
    for f in data.iter().filter(|f| f.competence == 0).take(40) {
        let sample = discretize(model, f).unwrap();
        if let SearchOutcome::Found(sol) = search_from_sample(model, &sample, Target::Competence, &loaded.search).unwrap() {
            let t = model.table("competence").unwrap();
            assert!(t.count(&sol.solution) > loaded.search.min_count);
            assert!(t.prob(1, &sol.solution) > loaded.search.epsilon);
            found += 1;
        }
    }
    assert!(found > 0);
}

proptest! {
    #[test]
    fn metrics_ignore_sample_order(
        pairs in prop::collection::vec((0u8..2, 0u8..2), 1..200),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(shuffle_seed));
        for mode in [F1Mode::Positive, F1Mode::MacroClass] {
            let split = |v: &[(u8, u8)]| -> (Vec<u8>, Vec<u8>) { v.iter().cloned().unzip() };
            let (t1, p1) = split(&pairs);
            let (t2, p2) = split(&shuffled);
            prop_assert_eq!(binary_metrics(&t1, &p1, mode).unwrap(), binary_metrics(&t2, &p2, mode).unwrap());
        }
    }
}
