//! Replay generation, labeling, and reintegration on the planted toy stream.

mod common;

use common::{class_images, encode, toy, trained};
use r2r_core::gmm::{fit_gmm_with, GmmOptions};
use r2r_core::replay::{
    generate_decoder_replay, label_cluster, reintegrate, LabelMethod, MockScorer, ReplayBackend, SyntheticStore,
    TrainingPool,
};
use r2r_core::replay::{DecoderBackend, GenerateRequest};

#[test]
fn decoder_replay_round_trips_to_the_source_cluster() {
    let per_class = 60;
    let ds = toy(2, per_class, 0.1);
    let params = trained(ds.images(), 4, 100);
    let latents = encode(&params, ds.images());
    let model = fit_gmm_with(&latents, &GmmOptions { restarts: 3, ..GmmOptions::new(2, 1) }).unwrap().model;
    for k in 0..2 {
        let batch = generate_decoder_replay(&model, k, &params, 100, 40 + k as u64).unwrap();
        let images: Vec<_> = batch.samples.iter().map(|s| s.image.clone()).collect();
        let back = model.assign_batch(&encode(&params, &images)).unwrap().clusters;
        let hits = back.iter().filter(|&&c| c == k).count();
        assert!(hits >= 80, "cluster {k}: {hits}/100 re-assigned to source");
    }
}

#[test]
fn mock_scorer_names_the_dark_class() {
    let per_class = 20;
    let ds = toy(2, per_class, 0.1);
    let reps = &class_images(&ds, per_class, 0)[..10];
    let cands = vec!["zeros".to_string(), "stripes".to_string()];
    let label = label_cluster(reps, &cands, Some(&MockScorer), 0).unwrap();
    assert_eq!(label.token, "zeros");
    assert_eq!(label.method, LabelMethod::Vlm);
    let bright = &class_images(&ds, per_class, 1)[..10];
    assert_eq!(label_cluster(bright, &cands, Some(&MockScorer), 1).unwrap().token, "stripes");
}

#[test]
fn decoder_backend_counts_calls_and_feeds_the_pool_and_store() {
    let per_class = 30;
    let ds = toy(2, per_class, 0.1);
    let params = trained(ds.images(), 4, 5);
    let latents = encode(&params, ds.images());
    let model = fit_gmm_with(&latents, &GmmOptions::new(2, 0)).unwrap().model;
    let mut backend = DecoderBackend::new(&model, &params);
    let req = |cluster, label: &str| GenerateRequest { cluster, label: label.into(), count: 7, seed: 3, task: 1 };
    let a = backend.generate(&req(0, "zeros")).unwrap();
    let b = backend.generate(&req(1, "stripes")).unwrap();
    assert_eq!(backend.calls(), 2);
    assert!(backend.generate(&req(5, "none")).is_err());

    let dir = tempfile::tempdir().unwrap();
    let mut store = SyntheticStore::new(dir.path()).unwrap();
    store.append(&a).unwrap();
    store.append(&b).unwrap();
    assert_eq!(store.entries().len(), 14);
    assert!(dir.path().join("manifest.json").exists());
    assert!(dir.path().join("zeros").read_dir().unwrap().count() == 7);

    let mut pool = TrainingPool::new(ds.shape());
    pool.set_real(class_images(&ds, per_class, 0)).unwrap();
    assert_eq!(reintegrate(a, &mut pool).unwrap(), 7);
    assert_eq!(reintegrate(b, &mut pool).unwrap(), 7);
    let counts = pool.counts();
    assert_eq!((counts.real, counts.synthetic), (per_class, 14));
    assert_eq!(pool.images().len(), per_class + 14);
    assert_eq!(pool.partition("stripes").len(), 7);
}
