mod common;

use rand::Rng;
use sevq_core::codebook::{
    cluster_samples, disentangle, vclub_contrastive, vclub_estimate, DisentangleConfig,
    DisentangleProblem, VariationalFit, VariationalModel,
};
use sevq_core::synth::standard_normal;
use sevq_core::{Codebook, FeatureMatrix, Partition};

fn estimate(a: &FeatureMatrix, b: &FeatureMatrix) -> (f64, f64) {
    let vm = VariationalModel::fit(a, b, &VariationalFit::default()).unwrap();
    (
        vclub_estimate(a, b, &vm).unwrap(),
        vclub_contrastive(a, b, &vm).unwrap(),
    )
}

#[test]
fn independent_scalar_draws_estimate_near_zero() {
    for seed in 0..20 {
        let a = standard_normal(512, 1, 2 * seed).unwrap();
        let b = standard_normal(512, 1, 2 * seed + 1).unwrap();
        let (printed, contrastive) = estimate(&a, &b);
        assert!(printed.abs() < 0.1, "seed {seed}: {printed}");
        assert!(contrastive.abs() < 0.1, "seed {seed}: {contrastive}");
    }
}

#[test]
fn contrastive_form_stays_near_zero_in_four_dimensions() {
    for seed in 0..20 {
        let a = standard_normal(512, 4, 2 * seed).unwrap();
        let b = standard_normal(512, 4, 2 * seed + 1).unwrap();
        assert!(estimate(&a, &b).1.abs() < 0.1);
    }
}

#[test]
fn duplicated_samples_estimate_positive() {
    for d in [1, 4, 16] {
        let a = standard_normal(512, d, 9).unwrap();
        let (printed, contrastive) = estimate(&a, &a);
        assert!(printed > 0.0);
        assert!(contrastive > 0.0);
    }
}

#[test]
fn dependence_raises_the_estimate() {
    let a = standard_normal(512, 2, 1).unwrap();
    let noise = standard_normal(512, 2, 2).unwrap();
    let weak: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(noise.as_slice())
        .map(|(x, n)| 0.3 * x + n)
        .collect();
    let strong: Vec<f64> = a
        .as_slice()
        .iter()
        .zip(noise.as_slice())
        .map(|(x, n)| x + 0.1 * n)
        .collect();
    let weak = FeatureMatrix::new(512, 2, weak).unwrap();
    let strong = FeatureMatrix::new(512, 2, strong).unwrap();
    assert!(estimate(&a, &strong).1 > estimate(&a, &weak).1);
}

fn clustered_problem(seed: u64) -> (Codebook, Vec<FeatureMatrix>) {
    let mut rng = common::rng(seed);
    let centers = [[2.0, 0.0, 0.5], [0.0, 2.0, -0.5], [-1.0, -1.0, 1.5]];
    let mut samples = Vec::new();
    let mut means = Vec::new();
    for c in centers {
        let data: Vec<f64> = (0..40)
            .flat_map(|_| c.map(|m| m + 0.4 * rng.random_range(-1.0..1.0)))
            .collect();
        let m = FeatureMatrix::new(40, 3, data).unwrap();
        let mean: Vec<f64> = (0..3)
            .map(|d| m.iter_rows().map(|r| r[d]).sum::<f64>() / 40.0)
            .collect();
        means.push(mean);
        samples.push(m);
    }
    let cb = Codebook::new(FeatureMatrix::from_rows(&means).unwrap(), vec![40; 3]).unwrap();
    (cb, samples)
}

#[test]
fn gradient_matches_central_differences() {
    let cfg = DisentangleConfig::default();
    for seed in 0..3 {
        let (cb, samples) = clustered_problem(seed);
        let problem = DisentangleProblem::new(&cb, &samples, cfg.fit).unwrap();
        let models = problem.fit_models(&cb.centroids).unwrap();
        let grad = problem.gradient(&cb.centroids, &models);
        let h = 1e-5;
        let (k, dim) = (cb.len(), cb.dim());
        let mut fd = vec![0.0; k * dim];
        for (i, slot) in fd.iter_mut().enumerate() {
            let shifted = |delta: f64| {
                let mut data = cb.centroids.as_slice().to_vec();
                data[i] += delta;
                FeatureMatrix::new(k, dim, data).unwrap()
            };
            *slot = (problem.objective(&shifted(h), &models)
                - problem.objective(&shifted(-h), &models))
                / (2.0 * h);
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / norm(&grad).max(1e-12);
        assert!(rel < 1e-4, "seed {seed}: relative error {rel}");
    }
}

#[test]
fn identical_clusters_separate() {
    let cloud = standard_normal(64, 4, 3).unwrap();
    let shifted: Vec<f64> = cloud
        .iter_rows()
        .flat_map(|r| {
            r.iter()
                .zip([1.0, 1.0, 0.0, 0.0])
                .map(|(v, m)| 0.3 * v + m)
                .collect::<Vec<_>>()
        })
        .collect();
    let cloud = FeatureMatrix::new(64, 4, shifted).unwrap();
    let mean: Vec<f64> = (0..4)
        .map(|d| cloud.iter_rows().map(|r| r[d]).sum::<f64>() / 64.0)
        .collect();
    let cb = Codebook::new(
        FeatureMatrix::from_rows(&[mean.clone(), mean]).unwrap(),
        vec![64, 64],
    )
    .unwrap();
    let cfg = DisentangleConfig {
        steps: 50,
        ..DisentangleConfig::default()
    };
    let out = disentangle(&cb, &[cloud.clone(), cloud], &cfg).unwrap();
    let a = out.codebook.centroid(0);
    let b = out.codebook.centroid(1);
    let dist: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    assert!(dist > 1e-3, "distance {dist}");
    for w in out.objective_trace.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(out.objective_trace.last() < out.objective_trace.first());
}

#[test]
fn objective_trace_never_rises() {
    let (cb, samples) = clustered_problem(7);
    let out = disentangle(
        &cb,
        &samples,
        &DisentangleConfig {
            steps: 30,
            ..DisentangleConfig::default()
        },
    )
    .unwrap();
    assert!(out.objective_trace.len() >= 2);
    for w in out.objective_trace.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert_eq!(out.codebook.member_counts, cb.member_counts);
}

#[test]
fn nothing_to_do_leaves_codebook_alone() {
    let (cb, samples) = clustered_problem(8);
    let out = disentangle(
        &cb,
        &samples,
        &DisentangleConfig {
            steps: 0,
            ..DisentangleConfig::default()
        },
    )
    .unwrap();
    assert_eq!(out.codebook, cb);
    let single = Codebook::new(cb.centroids.select_rows(&[0]).unwrap(), vec![40]).unwrap();
    let out = disentangle(&single, &samples[..1], &DisentangleConfig::default()).unwrap();
    assert_eq!(out.codebook, single);
}

#[test]
fn member_sampling_is_capped_and_seeded() {
    let x = standard_normal(100, 2, 4).unwrap();
    let g = sevq_core::FeatureGraph::from_edges(100, &[]).unwrap();
    let p = Partition::from_clusters(&g, vec![(0..70).collect(), (70..100).collect()]).unwrap();
    let mut r1 = sevq_core::rng::stream(5, 1);
    let mut r2 = sevq_core::rng::stream(5, 1);
    let a = cluster_samples(&x, &p, 32, &mut r1).unwrap();
    let b = cluster_samples(&x, &p, 32, &mut r2).unwrap();
    assert_eq!(a, b);
    assert_eq!((a[0].rows(), a[1].rows()), (32, 30));
}
