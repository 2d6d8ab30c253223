//! End-to-end behavior on generated data.

use cnmbi_core::boundary::{boundary_degree, core_subset};
use cnmbi_core::datasets::{
    generate_blobs, generate_mixture, generate_noisy_blobs, generate_scenario, BlobSpec, ScenarioFamily, NOISE_LABEL,
};
use cnmbi_core::partition::kmeans;
use cnmbi_core::{
    density_centers, density_profile, estimate, run_trials, Dataset32, Dataset64, DistanceIndex64, KMeansConfig,
    SweepConfig,
};

fn three_blobs(per: usize, spread: f64, seed: u64) -> (Dataset64, Vec<Vec<f64>>) {
    let centers = vec![vec![0.0, 0.0], vec![8.0, 0.0], vec![4.0, 7.0]];
    let specs: Vec<BlobSpec> = centers.iter().map(|c| BlobSpec { center: c.clone(), spread, count: per }).collect();
    (generate_mixture(&specs, "three", seed).unwrap(), centers)
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> usize {
    let d2 = |c: &Vec<f64>| c.iter().zip(point).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    (0..centers.len()).min_by(|&a, &b| d2(&centers[a]).total_cmp(&d2(&centers[b]))).unwrap()
}

#[test]
fn dc_is_second_percentile_of_sorted_pairs() {
    let data: Dataset64 = generate_blobs(3, 100, 2, 0.5, 6.0, 4).unwrap();
    let mut pairs = Vec::new();
    for i in 0..data.n() {
        for j in i + 1..data.n() {
            let d: f64 = data.row(i).iter().zip(data.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            pairs.push(d.sqrt());
        }
    }
    pairs.sort_by(f64::total_cmp);
    let position = (0.02 * pairs.len() as f64).ceil() as usize;
    assert_eq!(DistanceIndex64::build(&data, 0.02).unwrap().dc(), pairs[position - 1]);
}

#[test]
fn density_centers_land_in_distinct_blobs() {
    let (data, centers) = three_blobs(100, 0.7, 1);
    let profile = density_profile(&DistanceIndex64::build(&data, 0.02).unwrap());
    let picked = density_centers(&profile, &data, 3).unwrap();
    let mut blobs: Vec<usize> = picked.centers().iter().map(|c| nearest(c, &centers)).collect();
    blobs.sort();
    assert_eq!(blobs, vec![0, 1, 2]);
}

#[test]
fn kmeans_recovers_generator_means() {
    let (per, spread) = (100, 0.7);
    let (data, centers) = three_blobs(per, spread, 2);
    let fit = kmeans(&data, 3, &KMeansConfig::default(), 9).unwrap();
    let bound = 3.0 * spread / (per as f64).sqrt();
    for c in fit.centers.centers() {
        let g = &centers[nearest(c, &centers)];
        let dist = c.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        assert!(dist < bound, "{dist} >= {bound}");
    }
}

#[test]
fn kmeans_is_deterministic() {
    let (data, _) = three_blobs(60, 1.0, 3);
    let cfg = KMeansConfig::default();
    assert_eq!(kmeans(&data, 4, &cfg, 5).unwrap(), kmeans(&data, 4, &cfg, 5).unwrap());
}

#[test]
fn outer_points_have_larger_boundary_degree() {
    let spec = [BlobSpec { center: vec![0.0, 0.0], spread: 1.0, count: 400 }];
    let data: Dataset64 = generate_mixture(&spec, "single", 7).unwrap();
    let index = DistanceIndex64::build(&data, 0.02).unwrap();
    let phi = boundary_degree(&data, &index).unwrap().phi;
    let mean: Vec<f64> = (0..2).map(|j| data.column(j).sum() / data.n() as f64).collect();
    let mut by_radius: Vec<usize> = (0..data.n()).collect();
    let radius = |i: usize| data.row(i).iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    by_radius.sort_by(|&a, &b| radius(a).total_cmp(&radius(b)));
    let avg = |idx: &[usize]| idx.iter().map(|&i| phi[i]).sum::<f64>() / idx.len() as f64;
    let n = data.n();
    // Isolated outer points score +inf, which only strengthens the inequality.
    assert!(avg(&by_radius[n - n / 10..]) > avg(&by_radius[..n / 2]));
}

#[test]
fn filtering_prefers_noise() {
    let specs: Vec<BlobSpec> = [[0.0, 0.0], [10.0, 0.0], [5.0, 8.0]]
        .iter()
        .map(|c| BlobSpec { center: c.to_vec(), spread: 1.0, count: 200 })
        .collect();
    for seed in 0..3 {
        let data: Dataset64 = generate_noisy_blobs(&specs, 0.2, 0.2, "noisy", seed).unwrap();
        let index = DistanceIndex64::build(&data, 0.02).unwrap();
        let scores = boundary_degree(&data, &index).unwrap();
        let (_, profile) = core_subset(&data, &scores, 0.10).unwrap();
        let removed = profile.removed_indices();
        let labels = data.labels().unwrap();
        let noise = removed.iter().filter(|&&i| labels[i] == NOISE_LABEL).count();
        assert_eq!(removed.len(), data.n() / 10);
        assert!(noise as f64 >= 0.7 * removed.len() as f64, "{noise}/{}", removed.len());
    }
}

#[test]
fn three_blobs_estimate_three() {
    let data: Dataset64 = generate_blobs(3, 100, 2, 0.5, 6.0, 0).unwrap();
    let report = estimate(&data, &SweepConfig { k_max: Some(6), ..SweepConfig::default() }).unwrap();
    assert_eq!(report.k_star, 3);
    let l3 = report.loss_at(3).unwrap();
    assert!(l3 < report.loss_at(2).unwrap() && l3 < report.loss_at(5).unwrap());
    assert_eq!(report.losses.len(), 5);
    assert_eq!(report.n_core, 270);
}

#[test]
fn count_scenario_level_ten() {
    let data: Dataset64 = generate_scenario(ScenarioFamily::Count, 10, 11).unwrap();
    assert_eq!(estimate(&data, &SweepConfig::default()).unwrap().k_star, 10);
}

#[test]
fn losses_agree_with_details() {
    let data: Dataset64 = generate_blobs(4, 40, 3, 1.0, 6.0, 2).unwrap();
    let report = estimate(&data, &SweepConfig::default()).unwrap();
    assert_eq!(report.details.len(), report.losses.len());
    for (detail, entry) in report.details.iter().zip(&report.losses) {
        assert_eq!(detail.k, entry.k);
        let recomputed: f64 = detail
            .assignment
            .iter()
            .enumerate()
            .map(|(p, &q)| {
                detail.mean_centers[p]
                    .iter()
                    .zip(&detail.reference_centers[q])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
            })
            .sum::<f64>()
            / detail.k as f64;
        assert!((recomputed - entry.loss).abs() <= 1e-9 * entry.loss.max(1.0));
    }
    let min = report.losses.iter().map(|l| l.loss).fold(f64::INFINITY, f64::min);
    assert_eq!(report.loss_at(report.k_star), Some(min));
}

#[test]
fn disabled_filter_equals_zero_lambda() {
    let data: Dataset64 = generate_blobs(3, 50, 2, 0.8, 6.0, 5).unwrap();
    let off = SweepConfig { filtering_enabled: false, lambda: 0.3, seed: 4, ..SweepConfig::default() };
    let zero = SweepConfig { lambda: 0.0, seed: 4, ..SweepConfig::default() };
    let a = estimate(&data, &off).unwrap();
    let b = estimate(&data, &zero).unwrap();
    assert_eq!(a.losses, b.losses);
    assert_eq!(a.details, b.details);
    assert_eq!(a.k_star, b.k_star);
}

#[test]
fn estimate_is_deterministic() {
    let data: Dataset64 = generate_blobs(3, 60, 2, 1.0, 6.0, 8).unwrap();
    let cfg = SweepConfig { seed: 17, ..SweepConfig::default() };
    let a = serde_json::to_string(&estimate(&data, &cfg).unwrap()).unwrap();
    let b = serde_json::to_string(&estimate(&data, &cfg).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_precision_pipeline() {
    let data: Dataset32 = generate_blobs(3, 80, 2, 0.5, 6.0, 1).unwrap();
    assert_eq!(estimate(&data, &SweepConfig::default()).unwrap().k_star, 3);
}

#[test]
fn trials_report_shape() {
    let data: Dataset64 = generate_blobs(3, 40, 2, 0.5, 6.0, 3).unwrap();
    let one = run_trials(&data, &SweepConfig::default(), 1).unwrap();
    assert!(matches!(one.acc, Some(a) if a == 0.0 || a == 1.0));
    let unlabeled = Dataset64::new(data.points().clone(), None, "bare").unwrap();
    let bare = run_trials(&unlabeled, &SweepConfig::default(), 3).unwrap();
    assert_eq!(bare.acc, None);
    assert_eq!(bare.k_stars.len(), 3);
}

#[test]
fn scenario_recipes() {
    let noise: Dataset64 = generate_scenario(ScenarioFamily::Noise, 50, 3).unwrap();
    let labels = noise.labels().unwrap();
    let share = labels.iter().filter(|&&l| l == NOISE_LABEL).count() as f64 / labels.len() as f64;
    assert_eq!(noise.true_k(), Some(2));
    assert!((share - 0.5).abs() < 1e-9);

    let density: Dataset64 = generate_scenario(ScenarioFamily::Density, 4, 3).unwrap();
    let mut sizes = [0usize; 8];
    for &l in density.labels().unwrap() {
        sizes[l as usize] += 1;
    }
    assert_eq!(density.true_k(), Some(8));
    assert!(*sizes.iter().max().unwrap() as f64 / *sizes.iter().min().unwrap() as f64 >= 8.0);
}
