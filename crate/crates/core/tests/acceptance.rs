//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail.

mod common;

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{array, Array2};
use rand::Rng;

use common::*;
use provclust::affinity::SimilarityMatrix;
use provclust::kmeans::{kmeans, KMeansParams};
use provclust::pipeline::{
    emit, reproduce_paper, run_table, OutputOptions, PipelineConfig, ReproduceOptions,
};
use provclust::report::ShareSummary;
use provclust::selection::{silhouette, sweep_k, KRange, SweepConfig};
use provclust::spectral::{eigendecompose_symmetric, LaplacianVariant};
use provclust::synth;

fn fixture_path() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic_provinces.csv")
}

fn planted_recovery() -> bool {
    let (x, planted) = synth::three_blobs(2024);
    let table = synth::points_table(&x);
    let config = PipelineConfig::new("three_blobs", &["x1", "x2", "x3"]);
    let start = Instant::now();
    let run = run_table(&table, &config).expect("pipeline runs");
    let elapsed = start.elapsed();

    let mut ok = report(
        "1a",
        "planted blobs: eigen-gap chooses k = 3",
        run.selection.chosen_k == 3,
        &format!("chosen_k = {}", run.selection.chosen_k),
    );
    let ari = adjusted_rand_index(&run.clustering.labels, &planted);
    ok &= report(
        "1b",
        "planted blobs: ARI against planted labels = 1.0",
        ari == 1.0,
        &format!("ARI = {ari}"),
    );
    let by_k = &run.selection.silhouette_by_k;
    let s3 = by_k.get(&3).copied().unwrap_or(f64::NAN);
    let others: Vec<(usize, f64)> = [2, 4, 5]
        .iter()
        .map(|k| (*k, by_k.get(k).copied().unwrap_or(f64::NAN)))
        .collect();
    let peak = s3 >= 0.95 && others.iter().all(|&(_, s)| s < s3);
    ok &= report(
        "1c",
        "planted blobs: silhouette >= 0.95 at k = 3, lower at 2, 4, 5",
        peak,
        &format!("s(3) = {s3:.6}, others = {others:?}"),
    );
    ok &= report(
        "1d",
        "planted blobs: runtime < 2 s",
        elapsed < Duration::from_secs(2),
        &format!("{:.3} s", elapsed.as_secs_f64()),
    );
    ok
}

fn eigensolver() -> bool {
    let mut rng = rng(2);
    let mut worst_residual: f64 = 0.0;
    let mut worst_orth: f64 = 0.0;
    let mut recon_ok = true;
    for _ in 0..100 {
        let a = random_symmetric(&mut rng, 50);
        let e = eigendecompose_symmetric(&a).expect("converges");
        let v = e.eigenvectors();
        let residual = max_abs(&(&a - &e.reconstruct()));
        let scale = max_abs(&a).max(1.0);
        recon_ok &= residual <= 1e-8 * scale;
        worst_residual = worst_residual.max(residual / scale);
        let orth = max_abs(&(v.t().dot(v) - Array2::<f64>::eye(50)));
        worst_orth = worst_orth.max(orth);
    }
    let mut ok = report(
        "2a",
        "eigensolver: reconstruction residual <= 1e-8 max(1, |L|max), n = 50 x 100",
        recon_ok,
        &format!("worst scaled residual = {worst_residual:.3e}"),
    );
    ok &= report(
        "2b",
        "eigensolver: orthonormality |V'V - I|max <= 1e-8, n = 50 x 100",
        worst_orth <= 1e-8,
        &format!("worst = {worst_orth:.3e}"),
    );

    let mut worst_root: f64 = 0.0;
    for _ in 0..100 {
        let a = random_symmetric(&mut rng, 3);
        let (b, c, d) = char_poly3(&a);
        let roots = cubic_roots(b, c, d);
        let e = eigendecompose_symmetric(&a).expect("converges");
        for (r, l) in roots.iter().zip(e.eigenvalues()) {
            worst_root = worst_root.max((r - l).abs());
        }
    }
    ok &= report(
        "2c",
        "eigensolver: 3x3 eigenvalues match characteristic polynomial roots within 1e-10",
        worst_root <= 1e-10,
        &format!("worst = {worst_root:.3e}"),
    );
    ok
}

fn silhouette_oracle() -> bool {
    let mut rng = rng(3);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(2..=5);
        let n = rng.random_range(k.max(3)..=40);
        let dim = rng.random_range(1..=4);
        let x = random_points(&mut rng, n, dim);
        let labels: Vec<usize> = (0..n)
            .map(|i| if i < k { i } else { rng.random_range(0..k) })
            .collect();
        let fast = silhouette(x.view(), &labels).expect("silhouette defined");
        let slow = brute_silhouette(x.view(), &labels);
        for (f, s) in fast.values.iter().zip(&slow) {
            worst = worst.max((f - s).abs());
        }
        let mean = slow.iter().sum::<f64>() / n as f64;
        worst = worst.max((fast.mean - mean).abs());
    }
    let mut ok = report(
        "3a",
        "silhouette: production equals brute force within 1e-12 (100 fixtures, n <= 40, 2 <= k <= 5)",
        worst <= 1e-12,
        &format!("worst = {worst:.3e}"),
    );

    let x = array![[0.0], [1.0], [10.0], [11.0]];
    let s = silhouette(x.view(), &[0, 0, 1, 1]).expect("silhouette defined");
    let expected = 0.904116;
    ok &= report(
        "3b",
        "silhouette: worked fixture {0,1|10,11} mean = 0.904116",
        (s.mean - expected).abs() <= 5e-7,
        &format!(
            "mean = {:.6}, s(i) = {:?}; s(0) = {:.6}",
            s.mean,
            s.values
                .iter()
                .map(|v| format!("{v:.6}"))
                .collect::<Vec<_>>(),
            s.values[0]
        ),
    );
    ok
}

fn kmeans_oracle() -> bool {
    let mut rng = rng(4);
    let mut equal = 0;
    let mut below = 0;
    for _ in 0..100 {
        let n = rng.random_range(3..=8);
        let x = random_points(&mut rng, n, 2);
        let optimum = exhaustive_two_means(x.view());
        let params = KMeansParams::new(2).with_restarts(50);
        let result = kmeans(x.view(), &params).expect("k-means runs");
        let tol = 1e-9 * optimum.max(1.0);
        if result.inertia < optimum - tol {
            below += 1;
        } else if result.inertia <= optimum + tol {
            equal += 1;
        }
    }
    report(
        "4",
        "k-means: never below exhaustive optimum, equal on >= 95 of 100",
        below == 0 && equal >= 95,
        &format!("equal = {equal}, below = {below}"),
    )
}

fn eigengap_blocks() -> bool {
    let mut ok = true;
    for b in [2, 3, 5] {
        let s = SimilarityMatrix::from_matrix(block_affinity(b, 4), 1.0).expect("valid affinity");
        let n = s.n();
        let config = SweepConfig::new(LaplacianVariant::SymmetricNormalized);
        let report_b = sweep_k(&s, KRange::default_for(n), &config, None).expect("sweep runs");
        let zeros = report_b
            .eigenvalues
            .iter()
            .filter(|v| v.abs() <= 1e-9)
            .count();
        ok &= report(
            &format!("5/b={b}"),
            "eigen-gap: zero multiplicity = b and chosen_k = b",
            zeros == b && report_b.chosen_k == b,
            &format!("zeros = {zeros}, chosen_k = {}", report_b.chosen_k),
        );
    }
    ok
}

fn rounding() -> bool {
    let pct = |counts: [usize; 3]| -> Vec<u32> {
        let named: Vec<(String, usize)> = ["Low", "Medium", "High"]
            .iter()
            .zip(counts)
            .map(|(n, c)| (n.to_string(), c))
            .collect();
        ShareSummary::from_counts(&named)
            .expect("non-empty")
            .shares
            .iter()
            .map(|s| s.percent)
            .collect()
    };
    let a = pct([34, 27, 20]);
    let b = pct([18, 36, 27]);
    report(
        "6",
        "shares: (34,27,20)/81 = (42,33,25) and (18,36,27)/81 = (22,44,33)",
        a == [42, 33, 25] && b == [22, 44, 33],
        &format!("{a:?}, {b:?}"),
    )
}

fn determinism() -> bool {
    let dir = tempfile::tempdir().expect("tempdir");
    let config = PipelineConfig::new(fixture_path(), &["export", "import"]);
    let mut outputs = Vec::new();
    for run_index in 0..2 {
        let out = dir.path().join(format!("run{run_index}"));
        let run = provclust::run_pipeline(&config).expect("pipeline runs");
        emit(&run, &OutputOptions::new(&out)).expect("emits");
        let files: BTreeMap<&str, Vec<u8>> = ["summary.json", "entities.csv"]
            .into_iter()
            .map(|f| (f, std::fs::read(out.join(f)).expect("written")))
            .collect();
        outputs.push(files);
    }
    report(
        "7",
        "determinism: byte-identical summary.json and entities.csv across runs",
        outputs[0] == outputs[1],
        &format!(
            "summary.json {} bytes, entities.csv {} bytes",
            outputs[0]["summary.json"].len(),
            outputs[0]["entities.csv"].len()
        ),
    )
}

fn reproduce_recipe() -> bool {
    let dir = tempfile::tempdir().expect("tempdir");
    let options = ReproduceOptions {
        adjust_rate: Some(provclust::Rate::Scalar(28.0)),
        ..ReproduceOptions::default()
    };
    let outcome = reproduce_paper(&fixture_path(), dir.path(), &options);
    let detail;
    let pass = match &outcome {
        Ok(summary) => {
            let expected_files = ["entities.csv", "summary.json", "stats.csv", "eigengaps.svg"];
            let complete = summary.analyses.iter().all(|a| {
                expected_files
                    .iter()
                    .all(|f| dir.path().join(&a.analysis).join(f).is_file())
            });
            let shares_ok = summary
                .analyses
                .iter()
                .all(|a| a.shares.iter().map(|s| s.count).sum::<usize>() == summary.entities);
            detail = format!(
                "{} analyses over {} entities, k = {:?}",
                summary.analyses.len(),
                summary.entities,
                summary.analyses.iter().map(|a| a.k).collect::<Vec<_>>()
            );
            complete
                && shares_ok
                && summary.entities == 81
                && summary.analyses.len() == 6
                && dir.path().join("overview.json").is_file()
                && dir.path().join("descriptive_stats.csv").is_file()
        }
        Err(e) => {
            detail = e.to_string();
            false
        }
    };
    report(
        "8",
        "reproduce-paper recipe runs end-to-end on the synthetic 81-row stand-in",
        pass,
        &detail,
    )
}

fn main() {
    let criteria: [fn() -> bool; 8] = [
        planted_recovery,
        eigensolver,
        silhouette_oracle,
        kmeans_oracle,
        eigengap_blocks,
        rounding,
        determinism,
        reproduce_recipe,
    ];
    let mut failed = 0;
    for criterion in criteria {
        if !criterion() {
            failed += 1;
        }
    }
    if failed > 0 {
        println!(
            "acceptance: {failed} of {} criteria groups failed",
            criteria.len()
        );
        std::process::exit(1);
    }
    println!("acceptance: all {} criteria groups passed", criteria.len());
}
