//! Seeded synthetic datasets: planted Gaussian blobs and an 81-row trade
//! table stand-in.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal};

use crate::dataset::{Column, IndicatorTable};

/// Vertices of a regular simplex-like triangle in 3-D, pairwise 10√2 apart.
pub const THREE_BLOB_CENTERS: [[f64; 3]; 3] =
    [[0.0, 0.0, 0.0], [10.0, 10.0, 0.0], [0.0, 10.0, 10.0]];

/// `per_blob` points around each center with isotropic sd `sd`, blob by blob.
/// Returns the points and the planted labels (index of the center).
pub fn planted_blobs(
    centers: &[Vec<f64>],
    per_blob: usize,
    sd: f64,
    seed: u64,
) -> (Array2<f64>, Vec<usize>) {
    let dim = centers.first().map_or(0, Vec::len);
    assert!(
        centers.iter().all(|c| c.len() == dim),
        "centers must share a dimension"
    );
    let noise = Normal::new(0.0, sd).expect("sd must be finite and non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = centers.len() * per_blob;
    let mut x = Array2::zeros((n, dim));
    let mut labels = Vec::with_capacity(n);
    for (b, c) in centers.iter().enumerate() {
        for i in 0..per_blob {
            let row = b * per_blob + i;
            for (j, &cj) in c.iter().enumerate() {
                x[[row, j]] = cj + noise.sample(&mut rng);
            }
            labels.push(b);
        }
    }
    (x, labels)
}

/// 81 points, 27 around each of [`THREE_BLOB_CENTERS`] with sd 0.1.
pub fn three_blobs(seed: u64) -> (Array2<f64>, Vec<usize>) {
    let centers: Vec<Vec<f64>> = THREE_BLOB_CENTERS.iter().map(|c| c.to_vec()).collect();
    planted_blobs(&centers, 27, 0.1, seed)
}

/// Wraps a point matrix as a table with ids `e001…` and columns `x1…xd`.
pub fn points_table(x: &Array2<f64>) -> IndicatorTable {
    let width = x.nrows().to_string().len().max(3);
    let ids = (1..=x.nrows()).map(|i| format!("e{i:0width$}")).collect();
    let columns = x
        .columns()
        .into_iter()
        .enumerate()
        .map(|(j, col)| Column::observed(format!("x{}", j + 1), &col.to_vec()))
        .collect();
    IndicatorTable::new(ids, columns).expect("generated table is valid")
}

/// Synthetic trade table with `entity_id,export,import,net_export`.
///
/// Values are whole thousands of dollars drawn from a heavy-tailed lognormal,
/// with `net_export = export − import`. The import of entity 7 is missing, so
/// its net export is missing too.
pub fn trade_table(n: usize, seed: u64) -> IndicatorTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = LogNormal::<f64>::new(12.5, 1.6).expect("valid lognormal");
    let mut export = Vec::with_capacity(n);
    let mut import = Vec::with_capacity(n);
    let mut net = Vec::with_capacity(n);
    for i in 0..n {
        let e: f64 = size.sample(&mut rng);
        let e = e.round();
        let ratio: f64 = rng.random_range(0.4..1.8);
        let m = (e * ratio).round();
        export.push(Some(e));
        if i == 6 {
            import.push(None);
            net.push(None);
        } else {
            import.push(Some(m));
            net.push(Some(e - m));
        }
    }
    let ids = (1..=n).map(|i| format!("P{i:02}")).collect();
    IndicatorTable::new(
        ids,
        vec![
            Column::new("export", export),
            Column::new("import", import),
            Column::new("net_export", net),
        ],
    )
    .expect("generated table is valid")
}
