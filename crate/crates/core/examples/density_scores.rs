//! K-nearest-neighbor radii, log-densities and Gaussian density scores on a
//! small 2-d cloud with one dense and one sparse region.

use ndarray::Array2;
use subzerocore::density::{ball_count, density_scores, knn_radii, log_density, LogDensity};
use subzerocore::pairwise_distances;
use subzerocore::synthetic::normal_cloud;

fn main() -> subzerocore::Result<()> {
    let dense = normal_cloud(12, 2, 1) * 0.2;
    let sparse = normal_cloud(6, 2, 2) * 1.5 + 4.0;
    let mut rows = Array2::zeros((18, 2));
    rows.slice_mut(ndarray::s![..12, ..]).assign(&dense);
    rows.slice_mut(ndarray::s![12.., ..]).assign(&sparse);

    let dist = pairwise_distances(rows.view())?;
    let k = 3;
    let radii = knn_radii(&dist, k)?;
    let (stats, scores) = density_scores(&radii)?;
    println!("K={k} mu={:.4} sigma={:.4}", stats.mu, stats.sigma);
    println!("row   radius  log-density  score");
    for (i, (&r, &s)) in radii.radii.iter().zip(&scores.scores).enumerate() {
        let log = match log_density(ball_count(&dist, i, r), r, 2)? {
            LogDensity::Finite(v) => format!("{v:>11.4}"),
            LogDensity::Infinite => format!("{:>11}", "inf"),
        };
        println!("{i:>3} {r:>8.4} {log} {s:>6.4}");
    }
    Ok(())
}
