//! Embed noisy line distances with raw-stress minimization.

use mnr::geodesic::DissimilarityMatrix;
use mnr::stats::RngStream;
use mnr::stress::{minimize_raw_stress, MdsOptions};
use nalgebra::DMatrix;

fn main() -> mnr::Result<()> {
    let mut rng = RngStream::new(3, 0);
    let z: Vec<f64> = (0..15).map(|i| i as f64 / 14.0).collect();
    let clean = DissimilarityMatrix::from_line(&z);
    let mut noisy = clean.as_matrix().clone();
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            let v = (noisy[(i, j)] + rng.normal(0.0, 0.02)?).abs();
            noisy[(i, j)] = v;
            noisy[(j, i)] = v;
        }
    }
    let d = DissimilarityMatrix::new(DMatrix::from(noisy))?;
    let opts = MdsOptions {
        restarts: 4,
        ..MdsOptions::default()
    };
    let emb = minimize_raw_stress(&d, &opts)?;
    println!(
        "stress {:.3e} after {} iterations (converged: {})",
        emb.final_stress, emb.iterations, emb.converged
    );
    for (truth, fit) in z.iter().zip(&emb.z) {
        println!("{truth:.3} -> {fit:+.4}");
    }
    Ok(())
}
