//! Recover latent positions on the Hardy-Weinberg curve from one sampled graph.

use mnr::rdpg::{curve_hardy_weinberg, sample_rdpg};
use mnr::spectral::{ase_undirected, procrustes_align};
use mnr::stats::RngStream;

fn main() -> mnr::Result<()> {
    let curve = curve_hardy_weinberg();
    let mut rng = RngStream::new(1, 0);
    for n in [200, 800, 2000] {
        let t: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
        let x = curve.latent_positions(&t)?;
        let a = sample_rdpg(&x, &mut rng)?;
        let xhat = ase_undirected(a.as_matrix(), 3)?;
        let aligned = procrustes_align(&xhat, &x)?.aligned;
        let err = (aligned.as_matrix() - x.as_matrix()).norm() / (n as f64).sqrt();
        println!("n = {n:5}  edges = {:7}  rms row error = {err:.4}", a.edge_count());
    }
    Ok(())
}
