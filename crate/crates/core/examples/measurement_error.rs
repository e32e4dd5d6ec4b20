//! Debias the no-intercept slope with a delta-method variance estimate.

use mnr::rdpg::{curve_hardy_weinberg, sample_rdpg, sample_scenario};
use mnr::regression::{adjusted_estimator, estimate_gamma_delta_method_at, naive_slope, project_rows};
use mnr::spectral::{ase_undirected, procrustes_align};
use mnr::stats::RngStream;

fn main() -> mnr::Result<()> {
    let curve = curve_hardy_weinberg();
    let mut rng = RngStream::new(8, 0);
    let n = 800;
    let (scn, x) = sample_scenario(&curve, n, n, 0.0, 5.0, 0.1, &mut rng)?;
    let a = sample_rdpg(&x, &mut rng)?;
    let aligned = procrustes_align(&ase_undirected(a.as_matrix(), 3)?, &x)?.aligned;
    let t_hat = project_rows(&curve, &aligned);
    let gamma = estimate_gamma_delta_method_at(&aligned, &curve, &t_hat)?;
    println!("true t:   beta = {:.5}", naive_slope(&scn.t, &scn.y)?);
    println!("naive:    beta = {:.5}", naive_slope(&t_hat, &scn.y)?);
    println!("adjusted: beta = {:.5}", adjusted_estimator(&t_hat, &scn.y, &gamma)?);
    Ok(())
}
