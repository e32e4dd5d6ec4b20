//! Estimate regression parameters from projections onto a known curve.

use mnr::rdpg::{curve_hardy_weinberg, sample_rdpg, sample_scenario};
use mnr::regression::{est_known_manifold, ols_fit};
use mnr::spectral::{ase_undirected, procrustes_align};
use mnr::stats::RngStream;

fn main() -> mnr::Result<()> {
    let curve = curve_hardy_weinberg();
    let mut rng = RngStream::new(4, 0);
    let n = 1000;
    let (scn, x) = sample_scenario(&curve, n, n, 2.0, 5.0, 0.1, &mut rng)?;
    let a = sample_rdpg(&x, &mut rng)?;
    let w = procrustes_align(&ase_undirected(a.as_matrix(), 3)?, &x)?.rotation;
    let est = est_known_manifold(a.as_matrix(), &w, 3, &curve, &scn.y)?;
    let truth = ols_fit(&scn.t, &scn.y)?;
    println!("true regressors:      alpha = {:.4}, beta = {:.4}", truth.alpha_hat, truth.beta_hat);
    println!("estimated regressors: alpha = {:.4}, beta = {:.4}", est.alpha_sub, est.beta_sub);
    Ok(())
}
