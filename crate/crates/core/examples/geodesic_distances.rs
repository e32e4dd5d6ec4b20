//! Shortest paths in a localization graph approximate arc length along the curve.

use mnr::geodesic::{build_localization_graph, connectivity_report, shortest_path_matrix_among};
use mnr::rdpg::ParamCurve;
use mnr::stats::RngStream;

fn main() -> mnr::Result<()> {
    // Quarter circle of radius 0.5 traversed at unit speed.
    let r = 0.5;
    let curve = ParamCurve::new("arc", r * std::f64::consts::FRAC_PI_2, move |t| {
        vec![r * (t / r).cos(), r * (t / r).sin()]
    })?
    .arclength_parameterized()?;
    let mut rng = RngStream::new(2, 0);
    let t: Vec<f64> = (0..400).map(|_| rng.uniform(0.0, curve.length()).unwrap()).collect();
    let x = curve.latent_positions(&t)?;
    for lambda in [0.02, 0.05, 0.2, 2.0] {
        let g = build_localization_graph(&x, lambda)?;
        let comps = connectivity_report(&g);
        let probes = [0, 1, 2, 3];
        match shortest_path_matrix_among(&g, &probes) {
            Ok(d) => {
                let worst = (0..4)
                    .flat_map(|a| ((a + 1)..4).map(move |b| (a, b)))
                    .map(|(a, b)| (d.get(a, b) / (t[probes[a]] - t[probes[b]]).abs() - 1.0).abs())
                    .fold(0.0, f64::max);
                println!("lambda = {lambda:4}: {} edges, worst relative error {worst:.4}", g.edge_count());
            }
            Err(e) => println!("lambda = {lambda:4}: {} components, {e}", comps.count),
        }
    }
    Ok(())
}
