//! Predict an unlabelled response when the curve is unknown, then test the slope.

use mnr::rdpg::{curve_diag_line, sample_rdpg, sample_scenario};
use mnr::regression::{f_test, ols_fit, predict_unknown_manifold, PredictionConfig};
use mnr::stats::RngStream;
use mnr::stress::MdsOptions;

fn main() -> mnr::Result<()> {
    let curve = curve_diag_line();
    let mut rng = RngStream::new(5, 0);
    let (n, s) = (1500, 20);
    let (scn, x) = sample_scenario(&curve, n, s, 2.0, 5.0, 0.01, &mut rng)?;
    let a = sample_rdpg(&x, &mut rng)?;
    let cfg = PredictionConfig {
        d: 4,
        lambda: 0.77,
        l: s + 1,
        graph_nodes: Some(n / 10),
        mds: MdsOptions::default(),
    };
    let out = predict_unknown_manifold(a.as_matrix(), &scn.y, &cfg)?;
    let truth = ols_fit(&scn.t[..s], &scn.y)?;
    println!("prediction from embedding:    {:.4}", out.predictions[s]);
    println!("prediction from true t:       {:.4}", truth.predict(scn.t[s]));
    let test = f_test(&scn.y, &out.fit.fitted, s, 0.05)?;
    println!("F = {:.2}, p = {:.2e}, reject: {}", test.f_stat, test.p_value, test.reject);
    Ok(())
}
