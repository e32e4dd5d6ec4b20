//! Run a simulation protocol on a small grid and print its table.
//!
//! `cargo run --release --example simulate -- fig4 10 500,1500`

use mnr::sim::{run, summarize_fig8, ExperimentConfig, ExperimentId};

fn main() -> mnr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id: ExperimentId = args.first().map_or("fig3", String::as_str).parse()?;
    let mut cfg = ExperimentConfig::scaled(id);
    cfg.replicates = args.get(1).and_then(|r| r.parse().ok()).unwrap_or(5);
    if let Some(grid) = args.get(2) {
        cfg.n_grid = grid.split(',').filter_map(|v| v.parse().ok()).collect();
    }
    let table = run(&cfg)?;
    if id == ExperimentId::Fig8 {
        println!("{:#?}", summarize_fig8(&table)?);
    } else {
        print!("{}", table.to_csv_string());
    }
    Ok(())
}
