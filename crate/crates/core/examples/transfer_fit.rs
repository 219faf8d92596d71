//! Two-step transfer fit with a known informative set, compared against the
//! target-only fit and against pooling every source.

use transfarm::numerics::RngStream;
use transfarm::simlab::{generate, l2_error, SimConfig};
use transfarm::transfer::{oracle_trans_farm, TransferConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig {
        n0: 150,
        nk: 150,
        p: 200,
        s: 10,
        sources: 6,
        informative_sizes: vec![4],
        ..SimConfig::default()
    };
    let data = generate(&config, 4, RngStream::new(3, 0))?;
    let informative = &data.truth.informative;
    println!("informative sources: {informative:?}");
    let cfg = TransferConfig::default();
    let all: Vec<usize> = (0..config.sources).collect();
    for (label, set) in [("target only", &vec![]), ("informative set", informative), ("all sources", &all)] {
        let fit = oracle_trans_farm(&data.target, &data.sources, set, &cfg)?;
        println!(
            "{label:>16}: l2 error {:.4}, lambda_w {:.4}, lambda_delta {:.4}, nonzeros {}",
            l2_error(&fit.beta_hat, &data.truth.beta),
            fit.lambda_w,
            fit.lambda_delta,
            fit.beta_hat.iter().filter(|b| **b != 0.0).count()
        );
    }
    Ok(())
}
