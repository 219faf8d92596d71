//! Cross-validated detection of transferable sources, followed by the fit on
//! the detected set.

use transfarm::numerics::RngStream;
use transfarm::simlab::{generate, l2_error, SimConfig};
use transfarm::transfer::{trans_farm, Threshold, TransferConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig {
        n0: 150,
        nk: 150,
        p: 200,
        s: 10,
        sources: 6,
        informative_sizes: vec![3],
        ..SimConfig::default()
    };
    let data = generate(&config, 3, RngStream::new(5, 0))?;
    println!("true informative set: {:?}", data.truth.informative);
    for threshold in [Threshold::TwiceTargetLoss, Threshold::Eps0(0.05)] {
        let cfg = TransferConfig {
            threshold,
            seed: 11,
            ..TransferConfig::default()
        };
        let (fit, report) = trans_farm(&data.target, &data.sources, &cfg)?;
        println!("threshold {threshold:?} = {:.4}", report.threshold);
        println!("  target-only loss {:.4}", report.target_loss);
        for (k, loss) in report.source_losses.iter().enumerate() {
            println!(
                "  source {k}: loss {loss:.4} gap {:+.4}{}",
                loss - report.target_loss,
                if report.selected.contains(&k) { "  selected" } else { "" }
            );
        }
        println!("  l2 error of the fit on the detected set: {:.4}", l2_error(&fit.beta_hat, &data.truth.beta));
    }
    Ok(())
}
