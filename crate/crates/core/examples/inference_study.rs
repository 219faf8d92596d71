//! Monte-Carlo size, power and coverage of the bootstrap procedures on
//! synthetic factor-augmented data.

use transfarm::inference::{infer, InferenceConfig};
use transfarm::numerics::RngStream;
use transfarm::simlab::{generate, SimConfig};

fn study(label: &str, sim: &SimConfig, reps: usize, draws: usize) -> Result<(), Box<dyn std::error::Error>> {
    let mut rejections = 0;
    let mut covered = 0;
    for rep in 0..reps {
        let data = generate(sim, 0, RngStream::new(sim.seed, rep as u64))?;
        let config = InferenceConfig {
            draws,
            seed: rep as u64,
            ..InferenceConfig::default()
        };
        let (_, _, result) = infer(&data.target, &[], &config)?;
        if result.test.reject {
            rejections += 1;
        }
        if result
            .intervals
            .iter()
            .all(|iv| iv.lo <= data.truth.beta[iv.index] && data.truth.beta[iv.index] <= iv.hi)
        {
            covered += 1;
        }
    }
    println!(
        "{label}: rejection rate {:.3}, simultaneous coverage {:.3} over {reps} replications",
        rejections as f64 / reps as f64,
        covered as f64 / reps as f64
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(50);
    let base = SimConfig {
        sources: 0,
        informative_sizes: vec![0],
        seed: 77,
        ..SimConfig::default()
    };
    let null = SimConfig { n0: 150, p: 100, s: 0, ..base.clone() };
    let alt = SimConfig { n0: 150, p: 100, s: 10, ..base.clone() };
    let cover = SimConfig { n0: 200, p: 50, s: 5, ..base };
    study("null (n0=150, p=100)", &null, reps, 300)?;
    study("alternative (s=10)", &alt, reps, 300)?;
    study("coverage design (n0=200, p=50, s=5)", &cover, reps, 300)?;
    Ok(())
}
