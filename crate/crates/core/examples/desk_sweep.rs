//! Desk-scale replication sweep printing mean errors per estimator and the
//! rate at which detection recovers the informative set exactly.

use std::time::Instant;

use transfarm::simlab::{run_experiment, Estimator, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let reps = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(10);
    let config = SimConfig {
        n0: 150,
        nk: 150,
        p: 200,
        s: 10,
        sources: 6,
        informative_sizes: vec![0, 2, 4, 6],
        replications: reps,
        seed: 2024,
        ..SimConfig::default()
    };
    let start = Instant::now();
    let result = run_experiment(&config)?;
    println!("{} replications in {:.1}s", reps, start.elapsed().as_secs_f64());
    println!("{:>20} {:>3} {:>10} {:>8}", "estimator", "|A|", "mean_l2", "se");
    for s in &result.summary {
        println!(
            "{:>20} {:>3} {:>10.4} {:>8.4}",
            s.estimator, s.informative_size, s.mean_l2, s.se_l2
        );
    }
    for est in [Estimator::TransFarm, Estimator::TransLasso] {
        for &m in &config.informative_sizes {
            let rows: Vec<_> = result
                .rows
                .iter()
                .filter(|r| r.estimator == est && r.informative_size == m)
                .collect();
            let exact = rows
                .iter()
                .filter(|r| r.detected.as_ref() == Some(&r.informative))
                .count();
            let mean_size = rows
                .iter()
                .map(|r| r.detected.as_ref().map_or(0, Vec::len))
                .sum::<usize>() as f64
                / rows.len() as f64;
            println!(
                "{est} |A|={m}: exact recovery {exact}/{}, mean |Â| {mean_size:.2}",
                rows.len()
            );
        }
    }
    Ok(())
}
