//! Writes synthetic datasets as CSV, runs the command-line driver on them and
//! reads back the coefficient table.

use transfarm::cli::{ingest_dataset, run, write_dataset};
use transfarm::numerics::RngStream;
use transfarm::simlab::{generate, SimConfig};
use transfarm::transfer::Role;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("transfarm-example");
    std::fs::create_dir_all(&dir)?;
    let config = SimConfig {
        n0: 100,
        nk: 100,
        p: 40,
        s: 5,
        sources: 2,
        informative_sizes: vec![1],
        ..SimConfig::default()
    };
    let data = generate(&config, 1, RngStream::new(9, 0))?;
    let target = dir.join("target.csv");
    write_dataset(&target, &data.target, "y")?;
    let back = ingest_dataset(&target, "y", Role::Target)?;
    let diff = back.x.sub(&data.target.x)?.max_abs();
    println!("round trip of {}x{} design: max difference {diff:.1e}", back.n(), back.p());

    let mut args = vec![
        "transfarm".to_string(),
        "infer".into(),
        "--target".into(),
        target.display().to_string(),
        "--out".into(),
        dir.join("out").display().to_string(),
        "--group".into(),
        "1,2,3,4,5".into(),
    ];
    for (k, s) in data.sources.iter().enumerate() {
        let path = dir.join(format!("source{}.csv", k + 1));
        write_dataset(&path, s, "y")?;
        args.push("--source".into());
        args.push(path.display().to_string());
    }
    let code = run(args);
    println!("infer finished with {code:?}");
    let intervals = std::fs::read_to_string(dir.join("out").join("intervals.csv"))?;
    print!("{intervals}");
    Ok(())
}
