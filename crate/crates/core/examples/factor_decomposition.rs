//! Principal-component factor extraction with eigenvalue-ratio rank
//! selection on synthetic data with two strong factors.

use transfarm::factor::{decompose, RankSpec};
use transfarm::numerics::RngStream;
use transfarm::simlab::{generate, rotation_diagnostic, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = SimConfig {
        n0: 150,
        p: 200,
        s: 10,
        sources: 0,
        informative_sizes: vec![0],
        ..SimConfig::default()
    };
    let data = generate(&config, 0, RngStream::new(7, 0))?;
    let x = &data.target.x;
    let d = decompose(x, RankSpec::default(), false)?;
    let n = x.rows() as f64;
    println!("selected rank {} (true {})", d.rank, config.r);
    let top: Vec<String> = d
        .gram_eigenvalues
        .iter()
        .take(5)
        .map(|v| format!("{:.1}", v / n))
        .collect();
    println!("leading eigenvalues of XXᵀ/n: {}", top.join(", "));

    let f = &d.factors;
    let ftf = f.transpose().matmul(f)?.scaled(1.0 / n);
    println!("max |F̂ᵀF̂/n - I|: {:.2e}", ftf.sub(&transfarm::numerics::Matrix::identity(d.rank))?.max_abs());
    let recon = f.matmul(&d.loadings.transpose())?.add(&d.idiosyncratic)?;
    println!("max |F̂B̂ᵀ + Û - X|: {:.2e}", recon.sub(x)?.max_abs());

    let diag = rotation_diagnostic(&data.truth, &d, 0)?;
    if let (Some(o), Some(e)) = (diag.orthogonality_error, diag.factor_error) {
        println!("rotation: ||HᵀH - I|| = {o:.3}, max |F̂ - FHᵀ| = {e:.3}");
    }
    let y_tilde = d.residualize(&data.target.y)?;
    let gamma = d.gamma_hat(&data.target.y)?;
    println!("factor coefficients of y: {gamma:.3?}");
    println!("first residualized responses: {:.3?}", &y_tilde[..4]);
    Ok(())
}
