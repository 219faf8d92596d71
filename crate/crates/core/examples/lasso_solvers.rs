//! Coordinate-descent lasso, the scaled lasso noise estimate, a
//! cross-validated penalty and nodewise precision estimation.

use transfarm::numerics::{standard_normal_matrix, standard_normal_vec, RngStream};
use transfarm::solver::{
    cv_lambda, default_lambda0, lasso_fit, nodewise_precision, penalty_level, scaled_lasso,
    CvOptions, LassoOptions, LassoProblem, NodewisePenalty, DEFAULT_LAMBDA_C,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, p) = (120, 60);
    let z = standard_normal_matrix(RngStream::new(1, 0), n, p)?;
    let noise = standard_normal_vec(&mut RngStream::new(1, 1).rng(), n);
    let truth: Vec<f64> = (0..p).map(|j| if j < 4 { 1.0 } else { 0.0 }).collect();
    let r: Vec<f64> = z
        .matvec(&truth)?
        .iter()
        .zip(&noise)
        .map(|(a, e)| a + 0.8 * e)
        .collect();
    let options = LassoOptions::default();

    let scaled = scaled_lasso(&z, &r, default_lambda0(n, p), &options)?;
    println!("scaled lasso: sigma = {:.3} (true 0.8) after {} alternations", scaled.sigma, scaled.iterations);

    let lambda = penalty_level(DEFAULT_LAMBDA_C, scaled.sigma, p, n);
    let problem = LassoProblem::single(&z, &r, lambda)?;
    let fit = lasso_fit(&problem, &options, None)?;
    let support: Vec<usize> = (0..p).filter(|&j| fit.coefficients[j] != 0.0).collect();
    println!(
        "lasso at lambda = {lambda:.4} (lambda_max {:.4}): support {support:?}, {} sweeps, KKT violation {:.1e}",
        problem.lambda_max(),
        fit.iterations,
        fit.kkt_violation
    );

    let cv = cv_lambda(&z, &r, &CvOptions::default(), &options, RngStream::new(1, 2))?;
    println!("5-fold cross-validated lambda: {:.4}", cv.lambda);

    let theta = nodewise_precision(&z, &NodewisePenalty::default(), &options)?;
    let diag = theta.diagonal();
    println!(
        "nodewise precision: diagonal range [{:.3}, {:.3}]",
        diag.iter().copied().fold(f64::INFINITY, f64::min),
        diag.iter().copied().fold(0.0, f64::max)
    );
    Ok(())
}
