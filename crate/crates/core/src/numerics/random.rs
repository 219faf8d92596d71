use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Identifies one reproducible random sequence: a base seed plus a stream
/// index. ChaCha keeps streams of the same seed disjoint, so replications
/// never share generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStream { seed, stream }
    }

    /// A derived stream for a named sub-task. Children of distinct parents or
    /// distinct tags land on unrelated stream indices.
    pub fn child(&self, tag: u64) -> RngStream {
        RngStream {
            seed: self.seed,
            stream: splitmix64(splitmix64(self.stream) ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn rademacher_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
        .collect()
}

/// Matrix of i.i.d. N(0,1) entries filled row by row.
pub fn standard_normal_matrix(stream: RngStream, rows: usize, cols: usize) -> Result<Matrix> {
    let mut rng = stream.rng();
    standard_normal_matrix_with(&mut rng, rows, cols)
}

pub fn standard_normal_matrix_with<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidArgument(format!(
            "normal matrix needs positive dimensions, got {rows}x{cols}"
        )));
    }
    Matrix::from_vec(rows, cols, standard_normal_vec(rng, rows * cols))
}

/// `n` rows drawn from N(0, cov) as `Z Lᵀ` with `L` the Cholesky factor.
pub fn mvn_toeplitz(stream: RngStream, n: usize, cov: &Matrix) -> Result<Matrix> {
    let chol = cov.cholesky()?;
    let mut rng = stream.rng();
    mvn_with_factor(&mut rng, n, &chol)
}

/// Multivariate normal rows given a lower Cholesky factor.
pub fn mvn_with_factor<R: Rng + ?Sized>(rng: &mut R, n: usize, chol: &Matrix) -> Result<Matrix> {
    let p = chol.rows();
    let z = standard_normal_matrix_with(rng, n, p)?;
    let mut out = Matrix::zeros(n, p);
    for i in 0..n {
        let zi = z.row(i);
        let row = out.row_mut(i);
        // row_j = sum_{k<=j} L_jk z_k
        for (j, o) in row.iter_mut().enumerate() {
            *o = crate::numerics::dot(&chol.row(j)[..=j], &zi[..=j]);
        }
    }
    Ok(out)
}

/// Shuffles `0..n` with `stream` and splits it into `folds` near-equal parts.
/// When `n` is not divisible the first `n % folds` parts get one extra row.
/// Indices inside each part are sorted.
pub fn shuffled_folds(stream: RngStream, n: usize, folds: usize) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || n < folds {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} rows into {folds} non-empty folds"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream.rng());
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let len = base + usize::from(f < extra);
        let mut part = order[start..start + len].to_vec();
        part.sort_unstable();
        out.push(part);
        start += len;
    }
    Ok(out)
}
