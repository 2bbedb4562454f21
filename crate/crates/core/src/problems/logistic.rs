use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Objective;
use crate::error::{check_dim, invalid, Error, Result};
use crate::{Matrix, Vector};

pub const DEFAULT_FLIP_FRACTION: f64 = 0.2;
const MAX_GENERATION_ATTEMPTS: u64 = 100;
const PERCEPTRON_EPOCHS: usize = 10_000;

/// Binary classification data: `features` is `N × n`, labels are ±1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticDataset {
    features: Matrix,
    labels: Vec<f64>,
}

impl LogisticDataset {
    pub fn new(features: Matrix, labels: Vec<f64>) -> Result<Self> {
        check_dim(features.nrows(), labels.len())?;
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(invalid(format!("labels must be -1 or +1, got {bad}")));
        }
        Ok(Self { features, labels })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Margins `y_i xᵀs_i`.
    fn margins(&self, x: &Vector) -> Vector {
        let mut z = &self.features * x;
        for (zi, y) in z.iter_mut().zip(&self.labels) {
            *zi *= y;
        }
        z
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `1 / (1 + e^{-t})` without overflow.
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logistic_value(x: &Vector, d: &LogisticDataset) -> Result<f64> {
    check_dim(d.n_features(), x.len())?;
    Ok(value_unchecked(x, d))
}

pub fn logistic_gradient(x: &Vector, d: &LogisticDataset) -> Result<Vector> {
    check_dim(d.n_features(), x.len())?;
    Ok(gradient_unchecked(x, d))
}

fn value_unchecked(x: &Vector, d: &LogisticDataset) -> f64 {
    let z = d.margins(x);
    z.iter().map(|&zi| softplus(-zi)).sum::<f64>() / d.n_samples() as f64
}

fn gradient_unchecked(x: &Vector, d: &LogisticDataset) -> Vector {
    let z = d.margins(x);
    // weights -y_i σ(-z_i) / N, then Sᵀw
    let n = d.n_samples() as f64;
    let w = Vector::from_iterator(
        z.len(),
        z.iter().zip(&d.labels).map(|(&zi, &y)| -y * sigmoid(-zi) / n),
    );
    d.features.tr_mul(&w)
}

/// `σ_max(S)² / (4N)`, the smallest global smoothness constant.
pub fn logistic_smoothness(d: &LogisticDataset) -> Result<f64> {
    if d.n_samples() == 0 || d.n_features() == 0 {
        return Err(invalid("empty dataset"));
    }
    let sigma = d.features.singular_values().max();
    Ok(sigma * sigma / (4.0 * d.n_samples() as f64))
}

/// Seeded two-cluster dataset with a fraction of flipped labels.
///
/// Samples alternate between the clusters centred at `±(1,…,1)/√n`
/// (label = cluster sign) with unit-variance Gaussian noise. When
/// `flip_fraction > 0` the draw is repeated with `seed + 1, seed + 2, …` until
/// the data is not linearly separable through the origin.
pub fn make_logistic_dataset(
    n_samples: usize,
    n_features: usize,
    seed: u64,
    flip_fraction: f64,
) -> Result<LogisticDataset> {
    if n_samples < 2 {
        return Err(invalid(format!("need at least 2 samples, got {n_samples}")));
    }
    if n_features == 0 {
        return Err(invalid("feature dimension must be positive"));
    }
    if !(0.0..=1.0).contains(&flip_fraction) {
        return Err(invalid(format!("flip fraction must lie in [0, 1], got {flip_fraction}")));
    }
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let data = draw_dataset(n_samples, n_features, seed.wrapping_add(attempt), flip_fraction);
        if flip_fraction == 0.0 || !is_linearly_separable(&data) {
            return Ok(data);
        }
    }
    Err(Error::Generation(format!(
        "data still separable after {MAX_GENERATION_ATTEMPTS} attempts"
    )))
}

fn draw_dataset(n_samples: usize, n_features: usize, seed: u64, flip_fraction: f64) -> LogisticDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset = 1.0 / (n_features as f64).sqrt();
    let mut labels: Vec<f64> = (0..n_samples).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let mut features = Matrix::zeros(n_samples, n_features);
    for i in 0..n_samples {
        for j in 0..n_features {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features[(i, j)] = labels[i] * offset + noise;
        }
    }
    let n_flip = (flip_fraction * n_samples as f64).ceil() as usize;
    for i in rand::seq::index::sample(&mut rng, n_samples, n_flip.min(n_samples)) {
        labels[i] = -labels[i];
    }
    LogisticDataset { features, labels }
}

/// Perceptron through the origin; separable iff an epoch finishes without a
/// mistake within the epoch budget.
pub fn is_linearly_separable(d: &LogisticDataset) -> bool {
    let mut w = Vector::zeros(d.n_features());
    for _ in 0..PERCEPTRON_EPOCHS {
        let mut mistakes = 0usize;
        for (i, &y) in d.labels.iter().enumerate() {
            let s = d.features.row(i).transpose();
            if y * w.dot(&s) <= 0.0 {
                w += y * s;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            return true;
        }
    }
    false
}

/// Mean logistic loss over a dataset, `(1/N) Σ log(1 + exp(−y_i xᵀs_i))`.
#[derive(Clone, Debug)]
pub struct LogisticObjective {
    data: LogisticDataset,
    l_s: f64,
}

impl LogisticObjective {
    pub fn new(data: LogisticDataset) -> Result<Self> {
        let l_s = logistic_smoothness(&data)?;
        Ok(Self { data, l_s })
    }

    pub fn dataset(&self) -> &LogisticDataset {
        &self.data
    }
}

impl Objective for LogisticObjective {
    fn dim(&self) -> usize {
        self.data.n_features()
    }
    fn value(&self, x: &Vector) -> f64 {
        value_unchecked(x, &self.data)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        gradient_unchecked(x, &self.data)
    }
    fn smoothness_constant(&self) -> Option<f64> {
        Some(self.l_s)
    }
}
