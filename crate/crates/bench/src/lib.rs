//! Fixtures shared by the benchmarks.

use nalgebra::DMatrix;
use scd_axes_core::metrics::Scored;
use scd_axes_core::rng::PortableRng;
use scd_axes_core::synthkit::PlantedSpec;

/// Gaussian `n × d` matrix with unequal column scales.
pub fn gaussian_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = PortableRng::new(seed);
    let scales: Vec<f64> = (0..d).map(|_| 0.1 + 3.0 * rng.uniform()).collect();
    DMatrix::from_fn(n, d, |_, c| scales[c] * rng.gaussian())
}

/// Tied, noisy scores with roughly balanced labels.
pub fn scored(n: usize, seed: u64) -> Vec<Scored> {
    let mut rng = PortableRng::new(seed);
    (0..n)
        .map(|_| {
            let positive = rng.uniform() < 0.5;
            let shift = if positive { 0.5 } else { 0.0 };
            Scored::new(((rng.gaussian() + shift) * 100.0).round() / 100.0, positive)
        })
        .collect()
}

/// The planted fixtures used by the acceptance suite.
pub fn planted(n_items: usize, occurrences_per_period: usize) -> PlantedSpec {
    PlantedSpec {
        d: 64,
        n_signal_axes: 4,
        signal_strength: 3.0,
        noise_sigma: 1.0,
        n_items,
        occurrences_per_period,
        seed: 7,
    }
}
