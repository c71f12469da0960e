//! Reproducible sample points over a chart domain.

use crate::tensor::Chart;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 0x5eed_2024;

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let (mut inv, mut f) = (0.0, 1.0 / b);
    while i > 0 {
        inv += f * (i % base as u64) as f64;
        i /= base as u64;
        f /= b;
    }
    inv
}

/// `count` Halton points in the interior of the chart domain, randomly
/// rotated (mod 1) by a shift drawn from `seed`, and shrunk by `margin`
/// (a fraction of each interval width) away from the boundary.
pub fn halton_points(chart: &Chart, count: usize, seed: u64, margin: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..chart.dim()).map(|_| rng.random::<f64>()).collect();
    (1..=count as u64)
        .map(|i| {
            chart
                .domain()
                .iter()
                .enumerate()
                .map(|(d, (a, b))| {
                    let u = (radical_inverse(i, PRIMES[d]) + shift[d]).fract();
                    let (lo, hi) = (a + margin * (b - a), b - margin * (b - a));
                    lo + (hi - lo) * u
                })
                .collect()
        })
        .collect()
}

/// Seeded generator for randomized tests and reports.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_reproducible_and_inside() {
        let c = Chart::cube(3, 2.0).unwrap();
        let a = halton_points(&c, 50, 7, 0.1);
        assert_eq!(a, halton_points(&c, 50, 7, 0.1));
        assert_ne!(a, halton_points(&c, 50, 8, 0.1));
        assert!(a.iter().all(|p| p.iter().all(|x| x.abs() <= 1.6 + 1e-12)));
        assert!((radical_inverse(3, 2) - 0.75).abs() < 1e-15);
    }
}
