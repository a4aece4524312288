//! Projective z-basis measurement emulation.
//!
//! Uses ChaCha8, a counter-based generator: a `(seed, stream)` pair fixes
//! the outcome sequence bit for bit on every platform.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Wavefunction;
use crate::model::Tail;

/// Shot statistics for one state.
#[derive(Debug, Clone, Serialize)]
pub struct ShotEstimate {
    pub n_shots: usize,
    pub seed: u64,
    pub stream: u64,
    /// Outcome counts keyed by basis index (bit set = spin down).
    pub histogram: BTreeMap<usize, usize>,
    pub epsilon: Vec<f64>,
    pub epsilon_stderr: Vec<f64>,
    /// Charge per bond on the same bonds as `charge_density`.
    pub q: Vec<f64>,
    pub q_stderr: Vec<f64>,
}

/// Draws `n_shots` outcomes with generator stream 0.
pub fn sample_shots(
    psi: &Wavefunction,
    n_shots: usize,
    seed: u64,
    left: &Tail,
    right: &Tail,
) -> ShotEstimate {
    sample_shots_on_stream(psi, n_shots, seed, 0, left, right)
}

/// Mean and standard error of the mean, with the unbiased sample variance.
fn mean_stderr(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Draws `n_shots` outcomes from `|ψ|²` using an explicit generator stream.
pub fn sample_shots_on_stream(
    psi: &Wavefunction,
    n_shots: usize,
    seed: u64,
    stream: u64,
    left: &Tail,
    right: &Tail,
) -> ShotEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut cdf = Vec::with_capacity(psi.amplitudes().len());
    let mut acc = 0.0;
    for a in psi.amplitudes() {
        acc += a.norm_sqr();
        cdf.push(acc);
    }
    let total = acc;
    let mut histogram = BTreeMap::new();
    for _ in 0..n_shots {
        let u = rng.random::<f64>() * total;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        *histogram.entry(idx).or_insert(0) += 1;
    }

    let l = psi.sites();
    let mut eps_sum = vec![0.0; l];
    let mut q_sum = vec![0.0; l + 3];
    for (&idx, &count) in &histogram {
        let c = count as f64;
        let z: Vec<i8> = (0..l)
            .map(|i| if idx >> i & 1 == 1 { -1 } else { 1 })
            .collect();
        for (e, &zi) in eps_sum.iter_mut().zip(&z) {
            *e += c * f64::from(zi);
        }
        let mut window = vec![left.spin(1), left.spin(0)];
        window.extend_from_slice(&z);
        window.push(right.spin(0));
        window.push(right.spin(1));
        for (qb, w) in q_sum.iter_mut().zip(window.windows(2)) {
            if w[0] != 0 && w[1] != 0 && w[0] != w[1] {
                *qb += c;
            }
        }
    }
    // σᶻ = ±1 and q ∈ {0,1}, so Σx² follows from Σx.
    let n = n_shots;
    let (epsilon, epsilon_stderr) = eps_sum.iter().map(|&s| mean_stderr(s, n as f64, n)).unzip();
    let (q, q_stderr) = q_sum.iter().map(|&s| mean_stderr(s, s, n)).unzip();
    ShotEstimate {
        n_shots,
        seed,
        stream,
        histogram,
        epsilon,
        epsilon_stderr,
        q,
        q_stderr,
    }
}
