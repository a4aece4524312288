//! Canonical Gibbs baselines from a dense spectrum (k_B = 1, energies in J).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, SymmetricEigen};
use crate::model::{HamiltonianSpec, IsingOperator};

/// Largest chain for a full dense eigendecomposition.
pub const MAX_DENSE_SITES: usize = 13;
/// Memory allowed for the dense matrix, eigenvectors and workspace.
pub const MEMORY_BUDGET: usize = 4 << 30;

/// Full eigendecomposition of an Ising Hamiltonian.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub l: usize,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    eigen: SymmetricEigen,
    pub spec_hash: String,
    /// Largest `‖Hv − λv‖` over the sampled eigenpairs.
    pub max_residual: f64,
}

/// Temperature in units of J; the infinite-temperature state is a sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Temperature {
    Finite(f64),
    #[serde(serialize_with = "infinite")]
    Infinite,
}

fn infinite<S: serde::Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("inf")
}

impl Temperature {
    pub fn value(self) -> f64 {
        match self {
            Temperature::Finite(t) => t,
            Temperature::Infinite => f64::INFINITY,
        }
    }
}

fn residual(op: &IsingOperator, eig: &SymmetricEigen, k: usize) -> f64 {
    let v: Vec<Complex64> = eig
        .vector(k)
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    let mut hv = vec![Complex64::new(0.0, 0.0); v.len()];
    op.apply(&v, &mut hv);
    let lam = eig.values[k];
    hv.iter()
        .zip(&v)
        .map(|(a, b)| (a - b * lam).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Dense eigendecomposition with a residual check on 10 sampled eigenpairs.
pub fn spectrum(spec: &HamiltonianSpec) -> Result<SpectralData> {
    let l = spec.len();
    if l > MAX_DENSE_SITES {
        return Err(Error::SizeLimit {
            what: "L (dense spectrum)",
            got: l,
            max: MAX_DENSE_SITES,
        });
    }
    let n = 1usize << l;
    let bytes = 3 * n * n * std::mem::size_of::<f64>();
    if bytes > MEMORY_BUDGET {
        return Err(Error::MemoryLimit(format!(
            "dense spectrum needs ~{bytes} bytes, budget {MEMORY_BUDGET}"
        )));
    }
    let op = IsingOperator::new(spec)?;
    let diag = op.diagonal();
    let g = spec.g;
    let eig = linalg::symmetric_eigen_from_fn(n, |i, j| {
        if i == j {
            diag[i]
        } else if (i ^ j).is_power_of_two() {
            -g
        } else {
            0.0
        }
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut max_residual = 0.0f64;
    let mut samples = vec![0, n - 1];
    samples.extend((0..8).map(|_| rng.random_range(0..n)));
    for k in samples {
        max_residual = max_residual.max(residual(&op, &eig, k));
    }
    let scale = spec.couplings.get(0, 1.min(l - 1)).abs().max(1.0);
    if max_residual > 1e-8 * scale {
        return Err(Error::IllConditioned(format!(
            "eigenpair residual {max_residual:.3e} exceeds 1e-8·J"
        )));
    }
    Ok(SpectralData {
        l,
        eigenvalues: eig.values.clone(),
        eigen: eig,
        spec_hash: spec.hash_hex(),
        max_residual,
    })
}

/// Lowest eigenvalue by Lanczos with full reorthogonalization.
pub fn lanczos_ground_energy(op: &IsingOperator, max_iter: usize, tol: f64) -> Result<f64> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let v0: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, 0.0))
        .collect();
    let nrm = linalg::norm(&v0);
    let mut basis = vec![v0.into_iter().map(|z| z / nrm).collect::<Vec<_>>()];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut prev = f64::INFINITY;
    for j in 0..max_iter.min(n) {
        op.apply(&basis[j], &mut w);
        let a = linalg::dot(&basis[j], &w).re;
        for v in &basis {
            let c = linalg::dot(v, &w);
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= vi * c;
            }
        }
        alpha.push(a);
        let b = linalg::norm(&w);
        let m = alpha.len();
        let mut t = vec![0.0; m * m];
        for i in 0..m {
            t[i * m + i] = alpha[i];
            if i + 1 < m {
                t[i * m + i + 1] = beta[i];
                t[(i + 1) * m + i] = beta[i];
            }
        }
        let ritz = linalg::symmetric_eigenvalues(&t, m)?[0];
        if (ritz - prev).abs() < tol || b < 1e-14 {
            return Ok(ritz);
        }
        prev = ritz;
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        objective: prev,
        best: vec![prev],
    })
}

impl SpectralData {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// `Tr H / 2^L`, the infinite-temperature energy.
    pub fn mean_energy(&self) -> f64 {
        self.eigenvalues.iter().sum::<f64>() / self.eigenvalues.len() as f64
    }

    fn weights(&self, t: f64) -> Vec<f64> {
        let e_min = self.eigenvalues[0];
        self.eigenvalues
            .iter()
            .map(|&e| (-(e - e_min) / t).exp())
            .collect()
    }

    /// `Tr[H ρ(T)]`.
    pub fn gibbs_energy(&self, temperature: Temperature) -> f64 {
        match temperature {
            Temperature::Infinite => self.mean_energy(),
            Temperature::Finite(t) => {
                // Measured from the ground energy to avoid cancellation.
                let e_min = self.eigenvalues[0];
                let w = self.weights(t);
                let z: f64 = w.iter().sum();
                e_min
                    + w.iter()
                        .zip(&self.eigenvalues)
                        .map(|(w, e)| w * (e - e_min))
                        .sum::<f64>()
                        / z
            }
        }
    }

    /// Diagonal of `ρ(T)` in the z basis.
    pub fn gibbs_diagonal(&self, temperature: Temperature) -> Vec<f64> {
        let n = self.eigenvalues.len();
        match temperature {
            Temperature::Infinite => vec![1.0 / n as f64; n],
            Temperature::Finite(t) => {
                let w = self.weights(t);
                let z: f64 = w.iter().sum();
                let mut d = vec![0.0; n];
                for (k, &wk) in w.iter().enumerate() {
                    if wk < 1e-300 {
                        continue;
                    }
                    for (s, ds) in d.iter_mut().enumerate() {
                        let u = self.eigen.component(s, k);
                        *ds += wk * u * u;
                    }
                }
                d.iter_mut().for_each(|v| *v /= z);
                d
            }
        }
    }
}

/// Solves `Tr[H ρ(T)] = e0` for `T` by bisection in `log T`.
pub fn match_temperature(e0: f64, spectral: &SpectralData) -> Result<Temperature> {
    let e_min = spectral.ground_energy();
    let mean = spectral.mean_energy();
    let scale = e_min.abs().max(mean.abs()).max(1.0);
    if (e0 - mean).abs() <= 1e-12 * scale {
        return Ok(Temperature::Infinite);
    }
    if e0 <= e_min || e0 > mean {
        return Err(Error::OutOfBracket {
            energy: e0,
            lower: e_min,
            upper: mean,
        });
    }
    let f = |t: f64| spectral.gibbs_energy(Temperature::Finite(t)) - e0;
    let spread = (spectral.eigenvalues[spectral.eigenvalues.len() - 1] - e_min).max(1e-12);
    let mut hi = spread;
    while f(hi) < 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Ok(Temperature::Infinite);
        }
    }
    let mut lo = spread * 1e-3;
    while f(lo) > 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::OutOfBracket {
                energy: e0,
                lower: e_min,
                upper: mean,
            });
        }
    }
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        let v = f(mid);
        if v.abs() <= 1e-14 * e0.abs().max(1.0) || hi / lo - 1.0 < 1e-15 {
            return Ok(Temperature::Finite(mid));
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Temperature::Finite((lo * hi).sqrt()))
}

/// `⟨σᶻ_i⟩` in the Gibbs state, one value per site.
pub fn gibbs_observable(spectral: &SpectralData, temperature: Temperature) -> Vec<f64> {
    if temperature == Temperature::Infinite {
        return vec![0.0; spectral.l];
    }
    let d = spectral.gibbs_diagonal(temperature);
    site_magnetization(spectral.l, &d)
}

fn site_magnetization(l: usize, probabilities: &[f64]) -> Vec<f64> {
    let mut eps = vec![0.0; l];
    for (s, &p) in probabilities.iter().enumerate() {
        for (i, e) in eps.iter_mut().enumerate() {
            *e += if s >> i & 1 == 1 { -p } else { p };
        }
    }
    eps
}

/// Direct Boltzmann sum over classical configurations, ignoring `g`.
pub fn classical_boltzmann_field(spec: &HamiltonianSpec, t: f64) -> Vec<f64> {
    let n = spec.dim();
    let energies: Vec<f64> = (0..n).map(|s| spec.diagonal_energy(s)).collect();
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = energies.iter().map(|e| (-(e - e_min) / t).exp()).collect();
    let z: f64 = w.iter().sum();
    let p: Vec<f64> = w.iter().map(|v| v / z).collect();
    site_magnetization(spec.len(), &p)
}
