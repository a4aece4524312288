//! Quench dynamics: state preparation, Krylov propagation, observables,
//! shot-noise emulation and fits against analytic predictions.

mod fits;
mod krylov;
mod map;
mod observables;
mod shots;

pub use fits::{bessel_j, fit_bloch, fit_light_cone, BlochFit, LightConeFit};
pub use krylov::{KrylovOptions, PropagationStats, Propagator};
pub use map::{MapTime, SpatiotemporalMap};
pub use observables::{
    bond_labels, charge_density, electric_field, net_charge_density, nn_correlations,
    observables_from_weights,
};
pub use shots::{sample_shots, sample_shots_on_stream, ShotEstimate};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{HamiltonianSpec, IsingOperator, SpinConfiguration};

/// Normalized state over the `2^L` z-basis (bit 0 ↔ up).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wavefunction {
    l: usize,
    amplitudes: Vec<Complex64>,
}

impl Wavefunction {
    /// Wraps amplitudes, checking the length and normalizing to unit norm.
    pub fn new(l: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << l {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {l} spins",
                amplitudes.len()
            )));
        }
        let n = linalg::norm(&amplitudes);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Dimension("zero or non-finite state".into()));
        }
        let amplitudes = amplitudes.into_iter().map(|a| a / n).collect();
        Ok(Self { l, amplitudes })
    }

    pub(crate) fn from_raw(l: usize, amplitudes: Vec<Complex64>) -> Self {
        debug_assert_eq!(amplitudes.len(), 1 << l);
        Self { l, amplitudes }
    }

    pub fn basis_state(l: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << l];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self { l, amplitudes }
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut Vec<Complex64> {
        &mut self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        linalg::norm(&self.amplitudes)
    }

    pub fn overlap(&self, other: &Wavefunction) -> Complex64 {
        linalg::dot(&self.amplitudes, &other.amplitudes)
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &Wavefunction) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Basis state of the configuration's dynamical spins.
pub fn prepare_state(config: &SpinConfiguration) -> Wavefunction {
    Wavefunction::basis_state(config.len(), config.index())
}

/// Evolves `psi` for `n_steps` steps of `dt`, returning all `n_steps + 1`
/// snapshots including the initial state.
pub fn propagate(
    psi: &Wavefunction,
    spec: &HamiltonianSpec,
    dt: f64,
    n_steps: usize,
) -> Result<Vec<Wavefunction>> {
    let prop = Propagator::new(spec)?;
    let mut out = Vec::with_capacity(n_steps + 1);
    prop.run(psi, dt, n_steps, |_, _, state| {
        out.push(state.clone());
        Ok(())
    })?;
    Ok(out)
}

/// Reference propagation by dense diagonalization (small L only).
pub fn propagate_dense(op: &IsingOperator, psi: &Wavefunction, t: f64) -> Result<Wavefunction> {
    const MAX_ORACLE: usize = 10;
    if op.sites() > MAX_ORACLE {
        return Err(Error::SizeLimit {
            what: "L (dense propagation)",
            got: op.sites(),
            max: MAX_ORACLE,
        });
    }
    let n = op.dim();
    let eig = linalg::symmetric_eigen(&op.to_dense()?, n)?;
    let mut c = eig.to_eigenbasis(psi.amplitudes());
    for (ck, &e) in c.iter_mut().zip(&eig.values) {
        *ck *= Complex64::from_polar(1.0, -e * t);
    }
    Ok(Wavefunction::from_raw(psi.sites(), eig.from_eigenbasis(&c)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Environment, ExpProfile};

    #[test]
    fn string_state_is_all_ones() {
        let cfg = Environment::String.initial_configuration(5);
        let psi = prepare_state(&cfg);
        assert_eq!(psi.amplitudes()[0b11111], Complex64::new(1.0, 0.0));
        assert_eq!(psi.norm(), 1.0);
    }

    #[test]
    fn kink_state_bit_pattern() {
        let cfg = Environment::Charge.initial_configuration(13);
        let psi = prepare_state(&cfg);
        let idx: usize = (6..13).map(|i| 1 << i).sum();
        assert_eq!(psi.amplitudes()[idx].re, 1.0);
    }

    #[test]
    fn new_normalizes() {
        let psi =
            Wavefunction::new(1, vec![Complex64::new(3.0, 0.0), Complex64::new(0.0, 4.0)]).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        assert!(Wavefunction::new(2, vec![Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn krylov_matches_dense() {
        let spec = HamiltonianSpec::exponential(
            6,
            ExpProfile::new(1.0, 0.78),
            0.6,
            0.3,
            Environment::String,
        )
        .unwrap();
        let op = IsingOperator::new(&spec).unwrap();
        let psi = prepare_state(&Environment::String.initial_configuration(6));
        let states = propagate(&psi, &spec, 0.1, 20).unwrap();
        let dense = propagate_dense(&op, &psi, 2.0).unwrap();
        assert!(states[20].distance(&dense) < 1e-9);
    }
}
