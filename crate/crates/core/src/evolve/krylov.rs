//! Lanczos approximation of `exp(-iHτ)ψ` with full reorthogonalization,
//! adaptive subspace size and step halving.

use num_complex::Complex64;
use serde::Serialize;

use super::Wavefunction;
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{HamiltonianSpec, IsingOperator};

#[derive(Debug, Clone, Copy)]
pub struct KrylovOptions {
    /// Largest Krylov subspace dimension.
    pub max_dim: usize,
    /// Per-step a-posteriori error bound.
    pub tolerance: f64,
    /// Largest internal time step; output intervals are subdivided to respect it.
    pub max_dt: f64,
    /// Number of successive step halvings before giving up.
    pub max_halvings: usize,
    /// Memory budget for the Krylov basis in bytes.
    pub memory_budget: usize,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            max_dim: 30,
            tolerance: 1e-10,
            max_dt: 0.1,
            max_halvings: 12,
            memory_budget: 3 << 30,
        }
    }
}

/// Diagnostics accumulated over a run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PropagationStats {
    pub steps: usize,
    pub substeps: usize,
    pub max_error_estimate: f64,
    pub max_krylov_dim: usize,
    pub breakdowns: usize,
    /// Largest `|‖ψ(t)‖ − 1|` seen at output times.
    pub norm_drift: f64,
    /// Largest `|⟨H⟩(t) − ⟨H⟩(0)|` seen at output times.
    pub energy_drift: f64,
}

enum Attempt {
    Done {
        state: Vec<Complex64>,
        estimate: f64,
        dim: usize,
        breakdown: bool,
    },
    Failed {
        estimate: f64,
    },
}

/// Time propagator bound to one Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    op: IsingOperator,
    opts: KrylovOptions,
}

impl Propagator {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        Self::from_operator(IsingOperator::new(spec)?, KrylovOptions::default())
    }

    pub fn from_operator(op: IsingOperator, opts: KrylovOptions) -> Result<Self> {
        let bytes = (opts.max_dim + 3) * op.dim() * std::mem::size_of::<Complex64>();
        if bytes > opts.memory_budget {
            return Err(Error::MemoryLimit(format!(
                "Krylov basis needs {bytes} bytes, budget is {}",
                opts.memory_budget
            )));
        }
        Ok(Self { op, opts })
    }

    pub fn operator(&self) -> &IsingOperator {
        &self.op
    }

    pub fn options(&self) -> &KrylovOptions {
        &self.opts
    }

    fn attempt(&self, v0: &[Complex64], tau: f64) -> Result<Attempt> {
        let n = v0.len();
        let beta0 = linalg::norm(v0);
        if beta0 == 0.0 {
            return Ok(Attempt::Done {
                state: v0.to_vec(),
                estimate: 0.0,
                dim: 0,
                breakdown: false,
            });
        }
        let mut basis: Vec<Vec<Complex64>> = vec![v0.iter().map(|z| z / beta0).collect()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut offdiag: Vec<f64> = Vec::new();
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        let mut last_estimate = f64::INFINITY;

        for j in 0..self.opts.max_dim {
            self.op.apply(&basis[j], &mut w);
            let a = linalg::dot(&basis[j], &w).re;
            for (wi, vi) in w.iter_mut().zip(&basis[j]) {
                *wi -= vi * a;
            }
            if j > 0 {
                let b = offdiag[j - 1];
                for (wi, vi) in w.iter_mut().zip(&basis[j - 1]) {
                    *wi -= vi * b;
                }
            }
            for v in &basis {
                let c = linalg::dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= vi * c;
                }
            }
            alpha.push(a);
            let b = linalg::norm(&w);
            if !b.is_finite() || !a.is_finite() {
                return Err(Error::KrylovBreakdown(format!(
                    "non-finite Lanczos coefficient at iteration {j}"
                )));
            }
            let k = j + 1;
            let scale = alpha.iter().map(|x| x.abs()).fold(1.0, f64::max);
            let invariant = b <= 1e-13 * scale;
            let coeffs = linalg::tridiagonal_expm_first_column(&alpha, &offdiag, tau)?;
            let estimate = if invariant {
                0.0
            } else {
                beta0 * b * coeffs[k - 1].norm()
            };
            if invariant || estimate < self.opts.tolerance {
                let mut out = vec![Complex64::new(0.0, 0.0); n];
                for (c, v) in coeffs.iter().zip(&basis) {
                    let c = c * beta0;
                    for (o, vi) in out.iter_mut().zip(v) {
                        *o += vi * c;
                    }
                }
                return Ok(Attempt::Done {
                    state: out,
                    estimate,
                    dim: k,
                    breakdown: invariant,
                });
            }
            last_estimate = estimate;
            offdiag.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        Ok(Attempt::Failed {
            estimate: last_estimate,
        })
    }

    fn advance(
        &self,
        state: &mut Vec<Complex64>,
        tau: f64,
        depth: usize,
        stats: &mut PropagationStats,
    ) -> Result<()> {
        match self.attempt(state, tau)? {
            Attempt::Done {
                state: next,
                estimate,
                dim,
                breakdown,
            } => {
                *state = next;
                stats.substeps += 1;
                stats.max_error_estimate = stats.max_error_estimate.max(estimate);
                stats.max_krylov_dim = stats.max_krylov_dim.max(dim);
                if breakdown {
                    stats.breakdowns += 1;
                }
                Ok(())
            }
            Attempt::Failed { estimate } => {
                if depth >= self.opts.max_halvings {
                    return Err(Error::ToleranceNotMet {
                        estimate,
                        tolerance: self.opts.tolerance,
                    });
                }
                self.advance(state, tau / 2.0, depth + 1, stats)?;
                self.advance(state, tau / 2.0, depth + 1, stats)
            }
        }
    }

    /// Advances `psi` by `dt`, subdividing as needed.
    pub fn step(
        &self,
        psi: &mut Wavefunction,
        dt: f64,
        stats: &mut PropagationStats,
    ) -> Result<()> {
        if psi.sites() != self.op.sites() {
            return Err(Error::Dimension(format!(
                "state has {} spins, operator {}",
                psi.sites(),
                self.op.sites()
            )));
        }
        let pieces = (dt.abs() / self.opts.max_dt).ceil().max(1.0) as usize;
        let tau = dt / pieces as f64;
        for _ in 0..pieces {
            self.advance(psi.amplitudes_mut(), tau, 0, stats)?;
        }
        stats.steps += 1;
        Ok(())
    }

    /// Runs `n_steps` output steps of length `dt`, calling `observe(k, t, ψ)`
    /// at every output time including `t = 0`.
    pub fn run(
        &self,
        psi0: &Wavefunction,
        dt: f64,
        n_steps: usize,
        mut observe: impl FnMut(usize, f64, &Wavefunction) -> Result<()>,
    ) -> Result<PropagationStats> {
        let mut stats = PropagationStats::default();
        let mut psi = psi0.clone();
        let e0 = self.op.expectation(psi.amplitudes());
        let n0 = psi.norm();
        observe(0, 0.0, &psi)?;
        for k in 1..=n_steps {
            self.step(&mut psi, dt, &mut stats)?;
            stats.norm_drift = stats.norm_drift.max((psi.norm() - n0).abs());
            let e = self.op.expectation(psi.amplitudes());
            stats.energy_drift = stats.energy_drift.max((e - e0).abs());
            observe(k, k as f64 * dt, &psi)?;
        }
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{electric_field, prepare_state, propagate_dense};
    use crate::model::{CouplingMatrix, Environment, ExpProfile, SpinConfiguration};

    #[test]
    fn diagonal_hamiltonian_keeps_classical_state() {
        let spec = HamiltonianSpec::exponential(
            6,
            ExpProfile::new(1.0, 0.78),
            0.0,
            0.4,
            Environment::String,
        )
        .unwrap();
        let prop = Propagator::new(&spec).unwrap();
        let psi0 = prepare_state(&Environment::String.initial_configuration(6));
        let stats = prop
            .run(&psi0, 0.5, 6, |_, _, psi| {
                assert!(electric_field(psi).iter().all(|&e| (e + 1.0).abs() < 1e-14));
                Ok(())
            })
            .unwrap();
        assert!(stats.breakdowns > 0);
    }

    #[test]
    fn single_spin_rabi() {
        let spec = HamiltonianSpec::new(CouplingMatrix::zeros(1), 1.0, 0.0, vec![0.0]).unwrap();
        let prop = Propagator::new(&spec).unwrap();
        let mut psi = prepare_state(&SpinConfiguration::open(vec![1]));
        let mut stats = PropagationStats::default();
        prop.step(&mut psi, 0.3, &mut stats).unwrap();
        // exp(i 0.3 X)|0⟩ = cos 0.3 |0⟩ + i sin 0.3 |1⟩
        assert!((psi.amplitudes()[0].re - 0.3f64.cos()).abs() < 1e-13);
        assert!((psi.amplitudes()[1].im - 0.3f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn long_step_is_subdivided() {
        let spec = HamiltonianSpec::exponential(
            8,
            ExpProfile::new(1.0, 0.78),
            0.9,
            0.2,
            Environment::Charge,
        )
        .unwrap();
        let prop = Propagator::new(&spec).unwrap();
        let psi0 = prepare_state(&Environment::Charge.initial_configuration(8));
        let mut psi = psi0.clone();
        let mut stats = PropagationStats::default();
        prop.step(&mut psi, 1.5, &mut stats).unwrap();
        assert!(stats.substeps >= 15);
        let dense = propagate_dense(prop.operator(), &psi0, 1.5).unwrap();
        assert!(psi.distance(&dense) < 1e-9);
    }

    #[test]
    fn tolerance_failure_reported() {
        let spec = HamiltonianSpec::exponential(
            8,
            ExpProfile::new(1.0, 0.78),
            0.9,
            0.2,
            Environment::Charge,
        )
        .unwrap();
        let opts = KrylovOptions {
            max_dim: 2,
            tolerance: 1e-15,
            max_dt: 10.0,
            max_halvings: 1,
            ..KrylovOptions::default()
        };
        let prop = Propagator::from_operator(IsingOperator::new(&spec).unwrap(), opts).unwrap();
        let mut psi = prepare_state(&Environment::Charge.initial_configuration(8));
        let r = prop.step(&mut psi, 5.0, &mut PropagationStats::default());
        assert!(matches!(r, Err(Error::ToleranceNotMet { .. })));
    }
}
