//! Lowest-order perturbative description of string breaking.
//!
//! Starting from the classical string (all dynamical spins down between two
//! static charges), a transverse field creates charge pairs. The pair
//! `(l1, l2)` denotes charges on bonds `l1` and `l2`, i.e. spins
//! `l1..l2−1` flipped up. To first order in `g` the pair wavefunction hops on
//! a triangular lattice with on-site energy `V_{l1,l2}` relative to the
//! intact string.

use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolve::observables_from_weights;
use crate::linalg;
use crate::model::{default_i0, SpinConfiguration};

/// Default resonance tolerance for adjacent-pair denominators, in units of J.
pub const RESONANCE_TOL: f64 = 1e-6;

/// Ordered pairs `i0 ≤ l1 < l2 ≤ i0 + L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairBasis {
    pub i0: i32,
    pub l: usize,
    pairs: Vec<(i32, i32)>,
}

impl PairBasis {
    pub fn new(i0: i32, l: usize) -> Self {
        let hi = i0 + l as i32;
        let pairs = (i0..=hi)
            .flat_map(|a| (a + 1..=hi).map(move |b| (a, b)))
            .collect();
        Self { i0, l, pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, k: usize) -> (i32, i32) {
        self.pairs[k]
    }

    pub fn pairs(&self) -> &[(i32, i32)] {
        &self.pairs
    }

    pub fn contains(&self, l1: i32, l2: i32) -> bool {
        let hi = self.i0 + self.l as i32;
        self.i0 <= l1 && l1 < l2 && l2 <= hi
    }

    /// Flat index of `(l1, l2)`, row-major over `l1`.
    pub fn index(&self, l1: i32, l2: i32) -> Option<usize> {
        if !self.contains(l1, l2) {
            return None;
        }
        let n = self.l as i32 + 1;
        let a = l1 - self.i0;
        let b = l2 - self.i0;
        // Rows before `a` hold (n-1) + (n-2) + ... + (n-a) pairs.
        let before = a * (n - 1) - a * (a - 1) / 2;
        Some((before + (b - a - 1)) as usize)
    }
}

/// Energy of pair `(l1, l2)` relative to the intact string, with
/// `J_r = J e^{−β(r−1)}` and the string tension `h`. Labels are centered with
/// the default origin `i0 = −(L−1)/2`.
pub fn two_body_potential(l1: i32, l2: i32, j: f64, beta: f64, h: f64, l: usize) -> Result<f64> {
    let i0 = default_i0(l);
    let basis = PairBasis::new(i0, l);
    if !basis.contains(l1, l2) {
        return Err(Error::IndexOutOfRange(format!(
            "pair ({l1}, {l2}) outside {i0} ≤ l1 < l2 ≤ {}",
            i0 + l as i32
        )));
    }
    Ok(potential_internal(
        f64::from(l1 - i0 + 1),
        f64::from(l2 - i0 + 1),
        j,
        beta,
        h,
        l as f64,
    ))
}

/// Closed form in coordinates where the leftmost dynamical spin is site 1.
fn potential_internal(a: f64, b: f64, j: f64, beta: f64, h: f64, l: f64) -> f64 {
    let e = |x: f64| (-beta * x).exp();
    let pref = 4.0 * j / (1.0 - e(1.0)).powi(2);
    pref * (1.0 + e(b) - e(a) - e(b - a) + e(l + 2.0 - a) - e(l + 2.0 - b)) - 2.0 * h * (b - a)
}

/// Potential landscape over the whole pair basis.
#[derive(Debug, Clone, Serialize)]
pub struct PairPotential {
    pub basis: PairBasis,
    pub j: f64,
    pub beta: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl PairPotential {
    pub fn new(j: f64, beta: f64, h: f64, l: usize) -> Result<Self> {
        let basis = PairBasis::new(default_i0(l), l);
        let values = basis
            .pairs()
            .iter()
            .map(|&(a, b)| two_body_potential(a, b, j, beta, h, l))
            .collect::<Result<_>>()?;
        Ok(Self {
            basis,
            j,
            beta,
            h,
            values,
        })
    }

    pub fn get(&self, l1: i32, l2: i32) -> Option<f64> {
        self.basis.index(l1, l2).map(|k| self.values[k])
    }

    /// Writes `l1,l2,V` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["l1", "l2", "V"])?;
        for (&(a, b), v) in self.basis.pairs().iter().zip(&self.values) {
            wr.write_record([a.to_string(), b.to_string(), format!("{v}")])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Complex amplitudes over a pair basis at a given time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoBodyState {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl TwoBodyState {
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// `|Ψ1(0)⟩ = i Σ_l (g / V_{l,l+1}) |l, l+1⟩`.
pub fn initial_pair_state(g: f64, potential: &PairPotential, tol: f64) -> Result<TwoBodyState> {
    let basis = &potential.basis;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); basis.len()];
    for l1 in basis.i0..basis.i0 + basis.l as i32 {
        let k = basis
            .index(l1, l1 + 1)
            .expect("adjacent pair inside the basis");
        let v = potential.values[k];
        if v.abs() < tol * potential.j.abs() {
            return Err(Error::ResonantDenominator {
                l1,
                l2: l1 + 1,
                value: v.abs(),
            });
        }
        amplitudes[k] = Complex64::new(0.0, g / v);
    }
    Ok(TwoBodyState {
        amplitudes,
        time: 0.0,
    })
}

/// Triangle hopping Hamiltonian: diagonal `V`, `−g` between pairs that differ
/// by moving one charge one bond. Dense, row-major.
pub fn build_heff(g: f64, potential: &PairPotential) -> Vec<f64> {
    let basis = &potential.basis;
    let n = basis.len();
    let mut h = vec![0.0; n * n];
    for (k, &(a, b)) in basis.pairs().iter().enumerate() {
        h[k * n + k] = potential.values[k];
        for (c, d) in [(a - 1, b), (a + 1, b), (a, b - 1), (a, b + 1)] {
            if let Some(k2) = basis.index(c, d) {
                h[k * n + k2] = -g;
            }
        }
    }
    h
}

/// `e^{−i t H_eff} |state0⟩` at every requested time via dense diagonalization.
pub fn evolve_pair(
    state0: &TwoBodyState,
    heff: &[f64],
    times: &[f64],
) -> Result<Vec<TwoBodyState>> {
    let n = state0.amplitudes.len();
    let eig = linalg::symmetric_eigen(heff, n)?;
    let c0 = eig.to_eigenbasis(&state0.amplitudes);
    Ok(times
        .iter()
        .map(|&t| {
            let ct: Vec<Complex64> = c0
                .iter()
                .zip(&eig.values)
                .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * (t - state0.time)))
                .collect();
            TwoBodyState {
                amplitudes: eig.from_eigenbasis(&ct),
                time: t,
            }
        })
        .collect())
}

/// `P(t) = 2(⟨Ψ1(0)|Ψ1(0)⟩ − Re⟨Ψ1(0)|Ψ1(t)⟩)`.
pub fn broken_probability(state_t: &TwoBodyState, state_0: &TwoBodyState) -> f64 {
    2.0 * (state_0.norm_sqr() - linalg::dot(&state_0.amplitudes, &state_t.amplitudes).re)
}

/// Charge density (bonds `i0−1..=i0+L+1`) and electric field from the
/// first-order state `|Ψ0⟩ + Σ_p (Ψ1(t) − Ψ1(0))_p |p⟩`, renormalized.
///
/// `base` is the classical string; pair `(l1, l2)` flips its spins
/// `l1..l2−1`.
pub fn reconstruct_observables(
    state0: &TwoBodyState,
    state_t: &TwoBodyState,
    base: &SpinConfiguration,
    basis: &PairBasis,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if base.len() != basis.l {
        return Err(Error::Dimension(format!(
            "base configuration has {} spins, pair basis {}",
            base.len(),
            basis.l
        )));
    }
    let base_index = base.index();
    let mut weights = vec![(base_index, 1.0)];
    for (k, &(a, b)) in basis.pairs().iter().enumerate() {
        let c = state_t.amplitudes[k] - state0.amplitudes[k];
        let lo = (a - basis.i0) as usize;
        let hi = (b - basis.i0) as usize;
        let mask = ((1usize << hi) - 1) & !((1usize << lo) - 1);
        weights.push((base_index ^ mask, c.norm_sqr()));
    }
    let total: f64 = weights.iter().map(|w| w.1).sum();
    for w in weights.iter_mut() {
        w.1 /= total;
    }
    Ok(observables_from_weights(
        basis.l,
        &weights,
        &base.left,
        &base.right,
    ))
}

/// Pairs with `|V| < tol·J`, sorted by separation then position.
pub fn resonant_configs(potential: &PairPotential, tol: f64) -> Vec<(i32, i32)> {
    let mut out: Vec<(i32, i32)> = potential
        .basis
        .pairs()
        .iter()
        .zip(&potential.values)
        .filter(|(_, v)| v.abs() < tol * potential.j.abs())
        .map(|(&p, _)| p)
        .collect();
    out.sort_by_key(|&(a, b)| (b - a, a));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classical_energy, Environment, ExpProfile, HamiltonianSpec};

    const BETA: f64 = 0.78;

    #[test]
    fn basis_count_and_index() {
        let b = PairBasis::new(-6, 13);
        assert_eq!(b.len(), 91);
        for (k, &(l1, l2)) in b.pairs().iter().enumerate() {
            assert_eq!(b.index(l1, l2), Some(k));
        }
        assert_eq!(b.index(-7, 0), None);
        assert_eq!(b.index(2, 2), None);
    }

    #[test]
    fn potential_equals_classical_energy_difference() {
        for h in [0.0, 0.3, 0.6] {
            let l = 13;
            let spec = HamiltonianSpec::exponential(
                l,
                ExpProfile::new(1.0, BETA),
                0.0,
                h,
                Environment::String,
            )
            .unwrap();
            let base = Environment::String.initial_configuration(l);
            let e0 = classical_energy(&base, &spec).unwrap();
            let pot = PairPotential::new(1.0, BETA, h, l).unwrap();
            for (&(a, b), v) in pot.basis.pairs().iter().zip(&pot.values) {
                let mut cfg = base.clone();
                for x in a..b {
                    cfg.dynamical[(x - spec.i0) as usize] = 1;
                }
                let de = classical_energy(&cfg, &spec).unwrap() - e0;
                assert!((de - v).abs() < 1e-10, "({a},{b}) h={h}: {de} vs {v}");
            }
        }
    }

    #[test]
    fn potential_reflection_symmetry() {
        let l = 13;
        let pot = PairPotential::new(1.0, BETA, 0.4, l).unwrap();
        // Internal coordinates a -> L+2-b, i.e. centered l -> 1 - l for L = 13.
        for &(a, b) in pot.basis.pairs() {
            let (v, w) = (pot.get(a, b).unwrap(), pot.get(1 - b, 1 - a).unwrap());
            assert!(
                (v - w).abs() < 1e-12 * v.abs().max(1.0),
                "({a},{b}): {v} vs {w}"
            );
        }
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(matches!(
            two_body_potential(-7, 0, 1.0, BETA, 0.0, 13),
            Err(Error::IndexOutOfRange(_))
        ));
        assert!(matches!(
            two_body_potential(3, 3, 1.0, BETA, 0.0, 13),
            Err(Error::IndexOutOfRange(_))
        ));
    }

    #[test]
    fn centre_adjacent_pair_is_costliest() {
        let pot = PairPotential::new(1.0, BETA, 0.0, 13).unwrap();
        let adj: Vec<f64> = (-6..7).map(|a| pot.get(a, a + 1).unwrap()).collect();
        assert!(adj.iter().all(|&v| v > 0.0));
        let max = adj.iter().copied().fold(f64::MIN, f64::max);
        assert!(
            (pot.get(0, 1).unwrap() - max).abs() < 1e-12
                || (pot.get(-1, 0).unwrap() - max).abs() < 1e-12
        );
    }

    #[test]
    fn strong_tension_makes_long_pairs_negative() {
        let pot = PairPotential::new(1.0, BETA, 0.6, 13).unwrap();
        assert!(pot.get(-6, 7).unwrap() < 0.0);
    }

    #[test]
    fn initial_state_peaks_at_edges() {
        let pot = PairPotential::new(1.0, BETA, 0.3, 13).unwrap();
        let s = initial_pair_state(0.1, &pot, RESONANCE_TOL).unwrap();
        let adj: Vec<(i32, f64)> = (-6..7)
            .map(|a| {
                (
                    a,
                    s.amplitudes[pot.basis.index(a, a + 1).unwrap()].norm_sqr(),
                )
            })
            .collect();
        let max = adj.iter().map(|p| p.1).fold(0.0, f64::max);
        assert!((adj[0].1 - max).abs() < 1e-12 * max);
        assert!((adj[12].1 - max).abs() < 1e-12 * max);
        let support = s.amplitudes.iter().filter(|a| a.norm() > 0.0).count();
        assert_eq!(support, 13);
    }

    #[test]
    fn initial_norm_linear_in_g() {
        let pot = PairPotential::new(1.0, BETA, 0.2, 13).unwrap();
        let n1 = initial_pair_state(0.1, &pot, RESONANCE_TOL)
            .unwrap()
            .norm_sqr()
            .sqrt();
        let n2 = initial_pair_state(0.05, &pot, RESONANCE_TOL)
            .unwrap()
            .norm_sqr()
            .sqrt();
        assert!((n1 / n2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn resonant_denominator_reported() {
        // Find h where an adjacent pair is exactly resonant: V(a,a+1) linear in h.
        let v0 = two_body_potential(-6, -5, 1.0, BETA, 0.0, 13).unwrap();
        let h = v0 / 2.0;
        let pot = PairPotential::new(1.0, BETA, h, 13).unwrap();
        assert!(matches!(
            initial_pair_state(0.1, &pot, RESONANCE_TOL),
            Err(Error::ResonantDenominator { .. })
        ));
    }

    #[test]
    fn three_state_triangle() {
        let pot = PairPotential::new(1.0, BETA, 0.1, 2).unwrap();
        assert_eq!(pot.basis.len(), 3);
        let h = build_heff(0.5, &pot);
        let n = 3;
        // Pairs (0,1), (0,2), (1,2): (0,1)-(0,2) and (0,2)-(1,2) connected.
        assert_eq!(pot.basis.pairs(), &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(h[1], -0.5);
        assert_eq!(h[n + 2], -0.5);
        assert_eq!(h[2], 0.0);
        for k in 0..n {
            assert_eq!(h[k * n + k], pot.values[k]);
        }
    }

    #[test]
    fn heff_degree_and_hermiticity() {
        let pot = PairPotential::new(1.0, BETA, 0.3, 13).unwrap();
        let h = build_heff(0.2, &pot);
        let n = pot.basis.len();
        for r in 0..n {
            let degree = (0..n).filter(|&c| c != r && h[r * n + c] != 0.0).count();
            assert!(degree <= 4);
            for c in 0..n {
                assert_eq!(h[r * n + c], h[c * n + r]);
            }
        }
        let diag = build_heff(0.0, &pot);
        assert!((0..n).all(|r| (0..n).all(|c| r == c || diag[r * n + c] == 0.0)));
    }

    #[test]
    fn evolution_unitary_and_probability_bounds() {
        let pot = PairPotential::new(1.0, BETA, 0.6, 13).unwrap();
        let s0 = initial_pair_state(0.3, &pot, RESONANCE_TOL).unwrap();
        let h = build_heff(0.3, &pot);
        let times: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let states = evolve_pair(&s0, &h, &times).unwrap();
        assert!(
            (states[0]
                .amplitudes
                .iter()
                .zip(&s0.amplitudes)
                .map(|(a, b)| (a - b).norm())
                .sum::<f64>())
                < 1e-12
        );
        let bound = 4.0 * s0.norm_sqr();
        for s in &states {
            assert!((s.norm_sqr() - s0.norm_sqr()).abs() < 1e-10);
            let p = broken_probability(s, &s0);
            assert!(p >= -1e-14 && p <= bound + 1e-14);
        }
        assert!(broken_probability(&states[0], &s0).abs() < 1e-14);
    }

    #[test]
    fn frozen_without_coupling() {
        let pot = PairPotential::new(1.0, BETA, 0.3, 7).unwrap();
        let s0 = initial_pair_state(0.0, &pot, RESONANCE_TOL).unwrap();
        let st = evolve_pair(&s0, &build_heff(0.0, &pot), &[1.5]).unwrap();
        let base = Environment::String.initial_configuration(7);
        let (q, eps) = reconstruct_observables(&s0, &st[0], &base, &pot.basis).unwrap();
        assert!(eps.iter().all(|&e| e == -1.0));
        assert_eq!(q[0], 1.0);
        assert_eq!(*q.last().unwrap(), 1.0);
        assert!(q[1..q.len() - 1].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resonances_appear_with_tension() {
        let far = |h: f64| {
            let pot = PairPotential::new(1.0, BETA, h, 13).unwrap();
            resonant_configs(&pot, 0.3)
        };
        assert!(far(0.0).is_empty());
        let r = far(0.6);
        assert!(!r.is_empty());
        // Reflection pairs (a,b) <-> (1-b, 1-a) appear together.
        for &(a, b) in &r {
            assert!(r.contains(&(1 - b, 1 - a)));
        }
        let pot = PairPotential::new(1.0, BETA, 0.6, 13).unwrap();
        for &(a, b) in &r {
            assert!(pot.get(a, b).unwrap().abs() < 0.3);
        }
        // Sorted by separation, then position.
        assert!(r
            .windows(2)
            .all(|w| (w[0].1 - w[0].0, w[0].0) <= (w[1].1 - w[1].0, w[1].0)));
    }
}
