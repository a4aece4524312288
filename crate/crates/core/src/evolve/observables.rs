//! Diagonal observables: electric field, charge density, net charge.
//!
//! Bond `b` (centered label) sits between spins `b−1` and `b`. Reported bonds
//! run from `i0−1` to `i0+L+1`, so two static spins per side enter and the
//! charges pinned at the ends of a string are visible.

use super::Wavefunction;
use crate::model::Tail;

/// Centered bond labels reported by [`charge_density`].
pub fn bond_labels(i0: i32, l: usize) -> Vec<i32> {
    (i0 - 1..=i0 + l as i32 + 1).collect()
}

/// `ε_i = ⟨σᶻ_i⟩` on every dynamical site.
pub fn electric_field(psi: &Wavefunction) -> Vec<f64> {
    let l = psi.sites();
    let mut eps = vec![0.0; l];
    for (s, a) in psi.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (i, e) in eps.iter_mut().enumerate() {
            if s >> i & 1 == 1 {
                *e -= p;
            } else {
                *e += p;
            }
        }
    }
    eps
}

/// `⟨σᶻ_i σᶻ_{i+1}⟩` for neighbouring dynamical sites.
pub fn nn_correlations(psi: &Wavefunction) -> Vec<f64> {
    let l = psi.sites();
    let mut c = vec![0.0; l.saturating_sub(1)];
    for (s, a) in psi.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        if p == 0.0 {
            continue;
        }
        for (i, ci) in c.iter_mut().enumerate() {
            if (s >> i ^ s >> (i + 1)) & 1 == 1 {
                *ci -= p;
            } else {
                *ci += p;
            }
        }
    }
    c
}

fn bond_from_static(a: i8, b: i8) -> f64 {
    if a == 0 || b == 0 {
        0.0
    } else {
        f64::from(1 - a * b) / 2.0
    }
}

fn bond_from_mixed(s: i8, eps: f64) -> f64 {
    if s == 0 {
        0.0
    } else {
        (1.0 - f64::from(s) * eps) / 2.0
    }
}

/// `q_b = (1 − ⟨σᶻ_{b−1}σᶻ_b⟩)/2` on bonds `i0−1..=i0+L+1`.
///
/// Bonds touching an open boundary report 0.
pub fn charge_density(psi: &Wavefunction, left: &Tail, right: &Tail) -> Vec<f64> {
    let eps = electric_field(psi);
    let corr = nn_correlations(psi);
    assemble(&eps, &corr, left, right)
}

pub(crate) fn assemble(eps: &[f64], corr: &[f64], left: &Tail, right: &Tail) -> Vec<f64> {
    let l = eps.len();
    let mut q = Vec::with_capacity(l + 3);
    q.push(bond_from_static(left.spin(1), left.spin(0)));
    q.push(bond_from_mixed(left.spin(0), eps[0]));
    q.extend(corr.iter().map(|c| (1.0 - c) / 2.0));
    q.push(bond_from_mixed(right.spin(0), eps[l - 1]));
    q.push(bond_from_static(right.spin(0), right.spin(1)));
    q
}

/// Charge density and electric field of a classical mixture given as
/// `(basis index, weight)` pairs with weights summing to one.
pub fn observables_from_weights(
    l: usize,
    weights: &[(usize, f64)],
    left: &Tail,
    right: &Tail,
) -> (Vec<f64>, Vec<f64>) {
    let mut eps = vec![0.0; l];
    let mut corr = vec![0.0; l.saturating_sub(1)];
    for &(s, p) in weights {
        for (i, e) in eps.iter_mut().enumerate() {
            *e += if s >> i & 1 == 1 { -p } else { p };
        }
        for (i, c) in corr.iter_mut().enumerate() {
            *c += if (s >> i ^ s >> (i + 1)) & 1 == 1 {
                -p
            } else {
                p
            };
        }
    }
    (assemble(&eps, &corr, left, right), eps)
}

/// Signed charge `ρ_b = (⟨σᶻ_{b−1}⟩ − ⟨σᶻ_b⟩)/2` on the same bonds; a kink
/// from up to down carries +1, the reverse −1. Open boundaries count as 0.
pub fn net_charge_density(psi: &Wavefunction, left: &Tail, right: &Tail) -> Vec<f64> {
    let fixed = |s: i8| (s != 0).then_some(f64::from(s));
    let eps = electric_field(psi);
    let mut z = Vec::with_capacity(eps.len() + 4);
    z.push(fixed(left.spin(1)));
    z.push(fixed(left.spin(0)));
    z.extend(eps.into_iter().map(Some));
    z.push(fixed(right.spin(0)));
    z.push(fixed(right.spin(1)));
    z.windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => (a - b) / 2.0,
            _ => 0.0,
        })
        .collect()
}
