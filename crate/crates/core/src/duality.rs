//! State-level correspondence between gauge-invariant Z2 lattice gauge theory
//! configurations and Ising spins, plus a small-system spectral oracle.
//!
//! Links carry the electric field `n_l = (1 − σᶻ_l)/2`; matter site `l` sits
//! between links `l` and `l+1`. Gauss's law fixes the occupation of every
//! site to `n_l ⊕ n_{l+1}`, so a charge is a kink in the spin chain.
//!
//! The oracle uses a finite open chain: `L_sites` matter sites, links
//! `0..=L_sites`, the two boundary links fixed, and all-up spins beyond them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    brute_force_virtual_field, CouplingMatrix, ExpProfile, HamiltonianSpec, IsingOperator,
    SpinConfiguration, Tail, TailKind,
};

/// Largest chain accepted by [`enumerate_gauge_sector`].
pub const MAX_ENUMERATION_SITES: usize = 14;
/// Largest chain accepted by [`build_lgt_hamiltonian`].
pub const MAX_LGT_SITES: usize = 12;

/// Matter occupations and link fields of a gauge configuration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaugeConfig {
    #[serde(rename = "occupations")]
    pub fermion_occupations: Vec<u8>,
    #[serde(rename = "links")]
    pub link_fields: Vec<u8>,
}

impl GaugeConfig {
    /// Number of matter sites.
    pub fn sites(&self) -> usize {
        self.fermion_occupations.len()
    }

    pub fn charge_count(&self) -> usize {
        self.fermion_occupations.iter().filter(|&&c| c == 1).count()
    }

    /// Checks lengths, binary values and `G_l = +1` at every site.
    pub fn check_gauss(&self) -> Result<()> {
        if self.link_fields.len() != self.fermion_occupations.len() + 1 {
            return Err(Error::Dimension(format!(
                "{} links for {} matter sites",
                self.link_fields.len(),
                self.fermion_occupations.len()
            )));
        }
        if self
            .link_fields
            .iter()
            .chain(&self.fermion_occupations)
            .any(|&v| v > 1)
        {
            return Err(Error::Dimension(
                "occupations and links must be 0 or 1".into(),
            ));
        }
        for (site, &c) in self.fermion_occupations.iter().enumerate() {
            if (self.link_fields[site] + self.link_fields[site + 1] + c) % 2 != 0 {
                return Err(Error::GaussViolation { site });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    fn from_links(links: Vec<u8>) -> Self {
        let occ = links.windows(2).map(|w| w[0] ^ w[1]).collect();
        Self {
            fermion_occupations: occ,
            link_fields: links,
        }
    }
}

/// Couplings of the lattice gauge theory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LgtParams {
    /// Minimal coupling between matter and gauge fields.
    pub g: f64,
    /// Rest mass.
    pub m: f64,
    /// Uniform electric-field cost per excited link.
    pub kappa: f64,
    /// Field self-interaction; entry `k` is range `r = k + 2`.
    pub v_r: Vec<f64>,
}

impl LgtParams {
    /// Self-interaction at range `r` (zero for `r < 2` and beyond truncation).
    pub fn v(&self, r: usize) -> f64 {
        if r < 2 {
            0.0
        } else {
            self.v_r.get(r - 2).copied().unwrap_or(0.0)
        }
    }
}

fn window_depth(tail: &Tail) -> usize {
    if tail.is_open() {
        0
    } else {
        2.max(tail.prefix.len() + 1)
    }
}

/// Maps spins (dynamical plus static neighbours) to links and charges.
///
/// The window includes at least two static spins on each non-open side, so
/// charges pinned by the environment are visible.
pub fn spins_to_gauge(spins: &SpinConfiguration) -> GaugeConfig {
    let depth = window_depth(&spins.left).max(window_depth(&spins.right));
    let links = spins
        .window(depth)
        .into_iter()
        .map(|s| u8::from(s < 0))
        .collect();
    GaugeConfig::from_links(links)
}

/// Reconstructs a spin chain from the charges, fixing the leftmost spin.
///
/// The result has open tails and one spin per link. When `leftmost_spin`
/// matches the first link this inverts [`spins_to_gauge`]; the other choice
/// gives the global flip, which carries the same charges.
pub fn gauge_to_spins(gauge: &GaugeConfig, leftmost_spin: i8) -> Result<SpinConfiguration> {
    gauge.check_gauss()?;
    if leftmost_spin != 1 && leftmost_spin != -1 {
        return Err(Error::Dimension(format!(
            "leftmost spin must be ±1, got {leftmost_spin}"
        )));
    }
    let mut spins = Vec::with_capacity(gauge.link_fields.len());
    spins.push(leftmost_spin);
    for &c in &gauge.fermion_occupations {
        let prev = *spins.last().expect("non-empty");
        spins.push(if c == 1 { -prev } else { prev });
    }
    Ok(SpinConfiguration::open(spins))
}

/// All Gauss-valid configurations on `l_sites` matter sites with fixed
/// boundary links, in lexicographic order of the link vector.
pub fn enumerate_gauge_sector(
    l_sites: usize,
    boundary_links: (u8, u8),
) -> Result<Vec<GaugeConfig>> {
    if l_sites > MAX_ENUMERATION_SITES {
        return Err(Error::SizeLimit {
            what: "L_sites (enumeration)",
            got: l_sites,
            max: MAX_ENUMERATION_SITES,
        });
    }
    if l_sites == 0 {
        return Err(Error::Dimension("need at least one matter site".into()));
    }
    if boundary_links.0 > 1 || boundary_links.1 > 1 {
        return Err(Error::Dimension("boundary links must be 0 or 1".into()));
    }
    let interior = l_sites - 1;
    Ok((0..1usize << interior)
        .map(|mask| {
            let mut links = Vec::with_capacity(l_sites + 1);
            links.push(boundary_links.0);
            for k in 0..interior {
                links.push((mask >> (interior - 1 - k) & 1) as u8);
            }
            links.push(boundary_links.1);
            GaugeConfig::from_links(links)
        })
        .collect())
}

/// Gauge-theory couplings equivalent to an Ising chain with range profile
/// `j_profile = [J_1, J_2, …]` and field `h`.
///
/// `m = 2J_1`, `v_r = 4J_r` and `κ = 2h + Σ_{r≥2} v_r`: every link pairs with
/// partners on both sides, so each range contributes `4J_r` to the cost of an
/// excited link.
pub fn parameter_dictionary(j_profile: &[f64], h: f64, g: f64) -> Result<LgtParams> {
    let j1 = *j_profile
        .first()
        .ok_or_else(|| Error::InvalidProfile("empty profile".into()))?;
    if !(j1 > 0.0) {
        return Err(Error::InvalidProfile(format!(
            "J_1 = {j1} must be positive"
        )));
    }
    if j_profile.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidProfile("non-finite coupling".into()));
    }
    let v_r: Vec<f64> = j_profile[1..].iter().map(|j| 4.0 * j).collect();
    // Sum smallest first.
    let kappa = 2.0 * h + v_r.iter().rev().sum::<f64>();
    Ok(LgtParams {
        g,
        m: 2.0 * j1,
        kappa,
        v_r,
    })
}

/// `[J_1, …, J_R]` truncated where `J_r < 1e−12·J_1`.
pub fn truncated_profile(profile: ExpProfile) -> Vec<f64> {
    (1..=profile.truncation_range())
        .map(|r| profile.at(r))
        .collect()
}

/// Classical energy of a configuration: mass, electric cost and field
/// self-interaction over every link of the window.
pub fn lgt_diagonal_energy(params: &LgtParams, config: &GaugeConfig) -> f64 {
    let links = &config.link_fields;
    let mut e = params.m * config.charge_count() as f64;
    e += params.kappa * links.iter().filter(|&&n| n == 1).count() as f64;
    for a in 0..links.len() {
        if links[a] == 0 {
            continue;
        }
        for b in a + 2..links.len() {
            if links[b] == 1 {
                e -= params.v(b - a);
            }
        }
    }
    e
}

/// Dense Hamiltonian on a gauge sector, row-major.
///
/// Flipping one interior link moves a charge across it, creates a pair or
/// annihilates one, each with amplitude `−g`.
pub fn build_lgt_hamiltonian(params: &LgtParams, sector: &[GaugeConfig]) -> Result<Vec<f64>> {
    let Some(first) = sector.first() else {
        return Ok(Vec::new());
    };
    let l_sites = first.sites();
    if l_sites > MAX_LGT_SITES {
        return Err(Error::SizeLimit {
            what: "L_sites (gauge Hamiltonian)",
            got: l_sites,
            max: MAX_LGT_SITES,
        });
    }
    let index: HashMap<&[u8], usize> = sector
        .iter()
        .enumerate()
        .map(|(k, c)| (c.link_fields.as_slice(), k))
        .collect();
    let n = sector.len();
    let mut h = vec![0.0; n * n];
    for (k, cfg) in sector.iter().enumerate() {
        cfg.check_gauss()?;
        if cfg.sites() != l_sites {
            return Err(Error::Dimension("mixed chain lengths in sector".into()));
        }
        h[k * n + k] = lgt_diagonal_energy(params, cfg);
        let mut links = cfg.link_fields.clone();
        for l in 1..l_sites {
            links[l] ^= 1;
            if let Some(&k2) = index.get(links.as_slice()) {
                h[k * n + k2] = -params.g;
            }
            links[l] ^= 1;
        }
    }
    Ok(h)
}

/// Dual Ising spec for a gauge sector: interior links become `l_sites − 1`
/// dynamical spins, boundary links become the spins adjacent to all-up tails.
pub fn dual_ising_spec(
    profile: ExpProfile,
    g: f64,
    h: f64,
    l_sites: usize,
    boundary_links: (u8, u8),
) -> Result<HamiltonianSpec> {
    let l = l_sites
        .checked_sub(1)
        .filter(|&l| l > 0)
        .ok_or_else(|| Error::Dimension("need at least one interior link".into()))?;
    let truncated = truncated_profile(profile);
    let coupling = |r: usize| truncated.get(r.wrapping_sub(1)).copied().unwrap_or(0.0);
    let spin = |n: u8| if n == 1 { -1 } else { 1 };
    let config = SpinConfiguration {
        dynamical: vec![1; l],
        left: Tail::with_prefix(TailKind::AllUp, vec![spin(boundary_links.0)]),
        right: Tail::with_prefix(TailKind::AllUp, vec![spin(boundary_links.1)]),
    };
    let delta_h = brute_force_virtual_field(&config, coupling, 200);
    let couplings = CouplingMatrix::from_range_fn(l, coupling);
    HamiltonianSpec::new(couplings, g, h, delta_h)
}

/// Largest eigenvalue mismatch between the gauge-sector Hamiltonian and its
/// Ising dual, after shifting both spectra to zero ground energy.
pub fn spectral_mismatch(
    profile: ExpProfile,
    g: f64,
    h: f64,
    l_sites: usize,
    boundary_links: (u8, u8),
) -> Result<f64> {
    let params = parameter_dictionary(&truncated_profile(profile), h, g)?;
    let sector = enumerate_gauge_sector(l_sites, boundary_links)?;
    let n = sector.len();
    let lgt = linalg::symmetric_eigenvalues(&build_lgt_hamiltonian(&params, &sector)?, n)?;
    let spec = dual_ising_spec(profile, g, h, l_sites, boundary_links)?;
    let op = IsingOperator::new(&spec)?;
    let ising = linalg::symmetric_eigenvalues(&op.to_dense()?, op.dim())?;
    if ising.len() != lgt.len() {
        return Err(Error::Dimension(format!(
            "sector has {} states, dual chain {}",
            lgt.len(),
            ising.len()
        )));
    }
    Ok(lgt
        .iter()
        .zip(&ising)
        .map(|(a, b)| ((a - lgt[0]) - (b - ising[0])).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Environment;

    #[test]
    fn vacuum_has_no_charges() {
        let g = spins_to_gauge(&SpinConfiguration::open(vec![1; 6]));
        assert!(g.fermion_occupations.iter().all(|&c| c == 0));
        assert!(g.link_fields.iter().all(|&n| n == 0));
    }

    #[test]
    fn center_kink_is_one_charge() {
        let cfg = Environment::Charge.initial_configuration(13);
        let g = spins_to_gauge(&cfg);
        g.check_gauss().unwrap();
        // Window starts two static sites left of label -6, so matter site k
        // sits on bond label k - 7.
        let charged: Vec<i32> = g
            .fermion_occupations
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1)
            .map(|(k, _)| k as i32 - 7)
            .collect();
        assert_eq!(charged, vec![0]);
    }

    #[test]
    fn string_has_charges_at_both_ends() {
        let g = spins_to_gauge(&Environment::String.initial_configuration(13));
        let charged: Vec<i32> = g
            .fermion_occupations
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == 1)
            .map(|(k, _)| k as i32 - 7)
            .collect();
        assert_eq!(charged, vec![-7, 8]);
    }

    #[test]
    fn gauge_to_spins_trivial_cases() {
        let g = GaugeConfig::from_links(vec![0; 5]);
        assert_eq!(gauge_to_spins(&g, 1).unwrap().dynamical, vec![1; 5]);
        assert_eq!(gauge_to_spins(&g, -1).unwrap().dynamical, vec![-1; 5]);
    }

    #[test]
    fn gauss_violation_detected() {
        let bad = GaugeConfig {
            fermion_occupations: vec![1, 0],
            link_fields: vec![0, 0, 0],
        };
        assert!(matches!(
            gauge_to_spins(&bad, 1),
            Err(Error::GaussViolation { site: 0 })
        ));
    }

    #[test]
    fn exhaustive_round_trip_l8() {
        for idx in 0..256usize {
            let cfg = SpinConfiguration::from_index(idx, 8, Tail::open(), Tail::open());
            let gauge = spins_to_gauge(&cfg);
            gauge.check_gauss().unwrap();
            let back = gauge_to_spins(&gauge, cfg.dynamical[0]).unwrap();
            assert_eq!(back, cfg);
            let flipped = gauge_to_spins(&gauge, -cfg.dynamical[0]).unwrap();
            assert!(flipped
                .dynamical
                .iter()
                .zip(&cfg.dynamical)
                .all(|(a, b)| *a == -*b));
            assert_eq!(
                spins_to_gauge(&flipped).fermion_occupations,
                gauge.fermion_occupations
            );
        }
    }

    #[test]
    fn sector_counts() {
        assert_eq!(enumerate_gauge_sector(2, (0, 0)).unwrap().len(), 2);
        let s = enumerate_gauge_sector(4, (0, 1)).unwrap();
        assert_eq!(s.len(), 8);
        for c in &s {
            c.check_gauss().unwrap();
        }
        assert!(matches!(
            enumerate_gauge_sector(15, (0, 0)),
            Err(Error::SizeLimit { .. })
        ));
    }

    #[test]
    fn sector_matches_brute_force_filter() {
        let l_sites = 4;
        let mut brute = Vec::new();
        for occ in 0..1u32 << l_sites {
            for links in 0..1u32 << (l_sites + 1) {
                let c = GaugeConfig {
                    fermion_occupations: (0..l_sites).map(|k| (occ >> k & 1) as u8).collect(),
                    link_fields: (0..=l_sites).map(|k| (links >> k & 1) as u8).collect(),
                };
                if c.link_fields[0] == 1 && c.link_fields[l_sites] == 0 && c.check_gauss().is_ok() {
                    brute.push(c);
                }
            }
        }
        let mut sector = enumerate_gauge_sector(l_sites, (1, 0)).unwrap();
        brute.sort_by(|a, b| a.link_fields.cmp(&b.link_fields));
        sector.sort_by(|a, b| a.link_fields.cmp(&b.link_fields));
        assert_eq!(brute, sector);
    }

    #[test]
    fn charge_parity_fixed_by_boundary() {
        for b in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let want = (b.0 ^ b.1) as usize;
            for c in enumerate_gauge_sector(5, b).unwrap() {
                assert_eq!(c.charge_count() % 2, want);
            }
        }
    }

    #[test]
    fn dictionary_nearest_neighbour_limit() {
        let p = parameter_dictionary(&[1.0, 0.0, 0.0], 0.0, 0.2).unwrap();
        assert_eq!(p.m, 2.0);
        assert_eq!(p.kappa, 0.0);
        assert!(p.v_r.iter().all(|&v| v == 0.0));
        assert!(matches!(
            parameter_dictionary(&[0.0, 1.0], 0.0, 0.0),
            Err(Error::InvalidProfile(_))
        ));
    }

    #[test]
    fn dictionary_geometric_profile() {
        let b: f64 = 0.78;
        let p =
            parameter_dictionary(&truncated_profile(ExpProfile::new(1.0, b)), 0.5, 0.0).unwrap();
        assert_eq!(p.m, 2.0);
        let closed = 1.0 + 4.0 * (-b).exp() / (1.0 - (-b).exp());
        assert!((p.kappa - closed).abs() < 1e-11);
        assert!((p.v(2) - 4.0 * (-b).exp()).abs() < 1e-15);
    }

    #[test]
    fn g_zero_is_diagonal_with_classical_energies() {
        let params =
            parameter_dictionary(&truncated_profile(ExpProfile::new(1.0, 0.78)), 0.3, 0.0).unwrap();
        let sector = enumerate_gauge_sector(5, (0, 0)).unwrap();
        let h = build_lgt_hamiltonian(&params, &sector).unwrap();
        let n = sector.len();
        for r in 0..n {
            for c in 0..n {
                if r == c {
                    assert_eq!(h[r * n + c], lgt_diagonal_energy(&params, &sector[r]));
                } else {
                    assert_eq!(h[r * n + c], 0.0);
                }
            }
        }
    }

    #[test]
    fn single_fermion_block_is_tridiagonal() {
        let params = parameter_dictionary(&[1.0, 0.3], 0.2, 0.05).unwrap();
        let sector = enumerate_gauge_sector(6, (0, 1)).unwrap();
        let h = build_lgt_hamiltonian(&params, &sector).unwrap();
        let n = sector.len();
        // One-charge states ordered by kink position.
        let mut singles: Vec<(usize, usize)> = sector
            .iter()
            .enumerate()
            .filter(|(_, c)| c.charge_count() == 1)
            .map(|(k, c)| {
                (
                    c.fermion_occupations.iter().position(|&o| o == 1).unwrap(),
                    k,
                )
            })
            .collect();
        singles.sort();
        assert_eq!(singles.len(), 6);
        for (a, &(pa, ka)) in singles.iter().enumerate() {
            for (b, &(_, kb)) in singles.iter().enumerate() {
                let v = h[ka * n + kb];
                if a.abs_diff(b) == 1 {
                    assert_eq!(v, -0.05, "hop {pa}");
                } else if a != b {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn hermitian() {
        let params = parameter_dictionary(&[1.0, 0.4, 0.1], 0.2, 0.7).unwrap();
        let sector = enumerate_gauge_sector(6, (1, 1)).unwrap();
        let h = build_lgt_hamiltonian(&params, &sector).unwrap();
        let n = sector.len();
        for r in 0..n {
            for c in 0..n {
                assert_eq!(h[r * n + c], h[c * n + r]);
            }
        }
    }

    #[test]
    fn spectral_oracle_small() {
        for b in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let d = spectral_mismatch(ExpProfile::new(1.0, 0.78), 0.4, 0.3, 5, b).unwrap();
            assert!(d < 1e-10, "{b:?}: {d}");
        }
    }

    #[test]
    fn json_schema() {
        let g = GaugeConfig::from_links(vec![0, 1, 1]);
        let s = g.to_json().unwrap();
        assert_eq!(s, r#"{"occupations":[1,0],"links":[0,1,1]}"#);
        assert_eq!(GaugeConfig::from_json(&s).unwrap(), g);
    }
}
