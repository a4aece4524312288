//! Trapped-ion coupling synthesis.
//!
//! Transverse phonon modes of a linear Coulomb crystal, Mølmer-Sørensen
//! couplings `J_ij = Σ_k η_ik η_jk Ω_i Ω_j / (ω_L + μ − ω_k)` with
//! `η = 0.08·b`, the alternating beam-phase correction, per-beam amplitude
//! optimization and decay-profile fits. Frequencies are angular (rad/s).

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::CouplingMatrix;
use crate::optim::{levenberg_marquardt, LmOptions};

/// Lamb-Dicke scale multiplying the participation matrix.
pub const LAMB_DICKE: f64 = 0.08;
/// Default minimum `|ω_L + μ − ω_k|`.
pub const RESONANCE_FLOOR: f64 = 2.0 * PI * 1e3;
/// Default weight of the next-nearest-neighbour variance.
pub const NNN_WEIGHT: f64 = 0.25;

/// Ion mass and Coulomb constant `e²/(4πε₀)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonSpecies {
    pub mass: f64,
    pub coulomb: f64,
}

impl IonSpecies {
    /// ¹⁷¹Yb⁺.
    pub fn ytterbium171() -> Self {
        const AMU: f64 = 1.660_539_066_60e-27;
        const E: f64 = 1.602_176_634e-19;
        const KE: f64 = 8.987_551_792_3e9;
        Self {
            mass: 171.0 * AMU,
            coulomb: KE * E * E,
        }
    }
}

/// Transverse normal modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeData {
    /// Angular frequencies, descending.
    pub frequencies: Vec<f64>,
    /// Participation `b[i][k]` of ion `i` in mode `k`; columns orthonormal.
    pub participation: Vec<Vec<f64>>,
}

impl ModeData {
    pub fn n_ions(&self) -> usize {
        self.participation.len()
    }

    pub fn n_modes(&self) -> usize {
        self.frequencies.len()
    }

    /// Frequency of the lowest (zig-zag) mode.
    pub fn zigzag_frequency(&self) -> f64 {
        *self.frequencies.last().expect("at least one mode")
    }

    /// Largest deviation of `bᵀb` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n_modes();
        let mut worst = 0.0f64;
        for a in 0..n {
            for c in 0..n {
                let dot: f64 = self.participation.iter().map(|row| row[a] * row[c]).sum();
                let want = if a == c { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// CSV with one row per mode: `mode,omega_rad_per_s,b_0,…`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["mode".to_string(), "omega_rad_per_s".to_string()];
        header.extend((0..self.n_ions()).map(|i| format!("b_{i}")));
        wr.write_record(&header)?;
        for (k, &om) in self.frequencies.iter().enumerate() {
            let mut rec = vec![k.to_string(), format!("{om}")];
            rec.extend(self.participation.iter().map(|row| format!("{}", row[k])));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let n_ions = rd.headers()?.len().saturating_sub(2);
        let mut frequencies = Vec::new();
        let mut columns: Vec<Vec<f64>> = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Config {
                    message: format!("bad number `{s}`"),
                    field: None,
                    line: Some(k + 2),
                })
            };
            frequencies.push(parse(&rec[1])?);
            columns.push(
                (0..n_ions)
                    .map(|i| parse(&rec[i + 2]))
                    .collect::<Result<_>>()?,
            );
        }
        let participation = (0..n_ions)
            .map(|i| columns.iter().map(|col| col[i]).collect())
            .collect();
        Ok(Self {
            frequencies,
            participation,
        })
    }
}

/// Per-beam Rabi frequencies and phase signs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamProfile {
    /// Carrier Rabi frequency per addressed ion (rad/s).
    pub omega: Vec<f64>,
    /// ±1 per beam; a π phase shift flips the sign.
    pub phase_flip: Vec<i8>,
}

impl BeamProfile {
    pub fn uniform(n: usize, omega: f64) -> Self {
        Self {
            omega: vec![omega; n],
            phase_flip: vec![1; n],
        }
    }

    /// Alternating phase signs: every other beam shifted by π.
    pub fn alternating(omega: Vec<f64>) -> Self {
        let phase_flip = (0..omega.len())
            .map(|i| if i % 2 == 0 { 1 } else { -1 })
            .collect();
        Self { omega, phase_flip }
    }
}

/// Evenly spaced positions centred on zero.
pub fn uniform_positions(n: usize, spacing: f64) -> Vec<f64> {
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n).map(|i| (i as f64 - mid) * spacing).collect()
}

fn check_positions(positions: &[f64]) -> Result<()> {
    if positions.len() < 2 {
        return Err(Error::DegenerateGeometry("need at least two ions".into()));
    }
    for (i, w) in positions.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::DegenerateGeometry(format!(
                "positions {i} and {} are not strictly increasing",
                i + 1
            )));
        }
    }
    Ok(())
}

fn transverse_hessian(positions: &[f64], omega_x: f64, ion: IonSpecies) -> Vec<f64> {
    let n = positions.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = omega_x * omega_x;
        for j in 0..n {
            if i != j {
                let c = ion.coulomb / (ion.mass * (positions[i] - positions[j]).abs().powi(3));
                k[i * n + j] = c;
                k[i * n + i] -= c;
            }
        }
    }
    k
}

/// Transverse modes for ions at `positions` (m) in a trap whose transverse
/// centre-of-mass frequency is `omega_x`.
pub fn transverse_modes(positions: &[f64], omega_x: f64, ion: IonSpecies) -> Result<ModeData> {
    check_positions(positions)?;
    let n = positions.len();
    let hess = transverse_hessian(positions, omega_x, ion);
    let eig = linalg::symmetric_eigen(&hess, n)?;
    if eig.values[0] <= 0.0 {
        return Err(Error::DegenerateGeometry(
            "transverse confinement too weak: linear chain unstable".into(),
        ));
    }
    // Ascending eigenvalues; report descending frequencies.
    let order: Vec<usize> = (0..n).rev().collect();
    let frequencies = order.iter().map(|&k| eig.values[k].sqrt()).collect();
    let participation = (0..n)
        .map(|i| {
            order
                .iter()
                .map(|&k| {
                    // Fix the sign so the first nonzero entry of each mode is positive.
                    let col = eig.vector(k);
                    let lead = col.iter().find(|v| v.abs() > 1e-12).copied().unwrap_or(1.0);
                    eig.component(i, k) * lead.signum()
                })
                .collect()
        })
        .collect();
    Ok(ModeData {
        frequencies,
        participation,
    })
}

/// Transverse trap frequency that places the zig-zag mode at `omega_zigzag`.
pub fn radial_frequency_for_zigzag(
    positions: &[f64],
    omega_zigzag: f64,
    ion: IonSpecies,
) -> Result<f64> {
    check_positions(positions)?;
    let n = positions.len();
    let lowest = |wx: f64| -> Result<f64> {
        let ev = linalg::symmetric_eigenvalues(&transverse_hessian(positions, wx, ion), n)?;
        Ok(ev[0].max(0.0).sqrt())
    };
    let mut lo = omega_zigzag;
    let mut hi = 2.0 * omega_zigzag;
    while lowest(hi)? < omega_zigzag {
        hi *= 2.0;
        if hi > 1e6 * omega_zigzag {
            return Err(Error::DegenerateGeometry(
                "no trap frequency reaches the target".into(),
            ));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lowest(mid)? < omega_zigzag {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Coupling matrix over the `active` ions. `mu` is the detuning from the
/// zig-zag mode, so the drive sits at `ω_zz + μ`.
pub fn jij_from_modes(
    modes: &ModeData,
    beams: &BeamProfile,
    mu: f64,
    active: &[usize],
    resonance_floor: f64,
) -> Result<CouplingMatrix> {
    if beams.omega.len() != active.len() {
        return Err(Error::Dimension(format!(
            "{} beams for {} active ions",
            beams.omega.len(),
            active.len()
        )));
    }
    if let Some(&bad) = active.iter().find(|&&i| i >= modes.n_ions()) {
        return Err(Error::Dimension(format!(
            "active ion {bad} outside the chain"
        )));
    }
    let drive = modes.zigzag_frequency() + mu;
    let mut inv_detuning = Vec::with_capacity(modes.n_modes());
    for (k, &om) in modes.frequencies.iter().enumerate() {
        let d = drive - om;
        if d.abs() < resonance_floor {
            return Err(Error::Resonance {
                mode: k,
                detuning: d.abs(),
                floor: resonance_floor,
            });
        }
        inv_detuning.push(1.0 / d);
    }
    let n = active.len();
    let mut j = CouplingMatrix::zeros(n);
    for a in 0..n {
        for c in a + 1..n {
            let (ia, ic) = (active[a], active[c]);
            let mut s = 0.0;
            for (k, inv) in inv_detuning.iter().enumerate() {
                s += modes.participation[ia][k] * modes.participation[ic][k] * inv;
            }
            let v = LAMB_DICKE * LAMB_DICKE * beams.omega[a] * beams.omega[c] * s;
            j.set(a, c, v);
        }
    }
    Ok(j)
}

/// `J'_ij = (−1)^i (−1)^j J_ij`.
pub fn stagger_correction(j: &CouplingMatrix) -> CouplingMatrix {
    apply_phase_flips(
        j,
        &(0..j.dim())
            .map(|i| if i % 2 == 0 { 1 } else { -1 })
            .collect::<Vec<_>>(),
    )
}

/// `J'_ij = f_i f_j J_ij`.
pub fn apply_phase_flips(j: &CouplingMatrix, flips: &[i8]) -> CouplingMatrix {
    let n = j.dim();
    let mut out = CouplingMatrix::zeros(n);
    for a in 0..n {
        for c in a + 1..n {
            out.set(a, c, f64::from(flips[a] * flips[c]) * j.get(a, c));
        }
    }
    out
}

/// Outcome of [`optimize_amplitudes`].
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeOptimization {
    /// Optimized amplitudes with alternating phase signs.
    pub beams: BeamProfile,
    /// Phase-corrected couplings at the optimum.
    pub couplings: CouplingMatrix,
    /// Objective `Σ(J_NN − target)² + w·Var(J_NNN)` in units of `target²`.
    pub objective: f64,
    /// Objective after each accepted iteration.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// Mean, relative standard deviation of the nearest-neighbour couplings and
/// the mean next-nearest over mean nearest-neighbour ratio.
pub fn coupling_statistics(j: &CouplingMatrix) -> (f64, f64, f64) {
    let n = j.dim();
    let nn: Vec<f64> = (0..n.saturating_sub(1)).map(|i| j.get(i, i + 1)).collect();
    let nnn: Vec<f64> = (0..n.saturating_sub(2)).map(|i| j.get(i, i + 2)).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let m1 = mean(&nn);
    let sd = (nn.iter().map(|x| (x - m1).powi(2)).sum::<f64>() / nn.len().max(1) as f64).sqrt();
    let m2 = mean(&nnn);
    (m1, sd / m1.abs(), m2 / m1)
}

/// Finds per-beam amplitudes making the phase-corrected nearest-neighbour
/// couplings uniform at `|target_nn|` while flattening the next-nearest ones.
pub fn optimize_amplitudes(
    modes: &ModeData,
    mu: f64,
    target_nn: f64,
    active: &[usize],
    nnn_weight: f64,
) -> Result<AmplitudeOptimization> {
    let n = active.len();
    if n < 2 {
        return Err(Error::Dimension("need at least two active ions".into()));
    }
    let target = target_nn.abs();
    let corrected = |omega: &[f64]| -> Result<CouplingMatrix> {
        let beams = BeamProfile::alternating(omega.to_vec());
        let raw = jij_from_modes(modes, &beams, mu, active, RESONANCE_FLOOR)?;
        Ok(apply_phase_flips(&raw, &beams.phase_flip))
    };
    // Scale uniform amplitudes so the mean nearest-neighbour coupling hits
    // the target; J is quadratic in Ω.
    let unit = corrected(&vec![1.0; n])?;
    let (m1, _, _) = coupling_statistics(&unit);
    if m1 == 0.0 {
        return Err(Error::DegenerateGeometry(
            "nearest-neighbour coupling vanishes".into(),
        ));
    }
    let omega_ref = (target / m1.abs()).sqrt();
    let sign = m1.signum();

    let residuals = |x: &[f64]| -> Vec<f64> {
        let omega: Vec<f64> = x.iter().map(|v| v * omega_ref).collect();
        let Ok(j) = corrected(&omega) else {
            return vec![f64::NAN; 2 * n - 3];
        };
        let mut r: Vec<f64> = (0..n - 1)
            .map(|i| (j.get(i, i + 1) - sign * target) / target)
            .collect();
        if n > 2 {
            let nnn: Vec<f64> = (0..n - 2).map(|i| j.get(i, i + 2)).collect();
            let mean = nnn.iter().sum::<f64>() / nnn.len() as f64;
            let w = (nnn_weight / nnn.len() as f64).sqrt();
            r.extend(nnn.iter().map(|v| w * (v - mean) / target));
        }
        r
    };

    let x0 = vec![1.0; n];
    let (x, objective, history, iterations) = if n == 2 {
        let obj: f64 = residuals(&x0).iter().map(|v| v * v).sum();
        (x0, obj, vec![obj], 0)
    } else {
        let fit = levenberg_marquardt(
            residuals,
            &x0,
            LmOptions {
                max_iterations: 300,
                ftol: 1e-12,
                ..LmOptions::default()
            },
        )?;
        if !fit.converged {
            return Err(Error::NoConvergence {
                iterations: fit.iterations,
                objective: fit.objective,
                best: fit.params.iter().map(|v| v.abs() * omega_ref).collect(),
            });
        }
        (fit.params, fit.objective, fit.history, fit.iterations)
    };
    // J depends on Ω_iΩ_j; a global sign is irrelevant, so report Ω ≥ 0.
    let sign_fix = if x.iter().sum::<f64>() < 0.0 {
        -1.0
    } else {
        1.0
    };
    let omega: Vec<f64> = x.iter().map(|v| sign_fix * v * omega_ref).collect();
    if omega.iter().any(|&o| o < 0.0) {
        return Err(Error::NoConvergence {
            iterations,
            objective,
            best: omega,
        });
    }
    let couplings = corrected(&omega)?;
    Ok(AmplitudeOptimization {
        beams: BeamProfile::alternating(omega),
        couplings,
        objective,
        history,
        iterations,
    })
}

/// `(1/(L−r)) Σ_i |J_{i,i+r}|` for `r = 1..L−1`.
pub fn range_averaged(j: &CouplingMatrix) -> Vec<f64> {
    let n = j.dim();
    (1..n)
        .map(|r| (0..n - r).map(|i| j.get(i, i + r).abs()).sum::<f64>() / (n - r) as f64)
        .collect()
}

/// Parameters of `J_r = J e^{−β(r−1)} r^{−α}`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileFit {
    pub j: f64,
    pub beta: f64,
    pub alpha: f64,
    /// RMS deviation of the range averages from the fitted profile.
    pub residual: f64,
}

/// Least-squares fit of the decay profile to the range-averaged couplings.
///
/// A log-linear regression seeds a Levenberg-Marquardt fit on the averages
/// themselves.
pub fn fit_profile(j: &CouplingMatrix) -> Result<ProfileFit> {
    let p = range_averaged(j);
    if p.len() < 3 {
        return Err(Error::IllConditioned(format!(
            "{} ranges cannot determine three parameters",
            p.len()
        )));
    }
    if p.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::IllConditioned(
            "range average is not positive".into(),
        ));
    }
    let rs: Vec<f64> = (1..=p.len()).map(|r| r as f64).collect();
    // log p = c − β(r−1) − α log r, linear in (c, β, α).
    let cols = |r: f64| [1.0, -(r - 1.0), -r.ln()];
    let mut ata = [0.0; 9];
    let mut atb = [0.0; 3];
    for (&r, &v) in rs.iter().zip(&p) {
        let c = cols(r);
        for a in 0..3 {
            atb[a] += c[a] * v.ln();
            for b in 0..3 {
                ata[a * 3 + b] += c[a] * c[b];
            }
        }
    }
    let seed = linalg::solve(&ata, 3, &atb)?;
    let scale = p[0];
    let model = |x: &[f64], r: f64| x[0] * (-x[1] * (r - 1.0)).exp() * r.powf(-x[2]);
    let fit = levenberg_marquardt(
        |x| {
            rs.iter()
                .zip(&p)
                .map(|(&r, &v)| (model(x, r) - v) / scale)
                .collect()
        },
        &[seed[0].exp(), seed[1], seed[2]],
        LmOptions::default(),
    )?;
    let x = fit.params;
    let residual = (rs
        .iter()
        .zip(&p)
        .map(|(&r, &v)| (model(&x, r) - v).powi(2))
        .sum::<f64>()
        / p.len() as f64)
        .sqrt();
    Ok(ProfileFit {
        j: x[0],
        beta: x[1],
        alpha: x[2],
        residual,
    })
}

/// Writes a coupling matrix row-major with a units header.
pub fn write_coupling_csv<W: Write>(j: &CouplingMatrix, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record((0..j.dim()).map(|c| format!("J_{c}[rad/s]")))?;
    for r in 0..j.dim() {
        wr.write_record((0..j.dim()).map(|c| format!("{}", j.get(r, c))))?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_coupling_csv<R: Read>(r: R) -> Result<CouplingMatrix> {
    let mut rd = csv::Reader::from_reader(r);
    let n = rd.headers()?.len();
    let mut data = Vec::with_capacity(n * n);
    for (k, rec) in rd.records().enumerate() {
        let rec = rec?;
        if rec.len() != n {
            return Err(Error::Config {
                message: format!("row has {} entries, expected {n}", rec.len()),
                field: None,
                line: Some(k + 2),
            });
        }
        for s in rec.iter() {
            data.push(s.parse::<f64>().map_err(|_| Error::Config {
                message: format!("bad number `{s}`"),
                field: None,
                line: Some(k + 2),
            })?);
        }
    }
    CouplingMatrix::from_row_major(n, data)
}

/// The calibration used by the experiment: 15 ions at 3.75 μm spacing, the
/// zig-zag mode at 2π·2.78 MHz, detuning −2π·35 kHz, the inner 13 ions
/// addressed.
#[derive(Debug, Clone, Serialize)]
pub struct CalibrationReport {
    pub n_ions: usize,
    pub spacing_m: f64,
    pub omega_x: f64,
    pub omega_zigzag: f64,
    pub mu: f64,
    pub active: Vec<usize>,
    pub mode_frequencies: Vec<f64>,
    pub beams: BeamProfile,
    pub couplings: CouplingMatrix,
    pub range_profile: Vec<f64>,
    pub fit: ProfileFit,
    pub nn_mean: f64,
    pub nn_relative_spread: f64,
    pub nnn_over_nn: f64,
    pub objective_history: Vec<f64>,
}

pub fn calibrate_default() -> Result<CalibrationReport> {
    let n_ions = 15;
    let spacing = 3.75e-6;
    let omega_zigzag = 2.0 * PI * 2.78e6;
    let mu = -2.0 * PI * 35e3;
    let target = 2.0 * PI * 0.34e3;
    let ion = IonSpecies::ytterbium171();
    let positions = uniform_positions(n_ions, spacing);
    let omega_x = radial_frequency_for_zigzag(&positions, omega_zigzag, ion)?;
    let modes = transverse_modes(&positions, omega_x, ion)?;
    let active: Vec<usize> = (1..n_ions - 1).collect();
    let opt = optimize_amplitudes(&modes, mu, target, &active, NNN_WEIGHT)?;
    let fit = fit_profile(&opt.couplings)?;
    let (nn_mean, nn_relative_spread, nnn_over_nn) = coupling_statistics(&opt.couplings);
    Ok(CalibrationReport {
        n_ions,
        spacing_m: spacing,
        omega_x,
        omega_zigzag: modes.zigzag_frequency(),
        mu,
        active,
        mode_frequencies: modes.frequencies.clone(),
        range_profile: range_averaged(&opt.couplings),
        beams: opt.beams,
        couplings: opt.couplings,
        fit,
        nn_mean,
        nn_relative_spread,
        nnn_over_nn,
        objective_history: opt.history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::exp_profile;

    fn paper_modes() -> ModeData {
        let ion = IonSpecies::ytterbium171();
        let pos = uniform_positions(15, 3.75e-6);
        let wx = radial_frequency_for_zigzag(&pos, 2.0 * PI * 2.78e6, ion).unwrap();
        transverse_modes(&pos, wx, ion).unwrap()
    }

    #[test]
    fn two_ion_modes() {
        let ion = IonSpecies::ytterbium171();
        let m = transverse_modes(&[-2e-6, 2e-6], 2.0 * PI * 3e6, ion).unwrap();
        assert_eq!(m.n_modes(), 2);
        let s = 1.0 / 2f64.sqrt();
        assert!((m.participation[0][0] - s).abs() < 1e-12);
        assert!((m.participation[1][0] - s).abs() < 1e-12);
        assert!((m.frequencies[0] - 2.0 * PI * 3e6).abs() < 1e-6);
        assert!(m.frequencies[0] > m.frequencies[1]);
    }

    #[test]
    fn degenerate_geometry_rejected() {
        let ion = IonSpecies::ytterbium171();
        assert!(matches!(
            transverse_modes(&[0.0, 0.0, 1e-6], 1e7, ion),
            Err(Error::DegenerateGeometry(_))
        ));
        assert!(matches!(
            transverse_modes(&[0.0], 1e7, ion),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn zigzag_mode_alternates_and_basis_orthonormal() {
        let m = paper_modes();
        assert!((m.zigzag_frequency() - 2.0 * PI * 2.78e6).abs() < 1e-3);
        assert!(m.orthonormality_error() < 1e-10);
        let last = m.n_modes() - 1;
        for i in 0..m.n_ions() - 1 {
            assert!(m.participation[i][last] * m.participation[i + 1][last] < 0.0);
        }
        // Residual of the eigenproblem.
        let pos = uniform_positions(15, 3.75e-6);
        let wx = radial_frequency_for_zigzag(&pos, 2.0 * PI * 2.78e6, IonSpecies::ytterbium171())
            .unwrap();
        let h = transverse_hessian(&pos, wx, IonSpecies::ytterbium171());
        let n = 15;
        for k in 0..n {
            let w2 = m.frequencies[k].powi(2);
            let res: f64 = (0..n)
                .map(|i| {
                    let hb: f64 = (0..n).map(|j| h[i * n + j] * m.participation[j][k]).sum();
                    (hb - w2 * m.participation[i][k]).powi(2)
                })
                .sum::<f64>()
                .sqrt();
            assert!(res / w2 < 1e-9, "mode {k}: {res}");
        }
    }

    #[test]
    fn zero_amplitudes_zero_matrix_and_symmetry() {
        let m = paper_modes();
        let active: Vec<usize> = (1..14).collect();
        let mu = -2.0 * PI * 35e3;
        let z = jij_from_modes(
            &m,
            &BeamProfile::uniform(13, 0.0),
            mu,
            &active,
            RESONANCE_FLOOR,
        )
        .unwrap();
        assert!(z.as_row_major().iter().all(|&v| v == 0.0));
        let omega: Vec<f64> = (0..13).map(|i| 1e5 * (1.0 + 0.1 * i as f64)).collect();
        let beams = BeamProfile {
            omega: omega.clone(),
            phase_flip: vec![1; 13],
        };
        let j = jij_from_modes(&m, &beams, mu, &active, RESONANCE_FLOOR).unwrap();
        for a in 0..13 {
            for c in 0..13 {
                assert_eq!(j.get(a, c), j.get(c, a));
            }
        }
        let scaled = BeamProfile {
            omega: omega.iter().map(|o| 3.0 * o).collect(),
            phase_flip: vec![1; 13],
        };
        let j3 = jij_from_modes(&m, &scaled, mu, &active, RESONANCE_FLOOR).unwrap();
        for (a, b) in j3.as_row_major().iter().zip(j.as_row_major()) {
            assert!((a - 9.0 * b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn resonance_detected() {
        let m = paper_modes();
        let mu = m.frequencies[5] - m.zigzag_frequency() + 10.0;
        let r = jij_from_modes(
            &m,
            &BeamProfile::uniform(13, 1e5),
            mu,
            &(1..14).collect::<Vec<_>>(),
            RESONANCE_FLOOR,
        );
        assert!(matches!(r, Err(Error::Resonance { mode: 5, .. })));
    }

    #[test]
    fn stagger_properties() {
        let mut checker = CouplingMatrix::zeros(5);
        for a in 0..5 {
            for c in a + 1..5 {
                let s = if (a + c) % 2 == 0 { 1.0 } else { -1.0 };
                checker.set(a, c, s * (1.0 + (c - a) as f64));
            }
        }
        let fixed = stagger_correction(&checker);
        assert!(fixed.as_row_major().iter().all(|&v| v >= 0.0));
        assert_eq!(stagger_correction(&fixed), checker);
        let e1 = linalg::symmetric_eigenvalues(checker.as_row_major(), 5).unwrap();
        let e2 = linalg::symmetric_eigenvalues(fixed.as_row_major(), 5).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn raw_couplings_are_staggered() {
        let m = paper_modes();
        let j = jij_from_modes(
            &m,
            &BeamProfile::uniform(13, 1e5),
            -2.0 * PI * 35e3,
            &(1..14).collect::<Vec<_>>(),
            RESONANCE_FLOOR,
        )
        .unwrap();
        for i in 0..11 {
            assert!(j.get(i, i + 1) * j.get(i, i + 2) < 0.0);
        }
    }

    #[test]
    fn two_active_ions_exact() {
        let m = paper_modes();
        let opt = optimize_amplitudes(&m, -2.0 * PI * 35e3, 2.0 * PI * 340.0, &[6, 7], NNN_WEIGHT)
            .unwrap();
        assert!(opt.objective < 1e-24);
        assert!((opt.couplings.get(0, 1).abs() - 2.0 * PI * 340.0).abs() < 1e-9);
    }

    #[test]
    fn fit_recovers_exponential() {
        let f = fit_profile(&exp_profile(2.0, 0.78, 13)).unwrap();
        assert!((f.beta - 0.78).abs() < 1e-6);
        assert!(f.alpha.abs() < 1e-6);
        assert!((f.j - 2.0).abs() < 1e-6);
    }

    #[test]
    fn fit_recovers_power_law_and_scales() {
        let m = CouplingMatrix::from_range_fn(13, |r| 1.5 * (r as f64).powf(-1.3));
        let f = fit_profile(&m).unwrap();
        assert!((f.alpha - 1.3).abs() < 1e-6);
        assert!(f.beta.abs() < 1e-6);
        let g = fit_profile(&m.scaled(-4.0)).unwrap();
        assert!((g.j - 4.0 * f.j).abs() < 1e-6 * f.j);
        assert!((g.alpha - f.alpha).abs() < 1e-8 && (g.beta - f.beta).abs() < 1e-8);
    }

    #[test]
    fn fit_needs_three_ranges() {
        assert!(matches!(
            fit_profile(&exp_profile(1.0, 0.5, 3)),
            Err(Error::IllConditioned(_))
        ));
    }

    #[test]
    fn csv_round_trips() {
        let m = paper_modes();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        assert_eq!(ModeData::read_csv(buf.as_slice()).unwrap(), m);
        let j = exp_profile(2.0 * PI * 340.0, 0.78, 5);
        let mut buf = Vec::new();
        write_coupling_csv(&j, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("J_0[rad/s]"));
        assert_eq!(read_coupling_csv(buf.as_slice()).unwrap(), j);
    }
}
