//! Long-range Ising chain with site-resolved longitudinal fields.
//!
//! H = -Σ_{i<j} J_ij σᶻ_i σᶻ_j - Σ_i (h + Δh_i) σᶻ_i - g Σ_i σˣ_i
//!
//! Basis convention: bit `i` of a state index is 0 for spin up (σᶻ = +1) and
//! 1 for spin down. Internal site indices are 0-based; external labels are
//! centered, `label = i0 + index`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the number of dynamical spins.
pub const MAX_SITES: usize = 24;

/// Default centered label of the leftmost dynamical spin.
pub fn default_i0(l: usize) -> i32 {
    -((l as i32 - 1) / 2)
}

/// Exponentially decaying coupling profile `J_r = j·e^{-β(r-1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpProfile {
    pub j: f64,
    pub beta: f64,
}

impl ExpProfile {
    pub fn new(j: f64, beta: f64) -> Self {
        Self { j, beta }
    }

    /// Coupling at range `r ≥ 1`.
    pub fn at(&self, r: usize) -> f64 {
        if r == 0 {
            return 0.0;
        }
        self.j * (-self.beta * (r as f64 - 1.0)).exp()
    }

    /// Closed-form tail `Σ_{r≥a} J_r` for `a ≥ 1`.
    pub fn tail(&self, a: usize) -> f64 {
        let a = a.max(1);
        self.j * (-self.beta * (a as f64 - 1.0)).exp() / (1.0 - (-self.beta).exp())
    }

    /// Number of ranges kept before `J_r < 1e-12·J_1`.
    pub fn truncation_range(&self) -> usize {
        let mut r = 1;
        while r < 100_000 && self.at(r + 1).abs() >= 1e-12 * self.j.abs() {
            r += 1;
        }
        r
    }
}

/// Dense symmetric coupling matrix with zero diagonal, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    n: usize,
    data: Vec<f64>,
}

impl CouplingMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    /// Builds from row-major data; symmetry and zero diagonal are checked.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension(format!(
                "coupling matrix needs {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::InvalidProfile(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidProfile(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Self { n, data })
    }

    /// Translation-invariant matrix `J_ij = f(|i-j|)`.
    pub fn from_range_fn(n: usize, f: impl Fn(usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m.data[i * n + j] = f(i.abs_diff(j));
                }
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i,j)` and `(j,i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        if i != j {
            self.data[i * self.n + j] = v;
            self.data[j * self.n + i] = v;
        }
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// `J_ij = J e^{-β(|i-j|-1)}` on `l` sites.
pub fn exp_profile(j: f64, beta: f64, l: usize) -> CouplingMatrix {
    let p = ExpProfile::new(j, beta);
    CouplingMatrix::from_range_fn(l, |r| p.at(r))
}

/// Static environment surrounding the dynamical region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    /// Open chain, no static spins.
    None,
    /// All-up on the left, all-down on the right: one static kink is absent,
    /// the dynamical region hosts a single confined charge.
    Charge,
    /// All-up on both sides with a down spin adjacent to the chain: two static
    /// charges pinned at the ends of a string.
    String,
}

impl Environment {
    pub fn tails(self) -> (Tail, Tail) {
        match self {
            Environment::None => (Tail::open(), Tail::open()),
            Environment::Charge => (Tail::new(TailKind::AllUp), Tail::new(TailKind::AllDown)),
            Environment::String => (
                Tail::new(TailKind::UpWithEdgeDown),
                Tail::new(TailKind::UpWithEdgeDown),
            ),
        }
    }

    /// Virtual fields for this environment with an exponential profile.
    pub fn virtual_field(self, profile: ExpProfile, l: usize) -> Vec<f64> {
        match self {
            Environment::None => vec![0.0; l],
            Environment::Charge => virtual_field_charge(profile, l),
            Environment::String => virtual_field_string(profile, l),
        }
    }

    /// Natural initial configuration: vacuum, a centered kink, or a full string.
    pub fn initial_configuration(self, l: usize) -> SpinConfiguration {
        let i0 = default_i0(l);
        let dynamical = match self {
            Environment::None => vec![1; l],
            Environment::Charge => (0..l)
                .map(|k| if i0 + (k as i32) < 0 { 1 } else { -1 })
                .collect(),
            Environment::String => vec![-1; l],
        };
        let (left, right) = self.tails();
        SpinConfiguration {
            dynamical,
            left,
            right,
        }
    }
}

/// Asymptotic shape of a semi-infinite static tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// No static spins at all.
    Open,
    AllUp,
    AllDown,
    UpWithEdgeDown,
    DownWithEdgeUp,
}

/// Static tail: an explicit finite prefix (nearest the chain first) followed
/// by the expansion of `kind`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Tail {
    pub kind: TailKind,
    #[serde(default)]
    pub prefix: Vec<i8>,
}

impl Tail {
    pub fn new(kind: TailKind) -> Self {
        Self {
            kind,
            prefix: Vec::new(),
        }
    }

    pub fn open() -> Self {
        Self::new(TailKind::Open)
    }

    pub fn with_prefix(kind: TailKind, prefix: Vec<i8>) -> Self {
        Self { kind, prefix }
    }

    pub fn is_open(&self) -> bool {
        self.kind == TailKind::Open && self.prefix.is_empty()
    }

    /// Static spin at distance `d` from the chain (`d = 0` is adjacent).
    /// Returns 0 where no static spin exists.
    pub fn spin(&self, d: usize) -> i8 {
        if let Some(&s) = self.prefix.get(d) {
            return s;
        }
        let k = d - self.prefix.len();
        match self.kind {
            TailKind::Open => 0,
            TailKind::AllUp => 1,
            TailKind::AllDown => -1,
            TailKind::UpWithEdgeDown => {
                if k == 0 {
                    -1
                } else {
                    1
                }
            }
            TailKind::DownWithEdgeUp => {
                if k == 0 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// First `n` static spins, nearest the chain first.
    pub fn expand(&self, n: usize) -> Vec<i8> {
        (0..n).map(|d| self.spin(d)).collect()
    }
}

/// Classical z-basis configuration of the dynamical spins plus static tails.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpinConfiguration {
    pub dynamical: Vec<i8>,
    pub left: Tail,
    pub right: Tail,
}

impl SpinConfiguration {
    pub fn open(dynamical: Vec<i8>) -> Self {
        Self {
            dynamical,
            left: Tail::open(),
            right: Tail::open(),
        }
    }

    pub fn len(&self) -> usize {
        self.dynamical.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dynamical.is_empty()
    }

    /// Basis index of the dynamical part.
    pub fn index(&self) -> usize {
        self.dynamical
            .iter()
            .enumerate()
            .fold(0, |acc, (i, &s)| if s < 0 { acc | (1 << i) } else { acc })
    }

    pub fn from_index(index: usize, l: usize, left: Tail, right: Tail) -> Self {
        Self {
            dynamical: (0..l)
                .map(|i| if index >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
            left,
            right,
        }
    }

    /// Spins from `depth` static sites left of the chain through `depth`
    /// static sites right of it. Open tails contribute nothing.
    pub fn window(&self, depth: usize) -> Vec<i8> {
        let mut out = Vec::with_capacity(self.len() + 2 * depth);
        if !self.left.is_open() {
            out.extend(self.left.expand(depth).into_iter().rev());
        }
        out.extend_from_slice(&self.dynamical);
        if !self.right.is_open() {
            out.extend(self.right.expand(depth));
        }
        out
    }
}

/// Δh for a single confined charge: left all-up, right all-down.
/// Index `i` runs 1..L internally; entry `k` is site `i0 + k`.
pub fn virtual_field_charge(profile: ExpProfile, l: usize) -> Vec<f64> {
    (1..=l)
        .map(|i| profile.tail(i) - profile.tail(l + 1 - i))
        .collect()
}

/// Δh for a string between two static charges: all-up tails whose spins
/// adjacent to the chain are flipped down.
pub fn virtual_field_string(profile: ExpProfile, l: usize) -> Vec<f64> {
    // One term per side; summing the two sides keeps the profile exactly symmetric.
    let side = |i: usize| -profile.at(i) + profile.tail(i + 1);
    (1..=l).map(|i| side(i) + side(l + 1 - i)).collect()
}

/// Independent oracle: `Δh_i = Σ_static J_{|i-j|} s_j` summed over `cutoff`
/// explicit static spins per side.
pub fn brute_force_virtual_field(
    config: &SpinConfiguration,
    coupling: impl Fn(usize) -> f64,
    cutoff: usize,
) -> Vec<f64> {
    let l = config.len();
    let left = config.left.expand(cutoff);
    let right = config.right.expand(cutoff);
    (0..l)
        .map(|i| {
            // Sum the smallest terms first.
            let mut acc = 0.0;
            for d in (0..cutoff).rev() {
                acc += coupling(i + 1 + d) * f64::from(left[d]);
                acc += coupling(l - i + d) * f64::from(right[d]);
            }
            acc
        })
        .collect()
}

/// Full parameter set of the Ising Hamiltonian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub couplings: CouplingMatrix,
    pub g: f64,
    pub h: f64,
    pub delta_h: Vec<f64>,
    pub i0: i32,
}

impl HamiltonianSpec {
    pub fn new(couplings: CouplingMatrix, g: f64, h: f64, delta_h: Vec<f64>) -> Result<Self> {
        let l = couplings.dim();
        if delta_h.len() != l {
            return Err(Error::Dimension(format!(
                "delta_h has {} entries for {l} sites",
                delta_h.len()
            )));
        }
        if l > MAX_SITES {
            return Err(Error::SizeLimit {
                what: "L",
                got: l,
                max: MAX_SITES,
            });
        }
        Ok(Self {
            couplings,
            g,
            h,
            delta_h,
            i0: default_i0(l),
        })
    }

    /// Exponential couplings with the environment's virtual fields.
    pub fn exponential(
        l: usize,
        profile: ExpProfile,
        g: f64,
        h: f64,
        environment: Environment,
    ) -> Result<Self> {
        Self::new(
            exp_profile(profile.j, profile.beta, l),
            g,
            h,
            environment.virtual_field(profile, l),
        )
    }

    pub fn len(&self) -> usize {
        self.couplings.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        1 << self.len()
    }

    /// Centered label of internal site `k`.
    pub fn label(&self, k: usize) -> i32 {
        self.i0 + k as i32
    }

    /// Diagonal energy of basis state `index`.
    pub fn diagonal_energy(&self, index: usize) -> f64 {
        let l = self.len();
        let z = |i: usize| if index >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = 0.0;
        for i in 0..l {
            let zi = z(i);
            for j in i + 1..l {
                e -= self.couplings.get(i, j) * zi * z(j);
            }
            e -= (self.h + self.delta_h[i]) * zi;
        }
        e
    }

    /// Stable hash of the spec, used for output paths and spectral tagging.
    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update((self.len() as u64).to_le_bytes());
        for v in self.couplings.as_row_major() {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(self.g.to_le_bytes());
        hasher.update(self.h.to_le_bytes());
        for v in &self.delta_h {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(self.i0.to_le_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// `⟨config|H_diag|config⟩`, static-static couplings dropped.
pub fn classical_energy(config: &SpinConfiguration, spec: &HamiltonianSpec) -> Result<f64> {
    if config.len() != spec.len() {
        return Err(Error::Dimension(format!(
            "configuration has {} spins, spec has {}",
            config.len(),
            spec.len()
        )));
    }
    Ok(spec.diagonal_energy(config.index()))
}

/// Matrix-free Ising Hamiltonian: a diagonal plus `L` single-flip bands of
/// uniform weight `-g`.
#[derive(Debug, Clone)]
pub struct IsingOperator {
    l: usize,
    g: f64,
    diag: Vec<f64>,
}

/// Builds the operator for `spec`.
pub fn build_hamiltonian(spec: &HamiltonianSpec) -> Result<IsingOperator> {
    IsingOperator::new(spec)
}

impl IsingOperator {
    pub fn new(spec: &HamiltonianSpec) -> Result<Self> {
        let l = spec.len();
        if l > MAX_SITES {
            return Err(Error::SizeLimit {
                what: "L",
                got: l,
                max: MAX_SITES,
            });
        }
        let diag = (0..1usize << l)
            .into_par_iter()
            .with_min_len(1 << 10)
            .map(|s| spec.diagonal_energy(s))
            .collect();
        Ok(Self { l, g: spec.g, diag })
    }

    pub fn sites(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn transverse_field(&self) -> f64 {
        self.g
    }

    /// Stored nonzero entries: the diagonal plus `L` flip bands when `g ≠ 0`.
    pub fn nnz(&self) -> usize {
        if self.g == 0.0 {
            self.dim()
        } else {
            self.dim() * (self.l + 1)
        }
    }

    /// `y = H x`.
    pub fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let g = self.g;
        let l = self.l;
        let diag = &self.diag;
        let body = |(s, ys): (usize, &mut Complex64)| {
            let mut acc = x[s] * diag[s];
            if g != 0.0 {
                let mut flips = Complex64::new(0.0, 0.0);
                for i in 0..l {
                    flips += x[s ^ (1 << i)];
                }
                acc -= flips * g;
            }
            *ys = acc;
        };
        if self.dim() >= 1 << 14 {
            y.par_iter_mut().enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }

    /// `⟨x|H|x⟩`.
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
        self.apply(x, &mut y);
        crate::linalg::dot(x, &y).re
    }

    /// Dense row-major matrix; intended for oracles at small L.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        const MAX_DENSE: usize = 13;
        if self.l > MAX_DENSE {
            return Err(Error::SizeLimit {
                what: "L (dense)",
                got: self.l,
                max: MAX_DENSE,
            });
        }
        let n = self.dim();
        let mut m = vec![0.0; n * n];
        for s in 0..n {
            m[s * n + s] = self.diag[s];
            for i in 0..self.l {
                m[s * n + (s ^ (1 << i))] = -self.g;
            }
        }
        Ok(m)
    }
}

/// Model block of a scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "J", default = "one")]
    pub j: f64,
    pub beta: f64,
    #[serde(rename = "g_over_J")]
    pub g_over_j: f64,
    #[serde(rename = "h_over_J")]
    pub h_over_j: f64,
    pub environment: Environment,
    #[serde(default)]
    pub i0: Option<i32>,
}

fn one() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn profile(&self) -> ExpProfile {
        ExpProfile::new(self.j, self.beta)
    }

    pub fn to_spec(&self) -> Result<HamiltonianSpec> {
        let mut spec = HamiltonianSpec::exponential(
            self.l,
            self.profile(),
            self.g_over_j * self.j,
            self.h_over_j * self.j,
            self.environment,
        )?;
        if let Some(i0) = self.i0 {
            spec.i0 = i0;
        }
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;

    const BETA: f64 = 0.78;

    #[test]
    fn default_labels() {
        assert_eq!(default_i0(13), -6);
        assert_eq!(default_i0(1), 0);
    }

    #[test]
    fn exp_profile_ratio_and_nn() {
        let m = exp_profile(1.0, BETA, 13);
        assert_eq!(m.get(3, 4), 1.0);
        assert!((m.get(0, 2) - (-BETA).exp()).abs() < 1e-15);
        assert!(((m.get(0, 2) / m.get(0, 1)) - 0.458).abs() < 1e-3);
        let nn_only = exp_profile(1.0, 50.0, 6);
        assert!(nn_only.get(0, 2) < 1e-21);
    }

    #[test]
    fn tail_closed_form_matches_sum() {
        let p = ExpProfile::new(1.3, BETA);
        for a in 1..6 {
            let direct: f64 = (a..a + 300).map(|r| p.at(r)).sum();
            assert!((direct - p.tail(a)).abs() < 1e-13);
        }
    }

    #[test]
    fn charge_field_antisymmetric_and_zero_at_center() {
        let d = virtual_field_charge(ExpProfile::new(1.0, BETA), 13);
        assert_eq!(d[6], 0.0);
        for i in 0..13 {
            assert_eq!(d[i], -d[12 - i]);
        }
    }

    #[test]
    fn string_field_symmetric() {
        let d = virtual_field_string(ExpProfile::new(1.0, BETA), 13);
        for i in 0..13 {
            assert_eq!(d[i], d[12 - i]);
        }
    }

    #[test]
    fn fields_match_brute_force() {
        let p = ExpProfile::new(1.0, BETA);
        for env in [Environment::Charge, Environment::String] {
            let cfg = env.initial_configuration(13);
            let brute = brute_force_virtual_field(&cfg, |r| p.at(r), 200);
            let closed = env.virtual_field(p, 13);
            for (a, b) in brute.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-12, "{env:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn open_tails_give_zero_field() {
        let cfg = SpinConfiguration::open(vec![1; 5]);
        let d = brute_force_virtual_field(&cfg, |r| ExpProfile::new(1.0, BETA).at(r), 100);
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tail_expansion() {
        let t = Tail::with_prefix(TailKind::UpWithEdgeDown, vec![1]);
        assert_eq!(t.expand(4), vec![1, -1, 1, 1]);
        assert_eq!(
            Tail::new(TailKind::DownWithEdgeUp).expand(3),
            vec![1, -1, -1]
        );
    }

    #[test]
    fn index_round_trip() {
        let cfg = Environment::Charge.initial_configuration(13);
        let back =
            SpinConfiguration::from_index(cfg.index(), 13, cfg.left.clone(), cfg.right.clone());
        assert_eq!(back, cfg);
        assert_eq!(Environment::String.initial_configuration(4).index(), 0b1111);
    }

    #[test]
    fn two_site_zz_spectrum() {
        let spec = HamiltonianSpec::new(exp_profile(1.0, BETA, 2), 0.0, 0.0, vec![0.0; 2]).unwrap();
        let op = build_hamiltonian(&spec).unwrap();
        let ev = symmetric_eigenvalues(&op.to_dense().unwrap(), 4).unwrap();
        for (a, b) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn classical_energy_identities() {
        let l = 7;
        let j = exp_profile(1.0, BETA, l);
        let spec = HamiltonianSpec::new(j.clone(), 0.0, 0.0, vec![0.0; l]).unwrap();
        let up = SpinConfiguration::open(vec![1; l]);
        let mut sum = 0.0;
        for a in 0..l {
            for b in a + 1..l {
                sum += j.get(a, b);
            }
        }
        assert!((classical_energy(&up, &spec).unwrap() + sum).abs() < 1e-13);

        let dh: Vec<f64> = (0..l).map(|i| 0.1 * i as f64).collect();
        let spec = HamiltonianSpec::new(j.clone(), 0.0, 0.3, dh.clone()).unwrap();
        let e0 = classical_energy(&up, &spec).unwrap();
        for i in 0..l {
            let mut flipped = up.clone();
            flipped.dynamical[i] = -1;
            let row: f64 = (0..l).map(|k| j.get(i, k)).sum();
            let de = classical_energy(&flipped, &spec).unwrap() - e0;
            assert!((de - (2.0 * row + 2.0 * (0.3 + dh[i]))).abs() < 1e-12);
        }
    }

    #[test]
    fn structure_counts() {
        let spec = HamiltonianSpec::exponential(
            13,
            ExpProfile::new(1.0, BETA),
            0.75,
            0.6,
            Environment::String,
        )
        .unwrap();
        let op = build_hamiltonian(&spec).unwrap();
        assert_eq!(op.nnz(), 114_688);
    }

    #[test]
    fn size_limit() {
        let r = HamiltonianSpec::new(CouplingMatrix::zeros(25), 0.0, 0.0, vec![0.0; 25]);
        assert!(matches!(r, Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn apply_matches_dense() {
        let spec = HamiltonianSpec::exponential(
            5,
            ExpProfile::new(1.0, BETA),
            0.4,
            0.2,
            Environment::Charge,
        )
        .unwrap();
        let op = build_hamiltonian(&spec).unwrap();
        let dense = op.to_dense().unwrap();
        let n = op.dim();
        let x: Vec<Complex64> = (0..n)
            .map(|k| Complex64::new(k as f64, 1.0 - k as f64 * 0.5))
            .collect();
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        op.apply(&x, &mut y);
        for r in 0..n {
            let want: Complex64 = (0..n).map(|c| x[c] * dense[r * n + c]).sum();
            assert!((want - y[r]).norm() < 1e-12);
        }
    }

    #[test]
    fn spin_flip_symmetry_at_zero_field() {
        let spec = HamiltonianSpec::new(exp_profile(1.0, BETA, 4), 0.5, 0.0, vec![0.0; 4]).unwrap();
        let op = build_hamiltonian(&spec).unwrap();
        let full = (1 << 4) - 1;
        for s in 0..16 {
            assert_eq!(op.diagonal()[s], op.diagonal()[s ^ full]);
        }
    }
}
