//! TOML scenario files and the runner that turns them into CSV/JSON artifacts.
//!
//! Each grid point `(g, h)` writes into `out/<name>/<spec-hash>/`:
//! `qmap.csv`, `emap.csv`, `fits.json`, `manifest.json`, and when requested
//! `thermal.csv`, `twobody.csv`, `twobody_qmap.csv` and the shot-noise maps
//! `qmap_shots.csv`, `emap_shots.csv`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::evolve::{
    bond_labels, charge_density, electric_field, fit_bloch, fit_light_cone, net_charge_density,
    prepare_state, sample_shots_on_stream, Propagator, SpatiotemporalMap,
};
use crate::model::{Environment, HamiltonianSpec, ModelConfig, MAX_SITES};
use crate::thermal::{self, MAX_DENSE_SITES};
use crate::twobody::{self, PairBasis, PairPotential, RESONANCE_TOL};

/// Threshold used by the light-cone fit.
pub const LIGHT_CONE_THRESHOLD: f64 = 0.5;
/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "STRINGSIM_THREADS";

/// Time grid, shots and parameter grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Protocol {
    pub t_max: f64,
    pub dt: f64,
    #[serde(default)]
    pub shots: usize,
    #[serde(default)]
    pub seed: u64,
    /// Overrides `model.g_over_J` with a grid.
    #[serde(default, rename = "g_over_J")]
    pub g_over_j: Option<Vec<f64>>,
    /// Overrides `model.h_over_J` with a grid.
    #[serde(default, rename = "h_over_J")]
    pub h_over_j: Option<Vec<f64>>,
}

/// Requested fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    LightCone,
    Bloch,
}

/// Which artifacts to produce beyond the q and ε maps.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    #[serde(default)]
    pub fits: Vec<FitKind>,
    #[serde(default)]
    pub thermal: bool,
    #[serde(default)]
    pub twobody: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelConfig,
    pub protocol: Protocol,
    #[serde(default)]
    pub outputs: Outputs,
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Line of the first `key = …` assignment, for semantic diagnostics.
fn key_line(src: &str, key: &str) -> Option<usize> {
    src.lines()
        .position(|l| {
            let t = l.trim_start();
            t.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

impl Scenario {
    /// Parses and validates a scenario; errors carry the offending field and line.
    pub fn from_toml_str(src: &str) -> Result<Self> {
        let scenario: Scenario = toml::from_str(src).map_err(|e| Error::Config {
            message: e.message().to_string(),
            field: None,
            line: e.span().map(|s| line_of(src, s.start)),
        })?;
        scenario.validate().map_err(|e| match e {
            Error::Config {
                message,
                field: Some(field),
                line: None,
            } => {
                let key = field.rsplit('.').next().unwrap_or(&field).to_string();
                Error::Config {
                    line: key_line(src, &key),
                    message,
                    field: Some(field),
                }
            }
            other => other,
        })?;
        Ok(scenario)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&src)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config_field(field, msg));
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return bad(
                "name",
                format!(
                    "`{}` must be a non-empty [A-Za-z0-9_-] identifier",
                    self.name
                ),
            );
        }
        let m = &self.model;
        if m.l < 2 || m.l > MAX_SITES {
            return bad("model.L", format!("L = {} outside 2..={MAX_SITES}", m.l));
        }
        if !(m.j > 0.0) || !m.j.is_finite() {
            return bad("model.J", format!("J = {} must be positive", m.j));
        }
        if !(m.beta > 0.0) || !m.beta.is_finite() {
            return bad("model.beta", format!("beta = {} must be positive", m.beta));
        }
        let g_grid = self.g_grid();
        let h_grid = self.h_grid();
        for (field, grid) in [("g_over_J", &g_grid), ("h_over_J", &h_grid)] {
            if let Some(v) = grid.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return bad(field, format!("{field} = {v} must be finite and ≥ 0"));
            }
            let mut sorted = grid.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return bad(field, format!("{field} grid contains duplicates"));
            }
        }
        let p = &self.protocol;
        if !(p.dt > 0.0) || !p.dt.is_finite() {
            return bad("protocol.dt", format!("dt = {} must be positive", p.dt));
        }
        if !(p.t_max >= 0.0) || !p.t_max.is_finite() {
            return bad("protocol.t_max", format!("t_max = {} must be ≥ 0", p.t_max));
        }
        let steps = p.t_max / p.dt;
        if (steps - steps.round()).abs() > 1e-9 * steps.max(1.0) {
            return bad(
                "protocol.t_max",
                format!("t_max = {} is not a multiple of dt = {}", p.t_max, p.dt),
            );
        }
        if self.outputs.thermal && m.l > MAX_DENSE_SITES {
            return bad(
                "outputs.thermal",
                format!("thermal baseline needs L ≤ {MAX_DENSE_SITES}"),
            );
        }
        if self.outputs.twobody && m.environment != Environment::String {
            return bad(
                "outputs.twobody",
                "two-body comparison needs the string environment".into(),
            );
        }
        Ok(())
    }

    pub fn g_grid(&self) -> Vec<f64> {
        self.protocol
            .g_over_j
            .clone()
            .unwrap_or_else(|| vec![self.model.g_over_j])
    }

    pub fn h_grid(&self) -> Vec<f64> {
        self.protocol
            .h_over_j
            .clone()
            .unwrap_or_else(|| vec![self.model.h_over_j])
    }

    pub fn n_steps(&self) -> usize {
        (self.protocol.t_max / self.protocol.dt).round() as usize
    }

    /// Model blocks of all grid points, `g` outer and `h` inner.
    pub fn grid(&self) -> Vec<ModelConfig> {
        let mut out = Vec::new();
        for &g in &self.g_grid() {
            for &h in &self.h_grid() {
                out.push(ModelConfig {
                    g_over_j: g,
                    h_over_j: h,
                    ..self.model.clone()
                });
            }
        }
        out
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl RunOptions {
    pub fn out_root(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// `--threads`, else `STRINGSIM_THREADS`, else all cores.
    pub fn thread_count(&self) -> Result<usize> {
        if let Some(t) = self.threads {
            return if t == 0 {
                Err(Error::config_field("threads", "thread count must be ≥ 1"))
            } else {
                Ok(t)
            };
        }
        match std::env::var(THREADS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| {
                    Error::config_field(THREADS_ENV, format!("`{v}` is not a positive integer"))
                }),
            Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

/// Result of one grid point.
#[derive(Debug, Clone, Serialize)]
pub struct GridPointReport {
    pub g_over_j: f64,
    pub h_over_j: f64,
    pub spec_hash: String,
    pub directory: PathBuf,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    pub points: Vec<GridPointReport>,
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::config_field("threads", e.to_string()))
}

/// Runs every grid point of `scenario` and writes its artifacts.
pub fn run_scenario(scenario: &Scenario, opts: &RunOptions) -> Result<ScenarioReport> {
    let seed = opts.seed.unwrap_or(scenario.protocol.seed);
    let root = opts.out_root().join(&scenario.name);
    let grid = scenario.grid();
    let points = pool(opts.thread_count()?)?.install(|| {
        grid.par_iter()
            .map(|model| run_point(scenario, model, seed, &root))
            .collect::<Result<Vec<_>>>()
    });
    let points = points.map_err(|e| e.in_scenario(&scenario.name))?;
    Ok(ScenarioReport {
        scenario: scenario.name.clone(),
        seed,
        points,
    })
}

/// Loads, validates and runs a scenario file.
pub fn run_scenario_file(path: &Path, opts: &RunOptions) -> Result<ScenarioReport> {
    run_scenario(&Scenario::from_path(path)?, opts)
}

/// Exact, shot-sampled and auxiliary maps of one quench.
#[derive(Debug, Clone)]
pub struct QuenchMaps {
    pub q: SpatiotemporalMap,
    pub epsilon: SpatiotemporalMap,
    /// Signed net charge per bond.
    pub rho: SpatiotemporalMap,
    pub q_shots: Option<SpatiotemporalMap>,
    pub epsilon_shots: Option<SpatiotemporalMap>,
    pub energy: f64,
    pub stats: crate::evolve::PropagationStats,
}

/// Propagates the environment's initial configuration and records maps.
/// With `shots > 0`, output time `k` is sampled on generator stream `k`.
pub fn quench_maps(
    spec: &HamiltonianSpec,
    environment: Environment,
    dt: f64,
    n_steps: usize,
    shots: usize,
    seed: u64,
) -> Result<QuenchMaps> {
    let l = spec.len();
    let cfg = environment.initial_configuration(l);
    let (left, right) = (cfg.left.clone(), cfg.right.clone());
    let psi0 = prepare_state(&cfg);
    let prop = Propagator::new(spec)?;
    let bonds = bond_labels(spec.i0, l);
    let sites: Vec<i32> = (0..l).map(|k| spec.label(k)).collect();
    let mut q = SpatiotemporalMap::new("q", bonds.clone());
    let mut eps = SpatiotemporalMap::new("epsilon", sites.clone());
    let mut rho = SpatiotemporalMap::new("rho", bonds.clone());
    let mut q_shots = (shots > 0).then(|| SpatiotemporalMap::new("q", bonds.clone()));
    let mut e_shots = (shots > 0).then(|| SpatiotemporalMap::new("epsilon", sites.clone()));
    let energy = prop.operator().expectation(psi0.amplitudes());
    let stats = prop.run(&psi0, dt, n_steps, |k, t, psi| {
        q.push(t, charge_density(psi, &left, &right))?;
        eps.push(t, electric_field(psi))?;
        rho.push(t, net_charge_density(psi, &left, &right))?;
        if let (Some(qs), Some(es)) = (q_shots.as_mut(), e_shots.as_mut()) {
            let est = sample_shots_on_stream(psi, shots, seed, k as u64, &left, &right);
            qs.push_with_stderr(t, est.q, est.q_stderr)?;
            es.push_with_stderr(t, est.epsilon, est.epsilon_stderr)?;
        }
        Ok(())
    })?;
    Ok(QuenchMaps {
        q,
        epsilon: eps,
        rho,
        q_shots,
        epsilon_shots: e_shots,
        energy,
        stats,
    })
}

/// Fraction of points where the shot estimate lies within `k` standard
/// errors of the exact value. Points with zero error count as agreeing when
/// the estimate is exact.
pub fn shot_agreement(exact: &SpatiotemporalMap, shots: &SpatiotemporalMap, k: f64) -> f64 {
    let Some(err) = shots.stderr.as_ref() else {
        return 0.0;
    };
    let mut hit = 0usize;
    let mut total = 0usize;
    for ((ex, est), se) in exact.values.iter().zip(&shots.values).zip(err) {
        for ((a, b), s) in ex.iter().zip(est).zip(se) {
            total += 1;
            if (a - b).abs() <= k * s || (a - b).abs() < 1e-12 {
                hit += 1;
            }
        }
    }
    hit as f64 / total.max(1) as f64
}

/// Two-body q map next to the exact one.
#[derive(Debug, Clone, Serialize)]
pub struct TwoBodyComparison {
    pub resonant_pairs: Vec<(i32, i32)>,
    /// Fraction of (time, bond) points with `|Δq_exact| > 1e-3` where the
    /// perturbative `Δq` has the same sign.
    pub sign_agreement: f64,
    pub broken_probability: Vec<f64>,
}

/// Evolves the two-body model and reconstructs its q map on `times`.
pub fn twobody_map(
    model: &ModelConfig,
    spec: &HamiltonianSpec,
    times: &[f64],
) -> Result<(PairPotential, SpatiotemporalMap, Vec<f64>)> {
    let l = model.l;
    let pot = PairPotential::new(model.j, model.beta, model.h_over_j * model.j, l)?;
    let g = model.g_over_j * model.j;
    let s0 = twobody::initial_pair_state(g, &pot, RESONANCE_TOL * model.j)?;
    let heff = twobody::build_heff(g, &pot);
    let states = twobody::evolve_pair(&s0, &heff, times)?;
    let base = Environment::String.initial_configuration(l);
    let basis = PairBasis::new(spec.i0, l);
    let mut map = SpatiotemporalMap::new("q", bond_labels(spec.i0, l));
    let mut broken = Vec::with_capacity(times.len());
    for (st, &t) in states.iter().zip(times) {
        let (q, _) = twobody::reconstruct_observables(&s0, st, &base, &basis)?;
        map.push(t, q)?;
        broken.push(twobody::broken_probability(st, &s0));
    }
    Ok((pot, map, broken))
}

fn sign_agreement(exact: &SpatiotemporalMap, approx: &SpatiotemporalMap) -> f64 {
    let (e0, a0) = (&exact.values[0], &approx.values[0]);
    let mut agree = 0usize;
    let mut total = 0usize;
    for (er, ar) in exact.values.iter().zip(&approx.values).skip(1) {
        for x in 0..er.len() {
            let de = er[x] - e0[x];
            if de.abs() > 1e-3 {
                total += 1;
                if de.signum() == (ar[x] - a0[x]).signum() {
                    agree += 1;
                }
            }
        }
    }
    agree as f64 / total.max(1) as f64
}

fn write_csv_file(path: &Path, f: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
    let mut file = fs::File::create(path)?;
    f(&mut file)
}

fn error_value(e: &Error) -> Value {
    json!({ "error": e.to_string() })
}

/// Static charge bonds of the initial configuration.
fn static_charges(q0: &[f64], bonds: &[i32]) -> Vec<i32> {
    bonds
        .iter()
        .zip(q0)
        .filter(|(_, &v)| v == 1.0)
        .map(|(&b, _)| b)
        .collect()
}

fn run_point(
    scenario: &Scenario,
    model: &ModelConfig,
    seed: u64,
    root: &Path,
) -> Result<GridPointReport> {
    let started = Instant::now();
    let spec = model.to_spec()?;
    let hash = spec.hash_hex();
    let dir = root.join(&hash);
    fs::create_dir_all(&dir)?;
    let p = &scenario.protocol;
    let maps = quench_maps(
        &spec,
        model.environment,
        p.dt,
        scenario.n_steps(),
        p.shots,
        seed,
    )?;
    let mut files = vec!["qmap.csv".to_string(), "emap.csv".to_string()];
    maps.q.write_csv_file(&dir.join("qmap.csv"), None)?;

    let mut fits = serde_json::Map::new();
    fits.insert("propagation".into(), serde_json::to_value(&maps.stats)?);
    fits.insert("initial_energy".into(), json!(maps.energy));
    for kind in &scenario.outputs.fits {
        let value = match kind {
            FitKind::LightCone => match fit_light_cone(&maps.rho, LIGHT_CONE_THRESHOLD) {
                Ok(f) => {
                    json!({ "fit": f, "threshold": LIGHT_CONE_THRESHOLD, "prediction": 2.0 * model.g_over_j * model.j })
                }
                Err(e) => error_value(&e),
            },
            FitKind::Bloch => match fit_bloch(&maps.q) {
                Ok(f) => json!({
                    "fit": f,
                    "prediction": {
                        "amplitude": 2.0 * model.g_over_j / model.h_over_j,
                        "period": std::f64::consts::PI / (model.h_over_j * model.j),
                    }
                }),
                Err(e) => error_value(&e),
            },
        };
        let key = match kind {
            FitKind::LightCone => "light_cone",
            FitKind::Bloch => "bloch",
        };
        fits.insert(key.into(), value);
    }

    let mut thermal_profile = None;
    if scenario.outputs.thermal {
        let spectral = thermal::spectrum(&spec)?;
        let result = thermal::match_temperature(maps.energy, &spectral).map(|t| {
            let profile = thermal::gibbs_observable(&spectral, t);
            let residual =
                (spectral.gibbs_energy(t) - maps.energy).abs() / maps.energy.abs().max(1.0);
            (t, profile, residual)
        });
        match result {
            Ok((t, profile, residual)) => {
                fits.insert(
                    "thermal".into(),
                    json!({
                        "temperature": t,
                        "energy": maps.energy,
                        "ground_energy": spectral.ground_energy(),
                        "relative_residual": residual,
                        "eigen_residual": spectral.max_residual,
                    }),
                );
                write_csv_file(&dir.join("thermal.csv"), |f| {
                    let empty = SpatiotemporalMap::new("epsilon", maps.epsilon.sites.clone());
                    empty.write_csv(f, Some(&profile))
                })?;
                files.push("thermal.csv".into());
                thermal_profile = Some(profile);
            }
            Err(e) => {
                fits.insert("thermal".into(), error_value(&e));
            }
        }
    }
    maps.epsilon
        .write_csv_file(&dir.join("emap.csv"), thermal_profile.as_deref())?;

    if let (Some(qs), Some(es)) = (&maps.q_shots, &maps.epsilon_shots) {
        qs.write_csv_file(&dir.join("qmap_shots.csv"), None)?;
        es.write_csv_file(&dir.join("emap_shots.csv"), None)?;
        files.push("qmap_shots.csv".into());
        files.push("emap_shots.csv".into());
        fits.insert(
            "shots".into(),
            json!({
                "n_shots": p.shots,
                "seed": seed,
                "epsilon_within_3se": shot_agreement(&maps.epsilon, es, 3.0),
                "q_within_3se": shot_agreement(&maps.q, qs, 3.0),
            }),
        );
    }

    if scenario.outputs.twobody {
        match twobody_map(model, &spec, &maps.q.times) {
            Ok((pot, tb_map, broken)) => {
                write_csv_file(&dir.join("twobody.csv"), |f| pot.write_csv(f))?;
                tb_map.write_csv_file(&dir.join("twobody_qmap.csv"), None)?;
                files.push("twobody.csv".into());
                files.push("twobody_qmap.csv".into());
                let cmp = TwoBodyComparison {
                    resonant_pairs: twobody::resonant_configs(&pot, RESONANCE_TOL * model.j),
                    sign_agreement: sign_agreement(&maps.q, &tb_map),
                    broken_probability: broken,
                };
                fits.insert("twobody".into(), serde_json::to_value(cmp)?);
            }
            Err(e) => {
                fits.insert("twobody".into(), error_value(&e));
            }
        }
    }
    fs::write(
        dir.join("fits.json"),
        serde_json::to_string_pretty(&Value::Object(fits))?,
    )?;
    files.push("fits.json".into());

    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let manifest = json!({
        "scenario": scenario.name,
        "spec_hash": hash,
        "seed": seed,
        "versions": {
            "stringsim": env!("CARGO_PKG_VERSION"),
            "schema": 1,
        },
        "timestamp_unix": timestamp,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "model": model,
        "parameters": {
            "L": model.l,
            "J": model.j,
            "beta": model.beta,
            "g": model.g_over_j * model.j,
            "h": model.h_over_j * model.j,
            "i0": spec.i0,
            "environment": model.environment,
            "static_charges": static_charges(&maps.q.values[0], &maps.q.sites),
            "delta_h": spec.delta_h,
        },
        "protocol": {
            "t_max": p.t_max,
            "dt": p.dt,
            "shots": p.shots,
        },
        "files": files,
    });
    files.push("manifest.json".into());
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(GridPointReport {
        g_over_j: model.g_over_j,
        h_over_j: model.h_over_j,
        spec_hash: hash,
        directory: dir,
        files,
    })
}

/// Thermal baseline only: the Gibbs field profile matched to the quench
/// energy for every grid point, written as `thermal.csv`.
pub fn run_thermal(scenario: &Scenario, opts: &RunOptions) -> Result<ScenarioReport> {
    if scenario.model.l > MAX_DENSE_SITES {
        return Err(Error::config_field(
            "model.L",
            format!("thermal baseline needs L ≤ {MAX_DENSE_SITES}"),
        ));
    }
    let root = opts.out_root().join(&scenario.name);
    let grid = scenario.grid();
    let run = |model: &ModelConfig| -> Result<GridPointReport> {
        let spec = model.to_spec()?;
        let hash = spec.hash_hex();
        let dir = root.join(&hash);
        fs::create_dir_all(&dir)?;
        let cfg = model.environment.initial_configuration(model.l);
        let psi0 = prepare_state(&cfg);
        let op = crate::model::build_hamiltonian(&spec)?;
        let e0 = op.expectation(psi0.amplitudes());
        let spectral = thermal::spectrum(&spec)?;
        let t = thermal::match_temperature(e0, &spectral)?;
        let profile = thermal::gibbs_observable(&spectral, t);
        let sites: Vec<i32> = (0..model.l).map(|k| spec.label(k)).collect();
        write_csv_file(&dir.join("thermal.csv"), |f| {
            SpatiotemporalMap::new("epsilon", sites).write_csv(f, Some(&profile))
        })?;
        fs::write(
            dir.join("thermal.json"),
            serde_json::to_string_pretty(
                &json!({ "temperature": t, "energy": e0, "model": model }),
            )?,
        )?;
        Ok(GridPointReport {
            g_over_j: model.g_over_j,
            h_over_j: model.h_over_j,
            spec_hash: hash,
            directory: dir,
            files: vec!["thermal.csv".into(), "thermal.json".into()],
        })
    };
    let points = pool(opts.thread_count()?)?
        .install(|| grid.par_iter().map(run).collect::<Result<Vec<_>>>())
        .map_err(|e| e.in_scenario(&scenario.name))?;
    Ok(ScenarioReport {
        scenario: scenario.name.clone(),
        seed: opts.seed.unwrap_or(scenario.protocol.seed),
        points,
    })
}
