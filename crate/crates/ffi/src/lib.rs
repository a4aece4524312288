//! C ABI for the `stringsim` core.
//!
//! Models and states are opaque handles created and freed through this
//! interface. Every fallible call returns an [`SsStatus`]; on failure the
//! message is kept per thread and read with [`ss_last_error_message`].
//! Output arrays are caller-allocated with an explicit length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use stringsim::evolve::{charge_density, electric_field, prepare_state, Propagator, Wavefunction};
use stringsim::model::{ExpProfile, Tail};
use stringsim::scenario::{run_scenario, RunOptions, Scenario};
use stringsim::twobody::two_body_potential;
use stringsim::{Environment, Error, HamiltonianSpec};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    SizeLimit = 4,
    Numerical = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// Static environment of the chain.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsEnvironment {
    None = 0,
    Charge = 1,
    String = 2,
}

impl From<SsEnvironment> for Environment {
    fn from(e: SsEnvironment) -> Self {
        match e {
            SsEnvironment::None => Environment::None,
            SsEnvironment::Charge => Environment::Charge,
            SsEnvironment::String => Environment::String,
        }
    }
}

/// Ising Hamiltonian with its propagator and environment.
pub struct SsModel {
    spec: HamiltonianSpec,
    environment: Environment,
    propagator: Propagator,
}

/// Wavefunction with the static tails needed for charge observables.
pub struct SsState {
    psi: Wavefunction,
    left: Tail,
    right: Tail,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SsStatus {
    match e {
        Error::SizeLimit { .. } | Error::MemoryLimit(_) => SsStatus::SizeLimit,
        Error::Config { .. } => SsStatus::Config,
        Error::Scenario { source, .. } => status_of(source),
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => SsStatus::Io,
        Error::Dimension(_) | Error::IndexOutOfRange(_) | Error::InvalidProfile(_) => {
            SsStatus::InvalidArgument
        }
        _ => SsStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SsStatus, String)>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SsStatus::Panic
        }
    }
}

fn core_err(e: Error) -> (SsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (SsStatus, String) {
    (SsStatus::NullPointer, format!("{what} is null"))
}

fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), (SsStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < values.len() {
        return Err((
            SsStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    // SAFETY: caller guarantees `out` points to `len` writable doubles.
    unsafe { std::ptr::copy_nonoverlapping(values.as_ptr(), out, values.len()) };
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ss_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds a chain of `l` spins with couplings `j·e^{−β(r−1)}`, fields `g`,
/// `h` and the virtual fields of `environment`.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn ss_model_new_exponential(
    l: usize,
    j: f64,
    beta: f64,
    g: f64,
    h: f64,
    environment: SsEnvironment,
    out: *mut *mut SsModel,
) -> SsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if l < 1 || !(beta > 0.0) || !j.is_finite() {
            return Err((
                SsStatus::InvalidArgument,
                format!("invalid chain L={l}, J={j}, beta={beta}"),
            ));
        }
        let env = Environment::from(environment);
        let spec = HamiltonianSpec::exponential(l, ExpProfile::new(j, beta), g, h, env)
            .map_err(core_err)?;
        let propagator = Propagator::new(&spec).map_err(core_err)?;
        let model = SsModel {
            spec,
            environment: env,
            propagator,
        };
        *out = Box::into_raw(Box::new(model));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from [`ss_model_new_exponential`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ss_model_free(model: *mut SsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of dynamical spins, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_model_num_sites(model: *const SsModel) -> usize {
    model.as_ref().map_or(0, |m| m.spec.len())
}

/// Site-resolved virtual field `Δh_i` of the model (`L` values).
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_model_virtual_field(
    model: *const SsModel,
    out: *mut f64,
    len: usize,
) -> SsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        copy_out(&m.spec.delta_h, out, len)
    })
}

/// Two-body potential `V(l1, l2)` of the string between static charges on
/// an `l`-site chain.
///
/// # Safety
/// `out` must point to one writable double.
#[no_mangle]
pub unsafe extern "C" fn ss_two_body_potential(
    l1: i32,
    l2: i32,
    j: f64,
    beta: f64,
    h: f64,
    l: usize,
    out: *mut f64,
) -> SsStatus {
    guard(|| {
        let v = two_body_potential(l1, l2, j, beta, h, l).map_err(core_err)?;
        copy_out(&[v], out, 1)
    })
}

/// Classical initial state of the model's environment.
///
/// # Safety
/// `model` must be a live handle; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn ss_state_new_initial(
    model: *const SsModel,
    out: *mut *mut SsState,
) -> SsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = m.environment.initial_configuration(m.spec.len());
        let state = SsState {
            psi: prepare_state(&cfg),
            left: cfg.left,
            right: cfg.right,
        };
        *out = Box::into_raw(Box::new(state));
        Ok(())
    })
}

/// Releases a state. Null is ignored.
///
/// # Safety
/// `state` must come from [`ss_state_new_initial`] and not be used again.
#[no_mangle]
pub unsafe extern "C" fn ss_state_free(state: *mut SsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Advances `state` by `steps` steps of length `dt` under `model`.
///
/// # Safety
/// Both handles must be live; the state must belong to a model of equal size.
#[no_mangle]
pub unsafe extern "C" fn ss_state_propagate(
    model: *const SsModel,
    state: *mut SsState,
    dt: f64,
    steps: usize,
) -> SsStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let s = state.as_mut().ok_or_else(|| null("state"))?;
        if s.psi.sites() != m.spec.len() {
            return Err((
                SsStatus::InvalidArgument,
                "state and model sizes differ".into(),
            ));
        }
        if !(dt.is_finite() && dt >= 0.0) {
            return Err((SsStatus::InvalidArgument, format!("dt = {dt}")));
        }
        let mut last = None;
        m.propagator
            .run(&s.psi, dt, steps, |k, _, psi| {
                if k == steps {
                    last = Some(psi.clone());
                }
                Ok(())
            })
            .map_err(core_err)?;
        if let Some(psi) = last {
            s.psi = psi;
        }
        Ok(())
    })
}

/// Number of bonds reported by [`ss_state_charge_density`] (`L + 3`).
///
/// # Safety
/// `state` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ss_state_num_bonds(state: *const SsState) -> usize {
    state.as_ref().map_or(0, |s| s.psi.sites() + 3)
}

/// Charge density `q_b` on bonds `i0−1 ..= i0+L+1`.
///
/// # Safety
/// `state` must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_state_charge_density(
    state: *const SsState,
    out: *mut f64,
    len: usize,
) -> SsStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        copy_out(&charge_density(&s.psi, &s.left, &s.right), out, len)
    })
}

/// Electric field `ε_i = ⟨σᶻ_i⟩` on the `L` dynamical sites.
///
/// # Safety
/// `state` must be live; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ss_state_electric_field(
    state: *const SsState,
    out: *mut f64,
    len: usize,
) -> SsStatus {
    guard(|| {
        let s = state.as_ref().ok_or_else(|| null("state"))?;
        copy_out(&electric_field(&s.psi), out, len)
    })
}

/// Runs a scenario file, writing artifacts under `out_dir` (null: `out`).
///
/// # Safety
/// `config` and `out_dir` must be null or NUL-terminated UTF-8 strings.
#[no_mangle]
pub unsafe extern "C" fn ss_run_scenario(
    config: *const c_char,
    out_dir: *const c_char,
) -> SsStatus {
    guard(|| {
        if config.is_null() {
            return Err(null("config"));
        }
        let to_str = |p: *const c_char| {
            CStr::from_ptr(p)
                .to_str()
                .map_err(|_| (SsStatus::InvalidArgument, "path is not UTF-8".to_string()))
        };
        let path = to_str(config)?;
        let out = if out_dir.is_null() {
            None
        } else {
            Some(to_str(out_dir)?.into())
        };
        let scenario = Scenario::from_path(Path::new(path)).map_err(core_err)?;
        run_scenario(
            &scenario,
            &RunOptions {
                out,
                ..RunOptions::default()
            },
        )
        .map_err(core_err)?;
        Ok(())
    })
}
