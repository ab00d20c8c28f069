//! C ABI over the simulator environment, SAC agents and parameter
//! aggregation.
//!
//! Every function returns a [`SaginStatus`]; on failure the message is kept
//! per thread and read with [`sagin_last_error`]. Handles are opaque and
//! owned by the caller until passed to their `_free` function. Panics never
//! cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sagin_core::agent::{ActionMode, SacAgent, SacConfig};
use sagin_core::env::{MultiAgentEnv, Transition};
use sagin_core::exp::ExperimentConfig;
use sagin_core::federation::{aggregate_mean, aggregate_soft};
use sagin_core::nn::{deserialize, serialize, ParamSet};
use sagin_core::Error;

/// Result code of every exported function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaginStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    Layout = 4,
    Decode = 5,
    InsufficientReplay = 6,
    Federation = 7,
    Config = 8,
    BufferTooSmall = 9,
    Io = 10,
    Internal = 11,
}

/// Simulator environment with one agent per base station.
pub struct SaginEnv {
    inner: sagin_core::env::SaginEnv,
}

/// Discrete soft actor-critic agent.
pub struct SaginAgent {
    inner: SacAgent,
}

/// Cumulative simulator metrics.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SaginMetrics {
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub in_system: u64,
    pub throughput_bps: f64,
    pub drop_rate: f64,
    pub mean_delay_s: f64,
}

/// Losses and temperature after one training step.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SaginDiagnostics {
    pub trend_loss_1: f64,
    pub trend_loss_2: f64,
    pub policy_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
    pub entropy: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

struct Failure(SaginStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) => SaginStatus::InvalidArgument,
            Error::Dimension { .. } => SaginStatus::Dimension,
            Error::LayoutMismatch { .. } => SaginStatus::Layout,
            Error::Decode(_) | Error::Schema(_) => SaginStatus::Decode,
            Error::InsufficientReplay { .. } => SaginStatus::InsufficientReplay,
            Error::Federation(_) => SaginStatus::Federation,
            Error::Config { .. } => SaginStatus::Config,
            Error::Io(_) => SaginStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: SaginStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SaginStatus {
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<&str>()
            .map(|s| s.to_string())
            .or_else(|| p.downcast_ref::<String>().cloned())
            .unwrap_or_else(|| "panic".into());
        Err(fail(SaginStatus::Internal, msg))
    });
    match outcome {
        Ok(()) => SaginStatus::Ok,
        Err(Failure(status, msg)) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = msg);
            status
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(SaginStatus::NullPointer, "null buffer"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(SaginStatus::NullPointer, "null buffer"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(SaginStatus::NullPointer, "null output pointer"))
}

unsafe fn handle<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(SaginStatus::NullPointer, "null handle"))
}

/// Copies `bytes` into `buf` when it fits; `written` always receives the
/// required size.
unsafe fn emit(bytes: &[u8], buf: *mut u8, cap: usize, written: *mut usize) -> Result<(), Failure> {
    *out(written)? = bytes.len();
    if cap < bytes.len() {
        return Err(fail(SaginStatus::BufferTooSmall, format!("need {} bytes, have {cap}", bytes.len())));
    }
    slice_mut(buf, bytes.len())?.copy_from_slice(bytes);
    Ok(())
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `cap`. Returns the untruncated length without the NUL.
///
/// # Safety
/// `buf` must be valid for `cap` bytes or null with `cap == 0`.
#[no_mangle]
pub unsafe extern "C" fn sagin_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if cap > 0 && !buf.is_null() {
            let n = msg.len().min(cap - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sagin_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an environment from an experiment config in TOML (its `sim` and
/// `env` tables are used; null means defaults).
///
/// # Safety
/// `config_toml` must be null or a NUL-terminated string; `out_env` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_env_new(config_toml: *const c_char, seed: u64, out_env: *mut *mut SaginEnv) -> SaginStatus {
    guard(|| {
        let slot = out(out_env)?;
        *slot = ptr::null_mut();
        let cfg = if config_toml.is_null() {
            ExperimentConfig::default()
        } else {
            let text = CStr::from_ptr(config_toml)
                .to_str()
                .map_err(|_| fail(SaginStatus::InvalidArgument, "config is not UTF-8"))?;
            ExperimentConfig::from_toml(text)?
        };
        let inner = sagin_core::env::SaginEnv::new(cfg.sim, cfg.env, seed)?;
        *slot = Box::into_raw(Box::new(SaginEnv { inner }));
        Ok(())
    })
}

/// # Safety
/// `env` must come from [`sagin_env_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sagin_env_free(env: *mut SaginEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Agent count, observation length and action count.
///
/// # Safety
/// `env` must be a live handle; the outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_env_dims(
    env: *mut SaginEnv,
    num_agents: *mut usize,
    obs_dim: *mut usize,
    num_actions: *mut usize,
) -> SaginStatus {
    guard(|| {
        let e = &handle(env)?.inner;
        *out(num_agents)? = e.num_agents();
        *out(obs_dim)? = e.obs_dim();
        *out(num_actions)? = e.num_actions();
        Ok(())
    })
}

/// Writes the observation of `agent` into `buf` (`len` must equal the
/// observation length).
///
/// # Safety
/// `env` must be a live handle and `buf` valid for `len` floats.
#[no_mangle]
pub unsafe extern "C" fn sagin_env_observe(env: *mut SaginEnv, agent: usize, buf: *mut f32, len: usize) -> SaginStatus {
    guard(|| {
        let e = &handle(env)?.inner;
        if agent >= e.num_agents() {
            return Err(fail(SaginStatus::InvalidArgument, format!("agent {agent} out of range")));
        }
        if len != e.obs_dim() {
            return Err(Error::Dimension {
                expected: e.obs_dim(),
                got: len,
            }
            .into());
        }
        slice_mut(buf, len)?.copy_from_slice(&e.observe(agent));
        Ok(())
    })
}

/// Whether `agent` has a batch awaiting a decision this tick.
///
/// # Safety
/// `env` must be a live handle; `needs` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_env_needs_action(env: *mut SaginEnv, agent: usize, needs: *mut bool) -> SaginStatus {
    guard(|| {
        let e = &handle(env)?.inner;
        if agent >= e.num_agents() {
            return Err(fail(SaginStatus::InvalidArgument, format!("agent {agent} out of range")));
        }
        *out(needs)? = e.needs_action(agent);
        Ok(())
    })
}

/// Advances one tick with one action per agent (ignored for idle agents).
///
/// # Safety
/// `env` must be a live handle and `actions` valid for `len` values.
#[no_mangle]
pub unsafe extern "C" fn sagin_env_step(env: *mut SaginEnv, actions: *const u32, len: usize) -> SaginStatus {
    guard(|| {
        let e = &mut handle(env)?.inner;
        if len != e.num_agents() {
            return Err(Error::Dimension {
                expected: e.num_agents(),
                got: len,
            }
            .into());
        }
        let acts: Vec<usize> = slice(actions, len)?.iter().map(|&a| a as usize).collect();
        if let Some(&a) = acts.iter().find(|&&a| a >= e.num_actions()) {
            return Err(fail(SaginStatus::InvalidArgument, format!("action {a} out of range")));
        }
        e.step(&acts)?;
        Ok(())
    })
}

/// Metrics accumulated since the environment was created.
///
/// # Safety
/// `env` must be a live handle; `metrics` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_env_metrics(env: *mut SaginEnv, metrics: *mut SaginMetrics) -> SaginStatus {
    guard(|| {
        let e = &handle(env)?.inner;
        let m = e.metrics();
        *out(metrics)? = SaginMetrics {
            generated: m.generated,
            delivered: m.delivered,
            dropped: m.dropped,
            in_system: e.world().in_system(),
            throughput_bps: m.throughput_bps,
            drop_rate: m.drop_rate,
            mean_delay_s: m.mean_delay_s,
        };
        Ok(())
    })
}

/// Creates a SAC agent with default hyper-parameters.
///
/// # Safety
/// `out_agent` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_new(obs_dim: usize, num_actions: usize, seed: u64, out_agent: *mut *mut SaginAgent) -> SaginStatus {
    guard(|| {
        let slot = out(out_agent)?;
        *slot = ptr::null_mut();
        if obs_dim == 0 || num_actions < 2 {
            return Err(fail(SaginStatus::InvalidArgument, "need obs_dim >= 1 and num_actions >= 2"));
        }
        let inner = SacAgent::new(obs_dim, num_actions, SacConfig::default(), seed)?;
        *slot = Box::into_raw(Box::new(SaginAgent { inner }));
        Ok(())
    })
}

/// # Safety
/// `agent` must come from [`sagin_agent_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_free(agent: *mut SaginAgent) {
    if !agent.is_null() {
        drop(Box::from_raw(agent));
    }
}

/// Chooses an action: sampled from the policy, or its argmax when `greedy`.
///
/// # Safety
/// `agent` must be a live handle, `obs` valid for `len` floats and `action`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_act(
    agent: *mut SaginAgent,
    obs: *const f32,
    len: usize,
    greedy: bool,
    action: *mut u32,
) -> SaginStatus {
    guard(|| {
        let a = &mut handle(agent)?.inner;
        let mode = if greedy { ActionMode::Greedy } else { ActionMode::Sample };
        *out(action)? = a.select_action(slice(obs, len)?, mode)? as u32;
        Ok(())
    })
}

/// Stores one transition in the agent's replay buffer.
///
/// # Safety
/// `agent` must be a live handle; `obs` and `next_obs` valid for `len`
/// floats.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_remember(
    agent: *mut SaginAgent,
    obs: *const f32,
    action: u32,
    reward: f64,
    next_obs: *const f32,
    len: usize,
    terminal: bool,
) -> SaginStatus {
    guard(|| {
        let a = &mut handle(agent)?.inner;
        let t = Transition {
            obs: slice(obs, len)?.to_vec(),
            action: action as usize,
            reward,
            next_obs: slice(next_obs, len)?.to_vec(),
            terminal,
        };
        a.remember(&t, 0)?;
        Ok(())
    })
}

/// One gradient step on a sampled batch. Returns
/// `SAGIN_STATUS_INSUFFICIENT_REPLAY` and changes nothing while the replay
/// holds fewer transitions than a batch.
///
/// # Safety
/// `agent` must be a live handle; `diag` null or writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_train_step(agent: *mut SaginAgent, diag: *mut SaginDiagnostics) -> SaginStatus {
    guard(|| {
        let d = handle(agent)?.inner.train_step()?;
        if let Some(slot) = diag.as_mut() {
            *slot = SaginDiagnostics {
                trend_loss_1: d.trend_loss[0],
                trend_loss_2: d.trend_loss[1],
                policy_loss: d.policy_loss,
                alpha_loss: d.alpha_loss,
                alpha: d.alpha,
                entropy: d.entropy,
            };
        }
        Ok(())
    })
}

/// Serialises the agent's networks and temperature. `written` receives the
/// required size even when `cap` is too small.
///
/// # Safety
/// `agent` must be a live handle, `buf` valid for `cap` bytes and `written`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_checkpoint(agent: *mut SaginAgent, buf: *mut u8, cap: usize, written: *mut usize) -> SaginStatus {
    guard(|| emit(&handle(agent)?.inner.checkpoint(), buf, cap, written))
}

/// Restores a checkpoint taken from an agent of the same shape.
///
/// # Safety
/// `agent` must be a live handle and `buf` valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_restore(agent: *mut SaginAgent, buf: *const u8, len: usize) -> SaginStatus {
    guard(|| Ok(handle(agent)?.inner.restore(slice(buf, len)?)?))
}

/// Serialised trend network `index` (0 or 1) in wire format.
///
/// # Safety
/// `agent` must be a live handle, `buf` valid for `cap` bytes and `written`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_trend(
    agent: *mut SaginAgent,
    index: usize,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> SaginStatus {
    guard(|| {
        if index > 1 {
            return Err(fail(SaginStatus::InvalidArgument, "trend index must be 0 or 1"));
        }
        emit(&serialize(handle(agent)?.inner.trend(index)), buf, cap, written)
    })
}

/// Replaces both global backup networks from wire-format buffers.
///
/// # Safety
/// `agent` must be a live handle; each buffer valid for its length.
#[no_mangle]
pub unsafe extern "C" fn sagin_agent_set_backups(
    agent: *mut SaginAgent,
    trend1: *const u8,
    len1: usize,
    trend2: *const u8,
    len2: usize,
) -> SaginStatus {
    guard(|| {
        let a = &mut handle(agent)?.inner;
        let globals = [deserialize(slice(trend1, len1)?)?, deserialize(slice(trend2, len2)?)?];
        a.sync_trends(&globals)?;
        Ok(())
    })
}

/// `eps * local + (1 - eps) * global` on wire-format parameter sets.
///
/// # Safety
/// Input buffers valid for their lengths, `buf` for `cap` bytes, `written`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_params_blend(
    global: *const u8,
    global_len: usize,
    local: *const u8,
    local_len: usize,
    eps: f64,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> SaginStatus {
    guard(|| {
        let g = deserialize(slice(global, global_len)?)?;
        let l = deserialize(slice(local, local_len)?)?;
        emit(&serialize(&aggregate_soft(&g, &l, eps)?), buf, cap, written)
    })
}

/// Elementwise mean of `count` wire-format parameter sets.
///
/// # Safety
/// `models` and `lens` valid for `count` entries, each model buffer valid
/// for its length, `buf` for `cap` bytes, `written` writable.
#[no_mangle]
pub unsafe extern "C" fn sagin_params_mean(
    models: *const *const u8,
    lens: *const usize,
    count: usize,
    buf: *mut u8,
    cap: usize,
    written: *mut usize,
) -> SaginStatus {
    guard(|| {
        let ptrs = slice(models, count)?;
        let lens = slice(lens, count)?;
        let sets = ptrs
            .iter()
            .zip(lens)
            .map(|(&p, &n)| Ok(deserialize(slice(p, n)?)?))
            .collect::<Result<Vec<ParamSet>, Failure>>()?;
        let refs: Vec<&ParamSet> = sets.iter().collect();
        emit(&serialize(&aggregate_mean(&refs)?), buf, cap, written)
    })
}
