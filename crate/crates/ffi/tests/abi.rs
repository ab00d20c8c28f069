use std::ffi::{CStr, CString};
use std::ptr;

use sagin_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { sagin_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn new_env(toml: Option<&str>, seed: u64) -> (SaginStatus, *mut SaginEnv) {
    let text = toml.map(|t| CString::new(t).unwrap());
    let mut env = ptr::null_mut();
    let st = unsafe { sagin_env_new(text.as_ref().map_or(ptr::null(), |c| c.as_ptr()), seed, &mut env) };
    (st, env)
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(sagin_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn env_lifecycle_keeps_packets_conserved() {
    let (st, env) = new_env(None, 3);
    assert_eq!(st, SaginStatus::Ok);
    let (mut agents, mut obs, mut actions) = (0usize, 0usize, 0usize);
    assert_eq!(unsafe { sagin_env_dims(env, &mut agents, &mut obs, &mut actions) }, SaginStatus::Ok);
    assert!(agents > 0 && obs > 0 && actions >= 2);

    let mut buf = vec![0f32; obs];
    let acts = vec![1u32; agents];
    for _ in 0..200 {
        for a in 0..agents {
            let mut needs = false;
            assert_eq!(unsafe { sagin_env_needs_action(env, a, &mut needs) }, SaginStatus::Ok);
            assert_eq!(unsafe { sagin_env_observe(env, a, buf.as_mut_ptr(), obs) }, SaginStatus::Ok);
            assert!(buf.iter().all(|v| v.is_finite()));
        }
        assert_eq!(unsafe { sagin_env_step(env, acts.as_ptr(), agents) }, SaginStatus::Ok);
    }
    let mut m = SaginMetrics::default();
    assert_eq!(unsafe { sagin_env_metrics(env, &mut m) }, SaginStatus::Ok);
    assert!(m.generated > 0);
    assert_eq!(m.generated, m.delivered + m.dropped + m.in_system);
    unsafe { sagin_env_free(env) };
}

#[test]
fn env_rejects_bad_input_with_codes() {
    let (st, env) = new_env(Some("[sim]\nbogus = 1"), 0);
    assert_eq!(st, SaginStatus::Config);
    assert!(env.is_null());
    assert!(!last_error().is_empty());

    let (st, env) = new_env(Some("seeds = [1]\n[sim]\nnum_sources = 5\n"), 0);
    assert_eq!(st, SaginStatus::Ok);
    let (mut agents, mut obs, mut actions) = (0usize, 0usize, 0usize);
    unsafe { sagin_env_dims(env, &mut agents, &mut obs, &mut actions) };
    let mut buf = vec![0f32; obs + 1];
    assert_eq!(
        unsafe { sagin_env_observe(env, 0, buf.as_mut_ptr(), obs + 1) },
        SaginStatus::Dimension
    );
    assert_eq!(
        unsafe { sagin_env_observe(env, agents, buf.as_mut_ptr(), obs) },
        SaginStatus::InvalidArgument
    );
    let bad = vec![actions as u32; agents];
    assert_eq!(unsafe { sagin_env_step(env, bad.as_ptr(), agents) }, SaginStatus::InvalidArgument);
    assert!(last_error().contains("out of range"));
    assert_eq!(unsafe { sagin_env_step(env, ptr::null(), agents) }, SaginStatus::NullPointer);
    unsafe { sagin_env_free(env) };

    assert_eq!(
        unsafe { sagin_env_dims(ptr::null_mut(), &mut agents, &mut obs, &mut actions) },
        SaginStatus::NullPointer
    );
    unsafe { sagin_env_free(ptr::null_mut()) };
}

#[test]
fn agent_trains_and_checkpoints() {
    let mut agent = ptr::null_mut();
    assert_eq!(unsafe { sagin_agent_new(4, 2, 7, &mut agent) }, SaginStatus::Ok);

    let mut diag = SaginDiagnostics::default();
    assert_eq!(unsafe { sagin_agent_train_step(agent, &mut diag) }, SaginStatus::InsufficientReplay);

    let obs = [0.1f32, -0.2, 0.3, 0.0];
    for i in 0..1000u32 {
        let mut a = 0u32;
        assert_eq!(
            unsafe { sagin_agent_act(agent, obs.as_ptr(), 4, i % 2 == 0, &mut a) },
            SaginStatus::Ok
        );
        assert!(a < 2);
        assert_eq!(
            unsafe { sagin_agent_remember(agent, obs.as_ptr(), a, 1.0, obs.as_ptr(), 4, false) },
            SaginStatus::Ok
        );
    }
    assert_eq!(unsafe { sagin_agent_train_step(agent, &mut diag) }, SaginStatus::Ok);
    assert!(diag.alpha > 0.0 && diag.policy_loss.is_finite());

    let mut need = 0usize;
    assert_eq!(
        unsafe { sagin_agent_checkpoint(agent, ptr::null_mut(), 0, &mut need) },
        SaginStatus::BufferTooSmall
    );
    let mut ck = vec![0u8; need];
    assert_eq!(
        unsafe { sagin_agent_checkpoint(agent, ck.as_mut_ptr(), ck.len(), &mut need) },
        SaginStatus::Ok
    );

    let mut other = ptr::null_mut();
    assert_eq!(unsafe { sagin_agent_new(4, 2, 99, &mut other) }, SaginStatus::Ok);
    assert_eq!(unsafe { sagin_agent_restore(other, ck.as_ptr(), ck.len()) }, SaginStatus::Ok);
    let mut again = vec![0u8; need];
    assert_eq!(
        unsafe { sagin_agent_checkpoint(other, again.as_mut_ptr(), again.len(), &mut need) },
        SaginStatus::Ok
    );
    assert_eq!(ck, again);
    assert_eq!(
        unsafe { sagin_agent_restore(other, ck.as_ptr(), ck.len() - 1) },
        SaginStatus::Decode
    );

    let mut wrong = ptr::null_mut();
    assert_eq!(unsafe { sagin_agent_new(5, 2, 1, &mut wrong) }, SaginStatus::Ok);
    assert_ne!(unsafe { sagin_agent_restore(wrong, ck.as_ptr(), ck.len()) }, SaginStatus::Ok);
    let mut a = 0u32;
    assert_eq!(
        unsafe { sagin_agent_act(wrong, obs.as_ptr(), 4, true, &mut a) },
        SaginStatus::Dimension
    );

    for h in [agent, other, wrong] {
        unsafe { sagin_agent_free(h) };
    }
}

fn trend_bytes(agent: *mut SaginAgent, i: usize) -> Vec<u8> {
    let mut n = 0usize;
    unsafe { sagin_agent_trend(agent, i, ptr::null_mut(), 0, &mut n) };
    let mut buf = vec![0u8; n];
    assert_eq!(unsafe { sagin_agent_trend(agent, i, buf.as_mut_ptr(), n, &mut n) }, SaginStatus::Ok);
    buf
}

#[test]
fn parameter_blend_and_mean_over_the_abi() {
    let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        sagin_agent_new(3, 2, 1, &mut a);
        sagin_agent_new(3, 2, 2, &mut b);
    }
    let (ga, gb) = (trend_bytes(a, 0), trend_bytes(b, 0));
    let mut out = vec![0u8; ga.len()];
    let mut n = 0usize;
    let st = unsafe {
        sagin_params_blend(
            ga.as_ptr(),
            ga.len(),
            gb.as_ptr(),
            gb.len(),
            1.0,
            out.as_mut_ptr(),
            out.len(),
            &mut n,
        )
    };
    assert_eq!(st, SaginStatus::Ok);
    assert_eq!(out, gb);
    let st = unsafe {
        sagin_params_blend(
            ga.as_ptr(),
            ga.len(),
            gb.as_ptr(),
            gb.len(),
            1.5,
            out.as_mut_ptr(),
            out.len(),
            &mut n,
        )
    };
    assert_eq!(st, SaginStatus::InvalidArgument);

    let models = [ga.as_ptr(), ga.as_ptr()];
    let lens = [ga.len(), ga.len()];
    let st = unsafe { sagin_params_mean(models.as_ptr(), lens.as_ptr(), 2, out.as_mut_ptr(), out.len(), &mut n) };
    assert_eq!(st, SaginStatus::Ok);
    assert_eq!(out, ga);
    assert_eq!(
        unsafe { sagin_params_mean(models.as_ptr(), lens.as_ptr(), 0, out.as_mut_ptr(), out.len(), &mut n) },
        SaginStatus::Federation
    );

    let t2 = trend_bytes(b, 1);
    assert_eq!(
        unsafe { sagin_agent_set_backups(a, gb.as_ptr(), gb.len(), t2.as_ptr(), t2.len()) },
        SaginStatus::Ok
    );
    assert_eq!(
        unsafe { sagin_agent_set_backups(a, gb.as_ptr(), 3, t2.as_ptr(), t2.len()) },
        SaginStatus::Decode
    );
    unsafe {
        sagin_agent_free(a);
        sagin_agent_free(b);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/sagin.h")).unwrap();
    for name in [
        "sagin_last_error",
        "sagin_version",
        "sagin_env_new",
        "sagin_env_free",
        "sagin_env_dims",
        "sagin_env_observe",
        "sagin_env_needs_action",
        "sagin_env_step",
        "sagin_env_metrics",
        "sagin_agent_new",
        "sagin_agent_free",
        "sagin_agent_act",
        "sagin_agent_remember",
        "sagin_agent_train_step",
        "sagin_agent_checkpoint",
        "sagin_agent_restore",
        "sagin_agent_trend",
        "sagin_agent_set_backups",
        "sagin_params_blend",
        "sagin_params_mean",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct SaginEnv SaginEnv;"));
    assert!(header.contains("SAGIN_STATUS_INSUFFICIENT_REPLAY = 6"));
}

/// Builds a C program against the generated header and the static library.
#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if std::process::Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler, skipping");
        return;
    }
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let lib = deps.parent().unwrap().join("libsagin_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built, skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = std::process::Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
