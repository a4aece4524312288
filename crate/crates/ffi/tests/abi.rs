use std::ffi::CString;
use std::path::Path;
use std::process::Command;
use std::ptr;

use stringsim_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { ss_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let bytes: Vec<u8> = buf[..n.min(255)].iter().map(|&c| c as u8).collect();
    String::from_utf8(bytes).unwrap()
}

fn string_model(l: usize, g: f64, h: f64) -> *mut SsModel {
    let mut m = ptr::null_mut();
    let st = unsafe { ss_model_new_exponential(l, 1.0, 0.78, g, h, SsEnvironment::String, &mut m) };
    assert_eq!(st, SsStatus::Ok);
    m
}

#[test]
fn string_state_has_charges_at_the_ends() {
    let m = string_model(13, 0.75, 0.6);
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ss_model_num_sites(m), 13);
        assert_eq!(ss_state_new_initial(m, &mut s), SsStatus::Ok);
        assert_eq!(ss_state_num_bonds(s), 16);
        let mut q = [0.0; 16];
        assert_eq!(
            ss_state_charge_density(s, q.as_mut_ptr(), q.len()),
            SsStatus::Ok
        );
        assert_eq!(q[0], 1.0);
        assert_eq!(q[15], 1.0);
        assert!(q[1..15].iter().all(|&v| v == 0.0));
        ss_state_free(s);
        ss_model_free(m);
    }
}

#[test]
fn propagation_preserves_norm_and_moves_charge() {
    let m = string_model(8, 0.75, 0.6);
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ss_state_new_initial(m, &mut s), SsStatus::Ok);
        assert_eq!(ss_state_propagate(m, s, 0.1, 10), SsStatus::Ok);
        let mut eps = [0.0; 8];
        assert_eq!(
            ss_state_electric_field(s, eps.as_mut_ptr(), 8),
            SsStatus::Ok
        );
        assert!(eps.iter().all(|&e| e > -1.0 && e <= 1.0));
        ss_state_free(s);
        ss_model_free(m);
    }
}

#[test]
fn virtual_field_is_symmetric_for_the_string() {
    let m = string_model(13, 0.5, 0.0);
    let mut d = [0.0; 13];
    unsafe {
        assert_eq!(ss_model_virtual_field(m, d.as_mut_ptr(), 13), SsStatus::Ok);
        ss_model_free(m);
    }
    for i in 0..13 {
        assert_eq!(d[i], d[12 - i]);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let m = string_model(5, 0.5, 0.2);
        let mut small = [0.0; 2];
        assert_eq!(
            ss_model_virtual_field(m, small.as_mut_ptr(), 2),
            SsStatus::BufferTooSmall
        );
        assert!(last_error().contains("buffer"));
        assert_eq!(
            ss_model_virtual_field(ptr::null(), small.as_mut_ptr(), 2),
            SsStatus::NullPointer
        );
        let mut v = 0.0;
        assert_eq!(
            ss_two_body_potential(3, 2, 1.0, 0.78, 0.3, 13, &mut v),
            SsStatus::InvalidArgument
        );
        assert_eq!(
            ss_two_body_potential(-6, -5, 1.0, 0.78, 0.3, 13, &mut v),
            SsStatus::Ok
        );
        assert!(v > 0.0);
        let mut big = ptr::null_mut();
        assert_eq!(
            ss_model_new_exponential(40, 1.0, 0.78, 0.5, 0.1, SsEnvironment::None, &mut big),
            SsStatus::SizeLimit
        );
        let bad = CString::new("/nonexistent/scenario.toml").unwrap();
        assert_eq!(ss_run_scenario(bad.as_ptr(), ptr::null()), SsStatus::Config);
        ss_model_free(m);
        ss_model_free(ptr::null_mut());
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/stringsim.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for sym in [
        "ss_model_new_exponential",
        "ss_state_propagate",
        "SS_STATUS_OK",
        "typedef struct SsModel SsModel",
    ] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler available; syntax check skipped");
        return;
    };
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
