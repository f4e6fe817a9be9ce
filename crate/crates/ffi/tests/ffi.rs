use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use wearcnn_ffi::*;

fn new_net(profile: u32, seed: u64) -> *mut WcnnNetwork {
    let mut net = ptr::null_mut();
    assert_eq!(unsafe { wcnn_network_new(profile, seed, &mut net) }, WcnnStatus::Ok);
    assert!(!net.is_null());
    net
}

fn last_error() -> String {
    let p = wcnn_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn predict(net: *const WcnnNetwork, images: &[f32], n: usize) -> (Vec<u32>, Vec<f32>) {
    let mut classes = vec![u32::MAX; n];
    let mut probs = vec![0.0f32; n * 16];
    let status = unsafe { wcnn_network_predict(net, images.as_ptr(), n, classes.as_mut_ptr(), probs.as_mut_ptr()) };
    assert_eq!(status, WcnnStatus::Ok, "{}", last_error());
    (classes, probs)
}

#[test]
fn paper_network_counts() {
    let net = new_net(WCNN_PROFILE_PAPER, 0);
    let (mut params, mut layers) = (0usize, 0usize);
    unsafe {
        assert_eq!(wcnn_network_param_count(net, &mut params), WcnnStatus::Ok);
        assert_eq!(wcnn_network_layer_count(net, &mut layers), WcnnStatus::Ok);
        wcnn_network_free(net);
    }
    assert_eq!(params, 2_273_680);
    assert_eq!(layers, 31);
}

#[test]
fn predictions_are_distributions_and_survive_save_load() {
    let net = new_net(WCNN_PROFILE_DESK, 3);
    let mut shape = [0usize; 3];
    assert_eq!(unsafe { wcnn_network_input_shape(net, shape.as_mut_ptr()) }, WcnnStatus::Ok);
    assert_eq!(shape, [64, 64, 3]);
    let n = 3;
    let per = shape.iter().product::<usize>();
    let images: Vec<f32> = (0..n * per).map(|i| ((i * 7919) % 256) as f32 / 255.0).collect();
    let (classes, probs) = predict(net, &images, n);
    for (i, row) in probs.chunks(16).enumerate() {
        assert!((row.iter().sum::<f32>() - 1.0).abs() < 1e-4);
        let argmax = row.iter().enumerate().fold(0, |b, (j, v)| if *v > row[b] { j } else { b });
        assert_eq!(classes[i] as usize, argmax);
    }

    let dir = tempfile::tempdir().unwrap();
    let topo = CString::new(dir.path().join("t.toml").to_str().unwrap()).unwrap();
    let ckpt = CString::new(dir.path().join("m.wcnn").to_str().unwrap()).unwrap();
    let mut loaded = ptr::null_mut();
    unsafe {
        assert_eq!(wcnn_network_save(net, topo.as_ptr(), ckpt.as_ptr()), WcnnStatus::Ok);
        assert_eq!(wcnn_network_load(topo.as_ptr(), ckpt.as_ptr(), &mut loaded), WcnnStatus::Ok);
    }
    let (classes2, probs2) = predict(loaded, &images, n);
    assert_eq!(classes, classes2);
    assert_eq!(probs, probs2);
    unsafe {
        wcnn_network_free(net);
        wcnn_network_free(loaded);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut out = 0usize;
    assert_eq!(unsafe { wcnn_network_param_count(ptr::null(), &mut out) }, WcnnStatus::NullPointer);
    assert!(last_error().contains("network"));

    let mut net = ptr::null_mut();
    assert_eq!(unsafe { wcnn_network_new(9, 0, &mut net) }, WcnnStatus::InvalidArgument);
    assert!(net.is_null());
    assert!(last_error().contains("profile"));

    let missing = CString::new("/nonexistent/t.toml").unwrap();
    assert_eq!(unsafe { wcnn_network_load(missing.as_ptr(), missing.as_ptr(), &mut net) }, WcnnStatus::Io);

    let dir = tempfile::tempdir().unwrap();
    let topo_path = dir.path().join("t.toml");
    let ckpt_path = dir.path().join("m.wcnn");
    let good = new_net(WCNN_PROFILE_DESK, 0);
    let topo = CString::new(topo_path.to_str().unwrap()).unwrap();
    let ckpt = CString::new(ckpt_path.to_str().unwrap()).unwrap();
    unsafe {
        assert_eq!(wcnn_network_save(good, topo.as_ptr(), ckpt.as_ptr()), WcnnStatus::Ok);
        wcnn_network_free(good);
    }
    let mut bytes = std::fs::read(&ckpt_path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0xff;
    std::fs::write(&ckpt_path, bytes).unwrap();
    assert_eq!(unsafe { wcnn_network_load(topo.as_ptr(), ckpt.as_ptr(), &mut net) }, WcnnStatus::Checkpoint);

    let net = new_net(WCNN_PROFILE_DESK, 0);
    let bad = vec![f32::NAN; 64 * 64 * 3];
    let mut class = 0u32;
    let status = unsafe { wcnn_network_predict(net, bad.as_ptr(), 1, &mut class, ptr::null_mut()) };
    assert_eq!(status, WcnnStatus::InvalidArgument);
    unsafe { wcnn_network_free(net) };
    unsafe { wcnn_network_free(ptr::null_mut()) };
}

#[test]
fn radius_classes() {
    let mut class = 0u32;
    assert_eq!(unsafe { wcnn_class_of_radius(0.35, &mut class) }, WcnnStatus::Ok);
    assert_eq!(class, 6);
    assert_eq!(unsafe { wcnn_class_of_radius(0.0, &mut class) }, WcnnStatus::Ok);
    assert_eq!(class, 0);
    assert_eq!(unsafe { wcnn_class_of_radius(0.80, &mut class) }, WcnnStatus::Ok);
    assert_eq!(class, 15);
    assert_eq!(unsafe { wcnn_class_of_radius(0.33, &mut class) }, WcnnStatus::InvalidArgument);
}

#[test]
fn welch_and_t_distribution() {
    let mut w = WcnnWelch { t_stat: 0.0, df_raw: 0.0, df_floor: 0.0, t_crit: 0.0, p: 0.0, reject: false };
    let status = unsafe { wcnn_welch_one_tailed(0.9894, 0.0024, 100, 0.9880, 0.0037, 100, 0.01, &mut w) };
    assert_eq!(status, WcnnStatus::Ok);
    assert_eq!(w.df_floor, 169.0);
    assert!((w.t_stat - 3.174).abs() < 1e-3);
    assert!(w.reject);

    let mut v = 0.0;
    assert_eq!(unsafe { wcnn_t_critical(0.01, 169.0, &mut v) }, WcnnStatus::Ok);
    assert!((v - 2.348).abs() < 0.01);
    assert_eq!(unsafe { wcnn_p_one_tailed(0.0, 12.0, &mut v) }, WcnnStatus::Ok);
    assert!((v - 0.5).abs() < 1e-12);
    assert_eq!(unsafe { wcnn_p_one_tailed(1.0, 0.0, &mut v) }, WcnnStatus::InvalidArgument);
    assert_eq!(unsafe { wcnn_t_critical(1.5, 10.0, &mut v) }, WcnnStatus::InvalidArgument);
    let status = unsafe { wcnn_welch_one_tailed(0.5, 0.1, 1, 0.4, 0.1, 10, 0.01, &mut w) };
    assert_eq!(status, WcnnStatus::InvalidArgument);
}

/// Compiles and runs a C program against the generated header and the
/// static library.
#[test]
fn c_program_links_against_header() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // test binaries live in <target>/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libwearcnn_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let bin = dir.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-o"])
        .arg(&bin)
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2273680 31 169 1");
}
