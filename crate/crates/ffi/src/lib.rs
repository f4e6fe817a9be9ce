//! C interface to `wearcnn`.
//!
//! Every function returns a [`WcnnStatus`]; results go through out-pointers.
//! On failure, `wcnn_last_error()` describes the most recent error on the
//! calling thread. Networks are opaque handles created by
//! `wcnn_network_new` or `wcnn_network_load` and released with
//! `wcnn_network_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use wearcnn::data::class_of_radius;
use wearcnn::network::{CnnBlueprint, Network, Topology};
use wearcnn::stats::{one_tailed_test, p_one_tailed, t_critical, Moments};
use wearcnn::tensor::ops::Mode;
use wearcnn::tensor::Tensor;
use wearcnn::train::init_network;

pub const WCNN_PROFILE_PAPER: u32 = 0;
pub const WCNN_PROFILE_DESK: u32 = 1;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WcnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Checkpoint = 4,
    Shape = 5,
    Internal = 6,
    Panic = 7,
}

/// Result of a one-tailed Welch test of H0: mean A <= mean B.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WcnnWelch {
    pub t_stat: f64,
    pub df_raw: f64,
    pub df_floor: f64,
    pub t_crit: f64,
    pub p: f64,
    pub reject: bool,
}

/// Opaque network handle.
pub struct WcnnNetwork {
    inner: Network<f32>,
}

struct Failure(WcnnStatus, String);

impl From<wearcnn::Error> for Failure {
    fn from(e: wearcnn::Error) -> Self {
        use wearcnn::Error as E;
        let status = match &e {
            E::Shape { .. } => WcnnStatus::Shape,
            E::InvalidArgument(_) | E::NonFinite { .. } | E::Config(_) => WcnnStatus::InvalidArgument,
            E::Checkpoint(_) => WcnnStatus::Checkpoint,
            E::Io { .. } => WcnnStatus::Io,
            _ => WcnnStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WcnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WcnnStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal panic: {msg}"));
            WcnnStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(WcnnStatus::NullPointer, format!("`{what}` is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(WcnnStatus::InvalidArgument, msg.into())
}

unsafe fn path_arg(p: *const c_char, what: &str) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    let s = CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("`{what}` is not UTF-8")))?;
    Ok(PathBuf::from(s))
}

unsafe fn network<'a>(net: *const WcnnNetwork) -> Result<&'a Network<f32>, Failure> {
    net.as_ref().map(|n| &n.inner).ok_or_else(|| null("network"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn boxed(inner: Network<f32>) -> *mut WcnnNetwork {
    Box::into_raw(Box::new(WcnnNetwork { inner }))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn wcnn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Freshly initialised network of the given profile.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_new(profile: u32, seed: u64, out: *mut *mut WcnnNetwork) -> WcnnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let blueprint = match profile {
            WCNN_PROFILE_PAPER => CnnBlueprint::paper(),
            WCNN_PROFILE_DESK => CnnBlueprint::desk(),
            other => return Err(invalid(format!("unknown profile {other}"))),
        };
        let net = init_network(&blueprint.build()?, seed)?;
        out.write(boxed(net));
        Ok(())
    })
}

/// Network from a TOML topology file and a checkpoint.
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_load(
    topology_path: *const c_char,
    checkpoint_path: *const c_char,
    out: *mut *mut WcnnNetwork,
) -> WcnnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let tpath = path_arg(topology_path, "topology_path")?;
        let cpath = path_arg(checkpoint_path, "checkpoint_path")?;
        let text = std::fs::read_to_string(&tpath)
            .map_err(|e| Failure(WcnnStatus::Io, format!("{}: {e}", tpath.display())))?;
        let topology = Topology::from_toml(&text)?;
        out.write(boxed(Network::load_checkpoint(topology, cpath)?));
        Ok(())
    })
}

/// Writes the topology and the weights.
///
/// # Safety
/// `net` must come from this library; paths must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_save(
    net: *const WcnnNetwork,
    topology_path: *const c_char,
    checkpoint_path: *const c_char,
) -> WcnnStatus {
    guard(|| {
        let net = network(net)?;
        let tpath = path_arg(topology_path, "topology_path")?;
        let cpath = path_arg(checkpoint_path, "checkpoint_path")?;
        let text = net.topology.to_toml()?;
        std::fs::write(&tpath, text).map_err(|e| Failure(WcnnStatus::Io, format!("{}: {e}", tpath.display())))?;
        net.save_checkpoint(cpath)?;
        Ok(())
    })
}

/// Releases a network; NULL is ignored.
///
/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_free(net: *mut WcnnNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Number of trainable parameters.
///
/// # Safety
/// `net` must come from this library; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_param_count(net: *const WcnnNetwork, out: *mut usize) -> WcnnStatus {
    guard(|| write_out(out, network(net)?.count_trainable_params(), "out"))
}

/// Number of layers in the topology.
///
/// # Safety
/// `net` must come from this library; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_layer_count(net: *const WcnnNetwork, out: *mut usize) -> WcnnStatus {
    guard(|| write_out(out, network(net)?.topology.count_layers(), "out"))
}

/// Height, width and channels of one input image.
///
/// # Safety
/// `net` must come from this library; `out` must hold 3 values.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_input_shape(net: *const WcnnNetwork, out: *mut usize) -> WcnnStatus {
    guard(|| {
        let shape = network(net)?.topology.input_shape;
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(shape.as_ptr(), out, 3);
        Ok(())
    })
}

/// Classifies `n` images stored row-major as `n × height × width × 3`
/// floats in `[0, 1]`. Writes `n` class indices to `classes` and, unless
/// `probabilities` is NULL, `n × 16` class probabilities.
///
/// # Safety
/// Buffers must hold the stated number of elements.
#[no_mangle]
pub unsafe extern "C" fn wcnn_network_predict(
    net: *const WcnnNetwork,
    images: *const f32,
    n: usize,
    classes: *mut u32,
    probabilities: *mut f32,
) -> WcnnStatus {
    guard(|| {
        let net = network(net)?;
        if images.is_null() {
            return Err(null("images"));
        }
        if classes.is_null() {
            return Err(null("classes"));
        }
        if n == 0 {
            return Ok(());
        }
        let [h, w, c] = net.topology.input_shape;
        let len = n
            .checked_mul(h * w * c)
            .ok_or_else(|| invalid(format!("{n} images overflow the address space")))?;
        let data = std::slice::from_raw_parts(images, len).to_vec();
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("images contain non-finite values"));
        }
        let probs = net.forward(&Tensor::new(vec![n, h, w, c], data)?, Mode::Infer)?;
        let k = net.topology.classes();
        for (i, row) in probs.data().chunks(k).enumerate() {
            let best = row
                .iter()
                .enumerate()
                .fold(0, |b, (j, v)| if *v > row[b] { j } else { b });
            classes.add(i).write(best as u32);
        }
        if !probabilities.is_null() {
            ptr::copy_nonoverlapping(probs.data().as_ptr(), probabilities, n * k);
        }
        Ok(())
    })
}

/// Wear class of a cutting-edge radius in millimetres.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wcnn_class_of_radius(radius_mm: f64, out: *mut u32) -> WcnnStatus {
    guard(|| write_out(out, class_of_radius(radius_mm)? as u32, "out"))
}

/// Upper-tail critical value of Student's t.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wcnn_t_critical(alpha: f64, df: f64, out: *mut f64) -> WcnnStatus {
    guard(|| write_out(out, t_critical(alpha, df)?, "out"))
}

/// One-tailed p-value `P(T > t)`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn wcnn_p_one_tailed(t: f64, df: f64, out: *mut f64) -> WcnnStatus {
    guard(|| write_out(out, p_one_tailed(t, df)?, "out"))
}

/// Welch test of H0: mean A <= mean B from sample moments (standard
/// deviations with the N − 1 denominator).
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn wcnn_welch_one_tailed(
    mean_a: f64,
    sd_a: f64,
    n_a: usize,
    mean_b: f64,
    sd_b: f64,
    n_b: usize,
    alpha: f64,
    out: *mut WcnnWelch,
) -> WcnnStatus {
    guard(|| {
        if n_a < 2 || n_b < 2 {
            return Err(invalid("each group needs at least two samples"));
        }
        let a = Moments { mean: mean_a, sd: sd_a, n: n_a };
        let b = Moments { mean: mean_b, sd: sd_b, n: n_b };
        let w = one_tailed_test(&a, &b, alpha)?;
        write_out(
            out,
            WcnnWelch {
                t_stat: w.t_stat,
                df_raw: w.df_raw,
                df_floor: w.df_floor,
                t_crit: w.t_crit,
                p: w.p,
                reject: w.reject,
            },
            "out",
        )
    })
}
