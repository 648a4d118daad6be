//! C ABI for the quantized-Gaussian privacy accountant.
//!
//! Every fallible function returns a [`QdpStatus`]; results go through out
//! pointers. On failure a message is kept per thread and can be read with
//! [`qdp_last_error_message`]. Handles are opaque and must be released with
//! their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use qdp_core::accountant::{self, DpPoint, MechanismSpec, Order, RdpPoint};
use qdp_core::quantizer::{self, QuantizerSpec};
use qdp_core::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    OutOfRange = 3,
    BufferTooSmall = 4,
    Unbounded = 5,
    Unreachable = 6,
    Panic = 7,
}

/// Opaque quantized Gaussian mechanism: noise, quantizer and sensitivity.
pub struct QdpMechanism {
    inner: MechanismSpec,
}

/// Opaque k-level stochastic quantizer.
pub struct QdpQuantizer {
    inner: QuantizerSpec,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> QdpStatus {
    match err {
        Error::OutOfRange { .. } => QdpStatus::OutOfRange,
        Error::Unbounded => QdpStatus::Unbounded,
        Error::Unreachable { .. } => QdpStatus::Unreachable,
        _ => QdpStatus::InvalidArgument,
    }
}

fn fail(status: QdpStatus, msg: impl Into<String>) -> QdpStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), QdpStatus>) -> QdpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QdpStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(QdpStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, QdpStatus>;
}

impl<T> OrStatus<T> for qdp_core::Result<T> {
    fn or_status(self) -> Result<T, QdpStatus> {
        self.map_err(|e| fail(status_of(&e), e.to_string()))
    }
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), QdpStatus> {
    if out.is_null() {
        return Err(fail(QdpStatus::NullPointer, "output pointer is null"));
    }
    out.write(value);
    Ok(())
}

unsafe fn borrow<'a, T>(ptr: *const T) -> Result<&'a T, QdpStatus> {
    ptr.as_ref()
        .ok_or_else(|| fail(QdpStatus::NullPointer, "handle is null"))
}

unsafe fn input<'a>(ptr: *const f64, len: usize) -> Result<&'a [f64], QdpStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(fail(QdpStatus::NullPointer, "input buffer is null"));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

fn order(alpha: f64) -> Result<Order, QdpStatus> {
    Order::new(alpha).or_status()
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator; 0 when there is no error.
#[no_mangle]
pub unsafe extern "C" fn qdp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Creates a mechanism with `k` levels, clipping radius `c_q` and noise
/// standard deviation `sigma`. Sensitivity is `c_q`.
#[no_mangle]
pub unsafe extern "C" fn qdp_mechanism_new(k: usize, c_q: f64, sigma: f64, out: *mut *mut QdpMechanism) -> QdpStatus {
    guard(|| {
        let inner = MechanismSpec::from_parts(k, c_q, sigma).or_status()?;
        write_out(out, Box::into_raw(Box::new(QdpMechanism { inner })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn qdp_mechanism_free(mech: *mut QdpMechanism) {
    if !mech.is_null() {
        drop(Box::from_raw(mech));
    }
}

#[no_mangle]
pub unsafe extern "C" fn qdp_mechanism_levels(mech: *const QdpMechanism, out: *mut usize) -> QdpStatus {
    guard(|| write_out(out, borrow(mech)?.inner.quant.levels()))
}

/// Fills `probs[0..k]` with the output pmf for input `x` in `[-c_q/2, c_q/2]`.
#[no_mangle]
pub unsafe extern "C" fn qdp_mechanism_pmf(
    mech: *const QdpMechanism,
    x: f64,
    probs: *mut f64,
    len: usize,
) -> QdpStatus {
    guard(|| {
        let m = borrow(mech)?;
        let k = m.inner.quant.levels();
        if len < k {
            return Err(fail(QdpStatus::BufferTooSmall, format!("need {k} slots, got {len}")));
        }
        if probs.is_null() {
            return Err(fail(QdpStatus::NullPointer, "probs is null"));
        }
        let pmf = m.inner.pmf(x).or_status()?;
        slice::from_raw_parts_mut(probs, k).copy_from_slice(pmf.probs());
        Ok(())
    })
}

/// Order-1 budget (nats).
#[no_mangle]
pub unsafe extern "C" fn qdp_mechanism_epsilon_one(mech: *const QdpMechanism, out: *mut f64) -> QdpStatus {
    guard(|| {
        let eps = accountant::epsilon_one(&borrow(mech)?.inner).or_status()?;
        write_out(out, eps)
    })
}

/// Closed-form order-infinity budget (nats).
#[no_mangle]
pub unsafe extern "C" fn qdp_mechanism_epsilon_infinity(mech: *const QdpMechanism, out: *mut f64) -> QdpStatus {
    guard(|| {
        let eps = accountant::epsilon_infinity(&borrow(mech)?.inner).or_status()?;
        write_out(out, eps)
    })
}

/// `D_alpha(p || q)` for two probability vectors of length `len`. Pass
/// `INFINITY` for the order-infinity divergence.
#[no_mangle]
pub unsafe extern "C" fn qdp_renyi_divergence(
    p: *const f64,
    q: *const f64,
    len: usize,
    alpha: f64,
    out: *mut f64,
) -> QdpStatus {
    guard(|| {
        let d = accountant::renyi_divergence_probs(input(p, len)?, input(q, len)?, order(alpha)?).or_status()?;
        write_out(out, d)
    })
}

/// Gaussian mechanism RDP `alpha * s^2 / (2 sigma^2)`; `Unbounded` at infinite order.
#[no_mangle]
pub unsafe extern "C" fn qdp_gaussian_rdp(sensitivity: f64, sigma: f64, alpha: f64, out: *mut f64) -> QdpStatus {
    guard(|| {
        let p = accountant::gaussian_rdp_baseline(sensitivity, sigma, order(alpha)?).or_status()?;
        write_out(out, p.epsilon)
    })
}

/// Converts `(alpha, epsilon)`-RDP to the DP epsilon at `delta`.
#[no_mangle]
pub unsafe extern "C" fn qdp_rdp_to_dp(alpha: f64, epsilon: f64, delta: f64, out: *mut f64) -> QdpStatus {
    guard(|| {
        let point = RdpPoint::new(order(alpha)?, epsilon).or_status()?;
        write_out(out, accountant::rdp_to_dp(point, delta).or_status()?.epsilon)
    })
}

/// Smallest Gaussian sigma meeting `(epsilon, delta)` after `rounds`
/// compositions, over the default order grid.
#[no_mangle]
pub unsafe extern "C" fn qdp_calibrate_sigma(
    epsilon: f64,
    delta: f64,
    rounds: usize,
    sensitivity: f64,
    out: *mut f64,
) -> QdpStatus {
    guard(|| {
        let target = DpPoint::new(epsilon, delta).or_status()?;
        let sigma =
            accountant::calibrate_sigma(target, rounds, sensitivity, &accountant::default_alpha_grid()).or_status()?;
        write_out(out, sigma)
    })
}

#[no_mangle]
pub unsafe extern "C" fn qdp_quantizer_new(k: usize, c_q: f64, out: *mut *mut QdpQuantizer) -> QdpStatus {
    guard(|| {
        let inner = QuantizerSpec::new(k, c_q).or_status()?;
        write_out(out, Box::into_raw(Box::new(QdpQuantizer { inner })))
    })
}

#[no_mangle]
pub unsafe extern "C" fn qdp_quantizer_free(q: *mut QdpQuantizer) {
    if !q.is_null() {
        drop(Box::from_raw(q));
    }
}

/// Clips `input` to the quantizer's l2 ball and rounds each coordinate onto
/// the lattice, writing `len` values to `output`. Randomness comes from the
/// `(seed, stream)` counter-based generator: coordinate `i` uses draw `i`.
#[no_mangle]
pub unsafe extern "C" fn qdp_quantize(
    q: *const QdpQuantizer,
    input: *const f64,
    len: usize,
    seed: u64,
    stream: u64,
    output: *mut f64,
) -> QdpStatus {
    guard(|| {
        let spec = borrow(q)?.inner;
        let values = self::input(input, len)?;
        if len > 0 && output.is_null() {
            return Err(fail(QdpStatus::NullPointer, "output is null"));
        }
        let out = quantizer::quantize_par(values, &spec, seed, stream).or_status()?;
        if len > 0 {
            slice::from_raw_parts_mut(output, len).copy_from_slice(&out);
        }
        Ok(())
    })
}
