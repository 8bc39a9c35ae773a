// Copyright 2026 the oneway developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License.You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! C ABI for the oneway simulator.
//!
//! Conventions:
//! * Every fallible call returns an [`OwStatus`]; results come back through
//!   out-pointers. On failure the out-pointer is untouched and a
//!   human-readable message is available from [`ow_last_error`] (valid on
//!   the calling thread until the next failing call).
//! * `OwKet` is an opaque handle; release it with [`ow_ket_free`]. Strings
//!   returned through `char**` are owned by the caller and released with
//!   [`ow_string_free`].
//! * Angles are radians; orderings are the bytes 'a'..'d'; booleans are
//!   0/1 integers.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use oneway::cluster::{build_cluster, GraphSpec, OrderingName};
use oneway::mbqc::{run_pattern, Pattern, RunMode};
use oneway::noise::{run_cnot_dm, run_cphase_dm, run_rotation_dm, NoiseSpec};
use oneway::protocols::{
    run_cnot, run_cphase, run_rotation, CnotJob, CnotReport, CphaseJob, CphaseReport, OracleChoice,
    RotationJob, RotationReport,
};
use oneway::statevec::Ket;

/// Call outcome.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ImpossibleBranch = 3,
    Utf8 = 4,
    Panic = 5,
}

/// Opaque state-vector handle.
pub struct OwKet {
    inner: Ket,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &oneway::Error) -> OwStatus {
    match err {
        oneway::Error::ImpossibleBranch { .. } => OwStatus::ImpossibleBranch,
        _ => OwStatus::InvalidArgument,
    }
}

fn fail(err: oneway::Error) -> OwStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn guard(body: impl FnOnce() -> OwStatus) -> OwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            OwStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, OwStatus> {
    if ptr.is_null() {
        set_error("null string pointer");
        return Err(OwStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("string is not valid UTF-8");
        OwStatus::Utf8
    })
}

fn give_string(json: String, out: *mut *mut c_char) -> OwStatus {
    match CString::new(json) {
        Ok(cstring) => {
            unsafe { *out = cstring.into_raw() };
            OwStatus::Ok
        }
        Err(_) => {
            set_error("result contained an interior NUL byte");
            OwStatus::InvalidArgument
        }
    }
}

fn noise_of(noise_p: f64) -> Result<NoiseSpec, oneway::Error> {
    let spec = NoiseSpec::white(noise_p);
    spec.validate(4)?;
    Ok(spec)
}

fn parse_ordering(byte: c_char) -> Result<OrderingName, oneway::Error> {
    match byte as u8 {
        b'a' => Ok(OrderingName::A),
        b'b' => Ok(OrderingName::B),
        b'c' => Ok(OrderingName::C),
        b'd' => Ok(OrderingName::D),
        other => Err(oneway::Error::InvalidParameter(format!(
            "unknown ordering byte {other:#x}, expected 'a'..'d'"
        ))),
    }
}

fn rotation_report_value(report: &RotationReport) -> serde_json::Value {
    serde_json::json!({
        "alpha": report.alpha,
        "beta": report.beta,
        "ordering": report.ordering.to_string(),
        "rows": report.rows.iter().map(|r| serde_json::json!({
            "s1": r.s1,
            "s2": r.s2,
            "s3": r.s3,
            "probability": r.probability,
            "ff_on_fidelity": r.ff_on_fidelity,
            "ff_off_fidelity": r.ff_off_fidelity,
            "closed_form_fidelity": r.closed_form_fidelity,
        })).collect::<Vec<_>>(),
    })
}

fn cnot_report_value(report: &CnotReport) -> serde_json::Value {
    serde_json::json!({
        "alpha": report.alpha,
        "oracle": match report.o_choice {
            OracleChoice::Identity => "id",
            OracleChoice::Hadamard => "h",
        },
        "ht_compensated": report.ht_compensated,
        "rows": report.rows.iter().map(|r| serde_json::json!({
            "s1": r.s1,
            "s4": r.s4,
            "probability": r.probability,
            "closed_form_fidelity": r.closed_form_fidelity,
            "corrected_fidelity": r.corrected_fidelity,
            "control_readout": r.control_readout,
            "conditional": r.conditional.iter().map(|c| serde_json::json!({
                "readout": c.readout,
                "probability": c.probability,
                "fidelity": c.fidelity,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

fn cphase_report_value(report: &CphaseReport) -> serde_json::Value {
    serde_json::json!({
        "alpha": report.alpha,
        "beta": report.beta,
        "rows": report.rows.iter().map(|r| serde_json::json!({
            "s1": r.s1,
            "s2": r.s2,
            "probability": r.probability,
            "closed_form_fidelity": r.closed_form_fidelity,
            "corrected_fidelity": r.corrected_fidelity,
            "conditional": r.conditional.iter().map(|c| serde_json::json!({
                "control": if c.control_plus { "plus" } else { "minus" },
                "probability": c.probability,
                "fidelity": c.fidelity,
            })).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Library version as a static string; never freed.
#[no_mangle]
pub extern "C" fn ow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on this thread. Valid until the next
/// failing call; never freed by the caller.
#[no_mangle]
pub extern "C" fn ow_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds the linear-chain cluster state on `n` qubits.
/// # Safety
/// `out` must point to writable storage for one `*mut OwKet`.
#[no_mangle]
pub unsafe extern "C" fn ow_cluster_chain(n: u32, out: *mut *mut OwKet) -> OwStatus {
    guard(|| {
        if out.is_null() {
            set_error("null out pointer");
            return OwStatus::NullPointer;
        }
        match build_cluster(&GraphSpec::chain(n as usize)) {
            Ok(ket) => {
                unsafe { *out = Box::into_raw(Box::new(OwKet { inner: ket })) };
                OwStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Builds a cluster state from a JSON graph {"n":…, "edges":[[i,j],…]}.
/// # Safety
/// `graph_json` must be a valid NUL-terminated string and `out` must
/// point to writable storage for one `*mut OwKet`.
#[no_mangle]
pub unsafe extern "C" fn ow_cluster_from_graph_json(
    graph_json: *const c_char,
    out: *mut *mut OwKet,
) -> OwStatus {
    guard(|| {
        if out.is_null() {
            set_error("null out pointer");
            return OwStatus::NullPointer;
        }
        let text = match unsafe { read_str(graph_json) } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let graph: GraphSpec = match serde_json::from_str(text) {
            Ok(g) => g,
            Err(err) => {
                set_error(&format!("bad graph json: {err}"));
                return OwStatus::InvalidArgument;
            }
        };
        match build_cluster(&graph) {
            Ok(ket) => {
                unsafe { *out = Box::into_raw(Box::new(OwKet { inner: ket })) };
                OwStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Number of qubits in the handle.
/// # Safety
/// `ket` must be a live handle from this library and `out` must point to
/// writable storage for one `u32`.
#[no_mangle]
pub unsafe extern "C" fn ow_ket_num_qubits(ket: *const OwKet, out: *mut u32) -> OwStatus {
    guard(|| {
        if ket.is_null() || out.is_null() {
            set_error("null pointer");
            return OwStatus::NullPointer;
        }
        unsafe { *out = (*ket).inner.n_qubits() as u32 };
        OwStatus::Ok
    })
}

/// Copies the 2^n amplitudes into caller-provided real/imaginary buffers
/// of length `len` (which must equal 2^n).
/// # Safety
/// `ket` must be a live handle and `re`/`im` must each point to `len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ow_ket_amplitudes(
    ket: *const OwKet,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> OwStatus {
    guard(|| {
        if ket.is_null() || re.is_null() || im.is_null() {
            set_error("null pointer");
            return OwStatus::NullPointer;
        }
        let amps = unsafe { (*ket).inner.amplitudes() };
        if len != amps.len() {
            set_error(&format!(
                "buffer length {len} does not match amplitude count {}",
                amps.len()
            ));
            return OwStatus::InvalidArgument;
        }
        for (i, amp) in amps.iter().enumerate() {
            unsafe {
                *re.add(i) = amp.re;
                *im.add(i) = amp.im;
            }
        }
        OwStatus::Ok
    })
}

/// Releases a state handle. Null is a no-op.
/// # Safety
/// `ket` must be null or a handle produced by this library that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn ow_ket_free(ket: *mut OwKet) {
    if !ket.is_null() {
        drop(unsafe { Box::from_raw(ket) });
    }
}

/// Releases a string returned through a `char**` out-parameter.
/// # Safety
/// `s` must be null or a string produced by this library that has not
/// been freed already.
#[no_mangle]
pub unsafe extern "C" fn ow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Runs the single-qubit rotation protocol and returns the per-branch
/// report as a JSON string. `ordering` is 'a' or 'b'; `noise_p` in [0, 1]
/// is the white-noise weight (1 = ideal).
/// # Safety
/// `out_json` must point to writable storage for one `*mut c_char`.
#[no_mangle]
pub unsafe extern "C" fn ow_rotation_report_json(
    alpha: f64,
    beta: f64,
    ordering: c_char,
    noise_p: f64,
    out_json: *mut *mut c_char,
) -> OwStatus {
    guard(|| {
        if out_json.is_null() {
            set_error("null out pointer");
            return OwStatus::NullPointer;
        }
        let name = match parse_ordering(ordering) {
            Ok(n) => n,
            Err(err) => return fail(err),
        };
        let job = RotationJob {
            alpha,
            beta,
            ordering: name,
            ff_enabled: true,
            branch_filter: None,
        };
        let report = if noise_p >= 1.0 {
            run_rotation(&job)
        } else {
            match noise_of(noise_p) {
                Ok(spec) => run_rotation_dm(&job, &spec),
                Err(err) => return fail(err),
            }
        };
        match report {
            Ok(r) => give_string(rotation_report_value(&r).to_string(), out_json),
            Err(err) => fail(err),
        }
    })
}

/// Runs the C-NOT protocol. `oracle_hadamard` selects 𝒪 = H (1) or
/// 𝒪 = 𝟙 (0); `ht_compensated` toggles the target-Hadamard compensation.
/// # Safety
/// `out_json` must point to writable storage for one `*mut c_char`.
#[no_mangle]
pub unsafe extern "C" fn ow_cnot_report_json(
    alpha: f64,
    oracle_hadamard: i32,
    ht_compensated: i32,
    noise_p: f64,
    out_json: *mut *mut c_char,
) -> OwStatus {
    guard(|| {
        if out_json.is_null() {
            set_error("null out pointer");
            return OwStatus::NullPointer;
        }
        let job = CnotJob {
            alpha,
            o_choice: if oracle_hadamard != 0 {
                OracleChoice::Hadamard
            } else {
                OracleChoice::Identity
            },
            ht_compensated: ht_compensated != 0,
            branch_filter: None,
        };
        let report = if noise_p >= 1.0 {
            run_cnot(&job)
        } else {
            match noise_of(noise_p) {
                Ok(spec) => run_cnot_dm(&job, &spec),
                Err(err) => return fail(err),
            }
        };
        match report {
            Ok(r) => give_string(cnot_report_value(&r).to_string(), out_json),
            Err(err) => fail(err),
        }
    })
}

/// Runs the C-Phase protocol.
/// # Safety
/// `out_json` must point to writable storage for one `*mut c_char`.
#[no_mangle]
pub unsafe extern "C" fn ow_cphase_report_json(
    alpha: f64,
    beta: f64,
    noise_p: f64,
    out_json: *mut *mut c_char,
) -> OwStatus {
    guard(|| {
        if out_json.is_null() {
            set_error("null out pointer");
            return OwStatus::NullPointer;
        }
        let job = CphaseJob {
            alpha,
            beta,
            branch_filter: None,
        };
        let report = if noise_p >= 1.0 {
            run_cphase(&job)
        } else {
            match noise_of(noise_p) {
                Ok(spec) => run_cphase_dm(&job, &spec),
                Err(err) => return fail(err),
            }
        };
        match report {
            Ok(r) => give_string(cphase_report_value(&r).to_string(), out_json),
            Err(err) => fail(err),
        }
    })
}

/// Stabilizer fidelity of the white-noise 4-qubit cluster state,
/// p + (1−p)/16 computed through the 16-element stabilizer average.
/// # Safety
/// `out` must point to writable storage for one `f64`.
#[no_mangle]
pub unsafe extern "C" fn ow_stabilizer_fidelity_white(p: f64, out: *mut f64) -> OwStatus {
    guard(|| {
        if out.is_null() {
            set_error("null out pointer");
            return OwStatus::NullPointer;
        }
        let spec = GraphSpec::chain(4);
        let result = (|| -> oneway::Result<f64> {
            let cluster = build_cluster(&spec)?;
            let rho = oneway::noise::apply_white_noise(&cluster, p)?;
            let group = oneway::cluster::stabilizer_group(&spec, None)?;
            oneway::cluster::stabilizer_fidelity(&rho, &group)
        })();
        match result {
            Ok(f) => {
                unsafe { *out = f };
                OwStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Enumerates all branches of a serialized pattern on a cluster state
/// (JSON graph optional, defaults to the linear chain) and returns them as
/// JSON: outcomes, probability, frame, output amplitudes.
/// # Safety
/// `pattern_json` must be a valid NUL-terminated string, `graph_json`
/// must be null or a valid NUL-terminated string, and `out_json` must
/// point to writable storage for one `*mut c_char`.
#[no_mangle]
pub unsafe extern "C" fn ow_pattern_branches_json(
    pattern_json: *const c_char,
    graph_json: *const c_char,
    out_json: *mut *mut c_char,
) -> OwStatus {
    guard(|| {
        if out_json.is_null() {
            set_error("null out pointer");
            return OwStatus::NullPointer;
        }
        let pattern_text = match unsafe { read_str(pattern_json) } {
            Ok(t) => t,
            Err(status) => return status,
        };
        let pattern: Pattern = match serde_json::from_str(pattern_text) {
            Ok(p) => p,
            Err(err) => {
                set_error(&format!("bad pattern json: {err}"));
                return OwStatus::InvalidArgument;
            }
        };
        if let Err(err) = pattern.validate() {
            return fail(err);
        }
        let graph = if graph_json.is_null() {
            GraphSpec::chain(pattern.n_qubits())
        } else {
            let text = match unsafe { read_str(graph_json) } {
                Ok(t) => t,
                Err(status) => return status,
            };
            match serde_json::from_str::<GraphSpec>(text) {
                Ok(g) => g,
                Err(err) => {
                    set_error(&format!("bad graph json: {err}"));
                    return OwStatus::InvalidArgument;
                }
            }
        };
        let result = (|| -> oneway::Result<serde_json::Value> {
            let state = build_cluster(&graph)?;
            let branches = run_pattern(&state, &pattern, &RunMode::Enumerate)?;
            Ok(serde_json::json!({
                "branches": branches.iter().map(|b| serde_json::json!({
                    "outcomes": b.outcome_bits(&pattern),
                    "probability": b.probability,
                    "frame": b.frame.entries.iter().map(|(q, bits)| {
                        (q.to_string(), serde_json::json!({"x": bits.x, "z": bits.z}))
                    }).collect::<serde_json::Map<_, _>>(),
                    "amplitudes": b.output_state.amplitudes().iter()
                        .map(|a| [a.re, a.im]).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
            }))
        })();
        match result {
            Ok(value) => give_string(value.to_string(), out_json),
            Err(err) => fail(err),
        }
    })
}
