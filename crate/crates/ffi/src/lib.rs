//! C ABI for the cryptanalysis workbench: opaque handles over the
//! permutation family and planted instances, status codes for every
//! call, and plain structs for attack ledgers and cost estimates. The
//! header `include/qmitm.h` is generated by cbindgen at build time.
//!
//! Every function catches panics at the boundary and reports them as
//! internal errors; the last error message is kept per thread and
//! readable via `qmitm_last_error_message`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use qmitm_core::adversary::{
    enumerate_inputs, lift_cf_to_ke2, verify_lift, verify_query_reduction, AdvError,
    AdversaryMatrix, Problem,
};
use qmitm_core::attacks::{run_attack, Algorithm, AttackError};
use qmitm_core::cost::{grover_cost, ke2_quantum_cost, ke4_quantum_cost, CostError, CostEstimate};
use qmitm_core::oracle::{
    conjugate_instance, generate_family, plant_instance, query, randomize_instance, Direction,
    Instance, OracleError, PermutationFamily, Query, QueryLedger,
};
use qmitm_core::simulator::{
    build_johnson_walk, grover_simulate, johnson_chain_spectral_gap, szegedy_walk_simulate,
    SimError,
};

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

/// Status code returned by every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmitmStatus {
    QmitmStatusOk = 0,
    QmitmStatusNullPointer = 1,
    QmitmStatusBadArgument = 2,
    QmitmStatusInfeasibleSize = 3,
    QmitmStatusAttackFailed = 4,
    QmitmStatusIo = 5,
    QmitmStatusInternal = 6,
}

use QmitmStatus::*;

/// Attack selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QmitmAlgorithm {
    QmitmAlgorithmExhaustive = 0,
    QmitmAlgorithmMitm2 = 1,
    QmitmAlgorithmMitm4 = 2,
    QmitmAlgorithmDissect4 = 3,
}

impl QmitmAlgorithm {
    fn to_core(self) -> Algorithm {
        match self {
            QmitmAlgorithm::QmitmAlgorithmExhaustive => Algorithm::Exhaustive,
            QmitmAlgorithm::QmitmAlgorithmMitm2 => Algorithm::Mitm2,
            QmitmAlgorithm::QmitmAlgorithmMitm4 => Algorithm::Mitm4,
            QmitmAlgorithm::QmitmAlgorithmDissect4 => Algorithm::Dissect4,
        }
    }
}

/// Opaque handle over a seeded permutation family.
pub struct QmitmFamily(PermutationFamily);

/// Opaque handle over a planted instance.
pub struct QmitmInstance(Instance);

/// Ledger and recovered keys of one attack run.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QmitmAttackResult {
    pub keys: [u64; 4],
    pub key_count: u32,
    pub forward_queries: u64,
    pub inverse_queries: u64,
    pub time_units: u64,
    pub peak_memory_units: u64,
    /// 1 when the tuple re-checked against every pair.
    pub verified: u8,
}

/// Closed-form cost estimate; exponents are exact rationals.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QmitmCostEstimate {
    pub queries: f64,
    pub time_units: f64,
    pub memory_units: f64,
    pub time_exponent_num: i64,
    pub time_exponent_den: i64,
    pub space_exponent_num: i64,
    pub space_exponent_den: i64,
}

impl QmitmCostEstimate {
    fn from_core(est: &CostEstimate) -> Self {
        QmitmCostEstimate {
            queries: est.queries,
            time_units: est.time_units,
            memory_units: est.memory_units,
            time_exponent_num: *est.time_exponent.numer(),
            time_exponent_den: *est.time_exponent.denom(),
            space_exponent_num: *est.space_exponent.numer(),
            space_exponent_den: *est.space_exponent.denom(),
        }
    }
}

/// Szegedy-walk simulation summary.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QmitmWalkReport {
    pub edge_dimension: u64,
    pub stationary_marked_mass: f64,
    pub final_marked_mass: f64,
    pub peak_marked_mass: f64,
    pub spectral_gap: f64,
}

/// Adversary lift verification summary.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QmitmAdvReport {
    pub fiber_size: u64,
    pub norm_cf: f64,
    pub norm_ke2: f64,
    pub fibers_constant: u8,
    pub tensor_ok: u8,
    pub query_reduction_ok: u8,
}

fn oracle_status(err: &OracleError) -> QmitmStatus {
    match err {
        OracleError::InfeasibleSize(_) => QmitmStatusInfeasibleSize,
        OracleError::Io(_) => QmitmStatusIo,
        _ => QmitmStatusBadArgument,
    }
}

fn attack_status(err: &AttackError) -> QmitmStatus {
    match err {
        AttackError::NoKeyFound | AttackError::AmbiguousKey => QmitmStatusAttackFailed,
        AttackError::Oracle(e) => oracle_status(e),
        _ => QmitmStatusBadArgument,
    }
}

fn cost_status(err: &CostError) -> QmitmStatus {
    match err {
        CostError::InfeasibleSearch => QmitmStatusInfeasibleSize,
        _ => QmitmStatusBadArgument,
    }
}

fn sim_status(err: &SimError) -> QmitmStatus {
    match err {
        SimError::DimensionTooLarge { .. } => QmitmStatusInfeasibleSize,
        _ => QmitmStatusBadArgument,
    }
}

fn adv_status(err: &AdvError) -> QmitmStatus {
    match err {
        AdvError::SizeGuard(_) => QmitmStatusInfeasibleSize,
        _ => QmitmStatusBadArgument,
    }
}

fn guarded<F: FnOnce() -> QmitmStatus>(body: F) -> QmitmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            QmitmStatusInternal
        }
    }
}

/// Crate version as a static C string.
#[no_mangle]
pub extern "C" fn qmitm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last error on this thread, or null.
#[no_mangle]
pub extern "C" fn qmitm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |s| s.as_ptr())
    })
}

/// Generates a family of `n_keys` random permutations of
/// `[block_space]` from the seed. The handle must be released with
/// `qmitm_family_free`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmitm_family_generate(
    seed: u64,
    n_keys: u64,
    block_space: u64,
    out: *mut *mut QmitmFamily,
) -> QmitmStatus {
    guarded(|| {
        if out.is_null() {
            return QmitmStatusNullPointer;
        }
        match generate_family(seed, n_keys as usize, block_space as usize) {
            Ok(family) => {
                unsafe { *out = Box::into_raw(Box::new(QmitmFamily(family))) };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                oracle_status(&e)
            }
        }
    })
}

/// # Safety
/// `family` must come from `qmitm_family_generate` and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qmitm_family_free(family: *mut QmitmFamily) {
    if !family.is_null() {
        drop(unsafe { Box::from_raw(family) });
    }
}

/// Plants an instance over a copy of the family. `keys` has `depth`
/// entries; `plaintexts` has `pair_count` entries.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn qmitm_instance_plant(
    family: *const QmitmFamily,
    depth: u32,
    keys: *const u64,
    plaintexts: *const u32,
    pair_count: u64,
    out: *mut *mut QmitmInstance,
) -> QmitmStatus {
    guarded(|| {
        if family.is_null() || keys.is_null() || plaintexts.is_null() || out.is_null() {
            return QmitmStatusNullPointer;
        }
        let family = unsafe { &(*family).0 };
        let keys: Vec<usize> = unsafe { std::slice::from_raw_parts(keys, depth as usize) }
            .iter()
            .map(|&k| k as usize)
            .collect();
        let plaintexts = unsafe { std::slice::from_raw_parts(plaintexts, pair_count as usize) };
        match plant_instance(family.clone(), depth as usize, &keys, plaintexts) {
            Ok(instance) => {
                unsafe { *out = Box::into_raw(Box::new(QmitmInstance(instance))) };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                oracle_status(&e)
            }
        }
    })
}

/// # Safety
/// `instance` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn qmitm_instance_free(instance: *mut QmitmInstance) {
    if !instance.is_null() {
        drop(unsafe { Box::from_raw(instance) });
    }
}

/// One counted oracle query against the instance: `direction` is +1
/// for forward, -1 for inverse; the answer lands in `out`.
///
/// # Safety
/// `instance` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qmitm_instance_query(
    instance: *const QmitmInstance,
    key: u64,
    point: u32,
    direction: i8,
    out: *mut u32,
) -> QmitmStatus {
    guarded(|| {
        if instance.is_null() || out.is_null() {
            return QmitmStatusNullPointer;
        }
        let Some(dir) = Direction::from_sign(direction) else {
            set_last_error("direction must be +1 or -1");
            return QmitmStatusBadArgument;
        };
        let instance = unsafe { &(*instance).0 };
        let mut ledger = QueryLedger::new();
        match query(
            instance,
            Query {
                point,
                key: key as usize,
                direction: dir,
            },
            &mut ledger,
        ) {
            Ok(value) => {
                unsafe { *out = value };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                oracle_status(&e)
            }
        }
    })
}

/// Conjugates every permutation by the transposition (a b) and maps
/// the pairs along, yielding a fresh handle.
///
/// # Safety
/// `instance` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qmitm_instance_conjugate_transposition(
    instance: *const QmitmInstance,
    a: u32,
    b: u32,
    out: *mut *mut QmitmInstance,
) -> QmitmStatus {
    guarded(|| {
        if instance.is_null() || out.is_null() {
            return QmitmStatusNullPointer;
        }
        let inner = unsafe { &(*instance).0 };
        let m = inner.block_space() as u32;
        if a >= m || b >= m {
            set_last_error("transposition points outside the block space");
            return QmitmStatusBadArgument;
        }
        let mut sigma: Vec<u32> = (0..m).collect();
        sigma.swap(a as usize, b as usize);
        match conjugate_instance(inner, &sigma) {
            Ok(conjugated) => {
                unsafe { *out = Box::into_raw(Box::new(QmitmInstance(conjugated))) };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                oracle_status(&e)
            }
        }
    })
}

/// Left-composes every permutation with a fresh seeded random one and
/// recomputes the ciphertexts, yielding a fresh handle.
///
/// # Safety
/// `instance` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qmitm_instance_randomize(
    instance: *const QmitmInstance,
    seed: u64,
    out: *mut *mut QmitmInstance,
) -> QmitmStatus {
    guarded(|| {
        if instance.is_null() || out.is_null() {
            return QmitmStatusNullPointer;
        }
        let inner = unsafe { &(*instance).0 };
        let randomized = randomize_instance(inner, seed);
        unsafe { *out = Box::into_raw(Box::new(QmitmInstance(randomized))) };
        QmitmStatusOk
    })
}

/// Writes the flat binary instance layout to `path`.
///
/// # Safety
/// `instance` must be valid; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn qmitm_instance_to_file(
    instance: *const QmitmInstance,
    path: *const c_char,
) -> QmitmStatus {
    guarded(|| {
        if instance.is_null() || path.is_null() {
            return QmitmStatusNullPointer;
        }
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            set_last_error("path is not valid UTF-8");
            return QmitmStatusBadArgument;
        };
        let inner = unsafe { &(*instance).0 };
        match std::fs::write(Path::new(path), inner.to_bytes()) {
            Ok(()) => QmitmStatusOk,
            Err(e) => {
                set_last_error(&e.to_string());
                QmitmStatusIo
            }
        }
    })
}

/// Reads an instance from the flat binary layout at `path`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qmitm_instance_from_file(
    path: *const c_char,
    out: *mut *mut QmitmInstance,
) -> QmitmStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            return QmitmStatusNullPointer;
        }
        let Ok(path) = unsafe { CStr::from_ptr(path) }.to_str() else {
            set_last_error("path is not valid UTF-8");
            return QmitmStatusBadArgument;
        };
        let bytes = match std::fs::read(Path::new(path)) {
            Ok(bytes) => bytes,
            Err(e) => {
                set_last_error(&e.to_string());
                return QmitmStatusIo;
            }
        };
        match Instance::from_bytes(&bytes, 0) {
            Ok(instance) => {
                unsafe { *out = Box::into_raw(Box::new(QmitmInstance(instance))) };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                oracle_status(&e)
            }
        }
    })
}

/// Runs a classical attack and fills the result struct.
///
/// # Safety
/// `instance` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qmitm_attack_run(
    instance: *const QmitmInstance,
    algorithm: QmitmAlgorithm,
    out: *mut QmitmAttackResult,
) -> QmitmStatus {
    guarded(|| {
        if instance.is_null() || out.is_null() {
            return QmitmStatusNullPointer;
        }
        let inner = unsafe { &(*instance).0 };
        match run_attack(inner, algorithm.to_core()) {
            Ok(result) => {
                let mut keys = [0u64; 4];
                for (slot, &k) in keys.iter_mut().zip(&result.recovered_keys) {
                    *slot = k as u64;
                }
                unsafe {
                    *out = QmitmAttackResult {
                        keys,
                        key_count: result.recovered_keys.len() as u32,
                        forward_queries: result.ledger.forward_queries,
                        inverse_queries: result.ledger.inverse_queries,
                        time_units: result.ledger.time_units,
                        peak_memory_units: result.ledger.peak_memory_units,
                        verified: result.verified as u8,
                    };
                }
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                attack_status(&e)
            }
        }
    })
}

/// Closed-form cost of the quantum 2-encryption attack.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmitm_cost_ke2(n_keys: u64, out: *mut QmitmCostEstimate) -> QmitmStatus {
    guarded(|| {
        if out.is_null() {
            return QmitmStatusNullPointer;
        }
        match ke2_quantum_cost(n_keys as usize) {
            Ok(est) => {
                unsafe { *out = QmitmCostEstimate::from_core(&est) };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                cost_status(&e)
            }
        }
    })
}

/// Closed-form cost of the quantum 4-encryption attack.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmitm_cost_ke4(
    n_keys: u64,
    block_space: u64,
    out: *mut QmitmCostEstimate,
) -> QmitmStatus {
    guarded(|| {
        if out.is_null() {
            return QmitmStatusNullPointer;
        }
        match ke4_quantum_cost(n_keys as usize, block_space as usize) {
            Ok(est) => {
                unsafe { *out = QmitmCostEstimate::from_core(&est) };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                cost_status(&e)
            }
        }
    })
}

/// Grover iteration count for `marked` targets among `space_size`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmitm_cost_grover(
    space_size: u64,
    marked: u64,
    out: *mut QmitmCostEstimate,
) -> QmitmStatus {
    guarded(|| {
        if out.is_null() {
            return QmitmStatusNullPointer;
        }
        match grover_cost(space_size, marked) {
            Ok(est) => {
                unsafe { *out = QmitmCostEstimate::from_core(&est) };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                cost_status(&e)
            }
        }
    })
}

/// Exact Grover simulation marking the first `marked` elements;
/// writes the success probability after `iterations` steps.
///
/// # Safety
/// `out_probability` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmitm_grover_simulate(
    space_size: u64,
    marked: u64,
    iterations: u64,
    out_probability: *mut f64,
) -> QmitmStatus {
    guarded(|| {
        if out_probability.is_null() {
            return QmitmStatusNullPointer;
        }
        let marked: Vec<usize> = (0..marked as usize).collect();
        match grover_simulate(space_size as usize, &marked, iterations as usize) {
            Ok(report) => {
                unsafe { *out_probability = report.marked_probability };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                sim_status(&e)
            }
        }
    })
}

/// Szegedy walk on J(n_keys, subset_size) with the planted pair
/// (i, j) marked, run for `steps` steps.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmitm_walk_simulate(
    n_keys: u64,
    subset_size: u64,
    pair_i: u64,
    pair_j: u64,
    steps: u64,
    out: *mut QmitmWalkReport,
) -> QmitmStatus {
    guarded(|| {
        if out.is_null() {
            return QmitmStatusNullPointer;
        }
        let op = match build_johnson_walk(
            n_keys as usize,
            subset_size as usize,
            (pair_i as usize, pair_j as usize),
        ) {
            Ok(op) => op,
            Err(e) => {
                set_last_error(&e.to_string());
                return sim_status(&e);
            }
        };
        let gap = match johnson_chain_spectral_gap(n_keys as usize, subset_size as usize) {
            Ok(gap) => gap,
            Err(e) => {
                set_last_error(&e.to_string());
                return sim_status(&e);
            }
        };
        let report = szegedy_walk_simulate(&op, steps as usize);
        unsafe {
            *out = QmitmWalkReport {
                edge_dimension: op.dimension() as u64,
                stationary_marked_mass: report.stationary_marked_mass,
                final_marked_mass: report.marked_probability,
                peak_marked_mass: report.peak_marked_mass(),
                spectral_gap: gap,
            };
        }
        QmitmStatusOk
    })
}

/// Lifts the uniform d-CF adversary matrix to d-KE2 at (N, M, P, C)
/// and reports the structure checks.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qmitm_adv_verify(
    n_keys: u64,
    block_space: u64,
    p: u32,
    c: u32,
    out: *mut QmitmAdvReport,
) -> QmitmStatus {
    guarded(|| {
        if out.is_null() {
            return QmitmStatusNullPointer;
        }
        let run = || -> Result<QmitmAdvReport, AdvError> {
            let cf = enumerate_inputs(Problem::DCf, n_keys as usize, block_space as usize, p, c)?;
            let ke2 =
                enumerate_inputs(Problem::DKe2, n_keys as usize, block_space as usize, p, c)?;
            let gamma_cf = AdversaryMatrix::uniform(&cf);
            let gamma_ke2 = lift_cf_to_ke2(&gamma_cf, &cf, &ke2)?;
            let lift = verify_lift(&gamma_cf, &cf, &gamma_ke2, &ke2)?;
            let reduction = verify_query_reduction(&gamma_ke2, &ke2, &gamma_cf, &cf)?;
            Ok(QmitmAdvReport {
                fiber_size: lift.fiber_size as u64,
                norm_cf: lift.norm_cf,
                norm_ke2: lift.norm_ke2,
                fibers_constant: lift.fibers_constant as u8,
                tensor_ok: (lift.tensor_max_dev <= 1e-6) as u8,
                query_reduction_ok: reduction.passes(1e-6) as u8,
            })
        };
        match run() {
            Ok(report) => {
                unsafe { *out = report };
                QmitmStatusOk
            }
            Err(e) => {
                set_last_error(&e.to_string());
                adv_status(&e)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_and_attack_round_trip() {
        unsafe {
            let mut family: *mut QmitmFamily = std::ptr::null_mut();
            assert_eq!(qmitm_family_generate(7, 8, 512, &mut family), QmitmStatusOk);
            assert!(!family.is_null());

            let keys = [2u64, 5];
            let plaintexts = [3u32, 9];
            let mut instance: *mut QmitmInstance = std::ptr::null_mut();
            assert_eq!(
                qmitm_instance_plant(
                    family,
                    2,
                    keys.as_ptr(),
                    plaintexts.as_ptr(),
                    2,
                    &mut instance
                ),
                QmitmStatusOk
            );

            let mut result = std::mem::zeroed::<QmitmAttackResult>();
            assert_eq!(
                qmitm_attack_run(instance, QmitmAlgorithm::QmitmAlgorithmMitm2, &mut result),
                QmitmStatusOk
            );
            assert_eq!(result.key_count, 2);
            assert_eq!(&result.keys[..2], &[2, 5]);
            assert_eq!(result.verified, 1);
            assert!(result.forward_queries > 0);

            qmitm_instance_free(instance);
            qmitm_family_free(family);
        }
    }

    #[test]
    fn query_and_transforms() {
        unsafe {
            let mut family: *mut QmitmFamily = std::ptr::null_mut();
            assert_eq!(qmitm_family_generate(3, 4, 64, &mut family), QmitmStatusOk);
            let keys = [1u64, 2];
            let plaintexts = [5u32];
            let mut instance: *mut QmitmInstance = std::ptr::null_mut();
            assert_eq!(
                qmitm_instance_plant(
                    family,
                    2,
                    keys.as_ptr(),
                    plaintexts.as_ptr(),
                    1,
                    &mut instance
                ),
                QmitmStatusOk
            );

            let mut forward = 0u32;
            assert_eq!(
                qmitm_instance_query(instance, 1, 5, 1, &mut forward),
                QmitmStatusOk
            );
            let mut back = 0u32;
            assert_eq!(
                qmitm_instance_query(instance, 1, forward, -1, &mut back),
                QmitmStatusOk
            );
            assert_eq!(back, 5);
            assert_eq!(
                qmitm_instance_query(instance, 1, 5, 0, &mut back),
                QmitmStatusBadArgument
            );

            let mut conjugated: *mut QmitmInstance = std::ptr::null_mut();
            assert_eq!(
                qmitm_instance_conjugate_transposition(instance, 0, 1, &mut conjugated),
                QmitmStatusOk
            );
            let mut randomized: *mut QmitmInstance = std::ptr::null_mut();
            assert_eq!(
                qmitm_instance_randomize(instance, 11, &mut randomized),
                QmitmStatusOk
            );

            qmitm_instance_free(conjugated);
            qmitm_instance_free(randomized);
            qmitm_instance_free(instance);
            qmitm_family_free(family);
        }
    }

    #[test]
    fn file_round_trip() {
        unsafe {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("inst.bin");
            let c_path = CString::new(path.to_str().unwrap()).unwrap();

            let mut family: *mut QmitmFamily = std::ptr::null_mut();
            assert_eq!(qmitm_family_generate(9, 6, 1296, &mut family), QmitmStatusOk);
            let keys = [0u64, 2, 4, 5];
            let plaintexts = [1u32, 2, 3, 4];
            let mut instance: *mut QmitmInstance = std::ptr::null_mut();
            assert_eq!(
                qmitm_instance_plant(
                    family,
                    4,
                    keys.as_ptr(),
                    plaintexts.as_ptr(),
                    4,
                    &mut instance
                ),
                QmitmStatusOk
            );
            assert_eq!(
                qmitm_instance_to_file(instance, c_path.as_ptr()),
                QmitmStatusOk
            );

            let mut loaded: *mut QmitmInstance = std::ptr::null_mut();
            assert_eq!(
                qmitm_instance_from_file(c_path.as_ptr(), &mut loaded),
                QmitmStatusOk
            );
            let mut result = std::mem::zeroed::<QmitmAttackResult>();
            assert_eq!(
                qmitm_attack_run(loaded, QmitmAlgorithm::QmitmAlgorithmDissect4, &mut result),
                QmitmStatusOk
            );
            assert_eq!(&result.keys[..4], &[0, 2, 4, 5]);

            qmitm_instance_free(loaded);
            qmitm_instance_free(instance);
            qmitm_family_free(family);
        }
    }

    #[test]
    fn cost_and_simulation_entry_points() {
        unsafe {
            let mut est = std::mem::zeroed::<QmitmCostEstimate>();
            assert_eq!(qmitm_cost_ke2(1024, &mut est), QmitmStatusOk);
            assert_eq!((est.time_exponent_num, est.time_exponent_den), (2, 3));

            assert_eq!(qmitm_cost_ke4(1024, 1024, &mut est), QmitmStatusOk);
            assert_eq!((est.time_exponent_num, est.time_exponent_den), (7, 6));

            assert_eq!(qmitm_cost_grover(16, 0, &mut est), QmitmStatusInfeasibleSize);
            assert!(!qmitm_last_error_message().is_null());

            let mut probability = 0.0f64;
            assert_eq!(
                qmitm_grover_simulate(4, 1, 1, &mut probability),
                QmitmStatusOk
            );
            assert!((probability - 1.0).abs() < 1e-12);

            let mut walk = std::mem::zeroed::<QmitmWalkReport>();
            assert_eq!(qmitm_walk_simulate(8, 2, 0, 1, 20, &mut walk), QmitmStatusOk);
            assert_eq!(walk.edge_dimension, 28 * 12);
            assert!((walk.spectral_gap - 2.0 / 3.0).abs() < 1e-9);
            assert!(walk.peak_marked_mass > 5.0 * walk.stationary_marked_mass);

            let mut adv = std::mem::zeroed::<QmitmAdvReport>();
            assert_eq!(qmitm_adv_verify(2, 3, 0, 1, &mut adv), QmitmStatusOk);
            assert_eq!(adv.fibers_constant, 1);
            assert_eq!(adv.tensor_ok, 1);
            assert_eq!(adv.query_reduction_ok, 1);
        }
    }

    #[test]
    fn null_pointers_are_rejected() {
        unsafe {
            assert_eq!(
                qmitm_family_generate(0, 2, 4, std::ptr::null_mut()),
                QmitmStatusNullPointer
            );
            let mut result = std::mem::zeroed::<QmitmAttackResult>();
            assert_eq!(
                qmitm_attack_run(
                    std::ptr::null(),
                    QmitmAlgorithm::QmitmAlgorithmMitm2,
                    &mut result
                ),
                QmitmStatusNullPointer
            );
        }
    }

    #[test]
    fn version_is_a_c_string() {
        let version = unsafe { CStr::from_ptr(qmitm_version()) };
        assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
    }
}
