//! C ABI for `rankdp`.
//!
//! Handles are opaque and owned by the caller: every `*_new` has a matching
//! `*_free`. Functions return a [`RankdpStatus`]; on failure the message is
//! available from [`rankdp_last_error_message`] on the same thread.
//!
//! Rankings cross the boundary as arrays of `m` 1-based ranks (`size_t`).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use rankdp::rng::{rng_from_seed, DpRng};
use rankdp::{Error, LaplaceMechanism, MallowsMechanism, Ranking};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankdpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidRanking = 2,
    InvalidArgument = 3,
    CapExceeded = 4,
    Internal = 5,
}

/// Mallows synthesizer for a fixed `epsilon` and `m`.
pub struct RankdpMallows(MallowsMechanism);

/// Laplace score-perturbation mechanism.
pub struct RankdpLaplace(LaplaceMechanism);

/// Seeded random generator.
pub struct RankdpRng(DpRng);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> RankdpStatus {
    match err {
        Error::NotAPermutation { .. } | Error::TooShort(_) | Error::SizeMismatch { .. } => RankdpStatus::InvalidRanking,
        Error::CapExceeded { .. } => RankdpStatus::CapExceeded,
        _ => RankdpStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RankdpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RankdpStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            RankdpStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            RankdpStatus::Internal
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn ranking(p: *const usize, m: usize, what: &'static str) -> Result<Ranking, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(Ranking::new(slice::from_raw_parts(p, m).to_vec())?)
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &'static str) -> Result<&'a mut [T], Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

/// Message of the last failure on this thread; empty when none. Valid until
/// the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rankdp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rankdp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rankdp_rng_new(seed: u64, out: *mut *mut RankdpRng) -> RankdpStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        *out = Box::into_raw(Box::new(RankdpRng(rng_from_seed(seed))));
        Ok(())
    })
}

/// # Safety
/// `rng` must come from [`rankdp_rng_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rankdp_rng_free(rng: *mut RankdpRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rankdp_mallows_new(epsilon: f64, m: usize, out: *mut *mut RankdpMallows) -> RankdpStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let mech = MallowsMechanism::new(epsilon, m)?;
        *out = Box::into_raw(Box::new(RankdpMallows(mech)));
        Ok(())
    })
}

/// # Safety
/// `mech` must come from [`rankdp_mallows_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rankdp_mallows_free(mech: *mut RankdpMallows) {
    if !mech.is_null() {
        drop(Box::from_raw(mech));
    }
}

/// Draws one synthetic ranking of `input` into `output` (both `m` ranks).
///
/// # Safety
/// Pointers must be valid; `input` and `output` must hold `m` elements.
#[no_mangle]
pub unsafe extern "C" fn rankdp_mallows_synthesize(
    mech: *const RankdpMallows,
    rng: *mut RankdpRng,
    input: *const usize,
    m: usize,
    output: *mut usize,
) -> RankdpStatus {
    guard(|| {
        let mech = &borrow(mech, "mech")?.0;
        let rng = &mut borrow_mut(rng, "rng")?.0;
        let input = ranking(input, m, "input")?;
        let out = out_slice(output, m, "output")?;
        let r = mech.synthesize(&input, rng)?;
        out.copy_from_slice(r.ranks());
        Ok(())
    })
}

/// Probability of `output` given `input` under the Mallows model.
///
/// # Safety
/// Pointers must be valid; `input` and `output` must hold `m` elements.
#[no_mangle]
pub unsafe extern "C" fn rankdp_mallows_pmf(
    mech: *const RankdpMallows,
    input: *const usize,
    output: *const usize,
    m: usize,
    out: *mut f64,
) -> RankdpStatus {
    guard(|| {
        let mech = &borrow(mech, "mech")?.0;
        let a = ranking(input, m, "input")?;
        let b = ranking(output, m, "output")?;
        *borrow_mut(out, "out")? = mech.mallows_pmf(&a, &b)?;
        Ok(())
    })
}

/// Exact privacy loss of the synthesizer around `base` (`m` <= 8).
///
/// # Safety
/// Pointers must be valid; `base` must hold `m` elements.
#[no_mangle]
pub unsafe extern "C" fn rankdp_exact_epsilon(
    mech: *const RankdpMallows,
    base: *const usize,
    m: usize,
    out: *mut f64,
) -> RankdpStatus {
    guard(|| {
        let mech = &borrow(mech, "mech")?.0;
        let base = ranking(base, m, "base")?;
        *borrow_mut(out, "out")? = rankdp::exact_epsilon(mech, &base)?.measured_epsilon;
        Ok(())
    })
}

/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn rankdp_laplace_new(epsilon: f64, m: usize, out: *mut *mut RankdpLaplace) -> RankdpStatus {
    guard(|| {
        let out = borrow_mut(out, "out")?;
        let mech = LaplaceMechanism::new(epsilon, m)?;
        *out = Box::into_raw(Box::new(RankdpLaplace(mech)));
        Ok(())
    })
}

/// # Safety
/// `mech` must come from [`rankdp_laplace_new`] and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rankdp_laplace_free(mech: *mut RankdpLaplace) {
    if !mech.is_null() {
        drop(Box::from_raw(mech));
    }
}

/// Writes the noisy scores `rank_i + Laplace(scale)` for `input` into `scores`.
///
/// # Safety
/// Pointers must be valid; `input` and `scores` must hold `m` elements.
#[no_mangle]
pub unsafe extern "C" fn rankdp_laplace_perturb(
    mech: *const RankdpLaplace,
    rng: *mut RankdpRng,
    input: *const usize,
    m: usize,
    scores: *mut f64,
) -> RankdpStatus {
    guard(|| {
        let mech = &borrow(mech, "mech")?.0;
        let rng = &mut borrow_mut(rng, "rng")?.0;
        let input = ranking(input, m, "input")?;
        let out = out_slice(scores, m, "scores")?;
        out.copy_from_slice(&mech.perturb(&input, rng)?.values);
        Ok(())
    })
}

/// Ranks of `m` scores in ascending order, ties to the lower index.
///
/// # Safety
/// `scores` and `ranks` must hold `m` elements.
#[no_mangle]
pub unsafe extern "C" fn rankdp_induced_ranking(scores: *const f64, m: usize, ranks: *mut usize) -> RankdpStatus {
    guard(|| {
        if scores.is_null() {
            return Err(Fail::Null("scores"));
        }
        let s = slice::from_raw_parts(scores, m);
        let out = out_slice(ranks, m, "ranks")?;
        out.copy_from_slice(rankdp::induced_ranking(s)?.ranks());
        Ok(())
    })
}

/// Number of item pairs ordered the same way by both rankings.
///
/// # Safety
/// `a` and `b` must hold `m` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rankdp_concordant_pairs(
    a: *const usize,
    b: *const usize,
    m: usize,
    out: *mut usize,
) -> RankdpStatus {
    guard(|| {
        let a = ranking(a, m, "a")?;
        let b = ranking(b, m, "b")?;
        *borrow_mut(out, "out")? = rankdp::concordant_pairs(&a, &b)?;
        Ok(())
    })
}

/// Closed-form expected concordance of the Mallows synthesizer.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rankdp_expected_concordance_mallows(m: usize, epsilon: f64, out: *mut f64) -> RankdpStatus {
    guard(|| {
        *borrow_mut(out, "out")? = rankdp::expected_concordance_mallows(m, epsilon)?;
        Ok(())
    })
}

/// Closed-form expected concordance of the Laplace mechanism.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rankdp_expected_concordance_laplace(m: usize, epsilon: f64, out: *mut f64) -> RankdpStatus {
    guard(|| {
        *borrow_mut(out, "out")? = rankdp::expected_concordance_laplace(m, epsilon)?;
        Ok(())
    })
}
