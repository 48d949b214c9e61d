//! C ABI over `narrametric`.
//!
//! Every function returns an [`NmStatus`]; results go through out-pointers.
//! On failure a message is kept per thread and can be read with
//! [`nm_last_error_message`]. Evaluators are opaque handles created by an
//! `nm_evaluator_new_*` function and released with [`nm_evaluator_free`].
//! Undefined metric values come back with `defined == 0`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use narrametric::metrics::{Direction, Evaluator, Measure, MetricVector};
use narrametric::scoring::{BigramCacheProvider, HttpProvider, LogprobProvider};
use narrametric::stats::{self, MissingRankPolicy};
use narrametric::{fit_decay, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Undefined = 4,
    Provider = 5,
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

type FfiResult = Result<(), (NmStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult) -> NmStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NmStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside narrametric");
            NmStatus::Panic
        }
    }
}

fn from_error(e: Error) -> (NmStatus, String) {
    let status = if e.is_provider() {
        NmStatus::Provider
    } else {
        NmStatus::InvalidArgument
    };
    (status, e.to_string())
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, (NmStatus, String)> {
    p.as_mut().ok_or((NmStatus::NullPointer, "null output pointer".into()))
}

unsafe fn str_arg<'a>(p: *const c_char) -> Result<&'a str, (NmStatus, String)> {
    if p.is_null() {
        return Err((NmStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (NmStatus::InvalidUtf8, e.to_string()))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize) -> Result<&'a [f64], (NmStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err((NmStatus::NullPointer, "null array argument".into()));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn nm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmMeasure {
    pub defined: i32,
    pub value: f64,
}

impl From<Measure> for NmMeasure {
    fn from(m: Measure) -> Self {
        match m {
            Measure::Defined(value) => NmMeasure { defined: 1, value },
            Measure::Undefined(_) => NmMeasure {
                defined: 0,
                value: f64::NAN,
            },
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmMetrics {
    pub ppl: NmMeasure,
    pub dist2: NmMeasure,
    pub ttr: NmMeasure,
    pub vr: NmMeasure,
    pub cd: NmMeasure,
    pub fdr: NmMeasure,
    pub csr: NmMeasure,
    pub cecpr: NmMeasure,
    pub dcpr: NmMeasure,
    pub ccpr: NmMeasure,
    pub ttcpr: NmMeasure,
    pub vcpr: NmMeasure,
}

impl From<&MetricVector> for NmMetrics {
    fn from(m: &MetricVector) -> Self {
        NmMetrics {
            ppl: m.ppl.into(),
            dist2: m.dist2.into(),
            ttr: m.ttr.into(),
            vr: m.vr.into(),
            cd: m.cd.into(),
            fdr: m.fdr.into(),
            csr: m.csr.into(),
            cecpr: m.cecpr.into(),
            dcpr: m.dcpr.into(),
            ccpr: m.ccpr.into(),
            ttcpr: m.ttcpr.into(),
            vcpr: m.vcpr.into(),
        }
    }
}

/// Opaque evaluator: segmenter, lexicons, shuffle policy and provider.
pub struct NmEvaluator {
    evaluator: Evaluator,
    provider: Box<dyn LogprobProvider>,
}

fn new_evaluator(provider: Box<dyn LogprobProvider>, seed: u64, shuffles: usize, out: *mut *mut NmEvaluator) -> NmStatus {
    guard(|| {
        let out = unsafe { out_ref(out)? };
        let mut evaluator = Evaluator::default();
        evaluator.config.seed = seed;
        if shuffles > 0 {
            evaluator.config.shuffles = shuffles;
        }
        *out = Box::into_raw(Box::new(NmEvaluator { evaluator, provider }));
        Ok(())
    })
}

/// Evaluator backed by the logprob sidecar at `endpoint`. `shuffles == 0`
/// keeps the default shuffle count.
#[no_mangle]
pub unsafe extern "C" fn nm_evaluator_new_http(
    endpoint: *const c_char,
    seed: u64,
    shuffles: usize,
    out: *mut *mut NmEvaluator,
) -> NmStatus {
    let mut provider = None;
    let status = guard(|| {
        let endpoint = str_arg(endpoint)?;
        provider = Some(HttpProvider::new(endpoint).map_err(|e| (NmStatus::InvalidArgument, e.to_string()))?);
        Ok(())
    });
    match provider {
        Some(p) => new_evaluator(Box::new(p), seed, shuffles, out),
        None => status,
    }
}

/// Evaluator backed by the offline bigram-cache mock scorer.
#[no_mangle]
pub extern "C" fn nm_evaluator_new_mock(seed: u64, shuffles: usize, out: *mut *mut NmEvaluator) -> NmStatus {
    new_evaluator(Box::new(BigramCacheProvider::default()), seed, shuffles, out)
}

/// Releases an evaluator. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn nm_evaluator_free(handle: *mut NmEvaluator) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// All twelve metrics for one text.
#[no_mangle]
pub unsafe extern "C" fn nm_evaluate(handle: *const NmEvaluator, text: *const c_char, out: *mut NmMetrics) -> NmStatus {
    guard(|| {
        let h = handle
            .as_ref()
            .ok_or((NmStatus::NullPointer, "null evaluator".to_string()))?;
        let text = str_arg(text)?;
        let out = out_ref(out)?;
        let eval = h.evaluator.evaluate(text, h.provider.as_ref()).map_err(from_error)?;
        *out = NmMetrics::from(&eval.metrics);
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmTextStats {
    pub words: usize,
    pub sentences: usize,
    pub dist2: NmMeasure,
    pub ttr: f64,
    pub vr: f64,
    pub cr: f64,
    pub cer: f64,
}

/// Surface statistics with the default tokenizer and lexicons.
#[no_mangle]
pub unsafe extern "C" fn nm_text_stats(text: *const c_char, out: *mut NmTextStats) -> NmStatus {
    guard(|| {
        let text = str_arg(text)?;
        let out = out_ref(out)?;
        let ev = Evaluator::default();
        let t = narrametric::ExplanationText::new(text, &ev.segmenter);
        let s = ev.lexicons.surface_stats(&t.words).map_err(from_error)?;
        *out = NmTextStats {
            words: t.word_count(),
            sentences: t.sentence_count(),
            dist2: s.dist2.map_or(Measure::Undefined(narrametric::Undefined::TooFewWords), Measure::Defined).into(),
            ttr: s.ttr,
            vr: s.vr,
            cr: s.cr,
            cer: s.cer,
        };
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmDecayFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: f64,
    pub r_squared: f64,
    pub rmse: f64,
}

/// Fits `y(x) = A exp(-b x) + C` to `values[0..len]` (x = 1..len).
/// Returns `NM_STATUS_UNDEFINED` when the fit is undefined.
#[no_mangle]
pub unsafe extern "C" fn nm_fit_decay(values: *const f64, len: usize, out: *mut NmDecayFit) -> NmStatus {
    guard(|| {
        let values = slice_arg(values, len)?;
        let out = out_ref(out)?;
        let f = fit_decay(values).map_err(|u| (NmStatus::Undefined, u.to_string()))?;
        *out = NmDecayFit {
            a: f.a,
            b: f.b,
            c: f.c,
            r: f.r,
            r_squared: f.r_squared,
            rmse: f.rmse,
        };
        Ok(())
    })
}

/// Upper tail of the studentized range with infinite degrees of freedom.
#[no_mangle]
pub unsafe extern "C" fn nm_studentized_range_sf(q: f64, k: usize, out: *mut f64) -> NmStatus {
    guard(|| {
        let out = out_ref(out)?;
        if k < 2 || q.is_nan() {
            return Err((NmStatus::InvalidArgument, "need k >= 2 and a numeric q".into()));
        }
        *out = stats::studentized_range_sf(q, k);
        Ok(())
    })
}

/// Critical difference for `k` methods over `n` datasets.
#[no_mangle]
pub unsafe extern "C" fn nm_critical_difference(k: usize, n: usize, alpha: f64, out: *mut f64) -> NmStatus {
    guard(|| {
        let out = out_ref(out)?;
        if k < 2 || n < 1 || !(alpha > 0.0 && alpha < 1.0) {
            return Err((NmStatus::InvalidArgument, "need k >= 2, n >= 1, 0 < alpha < 1".into()));
        }
        *out = stats::critical_difference(k, n, alpha);
        Ok(())
    })
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NmFriedman {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
}

/// Friedman test over a row-major `n_datasets x k` value matrix. NaN marks
/// a missing cell (ranked equal-last); `higher_is_better` sets direction.
#[no_mangle]
pub unsafe extern "C" fn nm_friedman(
    values: *const f64,
    n_datasets: usize,
    k: usize,
    higher_is_better: bool,
    tie_correction: bool,
    out: *mut NmFriedman,
) -> NmStatus {
    guard(|| {
        let len = n_datasets
            .checked_mul(k)
            .ok_or((NmStatus::InvalidArgument, "matrix too large".to_string()))?;
        let values = slice_arg(values, len)?;
        let out = out_ref(out)?;
        let direction = if higher_is_better {
            Direction::Higher
        } else {
            Direction::Lower
        };
        let ranks = values
            .chunks(k.max(1))
            .map(|row| {
                let row: Vec<Option<f64>> = row.iter().map(|v| (!v.is_nan()).then_some(*v)).collect();
                stats::rank_row(&row, direction, MissingRankPolicy::MidRank)
            })
            .collect::<narrametric::Result<Vec<_>>>()
            .map_err(from_error)?;
        let table = stats::RankTable::from_ranks(
            (0..k).map(|j| j.to_string()).collect(),
            (0..n_datasets).map(|i| i.to_string()).collect(),
            ranks,
        )
        .map_err(from_error)?;
        let f = stats::friedman(&table, tie_correction).map_err(from_error)?;
        *out = NmFriedman {
            chi2: f.chi2,
            df: f.df,
            p: f.p,
        };
        Ok(())
    })
}
