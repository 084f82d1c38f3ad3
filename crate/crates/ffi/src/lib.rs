//! C interface to the tactile library.
//!
//! Models and strategies are opaque heap handles created by the
//! `*_new`/constructor functions and released with the matching `*_free`.
//! Every fallible call returns a [`TactileStatus`]; on failure a readable
//! message is available from [`tactile_last_error`] on the same thread.
//! Handles are not synchronized: use each one from a single thread at a time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use tactile::data::{Dataset, LabeledSample, Sample, Shape};
use tactile::harness::{account_memory, estimate_mcu_time, MemoryModel};
use tactile::metrics::{self, ObjectiveWeights};
use tactile::model::{parse_architecture, Classifier, Network, TrainConfig};
use tactile::strategies::{
    BatchStrategy, DualRvParams, InfoRvParams, PreemptionParams, RandomParams, StrategyKind,
    StrategyParams,
};
use tactile::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TactileStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NotArmed = 4,
    Io = 5,
    Numeric = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TactileStrategyKind {
    InfoRv = 0,
    DualRv = 1,
    Preemption = 2,
    Random = 3,
}

impl From<TactileStrategyKind> for StrategyKind {
    fn from(k: TactileStrategyKind) -> Self {
        match k {
            TactileStrategyKind::InfoRv => StrategyKind::InfoRv,
            TactileStrategyKind::DualRv => StrategyKind::DualRv,
            TactileStrategyKind::Preemption => StrategyKind::Preemption,
            TactileStrategyKind::Random => StrategyKind::Random,
        }
    }
}

/// Outcome of one strategy step. Values the strategy did not compute are NaN.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TactileDecision {
    pub kept: bool,
    pub trigger_fired: bool,
    /// The batch is complete: take it, label it, retrain, then rearm.
    pub retrain: bool,
    /// The sample only fed a threshold calibration buffer.
    pub calibrating: bool,
    pub has_evicted: bool,
    pub evicted_id: u64,
    pub informativeness: f64,
    pub diversity_after: f64,
    pub gamma: f64,
    pub delta: f64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct TactileDualRvParams {
    pub l_info: usize,
    pub j_info: usize,
    pub l_div: usize,
    pub j_div: usize,
    pub q: usize,
    pub r: usize,
    pub k: usize,
}

/// Opaque classifier handle.
pub struct TactileModel {
    net: Network,
}

/// Opaque strategy handle.
pub struct TactileStrategy {
    inner: Box<dyn BatchStrategy>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

type Failure = (TactileStatus, String);

fn status_of(e: &Error) -> TactileStatus {
    match e {
        Error::ShapeMismatch { .. } | Error::LengthMismatch { .. } => TactileStatus::ShapeMismatch,
        Error::NotArmed => TactileStatus::NotArmed,
        Error::Io { .. }
        | Error::BadMagic { .. }
        | Error::Truncated { .. }
        | Error::Format { .. }
        | Error::CountMismatch { .. }
        | Error::Csv(_) => TactileStatus::Io,
        Error::NonFinite(_) | Error::Factorization | Error::Divergence { .. } => {
            TactileStatus::Numeric
        }
        _ => TactileStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> Failure {
    (status_of(&e), e.to_string())
}

fn set_last_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).unwrap_or_default());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TactileStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            TactileStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(_) => {
            set_last_error(Some("internal panic".into()));
            TactileStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    (TactileStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a, T>(ptr: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out_ref<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        (
            TactileStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

fn sample(model: &TactileModel, id: u64, pixels: &[f32]) -> Result<Sample, Failure> {
    Sample::new(id, model.net.input_shape(), pixels.to_vec()).map_err(fail)
}

fn copy_out(values: &[f64], out: &mut [f64]) -> Result<(), Failure> {
    if out.len() < values.len() {
        return Err((
            TactileStatus::BufferTooSmall,
            format!("output holds {} values, {} needed", out.len(), values.len()),
        ));
    }
    out[..values.len()].copy_from_slice(values);
    Ok(())
}

/// Message describing the last failed call on this thread, or NULL after a
/// successful call. The pointer stays valid until the next call into the
/// library from the same thread.
#[no_mangle]
pub extern "C" fn tactile_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Builds a model. `architecture` is a preset name (`mlp`, `mnist_cnn`,
/// `fashion_cnn`, `cifar_cnn`) or a comma-separated layer list such as
/// `flatten,dense:32:relu,dense:10:softmax`.
///
/// # Safety
/// `architecture` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_new(
    architecture: *const c_char,
    height: usize,
    width: usize,
    channels: usize,
    classes: usize,
    seed: u64,
    out: *mut *mut TactileModel,
) -> TactileStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let specs =
            parse_architecture(text(architecture, "architecture")?, classes).map_err(fail)?;
        let net = Network::new(Shape::new(height, width, channels), specs, seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(TactileModel { net }));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`tactile_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_free(model: *mut TactileModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_feature_len(
    model: *const TactileModel,
    out: *mut usize,
) -> TactileStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out_ref(out, "out")?;
        *out = m.net.feature_len();
        Ok(())
    })
}

/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_class_count(
    model: *const TactileModel,
    out: *mut usize,
) -> TactileStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out_ref(out, "out")?;
        *out = m.net.class_count();
        Ok(())
    })
}

/// Class probabilities for one image of `len` values in [0,1], laid out
/// height-major with interleaved channels.
///
/// # Safety
/// `pixels` must hold `len` floats and `probs` room for `probs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_predict(
    model: *const TactileModel,
    pixels: *const f32,
    len: usize,
    probs: *mut f64,
    probs_len: usize,
) -> TactileStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let x = sample(m, 0, slice(pixels, len, "pixels")?)?;
        let p = m.net.predict_proba(&x).map_err(fail)?;
        copy_out(&p, slice_mut(probs, probs_len, "probs")?)
    })
}

/// Feature-extractor output (the flatten layer) for one image.
///
/// # Safety
/// As for [`tactile_model_predict`].
#[no_mangle]
pub unsafe extern "C" fn tactile_model_features(
    model: *const TactileModel,
    pixels: *const f32,
    len: usize,
    features: *mut f64,
    features_len: usize,
) -> TactileStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let x = sample(m, 0, slice(pixels, len, "pixels")?)?;
        let f = m.net.extract_features(&x).map_err(fail)?;
        copy_out(&f, slice_mut(features, features_len, "features")?)
    })
}

/// Trains on `count` images stored back to back in `pixels` with their
/// `labels`, using Adam with the usual moment defaults. Writes the mean
/// loss of the last epoch to `final_loss` when it is not NULL.
///
/// # Safety
/// `pixels` must hold `count` images and `labels` `count` entries.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_train(
    model: *mut TactileModel,
    pixels: *const f32,
    labels: *const u32,
    count: usize,
    epochs: usize,
    batch_size: usize,
    learning_rate: f64,
    seed: u64,
    warm_start: bool,
    final_loss: *mut f64,
) -> TactileStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        let shape = m.net.input_shape();
        let pixels = slice(pixels, count * shape.len(), "pixels")?;
        let labels = slice(labels, count, "labels")?;
        let items = pixels
            .chunks_exact(shape.len().max(1))
            .zip(labels)
            .enumerate()
            .map(|(i, (px, &label))| {
                Ok(LabeledSample {
                    sample: Sample::new(i as u64, shape, px.to_vec())?,
                    label: label as usize,
                })
            })
            .collect::<tactile::Result<Vec<_>>>()
            .map_err(fail)?;
        let data = Dataset::new(shape, m.net.class_count(), items).map_err(fail)?;
        let cfg = TrainConfig {
            epochs,
            batch_size,
            learning_rate,
            seed,
            ..TrainConfig::default()
        };
        let report = m.net.train(&data, &cfg, warm_start).map_err(fail)?;
        if let Some(out) = final_loss.as_mut() {
            *out = report.final_loss();
        }
        Ok(())
    })
}

/// # Safety
/// `model` must be valid and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_save_weights(
    model: *const TactileModel,
    path: *const c_char,
) -> TactileStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        m.net
            .save_weights(Path::new(text(path, "path")?))
            .map_err(fail)
    })
}

/// Loads weights saved for the same architecture.
///
/// # Safety
/// `model` must be valid and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tactile_model_load_weights(
    model: *mut TactileModel,
    path: *const c_char,
) -> TactileStatus {
    guard(|| {
        let m = model.as_mut().ok_or_else(|| null("model"))?;
        m.net
            .load_weights(Path::new(text(path, "path")?))
            .map_err(fail)
    })
}

fn build(params: StrategyParams, seed: u64, out: *mut *mut TactileStrategy) -> TactileStatus {
    guard(|| {
        // SAFETY: the caller of the public constructor guarantees `out`.
        let out = unsafe { out_ref(out, "out")? };
        let inner = params.build(seed).map_err(fail)?;
        *out = Box::into_raw(Box::new(TactileStrategy { inner }));
        Ok(())
    })
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_info_rv(
    l: usize,
    j: usize,
    k: usize,
    out: *mut *mut TactileStrategy,
) -> TactileStatus {
    build(StrategyParams::InfoRv(InfoRvParams { l, j, k }), 0, out)
}

/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_dual_rv(
    params: *const TactileDualRvParams,
    seed: u64,
    out: *mut *mut TactileStrategy,
) -> TactileStatus {
    let Some(p) = params.as_ref() else {
        return guard(|| Err(null("params")));
    };
    let params = DualRvParams {
        l_info: p.l_info,
        j_info: p.j_info,
        l_div: p.l_div,
        j_div: p.j_div,
        q: p.q,
        r: p.r,
        k: p.k,
    };
    build(StrategyParams::DualRv(params), seed, out)
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_preemption(
    w: usize,
    k_sub: usize,
    n_sub: usize,
    lambda_i: f64,
    lambda_d: f64,
    alpha: f64,
    out: *mut *mut TactileStrategy,
) -> TactileStatus {
    let weights = ObjectiveWeights {
        lambda_i,
        lambda_d,
        alpha,
    };
    build(
        StrategyParams::Preemption(PreemptionParams {
            w,
            k_sub,
            n_sub,
            weights,
        }),
        0,
        out,
    )
}

/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_random(
    p: f64,
    k: usize,
    seed: u64,
    out: *mut *mut TactileStrategy,
) -> TactileStatus {
    build(StrategyParams::Random(RandomParams { p, k }), seed, out)
}

/// # Safety
/// `strategy` must come from a strategy constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_free(strategy: *mut TactileStrategy) {
    if !strategy.is_null() {
        drop(Box::from_raw(strategy));
    }
}

/// Offers one stream sample to the strategy. `id` must increase from call
/// to call; it is how taken batches refer back to samples.
///
/// # Safety
/// `strategy`, `model` and `out` must be valid; `pixels` must hold `len` floats.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_step(
    strategy: *mut TactileStrategy,
    model: *const TactileModel,
    id: u64,
    pixels: *const f32,
    len: usize,
    out: *mut TactileDecision,
) -> TactileStatus {
    guard(|| {
        let s = strategy.as_mut().ok_or_else(|| null("strategy"))?;
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out_ref(out, "out")?;
        let x = sample(m, id, slice(pixels, len, "pixels")?)?;
        let d = s.inner.step(x, &m.net).map_err(fail)?;
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *out = TactileDecision {
            kept: d.kept,
            trigger_fired: d.trigger_fired,
            retrain: d.retrain,
            calibrating: d.trace.calibrating,
            has_evicted: d.evicted.is_some(),
            evicted_id: d.evicted.as_ref().map_or(0, Sample::id),
            informativeness: nan(d.trace.informativeness),
            diversity_after: nan(d.trace.diversity_after),
            gamma: nan(d.trace.gamma),
            delta: nan(d.trace.delta),
        };
        Ok(())
    })
}

/// # Safety
/// `strategy` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_batch_len(
    strategy: *const TactileStrategy,
    out: *mut usize,
) -> TactileStatus {
    guard(|| {
        let s = strategy.as_ref().ok_or_else(|| null("strategy"))?;
        let out = out_ref(out, "out")?;
        *out = s.inner.batch_len();
        Ok(())
    })
}

/// Moves every sample awaiting labels out of the strategy and writes their
/// ids, in selection order, to `ids`. Fails with `BUFFER_TOO_SMALL`
/// without taking anything if `capacity` is insufficient; `written` then
/// holds the number needed.
///
/// # Safety
/// `ids` must have room for `capacity` values; `written` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_take_batch(
    strategy: *mut TactileStrategy,
    ids: *mut u64,
    capacity: usize,
    written: *mut usize,
) -> TactileStatus {
    guard(|| {
        let s = strategy.as_mut().ok_or_else(|| null("strategy"))?;
        let written = out_ref(written, "written")?;
        let ids = slice_mut(ids, capacity, "ids")?;
        *written = s.inner.pending_len();
        if *written > ids.len() {
            return Err((
                TactileStatus::BufferTooSmall,
                format!("batch of {} does not fit {} slots", *written, ids.len()),
            ));
        }
        let batch = s.inner.take_batch();
        for (slot, x) in ids.iter_mut().zip(&batch) {
            *slot = x.id();
        }
        Ok(())
    })
}

/// Resets the batch, counters and thresholds after a retraining.
///
/// # Safety
/// `strategy` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_strategy_rearm(strategy: *mut TactileStrategy) -> TactileStatus {
    guard(|| {
        strategy
            .as_mut()
            .ok_or_else(|| null("strategy"))?
            .inner
            .rearm();
        Ok(())
    })
}

/// Entropy in nats of a probability vector.
///
/// # Safety
/// `p` must hold `n` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_entropy(p: *const f64, n: usize, out: *mut f64) -> TactileStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = metrics::entropy(slice(p, n, "p")?).map_err(fail)?;
        Ok(())
    })
}

/// One minus the gap between the two largest probabilities.
///
/// # Safety
/// `p` must hold `n` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_margin(p: *const f64, n: usize, out: *mut f64) -> TactileStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = metrics::margin_informativeness(slice(p, n, "p")?).map_err(fail)?;
        Ok(())
    })
}

/// # Safety
/// `u` and `v` must each hold `dim` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_cosine_distance(
    u: *const f64,
    v: *const f64,
    dim: usize,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = metrics::cosine_distance(slice(u, dim, "u")?, slice(v, dim, "v")?).map_err(fail)?;
        Ok(())
    })
}

unsafe fn rows<'a>(vs: *const f64, count: usize, dim: usize) -> Result<Vec<&'a [f64]>, Failure> {
    let flat = slice(vs, count * dim, "vectors")?;
    Ok((0..count).map(|i| &flat[i * dim..(i + 1) * dim]).collect())
}

/// Mean pairwise cosine distance of `count` row vectors of length `dim`.
///
/// # Safety
/// `vs` must hold `count * dim` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_diversity(
    vs: *const f64,
    count: usize,
    dim: usize,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = metrics::diversity(&rows(vs, count, dim)?).map_err(fail)?;
        Ok(())
    })
}

/// Half the log-determinant of `I + alpha * A`, with `A` the Gram matrix of
/// the unit-normalized rows.
///
/// # Safety
/// `vs` must hold `count * dim` doubles and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_logdet_diversity(
    vs: *const f64,
    count: usize,
    dim: usize,
    alpha: f64,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = metrics::logdet_diversity(&rows(vs, count, dim)?, alpha).map_err(fail)?;
        Ok(())
    })
}

/// Batch buffer bytes for a strategy, given one-byte image values and
/// four-byte feature values.
#[no_mangle]
pub extern "C" fn tactile_account_memory(
    kind: TactileStrategyKind,
    k: u64,
    image_bytes: u64,
    feature_bytes: u64,
) -> u64 {
    account_memory(
        kind.into(),
        &MemoryModel {
            k,
            image_bytes,
            feature_bytes,
        },
    )
}

/// Rescales a host timing to a target clock.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tactile_estimate_mcu_time(
    t_host: f64,
    host_clock_hz: f64,
    target_clock_hz: f64,
    out: *mut f64,
) -> TactileStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = estimate_mcu_time(t_host, host_clock_hz, target_clock_hz).map_err(fail)?;
        Ok(())
    })
}
