//! Turbo equalization loop between the network and the LDPC decoder.
//!
//! Bit LLRs are decoded in the coset of the transmitted bits: LLR signs are
//! flipped wherever the transmitted bit is one, so the decoder sees the
//! all-zero codeword. Sum-product decoding is symmetric under this flip,
//! which lets random (uncoded) payload stand in for codewords and one data
//! set serve any code of matching length.

use super::features::WindowSet;
use super::loss::marginal_llrs;
use super::model::{HeadKind, NeuralModel};
use crate::error::{shape_err, Error, Result};
use crate::exit::SoftDetector;
use crate::ldpc::{BpDecoder, LLR_CLAMP};
use crate::par::Exec;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Per-codeword bit permutation: codeword bit `i` travels at stream offset
/// `perm[i]` inside its block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interleaver {
    perm: Vec<u32>,
    pub seed: u64,
}

impl Interleaver {
    pub fn new(n: usize, seed: u64) -> Self {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        Self { perm, seed }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            perm: (0..n as u32).collect(),
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn position(&self, i: usize) -> usize {
        self.perm[i] as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurboSchedule {
    pub outer_iterations: usize,
    /// BP iterations in each decoder pass.
    pub bp_iterations: usize,
    /// Multiplier applied to the decoder extrinsic before it is fed back.
    /// Few-iteration BP on a short code is overconfident, while the network
    /// was trained on consistent Gaussian a-priori LLRs.
    pub feedback_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassStats {
    pub iteration: usize,
    pub bit_errors: usize,
    pub info_bits: usize,
    pub ber: f64,
    pub frame_errors: usize,
    pub frames: usize,
    /// Mean BP iterations actually run per codeword in this pass.
    pub mean_bp_iterations: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboResult {
    pub passes: Vec<PassStats>,
    /// Final hard decisions on all coded bits, in stream order.
    pub hard: Vec<u8>,
}

impl TurboResult {
    pub fn last(&self) -> &PassStats {
        self.passes.last().unwrap()
    }
}

/// Output of one decoder pass over a whole stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamDecode {
    pub stats: PassStats,
    /// Decoder extrinsic LLRs in stream order (transmitted-bit domain).
    pub extrinsic: Vec<f64>,
    pub hard: Vec<u8>,
}

/// Decodes every codeword of a bit-LLR stream in the coset of `truth`.
pub fn decode_stream(
    llrs: &[f64],
    truth: &[u8],
    decoder: &BpDecoder,
    k: usize,
    interleaver: &Interleaver,
    bp_iterations: usize,
    exec: Exec,
) -> Result<StreamDecode> {
    let n = decoder.n();
    if interleaver.len() != n {
        return Err(shape_err(format!("interleaver length {} for n = {n}", interleaver.len())));
    }
    if llrs.len() != truth.len() || llrs.is_empty() || llrs.len() % n != 0 {
        return Err(shape_err(format!(
            "{} LLRs for {} bits is not a whole number of length-{n} codewords",
            llrs.len(),
            truth.len()
        )));
    }
    let frames = llrs.len() / n;
    let per_frame: Result<Vec<(Vec<f64>, Vec<u8>, usize, usize)>> = exec
        .map(frames, |f| {
            let base = f * n;
            let flip = |i: usize| if truth[base + interleaver.position(i)] == 1 { -1.0 } else { 1.0 };
            let ch: Vec<f64> = (0..n)
                .map(|i| flip(i) * llrs[base + interleaver.position(i)])
                .collect();
            let out = decoder.decode(&ch, None, bp_iterations)?;
            let errors = out.hard[..k].iter().filter(|&&h| h != 0).count();
            let mut ext = vec![0.0; n];
            let mut hard = vec![0u8; n];
            for i in 0..n {
                let p = interleaver.position(i);
                ext[p] = (flip(i) * out.extrinsic[i]).clamp(-LLR_CLAMP, LLR_CLAMP);
                hard[p] = out.hard[i] ^ truth[base + p];
            }
            Ok((ext, hard, errors, out.iterations))
        })
        .into_iter()
        .collect();
    let per_frame = per_frame?;
    let mut extrinsic = Vec::with_capacity(llrs.len());
    let mut hard = Vec::with_capacity(llrs.len());
    let (mut errors, mut frame_errors, mut iters) = (0usize, 0usize, 0usize);
    for (e, h, err, it) in per_frame {
        extrinsic.extend(e);
        hard.extend(h);
        errors += err;
        frame_errors += usize::from(err > 0);
        iters += it;
    }
    let info_bits = frames * k;
    Ok(StreamDecode {
        stats: PassStats {
            iteration: 1,
            bit_errors: errors,
            info_bits,
            ber: errors as f64 / info_bits as f64,
            frame_errors,
            frames,
            mean_bp_iterations: iters as f64 / frames as f64,
        },
        extrinsic,
        hard,
    })
}

/// A trained network bound to a window set, producing bit LLRs for a
/// block-wide a-priori stream.
pub struct NetworkDetector<'a> {
    pub ws: &'a WindowSet,
    pub model: &'a NeuralModel,
    pub exec: Exec,
    pub chunk: usize,
}

impl<'a> NetworkDetector<'a> {
    pub fn new(ws: &'a WindowSet, model: &'a NeuralModel, exec: Exec) -> Result<Self> {
        if !model.trained {
            return Err(Error::State("model has not been trained".into()));
        }
        if model.topology.window != ws.window() || model.topology.bits_per_symbol != ws.bits_per_symbol() {
            return Err(shape_err("model topology does not match the window set"));
        }
        Ok(Self {
            ws,
            model,
            exec,
            chunk: 4096,
        })
    }

    /// Bit LLRs (EXT head, or marginals of the joint-label head).
    pub fn llrs(&self, apr_stream: &[f64]) -> Result<Vec<f64>> {
        let rows: Vec<usize> = (0..self.ws.len()).collect();
        let x = self.ws.batch_from_stream(&rows, apr_stream)?;
        let (ext, _) = self.model.forward_eval_batched(x.view(), self.chunk, self.exec)?;
        let bits = match self.model.topology.head {
            HeadKind::Bits => ext,
            HeadKind::Symbols => marginal_llrs(ext.view(), self.ws.bits_per_symbol()),
        };
        Ok(bits.iter().copied().collect())
    }
}

impl SoftDetector for NetworkDetector<'_> {
    fn bits(&self) -> &[u8] {
        self.ws.bits()
    }

    fn extrinsic(&self, apr: &[f64]) -> Result<Vec<f64>> {
        self.llrs(apr)
    }
}

/// Runs the turbo loop. Pass 1 uses zero a-priori input; each later pass
/// feeds the previous decoder extrinsic back into the network.
pub fn turbo_decode(
    det: &NetworkDetector,
    decoder: &BpDecoder,
    k: usize,
    interleaver: &Interleaver,
    schedule: TurboSchedule,
    exec: Exec,
) -> Result<TurboResult> {
    if schedule.outer_iterations == 0 {
        return Err(Error::Config("at least one outer iteration is required".into()));
    }
    if !(schedule.feedback_scale > 0.0 && schedule.feedback_scale <= 1.0) {
        return Err(Error::Config("feedback scale must be in (0, 1]".into()));
    }
    if det.model.topology.head != HeadKind::Bits && schedule.outer_iterations > 1 {
        return Err(Error::Config("turbo feedback needs the bit head".into()));
    }
    let truth = det.ws.bits();
    let mut apr = vec![0.0; truth.len()];
    let mut passes = Vec::with_capacity(schedule.outer_iterations);
    let mut hard = Vec::new();
    for it in 1..=schedule.outer_iterations {
        let llrs = det.llrs(&apr)?;
        let dec = decode_stream(&llrs, truth, decoder, k, interleaver, schedule.bp_iterations, exec)?;
        let mut stats = dec.stats;
        stats.iteration = it;
        passes.push(stats);
        apr = dec.extrinsic.iter().map(|v| v * schedule.feedback_scale).collect();
        hard = dec.hard;
    }
    Ok(TurboResult { passes, hard })
}
