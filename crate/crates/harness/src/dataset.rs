//! TX → fiber → RX-DSP data generation and the on-disk dataset format.
//!
//! A dataset directory holds `manifest.txt` (key = value lines plus one
//! `section` line per array) and `payload.bin` (the arrays back to back,
//! little endian). Symbol arrays are f32 `(xI, xQ, yI, yQ)` per symbol, bits
//! are one byte each and the APR placeholder is one f32 per bit. Network
//! windows are cut from the equalized symbols on load.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::Path;
use teq_core::fiber::propagate_link;
use teq_core::neural::WindowSet;
use teq_core::par::derive_seed;
use teq_core::rx::{ls_equalizer_apply, ls_equalizer_fit, matched_filter_downsample, normalize_power};
use teq_core::signal::{gray_map, rrc_shape, wdm_demux_center, wdm_mux, BitFrame, SymbolFrame};
use teq_core::units::dbm_to_watts;

pub const DATASET_FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.txt";
const PAYLOAD: &str = "payload.bin";

/// Bits, transmitted symbols and linearly equalized received symbols of
/// one independent transmission block.
#[derive(Debug, Clone, PartialEq)]
pub struct Burst {
    pub bits: BitFrame,
    pub tx: SymbolFrame,
    pub eq: SymbolFrame,
}

impl Burst {
    pub fn windows(&self, window: usize) -> Result<WindowSet> {
        Ok(WindowSet::new(&self.eq, &self.bits, window)?)
    }

    /// Mean |eq − tx|² per polarization, averaged over both.
    pub fn mse(&self) -> f64 {
        let err = |a: &[Complex64], b: &[Complex64]| a.iter().zip(b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>();
        (err(&self.eq.x, &self.tx.x) + err(&self.eq.y, &self.tx.y)) / (2 * self.tx.len()) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config_digest: String,
    pub seed: u64,
    pub launch_power_dbm: f64,
    pub bits_per_symbol: usize,
    pub window: usize,
    /// Complex noise variance seen by the exact-LLR demapper, from the
    /// equalizer's training residual.
    pub noise_var: f64,
    pub train: Burst,
    pub test: Burst,
}

/// Seed for a burst at a given launch power; independent of the sweep list.
pub fn burst_seed(seed: u64, power_dbm: f64, burst: u64) -> u64 {
    derive_seed(seed, power_dbm.to_bits(), burst)
}

fn random_frame(rng: &mut ChaCha8Rng, symbols: usize, bps: usize) -> Result<BitFrame> {
    let bits: Vec<u8> = (0..symbols * bps).map(|_| rng.random_range(0..2u8)).collect();
    Ok(BitFrame::new(bits, bps)?)
}

/// Runs one block through the link. Returns the center channel's bits, its
/// transmitted symbols and the matched-filtered, power-normalized samples.
pub fn simulate_block(
    cfg: &ExperimentConfig,
    power_dbm: f64,
    symbols: usize,
    seed: u64,
) -> Result<(BitFrame, SymbolFrame, SymbolFrame)> {
    let fmt = cfg.format()?;
    let bps = fmt.bits_per_dp_symbol();
    let md = &cfg.modulation;
    let p_ch = dbm_to_watts(power_dbm);
    let channels = md.channels;
    let center = channels / 2;
    let mut center_frame = None;
    let mut waves = Vec::with_capacity(channels);
    for ch in 0..channels {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, ch as u64));
        let frame = random_frame(&mut rng, symbols, bps)?;
        let sym = gray_map(&frame, &fmt, cfg.baud())?;
        let mut w = rrc_shape(&sym, md.rolloff, md.oversampling, None)?;
        let p = w.power();
        w.scale((p_ch / p).sqrt());
        if ch == center {
            center_frame = Some((frame, sym));
        }
        waves.push(w);
    }
    let launch = wdm_mux(&waves, md.spacing_ghz * 1e9)?;
    let rx = propagate_link(&launch, &cfg.link_at(power_dbm), &cfg.link.ssfm, derive_seed(seed, 2, 0))?;
    let rx = if channels > 1 {
        wdm_demux_center(&rx, (1.0 + md.rolloff) * cfg.baud())?
    } else {
        rx
    };
    let samples = normalize_power(&matched_filter_downsample(&rx, md.rolloff, md.oversampling, None)?);
    let (frame, sym) = center_frame.expect("center channel exists");
    Ok((frame, sym, samples))
}

fn round_f32(s: &SymbolFrame) -> SymbolFrame {
    let r = |v: &[Complex64]| -> Vec<Complex64> {
        v.iter()
            .map(|c| Complex64::new(c.re as f32 as f64, c.im as f32 as f64))
            .collect()
    };
    SymbolFrame {
        x: r(&s.x),
        y: r(&s.y),
        baud: s.baud,
    }
}

/// Generates the training and test bursts at one launch power. The linear
/// equalizer is fitted on the training burst and applied to both.
pub fn generate_dataset(cfg: &ExperimentConfig, power_dbm: f64, seed: u64) -> Result<Dataset> {
    cfg.validate()?;
    let (tr_bits, tr_tx, tr_rx) = simulate_block(cfg, power_dbm, cfg.data.train_symbols, burst_seed(seed, power_dbm, 0))?;
    let (te_bits, te_tx, te_rx) = simulate_block(cfg, power_dbm, cfg.data.test_symbols, burst_seed(seed, power_dbm, 1))?;
    let le = ls_equalizer_fit(&tr_rx, &tr_tx, cfg.data.le_taps)?;
    let noise_var = le.fit_mse[0] + le.fit_mse[1];
    let train = Burst {
        bits: tr_bits,
        tx: round_f32(&tr_tx),
        eq: round_f32(&ls_equalizer_apply(&le, &tr_rx)?),
    };
    let test = Burst {
        bits: te_bits,
        tx: round_f32(&te_tx),
        eq: round_f32(&ls_equalizer_apply(&le, &te_rx)?),
    };
    Ok(Dataset {
        config_digest: cfg.digest(),
        seed,
        launch_power_dbm: power_dbm,
        bits_per_symbol: train.bits.bits_per_symbol(),
        window: cfg.data.window,
        noise_var: noise_var / 2.0,
        train,
        test,
    })
}

fn push_symbols(out: &mut Vec<u8>, s: &SymbolFrame) {
    for (x, y) in s.x.iter().zip(&s.y) {
        for v in [x.re, x.im, y.re, y.im] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
}

fn read_symbols(bytes: &[u8], baud: f64) -> Result<SymbolFrame> {
    if bytes.len() % 16 != 0 {
        return Err(HarnessError::Format("symbol section is not a whole number of symbols".into()));
    }
    let f: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let x = f.chunks_exact(4).map(|q| Complex64::new(q[0], q[1])).collect();
    let y = f.chunks_exact(4).map(|q| Complex64::new(q[2], q[3])).collect();
    Ok(SymbolFrame::new(x, y, baud)?)
}

struct Section {
    name: String,
    dtype: &'static str,
    count: usize,
    offset: usize,
    bytes: usize,
}

impl Dataset {
    /// Section table in file order, with the concatenated payload.
    fn sections(&self) -> (Vec<Section>, Vec<u8>) {
        let mut payload = Vec::new();
        let mut sections = Vec::new();
        for (tag, b) in [("train", &self.train), ("test", &self.test)] {
            let mut add = |name: &str, dtype: &'static str, count: usize, data: Vec<u8>| {
                sections.push(Section {
                    name: format!("{tag}.{name}"),
                    dtype,
                    count,
                    offset: payload.len(),
                    bytes: data.len(),
                });
                payload.extend_from_slice(&data);
            };
            let mut eq = Vec::new();
            push_symbols(&mut eq, &b.eq);
            add("eq_symbols", "f32", 4 * b.eq.len(), eq);
            let mut tx = Vec::new();
            push_symbols(&mut tx, &b.tx);
            add("tx_symbols", "f32", 4 * b.tx.len(), tx);
            add("bits", "u8", b.bits.len(), b.bits.bits().to_vec());
            add("apr", "f32", b.bits.len(), vec![0u8; 4 * b.bits.len()]);
        }
        (sections, payload)
    }

    /// The binary payload exactly as written to disk.
    pub fn payload_bytes(&self) -> Vec<u8> {
        self.sections().1
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let (sections, payload) = self.sections();
        let mut m = String::new();
        m.push_str(&format!("format_version = {DATASET_FORMAT_VERSION}\n"));
        m.push_str(&format!("config_digest = {}\n", self.config_digest));
        m.push_str(&format!("seed = {}\n", self.seed));
        m.push_str(&format!("launch_power_dbm = {:?}\n", self.launch_power_dbm));
        m.push_str(&format!("bits_per_symbol = {}\n", self.bits_per_symbol));
        m.push_str(&format!("window = {}\n", self.window));
        m.push_str(&format!("noise_var = {:?}\n", self.noise_var));
        m.push_str(&format!("baud = {:?}\n", self.train.tx.baud));
        m.push_str(&format!("train_symbols = {}\n", self.train.tx.len()));
        m.push_str(&format!("test_symbols = {}\n", self.test.tx.len()));
        m.push_str("byte_order = little\n");
        for s in &sections {
            m.push_str(&format!(
                "section = {} {} {} {} {}\n",
                s.name, s.dtype, s.count, s.offset, s.bytes
            ));
        }
        std::fs::write(dir.join(MANIFEST), m)?;
        std::fs::write(dir.join(PAYLOAD), payload)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(dir.join(MANIFEST))?;
        let payload = std::fs::read(dir.join(PAYLOAD))?;
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        let mut sections: BTreeMap<String, (usize, usize)> = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| HarnessError::Format(format!("bad manifest line: {line}")))?;
            if k == "section" {
                let f: Vec<&str> = v.split_whitespace().collect();
                if f.len() != 5 {
                    return Err(HarnessError::Format(format!("bad section line: {line}")));
                }
                let num = |s: &str| s.parse::<usize>().map_err(|e| HarnessError::Format(e.to_string()));
                let (offset, bytes) = (num(f[3])?, num(f[4])?);
                if offset + bytes > payload.len() {
                    return Err(HarnessError::Format(format!("section {} overruns the payload", f[0])));
                }
                sections.insert(f[0].to_string(), (offset, bytes));
            } else {
                kv.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| -> Result<&String> {
            kv.get(k)
                .ok_or_else(|| HarnessError::Format(format!("manifest lacks {k}")))
        };
        let parse_err = |k: &str| HarnessError::Format(format!("cannot parse {k}"));
        let version: u32 = get("format_version")?.parse().map_err(|_| parse_err("format_version"))?;
        if version != DATASET_FORMAT_VERSION {
            return Err(HarnessError::Format(format!("unsupported dataset version {version}")));
        }
        let bps: usize = get("bits_per_symbol")?.parse().map_err(|_| parse_err("bits_per_symbol"))?;
        let baud: f64 = get("baud")?.parse().map_err(|_| parse_err("baud"))?;
        let section = |name: &str| -> Result<&[u8]> {
            let (o, b) = sections
                .get(name)
                .ok_or_else(|| HarnessError::Format(format!("missing section {name}")))?;
            Ok(&payload[*o..*o + *b])
        };
        let burst = |tag: &str| -> Result<Burst> {
            Ok(Burst {
                bits: BitFrame::new(section(&format!("{tag}.bits"))?.to_vec(), bps)?,
                tx: read_symbols(section(&format!("{tag}.tx_symbols"))?, baud)?,
                eq: read_symbols(section(&format!("{tag}.eq_symbols"))?, baud)?,
            })
        };
        Ok(Dataset {
            config_digest: get("config_digest")?.clone(),
            seed: get("seed")?.parse().map_err(|_| parse_err("seed"))?,
            launch_power_dbm: get("launch_power_dbm")?.parse().map_err(|_| parse_err("launch_power_dbm"))?,
            bits_per_symbol: bps,
            window: get("window")?.parse().map_err(|_| parse_err("window"))?,
            noise_var: get("noise_var")?.parse().map_err(|_| parse_err("noise_var"))?,
            train: burst("train")?,
            test: burst("test")?,
        })
    }
}
