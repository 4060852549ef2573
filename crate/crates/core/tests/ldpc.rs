use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use teq_core::ldpc::*;
use teq_core::Exec;

fn half_rate(n: usize, seed: u64) -> SparseParityCheck {
    construct_code(&DegreeDistribution::regular(3, 6).unwrap(), n, seed).unwrap()
}

/// BI-AWGN BER of the all-zero codeword at `ebn0_db`, stopping after
/// `min_errors` bit errors or `max_frames` frames.
fn awgn_ber(dec: &BpDecoder, k: usize, ebn0_db: f64, min_errors: usize, max_frames: usize, seed: u64) -> (f64, usize) {
    let n = dec.n();
    let rate = k as f64 / n as f64;
    let sigma = (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt();
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut errors, mut frames) = (0, 0);
    while errors < min_errors && frames < max_frames {
        let batch: Vec<Vec<f64>> = (0..8)
            .map(|_| (0..n).map(|_| 2.0 * (1.0 + noise.sample(&mut rng)) / (sigma * sigma)).collect())
            .collect();
        for out in dec.decode_batch(Exec::default(), &batch, 50).unwrap() {
            errors += out.hard[..k].iter().filter(|&&b| b != 0).count();
        }
        frames += batch.len();
    }
    (errors as f64 / (frames * k) as f64, errors)
}

#[test]
fn peg_code_4800_structure() {
    let code = half_rate(4800, 1);
    assert_eq!((code.n(), code.k()), (4800, 2400));
    assert!(!code.has_four_cycles());
    assert!(code.girth() >= 6);
    assert_eq!(code.rank(), code.m());
    assert!(code.is_triangular_encodable());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
    let word = code.encode(&info).unwrap();
    assert!(code.syndrome_ok(&word));
    assert_eq!(&word[..code.k()], &info[..]);
}

#[test]
fn formats_round_trip_a_large_code() {
    let code = construct_code(&DegreeDistribution::dvbs2_r9_10(), 4800, 7).unwrap();
    let back = read_code(&write_code(&code)).unwrap();
    assert_eq!(back.rows(), code.rows());
    let alist = read_alist(&write_alist(&code)).unwrap();
    assert_eq!(alist.rows(), code.rows());
    assert_eq!(alist.k(), code.k());
}

#[test]
fn codeword_decodes_identically_to_all_zero_in_coset() {
    for seed in 0..20 {
        coset_symmetry(seed);
    }
}

fn coset_symmetry(seed: u64) {
    let code = half_rate(960, 3);
    let dec = BpDecoder::new(&code);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let info: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2)).collect();
    let word = code.encode(&info).unwrap();
    let noise = Normal::new(0.0, 0.8).unwrap();
    let zero_ch: Vec<f64> = (0..960).map(|_| 2.0 * (1.0 + noise.sample(&mut rng)) / 0.64).collect();
    let ch: Vec<f64> = zero_ch
        .iter()
        .zip(&word)
        .map(|(l, &b)| if b == 1 { -l } else { *l })
        .collect();
    let a = dec.decode(&zero_ch, None, 30).unwrap();
    let b = dec.decode(&ch, None, 30).unwrap();
    assert_eq!(a.iterations, b.iterations);
    for i in 0..960 {
        assert_eq!(a.hard[i] ^ word[i], b.hard[i]);
        let s = if word[i] == 1 { -1.0 } else { 1.0 };
        assert!(
            a.posterior[i] * s == b.posterior[i],
            "seed {seed} bit {i}: {} vs {}",
            a.posterior[i],
            b.posterior[i]
        );
    }
}

#[test]
fn waterfall_is_monotone_on_a_short_code() {
    let code = half_rate(1200, 5);
    let dec = BpDecoder::new(&code);
    let bers: Vec<f64> = [1.0, 1.5, 2.0]
        .iter()
        .map(|&eb| awgn_ber(&dec, code.k(), eb, 200, 400, 9).0)
        .collect();
    assert!(bers.windows(2).all(|w| w[1] < w[0]), "{bers:?}");
    assert!(bers[0] > 1e-4);
}
