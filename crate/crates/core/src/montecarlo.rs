//! Shot-by-shot sampling of the experiment.
//!
//! Each shot follows a pure state through the sequence, drawing tunneling
//! events at partial measurements and jump/no-jump branches for relaxation
//! and dephasing from the same Kraus sets the exact engine sums over.
//! Per-shot generators are keyed by `(master_seed, stream, shot_index)`, so
//! aggregated counts do not depend on how shots are scheduled across
//! threads.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::DecoherenceStep;
use crate::error::{domain, Result};
use crate::protocol::{build_sequence, ExperimentConfig, PulseSequence, SequenceKind, StepKind};
use crate::qpt::ProbeSet;
use crate::qubit::{BlochVector, Op};
use crate::tomography::{bloch_reconstruct, with_tomography, TomoSetting, TomographyRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub rng_seed: u64,
    /// Tunnel flag for each partial measurement reached, in order. A shot
    /// stops at its first tunneling event.
    pub outcomes: Vec<bool>,
    pub final_detected: bool,
}

impl ShotRecord {
    /// True when the shot tunneled before tomography and so only counts
    /// towards the background.
    pub fn is_background(&self) -> bool {
        self.outcomes.iter().any(|&t| t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    /// Probabilities with `shots` and `stderr` populated.
    pub record: TomographyRecord,
    /// Shots per tomography setting.
    pub n_total: u64,
    pub background_counts: [u64; 3],
    pub detect_counts: [u64; 3],
}

impl EstimateSet {
    /// Fraction of shots in which every pre-tomography measurement was null.
    pub fn p_success(&self) -> f64 {
        1.0 - self.record.p_b
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Deterministic seed for `shot` within `stream` under `master`.
pub fn shot_seed(master: u64, stream: u64, shot: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ shot)
}

/// Derives an independent master seed, e.g. one per probe state or sweep point.
pub fn derive_seed(master: u64, label: u64) -> u64 {
    splitmix64(master ^ splitmix64(label.wrapping_add(0xA076_1D64_78BD_642F)))
}

type Ket = [Complex64; 2];

fn apply_op(op: &Op, psi: &Ket) -> Ket {
    [op[(0, 0)] * psi[0] + op[(0, 1)] * psi[1], op[(1, 0)] * psi[0] + op[(1, 1)] * psi[1]]
}

fn normalize(psi: Ket) -> Ket {
    let n = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
    [psi[0] / n, psi[1] / n]
}

fn excited_population(psi: &Ket) -> f64 {
    psi[1].norm_sqr()
}

/// One jump/no-jump draw of amplitude damping followed by dephasing.
fn sample_decoherence<R: Rng>(psi: Ket, d: &DecoherenceStep, rng: &mut R) -> Ket {
    let gamma = d.gamma();
    let mut psi = psi;
    if gamma > 0.0 {
        if rng.random::<f64>() < gamma * excited_population(&psi) {
            psi = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        } else {
            psi = normalize([psi[0], psi[1] * (1.0 - gamma).sqrt()]);
        }
    }
    let lambda = d.lambda();
    if lambda > 0.0 && rng.random::<f64>() < 0.5 * lambda {
        psi[1] = -psi[1];
    }
    psi
}

struct ShotSummary {
    background: bool,
    detected: bool,
}

/// Walks one shot; `outcomes` is filled only when requested.
fn run_shot(
    seq: &PulseSequence,
    cfg: &ExperimentConfig,
    t2: f64,
    seed: u64,
    mut outcomes: Option<&mut Vec<bool>>,
) -> Result<ShotSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut psi: Ket = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let mut detected = false;
    for step in &seq.steps {
        match step.kind {
            StepKind::Prepare(s) => psi = s.amplitudes(),
            StepKind::Rotate(r) => psi = apply_op(&r.unitary(), &psi),
            StepKind::TomographyRotate(s) => psi = apply_op(&s.pulse(step.duration_ns).unitary(), &psi),
            StepKind::PartialMeasure(m) => {
                let tunneled = rng.random::<f64>() < m.p * excited_population(&psi);
                if let Some(o) = outcomes.as_deref_mut() {
                    o.push(tunneled);
                }
                if tunneled {
                    return Ok(ShotSummary { background: true, detected: false });
                }
                psi = normalize(apply_op(&m.null_operator(), &psi));
            }
            StepKind::Idle => {}
            StepKind::FullMeasure => {
                detected = rng.random::<f64>() < cfg.device.visibility * excited_population(&psi);
            }
        }
        if cfg.decoherence_enabled && step.duration_ns > 0.0 {
            let d = DecoherenceStep::from_times(step.duration_ns, cfg.device.t1, t2)?;
            psi = sample_decoherence(psi, &d, &mut rng);
        }
    }
    Ok(ShotSummary { background: false, detected })
}

/// Samples a single shot of `seq` with the given per-shot seed.
pub fn sample_sequence(seq: &PulseSequence, cfg: &ExperimentConfig, seed: u64) -> Result<ShotRecord> {
    seq.validate()?;
    cfg.device.validate()?;
    let mut outcomes = Vec::new();
    let s = run_shot(seq, cfg, cfg.t2_for(seq.kind), seed, Some(&mut outcomes))?;
    Ok(ShotRecord { rng_seed: seed, outcomes, final_detected: s.detected })
}

/// Estimates `(P_X, P_Y, P_Z, P_B)` from `n_shots` shots per setting.
///
/// `P_s` counts every tunneling event seen in setting `s` (background plus
/// tomography click). `P_B` pools the pre-tomography events of all three
/// settings.
pub fn estimate_probabilities(
    kind: SequenceKind,
    cfg: &ExperimentConfig,
    n_shots: u64,
    seed: u64,
) -> Result<EstimateSet> {
    if n_shots == 0 {
        return domain("n_shots must be at least 1");
    }
    cfg.validate()?;
    let base = build_sequence(kind, cfg);
    let t2 = cfg.t2_for(base.kind);
    let mut background_counts = [0u64; 3];
    let mut detect_counts = [0u64; 3];
    for s in TomoSetting::ALL {
        let seq = with_tomography(&base, s, &cfg.timing);
        seq.validate()?;
        let stream = s.index() as u64;
        let (bg, det) = (0..n_shots)
            .into_par_iter()
            .map(|i| {
                run_shot(&seq, cfg, t2, shot_seed(seed, stream, i), None)
                    .map(|r| (u64::from(r.background), u64::from(r.detected)))
            })
            .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
        background_counts[s.index()] = bg;
        detect_counts[s.index()] = det;
    }

    let n = n_shots as f64;
    let prob = |i: usize| (background_counts[i] + detect_counts[i]) as f64 / n;
    let p_b = background_counts.iter().sum::<u64>() as f64 / (3.0 * n);
    let se = |p: f64, n: f64| (p * (1.0 - p) / n).sqrt();
    let (p_x, p_y, p_z) = (prob(0), prob(1), prob(2));
    let record = TomographyRecord {
        p_x,
        p_y,
        p_z,
        p_b,
        shots: Some(n_shots),
        stderr: Some([se(p_x, n), se(p_y, n), se(p_z, n), se(p_b, 3.0 * n)]),
    };
    Ok(EstimateSet { record, n_total: n_shots, background_counts, detect_counts })
}

/// Sampled probes for process tomography of the uncollapsing sequence.
pub fn uncollapse_probes_mc(cfg: &ExperimentConfig, n_shots: u64, seed: u64) -> Result<ProbeSet> {
    let inputs = ProbeSet::standard_inputs();
    let mut outputs = [BlochVector::new(0.0, 0.0, 0.0); 4];
    for (j, (out, s)) in outputs.iter_mut().zip(inputs).enumerate() {
        let est = estimate_probabilities(SequenceKind::Uncollapse, &cfg.with_initial(s), n_shots, derive_seed(seed, j as u64))?;
        *out = bloch_reconstruct(&est.record)?;
    }
    Ok(ProbeSet { inputs, outputs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{build_partial_collapse, build_uncollapse, run_exact};
    use crate::qubit::PureState;

    #[test]
    fn no_tunneling_at_zero_strength() {
        let cfg = ExperimentConfig::default();
        let seq = build_uncollapse(&cfg);
        for i in 0..200 {
            let r = sample_sequence(&seq, &cfg, shot_seed(1, 0, i)).unwrap();
            assert_eq!(r.outcomes, vec![false, false]);
            assert!(!r.is_background());
        }
    }

    #[test]
    fn excited_state_always_tunnels_at_full_strength() {
        let cfg = ExperimentConfig::ideal().with_p(1.0).with_initial(PureState::excited());
        let seq = build_partial_collapse(&cfg);
        for i in 0..200 {
            let r = sample_sequence(&seq, &cfg, shot_seed(2, 0, i)).unwrap();
            assert_eq!(r.outcomes, vec![true]);
        }
    }

    #[test]
    fn single_shot_gives_binary_probabilities() {
        let cfg = ExperimentConfig::default().with_p(0.5);
        let est = estimate_probabilities(SequenceKind::Uncollapse, &cfg, 1, 9).unwrap();
        for p in est.record.probabilities() {
            assert!(p == 0.0 || p == 1.0);
        }
        assert!(estimate_probabilities(SequenceKind::Uncollapse, &cfg, 0, 9).is_err());
    }

    #[test]
    fn same_seed_same_estimate() {
        let cfg = ExperimentConfig::default().with_p(0.3);
        let a = estimate_probabilities(SequenceKind::PartialCollapse, &cfg, 2000, 42).unwrap();
        let b = estimate_probabilities(SequenceKind::PartialCollapse, &cfg, 2000, 42).unwrap();
        assert_eq!(a, b);
        let c = estimate_probabilities(SequenceKind::PartialCollapse, &cfg, 2000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uncollapse_background_rate() {
        let p = 0.5;
        let cfg = ExperimentConfig::ideal().with_p(p);
        let seq = build_uncollapse(&cfg);
        let exact = run_exact(&seq, &cfg).unwrap().p_background;
        assert!((exact - p).abs() < 1e-12);
        let n = 100_000u64;
        let bg = (0..n)
            .into_par_iter()
            .map(|i| u64::from(sample_sequence(&seq, &cfg, shot_seed(5, 0, i)).unwrap().is_background()))
            .sum::<u64>();
        let rate = bg as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((rate - exact).abs() < 5.0 * se, "{rate} vs {exact}");
    }

    #[test]
    fn stderr_matches_binomial() {
        let cfg = ExperimentConfig::default().with_p(0.2);
        let est = estimate_probabilities(SequenceKind::PartialCollapse, &cfg, 500, 3).unwrap();
        let se = est.record.stderr.unwrap();
        let p = est.record.p_x;
        assert!((se[0] - (p * (1.0 - p) / 500.0).sqrt()).abs() < 1e-15);
        assert_eq!(est.record.shots, Some(500));
    }
}
