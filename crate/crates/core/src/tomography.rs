//! State tomography: three pre-rotations followed by a full measurement, and
//! the linear inversion from tunneling probabilities back to a Bloch vector
//! with background subtraction.
//!
//! Rotation signs are frozen so that the inverse map reads
//! `{X, -Y, -Z} = 2(P_{X,Y,Z} - P_B)/(1 - P_B) - 1`:
//!
//! * `X` setting: π/2 about Y, which carries `+x` onto the `|1⟩` pole;
//! * `Y` setting: π/2 about X, which carries `-y` onto the `|1⟩` pole;
//! * `Z` setting: no rotation (an idle of the same length).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::channels::{apply_rotation, RotationPulse};
use crate::error::{domain, Error, Result};
use crate::protocol::{build_sequence, run_exact, ExperimentConfig, PulseSequence, SequenceKind, StepKind, Timing};
use crate::qubit::{BlochVector, DeviceParams, QubitState, EXACT_TOL, ROUNDOFF_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TomoSetting {
    X,
    Y,
    Z,
}

impl TomoSetting {
    pub const ALL: [TomoSetting; 3] = [TomoSetting::X, TomoSetting::Y, TomoSetting::Z];

    pub fn index(self) -> usize {
        match self {
            TomoSetting::X => 0,
            TomoSetting::Y => 1,
            TomoSetting::Z => 2,
        }
    }

    pub fn pulse(self, duration_ns: f64) -> RotationPulse {
        match self {
            TomoSetting::X => RotationPulse::about_y(FRAC_PI_2, duration_ns),
            TomoSetting::Y => RotationPulse::about_x(FRAC_PI_2, duration_ns),
            TomoSetting::Z => RotationPulse { axis: [0.0, 0.0, 1.0], angle: 0.0, duration_ns },
        }
    }
}

/// Measured (or modeled) tunneling probabilities for the three settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    pub p_b: f64,
    pub shots: Option<u64>,
    /// Standard errors of `(p_x, p_y, p_z, p_b)`.
    pub stderr: Option<[f64; 4]>,
}

impl TomographyRecord {
    pub fn new(p_x: f64, p_y: f64, p_z: f64, p_b: f64) -> Self {
        Self { p_x, p_y, p_z, p_b, shots: None, stderr: None }
    }

    pub fn probabilities(&self) -> [f64; 3] {
        [self.p_x, self.p_y, self.p_z]
    }

    pub fn get(&self, s: TomoSetting) -> f64 {
        self.probabilities()[s.index()]
    }

    /// Tomography can only add tunneling on top of the background.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (name, v) in [("p_x", self.p_x), ("p_y", self.p_y), ("p_z", self.p_z), ("p_b", self.p_b)] {
            if !(-tol..=1.0 + tol).contains(&v) {
                return domain(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if self.probabilities().iter().any(|&v| v < self.p_b - tol) {
            return domain("tunneling probability below background");
        }
        Ok(())
    }
}

/// Appends the tomography rotation and the closing full measurement.
pub fn append_tomography(seq: &mut PulseSequence, setting: TomoSetting, timing: &Timing) {
    seq.push(StepKind::TomographyRotate(setting), timing.tomography_ns);
    seq.push(StepKind::FullMeasure, 0.0);
}

pub fn with_tomography(seq: &PulseSequence, setting: TomoSetting, timing: &Timing) -> PulseSequence {
    let mut out = seq.clone();
    append_tomography(&mut out, setting, timing);
    out
}

/// Ideal forward model `P_s = p_b + (1 - p_b)·v·⟨1|ρ_s|1⟩`.
pub fn tomo_probabilities(q: &QubitState, p_b: f64, d: &DeviceParams) -> Result<TomographyRecord> {
    if !(0.0..=1.0).contains(&p_b) {
        return domain(format!("background {p_b} outside [0, 1]"));
    }
    let normalized = q.normalized()?;
    let mut probs = [0.0; 3];
    for s in TomoSetting::ALL {
        let rotated = apply_rotation(&normalized, &s.pulse(0.0))?;
        probs[s.index()] = p_b + (1.0 - p_b) * d.visibility * rotated.rho()[(1, 1)].re;
    }
    Ok(TomographyRecord::new(probs[0], probs[1], probs[2], p_b))
}

pub fn bloch_reconstruct(t: &TomographyRecord) -> Result<BlochVector> {
    if t.p_b >= 1.0 - EXACT_TOL {
        return Err(Error::DegenerateBackground(t.p_b));
    }
    let component = |p: f64| 2.0 * (p - t.p_b) / (1.0 - t.p_b) - 1.0;
    Ok(BlochVector::new(component(t.p_x), -component(t.p_y), -component(t.p_z)))
}

/// Polar angle and azimuth, with the azimuth measured in the same sense as
/// the phase in `cos(θ/2)|0⟩ + e^{-iφ} sin(θ/2)|1⟩`.
pub fn polar_azimuth(b: &BlochVector) -> Result<(f64, f64)> {
    let n = b.norm();
    if n <= ROUNDOFF_TOL {
        return Err(Error::UndefinedDirection(n));
    }
    let theta = b.polar_angle();
    let phi = (-b.y).atan2(b.x).rem_euclid(TAU);
    // rem_euclid can round a tiny negative up to exactly 2π
    let phi = if phi >= TAU { 0.0 } else { phi };
    debug_assert!((0.0..=PI).contains(&theta));
    Ok((theta, phi))
}

/// Exact tomography of the conditional state at the end of a sequence,
/// including decoherence during the tomography pulse when enabled.
pub fn measure_exact(kind: SequenceKind, cfg: &ExperimentConfig) -> Result<TomographyRecord> {
    cfg.validate()?;
    let seq = build_sequence(kind, cfg);
    let p_b = run_exact(&seq, cfg)?.p_background;
    let mut probs = [0.0; 3];
    for s in TomoSetting::ALL {
        let out = run_exact(&with_tomography(&seq, s, &cfg.timing), cfg)?;
        let detect = out.p_full_detect.expect("tomography sequences end with FullMeasure");
        probs[s.index()] = p_b + (1.0 - p_b) * detect;
    }
    Ok(TomographyRecord::new(probs[0], probs[1], probs[2], p_b))
}

/// Reconstructed Bloch vector from [`measure_exact`].
pub fn reconstruct_exact(kind: SequenceKind, cfg: &ExperimentConfig) -> Result<BlochVector> {
    bloch_reconstruct(&measure_exact(kind, cfg)?)
}
