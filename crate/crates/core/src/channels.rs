//! Quantum operations acting on [`QubitState`]: the tunable partial
//! measurement, rotation pulses and T1/Tφ decoherence, each backed by an
//! explicit Kraus set.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::qubit::{c, identity, sigma_x, sigma_y, sigma_z, Op, QubitState, EXACT_TOL, ROUNDOFF_TOL, TRACE_FLOOR};

/// Labeled Kraus operators on the in-well subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub labels: Vec<String>,
    pub ops: Vec<Op>,
}

impl KrausSet {
    pub fn new(entries: Vec<(&str, Op)>) -> Result<Self> {
        if entries.is_empty() {
            return domain("empty Kraus set");
        }
        let (labels, ops) = entries.into_iter().map(|(l, k)| (l.to_string(), k)).unzip();
        Ok(Self { labels, ops })
    }

    /// Null and tunnel branches of a partial measurement.
    pub fn partial_measurement(m: &PartialMeasurement) -> Self {
        let tunnel = Op::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(m.p.sqrt(), 0.0));
        Self {
            labels: vec!["null".into(), "tunnel".into()],
            ops: vec![m.null_operator(), tunnel],
        }
    }

    /// Energy relaxation toward `|0⟩` with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Self {
        let keep = Op::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - gamma).sqrt(), 0.0));
        let jump = Op::new(c(0.0, 0.0), c(gamma.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0));
        Self { labels: vec!["no-decay".into(), "decay".into()], ops: vec![keep, jump] }
    }

    /// Pure dephasing that multiplies coherences by `1 - lambda`, written as
    /// a phase flip with probability `lambda / 2`.
    pub fn dephasing(lambda: f64) -> Self {
        Self {
            labels: vec!["no-flip".into(), "phase-flip".into()],
            ops: vec![identity().scale((1.0 - 0.5 * lambda).sqrt()), sigma_z().scale((0.5 * lambda).sqrt())],
        }
    }

    /// `Σ K ρ K†`
    pub fn apply(&self, rho: &Op) -> Op {
        self.ops.iter().map(|k| k * rho * k.adjoint()).sum()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }
}

/// Max-norm deviation of `Σ K†K` from the identity.
pub fn kraus_completeness_check(k: &KrausSet) -> f64 {
    let sum: Op = k.ops.iter().map(|op| op.adjoint() * op).sum();
    crate::qubit::max_abs_diff(&sum, &identity())
}

/// Tunable-strength measurement that detects `|1⟩` with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartialMeasurement {
    pub p: f64,
    /// Phase accumulated on `|1⟩` relative to `|0⟩` during the bias pulse.
    pub phi_m: f64,
}

impl PartialMeasurement {
    pub fn new(p: f64, phi_m: f64) -> Result<Self> {
        let m = Self { p, phi_m };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return domain(format!("measurement strength {} outside [0, 1]", self.p));
        }
        if !self.phi_m.is_finite() {
            return domain("measurement phase must be finite");
        }
        Ok(())
    }

    /// `diag(1, √(1-p)·e^{-iφ_M})`
    pub fn null_operator(&self) -> Op {
        Op::new(
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            num_complex::Complex64::from_polar((1.0 - self.p).sqrt(), -self.phi_m),
        )
    }
}

/// Linear measurement-phase model `φ_M(p) = rate·p`.
pub fn measurement_phase(rate: f64, p: f64) -> f64 {
    rate * p
}

/// Rotation `exp(-i·angle·(n·σ)/2)` taking `duration_ns`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationPulse {
    pub axis: [f64; 3],
    pub angle: f64,
    pub duration_ns: f64,
}

impl RotationPulse {
    pub fn about_x(angle: f64, duration_ns: f64) -> Self {
        Self { axis: [1.0, 0.0, 0.0], angle, duration_ns }
    }

    pub fn about_y(angle: f64, duration_ns: f64) -> Self {
        Self { axis: [0.0, 1.0, 0.0], angle, duration_ns }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.axis.iter().map(|a| a * a).sum::<f64>().sqrt();
        if !n.is_finite() || (n - 1.0).abs() > ROUNDOFF_TOL {
            return domain(format!("rotation axis has length {n}, expected 1"));
        }
        if !self.angle.is_finite() {
            return domain("rotation angle must be finite");
        }
        if !(0.0..).contains(&self.duration_ns) {
            return domain(format!("pulse duration {} must be non-negative", self.duration_ns));
        }
        Ok(())
    }

    pub fn unitary(&self) -> Op {
        let (s, co) = (0.5 * self.angle).sin_cos();
        let [nx, ny, nz] = self.axis;
        let generator = sigma_x().scale(nx) + sigma_y().scale(ny) + sigma_z().scale(nz);
        identity().scale(co) - generator * c(0.0, s)
    }
}

/// Free evolution under T1 relaxation and pure dephasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceStep {
    pub duration_ns: f64,
    pub t1: f64,
    /// Pure-dephasing time; infinite when `T2 = 2·T1`.
    pub t_phi: f64,
}

impl DecoherenceStep {
    /// Derives `T_φ` from `1/T2 = 1/(2·T1) + 1/T_φ`.
    pub fn from_times(duration_ns: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0 && t2 > 0.0) {
            return domain("coherence times must be positive");
        }
        let rate = 1.0 / t2 - 0.5 / t1;
        if rate < -EXACT_TOL {
            return domain(format!("t2 {t2} exceeds 2*t1 {}", 2.0 * t1));
        }
        let t_phi = if rate <= 0.0 { f64::INFINITY } else { 1.0 / rate };
        let step = Self { duration_ns, t1, t_phi };
        step.validate()?;
        Ok(step)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..).contains(&self.duration_ns) {
            return domain(format!("decoherence duration {} must be non-negative", self.duration_ns));
        }
        if self.t1.is_nan() || self.t1 <= 0.0 || self.t_phi.is_nan() || self.t_phi <= 0.0 {
            return domain("t1 and t_phi must be positive");
        }
        Ok(())
    }

    /// Amplitude-damping probability `1 - e^{-t/T1}`.
    pub fn gamma(&self) -> f64 {
        -(-self.duration_ns / self.t1).exp_m1()
    }

    /// Dephasing parameter `1 - e^{-t/T_φ}`.
    pub fn lambda(&self) -> f64 {
        -(-self.duration_ns / self.t_phi).exp_m1()
    }
}

fn ensure_trace(q: &QubitState) -> Result<f64> {
    let tr = q.trace();
    if tr <= TRACE_FLOOR {
        return Err(Error::UndefinedState(tr));
    }
    Ok(tr)
}

/// Null-branch update `ρ → M0 ρ M0†`, moving the removed weight into the
/// escaped scalar. Does not require a non-zero trace.
pub(crate) fn partial_null_map(q: &QubitState, m: &PartialMeasurement) -> QubitState {
    let m0 = m.null_operator();
    let rho = m0 * q.rho() * m0.adjoint();
    let removed = q.trace() - (rho[(0, 0)] + rho[(1, 1)]).re;
    QubitState::from_parts_unchecked(rho, q.escaped() + removed)
}

/// Null (no tunneling) outcome of a partial measurement.
///
/// Returns the unnormalized conditional state and the conditional probability
/// of the null result.
pub fn apply_partial_null(q: &QubitState, m: &PartialMeasurement) -> Result<(QubitState, f64)> {
    m.validate()?;
    let tr = ensure_trace(q)?;
    let out = partial_null_map(q, m);
    Ok((out, out.trace() / tr))
}

/// Tunnel outcome of a partial measurement: probability `p·ρ11/Tr ρ`.
///
/// The returned state is the ensemble bookkeeping after the measurement,
/// i.e. the tunneled weight moved into `escaped` and the null branch left in
/// `rho`.
pub fn apply_partial_tunnel(q: &QubitState, m: &PartialMeasurement) -> Result<(QubitState, f64)> {
    m.validate()?;
    let tr = ensure_trace(q)?;
    let prob = m.p * q.rho()[(1, 1)].re / tr;
    Ok((partial_null_map(q, m), prob))
}

pub fn apply_rotation(q: &QubitState, r: &RotationPulse) -> Result<QubitState> {
    r.validate()?;
    let u = r.unitary();
    Ok(QubitState::from_parts_unchecked(u * q.rho() * u.adjoint(), q.escaped()))
}

/// Amplitude damping followed by pure dephasing for the step duration.
pub fn apply_decoherence(q: &QubitState, d: &DecoherenceStep) -> Result<QubitState> {
    d.validate()?;
    if d.duration_ns == 0.0 {
        return Ok(*q);
    }
    let rho = KrausSet::amplitude_damping(d.gamma()).apply(q.rho());
    let rho = KrausSet::dephasing(d.lambda()).apply(&rho);
    Ok(QubitState::from_parts_unchecked(rho, q.escaped()))
}
