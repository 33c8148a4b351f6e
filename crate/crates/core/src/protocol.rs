//! Pulse sequences for the partial-collapse and uncollapsing experiments and
//! their exact (ensemble) execution.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channels::{
    apply_decoherence, apply_rotation, measurement_phase, partial_null_map, DecoherenceStep,
    PartialMeasurement, RotationPulse,
};
use crate::error::{domain, Error, Result};
use crate::qubit::{state_from_angles, DeviceParams, PureState, QubitState, ROUNDOFF_TOL, TRACE_FLOOR};
use crate::tomography::TomoSetting;

/// Step durations in nanoseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Timing {
    pub prepare_ns: f64,
    pub measure_ns: f64,
    /// Idle between the first measurement and the π pulse.
    pub idle_ns: f64,
    pub pi_pulse_ns: f64,
    pub tomography_ns: f64,
    /// Optional idle after the measurement in the partial-collapse sequence.
    pub collapse_idle_ns: f64,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            prepare_ns: 10.0,
            measure_ns: 3.0,
            idle_ns: 8.0,
            pi_pulse_ns: 10.0,
            tomography_ns: 10.0,
            collapse_idle_ns: 0.0,
        }
    }
}

impl Timing {
    /// Length of the uncollapsing sequence including one tomography pulse.
    pub fn uncollapse_total_ns(&self) -> f64 {
        self.prepare_ns + 2.0 * self.measure_ns + self.idle_ns + self.pi_pulse_ns + self.tomography_ns
    }

    fn validate(&self) -> Result<()> {
        let pulses = [self.prepare_ns, self.measure_ns, self.pi_pulse_ns, self.tomography_ns];
        if pulses.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return domain("pulse durations must be positive");
        }
        if !(self.idle_ns >= 0.0 && self.idle_ns.is_finite())
            || !(self.collapse_idle_ns >= 0.0 && self.collapse_idle_ns.is_finite())
        {
            return domain("idle durations must be non-negative");
        }
        Ok(())
    }
}

/// Which dephasing time governs a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum T2Source {
    Echo,
    Ramsey,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DephasingChoice {
    pub collapse: T2Source,
    pub uncollapse: T2Source,
}

impl Default for DephasingChoice {
    fn default() -> Self {
        Self { collapse: T2Source::Echo, uncollapse: T2Source::Echo }
    }
}

/// Calibration error on the reported strength `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StrengthBias {
    /// `p_true = p + offset`
    Additive { offset: f64 },
    /// `p_true = p·(1 + factor)`
    Multiplicative { factor: f64 },
}

impl StrengthBias {
    pub fn apply(&self, p: f64) -> f64 {
        let biased = match *self {
            StrengthBias::Additive { offset } => p + offset,
            StrengthBias::Multiplicative { factor } => p * (1.0 + factor),
        };
        biased.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub initial: PureState,
    pub p: f64,
    /// Fraction of π used for the refocusing pulse; 1 is ideal.
    pub pi_fraction: f64,
    pub device: DeviceParams,
    pub decoherence_enabled: bool,
    /// Slope of the linear measurement-phase model, radians per unit `p`.
    #[serde(rename = "phi_m_rate_rad")]
    pub phi_m_rate: f64,
    pub timing: Timing,
    pub dephasing: DephasingChoice,
    pub p_bias: Option<StrengthBias>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            initial: PureState::plus_x(),
            p: 0.0,
            pi_fraction: 1.0,
            device: DeviceParams::default(),
            decoherence_enabled: true,
            phi_m_rate: 4.0 * PI,
            timing: Timing::default(),
            dephasing: DephasingChoice::default(),
            p_bias: None,
        }
    }
}

impl ExperimentConfig {
    pub fn ideal() -> Self {
        Self { decoherence_enabled: false, ..Self::default() }
    }

    pub fn with_p(self, p: f64) -> Self {
        Self { p, ..self }
    }

    pub fn with_initial(self, initial: PureState) -> Self {
        Self { initial, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        PureState::new(self.initial.theta0, self.initial.phi0)?;
        if !(0.0..=1.0).contains(&self.p) {
            return domain(format!("measurement strength {} outside [0, 1]", self.p));
        }
        if !self.pi_fraction.is_finite() || !self.phi_m_rate.is_finite() {
            return domain("pi_fraction and phi_m_rate must be finite");
        }
        self.device.validate()?;
        self.timing.validate()
    }

    /// Strength actually applied, after the optional calibration bias.
    pub fn effective_p(&self) -> f64 {
        self.p_bias.map_or(self.p, |b| b.apply(self.p))
    }

    pub fn measurement(&self) -> PartialMeasurement {
        let p = self.effective_p();
        PartialMeasurement { p, phi_m: measurement_phase(self.phi_m_rate, p) }
    }

    /// Dephasing time that governs a sequence of the given kind.
    pub fn t2_for(&self, kind: SequenceKind) -> f64 {
        let source = match kind {
            SequenceKind::PartialCollapse => self.dephasing.collapse,
            SequenceKind::Uncollapse => self.dephasing.uncollapse,
        };
        match source {
            T2Source::Echo => self.device.t2_echo,
            T2Source::Ramsey => self.device.t2_ramsey,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    PartialCollapse,
    Uncollapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StepKind {
    Prepare(PureState),
    Rotate(RotationPulse),
    PartialMeasure(PartialMeasurement),
    Idle,
    TomographyRotate(TomoSetting),
    FullMeasure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceStep {
    pub kind: StepKind,
    pub start_ns: f64,
    pub duration_ns: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub kind: SequenceKind,
    pub steps: Vec<SequenceStep>,
}

impl PulseSequence {
    fn new(kind: SequenceKind) -> Self {
        Self { kind, steps: Vec::new() }
    }

    pub fn end_ns(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.start_ns + s.duration_ns)
    }

    pub(crate) fn push(&mut self, kind: StepKind, duration_ns: f64) {
        let start_ns = self.end_ns();
        self.steps.push(SequenceStep { kind, start_ns, duration_ns });
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.steps.iter().map(|s| s.duration_ns).sum()
    }

    pub fn has_tomography(&self) -> bool {
        self.steps.iter().any(|s| matches!(s.kind, StepKind::TomographyRotate(_)))
    }

    /// Checks ordering and step placement rules.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Structural(msg));
        match self.steps.first() {
            Some(SequenceStep { kind: StepKind::Prepare(_), .. }) => {}
            _ => return bad("sequence must start with a Prepare step".into()),
        }
        let mut t = self.steps[0].start_ns;
        let mut tomography_seen = false;
        for (i, step) in self.steps.iter().enumerate() {
            if !(step.duration_ns >= 0.0 && step.duration_ns.is_finite()) {
                return bad(format!("step {i} has invalid duration {}", step.duration_ns));
            }
            if step.start_ns < t - ROUNDOFF_TOL {
                return bad(format!("step {i} starts at {} before previous step ends at {t}", step.start_ns));
            }
            t = step.start_ns + step.duration_ns;
            match step.kind {
                StepKind::Prepare(_) if i > 0 => return bad(format!("Prepare at position {i}")),
                StepKind::FullMeasure if i + 1 != self.steps.len() => {
                    return bad("FullMeasure must be the last step".into())
                }
                StepKind::FullMeasure if !tomography_seen => {
                    return bad("FullMeasure without a tomography rotation".into())
                }
                StepKind::TomographyRotate(_) => {
                    if tomography_seen {
                        return bad("more than one tomography rotation".into());
                    }
                    tomography_seen = true;
                }
                StepKind::Rotate(_) | StepKind::PartialMeasure(_) | StepKind::Idle if tomography_seen => {
                    return bad(format!("step {i} follows the tomography rotation"));
                }
                _ => {}
            }
        }
        if tomography_seen && !matches!(self.steps.last().map(|s| s.kind), Some(StepKind::FullMeasure)) {
            return bad("tomography rotation must be followed by FullMeasure".into());
        }
        Ok(())
    }
}

/// Result of executing a sequence on the ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOutcome {
    /// Null-result branch; its trace is the success probability.
    pub conditional: QubitState,
    pub p_background: f64,
    pub p_success: f64,
    /// Conditional click probability of the final full measurement, when the
    /// sequence ends with one.
    pub p_full_detect: Option<f64>,
}

impl RunOutcome {
    pub fn normalized(&self) -> Result<QubitState> {
        self.conditional.normalized()
    }
}

/// Prepare → PartialMeasure, plus an idle when `collapse_idle_ns > 0`.
pub fn build_partial_collapse(cfg: &ExperimentConfig) -> PulseSequence {
    let t = &cfg.timing;
    let mut seq = PulseSequence::new(SequenceKind::PartialCollapse);
    seq.push(StepKind::Prepare(cfg.initial), t.prepare_ns);
    seq.push(StepKind::PartialMeasure(cfg.measurement()), t.measure_ns);
    if t.collapse_idle_ns > 0.0 {
        seq.push(StepKind::Idle, t.collapse_idle_ns);
    }
    seq
}

/// Prepare → PartialMeasure → (Idle) → Rotate(pi_fraction·π about X) →
/// PartialMeasure, both measurements sharing one strength and phase.
pub fn build_uncollapse(cfg: &ExperimentConfig) -> PulseSequence {
    build_uncollapse_with(cfg, cfg.measurement())
}

/// Uncollapsing sequence with an explicit measurement (strength and phase).
pub fn build_uncollapse_with(cfg: &ExperimentConfig, m: PartialMeasurement) -> PulseSequence {
    let t = &cfg.timing;
    let mut seq = PulseSequence::new(SequenceKind::Uncollapse);
    seq.push(StepKind::Prepare(cfg.initial), t.prepare_ns);
    seq.push(StepKind::PartialMeasure(m), t.measure_ns);
    if t.idle_ns > 0.0 {
        seq.push(StepKind::Idle, t.idle_ns);
    }
    seq.push(StepKind::Rotate(RotationPulse::about_x(cfg.pi_fraction * PI, t.pi_pulse_ns)), t.pi_pulse_ns);
    seq.push(StepKind::PartialMeasure(m), t.measure_ns);
    seq
}

pub fn build_sequence(kind: SequenceKind, cfg: &ExperimentConfig) -> PulseSequence {
    match kind {
        SequenceKind::PartialCollapse => build_partial_collapse(cfg),
        SequenceKind::Uncollapse => build_uncollapse(cfg),
    }
}

/// Executes the null-result branch of a sequence exactly.
///
/// Each step applies its unitary or measurement first and then, when enabled,
/// decoherence for the step duration.
pub fn run_exact(seq: &PulseSequence, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    seq.validate()?;
    cfg.device.validate()?;
    let t2 = cfg.t2_for(seq.kind);
    let mut q: Option<QubitState> = None;
    let mut p_full_detect = None;

    for step in &seq.steps {
        let next = match (step.kind, q) {
            (StepKind::Prepare(s), _) => state_from_angles(s)?,
            (_, None) => unreachable!("validated sequences start with Prepare"),
            (StepKind::Rotate(r), Some(cur)) => apply_rotation(&cur, &r)?,
            (StepKind::TomographyRotate(s), Some(cur)) => apply_rotation(&cur, &s.pulse(step.duration_ns))?,
            (StepKind::PartialMeasure(m), Some(cur)) => {
                m.validate()?;
                partial_null_map(&cur, &m)
            }
            (StepKind::Idle, Some(cur)) => cur,
            (StepKind::FullMeasure, Some(cur)) => {
                let tr = cur.trace();
                if tr <= TRACE_FLOOR {
                    return Err(Error::UndefinedState(tr));
                }
                p_full_detect = Some(cfg.device.visibility * cur.rho()[(1, 1)].re / tr);
                cur
            }
        };
        let next = if cfg.decoherence_enabled && step.duration_ns > 0.0 {
            let d = DecoherenceStep::from_times(step.duration_ns, cfg.device.t1, t2)?;
            apply_decoherence(&next, &d)?
        } else {
            next
        };
        debug_assert!(next.validate(ROUNDOFF_TOL).is_ok(), "invariant broken after {:?}", step.kind);
        q = Some(next);
    }

    let conditional = q.expect("validated sequences are non-empty");
    let p_success = conditional.trace().clamp(0.0, 1.0);
    Ok(RunOutcome { conditional, p_background: 1.0 - p_success, p_success, p_full_detect })
}

/// Probability that every measurement in the uncollapsing sequence returns a
/// null result.
pub fn success_probability(cfg: &ExperimentConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(run_exact(&build_uncollapse(cfg), cfg)?.p_success)
}

/// Ideal polar angle of the conditional state.
///
/// Collapse follows `2·atan(√(1-p)·tan(θ0/2))`; ideal uncollapsing gives the
/// X-flipped initial angle `π - θ0` for every `p`.
pub fn theory_polar_angle(kind: SequenceKind, theta0: f64, p: f64) -> Result<f64> {
    PureState::new(theta0, 0.0)?;
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("measurement strength {p} outside [0, 1]"));
    }
    if p >= 1.0 && theta0 >= PI {
        return Err(Error::UndefinedState(0.0));
    }
    match kind {
        SequenceKind::PartialCollapse => {
            let half = 0.5 * theta0;
            // atan2 form keeps θ0 = π exact instead of going through tan(π/2).
            Ok(2.0 * ((1.0 - p).sqrt() * half.sin()).atan2(half.cos()))
        }
        SequenceKind::Uncollapse => Ok(PI - theta0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::apply_rotation;
    use crate::qubit::{bloch_from_state, max_abs_diff, state_fidelity, EXACT_TOL};

    fn x_flipped(s: PureState) -> QubitState {
        apply_rotation(&state_from_angles(s).unwrap(), &RotationPulse::about_x(PI, 0.0)).unwrap()
    }

    #[test]
    fn default_timing_totals_44_ns() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.timing.uncollapse_total_ns(), 44.0);
        let mut seq = build_uncollapse(&cfg);
        crate::tomography::append_tomography(&mut seq, TomoSetting::Z, &cfg.timing);
        assert_eq!(seq.total_duration_ns(), 44.0);
        assert_eq!(seq.end_ns(), 44.0);
    }

    #[test]
    fn collapse_structure() {
        let cfg = ExperimentConfig::default().with_p(0.3);
        let seq = build_partial_collapse(&cfg);
        assert_eq!(seq.steps.len(), 2);
        assert!(matches!(seq.steps[0].kind, StepKind::Prepare(_)));
        assert!(matches!(seq.steps[1].kind, StepKind::PartialMeasure(m) if m.p == 0.3));
        let idle = ExperimentConfig {
            timing: Timing { collapse_idle_ns: 5.0, ..Timing::default() },
            ..cfg
        };
        assert_eq!(build_partial_collapse(&idle).steps.len(), 3);
    }

    #[test]
    fn p_zero_collapse_leaves_state() {
        let cfg = ExperimentConfig::ideal().with_initial(PureState::new(1.1, 0.3).unwrap());
        let out = run_exact(&build_partial_collapse(&cfg), &cfg).unwrap();
        let q0 = state_from_angles(cfg.initial).unwrap();
        assert!(max_abs_diff(out.conditional.rho(), q0.rho()) < EXACT_TOL);
        assert_eq!(out.p_background, 0.0);
    }

    #[test]
    fn p_zero_uncollapse_is_pi_rotation() {
        let cfg = ExperimentConfig::ideal().with_initial(PureState::new(0.7, 2.0).unwrap());
        let out = run_exact(&build_uncollapse(&cfg), &cfg).unwrap();
        assert!(max_abs_diff(out.conditional.rho(), x_flipped(cfg.initial).rho()) < EXACT_TOL);
    }

    #[test]
    fn collapse_background_equatorial() {
        for p in [0.1, 0.47, 0.9] {
            let cfg = ExperimentConfig::ideal().with_p(p);
            let out = run_exact(&build_partial_collapse(&cfg), &cfg).unwrap();
            assert!((out.p_background - p / 2.0).abs() < EXACT_TOL);
        }
    }

    #[test]
    fn success_probability_values() {
        assert_eq!(success_probability(&ExperimentConfig::ideal()).unwrap(), 1.0);
        let ideal = success_probability(&ExperimentConfig::ideal().with_p(0.47)).unwrap();
        assert!((ideal - 0.53).abs() < EXACT_TOL);
        // From |1⟩, relaxation between the two measurements turns would-be
        // successes into second-measurement tunneling.
        let noisy = ExperimentConfig::default().with_p(0.47).with_initial(PureState::excited());
        let noisy = success_probability(&noisy).unwrap();
        assert!(noisy < 0.53, "{noisy}");
        // From the equator, decay after the π pulse lowers the second
        // tunneling rate and the net success probability rises above 1 - p.
        let eq = success_probability(&ExperimentConfig::default().with_p(0.47)).unwrap();
        assert!((eq - 0.532_40).abs() < 1e-4, "{eq}");
    }

    #[test]
    fn wrong_pulse_degrades_recovery() {
        let cfg = ExperimentConfig { pi_fraction: 0.9, ..ExperimentConfig::ideal().with_p(0.5) };
        let out = run_exact(&build_uncollapse(&cfg), &cfg).unwrap();
        let f = state_fidelity(&out.conditional, &x_flipped(cfg.initial)).unwrap();
        assert!(f < 0.999, "{f}");
    }

    #[test]
    fn theory_angles() {
        use std::f64::consts::FRAC_PI_2;
        let t = theory_polar_angle(SequenceKind::PartialCollapse, FRAC_PI_2, 0.5).unwrap();
        assert!((t - 1.230_959_417_340_774_7).abs() < 1e-12);
        let t = theory_polar_angle(SequenceKind::PartialCollapse, FRAC_PI_2, 1.0 - 1e-14).unwrap();
        assert!(t < 1e-6);
        for p in [0.0, 0.3, 0.99] {
            let t = theory_polar_angle(SequenceKind::Uncollapse, FRAC_PI_2, p).unwrap();
            assert!((t - FRAC_PI_2).abs() < EXACT_TOL);
        }
        assert!(theory_polar_angle(SequenceKind::PartialCollapse, PI, 1.0).is_err());
        assert!((theory_polar_angle(SequenceKind::PartialCollapse, PI, 0.5).unwrap() - PI).abs() < EXACT_TOL);
    }

    #[test]
    fn malformed_sequences_are_rejected() {
        let cfg = ExperimentConfig::ideal();
        let mut seq = build_uncollapse(&cfg);
        seq.steps.remove(0);
        assert!(matches!(run_exact(&seq, &cfg), Err(Error::Structural(_))));

        let mut seq = build_uncollapse(&cfg);
        seq.push(StepKind::FullMeasure, 0.0);
        assert!(matches!(seq.validate(), Err(Error::Structural(_))));

        let mut seq = build_uncollapse(&cfg);
        seq.steps[2].start_ns = 0.0;
        assert!(matches!(seq.validate(), Err(Error::Structural(_))));

        let mut seq = build_partial_collapse(&cfg);
        crate::tomography::append_tomography(&mut seq, TomoSetting::X, &cfg.timing);
        seq.steps.pop();
        assert!(matches!(seq.validate(), Err(Error::Structural(_))));
    }

    #[test]
    fn p_one_is_permitted() {
        let cfg = ExperimentConfig::ideal().with_p(1.0).with_initial(PureState::excited());
        let out = run_exact(&build_uncollapse(&cfg), &cfg).unwrap();
        assert!(out.p_success < TRACE_FLOOR);
        assert!(matches!(out.normalized(), Err(Error::UndefinedState(_))));
    }

    #[test]
    fn bias_shifts_effective_strength() {
        let cfg = ExperimentConfig {
            p_bias: Some(StrengthBias::Multiplicative { factor: 0.05 }),
            ..ExperimentConfig::ideal().with_p(0.4)
        };
        assert!((cfg.effective_p() - 0.42).abs() < EXACT_TOL);
        let add = StrengthBias::Additive { offset: 0.1 };
        assert_eq!(add.apply(0.95), 1.0);
        let ok = success_probability(&cfg).unwrap();
        assert!((ok - 0.58).abs() < EXACT_TOL);
    }

    #[test]
    fn ramsey_dephasing_is_stronger() {
        let echo = ExperimentConfig::default().with_p(0.3);
        let ramsey = ExperimentConfig {
            dephasing: DephasingChoice { collapse: T2Source::Ramsey, uncollapse: T2Source::Ramsey },
            ..echo
        };
        let run = |c: &ExperimentConfig| {
            let out = run_exact(&build_uncollapse(c), c).unwrap();
            bloch_from_state(&out.conditional).unwrap().norm()
        };
        assert!(run(&ramsey) < run(&echo));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn any_cfg() -> impl Strategy<Value = ExperimentConfig> {
            (0.0..=PI, 0.0..2.0 * PI, 0.0..=1.0f64, 0.5..20.0f64, 0.0..20.0f64, 0.0..5.0f64).prop_map(
                |(t, ph, p, pulse, idle, cidle)| ExperimentConfig {
                    initial: PureState::new(t, ph).unwrap(),
                    p,
                    timing: Timing {
                        prepare_ns: pulse,
                        measure_ns: pulse / 3.0,
                        idle_ns: idle,
                        pi_pulse_ns: pulse,
                        tomography_ns: pulse,
                        collapse_idle_ns: cidle,
                    },
                    ..ExperimentConfig::default()
                },
            )
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn step_times_strictly_increase(cfg in any_cfg()) {
                for kind in [SequenceKind::PartialCollapse, SequenceKind::Uncollapse] {
                    let seq = build_sequence(kind, &cfg);
                    seq.validate().unwrap();
                    for w in seq.steps.windows(2) {
                        prop_assert!(w[1].start_ns > w[0].start_ns);
                        prop_assert!((w[1].start_ns - (w[0].start_ns + w[0].duration_ns)).abs() < 1e-12);
                    }
                }
            }

            #[test]
            fn noisy_runs_keep_invariants(cfg in any_cfg()) {
                for kind in [SequenceKind::PartialCollapse, SequenceKind::Uncollapse] {
                    let out = run_exact(&build_sequence(kind, &cfg), &cfg).unwrap();
                    out.conditional.validate(ROUNDOFF_TOL).unwrap();
                    prop_assert!((out.p_background + out.p_success - 1.0).abs() < EXACT_TOL);
                }
            }

            #[test]
            fn uncollapse_restores_flipped_state(t in 0.0..=PI, ph in 0.0..2.0 * PI, p in 0.0..=0.99f64, rate in -50.0..50.0f64) {
                let cfg = ExperimentConfig { phi_m_rate: rate, ..ExperimentConfig::ideal() }
                    .with_p(p)
                    .with_initial(PureState::new(t, ph).unwrap());
                let out = run_exact(&build_uncollapse(&cfg), &cfg).unwrap();
                let f = state_fidelity(&out.conditional, &x_flipped(cfg.initial)).unwrap();
                prop_assert!(f >= 1.0 - 1e-10);
                prop_assert!((out.p_success - (1.0 - p)).abs() < EXACT_TOL);
                let s = (0.5 * t).sin().powi(2);
                let theta_m = theory_polar_angle(SequenceKind::PartialCollapse, t, p).unwrap();
                let pb = 1.0 - (1.0 - p * s) * (1.0 - p * (0.5 * theta_m).cos().powi(2));
                prop_assert!((pb - p).abs() < EXACT_TOL);
                prop_assert!((out.p_background - p).abs() < EXACT_TOL);
            }
        }
    }
}
