//! Single-qubit states, Bloch vectors and device parameters.
//!
//! A [`QubitState`] carries the unnormalized conditional density operator of
//! the qubit while it remains in the well, plus the scalar probability that a
//! tunneling event has already been recorded. The two always sum to one.
//!
//! Conventions: `|0⟩` is basis index 0 and sits at `z = +1`. Bloch components
//! are plain Pauli expectations, so the state
//! `cos(θ/2)|0⟩ + e^{-iφ} sin(θ/2)|1⟩` has `x = sin θ cos φ` and
//! `y = -sin θ sin φ`.

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// 2×2 complex operator on the in-well subspace.
pub type Op = Matrix2<Complex64>;

/// Tolerance for identities that hold exactly up to f64 rounding.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for checks after accumulated rounding.
pub const ROUNDOFF_TOL: f64 = 1e-9;
/// Conditional traces below this are treated as fully escaped.
pub const TRACE_FLOOR: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity() -> Op {
    Op::identity()
}

pub fn sigma_x() -> Op {
    Op::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn sigma_y() -> Op {
    Op::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn sigma_z() -> Op {
    Op::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// Pauli basis in the frozen order (I, X, Y, Z).
pub fn pauli_basis() -> [Op; 4] {
    [identity(), sigma_x(), sigma_y(), sigma_z()]
}

/// Largest absolute entry of `a - b`.
pub fn max_abs_diff(a: &Op, b: &Op) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Pure single-qubit state given by its polar angle and azimuth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    pub theta0: f64,
    pub phi0: f64,
}

impl PureState {
    pub fn new(theta0: f64, phi0: f64) -> Result<Self> {
        if !theta0.is_finite() || !(0.0..=std::f64::consts::PI).contains(&theta0) {
            return domain(format!("polar angle {theta0} outside [0, pi]"));
        }
        if !phi0.is_finite() {
            return domain("azimuth must be finite");
        }
        Ok(Self { theta0, phi0 })
    }

    pub fn ground() -> Self {
        Self { theta0: 0.0, phi0: 0.0 }
    }

    pub fn excited() -> Self {
        Self { theta0: std::f64::consts::PI, phi0: 0.0 }
    }

    /// `(|0⟩ + |1⟩)/√2`
    pub fn plus_x() -> Self {
        Self { theta0: std::f64::consts::FRAC_PI_2, phi0: 0.0 }
    }

    /// `(|0⟩ - i|1⟩)/√2`
    pub fn minus_i() -> Self {
        Self { theta0: std::f64::consts::FRAC_PI_2, phi0: std::f64::consts::FRAC_PI_2 }
    }

    /// Amplitudes `(cos(θ/2), e^{-iφ} sin(θ/2))`.
    pub fn amplitudes(&self) -> [Complex64; 2] {
        let (s, co) = (self.theta0 / 2.0).sin_cos();
        [c(co, 0.0), Complex64::from_polar(s, -self.phi0)]
    }
}

/// Conditional in-well density operator plus escaped probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    rho: Op,
    escaped: f64,
}

impl QubitState {
    /// Builds a state and checks hermiticity, positivity and the trace budget
    /// at [`ROUNDOFF_TOL`].
    pub fn from_parts(rho: Op, escaped: f64) -> Result<Self> {
        let q = Self { rho, escaped };
        q.validate(ROUNDOFF_TOL)?;
        Ok(q)
    }

    pub(crate) fn from_parts_unchecked(rho: Op, escaped: f64) -> Self {
        Self { rho, escaped }
    }

    pub fn from_amplitudes(a: [Complex64; 2]) -> Self {
        let rho = Op::new(
            a[0] * a[0].conj(),
            a[0] * a[1].conj(),
            a[1] * a[0].conj(),
            a[1] * a[1].conj(),
        );
        Self { rho, escaped: 0.0 }
    }

    pub fn rho(&self) -> &Op {
        &self.rho
    }

    pub fn escaped(&self) -> f64 {
        self.escaped
    }

    pub fn trace(&self) -> f64 {
        (self.rho[(0, 0)] + self.rho[(1, 1)]).re
    }

    /// Normalized copy of the conditional operator.
    pub fn normalized_rho(&self) -> Result<Op> {
        let tr = self.trace();
        if tr <= TRACE_FLOOR {
            return Err(Error::UndefinedState(tr));
        }
        Ok(self.rho.unscale(tr))
    }

    /// The normalized conditional state with the escaped weight dropped.
    pub fn normalized(&self) -> Result<QubitState> {
        Ok(QubitState { rho: self.normalized_rho()?, escaped: 0.0 })
    }

    /// `Tr(ρ²)/Tr(ρ)²`
    pub fn purity(&self) -> Result<f64> {
        let r = self.normalized_rho()?;
        Ok((r * r).trace().re)
    }

    /// Eigenvalues of the (unnormalized) conditional operator, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        hermitian_eigenvalues(&self.rho)
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs_diff(&self.rho, &self.rho.adjoint())
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if !self.rho.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || !self.escaped.is_finite() {
            return domain("non-finite state entry");
        }
        let herm = self.hermiticity_residual();
        if herm > tol {
            return domain(format!("rho is not Hermitian (residual {herm:e})"));
        }
        let [lo, _] = self.eigenvalues();
        if lo < -tol {
            return domain(format!("rho has negative eigenvalue {lo:e}"));
        }
        let tr = self.trace();
        if tr < -tol || tr > 1.0 + tol {
            return domain(format!("trace {tr} outside [0, 1]"));
        }
        if (tr + self.escaped - 1.0).abs() > tol {
            return domain(format!("trace + escaped = {} != 1", tr + self.escaped));
        }
        Ok(())
    }
}

/// Eigenvalues of a Hermitian 2×2 operator, ascending.
pub fn hermitian_eigenvalues(m: &Op) -> [f64; 2] {
    let a = m[(0, 0)].re;
    let d = m[(1, 1)].re;
    let b = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let r = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    [mean - r, mean + r]
}

/// Bloch vector with `|0⟩` at `z = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn max_abs_diff(&self, other: &BlochVector) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max((self.z - other.z).abs())
    }

    /// Polar angle from `+z`, computed with `atan2` so it stays accurate near
    /// the poles.
    pub fn polar_angle(&self) -> f64 {
        self.x.hypot(self.y).atan2(self.z)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Device constants in nanoseconds and GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviceParams {
    #[serde(rename = "t1_ns")]
    pub t1: f64,
    #[serde(rename = "t2_echo_ns")]
    pub t2_echo: f64,
    #[serde(rename = "t2_ramsey_ns")]
    pub t2_ramsey: f64,
    /// Transition frequency. Dynamics run in the rotating frame, so this is
    /// carried as metadata only.
    #[serde(rename = "e10_ghz")]
    pub e10_ghz: f64,
    /// Readout visibility used by the full tomography measurement.
    pub visibility: f64,
}

impl Default for DeviceParams {
    /// Measured coherence times with ideal (unit) readout visibility.
    fn default() -> Self {
        Self { t1: 450.0, t2_echo: 350.0, t2_ramsey: 120.0, e10_ghz: 6.75, visibility: 1.0 }
    }
}

impl DeviceParams {
    /// Default parameters with the device's ~90% readout visibility.
    pub fn with_device_visibility() -> Self {
        Self { visibility: 0.9, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let times = [self.t1, self.t2_echo, self.t2_ramsey];
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return domain("coherence times must be positive and finite");
        }
        if self.t2_echo > 2.0 * self.t1 {
            return domain(format!("t2_echo {} exceeds 2*t1 {}", self.t2_echo, 2.0 * self.t1));
        }
        if self.t2_ramsey > self.t2_echo {
            return domain(format!("t2_ramsey {} exceeds t2_echo {}", self.t2_ramsey, self.t2_echo));
        }
        if !(0.0..=1.0).contains(&self.visibility) {
            return domain(format!("visibility {} outside [0, 1]", self.visibility));
        }
        Ok(())
    }
}

pub fn state_from_angles(s: PureState) -> Result<QubitState> {
    let s = PureState::new(s.theta0, s.phi0)?;
    Ok(QubitState::from_amplitudes(s.amplitudes()))
}

pub fn bloch_from_state(q: &QubitState) -> Result<BlochVector> {
    let r = q.normalized_rho()?;
    let off = r[(1, 0)];
    Ok(BlochVector {
        x: 2.0 * off.re,
        y: 2.0 * off.im,
        z: (r[(0, 0)] - r[(1, 1)]).re,
    })
}

pub fn state_from_bloch(b: BlochVector) -> Result<QubitState> {
    if ![b.x, b.y, b.z].iter().all(|v| v.is_finite()) {
        return domain("non-finite Bloch component");
    }
    let n = b.norm();
    if n > 1.0 + ROUNDOFF_TOL {
        return domain(format!("Bloch vector length {n} exceeds 1"));
    }
    let rho = Op::new(
        c(0.5 * (1.0 + b.z), 0.0),
        c(0.5 * b.x, -0.5 * b.y),
        c(0.5 * b.x, 0.5 * b.y),
        c(0.5 * (1.0 - b.z), 0.0),
    );
    Ok(QubitState { rho, escaped: 0.0 })
}

/// Uhlmann fidelity of the normalized conditional states.
///
/// For 2×2 operators this reduces to `Tr(ρσ) + 2√(det ρ · det σ)`.
pub fn state_fidelity(a: &QubitState, b: &QubitState) -> Result<f64> {
    let ra = a.normalized_rho()?;
    let rb = b.normalized_rho()?;
    let overlap = (ra * rb).trace().re;
    let det_a = ra.determinant().re.max(0.0);
    let det_b = rb.determinant().re.max(0.0);
    Ok((overlap + 2.0 * (det_a * det_b).sqrt()).max(0.0))
}

/// Probability of at least one energy-relaxation event over `duration_ns`.
pub fn relaxation_probability(d: &DeviceParams, duration_ns: f64) -> Result<f64> {
    if !(0.0..).contains(&duration_ns) {
        return domain(format!("duration {duration_ns} must be non-negative"));
    }
    Ok(-(-duration_ns / d.t1).exp_m1())
}
