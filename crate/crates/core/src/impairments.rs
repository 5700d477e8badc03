//! Transmitter and converter non-idealities: kappa-parameterized hardware
//! noise, additive white Gaussian noise, and the deterministic I/Q
//! impairment chain (gain imbalance, quadrature skew, amplitude droop,
//! carrier frequency/phase offset).
//!
//! Hardware noise follows the multiplicative-variance model: a stage
//! driven at linear power P with impairment strength kappa adds
//! circularly-symmetric complex Gaussian noise of variance P * kappa^2.
//! Stage aggregates combine in quadrature, so injecting once with the
//! aggregate kappa is statistically equivalent to injecting each
//! contributor separately.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::waveform::IqFrame;

/// Per-stage hardware impairment strengths. The stage aggregates are
/// always recomputed from the four primitives, never stored.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HardwareNoiseParams {
    /// SDR transmit-side impairment.
    pub kappa_i: f64,
    /// First converter receive-side impairment.
    pub kappa_fr: f64,
    /// First converter transmit-side impairment.
    pub kappa_ft: f64,
    /// Second converter receive-side impairment.
    pub kappa_f2r: f64,
}

impl Default for HardwareNoiseParams {
    fn default() -> Self {
        HardwareNoiseParams {
            kappa_i: 0.0,
            kappa_fr: 0.0,
            kappa_ft: 0.0,
            kappa_f2r: 0.0,
        }
    }
}

impl HardwareNoiseParams {
    pub fn validate(&self) -> Result<()> {
        for (name, k) in [
            ("kappa_i", self.kappa_i),
            ("kappa_fr", self.kappa_fr),
            ("kappa_ft", self.kappa_ft),
            ("kappa_f2r", self.kappa_f2r),
        ] {
            if !(k >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be >= 0, got {k}")));
            }
        }
        Ok(())
    }

    /// First-stage aggregate: quadrature sum of the SDR TX and first
    /// converter RX impairments.
    pub fn kappa_s(&self) -> f64 {
        (self.kappa_i.powi(2) + self.kappa_fr.powi(2)).sqrt()
    }

    /// Second-stage aggregate: quadrature sum of the first converter TX
    /// and second converter RX impairments.
    pub fn kappa_t(&self) -> f64 {
        (self.kappa_ft.powi(2) + self.kappa_f2r.powi(2)).sqrt()
    }
}

/// Deterministic transmit impairments, applied in the fixed order
/// gain -> skew -> droop -> CFO/phase.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct IqImpairmentSpec {
    /// dB applied to the I branch relative to Q.
    pub gain_imbalance_db: f64,
    /// Quadrature-axis rotation of Q toward I, degrees.
    pub skew_deg: f64,
    /// Amplitude decay from first to last sample, dB (positive = decay).
    pub droop_db_total: f64,
    /// Carrier frequency offset, Hz.
    pub cfo_hz: f64,
    /// Static phase offset, degrees.
    pub phase_offset_deg: f64,
}

impl Default for IqImpairmentSpec {
    fn default() -> Self {
        IqImpairmentSpec {
            gain_imbalance_db: 0.0,
            skew_deg: 0.0,
            droop_db_total: 0.0,
            cfo_hz: 0.0,
            phase_offset_deg: 0.0,
        }
    }
}

impl IqImpairmentSpec {
    pub fn is_identity(&self) -> bool {
        self.gain_imbalance_db == 0.0
            && self.skew_deg == 0.0
            && self.droop_db_total == 0.0
            && self.cfo_hz == 0.0
            && self.phase_offset_deg == 0.0
    }
}

fn complex_gaussian<R: Rng>(rng: &mut R, std_per_component: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * std_per_component, im * std_per_component)
}

/// Scale a frame by sqrt(power_scale) and add hardware noise of variance
/// power_scale * kappa^2 per sample. kappa = 0 is the exact scaling.
pub fn inject_stage_noise<R: Rng>(
    frame: &IqFrame,
    power_scale: f64,
    kappa: f64,
    rng: &mut R,
) -> Result<IqFrame> {
    if !(kappa >= 0.0) {
        return Err(Error::Parameter(format!("kappa must be >= 0, got {kappa}")));
    }
    if !(power_scale > 0.0) {
        return Err(Error::Parameter(format!(
            "power_scale must be > 0, got {power_scale}"
        )));
    }
    let amp = power_scale.sqrt();
    let mut out = frame.clone();
    if kappa == 0.0 {
        for s in &mut out.samples {
            *s *= amp;
        }
        return Ok(out);
    }
    let std = (power_scale * kappa * kappa / 2.0).sqrt();
    for s in &mut out.samples {
        *s = *s * amp + complex_gaussian(rng, std);
    }
    Ok(out)
}

/// Add white Gaussian noise of per-sample complex variance n0.
/// n0 = 0 returns a bit-identical frame.
pub fn add_awgn<R: Rng>(frame: &IqFrame, n0: f64, rng: &mut R) -> Result<IqFrame> {
    if !(n0 >= 0.0) {
        return Err(Error::Parameter(format!("n0 must be >= 0, got {n0}")));
    }
    let mut out = frame.clone();
    if n0 == 0.0 {
        return Ok(out);
    }
    let std = (n0 / 2.0).sqrt();
    for s in &mut out.samples {
        *s += complex_gaussian(rng, std);
    }
    Ok(out)
}

/// Apply the deterministic impairment chain in the fixed order
/// gain -> skew -> droop -> CFO/phase. An all-zero spec returns a
/// bit-identical frame.
pub fn apply_iq_impairments(frame: &IqFrame, spec: &IqImpairmentSpec) -> Result<IqFrame> {
    if frame.samples.is_empty() {
        return Err(Error::Parameter("frame must contain samples".to_string()));
    }
    let mut out = frame.clone();
    if spec.is_identity() {
        return Ok(out);
    }
    let n = out.samples.len();

    if spec.gain_imbalance_db != 0.0 {
        let g = 10f64.powf(spec.gain_imbalance_db / 20.0);
        for s in &mut out.samples {
            s.re *= g;
        }
    }
    if spec.skew_deg != 0.0 {
        let th = spec.skew_deg.to_radians();
        let (sin, cos) = (th.sin(), th.cos());
        for s in &mut out.samples {
            s.im = s.im * cos + s.re * sin;
        }
    }
    if spec.droop_db_total != 0.0 && n > 1 {
        // Linear-in-dB ramp hitting -droop_db_total at the final sample.
        let denom = (n - 1) as f64;
        for (k, s) in out.samples.iter_mut().enumerate() {
            let db = -spec.droop_db_total * k as f64 / denom;
            *s *= 10f64.powf(db / 20.0);
        }
    }
    if spec.cfo_hz != 0.0 || spec.phase_offset_deg != 0.0 {
        let phi0 = spec.phase_offset_deg.to_radians();
        let dphi = 2.0 * std::f64::consts::PI * spec.cfo_hz / out.sample_rate_hz;
        for (k, s) in out.samples.iter_mut().enumerate() {
            let ph = phi0 + dphi * k as f64;
            *s *= Complex64::new(ph.cos(), ph.sin());
        }
    }
    Ok(out)
}

/// Optional oscillator phase-random-walk hook. Not part of the standard
/// chain; no shipped scenario enables it (no accepted linewidth model
/// exists for the target hardware), but it is available for sensitivity
/// studies. Each sample accumulates a Gaussian phase increment of the
/// given standard deviation.
pub fn apply_phase_walk<R: Rng>(
    frame: &IqFrame,
    std_rad_per_sample: f64,
    rng: &mut R,
) -> Result<IqFrame> {
    if !(std_rad_per_sample >= 0.0) {
        return Err(Error::Parameter(format!(
            "std_rad_per_sample must be >= 0, got {std_rad_per_sample}"
        )));
    }
    let mut out = frame.clone();
    let mut phase = 0.0f64;
    for s in &mut out.samples {
        let step: f64 = StandardNormal.sample(rng);
        phase += step * std_rad_per_sample;
        *s *= Complex64::new(phase.cos(), phase.sin());
    }
    Ok(out)
}
