//! Cascaded-stage link composition: stage powers, losses, hardware noise,
//! channel coefficient and thermal noise in the documented order, plus
//! closed-form stage SNRs and the multiplier-chain data-rate bound.
//!
//! Power conventions: configuration carries dBm, all internal math is
//! linear (milliwatts); conversions happen only at the config boundary.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::impairments::{add_awgn, apply_iq_impairments, inject_stage_noise};
use crate::impairments::{HardwareNoiseParams, IqImpairmentSpec};
use crate::waveform::IqFrame;

/// dBm to linear milliwatts.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// dB ratio to linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Antenna descriptors. Informational link-budget bookkeeping only: no
/// operation consumes them (gains enter the budget through the insertion
/// loss figure). Defaults follow the reference horn hardware.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct AntennaInfo {
    pub gain_dbi: f64,
    pub beamwidth_e_deg: f64,
    pub beamwidth_h_deg: f64,
    pub aperture_efficiency: f64,
}

impl Default for AntennaInfo {
    fn default() -> Self {
        AntennaInfo {
            gain_dbi: 11.0,
            beamwidth_e_deg: 8.9,
            beamwidth_h_deg: 10.28,
            aperture_efficiency: 0.511,
        }
    }
}

/// One end-to-end link configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    /// First-stage (SDR) transmit power, dBm.
    pub p_s_dbm: f64,
    /// Second-stage (converter) transmit power, dBm.
    pub p_t_dbm: f64,
    /// Fixed cable/splitter losses, dB, >= 0.
    pub insertion_loss_db: f64,
    /// Channel loss coefficient L from the propagation model, unitless.
    pub path_loss: f64,
    /// Thermal noise power per sample (linear, same unit as powers).
    pub n0: f64,
    pub noise: HardwareNoiseParams,
    /// Informational only; see AntennaInfo.
    pub antenna: AntennaInfo,
}

impl StageConfig {
    pub fn validate(&self) -> Result<()> {
        self.noise.validate()?;
        if !(self.insertion_loss_db >= 0.0) {
            return Err(Error::Parameter(format!(
                "insertion_loss_db must be >= 0, got {}",
                self.insertion_loss_db
            )));
        }
        if !(self.path_loss > 0.0) {
            return Err(Error::Parameter(format!(
                "path_loss must be > 0, got {}",
                self.path_loss
            )));
        }
        if !(self.n0 >= 0.0) {
            return Err(Error::Parameter(format!("n0 must be >= 0, got {}", self.n0)));
        }
        Ok(())
    }

    pub fn p_s_linear(&self) -> f64 {
        dbm_to_linear(self.p_s_dbm)
    }

    pub fn p_t_linear(&self) -> f64 {
        dbm_to_linear(self.p_t_dbm)
    }

    /// Channel loss combined with the fixed insertion losses.
    pub fn total_loss(&self) -> f64 {
        self.path_loss * db_to_linear(self.insertion_loss_db)
    }
}

/// First-stage SNR: 1 / kappa_s^2. A noiseless stage (kappa_s = 0) has no
/// finite SNR; the documented sentinel is +infinity, not an error.
pub fn snr_stage1(noise: &HardwareNoiseParams) -> f64 {
    let ks = noise.kappa_s();
    if ks == 0.0 {
        f64::INFINITY
    } else {
        1.0 / (ks * ks)
    }
}

/// Second-stage (end-to-end) SNR closed form:
///
/// gamma = (P_T |h|^2 / (L kappa_s^2 N0)) /
///         (P_T |h|^2 kappa_s^2 kappa_t^2 / (L N0) + 1)
///
/// Implemented exactly as printed. The kappa_s^2 in the first factor's
/// denominator makes the expression diverge as kappa_s -> 0, so
/// kappa_s > 0 is a precondition here even though stage 1 tolerates 0.
/// The insertion losses fold into L.
pub fn snr_stage2(cfg: &StageConfig, h: Complex64) -> Result<f64> {
    cfg.validate()?;
    let ks = cfg.noise.kappa_s();
    let kt = cfg.noise.kappa_t();
    if !(ks > 0.0) {
        return Err(Error::Parameter(
            "second-stage SNR requires kappa_s > 0".to_string(),
        ));
    }
    if !(cfg.n0 > 0.0) {
        return Err(Error::Parameter(
            "second-stage SNR requires n0 > 0".to_string(),
        ));
    }
    let b = cfg.p_t_linear() * h.norm_sqr() / cfg.total_loss();
    let num = b / (ks * ks * cfg.n0);
    let den = b * ks * ks * kt * kt / cfg.n0 + 1.0;
    Ok(num / den)
}

/// Run one frame through the full cascade:
/// 1. first-stage scaling and hardware noise (power P_S, aggregate kappa_s),
/// 2. deterministic I/Q impairments,
/// 3. second-stage scaling sqrt(P_T / L_total) and channel coefficient h,
/// 4. second-stage hardware noise (variance (P_T/L_total) |h|^2 kappa_t^2),
/// 5. additive white Gaussian noise of per-sample variance n0.
pub fn simulate_end_to_end<R: Rng>(
    tx: &IqFrame,
    cfg: &StageConfig,
    h: Complex64,
    iq_spec: &IqImpairmentSpec,
    rng: &mut R,
) -> Result<IqFrame> {
    cfg.validate()?;
    let stage1 = inject_stage_noise(tx, cfg.p_s_linear(), cfg.noise.kappa_s(), rng)?;
    let impaired = apply_iq_impairments(&stage1, iq_spec)?;

    let gain = (cfg.p_t_linear() / cfg.total_loss()).sqrt();
    let mut through = impaired;
    for s in &mut through.samples {
        *s *= gain * h;
    }

    let kt = cfg.noise.kappa_t();
    let stage2 = if kt > 0.0 {
        let kappa_eff = gain * h.norm() * kt;
        inject_stage_noise(&through, 1.0, kappa_eff, rng)?
    } else {
        through
    };
    add_awgn(&stage2, cfg.n0, rng)
}

/// Maximum data rate of the extended chain: 2 * B_T * log2(M).
pub fn max_data_rate(b_t_hz: f64, m_mod: usize) -> Result<f64> {
    if !(b_t_hz > 0.0) {
        return Err(Error::Parameter(format!("B_T must be > 0, got {b_t_hz}")));
    }
    if m_mod < 2 {
        return Err(Error::Parameter(format!(
            "constellation size must be >= 2, got {m_mod}"
        )));
    }
    Ok(2.0 * b_t_hz * (m_mod as f64).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn noise(ks_each: f64, kt_each: f64) -> HardwareNoiseParams {
        HardwareNoiseParams {
            kappa_i: ks_each,
            kappa_fr: 0.0,
            kappa_ft: kt_each,
            kappa_f2r: 0.0,
        }
    }

    fn cfg(p_s_dbm: f64, p_t_dbm: f64, l: f64, n0: f64, np: HardwareNoiseParams) -> StageConfig {
        StageConfig {
            p_s_dbm,
            p_t_dbm,
            insertion_loss_db: 0.0,
            path_loss: l,
            n0,
            noise: np,
            antenna: AntennaInfo::default(),
        }
    }

    fn random_qpsk_frame(n: usize, seed: u64) -> IqFrame {
        use crate::waveform::{map_symbols, ModulationScheme};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bits: Vec<u8> = (0..2 * n).map(|_| rng.gen_range(0..2u8)).collect();
        IqFrame::from_symbols(
            map_symbols(&bits, ModulationScheme::Qpsk).unwrap(),
            1.6e6,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn stage1_snr_closed_form() {
        assert_eq!(snr_stage1(&noise(1.0, 0.0)), 1.0);
        assert!((snr_stage1(&noise(0.1, 0.0)) - 100.0).abs() < 1e-12);
        // Two equal contributors combine in quadrature: kappa_s^2 = 0.02.
        let both = HardwareNoiseParams {
            kappa_i: 0.1,
            kappa_fr: 0.1,
            kappa_ft: 0.0,
            kappa_f2r: 0.0,
        };
        assert!((snr_stage1(&both) - 50.0).abs() < 1e-12);
        assert_eq!(snr_stage1(&noise(0.0, 0.0)), f64::INFINITY);
    }

    #[test]
    fn stage2_snr_closed_form_cases() {
        // P_T |h|^2 / L = N0 with kappa_s = 1, kappa_t = 0: gamma = 1.
        let c = cfg(0.0, 0.0, 1.0, 1.0, noise(1.0, 0.0));
        let g = snr_stage2(&c, Complex64::new(1.0, 0.0)).unwrap();
        assert!((g - 1.0).abs() < 1e-12, "gamma = {g}");
        // kappa_t -> 0 recovers P_T |h|^2 / (L kappa_s^2 N0).
        let c = cfg(0.0, 10.0, 2.0, 0.5, noise(0.1, 0.0));
        let g = snr_stage2(&c, Complex64::new(0.8, 0.0)).unwrap();
        let want = 10.0 * 0.64 / (2.0 * 0.01 * 0.5);
        assert!((g - want).abs() / want < 1e-12, "gamma {g} vs {want}");
        // Monotone decreasing in L.
        let mut prev = f64::INFINITY;
        for l in [1.0, 2.0, 4.0] {
            let c = cfg(0.0, 0.0, l, 0.01, noise(0.1, 0.05));
            let g = snr_stage2(&c, Complex64::new(1.0, 0.0)).unwrap();
            assert!(g < prev, "gamma not decreasing at L = {l}");
            prev = g;
        }
    }

    #[test]
    fn stage2_snr_scale_invariance() {
        // h -> c h with L -> |c|^2 L leaves gamma unchanged.
        let base = cfg(0.0, 7.0, 1.5, 0.02, noise(0.08, 0.03));
        let h = Complex64::new(0.6, -0.3);
        let g1 = snr_stage2(&base, h).unwrap();
        let scale = 2.7f64;
        let scaled = StageConfig {
            path_loss: base.path_loss * scale * scale,
            ..base
        };
        let g2 = snr_stage2(&scaled, h * scale).unwrap();
        assert!(
            ((g1 - g2) / g1).abs() < 1e-12,
            "gamma changed under joint rescale: {g1} vs {g2}"
        );
    }

    #[test]
    fn stage2_snr_parameter_errors() {
        let c = cfg(0.0, 0.0, 1.0, 0.0, noise(0.1, 0.0));
        assert!(snr_stage2(&c, Complex64::new(1.0, 0.0)).is_err());
        let c = cfg(0.0, 0.0, 1.0, 1.0, noise(0.0, 0.0));
        assert!(snr_stage2(&c, Complex64::new(1.0, 0.0)).is_err());
        let c = cfg(0.0, 0.0, 0.0, 1.0, noise(0.1, 0.0));
        assert!(snr_stage2(&c, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn noiseless_chain_is_identity_up_to_scale() {
        let frame = random_qpsk_frame(4096, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        // Unit everything: exact identity.
        let c = cfg(0.0, 0.0, 1.0, 0.0, noise(0.0, 0.0));
        let out = simulate_end_to_end(
            &frame,
            &c,
            Complex64::new(1.0, 0.0),
            &IqImpairmentSpec::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(frame.samples, out.samples, "unit chain must be exact identity");

        // Arbitrary powers and loss: identity up to sqrt(P_S P_T / L_total).
        let c = StageConfig {
            insertion_loss_db: 3.0,
            ..cfg(10.0, 5.0, 2.0, 0.0, noise(0.0, 0.0))
        };
        let out = simulate_end_to_end(
            &frame,
            &c,
            Complex64::new(1.0, 0.0),
            &IqImpairmentSpec::default(),
            &mut rng,
        )
        .unwrap();
        let scale = (c.p_s_linear() * c.p_t_linear() / c.total_loss()).sqrt();
        for (a, b) in frame.samples.iter().zip(&out.samples) {
            let rel = (b - a * scale).norm() / (a * scale).norm();
            assert!(rel < 1e-12, "relative deviation {rel}");
        }
    }

    #[test]
    fn chain_snr_tracks_closed_form_at_hardware_limited_point() {
        // Operating point where the closed form and the physical cascade
        // agree: transmit-side power high enough that hardware noise
        // dominates thermal noise, with P_T |h|^2 / (L N0) = 1.
        let frame = random_qpsk_frame(100_000, 22);
        for ks in [0.05, 0.1] {
            for kt in [0.0, 0.05] {
                let c = cfg(60.0, 0.0, 1.0, 1.0, noise(ks, kt));
                let h = Complex64::new(1.0, 0.0);
                let mut rng = ChaCha8Rng::seed_from_u64(23);
                let rx = simulate_end_to_end(&frame, &c, h, &IqImpairmentSpec::default(), &mut rng)
                    .unwrap();
                // Empirical SNR against the scaled clean signal.
                let scale = (c.p_s_linear() * c.p_t_linear() / c.total_loss()).sqrt();
                let sig: f64 = frame.samples.iter().map(|s| (s * scale).norm_sqr()).sum();
                let err: f64 = frame
                    .samples
                    .iter()
                    .zip(&rx.samples)
                    .map(|(a, b)| (b - a * scale).norm_sqr())
                    .sum();
                let mc_db = 10.0 * (sig / err).log10();
                let cf_db = 10.0 * snr_stage2(&c, h).unwrap().log10();
                assert!(
                    (mc_db - cf_db).abs() < 0.5,
                    "ks {ks} kt {kt}: chain {mc_db:.3} dB vs closed form {cf_db:.3} dB"
                );
            }
        }
    }

    #[test]
    fn data_rate_formula() {
        assert_eq!(max_data_rate(100e9, 16).unwrap(), 800e9);
        assert_eq!(max_data_rate(0.8e6, 4).unwrap(), 3.2e6);
        assert_eq!(max_data_rate(5.0, 2).unwrap(), 10.0);
        assert!(max_data_rate(1e6, 1).is_err());
        assert!(max_data_rate(0.0, 4).is_err());
    }

    #[test]
    fn unit_conversions() {
        assert!((dbm_to_linear(0.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_linear(30.0) - 1000.0).abs() < 1e-9);
        assert!((db_to_linear(3.0) - 1.995_262_314_968_879_6).abs() < 1e-12);
    }
}
