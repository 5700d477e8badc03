//! Receiver chain: matched filtering with exact group-delay compensation,
//! blind carrier-offset estimation, blind flat-fading channel estimation
//! with zero-forcing equalization, and an optional decision-directed
//! refinement pass.
//!
//! There is no symbol-timing estimator: frames carry ground-truth timing
//! through their delay annotation, and ingested captures must declare
//! their symbol-sync offset in metadata. The channel estimate is a single
//! complex scalar per burst (flat-fading contract), even though the
//! underlying estimator family is usually described in terms of a
//! frequency response.
//!
//! Every estimator here is a deterministic function of its input.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::waveform::{IqFrame, ModulationScheme, PulseShape};

/// Minimum burst length for the blind estimators.
pub const MIN_BLIND_SYMBOLS: usize = 64;

/// Result of blind equalization.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedBurst {
    /// Equalized measured constellation, aligned with the reference.
    pub symbols_measured: Vec<Complex64>,
    /// Estimated flat-fading coefficient (finite, nonzero on success).
    pub h_hat: Complex64,
    /// Carrier offset estimate when the recovery pipeline ran one.
    pub cfo_hat_hz: Option<f64>,
}

/// Blind carrier-offset estimate with its ambiguity metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfoEstimate {
    pub cfo_hz: f64,
    /// Unambiguous range of the modulation-stripping estimator:
    /// +/- symbol_rate / (2 * constellation_order).
    pub ambiguity_bound_hz: f64,
    /// Set when the estimate lands within 10% of the bound. Offsets far
    /// beyond the bound alias back into range undetectably; that is
    /// inherent to blind M-th-power estimation, so the flag is a
    /// proximity warning, not a guarantee.
    pub ambiguous: bool,
}

/// Apply the receive half of the Nyquist pair and sample at symbol
/// instants, compensating the accumulated group delay exactly.
pub fn matched_filter_and_sample(rx: &IqFrame, shape: &PulseShape) -> Result<Vec<Complex64>> {
    shape.validate()?;
    let taps = shape.taps();
    if rx.samples.len() < taps.len() {
        return Err(Error::InsufficientData(format!(
            "frame of {} samples is shorter than the {}-tap filter",
            rx.samples.len(),
            taps.len()
        )));
    }
    let conv_len = rx.samples.len() + taps.len() - 1;
    let mut filtered = vec![Complex64::new(0.0, 0.0); conv_len];
    for (n, s) in rx.samples.iter().enumerate() {
        for (i, h) in taps.iter().enumerate() {
            filtered[n + i] += s * h;
        }
    }
    let total_delay = rx.delay_samples + (taps.len() - 1) / 2;
    let sps = shape.samples_per_symbol;
    if total_delay >= conv_len {
        return Err(Error::InsufficientData(
            "frame shorter than its declared delay".to_string(),
        ));
    }
    let n_fit = (conv_len - 1 - total_delay) / sps + 1;
    let n_sym = rx.symbol_count.map_or(n_fit, |c| c.min(n_fit));
    Ok((0..n_sym)
        .map(|k| filtered[total_delay + k * sps])
        .collect())
}

/// Blind carrier-frequency-offset estimator: raise symbols to the
/// constellation order to strip modulation, unwrap the resulting phase,
/// and fit its slope by least squares.
pub fn estimate_cfo(
    symbols: &[Complex64],
    scheme: ModulationScheme,
    symbol_rate_hz: f64,
) -> Result<CfoEstimate> {
    if symbols.len() < MIN_BLIND_SYMBOLS {
        return Err(Error::InsufficientData(format!(
            "{} symbols, need at least {MIN_BLIND_SYMBOLS}",
            symbols.len()
        )));
    }
    if !(symbol_rate_hz > 0.0) {
        return Err(Error::Parameter(format!(
            "symbol_rate_hz must be > 0, got {symbol_rate_hz}"
        )));
    }
    if symbols.iter().all(|s| s.norm_sqr() == 0.0) {
        return Err(Error::Estimation("all-zero burst".to_string()));
    }
    let m = scheme.order() as f64;
    let n = symbols.len();
    // Unwrapped phase of the modulation-stripped sequence.
    let mut phases = Vec::with_capacity(n);
    let mut prev_raw = 0.0f64;
    let mut acc = 0.0f64;
    for (k, s) in symbols.iter().enumerate() {
        let raw = s.powu(scheme.order() as u32).arg();
        if k == 0 {
            acc = raw;
        } else {
            let mut d = raw - prev_raw;
            while d > std::f64::consts::PI {
                d -= 2.0 * std::f64::consts::PI;
            }
            while d <= -std::f64::consts::PI {
                d += 2.0 * std::f64::consts::PI;
            }
            acc += d;
        }
        prev_raw = raw;
        phases.push(acc);
    }
    // Least-squares slope in rad/symbol.
    let nf = n as f64;
    let k_mean = (nf - 1.0) / 2.0;
    let p_mean = phases.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (k, p) in phases.iter().enumerate() {
        let dk = k as f64 - k_mean;
        num += dk * (p - p_mean);
        den += dk * dk;
    }
    let slope = num / den;
    let cfo_hz = slope * symbol_rate_hz / (2.0 * std::f64::consts::PI * m);
    let bound = symbol_rate_hz / (2.0 * m);
    Ok(CfoEstimate {
        cfo_hz,
        ambiguity_bound_hz: bound,
        ambiguous: cfo_hz.abs() > 0.9 * bound,
    })
}

/// Blind flat-fading estimate and zero-forcing equalization.
///
/// Amplitude comes from RMS normalization to the unit-energy
/// constellation; phase from the modulation-stripping average (the
/// constellation-order power of every point shares one phase). The
/// residual order-fold phase ambiguity is resolved against the known
/// reference sequence, legitimate because the error metrics are defined
/// reference-vs-measured.
pub fn blind_equalize(
    symbols: &[Complex64],
    scheme: ModulationScheme,
    reference: &[Complex64],
) -> Result<EqualizedBurst> {
    if symbols.len() < MIN_BLIND_SYMBOLS {
        return Err(Error::InsufficientData(format!(
            "{} symbols, need at least {MIN_BLIND_SYMBOLS}",
            symbols.len()
        )));
    }
    if reference.len() != symbols.len() {
        return Err(Error::Length(format!(
            "reference has {} symbols, burst has {}",
            reference.len(),
            symbols.len()
        )));
    }
    let energy: f64 = symbols.iter().map(|s| s.norm_sqr()).sum();
    if energy == 0.0 {
        return Err(Error::Estimation("all-zero burst".to_string()));
    }
    let amp = (energy / symbols.len() as f64).sqrt();
    // For a fourth-power constellation, x^4 = -|x|^4 for every point, so
    // the average of y^4 carries phase pi + order * arg(h).
    let m = scheme.order() as f64;
    let s_m: Complex64 = symbols.iter().map(|s| s.powu(scheme.order() as u32)).sum();
    let phase = (s_m.arg() - std::f64::consts::PI) / m;
    let h0 = Complex64::from_polar(amp, phase);

    // Resolve the order-fold ambiguity against the reference.
    let rotations = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut best_rot = rotations[0];
    let mut best_err = f64::INFINITY;
    for r in rotations {
        let err: f64 = symbols
            .iter()
            .zip(reference)
            .map(|(y, x)| (y / h0 * r - x).norm_sqr())
            .sum();
        if err < best_err {
            best_err = err;
            best_rot = r;
        }
    }
    let h_hat = h0 / best_rot;
    let equalized: Vec<Complex64> = symbols.iter().map(|y| y / h_hat).collect();
    Ok(EqualizedBurst {
        symbols_measured: equalized,
        h_hat,
        cfo_hat_hz: None,
    })
}

/// Optional second pass: re-fit the residual complex scale against hard
/// decisions (least squares), then divide it out. Minimizes the mean
/// squared error of the measured constellation; note that unlike the RMS
/// first pass it does not preserve measured power, so power-based
/// identities hold on the first-pass output, not this one.
pub fn refine_decision_directed(
    burst: &EqualizedBurst,
    scheme: ModulationScheme,
) -> Result<EqualizedBurst> {
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0f64;
    for y in &burst.symbols_measured {
        let x = scheme.hard_decision(*y);
        num += y * x.conj();
        den += x.norm_sqr();
    }
    if den == 0.0 || num.norm_sqr() == 0.0 {
        return Err(Error::Estimation(
            "decision-directed refit has no usable decisions".to_string(),
        ));
    }
    let g = num / den;
    Ok(EqualizedBurst {
        symbols_measured: burst.symbols_measured.iter().map(|y| y / g).collect(),
        h_hat: burst.h_hat * g,
        cfo_hat_hz: burst.cfo_hat_hz,
    })
}

/// Symbol-domain recovery: carrier-offset estimation, derotation, blind
/// equalization, optional decision-directed refinement.
pub fn recover_symbols(
    symbols: &[Complex64],
    scheme: ModulationScheme,
    reference: &[Complex64],
    symbol_rate_hz: f64,
    refine: bool,
) -> Result<EqualizedBurst> {
    let cfo = estimate_cfo(symbols, scheme, symbol_rate_hz)?;
    let dphi = -2.0 * std::f64::consts::PI * cfo.cfo_hz / symbol_rate_hz;
    let derotated: Vec<Complex64> = symbols
        .iter()
        .enumerate()
        .map(|(k, s)| s * Complex64::from_polar(1.0, dphi * k as f64))
        .collect();
    let mut burst = blind_equalize(&derotated, scheme, reference)?;
    burst.cfo_hat_hz = Some(cfo.cfo_hz);
    if refine {
        burst = refine_decision_directed(&burst, scheme)?;
    }
    Ok(burst)
}

/// Full burst recovery from a shaped frame: matched filter and sample,
/// then the symbol-domain pipeline.
pub fn recover_burst(
    rx: &IqFrame,
    shape: &PulseShape,
    scheme: ModulationScheme,
    reference: &[Complex64],
    refine: bool,
) -> Result<EqualizedBurst> {
    let sampled = matched_filter_and_sample(rx, shape)?;
    let symbol_rate = rx.sample_rate_hz / shape.samples_per_symbol as f64;
    recover_symbols(&sampled, scheme, reference, symbol_rate, refine)
}
