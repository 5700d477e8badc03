//! Transmit-side baseband generation: PRBS bit source, unit-energy QPSK
//! mapping, and root-raised-cosine pulse shaping.
//!
//! The shaped output carries its own group-delay annotation so downstream
//! symbol alignment is exact rather than estimated. Default shaping is
//! rolloff 0.25 at 4 samples/symbol with a 24-symbol span; the span must be
//! long enough that the TX/RX filter cascade meets the Nyquist ISI
//! criterion at symbol instants to within 1e-3, which a 10-symbol
//! truncation does not (see the tap tests for measured numbers).
//!
//! Known rate tension, surfaced rather than hidden: a 2 MS/s DAC, a
//! "roughly 0.8 MHz" occupied bandwidth and a 3.2 Mb/s QPSK throughput
//! cannot all hold for one single-carrier chain. The defaults favor the
//! throughput figure (1.6 MSym/s QPSK); the 0.8 MHz figure then matches
//! the measured one-sided 99%-power bandwidth at rolloff 0.25.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Maximal-length LFSR polynomial selector (Fibonacci form, two taps).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrbsPolynomial {
    /// x^7 + x^6 + 1
    Prbs7,
    /// x^9 + x^5 + 1
    Prbs9,
    /// x^15 + x^14 + 1
    Prbs15,
    /// x^23 + x^18 + 1
    Prbs23,
    /// x^31 + x^28 + 1
    Prbs31,
}

impl PrbsPolynomial {
    /// Register width in bits.
    pub fn order(self) -> u32 {
        match self {
            PrbsPolynomial::Prbs7 => 7,
            PrbsPolynomial::Prbs9 => 9,
            PrbsPolynomial::Prbs15 => 15,
            PrbsPolynomial::Prbs23 => 23,
            PrbsPolynomial::Prbs31 => 31,
        }
    }

    /// Feedback tap exponents (the implied +1 term is the feedback input).
    fn taps(self) -> (u32, u32) {
        match self {
            PrbsPolynomial::Prbs7 => (7, 6),
            PrbsPolynomial::Prbs9 => (9, 5),
            PrbsPolynomial::Prbs15 => (15, 14),
            PrbsPolynomial::Prbs23 => (23, 18),
            PrbsPolynomial::Prbs31 => (31, 28),
        }
    }

    /// Sequence period 2^order - 1.
    pub fn period(self) -> u64 {
        (1u64 << self.order()) - 1
    }
}

/// Deterministic pseudo-random bit source.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct BitSource {
    pub generator: PrbsPolynomial,
    /// Initial register state; must be nonzero and fit in the register.
    pub seed: u32,
    pub length_bits: usize,
}

impl Default for BitSource {
    fn default() -> Self {
        BitSource {
            generator: PrbsPolynomial::Prbs15,
            seed: 0x7FFF,
            length_bits: 10_000,
        }
    }
}

/// Generate `length_bits` bits from the LFSR. Output bit is the register
/// MSB before each shift; feedback is the XOR of the two tap bits.
pub fn generate_bits(src: &BitSource) -> Result<Vec<u8>> {
    let order = src.generator.order();
    let mask = (1u32 << order) - 1;
    if src.seed == 0 {
        return Err(Error::InvalidSeed(
            "all-zero LFSR state is absorbing".to_string(),
        ));
    }
    if src.seed & !mask != 0 {
        return Err(Error::InvalidSeed(format!(
            "seed {:#x} does not fit a {order}-bit register",
            src.seed
        )));
    }
    if src.length_bits as u64 >= src.generator.period() {
        return Err(Error::Parameter(format!(
            "length_bits {} must be below the PRBS period {}",
            src.length_bits,
            src.generator.period()
        )));
    }
    let (t1, t2) = src.generator.taps();
    let mut state = src.seed;
    let mut bits = Vec::with_capacity(src.length_bits);
    for _ in 0..src.length_bits {
        let out = (state >> (order - 1)) & 1;
        let fb = ((state >> (t1 - 1)) ^ (state >> (t2 - 1))) & 1;
        state = ((state << 1) | fb) & mask;
        bits.push(out as u8);
    }
    Ok(bits)
}

/// Symbol constellation; only QPSK is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModulationScheme {
    Qpsk,
}

impl ModulationScheme {
    pub fn order(self) -> usize {
        match self {
            ModulationScheme::Qpsk => 4,
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            ModulationScheme::Qpsk => 2,
        }
    }

    /// Constellation points in bit-pattern order 00, 01, 11, 10.
    /// Gray-coded: neighbors on the circle differ in one bit. All points
    /// have unit energy, so mean symbol energy is exactly 1.
    pub fn constellation(self) -> [Complex64; 4] {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        [
            Complex64::new(a, a),
            Complex64::new(-a, a),
            Complex64::new(-a, -a),
            Complex64::new(a, -a),
        ]
    }

    /// Map one bit group (MSB first) to its constellation point.
    fn map_group(self, bits: &[u8]) -> Complex64 {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        // Per-axis Gray mapping: first bit selects the I sign, second the
        // Q sign, with 0 mapping to the positive half-axis.
        let i = if bits[0] == 0 { a } else { -a };
        let q = if bits[1] == 0 { a } else { -a };
        Complex64::new(i, q)
    }

    /// Nearest constellation point (hard decision).
    pub fn hard_decision(self, y: Complex64) -> Complex64 {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        Complex64::new(
            if y.re >= 0.0 { a } else { -a },
            if y.im >= 0.0 { a } else { -a },
        )
    }
}

/// Map a bit sequence to constellation symbols.
pub fn map_symbols(bits: &[u8], scheme: ModulationScheme) -> Result<Vec<Complex64>> {
    let k = scheme.bits_per_symbol();
    if bits.len() % k != 0 {
        return Err(Error::Length(format!(
            "bit count {} is not divisible by {k} bits/symbol",
            bits.len()
        )));
    }
    Ok(bits.chunks_exact(k).map(|g| scheme.map_group(g)).collect())
}

/// Root-raised-cosine pulse shaping parameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseShape {
    /// Excess-bandwidth factor, in (0, 1].
    pub rolloff: f64,
    /// Total filter support in symbols (even; taps span +/- span/2 symbols).
    pub span_symbols: usize,
    /// Oversampling factor, >= 2.
    pub samples_per_symbol: usize,
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape {
            rolloff: 0.25,
            span_symbols: 24,
            samples_per_symbol: 4,
        }
    }
}

impl PulseShape {
    pub fn validate(&self) -> Result<()> {
        if !(self.rolloff > 0.0 && self.rolloff <= 1.0) {
            return Err(Error::Parameter(format!(
                "rolloff must be in (0, 1], got {}",
                self.rolloff
            )));
        }
        if self.span_symbols < 2 || self.span_symbols % 2 != 0 {
            return Err(Error::Parameter(format!(
                "span_symbols must be even and >= 2, got {}",
                self.span_symbols
            )));
        }
        if self.samples_per_symbol < 2 {
            return Err(Error::Parameter(format!(
                "samples_per_symbol must be >= 2, got {}",
                self.samples_per_symbol
            )));
        }
        Ok(())
    }

    /// Filter group delay in samples: (tap count - 1) / 2.
    pub fn group_delay_samples(&self) -> usize {
        self.span_symbols * self.samples_per_symbol / 2
    }

    /// Unit-energy RRC taps, odd length span*sps + 1, symmetric.
    pub fn taps(&self) -> Vec<f64> {
        let sps = self.samples_per_symbol as f64;
        let n = self.span_symbols * self.samples_per_symbol + 1;
        let mid = (n - 1) / 2;
        let mut taps = Vec::with_capacity(n);
        for i in 0..n {
            let t = (i as f64 - mid as f64) / sps;
            taps.push(rrc_impulse(t, self.rolloff));
        }
        let energy: f64 = taps.iter().map(|h| h * h).sum();
        let scale = energy.sqrt().recip();
        for h in &mut taps {
            *h *= scale;
        }
        taps
    }
}

/// Unnormalized RRC impulse response at t symbols, with the two removable
/// singularities (t = 0 and |t| = 1/(4*rolloff)) evaluated by their limits.
fn rrc_impulse(t: f64, rolloff: f64) -> f64 {
    use std::f64::consts::PI;
    let b = rolloff;
    if t == 0.0 {
        return 1.0 + b * (4.0 / PI - 1.0);
    }
    let sing = 1.0 / (4.0 * b);
    if (t.abs() - sing).abs() < 1e-9 {
        let x = PI / (4.0 * b);
        return (b / 2.0f64.sqrt())
            * ((1.0 + 2.0 / PI) * x.sin() + (1.0 - 2.0 / PI) * x.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

/// A timed sequence of complex baseband samples, the universal signal
/// currency of the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    pub samples: Vec<Complex64>,
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub origin_time_s: f64,
    /// Accumulated filter group delay, in samples, from generation to now.
    /// Symbol k of the underlying burst sits at index delay_samples +
    /// k * samples_per_symbol. Not persisted by the file format.
    pub delay_samples: usize,
    /// Number of modulation symbols the frame encodes, when known.
    pub symbol_count: Option<usize>,
}

impl IqFrame {
    pub fn new(samples: Vec<Complex64>, sample_rate_hz: f64, center_freq_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Parameter("frame must contain samples".to_string()));
        }
        if !(sample_rate_hz > 0.0) {
            return Err(Error::Parameter(format!(
                "sample_rate_hz must be > 0, got {sample_rate_hz}"
            )));
        }
        Ok(IqFrame {
            samples,
            sample_rate_hz,
            center_freq_hz,
            origin_time_s: 0.0,
            delay_samples: 0,
            symbol_count: None,
        })
    }

    /// Wrap a symbol-spaced burst (one sample per symbol, no shaping).
    pub fn from_symbols(
        symbols: Vec<Complex64>,
        symbol_rate_hz: f64,
        center_freq_hz: f64,
    ) -> Result<Self> {
        let n = symbols.len();
        let mut frame = IqFrame::new(symbols, symbol_rate_hz, center_freq_hz)?;
        frame.symbol_count = Some(n);
        Ok(frame)
    }

    /// Mean sample power.
    pub fn power(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }
}

/// Upsample and RRC-filter a symbol sequence.
///
/// Output length is symbols * sps plus the span * sps filter transient;
/// `delay_samples` records the filter group delay so receivers align
/// exactly. Sample rate is symbol_rate * samples_per_symbol.
pub fn pulse_shape(
    symbols: &[Complex64],
    shape: &PulseShape,
    symbol_rate_hz: f64,
    center_freq_hz: f64,
) -> Result<IqFrame> {
    shape.validate()?;
    if symbols.is_empty() {
        return Err(Error::Parameter("no symbols to shape".to_string()));
    }
    if !(symbol_rate_hz > 0.0) {
        return Err(Error::Parameter(format!(
            "symbol_rate_hz must be > 0, got {symbol_rate_hz}"
        )));
    }
    let sps = shape.samples_per_symbol;
    let taps = shape.taps();
    let out_len = symbols.len() * sps + taps.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); out_len];
    for (k, s) in symbols.iter().enumerate() {
        let base = k * sps;
        for (i, h) in taps.iter().enumerate() {
            out[base + i] += s * h;
        }
    }
    let mut frame = IqFrame::new(out, symbol_rate_hz * sps as f64, center_freq_hz)?;
    frame.delay_samples = shape.group_delay_samples();
    frame.symbol_count = Some(symbols.len());
    Ok(frame)
}
