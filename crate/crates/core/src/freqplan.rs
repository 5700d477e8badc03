//! Frequency-extension planning for the multiplied-LO chain: reachable
//! operating frequencies g = M * f_lo +/- f_if, the frequency step sizes
//! of the extended tuning grid (unfiltered and image-rejected), and an
//! exhaustive plan search for a target carrier.
//!
//! All frequencies are kept in Hz as f64. Instrument grids are multiples
//! of coarse steps (0.1 GHz and similar), so every grid value, product
//! and sum below 2^53 Hz is exact; the search therefore reports exact
//! zero residuals where the grid attains the target.

use crate::error::{Error, Result};

/// Multiplier-chain configuration and its step deltas.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExtensionConfig {
    /// Harmonic multiplication factor M, >= 1.
    pub m: u32,
    /// Multiplier step delta_M, >= 0.
    pub delta_m: u32,
    /// LO frequency, Hz.
    pub f_lo_hz: f64,
    /// LO step, Hz, >= 0.
    pub delta_f_lo_hz: f64,
    /// IF carrier, Hz.
    pub f_if_hz: f64,
    /// IF step, Hz, >= 0.
    pub delta_f_if_hz: f64,
    /// Optional broadband constraint epsilon = delta_f_lo / f_lo. When
    /// present it must agree with the explicit step to 1e-9 relative.
    pub epsilon: Option<f64>,
}

impl ExtensionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Parameter("multiplier M must be >= 1".to_string()));
        }
        if !(self.f_lo_hz > 0.0) {
            return Err(Error::Parameter(format!(
                "f_lo_hz must be > 0, got {}",
                self.f_lo_hz
            )));
        }
        if !(self.f_if_hz > 0.0) {
            return Err(Error::Parameter(format!(
                "f_if_hz must be > 0, got {}",
                self.f_if_hz
            )));
        }
        if !(self.delta_f_lo_hz >= 0.0) || !(self.delta_f_if_hz >= 0.0) {
            return Err(Error::Parameter("frequency steps must be >= 0".to_string()));
        }
        if let Some(eps) = self.epsilon {
            if !(eps >= 0.0) {
                return Err(Error::Parameter(format!("epsilon must be >= 0, got {eps}")));
            }
            let implied = eps * self.f_lo_hz;
            let scale = implied.abs().max(self.delta_f_lo_hz.abs());
            // scale = 0 means both the step and the implied step are zero,
            // which is trivially consistent.
            if scale > 0.0 && (implied - self.delta_f_lo_hz).abs() > 1e-9 * scale {
                return Err(Error::Parameter(format!(
                    "epsilon {} implies delta_f_lo {} Hz but {} Hz is configured",
                    eps, implied, self.delta_f_lo_hz
                )));
            }
        }
        Ok(())
    }

    /// Broadband constraint, derived from the step when not stored.
    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(self.delta_f_lo_hz / self.f_lo_hz)
    }
}

/// Both sideband carriers (lower, upper) = (M f_lo - f_if, M f_lo + f_if).
pub fn operating_frequencies(cfg: &ExtensionConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let base = cfg.m as f64 * cfg.f_lo_hz;
    Ok((base - cfg.f_if_hz, base + cfg.f_if_hz))
}

/// Tuning step of the unfiltered (double-sideband) chain, both branches
/// of the +/- IF step:
/// (M df_lo + dM df_lo + df_if, M df_lo + dM df_lo - df_if).
pub fn step_size_unfiltered(cfg: &ExtensionConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let common = (cfg.m + cfg.delta_m) as f64 * cfg.delta_f_lo_hz;
    Ok((common + cfg.delta_f_if_hz, common - cfg.delta_f_if_hz))
}

/// Tuning step after ideal image-rejection filtering, piecewise in the
/// broadband constraint: 0 when epsilon = 0, else df_lo * (M + dM).
pub fn step_size_filtered(cfg: &ExtensionConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.epsilon() == 0.0 {
        return Ok(0.0);
    }
    Ok(cfg.delta_f_lo_hz * (cfg.m + cfg.delta_m) as f64)
}

/// Which mixing product a plan uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sideband {
    Lower,
    Upper,
}

/// Inclusive frequency grid with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridRange {
    pub min_hz: f64,
    pub max_hz: f64,
    pub step_hz: f64,
}

impl GridRange {
    fn count(&self) -> Result<usize> {
        if !(self.step_hz > 0.0) {
            return Err(Error::Parameter(format!(
                "grid step must be > 0, got {}",
                self.step_hz
            )));
        }
        if self.max_hz < self.min_hz {
            return Err(Error::NoPlan(format!(
                "empty grid: max {} Hz below min {} Hz",
                self.max_hz, self.min_hz
            )));
        }
        Ok(((self.max_hz - self.min_hz) / self.step_hz + 1e-9).floor() as usize + 1)
    }

    fn point(&self, i: usize) -> f64 {
        self.min_hz + i as f64 * self.step_hz
    }
}

/// One solution of the plan search.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrequencyPlan {
    pub m: u32,
    pub f_lo_hz: f64,
    pub f_if_hz: f64,
    pub sideband: Sideband,
    pub achieved_hz: f64,
    /// Signed achieved - target.
    pub residual_hz: f64,
}

/// Exhaustively search the (M, f_lo, f_if, sideband) grid for the carrier
/// closest to the target. Ties in |residual| resolve to the smaller M,
/// then the lower f_lo, then the lower f_if, then the upper sideband.
pub fn plan_for_target(
    target_hz: f64,
    m_range: std::ops::RangeInclusive<u32>,
    f_lo: &GridRange,
    f_if: &GridRange,
) -> Result<FrequencyPlan> {
    if !(target_hz > 0.0) {
        return Err(Error::Parameter(format!(
            "target must be > 0 Hz, got {target_hz}"
        )));
    }
    if m_range.is_empty() {
        return Err(Error::NoPlan("empty multiplier range".to_string()));
    }
    let n_lo = f_lo.count()?;
    let n_if = f_if.count()?;
    let mut best: Option<FrequencyPlan> = None;
    for m in m_range {
        if m < 1 {
            return Err(Error::Parameter("multiplier M must be >= 1".to_string()));
        }
        for i in 0..n_lo {
            let lo = f_lo.point(i);
            let base = m as f64 * lo;
            for j in 0..n_if {
                let fi = f_if.point(j);
                // Upper first so the tie-break prefers it at equal error.
                for (sideband, achieved) in
                    [(Sideband::Upper, base + fi), (Sideband::Lower, base - fi)]
                {
                    let residual = achieved - target_hz;
                    let better = match &best {
                        None => true,
                        Some(b) => residual.abs() < b.residual_hz.abs(),
                    };
                    if better {
                        best = Some(FrequencyPlan {
                            m,
                            f_lo_hz: lo,
                            f_if_hz: fi,
                            sideband,
                            achieved_hz: achieved,
                            residual_hz: residual,
                        });
                    }
                }
            }
        }
    }
    best.ok_or_else(|| Error::NoPlan("search grid contained no points".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base_cfg() -> ExtensionConfig {
        ExtensionConfig {
            m: 6,
            delta_m: 0,
            f_lo_hz: 30e9,
            delta_f_lo_hz: 0.0,
            f_if_hz: 2.4e9,
            delta_f_if_hz: 0.0,
            epsilon: None,
        }
    }

    #[test]
    fn sidebands_of_reference_chain() {
        // 6 x 30 GHz +/- 2.4 GHz, exact in f64.
        let (lo, hi) = operating_frequencies(&base_cfg()).unwrap();
        assert_eq!(lo, 177.6e9);
        assert_eq!(hi, 182.4e9);

        let degenerate = ExtensionConfig {
            f_if_hz: 1.0,
            ..base_cfg()
        };
        let (lo, hi) = operating_frequencies(&degenerate).unwrap();
        assert_eq!(hi - lo, 2.0, "sidebands separated by twice the IF");

        let identity = ExtensionConfig {
            m: 1,
            f_lo_hz: 5e9,
            f_if_hz: 1e9,
            ..base_cfg()
        };
        let (lo, hi) = operating_frequencies(&identity).unwrap();
        assert_eq!((lo, hi), (4e9, 6e9));
    }

    #[test]
    fn unfiltered_step_branches() {
        let cfg = ExtensionConfig {
            m: 6,
            delta_m: 1,
            delta_f_lo_hz: 1e6,
            delta_f_if_hz: 1e4,
            ..base_cfg()
        };
        let (plus, minus) = step_size_unfiltered(&cfg).unwrap();
        assert_eq!(plus, 7.01e6);
        assert_eq!(minus, 6.99e6);

        let silent = base_cfg();
        assert_eq!(step_size_unfiltered(&silent).unwrap(), (0.0, 0.0));

        // IF step zero collapses both branches onto the filtered value.
        let collapse = ExtensionConfig {
            delta_f_if_hz: 0.0,
            ..cfg
        };
        let (p, m) = step_size_unfiltered(&collapse).unwrap();
        let filtered = step_size_filtered(&collapse).unwrap();
        assert_eq!(p, m);
        assert_eq!(p, filtered);
    }

    #[test]
    fn filtered_step_piecewise() {
        assert_eq!(step_size_filtered(&base_cfg()).unwrap(), 0.0);
        let cfg = ExtensionConfig {
            m: 6,
            delta_m: 1,
            delta_f_lo_hz: 1e6,
            ..base_cfg()
        };
        assert_eq!(step_size_filtered(&cfg).unwrap(), 7e6);
        let no_dm = ExtensionConfig { delta_m: 0, ..cfg };
        assert_eq!(step_size_filtered(&no_dm).unwrap(), 6e6);
    }

    #[test]
    fn epsilon_consistency_enforced() {
        let consistent = ExtensionConfig {
            delta_f_lo_hz: 3e7,
            epsilon: Some(1e-3),
            ..base_cfg()
        };
        assert!(consistent.validate().is_ok());
        let inconsistent = ExtensionConfig {
            delta_f_lo_hz: 1e6,
            epsilon: Some(1e-3),
            ..base_cfg()
        };
        assert!(inconsistent.validate().is_err());
        // Continuity: shrinking the step drives the filtered value to 0,
        // matching the epsilon = 0 branch.
        let mut prev = f64::INFINITY;
        for exp in 1..8 {
            let cfg = ExtensionConfig {
                delta_f_lo_hz: 10f64.powi(-exp) * 1e6,
                ..base_cfg()
            };
            let s = step_size_filtered(&cfg).unwrap();
            assert!(s < prev && s > 0.0);
            prev = s;
        }
    }

    #[test]
    fn step_arithmetic_matches_integer_oracle() {
        // Steps drawn on a kHz lattice stay exact in f64, so the f64 path
        // must agree bit-for-bit with u64 kHz arithmetic.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = rng.gen_range(1..=12u32);
            let dm = rng.gen_range(0..=3u32);
            let dfl_khz = rng.gen_range(0..=1000u64);
            let dfi_khz = rng.gen_range(0..=100u64);
            let cfg = ExtensionConfig {
                m,
                delta_m: dm,
                f_lo_hz: 30e9,
                delta_f_lo_hz: dfl_khz as f64 * 1e3,
                f_if_hz: 2.4e9,
                delta_f_if_hz: dfi_khz as f64 * 1e3,
                epsilon: None,
            };
            let common_khz = (m + dm) as u64 * dfl_khz;
            let (plus, minus) = step_size_unfiltered(&cfg).unwrap();
            assert_eq!(plus, (common_khz + dfi_khz) as f64 * 1e3);
            assert_eq!(minus, (common_khz as i64 - dfi_khz as i64) as f64 * 1e3);
            let filtered = step_size_filtered(&cfg).unwrap();
            if dfl_khz == 0 {
                assert_eq!(filtered, 0.0);
            } else {
                assert_eq!(filtered, common_khz as f64 * 1e3);
            }
            // The filtered step never exceeds the larger unfiltered branch.
            assert!(filtered <= plus.max(minus));
        }
    }

    fn reference_grids() -> (GridRange, GridRange) {
        (
            GridRange {
                min_hz: 20e9,
                max_hz: 40e9,
                step_hz: 0.1e9,
            },
            GridRange {
                min_hz: 2e9,
                max_hz: 3e9,
                step_hz: 0.1e9,
            },
        )
    }

    #[test]
    fn plan_reaches_target_exactly() {
        let (f_lo, f_if) = reference_grids();
        let plan = plan_for_target(180e9, 4..=8, &f_lo, &f_if).unwrap();
        // Canonical winner under the tie-break order: the smallest M able
        // to land exactly, then the lowest LO that does so.
        assert_eq!(plan.residual_hz, 0.0);
        assert_eq!(plan.achieved_hz, 180e9);
        assert_eq!(plan.m, 5);
        assert_eq!(plan.f_lo_hz, 35.4e9);
        assert_eq!(plan.f_if_hz, 3e9);
        assert_eq!(plan.sideband, Sideband::Upper);
    }

    #[test]
    fn plan_trivial_grids() {
        let point = GridRange {
            min_hz: 30e9,
            max_hz: 30e9,
            step_hz: 0.1e9,
        };
        let fif = GridRange {
            min_hz: 2.4e9,
            max_hz: 2.4e9,
            step_hz: 0.1e9,
        };
        // On-grid target hits zero residual.
        let plan = plan_for_target(182.4e9, 6..=6, &point, &fif).unwrap();
        assert_eq!(plan.residual_hz, 0.0);
        assert_eq!(plan.sideband, Sideband::Upper);
        // Off-grid target reports the signed miss of the best sideband.
        let plan = plan_for_target(183e9, 6..=6, &point, &fif).unwrap();
        assert_eq!(plan.residual_hz, -0.6e9);
        // Inverted grid is an empty-plan error.
        let empty = GridRange {
            min_hz: 40e9,
            max_hz: 20e9,
            step_hz: 0.1e9,
        };
        assert!(matches!(
            plan_for_target(180e9, 4..=8, &empty, &fif),
            Err(Error::NoPlan(_))
        ));
    }

    #[test]
    fn plan_covers_reachable_targets() {
        // The composite lattice has 0.1 GHz pitch across the probed band,
        // so any target inside it lands within half a pitch.
        let (f_lo, f_if) = reference_grids();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let target = rng.gen_range(120e9..199e9);
            let plan = plan_for_target(target, 4..=8, &f_lo, &f_if).unwrap();
            assert!(
                plan.residual_hz.abs() <= 0.05e9 + 1.0,
                "target {target:.3e}: residual {:.3e}",
                plan.residual_hz
            );
            let (plus, _) = step_size_unfiltered(&ExtensionConfig {
                m: plan.m,
                delta_m: 0,
                f_lo_hz: plan.f_lo_hz,
                delta_f_lo_hz: f_lo.step_hz,
                f_if_hz: plan.f_if_hz,
                delta_f_if_hz: f_if.step_hz,
                epsilon: None,
            })
            .unwrap();
            assert!(plan.residual_hz.abs() <= plus / 2.0);
        }
    }
}
