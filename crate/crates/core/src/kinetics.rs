//! Semi-empirical thin-layer drying kinetics for the reference hot-air /
//! ultrasound dryer.
//!
//! Drying follows a first-order (Lewis) law toward a temperature-dependent
//! equilibrium: the dry-basis moisture decays as `e^{-K(T) t}` from a fitted
//! master curve that starts at `x0_dry`. Both the rate `K` and the
//! equilibrium moisture `M_eq` are quadratic polynomials in the absolute
//! temperature, one pair per technology. A stage starting from an arbitrary
//! moisture is mapped onto the master curve through the equivalent-time
//! construction, which makes staged simulation consistent with the single
//! fitted curve (and makes stage composition exactly additive in time).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Offset between the Celsius and kelvin scales.
pub const CELSIUS_OFFSET: f64 = 273.15;

/// Dry-basis distance to equilibrium below which a stage is treated as
/// already equilibrated (the transition becomes the identity instead of
/// failing in the log domain).
pub const EQUILIBRIUM_BAND: f64 = 1e-12;

pub fn kelvin_from_celsius(c: f64) -> f64 {
    c + CELSIUS_OFFSET
}

pub fn celsius_from_kelvin(k: f64) -> f64 {
    k - CELSIUS_OFFSET
}

/// Errors from the kinetics layer.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum KineticsError {
    /// The rate polynomial evaluated to a non-positive value; the
    /// coefficients (or the sign-correction flag) are mis-set.
    #[error("non-positive drying rate {value:.6e}/min for {tech} at {temp_k:.2} K")]
    NonPositiveRate {
        tech: Technology,
        temp_k: f64,
        value: f64,
    },
    /// The equilibrium polynomial left the physically meaningful range.
    #[error("equilibrium moisture {value:.6e} for {tech} at {temp_k:.2} K outside (0, {x0_dry})")]
    InvalidEquilibrium {
        tech: Technology,
        temp_k: f64,
        value: f64,
        x0_dry: f64,
    },
    /// The sample is already at or below the stage's equilibrium moisture,
    /// so no drying is possible and the equivalent time is undefined.
    #[error(
        "sample dry-basis moisture {dry_basis:.6e} at or below equilibrium {equilibrium:.6e} \
         for {tech} at {temp_k:.2} K"
    )]
    BelowEquilibrium {
        tech: Technology,
        temp_k: f64,
        dry_basis: f64,
        equilibrium: f64,
    },
    /// A moisture fraction outside its admissible range.
    #[error("invalid {basis}-basis moisture {value}")]
    InvalidMoisture { basis: &'static str, value: f64 },
}

/// Drying technology available in a stage.
///
/// The integer encodings (0 and 1) are part of the path encoding contract.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Technology {
    /// Pure hot-air drying.
    HotAir = 0,
    /// Combined hot-air and contact-ultrasound drying.
    HotAirUltrasound = 1,
}

impl Technology {
    pub const ALL: [Technology; 2] = [Technology::HotAir, Technology::HotAirUltrasound];

    /// Integer encoding used in path encodings and cost selectors.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        match index {
            0 => Some(Technology::HotAir),
            1 => Some(Technology::HotAirUltrasound),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Technology::HotAir => "HA",
            Technology::HotAirUltrasound => "HAUS",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label.trim().to_ascii_uppercase().as_str() {
            "HA" => Some(Technology::HotAir),
            "HAUS" | "HA/US" => Some(Technology::HotAirUltrasound),
            _ => None,
        }
    }
}

impl std::fmt::Display for Technology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Technology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Technology::from_label(s).ok_or_else(|| format!("unknown technology {s:?}"))
    }
}

/// Wet-basis moisture fraction of the sample, the single dynamic state.
///
/// Wet basis is mass of water over total mass, so it lives in `[0, 1)`; the
/// dry-basis counterpart `x / (1 - x)` is finite and non-negative there.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MoistureState {
    wet_basis: f64,
}

impl MoistureState {
    pub fn from_wet_basis(wet_basis: f64) -> Result<Self, KineticsError> {
        if !(0.0..1.0).contains(&wet_basis) || !wet_basis.is_finite() {
            return Err(KineticsError::InvalidMoisture {
                basis: "wet",
                value: wet_basis,
            });
        }
        Ok(MoistureState { wet_basis })
    }

    pub fn from_dry_basis(dry_basis: f64) -> Result<Self, KineticsError> {
        if dry_basis < 0.0 || !dry_basis.is_finite() {
            return Err(KineticsError::InvalidMoisture {
                basis: "dry",
                value: dry_basis,
            });
        }
        Ok(MoistureState {
            wet_basis: dry_basis / (1.0 + dry_basis),
        })
    }

    /// Mass of water over total sample mass.
    pub fn wet_basis(self) -> f64 {
        self.wet_basis
    }

    /// Mass of water over dry-solid mass.
    pub fn dry_basis(self) -> f64 {
        self.wet_basis / (1.0 - self.wet_basis)
    }
}

/// Control parameters of one stage: residence time in minutes and air
/// temperature in kelvin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageParams {
    pub time_min: f64,
    pub temp_k: f64,
}

impl StageParams {
    pub fn new(time_min: f64, temp_k: f64) -> Self {
        StageParams { time_min, temp_k }
    }
}

/// Fitted constants of the drying model.
///
/// `k*_coeffs` are quadratic coefficients `(a, b, c)` of the rate polynomial
/// `(a T^2 + b T + c) / 1000` per technology; `m*_coeffs` likewise for the
/// equilibrium dry-basis moisture with divisor 10000. `T` is in kelvin.
/// `x0_dry` is the dry-basis moisture at the start of the fitted master
/// curve. `negate_k0` flips the sign of the hot-air rate polynomial: the
/// fitted coefficients evaluate negative over the whole operating range,
/// which would make moisture diverge, so the sign flip is applied by default
/// and is reversible through configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticsConstants {
    pub x0_dry: f64,
    pub k0_coeffs: [f64; 3],
    pub k1_coeffs: [f64; 3],
    pub m0_coeffs: [f64; 3],
    pub m1_coeffs: [f64; 3],
    pub negate_k0: bool,
}

impl Default for KineticsConstants {
    fn default() -> Self {
        KineticsConstants {
            x0_dry: 3.16,
            k0_coeffs: [0.074493, -45.5058, 6839.9],
            k1_coeffs: [-0.05811, 39.962, -6680.1],
            m0_coeffs: [0.2479, -172.09, 30133.0],
            m1_coeffs: [0.1468, -107.27, 19720.0],
            negate_k0: true,
        }
    }
}

impl KineticsConstants {
    /// Checks that the effective rate is positive and the equilibrium
    /// moisture lies in `(0, x0_dry)` for both technologies on a dense
    /// (0.1 K) grid over the operating range. A violation is a
    /// configuration error.
    pub fn validate(&self, temp_range: (f64, f64)) -> Result<(), KineticsError> {
        let (lo, hi) = temp_range;
        let steps = ((hi - lo) / 0.1).ceil() as usize;
        for i in 0..=steps {
            let t = (lo + i as f64 * 0.1).min(hi);
            for tech in Technology::ALL {
                rate_constant(tech, t, self)?;
                equilibrium_moisture(tech, t, self)?;
            }
        }
        Ok(())
    }

    fn rate_coeffs(&self, tech: Technology) -> [f64; 3] {
        match tech {
            Technology::HotAir => self.k0_coeffs,
            Technology::HotAirUltrasound => self.k1_coeffs,
        }
    }

    fn equilibrium_coeffs(&self, tech: Technology) -> [f64; 3] {
        match tech {
            Technology::HotAir => self.m0_coeffs,
            Technology::HotAirUltrasound => self.m1_coeffs,
        }
    }

    fn rate_sign(&self, tech: Technology) -> f64 {
        if tech == Technology::HotAir && self.negate_k0 {
            -1.0
        } else {
            1.0
        }
    }
}

fn horner(coeffs: [f64; 3], x: f64) -> f64 {
    (coeffs[0] * x + coeffs[1]) * x + coeffs[2]
}

fn horner_derivative(coeffs: [f64; 3], x: f64) -> f64 {
    2.0 * coeffs[0] * x + coeffs[1]
}

/// Lewis drying-rate constant for `tech` at `temp_k`, per minute.
pub fn rate_constant(
    tech: Technology,
    temp_k: f64,
    c: &KineticsConstants,
) -> Result<f64, KineticsError> {
    let value = c.rate_sign(tech) * horner(c.rate_coeffs(tech), temp_k) / 1000.0;
    if value <= 0.0 {
        return Err(KineticsError::NonPositiveRate {
            tech,
            temp_k,
            value,
        });
    }
    Ok(value)
}

/// Temperature derivative `dK/dT` of the rate constant, per minute per
/// kelvin. No positivity check; used by analytic sensitivities.
pub fn rate_constant_derivative(tech: Technology, temp_k: f64, c: &KineticsConstants) -> f64 {
    c.rate_sign(tech) * horner_derivative(c.rate_coeffs(tech), temp_k) / 1000.0
}

/// Equilibrium dry-basis moisture for `tech` at `temp_k`.
pub fn equilibrium_moisture(
    tech: Technology,
    temp_k: f64,
    c: &KineticsConstants,
) -> Result<f64, KineticsError> {
    let value = horner(c.equilibrium_coeffs(tech), temp_k) / 10000.0;
    if value <= 0.0 || value >= c.x0_dry {
        return Err(KineticsError::InvalidEquilibrium {
            tech,
            temp_k,
            value,
            x0_dry: c.x0_dry,
        });
    }
    Ok(value)
}

/// Temperature derivative `dM_eq/dT` of the equilibrium moisture.
pub fn equilibrium_moisture_derivative(
    tech: Technology,
    temp_k: f64,
    c: &KineticsConstants,
) -> f64 {
    horner_derivative(c.equilibrium_coeffs(tech), temp_k) / 10000.0
}

/// Equivalent time: the elapsed time on the master drying curve that
/// corresponds to the sample's current moisture, plus the stage's residence
/// time. Defined for samples wetter than the stage's equilibrium; callers
/// are expected to keep the dry-basis moisture at or below `x0_dry`, where
/// the result is `>= time_min`.
pub fn equivalent_time(
    tech: Technology,
    temp_k: f64,
    x: MoistureState,
    time_min: f64,
    c: &KineticsConstants,
) -> Result<f64, KineticsError> {
    let rate = rate_constant(tech, temp_k, c)?;
    let m_eq = equilibrium_moisture(tech, temp_k, c)?;
    let dry = x.dry_basis();
    if dry <= m_eq {
        return Err(KineticsError::BelowEquilibrium {
            tech,
            temp_k,
            dry_basis: dry,
            equilibrium: m_eq,
        });
    }
    Ok(((c.x0_dry - m_eq) / (dry - m_eq)).ln() / rate + time_min)
}

/// One-stage moisture transition: place the sample on the master curve via
/// the equivalent time, advance by the residence time, and convert the
/// resulting dry-basis moisture back to wet basis.
///
/// A sample within [`EQUILIBRIUM_BAND`] of the stage's equilibrium is
/// returned unchanged; strictly below it the transition is undefined and
/// errors.
pub fn step(
    tech: Technology,
    x: MoistureState,
    p: StageParams,
    c: &KineticsConstants,
) -> Result<MoistureState, KineticsError> {
    let m_eq = equilibrium_moisture(tech, p.temp_k, c)?;
    let gap = x.dry_basis() - m_eq;
    if gap <= EQUILIBRIUM_BAND {
        if gap < -EQUILIBRIUM_BAND {
            return Err(KineticsError::BelowEquilibrium {
                tech,
                temp_k: p.temp_k,
                dry_basis: x.dry_basis(),
                equilibrium: m_eq,
            });
        }
        return Ok(x);
    }
    let rate = rate_constant(tech, p.temp_k, c)?;
    let t_star = equivalent_time(tech, p.temp_k, x, p.time_min, c)?;
    let dry_next = (-rate * t_star).exp() * (c.x0_dry - m_eq) + m_eq;
    Ok(MoistureState {
        wet_basis: dry_next / (1.0 + dry_next),
    })
}

/// Totalized transition used inside optimizers: identical to [`step`] above
/// the equilibrium band, the identity at or below it (a stage cannot dry the
/// sample below its own equilibrium; energy is still spent). Keeps every
/// path cost finite on the whole parameter box.
pub fn step_clamped(
    tech: Technology,
    x: MoistureState,
    p: StageParams,
    c: &KineticsConstants,
) -> MoistureState {
    match step(tech, x, p, c) {
        Ok(next) => next,
        Err(_) => x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const T50: f64 = 323.15;
    const OPERATING: (f64, f64) = (303.15, 343.15);

    fn kc() -> KineticsConstants {
        KineticsConstants::default()
    }

    // Frozen from a high-precision evaluation of the fitted polynomials.
    #[test]
    fn rate_constant_matches_fitted_polynomials() {
        let c = kc();
        let k1_50 = rate_constant(Technology::HotAirUltrasound, T50, &c).unwrap();
        assert_abs_diff_eq!(k1_50, 0.165429943525, epsilon = 1e-12);
        let k1_25 = rate_constant(Technology::HotAirUltrasound, 298.15, &c).unwrap();
        assert_abs_diff_eq!(k1_25, 0.068973518525, epsilon = 1e-12);
        let k0_50 = rate_constant(Technology::HotAir, T50, &c).unwrap();
        assert_abs_diff_eq!(k0_50, 0.086299025207, epsilon = 1e-12);
    }

    #[test]
    fn raw_hot_air_polynomial_is_rejected_without_sign_flip() {
        let c = KineticsConstants {
            negate_k0: false,
            ..kc()
        };
        let err = rate_constant(Technology::HotAir, T50, &c).unwrap_err();
        assert!(matches!(err, KineticsError::NonPositiveRate { .. }));
        assert!(c.validate(OPERATING).is_err());
    }

    #[test]
    fn equilibrium_moisture_matches_fitted_polynomials() {
        let c = kc();
        let m0 = equilibrium_moisture(Technology::HotAir, T50, &c).unwrap();
        assert_abs_diff_eq!(m0, 0.040930268775, epsilon = 1e-12);
        let m1 = equilibrium_moisture(Technology::HotAirUltrasound, T50, &c).unwrap();
        assert_abs_diff_eq!(m1, 0.038542492300, epsilon = 1e-12);
    }

    #[test]
    fn equilibrium_is_below_curve_start_over_operating_range() {
        let c = kc();
        let mut t = OPERATING.0;
        while t <= OPERATING.1 {
            for tech in Technology::ALL {
                let m = equilibrium_moisture(tech, t, &c).unwrap();
                assert!(m > 0.0 && m < c.x0_dry);
            }
            t += 0.5;
        }
    }

    #[test]
    fn rate_positive_on_dense_grid() {
        // 0.1 K grid over the operating range, both technologies.
        kc().validate(OPERATING).unwrap();
    }

    #[test]
    fn equivalent_time_at_curve_start_is_residence_time() {
        let c = kc();
        let x = MoistureState::from_dry_basis(c.x0_dry).unwrap();
        assert_relative_eq!(x.wet_basis(), 0.759615384615, max_relative = 1e-10);
        for tech in Technology::ALL {
            let t_star = equivalent_time(tech, T50, x, 5.0, &c).unwrap();
            assert_abs_diff_eq!(t_star, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn equivalent_time_positive_for_drier_sample_at_zero_residence() {
        let c = kc();
        let x = MoistureState::from_wet_basis(0.5).unwrap();
        let t_star = equivalent_time(Technology::HotAirUltrasound, T50, x, 0.0, &c).unwrap();
        assert!(t_star > 0.0);
    }

    #[test]
    fn equivalent_time_matches_direct_formula() {
        // x wet 0.5 -> dry 1.0; frozen from the fitted K1/M1 values at 50 C.
        let c = kc();
        let x = MoistureState::from_wet_basis(0.5).unwrap();
        let t_star = equivalent_time(Technology::HotAirUltrasound, T50, x, 2.0, &c).unwrap();
        assert_abs_diff_eq!(t_star, 9.118451026711, epsilon = 1e-9);
    }

    #[test]
    fn equivalent_time_errors_below_equilibrium() {
        let c = kc();
        let x = MoistureState::from_dry_basis(0.01).unwrap();
        let err = equivalent_time(Technology::HotAir, T50, x, 5.0, &c).unwrap_err();
        assert!(matches!(err, KineticsError::BelowEquilibrium { .. }));
    }

    #[test]
    fn step_at_zero_duration_is_identity() {
        let c = kc();
        let x = MoistureState::from_wet_basis(0.5).unwrap();
        for tech in Technology::ALL {
            let next = step(tech, x, StageParams::new(0.0, T50), &c).unwrap();
            assert_abs_diff_eq!(next.wet_basis(), x.wet_basis(), epsilon = 1e-13);
        }
    }

    #[test]
    fn step_long_duration_approaches_equilibrium() {
        let c = kc();
        let x = MoistureState::from_wet_basis(0.5).unwrap();
        let m_eq = equilibrium_moisture(Technology::HotAirUltrasound, T50, &c).unwrap();
        let next = step(
            Technology::HotAirUltrasound,
            x,
            StageParams::new(1e5, T50),
            &c,
        )
        .unwrap();
        assert_abs_diff_eq!(next.wet_basis(), m_eq / (1.0 + m_eq), epsilon = 1e-12);
    }

    #[test]
    fn step_within_band_returns_input() {
        let c = kc();
        let m_eq = equilibrium_moisture(Technology::HotAir, T50, &c).unwrap();
        let x = MoistureState::from_dry_basis(m_eq + 0.5e-12).unwrap();
        let next = step(Technology::HotAir, x, StageParams::new(30.0, T50), &c).unwrap();
        assert_eq!(next, x);
    }

    #[test]
    fn step_below_equilibrium_errors_and_clamped_is_identity() {
        let c = kc();
        let x = MoistureState::from_dry_basis(0.01).unwrap();
        let p = StageParams::new(30.0, T50);
        assert!(step(Technology::HotAir, x, p, &c).is_err());
        assert_eq!(step_clamped(Technology::HotAir, x, p, &c), x);
    }

    #[test]
    fn semigroup_identity_over_grid() {
        // Composing two stages at the same (tech, T) equals one stage of the
        // summed duration, to 1e-10 in wet basis, over a 5^4 grid.
        let c = kc();
        let temps = [303.15, 313.15, 323.15, 333.15, 343.15];
        let wets = [0.2, 0.35, 0.5, 0.65, 0.755];
        let t1s = [0.5, 2.0, 5.0, 11.0, 30.0];
        let t2s = [1.0, 3.0, 7.0, 17.0, 40.0];
        for tech in Technology::ALL {
            for &temp in &temps {
                for &wet in &wets {
                    let x = MoistureState::from_wet_basis(wet).unwrap();
                    for &t1 in &t1s {
                        for &t2 in &t2s {
                            let two = step(
                                tech,
                                step(tech, x, StageParams::new(t1, temp), &c).unwrap(),
                                StageParams::new(t2, temp),
                                &c,
                            )
                            .unwrap();
                            let one =
                                step(tech, x, StageParams::new(t1 + t2, temp), &c).unwrap();
                            assert_abs_diff_eq!(
                                two.wet_basis(),
                                one.wet_basis(),
                                epsilon = 1e-10
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_drying_and_equilibrium_attraction() {
        let c = kc();
        for tech in Technology::ALL {
            for temp in [303.15, 323.15, 343.15] {
                let m_eq = equilibrium_moisture(tech, temp, &c).unwrap();
                for wet in [0.1, 0.4, 0.7] {
                    let x = MoistureState::from_wet_basis(wet).unwrap();
                    if x.dry_basis() <= m_eq + EQUILIBRIUM_BAND {
                        continue;
                    }
                    let next = step(tech, x, StageParams::new(4.0, temp), &c).unwrap();
                    assert!(next.wet_basis() < x.wet_basis());
                    assert!(next.dry_basis() > m_eq);
                    assert!(next.dry_basis() < x.dry_basis());
                }
            }
        }
    }

    #[test]
    fn moisture_state_rejects_out_of_range() {
        assert!(MoistureState::from_wet_basis(1.0).is_err());
        assert!(MoistureState::from_wet_basis(-0.1).is_err());
        assert!(MoistureState::from_dry_basis(-1e-9).is_err());
        assert!(MoistureState::from_wet_basis(f64::NAN).is_err());
    }

    #[test]
    fn technology_labels_round_trip() {
        for tech in Technology::ALL {
            assert_eq!(Technology::from_label(tech.label()), Some(tech));
            assert_eq!(Technology::from_index(tech.index()), Some(tech));
        }
        assert_eq!(Technology::from_label("ha/us"), Some(Technology::HotAirUltrasound));
        assert_eq!(Technology::from_label("ir"), None);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn basis_round_trip_is_identity(wet in 0.0f64..=0.99) {
                let x = MoistureState::from_wet_basis(wet).unwrap();
                let back = MoistureState::from_dry_basis(x.dry_basis()).unwrap();
                prop_assert!((back.wet_basis() - wet).abs() <= 1e-14);
            }

            #[test]
            fn drying_is_monotone_and_attracted_to_equilibrium(
                wet in 0.1f64..0.755,
                temp in 303.15f64..343.15,
                time in 0.01f64..200.0,
                tech_bit in 0usize..2,
            ) {
                let c = KineticsConstants::default();
                let tech = Technology::from_index(tech_bit).unwrap();
                let x = MoistureState::from_wet_basis(wet).unwrap();
                let m_eq = equilibrium_moisture(tech, temp, &c).unwrap();
                prop_assume!(x.dry_basis() > m_eq + 1e-9);
                let next = step(tech, x, StageParams::new(time, temp), &c).unwrap();
                prop_assert!(next.wet_basis() < x.wet_basis());
                prop_assert!(next.dry_basis() > m_eq);
            }
        }
    }
}
