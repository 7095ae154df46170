//! Per-link propagation: bounded power-law path-loss, log-normal shadowing,
//! Nakagami/Rayleigh fading and horizontal antenna patterns.
//!
//! Everything here works in linear units and radians; dB and degrees only
//! appear in constructors named accordingly.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal};

use crate::blockage::LinkState;
use crate::error::{Error, Result};

/// Speed of light used for the free-space constant (m/s).
pub const SPEED_OF_LIGHT: f64 = 3e8;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

/// Free-space path-loss at 1 m, `(4 pi f_c / c)^2`.
pub fn free_space_kappa(fc_hz: f64) -> f64 {
    let wavelength = SPEED_OF_LIGHT / fc_hz;
    (4.0 * PI / wavelength).powi(2)
}

/// Thermal noise power in watts: `-174 dBm/Hz + 10 log10(B) + F`.
pub fn noise_power_watts(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    dbm_to_watts(-174.0 + 10.0 * bandwidth_hz.log10() + noise_figure_db)
}

/// Small-scale fading of the power gain `h` (envelope squared).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    /// Nakagami-m envelope: `h ~ Gamma(m, omega / m)`.
    Nakagami { m: f64, omega: f64 },
    /// Rayleigh envelope: `h ~ Exp(mean omega)`.
    Rayleigh { omega: f64 },
    /// `h = 1`.
    None,
}

impl Fading {
    pub fn mean_power(&self) -> f64 {
        match *self {
            Fading::Nakagami { omega, .. } | Fading::Rayleigh { omega } => omega,
            Fading::None => 1.0,
        }
    }
}

/// Propagation parameters of one link state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateChannel {
    /// Linear path-loss at 1 m.
    pub kappa: f64,
    /// Path-loss exponent.
    pub alpha: f64,
    /// Shadowing mean in dB.
    pub mu_db: f64,
    /// Shadowing standard deviation in dB.
    pub sigma_db: f64,
    pub fading: Fading,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub los: StateChannel,
    pub nlos: StateChannel,
    /// Path-loss is flat below this distance (m).
    pub r0: f64,
}

impl ChannelParams {
    /// LTE-A urban setup at 2.1 GHz: exponents 2.5/3.5, shadowing 5.8/8.7 dB,
    /// Nakagami m = 2 for LOS and Rayleigh for NLOS, unit mean power, r0 = 1 m.
    pub fn urban_default() -> Self {
        let kappa = free_space_kappa(2.1e9);
        ChannelParams {
            los: StateChannel {
                kappa,
                alpha: 2.5,
                mu_db: 0.0,
                sigma_db: 5.8,
                fading: Fading::Nakagami { m: 2.0, omega: 1.0 },
            },
            nlos: StateChannel {
                kappa,
                alpha: 3.5,
                mu_db: 0.0,
                sigma_db: 8.7,
                fading: Fading::Rayleigh { omega: 1.0 },
            },
            r0: 1.0,
        }
    }

    pub fn state(&self, s: LinkState) -> &StateChannel {
        match s {
            LinkState::Los => &self.los,
            LinkState::Nlos => &self.nlos,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r0 > 0.0) {
            return Err(Error::param(format!("r0 must be > 0, got {}", self.r0)));
        }
        for (name, st) in [("LOS", &self.los), ("NLOS", &self.nlos)] {
            if !(st.kappa > 0.0) {
                return Err(Error::param(format!("{name} kappa must be > 0")));
            }
            if !(st.alpha > 2.0) {
                return Err(Error::param(format!(
                    "{name} path-loss exponent must be > 2"
                )));
            }
            if !(st.sigma_db >= 0.0) || !st.mu_db.is_finite() {
                return Err(Error::param(format!("{name} shadowing needs sigma >= 0")));
            }
            match st.fading {
                Fading::Nakagami { m, omega } => {
                    if !(m > 1.0) || !(omega > 0.0) {
                        return Err(Error::param(format!(
                            "{name} Nakagami fading needs m > 1 and omega > 0"
                        )));
                    }
                }
                Fading::Rayleigh { omega } => {
                    if !(omega > 0.0) {
                        return Err(Error::param(format!(
                            "{name} Rayleigh fading needs omega > 0"
                        )));
                    }
                }
                Fading::None => {}
            }
        }
        Ok(())
    }

    /// Same parameters with shadowing switched off.
    pub fn without_shadowing(mut self) -> Self {
        self.los.sigma_db = 0.0;
        self.nlos.sigma_db = 0.0;
        self.los.mu_db = 0.0;
        self.nlos.mu_db = 0.0;
        self
    }
}

/// `kappa * max(r0, r)^alpha` for state `s`.
pub fn path_loss(r: f64, s: LinkState, params: &ChannelParams) -> f64 {
    let st = params.state(s);
    st.kappa * params.r0.max(r).powf(st.alpha)
}

/// Linear shadowing gain `10^(chi/10)`, `chi ~ N(mu, sigma^2)` in dB.
pub fn sample_shadowing<R: Rng + ?Sized>(s: LinkState, params: &ChannelParams, rng: &mut R) -> f64 {
    let st = params.state(s);
    if st.sigma_db == 0.0 {
        return db_to_linear(st.mu_db);
    }
    let chi = Normal::new(st.mu_db, st.sigma_db)
        .expect("validated sigma")
        .sample(rng);
    db_to_linear(chi)
}

/// Fading power gain of state `s`.
pub fn sample_fading_power<R: Rng + ?Sized>(
    s: LinkState,
    params: &ChannelParams,
    rng: &mut R,
) -> f64 {
    match params.state(s).fading {
        Fading::Nakagami { m, omega } => Gamma::new(m, omega / m)
            .expect("validated fading")
            .sample(rng),
        Fading::Rayleigh { omega } => Exp::new(1.0 / omega).expect("validated fading").sample(rng),
        Fading::None => 1.0,
    }
}

/// Piece-wise constant pattern: `gains[k]` applies for
/// `breakpoints[k-1] < |theta| <= breakpoints[k]`, with implicit `0` and `pi`
/// at the ends.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLobeParams {
    gains: Vec<f64>,
    breakpoints: Vec<f64>,
}

impl MultiLobeParams {
    pub fn new(gains: Vec<f64>, breakpoints: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::param("multi-lobe pattern needs at least one lobe"));
        }
        if breakpoints.len() + 1 != gains.len() {
            return Err(Error::param(format!(
                "{} lobes need {} breakpoints, got {}",
                gains.len(),
                gains.len() - 1,
                breakpoints.len()
            )));
        }
        if gains.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err(Error::param("lobe gains must lie in (0, 1]"));
        }
        let mut prev = 0.0;
        for &b in &breakpoints {
            if !(b > prev && b < PI) {
                return Err(Error::param(
                    "lobe breakpoints must be strictly increasing inside (0, pi)",
                ));
            }
            prev = b;
        }
        Ok(MultiLobeParams { gains, breakpoints })
    }

    pub fn from_degrees(gains: Vec<f64>, breakpoints_deg: Vec<f64>) -> Result<Self> {
        MultiLobeParams::new(
            gains,
            breakpoints_deg.into_iter().map(f64::to_radians).collect(),
        )
    }

    /// Four-lobe fit of the 3GPP pattern with 35 deg beamwidth and 23 dB floor.
    pub fn three_gpp_fit() -> Self {
        MultiLobeParams::from_degrees(
            vec![0.8341, 0.2865, 0.0334, 0.005],
            vec![16.152, 32.304, 48.455],
        )
        .expect("static params")
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    /// Breakpoints in radians.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn k_lobes(&self) -> usize {
        self.gains.len()
    }

    /// Average gain over a uniformly distributed angle.
    pub fn mean_gain(&self) -> f64 {
        let mut prev = 0.0;
        let mut acc = 0.0;
        for (k, g) in self.gains.iter().enumerate() {
            let hi = self.breakpoints.get(k).copied().unwrap_or(PI);
            acc += g * (hi - prev);
            prev = hi;
        }
        acc / PI
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AntennaModel {
    Omni,
    /// 3GPP horizontal pattern; beamwidth stored in radians, floor in dB.
    ThreeGpp {
        theta_3db: f64,
        g_min_db: f64,
    },
    MultiLobe(MultiLobeParams),
}

impl AntennaModel {
    pub fn three_gpp_deg(theta_3db_deg: f64, g_min_db: f64) -> Result<Self> {
        if !(theta_3db_deg > 0.0) || !(g_min_db > 0.0) {
            return Err(Error::param(
                "3GPP pattern needs theta_3dB > 0 and g_min > 0",
            ));
        }
        let phi = theta_3db_deg * (g_min_db / 12.0).sqrt();
        if phi > 180.0 {
            return Err(Error::param(format!(
                "3GPP main lobe half-width {phi:.2} deg exceeds 180 deg"
            )));
        }
        Ok(AntennaModel::ThreeGpp {
            theta_3db: theta_3db_deg.to_radians(),
            g_min_db,
        })
    }

    /// 35 deg beamwidth, 23 dB floor.
    pub fn three_gpp_default() -> Self {
        AntennaModel::three_gpp_deg(35.0, 23.0).expect("static params")
    }

    /// Main-lobe half-width `theta_3dB * sqrt(g_min / 12)` in radians.
    pub fn main_lobe(&self) -> Option<f64> {
        match *self {
            AntennaModel::ThreeGpp {
                theta_3db,
                g_min_db,
            } => Some(theta_3db * (g_min_db / 12.0).sqrt()),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            AntennaModel::Omni => "Omni",
            AntennaModel::ThreeGpp { .. } => "3GPP",
            AntennaModel::MultiLobe(_) => "Multi-Lobe",
        }
    }
}

/// Wraps any angle into `[-pi, pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let t = (theta + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2 pi
    if t >= PI {
        t - 2.0 * PI
    } else {
        t
    }
}

/// `|wrap_angle(theta)|`, computed from `|theta|` so that it is exactly even.
pub fn off_axis(theta: f64) -> f64 {
    let a = theta.abs();
    if a <= PI {
        return a;
    }
    let a = a.rem_euclid(2.0 * PI);
    if a > PI {
        2.0 * PI - a
    } else {
        a
    }
}

/// Linear gain at angle `theta` off boresight.
pub fn antenna_gain(model: &AntennaModel, theta: f64) -> f64 {
    let a = off_axis(theta);
    match model {
        AntennaModel::Omni => 1.0,
        AntennaModel::ThreeGpp {
            theta_3db,
            g_min_db,
        } => {
            let phi = model.main_lobe().expect("3GPP");
            if a <= phi {
                10f64.powf(-0.3 * (2.0 * a / theta_3db).powi(2))
            } else {
                10f64.powf(-g_min_db / 10.0)
            }
        }
        AntennaModel::MultiLobe(ml) => {
            let k = ml.breakpoints.partition_point(|&b| b < a);
            ml.gains[k]
        }
    }
}

/// Product of BS and MT gains at independent uniform orientations.
pub fn interferer_gain_sample<R: Rng + ?Sized>(
    bs: &AntennaModel,
    mt: &AntennaModel,
    rng: &mut R,
) -> f64 {
    let ti = rng.random_range(-PI..PI);
    let tk = rng.random_range(-PI..PI);
    antenna_gain(bs, ti) * antenna_gain(mt, tk)
}
