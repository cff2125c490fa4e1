//! Fiber and server transmittance, photon-number yields, and the gains
//! `Q` and error rates `E` observed by the server.
//!
//! Two gain models are offered. [`GainMode::PaperApprox`] is the first-order
//! form `Q = Y0 + T mu` (with `mu` replaced by the heralded single-click
//! mean for a heralded source). [`GainMode::Exact`] sums the photon-number
//! series with `Y_n = 1 - (1 - Y0)(1 - T)^n`.
//!
//! For a heralded source the server's dark count only enters through pulses
//! whose herald came from a dark click on an empty idler
//! (`Y0 X d_A / (1 + mu)`); heralded photon pulses use the transmission
//! yield `1 - (1 - T)^i`. Long links therefore bottom out at
//! `Y0 X d_A / (1 + mu)`, far below the unheralded floor `Y0`.

use serde::Serialize;

use crate::decoy_bounds::DecoyProtocol;
use crate::error::{Error, Result};
use crate::photon_sources::{expect_hsps, heralded_single_mean, sum_series, thermal_unchecked, SourceModel};

/// Physical link between client and server.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelParams {
    /// Fiber attenuation in dB/km.
    pub loss_db_per_km: f64,
    /// Fiber length in km.
    pub length_km: f64,
    /// Transmittance of the server's optics.
    pub server_transmittance: f64,
    /// Detection efficiency of the server's detector.
    pub server_efficiency: f64,
    /// Dark-count probability of the server's detector per gate (`Y0`).
    pub dark_count: f64,
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !(self.loss_db_per_km.is_finite() && self.loss_db_per_km >= 0.0) {
            return Err(Error::Domain(format!("fiber loss {} dB/km", self.loss_db_per_km)));
        }
        if !(self.length_km.is_finite() && self.length_km >= 0.0) {
            return Err(Error::Domain(format!("fiber length {} km", self.length_km)));
        }
        for (name, p) in [
            ("server transmittance", self.server_transmittance),
            ("server efficiency", self.server_efficiency),
            ("dark count", self.dark_count),
        ] {
            if !in_unit(p) {
                return Err(Error::Domain(format!("{name} = {p} is not a probability")));
            }
        }
        Ok(())
    }

    pub fn with_length(self, length_km: f64) -> Self {
        Self { length_km, ..self }
    }

    /// Overall transmittance `T` together with the dark count.
    pub fn link(&self) -> Link {
        Link { transmittance: transmittance(self), dark_count: self.dark_count }
    }
}

/// `T = 10^(-alpha L / 10) t_s eta_s`.
pub fn transmittance(ch: &ChannelParams) -> f64 {
    10f64.powf(-ch.loss_db_per_km * ch.length_km / 10.0) * ch.server_transmittance * ch.server_efficiency
}

/// A channel reduced to the two numbers the gain formulas need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Link {
    pub transmittance: f64,
    pub dark_count: f64,
}

impl Link {
    /// The `T -> 0` limit of this link.
    pub fn dark_only(&self) -> Self {
        Self { transmittance: 0.0, ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum GainMode {
    /// Linearized gains `Y0 + T mu`.
    PaperApprox,
    /// Full photon-number sums.
    #[default]
    Exact,
}

/// Per-photon error rates for the heralded error-rate formula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorModel {
    /// Error rate of dark-count detections.
    pub vacuum: f64,
    /// Error rate of detections caused by photons, for every `i >= 1`.
    pub detection: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self { vacuum: 0.5, detection: 0.0 }
    }
}

/// Detection probability of an `n`-photon pulse, `1 - (1 - Y0)(1 - T)^n`.
pub fn yield_n(n: u32, transmittance: f64, dark_count: f64) -> f64 {
    if n == 0 {
        return dark_count;
    }
    -((-dark_count).ln_1p() + f64::from(n) * (-transmittance).ln_1p()).exp_m1()
}

/// Yield of a heralded `i`-photon pulse: transmission only.
fn heralded_yield(i: usize, transmittance: f64) -> f64 {
    -(i as f64 * (-transmittance).ln_1p()).exp_m1()
}

/// Gain of a weak coherent pulse of mean `mean`.
pub fn gain_wcp(mean: f64, link: &Link, mode: GainMode) -> f64 {
    let t = link.transmittance;
    let y0 = link.dark_count;
    match mode {
        GainMode::PaperApprox => (y0 + t * mean).min(1.0),
        GainMode::Exact => -((-y0).ln_1p() - t * mean).exp_m1(),
    }
}

/// Gain of a heralded source (pulses kept only on a single herald click).
pub fn gain_hsps(source: &SourceModel, link: &Link, mode: GainMode) -> Result<f64> {
    let (mean, det) = expect_hsps(source)?;
    let q = match mode {
        GainMode::PaperApprox => link.dark_count + link.transmittance * heralded_single_mean(source)?,
        GainMode::Exact => {
            let vacuum = link.dark_count * det.dark_herald() * thermal_unchecked(mean, 0);
            vacuum
                + sum_series(1, |i| {
                    heralded_yield(i, link.transmittance) * det.single_click(i) * thermal_unchecked(mean, i)
                })
        }
    };
    Ok(q.min(1.0))
}

/// Gain of either source.
pub fn gain(source: &SourceModel, link: &Link, mode: GainMode) -> Result<f64> {
    match source {
        SourceModel::Wcp { mean } => Ok(gain_wcp(*mean, link, mode)),
        SourceModel::Hsps { .. } => gain_hsps(source, link, mode),
    }
}

/// Error rate of a heralded source, `E_mu`.
///
/// In [`GainMode::PaperApprox`] the numerator uses the same first-order
/// split: `e0 Y0 + e_d T mu_thermal`.
pub fn error_rate_hsps(source: &SourceModel, link: &Link, err: &ErrorModel, mode: GainMode) -> Result<f64> {
    let (mean, det) = expect_hsps(source)?;
    let q = gain_hsps(source, link, mode)?;
    if q <= 0.0 {
        return Err(Error::UndefinedRate("heralded gain"));
    }
    let weighted = match mode {
        GainMode::PaperApprox => {
            err.vacuum * link.dark_count + err.detection * link.transmittance * heralded_single_mean(source)?
        }
        GainMode::Exact => {
            let vacuum = link.dark_count * det.dark_herald() * thermal_unchecked(mean, 0);
            err.vacuum * vacuum
                + err.detection
                    * sum_series(1, |i| {
                        heralded_yield(i, link.transmittance) * det.single_click(i) * thermal_unchecked(mean, i)
                    })
        }
    };
    Ok((weighted / q).clamp(0.0, 1.0))
}

/// Gains of the signal and both decoy intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoyGains {
    pub signal: f64,
    pub decoy1: f64,
    pub decoy2: f64,
}

/// Evaluates the gain at `mu`, `v1` and `v2` with the source's detector.
/// The intensity stored in `source` is ignored in favour of the protocol's.
pub fn gain_decoys(protocol: &DecoyProtocol, source: &SourceModel, link: &Link, mode: GainMode) -> Result<DecoyGains> {
    let at = |v: f64| -> Result<f64> { gain(&source.at_mean(v)?, link, mode) };
    Ok(DecoyGains { signal: at(protocol.mu)?, decoy1: at(protocol.v1)?, decoy2: at(protocol.v2)? })
}
