//! Photon-number statistics of the client's sources.
//!
//! A weak coherent pulse is Poissonian. A heralded source emits thermal
//! pair statistics (single-mode SPDC) and keeps only pulses whose idler is
//! registered as exactly one click by a time-multiplexed detector: a tree
//! of `x` fiber couplers feeding `X = 2^x` click/no-click detectors.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative size below which a series term stops the summation.
pub const SERIES_REL_TOL: f64 = 1e-18;
/// Hard cap on the summation index of every photon-number series.
pub const SERIES_MAX_INDEX: usize = 200;

/// Sums `term(i)` for `i = start, start + 1, ...` until a term drops below
/// [`SERIES_REL_TOL`] times the running sum, or the index passes
/// [`SERIES_MAX_INDEX`].
///
/// Leading zero terms never stop the summation.
pub fn sum_series(start: usize, mut term: impl FnMut(usize) -> f64) -> f64 {
    let mut sum = 0.0;
    for i in start..=SERIES_MAX_INDEX {
        let t = term(i);
        sum += t;
        if sum > 0.0 && t.abs() <= SERIES_REL_TOL * sum.abs() {
            break;
        }
    }
    sum
}

fn check_mean(mean: f64) -> Result<()> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(Error::Domain(format!("mean photon number {mean} must be finite and >= 0")));
    }
    Ok(())
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Poisson probability of `n` photons at mean `mean`.
pub fn poisson_pmf(mean: f64, n: u32) -> Result<f64> {
    check_mean(mean)?;
    if mean == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let ln_fact: f64 = (2..=n).map(|k| f64::from(k).ln()).sum();
    Ok((-mean + f64::from(n) * mean.ln() - ln_fact).exp())
}

/// Thermal (Bose-Einstein) probability `mean^n / (1 + mean)^(n+1)`.
pub fn thermal_pmf(mean: f64, n: u32) -> Result<f64> {
    check_mean(mean)?;
    Ok(thermal_unchecked(mean, n as usize))
}

pub(crate) fn thermal_unchecked(mean: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0 / (1.0 + mean);
    }
    let ratio = mean / (1.0 + mean);
    ratio.powi(n as i32) / (1.0 + mean)
}

/// Time-multiplexed heralding detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeraldingDetector {
    stages: u32,
    efficiency: f64,
    dark_rate: f64,
}

impl HeraldingDetector {
    /// Deepest coupler tree accepted (`X = 2^16`).
    pub const MAX_STAGES: u32 = 16;
    /// Coupler depth used when none is configured (`X = 4`).
    pub const DEFAULT_STAGES: u32 = 2;

    pub fn new(stages: u32, efficiency: f64, dark_rate: f64) -> Result<Self> {
        if stages > Self::MAX_STAGES {
            return Err(Error::Domain(format!("coupler depth {stages} exceeds {}", Self::MAX_STAGES)));
        }
        check_probability("heralding efficiency", efficiency)?;
        check_probability("heralding dark rate", dark_rate)?;
        Ok(Self { stages, efficiency, dark_rate })
    }

    /// Builds a detector from its mode count, which must be a power of two.
    pub fn with_modes(modes: u32, efficiency: f64, dark_rate: f64) -> Result<Self> {
        if !modes.is_power_of_two() {
            return Err(Error::Domain(format!("mode count {modes} is not a power of two")));
        }
        Self::new(modes.trailing_zeros(), efficiency, dark_rate)
    }

    pub fn stages(&self) -> u32 {
        self.stages
    }

    /// Number of output modes `X = 2^stages`.
    pub fn modes(&self) -> u32 {
        1 << self.stages
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn dark_rate(&self) -> f64 {
        self.dark_rate
    }

    /// Probability that an idler of `photons` photons gives exactly one click,
    /// `P(1|m) = X [(1 - eta + eta/X)^m - (1 - eta)^m]`.
    ///
    /// Written as `X a^m (1 - r^m)` with `r = (1 - eta) / a` so that small
    /// `eta m / X` does not cancel.
    pub fn single_click(&self, photons: usize) -> f64 {
        if photons == 0 {
            return 0.0;
        }
        let x = f64::from(self.modes());
        let eta = self.efficiency;
        let a = 1.0 - eta + eta / x;
        let ln_r = (-(eta / x) / a).ln_1p();
        let m = photons as f64;
        x * a.powi(photons as i32) * -(m * ln_r).exp_m1()
    }

    /// Probability `X d_A` that a vacuum idler is heralded by a single dark
    /// click (first order in `d_A`).
    pub fn dark_herald(&self) -> f64 {
        f64::from(self.modes()) * self.dark_rate
    }
}

/// Probability that `incident` photons produce `clicks` clicks on the
/// detector (dark counts excluded).
///
/// Evaluated by propagating the number of occupied modes photon by photon:
/// each photon is lost with probability `1 - eta`, otherwise it lands in a
/// uniformly random mode. Every step adds only non-negative terms, so the
/// result stays accurate for large `X` where the alternating closed form
/// cancels badly (see [`tmd_response_alternating`]).
pub fn tmd_response(clicks: u32, incident: u32, det: &HeraldingDetector) -> Result<f64> {
    let modes = det.modes();
    if clicks > modes {
        return Err(Error::Domain(format!("{clicks} clicks exceed {modes} modes")));
    }
    if clicks > incident {
        return Ok(0.0);
    }
    Ok(occupancy_distribution(incident, det)[clicks as usize])
}

/// Click-count distribution `P(l | incident)` for `l = 0..=min(incident, X)`.
pub fn occupancy_distribution(incident: u32, det: &HeraldingDetector) -> Vec<f64> {
    let x = f64::from(det.modes());
    let eta = det.efficiency;
    let top = incident.min(det.modes()) as usize;
    let mut dist = vec![0.0; top + 1];
    dist[0] = 1.0;
    for step in 0..incident as usize {
        let reach = (step + 1).min(top);
        for l in (0..=reach).rev() {
            let stay = dist[l] * (1.0 - eta + eta * l as f64 / x);
            let enter = if l > 0 { dist[l - 1] * eta * (x - (l - 1) as f64) / x } else { 0.0 };
            dist[l] = stay + enter;
        }
    }
    dist
}

/// The closed-form alternating sum for `P(l|m)`, accumulating the positive
/// and negative parts separately. Kept as an independent reference; it loses
/// precision once `C(l, j)` grows large.
pub fn tmd_response_alternating(clicks: u32, incident: u32, det: &HeraldingDetector) -> Result<f64> {
    let modes = det.modes();
    if clicks > modes {
        return Err(Error::Domain(format!("{clicks} clicks exceed {modes} modes")));
    }
    let x = f64::from(modes);
    let eta = det.efficiency;
    let (mut pos, mut neg) = (0.0_f64, 0.0_f64);
    let mut binom_lj = 1.0_f64;
    for j in 0..=clicks {
        if j > 0 {
            binom_lj *= f64::from(clicks - j + 1) / f64::from(j);
        }
        let base = (1.0 - eta) + f64::from(clicks - j) * eta / x;
        let term = binom_lj * base.powi(incident as i32);
        if j % 2 == 0 {
            pos += term;
        } else {
            neg += term;
        }
    }
    let mut binom_xl = 1.0_f64;
    for k in 0..clicks {
        binom_xl *= f64::from(modes - k) / f64::from(k + 1);
    }
    Ok(binom_xl * (pos - neg))
}

/// The client's photon source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceModel {
    /// Attenuated laser, Poissonian photon number.
    Wcp { mean: f64 },
    /// SPDC pair source heralded on a single click of `detector`.
    Hsps { mean: f64, detector: HeraldingDetector },
}

impl SourceModel {
    pub fn wcp(mean: f64) -> Result<Self> {
        check_mean(mean)?;
        Ok(SourceModel::Wcp { mean })
    }

    pub fn hsps(mean: f64, detector: HeraldingDetector) -> Result<Self> {
        check_mean(mean)?;
        Ok(SourceModel::Hsps { mean, detector })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            SourceModel::Wcp { mean } | SourceModel::Hsps { mean, .. } => mean,
        }
    }

    pub fn detector(&self) -> Option<&HeraldingDetector> {
        match self {
            SourceModel::Wcp { .. } => None,
            SourceModel::Hsps { detector, .. } => Some(detector),
        }
    }

    /// Same source driven at another intensity; decoys reuse the detector.
    pub fn at_mean(&self, mean: f64) -> Result<Self> {
        check_mean(mean)?;
        Ok(match *self {
            SourceModel::Wcp { .. } => SourceModel::Wcp { mean },
            SourceModel::Hsps { detector, .. } => SourceModel::Hsps { mean, detector },
        })
    }

    pub fn is_heralded(&self) -> bool {
        matches!(self, SourceModel::Hsps { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            SourceModel::Wcp { .. } => "wcp",
            SourceModel::Hsps { .. } => "hsps",
        }
    }

    /// Probability that a sent pulse holds `n` photons (before heralding).
    pub fn photon_pmf(&self, n: u32) -> Result<f64> {
        match *self {
            SourceModel::Wcp { mean } => poisson_pmf(mean, n),
            SourceModel::Hsps { mean, .. } => thermal_pmf(mean, n),
        }
    }
}

pub(crate) fn expect_hsps(source: &SourceModel) -> Result<(f64, &HeraldingDetector)> {
    match source {
        SourceModel::Hsps { mean, detector } => Ok((*mean, detector)),
        SourceModel::Wcp { .. } => Err(Error::Variant { expected: "heralded (HSPS)" }),
    }
}

/// Mean number of signal pulses kept per emitted pulse, weighted by photon
/// number: `sum_i P_thermal(i) P(1|i)`. Dark heralds are not included.
pub fn heralded_single_mean(source: &SourceModel) -> Result<f64> {
    let (mean, det) = expect_hsps(source)?;
    Ok(sum_series(0, |i| thermal_unchecked(mean, i) * det.single_click(i)))
}

/// Photon-number distribution of the signal conditioned on a single-click
/// herald, including vacuum pulses heralded by a dark count.
pub fn heralded_pnd(source: &SourceModel, n: u32) -> Result<f64> {
    let (mean, det) = expect_hsps(source)?;
    let vacuum = thermal_unchecked(mean, 0) * det.dark_herald();
    let norm = heralded_single_mean(source)? + vacuum;
    if norm <= 0.0 {
        return Err(Error::UndefinedRate("herald probability"));
    }
    let weight = if n == 0 { vacuum } else { thermal_unchecked(mean, n as usize) * det.single_click(n as usize) };
    Ok(weight / norm)
}
