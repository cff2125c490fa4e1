//! Turns `p1` and gains into protocol resources.
//!
//! A group of `m` detected signal pulses yields one blind qubit if at least
//! one of them was a single photon. With `S` groups the failure probability
//! is bounded by `S (1 - p1)^m`, which fixes the smallest `m`; the pulse
//! count is `N = S m / (p_mu Q_mu)` and the efficiency `S/N = p_mu Q_mu / m`.
//!
//! `m` is reported twice: the real-valued `ln(eps/S) / ln(1 - p1)` used in
//! `N` and `S/N`, and its ceiling, which is what a run would actually use.

use rayon::prelude::*;
use serde::Serialize;

use crate::channel_model::{gain, gain_decoys, ChannelParams, DecoyGains, GainMode, Link};
use crate::decoy_bounds::{estimate_bounds, BoundsResult, DecoyProtocol};
use crate::error::{Error, Result};
use crate::photon_sources::SourceModel;
use crate::search::golden_section_max;

/// A flagged row has a signal gain at most this many times its dark-count floor.
pub const DARK_DOMINANCE_FACTOR: f64 = 2.0;

/// Smallest integer `m` with `(1 - p1)^m <= eps/S`.
pub fn group_size_min(p1: f64, eps_over_s: f64) -> Result<u64> {
    if !(eps_over_s > 0.0 && eps_over_s < 1.0) {
        return Err(Error::Domain(format!("eps/S = {eps_over_s} outside (0, 1)")));
    }
    if p1 == 1.0 {
        return Ok(1);
    }
    if !(p1 > 0.0 && p1 < 1.0) {
        return Err(Error::DegenerateProtocol("p1 must lie in (0, 1]"));
    }
    Ok(group_size_real(p1, eps_over_s).ceil().max(1.0) as u64)
}

/// `ln(eps/S) / ln(1 - p1)`, not rounded; `+inf` at `p1 = 0`, `0` at `p1 = 1`.
pub fn group_size_real(p1: f64, eps_over_s: f64) -> f64 {
    eps_over_s.ln() / (-p1).ln_1p()
}

/// Failure probability of one group, `(1 - p1)^m`.
pub fn group_fail_prob(p1: f64, m: u64) -> f64 {
    (1.0 - p1).powf(m as f64)
}

/// Union bound over `S` groups, clamped to 1.
pub fn overall_fail_bound(size: u64, p1: f64, m: u64) -> f64 {
    (size as f64 * group_fail_prob(p1, m)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PulseCount {
    /// Real-valued group size (at least 1).
    pub group_size: f64,
    /// Pulses needed for `S` blind qubits.
    pub pulses: f64,
    /// `S / N`.
    pub efficiency: f64,
}

/// Minimum pulse count for `size` blind qubits.
pub fn pulse_count_min(size: u64, p: &DecoyProtocol, q_mu: f64, p1: f64) -> Result<PulseCount> {
    if q_mu <= 0.0 {
        return Err(Error::UndefinedRate("signal gain"));
    }
    if !(p1 > 0.0 && p1 <= 1.0) {
        return Err(Error::DegenerateProtocol("p1 must lie in (0, 1]"));
    }
    let m = group_size_real(p1, p.eps_over_s).max(1.0);
    let rate = p.p_mu * q_mu;
    Ok(PulseCount { group_size: m, pulses: size as f64 * m / rate, efficiency: rate / m })
}

/// Abort/fail bound of the decoy-free protocol, `exp(-N T^4 / 18)`.
pub fn original_rbsp_bound(pulses: f64, transmittance: f64) -> Result<f64> {
    check_transmittance(transmittance)?;
    Ok((-pulses * transmittance.powi(4) / 18.0).exp())
}

/// Pulses the decoy-free protocol needs to reach `eps`, `18 ln(1/eps) / T^4`.
pub fn n_for_epsilon(eps: f64, transmittance: f64) -> Result<f64> {
    check_transmittance(transmittance)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1)")));
    }
    Ok(18.0 * (1.0 / eps).ln() / transmittance.powi(4))
}

fn check_transmittance(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Domain(format!("transmittance {t} outside (0, 1]")));
    }
    Ok(())
}

/// Everything known about one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanResult {
    pub source: SourceModel,
    pub protocol: DecoyProtocol,
    pub mode: GainMode,
    pub transmittance: f64,
    pub gains: DecoyGains,
    pub bounds: BoundsResult,
    pub p1: f64,
    /// Real-valued group size; infinite when `p1 = 0`.
    pub m_real: f64,
    /// Operational group size; `None` when `p1 = 0`.
    pub m_min: Option<u64>,
    /// Pulse count for `size` qubits; infinite when `p1 = 0`.
    pub n_min: f64,
    /// `S / N`.
    pub efficiency: f64,
    pub p_fail_group: f64,
    pub p_fail_total_bound: f64,
    pub size: u64,
}

/// Resources for `source` driven at `protocol.mu` over `link`.
pub fn plan(
    source: &SourceModel,
    link: &Link,
    protocol: &DecoyProtocol,
    mode: GainMode,
    size: u64,
) -> Result<PlanResult> {
    protocol.validate()?;
    if size == 0 {
        return Err(Error::Domain("computation size must be at least 1".into()));
    }
    let source = source.at_mean(protocol.mu)?;
    let gains = gain_decoys(protocol, &source, link, mode)?;
    let bounds = estimate_bounds(&source, &gains, protocol)?;
    let p1 = bounds.p1_lower;
    let (m_real, m_min, n_min, efficiency, fail_group, fail_total) = if p1 > 0.0 {
        let count = pulse_count_min(size, protocol, gains.signal, p1)?;
        let m = group_size_min(p1, protocol.eps_over_s)?;
        (
            count.group_size,
            Some(m),
            count.pulses,
            count.efficiency,
            group_fail_prob(p1, m),
            overall_fail_bound(size, p1, m),
        )
    } else {
        (f64::INFINITY, None, f64::INFINITY, 0.0, 1.0, 1.0)
    };
    Ok(PlanResult {
        source,
        protocol: *protocol,
        mode,
        transmittance: link.transmittance,
        gains,
        bounds,
        p1,
        m_real,
        m_min,
        n_min,
        efficiency,
        p_fail_group: fail_group,
        p_fail_total_bound: fail_total,
        size,
    })
}

/// Intensity grid scanned before golden-section refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MuGrid {
    /// Lowest intensity; `None` means `max(v1 + v2 + 1e-3, 0.01)`.
    pub lower: Option<f64>,
    pub upper: f64,
    pub step: f64,
    /// Bracket width at which refinement stops.
    pub tolerance: f64,
}

impl Default for MuGrid {
    fn default() -> Self {
        Self { lower: None, upper: 2.0, step: 0.005, tolerance: 1e-4 }
    }
}

impl MuGrid {
    pub fn points(&self, protocol: &DecoyProtocol) -> Vec<f64> {
        let lower = self.lower.unwrap_or((protocol.v1 + protocol.v2 + 1e-3).max(0.01));
        if !(self.step.is_finite() && self.step > 0.0) || lower.is_nan() || lower > self.upper {
            return Vec::new();
        }
        let count = ((self.upper - lower) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| lower + k as f64 * self.step).filter(|&mu| mu > protocol.v1 + protocol.v2).collect()
    }
}

fn efficiency_at(source: &SourceModel, link: &Link, protocol: &DecoyProtocol, mode: GainMode, mu: f64) -> f64 {
    plan(source, link, &protocol.with_mu(mu), mode, 1).map_or(0.0, |r| r.efficiency)
}

/// Intensity maximizing `S/N`: grid scan, then golden-section refinement
/// around the best grid point. `protocol.mu` is ignored.
pub fn optimize_mu(
    source: &SourceModel,
    link: &Link,
    protocol: &DecoyProtocol,
    mode: GainMode,
    size: u64,
    grid: &MuGrid,
) -> Result<(f64, PlanResult)> {
    let points = grid.points(protocol);
    if points.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let scores: Vec<f64> = points.par_iter().map(|&mu| efficiency_at(source, link, protocol, mode, mu)).collect();
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = k;
        }
    }
    let mut mu_star = points[best];
    if scores[best] > 0.0 {
        let lo = points[best.saturating_sub(1)];
        let hi = points[(best + 1).min(points.len() - 1)];
        let (mu, s) = golden_section_max(|mu| efficiency_at(source, link, protocol, mode, mu), lo, hi, grid.tolerance);
        if s > scores[best] {
            mu_star = mu;
        }
    }
    let result = plan(source, link, &protocol.with_mu(mu_star), mode, size)?;
    Ok((mu_star, result))
}

/// One distance of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub length_km: f64,
    pub mu_opt: f64,
    pub p1: f64,
    pub efficiency: f64,
    /// Signal gain in the `T -> 0` limit at `mu_opt`.
    pub dark_floor: f64,
    /// Dark counts make up at least half of the signal gain; the efficiency
    /// curve has reached its long-distance plateau.
    pub plateau_flag: bool,
    pub plan: PlanResult,
}

/// Optimizes `mu` at every length (in parallel, output in input order).
pub fn sweep_distance(
    source: &SourceModel,
    channel: &ChannelParams,
    protocol: &DecoyProtocol,
    mode: GainMode,
    size: u64,
    grid: &MuGrid,
    lengths: &[f64],
) -> Result<Vec<SweepRow>> {
    if lengths.is_empty() {
        return Err(Error::EmptyGrid);
    }
    lengths
        .par_iter()
        .map(|&length_km| {
            let ch = channel.with_length(length_km);
            ch.validate()?;
            let link = ch.link();
            let (mu_opt, plan) = optimize_mu(source, &link, protocol, mode, size, grid)?;
            let dark_floor = dark_floor(&plan, &link)?;
            Ok(SweepRow {
                length_km,
                mu_opt,
                p1: plan.p1,
                efficiency: plan.efficiency,
                dark_floor,
                plateau_flag: is_dark_dominated(&plan, dark_floor),
                plan,
            })
        })
        .collect()
}

/// Signal gain of `plan`'s source with the channel transmittance set to zero.
pub fn dark_floor(plan: &PlanResult, link: &Link) -> Result<f64> {
    gain(&plan.source, &link.dark_only(), plan.mode)
}

/// Whether the signal gain is within [`DARK_DOMINANCE_FACTOR`] of `floor`.
pub fn is_dark_dominated(plan: &PlanResult, floor: f64) -> bool {
    plan.gains.signal <= DARK_DOMINANCE_FACTOR * floor
}

/// Shortest swept distance at which the plateau flag is set.
pub fn plateau_onset(rows: &[SweepRow]) -> Option<f64> {
    rows.iter().find(|r| r.plateau_flag).map(|r| r.length_km)
}

/// Plans at each intensity of `mus` over a fixed link.
pub fn sweep_mu(
    source: &SourceModel,
    link: &Link,
    protocol: &DecoyProtocol,
    mode: GainMode,
    size: u64,
    mus: &[f64],
) -> Result<Vec<PlanResult>> {
    if mus.is_empty() {
        return Err(Error::EmptyGrid);
    }
    mus.par_iter().map(|&mu| plan(source, link, &protocol.with_mu(mu), mode, size)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn group_size_examples() {
        assert_eq!(group_size_min(0.5, 1e-3).unwrap(), 10);
        assert_relative_eq!(group_size_real(0.5, 1e-3), 9.965784284662087, max_relative = 1e-12);
        assert_eq!(group_size_min(1.0 - 1e-9, 1e-8).unwrap(), 1);
        assert_eq!(group_size_min(1.0, 1e-3).unwrap(), 1);
        assert!(group_size_min(0.65, 1e-3).unwrap() < group_size_min(0.51, 1e-3).unwrap());
        assert!(group_size_min(0.0, 1e-3).is_err());
        assert!(group_size_min(0.5, 1.0).is_err());
    }

    #[test]
    fn failure_probabilities() {
        assert_eq!(group_fail_prob(1.0, 3), 0.0);
        assert_eq!(group_fail_prob(0.0, 5), 1.0);
        assert_relative_eq!(group_fail_prob(0.5, 10), 9.765625e-4, max_relative = 1e-15);
        assert_eq!(overall_fail_bound(1, 0.3, 4), group_fail_prob(0.3, 4));
        assert_relative_eq!(overall_fail_bound(100, 0.5, 10), 0.09765625, max_relative = 1e-15);
        assert_eq!(overall_fail_bound(10_000, 0.1, 1), 1.0);
    }

    #[test]
    fn pulse_count_examples() {
        let p = DecoyProtocol::new(0.625, 0.125, 0.0, 0.9, 1e-3);
        let a = pulse_count_min(1, &p, 8.9e-3, 0.51).unwrap();
        let m = (1e-3f64).ln() / 0.49f64.ln();
        assert!((m - 9.68).abs() < 0.01);
        assert_relative_eq!(a.group_size, m, max_relative = 1e-14);
        assert_relative_eq!(a.pulses, m / (0.9 * 8.9e-3), max_relative = 1e-14);
        assert!((a.pulses - 1208.0).abs() < 1.0, "{}", a.pulses);
        let b = pulse_count_min(1, &p, 2.0 * 8.9e-3, 0.51).unwrap();
        assert_relative_eq!(b.pulses, a.pulses / 2.0, max_relative = 1e-14);
        let tiny = pulse_count_min(1, &p, 8.9e-3, 1e-9).unwrap();
        assert!(tiny.pulses > 8e11);
        assert!(pulse_count_min(1, &p, 0.0, 0.5).is_err());
        assert!(pulse_count_min(1, &p, 1e-3, 0.0).is_err());
    }

    #[test]
    fn decoy_free_bound() {
        assert_eq!(original_rbsp_bound(0.0, 0.3).unwrap(), 1.0);
        assert!(original_rbsp_bound(10.0, 0.0).is_err());
        let n = n_for_epsilon(1e-3, 0.1).unwrap();
        assert_relative_eq!(n, 18.0 * 1000f64.ln() / 1e-4, max_relative = 1e-14);
        assert!((n - 1.2434e6).abs() < 100.0);
        assert_relative_eq!(n_for_epsilon(1e-3, 0.05).unwrap() / n, 16.0, max_relative = 1e-12);
        assert_relative_eq!(original_rbsp_bound(n, 0.1).unwrap(), 1e-3, max_relative = 1e-12);
    }

    #[test]
    fn grid_respects_decoy_sum() {
        let p = DecoyProtocol::new(0.0, 0.125, 0.0, 0.9, 1e-3);
        let pts = MuGrid::default().points(&p);
        assert_relative_eq!(pts[0], 0.126, max_relative = 1e-12);
        assert!(pts.last().unwrap() <= &2.0);
        assert_eq!(pts.len(), 375);
        let bad = MuGrid { lower: Some(0.01), upper: 0.1, ..MuGrid::default() };
        assert!(bad.points(&p).is_empty());
        let wcp = SourceModel::wcp(0.5).unwrap();
        let link = Link { transmittance: 0.01, dark_count: 6e-6 };
        assert_eq!(optimize_mu(&wcp, &link, &p, GainMode::Exact, 1, &bad).unwrap_err(), Error::EmptyGrid);
    }

    #[test]
    fn plan_consistency() {
        let wcp = SourceModel::wcp(0.5).unwrap();
        let link = Link { transmittance: 0.0142, dark_count: 6e-6 };
        let p = DecoyProtocol::new(0.625, 0.125, 0.0, 0.9, 1e-3);
        let r = plan(&wcp, &link, &p, GainMode::Exact, 1000).unwrap();
        assert_relative_eq!(r.n_min * r.efficiency / 1000.0, 1.0, max_relative = 1e-12);
        assert_relative_eq!(r.efficiency, 0.9 * r.gains.signal / r.m_real, max_relative = 1e-14);
        let m = r.m_min.unwrap();
        assert!(r.p_fail_group <= (1.0 - r.p1).powf(m as f64) * (1.0 + 1e-12));
        assert!(r.p_fail_total_bound <= 1.0);
        assert!(plan(&wcp, &link, &p.with_mu(0.1), GainMode::Exact, 1).is_err());
        assert!(plan(&wcp, &link, &p, GainMode::Exact, 0).is_err());
    }
}
