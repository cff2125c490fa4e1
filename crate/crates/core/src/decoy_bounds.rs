//! Decoy-state lower bounds on the vacuum yield, the single-photon yield and
//! the single-photon fraction `p1` of the server's detections.
//!
//! All bounds are asymptotic (no statistical fluctuation terms) and clamped
//! to `[0, 1]`. A vacuum decoy (`v2 = 0`) goes through the general formulas.

use serde::Serialize;

use crate::channel_model::DecoyGains;
use crate::error::{Error, Result, Violation};
use crate::photon_sources::SourceModel;

/// Signal and decoy intensities plus the protocol's fixed rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecoyProtocol {
    pub mu: f64,
    pub v1: f64,
    pub v2: f64,
    /// Fraction of pulses sent at the signal intensity.
    pub p_mu: f64,
    /// Security rate `eps / S`.
    pub eps_over_s: f64,
}

impl DecoyProtocol {
    pub fn new(mu: f64, v1: f64, v2: f64, p_mu: f64, eps_over_s: f64) -> Self {
        Self { mu, v1, v2, p_mu, eps_over_s }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let v = validate_protocol(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidProtocol(v))
        }
    }
}

/// Every violated constraint of `p`; empty when the protocol is usable.
pub fn validate_protocol(p: &DecoyProtocol) -> Vec<Violation> {
    let mut out = Vec::new();
    if ![p.mu, p.v1, p.v2, p.p_mu, p.eps_over_s].iter().all(|x| x.is_finite()) {
        out.push(Violation::NotFinite);
        return out;
    }
    if p.v2 < 0.0 {
        out.push(Violation::NegativeDecoy);
    }
    if p.v2 >= p.v1 {
        out.push(Violation::DecoyOrder);
    }
    if p.v1 + p.v2 >= p.mu {
        out.push(Violation::DecoySum);
    }
    if !(p.p_mu > 0.0 && p.p_mu <= 1.0) {
        out.push(Violation::SignalFraction);
    }
    if !(p.eps_over_s > 0.0 && p.eps_over_s < 1.0) {
        out.push(Violation::SecurityRate);
    }
    out
}

/// Lower bounds produced for one set of gains.
///
/// For a heralded source the yields come out multiplied by detector factors:
/// `y0_lower` bounds `Y0 X d_A` and `y1_lower` bounds `Y1 eta_A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsResult {
    pub y0_lower: f64,
    pub y1_lower: f64,
    pub p1_lower: f64,
}

fn positive_gap(gap: f64, what: &'static str) -> Result<f64> {
    if gap > 0.0 {
        Ok(gap)
    } else {
        Err(Error::DegenerateProtocol(what))
    }
}

/// Vacuum-yield bound for coherent pulses,
/// `max{(v1 Qv2 e^v2 - v2 Qv1 e^v1) / (v1 - v2), 0}`.
pub fn wcp_y0_lower(q_v1: f64, q_v2: f64, v1: f64, v2: f64) -> Result<f64> {
    let gap = positive_gap(v1 - v2, "v1 must exceed v2")?;
    Ok(((v1 * q_v2 * v2.exp() - v2 * q_v1 * v1.exp()) / gap).clamp(0.0, 1.0))
}

/// Single-photon yield bound for coherent pulses.
pub fn wcp_y1_lower(gains: &DecoyGains, p: &DecoyProtocol, y0_lower: f64) -> Result<f64> {
    let (mu, v1, v2) = (p.mu, p.v1, p.v2);
    let den = positive_gap(mu * v1 - mu * v2 - v1 * v1 + v2 * v2, "need v2 < v1 and v1 + v2 < mu")?;
    let bracket = gains.decoy1 * v1.exp()
        - gains.decoy2 * v2.exp()
        - (v1 * v1 - v2 * v2) / (mu * mu) * (gains.signal * mu.exp() - y0_lower);
    Ok((mu / den * bracket).clamp(0.0, 1.0))
}

/// Lower bound on the single-photon fraction for coherent pulses.
pub fn wcp_p1_lower(gains: &DecoyGains, p: &DecoyProtocol, y0_lower: f64) -> Result<f64> {
    let q = gains.signal;
    if q <= 0.0 {
        return Err(Error::UndefinedRate("signal gain"));
    }
    let (mu, v1, v2) = (p.mu, p.v1, p.v2);
    let den = positive_gap(mu * v1 - mu * v2 - v1 * v1 + v2 * v2, "need v2 < v1 and v1 + v2 < mu")?;
    let bracket = gains.decoy1 / q * v1.exp()
        - gains.decoy2 / q * v2.exp()
        - (v1 * v1 - v2 * v2) / (mu * mu * q) * (q * mu.exp() - y0_lower);
    Ok((mu * mu * (-mu).exp() / den * bracket).clamp(0.0, 1.0))
}

/// Bound on `Y0 X d_A` for a heralded source:
/// `max{[v1 Qv2 (1+v2)^2 - v2 Qv1 (1+v1)^2] / [v1 (1+v2) - v2 (1+v1)], 0}`.
pub fn hsps_y0_lower(q_v1: f64, q_v2: f64, v1: f64, v2: f64) -> Result<f64> {
    let gap = positive_gap(v1 * (1.0 + v2) - v2 * (1.0 + v1), "v1 must exceed v2")?;
    let num = v1 * q_v2 * (1.0 + v2).powi(2) - v2 * q_v1 * (1.0 + v1).powi(2);
    Ok((num / gap).clamp(0.0, 1.0))
}

/// Bound on `Y1 eta_A` for a heralded source.
///
/// With `a = mu/(1+mu)` and `a_k = v_k/(1+v_k)` the heralded gain expands as
/// `Q (1+mu) = Y0 X d_A + Y1 eta_A a + sum_{i>=2} Y_i P(1|i) a^i`. Removing
/// the vacuum part with the two decoys and bounding the multi-photon tail by
/// its `i = 2` weight gives
///
/// ```text
/// Y1 eta_A >= a / [(a1 - a2) a - a1^2 + a2^2]
///             * [Qv1 (1+v1) - Qv2 (1+v2) - (a1^2 - a2^2)/a^2 (Q (1+mu) - Y0L X d_A)]
/// ```
///
/// The signal gain enters multiplied by `(1 + mu)`, matching the decoy terms.
pub fn hsps_y1_lower(gains: &DecoyGains, p: &DecoyProtocol, y0_lower_scaled: f64) -> Result<f64> {
    let a = p.mu / (1.0 + p.mu);
    let a1 = p.v1 / (1.0 + p.v1);
    let a2 = p.v2 / (1.0 + p.v2);
    let den = positive_gap(a1 * a - a2 * a - a1 * a1 + a2 * a2, "need v2 < v1 and v1/(1+v1) + v2/(1+v2) < mu/(1+mu)")?;
    let bracket = gains.decoy1 * (1.0 + p.v1)
        - gains.decoy2 * (1.0 + p.v2)
        - (a1 * a1 - a2 * a2) / (a * a) * (gains.signal * (1.0 + p.mu) - y0_lower_scaled);
    Ok((a / den * bracket).clamp(0.0, 1.0))
}

/// `p1 >= Y1 eta_A mu / (1+mu)^2 / Q`.
pub fn hsps_p1_lower(q_mu: f64, y1_eta: f64, mu: f64) -> Result<f64> {
    if q_mu <= 0.0 {
        return Err(Error::UndefinedRate("signal gain"));
    }
    Ok((y1_eta * mu / (1.0 + mu).powi(2) / q_mu).clamp(0.0, 1.0))
}

/// All three bounds for `source`, given its observed gains.
pub fn estimate_bounds(source: &SourceModel, gains: &DecoyGains, p: &DecoyProtocol) -> Result<BoundsResult> {
    if gains.signal <= 0.0 {
        return Err(Error::UndefinedRate("signal gain"));
    }
    if source.is_heralded() {
        let y0 = hsps_y0_lower(gains.decoy1, gains.decoy2, p.v1, p.v2)?;
        let y1 = hsps_y1_lower(gains, p, y0)?;
        let p1 = hsps_p1_lower(gains.signal, y1, p.mu)?;
        Ok(BoundsResult { y0_lower: y0, y1_lower: y1, p1_lower: p1 })
    } else {
        let y0 = wcp_y0_lower(gains.decoy1, gains.decoy2, p.v1, p.v2)?;
        let y1 = wcp_y1_lower(gains, p, y0)?;
        let p1 = wcp_p1_lower(gains, p, y0)?;
        Ok(BoundsResult { y0_lower: y0, y1_lower: y1, p1_lower: p1 })
    }
}
