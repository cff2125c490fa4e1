//! Frozen configurations that regenerate the figure data sets.

use std::str::FromStr;

use crate::config::{RunConfig, SourceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigurePreset {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

/// What a preset sweeps over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// `S/N` against the signal intensity at a fixed length.
    Intensity,
    /// Best `S/N` against fiber length, optimizing the intensity per length.
    Distance,
}

/// One labelled curve of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub config: RunConfig,
}

impl FromStr for FigurePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fig1" => Ok(Self::Fig1),
            "fig2" => Ok(Self::Fig2),
            "fig3" => Ok(Self::Fig3),
            "fig4" => Ok(Self::Fig4),
            "fig5" => Ok(Self::Fig5),
            "fig6" => Ok(Self::Fig6),
            other => Err(format!("unknown preset `{other}` (fig1 ... fig6)")),
        }
    }
}

fn lengths(stop: f64, step: f64) -> Vec<f64> {
    let n = (stop / step).round() as usize;
    (0..=n).map(|k| k as f64 * step).collect()
}

fn wcp() -> Curve {
    Curve { label: "wcp".into(), config: RunConfig::default() }
}

fn hsps(eta_a: f64, dark_a: f64) -> Curve {
    Curve {
        label: format!("hsps_eta{eta_a}_d{dark_a:e}"),
        config: RunConfig { source: SourceKind::Hsps, eta_a, dark_a, ..RunConfig::default() },
    }
}

impl FigurePreset {
    pub fn kind(self) -> SweepKind {
        match self {
            Self::Fig1 | Self::Fig2 => SweepKind::Intensity,
            _ => SweepKind::Distance,
        }
    }

    pub fn curves(self) -> Vec<Curve> {
        let (curves, ls) = match self {
            Self::Fig1 => (vec![wcp(), hsps(0.85, 1e-8)], None),
            Self::Fig2 => (vec![wcp(), hsps(0.04, 1e-12)], None),
            Self::Fig3 => (vec![wcp(), hsps(0.85, 1e-8)], Some(lengths(200.0, 5.0))),
            Self::Fig4 => (vec![wcp(), hsps(0.85, 1e-8)], Some(lengths(1000.0, 10.0))),
            Self::Fig5 => (vec![wcp(), hsps(1.0, 1e-8)], Some(lengths(300.0, 5.0))),
            Self::Fig6 => (vec![wcp(), hsps(0.85, 1e-8), hsps(1.0, 1e-12)], Some(lengths(1000.0, 10.0))),
        };
        curves
            .into_iter()
            .map(|mut c| {
                c.config.lengths = ls.clone();
                c
            })
            .collect()
    }
}
