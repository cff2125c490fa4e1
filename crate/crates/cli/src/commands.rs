//! Subcommand bodies. Each returns the text to emit so the binary stays a
//! thin wrapper and tests can call them directly.

use rayon::prelude::*;
use rbsp_core::channel_model::error_rate_hsps;
use rbsp_core::i1dc_sim::{adjacent_outcome_rule, suffix_parity_rule, verify_i1dc, PhaseSelection, VerifyReport};
use rbsp_core::rbsp_planner::{
    dark_floor, is_dark_dominated, plan, sweep_distance as core_sweep_distance, sweep_mu as core_sweep_mu,
};
use rbsp_core::{GainMode, MuGrid, PlanResult};
use serde_json::json;

use crate::config::{RunConfig, SourceKind};
use crate::presets::{FigurePreset, SweepKind};
use crate::report::{self, key_values, num, Row};
use crate::CliError;

/// Plan at the configured scalar intensity and length, in the configured
/// mode and optionally the other one too.
pub fn estimate(cfg: &RunConfig, both_modes: bool, as_json: bool) -> Result<String, CliError> {
    cfg.validate(true)?;
    let source = cfg.source_model()?;
    let link = cfg.channel().link();
    let mut modes = vec![cfg.mode];
    if both_modes {
        modes.push(match cfg.mode {
            GainMode::Exact => GainMode::PaperApprox,
            GainMode::PaperApprox => GainMode::Exact,
        });
    }
    let mut results: Vec<(PlanResult, Option<f64>)> = Vec::new();
    for mode in modes {
        let p = plan(&source, &link, &cfg.protocol(), mode, cfg.size)?;
        let e = match cfg.source {
            SourceKind::Hsps => Some(error_rate_hsps(&source, &link, &cfg.error_model(), mode)?),
            SourceKind::Wcp => None,
        };
        results.push((p, e));
    }
    if as_json {
        let entries: Vec<_> = results.iter().map(|(p, e)| json!({ "plan": p, "error_rate": e })).collect();
        let record = json!({ "length_km": cfg.length, "results": entries });
        Ok(serde_json::to_string_pretty(&record).map_err(|e| CliError::Output(e.to_string()))? + "\n")
    } else {
        let blocks: Vec<String> = results.iter().map(|(p, e)| key_values(p, cfg.length, *e)).collect();
        Ok(blocks.join("\n"))
    }
}

fn resolve_grid(cfg: &RunConfig) -> Result<MuGrid, CliError> {
    let Some(points) = &cfg.mu_grid else {
        return Ok(MuGrid::default());
    };
    let bad =
        || CliError::Validation(vec!["mu_grid must be an evenly spaced increasing list for distance sweeps".into()]);
    match points.as_slice() {
        [] => Err(CliError::Core(rbsp_core::Error::EmptyGrid)),
        [only] => Ok(MuGrid { lower: Some(*only), upper: *only, step: 1.0, ..MuGrid::default() }),
        [first, second, ..] => {
            let step = second - first;
            let even = points.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
            if step > 0.0 && even {
                Ok(MuGrid { lower: Some(*first), upper: *points.last().unwrap(), step, ..MuGrid::default() })
            } else {
                Err(bad())
            }
        }
    }
}

/// `S/N` over the intensity grid at the configured length.
pub fn sweep_mu(cfg: &RunConfig, label: &str) -> Result<Vec<Row>, CliError> {
    cfg.validate(false)?;
    let source = cfg.source_model()?;
    let link = cfg.channel().link();
    let protocol = cfg.protocol();
    let mus = match &cfg.mu_grid {
        Some(m) => m.clone(),
        None => MuGrid::default().points(&protocol),
    };
    if let Some(mu) = mus.iter().find(|&&mu| mu <= protocol.v1 + protocol.v2) {
        return Err(CliError::Validation(vec![format!("grid intensity {mu} does not exceed v1 + v2")]));
    }
    let plans = core_sweep_mu(&source, &link, &protocol, cfg.mode, cfg.size, &mus)?;
    plans
        .into_iter()
        .map(|plan| {
            let floor = dark_floor(&plan, &link)?;
            Ok(Row { curve: label.to_string(), length_km: cfg.length, plateau: is_dark_dominated(&plan, floor), plan })
        })
        .collect()
}

/// Best `S/N` at each configured length (`lengths`, or the single `length`).
pub fn sweep_distance(cfg: &RunConfig, label: &str) -> Result<Vec<Row>, CliError> {
    cfg.validate(false)?;
    let source = cfg.source_model()?;
    let grid = resolve_grid(cfg)?;
    let lengths = cfg.lengths.clone().unwrap_or_else(|| vec![cfg.length]);
    let rows = core_sweep_distance(&source, &cfg.channel(), &cfg.protocol(), cfg.mode, cfg.size, &grid, &lengths)?;
    Ok(rows
        .into_iter()
        .map(|r| Row { curve: label.to_string(), length_km: r.length_km, plateau: r.plateau_flag, plan: r.plan })
        .collect())
}

/// All curves of a figure preset, in curve order.
pub fn preset(fig: FigurePreset) -> Result<Vec<Row>, CliError> {
    let per_curve: Vec<Result<Vec<Row>, CliError>> = fig
        .curves()
        .par_iter()
        .map(|c| match fig.kind() {
            SweepKind::Intensity => sweep_mu(&c.config, &c.label),
            SweepKind::Distance => sweep_distance(&c.config, &c.label),
        })
        .collect();
    let mut rows = Vec::new();
    for r in per_curve {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn csv_string(rows: &[Row]) -> Result<String, CliError> {
    let mut buf = Vec::new();
    report::write_csv(&mut buf, rows).map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| CliError::Output(e.to_string()))
}

/// Options of the merging-chain check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub k: usize,
    pub exhaustive: bool,
    pub trials: usize,
    pub seed: u64,
    /// Checks the deliberately wrong phase rule, which must fail.
    pub mutant_rule: bool,
}

/// Runs the check and returns the report text and whether it passed.
pub fn verify(opts: VerifyOptions) -> Result<(String, bool), CliError> {
    let selection = if opts.exhaustive {
        PhaseSelection::Exhaustive
    } else {
        PhaseSelection::Random { trials: opts.trials, seed: opts.seed }
    };
    let rule = if opts.mutant_rule { adjacent_outcome_rule } else { suffix_parity_rule };
    let report = verify_i1dc(opts.k, selection, rule).map_err(|e| match e {
        rbsp_core::Error::Domain(msg) => CliError::Validation(vec![msg]),
        other => CliError::Core(other),
    })?;
    Ok((render_verify(&report), report.passed()))
}

fn render_verify(r: &VerifyReport) -> String {
    let mut out = format!(
        "k = {}\nphase_tuples = {}\ncases = {}\nmin_fidelity = {}\nmax_step_bias = {}\nresult = {}\n",
        r.k,
        r.phase_tuples,
        r.cases,
        num(r.min_fidelity),
        num(r.max_step_bias),
        if r.passed() { "pass" } else { "fail" }
    );
    for f in &r.failures {
        let phases: Vec<String> = f.phases.iter().map(|p| p.to_string()).collect();
        let bits: String = f.outcomes.iter().map(|&b| if b { '1' } else { '0' }).collect();
        out += &format!(
            "failure phases=[{}] outcomes={} predicted_theta={} fidelity={} max_step_bias={}\n",
            phases.join(","),
            bits,
            f.predicted_theta,
            num(f.fidelity),
            num(f.max_step_bias)
        );
    }
    out
}
