//! CSV rows and key-value records.

use std::io::Write;

use rbsp_core::PlanResult;

/// Nine significant digits, `inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.8e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub const HEADER: [&str; 13] =
    ["curve", "source", "L", "mu", "T", "Q_mu", "Q_v1", "Q_v2", "p1", "m", "N", "S_over_N", "plateau_flag"];

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub curve: String,
    pub length_km: f64,
    pub plateau: bool,
    pub plan: PlanResult,
}

impl Row {
    fn fields(&self) -> [String; 13] {
        let p = &self.plan;
        [
            self.curve.clone(),
            p.source.label().to_string(),
            num(self.length_km),
            num(p.protocol.mu),
            num(p.transmittance),
            num(p.gains.signal),
            num(p.gains.decoy1),
            num(p.gains.decoy2),
            num(p.p1),
            p.m_min.map_or_else(|| "inf".to_string(), |m| m.to_string()),
            num(p.n_min),
            num(p.efficiency),
            u8::from(self.plateau).to_string(),
        ]
    }
}

/// Writes the header and all rows with LF line endings.
pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(HEADER)?;
    for r in rows {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

/// Human-readable `key = value` block for one plan.
pub fn key_values(plan: &PlanResult, length_km: f64, error_rate: Option<f64>) -> String {
    let mut lines = vec![
        ("source", plan.source.label().to_string()),
        ("mode", crate::config::mode_name(plan.mode).to_string()),
        ("L_km", num(length_km)),
        ("mu", num(plan.protocol.mu)),
        ("v1", num(plan.protocol.v1)),
        ("v2", num(plan.protocol.v2)),
        ("T", num(plan.transmittance)),
        ("Q_mu", num(plan.gains.signal)),
        ("Q_v1", num(plan.gains.decoy1)),
        ("Q_v2", num(plan.gains.decoy2)),
        ("Y0_lower", num(plan.bounds.y0_lower)),
        ("Y1_lower", num(plan.bounds.y1_lower)),
        ("p1", num(plan.p1)),
        ("m_real", num(plan.m_real)),
        ("m", plan.m_min.map_or_else(|| "inf".to_string(), |m| m.to_string())),
        ("size", plan.size.to_string()),
        ("N", num(plan.n_min)),
        ("S_over_N", num(plan.efficiency)),
        ("p_fail_group", num(plan.p_fail_group)),
        ("p_fail_total_bound", num(plan.p_fail_total_bound)),
    ];
    if let Some(e) = error_rate {
        lines.push(("E_mu", num(e)));
    }
    lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}
