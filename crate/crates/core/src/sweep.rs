//! Parameter sweeps: a serializable grid configuration, flat result rows,
//! and deterministic CSV/JSON renderers (byte-identical across reruns).
//!
//! Sweep rows combine the cheap simulation track (heralding and channel
//! entanglement in exact coherent algebra) with the closed-form recovery
//! quantities; the full number-basis recovery is exercised by `validate` and
//! the test suite, which pin the closed forms to it.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::cavity::JcParams;
use crate::coherent::{ecs_concurrence, EcsPair};
use crate::error::{Error, Result};
use crate::formulas::{
    atom_lower_probability, atom_upper_probability, avg_fidelity_closed_form,
    avg_fidelity_scalar, exact_sums, family_conditionals,
};
use crate::pipeline::EvalParams;
use crate::protocol::{
    build_channel, case_i_fidelity, sender_stage_with_channel, CaseLabel, FamilySign,
    MODE_CH_RECEIVER, MODE_CH_SENDER,
};

/// Default figure set emitted by the figure command.
pub const FIGURE_NAMES: [&str; 7] = [
    "fig1_concurrence",
    "fig2_case_i_prob",
    "fig3_branch_probs",
    "fig5_vnm_probs",
    "fig6_fidelity_A",
    "fig7_fidelity_Cl",
    "fig8_avg_fidelity",
];

/// Output encoding for sweep results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// A sweep definition: the parameter grids, numerical tail bound, which
/// figure files to emit, and the tabular output encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub alpha_sq_grid: Vec<f64>,
    pub theta_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    pub truncation_tail: f64,
    pub outputs: Vec<String>,
    pub format: OutputFormat,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alpha_sq_grid: (1..=60).map(|i| 0.5 * i as f64).collect(),
            theta_grid: (0..=8).map(|i| i as f64 * PI / 8.0).collect(),
            phi_grid: vec![0.0, FRAC_PI_2],
            truncation_tail: crate::fock::DEFAULT_TAIL_BOUND,
            outputs: FIGURE_NAMES.iter().map(|s| s.to_string()).collect(),
            format: OutputFormat::Csv,
        }
    }
}

impl SweepConfig {
    /// Reject configurations the evaluators cannot honor.
    pub fn validate(&self) -> Result<()> {
        if self.alpha_sq_grid.is_empty() || self.theta_grid.is_empty() || self.phi_grid.is_empty()
        {
            return Err(Error::InvalidInput(
                "sweep grids must be non-empty".into(),
            ));
        }
        for &a in &self.alpha_sq_grid {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "mean photon numbers must be finite and > 0, got {a}"
                )));
            }
        }
        for &t in self.theta_grid.iter().chain(&self.phi_grid) {
            if !t.is_finite() {
                return Err(Error::InvalidInput(format!("angle {t} is not finite")));
            }
        }
        if !(self.truncation_tail > 0.0 && self.truncation_tail <= 1e-6) {
            return Err(Error::InvalidInput(format!(
                "truncation tail must lie in (0, 1e-6], got {}",
                self.truncation_tail
            )));
        }
        for name in &self.outputs {
            if !FIGURE_NAMES.contains(&name.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "unknown output {name}; known outputs: {}",
                    FIGURE_NAMES.join(", ")
                )));
            }
        }
        Ok(())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: SweepConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("bad sweep config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep config serializes")
    }
}

/// One flat result row. Situation probabilities are conditional on the
/// heralded branch; herald probabilities are per branch (each family has
/// two equal branches).
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub alpha_sq: f64,
    pub theta: f64,
    pub phi: f64,
    pub x: f64,
    pub p_i0: f64,
    pub concurrence: f64,
    pub p_case_i: f64,
    pub p_nze_each: f64,
    pub p_odd_each: f64,
    pub case_i_fidelity: f64,
    pub minus_p_atom_lower: f64,
    pub minus_p_atom_upper: f64,
    pub minus_p_a: f64,
    pub minus_f_a: f64,
    pub minus_p_b: f64,
    pub minus_f_b: f64,
    pub minus_p_c_lower: f64,
    pub minus_f_c_lower: f64,
    pub minus_p_c_upper: f64,
    pub minus_f_c_upper: f64,
    pub plus_p_atom_lower: f64,
    pub plus_p_atom_upper: f64,
    pub plus_p_a: f64,
    pub plus_f_a: f64,
    pub plus_p_b: f64,
    pub plus_f_b: f64,
    pub plus_p_c_lower: f64,
    pub plus_f_c_lower: f64,
    pub plus_p_c_upper: f64,
    pub plus_f_c_upper: f64,
    pub f_avg_exact: f64,
    pub f_avg_semi_closed_printed: f64,
    pub f_avg_expanded_printed: f64,
    pub f_avg_asymptotic: f64,
}

/// Evaluate one grid point into a row.
fn evaluate_row(params: &EvalParams) -> Result<SweepRow> {
    let info = params.information()?;
    let channel = build_channel(info.alpha(), MODE_CH_SENDER, MODE_CH_RECEIVER)?;
    let concurrence = ecs_concurrence(&EcsPair::from_superposition(&channel)?)?;
    let sender = sender_stage_with_channel(&info, &channel)?;
    let case_i = sender.branch(CaseLabel::I);

    let jc = JcParams::resonant_half_pi(info.alpha())?;
    let sums = exact_sums(&info, &jc);
    let minus = family_conditionals(&sums, FamilySign::Minus);
    let plus = family_conditionals(&sums, FamilySign::Plus);
    let closed = avg_fidelity_closed_form(&info, &sums)?;

    Ok(SweepRow {
        alpha_sq: params.alpha_sq,
        theta: params.theta,
        phi: params.phi,
        x: info.x(),
        p_i0: info.p_i0(),
        concurrence,
        p_case_i: case_i.probability,
        p_nze_each: sender.branch(CaseLabel::II).probability,
        p_odd_each: sender.branch(CaseLabel::IV).probability,
        case_i_fidelity: case_i_fidelity(&info, case_i)?,
        minus_p_atom_lower: atom_lower_probability(&sums, FamilySign::Minus),
        minus_p_atom_upper: atom_upper_probability(&sums, FamilySign::Minus),
        minus_p_a: minus.p_a,
        minus_f_a: minus.f_a,
        minus_p_b: minus.p_b,
        minus_f_b: minus.f_b,
        minus_p_c_lower: minus.p_c_lower,
        minus_f_c_lower: minus.f_c_lower,
        minus_p_c_upper: minus.p_c_upper,
        minus_f_c_upper: minus.f_c_upper,
        plus_p_atom_lower: atom_lower_probability(&sums, FamilySign::Plus),
        plus_p_atom_upper: atom_upper_probability(&sums, FamilySign::Plus),
        plus_p_a: plus.p_a,
        plus_f_a: plus.f_a,
        plus_p_b: plus.p_b,
        plus_f_b: plus.f_b,
        plus_p_c_lower: plus.p_c_lower,
        plus_f_c_lower: plus.f_c_lower,
        plus_p_c_upper: plus.p_c_upper,
        plus_f_c_upper: plus.f_c_upper,
        f_avg_exact: avg_fidelity_scalar(&info, &sums),
        f_avg_semi_closed_printed: closed.semi_closed_printed,
        f_avg_expanded_printed: closed.expanded_printed,
        f_avg_asymptotic: closed.asymptotic,
    })
}

/// Evaluate the whole grid in deterministic order (α², then θ, then φ).
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let mut rows =
        Vec::with_capacity(config.alpha_sq_grid.len() * config.theta_grid.len() * config.phi_grid.len());
    for &alpha_sq in &config.alpha_sq_grid {
        for &theta in &config.theta_grid {
            for &phi in &config.phi_grid {
                let params =
                    EvalParams::new(alpha_sq, theta, phi).with_tail(config.truncation_tail);
                rows.push(evaluate_row(&params)?);
            }
        }
    }
    Ok(rows)
}

/// Every number in every row must be finite; rendered tables must never
/// carry NaN or infinities.
fn assert_finite_rows(rows: &[SweepRow]) -> Result<()> {
    let value = serde_json::to_value(rows)
        .map_err(|e| Error::Invariant(format!("rows not serializable: {e}")))?;
    fn walk(v: &serde_json::Value, path: &str) -> Result<()> {
        match v {
            // serde_json maps non-finite floats to null.
            serde_json::Value::Null => Err(Error::Invariant(format!(
                "non-finite value at {path}"
            ))),
            serde_json::Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    walk(item, &format!("{path}[{i}]"))?;
                }
                Ok(())
            }
            serde_json::Value::Object(map) => {
                for (k, item) in map {
                    walk(item, &format!("{path}.{k}"))?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
    walk(&value, "rows")
}

/// Reject any rendered numeric table containing non-finite cells.
fn assert_finite_table(text: &str) -> Result<()> {
    for (i, line) in text.lines().enumerate().skip(1) {
        for cell in line.split(',') {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Invariant(format!("non-numeric cell {cell:?} on data line {i}"))
            })?;
            if !v.is_finite() {
                return Err(Error::Invariant(format!(
                    "non-finite cell {cell:?} on data line {i}"
                )));
            }
        }
    }
    Ok(())
}

/// Render rows as CSV (headers from the field names, shortest round-trip
/// float formatting, `\n` terminators).
pub fn render_csv(rows: &[SweepRow]) -> Result<String> {
    assert_finite_rows(rows)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        writer
            .serialize(row)
            .map_err(|e| Error::InvalidInput(format!("csv encoding failed: {e}")))?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::InvalidInput(format!("csv flush failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(format!("csv not utf-8: {e}")))
}

/// Render rows as pretty JSON with a trailing newline.
pub fn render_json(rows: &[SweepRow]) -> Result<String> {
    assert_finite_rows(rows)?;
    let mut text = serde_json::to_string_pretty(rows)
        .map_err(|e| Error::InvalidInput(format!("json encoding failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Render one named figure as CSV text. Amplitude scans use the config's
/// grid; angle-resolved figures use the config's θ grid at its first φ.
pub fn render_figure(name: &str, config: &SweepConfig) -> Result<String> {
    config.validate()?;
    let phi = config.phi_grid[0];
    let tail = config.truncation_tail;
    match name {
        "fig1_concurrence" => {
            let mut rows = Vec::new();
            for &a in &config.alpha_sq_grid {
                let x = (-a).exp();
                rows.push(vec![
                    fmt(a),
                    fmt(crate::formulas::concurrence_closed_form(x)),
                ]);
            }
            Ok(csv_table(&["alpha_sq", "concurrence"], &rows))
        }
        "fig2_case_i_prob" => {
            let mut rows = Vec::new();
            for &a in &config.alpha_sq_grid {
                let params = EvalParams::new(a, FRAC_PI_2, 0.0).with_tail(tail);
                let row = evaluate_row(&params)?;
                rows.push(vec![fmt(a), fmt(row.p_case_i), fmt(row.case_i_fidelity)]);
            }
            Ok(csv_table(
                &["alpha_sq", "p_case_i", "case_i_fidelity"],
                &rows,
            ))
        }
        "fig3_branch_probs" => {
            let mut rows = Vec::new();
            for &a in &config.alpha_sq_grid {
                let params = EvalParams::new(a, FRAC_PI_2, 0.0).with_tail(tail);
                let row = evaluate_row(&params)?;
                rows.push(vec![
                    fmt(a),
                    fmt(row.p_case_i),
                    fmt(row.p_nze_each),
                    fmt(row.p_odd_each),
                ]);
            }
            Ok(csv_table(
                &["alpha_sq", "p_case_i", "p_nze_each", "p_odd_each"],
                &rows,
            ))
        }
        "fig5_vnm_probs" => {
            // Joint probabilities of (family, first-atom readout): the herald
            // weight of both branches of the family times the conditional.
            let mut rows = Vec::new();
            for &a in &config.alpha_sq_grid {
                let params = EvalParams::new(a, FRAC_PI_2, 0.0).with_tail(tail);
                let row = evaluate_row(&params)?;
                let w_minus = 2.0 * row.p_nze_each;
                let w_plus = 2.0 * row.p_odd_each;
                rows.push(vec![
                    fmt(a),
                    fmt(w_minus * row.minus_p_atom_lower),
                    fmt(w_minus * row.minus_p_atom_upper),
                    fmt(w_plus * row.plus_p_atom_lower),
                    fmt(w_plus * row.plus_p_atom_upper),
                ]);
            }
            Ok(csv_table(
                &[
                    "alpha_sq",
                    "p_joint_lower_minus",
                    "p_joint_upper_minus",
                    "p_joint_lower_plus",
                    "p_joint_upper_plus",
                ],
                &rows,
            ))
        }
        "fig6_fidelity_A" => {
            let mut rows = Vec::new();
            for &a in &config.alpha_sq_grid {
                let params = EvalParams::new(a, FRAC_PI_2, 0.0).with_tail(tail);
                let row = evaluate_row(&params)?;
                rows.push(vec![fmt(a), fmt(row.minus_f_a), fmt(row.plus_f_a)]);
            }
            Ok(csv_table(&["alpha_sq", "f_a_minus", "f_a_plus"], &rows))
        }
        "fig7_fidelity_Cl" => {
            let mut rows = Vec::new();
            for &a in &config.alpha_sq_grid {
                for &theta in &config.theta_grid {
                    let params = EvalParams::new(a, theta, phi).with_tail(tail);
                    let row = evaluate_row(&params)?;
                    rows.push(vec![
                        fmt(a),
                        fmt(theta),
                        fmt(row.minus_p_c_lower),
                        fmt(row.minus_f_c_lower),
                        fmt(row.minus_f_c_upper),
                    ]);
                }
            }
            Ok(csv_table(
                &[
                    "alpha_sq",
                    "theta",
                    "p_c_lower_minus",
                    "f_c_lower",
                    "f_c_upper",
                ],
                &rows,
            ))
        }
        "fig8_avg_fidelity" => {
            let mut rows = Vec::new();
            for &a in &config.alpha_sq_grid {
                for &theta in &config.theta_grid {
                    let params = EvalParams::new(a, theta, phi).with_tail(tail);
                    let row = evaluate_row(&params)?;
                    rows.push(vec![
                        fmt(a),
                        fmt(theta),
                        fmt(row.f_avg_exact),
                        fmt(row.f_avg_asymptotic),
                    ]);
                }
            }
            Ok(csv_table(
                &["alpha_sq", "theta", "f_avg_exact", "f_avg_asymptotic"],
                &rows,
            ))
        }
        other => Err(Error::InvalidInput(format!(
            "unknown figure {other}; known figures: {}",
            FIGURE_NAMES.join(", ")
        ))),
    }
}

/// Render every figure the config requests, in its `outputs` order.
pub fn render_figures(config: &SweepConfig) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    for name in &config.outputs {
        let table = render_figure(name, config)?;
        assert_finite_table(&table)?;
        files.push((format!("{name}.csv"), table));
    }
    Ok(files)
}
