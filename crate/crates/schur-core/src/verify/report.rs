//! Serializable verdicts and their CSV / JSON encodings.
//!
//! A report must be recomputable from its own stored fields: `assemble_sides`
//! is the single pure function that maps (form, n, c, K, lambda1, integrals)
//! to (LHS, RHS), used both at assembly time and by the recompute gate.
//! CSV rows carry no timing or timestamps (wall_ms is pinned to 0) so that
//! identical configs on an identical build produce bit-identical files; the
//! JSON encoding keeps the real diagnostics.

use serde::Serialize;

use super::{CSource, KConvention, KMode, VerifyError, RECOMPUTE_TOL};

/// Which printed form of a statement a report covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationForm {
    /// (nc-1)^2 int (B - Bbar)^2 <= n(n-1)(1 + nK/lambda1) int |T - (B/n)g|^2.
    Trace,
    /// (nc-1)^2 int |T - (Bbar/n)g|^2
    /// <= [(nc-1)^2 + (n-1)(1 + nK/lambda1)] int |T - (B/n)g|^2.
    FullTensor,
}

/// The three integrals every form is assembled from, plus the volume.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StoredIntegrals {
    pub volume: f64,
    /// int (B - Bbar)^2.
    pub trace_variance: f64,
    /// int |T - (B/n) g|^2.
    pub deviator: f64,
    /// int |T - (Bbar/n) g|^2.
    pub deviator_mean_trace: f64,
}

/// Hypothesis bookkeeping for one report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HypothesisFlags {
    pub ric_positive: bool,
    pub ric_nonnegative: bool,
    /// Smallest Ricci eigenvalue over all samples.
    pub ric_min: f64,
    pub c_source: CSource,
    pub c_residual: Option<f64>,
    /// div T = c grad B accepted: fit residual small enough, or prescribed.
    pub c_accepted: bool,
    /// All hypotheses of the stated theorem hold on this geometry.
    pub satisfied: bool,
}

/// Diagnostics of the Poisson step Lap f = B - Bbar and the Poincare bound
/// int |grad f|^2 <= (1/lambda1) int (B - Bbar)^2.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoissonDiagnostics {
    /// Relative linear-solve residual.
    pub residual: f64,
    pub iterations: usize,
    /// int |grad f|^2 as the Dirichlet energy of the discrete solution.
    pub dirichlet_energy: f64,
    /// (1/lambda1) int (B - Bbar)^2.
    pub poincare_bound: f64,
    /// dirichlet_energy / poincare_bound; <= 1 up to solver tolerance, with
    /// equality exactly when B - Bbar is a first eigenfunction.
    pub slack: f64,
}

/// Solver and consistency diagnostics attached to a report.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Diagnostics {
    pub timestamp_unix_ms: u64,
    pub wall_ms: u64,
    pub eigen_outer_iterations: usize,
    pub eigen_cg_iterations: usize,
    /// Largest pointwise relative defect of the cross identity.
    pub cross_identity_defect: f64,
    /// Relative defect of the c = 0 constant collapse, when checked.
    pub constant_collapse_defect: Option<f64>,
    /// Largest relative spread between the two r = 1 routes, when checked.
    pub reduction_defect: Option<f64>,
    /// Relative div T - c grad B residual, when the backend can measure it.
    pub div_residual: Option<f64>,
    pub poisson: Option<PoissonDiagnostics>,
    /// Largest frame norm |T|_g over all samples; scales the equality
    /// threshold.
    pub scale: f64,
}

/// Verdict for one inequality form on one geometry at one resolution.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub theorem: &'static str,
    pub equation: &'static str,
    pub form: EquationForm,
    pub geometry: String,
    pub resolution: String,
    pub n: usize,
    pub c: f64,
    pub convention: KConvention,
    pub k_mode: KMode,
    pub k: f64,
    pub lambda1: f64,
    /// Mean of B = tr T over the geometry (s_r and sigma_k cases included,
    /// up to their trace normalization).
    pub mean_b: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// LHS / RHS; omitted when RHS <= epsilon_eq or the statement is
    /// trivial, so 0/0 never surfaces.
    pub ratio: Option<f64>,
    /// Both sides at or below epsilon_eq.
    pub equality: bool,
    /// Both sides vanish by algebra (r = n or k = n).
    pub trivial: bool,
    /// Equality-case conclusion T = (B/n)g asserted; requires the equality
    /// flag and Ric > 0 everywhere.
    pub rigidity_asserted: bool,
    pub epsilon_eq: f64,
    pub integrals: StoredIntegrals,
    pub hypothesis: HypothesisFlags,
    pub diagnostics: Diagnostics,
}

/// Recompute (LHS, RHS) from the stored inputs.
pub fn assemble_sides(
    form: EquationForm,
    n: usize,
    c: f64,
    k: f64,
    lambda1: f64,
    integrals: &StoredIntegrals,
) -> (f64, f64) {
    let nf = n as f64;
    let prefactor = (nf * c - 1.0) * (nf * c - 1.0);
    let amplification = 1.0 + nf * k / lambda1;
    match form {
        EquationForm::Trace => (
            prefactor * integrals.trace_variance,
            nf * (nf - 1.0) * amplification * integrals.deviator,
        ),
        EquationForm::FullTensor => (
            prefactor * integrals.deviator_mean_trace,
            (prefactor + (nf - 1.0) * amplification) * integrals.deviator,
        ),
    }
}

impl InequalityReport {
    /// Recompute both sides and the derived flags from the stored fields;
    /// everything must agree with what the report carries.
    pub fn internal_gate(&self) -> Result<(), VerifyError> {
        let gate = |name: &'static str, defect: f64, tol: f64| {
            if defect > tol {
                Err(VerifyError::ConsistencyGate { gate: name, defect, tol })
            } else {
                Ok(())
            }
        };
        if !(self.lhs >= 0.0 && self.rhs >= 0.0) {
            return Err(VerifyError::ConsistencyGate {
                gate: "side-positivity",
                defect: self.lhs.min(self.rhs),
                tol: 0.0,
            });
        }
        let (lhs, rhs) = assemble_sides(
            self.form,
            self.n,
            self.c,
            self.k,
            self.lambda1,
            &self.integrals,
        );
        let den = lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE);
        gate("recompute-lhs", (lhs - self.lhs).abs() / den, RECOMPUTE_TOL)?;
        gate("recompute-rhs", (rhs - self.rhs).abs() / den, RECOMPUTE_TOL)?;
        let want_ratio = !self.trivial && self.rhs > self.epsilon_eq;
        if want_ratio != self.ratio.is_some() {
            return Err(VerifyError::ConsistencyGate {
                gate: "ratio-presence",
                defect: 1.0,
                tol: 0.0,
            });
        }
        if let Some(r) = self.ratio {
            let want = self.lhs / self.rhs;
            gate("ratio-value", (r - want).abs() / want.abs().max(1.0), RECOMPUTE_TOL)?;
        }
        let want_equality = self.lhs <= self.epsilon_eq && self.rhs <= self.epsilon_eq;
        if want_equality != self.equality {
            return Err(VerifyError::ConsistencyGate {
                gate: "equality-flag",
                defect: 1.0,
                tol: 0.0,
            });
        }
        if self.rigidity_asserted && !(self.equality && self.hypothesis.ric_positive && !self.trivial)
        {
            return Err(VerifyError::ConsistencyGate {
                gate: "rigidity-positivity",
                defect: 1.0,
                tol: 0.0,
            });
        }
        Ok(())
    }

    /// One CSV row in the fixed column order, RFC 4180 quoting.
    pub fn csv_row(&self) -> String {
        let hyp = format!(
            "ric_pos={};ric_nonneg={};c_source={};c_residual={};c_accepted={};satisfied={};trivial={}",
            self.hypothesis.ric_positive,
            self.hypothesis.ric_nonnegative,
            match self.hypothesis.c_source {
                CSource::Estimated => "estimated",
                CSource::Prescribed => "prescribed",
                CSource::Indeterminate => "indeterminate",
            },
            self.hypothesis.c_residual.map_or("na".to_owned(), fmt_f64),
            self.hypothesis.c_accepted,
            self.hypothesis.satisfied,
            self.trivial,
        );
        let cells = [
            format!("{}:{}", self.theorem, self.equation),
            self.geometry.clone(),
            self.resolution.clone(),
            self.n.to_string(),
            fmt_f64(self.c),
            self.convention.token().to_owned(),
            fmt_f64(self.k),
            fmt_f64(self.lambda1),
            fmt_f64(self.lhs),
            fmt_f64(self.rhs),
            self.ratio.map_or(String::new(), fmt_f64),
            self.equality.to_string(),
            hyp,
            // Pinned so identical configs reproduce identical bytes.
            "0".to_owned(),
        ];
        let quoted: Vec<String> = cells.iter().map(|c| csv_cell(c)).collect();
        quoted.join(",")
    }
}

/// Fixed CSV column order.
pub const CSV_HEADER: &str = "theorem,geometry,resolution,n,c,convention,K,lambda1,lhs,rhs,ratio,equality_flag,hypothesis_flags,wall_ms";

/// Shortest round-trip decimal form.
fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn csv_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// Header plus one row per report, LF line endings.
pub fn reports_to_csv(reports: &[InequalityReport]) -> String {
    let mut out = String::with_capacity(256 * (reports.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in reports {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

/// Pretty JSON array with the nested diagnostics intact.
pub fn reports_to_json(reports: &[InequalityReport]) -> serde_json::Result<String> {
    serde_json::to_string_pretty(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> InequalityReport {
        let integrals = StoredIntegrals {
            volume: 2.0,
            trace_variance: 0.5,
            deviator: 0.25,
            deviator_mean_trace: 0.375,
        };
        let n = 4;
        let (c, k, lambda1) = (0.5, 0.25, 2.0);
        let (lhs, rhs) = assemble_sides(EquationForm::Trace, n, c, k, lambda1, &integrals);
        InequalityReport {
            theorem: "thm-1.7",
            equation: "ine-r1",
            form: EquationForm::Trace,
            geometry: "torus3(2,0.5)".to_owned(),
            resolution: "res=32".to_owned(),
            n,
            c,
            convention: KConvention::TensorThm,
            k_mode: KMode::Measured,
            k,
            lambda1,
            mean_b: 1.5,
            lhs,
            rhs,
            ratio: Some(lhs / rhs),
            equality: false,
            trivial: false,
            rigidity_asserted: false,
            epsilon_eq: 1e-8,
            integrals,
            hypothesis: HypothesisFlags {
                ric_positive: false,
                ric_nonnegative: false,
                ric_min: -1.0,
                c_source: CSource::Prescribed,
                c_residual: Some(0.001),
                c_accepted: true,
                satisfied: true,
            },
            diagnostics: Diagnostics {
                timestamp_unix_ms: 1_700_000_000_000,
                wall_ms: 37,
                eigen_outer_iterations: 12,
                eigen_cg_iterations: 480,
                cross_identity_defect: 1e-15,
                constant_collapse_defect: None,
                reduction_defect: None,
                div_residual: Some(0.001),
                poisson: None,
                scale: 1.0,
            },
        }
    }

    /// Split one CSV row respecting RFC 4180 quoting.
    fn split_row(row: &str) -> Vec<String> {
        let mut cells = Vec::new();
        let mut cur = String::new();
        let mut quoted = false;
        let mut chars = row.chars().peekable();
        while let Some(ch) = chars.next() {
            if quoted {
                if ch == '"' {
                    if chars.peek() == Some(&'"') {
                        chars.next();
                        cur.push('"');
                    } else {
                        quoted = false;
                    }
                } else {
                    cur.push(ch);
                }
            } else if ch == '"' {
                quoted = true;
            } else if ch == ',' {
                cells.push(std::mem::take(&mut cur));
            } else {
                cur.push(ch);
            }
        }
        cells.push(cur);
        cells
    }

    #[test]
    fn trace_and_full_assembly_match_hand_values() {
        let ints = StoredIntegrals {
            volume: 1.0,
            trace_variance: 2.0,
            deviator: 3.0,
            deviator_mean_trace: 4.0,
        };
        let (lhs, rhs) = assemble_sides(EquationForm::Trace, 3, 0.0, 0.0, 1.0, &ints);
        assert_eq!((lhs, rhs), (2.0, 18.0));
        let (lhs, rhs) = assemble_sides(EquationForm::FullTensor, 3, 0.0, 0.0, 1.0, &ints);
        assert_eq!((lhs, rhs), (4.0, 9.0));
        // K amplifies through nK/lambda1.
        let (_, rhs) = assemble_sides(EquationForm::Trace, 3, 0.0, 2.0, 3.0, &ints);
        assert_eq!(rhs, 6.0 * 3.0 * 3.0);
    }

    #[test]
    fn csv_row_has_header_arity_and_quotes_commas() {
        let r = sample_report();
        let row = r.csv_row();
        let cells = split_row(&row);
        assert_eq!(cells.len(), CSV_HEADER.split(',').count());
        assert_eq!(cells[0], "thm-1.7:ine-r1");
        assert_eq!(cells[1], "torus3(2,0.5)");
        assert!(row.contains("\"torus3(2,0.5)\""));
        assert_eq!(cells[5], "tensor-thm");
        // Wall time is pinned in CSV regardless of the stored value.
        assert_eq!(cells[13], "0");
    }

    #[test]
    fn ratio_cell_is_empty_when_absent() {
        let mut r = sample_report();
        r.ratio = None;
        r.trivial = true;
        let cells = split_row(&r.csv_row());
        assert_eq!(cells[10], "");
        assert!(cells[12].contains("trivial=true"));
    }

    #[test]
    fn csv_output_is_reproducible_across_timing_jitter() {
        let mut a = sample_report();
        let mut b = sample_report();
        a.diagnostics.wall_ms = 1;
        b.diagnostics.wall_ms = 9999;
        a.diagnostics.timestamp_unix_ms = 1;
        b.diagnostics.timestamp_unix_ms = 2;
        assert_eq!(reports_to_csv(&[a]), reports_to_csv(&[b]));
    }

    #[test]
    fn internal_gate_accepts_consistent_reports() {
        sample_report().internal_gate().unwrap();
    }

    #[test]
    fn internal_gate_rejects_mutated_sides() {
        let mut r = sample_report();
        r.lhs *= 1.0 + 1e-9;
        let err = r.internal_gate().unwrap_err();
        assert!(matches!(err, VerifyError::ConsistencyGate { gate: "recompute-lhs", .. }));
    }

    #[test]
    fn internal_gate_rejects_wrong_flags() {
        let mut r = sample_report();
        r.ratio = None;
        assert!(r.internal_gate().is_err());

        let mut r = sample_report();
        r.equality = true;
        assert!(r.internal_gate().is_err());

        let mut r = sample_report();
        r.rigidity_asserted = true;
        assert!(matches!(
            r.internal_gate().unwrap_err(),
            VerifyError::ConsistencyGate { gate: "rigidity-positivity", .. }
        ));

        let mut r = sample_report();
        r.lhs = -1.0;
        assert!(r.internal_gate().is_err());
    }

    #[test]
    fn json_keeps_nested_diagnostics_and_kebab_tokens() {
        let r = sample_report();
        let json = reports_to_json(std::slice::from_ref(&r)).unwrap();
        assert!(json.contains("\"diagnostics\""));
        assert!(json.contains("\"tensor-thm\""));
        assert!(json.contains("\"wall_ms\": 37"));
        assert!(json.contains("\"poincare_bound\"") || json.contains("\"poisson\": null"));
    }
}
