//! Uniform residual reports.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct ReportItem {
    pub id: String,
    pub indices: Vec<i64>,
    pub residual: f64,
}

/// One check: a named family of residuals against a pinned tolerance.
/// `pass` holds exactly when `max_residual < tol`. `logs` carries
/// informational residuals (known display discrepancies, skipped samples)
/// that never influence the verdict.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub check: String,
    pub measure: String,
    pub blocks: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_residual: f64,
    pub pass: bool,
    pub items: Vec<ReportItem>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub logs: Vec<ReportItem>,
}

pub struct ReportBuilder {
    check: String,
    measure: String,
    blocks: usize,
    seed: u64,
    tol: f64,
    items: Vec<ReportItem>,
    logs: Vec<ReportItem>,
}

impl ReportBuilder {
    pub fn new(check: &str, measure: &str, blocks: usize, seed: u64, tol: f64) -> Self {
        ReportBuilder {
            check: check.to_string(),
            measure: measure.to_string(),
            blocks,
            seed,
            tol,
            items: Vec::new(),
            logs: Vec::new(),
        }
    }

    pub fn item(&mut self, id: impl Into<String>, indices: Vec<i64>, residual: f64) -> &mut Self {
        self.items.push(ReportItem { id: id.into(), indices, residual });
        self
    }

    pub fn items_named(&mut self, pairs: impl IntoIterator<Item = (String, f64)>) -> &mut Self {
        for (id, residual) in pairs {
            self.items.push(ReportItem { id, indices: vec![], residual });
        }
        self
    }

    pub fn log(&mut self, id: impl Into<String>, indices: Vec<i64>, residual: f64) -> &mut Self {
        self.logs.push(ReportItem { id: id.into(), indices, residual });
        self
    }

    pub fn finish(self) -> Report {
        let max_residual = self.items.iter().map(|i| i.residual).fold(0.0, f64::max);
        Report {
            check: self.check,
            measure: self.measure,
            blocks: self.blocks,
            seed: self.seed,
            tol: self.tol,
            max_residual,
            pass: max_residual < self.tol,
            items: self.items,
            logs: self.logs,
        }
    }
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// First failing item, if any.
    pub fn first_failure(&self) -> Option<&ReportItem> {
        self.items.iter().find(|i| i.residual >= self.tol)
    }

    pub fn to_csv_rows(&self) -> String {
        let mut out = String::new();
        for item in &self.items {
            let idx = item
                .indices
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(&format!(
                "{},{},{},{:e},{:e},{},{},{},{:e}\n",
                self.check,
                self.measure,
                self.blocks,
                self.tol,
                self.max_residual,
                self.pass,
                item.id,
                idx,
                item.residual
            ));
        }
        out
    }
}

pub const CSV_HEADER: &str =
    "check,measure,blocks,tol,max_residual,pass,item_id,indices,residual\n";
