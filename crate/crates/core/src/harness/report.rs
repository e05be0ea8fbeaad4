//! Accuracy indices, selection heatmaps and run-level invariants.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::procedures::Procedure;
use super::run::ReplicationRecord;
use crate::error::{Error, Result};
use crate::models::{ModelIndex, Split};

/// Label of the oracle pseudo-procedure in record rows.
pub const ORACLE: &str = "oracle";

/// One row of `records.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordRow {
    pub replication: u64,
    pub procedure: String,
    pub c_ov: Option<f64>,
    pub model: String,
    /// Set for two-regime models split at 1/2; `0` for the constant model.
    pub d1: Option<usize>,
    pub d2: Option<usize>,
    pub dim: usize,
    pub loss: f64,
    pub oracle_loss: f64,
}

impl RecordRow {
    fn new(replication: u64, procedure: String, c_ov: Option<f64>, model: ModelIndex, loss: f64, oracle_loss: f64) -> Self {
        let (d1, d2) = match model {
            ModelIndex::Constant => (Some(0), Some(0)),
            ModelIndex::TwoRegime { d1, d2, split } if split == Split::HALF => (Some(d1), Some(d2)),
            _ => (None, None),
        };
        Self { replication, procedure, c_ov, model: model.to_string(), d1, d2, dim: model.dim(), loss, oracle_loss }
    }

    /// Procedure label, e.g. `pen-loo*2`.
    pub fn label(&self) -> String {
        match self.c_ov {
            Some(c) => format!("{}*{}", self.procedure, c),
            None => self.procedure.clone(),
        }
    }
}

impl ReplicationRecord {
    /// Oracle row followed by one row per procedure.
    pub fn rows(&self) -> Vec<RecordRow> {
        let mut out = vec![RecordRow::new(self.replication, ORACLE.into(), None, self.oracle, self.oracle_loss, self.oracle_loss)];
        out.extend(self.selections.iter().map(|s| {
            RecordRow::new(self.replication, s.procedure.name(), s.procedure.c_ov(), s.model, s.loss, self.oracle_loss)
        }));
        out
    }
}

/// Rows of every record, in replication order.
pub fn record_rows(records: &[ReplicationRecord]) -> Vec<RecordRow> {
    records.iter().flat_map(|r| r.rows()).collect()
}

/// `C_or` with its uncertainty for one procedure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorEntry {
    pub procedure: String,
    #[serde(rename = "C_ov")]
    pub c_ov: Option<f64>,
    #[serde(rename = "C_or")]
    pub c_or: f64,
    /// `None` with a single replication.
    pub epsilon: Option<f64>,
}

impl CorEntry {
    pub fn label(&self) -> String {
        match self.c_ov {
            Some(c) => format!("{}*{}", self.procedure, c),
            None => self.procedure.clone(),
        }
    }
}

/// `C_or = mean(loss) / mean(oracle loss)` and
/// `epsilon = sd(loss) / (sqrt(N) mean(oracle loss))` over the rows of `label`.
pub fn compute_cor(rows: &[RecordRow], label: &str) -> Result<CorEntry> {
    let sel: Vec<&RecordRow> = rows.iter().filter(|r| r.label() == label).collect();
    if sel.is_empty() {
        return Err(Error::InvalidConfig(format!("no records for procedure `{label}`")));
    }
    let n = sel.len() as f64;
    let mean_loss = sel.iter().map(|r| r.loss).sum::<f64>() / n;
    let mean_oracle = sel.iter().map(|r| r.oracle_loss).sum::<f64>() / n;
    if !(mean_oracle > 0.0) {
        return Err(Error::ZeroOracleLoss);
    }
    let epsilon = (sel.len() >= 2).then(|| {
        let var = sel.iter().map(|r| (r.loss - mean_loss).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / (n.sqrt() * mean_oracle)
    });
    Ok(CorEntry {
        procedure: sel[0].procedure.clone(),
        c_ov: sel[0].c_ov,
        c_or: mean_loss / mean_oracle,
        epsilon,
    })
}

/// Labels in order of first appearance, oracle excluded.
pub fn labels(rows: &[RecordRow]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for r in rows {
        let l = r.label();
        if r.procedure != ORACLE && !out.contains(&l) {
            out.push(l);
        }
    }
    out
}

/// [`compute_cor`] for every procedure present.
pub fn cor_report(rows: &[RecordRow]) -> Result<Vec<CorEntry>> {
    labels(rows).iter().map(|l| compute_cor(rows, l)).collect()
}

/// Selection counts over `(D1, D2)`; the constant model sits at `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub which: String,
    pub counts: BTreeMap<(usize, usize), usize>,
    pub total: usize,
}

impl Heatmap {
    pub fn frequency(&self, d1: usize, d2: usize) -> f64 {
        self.counts.get(&(d1, d2)).map_or(0.0, |&c| c as f64 / self.total as f64)
    }

    /// `log10` of the relative frequency; `None` for cells never selected.
    pub fn log10_frequency(&self, d1: usize, d2: usize) -> Option<f64> {
        let f = self.frequency(d1, d2);
        (f > 0.0).then(|| f.log10())
    }

    /// Half the L1 distance between the two selection distributions.
    pub fn total_variation(&self, other: &Heatmap) -> f64 {
        let mut keys: Vec<&(usize, usize)> = self.counts.keys().chain(other.counts.keys()).collect();
        keys.sort();
        keys.dedup();
        keys.iter().map(|&&(a, b)| (self.frequency(a, b) - other.frequency(a, b)).abs()).sum::<f64>() / 2.0
    }

    /// Largest `D1` and `D2` seen.
    pub fn extent(&self) -> (usize, usize) {
        self.counts.keys().fold((0, 0), |(a, b), &(x, y)| (a.max(x), b.max(y)))
    }

    /// Every cell of `{(0, 0)} U [1, D1max] x [1, D2max]` with its value.
    pub fn cells(&self) -> Vec<(usize, usize, Option<f64>)> {
        let (m1, m2) = self.extent();
        let mut out = vec![(0, 0, self.log10_frequency(0, 0))];
        for d1 in 1..=m1 {
            for d2 in 1..=m2 {
                out.push((d1, d2, self.log10_frequency(d1, d2)));
            }
        }
        out
    }
}

/// Resolves `oracle`, `iddim` or a procedure token/label to a row label.
pub fn resolve_label(which: &str) -> Result<String> {
    let w = which.trim();
    match w.to_ascii_lowercase().as_str() {
        "oracle" => return Ok(ORACLE.into()),
        "iddim" | "id-dim" => return Ok("id-dim".into()),
        _ => {}
    }
    Ok(w.parse::<Procedure>()?.label())
}

/// Selection frequencies of one procedure (or the oracle) over replications.
pub fn selection_heatmap(rows: &[RecordRow], which: &str) -> Result<Heatmap> {
    let label = resolve_label(which)?;
    let mut counts = BTreeMap::new();
    let mut total = 0;
    for r in rows.iter().filter(|r| r.label() == label) {
        let (Some(d1), Some(d2)) = (r.d1, r.d2) else {
            return Err(Error::CollectionMismatch);
        };
        *counts.entry((d1, d2)).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Err(Error::InvalidConfig(format!("no records for `{which}`")));
    }
    Ok(Heatmap { which: label, counts, total })
}

/// Violations of the run-level guarantees, as messages.
pub fn check_invariants(rows: &[RecordRow], cor: &[CorEntry]) -> Vec<String> {
    let mut bad = Vec::new();
    let mut id_loo: BTreeMap<u64, f64> = BTreeMap::new();
    for r in rows {
        if r.oracle_loss > r.loss {
            bad.push(format!("replication {}: {} loss {} below the oracle {}", r.replication, r.label(), r.loss, r.oracle_loss));
        }
        if r.procedure == "id-pen-loo" {
            id_loo.insert(r.replication, r.loss);
        }
    }
    for r in rows.iter().filter(|r| r.procedure == "pen-loo") {
        if let Some(&id) = id_loo.get(&r.replication) {
            if id > r.loss {
                bad.push(format!("replication {}: id-pen-loo loss {} above {} loss {}", r.replication, id, r.label(), r.loss));
            }
        }
    }
    for c in cor {
        if c.c_or < 1.0 - c.epsilon.unwrap_or(0.0) - 1e-12 {
            bad.push(format!("{}: C_or {} below 1 - epsilon", c.label(), c.c_or));
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(rep: u64, proc_: &str, c: Option<f64>, m: ModelIndex, loss: f64, or: f64) -> RecordRow {
        RecordRow::new(rep, proc_.into(), c, m, loss, or)
    }

    #[test]
    fn cor_arithmetic() {
        let m = ModelIndex::two_regime(2, 2);
        let rows = vec![row(0, "mal-max", Some(2.0), m, 2.0, 1.0), row(1, "mal-max", Some(2.0), m, 4.0, 3.0)];
        let c = compute_cor(&rows, "mal-max*2").unwrap();
        assert_eq!(c.c_or, 1.5);
        let sd = 2.0f64.sqrt();
        assert!((c.epsilon.unwrap() - sd / (2.0f64.sqrt() * 2.0)).abs() < 1e-15);

        let same = vec![row(0, "x", None, m, 1.0, 1.0), row(1, "x", None, m, 2.0, 2.0)];
        assert_eq!(compute_cor(&same, "x").unwrap().c_or, 1.0);
        let one = vec![row(0, "x", None, m, 1.0, 1.0)];
        assert_eq!(compute_cor(&one, "x").unwrap().epsilon, None);
        let zero = vec![row(0, "x", None, m, 0.0, 0.0)];
        assert!(matches!(compute_cor(&zero, "x"), Err(Error::ZeroOracleLoss)));
        assert!(cor_report(&[]).unwrap().is_empty());
    }

    #[test]
    fn heatmap_values() {
        let a = ModelIndex::two_regime(4, 4);
        let b = ModelIndex::two_regime(1, 7);
        let all: Vec<RecordRow> = (0..10).map(|r| row(r, ORACLE, None, a, 1.0, 1.0)).collect();
        let h = selection_heatmap(&all, "oracle").unwrap();
        assert_eq!(h.log10_frequency(4, 4), Some(0.0));
        assert_eq!(h.log10_frequency(1, 1), None);

        let mixed: Vec<RecordRow> =
            (0..10).map(|r| row(r, "id-dim", None, if r < 9 { a } else { b }, 1.0, 1.0)).collect();
        let h2 = selection_heatmap(&mixed, "iddim").unwrap();
        assert!((h2.log10_frequency(4, 4).unwrap() - 0.9f64.log10()).abs() < 1e-15);
        assert!((h2.log10_frequency(1, 7).unwrap() - 0.1f64.log10()).abs() < 1e-15);
        let sum: f64 = h2.cells().iter().filter_map(|c| c.2).map(|l| 10f64.powf(l)).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((h.total_variation(&h2) - 0.1).abs() < 1e-15);

        let reg = vec![row(0, ORACLE, None, ModelIndex::Regular { bins: 3 }, 1.0, 1.0)];
        assert!(matches!(selection_heatmap(&reg, "oracle"), Err(Error::CollectionMismatch)));
        let c = vec![row(0, ORACLE, None, ModelIndex::Constant, 1.0, 1.0)];
        assert_eq!(selection_heatmap(&c, "oracle").unwrap().log10_frequency(0, 0), Some(0.0));
    }

    #[test]
    fn invariant_violations_are_reported() {
        let m = ModelIndex::two_regime(2, 2);
        let rows = vec![
            row(0, "pen-loo", Some(2.0), m, 1.0, 1.5),
            row(0, "id-pen-loo", None, m, 3.0, 1.0),
        ];
        assert_eq!(check_invariants(&rows, &[]).len(), 2);
        let ok = vec![row(0, "pen-loo", Some(2.0), m, 2.0, 1.0), row(0, "id-pen-loo", None, m, 1.5, 1.0)];
        assert!(check_invariants(&ok, &cor_report(&ok).unwrap()).is_empty());
    }
}
