//! Replication loop.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::procedures::{PenaltyProc, Procedure};
use crate::binned::{fitted_means, sse, SortedSample};
use crate::error::{Error, Result};
use crate::models::{build_partition, enumerate_models, ModelIndex, Partition};
use crate::penalties::{
    estimate_variance_diff, expected_ideal_penalty_from_moments, holdout_scores, loo_penalty,
    make_holdout_split, make_vfold_assignment, vfold_scores,
};
use crate::regressogram::{bin_moments, loss_of_values};
use crate::rng::{derive_seed, Purpose};
use crate::scenario::{IntervalMoments, RegressionScenario};
use crate::selection::{
    argmin_with_ties, ideal_dimension, ideal_penalized, oracle, select_penalized, CriterionRow, CriterionTable,
};

/// One procedure's choice in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub procedure: Procedure,
    pub model: ModelIndex,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: u64,
    pub oracle: ModelIndex,
    pub oracle_loss: f64,
    pub admissible: usize,
    pub selections: Vec<Selection>,
    /// Empirical-risk minimizer of each realized dimension.
    pub per_dimension: BTreeMap<usize, ModelIndex>,
    pub data_seed: u64,
    pub holdout_seed: Option<u64>,
    /// `(V, seed)` for every fold assignment drawn.
    pub fold_seeds: Vec<(usize, u64)>,
}

struct PreparedModel {
    model: ModelIndex,
    partition: Partition<f64>,
    moments: Vec<IntervalMoments<f64>>,
    epenid: Option<f64>,
}

/// Collection and per-model constants shared by every replication.
struct Prepared<'a> {
    config: &'a ExperimentConfig,
    models: Vec<PreparedModel>,
    fold_counts: BTreeSet<usize>,
    holdout: bool,
    shapes: BTreeSet<PenaltyProc>,
}

impl<'a> Prepared<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self> {
        let sc = &config.scenario;
        let n = sc.n;
        let shapes: BTreeSet<PenaltyProc> = config.procedures.iter().filter_map(|p| p.penalty()).collect();
        let need_epenid = shapes.contains(&PenaltyProc::Epenid);
        let models = enumerate_models(&config.collection, n)?
            .into_iter()
            .map(|model| {
                let partition = build_partition(&model);
                let moments = bin_moments(sc, &partition);
                let epenid =
                    if need_epenid { Some(expected_ideal_penalty_from_moments(&moments, n)?) } else { None };
                Ok(PreparedModel { model, partition, moments, epenid })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            models,
            fold_counts: config.procedures.iter().filter_map(|p| p.folds()).collect(),
            holdout: config.procedures.iter().any(|p| p.uses_holdout()),
            shapes,
        })
    }

    fn scenario(&self) -> &RegressionScenario<f64> {
        &self.config.scenario
    }

    fn replicate(&self, r: u64) -> Result<ReplicationRecord> {
        let base = self.config.seed;
        let sc = self.scenario();
        let data_seed = derive_seed(base, r, Purpose::Data);
        let data = sc.sample(data_seed);
        let n = data.len();
        let nf = n as f64;
        let sample = SortedSample::new(&data);

        let holdout_seed = self.holdout.then(|| derive_seed(base, r, Purpose::HoldOut));
        let holdout_labels = match holdout_seed {
            Some(s) => Some(make_holdout_split(&data, s)?.sorted_labels(&sample)),
            None => None,
        };
        let mut fold_seeds = Vec::new();
        let mut fold_labels = BTreeMap::new();
        for &v in &self.fold_counts {
            let s = derive_seed(base, r, Purpose::Folds(v));
            fold_seeds.push((v, s));
            fold_labels.insert(v, make_vfold_assignment(&data, v, s)?.sorted_labels(&sample));
        }

        let mut rows = Vec::new();
        let mut shapes: BTreeMap<PenaltyProc, Vec<f64>> = self.shapes.iter().map(|&p| (p, Vec::new())).collect();
        let mut cv_scores: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        let mut ho_scores = Vec::new();
        let sigma_hat = if self.shapes.contains(&PenaltyProc::MalEst) { estimate_variance_diff(&data)? } else { 0.0 };
        let sigma_sup = sc.sigma_sup();

        for pm in &self.models {
            let ranges = sample.bin_ranges(&pm.partition);
            if ranges.iter().any(|r| r.len() < self.config.min_bin_count) {
                continue;
            }
            let stats = sample.bin_stats(&ranges);
            let means = fitted_means(&stats, 0.0);
            let emp_risk = sse(&stats, &means) / nf;
            let values: Vec<f64> = means.iter().map(|m| m + sample.shift()).collect();
            let loss = loss_of_values(&values, &pm.moments);
            rows.push(CriterionRow::new(pm.model, emp_risk, 0.0, Some(loss)));

            let dim = pm.model.dim() as f64;
            let ho = holdout_labels.as_ref().map(|l| holdout_scores(&sample, &ranges, l));
            if let Some(h) = ho {
                ho_scores.push(h.cv);
            }
            let mut vf = BTreeMap::new();
            for (&v, labels) in &fold_labels {
                let s = vfold_scores(&sample, &ranges, labels, v);
                cv_scores.entry(v).or_default().push(s.cv);
                vf.insert(v, s.penalty);
            }
            for (p, shape) in shapes.iter_mut() {
                shape.push(match *p {
                    PenaltyProc::Epenid => pm.epenid.expect("prepared"),
                    PenaltyProc::MalEst => 2.0 * sigma_hat * dim / nf,
                    PenaltyProc::MalMax => 2.0 * sigma_sup * sigma_sup * dim / nf,
                    PenaltyProc::PenHo => ho.expect("hold-out split drawn").penalty,
                    PenaltyProc::PenVf(v) => vf[&v],
                    PenaltyProc::PenLoo => loo_penalty(&stats),
                });
            }
        }
        if rows.is_empty() {
            return Err(Error::NoAdmissibleModels);
        }
        let table = CriterionTable::new(rows);
        let models = table.models();
        let losses: Vec<f64> = table.rows.iter().map(|r| r.excess_loss.expect("filled")).collect();
        let best = oracle(&table)?;
        let dims: Vec<f64> = models.iter().map(|m| m.dim() as f64).collect();

        let pick = |values: &[f64]| -> Result<usize> {
            argmin_with_ties(&models, values).map(|(i, _)| i).ok_or(Error::NoAdmissibleModels)
        };
        let mut selections = Vec::with_capacity(self.config.procedures.len());
        for proc in &self.config.procedures {
            let index = match *proc {
                Procedure::Penalized { pen, c_ov } => {
                    let pens: Vec<f64> = shapes[&pen].iter().map(|p| c_ov * p).collect();
                    select_penalized(&table.with_penalties(&pens))?.index
                }
                Procedure::HoldOutCv => pick(&ho_scores)?,
                Procedure::Vfcv(v) => pick(&cv_scores[&v])?,
                Procedure::IdDim => ideal_dimension(&table)?.index,
                Procedure::IdLin => ideal_penalized(&table, &dims)?.index,
                Procedure::IdPen(pen) => ideal_penalized(&table, &shapes[&pen])?.index,
            };
            selections.push(Selection { procedure: *proc, model: models[index], loss: losses[index] });
        }
        let risks: Vec<f64> = table.rows.iter().map(|r| r.emp_risk).collect();
        let per_dimension = crate::selection::best_per_dimension_from(&models, &risks)
            .into_iter()
            .map(|(d, i)| (d, models[i]))
            .collect();

        Ok(ReplicationRecord {
            replication: r,
            oracle: best.model,
            oracle_loss: losses[best.index],
            admissible: models.len(),
            selections,
            per_dimension,
            data_seed,
            holdout_seed,
            fold_seeds,
        })
    }
}

/// Runs every replication of `config`; records come back in replication
/// order whatever the thread count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReplicationRecord>> {
    let prepared = Prepared::new(config)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = config.threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|r| prepared.replicate(r))
            .collect::<Result<Vec<_>>>()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::procedures::parse_procedures;
    use crate::harness::procedures::DEFAULT_C_OV;
    use crate::penalties::{Penalty, PenaltyContext, PenaltyKind};
    use crate::selection::admissible_models;

    fn small(procs: &[&str], reps: usize) -> ExperimentConfig {
        ExperimentConfig::named("X1-005")
            .unwrap()
            .with_replications(reps)
            .with_seed(5)
            .with_procedures(parse_procedures(procs, &DEFAULT_C_OV).unwrap())
    }

    #[test]
    fn reproducible_single_replication() {
        let c = small(&["B1"], 1);
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c.clone().with_threads(Some(1))).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
    }

    #[test]
    fn oracle_dominates() {
        let recs = run_experiment(&small(&["all"], 10)).unwrap();
        for r in &recs {
            for s in &r.selections {
                assert!(r.oracle_loss <= s.loss, "{} {}", s.procedure, s.loss);
            }
            let id_loo = r.selections.iter().find(|s| s.procedure == Procedure::IdPen(PenaltyProc::PenLoo)).unwrap();
            for s in &r.selections {
                if let Procedure::Penalized { pen: PenaltyProc::PenLoo, .. } = s.procedure {
                    assert!(id_loo.loss <= s.loss);
                }
            }
        }
    }

    #[test]
    fn fast_path_matches_reference_penalties() {
        let c = small(&["A", "B", "C", "H", "J", "L"], 1);
        let rec = &run_experiment(&c).unwrap()[0];
        let sc = &c.scenario;
        let data = sc.sample(rec.data_seed);
        let split = make_holdout_split(&data, rec.holdout_seed.unwrap()).unwrap();
        let folds = make_vfold_assignment(&data, 5, rec.fold_seeds[0].1).unwrap();
        let all = enumerate_models(&c.collection, sc.n).unwrap();
        let models = admissible_models(&data, &all).unwrap();
        assert_eq!(models.len(), rec.admissible);
        let ctx = PenaltyContext::new(&data).with_scenario(sc).with_folds(&folds).with_split(&split);
        for s in &rec.selections {
            let Procedure::Penalized { pen, c_ov } = s.procedure else { continue };
            let kind = match pen {
                PenaltyProc::Epenid => PenaltyKind::ExpectedIdeal,
                PenaltyProc::MalEst => PenaltyKind::MallowsEst,
                PenaltyProc::MalMax => PenaltyKind::MallowsMax,
                PenaltyProc::PenHo => PenaltyKind::HoldOut,
                PenaltyProc::PenVf(v) => PenaltyKind::VFold(v),
                PenaltyProc::PenLoo => PenaltyKind::LeaveOneOut,
            };
            let p = Penalty::new(kind).times(c_ov);
            let t = CriterionTable::build(&data, &models, &p, &ctx).unwrap();
            let o = select_penalized(&t).unwrap();
            assert_eq!(o.model, s.model, "{}", s.procedure);
            assert!((o.excess_loss.unwrap() - s.loss).abs() < 1e-12);
        }
    }
}
