//! Model choice: penalized criteria, cross-validation, per-dimension
//! minimizers, the exact regularization path over a penalty multiplier and
//! the loss-aware ideal procedures.

use std::collections::BTreeMap;

use crate::binned::{fitted_means, sse, SortedSample};
use crate::error::{Error, Result};
use crate::models::{build_partition, ModelIndex};
use crate::penalties::{holdout_scores, penalty_value, vfold_scores, FoldAssignment, HoldoutSplit, Penalty, PenaltyContext};
use crate::real::Real;
use crate::regressogram::{bin_moments, loss_of_values};
use crate::scenario::{Dataset, RegressionScenario};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionRow<T> {
    pub model: ModelIndex,
    pub emp_risk: T,
    pub penalty: T,
    pub criterion: T,
    /// Exact excess loss of the fitted estimator, when the distribution is known.
    pub excess_loss: Option<T>,
}

impl<T: Real> CriterionRow<T> {
    pub fn new(model: ModelIndex, emp_risk: T, penalty: T, excess_loss: Option<T>) -> Self {
        Self { model, emp_risk, penalty, criterion: emp_risk + penalty, excess_loss }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CriterionTable<T> {
    pub rows: Vec<CriterionRow<T>>,
}

impl<T: Real> CriterionTable<T> {
    pub fn new(rows: Vec<CriterionRow<T>>) -> Self {
        Self { rows }
    }

    /// Empirical risk, penalty and (with a scenario) exact loss of every model.
    pub fn build(
        data: &Dataset<T>,
        models: &[ModelIndex],
        penalty: &Penalty<T>,
        ctx: &PenaltyContext<'_, T>,
    ) -> Result<Self> {
        let sample = SortedSample::new(data);
        let mut rows = Vec::with_capacity(models.len());
        for m in models {
            let fit = FitSummary::new(&sample, m, ctx.scenario);
            let pen = penalty_value(penalty, m, ctx)?;
            rows.push(CriterionRow::new(*m, fit.emp_risk, pen, fit.excess_loss));
        }
        Ok(Self { rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn models(&self) -> Vec<ModelIndex> {
        self.rows.iter().map(|r| r.model).collect()
    }

    /// Same models and risks with another penalty vector.
    pub fn with_penalties(&self, penalties: &[T]) -> Self {
        let rows = self
            .rows
            .iter()
            .zip(penalties)
            .map(|(r, &p)| CriterionRow::new(r.model, r.emp_risk, p, r.excess_loss))
            .collect();
        Self { rows }
    }
}

struct FitSummary<T> {
    emp_risk: T,
    excess_loss: Option<T>,
}

impl<T: Real> FitSummary<T> {
    fn new(sample: &SortedSample<T>, model: &ModelIndex, scenario: Option<&RegressionScenario<T>>) -> Self {
        let partition = build_partition(model);
        let stats = sample.bin_stats(&sample.bin_ranges(&partition));
        let means = fitted_means(&stats, T::zero());
        let emp_risk = sse(&stats, &means) / T::count(sample.len().max(1));
        let excess_loss = scenario.map(|sc| {
            let values: Vec<T> = means.iter().map(|&m| m + sample.shift()).collect();
            loss_of_values(&values, &bin_moments(sc, &partition))
        });
        Self { emp_risk, excess_loss }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOutcome<T> {
    pub model: ModelIndex,
    /// Position of the model in the candidate list.
    pub index: usize,
    pub criterion: T,
    pub excess_loss: Option<T>,
    /// More than one candidate attained the minimum.
    pub tie_broken: bool,
}

/// Index of the smallest value; exact ties go to the smallest
/// [`ModelIndex::tie_key`]. Returns `(index, tie_broken)`.
pub fn argmin_with_ties<T: Real>(models: &[ModelIndex], values: &[T]) -> Option<(usize, bool)> {
    let mut best: Option<usize> = None;
    let mut tied = false;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            None => best = Some(i),
            Some(b) => {
                let bv = values[b];
                if v < bv {
                    best = Some(i);
                    tied = false;
                } else if v == bv {
                    tied = true;
                    if models[i].tie_key() < models[b].tie_key() {
                        best = Some(i);
                    }
                }
            }
        }
    }
    best.map(|b| (b, tied))
}

fn outcome_from<T: Real>(
    models: &[ModelIndex],
    values: &[T],
    losses: Option<&[T]>,
) -> Result<SelectionOutcome<T>> {
    let (index, tie_broken) = argmin_with_ties(models, values).ok_or(Error::NoAdmissibleModels)?;
    Ok(SelectionOutcome {
        model: models[index],
        index,
        criterion: values[index],
        excess_loss: losses.map(|l| l[index]),
        tie_broken,
    })
}

fn bin_counts_ok<T: Real>(sample: &SortedSample<T>, model: &ModelIndex, min_count: usize) -> bool {
    sample.bin_ranges(&build_partition(model)).iter().all(|r| r.len() >= min_count)
}

/// Models whose every bin holds at least two data points.
pub fn admissible_models<T: Real>(data: &Dataset<T>, models: &[ModelIndex]) -> Result<Vec<ModelIndex>> {
    admissible_models_with(data, models, 2)
}

/// Models whose every bin holds at least `min_count` data points.
pub fn admissible_models_with<T: Real>(
    data: &Dataset<T>,
    models: &[ModelIndex],
    min_count: usize,
) -> Result<Vec<ModelIndex>> {
    let sample = SortedSample::new(data);
    let kept: Vec<ModelIndex> = models.iter().copied().filter(|m| bin_counts_ok(&sample, m, min_count)).collect();
    if kept.is_empty() {
        return Err(Error::NoAdmissibleModels);
    }
    Ok(kept)
}

/// Minimizer of `emp_risk + penalty`.
pub fn select_penalized<T: Real>(table: &CriterionTable<T>) -> Result<SelectionOutcome<T>> {
    let models = table.models();
    let crit: Vec<T> = table.rows.iter().map(|r| r.criterion).collect();
    let losses: Option<Vec<T>> = table.rows.iter().map(|r| r.excess_loss).collect();
    outcome_from(&models, &crit, losses.as_deref())
}

/// V-fold cross-validation: `(1/V) sum_j P_n^(B_j) gamma(s^(B_j^c))`.
pub fn select_vfcv<T: Real>(data: &Dataset<T>, models: &[ModelIndex], folds: &FoldAssignment) -> Result<SelectionOutcome<T>> {
    let sample = SortedSample::new(data);
    let labels = folds.sorted_labels(&sample);
    let crit: Vec<T> = models
        .iter()
        .map(|m| vfold_scores(&sample, &sample.bin_ranges(&build_partition(m)), &labels, folds.v).cv)
        .collect();
    outcome_from(models, &crit, None)
}

/// Hold-out cross-validation: `P_n^(I^c) gamma(s^(I))`.
pub fn select_holdout<T: Real>(data: &Dataset<T>, models: &[ModelIndex], split: &HoldoutSplit) -> Result<SelectionOutcome<T>> {
    let sample = SortedSample::new(data);
    let labels = split.sorted_labels(&sample);
    let crit: Vec<T> = models
        .iter()
        .map(|m| holdout_scores(&sample, &sample.bin_ranges(&build_partition(m)), &labels).cv)
        .collect();
    outcome_from(models, &crit, None)
}

fn dim_tie_key(m: &ModelIndex) -> (usize, usize) {
    match m.sides() {
        Some((d1, d2)) => (d1.abs_diff(d2), d1),
        None => (0, 0),
    }
}

/// For each dimension, the position of the model with smallest `emp_risk`
/// (ties: smaller `|D1 - D2|`, then smaller `D1`).
pub fn best_per_dimension_from<T: Real>(models: &[ModelIndex], emp_risk: &[T]) -> BTreeMap<usize, usize> {
    let mut best: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, m) in models.iter().enumerate() {
        best.entry(m.dim())
            .and_modify(|b| {
                let (r, rb) = (emp_risk[i], emp_risk[*b]);
                if r < rb || (r == rb && dim_tie_key(m) < dim_tie_key(&models[*b])) {
                    *b = i;
                }
            })
            .or_insert(i);
    }
    best
}

/// Empirical-risk minimizer within each realized dimension, over the
/// admissible models.
pub fn best_per_dimension<T: Real>(data: &Dataset<T>, models: &[ModelIndex]) -> BTreeMap<usize, ModelIndex> {
    let sample = SortedSample::new(data);
    let kept: Vec<ModelIndex> = models.iter().copied().filter(|m| bin_counts_ok(&sample, m, 2)).collect();
    let risks: Vec<T> = kept.iter().map(|m| FitSummary::new(&sample, m, None).emp_risk).collect();
    best_per_dimension_from(&kept, &risks).into_iter().map(|(d, i)| (d, kept[i])).collect()
}

/// A model selected on the open interval `(k_low, k_high)` of multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathVertex<T> {
    pub index: usize,
    pub model: ModelIndex,
    pub pen_shape: T,
    pub emp_risk: T,
    pub k_low: T,
    pub k_high: T,
}

/// Vertices ordered from `K = infinity` down to `K = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult<T> {
    pub vertices: Vec<PathVertex<T>>,
}

impl<T: Real> PathResult<T> {
    /// Vertex minimizing `emp_risk + K pen_shape` at `K`; at a breakpoint the
    /// vertex on the larger-`K` side is returned.
    pub fn selected_at(&self, k: T) -> &PathVertex<T> {
        self.vertices
            .iter()
            .find(|v| k >= v.k_low)
            .unwrap_or_else(|| self.vertices.last().expect("nonempty path"))
    }
}

/// Exact path of `K -> argmin_m { emp_risk(m) + K pen_shape(m) }` over
/// `K >= 0`, from the lower-left convex hull of `(pen_shape, emp_risk)`.
pub fn penalty_path<T: Real>(table: &CriterionTable<T>, pen_shape: &[T]) -> Result<PathResult<T>> {
    let rows = &table.rows;
    if rows.is_empty() {
        return Err(Error::NoAdmissibleModels);
    }
    if pen_shape.len() != rows.len() || pen_shape.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidConfig("pen_shape must give one finite value per model".into()));
    }
    let point = |i: usize| (pen_shape[i], rows[i].emp_risk);
    let better_start = |i: usize, b: usize| {
        let ((xi, yi), (xb, yb)) = (point(i), point(b));
        xi < xb || (xi == xb && (yi < yb || (yi == yb && rows[i].model.tie_key() < rows[b].model.tie_key())))
    };
    let mut cur = 0;
    for i in 1..rows.len() {
        if better_start(i, cur) {
            cur = i;
        }
    }
    let mut vertices = Vec::new();
    let mut k_high = T::infinity();
    loop {
        let (x0, y0) = point(cur);
        let mut next: Option<(usize, T)> = None;
        for j in 0..rows.len() {
            let (xj, yj) = point(j);
            if !(xj > x0 && yj < y0) {
                continue;
            }
            let k = (y0 - yj) / (xj - x0);
            let take = match next {
                None => true,
                Some((b, kb)) => {
                    let xb = pen_shape[b];
                    k > kb
                        || (k == kb
                            && (xj > xb || (xj == xb && rows[j].model.tie_key() < rows[b].model.tie_key())))
                }
            };
            if take {
                next = Some((j, k));
            }
        }
        let k_low = next.map_or(T::zero(), |(_, k)| k);
        vertices.push(PathVertex {
            index: cur,
            model: rows[cur].model,
            pen_shape: x0,
            emp_risk: y0,
            k_low,
            k_high,
        });
        match next {
            Some((j, k)) => {
                k_high = k;
                cur = j;
            }
            None => break,
        }
    }
    Ok(PathResult { vertices })
}

/// Selections of the procedures that use the true distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct IdealSelections<T> {
    /// Best of the per-dimension empirical minimizers.
    pub id_dim: SelectionOutcome<T>,
    /// Best multiple of `D_m`.
    pub id_lin: SelectionOutcome<T>,
    /// Best multiple of each supplied penalty shape, in input order.
    pub id_pen: Vec<(String, SelectionOutcome<T>)>,
}

fn losses_of<T: Real>(table: &CriterionTable<T>) -> Result<Vec<T>> {
    table
        .rows
        .iter()
        .map(|r| r.excess_loss)
        .collect::<Option<Vec<T>>>()
        .ok_or(Error::MissingContext("exact losses"))
}

/// Loss-minimizing vertex of the path of `pen_shape`.
pub fn ideal_penalized<T: Real>(table: &CriterionTable<T>, pen_shape: &[T]) -> Result<SelectionOutcome<T>> {
    let losses = losses_of(table)?;
    let path = penalty_path(table, pen_shape)?;
    let idx: Vec<usize> = path.vertices.iter().map(|v| v.index).collect();
    let models: Vec<ModelIndex> = idx.iter().map(|&i| table.rows[i].model).collect();
    let vals: Vec<T> = idx.iter().map(|&i| losses[i]).collect();
    let (k, tie_broken) = argmin_with_ties(&models, &vals).ok_or(Error::NoAdmissibleModels)?;
    let i = idx[k];
    Ok(SelectionOutcome { model: models[k], index: i, criterion: vals[k], excess_loss: Some(vals[k]), tie_broken })
}

/// Loss-minimizing model among the per-dimension empirical minimizers.
pub fn ideal_dimension<T: Real>(table: &CriterionTable<T>) -> Result<SelectionOutcome<T>> {
    let losses = losses_of(table)?;
    let models = table.models();
    let risks: Vec<T> = table.rows.iter().map(|r| r.emp_risk).collect();
    let idx: Vec<usize> = best_per_dimension_from(&models, &risks).into_values().collect();
    let cand: Vec<ModelIndex> = idx.iter().map(|&i| models[i]).collect();
    let vals: Vec<T> = idx.iter().map(|&i| losses[i]).collect();
    let (k, tie_broken) = argmin_with_ties(&cand, &vals).ok_or(Error::NoAdmissibleModels)?;
    Ok(SelectionOutcome { model: cand[k], index: idx[k], criterion: vals[k], excess_loss: Some(vals[k]), tie_broken })
}

/// IdDim, IdLin and IdPen for each named penalty shape. `table` must carry
/// exact losses for admissible models.
pub fn ideal_procedures<T: Real>(
    table: &CriterionTable<T>,
    pen_shapes: &[(String, Vec<T>)],
) -> Result<IdealSelections<T>> {
    let dims: Vec<T> = table.rows.iter().map(|r| T::count(r.model.dim())).collect();
    let id_pen = pen_shapes
        .iter()
        .map(|(name, shape)| Ok((name.clone(), ideal_penalized(table, shape)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(IdealSelections { id_dim: ideal_dimension(table)?, id_lin: ideal_penalized(table, &dims)?, id_pen })
}

/// Model with the smallest exact loss.
pub fn oracle<T: Real>(table: &CriterionTable<T>) -> Result<SelectionOutcome<T>> {
    let losses = losses_of(table)?;
    let models = table.models();
    let (i, tie_broken) = argmin_with_ties(&models, &losses).ok_or(Error::NoAdmissibleModels)?;
    Ok(SelectionOutcome { model: models[i], index: i, criterion: losses[i], excess_loss: Some(losses[i]), tie_broken })
}
