use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use penlab::harness::oracle_check::{mean_se, monte_carlo_p};
use penlab::harness::{
    compute_cor, record_rows, run_experiment, ConfigFile, ExperimentConfig, PenaltyProc,
    Procedure, RecordRow, DEFAULT_C_OV,
};
use penlab::harness::output::write_records;
use penlab::penalties::{expected_ideal_penalty, make_vfold_assignment, pen_loo, pen_vfold, Penalty};
use penlab::regressogram::projection_bias;
use penlab::rng::{derive_seed, Purpose};
use penlab::selection::{admissible_models, best_per_dimension, select_penalized, CriterionTable};
use penlab::theory_oracle::{expected_p1, expected_p2};
use penlab::{
    build_partition, delta_np, enumerate_models, make_scenario, CollectionSpec, MaxDimRule, ModelIndex, PenaltyKind,
    Scenario, EXPERIMENTS,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn binomial(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

fn exact_delta(n: u64, p: &BigRational) -> BigRational {
    let q = BigRational::one() - p;
    let np = BigRational::from_integer(BigInt::from(n)) * p;
    let mut acc = BigRational::zero();
    for k in 1..=n {
        let w = BigRational::from_integer(binomial(n, k)) * num_traits::pow(p.clone(), k as usize)
            * num_traits::pow(q.clone(), (n - k) as usize);
        acc += w / BigRational::from_integer(BigInt::from(k));
    }
    acc * np - BigRational::one()
}

fn criterion_1() -> Outcome {
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for name in ["X1-005", "S0-1"] {
        let sc: Scenario = make_scenario(name).unwrap();
        for (d1, d2) in [(2, 2), (4, 4), (9, 9), (2, 16)] {
            let m = ModelIndex::two_regime(d1, d2);
            let p = build_partition(&m);
            let e1 = expected_p1(&sc, &p, sc.n).unwrap();
            let e2 = expected_p2(&sc, &p, sc.n).unwrap();
            let [(m1, s1), (m2, s2)] = monte_carlo_p(&sc, &m, 10_000, 11).unwrap();
            let z = ((m1 - e1).abs() / s1).max((m2 - e2).abs() / s2);
            worst = worst.max(z);
            lines.push(format!("{name} {m} z={z:.2}"));
        }
    }
    outcome(worst <= 3.0, format!("max |z| {worst:.2} ({})", lines.join(", ")))
}

fn criterion_2() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=12u64 {
        for j in 1..=9i64 {
            let p = BigRational::new(BigInt::from(j), BigInt::from(10));
            let exact = exact_delta(n, &p).to_f64().unwrap();
            let got: f64 = delta_np(n as usize, j as f64 / 10.0).unwrap();
            worst = worst.max((got - exact).abs());
        }
    }
    let ones_exact = (1..=200).all(|n| delta_np::<f64>(n, 1.0).unwrap() == 0.0);
    outcome(worst <= 1e-12 && ones_exact, format!("max abs error {worst:.2e}; delta(n, 1) == 0: {ones_exact}"))
}

fn criterion_3() -> Outcome {
    let sc: Scenario = make_scenario("X1-005").unwrap();
    let mut worst = 0.0f64;
    for d in [1usize, 2, 4, 8, 16] {
        let got = projection_bias(&sc, &build_partition(&ModelIndex::two_regime(d, d)));
        let want = 1.0 / (48.0 * (d * d) as f64);
        worst = worst.max((got - want).abs());
    }
    outcome(worst <= 1e-10, format!("max abs error {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let sc: Scenario = make_scenario("X1-005").unwrap();
    let m = ModelIndex::two_regime(4, 4);
    let part = build_partition(&m);
    let target = expected_ideal_penalty(&sc, &part, sc.n).unwrap();
    let reps = 10_000u64;
    let mut draws: Vec<[f64; 4]> = Vec::with_capacity(reps as usize);
    for r in 0..reps {
        let data = sc.sample(derive_seed(21, r, Purpose::Data));
        let mut row = [0.0; 4];
        for (slot, v) in [2usize, 5, 10].into_iter().enumerate() {
            let folds = make_vfold_assignment(&data, v, derive_seed(21, r, Purpose::Folds(v))).unwrap();
            row[slot] = pen_vfold(&data, &part, &folds);
        }
        row[3] = pen_loo(&data, &part);
        draws.push(row);
    }
    let mut passed = true;
    let mut parts = Vec::new();
    for (slot, name) in ["V=2", "V=5", "V=10", "loo"].into_iter().enumerate() {
        let xs: Vec<f64> = draws.iter().map(|d| d[slot]).collect();
        let (mean, se) = mean_se(&xs);
        let z = (mean - target).abs() / se;
        passed &= z <= 3.0;
        parts.push(format!("{name} {mean:.5e} z={z:.2}"));
    }
    outcome(passed, format!("E[penid] {target:.5e}; {}", parts.join(", ")))
}

fn table_rows() -> Vec<RecordRow> {
    let mut procs = vec![Procedure::IdLin, Procedure::IdDim, Procedure::IdPen(PenaltyProc::PenLoo)];
    procs.push(Procedure::Penalized { pen: PenaltyProc::PenLoo, c_ov: 2.0 });
    for c in DEFAULT_C_OV {
        procs.push(Procedure::Penalized { pen: PenaltyProc::MalMax, c_ov: c });
    }
    let config = ExperimentConfig::named("X1-005").unwrap().with_replications(1000).with_procedures(procs);
    record_rows(&run_experiment(&config).unwrap())
}

fn table() -> &'static [RecordRow] {
    static ROWS: OnceLock<Vec<RecordRow>> = OnceLock::new();
    ROWS.get_or_init(table_rows)
}

fn c_or(rows: &[RecordRow], label: &str) -> f64 {
    compute_cor(rows, label).unwrap().c_or
}

fn within(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn criterion_5(rows: &[RecordRow]) -> Outcome {
    let lin = c_or(rows, "id-lin");
    let dim = c_or(rows, "id-dim");
    let loo = c_or(rows, "id-pen-loo");
    outcome(
        within(lin, 2.065, 0.15) && within(dim, 1.507, 0.12) && within(loo, 1.378, 0.12),
        format!("IdLin {lin:.3} (2.065), IdDim {dim:.3} (1.507), IdPenLoo {loo:.3} (1.378)"),
    )
}

fn criterion_6(rows: &[RecordRow]) -> Outcome {
    let loo = c_or(rows, "pen-loo*2");
    let mal: Vec<f64> = DEFAULT_C_OV.iter().map(|c| c_or(rows, &format!("mal-max*{c}"))).collect();
    let mal2 = c_or(rows, "mal-max*2");
    let best = mal.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        within(loo, 1.870, 0.10) && within(mal2, 2.862, 0.15) && loo < best,
        format!("penLoo*2 {loo:.3} (1.870), MalMax*2 {mal2:.3} (2.862), best MalMax {best:.3}"),
    )
}

fn criterion_7(rows: &[RecordRow]) -> Outcome {
    let gap = c_or(rows, "id-dim") - c_or(rows, "id-pen-loo");
    outcome(gap > 0.05, format!("IdDim - IdPenLoo = {gap:.3}"))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let k = xs.len();
    if k % 2 == 1 {
        xs[k / 2]
    } else {
        0.5 * (xs[k / 2 - 1] + xs[k / 2])
    }
}

fn criterion_8() -> Outcome {
    let text = format!(
        "s = \"linear\"\nsigma = [1.0, {}]\nmu = 0.2\nn = 1000\nmin_bin_count = 0\nreplications = 200\nseed = 8\n",
        0.1f64.sqrt()
    );
    let file = ConfigFile::parse_toml(&text, std::path::Path::new("cp.toml")).unwrap();
    let config = ExperimentConfig::from_file(&file).unwrap();
    let sc = &config.scenario;
    let c_ov = sc.mean_noise_variance() / (sc.sigma_sup() * sc.sigma_sup());
    let config = config.with_procedures(vec![Procedure::Penalized { pen: PenaltyProc::MalMax, c_ov }]);
    let rows = record_rows(&run_experiment(&config).unwrap());
    let label = format!("mal-max*{c_ov}");
    let chosen: Vec<&RecordRow> = rows.iter().filter(|r| r.label() == label).collect();
    let d1 = median(chosen.iter().map(|r| r.d1.unwrap() as f64).collect());
    let loss = median(chosen.iter().map(|r| r.loss).collect());
    let oracle = median(chosen.iter().map(|r| r.oracle_loss).collect());
    let n = 1000.0f64;
    let threshold = n / (4.0 * n.ln());
    outcome(
        d1 > threshold && loss > 10.0 * oracle,
        format!("median D1 {d1} vs {threshold:.2}; median loss / median oracle loss {:.1}", loss / oracle),
    )
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0usize;
    let mut checked = 0usize;
    for _ in 0..200 {
        let name = EXPERIMENTS[rng.random_range(0..EXPERIMENTS.len())];
        let n = rng.random_range(40..=400);
        let sc: Scenario = make_scenario(name).unwrap().with_n(n);
        let data = sc.sample(rng.random());
        let spec = CollectionSpec::two_regime_half(MaxDimRule::Log);
        let models = admissible_models(&data, &enumerate_models(&spec, n).unwrap()).unwrap();
        let base = CriterionTable::build(
            &data,
            &models,
            &Penalty::new(PenaltyKind::Linear(0.0)),
            &penlab::penalties::PenaltyContext::new(&data),
        )
        .unwrap();
        let image: Vec<ModelIndex> = best_per_dimension(&data, &models).into_values().collect();
        let max_dim = models.iter().map(ModelIndex::dim).max().unwrap();
        for _ in 0..200 {
            let scale: f64 = rng.random_range(0.0..2.0);
            let f: Vec<f64> = (0..=max_dim).map(|_| scale * rng.random::<f64>()).collect();
            let pens: Vec<f64> = models.iter().map(|m| f[m.dim()]).collect();
            let chosen = select_penalized(&base.with_penalties(&pens)).unwrap();
            checked += 1;
            if !image.contains(&chosen.model) {
                violations += 1;
            }
        }
    }
    outcome(violations == 0, format!("{violations} of {checked} selections outside the per-dimension minimizers"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for threads in [1usize, 4] {
        let config = ExperimentConfig::named("X1-005").unwrap().with_replications(200).with_seed(10).with_threads(Some(threads));
        let path = dir.path().join(format!("records-{threads}.csv"));
        write_records(&path, &record_rows(&run_experiment(&config).unwrap())).unwrap();
        bytes.push(std::fs::read(&path).unwrap());
    }
    outcome(bytes[0] == bytes[1], format!("{} bytes each, identical: {}", bytes[0].len(), bytes[0] == bytes[1]))
}

fn main() -> ExitCode {
    let list: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, || criterion_5(table())),
        (6, || criterion_6(table())),
        (7, || criterion_7(table())),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, run) in &list {
        if !filter.is_empty() && !filter.contains(id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2}: {status} ({:.1}s) {}", start.elapsed().as_secs_f64(), o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    } else {
        println!("all acceptance criteria passed");
        ExitCode::SUCCESS
    }
}
