//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use rankdp::attack::{attack_error_probability, EpsilonSchedule, ScheduleKind};
use rankdp::audit::{empirical_epsilon, exact_epsilon};
use rankdp::harness::learn::{run_learning, summarize, DataSource, LearnConfig};
use rankdp::harness::moments::stage_moments;
use rankdp::harness::utility::{log_grid, utility_csv, utility_table};
use rankdp::harness::{attack_csv, with_workers};
use rankdp::learn::data::{generate_dataset, LinearGenerator};
use rankdp::learn::model::{ModelSpec, ScoringModel};
use rankdp::learn::train::{ordered_pairs, pairwise_loss_and_gradient, TrainConfig};
use rankdp::ranking::{enumerate_permutations, Ranking};
use rankdp::{expected_concordance_laplace, expected_concordance_mallows, rng_from_seed, MallowsMechanism, MechanismKind};

const SEED: u64 = 20240601;

struct Verdict {
    pass: bool,
    detail: String,
}

fn report(n: usize, name: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = v.pass && in_time;
    println!(
        "criterion {n:>2} [{name}]: {} ({}; {:.1} s of {} s allowed)",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn exact_distribution() -> Verdict {
    let mut max_gap: f64 = 0.0;
    let mut max_sum_err: f64 = 0.0;
    for m in 2..=6 {
        let outputs: Vec<Ranking> = enumerate_permutations(m).unwrap().collect();
        for &eps in &[0.5, 1.0, 3.0] {
            let mech = MallowsMechanism::new(eps, m).unwrap();
            for input in &outputs {
                let mut total = 0.0;
                for out in &outputs {
                    let chain = mech.chain_probability(input, out).unwrap();
                    let pmf = mech.mallows_pmf(input, out).unwrap();
                    max_gap = max_gap.max((chain - pmf).abs());
                    total += chain;
                }
                max_sum_err = max_sum_err.max((total - 1.0).abs());
            }
        }
    }
    Verdict {
        pass: max_gap < 1e-12 && max_sum_err < 1e-12,
        detail: format!("max |chain - pmf| = {max_gap:.2e} < 1e-12, max |sum - 1| = {max_sum_err:.2e} < 1e-12"),
    }
}

fn audit_exactness() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for m in 2..=6 {
        for &eps in &[0.5, 1.0, 2.0, 4.0] {
            let mech = MallowsMechanism::new(eps, m).unwrap();
            let bases: Vec<Ranking> = if m <= 4 {
                enumerate_permutations(m).unwrap().collect()
            } else {
                vec![Ranking::identity(m).unwrap(), Ranking::new((1..=m).rev().collect()).unwrap()]
            };
            for base in &bases {
                let got = exact_epsilon(&mech, base).unwrap().measured_epsilon;
                worst = worst.max((got - eps).abs());
                checked += 1;
            }
        }
    }
    Verdict {
        pass: worst <= 1e-9,
        detail: format!("{checked} audits, max |measured - configured| = {worst:.2e} <= 1e-9"),
    }
}

fn empirical_audit_json(workers: Option<usize>) -> (Vec<f64>, String) {
    with_workers(workers, || {
        let base = Ranking::identity(3).unwrap();
        let mut estimates = Vec::new();
        let mut json = String::new();
        for &eps in &[0.5, 1.0, 2.0] {
            let mech = MallowsMechanism::new(eps, 3).unwrap();
            let report = empirical_epsilon(&mech, &base, 1_000_000, SEED).unwrap();
            estimates.push(report.measured_epsilon);
            json.push_str(&serde_json::to_string(&report).unwrap());
            json.push('\n');
        }
        (estimates, json)
    })
    .unwrap()
}

fn empirical_audit() -> Verdict {
    let (estimates, _) = empirical_audit_json(None);
    let errors: Vec<f64> = estimates.iter().zip([0.5, 1.0, 2.0]).map(|(e, eps)| (e - eps).abs()).collect();
    Verdict {
        pass: errors.iter().all(|&e| e <= 0.08),
        detail: format!(
            "eps-hat = {:.4}/{:.4}/{:.4} for eps = 0.5/1/2, max error {:.4} <= 0.08",
            estimates[0],
            estimates[1],
            estimates[2],
            errors.iter().cloned().fold(0.0, f64::max)
        ),
    }
}

fn utility_grid() -> Vec<f64> {
    log_grid(0.1, 30.0, 20)
}

fn utility_rows(workers: Option<usize>) -> Vec<rankdp::harness::utility::UtilityRow> {
    with_workers(workers, || utility_table(&[4, 5, 6], &utility_grid(), 5000, SEED).unwrap()).unwrap()
}

fn utility_dominance() -> Verdict {
    let mut dominated = true;
    for m in [4, 5, 6] {
        for &eps in &utility_grid() {
            dominated &= expected_concordance_mallows(m, eps).unwrap() > expected_concordance_laplace(m, eps).unwrap();
        }
    }
    let rows = utility_rows(None);
    let checks = rows.len() * 2;
    let agree = rows
        .iter()
        .map(|r| {
            usize::from((r.mallows_mc - r.mallows_cf).abs() <= 3.0 * r.mallows_se)
                + usize::from((r.laplace_mc - r.laplace_cf).abs() <= 3.0 * r.laplace_se)
        })
        .sum::<usize>();
    let frac = agree as f64 / checks as f64;
    Verdict {
        pass: dominated && frac >= 0.95,
        detail: format!(
            "closed-form dominance on all 60 cells: {dominated}; MC within 3 SE on {agree}/{checks} = {:.1}% >= 95%",
            100.0 * frac
        ),
    }
}

fn stage_moment_check() -> Verdict {
    let mut worst_z: f64 = 0.0;
    let mut outside = 0;
    let mut total = 0;
    for &eps in &[1.0, 5.0] {
        let rep = stage_moments(10, eps, 100_000, SEED).unwrap();
        for s in &rep.stages {
            for z in [
                (s.empirical_mean - s.closed_form_mean).abs() / s.mean_se,
                (s.empirical_variance - s.closed_form_variance).abs() / s.variance_se,
            ] {
                total += 1;
                worst_z = worst_z.max(z);
                if z.is_nan() || z > 3.0 {
                    outside += 1;
                }
            }
        }
    }
    Verdict {
        pass: outside == 0,
        detail: format!("{outside} of {total} stage moments beyond 3 SE, worst |z| = {worst_z:.2}"),
    }
}

fn consistency_grid() -> Vec<usize> {
    (1..=10).map(|k| 10 * k).collect()
}

fn consistency_rows(workers: Option<usize>) -> Vec<rankdp::AttackRow> {
    with_workers(workers, || {
        attack_error_probability(3, EpsilonSchedule::fixed(4.0).unwrap(), &consistency_grid(), 500, SEED).unwrap()
    })
    .unwrap()
}

/// Largest increase of the error rate along the grid, in pooled standard errors.
fn worst_increase(rows: &[rankdp::AttackRow]) -> (bool, f64) {
    let mut ok = true;
    let mut worst: f64 = f64::NEG_INFINITY;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let rise = rows[j].error_rate - rows[i].error_rate;
            let pooled = rows[i].stderr.hypot(rows[j].stderr);
            if rise > 3.0 * pooled {
                ok = false;
            }
            if rise > 0.0 {
                worst = worst.max(if pooled > 0.0 { rise / pooled } else { f64::INFINITY });
            }
        }
    }
    (ok, worst)
}

fn attack_consistency() -> Verdict {
    let rows = consistency_rows(None);
    let last = rows.last().unwrap().error_rate;
    let (monotone, worst) = worst_increase(&rows);
    let rates: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.error_rate)).collect();
    Verdict {
        pass: last < 0.05 && monotone,
        detail: format!(
            "error at N=100 = {last:.4} < 0.05; no rise beyond 3 pooled SE: {monotone} (largest rise {}); rates {}",
            if worst.is_finite() { format!("{worst:.2} SE") } else { "none".into() },
            rates.join(" ")
        ),
    }
}

fn attack_inconsistency() -> Verdict {
    let grid: Vec<usize> = (1..=10).map(|k| 100 * k).collect();
    let sqrt = attack_error_probability(3, EpsilonSchedule::new(ScheduleKind::Sqrt, 1.0).unwrap(), &grid, 2000, SEED).unwrap();
    let min_sqrt = sqrt.iter().map(|r| r.error_rate).fold(1.0, f64::min);
    let log = attack_error_probability(3, EpsilonSchedule::new(ScheduleKind::LogSqrt, 1.0).unwrap(), &[100, 1000], 2000, SEED)
        .unwrap();
    let drop = log[0].error_rate - log[1].error_rate;
    let pooled = log[0].stderr.hypot(log[1].stderr);
    Verdict {
        pass: min_sqrt > 0.05 && drop > 3.0 * pooled,
        detail: format!(
            "sqrt schedule min error over N = {min_sqrt:.4} > 0.05; log schedule error {:.4} -> {:.4}, drop {:.2} pooled SE > 3",
            log[0].error_rate,
            log[1].error_rate,
            drop / pooled
        ),
    }
}

fn learning_comparison() -> Verdict {
    let cfg = LearnConfig {
        replications: 10,
        seed: SEED,
        epsilons: vec![1.0, 4.0],
        mechanisms: vec![MechanismKind::Mallows, MechanismKind::Laplace],
        data: DataSource::Synthetic {
            n_train: 300,
            n_val: 100,
            n_test: 1000,
            m: 15,
            alpha: vec![1.0; 4],
            beta: vec![1.0; 4],
        },
        model: ModelSpec::mlp(),
        train: TrainConfig::default(),
    };
    let summary = summarize(&run_learning(&cfg).unwrap());
    let find = |kind: MechanismKind, eps: f64| {
        summary.iter().find(|s| s.mechanism == kind && s.epsilon == eps).unwrap().clone()
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for eps in [1.0, 4.0] {
        let (a, b) = (find(MechanismKind::Mallows, eps), find(MechanismKind::Laplace, eps));
        let gap = a.mean_test_acc_sym - b.mean_test_acc_sym;
        let pooled = a.se_test_acc_sym.unwrap().hypot(b.se_test_acc_sym.unwrap());
        pass &= gap > 0.0;
        if eps == 4.0 {
            pass &= gap >= 2.0 * pooled;
        }
        parts.push(format!(
            "eps={eps}: mallows {:.4} vs laplace {:.4}, gap {:.2} pooled SE",
            a.mean_test_acc_sym,
            b.mean_test_acc_sym,
            gap / pooled
        ));
    }
    Verdict {
        pass,
        detail: format!("{}; need gap > 0 at both and >= 2 pooled SE at eps=4", parts.join("; ")),
    }
}

fn gradient_oracle() -> Verdict {
    let gen = LinearGenerator::new(vec![1.0, -0.5, 0.3, 2.0], vec![0.7, -1.2, 0.4, 1.0]).unwrap();
    let data = generate_dataset(5, 6, &gen, &mut rng_from_seed(SEED)).unwrap();
    let task = data.task();
    let pairs = ordered_pairs(&task);
    let mut rng = rng_from_seed(SEED + 1);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for spec in [ModelSpec::linear(), ModelSpec::mlp()] {
        for _ in 0..100 {
            let mut model = ScoringModel::init(&spec, 4, 4, &mut rng).unwrap();
            let point: Vec<f64> = (0..model.param_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            model.set_params(&point).unwrap();
            let (_, grad) = pairwise_loss_and_gradient(&model, &task, &pairs, 0.0).unwrap();
            let mut fd = Vec::with_capacity(point.len());
            for k in 0..point.len() {
                let mut p = point.clone();
                p[k] += h;
                model.set_params(&p).unwrap();
                let up = pairwise_loss_and_gradient(&model, &task, &pairs, 0.0).unwrap().0;
                p[k] -= 2.0 * h;
                model.set_params(&p).unwrap();
                let down = pairwise_loss_and_gradient(&model, &task, &pairs, 0.0).unwrap().0;
                fd.push((up - down) / (2.0 * h));
            }
            let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let diff: Vec<f64> = grad.iter().zip(&fd).map(|(a, b)| a - b).collect();
            worst = worst.max(norm(&diff) / norm(&grad).max(norm(&fd)));
        }
    }
    Verdict {
        pass: worst < 1e-5,
        detail: format!("200 points (linear and mlp), max relative error {worst:.2e} < 1e-5"),
    }
}

fn determinism() -> Verdict {
    let mut identical = true;
    let mut outputs: Vec<(String, String, String)> = Vec::new();
    for workers in [1, 2, 8] {
        let (_, audit) = empirical_audit_json(Some(workers));
        let utility = utility_csv(&utility_rows(Some(workers)));
        let attack = attack_csv(&consistency_rows(Some(workers)));
        outputs.push((audit, utility, attack));
    }
    for o in &outputs[1..] {
        identical &= *o == outputs[0];
    }
    Verdict {
        pass: identical,
        detail: format!("audit JSON, utility CSV and attack CSV byte-identical across 1/2/8 workers: {identical}"),
    }
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let results = [
        report(1, "exact distribution", secs(30), exact_distribution),
        report(2, "audit exactness", secs(60), audit_exactness),
        report(3, "empirical audit", secs(300), empirical_audit),
        report(4, "utility dominance", secs(300), utility_dominance),
        report(5, "stage moments", secs(60), stage_moment_check),
        report(6, "attack consistency", secs(120), attack_consistency),
        report(7, "attack inconsistency", secs(300), attack_inconsistency),
        report(8, "learning comparison", secs(900), learning_comparison),
        report(9, "gradient oracle", secs(60), gradient_oracle),
        report(10, "determinism", secs(3600), determinism),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
