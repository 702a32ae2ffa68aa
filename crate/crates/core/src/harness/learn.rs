//! Private pairwise-ranking experiment: per replication, privatize the training
//! users with each mechanism at each budget, train, and score on clean test users.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::data::{generate_dataset, privatize_rankings, user_seed, LinearGenerator, RankingTask};
use crate::learn::ingest::{ingest_order_file, read_feature_csv, read_ranking_csv, OrderFileFormat, RankingDataset};
use crate::learn::model::ModelSpec;
use crate::learn::train::{pairwise_accuracy, train_with_validation, TrainConfig};
use crate::mechanisms::MechanismKind;
use crate::ranking::Ranking;
use crate::rng::{cell_seed, derive_seed, fnv1a, rng_from_seed};

use super::{fmt_real, render_csv, CellSeed};

pub const RESULTS_HEADER: [&str; 9] = [
    "run",
    "mechanism",
    "epsilon",
    "n",
    "m",
    "seed",
    "train_acc",
    "val_acc",
    "test_acc_sym",
];

pub const SUMMARY_HEADER: [&str; 6] = ["mechanism", "epsilon", "runs", "mean_test_acc_sym", "se_test_acc_sym", "n"];

fn default_replications() -> usize {
    10
}

fn default_mechanisms() -> Vec<MechanismKind> {
    vec![MechanismKind::Mallows, MechanismKind::Laplace]
}

fn default_model() -> ModelSpec {
    ModelSpec::linear()
}

fn default_weights() -> Vec<f64> {
    vec![1.0; 4]
}

/// Experiment configuration; the same schema is read from TOML or JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnConfig {
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_mechanisms")]
    pub mechanisms: Vec<MechanismKind>,
    pub data: DataSource,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum DataSource {
    /// Fresh users and items per replication from the linear generator.
    Synthetic {
        n_train: usize,
        #[serde(default)]
        n_val: usize,
        n_test: usize,
        m: usize,
        #[serde(default = "default_weights")]
        alpha: Vec<f64>,
        #[serde(default = "default_weights")]
        beta: Vec<f64>,
    },
    /// Rankings and features from files; users are reshuffled into
    /// train/validation/test per replication.
    Files {
        rankings: PathBuf,
        /// `csv` (wide ranking CSV) or `order` (order file).
        #[serde(default = "default_rankings_format")]
        rankings_format: String,
        #[serde(default)]
        order: OrderFileFormat,
        user_features: PathBuf,
        item_features: PathBuf,
        n_train: usize,
        #[serde(default)]
        n_val: usize,
        /// Test users; all remaining users when absent.
        #[serde(default)]
        n_test: Option<usize>,
    },
}

fn default_rankings_format() -> String {
    "csv".to_string()
}

impl LearnConfig {
    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: LearnConfig = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidConfig("replications must be >= 1".into()));
        }
        if self.epsilons.is_empty() || self.mechanisms.is_empty() {
            return Err(Error::InvalidConfig("epsilons and mechanisms must be nonempty".into()));
        }
        if let Some(&e) = self.epsilons.iter().find(|e| !(**e > 0.0)) {
            return Err(Error::InvalidEpsilon(e));
        }
        self.train.validate()?;
        match &self.data {
            DataSource::Synthetic { n_train, n_test, m, alpha, beta, .. } => {
                if *n_train == 0 || *n_test == 0 {
                    return Err(Error::InvalidConfig("n_train and n_test must be positive".into()));
                }
                if *m < 2 {
                    return Err(Error::BadDimensions(format!("need at least 2 items, got {m}")));
                }
                LinearGenerator::new(alpha.clone(), beta.clone())?;
            }
            DataSource::Files { rankings_format, n_train, .. } => {
                if *n_train == 0 {
                    return Err(Error::InvalidConfig("n_train must be positive".into()));
                }
                if rankings_format != "csv" && rankings_format != "order" {
                    return Err(Error::InvalidConfig(format!(
                        "rankings_format must be csv or order, got '{rankings_format}'"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One trained model's scores.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnRow {
    pub run: usize,
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    pub n: usize,
    pub m: usize,
    /// Replication seed; with `mechanism` and `epsilon` it determines the row.
    pub seed: u64,
    pub train_acc: f64,
    pub val_acc: f64,
    pub test_acc_sym: f64,
}

impl LearnRow {
    fn csv_fields(&self) -> Vec<String> {
        vec![
            self.run.to_string(),
            self.mechanism.name().to_string(),
            fmt_real(self.epsilon),
            self.n.to_string(),
            self.m.to_string(),
            self.seed.to_string(),
            fmt_real(self.train_acc),
            fmt_real(self.val_acc),
            fmt_real(self.test_acc_sym),
        ]
    }
}

/// Mean and standard error of the test accuracy over replications.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearnSummary {
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    pub runs: usize,
    pub mean_test_acc_sym: f64,
    /// `None` with a single replication.
    pub se_test_acc_sym: Option<f64>,
    pub n: usize,
}

/// Users split for one replication.
struct Split {
    m: usize,
    item_features: Vec<Vec<f64>>,
    train_users: Vec<Vec<f64>>,
    train_rankings: Vec<Ranking>,
    train_epsilons: Option<Vec<f64>>,
    n_val: usize,
    test_users: Vec<Vec<f64>>,
    test_rankings: Vec<Ranking>,
}

/// Loaded file data, shared across replications.
struct Pool {
    user_features: Vec<Vec<f64>>,
    item_features: Vec<Vec<f64>>,
    rankings: Vec<Ranking>,
    epsilons: Option<Vec<f64>>,
}

fn load_pool(data: &DataSource) -> Result<Option<Pool>> {
    let DataSource::Files { rankings, rankings_format, order, user_features, item_features, .. } = data else {
        return Ok(None);
    };
    let ds: RankingDataset = if rankings_format == "order" {
        ingest_order_file(rankings, order)?
    } else {
        let f = std::fs::File::open(rankings).map_err(|e| Error::Io(format!("{}: {e}", rankings.display())))?;
        read_ranking_csv(std::io::BufReader::new(f))?
    };
    let open = |p: &PathBuf| {
        std::fs::File::open(p)
            .map(std::io::BufReader::new)
            .map_err(|e| Error::Io(format!("{}: {e}", p.display())))
    };
    let (uids, urows) = read_feature_csv(open(user_features)?)?;
    let (iids, irows) = read_feature_csv(open(item_features)?)?;
    let users: HashMap<&str, &Vec<f64>> = uids.iter().map(String::as_str).zip(&urows).collect();
    let items: HashMap<&str, &Vec<f64>> = iids.iter().map(String::as_str).zip(&irows).collect();
    let user_rows = ds
        .user_ids
        .iter()
        .map(|id| {
            users
                .get(id.as_str())
                .map(|r| (*r).clone())
                .ok_or_else(|| Error::BadDimensions(format!("no features for user '{id}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    let item_rows = ds
        .item_labels
        .iter()
        .map(|label| {
            items
                .get(label.as_str())
                .or_else(|| label.strip_prefix("item_").and_then(|s| items.get(s)))
                .map(|r| (*r).clone())
                .ok_or_else(|| Error::BadDimensions(format!("no features for item '{label}'")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(Pool {
        user_features: user_rows,
        item_features: item_rows,
        rankings: ds.rankings,
        epsilons: ds.epsilons,
    }))
}

fn make_split(data: &DataSource, pool: Option<&Pool>, seed: u64) -> Result<Split> {
    let mut rng = rng_from_seed(seed);
    match data {
        DataSource::Synthetic { n_train, n_val, n_test, m, alpha, beta } => {
            let gen = LinearGenerator::new(alpha.clone(), beta.clone())?;
            let total = n_train + n_val + n_test;
            let d = generate_dataset(total, *m, &gen, &mut rng)?;
            let split_at = n_train + n_val;
            let mut users = d.user_features;
            let mut ranks = d.rankings;
            let test_users = users.split_off(split_at);
            let test_rankings = ranks.split_off(split_at);
            Ok(Split {
                m: *m,
                item_features: d.item_features,
                train_users: users,
                train_rankings: ranks,
                train_epsilons: None,
                n_val: *n_val,
                test_users,
                test_rankings,
            })
        }
        DataSource::Files { n_train, n_val, n_test, .. } => {
            let pool = pool.expect("file data loaded");
            let total = pool.rankings.len();
            let n_test = n_test.unwrap_or(total.saturating_sub(n_train + n_val));
            if n_train + n_val + n_test > total || n_test == 0 {
                return Err(Error::InvalidConfig(format!(
                    "split {n_train}/{n_val}/{n_test} does not fit {total} users"
                )));
            }
            let mut order: Vec<usize> = (0..total).collect();
            order.shuffle(&mut rng);
            let fit = &order[..n_train + n_val];
            let test = &order[n_train + n_val..n_train + n_val + n_test];
            Ok(Split {
                m: pool.item_features.len(),
                item_features: pool.item_features.clone(),
                train_users: fit.iter().map(|&u| pool.user_features[u].clone()).collect(),
                train_rankings: fit.iter().map(|&u| pool.rankings[u].clone()).collect(),
                train_epsilons: pool.epsilons.as_ref().map(|e| fit.iter().map(|&u| e[u]).collect()),
                n_val: *n_val,
                test_users: test.iter().map(|&u| pool.user_features[u].clone()).collect(),
                test_rankings: test.iter().map(|&u| pool.rankings[u].clone()).collect(),
            })
        }
    }
}

fn run_cell(
    cfg: &LearnConfig,
    split: &Split,
    run: usize,
    rep_seed: u64,
    mechanism: MechanismKind,
    epsilon: f64,
) -> Result<LearnRow> {
    let n_fit = split.train_rankings.len();
    let privatize_seed = derive_seed(rep_seed, &[fnv1a(mechanism.name()), epsilon.to_bits()]);
    let budgets = split.train_epsilons.clone().unwrap_or_else(|| vec![epsilon; n_fit]);
    let seeds: Vec<u64> = (0..n_fit).map(|u| user_seed(privatize_seed, u)).collect();
    let synthetic = privatize_rankings(&split.train_rankings, &budgets, mechanism, &seeds)?;

    let n_train = n_fit - split.n_val;
    let fit = RankingTask {
        user_features: &split.train_users[..n_train],
        item_features: &split.item_features,
        rankings: &synthetic[..n_train],
    };
    let val = RankingTask {
        user_features: &split.train_users[n_train..],
        item_features: &split.item_features,
        rankings: &synthetic[n_train..],
    };
    let test = RankingTask {
        user_features: &split.test_users,
        item_features: &split.item_features,
        rankings: &split.test_rankings,
    };
    let mut train_cfg = cfg.train.clone();
    // both mechanisms start from the same initialization
    train_cfg.seed = derive_seed(rep_seed, &[fnv1a("train"), epsilon.to_bits(), cfg.train.seed]);
    let outcome = train_with_validation(&cfg.model, &fit, (split.n_val > 0).then_some(&val), &train_cfg)?;
    let val_acc = if split.n_val > 0 {
        pairwise_accuracy(&outcome.model, &val)?.symmetric
    } else {
        f64::NAN
    };
    Ok(LearnRow {
        run,
        mechanism,
        epsilon,
        n: n_train,
        m: split.m,
        seed: rep_seed,
        train_acc: pairwise_accuracy(&outcome.model, &fit)?.symmetric,
        val_acc,
        test_acc_sym: pairwise_accuracy(&outcome.model, &test)?.symmetric,
    })
}

fn replication_seed(cfg: &LearnConfig, run: usize) -> u64 {
    let (m, n) = match &cfg.data {
        DataSource::Synthetic { m, n_train, .. } => (*m, *n_train),
        DataSource::Files { n_train, .. } => (0, *n_train),
    };
    cell_seed(cfg.seed, "learn", m, 0.0, n, run)
}

/// Runs every (replication, epsilon, mechanism) cell; rows come back in that order.
pub fn run_learning(cfg: &LearnConfig) -> Result<Vec<LearnRow>> {
    cfg.validate()?;
    let pool = load_pool(&cfg.data)?;
    let splits = (0..cfg.replications)
        .into_par_iter()
        .map(|run| {
            let seed = replication_seed(cfg, run);
            make_split(&cfg.data, pool.as_ref(), seed).map(|s| (seed, s))
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, f64, MechanismKind)> = (0..cfg.replications)
        .flat_map(|run| {
            cfg.epsilons
                .iter()
                .flat_map(move |&eps| cfg.mechanisms.iter().map(move |&mech| (run, eps, mech)))
        })
        .collect();
    cells
        .par_iter()
        .map(|&(run, eps, mech)| {
            let (seed, split) = &splits[run];
            run_cell(cfg, split, run, *seed, mech, eps)
        })
        .collect()
}

/// Groups rows by (mechanism, epsilon) in first-appearance order.
pub fn summarize(rows: &[LearnRow]) -> Vec<LearnSummary> {
    let mut keys: Vec<(MechanismKind, u64)> = Vec::new();
    for r in rows {
        let key = (r.mechanism, r.epsilon.to_bits());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(mechanism, bits)| {
            let group: Vec<&LearnRow> = rows
                .iter()
                .filter(|r| r.mechanism == mechanism && r.epsilon.to_bits() == bits)
                .collect();
            let k = group.len() as f64;
            let mean = group.iter().map(|r| r.test_acc_sym).sum::<f64>() / k;
            let se = (group.len() > 1).then(|| {
                let ss: f64 = group.iter().map(|r| (r.test_acc_sym - mean).powi(2)).sum();
                (ss / (k - 1.0) / k).sqrt()
            });
            LearnSummary {
                mechanism,
                epsilon: f64::from_bits(bits),
                runs: group.len(),
                mean_test_acc_sym: mean,
                se_test_acc_sym: se,
                n: group[0].n,
            }
        })
        .collect()
}

pub fn results_csv(rows: &[LearnRow]) -> String {
    render_csv(&RESULTS_HEADER, &rows.iter().map(LearnRow::csv_fields).collect::<Vec<_>>())
}

pub fn summary_csv(summary: &[LearnSummary]) -> String {
    let rows: Vec<Vec<String>> = summary
        .iter()
        .map(|s| {
            vec![
                s.mechanism.name().to_string(),
                fmt_real(s.epsilon),
                s.runs.to_string(),
                fmt_real(s.mean_test_acc_sym),
                s.se_test_acc_sym.map(fmt_real).unwrap_or_default(),
                s.n.to_string(),
            ]
        })
        .collect();
    render_csv(&SUMMARY_HEADER, &rows)
}

/// Path of the summary table written next to the results file.
pub fn summary_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".summary.csv");
    PathBuf::from(name)
}

pub fn learn_cells(cfg: &LearnConfig) -> Vec<CellSeed> {
    (0..cfg.replications)
        .map(|run| CellSeed {
            cell: format!("learn run={run}"),
            seed: replication_seed(cfg, run),
        })
        .collect()
}
