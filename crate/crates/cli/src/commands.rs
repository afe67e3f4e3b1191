//! Subcommand arguments and their implementations.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gamecx::behavioral::predict;
use gamecx::data::{
    aggregate_trials, generate_games, simulate_choices, Dataset, GameRecord, GeneratorConfig, RtModel, SimTarget,
    SimulationConfig,
};
use gamecx::features::{compute_features, fit_complexity_index, normalize_features, ComplexityIndex, FEATURE_NAMES};
use gamecx::fitting::{
    completeness, cv_split, nelder_mead_fit, random_baseline, CompletenessBounds, CvSummary, FitOptions, FitResult,
    Metrics,
};
use gamecx::lasso::{LassoFit, LassoOptions};
use gamecx::model::ModelLabel;
use gamecx::neural::{
    train_augmented, train_direct_mlp, train_model, AdamConfig, AugmentedModel, AugmentedSpec, DirectMlp, Head,
    MlpConfig, Split, TrainConfig, TrainReport, Trainable,
};
use gamecx::psychometric::psychometric_bins;
use gamecx::solvers::{dominance_category, dominant_strategy, iterative_rationality_level, mixed_nash, pure_nash, MixedOutcome};
use gamecx::stats::pearson_r;
use gamecx::tree::{RegressionTree, TreeOptions};
use gamecx::{GameMatrix, ModelSpec, Params, Role, Structure};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;
use crate::parallel::par_map;
use crate::provenance::Provenance;

/// Equilibria, behavioral models and complexity features for 2×2 games.
#[derive(Debug, Parser)]
#[command(name = "gamecx", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate games with per-type quotas (JSON array of both perspectives).
    Generate(GenerateArgs),
    /// Topology and dominance category of every game (CSV).
    Classify(GamesArgs),
    /// Pure and mixed equilibria of every game (CSV).
    Solve(GamesArgs),
    /// Structural features of every game (CSV).
    Features(GamesArgs),
    /// Simulate participants choosing under a model (trials CSV).
    Simulate(SimulateArgs),
    /// Aggregate trials into per-game records (records CSV).
    Aggregate(AggregateArgs),
    /// Fit a context-invariant model by Nelder–Mead (JSON).
    Fit(FitArgs),
    /// Repeated train/test evaluation of several models (CSV).
    Cv(CvArgs),
    /// Train a network or a network-augmented model (checkpoint JSON).
    Train(TrainArgs),
    /// Fit a sparse complexity index to a checkpoint's per-game precision (JSON).
    Index(IndexArgs),
    /// Correlate complexity scores with a record column (JSON report).
    Correlate(CorrelateArgs),
    /// Choice frequency against the expected-utility gap, split by complexity (CSV).
    Psychometric(PsychometricArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Games per topology type for double, single and non dominance.
    #[arg(long, value_delimiter = ',', default_values_t = [3usize, 8, 22])]
    pub quotas: Vec<usize>,
    /// Trim quotas to this many base games.
    #[arg(long, default_value_t = 1208, conflicts_with = "untrimmed")]
    pub target_total: usize,
    /// Keep the quotas as given.
    #[arg(long)]
    pub untrimmed: bool,
    #[arg(long, default_value_t = 50)]
    pub payoff_max: i32,
    #[arg(long, default_value_t = 200_000_000)]
    pub max_draws: u64,
    /// Write only the base games, without transposed twins.
    #[arg(long)]
    pub base_only: bool,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GamesArgs {
    #[arg(long)]
    #[serde(skip)]
    pub games: PathBuf,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Roles {
    Row,
    Both,
}

/// Behavioral model and its parameters.
#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Model label, e.g. "L1+QR+Risk" or "QRE+Belief".
    #[arg(long, default_value = "L1+QR")]
    pub model: String,
    /// Own precision (initial value when fitting).
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
    /// Precision attributed to the opponent; defaults to `--eta`.
    #[arg(long)]
    pub eta_other: Option<f64>,
    /// Risk aversion (initial value when fitting).
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Level weights for level mixtures.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub weights: Option<Vec<f64>>,
}

impl ModelArgs {
    fn label(&self) -> Result<ModelLabel> {
        Ok(ModelLabel::parse(&self.model)?)
    }

    fn params(&self) -> Params {
        Params::new(self.eta, self.eta_other.unwrap_or(self.eta), self.alpha)
    }

    fn apply_weights(&self, mut spec: ModelSpec) -> Result<ModelSpec> {
        if let Some(w) = &self.weights {
            if spec.structure != Structure::LevelMixtureQr {
                return Err(CliError::Usage("--weights applies to level mixtures only".into()));
            }
            spec.level_weights = Some([w[0], w[1], w[2], w[3]]);
            spec.validate()?;
        }
        Ok(spec)
    }

    /// A spec without neural components.
    fn behavioral(&self) -> Result<ModelSpec> {
        match self.label()? {
            ModelLabel::Behavioral { spec, neural } if !neural.any() => self.apply_weights(spec),
            other => Err(CliError::Usage(format!("{other} is not a context-invariant behavioral model"))),
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub games: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Simulate from a trained checkpoint instead of `--model`.
    #[arg(long)]
    #[serde(skip)]
    pub checkpoint: Option<PathBuf>,
    /// Participants; every participant plays every game.
    #[arg(long, default_value_t = 100)]
    pub participants: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Roles::Row)]
    pub roles: Roles,
    /// Target correlation between the complexity index and aggregated RTs.
    #[arg(long, conflicts_with = "rt_loading")]
    pub rt_correlation: Option<f64>,
    /// Loading of log RT on the standardized complexity index.
    #[arg(long)]
    pub rt_loading: Option<f64>,
    /// Also simulate confidence ratings.
    #[arg(long)]
    pub confidence: bool,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AggregateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub trials: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub games: PathBuf,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    #[serde(skip)]
    pub records: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Nelder–Mead starts.
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    /// Hold out this share of records and report test metrics.
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NetArgs {
    /// Hidden layer sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [300usize, 300, 300])]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 20_000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 100)]
    pub eval_interval: usize,
    #[arg(long, default_value_t = 2)]
    pub patience: usize,
    /// Train without the four row/column relabelings.
    #[arg(long)]
    pub no_augment: bool,
}

impl NetArgs {
    fn config(&self, seed: u64, train_fraction: f64, validation_fraction: f64) -> Result<TrainConfig> {
        let cfg = TrainConfig {
            adam: AdamConfig { lr: self.lr, ..AdamConfig::default() },
            batch: self.batch,
            eval_interval: self.eval_interval,
            patience: self.patience,
            max_epochs: self.epochs,
            seed,
            augment: !self.no_augment,
            train_fraction,
            validation_fraction,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CvArgs {
    #[arg(long)]
    #[serde(skip)]
    pub records: PathBuf,
    /// Comma-separated model labels; "Random" and "MLP" are accepted.
    #[arg(long, value_delimiter = ',', default_values_t = ["Nash".to_string(), "L1+QR".into(), "L1+QR+Risk".into()])]
    pub models: Vec<String>,
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0.1)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub starts: usize,
    /// Upper-bound MSE for completeness when MLP is not among the models.
    #[arg(long, requires = "upper_r2")]
    pub upper_mse: Option<f64>,
    #[arg(long, requires = "upper_mse")]
    pub upper_r2: Option<f64>,
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip)]
    pub records: PathBuf,
    /// "MLP" or a label with neural components, e.g. "L1+nQR".
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.8)]
    pub train_fraction: f64,
    #[arg(long, default_value_t = 0.1)]
    pub validation_fraction: f64,
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
    /// Also write the training report here.
    #[arg(long)]
    #[serde(skip)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct IndexArgs {
    #[arg(long)]
    #[serde(skip)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub records: PathBuf,
    /// LASSO penalty on standardized features.
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    /// Also fit a depth-limited regression tree to the same target.
    #[arg(long)]
    pub tree: bool,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Field {
    RtNorm,
    ConfNorm,
    PFirst,
}

#[derive(Debug, Args, Serialize)]
pub struct CorrelateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub index: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub records: PathBuf,
    #[arg(long, value_enum, default_value_t = Field::RtNorm)]
    pub field: Field,
    /// Write the report here instead of standard output.
    #[arg(short, long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct PsychometricArgs {
    #[arg(long)]
    #[serde(skip)]
    pub records: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub index: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Risk aversion used for the expected-utility gap.
    #[arg(long, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(short, long)]
    #[serde(skip)]
    pub output: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Classify(a) => classify(&a),
        Command::Solve(a) => solve(&a),
        Command::Features(a) => features(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Aggregate(a) => aggregate(&a),
        Command::Fit(a) => fit(&a),
        Command::Cv(a) => cv(&a),
        Command::Train(a) => train(&a),
        Command::Index(a) => index(&a),
        Command::Correlate(a) => correlate(&a),
        Command::Psychometric(a) => psychometric(&a),
    }
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let quotas: [usize; 3] =
        a.quotas.clone().try_into().map_err(|_| CliError::Usage("--quotas takes three values".into()))?;
    let cfg = GeneratorConfig {
        seed: a.seed,
        quotas,
        payoff_max: a.payoff_max,
        target_total: (!a.untrimmed).then_some(a.target_total),
        max_draws: a.max_draws,
    };
    let out = generate_games(&cfg)?;
    let prov = Provenance::new("generate", a, Some(a.seed), &[])?;
    io::write_games(&a.output, if a.base_only { &out.base } else { &out.instances }, &prov)
}

fn classify(a: &GamesArgs) -> Result<()> {
    let games = io::read_games(&a.games)?;
    #[derive(Serialize)]
    struct Row {
        game_id: String,
        row_graph: &'static str,
        col_graph: &'static str,
        topology_index: usize,
        dominance: &'static str,
        row_dominant: Option<String>,
        col_dominant: Option<String>,
    }
    let rows = par_map(&games, |g| -> Result<Row> {
        let t = g.classify_topology()?;
        Ok(Row {
            game_id: g.id.clone(),
            row_graph: t.row_graph.name(),
            col_graph: t.col_graph.name(),
            topology_index: t.index(),
            dominance: dominance_category(g).as_str(),
            row_dominant: dominant_strategy(g, Role::Row).map(|x| format!("{x:?}")),
            col_dominant: dominant_strategy(g, Role::Col).map(|x| format!("{x:?}")),
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let prov = Provenance::new("classify", a, None, &[&a.games])?;
    io::write_csv(&a.output, &rows, &prov)
}

fn solve(a: &GamesArgs) -> Result<()> {
    let games = io::read_games(&a.games)?;
    #[derive(Serialize)]
    struct Row {
        game_id: String,
        pure_equilibria: String,
        n_pure: usize,
        mixed: &'static str,
        mixed_p_a: Option<f64>,
        mixed_q_c: Option<f64>,
        dominance: &'static str,
        rationality_level: u8,
    }
    let rows = par_map(&games, |g| {
        let pure = pure_nash(g);
        let (mixed, m) = match mixed_nash(g) {
            MixedOutcome::Interior(m) => ("interior", Some(m)),
            MixedOutcome::Absent => ("absent", None),
            MixedOutcome::Degenerate => ("degenerate", None),
        };
        Row {
            game_id: g.id.clone(),
            pure_equilibria: pure
                .iter()
                .map(|e| format!("{:?}{:?}", e.row_action, e.col_action))
                .collect::<Vec<_>>()
                .join(";"),
            n_pure: pure.len(),
            mixed,
            mixed_p_a: m.map(|m| m.p_a),
            mixed_q_c: m.map(|m| m.q_c),
            dominance: dominance_category(g).as_str(),
            rationality_level: iterative_rationality_level(g),
        }
    });
    let prov = Provenance::new("solve", a, None, &[&a.games])?;
    io::write_csv(&a.output, &rows, &prov)
}

fn features(a: &GamesArgs) -> Result<()> {
    let games = io::read_games(&a.games)?;
    let mut header = vec!["game_id"];
    header.extend(FEATURE_NAMES);
    let rows: Vec<Vec<String>> = par_map(&games, |g| {
        let mut row = vec![g.id.clone()];
        row.extend(compute_features(g).to_array().iter().map(|v| v.to_string()));
        row
    });
    let prov = Provenance::new("features", a, None, &[&a.games])?;
    io::write_table(&a.output, &header, &rows, &prov)
}

/// Reference complexity index of each game, standardized across the set.
fn standardized_reference_index(games: &[GameMatrix]) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = games.iter().map(|g| compute_features(g).to_array().to_vec()).collect();
    let (_, standardizer) = normalize_features(&rows)?;
    let index = ComplexityIndex::reference(standardizer);
    let scores: Vec<f64> = rows.iter().map(|r| index.score_row(r)).collect();
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    let sd = if sd > 0.0 { sd } else { 1.0 };
    Ok(scores.iter().map(|s| (s - mean) / sd).collect())
}

fn simulate(a: &SimulateArgs) -> Result<()> {
    let games = io::read_games(&a.games)?;
    let roles: &[Role] = match a.roles {
        Roles::Row => &[Role::Row],
        Roles::Both => &[Role::Row, Role::Col],
    };
    let index = standardized_reference_index(&games)?;
    let checkpoint = a.checkpoint.as_deref().map(read_checkpoint).transpose()?;
    let spec = if checkpoint.is_none() { Some(a.model.behavioral()?) } else { None };
    let params = a.model.params();
    let mut targets = Vec::with_capacity(games.len() * roles.len());
    for (g, z) in games.iter().zip(&index) {
        for &role in roles {
            let p_first = match (&checkpoint, &spec) {
                (Some(c), _) => c.model.predict(g, role),
                (None, Some(spec)) => predict(spec, &params, g, role)?,
                (None, None) => unreachable!(),
            };
            targets.push(SimTarget { game: g.clone(), role, p_first, index: *z });
        }
    }
    let mut rt = RtModel::default();
    if let Some(r) = a.rt_correlation {
        rt = rt.with_target_correlation(r, 1.0, a.participants).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Some(l) = a.rt_loading {
        rt.loading = l;
    }
    let cfg = SimulationConfig { participants: a.participants, seed: a.seed, rt, confidence: a.confidence };
    let trials = simulate_choices(&targets, &cfg)?;
    let mut inputs: Vec<&Path> = vec![&a.games];
    if let Some(c) = &a.checkpoint {
        inputs.push(c);
    }
    let prov = Provenance::new("simulate", a, Some(a.seed), &inputs)?;
    io::write_trials(&a.output, &trials, &prov)
}

fn aggregate(a: &AggregateArgs) -> Result<()> {
    let games = io::read_games(&a.games)?;
    let trials = io::read_trials(&a.trials)?;
    let records = aggregate_trials(&trials, &games)?;
    let prov = Provenance::new("aggregate", a, None, &[&a.trials, &a.games])?;
    io::write_records(&a.output, &records, &prov)
}

fn dataset(path: &Path) -> Result<Dataset> {
    Ok(Dataset::new(io::read_records(path)?)?)
}

#[derive(Serialize)]
struct FitOutput {
    label: String,
    spec: ModelSpec,
    result: FitResult,
    n_train: usize,
    n_test: usize,
}

fn fit(a: &FitArgs) -> Result<()> {
    let spec = a.model.behavioral()?;
    let data = dataset(&a.records)?;
    let (train, test) = match a.test_fraction {
        Some(f) => {
            let (test, train) = cv_split(data.len(), f, a.seed, 0)?;
            (data.subset(&train), Some(data.subset(&test)))
        }
        None => (data, None),
    };
    let opts = FitOptions { starts: a.starts, ..FitOptions::default() };
    let mut result = nelder_mead_fit(&spec, &train, &a.model.params(), a.seed, &opts)?;
    if let Some(t) = &test {
        result = result.with_test(t)?;
    }
    let out = FitOutput {
        label: gamecx::model::label(&spec),
        spec,
        result,
        n_train: train.len(),
        n_test: test.as_ref().map_or(0, Dataset::len),
    };
    let prov = Provenance::new("fit", a, Some(a.seed), &[&a.records])?;
    io::write_json(&a.output, &out, &prov)
}

#[derive(Serialize)]
struct CvRow {
    model: String,
    mse_mean: f64,
    mse_se: f64,
    r2_mean: f64,
    r2_se: f64,
    completeness: Option<f64>,
    rounds: usize,
}

fn cv_round(label: &ModelLabel, data: &Dataset, a: &CvArgs, round: usize) -> Result<Metrics> {
    let (test_idx, train_idx) = cv_split(data.len(), a.test_fraction, a.seed, round)?;
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let seed = a.seed.wrapping_mul(1000).wrapping_add(round as u64);
    match label {
        ModelLabel::Random => Ok(random_baseline(&test, seed)?),
        ModelLabel::Behavioral { spec, neural } if !neural.any() => {
            let opts = FitOptions { starts: a.starts, ..FitOptions::default() };
            let fit = nelder_mead_fit(spec, &train, &Params::new(0.1, 0.1, 0.01), seed, &opts)?;
            Ok(fit.model.evaluate(&test)?)
        }
        _ => {
            // hold out a validation share of the training part for early stopping
            let cfg = a.net.config(seed, 0.9, 0.05)?;
            let (val_idx, fit_idx) = cv_split(train.len(), 1.0 / 9.0, seed, 0)?;
            let (fit_set, val) = (train.subset(&fit_idx), train.subset(&val_idx));
            match label {
                ModelLabel::Mlp => {
                    let mut m = DirectMlp::new(MlpConfig::with_hidden(Head::Probability, &a.net.hidden), seed)?;
                    train_model(&mut m, &fit_set, &val, &cfg)?;
                    Ok(m.evaluate(&test)?)
                }
                _ => {
                    let mut m = AugmentedModel::new(AugmentedSpec::from_label(label, &a.net.hidden)?, seed)?;
                    train_model(&mut m, &fit_set, &val, &cfg)?;
                    Ok(m.evaluate(&test)?)
                }
            }
        }
    }
}

fn cv(a: &CvArgs) -> Result<()> {
    let data = dataset(&a.records)?;
    if a.rounds < 2 {
        return Err(CliError::Usage("--rounds must be at least 2".into()));
    }
    let mut labels: Vec<ModelLabel> = a.models.iter().map(|m| ModelLabel::parse(m)).collect::<std::result::Result<_, _>>()?;
    if !labels.contains(&ModelLabel::Random) {
        labels.insert(0, ModelLabel::Random);
    }
    let jobs: Vec<(usize, usize)> = (0..labels.len()).flat_map(|m| (0..a.rounds).map(move |r| (m, r))).collect();
    let mut results = par_map(&jobs, |&(m, r)| cv_round(&labels[m], &data, a, r)).into_iter();
    let mut summaries = Vec::with_capacity(labels.len());
    for label in &labels {
        let rounds = results.by_ref().take(a.rounds).collect::<Result<Vec<Metrics>>>()?;
        summaries.push((*label, CvSummary::from_rounds(rounds)));
    }
    let random = summaries.iter().find(|(l, _)| *l == ModelLabel::Random).map(|(_, s)| s.metrics());
    let upper = match (a.upper_mse, a.upper_r2) {
        (Some(mse), Some(r2)) => Some(Metrics { mse, r2 }),
        _ => summaries.iter().find(|(l, _)| *l == ModelLabel::Mlp).map(|(_, s)| s.metrics()),
    };
    let bounds = match (random, upper) {
        (Some(r), Some(u)) => CompletenessBounds::new(r, u).ok(),
        _ => None,
    };
    let rows: Vec<CvRow> = summaries
        .iter()
        .map(|(label, s)| {
            let nash = matches!(label, ModelLabel::Behavioral { spec, .. } if spec.structure == Structure::Nash);
            CvRow {
                model: label.to_string(),
                mse_mean: s.mse_mean,
                mse_se: s.mse_se,
                r2_mean: s.r2_mean,
                r2_se: s.r2_se,
                completeness: bounds.as_ref().map(|b| completeness(s.metrics(), b, nash)),
                rounds: s.rounds.len(),
            }
        })
        .collect();
    let prov = Provenance::new("cv", a, Some(a.seed), &[&a.records])?;
    io::write_csv(&a.output, &rows, &prov)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    Mlp { model: DirectMlp },
    Augmented { model: Box<AugmentedModel> },
}

impl TrainedModel {
    pub fn predict(&self, g: &GameMatrix, role: Role) -> f64 {
        match self {
            TrainedModel::Mlp { model } => model.predict(g, role),
            TrainedModel::Augmented { model } => model.predict(g, role),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub label: String,
    pub model: TrainedModel,
    pub split: Split,
    pub report: TrainReport,
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    Ok(io::read_json::<Checkpoint>(path)?.0)
}

fn train(a: &TrainArgs) -> Result<()> {
    let label = ModelLabel::parse(&a.model)?;
    let data = dataset(&a.records)?;
    let cfg = a.net.config(a.seed, a.train_fraction, a.validation_fraction)?;
    let (model, split, report) = match label {
        ModelLabel::Mlp => {
            let (m, s, r) = train_direct_mlp(&data, MlpConfig::with_hidden(Head::Probability, &a.net.hidden), &cfg)?;
            (TrainedModel::Mlp { model: m }, s, r)
        }
        ModelLabel::Behavioral { neural, .. } if neural.any() => {
            let (m, s, r) = train_augmented(&AugmentedSpec::from_label(&label, &a.net.hidden)?, &data, &cfg)?;
            (TrainedModel::Augmented { model: Box::new(m) }, s, r)
        }
        other => return Err(CliError::Usage(format!("{other} has no network; use `fit`"))),
    };
    let prov = Provenance::new("train", a, Some(a.seed), &[&a.records])?;
    let checkpoint = Checkpoint { label: label.to_string(), model, split, report };
    io::write_json(&a.output, &checkpoint, &prov)?;
    if let Some(path) = &a.metrics {
        io::write_json(path, &checkpoint.report, &prov)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndexDocument {
    pub source_label: String,
    pub index: ComplexityIndex,
    pub lasso: LassoSummary,
    pub selected: Vec<(String, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tree: Option<TreeSummary>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LassoSummary {
    pub lambda: f64,
    pub r2: f64,
    pub sweeps: usize,
}

impl LassoSummary {
    fn new(lambda: f64, fit: &LassoFit) -> Self {
        LassoSummary { lambda, r2: fit.r2, sweeps: fit.sweeps }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeSummary {
    pub depth: usize,
    pub root: Option<String>,
    pub second_layer: Vec<(String, f64)>,
    pub tree: RegressionTree,
}

fn index(a: &IndexArgs) -> Result<()> {
    let checkpoint = read_checkpoint(&a.checkpoint)?;
    let model = match &checkpoint.model {
        TrainedModel::Augmented { model } if model.spec.slots.eta_self => model,
        _ => {
            return Err(CliError::Usage(format!(
                "checkpoint {} has no per-game precision network",
                checkpoint.label
            )))
        }
    };
    let records = io::read_records(&a.records)?;
    if records.is_empty() {
        return Err(gamecx::Error::EmptyDataset.into());
    }
    let feats: Vec<_> = par_map(&records, |r| compute_features(&r.game));
    let target: Vec<f64> = records.iter().map(|r| -model.eta_self_for(&r.game, r.role)).collect();
    let (index, fit) = fit_complexity_index(&feats, &target, a.lambda, &LassoOptions::default())?;
    let tree = if a.tree {
        let rows: Vec<Vec<f64>> = feats.iter().map(|f| f.to_array().to_vec()).collect();
        let tree = RegressionTree::fit(&rows, &target, &TreeOptions::default())?;
        let name = |i: usize| FEATURE_NAMES[i].to_string();
        Some(TreeSummary {
            depth: tree.depth(),
            root: tree.root_feature().map(name),
            second_layer: tree.layer_features(1).into_iter().map(|(f, t)| (name(f), t)).collect(),
            tree,
        })
    } else {
        None
    };
    let doc = IndexDocument {
        source_label: checkpoint.label.clone(),
        selected: index.selected().into_iter().map(|(n, w)| (n.to_string(), w)).collect(),
        lasso: LassoSummary::new(a.lambda, &fit),
        index,
        tree,
    };
    let prov = Provenance::new("index", a, None, &[&a.checkpoint, &a.records])?;
    io::write_json(&a.output, &doc, &prov)
}

fn read_index(path: &Path) -> Result<ComplexityIndex> {
    Ok(io::read_json::<IndexDocument>(path)?.0.index)
}

#[derive(Serialize)]
struct CorrelationReport {
    x: &'static str,
    y: Field,
    r: f64,
    p_value: f64,
    n: usize,
}

fn correlate(a: &CorrelateArgs) -> Result<()> {
    let index = read_index(&a.index)?;
    let records = io::read_records(&a.records)?;
    let pairs: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| {
            let y = match a.field {
                Field::RtNorm => r.rt_norm,
                Field::ConfNorm => r.conf_norm,
                Field::PFirst => Some(r.p_first),
            }?;
            Some((index.score(&compute_features(&r.game)), y))
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let c = pearson_r(&x, &y)?;
    let prov = Provenance::new("correlate", a, None, &[&a.index, &a.records])?;
    let report = CorrelationReport { x: "complexity_index", y: a.field, r: c.r, p_value: c.p_value, n: c.n };
    match &a.output {
        Some(path) => io::write_json(path, &report, &prov),
        None => {
            #[derive(Serialize)]
            struct Doc<'a> {
                provenance: &'a Provenance,
                #[serde(flatten)]
                report: &'a CorrelationReport,
            }
            println!("{}", serde_json::to_string_pretty(&Doc { provenance: &prov, report: &report })?);
            Ok(())
        }
    }
}

fn psychometric(a: &PsychometricArgs) -> Result<()> {
    if a.bins == 0 {
        return Err(CliError::Usage("--bins must be positive".into()));
    }
    let index = read_index(&a.index)?;
    let records: Vec<GameRecord> = io::read_records(&a.records)?;
    let scores: Vec<f64> = par_map(&records, |r| index.score(&compute_features(&r.game)));
    let table = psychometric_bins(&records, &scores, a.bins, a.alpha)?;
    #[derive(Serialize)]
    struct Row {
        group: &'static str,
        bin: usize,
        lower: f64,
        upper: f64,
        n: usize,
        mean_delta_eu: f64,
        mean_p: f64,
        se: Option<f64>,
        group_slope: f64,
    }
    let rows: Vec<Row> = table
        .bins
        .iter()
        .map(|b| Row {
            group: b.group.as_str(),
            bin: b.bin,
            lower: b.lower,
            upper: b.upper,
            n: b.n,
            mean_delta_eu: b.mean_delta_eu,
            mean_p: b.mean_p,
            se: b.se,
            group_slope: match b.group {
                gamecx::psychometric::Group::Low => table.low_slope,
                gamecx::psychometric::Group::High => table.high_slope,
            },
        })
        .collect();
    let prov = Provenance::new("psychometric", a, None, &[&a.records, &a.index])?;
    io::write_csv(&a.output, &rows, &prov)
}
