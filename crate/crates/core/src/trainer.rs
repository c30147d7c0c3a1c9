//! Fitting a [`ParamTrajectory`] to pyrometer readings by stochastic
//! gradient descent with an L1 penalty, and scoring by mean absolute error.

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradients::{backprop_with, GradientMode, GradientSet, StateTape};
use crate::solver::{
    simulate, BoundaryConditions, BoundarySchedule, CoefficientProvider, HeatModel, ParamScale,
    ParamTrajectory,
};

/// One billet's heating history and its measured exit temperature.
/// Times in s, temperatures in K; pressures are carried but unused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatingRecord {
    pub zone_time_12: f64,
    pub zone_time_34: f64,
    pub zone_time_56: f64,
    pub zone_temp_135: f64,
    pub zone_temp_246: f64,
    pub zone_press_12: f64,
    pub zone_press_34: f64,
    pub zone_press_56: f64,
    pub cooling_time: f64,
    pub target_temp: f64,
}

impl HeatingRecord {
    pub fn heating_time(&self) -> f64 {
        self.zone_time_12 + self.zone_time_34 + self.zone_time_56
    }

    pub fn total_time(&self) -> f64 {
        self.heating_time() + self.cooling_time
    }

    pub fn validate(&self) -> Result<()> {
        let times = [self.zone_time_12, self.zone_time_34, self.zone_time_56, self.cooling_time];
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
            return Err(Error::DegenerateRecord(format!("durations must be >= 0, got {times:?}")));
        }
        if !(self.total_time() > 0.0) {
            return Err(Error::DegenerateRecord("total time is zero".into()));
        }
        for t in [self.zone_temp_135, self.zone_temp_246] {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::DegenerateRecord(format!("zone temperature {t} must be > 0 K")));
            }
        }
        let pressures = [self.zone_press_12, self.zone_press_34, self.zone_press_56];
        if !self.target_temp.is_finite() || pressures.iter().any(|p| !p.is_finite()) {
            return Err(Error::DegenerateRecord("target and pressures must be finite".into()));
        }
        Ok(())
    }
}

/// Everything shared by all records of one experiment: grid, time step and
/// horizon, initial temperature, exchange coefficients and parameter scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    /// `model.time.n_steps` is the trajectory horizon; `model.time.tau` the step.
    pub model: HeatModel,
    /// Exchange coefficients and fluxes; ambient temperatures are replaced
    /// per segment.
    pub template: BoundaryConditions,
    /// Ambient temperature (K) while the billet travels to the pyrometer.
    pub cooling_ambient: f64,
    pub scale: ParamScale,
}

impl Setup {
    pub fn tau(&self) -> f64 {
        self.model.time.tau
    }

    pub fn horizon(&self) -> usize {
        self.model.time.n_steps
    }

    pub fn validate(&self) -> Result<()> {
        self.template.validate()?;
        self.scale.validate()?;
        if !(self.cooling_ambient.is_finite() && self.cooling_ambient > 0.0) {
            return Err(Error::invalid("cooling_ambient", "must be > 0 K"));
        }
        Ok(())
    }
}

fn segment_len(duration: f64, tau: f64) -> usize {
    if duration <= 0.0 {
        0
    } else {
        ((duration / tau).round() as usize).max(1)
    }
}

/// Step counts of the non-empty segments: three heating zones, then cooling.
pub fn segment_steps(record: &HeatingRecord, tau: f64) -> Result<Vec<usize>> {
    record.validate()?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid("tau", "must be > 0"));
    }
    if record.total_time() < tau {
        return Err(Error::DegenerateRecord(format!(
            "total time {} s is shorter than one step of {tau} s",
            record.total_time()
        )));
    }
    Ok([record.zone_time_12, record.zone_time_34, record.zone_time_56, record.cooling_time]
        .iter()
        .map(|d| segment_len(*d, tau))
        .filter(|n| *n > 0)
        .collect())
}

/// Piecewise-constant boundary schedule of a record. During heating the
/// `x = 0` face sees `zone_temp_135` and the `y = y_max` face sees
/// `zone_temp_246`; during cooling both see `setup.cooling_ambient`.
pub fn record_to_schedule(record: &HeatingRecord, setup: &Setup) -> Result<BoundarySchedule> {
    record.validate()?;
    let tau = setup.tau();
    if record.total_time() < tau {
        return Err(Error::DegenerateRecord(format!(
            "total time {} s is shorter than one step of {tau} s",
            record.total_time()
        )));
    }
    let heat = setup.template.with_ambient(record.zone_temp_135, record.zone_temp_246);
    let cool = setup.template.with_ambient(setup.cooling_ambient, setup.cooling_ambient);
    let mut steps = Vec::new();
    for d in [record.zone_time_12, record.zone_time_34, record.zone_time_56] {
        steps.extend(std::iter::repeat_n(heat, segment_len(d, tau)));
    }
    steps.extend(std::iter::repeat_n(cool, segment_len(record.cooling_time, tau)));
    if steps.len() > setup.horizon() {
        return Err(Error::DegenerateRecord(format!(
            "record needs {} steps, horizon is {}",
            steps.len(),
            setup.horizon()
        )));
    }
    Ok(BoundarySchedule(steps))
}

/// Probe reading after simulating `record` with `provider`.
pub fn predict(record: &HeatingRecord, provider: CoefficientProvider<'_>, setup: &Setup) -> Result<f64> {
    let schedule = record_to_schedule(record, setup)?;
    Ok(simulate(&setup.model, provider, &schedule, false)?.probe())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Learning rate.
    pub eta: f64,
    /// Weight of the L1 penalty on all trajectory entries.
    pub lambda1: f64,
    pub max_epochs: usize,
    /// Stop once the smoothed gradient norm changes by less than this
    /// between consecutive epochs.
    pub grad_stop: f64,
    /// Training fraction of the dataset.
    pub split_ratio: f64,
    pub seed: u64,
    /// Floor applied to every entry after each update.
    pub omega_min: f64,
    /// Uniform range of the random initial entries.
    pub init_range: (f64, f64),
    /// One averaged update per epoch instead of one per record.
    pub batch: bool,
    pub gradient: GradientMode,
    /// Epochs between trajectory checkpoints.
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            eta: 0.001,
            lambda1: 0.05,
            max_epochs: 500,
            grad_stop: 1e-6,
            split_ratio: 0.8,
            seed: 1,
            omega_min: 1e-12,
            init_range: (25.0, 100.0),
            batch: false,
            gradient: GradientMode::Adjoint,
            checkpoint_every: 550,
        }
    }
}

/// Smoothing factor of the gradient-norm average used by the stop rule.
pub const GRAD_EMA: f64 = 0.9;

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::invalid("eta", format!("must be > 0, got {}", self.eta)));
        }
        if !(self.lambda1.is_finite() && self.lambda1 >= 0.0) {
            return Err(Error::invalid("lambda1", format!("must be >= 0, got {}", self.lambda1)));
        }
        if !(self.grad_stop >= 0.0) {
            return Err(Error::invalid("grad_stop", "must be >= 0"));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::invalid("split_ratio", format!("must be in (0, 1), got {}", self.split_ratio)));
        }
        if !(self.omega_min.is_finite() && self.omega_min > 0.0) {
            return Err(Error::invalid("omega_min", "must be > 0"));
        }
        let (lo, hi) = self.init_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return Err(Error::invalid("init_range", format!("need 0 < low <= high, got ({lo}, {hi})")));
        }
        if self.checkpoint_every == 0 {
            return Err(Error::invalid("checkpoint_every", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_mae: f64,
    pub test_mae: f64,
    /// Mean training loss (squared error plus penalty) at the end of the epoch.
    pub train_loss: f64,
    /// Mean per-record gradient norm; absent for the initial row.
    pub grad_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub params: ParamTrajectory,
    pub epoch: usize,
    /// Row 0 scores the initial trajectory, row `e` the state after epoch `e`.
    pub history: Vec<HistoryRow>,
    /// Smoothed gradient norm after the last epoch.
    pub smoothed_grad: Option<f64>,
    /// Whether training ended through the stop rule rather than `max_epochs`.
    pub converged: bool,
}

impl TrainState {
    pub fn last(&self) -> &HistoryRow {
        self.history.last().expect("history holds the initial row")
    }
}

/// Random positive trajectory, uniform on `config.init_range`, floored at
/// `config.omega_min`.
pub fn init_params(n_steps: usize, config: &TrainConfig) -> Result<ParamTrajectory> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let (lo, hi) = config.init_range;
    let mut draw = || -> Vec<f64> {
        (0..n_steps)
            .map(|_| if lo == hi { lo } else { rng.random_range(lo..hi) }.max(config.omega_min))
            .collect()
    };
    Ok(ParamTrajectory {
        phi_x: draw(),
        omega_x: draw(),
        phi_y: draw(),
        omega_y: draw(),
    })
}

#[derive(Debug, Clone)]
pub struct SampleLoss {
    /// `(y - prediction)^2 / 2 + lambda1 * |u|_1`.
    pub loss: f64,
    /// `y - prediction`.
    pub residual: f64,
    pub tape: StateTape,
}

pub fn sample_loss(
    record: &HeatingRecord,
    params: &ParamTrajectory,
    setup: &Setup,
    lambda1: f64,
) -> Result<SampleLoss> {
    let schedule = record_to_schedule(record, setup)?;
    let provider = CoefficientProvider::Trajectory {
        params,
        scale: setup.scale,
    };
    let sim = simulate(&setup.model, provider, &schedule, true)?;
    let residual = record.target_temp - sim.probe();
    Ok(SampleLoss {
        loss: 0.5 * residual * residual + lambda1 * params.l1_norm(),
        residual,
        tape: sim.tape.expect("tape requested"),
    })
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `p <- max(p - eta (grad + lambda1 sign(p)), omega_min)` for every entry.
/// Entries past the end of `grads` receive only the penalty term.
pub fn apply_update(params: &mut ParamTrajectory, grads: &GradientSet, config: &TrainConfig) {
    for (seq, g) in params.sequences_mut().into_iter().zip(grads.sequences()) {
        for (i, p) in seq.iter_mut().enumerate() {
            let data = g.get(i).copied().unwrap_or(0.0);
            *p = (*p - config.eta * (data + config.lambda1 * sign(*p))).max(config.omega_min);
        }
    }
}

/// Mean absolute error of `provider` over `dataset`. Records are simulated
/// concurrently and reduced in index order.
pub fn evaluate_mae(dataset: &[HeatingRecord], provider: CoefficientProvider<'_>, setup: &Setup) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::invalid("dataset", "cannot evaluate an empty dataset"));
    }
    let errors = dataset
        .par_iter()
        .map(|r| predict(r, provider, setup).map(|p| (r.target_temp - p).abs()))
        .collect::<Result<Vec<_>>>()?;
    Ok(errors.iter().sum::<f64>() / errors.len() as f64)
}

/// MAE and mean loss of a trajectory in one pass.
fn score(dataset: &[HeatingRecord], params: &ParamTrajectory, setup: &Setup, lambda1: f64) -> Result<(f64, f64)> {
    let provider = CoefficientProvider::Trajectory {
        params,
        scale: setup.scale,
    };
    let residuals = dataset
        .par_iter()
        .map(|r| predict(r, provider, setup).map(|p| r.target_temp - p))
        .collect::<Result<Vec<_>>>()?;
    let m = residuals.len() as f64;
    let mae = residuals.iter().map(|r| r.abs()).sum::<f64>() / m;
    let sq = residuals.iter().map(|r| 0.5 * r * r).sum::<f64>() / m;
    Ok((mae, sq + lambda1 * params.l1_norm()))
}

/// Seeded shuffle split at `floor(ratio * len)`.
pub fn split_dataset(
    dataset: &[HeatingRecord],
    ratio: f64,
    seed: u64,
) -> Result<(Vec<HeatingRecord>, Vec<HeatingRecord>)> {
    if dataset.len() < 2 {
        return Err(Error::invalid("dataset", format!("need at least 2 records to split, got {}", dataset.len())));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::invalid("split_ratio", format!("must be in (0, 1), got {ratio}")));
    }
    let mut shuffled = dataset.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let cut = (ratio * dataset.len() as f64).floor() as usize;
    if cut == 0 || cut == dataset.len() {
        return Err(Error::invalid("split_ratio", format!("{ratio} leaves an empty side for {} records", dataset.len())));
    }
    let test = shuffled.split_off(cut);
    Ok((shuffled, test))
}

/// Result of one pass over the training records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochSummary {
    pub grad_norm: f64,
}

fn epoch_rng(config: &TrainConfig, epoch: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(epoch as u64 + 1);
    rng
}

/// One pass over `train_set` in a seeded shuffled order. Per-record updates
/// unless `config.batch`, in which case the mean gradient is applied once.
pub fn train_epoch(
    train_set: &[HeatingRecord],
    state: &mut TrainState,
    config: &TrainConfig,
    setup: &Setup,
) -> Result<EpochSummary> {
    if train_set.is_empty() {
        return Err(Error::invalid("dataset", "training set is empty"));
    }
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    order.shuffle(&mut epoch_rng(config, state.epoch));
    let horizon = state.params.len();
    let gradient = |record: &HeatingRecord, params: &ParamTrajectory| -> Result<GradientSet> {
        let s = sample_loss(record, params, setup, config.lambda1)?;
        Ok(backprop_with(config.gradient, &s.tape, s.residual)?.padded(horizon))
    };

    let mut norm_sum = 0.0;
    if config.batch {
        let params = &state.params;
        let grads = order
            .par_iter()
            .map(|&i| gradient(&train_set[i], params))
            .collect::<Result<Vec<_>>>()?;
        let mut total = GradientSet::zeros(horizon);
        for g in &grads {
            norm_sum += g.norm();
            total.accumulate(g);
        }
        total.scale(1.0 / grads.len() as f64);
        apply_update(&mut state.params, &total, config);
    } else {
        for &i in &order {
            let g = gradient(&train_set[i], &state.params)?;
            norm_sum += g.norm();
            apply_update(&mut state.params, &g, config);
        }
    }
    state.epoch += 1;
    Ok(EpochSummary {
        grad_norm: norm_sum / train_set.len() as f64,
    })
}

/// Splits `dataset` per `config` and trains on the larger part.
pub fn train(dataset: &[HeatingRecord], config: &TrainConfig, setup: &Setup) -> Result<TrainState> {
    let (train_set, test_set) = split_dataset(dataset, config.split_ratio, config.seed)?;
    train_with_split(&train_set, &test_set, config, setup, |_| Ok(()))
}

/// Trains from a random initial trajectory on `train_set`, scoring
/// `test_set` after every epoch. `on_epoch` sees the state after each row is
/// appended, including the initial one.
pub fn train_with_split(
    train_set: &[HeatingRecord],
    test_set: &[HeatingRecord],
    config: &TrainConfig,
    setup: &Setup,
    on_epoch: impl FnMut(&TrainState) -> Result<()>,
) -> Result<TrainState> {
    let params = init_params(setup.horizon(), config)?;
    train_from(params, train_set, test_set, config, setup, on_epoch)
}

/// As [`train_with_split`], starting from the given trajectory.
pub fn train_from(
    params: ParamTrajectory,
    train_set: &[HeatingRecord],
    test_set: &[HeatingRecord],
    config: &TrainConfig,
    setup: &Setup,
    mut on_epoch: impl FnMut(&TrainState) -> Result<()>,
) -> Result<TrainState> {
    config.validate()?;
    setup.validate()?;
    if train_set.is_empty() || test_set.is_empty() {
        return Err(Error::invalid("dataset", "training and test sets must be non-empty"));
    }
    if params.len() != setup.horizon() {
        return Err(Error::invalid(
            "params",
            format!("trajectory has {} steps, horizon is {}", params.len(), setup.horizon()),
        ));
    }
    params.validate(config.omega_min)?;
    let nodes = setup.model.spatial.node_count();
    if setup.horizon() <= nodes {
        warn!(
            "horizon {} does not exceed the node count {nodes}; relying on the omega floor {:e} for stability",
            setup.horizon(),
            config.omega_min
        );
    }

    let (train_mae, train_loss) = score(train_set, &params, setup, config.lambda1)?;
    let (test_mae, _) = score(test_set, &params, setup, config.lambda1)?;
    let mut state = TrainState {
        params,
        epoch: 0,
        history: vec![HistoryRow {
            epoch: 0,
            train_mae,
            test_mae,
            train_loss,
            grad_norm: None,
        }],
        smoothed_grad: None,
        converged: false,
    };
    on_epoch(&state)?;

    while state.epoch < config.max_epochs {
        let summary = train_epoch(train_set, &mut state, config, setup)?;
        let (train_mae, train_loss) = score(train_set, &state.params, setup, config.lambda1)?;
        let (test_mae, _) = score(test_set, &state.params, setup, config.lambda1)?;
        state.history.push(HistoryRow {
            epoch: state.epoch,
            train_mae,
            test_mae,
            train_loss,
            grad_norm: Some(summary.grad_norm),
        });
        let previous = state.smoothed_grad.unwrap_or(0.0);
        let smoothed = match state.smoothed_grad {
            None => summary.grad_norm,
            Some(s) => GRAD_EMA * s + (1.0 - GRAD_EMA) * summary.grad_norm,
        };
        state.smoothed_grad = Some(smoothed);
        on_epoch(&state)?;
        if (smoothed - previous).abs() < config.grad_stop {
            state.converged = true;
            info!("stop rule met after epoch {}", state.epoch);
            break;
        }
    }
    Ok(state)
}
