//! One function per subcommand. Each writes its outputs and a manifest
//! under `out_dir` and returns the summary lines for stdout.

use std::path::Path;

use heat_adapt::datagen::generate_dataset;
use heat_adapt::gradients::{finite_difference_check, CheckTarget};
use heat_adapt::io::{
    append_curve_row, fmt6, read_dataset, read_trajectory, write_dataset, write_field, write_probe_history,
    write_trajectory,
};
use heat_adapt::solver::{simulate as run_simulation, BoundarySchedule, CoefficientProvider};
use heat_adapt::trainer::{evaluate_mae, split_dataset, train_with_split};

use crate::config::RunConfig;
use crate::error::CliError;

fn prepare_out_dir(config: &RunConfig, command: &str) -> Result<(), CliError> {
    let dir = config.out_dir();
    let io = |e: std::io::Error| heat_adapt::Error::Io {
        path: dir.clone(),
        source: e,
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    let manifest = dir.join(format!("{command}.manifest"));
    std::fs::write(&manifest, config.manifest(command)).map_err(|source| heat_adapt::Error::Io { path: manifest, source })?;
    Ok(())
}

fn remove_stale(path: &Path) -> Result<(), CliError> {
    match std::fs::remove_file(path) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(heat_adapt::Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
        .into()),
        _ => Ok(()),
    }
}

pub fn gen_data(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let generator = config.generator()?;
    prepare_out_dir(config, "gen-data")?;
    let records = generate_dataset(&generator)?;
    let path = config.dataset_path();
    write_dataset(&path, &records)?;
    Ok(vec![format!("records={} dataset={}", records.len(), path.display())])
}

pub fn simulate(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let setup = config.setup()?;
    let material = config.material()?;
    let params = config.trajectory_path().map(|p| read_trajectory(&p)).transpose()?;
    let provider = match &params {
        Some(params) => CoefficientProvider::Trajectory {
            params,
            scale: setup.scale,
        },
        None => CoefficientProvider::Physical(&material),
    };
    let bc = setup.template.with_ambient(config.get("ambient1")?, config.get("ambient2")?);
    bc.validate()?;
    prepare_out_dir(config, "simulate")?;
    let schedule = BoundarySchedule::constant(bc, setup.horizon());
    let sim = run_simulation(&setup.model, provider, &schedule, false)?;
    let dir = config.out_dir();
    write_field(&dir.join("field.csv"), &sim.field)?;
    write_probe_history(&dir.join("probe.csv"), &sim.probe_history, setup.tau())?;
    Ok(vec![format!("probe_temp={}", fmt6(sim.probe()))])
}

pub fn train(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let setup = config.setup()?;
    let train_config = config.train_config()?;
    let dataset = read_dataset(&config.dataset_path())?;
    let (train_set, test_set) = split_dataset(&dataset, train_config.split_ratio, train_config.seed)?;
    prepare_out_dir(config, "train")?;
    let dir = config.out_dir();
    let curve = dir.join("curve.csv");
    remove_stale(&curve)?;
    let every = train_config.checkpoint_every;
    let state = train_with_split(&train_set, &test_set, &train_config, &setup, |state| {
        append_curve_row(&curve, state.last())?;
        if every > 0 && state.epoch > 0 && state.epoch % every == 0 {
            write_trajectory(&dir.join(format!("checkpoint_{:06}.csv", state.epoch)), &state.params)?;
        }
        Ok(())
    })?;
    write_trajectory(&dir.join("trajectory.csv"), &state.params)?;
    let last = state.last();
    Ok(vec![
        format!(
            "epochs={} converged={} initial_test_mae={} final_train_mae={}",
            state.epoch,
            state.converged,
            fmt6(state.history[0].test_mae),
            fmt6(last.train_mae)
        ),
        format!("final_test_mae={}", fmt6(last.test_mae)),
    ])
}

pub fn eval(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let setup = config.setup()?;
    let material = config.material()?;
    let dataset = read_dataset(&config.dataset_path())?;
    let records = match config.raw("eval_set") {
        side @ ("train" | "test") => {
            let (train_set, test_set) = split_dataset(&dataset, config.get("split_ratio")?, config.get("seed")?)?;
            if side == "train" {
                train_set
            } else {
                test_set
            }
        }
        _ => dataset,
    };
    let params = config.trajectory_path().map(|p| read_trajectory(&p)).transpose()?;
    let provider = match &params {
        Some(params) => {
            if params.len() != setup.horizon() {
                return Err(CliError::config(
                    "trajectory",
                    format!("{} steps, horizon is {}", params.len(), setup.horizon()),
                ));
            }
            CoefficientProvider::Trajectory {
                params,
                scale: setup.scale,
            }
        }
        None => CoefficientProvider::Physical(&material),
    };
    let mae = evaluate_mae(&records, provider, &setup)?;
    prepare_out_dir(config, "eval")?;
    Ok(vec![format!("records={}", records.len()), format!("mae={}", fmt6(mae))])
}

pub fn gradcheck(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let trials: usize = config.get("trials")?;
    let seed: u64 = config.get("seed")?;
    prepare_out_dir(config, "gradcheck")?;
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for target in CheckTarget::ALL {
        let report = finite_difference_check(target, trials, seed)?;
        if !report.passed() {
            failed.push(target.name());
        }
        lines.push(report.to_string());
    }
    if failed.is_empty() {
        Ok(lines)
    } else {
        for line in &lines {
            println!("{line}");
        }
        Err(CliError::CheckFailed(failed.join(", ")))
    }
}
