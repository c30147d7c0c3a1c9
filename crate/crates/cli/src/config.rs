//! Flat `key = value` run configuration.
//!
//! Every key has a default; files and command-line overrides may only set
//! known keys. Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use heat_adapt::datagen::GeneratorConfig;
use heat_adapt::gradients::GradientMode;
use heat_adapt::grid::{SpatialGrid, TimeGrid};
use heat_adapt::materials::{MaterialModel, PropertyKind, PropertyTable};
use heat_adapt::solver::{BoundaryConditions, HeatModel, ParamScale, Probe};
use heat_adapt::trainer::{Setup, TrainConfig};

use crate::error::CliError;

/// `(key, default, unit and meaning)`.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("x_max", "0.1", "m, section width"),
    ("y_max", "0.1", "m, section height"),
    ("nx", "20", "cells along x"),
    ("ny", "20", "cells along y"),
    ("n_steps", "20", "time steps in the horizon"),
    ("tau", "120", "s, time step"),
    ("initial_temp", "300", "K, uniform initial temperature"),
    ("probe_k", "", "x index of the probe node, empty for the surface center"),
    ("probe_q", "", "y index of the probe node, empty for the surface"),
    ("kappa1", "40", "W/(m2 K), convection at x = 0"),
    ("kappa2", "40", "W/(m2 K), convection at y = y_max"),
    ("eps1", "0.8", "emissivity at x = 0"),
    ("eps2", "0.8", "emissivity at y = y_max"),
    ("q1", "0", "W/m2, flux entering through y = 0"),
    ("q2", "0", "W/m2, flux leaving through x = x_max"),
    ("cooling_ambient", "300", "K, ambient during travel to the pyrometer"),
    ("lambda_table", "", "T,value CSV of conductivity, empty for carbon steel"),
    ("rho_table", "", "T,value CSV of density, empty for carbon steel"),
    ("c_table", "", "T,value CSV of heat capacity, empty for carbon steel"),
    ("phi_ref", "0.6", "W/(m K) per trajectory unit of phi"),
    ("omega_ref", "1e5", "J/(m3 K) per trajectory unit of omega"),
    ("eta", "0.001", "learning rate"),
    ("lambda1", "0.05", "L1 penalty weight"),
    ("max_epochs", "500", "epoch limit"),
    ("grad_stop", "1e-6", "stop when the smoothed gradient norm changes less than this"),
    ("split_ratio", "0.8", "training share of the dataset"),
    ("seed", "1", "seed for generation, splitting, initialization and shuffling"),
    ("omega_min", "1e-12", "floor for every trajectory entry"),
    ("init_min", "25", "lower bound of the random initial entries"),
    ("init_max", "100", "upper bound of the random initial entries"),
    ("batch", "false", "apply the mean gradient once per epoch"),
    ("gradient", "adjoint", "adjoint or delta-chain"),
    ("checkpoint_every", "550", "epochs between trajectory checkpoints, 0 disables"),
    ("n_records", "200", "records to generate"),
    ("zone_time_min", "300", "s, shortest zone"),
    ("zone_time_max", "700", "s, longest zone"),
    ("zone_temp_min", "1150", "K, coolest zone ambient"),
    ("zone_temp_max", "1450", "K, hottest zone ambient"),
    ("cooling_time_min", "30", "s, shortest travel to the pyrometer"),
    ("cooling_time_max", "170", "s, longest travel to the pyrometer"),
    ("noise_sigma", "5", "K, Gaussian noise on generated targets"),
    ("out_dir", "out", "directory for outputs and manifests"),
    ("dataset", "", "dataset CSV, empty for <out_dir>/dataset.csv"),
    ("trajectory", "", "trajectory CSV for simulate and eval, empty for the physical model"),
    ("eval_set", "all", "records scored by eval: all, train or test"),
    ("ambient1", "1300", "K, simulate ambient at x = 0"),
    ("ambient2", "1300", "K, simulate ambient at y = y_max"),
    ("trials", "100", "gradcheck trials per target"),
    ("threads", "1", "worker threads"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            values: KEYS.iter().map(|(k, v, _)| (*k, v.to_string())).collect(),
        }
    }
}

fn known(key: &str) -> Result<&'static str, CliError> {
    KEYS.iter()
        .map(|(k, _, _)| *k)
        .find(|k| *k == key)
        .ok_or_else(|| CliError::config(key, "unknown key"))
}

impl RunConfig {
    /// Defaults, then the file at `path`, then `overrides` in order.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut config = Self::default();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
            config.merge_text(&text)?;
        }
        for (k, v) in overrides {
            config.set(k, v)?;
        }
        Ok(config)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}", i + 1), "expected key = value"))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = known(key)?;
        self.values.insert(key, value.to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).expect("key listed in KEYS")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .parse()
            .map_err(|e: T::Err| CliError::config(key, format!("cannot parse `{}`: {e}", self.raw(key))))
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn path_or(&self, key: &str, fallback: &str) -> PathBuf {
        match self.raw(key) {
            "" => self.out_dir().join(fallback),
            p => PathBuf::from(p),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("out_dir"))
    }

    pub fn dataset_path(&self) -> PathBuf {
        self.path_or("dataset", "dataset.csv")
    }

    pub fn trajectory_path(&self) -> Option<PathBuf> {
        match self.raw("trajectory") {
            "" => None,
            p => Some(PathBuf::from(p)),
        }
    }

    /// Snapshot that loads back as a config file.
    pub fn manifest(&self, command: &str) -> String {
        let mut out = format!(
            "# heat-adapt {} {command}, seed {}\n",
            env!("CARGO_PKG_VERSION"),
            self.raw("seed")
        );
        for (k, v) in &self.values {
            writeln!(out, "{k} = {v}").expect("write to string");
        }
        out
    }

    /// Parses every typed key so a bad value fails whichever command runs.
    pub fn check(&self) -> Result<(), CliError> {
        self.setup()?;
        self.train_config()?;
        for key in [
            "zone_time_min",
            "zone_time_max",
            "zone_temp_min",
            "zone_temp_max",
            "cooling_time_min",
            "cooling_time_max",
            "noise_sigma",
            "ambient1",
            "ambient2",
        ] {
            self.get::<f64>(key)?;
        }
        for key in ["n_records", "trials", "threads"] {
            self.get::<usize>(key)?;
        }
        if !matches!(self.raw("eval_set"), "all" | "train" | "test") {
            return Err(CliError::config(
                "eval_set",
                format!("expected all, train or test, got `{}`", self.raw("eval_set")),
            ));
        }
        Ok(())
    }

    pub fn material(&self) -> Result<MaterialModel, CliError> {
        let tables = [
            ("lambda_table", PropertyKind::Conductivity),
            ("rho_table", PropertyKind::Density),
            ("c_table", PropertyKind::HeatCapacity),
        ];
        let set = tables.iter().filter(|(k, _)| !self.raw(k).is_empty()).count();
        if set == 0 {
            return Ok(MaterialModel::carbon_steel());
        }
        if set < 3 {
            let missing = tables.iter().find(|(k, _)| self.raw(k).is_empty()).expect("one is missing").0;
            return Err(CliError::config(missing, "all three property tables must be given together"));
        }
        let load = |(key, kind): (&str, PropertyKind)| {
            PropertyTable::from_csv(kind, Path::new(self.raw(key))).map_err(|e| CliError::config(key, e.to_string()))
        };
        let [l, r, c] = tables;
        Ok(MaterialModel::new("tables", load(l)?, load(r)?, load(c)?)?)
    }

    pub fn setup(&self) -> Result<Setup, CliError> {
        let spatial = SpatialGrid::new(self.get("x_max")?, self.get("y_max")?, self.get("nx")?, self.get("ny")?)?;
        let time = TimeGrid::from_step(self.get("tau")?, self.get("n_steps")?)?;
        let model = HeatModel::new(spatial, time, self.get("initial_temp")?)?;
        let center = Probe::surface_center(&spatial);
        let probe = Probe {
            k: self.optional("probe_k")?.unwrap_or(center.k),
            q: self.optional("probe_q")?.unwrap_or(center.q),
        };
        let model = model.with_probe(probe)?;
        let template = BoundaryConditions {
            t1: self.get("initial_temp")?,
            t2: self.get("initial_temp")?,
            kappa1: self.get("kappa1")?,
            kappa2: self.get("kappa2")?,
            eps1: self.get("eps1")?,
            eps2: self.get("eps2")?,
            q1: self.get("q1")?,
            q2: self.get("q2")?,
        };
        template.validate()?;
        let setup = Setup {
            model,
            template,
            cooling_ambient: self.get("cooling_ambient")?,
            scale: ParamScale {
                phi_ref: self.get("phi_ref")?,
                omega_ref: self.get("omega_ref")?,
            },
        };
        setup.validate()?;
        Ok(setup)
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let gradient = GradientMode::parse(self.raw("gradient"))
            .ok_or_else(|| CliError::config("gradient", format!("expected adjoint or delta-chain, got `{}`", self.raw("gradient"))))?;
        let config = TrainConfig {
            eta: self.get("eta")?,
            lambda1: self.get("lambda1")?,
            max_epochs: self.get("max_epochs")?,
            grad_stop: self.get("grad_stop")?,
            split_ratio: self.get("split_ratio")?,
            seed: self.get("seed")?,
            omega_min: self.get("omega_min")?,
            init_range: (self.get("init_min")?, self.get("init_max")?),
            batch: self.get("batch")?,
            gradient,
            checkpoint_every: self.get("checkpoint_every")?,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn generator(&self) -> Result<GeneratorConfig, CliError> {
        let config = GeneratorConfig {
            n_records: self.get("n_records")?,
            material: self.material()?,
            zone_time_range: (self.get("zone_time_min")?, self.get("zone_time_max")?),
            zone_temp_range: (self.get("zone_temp_min")?, self.get("zone_temp_max")?),
            cooling_time_range: (self.get("cooling_time_min")?, self.get("cooling_time_max")?),
            noise_sigma: self.get("noise_sigma")?,
            seed: self.get("seed")?,
            setup: self.setup()?,
        };
        config.validate()?;
        Ok(config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_build_every_section() {
        let c = RunConfig::default();
        c.setup().unwrap();
        c.train_config().unwrap();
        c.generator().unwrap();
        assert_eq!(c.dataset_path(), PathBuf::from("out/dataset.csv"));
        assert_eq!(c.trajectory_path(), None);
    }

    #[test]
    fn file_then_overrides() {
        let mut c = RunConfig::default();
        c.merge_text("# comment\n\neta = 0.01  # trailing\nseed=9\n").unwrap();
        assert_eq!(c.get::<f64>("eta").unwrap(), 0.01);
        c.set("seed", "4").unwrap();
        assert_eq!(c.get::<u64>("seed").unwrap(), 4);
    }

    #[test]
    fn unknown_and_malformed_keys_name_the_culprit() {
        let mut c = RunConfig::default();
        let e = c.merge_text("etta = 1\n").unwrap_err();
        assert!(matches!(e, CliError::Config { ref key, .. } if key == "etta"));
        let e = c.merge_text("just words\n").unwrap_err();
        assert!(matches!(e, CliError::Config { ref key, .. } if key == "line 1"));
        c.set("nx", "ten").unwrap();
        let e = c.setup().unwrap_err();
        assert!(matches!(e, CliError::Config { ref key, .. } if key == "nx"));
        c.set("nx", "20").unwrap();
        c.set("gradient", "magic").unwrap();
        assert!(matches!(c.train_config().unwrap_err(), CliError::Config { ref key, .. } if key == "gradient"));
        c.set("gradient", "adjoint").unwrap();
        c.check().unwrap();
        c.set("ambient2", "hot").unwrap();
        assert!(matches!(c.check().unwrap_err(), CliError::Config { ref key, .. } if key == "ambient2"));
    }

    #[test]
    fn manifest_loads_back() {
        let mut c = RunConfig::default();
        c.set("lambda1", "0.2").unwrap();
        let mut back = RunConfig::default();
        back.merge_text(&c.manifest("train")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_material_tables_rejected() {
        let mut c = RunConfig::default();
        c.set("rho_table", "rho.csv").unwrap();
        assert!(matches!(c.material().unwrap_err(), CliError::Config { ref key, .. } if key == "lambda_table"));
    }
}
