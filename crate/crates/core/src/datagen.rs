//! Synthetic furnace logs: random heating histories simulated with a known
//! material, plus Gaussian pyrometer noise.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::materials::MaterialModel;
use crate::solver::CoefficientProvider;
use crate::trainer::{predict, record_to_schedule, HeatingRecord, Setup};

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    pub n_records: usize,
    pub material: MaterialModel,
    /// Duration range (s) of each zone pair.
    pub zone_time_range: (f64, f64),
    /// Zone temperature range (K).
    pub zone_temp_range: (f64, f64),
    /// Travel time range (s) from furnace exit to the pyrometer.
    pub cooling_time_range: (f64, f64),
    /// Standard deviation (K) of the noise added to targets.
    pub noise_sigma: f64,
    pub seed: u64,
    /// Grid, horizon, initial temperature and boundary template.
    pub setup: Setup,
}

/// Inert pressure features are drawn from this range.
const PRESSURE_RANGE: (f64, f64) = (0.8, 1.2);

fn check_range(field: &'static str, (lo, hi): (f64, f64), min: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo >= min && lo <= hi) {
        return Err(Error::invalid(field, format!("need {min} <= low <= high, got ({lo}, {hi})")));
    }
    Ok(())
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::invalid("n_records", "must be >= 1"));
        }
        check_range("zone_time_range", self.zone_time_range, 0.0)?;
        check_range("zone_temp_range", self.zone_temp_range, f64::MIN_POSITIVE)?;
        check_range("cooling_time_range", self.cooling_time_range, 0.0)?;
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("noise_sigma", "must be >= 0"));
        }
        self.setup.validate()?;
        // the longest possible record must fit the horizon
        let longest = HeatingRecord {
            zone_time_12: self.zone_time_range.1,
            zone_time_34: self.zone_time_range.1,
            zone_time_56: self.zone_time_range.1,
            zone_temp_135: self.zone_temp_range.1,
            zone_temp_246: self.zone_temp_range.1,
            zone_press_12: 1.0,
            zone_press_34: 1.0,
            zone_press_56: 1.0,
            cooling_time: self.cooling_time_range.1,
            target_temp: 0.0,
        };
        record_to_schedule(&longest, &self.setup).map_err(|e| {
            Error::invalid("zone_time_range", format!("longest record does not fit: {e}"))
        })?;
        Ok(())
    }
}

/// Features of one record; the two zone temperatures are non-decreasing.
fn draw_record(rng: &mut ChaCha8Rng, config: &GeneratorConfig) -> HeatingRecord {
    let zone_time_12 = draw(rng, config.zone_time_range);
    let zone_time_34 = draw(rng, config.zone_time_range);
    let zone_time_56 = draw(rng, config.zone_time_range);
    let a = draw(rng, config.zone_temp_range);
    let b = draw(rng, config.zone_temp_range);
    let cooling_time = draw(rng, config.cooling_time_range);
    HeatingRecord {
        zone_time_12,
        zone_time_34,
        zone_time_56,
        zone_temp_135: a.min(b),
        zone_temp_246: a.max(b),
        zone_press_12: draw(rng, PRESSURE_RANGE),
        zone_press_34: draw(rng, PRESSURE_RANGE),
        zone_press_56: draw(rng, PRESSURE_RANGE),
        cooling_time,
        target_temp: 0.0,
    }
}

/// Generates `config.n_records` records. Features and noise are drawn
/// sequentially from the seed; simulations run concurrently and the output
/// keeps the draw order. Records whose simulation fails are dropped, and
/// generation fails when more than 1% are dropped.
pub fn generate_dataset(config: &GeneratorConfig) -> Result<Vec<HeatingRecord>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let noise = Normal::new(0.0, config.noise_sigma)
        .map_err(|e| Error::invalid("noise_sigma", e.to_string()))?;
    let drafts: Vec<(HeatingRecord, f64)> = (0..config.n_records)
        .map(|_| {
            let r = draw_record(&mut rng, config);
            (r, noise.sample(&mut rng))
        })
        .collect();

    let provider = CoefficientProvider::Physical(&config.material);
    let simulated: Vec<Result<HeatingRecord>> = drafts
        .par_iter()
        .map(|(r, eps)| {
            let y = predict(r, provider, &config.setup)?;
            Ok(HeatingRecord {
                target_temp: y + eps,
                ..*r
            })
        })
        .collect();

    let mut out = Vec::with_capacity(config.n_records);
    let mut skipped = 0;
    for (i, r) in simulated.into_iter().enumerate() {
        match r {
            Ok(r) => out.push(r),
            Err(e) => {
                warn!("record {i} skipped: {e}");
                skipped += 1;
            }
        }
    }
    if skipped * 100 > config.n_records {
        return Err(Error::Generation {
            skipped,
            total: config.n_records,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{SpatialGrid, TimeGrid};
    use crate::solver::{BoundaryConditions, HeatModel, ParamScale};
    use crate::trainer::evaluate_mae;

    fn config(n_records: usize, noise_sigma: f64) -> GeneratorConfig {
        let spatial = SpatialGrid::new(0.1, 0.1, 6, 6).unwrap();
        let time = TimeGrid::from_step(60.0, 12).unwrap();
        GeneratorConfig {
            n_records,
            material: MaterialModel::carbon_steel(),
            zone_time_range: (120.0, 180.0),
            zone_temp_range: (1200.0, 1450.0),
            cooling_time_range: (30.0, 90.0),
            noise_sigma,
            seed: 11,
            setup: Setup {
                model: HeatModel::new(spatial, time, 300.0).unwrap(),
                template: BoundaryConditions {
                    kappa1: 30.0,
                    kappa2: 30.0,
                    eps1: 0.7,
                    eps2: 0.7,
                    ..BoundaryConditions::insulated(300.0)
                },
                cooling_ambient: 300.0,
                scale: ParamScale::default(),
            },
        }
    }

    #[test]
    fn noiseless_data_is_reproduced_by_its_generator() {
        let c = config(20, 0.0);
        let data = generate_dataset(&c).unwrap();
        assert_eq!(data.len(), 20);
        let mae = evaluate_mae(&data, CoefficientProvider::Physical(&c.material), &c.setup).unwrap();
        assert_eq!(mae, 0.0);
    }

    #[test]
    fn noise_floor_matches_half_normal_mean() {
        let c = config(1000, 5.0);
        let data = generate_dataset(&c).unwrap();
        let mae = evaluate_mae(&data, CoefficientProvider::Physical(&c.material), &c.setup).unwrap();
        let expected = 5.0 * (2.0 / std::f64::consts::PI).sqrt();
        assert!((mae - expected).abs() < 0.1 * expected, "{mae} vs {expected}");
    }

    #[test]
    fn same_seed_same_dataset() {
        let c = config(15, 5.0);
        assert_eq!(generate_dataset(&c).unwrap(), generate_dataset(&c).unwrap());
        let other = GeneratorConfig { seed: 12, ..c.clone() };
        assert_ne!(generate_dataset(&c).unwrap(), generate_dataset(&other).unwrap());
    }

    #[test]
    fn features_respect_ranges() {
        let c = config(50, 5.0);
        for r in generate_dataset(&c).unwrap() {
            assert!(r.zone_temp_135 <= r.zone_temp_246);
            for t in [r.zone_time_12, r.zone_time_34, r.zone_time_56] {
                assert!((120.0..180.0).contains(&t));
            }
            assert!(r.target_temp > 0.0);
            assert!(r.target_temp <= c.zone_temp_range.1 + 3.0 * c.noise_sigma);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = config(10, 5.0);
        c.n_records = 0;
        assert!(generate_dataset(&c).is_err());
        let mut c = config(10, 5.0);
        c.zone_temp_range = (1400.0, 1200.0);
        assert!(matches!(generate_dataset(&c), Err(Error::InvalidArgument { field: "zone_temp_range", .. })));
        let mut c = config(10, 5.0);
        c.zone_time_range = (120.0, 600.0);
        assert!(generate_dataset(&c).is_err());
    }
}
