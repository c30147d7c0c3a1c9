//! Temperature-dependent thermophysical properties.
//!
//! Tables are piecewise linear in temperature and clamp to the end values
//! outside the tabulated range. They back the physical reference model and
//! the synthetic data generator; the trainable model never reads them.

use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PropertyKind {
    /// lambda, W/(m K)
    Conductivity,
    /// rho, kg/m^3
    Density,
    /// c, J/(kg K)
    HeatCapacity,
}

impl fmt::Display for PropertyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PropertyKind::Conductivity => "conductivity",
            PropertyKind::Density => "density",
            PropertyKind::HeatCapacity => "heat_capacity",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyTable {
    kind: PropertyKind,
    points: Vec<(f64, f64)>,
}

impl PropertyTable {
    pub fn new(kind: PropertyKind, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("points", "a table needs at least 2 points"));
        }
        for (i, &(t, v)) in points.iter().enumerate() {
            if !(t.is_finite() && v.is_finite() && v > 0.0) {
                return Err(Error::invalid(
                    "points",
                    format!("point {i} ({t}, {v}) must be finite with a positive value"),
                ));
            }
            if i > 0 && t <= points[i - 1].0 {
                return Err(Error::invalid(
                    "points",
                    format!("temperatures must be strictly increasing at point {i}"),
                ));
            }
        }
        Ok(Self { kind, points })
    }

    /// Table with the same value everywhere.
    pub fn constant(kind: PropertyKind, value: f64) -> Result<Self> {
        Self::new(kind, vec![(0.0, value), (1.0, value)])
    }

    pub fn kind(&self) -> PropertyKind {
        self.kind
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Reads a `T,value` CSV file (temperatures in K).
    pub fn from_csv(kind: PropertyKind, path: &Path) -> Result<Self> {
        let io = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let text = std::fs::read_to_string(path).map_err(io)?;
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let parse_err = |line: usize, reason: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["T", "value"] {
            return Err(parse_err(1, "expected header `T,value`".into()));
        }
        let mut points = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| parse_err(line, e.to_string()))?;
            let num = |j: usize| -> Result<f64> {
                row.get(j)
                    .ok_or_else(|| parse_err(line, "missing column".into()))?
                    .parse::<f64>()
                    .map_err(|e| parse_err(line, e.to_string()))
            };
            points.push((num(0)?, num(1)?));
        }
        Self::new(kind, points).map_err(|e| parse_err(0, e.to_string()))
    }

    pub fn interpolate(&self, t: f64) -> f64 {
        interpolate_property(self, t)
    }
}

/// Piecewise-linear lookup with constant extrapolation past either end.
pub fn interpolate_property(table: &PropertyTable, t: f64) -> f64 {
    let pts = &table.points;
    let (t0, v0) = pts[0];
    let (tn, vn) = pts[pts.len() - 1];
    if t <= t0 {
        return v0;
    }
    if t >= tn {
        return vn;
    }
    // first node strictly above t; t0 < t < tn so 1 <= hi < len
    let hi = pts.partition_point(|&(ti, _)| ti <= t);
    let (ta, va) = pts[hi - 1];
    let (tb, vb) = pts[hi];
    let w = (t - ta) / (tb - ta);
    va + w * (vb - va)
}

/// Least-squares polynomial fit, coefficients lowest degree first.
pub fn fit_polynomial(points: &[(f64, f64)], degree: usize) -> Result<Vec<f64>> {
    if !(1..=5).contains(&degree) {
        return Err(Error::invalid("degree", format!("must be in 1..=5, got {degree}")));
    }
    if points.len() <= degree {
        return Err(Error::invalid(
            "points",
            format!("need more than {degree} points, got {}", points.len()),
        ));
    }
    // Work in t / t_scale so the Vandermonde columns stay comparable.
    let t_scale = points
        .iter()
        .map(|p| p.0.abs())
        .fold(0.0_f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let cols = degree + 1;
    let vander = DMatrix::from_fn(points.len(), cols, |i, j| (points[i].0 / t_scale).powi(j as i32));
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));

    let svd = vander.svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    if !(s_max > 0.0) || s_min <= s_max * 1e-12 {
        return Err(Error::DegenerateFit(format!(
            "design matrix is rank deficient (singular values {s_min:e} .. {s_max:e})"
        )));
    }
    let scaled = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::DegenerateFit(e.to_string()))?;
    Ok(scaled
        .iter()
        .enumerate()
        .map(|(j, c)| c / t_scale.powi(j as i32))
        .collect())
}

pub fn eval_polynomial(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialModel {
    pub name: String,
    lambda: PropertyTable,
    rho: PropertyTable,
    c: PropertyTable,
}

impl MaterialModel {
    pub fn new(
        name: impl Into<String>,
        lambda: PropertyTable,
        rho: PropertyTable,
        c: PropertyTable,
    ) -> Result<Self> {
        let expect = [
            (&lambda, PropertyKind::Conductivity, "lambda_table"),
            (&rho, PropertyKind::Density, "rho_table"),
            (&c, PropertyKind::HeatCapacity, "c_table"),
        ];
        for (table, kind, field) in expect {
            if table.kind != kind {
                return Err(Error::invalid(
                    field,
                    format!("expected a {kind} table, got {}", table.kind),
                ));
            }
        }
        Ok(Self {
            name: name.into(),
            lambda,
            rho,
            c,
        })
    }

    /// Temperature-independent material.
    pub fn constant(name: impl Into<String>, lambda: f64, rho: f64, c: f64) -> Result<Self> {
        Self::new(
            name,
            PropertyTable::constant(PropertyKind::Conductivity, lambda)?,
            PropertyTable::constant(PropertyKind::Density, rho)?,
            PropertyTable::constant(PropertyKind::HeatCapacity, c)?,
        )
    }

    /// Plain carbon steel, smoothed through the magnetic transition.
    ///
    /// Rounded handbook-style values; good enough to give the synthetic
    /// benchmark a realistic temperature dependence, not a reference grade.
    pub fn carbon_steel() -> Self {
        let table = |kind, pts: &[(f64, f64)]| PropertyTable::new(kind, pts.to_vec()).unwrap();
        Self {
            name: "carbon-steel".into(),
            lambda: table(
                PropertyKind::Conductivity,
                &[
                    (300.0, 54.0),
                    (400.0, 52.0),
                    (600.0, 45.5),
                    (800.0, 38.5),
                    (1000.0, 31.0),
                    (1200.0, 28.0),
                    (1400.0, 29.5),
                    (1600.0, 31.0),
                ],
            ),
            rho: table(
                PropertyKind::Density,
                &[
                    (300.0, 7850.0),
                    (600.0, 7760.0),
                    (900.0, 7660.0),
                    (1200.0, 7560.0),
                    (1600.0, 7430.0),
                ],
            ),
            c: table(
                PropertyKind::HeatCapacity,
                &[
                    (300.0, 470.0),
                    (400.0, 500.0),
                    (600.0, 555.0),
                    (800.0, 620.0),
                    (1000.0, 680.0),
                    (1200.0, 690.0),
                    (1400.0, 700.0),
                    (1600.0, 710.0),
                ],
            ),
        }
    }

    pub fn lambda_table(&self) -> &PropertyTable {
        &self.lambda
    }

    pub fn rho_table(&self) -> &PropertyTable {
        &self.rho
    }

    pub fn c_table(&self) -> &PropertyTable {
        &self.c
    }

    /// Regression baseline: each table replaced by its least-squares
    /// polynomial of `degree`, resampled at `samples` evenly spaced
    /// temperatures over the table's range.
    pub fn regressed(&self, degree: usize, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::invalid("samples", "need at least 2 samples"));
        }
        let refit = |table: &PropertyTable| -> Result<PropertyTable> {
            let coeffs = fit_polynomial(&table.points, degree)?;
            let lo = table.points[0].0;
            let hi = table.points[table.points.len() - 1].0;
            let points = (0..samples)
                .map(|i| {
                    let t = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
                    (t, eval_polynomial(&coeffs, t))
                })
                .collect();
            PropertyTable::new(table.kind, points)
        };
        Self::new(
            format!("{}-poly{degree}", self.name),
            refit(&self.lambda)?,
            refit(&self.rho)?,
            refit(&self.c)?,
        )
    }
}

/// Conductivity-role and capacity-role coefficients at temperature `t`:
/// `(lambda(t), rho(t) * c(t))`.
pub fn physical_coefficients(material: &MaterialModel, t: f64) -> (f64, f64) {
    let phi = material.lambda.interpolate(t);
    let omega = material.rho.interpolate(t) * material.c.interpolate(t);
    (phi, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_point() -> PropertyTable {
        PropertyTable::new(PropertyKind::Conductivity, vec![(300.0, 50.0), (400.0, 40.0)]).unwrap()
    }

    #[test]
    fn interpolation_examples() {
        let t = two_point();
        assert_eq!(interpolate_property(&t, 350.0), 45.0);
        assert_eq!(interpolate_property(&t, 300.0), 50.0);
        assert_eq!(interpolate_property(&t, 1000.0), 40.0);
        assert_eq!(interpolate_property(&t, 1.0), 50.0);
    }

    #[test]
    fn table_validation() {
        let k = PropertyKind::Density;
        assert!(PropertyTable::new(k, vec![(300.0, 1.0)]).is_err());
        assert!(PropertyTable::new(k, vec![(300.0, 1.0), (300.0, 2.0)]).is_err());
        assert!(PropertyTable::new(k, vec![(300.0, 1.0), (400.0, 0.0)]).is_err());
        assert!(PropertyTable::new(k, vec![(400.0, 1.0), (300.0, 2.0)]).is_err());
    }

    #[test]
    fn material_rejects_swapped_tables() {
        let lam = PropertyTable::constant(PropertyKind::Conductivity, 1.0).unwrap();
        let rho = PropertyTable::constant(PropertyKind::Density, 1.0).unwrap();
        let c = PropertyTable::constant(PropertyKind::HeatCapacity, 1.0).unwrap();
        assert!(MaterialModel::new("ok", lam.clone(), rho.clone(), c.clone()).is_ok());
        let err = MaterialModel::new("bad", rho, lam, c).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument { field: "lambda_table", .. }));
    }

    #[test]
    fn fit_exact_line() {
        let pts: Vec<_> = (0..5).map(|i| (300.0 + 100.0 * i as f64, 2.0 * (300.0 + 100.0 * i as f64) + 1.0)).collect();
        let c = fit_polynomial(&pts, 1).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-9, "{c:?}");
        assert!((c[1] - 2.0).abs() < 1e-9, "{c:?}");
    }

    #[test]
    fn fit_nested_model() {
        let pts = [(1.0, 3.0), (2.0, 5.0), (3.0, 7.0)];
        let c = fit_polynomial(&pts, 2).unwrap();
        assert!(c[2].abs() < 1e-9, "{c:?}");
        assert!((c[1] - 2.0).abs() < 1e-9 && (c[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fit_beats_generating_polynomial_on_noisy_data() {
        let truth = [4.0, -0.5, 0.25];
        // fixed pseudo-noise
        let noise = [0.3, -0.2, 0.05, -0.41, 0.12, 0.33, -0.07, -0.25, 0.18, -0.02];
        let pts: Vec<_> = (0..10)
            .map(|i| {
                let t = i as f64 * 0.7 - 2.0;
                (t, eval_polynomial(&truth, t) + noise[i])
            })
            .collect();
        let sse = |c: &[f64]| pts.iter().map(|&(t, v)| (v - eval_polynomial(c, t)).powi(2)).sum::<f64>();
        let fitted = fit_polynomial(&pts, 2).unwrap();
        assert!(sse(&fitted) <= sse(&truth) + 1e-9);
    }

    #[test]
    fn fit_errors() {
        assert!(matches!(fit_polynomial(&[(1.0, 1.0), (2.0, 2.0)], 0), Err(Error::InvalidArgument { .. })));
        assert!(matches!(fit_polynomial(&[(1.0, 1.0), (2.0, 2.0)], 2), Err(Error::InvalidArgument { .. })));
        let dup = [(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)];
        assert!(matches!(fit_polynomial(&dup, 2), Err(Error::DegenerateFit(_))));
    }

    #[test]
    fn physical_coefficient_examples() {
        let m = MaterialModel::constant("m", 50.0, 7800.0, 500.0).unwrap();
        let (phi, omega) = physical_coefficients(&m, 321.0);
        assert_eq!(phi, 50.0);
        assert_eq!(omega, 3.9e6);
        assert_eq!(physical_coefficients(&m, 1500.0), (phi, omega));

        let steel = MaterialModel::carbon_steel();
        let (phi, omega) = physical_coefficients(&steel, 600.0);
        assert_eq!(phi, 45.5);
        assert_eq!(omega, 7760.0 * 555.0);
    }

    #[test]
    fn regressed_baseline_tracks_tables() {
        let steel = MaterialModel::carbon_steel();
        let poly = steel.regressed(2, 27).unwrap();
        for t in [400.0, 800.0, 1200.0] {
            let (a, _) = physical_coefficients(&steel, t);
            let (b, _) = physical_coefficients(&poly, t);
            assert!((a - b).abs() / a < 0.1, "{t}: {a} vs {b}");
        }
    }

    #[test]
    fn loads_csv_table() {
        let dir = std::env::temp_dir().join(format!("heat-adapt-mat-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("lambda.csv");
        std::fs::write(&path, "T,value\n300,50\n400,40\n").unwrap();
        let t = PropertyTable::from_csv(PropertyKind::Conductivity, &path).unwrap();
        assert_eq!(t, two_point());
        std::fs::write(&path, "temp,value\n300,50\n").unwrap();
        assert!(matches!(PropertyTable::from_csv(PropertyKind::Conductivity, &path), Err(Error::Parse { .. })));
        std::fs::remove_dir_all(&dir).ok();
    }

    proptest! {
        #[test]
        fn interpolation_bounded_and_continuous(t in 0.0f64..2000.0, dt in 1e-9f64..1e-6) {
            let steel = MaterialModel::carbon_steel();
            for table in [steel.lambda_table(), steel.rho_table(), steel.c_table()] {
                let lo = table.points().iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
                let hi = table.points().iter().map(|p| p.1).fold(0.0, f64::max);
                let v = table.interpolate(t);
                prop_assert!(v >= lo && v <= hi);
                prop_assert!((table.interpolate(t + dt) - v).abs() < 1.0 * dt + 1e-9);
            }
            let (phi, omega) = physical_coefficients(&steel, t);
            prop_assert!(phi > 0.0 && omega > 0.0);
        }
    }
}
