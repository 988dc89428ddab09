//! `key = value` run configuration.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use nalgebra::Vector3;
use polaron_core::lab::ScanSpec;
use polaron_core::spectral::SolverSettings;
use polaron_core::{
    build_cylindrical_grid, CutoffProfile, Error, ModeGrid, PolarizationKind, PolaronModel, PolaronParams, Tolerances,
};

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Cylindrical {
        n_radial: usize,
        n_polar: usize,
        n_azimuthal: usize,
        k_min: f64,
        k_max: f64,
    },
    /// Explicit nodes `(k, weight)`.
    Points(Vec<([f64; 3], f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScanAxis {
    P([f64; 3]),
    Mass,
    Coupling,
    PhotonMass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: PolaronParams,
    pub grid: GridSpec,
    pub axis: [f64; 3],
    pub n_max: usize,
    pub cutoff: CutoffProfile,
    pub polarization: PolarizationKind,
    pub solver: SolverSettings,
    pub tolerances: Tolerances,
    pub checks: Vec<String>,
    pub output: PathBuf,
    pub n_eigs: usize,
    pub scan_axis: ScanAxis,
    pub scan_range: (f64, f64),
    pub scan_points: usize,
    pub p_ref: f64,
    pub segments: usize,
    pub photon_masses: Vec<f64>,
    pub gap_photon_mass: f64,
    pub sector_clusters: usize,
    /// The configuration text, line by line, for output headers.
    pub lines: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, 0.3),
            grid: GridSpec::Cylindrical { n_radial: 1, n_polar: 1, n_azimuthal: 4, k_min: 0.5, k_max: 1.5 },
            axis: [0.0, 0.0, 1.0],
            n_max: 3,
            cutoff: CutoffProfile::Sharp { kappa: 0.05, lambda: 2.0 },
            polarization: PolarizationKind::Xy,
            solver: SolverSettings::default(),
            tolerances: Tolerances::default(),
            checks: vec!["all".into()],
            output: PathBuf::from("out"),
            n_eigs: 8,
            scan_axis: ScanAxis::P([0.0, 0.0, 1.0]),
            scan_range: (-1.0, 1.0),
            scan_points: 21,
            p_ref: 1.0,
            segments: 30,
            photon_masses: vec![0.0, 0.1, 0.3],
            gap_photon_mass: 0.2,
            sector_clusters: 12,
            lines: Vec::new(),
        }
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

fn floats(line: usize, value: &str) -> Result<Vec<f64>, Error> {
    value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| err(line, format!("`{s}` is not a number"))))
        .collect()
}

fn float(line: usize, value: &str) -> Result<f64, Error> {
    match floats(line, value)?.as_slice() {
        [x] => Ok(*x),
        _ => Err(err(line, "expected one number")),
    }
}

fn vec3(line: usize, value: &str) -> Result<[f64; 3], Error> {
    match floats(line, value)?.as_slice() {
        [a, b, c] => Ok([*a, *b, *c]),
        _ => Err(err(line, "expected three numbers")),
    }
}

fn count(line: usize, value: &str) -> Result<usize, Error> {
    value.parse().map_err(|_| err(line, format!("`{value}` is not a non-negative integer")))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut cfg = RunConfig::default();
        let mut cyl = (1usize, 1usize, 4usize, 0.5f64, 1.5f64);
        let mut points: Option<Vec<([f64; 3], f64)>> = None;
        let mut grid_kind = "cylindrical".to_string();
        let mut scan_direction = [0.0, 0.0, 1.0];
        let mut scan_kind = "p".to_string();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            cfg.lines.push(raw.trim_end().to_string());
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| err(n, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            let p = &mut cfg.params;
            match key {
                "p" => p.p = vec3(n, value)?,
                "mass" => p.mass = float(n, value)?,
                "photon_mass" => p.photon_mass = float(n, value)?,
                "coupling" => p.coupling = float(n, value)?,
                "grid" => match value {
                    "cylindrical" | "points" => grid_kind = value.to_string(),
                    _ => return Err(err(n, "grid must be `cylindrical` or `points`")),
                },
                "n_radial" => cyl.0 = count(n, value)?,
                "n_polar" => cyl.1 = count(n, value)?,
                "n_azimuthal" => cyl.2 = count(n, value)?,
                "k_min" => cyl.3 = float(n, value)?,
                "k_max" => cyl.4 = float(n, value)?,
                "points" => {
                    let mut nodes = Vec::new();
                    for node in value.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                        match floats(n, node)?.as_slice() {
                            [a, b, c, w] => nodes.push(([*a, *b, *c], *w)),
                            _ => return Err(err(n, "each node needs `kx ky kz weight`")),
                        }
                    }
                    points = Some(nodes);
                }
                "axis" => cfg.axis = vec3(n, value)?,
                "n_max" => cfg.n_max = count(n, value)?,
                "cutoff" => {
                    let mut parts = value.split_whitespace();
                    let kind = parts.next().unwrap_or("");
                    let rest: Vec<&str> = parts.collect();
                    let nums = floats(n, &rest.join(" "))?;
                    cfg.cutoff = match (kind, nums.as_slice()) {
                        ("sharp", [kappa, lambda]) => CutoffProfile::Sharp { kappa: *kappa, lambda: *lambda },
                        ("exponential", [lambda]) => CutoffProfile::Exponential { lambda: *lambda },
                        _ => return Err(err(n, "cutoff is `sharp KAPPA LAMBDA` or `exponential LAMBDA`")),
                    };
                }
                "polarization" => {
                    let mut parts = value.splitn(2, char::is_whitespace);
                    cfg.polarization = match (parts.next().unwrap_or(""), parts.next()) {
                        ("xy", None) => PolarizationKind::Xy,
                        ("axis", Some(rest)) => PolarizationKind::Axis(vec3(n, rest)?),
                        _ => return Err(err(n, "polarization is `xy` or `axis X Y Z`")),
                    };
                }
                "tol" => cfg.solver.tol = float(n, value)?,
                "max_iter" => cfg.solver.max_iter = count(n, value)?,
                "seed" => cfg.solver.seed = value.parse().map_err(|_| err(n, "seed must be an integer"))?,
                "dense_threshold" => cfg.solver.dense_threshold = count(n, value)?,
                "cluster_tol" => cfg.solver.cluster_tol = float(n, value)?,
                "atol" => cfg.tolerances.atol = float(n, value)?,
                "rtol" => cfg.tolerances.rtol = float(n, value)?,
                "strictness" => cfg.tolerances.strictness = float(n, value)?,
                "checks" => {
                    cfg.checks = value
                        .split(|c: char| c == ',' || c.is_whitespace())
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect()
                }
                "output" => cfg.output = PathBuf::from(value),
                "n_eigs" => cfg.n_eigs = count(n, value)?,
                "scan" => match value {
                    "p" | "mass" | "coupling" | "photon_mass" => scan_kind = value.to_string(),
                    _ => return Err(err(n, "scan is one of p, mass, coupling, photon_mass")),
                },
                "scan_direction" => scan_direction = vec3(n, value)?,
                "scan_range" => match floats(n, value)?.as_slice() {
                    [a, b] => cfg.scan_range = (*a, *b),
                    _ => return Err(err(n, "scan_range needs two numbers")),
                },
                "scan_points" => cfg.scan_points = count(n, value)?,
                "p_ref" => cfg.p_ref = float(n, value)?,
                "segments" => cfg.segments = count(n, value)?,
                "photon_masses" => cfg.photon_masses = floats(n, value)?,
                "gap_photon_mass" => cfg.gap_photon_mass = float(n, value)?,
                "sector_clusters" => cfg.sector_clusters = count(n, value)?,
                _ => return Err(err(n, format!("unknown key `{key}`"))),
            }
        }
        cfg.grid = match grid_kind.as_str() {
            "points" => GridSpec::Points(points.ok_or_else(|| err(0, "grid = points needs a `points` line"))?),
            _ => GridSpec::Cylindrical {
                n_radial: cyl.0,
                n_polar: cyl.1,
                n_azimuthal: cyl.2,
                k_min: cyl.3,
                k_max: cyl.4,
            },
        };
        cfg.scan_axis = match scan_kind.as_str() {
            "mass" => ScanAxis::Mass,
            "coupling" => ScanAxis::Coupling,
            "photon_mass" => ScanAxis::PhotonMass,
            _ => ScanAxis::P(scan_direction),
        };
        cfg.params.validate()?;
        cfg.cutoff.validate()?;
        Ok(cfg)
    }

    pub fn build_grid(&self) -> Result<ModeGrid, Error> {
        let axis = Vector3::from(self.axis);
        match &self.grid {
            GridSpec::Cylindrical { n_radial, n_polar, n_azimuthal, k_min, k_max } => {
                build_cylindrical_grid(*n_radial, *n_polar, *n_azimuthal, *k_min, *k_max, axis)
            }
            GridSpec::Points(nodes) => {
                let pts: Vec<(Vector3<f64>, f64)> = nodes.iter().map(|(k, w)| (Vector3::from(*k), *w)).collect();
                ModeGrid::from_points(&pts, axis)
            }
        }
    }

    pub fn model(&self) -> Result<PolaronModel, Error> {
        PolaronModel::new(self.params, self.build_grid()?, self.n_max, self.cutoff, self.polarization)
    }

    pub fn scan_spec(&self) -> ScanSpec {
        let (a, b) = self.scan_range;
        let n = self.scan_points;
        match self.scan_axis {
            ScanAxis::P(dir) => ScanSpec::p_line(self.params, dir, a, b, n),
            ScanAxis::Mass => ScanSpec::mass_line(self.params, a, b, n),
            ScanAxis::Coupling => ScanSpec::coupling_line(self.params, a, b, n),
            ScanAxis::PhotonMass => ScanSpec::photon_mass_line(self.params, a, b, n),
        }
    }

    /// Position of a parameter point along the scan axis.
    pub fn scan_coordinate(&self, params: &PolaronParams) -> f64 {
        match self.scan_axis {
            ScanAxis::P(dir) => {
                let d = Vector3::from(dir);
                params.p_vec().dot(&d) / d.norm_squared()
            }
            ScanAxis::Mass => params.mass,
            ScanAxis::Coupling => params.coupling,
            ScanAxis::PhotonMass => params.photon_mass,
        }
    }
}
