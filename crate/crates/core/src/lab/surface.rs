use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{EnergyLab, EnergySample};
use crate::error::{Error, Result};
use crate::model::PolaronParams;

/// Largest number of points a single scan may request.
pub const MAX_SCAN_POINTS: usize = 100_000;

/// Which parameter points a scan visits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    /// Names of the parameters that vary, for output headers.
    pub varying: Vec<String>,
    pub points: Vec<PolaronParams>,
}

fn linspace(from: f64, to: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![from],
        _ => (0..n).map(|i| from + (to - from) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl ScanSpec {
    pub fn single(params: PolaronParams) -> Self {
        ScanSpec { varying: Vec::new(), points: vec![params] }
    }

    /// p = t·direction for `n` values of t in [from, to].
    pub fn p_line(base: PolaronParams, direction: [f64; 3], from: f64, to: f64, n: usize) -> Self {
        let points = linspace(from, to, n)
            .into_iter()
            .map(|t| base.with_p([t * direction[0], t * direction[1], t * direction[2]]))
            .collect();
        ScanSpec { varying: vec!["p".into()], points }
    }

    pub fn mass_line(base: PolaronParams, from: f64, to: f64, n: usize) -> Self {
        let points = linspace(from, to, n).into_iter().map(|m| base.with_mass(m)).collect();
        ScanSpec { varying: vec!["mass".into()], points }
    }

    pub fn coupling_line(base: PolaronParams, from: f64, to: f64, n: usize) -> Self {
        let points = linspace(from, to, n).into_iter().map(|q| base.with_coupling(q)).collect();
        ScanSpec { varying: vec!["coupling".into()], points }
    }

    pub fn photon_mass_line(base: PolaronParams, from: f64, to: f64, n: usize) -> Self {
        let points = linspace(from, to, n).into_iter().map(|m| base.with_photon_mass(m)).collect();
        ScanSpec { varying: vec!["photon_mass".into()], points }
    }

    /// Cartesian product of two p components on an `n × n` grid.
    pub fn p_plane(base: PolaronParams, axes: (usize, usize), range: (f64, f64), n: usize) -> Self {
        let ts = linspace(range.0, range.1, n);
        let mut points = Vec::with_capacity(n * n);
        for &a in &ts {
            for &b in &ts {
                let mut p = base.p;
                p[axes.0] = a;
                p[axes.1] = b;
                points.push(base.with_p(p));
            }
        }
        ScanSpec { varying: vec!["p".into()], points }
    }
}

/// Sampled ground energies, sorted by parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergySurface {
    pub base: PolaronParams,
    pub varying: Vec<String>,
    pub samples: Vec<EnergySample>,
    /// Set when any sample missed the solver tolerance.
    pub flagged: bool,
}

pub(crate) fn param_order(a: &PolaronParams, b: &PolaronParams) -> Ordering {
    let ka = [a.p[0], a.p[1], a.p[2], a.mass, a.photon_mass, a.coupling];
    let kb = [b.p[0], b.p[1], b.p[2], b.mass, b.photon_mass, b.coupling];
    ka.iter().zip(&kb).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

impl EnergySurface {
    pub fn energy_at(&self, params: &PolaronParams) -> Option<f64> {
        let key = params.key();
        self.samples.iter().find(|s| s.params.key() == key).map(|s| s.energy)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// One ground-energy solve per point on the lab's shared basis.
pub fn scan(lab: &EnergyLab, spec: &ScanSpec) -> Result<EnergySurface> {
    if spec.points.len() > MAX_SCAN_POINTS {
        return Err(Error::BudgetExceeded { requested: spec.points.len() as u128, budget: MAX_SCAN_POINTS });
    }
    let mut samples = lab.samples(&spec.points)?;
    samples.sort_by(|a, b| param_order(&a.params, &b.params));
    samples.dedup_by(|a, b| a.params.key() == b.params.key());
    let flagged = samples.iter().any(|s| !s.meta.converged);
    Ok(EnergySurface { base: lab.params(), varying: spec.varying.clone(), samples, flagged })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::ring_model;
    use super::super::ground_energy;
    use super::*;
    use crate::spectral::dense_spectrum;

    #[test]
    fn single_point_matches_ground_energy() {
        let params = PolaronParams::new([0.1, 0.0, 0.2], 1.0, 0.0, 0.4);
        let model = ring_model(2, params);
        let lab = EnergyLab::new(model.clone()).unwrap();
        let s = scan(&lab, &ScanSpec::single(params)).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.samples[0].energy, ground_energy(&model).unwrap());
    }

    #[test]
    fn free_p_line_is_the_dirac_curve() {
        let base = PolaronParams::new([0.0; 3], 0.7, 0.0, 0.0);
        let lab = EnergyLab::new(ring_model(2, base)).unwrap();
        let s = scan(&lab, &ScanSpec::p_line(base, [0.0, 0.0, 1.0], -1.0, 1.0, 9)).unwrap();
        assert_eq!(s.len(), 9);
        assert!(!s.flagged);
        for w in s.samples.windows(2) {
            assert!(param_order(&w[0].params, &w[1].params).is_lt());
        }
        for smp in &s.samples {
            let p = smp.params.p[2];
            assert!((smp.energy + (p * p + 0.49).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn mass_line_matches_dense_oracle() {
        let base = PolaronParams::new([0.0, 0.0, 0.4], 0.0, 0.0, 0.5);
        let lab = EnergyLab::new(ring_model(2, base)).unwrap();
        let s = scan(&lab, &ScanSpec::mass_line(base, -1.0, 1.0, 5)).unwrap();
        for smp in &s.samples {
            let oracle = dense_spectrum(&lab.hamiltonian(&smp.params), 5000).unwrap().lowest();
            assert!((smp.energy - oracle).abs() < 1e-10);
        }
        assert!(s.energy_at(&base.with_mass(0.5)).is_some());
    }
}
