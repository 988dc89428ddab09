//! Ground-energy surfaces E_m(p, M, q) and the numerical checks run on them.
//!
//! Every energy comes from the same basis: the fibre Hamiltonian depends on
//! the parameters only through fixed operator coefficients, so E(p − k) is
//! evaluated on the truncated model itself with no re-gridding.

mod dispersion;
mod gauge;
mod photon;
mod properties;
mod surface;

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FibreOperators, PolaronModel, PolaronParams};
use crate::operator::OperatorMatrix;
use crate::report::Tolerances;
use crate::spectral::{
    ground_space, lowest_eigenpairs, spectral_norm_estimate, SolverKind, SolverSettings, SpectrumResult,
};

pub use dispersion::{
    dispersion_report, essential_gap, ir_criterion, ir_criterion_with_gaps, DispersionEntry, DispersionReport,
    EssentialGap, GapRegime, IRCriterionReport, IrSample,
};
pub use gauge::{check_degeneracy, check_gauge};
pub use photon::{
    photon_bounds, pull_through_residual, pull_through_sweep, ModeResidual, PhotonBounds, PullThroughReport,
};
pub use properties::{
    check_concavity, check_inverse_energy, check_lipschitz, check_mass_monotone, check_mass_reflection,
    check_rotation_symmetry, random_segments, Segment,
};
pub use surface::{scan, EnergySurface, ScanSpec};

/// Lanczos steps used for the spectral-norm estimate behind every tolerance.
const NORM_STEPS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveMeta {
    pub solver: SolverKind,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub params: PolaronParams,
    pub energy: f64,
    pub meta: SolveMeta,
}

/// A model with its assembled operator pieces, solver settings and a cache
/// of ground energies keyed by the exact parameter bits.
pub struct EnergyLab {
    model: PolaronModel,
    ops: FibreOperators,
    settings: SolverSettings,
    tolerances: Tolerances,
    scale: f64,
    cache: Mutex<HashMap<[u64; 6], EnergySample>>,
}

impl EnergyLab {
    pub fn new(model: PolaronModel) -> Result<Self> {
        Self::with_settings(model, SolverSettings::default(), Tolerances::default())
    }

    pub fn with_settings(model: PolaronModel, settings: SolverSettings, tolerances: Tolerances) -> Result<Self> {
        let ops = FibreOperators::new(&model)?;
        let h = ops.hamiltonian(&model.params);
        let scale = spectral_norm_estimate(&h, NORM_STEPS, settings.seed).max(1.0);
        Ok(EnergyLab { model, ops, settings, tolerances, scale, cache: Mutex::new(HashMap::new()) })
    }

    pub fn model(&self) -> &PolaronModel {
        &self.model
    }

    pub fn params(&self) -> PolaronParams {
        self.model.params
    }

    pub fn ops(&self) -> &FibreOperators {
        &self.ops
    }

    pub fn settings(&self) -> &SolverSettings {
        &self.settings
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// Spectral-norm estimate of H at the base parameters (at least 1).
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `atol + rtol·scale`
    pub fn bound_tol(&self) -> f64 {
        self.tolerances.bound(self.scale)
    }

    /// `strictness·scale`
    pub fn strictness_floor(&self) -> f64 {
        self.tolerances.floor(self.scale)
    }

    pub fn hamiltonian(&self, params: &PolaronParams) -> OperatorMatrix {
        self.ops.hamiltonian(params)
    }

    pub fn sample(&self, params: &PolaronParams) -> Result<EnergySample> {
        params.validate()?;
        let key = params.key();
        if let Some(s) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(*s);
        }
        let h = self.ops.hamiltonian(params);
        let r = lowest_eigenpairs(&h, 1, &self.settings)?;
        let s = EnergySample {
            params: *params,
            energy: r.lowest(),
            meta: SolveMeta {
                solver: r.solver,
                residual: r.residuals[0],
                iterations: r.iterations,
                converged: r.converged,
            },
        };
        self.cache.lock().expect("cache poisoned").insert(key, s);
        Ok(s)
    }

    /// Lowest eigenvalue; a solve that misses the tolerance is an error.
    pub fn energy(&self, params: &PolaronParams) -> Result<f64> {
        let s = self.sample(params)?;
        if !s.meta.converged {
            return Err(Error::Solver(format!(
                "ground energy at {:?} did not converge (residual {:.2e})",
                params, s.meta.residual
            )));
        }
        Ok(s.energy)
    }

    /// Samples at all points, solving uncached ones in parallel; order preserved.
    pub fn samples(&self, points: &[PolaronParams]) -> Result<Vec<EnergySample>> {
        points.par_iter().map(|p| self.sample(p)).collect()
    }

    pub fn energies(&self, points: &[PolaronParams]) -> Result<Vec<f64>> {
        points.par_iter().map(|p| self.energy(p)).collect()
    }

    /// Orthonormal basis of the lowest eigenspace.
    pub fn ground_space(&self, params: &PolaronParams) -> Result<SpectrumResult> {
        params.validate()?;
        let r = ground_space(&self.ops.hamiltonian(params), &self.settings)?;
        if !r.converged {
            return Err(Error::Solver(format!("ground space at {params:?} did not converge")));
        }
        Ok(r)
    }

    /// Every cached sample, sorted by parameters.
    pub fn cached_samples(&self) -> Vec<EnergySample> {
        let mut out: Vec<EnergySample> = self.cache.lock().expect("cache poisoned").values().copied().collect();
        out.sort_by(|a, b| surface::param_order(&a.params, &b.params));
        out
    }
}

/// E_m(p) := inf σ(H_m(p)) for the model's own parameters.
pub fn ground_energy(model: &PolaronModel) -> Result<f64> {
    EnergyLab::new(model.clone())?.energy(&model.params)
}

#[cfg(test)]
pub(crate) mod fixtures {
    use nalgebra::Vector3;

    use crate::cutoff::CutoffProfile;
    use crate::grid::{build_cylindrical_grid, ModeGrid};
    use crate::model::{PolaronModel, PolaronParams};
    use crate::polarization::PolarizationKind;

    pub fn ring(n_az: usize, r0: f64, r1: f64) -> ModeGrid {
        build_cylindrical_grid(1, 1, n_az, r0, r1, Vector3::z()).unwrap()
    }

    pub fn ring_model(n_max: usize, params: PolaronParams) -> PolaronModel {
        PolaronModel::new(
            params,
            ring(4, 0.5, 1.5),
            n_max,
            CutoffProfile::Sharp { kappa: 0.05, lambda: 2.0 },
            PolarizationKind::Xy,
        )
        .unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::ring_model;
    use super::*;
    use crate::operator::{vdot, vnorm, C64};
    use crate::spectral::dense_spectrum;

    #[test]
    fn free_ground_energy_closed_form() {
        let m = ring_model(2, PolaronParams::new([0.0, 0.0, 1.0], 1.0, 0.0, 0.0));
        assert!((ground_energy(&m).unwrap() + 2f64.sqrt()).abs() < 1e-12);
        let m0 = ring_model(2, PolaronParams::new([0.0; 3], 0.0, 0.0, 0.0));
        assert!(ground_energy(&m0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn coupled_energy_matches_oracle_and_trial_state() {
        let params = PolaronParams::new([0.0; 3], 1.0, 0.0, 0.5);
        let model = ring_model(2, params);
        let lab = EnergyLab::new(model.clone()).unwrap();
        let e = lab.energy(&params).unwrap();
        let h = lab.hamiltonian(&params);
        let oracle = dense_spectrum(&h, 5000).unwrap().lowest();
        assert!((e - oracle).abs() < 1e-10);
        // variational bound from span{v, Hv}, v = negative-energy spinor ⊗ vacuum
        let dim = h.dim();
        let mut v = vec![C64::new(0.0, 0.0); dim];
        v[2] = C64::new(1.0, 0.0);
        let hv = h.matvec(&v);
        let a = vdot(&v, &hv).re;
        let mut w: Vec<C64> = hv.iter().zip(&v).map(|(x, y)| x - y * a).collect();
        let b = vnorm(&w);
        w.iter_mut().for_each(|x| *x /= b);
        let d = vdot(&w, &h.matvec(&w)).re;
        let trial = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt();
        assert!((a + 1.0).abs() < 1e-14);
        assert!(trial < -1.0 - 1e-3, "{trial}");
        assert!(e <= trial + 1e-12);
    }

    #[test]
    fn cache_returns_identical_sample() {
        let params = PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, 0.3);
        let lab = EnergyLab::new(ring_model(2, params)).unwrap();
        let a = lab.sample(&params).unwrap();
        let b = lab.sample(&params).unwrap();
        assert_eq!(a, b);
        assert_eq!(lab.cached_samples().len(), 1);
    }

    #[test]
    fn scale_is_a_lower_estimate_of_the_norm() {
        let params = PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, 0.3);
        let lab = EnergyLab::new(ring_model(1, params)).unwrap();
        let spec = dense_spectrum(&lab.hamiltonian(&params), 5000).unwrap();
        let true_norm = spec.eigenvalues[0].abs().max(spec.eigenvalues.last().unwrap().abs());
        assert!(lab.scale() <= true_norm.max(1.0) + 1e-9);
        assert!(lab.scale() > 0.9 * true_norm);
    }
}
