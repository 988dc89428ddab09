//! Pull-through residuals and the photon-number / vacuum-overlap bounds for
//! ground states.

use nalgebra::{Matrix4, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::EnergyLab;
use crate::error::Result;
use crate::model::{omega, PolaronModel, PolaronParams};
use crate::operator::{vnorm, C64};
use crate::report::{CheckReport, Status, Verdict};
use crate::second_quant::pointwise_annihilation;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeResidual {
    pub mode: usize,
    pub k_index: usize,
    pub helicity: u8,
    /// Residual on states with at most n_max − 1 photons (worst ground vector).
    pub protected: f64,
    /// Residual on all states, including the n_max-photon ceiling.
    pub full: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PullThroughReport {
    pub p: [f64; 3],
    pub n_max: usize,
    pub energy: f64,
    pub ground_dim: usize,
    pub modes: Vec<ModeResidual>,
    pub max_protected: f64,
    pub max_full: f64,
}

impl PullThroughReport {
    /// The identity holds below the ceiling: protected residual within `tol`.
    pub fn to_check(&self, tol: f64) -> CheckReport {
        CheckReport {
            check: "pull_through".into(),
            property: "pull-through formula for the ground state on states below the photon-number ceiling".into(),
            status: if self.max_protected <= tol { Status::Pass } else { Status::Fail },
            worst_slack: -self.max_protected,
            samples: self.modes.len(),
            details: json!({
                "p": self.p,
                "n_max": self.n_max,
                "ground_dim": self.ground_dim,
                "max_protected": self.max_protected,
                "max_full": self.max_full,
                "tol": tol,
            }),
            notes: Vec::new(),
        }
    }
}

/// Pull-through residuals of the same model at each photon-number ceiling.
pub fn pull_through_sweep(model: &PolaronModel, n_max: &[usize], p: [f64; 3]) -> Result<Vec<PullThroughReport>> {
    n_max
        .iter()
        .map(|&n| {
            let mut m = model.clone();
            m.n_max = n;
            pull_through_residual(&EnergyLab::new(m)?, p)
        })
        .collect()
}

/// Per ground vector and mode: ‖a_λ(k)Φ‖ and the residual pair
/// (protected, full) of the pull-through identity.
struct Pulled {
    norms: Vec<f64>,
    protected: Vec<f64>,
    full: Vec<f64>,
}

fn pull_mode(
    lab: &EnergyLab,
    params: &PolaronParams,
    energies: &[f64],
    vectors: &[Vec<C64>],
    mode: usize,
) -> Result<Pulled> {
    let ops = lab.ops();
    let basis = ops.basis();
    let grid = basis.grid();
    let m = grid.modes()[mode];
    let a = ops.photon_operator(&pointwise_annihilation(basis, mode)?);
    let shifted = lab.hamiltonian(&params.with_p((params.p_vec() - m.k).into()));
    let g: Vector3<f64> = ops.coupling_vector(mode) / m.weight.sqrt();
    let dirac = ops.dirac();
    let mut spin = Matrix4::<C64>::zeros();
    for j in 0..3 {
        spin += dirac.alpha[j] * C64::new(g[j], 0.0);
    }
    let source = ops.spin_operator(&(spin * C64::new(params.coupling / 2f64.sqrt(), 0.0)));
    let w = omega(m.k.norm(), params.photon_mass);
    let ceiling = basis.n_max();
    let mut out = Pulled { norms: Vec::new(), protected: Vec::new(), full: Vec::new() };
    for (phi, &e) in vectors.iter().zip(energies) {
        let v = a.matvec(phi);
        let hv = shifted.matvec(&v);
        let rhs = source.matvec(phi);
        let mut prot = 0.0;
        let mut all = 0.0;
        for (idx, ((hx, x), r)) in hv.iter().zip(&v).zip(&rhs).enumerate() {
            let d = (hx + x * (w - e) - r).norm_sqr();
            all += d;
            if basis.total(idx / 4) < ceiling {
                prot += d;
            }
        }
        out.norms.push(vnorm(&v));
        out.protected.push(prot.sqrt());
        out.full.push(all.sqrt());
    }
    Ok(out)
}

fn ground_vectors(lab: &EnergyLab, params: &PolaronParams) -> Result<(Vec<f64>, Vec<Vec<C64>>)> {
    let gs = lab.ground_space(params)?;
    let vectors = gs.eigenvectors.iter().map(|v| v.as_slice().to_vec()).collect();
    Ok((gs.eigenvalues, vectors))
}

/// Residual of (H(p−k) − E + ω_m(k)) a_λ(k)Φ = (q/√2) α·g(k,λ) Φ for every
/// mode, with a_λ(kᵢ) = aᵢ/√wᵢ and g(kᵢ,λ) the coupling per unit weight.
pub fn pull_through_residual(lab: &EnergyLab, p: [f64; 3]) -> Result<PullThroughReport> {
    let params = lab.params().with_p(p);
    let (energies, vectors) = ground_vectors(lab, &params)?;
    let grid = &lab.model().grid;
    let pulled: Vec<Pulled> = (0..grid.n_modes())
        .into_par_iter()
        .map(|mode| pull_mode(lab, &params, &energies, &vectors, mode))
        .collect::<Result<_>>()?;
    let max = |xs: &[f64]| xs.iter().copied().fold(0.0, f64::max);
    let modes: Vec<ModeResidual> = pulled
        .iter()
        .enumerate()
        .map(|(mode, r)| ModeResidual {
            mode,
            k_index: mode / 2,
            helicity: grid.modes()[mode].helicity,
            protected: max(&r.protected),
            full: max(&r.full),
        })
        .collect();
    Ok(PullThroughReport {
        p,
        n_max: lab.model().n_max,
        energy: energies[0],
        ground_dim: vectors.len(),
        max_protected: modes.iter().map(|m| m.protected).fold(0.0, f64::max),
        max_full: modes.iter().map(|m| m.full).fold(0.0, f64::max),
        modes,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhotonBounds {
    pub p: [f64; 3],
    /// Largest ⟨Φ, NΦ⟩ over the orthonormal ground basis.
    pub number: f64,
    /// Smallest ‖P_Ω Φ‖² over the ground basis.
    pub vacuum_overlap: f64,
    /// Σᵢ (q²/2)|gᵢ|² / (E(p−kᵢ) − E(p) + ω_m(kᵢ))²
    pub bound: f64,
    /// Extra allowance from the truncation ceiling: the bound with each
    /// pull-through residual added to the source term, minus `bound`.
    pub truncation_slack: f64,
    pub check: CheckReport,
}

/// ⟨N⟩ ≤ Σᵢ (q²/2)|gᵢ|²/Dᵢ² (plus truncation slack) and ‖P_ΩΦ‖² ≥ 1 − ⟨N⟩.
pub fn photon_bounds(lab: &EnergyLab, p: [f64; 3]) -> Result<PhotonBounds> {
    let params = lab.params().with_p(p);
    let (energies, vectors) = ground_vectors(lab, &params)?;
    let ops = lab.ops();
    let basis = ops.basis();
    let grid = basis.grid();
    let e = energies[0];
    let shifted: Vec<PolaronParams> =
        (0..grid.n_kpoints()).map(|i| params.with_p((params.p_vec() - grid.kpoint(i)).into())).collect();
    let e_shift = lab.energies(&shifted)?;
    let pulled: Vec<Pulled> = (0..grid.n_modes())
        .into_par_iter()
        .map(|mode| pull_mode(lab, &params, &energies, &vectors, mode))
        .collect::<Result<_>>()?;

    let q = params.coupling;
    let tol = lab.bound_tol();
    let mut v = Verdict::new();
    let mut bound = 0.0;
    let mut with_slack = vec![0.0; vectors.len()];
    let mut number_from_modes = vec![0.0; vectors.len()];
    for (mode, pm) in pulled.iter().enumerate() {
        let m = grid.modes()[mode];
        let denom = e_shift[mode / 2] - e + omega(m.k.norm(), params.photon_mass);
        if !(denom > 0.0) {
            v.fail(format!("non-positive resolvent denominator {denom:.3e} at mode {mode}"));
            continue;
        }
        let g2 = ops.coupling_vector(mode).norm_squared();
        bound += 0.5 * q * q * g2 / (denom * denom);
        let source = q.abs() / 2f64.sqrt() * (g2 / m.weight).sqrt();
        for (b, (&d, &n)) in pm.full.iter().zip(&pm.norms).enumerate() {
            with_slack[b] += m.weight * (source + d).powi(2) / (denom * denom);
            number_from_modes[b] += m.weight * n * n;
        }
    }
    let mut number = 0.0f64;
    let mut overlap = f64::INFINITY;
    let mut slack = 0.0f64;
    for (b, phi) in vectors.iter().enumerate() {
        let n: f64 = phi.iter().enumerate().map(|(idx, z)| z.norm_sqr() * basis.total(idx / 4) as f64).sum();
        let vac: f64 = (0..4).map(|s| phi[s].norm_sqr()).sum();
        let allowance = (with_slack[b] - bound).max(0.0);
        v.at_most(n, bound + allowance, tol, || format!("photon number, ground vector {b}"));
        v.at_most(1.0 - n, vac, tol, || format!("vacuum overlap, ground vector {b}"));
        v.at_most((n - number_from_modes[b]).abs(), 0.0, tol, || format!("Σ‖a_λ(k)Φ‖² = ⟨N⟩, ground vector {b}"));
        number = number.max(n);
        overlap = overlap.min(vac);
        slack = slack.max(allowance);
    }
    let check = v.finish(
        "photon_bounds",
        "photon-number bound from the pull-through formula and the vacuum overlap ‖P_ΩΦ‖² ≥ 1 − ⟨N⟩",
        json!({"number": number, "vacuum_overlap": overlap, "bound": bound, "truncation_slack": slack, "ground_dim": vectors.len()}),
    );
    Ok(PhotonBounds { p, number, vacuum_overlap: overlap, bound, truncation_slack: slack, check })
}

#[cfg(test)]
mod tests {
    use nalgebra::Vector3;

    use super::super::fixtures::ring_model;
    use super::*;
    use crate::cutoff::CutoffProfile;
    use crate::grid::ModeGrid;
    use crate::model::PolaronModel;
    use crate::polarization::PolarizationKind;
    use crate::report::Status;

    fn single_node(n_max: usize, q: f64) -> EnergyLab {
        let grid = ModeGrid::from_points(&[(Vector3::new(1.0, 0.0, 0.0), 0.8)], Vector3::z()).unwrap();
        let model = PolaronModel::new(
            PolaronParams::new([0.0, 0.0, 0.2], 1.0, 0.0, q),
            grid,
            n_max,
            CutoffProfile::Sharp { kappa: 0.1, lambda: 2.0 },
            PolarizationKind::Xy,
        )
        .unwrap();
        EnergyLab::new(model).unwrap()
    }

    #[test]
    fn free_pull_through_vanishes() {
        let lab = single_node(2, 0.0);
        let r = pull_through_residual(&lab, [0.0, 0.0, 0.2]).unwrap();
        assert!(r.max_full < 1e-13);
    }

    #[test]
    fn truncation_residual_sits_at_the_ceiling() {
        let mut last = f64::INFINITY;
        for n_max in 1..=4 {
            let lab = single_node(n_max, 0.3);
            let r = pull_through_residual(&lab, [0.0, 0.0, 0.2]).unwrap();
            assert!(r.max_protected < 1e-12, "n_max {n_max}: {}", r.max_protected);
            assert!(r.max_full < last, "n_max {n_max}: {} vs {last}", r.max_full);
            last = r.max_full;
        }
    }

    #[test]
    fn free_photon_bounds_trivial() {
        let params = PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, 0.0);
        let lab = EnergyLab::new(ring_model(2, params)).unwrap();
        let b = photon_bounds(&lab, params.p).unwrap();
        assert!(b.number.abs() < 1e-14);
        assert!((b.vacuum_overlap - 1.0).abs() < 1e-12);
        assert_eq!(b.bound, 0.0);
    }

    #[test]
    fn coupled_photon_bounds_hold_and_scale() {
        let params = PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, 0.3);
        let lab = EnergyLab::new(ring_model(2, params)).unwrap();
        let b = photon_bounds(&lab, params.p).unwrap();
        assert_eq!(b.check.status, Status::Pass, "{:?}", b.check.notes);
        assert!(b.number > 0.0 && b.number <= b.bound + b.truncation_slack);
        assert!(b.vacuum_overlap >= 1.0 - b.number - 1e-9);
    }
}
