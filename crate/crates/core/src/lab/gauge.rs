//! Polarization-gauge equivalence and the even degeneracy forced by the
//! rotation and reflection symmetries.

use std::f64::consts::PI;

use serde_json::json;

use super::EnergyLab;
use crate::error::Result;
use crate::grid::SymmetryTag;
use crate::model::FibreOperators;
use crate::operator::OperatorMatrix;
use crate::polarization::PolarizationField;
use crate::report::{hypothesis_not_satisfied, CheckReport, Verdict};
use crate::spectral::{dense_spectrum, lowest_eigenpairs};
use crate::symmetry::{gauge_unitary, kramers_pairing, reflection_operator, rotation_operator, sector_decompose};

/// Matrix-level gauge conjugation tolerance (times scale).
const CONJUGATION_TOL: f64 = 1e-11;
/// Chain and inverse rules of gauge unitaries (absolute).
const CHAIN_TOL: f64 = 1e-12;
/// Spectral agreement (times scale).
const SPECTRUM_TOL: f64 = 1e-9;
/// Commutation with the rotation and the reflection (times scale).
const COMMUTANT_TOL: f64 = 1e-10;
/// Eigenvalues compared when the matrix is too large for a dense solve.
const PARTIAL_SPECTRUM: usize = 24;

fn spectrum(lab: &EnergyLab, h: &OperatorMatrix) -> Result<Vec<f64>> {
    if h.dim() <= lab.settings().dense_threshold {
        Ok(dense_spectrum(h, lab.settings().dense_threshold)?.eigenvalues)
    } else {
        Ok(lowest_eigenpairs(h, PARTIAL_SPECTRUM, lab.settings())?.eigenvalues)
    }
}

/// U(e←e′) H(e′) U(e←e′)† = H(e), equal spectra, and the chain and inverse
/// rules through an intermediate field e″.
pub fn check_gauge(lab: &EnergyLab, e_prime: &PolarizationField, e_mid: &PolarizationField) -> Result<CheckReport> {
    let model = lab.model();
    let basis = lab.ops().basis();
    let params = lab.params();
    let scale = lab.scale();
    let e = &model.polarization;
    let mut primed = model.clone();
    primed.polarization = e_prime.clone();
    let h = lab.hamiltonian(&params);
    let h_prime = FibreOperators::on_basis(basis.clone(), &primed)?.hamiltonian(&params);

    let u = gauge_unitary(basis, e, e_prime)?;
    let conjugation = h_prime.conjugate_by(&u.full()).max_abs_diff(&h);
    let unitarity = u.matrix.unitarity_residual();
    let u_mid = gauge_unitary(basis, e, e_mid)?;
    let mid_prime = gauge_unitary(basis, e_mid, e_prime)?;
    let chain = u_mid.matrix.matmul(&mid_prime.matrix).max_abs_diff(&u.matrix);
    let back = gauge_unitary(basis, e_prime, e)?;
    let inverse = u.matrix.adjoint().max_abs_diff(&back.matrix);

    let s = spectrum(lab, &h)?;
    let s_prime = spectrum(lab, &h_prime)?;
    let spectral_gap = s.iter().zip(&s_prime).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let mut v = Verdict::new();
    v.at_most(conjugation, 0.0, CONJUGATION_TOL * scale, || "U H′ U† = H".into());
    v.at_most(unitarity, 0.0, CHAIN_TOL, || "U unitary".into());
    v.at_most(chain, 0.0, CHAIN_TOL, || "chain rule".into());
    v.at_most(inverse, 0.0, CHAIN_TOL, || "inverse rule".into());
    v.at_most(spectral_gap, 0.0, SPECTRUM_TOL * scale, || "sorted spectra agree".into());
    Ok(v.finish(
        "gauge",
        "independence of the Hamiltonian from the choice of polarization vectors up to a unitary",
        json!({
            "conjugation_residual": conjugation,
            "unitarity_residual": unitarity,
            "chain_residual": chain,
            "inverse_residual": inverse,
            "spectral_deviation": spectral_gap,
            "eigenvalues_compared": s.len().min(s_prime.len()),
            "flip_set_size": u.flip_set.len(),
            "scale": scale,
        }),
    ))
}

/// With p along the grid axis: R commutes with H, the reflection Υ commutes
/// with H and sends sector z to −z with equal spectra, and the lowest
/// `n_clusters` eigenvalue clusters have even multiplicity.
pub fn check_degeneracy(lab: &EnergyLab, n_clusters: usize) -> Result<CheckReport> {
    const NAME: &str = "degeneracy";
    const PROPERTY: &str = "even degeneracy of every eigenvalue from rotation and reflection symmetry";
    let model = lab.model();
    let grid = &model.grid;
    let params = lab.params();
    let Some(n_az) = grid.azimuthal_order() else {
        return Ok(hypothesis_not_satisfied(NAME, PROPERTY, "grid has no azimuthal symmetry".into(), json!({})));
    };
    if !grid.has_tag(SymmetryTag::ReflectionK2) {
        return Ok(hypothesis_not_satisfied(NAME, PROPERTY, "grid has no reflection symmetry".into(), json!({})));
    }
    let p = params.p_vec();
    if p.cross(&grid.axis()).norm() > 1e-12 * p.norm().max(1.0) {
        return Ok(hypothesis_not_satisfied(
            NAME,
            PROPERTY,
            "total momentum is not parallel to the grid axis".into(),
            json!({}),
        ));
    }
    let basis = lab.ops().basis();
    let scale = lab.scale();
    let h = lab.hamiltonian(&params);
    let r = rotation_operator(basis, &model.polarization, 2.0 * PI / n_az as f64)?;
    let upsilon = reflection_operator(basis, &model.polarization)?;
    let dec = sector_decompose(&h, &r, n_az, COMMUTANT_TOL * scale / h.norm_bound().max(1.0))?;
    let full = spectrum(lab, &h)?;
    let merged = dec.merged_spectrum();
    let merge_gap = full.iter().zip(&merged).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let rep = kramers_pairing(&h, &upsilon, &r, &dec, &full, n_clusters, lab.settings().cluster_tol);

    let mut v = Verdict::new();
    v.at_most(dec.commutant_residual, 0.0, COMMUTANT_TOL * scale, || "R H R† = H".into());
    v.at_most(dec.cross_residual, 0.0, COMMUTANT_TOL * scale, || "no cross-sector elements".into());
    v.at_most(merge_gap, 0.0, SPECTRUM_TOL * scale, || "sector spectra reproduce H".into());
    v.at_most(rep.invariance_residual, 0.0, COMMUTANT_TOL * scale, || "Υ H Υ† = H".into());
    v.at_most(rep.reversal_residual, 0.0, COMMUTANT_TOL * scale, || "Υ R Υ† = R†".into());
    v.at_most(rep.pairing_gap, 0.0, SPECTRUM_TOL * scale, || "sectors z and −z share spectra".into());
    if rep.lowest_multiplicities.len() < n_clusters {
        v.note(format!("only {} clusters available", rep.lowest_multiplicities.len()));
    }
    if !rep.all_even {
        v.fail(format!("odd multiplicity among {:?}", rep.lowest_multiplicities));
    }
    Ok(v.finish(
        NAME,
        PROPERTY,
        json!({
            "n_az": n_az,
            "sector_dims": dec.dims(),
            "commutant_residual": dec.commutant_residual,
            "cross_residual": dec.cross_residual,
            "projector_residual": dec.projector_residual,
            "merge_deviation": merge_gap,
            "invariance_residual": rep.invariance_residual,
            "reversal_residual": rep.reversal_residual,
            "pairing_gap": rep.pairing_gap,
            "lowest_multiplicities": rep.lowest_multiplicities,
            "scale": scale,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::ring;
    use super::*;
    use crate::cutoff::CutoffProfile;
    use crate::model::{PolaronModel, PolaronParams};
    use crate::polarization::{make_polarization, PolarizationKind};
    use crate::report::Status;

    fn lab(p: [f64; 3], q: f64) -> EnergyLab {
        let model = PolaronModel::new(
            PolaronParams::new(p, 1.0, 0.0, q),
            ring(4, 0.5, 1.5),
            2,
            CutoffProfile::Sharp { kappa: 0.05, lambda: 2.0 },
            PolarizationKind::Xy,
        )
        .unwrap();
        EnergyLab::new(model).unwrap()
    }

    #[test]
    fn gauge_between_xy_and_axis_x() {
        let l = lab([0.1, 0.0, 0.3], 0.4);
        let grid = &l.model().grid;
        let e_prime = make_polarization(PolarizationKind::Axis([1.0, 0.0, 0.0]), grid).unwrap();
        let n = grid.n_kpoints();
        let theta: Vec<f64> = (0..n).map(|i| 0.7 + i as f64).collect();
        let flips: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        let e_mid = l.model().polarization.rotated(&theta, &flips);
        let r = check_gauge(&l, &e_prime, &e_mid).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?} {}", r.notes, r.details);
    }

    #[test]
    fn degeneracy_on_ring() {
        let r = check_degeneracy(&lab([0.0, 0.0, 0.4], 0.3), 8).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?} {}", r.notes, r.details);
        let off = check_degeneracy(&lab([0.2, 0.0, 0.4], 0.3), 8).unwrap();
        assert_eq!(off.status, Status::HypothesisNotSatisfied);
    }
}
