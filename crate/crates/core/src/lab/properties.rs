//! Concavity, Lipschitz continuity, mass reflection, the inverse energy
//! inequality, monotonicity in the photon mass, and grid-group symmetry of
//! E(p).

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::EnergyLab;
use crate::error::{Error, Result};
use crate::grid::SymmetryTag;
use crate::model::{FibreOperators, PolaronParams};
use crate::operator::OperatorMatrix;
use crate::report::{hypothesis_not_satisfied, CheckReport, Verdict};
use crate::second_quant::dgamma_real;
use crate::symmetry::{naive_symmetry_operator, symmetry_operator};

/// Matrix identities that hold algebraically are checked at this multiple
/// of the scale.
const ALGEBRAIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: PolaronParams,
    pub b: PolaronParams,
}

impl Segment {
    pub fn midpoint(&self) -> PolaronParams {
        let h = |x: f64, y: f64| 0.5 * (x + y);
        PolaronParams {
            p: [h(self.a.p[0], self.b.p[0]), h(self.a.p[1], self.b.p[1]), h(self.a.p[2], self.b.p[2])],
            mass: h(self.a.mass, self.b.mass),
            photon_mass: h(self.a.photon_mass, self.b.photon_mass),
            coupling: h(self.a.coupling, self.b.coupling),
        }
    }
}

/// `n` segments with endpoints drawn uniformly from the box
/// base ± (p_radius per component, mass_radius, coupling_radius); the
/// photon mass stays at its base value.
pub fn random_segments(
    base: PolaronParams,
    n: usize,
    seed: u64,
    p_radius: f64,
    mass_radius: f64,
    coupling_radius: f64,
) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        let mut p = base.p;
        for x in &mut p {
            *x += rng.gen_range(-p_radius..=p_radius);
        }
        PolaronParams {
            p,
            mass: base.mass + rng.gen_range(-mass_radius..=mass_radius),
            photon_mass: base.photon_mass,
            coupling: base.coupling + rng.gen_range(-coupling_radius..=coupling_radius),
        }
    };
    (0..n).map(|_| Segment { a: draw(&mut rng), b: draw(&mut rng) }).collect()
}

/// E(midpoint) ≥ ½E(a) + ½E(b) for every segment.
pub fn check_concavity(lab: &EnergyLab, segments: &[Segment]) -> Result<CheckReport> {
    let points: Vec<PolaronParams> = segments.iter().flat_map(|s| [s.a, s.b, s.midpoint()]).collect();
    let e = lab.energies(&points)?;
    let tol = lab.bound_tol();
    let mut v = Verdict::new();
    let mut rows = Vec::with_capacity(segments.len());
    for (i, chunk) in e.chunks(3).enumerate() {
        let avg = 0.5 * (chunk[0] + chunk[1]);
        v.at_most(avg, chunk[2], tol, || format!("segment {i}"));
        rows.push(json!({"segment": i, "e_a": chunk[0], "e_b": chunk[1], "e_mid": chunk[2], "slack": chunk[2] - avg}));
    }
    Ok(v.finish(
        "concavity",
        "concavity of E in (p, M, q): E at a segment midpoint is at least the mean of the endpoint values",
        json!({"scale": lab.scale(), "tol": tol, "segments": rows}),
    ))
}

/// |E(x) − E(y)| ≤ √(|p−p′|² + (M−M′)²) over all pairs sharing m and q.
pub fn check_lipschitz(lab: &EnergyLab, points: &[PolaronParams]) -> Result<CheckReport> {
    let e = lab.energies(points)?;
    let tol = lab.bound_tol();
    let mut v = Verdict::new();
    let mut pairs = 0usize;
    let mut worst_ratio = 0.0f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let (x, y) = (&points[i], &points[j]);
            if x.photon_mass != y.photon_mass || x.coupling != y.coupling {
                continue;
            }
            let dist = ((x.p_vec() - y.p_vec()).norm_squared() + (x.mass - y.mass).powi(2)).sqrt();
            let diff = (e[i] - e[j]).abs();
            if dist > 0.0 {
                worst_ratio = worst_ratio.max(diff / dist);
            }
            v.at_most(diff, dist, tol, || format!("pair ({i}, {j})"));
            pairs += 1;
        }
    }
    if pairs == 0 {
        v.note("no comparable pairs");
    }
    Ok(v.finish(
        "lipschitz",
        "Lipschitz continuity of E in (p, M) with constant 1",
        json!({"pairs": pairs, "largest_difference_quotient": worst_ratio, "tol": tol}),
    ))
}

/// (γ5⊗1) H(M) (γ5⊗1)† = H(−M), hence E(M) = E(−M) and, by concavity in
/// M, E(M) ≤ E(0).
pub fn check_mass_reflection(lab: &EnergyLab, masses: &[f64]) -> Result<CheckReport> {
    let base = lab.params();
    let g5 = lab.ops().spin_operator(&lab.ops().dirac().gamma5);
    let tol = lab.bound_tol();
    let mut v = Verdict::new();
    let mut identity_residual = 0.0f64;
    let mut rows = Vec::new();
    for &m in masses {
        let plus = base.with_mass(m);
        let minus = base.with_mass(-m);
        let r = lab.hamiltonian(&plus).conjugate_by(&g5).max_abs_diff(&lab.hamiltonian(&minus));
        identity_residual = identity_residual.max(r);
        v.at_most(r, 0.0, ALGEBRAIC_TOL * lab.scale(), || format!("γ5 conjugation at M={m}"));
        let e = lab.energies(&[plus, minus, base.with_mass(0.0)])?;
        v.at_most((e[0] - e[1]).abs(), 0.0, tol, || format!("E(M) = E(−M) at M={m}"));
        v.at_most(e[0], e[2], tol, || format!("E(M) ≤ E(0) at M={m}"));
        rows.push(json!({"mass": m, "e_plus": e[0], "e_minus": e[1], "e_zero": e[2], "conjugation_residual": r}));
    }
    Ok(v.finish(
        "mass_reflection",
        "reflection symmetry in the electron mass via γ5, and E(M) ≤ E(0)",
        json!({"identity_residual": identity_residual, "scale": lab.scale(), "rows": rows}),
    ))
}

/// E(p) ≤ E(0) for all sampled p, strictly for p ≠ 0. Needs an
/// inversion-symmetric grid.
pub fn check_inverse_energy(lab: &EnergyLab, momenta: &[[f64; 3]]) -> Result<CheckReport> {
    const NAME: &str = "inverse_energy";
    const PROPERTY: &str = "inverse energy inequality E(p) ≤ E(0), strict for p ≠ 0";
    if !lab.model().grid.has_tag(SymmetryTag::Inversion) {
        return Ok(hypothesis_not_satisfied(NAME, PROPERTY, "grid is not inversion symmetric".into(), json!({})));
    }
    let base = lab.params();
    let e0 = lab.energy(&base.with_p([0.0; 3]))?;
    let points: Vec<PolaronParams> = momenta.iter().map(|&p| base.with_p(p)).collect();
    let e = lab.energies(&points)?;
    let tol = lab.bound_tol();
    let floor = lab.strictness_floor();
    let mut v = Verdict::new();
    let mut rows = Vec::new();
    for (p, &ep) in momenta.iter().zip(&e) {
        if p.iter().all(|&x| x == 0.0) {
            v.at_most(ep, e0, tol, || "p = 0".into());
        } else {
            v.strictly_below(ep, e0, floor, tol, || format!("p = {p:?}"));
        }
        rows.push(json!({"p": p, "energy": ep, "drop": e0 - ep}));
    }
    Ok(v.finish(NAME, PROPERTY, json!({"e_zero": e0, "floor": floor, "rows": rows})))
}

/// E_m(p) non-decreasing in m, and |E_m − E_0| ≤ m‖dΓ(|k|+1)‖ → 0.
pub fn check_mass_monotone(lab: &EnergyLab, photon_masses: &[f64], momenta: &[[f64; 3]]) -> Result<CheckReport> {
    if !photon_masses.contains(&0.0) {
        return Err(Error::InvalidModel("photon mass list must contain 0".into()));
    }
    let mut ms: Vec<f64> = photon_masses.to_vec();
    ms.sort_by(f64::total_cmp);
    ms.dedup();
    let basis = lab.ops().basis();
    let grid = basis.grid();
    let shift: Vec<f64> = grid.modes().iter().map(|m| m.k.norm() + 1.0).collect();
    let shift_norm = dgamma_real(basis, &shift)?.norm_bound();
    let base = lab.params();
    let tol = lab.bound_tol();
    let mut v = Verdict::new();
    let mut rows = Vec::new();
    for &p in momenta {
        let points: Vec<PolaronParams> = ms.iter().map(|&m| base.with_p(p).with_photon_mass(m)).collect();
        let e = lab.energies(&points)?;
        let e0 = e[ms.iter().position(|&m| m == 0.0).expect("contains 0")];
        for w in 0..e.len().saturating_sub(1) {
            v.at_most(e[w], e[w + 1], tol, || format!("p = {p:?}, m {} → {}", ms[w], ms[w + 1]));
        }
        for (m, em) in ms.iter().zip(&e) {
            v.at_most((em - e0).abs(), m * shift_norm, tol, || format!("p = {p:?}, |E_m − E_0| at m = {m}"));
        }
        rows.push(json!({"p": p, "photon_masses": ms, "energies": e}));
    }
    Ok(v.finish(
        "mass_monotone",
        "E_m(p) is non-decreasing in the photon mass m and tends to E_0(p) as m → 0",
        json!({"shift_norm": shift_norm, "rows": rows}),
    ))
}

/// For every T: the naive lift u_T ⊗ Γ(π_T) maps H(p; e) to
/// H(T⁻¹p; transported e); the gauge-corrected W_T maps it to H(T⁻¹p; e);
/// E(Tp) = E(p). With an inversion-symmetric grid, E is also checked to be
/// non-increasing along the rays through the sampled momenta.
pub fn check_rotation_symmetry(
    lab: &EnergyLab,
    transforms: &[Matrix3<f64>],
    momenta: &[[f64; 3]],
) -> Result<CheckReport> {
    let model = lab.model();
    let basis = lab.ops().basis();
    let dirac = lab.ops().dirac();
    let base = lab.params();
    let scale = lab.scale();
    let tol = lab.bound_tol();
    let mut v = Verdict::new();
    let mut naive_max = 0.0f64;
    let mut full_max = 0.0f64;
    let mut energy_max = 0.0f64;
    let hs: Vec<OperatorMatrix> = momenta.iter().map(|&p| lab.hamiltonian(&base.with_p(p))).collect();
    for (ti, t) in transforms.iter().enumerate() {
        model.grid.kpoint_permutation(t).map_err(|e| Error::NotGridPreserving(e.to_string()))?;
        let u = dirac.spinor_for_orthogonal(t)?;
        let (naive, transported) = naive_symmetry_operator(basis, &model.polarization, t, &u)?;
        let mut moved = model.clone();
        moved.polarization = transported;
        let moved_ops = FibreOperators::on_basis(basis.clone(), &moved)?;
        let w = symmetry_operator(basis, &model.polarization, t)?;
        let mut pairs = Vec::new();
        for (&p, h) in momenta.iter().zip(&hs) {
            let back = t.transpose() * Vector3::from(p);
            let back_params = base.with_p(back.into());
            let r_naive = h.conjugate_by(&naive).max_abs_diff(&moved_ops.hamiltonian(&back_params));
            let r_full = h.conjugate_by(&w).max_abs_diff(&lab.hamiltonian(&back_params));
            naive_max = naive_max.max(r_naive);
            full_max = full_max.max(r_full);
            v.at_most(r_naive, 0.0, ALGEBRAIC_TOL * scale, || format!("naive lift, T #{ti}"));
            v.at_most(r_full, 0.0, ALGEBRAIC_TOL * scale, || format!("gauge-corrected lift, T #{ti}"));
            let forward = t * Vector3::from(p);
            pairs.push(base.with_p(p));
            pairs.push(base.with_p(forward.into()));
        }
        let e = lab.energies(&pairs)?;
        for (k, chunk) in e.chunks(2).enumerate() {
            let d = (chunk[0] - chunk[1]).abs();
            energy_max = energy_max.max(d);
            v.at_most(d, 0.0, tol, || format!("E(Tp) = E(p), T #{ti}, p #{k}"));
        }
    }
    let mut rays = Vec::new();
    if model.grid.has_tag(SymmetryTag::Inversion) {
        let ts = [0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5];
        for &p in momenta {
            if p.iter().all(|&x| x == 0.0) {
                continue;
            }
            let points: Vec<PolaronParams> = ts.iter().map(|&s| base.with_p([s * p[0], s * p[1], s * p[2]])).collect();
            let e = lab.energies(&points)?;
            for w in 0..e.len() - 1 {
                v.at_most(e[w + 1], e[w], tol, || format!("ray through {p:?}, step {w}"));
            }
            rays.push(json!({"p": p, "t": ts, "energies": e}));
        }
    } else {
        v.note("grid not inversion symmetric: ray monotonicity not tested");
    }
    Ok(v.finish(
        "rotation_symmetry",
        "symmetry of E in the total momentum under the grid group, and monotone decrease along rays",
        json!({
            "transforms": transforms.len(),
            "naive_lift_residual": naive_max,
            "gauge_corrected_residual": full_max,
            "max_energy_deviation": energy_max,
            "scale": scale,
            "rays": rays,
        }),
    ))
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::{ring, ring_model};
    use super::*;
    use crate::cutoff::CutoffProfile;
    use crate::grid::ModeGrid;
    use crate::model::PolaronModel;
    use crate::polarization::PolarizationKind;
    use crate::report::Status;

    fn lab(q: f64, n_max: usize) -> EnergyLab {
        EnergyLab::new(ring_model(n_max, PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, q))).unwrap()
    }

    #[test]
    fn free_mass_segment_is_concave() {
        let l = lab(0.0, 1);
        let base = PolaronParams::new([0.0, 0.0, 0.5], 0.0, 0.0, 0.0);
        let seg = Segment { a: base.with_mass(-1.0), b: base.with_mass(1.0) };
        let r = check_concavity(&l, &[seg]).unwrap();
        assert_eq!(r.status, Status::Pass);
        // analytic slack: −√0.25 + √1.25
        assert!((r.worst_slack - (1.25f64.sqrt() - 0.5)).abs() < 1e-12);
        let flat = check_concavity(&l, &[Segment { a: base, b: base }]).unwrap();
        assert!(flat.worst_slack.abs() < 1e-12);
    }

    #[test]
    fn random_segments_pass_with_coupling() {
        let l = lab(0.4, 2);
        let segs = random_segments(l.params(), 8, 11, 0.5, 0.5, 0.3);
        let r = check_concavity(&l, &segs).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.notes);
        assert!(r.worst_slack >= -1e-8 * l.scale());
    }

    #[test]
    fn lipschitz_pairs() {
        let l = lab(0.5, 2);
        let base = l.params();
        let pts = vec![
            base,
            base,
            base.with_p([0.2, -0.1, 0.4]),
            base.with_mass(0.4),
            base.with_p([0.7, 0.0, 0.0]).with_mass(1.3),
            base.with_coupling(0.1),
        ];
        let r = check_lipschitz(&l, &pts).unwrap();
        assert_eq!(r.status, Status::Pass);
        // identical points give a zero-margin pair
        assert!(r.worst_slack.abs() < 1e-12 || r.worst_slack > 0.0);
        assert_eq!(r.samples, 10);
    }

    #[test]
    fn mass_reflection_identity() {
        let l = lab(0.5, 2);
        let r = check_mass_reflection(&l, &[0.0, 1.0]).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.notes);
        assert!(r.details["identity_residual"].as_f64().unwrap() <= 1e-12 * l.scale());
    }

    #[test]
    fn inverse_energy_free_and_coupled() {
        let free = lab(0.0, 1);
        let r = check_inverse_energy(&free, &[[0.0; 3], [0.0, 0.0, 0.5], [0.3, 0.4, 0.0]]).unwrap();
        assert_eq!(r.status, Status::Pass);
        let coupled = lab(0.4, 2);
        let r = check_inverse_energy(&coupled, &[[0.0, 0.0, 0.2], [0.0, 0.0, 0.4], [0.0, 0.0, 0.6]]).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.notes);
    }

    #[test]
    fn inverse_energy_refuses_asymmetric_grid() {
        let pts = [(Vector3::new(1.0, 0.0, 0.0), 0.5), (Vector3::new(0.0, 1.0, 0.0), 0.5)];
        let grid = ModeGrid::from_points(&pts, Vector3::z()).unwrap();
        let model = PolaronModel::new(
            PolaronParams::new([0.0; 3], 1.0, 0.0, 0.2),
            grid,
            1,
            CutoffProfile::Sharp { kappa: 0.1, lambda: 2.0 },
            PolarizationKind::Xy,
        )
        .unwrap();
        let l = EnergyLab::new(model).unwrap();
        let r = check_inverse_energy(&l, &[[0.0, 0.0, 0.3]]).unwrap();
        assert_eq!(r.status, Status::HypothesisNotSatisfied);
    }

    #[test]
    fn mass_monotone_free_is_flat_and_coupled_is_monotone() {
        let free = lab(0.0, 1);
        let r = check_mass_monotone(&free, &[0.0, 0.1, 0.2], &[[0.0, 0.0, 0.3]]).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!(r.worst_slack.abs() < 1e-12);
        let coupled = lab(0.4, 2);
        let r = check_mass_monotone(&coupled, &[0.0, 0.1, 0.3], &[[0.0; 3], [0.0, 0.0, 0.4]]).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.notes);
        assert!(check_mass_monotone(&coupled, &[0.1], &[[0.0; 3]]).is_err());
        let single = check_mass_monotone(&coupled, &[0.0], &[[0.0; 3]]).unwrap();
        assert_eq!(single.status, Status::Pass);
    }

    #[test]
    fn rotation_symmetry_over_grid_group() {
        let model = PolaronModel::new(
            PolaronParams::new([0.0, 0.0, 0.3], 1.0, 0.0, 0.4),
            ring(4, 0.5, 1.5),
            2,
            CutoffProfile::Sharp { kappa: 0.05, lambda: 2.0 },
            PolarizationKind::Axis([1.0, 0.0, 0.0]),
        )
        .unwrap();
        let l = EnergyLab::new(model).unwrap();
        let group = l.model().grid.symmetry_group();
        assert_eq!(group.len(), 16);
        let r = check_rotation_symmetry(&l, &group, &[[0.2, 0.1, 0.3], [0.0, 0.0, 0.4]]).unwrap();
        assert_eq!(r.status, Status::Pass, "{:?}", r.notes);
        assert!(r.details["max_energy_deviation"].as_f64().unwrap() < 1e-9 * l.scale());
    }

    #[test]
    fn rotation_symmetry_rejects_non_grid_map() {
        let l = lab(0.2, 1);
        let t = crate::grid::rotation_about(&Vector3::z(), 0.3);
        assert!(check_rotation_symmetry(&l, &[t], &[[0.0; 3]]).is_err());
    }
}
