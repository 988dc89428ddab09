//! The gap E(p−k) − E(p) + |k| over the grid, its piecewise lower bounds,
//! the infrared criterion built from it, and the essential-spectrum gap of
//! the massive model.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::EnergyLab;
use crate::error::{Error, Result};
use crate::grid::SymmetryTag;
use crate::model::{omega, PolaronParams};
use crate::report::{CheckReport, Status, Verdict};

/// Which branch of the piecewise lower bound applies at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapRegime {
    /// p ≠ 0, |p−k| ≤ |p|: gap ≥ |k|
    Inner,
    /// p ≠ 0, |p| < |p−k| ≤ 2|p|: gap ≥ (1−b)|k|
    Middle,
    /// p ≠ 0, |p−k| > 2|p|: gap ≥ (1−b)|p|
    Outer,
    /// p = 0, |k| ≤ P: gap ≥ (a/P)|k|
    Near,
    /// p = 0, |k| > P: gap ≥ a
    Far,
    /// Bound not evaluated (hypothesis failed or b ≥ 1).
    Untested,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionEntry {
    pub k_index: usize,
    pub k: [f64; 3],
    pub k_abs: f64,
    pub shifted_abs: f64,
    pub shifted_energy: f64,
    pub gap: f64,
    pub regime: GapRegime,
    pub lower_bound: f64,
    /// gap − lower bound
    pub lower_slack: f64,
    /// 2|k| − gap
    pub upper_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DispersionReport {
    pub p: [f64; 3],
    pub energy: f64,
    /// E(p) at electron mass 0, for the hypothesis E(p, M) < E(p, 0).
    pub energy_massless_electron: f64,
    pub hypothesis_holds: bool,
    /// b = (E(p) − E(2p))/|p| for p ≠ 0.
    pub b: Option<f64>,
    /// (P, a(P)) with a(P) = E(k_P) − E(0) + P, k_P of norm P along the
    /// first node's direction, for p = 0.
    pub a: Option<(f64, f64)>,
    pub entries: Vec<DispersionEntry>,
    pub check: CheckReport,
}

impl DispersionReport {
    pub fn gaps(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.gap).collect()
    }

    /// Largest value of gap − 2|k|.
    pub fn max_upper_excess(&self) -> f64 {
        self.entries.iter().map(|e| -e.upper_slack).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest gap − bound over tested nodes (infinite if none were tested).
    pub fn min_lower_slack(&self) -> f64 {
        self.entries
            .iter()
            .filter(|e| e.regime != GapRegime::Untested)
            .map(|e| e.lower_slack)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_gap(&self) -> f64 {
        self.entries.iter().map(|e| e.gap).fold(f64::INFINITY, f64::min)
    }
}

/// Gap values over every grid node with the piecewise lower bounds.
/// `p_ref` is the radius P used for a(P) at p = 0.
pub fn dispersion_report(lab: &EnergyLab, p: [f64; 3], p_ref: f64) -> Result<DispersionReport> {
    if !(p_ref > 0.0) {
        return Err(Error::InvalidModel(format!("reference radius P must be positive, got {p_ref}")));
    }
    let base = lab.params().with_p(p);
    let grid = &lab.model().grid;
    let pv = Vector3::from(p);
    let p_abs = pv.norm();
    let at_rest = p_abs == 0.0;
    let tol = lab.bound_tol();
    let floor = lab.strictness_floor();

    // E(p), E(p, M=0), then either E(2p) or E(k_P), then E(p − kᵢ)
    let mut points = vec![base, base.with_mass(0.0)];
    if at_rest {
        let dir = grid.kpoint(0).normalize();
        points.push(base.with_p((dir * p_ref).into()));
    } else {
        points.push(base.with_p((2.0 * pv).into()));
    }
    let nodes: Vec<Vector3<f64>> = (0..grid.n_kpoints()).map(|i| grid.kpoint(i)).collect();
    points.extend(nodes.iter().map(|k| base.with_p((pv - k).into())));
    let e = lab.energies(&points)?;
    let (energy, massless, third) = (e[0], e[1], e[2]);

    let mut v = Verdict::new();
    let hypothesis_holds = energy < massless - floor;
    if !hypothesis_holds {
        v.note(format!(
            "hypothesis E(p,M) < E(p,0) not satisfied: {energy:.12} vs {massless:.12}; lower bounds skipped"
        ));
    }
    let b = (!at_rest).then(|| (energy - third) / p_abs);
    let a = at_rest.then_some((p_ref, third - energy + p_ref));
    let mut bounds_active = hypothesis_holds;
    if let Some(b) = b {
        if b >= 1.0 {
            bounds_active = false;
            v.note(format!("b = {b:.12} is not below 1; lower bounds skipped"));
        }
    }
    if let (Some((_, a)), true) = (a, hypothesis_holds) {
        v.strictly_below(0.0, a, floor, tol, || "a(P) > 0".into());
    }

    let mut entries = Vec::with_capacity(nodes.len());
    for (i, k) in nodes.iter().enumerate() {
        let k_abs = k.norm();
        let shifted_abs = (pv - k).norm();
        let shifted_energy = e[3 + i];
        let gap = shifted_energy - energy + k_abs;
        let (regime, lower_bound) = if !bounds_active {
            (GapRegime::Untested, f64::NAN)
        } else if let Some((pr, a)) = a {
            if k_abs <= pr {
                (GapRegime::Near, a / pr * k_abs)
            } else {
                (GapRegime::Far, a)
            }
        } else {
            let b = b.expect("p ≠ 0");
            if shifted_abs <= p_abs {
                (GapRegime::Inner, k_abs)
            } else if shifted_abs <= 2.0 * p_abs {
                (GapRegime::Middle, (1.0 - b) * k_abs)
            } else {
                (GapRegime::Outer, (1.0 - b) * p_abs)
            }
        };
        v.at_most(gap, 2.0 * k_abs, tol, || format!("gap ≤ 2|k| at node {i}"));
        if hypothesis_holds {
            v.strictly_below(0.0, gap, floor, tol, || format!("gap > 0 at node {i}"));
        }
        if regime != GapRegime::Untested {
            v.at_most(lower_bound, gap, tol, || format!("{regime:?} lower bound at node {i}"));
        }
        entries.push(DispersionEntry {
            k_index: i,
            k: (*k).into(),
            k_abs,
            shifted_abs,
            shifted_energy,
            gap,
            regime,
            lower_bound,
            lower_slack: gap - lower_bound,
            upper_slack: 2.0 * k_abs - gap,
        });
    }
    let details = json!({"p": p, "energy": energy, "b": b, "a": a, "scale": lab.scale()});
    let mut check = v.finish(
        "dispersion",
        "lower and upper bounds on the energy-momentum dispersion gap E(p−k) − E(p) + |k|",
        details,
    );
    if !hypothesis_holds && check.status == Status::Pass {
        check.status = Status::HypothesisNotSatisfied;
    }
    Ok(DispersionReport { p, energy, energy_massless_electron: massless, hypothesis_holds, b, a, entries, check })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrSample {
    pub k_index: usize,
    pub k_abs: f64,
    pub weight: f64,
    pub cutoff: f64,
    pub gap: f64,
    /// wᵢ q² ρ(kᵢ)² / (gapᵢ² |kᵢ|)
    pub term: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IRCriterionReport {
    pub p: [f64; 3],
    pub coupling: f64,
    /// Σᵢ wᵢ q² ρ² / (gap² |k|): the helicity-summed form.
    pub value: f64,
    /// Contribution of one helicity (half the summed value).
    pub per_helicity: f64,
    pub passes: bool,
    /// q/√value: the coupling at which the value reaches 1 with these gaps.
    pub q0: Option<f64>,
    /// Coupling at which the gaps were computed.
    pub gap_coupling: f64,
    pub hypothesis_holds: bool,
    pub samples: Vec<IrSample>,
    pub notes: Vec<String>,
}

impl IRCriterionReport {
    pub fn to_check(&self) -> CheckReport {
        let gaps_positive = self.samples.iter().all(|s| s.gap > 0.0);
        let mut notes = self.notes.clone();
        let status = if !gaps_positive {
            Status::Fail
        } else if !self.hypothesis_holds {
            Status::HypothesisNotSatisfied
        } else if self.value < 1.0 {
            Status::Pass
        } else {
            notes.push("infrared sum is not below 1: the sufficient condition is not met at this coupling".into());
            Status::HypothesisNotSatisfied
        };
        CheckReport {
            check: "ir".into(),
            property: "infrared criterion: the weighted sum of q²ρ²/(gap²|k|) stays below 1".into(),
            status,
            worst_slack: 1.0 - self.value,
            samples: self.samples.len(),
            details: json!({
                "p": self.p,
                "coupling": self.coupling,
                "value": self.value,
                "per_helicity": self.per_helicity,
                "q0": self.q0,
            }),
            notes,
        }
    }
}

/// The infrared criterion at the lab's parameters, with self-consistent gaps.
pub fn ir_criterion(lab: &EnergyLab, p: [f64; 3]) -> Result<IRCriterionReport> {
    let d = dispersion_report(lab, p, 1.0)?;
    Ok(ir_criterion_with_gaps(lab, &d, lab.params().coupling))
}

/// The infrared sum at coupling `q` using the gaps of `dispersion`.
pub fn ir_criterion_with_gaps(lab: &EnergyLab, dispersion: &DispersionReport, q: f64) -> IRCriterionReport {
    let grid = &lab.model().grid;
    let cutoff = &lab.model().cutoff;
    let mut notes = Vec::new();
    let mut samples = Vec::with_capacity(dispersion.entries.len());
    let mut value = 0.0;
    let mut positive = true;
    for entry in &dispersion.entries {
        let i = entry.k_index;
        let weight = grid.weight(i);
        let rho = cutoff.value(entry.k_abs);
        let term = if rho == 0.0 {
            0.0
        } else if entry.gap > 0.0 {
            weight * q * q * rho * rho / (entry.gap * entry.gap * entry.k_abs)
        } else {
            positive = false;
            notes.push(format!("non-positive gap {:.3e} at node {i}: gap positivity violated", entry.gap));
            f64::INFINITY
        };
        value += term;
        samples.push(IrSample { k_index: i, k_abs: entry.k_abs, weight, cutoff: rho, gap: entry.gap, term });
    }
    if !dispersion.hypothesis_holds {
        notes.push("hypothesis E(p,M) < E(p,0) not satisfied".into());
    }
    let q0 = (value > 0.0 && value.is_finite()).then(|| q.abs() / value.sqrt());
    IRCriterionReport {
        p: dispersion.p,
        coupling: q,
        value,
        per_helicity: 0.5 * value,
        passes: positive && value < 1.0,
        q0,
        gap_coupling: lab.params().coupling,
        hypothesis_holds: dispersion.hypothesis_holds,
        samples,
        notes,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EssentialGap {
    pub p: [f64; 3],
    pub photon_mass: f64,
    /// minᵢ [E(p − kᵢ) + ω_m(kᵢ)] − E(p)
    pub value: f64,
    pub minimizer: usize,
    pub k_min: f64,
    pub lower: f64,
    pub upper: f64,
    /// Added to m + (1+m)k_min: zero at p = 0 on inversion-symmetric grids
    /// (where E(−k) ≤ E(0)), k_min otherwise (Lipschitz bound in p).
    pub slack: f64,
    pub within: bool,
}

impl EssentialGap {
    pub fn to_check(&self) -> CheckReport {
        CheckReport {
            check: "essential_gap".into(),
            property: "distance from the ground energy to the essential spectrum is at least the photon mass".into(),
            status: if self.within { Status::Pass } else { Status::Fail },
            worst_slack: (self.value - self.lower).min(self.upper - self.value),
            samples: 1,
            details: json!({
                "p": self.p,
                "photon_mass": self.photon_mass,
                "value": self.value,
                "lower": self.lower,
                "upper": self.upper,
                "k_min": self.k_min,
            }),
            notes: Vec::new(),
        }
    }
}

/// Distance from E(p) to the bottom of the one-photon continuum.
pub fn essential_gap(lab: &EnergyLab, p: [f64; 3]) -> Result<EssentialGap> {
    let params: PolaronParams = lab.params().with_p(p);
    let m = params.photon_mass;
    if !(m > 0.0) {
        return Err(Error::InvalidModel(format!("essential gap needs photon mass > 0, got {m}")));
    }
    let grid = &lab.model().grid;
    let pv = Vector3::from(p);
    let mut points = vec![params];
    points.extend((0..grid.n_kpoints()).map(|i| params.with_p((pv - grid.kpoint(i)).into())));
    let e = lab.energies(&points)?;
    let (mut value, mut minimizer) = (f64::INFINITY, 0);
    for i in 0..grid.n_kpoints() {
        let candidate = e[1 + i] + omega(grid.kpoint(i).norm(), m) - e[0];
        if candidate < value {
            value = candidate;
            minimizer = i;
        }
    }
    let k_min = grid.min_radius();
    let at_rest = pv.norm() == 0.0 && grid.has_tag(SymmetryTag::Inversion);
    let slack = if at_rest { 0.0 } else { k_min };
    let tol = lab.bound_tol();
    let lower = m;
    let upper = m + (1.0 + m) * k_min + slack;
    let within = value >= lower - tol && value <= upper + tol;
    Ok(EssentialGap { p, photon_mass: m, value, minimizer, k_min, lower, upper, slack, within })
}
