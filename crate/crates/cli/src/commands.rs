//! Subcommand bodies. Each returns whether every check it ran passed.

use std::f64::consts::PI;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use polaron_core::grid::SymmetryTag;
use polaron_core::lab::{
    check_concavity, check_degeneracy, check_gauge, check_inverse_energy, check_lipschitz, check_mass_monotone,
    check_mass_reflection, check_rotation_symmetry, dispersion_report, essential_gap, ir_criterion, photon_bounds,
    pull_through_residual, random_segments, scan,
};
use polaron_core::polarization::{make_polarization, PolarizationField, PolarizationKind};
use polaron_core::spectral::{dense_spectrum, lowest_eigenpairs};
use polaron_core::symmetry::{kramers_pairing, reflection_operator, rotation_operator, sector_decompose};
use polaron_core::{assemble, CheckReport, EnergyLab, PolaronParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::RunConfig;
use crate::output::{num, Emitter};
use crate::plot::{line_chart, Series};

pub const CHECKS: [&str; 13] = [
    "concavity",
    "lipschitz",
    "mass_reflection",
    "inverse_energy",
    "mass_monotone",
    "rotation_symmetry",
    "dispersion",
    "ir",
    "essential_gap",
    "pull_through",
    "photon_bounds",
    "gauge",
    "degeneracy",
];

fn lab(cfg: &RunConfig) -> Result<EnergyLab> {
    let model = cfg.model().context("building the model")?;
    Ok(EnergyLab::with_settings(model, cfg.solver, cfg.tolerances)?)
}

pub fn assemble_cmd(cfg: &RunConfig, out: &mut Emitter) -> Result<bool> {
    let model = cfg.model()?;
    let h = assemble(&model)?;
    let file = h.to_triplet_file();
    let summary = json!({
        "dim": h.dim(),
        "nnz": file.entries.len(),
        "n_kpoints": model.grid.n_kpoints(),
        "n_modes": model.grid.n_modes(),
        "n_max": model.n_max,
        "symmetry_tags": model.grid.symmetry_tags(),
        "params": model.params,
    });
    out.json("hamiltonian.json", &file, Value::Null)?;
    out.json("assemble.json", &summary, Value::Null)?;
    println!("assembled dimension {} with {} stored entries", h.dim(), file.entries.len());
    Ok(true)
}

pub fn solve_cmd(cfg: &RunConfig, out: &mut Emitter) -> Result<bool> {
    let lab = lab(cfg)?;
    let h = lab.hamiltonian(&lab.params());
    let res = lowest_eigenpairs(&h, cfg.n_eigs, lab.settings())?;
    let rows: Vec<Vec<String>> = res
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, (e, r, c))| vec![i.to_string(), num(e), num(r), c.to_string()])
        .collect();
    out.csv("spectrum.csv", &["index", "eigenvalue", "residual", "cluster"], &rows)?;
    let summary = json!({
        "dim": h.dim(),
        "solver": res.solver,
        "iterations": res.iterations,
        "seed": res.seed,
        "converged": res.converged,
        "norm_estimate": res.norm_estimate,
        "eigenvalues": res.eigenvalues,
        "residuals": res.residuals,
        "multiplicities": res.multiplicities,
    });
    out.json("solve.json", &summary, Value::Null)?;
    println!("E = {:.12} ({:?}, converged: {})", res.lowest(), res.solver, res.converged);
    if !res.converged {
        log::warn!("solver did not reach tolerance {:e}", lab.settings().tol);
    }
    Ok(res.converged)
}

pub fn scan_cmd(cfg: &RunConfig, out: &mut Emitter) -> Result<bool> {
    let lab = lab(cfg)?;
    let surface = scan(&lab, &cfg.scan_spec())?;
    let rows: Vec<Vec<String>> = surface
        .samples
        .iter()
        .map(|s| {
            let p = &s.params;
            vec![
                num(cfg.scan_coordinate(p)),
                num(p.p[0]),
                num(p.p[1]),
                num(p.p[2]),
                num(p.mass),
                num(p.photon_mass),
                num(p.coupling),
                num(s.energy),
                num(s.meta.residual),
                s.meta.converged.to_string(),
            ]
        })
        .collect();
    out.csv(
        "surface.csv",
        &["t", "px", "py", "pz", "mass", "photon_mass", "coupling", "energy", "residual", "converged"],
        &rows,
    )?;
    out.json("scan.json", &surface, Value::Null)?;
    let points = surface.samples.iter().map(|s| (cfg.scan_coordinate(&s.params), s.energy)).collect();
    let chart = line_chart(
        "ground-state energy",
        &surface.varying.join(", "),
        "E",
        &[Series { name: "E".into(), points, dashed: false }],
    );
    out.svg("scan.svg", chart)?;
    println!("scanned {} points{}", surface.len(), if surface.flagged { " (some unconverged)" } else { "" });
    Ok(!surface.flagged)
}

pub fn dispersion_cmd(cfg: &RunConfig, out: &mut Emitter) -> Result<bool> {
    let lab = lab(cfg)?;
    let rep = dispersion_report(&lab, cfg.params.p, cfg.p_ref)?;
    let rows: Vec<Vec<String>> = rep
        .entries
        .iter()
        .map(|e| {
            vec![
                e.k_index.to_string(),
                num(e.k[0]),
                num(e.k[1]),
                num(e.k[2]),
                num(e.k_abs),
                num(e.shifted_energy),
                num(e.gap),
                format!("{:?}", e.regime).to_lowercase(),
                num(e.lower_bound),
                num(e.lower_slack),
                num(e.upper_slack),
            ]
        })
        .collect();
    out.csv(
        "dispersion.csv",
        &[
            "k_index",
            "kx",
            "ky",
            "kz",
            "k_abs",
            "shifted_energy",
            "gap",
            "regime",
            "lower_bound",
            "lower_slack",
            "upper_slack",
        ],
        &rows,
    )?;
    out.json("dispersion.json", &rep, Value::Null)?;
    let mut order: Vec<_> = rep.entries.iter().collect();
    order.sort_by(|a, b| a.k_abs.total_cmp(&b.k_abs).then(a.k_index.cmp(&b.k_index)));
    let xs = |f: &dyn Fn(&polaron_core::lab::DispersionEntry) -> f64| {
        order.iter().enumerate().map(|(i, e)| (i as f64, f(e))).collect::<Vec<_>>()
    };
    let chart = line_chart(
        "E(p − k) − E(p) over grid nodes, ordered by |k|",
        "node (by |k|)",
        "energy",
        &[
            Series { name: "gap".into(), points: xs(&|e| e.gap), dashed: false },
            Series { name: "lower bound".into(), points: xs(&|e| e.lower_bound), dashed: true },
            Series { name: "2|k|".into(), points: xs(&|e| 2.0 * e.k_abs), dashed: true },
        ],
    );
    out.svg("dispersion.svg", chart)?;
    print_reports(std::slice::from_ref(&rep.check));
    Ok(rep.check.passed())
}

pub fn ir_cmd(cfg: &RunConfig, out: &mut Emitter) -> Result<bool> {
    let lab = lab(cfg)?;
    let rep = ir_criterion(&lab, cfg.params.p)?;
    let rows: Vec<Vec<String>> = rep
        .samples
        .iter()
        .map(|s| vec![s.k_index.to_string(), num(s.k_abs), num(s.weight), num(s.cutoff), num(s.gap), num(s.term)])
        .collect();
    out.csv("ir.csv", &["k_index", "k_abs", "weight", "cutoff", "gap", "term"], &rows)?;
    out.json("ir.json", &rep, Value::Null)?;
    let q0 = rep.q0.map_or_else(|| "undefined".to_string(), |q| format!("{q:.6}"));
    println!("infrared sum {:.6e} (per helicity {:.6e}), q0 = {q0}", rep.value, rep.per_helicity);
    let check = rep.to_check();
    print_reports(std::slice::from_ref(&check));
    Ok(check.passed())
}

pub fn sectors_cmd(cfg: &RunConfig, out: &mut Emitter) -> Result<bool> {
    let lab = lab(cfg)?;
    let model = lab.model();
    let Some(n_az) = model.grid.azimuthal_order() else {
        bail!("the grid has no azimuthal symmetry; sectors are undefined");
    };
    let basis = lab.ops().basis();
    let h = lab.hamiltonian(&lab.params());
    let r = rotation_operator(basis, &model.polarization, 2.0 * PI / n_az as f64)?;
    let dec = sector_decompose(&h, &r, n_az, 1e-10 * lab.scale() / h.norm_bound().max(1.0))?;
    let rows: Vec<Vec<String>> = dec
        .rows()
        .iter()
        .map(|row| vec![num(row.label), row.index.to_string(), num(row.eigenvalue), num(row.residual)])
        .collect();
    out.csv("sectors.csv", &["label", "index", "eigenvalue", "residual"], &rows)?;
    let kramers = if model.grid.has_tag(SymmetryTag::ReflectionK2) {
        let upsilon = reflection_operator(basis, &model.polarization)?;
        let full = dense_spectrum(&h, lab.settings().dense_threshold)?.eigenvalues;
        Some(kramers_pairing(&h, &upsilon, &r, &dec, &full, cfg.sector_clusters, lab.settings().cluster_tol))
    } else {
        None
    };
    let summary = json!({
        "n_az": n_az,
        "dims": dec.dims(),
        "commutant_residual": dec.commutant_residual,
        "cross_residual": dec.cross_residual,
        "projector_residual": dec.projector_residual,
        "scale": dec.scale,
        "lowest_per_sector": dec.sectors.iter().map(|s| json!({"label": s.label, "lowest": s.spectrum.first()})).collect::<Vec<_>>(),
        "kramers": kramers,
    });
    out.json("sectors.json", &summary, Value::Null)?;
    println!("sector dimensions {:?}, commutant residual {:.2e}", dec.dims(), dec.commutant_residual);
    Ok(true)
}

/// Expands `all` and validates names.
pub fn select_checks(names: &[String]) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for name in names {
        if name == "all" {
            out.extend(CHECKS);
            continue;
        }
        match CHECKS.iter().find(|c| **c == name) {
            Some(c) => out.push(*c),
            None => bail!("unknown check `{name}`; known checks: all, {}", CHECKS.join(", ")),
        }
    }
    let mut seen = std::collections::HashSet::new();
    out.retain(|c| seen.insert(*c));
    Ok(out)
}

fn momenta(p: [f64; 3]) -> Vec<[f64; 3]> {
    let mut m = vec![[0.0; 3], p, [0.2, -0.1, 0.4], [0.5, 0.5, 0.0]];
    m.dedup();
    m
}

fn gauge_partner(lab: &EnergyLab) -> Option<(String, PolarizationField)> {
    let grid = &lab.model().grid;
    let candidates: Vec<(String, PolarizationKind)> = match lab.model().polarization.kind {
        PolarizationKind::Xy => [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
            .into_iter()
            .map(|n| (format!("axis {n:?}"), PolarizationKind::Axis(n)))
            .collect(),
        _ => vec![("xy".into(), PolarizationKind::Xy)],
    };
    candidates.into_iter().find_map(|(name, kind)| make_polarization(kind, grid).ok().map(|e| (name, e)))
}

fn run_check(name: &str, cfg: &RunConfig, lab: &EnergyLab) -> Result<Vec<CheckReport>> {
    let base = lab.params();
    let seed = cfg.solver.seed;
    Ok(match name {
        "concavity" => vec![check_concavity(lab, &random_segments(base, cfg.segments, seed, 0.6, 0.5, 0.3))?],
        "lipschitz" => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
            let points: Vec<PolaronParams> = (0..cfg.segments.max(2))
                .map(|_| {
                    base.with_p([rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8)])
                        .with_mass(rng.gen_range(0.0..2.0))
                })
                .collect();
            vec![check_lipschitz(lab, &points)?]
        }
        "mass_reflection" => {
            let mut masses = vec![0.5, 1.0, base.mass];
            masses.dedup();
            vec![check_mass_reflection(lab, &masses)?]
        }
        "inverse_energy" => vec![check_inverse_energy(lab, &momenta(base.p))?],
        "mass_monotone" => {
            let mut ms = cfg.photon_masses.clone();
            if !ms.contains(&0.0) {
                ms.insert(0, 0.0);
            }
            vec![check_mass_monotone(lab, &ms, &momenta(base.p))?]
        }
        "rotation_symmetry" => {
            let group = lab.model().grid.symmetry_group();
            let moving: Vec<[f64; 3]> = momenta(base.p).into_iter().filter(|p| p != &[0.0; 3]).collect();
            vec![check_rotation_symmetry(lab, &group, &moving)?]
        }
        "dispersion" => {
            let mut ps = vec![[0.0; 3], base.p];
            ps.dedup();
            ps.iter().map(|p| Ok(dispersion_report(lab, *p, cfg.p_ref)?.check)).collect::<Result<_>>()?
        }
        "ir" => vec![ir_criterion(lab, base.p)?.to_check()],
        "essential_gap" => {
            let massive;
            let l = if base.photon_mass > 0.0 {
                lab
            } else {
                let model = lab.model().at(base.with_photon_mass(cfg.gap_photon_mass));
                massive = EnergyLab::with_settings(model, cfg.solver, cfg.tolerances)?;
                &massive
            };
            let mut ps = vec![[0.0; 3], base.p];
            ps.dedup();
            ps.iter().map(|p| Ok(essential_gap(l, *p)?.to_check())).collect::<Result<_>>()?
        }
        "pull_through" => vec![pull_through_residual(lab, base.p)?.to_check(lab.bound_tol())],
        "photon_bounds" => vec![photon_bounds(lab, base.p)?.check],
        "gauge" => {
            let Some((partner, e_prime)) = gauge_partner(lab) else {
                bail!("no alternative polarization field is regular on this grid");
            };
            let n = lab.model().grid.n_kpoints();
            let theta: Vec<f64> = (0..n).map(|i| 0.37 * i as f64).collect();
            let flips: Vec<bool> = (0..n).map(|i| i % 2 == 1).collect();
            let e_mid = lab.model().polarization.rotated(&theta, &flips);
            let mut r = check_gauge(lab, &e_prime, &e_mid)?;
            r.notes.push(format!("compared against the {partner} field"));
            vec![r]
        }
        "degeneracy" => vec![check_degeneracy(lab, cfg.sector_clusters)?],
        other => bail!("unknown check `{other}`"),
    })
}

fn print_reports(reports: &[CheckReport]) {
    for r in reports {
        println!(
            "{:<18} {:<32} worst slack {:+.3e}  ({})",
            r.check,
            format!("{:?}", r.status),
            r.worst_slack,
            r.property
        );
        for n in &r.notes {
            println!("{:<18} note: {n}", "");
        }
    }
}

pub fn check_cmd(cfg: &RunConfig, names: &[String], out: &mut Emitter) -> Result<bool> {
    let selected = select_checks(names)?;
    if selected.is_empty() {
        println!("no checks selected");
        return Ok(true);
    }
    let lab = lab(cfg)?;
    let mut reports = Vec::new();
    let mut timings = Map::new();
    for name in &selected {
        let start = Instant::now();
        log::info!("running {name}");
        let r = run_check(name, cfg, &lab).with_context(|| format!("check `{name}`"))?;
        timings.insert(name.to_string(), json!(start.elapsed().as_secs_f64()));
        reports.extend(r);
    }
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.check.clone(),
                serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
                num(r.worst_slack),
                r.samples.to_string(),
                r.property.clone(),
            ]
        })
        .collect();
    out.csv("checks.csv", &["check", "status", "worst_slack", "samples", "property"], &rows)?;
    out.json("checks.json", &reports, Value::Object(timings))?;
    print_reports(&reports);
    let failed = reports.iter().filter(|r| !r.passed()).count();
    println!("{} reports, {failed} failed", reports.len());
    Ok(failed == 0)
}
