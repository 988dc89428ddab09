//! Gauge unitaries between polarization choices, grid symmetry operators,
//! the discrete rotation representation with its sector decomposition, and
//! the reflection that pairs opposite sectors.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::dirac::dirac_matrices;
use crate::error::{Error, Result};
use crate::fock::FockBasis;
use crate::grid::{rotation_about, ModeGrid, SymmetryTag};
use crate::operator::{OperatorMatrix, C64};
use crate::polarization::PolarizationField;
use crate::second_quant::{gamma_functor, OneParticleMap};
use crate::spectral::degeneracy_clusters;

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// U(e←e′) = Γ(u₁)Γ(u₂): u₂ negates helicity 2 on the flip set, u₁
/// rotates the helicity pair by θ(k).
#[derive(Debug, Clone)]
pub struct GaugeUnitary {
    pub theta: Vec<f64>,
    pub flip_set: Vec<usize>,
    pub map: OneParticleMap,
    /// Photon-space matrix.
    pub matrix: OperatorMatrix,
}

impl GaugeUnitary {
    /// 1 ⊗ U on the spinor-photon space.
    pub fn full(&self) -> OperatorMatrix {
        OperatorMatrix::kron_spin(&Matrix4::identity(), &self.matrix)
    }
}

/// The one-particle map taking couplings built from `e_prime` to those
/// built from `e`: per node the 2×2 block B_λμ = e⁽λ⁾·e′⁽μ⁾, together with
/// its angle θ and whether it flips handedness.
pub fn gauge_map(
    grid: &ModeGrid,
    e: &PolarizationField,
    e_prime: &PolarizationField,
) -> Result<(OneParticleMap, Vec<f64>, Vec<usize>)> {
    e.validate(grid)?;
    e_prime.validate(grid)?;
    let n = grid.n_kpoints();
    let mut blocks = Vec::with_capacity(n);
    let mut theta = Vec::with_capacity(n);
    let mut flips = Vec::new();
    for i in 0..n {
        let b = Matrix2::from_fn(|l, m| e.vectors[i][l].dot(&e_prime.vectors[i][m]));
        // B = R(θ)·F with F = diag(1, −1) on the flip set
        let flipped = b.determinant() < 0.0;
        let rot = if flipped { b * Matrix2::new(1.0, 0.0, 0.0, -1.0) } else { b };
        theta.push(rot[(1, 0)].atan2(rot[(0, 0)]).rem_euclid(2.0 * PI));
        if flipped {
            flips.push(i);
        }
        blocks.push(b.map(c));
    }
    Ok((OneParticleMap { perm: (0..n).collect(), blocks }, theta, flips))
}

pub fn gauge_unitary(basis: &FockBasis, e: &PolarizationField, e_prime: &PolarizationField) -> Result<GaugeUnitary> {
    let (map, theta, flip_set) = gauge_map(basis.grid(), e, e_prime)?;
    let matrix = gamma_functor(basis, &map)?;
    Ok(GaugeUnitary { theta, flip_set, map, matrix })
}

/// Photon part of the naive lift of T: mode (i, μ) moves to the node at
/// T⁻¹kᵢ, keeping its helicity label.
pub fn permutation_map(grid: &ModeGrid, t: &Matrix3<f64>) -> Result<OneParticleMap> {
    let sigma = grid.kpoint_permutation(&t.transpose()).map_err(|e| Error::NotGridPreserving(e.to_string()))?;
    let n = sigma.len();
    Ok(OneParticleMap { perm: sigma, blocks: vec![Matrix2::identity(); n] })
}

/// The naive lift u_T ⊗ Γ(π_T) and the transported polarization
/// e′(k) = Tᵀe(Tk). It satisfies U H(p; e) U† = H(T⁻¹p; e′).
pub fn naive_symmetry_operator(
    basis: &FockBasis,
    e: &PolarizationField,
    t: &Matrix3<f64>,
    spinor: &Matrix4<C64>,
) -> Result<(OperatorMatrix, PolarizationField)> {
    let grid = basis.grid();
    let pi = permutation_map(grid, t)?;
    let perm_t = grid.kpoint_permutation(t).map_err(|err| Error::NotGridPreserving(err.to_string()))?;
    let transported = e.transported(t, &perm_t);
    let op = OperatorMatrix::kron_spin(spinor, &gamma_functor(basis, &pi)?);
    Ok((op, transported))
}

/// One-particle part of W_T = U(e←e′)(u_T ⊗ Γ(π_T)).
pub fn symmetry_map(grid: &ModeGrid, e: &PolarizationField, t: &Matrix3<f64>) -> Result<OneParticleMap> {
    let pi = permutation_map(grid, t)?;
    let perm_t = grid.kpoint_permutation(t).map_err(|err| Error::NotGridPreserving(err.to_string()))?;
    let transported = e.transported(t, &perm_t);
    let (g, _, _) = gauge_map(grid, e, &transported)?;
    Ok(g.compose(&pi))
}

/// W_T with a given spinor part: W_T H(p; e) W_T† = H(T⁻¹p; e).
pub fn symmetry_operator_with_spinor(
    basis: &FockBasis,
    e: &PolarizationField,
    t: &Matrix3<f64>,
    spinor: &Matrix4<C64>,
) -> Result<OperatorMatrix> {
    let dirac = dirac_matrices();
    let r = dirac.spinor_residual(spinor, t);
    if r > 1e-12 {
        return Err(Error::InvalidModel(format!("spinor does not implement the map ({r:.2e})")));
    }
    let map = symmetry_map(basis.grid(), e, t)?;
    Ok(OperatorMatrix::kron_spin(spinor, &gamma_functor(basis, &map)?))
}

pub fn symmetry_operator(basis: &FockBasis, e: &PolarizationField, t: &Matrix3<f64>) -> Result<OperatorMatrix> {
    let spinor = dirac_matrices().spinor_for_orthogonal(t)?;
    symmetry_operator_with_spinor(basis, e, t, &spinor)
}

/// R_φ: spin part exp(iφ a·S) about the grid axis a, photon part the
/// grid rotation (with the gauge correction built in). Commutes with H(p)
/// for p parallel to the axis.
pub fn rotation_operator(basis: &FockBasis, e: &PolarizationField, phi: f64) -> Result<OperatorMatrix> {
    let grid = basis.grid();
    let n_az =
        grid.azimuthal_order().ok_or_else(|| Error::SymmetryNotExact("grid has no azimuthal symmetry tag".into()))?;
    let steps = phi / (2.0 * PI / n_az as f64);
    if (steps - steps.round()).abs() > 1e-9 {
        return Err(Error::SymmetryNotExact(format!("angle {phi} is not a multiple of 2π/{n_az}")));
    }
    let axis = grid.axis();
    let spinor = dirac_matrices().spin_rotation(&axis, phi);
    symmetry_operator_with_spinor(basis, e, &rotation_about(&axis, -phi), &spinor)
}

/// Υ = τ ⊗ Γ(ν): the reflection of the grid's second frame direction, with
/// the gauge correction (for the xy kind about ẑ this is the helicity-1
/// sign flip).
pub fn reflection_operator(basis: &FockBasis, e: &PolarizationField) -> Result<OperatorMatrix> {
    let grid = basis.grid();
    if !grid.has_tag(SymmetryTag::ReflectionK2) {
        return Err(Error::SymmetryNotExact("grid has no reflection tag".into()));
    }
    symmetry_operator(basis, e, &grid.tag_matrix(SymmetryTag::ReflectionK2))
}

/// Υ assembled literally as τ ⊗ Γ(ν) with τ = α₁α₃β and ν the reflection
/// k₂ → −k₂ combined with a sign flip on helicity 1.
pub fn explicit_reflection_operator(basis: &FockBasis) -> Result<OperatorMatrix> {
    let grid = basis.grid();
    let t = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0));
    let perm = grid.kpoint_permutation(&t).map_err(|err| Error::NotGridPreserving(err.to_string()))?;
    let flip = Matrix2::new(c(-1.0), c(0.0), c(0.0), c(1.0));
    let map = OneParticleMap { blocks: vec![flip; perm.len()], perm };
    let tau = dirac_matrices().reflection_k2_spinor();
    Ok(OperatorMatrix::kron_spin(&tau, &gamma_functor(basis, &map)?))
}

/// Orthonormal vectors stored sparsely as (index, value) lists.
pub type SparseColumns = Vec<Vec<(usize, C64)>>;

#[derive(Debug, Clone)]
pub struct Sector {
    /// Half-integer label z with eigenphase e^{iφz}, z ∈ (−n/2, n/2].
    pub label: f64,
    pub basis: SparseColumns,
    pub block: DMatrix<C64>,
    pub spectrum: Vec<f64>,
    /// ‖Bv − λv‖ / scale for each block eigenpair.
    pub residuals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SectorDecomposition {
    pub n_az: usize,
    pub sectors: Vec<Sector>,
    /// ‖R H R† − H‖_max
    pub commutant_residual: f64,
    /// Largest matrix element of H between different sectors.
    pub cross_residual: f64,
    /// ‖Σ_z P_z − 1‖_max and mutual overlaps of sector bases.
    pub projector_residual: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectorRow {
    pub label: f64,
    pub index: usize,
    pub eigenvalue: f64,
    pub residual: f64,
}

impl SectorDecomposition {
    pub fn dims(&self) -> Vec<usize> {
        self.sectors.iter().map(|s| s.basis.len()).collect()
    }

    /// All block eigenvalues merged and sorted.
    pub fn merged_spectrum(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.sectors.iter().flat_map(|s| s.spectrum.iter().copied()).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn sector(&self, label: f64) -> Option<&Sector> {
        self.sectors.iter().find(|s| (s.label - label).abs() < 1e-9)
    }

    pub fn rows(&self) -> Vec<SectorRow> {
        self.sectors
            .iter()
            .flat_map(|s| {
                s.spectrum.iter().zip(&s.residuals).enumerate().map(move |(i, (&e, &r))| SectorRow {
                    label: s.label,
                    index: i,
                    eigenvalue: e,
                    residual: r,
                })
            })
            .collect()
    }
}

/// Connected components of the sparsity graph of `r`.
fn components(r: &OperatorMatrix) -> Vec<Vec<usize>> {
    let n = r.dim();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (i, j, _) in r.triplets() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_insert_with(|| {
            order.push(root);
            Vec::new()
        });
        groups.get_mut(&root).unwrap().push(i);
    }
    order.into_iter().map(|root| groups.remove(&root).unwrap()).collect()
}

/// H·v for sparse v, using Hermiticity (column c of H is the conjugate of row c).
fn apply_sparse(h: &OperatorMatrix, v: &[(usize, C64)], acc: &mut [C64], touched: &mut Vec<usize>) {
    for &(col, x) in v {
        for (r, hv) in h.row(col) {
            if acc[r] == c(0.0) {
                touched.push(r);
            }
            acc[r] += hv.conj() * x;
        }
    }
}

/// Sector labels (−n/2, n/2] of half-integer z for rotation order n.
pub fn sector_labels(n_az: usize) -> Vec<f64> {
    (0..n_az).map(|j| -(n_az as f64) / 2.0 + 0.5 + j as f64).collect()
}

/// Splits the space into eigenspaces of the rotation `r` (of order n_az,
/// with r^{n_az} = −1) and diagonalizes H on each.
pub fn sector_decompose(
    h: &OperatorMatrix,
    r: &OperatorMatrix,
    n_az: usize,
    commutant_tol: f64,
) -> Result<SectorDecomposition> {
    if h.dim() != r.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), got: r.dim() });
    }
    let scale = h.norm_bound().max(1.0);
    let commutant_residual = r.matmul(h).max_abs_diff(&h.matmul(r));
    if commutant_residual > commutant_tol * scale {
        return Err(Error::NotCommuting(commutant_residual));
    }
    let phi = 2.0 * PI / n_az as f64;
    let labels = sector_labels(n_az);
    let mut bases: Vec<SparseColumns> = vec![Vec::new(); n_az];
    let mut projector_residual = 0.0f64;

    for comp in components(r) {
        let m = comp.len();
        let local: HashMap<usize, usize> = comp.iter().enumerate().map(|(a, &g)| (g, a)).collect();
        let mut rc = DMatrix::from_element(m, m, c(0.0));
        for (a, &g) in comp.iter().enumerate() {
            for (col, v) in r.row(g) {
                rc[(a, local[&col])] = v;
            }
        }
        let mut powers = vec![DMatrix::identity(m, m)];
        for j in 1..n_az {
            let next = &powers[j - 1] * &rc;
            powers.push(next);
        }
        let mut total = DMatrix::from_element(m, m, c(0.0));
        for (zi, &z) in labels.iter().enumerate() {
            let mut p = DMatrix::from_element(m, m, c(0.0));
            for (j, rj) in powers.iter().enumerate() {
                p += rj * C64::from_polar(1.0 / n_az as f64, -phi * j as f64 * z);
            }
            let p = (&p + p.adjoint()) * c(0.5);
            let eig = p.symmetric_eigen();
            let mut picked: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
            picked.sort_unstable();
            for i in picked {
                let col = eig.eigenvectors.column(i);
                // fix the phase: largest entry real positive
                let arg = (0..m).fold(0, |best, k| if col[k].norm() > col[best].norm() + 1e-12 { k } else { best });
                let phase = col[arg].conj() / col[arg].norm();
                let v: Vec<(usize, C64)> = col
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| x.norm() > 1e-14)
                    .map(|(k, x)| (comp[k], x * phase))
                    .collect();
                let dense = DMatrix::from_fn(m, 1, |k, _| col[k] * phase);
                total += &dense * dense.adjoint();
                bases[zi].push(v);
            }
        }
        let dev = (total - DMatrix::identity(m, m)).iter().map(|x| x.norm()).fold(0.0, f64::max);
        projector_residual = projector_residual.max(dev);
    }

    let dim = h.dim();
    let mut acc = vec![c(0.0); dim];
    let mut touched = Vec::new();
    let mut cross_residual = 0.0f64;
    let mut sectors = Vec::with_capacity(n_az);
    for (zi, basis) in bases.into_iter().enumerate() {
        let d = basis.len();
        let mut block = DMatrix::from_element(d, d, c(0.0));
        for b in 0..d {
            apply_sparse(h, &basis[b], &mut acc, &mut touched);
            for a in 0..d {
                block[(a, b)] = basis[a].iter().map(|&(i, x)| x.conj() * acc[i]).sum();
            }
            // remove the in-sector part; what is left couples to other sectors
            for a in 0..d {
                let coef = block[(a, b)];
                for &(i, x) in &basis[a] {
                    acc[i] -= x * coef;
                }
            }
            for &i in &touched {
                cross_residual = cross_residual.max(acc[i].norm());
                acc[i] = c(0.0);
            }
            for a in 0..d {
                for &(i, _) in &basis[a] {
                    acc[i] = c(0.0);
                }
            }
            touched.clear();
        }
        let block = (&block + block.adjoint()) * c(0.5);
        let (mut spectrum, mut residuals) = (Vec::with_capacity(d), Vec::with_capacity(d));
        if d > 0 {
            let eig = block.clone().symmetric_eigen();
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            for i in order {
                let v = eig.eigenvectors.column(i);
                let lambda = eig.eigenvalues[i];
                spectrum.push(lambda);
                residuals.push((&block * v - v * c(lambda)).norm() / scale);
            }
        }
        sectors.push(Sector { label: labels[zi], basis, block, spectrum, residuals });
    }

    Ok(SectorDecomposition { n_az, sectors, commutant_residual, cross_residual, projector_residual, scale })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KramersReport {
    /// ‖Υ H Υ† − H‖_max
    pub invariance_residual: f64,
    /// ‖Υ R Υ† − R†‖_max: Υ sends sector z to −z.
    pub reversal_residual: f64,
    /// Largest elementwise gap between the spectra of sectors z and −z.
    pub pairing_gap: f64,
    /// Multiplicities of the lowest clusters examined.
    pub lowest_multiplicities: Vec<usize>,
    pub all_even: bool,
    pub scale: f64,
}

/// Checks the pairing of sectors z and −z by Υ and the parity of the
/// multiplicities of the lowest `n_clusters` eigenvalue clusters of `spectrum`.
pub fn kramers_pairing(
    h: &OperatorMatrix,
    upsilon: &OperatorMatrix,
    r: &OperatorMatrix,
    decomposition: &SectorDecomposition,
    spectrum: &[f64],
    n_clusters: usize,
    cluster_tol: f64,
) -> KramersReport {
    let invariance_residual = h.conjugate_by(upsilon).max_abs_diff(h);
    let reversal_residual = r.conjugate_by(upsilon).max_abs_diff(&r.adjoint());
    let mut pairing_gap = 0.0f64;
    for s in &decomposition.sectors {
        match decomposition.sector(-s.label) {
            Some(partner) if partner.spectrum.len() == s.spectrum.len() => {
                for (a, b) in s.spectrum.iter().zip(&partner.spectrum) {
                    pairing_gap = pairing_gap.max((a - b).abs());
                }
            }
            _ => pairing_gap = f64::INFINITY,
        }
    }
    let clusters = degeneracy_clusters(spectrum, cluster_tol);
    // the last cluster may be cut by the end of the list
    let usable = if clusters.iter().sum::<usize>() == spectrum.len() && clusters.len() > n_clusters {
        n_clusters
    } else {
        clusters.len().min(n_clusters)
    };
    let lowest_multiplicities: Vec<usize> = clusters[..usable].to_vec();
    let all_even = lowest_multiplicities.iter().all(|m| m % 2 == 0);
    KramersReport {
        invariance_residual,
        reversal_residual,
        pairing_gap,
        lowest_multiplicities,
        all_even,
        scale: h.norm_bound().max(1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutoff::CutoffProfile;
    use crate::fock::build_fock_basis;
    use crate::grid::build_cylindrical_grid;
    use crate::model::{FibreOperators, PolaronModel, PolaronParams};
    use crate::polarization::{make_polarization, PolarizationKind};
    use nalgebra::Vector3;

    fn ring() -> ModeGrid {
        build_cylindrical_grid(1, 1, 4, 0.5, 1.5, Vector3::z()).unwrap()
    }

    fn ops_for(grid: &ModeGrid, e: PolarizationField, params: PolaronParams, n_max: usize) -> FibreOperators {
        let model = PolaronModel::with_polarization(
            params,
            grid.clone(),
            n_max,
            CutoffProfile::Sharp { kappa: 0.5, lambda: 2.0 },
            e,
        )
        .unwrap();
        FibreOperators::new(&model).unwrap()
    }

    fn scrambled(grid: &ModeGrid, e: &PolarizationField) -> PolarizationField {
        let n = grid.n_kpoints();
        let theta: Vec<f64> = (0..n).map(|i| 0.9 + 1.3 * i as f64).collect();
        let flip: Vec<bool> = (0..n).map(|i| i % 2 == 1).collect();
        e.rotated(&theta, &flip)
    }

    #[test]
    fn gauge_identity_and_global_flip() {
        let g = ring();
        let b = build_fock_basis(&g, 2).unwrap();
        let e = make_polarization(PolarizationKind::Xy, &g).unwrap();
        let u = gauge_unitary(&b, &e, &e).unwrap();
        assert!(u.matrix.max_abs_diff(&OperatorMatrix::identity(b.len())) < 1e-15);
        assert!(u.flip_set.is_empty());

        let mut neg = e.clone();
        for v in neg.vectors.iter_mut() {
            v[0] = -v[0];
        }
        let u = gauge_unitary(&b, &e, &neg).unwrap();
        // e' = (−e1, e2) has B = diag(−1, 1): a flip composed with rotation by π
        assert_eq!(u.flip_set.len(), g.n_kpoints());
        assert!(u.theta.iter().all(|t| (t - PI).abs() < 1e-12));
    }

    #[test]
    fn gauge_conjugation_and_chain_rule() {
        let g = ring();
        let e = make_polarization(PolarizationKind::Xy, &g).unwrap();
        let e1 = make_polarization(PolarizationKind::Axis([1.0, 0.0, 0.0]), &g).unwrap();
        let e2 = scrambled(&g, &e);
        let params = PolaronParams::new([0.1, 0.2, 0.3], 0.8, 0.1, 0.6);
        let h = ops_for(&g, e.clone(), params, 2).hamiltonian(&params);
        let h1 = ops_for(&g, e1.clone(), params, 2).hamiltonian(&params);
        let basis = build_fock_basis(&g, 2).unwrap();
        let u = gauge_unitary(&basis, &e, &e1).unwrap().full();
        assert!(h1.conjugate_by(&u).max_abs_diff(&h) < 1e-12 * h.norm_bound());
        assert!(u.unitarity_residual() < 1e-12);

        let u01 = gauge_unitary(&basis, &e, &e1).unwrap().matrix;
        let u12 = gauge_unitary(&basis, &e1, &e2).unwrap().matrix;
        let u02 = gauge_unitary(&basis, &e, &e2).unwrap().matrix;
        assert!(u01.matmul(&u12).max_abs_diff(&u02) < 1e-12);
        let u10 = gauge_unitary(&basis, &e1, &e).unwrap().matrix;
        assert!(u10.max_abs_diff(&u01.adjoint()) < 1e-12);
    }

    #[test]
    fn naive_lift_transports_polarization() {
        let g = build_cylindrical_grid(1, 3, 4, 0.5, 1.5, Vector3::z()).unwrap();
        let basis = build_fock_basis(&g, 1).unwrap();
        let e = make_polarization(PolarizationKind::Axis([1.0, 0.0, 0.0]), &g).unwrap();
        let params = PolaronParams::new([0.1, -0.2, 0.3], 0.8, 0.1, 0.6);
        let ops = ops_for(&g, e.clone(), params, 1);
        let h = ops.hamiltonian(&params);
        let d = dirac_matrices();
        for t in g.symmetry_group() {
            let u = d.spinor_for_orthogonal(&t).unwrap();
            let (w, e_t) = naive_symmetry_operator(&basis, &e, &t, &u).unwrap();
            let p_new = t.transpose() * params.p_vec();
            let target_params = params.with_p(p_new.into());
            let h_t = ops_for(&g, e_t, params, 1).hamiltonian(&target_params);
            assert!(h.conjugate_by(&w).max_abs_diff(&h_t) < 1e-12 * h.norm_bound());

            let full = symmetry_operator(&basis, &e, &t).unwrap();
            let h_back = ops.hamiltonian(&target_params);
            assert!(h.conjugate_by(&full).max_abs_diff(&h_back) < 1e-12 * h.norm_bound());
        }
    }

    #[test]
    fn rotation_commutes_and_has_half_integer_phases() {
        let g = ring();
        let basis = build_fock_basis(&g, 2).unwrap();
        let e = make_polarization(PolarizationKind::Xy, &g).unwrap();
        let params = PolaronParams::new([0.0, 0.0, 0.4], 1.0, 0.0, 0.3);
        let h = ops_for(&g, e.clone(), params, 2).hamiltonian(&params);
        let phi = PI / 2.0;
        let r = rotation_operator(&basis, &e, phi).unwrap();
        assert!(r.matmul(&h).max_abs_diff(&h.matmul(&r)) < 1e-12);
        let mut r4 = OperatorMatrix::identity(r.dim());
        for _ in 0..4 {
            r4 = r4.matmul(&r);
        }
        assert!(r4.max_abs_diff(&OperatorMatrix::identity(r.dim()).scale(c(-1.0))) < 1e-12);
        let r0 = rotation_operator(&basis, &e, 0.0).unwrap();
        assert!(r0.max_abs_diff(&OperatorMatrix::identity(r.dim())) < 1e-15);
        assert!(rotation_operator(&basis, &e, 0.3).is_err());
    }

    #[test]
    fn sectors_reproduce_full_spectrum() {
        let g = ring();
        let basis = build_fock_basis(&g, 2).unwrap();
        let e = make_polarization(PolarizationKind::Axis([1.0, 0.0, 0.0]), &g);
        // the x axis passes through no ring node, but the ring is not
        // equivariant for it; the gauge correction handles that
        let e = e.unwrap();
        let params = PolaronParams::new([0.0, 0.0, 0.4], 1.0, 0.0, 0.3);
        let h = ops_for(&g, e.clone(), params, 2).hamiltonian(&params);
        let r = rotation_operator(&basis, &e, PI / 2.0).unwrap();
        let dec = sector_decompose(&h, &r, 4, 1e-10).unwrap();
        assert_eq!(dec.dims().iter().sum::<usize>(), h.dim());
        assert!(dec.projector_residual < 1e-10);
        assert!(dec.cross_residual < 1e-10);
        let full = crate::spectral::dense_spectrum(&h, 3000).unwrap().eigenvalues;
        for (a, b) in dec.merged_spectrum().iter().zip(&full) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn reflection_pairs_sectors() {
        let g = ring();
        let basis = build_fock_basis(&g, 2).unwrap();
        let e = make_polarization(PolarizationKind::Xy, &g).unwrap();
        let params = PolaronParams::new([0.0, 0.0, 0.4], 1.0, 0.0, 0.3);
        let h = ops_for(&g, e.clone(), params, 2).hamiltonian(&params);
        let ups = reflection_operator(&basis, &e).unwrap();
        let explicit = explicit_reflection_operator(&basis).unwrap();
        let same = ups.max_abs_diff(&explicit).min(ups.max_abs_diff(&explicit.scale(c(-1.0))));
        assert!(same < 1e-12);
        let r = rotation_operator(&basis, &e, PI / 2.0).unwrap();
        let dec = sector_decompose(&h, &r, 4, 1e-10).unwrap();
        let full = crate::spectral::dense_spectrum(&h, 3000).unwrap().eigenvalues;
        let rep = kramers_pairing(&h, &ups, &r, &dec, &full[..20], 6, 1e-7);
        assert!(rep.invariance_residual < 1e-12);
        assert!(rep.reversal_residual < 1e-12);
        assert!(rep.pairing_gap < 1e-9);
        assert!(rep.all_even, "{:?}", rep.lowest_multiplicities);
        // Υ² commutes with H
        let u2 = ups.matmul(&ups);
        assert!(u2.matmul(&h).max_abs_diff(&h.matmul(&u2)) < 1e-12);
    }
}
