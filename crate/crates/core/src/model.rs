//! The fibre Hamiltonian
//!
//! H_m(p) = α·p + Mβ + dΓ(ω_m) − α·dΓ(k) − q α·Φ_S(g),  ω_m(k) = (1+m)|k| + m,
//!
//! on ℂ⁴ ⊗ (truncated Fock space), with the coupling evaluated at x = 0.

use nalgebra::{Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::cutoff::CutoffProfile;
use crate::dirac::{dirac_matrices, DiracAlgebra};
use crate::error::{Error, Result};
use crate::fock::{build_fock_basis_with_budget, FockBasis, ModeAmplitude, DEFAULT_BASIS_BUDGET};
use crate::grid::ModeGrid;
use crate::operator::{OperatorMatrix, TripletFile, C64};
use crate::polarization::{make_polarization, PolarizationField, PolarizationKind};
use crate::second_quant::{dgamma_real, segal_field};

/// The parameters that vary between solves on a fixed basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolaronParams {
    pub p: [f64; 3],
    pub mass: f64,
    pub photon_mass: f64,
    pub coupling: f64,
}

impl PolaronParams {
    pub fn new(p: [f64; 3], mass: f64, photon_mass: f64, coupling: f64) -> Self {
        PolaronParams { p, mass, photon_mass, coupling }
    }

    pub fn with_p(self, p: [f64; 3]) -> Self {
        PolaronParams { p, ..self }
    }

    pub fn with_mass(self, mass: f64) -> Self {
        PolaronParams { mass, ..self }
    }

    pub fn with_photon_mass(self, photon_mass: f64) -> Self {
        PolaronParams { photon_mass, ..self }
    }

    pub fn with_coupling(self, coupling: f64) -> Self {
        PolaronParams { coupling, ..self }
    }

    pub fn p_vec(&self) -> Vector3<f64> {
        Vector3::from(self.p)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.p[0], self.p[1], self.p[2], self.mass, self.photon_mass, self.coupling];
        if !all.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidModel("parameters must be finite".into()));
        }
        if self.photon_mass < 0.0 {
            return Err(Error::InvalidModel(format!("photon mass must be >= 0, got {}", self.photon_mass)));
        }
        Ok(())
    }

    /// Bit pattern used as a cache key.
    pub fn key(&self) -> [u64; 6] {
        [
            self.p[0].to_bits(),
            self.p[1].to_bits(),
            self.p[2].to_bits(),
            self.mass.to_bits(),
            self.photon_mass.to_bits(),
            self.coupling.to_bits(),
        ]
    }
}

/// ω_m(k) = (1+m)|k| + m
pub fn omega(k_abs: f64, photon_mass: f64) -> f64 {
    (1.0 + photon_mass) * k_abs + photon_mass
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolaronModel {
    pub params: PolaronParams,
    pub grid: ModeGrid,
    pub n_max: usize,
    pub cutoff: CutoffProfile,
    pub polarization: PolarizationField,
    pub basis_budget: usize,
}

impl PolaronModel {
    pub fn new(
        params: PolaronParams,
        grid: ModeGrid,
        n_max: usize,
        cutoff: CutoffProfile,
        kind: PolarizationKind,
    ) -> Result<Self> {
        let polarization = make_polarization(kind, &grid)?;
        Self::with_polarization(params, grid, n_max, cutoff, polarization)
    }

    pub fn with_polarization(
        params: PolaronParams,
        grid: ModeGrid,
        n_max: usize,
        cutoff: CutoffProfile,
        polarization: PolarizationField,
    ) -> Result<Self> {
        let model = PolaronModel { params, grid, n_max, cutoff, polarization, basis_budget: DEFAULT_BASIS_BUDGET };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.cutoff.validate()?;
        self.polarization.validate(&self.grid)
    }

    pub fn basis(&self) -> Result<FockBasis> {
        build_fock_basis_with_budget(&self.grid, self.n_max, self.basis_budget)
    }

    /// Same model with different varying parameters.
    pub fn at(&self, params: PolaronParams) -> Self {
        PolaronModel { params, ..self.clone() }
    }
}

/// g_j(i) = √wᵢ |kᵢ|^{−1/2} ρ(|kᵢ|) e_j^{(λᵢ)}(kᵢ), real.
pub fn coupling_amplitudes(model: &PolaronModel) -> [ModeAmplitude; 3] {
    amplitudes_for(&model.grid, &model.cutoff, &model.polarization)
}

pub fn amplitudes_for(grid: &ModeGrid, cutoff: &CutoffProfile, polarization: &PolarizationField) -> [ModeAmplitude; 3] {
    let mut out = [0, 1, 2].map(|_| vec![0.0; grid.n_modes()]);
    for (idx, mode) in grid.modes().iter().enumerate() {
        let kp = idx / 2;
        let k_abs = mode.k.norm();
        let scalar = mode.weight.sqrt() * cutoff.value(k_abs) / k_abs.sqrt();
        for (j, g) in out.iter_mut().enumerate() {
            g[idx] = scalar * polarization.component(kp, mode.helicity, j);
        }
    }
    out.map(|g| ModeAmplitude::from_real(&g))
}

/// The p-, M-, m- and q-independent pieces of H on a fixed basis, so that
/// any parameter point is a cheap linear combination.
#[derive(Debug, Clone)]
pub struct FibreOperators {
    basis: FockBasis,
    dirac: DiracAlgebra,
    couplings: [ModeAmplitude; 3],
    alpha: [OperatorMatrix; 3],
    beta: OperatorMatrix,
    /// 1⊗dΓ(|k|) − Σⱼ αⱼ⊗dΓ(kⱼ)
    free: OperatorMatrix,
    /// 1⊗dΓ(|k| + 1), the coefficient of m
    mass_shift: OperatorMatrix,
    /// −Σⱼ αⱼ⊗Φ_S(gⱼ), the coefficient of q
    interaction: OperatorMatrix,
}

impl FibreOperators {
    pub fn new(model: &PolaronModel) -> Result<Self> {
        model.validate()?;
        let basis = model.basis()?;
        Self::on_basis(basis, model)
    }

    /// Builds on an existing basis (which must belong to the model's grid).
    pub fn on_basis(basis: FockBasis, model: &PolaronModel) -> Result<Self> {
        if basis.n_modes() != model.grid.n_modes() {
            return Err(Error::DimensionMismatch { expected: model.grid.n_modes(), got: basis.n_modes() });
        }
        let dirac = dirac_matrices();
        let couplings = coupling_amplitudes(model);
        let id_ph = OperatorMatrix::identity(basis.len());
        let alpha = [0, 1, 2].map(|j| OperatorMatrix::kron_spin(&dirac.alpha[j], &id_ph));
        let beta = OperatorMatrix::kron_spin(&dirac.beta, &id_ph);

        let modes = model.grid.modes();
        let k_abs: Vec<f64> = modes.iter().map(|m| m.k.norm()).collect();
        let id4 = Matrix4::<C64>::identity();
        let one = C64::new(1.0, 0.0);
        let minus = C64::new(-1.0, 0.0);

        let mut free_terms = vec![OperatorMatrix::kron_spin(&id4, &dgamma_real(&basis, &k_abs)?)];
        let mut interaction_terms = Vec::with_capacity(3);
        for j in 0..3 {
            let kj: Vec<f64> = modes.iter().map(|m| m.k[j]).collect();
            free_terms.push(OperatorMatrix::kron_spin(&dirac.alpha[j], &dgamma_real(&basis, &kj)?));
            let field = segal_field(&basis, &couplings[j])?;
            interaction_terms.push(OperatorMatrix::kron_spin(&dirac.alpha[j], &field));
        }
        let free = OperatorMatrix::linear_combination(&[
            (one, &free_terms[0]),
            (minus, &free_terms[1]),
            (minus, &free_terms[2]),
            (minus, &free_terms[3]),
        ]);
        let shifted: Vec<f64> = k_abs.iter().map(|k| k + 1.0).collect();
        let mass_shift = OperatorMatrix::kron_spin(&id4, &dgamma_real(&basis, &shifted)?);
        let interaction = OperatorMatrix::linear_combination(&[
            (minus, &interaction_terms[0]),
            (minus, &interaction_terms[1]),
            (minus, &interaction_terms[2]),
        ]);
        Ok(FibreOperators { basis, dirac, couplings, alpha, beta, free, mass_shift, interaction })
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    pub fn dirac(&self) -> &DiracAlgebra {
        &self.dirac
    }

    pub fn couplings(&self) -> &[ModeAmplitude; 3] {
        &self.couplings
    }

    /// The real 3-vector (g₁(i), g₂(i), g₃(i)) of mode `i`.
    pub fn coupling_vector(&self, mode: usize) -> Vector3<f64> {
        Vector3::new(
            self.couplings[0].values[mode].re,
            self.couplings[1].values[mode].re,
            self.couplings[2].values[mode].re,
        )
    }

    pub fn dim(&self) -> usize {
        4 * self.basis.len()
    }

    pub fn hamiltonian(&self, params: &PolaronParams) -> OperatorMatrix {
        let c = |x: f64| C64::new(x, 0.0);
        OperatorMatrix::linear_combination(&[
            (c(1.0), &self.free),
            (c(params.p[0]), &self.alpha[0]),
            (c(params.p[1]), &self.alpha[1]),
            (c(params.p[2]), &self.alpha[2]),
            (c(params.mass), &self.beta),
            (c(params.photon_mass), &self.mass_shift),
            (c(params.coupling), &self.interaction),
        ])
    }

    /// s ⊗ 1 on the full space.
    pub fn spin_operator(&self, s: &Matrix4<C64>) -> OperatorMatrix {
        OperatorMatrix::kron_spin(s, &OperatorMatrix::identity(self.basis.len()))
    }

    /// 1 ⊗ A on the full space.
    pub fn photon_operator(&self, a: &OperatorMatrix) -> OperatorMatrix {
        OperatorMatrix::kron_spin(&Matrix4::identity(), a)
    }
}

#[derive(Debug, Clone)]
pub struct PolaronHamiltonian {
    pub model: PolaronModel,
    pub matrix: OperatorMatrix,
}

impl PolaronHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn to_triplet_file(&self) -> TripletFile {
        self.matrix.to_triplet_file()
    }
}

pub fn assemble(model: &PolaronModel) -> Result<PolaronHamiltonian> {
    let ops = FibreOperators::new(model)?;
    let matrix = ops.hamiltonian(&model.params);
    let residual = matrix.hermiticity_residual();
    if residual > 1e-12 {
        return Err(Error::NotHermitian(residual));
    }
    Ok(PolaronHamiltonian { model: model.clone(), matrix })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_cylindrical_grid;
    use nalgebra::DMatrix;

    fn ring_model(params: PolaronParams, n_max: usize) -> PolaronModel {
        let grid = build_cylindrical_grid(1, 1, 4, 0.5, 1.5, Vector3::z()).unwrap();
        PolaronModel::new(params, grid, n_max, CutoffProfile::Sharp { kappa: 0.5, lambda: 2.0 }, PolarizationKind::Xy)
            .unwrap()
    }

    fn lowest_dense(h: &OperatorMatrix) -> f64 {
        h.to_dense().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn free_ground_energy_at_unit_momentum() {
        for n_max in [0, 1, 2] {
            let m = ring_model(PolaronParams::new([0.0, 0.0, 1.0], 1.0, 0.0, 0.0), n_max);
            let h = assemble(&m).unwrap();
            assert!((lowest_dense(&h.matrix) + 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn massless_at_rest_has_fourfold_zero() {
        let m = ring_model(PolaronParams::new([0.0; 3], 0.0, 0.0, 0.0), 1);
        let h = assemble(&m).unwrap();
        assert!(lowest_dense(&h.matrix).abs() < 1e-12);
        // the vacuum block is the zero 4×4 matrix
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(h.matrix.get(a, b), C64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn coupling_lowers_energy() {
        let m = ring_model(PolaronParams::new([0.0; 3], 1.0, 0.0, 0.5), 2);
        let h = assemble(&m).unwrap();
        assert!(h.matrix.is_hermitian());
        assert!(lowest_dense(&h.matrix) < -1.0);
    }

    #[test]
    fn amplitudes_vanish_outside_cutoff_and_are_transverse() {
        let grid = build_cylindrical_grid(2, 3, 8, 0.2, 2.0, Vector3::z()).unwrap();
        let m = PolaronModel::new(
            PolaronParams::new([0.0; 3], 1.0, 0.0, 0.3),
            grid.clone(),
            1,
            CutoffProfile::Sharp { kappa: 0.05, lambda: 0.1 },
            PolarizationKind::Xy,
        )
        .unwrap();
        assert!(coupling_amplitudes(&m).iter().all(|g| g.norm_sqr() == 0.0));

        let m = m.clone();
        let m = PolaronModel { cutoff: CutoffProfile::Exponential { lambda: 1.0 }, ..m };
        let g = coupling_amplitudes(&m);
        for (i, mode) in grid.modes().iter().enumerate() {
            let dot: f64 = (0..3).map(|j| mode.k[j] * g[j].values[i].re).sum();
            assert!(dot.abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_norm_matches_radial_integral() {
        // Σ|g|² = Σ_i w_i ρ²/|k| (both helicities) approximates
        // 2 ∫ ρ(k)²/|k| d³k = 8π ∫ r e^{−2r} r² dr over the shell.
        let grid = build_cylindrical_grid(40, 3, 4, 0.2, 2.0, Vector3::z()).unwrap();
        let m = PolaronModel::new(
            PolaronParams::new([0.0; 3], 1.0, 0.0, 0.3),
            grid,
            0,
            CutoffProfile::Exponential { lambda: 1.0 },
            PolarizationKind::Xy,
        )
        .unwrap();
        let sum: f64 = coupling_amplitudes(&m).iter().map(|g| g.norm_sqr()).sum();
        // Simpson oracle for ∫_{0.2}^{2} r³ e^{−2r} dr
        let n = 2000;
        let h = 1.8 / n as f64;
        let f = |r: f64| r.powi(3) * (-2.0 * r).exp();
        let mut s = f(0.2) + f(2.0);
        for i in 1..n {
            s += f(0.2 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral = 8.0 * std::f64::consts::PI * s * h / 3.0;
        assert!((sum - integral).abs() / integral < 1e-3);
    }

    #[test]
    fn sector_selection_rule() {
        let m = ring_model(PolaronParams::new([0.1, -0.2, 0.3], 0.7, 0.1, 0.4), 3);
        let ops = FibreOperators::new(&m).unwrap();
        let h = ops.hamiltonian(&m.params);
        let b = ops.basis();
        for (r, c, _) in h.triplets() {
            let (tr, tc) = (b.total(r / 4) as i64, b.total(c / 4) as i64);
            assert!((tr - tc).abs() <= 1);
        }
    }

    #[test]
    fn gamma5_reflects_mass() {
        let m = ring_model(PolaronParams::new([0.1, -0.2, 0.3], 0.7, 0.1, 0.4), 2);
        let ops = FibreOperators::new(&m).unwrap();
        let g5 = ops.spin_operator(&ops.dirac().gamma5);
        let h = ops.hamiltonian(&m.params);
        let h_neg = ops.hamiltonian(&m.params.with_mass(-0.7));
        assert_eq!(h.conjugate_by(&g5).max_abs_diff(&h_neg), 0.0);
    }

    #[test]
    fn dense_pieces_match_direct_formula() {
        // Direct dense assembly from Kronecker products as an independent route.
        let m = ring_model(PolaronParams::new([0.2, 0.0, -0.1], 0.5, 0.2, 0.3), 1);
        let ops = FibreOperators::new(&m).unwrap();
        let b = ops.basis();
        let d = dirac_matrices();
        let n = b.len();
        let kron = |s: &Matrix4<C64>, a: &DMatrix<C64>| {
            DMatrix::from_fn(4 * n, 4 * n, |r, c| s[(r % 4, c % 4)] * a[(r / 4, c / 4)])
        };
        let id = DMatrix::<C64>::identity(n, n);
        let p = m.params;
        let mut h = kron(&d.free_symbol(p.p, p.mass), &id);
        let g = coupling_amplitudes(&m);
        for s in 0..n {
            let occ = b.state(s);
            let mut diag = C64::new(0.0, 0.0);
            let mut momentum = Vector3::zeros();
            for (i, mode) in m.grid.modes().iter().enumerate() {
                diag += omega(mode.k.norm(), p.photon_mass) * occ[i] as f64;
                momentum += mode.k * occ[i] as f64;
            }
            for a in 0..4 {
                h[(4 * s + a, 4 * s + a)] += diag;
            }
            let block = d.free_symbol(momentum.into(), 0.0);
            for a in 0..4 {
                for c in 0..4 {
                    h[(4 * s + a, 4 * s + c)] -= block[(a, c)];
                }
            }
        }
        for j in 0..3 {
            let phi = segal_field(b, &g[j]).unwrap().to_dense();
            h -= kron(&d.alpha[j], &phi) * C64::new(p.coupling, 0.0);
        }
        let diff = (ops.hamiltonian(&p).to_dense() - h).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-13);
    }
}
