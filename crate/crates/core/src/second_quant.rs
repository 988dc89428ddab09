//! Second-quantized operators on a truncated [`FockBasis`].
//!
//! Conventions: `a(f) = Σᵢ f(i)* aᵢ` (antilinear in `f`),
//! `a†(f) = a(f)†`, `Φ_S(f) = (a(f) + a†(f))/√2`. Creation operators
//! acting on states at the truncation ceiling give zero.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::fock::{FockBasis, ModeAmplitude};
use crate::grid::ModeGrid;
use crate::operator::{OperatorMatrix, C64};

pub fn annihilation(basis: &FockBasis, f: &ModeAmplitude) -> Result<OperatorMatrix> {
    f.check_len(basis.n_modes())?;
    let mut trip = Vec::new();
    let mut scratch = vec![0u8; basis.n_modes()];
    for s in 0..basis.len() {
        let occ = basis.state(s);
        for (i, &n) in occ.iter().enumerate() {
            if n == 0 || f.values[i] == C64::new(0.0, 0.0) {
                continue;
            }
            scratch.copy_from_slice(occ);
            scratch[i] -= 1;
            let t = basis.ordinal(&scratch).expect("lowered state lies in the basis");
            trip.push((t, s, f.values[i].conj() * (n as f64).sqrt()));
        }
    }
    Ok(OperatorMatrix::from_triplets(basis.len(), trip))
}

pub fn creation(basis: &FockBasis, f: &ModeAmplitude) -> Result<OperatorMatrix> {
    Ok(annihilation(basis, f)?.adjoint())
}

pub fn segal_field(basis: &FockBasis, f: &ModeAmplitude) -> Result<OperatorMatrix> {
    let a = annihilation(basis, f)?;
    let s = C64::new(FRAC_1_SQRT_2, 0.0);
    Ok(OperatorMatrix::linear_combination(&[(s, &a), (s, &a.adjoint())]))
}

/// dΓ(w) for a multiplier `w` (one value per mode): diagonal Σᵢ nᵢ w(i).
pub fn dgamma_multiplier(basis: &FockBasis, w: &[C64]) -> Result<OperatorMatrix> {
    if w.len() != basis.n_modes() {
        return Err(Error::DimensionMismatch { expected: basis.n_modes(), got: w.len() });
    }
    let diag: Vec<C64> =
        (0..basis.len()).map(|s| basis.state(s).iter().zip(w).map(|(&n, &wi)| wi * n as f64).sum()).collect();
    Ok(OperatorMatrix::diagonal(&diag))
}

pub fn dgamma_real(basis: &FockBasis, w: &[f64]) -> Result<OperatorMatrix> {
    let w: Vec<C64> = w.iter().map(|&x| C64::new(x, 0.0)).collect();
    dgamma_multiplier(basis, &w)
}

pub fn number_operator(basis: &FockBasis) -> OperatorMatrix {
    let diag: Vec<C64> = (0..basis.len()).map(|s| C64::new(basis.total(s) as f64, 0.0)).collect();
    OperatorMatrix::diagonal(&diag)
}

/// Projector onto the Fock vacuum (rank 1 on the photon space).
pub fn vacuum_projector(basis: &FockBasis) -> OperatorMatrix {
    OperatorMatrix::from_triplets(basis.len(), vec![(0, 0, C64::new(1.0, 0.0))])
}

/// Discrete a_λ(kᵢ) := aᵢ / √weightᵢ.
pub fn pointwise_annihilation(basis: &FockBasis, mode: usize) -> Result<OperatorMatrix> {
    let n = basis.n_modes();
    if mode >= n {
        return Err(Error::IndexOutOfRange { index: mode, len: n });
    }
    let mut f = ModeAmplitude::zeros(n);
    f.values[mode] = C64::new(1.0 / basis.grid().modes()[mode].weight.sqrt(), 0.0);
    annihilation(basis, &f)
}

/// A grid-preserving one-particle unitary: k-point `i` is sent to
/// `perm[i]`, and helicities are mixed by the 2×2 unitary `blocks[i]`:
/// `u e_(i,μ) = Σ_λ blocks[i][(λ, μ)] e_(perm[i], λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneParticleMap {
    pub perm: Vec<usize>,
    pub blocks: Vec<Matrix2<C64>>,
}

impl OneParticleMap {
    pub fn identity(n_kpoints: usize) -> Self {
        OneParticleMap { perm: (0..n_kpoints).collect(), blocks: vec![Matrix2::identity(); n_kpoints] }
    }

    /// Per-mode phase e^{iθ} on every mode.
    pub fn phase(n_kpoints: usize, theta: f64) -> Self {
        let p = C64::from_polar(1.0, theta);
        OneParticleMap { perm: (0..n_kpoints).collect(), blocks: vec![Matrix2::identity() * p; n_kpoints] }
    }

    pub fn n_kpoints(&self) -> usize {
        self.perm.len()
    }

    /// Checks that the permutation is a bijection and the blocks are unitary.
    /// Weight preservation is checked against `grid`.
    pub fn validate(&self, grid: &ModeGrid) -> Result<()> {
        let n = grid.n_kpoints();
        if self.perm.len() != n || self.blocks.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.perm.len() });
        }
        let mut seen = vec![false; n];
        for (i, &j) in self.perm.iter().enumerate() {
            if j >= n || seen[j] {
                return Err(Error::NotGridPreserving(format!("k-point {i} -> {j} is not a bijection")));
            }
            seen[j] = true;
            let (wi, wj) = (grid.weight(i), grid.weight(j));
            if (wi - wj).abs() > 1e-12 * wi.max(wj) {
                return Err(Error::NotGridPreserving(format!("weights differ on {i} -> {j}")));
            }
            let b = &self.blocks[i];
            let res = (b.adjoint() * b - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if res > 1e-12 {
                return Err(Error::NotGridPreserving(format!("block {i} not unitary ({res:.2e})")));
            }
        }
        Ok(())
    }

    /// u ∘ v
    pub fn compose(&self, v: &OneParticleMap) -> Self {
        let n = self.perm.len();
        let mut perm = vec![0; n];
        let mut blocks = vec![Matrix2::zeros(); n];
        for i in 0..n {
            let mid = v.perm[i];
            perm[i] = self.perm[mid];
            blocks[i] = self.blocks[mid] * v.blocks[i];
        }
        OneParticleMap { perm, blocks }
    }

    pub fn inverse(&self) -> Self {
        let n = self.perm.len();
        let mut perm = vec![0; n];
        let mut blocks = vec![Matrix2::zeros(); n];
        for i in 0..n {
            perm[self.perm[i]] = i;
            blocks[self.perm[i]] = self.blocks[i].adjoint();
        }
        OneParticleMap { perm, blocks }
    }

    /// Applies u to a one-particle vector.
    pub fn apply(&self, f: &ModeAmplitude) -> ModeAmplitude {
        let mut out = ModeAmplitude::zeros(f.len());
        for i in 0..self.perm.len() {
            let j = self.perm[i];
            for lam in 0..2 {
                for mu in 0..2 {
                    out.values[2 * j + lam] += self.blocks[i][(lam, mu)] * f.values[2 * i + mu];
                }
            }
        }
        out
    }
}

/// Γ(u): the multiplicative lift of a one-particle unitary to Fock space.
pub fn gamma_functor(basis: &FockBasis, u: &OneParticleMap) -> Result<OperatorMatrix> {
    u.validate(basis.grid())?;
    let n_k = basis.grid().n_kpoints();
    let mut trip = Vec::new();
    let mut target = vec![0u8; basis.n_modes()];
    for s in 0..basis.len() {
        let occ = basis.state(s);
        // Local expansions for every occupied k-point.
        let mut factors: Vec<(usize, Vec<(u8, u8, C64)>)> = Vec::new();
        for i in 0..n_k {
            let (n1, n2) = (occ[2 * i], occ[2 * i + 1]);
            if n1 + n2 == 0 {
                continue;
            }
            factors.push((u.perm[i], local_expansion(&u.blocks[i], n1, n2)));
        }
        target.iter_mut().for_each(|x| *x = 0);
        expand_product(basis, &factors, 0, C64::new(1.0, 0.0), &mut target, s, &mut trip);
    }
    Ok(OperatorMatrix::from_triplets(basis.len(), trip))
}

/// Cartesian product over the occupied k-points' local expansions.
fn expand_product(
    basis: &FockBasis,
    factors: &[(usize, Vec<(u8, u8, C64)>)],
    depth: usize,
    amp: C64,
    target: &mut [u8],
    source: usize,
    trip: &mut Vec<(usize, usize, C64)>,
) {
    if depth == factors.len() {
        let t = basis.ordinal(target).expect("Γ(u) preserves total occupation");
        trip.push((t, source, amp));
        return;
    }
    let (kp, opts) = &factors[depth];
    for &(a, c, x) in opts {
        target[2 * kp] += a;
        target[2 * kp + 1] += c;
        expand_product(basis, factors, depth + 1, amp * x, target, source, trip);
        target[2 * kp] -= a;
        target[2 * kp + 1] -= c;
    }
}

/// Expands (B₁₁b₁† + B₂₁b₂†)^{n1} (B₁₂b₁† + B₂₂b₂†)^{n2} |0⟩ / √(n1! n2!) into
/// normalized two-mode occupation states (a, c).
fn local_expansion(b: &Matrix2<C64>, n1: u8, n2: u8) -> Vec<(u8, u8, C64)> {
    let total = (n1 + n2) as usize;
    // poly[a] = coefficient of b1†^a b2†^(total - a)
    let mut poly = vec![C64::new(0.0, 0.0); total + 1];
    poly[0] = C64::new(1.0, 0.0);
    let mut degree = 0usize;
    let multiply = |poly: &mut Vec<C64>, degree: &mut usize, x: C64, y: C64| {
        // multiply by (x b1 + y b2)
        let mut next = vec![C64::new(0.0, 0.0); total + 1];
        for a in 0..=*degree {
            next[a + 1] += poly[a] * x;
            next[a] += poly[a] * y;
        }
        *poly = next;
        *degree += 1;
    };
    for _ in 0..n1 {
        multiply(&mut poly, &mut degree, b[(0, 0)], b[(1, 0)]);
    }
    for _ in 0..n2 {
        multiply(&mut poly, &mut degree, b[(0, 1)], b[(1, 1)]);
    }
    let norm = 1.0 / (factorial(n1 as usize) * factorial(n2 as usize)).sqrt();
    (0..=total)
        .filter(|&a| poly[a] != C64::new(0.0, 0.0))
        .map(|a| {
            let c = total - a;
            let amp = poly[a] * norm * (factorial(a) * factorial(c)).sqrt();
            (a as u8, c as u8, amp)
        })
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}
