//! Occupation-number basis of the photon Fock space truncated at a total
//! photon number `n_max`.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModeGrid;

/// Default cap on the number of Fock states a basis may hold.
pub const DEFAULT_BASIS_BUDGET: usize = 2_000_000;

/// States are ordered by total occupation, then lexicographically
/// (ascending) by occupation vector. Ordinal 0 is the vacuum.
#[derive(Debug, Clone)]
pub struct FockBasis {
    grid: ModeGrid,
    n_max: usize,
    n_modes: usize,
    /// Row-major occupation table, `n_modes` entries per state.
    occupations: Vec<u8>,
    totals: Vec<u8>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockBasis {
    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn len(&self) -> usize {
        self.totals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.totals.is_empty()
    }

    pub fn state(&self, ordinal: usize) -> &[u8] {
        &self.occupations[ordinal * self.n_modes..(ordinal + 1) * self.n_modes]
    }

    pub fn total(&self, ordinal: usize) -> usize {
        self.totals[ordinal] as usize
    }

    pub fn ordinal(&self, occupation: &[u8]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn states(&self) -> impl Iterator<Item = &[u8]> {
        self.occupations.chunks(self.n_modes.max(1)).take(self.len())
    }
}

/// Number of states with total occupation ≤ n_max over `n_modes` modes,
/// i.e. Σ_n C(n_modes + n − 1, n) = C(n_modes + n_max, n_max).
pub fn basis_size(n_modes: usize, n_max: usize) -> u128 {
    let mut c: u128 = 1;
    for i in 1..=n_max as u128 {
        c = c * (n_modes as u128 + i) / i;
    }
    c
}

pub fn build_fock_basis(grid: &ModeGrid, n_max: usize) -> Result<FockBasis> {
    build_fock_basis_with_budget(grid, n_max, DEFAULT_BASIS_BUDGET)
}

pub fn build_fock_basis_with_budget(grid: &ModeGrid, n_max: usize, budget: usize) -> Result<FockBasis> {
    let n_modes = grid.n_modes();
    let requested = basis_size(n_modes, n_max);
    if requested > budget as u128 || n_max > u8::MAX as usize {
        return Err(Error::BudgetExceeded { requested, budget });
    }
    let count = requested as usize;
    let mut occupations = Vec::with_capacity(count * n_modes);
    let mut totals = Vec::with_capacity(count);
    let mut current = vec![0u8; n_modes];
    for n in 0..=n_max {
        push_compositions(&mut current, 0, n, &mut occupations, &mut totals, n as u8);
    }
    let index =
        occupations.chunks(n_modes.max(1)).take(totals.len()).enumerate().map(|(i, s)| (s.to_vec(), i)).collect();
    Ok(FockBasis { grid: grid.clone(), n_max, n_modes, occupations, totals, index })
}

/// Appends all occupation vectors summing to `remaining` in the slots from
/// `pos` on, in ascending lexicographic order.
fn push_compositions(
    current: &mut [u8],
    pos: usize,
    remaining: usize,
    out: &mut Vec<u8>,
    totals: &mut Vec<u8>,
    total: u8,
) {
    let n = current.len();
    if pos + 1 >= n {
        if n > 0 {
            current[n - 1] = remaining as u8;
        } else if remaining > 0 {
            return;
        }
        out.extend_from_slice(current);
        totals.push(total);
        return;
    }
    for v in 0..=remaining {
        current[pos] = v as u8;
        push_compositions(current, pos + 1, remaining - v, out, totals, total);
    }
    current[pos] = 0;
}

/// A one-particle vector: one complex amplitude per mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitude {
    pub values: Vec<Complex64>,
}

impl ModeAmplitude {
    pub fn new(values: Vec<Complex64>) -> Self {
        ModeAmplitude { values }
    }

    pub fn from_real(values: &[f64]) -> Self {
        ModeAmplitude { values: values.iter().map(|&x| Complex64::new(x, 0.0)).collect() }
    }

    pub fn zeros(n: usize) -> Self {
        ModeAmplitude { values: vec![Complex64::new(0.0, 0.0); n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// ⟨self, other⟩, antilinear in `self`.
    pub fn inner(&self, other: &ModeAmplitude) -> Complex64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|a| a.norm_sqr()).sum()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.values.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.values.len() });
        }
        if !self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::InvalidModel("mode amplitude is not finite".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_cylindrical_grid;
    use nalgebra::Vector3;
    use std::collections::HashSet;

    fn one_point() -> ModeGrid {
        ModeGrid::from_points(&[(Vector3::new(0.3, 0.4, 0.5), 1.0)], Vector3::z()).unwrap()
    }

    #[test]
    fn single_kpoint_nmax_two_has_six_states() {
        let b = build_fock_basis(&one_point(), 2).unwrap();
        assert_eq!(b.len(), 6);
        let states: Vec<Vec<u8>> = b.states().map(|s| s.to_vec()).collect();
        assert_eq!(states, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![0, 2], vec![1, 1], vec![2, 0]]);
    }

    #[test]
    fn nmax_zero_is_vacuum_only() {
        let g = build_cylindrical_grid(2, 3, 8, 0.2, 2.0, Vector3::z()).unwrap();
        let b = build_fock_basis(&g, 0).unwrap();
        assert_eq!(b.len(), 1);
        assert!(b.state(0).iter().all(|&n| n == 0));
    }

    #[test]
    fn twelve_kpoints_nmax_two_matches_enumeration() {
        // Oracle: brute-force count over all occupation vectors of 24 modes
        // with at most two photons (pairs i <= j plus singles plus vacuum).
        let modes = 24usize;
        let mut seen = HashSet::new();
        seen.insert(vec![0u8; modes]);
        for i in 0..modes {
            let mut v = vec![0u8; modes];
            v[i] += 1;
            seen.insert(v.clone());
            for j in 0..modes {
                let mut w = v.clone();
                w[j] += 1;
                seen.insert(w);
            }
        }
        assert_eq!(seen.len(), 325);

        let g = build_cylindrical_grid(1, 3, 4, 0.5, 1.5, Vector3::z()).unwrap();
        assert_eq!(g.n_kpoints(), 12);
        let b = build_fock_basis(&g, 2).unwrap();
        assert_eq!(b.len(), 325);
        for s in b.states() {
            assert!(seen.contains(s));
        }
    }

    #[test]
    fn index_is_bijection_and_graded() {
        let g = build_cylindrical_grid(1, 1, 4, 0.5, 1.5, Vector3::z()).unwrap();
        let b = build_fock_basis(&g, 3).unwrap();
        assert_eq!(b.len(), 165);
        for i in 0..b.len() {
            assert_eq!(b.ordinal(b.state(i)), Some(i));
            if i > 0 {
                assert!(b.total(i) >= b.total(i - 1));
                if b.total(i) == b.total(i - 1) {
                    assert!(b.state(i) > b.state(i - 1));
                }
            }
        }
    }

    #[test]
    fn budget_rejects_large_basis() {
        let g = build_cylindrical_grid(2, 3, 8, 0.2, 2.0, Vector3::z()).unwrap();
        let err = build_fock_basis_with_budget(&g, 3, 10_000).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { .. }));
    }
}
