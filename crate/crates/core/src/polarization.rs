//! Transverse polarization frames e⁽¹⁾(k), e⁽²⁾(k) on the grid nodes.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ModeGrid;

const ORTHONORMAL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PolarizationKind {
    /// e⁽¹⁾ = (k₂, −k₁, 0)/√(k₁² + k₂²)
    Xy,
    /// e⁽¹⁾ = k ∧ j / |k ∧ j| for a fixed unit vector j
    Axis([f64; 3]),
    /// supplied explicitly
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationField {
    pub kind: PolarizationKind,
    /// Per k-point: [e⁽¹⁾, e⁽²⁾].
    pub vectors: Vec<[Vector3<f64>; 2]>,
}

pub fn make_polarization(kind: PolarizationKind, grid: &ModeGrid) -> Result<PolarizationField> {
    let j = match kind {
        PolarizationKind::Xy => Vector3::z(),
        PolarizationKind::Axis(a) => {
            let v = Vector3::from(a);
            if !(v.norm() > 0.0) {
                return Err(Error::InvalidModel("polarization axis must be non-zero".into()));
            }
            v.normalize()
        }
        PolarizationKind::Custom => {
            return Err(Error::InvalidModel("custom polarizations are built with PolarizationField::custom".into()))
        }
    };
    let mut vectors = Vec::with_capacity(grid.n_kpoints());
    for i in 0..grid.n_kpoints() {
        let k = grid.kpoint(i);
        let c = k.cross(&j);
        if c.norm() <= 1e-12 * k.norm() {
            return Err(Error::SingularPolarization { index: i, k0: k.x, k1: k.y, k2: k.z });
        }
        let e1 = c.normalize();
        let e2 = k.normalize().cross(&e1);
        vectors.push([e1, e2]);
    }
    let field = PolarizationField { kind, vectors };
    field.validate(grid)?;
    Ok(field)
}

impl PolarizationField {
    pub fn custom(vectors: Vec<[Vector3<f64>; 2]>, grid: &ModeGrid) -> Result<Self> {
        let field = PolarizationField { kind: PolarizationKind::Custom, vectors };
        field.validate(grid)?;
        Ok(field)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Worst deviation from transversality and orthonormality at node `i`.
    pub fn node_residual(&self, grid: &ModeGrid, i: usize) -> f64 {
        let k = grid.kpoint(i).normalize();
        let [e1, e2] = self.vectors[i];
        [
            k.dot(&e1).abs(),
            k.dot(&e2).abs(),
            (e1.norm_squared() - 1.0).abs(),
            (e2.norm_squared() - 1.0).abs(),
            e1.dot(&e2).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn validate(&self, grid: &ModeGrid) -> Result<()> {
        if self.vectors.len() != grid.n_kpoints() {
            return Err(Error::DimensionMismatch { expected: grid.n_kpoints(), got: self.vectors.len() });
        }
        for i in 0..self.vectors.len() {
            let residual = self.node_residual(grid, i);
            if !(residual <= ORTHONORMAL_TOL) {
                return Err(Error::NotTransverse { index: i, residual });
            }
        }
        Ok(())
    }

    /// Rotates each frame by θᵢ in its plane, then negates e⁽²⁾ where
    /// `flip[i]` is set. Produces another admissible polarization.
    pub fn rotated(&self, theta: &[f64], flip: &[bool]) -> Self {
        let vectors = self
            .vectors
            .iter()
            .enumerate()
            .map(|(i, [e1, e2])| {
                let (s, c) = theta[i].sin_cos();
                let f1 = c * e1 + s * e2;
                let f2 = -s * e1 + c * e2;
                [f1, if flip[i] { -f2 } else { f2 }]
            })
            .collect();
        PolarizationField { kind: PolarizationKind::Custom, vectors }
    }

    /// e′(k) = Tᵀ e(T k), using `perm` with k[perm[i]] = T k[i].
    pub fn transported(&self, t: &Matrix3<f64>, perm: &[usize]) -> Self {
        let tt = t.transpose();
        let vectors = (0..self.vectors.len())
            .map(|i| {
                let [e1, e2] = self.vectors[perm[i]];
                [tt * e1, tt * e2]
            })
            .collect();
        PolarizationField { kind: PolarizationKind::Custom, vectors }
    }

    /// Component j of e⁽λ⁾ at node i (λ ∈ {1, 2}).
    pub fn component(&self, i: usize, helicity: u8, j: usize) -> f64 {
        self.vectors[i][(helicity - 1) as usize][j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_cylindrical_grid;

    fn grid_of(points: &[[f64; 3]]) -> ModeGrid {
        let pts: Vec<_> = points.iter().map(|p| (Vector3::from(*p), 1.0)).collect();
        ModeGrid::from_points(&pts, Vector3::z()).unwrap()
    }

    #[test]
    fn xy_kind_at_x_axis() {
        let g = grid_of(&[[1.0, 0.0, 0.0]]);
        let e = make_polarization(PolarizationKind::Xy, &g).unwrap();
        assert!((e.vectors[0][0] - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
        assert!((e.vectors[0][1] - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn axis_kind_cross_product() {
        let g = grid_of(&[[1.0, 0.0, 1.0]]);
        let e = make_polarization(PolarizationKind::Axis([0.0, 0.0, 1.0]), &g).unwrap();
        assert!((e.vectors[0][0] - Vector3::new(0.0, -1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn orthonormal_on_cylindrical_grid() {
        let g = build_cylindrical_grid(2, 3, 8, 0.2, 2.0, Vector3::z()).unwrap();
        for kind in [PolarizationKind::Xy, PolarizationKind::Axis([1.0, 0.0, 0.0])] {
            let e = make_polarization(kind, &g).unwrap();
            for i in 0..g.n_kpoints() {
                assert!(e.node_residual(&g, i) <= 1e-12);
                let k = g.kpoint(i).normalize();
                let [e1, e2] = e.vectors[i];
                assert!((k.cross(&e1) - e2).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_node_rejected() {
        let g = grid_of(&[[1.0, 0.0, 0.0], [0.0, 0.0, 2.0]]);
        let err = make_polarization(PolarizationKind::Xy, &g).unwrap_err();
        assert!(matches!(err, Error::SingularPolarization { index: 1, .. }));
    }

    #[test]
    fn rotation_and_flip_stay_admissible() {
        let g = build_cylindrical_grid(1, 3, 4, 0.5, 1.5, Vector3::z()).unwrap();
        let e = make_polarization(PolarizationKind::Xy, &g).unwrap();
        let n = g.n_kpoints();
        let theta: Vec<f64> = (0..n).map(|i| 0.37 * i as f64).collect();
        let flip: Vec<bool> = (0..n).map(|i| i % 3 == 0).collect();
        e.rotated(&theta, &flip).validate(&g).unwrap();
        let bad = PolarizationField::custom(vec![[Vector3::x(), Vector3::y()]; n], &g);
        assert!(matches!(bad, Err(Error::NotTransverse { .. })));
    }
}
