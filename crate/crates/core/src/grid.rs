//! Photon momentum grids.
//!
//! A [`ModeGrid`] is a finite set of momentum nodes, each carrying a
//! quadrature weight (the momentum-space cell volume) and two helicity
//! modes. Symmetry tags are only attached after the corresponding map
//! has been verified to permute the nodes exactly with equal weights.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when matching transformed nodes to grid nodes.
const NODE_MATCH_TOL: f64 = 1e-9;

/// One photon mode: a momentum node and a helicity in {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: Vector3<f64>,
    pub helicity: u8,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryTag {
    /// k -> -k
    Inversion,
    /// rotation by 2π/n about the grid axis
    Azimuthal(usize),
    /// reflection through the plane spanned by the axis and the first frame vector;
    /// for axis = ẑ this is (k1, k2, k3) -> (k1, -k2, k3)
    ReflectionK2,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeGrid {
    /// Modes in (k, 1), (k, 2) pairs.
    modes: Vec<Mode>,
    symmetry_tags: Vec<SymmetryTag>,
    axis: Vector3<f64>,
    /// Second frame vector: reflections flip this component.
    frame_v: Vector3<f64>,
}

impl ModeGrid {
    /// Builds a grid from explicit nodes. Symmetry tags are detected
    /// (inversion and the k2-reflection about `axis`).
    pub fn from_points(points: &[(Vector3<f64>, f64)], axis: Vector3<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one node".into()));
        }
        let axis = unit(axis)?;
        let (_, frame_v) = frame_for(&axis);
        let mut modes = Vec::with_capacity(2 * points.len());
        for (i, (k, w)) in points.iter().enumerate() {
            if !(k.norm() > 0.0) || !k.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidGrid(format!("node {i} has |k| = 0 or is not finite")));
            }
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGrid(format!("node {i} has non-positive weight")));
            }
            for helicity in [1, 2] {
                modes.push(Mode { k: *k, helicity, weight: *w });
            }
        }
        let mut grid = ModeGrid { modes, symmetry_tags: Vec::new(), axis, frame_v };
        for tag in [SymmetryTag::Inversion, SymmetryTag::ReflectionK2] {
            if grid.kpoint_permutation(&grid.tag_matrix(tag)).is_ok() {
                grid.symmetry_tags.push(tag);
            }
        }
        Ok(grid)
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_kpoints(&self) -> usize {
        self.modes.len() / 2
    }

    /// Momentum of k-point `i` (modes `2i` and `2i + 1`).
    pub fn kpoint(&self, i: usize) -> Vector3<f64> {
        self.modes[2 * i].k
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.modes[2 * i].weight
    }

    pub fn kpoints(&self) -> impl Iterator<Item = (Vector3<f64>, f64)> + '_ {
        self.modes.iter().step_by(2).map(|m| (m.k, m.weight))
    }

    pub fn axis(&self) -> Vector3<f64> {
        self.axis
    }

    pub fn symmetry_tags(&self) -> &[SymmetryTag] {
        &self.symmetry_tags
    }

    pub fn has_tag(&self, tag: SymmetryTag) -> bool {
        self.symmetry_tags.contains(&tag)
    }

    pub fn azimuthal_order(&self) -> Option<usize> {
        self.symmetry_tags.iter().find_map(|t| match t {
            SymmetryTag::Azimuthal(n) => Some(*n),
            _ => None,
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.kpoints().map(|(_, w)| w).sum()
    }

    pub fn min_radius(&self) -> f64 {
        self.kpoints().map(|(k, _)| k.norm()).fold(f64::INFINITY, f64::min)
    }

    /// The orthogonal 3×3 map belonging to a symmetry tag.
    pub fn tag_matrix(&self, tag: SymmetryTag) -> Matrix3<f64> {
        match tag {
            SymmetryTag::Inversion => -Matrix3::identity(),
            SymmetryTag::Azimuthal(n) => rotation_about(&self.axis, 2.0 * PI / n as f64),
            SymmetryTag::ReflectionK2 => Matrix3::identity() - 2.0 * self.frame_v * self.frame_v.transpose(),
        }
    }

    /// Returns `perm` with `k[perm[i]] = T k[i]` and equal weights, or an
    /// error if `T` does not map the node set onto itself.
    pub fn kpoint_permutation(&self, t: &Matrix3<f64>) -> Result<Vec<usize>> {
        let n = self.n_kpoints();
        let scale = self.kpoints().map(|(k, _)| k.norm()).fold(0.0, f64::max);
        let mut perm = Vec::with_capacity(n);
        let mut used = vec![false; n];
        for i in 0..n {
            let target = t * self.kpoint(i);
            let found = (0..n).find(|&j| {
                !used[j]
                    && (self.kpoint(j) - target).norm() <= NODE_MATCH_TOL * scale
                    && (self.weight(j) - self.weight(i)).abs() <= 1e-12 * self.weight(i).max(self.weight(j))
            });
            match found {
                Some(j) => {
                    used[j] = true;
                    perm.push(j);
                }
                None => return Err(Error::SymmetryNotExact(format!("node {i} has no weight-matched image"))),
            }
        }
        Ok(perm)
    }

    /// Generates the finite group spanned by the declared symmetry tags.
    pub fn symmetry_group(&self) -> Vec<Matrix3<f64>> {
        let generators: Vec<Matrix3<f64>> = self.symmetry_tags.iter().map(|&t| self.tag_matrix(t)).collect();
        let mut group = vec![Matrix3::identity()];
        let mut frontier = group.clone();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for g in &frontier {
                for h in &generators {
                    let c = h * g;
                    if !group.iter().any(|x| (x - c).abs().max() < 1e-9) {
                        group.push(c);
                        next.push(c);
                    }
                }
            }
            frontier = next;
        }
        group
    }
}

/// Spherical product grid around `axis`: midpoint nodes in radius, polar
/// angle and azimuth, weights equal to the exact cell volumes, so that the
/// weights sum to the shell volume (4π/3)(k_max³ − k_min³).
pub fn build_cylindrical_grid(
    n_radial: usize,
    n_polar: usize,
    n_azimuthal: usize,
    k_min: f64,
    k_max: f64,
    axis: Vector3<f64>,
) -> Result<ModeGrid> {
    if n_radial == 0 || n_polar == 0 || n_azimuthal == 0 {
        return Err(Error::InvalidGrid("node counts must be at least 1".into()));
    }
    if !n_azimuthal.is_multiple_of(2) {
        return Err(Error::InvalidGrid(format!(
            "n_azimuthal = {n_azimuthal} is odd; inversion cannot close the node set"
        )));
    }
    if !(k_min > 0.0 && k_min < k_max && k_max.is_finite()) {
        return Err(Error::InvalidGrid(format!("need 0 < k_min < k_max, got k_min = {k_min}, k_max = {k_max}")));
    }
    let axis = unit(axis)?;
    let (frame_u, frame_v) = frame_for(&axis);

    let dr = (k_max - k_min) / n_radial as f64;
    let dtheta = PI / n_polar as f64;
    let dphi = 2.0 * PI / n_azimuthal as f64;

    let mut points = Vec::with_capacity(n_radial * n_polar * n_azimuthal);
    for a in 0..n_radial {
        let (r0, r1) = (k_min + a as f64 * dr, k_min + (a + 1) as f64 * dr);
        let r = 0.5 * (r0 + r1);
        let radial = (r1.powi(3) - r0.powi(3)) / 3.0;
        for b in 0..n_polar {
            let (t0, t1) = (b as f64 * dtheta, (b + 1) as f64 * dtheta);
            let theta = 0.5 * (t0 + t1);
            let polar = t0.cos() - t1.cos();
            for c in 0..n_azimuthal {
                let phi = (c as f64 + 0.5) * dphi;
                let k =
                    r * (theta.sin() * phi.cos() * frame_u + theta.sin() * phi.sin() * frame_v + theta.cos() * axis);
                points.push((k, radial * polar * dphi));
            }
        }
    }

    let mut grid = ModeGrid::from_points(&points, axis)?;
    grid.symmetry_tags.clear();
    for tag in [SymmetryTag::Inversion, SymmetryTag::Azimuthal(n_azimuthal), SymmetryTag::ReflectionK2] {
        grid.kpoint_permutation(&grid.tag_matrix(tag)).map_err(|_| Error::SymmetryNotExact(format!("{tag:?}")))?;
        grid.symmetry_tags.push(tag);
    }
    Ok(grid)
}

/// Rotation by `angle` (right-handed) about the unit vector `axis`.
pub fn rotation_about(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    let n = axis.normalize();
    let (s, c) = angle.sin_cos();
    let cross = Matrix3::new(0.0, -n.z, n.y, n.z, 0.0, -n.x, -n.y, n.x, 0.0);
    Matrix3::identity() * c + cross * s + n * n.transpose() * (1.0 - c)
}

fn unit(v: Vector3<f64>) -> Result<Vector3<f64>> {
    let n = v.norm();
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidGrid("axis must be a non-zero vector".into()));
    }
    Ok(v / n)
}

/// Right-handed frame (u, v, axis); for axis = ẑ this is (x̂, ŷ, ẑ).
fn frame_for(axis: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let seed = if axis.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let u = (seed - axis * axis.dot(&seed)).normalize();
    let v = axis.cross(&u);
    (u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_grid_has_equal_weights() {
        let g = build_cylindrical_grid(1, 1, 4, 0.5, 1.5, Vector3::z()).unwrap();
        assert_eq!(g.n_kpoints(), 4);
        assert_eq!(g.n_modes(), 8);
        let w0 = g.weight(0);
        for (k, w) in g.kpoints() {
            assert!((w - w0).abs() < 1e-14);
            assert!((k.norm() - 1.0).abs() < 1e-14);
            assert!(k.z.abs() < 1e-14);
        }
    }

    #[test]
    fn inversion_is_self_inverse_permutation() {
        let g = build_cylindrical_grid(2, 3, 8, 0.2, 2.0, Vector3::z()).unwrap();
        let perm = g.kpoint_permutation(&g.tag_matrix(SymmetryTag::Inversion)).unwrap();
        for (i, &j) in perm.iter().enumerate() {
            assert_eq!(perm[j], i);
            assert_ne!(i, j);
        }
    }

    #[test]
    fn shell_volume_matches_direct_integral() {
        let g = build_cylindrical_grid(2, 3, 8, 0.2, 2.0, Vector3::z()).unwrap();
        assert_eq!(g.n_kpoints(), 48);
        // Oracle: midpoint-free radial integral of 4π r² over [0.2, 2.0]
        // by composite Simpson on 2000 panels.
        let n = 2000;
        let (a, b) = (0.2_f64, 2.0_f64);
        let h = (b - a) / n as f64;
        let f = |r: f64| 4.0 * PI * r * r;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        let integral = s * h / 3.0;
        assert!((g.total_weight() - integral).abs() < 1e-9 * integral);
    }

    #[test]
    fn rejects_odd_azimuth_and_bad_radii() {
        assert!(build_cylindrical_grid(1, 1, 3, 0.5, 1.5, Vector3::z()).is_err());
        assert!(build_cylindrical_grid(1, 1, 4, 0.0, 1.5, Vector3::z()).is_err());
        assert!(build_cylindrical_grid(1, 1, 4, 2.0, 1.5, Vector3::z()).is_err());
        assert!(build_cylindrical_grid(0, 1, 4, 0.5, 1.5, Vector3::z()).is_err());
    }

    #[test]
    fn declared_tags_permute_nodes_for_tilted_axis() {
        let axis = Vector3::new(1.0, 1.0, 0.5);
        let g = build_cylindrical_grid(2, 2, 6, 0.3, 1.1, axis).unwrap();
        for &tag in g.symmetry_tags() {
            assert!(g.kpoint_permutation(&g.tag_matrix(tag)).is_ok(), "{tag:?}");
        }
        assert_eq!(g.azimuthal_order(), Some(6));
    }

    #[test]
    fn symmetry_group_of_ring() {
        let g = build_cylindrical_grid(1, 1, 4, 0.5, 1.5, Vector3::z()).unwrap();
        let group = g.symmetry_group();
        // D4 rotations/reflections about ẑ times inversion
        assert_eq!(group.len(), 16);
        for t in &group {
            assert!(g.kpoint_permutation(t).is_ok());
        }
    }

    #[test]
    fn single_point_grid_has_no_inversion() {
        let g = ModeGrid::from_points(&[(Vector3::new(0.3, 0.4, 0.5), 1.0)], Vector3::z()).unwrap();
        assert!(!g.has_tag(SymmetryTag::Inversion));
        assert!(ModeGrid::from_points(&[(Vector3::zeros(), 1.0)], Vector3::z()).is_err());
    }
}
