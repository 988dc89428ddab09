//! 4×4 Dirac matrices in the standard representation and the spinor
//! rotations that implement orthogonal maps of momentum space.

use nalgebra::{Matrix2, Matrix3, Matrix4};

use crate::error::{Error, Result};
use crate::operator::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct DiracAlgebra {
    pub alpha: [Matrix4<C64>; 3],
    pub beta: Matrix4<C64>,
    pub gamma5: Matrix4<C64>,
    /// S = (i/4) α × α, i.e. S_j = (i/2) α_k α_l for cyclic (j, k, l).
    pub spin: [Matrix4<C64>; 3],
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn pauli() -> [Matrix2<C64>; 3] {
    let (o, z, i) = (c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
    [Matrix2::new(z, o, o, z), Matrix2::new(z, -i, i, z), Matrix2::new(o, z, z, -o)]
}

fn blocks(tl: &Matrix2<C64>, tr: &Matrix2<C64>, bl: &Matrix2<C64>, br: &Matrix2<C64>) -> Matrix4<C64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(tl);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(tr);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(bl);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(br);
    m
}

pub fn dirac_matrices() -> DiracAlgebra {
    let s = pauli();
    let z = Matrix2::zeros();
    let id = Matrix2::identity();
    let alpha = [0, 1, 2].map(|j| blocks(&z, &s[j], &s[j], &z));
    let beta = blocks(&id, &z, &z, &(-id));
    let gamma5 = alpha[0] * alpha[1] * alpha[2] * c(0.0, -1.0);
    let half_i = c(0.0, 0.5);
    let spin = [alpha[1] * alpha[2] * half_i, alpha[2] * alpha[0] * half_i, alpha[0] * alpha[1] * half_i];
    DiracAlgebra { alpha, beta, gamma5, spin }
}

impl DiracAlgebra {
    /// α·p + Mβ
    pub fn free_symbol(&self, p: [f64; 3], mass: f64) -> Matrix4<C64> {
        self.alpha[0] * c(p[0], 0.0)
            + self.alpha[1] * c(p[1], 0.0)
            + self.alpha[2] * c(p[2], 0.0)
            + self.beta * c(mass, 0.0)
    }

    /// Σ_j = diag(σ_j, σ_j)
    pub fn sigma(&self, j: usize) -> Matrix4<C64> {
        let s = pauli();
        blocks(&s[j], &Matrix2::zeros(), &Matrix2::zeros(), &s[j])
    }

    /// exp(iφ S₃), diagonal in the standard representation.
    pub fn spin_rotation_z(&self, phi: f64) -> Matrix4<C64> {
        // S₃ = −Σ₃/2 = diag(−½, ½, −½, ½)
        let d = [-0.5, 0.5, -0.5, 0.5].map(|s| C64::from_polar(1.0, phi * s));
        Matrix4::from_diagonal(&nalgebra::Vector4::new(d[0], d[1], d[2], d[3]))
    }

    /// exp(iφ n·S) = cos(φ/2) − i sin(φ/2) n·Σ for a unit vector n. It
    /// implements the momentum-space rotation by −φ about n.
    pub fn spin_rotation(&self, axis: &nalgebra::Vector3<f64>, phi: f64) -> Matrix4<C64> {
        let n = axis.normalize();
        let (s, co) = (0.5 * phi).sin_cos();
        let mut u = Matrix4::identity() * c(co, 0.0);
        for j in 0..3 {
            u -= self.sigma(j) * c(0.0, s * n[j]);
        }
        u
    }

    /// τ = α₁α₃β: commutes with α₁, α₃ and β, anticommutes with α₂ and S₃.
    /// It is the spinor part of the reflection k₂ → −k₂.
    pub fn reflection_k2_spinor(&self) -> Matrix4<C64> {
        self.alpha[0] * self.alpha[2] * self.beta
    }

    /// Largest entry of the defects of the anticommutation relations.
    pub fn clifford_residual(&self) -> f64 {
        let id = Matrix4::<C64>::identity();
        let mut worst = 0.0f64;
        for j in 0..3 {
            for l in 0..3 {
                let ac = self.alpha[j] * self.alpha[l] + self.alpha[l] * self.alpha[j];
                let expected = if j == l { id * c(2.0, 0.0) } else { Matrix4::zeros() };
                worst = worst.max(max_abs4(&(ac - expected)));
            }
            worst = worst.max(max_abs4(&(self.alpha[j] * self.beta + self.beta * self.alpha[j])));
        }
        worst.max(max_abs4(&(self.beta * self.beta - id)))
    }

    /// Spinor unitary u with u α_j u† = Σ_l T_jl α_l and u β u† = β for an
    /// orthogonal T. Proper T give a spin-½ rotation; improper T = −T′
    /// give β·u(T′).
    pub fn spinor_for_orthogonal(&self, t: &Matrix3<f64>) -> Result<Matrix4<C64>> {
        let ortho = (t.transpose() * t - Matrix3::identity()).abs().max();
        if ortho > 1e-10 {
            return Err(Error::InvalidModel(format!("map is not orthogonal ({ortho:.2e})")));
        }
        let det = t.determinant();
        let (proper, parity) = if det > 0.0 { (*t, false) } else { (-t, true) };
        let q = quaternion_from_rotation(&proper);
        for sign in [1.0, -1.0] {
            let mut u = Matrix4::identity() * c(q[0], 0.0);
            for j in 0..3 {
                u -= self.sigma(j) * c(0.0, sign * q[j + 1]);
            }
            if parity {
                u = self.beta * u;
            }
            if self.spinor_residual(&u, t) < 1e-10 {
                return Ok(u);
            }
        }
        Err(Error::InvalidModel("no spinor rotation satisfies the conjugation identities".into()))
    }

    /// max over j of ‖u α_j u† − Σ_l T_jl α_l‖ together with ‖u β u† − β‖.
    pub fn spinor_residual(&self, u: &Matrix4<C64>, t: &Matrix3<f64>) -> f64 {
        let ud = u.adjoint();
        let mut worst = max_abs4(&(u * self.beta * ud - self.beta));
        for j in 0..3 {
            let mut rhs = Matrix4::zeros();
            for l in 0..3 {
                rhs += self.alpha[l] * c(t[(j, l)], 0.0);
            }
            worst = worst.max(max_abs4(&(u * self.alpha[j] * ud - rhs)));
        }
        worst
    }
}

pub fn max_abs4(m: &Matrix4<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Unit quaternion (w, x, y, z) of a proper rotation matrix.
fn quaternion_from_rotation(r: &Matrix3<f64>) -> [f64; 4] {
    let tr = r.trace();
    let q = if tr > 0.0 {
        let s = (tr + 1.0).sqrt() * 2.0;
        [0.25 * s, (r[(2, 1)] - r[(1, 2)]) / s, (r[(0, 2)] - r[(2, 0)]) / s, (r[(1, 0)] - r[(0, 1)]) / s]
    } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
        let s = (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt() * 2.0;
        [(r[(2, 1)] - r[(1, 2)]) / s, 0.25 * s, (r[(0, 1)] + r[(1, 0)]) / s, (r[(0, 2)] + r[(2, 0)]) / s]
    } else if r[(1, 1)] > r[(2, 2)] {
        let s = (1.0 + r[(1, 1)] - r[(0, 0)] - r[(2, 2)]).sqrt() * 2.0;
        [(r[(0, 2)] - r[(2, 0)]) / s, (r[(0, 1)] + r[(1, 0)]) / s, 0.25 * s, (r[(1, 2)] + r[(2, 1)]) / s]
    } else {
        let s = (1.0 + r[(2, 2)] - r[(0, 0)] - r[(1, 1)]).sqrt() * 2.0;
        [(r[(1, 0)] - r[(0, 1)]) / s, (r[(0, 2)] + r[(2, 0)]) / s, (r[(1, 2)] + r[(2, 1)]) / s, 0.25 * s]
    };
    let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
    q.map(|x| x / n)
}
