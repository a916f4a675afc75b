//! The three-level Λ system in the resonant (rotating-wave) approximation.
//!
//! States are ordered `|1⟩, |2⟩, |3⟩`: the two ground states `|1⟩`, `|3⟩`
//! and the shared excited state `|2⟩`. Frequencies are in units of `1/T`
//! with `ħ = 1`, so the Hamiltonian is
//!
//! ```text
//!         ⎡ 0    Ω_P   0  ⎤
//! H = ½ · ⎢ Ω_P  2Δ   Ω_S ⎥
//!         ⎣ 0    Ω_S   2δ ⎦
//! ```
//!
//! with `Δ` the one-photon detuning (relative to the pump) and `δ` the
//! two-photon detuning.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Real symmetric 3×3 matrix, row-major.
pub type Matrix3 = [[f64; 3]; 3];
pub type Vector3 = [f64; 3];

/// Instantaneous field parameters driving the Λ system.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldPoint {
    /// Pump Rabi frequency, couples `|1⟩–|2⟩`.
    pub omega_p: f64,
    /// Stokes Rabi frequency, couples `|3⟩–|2⟩`.
    pub omega_s: f64,
    /// One-photon detuning Δ.
    pub delta1: f64,
    /// Two-photon detuning δ.
    pub delta2: f64,
}

impl FieldPoint {
    pub fn new(omega_p: f64, omega_s: f64, delta1: f64, delta2: f64) -> Self {
        Self {
            omega_p,
            omega_s,
            delta1,
            delta2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.omega_p.is_finite()
            && self.omega_s.is_finite()
            && self.delta1.is_finite()
            && self.delta2.is_finite()
    }

    /// Hamiltonian matrix without validation; hot loops use this after the
    /// schedule has been checked once.
    #[inline]
    pub(crate) fn matrix(&self) -> Matrix3 {
        let p = 0.5 * self.omega_p;
        let s = 0.5 * self.omega_s;
        [[0.0, p, 0.0], [p, self.delta1, s], [0.0, s, self.delta2]]
    }
}

/// The Λ-system Hamiltonian at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hamiltonian3 {
    m: Matrix3,
}

impl Hamiltonian3 {
    pub fn matrix(&self) -> &Matrix3 {
        &self.m
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        frobenius(&self.m)
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    /// `H·v`.
    pub fn apply(&self, v: &Vector3) -> Vector3 {
        mat_vec(&self.m, v)
    }
}

pub fn build_hamiltonian(p: &FieldPoint) -> Result<Hamiltonian3> {
    if !p.is_finite() {
        return Err(invalid("field point", format!("non-finite entry in {p:?}")));
    }
    Ok(Hamiltonian3 { m: p.matrix() })
}

/// Ordered eigendecomposition `ω₋ ≤ ω₀ ≤ ω₊` with orthonormal real
/// eigenvectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSystem {
    /// `[ω₋, ω₀, ω₊]`.
    pub values: [f64; 3],
    /// `vectors[k]` is the eigenvector of `values[k]`.
    pub vectors: [Vector3; 3],
    /// Set when two eigenvalues are closer than the continuity threshold;
    /// the eigenvectors of the degenerate pair are then an arbitrary basis.
    pub near_degenerate: bool,
}

impl EigenSystem {
    pub fn omega_minus(&self) -> f64 {
        self.values[0]
    }
    pub fn omega_0(&self) -> f64 {
        self.values[1]
    }
    pub fn omega_plus(&self) -> f64 {
        self.values[2]
    }
    pub fn psi_minus(&self) -> &Vector3 {
        &self.vectors[0]
    }
    pub fn psi_0(&self) -> &Vector3 {
        &self.vectors[1]
    }
    pub fn psi_plus(&self) -> &Vector3 {
        &self.vectors[2]
    }

    /// `(ω₊ − ω₀) − (ω₀ − ω₋)`; zero for parallel eigenvalues.
    pub fn gap_asymmetry(&self) -> f64 {
        (self.values[2] - self.values[1]) - (self.values[1] - self.values[0])
    }

    /// Smallest gap between adjacent eigenvalues.
    pub fn min_gap(&self) -> f64 {
        (self.values[1] - self.values[0]).min(self.values[2] - self.values[1])
    }
}

/// Relative gap below which eigenvectors are flagged as discontinuous.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Below this value of `1 − r²` (the normalized cubic discriminant) the
/// trigonometric formula loses too many digits and Jacobi takes over.
const DISCRIMINANT_FLOOR: f64 = 1e-10;

pub fn eigensystem(h: &Hamiltonian3) -> EigenSystem {
    symmetric_eigen(&h.m)
}

/// Eigendecomposition of any real symmetric 3×3 matrix.
///
/// Eigenvalues come from the closed-form trigonometric solution of the
/// characteristic cubic; eigenvectors of the outer pair from cross products
/// of rows of `A − λI`, the middle one completes the right-handed frame.
/// Near a double root the cubic is ill-conditioned, so cyclic Jacobi is used.
pub fn symmetric_eigen(a: &Matrix3) -> EigenSystem {
    let scale = frobenius(a);
    if scale == 0.0 {
        return finish(
            [0.0; 3],
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            0.0,
        );
    }

    let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
    if off == 0.0 {
        return jacobi(a, scale);
    }
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    let d0 = a[0][0] - q;
    let d1 = a[1][1] - q;
    let d2 = a[2][2] - q;
    let p2 = d0 * d0 + d1 * d1 + d2 * d2 + 2.0 * off;
    let p = (p2 / 6.0).sqrt();
    if p <= f64::EPSILON * scale {
        return jacobi(a, scale);
    }

    let b = [
        [d0 / p, a[0][1] / p, a[0][2] / p],
        [a[1][0] / p, d1 / p, a[1][2] / p],
        [a[2][0] / p, a[2][1] / p, d2 / p],
    ];
    let r = (det(&b) / 2.0).clamp(-1.0, 1.0);
    if 1.0 - r * r < DISCRIMINANT_FLOOR {
        return jacobi(a, scale);
    }
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * PI / 3.0).cos();
    let mid = 3.0 * q - hi - lo;

    let (Some(v_lo), Some(v_hi)) = (null_vector(a, lo), null_vector(a, hi)) else {
        return jacobi(a, scale);
    };
    // Exact orthogonality by construction.
    let v_hi = normalize(sub(&v_hi, &scaled(&v_lo, dot(&v_hi, &v_lo))));
    let v_mid = cross(&v_hi, &v_lo);

    let mut values = [lo, mid, hi];
    values.sort_by(f64::total_cmp);
    finish(values, [v_lo, v_mid, v_hi], scale)
}

fn finish(values: [f64; 3], vectors: [Vector3; 3], scale: f64) -> EigenSystem {
    let gap = (values[1] - values[0]).min(values[2] - values[1]);
    EigenSystem {
        values,
        vectors: vectors.map(canonical_sign),
        near_degenerate: gap <= DEGENERACY_TOLERANCE * scale,
    }
}

/// Largest-magnitude component positive, so identical input always gives
/// identical output.
fn canonical_sign(v: Vector3) -> Vector3 {
    let mut k = 0;
    for i in 1..3 {
        if v[i].abs() > v[k].abs() {
            k = i;
        }
    }
    if v[k] < 0.0 {
        scaled(&v, -1.0)
    } else {
        v
    }
}

/// Unit vector spanning the null space of `A − λI`, from the best-conditioned
/// cross product of its rows.
fn null_vector(a: &Matrix3, lambda: f64) -> Option<Vector3> {
    let r0 = [a[0][0] - lambda, a[0][1], a[0][2]];
    let r1 = [a[1][0], a[1][1] - lambda, a[1][2]];
    let r2 = [a[2][0], a[2][1], a[2][2] - lambda];
    let candidates = [cross(&r0, &r1), cross(&r0, &r2), cross(&r1, &r2)];
    let best = candidates
        .iter()
        .copied()
        .max_by(|x, y| dot(x, x).total_cmp(&dot(y, y)))?;
    let n2 = dot(&best, &best);
    if n2 > 0.0 && n2.is_finite() {
        Some(scaled(&best, 1.0 / n2.sqrt()))
    } else {
        None
    }
}

/// Cyclic Jacobi rotations; only used near degeneracy.
fn jacobi(a: &Matrix3, scale: f64) -> EigenSystem {
    let mut m = *a;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _sweep in 0..64 {
        let off = m[0][1].abs() + m[0][2].abs() + m[1][2].abs();
        if off <= 1e-300 || off <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            if m[p][q] == 0.0 {
                continue;
            }
            let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            for k in 0..3 {
                let mkp = m[k][p];
                let mkq = m[k][q];
                m[k][p] = c * mkp - s * mkq;
                m[k][q] = s * mkp + c * mkq;
            }
            for k in 0..3 {
                let mpk = m[p][k];
                let mqk = m[q][k];
                m[p][k] = c * mpk - s * mqk;
                m[q][k] = s * mpk + c * mqk;
            }
            for row in v.iter_mut() {
                let vp = row[p];
                let vq = row[q];
                row[p] = c * vp - s * vq;
                row[q] = s * vp + c * vq;
            }
        }
    }
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| m[i][i].total_cmp(&m[j][j]));
    let values = order.map(|k| m[k][k]);
    let vectors = order.map(|k| [v[0][k], v[1][k], v[2][k]]);
    finish(values, vectors, scale)
}

/// Fixes the sign gauge of `current` against `previous`: every eigenvector
/// whose overlap with its predecessor is negative is flipped. The
/// `near_degenerate` flag is raised if either system is degenerate, since
/// the pairing by index is then not meaningful.
pub fn align_eigenvectors(previous: &EigenSystem, current: &EigenSystem) -> EigenSystem {
    let mut out = *current;
    for k in 0..3 {
        if dot(&previous.vectors[k], &current.vectors[k]) < 0.0 {
            out.vectors[k] = scaled(&current.vectors[k], -1.0);
        }
    }
    out.near_degenerate = previous.near_degenerate || current.near_degenerate;
    out
}

/// Three complex amplitudes on `|1⟩, |2⟩, |3⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumState {
    pub amplitudes: [Complex64; 3],
}

impl QuantumState {
    pub fn new(c1: Complex64, c2: Complex64, c3: Complex64) -> Self {
        Self {
            amplitudes: [c1, c2, c3],
        }
    }

    /// Basis state `|k+1⟩`.
    pub fn basis(k: usize) -> Self {
        let mut amplitudes = [Complex64::new(0.0, 0.0); 3];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Self { amplitudes }
    }

    /// The initially populated ground state `|1⟩`.
    pub fn ground() -> Self {
        Self::basis(0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn populations(&self) -> [f64; 3] {
        self.amplitudes.map(|c| c.norm_sqr())
    }

    pub fn conj(&self) -> Self {
        Self {
            amplitudes: self.amplitudes.map(|c| c.conj()),
        }
    }

    /// `|⟨v|φ⟩|²` for a real vector `v`.
    pub fn overlap_sqr(&self, v: &Vector3) -> f64 {
        let z: Complex64 = (0..3).map(|k| self.amplitudes[k] * v[k]).sum();
        z.norm_sqr()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuantumState) -> Complex64 {
        (0..3)
            .map(|k| self.amplitudes[k].conj() * other.amplitudes[k])
            .sum()
    }

    pub fn validate(&self, tolerance: f64) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > tolerance || !n.is_finite() {
            return Err(Error::InvalidState { norm_sq: n });
        }
        Ok(())
    }
}

pub(crate) fn frobenius(m: &Matrix3) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn mat_vec(m: &Matrix3, v: &Vector3) -> Vector3 {
    [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
}

pub(crate) fn dot(a: &Vector3, b: &Vector3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Vector3, b: &Vector3) -> Vector3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn sub(a: &Vector3, b: &Vector3) -> Vector3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scaled(a: &Vector3, s: f64) -> Vector3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn normalize(a: Vector3) -> Vector3 {
    let n = dot(&a, &a).sqrt();
    scaled(&a, 1.0 / n)
}

fn det(m: &Matrix3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
