//! Complex scalars, projective rays and the tolerance policy.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex;
use thiserror::Error;

use crate::linalg;

/// Double-precision complex number.
pub type C64 = Complex<f64>;

/// Modulus below which a component is treated as zero when choosing the phase anchor.
pub const CANONICAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RayError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("dimension {0} is below 3")]
    DimensionTooSmall(usize),
    #[error("zero vector cannot be normalised")]
    ZeroVector,
    #[error("non-finite component")]
    NonFinite,
    #[error("expected {expected} rays, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("input rays are linearly dependent")]
    DegenerateSpan,
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(&'static str),
}

/// A complex value, optionally remembering the expression it was evaluated from.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexScalar {
    value: C64,
    origin: Option<String>,
}

impl ComplexScalar {
    pub fn new(value: C64) -> Result<Self, RayError> {
        if !(value.re.is_finite() && value.im.is_finite()) {
            return Err(RayError::NonFinite);
        }
        Ok(Self {
            value,
            origin: None,
        })
    }

    pub fn with_origin(value: C64, origin: impl Into<String>) -> Result<Self, RayError> {
        let mut s = Self::new(value)?;
        s.origin = Some(origin.into());
        Ok(s)
    }

    pub fn value(&self) -> C64 {
        self.value
    }

    pub fn origin(&self) -> Option<&str> {
        self.origin.as_deref()
    }
}

/// Numerical thresholds shared by every decision in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    /// `|<u,v>| <= ortho_tol` counts as orthogonal.
    pub ortho_tol: f64,
    /// Singular values below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
    /// Minimum ratio between the smallest kept and largest discarded singular value.
    pub gap_min: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            ortho_tol: 1e-9,
            rank_tol: 1e-6,
            gap_min: 1e3,
        }
    }
}

impl Tolerance {
    pub fn new(ortho_tol: f64, rank_tol: f64, gap_min: f64) -> Result<Self, RayError> {
        if !(ortho_tol > 0.0 && ortho_tol.is_finite()) {
            return Err(RayError::InvalidTolerance("ortho_tol must be positive"));
        }
        if !(rank_tol > 0.0 && rank_tol.is_finite()) {
            return Err(RayError::InvalidTolerance("rank_tol must be positive"));
        }
        if !(gap_min > 1.0) {
            return Err(RayError::InvalidTolerance("gap_min must exceed 1"));
        }
        Ok(Self {
            ortho_tol,
            rank_tol,
            gap_min,
        })
    }
}

/// A unit vector whose first non-negligible component is real and positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Ray {
    components: Vec<C64>,
}

impl Ray {
    /// The standard basis vector `e_k` in dimension `dim`.
    pub fn standard(dim: usize, k: usize) -> Result<Self, RayError> {
        check_dim(dim)?;
        assert!(k < dim, "basis index {k} out of range for dimension {dim}");
        let mut components = alloc::vec![C64::new(0.0, 0.0); dim];
        components[k] = C64::new(1.0, 0.0);
        Ok(Self { components })
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[C64] {
        &self.components
    }

    /// Apply a linear map given as row-major `dim x dim` entries and re-canonicalise.
    pub fn transformed(&self, matrix: &[C64]) -> Result<Ray, RayError> {
        let n = self.dim();
        assert_eq!(matrix.len(), n * n);
        let out: Vec<C64> = (0..n)
            .map(|r| (0..n).map(|c| matrix[r * n + c] * self.components[c]).sum())
            .collect();
        canonicalize_values(&out)
    }
}

impl fmt::Display for Ray {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, z) in self.components.iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}{:+}i", z.re, z.im)?;
        }
        f.write_str(")")
    }
}

fn check_dim(dim: usize) -> Result<(), RayError> {
    if dim < 3 {
        Err(RayError::DimensionTooSmall(dim))
    } else {
        Ok(())
    }
}

/// `sum_k conj(u_k) v_k` over raw component slices of equal length.
pub fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

pub fn inner_product(u: &Ray, v: &Ray) -> Result<C64, RayError> {
    if u.dim() != v.dim() {
        return Err(RayError::DimensionMismatch {
            left: u.dim(),
            right: v.dim(),
        });
    }
    Ok(dot(&u.components, &v.components))
}

pub fn is_orthogonal(u: &Ray, v: &Ray, tol: &Tolerance) -> Result<bool, RayError> {
    Ok(inner_product(u, v)?.norm() <= tol.ortho_tol)
}

pub fn canonicalize(components: &[ComplexScalar]) -> Result<Ray, RayError> {
    let values: Vec<C64> = components.iter().map(ComplexScalar::value).collect();
    canonicalize_values(&values)
}

/// As [`canonicalize`], on bare complex values.
pub fn canonicalize_values(values: &[C64]) -> Result<Ray, RayError> {
    check_dim(values.len())?;
    if values
        .iter()
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(RayError::NonFinite);
    }
    if values.iter().all(|z| z.norm() <= CANONICAL_TOL) {
        return Err(RayError::ZeroVector);
    }
    let norm = linalg::cnorm(values);
    let unit: Vec<C64> = values.iter().map(|z| z / norm).collect();
    let anchor = unit
        .iter()
        .find(|z| z.norm() > CANONICAL_TOL)
        .copied()
        .ok_or(RayError::ZeroVector)?;
    let phase = anchor.conj() / anchor.norm();
    let mut components: Vec<C64> = unit.iter().map(|z| z * phase).collect();
    let first = components
        .iter()
        .position(|z| z.norm() > CANONICAL_TOL)
        .ok_or(RayError::ZeroVector)?;
    components[first] = C64::new(components[first].norm(), 0.0);
    Ok(Ray { components })
}

/// The unique ray orthogonal to `n - 1` independent rays in dimension `n`.
pub fn orthogonal_complement_ray(
    rays: &[Ray],
    dim: usize,
    tol: &Tolerance,
) -> Result<Ray, RayError> {
    check_dim(dim)?;
    if rays.len() + 1 != dim {
        return Err(RayError::Arity {
            expected: dim - 1,
            found: rays.len(),
        });
    }
    for r in rays {
        if r.dim() != dim {
            return Err(RayError::DimensionMismatch {
                left: r.dim(),
                right: dim,
            });
        }
    }
    let rows: Vec<Vec<C64>> = rays
        .iter()
        .map(|r| r.components.iter().map(|z| z.conj()).collect())
        .collect();
    let (rank, null) = linalg::complex_null_space(&rows, dim, tol.rank_tol);
    if rank != dim - 1 || null.len() != 1 {
        return Err(RayError::DegenerateSpan);
    }
    let out = canonicalize_values(&null[0])?;
    for r in rays {
        if !is_orthogonal(r, &out, tol)? {
            return Err(RayError::DegenerateSpan);
        }
    }
    Ok(out)
}
