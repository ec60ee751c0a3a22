use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};

use super::{CayleyTable, GroupError, NUMERIC_TOL};

/// A single symmetry transformation.
///
/// Rotations about an axis and in a coordinate plane keep their angle form while
/// composed with rotations of the same axis/plane; anything else is normalised
/// to a 3x3 matrix.
#[derive(Clone, Debug)]
pub enum GroupElement {
    /// An element of a finite group, by index into its Cayley table.
    Finite { table: Arc<CayleyTable>, index: usize },
    /// Rotation by `angle` in the coordinate plane `(i, j)` with `i < j`.
    PlanarRotation { angle: f64, plane: (usize, usize) },
    /// Rotation by `angle` about the unit vector `axis` (right-hand rule).
    AxisRotation { axis: Vector3<f64>, angle: f64 },
    RotationMatrix(Matrix3<f64>),
    SpecialLinear(Matrix3<f64>),
    Translation(Vec<f64>),
    /// `p[i]` is the image of coordinate `i`; acts by moving entry `i` to slot `p[i]`.
    Permutation(Vec<usize>),
}

/// Wraps an angle into `[0, 2pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

fn det_ok(m: &Matrix3<f64>) -> bool {
    (m.determinant() - 1.0).abs() <= NUMERIC_TOL
}

fn orthogonality_drift(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).amax()
}

/// Nearest rotation to `m` via polar decomposition.
pub fn reorthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * v_t;
    }
    r
}

fn axis_matrix(axis: &Vector3<f64>, angle: f64) -> Matrix3<f64> {
    Rotation3::from_axis_angle(&Unit::new_unchecked(*axis), angle).into_inner()
}

impl GroupElement {
    pub fn finite(table: &Arc<CayleyTable>, index: usize) -> Result<Self, GroupError> {
        if index >= table.order() {
            return Err(GroupError::InvalidElement(format!(
                "index {index} out of range for order {}",
                table.order()
            )));
        }
        Ok(Self::Finite {
            table: Arc::clone(table),
            index,
        })
    }

    pub fn planar_rotation(angle: f64, i: usize, j: usize) -> Result<Self, GroupError> {
        if i == j {
            return Err(GroupError::InvalidElement("rotation plane needs two distinct axes".into()));
        }
        if !angle.is_finite() {
            return Err(GroupError::InvalidElement("non-finite angle".into()));
        }
        // (j, i) is the same plane with the opposite orientation.
        let (plane, angle) = if i < j { ((i, j), angle) } else { ((j, i), -angle) };
        Ok(Self::PlanarRotation {
            angle: wrap_angle(angle),
            plane,
        })
    }

    /// Rotation about `axis`, which is normalised here; it must be nonzero.
    pub fn axis_rotation(axis: Vector3<f64>, angle: f64) -> Result<Self, GroupError> {
        let norm = axis.norm();
        if !(norm > 0.0) || !norm.is_finite() || !angle.is_finite() {
            return Err(GroupError::InvalidElement("axis must be a finite nonzero vector".into()));
        }
        Ok(Self::AxisRotation {
            axis: axis / norm,
            angle,
        })
    }

    pub fn rotation_matrix(m: Matrix3<f64>) -> Result<Self, GroupError> {
        if orthogonality_drift(&m) > NUMERIC_TOL || !det_ok(&m) {
            return Err(GroupError::InvalidElement("matrix is not in SO(3)".into()));
        }
        Ok(Self::RotationMatrix(m))
    }

    pub fn special_linear(m: Matrix3<f64>) -> Result<Self, GroupError> {
        if !det_ok(&m) {
            return Err(GroupError::InvalidElement("determinant is not 1".into()));
        }
        Ok(Self::SpecialLinear(m))
    }

    pub fn translation(v: Vec<f64>) -> Result<Self, GroupError> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(GroupError::InvalidElement("non-finite translation".into()));
        }
        Ok(Self::Translation(v))
    }

    pub fn permutation(p: Vec<usize>) -> Result<Self, GroupError> {
        let d = p.len();
        let mut seen = vec![false; d];
        for &v in &p {
            if v >= d || seen[v] {
                return Err(GroupError::InvalidElement("not a bijection".into()));
            }
            seen[v] = true;
        }
        Ok(Self::Permutation(p))
    }

    /// Short name of the variant, used in error messages.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Finite { .. } => "finite",
            Self::PlanarRotation { .. } => "planar-rotation",
            Self::AxisRotation { .. } => "axis-rotation",
            Self::RotationMatrix(_) => "rotation-matrix",
            Self::SpecialLinear(_) => "special-linear",
            Self::Translation(_) => "translation",
            Self::Permutation(_) => "permutation",
        }
    }

    /// 3x3 matrix form, for the variants that act linearly on R^3.
    pub fn as_matrix3(&self) -> Option<Matrix3<f64>> {
        match self {
            Self::AxisRotation { axis, angle } => Some(axis_matrix(axis, *angle)),
            Self::RotationMatrix(m) | Self::SpecialLinear(m) => Some(*m),
            _ => None,
        }
    }

    /// The identity of the same kind (same table, plane, dimension).
    pub fn identity_like(&self) -> Self {
        match self {
            Self::Finite { table, .. } => Self::Finite {
                table: Arc::clone(table),
                index: table.identity(),
            },
            Self::PlanarRotation { plane, .. } => Self::PlanarRotation {
                angle: 0.0,
                plane: *plane,
            },
            Self::AxisRotation { axis, .. } => Self::AxisRotation {
                axis: *axis,
                angle: 0.0,
            },
            Self::RotationMatrix(_) => Self::RotationMatrix(Matrix3::identity()),
            Self::SpecialLinear(_) => Self::SpecialLinear(Matrix3::identity()),
            Self::Translation(v) => Self::Translation(vec![0.0; v.len()]),
            Self::Permutation(p) => Self::Permutation((0..p.len()).collect()),
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Self::Finite { table, index } => *index == table.identity(),
            Self::PlanarRotation { angle, .. } => angle_distance(*angle, 0.0) <= NUMERIC_TOL,
            Self::AxisRotation { angle, .. } => angle_distance(*angle, 0.0) <= NUMERIC_TOL,
            Self::RotationMatrix(m) | Self::SpecialLinear(m) => {
                (m - Matrix3::identity()).amax() <= NUMERIC_TOL
            }
            Self::Translation(v) => v.iter().all(|x| x.abs() <= NUMERIC_TOL),
            Self::Permutation(p) => p.iter().enumerate().all(|(i, &v)| i == v),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            Self::Finite { table, index } => Self::Finite {
                table: Arc::clone(table),
                index: table.inv(*index),
            },
            Self::PlanarRotation { angle, plane } => Self::PlanarRotation {
                angle: wrap_angle(-angle),
                plane: *plane,
            },
            Self::AxisRotation { axis, angle } => Self::AxisRotation {
                axis: *axis,
                angle: -angle,
            },
            Self::RotationMatrix(m) => Self::RotationMatrix(m.transpose()),
            Self::SpecialLinear(m) => {
                Self::SpecialLinear(m.try_inverse().expect("det 1 matrices are invertible"))
            }
            Self::Translation(v) => Self::Translation(v.iter().map(|x| -x).collect()),
            Self::Permutation(p) => {
                let mut inv = vec![0; p.len()];
                for (i, &v) in p.iter().enumerate() {
                    inv[v] = i;
                }
                Self::Permutation(inv)
            }
        }
    }

    /// Approximate equality: exact for discrete kinds, `tol` for continuous ones.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        match (self, other) {
            (Self::Finite { table: t1, index: i1 }, Self::Finite { table: t2, index: i2 }) => {
                i1 == i2 && (Arc::ptr_eq(t1, t2) || t1 == t2)
            }
            (
                Self::PlanarRotation { angle: a, plane: p },
                Self::PlanarRotation { angle: b, plane: q },
            ) => p == q && angle_distance(*a, *b) <= tol,
            (Self::Translation(a), Self::Translation(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
            }
            (Self::Permutation(a), Self::Permutation(b)) => a == b,
            _ => match (self.as_matrix3(), other.as_matrix3()) {
                (Some(a), Some(b)) => (a - b).amax() <= tol,
                _ => false,
            },
        }
    }
}

/// Group product `ab` (apply `b` first, then `a`).
pub fn compose(a: &GroupElement, b: &GroupElement) -> Result<GroupElement, GroupError> {
    use GroupElement as E;
    let mismatch = || GroupError::IncompatibleElements {
        left: a.kind_name(),
        right: b.kind_name(),
    };
    match (a, b) {
        (E::Finite { table: t1, index: i1 }, E::Finite { table: t2, index: i2 }) => {
            if !(Arc::ptr_eq(t1, t2) || t1 == t2) {
                return Err(mismatch());
            }
            Ok(E::Finite {
                table: Arc::clone(t1),
                index: t1.mul(*i1, *i2),
            })
        }
        (E::PlanarRotation { angle: x, plane: p }, E::PlanarRotation { angle: y, plane: q }) => {
            if p != q {
                return Err(mismatch());
            }
            Ok(E::PlanarRotation {
                angle: wrap_angle(x + y),
                plane: *p,
            })
        }
        (E::AxisRotation { axis: u, angle: x }, E::AxisRotation { axis: v, angle: y })
            if (u.dot(v).abs() - 1.0).abs() <= 1e-12 =>
        {
            let y = if u.dot(v) > 0.0 { *y } else { -*y };
            Ok(E::AxisRotation {
                axis: *u,
                angle: x + y,
            })
        }
        (E::Translation(u), E::Translation(v)) => {
            if u.len() != v.len() {
                return Err(mismatch());
            }
            Ok(E::Translation(u.iter().zip(v).map(|(x, y)| x + y).collect()))
        }
        (E::Permutation(p), E::Permutation(q)) => {
            if p.len() != q.len() {
                return Err(mismatch());
            }
            Ok(E::Permutation(q.iter().map(|&i| p[i]).collect()))
        }
        _ => {
            let (ma, mb) = match (a.as_matrix3(), b.as_matrix3()) {
                (Some(x), Some(y)) => (x, y),
                _ => return Err(mismatch()),
            };
            let prod = ma * mb;
            let linear = matches!(a, E::SpecialLinear(_)) || matches!(b, E::SpecialLinear(_));
            if linear {
                let det = prod.determinant();
                if (det - 1.0).abs() > NUMERIC_TOL {
                    return Ok(E::SpecialLinear(prod / det.cbrt()));
                }
                Ok(E::SpecialLinear(prod))
            } else if orthogonality_drift(&prod) > NUMERIC_TOL || !det_ok(&prod) {
                Ok(E::RotationMatrix(reorthonormalize(&prod)))
            } else {
                Ok(E::RotationMatrix(prod))
            }
        }
    }
}
