use std::collections::{BTreeSet, HashSet, VecDeque};
use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::element::{angle_distance, compose};
use super::{CayleyTable, GroupElement, GroupError, SamplerSpec, NUMERIC_TOL};

/// Largest permutation group we will enumerate by closure.
const PERMUTATION_CLOSURE_LIMIT: usize = 100_000;

/// The fixed axis or plane of a one-parameter rotation group.
#[derive(Clone, Debug, PartialEq)]
pub enum RotationAxis {
    /// Unit vector in R^3.
    Axis(Vector3<f64>),
    /// Coordinate plane `(i, j)`, `i < j`, inside R^d.
    Plane(usize, usize),
}

impl RotationAxis {
    pub fn axis(u: Vector3<f64>) -> Result<Self, GroupError> {
        let n = u.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(GroupError::InvalidDescriptor("axis must be nonzero".into()));
        }
        if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
            return Ok(Self::Axis(u));
        }
        Ok(Self::Axis(u / n))
    }

    pub fn plane(i: usize, j: usize) -> Result<Self, GroupError> {
        if i == j {
            return Err(GroupError::InvalidDescriptor("plane needs two distinct axes".into()));
        }
        Ok(Self::Plane(i.min(j), i.max(j)))
    }

    /// Rotation by `angle` about this axis/plane.
    pub fn rotation(&self, angle: f64) -> GroupElement {
        match self {
            Self::Axis(u) => GroupElement::AxisRotation {
                axis: *u,
                angle,
            },
            Self::Plane(i, j) => GroupElement::planar_rotation(angle, *i, *j).expect("valid plane"),
        }
    }
}

/// What kind of group a lattice node is.
#[derive(Clone, Debug)]
pub enum GroupKind {
    /// The trivial group; `identity` fixes which realm its single element lives in.
    Trivial { identity: GroupElement },
    /// A subgroup of a finite group, by member indices of the ambient table.
    Finite {
        table: Arc<CayleyTable>,
        members: BTreeSet<usize>,
    },
    /// `S^1` about an axis or in a plane, or its cyclic subgroup `C_k` when `order` is set.
    Circle {
        about: RotationAxis,
        order: Option<usize>,
    },
    SpecialOrthogonal3,
    SpecialLinear3,
    /// Translations along the linear span of `basis` inside R^dim.
    Translation { dim: usize, basis: Vec<Vec<f64>> },
    /// Permutations of `degree` coordinates generated by the descriptor's generators.
    Permutation { degree: usize },
}

/// A group together with a generating set and a display label.
#[derive(Clone, Debug)]
pub struct GroupDescriptor {
    kind: GroupKind,
    generators: Vec<GroupElement>,
    label: String,
}

impl GroupDescriptor {
    pub fn trivial(identity: GroupElement, label: impl Into<String>) -> Result<Self, GroupError> {
        if !identity.is_identity() {
            return Err(GroupError::InvalidDescriptor("trivial group needs an identity element".into()));
        }
        Ok(Self {
            generators: vec![identity.clone()],
            kind: GroupKind::Trivial { identity },
            label: label.into(),
        })
    }

    /// Subgroup of `table` generated by the listed element indices.
    pub fn finite_generated(
        table: &Arc<CayleyTable>,
        generators: &[usize],
        label: impl Into<String>,
    ) -> Result<Self, GroupError> {
        if generators.iter().any(|&g| g >= table.order()) {
            return Err(GroupError::InvalidDescriptor("generator index out of range".into()));
        }
        let gens: Vec<usize> = if generators.is_empty() {
            vec![table.identity()]
        } else {
            generators.to_vec()
        };
        let members = table.closure(&gens);
        Ok(Self {
            kind: GroupKind::Finite {
                table: Arc::clone(table),
                members,
            },
            generators: gens
                .iter()
                .map(|&g| GroupElement::Finite {
                    table: Arc::clone(table),
                    index: g,
                })
                .collect(),
            label: label.into(),
        })
    }

    /// Subgroup of `table` with an explicit member set, which must be closed.
    pub fn from_members(
        table: &Arc<CayleyTable>,
        members: BTreeSet<usize>,
        label: impl Into<String>,
    ) -> Result<Self, GroupError> {
        if members.iter().any(|&g| g >= table.order()) || !table.is_subgroup(&members) {
            return Err(GroupError::InvalidDescriptor("member set is not a subgroup".into()));
        }
        let generators = minimal_generators(table, &members);
        Ok(Self {
            kind: GroupKind::Finite {
                table: Arc::clone(table),
                members,
            },
            generators: generators
                .into_iter()
                .map(|g| GroupElement::Finite {
                    table: Arc::clone(table),
                    index: g,
                })
                .collect(),
            label: label.into(),
        })
    }

    /// The continuous circle group about `about`.
    pub fn circle(about: RotationAxis, label: impl Into<String>) -> Self {
        Self {
            generators: vec![about.rotation(1.0)],
            kind: GroupKind::Circle { about, order: None },
            label: label.into(),
        }
    }

    /// Cyclic group of rotations by multiples of `2pi / order`.
    pub fn cyclic_rotation(
        about: RotationAxis,
        order: usize,
        label: impl Into<String>,
    ) -> Result<Self, GroupError> {
        if order == 0 {
            return Err(GroupError::InvalidDescriptor("order must be positive".into()));
        }
        Ok(Self {
            generators: vec![about.rotation(TAU / order as f64)],
            kind: GroupKind::Circle {
                about,
                order: Some(order),
            },
            label: label.into(),
        })
    }

    pub fn so3(label: impl Into<String>) -> Self {
        let gens = vec![
            GroupElement::AxisRotation {
                axis: Vector3::x(),
                angle: 1.0,
            },
            GroupElement::AxisRotation {
                axis: Vector3::z(),
                angle: 1.0,
            },
        ];
        Self {
            kind: GroupKind::SpecialOrthogonal3,
            generators: gens,
            label: label.into(),
        }
    }

    pub fn sl3(label: impl Into<String>) -> Self {
        let shear = Matrix3::new(1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let squeeze = Matrix3::new(2.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.0);
        Self {
            kind: GroupKind::SpecialLinear3,
            generators: vec![
                GroupElement::SpecialLinear(shear),
                GroupElement::SpecialLinear(squeeze),
                GroupElement::AxisRotation {
                    axis: Vector3::x(),
                    angle: 1.0,
                },
                GroupElement::AxisRotation {
                    axis: Vector3::z(),
                    angle: 1.0,
                },
            ],
            label: label.into(),
        }
    }

    /// Translations along span(`basis`) in R^dim.
    pub fn translations(
        dim: usize,
        basis: Vec<Vec<f64>>,
        label: impl Into<String>,
    ) -> Result<Self, GroupError> {
        if basis.is_empty() || basis.iter().any(|b| b.len() != dim) {
            return Err(GroupError::InvalidDescriptor("translation basis must be nonempty, of dimension dim".into()));
        }
        let generators = basis
            .iter()
            .map(|b| GroupElement::translation(b.clone()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            kind: GroupKind::Translation { dim, basis },
            generators,
            label: label.into(),
        })
    }

    pub fn permutations(
        generators: Vec<Vec<usize>>,
        label: impl Into<String>,
    ) -> Result<Self, GroupError> {
        let degree = generators
            .first()
            .map(Vec::len)
            .ok_or_else(|| GroupError::InvalidDescriptor("no generators".into()))?;
        let gens = generators
            .into_iter()
            .map(|p| {
                if p.len() != degree {
                    return Err(GroupError::InvalidDescriptor("generators of different degree".into()));
                }
                GroupElement::permutation(p)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            kind: GroupKind::Permutation { degree },
            generators: gens,
            label: label.into(),
        })
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Group order, when finite.
    pub fn order(&self) -> Option<usize> {
        match &self.kind {
            GroupKind::Trivial { .. } => Some(1),
            GroupKind::Finite { members, .. } => Some(members.len()),
            GroupKind::Circle { order, .. } => *order,
            GroupKind::Permutation { .. } => self.permutation_closure().ok().map(|c| c.len()),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        match &self.kind {
            GroupKind::Trivial { .. } | GroupKind::Finite { .. } | GroupKind::Permutation { .. } => true,
            GroupKind::Circle { order, .. } => order.is_some(),
            _ => false,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.order() == Some(1)
    }

    /// Member indices, for subgroups of a finite table.
    pub fn finite_members(&self) -> Option<(&Arc<CayleyTable>, &BTreeSet<usize>)> {
        match &self.kind {
            GroupKind::Finite { table, members } => Some((table, members)),
            _ => None,
        }
    }

    /// Every element exactly once; only for finite groups.
    pub fn elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        match &self.kind {
            GroupKind::Trivial { identity } => Ok(vec![identity.clone()]),
            GroupKind::Finite { table, members } => Ok(members
                .iter()
                .map(|&i| GroupElement::Finite {
                    table: Arc::clone(table),
                    index: i,
                })
                .collect()),
            GroupKind::Circle {
                about,
                order: Some(k),
            } => Ok((0..*k)
                .map(|j| about.rotation(TAU * j as f64 / *k as f64))
                .collect()),
            GroupKind::Permutation { .. } => Ok(self
                .permutation_closure()?
                .into_iter()
                .map(GroupElement::Permutation)
                .collect()),
            _ => Err(GroupError::NotFinite(self.label.clone())),
        }
    }

    /// Non-identity elements, the default support for sampling finite groups.
    pub fn non_identity_elements(&self) -> Result<Vec<GroupElement>, GroupError> {
        Ok(self
            .elements()?
            .into_iter()
            .filter(|g| !g.is_identity())
            .collect())
    }

    fn permutation_closure(&self) -> Result<Vec<Vec<usize>>, GroupError> {
        let degree = match &self.kind {
            GroupKind::Permutation { degree } => *degree,
            _ => return Err(GroupError::NotFinite(self.label.clone())),
        };
        let gens: Vec<&Vec<usize>> = self
            .generators
            .iter()
            .filter_map(|g| match g {
                GroupElement::Permutation(p) => Some(p),
                _ => None,
            })
            .collect();
        let id: Vec<usize> = (0..degree).collect();
        let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(p) = queue.pop_front() {
            for g in &gens {
                let next: Vec<usize> = p.iter().map(|&i| g[i]).collect();
                if seen.insert(next.clone()) {
                    if seen.len() > PERMUTATION_CLOSURE_LIMIT {
                        return Err(GroupError::TooLarge(seen.len()));
                    }
                    order.push(next.clone());
                    queue.push_back(next);
                }
            }
        }
        order.sort();
        Ok(order)
    }

    /// Membership test for a sampled element.
    ///
    /// Continuous kinds use the `1e-9` numeric tolerance; finite tables are exact.
    pub fn contains(&self, g: &GroupElement) -> bool {
        match &self.kind {
            GroupKind::Trivial { .. } => g.is_identity(),
            GroupKind::Finite { table, members } => match g {
                GroupElement::Finite { table: t, index } => {
                    (Arc::ptr_eq(t, table) || **t == **table) && members.contains(index)
                }
                _ => false,
            },
            GroupKind::Circle { about, order } => {
                let Some(angle) = rotation_angle_about(g, about) else {
                    return false;
                };
                match order {
                    None => true,
                    Some(k) => {
                        let step = TAU / *k as f64;
                        let r = (angle / step).round();
                        angle_distance(angle, r * step) <= NUMERIC_TOL
                    }
                }
            }
            GroupKind::SpecialOrthogonal3 => match g {
                GroupElement::AxisRotation { .. } | GroupElement::RotationMatrix(_) => true,
                GroupElement::SpecialLinear(m) => {
                    (m.transpose() * m - Matrix3::identity()).amax() <= NUMERIC_TOL
                }
                _ => false,
            },
            GroupKind::SpecialLinear3 => g
                .as_matrix3()
                .is_some_and(|m| (m.determinant() - 1.0).abs() <= NUMERIC_TOL),
            GroupKind::Translation { dim, basis } => match g {
                GroupElement::Translation(v) if v.len() == *dim => in_span(basis, v),
                _ => false,
            },
            GroupKind::Permutation { degree } => match g {
                GroupElement::Permutation(p) if p.len() == *degree => self
                    .permutation_closure()
                    .map(|c| c.binary_search(p).is_ok())
                    .unwrap_or(false),
                _ => false,
            },
        }
    }

    /// Decides `self <= other` where the kinds make it decidable.
    ///
    /// `None` means the relation has to be declared by whoever builds the lattice.
    pub fn is_subgroup_of(&self, other: &GroupDescriptor) -> Option<bool> {
        use GroupKind as K;
        match (&self.kind, &other.kind) {
            (K::Trivial { .. }, _) => Some(true),
            (K::Finite { table: t1, members: m1 }, K::Finite { table: t2, members: m2 }) => {
                if Arc::ptr_eq(t1, t2) || t1 == t2 {
                    Some(m1.is_subset(m2))
                } else {
                    None
                }
            }
            (K::Finite { .. }, _) | (_, K::Finite { .. }) => {
                if self.is_finite() && other.is_finite() {
                    let own = self.elements().ok()?;
                    Some(own.iter().all(|g| other.contains(g)))
                } else {
                    None
                }
            }
            (K::SpecialOrthogonal3, K::SpecialOrthogonal3 | K::SpecialLinear3) => Some(true),
            (K::SpecialLinear3, K::SpecialLinear3) => Some(true),
            (K::SpecialLinear3, K::SpecialOrthogonal3) => Some(false),
            (K::Circle { about: RotationAxis::Axis(_), .. }, K::SpecialOrthogonal3 | K::SpecialLinear3) => {
                Some(true)
            }
            (K::Circle { about: a, order: oa }, K::Circle { about: b, order: ob }) => {
                let same = match (a, b) {
                    (RotationAxis::Axis(u), RotationAxis::Axis(v)) => {
                        (u.dot(v).abs() - 1.0).abs() <= NUMERIC_TOL
                    }
                    (RotationAxis::Plane(i, j), RotationAxis::Plane(k, l)) => i == k && j == l,
                    _ => false,
                };
                if !same {
                    // Two distinct axes share only the identity.
                    return Some(*oa == Some(1));
                }
                Some(match (oa, ob) {
                    (_, None) => true,
                    (None, Some(_)) => false,
                    (Some(x), Some(y)) => y % x == 0,
                })
            }
            (K::Translation { dim: d1, basis: b1 }, K::Translation { dim: d2, basis: b2 }) => {
                Some(d1 == d2 && b1.iter().all(|v| in_span(b2, v)))
            }
            (K::Permutation { .. }, K::Permutation { .. }) => {
                let own = self.elements().ok()?;
                Some(own.iter().all(|g| other.contains(g)))
            }
            _ => None,
        }
    }

    /// The sampling law used when this group is tested on its own.
    ///
    /// Finite groups draw uniformly from their non-identity elements, circles and
    /// `SO(3)` from Haar measure, `SL(3)` from exponentiated Gaussian traceless
    /// matrices, translations from Gaussian combinations of the basis.
    pub fn default_sampler(&self) -> Result<SamplerSpec, GroupError> {
        match &self.kind {
            GroupKind::Trivial { identity } => Ok(SamplerSpec::PointMass(identity.clone())),
            GroupKind::Circle { about, order: None } => Ok(SamplerSpec::HaarCircle(about.clone())),
            GroupKind::SpecialOrthogonal3 => Ok(SamplerSpec::HaarSO3),
            GroupKind::SpecialLinear3 => Ok(SamplerSpec::SpecialLinearGaussian { scale: 0.5 }),
            GroupKind::Translation { basis, .. } => Ok(SamplerSpec::GaussianTranslation {
                basis: basis.clone(),
                std: 1.0,
            }),
            _ => {
                let elems = self.non_identity_elements()?;
                if elems.is_empty() {
                    Ok(SamplerSpec::PointMass(self.generators[0].identity_like()))
                } else {
                    Ok(SamplerSpec::UniformOver(elems))
                }
            }
        }
    }

    /// Checks the descriptor invariants: generators nonempty and contained.
    pub fn validate(&self) -> Result<(), GroupError> {
        if self.generators.is_empty() {
            return Err(GroupError::InvalidDescriptor("empty generator set".into()));
        }
        if let Some(bad) = self.generators.iter().find(|g| !self.contains(g)) {
            return Err(GroupError::InvalidDescriptor(format!(
                "generator of kind {} is not in {}",
                bad.kind_name(),
                self.label
            )));
        }
        Ok(())
    }
}

/// Rotation angle of `g` if it is a rotation about `about`.
fn rotation_angle_about(g: &GroupElement, about: &RotationAxis) -> Option<f64> {
    match (about, g) {
        (RotationAxis::Plane(i, j), GroupElement::PlanarRotation { angle, plane }) => {
            (plane == &(*i, *j)).then_some(*angle)
        }
        (RotationAxis::Axis(u), GroupElement::AxisRotation { axis, angle }) => {
            let dot = u.dot(axis);
            if (dot.abs() - 1.0).abs() <= 1e-9 {
                Some(if dot > 0.0 { *angle } else { -*angle })
            } else if angle_distance(*angle, 0.0) <= NUMERIC_TOL {
                Some(0.0)
            } else {
                None
            }
        }
        (RotationAxis::Axis(u), GroupElement::RotationMatrix(m)) => {
            if (m * u - u).amax() > NUMERIC_TOL {
                return None;
            }
            // Angle from a vector orthogonal to u.
            let helper = if u.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
            let w = u.cross(&helper).normalize();
            let rw = m * w;
            Some(u.dot(&w.cross(&rw)).atan2(w.dot(&rw)))
        }
        _ => None,
    }
}

fn in_span(basis: &[Vec<f64>], v: &[f64]) -> bool {
    let d = v.len();
    let a = DMatrix::from_fn(d, basis.len(), |r, c| basis[c][r]);
    let b = DVector::from_column_slice(v);
    let svd = a.clone().svd(true, true);
    match svd.solve(&b, 1e-12) {
        Ok(coef) => (a * coef - b).amax() <= NUMERIC_TOL,
        Err(_) => false,
    }
}

/// Greedy generating set: add the smallest member not yet generated.
fn minimal_generators(table: &CayleyTable, members: &BTreeSet<usize>) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut reached = table.closure(&gens);
    for &g in members {
        if !reached.contains(&g) {
            gens.push(g);
            reached = table.closure(&gens);
        }
    }
    if gens.is_empty() {
        gens.push(table.identity());
    }
    gens
}

/// Composes a word of generators, used to cross-check tables and closures.
pub fn compose_all(elements: &[GroupElement]) -> Result<Option<GroupElement>, GroupError> {
    let mut iter = elements.iter();
    let Some(first) = iter.next() else {
        return Ok(None);
    };
    let mut acc = first.clone();
    for g in iter {
        acc = compose(&acc, g)?;
    }
    Ok(Some(acc))
}
