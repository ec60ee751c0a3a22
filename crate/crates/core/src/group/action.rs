use std::f64::consts::TAU;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{compose, CayleyTable, GroupDescriptor, GroupElement, GroupError};

/// How elements of the ambient group move feature vectors.
#[derive(Clone, Debug)]
pub enum ActionKind {
    /// Every element fixes every point.
    Trivial,
    /// 3x3 rotation or special-linear matrices acting on R^3.
    MatrixMultiply,
    /// Planar rotations of two coordinates; `power = k` applies `g^k`.
    PlanarRotation { power: i32 },
    /// Permutation elements moving coordinate `i` to slot `p[i]`.
    CoordinatePermutation,
    /// `x + v` for translation elements.
    Translation,
    /// A finite group represented by `d x d` matrices, one per table element.
    FiniteLinear {
        table: Arc<CayleyTable>,
        matrices: Vec<DMatrix<f64>>,
    },
    /// A finite group represented by coordinate permutations, one per table element.
    FinitePermutation {
        table: Arc<CayleyTable>,
        perms: Vec<Vec<usize>>,
    },
}

/// An action of an ambient group on R^d.
#[derive(Clone, Debug)]
pub struct GroupAction {
    group: GroupDescriptor,
    dim: usize,
    kind: ActionKind,
}

impl GroupAction {
    pub fn new(group: GroupDescriptor, dim: usize, kind: ActionKind) -> Result<Self, GroupError> {
        if dim == 0 {
            return Err(GroupError::InvalidAction("feature dimension must be positive".into()));
        }
        match &kind {
            ActionKind::MatrixMultiply if dim != 3 => {
                return Err(GroupError::InvalidAction("matrix actions are on R^3".into()));
            }
            ActionKind::FiniteLinear { table, matrices } => {
                if matrices.len() != table.order()
                    || matrices.iter().any(|m| m.shape() != (dim, dim))
                {
                    return Err(GroupError::InvalidAction("one d x d matrix per element required".into()));
                }
                for a in 0..table.order() {
                    for b in 0..table.order() {
                        let lhs = &matrices[a] * &matrices[b];
                        if (lhs - &matrices[table.mul(a, b)]).amax() > 1e-9 {
                            return Err(GroupError::InvalidAction(format!(
                                "matrices do not respect the product {}*{}",
                                table.label(a),
                                table.label(b)
                            )));
                        }
                    }
                }
            }
            ActionKind::FinitePermutation { table, perms } => {
                if perms.len() != table.order() {
                    return Err(GroupError::InvalidAction("one permutation per element required".into()));
                }
                for p in perms {
                    GroupElement::permutation(p.clone())?;
                    if p.len() != dim {
                        return Err(GroupError::InvalidAction("permutation degree must equal d".into()));
                    }
                }
                for a in 0..table.order() {
                    for b in 0..table.order() {
                        let ab: Vec<usize> = perms[b].iter().map(|&i| perms[a][i]).collect();
                        if ab != perms[table.mul(a, b)] {
                            return Err(GroupError::InvalidAction(format!(
                                "permutations do not respect the product {}*{}",
                                table.label(a),
                                table.label(b)
                            )));
                        }
                    }
                }
            }
            _ => {}
        }
        Ok(Self { group, dim, kind })
    }

    /// `C_n` (as a table) rotating coordinates `plane` of R^d by `2 pi k power / n`.
    pub fn cyclic_planar(
        table: &Arc<CayleyTable>,
        dim: usize,
        plane: (usize, usize),
        power: i32,
    ) -> Result<Self, GroupError> {
        let n = table.order();
        let (i, j) = plane;
        if i == j || i >= dim || j >= dim {
            return Err(GroupError::InvalidAction("rotation plane out of range".into()));
        }
        let gen = (0..n).find(|&g| table.closure(&[g]).len() == n).ok_or_else(|| {
            GroupError::InvalidAction("table is not cyclic".into())
        })?;
        let mut matrices = vec![DMatrix::identity(dim, dim); n];
        let mut g = table.identity();
        for k in 0..n {
            let angle = TAU * (k as f64) * f64::from(power) / n as f64;
            let mut m = DMatrix::identity(dim, dim);
            let (c, s) = (exact_cos(angle), exact_sin(angle));
            m[(i, i)] = c;
            m[(i, j)] = -s;
            m[(j, i)] = s;
            m[(j, j)] = c;
            matrices[g] = m;
            g = table.mul(g, gen);
        }
        let all: Vec<usize> = (0..n).collect();
        let group = GroupDescriptor::finite_generated(table, &all, format!("C{n}"))?;
        Self::new(group, dim, ActionKind::FiniteLinear {
            table: Arc::clone(table),
            matrices,
        })
    }

    /// `D4` acting on R^2 by its defining matrices.
    pub fn dihedral4_plane(table: &Arc<CayleyTable>) -> Result<Self, GroupError> {
        let (labels, mats) = super::dihedral4_matrices();
        let mut matrices = vec![DMatrix::zeros(2, 2); table.order()];
        for (label, m) in labels.iter().zip(mats) {
            let idx = table
                .index_of(label)
                .ok_or_else(|| GroupError::InvalidAction(format!("table has no element {label}")))?;
            matrices[idx] = m;
        }
        let all: Vec<usize> = (0..table.order()).collect();
        let group = GroupDescriptor::finite_generated(table, &all, "D4")?;
        Self::new(group, 2, ActionKind::FiniteLinear {
            table: Arc::clone(table),
            matrices,
        })
    }

    /// `D4` acting on `side x side` row-major images by moving pixels.
    pub fn dihedral4_image(table: &Arc<CayleyTable>, side: usize) -> Result<Self, GroupError> {
        let (labels, mats) = super::dihedral4_matrices();
        let mut perms = vec![Vec::new(); table.order()];
        let c = (side as f64 - 1.0) / 2.0;
        for (label, m) in labels.iter().zip(mats) {
            let idx = table
                .index_of(label)
                .ok_or_else(|| GroupError::InvalidAction(format!("table has no element {label}")))?;
            // Pixel (row, col) sits at (x, y) = (col - c, c - row).
            let mut p = vec![0; side * side];
            for row in 0..side {
                for col in 0..side {
                    let v = &m * DVector::from_vec(vec![col as f64 - c, c - row as f64]);
                    let ncol = (v[0] + c).round() as usize;
                    let nrow = (c - v[1]).round() as usize;
                    p[row * side + col] = nrow * side + ncol;
                }
            }
            perms[idx] = p;
        }
        let all: Vec<usize> = (0..table.order()).collect();
        let group = GroupDescriptor::finite_generated(table, &all, "D4")?;
        Self::new(group, side * side, ActionKind::FinitePermutation {
            table: Arc::clone(table),
            perms,
        })
    }

    pub fn group(&self) -> &GroupDescriptor {
        &self.group
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ActionKind {
        &self.kind
    }

    /// The same action restricted to (or re-labelled with) a subgroup.
    pub fn restricted_to(&self, group: GroupDescriptor) -> Self {
        Self {
            group,
            dim: self.dim,
            kind: self.kind.clone(),
        }
    }

    /// Returns `g . x`.
    pub fn act(&self, g: &GroupElement, x: &[f64]) -> Result<Vec<f64>, GroupError> {
        let mut out = vec![0.0; x.len()];
        self.act_into(g, x, &mut out)?;
        Ok(out)
    }

    /// Writes `g . x` into `out`.
    pub fn act_into(&self, g: &GroupElement, x: &[f64], out: &mut [f64]) -> Result<(), GroupError> {
        if x.len() != self.dim || out.len() != self.dim {
            return Err(GroupError::DimensionMismatch {
                expected: self.dim,
                found: if x.len() != self.dim { x.len() } else { out.len() },
            });
        }
        let incompatible = || GroupError::IncompatibleAction {
            element: g.kind_name(),
        };
        match (&self.kind, g) {
            (ActionKind::Trivial, _) => out.copy_from_slice(x),
            (ActionKind::MatrixMultiply, _) => {
                let m: Matrix3<f64> = g.as_matrix3().ok_or_else(incompatible)?;
                let v = m * Vector3::new(x[0], x[1], x[2]);
                out.copy_from_slice(v.as_slice());
            }
            (ActionKind::PlanarRotation { power }, GroupElement::PlanarRotation { angle, plane }) => {
                let (i, j) = *plane;
                if j >= self.dim {
                    return Err(incompatible());
                }
                let a = angle * f64::from(*power);
                let (c, s) = (exact_cos(a), exact_sin(a));
                out.copy_from_slice(x);
                out[i] = c * x[i] - s * x[j];
                out[j] = s * x[i] + c * x[j];
            }
            (ActionKind::CoordinatePermutation, GroupElement::Permutation(p)) => {
                if p.len() != self.dim {
                    return Err(incompatible());
                }
                for (i, &v) in p.iter().enumerate() {
                    out[v] = x[i];
                }
            }
            (ActionKind::Translation, GroupElement::Translation(v)) => {
                if v.len() != self.dim {
                    return Err(incompatible());
                }
                for ((o, xi), vi) in out.iter_mut().zip(x).zip(v) {
                    *o = xi + vi;
                }
            }
            (ActionKind::FiniteLinear { table, matrices }, GroupElement::Finite { table: t, index }) => {
                if !(Arc::ptr_eq(table, t) || **table == **t) {
                    return Err(incompatible());
                }
                let m = &matrices[*index];
                for (r, o) in out.iter_mut().enumerate() {
                    *o = (0..self.dim).map(|c| m[(r, c)] * x[c]).sum();
                }
            }
            (ActionKind::FinitePermutation { table, perms }, GroupElement::Finite { table: t, index }) => {
                if !(Arc::ptr_eq(table, t) || **table == **t) {
                    return Err(incompatible());
                }
                for (i, &v) in perms[*index].iter().enumerate() {
                    out[v] = x[i];
                }
            }
            _ => return Err(incompatible()),
        }
        Ok(())
    }

    /// Checks that every non-identity element of a finite `group` moves some probe point.
    ///
    /// Probes are the standard basis plus a few seeded Gaussian vectors.
    pub fn is_faithful_on(&self, group: &GroupDescriptor) -> Result<bool, GroupError> {
        let mut probes: Vec<Vec<f64>> = (0..self.dim)
            .map(|k| (0..self.dim).map(|i| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..4 {
            probes.push((0..self.dim).map(|_| rng.sample(StandardNormal)).collect());
        }
        for g in group.non_identity_elements()? {
            let mut moved = false;
            for x in &probes {
                let y = self.act(&g, x)?;
                if y.iter().zip(x).any(|(a, b)| (a - b).abs() > 1e-12) {
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Largest deviation from `g.(h.x) = (gh).x` over the given triples.
    pub fn compatibility_error(
        &self,
        triples: &[(GroupElement, GroupElement, Vec<f64>)],
    ) -> Result<f64, GroupError> {
        let mut worst: f64 = 0.0;
        for (g, h, x) in triples {
            let lhs = self.act(g, &self.act(h, x)?)?;
            let rhs = self.act(&compose(g, h)?, x)?;
            for (a, b) in lhs.iter().zip(&rhs) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }
}

/// `cos` that returns exact values at multiples of `pi/2`.
fn exact_cos(a: f64) -> f64 {
    exact_sin(a + std::f64::consts::FRAC_PI_2)
}

/// `sin` that returns exact values at multiples of `pi/2`.
fn exact_sin(a: f64) -> f64 {
    let quarter = a / std::f64::consts::FRAC_PI_2;
    let r = quarter.round();
    if (quarter - r).abs() < 1e-12 {
        match (r as i64).rem_euclid(4) {
            0 | 2 => 0.0,
            1 => 1.0,
            _ => -1.0,
        }
    } else {
        a.sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn planar_action(dim: usize, power: i32) -> GroupAction {
        let group = GroupDescriptor::circle(super::super::RotationAxis::plane(0, 1).unwrap(), "S1");
        GroupAction::new(group, dim, ActionKind::PlanarRotation { power }).unwrap()
    }

    #[test]
    fn quarter_turn_in_first_plane() {
        let act = planar_action(4, 1);
        let g = GroupElement::planar_rotation(FRAC_PI_2, 0, 1).unwrap();
        assert_eq!(act.act(&g, &[1.0, 0.0, 0.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn swap_permutation() {
        let group = GroupDescriptor::permutations(vec![vec![1, 0, 2]], "S2").unwrap();
        let act = GroupAction::new(group, 3, ActionKind::CoordinatePermutation).unwrap();
        let g = GroupElement::permutation(vec![1, 0, 2]).unwrap();
        assert_eq!(act.act(&g, &[1.0, 2.0, 3.0]).unwrap(), vec![2.0, 1.0, 3.0]);
    }

    #[test]
    fn star_action_is_square_of_dot_action() {
        let dot = planar_action(5, 1);
        let star = planar_action(5, 2);
        let g = GroupElement::planar_rotation(FRAC_PI_2, 0, 1).unwrap();
        let x = [0.3, -1.2, 0.7, 2.0, -0.5];
        let by_star = star.act(&g, &x).unwrap();
        assert_eq!(by_star, vec![-0.3, 1.2, 0.7, 2.0, -0.5]);
        let g2 = compose(&g, &g).unwrap();
        assert_eq!(by_star, dot.act(&g2, &x).unwrap());
    }

    #[test]
    fn cyclic_table_star_action() {
        let c4 = Arc::new(CayleyTable::cyclic(4).unwrap());
        let dot = GroupAction::cyclic_planar(&c4, 2, (0, 1), 1).unwrap();
        let star = GroupAction::cyclic_planar(&c4, 2, (0, 1), 2).unwrap();
        let r = GroupElement::finite(&c4, 1).unwrap();
        let x = [1.0, 2.0];
        assert_eq!(dot.act(&r, &x).unwrap(), vec![-2.0, 1.0]);
        assert_eq!(star.act(&r, &x).unwrap(), vec![-1.0, -2.0]);
        assert!(dot.is_faithful_on(dot.group()).unwrap());
        assert!(!star.is_faithful_on(star.group()).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        let act = planar_action(3, 1);
        let g = GroupElement::planar_rotation(1.0, 0, 1).unwrap();
        assert!(matches!(act.act(&g, &[1.0, 2.0]), Err(GroupError::DimensionMismatch { .. })));
    }

    #[test]
    fn d4_image_action_respects_products() {
        let d4 = Arc::new(CayleyTable::dihedral4());
        let act = GroupAction::dihedral4_image(&d4, 3).unwrap();
        assert!(act.is_faithful_on(act.group()).unwrap());
        let plane = GroupAction::dihedral4_plane(&d4).unwrap();
        assert!(plane.is_faithful_on(plane.group()).unwrap());
    }
}
