use std::cmp::Ordering;

use nalgebra::Vector3;

use super::RegressionError;
use crate::group::{GroupAction, GroupElement, GroupKind, RotationAxis};
use crate::invariance::RegressionDataset;
use crate::lattice::Lattice;

/// Zero test for the nonzero indicator.
pub const ZERO_TOL: f64 = 1e-12;

/// A map constant on group orbits, used to fit estimators on the quotient.
#[derive(Clone, Debug)]
pub enum ProjectionMap {
    Identity,
    /// `x -> |x|`, for `SO(3)`.
    Radial,
    /// `x -> 1{x != 0}`, for `SL(3)`.
    NonzeroIndicator,
    /// `x -> (arccos <u, x/|x|>, |x|)` on `R^3 \ {0}`, for rotations about `u`.
    AxisColatitude(Vector3<f64>),
    /// Replaces coordinates `i < j` by `|(x_i, x_j)|`, for rotations in that plane.
    PlanarRadius(usize, usize),
    /// Lexicographically least point of the orbit under a finite group.
    FiniteOrbitCanonical {
        action: GroupAction,
        elements: Vec<GroupElement>,
    },
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl ProjectionMap {
    /// Orbit canonicalisation under the finite group of `action`.
    pub fn orbit_canonical(action: &GroupAction) -> Result<Self, RegressionError> {
        let elements = action.group().elements()?;
        Ok(Self::FiniteOrbitCanonical {
            action: action.clone(),
            elements,
        })
    }

    /// The quotient map matching the group of a lattice node, under the
    /// lattice's action for finite groups.
    pub fn for_node(lattice: &Lattice, node: usize) -> Result<Self, RegressionError> {
        let group = &lattice.node(node).group;
        match group.kind() {
            GroupKind::Trivial { .. } => Ok(Self::Identity),
            GroupKind::SpecialOrthogonal3 => Ok(Self::Radial),
            GroupKind::SpecialLinear3 => Ok(Self::NonzeroIndicator),
            GroupKind::Circle { about, order: None } => Ok(match about {
                RotationAxis::Axis(u) => Self::AxisColatitude(*u),
                RotationAxis::Plane(i, j) => Self::PlanarRadius(*i, *j),
            }),
            GroupKind::Translation { .. } => Err(RegressionError::Unsupported(format!(
                "no projection for translation group '{}'",
                group.label()
            ))),
            _ => {
                let action = lattice.node_action(node).ok_or_else(|| {
                    RegressionError::Unsupported(format!("finite node '{}' needs a lattice action", group.label()))
                })?;
                Self::orbit_canonical(&action)
            }
        }
    }

    /// Output dimension for inputs of dimension `d`.
    pub fn output_dim(&self, d: usize) -> usize {
        match self {
            Self::Identity | Self::FiniteOrbitCanonical { .. } => d,
            Self::Radial | Self::NonzeroIndicator => 1,
            Self::AxisColatitude(_) => 2,
            Self::PlanarRadius(..) => d - 1,
        }
    }

    /// Whether `x` lies in the domain of the map.
    pub fn is_defined(&self, x: &[f64]) -> bool {
        match self {
            Self::AxisColatitude(_) => x.len() == 3 && x.iter().any(|&v| v != 0.0),
            _ => true,
        }
    }

    pub fn check_dim(&self, d: usize) -> Result<(), RegressionError> {
        let ok = match self {
            Self::AxisColatitude(_) => d == 3,
            Self::PlanarRadius(i, j) => i < j && *j < d,
            Self::FiniteOrbitCanonical { action, .. } => action.dim() == d,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(RegressionError::InvalidData(format!("projection does not apply in dimension {d}")))
        }
    }

    /// Applies the map. The zero vector has colatitude 0 by convention.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Identity => x.to_vec(),
            Self::Radial => vec![norm(x)],
            Self::NonzeroIndicator => vec![if x.iter().all(|v| v.abs() <= ZERO_TOL) { 0.0 } else { 1.0 }],
            Self::AxisColatitude(u) => {
                let r = norm(x);
                if r == 0.0 {
                    return vec![0.0, 0.0];
                }
                let c = (u[0] * x[0] + u[1] * x[1] + u[2] * x[2]) / (r * u.norm());
                vec![c.clamp(-1.0, 1.0).acos(), r]
            }
            Self::PlanarRadius(i, j) => {
                let mut out = Vec::with_capacity(x.len() - 1);
                for (k, &v) in x.iter().enumerate() {
                    if k == *i {
                        out.push(x[*i].hypot(x[*j]));
                    } else if k != *j {
                        out.push(v);
                    }
                }
                out
            }
            Self::FiniteOrbitCanonical { action, elements } => {
                let mut best = x.to_vec();
                let mut moved = vec![0.0; x.len()];
                for g in elements {
                    if action.act_into(g, x, &mut moved).is_ok() && lex(&moved, &best).is_lt() {
                        best.copy_from_slice(&moved);
                    }
                }
                best
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// A projected dataset and the rows dropped because the map is undefined there.
#[derive(Clone, Debug)]
pub struct Projected {
    pub data: RegressionDataset,
    pub dropped: Vec<usize>,
}

/// Replaces every feature row by its image; responses are kept.
pub fn project(data: &RegressionDataset, map: &ProjectionMap) -> Result<Projected, RegressionError> {
    map.check_dim(data.dim())?;
    let out_dim = map.output_dim(data.dim());
    let mut x = Vec::with_capacity(data.len() * out_dim);
    let mut y = Vec::with_capacity(data.len());
    let mut dropped = Vec::new();
    for (i, row) in data.rows().enumerate() {
        if map.is_defined(row) {
            x.extend(map.apply(row));
            y.push(data.response(i));
        } else {
            dropped.push(i);
        }
    }
    if !dropped.is_empty() {
        log::warn!("projection dropped {} rows where it is undefined", dropped.len());
    }
    Ok(Projected {
        data: RegressionDataset::from_flat(x, out_dim, y)?,
        dropped,
    })
}
