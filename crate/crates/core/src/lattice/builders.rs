use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use super::{Lattice, LatticeError};
use crate::group::{
    ActionKind, CayleyTable, GroupAction, GroupDescriptor, GroupElement, GroupError, RotationAxis,
};

/// The ten subgroups of the symmetries of the square, acting on R^2.
///
/// Node order: `I`, `<R_h>`, `<R_v>`, `<R_pi>`, `<R_/>`, `<R_\>`, `<R_h,R_pi>`,
/// `<R_pi/2>`, `<R_/,R_pi>`, `D4`.
pub fn d4_lattice() -> Result<Lattice, LatticeError> {
    let table = Arc::new(CayleyTable::dihedral4());
    let idx = |l: &str| table.index_of(l).expect("D4 label");
    let spec: [(&str, Vec<&str>); 10] = [
        ("I", vec![]),
        ("<R_h>", vec!["R_h"]),
        ("<R_v>", vec!["R_v"]),
        ("<R_pi>", vec!["R_pi"]),
        ("<R_/>", vec!["R_/"]),
        ("<R_\\>", vec!["R_\\"]),
        ("<R_h,R_pi>", vec!["R_h", "R_pi"]),
        ("<R_pi/2>", vec!["R_pi/2"]),
        ("<R_/,R_pi>", vec!["R_/", "R_pi"]),
        ("D4", vec!["R_pi/2", "R_h"]),
    ];
    let groups = spec
        .iter()
        .map(|(label, gens)| {
            let g: Vec<usize> = gens.iter().map(|l| idx(l)).collect();
            GroupDescriptor::finite_generated(&table, &g, *label)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let action = GroupAction::dihedral4_plane(&table)?;
    Ok(Lattice::from_groups(groups, &[])?.with_action(action))
}

/// Every subgroup of a finite table (order at most 16), found by brute force.
///
/// Labels list the member element labels in braces.
pub fn full_subgroup_lattice(table: &Arc<CayleyTable>) -> Result<Lattice, LatticeError> {
    let subs = table.subgroups_brute_force()?;
    let labelled = subs
        .into_iter()
        .map(|m| {
            let names: Vec<&str> = m.iter().map(|&i| table.label(i)).collect();
            let label = format!("{{{}}}", names.join(","));
            (m, label)
        })
        .collect();
    Lattice::from_finite_subgroups(table, labelled)
}

/// The lattice of all subgroups of `C_2 x C_2`.
pub fn klein_four_lattice() -> Result<Lattice, LatticeError> {
    let table = Arc::new(CayleyTable::abelian_product(&[2, 2])?);
    full_subgroup_lattice(&table)
}

/// Chain `C_{o1} < C_{o2} < ...` inside `C_max`, labelled `I`, `C2`, ...
///
/// `orders` must start at 1 and each must divide the next.
pub fn cyclic_chain_lattice(orders: &[usize]) -> Result<Lattice, LatticeError> {
    let bad = || LatticeError::Group(GroupError::InvalidDescriptor(
        "orders must start at 1, increase, and divide one another".into(),
    ));
    if orders.first() != Some(&1) || orders.windows(2).any(|w| w[1] <= w[0] || w[1] % w[0] != 0) {
        return Err(bad());
    }
    let max = *orders.last().expect("nonempty");
    let table = Arc::new(CayleyTable::cyclic(max)?);
    let groups = orders
        .iter()
        .map(|&k| {
            let label = if k == 1 { "I".to_string() } else { format!("C{k}") };
            let gens: Vec<usize> = if k == 1 { vec![] } else { vec![max / k] };
            GroupDescriptor::finite_generated(&table, &gens, label)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Lattice::from_groups(groups, &[])
}

/// The six axes through opposite vertices of a regular icosahedron.
///
/// Vertices are the cyclic permutations of `(0, +-1, +-phi)`; none of the axes is
/// a coordinate axis.
pub fn icosahedral_axes() -> Vec<Vector3<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    [
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect()
}

/// `I`, one rotation group per axis, and optionally `SO(3)` on top, acting on R^3.
///
/// Each axis node is the circle `S^1_u` when `cyclic_order` is `None` and the
/// cyclic group of rotations by `2 pi / k` otherwise. Without the top, more
/// than one axis has no unique top and is rejected.
pub fn so3_axes_lattice_with(
    axes: &[Vector3<f64>],
    include_top: bool,
    cyclic_order: Option<usize>,
) -> Result<Lattice, LatticeError> {
    let mut groups = vec![GroupDescriptor::trivial(
        GroupElement::RotationMatrix(Matrix3::identity()),
        "I",
    )?];
    for (k, u) in axes.iter().enumerate() {
        let about = RotationAxis::axis(*u)?;
        let g = match cyclic_order {
            None => GroupDescriptor::circle(about, format!("S1_u{}", k + 1)),
            Some(ord) => GroupDescriptor::cyclic_rotation(about, ord, format!("C{ord}_u{}", k + 1))?,
        };
        groups.push(g);
    }
    if include_top {
        groups.push(GroupDescriptor::so3("SO(3)"));
    }
    let action = GroupAction::new(GroupDescriptor::so3("SO(3)"), 3, ActionKind::MatrixMultiply)?;
    Ok(Lattice::from_groups(groups, &[])?.with_action(action))
}

/// [`so3_axes_lattice_with`] using circle groups.
pub fn so3_axes_lattice(axes: &[Vector3<f64>], include_top: bool) -> Result<Lattice, LatticeError> {
    so3_axes_lattice_with(axes, include_top, None)
}

/// The icosahedral `SO(3)` lattice with `SL(3)` added on top, acting on R^3.
pub fn sl3_extended_lattice() -> Result<Lattice, LatticeError> {
    let base = so3_axes_lattice(&icosahedral_axes(), true)?;
    let lat = base.add_top(GroupDescriptor::sl3("SL(3)"))?;
    let action = GroupAction::new(GroupDescriptor::sl3("SL(3)"), 3, ActionKind::MatrixMultiply)?;
    Ok(lat.with_action(action))
}

/// Membership sets of the finite nodes, for cross-checks against brute force.
pub fn member_sets(lat: &Lattice) -> Vec<Option<BTreeSet<usize>>> {
    lat.nodes()
        .iter()
        .map(|n| n.group.finite_members().map(|(_, m)| m.clone()))
        .collect()
}
