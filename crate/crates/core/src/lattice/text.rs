//! Plain-text lattice format.
//!
//! A lattice file is a group document (see [`crate::group::text`]) whose groups
//! are referenced by position, followed by node and cover lines:
//!
//! ```text
//! node <id> <group-index> <label>
//! cover <lower-id> <upper-id>
//! ```
//!
//! Node ids must be `0..n` in order. The order relation is the
//! reflexive-transitive closure of the covers, checked against whatever the
//! groups themselves decide.

use std::fmt::Write as _;

use super::{Lattice, LatticeError};
use crate::group::text::{parse_nums, render_group, split_head, GroupDocument, Lines};
use crate::group::GroupError;

fn err(line: usize, msg: impl Into<String>) -> LatticeError {
    LatticeError::Parse {
        line,
        msg: msg.into(),
    }
}

fn lift(e: GroupError) -> LatticeError {
    match e {
        GroupError::Parse { line, msg } => LatticeError::Parse { line, msg },
        other => LatticeError::Group(other),
    }
}

impl Lattice {
    pub fn to_text(&self) -> String {
        let doc = GroupDocument::from_groups(self.nodes().iter().map(|n| n.group.clone()).collect());
        let mut out = String::new();
        let tables_only = GroupDocument {
            tables: doc.tables.clone(),
            groups: Vec::new(),
        };
        out.push_str(&tables_only.render());
        for g in &doc.groups {
            render_group(&mut out, g, &doc.tables);
        }
        for n in self.nodes() {
            let _ = writeln!(out, "node {} {} {}", n.id, n.id, n.label);
        }
        for (a, b) in self.covers() {
            let _ = writeln!(out, "cover {a} {b}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Lattice, LatticeError> {
        let mut doc = GroupDocument::default();
        let mut lines = Lines::new(text);
        let mut nodes: Vec<(usize, String)> = Vec::new();
        let mut covers: Vec<(usize, usize)> = Vec::new();
        while let Some((ln, line)) = lines.next_line() {
            let (head, rest) = split_head(line);
            match head {
                "node" => {
                    let (id, rest) = split_head(rest);
                    let (gref, label) = split_head(rest);
                    let id: usize = id.parse().map_err(|_| err(ln, "bad node id"))?;
                    let gref: usize = gref.parse().map_err(|_| err(ln, "bad group index"))?;
                    if id != nodes.len() {
                        return Err(err(ln, format!("expected node id {}", nodes.len())));
                    }
                    if gref >= doc.groups.len() {
                        return Err(err(ln, format!("no group with index {gref}")));
                    }
                    if label.is_empty() {
                        return Err(err(ln, "node needs a label"));
                    }
                    nodes.push((gref, label.to_string()));
                }
                "cover" => {
                    let v: Vec<usize> = parse_nums(ln, rest).map_err(lift)?;
                    if v.len() != 2 || v[0] >= nodes.len() || v[1] >= nodes.len() {
                        return Err(err(ln, "cover needs two known node ids"));
                    }
                    covers.push((v[0], v[1]));
                }
                _ => doc.parse_block(ln, line, &mut lines).map_err(lift)?,
            }
        }
        let groups = nodes
            .into_iter()
            .map(|(g, label)| doc.groups[g].clone().with_label(label))
            .collect();
        let lat = Lattice::from_groups(groups, &covers)?;
        let mut declared: Vec<(usize, usize)> = covers;
        declared.sort_unstable();
        let mut got = lat.covers().to_vec();
        got.sort_unstable();
        if got != declared {
            return Err(err(0, "cover list is not the transitive reduction of the order"));
        }
        Ok(lat)
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn round_trips() {
        for lat in [d4_lattice().unwrap(), sl3_extended_lattice().unwrap(), klein_four_lattice().unwrap()] {
            let text = lat.to_text();
            let back = Lattice::from_text(&text).unwrap();
            assert_eq!(back.to_text(), text);
            assert_eq!(back.covers(), lat.covers());
        }
    }

    #[test]
    fn rejects_bad_cover() {
        let text = d4_lattice().unwrap().to_text().replace("cover 0 1\n", "cover 0 9\n");
        assert!(Lattice::from_text(&text).is_err());
    }
}
