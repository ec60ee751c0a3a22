//! Plain-text serialization of groups.
//!
//! ```text
//! table t0
//! element I
//! element r1
//! row 0 1
//! row 1 0
//! end
//! group C2
//! finite t0 0 1
//! end
//! group S1 about z
//! circle axis 0.0 0.0 1.0
//! order 11
//! end
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. A `group` block holds
//! exactly one kind line (`finite`, `circle`, `so3`, `sl3`, `translation`,
//! `permutation`, `identity`) followed by optional `order`, `vector` or
//! `generator` lines.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};

use super::{CayleyTable, GroupDescriptor, GroupElement, GroupError, GroupKind, RotationAxis};

/// Tables and groups read from one text document.
#[derive(Clone, Debug, Default)]
pub struct GroupDocument {
    pub tables: Vec<(String, Arc<CayleyTable>)>,
    pub groups: Vec<GroupDescriptor>,
}

pub(crate) struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    pub(crate) fn new(text: &'a str) -> Self {
        Self {
            inner: text.lines().enumerate().peekable(),
        }
    }

    /// Next meaningful line as (1-based line number, trimmed text).
    pub(crate) fn next_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            let t = raw.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> GroupError {
    GroupError::Parse {
        line,
        msg: msg.into(),
    }
}

pub(crate) fn split_head(s: &str) -> (&str, &str) {
    match s.split_once(char::is_whitespace) {
        Some((h, rest)) => (h, rest.trim()),
        None => (s, ""),
    }
}

pub(crate) fn parse_nums<T: std::str::FromStr>(line: usize, s: &str) -> Result<Vec<T>, GroupError> {
    s.split_whitespace()
        .map(|tok| tok.parse::<T>().map_err(|_| parse_err(line, format!("bad number '{tok}'"))))
        .collect()
}

impl GroupDocument {
    pub fn parse(text: &str) -> Result<Self, GroupError> {
        let mut lines = Lines::new(text);
        let mut doc = GroupDocument::default();
        while let Some((ln, line)) = lines.next_line() {
            doc.parse_block(ln, line, &mut lines)?;
        }
        Ok(doc)
    }

    pub(crate) fn table(&self, name: &str) -> Option<&Arc<CayleyTable>> {
        self.tables.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    /// Parses a `table` or `group` block starting at `line`.
    pub(crate) fn parse_block(
        &mut self,
        ln: usize,
        line: &str,
        lines: &mut Lines<'_>,
    ) -> Result<(), GroupError> {
        let (head, rest) = split_head(line);
        match head {
            "table" => {
                if rest.is_empty() || self.table(rest).is_some() {
                    return Err(parse_err(ln, "table needs a fresh name"));
                }
                let table = parse_table(ln, lines)?;
                self.tables.push((rest.to_string(), Arc::new(table)));
            }
            "group" => {
                let g = self.parse_group(ln, rest, lines)?;
                self.groups.push(g);
            }
            other => return Err(parse_err(ln, format!("expected 'table' or 'group', found '{other}'"))),
        }
        Ok(())
    }

    fn parse_group(&self, start: usize, label: &str, lines: &mut Lines<'_>) -> Result<GroupDescriptor, GroupError> {
        let mut kind_line: Option<(usize, String)> = None;
        let mut order: Option<usize> = None;
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        let mut gens: Vec<Vec<usize>> = Vec::new();
        loop {
            let (ln, line) = lines
                .next_line()
                .ok_or_else(|| parse_err(start, "group block is missing 'end'"))?;
            let (head, rest) = split_head(line);
            match head {
                "end" => break,
                "order" => {
                    order = Some(
                        rest.parse()
                            .map_err(|_| parse_err(ln, "order must be a positive integer"))?,
                    )
                }
                "vector" => vectors.push(parse_nums(ln, rest)?),
                "generator" => gens.push(parse_nums(ln, rest)?),
                _ => {
                    if kind_line.is_some() {
                        return Err(parse_err(ln, format!("unexpected line '{line}'")));
                    }
                    kind_line = Some((ln, line.to_string()));
                }
            }
        }
        let (ln, kind_line) = kind_line.ok_or_else(|| parse_err(start, "group block has no kind line"))?;
        let (head, rest) = split_head(&kind_line);
        let wrap = |e: GroupError| parse_err(ln, e.to_string());
        let group = match head {
            "finite" => {
                let (name, members) = split_head(rest);
                let table = self
                    .table(name)
                    .ok_or_else(|| parse_err(ln, format!("unknown table '{name}'")))?;
                let members = parse_nums::<usize>(ln, members)?.into_iter().collect();
                GroupDescriptor::from_members(table, members, label).map_err(wrap)?
            }
            "circle" => {
                let about = parse_about(ln, rest)?;
                match order {
                    Some(k) => GroupDescriptor::cyclic_rotation(about, k, label).map_err(wrap)?,
                    None => GroupDescriptor::circle(about, label),
                }
            }
            "so3" => GroupDescriptor::so3(label),
            "sl3" => GroupDescriptor::sl3(label),
            "translation" => {
                let dim: usize = rest.parse().map_err(|_| parse_err(ln, "translation needs a dimension"))?;
                GroupDescriptor::translations(dim, vectors, label).map_err(wrap)?
            }
            "permutation" => GroupDescriptor::permutations(gens, label).map_err(wrap)?,
            "identity" => {
                let id = self.parse_identity(ln, rest)?;
                GroupDescriptor::trivial(id, label).map_err(wrap)?
            }
            other => return Err(parse_err(ln, format!("unknown group kind '{other}'"))),
        };
        Ok(group)
    }

    fn parse_identity(&self, ln: usize, spec: &str) -> Result<GroupElement, GroupError> {
        let (head, rest) = split_head(spec);
        let num = |s: &str| -> Result<usize, GroupError> {
            s.parse().map_err(|_| parse_err(ln, "expected a dimension"))
        };
        Ok(match head {
            "finite" => {
                let table = self
                    .table(rest)
                    .ok_or_else(|| parse_err(ln, format!("unknown table '{rest}'")))?;
                GroupElement::Finite {
                    table: Arc::clone(table),
                    index: table.identity(),
                }
            }
            "matrix" => GroupElement::RotationMatrix(Matrix3::identity()),
            "special-linear" => GroupElement::SpecialLinear(Matrix3::identity()),
            "circle" => match parse_about(ln, rest)? {
                RotationAxis::Axis(u) => GroupElement::AxisRotation { axis: u, angle: 0.0 },
                RotationAxis::Plane(i, j) => GroupElement::PlanarRotation {
                    angle: 0.0,
                    plane: (i, j),
                },
            },
            "translation" => GroupElement::Translation(vec![0.0; num(rest)?]),
            "permutation" => GroupElement::Permutation((0..num(rest)?).collect()),
            other => return Err(parse_err(ln, format!("unknown identity kind '{other}'"))),
        })
    }

    /// Renders the document; tables first, then groups.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (name, table) in &self.tables {
            render_table(&mut out, name, table);
        }
        for g in &self.groups {
            render_group(&mut out, g, &self.tables);
        }
        out
    }

    /// Collects the tables referenced by `groups` and names them `t0, t1, ...`.
    pub fn from_groups(groups: Vec<GroupDescriptor>) -> Self {
        let mut tables: Vec<(String, Arc<CayleyTable>)> = Vec::new();
        for g in &groups {
            let t = match g.kind() {
                GroupKind::Finite { table, .. } => Some(table),
                GroupKind::Trivial {
                    identity: GroupElement::Finite { table, .. },
                } => Some(table),
                _ => None,
            };
            if let Some(t) = t {
                if !tables.iter().any(|(_, u)| **u == **t) {
                    tables.push((format!("t{}", tables.len()), Arc::clone(t)));
                }
            }
        }
        Self { tables, groups }
    }
}

fn parse_about(ln: usize, s: &str) -> Result<RotationAxis, GroupError> {
    let (head, rest) = split_head(s);
    match head {
        "axis" => {
            let v: Vec<f64> = parse_nums(ln, rest)?;
            if v.len() != 3 {
                return Err(parse_err(ln, "axis needs three coordinates"));
            }
            RotationAxis::axis(Vector3::new(v[0], v[1], v[2])).map_err(|e| parse_err(ln, e.to_string()))
        }
        "plane" => {
            let v: Vec<usize> = parse_nums(ln, rest)?;
            if v.len() != 2 {
                return Err(parse_err(ln, "plane needs two coordinate indices"));
            }
            RotationAxis::plane(v[0], v[1]).map_err(|e| parse_err(ln, e.to_string()))
        }
        _ => Err(parse_err(ln, "expected 'axis' or 'plane'")),
    }
}

fn parse_table(start: usize, lines: &mut Lines<'_>) -> Result<CayleyTable, GroupError> {
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    loop {
        let (ln, line) = lines
            .next_line()
            .ok_or_else(|| parse_err(start, "table block is missing 'end'"))?;
        let (head, rest) = split_head(line);
        match head {
            "end" => break,
            "element" if !rest.is_empty() => labels.push(rest.to_string()),
            "row" => rows.push(parse_nums(ln, rest)?),
            _ => return Err(parse_err(ln, format!("unexpected line '{line}'"))),
        }
    }
    CayleyTable::new(labels, rows).map_err(|e| parse_err(start, e.to_string()))
}

fn render_table(out: &mut String, name: &str, t: &CayleyTable) {
    let _ = writeln!(out, "table {name}");
    for l in t.labels() {
        let _ = writeln!(out, "element {l}");
    }
    for row in t.rows() {
        let cells: Vec<String> = row.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "row {}", cells.join(" "));
    }
    out.push_str("end\n");
}

fn render_about(about: &RotationAxis) -> String {
    match about {
        RotationAxis::Axis(u) => format!("axis {:?} {:?} {:?}", u.x, u.y, u.z),
        RotationAxis::Plane(i, j) => format!("plane {i} {j}"),
    }
}

fn table_name<'a>(tables: &'a [(String, Arc<CayleyTable>)], t: &CayleyTable) -> &'a str {
    tables
        .iter()
        .find(|(_, u)| **u == *t)
        .map(|(n, _)| n.as_str())
        .unwrap_or("?")
}

pub(crate) fn render_group(out: &mut String, g: &GroupDescriptor, tables: &[(String, Arc<CayleyTable>)]) {
    let _ = writeln!(out, "group {}", g.label());
    match g.kind() {
        GroupKind::Trivial { identity } => {
            let spec = match identity {
                GroupElement::Finite { table, .. } => format!("finite {}", table_name(tables, table)),
                GroupElement::PlanarRotation { plane, .. } => format!("circle plane {} {}", plane.0, plane.1),
                GroupElement::AxisRotation { axis, .. } => {
                    format!("circle {}", render_about(&RotationAxis::Axis(*axis)))
                }
                GroupElement::RotationMatrix(_) => "matrix".into(),
                GroupElement::SpecialLinear(_) => "special-linear".into(),
                GroupElement::Translation(v) => format!("translation {}", v.len()),
                GroupElement::Permutation(p) => format!("permutation {}", p.len()),
            };
            let _ = writeln!(out, "identity {spec}");
        }
        GroupKind::Finite { table, members } => {
            let m: Vec<String> = members.iter().map(usize::to_string).collect();
            let _ = writeln!(out, "finite {} {}", table_name(tables, table), m.join(" "));
        }
        GroupKind::Circle { about, order } => {
            let _ = writeln!(out, "circle {}", render_about(about));
            if let Some(k) = order {
                let _ = writeln!(out, "order {k}");
            }
        }
        GroupKind::SpecialOrthogonal3 => out.push_str("so3\n"),
        GroupKind::SpecialLinear3 => out.push_str("sl3\n"),
        GroupKind::Translation { dim, basis } => {
            let _ = writeln!(out, "translation {dim}");
            for b in basis {
                let cells: Vec<String> = b.iter().map(|v| format!("{v:?}")).collect();
                let _ = writeln!(out, "vector {}", cells.join(" "));
            }
        }
        GroupKind::Permutation { .. } => {
            out.push_str("permutation\n");
            for gen in g.generators() {
                if let GroupElement::Permutation(p) = gen {
                    let cells: Vec<String> = p.iter().map(usize::to_string).collect();
                    let _ = writeln!(out, "generator {}", cells.join(" "));
                }
            }
        }
    }
    out.push_str("end\n");
}

/// Index of each group's table in `tables`, keyed by label, for callers that
/// need to resolve references after parsing.
pub fn tables_by_name(doc: &GroupDocument) -> HashMap<&str, &Arc<CayleyTable>> {
    doc.tables.iter().map(|(n, t)| (n.as_str(), t)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_mixed_groups() {
        let d4 = Arc::new(CayleyTable::dihedral4());
        let groups = vec![
            GroupDescriptor::finite_generated(&d4, &[2], "<R_pi>").unwrap(),
            GroupDescriptor::finite_generated(&d4, &[], "I").unwrap(),
            GroupDescriptor::cyclic_rotation(RotationAxis::axis(Vector3::new(0.3, 0.1, 1.0)).unwrap(), 11, "C11").unwrap(),
            GroupDescriptor::circle(RotationAxis::plane(0, 2).unwrap(), "S1 plane"),
            GroupDescriptor::so3("SO(3)"),
            GroupDescriptor::sl3("SL(3)"),
            GroupDescriptor::translations(3, vec![vec![1.0, 0.5, 0.0]], "T").unwrap(),
            GroupDescriptor::permutations(vec![vec![1, 0, 2]], "swap").unwrap(),
            GroupDescriptor::trivial(GroupElement::Permutation(vec![0, 1, 2]), "I3").unwrap(),
        ];
        let doc = GroupDocument::from_groups(groups);
        let text = doc.render();
        let back = GroupDocument::parse(&text).unwrap();
        assert_eq!(back.render(), text);
        assert_eq!(back.groups.len(), 9);
        assert_eq!(back.groups[0].order(), Some(2));
        assert_eq!(back.groups[2].order(), Some(11));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "table t\nelement e\nrow 0\nend\ngroup G\nfinite u 0\nend\n";
        match GroupDocument::parse(text) {
            Err(GroupError::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("{other:?}"),
        }
        assert!(GroupDocument::parse("group G\nso3\n").is_err());
    }
}
