//! Finite groups stored as labelled Cayley tables.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::GroupError;

/// Largest order for which associativity is checked exhaustively on construction.
pub const EXHAUSTIVE_ASSOCIATIVITY_LIMIT: usize = 64;

/// Largest order for which [`CayleyTable::subgroups_brute_force`] will run.
pub const BRUTE_FORCE_SUBGROUP_LIMIT: usize = 16;

/// A finite group given by its multiplication table.
///
/// `table[a][b]` is the index of the product `ab`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CayleyTable {
    labels: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverse: Vec<usize>,
}

impl CayleyTable {
    /// Validates and wraps a multiplication table.
    ///
    /// Checks: square shape, an identity row and column, every row and column a
    /// permutation, distinct labels, and associativity (exhaustive up to order 64).
    pub fn new(labels: Vec<String>, table: Vec<Vec<usize>>) -> Result<Self, GroupError> {
        let n = labels.len();
        if n == 0 {
            return Err(GroupError::InvalidTable("empty group".into()));
        }
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(GroupError::InvalidTable(format!("table must be {n}x{n}")));
        }
        let distinct: BTreeSet<&String> = labels.iter().collect();
        if distinct.len() != n {
            return Err(GroupError::InvalidTable("duplicate element labels".into()));
        }
        for row in &table {
            let seen: BTreeSet<usize> = row.iter().copied().collect();
            if seen.len() != n || row.iter().any(|&v| v >= n) {
                return Err(GroupError::InvalidTable("row is not a permutation".into()));
            }
        }
        for col in 0..n {
            let seen: BTreeSet<usize> = (0..n).map(|r| table[r][col]).collect();
            if seen.len() != n {
                return Err(GroupError::InvalidTable("column is not a permutation".into()));
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|g| table[e][g] == g && table[g][e] == g))
            .ok_or_else(|| GroupError::InvalidTable("no identity element".into()))?;
        if n <= EXHAUSTIVE_ASSOCIATIVITY_LIMIT {
            for a in 0..n {
                for b in 0..n {
                    let ab = table[a][b];
                    for c in 0..n {
                        if table[ab][c] != table[a][table[b][c]] {
                            return Err(GroupError::InvalidTable(format!(
                                "not associative at ({}, {}, {})",
                                labels[a], labels[b], labels[c]
                            )));
                        }
                    }
                }
            }
        }
        let inverse = (0..n)
            .map(|g| (0..n).find(|&h| table[g][h] == identity).unwrap())
            .collect();
        Ok(Self {
            labels,
            table,
            identity,
            inverse,
        })
    }

    /// Builds the table of a finite matrix group by multiplying representatives.
    ///
    /// Products are matched to the listed matrices within `1e-9` in max norm.
    pub fn from_matrices(labels: Vec<String>, matrices: &[DMatrix<f64>]) -> Result<Self, GroupError> {
        if labels.len() != matrices.len() {
            return Err(GroupError::InvalidTable("label/matrix count mismatch".into()));
        }
        let n = matrices.len();
        let mut table = vec![vec![0; n]; n];
        for a in 0..n {
            for b in 0..n {
                let prod = &matrices[a] * &matrices[b];
                let hit = matrices
                    .iter()
                    .position(|m| m.shape() == prod.shape() && (m - &prod).amax() <= 1e-9)
                    .ok_or_else(|| {
                        GroupError::InvalidTable(format!(
                            "product {}*{} is not in the list",
                            labels[a], labels[b]
                        ))
                    })?;
                table[a][b] = hit;
            }
        }
        Self::new(labels, table)
    }

    /// The cyclic group `C_n` with elements `r0 .. r{n-1}`; `rk * rl = r{(k+l) mod n}`.
    pub fn cyclic(n: usize) -> Result<Self, GroupError> {
        if n == 0 {
            return Err(GroupError::InvalidTable("cyclic group of order 0".into()));
        }
        let labels = (0..n).map(|k| format!("r{k}")).collect();
        let table = (0..n)
            .map(|a| (0..n).map(|b| (a + b) % n).collect())
            .collect();
        Self::new(labels, table)
    }

    /// Direct product `C_{n1} x ... x C_{nk}`, elements labelled `(a1,...,ak)`.
    pub fn abelian_product(orders: &[usize]) -> Result<Self, GroupError> {
        if orders.is_empty() || orders.contains(&0) {
            return Err(GroupError::InvalidTable("invalid factor orders".into()));
        }
        let total: usize = orders.iter().product();
        let digits = |mut idx: usize| {
            let mut out = vec![0; orders.len()];
            for (pos, &o) in orders.iter().enumerate().rev() {
                out[pos] = idx % o;
                idx /= o;
            }
            out
        };
        let index = |d: &[usize]| d.iter().zip(orders).fold(0, |acc, (&v, &o)| acc * o + v);
        let labels = (0..total)
            .map(|i| {
                let d = digits(i);
                let inner: Vec<String> = d.iter().map(|v| v.to_string()).collect();
                format!("({})", inner.join(","))
            })
            .collect();
        let table = (0..total)
            .map(|a| {
                let da = digits(a);
                (0..total)
                    .map(|b| {
                        let db = digits(b);
                        let sum: Vec<usize> = da
                            .iter()
                            .zip(&db)
                            .zip(orders)
                            .map(|((x, y), o)| (x + y) % o)
                            .collect();
                        index(&sum)
                    })
                    .collect()
            })
            .collect();
        Self::new(labels, table)
    }

    /// The symmetries of the square acting on the plane.
    ///
    /// Element order: `I, R_pi/2, R_pi, R_3pi/2, R_h, R_v, R_/, R_\`. `R_h` reflects
    /// across the horizontal axis, `R_v` across the vertical axis, `R_/` across the
    /// diagonal `y = x` and `R_\` across `y = -x`.
    pub fn dihedral4() -> Self {
        let (labels, mats) = dihedral4_matrices();
        Self::from_matrices(labels, &mats).expect("D4 matrices form a group")
    }

    pub fn order(&self) -> usize {
        self.labels.len()
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inv(&self, a: usize) -> usize {
        self.inverse[a]
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Smallest subgroup containing `generators`.
    pub fn closure(&self, generators: &[usize]) -> BTreeSet<usize> {
        let mut members: BTreeSet<usize> = BTreeSet::from([self.identity]);
        let mut frontier: Vec<usize> = vec![self.identity];
        while let Some(g) = frontier.pop() {
            for &s in generators {
                let h = self.mul(g, s);
                if members.insert(h) {
                    frontier.push(h);
                }
            }
        }
        members
    }

    /// True when `set` contains the identity and is closed under products.
    pub fn is_subgroup(&self, set: &BTreeSet<usize>) -> bool {
        set.contains(&self.identity)
            && set
                .iter()
                .all(|&a| set.iter().all(|&b| set.contains(&self.mul(a, b))))
    }

    /// All subgroups, found by testing every subset that contains the identity.
    ///
    /// Only available up to order 16. Subgroups are returned sorted by
    /// (order, sorted member list).
    pub fn subgroups_brute_force(&self) -> Result<Vec<BTreeSet<usize>>, GroupError> {
        let n = self.order();
        if n > BRUTE_FORCE_SUBGROUP_LIMIT {
            return Err(GroupError::TooLarge(n));
        }
        let mut found = Vec::new();
        for mask in 0u32..(1u32 << n) {
            if mask & (1 << self.identity) == 0 {
                continue;
            }
            let set: BTreeSet<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            if self.is_subgroup(&set) {
                found.push(set);
            }
        }
        found.sort_by(|a, b| {
            a.len()
                .cmp(&b.len())
                .then_with(|| a.iter().cmp(b.iter()))
        });
        Ok(found)
    }
}

/// Labels and 2x2 matrices for the dihedral group of the square.
pub fn dihedral4_matrices() -> (Vec<String>, Vec<DMatrix<f64>>) {
    let m = |a: f64, b: f64, c: f64, d: f64| DMatrix::from_row_slice(2, 2, &[a, b, c, d]);
    let labels = ["I", "R_pi/2", "R_pi", "R_3pi/2", "R_h", "R_v", "R_/", "R_\\"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mats = vec![
        m(1.0, 0.0, 0.0, 1.0),
        m(0.0, -1.0, 1.0, 0.0),
        m(-1.0, 0.0, 0.0, -1.0),
        m(0.0, 1.0, -1.0, 0.0),
        m(1.0, 0.0, 0.0, -1.0),
        m(-1.0, 0.0, 0.0, 1.0),
        m(0.0, 1.0, 1.0, 0.0),
        m(0.0, -1.0, -1.0, 0.0),
    ];
    (labels, mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn d4_products() {
        let d4 = CayleyTable::dihedral4();
        let r90 = d4.index_of("R_pi/2").unwrap();
        let r180 = d4.index_of("R_pi").unwrap();
        assert_eq!(d4.mul(r90, r90), r180);
        for g in 0..8 {
            assert_eq!(d4.mul(g, d4.identity()), g);
        }
        assert_eq!(d4.order(), 8);
    }

    #[test]
    fn rejects_non_group() {
        let labels = vec!["a".to_string(), "b".to_string()];
        let err = CayleyTable::new(labels, vec![vec![0, 0], vec![1, 1]]);
        assert!(err.is_err());
    }

    #[test]
    fn subgroup_counts() {
        assert_eq!(CayleyTable::dihedral4().subgroups_brute_force().unwrap().len(), 10);
        assert_eq!(CayleyTable::cyclic(12).unwrap().subgroups_brute_force().unwrap().len(), 6);
        assert_eq!(
            CayleyTable::abelian_product(&[2, 2]).unwrap().subgroups_brute_force().unwrap().len(),
            5
        );
        assert!(CayleyTable::cyclic(17).unwrap().subgroups_brute_force().is_err());
    }
}
