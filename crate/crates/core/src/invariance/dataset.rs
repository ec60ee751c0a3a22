use super::TestError;

/// Paired features and responses, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionDataset {
    x: Vec<f64>,
    y: Vec<f64>,
    dim: usize,
}

impl RegressionDataset {
    /// `x` holds `y.len()` rows of length `dim`, back to back.
    pub fn from_flat(x: Vec<f64>, dim: usize, y: Vec<f64>) -> Result<Self, TestError> {
        let n = y.len();
        if n < 2 {
            return Err(TestError::InvalidData(format!("need at least 2 rows, got {n}")));
        }
        if dim == 0 || x.len() != n * dim {
            return Err(TestError::InvalidData(format!(
                "feature array of length {} does not hold {n} rows of dimension {dim}",
                x.len()
            )));
        }
        if let Some(p) = x.iter().position(|v| !v.is_finite()) {
            return Err(TestError::InvalidData(format!("non-finite feature in row {}", p / dim)));
        }
        if let Some(p) = y.iter().position(|v| !v.is_finite()) {
            return Err(TestError::InvalidData(format!("non-finite response in row {p}")));
        }
        Ok(Self { x, y, dim })
    }

    pub fn from_rows(rows: &[Vec<f64>], y: Vec<f64>) -> Result<Self, TestError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.len() != y.len() {
            return Err(TestError::InvalidData("row and response counts differ".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(TestError::InvalidData("rows have different lengths".into()));
        }
        Self::from_flat(rows.concat(), dim, y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.x.chunks_exact(self.dim)
    }

    pub fn features(&self) -> &[f64] {
        &self.x
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    pub fn response(&self, i: usize) -> f64 {
        self.y[i]
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, TestError> {
        let mut x = Vec::with_capacity(indices.len() * self.dim);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            x.extend_from_slice(self.row(i));
            y.push(self.y[i]);
        }
        Self::from_flat(x, self.dim, y)
    }
}

/// Euclidean distance.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RegressionDataset::from_flat(vec![1.0], 1, vec![1.0]).is_err());
        assert!(RegressionDataset::from_flat(vec![1.0, f64::NAN], 1, vec![1.0, 2.0]).is_err());
        assert!(RegressionDataset::from_flat(vec![1.0, 2.0, 3.0], 2, vec![1.0, 2.0]).is_err());
        let d = RegressionDataset::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], vec![0.0, 1.0]).unwrap();
        assert_eq!(d.row(1), &[3.0, 4.0]);
        assert_eq!(d.subset(&[1, 1]).unwrap().responses(), &[1.0, 1.0]);
    }
}
