use std::collections::HashSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A set of N feature vectors of dimension D, one per row.
///
/// Rows are videos (or frames, for FID). Entries are always finite and stored as `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: DMatrix<f64>,
    ids: Option<Vec<String>>,
    extractor_tag: String,
}

impl FeatureMatrix {
    pub fn new(
        data: DMatrix<f64>,
        ids: Option<Vec<String>>,
        extractor_tag: impl Into<String>,
    ) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidInput(format!(
                "feature matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        // column-major storage: index = col * nrows + row
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput {
                row: pos % data.nrows(),
                col: pos / data.nrows(),
            });
        }
        if let Some(ids) = &ids {
            check_ids(ids, data.nrows())?;
        }
        Ok(Self {
            data,
            ids,
            extractor_tag: extractor_tag.into(),
        })
    }

    /// Builds a matrix from row vectors. All rows must have the same length.
    pub fn from_rows(
        rows: &[Vec<f64>],
        ids: Option<Vec<String>>,
        extractor_tag: impl Into<String>,
    ) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::dims(format!("row length {d}"), bad.len()));
        }
        let data = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
        Self::new(data, ids, extractor_tag)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn ids(&self) -> Option<&[String]> {
        self.ids.as_deref()
    }

    pub fn extractor_tag(&self) -> &str {
        &self.extractor_tag
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    /// Id of row `i`, falling back to its index when the matrix carries no ids.
    pub fn row_label(&self, i: usize) -> String {
        match &self.ids {
            Some(ids) => ids[i].clone(),
            None => format!("#{i}"),
        }
    }

    /// Gathers the given rows (repeats allowed). Ids of repeated rows get a `~n` suffix
    /// so the result still satisfies the uniqueness invariant.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("cannot select zero rows".into()));
        }
        let n = self.rows();
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidInput(format!("row index {bad} out of range for {n} rows")));
        }
        let data = self.data.select_rows(indices.iter());
        let ids = self.ids.as_ref().map(|ids| {
            let mut seen = vec![0usize; n];
            indices
                .iter()
                .map(|&i| {
                    seen[i] += 1;
                    if seen[i] == 1 {
                        ids[i].clone()
                    } else {
                        format!("{}~{}", ids[i], seen[i] - 1)
                    }
                })
                .collect()
        });
        Ok(Self {
            data,
            ids,
            extractor_tag: self.extractor_tag.clone(),
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.extractor_tag = tag.into();
        self
    }

    pub fn into_parts(self) -> (DMatrix<f64>, Option<Vec<String>>, String) {
        (self.data, self.ids, self.extractor_tag)
    }
}

pub(crate) fn check_ids(ids: &[String], rows: usize) -> Result<()> {
    if ids.len() != rows {
        return Err(Error::IdCountMismatch {
            ids: ids.len(),
            rows,
        });
    }
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(Error::DuplicateId(id.clone()));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan_with_position() {
        let err = FeatureMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, f64::NAN]], None, "t")
            .unwrap_err();
        assert!(matches!(err, Error::NonFiniteInput { row: 1, col: 1 }));
    }

    #[test]
    fn rejects_empty_and_ragged() {
        assert!(FeatureMatrix::from_rows(&[], None, "t").is_err());
        assert!(FeatureMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]], None, "t").is_err());
    }

    #[test]
    fn id_invariants() {
        let rows = vec![vec![1.0], vec![2.0]];
        let dup = FeatureMatrix::from_rows(&rows, Some(vec!["a".into(), "a".into()]), "t");
        assert!(matches!(dup, Err(Error::DuplicateId(_))));
        let short = FeatureMatrix::from_rows(&rows, Some(vec!["a".into()]), "t");
        assert!(matches!(short, Err(Error::IdCountMismatch { ids: 1, rows: 2 })));
    }

    #[test]
    fn select_rows_keeps_ids_unique() {
        let fm = FeatureMatrix::from_rows(
            &[vec![1.0], vec![2.0]],
            Some(vec!["a".into(), "b".into()]),
            "t",
        )
        .unwrap();
        let sel = fm.select_rows(&[1, 1, 0]).unwrap();
        assert_eq!(sel.ids().unwrap(), ["b", "b~1", "a"]);
        assert_eq!(sel.row(1), vec![2.0]);
    }
}
