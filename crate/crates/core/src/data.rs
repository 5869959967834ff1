//! Dense containers and labelled datasets.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sample / column-feature matrix used for inputs, targets, Gram
/// matrices, feature matrices and weights alike.
pub type DenseMatrix = Array2<f64>;

/// Builds a matrix from row vectors, rejecting ragged or non-finite input.
pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DenseMatrix> {
    let n_cols = rows.first().map_or(0, Vec::len);
    let mut values = Vec::with_capacity(rows.len() * n_cols);
    for row in rows {
        if row.len() != n_cols {
            return Err(Error::dims("matrix row length", n_cols, row.len()));
        }
        values.extend_from_slice(row);
    }
    let m = Array2::from_shape_vec((rows.len(), n_cols), values)
        .expect("row lengths checked above");
    check_finite(m.view())?;
    Ok(m)
}

/// Fails on the first NaN or infinite entry, reporting its position.
pub fn check_finite(m: ArrayView2<'_, f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Copies the listed rows, in order.
pub fn select_rows(m: ArrayView2<'_, f64>, rows: &[usize]) -> DenseMatrix {
    m.select(Axis(0), rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Regression,
    BinaryClassification,
}

/// Training pairs plus the task they describe.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    inputs: DenseMatrix,
    targets: DenseMatrix,
    task: Task,
}

impl Dataset {
    pub fn new(inputs: DenseMatrix, targets: DenseMatrix, task: Task) -> Result<Self> {
        if inputs.nrows() != targets.nrows() {
            return Err(Error::dims(
                "dataset targets rows",
                inputs.nrows(),
                targets.nrows(),
            ));
        }
        check_finite(inputs.view())?;
        check_finite(targets.view())?;
        if task == Task::BinaryClassification {
            if targets.ncols() != 1 {
                return Err(Error::dims("classification target columns", 1, targets.ncols()));
            }
            if let Some((i, v)) = targets
                .iter()
                .enumerate()
                .find(|(_, &v)| v != 1.0 && v != -1.0)
            {
                return Err(Error::InvalidData(format!(
                    "classification label {v} in row {i} is not -1 or +1"
                )));
            }
        }
        Ok(Self {
            inputs,
            targets,
            task,
        })
    }

    pub fn inputs(&self) -> &DenseMatrix {
        &self.inputs
    }

    pub fn targets(&self) -> &DenseMatrix {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn n_samples(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.targets.ncols()
    }

    /// Subset of samples, preserving the task.
    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            inputs: select_rows(self.inputs.view(), rows),
            targets: select_rows(self.targets.view(), rows),
            task: self.task,
        }
    }

    pub fn into_parts(self) -> (DenseMatrix, DenseMatrix, Task) {
        (self.inputs, self.targets, self.task)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_non_finite_rows() {
        let err = matrix_from_rows(&[vec![1.0, 2.0], vec![f64::NAN, 0.0]]).unwrap_err();
        assert_eq!(err, Error::NonFinite { row: 1, col: 0 });
        assert!(matrix_from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn classification_labels_are_validated() {
        let x = array![[0.0], [1.0]];
        assert!(Dataset::new(x.clone(), array![[1.0], [-1.0]], Task::BinaryClassification).is_ok());
        assert!(Dataset::new(x.clone(), array![[1.0], [0.0]], Task::BinaryClassification).is_err());
        assert!(Dataset::new(x.clone(), array![[1.0, 1.0], [-1.0, 1.0]], Task::BinaryClassification).is_err());
        assert!(Dataset::new(x, array![[1.0]], Task::Regression).is_err());
    }
}
