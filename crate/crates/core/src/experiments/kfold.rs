use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Non-randomized k-fold split: contiguous test blocks in dataset order,
/// sizes differing by at most one (the first `count % folds` blocks take the
/// extra item).
pub fn kfold_plan(count: usize, folds: usize) -> Result<Vec<Fold>> {
    if folds < 2 || folds > count {
        return Err(Error::Config(format!(
            "cannot split {count} items into {folds} folds (need 2 <= folds <= items)"
        )));
    }
    let base = count / folds;
    let extra = count % folds;
    let mut start = 0;
    Ok((0..folds)
        .map(|k| {
            let len = base + usize::from(k < extra);
            let test: Vec<usize> = (start..start + len).collect();
            let train = (0..start).chain(start + len..count).collect();
            start += len;
            Fold { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventy_into_seven() {
        let plan = kfold_plan(70, 7).unwrap();
        for (k, f) in plan.iter().enumerate() {
            assert_eq!(f.test, (k * 10..k * 10 + 10).collect::<Vec<_>>());
            assert_eq!(f.train.len(), 60);
        }
    }

    #[test]
    fn leave_one_out() {
        let plan = kfold_plan(5, 5).unwrap();
        for (k, f) in plan.iter().enumerate() {
            assert_eq!(f.test, vec![k]);
        }
    }

    #[test]
    fn no_empty_folds() {
        let plan = kfold_plan(10, 7).unwrap();
        assert!(plan.iter().all(|f| !f.test.is_empty()));
        let sizes: Vec<usize> = plan.iter().map(|f| f.test.len()).collect();
        assert_eq!(sizes, vec![2, 2, 2, 1, 1, 1, 1]);
    }

    #[test]
    fn bad_fold_counts() {
        assert!(kfold_plan(10, 1).is_err());
        assert!(kfold_plan(3, 4).is_err());
    }
}
