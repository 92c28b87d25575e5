//! Task-sequence constructors: incremental class splits and pixel
//! permutations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::rng::{RngStream, StreamDomain};
use crate::scalar::Scalar;

use super::{Blueprint, Dataset, HeadMode, Task, TaskSequence};

fn subset_by_classes<T: Scalar>(ds: &Dataset<T>, classes: &[usize]) -> Dataset<T> {
    let local = |c: usize| classes.iter().position(|&g| g == c);
    let rows: Vec<usize> = ds
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| local(l).is_some())
        .map(|(i, _)| i)
        .collect();
    let features = ds.features.gather_rows(&rows);
    let labels = rows.iter().map(|&i| local(ds.labels[i]).unwrap()).collect();
    Dataset {
        features,
        labels,
        class_names: None,
    }
}

/// Splits a labeled train/test pair into tasks of `classes_per_task`
/// consecutive classes each. Task ids are 1-based; labels inside each task
/// are local, with the original class ids kept as `global_class_ids`.
pub fn split_incremental<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    classes_per_task: usize,
) -> Result<TaskSequence<T>> {
    split_incremental_shuffled(train, test, classes_per_task, None)
}

/// As [`split_incremental`], optionally shuffling the class order with a
/// seeded draw before grouping.
pub fn split_incremental_shuffled<T: Scalar>(
    train: &Dataset<T>,
    test: &Dataset<T>,
    classes_per_task: usize,
    shuffle_seed: Option<u64>,
) -> Result<TaskSequence<T>> {
    let n_classes = train.n_classes().max(test.n_classes());
    if classes_per_task == 0 || n_classes % classes_per_task != 0 {
        return Err(Error::InvalidInput(format!(
            "{n_classes} classes are not divisible into tasks of {classes_per_task}"
        )));
    }
    let mut order: Vec<usize> = (0..n_classes).collect();
    if let Some(seed) = shuffle_seed {
        RngStream::for_domain(seed, StreamDomain::Data, 0, 0).shuffle(&mut order);
    }

    let mut tasks = Vec::new();
    for (t, chunk) in order.chunks(classes_per_task).enumerate() {
        let classes = chunk.to_vec();
        tasks.push(Task {
            task_id: t + 1,
            train: subset_by_classes(train, &classes),
            test: subset_by_classes(test, &classes),
            global_class_ids: classes,
            head_dim: classes_per_task,
        });
    }
    TaskSequence::from_tasks(tasks, HeadMode::SingleHead, n_classes)
}

/// The pixel permutation for task `t` (1-based). Task 1 is the identity;
/// later tasks get a seeded Fisher-Yates permutation addressed by `(seed, t)`.
pub fn permutation_for(dim: usize, seed: u64, task: usize) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..dim as u32).collect();
    if task > 1 {
        RngStream::for_domain(seed, StreamDomain::Permutation, task as u64, 0).shuffle(&mut perm);
    }
    perm
}

/// Builds `n_tasks` permuted views of one dataset. Every task keeps all
/// classes and its own 10-way head; tasks are materialized lazily so long
/// sequences do not hold every permuted copy in memory at once.
pub fn permute_tasks<T: Scalar>(
    train: impl Into<Arc<Dataset<T>>>,
    test: impl Into<Arc<Dataset<T>>>,
    n_tasks: usize,
    seed: u64,
) -> Result<TaskSequence<T>> {
    if n_tasks == 0 {
        return Err(Error::InvalidInput("permuted sequence needs n_tasks >= 1".into()));
    }
    let base_train: Arc<Dataset<T>> = train.into();
    let base_test: Arc<Dataset<T>> = test.into();
    let n_classes = base_train.n_classes().max(base_test.n_classes());
    let dim = base_train.features.cols();
    let blueprints = (1..=n_tasks)
        .map(|t| Blueprint::Permuted {
            task_id: t,
            base_train: Arc::clone(&base_train),
            base_test: Arc::clone(&base_test),
            perm: permutation_for(dim, seed, t),
            n_classes,
        })
        .collect();
    Ok(TaskSequence::from_blueprints(
        blueprints,
        HeadMode::MultiHead,
        n_classes,
    ))
}
