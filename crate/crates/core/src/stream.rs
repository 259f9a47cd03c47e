//! Class-incremental task splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabelAccess};
use crate::error::{R2rError, Result};

/// One task: a class subset and the dataset indices of its train and test images.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    /// 1-based position in the stream.
    pub index: usize,
    pub classes: Vec<usize>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskStream {
    tasks: Vec<Task>,
}

impl TaskStream {
    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    /// Task `t`, 1-based.
    pub fn task(&self, t: usize) -> Result<&Task> {
        t.checked_sub(1)
            .and_then(|i| self.tasks.get(i))
            .ok_or_else(|| R2rError::invalid("task", format!("{t} not in 1..={}", self.tasks.len())))
    }

    /// Test indices of tasks `1..=t`, in task order.
    pub fn cumulative_test(&self, t: usize) -> Result<Vec<usize>> {
        self.task(t)?;
        Ok(self.tasks[..t].iter().flat_map(|k| k.test.iter().copied()).collect())
    }

    pub fn classes_seen(&self, t: usize) -> Result<Vec<usize>> {
        self.task(t)?;
        Ok(self.tasks[..t].iter().flat_map(|k| k.classes.iter().copied()).collect())
    }
}

/// Partitions the dataset's classes into `tasks` disjoint subsets.
///
/// Classes are taken in natural order, or permuted by `shuffle_seed`. With a class count
/// not divisible by `tasks`, the remainder classes go one each to the earliest tasks.
pub fn split_tasks(ds: &Dataset, tasks: usize, shuffle_seed: Option<u64>) -> Result<TaskStream> {
    let n = ds.num_classes();
    if tasks == 0 || tasks > n {
        return Err(R2rError::invalid("tasks", format!("{tasks} tasks for {n} classes")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = shuffle_seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let labels = ds.labels().reveal(&LabelAccess::grant("split"));
    let (base, extra) = (n / tasks, n % tasks);
    let mut next = 0;
    let mut out = Vec::with_capacity(tasks);
    for t in 0..tasks {
        let size = base + usize::from(t < extra);
        let classes = order[next..next + size].to_vec();
        next += size;
        let mut member = vec![false; n];
        classes.iter().for_each(|&c| member[c] = true);
        let pick = |idx: &[usize]| idx.iter().copied().filter(|&i| member[labels[i]]).collect();
        out.push(Task {
            index: t + 1,
            train: pick(ds.train_indices()),
            test: pick(ds.test_indices()),
            classes,
        });
    }
    Ok(TaskStream { tasks: out })
}
