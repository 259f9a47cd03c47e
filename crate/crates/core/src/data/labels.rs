//! Ground-truth labels, sealed away from the training path.
//!
//! Reading labels requires a [`LabelAccess`] token. Tokens are only minted inside the
//! task-splitting and evaluation code, and every read is logged with its purpose so a
//! run can prove after the fact that no training stage looked at labels.

use std::sync::Mutex;

/// Proof that the caller is protocol code (task splitting or evaluation).
#[derive(Debug)]
pub struct LabelAccess {
    purpose: &'static str,
}

impl LabelAccess {
    pub(crate) fn grant(purpose: &'static str) -> Self {
        LabelAccess { purpose }
    }

    pub fn purpose(&self) -> &'static str {
        self.purpose
    }
}

#[derive(Debug, Default)]
pub struct LabelVault {
    labels: Vec<usize>,
    reads: Mutex<Vec<&'static str>>,
}

impl Clone for LabelVault {
    fn clone(&self) -> Self {
        LabelVault {
            labels: self.labels.clone(),
            reads: Mutex::new(Vec::new()),
        }
    }
}

impl LabelVault {
    pub fn new(labels: Vec<usize>) -> Self {
        LabelVault {
            labels,
            reads: Mutex::new(Vec::new()),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn reveal(&self, access: &LabelAccess) -> &[usize] {
        self.reads.lock().unwrap().push(access.purpose);
        &self.labels
    }

    /// Purposes of every read so far, in order.
    pub fn read_log(&self) -> Vec<&'static str> {
        self.reads.lock().unwrap().clone()
    }
}
