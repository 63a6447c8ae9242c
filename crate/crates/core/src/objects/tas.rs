use std::collections::BTreeMap;

use crate::model::ProcessId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0} already called test-and-set on this object")]
pub struct DoubleCall(pub ProcessId);

/// A one-shot abortable test-and-set bit.
///
/// An abort that arrives before the operation takes effect makes it fail:
/// the caller gets `None` and the bit is left alone.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AbortableTasObject {
    bit: bool,
    outcomes: BTreeMap<ProcessId, Option<u8>>,
}

impl AbortableTasObject {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit(&self) -> bool {
        self.bit
    }

    pub fn outcome(&self, caller: ProcessId) -> Option<Option<u8>> {
        self.outcomes.get(&caller).copied()
    }

    pub fn tas(&mut self, caller: ProcessId, aborted: bool) -> Result<Option<u8>, DoubleCall> {
        if self.outcomes.contains_key(&caller) {
            return Err(DoubleCall(caller));
        }
        let out = if aborted {
            None
        } else if self.bit {
            Some(1)
        } else {
            self.bit = true;
            Some(0)
        };
        self.outcomes.insert(caller, out);
        Ok(out)
    }
}
