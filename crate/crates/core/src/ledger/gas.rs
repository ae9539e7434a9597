// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

pub const SLOT_BYTES: usize = 32;

/// Cost constants. Storage is metered per 32-byte slot of each value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GasSchedule {
    pub base: u64,
    pub calldata_byte: u64,
    pub new_slot: u64,
    pub overwrite_slot: u64,
}

impl Default for GasSchedule {
    fn default() -> Self {
        GasSchedule { base: 21_000, calldata_byte: 16, new_slot: 20_000, overwrite_slot: 5_000 }
    }
}

pub fn slots(len: usize) -> u64 {
    len.div_ceil(SLOT_BYTES).max(1) as u64
}

impl GasSchedule {
    pub fn intrinsic(&self, calldata_len: usize) -> u64 {
        self.base + self.calldata_byte * calldata_len as u64
    }

    /// Cost of writing `new_len` bytes over a value of `old_len` bytes
    /// (`None` if the key is fresh): slots that already existed are
    /// overwrites, the rest are new.
    pub fn store(&self, old_len: Option<usize>, new_len: usize) -> u64 {
        let new = slots(new_len);
        let old = old_len.map_or(0, slots);
        let overwritten = new.min(old);
        overwritten * self.overwrite_slot + (new - overwritten) * self.new_slot
    }
}
