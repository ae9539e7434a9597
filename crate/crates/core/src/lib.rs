// SPDX-License-Identifier: Apache-2.0

pub mod abe;
pub mod bench;
pub mod contracts;
pub mod engine;
pub mod fixtures;
pub mod ledger;
pub mod model;
pub mod policy;
pub mod store;
pub mod synth;
