// SPDX-License-Identifier: Apache-2.0

//! Bundled choreography models.
//!
//! `xray` follows the X-ray diagnostics choreography (10 messages, 5 gateways,
//! 4 roles). `incident` (13, 3, 5) and `retail` (12, 2, 3) are reconstructions
//! that match those structural counts; their internal layout is a plausible
//! rendering, not a transcription of an original diagram.

use crate::model::{parse_model, ChoreographyModel};

pub const XRAY_DOCUMENT: &str = include_str!("xray.json");
pub const INCIDENT_DOCUMENT: &str = include_str!("incident.json");
pub const RETAIL_DOCUMENT: &str = include_str!("retail.json");

/// The auditor role used throughout the X-ray scenario.
pub const MINISTRY_INSPECTOR: &str = "MINISTRY-INSPECTOR";

pub fn xray() -> ChoreographyModel {
    parse_model(XRAY_DOCUMENT.as_bytes()).expect("bundled X-ray model is valid")
}

pub fn incident() -> ChoreographyModel {
    parse_model(INCIDENT_DOCUMENT.as_bytes()).expect("bundled incident model is valid")
}

pub fn retail() -> ChoreographyModel {
    parse_model(RETAIL_DOCUMENT.as_bytes()).expect("bundled retail model is valid")
}

/// Looks up a bundled model document by name.
pub fn document(name: &str) -> Option<&'static str> {
    match name {
        "xray" | "x-ray" => Some(XRAY_DOCUMENT),
        "incident" => Some(INCIDENT_DOCUMENT),
        "retail" => Some(RETAIL_DOCUMENT),
        _ => None,
    }
}
