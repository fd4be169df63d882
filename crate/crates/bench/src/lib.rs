// SPDX-License-Identifier: Apache-2.0

//! Fixture loading shared by the benchmarks.

use std::path::PathBuf;

use llpm::system::{assemble, load_design, load_package, AssembledSystem, Package};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn package(name: &str) -> Package {
    load_package(&fixtures().join("packages").join(format!("{name}.json"))).expect("fixture package")
}

pub fn system(name: &str) -> AssembledSystem {
    let (d, p) = load_design(&fixtures().join("systems").join(format!("{name}.json"))).expect("fixture design");
    assemble(&d, &p).expect("fixture assembles")
}
