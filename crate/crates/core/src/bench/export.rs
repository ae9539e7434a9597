// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::ledger::export::write_chain;
use crate::ledger::Block;

use super::{BenchReport, Functionality};

/// One row per functionality per report: `config,functionality,time_ms,gas`.
pub fn report_rows_csv(reports: &[BenchReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "functionality", "time_ms", "gas"]).expect("in-memory write");
    for r in reports {
        for f in Functionality::ALL {
            w.write_record([r.config.clone(), f.to_string(), format!("{:.3}", r.time_ms(f)), r.gas(f).to_string()])
                .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
}

fn step_rows_csv(reports: &[BenchReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "step", "functionality", "label", "time_ms", "gas"]).expect("in-memory write");
    for r in reports {
        for row in &r.rows {
            w.write_record([
                r.config.clone(),
                row.step.to_string(),
                row.functionality.to_string(),
                row.label.clone(),
                format!("{:.3}", row.time_ms),
                row.gas.to_string(),
            ])
            .expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is UTF-8")
}

pub fn summary_table(title: &str, reports: &[BenchReport]) -> String {
    let mut out = format!("{title}\n");
    let _ = writeln!(
        out,
        "{:>8} | {:>12} {:>12} {:>12} {:>12} | {:>10} {:>10} {:>10} {:>10} | chain gate",
        "config", "configure", "instantiate", "transact", "inspect", "cfg ms", "inst ms", "tx ms", "insp ms"
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{:>8} | {:>12} {:>12} {:>12} {:>12} | {:>10.3} {:>10.3} {:>10.3} {:>10.3} | {:>5} {:>4}",
            r.config,
            r.gas(Functionality::Configure),
            r.gas(Functionality::Instantiate),
            r.gas(Functionality::Transact),
            r.gas(Functionality::Inspect),
            r.time_ms(Functionality::Configure),
            r.time_ms(Functionality::Instantiate),
            r.time_ms(Functionality::Transact),
            r.time_ms(Functionality::Inspect),
            if r.chain_verified { "ok" } else { "FAIL" },
            if r.gate_holds { "ok" } else { "FAIL" },
        );
    }
    out
}

/// Writes `<name>.csv`, `<name>_steps.csv`, `<name>_summary.txt` and, when
/// given, `<name>_chain.ndjson` into `dir`.
pub fn write_bench_outputs(dir: &Path, name: &str, reports: &[BenchReport], chain: Option<&[Block]>) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |file: String, body: &[u8]| -> io::Result<()> {
        let p = dir.join(file);
        fs::write(&p, body)?;
        written.push(p);
        Ok(())
    };
    put(format!("{name}.csv"), report_rows_csv(reports).as_bytes())?;
    put(format!("{name}_steps.csv"), step_rows_csv(reports).as_bytes())?;
    put(format!("{name}_summary.txt"), summary_table(name, reports).as_bytes())?;
    if let Some(blocks) = chain {
        let mut buf = Vec::new();
        write_chain(blocks, &mut buf)?;
        put(format!("{name}_chain.ndjson"), &buf)?;
    }
    Ok(written)
}
