// SPDX-License-Identifier: Apache-2.0

//! Chain export as newline-delimited JSON (one block per line, byte fields
//! hex-encoded) and receipts as CSV.

use std::io::{self, BufRead, Write};

use super::block::Block;
use super::Receipt;

pub fn write_chain<W: Write>(blocks: &[Block], mut out: W) -> io::Result<()> {
    for b in blocks {
        serde_json::to_writer(&mut out, b)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn chain_to_string(blocks: &[Block]) -> String {
    let mut out = Vec::new();
    write_chain(blocks, &mut out).expect("writing to memory cannot fail");
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn read_chain<R: BufRead>(input: R) -> io::Result<Vec<Block>> {
    let mut blocks = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let block = serde_json::from_str(&line)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)))?;
        blocks.push(block);
    }
    Ok(blocks)
}

pub fn write_receipts_csv<W: Write>(receipts: &[Receipt], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["tx_hash", "function", "gas_used", "status"])?;
    for r in receipts {
        w.write_record([hex::encode(r.tx_hash), r.function.clone(), r.gas_used.to_string(), r.status.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
