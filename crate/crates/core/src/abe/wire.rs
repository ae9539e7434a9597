// SPDX-License-Identifier: Apache-2.0

//! Versioned binary encoding of ciphertexts; all integers little-endian,
//! variable fields prefixed with a u32 length.

use super::cipher::AbeCiphertext;
use super::field::Fp;
use super::lsss::LsssMatrix;
use super::AbeError;

pub const VERSION: u8 = 0x01;

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(b);
}

/// Everything except the AEAD blobs; this is what the header digest covers.
pub(super) fn encode_header(ct: &AbeCiphertext) -> Vec<u8> {
    let mut out = vec![VERSION];
    put_bytes(&mut out, ct.policy.as_bytes());
    out.extend_from_slice(&(ct.lsss.rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(ct.lsss.width as u32).to_le_bytes());
    for (row, label) in ct.lsss.rows.iter().zip(&ct.lsss.labels) {
        put_bytes(&mut out, label.as_bytes());
        for x in row {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out.extend_from_slice(&ct.nonce);
    out
}

pub fn encode(ct: &AbeCiphertext) -> Vec<u8> {
    let mut out = encode_header(ct);
    out.extend_from_slice(&(ct.wrapped_shares.len() as u32).to_le_bytes());
    for s in &ct.wrapped_shares {
        put_bytes(&mut out, s);
    }
    put_bytes(&mut out, &ct.encrypted_payload);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], AbeError> {
        if self.buf.len() < n {
            return Err(AbeError::Malformed("truncated ciphertext".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<usize, AbeError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn bytes(&mut self) -> Result<&'a [u8], AbeError> {
        let n = self.u32()?;
        self.take(n)
    }

    fn string(&mut self) -> Result<String, AbeError> {
        String::from_utf8(self.bytes()?.to_vec()).map_err(|_| AbeError::Malformed("non UTF-8 text".into()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<AbeCiphertext, AbeError> {
    let mut r = Reader { buf: bytes };
    let version = r.take(1)?[0];
    if version != VERSION {
        return Err(AbeError::Malformed(format!("unsupported version {version:#04x}")));
    }
    let policy = r.string()?;
    let n_rows = r.u32()?;
    let width = r.u32()?;
    // Each row needs at least a length prefix plus its elements.
    if n_rows.saturating_mul(4 + 8 * width) > r.buf.len() {
        return Err(AbeError::Malformed("matrix dimensions exceed input".into()));
    }
    let mut rows = Vec::with_capacity(n_rows);
    let mut labels = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        labels.push(r.string()?);
        let row = (0..width)
            .map(|_| {
                let v = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
                Fp::from_canonical(v).ok_or_else(|| AbeError::Malformed("non-canonical field element".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let nonce: [u8; 12] = r.take(12)?.try_into().expect("12 bytes");
    let n_shares = r.u32()?;
    if n_shares.saturating_mul(4) > r.buf.len() {
        return Err(AbeError::Malformed("share count exceeds input".into()));
    }
    let wrapped_shares = (0..n_shares).map(|_| r.bytes().map(<[u8]>::to_vec)).collect::<Result<Vec<_>, _>>()?;
    let encrypted_payload = r.bytes()?.to_vec();
    if !r.buf.is_empty() {
        return Err(AbeError::Malformed("trailing bytes".into()));
    }
    Ok(AbeCiphertext { policy, lsss: LsssMatrix { rows, labels, width }, nonce, wrapped_shares, encrypted_payload })
}
