//! Adapter for external compressors: the payload goes to the command's
//! stdin and the compressed size is read back from its stdout.

use std::io::{Read, Write};
use std::process::{Command, Stdio};

use super::{ComplexityError, Result};

/// Fixed charge per call on top of the compressed bytes.
pub const HEADER_BITS: f64 = 32.0;

/// Runs `sh -c command` on `payload` and returns the output length.
pub fn compress(name: &str, command: &str, payload: &[u8]) -> Result<usize> {
    let fail = |reason: String| ComplexityError::External { name: name.to_string(), reason };
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| fail(format!("spawn: {e}")))?;
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let input = payload.to_vec();
    // Feed stdin from a thread so a compressor that streams output cannot
    // deadlock against a full pipe.
    let writer = std::thread::spawn(move || stdin.write_all(&input));
    let mut out = Vec::new();
    child
        .stdout
        .take()
        .expect("stdout is piped")
        .read_to_end(&mut out)
        .map_err(|e| fail(format!("read: {e}")))?;
    let status = child.wait().map_err(|e| fail(format!("wait: {e}")))?;
    let written = writer.join().map_err(|_| fail("writer thread panicked".into()))?;
    if !status.success() {
        return Err(fail(format!("exit status {status}")));
    }
    written.map_err(|e| fail(format!("write: {e}")))?;
    Ok(out.len())
}
