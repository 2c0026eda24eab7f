//! Subprocess oracle protocol: the child reads one request per line,
//! `x1 ... xn eta`, and writes one value per line.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::atomic::AtomicU64;
use std::sync::{Arc, Mutex};

use super::{NoiseModel, Oracle, OracleError};

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Drop for Pipe {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Spawns `command` and wraps its line protocol as an oracle on whatever
/// coordinates the child expects (compose with `rescale` for pullbacks).
/// Requests are serialized; the oracle stays safe to call concurrently.
pub fn subprocess_oracle(dim: usize, command: &[String]) -> Result<Oracle, OracleError> {
    assert!(!command.is_empty(), "empty subprocess command");
    let mut child = Command::new(&command[0])
        .args(&command[1..])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .map_err(|e| OracleError::UnknownBenchmark(format!("spawn {:?}: {e}", command[0])))?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let pipe = Arc::new(Mutex::new(Pipe {
        child,
        stdin,
        stdout,
    }));
    let f = move |x: &[f64]| -> f64 {
        let mut p = pipe.lock().expect("subprocess oracle poisoned");
        let mut line = String::new();
        for v in x {
            line.push_str(&format!("{v:.17e} "));
        }
        // the wrapped closure is exact; noise handling stays in Oracle
        line.push_str("0\n");
        p.stdin
            .write_all(line.as_bytes())
            .expect("subprocess oracle: write failed");
        p.stdin.flush().expect("subprocess oracle: flush failed");
        let mut reply = String::new();
        p.stdout
            .read_line(&mut reply)
            .expect("subprocess oracle: read failed");
        reply
            .trim()
            .parse()
            .unwrap_or_else(|_| panic!("subprocess oracle: bad reply {reply:?}"))
    };
    Ok(Oracle {
        dim,
        f: Arc::new(f),
        noise: NoiseModel::None,
        calls: Arc::new(AtomicU64::new(0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn echo_child_roundtrip() {
        // a child that replies with x1 + 2*x2
        let cmd = vec![
            "python3".to_string(),
            "-c".to_string(),
            "import sys\nfor line in sys.stdin:\n t=line.split()\n print(float(t[0])+2*float(t[1]), flush=True)\n".to_string(),
        ];
        match subprocess_oracle(2, &cmd) {
            Ok(o) => {
                assert!((o.evaluate(&[0.5, 0.25], 0.0) - 1.0).abs() < 1e-12);
                assert!((o.evaluate(&[-1.0, 1.0], 0.0) - 1.0).abs() < 1e-12);
                assert_eq!(o.call_count(), 2);
            }
            Err(_) => eprintln!("python3 unavailable; skipping subprocess oracle test"),
        }
    }
}
