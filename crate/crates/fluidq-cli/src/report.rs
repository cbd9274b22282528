//! Run reports: a key/value summary printed to stdout for every command,
//! including failed ones. Output files carry only data; everything
//! run-specific (timings, parameters, the error if any) lives here.

use std::fmt::Display;
use std::path::Path;
use std::time::Instant;

pub struct RunReport {
    lines: Vec<(String, String)>,
    outputs: Vec<String>,
    started: Instant,
}

impl RunReport {
    pub fn new(command: &str) -> Self {
        let mut r = RunReport { lines: Vec::new(), outputs: Vec::new(), started: Instant::now() };
        r.field("command", command);
        r
    }

    pub fn field(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish_ok(mut self) {
        self.field("wall_time_ms", format!("{:.3}", self.started.elapsed().as_secs_f64() * 1e3));
        self.field("status", "ok");
        self.print();
    }

    pub fn finish_err(mut self, error: impl Display) {
        self.field("wall_time_ms", format!("{:.3}", self.started.elapsed().as_secs_f64() * 1e3));
        self.field("error", error);
        self.field("status", "failed");
        self.print();
    }

    fn print(self) {
        for (k, v) in &self.lines {
            if k == "status" {
                for o in &self.outputs {
                    println!("output: {}", o);
                }
            }
            println!("{}: {}", k, v);
        }
    }
}

/// FNV-1a content hash, the model fingerprint.
pub fn fingerprint(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{:016x}", h)
}
