//! Minimal external model for protocol tests: answers each request with its
//! first feature plus an offset.
//!
//! Flags: `--offset X`, `--die-after N` (exit after N answers), `--garbage`
//! (reply with a non-JSON line), `--nan` (reply with a null prediction),
//! `--reverse` (answer each batch in reverse order), `--hang` (read requests
//! but never answer).

use std::io::{BufRead, Write};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut offset = 0.0;
    let mut die_after: Option<usize> = None;
    let mut garbage = false;
    let mut nan = false;
    let mut reverse = false;
    let mut hang = false;
    let mut i = 0;
    while i < args.len() {
        match args[i].as_str() {
            "--offset" => {
                i += 1;
                offset = args[i].parse().expect("offset");
            }
            "--die-after" => {
                i += 1;
                die_after = Some(args[i].parse().expect("count"));
            }
            "--garbage" => garbage = true,
            "--nan" => nan = true,
            "--reverse" => reverse = true,
            "--hang" => hang = true,
            other => panic!("unknown flag {other}"),
        }
        i += 1;
    }

    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut answered = 0usize;
    let mut pending: Vec<(u64, f64)> = Vec::new();
    for line in stdin.lock().lines() {
        let line = line.expect("stdin");
        let msg: serde_json::Value = serde_json::from_str(&line).expect("request json");
        if msg.get("end").is_some() {
            if hang {
                std::thread::sleep(std::time::Duration::from_secs(3600));
            }
            if reverse {
                pending.reverse();
            }
            for (id, x) in pending.drain(..) {
                if die_after.is_some_and(|n| answered >= n) {
                    std::process::exit(1);
                }
                if garbage {
                    writeln!(out, "this is not json").unwrap();
                } else if nan {
                    writeln!(out, "{{\"id\":{id},\"prediction\":null}}").unwrap();
                } else {
                    writeln!(out, "{}", serde_json::json!({"id": id, "prediction": x + offset})).unwrap();
                }
                answered += 1;
            }
            out.flush().unwrap();
            continue;
        }
        let id = msg["id"].as_u64().expect("id");
        let x = msg["features"][0].as_f64().expect("features");
        pending.push((id, x));
    }
}
