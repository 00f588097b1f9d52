//! The JSON interchange format and the in-process command-line surface.
//!
//! Systems serialize to a name-based JSON document (processes, channels
//! with restriction marks, messages, one pushdown per process, optional
//! target vector). The CLI subcommands consume such files and print a JSON
//! report on stdout plus a one-line summary on stderr; exit codes encode
//! the verdict (0 holds/reachable, 1 not, 2 input error, 3 budget
//! exhausted).
//!
//! Run with: `cargo run --example json_and_cli`

use std::io::Write;

use rqcp::cli::run_command;
use rqcp::fixtures;
use rqcp::format::{parse_system_str, serialize_system};
use rqcp::model::StateId;

fn main() {
    // Serialize the handshake together with a target vector; round-trip it.
    let sys = fixtures::handshake();
    let target = vec![StateId(1), StateId(1)]; // (z1, y1)
    let text = serialize_system(&sys, Some(&target));
    let (parsed, parsed_target) = parse_system_str(&text).expect("own output parses");
    assert_eq!(parsed, sys);
    assert_eq!(parsed_target, Some(target));
    println!("document round-trips; excerpt:");
    for line in text.lines().take(14) {
        println!("  {line}");
    }
    println!("  ...");

    let mut file = tempfile::NamedTempFile::new().expect("temp file");
    file.write_all(text.as_bytes()).expect("write");
    let path = file.path().to_str().expect("utf-8 path");

    for args in [
        vec!["rqcp", "topology", path],
        vec!["rqcp", "eager-reach", path], // target comes from the file
        vec!["rqcp", "bounded-reach", path, "-k", "1"],
        vec!["rqcp", "bounded-reach", path, "-k", "2"],
        vec!["rqcp", "oracle", path, "--mode", "kphase", "-k", "2"],
    ] {
        let argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_command(&argv, &mut out, &mut err);
        println!("\n$ {}   (exit {code})", args.join(" "));
        print!("{}", String::from_utf8_lossy(&err));
        for line in String::from_utf8_lossy(&out).lines() {
            println!("    {line}");
        }
    }
}
