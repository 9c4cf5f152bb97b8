//! Acceptance criterion 8: repeated sweep runs are byte-identical
//! regardless of the worker-count cap.

use std::path::Path;
use std::process::Command;

fn sweep_bytes(threads: Option<&str>) -> Vec<u8> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/catmap.json");
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lefgpd"));
    cmd.args(["sweep", "--config", config.to_str().unwrap()])
        .args(["--t-max", "0.2", "--ratio", "0.5", "--rungs", "6"]);
    match threads {
        Some(n) => cmd.env("LEFGPD_THREADS", n),
        None => cmd.env_remove("LEFGPD_THREADS"),
    };
    let output = cmd.output().unwrap();
    assert_eq!(
        output.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    output.stdout
}

#[test]
fn criterion_8_sweep_determinism_across_thread_counts() {
    let baseline = sweep_bytes(None);
    assert!(!baseline.is_empty());
    let repeat = sweep_bytes(None);
    assert_eq!(baseline, repeat, "repeated runs differ");
    for threads in ["1", "2", "4", "7"] {
        let capped = sweep_bytes(Some(threads));
        assert_eq!(
            baseline, capped,
            "LEFGPD_THREADS={threads} changed the output bytes"
        );
    }
    println!(
        "ACCEPTANCE 8 PASS sweep determinism: {} bytes identical across repeats and LEFGPD_THREADS in {{1,2,4,7}}",
        baseline.len()
    );
}
