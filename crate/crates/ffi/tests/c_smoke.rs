//! Compile and run the C demo against the generated header and the built
//! static library: the end-to-end proof that the ABI is consumable from C.

use std::path::PathBuf;
use std::process::Command;

fn target_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("CARGO_TARGET_DIR") {
        return PathBuf::from(dir);
    }
    // Workspace default: <workspace root>/target.
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .join("target")
}

#[test]
fn c_demo_compiles_and_synchronizes() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    let demo = manifest.join("examples").join("c").join("demo.c");
    let staticlib = target_dir().join("debug").join("liboscnet_ffi.a");
    assert!(
        staticlib.exists(),
        "static library missing at {} (built alongside this test)",
        staticlib.display()
    );

    let out_dir = tempfile::tempdir().unwrap();
    let binary = out_dir.path().join("oscnet_demo");
    let compile = Command::new("cc")
        .arg(&demo)
        .arg("-I")
        .arg(&header_dir)
        .arg(&staticlib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&binary)
        .output()
        .expect("cc should be available");
    assert!(
        compile.status.success(),
        "compilation failed:\n{}",
        String::from_utf8_lossy(&compile.stderr)
    );

    let run = Command::new(&binary).output().unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "demo failed.\nstdout: {stdout}\nstderr: {}",
        String::from_utf8_lossy(&run.stderr)
    );
    assert!(stdout.contains("ok"), "{stdout}");
    assert!(stdout.contains("synced = 1"), "{stdout}");
}
