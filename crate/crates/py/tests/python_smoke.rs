use std::path::{Path, PathBuf};
use std::process::Command;

/// The cdylib cargo builds next to the test binary's `deps` directory.
fn extension() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(Path::parent).unwrap();
    let name = if cfg!(target_os = "macos") {
        "libcvtomo_py.dylib"
    } else if cfg!(windows) {
        "cvtomo_py.dll"
    } else {
        "libcvtomo_py.so"
    };
    profile_dir.join(name)
}

#[test]
fn python_smoke_script() {
    let lib = extension();
    assert!(lib.exists(), "extension not built at {}", lib.display());
    let dir = tempfile::tempdir().unwrap();
    let target = if cfg!(windows) { "cvtomo_py.pyd" } else { "cvtomo_py.so" };
    std::fs::copy(&lib, dir.path().join(target)).unwrap();
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("python/smoke_test.py");
    let out = Command::new("python3")
        .arg(&script)
        .env("PYTHONPATH", dir.path())
        .output()
        .expect("python3 runs");
    let stdout = String::from_utf8_lossy(&out.stdout);
    print!("{stdout}");
    assert!(out.status.success(), "{stdout}\n{}", String::from_utf8_lossy(&out.stderr));
    assert!(!stdout.contains("FAIL"));
}
