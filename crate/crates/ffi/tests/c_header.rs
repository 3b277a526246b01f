//! Compiles and runs a C program against the generated header and the static library.

use std::path::PathBuf;
use std::process::Command;

const PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "ffaba.h"

int main(void) {
    FfabaComplex u = {0.25, 0.0}, tau = {0.0, 0.5}, a, b;
    if (ffaba_theta(1, u, tau, 1, 0, &a) != FFABA_STATUS_OK) return 1;
    u.re = -0.25;
    if (ffaba_theta(2, u, tau, 1, 0, &b) != FFABA_STATUS_OK) return 2;
    if (a.re != b.re) return 3;
    FfabaScenario *s = NULL;
    FfabaComplex t = {0.1, 0.9};
    if (ffaba_scenario_new(4, t, 0, 1, &s) != FFABA_STATUS_OK) return 4;
    size_t n = 0;
    ffaba_scenario_root_count(s, &n);
    ffaba_scenario_free(s);
    if (n != 2) return 5;
    if (ffaba_scenario_new(5, t, 0, 1, &s) != FFABA_STATUS_INVALID_ARGUMENT) return 6;
    if (strlen(ffaba_last_error()) == 0) return 7;
    printf("ok %s\n", ffaba_version());
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|d| d.parent()).unwrap().to_path_buf();
    let lib = profile_dir.join("libffaba_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let work = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let src = work.join("ffaba_smoke.c");
    let bin = work.join("ffaba_smoke");
    std::fs::write(&src, PROGRAM).unwrap();
    let status = Command::new("cc")
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .expect("cc runs");
    assert!(status.success());
    let out = Command::new(&bin).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
