use std::process::Command;

fn main() {
    // Embed `git describe` so run manifests can name the binary revision.
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    if let Some(desc) = describe {
        println!("cargo:rustc-env=GIT_DESCRIBE={desc}");
    }
    println!("cargo:rerun-if-changed=build.rs");
}
