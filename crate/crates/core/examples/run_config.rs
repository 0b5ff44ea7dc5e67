//! Runs the bundled configs through the same entry point as the `smkl`
//! binary, writing artifacts to a temporary directory.
//!
//! `cargo run --example run_config`

use std::path::Path;

fn main() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let out = std::env::temp_dir().join("smkl-run-config");
    for (command, file) in [
        ("fit", "exponential_fit.toml"),
        ("oracle", "exponential_on_gamma_oracle.toml"),
        ("sandwich", "misspecified_q_sandwich.toml"),
    ] {
        println!("== smkl {command} --config {file}");
        let config = configs.join(file);
        let args: Vec<std::ffi::OsString> = vec![
            "smkl".into(),
            command.into(),
            "--config".into(),
            config.into(),
            "--out".into(),
            out.clone().into(),
        ];
        let code = smkl::cli::run(args);
        println!("exit code {code}");
    }
}
