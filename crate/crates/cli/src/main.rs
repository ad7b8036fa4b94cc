// Licensed under the Apache-2.0 license

use std::time::{SystemTime, UNIX_EPOCH};

fn main() {
    let clock = || {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0)
    };
    let var = |name: &str| std::env::var(name).ok();
    let code = chip2app::run(
        std::env::args_os(),
        chip2app::Env {
            clock: &clock,
            var: &var,
            stdin: &mut std::io::stdin().lock(),
            stdout: &mut std::io::stdout().lock(),
            stderr: &mut std::io::stderr().lock(),
        },
    );
    std::process::exit(code);
}
