// Licensed under the Apache-2.0 license

//! The `chip2app` command line. [`run`] takes every outside dependency
//! (arguments, clock, environment, streams) as a parameter so the binary
//! and the tests drive the same code.

mod args;
mod device_cmd;
mod misc_cmd;
mod pki_cmd;
mod scenario;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use chip2app_core::entropy::RandomSource;
use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

pub use args::Cli;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECT: i32 = 2;

pub const STORE_ENV: &str = "CHIP2APP_STORE";
pub const PASSPHRASE_ENV: &str = "CHIP2APP_PASSPHRASE";

/// Everything a command may touch outside its arguments.
pub struct Env<'a> {
    pub clock: &'a dyn Fn() -> u64,
    pub var: &'a dyn Fn(&str) -> Option<String>,
    pub stdin: &'a mut dyn Read,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
}

/// The clap command tree, for help rendering.
pub fn command() -> clap::Command {
    Cli::command()
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// process exit code: 0 success, 2 rejection, 1 usage or I/O error.
pub fn run<I, T>(argv: I, env: Env<'_>) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = env.stdout.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = env.stderr.write_all(text.as_bytes());
                    EXIT_ERROR
                }
            };
        }
    };
    let rng = match &cli.seed {
        Some(seed) => RandomSource::seeded(seed.as_bytes()),
        None => RandomSource::system(),
    };
    let mut ctx = Ctx {
        now: cli.now.unwrap_or_else(|| (env.clock)()),
        seed: cli.seed.clone(),
        passphrase_file: cli.passphrase_file.clone(),
        rng,
        var: env.var,
        stdin: env.stdin,
        out: env.stdout,
    };
    match dispatch(cli.command, &mut ctx) {
        Ok(Status::Success) => EXIT_OK,
        Ok(Status::Reject) => EXIT_REJECT,
        Err(e) => {
            let _ = writeln!(env.stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Status {
    Success,
    Reject,
}

impl Status {
    pub(crate) fn from_bool(accepted: bool) -> Self {
        if accepted {
            Status::Success
        } else {
            Status::Reject
        }
    }
}

/// A usage, parse or I/O failure (exit 1).
#[derive(Debug)]
pub(crate) struct Error(String);

impl<E: std::error::Error> From<E> for Error {
    fn from(e: E) -> Self {
        Error(e.to_string())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

pub(crate) fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error(msg.into()))
}

pub(crate) type Result<T> = std::result::Result<T, Error>;

pub(crate) struct Ctx<'a> {
    pub now: u64,
    pub seed: Option<String>,
    pub passphrase_file: Option<PathBuf>,
    pub rng: RandomSource,
    pub var: &'a dyn Fn(&str) -> Option<String>,
    pub stdin: &'a mut dyn Read,
    pub out: &'a mut dyn Write,
}

impl Ctx<'_> {
    pub fn passphrase(&self) -> Result<Vec<u8>> {
        if let Some(path) = &self.passphrase_file {
            let text = read_text(path)?;
            return Ok(text.trim_end_matches(['\r', '\n']).as_bytes().to_vec());
        }
        match (self.var)(PASSPHRASE_ENV) {
            Some(p) => Ok(p.into_bytes()),
            None => fail(format!(
                "no store passphrase: pass --passphrase-file or set {PASSPHRASE_ENV}"
            )),
        }
    }

    pub fn store(&self, flag: Option<PathBuf>) -> Result<PathBuf> {
        match flag.or_else(|| (self.var)(STORE_ENV).map(PathBuf::from)) {
            Some(p) => Ok(p),
            None => fail(format!("no store: pass --store or set {STORE_ENV}")),
        }
    }
}

pub(crate) fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).or_else(|e| fail(format!("{}: {e}", path.display())))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).or_else(|e| fail(format!("{}: {e}", path.display())))
}

pub(crate) fn write(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, data).or_else(|e| fail(format!("{}: {e}", path.display())))
}

pub(crate) fn write_secret(path: &Path, data: impl AsRef<[u8]>) -> Result<()> {
    chip2app_core::pki::write_secret(path, data.as_ref())
        .or_else(|e| fail(format!("{}: {e}", path.display())))
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn parse_hex(s: &str) -> Result<Vec<u8>> {
    if s.len() % 2 != 0 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
        return fail(format!("`{s}` is not an even-length hex string"));
    }
    Ok((0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).expect("checked hex"))
        .collect())
}

fn dispatch(command: args::Command, ctx: &mut Ctx<'_>) -> Result<Status> {
    use args::Command as C;
    match command {
        C::Modes { list, mode } => misc_cmd::modes(ctx, list, mode),
        C::RngTest { input, alpha } => misc_cmd::rng_test(ctx, &input, alpha),
        C::Hybrid(cmd) => misc_cmd::hybrid(ctx, cmd),
        C::Ca(cmd) => pki_cmd::ca(ctx, cmd),
        C::Csr(a) => pki_cmd::csr(ctx, a),
        C::Issue(a) => pki_cmd::issue(ctx, a),
        C::Verify(a) => pki_cmd::verify(ctx, a),
        C::Revoke(a) => pki_cmd::revoke_cmd(ctx, a),
        C::Cert(cmd) => pki_cmd::cert(ctx, cmd),
        C::Provision(a) => device_cmd::provision(ctx, a),
        C::Device(cmd) => device_cmd::device(ctx, cmd),
        C::Fw(cmd) => device_cmd::fw(ctx, cmd),
        C::Chipauth(cmd) => misc_cmd::chipauth(ctx, cmd),
        C::Tls(cmd) => misc_cmd::tls(ctx, cmd),
        C::Scenario(cmd) => scenario::run(ctx, cmd),
    }
}
