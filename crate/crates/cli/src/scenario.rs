// Licensed under the Apache-2.0 license

//! `scenario full`: the device lifecycle driven through the CLI's own
//! subcommands inside a scratch directory.

use std::path::{Path, PathBuf};

use chip2app_core::entropy::RandomSource;
use chip2app_core::suite_registry::Mode;
use chip2app_core::tls_policy::SuiteId;
use clap::Parser;

use crate::args::{Cli, ScenarioCmd};
use crate::{dispatch, write, Ctx, Result, Status};

const PASSPHRASE: &str = "scenario-store-passphrase";
const FIRMWARE_LEN: usize = 4096;

struct Runner<'c, 'a> {
    ctx: &'c mut Ctx<'a>,
    work: PathBuf,
    step: usize,
    failures: usize,
}

impl Runner<'_, '_> {
    fn path(&self, name: &str) -> String {
        self.work.join(name).display().to_string()
    }

    fn scrub(&self, text: &str) -> String {
        text.replace(&self.work.display().to_string(), "<work>")
    }

    /// Runs one subcommand with its own derived random source and checks
    /// its status against `expect`.
    fn step(&mut self, args: &[String], expect: Status) -> Result<()> {
        self.step += 1;
        let mut argv = vec![
            "chip2app".to_string(),
            "--now".to_string(),
            self.ctx.now.to_string(),
            "--passphrase-file".to_string(),
            self.path("passphrase"),
        ];
        argv.extend(args.iter().cloned());
        writeln!(self.ctx.out, "[{}] $ chip2app {}", self.step, self.scrub(&args.join(" ")))?;

        let cli = Cli::try_parse_from(&argv)?;
        let seed = self.ctx.seed.as_ref().map(|s| format!("{s}/step-{}", self.step));
        let rng = match &seed {
            Some(s) => RandomSource::seeded(s.as_bytes()),
            None => RandomSource::system(),
        };
        let mut captured = Vec::new();
        let mut stdin = std::io::empty();
        let result = {
            let mut sub = Ctx {
                now: cli.now.unwrap_or(self.ctx.now),
                seed,
                passphrase_file: cli.passphrase_file.clone(),
                rng,
                var: self.ctx.var,
                stdin: &mut stdin,
                out: &mut captured,
            };
            dispatch(cli.command, &mut sub)
        };
        let text = self.scrub(&String::from_utf8_lossy(&captured));
        for line in text.lines() {
            writeln!(self.ctx.out, "    {line}")?;
        }
        let got = match result {
            Ok(s) => Some(s),
            Err(e) => {
                writeln!(self.ctx.out, "    error: {}", self.scrub(&e.to_string()))?;
                None
            }
        };
        if got == Some(expect) {
            writeln!(self.ctx.out, "    ok")?;
        } else {
            self.failures += 1;
            let want = match expect {
                Status::Success => "success",
                Status::Reject => "rejection",
            };
            writeln!(self.ctx.out, "    UNEXPECTED: wanted {want}")?;
        }
        Ok(())
    }
}

fn args(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

fn firmware_image(len: usize) -> Vec<u8> {
    (0..len).map(|i| (i * 31 % 251) as u8).collect()
}

fn tls_config(cert: &Path) -> String {
    let suites: Vec<&str> = SuiteId::APPROVED.iter().map(|s| s.as_str()).collect();
    format!(
        "tls_versions = 1.3\n\
         cipher_suites = {}\n\
         key_exchange = ephemeral\n\
         zero_rtt = false\n\
         client_auth = true\n\
         revocation_checking = true\n\
         certificate = {}\n",
        suites.join(", "),
        cert.display()
    )
}

pub(crate) fn run(ctx: &mut Ctx<'_>, cmd: ScenarioCmd) -> Result<Status> {
    let ScenarioCmd::Full { mode } = cmd;
    let dir = tempfile::tempdir()?;
    let work = dir.path().to_path_buf();
    write(&work.join("passphrase"), PASSPHRASE)?;
    writeln!(ctx.out, "scenario: full ({mode} mode)")?;
    let mut r = Runner {
        ctx,
        work,
        step: 0,
        failures: 0,
    };
    full(&mut r, mode)?;
    let passed = r.failures == 0;
    if passed {
        writeln!(r.ctx.out, "scenario: PASS ({} steps)", r.step)?;
    } else {
        writeln!(r.ctx.out, "scenario: FAIL ({} of {} steps unexpected)", r.failures, r.step)?;
    }
    Ok(Status::from_bool(passed))
}

fn full(r: &mut Runner<'_, '_>, mode: Mode) -> Result<()> {
    let m = mode.to_string();
    let root = r.path("root-ca");
    let fw_ca = r.path("firmware-ca");
    let store = r.path("device.se");
    let (image, tampered) = (r.path("firmware.bin"), r.path("firmware-tampered.bin"));
    let manifest = r.path("firmware.manifest");
    let (server_key, server_csr, server_cert) = (r.path("server.key"), r.path("server.csr"), r.path("server.cert"));
    let long_cert = r.path("server-long.cert");
    let tls_conf = r.path("server.conf");
    use Status::{Reject, Success};

    // Roots of trust and device identity.
    r.step(&args(&["ca", "init", "--ca", &root, "--name", "scenario-root", "--mode", &m]), Success)?;
    r.step(
        &args(&["ca", "init", "--ca", &fw_ca, "--name", "scenario-firmware-signer", "--parent", &root]),
        Success,
    )?;
    r.step(
        &args(&["provision", "--mode", &m, "--ca", &root, "--store", &store, "--cert-out", &r.path("device.cert")]),
        Success,
    )?;
    r.step(&args(&["device", "show", "--store", &store]), Success)?;

    // Certificate issuance and the lifetime cap.
    r.step(
        &args(&["csr", "--subject", "gateway.example", "--mode", &m, "--key-out", &server_key, "--out", &server_csr]),
        Success,
    )?;
    r.step(&args(&["issue", "--ca", &root, "--csr", &server_csr, "--days", "398", "--out", &server_cert]), Success)?;
    r.step(&args(&["verify", "--cert", &server_cert, "--ca", &root]), Success)?;
    r.step(&args(&["issue", "--ca", &root, "--csr", &server_csr, "--days", "399", "--out", &long_cert]), Reject)?;

    // Firmware integrity.
    let mut data = firmware_image(FIRMWARE_LEN);
    write(Path::new(&image), &data)?;
    data[FIRMWARE_LEN / 2] ^= 0x01;
    write(Path::new(&tampered), &data)?;
    r.step(
        &args(&["fw", "sign", "--image", &image, "--version", "1.0.0", "--signer", &fw_ca, "--out", &manifest, "--mode", &m]),
        Success,
    )?;
    r.step(&args(&["fw", "verify", "--image", &tampered, "--manifest", &manifest, "--store", &store]), Reject)?;
    r.step(&args(&["fw", "verify", "--image", &image, "--manifest", &manifest, "--store", &store]), Success)?;

    // Chip authentication.
    r.step(&args(&["chipauth", "demo", "--mode", &m]), Success)?;
    r.step(&args(&["chipauth", "demo", "--mode", &m, "--adversary", "clone"]), Reject)?;

    // TLS policy for the issued server certificate.
    write(Path::new(&tls_conf), tls_config(Path::new(&server_cert)))?;
    r.step(&args(&["tls", "audit", "--config", &tls_conf, "--class", "standard", "--mode", &m]), Success)?;
    let offer = SuiteId::APPROVED.iter().rev().map(|s| s.as_str()).collect::<Vec<_>>().join(",");
    r.step(&args(&["tls", "negotiate", "--offer", &offer, "--class", "standard", "--mode", &m]), Success)?;
    r.step(&args(&["tls", "negotiate", "--offer", "TLS_RSA_WITH_RC4_128_SHA", "--class", "standard", "--mode", &m]), Reject)?;
    Ok(())
}
