// Licensed under the Apache-2.0 license

//! Algorithm matrix, entropy tests, hybrid encryption, chip authentication
//! and TLS policy.

use chip2app_core::chip_auth::run_demo;
use chip2app_core::compact_cert::{armor, dearmor};
use chip2app_core::entropy::{health_gate, BitString};
use chip2app_core::suite_registry::primitives::{PublicKey, TransportKeyPair};
use chip2app_core::suite_registry::{
    hybrid_decrypt, hybrid_encrypt, key_transport, primary, render_matrix, HybridCiphertext,
    HybridError, Mode, Role,
};
use chip2app_core::tls_policy::{audit_config, build_profile, negotiate, Negotiation, ServerConfigInput, SuiteId};

use crate::args::{ChipauthCmd, HybridCmd, TlsCmd};
use crate::pki_cmd::read_crl;
use crate::{fail, read, read_text, write, write_secret, Ctx, Result, Status};

const TRANSPORT_KEY_KIND: &str = "TRANSPORT KEY";
const PUBLIC_KEY_KIND: &str = "PUBLIC KEY";

pub(crate) fn modes(ctx: &mut Ctx<'_>, list: bool, mode: Option<Mode>) -> Result<Status> {
    if list {
        write!(ctx.out, "{}", render_matrix(mode))?;
        return Ok(Status::Success);
    }
    for m in Mode::ALL.into_iter().filter(|m| mode.is_none_or(|o| o == *m)) {
        let entries: Vec<String> = Role::ALL
            .into_iter()
            .map(|role| match primary(m, role) {
                Ok(s) => format!("{role}={}", s.parameter_set),
                Err(_) => format!("{role}=-"),
            })
            .collect();
        writeln!(ctx.out, "{m}: {}", entries.join(" "))?;
    }
    Ok(Status::Success)
}

pub(crate) fn rng_test(ctx: &mut Ctx<'_>, input: &str, alpha: f64) -> Result<Status> {
    let data = if input == "-" {
        let mut buf = Vec::new();
        ctx.stdin.read_to_end(&mut buf)?;
        buf
    } else {
        read(input.as_ref())?
    };
    let report = health_gate(&BitString::from_bytes(&data), alpha)?;
    for r in &report.test_results {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        writeln!(ctx.out, "{} p={:e} {verdict}", r.name, r.p_value)?;
    }
    Ok(Status::from_bool(report.overall_pass))
}

pub(crate) fn hybrid(ctx: &mut Ctx<'_>, cmd: HybridCmd) -> Result<Status> {
    match cmd {
        HybridCmd::Keygen { mode, out, public_out } => {
            let pair = TransportKeyPair::generate(key_transport(mode).algorithm, &mut ctx.rng)?;
            write_secret(&out, armor(TRANSPORT_KEY_KIND, &pair.to_secret_bytes()))?;
            write(&public_out, armor(PUBLIC_KEY_KIND, &pair.public().to_bytes()))?;
            writeln!(ctx.out, "keygen: {} ({mode} mode)", pair.algorithm())?;
            Ok(Status::Success)
        }
        HybridCmd::Encrypt(io) => {
            let recipient = PublicKey::from_bytes(&dearmor(PUBLIC_KEY_KIND, &read_text(&io.key)?)?)?;
            let plaintext = read(&io.input)?;
            let ct = hybrid_encrypt(&recipient, &plaintext, io.mode, &mut ctx.rng)?;
            let bytes = ct.to_bytes();
            write(&io.out, &bytes)?;
            writeln!(ctx.out, "encrypted: {} bytes to {} bytes", plaintext.len(), bytes.len())?;
            Ok(Status::Success)
        }
        HybridCmd::Decrypt(io) => {
            let pair = TransportKeyPair::from_secret_bytes(&dearmor(TRANSPORT_KEY_KIND, &read_text(&io.key)?)?)?;
            let ct = HybridCiphertext::from_bytes(&read(&io.input)?)?;
            if ct.mode != io.mode {
                return fail(format!("ciphertext is {} mode, --mode is {}", ct.mode, io.mode));
            }
            match hybrid_decrypt(&pair, &ct) {
                Ok(plaintext) => {
                    write(&io.out, &plaintext)?;
                    writeln!(ctx.out, "decrypted: {} bytes", plaintext.len())?;
                    Ok(Status::Success)
                }
                Err(HybridError::Authentication) => {
                    writeln!(ctx.out, "REJECT authentication failed")?;
                    Ok(Status::Reject)
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

pub(crate) fn chipauth(ctx: &mut Ctx<'_>, cmd: ChipauthCmd) -> Result<Status> {
    let ChipauthCmd::Demo { mode, adversary } = cmd;
    let outcome = run_demo(mode, adversary, &mut ctx.rng, ctx.now)?;
    for line in &outcome.lines {
        writeln!(ctx.out, "{line}")?;
    }
    Ok(Status::from_bool(outcome.authenticated()))
}

pub(crate) fn tls(ctx: &mut Ctx<'_>, cmd: TlsCmd) -> Result<Status> {
    match cmd {
        TlsCmd::Negotiate { offer, class, mode } => {
            let offer = SuiteId::parse_list(&offer)?;
            let result = negotiate(&offer, &build_profile(class, mode));
            writeln!(ctx.out, "{result}")?;
            Ok(Status::from_bool(result != Negotiation::Terminate))
        }
        TlsCmd::Audit {
            config,
            class,
            crl,
            mode,
        } => {
            let cfg = ServerConfigInput::load(&config)?;
            let crl = crl.as_deref().map(read_crl).transpose()?;
            let report = audit_config(&cfg, &build_profile(class, mode), ctx.now, crl.as_ref())?;
            write!(ctx.out, "{}", report.to_text())?;
            Ok(Status::from_bool(report.compliant))
        }
    }
}
