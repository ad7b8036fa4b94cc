// Licensed under the Apache-2.0 license

//! CA directories, requests, issuance, chain verification, revocation and
//! certificate encodings.

use std::collections::BTreeMap;
use std::path::Path;

use chip2app_core::compact_cert::{
    armor, dearmor, dearmor_all, decode_baseline, decode_compact, encode_baseline, encode_compact,
    reference_device_certificate, size_report, CertificateRecord,
};
use chip2app_core::pki::{
    generate_csr, revoke, verify_chain, CertificateAuthority, Csr, IssuancePolicy, PkiError,
    RegistrationAuthority, RevocationList, Verdict,
};
use chip2app_core::suite_registry::primitives::SigningKeyPair;
use chip2app_core::suite_registry::{permitted, primary, Algorithm, Mode, Role};

use crate::args::{CaCmd, CertCmd, CsrArgs, IssueArgs, RevokeArgs, VerifyArgs};
use crate::{fail, hex, parse_hex, read, read_text, write, write_secret, Ctx, Result, Status};

pub(crate) const KEY_KIND: &str = "SIGNING KEY";
pub(crate) const CERT_KIND: &str = "CERTIFICATE";
const CSR_KIND: &str = "CERTIFICATE REQUEST";
pub(crate) const CRL_KIND: &str = "REVOCATION LIST";
const RA_KEY_FILE: &str = "ra.key";
const DEFAULT_ROOT_NAME: &str = "chip2app-root";
const CA_DAYS: u64 = 3650;

fn is_ca_dir(dir: &Path) -> bool {
    dir.join("ca.cert").is_file()
}

fn create_root(ctx: &mut Ctx<'_>, dir: &Path, name: &str, alg: Algorithm, days: u64) -> Result<CertificateAuthority> {
    let mut ca = CertificateAuthority::new_root(name, alg, days, ctx.now, &mut ctx.rng)?;
    let ra = SigningKeyPair::generate(alg, &mut ctx.rng)?;
    ca.trust_ra(ra.public());
    ca.save(dir)?;
    write_secret(&dir.join(RA_KEY_FILE), armor(KEY_KIND, &ra.to_secret_bytes()))?;
    Ok(ca)
}

/// Loads the CA in `dir`, creating a root for `mode` there if the
/// directory holds none.
pub(crate) fn open_or_create_ca(ctx: &mut Ctx<'_>, dir: &Path, mode: Mode) -> Result<CertificateAuthority> {
    if is_ca_dir(dir) {
        return Ok(CertificateAuthority::load(dir)?);
    }
    let alg = primary(mode, Role::Signature)?.algorithm;
    let ca = create_root(ctx, dir, DEFAULT_ROOT_NAME, alg, CA_DAYS)?;
    writeln!(ctx.out, "created root CA {DEFAULT_ROOT_NAME} ({alg})")?;
    Ok(ca)
}

pub(crate) fn load_ca(dir: &Path) -> Result<CertificateAuthority> {
    if !is_ca_dir(dir) {
        return fail(format!("{}: not a CA directory", dir.display()));
    }
    Ok(CertificateAuthority::load(dir)?)
}

pub(crate) fn ca(ctx: &mut Ctx<'_>, cmd: CaCmd) -> Result<Status> {
    match cmd {
        CaCmd::Init {
            ca,
            name,
            mode,
            days,
            parent,
        } => {
            if is_ca_dir(&ca) {
                return fail(format!("{}: already holds a CA", ca.display()));
            }
            let created = match parent {
                None => {
                    let alg = primary(mode, Role::Signature)?.algorithm;
                    create_root(ctx, &ca, &name, alg, days)?
                }
                Some(parent_dir) => {
                    let mut parent = load_ca(&parent_dir)?;
                    let child = parent.new_intermediate(&name, days, ctx.now, &mut ctx.rng)?;
                    child.save(&ca)?;
                    parent.save(&parent_dir)?;
                    let ra = read(&parent_dir.join(RA_KEY_FILE))?;
                    write_secret(&ca.join(RA_KEY_FILE), ra)?;
                    child
                }
            };
            describe_ca(ctx, &created)?;
            Ok(Status::Success)
        }
        CaCmd::Show { ca } => {
            let ca = load_ca(&ca)?;
            describe_ca(ctx, &ca)?;
            Ok(Status::Success)
        }
    }
}

fn describe_ca(ctx: &mut Ctx<'_>, ca: &CertificateAuthority) -> Result<()> {
    let c = ca.certificate();
    writeln!(ctx.out, "ca: {}", ca.name())?;
    writeln!(ctx.out, "algorithm: {}", ca.key().algorithm())?;
    writeln!(ctx.out, "issuer: {}", c.issuer_id)?;
    writeln!(ctx.out, "serial: {}", hex(&c.serial))?;
    writeln!(ctx.out, "chain-length: {}", ca.chain().len())?;
    writeln!(ctx.out, "trust-root: {}", ca.trust_root().subject_id)?;
    Ok(())
}

pub(crate) fn csr(ctx: &mut Ctx<'_>, a: CsrArgs) -> Result<Status> {
    let alg = match &a.alg {
        Some(name) => name.parse::<Algorithm>()?,
        None => primary(a.mode, Role::Signature)?.algorithm,
    };
    if !permitted(a.mode, Role::Signature, alg) {
        return fail(format!("{alg} is not a {} mode signature algorithm", a.mode));
    }
    let key = SigningKeyPair::generate(alg, &mut ctx.rng)?;
    let request = generate_csr(&a.subject, &key, BTreeMap::new());
    write_secret(&a.key_out, armor(KEY_KIND, &key.to_secret_bytes()))?;
    write(&a.out, armor(CSR_KIND, &request.to_bytes()))?;
    writeln!(ctx.out, "csr: {} ({alg})", a.subject)?;
    Ok(Status::Success)
}

pub(crate) fn issue(ctx: &mut Ctx<'_>, a: IssueArgs) -> Result<Status> {
    let request = Csr::from_bytes(&dearmor(CSR_KIND, &read_text(&a.csr)?)?)?;
    let mut ca = open_or_create_ca(ctx, &a.ca, Mode::Current)?;
    let ra_key = SigningKeyPair::from_secret_bytes(&dearmor(KEY_KIND, &read_text(&a.ca.join(RA_KEY_FILE))?)?)?;
    let ra = RegistrationAuthority::new(&format!("ra-{}", ca.name()), ra_key, IssuancePolicy::permissive());
    let token = match ra.review(&request, ctx.now) {
        Ok(t) => t,
        Err(rejection) => {
            writeln!(ctx.out, "REFUSED {rejection}")?;
            return Ok(Status::Reject);
        }
    };
    let cert = match ca.issue(&token, a.days, ctx.now) {
        Ok(c) => c,
        Err(PkiError::Refused(rejection)) => {
            writeln!(ctx.out, "REFUSED {rejection}")?;
            return Ok(Status::Reject);
        }
        Err(e) => return Err(e.into()),
    };
    let mut chain = vec![cert.clone()];
    chain.extend(ca.issued_chain());
    write(&a.out, armor_certs(&chain)?)?;
    ca.save(&a.ca)?;
    writeln!(
        ctx.out,
        "issued: {} serial {} by {} for {} days",
        cert.subject_id,
        hex(&cert.serial),
        cert.issuer_id,
        a.days
    )?;
    Ok(Status::Success)
}

pub(crate) fn armor_certs(certs: &[CertificateRecord]) -> Result<String> {
    let mut out = String::new();
    for c in certs {
        out.push_str(&armor(CERT_KIND, &encode_compact(c)?));
    }
    Ok(out)
}

/// All certificates in an armoured file, in order.
pub(crate) fn read_certs(path: &Path) -> Result<Vec<CertificateRecord>> {
    let items = dearmor_all(&read_text(path)?)?;
    if items.is_empty() {
        return fail(format!("{}: no certificates", path.display()));
    }
    items
        .into_iter()
        .map(|(kind, bytes)| {
            if kind != CERT_KIND {
                return fail(format!("{}: unexpected {kind} envelope", path.display()));
            }
            Ok(decode_compact(&bytes)?)
        })
        .collect()
}

pub(crate) fn read_crl(path: &Path) -> Result<RevocationList> {
    Ok(RevocationList::from_bytes(&dearmor(CRL_KIND, &read_text(path)?)?)?)
}

pub(crate) fn verify(ctx: &mut Ctx<'_>, a: VerifyArgs) -> Result<Status> {
    let mut certs = read_certs(&a.cert)?;
    let leaf = certs.remove(0);
    if let Some(extra) = &a.chain {
        certs.extend(read_certs(extra)?);
    }
    let root = match (&a.ca, &a.root) {
        (Some(dir), _) => load_ca(dir)?.trust_root().clone(),
        (None, Some(file)) => read_certs(file)?.remove(0),
        (None, None) => return fail("pass --ca or --root"),
    };
    let crl = a.crl.as_deref().map(read_crl).transpose()?;
    let verdict = verify_chain(&leaf, &certs, &root, ctx.now, crl.as_ref());
    match &verdict {
        Verdict::Accept => writeln!(ctx.out, "ACCEPT")?,
        Verdict::Reject(r) => writeln!(ctx.out, "REJECT {r}")?,
    }
    Ok(Status::from_bool(verdict.is_accept()))
}

pub(crate) fn revoke_cmd(ctx: &mut Ctx<'_>, a: RevokeArgs) -> Result<Status> {
    let ca = load_ca(&a.ca)?;
    let serial = match (&a.cert, &a.serial) {
        (Some(file), _) => read_certs(file)?.remove(0).serial,
        (None, Some(s)) => parse_hex(s)?,
        (None, None) => return fail("pass --cert or --serial"),
    };
    let current = if a.crl.exists() {
        read_crl(&a.crl)?
    } else {
        RevocationList::empty(&ca, ctx.now)
    };
    let updated = revoke(&serial, &current, &ca, ctx.now)?;
    write(&a.crl, armor(CRL_KIND, &updated.to_bytes()))?;
    writeln!(
        ctx.out,
        "revoked: {} ({} entries)",
        hex(&serial),
        updated.revoked_serials.len()
    )?;
    Ok(Status::Success)
}

/// A certificate in either the armoured compact form or baseline text.
fn read_any_cert(path: &Path) -> Result<CertificateRecord> {
    let data = read(path)?;
    if data.starts_with(b"-----BEGIN C2A ") {
        return Ok(read_certs(path)?.remove(0));
    }
    Ok(decode_baseline(&data)?)
}

pub(crate) fn cert(ctx: &mut Ctx<'_>, cmd: CertCmd) -> Result<Status> {
    match cmd {
        CertCmd::Encode { input, out } => {
            let c = decode_baseline(&read(&input)?)?;
            let compact = encode_compact(&c)?;
            write(&out, armor(CERT_KIND, &compact))?;
            writeln!(ctx.out, "encoded: {} bytes", compact.len())?;
        }
        CertCmd::Decode { input, out } => {
            let c = read_certs(&input)?.remove(0);
            let baseline = encode_baseline(&c);
            write(&out, &baseline)?;
            writeln!(ctx.out, "decoded: {} bytes", baseline.len())?;
        }
        CertCmd::Size { input } => {
            let c = match input {
                Some(p) => read_any_cert(&p)?,
                None => reference_device_certificate(),
            };
            writeln!(ctx.out, "{}", size_report(&c)?)?;
        }
    }
    Ok(Status::Success)
}
