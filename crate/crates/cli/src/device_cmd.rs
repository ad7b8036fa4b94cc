// Licensed under the Apache-2.0 license

//! Secure-element provisioning and inspection, firmware signing and boot.

use std::path::Path;

use chip2app_core::compact_cert::dearmor;
use chip2app_core::integrity::{
    secure_boot_bytes, sign_firmware, BootVerdict, FirmwareMeta, FirmwareSigner, MANIFEST_KIND,
};
use chip2app_core::keystore::{SecureElement, SlotState};
use chip2app_core::suite_registry::modes_of;

use crate::args::{DeviceCmd, FwCmd, ProvisionArgs};
use crate::pki_cmd::{armor_certs, load_ca, open_or_create_ca};
use crate::{fail, hex, read, read_text, write, Ctx, Result, Status};

fn open_store(ctx: &Ctx<'_>, path: &Path) -> Result<SecureElement> {
    Ok(SecureElement::load(path, &ctx.passphrase()?)?)
}

fn save_store(ctx: &mut Ctx<'_>, path: &Path, se: &SecureElement) -> Result<()> {
    let pass = ctx.passphrase()?;
    se.save(path, &pass, &mut ctx.rng)?;
    Ok(())
}

pub(crate) fn provision(ctx: &mut Ctx<'_>, a: ProvisionArgs) -> Result<Status> {
    let store = ctx.store(a.store)?;
    let mut se = if store.exists() {
        open_store(ctx, &store)?
    } else {
        SecureElement::new()
    };
    let mut ca = open_or_create_ca(ctx, &a.ca, a.mode)?;
    let id = se.provision(a.mode, &mut ca, &mut ctx.rng, ctx.now)?;
    save_store(ctx, &store, &se)?;
    ca.save(&a.ca)?;
    if let Some(out) = &a.cert_out {
        let mut certs = vec![id.device_certificate.clone()];
        certs.extend(id.ca_chain.iter().cloned());
        write(out, armor_certs(&certs)?)?;
    }
    writeln!(ctx.out, "provisioned: {}", id.device_certificate.subject_id)?;
    writeln!(ctx.out, "mode: {}", id.mode)?;
    writeln!(ctx.out, "root-key: {} {}", id.root_public_key.algorithm, id.root_key_handle)?;
    writeln!(
        ctx.out,
        "certificate: serial {} issued by {}",
        hex(&id.device_certificate.serial),
        id.device_certificate.issuer_id
    )?;
    writeln!(ctx.out, "trust-root: {}", id.trust_root.subject_id)?;
    Ok(Status::Success)
}

pub(crate) fn device(ctx: &mut Ctx<'_>, cmd: DeviceCmd) -> Result<Status> {
    let DeviceCmd::Show { store } = cmd;
    let store = ctx.store(store)?;
    let se = open_store(ctx, &store)?;
    match se.identity() {
        Some(id) => {
            writeln!(ctx.out, "device: {}", id.device_certificate.subject_id)?;
            writeln!(ctx.out, "uuid: {}", id.device_uuid)?;
            writeln!(ctx.out, "mode: {}", id.mode)?;
            writeln!(
                ctx.out,
                "root-key: {} {} ({} bytes)",
                id.root_public_key.algorithm,
                id.root_key_handle,
                id.root_public_key.bytes.len()
            )?;
            writeln!(ctx.out, "issuer: {}", id.device_certificate.issuer_id)?;
            writeln!(ctx.out, "trust-root: {}", id.trust_root.subject_id)?;
        }
        None => writeln!(ctx.out, "device: unprovisioned")?,
    }
    for slot in se.slots() {
        match (slot.state(), slot.data()) {
            (SlotState::Programmed, Some(d)) => writeln!(ctx.out, "otp[{}]: programmed {} bytes", slot.index, d.len())?,
            _ => writeln!(ctx.out, "otp[{}]: blank", slot.index)?,
        }
    }
    writeln!(ctx.out, "last-boot: {}", se.last_booted_version().unwrap_or("none"))?;
    Ok(Status::Success)
}

pub(crate) fn fw(ctx: &mut Ctx<'_>, cmd: FwCmd) -> Result<Status> {
    match cmd {
        FwCmd::Sign {
            image,
            version,
            signer,
            out,
            model,
            mode,
        } => {
            let data = read(&image)?;
            let ca = load_ca(&signer)?;
            let alg = ca.key().algorithm();
            let mode = match mode.or_else(|| modes_of(alg).first().copied()) {
                Some(m) => m,
                None => return fail(format!("{alg} is not a signature algorithm of any mode")),
            };
            let meta = FirmwareMeta::new(&version, &model)?;
            let manifest = sign_firmware(&data, &meta, &FirmwareSigner::from_authority(&ca), mode, ctx.now)?;
            write(&out, manifest.to_envelope()?)?;
            writeln!(ctx.out, "signed: {} bytes as {} for {}", data.len(), manifest.fw_version, manifest.device_model)?;
            writeln!(ctx.out, "digest: {}={}", manifest.digest_alg, hex(&manifest.image_digest))?;
            writeln!(ctx.out, "signer: {} ({alg}, {mode} mode)", manifest.signer_cert.subject_id)?;
            Ok(Status::Success)
        }
        FwCmd::Verify { image, manifest, store } => {
            let data = read(&image)?;
            // An unreadable envelope is a malformed manifest, not a usage error.
            let bytes = dearmor(MANIFEST_KIND, &read_text(&manifest)?).unwrap_or_default();
            let store = ctx.store(store)?;
            let mut se = open_store(ctx, &store)?;
            let verdict = secure_boot_bytes(&mut se, &data, &bytes, ctx.now);
            writeln!(ctx.out, "{verdict}")?;
            if let BootVerdict::Halt { detail: Some(d), .. } = &verdict {
                writeln!(ctx.out, "detail: {d}")?;
            }
            if verdict.is_boot() {
                save_store(ctx, &store, &se)?;
            }
            Ok(Status::from_bool(verdict.is_boot()))
        }
    }
}
