// Licensed under the Apache-2.0 license

//! Encrypted state file:
//! `C2A-SE01 || salt(16) || nonce(12) || AES-256-GCM(payload)`, with the
//! magic and salt as associated data.

use std::path::Path;

use uuid::Uuid;
use zeroize::Zeroizing;

use super::{
    decode_chain, DeviceIdentity, KeyHandle, KeystoreError, OtpSlot, SecureElement, StoredKey,
    OBJ_CA_CHAIN, OBJ_DEVICE_CERT, OBJ_TRUST_ROOT, SLOT_COUNT,
};
use crate::compact_cert::cbor::{Reader, Writer};
use crate::compact_cert::decode_compact;
use crate::entropy::{gated_bytes, EntropySource};
use crate::suite_registry::primitives::{
    aead_open, aead_seal, one_step_kdf, PublicKey, SigningKeyPair, TransportKeyPair,
    AEAD_NONCE_LEN,
};
use crate::suite_registry::{Algorithm, Mode};

pub const STORE_MAGIC: &[u8; 8] = b"C2A-SE01";
const STORE_LABEL: &[u8] = b"se-store-v1";
const SALT_LEN: usize = 16;
const STORE_AEAD: Algorithm = Algorithm::Aes256Gcm;
const STORE_KDF_HASH: Algorithm = Algorithm::Sha256;
const KEY_SIGNING: u64 = 0;
const KEY_AGREEMENT: u64 = 1;

fn store_key(passphrase: &[u8], salt: &[u8]) -> Result<Zeroizing<Vec<u8>>, KeystoreError> {
    Ok(one_step_kdf(
        STORE_KDF_HASH,
        passphrase,
        STORE_LABEL,
        salt,
        STORE_AEAD.spec().key_len,
    )?)
}

impl SecureElement {
    fn payload(&self) -> Zeroizing<Vec<u8>> {
        let mut w = Writer::new();
        w.array(5).array(self.slots.len());
        for s in &self.slots {
            match &s.data {
                Some(d) => w.array(1).bytes(d),
                None => w.array(0),
            };
        }
        w.array(self.keys.len());
        for (h, k) in &self.keys {
            let kind = match k {
                StoredKey::Signing(_) => KEY_SIGNING,
                StoredKey::Agreement(_) => KEY_AGREEMENT,
            };
            w.array(3).uint(h.0 as u64).uint(kind).bytes(&k.to_secret_bytes());
        }
        w.uint(self.next_handle as u64);
        match &self.identity {
            Some(id) => w
                .array(4)
                .bytes(id.device_uuid.as_bytes())
                .uint(id.mode.code())
                .bytes(&id.root_public_key.to_bytes())
                .uint(id.root_key_handle.0 as u64),
            None => w.array(0),
        };
        match &self.last_booted_version {
            Some(v) => w.array(1).text(v),
            None => w.array(0),
        };
        Zeroizing::new(w.finish())
    }

    fn from_payload(data: &[u8]) -> Result<Self, KeystoreError> {
        let bad = |m: &str| KeystoreError::MalformedStore(m.to_string());
        let mut r = Reader::new(data);
        r.array_of(5)?;
        if r.array()? != SLOT_COUNT {
            return Err(bad("slot count"));
        }
        let mut slots = Vec::with_capacity(SLOT_COUNT);
        for index in 0..SLOT_COUNT {
            let data = match r.array()? {
                0 => None,
                1 => Some(r.bytes()?.to_vec()),
                _ => return Err(bad("slot entry")),
            };
            slots.push(OtpSlot { index, data });
        }
        let mut keys = std::collections::BTreeMap::new();
        for _ in 0..r.array()? {
            r.array_of(3)?;
            let h = u32::try_from(r.uint()?).map_err(|_| bad("key handle"))?;
            let key = match r.uint()? {
                KEY_SIGNING => StoredKey::Signing(SigningKeyPair::from_secret_bytes(r.bytes()?)?),
                KEY_AGREEMENT => StoredKey::Agreement(TransportKeyPair::from_secret_bytes(r.bytes()?)?),
                _ => return Err(bad("key kind")),
            };
            keys.insert(KeyHandle(h), key);
        }
        let next_handle = u32::try_from(r.uint()?).map_err(|_| bad("next handle"))?;
        let mut se = SecureElement {
            slots,
            keys,
            next_handle,
            identity: None,
            last_booted_version: None,
        };
        match r.array()? {
            0 => {}
            4 => {
                let uuid = Uuid::from_slice(r.bytes()?).map_err(|_| bad("device uuid"))?;
                let mode = Mode::from_code(r.uint()?).ok_or_else(|| bad("mode"))?;
                let root_public_key = PublicKey::from_bytes(r.bytes()?)?;
                let handle = KeyHandle(u32::try_from(r.uint()?).map_err(|_| bad("handle"))?);
                let slot = |i: usize| se.otp_object(i).ok_or_else(|| bad("missing OTP object"));
                se.identity = Some(DeviceIdentity {
                    device_uuid: uuid,
                    mode,
                    root_public_key,
                    root_key_handle: handle,
                    device_certificate: decode_compact(&slot(OBJ_DEVICE_CERT)?)?,
                    ca_chain: decode_chain(&slot(OBJ_CA_CHAIN)?)?,
                    trust_root: decode_compact(&slot(OBJ_TRUST_ROOT)?)?,
                });
            }
            _ => return Err(bad("identity entry")),
        }
        se.last_booted_version = match r.array()? {
            0 => None,
            1 => Some(r.text()?.to_string()),
            _ => return Err(bad("boot record")),
        };
        r.finish()?;
        Ok(se)
    }

    pub fn seal<S: EntropySource + ?Sized>(
        &self,
        passphrase: &[u8],
        source: &mut S,
    ) -> Result<Vec<u8>, KeystoreError> {
        let salt = gated_bytes(source, SALT_LEN)?;
        let nonce = gated_bytes(source, AEAD_NONCE_LEN)?;
        let key = store_key(passphrase, &salt)?;
        let mut aad = STORE_MAGIC.to_vec();
        aad.extend_from_slice(&salt);
        let ct = aead_seal(STORE_AEAD, &key, &nonce, &aad, &self.payload())?;
        let mut out = aad;
        out.extend_from_slice(&nonce);
        out.extend_from_slice(&ct);
        Ok(out)
    }

    pub fn unseal(data: &[u8], passphrase: &[u8]) -> Result<Self, KeystoreError> {
        let header = STORE_MAGIC.len() + SALT_LEN;
        if data.len() < header + AEAD_NONCE_LEN || &data[..STORE_MAGIC.len()] != STORE_MAGIC {
            return Err(KeystoreError::MalformedStore("not a secure-element store".into()));
        }
        let (aad, rest) = data.split_at(header);
        let (nonce, ct) = rest.split_at(AEAD_NONCE_LEN);
        let key = store_key(passphrase, &aad[STORE_MAGIC.len()..])?;
        let payload = Zeroizing::new(
            aead_open(STORE_AEAD, &key, nonce, aad, ct)
                .map_err(|_| KeystoreError::StoreAuthentication)?,
        );
        Self::from_payload(&payload)
    }

    pub fn save<S: EntropySource + ?Sized>(
        &self,
        path: &Path,
        passphrase: &[u8],
        source: &mut S,
    ) -> Result<(), KeystoreError> {
        let sealed = self.seal(passphrase, source)?;
        crate::pki::write_secret(path, &sealed)
            .map_err(|e| KeystoreError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path, passphrase: &[u8]) -> Result<Self, KeystoreError> {
        let data = std::fs::read(path)
            .map_err(|e| KeystoreError::Io(format!("{}: {e}", path.display())))?;
        Self::unseal(&data, passphrase)
    }
}
