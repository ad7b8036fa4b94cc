// Licensed under the Apache-2.0 license

//! Software secure element: write-once OTP slots, an internal key table
//! reachable only through handles, and root-key provisioning.

mod store;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;
use uuid::Uuid;
use zeroize::Zeroizing;

use crate::compact_cert::cbor::{CborError, Reader, Writer};
use crate::compact_cert::{decode_compact, encode_compact, CertificateRecord, CompactError};
use crate::entropy::{gated_bytes, EntropyError, EntropySource};
use crate::pki::{CertificateAuthority, PkiError};
use crate::suite_registry::primitives::{CryptoError, PublicKey, SigningKeyPair, TransportKeyPair};
use crate::suite_registry::{primary, Algorithm, Mode, Role};

pub use store::STORE_MAGIC;

pub const SLOT_COUNT: usize = 8;
pub const SLOT_SIZE: usize = 4096;
/// Provisioned objects are burnt from slot 0 upward in this order, each
/// as `u32be(len) || data` spread over as many consecutive slots as needed.
pub const OBJ_DEVICE_CERT: usize = 0;
pub const OBJ_TRUST_ROOT: usize = 1;
pub const OBJ_CA_CHAIN: usize = 2;
const OBJ_COUNT: usize = 3;
pub const DEVICE_CERT_DAYS: u64 = 398;

pub const EXT_DEVICE_UUID: &str = "c2a.device-uuid";
pub const EXT_MODE: &str = "c2a.mode";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KeystoreError {
    #[error("OTP slot {index} is already programmed")]
    WriteOnce { index: usize },
    #[error("OTP slot {index} does not exist (slots 0..{SLOT_COUNT})")]
    SlotOutOfRange { index: usize },
    #[error("{len} bytes do not fit OTP slot {index} ({SLOT_SIZE} bytes)")]
    SlotOverflow { index: usize, len: usize },
    #[error("unknown key handle {0}")]
    UnknownHandle(KeyHandle),
    #[error("{0} does not hold a {1} key")]
    WrongKeyKind(KeyHandle, &'static str),
    #[error("OTP exhausted: {needed} slots needed, {SLOT_COUNT} present")]
    OtpExhausted { needed: usize },
    #[error("secure element is already provisioned")]
    AlreadyProvisioned,
    #[error("secure element is not provisioned")]
    NotProvisioned,
    #[error("provisioning refused: {0}")]
    Entropy(#[from] EntropyError),
    #[error("CA refused: {0}")]
    Pki(#[from] PkiError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
    #[error("store cannot be opened: wrong passphrase or corrupted file")]
    StoreAuthentication,
    #[error("malformed store: {0}")]
    MalformedStore(String),
    #[error("{0}")]
    Io(String),
}

impl From<CborError> for KeystoreError {
    fn from(e: CborError) -> Self {
        KeystoreError::MalformedStore(e.to_string())
    }
}

impl From<CompactError> for KeystoreError {
    fn from(e: CompactError) -> Self {
        KeystoreError::MalformedStore(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotState {
    Blank,
    Programmed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OtpSlot {
    pub index: usize,
    data: Option<Vec<u8>>,
}

impl OtpSlot {
    pub fn state(&self) -> SlotState {
        if self.data.is_some() {
            SlotState::Programmed
        } else {
            SlotState::Blank
        }
    }

    pub fn data(&self) -> Option<&[u8]> {
        self.data.as_deref()
    }
}

/// Opaque reference to a key held inside the element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct KeyHandle(u32);

impl fmt::Display for KeyHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "key-{}", self.0)
    }
}

/// Public outcome of provisioning. Holds no secret material.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceIdentity {
    pub device_uuid: Uuid,
    pub mode: Mode,
    pub root_public_key: PublicKey,
    pub root_key_handle: KeyHandle,
    pub device_certificate: CertificateRecord,
    /// Issuing chain above the device certificate, excluding the root.
    pub ca_chain: Vec<CertificateRecord>,
    pub trust_root: CertificateRecord,
}

impl DeviceIdentity {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.array(7)
            .bytes(self.device_uuid.as_bytes())
            .uint(self.mode.code())
            .bytes(&self.root_public_key.to_bytes())
            .uint(self.root_key_handle.0 as u64)
            .bytes(&encode_compact(&self.device_certificate).expect("issued certificates encode"))
            .array(self.ca_chain.len());
        for c in &self.ca_chain {
            w.bytes(&encode_compact(c).expect("issued certificates encode"));
        }
        w.bytes(&encode_compact(&self.trust_root).expect("issued certificates encode"));
        w.finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum StoredKey {
    Signing(SigningKeyPair),
    Agreement(TransportKeyPair),
}

impl StoredKey {
    fn public(&self) -> PublicKey {
        match self {
            StoredKey::Signing(k) => k.public(),
            StoredKey::Agreement(k) => k.public(),
        }
    }

    fn to_secret_bytes(&self) -> Zeroizing<Vec<u8>> {
        match self {
            StoredKey::Signing(k) => k.to_secret_bytes(),
            StoredKey::Agreement(k) => k.to_secret_bytes(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecureElement {
    slots: Vec<OtpSlot>,
    keys: BTreeMap<KeyHandle, StoredKey>,
    next_handle: u32,
    identity: Option<DeviceIdentity>,
    last_booted_version: Option<String>,
}

impl Default for SecureElement {
    fn default() -> Self {
        Self::new()
    }
}

fn encode_chain(chain: &[CertificateRecord]) -> Vec<u8> {
    let mut w = Writer::new();
    w.array(chain.len());
    for c in chain {
        w.bytes(&encode_compact(c).expect("issued certificates encode"));
    }
    w.finish()
}

fn decode_chain(data: &[u8]) -> Result<Vec<CertificateRecord>, KeystoreError> {
    let mut r = Reader::new(data);
    let n = r.array()?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(decode_compact(r.bytes()?)?);
    }
    r.finish()?;
    Ok(out)
}

impl SecureElement {
    pub fn new() -> Self {
        Self {
            slots: (0..SLOT_COUNT)
                .map(|index| OtpSlot { index, data: None })
                .collect(),
            keys: BTreeMap::new(),
            next_handle: 1,
            identity: None,
            last_booted_version: None,
        }
    }

    pub fn slots(&self) -> &[OtpSlot] {
        &self.slots
    }

    pub fn otp_write(&mut self, index: usize, data: &[u8]) -> Result<(), KeystoreError> {
        let slot = self
            .slots
            .get_mut(index)
            .ok_or(KeystoreError::SlotOutOfRange { index })?;
        if slot.data.is_some() {
            return Err(KeystoreError::WriteOnce { index });
        }
        if data.len() > SLOT_SIZE {
            return Err(KeystoreError::SlotOverflow {
                index,
                len: data.len(),
            });
        }
        slot.data = Some(data.to_vec());
        Ok(())
    }

    pub fn otp_read(&self, index: usize) -> Result<Option<&[u8]>, KeystoreError> {
        self.slots
            .get(index)
            .map(OtpSlot::data)
            .ok_or(KeystoreError::SlotOutOfRange { index })
    }

    pub fn identity(&self) -> Option<&DeviceIdentity> {
        self.identity.as_ref()
    }

    /// Reads provisioned object `n` (see `OBJ_*`).
    pub fn otp_object(&self, n: usize) -> Option<Vec<u8>> {
        let mut slot = 0;
        for i in 0..=n {
            let first = self.slots.get(slot)?.data.as_deref()?;
            let len = u32::from_be_bytes(first.get(..4)?.try_into().ok()?) as usize;
            let span = (len + 4).div_ceil(SLOT_SIZE);
            if i == n {
                let mut framed = Vec::with_capacity(span * SLOT_SIZE);
                for s in &self.slots[slot..(slot + span).min(SLOT_COUNT)] {
                    framed.extend_from_slice(s.data.as_deref()?);
                }
                return framed.get(4..4 + len).map(<[u8]>::to_vec);
            }
            slot += span;
        }
        None
    }

    fn burn_objects(&mut self, objects: &[&[u8]]) -> Result<(), KeystoreError> {
        let framed: Vec<Vec<u8>> = objects
            .iter()
            .map(|o| [&(o.len() as u32).to_be_bytes()[..], o].concat())
            .collect();
        let needed: usize = framed.iter().map(|f| f.len().div_ceil(SLOT_SIZE)).sum();
        if needed > SLOT_COUNT {
            return Err(KeystoreError::OtpExhausted { needed });
        }
        if let Some(s) = self.slots[..needed].iter().find(|s| s.data.is_some()) {
            return Err(KeystoreError::WriteOnce { index: s.index });
        }
        let mut slot = 0;
        for f in &framed {
            for chunk in f.chunks(SLOT_SIZE) {
                self.otp_write(slot, chunk)?;
                slot += 1;
            }
        }
        Ok(())
    }

    /// Trust anchor burnt into OTP during provisioning.
    pub fn trust_root(&self) -> Option<CertificateRecord> {
        self.otp_object(OBJ_TRUST_ROOT)
            .and_then(|b| decode_compact(&b).ok())
    }

    pub fn last_booted_version(&self) -> Option<&str> {
        self.last_booted_version.as_deref()
    }

    pub fn record_boot(&mut self, version: &str) {
        self.last_booted_version = Some(version.to_string());
    }

    fn insert_key(&mut self, key: StoredKey) -> KeyHandle {
        let h = KeyHandle(self.next_handle);
        self.next_handle += 1;
        self.keys.insert(h, key);
        h
    }

    fn key(&self, handle: KeyHandle) -> Result<&StoredKey, KeystoreError> {
        self.keys
            .get(&handle)
            .ok_or(KeystoreError::UnknownHandle(handle))
    }

    pub fn sign(&self, handle: KeyHandle, message: &[u8]) -> Result<Vec<u8>, KeystoreError> {
        match self.key(handle)? {
            StoredKey::Signing(k) => Ok(k.sign(message)),
            StoredKey::Agreement(_) => Err(KeystoreError::WrongKeyKind(handle, "signing")),
        }
    }

    pub fn public_key(&self, handle: KeyHandle) -> Result<PublicKey, KeystoreError> {
        Ok(self.key(handle)?.public())
    }

    /// Generates a static key-agreement (or KEM) key inside the element.
    pub fn generate_agreement_key<S: EntropySource + ?Sized>(
        &mut self,
        algorithm: Algorithm,
        source: &mut S,
    ) -> Result<KeyHandle, KeystoreError> {
        let key = TransportKeyPair::generate(algorithm, source)?;
        Ok(self.insert_key(StoredKey::Agreement(key)))
    }

    /// Completes key agreement (or decapsulation) against `message` with the
    /// key behind `handle`. The private key never leaves the element.
    pub fn agree(&self, handle: KeyHandle, message: &[u8]) -> Result<Zeroizing<Vec<u8>>, KeystoreError> {
        match self.key(handle)? {
            StoredKey::Agreement(k) => Ok(k.respond(message)?),
            StoredKey::Signing(_) => Err(KeystoreError::WrongKeyKind(handle, "key-agreement")),
        }
    }

    /// Root-key provisioning:
    /// 1. generate the root key pair from gated entropy,
    /// 2. derive its public key,
    /// 3. have the CA sign a device certificate,
    /// 4. burn certificate, trust root and chain into OTP,
    /// 5. retain the private key behind a handle.
    pub fn provision<S: EntropySource + ?Sized>(
        &mut self,
        mode: Mode,
        ca: &mut CertificateAuthority,
        source: &mut S,
        now: u64,
    ) -> Result<DeviceIdentity, KeystoreError> {
        if self.identity.is_some() || self.slots[0].data.is_some() {
            return Err(KeystoreError::AlreadyProvisioned);
        }
        let uuid_bytes: [u8; 16] = gated_bytes(source, 16)?
            .as_slice()
            .try_into()
            .expect("16 bytes");
        let device_uuid = uuid::Builder::from_random_bytes(uuid_bytes).into_uuid();

        let algorithm: Algorithm = primary(mode, Role::Signature)
            .expect("every mode has a signature algorithm")
            .algorithm;
        let key = SigningKeyPair::generate(algorithm, source)?;
        let root_public_key = key.public();

        let extensions = BTreeMap::from([
            (EXT_DEVICE_UUID.to_string(), device_uuid.as_bytes().to_vec()),
            (EXT_MODE.to_string(), vec![mode.code() as u8]),
        ]);
        let device_certificate = ca.issue_for_key(
            &format!("device-{device_uuid}"),
            root_public_key.clone(),
            DEVICE_CERT_DAYS,
            now,
            extensions,
        )?;

        let ca_chain = ca.issued_chain();
        let trust_root = ca.trust_root().clone();
        let cert_bytes = encode_compact(&device_certificate).map_err(PkiError::from)?;
        let root_bytes = encode_compact(&trust_root).map_err(PkiError::from)?;
        let chain_bytes = encode_chain(&ca_chain);
        let mut objects: [&[u8]; OBJ_COUNT] = [&[]; OBJ_COUNT];
        objects[OBJ_DEVICE_CERT] = &cert_bytes;
        objects[OBJ_TRUST_ROOT] = &root_bytes;
        objects[OBJ_CA_CHAIN] = &chain_bytes;
        self.burn_objects(&objects)?;

        let root_key_handle = self.insert_key(StoredKey::Signing(key));
        let identity = DeviceIdentity {
            device_uuid,
            mode,
            root_public_key,
            root_key_handle,
            device_certificate,
            ca_chain,
            trust_root,
        };
        self.identity = Some(identity.clone());
        Ok(identity)
    }
}

pub fn provision_device<S: EntropySource + ?Sized>(
    se: &mut SecureElement,
    mode: Mode,
    ca: &mut CertificateAuthority,
    source: &mut S,
    now: u64,
) -> Result<DeviceIdentity, KeystoreError> {
    se.provision(mode, ca, source, now)
}

pub fn otp_write(se: &mut SecureElement, index: usize, data: &[u8]) -> Result<(), KeystoreError> {
    se.otp_write(index, data)
}

pub fn sign_with_root(
    se: &SecureElement,
    identity: &DeviceIdentity,
    message: &[u8],
) -> Result<Vec<u8>, KeystoreError> {
    se.sign(identity.root_key_handle, message)
}

pub fn export_public(identity: &DeviceIdentity) -> (PublicKey, CertificateRecord) {
    (
        identity.root_public_key.clone(),
        identity.device_certificate.clone(),
    )
}
