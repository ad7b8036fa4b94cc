// Licensed under the Apache-2.0 license

//! Hybrid public-key encryption.
//!
//! A fresh content key encrypts the payload under the mode's AEAD. The
//! recipient's transport key protects only that content key: Montgomery
//! agreement in current mode, ML-KEM in future mode. The transport secret is
//! run through the one-step KDF to a key-encryption key which wraps the
//! content key.

use thiserror::Error;
use zeroize::Zeroizing;

use super::primitives::{
    aead_open, aead_seal, one_step_kdf, transport_initiate, CryptoError, PublicKey,
    TransportKeyPair, AEAD_NONCE_LEN, AEAD_TAG_LEN,
};
use super::{permitted, primary, Algorithm, Mode, Role};
use crate::entropy::{gated_bytes, EntropyError, EntropySource};

const MAGIC: &[u8; 4] = b"C2AH";
const VERSION: u8 = 1;
const WRAP_LABEL: &[u8] = b"c2a-hybrid-wrap-v1";
// The KEK is single use, so the wrap can run under a fixed nonce.
const WRAP_NONCE: [u8; AEAD_NONCE_LEN] = [0; AEAD_NONCE_LEN];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HybridError {
    #[error("{algorithm} keys cannot be used for {mode} mode hybrid encryption")]
    ModeMismatch { mode: Mode, algorithm: Algorithm },
    #[error("authentication failed")]
    Authentication,
    #[error("malformed hybrid ciphertext: {0}")]
    Malformed(String),
    #[error(transparent)]
    Entropy(EntropyError),
    #[error(transparent)]
    Crypto(CryptoError),
}

impl From<CryptoError> for HybridError {
    fn from(e: CryptoError) -> Self {
        match e {
            CryptoError::Entropy(e) => HybridError::Entropy(e),
            CryptoError::Authentication | CryptoError::DegenerateSecret => {
                HybridError::Authentication
            }
            other => HybridError::Crypto(other),
        }
    }
}

impl From<EntropyError> for HybridError {
    fn from(e: EntropyError) -> Self {
        HybridError::Entropy(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridCiphertext {
    pub mode: Mode,
    pub transport: Algorithm,
    pub aead: Algorithm,
    /// Transport message followed by the wrapped content key.
    pub encapsulated_key: Vec<u8>,
    pub nonce: Vec<u8>,
    /// AEAD ciphertext with its tag appended.
    pub body: Vec<u8>,
}

fn transport_message_len(algorithm: Algorithm) -> usize {
    let spec = algorithm.spec();
    match spec.role {
        Role::KeyEncapsulation => spec.output_len,
        _ => spec.key_len,
    }
}

fn check_transport(mode: Mode, algorithm: Algorithm) -> Result<(), HybridError> {
    let ok = match mode {
        Mode::Current => permitted(mode, Role::KeyAgreement, algorithm),
        Mode::Future => permitted(mode, Role::KeyEncapsulation, algorithm),
    };
    if ok {
        Ok(())
    } else {
        Err(HybridError::ModeMismatch { mode, algorithm })
    }
}

fn aead_for(mode: Mode) -> Algorithm {
    primary(mode, Role::SymmetricEncryption)
        .expect("every mode has an AEAD")
        .algorithm
}

fn kdf_hash(mode: Mode) -> Algorithm {
    primary(mode, Role::Hash).expect("every mode has a hash").algorithm
}

fn header(mode: Mode, transport: Algorithm, aead: Algorithm) -> [u8; 8] {
    let mut h = [0u8; 8];
    h[..4].copy_from_slice(MAGIC);
    h[4] = VERSION;
    h[5] = mode.code() as u8;
    h[6] = transport.id().expect("transport algorithms have wire ids") as u8;
    h[7] = aead.id().expect("AEAD algorithms have wire ids") as u8;
    h
}

fn body_aad(header: &[u8; 8], encapsulated_key: &[u8]) -> Vec<u8> {
    let mut aad = header.to_vec();
    aad.extend_from_slice(encapsulated_key);
    aad
}

fn wrap_key(
    mode: Mode,
    aead: Algorithm,
    shared: &[u8],
    message: &[u8],
    recipient_public: &[u8],
) -> Result<Zeroizing<Vec<u8>>, CryptoError> {
    let mut context = message.to_vec();
    context.extend_from_slice(recipient_public);
    one_step_kdf(
        kdf_hash(mode),
        shared,
        WRAP_LABEL,
        &context,
        aead.spec().key_len,
    )
}

/// Encrypts `plaintext` to `recipient` under `mode`.
pub fn hybrid_encrypt<S: EntropySource + ?Sized>(
    recipient: &PublicKey,
    plaintext: &[u8],
    mode: Mode,
    source: &mut S,
) -> Result<HybridCiphertext, HybridError> {
    check_transport(mode, recipient.algorithm)?;
    let aead = aead_for(mode);
    let key_len = aead.spec().key_len;

    let content_key = gated_bytes(source, key_len)?;
    let nonce = gated_bytes(source, AEAD_NONCE_LEN)?;
    let (message, shared) = transport_initiate(recipient.algorithm, &recipient.bytes, source)?;

    let kek = wrap_key(mode, aead, &shared, &message, &recipient.bytes)?;
    let wrapped = aead_seal(aead, &kek, &WRAP_NONCE, &message, &content_key)?;

    let mut encapsulated_key = message;
    encapsulated_key.extend_from_slice(&wrapped);

    let hdr = header(mode, recipient.algorithm, aead);
    let body = aead_seal(
        aead,
        &content_key,
        &nonce,
        &body_aad(&hdr, &encapsulated_key),
        plaintext,
    )?;
    Ok(HybridCiphertext {
        mode,
        transport: recipient.algorithm,
        aead,
        encapsulated_key,
        nonce: nonce.to_vec(),
        body,
    })
}

/// Recovers the plaintext, or fails without producing any output.
pub fn hybrid_decrypt(
    recipient: &TransportKeyPair,
    ct: &HybridCiphertext,
) -> Result<Vec<u8>, HybridError> {
    check_transport(ct.mode, ct.transport)?;
    if recipient.algorithm() != ct.transport {
        return Err(HybridError::ModeMismatch {
            mode: ct.mode,
            algorithm: recipient.algorithm(),
        });
    }
    let aead = aead_for(ct.mode);
    if ct.aead != aead {
        return Err(HybridError::ModeMismatch {
            mode: ct.mode,
            algorithm: ct.aead,
        });
    }
    let msg_len = transport_message_len(ct.transport);
    let wrapped_len = aead.spec().key_len + AEAD_TAG_LEN;
    if ct.encapsulated_key.len() != msg_len + wrapped_len {
        return Err(HybridError::Malformed(format!(
            "encapsulated key is {} bytes, expected {}",
            ct.encapsulated_key.len(),
            msg_len + wrapped_len
        )));
    }
    if ct.nonce.len() != AEAD_NONCE_LEN {
        return Err(HybridError::Malformed(format!(
            "nonce is {} bytes, expected {AEAD_NONCE_LEN}",
            ct.nonce.len()
        )));
    }
    if ct.body.len() < AEAD_TAG_LEN {
        return Err(HybridError::Malformed("body shorter than tag".into()));
    }

    let (message, wrapped) = ct.encapsulated_key.split_at(msg_len);
    let shared = recipient.respond(message)?;
    let kek = wrap_key(ct.mode, aead, &shared, message, recipient.public_key())?;
    let content_key = Zeroizing::new(aead_open(aead, &kek, &WRAP_NONCE, message, wrapped)?);
    let hdr = header(ct.mode, ct.transport, aead);
    Ok(aead_open(
        aead,
        &content_key,
        &ct.nonce,
        &body_aad(&hdr, &ct.encapsulated_key),
        &ct.body,
    )?)
}

impl HybridCiphertext {
    /// `header || u32be(len(encapsulated_key)) || encapsulated_key || nonce || body`
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = header(self.mode, self.transport, self.aead).to_vec();
        out.extend_from_slice(&(self.encapsulated_key.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.encapsulated_key);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HybridError> {
        let malformed = |m: &str| HybridError::Malformed(m.to_string());
        if bytes.len() < 12 {
            return Err(malformed("truncated header"));
        }
        if &bytes[..4] != MAGIC {
            return Err(malformed("bad magic"));
        }
        if bytes[4] != VERSION {
            return Err(malformed("unsupported version"));
        }
        let mode = Mode::from_code(bytes[5].into()).ok_or_else(|| malformed("unknown mode"))?;
        let transport =
            Algorithm::from_id(bytes[6].into()).ok_or_else(|| malformed("unknown transport"))?;
        let aead = Algorithm::from_id(bytes[7].into()).ok_or_else(|| malformed("unknown AEAD"))?;
        let ek_len = u32::from_be_bytes(bytes[8..12].try_into().expect("len")) as usize;
        let rest = &bytes[12..];
        if rest.len() < ek_len + AEAD_NONCE_LEN {
            return Err(malformed("truncated body"));
        }
        let (encapsulated_key, rest) = rest.split_at(ek_len);
        let (nonce, body) = rest.split_at(AEAD_NONCE_LEN);
        Ok(Self {
            mode,
            transport,
            aead,
            encapsulated_key: encapsulated_key.to_vec(),
            nonce: nonce.to_vec(),
            body: body.to_vec(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::RandomSource;
    use crate::suite_registry::key_transport;

    fn recipient(mode: Mode, src: &mut RandomSource) -> TransportKeyPair {
        TransportKeyPair::generate(key_transport(mode).algorithm, src).unwrap()
    }

    #[test]
    fn round_trip_both_modes() {
        let mut src = RandomSource::seeded(b"hybrid");
        for mode in Mode::ALL {
            let kp = recipient(mode, &mut src);
            for len in [0usize, 1, 15, 16, 17, 1000] {
                let m = vec![0xa5; len];
                let ct = hybrid_encrypt(&kp.public(), &m, mode, &mut src).unwrap();
                let parsed = HybridCiphertext::from_bytes(&ct.to_bytes()).unwrap();
                assert_eq!(parsed, ct);
                assert_eq!(hybrid_decrypt(&kp, &parsed).unwrap(), m);
            }
        }
    }

    #[test]
    fn x448_is_accepted_in_current_mode() {
        let mut src = RandomSource::seeded(b"x448");
        let kp = TransportKeyPair::generate(Algorithm::X448, &mut src).unwrap();
        let ct = hybrid_encrypt(&kp.public(), b"hi", Mode::Current, &mut src).unwrap();
        assert_eq!(hybrid_decrypt(&kp, &ct).unwrap(), b"hi");
    }

    #[test]
    fn mode_mismatch() {
        let mut src = RandomSource::seeded(b"mm");
        let kp = recipient(Mode::Current, &mut src);
        assert!(matches!(
            hybrid_encrypt(&kp.public(), b"x", Mode::Future, &mut src),
            Err(HybridError::ModeMismatch { .. })
        ));
        let mut ct = hybrid_encrypt(&kp.public(), b"x", Mode::Current, &mut src).unwrap();
        ct.mode = Mode::Future;
        assert!(matches!(hybrid_decrypt(&kp, &ct), Err(HybridError::ModeMismatch { .. })));
    }

    #[test]
    fn wrong_key_fails_authentication() {
        let mut src = RandomSource::seeded(b"wk");
        for mode in Mode::ALL {
            let a = recipient(mode, &mut src);
            let b = recipient(mode, &mut src);
            let ct = hybrid_encrypt(&a.public(), b"secret", mode, &mut src).unwrap();
            assert_eq!(hybrid_decrypt(&b, &ct), Err(HybridError::Authentication));
        }
    }

    #[test]
    fn truncated_encapsulated_key_is_malformed() {
        let mut src = RandomSource::seeded(b"tr");
        let kp = recipient(Mode::Current, &mut src);
        let mut ct = hybrid_encrypt(&kp.public(), b"x", Mode::Current, &mut src).unwrap();
        ct.encapsulated_key.pop();
        assert!(matches!(hybrid_decrypt(&kp, &ct), Err(HybridError::Malformed(_))));
        for cut in 0..12 {
            assert!(HybridCiphertext::from_bytes(&ct.to_bytes()[..cut]).is_err());
        }
    }

    #[test]
    fn every_payload_bit_flip_fails_authentication() {
        let mut src = RandomSource::seeded(b"flip");
        let kp = recipient(Mode::Current, &mut src);
        let ct = hybrid_encrypt(&kp.public(), b"sixteen byte msg", Mode::Current, &mut src).unwrap();
        let bytes = ct.to_bytes();
        for bit in (12 * 8)..(bytes.len() * 8) {
            let mut t = bytes.clone();
            t[bit / 8] ^= 1 << (bit % 8);
            let parsed = HybridCiphertext::from_bytes(&t).unwrap();
            assert_eq!(hybrid_decrypt(&kp, &parsed), Err(HybridError::Authentication), "bit {bit}");
        }
    }

    #[test]
    fn encryption_is_randomised() {
        let mut src = RandomSource::seeded(b"rand");
        let kp = recipient(Mode::Future, &mut src);
        let a = hybrid_encrypt(&kp.public(), b"same", Mode::Future, &mut src).unwrap();
        let b = hybrid_encrypt(&kp.public(), b"same", Mode::Future, &mut src).unwrap();
        assert_ne!(a.encapsulated_key, b.encapsulated_key);
        assert_ne!(a.nonce, b.nonce);
        assert_ne!(a.body, b.body);
    }
}
