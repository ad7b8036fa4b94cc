// Licensed under the Apache-2.0 license

//! Thin dispatch layer from registry algorithms onto their backends.
//!
//! Key pairs are always derived from seed bytes drawn through the entropy
//! gate, so a seeded source reproduces every key in the system.

use aes_gcm::aead::{Aead, KeyInit, Payload};
use aes_gcm::{Aes128Gcm, Aes256Gcm};
use ed25519_dalek::{Signer, Verifier};
use sha2::Sha256;
use sha3::{Digest, Sha3_384, Sha3_512};
use thiserror::Error;
use zeroize::Zeroizing;

use super::{Algorithm, Role};
use crate::compact_cert::cbor::{Reader, Writer};
use crate::entropy::{gated_bytes, EntropyError, EntropySource};

pub const AEAD_NONCE_LEN: usize = 12;
pub const AEAD_TAG_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CryptoError {
    #[error("{algorithm} cannot be used as {expected}")]
    WrongRole { algorithm: Algorithm, expected: Role },
    #[error("{algorithm} is registered but has no backend")]
    NotAvailable { algorithm: Algorithm },
    #[error("invalid {what} length: {got} (expected {expected})")]
    InvalidLength {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid public key for {0}")]
    InvalidPublicKey(Algorithm),
    #[error("key agreement produced a degenerate shared secret")]
    DegenerateSecret,
    #[error("authentication failed")]
    Authentication,
    #[error("malformed key encoding")]
    MalformedKey,
    #[error(transparent)]
    Entropy(#[from] EntropyError),
}

fn expect_role(algorithm: Algorithm, role: Role) -> Result<(), CryptoError> {
    if algorithm.role() != role {
        return Err(CryptoError::WrongRole {
            algorithm,
            expected: role,
        });
    }
    if !algorithm.spec().available {
        return Err(CryptoError::NotAvailable { algorithm });
    }
    Ok(())
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<(), CryptoError> {
    if got != expected {
        return Err(CryptoError::InvalidLength {
            what,
            got,
            expected,
        });
    }
    Ok(())
}

/// Hash `data` with a registry hash algorithm.
pub fn digest(algorithm: Algorithm, data: &[u8]) -> Result<Vec<u8>, CryptoError> {
    digest_parts(algorithm, &[data])
}

pub fn digest_parts(algorithm: Algorithm, parts: &[&[u8]]) -> Result<Vec<u8>, CryptoError> {
    expect_role(algorithm, Role::Hash)?;
    fn run<D: Digest>(parts: &[&[u8]]) -> Vec<u8> {
        let mut h = D::new();
        for p in parts {
            h.update(p);
        }
        h.finalize().to_vec()
    }
    Ok(match algorithm {
        Algorithm::Sha256 => run::<Sha256>(parts),
        Algorithm::Sha3_384 => run::<Sha3_384>(parts),
        Algorithm::Sha3_512 => run::<Sha3_512>(parts),
        _ => unreachable!("role checked"),
    })
}

/// One-step KDF: `Hash(00000001 || secret || label || context)` truncated
/// to `out_len`. `out_len` may not exceed the digest length.
pub fn one_step_kdf(
    hash: Algorithm,
    secret: &[u8],
    label: &[u8],
    context: &[u8],
    out_len: usize,
) -> Result<Zeroizing<Vec<u8>>, CryptoError> {
    let mut out = Zeroizing::new(digest_parts(hash, &[&1u32.to_be_bytes(), secret, label, context])?);
    if out_len > out.len() {
        return Err(CryptoError::InvalidLength {
            what: "KDF output",
            got: out_len,
            expected: out.len(),
        });
    }
    out.truncate(out_len);
    Ok(out)
}

/// A public key tagged with its registry algorithm.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    pub algorithm: Algorithm,
    pub bytes: Vec<u8>,
}

fn encode_tagged(algorithm: Algorithm, bytes: &[u8]) -> Vec<u8> {
    Writer::new()
        .array(2)
        .uint(algorithm.id().expect("keyed algorithms have wire ids"))
        .bytes(bytes)
        .finish()
}

fn decode_tagged(data: &[u8]) -> Result<(Algorithm, &[u8]), CryptoError> {
    let bad = |_| CryptoError::MalformedKey;
    let mut r = Reader::new(data);
    r.array_of(2).map_err(bad)?;
    let alg = Algorithm::from_id(r.uint().map_err(bad)?).ok_or(CryptoError::MalformedKey)?;
    let bytes = r.bytes().map_err(bad)?;
    r.finish().map_err(bad)?;
    Ok((alg, bytes))
}

impl PublicKey {
    /// `[algorithm id, key bytes]` as canonical CBOR.
    pub fn to_bytes(&self) -> Vec<u8> {
        encode_tagged(self.algorithm, &self.bytes)
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, CryptoError> {
        let (algorithm, bytes) = decode_tagged(data)?;
        if bytes.len() != algorithm.spec().key_len {
            return Err(CryptoError::InvalidPublicKey(algorithm));
        }
        Ok(Self {
            algorithm,
            bytes: bytes.to_vec(),
        })
    }
}

pub fn aead_seal(
    algorithm: Algorithm,
    key: &[u8],
    nonce: &[u8],
    aad: &[u8],
    plaintext: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    expect_role(algorithm, Role::SymmetricEncryption)?;
    check_len("AEAD key", key.len(), algorithm.spec().key_len)?;
    check_len("AEAD nonce", nonce.len(), AEAD_NONCE_LEN)?;
    let payload = Payload { msg: plaintext, aad };
    let nonce = nonce.try_into().expect("length checked");
    let out = match algorithm {
        Algorithm::Aes128Gcm => Aes128Gcm::new_from_slice(key)
            .expect("length checked")
            .encrypt(nonce, payload),
        Algorithm::Aes256Gcm => Aes256Gcm::new_from_slice(key)
            .expect("length checked")
            .encrypt(nonce, payload),
        _ => unreachable!("role checked"),
    };
    out.map_err(|_| CryptoError::Authentication)
}

pub fn aead_open(
    algorithm: Algorithm,
    key: &[u8],
    nonce: &[u8],
    aad: &[u8],
    ciphertext: &[u8],
) -> Result<Vec<u8>, CryptoError> {
    expect_role(algorithm, Role::SymmetricEncryption)?;
    check_len("AEAD key", key.len(), algorithm.spec().key_len)?;
    check_len("AEAD nonce", nonce.len(), AEAD_NONCE_LEN)?;
    if ciphertext.len() < AEAD_TAG_LEN {
        return Err(CryptoError::Authentication);
    }
    let payload = Payload {
        msg: ciphertext,
        aad,
    };
    let nonce = nonce.try_into().expect("length checked");
    let out = match algorithm {
        Algorithm::Aes128Gcm => Aes128Gcm::new_from_slice(key)
            .expect("length checked")
            .decrypt(nonce, payload),
        Algorithm::Aes256Gcm => Aes256Gcm::new_from_slice(key)
            .expect("length checked")
            .decrypt(nonce, payload),
        _ => unreachable!("role checked"),
    };
    out.map_err(|_| CryptoError::Authentication)
}

fn signing_seed_len(algorithm: Algorithm) -> usize {
    match algorithm {
        Algorithm::Ed25519 => 32,
        Algorithm::Ed448 => 57,
        Algorithm::MlDsa => 32,
        // sk_seed || sk_prf || pk_seed, 16 bytes each for the 128s set
        Algorithm::SlhDsa => 48,
        _ => 0,
    }
}

type SlhParams = slh_dsa::Sha2_128s;
type MlDsaParams = ml_dsa::MlDsa65;
type MlKemParams = ml_kem::MlKem768;

/// A signature key pair held as its seed. The seed never leaves the crate.
#[derive(Clone)]
pub struct SigningKeyPair {
    algorithm: Algorithm,
    seed: Zeroizing<Vec<u8>>,
    public: Vec<u8>,
}

impl std::fmt::Debug for SigningKeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SigningKeyPair")
            .field("algorithm", &self.algorithm)
            .field("public", &crate::hex(&self.public))
            .finish_non_exhaustive()
    }
}

impl PartialEq for SigningKeyPair {
    fn eq(&self, other: &Self) -> bool {
        self.algorithm == other.algorithm && self.seed == other.seed
    }
}

impl SigningKeyPair {
    /// Generates a key pair of `algorithm` from gated entropy.
    pub fn generate<S: EntropySource + ?Sized>(
        algorithm: Algorithm,
        source: &mut S,
    ) -> Result<Self, CryptoError> {
        expect_role(algorithm, Role::Signature)?;
        let seed = gated_bytes(source, signing_seed_len(algorithm))?;
        Self::from_seed(algorithm, &seed)
    }

    pub(crate) fn from_seed(algorithm: Algorithm, seed: &[u8]) -> Result<Self, CryptoError> {
        expect_role(algorithm, Role::Signature)?;
        check_len("signing seed", seed.len(), signing_seed_len(algorithm))?;
        let public = match algorithm {
            Algorithm::Ed25519 => {
                let sk = ed25519_dalek::SigningKey::from_bytes(seed.try_into().expect("checked"));
                sk.verifying_key().to_bytes().to_vec()
            }
            Algorithm::Ed448 => ed448_signing_key(seed).verifying_key().to_bytes().to_vec(),
            Algorithm::MlDsa => {
                use ml_dsa::signature::Keypair;
                let sk = ml_dsa::SigningKey::<MlDsaParams>::from_seed(&ml_dsa_seed(seed));
                sk.verifying_key().encode().to_vec()
            }
            Algorithm::SlhDsa => {
                let sk = slh_signing_key(seed);
                let vk: &slh_dsa::VerifyingKey<SlhParams> = (*sk).as_ref();
                vk.to_bytes().to_vec()
            }
            _ => unreachable!("role checked"),
        };
        Ok(Self {
            algorithm,
            seed: Zeroizing::new(seed.to_vec()),
            public,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn public_key(&self) -> &[u8] {
        &self.public
    }

    pub fn public(&self) -> PublicKey {
        PublicKey {
            algorithm: self.algorithm,
            bytes: self.public.clone(),
        }
    }

    /// `[algorithm id, seed]`; the only form in which the secret leaves
    /// memory.
    pub fn to_secret_bytes(&self) -> Zeroizing<Vec<u8>> {
        Zeroizing::new(encode_tagged(self.algorithm, &self.seed))
    }

    pub fn from_secret_bytes(data: &[u8]) -> Result<Self, CryptoError> {
        let (algorithm, seed) = decode_tagged(data)?;
        Self::from_seed(algorithm, seed)
    }

    /// Deterministic signature over `message`.
    pub fn sign(&self, message: &[u8]) -> Vec<u8> {
        match self.algorithm {
            Algorithm::Ed25519 => {
                let sk = ed25519_dalek::SigningKey::from_bytes(
                    self.seed.as_slice().try_into().expect("checked"),
                );
                sk.sign(message).to_bytes().to_vec()
            }
            Algorithm::Ed448 => ed448_signing_key(&self.seed)
                .sign_raw(message)
                .to_bytes()
                .to_vec(),
            Algorithm::MlDsa => {
                let sk = ml_dsa::SigningKey::<MlDsaParams>::from_seed(&ml_dsa_seed(&self.seed));
                sk.expanded_key()
                    .sign_deterministic(message, &[])
                    .expect("empty context")
                    .encode()
                    .to_vec()
            }
            Algorithm::SlhDsa => slh_signing_key(&self.seed)
                .try_sign_with_context(message, &[], None)
                .expect("empty context")
                .to_bytes()
                .to_vec(),
            _ => unreachable!("constructed with a signature algorithm"),
        }
    }
}

fn ed448_signing_key(seed: &[u8]) -> ed448_goldilocks::SigningKey {
    ed448_goldilocks::SigningKey::try_from(seed).expect("57-byte seed")
}

fn ml_dsa_seed(seed: &[u8]) -> ml_dsa::Seed {
    ml_dsa::Seed::try_from(seed).expect("32-byte seed")
}

fn slh_signing_key(seed: &[u8]) -> Box<slh_dsa::SigningKey<SlhParams>> {
    Box::new(slh_dsa::SigningKey::<SlhParams>::slh_keygen_internal(
        &seed[..16],
        &seed[16..32],
        &seed[32..48],
    ))
}

/// Verifies `signature` over `message` under `public_key`. Any malformed
/// input is a verification failure.
pub fn verify_signature(
    algorithm: Algorithm,
    public_key: &[u8],
    message: &[u8],
    signature: &[u8],
) -> bool {
    if expect_role(algorithm, Role::Signature).is_err() {
        return false;
    }
    let spec = algorithm.spec();
    if public_key.len() != spec.key_len || signature.len() != spec.output_len {
        return false;
    }
    match algorithm {
        Algorithm::Ed25519 => {
            let Ok(vk) = ed25519_dalek::VerifyingKey::from_bytes(public_key.try_into().expect("len"))
            else {
                return false;
            };
            let sig = ed25519_dalek::Signature::from_bytes(signature.try_into().expect("len"));
            vk.verify_strict(message, &sig).is_ok()
        }
        Algorithm::Ed448 => {
            let Ok(vk) = ed448_goldilocks::VerifyingKey::from_bytes(
                &public_key.try_into().expect("len"),
            ) else {
                return false;
            };
            let Ok(sig) = ed448_goldilocks::Signature::try_from(signature) else {
                return false;
            };
            vk.verify(message, &sig).is_ok()
        }
        Algorithm::MlDsa => {
            let vk = ml_dsa::VerifyingKey::<MlDsaParams>::decode(
                &public_key.try_into().expect("len"),
            );
            let Some(sig) =
                ml_dsa::Signature::<MlDsaParams>::decode(&signature.try_into().expect("len"))
            else {
                return false;
            };
            vk.verify_with_context(message, &[], &sig)
        }
        Algorithm::SlhDsa => {
            let Ok(vk) = slh_dsa::VerifyingKey::<SlhParams>::try_from(public_key) else {
                return false;
            };
            let Ok(sig) = slh_dsa::Signature::<SlhParams>::try_from(signature) else {
                return false;
            };
            vk.try_verify_with_context(message, &[], &sig).is_ok()
        }
        _ => false,
    }
}

fn transport_secret_len(algorithm: Algorithm) -> usize {
    match algorithm {
        Algorithm::X25519 => 32,
        Algorithm::X448 => 56,
        // d || z
        Algorithm::MlKem => 64,
        _ => 0,
    }
}

fn expect_transport(algorithm: Algorithm) -> Result<(), CryptoError> {
    match algorithm.role() {
        Role::KeyAgreement | Role::KeyEncapsulation => expect_role(algorithm, algorithm.role()),
        _ => Err(CryptoError::WrongRole {
            algorithm,
            expected: Role::KeyAgreement,
        }),
    }
}

/// A static key-transport key pair: a Montgomery agreement key or an
/// ML-KEM decapsulation key.
#[derive(Clone)]
pub struct TransportKeyPair {
    algorithm: Algorithm,
    secret: Zeroizing<Vec<u8>>,
    public: Vec<u8>,
}

impl std::fmt::Debug for TransportKeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransportKeyPair")
            .field("algorithm", &self.algorithm)
            .field("public", &crate::hex(&self.public))
            .finish_non_exhaustive()
    }
}

impl PartialEq for TransportKeyPair {
    fn eq(&self, other: &Self) -> bool {
        self.algorithm == other.algorithm && self.secret == other.secret
    }
}

impl TransportKeyPair {
    pub fn generate<S: EntropySource + ?Sized>(
        algorithm: Algorithm,
        source: &mut S,
    ) -> Result<Self, CryptoError> {
        expect_transport(algorithm)?;
        let secret = gated_bytes(source, transport_secret_len(algorithm))?;
        Self::from_secret(algorithm, &secret)
    }

    pub(crate) fn from_secret(algorithm: Algorithm, secret: &[u8]) -> Result<Self, CryptoError> {
        expect_transport(algorithm)?;
        check_len("transport secret", secret.len(), transport_secret_len(algorithm))?;
        let public = match algorithm {
            Algorithm::X25519 => {
                let arr: [u8; 32] = secret.try_into().expect("len");
                let sk = x25519_dalek::StaticSecret::from(arr);
                x25519_dalek::PublicKey::from(&sk).to_bytes().to_vec()
            }
            Algorithm::X448 => {
                let arr: [u8; 56] = secret.try_into().expect("len");
                x448::x448_unchecked(arr, x448_base()).to_vec()
            }
            Algorithm::MlKem => {
                use ml_kem::KeyExport;
                ml_kem_key(secret).encapsulation_key().to_bytes().to_vec()
            }
            _ => unreachable!("checked"),
        };
        Ok(Self {
            algorithm,
            secret: Zeroizing::new(secret.to_vec()),
            public,
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn public_key(&self) -> &[u8] {
        &self.public
    }

    pub fn public(&self) -> PublicKey {
        PublicKey {
            algorithm: self.algorithm,
            bytes: self.public.clone(),
        }
    }

    pub fn to_secret_bytes(&self) -> Zeroizing<Vec<u8>> {
        Zeroizing::new(encode_tagged(self.algorithm, &self.secret))
    }

    pub fn from_secret_bytes(data: &[u8]) -> Result<Self, CryptoError> {
        let (algorithm, secret) = decode_tagged(data)?;
        Self::from_secret(algorithm, secret)
    }

    /// Recipient side of [`transport_initiate`]: recovers the shared secret
    /// from the initiator's message.
    pub fn respond(&self, message: &[u8]) -> Result<Zeroizing<Vec<u8>>, CryptoError> {
        match self.algorithm {
            Algorithm::X25519 => {
                check_len("X25519 public key", message.len(), 32)?;
                let arr: [u8; 32] = self.secret.as_slice().try_into().expect("len");
                let sk = x25519_dalek::StaticSecret::from(arr);
                let peer: [u8; 32] = message.try_into().expect("len");
                let shared = sk.diffie_hellman(&x25519_dalek::PublicKey::from(peer));
                if !shared.was_contributory() {
                    return Err(CryptoError::DegenerateSecret);
                }
                Ok(Zeroizing::new(shared.as_bytes().to_vec()))
            }
            Algorithm::X448 => {
                check_len("X448 public key", message.len(), 56)?;
                let arr: [u8; 56] = self.secret.as_slice().try_into().expect("len");
                let peer: [u8; 56] = message.try_into().expect("len");
                x448::x448(arr, peer)
                    .map(|s| Zeroizing::new(s.to_vec()))
                    .ok_or(CryptoError::DegenerateSecret)
            }
            Algorithm::MlKem => {
                use ml_kem::Decapsulate;
                let expected = Algorithm::MlKem.spec().output_len;
                check_len("ML-KEM ciphertext", message.len(), expected)?;
                let ct = ml_kem::Ciphertext::<MlKemParams>::try_from(message).expect("len");
                let key = ml_kem_key(&self.secret).decapsulate(&ct);
                Ok(Zeroizing::new(key.to_vec()))
            }
            _ => unreachable!("constructed with a transport algorithm"),
        }
    }
}

fn x448_base() -> [u8; 56] {
    let mut base = [0u8; 56];
    base[0] = 5;
    base
}

fn ml_kem_key(secret: &[u8]) -> ml_kem::DecapsulationKey<MlKemParams> {
    ml_kem::DecapsulationKey::<MlKemParams>::from_seed(
        ml_kem::Seed::try_from(secret).expect("64-byte seed"),
    )
}

/// Initiator side of key transport toward `peer_public`.
///
/// Montgomery algorithms generate a fresh ephemeral key and return its
/// public half as the message; ML-KEM encapsulates and returns the
/// ciphertext. The ephemeral secret is dropped (and zeroized) on return.
pub fn transport_initiate<S: EntropySource + ?Sized>(
    algorithm: Algorithm,
    peer_public: &[u8],
    source: &mut S,
) -> Result<(Vec<u8>, Zeroizing<Vec<u8>>), CryptoError> {
    expect_transport(algorithm)?;
    check_len("peer public key", peer_public.len(), algorithm.spec().key_len)?;
    match algorithm {
        Algorithm::X25519 | Algorithm::X448 => {
            let ephemeral = TransportKeyPair::generate(algorithm, source)?;
            let shared = ephemeral.respond(peer_public)?;
            Ok((ephemeral.public.clone(), shared))
        }
        Algorithm::MlKem => {
            let ek = ml_kem::EncapsulationKey::<MlKemParams>::new(
                &peer_public.try_into().expect("len"),
            )
            .map_err(|_| CryptoError::InvalidPublicKey(algorithm))?;
            let m = gated_bytes(source, 32)?;
            let (ct, key) = ek.encapsulate_deterministic(&m.as_slice().try_into().expect("len"));
            Ok((ct.to_vec(), Zeroizing::new(key.to_vec())))
        }
        _ => unreachable!("checked"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::RandomSource;
    use crate::suite_registry::signature_algorithms;

    #[test]
    fn every_signature_algorithm_round_trips() {
        let mut src = RandomSource::seeded(b"sig");
        for alg in signature_algorithms() {
            let kp = SigningKeyPair::generate(alg, &mut src).unwrap();
            let spec = alg.spec();
            assert_eq!(kp.public_key().len(), spec.key_len, "{alg}");
            let sig = kp.sign(b"message");
            assert_eq!(sig.len(), spec.output_len, "{alg}");
            assert!(verify_signature(alg, kp.public_key(), b"message", &sig));
            assert!(!verify_signature(alg, kp.public_key(), b"messagf", &sig));
            assert_eq!(kp.sign(b"message"), sig, "{alg} must sign deterministically");
        }
    }

    #[test]
    fn malformed_signature_inputs_fail_closed() {
        let kp = SigningKeyPair::generate(Algorithm::Ed25519, &mut RandomSource::seeded(b"x")).unwrap();
        let sig = kp.sign(b"m");
        assert!(!verify_signature(Algorithm::Ed25519, &kp.public_key()[..31], b"m", &sig));
        assert!(!verify_signature(Algorithm::Ed25519, kp.public_key(), b"m", &sig[..63]));
        assert!(!verify_signature(Algorithm::Ed448, kp.public_key(), b"m", &sig));
        assert!(!verify_signature(Algorithm::Sha256, kp.public_key(), b"m", &sig));
    }

    #[test]
    fn key_files_round_trip() {
        let mut src = RandomSource::seeded(b"files");
        let kp = SigningKeyPair::generate(Algorithm::Ed448, &mut src).unwrap();
        let back = SigningKeyPair::from_secret_bytes(&kp.to_secret_bytes()).unwrap();
        assert_eq!(back, kp);
        let tk = TransportKeyPair::generate(Algorithm::MlKem, &mut src).unwrap();
        assert_eq!(TransportKeyPair::from_secret_bytes(&tk.to_secret_bytes()).unwrap(), tk);
        let pk = tk.public();
        assert_eq!(PublicKey::from_bytes(&pk.to_bytes()).unwrap(), pk);
        let mut short = pk.clone();
        short.bytes.pop();
        assert!(PublicKey::from_bytes(&short.to_bytes()).is_err());
        assert_eq!(SigningKeyPair::from_secret_bytes(b"junk"), Err(CryptoError::MalformedKey));
    }

    #[test]
    fn transports_agree() {
        let mut src = RandomSource::seeded(b"kex");
        for alg in [Algorithm::X25519, Algorithm::X448, Algorithm::MlKem] {
            let recipient = TransportKeyPair::generate(alg, &mut src).unwrap();
            let (msg, a) = transport_initiate(alg, recipient.public_key(), &mut src).unwrap();
            let b = recipient.respond(&msg).unwrap();
            assert_eq!(a, b, "{alg}");
            let (msg2, c) = transport_initiate(alg, recipient.public_key(), &mut src).unwrap();
            assert_ne!(msg, msg2);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn x25519_matches_rfc7748_vector() {
        // RFC 7748 section 6.1 (Alice / Bob)
        let alice =
            crate::unhex("77076d0a7318a57d3c16c17251b26645df4c2f87ebc0992ab177fba51db92c2a");
        let bob_pub =
            crate::unhex("de9edb7d7b7dc1b4d35b61c2ece435373f8343c85b78674dadfc7e146f882b4f");
        let kp = TransportKeyPair::from_secret(Algorithm::X25519, &alice).unwrap();
        assert_eq!(
            crate::hex(kp.public_key()),
            "8520f0098930a754748b7ddcb43ef75a0dbf3a0d26381af4eba4a98eaa9b4e6a"
        );
        assert_eq!(
            crate::hex(&kp.respond(&bob_pub).unwrap()),
            "4a5d9d5ba4ce2de1728e3bf480350f25e07e21c947d19e3376f09b3c1e161742"
        );
    }

    #[test]
    fn degenerate_peer_key_is_rejected() {
        let kp = TransportKeyPair::generate(Algorithm::X25519, &mut RandomSource::seeded(b"z")).unwrap();
        assert_eq!(kp.respond(&[0u8; 32]).unwrap_err(), CryptoError::DegenerateSecret);
        assert!(matches!(kp.respond(&[9u8; 31]), Err(CryptoError::InvalidLength { .. })));
    }

    #[test]
    fn aead_rejects_tamper() {
        let key = [7u8; 16];
        let nonce = [1u8; 12];
        let ct = aead_seal(Algorithm::Aes128Gcm, &key, &nonce, b"aad", b"hello").unwrap();
        assert_eq!(aead_open(Algorithm::Aes128Gcm, &key, &nonce, b"aad", &ct).unwrap(), b"hello");
        let mut bad = ct.clone();
        bad[0] ^= 1;
        assert_eq!(
            aead_open(Algorithm::Aes128Gcm, &key, &nonce, b"aad", &bad).unwrap_err(),
            CryptoError::Authentication
        );
        assert!(aead_open(Algorithm::Aes128Gcm, &key, &nonce, b"aaD", &ct).is_err());
        assert!(aead_seal(Algorithm::Aes256Gcm, &key, &nonce, b"", b"").is_err());
    }

    #[test]
    fn digests_have_registry_lengths() {
        for alg in [Algorithm::Sha256, Algorithm::Sha3_384, Algorithm::Sha3_512] {
            assert_eq!(digest(alg, b"abc").unwrap().len(), alg.spec().output_len);
        }
        assert_eq!(
            crate::hex(&digest(Algorithm::Sha256, b"abc").unwrap()),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(digest(Algorithm::Ed25519, b"abc").is_err());
    }
}
