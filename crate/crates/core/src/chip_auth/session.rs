// Licensed under the Apache-2.0 license

use std::fmt;

use zeroize::Zeroizing;

use super::{
    derive_session_keys, ChipAuthError, ChipHello, ChipProfile, FailureReason,
    ReaderResponse, DG_CHIP_KEY, NONCE_LEN,
};
use crate::compact_cert::cbor::{Reader, Writer};
use crate::compact_cert::CertificateRecord;
use crate::entropy::{gated_bytes, EntropySource};
use crate::integrity::{mac_tag, mac_verify, MacAlgorithm, MacKind};
use crate::pki::{passive_authenticate, SignedDataBundle, Verdict};
use crate::suite_registry::primitives::{transport_initiate, PublicKey};
use crate::suite_registry::{key_transport, Mode};

const CONFIRM_LABEL: &[u8] = b"c2a-chip-confirm-v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionRole {
    Chip,
    Reader,
}

impl fmt::Display for SessionRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SessionRole::Chip => "chip",
            SessionRole::Reader => "reader",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionState {
    Init,
    HelloSent,
    SecretDerived,
    Authenticated,
    Failed,
}

impl SessionState {
    pub const ALL: [SessionState; 5] = [
        SessionState::Init,
        SessionState::HelloSent,
        SessionState::SecretDerived,
        SessionState::Authenticated,
        SessionState::Failed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SessionState::Init => "init",
            SessionState::HelloSent => "hello-sent",
            SessionState::SecretDerived => "secret-derived",
            SessionState::Authenticated => "authenticated",
            SessionState::Failed => "failed",
        }
    }

    /// Whether `self -> next` is a legal single step. Failure is reachable
    /// from every non-terminal state.
    pub fn may_become(self, next: SessionState) -> bool {
        use SessionState::*;
        matches!(
            (self, next),
            (Init, HelloSent)
                | (HelloSent, SecretDerived)
                | (SecretDerived, Authenticated)
                | (Init | HelloSent | SecretDerived, Failed)
        )
    }
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One party's view of a handshake. Secrets are zeroized on drop and
/// left out of the `Debug` output.
///
/// The reader enters `hello-sent` when it produces its response and moves
/// on to `secret-derived` within the same call; `history` records both.
#[derive(Clone, PartialEq, Eq)]
pub struct SessionContext {
    pub(super) role: SessionRole,
    pub(super) mode: Mode,
    pub(super) state: SessionState,
    pub(super) history: Vec<SessionState>,
    pub(super) transcript: Vec<Vec<u8>>,
    pub(super) nonce: Option<[u8; NONCE_LEN]>,
    pub(super) chip_public: Option<PublicKey>,
    pub(super) shared_secret: Option<Zeroizing<Vec<u8>>>,
    pub(super) enc_key: Option<Zeroizing<Vec<u8>>>,
    pub(super) mac_key: Option<Zeroizing<Vec<u8>>>,
    pub(super) failure_reason: Option<FailureReason>,
}

impl fmt::Debug for SessionContext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SessionContext")
            .field("role", &self.role)
            .field("mode", &self.mode)
            .field("state", &self.state)
            .field("transcript_messages", &self.transcript.len())
            .field("has_secret", &self.shared_secret.is_some())
            .field("failure_reason", &self.failure_reason)
            .finish_non_exhaustive()
    }
}

fn confirmation_input(transcript: &[u8]) -> Vec<u8> {
    let mut m = CONFIRM_LABEL.to_vec();
    m.extend_from_slice(transcript);
    m
}

impl SessionContext {
    pub fn new(role: SessionRole, mode: Mode) -> Self {
        Self {
            role,
            mode,
            state: SessionState::Init,
            history: vec![SessionState::Init],
            transcript: Vec::new(),
            nonce: None,
            chip_public: None,
            shared_secret: None,
            enc_key: None,
            mac_key: None,
            failure_reason: None,
        }
    }

    pub fn role(&self) -> SessionRole {
        self.role
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    /// Every state the session has been in, oldest first.
    pub fn history(&self) -> &[SessionState] {
        &self.history
    }

    pub fn transcript(&self) -> &[Vec<u8>] {
        &self.transcript
    }

    /// Messages concatenated as `u32be(len) || message`, in send order.
    pub fn transcript_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for m in &self.transcript {
            out.extend_from_slice(&(m.len() as u32).to_be_bytes());
            out.extend_from_slice(m);
        }
        out
    }

    pub fn nonce(&self) -> Option<&[u8; NONCE_LEN]> {
        self.nonce.as_ref()
    }

    /// The chip key this session ran the handshake against.
    pub fn chip_public(&self) -> Option<&PublicKey> {
        self.chip_public.as_ref()
    }

    pub fn shared_secret(&self) -> Option<&[u8]> {
        self.shared_secret.as_deref().map(Vec::as_slice)
    }

    pub fn enc_key(&self) -> Option<&[u8]> {
        self.enc_key.as_deref().map(Vec::as_slice)
    }

    pub fn mac_key(&self) -> Option<&[u8]> {
        self.mac_key.as_deref().map(Vec::as_slice)
    }

    pub fn failure_reason(&self) -> Option<FailureReason> {
        self.failure_reason
    }

    fn require(
        &self,
        op: &'static str,
        role: SessionRole,
        expected: SessionState,
    ) -> Result<(), ChipAuthError> {
        if self.role == role && self.state == expected {
            return Ok(());
        }
        Err(ChipAuthError::State {
            op,
            role,
            expected,
            actual_role: self.role,
            actual: self.state,
        })
    }

    pub(super) fn enter(&mut self, next: SessionState) {
        debug_assert!(self.state.may_become(next), "{} -> {next}", self.state);
        self.state = next;
        self.history.push(next);
    }

    fn fail(&mut self, reason: FailureReason) {
        self.failure_reason = Some(reason);
        self.enter(SessionState::Failed);
    }

    fn derive(&mut self, shared: Zeroizing<Vec<u8>>) -> Result<(), ChipAuthError> {
        let (enc, mac) = derive_session_keys(self.mode, &shared, &self.transcript_bytes())?;
        self.shared_secret = Some(shared);
        self.enc_key = Some(enc);
        self.mac_key = Some(mac);
        self.enter(SessionState::SecretDerived);
        Ok(())
    }

    fn confirmation_mac(&self) -> MacAlgorithm {
        MacAlgorithm::for_mode(self.mode, MacKind::Hmac)
    }

    /// Chip, `init -> hello-sent`: draws a fresh nonce and emits the hello.
    pub fn chip_hello<S: EntropySource + ?Sized>(
        &mut self,
        chip: &ChipProfile,
        source: &mut S,
    ) -> Result<ChipHello, ChipAuthError> {
        self.require("chip_hello", SessionRole::Chip, SessionState::Init)?;
        if chip.mode() != self.mode {
            return Err(ChipAuthError::WrongKeyAlgorithm {
                got: chip.public_key().algorithm.name(),
                expected: key_transport(self.mode).name,
                mode: self.mode,
            });
        }
        let nonce: [u8; NONCE_LEN] = gated_bytes(source, NONCE_LEN)?
            .as_slice()
            .try_into()
            .expect("nonce length");
        let hello = ChipHello {
            public_key: chip.public_key().clone(),
            nonce,
        };
        self.transcript.push(hello.to_bytes());
        self.nonce = Some(nonce);
        self.chip_public = Some(hello.public_key.clone());
        self.enter(SessionState::HelloSent);
        Ok(hello)
    }

    /// Reader, `init -> hello-sent -> secret-derived`: agrees with the chip
    /// key using a fresh ephemeral key, which is dropped before returning.
    /// A malformed hello fails the session.
    pub fn reader_respond<S: EntropySource + ?Sized>(
        &mut self,
        hello: &[u8],
        source: &mut S,
    ) -> Result<ReaderResponse, ChipAuthError> {
        self.require("reader_respond", SessionRole::Reader, SessionState::Init)?;
        let parsed = ChipHello::from_bytes(hello).and_then(|h| {
            let expected = key_transport(self.mode);
            if h.public_key.algorithm != expected.algorithm {
                return Err(ChipAuthError::WrongKeyAlgorithm {
                    got: h.public_key.algorithm.name(),
                    expected: expected.name,
                    mode: self.mode,
                });
            }
            Ok(h)
        });
        let hello_msg = match parsed {
            Ok(h) => h,
            Err(e) => {
                self.fail(FailureReason::MalformedMessage);
                return Err(e);
            }
        };
        let alg = hello_msg.public_key.algorithm;
        let (message, shared) = match transport_initiate(alg, &hello_msg.public_key.bytes, source) {
            Ok(v) => v,
            Err(e) => {
                self.fail(FailureReason::KeyAgreement);
                return Err(e.into());
            }
        };
        let response = ReaderResponse { message };
        self.transcript.push(hello.to_vec());
        self.transcript.push(response.to_bytes());
        self.nonce = Some(hello_msg.nonce);
        self.chip_public = Some(hello_msg.public_key);
        self.enter(SessionState::HelloSent);
        self.derive(shared)?;
        Ok(response)
    }

    /// Chip, `hello-sent -> secret-derived`: the agreement runs inside the
    /// chip's secure element.
    pub fn chip_complete(&mut self, reader_msg: &[u8], chip: &ChipProfile) -> Result<(), ChipAuthError> {
        self.require("chip_complete", SessionRole::Chip, SessionState::HelloSent)?;
        let response = match ReaderResponse::from_bytes(reader_msg) {
            Ok(r) => r,
            Err(e) => {
                self.fail(FailureReason::MalformedMessage);
                return Err(e);
            }
        };
        let shared = match chip.agree(&response.message) {
            Ok(s) => s,
            Err(e) => {
                self.fail(FailureReason::KeyAgreement);
                return Err(e.into());
            }
        };
        self.transcript.push(reader_msg.to_vec());
        self.derive(shared)
    }

    /// Chip, in `secret-derived`: MAC over the transcript under the session
    /// MAC key, proving the chip derived the same secret.
    pub fn confirmation_tag(&self) -> Result<Vec<u8>, ChipAuthError> {
        self.require("confirmation_tag", SessionRole::Chip, SessionState::SecretDerived)?;
        let key = self.mac_key.as_ref().expect("present from secret-derived");
        Ok(mac_tag(
            self.confirmation_mac(),
            key,
            &confirmation_input(&self.transcript_bytes()),
        )
        .expect("HMAC accepts any key length"))
    }

    /// Reader, `secret-derived -> authenticated | failed`. Checks in order:
    /// passive authentication of `bundle`, the handshake key against the
    /// bundle's key group, then the confirmation tag.
    pub fn authenticate_chip(
        &mut self,
        bundle: &SignedDataBundle,
        trusted_csca: &CertificateRecord,
        confirmation_tag: &[u8],
        now: u64,
    ) -> Result<(), ChipAuthError> {
        self.require("authenticate_chip", SessionRole::Reader, SessionState::SecretDerived)?;
        match passive_authenticate(bundle, trusted_csca, now) {
            Ok(Verdict::Accept) => {}
            Ok(Verdict::Reject(r)) => {
                self.fail(FailureReason::Pki(r.reason));
                return Ok(());
            }
            Err(_) => {
                self.fail(FailureReason::MalformedBundle);
                return Ok(());
            }
        }
        let used = self.chip_public.as_ref().expect("present from hello").to_bytes();
        let holders: Vec<u64> = bundle
            .data_groups
            .iter()
            .filter(|(_, g)| **g == used)
            .map(|(&i, _)| i)
            .collect();
        if holders != [DG_CHIP_KEY] {
            self.fail(FailureReason::KeyMismatch);
            return Ok(());
        }
        let key = self.mac_key.as_ref().expect("present from secret-derived");
        let input = confirmation_input(&self.transcript_bytes());
        if !mac_verify(self.confirmation_mac(), key, &input, confirmation_tag) {
            self.fail(FailureReason::KeyConfirmation);
            return Ok(());
        }
        self.enter(SessionState::Authenticated);
        Ok(())
    }

    /// Session state file contents. Holds the session keys, never any
    /// ephemeral or static private key.
    pub fn to_bytes(&self) -> Vec<u8> {
        let role = match self.role {
            SessionRole::Chip => 0,
            SessionRole::Reader => 1,
        };
        let state = |s: SessionState| SessionState::ALL.iter().position(|&x| x == s).unwrap() as u64;
        let opt = |w: &mut Writer, v: Option<&[u8]>| {
            match v {
                Some(b) => w.array(1).bytes(b),
                None => w.array(0),
            };
        };
        let mut w = Writer::new();
        w.array(11).uint(role).uint(self.mode.code()).uint(state(self.state));
        w.array(self.history.len());
        for &s in &self.history {
            w.uint(state(s));
        }
        w.array(self.transcript.len());
        for m in &self.transcript {
            w.bytes(m);
        }
        opt(&mut w, self.nonce.as_ref().map(|n| n.as_slice()));
        opt(&mut w, self.chip_public.as_ref().map(|k| k.to_bytes()).as_deref());
        opt(&mut w, self.shared_secret());
        opt(&mut w, self.enc_key());
        opt(&mut w, self.mac_key());
        match self.failure_reason {
            Some(r) => w.array(1).uint(r.code()),
            None => w.array(0),
        };
        w.finish()
    }

    pub fn from_bytes(data: &[u8]) -> Result<Self, ChipAuthError> {
        let bad = |m: &str| ChipAuthError::MalformedState(m.to_string());
        let cbor = |e: crate::compact_cert::cbor::CborError| ChipAuthError::MalformedState(e.to_string());
        let state = |c: u64| SessionState::ALL.get(c as usize).copied().ok_or_else(|| bad("state"));
        fn opt<'a>(r: &mut Reader<'a>) -> Result<Option<&'a [u8]>, ChipAuthError> {
            let e = |e: crate::compact_cert::cbor::CborError| ChipAuthError::MalformedState(e.to_string());
            match r.array().map_err(e)? {
                0 => Ok(None),
                1 => Ok(Some(r.bytes().map_err(e)?)),
                _ => Err(ChipAuthError::MalformedState("optional field".into())),
            }
        }
        let secret = |b: Option<&[u8]>| b.map(|b| Zeroizing::new(b.to_vec()));

        let mut r = Reader::new(data);
        r.array_of(11).map_err(cbor)?;
        let role = match r.uint().map_err(cbor)? {
            0 => SessionRole::Chip,
            1 => SessionRole::Reader,
            _ => return Err(bad("role")),
        };
        let mode = Mode::from_code(r.uint().map_err(cbor)?).ok_or_else(|| bad("mode"))?;
        let current = state(r.uint().map_err(cbor)?)?;
        let history = (0..r.array().map_err(cbor)?)
            .map(|_| state(r.uint().map_err(cbor)?))
            .collect::<Result<Vec<_>, _>>()?;
        let transcript = (0..r.array().map_err(cbor)?)
            .map(|_| Ok(r.bytes().map_err(cbor)?.to_vec()))
            .collect::<Result<Vec<_>, ChipAuthError>>()?;
        let nonce = opt(&mut r)?
            .map(|n| n.try_into().map_err(|_| bad("nonce")))
            .transpose()?;
        let chip_public = opt(&mut r)?.map(PublicKey::from_bytes).transpose()?;
        let shared_secret = secret(opt(&mut r)?);
        let enc_key = secret(opt(&mut r)?);
        let mac_key = secret(opt(&mut r)?);
        let failure_reason = match r.array().map_err(cbor)? {
            0 => None,
            1 => Some(FailureReason::from_code(r.uint().map_err(cbor)?).ok_or_else(|| bad("reason"))?),
            _ => return Err(bad("reason")),
        };
        r.finish().map_err(cbor)?;
        if history.last() != Some(&current)
            || history.first() != Some(&SessionState::Init)
            || history.windows(2).any(|w| !w[0].may_become(w[1]))
        {
            return Err(bad("state history"));
        }
        Ok(Self {
            role,
            mode,
            state: current,
            history,
            transcript,
            nonce,
            chip_public,
            shared_secret,
            enc_key,
            mac_key,
            failure_reason,
        })
    }
}
