// Licensed under the Apache-2.0 license

use std::collections::{BTreeMap, HashSet};

use super::*;
use crate::entropy::RandomSource;
use crate::pki::CertificateAuthority;
use crate::unhex;

const NOW: u64 = 1_760_000_000;

struct World {
    csca: CertificateAuthority,
    ds: DocumentSigner,
}

fn world(mode: Mode, seed: &[u8]) -> World {
    let mut src = RandomSource::seeded(seed);
    let alg = primary(mode, Role::Signature).unwrap().algorithm;
    let mut csca = CertificateAuthority::new_root("csca", alg, 3650, NOW - 10, &mut src).unwrap();
    let ds = DocumentSigner::new(&mut csca, "ds", NOW - 10, &mut src).unwrap();
    World { csca, ds }
}

fn groups() -> BTreeMap<u64, Vec<u8>> {
    BTreeMap::from([(1, b"holder".to_vec()), (2, vec![9; 40])])
}

/// Runs an honest exchange and returns (chip session, reader session, tag).
fn handshake(
    chip: &ChipProfile,
    src: &mut RandomSource,
) -> (SessionContext, SessionContext, Vec<u8>) {
    let (hello, cs) = chip_hello(chip, src).unwrap();
    let (resp, rs) = reader_respond(chip.mode(), &hello.to_bytes(), src).unwrap();
    let cs = chip_complete(cs, &resp.to_bytes(), chip).unwrap();
    let tag = cs.confirmation_tag().unwrap();
    (cs, rs, tag)
}

#[test]
fn kdf_matches_oracle() {
    let secret: Vec<u8> = (0..32).collect();
    let ctx = b"c2a-test-context";
    let (enc, mac) = derive_session_keys(Mode::Current, &secret, ctx).unwrap();
    assert_eq!(*enc, unhex("717a85ae9bcfe3aec704c1245ed7818b"));
    assert_eq!(*mac, unhex("a55e5297adbc5c676b2d373bb12e785c"));
    let (enc, mac) = derive_session_keys(Mode::Future, &secret, ctx).unwrap();
    assert_eq!(*enc, unhex("e4d7a3fff6fb19d2d9b1a7302a5da56c4d6a11c0c875a586c72a2b68ebe7566d"));
    assert_eq!(*mac, unhex("54950a21930749276f89d8e31d4ecc34f16dc6117524ca35da6f811b4326196c"));
    assert_eq!(derive_session_keys(Mode::Current, &[], ctx), Err(ChipAuthError::EmptySecret));

    let mut other = ctx.to_vec();
    other[0] ^= 1;
    let (e2, m2) = derive_session_keys(Mode::Current, &secret, &other).unwrap();
    let (e1, m1) = derive_session_keys(Mode::Current, &secret, ctx).unwrap();
    assert_ne!(e1, e2);
    assert_ne!(m1, m2);
    assert_eq!(derive_session_keys(Mode::Current, &secret, ctx).unwrap(), (e1, m1));
}

#[test]
fn honest_sessions_agree_in_both_modes() {
    for mode in Mode::ALL {
        let w = world(mode, mode.as_str().as_bytes());
        let mut src = RandomSource::seeded(b"sessions");
        let chip = ChipProfile::enroll(mode, groups(), &w.ds, &mut src).unwrap();
        assert_eq!(chip.public_key().algorithm, key_transport(mode).algorithm);
        let rounds = if mode == Mode::Current { 20 } else { 5 };
        for _ in 0..rounds {
            let (cs, rs, tag) = handshake(&chip, &mut src);
            assert_eq!(cs.state(), SessionState::SecretDerived);
            assert_eq!(cs.shared_secret(), rs.shared_secret());
            assert_eq!(cs.enc_key(), rs.enc_key());
            assert_eq!(cs.mac_key(), rs.mac_key());
            assert_ne!(cs.enc_key(), cs.mac_key());
            assert_eq!(cs.transcript(), rs.transcript());
            let key_len = primary(mode, Role::SymmetricEncryption).unwrap().key_len;
            assert_eq!(cs.enc_key().unwrap().len(), key_len);
            let rs = authenticate_chip(rs, chip.bundle(), w.csca.certificate(), &tag, NOW).unwrap();
            assert_eq!(rs.state(), SessionState::Authenticated, "{mode}");
            assert_eq!(
                rs.history(),
                [
                    SessionState::Init,
                    SessionState::HelloSent,
                    SessionState::SecretDerived,
                    SessionState::Authenticated
                ]
            );
        }
    }
}

#[test]
fn hello_properties() {
    let w = world(Mode::Current, b"hello");
    let mut src = RandomSource::seeded(b"nonces");
    let chip = ChipProfile::enroll(Mode::Current, groups(), &w.ds, &mut src).unwrap();
    let mut seen = HashSet::new();
    for _ in 0..10_000 {
        let (hello, s) = chip_hello(&chip, &mut src).unwrap();
        assert_eq!(&hello.public_key, chip.public_key());
        assert_eq!(hello.nonce.len(), NONCE_LEN);
        assert_eq!(s.state(), SessionState::HelloSent);
        assert!(seen.insert(hello.nonce), "nonce repeated");
    }
}

#[test]
fn responses_are_fresh() {
    let w = world(Mode::Current, b"fresh");
    let mut src = RandomSource::seeded(b"fresh-src");
    let chip = ChipProfile::enroll(Mode::Current, groups(), &w.ds, &mut src).unwrap();
    let (hello, _) = chip_hello(&chip, &mut src).unwrap();
    let (r1, s1) = reader_respond(Mode::Current, &hello.to_bytes(), &mut src).unwrap();
    let (r2, s2) = reader_respond(Mode::Current, &hello.to_bytes(), &mut src).unwrap();
    assert_ne!(r1, r2);
    assert_ne!(s1.shared_secret(), s2.shared_secret());
}

#[test]
fn malformed_hello_fails_reader() {
    let w = world(Mode::Current, b"bad");
    let mut src = RandomSource::seeded(b"bad-src");
    let chip = ChipProfile::enroll(Mode::Current, groups(), &w.ds, &mut src).unwrap();
    let (hello, _) = chip_hello(&chip, &mut src).unwrap();
    let mut short = hello.clone();
    short.public_key.bytes.pop();
    let mut s = SessionContext::new(SessionRole::Reader, Mode::Current);
    assert!(s.reader_respond(&short.to_bytes(), &mut src).is_err());
    assert_eq!(s.state(), SessionState::Failed);
    assert_eq!(s.failure_reason(), Some(FailureReason::MalformedMessage));

    // A future-mode reader refuses a current-mode chip key.
    let mut s = SessionContext::new(SessionRole::Reader, Mode::Future);
    assert!(s.reader_respond(&hello.to_bytes(), &mut src).is_err());
    assert_eq!(s.state(), SessionState::Failed);

    let (_, mut cs) = chip_hello(&chip, &mut src).unwrap();
    assert!(cs.chip_complete(b"junk", &chip).is_err());
    assert_eq!(cs.state(), SessionState::Failed);
}

#[test]
fn adversaries_in_both_modes() {
    for mode in Mode::ALL {
        let honest = run_demo(mode, None, &mut RandomSource::seeded(b"demo"), NOW).unwrap();
        assert!(honest.authenticated(), "{mode}");
        assert_eq!(honest.lines.last().unwrap(), "AUTHENTICATED");

        let clone = run_demo(mode, Some(Adversary::Clone), &mut RandomSource::seeded(b"demo"), NOW).unwrap();
        assert_eq!(clone.reader.failure_reason(), Some(FailureReason::Pki(Reason::UntrustedChain)));
        assert_eq!(clone.lines.last().unwrap(), "FAILED untrusted-chain");

        let replay = run_demo(mode, Some(Adversary::Replay), &mut RandomSource::seeded(b"demo"), NOW).unwrap();
        assert_eq!(replay.reader.failure_reason(), Some(FailureReason::KeyConfirmation));
        assert_ne!(replay.chip.shared_secret(), replay.reader.shared_secret());
    }
    let a = run_demo(Mode::Current, Some(Adversary::Replay), &mut RandomSource::seeded(b"x"), NOW).unwrap();
    let b = run_demo(Mode::Current, Some(Adversary::Replay), &mut RandomSource::seeded(b"x"), NOW).unwrap();
    assert_eq!(a.lines, b.lines);
    assert_eq!("clone".parse::<Adversary>(), Ok(Adversary::Clone));
    assert!("mitm".parse::<Adversary>().is_err());
}

#[test]
fn key_group_checks() {
    let w = world(Mode::Current, b"groups");
    let mut src = RandomSource::seeded(b"groups-src");
    let chip = ChipProfile::enroll(Mode::Current, groups(), &w.ds, &mut src).unwrap();
    let holders = chip
        .bundle()
        .data_groups
        .values()
        .filter(|g| **g == chip.public_key().to_bytes())
        .count();
    assert_eq!(holders, 1);
    let mut g = groups();
    g.insert(DG_CHIP_KEY, vec![1]);
    assert!(matches!(
        ChipProfile::enroll(Mode::Current, g, &w.ds, &mut src),
        Err(ChipAuthError::ReservedGroup(14))
    ));

    // A genuinely signed bundle of another chip: the key group does not
    // match the handshake key.
    let other = ChipProfile::enroll(Mode::Current, groups(), &w.ds, &mut src).unwrap();
    let (_, rs, tag) = handshake(&chip, &mut src);
    let rs = authenticate_chip(rs, other.bundle(), w.csca.certificate(), &tag, NOW).unwrap();
    assert_eq!(rs.failure_reason(), Some(FailureReason::KeyMismatch));

    // Tampered data group.
    let mut bundle = chip.bundle().clone();
    bundle.data_groups.get_mut(&1).unwrap()[0] ^= 1;
    let (_, rs, tag) = handshake(&chip, &mut src);
    let rs = authenticate_chip(rs, &bundle, w.csca.certificate(), &tag, NOW).unwrap();
    assert_eq!(rs.failure_reason(), Some(FailureReason::Pki(Reason::DigestMismatch)));

    let (_, rs, mut tag) = handshake(&chip, &mut src);
    tag[0] ^= 1;
    let rs = authenticate_chip(rs, chip.bundle(), w.csca.certificate(), &tag, NOW).unwrap();
    assert_eq!(rs.failure_reason(), Some(FailureReason::KeyConfirmation));
}

/// Session in every state for both roles, reached through real calls
/// where the protocol allows it and forced otherwise.
fn sessions_in_every_state(chip: &ChipProfile, csca: &CertificateAuthority) -> Vec<SessionContext> {
    let mut src = RandomSource::seeded(b"grid");
    let mut out = Vec::new();
    let (_, cs_hello) = chip_hello(chip, &mut src).unwrap();
    let (cs, rs, tag) = handshake(chip, &mut src);
    let authed = authenticate_chip(rs.clone(), chip.bundle(), csca.certificate(), &tag, NOW).unwrap();
    let failed = authenticate_chip(rs.clone(), chip.bundle(), csca.certificate(), b"bad", NOW).unwrap();
    out.push(SessionContext::new(SessionRole::Chip, Mode::Current));
    out.push(cs_hello);
    out.push(cs.clone());
    let mut chip_failed = chip_hello(chip, &mut src).unwrap().1;
    let _ = chip_failed.chip_complete(b"junk", chip);
    out.push(chip_failed);
    let mut chip_authed = cs;
    chip_authed.enter(SessionState::Authenticated);
    out.push(chip_authed);

    out.push(SessionContext::new(SessionRole::Reader, Mode::Current));
    let mut reader_hello = SessionContext::new(SessionRole::Reader, Mode::Current);
    reader_hello.enter(SessionState::HelloSent);
    out.push(reader_hello);
    out.push(rs);
    out.push(authed);
    out.push(failed);
    out
}

#[test]
fn state_machine_grid() {
    let w = world(Mode::Current, b"grid-world");
    let mut src = RandomSource::seeded(b"grid-chip");
    let chip = ChipProfile::enroll(Mode::Current, groups(), &w.ds, &mut src).unwrap();
    let (hello, _) = chip_hello(&chip, &mut src).unwrap();
    let hello = hello.to_bytes();
    let (resp, _) = reader_respond(Mode::Current, &hello, &mut src).unwrap();
    let resp = resp.to_bytes();

    let sessions = sessions_in_every_state(&chip, &w.csca);
    for role in [SessionRole::Chip, SessionRole::Reader] {
        for state in SessionState::ALL {
            assert!(
                sessions.iter().any(|s| s.role() == role && s.state() == state),
                "no {role} session in {state}"
            );
        }
    }
    let mut checked = 0;
    for original in &sessions {
        // (op index, permitted role, permitted state)
        let ops = [
            (0, SessionRole::Chip, SessionState::Init),
            (1, SessionRole::Reader, SessionState::Init),
            (2, SessionRole::Chip, SessionState::HelloSent),
            (3, SessionRole::Chip, SessionState::SecretDerived),
            (4, SessionRole::Reader, SessionState::SecretDerived),
        ];
        for (op, role, state) in ops {
            if original.role() == role && original.state() == state {
                continue;
            }
            let mut s = original.clone();
            let result = match op {
                0 => s.chip_hello(&chip, &mut src).map(|_| ()),
                1 => s.reader_respond(&hello, &mut src).map(|_| ()),
                2 => s.chip_complete(&resp, &chip),
                3 => s.confirmation_tag().map(|_| ()),
                _ => s.authenticate_chip(chip.bundle(), w.csca.certificate(), b"t", NOW),
            };
            assert!(matches!(result, Err(ChipAuthError::State { .. })), "op {op} in {:?}", original);
            assert_eq!(&s, original, "op {op} changed the session");
            checked += 1;
        }
    }
    assert_eq!(checked, sessions.len() * 5 - 5);
}

#[test]
fn history_only_takes_legal_steps() {
    for s in SessionState::ALL {
        assert!(!s.may_become(s));
        assert!(!s.may_become(SessionState::Init));
    }
    assert!(!SessionState::Init.may_become(SessionState::SecretDerived));
    assert!(!SessionState::Failed.may_become(SessionState::Authenticated));
    assert!(!SessionState::Authenticated.may_become(SessionState::Failed));
}

/// Records every byte string handed out, so the test can look for the
/// reader's ephemeral secret afterwards.
struct Recording {
    inner: RandomSource,
    draws: Vec<Vec<u8>>,
}

impl EntropySource for Recording {
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest);
        self.draws.push(dest.to_vec());
    }
}

#[test]
fn ephemeral_secret_absent_after_handshake() {
    let w = world(Mode::Current, b"fs");
    let mut src = RandomSource::seeded(b"fs-src");
    let chip = ChipProfile::enroll(Mode::Current, groups(), &w.ds, &mut src).unwrap();
    let (hello, _) = chip_hello(&chip, &mut src).unwrap();
    let mut rec = Recording {
        inner: RandomSource::seeded(b"reader"),
        draws: Vec::new(),
    };
    let (_, rs) = reader_respond(Mode::Current, &hello.to_bytes(), &mut rec).unwrap();
    let state_file = rs.to_bytes();
    let debug = format!("{rs:?}");
    let secrets: Vec<&Vec<u8>> = rec.draws.iter().filter(|d| d.len() == 32).collect();
    assert!(!secrets.is_empty());
    for secret in secrets {
        assert!(!state_file.windows(32).any(|w| w == secret.as_slice()));
        assert!(!debug.contains(&crate::hex(secret)));
    }
    let back = SessionContext::from_bytes(&state_file).unwrap();
    assert_eq!(back, rs);
    // The chip's static key alone cannot recompute the session: the state
    // file carries the reader's public half only.
    assert_eq!(rs.transcript().len(), 2);
}

#[test]
fn session_state_file_rejects_garbage() {
    assert!(SessionContext::from_bytes(b"").is_err());
    let s = SessionContext::new(SessionRole::Reader, Mode::Future);
    let mut bytes = s.to_bytes();
    assert_eq!(SessionContext::from_bytes(&bytes).unwrap(), s);
    // Claim a state the history never reached.
    bytes[3] = 3;
    assert!(SessionContext::from_bytes(&bytes).is_err());
}
