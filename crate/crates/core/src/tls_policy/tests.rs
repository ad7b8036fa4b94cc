// Licensed under the Apache-2.0 license

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use proptest::prelude::*;

use super::*;
use crate::entropy::RandomSource;
use crate::pki::{revoke, CertificateAuthority, CertificateRecord, RevocationList, DAY_SECS};
use crate::suite_registry::primitives::SigningKeyPair;
use crate::suite_registry::{Algorithm, Mode};

const NOW: u64 = 1_760_000_000;

use SuiteId::{Aes128GcmSha256 as A128, Aes256GcmSha384 as A256, Chacha20Poly1305Sha256 as CHACHA};

fn good_config(class: DeviceClass) -> ServerConfigInput {
    ServerConfigInput {
        tls_versions: BTreeSet::from([TlsVersion::Tls13]),
        offered_suites: build_profile(class, Mode::Current).preference,
        key_exchange: KeyExchange::Ephemeral,
        zero_rtt_enabled: false,
        client_auth: true,
        revocation_checking: true,
        certificate_file: PathBuf::from("server.cert"),
    }
}

struct Pki {
    ca: CertificateAuthority,
    chain: Vec<CertificateRecord>,
}

fn pki(alg: Algorithm) -> Pki {
    let mut src = RandomSource::seeded(b"tls-policy-tests");
    let mut ca = CertificateAuthority::new_root("tls-root", alg, 3650, NOW - DAY_SECS, &mut src).unwrap();
    let key = SigningKeyPair::generate(alg, &mut src).unwrap();
    let leaf = ca
        .issue_for_key("server.example", key.public(), 398, NOW - DAY_SECS, BTreeMap::new())
        .unwrap();
    let chain = vec![leaf, ca.certificate().clone()];
    Pki { ca, chain }
}

fn with_lifetime(p: &Pki, secs: u64) -> Vec<CertificateRecord> {
    let mut leaf = p.chain[0].clone();
    leaf.not_after = leaf.not_before + secs;
    leaf.signature = p.ca.key().sign(&leaf.tbs_bytes().unwrap());
    vec![leaf, p.chain[1].clone()]
}

fn severities(r: &AuditReport, rule: u8) -> Vec<Severity> {
    r.for_rule(rule).map(|f| f.severity).collect()
}

#[test]
fn profiles_follow_the_device_class() {
    for mode in Mode::ALL {
        let std = build_profile(DeviceClass::Standard, mode);
        assert_eq!(std.preference, [A256, CHACHA, A128]);
        assert_eq!(std.min_version, TlsVersion::Tls13);
        assert!(!std.allow_tls12_fallback);
        let con = build_profile(DeviceClass::Constrained, mode);
        assert_eq!(con.preference, [A128]);
        assert_eq!(con.min_version, TlsVersion::Tls13);
        for p in [std, con] {
            assert!(p.require_ephemeral && p.forbid_zero_rtt && p.require_client_cert_revocation_check);
            assert_eq!(p.mode, mode);
            assert!(p.preference.iter().all(SuiteId::is_approved));
        }
    }
}

#[test]
fn negotiation_examples() {
    let std = build_profile(DeviceClass::Standard, Mode::Current);
    let con = build_profile(DeviceClass::Constrained, Mode::Current);
    assert_eq!(negotiate(&[CHACHA, A128], &std), Negotiation::Selected(CHACHA));
    assert_eq!(negotiate(&[A256], &con), Negotiation::Terminate);
    assert_eq!(negotiate(&[A128], &con), Negotiation::Selected(A128));
    assert_eq!(negotiate(&[], &std), Negotiation::Terminate);
    let legacy: SuiteId = "TLS_RSA_WITH_AES_128_CBC_SHA".parse().unwrap();
    assert_eq!(negotiate(&[legacy.clone(), A128], &std), Negotiation::Selected(A128));
    assert_eq!(negotiate(&[legacy], &std), Negotiation::Terminate);
    assert_eq!(Negotiation::Terminate.to_string(), "TERMINATE");
}

#[test]
fn suite_identifiers_parse() {
    for s in SuiteId::APPROVED {
        assert_eq!(s.as_str().parse::<SuiteId>().unwrap(), s);
    }
    assert_eq!(
        "ECDHE_X".parse::<SuiteId>().unwrap(),
        SuiteId::Legacy("ECDHE_X".into())
    );
    assert!("".parse::<SuiteId>().is_err());
    assert!("TLS AES".parse::<SuiteId>().is_err());
    assert_eq!(
        SuiteId::parse_list(" TLS_AES_128_GCM_SHA256 ,TLS_AES_256_GCM_SHA384").unwrap(),
        [A128, A256]
    );
    assert_eq!(SuiteId::parse_list("  ").unwrap(), []);
    assert!(SuiteId::parse_list("TLS_AES_128_GCM_SHA256,,").is_err());
}

#[test]
fn config_parses_with_comments_and_spacing() {
    let text = "# server\n\
                tls_versions = 1.3   # modern only\n\
                cipher_suites=TLS_AES_256_GCM_SHA384, TLS_CHACHA20_POLY1305_SHA256, TLS_AES_128_GCM_SHA256\n\
                \n\
                key_exchange = ephemeral\n\
                zero_rtt = false\n\
                client_auth = true\n\
                revocation_checking = true\n\
                certificate = server.cert\n";
    let cfg = ServerConfigInput::parse(text).unwrap();
    assert_eq!(cfg, good_config(DeviceClass::Standard));
    assert_eq!(ServerConfigInput::parse(&cfg.to_config_string()).unwrap(), cfg);
}

#[test]
fn config_errors_name_the_line() {
    let base = good_config(DeviceClass::Standard).to_config_string();
    let cases = [
        (base.replace("zero_rtt = false", "zero_rtt = maybe"), Some(4)),
        (base.replace("key_exchange = ephemeral", "key_exchange = rsa"), Some(3)),
        (base.replace("tls_versions = 1.3", "tls_versions = 1.3, 1.3"), Some(1)),
        (base.replace("tls_versions = 1.3", "tls_versions = 2.0"), Some(1)),
        (base.replace("client_auth = true", "client_auth true"), Some(5)),
        (base.replace("client_auth", "clientauth"), Some(5)),
        (format!("{base}zero_rtt = false\n"), Some(8)),
        (base.replace("certificate = server.cert", "certificate ="), Some(7)),
        (base.replace("certificate = server.cert\n", ""), None),
    ];
    for (text, line) in cases {
        match (ServerConfigInput::parse(&text).unwrap_err(), line) {
            (TlsPolicyError::Config { line: got, .. }, Some(want)) => assert_eq!(got, want, "{text}"),
            (TlsPolicyError::MissingKey("certificate"), None) => {}
            (e, _) => panic!("unexpected {e:?} for {text}"),
        }
    }
}

#[test]
fn load_resolves_the_certificate_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("server.conf");
    std::fs::write(&path, good_config(DeviceClass::Standard).to_config_string()).unwrap();
    let cfg = ServerConfigInput::load(&path).unwrap();
    assert_eq!(cfg.certificate_file, dir.path().join("server.cert"));
    assert!(matches!(
        audit_config(&cfg, &build_profile(DeviceClass::Standard, Mode::Current), NOW, None),
        Err(TlsPolicyError::Io(_))
    ));
    std::fs::write(dir.path().join("server.cert"), "not armoured").unwrap();
    assert!(matches!(
        audit_config(&cfg, &build_profile(DeviceClass::Standard, Mode::Current), NOW, None),
        Err(TlsPolicyError::Certificate(_))
    ));
}

#[test]
fn conforming_configs_pass_every_rule() {
    let p = pki(Algorithm::Ed25519);
    for class in DeviceClass::ALL {
        let r = audit_chain(&good_config(class), &build_profile(class, Mode::Current), &p.chain, NOW, None);
        assert!(r.compliant);
        assert_eq!(r.findings.len(), 7);
        assert!(r.findings.iter().all(|f| f.severity == Severity::Pass), "{}", r.to_text());
        let rules: Vec<u8> = r.findings.iter().map(|f| f.rule).collect();
        assert_eq!(rules, [1, 2, 3, 4, 5, 6, 7]);
    }
}

#[test]
fn tls12_fallback_is_a_constrained_warning_only() {
    let p = pki(Algorithm::Ed25519);
    let mut cfg = good_config(DeviceClass::Constrained);
    cfg.tls_versions.insert(TlsVersion::Tls12);
    let mut con = build_profile(DeviceClass::Constrained, Mode::Current);
    let r = audit_chain(&cfg, &con, &p.chain, NOW, None);
    assert_eq!(severities(&r, 1), [Severity::Warn]);
    assert!(r.compliant);

    con.allow_tls12_fallback = false;
    assert_eq!(severities(&audit_chain(&cfg, &con, &p.chain, NOW, None), 1), [Severity::Fail]);

    let mut std_cfg = good_config(DeviceClass::Standard);
    std_cfg.tls_versions.insert(TlsVersion::Tls12);
    let std = build_profile(DeviceClass::Standard, Mode::Current);
    assert_eq!(severities(&audit_chain(&std_cfg, &std, &p.chain, NOW, None), 1), [Severity::Fail]);

    cfg.tls_versions.insert(TlsVersion::Tls11);
    con.allow_tls12_fallback = true;
    let r = audit_chain(&cfg, &con, &p.chain, NOW, None);
    assert_eq!(severities(&r, 1), [Severity::Fail]);
    assert_eq!(
        r.for_rule(1).next().unwrap().to_string(),
        "R1 FAIL TLS 1.1, TLS 1.2 enabled; only TLS 1.3 allowed"
    );

    cfg.tls_versions.clear();
    assert_eq!(severities(&audit_chain(&cfg, &con, &p.chain, NOW, None), 1), [Severity::Fail]);
}

#[test]
fn suite_rule_reports_each_offending_suite() {
    let p = pki(Algorithm::Ed25519);
    let con = build_profile(DeviceClass::Constrained, Mode::Current);
    let mut cfg = good_config(DeviceClass::Constrained);
    cfg.offered_suites = vec![A256, A128, SuiteId::Legacy("TLS_RSA_WITH_RC4_128_SHA".into())];
    let r = audit_chain(&cfg, &con, &p.chain, NOW, None);
    let lines: Vec<String> = r.for_rule(4).map(ToString::to_string).collect();
    assert_eq!(
        lines,
        [
            "R4 FAIL TLS_AES_256_GCM_SHA384 not permitted for constrained devices",
            "R4 FAIL TLS_RSA_WITH_RC4_128_SHA not permitted for constrained devices",
        ]
    );
    cfg.offered_suites.clear();
    assert_eq!(severities(&audit_chain(&cfg, &con, &p.chain, NOW, None), 4), [Severity::Fail]);
}

#[test]
fn validity_boundary_is_exact() {
    let p = pki(Algorithm::Ed25519);
    let std = build_profile(DeviceClass::Standard, Mode::Current);
    let cfg = good_config(DeviceClass::Standard);
    let max = 398 * DAY_SECS;
    let ok = audit_chain(&cfg, &std, &with_lifetime(&p, max), NOW, None);
    assert_eq!(severities(&ok, 5), [Severity::Pass]);
    let over = audit_chain(&cfg, &std, &with_lifetime(&p, max + 1), NOW, None);
    assert_eq!(
        over.for_rule(5).next().unwrap().to_string(),
        "R5 FAIL certificate lifetime 398 days 1 s exceeds 398 days"
    );
    let nb = p.chain[0].not_before;
    let na = p.chain[0].not_after;
    for (now, sev) in [
        (nb - 1, Severity::Fail),
        (nb, Severity::Pass),
        (na, Severity::Pass),
        (na + 1, Severity::Fail),
    ] {
        assert_eq!(severities(&audit_chain(&cfg, &std, &p.chain, now, None), 5), [sev], "{now}");
    }
    assert_eq!(severities(&audit_chain(&cfg, &std, &[], NOW, None), 5), [Severity::Fail]);
}

#[test]
fn revocation_list_is_applied_to_the_leaf() {
    let p = pki(Algorithm::Ed25519);
    let std = build_profile(DeviceClass::Standard, Mode::Current);
    let cfg = good_config(DeviceClass::Standard);
    let empty = RevocationList::empty(&p.ca, NOW);
    assert_eq!(severities(&audit_chain(&cfg, &std, &p.chain, NOW, Some(&empty)), 5), [Severity::Pass]);
    let revoked = revoke(&p.chain[0].serial, &empty, &p.ca, NOW).unwrap();
    let r = audit_chain(&cfg, &std, &p.chain, NOW, Some(&revoked));
    assert_eq!(severities(&r, 5), [Severity::Fail]);
    assert!(r.for_rule(5).next().unwrap().message.contains("revoked"));
    let other = pki(Algorithm::Ed448);
    let foreign = RevocationList::empty(&other.ca, NOW);
    assert_eq!(severities(&audit_chain(&cfg, &std, &p.chain, NOW, Some(&foreign)), 5), [Severity::Fail]);
}

#[test]
fn algorithm_rule_checks_uniformity_and_mode() {
    let ed25519 = pki(Algorithm::Ed25519);
    let ed448 = pki(Algorithm::Ed448);
    let cfg = good_config(DeviceClass::Standard);
    let cur = build_profile(DeviceClass::Standard, Mode::Current);
    let mixed = vec![ed25519.chain[0].clone(), ed448.chain[1].clone()];
    let r = audit_chain(&cfg, &cur, &mixed, NOW, None);
    assert_eq!(r.for_rule(6).next().unwrap().to_string(), "R6 FAIL chain mixes signature algorithms Ed25519, Ed448");
    let fut = build_profile(DeviceClass::Standard, Mode::Future);
    assert_eq!(severities(&audit_chain(&cfg, &fut, &ed25519.chain, NOW, None), 6), [Severity::Fail]);
    let pq = pki(Algorithm::MlDsa);
    assert_eq!(severities(&audit_chain(&cfg, &fut, &pq.chain, NOW, None), 6), [Severity::Pass]);
    assert_eq!(severities(&audit_chain(&cfg, &cur, &pq.chain, NOW, None), 6), [Severity::Fail]);
}

#[test]
fn single_rule_violations_fail_only_their_rule() {
    let p = pki(Algorithm::Ed25519);
    let std = build_profile(DeviceClass::Standard, Mode::Current);
    let mut cases: Vec<(u8, ServerConfigInput)> = Vec::new();
    let mut c = good_config(DeviceClass::Standard);
    c.tls_versions.insert(TlsVersion::Tls12);
    cases.push((1, c));
    let mut c = good_config(DeviceClass::Standard);
    c.key_exchange = KeyExchange::Static;
    cases.push((2, c));
    let mut c = good_config(DeviceClass::Standard);
    c.zero_rtt_enabled = true;
    cases.push((3, c));
    let mut c = good_config(DeviceClass::Standard);
    c.offered_suites.push(SuiteId::Legacy("TLS_RSA_WITH_AES_128_CBC_SHA".into()));
    cases.push((4, c));
    let mut c = good_config(DeviceClass::Standard);
    c.revocation_checking = false;
    cases.push((7, c));
    for (rule, cfg) in cases {
        let r = audit_chain(&cfg, &std, &p.chain, NOW, None);
        assert!(!r.compliant);
        for f in &r.findings {
            let want = if f.rule == rule { Severity::Fail } else { Severity::Pass };
            assert_eq!(f.severity, want, "{}", r.to_text());
        }
    }
    let mut c = good_config(DeviceClass::Standard);
    c.client_auth = false;
    c.revocation_checking = false;
    assert!(audit_chain(&c, &std, &p.chain, NOW, None).compliant);
}

fn arb_suite() -> impl Strategy<Value = SuiteId> {
    prop_oneof![
        Just(A128),
        Just(A256),
        Just(CHACHA),
        "[A-Z][A-Z0-9_]{0,20}".prop_map(|s| s.parse::<SuiteId>().unwrap()),
    ]
}

fn arb_class() -> impl Strategy<Value = DeviceClass> {
    prop_oneof![Just(DeviceClass::Standard), Just(DeviceClass::Constrained)]
}

fn arb_config() -> impl Strategy<Value = ServerConfigInput> {
    (
        proptest::collection::btree_set(proptest::sample::select(TlsVersion::ALL.to_vec()), 0..4),
        proptest::collection::vec(arb_suite(), 0..6),
        any::<[bool; 4]>(),
        "[a-z][a-z0-9_./-]{0,20}",
    )
        .prop_map(|(tls_versions, offered_suites, flags, path)| ServerConfigInput {
            tls_versions,
            offered_suites,
            key_exchange: if flags[0] { KeyExchange::Static } else { KeyExchange::Ephemeral },
            zero_rtt_enabled: flags[1],
            client_auth: flags[2],
            revocation_checking: flags[3],
            certificate_file: PathBuf::from(path),
        })
}

proptest! {
    #[test]
    fn config_text_round_trips(cfg in arb_config()) {
        prop_assert_eq!(ServerConfigInput::parse(&cfg.to_config_string()).unwrap(), cfg);
    }

    #[test]
    fn selection_is_in_both_lists(offer in proptest::collection::vec(arb_suite(), 0..8), class in arb_class()) {
        let policy = build_profile(class, Mode::Current);
        let common: Vec<&SuiteId> = policy.preference.iter().filter(|s| offer.contains(s)).collect();
        match negotiate(&offer, &policy) {
            Negotiation::Selected(s) => {
                prop_assert!(offer.contains(&s) && policy.preference.contains(&s));
                prop_assert_eq!(common.first().copied(), Some(&s));
            }
            Negotiation::Terminate => prop_assert!(common.is_empty()),
        }
        prop_assert_eq!(negotiate(&offer, &policy), negotiate(&offer, &policy));
    }

    #[test]
    fn client_order_never_matters(
        (offer, shuffled) in proptest::collection::vec(arb_suite(), 0..8)
            .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle())),
        class in arb_class(),
    ) {
        let policy = build_profile(class, Mode::Current);
        prop_assert_eq!(negotiate(&offer, &policy), negotiate(&shuffled, &policy));
    }

    #[test]
    fn violations_never_remove_other_passes(violate in any::<[bool; 5]>(), class in arb_class()) {
        let p = pki(Algorithm::Ed25519);
        let policy = build_profile(class, Mode::Current);
        let base = audit_chain(&good_config(class), &policy, &p.chain, NOW, None);
        let mut cfg = good_config(class);
        let mut touched = BTreeSet::new();
        if violate[0] { cfg.tls_versions.insert(TlsVersion::Tls10); touched.insert(1); }
        if violate[1] { cfg.key_exchange = KeyExchange::Static; touched.insert(2); }
        if violate[2] { cfg.zero_rtt_enabled = true; touched.insert(3); }
        if violate[3] { cfg.offered_suites.push(SuiteId::Legacy("TLS_NULL".into())); touched.insert(4); }
        if violate[4] { cfg.revocation_checking = false; touched.insert(7); }
        let r = audit_chain(&cfg, &policy, &p.chain, NOW, None);
        for f in &base.findings {
            if !touched.contains(&f.rule) {
                prop_assert!(r.findings.contains(f));
            }
        }
        prop_assert_eq!(r.compliant, touched.is_empty());
    }

    #[test]
    fn lifetime_rule_matches_the_cap(extra in 0u64..2 * DAY_SECS, over in any::<bool>()) {
        let p = pki(Algorithm::Ed25519);
        let secs = if over { 398 * DAY_SECS + 1 + extra } else { 398 * DAY_SECS - extra };
        let chain = with_lifetime(&p, secs);
        let policy = build_profile(DeviceClass::Standard, Mode::Current);
        let now = chain[0].not_before;
        let r = audit_chain(&good_config(DeviceClass::Standard), &policy, &chain, now, None);
        let want = if over { Severity::Fail } else { Severity::Pass };
        prop_assert_eq!(severities(&r, 5), vec![want]);
    }
}
