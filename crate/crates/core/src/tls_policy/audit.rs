// Licensed under the Apache-2.0 license

//! Static audit of a server configuration against a policy. Each rule runs
//! independently and contributes at least one finding.

use std::fmt;
use std::fs;

use super::{CipherSuitePolicy, DeviceClass, KeyExchange, ServerConfigInput, TlsPolicyError, TlsVersion};
use crate::compact_cert::{decode_compact, dearmor_all, CertificateRecord};
use crate::pki::{RevocationList, DAY_SECS, MAX_END_ENTITY_DAYS};
use crate::suite_registry::{permitted, Role};

pub const RULE_COUNT: u8 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Severity {
    Pass,
    Warn,
    Fail,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Pass => "PASS",
            Severity::Warn => "WARN",
            Severity::Fail => "FAIL",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    /// 1 through `RULE_COUNT`.
    pub rule: u8,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{} {} {}", self.rule, self.severity, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditReport {
    /// Ordered by rule.
    pub findings: Vec<Finding>,
    pub compliant: bool,
}

impl AuditReport {
    fn new(findings: Vec<Finding>) -> Self {
        let compliant = findings.iter().all(|f| f.severity != Severity::Fail);
        Self {
            findings,
            compliant,
        }
    }

    pub fn for_rule(&self, rule: u8) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(move |f| f.rule == rule)
    }

    /// One finding per line.
    pub fn to_text(&self) -> String {
        self.findings.iter().map(|f| format!("{f}\n")).collect()
    }
}

fn finding(rule: u8, severity: Severity, message: impl Into<String>) -> Finding {
    Finding {
        rule,
        severity,
        message: message.into(),
    }
}

fn list<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn r1_version(cfg: &ServerConfigInput, policy: &CipherSuitePolicy) -> Finding {
    if cfg.tls_versions.is_empty() {
        return finding(1, Severity::Fail, "no TLS version enabled");
    }
    let below: Vec<TlsVersion> = cfg
        .tls_versions
        .iter()
        .copied()
        .filter(|v| *v < policy.min_version)
        .collect();
    let only = format!("only {} allowed", policy.min_version);
    if below.is_empty() {
        return finding(1, Severity::Pass, format!("only {} enabled", list(&cfg.tls_versions)));
    }
    let fallback = policy.device_class == DeviceClass::Constrained
        && policy.allow_tls12_fallback
        && below == [TlsVersion::Tls12];
    if fallback {
        finding(
            1,
            Severity::Warn,
            format!("{} enabled under the constrained-device fallback", TlsVersion::Tls12),
        )
    } else {
        finding(1, Severity::Fail, format!("{} enabled; {only}", list(&below)))
    }
}

fn r2_ephemeral(cfg: &ServerConfigInput, policy: &CipherSuitePolicy) -> Finding {
    if policy.require_ephemeral && cfg.key_exchange != KeyExchange::Ephemeral {
        finding(2, Severity::Fail, "static key exchange gives no forward secrecy")
    } else {
        finding(2, Severity::Pass, format!("{} key exchange", cfg.key_exchange))
    }
}

fn r3_zero_rtt(cfg: &ServerConfigInput, policy: &CipherSuitePolicy) -> Finding {
    if policy.forbid_zero_rtt && cfg.zero_rtt_enabled {
        finding(3, Severity::Fail, "0-RTT enabled; early data is replayable")
    } else if cfg.zero_rtt_enabled {
        finding(3, Severity::Pass, "0-RTT enabled and permitted by policy")
    } else {
        finding(3, Severity::Pass, "0-RTT disabled")
    }
}

fn r4_suites(cfg: &ServerConfigInput, policy: &CipherSuitePolicy) -> Vec<Finding> {
    let class = policy.device_class;
    if cfg.offered_suites.is_empty() {
        return vec![finding(4, Severity::Fail, "no cipher suites offered")];
    }
    let bad: Vec<Finding> = cfg
        .offered_suites
        .iter()
        .filter(|s| !policy.preference.contains(s))
        .map(|s| finding(4, Severity::Fail, format!("{s} not permitted for {class} devices")))
        .collect();
    if bad.is_empty() {
        vec![finding(
            4,
            Severity::Pass,
            format!("offered suites permitted for {class} devices: {}", list(&cfg.offered_suites)),
        )]
    } else {
        bad
    }
}

fn lifetime(secs: u64) -> String {
    match (secs / DAY_SECS, secs % DAY_SECS) {
        (d, 0) => format!("{d} days"),
        (d, r) => format!("{d} days {r} s"),
    }
}

fn r5_validity(chain: &[CertificateRecord], now: u64, crl: Option<&RevocationList>) -> Finding {
    let fail = |m: String| finding(5, Severity::Fail, m);
    let Some(leaf) = chain.first() else {
        return fail("no certificate".into());
    };
    let life = leaf.validity_secs();
    if leaf.not_before >= leaf.not_after {
        return fail("certificate validity window is empty".into());
    }
    if life > MAX_END_ENTITY_DAYS * DAY_SECS {
        return fail(format!(
            "certificate lifetime {} exceeds {MAX_END_ENTITY_DAYS} days",
            lifetime(life)
        ));
    }
    if now < leaf.not_before {
        return fail(format!("certificate not valid before {}", leaf.not_before));
    }
    if now > leaf.not_after {
        return fail(format!("certificate expired at {}", leaf.not_after));
    }
    if let Some(crl) = crl {
        let issuer = chain.iter().find(|c| c.subject_id == crl.issuer_id);
        if !issuer.is_some_and(|i| crl.verify(i)) {
            return fail(format!(
                "revocation list from {} does not verify against the chain",
                crl.issuer_id
            ));
        }
        if leaf.issuer_id == crl.issuer_id && crl.contains(&leaf.serial) {
            return fail(format!("certificate {} is revoked", crate::hex(&leaf.serial)));
        }
    }
    finding(
        5,
        Severity::Pass,
        format!("certificate lifetime {}, currently valid", lifetime(life)),
    )
}

fn r6_algorithms(chain: &[CertificateRecord], policy: &CipherSuitePolicy) -> Finding {
    let mut algs = Vec::new();
    for c in chain {
        if !algs.contains(&c.signature_alg) {
            algs.push(c.signature_alg);
        }
    }
    match algs.as_slice() {
        [] => finding(6, Severity::Fail, "no certificate"),
        [alg] if !permitted(policy.mode, Role::Signature, *alg) => finding(
            6,
            Severity::Fail,
            format!("{alg} is not a {} mode signature algorithm", policy.mode),
        ),
        [alg] => finding(
            6,
            Severity::Pass,
            format!("{}-certificate chain signed with {alg}", chain.len()),
        ),
        many => finding(
            6,
            Severity::Fail,
            format!("chain mixes signature algorithms {}", list(many)),
        ),
    }
}

fn r7_revocation(cfg: &ServerConfigInput, policy: &CipherSuitePolicy) -> Finding {
    match (cfg.client_auth, cfg.revocation_checking) {
        (false, _) => finding(7, Severity::Pass, "client authentication disabled"),
        (true, true) => finding(7, Severity::Pass, "client certificates checked for revocation"),
        (true, false) if policy.require_client_cert_revocation_check => finding(
            7,
            Severity::Fail,
            "client certificates accepted without revocation checking",
        ),
        (true, false) => finding(7, Severity::Pass, "client revocation checking not required"),
    }
}

/// Audits `cfg` with an already loaded certificate chain, leaf first.
pub fn audit_chain(
    cfg: &ServerConfigInput,
    policy: &CipherSuitePolicy,
    chain: &[CertificateRecord],
    now: u64,
    crl: Option<&RevocationList>,
) -> AuditReport {
    let mut findings = vec![
        r1_version(cfg, policy),
        r2_ephemeral(cfg, policy),
        r3_zero_rtt(cfg, policy),
    ];
    findings.extend(r4_suites(cfg, policy));
    findings.push(r5_validity(chain, now, crl));
    findings.push(r6_algorithms(chain, policy));
    findings.push(r7_revocation(cfg, policy));
    AuditReport::new(findings)
}

/// Reads the certificate file (armoured certificates, leaf first) and
/// audits.
pub fn audit_config(
    cfg: &ServerConfigInput,
    policy: &CipherSuitePolicy,
    now: u64,
    crl: Option<&RevocationList>,
) -> Result<AuditReport, TlsPolicyError> {
    let path = &cfg.certificate_file;
    let text = fs::read_to_string(path)
        .map_err(|e| TlsPolicyError::Io(format!("{}: {e}", path.display())))?;
    let bad = |e: String| TlsPolicyError::Certificate(format!("{}: {e}", path.display()));
    let items = dearmor_all(&text).map_err(|e| bad(e.to_string()))?;
    if items.is_empty() {
        return Err(bad("no certificates".into()));
    }
    let mut chain = Vec::with_capacity(items.len());
    for (kind, bytes) in items {
        if kind != "CERTIFICATE" {
            return Err(bad(format!("unexpected {kind} envelope")));
        }
        chain.push(decode_compact(&bytes).map_err(|e| bad(e.to_string()))?);
    }
    Ok(audit_chain(cfg, policy, &chain, now, crl))
}
