// Licensed under the Apache-2.0 license

//! The audit golden set: configuration files and expected reports live in
//! `tests/fixtures/tls`; the certificates they name are generated here from
//! a fixed seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chip2app_core::compact_cert::{armor, encode_compact, CertificateRecord};
use chip2app_core::entropy::RandomSource;
use chip2app_core::pki::{CertificateAuthority, DAY_SECS};
use chip2app_core::suite_registry::primitives::SigningKeyPair;
use chip2app_core::suite_registry::Algorithm;
use chip2app_core::tls_policy::DeviceClass;

pub const NOW: u64 = 1_760_000_000;

pub struct Case {
    pub name: String,
    pub class: DeviceClass,
    pub config: PathBuf,
    pub expected: String,
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/tls")
}

fn write_chain(path: &Path, chain: &[&CertificateRecord]) {
    let text: String = chain
        .iter()
        .map(|c| armor("CERTIFICATE", &encode_compact(c).unwrap()))
        .collect();
    fs::write(path, text).unwrap();
}

fn leaf(ca: &mut CertificateAuthority, src: &mut RandomSource, days: u64, at: u64) -> CertificateRecord {
    let key = SigningKeyPair::generate(ca.key().algorithm(), src).unwrap();
    ca.issue_for_key("server.example", key.public(), days, at, BTreeMap::new())
        .unwrap()
}

/// Copies every case into `dir` next to its certificates and returns the
/// cases sorted by name.
pub fn materialize(dir: &Path) -> Vec<Case> {
    let mut src = RandomSource::seeded(b"tls-audit-golden");
    let t0 = NOW - DAY_SECS;
    let mut ca = CertificateAuthority::new_root("tls-root", Algorithm::Ed25519, 3650, t0 - DAY_SECS, &mut src).unwrap();
    let other = CertificateAuthority::new_root("tls-root-448", Algorithm::Ed448, 3650, t0, &mut src).unwrap();
    let root = ca.certificate().clone();

    let server = leaf(&mut ca, &mut src, 398, t0);
    write_chain(&dir.join("server.cert"), &[&server, &root]);

    let mut long = server.clone();
    long.not_after = long.not_before + 399 * DAY_SECS;
    long.signature = ca.key().sign(&long.tbs_bytes().unwrap());
    write_chain(&dir.join("long.cert"), &[&long, &root]);

    let expired = leaf(&mut ca, &mut src, 100, NOW - 200 * DAY_SECS);
    write_chain(&dir.join("expired.cert"), &[&expired, &root]);

    let early = leaf(&mut ca, &mut src, 30, NOW + 10 * DAY_SECS);
    write_chain(&dir.join("not-yet-valid.cert"), &[&early, &root]);

    write_chain(&dir.join("mixed.cert"), &[&server, other.certificate()]);

    let mut cases = Vec::new();
    for entry in fs::read_dir(fixture_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "conf") {
            continue;
        }
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let class = name.split('-').next().unwrap().parse().unwrap();
        let config = dir.join(format!("{name}.conf"));
        fs::copy(&path, &config).unwrap();
        let expected = fs::read_to_string(path.with_extension("expected")).unwrap();
        cases.push(Case {
            name,
            class,
            config,
            expected,
        });
    }
    cases.sort_by(|a, b| a.name.cmp(&b.name));
    cases
}
