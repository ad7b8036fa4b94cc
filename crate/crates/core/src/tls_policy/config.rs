// Licensed under the Apache-2.0 license

//! Line-oriented `key = value` server configuration. `#` starts a comment;
//! every key must appear exactly once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{SuiteId, TlsPolicyError, TlsVersion};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeyExchange {
    Ephemeral,
    Static,
}

impl KeyExchange {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyExchange::Ephemeral => "ephemeral",
            KeyExchange::Static => "static",
        }
    }
}

impl fmt::Display for KeyExchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeyExchange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ephemeral" => Ok(KeyExchange::Ephemeral),
            "static" => Ok(KeyExchange::Static),
            other => Err(format!("unknown key exchange `{other}` (expected ephemeral or static)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerConfigInput {
    pub tls_versions: BTreeSet<TlsVersion>,
    pub offered_suites: Vec<SuiteId>,
    pub key_exchange: KeyExchange,
    pub zero_rtt_enabled: bool,
    pub client_auth: bool,
    pub revocation_checking: bool,
    pub certificate_file: PathBuf,
}

const KEYS: [&str; 7] = [
    "tls_versions",
    "cipher_suites",
    "key_exchange",
    "zero_rtt",
    "client_auth",
    "revocation_checking",
    "certificate",
];

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, found `{other}`")),
    }
}

impl ServerConfigInput {
    pub fn parse(text: &str) -> Result<Self, TlsPolicyError> {
        let mut values: BTreeMap<&'static str, (usize, &str)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |reason: String| TlsPolicyError::Config { line, reason };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let k = k.trim();
            let key = KEYS
                .iter()
                .find(|known| **known == k)
                .ok_or_else(|| err(format!("unknown key `{k}`")))?;
            if values.insert(key, (line, v.trim())).is_some() {
                return Err(err(format!("duplicate key `{k}`")));
            }
        }
        let get = |key: &'static str| values.get(key).copied().ok_or(TlsPolicyError::MissingKey(key));
        let at = |line: usize| move |reason: String| TlsPolicyError::Config { line, reason };

        let (line, v) = get("tls_versions")?;
        let mut tls_versions = BTreeSet::new();
        for t in v.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let ver: TlsVersion = t.parse().map_err(at(line))?;
            if !tls_versions.insert(ver) {
                return Err(at(line)(format!("version {t} listed twice")));
            }
        }
        let (line, v) = get("cipher_suites")?;
        let offered_suites = SuiteId::parse_list(v).map_err(|e| at(line)(e.to_string()))?;
        let (line, v) = get("key_exchange")?;
        let key_exchange = v.parse().map_err(at(line))?;
        let flag = |key: &'static str| -> Result<bool, TlsPolicyError> {
            let (line, v) = get(key)?;
            parse_bool(v).map_err(at(line))
        };
        let zero_rtt_enabled = flag("zero_rtt")?;
        let client_auth = flag("client_auth")?;
        let revocation_checking = flag("revocation_checking")?;
        let (line, v) = get("certificate")?;
        if v.is_empty() {
            return Err(at(line)("certificate path is empty".into()));
        }
        Ok(Self {
            tls_versions,
            offered_suites,
            key_exchange,
            zero_rtt_enabled,
            client_auth,
            revocation_checking,
            certificate_file: PathBuf::from(v),
        })
    }

    /// Reads `path`; a relative certificate path is taken relative to the
    /// configuration file's directory.
    pub fn load(path: &Path) -> Result<Self, TlsPolicyError> {
        let text = fs::read_to_string(path)
            .map_err(|e| TlsPolicyError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.certificate_file.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.certificate_file = dir.join(&cfg.certificate_file);
            }
        }
        Ok(cfg)
    }

    /// Canonical text form; `parse` inverts it.
    pub fn to_config_string(&self) -> String {
        let join = |items: Vec<&str>| items.join(", ");
        format!(
            "tls_versions = {}\ncipher_suites = {}\nkey_exchange = {}\nzero_rtt = {}\nclient_auth = {}\nrevocation_checking = {}\ncertificate = {}\n",
            join(self.tls_versions.iter().map(|v| v.as_str()).collect()),
            join(self.offered_suites.iter().map(SuiteId::as_str).collect()),
            self.key_exchange,
            self.zero_rtt_enabled,
            self.client_auth,
            self.revocation_checking,
            self.certificate_file.display(),
        )
    }
}
