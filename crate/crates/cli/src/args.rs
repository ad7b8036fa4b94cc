// Licensed under the Apache-2.0 license

use std::path::PathBuf;

use chip2app_core::chip_auth::Adversary;
use chip2app_core::entropy::DEFAULT_ALPHA;
use chip2app_core::suite_registry::Mode;
use chip2app_core::tls_policy::DeviceClass;
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "chip2app",
    version,
    about = "Device-security lifecycle toolkit: provisioning, PKI, compact certificates, secure boot, chip authentication and TLS policy",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Current time in Unix seconds, replacing the system clock
    #[arg(long, global = true, value_name = "EPOCH")]
    pub now: Option<u64>,

    /// Seed a deterministic random source (reproducible runs only, never for real keys)
    #[arg(long, global = true, value_name = "TEXT")]
    pub seed: Option<String>,

    /// File holding the secure-element store passphrase [default: $CHIP2APP_PASSPHRASE]
    #[arg(long, global = true, value_name = "FILE")]
    pub passphrase_file: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the algorithm matrix of each mode
    Modes {
        /// List every (mode, role) row
        #[arg(long)]
        list: bool,
        /// Restrict the listing to one mode
        #[arg(long, value_name = "current|future")]
        mode: Option<Mode>,
    },
    /// Run the entropy health tests over raw bytes
    RngTest {
        /// Input file, or - for standard input
        #[arg(long = "in", value_name = "FILE|-")]
        input: String,
        /// Significance level
        #[arg(long, default_value_t = DEFAULT_ALPHA)]
        alpha: f64,
    },
    /// Hybrid public-key encryption
    #[command(subcommand)]
    Hybrid(HybridCmd),
    /// Certificate authority directories
    #[command(subcommand)]
    Ca(CaCmd),
    /// Generate a signing key and a certificate signing request
    Csr(CsrArgs),
    /// Review a request and issue a certificate
    Issue(IssueArgs),
    /// Verify a certificate chain
    Verify(VerifyArgs),
    /// Add a certificate to a revocation list
    Revoke(RevokeArgs),
    /// Compact certificate encoding
    #[command(subcommand)]
    Cert(CertCmd),
    /// Provision a secure element with a device identity
    Provision(ProvisionArgs),
    /// Inspect a secure element
    #[command(subcommand)]
    Device(DeviceCmd),
    /// Firmware signing and secure boot
    #[command(subcommand)]
    Fw(FwCmd),
    /// Chip authentication
    #[command(subcommand)]
    Chipauth(ChipauthCmd),
    /// TLS cipher-suite policy
    #[command(subcommand)]
    Tls(TlsCmd),
    /// End-to-end scenarios
    #[command(subcommand)]
    Scenario(ScenarioCmd),
}

#[derive(Debug, Subcommand)]
pub enum HybridCmd {
    /// Generate a recipient key pair for a mode
    Keygen {
        #[arg(long, value_name = "current|future")]
        mode: Mode,
        /// Private key output
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Public key output
        #[arg(long, value_name = "FILE")]
        public_out: PathBuf,
    },
    /// Encrypt a file to a recipient public key
    Encrypt(HybridIo),
    /// Decrypt a file with a recipient private key
    Decrypt(HybridIo),
}

#[derive(Debug, Args)]
pub struct HybridIo {
    /// Public key (encrypt) or private key (decrypt)
    #[arg(long, value_name = "FILE")]
    pub key: PathBuf,
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[arg(long, value_name = "current|future")]
    pub mode: Mode,
}

#[derive(Debug, Subcommand)]
pub enum CaCmd {
    /// Create a root CA, or an intermediate under --parent
    Init {
        #[arg(long, value_name = "DIR")]
        ca: PathBuf,
        /// Subject name of the CA
        #[arg(long)]
        name: String,
        /// Mode whose primary signature algorithm the root uses
        #[arg(long, value_name = "current|future", default_value = "current")]
        mode: Mode,
        /// Lifetime of the CA certificate
        #[arg(long, default_value_t = 3650)]
        days: u64,
        /// Issuing CA directory for an intermediate
        #[arg(long, value_name = "DIR")]
        parent: Option<PathBuf>,
    },
    /// Print a CA's name, algorithm and chain
    Show {
        #[arg(long, value_name = "DIR")]
        ca: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct CsrArgs {
    /// Subject identifier
    #[arg(long)]
    pub subject: String,
    #[arg(long, value_name = "current|future", default_value = "current")]
    pub mode: Mode,
    /// Signature algorithm [default: the mode's primary]
    #[arg(long, value_name = "NAME")]
    pub alg: Option<String>,
    /// Private key output
    #[arg(long, value_name = "FILE")]
    pub key_out: PathBuf,
    /// Request output
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IssueArgs {
    #[arg(long, value_name = "DIR")]
    pub ca: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub csr: PathBuf,
    /// Requested lifetime
    #[arg(long, default_value_t = 398)]
    pub days: u64,
    /// Certificate output, followed by its issuing chain
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Certificate file; certificates after the first form the chain
    #[arg(long, value_name = "FILE")]
    pub cert: PathBuf,
    /// CA directory whose root is the trust anchor
    #[arg(long, value_name = "DIR", required_unless_present = "root", conflicts_with = "root")]
    pub ca: Option<PathBuf>,
    /// Trust anchor certificate file
    #[arg(long, value_name = "FILE")]
    pub root: Option<PathBuf>,
    /// Extra intermediate certificates
    #[arg(long, value_name = "FILE")]
    pub chain: Option<PathBuf>,
    /// Revocation list to apply
    #[arg(long, value_name = "FILE")]
    pub crl: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RevokeArgs {
    #[arg(long, value_name = "DIR")]
    pub ca: PathBuf,
    /// Certificate to revoke
    #[arg(long, value_name = "FILE", required_unless_present = "serial", conflicts_with = "serial")]
    pub cert: Option<PathBuf>,
    /// Serial number to revoke, in hex
    #[arg(long, value_name = "HEX")]
    pub serial: Option<String>,
    /// Revocation list, created if missing
    #[arg(long, value_name = "FILE")]
    pub crl: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CertCmd {
    /// Convert a baseline text certificate to the compact envelope
    Encode {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Convert a compact envelope to the baseline text form
    Decode {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Compare compact and baseline sizes
    Size {
        /// Certificate in either form [default: the reference device certificate]
        #[arg(long = "in", value_name = "FILE")]
        input: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ProvisionArgs {
    #[arg(long, value_name = "current|future")]
    pub mode: Mode,
    /// Issuing CA directory, created as a root if missing
    #[arg(long, value_name = "DIR")]
    pub ca: PathBuf,
    /// Secure-element store, created if missing [default: $CHIP2APP_STORE]
    #[arg(long, value_name = "FILE")]
    pub store: Option<PathBuf>,
    /// Also write the device certificate and its chain here
    #[arg(long, value_name = "FILE")]
    pub cert_out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum DeviceCmd {
    /// Print the device identity and OTP slot states
    Show {
        /// Secure-element store [default: $CHIP2APP_STORE]
        #[arg(long, value_name = "FILE")]
        store: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FwCmd {
    /// Sign a firmware image
    Sign {
        #[arg(long, value_name = "FILE")]
        image: PathBuf,
        /// Semantic version of the image
        #[arg(long)]
        version: String,
        /// Signing CA directory
        #[arg(long, value_name = "DIR")]
        signer: PathBuf,
        /// Manifest output
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Device model bound into the manifest
        #[arg(long, default_value = "c2a-devkit-1")]
        model: String,
        /// Mode [default: the first mode permitting the signer's algorithm]
        #[arg(long, value_name = "current|future")]
        mode: Option<Mode>,
    },
    /// Verify an image against the store's trust root and boot it
    Verify {
        #[arg(long, value_name = "FILE")]
        image: PathBuf,
        #[arg(long, value_name = "FILE")]
        manifest: PathBuf,
        /// Secure-element store [default: $CHIP2APP_STORE]
        #[arg(long, value_name = "FILE")]
        store: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum ChipauthCmd {
    /// Run a chip and a reader in-process and print the exchange
    Demo {
        #[arg(long, value_name = "current|future")]
        mode: Mode,
        /// Replace the genuine chip with a counterfeit
        #[arg(long, value_name = "clone|replay")]
        adversary: Option<Adversary>,
    },
}

#[derive(Debug, Subcommand)]
pub enum TlsCmd {
    /// Select a suite for a client offer by server preference
    Negotiate {
        /// Comma-separated suites offered by the client
        #[arg(long, value_name = "LIST")]
        offer: String,
        #[arg(long, value_name = "standard|constrained")]
        class: DeviceClass,
        #[arg(long, value_name = "current|future", default_value = "current")]
        mode: Mode,
    },
    /// Audit a server configuration file
    Audit {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[arg(long, value_name = "standard|constrained")]
        class: DeviceClass,
        /// Revocation list for the server certificate
        #[arg(long, value_name = "FILE")]
        crl: Option<PathBuf>,
        #[arg(long, value_name = "current|future", default_value = "current")]
        mode: Mode,
    },
}

#[derive(Debug, Subcommand)]
pub enum ScenarioCmd {
    /// Provision, issue, sign and boot firmware, authenticate a chip and audit TLS
    Full {
        #[arg(long, value_name = "current|future", default_value = "current")]
        mode: Mode,
    },
}
