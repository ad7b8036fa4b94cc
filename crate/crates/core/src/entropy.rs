// Licensed under the Apache-2.0 license

//! Random byte sources and the statistical health gate that every key,
//! nonce and salt draw passes through.
//!
//! Two classical tests make up the default gate: the frequency (monobit)
//! test and the runs test. Both return a p-value in `[0, 1]`; a test passes
//! when `p >= alpha`.

use rand_chacha::ChaCha20Rng;
use rand_core::{Rng, SeedableRng};
use sha2::{Digest, Sha256};
use thiserror::Error;
use zeroize::Zeroizing;

/// Smallest sample either test accepts.
pub const MIN_BITS: usize = 100;

/// Significance level used when the caller does not pick one.
pub const DEFAULT_ALPHA: f64 = 0.01;

/// Significance level for the gate in front of key material. Much lower than
/// [`DEFAULT_ALPHA`], while still rejecting stuck sources.
pub const KEYGEN_ALPHA: f64 = 1e-6;

/// Fresh samples tried before a gated draw is refused. The runs test's
/// frequency prerequisite rejects about 6e-5 of ideal samples whatever the
/// alpha, so a single sample would refuse far more often than the alpha
/// suggests.
pub const KEYGEN_ATTEMPTS: usize = 3;

/// Sample size drawn and tested before any gated draw.
pub const KEYGEN_SAMPLE_BYTES: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("sample too short: {len} bits, need at least {min}")]
    TooShort { len: usize, min: usize },
    #[error("alpha {0} outside (0, 0.5]")]
    InvalidAlpha(f64),
    #[error("system sources do not take a seed")]
    SeedNotAllowed,
    #[error("seeded sources need a seed")]
    SeedRequired,
    #[error("entropy health gate failed: {}", .0.summary())]
    HealthGateFailed(HealthReport),
}

/// Anything that can fill a buffer with random bytes.
///
/// Implemented by [`RandomSource`]; tests implement it for faulty sources
/// to exercise the health gate.
pub trait EntropySource {
    fn fill_bytes(&mut self, dest: &mut [u8]);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    System,
    /// Reproducible ChaCha20 stream. Test and demo use only.
    SeededDeterministic,
}

/// A random byte source: the operating system, or a seeded ChaCha20 stream.
pub struct RandomSource {
    inner: Inner,
}

enum Inner {
    System,
    Seeded(Box<ChaCha20Rng>),
}

impl RandomSource {
    pub fn system() -> Self {
        Self { inner: Inner::System }
    }

    /// Equal seeds give identical byte streams.
    pub fn seeded(seed: &[u8]) -> Self {
        let key: [u8; 32] = Sha256::digest(seed).into();
        Self {
            inner: Inner::Seeded(Box::new(ChaCha20Rng::from_seed(key))),
        }
    }

    pub fn new(kind: SourceKind, seed: Option<&[u8]>) -> Result<Self, EntropyError> {
        match (kind, seed) {
            (SourceKind::System, None) => Ok(Self::system()),
            (SourceKind::System, Some(_)) => Err(EntropyError::SeedNotAllowed),
            (SourceKind::SeededDeterministic, Some(seed)) => Ok(Self::seeded(seed)),
            (SourceKind::SeededDeterministic, None) => Err(EntropyError::SeedRequired),
        }
    }

    pub fn kind(&self) -> SourceKind {
        match self.inner {
            Inner::System => SourceKind::System,
            Inner::Seeded(_) => SourceKind::SeededDeterministic,
        }
    }

    /// Returns exactly `n` bytes; the next `n` of the stream for seeded sources.
    pub fn random_bytes(&mut self, n: usize) -> Vec<u8> {
        let mut out = vec![0u8; n];
        self.fill_bytes(&mut out);
        out
    }
}

impl std::fmt::Debug for RandomSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RandomSource").field("kind", &self.kind()).finish()
    }
}

impl EntropySource for RandomSource {
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        match &mut self.inner {
            Inner::System => getrandom::fill(dest).expect("operating system entropy unavailable"),
            Inner::Seeded(rng) => rng.fill_bytes(dest),
        }
    }
}

/// An ordered sequence of bits. Bytes unpack most-significant bit first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
            .collect();
        Self { bits }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        Self {
            bits: bits.into_iter().collect(),
        }
    }

    /// `0101...` of the given length.
    pub fn alternating(len: usize) -> Self {
        Self::from_bits((0..len).map(|i| i % 2 == 1))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self::from_bits(self.bits.iter().map(|b| !b))
    }

    /// Number of maximal blocks of identical bits.
    pub fn runs(&self) -> usize {
        if self.bits.is_empty() {
            return 0;
        }
        1 + self.bits.windows(2).filter(|w| w[0] != w[1]).count()
    }

    fn check_len(&self) -> Result<(), EntropyError> {
        if self.len() < MIN_BITS {
            return Err(EntropyError::TooShort {
                len: self.len(),
                min: MIN_BITS,
            });
        }
        Ok(())
    }
}

/// Frequency test: `p = erfc(|#ones - #zeros| / sqrt(2n))`.
pub fn monobit_test(bits: &BitString) -> Result<f64, EntropyError> {
    bits.check_len()?;
    let n = bits.len() as f64;
    let ones = bits.ones() as f64;
    let imbalance = (2.0 * ones - n).abs();
    Ok(clamp_p(libm::erfc(imbalance / (2.0 * n).sqrt())))
}

/// Outcome of the runs test. A stream that fails the frequency prerequisite
/// is reported as `p = 0` with `prerequisite_failed` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunsOutcome {
    pub p_value: f64,
    pub runs: usize,
    pub prerequisite_failed: bool,
}

/// Runs test:
/// `p = erfc(|V - 2n*pi*(1-pi)| / (2*sqrt(2n)*pi*(1-pi)))` where `V` counts
/// runs and `pi` is the fraction of ones. Requires `|pi - 1/2| < 2/sqrt(n)`.
pub fn runs_test(bits: &BitString) -> Result<RunsOutcome, EntropyError> {
    bits.check_len()?;
    let n = bits.len() as f64;
    let pi = bits.ones() as f64 / n;
    let runs = bits.runs();
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return Ok(RunsOutcome {
            p_value: 0.0,
            runs,
            prerequisite_failed: true,
        });
    }
    let spread = pi * (1.0 - pi);
    let stat = (runs as f64 - 2.0 * n * spread).abs() / (2.0 * (2.0 * n).sqrt() * spread);
    Ok(RunsOutcome {
        p_value: clamp_p(libm::erfc(stat)),
        runs,
        prerequisite_failed: false,
    })
}

fn clamp_p(p: f64) -> f64 {
    if p.is_nan() {
        0.0
    } else {
        p.clamp(0.0, 1.0)
    }
}

/// A single statistical test the gate can run.
pub trait HealthTest: Send + Sync {
    fn name(&self) -> &'static str;
    /// p-value plus an optional flag describing a degenerate input.
    fn evaluate(&self, bits: &BitString) -> Result<(f64, Option<&'static str>), EntropyError>;
}

pub struct MonobitTest;
pub struct RunsTest;

impl HealthTest for MonobitTest {
    fn name(&self) -> &'static str {
        "monobit"
    }

    fn evaluate(&self, bits: &BitString) -> Result<(f64, Option<&'static str>), EntropyError> {
        monobit_test(bits).map(|p| (p, None))
    }
}

impl HealthTest for RunsTest {
    fn name(&self) -> &'static str {
        "runs"
    }

    fn evaluate(&self, bits: &BitString) -> Result<(f64, Option<&'static str>), EntropyError> {
        let out = runs_test(bits)?;
        let flag = out.prerequisite_failed.then_some("frequency-prerequisite-failed");
        Ok((out.p_value, flag))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    pub name: String,
    pub p_value: f64,
    pub pass: bool,
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HealthReport {
    pub test_results: Vec<TestResult>,
    pub alpha: f64,
    pub overall_pass: bool,
}

impl HealthReport {
    fn summary(&self) -> String {
        self.test_results
            .iter()
            .map(|r| format!("{} p={:e} {}", r.name, r.p_value, if r.pass { "PASS" } else { "FAIL" }))
            .collect::<Vec<_>>()
            .join(", ")
    }
}

/// An ordered list of health tests evaluated at one significance level.
pub struct HealthGate {
    alpha: f64,
    tests: Vec<Box<dyn HealthTest>>,
}

impl HealthGate {
    pub fn new(alpha: f64) -> Result<Self, EntropyError> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(EntropyError::InvalidAlpha(alpha));
        }
        Ok(Self {
            alpha,
            tests: vec![Box::new(MonobitTest), Box::new(RunsTest)],
        })
    }

    pub fn with_test(mut self, test: Box<dyn HealthTest>) -> Self {
        self.tests.push(test);
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn evaluate(&self, sample: &BitString) -> Result<HealthReport, EntropyError> {
        let mut test_results = Vec::with_capacity(self.tests.len());
        for test in &self.tests {
            let (p_value, flag) = test.evaluate(sample)?;
            test_results.push(TestResult {
                name: test.name().to_string(),
                p_value,
                pass: p_value >= self.alpha,
                flag: flag.map(str::to_string),
            });
        }
        let overall_pass = test_results.iter().all(|r| r.pass);
        Ok(HealthReport {
            test_results,
            alpha: self.alpha,
            overall_pass,
        })
    }
}

/// Runs the default gate (monobit, runs) over `sample`.
pub fn health_gate(sample: &BitString, alpha: f64) -> Result<HealthReport, EntropyError> {
    HealthGate::new(alpha)?.evaluate(sample)
}

/// Draws fresh samples until one passes the key-generation gate (at most
/// [`KEYGEN_ATTEMPTS`]), then returns `n` further bytes from the same
/// source. Refuses with the last report if every sample fails.
pub fn gated_bytes<S: EntropySource + ?Sized>(
    source: &mut S,
    n: usize,
) -> Result<Zeroizing<Vec<u8>>, EntropyError> {
    let mut sample = [0u8; KEYGEN_SAMPLE_BYTES];
    let mut attempt = 0;
    loop {
        source.fill_bytes(&mut sample);
        let report = health_gate(&BitString::from_bytes(&sample), KEYGEN_ALPHA)?;
        if report.overall_pass {
            break;
        }
        attempt += 1;
        if attempt == KEYGEN_ATTEMPTS {
            return Err(EntropyError::HealthGateFailed(report));
        }
    }
    let mut out = Zeroizing::new(vec![0u8; n]);
    source.fill_bytes(&mut out);
    Ok(out)
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// erfc by composite Simpson quadrature of `2/sqrt(pi) * exp(-t^2)` on
    /// `[x, x + 12]`. Independent of libm.
    fn erfc_quadrature(x: f64) -> f64 {
        let steps = 200_000;
        let upper = x + 12.0;
        let h = (upper - x) / steps as f64;
        let f = |t: f64| (-t * t).exp();
        let mut sum = f(x) + f(upper);
        for i in 1..steps {
            let t = x + i as f64 * h;
            sum += if i % 2 == 1 { 4.0 * f(t) } else { 2.0 * f(t) };
        }
        sum * h / 3.0 * 2.0 / std::f64::consts::PI.sqrt()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn zero_length_draw_is_empty() {
        assert!(RandomSource::seeded(b"S").random_bytes(0).is_empty());
    }

    #[test]
    fn seeded_sources_repeat() {
        let a = RandomSource::seeded(b"S").random_bytes(16);
        let b = RandomSource::seeded(b"S").random_bytes(16);
        assert_eq!(a, b);
        assert_ne!(a, RandomSource::seeded(b"T").random_bytes(16));
    }

    #[test]
    fn seeded_stream_continues() {
        let mut s = RandomSource::seeded(b"S");
        let first = s.random_bytes(8);
        let second = s.random_bytes(8);
        let whole = RandomSource::seeded(b"S").random_bytes(16);
        assert_eq!([first, second].concat(), whole);
    }

    #[test]
    fn system_source_rejects_seed() {
        assert_eq!(
            RandomSource::new(SourceKind::System, Some(b"x")).unwrap_err(),
            EntropyError::SeedNotAllowed
        );
        assert_eq!(
            RandomSource::new(SourceKind::SeededDeterministic, None).unwrap_err(),
            EntropyError::SeedRequired
        );
        assert_eq!(RandomSource::system().random_bytes(32).len(), 32);
    }

    #[test]
    fn monobit_examples() {
        assert_eq!(monobit_test(&BitString::alternating(100)).unwrap(), 1.0);

        let zeros = BitString::from_bits(vec![false; 100]);
        let p = monobit_test(&zeros).unwrap();
        assert!(p < 1e-20);
        // mpmath: erfc(10/sqrt(2)) = 1.5239706048321052e-23
        assert!(rel_close(p, 1.5239706048321052e-23, 1e-9), "{p}");
        assert!(rel_close(p, erfc_quadrature(10.0 / 2f64.sqrt()), 1e-6));

        let sixty = BitString::from_bits((0..100).map(|i| i < 60));
        let p = monobit_test(&sixty).unwrap();
        assert!(rel_close(p, 0.045500263896358414, 1e-9), "{p}");
        assert!(rel_close(p, erfc_quadrature(2.0 / 2f64.sqrt()), 1e-9));
    }

    #[test]
    fn short_input_is_rejected() {
        let short = BitString::alternating(99);
        assert_eq!(
            monobit_test(&short).unwrap_err(),
            EntropyError::TooShort { len: 99, min: 100 }
        );
        assert!(runs_test(&short).is_err());
        assert!(health_gate(&short, 0.01).is_err());
    }

    #[test]
    fn runs_examples() {
        let alt = runs_test(&BitString::alternating(100)).unwrap();
        assert_eq!(alt.runs, 100);
        assert!(!alt.prerequisite_failed);
        // |100 - 50| / (2 * sqrt(200) * 0.25) = sqrt(50); erfc(sqrt(50)) per mpmath.
        assert!(rel_close(alt.p_value, 1.5239706048321052e-23, 1e-9), "{}", alt.p_value);

        let zeros = runs_test(&BitString::from_bits(vec![false; 100])).unwrap();
        assert!(zeros.prerequisite_failed);
        assert_eq!(zeros.p_value, 0.0);
    }

    #[test]
    fn runs_matches_brute_force_counter() {
        let sample = RandomSource::seeded(b"runs-oracle").random_bytes(16);
        let bits = BitString::from_bytes(&sample);
        assert_eq!(bits.len(), 128);
        let mut scanned = 1;
        for i in 1..bits.len() {
            if bits.bits()[i] != bits.bits()[i - 1] {
                scanned += 1;
            }
        }
        let out = runs_test(&bits).unwrap();
        assert_eq!(out.runs, scanned);
        if !out.prerequisite_failed {
            let n = 128f64;
            let pi = bits.ones() as f64 / n;
            let stat = (scanned as f64 - 2.0 * n * pi * (1.0 - pi)).abs()
                / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi));
            assert!(rel_close(out.p_value, erfc_quadrature(stat), 1e-6));
        }
    }

    #[test]
    fn fixed_pattern_matches_mpmath() {
        let bits = BitString::from_bytes(&[
            0x5a, 0x3c, 0xf0, 0x0f, 0x99, 0x66, 0x12, 0x34, 0x56, 0x78, 0x9a, 0xbc, 0xde, 0xf0,
            0x81, 0x7e,
        ]);
        assert_eq!(bits.ones(), 64);
        assert_eq!(bits.runs(), 59);
        assert_eq!(monobit_test(&bits).unwrap(), 1.0);
        let p = runs_test(&bits).unwrap().p_value;
        assert!(rel_close(p, 0.37675911781158202755, 1e-9), "{p}");
    }

    #[test]
    fn gate_examples() {
        let report = health_gate(&BitString::alternating(100), 0.01).unwrap();
        assert!(report.test_results[0].pass);
        assert!(!report.test_results[1].pass);
        assert!(!report.overall_pass);

        let zeros = health_gate(&BitString::from_bits(vec![false; 128]), 0.01).unwrap();
        assert!(zeros.test_results.iter().all(|r| !r.pass));
        assert_eq!(zeros.test_results[1].flag.as_deref(), Some("frequency-prerequisite-failed"));
    }

    #[test]
    fn alpha_bounds() {
        let bits = BitString::alternating(100);
        assert!(health_gate(&bits, 0.0).is_err());
        assert!(health_gate(&bits, 0.51).is_err());
        assert!(health_gate(&bits, 0.5).is_ok());
    }

    #[test]
    fn runs_is_order_sensitive() {
        let sorted = BitString::from_bits((0..100).map(|i| i < 50));
        let alt = BitString::alternating(100);
        assert_eq!(monobit_test(&sorted).unwrap(), monobit_test(&alt).unwrap());
        assert_ne!(runs_test(&sorted).unwrap().p_value, runs_test(&alt).unwrap().p_value);
    }

    struct Stuck(u8);
    impl EntropySource for Stuck {
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            dest.fill(self.0);
        }
    }

    #[test]
    fn gated_draw_refuses_stuck_source() {
        assert!(matches!(
            gated_bytes(&mut Stuck(0), 32),
            Err(EntropyError::HealthGateFailed(_))
        ));
        assert!(matches!(
            gated_bytes(&mut Stuck(0xff), 32),
            Err(EntropyError::HealthGateFailed(_))
        ));
        assert_eq!(gated_bytes(&mut RandomSource::seeded(b"ok"), 32).unwrap().len(), 32);
    }

    /// Stuck for the first `bad` fills, then a healthy stream.
    struct Glitch {
        bad: usize,
        inner: RandomSource,
    }
    impl EntropySource for Glitch {
        fn fill_bytes(&mut self, dest: &mut [u8]) {
            if self.bad > 0 {
                self.bad -= 1;
                dest.fill(0);
            } else {
                self.inner.fill_bytes(dest);
            }
        }
    }

    #[test]
    fn gated_draw_retries_a_bounded_number_of_samples() {
        let glitch = |bad| Glitch {
            bad,
            inner: RandomSource::seeded(b"glitch"),
        };
        assert!(gated_bytes(&mut glitch(KEYGEN_ATTEMPTS - 1), 16).is_ok());
        assert!(gated_bytes(&mut glitch(KEYGEN_ATTEMPTS), 16).is_err());
    }

    proptest! {
        #[test]
        fn p_values_in_unit_interval(bytes in proptest::collection::vec(any::<u8>(), 13..64)) {
            let bits = BitString::from_bytes(&bytes);
            let m = monobit_test(&bits).unwrap();
            let r = runs_test(&bits).unwrap().p_value;
            prop_assert!((0.0..=1.0).contains(&m));
            prop_assert!((0.0..=1.0).contains(&r));
        }

        #[test]
        fn complement_preserves_p(bytes in proptest::collection::vec(any::<u8>(), 13..64)) {
            let bits = BitString::from_bytes(&bytes);
            let inv = bits.complement();
            prop_assert_eq!(monobit_test(&bits).unwrap(), monobit_test(&inv).unwrap());
            let (a, b) = (runs_test(&bits).unwrap(), runs_test(&inv).unwrap());
            prop_assert_eq!(a.runs, b.runs);
            prop_assert_eq!(a.prerequisite_failed, b.prerequisite_failed);
            prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        }

        #[test]
        fn monobit_ignores_permutation(bytes in proptest::collection::vec(any::<u8>(), 13..64), rot in 0usize..512) {
            let bits = BitString::from_bytes(&bytes);
            let mut shuffled = bits.bits().to_vec();
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
            prop_assert_eq!(monobit_test(&bits).unwrap(), monobit_test(&BitString::from_bits(shuffled)).unwrap());
        }

        #[test]
        fn seeded_reports_reproduce(seed in proptest::collection::vec(any::<u8>(), 0..16)) {
            let a = RandomSource::seeded(&seed).random_bytes(64);
            let b = RandomSource::seeded(&seed).random_bytes(64);
            prop_assert_eq!(
                health_gate(&BitString::from_bytes(&a), 0.01).unwrap(),
                health_gate(&BitString::from_bytes(&b), 0.01).unwrap()
            );
        }
    }
}
