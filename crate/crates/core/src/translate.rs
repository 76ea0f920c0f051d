//! Translation of validated intents into gateway-flavor-specific
//! configurations, and the flavor-free canonical form used for comparison,
//! hashing, and drift detection.
//!
//! Two synthetic flavors ship in-tree. FlavorA expresses rate limits as a
//! token bucket in requests/second (`rate_rps`, `capacity`); FlavorB encodes
//! the identical semantics in requests/minute (`rate_rpm`, `burst`). The
//! schemas differ, the enforcement does not, so
//! `canonicalize(translate(i, A)) == canonicalize(translate(i, B))` holds —
//! and hashes equal — for every valid intent. That equation is what "the
//! same intent means the same thing on every gateway" means here.

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::intent::{AuthnMode, GovernanceIntent, IntentSpec};
use crate::kv::{ident_ok, parse_milli, prefix_ok, Fields, ParseError};
use crate::units::{MilliRpm, MilliRps};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum GatewayFlavor {
    A,
    B,
}

impl GatewayFlavor {
    pub fn as_str(self) -> &'static str {
        match self {
            GatewayFlavor::A => "A",
            GatewayFlavor::B => "B",
        }
    }

    pub fn parse(s: &str) -> Option<GatewayFlavor> {
        match s {
            "A" | "a" => Some(GatewayFlavor::A),
            "B" | "b" => Some(GatewayFlavor::B),
            _ => None,
        }
    }
}

impl fmt::Display for GatewayFlavor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Flavor-dependent limiter encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LimiterParams {
    FlavorA { rate: MilliRps, capacity: u32 },
    FlavorB { rate: MilliRpm, burst: u32 },
}

/// Flavor-free limiter normal form: requests/second plus bucket capacity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CanonicalLimiter {
    pub rate: MilliRps,
    pub capacity: u32,
}

impl LimiterParams {
    pub fn canonicalize(&self) -> CanonicalLimiter {
        match *self {
            LimiterParams::FlavorA { rate, capacity } => CanonicalLimiter { rate, capacity },
            LimiterParams::FlavorB { rate, burst } => CanonicalLimiter {
                rate: rate.to_rps(),
                capacity: burst,
            },
        }
    }
}

/// One enforceable route entry in a flavored configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRule {
    pub prefix: String,
    pub tenant: String,
    pub authn_mode: AuthnMode,
    pub allowed_principals: Vec<String>,
    pub limiter: LimiterParams,
    pub p95_target_ms: f64,
}

/// Content digest of a configuration's canonical byte rendering (SHA-256).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConfigHash(pub [u8; 32]);

impl ConfigHash {
    pub fn of_bytes(bytes: &[u8]) -> ConfigHash {
        let mut h = Sha256::new();
        h.update(bytes);
        ConfigHash(h.finalize().into())
    }

    pub fn to_hex(self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Option<ConfigHash> {
        if s.len() != 64 {
            return None;
        }
        let mut out = [0u8; 32];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            let hi = (chunk[0] as char).to_digit(16)?;
            let lo = (chunk[1] as char).to_digit(16)?;
            out[i] = (hi * 16 + lo) as u8;
        }
        Some(ConfigHash(out))
    }

    /// Short form for audit lines.
    pub fn short(self) -> String {
        self.to_hex()[..12].to_string()
    }
}

impl fmt::Display for ConfigHash {
    fmt_hash!();
}

macro_rules! unused {
    () => {};
}
unused!();

impl fmt::Debug for ConfigHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ConfigHash({})", self.short())
    }
}

impl Serialize for ConfigHash {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ConfigHash {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ConfigHash::from_hex(&s).ok_or_else(|| serde::de::Error::custom("invalid config hash"))
    }
}

/// A flavored, versioned gateway configuration.
///
/// `config_hash` is a pure function of `(flavor, routes)`; the version is
/// excluded so semantic identity is hash identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewayConfig {
    pub flavor: GatewayFlavor,
    pub version: u64,
    pub source_intent_id: String,
    pub routes: Vec<RouteRule>,
    pub config_hash: ConfigHash,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TranslateError {
    /// An intent field has no mapping for this flavor. Neither built-in
    /// flavor produces it; the path exists for adapter extensibility.
    #[error("no mapping for {construct} in flavor {flavor}")]
    UnsupportedConstruct {
        flavor: GatewayFlavor,
        construct: String,
    },
}

// ---------------------------------------------------------------------------
// Adapters
// ---------------------------------------------------------------------------

/// Maps intent constructs onto one gateway flavor's primitives. Keeping the
/// mapping behind this trait keeps flavor semantics out of the intent model.
pub trait FlavorAdapter {
    fn flavor(&self) -> GatewayFlavor;
    fn limiter(&self, governance: &GovernanceIntent) -> Result<LimiterParams, TranslateError>;
}

struct FlavorAAdapter;
struct FlavorBAdapter;

impl FlavorAdapter for FlavorAAdapter {
    fn flavor(&self) -> GatewayFlavor {
        GatewayFlavor::A
    }

    fn limiter(&self, governance: &GovernanceIntent) -> Result<LimiterParams, TranslateError> {
        let rate = quantized_rate(governance, self.flavor())?;
        Ok(LimiterParams::FlavorA {
            rate,
            capacity: governance.burst_capacity,
        })
    }
}

impl FlavorAdapter for FlavorBAdapter {
    fn flavor(&self) -> GatewayFlavor {
        GatewayFlavor::B
    }

    fn limiter(&self, governance: &GovernanceIntent) -> Result<LimiterParams, TranslateError> {
        let rate = quantized_rate(governance, self.flavor())?;
        Ok(LimiterParams::FlavorB {
            // Exact: integer milli-rps times sixty.
            rate: rate.to_rpm(),
            burst: governance.burst_capacity,
        })
    }
}

fn quantized_rate(
    governance: &GovernanceIntent,
    flavor: GatewayFlavor,
) -> Result<MilliRps, TranslateError> {
    MilliRps::from_rps(governance.rate_limit_rps).ok_or_else(|| {
        TranslateError::UnsupportedConstruct {
            flavor,
            construct: "governance.rate_limit_rps below limiter resolution".into(),
        }
    })
}

pub fn adapter_for(flavor: GatewayFlavor) -> &'static dyn FlavorAdapter {
    match flavor {
        GatewayFlavor::A => &FlavorAAdapter,
        GatewayFlavor::B => &FlavorBAdapter,
    }
}

/// Translate a validated intent into a flavored configuration: one
/// [`RouteRule`] per scope prefix, routes in canonical `(prefix, tenant)`
/// order, hash populated.
pub fn translate(intent: &IntentSpec, flavor: GatewayFlavor) -> Result<GatewayConfig, TranslateError> {
    let adapter = adapter_for(flavor);
    let limiter = adapter.limiter(&intent.governance)?;
    let mut principals = intent.security.allowed_principals.clone();
    principals.sort();
    principals.dedup();

    let mut routes: Vec<RouteRule> = intent
        .scope
        .route_prefixes
        .iter()
        .map(|prefix| RouteRule {
            prefix: prefix.clone(),
            tenant: intent.scope.tenant.clone(),
            authn_mode: intent.security.authn_mode,
            allowed_principals: principals.clone(),
            limiter,
            p95_target_ms: intent.performance.p95_latency_target_ms,
        })
        .collect();
    routes.sort_by(|a, b| (&a.prefix, &a.tenant).cmp(&(&b.prefix, &b.tenant)));

    let config_hash = flavored_hash(flavor, &routes);
    Ok(GatewayConfig {
        flavor,
        version: 0,
        source_intent_id: intent.id.clone(),
        routes,
        config_hash,
    })
}

fn flavored_hash(flavor: GatewayFlavor, routes: &[RouteRule]) -> ConfigHash {
    let mut text = format!("flavor={flavor}\n");
    for r in routes {
        let limiter = match r.limiter {
            LimiterParams::FlavorA { rate, capacity } => {
                format!("rps:{}:{capacity}", rate.0)
            }
            LimiterParams::FlavorB { rate, burst } => format!("rpm:{}:{burst}", rate.0),
        };
        text.push_str(&format!(
            "rule prefix={} tenant={} authn={} principals={} limiter={} p95_ms={}\n",
            r.prefix,
            r.tenant,
            r.authn_mode,
            r.allowed_principals.join(","),
            limiter,
            r.p95_target_ms,
        ));
    }
    ConfigHash::of_bytes(text.as_bytes())
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

/// One rule in flavor-free normal form. Carries its originating intent id so
/// the runtime can find the owning adaptation bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalRule {
    pub prefix: String,
    pub tenant: String,
    pub authn_mode: AuthnMode,
    pub allowed_principals: Vec<String>,
    pub limiter: CanonicalLimiter,
    pub p95_target_ms: f64,
    pub source_intent_id: String,
}

impl CanonicalRule {
    /// Stable reference used in findings and audit lines.
    pub fn subject(&self) -> String {
        format!("{}:{}", self.tenant, self.prefix)
    }

    fn rendering(&self) -> String {
        format!(
            "rule prefix={} tenant={} authn={} principals={} rate_millirps={} capacity={} p95_ms={} intent={}\n",
            self.prefix,
            self.tenant,
            self.authn_mode,
            self.allowed_principals.join(","),
            self.limiter.rate.0,
            self.limiter.capacity,
            self.p95_target_ms,
            self.source_intent_id,
        )
    }
}

/// Flavor-free normal form of one or more translated configurations: all
/// rates in requests/second, rules sorted by `(prefix, tenant)`, principals
/// sorted and deduplicated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CanonicalConfig {
    pub rules: Vec<CanonicalRule>,
}

impl CanonicalConfig {
    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// The canonical byte rendering the digest is computed over.
    pub fn rendering(&self) -> String {
        self.rules.iter().map(CanonicalRule::rendering).collect()
    }

    /// Content digest of the canonical rendering. Equal canonical configs
    /// have equal digests; this is the identity drift detection compares.
    pub fn digest(&self) -> ConfigHash {
        ConfigHash::of_bytes(self.rendering().as_bytes())
    }

    /// Re-apply the normal-form ordering rules. Identity on anything
    /// produced by [`canonicalize`]; used by callers that edit rules in
    /// place (drift injection, adaptation).
    pub fn renormalize(mut self) -> CanonicalConfig {
        for rule in &mut self.rules {
            rule.allowed_principals.sort();
            rule.allowed_principals.dedup();
        }
        self.rules
            .sort_by(|a, b| (&a.prefix, &a.tenant).cmp(&(&b.prefix, &b.tenant)));
        self
    }

    /// Merge per-intent canonical configs into one desired state, keyed by
    /// intent id. Later entries replace earlier rules from the same intent.
    pub fn merge<'a>(parts: impl IntoIterator<Item = &'a CanonicalConfig>) -> CanonicalConfig {
        let mut rules: Vec<CanonicalRule> = Vec::new();
        for part in parts {
            rules.retain(|r| {
                !part
                    .rules
                    .iter()
                    .any(|n| n.source_intent_id == r.source_intent_id)
            });
            rules.extend(part.rules.iter().cloned());
        }
        CanonicalConfig { rules }.renormalize()
    }

    /// Drop all rules belonging to `intent_id`.
    pub fn without_intent(&self, intent_id: &str) -> CanonicalConfig {
        CanonicalConfig {
            rules: self
                .rules
                .iter()
                .filter(|r| r.source_intent_id != intent_id)
                .cloned()
                .collect(),
        }
    }
}

/// Reduce a flavored configuration to the canonical normal form.
pub fn canonicalize(config: &GatewayConfig) -> CanonicalConfig {
    let rules = config
        .routes
        .iter()
        .map(|r| CanonicalRule {
            prefix: r.prefix.clone(),
            tenant: r.tenant.clone(),
            authn_mode: r.authn_mode,
            allowed_principals: r.allowed_principals.clone(),
            limiter: r.limiter.canonicalize(),
            p95_target_ms: r.p95_target_ms,
            source_intent_id: config.source_intent_id.clone(),
        })
        .collect();
    CanonicalConfig { rules }.renormalize()
}

// ---------------------------------------------------------------------------
// Config document I/O
// ---------------------------------------------------------------------------

/// Emit a flavored configuration as a document in the shared format.
pub fn serialize_config(config: &GatewayConfig) -> String {
    let mut out = String::new();
    out.push_str(&format!("flavor = {}\n", config.flavor));
    out.push_str(&format!("version = {}\n", config.version));
    out.push_str(&format!("source_intent_id = {}\n", config.source_intent_id));
    out.push_str(&format!("config_hash = {}\n", config.config_hash));
    for (i, r) in config.routes.iter().enumerate() {
        out.push_str(&format!("rule.{i}.prefix = {}\n", r.prefix));
        out.push_str(&format!("rule.{i}.tenant = {}\n", r.tenant));
        out.push_str(&format!("rule.{i}.authn_mode = {}\n", r.authn_mode));
        out.push_str(&format!(
            "rule.{i}.allowed_principals = {}\n",
            r.allowed_principals.join(", ")
        ));
        match r.limiter {
            LimiterParams::FlavorA { rate, capacity } => {
                out.push_str(&format!("rule.{i}.rate_rps = {rate}\n"));
                out.push_str(&format!("rule.{i}.capacity = {capacity}\n"));
            }
            LimiterParams::FlavorB { rate, burst } => {
                out.push_str(&format!("rule.{i}.rate_rpm = {rate}\n"));
                out.push_str(&format!("rule.{i}.burst = {burst}\n"));
            }
        }
        out.push_str(&format!("rule.{i}.p95_target_ms = {}\n", r.p95_target_ms));
    }
    out
}

/// Parse a flavored configuration document. The embedded hash, when present,
/// must match the recomputed one; a mismatch means the document was edited
/// after it was emitted.
pub fn parse_config(document: &str) -> Result<GatewayConfig, ParseError> {
    let mut f = Fields::parse_auto(document)?;

    let flavor_raw = f.require("flavor")?;
    let flavor = GatewayFlavor::parse(&flavor_raw)
        .ok_or_else(|| ParseError::schema("flavor", format!("expected A|B, got {flavor_raw:?}")))?;
    let version = f.take_u64("version")?.unwrap_or(0);
    let source_intent_id = f.require("source_intent_id")?;
    if !ident_ok(&source_intent_id) {
        return Err(ParseError::schema("source_intent_id", "invalid identifier"));
    }
    let stated_hash = match f.take("config_hash") {
        None => None,
        Some(raw) => Some(
            ConfigHash::from_hex(&raw)
                .ok_or_else(|| ParseError::schema("config_hash", "not a 64-hex-char digest"))?,
        ),
    };

    let mut routes = Vec::new();
    for index in 0.. {
        let base = format!("rule.{index}");
        let Some(prefix) = f.take(&format!("{base}.prefix")) else {
            break;
        };
        if !prefix_ok(&prefix) {
            return Err(ParseError::schema(
                format!("{base}.prefix"),
                format!("invalid route prefix {prefix:?}"),
            ));
        }
        let tenant = f.require(&format!("{base}.tenant"))?;
        if !ident_ok(&tenant) {
            return Err(ParseError::schema(format!("{base}.tenant"), "invalid identifier"));
        }
        let authn_raw = f.require(&format!("{base}.authn_mode"))?;
        let authn_mode = AuthnMode::parse(&authn_raw).ok_or_else(|| {
            ParseError::schema(
                format!("{base}.authn_mode"),
                format!("expected none|api_key|token, got {authn_raw:?}"),
            )
        })?;
        let allowed_principals = f
            .take_list(&format!("{base}.allowed_principals"))
            .unwrap_or_default();
        let limiter = match flavor {
            GatewayFlavor::A => {
                let rate_raw = f.require(&format!("{base}.rate_rps"))?;
                let rate = parse_milli(&rate_raw).filter(|m| *m > 0).ok_or_else(|| {
                    ParseError::schema(
                        format!("{base}.rate_rps"),
                        "expected a positive decimal with at most 3 fraction digits",
                    )
                })?;
                let capacity = f.require_u64(&format!("{base}.capacity"))?;
                check_capacity(capacity, &format!("{base}.capacity"))?;
                LimiterParams::FlavorA {
                    rate: MilliRps(rate),
                    capacity: capacity as u32,
                }
            }
            GatewayFlavor::B => {
                let rate_raw = f.require(&format!("{base}.rate_rpm"))?;
                let rate = parse_milli(&rate_raw).filter(|m| *m > 0).ok_or_else(|| {
                    ParseError::schema(
                        format!("{base}.rate_rpm"),
                        "expected a positive decimal with at most 3 fraction digits",
                    )
                })?;
                let burst = f.require_u64(&format!("{base}.burst"))?;
                check_capacity(burst, &format!("{base}.burst"))?;
                LimiterParams::FlavorB {
                    rate: MilliRpm(rate),
                    burst: burst as u32,
                }
            }
        };
        let p95_target_ms = f.require_f64(&format!("{base}.p95_target_ms"))?;
        routes.push(RouteRule {
            prefix,
            tenant,
            authn_mode,
            allowed_principals,
            limiter,
            p95_target_ms,
        });
    }
    f.finish()?;

    let config_hash = flavored_hash(flavor, &routes);
    if let Some(stated) = stated_hash {
        if stated != config_hash {
            return Err(ParseError::schema(
                "config_hash",
                "stated hash does not match document contents",
            ));
        }
    }

    Ok(GatewayConfig {
        flavor,
        version,
        source_intent_id,
        routes,
        config_hash,
    })
}

fn check_capacity(value: u64, path: &str) -> Result<(), ParseError> {
    if value < 1 || value > u32::MAX as u64 {
        Err(ParseError::schema(path, "must be a positive integer"))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intent::parse_intent;

    fn intent() -> IntentSpec {
        parse_intent(
            "id = checkout\nscope.tenant = blue\nscope.route_prefixes = /api/orders, /api/cart, /api/pay\n\
             security.authn_mode = token\nsecurity.allowed_principals = svc-b, svc-a\n\
             governance.rate_limit_rps = 100\ngovernance.burst_capacity = 20\n\
             performance.p95_latency_target_ms = 50\n",
        )
        .unwrap()
    }

    #[test]
    fn flavor_a_is_identity_mapping() {
        let cfg = translate(&intent(), GatewayFlavor::A).unwrap();
        assert_eq!(cfg.routes.len(), 3);
        assert_eq!(
            cfg.routes[0].limiter,
            LimiterParams::FlavorA {
                rate: MilliRps(100_000),
                capacity: 20
            }
        );
    }

    #[test]
    fn flavor_b_is_times_sixty() {
        let cfg = translate(&intent(), GatewayFlavor::B).unwrap();
        assert_eq!(
            cfg.routes[0].limiter,
            LimiterParams::FlavorB {
                rate: MilliRpm(6_000_000),
                burst: 20
            }
        );
    }

    #[test]
    fn one_rule_per_prefix_in_canonical_order() {
        let cfg = translate(&intent(), GatewayFlavor::A).unwrap();
        let prefixes: Vec<&str> = cfg.routes.iter().map(|r| r.prefix.as_str()).collect();
        assert_eq!(prefixes, vec!["/api/cart", "/api/orders", "/api/pay"]);
    }

    #[test]
    fn flavors_canonicalize_identically_with_equal_digests() {
        let a = canonicalize(&translate(&intent(), GatewayFlavor::A).unwrap());
        let b = canonicalize(&translate(&intent(), GatewayFlavor::B).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.digest(), b.digest());
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let c = canonicalize(&translate(&intent(), GatewayFlavor::B).unwrap());
        assert_eq!(c.clone().renormalize(), c);
    }

    #[test]
    fn empty_routes_give_empty_canonical() {
        let cfg = GatewayConfig {
            flavor: GatewayFlavor::A,
            version: 0,
            source_intent_id: "x".into(),
            routes: vec![],
            config_hash: flavored_hash(GatewayFlavor::A, &[]),
        };
        assert!(canonicalize(&cfg).is_empty());
    }

    #[test]
    fn distinct_rates_give_distinct_canonical_configs() {
        let mut i2 = intent();
        i2.governance.rate_limit_rps = 101.0;
        i2.adaptation.rate_ceiling_rps = 101.0;
        let a = canonicalize(&translate(&intent(), GatewayFlavor::A).unwrap());
        let b = canonicalize(&translate(&i2, GatewayFlavor::A).unwrap());
        assert_ne!(a, b);
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn config_document_round_trip() {
        for flavor in [GatewayFlavor::A, GatewayFlavor::B] {
            let cfg = translate(&intent(), flavor).unwrap();
            let parsed = parse_config(&serialize_config(&cfg)).unwrap();
            assert_eq!(parsed, cfg);
        }
    }

    #[test]
    fn tampered_document_rejected() {
        let cfg = translate(&intent(), GatewayFlavor::A).unwrap();
        let doc = serialize_config(&cfg).replace("rate_rps = 100", "rate_rps = 200");
        let err = parse_config(&doc).unwrap_err();
        assert!(matches!(err, ParseError::Schema { ref path, .. } if path == "config_hash"));
    }

    #[test]
    fn merge_replaces_rules_from_same_intent() {
        let c1 = canonicalize(&translate(&intent(), GatewayFlavor::A).unwrap());
        let mut updated = intent();
        updated.governance.rate_limit_rps = 80.0;
        let c2 = canonicalize(&translate(&updated, GatewayFlavor::A).unwrap());
        let merged = CanonicalConfig::merge([&c1, &c2]);
        assert_eq!(merged.rules.len(), 3);
        assert!(merged
            .rules
            .iter()
            .all(|r| r.limiter.rate == MilliRps(80_000)));
    }
}
