//! The declarative intent language.
//!
//! An intent states what a route family must guarantee — authentication,
//! rate and quota governance, latency and error objectives, and the bounds
//! within which the runtime may adapt — without saying anything about the
//! gateway technology that will enforce it.
//!
//! Intents are written in the shared document format (see [`crate::kv`]);
//! [`parse_intent`] accepts both the line-oriented and JSON renderings and
//! [`serialize_intent`] emits the canonical line-oriented form, such that
//! `parse_intent(serialize_intent(i)) == i` for every valid intent.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kv::{ident_ok, prefix_ok, Fields, ParseError};

/// Minimum expressible limiter rate; see [`crate::units`].
pub const MIN_RATE_RPS: f64 = 0.001;

/// Authentication strength, totally ordered `None < ApiKey < Token`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum AuthnMode {
    None,
    ApiKey,
    Token,
}

impl AuthnMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AuthnMode::None => "none",
            AuthnMode::ApiKey => "api_key",
            AuthnMode::Token => "token",
        }
    }

    pub fn parse(s: &str) -> Option<AuthnMode> {
        match s {
            "none" => Some(AuthnMode::None),
            "api_key" => Some(AuthnMode::ApiKey),
            "token" => Some(AuthnMode::Token),
            _ => None,
        }
    }
}

impl fmt::Display for AuthnMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which clusters an intent targets. The literal `all` is reserved in the
/// file format and cannot be used as a cluster name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClusterSelector {
    All,
    Named(Vec<String>),
}

impl ClusterSelector {
    pub fn matches(&self, cluster: &str) -> bool {
        match self {
            ClusterSelector::All => true,
            ClusterSelector::Named(names) => names.iter().any(|n| n == cluster),
        }
    }
}

/// Where an intent applies: route prefixes, clusters, and the owning tenant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scope {
    pub route_prefixes: Vec<String>,
    pub clusters: ClusterSelector,
    pub tenant: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecurityIntent {
    pub authn_mode: AuthnMode,
    /// Empty means any authenticated principal is allowed.
    pub allowed_principals: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GovernanceIntent {
    pub rate_limit_rps: f64,
    pub burst_capacity: u32,
    pub quota_per_window: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceIntent {
    pub p95_latency_target_ms: f64,
    pub max_error_rate: f64,
}

/// The envelope within which the runtime feedback loop may move the rate
/// limit. Adaptation never leaves `[rate_floor_rps, rate_ceiling_rps]` and
/// never moves more than `max_step_fraction` of the current value per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationBounds {
    pub rate_floor_rps: f64,
    pub rate_ceiling_rps: f64,
    pub max_step_fraction: f64,
    pub consecutive_windows_trigger: u32,
}

/// A complete declarative intent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntentSpec {
    pub id: String,
    pub scope: Scope,
    pub security: SecurityIntent,
    pub governance: GovernanceIntent,
    pub performance: PerformanceIntent,
    pub adaptation: AdaptationBounds,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse an intent document (line-oriented or JSON rendering).
///
/// Required fields: `id`, `security.authn_mode`, `governance.rate_limit_rps`,
/// `governance.burst_capacity`, `performance.p95_latency_target_ms`.
/// Everything else has a documented default. Unknown fields are rejected.
pub fn parse_intent(document: &str) -> Result<IntentSpec, ParseError> {
    let mut f = Fields::parse_auto(document)?;

    let id = f.require("id")?;
    if !ident_ok(&id) {
        return Err(ParseError::schema("id", "must be a non-empty identifier"));
    }

    let tenant = f.take("scope.tenant").unwrap_or_else(|| "default".into());
    if !ident_ok(&tenant) {
        return Err(ParseError::schema("scope.tenant", "invalid identifier"));
    }
    let clusters = match f.take("scope.clusters") {
        None => ClusterSelector::All,
        Some(raw) if raw.trim() == "all" => ClusterSelector::All,
        Some(raw) => {
            let names = crate::kv::split_list(&raw);
            for name in &names {
                if !ident_ok(name) || name == "all" {
                    return Err(ParseError::schema(
                        "scope.clusters",
                        format!("invalid cluster name {name:?}"),
                    ));
                }
            }
            if names.is_empty() {
                return Err(ParseError::schema("scope.clusters", "empty cluster list"));
            }
            ClusterSelector::Named(names)
        }
    };
    let route_prefixes = f
        .take_list("scope.route_prefixes")
        .unwrap_or_else(|| vec!["/".to_string()]);
    check_prefixes(&route_prefixes).map_err(|msg| ParseError::schema("scope.route_prefixes", msg))?;

    let authn_raw = f.require("security.authn_mode")?;
    let authn_mode = AuthnMode::parse(&authn_raw).ok_or_else(|| {
        ParseError::schema(
            "security.authn_mode",
            format!("expected none|api_key|token, got {authn_raw:?}"),
        )
    })?;
    let allowed_principals = f
        .take_list("security.allowed_principals")
        .unwrap_or_default();
    for p in &allowed_principals {
        if !ident_ok(p) {
            return Err(ParseError::schema(
                "security.allowed_principals",
                format!("invalid principal {p:?}"),
            ));
        }
    }
    if authn_mode == AuthnMode::None && !allowed_principals.is_empty() {
        return Err(ParseError::schema(
            "security.allowed_principals",
            "must be empty when security.authn_mode is none",
        ));
    }

    let rate_limit_rps = f.require_f64("governance.rate_limit_rps")?;
    if !(rate_limit_rps >= MIN_RATE_RPS) {
        return Err(ParseError::schema(
            "governance.rate_limit_rps",
            format!("must be at least {MIN_RATE_RPS} requests/second"),
        ));
    }
    let burst_capacity = f.require_u64("governance.burst_capacity")?;
    if burst_capacity < 1 || burst_capacity > u32::MAX as u64 {
        return Err(ParseError::schema(
            "governance.burst_capacity",
            "must be a positive integer",
        ));
    }
    let quota_per_window = f.take_u64("governance.quota_per_window")?;
    if quota_per_window == Some(0) {
        return Err(ParseError::schema(
            "governance.quota_per_window",
            "must be positive when present",
        ));
    }

    let p95_latency_target_ms = f.require_f64("performance.p95_latency_target_ms")?;
    if !(p95_latency_target_ms > 0.0) {
        return Err(ParseError::schema(
            "performance.p95_latency_target_ms",
            "must be positive",
        ));
    }
    let max_error_rate = f.take_f64("performance.max_error_rate")?.unwrap_or(0.05);
    if !(0.0..=1.0).contains(&max_error_rate) {
        return Err(ParseError::schema(
            "performance.max_error_rate",
            "must lie in [0, 1]",
        ));
    }

    let rate_floor_rps = f
        .take_f64("adaptation.rate_floor_rps")?
        .unwrap_or(rate_limit_rps / 2.0);
    let rate_ceiling_rps = f
        .take_f64("adaptation.rate_ceiling_rps")?
        .unwrap_or(rate_limit_rps);
    let max_step_fraction = f.take_f64("adaptation.max_step_fraction")?.unwrap_or(0.1);
    let consecutive_windows_trigger = f
        .take_u64("adaptation.consecutive_windows_trigger")?
        .unwrap_or(2);
    if !(rate_floor_rps >= MIN_RATE_RPS) {
        return Err(ParseError::schema(
            "adaptation.rate_floor_rps",
            format!("must be at least {MIN_RATE_RPS} requests/second"),
        ));
    }
    if !(max_step_fraction > 0.0 && max_step_fraction <= 1.0) {
        return Err(ParseError::schema(
            "adaptation.max_step_fraction",
            "must lie in (0, 1]",
        ));
    }
    if consecutive_windows_trigger < 1 || consecutive_windows_trigger > u32::MAX as u64 {
        return Err(ParseError::schema(
            "adaptation.consecutive_windows_trigger",
            "must be a positive integer",
        ));
    }
    if !(rate_floor_rps <= rate_limit_rps && rate_limit_rps <= rate_ceiling_rps) {
        return Err(ParseError::schema(
            "adaptation.rate_floor_rps",
            "bounds must satisfy floor <= governance.rate_limit_rps <= ceiling",
        ));
    }

    f.finish()?;

    Ok(IntentSpec {
        id,
        scope: Scope {
            route_prefixes,
            clusters,
            tenant,
        },
        security: SecurityIntent {
            authn_mode,
            allowed_principals,
        },
        governance: GovernanceIntent {
            rate_limit_rps,
            burst_capacity: burst_capacity as u32,
            quota_per_window,
        },
        performance: PerformanceIntent {
            p95_latency_target_ms,
            max_error_rate,
        },
        adaptation: AdaptationBounds {
            rate_floor_rps,
            rate_ceiling_rps,
            max_step_fraction,
            consecutive_windows_trigger: consecutive_windows_trigger as u32,
        },
    })
}

fn check_prefixes(prefixes: &[String]) -> Result<(), String> {
    if prefixes.is_empty() {
        return Err("must list at least one route prefix".into());
    }
    for p in prefixes {
        if !prefix_ok(p) {
            return Err(format!("invalid route prefix {p:?}"));
        }
    }
    for (i, a) in prefixes.iter().enumerate() {
        if prefixes[..i].contains(a) {
            return Err(format!("duplicate route prefix {a:?}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

/// Emit the canonical line-oriented rendering of an intent.
pub fn serialize_intent(intent: &IntentSpec) -> String {
    let mut out = String::new();
    let mut line = |key: &str, value: String| {
        out.push_str(key);
        out.push_str(" = ");
        out.push_str(&value);
        out.push('\n');
    };
    line("id", intent.id.clone());
    line("scope.tenant", intent.scope.tenant.clone());
    line(
        "scope.clusters",
        match &intent.scope.clusters {
            ClusterSelector::All => "all".to_string(),
            ClusterSelector::Named(names) => names.join(", "),
        },
    );
    line(
        "scope.route_prefixes",
        intent.scope.route_prefixes.join(", "),
    );
    line(
        "security.authn_mode",
        intent.security.authn_mode.to_string(),
    );
    line(
        "security.allowed_principals",
        intent.security.allowed_principals.join(", "),
    );
    line(
        "governance.rate_limit_rps",
        intent.governance.rate_limit_rps.to_string(),
    );
    line(
        "governance.burst_capacity",
        intent.governance.burst_capacity.to_string(),
    );
    if let Some(q) = intent.governance.quota_per_window {
        line("governance.quota_per_window", q.to_string());
    }
    line(
        "performance.p95_latency_target_ms",
        intent.performance.p95_latency_target_ms.to_string(),
    );
    line(
        "performance.max_error_rate",
        intent.performance.max_error_rate.to_string(),
    );
    line(
        "adaptation.rate_floor_rps",
        intent.adaptation.rate_floor_rps.to_string(),
    );
    line(
        "adaptation.rate_ceiling_rps",
        intent.adaptation.rate_ceiling_rps.to_string(),
    );
    line(
        "adaptation.max_step_fraction",
        intent.adaptation.max_step_fraction.to_string(),
    );
    line(
        "adaptation.consecutive_windows_trigger",
        intent.adaptation.consecutive_windows_trigger.to_string(),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
id = checkout
security.authn_mode = token
governance.rate_limit_rps = 100
governance.burst_capacity = 20
performance.p95_latency_target_ms = 50
";

    #[test]
    fn minimal_document_gets_defaults() {
        let intent = parse_intent(MINIMAL).unwrap();
        assert_eq!(intent.id, "checkout");
        assert_eq!(intent.security.authn_mode, AuthnMode::Token);
        assert_eq!(intent.governance.rate_limit_rps, 100.0);
        assert_eq!(intent.governance.burst_capacity, 20);
        assert_eq!(intent.performance.p95_latency_target_ms, 50.0);
        // defaults
        assert_eq!(intent.scope.tenant, "default");
        assert_eq!(intent.scope.clusters, ClusterSelector::All);
        assert_eq!(intent.scope.route_prefixes, vec!["/".to_string()]);
        assert!(intent.security.allowed_principals.is_empty());
        assert_eq!(intent.governance.quota_per_window, None);
        assert_eq!(intent.performance.max_error_rate, 0.05);
        assert_eq!(intent.adaptation.rate_floor_rps, 50.0);
        assert_eq!(intent.adaptation.rate_ceiling_rps, 100.0);
        assert_eq!(intent.adaptation.max_step_fraction, 0.1);
        assert_eq!(intent.adaptation.consecutive_windows_trigger, 2);
    }

    #[test]
    fn principals_with_authn_none_rejected() {
        let doc = format!(
            "{}security.allowed_principals = a\n",
            MINIMAL.replace("token", "none")
        );
        let err = parse_intent(&doc).unwrap_err();
        assert!(
            matches!(err, ParseError::Schema { ref path, .. } if path == "security.allowed_principals"),
            "{err}"
        );
    }

    #[test]
    fn missing_rate_limit_names_field() {
        let doc = MINIMAL.replace("governance.rate_limit_rps = 100\n", "");
        let err = parse_intent(&doc).unwrap_err();
        assert!(
            matches!(err, ParseError::Schema { ref path, .. } if path == "governance.rate_limit_rps"),
            "{err}"
        );
    }

    #[test]
    fn unknown_field_rejected() {
        let doc = format!("{MINIMAL}governance.retries = 3\n");
        let err = parse_intent(&doc).unwrap_err();
        assert!(
            matches!(err, ParseError::Schema { ref path, .. } if path == "governance.retries"),
            "{err}"
        );
    }

    #[test]
    fn json_rendering_is_equivalent() {
        let json = r#"{
            "id": "checkout",
            "security": {"authn_mode": "token"},
            "governance": {"rate_limit_rps": 100, "burst_capacity": 20},
            "performance": {"p95_latency_target_ms": 50}
        }"#;
        assert_eq!(parse_intent(json).unwrap(), parse_intent(MINIMAL).unwrap());
    }

    #[test]
    fn serialize_round_trip() {
        let doc = format!(
            "{MINIMAL}scope.tenant = blue\nscope.route_prefixes = /api/orders, /api/cart\n\
             security.allowed_principals = svc-a, svc-b\ngovernance.quota_per_window = 10000\n"
        );
        let intent = parse_intent(&doc).unwrap();
        let round = parse_intent(&serialize_intent(&intent)).unwrap();
        assert_eq!(intent, round);
    }

    #[test]
    fn bounds_must_bracket_rate() {
        let doc = format!("{MINIMAL}adaptation.rate_floor_rps = 120\n");
        let err = parse_intent(&doc).unwrap_err();
        assert!(matches!(err, ParseError::Schema { ref path, .. } if path.starts_with("adaptation")));
    }

    #[test]
    fn duplicate_prefix_rejected() {
        let doc = format!("{MINIMAL}scope.route_prefixes = /a, /a\n");
        assert!(parse_intent(&doc).is_err());
    }

    #[test]
    fn rate_below_resolution_rejected() {
        let doc = MINIMAL.replace("rate_limit_rps = 100", "rate_limit_rps = 0.0004");
        let err = parse_intent(&doc).unwrap_err();
        assert!(
            matches!(err, ParseError::Schema { ref path, .. } if path == "governance.rate_limit_rps")
        );
    }
}
