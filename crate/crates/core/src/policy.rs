//! Organization-wide policy constraints and intent validation against them.
//!
//! A [`PolicySet`] is the non-negotiable envelope every intent must fit:
//! a global rate ceiling, a minimum authentication strength, and per-tenant
//! isolation boundaries (reserved route-prefix regions no other tenant may
//! target). [`validate_intent`] checks a parsed intent against the policy
//! set and reports violations as data; an intent is accepted iff the report
//! is empty.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::intent::{AuthnMode, IntentSpec, MIN_RATE_RPS};
use crate::kv::{ident_ok, paths_overlap, prefix_ok, Fields, ParseError};

/// Organization-wide ceilings, authentication minimums, and tenant isolation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySet {
    pub global_rate_ceiling_rps: f64,
    pub min_authn_mode: AuthnMode,
    /// tenant -> reserved route prefixes. Reserved regions of distinct
    /// tenants never overlap (enforced on construction).
    pub isolation_boundaries: BTreeMap<String, Vec<String>>,
}

impl PolicySet {
    /// A permissive policy set for tests and defaults.
    pub fn permissive() -> PolicySet {
        PolicySet {
            global_rate_ceiling_rps: 1.0e9,
            min_authn_mode: AuthnMode::None,
            isolation_boundaries: BTreeMap::new(),
        }
    }
}

/// Parse a policy document. Fields:
/// `global_rate_ceiling_rps`, `min_authn_mode`, and one
/// `isolation.<tenant> = /prefix, ...` line per tenant.
pub fn parse_policy(document: &str) -> Result<PolicySet, ParseError> {
    let mut f = Fields::parse_auto(document)?;

    let global_rate_ceiling_rps = f.require_f64("global_rate_ceiling_rps")?;
    if !(global_rate_ceiling_rps > 0.0) {
        return Err(ParseError::schema(
            "global_rate_ceiling_rps",
            "must be positive",
        ));
    }
    let authn_raw = f
        .take("min_authn_mode")
        .unwrap_or_else(|| "none".to_string());
    let min_authn_mode = AuthnMode::parse(&authn_raw).ok_or_else(|| {
        ParseError::schema(
            "min_authn_mode",
            format!("expected none|api_key|token, got {authn_raw:?}"),
        )
    })?;

    let mut isolation_boundaries = BTreeMap::new();
    for key in f.keys_under("isolation") {
        let tenant = key["isolation.".len()..].to_string();
        if !ident_ok(&tenant) {
            return Err(ParseError::schema(&key, "invalid tenant name"));
        }
        let prefixes = f.take_list(&key).unwrap_or_default();
        if prefixes.is_empty() {
            return Err(ParseError::schema(&key, "empty boundary list"));
        }
        for p in &prefixes {
            if !prefix_ok(p) {
                return Err(ParseError::schema(&key, format!("invalid prefix {p:?}")));
            }
        }
        isolation_boundaries.insert(tenant, prefixes);
    }
    f.finish()?;

    // Reserved regions of distinct tenants must be disjoint, otherwise the
    // isolation check itself would be ambiguous.
    let flat: Vec<(&String, &String)> = isolation_boundaries
        .iter()
        .flat_map(|(t, ps)| ps.iter().map(move |p| (t, p)))
        .collect();
    for (i, (ta, pa)) in flat.iter().enumerate() {
        for (tb, pb) in &flat[..i] {
            if ta != tb && paths_overlap(pa, pb) {
                return Err(ParseError::schema(
                    format!("isolation.{ta}"),
                    format!("boundary {pa:?} overlaps tenant {tb}'s boundary {pb:?}"),
                ));
            }
        }
    }

    Ok(PolicySet {
        global_rate_ceiling_rps,
        min_authn_mode,
        isolation_boundaries,
    })
}

/// Emit the canonical line-oriented rendering of a policy set.
pub fn serialize_policy(policy: &PolicySet) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "global_rate_ceiling_rps = {}\n",
        policy.global_rate_ceiling_rps
    ));
    out.push_str(&format!("min_authn_mode = {}\n", policy.min_authn_mode));
    for (tenant, prefixes) in &policy.isolation_boundaries {
        out.push_str(&format!("isolation.{tenant} = {}\n", prefixes.join(", ")));
    }
    out
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// The intent value itself is malformed (only reachable for intents
    /// built programmatically; the parser enforces these).
    Structural,
    RateCeilingExceeded,
    AuthnBelowMinimum,
    IsolationBoundary,
    AdaptationBoundsInconsistent,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Structural => "structural",
            ViolationKind::RateCeilingExceeded => "rate ceiling exceeded",
            ViolationKind::AuthnBelowMinimum => "authn below minimum",
            ViolationKind::IsolationBoundary => "isolation boundary",
            ViolationKind::AdaptationBoundsInconsistent => "adaptation bounds inconsistent",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub detail: String,
}

/// Outcome of validating one intent against a policy set. Violations are
/// data, not errors, and are reported in a deterministic order regardless
/// of the order the checks ran in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub intent_id: String,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn accepted(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.accepted() {
            writeln!(f, "intent {}: ACCEPTED", self.intent_id)
        } else {
            writeln!(
                f,
                "intent {}: REJECTED ({} violation{})",
                self.intent_id,
                self.violations.len(),
                if self.violations.len() == 1 { "" } else { "s" }
            )?;
            for v in &self.violations {
                writeln!(f, "  [{}] {}", v.kind, v.detail)?;
            }
            Ok(())
        }
    }
}

/// Check an intent against the policy set.
///
/// Checks: the configured rate against the global ceiling, authentication
/// strength against the minimum, scope prefixes against other tenants'
/// isolation boundaries, adaptation bounds against the governance rate, and
/// structural well-formedness for intents that did not come through the
/// parser. Relaxing the policy set never adds violations.
pub fn validate_intent(intent: &IntentSpec, policy: &PolicySet) -> ValidationReport {
    let mut violations = BTreeSet::new();

    structural_violations(intent, &mut violations);

    if intent.governance.rate_limit_rps > policy.global_rate_ceiling_rps {
        violations.insert(Violation {
            kind: ViolationKind::RateCeilingExceeded,
            detail: format!(
                "rate ceiling exceeded: governance.rate_limit_rps {} > global ceiling {}",
                intent.governance.rate_limit_rps, policy.global_rate_ceiling_rps
            ),
        });
    }

    if intent.security.authn_mode < policy.min_authn_mode {
        violations.insert(Violation {
            kind: ViolationKind::AuthnBelowMinimum,
            detail: format!(
                "security.authn_mode {} is weaker than required minimum {}",
                intent.security.authn_mode, policy.min_authn_mode
            ),
        });
    }

    for prefix in &intent.scope.route_prefixes {
        for (tenant, boundaries) in &policy.isolation_boundaries {
            if tenant == &intent.scope.tenant {
                continue;
            }
            for boundary in boundaries {
                if paths_overlap(prefix, boundary) {
                    violations.insert(Violation {
                        kind: ViolationKind::IsolationBoundary,
                        detail: format!(
                            "isolation boundary: prefix {prefix} enters tenant {tenant}'s reserved region {boundary}"
                        ),
                    });
                }
            }
        }
    }

    let b = &intent.adaptation;
    let g = &intent.governance;
    if !(b.rate_floor_rps <= g.rate_limit_rps && g.rate_limit_rps <= b.rate_ceiling_rps) {
        violations.insert(Violation {
            kind: ViolationKind::AdaptationBoundsInconsistent,
            detail: format!(
                "adaptation bounds [{}, {}] do not bracket governance.rate_limit_rps {}",
                b.rate_floor_rps, b.rate_ceiling_rps, g.rate_limit_rps
            ),
        });
    }

    ValidationReport {
        intent_id: intent.id.clone(),
        violations: violations.into_iter().collect(),
    }
}

fn structural_violations(intent: &IntentSpec, out: &mut BTreeSet<Violation>) {
    let mut push = |detail: String| {
        out.insert(Violation {
            kind: ViolationKind::Structural,
            detail,
        });
    };
    if !ident_ok(&intent.id) {
        push(format!("id {:?} is not a valid identifier", intent.id));
    }
    if !ident_ok(&intent.scope.tenant) {
        push(format!("tenant {:?} is not a valid identifier", intent.scope.tenant));
    }
    if intent.scope.route_prefixes.is_empty() {
        push("scope.route_prefixes is empty".into());
    }
    for (i, p) in intent.scope.route_prefixes.iter().enumerate() {
        if !prefix_ok(p) {
            push(format!("route prefix {p:?} is malformed"));
        }
        if intent.scope.route_prefixes[..i].contains(p) {
            push(format!("route prefix {p:?} is duplicated"));
        }
    }
    if intent.security.authn_mode == AuthnMode::None
        && !intent.security.allowed_principals.is_empty()
    {
        push("allowed_principals must be empty when authn_mode is none".into());
    }
    for p in &intent.security.allowed_principals {
        if !ident_ok(p) {
            push(format!("principal {p:?} is not a valid identifier"));
        }
    }
    if !(intent.governance.rate_limit_rps >= MIN_RATE_RPS) {
        push(format!(
            "governance.rate_limit_rps {} below minimum {MIN_RATE_RPS}",
            intent.governance.rate_limit_rps
        ));
    }
    if intent.governance.burst_capacity < 1 {
        push("governance.burst_capacity must be at least 1".into());
    }
    if intent.governance.quota_per_window == Some(0) {
        push("governance.quota_per_window must be positive when present".into());
    }
    if !(intent.performance.p95_latency_target_ms > 0.0) {
        push("performance.p95_latency_target_ms must be positive".into());
    }
    if !(0.0..=1.0).contains(&intent.performance.max_error_rate) {
        push("performance.max_error_rate must lie in [0, 1]".into());
    }
    if !(intent.adaptation.rate_floor_rps >= MIN_RATE_RPS) {
        push(format!(
            "adaptation.rate_floor_rps {} below minimum {MIN_RATE_RPS}",
            intent.adaptation.rate_floor_rps
        ));
    }
    if !(intent.adaptation.max_step_fraction > 0.0 && intent.adaptation.max_step_fraction <= 1.0) {
        push("adaptation.max_step_fraction must lie in (0, 1]".into());
    }
    if intent.adaptation.consecutive_windows_trigger < 1 {
        push("adaptation.consecutive_windows_trigger must be at least 1".into());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intent::parse_intent;

    fn intent_with(rate: f64, authn: &str, tenant: &str, prefixes: &str) -> IntentSpec {
        parse_intent(&format!(
            "id = t\nscope.tenant = {tenant}\nscope.route_prefixes = {prefixes}\n\
             security.authn_mode = {authn}\ngovernance.rate_limit_rps = {rate}\n\
             governance.burst_capacity = 10\nperformance.p95_latency_target_ms = 50\n"
        ))
        .unwrap()
    }

    fn policy_with_boundaries() -> PolicySet {
        parse_policy(
            "global_rate_ceiling_rps = 500\nmin_authn_mode = api_key\n\
             isolation.red = /red\nisolation.blue = /blue/priv\n",
        )
        .unwrap()
    }

    #[test]
    fn slack_intent_accepted() {
        let report = validate_intent(
            &intent_with(100.0, "token", "blue", "/api"),
            &policy_with_boundaries(),
        );
        assert!(report.accepted(), "{report}");
    }

    #[test]
    fn ceiling_violation_reported() {
        let report = validate_intent(
            &intent_with(600.0, "token", "blue", "/api"),
            &policy_with_boundaries(),
        );
        assert_eq!(report.violations.len(), 1);
        assert_eq!(
            report.violations[0].kind,
            ViolationKind::RateCeilingExceeded
        );
        assert!(report.violations[0].detail.contains("rate ceiling exceeded"));
    }

    #[test]
    fn isolation_boundary_reported() {
        let report = validate_intent(
            &intent_with(100.0, "token", "blue", "/red/orders"),
            &policy_with_boundaries(),
        );
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::IsolationBoundary);
    }

    #[test]
    fn own_boundary_is_fine() {
        let report = validate_intent(
            &intent_with(100.0, "token", "red", "/red/orders"),
            &policy_with_boundaries(),
        );
        assert!(report.accepted(), "{report}");
    }

    #[test]
    fn authn_minimum_enforced() {
        let report = validate_intent(
            &intent_with(100.0, "none", "blue", "/api"),
            &policy_with_boundaries(),
        );
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::AuthnBelowMinimum);
    }

    #[test]
    fn overlapping_tenant_boundaries_rejected_at_parse() {
        let err = parse_policy(
            "global_rate_ceiling_rps = 500\nisolation.red = /shared\nisolation.blue = /shared/x\n",
        )
        .unwrap_err();
        assert!(matches!(err, ParseError::Schema { .. }));
    }

    #[test]
    fn policy_round_trip() {
        let p = policy_with_boundaries();
        assert_eq!(parse_policy(&serialize_policy(&p)).unwrap(), p);
    }
}
