//! Partial-scenario specification language and parameter sampling.
//!
//! A scenario spec declares a map, an ego role, a set of parameter domains
//! and bindings from simulator behavior knobs to parameter names. Sampling a
//! spec under a [`GeneratorDistribution`] yields a [`ScenarioParams`]: one
//! concrete assignment plus a world seed, the unit the curriculum stores,
//! replays and scores.

mod distribution;
mod parse;

pub use distribution::{
    sample_params, sample_params_uniform, uniform_distribution, DistributionError, Factor,
    GeneratorDistribution, EPSILON_FLOOR,
};
pub use parse::{format_spec, parse_spec, Diagnostic, Severity};

use std::collections::BTreeMap;
use std::fmt;

/// Default map when a spec does not declare one.
pub const DEFAULT_MAP_ID: &str = "fourway";
/// Default ego role when a spec does not declare one.
pub const DEFAULT_EGO_ROLE: &str = "route_follower";

/// Smallest seed reserved for hold-out scenarios. Sampled training seeds are
/// always below this, so hold-out parameters can never collide with training
/// buffer content.
pub const HOLDOUT_SEED_BASE: u64 = 1 << 32;

/// The shape of a single scenario parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum DomainKind {
    /// A finite set of symbolic values.
    Categorical(Vec<String>),
    /// Inclusive integer range.
    IntegerRange { lo: i64, hi: i64 },
    /// Closed real interval.
    RealRange { lo: f64, hi: f64 },
    Boolean,
}

/// A named parameter domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamDomain {
    pub name: String,
    pub kind: DomainKind,
}

impl ParamDomain {
    /// Whether `value` lies in the domain.
    pub fn contains(&self, value: &ParamValue) -> bool {
        match (&self.kind, value) {
            (DomainKind::Categorical(vals), ParamValue::Symbol(s)) => vals.iter().any(|v| v == s),
            (DomainKind::IntegerRange { lo, hi }, ParamValue::Int(i)) => lo <= i && i <= hi,
            (DomainKind::RealRange { lo, hi }, ParamValue::Real(x)) => {
                x.is_finite() && *lo <= *x && *x <= *hi
            }
            (DomainKind::Boolean, ParamValue::Bool(_)) => true,
            _ => false,
        }
    }
}

/// One `bind <knob> = <param>` declaration tying a simulator behavior knob to
/// a declared parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub knob: String,
    pub param: String,
}

/// A parsed, validated partial-scenario specification.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub map_id: String,
    pub ego_role: String,
    /// Declaration order is preserved; names are unique.
    pub params: Vec<ParamDomain>,
    pub bindings: Vec<Binding>,
}

impl ScenarioSpec {
    /// Empty spec over the default map: a fully concrete scenario.
    pub fn empty() -> Self {
        ScenarioSpec {
            map_id: DEFAULT_MAP_ID.to_string(),
            ego_role: DEFAULT_EGO_ROLE.to_string(),
            params: Vec::new(),
            bindings: Vec::new(),
        }
    }

    pub fn param(&self, name: &str) -> Option<&ParamDomain> {
        self.params.iter().find(|p| p.name == name)
    }

    /// Parameter name bound to `knob`, if any.
    pub fn bound_param(&self, knob: &str) -> Option<&str> {
        self.bindings
            .iter()
            .find(|b| b.knob == knob)
            .map(|b| b.param.as_str())
    }

    /// Stable identifier for this spec: map id plus a fingerprint of the
    /// canonical text. Used to key [`ScenarioParams`] back to their spec.
    pub fn spec_id(&self) -> String {
        let text = format_spec(self);
        // FNV-1a, stable across runs and platforms.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{}-{:08x}", self.map_id, (h >> 32) as u32 ^ h as u32)
    }
}

/// A concrete value for one parameter.
#[derive(Debug, Clone)]
pub enum ParamValue {
    Symbol(String),
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl ParamValue {
    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            ParamValue::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            ParamValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    /// Numeric view; integers widen to reals.
    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Real(x) => Some(*x),
            ParamValue::Int(i) => Some(*i as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            ParamValue::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

// Value semantics: reals compare by bit pattern so assignments can serve as
// buffer keys.
impl PartialEq for ParamValue {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (ParamValue::Symbol(a), ParamValue::Symbol(b)) => a == b,
            (ParamValue::Int(a), ParamValue::Int(b)) => a == b,
            (ParamValue::Real(a), ParamValue::Real(b)) => a.to_bits() == b.to_bits(),
            (ParamValue::Bool(a), ParamValue::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for ParamValue {}

impl std::hash::Hash for ParamValue {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        match self {
            ParamValue::Symbol(s) => {
                0u8.hash(state);
                s.hash(state);
            }
            ParamValue::Int(i) => {
                1u8.hash(state);
                i.hash(state);
            }
            ParamValue::Real(x) => {
                2u8.hash(state);
                x.to_bits().hash(state);
            }
            ParamValue::Bool(b) => {
                3u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Symbol(s) => write!(f, "{s}"),
            ParamValue::Int(i) => write!(f, "{i}"),
            ParamValue::Real(x) => write!(f, "{x}"),
            ParamValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

/// One concrete assignment of every parameter of a spec, plus the world seed.
/// Equal assignment and seed means equal scenario.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScenarioParams {
    pub spec_id: String,
    pub assignment: BTreeMap<String, ParamValue>,
    pub seed: u64,
}

impl ScenarioParams {
    /// Checks totality and per-value domain membership against `spec`.
    pub fn validate(&self, spec: &ScenarioSpec) -> Result<(), String> {
        if self.spec_id != spec.spec_id() {
            return Err(format!(
                "params for spec {} used with spec {}",
                self.spec_id,
                spec.spec_id()
            ));
        }
        for domain in &spec.params {
            match self.assignment.get(&domain.name) {
                None => return Err(format!("missing value for parameter {}", domain.name)),
                Some(v) if !domain.contains(v) => {
                    return Err(format!("value {v} out of domain for {}", domain.name))
                }
                _ => {}
            }
        }
        if self.assignment.len() != spec.params.len() {
            return Err("assignment has values for undeclared parameters".to_string());
        }
        Ok(())
    }

    /// `key=value;...` serialization used by buffer snapshots and hold-out
    /// files. Keys appear in sorted order.
    pub fn format_assignment(&self) -> String {
        let mut parts: Vec<String> = Vec::with_capacity(self.assignment.len());
        for (k, v) in &self.assignment {
            parts.push(format!("{k}={v}"));
        }
        parts.join(";")
    }

    /// Parses the `key=value;...` form written by [`format_assignment`],
    /// resolving value types against `spec`.
    pub fn parse_assignment(
        spec: &ScenarioSpec,
        text: &str,
        seed: u64,
    ) -> Result<ScenarioParams, String> {
        let mut assignment = BTreeMap::new();
        for part in text.split(';').filter(|p| !p.is_empty()) {
            let (key, raw) = part
                .split_once('=')
                .ok_or_else(|| format!("malformed assignment entry {part:?}"))?;
            let domain = spec
                .param(key)
                .ok_or_else(|| format!("unknown parameter {key}"))?;
            let value = match &domain.kind {
                DomainKind::Categorical(_) => ParamValue::Symbol(raw.to_string()),
                DomainKind::IntegerRange { .. } => ParamValue::Int(
                    raw.parse::<i64>()
                        .map_err(|_| format!("bad integer {raw:?} for {key}"))?,
                ),
                DomainKind::RealRange { .. } => ParamValue::Real(
                    raw.parse::<f64>()
                        .map_err(|_| format!("bad real {raw:?} for {key}"))?,
                ),
                DomainKind::Boolean => ParamValue::Bool(
                    raw.parse::<bool>()
                        .map_err(|_| format!("bad bool {raw:?} for {key}"))?,
                ),
            };
            if !domain.contains(&value) {
                return Err(format!("value {value} out of domain for {key}"));
            }
            assignment.insert(key.to_string(), value);
        }
        let params = ScenarioParams {
            spec_id: spec.spec_id(),
            assignment,
            seed,
        };
        params.validate(spec).map(|_| params)
    }
}
