//! Construction specs: one JSON document per system, consumable by the CLI
//! and the bindings.
//!
//! The schema is a tagged union on `kind`:
//!
//! ```json
//! {"kind": "pq",       "word": "a?b?c"}
//! {"kind": "perlevel", "words": ["a?b", "ab?"]}
//! {"kind": "blocks",   "k1": 4, "levels": 3, "mode": "toy",
//!                      "d0": 1, "scale": ["1","8","120"],
//!                      "requested": [0, 13], "relaxed_c2": false}
//! {"kind": "product",  "components": [ ... ], "cyclic": 6}
//! ```
//!
//! Scale entries are decimal strings so they survive any size; plain JSON
//! integers are accepted on input. Unknown keys are rejected, so typos fail
//! loudly instead of silently falling back to defaults. Serialization is
//! key-sorted, hence byte-deterministic for a given spec.

use std::str::FromStr;

use num_bigint::BigUint;
use serde_json::{json, Map, Value};

use crate::blocks::{BlockMode, BlockSpec};
use crate::error::{Error, Result};
use crate::products::{
    positive_component_spec, realize_group, zero_component_word, EntropyMode, ProductSystem,
    RealizeReport,
};
use crate::system::ToeplitzSystem;

#[derive(Clone, Debug, PartialEq)]
pub enum ConstructionSpec {
    /// One hole word iterated at every level.
    Pq { word: String },
    /// An explicit word per level, cycled bottom-up.
    PerLevel { words: Vec<String> },
    /// Block tower; `scale` empty means derive the ladder from the mode.
    Blocks {
        k1: u64,
        d0: u64,
        levels: u32,
        mode: BlockMode,
        scale: Option<Vec<BigUint>>,
        requested: Vec<u64>,
        relaxed_c2: bool,
    },
    /// Product of the component systems with a finite cyclic factor.
    Product {
        components: Vec<ConstructionSpec>,
        cyclic: u64,
    },
}

fn as_object<'a>(v: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| Error::InvalidSpec(format!("{what} must be a JSON object")))
}

fn required<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    m.get(key)
        .ok_or_else(|| Error::InvalidSpec(format!("missing field \"{key}\"")))
}

fn str_field<'a>(m: &'a Map<String, Value>, key: &str) -> Result<&'a str> {
    required(m, key)?
        .as_str()
        .ok_or_else(|| Error::InvalidSpec(format!("field \"{key}\" must be a string")))
}

fn u64_field(m: &Map<String, Value>, key: &str) -> Result<u64> {
    required(m, key)?
        .as_u64()
        .ok_or_else(|| Error::InvalidSpec(format!("field \"{key}\" must be a nonnegative integer")))
}

fn check_keys(m: &Map<String, Value>, allowed: &[&str]) -> Result<()> {
    for key in m.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Error::InvalidSpec(format!(
                "unknown field \"{key}\"; expected one of {allowed:?}"
            )));
        }
    }
    Ok(())
}

fn big_entry(v: &Value, key: &str) -> Result<BigUint> {
    if let Some(n) = v.as_u64() {
        return Ok(BigUint::from(n));
    }
    if let Some(s) = v.as_str() {
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            return Ok(BigUint::from_str(s).expect("digits"));
        }
    }
    Err(Error::InvalidSpec(format!(
        "field \"{key}\" entries must be decimal strings or integers"
    )))
}

impl ConstructionSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ConstructionSpec::Pq { .. } => "pq",
            ConstructionSpec::PerLevel { .. } => "perlevel",
            ConstructionSpec::Blocks { .. } => "blocks",
            ConstructionSpec::Product { .. } => "product",
        }
    }

    pub fn from_json(text: &str) -> Result<ConstructionSpec> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::InvalidSpec(format!("spec is not valid JSON: {e}")))?;
        ConstructionSpec::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<ConstructionSpec> {
        let m = as_object(value, "a construction spec")?;
        match str_field(m, "kind")? {
            "pq" => {
                check_keys(m, &["kind", "word"])?;
                Ok(ConstructionSpec::Pq {
                    word: str_field(m, "word")?.to_string(),
                })
            }
            "perlevel" => {
                check_keys(m, &["kind", "words"])?;
                let arr = required(m, "words")?
                    .as_array()
                    .ok_or_else(|| Error::InvalidSpec("field \"words\" must be an array".into()))?;
                if arr.is_empty() {
                    return Err(Error::InvalidSpec("field \"words\" must be nonempty".into()));
                }
                let words = arr
                    .iter()
                    .map(|w| {
                        w.as_str().map(str::to_string).ok_or_else(|| {
                            Error::InvalidSpec("\"words\" entries must be strings".into())
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ConstructionSpec::PerLevel { words })
            }
            "blocks" => {
                check_keys(
                    m,
                    &["kind", "k1", "d0", "levels", "mode", "scale", "requested", "relaxed_c2"],
                )?;
                let mode = match m.get("mode").and_then(Value::as_str) {
                    None | Some("toy") => BlockMode::Toy,
                    Some("faithful") => BlockMode::Faithful,
                    Some(other) => {
                        return Err(Error::InvalidSpec(format!(
                            "mode \"{other}\" is not one of toy, faithful"
                        )))
                    }
                };
                let scale = match m.get("scale") {
                    None | Some(Value::Null) => None,
                    Some(Value::Array(entries)) => Some(
                        entries
                            .iter()
                            .map(|v| big_entry(v, "scale"))
                            .collect::<Result<Vec<_>>>()?,
                    ),
                    Some(_) => {
                        return Err(Error::InvalidSpec("field \"scale\" must be an array".into()))
                    }
                };
                let requested = match m.get("requested") {
                    None | Some(Value::Null) => Vec::new(),
                    Some(Value::Array(entries)) => entries
                        .iter()
                        .map(|v| {
                            v.as_u64().ok_or_else(|| {
                                Error::InvalidSpec(
                                    "\"requested\" entries must be nonnegative integers".into(),
                                )
                            })
                        })
                        .collect::<Result<Vec<_>>>()?,
                    Some(_) => {
                        return Err(Error::InvalidSpec(
                            "field \"requested\" must be an array".into(),
                        ))
                    }
                };
                let relaxed_c2 = match m.get("relaxed_c2") {
                    None | Some(Value::Null) => false,
                    Some(Value::Bool(b)) => *b,
                    Some(_) => {
                        return Err(Error::InvalidSpec(
                            "field \"relaxed_c2\" must be a boolean".into(),
                        ))
                    }
                };
                let d0 = match m.get("d0") {
                    None | Some(Value::Null) => 1,
                    Some(v) => v.as_u64().ok_or_else(|| {
                        Error::InvalidSpec("field \"d0\" must be a nonnegative integer".into())
                    })?,
                };
                Ok(ConstructionSpec::Blocks {
                    k1: u64_field(m, "k1")?,
                    d0,
                    levels: u64_field(m, "levels")? as u32,
                    mode,
                    scale,
                    requested,
                    relaxed_c2,
                })
            }
            "product" => {
                check_keys(m, &["kind", "components", "cyclic"])?;
                let arr = required(m, "components")?.as_array().ok_or_else(|| {
                    Error::InvalidSpec("field \"components\" must be an array".into())
                })?;
                let components = arr
                    .iter()
                    .map(ConstructionSpec::from_value)
                    .collect::<Result<Vec<_>>>()?;
                let cyclic = match m.get("cyclic") {
                    None | Some(Value::Null) => 1,
                    Some(v) => v.as_u64().ok_or_else(|| {
                        Error::InvalidSpec("field \"cyclic\" must be a positive integer".into())
                    })?,
                };
                Ok(ConstructionSpec::Product { components, cyclic })
            }
            other => Err(Error::InvalidSpec(format!(
                "kind \"{other}\" is not one of pq, perlevel, blocks, product"
            ))),
        }
    }

    pub fn to_value(&self) -> Value {
        match self {
            ConstructionSpec::Pq { word } => json!({"kind": "pq", "word": word}),
            ConstructionSpec::PerLevel { words } => json!({"kind": "perlevel", "words": words}),
            ConstructionSpec::Blocks {
                k1,
                d0,
                levels,
                mode,
                scale,
                requested,
                relaxed_c2,
            } => {
                let mut m = Map::new();
                m.insert("kind".into(), json!("blocks"));
                m.insert("k1".into(), json!(k1));
                m.insert("d0".into(), json!(d0));
                m.insert("levels".into(), json!(levels));
                m.insert("mode".into(), json!(mode.name()));
                if let Some(scale) = scale {
                    let entries: Vec<Value> =
                        scale.iter().map(|p| json!(p.to_string())).collect();
                    m.insert("scale".into(), Value::Array(entries));
                }
                if !requested.is_empty() {
                    m.insert("requested".into(), json!(requested));
                }
                if *relaxed_c2 {
                    m.insert("relaxed_c2".into(), json!(true));
                }
                Value::Object(m)
            }
            ConstructionSpec::Product { components, cyclic } => {
                let entries: Vec<Value> = components.iter().map(|c| c.to_value()).collect();
                json!({"kind": "product", "cyclic": cyclic, "components": entries})
            }
        }
    }

    /// Compact key-sorted JSON; byte-identical across runs.
    pub fn to_json(&self) -> String {
        self.to_value().to_string()
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_value()).expect("valid value")
    }

    /// Validates every parameter against the module preconditions and builds
    /// the system.
    pub fn build(&self) -> Result<ToeplitzSystem> {
        match self {
            ConstructionSpec::Pq { word } => ToeplitzSystem::constant_word(word),
            ConstructionSpec::PerLevel { words } => {
                let refs: Vec<&str> = words.iter().map(String::as_str).collect();
                ToeplitzSystem::per_level(&refs)
            }
            ConstructionSpec::Blocks {
                k1,
                d0,
                levels,
                mode,
                scale,
                requested,
                relaxed_c2,
            } => ToeplitzSystem::blocks(BlockSpec {
                k1: *k1,
                d0: *d0,
                levels: *levels,
                mode: *mode,
                scale: scale.clone(),
                requested: requested.clone(),
                relaxed_c2: *relaxed_c2,
            }),
            ConstructionSpec::Product { components, cyclic } => {
                let built = components
                    .iter()
                    .map(|c| c.build())
                    .collect::<Result<Vec<_>>>()?;
                Ok(ToeplitzSystem::Product(ProductSystem::new(built, *cyclic)?))
            }
        }
    }
}

/// Realizes Z^d (+ Z/a) and returns the spec that reproduces the product,
/// validated by building it once.
pub fn realize_spec(
    d: u64,
    a: u64,
    mode: EntropyMode,
) -> Result<(ConstructionSpec, RealizeReport)> {
    let (_, report) = realize_group(d, a, mode)?;
    let components = report
        .primes
        .iter()
        .map(|&r| {
            Ok(match mode {
                EntropyMode::Zero => ConstructionSpec::Pq {
                    word: zero_component_word(r),
                },
                EntropyMode::Positive => {
                    let spec = positive_component_spec(r)?;
                    ConstructionSpec::Blocks {
                        k1: spec.k1,
                        d0: spec.d0,
                        levels: spec.levels,
                        mode: spec.mode,
                        scale: spec.scale,
                        requested: spec.requested,
                        relaxed_c2: spec.relaxed_c2,
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        ConstructionSpec::Product {
            components,
            cyclic: a,
        },
        report,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pq_spec_round_trips_and_builds() {
        let spec = ConstructionSpec::from_json(r#"{"kind":"pq","word":"a?b?c"}"#).unwrap();
        assert_eq!(spec, ConstructionSpec::Pq { word: "a?b?c".into() });
        assert_eq!(ConstructionSpec::from_json(&spec.to_json()).unwrap(), spec);
        let sys = spec.build().unwrap();
        assert_eq!(sys.window(0, 9).unwrap().render(sys.alphabet()), "aabacabba");
    }

    #[test]
    fn perlevel_spec_builds_the_level_ladder() {
        let spec =
            ConstructionSpec::from_json(r#"{"kind":"perlevel","words":["a?b","a?b"]}"#).unwrap();
        let sys = spec.build().unwrap();
        assert_eq!(sys.ladder_period(1).unwrap(), 3);
        assert_eq!(sys.ladder_period(2).unwrap(), 9);
        assert_eq!(ConstructionSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn blocks_spec_accepts_strings_and_integers_in_the_scale() {
        let text = r#"{"kind":"blocks","k1":4,"levels":3,"mode":"toy","scale":["1",8,"120"]}"#;
        let spec = ConstructionSpec::from_json(text).unwrap();
        let sys = spec.build().unwrap();
        assert_eq!(sys.ladder_period(1).unwrap(), 8);
        assert_eq!(sys.ladder_period(2).unwrap(), 120);
        // Serialized scale entries are decimal strings.
        assert!(spec.to_json().contains(r#""scale":["1","8","120"]"#));
        assert_eq!(ConstructionSpec::from_json(&spec.to_json()).unwrap(), spec);
    }

    #[test]
    fn requested_floors_reach_the_builder() {
        let text = r#"{"kind":"blocks","k1":4,"levels":2,"mode":"toy","requested":[0,13]}"#;
        let sys = ConstructionSpec::from_json(text).unwrap().build().unwrap();
        // The least quotient with 13 arrangements is 9.
        assert_eq!(sys.ladder_period(1).unwrap(), 9);
    }

    #[test]
    fn schema_violations_are_named() {
        let err = |t: &str| ConstructionSpec::from_json(t).unwrap_err().to_string();
        assert!(err(r#"{"kind":"pq"}"#).contains("\"word\""));
        assert!(err(r#"{"kind":"pq","word":"a?b","extra":1}"#).contains("unknown field"));
        assert!(err(r#"{"kind":"spiral"}"#).contains("spiral"));
        assert!(err(r#"{"kind":"blocks","k1":4,"levels":2,"mode":"loose"}"#).contains("loose"));
        assert!(err(r#"[1,2]"#).contains("object"));
        assert!(err(r#"{"kind":"perlevel","words":[]}"#).contains("nonempty"));
    }

    #[test]
    fn realize_emits_a_buildable_product_spec() {
        let (spec, report) = realize_spec(2, 6, EntropyMode::Zero).unwrap();
        assert_eq!(report.primes, vec![5, 7]);
        let text = spec.to_json();
        assert!(text.contains("a?bbb") && text.contains("a?bbbbb"));
        let rebuilt = ConstructionSpec::from_json(&text).unwrap();
        assert_eq!(rebuilt, spec);
        let sys = rebuilt.build().unwrap();
        assert_eq!(sys.alphabet().len(), 24);
        assert_eq!(sys.ladder_period(1).unwrap(), 210);
    }

    #[test]
    fn realize_positive_mode_pins_power_scales_in_the_spec() {
        let (spec, report) = realize_spec(1, 1, EntropyMode::Positive).unwrap();
        assert_eq!(report.primes, vec![2]);
        assert!(spec.to_json().contains(r#""scale":["1","8","128"]"#));
        let sys = spec.build().unwrap();
        assert_eq!(sys.ladder_period(2).unwrap(), 128);
    }
}
