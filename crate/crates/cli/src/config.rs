//! Flat JSON experiment configs with command-line overrides.
//!
//! Resolution order is: built-in defaults, then the `--config` file, then the
//! per-command flags, then `--seed`.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Declares a parameter record and a matching clap argument group whose
/// fields are all optional overrides.
macro_rules! params {
    (
        $(#[$smeta:meta])*
        $name:ident / $args:ident {
            $( $(#[$fmeta:meta])* $field:ident : $ty:ty = $default:expr ),* $(,)?
        }
    ) => {
        $(#[$smeta])*
        #[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
        #[serde(deny_unknown_fields, default)]
        pub struct $name {
            pub seed: u64,
            $( pub $field: $ty, )*
        }

        impl Default for $name {
            fn default() -> Self {
                Self {
                    seed: 1,
                    $( $field: $default, )*
                }
            }
        }

        #[derive(Debug, Clone, Default, clap::Args, serde::Serialize)]
        pub struct $args {
            $(
                $(#[$fmeta])*
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

pub(crate) use params;

/// Merges defaults, file and overrides into a resolved record.
pub fn resolve<P, A>(file: Option<&Path>, overrides: &A, seed: Option<u64>) -> Result<P, CliError>
where
    P: Default + Serialize + DeserializeOwned,
    A: Serialize,
{
    let mut merged = match serde_json::to_value(P::default())? {
        Value::Object(m) => m,
        _ => unreachable!("parameter records serialize to objects"),
    };
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let Value::Object(obj) = value else {
            return Err(CliError::Config("config file must hold a flat JSON object".into()));
        };
        overlay(&mut merged, obj);
    }
    if let Value::Object(obj) = serde_json::to_value(overrides)? {
        overlay(&mut merged, obj);
    }
    if let Some(s) = seed {
        merged.insert("seed".into(), Value::from(s));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Config(e.to_string()))
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        base.insert(k, v);
    }
}
