//! Shared plumbing for on-disk TOML manifests.

/// Serde adapter storing `u64` seeds as decimal strings, since TOML integers
/// are signed 64-bit and large seeds would not round-trip.
pub(crate) mod u64_string {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &u64, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&value.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<u64, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse()
            .map_err(|_| de::Error::custom(format!("invalid u64 seed {text:?}")))
    }
}
