//! Taxonomy, indicator registry and shared domain types. No I/O.

pub mod registry;
pub mod taxonomy;
pub mod types;

pub use registry::{
    default_registry, IndicatorDefinition, Method, Registry, RegistryError, RiskPolarity, SiteField,
    ACTIVE_ELEVATED_GROUP_KEY, ELEVATED_GROUPS, ELEVATED_GROUP_KEY, PROVIDER_CONTROVERSIALITY,
    PROVIDER_MEDIA_REFERRALS, PROVIDER_ORES_QUALITY, PROVIDER_SOURCE_RELIABILITY,
    SourceKind, ValueKind,
};
pub use taxonomy::{taxonomy, CategoryInfo, Origin, RiskCategory, Subgroup};
pub use types::*;
