//! Indicator registry: what is measured, under which risk category, and how
//! a value maps to risk.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::taxonomy::RiskCategory;
use crate::model::types::Subject;

/// Upstream data source an indicator depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    SiteInfo,
    UserGroups,
    AbuseFilters,
    Blocks,
    PageviewsByCountry,
    EditorsByCountry,
    ExternalProvider,
    MediaReferrals,
}

impl SourceKind {
    /// Sources that yield a categorical distribution.
    pub fn is_distributional(self) -> bool {
        matches!(
            self,
            SourceKind::PageviewsByCountry
                | SourceKind::EditorsByCountry
                | SourceKind::ExternalProvider
                | SourceKind::MediaReferrals
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Count,
    Ratio,
    Distribution,
    Entropy,
    Score,
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ValueKind::Count => "count",
            ValueKind::Ratio => "ratio",
            ValueKind::Distribution => "distribution",
            ValueKind::Entropy => "entropy",
            ValueKind::Score => "score",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskPolarity {
    HigherIsRiskier,
    LowerIsRiskier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteField {
    Articles,
    Editors,
    ActiveEditors,
}

/// How an indicator is derived from a snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    SiteCount { field: SiteField },
    GroupCount { group: String },
    /// Active elevated-rights holders over active editors.
    ActiveElevatedRatio,
    PatrollingTools,
    AbuseFilterRules,
    StewardRequests,
    StewardsWithLanguage,
    /// Deletion requests over articles.
    DeletionRatio,
    BlockedAccountRatio,
    CountryEntropy { subject: Subject },
    CountryDistribution { subject: Subject },
    StubRatio,
    EditingDepth,
    DemocracyScore { subject: Subject },
    ProviderScore { provider: String, key: String },
    ProviderDistribution { provider: String },
    ProviderEntropy { provider: String },
}

/// Group key holding the number of distinct users in any elevated group.
pub const ELEVATED_GROUP_KEY: &str = "elevated";
/// Group key holding the distinct elevated users active in the last 30 days.
pub const ACTIVE_ELEVATED_GROUP_KEY: &str = "elevated@active";
/// User groups counted as elevated rights.
pub const ELEVATED_GROUPS: [&str; 5] = ["sysop", "bureaucrat", "checkuser", "oversight", "rollbacker"];

pub const PROVIDER_ORES_QUALITY: &str = "ores_quality";
pub const PROVIDER_CONTROVERSIALITY: &str = "controversiality";
pub const PROVIDER_SOURCE_RELIABILITY: &str = "source_reliability";
pub const PROVIDER_MEDIA_REFERRALS: &str = "media_referrals";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorDefinition {
    pub id: String,
    pub display_name: String,
    pub category: RiskCategory,
    pub value_kind: ValueKind,
    pub risk_polarity: RiskPolarity,
    pub required_sources: BTreeSet<SourceKind>,
    pub method_version: u32,
    #[serde(flatten)]
    pub method: Method,
}

impl IndicatorDefinition {
    /// Whether this indicator yields a scalar that can be ranked across wikis.
    pub fn is_scorable(&self) -> bool {
        self.value_kind != ValueKind::Distribution
    }

    /// Backed by an external score provider stub rather than computed here.
    pub fn is_provider_backed(&self) -> bool {
        self.required_sources.contains(&SourceKind::ExternalProvider)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("duplicate indicator id `{0}`")]
    DuplicateId(String),
    #[error("indicator `{0}` has a distributional value kind but no distributional source")]
    MissingDistributionSource(String),
    #[error("unknown indicator id `{0}`")]
    UnknownIndicator(String),
}

/// A validated set of indicator definitions in a stable order.
#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    defs: Vec<IndicatorDefinition>,
}

impl Registry {
    pub fn new(defs: Vec<IndicatorDefinition>) -> Result<Self, RegistryError> {
        let mut seen = HashSet::new();
        for d in &defs {
            if !seen.insert(d.id.as_str()) {
                return Err(RegistryError::DuplicateId(d.id.clone()));
            }
            if matches!(d.value_kind, ValueKind::Entropy | ValueKind::Distribution)
                && !d.required_sources.iter().any(|s| s.is_distributional())
            {
                return Err(RegistryError::MissingDistributionSource(d.id.clone()));
            }
        }
        Ok(Registry { defs })
    }

    pub fn default_registry() -> Self {
        Registry::new(default_registry()).expect("built-in registry is valid")
    }

    pub fn definitions(&self) -> &[IndicatorDefinition] {
        &self.defs
    }

    pub fn get(&self, id: &str) -> Option<&IndicatorDefinition> {
        self.defs.iter().find(|d| d.id == id)
    }

    pub fn in_category(&self, category: RiskCategory) -> impl Iterator<Item = &IndicatorDefinition> {
        self.defs.iter().filter(move |d| d.category == category)
    }

    /// Drops the named indicators. Unknown ids are an error so that typos in
    /// operator configuration do not pass silently.
    pub fn without(mut self, disabled: &[String]) -> Result<Self, RegistryError> {
        for id in disabled {
            if self.get(id).is_none() {
                return Err(RegistryError::UnknownIndicator(id.clone()));
            }
        }
        self.defs.retain(|d| !disabled.contains(&d.id));
        Ok(self)
    }
}

struct Def {
    id: &'static str,
    name: &'static str,
    category: RiskCategory,
    kind: ValueKind,
    polarity: RiskPolarity,
    sources: &'static [SourceKind],
    method: Method,
}

impl From<Def> for IndicatorDefinition {
    fn from(d: Def) -> Self {
        IndicatorDefinition {
            id: d.id.to_string(),
            display_name: d.name.to_string(),
            category: d.category,
            value_kind: d.kind,
            risk_polarity: d.polarity,
            required_sources: d.sources.iter().copied().collect(),
            method_version: 1,
            method: d.method,
        }
    }
}

/// The built-in indicator catalog. Every taxonomy leaf has at least one
/// scorable indicator.
pub fn default_registry() -> Vec<IndicatorDefinition> {
    use RiskCategory::*;
    use RiskPolarity::*;
    use SourceKind::*;
    use ValueKind as K;

    let provider = |p: &str, k: &str| Method::ProviderScore { provider: p.into(), key: k.into() };

    let defs = vec![
        // Community capacity
        Def {
            id: "articles",
            name: "Number of articles",
            category: CommunityCapacity,
            kind: K::Count,
            polarity: HigherIsRiskier,
            sources: &[SiteInfo],
            method: Method::SiteCount { field: SiteField::Articles },
        },
        Def {
            id: "editors",
            name: "Number of registered editors",
            category: CommunityCapacity,
            kind: K::Count,
            polarity: LowerIsRiskier,
            sources: &[SiteInfo],
            method: Method::SiteCount { field: SiteField::Editors },
        },
        Def {
            id: "active_editors",
            name: "Number of active editors (30 days)",
            category: CommunityCapacity,
            kind: K::Count,
            polarity: LowerIsRiskier,
            sources: &[SiteInfo],
            method: Method::SiteCount { field: SiteField::ActiveEditors },
        },
        Def {
            id: "elevated_editors",
            name: "Editors with elevated user rights",
            category: CommunityCapacity,
            kind: K::Count,
            polarity: LowerIsRiskier,
            sources: &[UserGroups],
            method: Method::GroupCount { group: ELEVATED_GROUP_KEY.into() },
        },
        Def {
            id: "active_elevated_ratio",
            name: "Ratio of active editors with elevated user rights",
            category: CommunityCapacity,
            kind: K::Ratio,
            polarity: LowerIsRiskier,
            sources: &[SiteInfo, UserGroups],
            method: Method::ActiveElevatedRatio,
        },
        Def {
            id: "patrolling_tools",
            name: "Number of specialized patrolling tools",
            category: CommunityCapacity,
            kind: K::Count,
            polarity: LowerIsRiskier,
            sources: &[],
            method: Method::PatrollingTools,
        },
        Def {
            id: "abusefilter_rules",
            name: "Number of enabled AbuseFilter rules",
            category: CommunityCapacity,
            kind: K::Count,
            polarity: LowerIsRiskier,
            sources: &[AbuseFilters],
            method: Method::AbuseFilterRules,
        },
        // Community governance
        Def {
            id: "steward_requests",
            name: "Requests in the stewards' noticeboard",
            category: CommunityGovernance,
            kind: K::Count,
            polarity: HigherIsRiskier,
            sources: &[],
            method: Method::StewardRequests,
        },
        Def {
            id: "stewards_with_language",
            name: "Global stewards knowledgeable in the language",
            category: CommunityGovernance,
            kind: K::Count,
            polarity: LowerIsRiskier,
            sources: &[],
            method: Method::StewardsWithLanguage,
        },
        Def {
            id: "deletion_request_ratio",
            name: "Ratio of articles for deletion",
            category: CommunityGovernance,
            kind: K::Ratio,
            polarity: HigherIsRiskier,
            sources: &[SiteInfo],
            method: Method::DeletionRatio,
        },
        Def {
            id: "blocked_account_ratio",
            name: "Ratio of blocked accounts",
            category: CommunityGovernance,
            kind: K::Ratio,
            polarity: HigherIsRiskier,
            sources: &[Blocks, SiteInfo],
            method: Method::BlockedAccountRatio,
        },
        // Community demographics
        Def {
            id: "edits_by_country_entropy",
            name: "Entropy of edits by country",
            category: CommunityDemographics,
            kind: K::Entropy,
            polarity: LowerIsRiskier,
            sources: &[EditorsByCountry],
            method: Method::CountryEntropy { subject: Subject::Edits },
        },
        Def {
            id: "views_by_country_entropy",
            name: "Entropy of views by country",
            category: CommunityDemographics,
            kind: K::Entropy,
            polarity: LowerIsRiskier,
            sources: &[PageviewsByCountry],
            method: Method::CountryEntropy { subject: Subject::Views },
        },
        Def {
            id: "edits_by_country",
            name: "Distribution of edits by country",
            category: CommunityDemographics,
            kind: K::Distribution,
            polarity: LowerIsRiskier,
            sources: &[EditorsByCountry],
            method: Method::CountryDistribution { subject: Subject::Edits },
        },
        Def {
            id: "views_by_country",
            name: "Distribution of views by country",
            category: CommunityDemographics,
            kind: K::Distribution,
            polarity: LowerIsRiskier,
            sources: &[PageviewsByCountry],
            method: Method::CountryDistribution { subject: Subject::Views },
        },
        // Content verifiability
        Def {
            id: "unreliable_source_share",
            name: "Share of citations to unreliable sources",
            category: ContentVerifiability,
            kind: K::Score,
            polarity: HigherIsRiskier,
            sources: &[ExternalProvider],
            method: provider(PROVIDER_SOURCE_RELIABILITY, "unreliable"),
        },
        Def {
            id: "sources_by_reliability",
            name: "Distribution of sources by reliability",
            category: ContentVerifiability,
            kind: K::Distribution,
            polarity: HigherIsRiskier,
            sources: &[ExternalProvider],
            method: Method::ProviderDistribution { provider: PROVIDER_SOURCE_RELIABILITY.into() },
        },
        // Content quality
        Def {
            id: "stub_ratio",
            name: "Ratio of stub articles",
            category: ContentQuality,
            kind: K::Ratio,
            polarity: HigherIsRiskier,
            sources: &[SiteInfo],
            method: Method::StubRatio,
        },
        Def {
            id: "editing_depth",
            name: "Editing depth",
            category: ContentQuality,
            kind: K::Score,
            polarity: LowerIsRiskier,
            sources: &[SiteInfo],
            method: Method::EditingDepth,
        },
        Def {
            id: "ores_mean_quality",
            name: "Mean predicted article quality",
            category: ContentQuality,
            kind: K::Score,
            polarity: LowerIsRiskier,
            sources: &[ExternalProvider],
            method: provider(PROVIDER_ORES_QUALITY, "mean_quality"),
        },
        // Content controversiality
        Def {
            id: "controversial_article_share",
            name: "Share of controversial articles",
            category: ContentControversiality,
            kind: K::Score,
            polarity: HigherIsRiskier,
            sources: &[ExternalProvider],
            method: provider(PROVIDER_CONTROVERSIALITY, "controversial_share"),
        },
        Def {
            id: "locked_article_ratio",
            name: "Ratio of locked articles",
            category: ContentControversiality,
            kind: K::Score,
            polarity: HigherIsRiskier,
            sources: &[ExternalProvider],
            method: provider(PROVIDER_CONTROVERSIALITY, "locked_share"),
        },
        // Media
        Def {
            id: "media_referral_entropy",
            name: "Entropy of visits by referring media",
            category: Media,
            kind: K::Entropy,
            polarity: LowerIsRiskier,
            sources: &[MediaReferrals],
            method: Method::ProviderEntropy { provider: PROVIDER_MEDIA_REFERRALS.into() },
        },
        Def {
            id: "media_referrals",
            name: "Distribution of visits by referring media",
            category: Media,
            kind: K::Distribution,
            polarity: LowerIsRiskier,
            sources: &[MediaReferrals],
            method: Method::ProviderDistribution { provider: PROVIDER_MEDIA_REFERRALS.into() },
        },
        // Geopolitics
        Def {
            id: "views_democracy_score",
            name: "Democratic quality of views by country",
            category: Geopolitics,
            kind: K::Score,
            polarity: LowerIsRiskier,
            sources: &[PageviewsByCountry],
            method: Method::DemocracyScore { subject: Subject::Views },
        },
        Def {
            id: "edits_democracy_score",
            name: "Democratic quality of edits by country",
            category: Geopolitics,
            kind: K::Score,
            polarity: LowerIsRiskier,
            sources: &[EditorsByCountry],
            method: Method::DemocracyScore { subject: Subject::Edits },
        },
    ];
    defs.into_iter().map(IndicatorDefinition::from).collect()
}
