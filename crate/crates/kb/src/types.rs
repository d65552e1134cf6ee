//! Core domain types: entities, relations, the relation/entity-pair
//! validity matrix, articles, and merged hypothesis records.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{KbError, Result};

/// PubMed article identifier. Always positive in admitted data.
pub type Pmid = u64;

/// Vocabulary identifier of an entity (MeSH, NCBI Gene, ...).
pub type EntityId = String;

/// The nine entity types of the source ontology.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityType {
    Chemical,
    Disease,
    Gene,
    Mutation,
    ProteinMutation,
    DnaMutation,
    Snp,
    Species,
    Cellline,
}

impl EntityType {
    pub const ALL: [EntityType; 9] = [
        EntityType::Chemical,
        EntityType::Disease,
        EntityType::Gene,
        EntityType::Mutation,
        EntityType::ProteinMutation,
        EntityType::DnaMutation,
        EntityType::Snp,
        EntityType::Species,
        EntityType::Cellline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EntityType::Chemical => "chemical",
            EntityType::Disease => "disease",
            EntityType::Gene => "gene",
            EntityType::Mutation => "mutation",
            EntityType::ProteinMutation => "protein_mutation",
            EntityType::DnaMutation => "dna_mutation",
            EntityType::Snp => "snp",
            EntityType::Species => "species",
            EntityType::Cellline => "cellline",
        }
    }

    pub fn parse(s: &str) -> Result<EntityType> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        EntityType::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| KbError::InvalidInput(format!("unknown entity type: {s:?}")))
    }

    /// The four mutation-class types collapse to [`Umbrella::Variant`];
    /// species and cellline belong to no umbrella and join no relation.
    pub fn umbrella(self) -> Option<Umbrella> {
        match self {
            EntityType::Chemical => Some(Umbrella::Chemical),
            EntityType::Disease => Some(Umbrella::Disease),
            EntityType::Gene => Some(Umbrella::Gene),
            EntityType::Mutation
            | EntityType::ProteinMutation
            | EntityType::DnaMutation
            | EntityType::Snp => Some(Umbrella::Variant),
            EntityType::Species | EntityType::Cellline => None,
        }
    }

    pub fn is_mutation_class(self) -> bool {
        matches!(self.umbrella(), Some(Umbrella::Variant))
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Umbrella classes used by the validity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Umbrella {
    Chemical,
    Disease,
    Gene,
    Variant,
}

/// The twelve relation types. Declaration order matches the alphabetical
/// order of the serialized snake_case names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationType {
    Associate,
    Cause,
    Compare,
    Cotreat,
    DrugInteract,
    Inhibit,
    Interact,
    NegativeCorrelate,
    PositiveCorrelate,
    Prevent,
    Stimulate,
    Treat,
}

impl RelationType {
    pub const ALL: [RelationType; 12] = [
        RelationType::Associate,
        RelationType::Cause,
        RelationType::Compare,
        RelationType::Cotreat,
        RelationType::DrugInteract,
        RelationType::Inhibit,
        RelationType::Interact,
        RelationType::NegativeCorrelate,
        RelationType::PositiveCorrelate,
        RelationType::Prevent,
        RelationType::Stimulate,
        RelationType::Treat,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationType::Associate => "associate",
            RelationType::Cause => "cause",
            RelationType::Compare => "compare",
            RelationType::Cotreat => "cotreat",
            RelationType::DrugInteract => "drug_interact",
            RelationType::Inhibit => "inhibit",
            RelationType::Interact => "interact",
            RelationType::NegativeCorrelate => "negative_correlate",
            RelationType::PositiveCorrelate => "positive_correlate",
            RelationType::Prevent => "prevent",
            RelationType::Stimulate => "stimulate",
            RelationType::Treat => "treat",
        }
    }

    pub fn parse(s: &str) -> Result<RelationType> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        RelationType::ALL
            .iter()
            .copied()
            .find(|r| r.as_str() == norm)
            .ok_or_else(|| KbError::InvalidInput(format!("unknown relation: {s:?}")))
    }

    /// Static one-line description of the relation.
    pub fn description(self) -> &'static str {
        match self {
            RelationType::Associate => "Complex or unclear relationships",
            RelationType::Cause => "Triggering a disease by a specific agent",
            RelationType::Compare => "Comparing the effects of two chemicals or drugs",
            RelationType::Cotreat => "Simultaneous administration of multiple drugs",
            RelationType::DrugInteract => "Pharmacodynamic interactions between two chemicals",
            RelationType::Inhibit => "Reduction in amount or degree of one entity by another",
            RelationType::Interact => "Physical interactions, such as protein-binding",
            RelationType::NegativeCorrelate => {
                "Increases in the amount or degree of one entity decreases the amount or degree \
                 of the other entity"
            }
            RelationType::PositiveCorrelate => {
                "The amount or degree of two entities increase or decrease together"
            }
            RelationType::Prevent => "Prevention of a disease by a genetic variant",
            RelationType::Stimulate => "Increase in amount or degree of one entity by another",
            RelationType::Treat => "Treatment of a disease using a chemical or drug",
        }
    }

    /// Ordered (subject, object) umbrella pairs admitted for this relation.
    /// 26 pairs in total across the twelve relations.
    pub fn valid_pairs(self) -> &'static [(Umbrella, Umbrella)] {
        use Umbrella::{Chemical as C, Disease as D, Gene as G, Variant as V};
        match self {
            RelationType::Associate => &[(C, D), (C, G), (C, V), (D, G), (D, V), (V, V)],
            RelationType::Cause => &[(C, D), (V, D)],
            RelationType::Compare => &[(C, C)],
            RelationType::Cotreat => &[(C, C)],
            RelationType::DrugInteract => &[(C, C)],
            RelationType::Inhibit => &[(C, V), (G, D)],
            RelationType::Interact => &[(C, G), (C, V), (G, G)],
            RelationType::NegativeCorrelate => &[(C, G), (C, V), (G, G)],
            RelationType::PositiveCorrelate => &[(C, C), (C, G), (G, G)],
            RelationType::Prevent => &[(V, D)],
            RelationType::Stimulate => &[(C, V), (G, D)],
            RelationType::Treat => &[(C, D)],
        }
    }
}

impl fmt::Display for RelationType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// True iff the ordered (subject, object) umbrella pair is admitted for the
/// relation. Mutation-class types collapse to Variant; species and cellline
/// always yield false. Total function.
pub fn validate_pair(
    relation: RelationType,
    subject_type: EntityType,
    object_type: EntityType,
) -> bool {
    match (subject_type.umbrella(), object_type.umbrella()) {
        (Some(s), Some(o)) => relation.valid_pairs().contains(&(s, o)),
        _ => false,
    }
}

/// A named biomedical entity. `(id, entity_type)` is the identity key;
/// `name` is display metadata and may be empty only for mutation-class types.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub id: EntityId,
    pub name: String,
    pub entity_type: EntityType,
}

impl Entity {
    pub fn new(id: impl Into<String>, name: impl Into<String>, entity_type: EntityType) -> Entity {
        Entity {
            id: id.into(),
            name: name.into(),
            entity_type,
        }
    }
}

/// A directed hypothesis triplet (subject, relation, object).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub subject: Entity,
    pub relation: RelationType,
    pub object: Entity,
}

impl Triplet {
    pub fn key(&self) -> TripletKey {
        TripletKey {
            subject_id: self.subject.id.clone(),
            relation: self.relation,
            object_id: self.object.id.clone(),
        }
    }

    pub fn is_valid_pair(&self) -> bool {
        validate_pair(
            self.relation,
            self.subject.entity_type,
            self.object.entity_type,
        )
    }
}

/// Directed identity key of a record: the reverse orientation is distinct.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TripletKey {
    pub subject_id: EntityId,
    pub relation: RelationType,
    pub object_id: EntityId,
}

impl TripletKey {
    pub fn new(
        subject_id: impl Into<String>,
        relation: RelationType,
        object_id: impl Into<String>,
    ) -> TripletKey {
        TripletKey {
            subject_id: subject_id.into(),
            relation,
            object_id: object_id.into(),
        }
    }

    pub fn reversed(&self) -> TripletKey {
        TripletKey {
            subject_id: self.object_id.clone(),
            relation: self.relation,
            object_id: self.subject_id.clone(),
        }
    }
}

impl fmt::Display for TripletKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.subject_id, self.relation, self.object_id)
    }
}

/// A PubMed article. Admitted articles carry a publication date and a
/// non-empty title-plus-abstract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub pmid: Pmid,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub pub_date: NaiveDate,
    #[serde(default)]
    pub journal: String,
}

impl Article {
    /// Title and abstract joined for indexing and display.
    pub fn text(&self) -> String {
        if self.abstract_text.is_empty() {
            self.title.clone()
        } else if self.title.is_empty() {
            self.abstract_text.clone()
        } else {
            format!("{} {}", self.title, self.abstract_text)
        }
    }
}

/// A merged directed triplet with its supporting articles. The unit of the
/// knowledge base and of the test set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisRecord {
    pub triplet: Triplet,
    pub pmids: BTreeSet<Pmid>,
    pub discovery_date: NaiveDate,
}

impl HypothesisRecord {
    pub fn key(&self) -> TripletKey {
        self.triplet.key()
    }
}

/// Immutable post-ingestion store: entity catalog, record set, article
/// catalog, and the cutoff date every stored discovery precedes.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    entities: BTreeMap<EntityId, Entity>,
    records: BTreeMap<TripletKey, HypothesisRecord>,
    articles: BTreeMap<Pmid, Article>,
    cutoff: NaiveDate,
}

impl KnowledgeBase {
    pub(crate) fn new(
        entities: BTreeMap<EntityId, Entity>,
        records: BTreeMap<TripletKey, HypothesisRecord>,
        articles: BTreeMap<Pmid, Article>,
        cutoff: NaiveDate,
    ) -> KnowledgeBase {
        KnowledgeBase {
            entities,
            records,
            articles,
            cutoff,
        }
    }

    /// Directed membership test on the identity key (subject, relation, object).
    pub fn contains(&self, t: &Triplet) -> bool {
        self.contains_key(&t.key())
    }

    pub fn contains_key(&self, key: &TripletKey) -> bool {
        self.records.contains_key(key)
    }

    /// Membership test that also counts the reverse orientation as known.
    pub fn contains_undirected(&self, key: &TripletKey) -> bool {
        self.records.contains_key(key) || self.records.contains_key(&key.reversed())
    }

    pub fn entity(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn article(&self, pmid: Pmid) -> Option<&Article> {
        self.articles.get(&pmid)
    }

    pub fn record(&self, key: &TripletKey) -> Option<&HypothesisRecord> {
        self.records.get(key)
    }

    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn records(&self) -> impl Iterator<Item = &HypothesisRecord> {
        self.records.values()
    }

    pub fn articles(&self) -> impl Iterator<Item = &Article> {
        self.articles.values()
    }

    pub fn cutoff(&self) -> NaiveDate {
        self.cutoff
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn record_count(&self) -> usize {
        self.records.len()
    }

    pub fn article_count(&self) -> usize {
        self.articles.len()
    }
}

/// Parse a calendar date, normalizing missing day/month to the first day of
/// the period: "2024", "2024-03", and "2024-03-07" are all accepted.
pub fn parse_flexible_date(s: &str) -> Result<NaiveDate> {
    let s = s.trim();
    if s.is_empty() {
        return Err(KbError::InvalidInput("empty date".into()));
    }
    let bad = || KbError::InvalidInput(format!("unparseable date: {s:?}"));
    let parts: Vec<&str> = s.split('-').collect();
    let (y, m, d) = match parts.as_slice() {
        [y] => (y.parse::<i32>().map_err(|_| bad())?, 1, 1),
        [y, m] => (
            y.parse::<i32>().map_err(|_| bad())?,
            m.parse::<u32>().map_err(|_| bad())?,
            1,
        ),
        [y, m, d] => (
            y.parse::<i32>().map_err(|_| bad())?,
            m.parse::<u32>().map_err(|_| bad())?,
            d.parse::<u32>().map_err(|_| bad())?,
        ),
        _ => return Err(bad()),
    };
    NaiveDate::from_ymd_opt(y, m, d).ok_or_else(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent transcription of the validity table, hand-coded as a match,
    // kept deliberately separate from `RelationType::valid_pairs`.
    fn oracle_valid(rel: RelationType, s: EntityType, o: EntityType) -> bool {
        fn umb(t: EntityType) -> Option<&'static str> {
            match t {
                EntityType::Chemical => Some("C"),
                EntityType::Disease => Some("D"),
                EntityType::Gene => Some("G"),
                EntityType::Mutation
                | EntityType::ProteinMutation
                | EntityType::DnaMutation
                | EntityType::Snp => Some("V"),
                EntityType::Species | EntityType::Cellline => None,
            }
        }
        let (Some(s), Some(o)) = (umb(s), umb(o)) else {
            return false;
        };
        let pair = (s, o);
        match rel {
            RelationType::Associate => matches!(
                pair,
                ("C", "D") | ("C", "G") | ("C", "V") | ("D", "G") | ("D", "V") | ("V", "V")
            ),
            RelationType::Cause => matches!(pair, ("C", "D") | ("V", "D")),
            RelationType::Compare => pair == ("C", "C"),
            RelationType::Cotreat => pair == ("C", "C"),
            RelationType::DrugInteract => pair == ("C", "C"),
            RelationType::Inhibit => matches!(pair, ("C", "V") | ("G", "D")),
            RelationType::Interact => matches!(pair, ("C", "G") | ("C", "V") | ("G", "G")),
            RelationType::NegativeCorrelate => {
                matches!(pair, ("C", "G") | ("C", "V") | ("G", "G"))
            }
            RelationType::PositiveCorrelate => {
                matches!(pair, ("C", "C") | ("C", "G") | ("G", "G"))
            }
            RelationType::Prevent => pair == ("V", "D"),
            RelationType::Stimulate => matches!(pair, ("C", "V") | ("G", "D")),
            RelationType::Treat => pair == ("C", "D"),
        }
    }

    #[test]
    fn validate_pair_spot_checks() {
        assert!(validate_pair(
            RelationType::Treat,
            EntityType::Chemical,
            EntityType::Disease
        ));
        assert!(!validate_pair(
            RelationType::Treat,
            EntityType::Disease,
            EntityType::Chemical
        ));
        // snp collapses to Variant, and prevent admits (Variant, Disease)
        assert!(validate_pair(
            RelationType::Prevent,
            EntityType::Snp,
            EntityType::Disease
        ));
        assert!(!validate_pair(
            RelationType::Cotreat,
            EntityType::Chemical,
            EntityType::Gene
        ));
        assert!(!validate_pair(
            RelationType::Treat,
            EntityType::Species,
            EntityType::Disease
        ));
    }

    #[test]
    fn validate_pair_matches_oracle_on_all_972_combinations() {
        let mut valid = 0usize;
        for rel in RelationType::ALL {
            for s in EntityType::ALL {
                for o in EntityType::ALL {
                    assert_eq!(
                        validate_pair(rel, s, o),
                        oracle_valid(rel, s, o),
                        "disagreement at ({rel}, {s}, {o})"
                    );
                    if validate_pair(rel, s, o) {
                        valid += 1;
                    }
                }
            }
        }
        // 26 umbrella-level pairs; multiplicity from the 4 variant members:
        // each Variant slot multiplies by 4, each C/D/G slot by 1.
        let expected: usize = RelationType::ALL
            .iter()
            .flat_map(|r| r.valid_pairs())
            .map(|(s, o)| {
                let w = |u: &Umbrella| if *u == Umbrella::Variant { 4 } else { 1 };
                w(s) * w(o)
            })
            .sum();
        assert_eq!(valid, expected);
    }

    #[test]
    fn matrix_has_exactly_26_ordered_pairs() {
        let n: usize = RelationType::ALL.iter().map(|r| r.valid_pairs().len()).sum();
        assert_eq!(n, 26);
        assert_eq!(RelationType::Associate.valid_pairs().len(), 6);
        assert_eq!(RelationType::Treat.valid_pairs(), &[(Umbrella::Chemical, Umbrella::Disease)]);
    }

    #[test]
    fn relation_names_round_trip() {
        for r in RelationType::ALL {
            assert_eq!(RelationType::parse(r.as_str()).unwrap(), r);
        }
        assert_eq!(
            RelationType::parse("Drug Interact").unwrap(),
            RelationType::DrugInteract
        );
        assert!(RelationType::parse("treats").is_err());
    }

    #[test]
    fn entity_type_names_round_trip() {
        for t in EntityType::ALL {
            assert_eq!(EntityType::parse(t.as_str()).unwrap(), t);
        }
        assert_eq!(
            EntityType::parse("protein mutation").unwrap(),
            EntityType::ProteinMutation
        );
    }

    #[test]
    fn flexible_dates_normalize_to_period_start() {
        let d = |s: &str| parse_flexible_date(s).unwrap();
        assert_eq!(d("2024-03-07"), NaiveDate::from_ymd_opt(2024, 3, 7).unwrap());
        assert_eq!(d("2024-03"), NaiveDate::from_ymd_opt(2024, 3, 1).unwrap());
        assert_eq!(d("2024"), NaiveDate::from_ymd_opt(2024, 1, 1).unwrap());
        assert!(parse_flexible_date("").is_err());
        assert!(parse_flexible_date("2024-13").is_err());
    }

    #[test]
    fn directed_membership_is_orientation_sensitive() {
        let a = Entity::new("A", "alpha", EntityType::Gene);
        let b = Entity::new("B", "beta", EntityType::Gene);
        let t = Triplet {
            subject: a.clone(),
            relation: RelationType::Interact,
            object: b.clone(),
        };
        let mut records = BTreeMap::new();
        records.insert(
            t.key(),
            HypothesisRecord {
                triplet: t.clone(),
                pmids: BTreeSet::from([1]),
                discovery_date: NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
            },
        );
        let kb = KnowledgeBase::new(
            BTreeMap::new(),
            records,
            BTreeMap::new(),
            NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(),
        );
        assert!(kb.contains(&t));
        let rev = Triplet {
            subject: b,
            relation: RelationType::Interact,
            object: a,
        };
        assert!(!kb.contains(&rev));
        assert!(kb.contains_undirected(&rev.key()));
    }
}
