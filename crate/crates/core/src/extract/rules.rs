use std::collections::BTreeSet;
use std::sync::LazyLock;
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ExtractError;
use crate::plugin::HttpEndpoint;
use crate::retrieve::text::token_set;

/// Produces a value for a requested key from an event verbalization.
pub trait ValueGenerator: Send + Sync {
    /// `Ok(None)` when no value can be extracted; never `Some("")`.
    fn generate(
        &self,
        key: &str,
        verbalized: &str,
        user_info: &str,
    ) -> Result<Option<String>, ExtractError>;
}

/// Notable people and places, one `role: name` entry per line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct UserInfo {
    pub entries: Vec<(String, String)>,
}

impl UserInfo {
    pub fn parse(text: &str) -> Self {
        let entries = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| l.split_once(':'))
            .map(|(role, name)| (role.trim().to_lowercase(), name.trim().to_string()))
            .filter(|(_, name)| !name.is_empty())
            .collect();
        UserInfo { entries }
    }

    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|(r, n)| format!("{r}: {n}\n"))
            .collect()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(_, n)| n.as_str())
    }
}

/// Splits `k: v | k: v` back into pairs.
pub fn split_verbalization(text: &str) -> Vec<(&str, &str)> {
    text.split(" | ")
        .filter_map(|part| part.split_once(": "))
        .map(|(k, v)| (k.trim(), v.trim()))
        .collect()
}

const CUISINES: &[(&str, &[&str])] = &[
    (
        "Italian",
        &[
            "pizza",
            "pasta",
            "lasagna",
            "risotto",
            "trattoria",
            "spaghetti",
            "gnocchi",
            "tiramisu",
            "carbonara",
            "pizzeria",
        ],
    ),
    (
        "Japanese",
        &["sushi", "ramen", "tempura", "udon", "sashimi", "izakaya"],
    ),
    (
        "Mexican",
        &[
            "taco",
            "tacos",
            "burrito",
            "burritos",
            "quesadilla",
            "enchilada",
            "nachos",
        ],
    ),
    (
        "Indian",
        &["curry", "naan", "tandoori", "biryani", "masala", "dal"],
    ),
    (
        "Chinese",
        &[
            "dumplings",
            "dim sum",
            "peking",
            "wonton",
            "chow mein",
            "kung pao",
        ],
    ),
    ("Thai", &["pad thai", "tom yum", "green curry", "som tam"]),
    (
        "Greek",
        &["gyros", "souvlaki", "moussaka", "tzatziki", "feta"],
    ),
    (
        "French",
        &[
            "croissant",
            "baguette",
            "ratatouille",
            "crepe",
            "crepes",
            "bistro",
        ],
    ),
    (
        "American",
        &["burger", "burgers", "hot dog", "barbecue", "bbq"],
    ),
    ("Turkish", &["kebab", "doner", "baklava", "lahmacun"]),
    ("Spanish", &["paella", "tapas", "churros"]),
];

static LOCATION: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\b(?:at|in)\s+(?:the\s+)?(\p{Lu}[\w'’-]*(?:\s+\p{Lu}[\w'’-]*)*)").unwrap()
});
static ISO_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b\d{4}-\d{2}-\d{2}\b").unwrap());
static CLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b\d{2}:\d{2}(?::\d{2})?\b").unwrap());
static AMOUNT: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?:[$€£]\s*\d+(?:\.\d+)?|\b\d+(?:\.\d+)?\s*(?:EUR|USD|GBP|€|\$|£))").unwrap()
});

fn family(key: &str, words: &[&str]) -> bool {
    key.split('_').any(|part| words.contains(&part))
}

fn word_match(haystack_lower: &str, needle: &str) -> bool {
    let needle = needle.to_lowercase();
    haystack_lower.match_indices(&needle).any(|(i, _)| {
        let before = haystack_lower[..i].chars().next_back();
        let after = haystack_lower[i + needle.len()..].chars().next();
        !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric)
    })
}

/// Keyword and pattern rules per key family, plus a fallback that reads an
/// attribute whose key names the requested key.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleGenerator;

impl RuleGenerator {
    fn by_key_name(key: &str, pairs: &[(&str, &str)]) -> Option<String> {
        let wanted = token_set(&key.replace('_', " "));
        if wanted.is_empty() {
            return None;
        }
        pairs
            .iter()
            .filter(|(k, _)| *k != "source" || key == "source")
            .find(|(k, _)| {
                let have: BTreeSet<String> = token_set(&k.replace('_', " "));
                !have.is_empty() && (wanted.is_subset(&have) || have.is_subset(&wanted))
            })
            .map(|(_, v)| v.to_string())
    }

    /// A `key phrase: value` fact inside free text, e.g. `price: 5.99 EUR;`.
    /// The value runs to the next `;`, newline or end of text.
    fn labelled(key: &str, values: &[&str]) -> Option<String> {
        let phrase = key.replace('_', " ");
        let re = Regex::new(&format!(
            r"(?i)(?:^|[^\w]){}\s*:\s*([^;\n]+)",
            regex::escape(&phrase)
        ))
        .ok()?;
        values.iter().find_map(|v| {
            re.captures(v).map(|c| {
                let raw = c[1].trim();
                raw.strip_suffix(['.', '!'])
                    .unwrap_or(raw)
                    .trim()
                    .to_string()
            })
        })
    }

    fn cuisine(text_lower: &str) -> Option<String> {
        CUISINES
            .iter()
            .find(|(_, words)| words.iter().any(|w| word_match(text_lower, w)))
            .map(|(name, _)| name.to_string())
            .or_else(|| {
                CUISINES
                    .iter()
                    .find(|(name, _)| word_match(text_lower, name))
                    .map(|(name, _)| name.to_string())
            })
    }

    fn people(text_lower: &str, info: &UserInfo) -> Option<String> {
        let mut found: Vec<&str> = Vec::new();
        for name in info.names() {
            let first = name.split_whitespace().next().unwrap_or(name);
            if (word_match(text_lower, name) || word_match(text_lower, first))
                && !found.contains(&name)
            {
                found.push(name);
            }
        }
        (!found.is_empty()).then(|| found.join(", "))
    }
}

impl ValueGenerator for RuleGenerator {
    fn generate(
        &self,
        key: &str,
        verbalized: &str,
        user_info: &str,
    ) -> Result<Option<String>, ExtractError> {
        let key = crate::event::normalize_key(key);
        let pairs = split_verbalization(verbalized);
        if let Some(v) = Self::by_key_name(&key, &pairs) {
            return Ok(Some(v));
        }
        let values: Vec<&str> = pairs
            .iter()
            .filter(|(k, _)| *k != "source")
            .map(|(_, v)| *v)
            .collect();
        if let Some(v) = Self::labelled(&key, &values).filter(|v| !v.is_empty()) {
            return Ok(Some(v));
        }
        let text = values.join(" | ");
        let lower = text.to_lowercase();
        let out = if family(&key, &["cuisine", "food", "dish"]) {
            Self::cuisine(&lower)
        } else if family(
            &key,
            &[
                "participants",
                "people",
                "persons",
                "friends",
                "companions",
                "attendees",
                "with",
            ],
        ) {
            Self::people(&lower, &UserInfo::parse(user_info))
        } else if family(
            &key,
            &["location", "place", "city", "venue", "where", "destination"],
        ) {
            LOCATION.captures(&text).map(|c| c[1].to_string())
        } else if family(&key, &["date", "day"]) {
            ISO_DATE.find(&text).map(|m| m.as_str().to_string())
        } else if family(&key, &["time"]) {
            CLOCK.find(&text).map(|m| m.as_str().to_string())
        } else if family(&key, &["price", "cost", "amount", "spent", "paid"]) {
            AMOUNT.find(&text).map(|m| m.as_str().to_string())
        } else {
            None
        };
        Ok(out.filter(|v| !v.trim().is_empty()))
    }
}

#[derive(Serialize)]
struct GenerateRequest<'a> {
    key: &'a str,
    event: &'a str,
    user_info: &'a str,
}

#[derive(Deserialize)]
struct GenerateResponse {
    value: Option<String>,
}

/// Learned generator behind the JSON-over-HTTP plug-in contract:
/// `{key, event, user_info}` in, `{value}` out (null when absent).
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    endpoint: HttpEndpoint,
}

impl HttpGenerator {
    pub fn new(url: impl Into<String>, timeout: Duration, max_retries: usize) -> Self {
        HttpGenerator {
            endpoint: HttpEndpoint::new(url, timeout, max_retries),
        }
    }
}

impl ValueGenerator for HttpGenerator {
    fn generate(
        &self,
        key: &str,
        verbalized: &str,
        user_info: &str,
    ) -> Result<Option<String>, ExtractError> {
        let resp: GenerateResponse = self.endpoint.call(&GenerateRequest {
            key,
            event: verbalized,
            user_info,
        })?;
        Ok(resp.value.filter(|v| !v.trim().is_empty()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pizza_oven_is_italian() {
        let v = "body: The new pizza oven works great, come over on Friday | source: mail | subject: Dinner";
        assert_eq!(
            RuleGenerator.generate("cuisine", v, "").unwrap().as_deref(),
            Some("Italian")
        );
        assert_eq!(
            RuleGenerator
                .generate("cuisine", "text: went running", "")
                .unwrap(),
            None
        );
    }

    #[test]
    fn people_come_from_user_info() {
        let info = "friend: Robert Miller\nparent: Lucia Hernández\n";
        let v = "text: Dinner with robert and Lucia Hernández tonight";
        assert_eq!(
            RuleGenerator
                .generate("participants", v, info)
                .unwrap()
                .as_deref(),
            Some("Robert Miller, Lucia Hernández")
        );
        assert_eq!(UserInfo::parse(info).entries.len(), 2);
    }

    #[test]
    fn key_names_and_locations() {
        let v = "artist_names: A, B | source: music_stream | song_name: X";
        assert_eq!(
            RuleGenerator.generate("artist", v, "").unwrap().as_deref(),
            Some("A, B")
        );
        let v = "text: Great game in Central Park today";
        assert_eq!(
            RuleGenerator
                .generate("location", v, "")
                .unwrap()
                .as_deref(),
            Some("Central Park")
        );
        let v = "product: Coffee | price: 5.99 EUR";
        assert_eq!(
            RuleGenerator.generate("price", v, "").unwrap().as_deref(),
            Some("5.99 EUR")
        );
    }

    #[test]
    fn labelled_facts_in_text() {
        let v = "source: social_media | text: Order arrived. product: Cosmic Funk; product quantity: 2; price: 5.99 EUR.";
        assert_eq!(
            RuleGenerator.generate("price", v, "").unwrap().as_deref(),
            Some("5.99 EUR")
        );
        assert_eq!(
            RuleGenerator
                .generate("product_quantity", v, "")
                .unwrap()
                .as_deref(),
            Some("2")
        );
        assert_eq!(
            RuleGenerator.generate("product", v, "").unwrap().as_deref(),
            Some("Cosmic Funk")
        );
        let v = "text: Dinner. participants: Ana Ruiz, Jo Díaz; place type: bar";
        assert_eq!(
            RuleGenerator
                .generate("participants", v, "")
                .unwrap()
                .as_deref(),
            Some("Ana Ruiz, Jo Díaz")
        );
        assert_eq!(
            RuleGenerator
                .generate("place_type", v, "")
                .unwrap()
                .as_deref(),
            Some("bar")
        );
    }
}
