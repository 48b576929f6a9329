use serde::{Deserialize, Serialize};

use crate::model::Query;

pub const OFFLINE_TEMPLATE: &str = include_str!("../../assets/offline_prompt.v1.txt");
pub const ONLINE_TEMPLATE: &str = include_str!("../../assets/online_prompt.v1.txt");
pub const TEMPLATE_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    Offline,
    Online,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub mode: PromptMode,
    pub template_text: &'static str,
}

impl PromptTemplate {
    pub const OFFLINE: Self = Self {
        mode: PromptMode::Offline,
        template_text: OFFLINE_TEMPLATE,
    };
    pub const ONLINE: Self = Self {
        mode: PromptMode::Online,
        template_text: ONLINE_TEMPLATE,
    };

    /// Substitutes placeholders in one left-to-right pass. Substituted text is never
    /// rescanned, so braces inside a query stay literal.
    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let mut out = String::with_capacity(self.template_text.len() + 64);
        let mut rest = self.template_text;
        'scan: while let Some(open) = rest.find('{') {
            for (name, value) in values {
                let tail = &rest[open + 1..];
                if tail.starts_with(name) && tail[name.len()..].starts_with('}') {
                    out.push_str(&rest[..open]);
                    out.push_str(value);
                    rest = &tail[name.len() + 1..];
                    continue 'scan;
                }
            }
            out.push_str(&rest[..=open]);
            rest = &rest[open + 1..];
        }
        out.push_str(rest);
        out
    }
}

/// Offline selector prompt for a grid of `num_keyframes` candidates.
pub fn build_offline_prompt(num_keyframes: usize, query: &Query) -> String {
    PromptTemplate::OFFLINE.render(&[
        ("num_keyframes", &num_keyframes.to_string()),
        ("query", query.as_str()),
    ])
}

/// Per-frame Yes/No judgment prompt used by the streaming tracker.
pub fn build_online_prompt(query: &Query) -> String {
    PromptTemplate::ONLINE.render(&[("query", query.as_str())])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(s: &str) -> Query {
        Query::new(s).unwrap()
    }

    #[test]
    fn offline_tail() {
        let p = build_offline_prompt(7, &q("Q"));
        assert!(p.ends_with(
            "Here is a grid image with 7 keyframes. The user query is \"Q\". \
             Follow the instruction and output the index of the best keyframe."
        ));
        assert!(p.starts_with("You will act as a keyframe selection agent"));
        assert!(!p.contains("{num_keyframes}") && !p.contains("{query}"));
    }

    #[test]
    fn offline_only_touches_placeholders() {
        let p = build_offline_prompt(1, &q("Q"));
        assert!(p.contains("with 1 keyframes."));
        let expected = OFFLINE_TEMPLATE
            .replace("{num_keyframes}", "1")
            .replace("{query}", "Q");
        assert_eq!(p, expected);
        // Format braces in the instructions survive.
        assert!(p.contains("[{object_index: 1, keyframe: 4, object_description:"));
    }

    #[test]
    fn quotes_and_braces_are_literal() {
        let p = build_offline_prompt(3, &q("the \"red\" car"));
        assert!(p.contains("The user query is \"the \"red\" car\"."));
        let p = build_online_prompt(&q("a {query} b {num_keyframes}"));
        assert!(p.starts_with("Consider the query \"a {query} b {num_keyframes}\" for an object"));
    }

    #[test]
    fn online_prompt() {
        let p = build_online_prompt(&q("Who is the parent in the scene?"));
        assert!(p.starts_with("Consider the query \"Who is the parent in the scene?\" for an object tracking task."));
        assert!(p.ends_with("is <Yes./No.>\""));
        let p = build_online_prompt(&q("  x  "));
        assert!(p.contains("\"  x  \""));
    }

    #[test]
    fn templates_are_byte_stable() {
        assert_eq!(OFFLINE_TEMPLATE.len(), 3572);
        assert_eq!(ONLINE_TEMPLATE.len(), 410);
        assert_eq!(OFFLINE_TEMPLATE.matches("{num_keyframes}").count(), 1);
        assert_eq!(OFFLINE_TEMPLATE.matches("{query}").count(), 1);
        assert_eq!(ONLINE_TEMPLATE.matches("{query}").count(), 1);
    }
}
