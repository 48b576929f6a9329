//! Selector prompts and readers for the selector's free-text answers.

mod parse;
mod prompt;

pub use parse::{
    format_output_list, parse_binary_selectivity, parse_output_list, BinarySelectivity, Judgment,
    KeyframeChoice, ParseError, ParsedOutputList,
};
pub use prompt::{
    build_offline_prompt, build_online_prompt, PromptMode, PromptTemplate, OFFLINE_TEMPLATE,
    ONLINE_TEMPLATE, TEMPLATE_VERSION,
};
