//! Versioned prompt templates.
//!
//! Placeholders are `{name}`; any other brace text is literal.

/// Identifier of a template asset, used as part of cache keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Template {
    pub id: &'static str,
    pub text: &'static str,
}

pub const QA_DEFAULT: Template = Template {
    id: "qa_default.v1",
    text: include_str!("../../templates/qa_default.v1.txt"),
};

pub const NLV: Template = Template {
    id: "nlv.v1",
    text: include_str!("../../templates/nlv.v1.txt"),
};

pub const AGNEWS: Template = Template {
    id: "agnews.v1",
    text: include_str!("../../templates/agnews.v1.txt"),
};

impl Template {
    /// Single-pass substitution: inserted values are never re-scanned.
    pub fn render(&self, values: &[(&str, &str)]) -> String {
        let text = self.text;
        let mut out = String::with_capacity(text.len() + 64);
        let mut rest = text;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let after = &rest[open + 1..];
            let hit = after.find('}').and_then(|close| {
                let name = &after[..close];
                values
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|(_, v)| (close, *v))
            });
            match hit {
                Some((close, v)) => {
                    out.push_str(v);
                    rest = &after[close + 1..];
                }
                None => {
                    out.push('{');
                    rest = after;
                }
            }
        }
        out.push_str(rest);
        out
    }
}

/// Letter for option `i`: A, B, ..., Z, then AA, AB, ...
pub fn option_letter(i: usize) -> String {
    let mut n = i + 1;
    let mut s = Vec::new();
    while n > 0 {
        n -= 1;
        s.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    s.reverse();
    String::from_utf8(s).unwrap()
}

/// `{ A. first, B. second, ... }`
pub fn lettered_choices(options: &[String]) -> String {
    let items: Vec<String> = options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("{}. {o}", option_letter(i)))
        .collect();
    format!("{{ {} }}", items.join(", "))
}

pub fn build_nlv_prompt(context: &str, statement: &str) -> String {
    NLV.render(&[("context", context), ("statement", statement)])
}

pub fn build_qa_prompt(context: &str, question: &str, options: &[String]) -> String {
    let choices = lettered_choices(options);
    QA_DEFAULT.render(&[("context", context), ("question", question), ("choices", &choices)])
}

pub fn build_agnews_prompt(context: &str) -> String {
    AGNEWS.render(&[("context", context)])
}
