//! Human-readable clause dump, one line per clause:
//! `+1 w=3: X1 AND NOT X3`, with `TRUE` for clauses without literals.

use super::TmModel;

/// Feature `i` is named `X{i+1}` unless names are supplied.
pub fn literal_name(literal: usize, names: Option<&[String]>) -> String {
    let feature = literal / 2;
    let base = match names {
        Some(n) => n[feature].clone(),
        None => format!("X{}", feature + 1),
    };
    if literal % 2 == 0 {
        base
    } else {
        format!("NOT {base}")
    }
}

pub fn export_rules(model: &TmModel, names: Option<&[String]>) -> String {
    let mut out = String::new();
    for clause in model.clauses() {
        let body: Vec<String> = clause.included_literals().map(|l| literal_name(l, names)).collect();
        let body = if body.is_empty() { "TRUE".to_string() } else { body.join(" AND ") };
        out.push_str(&format!("{:+} w={}: {}\n", clause.polarity().sign(), clause.weight(), body));
    }
    out
}
