use std::fmt;

/// A command failure. Domain failures carry the name of the underlying
/// error variant so scripts can match on it.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Domain { name: String, detail: String },
}

impl Failure {
    pub fn domain(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Failure::Domain { name: name.into(), detail: detail.into() }
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        Failure::domain("Io", format!("{}: {e}", path.display()))
    }
}

/// Innermost variant name of a nested error enum, read off its `Debug`
/// form: `Grid(InvalidDimension(4))` gives `InvalidDimension`.
pub fn variant_name(debug: &str) -> &str {
    let mut rest = debug;
    let mut name = "";
    loop {
        let end = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
        let ident = &rest[..end];
        if ident.chars().next().is_some_and(|c| c.is_ascii_uppercase()) {
            name = ident;
        }
        match rest[end..].strip_prefix('(') {
            Some(inner) if !ident.is_empty() => rest = inner,
            _ => return if name.is_empty() { "Error" } else { name },
        }
    }
}

impl<E: std::error::Error> From<E> for Failure {
    fn from(e: E) -> Self {
        let debug = format!("{e:?}");
        let name = variant_name(&debug).to_owned();
        let text = e.to_string();
        // Messages that already lead with the name keep only the remainder.
        let detail = match text.strip_prefix(name.as_str()) {
            Some(rest) => rest.trim_start_matches(':').trim_start().to_owned(),
            None => text,
        };
        Failure::domain(name, detail)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "error: {m}"),
            Failure::Domain { name, detail } => {
                // One line, whatever the detail contains.
                let detail = detail.replace('\n', " ");
                if detail.is_empty() {
                    write!(f, "error: {name}")
                } else {
                    write!(f, "error: {name}: {detail}")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_from_debug() {
        assert_eq!(variant_name("Grid(InvalidDimension(4))"), "InvalidDimension");
        assert_eq!(variant_name("Malformed(\"x(y)\")"), "Malformed");
        assert_eq!(variant_name("StaleTimestamp { timestamp: 1, now: 40 }"), "StaleTimestamp");
        assert_eq!(variant_name("ZeroLifetime"), "ZeroLifetime");
        assert_eq!(variant_name("UnknownScenario(\"Nope\")"), "UnknownScenario");
        assert_eq!(variant_name(""), "Error");
    }
}
