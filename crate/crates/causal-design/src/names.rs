//! Forgiving lookup of column names typed by people.

/// Initials of the capitalised words: `Ground_Floor_Area` → `GFA`,
/// `Number_of_Floors` → `NF`.
fn initials(name: &str) -> String {
    name.split('_')
        .filter_map(|w| w.chars().next())
        .filter(|c| c.is_ascii_uppercase())
        .collect()
}

/// Resolves `token` against `names`: exact match, then case-insensitive
/// match, then a unique initials abbreviation.
pub fn resolve<'a>(token: &str, names: &'a [String]) -> Result<&'a str, String> {
    if let Some(n) = names.iter().find(|n| n.as_str() == token) {
        return Ok(n);
    }
    let ci: Vec<&String> = names.iter().filter(|n| n.eq_ignore_ascii_case(token)).collect();
    if let [one] = ci[..] {
        return Ok(one);
    }
    let by_initials: Vec<&String> = names
        .iter()
        .filter(|n| initials(n).eq_ignore_ascii_case(token))
        .collect();
    match by_initials[..] {
        [one] => Ok(one),
        [] => Err(format!("unknown column {token}")),
        _ => Err(format!(
            "ambiguous column {token}: {}",
            by_initials.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
        )),
    }
}

/// Parses `NAME=VALUE`, resolving the name.
pub fn parse_assignment<'a>(text: &str, names: &'a [String]) -> Result<(&'a str, f64), String> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {text}"))?;
    let name = resolve(k.trim(), names)?;
    let value = v
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("value for {k} is not a number: {v}"))?;
    Ok((name, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use causal_design_core::dataset::columns;

    fn all() -> Vec<String> {
        let mut v: Vec<String> = columns::SAMPLED.iter().map(|s| s.to_string()).collect();
        v.extend(columns::DERIVED.iter().map(|s| s.to_string()));
        v.push(columns::HEATING_LOAD.into());
        v
    }

    #[test]
    fn abbreviations() {
        let names = all();
        assert_eq!(resolve("GFA", &names).unwrap(), "Ground_Floor_Area");
        assert_eq!(resolve("NF", &names).unwrap(), "Number_of_Floors");
        assert_eq!(resolve("height", &names).unwrap(), "Height");
        assert_eq!(resolve("WWR", &names).unwrap(), "WWR");
        assert_eq!(resolve("HL", &names).unwrap(), "Heating_Load");
        assert_eq!(resolve("EWA", &names).unwrap(), "External_Wall_Area");
        assert_eq!(resolve("H", &names).unwrap(), "Height");
        assert!(resolve("VW", &names).unwrap_err().starts_with("ambiguous"));
    }

    #[test]
    fn bad_tokens_are_echoed() {
        let names = all();
        assert_eq!(resolve("Colour", &names).unwrap_err(), "unknown column Colour");
        let err = parse_assignment("GFA=big", &names).unwrap_err();
        assert!(err.contains("big"));
        assert_eq!(parse_assignment("GFA = 300", &names).unwrap(), ("Ground_Floor_Area", 300.0));
    }
}
