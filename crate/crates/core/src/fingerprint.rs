use sha2::{Digest, Sha256};

/// Trims and collapses every whitespace run to a single space.
pub fn normalize_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// 16 lowercase hex digits: the first 8 bytes of SHA-256 over `text`.
pub fn fingerprint(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Fingerprint of a prompt after whitespace normalization, so cosmetic
/// template edits keep recorded fixtures valid.
pub fn prompt_fingerprint(prompt: &str) -> String {
    fingerprint(&normalize_whitespace(prompt))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_hex_digits() {
        let fp = prompt_fingerprint("study GraphQL within 2 weeks");
        assert_eq!(fp.len(), 16);
        assert!(fp
            .chars()
            .all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
    }

    #[test]
    fn whitespace_insensitive() {
        assert_eq!(
            prompt_fingerprint("  study\tGraphQL\n\n within 2   weeks "),
            prompt_fingerprint("study GraphQL within 2 weeks")
        );
        assert_ne!(prompt_fingerprint("a b"), prompt_fingerprint("ab"));
    }

    #[test]
    fn known_value() {
        // sha256("abc") = ba7816bf8f01cfea...
        assert_eq!(fingerprint("abc"), "ba7816bf8f01cfea");
    }
}
