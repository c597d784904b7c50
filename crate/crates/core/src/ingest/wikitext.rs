//! Best-effort wiki markup stripping.
//!
//! This is a convenience reader, not a faithful wikitext renderer: templates,
//! tables, refs, comments and link plumbing are dropped; visible text is
//! kept. Every pass is linear and panic-free on arbitrary input.

/// Strip wiki markup from page text, keeping visible prose.
pub fn strip_wikitext(text: &str) -> String {
    let text = strip_comments(text);
    let text = strip_templates(&text);
    let text = strip_tables(&text);
    let text = strip_refs(&text);
    let text = rewrite_wiki_links(&text);
    let text = rewrite_external_links(&text);
    let text = strip_tags(&text);
    let text = strip_quotes(&text);
    let text = clean_lines(&text);
    decode_entities(&text)
}

fn strip_comments(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("<!--") {
        out.push_str(&rest[..start]);
        match rest[start..].find("-->") {
            Some(end) => rest = &rest[start + end + 3..],
            // Unclosed comment swallows the remainder.
            None => return out,
        }
    }
    out.push_str(rest);
    out
}

/// Remove `{{...}}` blocks, tracking nesting. An unclosed opener drops the
/// remainder of the text.
fn strip_templates(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' && i + 1 < bytes.len() && bytes[i + 1] == b'{' {
            depth += 1;
            i += 2;
        } else if depth > 0 && bytes[i] == b'}' && i + 1 < bytes.len() && bytes[i + 1] == b'}' {
            depth -= 1;
            i += 2;
        } else {
            if depth == 0 {
                // Advance by whole characters only outside templates.
                let c = text[i..].chars().next().expect("in bounds");
                out.push(c);
                i += c.len_utf8();
            } else {
                i += 1;
            }
        }
    }
    out
}

/// Drop table blocks: lines from `{|` through `|}` inclusive.
fn strip_tables(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut depth = 0usize;
    for line in text.lines() {
        let trimmed = line.trim_start();
        if trimmed.starts_with("{|") {
            depth += 1;
            continue;
        }
        if depth > 0 {
            if trimmed.starts_with("|}") {
                depth -= 1;
            }
            continue;
        }
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn strip_refs(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let lower = rest.to_ascii_lowercase();
        let Some(start) = lower.find("<ref") else {
            out.push_str(rest);
            return out;
        };
        out.push_str(&rest[..start]);
        let after = &rest[start..];
        let after_lower = &lower[start..];
        // Self-closing <ref ... /> or a paired <ref>...</ref>.
        let self_close = after.find("/>").filter(|&p| {
            after[..p].find('>').is_none()
        });
        if let Some(p) = self_close {
            rest = &after[p + 2..];
            continue;
        }
        match after_lower.find("</ref>") {
            Some(end) => rest = &after[end + 6..],
            None => return out,
        }
    }
}

/// `[[target|label]]` -> `label`, `[[target]]` -> `target`; file, image and
/// category links are dropped entirely.
fn rewrite_wiki_links(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find("[[") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        // Find the matching ]] allowing one level of nesting (image captions
        // may contain links).
        let mut depth = 1usize;
        let mut end = None;
        let bytes = after.as_bytes();
        let mut i = 0;
        while i + 1 < bytes.len() {
            if bytes[i] == b'[' && bytes[i + 1] == b'[' {
                depth += 1;
                i += 2;
            } else if bytes[i] == b']' && bytes[i + 1] == b']' {
                depth -= 1;
                if depth == 0 {
                    end = Some(i);
                    break;
                }
                i += 2;
            } else {
                i += 1;
            }
        }
        let Some(end) = end else {
            // Unclosed link: keep the brackets as literal text.
            out.push_str("[[");
            rest = after;
            continue;
        };
        let inner = &after[..end];
        let lower = inner.to_ascii_lowercase();
        let dropped = ["file:", "image:", "category:"]
            .iter()
            .any(|p| lower.starts_with(p));
        if !dropped {
            let visible = match inner.rfind('|') {
                Some(p) => &inner[p + 1..],
                None => inner,
            };
            out.push_str(visible);
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    out
}

/// `[url label]` -> `label`, bare `[url]` -> dropped.
fn rewrite_external_links(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('[') {
        let after = &rest[start + 1..];
        let is_url = after.starts_with("http://")
            || after.starts_with("https://")
            || after.starts_with("ftp://")
            || after.starts_with("//");
        if !is_url {
            out.push_str(&rest[..start + 1]);
            rest = after;
            continue;
        }
        out.push_str(&rest[..start]);
        match after.find(']') {
            Some(end) => {
                let inner = &after[..end];
                if let Some(space) = inner.find(' ') {
                    out.push_str(&inner[space + 1..]);
                }
                rest = &after[end + 1..];
            }
            None => {
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Drop remaining `<...>` tag markers, keeping inner text.
fn strip_tags(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        out.push_str(&rest[..start]);
        match rest[start..].find('>') {
            Some(end) => rest = &rest[start + end + 1..],
            None => {
                out.push_str(&rest[start..]);
                return out;
            }
        }
    }
    out.push_str(rest);
    out
}

fn strip_quotes(text: &str) -> String {
    text.replace("'''", "").replace("''", "")
}

/// Per-line cleanup: unwrap `== headers ==` and drop list markers.
fn clean_lines(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        let trimmed = line.trim_start();
        let cleaned = if trimmed.starts_with('=') && trimmed.trim_end().ends_with('=') {
            trimmed.trim_matches(|c| c == '=' || c == ' ')
        } else {
            trimmed.trim_start_matches(['*', '#', ':', ';']).trim_start()
        };
        if trimmed.is_empty() {
            out.push('\n');
        } else {
            out.push_str(cleaned);
            out.push('\n');
        }
    }
    out
}

fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(start) = rest.find('&') {
        out.push_str(&rest[..start]);
        let after = &rest[start..];
        let Some(semi) = after.find(';').filter(|&p| p <= 10) else {
            out.push('&');
            rest = &after[1..];
            continue;
        };
        let entity = &after[1..semi];
        let decoded = match entity {
            "amp" => Some('&'),
            "lt" => Some('<'),
            "gt" => Some('>'),
            "quot" => Some('"'),
            "apos" | "#39" => Some('\''),
            "nbsp" => Some(' '),
            "ndash" | "mdash" => Some('-'),
            _ => entity
                .strip_prefix("#x")
                .or_else(|| entity.strip_prefix("#X"))
                .and_then(|h| u32::from_str_radix(h, 16).ok())
                .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                .and_then(char::from_u32),
        };
        match decoded {
            Some(c) => {
                out.push(c);
                rest = &after[semi + 1..];
            }
            None => {
                out.push('&');
                rest = &after[1..];
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn templates_and_comments_dropped() {
        let got = strip_wikitext("Alpha {{infobox|x={{nested}}}} bravo <!-- note --> charlie");
        assert_eq!(got.trim(), "Alpha  bravo  charlie");
    }

    #[test]
    fn links_keep_visible_text() {
        assert_eq!(strip_wikitext("[[A poem]]").trim(), "A poem");
        assert_eq!(strip_wikitext("[[Target|Shown]]").trim(), "Shown");
        assert_eq!(strip_wikitext("[[File:x.jpg|thumb|[[cap]]]]He said").trim(), "He said");
        assert_eq!(strip_wikitext("see [https://example.org the site]").trim(), "see the site");
        assert_eq!(strip_wikitext("see [https://example.org]").trim(), "see");
    }

    #[test]
    fn tables_and_refs_dropped() {
        let src = "Before\n{| class=x\n| cell\n|}\nAfter<ref>noise</ref> end <ref name=a/>";
        let got = strip_wikitext(src);
        assert!(got.contains("Before"));
        assert!(!got.contains("cell"));
        assert!(got.contains("After end"));
        assert!(!got.contains("noise"));
    }

    #[test]
    fn poem_tags_keep_lines() {
        let src = "<poem>\nA boat beneath a sunny sky\nLingering onward dreamily\n</poem>";
        let got = strip_wikitext(src);
        let lines: Vec<&str> = got.lines().filter(|l| !l.trim().is_empty()).collect();
        assert_eq!(lines, vec!["A boat beneath a sunny sky", "Lingering onward dreamily"]);
    }

    #[test]
    fn headers_and_lists_unwrapped() {
        let got = strip_wikitext("== Title ==\n* item one\n# item two\n");
        let lines: Vec<&str> = got.lines().collect();
        assert_eq!(lines, vec!["Title", "item one", "item two"]);
    }

    #[test]
    fn entities_decoded() {
        assert_eq!(strip_wikitext("a &amp; b &#65; &#x42; &nbsp;c").trim(), "a & b A B  c");
        // Stray ampersands survive.
        assert_eq!(strip_wikitext("AT&T & Co").trim(), "AT&T & Co");
    }

    #[test]
    fn bold_italic_markers_dropped() {
        assert_eq!(strip_wikitext("'''Bold''' and ''italic''").trim(), "Bold and italic");
    }

    #[test]
    fn degenerate_inputs_do_not_panic() {
        for s in ["{{", "{{{{", "[[", "[[x|", "<", "<ref>", "&#xffffffff;", "&;", "{|", "''"] {
            let _ = strip_wikitext(s);
        }
    }
}
