use alloc::string::String;

pub const MENTION_PLACEHOLDER: &str = "[MENTION]";
pub const EMAIL_PLACEHOLDER: &str = "[EMAIL]";
pub const URL_PLACEHOLDER: &str = "[URL]";

/// Replaces mention handles (`@user`, `@user@host`), e-mail addresses and
/// URLs with fixed placeholders.
///
/// A single left-to-right pass can leave fragments that only become
/// recognisable once their neighbour was replaced (`a@b.org@c.org`), so the
/// pass is repeated until the text is stable. Every replacement removes at
/// least one `@`, `://` or `www.` and placeholders contain none of them, so
/// the loop terminates and the result is a fixed point.
pub fn scrub_pii(raw: &str) -> String {
    let mut current = scrub_pass(raw);
    loop {
        let next = scrub_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

fn scrub_pass(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < bytes.len() {
        let prev = text[..i].chars().next_back();

        if let Some(end) = match_url(bytes, i, prev) {
            out.push_str(URL_PLACEHOLDER);
            i = end;
            continue;
        }
        if bytes[i] == b'@' && !prev.is_some_and(is_handle_char) {
            if let Some(end) = match_mention(bytes, i) {
                out.push_str(MENTION_PLACEHOLDER);
                i = end;
                continue;
            }
        }
        if is_email_local(bytes[i]) && !prev.is_some_and(|c| c.is_ascii() && is_email_local(c as u8)) {
            if let Some(end) = match_email(bytes, i) {
                out.push_str(EMAIL_PLACEHOLDER);
                i = end;
                continue;
            }
        }

        let ch = text[i..].chars().next().expect("index on char boundary");
        out.push(ch);
        i += ch.len_utf8();
    }
    out
}

fn is_handle_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_email_local(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'%' | b'+' | b'-')
}

fn is_label(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'-'
}

fn starts_with_ci(bytes: &[u8], at: usize, pat: &[u8]) -> bool {
    bytes.len() >= at + pat.len() && bytes[at..at + pat.len()].eq_ignore_ascii_case(pat)
}

fn match_url(bytes: &[u8], start: usize, prev: Option<char>) -> Option<usize> {
    let body = if starts_with_ci(bytes, start, b"https://") {
        start + 8
    } else if starts_with_ci(bytes, start, b"http://") {
        start + 7
    } else if starts_with_ci(bytes, start, b"www.")
        && !prev.is_some_and(|c| c.is_alphanumeric() || c == '.')
    {
        start + 4
    } else {
        return None;
    };
    let mut end = body;
    while end < bytes.len() {
        let b = bytes[end];
        if b.is_ascii_whitespace() || matches!(b, b'<' | b'>' | b'"' | b'[' | b']') {
            break;
        }
        end += 1;
    }
    while end > body && matches!(bytes[end - 1], b'.' | b',' | b';' | b':' | b'!' | b'?' | b')' | b'\'') {
        end -= 1;
    }
    if end == body && bytes[start] != b'h' && bytes[start] != b'H' {
        // bare "www." with nothing after it
        return None;
    }
    Some(end)
}

/// Consumes `[A-Za-z0-9-]+(\.[A-Za-z0-9-]+)+` and returns its end, or `None`
/// when fewer than two labels are present.
fn match_domain(bytes: &[u8], start: usize) -> Option<usize> {
    let mut end = start;
    let mut labels = 0;
    let mut last_good = None;
    loop {
        let label_start = end;
        while end < bytes.len() && is_label(bytes[end]) {
            end += 1;
        }
        if end == label_start {
            break;
        }
        labels += 1;
        if labels >= 2 {
            last_good = Some(end);
        }
        if end + 1 < bytes.len() && bytes[end] == b'.' && is_label(bytes[end + 1]) {
            end += 1;
        } else {
            break;
        }
    }
    last_good
}

fn match_mention(bytes: &[u8], at: usize) -> Option<usize> {
    let user_start = at + 1;
    let mut end = user_start;
    while end < bytes.len() && (is_handle_char(bytes[end] as char) || matches!(bytes[end], b'.' | b'-')) {
        end += 1;
    }
    while end > user_start && matches!(bytes[end - 1], b'.' | b'-') {
        end -= 1;
    }
    if end == user_start {
        return None;
    }
    if end < bytes.len() && bytes[end] == b'@' {
        if let Some(host_end) = match_domain(bytes, end + 1) {
            return Some(host_end);
        }
    }
    Some(end)
}

fn match_email(bytes: &[u8], start: usize) -> Option<usize> {
    let mut at = start;
    while at < bytes.len() && is_email_local(bytes[at]) {
        at += 1;
    }
    if at == start || at >= bytes.len() || bytes[at] != b'@' {
        return None;
    }
    match_domain(bytes, at + 1)
}
