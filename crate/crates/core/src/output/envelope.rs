use serde_json::Value;

/// End (exclusive) of the balanced `{...}` starting at `start`, skipping braces
/// inside strings.
fn balanced_end(bytes: &[u8], start: usize) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_string {
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match b {
            b'"' => in_string = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

/// Drops `//` line comments and trailing commas before `]` or `}`, outside strings.
fn strip_lenient(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        if in_string {
            out.push(b);
            match b {
                _ if escaped => escaped = false,
                b'\\' => escaped = true,
                b'"' => in_string = false,
                _ => {}
            }
            i += 1;
            continue;
        }
        if b == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if b == b',' {
            let next = bytes[i + 1..]
                .iter()
                .position(|c| !c.is_ascii_whitespace())
                .map(|p| bytes[i + 1 + p]);
            let next = match next {
                Some(b'/') => None,
                other => other,
            };
            if matches!(next, Some(b']') | Some(b'}')) {
                i += 1;
                continue;
            }
        }
        if b == b'"' {
            in_string = true;
        }
        out.push(b);
        i += 1;
    }
    String::from_utf8(out).expect("only ASCII bytes removed")
}

fn parse_object(text: &str) -> Option<Value> {
    match serde_json::from_str::<Value>(text) {
        Ok(v @ Value::Object(_)) => Some(v),
        Ok(_) => None,
        Err(_) => match serde_json::from_str::<Value>(&strip_lenient(text)) {
            Ok(v @ Value::Object(_)) => Some(v),
            _ => None,
        },
    }
}

/// The first balanced JSON object in `raw` that parses, ignoring code fences
/// and surrounding prose. `//` comments and trailing commas are tolerated.
pub fn extract_json_object(raw: &str) -> Option<Value> {
    let bytes = raw.as_bytes();
    let mut from = 0;
    while let Some(off) = raw[from..].find('{') {
        let start = from + off;
        if let Some(end) = balanced_end(bytes, start) {
            if let Some(v) = parse_object(&raw[start..end]) {
                return Some(v);
            }
        }
        from = start + 1;
    }
    None
}
