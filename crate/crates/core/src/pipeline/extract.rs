#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no SQL found in response")]
pub struct NoSqlFound;

fn is_word(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

/// Byte offset of the first standalone SELECT or WITH.
fn find_statement_start(text: &str) -> Option<usize> {
    let lower = text.to_ascii_lowercase();
    let bytes = lower.as_bytes();
    (0..bytes.len()).find(|&i| {
        let before = i == 0 || !is_word(bytes[i - 1]);
        before
            && ["select", "with"].iter().any(|kw| {
                lower[i..].starts_with(kw) && bytes.get(i + kw.len()).is_none_or(|&c| !is_word(c))
            })
    })
}

/// Cuts after the first `;` outside quotes and collapses whitespace runs
/// outside quotes to single spaces.
fn terminate_and_normalize(sql: &str) -> String {
    let mut out = String::with_capacity(sql.len());
    let mut quote: Option<char> = None;
    let mut pending_space = false;
    for c in sql.chars() {
        match quote {
            Some(q) => {
                out.push(c);
                if c == q {
                    quote = None;
                }
            }
            None if c.is_whitespace() => pending_space = true,
            None => {
                if pending_space && !out.is_empty() {
                    out.push(' ');
                }
                pending_space = false;
                out.push(c);
                match c {
                    '\'' | '"' | '`' => quote = Some(c),
                    ';' => break,
                    _ => {}
                }
            }
        }
    }
    out
}

/// Takes the first fenced code block if any, else the whole text, then
/// keeps everything from the first SELECT/WITH up to a terminating `;`.
pub fn extract_sql_from_response(text: &str) -> Result<String, NoSqlFound> {
    let body = match text.find("```") {
        Some(open) => {
            let mut inner = &text[open + 3..];
            if let Some(nl) = inner.find('\n') {
                let info = inner[..nl].trim();
                if info
                    .chars()
                    .all(|c| c.is_alphanumeric() || c == '-' || c == '_')
                {
                    inner = &inner[nl + 1..];
                }
            }
            &inner[..inner.find("```").unwrap_or(inner.len())]
        }
        None => text,
    };
    let start = find_statement_start(body).ok_or(NoSqlFound)?;
    let sql = terminate_and_normalize(&body[start..]);
    if sql.is_empty() {
        Err(NoSqlFound)
    } else {
        Ok(sql)
    }
}
