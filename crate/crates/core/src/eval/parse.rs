//! Lenient readers for raw model output.

use std::sync::OnceLock;

use regex::Regex;

use crate::geometry::Bbox2;
use crate::qa::GtBox;

fn answer_segment(text: &str) -> &str {
    // the last "ANSWER:" wins, so reasoning that quotes the format is skipped
    let lower = text.to_ascii_lowercase();
    match lower.rfind("answer:") {
        Some(i) => {
            let rest = &text[i + "answer:".len()..];
            rest.lines().next().unwrap_or("")
        }
        None => text,
    }
}

fn strip(s: &str) -> &str {
    s.trim().trim_matches(|c: char| matches!(c, '.' | ',' | ';' | ':' | '!' | '"' | '\'' | '*' | '`')).trim()
}

/// Option index from free text. Tried in order on the `ANSWER:` segment
/// (or the whole text): a bare 0-based index, a letter `A`–`D`, the exact
/// option text.
pub fn parse_mcq(text: &str, options: &[String]) -> Option<usize> {
    static LETTER: OnceLock<Regex> = OnceLock::new();
    let letter = LETTER.get_or_init(|| Regex::new(r"^\(?([A-D])\)?(?:[.:)\s]|$)").unwrap());
    let seg = strip(answer_segment(text));
    if !seg.is_empty() && seg.bytes().all(|b| b.is_ascii_digit()) {
        return seg.parse::<usize>().ok().filter(|&i| i < options.len());
    }
    if let Some(c) = letter.captures(seg) {
        let i = (c[1].as_bytes()[0] - b'A') as usize;
        return (i < options.len()).then_some(i);
    }
    let want = seg.to_lowercase();
    options.iter().position(|o| o.to_lowercase() == want)
}

/// First standalone non-negative integer token.
pub fn parse_count(text: &str) -> Option<u64> {
    let seg = answer_segment(text);
    let from = |s: &str| {
        s.split_whitespace().find_map(|tok| {
            let t = tok.trim_start_matches(['(', '[', '"', '\'', '*']);
            let t = t.trim_end_matches(|c: char| ".,;:!?)]\"'*".contains(c));
            (!t.is_empty() && t.bytes().all(|b| b.is_ascii_digit())).then(|| t.parse().ok()).flatten()
        })
    };
    from(seg).or_else(|| if seg.len() != text.len() { from(text) } else { None })
}

/// Boxes from a `BOXES: view x1 y1 x2 y2; ...` line. When no such line
/// parses, any line naming a cited view (by id or as "image N") followed by
/// four numbers is accepted. Coordinates are taken as written; ordering is
/// checked by the scorer.
pub fn parse_boxes(text: &str, view_ids: &[String]) -> Option<Vec<GtBox>> {
    static NUM4: OnceLock<Regex> = OnceLock::new();
    static IMAGE: OnceLock<Regex> = OnceLock::new();
    let num4 = NUM4.get_or_init(|| {
        let n = r"(-?\d+(?:\.\d+)?)";
        Regex::new(&format!(r"{n}[,\s]+{n}[,\s]+{n}[,\s]+{n}")).unwrap()
    });
    let image = IMAGE.get_or_init(|| Regex::new(r"(?i)\bimage\s*#?\s*(\d+)").unwrap());
    let view_of = |tok: &str| -> Option<String> {
        let t = strip(tok.trim_matches(|c: char| matches!(c, '[' | ']' | '(' | ')')));
        if view_ids.iter().any(|v| v == t) {
            return Some(t.to_string());
        }
        image.captures(t).and_then(|c| c[1].parse::<usize>().ok()).and_then(|n| view_ids.get(n.wrapping_sub(1)).cloned())
    };
    let four = |s: &str| -> Option<Bbox2> {
        let c = num4.captures(s)?;
        let v: Vec<f64> = (1..=4).map(|i| c[i].parse().unwrap_or(f64::NAN)).collect();
        Some(Bbox2::new(v[0], v[1], v[2], v[3]))
    };

    for line in text.lines().rev() {
        let l = line.trim();
        if l.len() < 6 || !l[..6].eq_ignore_ascii_case("boxes:") {
            continue;
        }
        let body = l[6..].trim();
        if body.is_empty() || body.eq_ignore_ascii_case("none") {
            return Some(vec![]);
        }
        let mut out = Vec::new();
        for part in body.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            // "image 2 ..." names the view in two tokens
            let (head, rest) = match image.find(part) {
                Some(m) if m.start() == 0 => (m.as_str(), &part[m.end()..]),
                _ => part.split_once(char::is_whitespace).unwrap_or((part, "")),
            };
            if let (Some(view_id), Some(bbox)) = (view_of(head), four(rest)) {
                out.push(GtBox { view_id, bbox });
            }
        }
        if !out.is_empty() {
            return Some(out);
        }
    }

    let mut out = Vec::new();
    for line in text.lines() {
        let Some(m) = num4.find(line) else { continue };
        let head = &line[..m.start()];
        let view = image
            .find_iter(head)
            .last()
            .and_then(|m| view_of(m.as_str()))
            .or_else(|| head.split(|c: char| c.is_whitespace() || c == ':' || c == ',').rev().find_map(view_of));
        if let (Some(view_id), Some(bbox)) = (view, four(&line[m.start()..])) {
            out.push(GtBox { view_id, bbox });
        }
    }
    (!out.is_empty()).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> Vec<String> {
        ["left", "right", "front-left", "back"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn mcq_rules_in_order() {
        let o = opts();
        assert_eq!(parse_mcq("2", &o), Some(2));
        assert_eq!(parse_mcq("C", &o), Some(2));
        assert_eq!(parse_mcq("(B) right", &o), Some(1));
        assert_eq!(parse_mcq("Front-Left.", &o), Some(2));
        assert_eq!(parse_mcq("Let me think. A is wrong.\nANSWER: D", &o), Some(3));
        assert_eq!(parse_mcq("answer: back", &o), Some(3));
        assert_eq!(parse_mcq("9", &o), None);
        assert_eq!(parse_mcq("D", &o[..3]), None);
        assert_eq!(parse_mcq("no idea", &o), None);
        assert_eq!(parse_mcq("", &o), None);
    }

    #[test]
    fn count_token() {
        assert_eq!(parse_count("there are 4 chairs"), Some(4));
        assert_eq!(parse_count("five"), None);
        assert_eq!(parse_count("-3 or maybe 2."), Some(2));
        assert_eq!(parse_count("3.5 then (7)"), Some(7));
        assert_eq!(parse_count("I see 2 in image 1.\nANSWER: 3"), Some(3));
        assert_eq!(parse_count("ANSWER: none, but 1 maybe"), Some(1));
        assert_eq!(parse_count("ANSWER: unsure\nthere were 6"), Some(6));
    }

    #[test]
    fn boxes_strict_and_lenient() {
        let views = vec!["v0".to_string(), "v3".to_string()];
        let b = parse_boxes("BOXES: v0 1 2 30 40; v3 5 5 9 9.5", &views).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[1].view_id, "v3");
        assert_eq!(b[1].bbox, Bbox2::new(5.0, 5.0, 9.0, 9.5));
        let b = parse_boxes("BOXES: image 2 1 1 4 4", &views).unwrap();
        assert_eq!(b[0].view_id, "v3");
        assert_eq!(parse_boxes("BOXES: none", &views), Some(vec![]));
        let b = parse_boxes("In image 1 the cup is at [10, 20, 30, 40].\nv3: 1,2,3,4", &views).unwrap();
        assert_eq!(b.iter().map(|g| g.view_id.as_str()).collect::<Vec<_>>(), ["v0", "v3"]);
        assert_eq!(parse_boxes("nothing here", &views), None);
        assert_eq!(parse_boxes("BOXES: v9 1 2 3 4", &views), None);
    }
}
