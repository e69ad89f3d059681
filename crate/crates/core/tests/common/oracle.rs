//! Straight-line reference scorer working on raw `serde_json::Value`s.
//! Shares nothing with the library except the trigram feature vectors.

use chrono::NaiveDate;
use extractbench::embedding::DeterministicBackend;
use serde_json::Value;

const TAU: f64 = 0.35;
const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleScore {
    pub reward: f64,
    /// "Passed", "InvalidJson" or "MissingRequired".
    pub gate: &'static str,
}

pub fn score(raw: &str, schema: &Value, gold: &Value) -> OracleScore {
    let Some(pred) = lenient_object(raw) else {
        return OracleScore { reward: 0.0, gate: "InvalidJson" };
    };
    let props = schema["properties"].as_object().unwrap();
    if props.keys().any(|k| !pred.contains_key(k)) {
        return OracleScore { reward: 0.0, gate: "MissingRequired" };
    }
    if props.is_empty() {
        return OracleScore { reward: 1.0, gate: "Passed" };
    }
    let mut total = 0.0;
    for k in props.keys() {
        total += sim(pred.get(k), &gold[k]);
    }
    OracleScore {
        reward: total / props.len() as f64,
        gate: "Passed",
    }
}

fn lenient_object(raw: &str) -> Option<serde_json::Map<String, Value>> {
    let mut t = raw.trim();
    if t.starts_with("```") {
        t = match t.find('\n') {
            Some(i) => &t[i + 1..],
            None => "",
        };
    }
    let t = t.trim_end();
    let t = t.strip_suffix("```").unwrap_or(t);
    let start = t.find('{')?;
    let bytes = t.as_bytes();
    let mut depth = 0i32;
    let mut in_str = false;
    let mut escaped = false;
    let mut end = None;
    for (i, &b) in bytes.iter().enumerate().skip(start) {
        if in_str {
            if escaped {
                escaped = false;
            } else if b == b'\\' {
                escaped = true;
            } else if b == b'"' {
                in_str = false;
            }
            continue;
        }
        match b {
            b'"' => in_str = true,
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    end = Some(i);
                    break;
                }
            }
            _ => {}
        }
    }
    match serde_json::from_str::<Value>(&t[start..=end?]) {
        Ok(Value::Object(m)) => Some(m),
        _ => None,
    }
}

fn sim(pred: Option<&Value>, gold: &Value) -> f64 {
    let Some(pred) = pred else { return 0.0 };
    if pred.is_null() || gold.is_null() {
        return if pred.is_null() && gold.is_null() { 1.0 } else { 0.0 };
    }
    if pred.is_array() || gold.is_array() {
        let as_list = |v: &Value| match v {
            Value::Array(a) => a.clone(),
            other => vec![other.clone()],
        };
        return list_sim(&as_list(pred), &as_list(gold));
    }
    match (pred, gold) {
        (Value::Number(p), Value::Number(g)) => {
            let (p, g) = (p.as_f64().unwrap(), g.as_f64().unwrap());
            let dev = (p - g).abs() / g.abs().max(EPS);
            if dev >= 1.0 {
                0.0
            } else {
                1.0 - dev
            }
        }
        (Value::Bool(p), Value::Bool(g)) => (p == g) as u8 as f64,
        (Value::Bool(b), Value::String(s)) | (Value::String(s), Value::Bool(b)) => {
            (s.trim().to_lowercase() == b.to_string()) as u8 as f64
        }
        (Value::Bool(_), _) | (_, Value::Bool(_)) => 0.0,
        (Value::String(p), Value::String(g)) => match (date(p), date(g)) {
            (Some(a), Some(b)) => 0.5f64.powf((a - b).num_days().abs() as f64 / 365.0),
            _ => text_sim(p, g),
        },
        (Value::Object(p), Value::Object(g)) => {
            if g.is_empty() {
                return 1.0;
            }
            g.iter().map(|(k, gv)| sim(p.get(k), gv)).sum::<f64>() / g.len() as f64
        }
        (p, g) => text_sim(&canon(p), &canon(g)),
    }
}

fn canon(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => {
            let f = n.as_f64().unwrap();
            if f.fract() == 0.0 && f.abs() < 9.0e15 {
                format!("{}", f as i64)
            } else {
                n.to_string()
            }
        }
        Value::Array(a) => format!("[{}]", a.iter().map(canon_json).collect::<Vec<_>>().join(",")),
        Value::Object(_) => canon_json(v),
        other => other.to_string(),
    }
}

fn canon_json(v: &Value) -> String {
    match v {
        Value::String(_) => v.to_string(),
        Value::Number(_) => canon(v),
        Value::Array(_) => canon(v),
        Value::Object(m) => format!(
            "{{{}}}",
            m.iter()
                .map(|(k, x)| format!("{}:{}", Value::String(k.clone()), canon_json(x)))
                .collect::<Vec<_>>()
                .join(",")
        ),
        other => other.to_string(),
    }
}

fn text_sim(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let (u, v) = (unit(a), unit(b));
    let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    dot.clamp(0.0, 1.0)
}

fn unit(text: &str) -> Vec<f64> {
    let mut f = DeterministicBackend::default().features(text);
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        f.iter_mut().for_each(|x| *x = 0.0);
        f[0] = 1.0;
    } else {
        f.iter_mut().for_each(|x| *x /= norm);
    }
    f
}

fn list_sim(p: &[Value], g: &[Value]) -> f64 {
    if p.is_empty() && g.is_empty() {
        return 1.0;
    }
    if p.is_empty() || g.is_empty() {
        return 0.0;
    }
    let s: Vec<Vec<f64>> = p.iter().map(|x| g.iter().map(|y| sim(Some(x), y)).collect()).collect();
    let best = best_assignment(&s, 0, &mut vec![false; g.len()]);
    2.0 * best / (p.len() + g.len()) as f64
}

/// Exhaustive search: each row takes a free column scoring above τ, or none.
pub fn best_assignment(s: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
    if row == s.len() {
        return 0.0;
    }
    let mut best = best_assignment(s, row + 1, used);
    for c in 0..used.len() {
        if !used[c] && s[row][c] > TAU {
            used[c] = true;
            best = best.max(s[row][c] + best_assignment(s, row + 1, used));
            used[c] = false;
        }
    }
    best
}

const MONTHS: [&str; 12] = [
    "january", "february", "march", "april", "may", "june", "july", "august", "september", "october", "november",
    "december",
];

fn date(s: &str) -> Option<NaiveDate> {
    let s = s.trim();
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    if s.len() == 4 && digits(s) {
        return NaiveDate::from_ymd_opt(s.parse().ok()?, 1, 1);
    }
    if s.len() == 10 && s.is_ascii() {
        let sep = &s[4..5];
        if (sep == "-" || sep == "/") && &s[7..8] == sep && digits(&s[..4]) && digits(&s[5..7]) && digits(&s[8..]) {
            return NaiveDate::from_ymd_opt(s[..4].parse().ok()?, s[5..7].parse().ok()?, s[8..].parse().ok()?);
        }
        return None;
    }
    let (md, year) = s.split_once(", ")?;
    let (month, day) = md.split_once(' ')?;
    if year.len() != 4 || !digits(year) || !digits(day) || day.len() > 2 {
        return None;
    }
    let lower = month.to_lowercase();
    let m = MONTHS.iter().position(|name| *name == lower || (lower.len() == 3 && name.starts_with(&lower)))?;
    NaiveDate::from_ymd_opt(year.parse().ok()?, m as u32 + 1, day.parse().ok()?)
}

/// Every matching as a row assignment vector (`None` = unmatched), with its
/// total. Only entries strictly above `tau` may pair.
pub fn all_matchings(s: &[Vec<f64>], tau: f64) -> Vec<(Vec<Option<usize>>, f64)> {
    fn go(s: &[Vec<f64>], tau: f64, row: usize, used: &mut Vec<bool>, cur: &mut Vec<Option<usize>>, total: f64, out: &mut Vec<(Vec<Option<usize>>, f64)>) {
        if row == s.len() {
            out.push((cur.clone(), total));
            return;
        }
        for c in 0..used.len() {
            if !used[c] && s[row][c] > tau {
                used[c] = true;
                cur.push(Some(c));
                go(s, tau, row + 1, used, cur, total + s[row][c], out);
                cur.pop();
                used[c] = false;
            }
        }
        cur.push(None);
        go(s, tau, row + 1, used, cur, total, out);
        cur.pop();
    }
    let cols = s.first().map_or(0, Vec::len);
    let mut out = Vec::new();
    go(s, tau, 0, &mut vec![false; cols], &mut Vec::new(), 0.0, &mut out);
    out
}

/// The optimal matching whose assignment vector is lexicographically
/// smallest, "unmatched" ranking after every column; totals within `eps`
/// of the best count as optimal.
pub fn lexicographic_optimum(s: &[Vec<f64>], tau: f64, eps: f64) -> (Vec<Option<usize>>, f64) {
    let all = all_matchings(s, tau);
    let best = all.iter().map(|(_, t)| *t).fold(f64::NEG_INFINITY, f64::max);
    let key = |a: &Vec<Option<usize>>| a.iter().map(|c| c.unwrap_or(usize::MAX)).collect::<Vec<_>>();
    all.into_iter()
        .filter(|(_, t)| *t >= best - eps)
        .min_by(|a, b| key(&a.0).cmp(&key(&b.0)))
        .map(|(a, _)| (a, best))
        .unwrap()
}
