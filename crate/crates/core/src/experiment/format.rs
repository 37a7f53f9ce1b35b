use std::fmt::Write as _;

/// C `printf("%.9g")`.
pub fn format_g9(v: f64) -> String {
    const PREC: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.*e}", (PREC - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PREC).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let decimals = (PREC - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `# config=<json>`, the header line, then one `%.9g` row per entry. LF endings.
pub fn render_csv(config_json: &str, header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = format!("# config={config_json}\n{}\n", header.join(","));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_g9(v)).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
