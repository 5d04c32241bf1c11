//! Number formatting shared by the text exporters.

/// Formats `x` with at most `sig` significant digits, `%g` style: plain
/// decimal for moderate exponents, scientific otherwise, trailing zeros
/// trimmed.
pub fn format_sig(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..sig as i32).contains(&exp) {
        let rounded: f64 = sci.parse().expect("round trip");
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{rounded:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

/// Most precise `format_sig` rendering that fits in `width` characters.
pub fn format_fit(x: f64, max_sig: usize, width: usize) -> String {
    (1..=max_sig).rev().map(|sig| format_sig(x, sig)).find(|s| s.len() <= width).unwrap_or_else(|| format_sig(x, 1))
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}
