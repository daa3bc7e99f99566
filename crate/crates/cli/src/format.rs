//! Output helpers: 12-significant-digit CSV numbers and run metadata.

use serde_json::{Map, Value};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Run parameters embedded in every output document.
#[derive(Debug, Clone)]
pub struct Meta {
    pub seed: u64,
    pub samples: u64,
    pub method: String,
    pub workers: usize,
}

impl Meta {
    pub fn insert_into(&self, doc: &mut Map<String, Value>) {
        doc.insert("seed".into(), self.seed.into());
        doc.insert("samples".into(), self.samples.into());
        doc.insert("method".into(), self.method.clone().into());
        doc.insert("tool_version".into(), TOOL_VERSION.into());
        doc.insert("workers".into(), self.workers.into());
    }

    pub fn csv_header(&self) -> String {
        format!(
            "# seed={} samples={} method={} tool_version={} workers={}\n",
            self.seed, self.samples, self.method, TOOL_VERSION, self.workers
        )
    }
}

/// Formats like C's `%.12g`.
pub fn g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(g12(0.3), "0.3");
        assert_eq!(g12(1.0), "1");
        assert_eq!(g12(0.429_203_673_205_103_4), "0.429203673205");
        assert_eq!(g12(1e-7), "1e-07");
        assert_eq!(g12(-2.5e13), "-2.5e+13");
        assert_eq!(g12(123_456_789_012.0), "123456789012");
        assert_eq!(g12(0.000_123), "0.000123");
        assert_eq!(g12(0.0), "0");
    }
}
