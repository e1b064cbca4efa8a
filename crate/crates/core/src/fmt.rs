//! Number formatting shared by the CSV, JSON and OBJ writers.

/// Shortest decimal with 12 significant digits, stable across platforms.
/// Magnitudes outside `[1e-6, 1e15)` use exponent notation.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let parsed: f64 = format!("{:.11e}", x).parse().unwrap();
    if (1e-6..1e15).contains(&parsed.abs()) {
        format!("{parsed}")
    } else {
        format!("{parsed:e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounds_to_twelve_digits() {
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(0.1 + 0.2), "0.3");
        assert_eq!(sig12(-2.5e-7), "-2.5e-7");
        assert_eq!(sig12(1.5e-6), "0.0000015");
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(sig12(9.150266222318e-16), "9.15026622232e-16");
        assert_eq!(sig12(2.0e20), "2e20");
        assert_eq!(sig12(-0.0), "0");
    }
}
