//! Signed fixed-point weights with a shared power-of-two scale.

pub const MAX_WEIGHT_BITS: u8 = 8;

pub fn code_range(bits: u8) -> (i32, i32) {
    let half = 1i32 << (bits - 1);
    (-half, half - 1)
}

/// Chooses the smallest scale exponent at which `max |w|` fits the positive
/// code range, then rounds every value to nearest-even with saturation.
pub fn quantize(values: &[f64], bits: u8) -> (Vec<i8>, i8) {
    assert!((1..=MAX_WEIGHT_BITS).contains(&bits), "weight bits must be in 1..=8");
    let scale_exp = scale_exponent(values, bits);
    (quantize_at(values, bits, scale_exp), scale_exp)
}

pub fn scale_exponent(values: &[f64], bits: u8) -> i8 {
    let (_, hi) = code_range(bits);
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 || !max_abs.is_finite() {
        return 0;
    }
    let exp = (max_abs / f64::from(hi.max(1))).log2().ceil();
    exp.clamp(f64::from(i8::MIN), f64::from(i8::MAX)) as i8
}

pub fn quantize_at(values: &[f64], bits: u8, scale_exp: i8) -> Vec<i8> {
    let (lo, hi) = code_range(bits);
    let step = (f64::from(scale_exp)).exp2();
    values
        .iter()
        .map(|&v| {
            let q = (v / step).round_ties_even();
            q.clamp(f64::from(lo), f64::from(hi)) as i8
        })
        .collect()
}

pub fn dequantize(code: i8, scale_exp: i8) -> f64 {
    f64::from(code) * f64::from(scale_exp).exp2()
}
