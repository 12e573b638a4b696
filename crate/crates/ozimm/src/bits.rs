//! Bit-level helpers on IEEE-754 binary64 values.
//!
//! Everything in this module is pure integer manipulation of the
//! representation, so results are identical on every platform.

/// Ceiling of log2 for a positive integer. `ceil_log2(1) == 0`.
pub fn ceil_log2(k: u64) -> u32 {
    assert!(k >= 1, "ceil_log2 requires k >= 1");
    if k == 1 {
        0
    } else {
        64 - (k - 1).leading_zeros()
    }
}

/// Decompose a finite nonzero f64 into `(sig, pow)` with `|x| = sig * 2^pow`
/// and `sig < 2^53`. Normal values have bit 52 of `sig` set.
pub fn sig_pow(x: f64) -> (u64, i32) {
    debug_assert!(x.is_finite() && x != 0.0);
    let b = x.abs().to_bits();
    let exp_field = (b >> 52) as i32;
    let frac = b & ((1u64 << 52) - 1);
    if exp_field > 0 {
        ((1u64 << 52) | frac, exp_field - 1023 - 52)
    } else {
        (frac, -1074)
    }
}

/// floor(log2 |x|) for finite nonzero x; subnormals handled.
pub fn floor_log2_abs(x: f64) -> i32 {
    let (sig, pow) = sig_pow(x);
    pow + 63 - sig.leading_zeros() as i32
}

/// ceil(log2 |x|): equals `floor_log2_abs` when |x| is a power of two.
pub fn ceil_log2_abs(x: f64) -> i32 {
    let (sig, _) = sig_pow(x);
    let f = floor_log2_abs(x);
    if sig & (sig - 1) == 0 {
        f
    } else {
        f + 1
    }
}

/// Exact power of two as f64. Subnormal range supported; out-of-range
/// exponents saturate to 0.0 / +inf.
pub fn pow2(e: i32) -> f64 {
    if e >= -1022 {
        if e > 1023 {
            f64::INFINITY
        } else {
            f64::from_bits(((e + 1023) as u64) << 52)
        }
    } else if e >= -1074 {
        f64::from_bits(1u64 << (e + 1074) as u32)
    } else {
        0.0
    }
}

/// `x * 2^e` using exponent manipulation only. Exact whenever the result
/// stays in the normal range; overflow saturates to infinity and results
/// entering the subnormal range round once per scaling step.
pub fn ldexp(x: f64, e: i32) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    if (-1022..=1023).contains(&e) {
        return x * pow2(e);
    }
    // Split the shift so each factor is representable.
    let half = e.clamp(-2046, 2046) / 2;
    x * pow2(half) * pow2(e.saturating_sub(half).clamp(-1074, 1023))
}

/// Length from the most significant bit to the last set bit of the
/// significand: 0 for zero, 1 for powers of two, up to 53.
pub fn valid_mantissa_length(x: f64) -> u32 {
    if x == 0.0 {
        return 0;
    }
    debug_assert!(x.is_finite());
    let (sig, _) = sig_pow(x);
    let msb = 63 - sig.leading_zeros();
    msb - sig.trailing_zeros() + 1
}

/// floor(sig * 2^sh) mod 2^w, the bit-field extraction behind integer
/// slicing. `sig < 2^53`, `w <= 10`.
pub fn shift_extract(sig: u64, sh: i64, w: u32) -> u64 {
    let mask = (1u64 << w) - 1;
    if sh >= 0 {
        if sh >= w as i64 {
            0
        } else {
            (sig << sh) & mask
        }
    } else {
        let r = -sh;
        if r >= 64 {
            0
        } else {
            (sig >> r) & mask
        }
    }
}
