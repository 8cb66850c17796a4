// Float helpers that work without std, plus checked integer combinatorics.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

/// `k!` as a checked 128-bit integer; `None` on overflow.
pub(crate) fn factorial(k: usize) -> Option<i128> {
    (2..=k as i128).try_fold(1i128, |acc, v| acc.checked_mul(v))
}

/// `n! / prod(parts!)` where `sum(parts) = n`.
pub(crate) fn multinomial<I: IntoIterator<Item = usize>>(parts: I) -> Option<i128> {
    // Built as a product of binomials to keep intermediates small.
    let mut total = 0usize;
    let mut acc = 1i128;
    for p in parts {
        total += p;
        acc = acc.checked_mul(binomial(total, p)?)?;
    }
    Some(acc)
}

/// Binomial coefficient `C(n, k)`, exact.
pub(crate) fn binomial(n: usize, k: usize) -> Option<i128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc = 1i128;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication.
        acc = acc.checked_mul((n - i) as i128)? / (i as i128 + 1);
    }
    Some(acc)
}
