//! Sylvester–Hadamard matrices and the fast Walsh–Hadamard transform.

/// In-place unnormalised Walsh–Hadamard transform: `data ← H data` where
/// `H[i][j] = (-1)^popcount(i & j)`. The length must be a power of two.
pub fn fwht(data: &mut [f64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fwht length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Entry `(i, j)` of the Sylvester–Hadamard matrix, as ±1.
#[inline]
pub fn entry(i: usize, j: usize) -> f64 {
    if (i & j).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Smallest `k` with `2^k ≥ max(rows + 1, cols + 1)`.
pub fn order_for(rows: usize, cols: usize) -> u32 {
    let need = rows.max(cols) + 1;
    need.next_power_of_two().trailing_zeros()
}
