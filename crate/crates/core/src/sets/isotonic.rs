//! Pool-adjacent-violators projection onto the monotone cone
//! `{x : x_1 <= x_2 <= ... <= x_n}`.

/// Single left-to-right pass; each new value starts a block and is merged
/// backwards while it violates the order of the block before it.
pub fn pava(y: &[f64]) -> Vec<f64> {
    // (sum, count) per block
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        let mut sum = v;
        let mut count = 1usize;
        while let Some(&(prev_sum, prev_count)) = blocks.last() {
            if prev_sum * count as f64 > sum * prev_count as f64 {
                sum += prev_sum;
                count += prev_count;
                blocks.pop();
            } else {
                break;
            }
        }
        blocks.push((sum, count));
    }
    let mut out = Vec::with_capacity(y.len());
    for (sum, count) in blocks {
        let mean = sum / count as f64;
        out.extend(std::iter::repeat_n(mean, count));
    }
    out
}
