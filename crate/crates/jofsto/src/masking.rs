//! Channel masking: selection of the lowest-scored channels to drop, the
//! mask annealing that walks the data from the previous channel subset to
//! the new one, and the fill values substituted for unacquired channels.
//!
//! The mask is binary at every step boundary and fractional only while
//! annealing. Supports are nested across steps; dropped channels never
//! come back.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use std::fs;
use std::path::Path;

#[derive(Clone, Debug)]
pub struct MaskState<T> {
    /// Current mask, possibly fractional during annealing.
    pub current: Vec<T>,
    /// Binary mask of the previous step (annealing start point).
    pub previous: Vec<T>,
    /// Binary mask the annealing converges to.
    pub target: Vec<T>,
    /// Interpolation weight: 1 = previous mask, 0 = target mask.
    pub alpha: T,
    /// Per-channel constants substituted for masked-out measurements.
    pub fill: Vec<T>,
    /// Annealing epochs applied since the target was set.
    anneal_count: usize,
}

impl<T: Scalar> MaskState<T> {
    /// All-channels-active mask.
    pub fn full(fill: Vec<T>) -> Self {
        let ones = vec![T::one(); fill.len()];
        MaskState {
            current: ones.clone(),
            previous: ones.clone(),
            target: ones,
            alpha: T::zero(),
            fill,
            anneal_count: 0,
        }
    }

    /// A fixed binary mask with no annealing in flight (the inference path).
    pub fn frozen(mask: Vec<T>, fill: Vec<T>) -> Self {
        assert_eq!(mask.len(), fill.len(), "mask and fill widths differ");
        MaskState {
            current: mask.clone(),
            previous: mask.clone(),
            target: mask,
            alpha: T::zero(),
            fill,
            anneal_count: 0,
        }
    }

    pub fn channels(&self) -> usize {
        self.fill.len()
    }

    /// Installs a new binary target and arms the annealing walk from the
    /// current (binary) mask to it.
    pub fn set_target(&mut self, target: Vec<T>) {
        assert_eq!(target.len(), self.channels(), "target width mismatch");
        self.previous = self.current.clone();
        self.target = target;
        self.alpha = T::one();
        self.anneal_count = 0;
    }

    /// Number of active channels in the target mask.
    pub fn target_cardinality(&self) -> usize {
        self.target.iter().filter(|&&v| v == T::one()).count()
    }

    pub fn current_is_binary(&self) -> bool {
        self.current.iter().all(|&v| v == T::zero() || v == T::one())
    }
}

/// Applies mask and fill: `x[i,c] = m[c] * x[i,c] + (1 - m[c]) * fill[c]`.
pub fn apply_mask<T: Scalar>(inputs: &Matrix<T>, state: &MaskState<T>) -> Result<Matrix<T>> {
    if inputs.cols() != state.channels() {
        return Err(Error::shape(
            "apply_mask",
            format!("{} columns", state.channels()),
            format!("{} columns", inputs.cols()),
        ));
    }
    let mut out = Matrix::zeros(inputs.rows(), inputs.cols());
    for r in 0..inputs.rows() {
        let src = inputs.row(r);
        let dst = out.row_mut(r);
        for c in 0..src.len() {
            let m = state.current[c];
            dst[c] = m * src[c] + (T::one() - m) * state.fill[c];
        }
    }
    Ok(out)
}

/// Picks the `k` active channels with the smallest scores; ties break toward
/// the lowest channel index so selection is deterministic.
pub fn select_drop_set<T: Scalar>(scores: &[T], previous: &[T], k: usize) -> Result<Vec<usize>> {
    if scores.len() != previous.len() {
        return Err(Error::shape(
            "select_drop_set",
            format!("{} channels", previous.len()),
            format!("{} channels", scores.len()),
        ));
    }
    let mut active: Vec<usize> = (0..previous.len())
        .filter(|&c| previous[c] == T::one())
        .collect();
    if k > active.len() {
        return Err(Error::config(format!(
            "cannot drop {k} channels, only {} are active",
            active.len()
        )));
    }
    active.sort_by(|&a, &b| {
        scores[a]
            .partial_cmp(&scores[b])
            .expect("scores must be comparable")
            .then(a.cmp(&b))
    });
    let mut drop: Vec<usize> = active.into_iter().take(k).collect();
    drop.sort_unstable();
    Ok(drop)
}

/// Zeroes the dropped channels in a copy of the previous mask. Dropping an
/// inactive channel is a logic error and aborts.
pub fn mask_target<T: Scalar>(previous: &[T], drop: &[usize]) -> Vec<T> {
    let mut target = previous.to_vec();
    for &c in drop {
        assert!(
            target[c] == T::one(),
            "channel {c} is not active and cannot be dropped"
        );
        target[c] = T::zero();
    }
    target
}

/// One mask-annealing epoch: lowers the interpolation weight by
/// `1/(e3 - e2)` (clamped at zero) and recomputes
/// `current = alpha * previous + (1 - alpha) * target`.
///
/// The weight is derived from an epoch counter rather than repeated
/// subtraction so it is exactly zero after `e3 - e2` applications and the
/// mask lands exactly on the binary target.
pub fn anneal_mask<T: Scalar>(state: &mut MaskState<T>, e2: usize, e3: usize) -> Result<()> {
    if e3 <= e2 {
        return Err(Error::config(format!(
            "mask annealing window requires e3 > e2 (got e2={e2}, e3={e3})"
        )));
    }
    let window = e3 - e2;
    state.anneal_count += 1;
    state.alpha = if state.anneal_count >= window {
        T::zero()
    } else {
        T::from_f64((window - state.anneal_count) as f64 / window as f64)
    };
    let one_minus = T::one() - state.alpha;
    for c in 0..state.current.len() {
        state.current[c] = state.alpha * state.previous[c] + one_minus * state.target[c];
    }
    Ok(())
}

/// Per-channel median of the training rows; the mean of the two central
/// order statistics for even counts.
pub fn compute_fill<T: Scalar>(train_inputs: &Matrix<T>) -> Result<Vec<T>> {
    if train_inputs.rows() == 0 {
        return Err(Error::config("cannot compute fill from an empty training set"));
    }
    let n = train_inputs.rows();
    let mut fill = Vec::with_capacity(train_inputs.cols());
    let mut column = vec![T::zero(); n];
    for c in 0..train_inputs.cols() {
        for (r, slot) in column.iter_mut().enumerate() {
            *slot = train_inputs.get(r, c);
        }
        column.sort_by(|a, b| a.partial_cmp(b).expect("data must be comparable"));
        let median = if n % 2 == 1 {
            column[n / 2]
        } else {
            T::from_f64((column[n / 2 - 1].to_f64() + column[n / 2].to_f64()) / 2.0)
        };
        fill.push(median);
    }
    Ok(fill)
}

/// Writes one `index<TAB>0|1` line per channel.
pub fn write_mask(path: &Path, mask: &[u8]) -> Result<()> {
    let mut out = String::new();
    for (i, &m) in mask.iter().enumerate() {
        out.push_str(&format!("{i}\t{m}\n"));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_mask(path: &Path) -> Result<Vec<u8>> {
    let text = fs::read_to_string(path)?;
    let mut mask = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut parts = line.split('\t');
        let idx: usize = parts
            .next()
            .and_then(|p| p.parse().ok())
            .ok_or_else(|| mask_file_err(path, lineno, "missing index"))?;
        if idx != lineno {
            return Err(mask_file_err(path, lineno, "indices out of order"));
        }
        match parts.next() {
            Some("0") => mask.push(0),
            Some("1") => mask.push(1),
            _ => return Err(mask_file_err(path, lineno, "mask value must be 0 or 1")),
        }
    }
    Ok(mask)
}

fn mask_file_err(path: &Path, line: usize, detail: &str) -> Error {
    Error::Format {
        path: path.display().to_string(),
        offset: line as u64,
        detail: format!("mask file line {line}: {detail}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn state_with(current: Vec<f64>, fill: Vec<f64>) -> MaskState<f64> {
        let mut s = MaskState::full(fill);
        s.current = current;
        s
    }

    #[test]
    fn all_ones_mask_is_identity() {
        let x = Matrix::from_rows(&[vec![4.0f64, -1.0, 0.25]]);
        let s = state_with(vec![1.0; 3], vec![9.0, 9.0, 9.0]);
        let out = apply_mask(&x, &s).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn all_zeros_mask_returns_fill() {
        let x = Matrix::from_rows(&[vec![4.0f64, -1.0, 0.25], vec![1.0, 2.0, 3.0]]);
        let s = state_with(vec![0.0; 3], vec![7.0, 8.0, 9.0]);
        let out = apply_mask(&x, &s).unwrap();
        for r in 0..2 {
            assert_eq!(out.row(r), &[7.0, 8.0, 9.0]);
        }
    }

    #[test]
    fn fractional_mask_hand_arithmetic() {
        let x = Matrix::from_rows(&[vec![4.0f64, 4.0, 4.0]]);
        let s = state_with(vec![1.0, 0.5, 0.0], vec![0.0, 2.0, 2.0]);
        let out = apply_mask(&x, &s).unwrap();
        assert_eq!(out.row(0), &[4.0, 3.0, 2.0]);
    }

    #[test]
    fn drop_set_picks_smallest_scores() {
        let scores = vec![0.1f64, 0.9, 0.5, 0.2];
        let prev = vec![1.0f64; 4];
        assert_eq!(select_drop_set(&scores, &prev, 2).unwrap(), vec![0, 3]);
        assert_eq!(select_drop_set(&scores, &prev, 0).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn drop_set_matches_sort_oracle_on_random_input() {
        let mut rng = StdRng::seed_from_u64(21);
        let scores: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..2.0)).collect();
        let prev: Vec<f64> = (0..200)
            .map(|_| if rng.gen_bool(0.6) { 1.0 } else { 0.0 })
            .collect();
        let k = 37;
        let got = select_drop_set(&scores, &prev, k).unwrap();

        // Brute-force oracle: full sort of (score, index) pairs over actives.
        let mut pairs: Vec<(f64, usize)> = (0..200)
            .filter(|&c| prev[c] == 1.0)
            .map(|c| (scores[c], c))
            .collect();
        pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<usize> = pairs.iter().take(k).map(|&(_, c)| c).collect();
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn drop_set_tie_break_is_lowest_index_and_deterministic() {
        let scores = vec![0.5f64, 0.5, 0.5, 0.5];
        let prev = vec![1.0f64; 4];
        let a = select_drop_set(&scores, &prev, 2).unwrap();
        let b = select_drop_set(&scores, &prev, 2).unwrap();
        assert_eq!(a, vec![0, 1]);
        assert_eq!(a, b);
    }

    #[test]
    fn drop_set_depends_only_on_score_ordering() {
        // Selection is ranking-only: any positive rescaling of the scores
        // leaves the drop set unchanged.
        let mut rng = StdRng::seed_from_u64(77);
        for _ in 0..20 {
            let scores: Vec<f64> = (0..40).map(|_| rng.gen_range(0.0..2.0)).collect();
            let prev: Vec<f64> = (0..40)
                .map(|_| if rng.gen_bool(0.7) { 1.0 } else { 0.0 })
                .collect();
            let k = 5.min(prev.iter().filter(|&&v| v == 1.0).count());
            let scale = rng.gen_range(1e-3..1e3);
            let scaled: Vec<f64> = scores.iter().map(|&s| s * scale).collect();
            assert_eq!(
                select_drop_set(&scores, &prev, k).unwrap(),
                select_drop_set(&scaled, &prev, k).unwrap()
            );
        }
    }

    #[test]
    fn drop_set_rejects_k_beyond_active_count() {
        let scores = vec![0.5f64; 4];
        let prev = vec![1.0f64, 0.0, 1.0, 0.0];
        assert!(select_drop_set(&scores, &prev, 3).is_err());
    }

    #[test]
    fn mask_target_zeroes_dropped_channels() {
        let prev = vec![1.0f64; 4];
        assert_eq!(mask_target(&prev, &[0, 3]), vec![0.0, 1.0, 1.0, 0.0]);
        assert_eq!(mask_target(&prev, &[]), prev);
    }

    #[test]
    #[should_panic(expected = "not active")]
    fn mask_target_aborts_on_inactive_drop() {
        let prev = vec![1.0f64, 0.0, 1.0];
        mask_target(&prev, &[1]);
    }

    #[test]
    fn chained_targets_stay_nested_with_exact_cardinalities() {
        let mut rng = StdRng::seed_from_u64(33);
        let mut mask = vec![1.0f64; 64];
        let mut supports: Vec<Vec<usize>> = Vec::new();
        for &c_next in &[32usize, 16] {
            let scores: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..2.0)).collect();
            let active = mask.iter().filter(|&&v| v == 1.0).count();
            let drop = select_drop_set(&scores, &mask, active - c_next).unwrap();
            mask = mask_target(&mask, &drop);
            let support: Vec<usize> =
                (0..64).filter(|&c| mask[c] == 1.0).collect();
            assert_eq!(support.len(), c_next);
            supports.push(support);
        }
        // support(16) strictly inside support(32)
        assert!(supports[1].iter().all(|c| supports[0].contains(c)));
        assert!(supports[1].len() < supports[0].len());
    }

    #[test]
    fn anneal_sequence_for_window_ten() {
        let mut s = MaskState::full(vec![0.0f64; 2]);
        s.set_target(vec![1.0, 0.0]);
        assert_eq!(s.alpha, 1.0);
        let mut seen = Vec::new();
        for _ in 0..10 {
            anneal_mask(&mut s, 35, 45).unwrap();
            seen.push(s.alpha);
        }
        let want = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.0];
        for (a, w) in seen.iter().zip(want) {
            assert!((a - w).abs() < 1e-12, "{a} vs {w}");
        }
        assert_eq!(s.alpha, 0.0);
        assert_eq!(s.current, s.target);
        assert!(s.current_is_binary());
    }

    #[test]
    fn anneal_with_equal_masks_is_constant() {
        let mut s = MaskState::full(vec![0.0f64; 3]);
        s.set_target(vec![1.0, 1.0, 1.0]);
        for _ in 0..5 {
            anneal_mask(&mut s, 0, 10).unwrap();
            assert_eq!(s.current, vec![1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn anneal_hand_arithmetic_at_alpha_0_4() {
        let mut s = MaskState::full(vec![0.0f64; 2]);
        s.current = vec![1.0, 1.0];
        s.set_target(vec![1.0, 0.0]);
        // After 3 of 5 annealing epochs alpha = 0.4.
        for _ in 0..3 {
            anneal_mask(&mut s, 0, 5).unwrap();
        }
        assert!((s.alpha - 0.4).abs() < 1e-15);
        assert!((s.current[1] - 0.4).abs() < 1e-15);
        assert_eq!(s.current[0], 1.0);
    }

    #[test]
    fn anneal_rejects_bad_window() {
        let mut s = MaskState::full(vec![0.0f64; 2]);
        assert!(anneal_mask(&mut s, 10, 10).is_err());
    }

    #[test]
    fn fill_median_odd_and_even() {
        let odd = Matrix::from_rows(&[vec![1.0f64], vec![3.0], vec![5.0]]);
        assert_eq!(compute_fill(&odd).unwrap(), vec![3.0]);
        let even = Matrix::from_rows(&[vec![1.0f64], vec![2.0], vec![3.0], vec![4.0]]);
        assert_eq!(compute_fill(&even).unwrap(), vec![2.5]);
        assert!(compute_fill(&Matrix::<f64>::zeros(0, 3)).is_err());
    }

    #[test]
    fn fill_matches_sort_oracle_on_random_matrix() {
        let mut rng = StdRng::seed_from_u64(55);
        let mut x = Matrix::<f64>::zeros(1001, 8);
        for v in x.data_mut() {
            *v = rng.gen_range(-10.0..10.0);
        }
        let fill = compute_fill(&x).unwrap();
        for (c, &f) in fill.iter().enumerate() {
            let mut col = x.column(c);
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(f, col[500], "column {c}");
        }
    }

    #[test]
    fn mask_file_round_trips() {
        let dir = std::env::temp_dir().join(format!("jofsto-mask-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("mask.txt");
        let mask = vec![1u8, 0, 0, 1, 1];
        write_mask(&path, &mask).unwrap();
        assert_eq!(read_mask(&path).unwrap(), mask);
    }
}
