//! Exact information-theoretic statistics over tag layers.
//!
//! Counts are kept as exact integers; probabilities only appear at
//! evaluation time in double precision. All entropies and mutual
//! informations are reported in bits (log base 2). Per-cell
//! contributions are summed in value-sorted order, which makes results
//! independent of map iteration order and makes transposition-symmetry
//! hold bit-for-bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, shuffle};

/// Token-level tag counts for one layer.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TagDistribution {
    counts: BTreeMap<String, u64>,
    total: u64,
}

impl TagDistribution {
    /// Exact counts of `layer` over all tokens of the corpus.
    pub fn from_corpus(corpus: &Corpus, layer: &str) -> Result<Self> {
        if !corpus.has_layer(layer) {
            return Err(Error::UnknownLayer(layer.to_owned()));
        }
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        for token in corpus.tokens() {
            let tag = token.tag(layer).expect("layer checked");
            *counts.entry(tag.to_owned()).or_insert(0) += 1;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn from_counts(counts: BTreeMap<String, u64>) -> Self {
        let total = counts.values().sum();
        TagDistribution { counts, total }
    }

    pub fn count(&self, tag: &str) -> u64 {
        self.counts.get(tag).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn support(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(t, &c)| (t.as_str(), c))
    }

    pub fn n_tags(&self) -> usize {
        self.counts.len()
    }

    /// Plug-in entropy H = -sum p log2 p, in bits. Zero-count terms
    /// contribute nothing; a zero-total distribution is undefined.
    pub fn entropy(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyDistribution);
        }
        let n = self.total as f64;
        let terms = self
            .counts
            .values()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .collect();
        Ok(sorted_sum(terms))
    }
}

/// Token-level counts of tag pairs across two aligned layers, with
/// exact marginals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointTagDistribution {
    counts: BTreeMap<(String, String), u64>,
    total: u64,
    marginal_a: TagDistribution,
    marginal_b: TagDistribution,
}

impl JointTagDistribution {
    /// Per-token pair counts of `(layer_a, layer_b)` over a corpus that
    /// carries both layers (see `corpus::align_layers`).
    pub fn from_corpus(corpus: &Corpus, layer_a: &str, layer_b: &str) -> Result<Self> {
        if !corpus.has_layer(layer_a) {
            return Err(Error::UnknownLayer(layer_a.to_owned()));
        }
        if !corpus.has_layer(layer_b) {
            return Err(Error::UnknownLayer(layer_b.to_owned()));
        }
        let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
        for token in corpus.tokens() {
            let a = token.tag(layer_a).expect("layer checked").to_owned();
            let b = token.tag(layer_b).expect("layer checked").to_owned();
            *counts.entry((a, b)).or_insert(0) += 1;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn from_counts(counts: BTreeMap<(String, String), u64>) -> Self {
        let mut ma: BTreeMap<String, u64> = BTreeMap::new();
        let mut mb: BTreeMap<String, u64> = BTreeMap::new();
        for ((a, b), &c) in &counts {
            *ma.entry(a.clone()).or_insert(0) += c;
            *mb.entry(b.clone()).or_insert(0) += c;
        }
        let total = counts.values().sum();
        JointTagDistribution {
            counts,
            total,
            marginal_a: TagDistribution::from_counts(ma),
            marginal_b: TagDistribution::from_counts(mb),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, a: &str, b: &str) -> u64 {
        self.counts.get(&(a.to_owned(), b.to_owned())).copied().unwrap_or(0)
    }

    pub fn support(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.counts.iter().map(|((a, b), &c)| (a.as_str(), b.as_str(), c))
    }

    pub fn marginal_a(&self) -> &TagDistribution {
        &self.marginal_a
    }

    pub fn marginal_b(&self) -> &TagDistribution {
        &self.marginal_b
    }

    /// The same joint with the two layers swapped.
    pub fn transposed(&self) -> Self {
        let counts = self
            .counts
            .iter()
            .map(|((a, b), &c)| ((b.clone(), a.clone()), c))
            .collect();
        Self::from_counts(counts)
    }

    /// Mutual information I = sum p(a,b) log2 [p(a,b) / (p(a) p(b))],
    /// in bits. Zero-count pairs contribute nothing.
    pub fn mutual_information(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyDistribution);
        }
        let n = self.total as f64;
        let terms = self
            .counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|((a, b), &c)| {
                let p_ab = c as f64 / n;
                let p_a = self.marginal_a.count(a) as f64 / n;
                let p_b = self.marginal_b.count(b) as f64 / n;
                p_ab * (p_ab / (p_a * p_b)).log2()
            })
            .collect();
        Ok(sorted_sum(terms))
    }

    /// Conditional entropy H(B|A) = -sum p(a,b) log2 p(b|a), in bits,
    /// computed directly from the joint (not via the H - I identity,
    /// which tests use as an independent cross-check).
    pub fn conditional_entropy(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyDistribution);
        }
        let n = self.total as f64;
        let terms = self
            .counts
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|((a, _), &c)| {
                let p_ab = c as f64 / n;
                let p_a = self.marginal_a.count(a) as f64 / n;
                -p_ab * (p_ab / p_a).log2()
            })
            .collect();
        Ok(sorted_sum(terms))
    }

    /// Joint entropy H(A,B) in bits.
    pub fn joint_entropy(&self) -> Result<f64> {
        if self.total == 0 {
            return Err(Error::EmptyDistribution);
        }
        let n = self.total as f64;
        let terms = self
            .counts
            .values()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.log2()
            })
            .collect();
        Ok(sorted_sum(terms))
    }
}

/// Sum floating-point terms in value-sorted order, so the result does
/// not depend on the order the terms were produced in.
fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Default permutation count for the Spearman p-value.
pub const SPEARMAN_PERMUTATIONS: u32 = 10_000;
/// Default seed for the Spearman permutation test; recorded in every
/// [`CorrelationResult`].
pub const SPEARMAN_SEED: u64 = 0x5ea7_ed00;

/// A rank correlation with its permutation-test p-value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub p_value: f64,
    pub n: usize,
    pub n_permutations: u32,
    pub seed: u64,
}

/// Spearman's rank correlation with the default permutation budget.
pub fn spearman_rho(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult> {
    spearman_rho_seeded(xs, ys, SPEARMAN_PERMUTATIONS, SPEARMAN_SEED)
}

/// Spearman's rho: the Pearson correlation of mid-ranks (ties get the
/// average of the positions they span). The two-sided p-value is the
/// add-one-smoothed fraction of seeded permutations of `ys` whose
/// absolute rank correlation reaches the observed one.
pub fn spearman_rho_seeded(
    xs: &[f64],
    ys: &[f64],
    n_permutations: u32,
    seed: u64,
) -> Result<CorrelationResult> {
    if xs.len() != ys.len() {
        return Err(Error::Arity(format!(
            "spearman_rho needs equal-length inputs, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::Arity(format!(
            "spearman_rho needs at least 3 observations, got {n}"
        )));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Arity("spearman_rho inputs must be finite".into()));
    }
    let rank_x = midranks(xs);
    let rank_y = midranks(ys);
    let rho = pearson(&rank_x, &rank_y)?;

    let mut rng = rng_from_seed(seed);
    let mut permuted = rank_y.clone();
    let mut at_least_as_extreme: u32 = 0;
    for _ in 0..n_permutations {
        shuffle(&mut permuted, &mut rng);
        let r = pearson(&rank_x, &permuted).expect("rank variance already checked");
        if r.abs() >= rho.abs() {
            at_least_as_extreme += 1;
        }
    }
    let p_value = f64::from(at_least_as_extreme + 1) / f64::from(n_permutations + 1);

    Ok(CorrelationResult { rho, p_value, n, n_permutations, seed })
}

/// Mid-ranks: 1-based ranks with ties replaced by the mean of the rank
/// positions they occupy.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the mean of ranks i+1..=j+1.
        let mean_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(Error::UndefinedCorrelation(
            "zero rank variance on one side".into(),
        ));
    }
    Ok(cov / (var_x * var_y).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Sentence, Token};

    fn corpus_one_layer(tag_lists: &[&[&str]]) -> Corpus {
        let sentences = tag_lists
            .iter()
            .enumerate()
            .map(|(i, tags)| {
                Sentence::new(
                    format!("s{i}"),
                    tags.iter()
                        .enumerate()
                        .map(|(j, t)| Token::new(format!("w{j}")).with_tag("pos", *t))
                        .collect(),
                )
            })
            .collect();
        Corpus::new("en", sentences).unwrap()
    }

    fn joint(cells: &[(&str, &str, u64)]) -> JointTagDistribution {
        let counts = cells
            .iter()
            .map(|(a, b, c)| ((a.to_string(), b.to_string()), *c))
            .collect();
        JointTagDistribution::from_counts(counts)
    }

    // Independent oracle: entropy by direct formula evaluation over an
    // explicit count list, written without reference to the types above.
    fn entropy_oracle(counts: &[u64]) -> f64 {
        let n: u64 = counts.iter().sum();
        counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / n as f64;
                -p * p.log2()
            })
            .sum()
    }

    // Independent oracle: brute-force mutual information over a dense
    // matrix of pair counts.
    fn mi_oracle(matrix: &[Vec<u64>]) -> f64 {
        let n: u64 = matrix.iter().flatten().sum();
        let rows = matrix.len();
        let cols = matrix[0].len();
        let row_sum: Vec<u64> = matrix.iter().map(|r| r.iter().sum()).collect();
        let col_sum: Vec<u64> = (0..cols)
            .map(|j| matrix.iter().map(|r| r[j]).sum())
            .collect();
        let mut total = 0.0;
        for i in 0..rows {
            for j in 0..cols {
                if matrix[i][j] == 0 {
                    continue;
                }
                let p_ab = matrix[i][j] as f64 / n as f64;
                let p_a = row_sum[i] as f64 / n as f64;
                let p_b = col_sum[j] as f64 / n as f64;
                total += p_ab * (p_ab / (p_a * p_b)).log2();
            }
        }
        total
    }

    #[test]
    fn tag_distribution_counts() {
        let c = corpus_one_layer(&[&["A", "A", "B"]]);
        let d = TagDistribution::from_corpus(&c, "pos").unwrap();
        assert_eq!(d.count("A"), 2);
        assert_eq!(d.count("B"), 1);
        assert_eq!(d.total(), 3);

        let two = corpus_one_layer(&[&["A"], &["B"]]);
        let d2 = TagDistribution::from_corpus(&two, "pos").unwrap();
        assert_eq!(d2.count("A"), 1);
        assert_eq!(d2.count("B"), 1);
    }

    #[test]
    fn tag_distribution_empty_corpus_and_unknown_layer() {
        let empty = Corpus::new("en", vec![]).unwrap();
        assert!(matches!(
            TagDistribution::from_corpus(&empty, "pos"),
            Err(Error::UnknownLayer(_))
        ));
        let c = corpus_one_layer(&[&["A"]]);
        assert!(TagDistribution::from_corpus(&c, "nope").is_err());
    }

    #[test]
    fn entropy_basic_values() {
        let single = TagDistribution::from_counts([("A".to_string(), 5)].into());
        assert_eq!(single.entropy().unwrap(), 0.0);

        let uniform2 =
            TagDistribution::from_counts([("A".to_string(), 1), ("B".to_string(), 1)].into());
        assert_eq!(uniform2.entropy().unwrap(), 1.0);

        // Frozen from entropy_oracle(&[3, 1]).
        let skewed =
            TagDistribution::from_counts([("A".to_string(), 3), ("B".to_string(), 1)].into());
        let expected = 0.8112781244591328_f64;
        assert!((entropy_oracle(&[3, 1]) - expected).abs() < 1e-15);
        assert!((skewed.entropy().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn entropy_of_empty_distribution_errors() {
        let empty = TagDistribution::from_counts(BTreeMap::new());
        assert!(matches!(empty.entropy(), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn joint_distribution_counts_and_marginals() {
        let j = joint(&[("A", "x", 2), ("B", "y", 1)]);
        assert_eq!(j.count("A", "x"), 2);
        assert_eq!(j.count("B", "y"), 1);
        assert_eq!(j.marginal_a().count("A"), 2);
        assert_eq!(j.marginal_a().count("B"), 1);
        assert_eq!(j.total(), 3);

        let single = joint(&[("A", "x", 1)]);
        assert_eq!(single.count("A", "x"), 1);
        assert_eq!(single.total(), 1);
    }

    #[test]
    fn joint_marginal_equals_tag_distribution() {
        let sentences = vec![Sentence::new(
            "s0",
            vec![
                Token::new("a").with_tag("pos", "A").with_tag("sem", "x"),
                Token::new("b").with_tag("pos", "A").with_tag("sem", "x"),
                Token::new("c").with_tag("pos", "B").with_tag("sem", "y"),
            ],
        )];
        let c = Corpus::new("en", sentences).unwrap();
        let j = JointTagDistribution::from_corpus(&c, "pos", "sem").unwrap();
        let d = TagDistribution::from_corpus(&c, "pos").unwrap();
        assert_eq!(j.marginal_a(), &d);
    }

    #[test]
    fn mi_of_deterministic_relabeling_equals_entropy() {
        let j = joint(&[("A", "x", 3), ("B", "y", 1), ("C", "z", 4)]);
        let h = j.marginal_a().entropy().unwrap();
        let i = j.mutual_information().unwrap();
        assert!((i - h).abs() < 1e-12, "I = {i}, H = {h}");
    }

    #[test]
    fn mi_of_product_joint_is_zero() {
        let j = joint(&[("A", "x", 1), ("A", "y", 1), ("B", "x", 1), ("B", "y", 1)]);
        assert_eq!(j.mutual_information().unwrap(), 0.0);
    }

    #[test]
    fn mi_matches_brute_force_oracle() {
        // Frozen from mi_oracle over [[2, 1], [0, 1]].
        let j = joint(&[("A", "x", 2), ("A", "y", 1), ("B", "y", 1)]);
        let expected = 0.31127812445913283_f64;
        assert!((mi_oracle(&[vec![2, 1], vec![0, 1]]) - expected).abs() < 1e-15);
        assert!((j.mutual_information().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn mi_is_transposition_symmetric_bitwise() {
        let j = joint(&[
            ("A", "x", 7),
            ("A", "y", 2),
            ("B", "x", 1),
            ("B", "z", 5),
            ("C", "y", 3),
        ]);
        let i = j.mutual_information().unwrap();
        let it = j.transposed().mutual_information().unwrap();
        assert_eq!(i.to_bits(), it.to_bits());
    }

    #[test]
    fn conditional_entropy_identities() {
        // Deterministic relabeling: H(B|A) = 0.
        let det = joint(&[("A", "x", 3), ("B", "y", 2)]);
        assert!(det.conditional_entropy().unwrap().abs() < 1e-12);

        // Independent layers: H(B|A) = H(B).
        let indep = joint(&[("A", "x", 2), ("A", "y", 2), ("B", "x", 2), ("B", "y", 2)]);
        let hb = indep.marginal_b().entropy().unwrap();
        assert!((indep.conditional_entropy().unwrap() - hb).abs() < 1e-12);

        // Mixed joint: H(B|A) = H(B) - I within 1e-9 (two routes).
        let mixed = joint(&[("A", "x", 2), ("A", "y", 1), ("B", "y", 1)]);
        let direct = mixed.conditional_entropy().unwrap();
        let via_identity = mixed.marginal_b().entropy().unwrap()
            - mixed.mutual_information().unwrap();
        assert!((direct - via_identity).abs() < 1e-9);
    }

    #[test]
    fn chain_identity_holds() {
        let j = joint(&[
            ("A", "x", 4),
            ("A", "y", 1),
            ("B", "x", 2),
            ("B", "y", 6),
            ("C", "z", 3),
        ]);
        let lhs = j.marginal_a().entropy().unwrap() + j.marginal_b().entropy().unwrap()
            - j.mutual_information().unwrap();
        let rhs = j.joint_entropy().unwrap();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn spearman_monotone_sequences() {
        let r = spearman_rho(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap();
        assert_eq!(r.rho, 1.0);
        let r = spearman_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.rho, -1.0);
    }

    #[test]
    fn spearman_with_ties_matches_hand_computation() {
        // Oracle: mid-ranks by hand. xs -> [1, 2.5, 2.5, 4],
        // ys -> [1, 3, 2, 4]; Pearson of those ranks is
        // 4.5 / sqrt(4.5 * 5.0).
        let expected = 4.5 / (4.5_f64 * 5.0).sqrt();
        assert!((expected - 0.9486832980505138).abs() < 1e-15);
        let r = spearman_rho(&[1.0, 2.0, 2.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r.rho - expected).abs() < 1e-12);
    }

    #[test]
    fn spearman_arity_and_degenerate_errors() {
        assert!(matches!(
            spearman_rho(&[1.0, 2.0], &[1.0, 2.0]),
            Err(Error::Arity(_))
        ));
        assert!(matches!(
            spearman_rho(&[1.0, 2.0, 3.0], &[1.0, 2.0]),
            Err(Error::Arity(_))
        ));
        assert!(matches!(
            spearman_rho(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn spearman_p_value_behaviour() {
        let xs: Vec<f64> = (0..8).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * 2.0 + 1.0).collect();
        let r = spearman_rho_seeded(&xs, &ys, 2000, 7).unwrap();
        assert!(r.p_value < 0.05, "p = {}", r.p_value);
        // Deterministic given the seed.
        let r2 = spearman_rho_seeded(&xs, &ys, 2000, 7).unwrap();
        assert_eq!(r.p_value, r2.p_value);
        assert_eq!(r.seed, 7);
        assert_eq!(r.n_permutations, 2000);
    }

    #[test]
    fn shuffle_preserves_entropy_exactly_and_degrades_mi() {
        // A corpus where layer "sem" is a noisy function of "pos".
        let mut sentences = Vec::new();
        let pos_tags = ["A", "B", "C"];
        let sem_tags = ["x", "y", "z"];
        for i in 0..30 {
            let tokens = (0..6)
                .map(|j| {
                    let k = (i * 7 + j * 3 + i * j) % 3;
                    let sem = if (i + j) % 5 == 0 { (k + 1) % 3 } else { k };
                    Token::new(format!("w{j}"))
                        .with_tag("pos", pos_tags[k])
                        .with_tag("sem", sem_tags[sem])
                })
                .collect();
            sentences.push(Sentence::new(format!("s{i}"), tokens));
        }
        let c = Corpus::new("en", sentences).unwrap();
        let h_before = TagDistribution::from_corpus(&c, "sem")
            .unwrap()
            .entropy()
            .unwrap();
        let mi_before = JointTagDistribution::from_corpus(&c, "pos", "sem")
            .unwrap()
            .mutual_information()
            .unwrap();
        assert!(mi_before > 0.1, "fixture must start informative");

        let mut mi_sum = 0.0;
        for seed in 0..20 {
            let shuffled = c.shuffle_labels("sem", seed).unwrap();
            let h_after = TagDistribution::from_corpus(&shuffled, "sem")
                .unwrap()
                .entropy()
                .unwrap();
            assert_eq!(h_before.to_bits(), h_after.to_bits());
            mi_sum += JointTagDistribution::from_corpus(&shuffled, "pos", "sem")
                .unwrap()
                .mutual_information()
                .unwrap();
        }
        let mi_mean = mi_sum / 20.0;
        assert!(
            mi_mean < mi_before,
            "shuffled MI {mi_mean} should fall below original {mi_before}"
        );
    }
}
