//! Transactions and the Apriori association-rule miner.
//!
//! Supports and confidences are exact rationals, so a threshold such as
//! `1/10` is compared without rounding.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, HashMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::history::{ChangesetEntry, CommitId, FilePath};
use crate::rational::{ratio, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transaction {
    pub files: BTreeSet<FilePath>,
    pub source_commit: CommitId,
}

/// Transactions in collection order (newest first).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TransactionDatabase {
    transactions: Vec<Transaction>,
}

impl TransactionDatabase {
    pub fn new(transactions: Vec<Transaction>) -> Result<Self> {
        if let Some(t) = transactions.iter().find(|t| t.files.is_empty()) {
            return Err(Error::contract(format!(
                "transaction from {} has no files",
                t.source_commit
            )));
        }
        Ok(TransactionDatabase { transactions })
    }

    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a ChangesetEntry>) -> Self {
        TransactionDatabase {
            transactions: entries
                .into_iter()
                .filter(|e| !e.files.is_empty())
                .map(|e| Transaction {
                    files: e.files.clone(),
                    source_commit: e.commit_id,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    pub fn transactions(&self) -> &[Transaction] {
        &self.transactions
    }

    fn count_containing(&self, itemset: &BTreeSet<FilePath>) -> usize {
        self.transactions
            .iter()
            .filter(|t| itemset.is_subset(&t.files))
            .count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AssociationRule {
    pub antecedent: BTreeSet<FilePath>,
    pub consequent: BTreeSet<FilePath>,
    #[serde(with = "crate::rational::serde_exact")]
    pub support: Rational,
    #[serde(with = "crate::rational::serde_exact")]
    pub confidence: Rational,
}

impl AssociationRule {
    /// Order used to pick the top rules: support descending, then
    /// confidence descending, then smaller antecedents, then lexicographic
    /// antecedent and consequent.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .support
            .cmp(&self.support)
            .then_with(|| other.confidence.cmp(&self.confidence))
            .then_with(|| self.antecedent.len().cmp(&other.antecedent.len()))
            .then_with(|| self.antecedent.cmp(&other.antecedent))
            .then_with(|| self.consequent.cmp(&other.consequent))
    }
}

/// Fraction of transactions containing every file of `itemset`.
pub fn support(db: &TransactionDatabase, itemset: &BTreeSet<FilePath>) -> Result<Rational> {
    if db.is_empty() {
        return Err(Error::contract("support over an empty transaction database"));
    }
    if itemset.is_empty() {
        return Err(Error::contract("support of an empty itemset"));
    }
    Ok(ratio(db.count_containing(itemset), db.len()))
}

pub fn confidence(
    db: &TransactionDatabase,
    antecedent: &BTreeSet<FilePath>,
    consequent: &BTreeSet<FilePath>,
) -> Result<Rational> {
    let base = support(db, antecedent)?;
    if base == Rational::from_integer(0) {
        return Err(Error::UndefinedConfidence);
    }
    let both: BTreeSet<FilePath> = antecedent.union(consequent).cloned().collect();
    Ok(support(db, &both)? / base)
}

fn check_threshold(name: &str, t: Rational) -> Result<()> {
    if t <= Rational::from_integer(0) || t > Rational::from_integer(1) {
        return Err(Error::contract(format!("{name} must lie in (0, 1], got {t}")));
    }
    Ok(())
}

/// All rules `x -> y` with `x`, `y` non-empty and disjoint,
/// `support(x ∪ y) >= minsup` and `confidence(x -> y) >= minconf`.
///
/// Frequent itemsets are grown level by level; a candidate of size k+1 is
/// only counted when all of its k-subsets are frequent. The result is sorted
/// by (antecedent, consequent).
pub fn apriori(
    db: &TransactionDatabase,
    minsup: Rational,
    minconf: Rational,
) -> Result<Vec<AssociationRule>> {
    mine(db, minsup, minconf, false)
}

/// Same as [`apriori`] restricted to rules with a single-file consequent,
/// which is all the recommender keeps. Skips building the other rules.
pub fn apriori_single_consequent(
    db: &TransactionDatabase,
    minsup: Rational,
    minconf: Rational,
) -> Result<Vec<AssociationRule>> {
    mine(db, minsup, minconf, true)
}

/// The `max_rules` best single-consequent rules, in rank order. Equivalent
/// to `filter_rules(apriori(db, minsup, minconf), max_rules)` but ranks
/// rules on item indices and only materialises the survivors.
pub fn top_single_consequent_rules(
    db: &TransactionDatabase,
    minsup: Rational,
    minconf: Rational,
    max_rules: usize,
) -> Result<Vec<AssociationRule>> {
    let mined = frequent_itemsets(db, minsup, minconf, Some(max_rules).filter(|&k| k > 0))?;
    let n = mined.n_transactions;
    // (itemset count, antecedent count, antecedent, consequent)
    let mut candidates: Vec<(usize, usize, Vec<u32>, u32)> = Vec::new();
    for itemset in mined.frequent.iter().filter(|s| s.len() >= 2) {
        let whole = mined.counts[itemset];
        for skip in 0..itemset.len() {
            let ante: Vec<u32> = itemset
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != skip)
                .map(|(_, &x)| x)
                .collect();
            let base = mined.counts[&ante];
            if ratio(whole, base) >= minconf {
                candidates.push((whole, base, ante, itemset[skip]));
            }
        }
    }
    // item indices follow file order, so comparing index vectors compares
    // the file sets lexicographically
    candidates.sort_by(|a, b| {
        b.0.cmp(&a.0)
            .then_with(|| ratio(b.0, b.1).cmp(&ratio(a.0, a.1)))
            .then_with(|| a.2.len().cmp(&b.2.len()))
            .then_with(|| a.2.cmp(&b.2))
            .then_with(|| a.3.cmp(&b.3))
    });
    candidates.truncate(max_rules);
    Ok(candidates
        .into_iter()
        .map(|(whole, base, ante, cons)| AssociationRule {
            antecedent: mined.files(&ante),
            consequent: mined.files(&[cons]),
            support: ratio(whole, n),
            confidence: ratio(whole, base),
        })
        .collect())
}

struct Mined {
    items: Vec<FilePath>,
    n_transactions: usize,
    /// Every frequent itemset as sorted item indices.
    frequent: Vec<Vec<u32>>,
    counts: HashMap<Vec<u32>, usize>,
}

impl Mined {
    fn files(&self, ids: &[u32]) -> BTreeSet<FilePath> {
        ids.iter().map(|&i| self.items[i as usize].clone()).collect()
    }
}

/// Level-wise frequent itemset mining. With `top = Some(k)`, itemsets that
/// cannot produce one of the k best single-consequent rules are pruned.
fn frequent_itemsets(
    db: &TransactionDatabase,
    minsup: Rational,
    minconf: Rational,
    top: Option<usize>,
) -> Result<Mined> {
    if db.is_empty() {
        return Err(Error::contract("apriori over an empty transaction database"));
    }
    check_threshold("minsup", minsup)?;
    check_threshold("minconf", minconf)?;

    let items: Vec<FilePath> = db
        .transactions
        .iter()
        .flat_map(|t| t.files.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: HashMap<&FilePath, u32> = items
        .iter()
        .enumerate()
        .map(|(i, f)| (f, i as u32))
        .collect();
    let transactions: Vec<Vec<u32>> = db
        .transactions
        .iter()
        .map(|t| t.files.iter().map(|f| index[f]).collect())
        .collect();
    let n = transactions.len();
    let frequent = |count: usize| ratio(count, n) >= minsup;

    let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut level: Vec<Vec<u32>> = {
        let mut singles = vec![0usize; items.len()];
        for t in &transactions {
            for &i in t {
                singles[i as usize] += 1;
            }
        }
        singles
            .iter()
            .enumerate()
            .filter(|(_, &c)| frequent(c))
            .map(|(i, &c)| {
                counts.insert(vec![i as u32], c);
                vec![i as u32]
            })
            .collect()
    };
    let mut all_frequent: Vec<Vec<u32>> = Vec::new();
    // counts of the best k qualifying rules seen so far
    let mut best: BinaryHeap<Reverse<usize>> = BinaryHeap::new();

    while !level.is_empty() {
        let current: HashSet<&Vec<u32>> = level.iter().collect();
        let mut candidates = Vec::new();
        for (i, a) in level.iter().enumerate() {
            for b in &level[i + 1..] {
                let k = a.len();
                // the level is sorted, so equal prefixes are contiguous
                if a[..k - 1] != b[..k - 1] {
                    break;
                }
                let mut cand = a.clone();
                cand.push(b[k - 1]);
                let all_subsets_frequent = (0..cand.len()).all(|skip| {
                    let sub: Vec<u32> = cand
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != skip)
                        .map(|(_, &x)| x)
                        .collect();
                    current.contains(&sub)
                });
                if all_subsets_frequent {
                    candidates.push(cand);
                }
            }
        }
        let mut next = Vec::new();
        for cand in candidates {
            let c = transactions.iter().filter(|t| is_sorted_subset(&cand, t)).count();
            if frequent(c) {
                counts.insert(cand.clone(), c);
                next.push(cand);
            }
        }
        next.sort();
        if let Some(k) = top {
            // Ranking is support-first and support only shrinks as itemsets
            // grow, so once k qualifying rules reach count t nothing below t
            // (nor any superset of it) can enter the top k.
            for itemset in &next {
                let whole = counts[itemset];
                let qualifying = (0..itemset.len())
                    .filter(|&skip| {
                        let mut ante = itemset.clone();
                        ante.remove(skip);
                        ratio(whole, counts[&ante]) >= minconf
                    })
                    .count();
                for _ in 0..qualifying.min(k) {
                    best.push(Reverse(whole));
                    if best.len() > k {
                        best.pop();
                    }
                }
            }
            if best.len() == k {
                let t = best.peek().expect("k > 0").0;
                next.retain(|s| counts[s] >= t);
            }
        }
        all_frequent.append(&mut level);
        level = next;
    }

    Ok(Mined { items, n_transactions: n, frequent: all_frequent, counts })
}

fn mine(
    db: &TransactionDatabase,
    minsup: Rational,
    minconf: Rational,
    single_consequent: bool,
) -> Result<Vec<AssociationRule>> {
    let mined = frequent_itemsets(db, minsup, minconf, None)?;
    let (n, counts) = (mined.n_transactions, &mined.counts);
    let to_files = |ids: &[u32]| mined.files(ids);

    let mut rules = Vec::new();
    for itemset in mined.frequent.iter().filter(|s| s.len() >= 2) {
        let whole = counts[itemset];
        let k = itemset.len();
        let full_mask = (1u64 << k) - 1;
        for mask in 1..full_mask {
            let consequent_size = k - mask.count_ones() as usize;
            if single_consequent && consequent_size != 1 {
                continue;
            }
            let (ante, cons): (Vec<u32>, Vec<u32>) = {
                let mut ante = Vec::new();
                let mut cons = Vec::new();
                for (j, &x) in itemset.iter().enumerate() {
                    if mask & (1 << j) != 0 {
                        ante.push(x);
                    } else {
                        cons.push(x);
                    }
                }
                (ante, cons)
            };
            let conf = ratio(whole, counts[&ante]);
            if conf >= minconf {
                rules.push(AssociationRule {
                    antecedent: to_files(&ante),
                    consequent: to_files(&cons),
                    support: ratio(whole, n),
                    confidence: conf,
                });
            }
        }
    }
    rules.sort_by(|a, b| {
        a.antecedent
            .cmp(&b.antecedent)
            .then_with(|| a.consequent.cmp(&b.consequent))
    });
    Ok(rules)
}

fn is_sorted_subset(needle: &[u32], haystack: &[u32]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|x| it.any(|y| y == x))
}

/// Drops rules with more than one consequent file and keeps the
/// `max_rules` best by [`AssociationRule::rank_cmp`].
pub fn filter_rules<I>(rules: I, max_rules: usize) -> Vec<AssociationRule>
where
    I: IntoIterator<Item = AssociationRule>,
{
    let mut kept: Vec<AssociationRule> = rules
        .into_iter()
        .filter(|r| r.consequent.len() == 1)
        .collect();
    kept.sort_by(AssociationRule::rank_cmp);
    kept.truncate(max_rules);
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(files: &[&str]) -> BTreeSet<FilePath> {
        files.iter().map(|f| FilePath::from(*f)).collect()
    }

    fn db(rows: &[&[&'static str]]) -> TransactionDatabase {
        TransactionDatabase::new(
            rows.iter()
                .enumerate()
                .map(|(i, r)| Transaction {
                    files: set(r),
                    source_commit: CommitId::from_bytes([i as u8; 20]),
                })
                .collect(),
        )
        .unwrap()
    }

    fn sample() -> TransactionDatabase {
        db(&[&["a", "b"], &["a", "b", "c"], &["a", "c"], &["b", "c"], &["a", "b"]])
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn support_counts_containing_transactions() {
        let sample = sample();
        assert_eq!(support(&sample, &set(&["a", "b"])).unwrap(), r(3, 5));
        assert_eq!(support(&sample, &set(&["a"])).unwrap(), r(4, 5));
        assert_eq!(support(&sample, &set(&["z"])).unwrap(), r(0, 1));
        let everywhere = db(&[&["x", "y"], &["x"]]);
        assert_eq!(support(&everywhere, &set(&["x"])).unwrap(), r(1, 1));
    }

    #[test]
    fn support_rejects_empty_inputs() {
        assert!(support(&TransactionDatabase::default(), &set(&["a"])).is_err());
        assert!(support(&sample(), &BTreeSet::new()).is_err());
    }

    #[test]
    fn confidence_examples() {
        let sample = sample();
        assert_eq!(confidence(&sample, &set(&["a"]), &set(&["b"])).unwrap(), r(3, 4));
        let implied = db(&[&["x", "y"], &["x", "y", "z"], &["z"]]);
        assert_eq!(confidence(&implied, &set(&["x"]), &set(&["y"])).unwrap(), r(1, 1));
        let apart = db(&[&["x"], &["y"]]);
        assert_eq!(confidence(&apart, &set(&["x"]), &set(&["y"])).unwrap(), r(0, 1));
        assert!(matches!(
            confidence(&sample, &set(&["q"]), &set(&["a"])),
            Err(Error::UndefinedConfidence)
        ));
    }

    #[test]
    fn apriori_single_transaction() {
        let rules = apriori(&db(&[&["a", "b"]]), r(1, 10), r(1, 10)).unwrap();
        assert_eq!(rules.len(), 2);
        for rule in &rules {
            assert_eq!(rule.support, r(1, 1));
            assert_eq!(rule.confidence, r(1, 1));
        }
        assert_eq!(rules[0].antecedent, set(&["a"]));
        assert_eq!(rules[1].antecedent, set(&["b"]));
    }

    #[test]
    fn apriori_minsup_one_without_universal_item() {
        assert!(apriori(&sample(), r(1, 1), r(1, 10)).unwrap().is_empty());
    }

    #[test]
    fn apriori_contains_a_to_b() {
        let rules = apriori(&sample(), r(1, 2), r(1, 2)).unwrap();
        let ab = rules
            .iter()
            .find(|x| x.antecedent == set(&["a"]) && x.consequent == set(&["b"]))
            .expect("a -> b mined");
        assert_eq!((ab.support, ab.confidence), (r(3, 5), r(3, 4)));
    }

    #[test]
    fn apriori_rejects_bad_thresholds() {
        assert!(apriori(&sample(), r(0, 1), r(1, 2)).is_err());
        assert!(apriori(&sample(), r(1, 2), r(3, 2)).is_err());
        assert!(apriori(&TransactionDatabase::default(), r(1, 2), r(1, 2)).is_err());
    }

    #[test]
    fn single_consequent_variant_matches_filtered_output() {
        let db = sample();
        let all: Vec<_> = apriori(&db, r(1, 10), r(1, 10))
            .unwrap()
            .into_iter()
            .filter(|x| x.consequent.len() == 1)
            .collect();
        assert_eq!(apriori_single_consequent(&db, r(1, 10), r(1, 10)).unwrap(), all);
    }

    #[test]
    fn top_rules_match_filtered_apriori_on_random_databases() {
        use rand::{Rng, SeedableRng};
        let names = ["a", "b", "c", "d", "e", "f", "g", "h"];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..300 {
            let rows: Vec<Vec<&'static str>> = (0..rng.gen_range(1..20))
                .map(|_| {
                    let mut row: Vec<&str> =
                        names.iter().copied().filter(|_| rng.gen_bool(0.45)).collect();
                    if row.is_empty() {
                        row.push(names[rng.gen_range(0..names.len())]);
                    }
                    row
                })
                .collect();
            let refs: Vec<&[&'static str]> = rows.iter().map(|r| r.as_slice()).collect();
            let d = db(&refs);
            let (s, c) = (r(rng.gen_range(1..4), 10), r(rng.gen_range(1..10), 10));
            let k = rng.gen_range(1..15);
            assert_eq!(
                top_single_consequent_rules(&d, s, c, k).unwrap(),
                filter_rules(apriori(&d, s, c).unwrap(), k)
            );
        }
    }

    fn rule(ante: &[&str], cons: &[&str], s: Rational, c: Rational) -> AssociationRule {
        AssociationRule {
            antecedent: set(ante),
            consequent: set(cons),
            support: s,
            confidence: c,
        }
    }

    #[test]
    fn filter_keeps_top_ten_by_support() {
        let rules: Vec<_> = (1..=12)
            .map(|i| rule(&[&format!("a{i:02}")], &["z"], r(i, 100), r(1, 2)))
            .collect();
        let top = filter_rules(rules, 10);
        assert_eq!(top.len(), 10);
        assert_eq!(top[0].support, r(12, 100));
        assert_eq!(top[9].support, r(3, 100));
    }

    #[test]
    fn filter_drops_multi_consequent_rules() {
        let rules = vec![rule(&["a"], &["b", "c"], r(1, 2), r(1, 2))];
        assert!(filter_rules(rules, 10).is_empty());
    }

    #[test]
    fn filter_breaks_support_ties_by_confidence_then_antecedent() {
        let low = rule(&["a"], &["b"], r(1, 2), r(1, 2));
        let high = rule(&["c"], &["b"], r(1, 2), r(3, 4));
        let wide = rule(&["a", "c"], &["d"], r(1, 2), r(3, 4));
        let out = filter_rules(vec![low.clone(), wide.clone(), high.clone()], 10);
        assert_eq!(out, vec![high, wide, low]);
    }
}
