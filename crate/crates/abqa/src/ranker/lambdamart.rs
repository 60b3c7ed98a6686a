//! Gradient-boosted ranking. Each stage turns pairwise NDCG swap deltas
//! into per-document λ targets, fits a variance-reducing regression tree
//! to them, sets leaf values by a Newton step, and adds the tree with the
//! learning rate as its weight.

use crate::ranker::{Forest, RegressionTree, TreeNode};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LambdaMartConfig {
    pub trees: usize,
    pub learning_rate: f64,
    pub max_leaves: usize,
    pub min_per_leaf: usize,
}

impl Default for LambdaMartConfig {
    fn default() -> Self {
        LambdaMartConfig {
            trees: 100,
            learning_rate: 0.1,
            max_leaves: 8,
            min_per_leaf: 5,
        }
    }
}

/// One training group: candidate feature vectors with binary labels.
pub type Group = (Vec<Vec<f64>>, Vec<u8>);

/// Binary-gain DCG discount at 1-based rank r.
fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// NDCG over the full ranking induced by descending score (stable in the
/// original order on ties). Groups with no positive label score 0.
pub fn ndcg(scores: &[f64], labels: &[u8]) -> f64 {
    let positives = labels.iter().filter(|&&l| l == 1).count();
    if positives == 0 {
        return 0.0;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let dcg: f64 = order
        .iter()
        .enumerate()
        .map(|(r, &i)| f64::from(labels[i]) * discount(r + 1))
        .sum();
    let ideal: f64 = (1..=positives).map(discount).sum();
    dcg / ideal
}

/// Mean NDCG over groups of (scores, labels).
pub fn mean_ndcg(groups: &[(Vec<f64>, Vec<u8>)]) -> f64 {
    if groups.is_empty() {
        return 0.0;
    }
    groups.iter().map(|(s, l)| ndcg(s, l)).sum::<f64>() / groups.len() as f64
}

/// λ and Newton-denominator accumulation for one group under the current
/// scores. For each (positive, negative) pair: ρ = σ(s_j − s_i), weighted
/// by the NDCG change of swapping the two ranks.
fn accumulate_lambdas(
    scores: &[f64],
    labels: &[u8],
    lambdas: &mut [f64],
    hessians: &mut [f64],
) {
    let n = scores.len();
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let ideal: f64 = (1..=positives).map(discount).sum();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
    let mut rank = vec![0usize; n];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r + 1;
    }
    for i in 0..n {
        if labels[i] != 1 {
            continue;
        }
        for j in 0..n {
            if labels[j] != 0 {
                continue;
            }
            let delta = (discount(rank[i]) - discount(rank[j])).abs() / ideal;
            let rho = 1.0 / (1.0 + (scores[i] - scores[j]).exp());
            let lambda = delta * rho;
            lambdas[i] += lambda;
            lambdas[j] -= lambda;
            let h = delta * rho * (1.0 - rho);
            hessians[i] += h;
            hessians[j] += h;
        }
    }
}

enum Grown {
    Leaf {
        docs: Vec<usize>,
        // Best split found for this leaf, if any: (gain, feature, threshold).
        split: Option<(f64, usize, f64)>,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Best variance-reducing split of `docs` on any feature, honoring the
/// minimum leaf size. Gain is the reduction in Σ(λ−mean)², computed as the
/// increase of Σ²/n over the two sides; ties keep the first candidate.
fn best_split(
    docs: &[usize],
    features: &[Vec<f64>],
    lambdas: &[f64],
    min_per_leaf: usize,
) -> Option<(f64, usize, f64)> {
    if docs.len() < 2 * min_per_leaf {
        return None;
    }
    let arity = features[docs[0]].len();
    let total: f64 = docs.iter().map(|&d| lambdas[d]).sum();
    let base = total * total / docs.len() as f64;
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..arity {
        let mut sorted: Vec<usize> = docs.to_vec();
        sorted.sort_by(|&a, &b| features[a][f].partial_cmp(&features[b][f]).unwrap());
        let mut left_sum = 0.0;
        for cut in 1..sorted.len() {
            left_sum += lambdas[sorted[cut - 1]];
            let lo = features[sorted[cut - 1]][f];
            let hi = features[sorted[cut]][f];
            if lo == hi || cut < min_per_leaf || sorted.len() - cut < min_per_leaf {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / cut as f64
                + right_sum * right_sum / (sorted.len() - cut) as f64
                - base;
            if gain > best.map_or(0.0, |(g, _, _)| g) {
                best = Some((gain, f, lo + (hi - lo) / 2.0));
            }
        }
    }
    best
}

/// Grows a tree by repeatedly splitting the leaf with the largest gain
/// (ties keep the earliest leaf). Leaf values are the Newton step Σλ / Σh,
/// or 0 when the denominator vanishes.
fn fit_tree(
    docs: Vec<usize>,
    features: &[Vec<f64>],
    lambdas: &[f64],
    hessians: &[f64],
    config: &LambdaMartConfig,
) -> RegressionTree {
    let mut arena = vec![Grown::Leaf {
        split: best_split(&docs, features, lambdas, config.min_per_leaf),
        docs,
    }];
    let mut leaf_count = 1;
    while leaf_count < config.max_leaves {
        let mut target: Option<(usize, f64)> = None;
        for (i, node) in arena.iter().enumerate() {
            if let Grown::Leaf {
                split: Some((gain, _, _)),
                ..
            } = node
            {
                if target.is_none_or(|(_, g)| *gain > g) {
                    target = Some((i, *gain));
                }
            }
        }
        let Some((index, _)) = target else { break };
        let placeholder = Grown::Split {
            feature: 0,
            threshold: 0.0,
            left: 0,
            right: 0,
        };
        let Grown::Leaf { docs, split } = std::mem::replace(&mut arena[index], placeholder)
        else {
            unreachable!("target is a leaf");
        };
        let (_, feature, threshold) = split.expect("selected leaf has a split");
        let (ldocs, rdocs): (Vec<usize>, Vec<usize>) = docs
            .into_iter()
            .partition(|&d| features[d][feature] <= threshold);
        let left = arena.len();
        arena.push(Grown::Leaf {
            split: best_split(&ldocs, features, lambdas, config.min_per_leaf),
            docs: ldocs,
        });
        let right = arena.len();
        arena.push(Grown::Leaf {
            split: best_split(&rdocs, features, lambdas, config.min_per_leaf),
            docs: rdocs,
        });
        arena[index] = Grown::Split {
            feature,
            threshold,
            left,
            right,
        };
        leaf_count += 1;
    }
    fn convert(arena: &[Grown], index: usize, lambdas: &[f64], hessians: &[f64]) -> TreeNode {
        match &arena[index] {
            Grown::Leaf { docs, .. } => {
                let num: f64 = docs.iter().map(|&d| lambdas[d]).sum();
                let den: f64 = docs.iter().map(|&d| hessians[d]).sum();
                TreeNode::Leaf(if den > 0.0 { num / den } else { 0.0 })
            }
            Grown::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(convert(arena, *left, lambdas, hessians)),
                right: Box::new(convert(arena, *right, lambdas, hessians)),
            },
        }
    }
    RegressionTree {
        root: convert(&arena, 0, lambdas, hessians),
    }
}

pub fn fit_lambdamart(groups: &[Group], config: &LambdaMartConfig) -> Result<Forest> {
    let usable: Vec<&Group> = groups
        .iter()
        .filter(|(_, labels)| {
            labels.iter().any(|&l| l == 1) && labels.iter().any(|&l| l == 0)
        })
        .collect();
    if usable.is_empty() {
        return Err(Error::Data(
            "no training group has both a positive and a negative label".into(),
        ));
    }
    let arity = usable[0].0.first().map_or(0, Vec::len);
    for (fvs, labels) in &usable {
        if fvs.len() != labels.len() {
            return Err(Error::Data("feature/label count mismatch in group".into()));
        }
        for fv in fvs {
            if fv.len() != arity {
                return Err(Error::Shape(format!(
                    "feature arity {} differs from {}",
                    fv.len(),
                    arity
                )));
            }
            if fv.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("feature vector".into()));
            }
        }
    }
    // Flatten docs, remembering group boundaries.
    let mut features: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut bounds = Vec::new();
    for (fvs, ls) in &usable {
        let start = features.len();
        features.extend(fvs.iter().cloned());
        labels.extend(ls.iter().copied());
        bounds.push(start..features.len());
    }
    let mut scores = vec![0.0; features.len()];
    let mut trees = Vec::with_capacity(config.trees);
    for _ in 0..config.trees {
        let mut lambdas = vec![0.0; features.len()];
        let mut hessians = vec![0.0; features.len()];
        for range in &bounds {
            accumulate_lambdas(
                &scores[range.clone()],
                &labels[range.clone()],
                &mut lambdas[range.clone()],
                &mut hessians[range.clone()],
            );
        }
        let tree = fit_tree(
            (0..features.len()).collect(),
            &features,
            &lambdas,
            &hessians,
            config,
        );
        for (i, s) in scores.iter_mut().enumerate() {
            *s += config.learning_rate * tree.eval(&features[i]);
        }
        trees.push((config.learning_rate, tree));
    }
    Forest::new(arity, trees)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranker::{eval_rank, forest_to_string};

    fn toy_config() -> LambdaMartConfig {
        LambdaMartConfig {
            trees: 30,
            learning_rate: 0.1,
            max_leaves: 4,
            min_per_leaf: 1,
        }
    }

    // Feature 0 equals the label; feature 1 is an uninformative constant.
    fn separable_groups() -> Vec<Group> {
        vec![
            (
                vec![vec![1.0, 0.3], vec![0.0, 0.3], vec![0.0, 0.3]],
                vec![1, 0, 0],
            ),
            (vec![vec![0.0, 0.3], vec![1.0, 0.3]], vec![0, 1]),
            (
                vec![vec![1.0, 0.3], vec![1.0, 0.3], vec![0.0, 0.3]],
                vec![1, 1, 0],
            ),
        ]
    }

    fn ranked_labels(forest: &Forest, group: &Group) -> Vec<u8> {
        let (fvs, labels) = group;
        let mut order: Vec<usize> = (0..fvs.len()).collect();
        let scores: Vec<f64> = fvs.iter().map(|fv| forest.score(fv).unwrap()).collect();
        order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());
        order.iter().map(|&i| labels[i]).collect()
    }

    #[test]
    fn separable_single_feature_reaches_perfect_training_map() {
        let groups = separable_groups();
        let forest = fit_lambdamart(&groups, &toy_config()).unwrap();
        let ranked: Vec<Vec<u8>> = groups.iter().map(|g| ranked_labels(&forest, g)).collect();
        let metrics = eval_rank(&ranked).unwrap();
        assert_eq!(metrics.map, 1.0, "training MAP should be perfect");
    }

    #[test]
    fn uniform_labels_are_rejected() {
        let groups: Vec<Group> = vec![
            (vec![vec![1.0], vec![0.5]], vec![1, 1]),
            (vec![vec![0.2]], vec![0]),
        ];
        assert!(fit_lambdamart(&groups, &toy_config()).is_err());
    }

    #[test]
    fn zero_trees_give_the_empty_forest() {
        let config = LambdaMartConfig {
            trees: 0,
            ..toy_config()
        };
        let forest = fit_lambdamart(&separable_groups(), &config).unwrap();
        assert!(forest.trees.is_empty());
        assert_eq!(forest.score(&[0.4, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn training_is_deterministic() {
        let a = fit_lambdamart(&separable_groups(), &toy_config()).unwrap();
        let b = fit_lambdamart(&separable_groups(), &toy_config()).unwrap();
        assert_eq!(forest_to_string(&a, 0.1), forest_to_string(&b, 0.1));
    }

    #[test]
    fn training_ndcg_does_not_degrade() {
        // Noisy but learnable: feature 0 correlates with the label,
        // feature 1 anti-correlates weakly.
        let groups: Vec<Group> = vec![
            (
                vec![vec![0.9, 0.2], vec![0.1, 0.8], vec![0.4, 0.1], vec![0.35, 0.9]],
                vec![1, 0, 0, 1],
            ),
            (
                vec![vec![0.7, 0.4], vec![0.6, 0.2], vec![0.2, 0.6]],
                vec![1, 0, 0],
            ),
            (vec![vec![0.5, 0.5], vec![0.45, 0.1]], vec![1, 0]),
        ];
        let initial: Vec<(Vec<f64>, Vec<u8>)> = groups
            .iter()
            .map(|(fvs, ls)| (vec![0.0; fvs.len()], ls.clone()))
            .collect();
        let forest = fit_lambdamart(&groups, &toy_config()).unwrap();
        let trained: Vec<(Vec<f64>, Vec<u8>)> = groups
            .iter()
            .map(|(fvs, ls)| {
                (
                    fvs.iter().map(|fv| forest.score(fv).unwrap()).collect(),
                    ls.clone(),
                )
            })
            .collect();
        assert!(mean_ndcg(&trained) >= mean_ndcg(&initial) - 1e-9);
    }

    #[test]
    fn ndcg_hand_values() {
        // Perfect ranking.
        assert_eq!(ndcg(&[2.0, 1.0], &[1, 0]), 1.0);
        // Positive at rank 2 of 2: DCG = 1/log2(3), IDCG = 1.
        let expected = 1.0 / 3.0f64.log2();
        assert!((ndcg(&[1.0, 2.0], &[1, 0]) - expected).abs() < 1e-12);
        // No positives contribute zero.
        assert_eq!(ndcg(&[1.0, 2.0], &[0, 0]), 0.0);
    }
}
