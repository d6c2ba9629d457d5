//! Position and transition metrics, aggregation and report files.

mod report;

pub use report::{
    aggregate_position, aggregate_transition, percent, position_rows_csv, transition_rows_csv,
    ConfusionMatrix, EvaluationReport, PositionReport, PositionRow, TransitionReport,
    TransitionRow, MISCELLANEOUS,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, find_embedding, AtomMapSet, Molecule};
use crate::output::{DisconnectionCandidate, TransitionPrediction};
use crate::reaction::normalize_name;

/// Minimum share of template atoms that must carry ground-truth maps.
pub const TEMPLATE_SHARE_THRESHOLD: f64 = 0.75;

/// |a ∩ b| / |a ∪ b|; two empty sets count as identical.
pub fn jaccard(a: &AtomMapSet, b: &AtomMapSet) -> f64 {
    let union = a.union_len(b);
    if union == 0 {
        return 1.0;
    }
    a.intersection_len(b) as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionScore {
    pub partial_match: bool,
    pub best_jaccard: f64,
    pub exact_match: bool,
    /// Set only when `partial_match`.
    pub reaction_match: Option<bool>,
    /// Same, but the matching candidate must also be in the ontology.
    pub reaction_match_in_ontology: Option<bool>,
    pub n_predictions: usize,
    pub failed: bool,
}

fn best_candidates<'a>(
    cands: &'a [DisconnectionCandidate],
    s_gt: &AtomMapSet,
) -> (f64, Vec<&'a DisconnectionCandidate>) {
    let best = cands
        .iter()
        .map(|c| jaccard(&c.s, s_gt))
        .fold(0.0, f64::max);
    let tied = cands
        .iter()
        .filter(|c| jaccard(&c.s, s_gt) == best)
        .collect();
    (best, tied)
}

/// Only candidates at the best Jaccard are eligible for the reaction check.
pub fn score_position(
    cands: &[DisconnectionCandidate],
    s_gt: &AtomMapSet,
    beta_gt: &str,
) -> PositionScore {
    let partial_match = cands.iter().any(|c| c.s.intersection_len(s_gt) > 0);
    let (best_jaccard, eligible) = best_candidates(cands, s_gt);
    let gt = normalize_name(beta_gt);
    let name_hit = |c: &&DisconnectionCandidate| normalize_name(&c.reaction_name) == gt;
    PositionScore {
        partial_match,
        best_jaccard,
        exact_match: !cands.is_empty() && best_jaccard == 1.0,
        reaction_match: partial_match.then(|| eligible.iter().any(name_hit)),
        reaction_match_in_ontology: partial_match
            .then(|| eligible.iter().filter(|c| c.in_ontology).any(name_hit)),
        n_predictions: cands.len(),
        failed: cands.is_empty(),
    }
}

/// The candidate a confusion matrix uses for one example: best Jaccard first,
/// then a name match, then the smallest priority.
pub fn confusion_candidate<'a>(
    cands: &'a [DisconnectionCandidate],
    s_gt: &AtomMapSet,
    beta_gt: &str,
) -> Option<&'a DisconnectionCandidate> {
    if !cands.iter().any(|c| c.s.intersection_len(s_gt) > 0) {
        return None;
    }
    let (_, eligible) = best_candidates(cands, s_gt);
    let gt = normalize_name(beta_gt);
    eligible
        .iter()
        .find(|c| normalize_name(&c.reaction_name) == gt)
        .or_else(|| eligible.iter().min_by_key(|c| c.priority))
        .copied()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    pub ignore_stereo: bool,
}

/// Canonical map-free SMILES of every fragment, sorted.
pub fn reactant_multiset(mols: &[Molecule], opts: MatchOptions) -> Vec<String> {
    let mut out: Vec<String> = mols
        .iter()
        .flat_map(|m| m.fragments())
        .map(|f| {
            let f = if opts.ignore_stereo {
                f.without_stereo()
            } else {
                f
            };
            canonical_smiles(&f, false)
        })
        .collect();
    out.sort();
    out
}

/// Template atoms that are not wildcards.
pub fn template_atom_count(t: &Molecule) -> usize {
    t.atoms()
        .iter()
        .filter(|a| a.is_heavy() && !a.is_wildcard())
        .count()
}

/// Shared maps over the template's non-wildcard heavy atoms.
pub fn atom_share(template: &Molecule, gt: &Molecule) -> f64 {
    let denom = template_atom_count(template);
    if denom == 0 {
        return 0.0;
    }
    template.atom_maps().intersection_len(&gt.atom_maps()) as f64 / denom as f64
}

/// Shared maps over the ground-truth reactant's heavy atoms.
pub fn atom_share_gt(template: &Molecule, gt: &Molecule) -> f64 {
    let denom = gt.heavy_atom_count();
    if denom == 0 {
        return 0.0;
    }
    template.atom_maps().intersection_len(&gt.atom_maps()) as f64 / denom as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedPair {
    pub gt_index: usize,
    pub template_index: usize,
    pub share: f64,
    pub share_gt: f64,
    /// Template atom i sits on ground-truth atom `embedding[i]`.
    pub embedding: Vec<usize>,
}

/// Evidence for a template hit: which prediction, and the pairing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateCertificate {
    pub prediction: usize,
    /// Template fragments, in the order `template_index` refers to.
    pub templates: Vec<Molecule>,
    pub pairs: Vec<CertifiedPair>,
}

/// Kuhn's augmenting-path matching; `adj[l]` lists right nodes for left `l`.
/// Returns `right_of[l]` when every left node is matched.
pub fn perfect_left_matching(adj: &[Vec<usize>], n_right: usize) -> Option<Vec<usize>> {
    fn augment(
        l: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        left_of: &mut [Option<usize>],
    ) -> bool {
        for &r in &adj[l] {
            if seen[r] {
                continue;
            }
            seen[r] = true;
            if left_of[r].is_none_or(|other| augment(other, adj, seen, left_of)) {
                left_of[r] = Some(l);
                return true;
            }
        }
        false
    }
    let mut left_of: Vec<Option<usize>> = vec![None; n_right];
    for l in 0..adj.len() {
        let mut seen = vec![false; n_right];
        if !augment(l, adj, &mut seen, &mut left_of) {
            return None;
        }
    }
    let mut right_of = vec![usize::MAX; adj.len()];
    for (r, l) in left_of.iter().enumerate() {
        if let Some(l) = l {
            right_of[*l] = r;
        }
    }
    Some(right_of)
}

/// Pairs every ground-truth reactant with its own template fragment under
/// `accept(share, share_gt)` plus a substructure embedding.
fn certify(
    templates: &[Molecule],
    r_gt: &[Molecule],
    accept: impl Fn(f64, f64) -> bool,
) -> Option<Vec<CertifiedPair>> {
    let mut adj = vec![Vec::new(); r_gt.len()];
    let mut evidence = BTreeMap::new();
    for (g, gt) in r_gt.iter().enumerate() {
        for (t, tm) in templates.iter().enumerate() {
            let (share, share_gt) = (atom_share(tm, gt), atom_share_gt(tm, gt));
            if !accept(share, share_gt) {
                continue;
            }
            if let Some(embedding) = find_embedding(tm, gt) {
                adj[g].push(t);
                evidence.insert(
                    (g, t),
                    CertifiedPair {
                        gt_index: g,
                        template_index: t,
                        share,
                        share_gt,
                        embedding,
                    },
                );
            }
        }
    }
    let right_of = perfect_left_matching(&adj, templates.len())?;
    Some(
        right_of
            .iter()
            .enumerate()
            .map(|(g, &t)| evidence.remove(&(g, t)).expect("edge has evidence"))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionScore {
    pub template_acc: bool,
    pub reactant_acc: bool,
    pub combined_acc: bool,
    /// Template accuracy with the ground-truth reactant as the share denominator.
    pub template_acc_gt_share: bool,
    pub n_predictions: usize,
    pub failed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<TemplateCertificate>,
}

/// `r_gt` holds reactants only. Both accuracies consider valid predictions only.
pub fn score_transition(
    preds: &[TransitionPrediction],
    r_gt: &[Molecule],
    opts: MatchOptions,
) -> TransitionScore {
    let r_gt: Vec<Molecule> = r_gt.iter().flat_map(|m| m.fragments()).collect();
    let gt_set = reactant_multiset(&r_gt, opts);
    let reactant_acc = preds
        .iter()
        .filter(|p| p.is_valid && !p.is_template)
        .any(|p| reactant_multiset(&p.reactants, opts) == gt_set);

    let mut certificate = None;
    let mut template_acc_gt_share = false;
    for (i, p) in preds
        .iter()
        .enumerate()
        .filter(|(_, p)| p.is_valid && p.is_template)
    {
        let templates: Vec<Molecule> = p.reactants.iter().flat_map(|m| m.fragments()).collect();
        if certificate.is_none() {
            if let Some(pairs) = certify(&templates, &r_gt, |s, _| s >= TEMPLATE_SHARE_THRESHOLD) {
                certificate = Some(TemplateCertificate {
                    prediction: i,
                    templates: templates.clone(),
                    pairs,
                });
            }
        }
        if !template_acc_gt_share {
            template_acc_gt_share =
                certify(&templates, &r_gt, |_, s| s >= TEMPLATE_SHARE_THRESHOLD).is_some();
        }
    }
    let template_acc = certificate.is_some();
    TransitionScore {
        template_acc,
        reactant_acc,
        combined_acc: template_acc || reactant_acc,
        template_acc_gt_share,
        n_predictions: preds.len(),
        failed: preds.is_empty(),
        certificate,
    }
}
