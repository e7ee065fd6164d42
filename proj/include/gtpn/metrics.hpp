// Evaluation metrics over datasets of reaction records.
//
// Pair-level metrics (coverage@k, recall@k) measure the pair scorer in
// isolation: score every candidate atom pair of the input graph once, in the
// initial state, and ask how much of the gold edit set the k best-scored
// pairs capture. Sequence-level metrics (precision@k) measure the full
// decoder: run beam search, post-process, and ask whether a gold-matching
// candidate appears among the k best.
#pragma once

#include <vector>

#include "gtpn/model.hpp"
#include "gtpn/reaction_io.hpp"

namespace gtpn {

// Fraction of reactions whose gold pairs are ALL within the k best-scored
// candidate pairs of the initial scoring pass. Reactions with no gold pairs
// count as covered.
double coverage_at_k(Model& model, const std::vector<ReactionRecord>& records, int k);

// Pooled pair recall: sum over reactions of |gold pairs among the k best|
// divided by the total number of gold pairs. 1.0 when there are none.
double recall_at_k(Model& model, const std::vector<ReactionRecord>& records, int k);

// Fraction of reactions where some candidate among the k best (after beam
// search and post-processing) matches the gold product.
double precision_at_k(Model& model, const std::vector<ReactionRecord>& records, int k,
                      int beam_width);

// All three families in one pass per record, for the listed k values.
struct MetricsReport {
  std::vector<int> ks;
  std::vector<double> coverage;   // coverage@k per ks entry
  std::vector<double> recall;     // recall@k per ks entry
  std::vector<double> precision;  // precision@k per ks entry
};

MetricsReport evaluate_metrics(Model& model, const std::vector<ReactionRecord>& records,
                               const std::vector<int>& ks, int beam_width);

}  // namespace gtpn
