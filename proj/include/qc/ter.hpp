#pragma once

#include <cstddef>

#include "qc/corpus.hpp"

namespace qc::ter {

struct EditBreakdown {
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t substitutions = 0;

  std::size_t total() const { return insertions + deletions + substitutions; }
  bool operator==(const EditBreakdown&) const = default;
};

struct EditDistance {
  std::size_t distance = 0;
  EditBreakdown breakdown;

  bool operator==(const EditDistance&) const = default;
};

struct TERResult {
  std::size_t insertions = 0;
  std::size_t deletions = 0;
  std::size_t substitutions = 0;
  std::size_t shifts = 0;
  std::size_t ref_len = 0;
  double score = 0.0;

  std::size_t total_edits() const { return insertions + deletions + substitutions + shifts; }
  bool operator==(const TERResult&) const = default;
};

struct TEROptions {
  std::size_t max_shift_length = 10;
};

// Unit-cost word Levenshtein distance turning hyp into ref. The breakdown
// follows one optimal alignment; on ties the backtrace prefers a diagonal
// step (match/substitution), then deletion, then insertion.
EditDistance edit_distance(const Tokens& hyp, const Tokens& ref);

// Greedy block-shift TER. Each round evaluates every hypothesis block (up
// to max_shift_length tokens) that occurs verbatim in the reference and is
// not already aligned there, moved to each cut point the current alignment
// assigns to that reference position. The shift with the largest edit
// distance reduction is applied if that reduction exceeds the unit shift
// cost; ties go to the shorter block, then the leftmost origin.
TERResult ter(const Tokens& hyp, const Tokens& ref, const TEROptions& options = {});

// TER against a human post-edit; the post-edit is the reference.
double hter(const Tokens& mt, const Tokens& post_edit);

}  // namespace qc::ter
