#include "qc/ter.hpp"

#include <algorithm>
#include <cstdint>
#include <set>
#include <tuple>
#include <vector>

#include "qc/error.hpp"

namespace qc::ter {
namespace {

enum class Step : std::uint8_t { match, substitute, remove, insert };

struct Alignment {
  EditDistance cost;
  // Path states (i, j) from (0, 0) to (n, m): hyp[0, i) aligned to ref[0, j).
  std::vector<std::pair<std::size_t, std::size_t>> states;
  // hyp position -> ref position for exact matches, or -1.
  std::vector<std::ptrdiff_t> hyp_match;
};

Alignment align(const Tokens& hyp, const Tokens& ref) {
  const std::size_t n = hyp.size();
  const std::size_t m = ref.size();
  const std::size_t width = m + 1;
  std::vector<std::size_t> table((n + 1) * width);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return table[i * width + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }

  Alignment result;
  result.cost.distance = at(n, m);
  result.hyp_match.assign(n, -1);
  std::size_t i = n;
  std::size_t j = m;
  result.states.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = hyp[i - 1] == ref[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (same) {
          result.hyp_match[i - 1] = static_cast<std::ptrdiff_t>(j - 1);
        } else {
          ++result.cost.breakdown.substitutions;
        }
        --i;
        --j;
        result.states.emplace_back(i, j);
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++result.cost.breakdown.deletions;
      --i;
    } else {
      ++result.cost.breakdown.insertions;
      --j;
    }
    result.states.emplace_back(i, j);
  }
  std::reverse(result.states.begin(), result.states.end());
  return result;
}

std::size_t distance_only(const Tokens& hyp, const Tokens& ref) {
  const std::size_t m = ref.size();
  std::vector<std::size_t> prev(m + 1);
  std::vector<std::size_t> cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1);
      cur[j] = std::min({diag, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

Tokens apply_shift(const Tokens& hyp, std::size_t start, std::size_t length, std::size_t dest) {
  Tokens rest;
  rest.reserve(hyp.size());
  rest.insert(rest.end(), hyp.begin(), hyp.begin() + static_cast<std::ptrdiff_t>(start));
  rest.insert(rest.end(), hyp.begin() + static_cast<std::ptrdiff_t>(start + length), hyp.end());
  rest.insert(rest.begin() + static_cast<std::ptrdiff_t>(dest),
              hyp.begin() + static_cast<std::ptrdiff_t>(start),
              hyp.begin() + static_cast<std::ptrdiff_t>(start + length));
  return rest;
}

struct Shift {
  std::size_t gain = 0;
  std::size_t length = 0;
  std::size_t start = 0;
  std::size_t dest = 0;
  Tokens result;
};

bool better(const Shift& a, const Shift& b) {
  return std::tuple(b.gain, a.length, a.start, a.dest) < std::tuple(a.gain, b.length, b.start, b.dest);
}

std::optional<Shift> best_shift(const Tokens& hyp, const Tokens& ref, const Alignment& alignment,
                                std::size_t max_length) {
  const std::size_t n = hyp.size();
  const std::size_t m = ref.size();

  // Cut points per reference column.
  std::vector<std::vector<std::size_t>> cuts(m + 1);
  for (const auto& [i, j] : alignment.states) cuts[j].push_back(i);

  std::optional<Shift> best;
  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> tried;
  for (std::size_t start = 0; start < n; ++start) {
    for (std::size_t length = 1; length <= max_length && start + length <= n; ++length) {
      bool occurs = false;
      for (std::size_t r = 0; r + length <= m; ++r) {
        if (!std::equal(hyp.begin() + static_cast<std::ptrdiff_t>(start),
                        hyp.begin() + static_cast<std::ptrdiff_t>(start + length),
                        ref.begin() + static_cast<std::ptrdiff_t>(r))) {
          continue;
        }
        occurs = true;
        bool aligned = true;
        for (std::size_t k = 0; k < length && aligned; ++k) {
          aligned = alignment.hyp_match[start + k] == static_cast<std::ptrdiff_t>(r + k);
        }
        if (aligned) continue;
        for (std::size_t cut : cuts[r]) {
          if (cut > start && cut < start + length) continue;
          const std::size_t dest = cut <= start ? cut : cut - length;
          if (dest == start) continue;
          if (!tried.emplace(start, length, dest).second) continue;
          Shift candidate;
          candidate.result = apply_shift(hyp, start, length, dest);
          const std::size_t after = distance_only(candidate.result, ref);
          if (after >= alignment.cost.distance) continue;
          candidate.gain = alignment.cost.distance - after;
          candidate.length = length;
          candidate.start = start;
          candidate.dest = dest;
          if (!best || better(candidate, *best)) best = std::move(candidate);
        }
      }
      // A longer block starting here cannot occur if this one does not.
      if (!occurs) break;
    }
  }
  return best;
}

}  // namespace

EditDistance edit_distance(const Tokens& hyp, const Tokens& ref) {
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, "reference has no tokens");
  return align(hyp, ref).cost;
}

TERResult ter(const Tokens& hyp, const Tokens& ref, const TEROptions& options) {
  if (ref.empty()) throw Error(ErrorCode::EmptyReference, "reference has no tokens");
  Tokens current = hyp;
  std::size_t shifts = 0;
  Alignment alignment = align(current, ref);
  while (alignment.cost.distance > 1) {
    auto shift = best_shift(current, ref, alignment, options.max_shift_length);
    // A shift costs one edit; apply only if the total strictly drops.
    if (!shift || shift->gain <= 1) break;
    current = std::move(shift->result);
    ++shifts;
    alignment = align(current, ref);
  }

  TERResult result;
  result.insertions = alignment.cost.breakdown.insertions;
  result.deletions = alignment.cost.breakdown.deletions;
  result.substitutions = alignment.cost.breakdown.substitutions;
  result.shifts = shifts;
  result.ref_len = ref.size();
  result.score = static_cast<double>(result.total_edits()) / static_cast<double>(result.ref_len);
  return result;
}

double hter(const Tokens& mt, const Tokens& post_edit) { return ter(mt, post_edit).score; }

}  // namespace qc::ter
