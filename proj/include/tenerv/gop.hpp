// Copyright 2026 The tenerv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Content-aware GoP partitioning. The divergence series scores every interior
// boundary position by the cosine distance between the fused embeddings of the
// frames it separates; the partitioner ranks those scores and greedily repairs
// minimum-length violations by swapping in the next-ranked candidates.

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tenerv/error.hpp"

namespace tenerv {

// scores[i] is D_{i+1}: boundary position t = i+1 splits frames [0,t) | [t,T).
struct DivergenceSeries {
  int total_frames = 0;
  std::vector<double> scores;
};

// D_t = 1 - <x_t, x_{t-1}> / (|x_t| * |x_{t-1}|) for t = 1..T-1.
inline DivergenceSeries divergence(const std::vector<std::vector<double>>& embeddings) {
  const int t_total = static_cast<int>(embeddings.size());
  if (t_total < 2) throw DataError("divergence: need at least 2 frames, got " +
                                   std::to_string(t_total));
  std::vector<double> norms(embeddings.size());
  for (std::size_t t = 0; t < embeddings.size(); ++t) {
    double acc = 0.0;
    for (double v : embeddings[t]) acc += v * v;
    norms[t] = std::sqrt(acc);
    if (norms[t] == 0.0)
      throw DataError("divergence: zero-norm embedding at frame " + std::to_string(t));
  }
  DivergenceSeries series;
  series.total_frames = t_total;
  series.scores.resize(embeddings.size() - 1);
  for (std::size_t t = 1; t < embeddings.size(); ++t) {
    if (embeddings[t].size() != embeddings[t - 1].size())
      throw DataError("divergence: embedding lengths differ between frames " +
                      std::to_string(t - 1) + " and " + std::to_string(t));
    double dot = 0.0;
    for (std::size_t i = 0; i < embeddings[t].size(); ++i)
      dot += embeddings[t][i] * embeddings[t - 1][i];
    const double d = 1.0 - dot / (norms[t] * norms[t - 1]);
    series.scores[t - 1] = std::clamp(d, 0.0, 2.0);
  }
  return series;
}

struct GopPartition {
  int total_frames = 0;
  std::vector<int> boundaries;  // strictly increasing, in (0, total_frames)

  int num_gops() const { return static_cast<int>(boundaries.size()) + 1; }

  std::vector<int> gop_lengths() const {
    std::vector<int> lengths;
    int prev = 0;
    for (int b : boundaries) {
      lengths.push_back(b - prev);
      prev = b;
    }
    lengths.push_back(total_frames - prev);
    return lengths;
  }
};

// Greedy rank-and-repair partitioning:
//   1. rank boundary positions by descending divergence (ties: lower position
//      first), take the top K-1;
//   2. while some GoP is shorter than l_min, find the first offending pair in
//      sorted order, drop its weaker member (sentinels 0 and T are never
//      removable) and swap in the next unused candidate;
//   3. if candidates run out, drop without replacement -- the boundary count
//      shrinks but feasibility is always reached.
inline GopPartition partition(const DivergenceSeries& series, int k_target, int l_min) {
  const int t_total = series.total_frames;
  if (static_cast<int>(series.scores.size()) != t_total - 1)
    throw DataError("partition: divergence series length " +
                    std::to_string(series.scores.size()) + " does not match T = " +
                    std::to_string(t_total));
  if (k_target < 1) throw ConfigError("partition: target GoP count must be >= 1");
  if (l_min < 1) throw ConfigError("partition: minimum GoP length must be >= 1");
  if (static_cast<long long>(k_target) * l_min > t_total)
    throw ConfigError("partition: infeasible, K*L_min = " + std::to_string(k_target * l_min) +
                      " exceeds T = " + std::to_string(t_total));

  std::vector<int> candidates(series.scores.size());
  std::iota(candidates.begin(), candidates.end(), 1);
  std::stable_sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    return series.scores[static_cast<std::size_t>(a - 1)] >
           series.scores[static_cast<std::size_t>(b - 1)];
  });

  std::vector<int> chosen(candidates.begin(), candidates.begin() + (k_target - 1));
  std::size_t next = static_cast<std::size_t>(k_target - 1);
  const auto score = [&](int t) { return series.scores[static_cast<std::size_t>(t - 1)]; };

  for (;;) {
    std::vector<int> fence = chosen;
    fence.push_back(0);
    fence.push_back(t_total);
    std::sort(fence.begin(), fence.end());

    int u = -1, v = -1;
    for (std::size_t i = 0; i + 1 < fence.size(); ++i) {
      if (fence[i + 1] - fence[i] < l_min) {
        u = fence[i];
        v = fence[i + 1];
        break;
      }
    }
    if (u < 0) break;

    int victim;
    const bool u_removable = (u != 0);
    const bool v_removable = (v != t_total);
    if (u_removable && v_removable)
      victim = score(u) <= score(v) ? u : v;  // equal scores: earlier goes
    else
      victim = u_removable ? u : v;

    chosen.erase(std::find(chosen.begin(), chosen.end(), victim));
    if (next < candidates.size()) chosen.push_back(candidates[next++]);
  }

  std::sort(chosen.begin(), chosen.end());
  return GopPartition{t_total, std::move(chosen)};
}

// GoP index of frame t: the number of boundaries at or before t, so a frame
// sitting exactly on a boundary belongs to the later GoP.
inline int frame_to_gop(const GopPartition& p, int t) {
  if (t < 0 || t >= p.total_frames)
    throw IndexError("frame_to_gop: frame " + std::to_string(t) + " outside 0.." +
                     std::to_string(p.total_frames - 1));
  int k = 0;
  for (int b : p.boundaries)
    if (b <= t) ++k;
  return k;
}

// Content-agnostic schemes used by the ablation variants.
inline GopPartition fixed_length_partition(int t_total, int length) {
  if (length < 1) throw ConfigError("fixed_length_partition: length must be >= 1");
  GopPartition p;
  p.total_frames = t_total;
  for (int b = length; b < t_total; b += length) p.boundaries.push_back(b);
  return p;
}

inline GopPartition uniform_partition(int t_total, int k) {
  if (k < 1 || k > t_total) throw ConfigError("uniform_partition: need 1 <= K <= T");
  GopPartition p;
  p.total_frames = t_total;
  for (int i = 1; i < k; ++i) {
    const int b = static_cast<int>(std::llround(static_cast<double>(i) * t_total / k));
    if (b > 0 && b < t_total && (p.boundaries.empty() || b > p.boundaries.back()))
      p.boundaries.push_back(b);
  }
  return p;
}

}  // namespace tenerv
