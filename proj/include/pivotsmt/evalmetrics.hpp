// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "pivotsmt/errors.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

// Additive per-corpus sufficient statistics.  `match` is real-valued so the
// same accumulator serves both exact and soft (fractional) n-gram matching.
struct BleuStats {
  std::vector<double> match;
  std::vector<std::size_t> total;
  std::size_t cand_len = 0;
  std::size_t ref_len = 0;

  explicit BleuStats(std::size_t max_order = 4)
      : match(max_order, 0.0), total(max_order, 0) {}

  std::size_t max_order() const { return match.size(); }

  BleuStats& operator+=(const BleuStats& o) {
    if (o.match.size() != match.size()) throw DimensionMismatch();
    for (std::size_t n = 0; n < match.size(); ++n) {
      match[n] += o.match[n];
      total[n] += o.total[n];
    }
    cand_len += o.cand_len;
    ref_len += o.ref_len;
    return *this;
  }
};

namespace detail {

inline std::vector<std::vector<std::string>> ngrams_of(
    const std::vector<std::string>& words, std::size_t n) {
  std::vector<std::vector<std::string>> out;
  if (words.size() >= n)
    for (std::size_t i = 0; i + n <= words.size(); ++i)
      out.emplace_back(words.begin() + i, words.begin() + i + n);
  return out;
}

}  // namespace detail

inline BleuStats sentence_bleu_stats(const std::vector<std::string>& cand,
                                     const std::vector<std::string>& ref,
                                     std::size_t max_order = 4) {
  BleuStats st(max_order);
  st.cand_len = cand.size();
  st.ref_len = ref.size();
  for (std::size_t n = 1; n <= max_order; ++n) {
    std::map<std::vector<std::string>, std::size_t> ref_counts;
    for (auto& g : detail::ngrams_of(ref, n)) ref_counts[g] += 1;
    std::size_t matches = 0, totals = 0;
    for (auto& g : detail::ngrams_of(cand, n)) {
      ++totals;
      auto it = ref_counts.find(g);
      if (it != ref_counts.end() && it->second > 0) {
        ++matches;
        --it->second;  // clipping
      }
    }
    st.match[n - 1] = static_cast<double>(matches);
    st.total[n - 1] = totals;
  }
  return st;
}

// Soft matching: two n-grams match with credit 1 − d/L where d is the
// character edit distance of their space-joined forms and L the longer
// length, provided credit ≥ threshold; greedy best-credit assignment with
// no reuse on either side.
inline BleuStats sentence_lebleu_stats(const std::vector<std::string>& cand,
                                       const std::vector<std::string>& ref,
                                       double threshold,
                                       std::size_t max_order = 4) {
  BleuStats st(max_order);
  st.cand_len = cand.size();
  st.ref_len = ref.size();
  for (std::size_t n = 1; n <= max_order; ++n) {
    auto cgrams = detail::ngrams_of(cand, n);
    auto rgrams = detail::ngrams_of(ref, n);
    std::vector<std::u32string> cstr, rstr;
    for (auto& g : cgrams) cstr.push_back(utf8_decode(join(g, " ")));
    for (auto& g : rgrams) rstr.push_back(utf8_decode(join(g, " ")));
    struct Cand {
      double credit;
      std::size_t i, j;
    };
    std::vector<Cand> pairs;
    for (std::size_t i = 0; i < cstr.size(); ++i) {
      for (std::size_t j = 0; j < rstr.size(); ++j) {
        std::size_t len = std::max(cstr[i].size(), rstr[j].size());
        double credit =
            len == 0 ? 1.0
                     : 1.0 - static_cast<double>(edit_distance(cstr[i], rstr[j])) /
                                 static_cast<double>(len);
        if (credit >= threshold && credit > 0.0) pairs.push_back({credit, i, j});
      }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Cand& a, const Cand& b) {
      if (a.credit != b.credit) return a.credit > b.credit;
      if (a.i != b.i) return a.i < b.i;
      return a.j < b.j;
    });
    std::vector<bool> used_c(cstr.size(), false), used_r(rstr.size(), false);
    double sum = 0.0;
    for (const auto& p : pairs) {
      if (used_c[p.i] || used_r[p.j]) continue;
      used_c[p.i] = used_r[p.j] = true;
      sum += p.credit;
    }
    st.match[n - 1] = sum;
    st.total[n - 1] = cstr.size();
  }
  return st;
}

// Geometric mean of precisions times brevity penalty, on [0,1].  Orders with
// no candidate n-grams at all are skipped; an order with n-grams but zero
// matches zeroes the score (no smoothing).
inline double bleu_from_stats(const BleuStats& st) {
  if (st.cand_len == 0) return 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 0; n < st.max_order(); ++n) {
    if (st.total[n] == 0) continue;
    if (st.match[n] <= 0.0) return 0.0;
    log_sum += std::log(st.match[n] / static_cast<double>(st.total[n]));
    ++orders;
  }
  double precision = orders ? std::exp(log_sum / static_cast<double>(orders)) : 0.0;
  double bp = st.cand_len >= st.ref_len
                  ? 1.0
                  : std::exp(1.0 - static_cast<double>(st.ref_len) /
                                       static_cast<double>(st.cand_len));
  return bp * precision;
}

namespace detail {

inline void check_same_lines(std::size_t a, std::size_t b) {
  if (a != b) throw LengthMismatch(std::min(a, b));
}

inline std::vector<std::vector<std::string>> tokenize_lines(
    const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(split_ws(l));
  return out;
}

}  // namespace detail

// Corpus BLEU on [0,100].
inline double bleu(const std::vector<std::string>& candidates,
                   const std::vector<std::string>& references,
                   std::size_t max_order = 4) {
  detail::check_same_lines(candidates.size(), references.size());
  auto cand = detail::tokenize_lines(candidates);
  auto ref = detail::tokenize_lines(references);
  BleuStats st(max_order);
  for (std::size_t i = 0; i < cand.size(); ++i)
    st += sentence_bleu_stats(cand[i], ref[i], max_order);
  return 100.0 * bleu_from_stats(st);
}

// Soft-matching BLEU variant on [0,1].
inline double lebleu(const std::vector<std::string>& candidates,
                     const std::vector<std::string>& references,
                     double threshold = 0.4, std::size_t max_order = 4) {
  detail::check_same_lines(candidates.size(), references.size());
  auto cand = detail::tokenize_lines(candidates);
  auto ref = detail::tokenize_lines(references);
  BleuStats st(max_order);
  for (std::size_t i = 0; i < cand.size(); ++i)
    st += sentence_lebleu_stats(cand[i], ref[i], threshold, max_order);
  return bleu_from_stats(st);
}

struct SignificanceReport {
  double score_a = 0.0;
  double score_b = 0.0;
  double p_value = 1.0;
  std::size_t resamples = 0;
};

// Paired bootstrap resampling over sentences.  p is the fraction of resampled
// test sets on which the observed winner fails to strictly win; identical
// observed scores report p = 1.
inline SignificanceReport bootstrap_significance(
    const std::vector<std::string>& sys_a, const std::vector<std::string>& sys_b,
    const std::vector<std::string>& refs, std::size_t resamples = 1000,
    std::uint64_t seed = 1) {
  detail::check_same_lines(sys_a.size(), refs.size());
  detail::check_same_lines(sys_b.size(), refs.size());
  auto a_tok = detail::tokenize_lines(sys_a);
  auto b_tok = detail::tokenize_lines(sys_b);
  auto r_tok = detail::tokenize_lines(refs);
  const std::size_t n = r_tok.size();
  std::vector<BleuStats> a_st, b_st;
  a_st.reserve(n);
  b_st.reserve(n);
  BleuStats a_sum, b_sum;
  for (std::size_t i = 0; i < n; ++i) {
    a_st.push_back(sentence_bleu_stats(a_tok[i], r_tok[i]));
    b_st.push_back(sentence_bleu_stats(b_tok[i], r_tok[i]));
    a_sum += a_st.back();
    b_sum += b_st.back();
  }
  SignificanceReport rep;
  rep.resamples = resamples;
  rep.score_a = 100.0 * bleu_from_stats(a_sum);
  rep.score_b = 100.0 * bleu_from_stats(b_sum);
  if (rep.score_a == rep.score_b || n == 0) {
    rep.p_value = 1.0;
    return rep;
  }
  const bool a_wins = rep.score_a > rep.score_b;
  std::size_t fails = 0;
  for (std::size_t r = 0; r < resamples; ++r) {
    std::mt19937_64 rng(derive_seed(seed, "resample", r));
    BleuStats as, bs;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t k = rand_index(rng, n);
      as += a_st[k];
      bs += b_st[k];
    }
    double sa = bleu_from_stats(as), sb = bleu_from_stats(bs);
    bool winner_won = a_wins ? sa > sb : sb > sa;
    if (!winner_won) ++fails;
  }
  rep.p_value = static_cast<double>(fails) / static_cast<double>(resamples);
  return rep;
}

}  // namespace pivotsmt
