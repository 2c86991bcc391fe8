// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

// Pivot-language composition of phrase tables: triangulation through a
// shared pivot phrase inventory, linear interpolation of tables, multi-pivot
// combination, and sentence-level top-k pipelining through pivot decodes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pivotsmt/decoder.hpp"
#include "pivotsmt/errors.hpp"
#include "pivotsmt/ngramlm.hpp"
#include "pivotsmt/phrasetab.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

namespace detail {

inline void check_schemes(const std::string& a, const std::string& b) {
  if (!a.empty() && !b.empty() && a != b)
    throw SchemeMismatch("segmentation schemes differ: '" + a + "' vs '" + b +
                         "'");
}

}  // namespace detail

// Compose a source->pivot table with a pivot->target table. Each of the four
// feature scores is composed independently as sum over shared pivot phrases
// of the two tables' products; joint counts combine as sum of minima, and
// alignments as the union of link compositions. Entries whose four features
// all fall below prune_floor are dropped. An empty join produces an empty
// table and a warning on stderr.
inline PhraseTable triangulate(const PhraseTable& sp, const PhraseTable& pt,
                               double prune_floor = 1e-7) {
  detail::check_schemes(sp.scheme, pt.scheme);

  // Pivot phrase -> entry indices, both sides ordered deterministically so
  // float accumulation never depends on input entry order.
  std::map<std::string, std::vector<std::size_t>> sp_by_pivot, pt_by_pivot;
  for (std::size_t i = 0; i < sp.entries.size(); ++i)
    sp_by_pivot[join(sp.entries[i].tgt, " ")].push_back(i);
  for (std::size_t i = 0; i < pt.entries.size(); ++i)
    pt_by_pivot[join(pt.entries[i].src, " ")].push_back(i);
  auto order_sp = [&](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      if (sp.entries[a].src != sp.entries[b].src)
        return sp.entries[a].src < sp.entries[b].src;
      return a < b;
    });
  };
  auto order_pt = [&](std::vector<std::size_t>& v) {
    std::sort(v.begin(), v.end(), [&](std::size_t a, std::size_t b) {
      if (pt.entries[a].tgt != pt.entries[b].tgt)
        return pt.entries[a].tgt < pt.entries[b].tgt;
      return a < b;
    });
  };
  for (auto& [piv, v] : sp_by_pivot) order_sp(v);
  for (auto& [piv, v] : pt_by_pivot) order_pt(v);

  struct Agg {
    std::vector<std::string> src, tgt;
    double phi_ts = 0, lex_ts = 0, phi_st = 0, lex_st = 0, joint = 0;
    std::set<std::pair<int, int>> links;
  };
  std::map<std::pair<std::string, std::string>, Agg> agg;
  for (auto& [pivot, sp_idx] : sp_by_pivot) {
    auto it = pt_by_pivot.find(pivot);
    if (it == pt_by_pivot.end()) continue;
    for (std::size_t si : sp_idx) {
      const PhraseEntry& spe = sp.entries[si];
      for (std::size_t pi : it->second) {
        const PhraseEntry& pte = pt.entries[pi];
        Agg& a = agg[{join(spe.src, " "), join(pte.tgt, " ")}];
        if (a.src.empty() && a.tgt.empty()) {
          a.src = spe.src;
          a.tgt = pte.tgt;
        }
        a.phi_ts += spe.phi_ts * pte.phi_ts;
        a.lex_ts += spe.lex_ts * pte.lex_ts;
        a.phi_st += spe.phi_st * pte.phi_st;
        a.lex_st += spe.lex_st * pte.lex_st;
        a.joint += std::min(spe.joint_count, pte.joint_count);
        for (auto& [i, j1] : spe.alignment)
          for (auto& [j2, k] : pte.alignment)
            if (j1 == j2) a.links.insert({i, k});
      }
    }
  }

  PhraseTable out;
  out.scheme = sp.scheme.empty() ? pt.scheme : sp.scheme;
  out.source_lang = sp.source_lang;
  out.target_lang = pt.target_lang;
  for (auto& [key, a] : agg) {
    if (a.phi_ts < prune_floor && a.lex_ts < prune_floor &&
        a.phi_st < prune_floor && a.lex_st < prune_floor)
      continue;
    PhraseEntry e;
    e.src = std::move(a.src);
    e.tgt = std::move(a.tgt);
    e.phi_ts = a.phi_ts;
    e.lex_ts = a.lex_ts;
    e.phi_st = a.phi_st;
    e.lex_st = a.lex_st;
    e.joint_count = a.joint;
    e.alignment.assign(a.links.begin(), a.links.end());
    out.entries.push_back(std::move(e));
  }
  if (out.entries.empty())
    std::fprintf(stderr,
                 "warning: empty join, the tables share no pivot phrases "
                 "(or everything fell below the prune floor)\n");
  out.sort_entries();
  return out;
}

namespace detail {

inline PhraseTable interpolate_ptrs(const std::vector<const PhraseTable*>& tables,
                                    std::vector<double> alphas) {
  if (tables.empty())
    throw PivotsmtError("interpolation needs at least one table");
  if (alphas.empty())
    alphas.assign(tables.size(), 1.0 / static_cast<double>(tables.size()));
  if (alphas.size() != tables.size())
    throw WeightError("got " + std::to_string(alphas.size()) +
                      " weights for " + std::to_string(tables.size()) +
                      " tables");
  double sum = 0.0;
  for (double a : alphas) {
    if (a < 0.0) throw WeightError("interpolation weights must be >= 0");
    sum += a;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw WeightError("interpolation weights sum to " + std::to_string(sum) +
                      ", not 1");
  std::string scheme;
  for (auto* t : tables) {
    check_schemes(scheme, t->scheme);
    if (scheme.empty()) scheme = t->scheme;
  }

  struct Agg {
    std::vector<std::string> src, tgt;
    double f[4] = {0, 0, 0, 0};
    double joint = 0;
    double best_alpha = -1.0;  // alignment comes from the heaviest table
    std::vector<std::pair<int, int>> links;
  };
  std::map<std::pair<std::string, std::string>, Agg> agg;
  for (std::size_t ti = 0; ti < tables.size(); ++ti) {
    for (const PhraseEntry& e : tables[ti]->entries) {
      Agg& a = agg[{join(e.src, " "), join(e.tgt, " ")}];
      if (a.src.empty() && a.tgt.empty()) {
        a.src = e.src;
        a.tgt = e.tgt;
      }
      a.f[0] += alphas[ti] * e.phi_ts;
      a.f[1] += alphas[ti] * e.lex_ts;
      a.f[2] += alphas[ti] * e.phi_st;
      a.f[3] += alphas[ti] * e.lex_st;
      a.joint += alphas[ti] * e.joint_count;
      if (alphas[ti] > a.best_alpha) {  // ties keep the earliest table
        a.best_alpha = alphas[ti];
        a.links = e.alignment;
      }
    }
  }

  PhraseTable out;
  out.scheme = scheme;
  for (auto* t : tables) {
    if (out.source_lang.empty()) out.source_lang = t->source_lang;
    if (out.target_lang.empty()) out.target_lang = t->target_lang;
  }
  for (auto& [key, a] : agg) {
    if (std::max({a.f[0], a.f[1], a.f[2], a.f[3]}) <= 0.0) continue;
    PhraseEntry e;
    e.src = std::move(a.src);
    e.tgt = std::move(a.tgt);
    e.phi_ts = a.f[0];
    e.lex_ts = a.f[1];
    e.phi_st = a.f[2];
    e.lex_st = a.f[3];
    e.joint_count = a.joint;
    e.alignment = std::move(a.links);
    out.entries.push_back(std::move(e));
  }
  out.sort_entries();
  return out;
}

}  // namespace detail

// Linear interpolation of phrase tables: every feature of every entry is the
// weight-blended value across tables, with 0 for tables missing the entry.
// Weights must be a probability vector (empty = uniform); alignments follow
// the heaviest contributing table. Entries that end up with no positive
// feature are dropped.
inline PhraseTable interpolate_tables(const std::vector<PhraseTable>& tables,
                                      const std::vector<double>& alphas = {}) {
  std::vector<const PhraseTable*> ptrs;
  ptrs.reserve(tables.size());
  for (auto& t : tables) ptrs.push_back(&t);
  return detail::interpolate_ptrs(ptrs, alphas);
}

// Uniform interpolation of two or more pivot-composed tables; when a direct
// table is given it joins the mix as one more equal partner, listed first so
// its alignments win ties.
inline PhraseTable combine_multi_pivot(const std::vector<PhraseTable>& pivot_tables,
                                       const PhraseTable* direct = nullptr) {
  if (pivot_tables.size() < 2)
    throw PivotsmtError("multi-pivot combination needs at least two tables");
  std::vector<const PhraseTable*> ptrs;
  if (direct) ptrs.push_back(direct);
  for (auto& t : pivot_tables) ptrs.push_back(&t);
  return detail::interpolate_ptrs(ptrs, {});
}

// ---------------------------------------------------------------------------
// Sentence-level pipelining: translate source -> pivot keeping the top k
// hypotheses, translate each on to the target, and sum path probabilities
// per target surface. Hypothesis posteriors come from a base-10 softmax of
// decoder scores within each n-best list.

struct PipelineOptions {
  std::size_t k = 20;         // pivot (and per-pivot target) hypotheses kept
  double temperature = 1.0;   // softmax temperature over decoder scores
  std::size_t pop_limit = 1000;
  std::size_t nbest = 20;     // entries returned
};

namespace detail {

inline std::vector<double> nbest_posteriors(const NBestList& nb, double temp) {
  std::vector<double> p(nb.size());
  if (nb.empty()) return p;
  double mx = nb.front().score;  // lists arrive best-first
  for (auto& e : nb) mx = std::max(mx, e.score);
  double z = 0.0;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    p[i] = std::pow(10.0, (nb[i].score - mx) / std::max(temp, 1e-9));
    z += p[i];
  }
  for (auto& x : p) x /= z;
  return p;
}

}  // namespace detail

inline NBestList pipeline_translate(
    const std::vector<std::string>& src, const PhraseTable& sp_table,
    const NgramLm& pivot_lm, const FeatureWeights& sp_w,
    const PhraseTable& pt_table, const NgramLm& tgt_lm,
    const FeatureWeights& pt_w, const PipelineOptions& opts = {}) {
  DecoderConfig cfg{opts.pop_limit, opts.k};
  NBestList pivots = decode(src, sp_table, pivot_lm, sp_w, cfg);
  std::vector<double> pp = detail::nbest_posteriors(pivots, opts.temperature);

  std::map<std::string, std::pair<double, std::vector<std::string>>> agg;
  for (std::size_t i = 0; i < pivots.size(); ++i) {
    NBestList tgts = decode(pivots[i].units, pt_table, tgt_lm, pt_w, cfg);
    std::vector<double> tp = detail::nbest_posteriors(tgts, opts.temperature);
    for (std::size_t j = 0; j < tgts.size(); ++j) {
      auto& slot = agg[join(tgts[j].units, " ")];
      if (slot.first == 0.0) slot.second = tgts[j].units;
      slot.first += pp[i] * tp[j];
    }
  }

  NBestList out;
  for (auto& [surface, slot] : agg) {
    NBestEntry e;
    e.units = std::move(slot.second);
    e.score = std::log10(slot.first);
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const NBestEntry& a, const NBestEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.units < b.units;
  });
  if (out.size() > opts.nbest) out.resize(opts.nbest);
  return out;
}

}  // namespace pivotsmt
