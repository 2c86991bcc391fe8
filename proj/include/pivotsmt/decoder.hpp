// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

// Monotone stack decoder with log-linear scoring, pop-limit pruning,
// lattice n-best extraction, and a word-level n-best coordinate tuner.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "pivotsmt/errors.hpp"
#include "pivotsmt/evalmetrics.hpp"
#include "pivotsmt/ngramlm.hpp"
#include "pivotsmt/phrasetab.hpp"
#include "pivotsmt/textseg.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

// Feature layout shared by vectors and weights. Phrase-table features enter
// the model as log10 values; word/phrase/oov are plain counts.
enum FeatureIndex {
  kFPhiTs = 0,
  kFLexTs,
  kFPhiSt,
  kFLexSt,
  kFLm,
  kFWord,
  kFPhrase,
  kFOov,
  kNumFeatures
};

inline constexpr std::array<const char*, kNumFeatures> kFeatureNames = {
    "phi_ts", "lex_ts", "phi_st", "lex_st", "lm", "word", "phrase", "oov"};

struct FeatureWeights {
  std::array<double, kNumFeatures> v{0.2, 0.2, 0.2, 0.2, 0.5, -1.0, 0.2, -10.0};

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
  bool operator==(const FeatureWeights&) const = default;
};

struct FeatureVector {
  std::array<double, kNumFeatures> v{};

  double& operator[](int i) { return v[i]; }
  double operator[](int i) const { return v[i]; }
  bool operator==(const FeatureVector&) const = default;

  FeatureVector& operator+=(const FeatureVector& o) {
    for (int i = 0; i < kNumFeatures; ++i) v[i] += o.v[i];
    return *this;
  }

  double dot(const FeatureWeights& w) const {
    double s = 0.0;
    for (int i = 0; i < kNumFeatures; ++i) s += v[i] * w.v[i];
    return s;
  }
};

inline void save_weights(const FeatureWeights& w, const std::string& path) {
  LineWriter out(path);
  char buf[64];
  for (int i = 0; i < kNumFeatures; ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", w[i]);
    out.write_line(std::string(kFeatureNames[i]) + " " + buf);
  }
}

inline FeatureWeights load_weights(const std::string& path) {
  FeatureWeights w;
  LineReader in(path);
  std::string line;
  while (in.getline(line)) {
    auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (fields.size() != 2)
      throw PivotsmtError("bad weights line '" + line + "' in " + path);
    bool known = false;
    for (int i = 0; i < kNumFeatures; ++i)
      if (fields[0] == kFeatureNames[i]) {
        w[i] = std::stod(fields[1]);
        known = true;
      }
    if (!known)
      throw PivotsmtError("unknown feature '" + fields[0] + "' in " + path);
  }
  return w;
}

struct NBestEntry {
  std::vector<std::string> units;
  double score = 0.0;
  FeatureVector feats;
};
using NBestList = std::vector<NBestEntry>;

inline constexpr std::size_t kInfinitePopLimit =
    std::numeric_limits<std::size_t>::max();

struct DecoderConfig {
  std::size_t pop_limit = 1000;  // hypothesis pops per target stack
  std::size_t nbest = 1;
};

// Moses-style n-best line: id ||| surface ||| name= value ... ||| score
inline std::string format_nbest_line(std::size_t sent_id, const NBestEntry& e) {
  std::string f;
  for (int i = 0; i < kNumFeatures; ++i) {
    if (i) f += " ";
    f += std::string(kFeatureNames[i]) + "= " + fmt_g6(e.feats[i]);
  }
  return std::to_string(sent_id) + " ||| " + join(e.units, " ") + " ||| " + f +
         " ||| " + fmt_g6(e.score);
}

namespace detail {

inline double safe_log10(double x) { return std::log10(std::max(x, 1e-12)); }

struct DecOption {
  std::vector<std::string> tgt;
  std::vector<int> tgt_ids;
  FeatureVector feats;  // static features; lm slot filled per expansion
  double heur = 0.0;    // static score + isolated-unit LM estimate
};

struct DecEdge {
  int pred;                    // node id; -1 never occurs
  const DecOption* opt;        // null only on the sentence-end edge
  FeatureVector feats;         // option features with the real LM delta
  double delta = 0.0;          // feats.dot(weights)
};

struct DecNode {
  LMState state;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<DecEdge> edges;
};

// Lazy k-best derivations over the recombination lattice (per-node candidate
// heaps, successor ranks materialized on demand).
class KBestLattice {
 public:
  struct Deriv {
    double score;
    FeatureVector feats;
    int edge_idx;           // -1 for the axiom at the start node
    std::size_t pred_rank;
  };

  KBestLattice(const std::vector<DecNode>& arena, const DecNode& end)
      : arena_(arena), end_(end), lists_(arena.size() + 1),
        heaps_(arena.size() + 1), seeded_(arena.size() + 1, false) {
    lists_[0].push_back(Deriv{0.0, {}, -1, 0});
    seeded_[0] = true;
  }

  int end_id() const { return static_cast<int>(arena_.size()); }

  const DecNode& node(int id) const {
    return id == end_id() ? end_ : arena_[id];
  }

  // k-th best derivation ending at node id (0-based), or nullptr.
  const Deriv* get(int id, std::size_t k) {
    auto& list = lists_[id];
    auto& heap = heaps_[id];
    if (!seeded_[id]) {
      seeded_[id] = true;
      const auto& edges = node(id).edges;
      for (std::size_t ei = 0; ei < edges.size(); ++ei)
        if (const Deriv* d = get(edges[ei].pred, 0))
          heap.push_back(Cand{d->score + edges[ei].delta, ei, 0});
      std::make_heap(heap.begin(), heap.end(), CandLess{});
    }
    while (list.size() <= k && !heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), CandLess{});
      Cand c = heap.back();
      heap.pop_back();
      const DecEdge& e = node(id).edges[c.edge_idx];
      const Deriv& pd = lists_[e.pred][c.pred_rank];
      Deriv d{pd.score + e.delta, pd.feats, static_cast<int>(c.edge_idx),
              c.pred_rank};
      d.feats += e.feats;
      list.push_back(std::move(d));
      if (const Deriv* nd = get(e.pred, c.pred_rank + 1)) {
        heap.push_back(Cand{nd->score + e.delta, c.edge_idx, c.pred_rank + 1});
        std::push_heap(heap.begin(), heap.end(), CandLess{});
      }
    }
    return k < list.size() ? &list[k] : nullptr;
  }

  void reconstruct(int id, const Deriv& d, std::vector<std::string>& out) const {
    if (d.edge_idx < 0) return;
    const DecEdge& e = node(id).edges[d.edge_idx];
    reconstruct(e.pred, lists_[e.pred][d.pred_rank], out);
    if (e.opt) out.insert(out.end(), e.opt->tgt.begin(), e.opt->tgt.end());
  }

 private:
  struct Cand {
    double score;
    std::size_t edge_idx;
    std::size_t pred_rank;
  };
  struct CandLess {  // max-heap on score; deterministic tie-break
    bool operator()(const Cand& a, const Cand& b) const {
      if (a.score != b.score) return a.score < b.score;
      if (a.edge_idx != b.edge_idx) return a.edge_idx > b.edge_idx;
      return a.pred_rank > b.pred_rank;
    }
  };

  const std::vector<DecNode>& arena_;
  const DecNode& end_;
  std::vector<std::vector<Deriv>> lists_;
  std::vector<std::vector<Cand>> heaps_;
  std::vector<char> seeded_;
};

}  // namespace detail

// Monotone beam decode of one segmented sentence. Spans are covered strictly
// left to right (no distortion); hypotheses recombine on (frontier, LMState);
// pops per target stack are capped at cfg.pop_limit; unknown units copy
// through with the oov feature set. Returns up to cfg.nbest entries, distinct
// by surface form (duplicate derivations max-combined), best first.
inline NBestList decode(const std::vector<std::string>& src,
                        const PhraseTable& table, const NgramLm& lm,
                        const FeatureWeights& w, const DecoderConfig& cfg = {}) {
  if (src.empty()) return {NBestEntry{}};
  const std::size_t n = src.size();

  std::unordered_map<std::string, double> unit_est;  // isolated LM estimates
  auto estimate = [&](const std::string& u) {
    auto it = unit_est.find(u);
    if (it != unit_est.end()) return it->second;
    double e = lm.log10_cond({}, u);
    unit_est.emplace(u, e);
    return e;
  };

  const std::size_t max_len = std::max<std::size_t>(table.max_src_len(), 1);
  // opts[i][len-1]: translation options for source span [i, i+len)
  std::vector<std::vector<std::vector<detail::DecOption>>> opts(n);
  for (std::size_t i = 0; i < n; ++i) {
    opts[i].resize(std::min(max_len, n - i));
    for (std::size_t len = 1; len <= opts[i].size(); ++len) {
      auto& list = opts[i][len - 1];
      std::vector<std::string> span(src.begin() + i, src.begin() + i + len);
      auto [b, e] = table.find_src(span);
      for (std::size_t k = b; k < e; ++k) {
        const PhraseEntry& pe = table.entries[k];
        detail::DecOption o;
        o.tgt = pe.tgt;
        o.feats[kFPhiTs] = detail::safe_log10(pe.phi_ts);
        o.feats[kFLexTs] = detail::safe_log10(pe.lex_ts);
        o.feats[kFPhiSt] = detail::safe_log10(pe.phi_st);
        o.feats[kFLexSt] = detail::safe_log10(pe.lex_st);
        o.feats[kFWord] = static_cast<double>(pe.tgt.size());
        o.feats[kFPhrase] = 1.0;
        list.push_back(std::move(o));
      }
      if (len == 1 && list.empty()) {
        detail::DecOption o;  // copy the unknown unit through
        o.tgt = {src[i]};
        o.feats[kFWord] = 1.0;
        o.feats[kFPhrase] = 1.0;
        o.feats[kFOov] = 1.0;
        list.push_back(std::move(o));
      }
      for (auto& o : list) {
        o.tgt_ids.reserve(o.tgt.size());
        for (auto& u : o.tgt) o.tgt_ids.push_back(lm.id_or_unk(u));
        double est = 0.0;
        for (auto& u : o.tgt) est += estimate(u);
        o.heur = o.feats.dot(w) + w[kFLm] * est;
      }
      std::sort(list.begin(), list.end(),
                [](const detail::DecOption& a, const detail::DecOption& b) {
                  if (a.heur != b.heur) return a.heur > b.heur;
                  return a.tgt < b.tgt;
                });
    }
  }

  std::vector<detail::DecNode> arena;
  std::vector<std::vector<int>> stacks(n + 1);
  arena.push_back(detail::DecNode{lm.begin_state(), 0.0, {}});
  stacks[0] = {0};

  struct Cand {
    double prio;
    std::size_t i;  // span start
    std::size_t pred_rank, opt_rank;
  };
  auto cand_less = [](const Cand& a, const Cand& b) {
    if (a.prio != b.prio) return a.prio < b.prio;  // max-heap on priority
    if (a.i != b.i) return a.i > b.i;
    if (a.pred_rank != b.pred_rank) return a.pred_rank > b.pred_rank;
    return a.opt_rank > b.opt_rank;
  };

  for (std::size_t j = 1; j <= n; ++j) {
    std::priority_queue<Cand, std::vector<Cand>, decltype(cand_less)> heap(
        cand_less);
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> seen;
    auto push = [&](std::size_t i, std::size_t pr, std::size_t orank) {
      const auto& list = opts[i][j - i - 1];
      if (pr >= stacks[i].size() || orank >= list.size()) return;
      if (!seen.emplace(i, pr, orank).second) return;
      heap.push(Cand{arena[stacks[i][pr]].best + list[orank].heur, i, pr, orank});
    };
    for (std::size_t i = j > max_len ? j - max_len : 0; i < j; ++i)
      if (!stacks[i].empty() && j - i - 1 < opts[i].size()) push(i, 0, 0);

    std::map<LMState, int> recomb;
    std::size_t pops = 0;
    while (!heap.empty() && pops < cfg.pop_limit) {
      Cand c = heap.top();
      heap.pop();
      ++pops;
      int pred_id = stacks[c.i][c.pred_rank];
      const detail::DecOption& opt = opts[c.i][j - c.i - 1][c.opt_rank];
      LMState st = arena[pred_id].state;
      double lm_delta = 0.0;
      for (int id : opt.tgt_ids) lm_delta += lm.score_id(st, id, &st);
      detail::DecEdge e{pred_id, &opt, opt.feats, 0.0};
      e.feats[kFLm] = lm_delta;
      e.delta = e.feats.dot(w);
      double sc = arena[pred_id].best + e.delta;
      auto [it, fresh] = recomb.try_emplace(st, -1);
      if (fresh) {
        it->second = static_cast<int>(arena.size());
        arena.push_back(detail::DecNode{st, sc, {}});
      }
      detail::DecNode& node = arena[it->second];
      node.edges.push_back(std::move(e));
      node.best = std::max(node.best, sc);
      push(c.i, c.pred_rank + 1, c.opt_rank);
      push(c.i, c.pred_rank, c.opt_rank + 1);
    }
    stacks[j].reserve(recomb.size());
    for (auto& [state, id] : recomb) stacks[j].push_back(id);
    std::sort(stacks[j].begin(), stacks[j].end(), [&](int a, int b) {
      if (arena[a].best != arena[b].best) return arena[a].best > arena[b].best;
      return arena[a].state < arena[b].state;
    });
  }

  // Virtual end node: every full-coverage hypothesis takes the </s> step.
  detail::DecNode end_node;
  const int eos = lm.id_or_unk(kEos);
  for (int id : stacks[n]) {
    detail::DecEdge e{id, nullptr, {}, 0.0};
    e.feats[kFLm] = lm.score_id(arena[id].state, eos, nullptr);
    e.delta = e.feats.dot(w);
    end_node.best = std::max(end_node.best, arena[id].best + e.delta);
    end_node.edges.push_back(std::move(e));
  }

  detail::KBestLattice kbest(arena, end_node);
  const std::size_t max_pulls = std::max<std::size_t>(4 * cfg.nbest, 20);
  std::set<std::string> surfaces;
  NBestList out;
  for (std::size_t rank = 0; rank < max_pulls && surfaces.size() < cfg.nbest;
       ++rank) {
    const auto* d = kbest.get(kbest.end_id(), rank);
    if (!d) break;
    std::vector<std::string> units;
    kbest.reconstruct(kbest.end_id(), *d, units);
    std::string surface = join(units, " ");
    if (!surfaces.insert(surface).second) continue;  // worse duplicate surface
    out.push_back(NBestEntry{std::move(units), d->feats.dot(w), d->feats});
  }
  std::sort(out.begin(), out.end(), [](const NBestEntry& a, const NBestEntry& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.units < b.units;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Weight tuning: iterative n-best pooling + per-coordinate exact line search
// on corpus BLEU. Hypotheses are desegmented before scoring so subword
// systems are always tuned against word-level BLEU.

struct TuneOptions {
  int iterations = 5;
  std::size_t nbest = 100;
  std::size_t pop_limit = 1000;
  Scheme scheme = Scheme::Word;
  std::string marker = kDefaultMarker;
};

struct TuneResult {
  FeatureWeights weights;
  double bleu_initial = 0.0;         // corpus BLEU of the initial weights
  double bleu_tuned = 0.0;           // corpus BLEU of the returned weights
  std::size_t eval_unit_tokens = 0;  // decoder units in the final 1-best
  std::size_t eval_word_tokens = 0;  // word tokens actually scored by BLEU
};

namespace detail {

struct TunePoolEntry {
  FeatureVector feats;
  BleuStats stats;  // word-level, against this sentence's reference
};

// Upper envelope of lines y = intercept + slope*x. Returns (start x, line
// index) intervals in increasing x, the first starting at -inf.
inline std::vector<std::pair<double, std::size_t>> upper_envelope(
    const std::vector<std::pair<double, double>>& lines /* slope, intercept */) {
  std::vector<std::size_t> order(lines.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (lines[a].first != lines[b].first) return lines[a].first < lines[b].first;
    if (lines[a].second != lines[b].second)
      return lines[a].second < lines[b].second;
    return a > b;  // exact duplicates: keep the smallest index (last of run)
  });
  std::vector<std::size_t> keepers;  // distinct slopes, best intercept each
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i + 1 < order.size() &&
        lines[order[i]].first == lines[order[i + 1]].first)
      continue;
    keepers.push_back(order[i]);
  }
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<std::size_t> hull;
  std::vector<double> from;
  for (std::size_t idx : keepers) {
    double x = ninf;
    while (!hull.empty()) {
      const auto& top = lines[hull.back()];
      x = (top.second - lines[idx].second) / (lines[idx].first - top.first);
      if (x <= from.back()) {
        hull.pop_back();
        from.pop_back();
        x = ninf;
        continue;
      }
      break;
    }
    hull.push_back(idx);
    from.push_back(hull.size() == 1 ? ninf : x);
  }
  std::vector<std::pair<double, std::size_t>> out;
  out.reserve(hull.size());
  for (std::size_t k = 0; k < hull.size(); ++k) out.push_back({from[k], hull[k]});
  return out;
}

}  // namespace detail

inline std::string desegment_for_eval(const std::vector<std::string>& units,
                                      Scheme scheme, const std::string& marker) {
  if (scheme == Scheme::Word) return join(units, " ");
  return desegment_units(units, marker);
}

inline TuneResult tune_weights(
    const std::vector<std::vector<std::string>>& dev_src,
    const std::vector<std::string>& dev_ref_words, const PhraseTable& table,
    const NgramLm& lm, const FeatureWeights& initial,
    const TuneOptions& opts = {}) {
  if (dev_src.size() != dev_ref_words.size()) throw LengthMismatch(0);
  const std::size_t n_sents = dev_src.size();
  std::vector<std::vector<std::string>> refs(n_sents);
  for (std::size_t s = 0; s < n_sents; ++s) refs[s] = split_ws(dev_ref_words[s]);

  auto eval_weights = [&](const FeatureWeights& w, std::size_t* unit_toks,
                          std::size_t* word_toks) {
    BleuStats agg;
    std::size_t ut = 0, wt = 0;
    DecoderConfig cfg{opts.pop_limit, 1};
    for (std::size_t s = 0; s < n_sents; ++s) {
      auto best = decode(dev_src[s], table, lm, w, cfg);
      const auto& units = best.front().units;
      auto cand = split_ws(desegment_for_eval(units, opts.scheme, opts.marker));
      agg += sentence_bleu_stats(cand, refs[s]);
      ut += units.size();
      wt += cand.size();
    }
    if (unit_toks) *unit_toks = ut;
    if (word_toks) *word_toks = wt;
    return bleu_from_stats(agg) * 100.0;
  };

  TuneResult res;
  std::size_t u0 = 0, w0 = 0;
  res.bleu_initial = eval_weights(initial, &u0, &w0);

  std::vector<std::vector<detail::TunePoolEntry>> pools(n_sents);
  std::vector<std::set<std::string>> pool_keys(n_sents);
  FeatureWeights cur = initial;

  auto pooled_bleu = [&](const FeatureWeights& w) {
    BleuStats agg;
    for (auto& pool : pools) {
      if (pool.empty()) continue;
      std::size_t best = 0;
      double bs = -std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < pool.size(); ++e) {
        double sc = pool[e].feats.dot(w);
        if (sc > bs) {
          bs = sc;
          best = e;
        }
      }
      agg += pool[best].stats;
    }
    return bleu_from_stats(agg) * 100.0;
  };

  for (int iter = 0; iter < opts.iterations; ++iter) {
    DecoderConfig cfg{opts.pop_limit, opts.nbest};
    for (std::size_t s = 0; s < n_sents; ++s) {
      for (auto& e : decode(dev_src[s], table, lm, cur, cfg)) {
        std::string key = join(e.units, " ");
        for (int f = 0; f < kNumFeatures; ++f) key += "\x01" + fmt_g6(e.feats[f]);
        if (!pool_keys[s].insert(key).second) continue;
        auto cand =
            split_ws(desegment_for_eval(e.units, opts.scheme, opts.marker));
        pools[s].push_back(
            detail::TunePoolEntry{e.feats, sentence_bleu_stats(cand, refs[s])});
      }
    }

    bool moved = true;
    for (int pass = 0; pass < 10 && moved; ++pass) {
      moved = false;
      for (int c = 0; c < kNumFeatures; ++c) {
        // Entry score as a function of x = weight c is a line
        //   y = (dot(cur) - cur[c]*f_c) + x*f_c.
        struct Transition {
          double x;
          std::size_t sent;
          std::size_t entry;  // argmax entry from x onward
        };
        std::vector<Transition> transitions;
        std::vector<std::size_t> pick(n_sents, 0);
        BleuStats agg;
        bool any = false;
        for (std::size_t s = 0; s < n_sents; ++s) {
          if (pools[s].empty()) continue;
          any = true;
          std::vector<std::pair<double, double>> lines;
          lines.reserve(pools[s].size());
          for (auto& e : pools[s])
            lines.push_back({e.feats[c], e.feats.dot(cur) - cur[c] * e.feats[c]});
          auto env = detail::upper_envelope(lines);
          pick[s] = env.front().second;
          agg += pools[s][pick[s]].stats;
          for (std::size_t k = 1; k < env.size(); ++k)
            transitions.push_back({env[k].first, s, env[k].second});
        }
        if (!any) continue;
        std::sort(transitions.begin(), transitions.end(),
                  [](const Transition& a, const Transition& b) {
                    if (a.x != b.x) return a.x < b.x;
                    if (a.sent != b.sent) return a.sent < b.sent;
                    return a.entry < b.entry;
                  });
        const double cur_bleu = pooled_bleu(cur);
        double best_bleu = bleu_from_stats(agg) * 100.0;
        double best_x =
            transitions.empty() ? cur[c] : transitions.front().x - 1.0;
        auto consider = [&](double bleu, double x) {
          if (bleu > best_bleu + 1e-12) {
            best_bleu = bleu;
            best_x = x;
          } else if (bleu > best_bleu - 1e-12 &&
                     std::abs(x - cur[c]) < std::abs(best_x - cur[c])) {
            best_x = x;
          }
        };
        for (std::size_t t = 0; t < transitions.size(); ++t) {
          const auto& tr = transitions[t];
          const auto& old_stats = pools[tr.sent][pick[tr.sent]].stats;
          for (std::size_t o = 0; o < agg.match.size(); ++o) {
            agg.match[o] -= old_stats.match[o];
            agg.total[o] -= old_stats.total[o];
          }
          agg.cand_len -= old_stats.cand_len;
          agg.ref_len -= old_stats.ref_len;
          pick[tr.sent] = tr.entry;
          agg += pools[tr.sent][tr.entry].stats;
          double to = t + 1 < transitions.size() ? transitions[t + 1].x
                                                 : tr.x + 2.0;
          if (to > tr.x)  // evaluate each nonempty interval at its midpoint
            consider(bleu_from_stats(agg) * 100.0, (tr.x + to) / 2.0);
        }
        if (best_bleu > cur_bleu + 1e-12) {
          cur[c] = best_x;
          moved = true;
        }
      }
    }
  }

  std::size_t u1 = 0, w1 = 0;
  res.bleu_tuned = eval_weights(cur, &u1, &w1);
  if (res.bleu_tuned + 1e-12 < res.bleu_initial) {
    res.weights = initial;
    res.bleu_tuned = res.bleu_initial;
    res.eval_unit_tokens = u0;
    res.eval_word_tokens = w0;
  } else {
    res.weights = cur;
    res.eval_unit_tokens = u1;
    res.eval_word_tokens = w1;
  }
  return res;
}

}  // namespace pivotsmt
