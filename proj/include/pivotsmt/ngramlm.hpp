// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

// Interpolated Kneser-Ney n-gram language models with ARPA import/export.
// One discount per order, explicit <unk> mass, log base 10 throughout.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pivotsmt/errors.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

inline constexpr const char* kBos = "<s>";
inline constexpr const char* kEos = "</s>";
inline constexpr const char* kUnk = "<unk>";

// Last (order-1) unit ids seen; equal states have identical continuation
// distributions, which is what decoder recombination keys on.
using LMState = std::vector<int>;

namespace detail {

// n-gram keys are the unit ids packed 4 bytes little-endian each.
inline void key_append(std::string& key, int id) {
  auto u = static_cast<std::uint32_t>(id);
  key.push_back(static_cast<char>(u & 0xffu));
  key.push_back(static_cast<char>((u >> 8) & 0xffu));
  key.push_back(static_cast<char>((u >> 16) & 0xffu));
  key.push_back(static_cast<char>((u >> 24) & 0xffu));
}

inline std::string make_key(const int* ids, int n) {
  std::string key;
  key.reserve(4 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) key_append(key, ids[i]);
  return key;
}

inline int key_id(const std::string& key, int pos) {
  auto b = [&](int i) {
    return static_cast<std::uint32_t>(
        static_cast<unsigned char>(key[4 * pos + i]));
  };
  return static_cast<int>(b(0) | (b(1) << 8) | (b(2) << 16) | (b(3) << 24));
}

}  // namespace detail

class NgramLm {
 public:
  struct Entry {
    double logp = 0.0;
    double bow = 0.0;  // log10 backoff weight; 0 when the gram never extends
  };

  int order() const { return order_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  std::size_t entry_count(int k) const { return grams_.at(k - 1).size(); }

  int id_or_unk(const std::string& w) const {
    auto it = ids_.find(w);
    return it == ids_.end() ? unk_id_ : it->second;
  }

  LMState begin_state() const {
    return order_ > 1 ? LMState{bos_id_} : LMState{};
  }

  // log10 p(unit | state); pure. When next is non-null it receives the
  // successor state (the last order-1 ids of state + unit).
  double score(const LMState& state, const std::string& unit,
               LMState* next) const {
    return score_id(state, id_or_unk(unit), next);
  }

  double score_id(const LMState& state, int id, LMState* next) const {
    double lp = score_ids(state.data(), static_cast<int>(state.size()), id);
    if (next) {
      LMState ns = state;
      ns.push_back(id);
      if (static_cast<int>(ns.size()) > order_ - 1)
        ns.erase(ns.begin(), ns.end() - (order_ - 1));
      *next = std::move(ns);
    }
    return lp;
  }

  // log10 p(w | context) for an arbitrary token context (truncated to the
  // last order-1 tokens; unknowns map to <unk>).
  double log10_cond(const std::vector<std::string>& context,
                    const std::string& w) const {
    std::vector<int> ids;
    ids.reserve(context.size());
    for (auto& c : context) ids.push_back(id_or_unk(c));
    return score_ids(ids.data(), static_cast<int>(ids.size()), id_or_unk(w));
  }

  // Includes the end-of-sentence transition.
  double sentence_logprob(const std::vector<std::string>& sent) const {
    LMState st = begin_state();
    double total = 0.0;
    for (auto& w : sent) total += score(st, w, &st);
    return total + score_id(st, eos_id_, nullptr);
  }

  double perplexity(const std::vector<std::vector<std::string>>& corpus) const {
    if (corpus.empty()) throw EmptyCorpus();
    double ll = 0.0, tokens = 0.0;
    for (auto& s : corpus) {
      ll += sentence_logprob(s);
      tokens += static_cast<double>(s.size()) + 1.0;  // units + </s>
    }
    return std::pow(10.0, -ll / tokens);
  }

  void save_arpa(const std::string& path) const {
    LineWriter out(path);
    out.write_line("\\data\\");
    for (int k = 1; k <= order_; ++k)
      out.write_line("ngram " + std::to_string(k) + "=" +
                     std::to_string(grams_[k - 1].size()));
    out.write_line("");
    for (int k = 1; k <= order_; ++k) {
      out.write_line("\\" + std::to_string(k) + "-grams:");
      std::vector<std::pair<std::vector<std::string>, const Entry*>> rows;
      rows.reserve(grams_[k - 1].size());
      for (auto& [key, e] : grams_[k - 1]) {
        std::vector<std::string> toks(k);
        for (int i = 0; i < k; ++i) toks[i] = vocab_[detail::key_id(key, i)];
        rows.emplace_back(std::move(toks), &e);
      }
      std::sort(rows.begin(), rows.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      for (auto& [toks, e] : rows) {
        std::string line = fmt_f6(e->logp) + "\t" + join(toks, " ");
        if (k < order_) line += "\t" + fmt_f6(e->bow);
        out.write_line(line);
      }
      out.write_line("");
    }
    out.write_line("\\end\\");
  }

  static NgramLm load_arpa(const std::string& path) {
    NgramLm lm;
    lm.init_reserved();
    LineReader in(path);
    std::string line;
    std::vector<std::size_t> counts;
    bool in_data = false;
    int cur = 0;  // current n-gram section, 0 before the first one
    while (in.getline(line)) {
      std::string t = trim(line);
      if (t.empty()) continue;
      if (t == "\\data\\") {
        in_data = true;
        continue;
      }
      if (t == "\\end\\") break;
      if (t.front() == '\\' && t.back() == ':' &&
          t.find("-grams") != std::string::npos) {
        cur = std::stoi(t.substr(1));
        if (cur < 1 || cur > static_cast<int>(counts.size()))
          throw PivotsmtError("arpa: unexpected section " + t + " in " + path);
        continue;
      }
      if (in_data && cur == 0 && t.rfind("ngram ", 0) == 0) {
        auto eq = t.find('=');
        if (eq == std::string::npos)
          throw PivotsmtError("arpa: bad count line '" + t + "' in " + path);
        int k = std::stoi(t.substr(6, eq - 6));
        if (k != static_cast<int>(counts.size()) + 1)
          throw PivotsmtError("arpa: count lines out of order in " + path);
        counts.push_back(static_cast<std::size_t>(std::stoull(t.substr(eq + 1))));
        continue;
      }
      if (cur >= 1) {
        auto fields = split(t, "\t");
        if (fields.size() < 2)
          throw PivotsmtError("arpa: bad entry '" + t + "' in " + path);
        Entry e;
        e.logp = std::stod(fields[0]);
        if (fields.size() >= 3) e.bow = std::stod(fields[2]);
        auto toks = split_ws(fields[1]);
        if (static_cast<int>(toks.size()) != cur)
          throw PivotsmtError("arpa: wrong arity entry '" + t + "' in " + path);
        std::vector<int> ids;
        ids.reserve(toks.size());
        for (auto& tok : toks) ids.push_back(lm.intern(tok));
        if (lm.grams_.size() < static_cast<std::size_t>(cur))
          lm.grams_.resize(cur);
        lm.grams_[cur - 1][detail::make_key(ids.data(), cur)] = e;
        continue;
      }
      throw PivotsmtError("arpa: stray line '" + t + "' in " + path);
    }
    if (counts.empty()) throw PivotsmtError("arpa: no \\data\\ header in " + path);
    lm.order_ = static_cast<int>(counts.size());
    lm.grams_.resize(lm.order_);
    for (int k = 1; k <= lm.order_; ++k)
      if (lm.grams_[k - 1].size() != counts[k - 1])
        throw PivotsmtError("arpa: section " + std::to_string(k) +
                            " has " + std::to_string(lm.grams_[k - 1].size()) +
                            " entries, header says " +
                            std::to_string(counts[k - 1]) + " in " + path);
    return lm;
  }

  friend NgramLm train_ngram_lm(
      const std::vector<std::vector<std::string>>& corpus, int order);

 private:
  int intern(const std::string& w) {
    auto [it, fresh] = ids_.try_emplace(w, static_cast<int>(vocab_.size()));
    if (fresh) vocab_.push_back(w);
    return it->second;
  }

  void init_reserved() {
    bos_id_ = intern(kBos);
    eos_id_ = intern(kEos);
    unk_id_ = intern(kUnk);
  }

  // Standard back-off chain: longest stored (context, w) wins; each missing
  // level contributes its context's backoff weight (0 if the context itself
  // is unstored).
  double score_ids(const int* hist, int m, int w) const {
    if (m > order_ - 1) {
      hist += m - (order_ - 1);
      m = order_ - 1;
    }
    double bows = 0.0;
    for (int j = m;; --j) {
      std::string key = detail::make_key(hist + (m - j), j);
      detail::key_append(key, w);
      auto it = grams_[j].find(key);
      if (it != grams_[j].end()) return bows + it->second.logp;
      if (j == 0) break;
      auto hit = grams_[j - 1].find(detail::make_key(hist + (m - j), j));
      if (hit != grams_[j - 1].end()) bows += hit->second.bow;
    }
    return bows - 99.0;  // no unigram entry (foreign model without <unk>)
  }

  int order_ = 1;
  std::vector<std::string> vocab_;  // id -> token; bos/eos/unk first
  std::unordered_map<std::string, int> ids_;
  std::vector<std::unordered_map<std::string, Entry>> grams_;  // [k-1]
  int bos_id_ = 0, eos_id_ = 1, unk_id_ = 2;
};

// Interpolated Kneser-Ney training. Lower-order counts are continuation
// counts (distinct left contexts) except for <s>-initial grams, which can
// never be preceded and keep their raw counts; one discount per order,
// D = n1/(n1+2*n2) from the count-of-counts, falling back to 0.5 whenever
// n1 or n2 is zero.
inline NgramLm train_ngram_lm(
    const std::vector<std::vector<std::string>>& corpus, int order) {
  if (order < 1) throw PivotsmtError("lm order must be >= 1");
  if (corpus.empty()) throw EmptyCorpus();
  NgramLm lm;
  lm.order_ = order;
  lm.grams_.resize(order);
  lm.init_reserved();

  std::vector<std::unordered_map<std::string, double>> raw(order);
  for (auto& sent : corpus) {
    std::vector<int> ids;
    ids.reserve(sent.size() + 2);
    ids.push_back(lm.bos_id_);
    for (auto& w : sent) {
      if (w == kBos || w == kEos || w == kUnk)
        throw PivotsmtError("reserved symbol '" + w + "' in LM training corpus");
      ids.push_back(lm.intern(w));
    }
    ids.push_back(lm.eos_id_);
    for (int k = 1; k <= order; ++k)
      for (std::size_t i = 0; i + k <= ids.size(); ++i)
        raw[k - 1][detail::make_key(ids.data() + i, k)] += 1.0;
  }

  std::vector<std::unordered_map<std::string, double>> adj(order);
  adj[order - 1] = raw[order - 1];
  for (int oi = order - 2; oi >= 0; --oi) {
    auto& lower = adj[oi];
    for (auto& [key, c] : raw[oi + 1]) lower[key.substr(4)] += 1.0;
    for (auto& [key, c] : raw[oi])
      if (detail::key_id(key, 0) == lm.bos_id_) lower[key] = c;
  }

  const std::string bos_key = detail::make_key(&lm.bos_id_, 1);
  std::vector<double> D(order);
  for (int oi = 0; oi < order; ++oi) {
    double n1 = 0, n2 = 0;
    for (auto& [key, c] : adj[oi]) {
      if (oi == 0 && key == bos_key) continue;
      if (c == 1.0)
        n1 += 1;
      else if (c == 2.0)
        n2 += 1;
    }
    D[oi] = (n1 == 0 || n2 == 0) ? 0.5 : n1 / (n1 + 2 * n2);
  }

  // Unigram level over V' = vocab minus <s>, <unk> included; the discounted
  // mass is spread uniformly over V'.
  double a1 = 0, n_pos = 0;
  for (auto& [key, c] : adj[0])
    if (key != bos_key) {
      a1 += c;
      n_pos += 1;
    }
  double vprime = static_cast<double>(lm.vocab_.size() - 1);
  double gamma1 = D[0] * n_pos / a1;
  std::unordered_map<std::string, double> p_prev;
  for (int id = 0; id < static_cast<int>(lm.vocab_.size()); ++id) {
    if (id == lm.bos_id_) continue;
    std::string key = detail::make_key(&id, 1);
    auto it = adj[0].find(key);
    double c = it == adj[0].end() ? 0.0 : it->second;
    double p = std::max(c - D[0], 0.0) / a1 + gamma1 / vprime;
    lm.grams_[0][key] = {std::log10(p), 0.0};
    p_prev[key] = p;
  }
  lm.grams_[0][bos_key] = {-99.0, 0.0};  // <s> is context only

  for (int oi = 1; oi < order; ++oi) {
    struct HistSum {
      double a = 0, n = 0;
    };
    std::unordered_map<std::string, HistSum> hist;
    for (auto& [key, c] : adj[oi]) {
      auto& h = hist[key.substr(0, key.size() - 4)];
      h.a += c;
      h.n += 1;
    }
    for (auto& [hkey, hs] : hist) {
      auto it = lm.grams_[oi - 1].find(hkey);
      if (it != lm.grams_[oi - 1].end())
        it->second.bow = std::log10(D[oi] * hs.n / hs.a);
    }
    std::unordered_map<std::string, double> p_cur;
    for (auto& [key, c] : adj[oi]) {
      auto& hs = hist.at(key.substr(0, key.size() - 4));
      double lower = p_prev.at(key.substr(4));
      double p = std::max(c - D[oi], 0.0) / hs.a + D[oi] * hs.n / hs.a * lower;
      lm.grams_[oi][key] = {std::log10(p), 0.0};
      p_cur[key] = p;
    }
    p_prev = std::move(p_cur);
  }
  return lm;
}

}  // namespace pivotsmt
