// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pivotsmt/errors.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

using Bitext =
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>>;

inline Bitext make_bitext(const std::vector<std::vector<std::string>>& src,
                          const std::vector<std::vector<std::string>>& tgt) {
  if (src.size() != tgt.size()) throw LengthMismatch(std::min(src.size(), tgt.size()));
  Bitext out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out.emplace_back(src[i], tgt[i]);
  return out;
}

// Sparse conditional distribution p(target | source) with a reserved NULL
// source row (id 0), stored over integer ids.
struct TranslationTable {
  std::vector<std::string> src_vocab;  // id → unit; [0] is the NULL token
  std::vector<std::string> tgt_vocab;
  std::unordered_map<std::string, int> src_ids;
  std::unordered_map<std::string, int> tgt_ids;
  std::vector<std::vector<std::pair<int, double>>> rows;  // sorted by tgt id
  std::vector<double> log_likelihoods;  // corpus LL per EM iteration (+ final)

  static constexpr int kNull = 0;

  double prob_ids(int src, int tgt) const {
    if (src < 0 || src >= static_cast<int>(rows.size())) return 0.0;
    const auto& row = rows[src];
    auto it = std::lower_bound(
        row.begin(), row.end(), tgt,
        [](const std::pair<int, double>& a, int b) { return a.first < b; });
    if (it != row.end() && it->first == tgt) return it->second;
    return 0.0;
  }

  int src_id(const std::string& s) const {
    auto it = src_ids.find(s);
    return it == src_ids.end() ? -1 : it->second;
  }
  int tgt_id(const std::string& t) const {
    auto it = tgt_ids.find(t);
    return it == tgt_ids.end() ? -1 : it->second;
  }

  double prob(const std::string& s, const std::string& t) const {
    return prob_ids(src_id(s), tgt_id(t));
  }
  double null_prob(const std::string& t) const {
    return prob_ids(kNull, tgt_id(t));
  }
};

struct AlignmentMatrix {
  std::set<std::pair<int, int>> links;  // (source pos, target pos)
  int src_len = 0;
  int tgt_len = 0;
};

inline AlignmentMatrix transpose(const AlignmentMatrix& a) {
  AlignmentMatrix t;
  t.src_len = a.tgt_len;
  t.tgt_len = a.src_len;
  for (auto [i, j] : a.links) t.links.insert({j, i});
  return t;
}

namespace detail {

struct IdBitext {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  std::vector<std::string> src_vocab, tgt_vocab;
  std::unordered_map<std::string, int> src_ids, tgt_ids;
};

inline IdBitext to_ids(const Bitext& bitext) {
  IdBitext out;
  out.src_vocab.push_back("NULL");  // reserved id 0
  auto intern = [](std::vector<std::string>& vocab,
                   std::unordered_map<std::string, int>& ids,
                   const std::string& s) {
    auto [it, fresh] = ids.emplace(s, static_cast<int>(vocab.size()));
    if (fresh) vocab.push_back(s);
    return it->second;
  };
  for (const auto& [src, tgt] : bitext) {
    std::vector<int> si, ti;
    si.reserve(src.size());
    ti.reserve(tgt.size());
    for (const auto& s : src) si.push_back(intern(out.src_vocab, out.src_ids, s));
    for (const auto& t : tgt) ti.push_back(intern(out.tgt_vocab, out.tgt_ids, t));
    out.pairs.emplace_back(std::move(si), std::move(ti));
  }
  return out;
}

}  // namespace detail

// IBM Model 1 EM over the bitext, with one NULL source token per sentence.
// Initialization is uniform over co-occurring targets, so "0 iterations"
// returns the uniform table.  log_likelihoods[k] is the corpus LL of the
// parameters entering iteration k; one extra E-pass records the final LL.
inline TranslationTable train_model1(const Bitext& bitext, std::size_t iterations) {
  if (bitext.empty()) throw EmptyBitext();
  detail::IdBitext ib = detail::to_ids(bitext);
  const std::size_t S = ib.src_vocab.size();
  constexpr double kFloor = 1e-12;

  // Co-occurrence structure: row s holds the distinct targets seen in
  // sentences containing s (NULL co-occurs with everything).
  std::vector<std::set<int>> cooc(S);
  for (const auto& [src, tgt] : ib.pairs) {
    for (int t : tgt) {
      cooc[TranslationTable::kNull].insert(t);
      for (int s : src) cooc[s].insert(t);
    }
  }

  std::vector<std::vector<std::pair<int, double>>> rows(S);
  for (std::size_t s = 0; s < S; ++s) {
    if (cooc[s].empty()) continue;
    double u = 1.0 / static_cast<double>(cooc[s].size());
    for (int t : cooc[s]) rows[s].emplace_back(t, u);
  }

  auto prob_of = [&rows](int s, int t) {
    const auto& row = rows[s];
    auto it = std::lower_bound(
        row.begin(), row.end(), t,
        [](const std::pair<int, double>& a, int b) { return a.first < b; });
    return (it != row.end() && it->first == t) ? it->second : 0.0;
  };

  std::vector<double> lls;
  std::vector<double> tmp;
  auto e_step = [&](bool collect, std::vector<std::unordered_map<int, double>>* counts) {
    double ll = 0.0;
    for (const auto& [src, tgt] : ib.pairs) {
      const double denom_log = std::log(static_cast<double>(src.size() + 1));
      tmp.resize(src.size());
      for (int t : tgt) {
        double null_p = prob_of(TranslationTable::kNull, t);
        double z = null_p;
        for (std::size_t i = 0; i < src.size(); ++i) {
          tmp[i] = prob_of(src[i], t);
          z += tmp[i];
        }
        if (z <= 0.0) z = kFloor;
        ll += std::log(z) - denom_log;
        if (collect) {
          double inv_z = 1.0 / z;
          (*counts)[TranslationTable::kNull][t] += null_p * inv_z;
          for (std::size_t i = 0; i < src.size(); ++i)
            (*counts)[src[i]][t] += tmp[i] * inv_z;
        }
      }
    }
    return ll;
  };

  for (std::size_t iter = 0; iter < iterations; ++iter) {
    std::vector<std::unordered_map<int, double>> counts(S);
    lls.push_back(e_step(true, &counts));
    for (std::size_t s = 0; s < S; ++s) {
      double total = 0.0;
      for (auto& [t, c] : counts[s]) {
        c = std::max(c, kFloor);
        total += c;
      }
      if (total <= 0.0) continue;  // keep previous (uniform) row
      auto& row = rows[s];
      for (auto& [t, p] : row) {
        auto it = counts[s].find(t);
        p = it == counts[s].end() ? kFloor / total : it->second / total;
      }
    }
  }
  lls.push_back(e_step(false, nullptr));

  TranslationTable table;
  table.src_vocab = std::move(ib.src_vocab);
  table.tgt_vocab = std::move(ib.tgt_vocab);
  table.src_ids = std::move(ib.src_ids);
  table.tgt_ids = std::move(ib.tgt_ids);
  table.rows = std::move(rows);
  table.log_likelihoods = std::move(lls);
  return table;
}

// Each target position links to the most probable real source position;
// NULL absorbs it only when strictly better than every real position.
// Ties between real positions go to the smallest index.
inline std::vector<AlignmentMatrix> viterbi_align(const Bitext& bitext,
                                                  const TranslationTable& table) {
  std::vector<AlignmentMatrix> out;
  out.reserve(bitext.size());
  for (const auto& [src, tgt] : bitext) {
    AlignmentMatrix m;
    m.src_len = static_cast<int>(src.size());
    m.tgt_len = static_cast<int>(tgt.size());
    std::vector<int> src_ids(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) src_ids[i] = table.src_id(src[i]);
    for (std::size_t j = 0; j < tgt.size(); ++j) {
      int t = table.tgt_id(tgt[j]);
      double best = -1.0;
      int best_i = -1;
      for (std::size_t i = 0; i < src.size(); ++i) {
        double p = table.prob_ids(src_ids[i], t);
        if (p > best) {
          best = p;
          best_i = static_cast<int>(i);
        }
      }
      double null_p = table.prob_ids(TranslationTable::kNull, t);
      if (best_i >= 0 && null_p <= best)
        m.links.insert({best_i, static_cast<int>(j)});
    }
    out.push_back(std::move(m));
  }
  return out;
}

// Standard grow-diag-final-and.  Both inputs are oriented source→target
// (transpose the reverse model's output first).
inline AlignmentMatrix symmetrize_gdfa(const AlignmentMatrix& fwd,
                                       const AlignmentMatrix& rev) {
  if (fwd.src_len != rev.src_len || fwd.tgt_len != rev.tgt_len)
    throw DimensionMismatch();
  AlignmentMatrix out;
  out.src_len = fwd.src_len;
  out.tgt_len = fwd.tgt_len;

  std::set<std::pair<int, int>> uni;
  for (auto& l : fwd.links) uni.insert(l);
  for (auto& l : rev.links) uni.insert(l);
  for (auto& l : fwd.links)
    if (rev.links.count(l)) out.links.insert(l);

  std::vector<bool> row_cov(out.src_len, false), col_cov(out.tgt_len, false);
  auto cover = [&](const std::pair<int, int>& l) {
    row_cov[l.first] = true;
    col_cov[l.second] = true;
  };
  for (auto& l : out.links) cover(l);

  static constexpr int kNbr[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                                     {0, 1},   {1, -1}, {1, 0},  {1, 1}};
  bool changed = true;
  while (changed) {  // grow-diag to fixpoint
    changed = false;
    for (auto l : std::set<std::pair<int, int>>(out.links)) {
      for (auto& d : kNbr) {
        std::pair<int, int> n{l.first + d[0], l.second + d[1]};
        if (n.first < 0 || n.first >= out.src_len || n.second < 0 ||
            n.second >= out.tgt_len)
          continue;
        if (!uni.count(n) || out.links.count(n)) continue;
        if (!row_cov[n.first] || !col_cov[n.second]) {
          out.links.insert(n);
          cover(n);
          changed = true;
        }
      }
    }
  }
  for (auto& l : uni) {  // final-and
    if (!row_cov[l.first] && !col_cov[l.second]) {
      out.links.insert(l);
      cover(l);
    }
  }
  return out;
}

// Moses-style "i-j" link serialization, one sentence per line.
inline std::string alignment_to_string(const AlignmentMatrix& m) {
  std::vector<std::string> parts;
  for (auto& [i, j] : m.links)
    parts.push_back(std::to_string(i) + "-" + std::to_string(j));
  return join(parts, " ");
}

inline AlignmentMatrix alignment_from_string(const std::string& line, int src_len,
                                             int tgt_len) {
  AlignmentMatrix m;
  m.src_len = src_len;
  m.tgt_len = tgt_len;
  for (const auto& tok : split_ws(line)) {
    auto dash = tok.find('-');
    if (dash == std::string::npos)
      throw PivotsmtError("bad alignment token: " + tok);
    m.links.insert({std::stoi(tok.substr(0, dash)), std::stoi(tok.substr(dash + 1))});
  }
  return m;
}

// Tab-separated "src<TAB>tgt<TAB>prob" rows, one per table cell.  The NULL
// source token is written literally; probabilities round-trip exactly.
inline void save_translation_table(const TranslationTable& table,
                                   const std::string& path) {
  LineWriter out(path);
  out.write_line("#version pivotsmt-lex-1");
  char buf[64];
  for (std::size_t s = 0; s < table.rows.size(); ++s) {
    for (const auto& [tid, p] : table.rows[s]) {
      std::snprintf(buf, sizeof(buf), "%.17g", p);
      out.write_line(table.src_vocab[s] + "\t" + table.tgt_vocab[tid] + "\t" +
                     buf);
    }
  }
}

inline TranslationTable load_translation_table(const std::string& path) {
  TranslationTable table;
  // Like train_model1, id 0 is the NULL token but it is not in src_ids, so
  // prob("NULL", t) stays 0 and the null row is reached via prob_ids.
  table.src_vocab = {"NULL"};
  table.rows.resize(1);
  auto intern = [](std::vector<std::string>& vocab,
                   std::unordered_map<std::string, int>& ids,
                   const std::string& unit) {
    auto it = ids.find(unit);
    if (it != ids.end()) return it->second;
    int id = static_cast<int>(vocab.size());
    vocab.push_back(unit);
    ids.emplace(unit, id);
    return id;
  };
  LineReader in(path);
  std::string line;
  bool first = true;
  while (in.getline(line)) {
    if (first) {
      first = false;
      if (line.rfind("#version", 0) == 0) continue;
    }
    if (line.empty()) continue;
    auto fields = split(line, "\t");
    if (fields.size() != 3)
      throw PivotsmtError("bad lexical table line: " + line);
    int sid = fields[0] == "NULL"
                  ? TranslationTable::kNull
                  : intern(table.src_vocab, table.src_ids, fields[0]);
    int tid = intern(table.tgt_vocab, table.tgt_ids, fields[1]);
    if (table.rows.size() <= static_cast<std::size_t>(sid))
      table.rows.resize(sid + 1);
    table.rows[sid].push_back({tid, std::stod(fields[2])});
  }
  for (auto& row : table.rows)
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
  return table;
}

}  // namespace pivotsmt
