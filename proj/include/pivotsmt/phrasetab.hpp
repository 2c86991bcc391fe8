// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "pivotsmt/align.hpp"
#include "pivotsmt/errors.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

// Feature order is fixed everywhere: P(t|s), lex(t|s), P(s|t), lex(s|t).
struct PhraseEntry {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  double phi_ts = 0.0;
  double lex_ts = 0.0;
  double phi_st = 0.0;
  double lex_st = 0.0;
  std::vector<std::pair<int, int>> alignment;  // internal links, sorted
  double joint_count = 0.0;
};

struct PhraseTable {
  std::vector<PhraseEntry> entries;  // sorted by (src, tgt) unit sequences
  std::string scheme;
  std::string source_lang;
  std::string target_lang;

  std::size_t size() const { return entries.size(); }

  void sort_entries() {
    std::sort(entries.begin(), entries.end(),
              [](const PhraseEntry& a, const PhraseEntry& b) {
                if (a.src != b.src) return a.src < b.src;
                return a.tgt < b.tgt;
              });
    index_.clear();
  }

  // Entries for one source phrase as an index range [first, last).
  std::pair<std::size_t, std::size_t> find_src(
      const std::vector<std::string>& src) const {
    if (index_.empty() && !entries.empty()) build_index();
    auto it = index_.find(join(src, " "));
    if (it == index_.end()) return {0, 0};
    return it->second;
  }

  void build_index() const {
    index_.clear();
    max_src_len_ = 0;
    std::size_t b = 0;
    for (std::size_t i = 1; i <= entries.size(); ++i) {
      max_src_len_ = std::max(max_src_len_, entries[i - 1].src.size());
      if (i == entries.size() || entries[i].src != entries[b].src) {
        index_[join(entries[b].src, " ")] = {b, i};
        b = i;
      }
    }
  }

  // Longest source phrase in the table (0 when empty); bounds decoder spans.
  std::size_t max_src_len() const {
    if (index_.empty() && !entries.empty()) build_index();
    return max_src_len_;
  }

  void save(const std::string& path) const;
  static PhraseTable load(const std::string& path);

 private:
  mutable std::unordered_map<std::string, std::pair<std::size_t, std::size_t>>
      index_;
  mutable std::size_t max_src_len_ = 0;
};

namespace detail {

inline std::string links_to_string(const std::vector<std::pair<int, int>>& links) {
  std::vector<std::string> parts;
  for (auto& [i, j] : links)
    parts.push_back(std::to_string(i) + "-" + std::to_string(j));
  return join(parts, " ");
}

inline std::vector<std::pair<int, int>> links_from_string(const std::string& s) {
  std::vector<std::pair<int, int>> out;
  for (const auto& tok : split_ws(s)) {
    auto dash = tok.find('-');
    if (dash == std::string::npos) throw PivotsmtError("bad link token: " + tok);
    out.push_back({std::stoi(tok.substr(0, dash)), std::stoi(tok.substr(dash + 1))});
  }
  return out;
}

}  // namespace detail

// ------------------------------------------------------------- extraction

// Emits every alignment-consistent phrase pair of one sentence pair: no link
// crosses the block boundary, at least one link inside, target side extended
// over adjacent unaligned columns, both sides capped at max_phrase_len.
template <typename Emit>
inline void extract_from_pair(const std::vector<std::string>& src,
                              const std::vector<std::string>& tgt,
                              const AlignmentMatrix& a, std::size_t max_phrase_len,
                              Emit&& emit) {
  const int I = static_cast<int>(src.size());
  const int J = static_cast<int>(tgt.size());
  std::vector<bool> col_aligned(J, false);
  for (auto& [i, j] : a.links) col_aligned[j] = true;
  const int L = static_cast<int>(max_phrase_len);
  for (int i1 = 0; i1 < I; ++i1) {
    for (int i2 = i1; i2 < std::min(I, i1 + L); ++i2) {
      int jmin = J, jmax = -1;
      for (auto& [i, j] : a.links) {
        if (i >= i1 && i <= i2) {
          jmin = std::min(jmin, j);
          jmax = std::max(jmax, j);
        }
      }
      if (jmax < 0) continue;  // no internal link
      bool consistent = true;
      for (auto& [i, j] : a.links) {
        if (j >= jmin && j <= jmax && (i < i1 || i > i2)) {
          consistent = false;
          break;
        }
      }
      if (!consistent) continue;
      for (int jl = jmin; jl >= 0 && (jl == jmin || !col_aligned[jl]); --jl) {
        for (int jr = jmax; jr < J && (jr == jmax || !col_aligned[jr]); ++jr) {
          if (jr - jl + 1 > L) continue;
          std::vector<std::pair<int, int>> links;
          for (auto& [i, j] : a.links)
            if (i >= i1 && i <= i2) links.push_back({i - i1, j - jl});
          std::sort(links.begin(), links.end());
          emit(std::vector<std::string>(src.begin() + i1, src.begin() + i2 + 1),
               std::vector<std::string>(tgt.begin() + jl, tgt.begin() + jr + 1),
               std::move(links));
        }
      }
    }
  }
}

struct ExtractedPhrase {
  std::vector<std::string> src;
  std::vector<std::string> tgt;
  std::vector<std::pair<int, int>> links;
};

inline std::vector<ExtractedPhrase> extract_phrases(
    const Bitext& bitext, const std::vector<AlignmentMatrix>& alignments,
    std::size_t max_phrase_len) {
  if (bitext.size() != alignments.size())
    throw LengthMismatch(std::min(bitext.size(), alignments.size()));
  std::vector<ExtractedPhrase> out;
  for (std::size_t k = 0; k < bitext.size(); ++k) {
    extract_from_pair(bitext[k].first, bitext[k].second, alignments[k],
                      max_phrase_len,
                      [&](std::vector<std::string> s, std::vector<std::string> t,
                          std::vector<std::pair<int, int>> l) {
                        out.push_back({std::move(s), std::move(t), std::move(l)});
                      });
  }
  return out;
}

// ---------------------------------------------------------------- scoring

// Streaming aggregator over extracted phrase instances.
class PhraseCollector {
 public:
  void add(const std::vector<std::string>& src, const std::vector<std::string>& tgt,
           const std::vector<std::pair<int, int>>& links) {
    std::string key = join(src, " ") + " ||| " + join(tgt, " ");
    Agg& a = map_[key];
    if (a.joint == 0.0) {
      a.src = src;
      a.tgt = tgt;
    }
    a.joint += 1.0;
    a.align_counts[detail::links_to_string(links)] += 1;
  }

  void add_corpus(const Bitext& bitext, const std::vector<AlignmentMatrix>& als,
                  std::size_t max_phrase_len) {
    if (bitext.size() != als.size())
      throw LengthMismatch(std::min(bitext.size(), als.size()));
    for (std::size_t k = 0; k < bitext.size(); ++k)
      extract_from_pair(bitext[k].first, bitext[k].second, als[k], max_phrase_len,
                        [&](std::vector<std::string> s, std::vector<std::string> t,
                            std::vector<std::pair<int, int>> l) { add(s, t, l); });
  }

  bool empty() const { return map_.empty(); }

  struct Agg {
    std::vector<std::string> src, tgt;
    double joint = 0.0;
    std::map<std::string, int> align_counts;  // serialized links → count
  };
  const std::unordered_map<std::string, Agg>& aggregates() const { return map_; }

 private:
  std::unordered_map<std::string, Agg> map_;
};

namespace detail {

// Product over target positions of the best linked lexical probability;
// unaligned positions fall back to the NULL row.  `reverse` swaps roles.
inline double lexical_weight(const std::vector<std::string>& src,
                             const std::vector<std::string>& tgt,
                             const std::vector<std::pair<int, int>>& links,
                             const TranslationTable& lex, bool reverse) {
  constexpr double kFloor = 1e-12;
  const auto& scored = reverse ? src : tgt;  // positions iterated
  double w = 1.0;
  for (std::size_t pos = 0; pos < scored.size(); ++pos) {
    double best = -1.0;
    for (auto& [i, j] : links) {
      std::size_t self = reverse ? static_cast<std::size_t>(i)
                                 : static_cast<std::size_t>(j);
      if (self != pos) continue;
      double p = reverse ? lex.prob(tgt[j], src[i]) : lex.prob(src[i], tgt[j]);
      best = std::max(best, p);
    }
    if (best < 0.0)
      best = reverse ? lex.null_prob(src[pos]) : lex.null_prob(tgt[pos]);
    w *= std::max(best, kFloor);
  }
  return w;
}

}  // namespace detail

// Relative-frequency phi features plus lexical weights from the dominant
// internal alignment; entries where every feature falls below prune_floor
// are dropped.
inline PhraseTable score_phrases(const PhraseCollector& collected,
                                 const TranslationTable& lex_fwd,
                                 const TranslationTable& lex_rev,
                                 double prune_floor = 1e-7) {
  std::unordered_map<std::string, double> src_count, tgt_count;
  for (const auto& [key, agg] : collected.aggregates()) {
    src_count[join(agg.src, " ")] += agg.joint;
    tgt_count[join(agg.tgt, " ")] += agg.joint;
  }
  PhraseTable table;
  for (const auto& [key, agg] : collected.aggregates()) {
    PhraseEntry e;
    e.src = agg.src;
    e.tgt = agg.tgt;
    e.joint_count = agg.joint;
    e.phi_ts = agg.joint / src_count[join(agg.src, " ")];
    e.phi_st = agg.joint / tgt_count[join(agg.tgt, " ")];
    int best_n = 0;
    const std::string* best_links = nullptr;
    for (const auto& [ls, n] : agg.align_counts) {  // lex order; first max wins
      if (n > best_n) {
        best_n = n;
        best_links = &ls;
      }
    }
    if (best_links) e.alignment = detail::links_from_string(*best_links);
    e.lex_ts = detail::lexical_weight(e.src, e.tgt, e.alignment, lex_fwd, false);
    e.lex_st = detail::lexical_weight(e.src, e.tgt, e.alignment, lex_rev, true);
    if (e.phi_ts < prune_floor && e.lex_ts < prune_floor &&
        e.phi_st < prune_floor && e.lex_st < prune_floor)
      continue;
    table.entries.push_back(std::move(e));
  }
  table.sort_entries();
  return table;
}

// ------------------------------------------------------------------- io

inline void PhraseTable::save(const std::string& path) const {
  LineWriter w(path);
  for (const auto& e : entries) {
    std::string line = join(e.src, " ") + " ||| " + join(e.tgt, " ") + " ||| " +
                       fmt_g6(e.phi_ts) + " " + fmt_g6(e.lex_ts) + " " +
                       fmt_g6(e.phi_st) + " " + fmt_g6(e.lex_st) + " ||| " +
                       detail::links_to_string(e.alignment) + " ||| " +
                       fmt_g6(e.joint_count) + " " +
                       fmt_g6(e.joint_count / e.phi_ts) + " " +
                       fmt_g6(e.joint_count / e.phi_st);
    w.write_line(line);
  }
  w.close();
  nlohmann::json meta;
  meta["scheme"] = scheme;
  meta["source"] = source_lang;
  meta["target"] = target_lang;
  meta["entries"] = entries.size();
  write_file(path + ".meta.json", meta.dump(2) + "\n");
}

inline PhraseTable PhraseTable::load(const std::string& path) {
  PhraseTable table;
  LineReader r(path);
  std::string line;
  std::size_t lineno = 0;
  while (r.getline(line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, " ||| ");
    if (fields.size() != 5)
      throw PivotsmtError("bad phrase-table line " + std::to_string(lineno) +
                          " in " + path);
    PhraseEntry e;
    e.src = split_ws(fields[0]);
    e.tgt = split_ws(fields[1]);
    auto feats = split_ws(fields[2]);
    if (feats.size() != 4)
      throw PivotsmtError("bad feature column at line " + std::to_string(lineno));
    e.phi_ts = std::stod(feats[0]);
    e.lex_ts = std::stod(feats[1]);
    e.phi_st = std::stod(feats[2]);
    e.lex_st = std::stod(feats[3]);
    e.alignment = detail::links_from_string(fields[3]);
    auto counts = split_ws(fields[4]);
    if (!counts.empty()) e.joint_count = std::stod(counts[0]);
    table.entries.push_back(std::move(e));
  }
  std::string meta_path = path + ".meta.json";
  std::ifstream meta_in(meta_path);
  if (meta_in) {
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    table.scheme = meta.value("scheme", "");
    table.source_lang = meta.value("source", "");
    table.target_lang = meta.value("target", "");
  }
  table.sort_entries();
  return table;
}

// |triangulated| relative to the larger component table.
inline double table_size_ratio(const PhraseTable& triangulated,
                               const PhraseTable& comp_sp,
                               const PhraseTable& comp_pt) {
  if (triangulated.entries.empty() || comp_sp.entries.empty() ||
      comp_pt.entries.empty())
    throw EmptyTable();
  return static_cast<double>(triangulated.size()) /
         static_cast<double>(std::max(comp_sp.size(), comp_pt.size()));
}

}  // namespace pivotsmt
