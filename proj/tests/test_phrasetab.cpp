// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <random>

#include "pivotsmt/phrasetab.hpp"

#include "oracles.hpp"

using namespace pivotsmt;
using Catch::Approx;

namespace {

// Hand-built conditional table; triples (src, tgt, p), "NULL" rows allowed.
TranslationTable make_table(
    const std::vector<std::tuple<std::string, std::string, double>>& triples) {
  TranslationTable t;
  t.src_vocab = {"NULL"};
  auto intern = [](std::vector<std::string>& vocab,
                   std::unordered_map<std::string, int>& ids,
                   const std::string& s) {
    auto [it, fresh] = ids.emplace(s, static_cast<int>(vocab.size()));
    if (fresh) vocab.push_back(s);
    return it->second;
  };
  std::map<int, std::map<int, double>> rows;
  for (auto& [s, tg, p] : triples) {
    int si = s == "NULL" ? 0 : intern(t.src_vocab, t.src_ids, s);
    int ti = intern(t.tgt_vocab, t.tgt_ids, tg);
    rows[si][ti] = p;
  }
  t.rows.resize(t.src_vocab.size());
  for (auto& [si, row] : rows)
    for (auto& [ti, p] : row) t.rows[si].emplace_back(ti, p);
  return t;
}

std::string serialize_extracted(const std::vector<ExtractedPhrase>& ps) {
  std::vector<std::string> lines;
  for (const auto& p : ps) {
    std::string s;
    for (auto& u : p.src) s += u + " ";
    s += "||| ";
    for (auto& u : p.tgt) s += u + " ";
    s += "|||";
    for (auto& [i, j] : p.links)
      s += " " + std::to_string(i) + "-" + std::to_string(j);
    lines.push_back(s);
  }
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (auto& l : lines) out += l + "\n";
  return out;
}

AlignmentMatrix matrix_of(int sl, int tl,
                          std::vector<std::pair<int, int>> links) {
  AlignmentMatrix m;
  m.src_len = sl;
  m.tgt_len = tl;
  m.links.insert(links.begin(), links.end());
  return m;
}

}  // namespace

TEST_CASE("one-to-one pair extracts the single phrase", "[phrasetab]") {
  auto ps = extract_phrases({{{"a"}, {"x"}}}, {matrix_of(1, 1, {{0, 0}})}, 7);
  REQUIRE(ps.size() == 1);
  CHECK(ps[0].src == std::vector<std::string>{"a"});
  CHECK(ps[0].tgt == std::vector<std::string>{"x"});
  CHECK(ps[0].links == std::vector<std::pair<int, int>>{{0, 0}});
}

TEST_CASE("monotone diagonal yields the three blocks", "[phrasetab]") {
  auto ps = extract_phrases({{{"s0", "s1"}, {"t0", "t1"}}},
                            {matrix_of(2, 2, {{0, 0}, {1, 1}})}, 7);
  CHECK(ps.size() == 3);
  std::set<std::string> got;
  for (auto& p : ps) got.insert(join(p.src, " ") + "/" + join(p.tgt, " "));
  CHECK(got == std::set<std::string>{"s0/t0", "s1/t1", "s0 s1/t0 t1"});
}

TEST_CASE("crossing links rule out the monotone sub-blocks", "[phrasetab]") {
  // (s0,t0) and (s1,t1) would each strand a link; the two cross pairs and
  // the full block survive.
  auto ps = extract_phrases({{{"s0", "s1"}, {"t0", "t1"}}},
                            {matrix_of(2, 2, {{0, 1}, {1, 0}})}, 7);
  std::set<std::string> got;
  for (auto& p : ps) got.insert(join(p.src, " ") + "/" + join(p.tgt, " "));
  CHECK(got == std::set<std::string>{"s0/t1", "s1/t0", "s0 s1/t0 t1"});
}

TEST_CASE("extraction matches the brute-force block enumerator", "[phrasetab]") {
  std::mt19937_64 rng(derive_seed(73, "blocks"));
  for (int t = 0; t < 200; ++t) {
    int I = 1 + static_cast<int>(rand_index(rng, 6));
    int J = 1 + static_cast<int>(rand_index(rng, 6));
    std::vector<std::string> src, tgt;
    for (int i = 0; i < I; ++i) src.push_back("s" + std::to_string(i));
    for (int j = 0; j < J; ++j) tgt.push_back("t" + std::to_string(j));
    std::vector<std::pair<int, int>> links;
    for (int i = 0; i < I; ++i)
      for (int j = 0; j < J; ++j)
        if (rand_unit(rng) < 0.3) links.push_back({i, j});
    int max_len = 1 + static_cast<int>(rand_index(rng, 6));
    AlignmentMatrix m = matrix_of(I, J, links);
    auto ps = extract_phrases({{src, tgt}}, {m}, max_len);
    auto oracle = oracles::consistent_blocks(src, tgt, links, max_len);
    std::string oracle_s;
    for (auto& l : oracle) oracle_s += l + "\n";
    CHECK(serialize_extracted(ps) == oracle_s);
  }
}

TEST_CASE("unaligned boundary columns extend target phrases", "[phrasetab]") {
  // tgt t2 is unaligned: "s1/t1" extends to "s1/t1 t2".
  auto ps = extract_phrases({{{"s0", "s1"}, {"t0", "t1", "t2"}}},
                            {matrix_of(2, 3, {{0, 0}, {1, 1}})}, 7);
  std::set<std::string> got;
  for (auto& p : ps) got.insert(join(p.src, " ") + "/" + join(p.tgt, " "));
  CHECK(got.count("s1/t1 t2") == 1);
  CHECK(got.count("s0 s1/t0 t1 t2") == 1);
}

TEST_CASE("singleton pair scores phi one in both directions", "[phrasetab]") {
  PhraseCollector c;
  c.add({"a"}, {"x"}, {{0, 0}});
  auto lex = make_table({{"a", "x", 0.8}, {"NULL", "x", 0.2}});
  auto rev = make_table({{"x", "a", 0.7}, {"NULL", "a", 0.3}});
  PhraseTable t = score_phrases(c, lex, rev, 0.0);
  REQUIRE(t.size() == 1);
  CHECK(t.entries[0].phi_ts == 1.0);
  CHECK(t.entries[0].phi_st == 1.0);
  CHECK(t.entries[0].lex_ts == Approx(0.8));
  CHECK(t.entries[0].lex_st == Approx(0.7));
}

TEST_CASE("relative frequencies follow joint counts", "[phrasetab]") {
  PhraseCollector c;
  for (int k = 0; k < 3; ++k) c.add({"s"}, {"t1"}, {{0, 0}});
  c.add({"s"}, {"t2"}, {{0, 0}});
  auto lex = make_table({{"s", "t1", 0.5}, {"s", "t2", 0.5}});
  auto rev = make_table({{"t1", "s", 0.5}, {"t2", "s", 0.5}});
  PhraseTable t = score_phrases(c, lex, rev, 0.0);
  REQUIRE(t.size() == 2);
  CHECK(t.entries[0].tgt == std::vector<std::string>{"t1"});
  CHECK(t.entries[0].phi_ts == Approx(0.75));
  CHECK(t.entries[1].phi_ts == Approx(0.25));
  CHECK(t.entries[0].phi_st == 1.0);
}

TEST_CASE("unaligned target unit uses the null row", "[phrasetab]") {
  PhraseCollector c;
  c.add({"a"}, {"x", "y"}, {{0, 0}});  // y unaligned
  auto lex = make_table({{"a", "x", 0.9}, {"NULL", "y", 0.25}});
  auto rev = make_table({{"x", "a", 0.9}});
  PhraseTable t = score_phrases(c, lex, rev, 0.0);
  REQUIRE(t.size() == 1);
  CHECK(t.entries[0].lex_ts == Approx(0.9 * 0.25));
}

TEST_CASE("per-source phi values sum to one before pruning", "[phrasetab]") {
  std::mt19937_64 rng(derive_seed(79, "phisum"));
  Bitext bt;
  for (int k = 0; k < 40; ++k) {
    std::vector<std::string> src, tgt;
    std::size_t n = 1 + rand_index(rng, 4);
    for (std::size_t i = 0; i < n; ++i) {
      src.push_back(std::string(1, static_cast<char>('a' + rand_index(rng, 4))));
      tgt.push_back(std::string(1, static_cast<char>('u' + rand_index(rng, 4))));
    }
    bt.push_back({src, tgt});
  }
  TranslationTable fwd = train_model1(bt, 3);
  Bitext rev_bt;
  for (auto& [s, t] : bt) rev_bt.push_back({t, s});
  TranslationTable rev = train_model1(rev_bt, 3);
  auto fwd_al = viterbi_align(bt, fwd);
  auto rev_al = viterbi_align(rev_bt, rev);
  std::vector<AlignmentMatrix> sym;
  for (std::size_t k = 0; k < bt.size(); ++k)
    sym.push_back(symmetrize_gdfa(fwd_al[k], transpose(rev_al[k])));
  PhraseCollector c;
  c.add_corpus(bt, sym, 7);
  PhraseTable t = score_phrases(c, fwd, rev, 0.0);
  std::map<std::string, double> sums;
  for (auto& e : t.entries) sums[join(e.src, " ")] += e.phi_ts;
  for (auto& [s, v] : sums) CHECK(v == Approx(1.0).margin(1e-6));
}

TEST_CASE("phrase table file roundtrip", "[phrasetab]") {
  PhraseCollector c;
  c.add({"a", "b"}, {"x"}, {{0, 0}, {1, 0}});
  c.add({"a"}, {"x"}, {{0, 0}});
  c.add({"a"}, {"y"}, {{0, 0}});
  auto lex = make_table({{"a", "x", 0.617283945}, {"a", "y", 0.3}, {"b", "x", 0.5}});
  auto rev = make_table({{"x", "a", 0.5}, {"x", "b", 0.25}, {"y", "a", 0.125}});
  PhraseTable t = score_phrases(c, lex, rev, 0.0);
  t.scheme = "os";
  t.source_lang = "l1";
  t.target_lang = "l2";
  auto dir = std::filesystem::temp_directory_path();
  std::string p1 = (dir / "pt_roundtrip.txt").string();
  std::string p2 = (dir / "pt_roundtrip2.txt").string();
  t.save(p1);
  PhraseTable r = PhraseTable::load(p1);
  CHECK(r.scheme == "os");
  CHECK(r.source_lang == "l1");
  CHECK(r.target_lang == "l2");
  REQUIRE(r.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(r.entries[i].src == t.entries[i].src);
    CHECK(r.entries[i].tgt == t.entries[i].tgt);
    CHECK(r.entries[i].alignment == t.entries[i].alignment);
    // Text format carries 6 significant digits.
    CHECK(r.entries[i].phi_ts == Approx(t.entries[i].phi_ts).epsilon(1e-5));
    CHECK(r.entries[i].lex_ts == Approx(t.entries[i].lex_ts).epsilon(1e-5));
  }
  // Canonicalized values survive a second roundtrip byte-identically.
  r.save(p2);
  PhraseTable r2 = PhraseTable::load(p2);
  for (std::size_t i = 0; i < r.size(); ++i) {
    CHECK(r2.entries[i].phi_ts == r.entries[i].phi_ts);
    CHECK(r2.entries[i].lex_st == r.entries[i].lex_st);
  }
  CHECK(read_file(p1) == read_file(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
  std::filesystem::remove(p1 + ".meta.json");
  std::filesystem::remove(p2 + ".meta.json");
}

TEST_CASE("gzip phrase tables load transparently", "[phrasetab]") {
  PhraseCollector c;
  c.add({"a"}, {"x"}, {{0, 0}});
  auto lex = make_table({{"a", "x", 0.5}});
  auto rev = make_table({{"x", "a", 0.5}});
  PhraseTable t = score_phrases(c, lex, rev, 0.0);
  auto p = (std::filesystem::temp_directory_path() / "pt_test.txt.gz").string();
  t.save(p);
  PhraseTable r = PhraseTable::load(p);
  REQUIRE(r.size() == 1);
  CHECK(r.entries[0].src == std::vector<std::string>{"a"});
  std::filesystem::remove(p);
  std::filesystem::remove(p + ".meta.json");
}

TEST_CASE("entry order is deterministic under permutation", "[phrasetab]") {
  PhraseCollector c1, c2;
  std::vector<std::tuple<std::vector<std::string>, std::vector<std::string>>>
      pairs = {{{"b"}, {"y"}}, {{"a"}, {"x"}}, {{"a", "b"}, {"x", "y"}}};
  for (auto& [s, t] : pairs) c1.add(s, t, {{0, 0}});
  for (auto it = pairs.rbegin(); it != pairs.rend(); ++it)
    c2.add(std::get<0>(*it), std::get<1>(*it), {{0, 0}});
  auto lex = make_table({{"a", "x", 0.5}, {"b", "y", 0.5}});
  auto rev = make_table({{"x", "a", 0.5}, {"y", "b", 0.5}});
  PhraseTable t1 = score_phrases(c1, lex, rev, 0.0);
  PhraseTable t2 = score_phrases(c2, lex, rev, 0.0);
  REQUIRE(t1.size() == t2.size());
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1.entries[i].src == t2.entries[i].src);
    CHECK(t1.entries[i].tgt == t2.entries[i].tgt);
  }
}

TEST_CASE("source index finds entry ranges", "[phrasetab]") {
  PhraseCollector c;
  c.add({"a"}, {"x"}, {{0, 0}});
  c.add({"a"}, {"y"}, {{0, 0}});
  c.add({"b"}, {"z"}, {{0, 0}});
  auto lex = make_table({{"a", "x", 0.5}});
  auto rev = make_table({{"x", "a", 0.5}});
  PhraseTable t = score_phrases(c, lex, rev, 0.0);
  auto [b, e] = t.find_src({"a"});
  CHECK(e - b == 2);
  auto [b2, e2] = t.find_src({"missing"});
  CHECK(b2 == e2);
}

TEST_CASE("size ratio uses the larger component", "[phrasetab]") {
  auto fill = [](std::size_t n) {
    PhraseTable t;
    for (std::size_t i = 0; i < n; ++i) {
      PhraseEntry e;
      e.src = {"s" + std::to_string(i)};
      e.tgt = {"t"};
      e.phi_ts = e.phi_st = e.lex_ts = e.lex_st = 0.5;
      t.entries.push_back(e);
    }
    t.sort_entries();
    return t;
  };
  CHECK(table_size_ratio(fill(100), fill(200), fill(150)) == Approx(0.5));
  CHECK(table_size_ratio(fill(10), fill(10), fill(10)) == Approx(1.0));
  CHECK_THROWS_AS(table_size_ratio(fill(0), fill(10), fill(10)), EmptyTable);
}
