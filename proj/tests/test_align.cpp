// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "pivotsmt/align.hpp"

using namespace pivotsmt;
using Catch::Approx;

namespace {

Bitext toy_bitext() {
  return {{{"a"}, {"x"}}, {{"a", "b"}, {"x", "y"}}};
}

Bitext random_bitext(std::mt19937_64& rng, std::size_t n_pairs) {
  Bitext bt;
  for (std::size_t p = 0; p < n_pairs; ++p) {
    std::size_t sl = 1 + rand_index(rng, 5), tl = 1 + rand_index(rng, 5);
    std::vector<std::string> src, tgt;
    for (std::size_t i = 0; i < sl; ++i)
      src.push_back(std::string(1, static_cast<char>('a' + rand_index(rng, 6))));
    for (std::size_t j = 0; j < tl; ++j)
      tgt.push_back(std::string(1, static_cast<char>('u' + rand_index(rng, 6))));
    bt.push_back({src, tgt});
  }
  return bt;
}

AlignmentMatrix random_matrix(std::mt19937_64& rng, int sl, int tl, double density) {
  AlignmentMatrix m;
  m.src_len = sl;
  m.tgt_len = tl;
  for (int i = 0; i < sl; ++i)
    for (int j = 0; j < tl; ++j)
      if (rand_unit(rng) < density) m.links.insert({i, j});
  return m;
}

double row_sum(const TranslationTable& t, int src) {
  double s = 0.0;
  for (auto& [tid, p] : t.rows[src]) s += p;
  return s;
}

}  // namespace

TEST_CASE("em sharpens the cooccurrence signal", "[align]") {
  TranslationTable t = train_model1(toy_bitext(), 10);
  CHECK(t.prob("a", "x") > t.prob("a", "y"));
}

TEST_CASE("single pair keeps rows normalized", "[align]") {
  TranslationTable t = train_model1({{{"a"}, {"x"}}}, 5);
  CHECK(t.prob("a", "x") == Approx(1.0).margin(1e-9));
  CHECK(t.null_prob("x") == Approx(1.0).margin(1e-9));
}

TEST_CASE("zero iterations yield the uniform table", "[align]") {
  TranslationTable t = train_model1({{{"a", "b"}, {"x", "y"}}}, 0);
  CHECK(t.prob("a", "x") == Approx(0.5));
  CHECK(t.prob("a", "y") == Approx(0.5));
  CHECK(t.prob("b", "x") == Approx(0.5));
  CHECK(t.null_prob("x") == Approx(0.5));
}

TEST_CASE("empty bitext rejected", "[align]") {
  CHECK_THROWS_AS(train_model1({}, 3), EmptyBitext);
}

TEST_CASE("paired corpora must have equal line counts", "[align]") {
  CHECK_THROWS_AS(make_bitext({{"a"}}, {{"x"}, {"y"}}), LengthMismatch);
}

TEST_CASE("training log-likelihood never decreases", "[align]") {
  std::mt19937_64 rng(derive_seed(53, "emll"));
  for (int t = 0; t < 10; ++t) {
    Bitext bt = random_bitext(rng, 1 + rand_index(rng, 20));
    TranslationTable table = train_model1(bt, 6);
    REQUIRE(table.log_likelihoods.size() == 7);
    for (std::size_t k = 1; k < table.log_likelihoods.size(); ++k)
      CHECK(table.log_likelihoods[k] >= table.log_likelihoods[k - 1] - 1e-9);
  }
}

TEST_CASE("rows stay stochastic after every iteration count", "[align]") {
  std::mt19937_64 rng(derive_seed(59, "rows"));
  Bitext bt = random_bitext(rng, 15);
  for (std::size_t iters : {0u, 1u, 2u, 5u}) {
    TranslationTable t = train_model1(bt, iters);
    for (std::size_t s = 0; s < t.rows.size(); ++s) {
      if (t.rows[s].empty()) continue;
      CHECK(row_sum(t, static_cast<int>(s)) == Approx(1.0).margin(1e-6));
    }
  }
}

TEST_CASE("training is deterministic", "[align]") {
  std::mt19937_64 rng(derive_seed(61, "det"));
  Bitext bt = random_bitext(rng, 12);
  TranslationTable a = train_model1(bt, 4);
  TranslationTable b = train_model1(bt, 4);
  REQUIRE(a.rows.size() == b.rows.size());
  for (std::size_t s = 0; s < a.rows.size(); ++s) CHECK(a.rows[s] == b.rows[s]);
}

TEST_CASE("viterbi links follow the dominant probabilities", "[align]") {
  // EM on a consistent bitext drives p(x|a), p(y|b) up.
  Bitext bt = {{{"a", "b"}, {"x", "y"}}, {{"a"}, {"x"}}, {{"b"}, {"y"}}};
  TranslationTable t = train_model1(bt, 10);
  auto als = viterbi_align({{{"a", "b"}, {"x", "y"}}}, t);
  REQUIRE(als.size() == 1);
  CHECK(als[0].links == std::set<std::pair<int, int>>{{0, 0}, {1, 1}});
}

TEST_CASE("empty target yields no links", "[align]") {
  TranslationTable t = train_model1(toy_bitext(), 2);
  auto als = viterbi_align({{{"a"}, {}}}, t);
  REQUIRE(als.size() == 1);
  CHECK(als[0].links.empty());
  CHECK(als[0].tgt_len == 0);
}

TEST_CASE("all-equal probabilities tie-break to the first source position",
          "[align]") {
  TranslationTable t = train_model1({{{"a", "b"}, {"x", "y"}}}, 0);
  auto als = viterbi_align({{{"a", "b"}, {"x", "y"}}}, t);
  CHECK(als[0].links == std::set<std::pair<int, int>>{{0, 0}, {0, 1}});
}

TEST_CASE("symmetrization of identical alignments is identity", "[align]") {
  std::mt19937_64 rng(derive_seed(67, "sym"));
  for (int t = 0; t < 30; ++t) {
    AlignmentMatrix m = random_matrix(rng, 3, 4, 0.4);
    AlignmentMatrix r = symmetrize_gdfa(m, m);
    CHECK(r.links == m.links);
  }
}

TEST_CASE("grow-diag adds a diagonal neighbor with free row and column",
          "[align]") {
  AlignmentMatrix fwd, rev;
  fwd.src_len = rev.src_len = 2;
  fwd.tgt_len = rev.tgt_len = 2;
  fwd.links = {{0, 0}};
  rev.links = {{0, 0}, {1, 1}};
  AlignmentMatrix r = symmetrize_gdfa(fwd, rev);
  CHECK(r.links == std::set<std::pair<int, int>>{{0, 0}, {1, 1}});
}

TEST_CASE("final-and covers links with both endpoints free", "[align]") {
  AlignmentMatrix fwd, rev;
  fwd.src_len = rev.src_len = 3;
  fwd.tgt_len = rev.tgt_len = 3;
  fwd.links = {{0, 0}};
  rev.links = {{2, 2}};
  AlignmentMatrix r = symmetrize_gdfa(fwd, rev);
  CHECK(r.links == std::set<std::pair<int, int>>{{0, 0}, {2, 2}});
}

TEST_CASE("gdfa lies between intersection and union", "[align]") {
  std::mt19937_64 rng(derive_seed(71, "bounds"));
  for (int t = 0; t < 100; ++t) {
    int sl = 1 + static_cast<int>(rand_index(rng, 5));
    int tl = 1 + static_cast<int>(rand_index(rng, 5));
    AlignmentMatrix fwd = random_matrix(rng, sl, tl, 0.35);
    AlignmentMatrix rev = random_matrix(rng, sl, tl, 0.35);
    AlignmentMatrix g = symmetrize_gdfa(fwd, rev);
    for (auto& l : fwd.links)
      if (rev.links.count(l)) CHECK(g.links.count(l) == 1);
    for (auto& l : g.links)
      CHECK((fwd.links.count(l) || rev.links.count(l)));
    AlignmentMatrix g2 = symmetrize_gdfa(fwd, rev);
    CHECK(g2.links == g.links);  // determinism
  }
}

TEST_CASE("dimension mismatch rejected", "[align]") {
  AlignmentMatrix a, b;
  a.src_len = 2;
  a.tgt_len = 2;
  b.src_len = 3;
  b.tgt_len = 2;
  CHECK_THROWS_AS(symmetrize_gdfa(a, b), DimensionMismatch);
}

TEST_CASE("alignment line roundtrip", "[align]") {
  AlignmentMatrix m;
  m.src_len = 3;
  m.tgt_len = 2;
  m.links = {{0, 0}, {2, 1}};
  std::string line = alignment_to_string(m);
  CHECK(line == "0-0 2-1");
  AlignmentMatrix back = alignment_from_string(line, 3, 2);
  CHECK(back.links == m.links);
}

TEST_CASE("transpose flips orientation", "[align]") {
  AlignmentMatrix m;
  m.src_len = 2;
  m.tgt_len = 3;
  m.links = {{0, 2}, {1, 0}};
  AlignmentMatrix t = transpose(m);
  CHECK(t.src_len == 3);
  CHECK(t.tgt_len == 2);
  CHECK(t.links == std::set<std::pair<int, int>>{{2, 0}, {0, 1}});
}
