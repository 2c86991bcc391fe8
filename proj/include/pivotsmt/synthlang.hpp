// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

// Generator for families of artificial related languages. A shared
// proto-lexicon of CV-syllable words is pushed through per-language sound
// change rules; a word is a cognate of the proto form with probability
// cognate_rate, otherwise the language mints an unrelated word. Sentences
// come from shared templates, so all corpora line up sentence by sentence.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pivotsmt/errors.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

// kind "sub": replace every occurrence of `from` with `to`.
// kind "vowel_shift": per-codepoint map, from[i] -> to[i].
// kind "suffix": append `to`.
struct SoundRule {
  std::string kind;
  std::string from;
  std::string to;
};

struct SynthLanguage {
  std::string name;
  std::vector<SoundRule> rules;
  std::vector<std::string> function_words;
};

struct SynthLangSpec {
  std::size_t proto_vocab_size = 400;
  std::vector<std::string> consonants;
  std::vector<std::string> vowels;
  std::vector<SynthLanguage> languages;
  double cognate_rate = 1.0;
  std::string word_order = "sov";
  std::uint64_t seed = 1;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["proto_vocab_size"] = proto_vocab_size;
    j["consonants"] = consonants;
    j["vowels"] = vowels;
    j["cognate_rate"] = cognate_rate;
    j["word_order"] = word_order;
    j["seed"] = seed;
    j["languages"] = nlohmann::json::array();
    for (auto& l : languages) {
      nlohmann::json jl;
      jl["name"] = l.name;
      jl["function_words"] = l.function_words;
      jl["rules"] = nlohmann::json::array();
      for (auto& r : l.rules)
        jl["rules"].push_back({{"kind", r.kind}, {"from", r.from}, {"to", r.to}});
      j["languages"].push_back(std::move(jl));
    }
    return j;
  }

  static SynthLangSpec from_json(const nlohmann::json& j) {
    SynthLangSpec s;
    s.proto_vocab_size = j.value("proto_vocab_size", s.proto_vocab_size);
    s.consonants = j.value("consonants", s.consonants);
    s.vowels = j.value("vowels", s.vowels);
    s.cognate_rate = j.value("cognate_rate", s.cognate_rate);
    s.word_order = j.value("word_order", s.word_order);
    s.seed = j.value("seed", s.seed);
    for (auto& jl : j.value("languages", nlohmann::json::array())) {
      SynthLanguage l;
      l.name = jl.value("name", "");
      l.function_words =
          jl.value("function_words", std::vector<std::string>{});
      for (auto& jr : jl.value("rules", nlohmann::json::array()))
        l.rules.push_back(SoundRule{jr.value("kind", ""), jr.value("from", ""),
                                    jr.value("to", "")});
      s.languages.push_back(std::move(l));
    }
    return s;
  }
};

inline std::string apply_sound_rules(const std::string& word,
                                     const std::vector<SoundRule>& rules) {
  std::string w = word;
  for (const auto& r : rules) {
    if (r.kind == "sub") {
      if (r.from.empty()) continue;
      std::string out;
      std::size_t pos = 0;
      while (true) {
        std::size_t hit = w.find(r.from, pos);
        if (hit == std::string::npos) {
          out += w.substr(pos);
          break;
        }
        out += w.substr(pos, hit - pos);
        out += r.to;
        pos = hit + r.from.size();
      }
      w = std::move(out);
    } else if (r.kind == "vowel_shift") {
      std::u32string u = utf8_decode(w);
      std::u32string f = utf8_decode(r.from);
      std::u32string t = utf8_decode(r.to);
      if (f.size() != t.size())
        throw SpecError("vowel_shift from/to lengths differ");
      for (auto& c : u) {
        std::size_t i = f.find(c);
        if (i != std::u32string::npos) c = t[i];
      }
      w = utf8_encode(u);
    } else if (r.kind == "suffix") {
      w += r.to;
    } else {
      throw SpecError("unknown sound rule kind '" + r.kind + "'");
    }
  }
  return w;
}

struct LangCorpus {
  std::string name;
  std::vector<std::string> train, tune, test;
};

struct SynthFamily {
  std::vector<LangCorpus> corpora;
  // lexicons[language][word id]; index 0..proto_vocab_size-1, aligned across
  // languages by shared word id.
  std::vector<std::vector<std::string>> lexicons;
  std::vector<std::string> proto;
};

namespace detail {

inline std::string random_cv_word(std::mt19937_64& rng,
                                  const SynthLangSpec& spec) {
  std::size_t syllables = 2 + rand_index(rng, 3);  // 2..4
  std::string w;
  for (std::size_t i = 0; i < syllables; ++i) {
    w += spec.consonants[rand_index(rng, spec.consonants.size())];
    w += spec.vowels[rand_index(rng, spec.vowels.size())];
  }
  return w;
}

inline void validate_spec(const SynthLangSpec& spec) {
  if (spec.consonants.empty() || spec.vowels.empty())
    throw SpecError("syllable inventory must list consonants and vowels");
  if (spec.proto_vocab_size == 0)
    throw SpecError("proto_vocab_size must be positive");
  if (spec.cognate_rate < 0.0 || spec.cognate_rate > 1.0)
    throw SpecError("cognate_rate must lie in [0,1]");
  for (auto& l : spec.languages)
    if (l.name.empty()) throw SpecError("every language needs a name");
}

}  // namespace detail

// Generate aligned corpora for every language in the spec, split 8:1:1 into
// train/tune/test by sentence index. Deterministic in the spec's seed.
inline SynthFamily generate_family(const SynthLangSpec& spec,
                                   std::size_t num_sentences) {
  detail::validate_spec(spec);
  if (spec.languages.size() < 2)
    throw SpecError("a family needs at least two languages");
  if (num_sentences == 0) throw SpecError("need at least one sentence");

  SynthFamily fam;
  fam.proto.resize(spec.proto_vocab_size);
  for (std::size_t w = 0; w < spec.proto_vocab_size; ++w) {
    std::mt19937_64 rng(derive_seed(spec.seed, "proto", w));
    fam.proto[w] = detail::random_cv_word(rng, spec);
  }
  for (const auto& lang : spec.languages) {
    std::vector<std::string> lex(spec.proto_vocab_size);
    for (std::size_t w = 0; w < spec.proto_vocab_size; ++w) {
      std::mt19937_64 rng(derive_seed(spec.seed, "lex:" + lang.name, w));
      if (rand_unit(rng) < spec.cognate_rate)
        lex[w] = apply_sound_rules(fam.proto[w], lang.rules);
      else
        lex[w] = detail::random_cv_word(rng, spec);
    }
    fam.lexicons.push_back(std::move(lex));
  }

  // Zipf-flavored content word sampling: weight of word id r is 1/(r+2).
  std::vector<double> cum(spec.proto_vocab_size);
  double total = 0.0;
  for (std::size_t r = 0; r < spec.proto_vocab_size; ++r) {
    total += 1.0 / static_cast<double>(r + 2);
    cum[r] = total;
  }
  auto zipf = [&](std::mt19937_64& rng) {
    double u = rand_unit(rng) * total;
    return static_cast<std::size_t>(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
  };

  std::vector<std::vector<std::string>> lines(spec.languages.size());
  for (std::size_t s = 0; s < num_sentences; ++s) {
    std::mt19937_64 rng(derive_seed(spec.seed, "sent", s));
    std::size_t slots = 2 + rand_index(rng, 4);  // 2..5 content words
    std::vector<std::size_t> ids;
    for (std::size_t k = 0; k < slots; ++k) ids.push_back(zipf(rng));
    bool use_fw = rand_unit(rng) < 0.5;
    std::size_t fw_rank = rand_index(rng, 64);
    for (std::size_t li = 0; li < spec.languages.size(); ++li) {
      const auto& lang = spec.languages[li];
      std::vector<std::string> words;
      for (std::size_t k = 0; k < slots; ++k) {
        // Verb-final template: a function word, when drawn, sits before the
        // last content slot in every language.
        if (use_fw && k + 1 == slots && !lang.function_words.empty())
          words.push_back(
              lang.function_words[fw_rank % lang.function_words.size()]);
        words.push_back(fam.lexicons[li][ids[k]]);
      }
      lines[li].push_back(join(words, " "));
    }
  }

  std::size_t n_train = num_sentences * 8 / 10;
  std::size_t n_tune = num_sentences / 10;
  for (std::size_t li = 0; li < spec.languages.size(); ++li) {
    LangCorpus c;
    c.name = spec.languages[li].name;
    auto& all = lines[li];
    c.train.assign(all.begin(), all.begin() + n_train);
    c.tune.assign(all.begin() + n_train, all.begin() + n_train + n_tune);
    c.test.assign(all.begin() + n_train + n_tune, all.end());
    fam.corpora.push_back(std::move(c));
  }
  return fam;
}

// Mean normalized longest-common-subsequence similarity over aligned lexeme
// pairs: 1 for identical lexicons, 0 for disjoint alphabets.
inline double measure_lexical_similarity(const std::vector<std::string>& lex_a,
                                         const std::vector<std::string>& lex_b) {
  std::size_t n = std::min(lex_a.size(), lex_b.size());
  if (n == 0) return 1.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::u32string a = utf8_decode(lex_a[i]);
    std::u32string b = utf8_decode(lex_b[i]);
    std::size_t denom = std::max(a.size(), b.size());
    if (denom == 0) {
      sum += 1.0;
      continue;
    }
    std::vector<std::size_t> prev(b.size() + 1, 0), row(b.size() + 1, 0);
    for (std::size_t x = 1; x <= a.size(); ++x) {
      for (std::size_t y = 1; y <= b.size(); ++y)
        row[y] = a[x - 1] == b[y - 1] ? prev[y - 1] + 1
                                      : std::max(prev[y], row[y - 1]);
      std::swap(prev, row);
    }
    sum += static_cast<double>(prev[b.size()]) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(n);
}

}  // namespace pivotsmt
