// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "pivotsmt/errors.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

enum class Scheme { Word, Char, Os, Bpe };

inline Scheme scheme_from_string(const std::string& s) {
  if (s == "word") return Scheme::Word;
  if (s == "char") return Scheme::Char;
  if (s == "os") return Scheme::Os;
  if (s == "bpe") return Scheme::Bpe;
  throw PivotsmtError("unknown segmentation scheme: " + s);
}

inline std::string scheme_to_string(Scheme s) {
  switch (s) {
    case Scheme::Word: return "word";
    case Scheme::Char: return "char";
    case Scheme::Os: return "os";
    case Scheme::Bpe: return "bpe";
  }
  return "?";
}

// Word scheme has no boundary markers; the subword schemes all share the
// marker convention.
inline bool is_subword_scheme(Scheme s) { return s != Scheme::Word; }

inline constexpr const char* kDefaultMarker = "_";

struct SegmentedSentence {
  std::vector<std::string> units;
  Scheme scheme = Scheme::Word;
  std::string marker = kDefaultMarker;
};

// Digits and punctuation are standalone single-codepoint units in every
// scheme.  ASCII '_' is excluded: it is the boundary marker.
inline bool is_standalone_cp(char32_t cp) {
  if (cp < 0x80) {
    if (cp >= '0' && cp <= '9') return true;
    bool alpha = (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    bool graph = cp > 0x20 && cp < 0x7F;
    return graph && !alpha && cp != '_';
  }
  if (cp >= 0x0966 && cp <= 0x096F) return true;  // Devanagari digits
  if (cp == 0x0964 || cp == 0x0965) return true;  // danda, double danda
  return false;
}

struct ScriptProfile {
  std::string name;
  std::unordered_set<char32_t> vowels;
  std::unordered_set<char32_t> consonants;
  std::unordered_set<char32_t> combining_marks;
  std::unordered_set<char32_t> cluster_joiners;
  // Abugida scripts: a bare consonant carries an inherent vowel, so it closes
  // its unit unless a cluster joiner glues it onward or a diacritic follows.
  bool inherent_vowel = false;

  bool is_vowel(char32_t c) const { return vowels.count(c) > 0; }
  bool is_consonant(char32_t c) const { return consonants.count(c) > 0; }
  bool is_combining(char32_t c) const { return combining_marks.count(c) > 0; }
  bool is_joiner(char32_t c) const { return cluster_joiners.count(c) > 0; }

  static ScriptProfile latin() {
    ScriptProfile p;
    p.name = "latin";
    const char* vs = "aeiouAEIOU";
    for (const char* c = vs; *c; ++c) p.vowels.insert(static_cast<char32_t>(*c));
    for (char32_t c = 'a'; c <= 'z'; ++c)
      if (!p.vowels.count(c)) p.consonants.insert(c);
    for (char32_t c = 'A'; c <= 'Z'; ++c)
      if (!p.vowels.count(c)) p.consonants.insert(c);
    return p;
  }

  static ScriptProfile devanagari() {
    ScriptProfile p;
    p.name = "devanagari";
    for (char32_t c = 0x0904; c <= 0x0914; ++c) p.vowels.insert(c);  // independent
    p.vowels.insert(0x0960);
    p.vowels.insert(0x0961);
    for (char32_t c = 0x093E; c <= 0x094C; ++c) p.vowels.insert(c);  // matras
    p.vowels.insert(0x0962);
    p.vowels.insert(0x0963);
    for (char32_t c = 0x0915; c <= 0x0939; ++c) p.consonants.insert(c);
    for (char32_t c = 0x0958; c <= 0x095F; ++c) p.consonants.insert(c);
    p.combining_marks = {0x0901, 0x0902, 0x0903, 0x093C};
    p.cluster_joiners = {0x094D};  // virama
    p.inherent_vowel = true;
    return p;
  }

  std::string to_json() const {
    nlohmann::json j;
    j["name"] = name;
    auto dump = [](const std::unordered_set<char32_t>& set) {
      std::vector<std::string> out;
      std::vector<char32_t> cps(set.begin(), set.end());
      std::sort(cps.begin(), cps.end());
      for (char32_t c : cps) out.push_back(utf8_encode(std::u32string(1, c)));
      return out;
    };
    j["vowels"] = dump(vowels);
    j["consonants"] = dump(consonants);
    j["combining_marks"] = dump(combining_marks);
    j["cluster_joiners"] = dump(cluster_joiners);
    j["inherent_vowel"] = inherent_vowel;
    return j.dump(2);
  }

  static ScriptProfile from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    ScriptProfile p;
    p.name = j.value("name", "custom");
    auto slurp = [&](const char* key, std::unordered_set<char32_t>& set) {
      if (!j.contains(key)) return;
      for (const auto& s : j.at(key)) {
        std::u32string u = utf8_decode(s.get<std::string>());
        if (u.size() != 1)
          throw PivotsmtError(std::string("profile entry in '") + key +
                              "' is not a single codepoint");
        set.insert(u[0]);
      }
    };
    slurp("vowels", p.vowels);
    slurp("consonants", p.consonants);
    slurp("combining_marks", p.combining_marks);
    slurp("cluster_joiners", p.cluster_joiners);
    p.inherent_vowel = j.value("inherent_vowel", false);
    for (char32_t c : p.vowels)
      if (p.consonants.count(c))
        throw PivotsmtError("profile classifies a codepoint as both vowel and consonant");
    return p;
  }

  void save(const std::string& path) const { write_file(path, to_json() + "\n"); }
  static ScriptProfile load(const std::string& path) {
    return from_json(read_file(path));
  }
};

namespace detail {

// Orthographic syllables: maximal C*V+ runs.  A consonant run with no
// following vowel becomes the word-final unit; cluster joiners glue a bare
// consonant into the next unit's onset; combining marks attach in place.
inline void segment_word_os(const std::u32string& word, const ScriptProfile& profile,
                            std::size_t base_pos, std::vector<std::string>& out) {
  std::u32string unit;
  bool in_vowel_run = false;
  auto flush = [&] {
    if (!unit.empty()) {
      out.push_back(utf8_encode(unit));
      unit.clear();
    }
    in_vowel_run = false;
  };
  for (std::size_t i = 0; i < word.size(); ++i) {
    char32_t c = word[i];
    if (profile.is_combining(c) || profile.is_joiner(c)) {
      unit.push_back(c);  // attaches to whatever is open; keeps run state
    } else if (is_standalone_cp(c)) {
      flush();
      out.push_back(utf8_encode(std::u32string(1, c)));
    } else if (profile.is_vowel(c)) {
      unit.push_back(c);
      in_vowel_run = true;
    } else if (profile.is_consonant(c)) {
      if (in_vowel_run) {
        flush();  // vowel run closed; consonant opens the next unit
      } else if (profile.inherent_vowel && !unit.empty() &&
                 !profile.is_joiner(unit.back())) {
        flush();  // bare consonant already carried its inherent vowel
      }
      unit.push_back(c);
    } else {
      throw UnclassifiedCodepoint(c, base_pos + i);
    }
  }
  flush();
}

}  // namespace detail

inline SegmentedSentence segment_os(const std::string& sentence,
                                    const ScriptProfile& profile,
                                    const std::string& marker = kDefaultMarker) {
  SegmentedSentence out;
  out.scheme = Scheme::Os;
  out.marker = marker;
  std::u32string u = utf8_decode(sentence);
  std::size_t i = 0;
  bool first_word = true;
  while (i < u.size()) {
    while (i < u.size() && (u[i] == U' ' || u[i] == U'\t')) ++i;
    std::size_t j = i;
    while (j < u.size() && u[j] != U' ' && u[j] != U'\t') ++j;
    if (j > i) {
      if (!first_word) out.units.push_back(marker);
      detail::segment_word_os(u.substr(i, j - i), profile, i, out.units);
      first_word = false;
    }
    i = j;
  }
  return out;
}

// ------------------------------------------------------------------- BPE

struct BpeModel {
  std::vector<std::pair<std::string, std::string>> merges;
  std::set<std::string> vocab;  // unit inventory of the training corpus

  std::size_t num_merges() const { return merges.size(); }

  void save(const std::string& path) const {
    LineWriter w(path);
    w.write_line("#version pivotsmt-bpe-1");
    for (const auto& [l, r] : merges) w.write_line(l + " " + r);
  }

  static BpeModel load(const std::string& path) {
    BpeModel m;
    LineReader r(path);
    std::string line;
    if (!r.getline(line) || line != "#version pivotsmt-bpe-1")
      throw PivotsmtError("bad BPE model header in " + path);
    while (r.getline(line)) {
      if (line.empty()) continue;
      auto parts = split_ws(line);
      if (parts.size() != 2)
        throw PivotsmtError("bad BPE merge line in " + path + ": " + line);
      m.merges.emplace_back(parts[0], parts[1]);
    }
    return m;
  }
};

namespace detail {

inline std::vector<std::string> word_to_chars(const std::u32string& word) {
  std::vector<std::string> syms;
  syms.reserve(word.size());
  for (char32_t c : word) syms.push_back(utf8_encode(std::u32string(1, c)));
  return syms;
}

// One left-to-right non-overlapping pass of a single merge.
inline void apply_merge(std::vector<std::string>& syms, const std::string& left,
                        const std::string& right) {
  std::size_t w = 0;
  for (std::size_t i = 0; i < syms.size();) {
    if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
      syms[w++] = left + right;
      i += 2;
    } else {
      if (w != i) syms[w] = std::move(syms[i]);
      ++w;
      i += 1;
    }
  }
  syms.resize(w);
}

struct PairHash {
  std::size_t operator()(const std::pair<std::string, std::string>& p) const {
    return fnv1a64(p.first, fnv1a64(p.second));
  }
};

}  // namespace detail

// Replays the merge list in order over a word split to codepoints.
inline std::vector<std::string> apply_bpe_word(const std::u32string& word,
                                               const BpeModel& model) {
  std::vector<std::string> syms = detail::word_to_chars(word);
  for (const auto& [l, r] : model.merges) detail::apply_merge(syms, l, r);
  return syms;
}

// Greedy BPE: each step merges the most frequent adjacent symbol pair within
// words (overlapping occurrences counted), ties broken lexicographically on
// (left, right).  Stops early when no pair occurs at least twice.
inline BpeModel train_bpe(const std::vector<std::string>& corpus,
                          std::size_t num_merges,
                          std::vector<std::size_t>* vocab_size_trace = nullptr) {
  using Pair = std::pair<std::string, std::string>;
  std::map<std::u32string, std::size_t> word_freq;
  for (const auto& line : corpus)
    for (const auto& w : split_ws(line)) word_freq[utf8_decode(w)] += 1;
  if (word_freq.empty()) throw EmptyCorpus();

  std::vector<std::vector<std::string>> words;  // symbol sequences, one per type
  std::vector<std::size_t> freqs;
  for (const auto& [w, f] : word_freq) {
    words.push_back(detail::word_to_chars(w));
    freqs.push_back(f);
  }

  std::unordered_map<Pair, std::size_t, detail::PairHash> counts;
  std::unordered_map<Pair, std::unordered_set<std::size_t>, detail::PairHash> where;
  auto add_word = [&](std::size_t wi, bool add) {
    const auto& syms = words[wi];
    const std::size_t f = freqs[wi];
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      Pair p{syms[i], syms[i + 1]};
      if (add) {
        counts[p] += f;
        where[p].insert(wi);
      } else {
        auto it = counts.find(p);
        if (it != counts.end()) {
          it->second -= std::min(it->second, f);
          if (it->second == 0) {
            counts.erase(it);
            where.erase(p);
          }
        }
      }
    }
  };
  for (std::size_t wi = 0; wi < words.size(); ++wi) add_word(wi, true);

  // Unit-inventory size tracked incrementally: a symbol is in the inventory
  // while it occupies at least one position in some word type.
  std::unordered_map<std::string, long long> sym_occ;
  long long vocab_now = 0;
  auto bump = [&](const std::string& s, long long d) {
    long long& v = sym_occ[s];
    if (v == 0 && d > 0) ++vocab_now;
    v += d;
    if (v == 0 && d < 0) --vocab_now;
  };
  for (const auto& syms : words)
    for (const auto& s : syms) bump(s, 1);

  BpeModel model;
  if (vocab_size_trace) vocab_size_trace->push_back(static_cast<std::size_t>(vocab_now));
  for (std::size_t step = 0; step < num_merges; ++step) {
    const Pair* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& [p, c] : counts) {
      if (c > best_count || (c == best_count && best && p < *best)) {
        best = &p;
        best_count = c;
      }
    }
    if (!best || best_count < 2) break;  // early stop
    Pair chosen = *best;
    model.merges.push_back(chosen);
    auto affected = where[chosen];
    for (std::size_t wi : affected) {
      add_word(wi, false);
      for (const auto& s : words[wi]) bump(s, -1);
      detail::apply_merge(words[wi], chosen.first, chosen.second);
      for (const auto& s : words[wi]) bump(s, 1);
      add_word(wi, true);
    }
    if (vocab_size_trace) vocab_size_trace->push_back(static_cast<std::size_t>(vocab_now));
  }
  for (const auto& syms : words) model.vocab.insert(syms.begin(), syms.end());
  return model;
}

// Picks the merge count whose resulting unit inventory is closest to
// `target_vocab` (earliest on ties), scanning up to `max_merges` steps.
inline BpeModel train_bpe_match_vocab(const std::vector<std::string>& corpus,
                                      std::size_t target_vocab,
                                      std::size_t max_merges = 100000) {
  std::vector<std::size_t> trace;
  BpeModel full = train_bpe(corpus, max_merges, &trace);
  std::size_t best_step = 0;
  std::size_t best_dist = static_cast<std::size_t>(-1);
  for (std::size_t s = 0; s < trace.size(); ++s) {
    std::size_t d = trace[s] > target_vocab ? trace[s] - target_vocab
                                            : target_vocab - trace[s];
    if (d < best_dist) {
      best_dist = d;
      best_step = s;
    }
  }
  if (best_step == full.merges.size()) return full;
  full.merges.resize(best_step);
  // Rebuild the unit inventory for the truncated merge list.
  std::map<std::u32string, bool> word_types;
  for (const auto& line : corpus)
    for (const auto& w : split_ws(line)) word_types[utf8_decode(w)] = true;
  full.vocab.clear();
  for (const auto& [w, _] : word_types) {
    auto syms = apply_bpe_word(w, full);
    full.vocab.insert(syms.begin(), syms.end());
  }
  return full;
}

namespace detail {

inline std::vector<std::u32string> split_words_u32(const std::string& sentence) {
  std::vector<std::u32string> words;
  for (const auto& w : split_ws(sentence)) words.push_back(utf8_decode(w));
  return words;
}

inline void check_no_marker(const std::u32string& word, const std::string& marker) {
  std::u32string m = utf8_decode(marker);
  if (m.size() == 1 && word.find(m[0]) != std::u32string::npos)
    throw PivotsmtError("input word contains the boundary marker '" + marker + "'");
}

}  // namespace detail

inline SegmentedSentence apply_bpe(const std::string& sentence, const BpeModel& model,
                                   const std::string& marker = kDefaultMarker) {
  SegmentedSentence out;
  out.scheme = Scheme::Bpe;
  out.marker = marker;
  bool first = true;
  for (const auto& w : detail::split_words_u32(sentence)) {
    detail::check_no_marker(w, marker);
    if (!first) out.units.push_back(marker);
    auto syms = apply_bpe_word(w, model);
    out.units.insert(out.units.end(), syms.begin(), syms.end());
    first = false;
  }
  return out;
}

inline SegmentedSentence segment(const std::string& sentence, Scheme scheme,
                                 const ScriptProfile* profile = nullptr,
                                 const BpeModel* bpe = nullptr,
                                 const std::string& marker = kDefaultMarker) {
  switch (scheme) {
    case Scheme::Word: {
      SegmentedSentence out;
      out.scheme = Scheme::Word;
      out.marker = marker;
      out.units = split_ws(sentence);
      return out;
    }
    case Scheme::Char: {
      SegmentedSentence out;
      out.scheme = Scheme::Char;
      out.marker = marker;
      bool first = true;
      for (const auto& w : detail::split_words_u32(sentence)) {
        detail::check_no_marker(w, marker);
        if (!first) out.units.push_back(marker);
        for (char32_t c : w) out.units.push_back(utf8_encode(std::u32string(1, c)));
        first = false;
      }
      return out;
    }
    case Scheme::Os:
      if (!profile) throw PivotsmtError("os scheme requires a script profile");
      return segment_os(sentence, *profile, marker);
    case Scheme::Bpe:
      if (!bpe) throw PivotsmtError("bpe scheme requires a model");
      return apply_bpe(sentence, *bpe, marker);
  }
  throw PivotsmtError("unreachable scheme");
}

// Concatenate units within marker-delimited groups; groups joined by single
// spaces.  Empty groups (e.g. a trailing marker) are dropped.
inline std::string desegment_units(const std::vector<std::string>& units,
                                   const std::string& marker = kDefaultMarker) {
  std::string out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      if (!out.empty()) out += ' ';
      out += word;
      word.clear();
    }
  };
  for (const auto& u : units) {
    if (u == marker) flush();
    else word += u;
  }
  flush();
  return out;
}

inline std::string desegment(const SegmentedSentence& s) {
  if (s.scheme == Scheme::Word) return join(s.units, " ");
  return desegment_units(s.units, s.marker);
}

inline std::size_t os_vocab_size(const std::vector<std::string>& corpus,
                                 const ScriptProfile& profile) {
  std::set<std::string> units;
  for (const auto& line : corpus) {
    auto seg = segment_os(line, profile);
    for (const auto& u : seg.units)
      if (u != seg.marker) units.insert(u);
  }
  return units.size();
}

// Segment a corpus; BPE symbol sequences are cached per word type.
inline std::vector<std::vector<std::string>> segment_corpus(
    const std::vector<std::string>& lines, Scheme scheme,
    const ScriptProfile* profile = nullptr, const BpeModel* bpe = nullptr,
    const std::string& marker = kDefaultMarker) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  std::unordered_map<std::string, std::vector<std::string>> bpe_cache;
  for (const auto& line : lines) {
    if (scheme == Scheme::Bpe) {
      if (!bpe) throw PivotsmtError("bpe scheme requires a model");
      std::vector<std::string> units;
      bool first = true;
      for (const auto& w : split_ws(line)) {
        if (!first) units.push_back(marker);
        auto it = bpe_cache.find(w);
        if (it == bpe_cache.end()) {
          std::u32string u = utf8_decode(w);
          detail::check_no_marker(u, marker);
          it = bpe_cache.emplace(w, apply_bpe_word(u, *bpe)).first;
        }
        units.insert(units.end(), it->second.begin(), it->second.end());
        first = false;
      }
      out.push_back(std::move(units));
    } else {
      out.push_back(segment(line, scheme, profile, bpe, marker).units);
    }
  }
  return out;
}

}  // namespace pivotsmt
