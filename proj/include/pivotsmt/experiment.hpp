// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "pivotsmt/align.hpp"
#include "pivotsmt/decoder.hpp"
#include "pivotsmt/errors.hpp"
#include "pivotsmt/evalmetrics.hpp"
#include "pivotsmt/ngramlm.hpp"
#include "pivotsmt/phrasetab.hpp"
#include "pivotsmt/pivot.hpp"
#include "pivotsmt/synthlang.hpp"
#include "pivotsmt/textseg.hpp"
#include "pivotsmt/util.hpp"

namespace pivotsmt {

// ---------------------------------------------------------------------------
// Experiment configuration. A run is fully described by one JSON document:
// the language triple(s), segmentation schemes, pivoting methods, corpus
// source (inline synthetic-family spec or per-language files) and all model
// hyperparameters. The same config and seed always produce byte-identical
// reports.

struct ExperimentConfig {
  std::string schema = "pivotsmt-exp-1";
  std::uint64_t seed = 1;
  std::string out_dir;

  std::string source;
  std::string target;
  std::vector<std::string> pivots;
  std::vector<std::string> schemes = {"word", "bpe"};
  std::vector<std::string> methods = {"triangulate"};

  // Corpus source: either an inline synthetic-family spec (synth_spec
  // non-null) or per-language {train,tune,test} files.  When synthesizing,
  // the experiment seed overrides any seed inside the spec.
  nlohmann::json synth_spec;
  std::size_t synth_sentences = 6250;
  std::map<std::string, std::map<std::string, std::string>> corpus_files;

  std::size_t bpe_merges = 200;
  int lm_order_word = 5;
  int lm_order_subword = 10;
  std::size_t pop_limit = 1000;
  std::size_t k = 20;  // hypotheses carried through pipelining
  int align_iters = 5;
  int max_phrase_len = 7;
  bool tune = false;
  int tune_iterations = 3;
  bool multi_pivot = true;        // add the all-pivots combination system
  bool with_direct_combo = true;  // add the direct+all-pivots system
  std::size_t resamples = 300;    // bootstrap resamples for significance

  // Source, pivots, target in first-mention order, deduplicated.
  std::vector<std::string> languages() const {
    std::vector<std::string> out;
    auto add = [&](const std::string& l) {
      if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
    };
    add(source);
    for (auto& p : pivots) add(p);
    add(target);
    return out;
  }

  void validate() const {
    if (schema != "pivotsmt-exp-1")
      throw SpecError("unsupported experiment schema '" + schema + "'");
    if (out_dir.empty()) throw SpecError("out_dir must not be empty");
    if (source.empty() || target.empty())
      throw SpecError("source and target languages are required");
    if (source == target) throw SpecError("source and target must differ");
    for (auto& p : pivots)
      if (p == source || p == target)
        throw SpecError("pivot '" + p + "' duplicates source or target");
    if (schemes.empty()) throw SpecError("at least one scheme is required");
    for (auto& s : schemes) scheme_from_string(s);  // throws on bad names
    if (methods.empty()) throw SpecError("at least one method is required");
    for (auto& m : methods)
      if (m != "triangulate" && m != "pipeline")
        throw SpecError("unknown method '" + m + "'");
    if (synth_spec.is_null() && corpus_files.empty())
      throw SpecError("no corpus source: provide synth or corpus_files");
    if (!synth_spec.is_null() && !corpus_files.empty())
      throw SpecError("provide either synth or corpus_files, not both");
    if (!corpus_files.empty()) {
      for (auto& lang : languages()) {
        auto it = corpus_files.find(lang);
        if (it == corpus_files.end())
          throw SpecError("corpus_files missing language '" + lang + "'");
        for (const char* split : {"train", "tune", "test"})
          if (!it->second.count(split))
            throw SpecError("corpus_files[" + lang + "] missing '" + split +
                            "'");
      }
    }
    if (!synth_spec.is_null() && synth_sentences == 0)
      throw SpecError("synth_sentences must be positive");
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["schema"] = schema;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["source"] = source;
    j["target"] = target;
    j["pivots"] = pivots;
    j["schemes"] = schemes;
    j["methods"] = methods;
    if (!synth_spec.is_null()) {
      j["synth"] = synth_spec;
      j["synth_sentences"] = synth_sentences;
    }
    if (!corpus_files.empty()) j["corpus_files"] = corpus_files;
    j["bpe_merges"] = bpe_merges;
    j["lm_order_word"] = lm_order_word;
    j["lm_order_subword"] = lm_order_subword;
    j["pop_limit"] = pop_limit;
    j["k"] = k;
    j["align_iters"] = align_iters;
    j["max_phrase_len"] = max_phrase_len;
    j["tune"] = tune;
    j["tune_iterations"] = tune_iterations;
    j["multi_pivot"] = multi_pivot;
    j["with_direct_combo"] = with_direct_combo;
    j["resamples"] = resamples;
    return j;
  }

  static ExperimentConfig from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    c.schema = j.value("schema", std::string());
    c.seed = j.value("seed", std::uint64_t{1});
    c.out_dir = j.value("out_dir", std::string());
    c.source = j.value("source", std::string());
    c.target = j.value("target", std::string());
    c.pivots = j.value("pivots", std::vector<std::string>{});
    c.schemes = j.value("schemes", c.schemes);
    c.methods = j.value("methods", c.methods);
    if (j.contains("synth")) c.synth_spec = j.at("synth");
    c.synth_sentences = j.value("synth_sentences", c.synth_sentences);
    if (j.contains("corpus_files"))
      c.corpus_files =
          j.at("corpus_files")
              .get<std::map<std::string, std::map<std::string, std::string>>>();
    c.bpe_merges = j.value("bpe_merges", c.bpe_merges);
    c.lm_order_word = j.value("lm_order_word", c.lm_order_word);
    c.lm_order_subword = j.value("lm_order_subword", c.lm_order_subword);
    c.pop_limit = j.value("pop_limit", c.pop_limit);
    c.k = j.value("k", c.k);
    c.align_iters = j.value("align_iters", c.align_iters);
    c.max_phrase_len = j.value("max_phrase_len", c.max_phrase_len);
    c.tune = j.value("tune", c.tune);
    c.tune_iterations = j.value("tune_iterations", c.tune_iterations);
    c.multi_pivot = j.value("multi_pivot", c.multi_pivot);
    c.with_direct_combo = j.value("with_direct_combo", c.with_direct_combo);
    c.resamples = j.value("resamples", c.resamples);
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    auto c = from_json(nlohmann::json::parse(read_file(path)));
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------------------
// A ready-made five-language synthetic family: one conservative language and
// four relatives derived by short sound-change chains, sharing 80% cognates.

inline SynthLangSpec default_family_spec(std::uint64_t seed) {
  SynthLangSpec spec;
  spec.seed = seed;
  spec.proto_vocab_size = 700;
  spec.consonants = {"k", "g", "t", "d", "p", "b", "s", "z", "m", "n", "r", "l"};
  spec.vowels = {"a", "i", "u", "e", "o"};
  spec.cognate_rate = 0.8;
  spec.word_order = "sov";

  SynthLanguage alpha;
  alpha.name = "alpha";
  alpha.function_words = {"ka", "ni", "wo", "ga", "de", "mo"};

  SynthLanguage beta;
  beta.name = "beta";
  beta.rules = {{"sub", "k", "g"}, {"vowel_shift", "o", "u"}};
  beta.function_words = {"ga", "ni", "wu", "ga", "de", "mu"};

  SynthLanguage gamma;
  gamma.name = "gamma";
  gamma.rules = {{"sub", "t", "d"}, {"vowel_shift", "ai", "ei"}};
  gamma.function_words = {"ke", "ni", "wo", "ge", "de", "mo"};

  SynthLanguage delta;
  delta.name = "delta";
  delta.rules = {{"sub", "p", "b"}, {"sub", "s", "z"}};
  delta.function_words = {"ka", "ni", "wo", "ga", "ze", "mo"};

  SynthLanguage epsilon;
  epsilon.name = "epsilon";
  epsilon.rules = {{"sub", "r", "l"}, {"vowel_shift", "u", "o"}};
  epsilon.function_words = {"ka", "ni", "wo", "ga", "de", "mo"};

  spec.languages = {alpha, beta, gamma, delta, epsilon};
  return spec;
}

// ---------------------------------------------------------------------------
// In-memory pipeline building blocks. These work on corpora held in memory
// so callers (the experiment driver, tests, sweeps) can share intermediate
// results without round-tripping through files.

// Per-language raw word-level lines for the three splits.
struct RawSplits {
  std::vector<std::string> train, tune, test;
};
using RawCorpora = std::map<std::string, RawSplits>;

inline RawCorpora family_splits(const SynthFamily& fam) {
  RawCorpora out;
  for (auto& c : fam.corpora) out[c.name] = RawSplits{c.train, c.tune, c.test};
  return out;
}

// All corpora segmented under one scheme: per-language unit sequences for
// train/tune/test, plus the subword models needed to reproduce them.
struct SchemeData {
  Scheme scheme = Scheme::Word;
  std::string marker = kDefaultMarker;
  std::map<std::string, BpeModel> bpe;  // per language, bpe scheme only
  // units[lang] = {train, tune, test}
  std::map<std::string, std::array<std::vector<std::vector<std::string>>, 3>>
      units;
};

inline SchemeData prepare_scheme(const RawCorpora& raw, Scheme scheme,
                                 std::size_t bpe_merges,
                                 const ScriptProfile* profile = nullptr,
                                 const std::string& marker = kDefaultMarker) {
  SchemeData sd;
  sd.scheme = scheme;
  sd.marker = marker;
  ScriptProfile latin = ScriptProfile::latin();
  const ScriptProfile* prof = profile ? profile : &latin;
  for (auto& [lang, splits] : raw) {
    const BpeModel* bm = nullptr;
    if (scheme == Scheme::Bpe) {
      sd.bpe[lang] = train_bpe(splits.train, bpe_merges);
      bm = &sd.bpe.at(lang);
    }
    sd.units[lang] = {
        segment_corpus(splits.train, scheme, prof, bm, marker),
        segment_corpus(splits.tune, scheme, prof, bm, marker),
        segment_corpus(splits.test, scheme, prof, bm, marker)};
  }
  return sd;
}

// Word aligner + phrase extractor + scorer for one language pair, trained on
// the train split: IBM-1 in both directions, intersection-growing
// symmetrization, then relative-frequency and lexical-weight scoring.
inline PhraseTable train_pair_table(const SchemeData& sd,
                                    const std::string& src_lang,
                                    const std::string& tgt_lang,
                                    int align_iters, int max_phrase_len,
                                    double prune_floor = 1e-7) {
  Bitext bt = make_bitext(sd.units.at(src_lang)[0], sd.units.at(tgt_lang)[0]);
  TranslationTable fwd = train_model1(bt, align_iters);
  Bitext rev_bt;
  rev_bt.reserve(bt.size());
  for (auto& [s, t] : bt) rev_bt.push_back({t, s});
  TranslationTable rev = train_model1(rev_bt, align_iters);
  auto fwd_al = viterbi_align(bt, fwd);
  auto rev_al = viterbi_align(rev_bt, rev);
  std::vector<AlignmentMatrix> sym;
  sym.reserve(bt.size());
  for (std::size_t i = 0; i < bt.size(); ++i)
    sym.push_back(symmetrize_gdfa(fwd_al[i], transpose(rev_al[i])));
  PhraseCollector coll;
  coll.add_corpus(bt, sym, max_phrase_len);
  PhraseTable table = score_phrases(coll, fwd, rev, prune_floor);
  table.scheme = scheme_to_string(sd.scheme);
  table.source_lang = src_lang;
  table.target_lang = tgt_lang;
  return table;
}

inline NgramLm train_lm_for(const SchemeData& sd, const std::string& lang,
                            int order_word, int order_subword) {
  int order = is_subword_scheme(sd.scheme) ? order_subword : order_word;
  return train_ngram_lm(sd.units.at(lang)[0], order);
}

// 1-best decode of a segmented corpus, desegmented back to word-level lines.
inline std::vector<std::string> decode_corpus_words(
    const std::vector<std::vector<std::string>>& src_units,
    const PhraseTable& table, const NgramLm& lm, const FeatureWeights& w,
    const SchemeData& sd, std::size_t pop_limit) {
  DecoderConfig cfg{pop_limit, 1};
  std::vector<std::string> out;
  out.reserve(src_units.size());
  for (auto& src : src_units) {
    auto nb = decode(src, table, lm, w, cfg);
    out.push_back(desegment_for_eval(nb.front().units, sd.scheme, sd.marker));
  }
  return out;
}

// 1-best pivot pipelining of a segmented corpus, desegmented to word lines.
inline std::vector<std::string> pipeline_corpus_words(
    const std::vector<std::vector<std::string>>& src_units,
    const PhraseTable& sp, const NgramLm& pivot_lm, const FeatureWeights& sp_w,
    const PhraseTable& pt, const NgramLm& tgt_lm, const FeatureWeights& pt_w,
    const SchemeData& sd, const PipelineOptions& popts) {
  std::vector<std::string> out;
  out.reserve(src_units.size());
  for (auto& src : src_units) {
    auto nb = pipeline_translate(src, sp, pivot_lm, sp_w, pt, tgt_lm, pt_w,
                                 popts);
    out.push_back(nb.empty() ? std::string()
                             : desegment_for_eval(nb.front().units, sd.scheme,
                                                  sd.marker));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment driver: staged, file-backed, resumable.

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  LineReader in(path);
  std::vector<std::string> out;
  std::string line;
  while (in.getline(line)) out.push_back(line);
  return out;
}

inline void write_lines(const std::string& path,
                        const std::vector<std::string>& lines) {
  LineWriter out(path);
  for (auto& l : lines) out.write_line(l);
}

inline std::string hex_u64(std::uint64_t x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline std::string hash_hex(const std::string& s) { return hex_u64(fnv1a64(s)); }

inline std::string fmt_f4(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

// Runs each stage at most once per (config, inputs): a stamp file records
// the config hash plus an input fingerprint, and the stage body is skipped
// when the stamp matches and every declared output already exists.
class StageRunner {
 public:
  StageRunner(std::string out_dir, std::string config_hash)
      : dir_(std::move(out_dir)), cfg_hash_(std::move(config_hash)) {}

  bool run(const std::string& name, const std::string& input_hash,
           const std::vector<std::string>& outputs,
           const std::function<void()>& body) {
    namespace fs = std::filesystem;
    const std::string stamp_path = dir_ + "/stamps/" + name + ".stamp";
    const std::string want = cfg_hash_ + "\n" + input_hash + "\n";
    bool fresh = fs::exists(stamp_path) && read_file(stamp_path) == want;
    if (fresh)
      for (auto& o : outputs)
        if (!fs::exists(o)) {
          fresh = false;
          break;
        }
    if (fresh) return false;
    try {
      body();
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError(name, e.what());
    }
    write_file(stamp_path, want);
    return true;
  }

 private:
  std::string dir_, cfg_hash_;
};

}  // namespace detail

// One scored system in the run report.
struct SystemScore {
  std::string scheme;
  std::string system;  // "direct", "tri.<pivot>", "tri.all", ...
  double bleu = 0.0;
  double lebleu = 0.0;
  std::size_t table_entries = 0;
  double size_ratio = 0.0;  // triangulated tables: |composed| / max component
  bool has_ratio = false;
  double p_value = 1.0;  // paired bootstrap vs the direct system
  bool has_p = false;
  bool significant = false;  // p < 0.05
};

struct ExperimentResult {
  std::vector<SystemScore> scores;
  std::string report_text;                      // report.txt content
  std::vector<std::string> report_kv;           // report.kv lines
};

// Runs the full experiment described by cfg into cfg.out_dir, writing every
// intermediate artifact (corpora, segmentations, tables, language models,
// hypotheses) plus report.txt / report.kv. Stages are skipped when their
// stamp matches the current config and inputs, so reruns are incremental;
// identical configs produce byte-identical reports.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  cfg.validate();
  const std::string& dir = cfg.out_dir;
  fs::create_directories(dir + "/stamps");
  fs::create_directories(dir + "/corpora");

  nlohmann::json cfg_json = cfg.to_json();
  const std::string cfg_dump = cfg_json.dump(2) + "\n";
  write_file(dir + "/config.json", cfg_dump);
  detail::StageRunner stages(dir, detail::hash_hex(cfg_dump));

  const auto langs = cfg.languages();
  const bool do_tri =
      std::find(cfg.methods.begin(), cfg.methods.end(), "triangulate") !=
      cfg.methods.end();
  const bool do_pipe =
      std::find(cfg.methods.begin(), cfg.methods.end(), "pipeline") !=
      cfg.methods.end();

  ExperimentResult result;
  std::string failed_stage, failed_msg;
  std::exception_ptr failure;

  auto corpus_path = [&](const std::string& lang, const char* split) {
    return dir + "/corpora/" + lang + "." + split + ".txt";
  };

  try {
    // --- corpora -----------------------------------------------------------
    {
      std::string in_hash;
      std::vector<std::string> outs;
      for (auto& l : langs)
        for (const char* sp : {"train", "tune", "test"})
          outs.push_back(corpus_path(l, sp));
      if (!cfg.corpus_files.empty()) {
        try {
          for (auto& l : langs)
            for (const char* sp : {"train", "tune", "test"})
              in_hash +=
                  detail::hex_u64(file_hash(cfg.corpus_files.at(l).at(sp)));
        } catch (const std::exception& e) {
          throw StageError("corpora", e.what());
        }
      }
      stages.run("corpora", in_hash, outs, [&] {
        if (!cfg.synth_spec.is_null()) {
          SynthLangSpec spec = SynthLangSpec::from_json(cfg.synth_spec);
          spec.seed = cfg.seed;
          SynthFamily fam = generate_family(spec, cfg.synth_sentences);
          for (auto& c : fam.corpora) {
            if (std::find(langs.begin(), langs.end(), c.name) == langs.end())
              continue;
            detail::write_lines(corpus_path(c.name, "train"), c.train);
            detail::write_lines(corpus_path(c.name, "tune"), c.tune);
            detail::write_lines(corpus_path(c.name, "test"), c.test);
          }
          for (auto& l : langs)
            if (!fs::exists(corpus_path(l, "train")))
              throw SpecError("language '" + l + "' not in the family spec");
        } else {
          for (auto& l : langs) {
            detail::write_lines(
                corpus_path(l, "train"),
                detail::read_lines(cfg.corpus_files.at(l).at("train")));
            detail::write_lines(
                corpus_path(l, "tune"),
                detail::read_lines(cfg.corpus_files.at(l).at("tune")));
            detail::write_lines(
                corpus_path(l, "test"),
                detail::read_lines(cfg.corpus_files.at(l).at("test")));
          }
        }
      });
    }
    RawCorpora raw;
    for (auto& l : langs)
      raw[l] = RawSplits{detail::read_lines(corpus_path(l, "train")),
                         detail::read_lines(corpus_path(l, "tune")),
                         detail::read_lines(corpus_path(l, "test"))};
    std::string corpora_hash;
    for (auto& l : langs)
      for (const char* sp : {"train", "tune", "test"})
        corpora_hash +=
            detail::hex_u64(file_hash(corpus_path(l, sp)));

    const std::vector<std::string> ref_test = raw.at(cfg.target).test;
    const std::vector<std::string> ref_tune = raw.at(cfg.target).tune;

    // --- per scheme --------------------------------------------------------
    for (const auto& scheme_name : cfg.schemes) {
      const Scheme scheme = scheme_from_string(scheme_name);
      const std::string sdir = dir + "/seg/" + scheme_name;
      const std::string tdir = dir + "/tables/" + scheme_name;
      const std::string ldir = dir + "/lm/" + scheme_name;
      const std::string ddir = dir + "/decode/" + scheme_name;
      fs::create_directories(sdir);
      fs::create_directories(tdir);
      fs::create_directories(ldir);
      fs::create_directories(ddir);

      auto seg_path = [&](const std::string& lang, const char* split) {
        return sdir + "/" + lang + "." + split + ".txt";
      };
      auto bpe_path = [&](const std::string& lang) {
        return sdir + "/" + lang + ".bpe";
      };

      // segmentation
      {
        std::vector<std::string> outs;
        for (auto& l : langs) {
          for (const char* sp : {"train", "tune", "test"})
            outs.push_back(seg_path(l, sp));
          if (scheme == Scheme::Bpe) outs.push_back(bpe_path(l));
        }
        stages.run("seg." + scheme_name, corpora_hash, outs, [&] {
          SchemeData sd = prepare_scheme(raw, scheme, cfg.bpe_merges);
          for (auto& l : langs) {
            const auto& u = sd.units.at(l);
            for (int i = 0; i < 3; ++i) {
              std::vector<std::string> lines;
              lines.reserve(u[i].size());
              for (auto& units : u[i]) lines.push_back(join(units, " "));
              detail::write_lines(
                  seg_path(l, i == 0 ? "train" : i == 1 ? "tune" : "test"),
                  lines);
            }
            if (scheme == Scheme::Bpe) sd.bpe.at(l).save(bpe_path(l));
          }
        });
      }
      SchemeData sd;
      sd.scheme = scheme;
      sd.marker = kDefaultMarker;
      for (auto& l : langs) {
        std::array<std::vector<std::vector<std::string>>, 3> u;
        int i = 0;
        for (const char* sp : {"train", "tune", "test"}) {
          for (auto& line : detail::read_lines(seg_path(l, sp)))
            u[i].push_back(split_ws(line));
          ++i;
        }
        sd.units[l] = std::move(u);
        if (scheme == Scheme::Bpe) sd.bpe[l] = BpeModel::load(bpe_path(l));
      }
      std::string seg_hash;
      for (auto& l : langs)
        for (const char* sp : {"train", "tune", "test"})
          seg_hash +=
              detail::hex_u64(file_hash(seg_path(l, sp)));

      // pair phrase tables
      std::vector<std::pair<std::string, std::string>> pairs;
      pairs.push_back({cfg.source, cfg.target});
      for (auto& p : cfg.pivots) {
        pairs.push_back({cfg.source, p});
        pairs.push_back({p, cfg.target});
      }
      std::sort(pairs.begin(), pairs.end());
      pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
      auto pair_path = [&](const std::string& a, const std::string& b) {
        return tdir + "/" + a + "--" + b + ".table";
      };
      {
        std::vector<std::string> outs;
        for (auto& [a, b] : pairs) outs.push_back(pair_path(a, b));
        stages.run("tables." + scheme_name, seg_hash, outs, [&] {
          for (auto& [a, b] : pairs)
            train_pair_table(sd, a, b, cfg.align_iters, cfg.max_phrase_len)
                .save(pair_path(a, b));
        });
      }
      std::map<std::string, PhraseTable> pair_tables;
      for (auto& [a, b] : pairs)
        pair_tables[a + "--" + b] = PhraseTable::load(pair_path(a, b));

      // language models
      std::vector<std::string> lm_langs = {cfg.target};
      if (do_pipe)
        for (auto& p : cfg.pivots) lm_langs.push_back(p);
      auto lm_path = [&](const std::string& lang) {
        return ldir + "/" + lang + ".arpa";
      };
      {
        std::vector<std::string> outs;
        for (auto& l : lm_langs) outs.push_back(lm_path(l));
        stages.run("lm." + scheme_name, seg_hash, outs, [&] {
          for (auto& l : lm_langs)
            train_lm_for(sd, l, cfg.lm_order_word, cfg.lm_order_subword)
                .save_arpa(lm_path(l));
        });
      }
      std::map<std::string, NgramLm> lms;
      for (auto& l : lm_langs) lms[l] = NgramLm::load_arpa(lm_path(l));

      // triangulated tables
      auto tri_path = [&](const std::string& name) {
        return tdir + "/tri." + name + ".table";
      };
      const bool combine_all = cfg.multi_pivot && cfg.pivots.size() >= 2;
      if (do_tri && !cfg.pivots.empty()) {
        std::string tri_hash;
        for (auto& [a, b] : pairs)
          tri_hash +=
              detail::hex_u64(file_hash(pair_path(a, b)));
        std::vector<std::string> outs;
        for (auto& p : cfg.pivots) outs.push_back(tri_path(p));
        if (combine_all) {
          outs.push_back(tri_path("all"));
          if (cfg.with_direct_combo) outs.push_back(tri_path("all+direct"));
        }
        stages.run("triangulate." + scheme_name, tri_hash, outs, [&] {
          std::vector<PhraseTable> tris;
          for (auto& p : cfg.pivots) {
            PhraseTable tri =
                triangulate(pair_tables.at(cfg.source + "--" + p),
                            pair_tables.at(p + "--" + cfg.target));
            tri.save(tri_path(p));
            tris.push_back(std::move(tri));
          }
          if (combine_all) {
            combine_multi_pivot(tris).save(tri_path("all"));
            if (cfg.with_direct_combo)
              combine_multi_pivot(
                  tris, &pair_tables.at(cfg.source + "--" + cfg.target))
                  .save(tri_path("all+direct"));
          }
        });
      }

      // the systems to decode and score, in report order
      struct System {
        std::string name;
        std::string table_key;  // pair_tables/tri tables lookup, "" = pipeline
        std::string pivot;      // pipeline systems only
      };
      std::vector<System> systems;
      systems.push_back({"direct", cfg.source + "--" + cfg.target, ""});
      if (do_tri)
        for (auto& p : cfg.pivots) systems.push_back({"tri." + p, "tri:" + p, ""});
      if (do_tri && combine_all) {
        systems.push_back({"tri.all", "tri:all", ""});
        if (cfg.with_direct_combo)
          systems.push_back({"tri.all+direct", "tri:all+direct", ""});
      }
      if (do_pipe)
        for (auto& p : cfg.pivots) systems.push_back({"pip." + p, "", p});

      std::map<std::string, PhraseTable> tri_tables;
      if (do_tri && !cfg.pivots.empty()) {
        for (auto& p : cfg.pivots)
          tri_tables[p] = PhraseTable::load(tri_path(p));
        if (combine_all) {
          tri_tables["all"] = PhraseTable::load(tri_path("all"));
          if (cfg.with_direct_combo)
            tri_tables["all+direct"] = PhraseTable::load(tri_path("all+direct"));
        }
      }
      auto table_for = [&](const System& s) -> const PhraseTable& {
        if (s.table_key.rfind("tri:", 0) == 0)
          return tri_tables.at(s.table_key.substr(4));
        return pair_tables.at(s.table_key);
      };

      // decode (optionally tuning first), one hypothesis file per system
      const auto& src_test = sd.units.at(cfg.source)[2];
      const auto& src_tune = sd.units.at(cfg.source)[1];
      for (auto& sys : systems) {
        const std::string hyp_path = ddir + "/" + sys.name + ".hyp";
        const std::string wts_path = ddir + "/" + sys.name + ".weights";
        std::string in_hash = seg_hash;
        if (!sys.table_key.empty()) {
          const std::string tp = sys.table_key.rfind("tri:", 0) == 0
                                     ? tri_path(sys.table_key.substr(4))
                                     : pair_path(cfg.source, cfg.target);
          in_hash += detail::hex_u64(file_hash(tp));
          in_hash += detail::hex_u64(file_hash(lm_path(cfg.target)));
        } else {
          in_hash +=
              detail::hex_u64(file_hash(pair_path(cfg.source, sys.pivot)));
          in_hash +=
              detail::hex_u64(file_hash(pair_path(sys.pivot, cfg.target)));
          in_hash += detail::hex_u64(file_hash(lm_path(sys.pivot)));
          in_hash += detail::hex_u64(file_hash(lm_path(cfg.target)));
        }
        std::vector<std::string> outs = {hyp_path};
        const bool tuned = cfg.tune && !sys.table_key.empty();
        if (tuned) outs.push_back(wts_path);
        stages.run("decode." + scheme_name + "." + sys.name, in_hash, outs,
                   [&] {
                     FeatureWeights w;
                     if (sys.table_key.empty()) {
                       PipelineOptions po;
                       po.k = cfg.k;
                       po.pop_limit = cfg.pop_limit;
                       po.nbest = 1;
                       detail::write_lines(
                           hyp_path,
                           pipeline_corpus_words(
                               src_test,
                               pair_tables.at(cfg.source + "--" + sys.pivot),
                               lms.at(sys.pivot), w,
                               pair_tables.at(sys.pivot + "--" + cfg.target),
                               lms.at(cfg.target), w, sd, po));
                       return;
                     }
                     const PhraseTable& table = table_for(sys);
                     if (tuned) {
                       TuneOptions topt;
                       topt.iterations = cfg.tune_iterations;
                       topt.pop_limit = cfg.pop_limit;
                       topt.scheme = sd.scheme;
                       topt.marker = sd.marker;
                       TuneResult tr =
                           tune_weights(src_tune, ref_tune, table,
                                        lms.at(cfg.target), w, topt);
                       w = tr.weights;
                       save_weights(w, wts_path);
                     }
                     detail::write_lines(
                         hyp_path,
                         decode_corpus_words(src_test, table,
                                             lms.at(cfg.target), w, sd,
                                             cfg.pop_limit));
                   });
      }

      // evaluation (recomputed every run; cheap and deterministic)
      std::vector<std::string> direct_hyp =
          detail::read_lines(ddir + "/direct.hyp");
      for (auto& sys : systems) {
        std::vector<std::string> hyp =
            detail::read_lines(ddir + "/" + sys.name + ".hyp");
        SystemScore sc;
        sc.scheme = scheme_name;
        sc.system = sys.name;
        sc.bleu = bleu(hyp, ref_test);
        sc.lebleu = lebleu(hyp, ref_test);
        if (!sys.table_key.empty()) sc.table_entries = table_for(sys).size();
        if (sys.table_key.rfind("tri:", 0) == 0) {
          const std::string key = sys.table_key.substr(4);
          if (key != "all" && key != "all+direct") {
            sc.size_ratio = table_size_ratio(
                tri_tables.at(key),
                pair_tables.at(cfg.source + "--" + key),
                pair_tables.at(key + "--" + cfg.target));
            sc.has_ratio = true;
          }
        }
        if (sys.name != "direct" && cfg.resamples > 0) {
          auto rep = bootstrap_significance(hyp, direct_hyp, ref_test,
                                            cfg.resamples, cfg.seed);
          sc.p_value = rep.p_value;
          sc.has_p = true;
          sc.significant = rep.p_value < 0.05;
        }
        result.scores.push_back(sc);
      }
    }
  } catch (const StageError& e) {
    failed_stage = e.stage;
    failed_msg = e.what();
    failure = std::current_exception();
  }

  // --- report --------------------------------------------------------------
  std::string rep;
  std::vector<std::string>& kv = result.report_kv;
  rep += "pivot translation experiment\n";
  rep += "schema " + cfg.schema + "  seed " + std::to_string(cfg.seed) + "\n";
  rep += "source " + cfg.source + "  target " + cfg.target + "  pivots " +
         join(cfg.pivots, ",") + "\n";
  rep += "schemes " + join(cfg.schemes, ",") + "  methods " +
         join(cfg.methods, ",") + "\n";
  kv.push_back("config.schema\t" + cfg.schema);
  kv.push_back("config.seed\t" + std::to_string(cfg.seed));

  for (const auto& scheme_name : cfg.schemes) {
    std::vector<const SystemScore*> rows;
    for (auto& sc : result.scores)
      if (sc.scheme == scheme_name) rows.push_back(&sc);
    if (rows.empty()) continue;
    rep += "\n== scheme " + scheme_name + " ==\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-18s %9s %9s %9s %8s %12s\n",
                  "system", "BLEU", "LeBLEU", "entries", "ratio",
                  "p_vs_direct");
    rep += line;
    const SystemScore* direct = nullptr;
    const SystemScore* best_tri = nullptr;
    const SystemScore* all_tri = nullptr;
    const SystemScore* all_direct = nullptr;
    double ratio_sum = 0.0;
    int ratio_n = 0;
    for (auto* sc : rows) {
      std::string mark = sc->significant ? "*" : "";
      std::snprintf(line, sizeof(line), "%-18s %9s %9s %9zu %8s %12s\n",
                    (sc->system + mark).c_str(),
                    detail::fmt_f4(sc->bleu).c_str(),
                    detail::fmt_f4(sc->lebleu).c_str(), sc->table_entries,
                    sc->has_ratio ? detail::fmt_f4(sc->size_ratio).c_str()
                                  : "-",
                    sc->has_p ? detail::fmt_f4(sc->p_value).c_str() : "-");
      rep += line;
      const std::string base = scheme_name + "." + sc->system;
      kv.push_back(base + ".bleu\t" + detail::fmt_f4(sc->bleu));
      kv.push_back(base + ".lebleu\t" + detail::fmt_f4(sc->lebleu));
      if (!sc->system.empty() && sc->system.rfind("pip.", 0) != 0)
        kv.push_back(base + ".entries\t" + std::to_string(sc->table_entries));
      if (sc->has_ratio) {
        kv.push_back(base + ".ratio\t" + detail::fmt_f4(sc->size_ratio));
        ratio_sum += sc->size_ratio;
        ++ratio_n;
      }
      if (sc->has_p) {
        kv.push_back(base + ".p_vs_direct\t" + detail::fmt_f4(sc->p_value));
        kv.push_back(base + ".significant\t" +
                     std::string(sc->significant ? "1" : "0"));
      }
      if (sc->system == "direct") direct = sc;
      if (sc->system.rfind("tri.", 0) == 0 && sc->system != "tri.all" &&
          sc->system != "tri.all+direct" &&
          (!best_tri || sc->bleu > best_tri->bleu))
        best_tri = sc;
      if (sc->system == "tri.all") all_tri = sc;
      if (sc->system == "tri.all+direct") all_direct = sc;
    }
    rep += "summary:";
    if (best_tri) {
      rep += " best pivot " + best_tri->system + " " +
             detail::fmt_f4(best_tri->bleu) + " |";
      kv.push_back(scheme_name + ".summary.best_pivot\t" + best_tri->system);
      kv.push_back(scheme_name + ".summary.best_pivot_bleu\t" +
                   detail::fmt_f4(best_tri->bleu));
    }
    if (all_tri) {
      rep += " all pivots " + detail::fmt_f4(all_tri->bleu) + " |";
      kv.push_back(scheme_name + ".summary.all_pivots_bleu\t" +
                   detail::fmt_f4(all_tri->bleu));
    }
    if (direct) {
      rep += " direct " + detail::fmt_f4(direct->bleu);
      kv.push_back(scheme_name + ".summary.direct_bleu\t" +
                   detail::fmt_f4(direct->bleu));
    }
    if (all_direct) {
      rep += " | direct+all pivots " + detail::fmt_f4(all_direct->bleu);
      kv.push_back(scheme_name + ".summary.direct_all_pivots_bleu\t" +
                   detail::fmt_f4(all_direct->bleu));
    }
    rep += "\n";
    if (ratio_n > 0) {
      rep += "mean triangulated size ratio " +
             detail::fmt_f4(ratio_sum / ratio_n) + "\n";
      kv.push_back(scheme_name + ".summary.mean_tri_ratio\t" +
                   detail::fmt_f4(ratio_sum / ratio_n));
    }
  }
  rep += "\n";
  if (failed_stage.empty()) {
    rep += "status ok\n";
    kv.push_back("status\tok");
  } else {
    rep += "status failed: " + failed_msg + "\n";
    kv.push_back("status\tfailed:" + failed_stage);
  }
  if (!result.scores.empty())
    rep += "* marks BLEU significantly different from direct (paired "
           "bootstrap, p < 0.05, " +
           std::to_string(cfg.resamples) + " resamples)\n";

  result.report_text = rep;
  write_file(dir + "/report.txt", rep);
  detail::write_lines(dir + "/report.kv", kv);
  if (failure) std::rethrow_exception(failure);
  return result;
}

}  // namespace pivotsmt
