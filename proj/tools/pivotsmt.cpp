// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: one subcommand per toolkit operation plus the
// experiment driver. All corpus IO is line-oriented UTF-8; every command
// exits 0 on success and nonzero with a tagged message on failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "pivotsmt/pivotsmt.hpp"

namespace {

using namespace pivotsmt;

std::vector<std::string> read_input(const std::string& path) {
  std::vector<std::string> lines;
  std::string line;
  if (path.empty() || path == "-") {
    while (std::getline(std::cin, line)) lines.push_back(line);
    return lines;
  }
  LineReader in(path);
  while (in.getline(line)) lines.push_back(line);
  return lines;
}

void write_output(const std::string& path, const std::vector<std::string>& lines) {
  if (path.empty() || path == "-") {
    for (const auto& l : lines) std::cout << l << "\n";
    return;
  }
  LineWriter out(path);
  for (const auto& l : lines) out.write_line(l);
}

std::vector<std::vector<std::string>> tokenize(const std::vector<std::string>& lines) {
  std::vector<std::vector<std::string>> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(split_ws(l));
  return out;
}

void print_kv(const std::string& key, const std::string& value) {
  std::cout << key << "\t" << value << "\n";
}

ScriptProfile profile_or_latin(const std::string& path) {
  return path.empty() ? ScriptProfile::latin() : ScriptProfile::load(path);
}

// A decode-ready system stored as a directory: table, lm.arpa, optional
// weights file.
struct SystemDir {
  PhraseTable table;
  NgramLm lm;
  FeatureWeights weights;
};

SystemDir load_system(const std::string& dir) {
  SystemDir sys;
  sys.table = PhraseTable::load(dir + "/table");
  sys.lm = NgramLm::load_arpa(dir + "/lm.arpa");
  if (std::FILE* f = std::fopen((dir + "/weights").c_str(), "rb")) {
    std::fclose(f);
    sys.weights = load_weights(dir + "/weights");
  }
  return sys;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  for (auto& part : split(csv, ","))
    if (!trim(part).empty()) out.push_back(trim(part));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pivot translation toolkit"};
  app.set_version_flag("--version",
                       std::string("pivotsmt ") + pivotsmt::kVersion);
  app.require_subcommand(0, 1);

  std::string active;  // subcommand name for error tagging

  // --- segment -------------------------------------------------------------
  struct {
    std::string scheme = "word", profile, bpe_model, marker = kDefaultMarker;
    std::string input, output;
  } seg;
  {
    auto* c = app.add_subcommand("segment",
                                 "segment text under a subword scheme");
    c->add_option("--scheme", seg.scheme, "word|char|os|bpe")->required();
    c->add_option("--profile", seg.profile, "script profile JSON file");
    c->add_option("--bpe-model", seg.bpe_model, "merge table for --scheme bpe");
    c->add_option("--marker", seg.marker, "word boundary marker unit");
    c->add_option("--input", seg.input, "input file (default stdin)");
    c->add_option("--output", seg.output, "output file (default stdout)");
    c->callback([&] {
      active = "segment";
      Scheme scheme = scheme_from_string(seg.scheme);
      ScriptProfile prof = profile_or_latin(seg.profile);
      BpeModel bpe;
      if (scheme == Scheme::Bpe) {
        if (seg.bpe_model.empty())
          throw PivotsmtError("--scheme bpe requires --bpe-model");
        bpe = BpeModel::load(seg.bpe_model);
      }
      auto units = segment_corpus(read_input(seg.input), scheme, &prof,
                                  scheme == Scheme::Bpe ? &bpe : nullptr,
                                  seg.marker);
      std::vector<std::string> out;
      out.reserve(units.size());
      for (auto& u : units) out.push_back(join(u, " "));
      write_output(seg.output, out);
    });
  }

  // --- desegment -----------------------------------------------------------
  struct {
    std::string marker = kDefaultMarker, input, output;
  } deseg;
  {
    auto* c = app.add_subcommand("desegment",
                                 "restore word-level text from units");
    c->add_option("--marker", deseg.marker, "word boundary marker unit");
    c->add_option("--input", deseg.input, "input file (default stdin)");
    c->add_option("--output", deseg.output, "output file (default stdout)");
    c->callback([&] {
      active = "desegment";
      std::vector<std::string> out;
      for (auto& line : read_input(deseg.input))
        out.push_back(desegment_units(split_ws(line), deseg.marker));
      write_output(deseg.output, out);
    });
  }

  // --- train-bpe -----------------------------------------------------------
  struct {
    int merges = -1;
    bool match_os = false;
    std::string profile, input, output;
  } tbpe;
  {
    auto* c = app.add_subcommand("train-bpe", "learn a BPE merge table");
    auto* m = c->add_option("--merges", tbpe.merges, "number of merges");
    auto* v = c->add_flag("--match-os-vocab", tbpe.match_os,
                          "stop at the orthographic-syllable vocab size");
    m->excludes(v);
    c->add_option("--profile", tbpe.profile,
                  "script profile for --match-os-vocab");
    c->add_option("--input", tbpe.input, "training corpus (default stdin)");
    c->add_option("--output", tbpe.output, "model file")->required();
    c->callback([&] {
      active = "train-bpe";
      auto corpus = read_input(tbpe.input);
      BpeModel model;
      if (tbpe.match_os) {
        ScriptProfile prof = profile_or_latin(tbpe.profile);
        std::size_t target = os_vocab_size(corpus, prof);
        model = train_bpe_match_vocab(corpus, target);
        print_kv("target_vocab", std::to_string(target));
      } else {
        if (tbpe.merges < 0)
          throw PivotsmtError("one of --merges or --match-os-vocab is required");
        model = train_bpe(corpus, tbpe.merges);
      }
      model.save(tbpe.output);
      print_kv("merges", std::to_string(model.num_merges()));
    });
  }

  // --- os-vocab-size -------------------------------------------------------
  struct {
    std::string profile, input;
  } osv;
  {
    auto* c = app.add_subcommand(
        "os-vocab-size", "count distinct orthographic syllables in a corpus");
    c->add_option("--profile", osv.profile, "script profile JSON file");
    c->add_option("--input", osv.input, "corpus file (default stdin)");
    c->callback([&] {
      active = "os-vocab-size";
      ScriptProfile prof = profile_or_latin(osv.profile);
      print_kv("os_vocab_size",
               std::to_string(os_vocab_size(read_input(osv.input), prof)));
    });
  }

  // --- train-align ---------------------------------------------------------
  struct {
    std::string src, tgt, out_fwd, out_rev, out_sym, out_lex_fwd, out_lex_rev;
    int iters = 5;
  } tal;
  {
    auto* c = app.add_subcommand("train-align",
                                 "word-align a parallel corpus");
    c->add_option("--src", tal.src, "source side, one sentence per line")
        ->required();
    c->add_option("--tgt", tal.tgt, "target side")->required();
    c->add_option("--iters", tal.iters, "EM iterations");
    c->add_option("--out-fwd", tal.out_fwd, "forward Viterbi links");
    c->add_option("--out-rev", tal.out_rev,
                  "reverse Viterbi links (target-to-source orientation)");
    c->add_option("--out-sym", tal.out_sym, "symmetrized links");
    c->add_option("--out-lex-fwd", tal.out_lex_fwd,
                  "forward lexical translation table");
    c->add_option("--out-lex-rev", tal.out_lex_rev,
                  "reverse lexical translation table");
    c->callback([&] {
      active = "train-align";
      Bitext bt = make_bitext(tokenize(read_input(tal.src)),
                              tokenize(read_input(tal.tgt)));
      TranslationTable fwd = train_model1(bt, tal.iters);
      Bitext rev_bt;
      rev_bt.reserve(bt.size());
      for (auto& [s, t] : bt) rev_bt.push_back({t, s});
      TranslationTable rev = train_model1(rev_bt, tal.iters);
      auto fwd_al = viterbi_align(bt, fwd);
      auto rev_al = viterbi_align(rev_bt, rev);
      if (!tal.out_fwd.empty()) {
        std::vector<std::string> lines;
        for (auto& m : fwd_al) lines.push_back(alignment_to_string(m));
        write_output(tal.out_fwd, lines);
      }
      if (!tal.out_rev.empty()) {
        std::vector<std::string> lines;
        for (auto& m : rev_al) lines.push_back(alignment_to_string(m));
        write_output(tal.out_rev, lines);
      }
      if (!tal.out_sym.empty()) {
        std::vector<std::string> lines;
        for (std::size_t i = 0; i < bt.size(); ++i)
          lines.push_back(alignment_to_string(
              symmetrize_gdfa(fwd_al[i], transpose(rev_al[i]))));
        write_output(tal.out_sym, lines);
      }
      if (!tal.out_lex_fwd.empty()) save_translation_table(fwd, tal.out_lex_fwd);
      if (!tal.out_lex_rev.empty()) save_translation_table(rev, tal.out_lex_rev);
      print_kv("sentences", std::to_string(bt.size()));
      print_kv("final_log_likelihood",
               fmt_g6(fwd.log_likelihoods.empty()
                          ? 0.0
                          : fwd.log_likelihoods.back()));
    });
  }

  // --- extract-phrases -----------------------------------------------------
  struct {
    std::string src, tgt, align, output;
    int max_len = 7;
  } ext;
  {
    auto* c = app.add_subcommand(
        "extract-phrases", "extract alignment-consistent phrase pairs");
    c->add_option("--src", ext.src, "source side")->required();
    c->add_option("--tgt", ext.tgt, "target side")->required();
    c->add_option("--align", ext.align, "links, one line per pair")->required();
    c->add_option("--max-phrase-len", ext.max_len, "maximum phrase length");
    c->add_option("--output", ext.output, "pair stream (default stdout)");
    c->callback([&] {
      active = "extract-phrases";
      Bitext bt = make_bitext(tokenize(read_input(ext.src)),
                              tokenize(read_input(ext.tgt)));
      auto align_lines = read_input(ext.align);
      if (align_lines.size() != bt.size()) throw LengthMismatch(bt.size());
      std::vector<AlignmentMatrix> als;
      for (std::size_t i = 0; i < bt.size(); ++i)
        als.push_back(alignment_from_string(
            align_lines[i], static_cast<int>(bt[i].first.size()),
            static_cast<int>(bt[i].second.size())));
      std::vector<std::string> lines;
      for (auto& ph : extract_phrases(bt, als, ext.max_len)) {
        std::vector<std::string> parts;
        for (auto& [i, j] : ph.links)
          parts.push_back(std::to_string(i) + "-" + std::to_string(j));
        lines.push_back(join(ph.src, " ") + " ||| " + join(ph.tgt, " ") +
                        " ||| " + join(parts, " "));
      }
      write_output(ext.output, lines);
      print_kv("pairs", std::to_string(lines.size()));
    });
  }

  // --- score-phrases -------------------------------------------------------
  struct {
    std::string pairs, lex_fwd, lex_rev, output;
    std::string scheme, source_lang, target_lang;
    double prune = 1e-7;
  } scp;
  {
    auto* c = app.add_subcommand("score-phrases",
                                 "score an extracted phrase-pair stream");
    c->add_option("--pairs", scp.pairs, "extract-phrases output")->required();
    c->add_option("--lex-fwd", scp.lex_fwd, "forward lexical table")
        ->required();
    c->add_option("--lex-rev", scp.lex_rev, "reverse lexical table")
        ->required();
    c->add_option("--prune", scp.prune, "drop entries with all features below");
    c->add_option("--scheme", scp.scheme, "scheme metadata for the table");
    c->add_option("--source-lang", scp.source_lang, "source language metadata");
    c->add_option("--target-lang", scp.target_lang, "target language metadata");
    c->add_option("--output", scp.output, "phrase table file")->required();
    c->callback([&] {
      active = "score-phrases";
      PhraseCollector coll;
      for (auto& line : read_input(scp.pairs)) {
        auto fields = split(line, " ||| ");
        if (fields.size() != 3 && fields.size() != 2)
          throw PivotsmtError("bad phrase pair line: " + line);
        auto src = split_ws(fields[0]);
        auto tgt = split_ws(fields[1]);
        AlignmentMatrix m = alignment_from_string(
            fields.size() == 3 ? fields[2] : std::string(),
            static_cast<int>(src.size()), static_cast<int>(tgt.size()));
        coll.add(src, tgt,
                 std::vector<std::pair<int, int>>(m.links.begin(),
                                                  m.links.end()));
      }
      TranslationTable lf = load_translation_table(scp.lex_fwd);
      TranslationTable lr = load_translation_table(scp.lex_rev);
      PhraseTable table = score_phrases(coll, lf, lr, scp.prune);
      table.scheme = scp.scheme;
      table.source_lang = scp.source_lang;
      table.target_lang = scp.target_lang;
      table.save(scp.output);
      print_kv("entries", std::to_string(table.size()));
    });
  }

  // --- table-stats ---------------------------------------------------------
  struct {
    std::string table, sp, pt;
  } tst;
  {
    auto* c = app.add_subcommand("table-stats",
                                 "phrase-table size and vocabulary counts");
    c->add_option("--table", tst.table, "phrase table")->required();
    c->add_option("--sp", tst.sp, "source-pivot component (for the ratio)");
    c->add_option("--pt", tst.pt, "pivot-target component (for the ratio)");
    c->callback([&] {
      active = "table-stats";
      PhraseTable t = PhraseTable::load(tst.table);
      std::set<std::string> srcs, tgts;
      for (auto& e : t.entries) {
        srcs.insert(join(e.src, " "));
        tgts.insert(join(e.tgt, " "));
      }
      print_kv("entries", std::to_string(t.size()));
      print_kv("source_phrases", std::to_string(srcs.size()));
      print_kv("target_phrases", std::to_string(tgts.size()));
      print_kv("max_source_len", std::to_string(t.max_src_len()));
      if (!t.scheme.empty()) print_kv("scheme", t.scheme);
      if (!tst.sp.empty() && !tst.pt.empty()) {
        PhraseTable sp = PhraseTable::load(tst.sp);
        PhraseTable pt = PhraseTable::load(tst.pt);
        print_kv("size_ratio", fmt_g6(table_size_ratio(t, sp, pt)));
      }
    });
  }

  // --- train-lm ------------------------------------------------------------
  struct {
    std::string input, output;
    int order = 5;
  } tlm;
  {
    auto* c = app.add_subcommand("train-lm",
                                 "train a Kneser-Ney n-gram language model");
    c->add_option("--input", tlm.input, "training corpus (default stdin)");
    c->add_option("--order", tlm.order, "model order")->required();
    c->add_option("--out", tlm.output, "ARPA output file")->required();
    c->callback([&] {
      active = "train-lm";
      NgramLm lm = train_ngram_lm(tokenize(read_input(tlm.input)), tlm.order);
      lm.save_arpa(tlm.output);
      print_kv("order", std::to_string(tlm.order));
    });
  }

  // --- perplexity ----------------------------------------------------------
  struct {
    std::string lm, input;
  } ppl;
  {
    auto* c = app.add_subcommand("perplexity",
                                 "score a corpus with an ARPA model");
    c->add_option("--lm", ppl.lm, "ARPA file")->required();
    c->add_option("--input", ppl.input, "corpus (default stdin)");
    c->callback([&] {
      active = "perplexity";
      NgramLm lm = NgramLm::load_arpa(ppl.lm);
      auto corpus = tokenize(read_input(ppl.input));
      print_kv("perplexity", fmt_g6(lm.perplexity(corpus)));
      std::size_t tokens = 0;
      for (auto& s : corpus) tokens += s.size() + 1;  // + end of sentence
      print_kv("tokens", std::to_string(tokens));
    });
  }

  // --- decode --------------------------------------------------------------
  struct {
    std::string table, lm, weights, input, output;
    std::size_t pop_limit = 1000, nbest = 1;
  } dec;
  {
    auto* c = app.add_subcommand("decode", "translate a segmented corpus");
    c->add_option("--table", dec.table, "phrase table")->required();
    c->add_option("--lm", dec.lm, "target ARPA model")->required();
    c->add_option("--weights", dec.weights, "feature weights file");
    c->add_option("--pop-limit", dec.pop_limit, "hypotheses popped per stack");
    c->add_option("--nbest", dec.nbest, "hypotheses per sentence");
    c->add_option("--input", dec.input, "source units (default stdin)");
    c->add_option("--output", dec.output, "output (default stdout)");
    c->callback([&] {
      active = "decode";
      PhraseTable table = PhraseTable::load(dec.table);
      NgramLm lm = NgramLm::load_arpa(dec.lm);
      FeatureWeights w;
      if (!dec.weights.empty()) w = load_weights(dec.weights);
      DecoderConfig cfg{dec.pop_limit, dec.nbest};
      std::vector<std::string> out;
      std::size_t id = 0;
      for (auto& line : read_input(dec.input)) {
        auto nb = decode(split_ws(line), table, lm, w, cfg);
        if (dec.nbest <= 1) {
          out.push_back(join(nb.front().units, " "));
        } else {
          for (auto& e : nb) out.push_back(format_nbest_line(id, e));
        }
        ++id;
      }
      write_output(dec.output, out);
    });
  }

  // --- tune ----------------------------------------------------------------
  struct {
    std::string dev_src, dev_ref, table, lm, weights, output;
    std::string scheme = "word", marker = kDefaultMarker;
    int iterations = 5;
    std::size_t nbest = 100, pop_limit = 1000;
  } tun;
  {
    auto* c = app.add_subcommand(
        "tune", "fit feature weights to word-level BLEU on a dev set");
    c->add_option("--dev-src", tun.dev_src, "dev source units")->required();
    c->add_option("--dev-ref", tun.dev_ref, "dev reference words")->required();
    c->add_option("--table", tun.table, "phrase table")->required();
    c->add_option("--lm", tun.lm, "target ARPA model")->required();
    c->add_option("--weights", tun.weights, "initial weights file");
    c->add_option("--scheme", tun.scheme, "scheme of the dev units");
    c->add_option("--marker", tun.marker, "word boundary marker unit");
    c->add_option("--iterations", tun.iterations, "tuning iterations");
    c->add_option("--nbest", tun.nbest, "n-best pool size per sentence");
    c->add_option("--pop-limit", tun.pop_limit, "decoder pop limit");
    c->add_option("--out", tun.output, "tuned weights file")->required();
    c->callback([&] {
      active = "tune";
      PhraseTable table = PhraseTable::load(tun.table);
      NgramLm lm = NgramLm::load_arpa(tun.lm);
      FeatureWeights w;
      if (!tun.weights.empty()) w = load_weights(tun.weights);
      TuneOptions opts;
      opts.iterations = tun.iterations;
      opts.nbest = tun.nbest;
      opts.pop_limit = tun.pop_limit;
      opts.scheme = scheme_from_string(tun.scheme);
      opts.marker = tun.marker;
      TuneResult res =
          tune_weights(tokenize(read_input(tun.dev_src)),
                       read_input(tun.dev_ref), table, lm, w, opts);
      save_weights(res.weights, tun.output);
      print_kv("bleu_initial", fmt_g6(res.bleu_initial));
      print_kv("bleu_tuned", fmt_g6(res.bleu_tuned));
      print_kv("eval_unit_tokens", std::to_string(res.eval_unit_tokens));
      print_kv("eval_word_tokens", std::to_string(res.eval_word_tokens));
    });
  }

  // --- triangulate ---------------------------------------------------------
  struct {
    std::string sp, pt, output;
    double prune = 1e-7;
  } tri;
  {
    auto* c = app.add_subcommand(
        "triangulate", "compose source-pivot and pivot-target tables");
    c->add_option("--sp", tri.sp, "source-pivot table")->required();
    c->add_option("--pt", tri.pt, "pivot-target table")->required();
    c->add_option("--out", tri.output, "composed table")->required();
    c->add_option("--prune", tri.prune, "drop entries with all features below");
    c->callback([&] {
      active = "triangulate";
      PhraseTable sp = PhraseTable::load(tri.sp);
      PhraseTable pt = PhraseTable::load(tri.pt);
      PhraseTable out = triangulate(sp, pt, tri.prune);
      out.save(tri.output);
      print_kv("entries", std::to_string(out.size()));
      if (!out.entries.empty())
        print_kv("size_ratio", fmt_g6(table_size_ratio(out, sp, pt)));
    });
  }

  // --- interpolate ---------------------------------------------------------
  struct {
    std::string tables, alphas, output;
  } itp;
  {
    auto* c = app.add_subcommand("interpolate",
                                 "linearly combine phrase tables");
    c->add_option("--tables", itp.tables, "comma-separated table files")
        ->required();
    c->add_option("--alphas", itp.alphas,
                  "comma-separated weights (default: equal)");
    c->add_option("--out", itp.output, "combined table")->required();
    c->callback([&] {
      active = "interpolate";
      std::vector<PhraseTable> tables;
      for (auto& path : split_list(itp.tables))
        tables.push_back(PhraseTable::load(path));
      std::vector<double> alphas;
      for (auto& a : split_list(itp.alphas)) alphas.push_back(std::stod(a));
      PhraseTable out = interpolate_tables(tables, alphas);
      out.save(itp.output);
      print_kv("entries", std::to_string(out.size()));
      print_kv("tables", std::to_string(tables.size()));
    });
  }

  // --- pipeline ------------------------------------------------------------
  struct {
    std::string sp_sys, pt_sys, input, output;
    std::size_t k = 20, pop_limit = 1000, nbest = 1;
    double temperature = 1.0;
  } pip;
  {
    auto* c = app.add_subcommand(
        "pipeline", "translate via a pivot, carrying k hypotheses");
    c->add_option("--sp-sys", pip.sp_sys,
                  "source-pivot system directory (table, lm.arpa[, weights])")
        ->required();
    c->add_option("--pt-sys", pip.pt_sys, "pivot-target system directory")
        ->required();
    c->add_option("--k", pip.k, "hypotheses carried through the pivot");
    c->add_option("--pop-limit", pip.pop_limit, "decoder pop limit");
    c->add_option("--nbest", pip.nbest, "output hypotheses per sentence");
    c->add_option("--temperature", pip.temperature,
                  "posterior softmax temperature");
    c->add_option("--input", pip.input, "source units (default stdin)");
    c->add_option("--output", pip.output, "output (default stdout)");
    c->callback([&] {
      active = "pipeline";
      SystemDir sp = load_system(pip.sp_sys);
      SystemDir pt = load_system(pip.pt_sys);
      PipelineOptions opts;
      opts.k = pip.k;
      opts.pop_limit = pip.pop_limit;
      opts.nbest = pip.nbest;
      opts.temperature = pip.temperature;
      std::vector<std::string> out;
      std::size_t id = 0;
      for (auto& line : read_input(pip.input)) {
        auto nb = pipeline_translate(split_ws(line), sp.table, sp.lm,
                                     sp.weights, pt.table, pt.lm, pt.weights,
                                     opts);
        if (pip.nbest <= 1) {
          out.push_back(nb.empty() ? std::string()
                                   : join(nb.front().units, " "));
        } else {
          for (auto& e : nb) out.push_back(format_nbest_line(id, e));
        }
        ++id;
      }
      write_output(pip.output, out);
    });
  }

  // --- evaluate ------------------------------------------------------------
  struct {
    std::string metric = "bleu", cand, ref;
    double threshold = 0.4;
  } evl;
  {
    auto* c = app.add_subcommand("evaluate", "score hypotheses against a reference");
    c->add_option("--metric", evl.metric, "bleu|lebleu")->required();
    c->add_option("--cand", evl.cand, "hypothesis file")->required();
    c->add_option("--ref", evl.ref, "reference file")->required();
    c->add_option("--threshold", evl.threshold,
                  "fuzzy-match threshold for lebleu");
    c->callback([&] {
      active = "evaluate";
      auto cand = read_input(evl.cand);
      auto ref = read_input(evl.ref);
      double score = 0.0;
      if (evl.metric == "bleu") {
        score = bleu(cand, ref);
      } else if (evl.metric == "lebleu") {
        score = lebleu(cand, ref, evl.threshold);
      } else {
        throw PivotsmtError("unknown metric '" + evl.metric + "'");
      }
      print_kv("metric", evl.metric);
      print_kv("sentences", std::to_string(cand.size()));
      print_kv("score", fmt_g6(score));
    });
  }

  // --- significance --------------------------------------------------------
  struct {
    std::string sys_a, sys_b, ref;
    std::size_t resamples = 1000;
    std::uint64_t seed = 1;
  } sig;
  {
    auto* c = app.add_subcommand(
        "significance", "paired bootstrap BLEU comparison of two systems");
    c->add_option("--sysA", sig.sys_a, "first hypothesis file")->required();
    c->add_option("--sysB", sig.sys_b, "second hypothesis file")->required();
    c->add_option("--ref", sig.ref, "reference file")->required();
    c->add_option("--resamples", sig.resamples, "bootstrap resamples");
    c->add_option("--seed", sig.seed, "random seed");
    c->callback([&] {
      active = "significance";
      auto rep = bootstrap_significance(read_input(sig.sys_a),
                                        read_input(sig.sys_b),
                                        read_input(sig.ref), sig.resamples,
                                        sig.seed);
      print_kv("bleu_a", fmt_g6(rep.score_a));
      print_kv("bleu_b", fmt_g6(rep.score_b));
      print_kv("p_value", fmt_g6(rep.p_value));
      print_kv("resamples", std::to_string(rep.resamples));
    });
  }

  // --- synth ---------------------------------------------------------------
  struct {
    std::string spec, out_dir;
    std::size_t sentences = 6250;
  } syn;
  {
    auto* c = app.add_subcommand(
        "synth", "generate a synthetic related-language corpus family");
    c->add_option("--spec", syn.spec, "family spec JSON file")->required();
    c->add_option("--sentences", syn.sentences, "sentences per language")
        ->required();
    c->add_option("--out-dir", syn.out_dir, "output directory")->required();
    c->callback([&] {
      active = "synth";
      SynthLangSpec spec =
          SynthLangSpec::from_json(nlohmann::json::parse(read_file(syn.spec)));
      SynthFamily fam = generate_family(spec, syn.sentences);
      std::filesystem::create_directories(syn.out_dir);
      for (auto& corp : fam.corpora) {
        write_output(syn.out_dir + "/" + corp.name + ".train.txt", corp.train);
        write_output(syn.out_dir + "/" + corp.name + ".tune.txt", corp.tune);
        write_output(syn.out_dir + "/" + corp.name + ".test.txt", corp.test);
      }
      print_kv("languages", std::to_string(fam.corpora.size()));
      print_kv("train_sentences", std::to_string(fam.corpora[0].train.size()));
      for (std::size_t i = 1; i < fam.lexicons.size(); ++i)
        print_kv("lexical_similarity." + spec.languages[0].name + "-" +
                     spec.languages[i].name,
                 fmt_g6(measure_lexical_similarity(fam.lexicons[0],
                                                   fam.lexicons[i])));
    });
  }

  // --- run -----------------------------------------------------------------
  struct {
    std::string config;
  } run;
  {
    auto* c = app.add_subcommand("run",
                                 "run a full experiment from a config file");
    c->add_option("--config", run.config, "experiment config JSON")->required();
    c->callback([&] {
      active = "run";
      ExperimentConfig cfg = ExperimentConfig::load(run.config);
      ExperimentResult res = run_experiment(cfg);
      std::cout << res.report_text;
      for (auto& line : res.report_kv) std::cout << line << "\n";
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "pivotsmt" << (active.empty() ? "" : " " + active)
              << ": error: " << e.what() << "\n";
    return 1;
  }
  if (app.get_subcommands().empty()) std::puts(app.help().c_str());
  return 0;
}
