// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace pivotsmt {

struct PivotsmtError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A codepoint the script profile cannot classify. Carries the offending
// codepoint and its codepoint offset within the sentence.
struct UnclassifiedCodepoint : PivotsmtError {
  char32_t codepoint;
  std::size_t position;
  UnclassifiedCodepoint(char32_t cp, std::size_t pos)
      : PivotsmtError("unclassified codepoint U+" + to_hex(cp) +
                      " at position " + std::to_string(pos)),
        codepoint(cp), position(pos) {}

 private:
  static std::string to_hex(char32_t cp) {
    static const char* digits = "0123456789ABCDEF";
    std::string s;
    for (int shift = 28; shift >= 0; shift -= 4) {
      int d = (cp >> shift) & 0xF;
      if (!s.empty() || d != 0 || shift < 16) s.push_back(digits[d]);
    }
    return s;
  }
};

struct EmptyCorpus : PivotsmtError {
  EmptyCorpus() : PivotsmtError("empty corpus") {}
};

struct EmptyBitext : PivotsmtError {
  EmptyBitext() : PivotsmtError("empty bitext") {}
};

// Paired inputs differ in length; `line` is the 0-based index where one
// side ended.
struct LengthMismatch : PivotsmtError {
  std::size_t line;
  explicit LengthMismatch(std::size_t l)
      : PivotsmtError("length mismatch at line " + std::to_string(l)),
        line(l) {}
};

struct DimensionMismatch : PivotsmtError {
  DimensionMismatch() : PivotsmtError("alignment dimension mismatch") {}
};

struct EmptyTable : PivotsmtError {
  EmptyTable() : PivotsmtError("empty phrase table") {}
};

struct SchemeMismatch : PivotsmtError {
  explicit SchemeMismatch(const std::string& msg)
      : PivotsmtError("scheme mismatch: " + msg) {}
};

struct WeightError : PivotsmtError {
  explicit WeightError(const std::string& msg)
      : PivotsmtError("weight error: " + msg) {}
};

struct SpecError : PivotsmtError {
  explicit SpecError(const std::string& msg)
      : PivotsmtError("spec error: " + msg) {}
};

// A pipeline stage failed; carries the stage name for the run report.
struct StageError : PivotsmtError {
  std::string stage;
  StageError(const std::string& stage_name, const std::string& msg)
      : PivotsmtError("stage '" + stage_name + "' failed: " + msg),
        stage(stage_name) {}
};

}  // namespace pivotsmt
