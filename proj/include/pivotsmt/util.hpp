// Copyright 2026 The pivotsmt Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

#include "pivotsmt/errors.hpp"

namespace pivotsmt {

// ---------------------------------------------------------------- strings

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// Split on an exact separator, keeping empty fields.
inline std::vector<std::string> split(std::string_view s, std::string_view sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + sep.size();
  }
}

inline std::string join(const std::vector<std::string>& v, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += sep;
    out += v[i];
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// ------------------------------------------------------------------ utf8

// Lenient decoder: malformed bytes are taken as their raw byte value so a
// later encode cannot lose text silently.
inline std::u32string utf8_decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    char32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1F; extra = 1;
    } else if ((c >> 4) == 0xE) {
      cp = c & 0x0F; extra = 2;
    } else if ((c >> 3) == 0x1E) {
      cp = c & 0x07; extra = 3;
    } else {
      out.push_back(c); ++i; continue;
    }
    if (i + extra >= s.size()) { out.push_back(c); ++i; continue; }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      unsigned char cc = s[i + k];
      if ((cc >> 6) != 0x2) { ok = false; break; }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok) { out.push_back(c); ++i; continue; }
    out.push_back(cp);
    i += 1 + extra;
  }
  return out;
}

inline void utf8_append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string utf8_encode(const std::u32string& s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) utf8_append(out, cp);
  return out;
}

// ------------------------------------------------------------ hash / seed

inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent deterministic seed stream per (seed, tag, index).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(seed ^ fnv1a64(tag)) + index);
}

inline double rand_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::size_t rand_index(std::mt19937_64& rng, std::size_t n) {
  // n is small everywhere this is used; modulo bias is negligible and the
  // result is reproducible across platforms, unlike uniform_int_distribution.
  return n ? static_cast<std::size_t>(rng() % n) : 0;
}

// ------------------------------------------------------------- formatting

inline std::string fmt_g6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

inline std::string fmt_f6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", x);
  return buf;
}

inline std::string fmt_f2(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", x);
  return buf;
}

// ------------------------------------------------- codepoint sequence ops

inline std::size_t edit_distance(const std::u32string& a,
                                 const std::u32string& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

inline std::size_t lcs_length(const std::u32string& a, const std::u32string& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 || m == 0) return 0;
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (a[i - 1] == b[j - 1]) cur[j] = prev[j - 1] + 1;
      else cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// -------------------------------------------------------------- line io

inline bool has_suffix(std::string_view s, std::string_view suf) {
  return s.size() >= suf.size() && s.substr(s.size() - suf.size()) == suf;
}

// Reads lines from a plain or gzip file (by .gz extension).
class LineReader {
 public:
  explicit LineReader(const std::string& path) : path_(path) {
    if (has_suffix(path, ".gz")) {
      gz_ = gzopen(path.c_str(), "rb");
      if (!gz_) throw PivotsmtError("cannot open " + path);
    } else {
      in_.open(path, std::ios::binary);
      if (!in_) throw PivotsmtError("cannot open " + path);
    }
  }
  ~LineReader() {
    if (gz_) gzclose(gz_);
  }
  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  bool getline(std::string& line) {
    if (gz_) {
      line.clear();
      char buf[4096];
      bool got = false;
      while (true) {
        if (gzgets(gz_, buf, sizeof(buf)) == nullptr) return got;
        got = true;
        line += buf;
        if (!line.empty() && line.back() == '\n') {
          line.pop_back();
          if (!line.empty() && line.back() == '\r') line.pop_back();
          return true;
        }
      }
    }
    if (!std::getline(in_, line)) return false;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

 private:
  std::string path_;
  std::ifstream in_;
  gzFile gz_ = nullptr;
};

class LineWriter {
 public:
  explicit LineWriter(const std::string& path) {
    if (has_suffix(path, ".gz")) {
      gz_ = gzopen(path.c_str(), "wb");
      if (!gz_) throw PivotsmtError("cannot open " + path + " for writing");
    } else {
      out_.open(path, std::ios::binary);
      if (!out_) throw PivotsmtError("cannot open " + path + " for writing");
    }
  }
  ~LineWriter() { close(); }
  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void write_line(std::string_view line) {
    if (gz_) {
      gzwrite(gz_, line.data(), static_cast<unsigned>(line.size()));
      gzwrite(gz_, "\n", 1);
    } else {
      out_.write(line.data(), static_cast<std::streamsize>(line.size()));
      out_.put('\n');
    }
  }

  void close() {
    if (gz_) {
      gzclose(gz_);
      gz_ = nullptr;
    }
    if (out_.is_open()) out_.close();
  }

 private:
  std::ofstream out_;
  gzFile gz_ = nullptr;
};

inline std::vector<std::string> read_lines(const std::string& path) {
  LineReader r(path);
  std::vector<std::string> lines;
  std::string line;
  while (r.getline(line)) lines.push_back(line);
  return lines;
}

inline void write_lines(const std::string& path,
                        const std::vector<std::string>& lines) {
  LineWriter w(path);
  for (const auto& l : lines) w.write_line(l);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PivotsmtError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PivotsmtError("cannot open " + path + " for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline std::uint64_t file_hash(const std::string& path) {
  return fnv1a64(read_file(path));
}

}  // namespace pivotsmt
