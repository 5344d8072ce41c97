// Shared primitives: error types, half-open spans, hashing, small string helpers.
#pragma once

#include <cctype>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace silt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input files, malformed records, mismatched artifacts. CLI exit code 2.
struct DataError : Error {
  using Error::Error;
};

// NaN/Inf or a violated numeric invariant. CLI exit code 3.
struct NumericError : Error {
  using Error::Error;
};

// Token interval [first, second), first inclusive, second exclusive.
using Span = std::pair<int, int>;

inline int span_width(const Span& s) { return s.second - s.first; }

// (a,b) and (c,d) cross iff a<c<b<d or c<a<d<b.
inline bool spans_cross(const Span& a, const Span& b) {
  return (a.first < b.first && b.first < a.second && a.second < b.second) ||
         (b.first < a.first && a.first < b.second && b.second < a.second);
}

inline bool span_contains(const Span& outer, const Span& inner) {
  return outer.first <= inner.first && inner.second <= outer.second;
}

inline std::uint64_t fnv1a64_bytes(const void* data, std::size_t n,
                                   std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64_bytes(s.data(), s.size(), h);
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline std::string lower_ascii(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline std::string join(const std::vector<std::string>& toks, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) out += sep;
    out += toks[i];
  }
  return out;
}

}  // namespace silt
