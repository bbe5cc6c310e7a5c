#include "tvopt/libsvm.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tvopt {

namespace {

[[noreturn]] void fail(const std::string& origin, int lineno, const std::string& what) {
  throw ParseError(origin + ":" + std::to_string(lineno) + ": " + what);
}

bool parse_double(std::string_view tok, double& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);  // "+1" labels
  if (tok.empty()) return false;
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(std::string_view tok, int& out) {
  const char* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

LibsvmDataset parse_libsvm_text(std::string_view text, const std::string& origin) {
  LibsvmDataset ds;
  bool has_zero = false;
  bool has_minus = false;
  int max_index = -1;

  int lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos
                                                 ? std::string_view::npos
                                                 : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++lineno;

    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      std::size_t start = i;
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
      if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    if (tokens.empty()) continue;

    LibsvmRow row;
    if (!parse_double(tokens[0], row.label))
      fail(origin, lineno, "bad label token '" + std::string(tokens[0]) + "'");
    if (row.label == 0.0) {
      has_zero = true;
    } else if (row.label == -1.0) {
      has_minus = true;
    } else if (row.label != 1.0) {
      fail(origin, lineno, "label must be 0, 1 or -1, got '" +
                               std::string(tokens[0]) + "'");
    }

    row.features.reserve(tokens.size() - 1);
    for (std::size_t t = 1; t < tokens.size(); ++t) {
      const std::string_view tok = tokens[t];
      const std::size_t colon = tok.find(':');
      int idx = 0;
      double val = 0.0;
      if (colon == std::string_view::npos ||
          !parse_int(tok.substr(0, colon), idx) ||
          !parse_double(tok.substr(colon + 1), val))
        fail(origin, lineno, "bad token '" + std::string(tok) + "'");
      if (idx < 1)
        fail(origin, lineno, "feature index must be >= 1 in '" +
                                 std::string(tok) + "'");
      row.features.emplace_back(idx - 1, val);
    }

    std::sort(row.features.begin(), row.features.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t f = 1; f < row.features.size(); ++f)
      if (row.features[f].first == row.features[f - 1].first)
        fail(origin, lineno, "duplicate feature index " +
                                 std::to_string(row.features[f].first + 1));
    if (!row.features.empty())
      max_index = std::max(max_index, row.features.back().first);
    ds.rows.push_back(std::move(row));
  }

  if (ds.rows.empty()) throw ParseError(origin + ": empty dataset");
  if (has_zero && has_minus)
    throw ParseError(origin + ": mixed label conventions ({0,1} and {-1,+1})");
  ds.labels = has_zero ? LibsvmDataset::Labels::ZeroOne
                       : LibsvmDataset::Labels::PlusMinus;
  ds.dim = max_index + 1;
  return ds;
}

LibsvmDataset parse_libsvm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("parse_libsvm: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_libsvm_text(buf.str(), path);
}

std::string to_libsvm_text(const LibsvmDataset& ds) {
  std::string out;
  char num[64];
  for (const LibsvmRow& row : ds.rows) {
    if (ds.labels == LibsvmDataset::Labels::ZeroOne) {
      out += row.label == 0.0 ? "0" : "1";
    } else {
      out += row.label == 1.0 ? "+1" : "-1";
    }
    for (const auto& [idx, val] : row.features) {
      std::snprintf(num, sizeof(num), " %d:%.17g", idx + 1, val);
      out += num;
    }
    out += '\n';
  }
  return out;
}

}  // namespace tvopt
