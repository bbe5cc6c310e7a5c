#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tvopt {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LibsvmRow {
  std::vector<std::pair<int, double>> features;  // 0-based index, ascending
  double label = 0.0;

  bool operator==(const LibsvmRow&) const = default;
};

/// Sparse dataset in LibSVM form. Feature indices are shifted to 0-based on
/// parse; dim is max index + 1 (the bias slot is appended downstream by the
/// logistic objective, not here). The label convention is inferred from the
/// file and must be consistent: either {0,1} or {-1,+1}.
struct LibsvmDataset {
  enum class Labels { ZeroOne, PlusMinus };

  std::vector<LibsvmRow> rows;
  int dim = 0;
  Labels labels = Labels::PlusMinus;

  std::int64_t size() const { return static_cast<std::int64_t>(rows.size()); }

  bool operator==(const LibsvmDataset&) const = default;
};

/// Strict parser: "<label> <idx>:<val> ...", ASCII whitespace separators,
/// 1-based indices. Rejects duplicate indices within a row, malformed
/// tokens, mixed label conventions and empty files, naming the line.
LibsvmDataset parse_libsvm(const std::string& path);
LibsvmDataset parse_libsvm_text(std::string_view text,
                                const std::string& origin = "<memory>");

/// Canonical serialization (indices ascending, one row per line); parsing it
/// back yields an equal dataset.
std::string to_libsvm_text(const LibsvmDataset& ds);

}  // namespace tvopt
