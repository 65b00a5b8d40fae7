#include "phrev/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

namespace phrev {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MISSING_FILE";
    case ErrorCode::kMalformedRow: return "MALFORMED_ROW";
    case ErrorCode::kNonpositiveValue: return "NONPOSITIVE_VALUE";
    case ErrorCode::kEmptyBlock: return "EMPTY_BLOCK";
    case ErrorCode::kIndexOutOfRange: return "INDEX_OUT_OF_RANGE";
    case ErrorCode::kShapeMismatch: return "SHAPE_MISMATCH";
    case ErrorCode::kInvalidCertificate: return "INVALID_CERTIFICATE";
    case ErrorCode::kInvalidMultipliers: return "INVALID_MULTIPLIERS";
    case ErrorCode::kDomainViolation: return "DOMAIN_VIOLATION";
    case ErrorCode::kSizeLimit: return "SIZE_LIMIT";
    case ErrorCode::kInvalidArgument: return "INVALID_ARGUMENT";
    case ErrorCode::kIo: return "IO_ERROR";
  }
  return "UNKNOWN";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> row, std::optional<std::size_t> column)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      row_(row),
      column_(column) {}

std::string to_string(Status status) {
  switch (status) {
    case Status::kFeasible: return "FEASIBLE";
    case Status::kInfeasible: return "INFEASIBLE";
    case Status::kUndecided: return "UNDECIDED";
  }
  return "UNDECIDED";
}

MarketStatistics::MarketStatistics(Matrix prices, Matrix quantities)
    : prices_(std::move(prices)), quantities_(std::move(quantities)) {
  if (prices_.rows() != quantities_.rows() ||
      prices_.cols() != quantities_.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                "prices and quantities must have identical shape");
  }
  if (prices_.rows() < 1 || prices_.cols() < 1) {
    throw Error(ErrorCode::kShapeMismatch, "need at least one period and one good");
  }
  for (Eigen::Index t = 0; t < prices_.rows(); ++t) {
    for (Eigen::Index i = 0; i < prices_.cols(); ++i) {
      // The negated comparison also rejects NaN.
      if (!(prices_(t, i) > 0.0) || !std::isfinite(prices_(t, i))) {
        throw Error(ErrorCode::kNonpositiveValue, "price must be positive",
                    t + 1, i + 1);
      }
      if (!(quantities_(t, i) > 0.0) || !std::isfinite(quantities_(t, i))) {
        throw Error(ErrorCode::kNonpositiveValue, "quantity must be positive",
                    t + 1, prices_.cols() + i + 1);
      }
    }
  }
}

MarketStatistics MarketStatistics::select_goods(
    const std::vector<std::size_t>& goods) const {
  Matrix p(prices_.rows(), static_cast<Eigen::Index>(goods.size()));
  Matrix q(p.rows(), p.cols());
  for (std::size_t j = 0; j < goods.size(); ++j) {
    if (goods[j] >= this->goods()) {
      throw Error(ErrorCode::kIndexOutOfRange, "good index out of range");
    }
    p.col(j) = prices_.col(goods[j]);
    q.col(j) = quantities_.col(goods[j]);
  }
  return MarketStatistics(std::move(p), std::move(q));
}

PartitionedStatistics::PartitionedStatistics(MarketStatistics base,
                                             std::vector<std::size_t> q_block,
                                             std::vector<std::size_t> y_block)
    : base_(std::move(base)),
      q_block_(std::move(q_block)),
      y_block_(std::move(y_block)),
      q_data_(base_.select_goods(q_block_)),
      y_data_(base_.select_goods(y_block_)) {}

MarketStatistics PartitionedStatistics::merge() const {
  Matrix p(base_.prices().rows(), base_.prices().cols());
  Matrix q(p.rows(), p.cols());
  for (std::size_t j = 0; j < q_block_.size(); ++j) {
    p.col(q_block_[j]) = q_data_.prices().col(j);
    q.col(q_block_[j]) = q_data_.quantities().col(j);
  }
  for (std::size_t j = 0; j < y_block_.size(); ++j) {
    p.col(y_block_[j]) = y_data_.prices().col(j);
    q.col(y_block_[j]) = y_data_.quantities().col(j);
  }
  return MarketStatistics(std::move(p), std::move(q));
}

PartitionedStatistics partition(const MarketStatistics& stats,
                                const std::vector<std::size_t>& y_block) {
  const std::size_t n = stats.goods();
  std::vector<bool> in_y(n, false);
  for (std::size_t index : y_block) {
    if (index >= n) {
      throw Error(ErrorCode::kIndexOutOfRange,
                  "y-block index " + std::to_string(index + 1) + " exceeds n=" +
                      std::to_string(n));
    }
    in_y[index] = true;
  }
  std::vector<std::size_t> q_idx;
  std::vector<std::size_t> y_idx;
  for (std::size_t i = 0; i < n; ++i) {
    (in_y[i] ? y_idx : q_idx).push_back(i);
  }
  if (y_idx.empty()) {
    throw Error(ErrorCode::kEmptyBlock, "y-block is empty");
  }
  if (q_idx.empty()) {
    throw Error(ErrorCode::kEmptyBlock, "q-block is empty");
  }
  return PartitionedStatistics(stats, std::move(q_idx), std::move(y_idx));
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

}  // namespace

MarketStatistics parse_statistics(const std::string& text) {
  std::vector<std::string_view> lines;
  {
    std::string_view rest(text);
    // Strip a UTF-8 byte order mark.
    if (rest.substr(0, 3) == "\xEF\xBB\xBF") rest.remove_prefix(3);
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      lines.push_back(rest.substr(0, nl));
      if (nl == std::string_view::npos) break;
      rest.remove_prefix(nl + 1);
    }
  }
  while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  if (lines.empty()) {
    throw Error(ErrorCode::kMalformedRow, "missing header", 0);
  }

  const auto header = split(lines.front());
  if (header.size() < 2 || header.size() % 2 != 0) {
    throw Error(ErrorCode::kMalformedRow, "header must be p1..pn,q1..qn", 0);
  }
  const std::size_t n = header.size() / 2;
  for (std::size_t i = 0; i < n; ++i) {
    if (header[i] != "p" + std::to_string(i + 1) ||
        header[n + i] != "q" + std::to_string(i + 1)) {
      throw Error(ErrorCode::kMalformedRow, "header must be p1..pn,q1..qn", 0,
                  i + 1);
    }
  }

  const std::size_t periods = lines.size() - 1;
  if (periods == 0) {
    throw Error(ErrorCode::kMalformedRow, "no data rows", 1);
  }
  Matrix p(periods, n);
  Matrix q(periods, n);
  for (std::size_t row = 0; row < periods; ++row) {
    const auto fields = split(lines[row + 1]);
    if (fields.size() != 2 * n) {
      throw Error(ErrorCode::kMalformedRow,
                  "expected " + std::to_string(2 * n) + " columns, got " +
                      std::to_string(fields.size()),
                  row + 1, std::min(fields.size(), 2 * n) + 1);
    }
    for (std::size_t col = 0; col < 2 * n; ++col) {
      const std::string_view field = fields[col];
      double value = 0.0;
      const auto [ptr, ec] =
          std::from_chars(field.data(), field.data() + field.size(), value);
      if (field.empty() || ec != std::errc() ||
          ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw Error(ErrorCode::kMalformedRow,
                    "cannot parse '" + std::string(field) + "'", row + 1,
                    col + 1);
      }
      if (!(value > 0.0)) {
        throw Error(ErrorCode::kNonpositiveValue,
                    "value must be strictly positive", row + 1, col + 1);
      }
      (col < n ? p(row, col) : q(row, col - n)) = value;
    }
  }
  return MarketStatistics(std::move(p), std::move(q));
}

MarketStatistics load_statistics(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_statistics(buffer.str());
}

std::string format_statistics(const MarketStatistics& stats) {
  const std::size_t n = stats.goods();
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += "p" + std::to_string(i + 1) + ",";
  for (std::size_t i = 0; i < n; ++i) {
    out += "q" + std::to_string(i + 1) + (i + 1 < n ? "," : "\n");
  }
  char buf[32];
  for (std::size_t t = 0; t < stats.periods(); ++t) {
    for (std::size_t col = 0; col < 2 * n; ++col) {
      const double v = col < n ? stats.prices()(t, col)
                               : stats.quantities()(t, col - n);
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out += buf;
      out += col + 1 < 2 * n ? ',' : '\n';
    }
  }
  return out;
}

void save_statistics(const MarketStatistics& stats,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << format_statistics(stats);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

}  // namespace phrev
