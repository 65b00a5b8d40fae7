#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phrev/error.hpp"

namespace phrev {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Observed prices and purchased quantities over T periods and n goods.
/// Row t holds period t. Every entry is strictly positive; the object cannot
/// be constructed otherwise.
class MarketStatistics {
 public:
  MarketStatistics(Matrix prices, Matrix quantities);

  std::size_t periods() const { return static_cast<std::size_t>(prices_.rows()); }
  std::size_t goods() const { return static_cast<std::size_t>(prices_.cols()); }

  const Matrix& prices() const { return prices_; }
  const Matrix& quantities() const { return quantities_; }

  /// p^from · q^at, the cost of the period-`at` bundle at period-`from` prices.
  double cost(std::size_t from, std::size_t at) const {
    return prices_.row(from).dot(quantities_.row(at));
  }
  double expenditure(std::size_t t) const { return cost(t, t); }

  /// Statistics restricted to the given goods, in the given order.
  MarketStatistics select_goods(const std::vector<std::size_t>& goods) const;

 private:
  Matrix prices_;
  Matrix quantities_;
};

/// Goods split into a q-block and a y-block. Indices are 0-based columns of
/// the base statistics, each block in increasing order.
class PartitionedStatistics {
 public:
  const MarketStatistics& base() const { return base_; }
  const std::vector<std::size_t>& q_block() const { return q_block_; }
  const std::vector<std::size_t>& y_block() const { return y_block_; }

  /// (p, q): prices and quantities of the q-block.
  const MarketStatistics& q_data() const { return q_data_; }
  /// (x, y): prices and quantities of the y-block.
  const MarketStatistics& y_data() const { return y_data_; }

  /// Interleaves both blocks back into their original column positions.
  MarketStatistics merge() const;

 private:
  friend PartitionedStatistics partition(const MarketStatistics&,
                                         const std::vector<std::size_t>&);
  PartitionedStatistics(MarketStatistics base, std::vector<std::size_t> q_block,
                        std::vector<std::size_t> y_block);

  MarketStatistics base_;
  std::vector<std::size_t> q_block_;
  std::vector<std::size_t> y_block_;
  MarketStatistics q_data_;
  MarketStatistics y_data_;
};

/// Splits goods into y_block (0-based, any order, no duplicates) and its
/// complement. Throws kEmptyBlock or kIndexOutOfRange.
PartitionedStatistics partition(const MarketStatistics& stats,
                                const std::vector<std::size_t>& y_block);

enum class Status { kFeasible, kInfeasible, kUndecided };

std::string to_string(Status status);

struct Decision {
  Status status = Status::kUndecided;
  std::optional<double> optimum;
  std::string detail;
};

/// Reads the CSV format: header `p1,...,pn,q1,...,qn`, one row per period.
MarketStatistics load_statistics(const std::filesystem::path& path);
MarketStatistics parse_statistics(const std::string& text);

/// Writes the same CSV format with 17 significant digits.
void save_statistics(const MarketStatistics& stats,
                     const std::filesystem::path& path);
std::string format_statistics(const MarketStatistics& stats);

}  // namespace phrev
