#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gsum/errors.hpp"
#include "gsum/geometry.hpp"
#include "gsum/highdim.hpp"
#include "gsum/prob.hpp"

namespace gsum {

/// Malformed input file. what() carries "source:line: message" when the line
/// is known, otherwise "source: message" with a JSON path.
class InputError : public DomainError {
 public:
  InputError(const std::string& source, std::size_t line, const std::string& message);
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

std::string read_text_file(const std::string& path);

/// Writes to a sibling temporary and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

/// {"atoms":[{"x":0.05,"p":0.5}, ...]}
DiscreteDistribution1D parse_distribution_1d(const std::string& text,
                                             const std::string& source = "<input>");
/// {"dim":2,"atoms":[{"x":[0.1,0.2],"p":0.5}, ...]}
DiscreteDistributionVec parse_distribution_vec(const std::string& text,
                                               const std::string& source = "<input>");
std::string to_json(const DiscreteDistribution1D& d);
std::string to_json(const DiscreteDistributionVec& d);

/// One vector per row, comma separated. Blank lines and lines starting with
/// '#' are skipped; all rows must have the same length.
std::vector<Eigen::VectorXd> parse_vectors_csv(const std::string& text,
                                               const std::string& source = "<input>");
Eigen::MatrixXd parse_matrix_csv(const std::string& text, const std::string& source = "<input>");
std::string vectors_to_csv(const std::vector<Eigen::VectorXd>& v);

/// {"intervals":[[lo,hi], ...]}; endpoints may be the strings "-inf"/"inf".
std::vector<Interval> parse_intervals(const std::string& text, const std::string& source = "<input>");

/// Partition certificate together with the vectors it refers to. Doubles are
/// written in shortest round-trip form, so a reload reproduces every bit.
struct PartitionFile {
  std::vector<Eigen::VectorXd> vectors;
  PartitionResult result;
};

std::string to_json(const PartitionFile& f);
PartitionFile parse_partition(const std::string& text, const std::string& source = "<input>");

}  // namespace gsum
