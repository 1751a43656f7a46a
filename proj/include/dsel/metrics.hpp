#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsel/errors.hpp"

namespace dsel {

// One evaluation point. Optional columns are written as empty fields.
struct MetricsRow {
  std::uint64_t step = 0;
  std::string phase;  // "<arm>:pretrain" or "<arm>:finetune"
  double heldout_specific_loss = 0.0;
  double heldout_generic_loss = 0.0;
  std::optional<double> mean_target_weight;
  std::optional<double> mean_distractor_weight;
  std::optional<double> weight_entropy;
  std::optional<double> sar;
  std::optional<double> gar;

  bool operator==(const MetricsRow&) const = default;
};

// A metrics row that does not parse. `row` is 1-based and counts the header.
class MalformedRow : public std::runtime_error {
 public:
  MalformedRow(std::size_t row, const std::string& what)
      : std::runtime_error("metrics row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

const std::vector<std::string>& metrics_columns();
std::string metrics_header();
std::string format_row(const MetricsRow& row);
// Header line followed by one line per row.
std::string format_metrics(const std::vector<MetricsRow>& rows);

// Shortest decimal form that reads back to the same double.
std::string format_real(double v);

struct MetricsTable {
  std::vector<std::vector<std::string>> raw;  // fields as they appear in the file
  std::vector<MetricsRow> rows;
};

// Validates header, column count and field syntax. Throws MalformedRow.
MetricsTable parse_metrics(std::string_view text);

// Arm name of a phase label: the part before ':'.
std::string arm_of(std::string_view phase);

}  // namespace dsel
