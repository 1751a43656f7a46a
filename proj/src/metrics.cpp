#include "dsel/metrics.hpp"

#include <charconv>
#include <sstream>

namespace dsel {
namespace {

std::string opt(const std::optional<double>& v) { return v ? format_real(*v) : std::string(); }

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double real(const std::string& s, std::size_t row, const char* column) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || p != s.data() + s.size())
    throw MalformedRow(row, std::string("column ") + column + " is not a number: '" + s + "'");
  return v;
}

std::optional<double> opt_real(const std::string& s, std::size_t row, const char* column) {
  if (s.empty()) return std::nullopt;
  return real(s, row, column);
}

}  // namespace

std::string format_real(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

const std::vector<std::string>& metrics_columns() {
  static const std::vector<std::string> cols = {
      "step",           "phase",        "heldout_specific_loss", "heldout_generic_loss",
      "mean_target_weight", "mean_distractor_weight", "weight_entropy", "sar", "gar"};
  return cols;
}

std::string metrics_header() {
  std::string h;
  for (const auto& c : metrics_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

std::string format_row(const MetricsRow& r) {
  if (r.phase.find_first_of(",\n") != std::string::npos)
    throw ContractError("phase label must not contain ',' or newline");
  std::ostringstream os;
  os << r.step << ',' << r.phase << ',' << format_real(r.heldout_specific_loss) << ','
     << format_real(r.heldout_generic_loss) << ',' << opt(r.mean_target_weight) << ','
     << opt(r.mean_distractor_weight) << ',' << opt(r.weight_entropy) << ',' << opt(r.sar) << ','
     << opt(r.gar);
  return os.str();
}

std::string format_metrics(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_header() + "\n";
  for (const auto& r : rows) out += format_row(r) + "\n";
  return out;
}

MetricsTable parse_metrics(std::string_view text) {
  MetricsTable t;
  std::size_t row = 0, pos = 0;
  bool header = false;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header) {
      if (line != metrics_header()) throw MalformedRow(row, "unexpected header");
      header = true;
      continue;
    }
    auto f = split(line);
    if (f.size() != metrics_columns().size())
      throw MalformedRow(row, "expected " + std::to_string(metrics_columns().size()) +
                                  " columns, found " + std::to_string(f.size()));
    MetricsRow r;
    const auto [p, ec] = std::from_chars(f[0].data(), f[0].data() + f[0].size(), r.step);
    if (f[0].empty() || ec != std::errc() || p != f[0].data() + f[0].size())
      throw MalformedRow(row, "column step is not an integer: '" + f[0] + "'");
    if (f[1].empty()) throw MalformedRow(row, "column phase is empty");
    r.phase = f[1];
    r.heldout_specific_loss = real(f[2], row, "heldout_specific_loss");
    r.heldout_generic_loss = real(f[3], row, "heldout_generic_loss");
    r.mean_target_weight = opt_real(f[4], row, "mean_target_weight");
    r.mean_distractor_weight = opt_real(f[5], row, "mean_distractor_weight");
    r.weight_entropy = opt_real(f[6], row, "weight_entropy");
    r.sar = opt_real(f[7], row, "sar");
    r.gar = opt_real(f[8], row, "gar");
    t.raw.push_back(std::move(f));
    t.rows.push_back(std::move(r));
  }
  if (!header) throw MalformedRow(1, "missing header");
  return t;
}

std::string arm_of(std::string_view phase) {
  return std::string(phase.substr(0, phase.find(':')));
}

}  // namespace dsel
