#include "featureless/encode.h"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "featureless/common.h"

namespace featureless {

BowHistogram bow_aggregate(std::span<const int> assignments, int num_bins,
                           bool normalize, std::string video_id) {
  if (num_bins < 1) throw Error("histogram needs at least one bin");
  if (assignments.empty()) throw Error("cannot aggregate an empty assignment list");
  BowHistogram h;
  h.video_id = std::move(video_id);
  h.counts.assign(num_bins, 0.0);
  for (int a : assignments) {
    if (a < 0 || a >= num_bins) {
      throw Error("codeword index " + std::to_string(a) + " out of range [0," +
                  std::to_string(num_bins) + ")");
    }
    h.counts[a] += 1.0;
  }
  if (normalize) {
    const double total = static_cast<double>(assignments.size());
    for (double& c : h.counts) c /= total;
    h.normalized = true;
  }
  return h;
}

std::vector<double> concat_representations(const BowHistogram& a,
                                           const BowHistogram& b) {
  if (a.video_id != b.video_id) {
    throw Error("cannot combine histograms of different videos ('" + a.video_id +
                "' vs '" + b.video_id + "')");
  }
  if (!a.normalized || !b.normalized) {
    throw Error("combined representation needs normalized histograms");
  }
  std::vector<double> out;
  out.reserve(a.counts.size() + b.counts.size());
  out.insert(out.end(), a.counts.begin(), a.counts.end());
  out.insert(out.end(), b.counts.begin(), b.counts.end());
  return out;
}

void write_histogram_rows(std::ostream& out, std::span<const HistogramRow> rows) {
  char buffer[64];
  for (const HistogramRow& row : rows) {
    out << row.video_id << ',' << row.label;
    for (double v : row.values) {
      // Shortest round-trip representation keeps the file lossless.
      const auto res = std::to_chars(buffer, buffer + sizeof(buffer), v);
      out << ',' << std::string_view(buffer, res.ptr - buffer);
    }
    out << '\n';
  }
}

std::vector<HistogramRow> read_histogram_rows(std::istream& in) {
  std::vector<HistogramRow> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    HistogramRow row;
    std::string field;
    if (!std::getline(fields, row.video_id, ',') || !std::getline(fields, field, ',')) {
      throw Error("histogram line " + std::to_string(line_no) + ": missing fields");
    }
    const auto lab = std::from_chars(field.data(), field.data() + field.size(), row.label);
    if (lab.ec != std::errc() || lab.ptr != field.data() + field.size()) {
      throw Error("histogram line " + std::to_string(line_no) + ": bad label '" + field + "'");
    }
    while (std::getline(fields, field, ',')) {
      double v = 0.0;
      const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || !std::isfinite(v)) {
        throw Error("histogram line " + std::to_string(line_no) + ": bad value '" + field + "'");
      }
      row.values.push_back(v);
    }
    if (!rows.empty() && rows.front().values.size() != row.values.size()) {
      throw Error("histogram line " + std::to_string(line_no) + ": inconsistent length");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace featureless
