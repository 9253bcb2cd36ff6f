#ifndef FEATURELESS_ENCODE_H_
#define FEATURELESS_ENCODE_H_

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace featureless {

// Bag-of-words histogram of one video.
struct BowHistogram {
  std::string video_id;
  std::vector<double> counts;
  bool normalized = false;
};

BowHistogram bow_aggregate(std::span<const int> assignments, int num_bins,
                           bool normalize, std::string video_id = {});

// Concatenation of two normalized histograms of the same video; each half
// keeps its own L1 normalization.
std::vector<double> concat_representations(const BowHistogram& a,
                                           const BowHistogram& b);

// One exported row: `video_id,label,v1,...,vK`.
struct HistogramRow {
  std::string video_id;
  int label = 0;
  std::vector<double> values;
};

void write_histogram_rows(std::ostream& out, std::span<const HistogramRow> rows);
std::vector<HistogramRow> read_histogram_rows(std::istream& in);

}  // namespace featureless

#endif  // FEATURELESS_ENCODE_H_
