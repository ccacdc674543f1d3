#include <cmath>
#include <limits>

#include "armatch/error.hpp"
#include "armatch/reference.hpp"

namespace armatch::reference {

std::vector<IndexMatch> knn_match(const DescriptorSet& a, const DescriptorSet& b, double ratio) {
  require(ratio > 0.0 && ratio < 1.0, "ratio must lie in (0, 1)");
  require(b.size() >= 2, "knn matching needs at least two train descriptors");
  std::vector<IndexMatch> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    int best = -1;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = b.binary ? descriptor_distance(b, a.row(i), b.row(j))
                                : static_cast<double>(squared_l2(a.row(i), b.row(j), b.dim));
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = static_cast<int>(j);
      } else if (d < d2) {
        d2 = d;
      }
    }
    if (!b.binary) {
      d1 = std::sqrt(d1);
      d2 = std::sqrt(d2);
    }
    if (d1 < ratio * d2) out.push_back({static_cast<int>(i), best, d1, d2});
  }
  return out;
}

}  // namespace armatch::reference
