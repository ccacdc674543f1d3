#include "armatch/matching.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <tuple>

#include "armatch/error.hpp"
#include "armatch/parallel.hpp"

namespace armatch {

void DescriptorSet::push_back(const std::vector<float>& values) {
  if (dim == 0 && data.empty()) dim = static_cast<int>(values.size());
  require(static_cast<int>(values.size()) == dim, "descriptor dimension mismatch");
  data.insert(data.end(), values.begin(), values.end());
}

DescriptorSet make_descriptor_set(const FeatureSet& features) {
  DescriptorSet s;
  s.dim = features.dim;
  s.base_dim = features.dim;
  s.binary = features.family.is_binary();
  s.data.reserve(features.descriptors.size() * static_cast<std::size_t>(features.dim));
  for (const BaseDescriptor& d : features.descriptors) s.push_back(d.values);
  return s;
}

float squared_l2(const float* a, const float* b, int dim) {
  float lanes[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  int i = 0;
  for (; i + 8 <= dim; i += 8) {
    for (int j = 0; j < 8; ++j) {
      const float d = a[i + j] - b[i + j];
      lanes[j] += d * d;
    }
  }
  for (int j = 0; i < dim; ++i, ++j) {
    const float d = a[i] - b[i];
    lanes[j] += d * d;
  }
  return ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3])) + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
}

namespace {

int hamming(const float* a, const float* b, int n) {
  int bits = 0;
  for (int i = 0; i < n; ++i) {
    const auto x = static_cast<std::uint8_t>(a[i]) ^ static_cast<std::uint8_t>(b[i]);
    bits += std::popcount(static_cast<unsigned>(x));
  }
  return bits;
}

// Monotone surrogate used inside the neighbour scan: squared distance for
// float sets, the true distance for binary sets.
double scan_distance(const DescriptorSet& set, const float* a, const float* b) {
  if (!set.binary) return squared_l2(a, b, set.dim);
  return descriptor_distance(set, a, b);
}

double finish_distance(const DescriptorSet& set, double scan) { return set.binary ? scan : std::sqrt(scan); }

}  // namespace

double descriptor_distance(const DescriptorSet& set, const float* a, const float* b) {
  if (!set.binary) return std::sqrt(static_cast<double>(squared_l2(a, b, set.dim)));
  const int extra = set.dim - set.base_dim;
  double d = hamming(a, b, set.base_dim);
  if (extra > 0) d += std::sqrt(static_cast<double>(squared_l2(a + set.base_dim, b + set.base_dim, extra)));
  return d;
}

std::vector<IndexMatch> knn_match(const DescriptorSet& a, const DescriptorSet& b, double ratio) {
  require(ratio > 0.0 && ratio < 1.0, "ratio must lie in (0, 1)");
  require(b.size() >= 2, "knn matching needs at least two train descriptors");
  require(a.size() == 0 || a.dim == b.dim, "descriptor dimensions differ");
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(a.size());
  const std::size_t m = b.size();
  std::vector<IndexMatch> slots(static_cast<std::size_t>(n));
  std::vector<char> keep(static_cast<std::size_t>(n), 0);
  parallel_for(n, [&](std::ptrdiff_t i) {
    const float* q = a.row(static_cast<std::size_t>(i));
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    int best = -1;
    for (std::size_t j = 0; j < m; ++j) {
      const double d = scan_distance(b, q, b.row(j));
      if (d < d1) {
        d2 = d1;
        d1 = d;
        best = static_cast<int>(j);
      } else if (d < d2) {
        d2 = d;
      }
    }
    const double f1 = finish_distance(b, d1), f2 = finish_distance(b, d2);
    if (f1 < ratio * f2) {
      slots[i] = {static_cast<int>(i), best, f1, f2};
      keep[i] = 1;
    }
  });
  std::vector<IndexMatch> out;
  for (std::ptrdiff_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(slots[i]);
  return out;
}

namespace {

long bucket(double v) { return std::lround(v / 2.0); }

bool better(const Match& x, const Match& y) {
  return std::tie(x.distance, x.a.x, x.a.y, x.b.x, x.b.y) < std::tie(y.distance, y.a.x, y.a.y, y.b.x, y.b.y);
}

}  // namespace

std::vector<Match> dedupe(const std::vector<Match>& matches) {
  std::map<std::tuple<long, long, long, long>, Match> by_pair;
  for (const Match& m : matches) {
    const auto key = std::make_tuple(bucket(m.a.x), bucket(m.a.y), bucket(m.b.x), bucket(m.b.y));
    auto it = by_pair.find(key);
    if (it == by_pair.end()) {
      by_pair.emplace(key, m);
    } else if (better(m, it->second)) {
      it->second = m;
    }
  }
  std::map<std::pair<long, long>, Match> by_a;
  for (const auto& [key, m] : by_pair) {
    const auto ka = std::make_pair(std::get<0>(key), std::get<1>(key));
    auto it = by_a.find(ka);
    if (it == by_a.end()) {
      by_a.emplace(ka, m);
    } else if (better(m, it->second)) {
      it->second = m;
    }
  }
  std::vector<Match> out;
  out.reserve(by_a.size());
  for (const auto& [key, m] : by_a) out.push_back(m);
  return out;
}

void write_matches(const std::filesystem::path& path, const std::vector<Match>& matches) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write " + path.string());
  char buf[160];
  for (const Match& m : matches) {
    std::snprintf(buf, sizeof buf, "%.6g %.6g %.6g %.6g %.6g\n", m.a.x, m.a.y, m.b.x, m.b.y, m.distance);
    out << buf;
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

std::vector<Match> read_matches(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::vector<Match> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    Match m;
    std::string extra;
    if (!(ls >> m.a.x >> m.a.y >> m.b.x >> m.b.y >> m.distance) || (ls >> extra)) {
      fail(ErrorKind::Parse, path.string() + ":" + std::to_string(line_no) + ": expected 'ax ay bx by distance'");
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace armatch
