#include "armatch/mser.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "armatch/error.hpp"

namespace armatch {

void MserParams::validate() const {
  require(delta >= 1, "mser delta must be >= 1");
  require(max_variation > 0.0, "mser max_variation must be positive");
  require(min_area > 0, "mser min_area must be positive");
  require(max_area == 0 || max_area > min_area, "mser max_area must exceed min_area");
  require(overlap_merge_threshold > 0.0 && overlap_merge_threshold <= 1.0,
          "mser overlap threshold must be in (0, 1]");
}

int MserParams::resolved_max_area(const GrayImage& img) const {
  if (max_area > 0) return max_area;
  return static_cast<int>(0.144 * static_cast<double>(img.size()));
}

namespace {

struct Node {
  int level = 0;
  int area = 0;
  int parent = -1;
  std::vector<int> children;
  std::vector<std::int32_t> own;  // pixels that joined at this node's level
};

class ComponentTree {
 public:
  explicit ComponentTree(const GrayImage& img) { build(img); }

  const std::vector<Node>& nodes() const { return nodes_; }

  std::vector<std::int32_t> pixels(int n) const {
    std::vector<std::int32_t> out;
    std::vector<int> stack{n};
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      out.insert(out.end(), node.own.begin(), node.own.end());
      stack.insert(stack.end(), node.children.begin(), node.children.end());
    }
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  int find(int p) {
    while (uf_[p] != p) {
      uf_[p] = uf_[uf_[p]];
      p = uf_[p];
    }
    return p;
  }

  void unite(int a, int b) {
    int ra = find(a), rb = find(b);
    if (ra == rb) return;
    if (size_[ra] < size_[rb]) std::swap(ra, rb);
    uf_[rb] = ra;
    size_[ra] += size_[rb];
    auto& ch = pending_children_[ra];
    if (node_[ra] >= 0) ch.push_back(node_[ra]);
    if (node_[rb] >= 0) ch.push_back(node_[rb]);
    node_[ra] = node_[rb] = -1;
    ch.insert(ch.end(), pending_children_[rb].begin(), pending_children_[rb].end());
    pending_children_[rb].clear();
    auto& px = pending_pixels_[ra];
    px.insert(px.end(), pending_pixels_[rb].begin(), pending_pixels_[rb].end());
    pending_pixels_[rb].clear();
  }

  void build(const GrayImage& img) {
    const int w = img.width(), h = img.height();
    const std::size_t n = img.size();
    uf_.resize(n);
    size_.assign(n, 1);
    node_.assign(n, -1);
    pending_children_.resize(n);
    pending_pixels_.resize(n);
    std::vector<char> added(n, 0);

    std::array<std::vector<std::int32_t>, 256> by_level;
    const auto px = img.pixels();
    for (std::size_t i = 0; i < n; ++i) by_level[px[i]].push_back(static_cast<std::int32_t>(i));

    std::vector<int> roots;
    for (int level = 0; level < 256; ++level) {
      const auto& batch = by_level[level];
      if (batch.empty()) continue;
      for (std::int32_t p : batch) {
        uf_[p] = p;
        added[p] = 1;
        pending_pixels_[p].push_back(p);
        const int x = p % w, y = p / w;
        if (x > 0 && added[p - 1]) unite(p, p - 1);
        if (x + 1 < w && added[p + 1]) unite(p, p + 1);
        if (y > 0 && added[p - w]) unite(p, p - w);
        if (y + 1 < h && added[p + w]) unite(p, p + w);
      }
      // Components that changed at this level get a new node.
      roots.clear();
      for (std::int32_t p : batch) roots.push_back(find(p));
      std::sort(roots.begin(), roots.end());
      roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
      for (int r : roots) {
        Node node;
        node.level = level;
        node.area = size_[r];
        node.children = std::move(pending_children_[r]);
        if (node_[r] >= 0) node.children.push_back(node_[r]);
        std::sort(node.children.begin(), node.children.end());
        node.own = std::move(pending_pixels_[r]);
        pending_children_[r].clear();
        pending_pixels_[r].clear();
        const int id = static_cast<int>(nodes_.size());
        for (int c : node.children) nodes_[c].parent = id;
        nodes_.push_back(std::move(node));
        node_[r] = id;
      }
    }
  }

  std::vector<int> uf_;
  std::vector<int> size_;
  std::vector<int> node_;
  std::vector<std::vector<int>> pending_children_;
  std::vector<std::vector<std::int32_t>> pending_pixels_;
  std::vector<Node> nodes_;
};

std::size_t intersection_size(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  std::size_t i = 0, j = 0, n = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++n;
      ++i;
      ++j;
    }
  }
  return n;
}

bool canonical_less(const std::vector<std::int32_t>& a, const std::vector<std::int32_t>& b) {
  if (a.size() != b.size()) return a.size() > b.size();
  return a.front() < b.front();
}

}  // namespace

std::vector<ExtremalRegion> extract_extremal_regions(const GrayImage& img, Polarity polarity,
                                                     const MserParams& params) {
  params.validate();
  if (img.empty()) return {};
  const GrayImage work = polarity == Polarity::Dark ? img : invert(img);
  const ComponentTree tree(work);
  const auto& nodes = tree.nodes();
  const int max_area = params.resolved_max_area(img);

  std::vector<double> q(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    int top = static_cast<int>(i);
    const int limit = nodes[i].level + params.delta;
    while (nodes[top].parent >= 0 && nodes[nodes[top].parent].level <= limit) top = nodes[top].parent;
    q[i] = static_cast<double>(nodes[top].area - nodes[i].area) / nodes[i].area;
  }

  auto largest_child = [&](int i) {
    int largest = -1;
    for (int c : nodes[i].children)
      if (largest < 0 || nodes[c].area > nodes[largest].area) largest = c;
    return largest;
  };

  std::vector<ExtremalRegion> out;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (!(q[i] < params.max_variation)) continue;
    const int below = largest_child(static_cast<int>(i));
    if (below >= 0 && !(q[i] < q[below])) continue;
    // A run of equal variation up the branch is one flat minimum; it is
    // represented by the node closest to the run's middle level.
    int top = static_cast<int>(i);
    while (nodes[top].parent >= 0 && q[nodes[top].parent] == q[i] &&
           largest_child(nodes[top].parent) == top)
      top = nodes[top].parent;
    if (nodes[top].parent >= 0 && q[nodes[top].parent] < q[i]) continue;
    const double mid = 0.5 * (nodes[i].level + nodes[top].level);
    int pick = -1;
    for (int k = static_cast<int>(i);; k = nodes[k].parent) {
      const int area = nodes[k].area;
      const bool fits = area >= params.min_area && area <= max_area && static_cast<std::size_t>(area) < img.size();
      if (fits && (pick < 0 || std::abs(nodes[k].level - mid) < std::abs(nodes[pick].level - mid))) pick = k;
      if (k == top) break;
    }
    if (pick < 0) continue;
    const Node& n = nodes[pick];

    ExtremalRegion r;
    r.polarity = polarity;
    r.level = polarity == Polarity::Dark ? n.level : 255 - n.level;
    r.variation = q[pick];
    r.pixels = tree.pixels(pick);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<std::vector<std::int32_t>> merge_overlapping(std::vector<std::vector<std::int32_t>> regions,
                                                         double threshold) {
  std::erase_if(regions, [](const auto& r) { return r.empty(); });
  std::sort(regions.begin(), regions.end(), canonical_less);
  std::vector<std::vector<std::int32_t>> kept;
  for (auto& r : regions) {
    bool merged = false;
    for (auto& k : kept) {
      const std::size_t inter = intersection_size(k, r);
      if (inter == 0) continue;
      const double iou = static_cast<double>(inter) / static_cast<double>(k.size() + r.size() - inter);
      if (iou > threshold) {
        std::vector<std::int32_t> u;
        u.reserve(k.size() + r.size() - inter);
        std::set_union(k.begin(), k.end(), r.begin(), r.end(), std::back_inserter(u));
        k = std::move(u);
        merged = true;
        break;
      }
    }
    if (!merged) kept.push_back(std::move(r));
  }
  std::sort(kept.begin(), kept.end(), canonical_less);
  return kept;
}

RegionMap mser_segment(const GrayImage& img, const MserParams& params) {
  params.validate();
  RegionMap map;
  map.width = img.width();
  map.height = img.height();
  map.label.assign(img.size(), 0);

  std::vector<std::vector<std::int32_t>> sets;
  for (Polarity pol : {Polarity::Dark, Polarity::Light}) {
    for (auto& r : extract_extremal_regions(img, pol, params)) sets.push_back(std::move(r.pixels));
  }
  sets = merge_overlapping(std::move(sets), params.overlap_merge_threshold);

  // Larger regions are painted first so every pixel ends up in the smallest
  // region containing it. Regions left with too few pixels are dropped and
  // the partition is redone.
  std::vector<char> active(sets.size(), 1);
  std::vector<std::int32_t> paint(img.size(), 0);
  for (;;) {
    std::fill(paint.begin(), paint.end(), 0);
    for (std::size_t i = 0; i < sets.size(); ++i)
      if (active[i])
        for (std::int32_t p : sets[i]) paint[p] = static_cast<std::int32_t>(i + 1);
    std::vector<int> counts(sets.size() + 1, 0);
    for (std::int32_t v : paint) ++counts[v];
    bool changed = false;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (active[i] && counts[i + 1] < params.min_area) {
        active[i] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<int> new_id(sets.size() + 1, 0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    if (!active[i]) continue;
    Region r;
    r.id = static_cast<int>(map.regions.size()) + 1;
    new_id[i + 1] = r.id;
    map.regions.push_back(std::move(r));
  }
  const auto px = img.pixels();
  for (std::size_t p = 0; p < paint.size(); ++p) {
    const int id = new_id[paint[p]];
    map.label[p] = id;
    if (id > 0) map.regions[id - 1].pixels.push_back(static_cast<std::int32_t>(p));
  }
  for (Region& r : map.regions) {
    r.area = static_cast<int>(r.pixels.size());
    r.bbox = {std::numeric_limits<int>::max(), std::numeric_limits<int>::max(), -1, -1};
    double sum = 0.0, sx = 0.0, sy = 0.0;
    for (std::int32_t p : r.pixels) {
      const int x = p % map.width, y = p / map.width;
      r.bbox.min_x = std::min(r.bbox.min_x, x);
      r.bbox.min_y = std::min(r.bbox.min_y, y);
      r.bbox.max_x = std::max(r.bbox.max_x, x);
      r.bbox.max_y = std::max(r.bbox.max_y, y);
      sum += px[p];
      sx += x;
      sy += y;
    }
    r.mean_intensity = sum / r.area;
    r.centroid_x = sx / r.area;
    r.centroid_y = sy / r.area;
  }
  return map;
}

std::optional<int> region_at(const RegionMap& map, double x, double y) {
  const double fx = std::floor(x + 0.5), fy = std::floor(y + 0.5);
  if (!(fx >= 0 && fy >= 0 && fx < map.width && fy < map.height)) {
    fail(ErrorKind::InvalidParameter, "region_at: point outside the image");
  }
  const int id = map.label[static_cast<std::size_t>(fy) * map.width + static_cast<std::size_t>(fx)];
  if (id == 0) return std::nullopt;
  return id;
}

GrayImage label_image(const RegionMap& map) {
  GrayImage out(map.width, map.height);
  auto px = out.pixels();
  for (std::size_t i = 0; i < map.label.size(); ++i) {
    const int id = map.label[i];
    px[i] = id == 0 ? 0 : static_cast<std::uint8_t>((id - 1) % 255 + 1);
  }
  return out;
}

void write_region_dump(const RegionMap& map, const std::filesystem::path& label_pgm,
                       const std::filesystem::path& sidecar) {
  write_pgm(label_image(map), label_pgm);
  std::ofstream out(sidecar);
  if (!out) fail(ErrorKind::Io, "cannot write " + sidecar.string());
  for (const Region& r : map.regions) {
    out << r.id << ' ' << r.area << ' ' << r.bbox.min_x << ' ' << r.bbox.min_y << ' ' << r.bbox.max_x << ' '
        << r.bbox.max_y << '\n';
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + sidecar.string());
}

}  // namespace armatch
