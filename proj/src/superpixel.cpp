#include "hseg/superpixel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <utility>

namespace hseg {

namespace {

struct Center {
  double x, y, intensity;
};

constexpr double kIntensityScale = 100.0;

double gradient_at(const GrayImage& img, Index x, Index y) {
  const Index w = img.cols(), h = img.rows();
  auto at = [&](Index xx, Index yy) {
    return img(std::clamp<Index>(yy, 0, h - 1), std::clamp<Index>(xx, 0, w - 1));
  };
  const double dx = at(x + 1, y) - at(x - 1, y);
  const double dy = at(x, y + 1) - at(x, y - 1);
  return dx * dx + dy * dy;
}

std::vector<Center> seed_centers(const GrayImage& img, int k) {
  const Index w = img.cols(), h = img.rows();
  const double step = std::sqrt(static_cast<double>(w * h) / k);
  const Index ny = std::clamp<Index>(std::lround(static_cast<double>(h) / step), 1, h);
  const Index nx = std::clamp<Index>(std::lround(static_cast<double>(k) / static_cast<double>(ny)), 1, w);
  std::vector<Center> centers;
  centers.reserve(static_cast<std::size_t>(nx * ny));
  for (Index j = 0; j < ny; ++j) {
    for (Index i = 0; i < nx; ++i) {
      Index cx = static_cast<Index>((i + 0.5) * static_cast<double>(w) / static_cast<double>(nx));
      Index cy = static_cast<Index>((j + 0.5) * static_cast<double>(h) / static_cast<double>(ny));
      // Move off edges onto the flattest pixel of the 3x3 neighbourhood.
      double best = gradient_at(img, cx, cy);
      Index bx = cx, by = cy;
      for (Index dy = -1; dy <= 1; ++dy)
        for (Index dx = -1; dx <= 1; ++dx) {
          const Index xx = cx + dx, yy = cy + dy;
          if (xx < 0 || yy < 0 || xx >= w || yy >= h) continue;
          const double g = gradient_at(img, xx, yy);
          if (g < best) {
            best = g;
            bx = xx;
            by = yy;
          }
        }
      centers.push_back({static_cast<double>(bx), static_cast<double>(by), img(by, bx) * kIntensityScale});
    }
  }
  return centers;
}

AssignmentImage cluster(const GrayImage& img, std::vector<Center>& centers, double step,
                        const SlicOptions& opt) {
  const Index w = img.cols(), h = img.rows();
  const Index radius = static_cast<Index>(std::ceil(step));
  const double spatial_weight = (opt.compactness * opt.compactness) / (step * step);

  AssignmentImage labels = AssignmentImage::Constant(h, w, -1);
  Eigen::ArrayXXd dist(h, w);
  std::vector<double> sx(centers.size()), sy(centers.size()), si(centers.size());
  std::vector<Index> count(centers.size());

  for (int it = 0; it < std::max(opt.iterations, 1); ++it) {
    dist.setConstant(std::numeric_limits<double>::infinity());
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const auto& ctr = centers[c];
      const Index cx = std::lround(ctr.x), cy = std::lround(ctr.y);
      const Index x0 = std::max<Index>(0, cx - radius), x1 = std::min<Index>(w - 1, cx + radius);
      const Index y0 = std::max<Index>(0, cy - radius), y1 = std::min<Index>(h - 1, cy + radius);
      for (Index y = y0; y <= y1; ++y)
        for (Index x = x0; x <= x1; ++x) {
          const double di = img(y, x) * kIntensityScale - ctr.intensity;
          const double ddx = static_cast<double>(x) - ctr.x, ddy = static_cast<double>(y) - ctr.y;
          const double d = di * di + (ddx * ddx + ddy * ddy) * spatial_weight;
          if (d < dist(y, x)) {
            dist(y, x) = d;
            labels(y, x) = static_cast<int>(c);
          }
        }
    }

    // Pixels outside every window (only possible on very elongated grids)
    // fall back to the globally nearest center.
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        if (labels(y, x) >= 0) continue;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < centers.size(); ++c) {
          const double di = img(y, x) * kIntensityScale - centers[c].intensity;
          const double ddx = static_cast<double>(x) - centers[c].x, ddy = static_cast<double>(y) - centers[c].y;
          const double d = di * di + (ddx * ddx + ddy * ddy) * spatial_weight;
          if (d < best) {
            best = d;
            labels(y, x) = static_cast<int>(c);
          }
        }
      }

    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sy.begin(), sy.end(), 0.0);
    std::fill(si.begin(), si.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (Index y = 0; y < h; ++y)
      for (Index x = 0; x < w; ++x) {
        const auto c = static_cast<std::size_t>(labels(y, x));
        sx[c] += static_cast<double>(x);
        sy[c] += static_cast<double>(y);
        si[c] += img(y, x) * kIntensityScale;
        ++count[c];
      }
    for (std::size_t c = 0; c < centers.size(); ++c) {
      if (count[c] == 0) continue;
      const double n = static_cast<double>(count[c]);
      centers[c] = {sx[c] / n, sy[c] / n, si[c] / n};
    }
  }
  return labels;
}

/// Splits clusters into 4-connected components and merges the stray ones.
AssignmentImage enforce_connectivity(const AssignmentImage& labels, int num_clusters, double min_size) {
  const Index w = labels.cols(), h = labels.rows();
  const Index n = w * h;
  const int* lab = labels.data();

  // Component labelling.
  std::vector<int> comp(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<Index>> members;
  std::vector<int> comp_cluster;
  std::vector<Index> stack;
  for (Index p = 0; p < n; ++p) {
    if (comp[p] >= 0) continue;
    const int id = static_cast<int>(members.size());
    members.emplace_back();
    comp_cluster.push_back(lab[p]);
    comp[p] = id;
    stack.assign(1, p);
    while (!stack.empty()) {
      const Index q = stack.back();
      stack.pop_back();
      members[id].push_back(q);
      const Index qx = q % w, qy = q / w;
      const Index nb[4] = {qx > 0 ? q - 1 : -1, qx + 1 < w ? q + 1 : -1, qy > 0 ? q - w : -1,
                           qy + 1 < h ? q + w : -1};
      for (Index r : nb)
        if (r >= 0 && comp[r] < 0 && lab[r] == lab[p]) {
          comp[r] = id;
          stack.push_back(r);
        }
    }
  }
  const int num_comps = static_cast<int>(members.size());

  std::vector<int> largest(static_cast<std::size_t>(num_clusters), -1);
  for (int c = 0; c < num_comps; ++c) {
    int& best = largest[static_cast<std::size_t>(comp_cluster[c])];
    if (best < 0 || members[c].size() > members[best].size()) best = c;
  }

  std::vector<int> parent(static_cast<std::size_t>(num_comps));
  std::vector<Index> size(static_cast<std::size_t>(num_comps));
  std::vector<bool> kept(static_cast<std::size_t>(num_comps));
  std::set<std::pair<Index, int>> pending;
  for (int c = 0; c < num_comps; ++c) {
    parent[c] = c;
    size[c] = static_cast<Index>(members[c].size());
    kept[c] = largest[static_cast<std::size_t>(comp_cluster[c])] == c || static_cast<double>(size[c]) >= min_size;
    if (!kept[c]) pending.insert({size[c], c});
  }
  auto find = [&](int c) {
    while (parent[c] != c) c = parent[c] = parent[parent[c]];
    return c;
  };

  while (!pending.empty()) {
    const auto [sz, r] = *pending.begin();
    pending.erase(pending.begin());
    int target = -1;
    for (Index q : members[r]) {
      const Index qx = q % w, qy = q / w;
      const Index nb[4] = {qx > 0 ? q - 1 : -1, qx + 1 < w ? q + 1 : -1, qy > 0 ? q - w : -1,
                           qy + 1 < h ? q + w : -1};
      for (Index s : nb) {
        if (s < 0) continue;
        const int t = find(comp[s]);
        if (t == r) continue;
        if (target < 0 || size[t] > size[target] || (size[t] == size[target] && t < target)) target = t;
      }
    }
    if (target < 0) continue;  // whole image is this region
    if (!kept[target]) pending.erase({size[target], target});
    parent[r] = target;
    size[target] += sz;
    if (members[r].size() > members[target].size()) std::swap(members[r], members[target]);
    members[target].insert(members[target].end(), members[r].begin(), members[r].end());
    members[r].clear();
    members[r].shrink_to_fit();
    if (!kept[target]) pending.insert({size[target], target});
  }

  // Dense relabel in scan order.
  AssignmentImage out(h, w);
  std::vector<int> dense(static_cast<std::size_t>(num_comps), -1);
  int next = 0;
  for (Index p = 0; p < n; ++p) {
    const int root = find(comp[p]);
    if (dense[root] < 0) dense[root] = next++;
    out.data()[p] = dense[root];
  }
  return out;
}

}  // namespace

SuperpixelMap slic(const GrayImage& img, int k, const SlicOptions& options) {
  const Index pixels = img.size();
  if (pixels == 0) throw std::invalid_argument("slic: empty image");
  if (k < 1) throw std::invalid_argument("slic: superpixel count must be >= 1, got " + std::to_string(k));
  if (k > pixels)
    throw std::invalid_argument("slic: superpixel count " + std::to_string(k) + " exceeds pixel count " +
                                std::to_string(pixels));
  if (!(options.compactness > 0.0)) throw std::invalid_argument("slic: compactness must be positive");

  const double step = std::sqrt(static_cast<double>(pixels) / k);
  auto centers = seed_centers(img, k);
  const auto labels = cluster(img, centers, step, options);
  return map_from_assignment(enforce_connectivity(labels, static_cast<int>(centers.size()), step * step / 4.0));
}

SuperpixelMap map_from_assignment(const AssignmentImage& assignment) {
  SuperpixelMap map;
  map.width = static_cast<int>(assignment.cols());
  map.height = static_cast<int>(assignment.rows());
  map.assignment = assignment;
  if (assignment.size() == 0) return map;
  if (assignment.minCoeff() < 0) throw std::invalid_argument("assignment has negative ids");
  const int n = assignment.maxCoeff() + 1;
  map.superpixels.resize(static_cast<std::size_t>(n));
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) map.superpixels[assignment(y, x)].members.push_back({x, y});
  for (int i = 0; i < n; ++i) {
    auto& sp = map.superpixels[i];
    sp.id = i;
    if (sp.members.empty()) throw std::invalid_argument("assignment ids are not dense: " + std::to_string(i) + " unused");
    Eigen::Vector2d sum = Eigen::Vector2d::Zero();
    for (const auto& m : sp.members) sum += Eigen::Vector2d(m.x, m.y);
    sp.centroid = sum / static_cast<double>(sp.members.size());
  }
  return map;
}

std::vector<PixelCoord> centroids(const SuperpixelMap& map) {
  std::vector<PixelCoord> out;
  out.reserve(map.superpixels.size());
  for (const auto& sp : map.superpixels) {
    const int x = static_cast<int>(std::floor(sp.centroid.x() + 0.5));
    const int y = static_cast<int>(std::floor(sp.centroid.y() + 0.5));
    out.push_back({std::clamp(x, 0, map.width - 1), std::clamp(y, 0, map.height - 1)});
  }
  return out;
}

bool is_partition(const SuperpixelMap& map) {
  if (map.assignment.rows() != map.height || map.assignment.cols() != map.width) return false;
  std::size_t total = 0;
  for (std::size_t i = 0; i < map.superpixels.size(); ++i) {
    const auto& sp = map.superpixels[i];
    if (sp.id != static_cast<int>(i) || sp.members.empty()) return false;
    for (const auto& m : sp.members) {
      if (m.x < 0 || m.y < 0 || m.x >= map.width || m.y >= map.height) return false;
      if (map.assignment(m.y, m.x) != sp.id) return false;
    }
    total += sp.members.size();
  }
  return total == static_cast<std::size_t>(map.width) * static_cast<std::size_t>(map.height);
}

bool is_contiguous(const SuperpixelMap& map) {
  const int w = map.width, h = map.height;
  std::vector<bool> seen(static_cast<std::size_t>(w) * h, false);
  std::vector<PixelCoord> stack;
  for (const auto& sp : map.superpixels) {
    if (sp.members.empty()) return false;
    std::size_t reached = 0;
    stack.assign(1, sp.members.front());
    seen[static_cast<std::size_t>(sp.members.front().y) * w + sp.members.front().x] = true;
    while (!stack.empty()) {
      const auto p = stack.back();
      stack.pop_back();
      ++reached;
      const PixelCoord nb[4] = {{p.x - 1, p.y}, {p.x + 1, p.y}, {p.x, p.y - 1}, {p.x, p.y + 1}};
      for (const auto& q : nb) {
        if (q.x < 0 || q.y < 0 || q.x >= w || q.y >= h) continue;
        const auto qi = static_cast<std::size_t>(q.y) * w + q.x;
        if (seen[qi] || map.assignment(q.y, q.x) != sp.id) continue;
        seen[qi] = true;
        stack.push_back(q);
      }
    }
    if (reached != sp.members.size()) return false;
  }
  return true;
}

Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> boundary_mask(const SuperpixelMap& map) {
  Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> mask =
      Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(map.height, map.width, false);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const int id = map.assignment(y, x);
      if ((x + 1 < map.width && map.assignment(y, x + 1) != id) ||
          (y + 1 < map.height && map.assignment(y + 1, x) != id))
        mask(y, x) = true;
    }
  return mask;
}

void write_assignment_png(const SuperpixelMap& map, const std::filesystem::path& path) {
  if (map.size() > 65536) throw std::invalid_argument("too many superpixels for a 16-bit PNG");
  std::vector<std::uint16_t> ids(static_cast<std::size_t>(map.assignment.size()));
  for (Index i = 0; i < map.assignment.size(); ++i) ids[i] = static_cast<std::uint16_t>(map.assignment.data()[i]);
  write_png16(path, map.width, map.height, ids);
}

void write_boundary_overlay(const GrayImage& img, const SuperpixelMap& map, const std::filesystem::path& path) {
  if (img.cols() != map.width || img.rows() != map.height)
    throw std::invalid_argument("overlay: image and superpixel map sizes differ");
  const auto mask = boundary_mask(map);
  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(img.size()) * 3);
  for (Index i = 0; i < img.size(); ++i) {
    const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(img.data()[i], 0.0, 1.0) * 255.0));
    const bool edge = mask.data()[i];
    rgb[3 * i] = edge ? 255 : g;
    rgb[3 * i + 1] = edge ? 0 : g;
    rgb[3 * i + 2] = edge ? 0 : g;
  }
  write_png(path, map.width, map.height, 3, rgb);
}

}  // namespace hseg
