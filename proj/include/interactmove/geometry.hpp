#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <map>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "interactmove/core.hpp"

namespace interactmove {

// A point set with optional per-point unit normals. When normals are present
// there is exactly one per point.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_normals() const { return !normals.empty() && normals.size() == points.size(); }

  void append(const Vec3& p) { points.push_back(p); }
  void append(const Vec3& p, const Vec3& n) {
    points.push_back(p);
    normals.push_back(n);
  }

  void append(const PointCloud& other) {
    points.insert(points.end(), other.points.begin(), other.points.end());
    normals.insert(normals.end(), other.normals.begin(), other.normals.end());
  }

  PointCloud transformed(const RigidTransform& pose) const {
    PointCloud out;
    out.points.reserve(points.size());
    for (const auto& p : points) out.points.push_back(pose.apply(p));
    out.normals.reserve(normals.size());
    for (const auto& n : normals) out.normals.push_back(pose.apply_direction(n));
    return out;
  }

  Aabb bounds() const {
    Aabb box = Aabb::empty();
    for (const auto& p : points) box.extend(p);
    return box;
  }

  Vec3 centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points) c += p;
    return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
  }
};

inline void validate_normals(const PointCloud& cloud, double tol = 1e-6) {
  if (cloud.normals.empty()) return;
  require(cloud.normals.size() == cloud.points.size(), "normal count does not match point count");
  for (std::size_t i = 0; i < cloud.normals.size(); ++i) {
    if (std::abs(cloud.normals[i].norm() - 1.0) > tol) {
      throw ValidationError("normal " + std::to_string(i) + " is not unit length");
    }
  }
}

// ---------------------------------------------------------------------------
// Triangle meshes

using Face = std::array<int, 3>;

struct TriMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;
  std::vector<Vec3> vertex_normals;

  Aabb bounds() const {
    Aabb box = Aabb::empty();
    for (const auto& v : vertices) box.extend(v);
    return box;
  }

  TriMesh transformed(const RigidTransform& pose) const {
    TriMesh out = *this;
    for (auto& v : out.vertices) v = pose.apply(v);
    for (auto& n : out.vertex_normals) n = pose.apply_direction(n);
    return out;
  }
};

// Raised when a vertex has no incident face area, so no normal can be formed.
class DegenerateVertexError : public ValidationError {
 public:
  explicit DegenerateVertexError(std::vector<int> vertices)
      : ValidationError(describe(vertices)), vertices_(std::move(vertices)) {}
  const std::vector<int>& vertices() const { return vertices_; }

 private:
  static std::string describe(const std::vector<int>& vertices) {
    std::ostringstream oss;
    oss << "zero-area normal at vertices:";
    for (int v : vertices) oss << ' ' << v;
    return oss.str();
  }
  std::vector<int> vertices_;
};

// Unnormalized face normal; its length is twice the triangle area.
inline Vec3 face_area_normal(const TriMesh& mesh, const Face& f) {
  const Vec3& a = mesh.vertices[static_cast<std::size_t>(f[0])];
  const Vec3& b = mesh.vertices[static_cast<std::size_t>(f[1])];
  const Vec3& c = mesh.vertices[static_cast<std::size_t>(f[2])];
  return (b - a).cross(c - a);
}

// Each vertex normal is the normalized sum of incident face normals weighted
// by face area.
inline TriMesh compute_vertex_normals(TriMesh mesh) {
  require(!mesh.faces.empty(), "mesh has no faces");
  std::vector<Vec3> acc(mesh.vertices.size(), Vec3::Zero());
  for (const auto& f : mesh.faces) {
    const Vec3 n = face_area_normal(mesh, f);
    for (int idx : f) acc[static_cast<std::size_t>(idx)] += n;
  }
  std::vector<int> degenerate;
  mesh.vertex_normals.assign(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double len = acc[i].norm();
    if (!(len > 1e-300)) {
      degenerate.push_back(static_cast<int>(i));
      continue;
    }
    mesh.vertex_normals[i] = acc[i] / len;
  }
  if (!degenerate.empty()) throw DegenerateVertexError(std::move(degenerate));
  return mesh;
}

// Validates indices, drops zero-area faces and fills vertex normals.
inline TriMesh make_trimesh(std::vector<Vec3> vertices, const std::vector<Face>& faces) {
  TriMesh mesh;
  mesh.vertices = std::move(vertices);
  for (const auto& v : mesh.vertices) require(is_finite(v), "mesh vertex is not finite");
  const int n = static_cast<int>(mesh.vertices.size());
  for (const auto& f : faces) {
    for (int idx : f) {
      if (idx < 0 || idx >= n) throw ValidationError("face index " + std::to_string(idx) + " out of range");
    }
    if (face_area_normal(mesh, f).norm() > 1e-14) mesh.faces.push_back(f);
  }
  return compute_vertex_normals(std::move(mesh));
}

// Axis-aligned box centred on the origin with outward counter-clockwise faces.
// Every face is split along the diagonal joining its two even-parity corners,
// so each corner receives the same face area from its three faces.
inline TriMesh make_box_mesh(const Vec3& half_extent) {
  std::vector<Vec3> v;
  for (int i = 0; i < 8; ++i) {
    v.emplace_back((i & 1) ? half_extent.x() : -half_extent.x(), (i & 2) ? half_extent.y() : -half_extent.y(),
                   (i & 4) ? half_extent.z() : -half_extent.z());
  }
  auto even = [](int c) { return std::popcount(static_cast<unsigned>(c)) % 2 == 0; };
  std::vector<Face> faces;
  for (int axis = 0; axis < 3; ++axis) {
    for (int side = 0; side < 2; ++side) {
      std::vector<int> corners;
      for (int c = 0; c < 8; ++c) {
        if (((c >> axis) & 1) == side) corners.push_back(c);
      }
      std::vector<int> diag, off;
      for (int c : corners) (even(c) ? diag : off).push_back(c);
      Vec3 outward = Vec3::Zero();
      outward[axis] = side ? 1.0 : -1.0;
      for (int o : off) {
        Face f{diag[0], diag[1], o};
        const Vec3 n = (v[static_cast<std::size_t>(f[1])] - v[static_cast<std::size_t>(f[0])])
                           .cross(v[static_cast<std::size_t>(f[2])] - v[static_cast<std::size_t>(f[0])]);
        if (n.dot(outward) < 0.0) std::swap(f[1], f[2]);
        faces.push_back(f);
      }
    }
  }
  return make_trimesh(std::move(v), faces);
}

inline TriMesh make_icosphere(int subdivisions, double radius) {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                         {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1}};
  std::vector<Face> faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                             {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                             {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  for (auto& p : v) p.normalize();
  for (int s = 0; s < subdivisions; ++s) {
    std::vector<Face> next;
    std::map<std::pair<int, int>, int> cache;
    auto midpoint = [&](int a, int b) {
      const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
      if (auto it = cache.find(key); it != cache.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      const int idx = static_cast<int>(v.size()) - 1;
      cache.emplace(key, idx);
      return idx;
    };
    for (const auto& f : faces) {
      const int ab = midpoint(f[0], f[1]);
      const int bc = midpoint(f[1], f[2]);
      const int ca = midpoint(f[2], f[0]);
      next.push_back({f[0], ab, ca});
      next.push_back({f[1], bc, ab});
      next.push_back({f[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    faces = std::move(next);
  }
  for (auto& p : v) p *= radius;
  return make_trimesh(std::move(v), faces);
}

// Regular samples on each face of an axis-aligned box (centred on the origin),
// inset half a spacing from the edges, with the face normal attached.
inline PointCloud box_surface_points(const Vec3& half_extent, double spacing) {
  require(spacing > 0.0, "sample spacing must be positive");
  PointCloud out;
  for (int axis = 0; axis < 3; ++axis) {
    const int u = (axis + 1) % 3;
    const int w = (axis + 2) % 3;
    const int nu = std::max(1, static_cast<int>(std::ceil(2.0 * half_extent[u] / spacing)));
    const int nw = std::max(1, static_cast<int>(std::ceil(2.0 * half_extent[w] / spacing)));
    for (int sign : {-1, 1}) {
      Vec3 n = Vec3::Zero();
      n[axis] = sign;
      for (int i = 0; i < nu; ++i) {
        for (int j = 0; j < nw; ++j) {
          Vec3 p;
          p[axis] = sign * half_extent[axis];
          p[u] = -half_extent[u] + (i + 0.5) * 2.0 * half_extent[u] / nu;
          p[w] = -half_extent[w] + (j + 0.5) * 2.0 * half_extent[w] / nw;
          out.append(p, n);
        }
      }
    }
  }
  return out;
}

// Regular samples on the rectangle [lo, hi] of a plane with fixed coordinate
// `axis` = `offset`, normal along +/- axis.
inline PointCloud plane_patch_points(int axis, double offset, int normal_sign, const Vec3& lo, const Vec3& hi,
                                     double spacing) {
  require(spacing > 0.0, "sample spacing must be positive");
  PointCloud out;
  const int u = (axis + 1) % 3;
  const int w = (axis + 2) % 3;
  const int nu = std::max(1, static_cast<int>(std::ceil((hi[u] - lo[u]) / spacing)));
  const int nw = std::max(1, static_cast<int>(std::ceil((hi[w] - lo[w]) / spacing)));
  Vec3 n = Vec3::Zero();
  n[axis] = normal_sign;
  for (int i = 0; i < nu; ++i) {
    for (int j = 0; j < nw; ++j) {
      Vec3 p;
      p[axis] = offset;
      p[u] = lo[u] + (i + 0.5) * (hi[u] - lo[u]) / nu;
      p[w] = lo[w] + (j + 0.5) * (hi[w] - lo[w]) / nw;
      out.append(p, n);
    }
  }
  return out;
}

// Area-weighted random surface samples carrying the face normal.
inline PointCloud sample_surface(const TriMesh& mesh, std::size_t count, Rng& rng) {
  require(!mesh.faces.empty(), "mesh has no faces");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& f : mesh.faces) {
    total += 0.5 * face_area_normal(mesh, f).norm();
    cumulative.push_back(total);
  }
  PointCloud out;
  for (std::size_t s = 0; s < count; ++s) {
    const double r = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
    const std::size_t fi = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), mesh.faces.size() - 1);
    const Face& f = mesh.faces[fi];
    double a = uniform01(rng);
    double b = uniform01(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec3& p0 = mesh.vertices[static_cast<std::size_t>(f[0])];
    const Vec3& p1 = mesh.vertices[static_cast<std::size_t>(f[1])];
    const Vec3& p2 = mesh.vertices[static_cast<std::size_t>(f[2])];
    out.append(p0 + a * (p1 - p0) + b * (p2 - p0), face_area_normal(mesh, f).normalized());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Voxel occupancy

class VoxelGrid {
 public:
  VoxelGrid() = default;
  VoxelGrid(const Vec3& origin, double resolution, const std::array<int, 3>& dims)
      : origin_(origin), resolution_(resolution), dims_(dims) {
    require(resolution > 0.0 && std::isfinite(resolution), "voxel resolution must be positive");
    require(dims[0] > 0 && dims[1] > 0 && dims[2] > 0, "voxel dims must be positive");
    require(is_finite(origin), "voxel origin must be finite");
    occupancy_.assign(static_cast<std::size_t>(dims[0]) * dims[1] * dims[2], 0);
  }

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const std::array<int, 3>& dims() const { return dims_; }
  const std::vector<std::uint8_t>& occupancy() const { return occupancy_; }

  bool in_range(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
  }

  std::size_t linear_index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * dims_[1] + j) * dims_[2] + k;
  }

  bool occupied(int i, int j, int k) const { return occupancy_[linear_index(i, j, k)] != 0; }
  // Out-of-range cells read as empty.
  std::uint8_t value_or_empty(int i, int j, int k) const { return in_range(i, j, k) ? occupancy_[linear_index(i, j, k)] : 0; }
  void set(int i, int j, int k, bool value) { occupancy_[linear_index(i, j, k)] = value ? 1 : 0; }

  std::size_t occupied_count() const {
    return static_cast<std::size_t>(std::count(occupancy_.begin(), occupancy_.end(), std::uint8_t{1}));
  }

  // Lower corner of cell index `i` along `axis`.
  double cell_lower(int axis, int i) const { return origin_[axis] + i * resolution_; }

 private:
  Vec3 origin_ = Vec3::Zero();
  double resolution_ = 1.0;
  std::array<int, 3> dims_{1, 1, 1};
  std::vector<std::uint8_t> occupancy_;
};

namespace detail {

// Cell index of coordinate `x` in the half-open convention
// lower(i) <= x < lower(i + 1), where lower(i) = origin + i * res is evaluated
// exactly as written. The floor estimate is corrected so that boundary
// rounding never disagrees with that comparison.
inline long cell_of(double x, double origin, double res) {
  long i = static_cast<long>(std::floor((x - origin) / res));
  while (x < origin + static_cast<double>(i) * res) --i;
  while (x >= origin + static_cast<double>(i + 1) * res) ++i;
  return i;
}

}  // namespace detail

inline VoxelGrid voxelize(const PointCloud& cloud, const Vec3& origin, double resolution, const std::array<int, 3>& dims) {
  VoxelGrid grid(origin, resolution, dims);
  for (const auto& p : cloud.points) {
    if (!is_finite(p)) throw ValidationError("voxelize: non-finite input point");
    std::array<long, 3> idx{};
    bool inside = true;
    for (int a = 0; a < 3 && inside; ++a) {
      idx[static_cast<std::size_t>(a)] = detail::cell_of(p[a], origin[a], resolution);
      inside = idx[static_cast<std::size_t>(a)] >= 0 && idx[static_cast<std::size_t>(a)] < dims[static_cast<std::size_t>(a)];
    }
    if (inside) grid.set(static_cast<int>(idx[0]), static_cast<int>(idx[1]), static_cast<int>(idx[2]), true);
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Nearest neighbours

struct NearestResult {
  std::size_t index = 0;
  double distance = 0.0;
};

// Static kd-tree over a point set. Queries return exactly what an exhaustive
// scan returns, with ties going to the lowest point index.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::vector<Vec3> points) : points_(std::move(points)) {
    for (const auto& p : points_) require(is_finite(p), "spatial index: non-finite point");
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    if (!points_.empty()) build(0, points_.size());
  }
  explicit SpatialIndex(const PointCloud& cloud) : SpatialIndex(cloud.points) {}

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const std::vector<Vec3>& points() const { return points_; }

  NearestResult nearest(const Vec3& query) const {
    if (points_.empty()) throw ValidationError("nearest_point: empty index");
    Best best;
    search(0, query, best);
    return {best.index, std::sqrt(best.d2)};
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin = 0, end = 0;  // range in order_
    int axis = -1;                   // -1 marks a leaf
    double split = 0.0;
    std::size_t left = 0, right = 0;
  };

  struct Best {
    double d2 = std::numeric_limits<double>::infinity();
    std::size_t index = std::numeric_limits<std::size_t>::max();
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    const std::size_t id = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return id;
    Aabb box = Aabb::empty();
    for (std::size_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
    int axis = 0;
    box.extent().maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin), order_.begin() + static_cast<std::ptrdiff_t>(mid),
                     order_.begin() + static_cast<std::ptrdiff_t>(end),
                     [&](std::size_t a, std::size_t b) { return points_[a][axis] < points_[b][axis]; });
    const double split = points_[order_[mid]][axis];
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    Node& node = nodes_[id];
    node.axis = axis;
    node.split = split;
    node.left = left;
    node.right = right;
    return id;
  }

  void search(std::size_t id, const Vec3& q, Best& best) const {
    const Node& node = nodes_[id];
    if (node.axis < 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        const std::size_t idx = order_[i];
        const double d2 = (q - points_[idx]).squaredNorm();
        if (d2 < best.d2 || (d2 == best.d2 && idx < best.index)) best = {d2, idx};
      }
      return;
    }
    // Left holds coordinates <= split, right holds coordinates >= split.
    const double diff = q[node.axis] - node.split;
    const std::size_t near = diff <= 0.0 ? node.left : node.right;
    const std::size_t far = diff <= 0.0 ? node.right : node.left;
    search(near, q, best);
    // Visit the far side on equality too, so equidistant lower indices are found.
    if (diff * diff <= best.d2) search(far, q, best);
  }

  std::vector<Vec3> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

inline NearestResult nearest_point(const Vec3& query, const SpatialIndex& index) { return index.nearest(query); }

// True iff `p` lies strictly behind the surface: -n . (p - s) > 0.
inline bool penetration_indicator(const Vec3& p, const Vec3& surface_point, const Vec3& surface_normal, double tol = 1e-6) {
  if (std::abs(surface_normal.norm() - 1.0) > tol) throw ValidationError("penetration_indicator: normal is not unit length");
  return -surface_normal.dot(p - surface_point) > 0.0;
}

// Signed depth behind the surface (positive when penetrating).
inline double penetration_depth(const Vec3& p, const Vec3& surface_point, const Vec3& surface_normal) {
  return -surface_normal.dot(p - surface_point);
}

}  // namespace interactmove
