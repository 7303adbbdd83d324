#pragma once

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "interactmove/affordance.hpp"
#include "interactmove/alignment.hpp"
#include "interactmove/metrics.hpp"

namespace interactmove {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Array container, little-endian:
//   "IMAR" | u32 version | u32 rank | rank x (u32 name length, name, u64 dim) | f64 payload

inline constexpr char kArrayMagic[4] = {'I', 'M', 'A', 'R'};
inline constexpr std::uint32_t kArrayVersion = 1;

struct NamedArray {
  std::vector<std::string> axes;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;  // row-major over `dims`

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  bool operator==(const NamedArray&) const = default;
};

inline void validate_array(const NamedArray& a) {
  require(a.axes.size() == a.dims.size(), "array axis names and dims disagree");
  require(a.element_count() == a.data.size(), "array payload does not match its dims");
}

namespace detail {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw ValidationError("array file is truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  pos += sizeof(T);
  return static_cast<T>(v);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace detail

inline std::string encode_array(const NamedArray& a) {
  validate_array(a);
  std::string out(kArrayMagic, 4);
  detail::put_le<std::uint32_t>(out, kArrayVersion);
  detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
  for (std::size_t i = 0; i < a.dims.size(); ++i) {
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.axes[i].size()));
    out += a.axes[i];
    detail::put_le<std::uint64_t>(out, a.dims[i]);
  }
  for (double v : a.data) detail::put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

inline NamedArray decode_array(const std::string& bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kArrayMagic, 4) != 0) throw ValidationError("not an array file (bad magic)");
  std::size_t pos = 4;
  const auto version = detail::get_le<std::uint32_t>(bytes, pos);
  if (version != kArrayVersion) throw ValidationError("unsupported array version " + std::to_string(version));
  const auto rank = detail::get_le<std::uint32_t>(bytes, pos);
  require(rank <= 16, "array rank is implausible");
  NamedArray a;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto len = detail::get_le<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw ValidationError("array file is truncated");
    a.axes.push_back(bytes.substr(pos, len));
    pos += len;
    a.dims.push_back(detail::get_le<std::uint64_t>(bytes, pos));
  }
  const std::uint64_t n = a.element_count();
  if ((bytes.size() - pos) != n * 8) throw ValidationError("array payload size does not match its dims");
  a.data.resize(n);
  for (auto& v : a.data) v = std::bit_cast<double>(detail::get_le<std::uint64_t>(bytes, pos));
  return a;
}

inline void write_array(const std::string& path, const NamedArray& a) { detail::write_file(path, encode_array(a)); }
inline NamedArray read_array(const std::string& path) { return decode_array(detail::read_file(path)); }

inline void expect_axes(const NamedArray& a, const std::vector<std::string>& axes) {
  if (a.axes != axes) {
    std::string want;
    for (const auto& s : axes) want += (want.empty() ? "" : ",") + s;
    throw ValidationError("array axes do not match (" + want + ")");
  }
}

inline NamedArray motion_array(const MotionSequence& m) {
  NamedArray a{{"frame", "joint", "coord"}, {m.frame_count(), m.skeleton.joint_count(), 3}, {}};
  for (const auto& f : m.frames)
    for (const auto& j : f) a.data.insert(a.data.end(), {j.x(), j.y(), j.z()});
  return a;
}

inline MotionSequence motion_from_array(const NamedArray& a, const Skeleton& skeleton = Skeleton::biped(), double fps = 30.0) {
  expect_axes(a, {"frame", "joint", "coord"});
  require(a.dims[1] == skeleton.joint_count() && a.dims[2] == 3, "motion array does not match the skeleton");
  MotionSequence m;
  m.skeleton = skeleton;
  m.fps = fps;
  std::size_t k = 0;
  for (std::uint64_t f = 0; f < a.dims[0]; ++f) {
    Pose p(skeleton.joint_count());
    for (auto& j : p) {
      j = Vec3(a.data[k], a.data[k + 1], a.data[k + 2]);
      k += 3;
    }
    m.frames.push_back(std::move(p));
  }
  validate_motion(m);
  return m;
}

// Per frame: translation then the rotation matrix row by row.
inline NamedArray trajectory_array(const ObjectTrajectory& t) {
  NamedArray a{{"frame", "param"}, {t.frame_count(), 12}, {}};
  for (const auto& p : t.poses) {
    a.data.insert(a.data.end(), {p.translation.x(), p.translation.y(), p.translation.z()});
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) a.data.push_back(p.rotation(r, c));
  }
  return a;
}

inline ObjectTrajectory trajectory_from_array(const NamedArray& a) {
  expect_axes(a, {"frame", "param"});
  require(a.dims[1] == 12, "trajectory array needs 12 parameters per frame");
  ObjectTrajectory t;
  for (std::uint64_t f = 0; f < a.dims[0]; ++f) {
    const double* d = a.data.data() + f * 12;
    RigidTransform p;
    p.translation = Vec3(d[0], d[1], d[2]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) p.rotation(r, c) = d[3 + 3 * r + c];
    require(is_finite(p.translation) && p.rotation.allFinite(), "trajectory contains non-finite values");
    t.poses.push_back(p);
  }
  return t;
}

inline NamedArray affordance_array(const AffordanceTensor& aff) {
  const Tensor3& t = aff.values;
  NamedArray a{{"point", "joint", "frame"},
               {static_cast<std::uint64_t>(t.points), static_cast<std::uint64_t>(t.joints), static_cast<std::uint64_t>(t.frames)},
               std::vector<double>(t.values.data(), t.values.data() + t.values.size())};
  return a;
}

inline AffordanceTensor affordance_from_array(const NamedArray& a, const AffordanceParams& params = {}) {
  expect_axes(a, {"point", "joint", "frame"});
  AffordanceTensor t{Tensor3(static_cast<int>(a.dims[0]), static_cast<int>(a.dims[1]), static_cast<int>(a.dims[2])), params.sigma,
                     params.tau};
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    require(a.data[i] >= 0.0 && a.data[i] <= 1.0, "affordance values must lie in [0, 1]");
    t.values.values[static_cast<Eigen::Index>(i)] = a.data[i];
  }
  return t;
}

// ---------------------------------------------------------------------------
// JSON

inline Json to_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const Json& j) {
  require(j.is_array() && j.size() == 3, "expected a 3-vector");
  const Vec3 v(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  require(is_finite(v), "non-finite coordinate");
  return v;
}

inline Json to_json(const RigidTransform& t) {
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) rows.push_back(Json::array({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)}));
  return {{"translation", to_json(t.translation)}, {"rotation", rows}};
}

inline RigidTransform transform_from_json(const Json& j) {
  RigidTransform t;
  t.translation = vec3_from_json(j.at("translation"));
  const Json& rows = j.at("rotation");
  require(rows.is_array() && rows.size() == 3, "rotation must have 3 rows");
  for (int r = 0; r < 3; ++r) t.rotation.row(r) = vec3_from_json(rows[static_cast<std::size_t>(r)]).transpose();
  return t;
}

inline Json to_json(const Geometry& g) {
  if (const auto* box = std::get_if<BoxShape>(&g)) return {{"type", "box"}, {"half_extent", to_json(box->half_extent)}};
  if (const auto* mesh = std::get_if<TriMesh>(&g)) {
    Json v = Json::array(), f = Json::array();
    for (const auto& p : mesh->vertices) v.push_back(to_json(p));
    for (const auto& face : mesh->faces) f.push_back(Json::array({face[0], face[1], face[2]}));
    return {{"type", "mesh"}, {"vertices", v}, {"faces", f}};
  }
  const auto& cloud = std::get<PointCloud>(g);
  Json p = Json::array(), n = Json::array();
  for (const auto& v : cloud.points) p.push_back(to_json(v));
  for (const auto& v : cloud.normals) n.push_back(to_json(v));
  return {{"type", "points"}, {"points", p}, {"normals", n}};
}

inline Geometry geometry_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "box") return BoxShape{vec3_from_json(j.at("half_extent"))};
  if (type == "mesh") {
    std::vector<Vec3> verts;
    std::vector<Face> faces;
    for (const auto& v : j.at("vertices")) verts.push_back(vec3_from_json(v));
    for (const auto& f : j.at("faces")) faces.push_back({f.at(0).get<int>(), f.at(1).get<int>(), f.at(2).get<int>()});
    return make_trimesh(std::move(verts), faces);
  }
  if (type == "points") {
    PointCloud c;
    for (const auto& v : j.at("points")) c.points.push_back(vec3_from_json(v));
    for (const auto& v : j.value("normals", Json::array())) c.normals.push_back(vec3_from_json(v));
    require(c.normals.empty() || c.normals.size() == c.points.size(), "point geometry needs one normal per point");
    return c;
  }
  throw ValidationError("unknown geometry type '" + type + "'");
}

inline Json to_json(const SceneGraph& s) {
  Json objects = Json::array(), surfaces = Json::array(), relations = Json::array();
  for (const auto& o : s.objects) {
    objects.push_back({{"id", o.id},
                       {"category", o.category},
                       {"geometry", to_json(o.geometry)},
                       {"pose", to_json(o.pose)},
                       {"movable", o.movable},
                       {"support", o.support ? Json(*o.support) : Json(nullptr)}});
  }
  for (const auto& sf : s.surfaces) {
    Json poly = Json::array();
    for (const auto& p : sf.polygon) poly.push_back(to_json(p));
    surfaces.push_back({{"owner", sf.owner}, {"height", sf.height}, {"polygon", poly}});
  }
  for (const auto& r : s.relations) {
    relations.push_back({{"subject", r.subject}, {"relation", std::string(relation_name(r.relation))}, {"anchor", r.anchor}});
  }
  return {{"objects", objects},
          {"surfaces", surfaces},
          {"relations", relations},
          {"bounds", {{"min", to_json(s.bounds.min)}, {"max", to_json(s.bounds.max)}}}};
}

inline SceneGraph scene_from_json(const Json& j) {
  SceneGraph s;
  for (const auto& o : j.at("objects")) {
    SceneObject obj;
    obj.id = o.at("id").get<std::string>();
    obj.category = o.at("category").get<std::string>();
    obj.geometry = geometry_from_json(o.at("geometry"));
    obj.pose = transform_from_json(o.at("pose"));
    obj.movable = o.value("movable", false);
    if (o.contains("support") && !o.at("support").is_null()) obj.support = o.at("support").get<std::size_t>();
    s.objects.push_back(std::move(obj));
  }
  for (const auto& sf : j.value("surfaces", Json::array())) {
    PlacementSurface p;
    p.owner = sf.at("owner").get<std::string>();
    p.height = sf.at("height").get<double>();
    for (const auto& v : sf.at("polygon")) p.polygon.push_back(vec3_from_json(v));
    s.surfaces.push_back(std::move(p));
  }
  for (const auto& r : j.value("relations", Json::array())) {
    s.relations.push_back({r.at("subject").get<std::string>(), relation_from_name(r.at("relation").get<std::string>()),
                           r.at("anchor").get<std::string>()});
  }
  s.bounds = Aabb{vec3_from_json(j.at("bounds").at("min")), vec3_from_json(j.at("bounds").at("max"))};
  validate_scene(s);
  return s;
}

// Parse errors and missing or mistyped fields are validation failures.
template <typename F>
auto with_json_errors(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

inline Json read_json(const std::string& path) {
  const std::string text = detail::read_file(path);
  return with_json_errors(path, [&] { return Json::parse(text); });
}

inline void write_json(const std::string& path, const Json& j) { detail::write_file(path, j.dump(2) + "\n"); }

inline SceneGraph read_scene(const std::string& path) {
  const Json j = read_json(path);
  return with_json_errors(path, [&] { return scene_from_json(j); });
}

inline void write_scene(const std::string& path, const SceneGraph& s) { write_json(path, to_json(s)); }

inline Json to_json(const FilterResult& r) {
  return {{"pass", r.pass}, {"first_frame", r.first_frame}, {"magnitude", r.magnitude}};
}

inline FilterResult filter_result_from_json(const Json& j) {
  return {j.at("pass").get<bool>(), j.at("first_frame").get<int>(), j.at("magnitude").get<double>()};
}

inline Json to_json(const FilterReport& r) {
  return {{"foot", to_json(r.foot)}, {"bounds", to_json(r.bounds)}, {"collision", to_json(r.collision)}};
}

inline Json to_json(const InteractionSpec& s) {
  return {{"action", s.action},
          {"target", s.target_category},
          {"surface", s.surface_category},
          {"relation", std::string(relation_name(s.relation))},
          {"anchor", s.anchor_category}};
}

inline Json to_json(const SynthesisStats& s) {
  return {{"attempted", s.attempted}, {"emitted", s.emitted}, {"rejected_by", s.rejected_by}, {"failures", s.failures}};
}

inline Json to_json(const MetricReport& r) {
  return {{"goal_distance", r.goal_distance},
          {"multimodality", r.multimodality},
          {"physical_realism", r.physical_realism},
          {"non_collision", r.non_collision}};
}

// ---------------------------------------------------------------------------
// Dataset layout
//   <dir>/manifest.json
//   <dir>/scenes/<id>.json
//   <dir>/motions/<id>.motion.imar, <id>.object.imar
//   <dir>/forced/<id>.motion.imar, <id>.object.imar

inline constexpr int kManifestVersion = 1;

struct DatasetRecord {
  std::string id;
  std::string scene_file;
  std::string target;
  std::string category;
  std::string action;
  std::string text;
  Json placements;  // object id -> pose for every placed object
  std::string motion_file;
  std::string trajectory_file;
  std::string forced_motion_file;
  std::string forced_trajectory_file;
  double fps = 30.0;
  int contact = 0;
  int release = 0;
  FilterReport report;
};

struct DatasetManifest {
  std::vector<DatasetRecord> records;
  SynthesisStats stats;
  std::uint64_t seed = 0;
};

inline Json to_json(const DatasetRecord& r) {
  return {{"id", r.id},
          {"scene", r.scene_file},
          {"target", r.target},
          {"category", r.category},
          {"action", r.action},
          {"text", r.text},
          {"placements", r.placements},
          {"motion", r.motion_file},
          {"trajectory", r.trajectory_file},
          {"forced_motion", r.forced_motion_file},
          {"forced_trajectory", r.forced_trajectory_file},
          {"fps", r.fps},
          {"contact_frame", r.contact},
          {"release_frame", r.release},
          {"filters", to_json(r.report)}};
}

inline DatasetRecord record_from_json(const Json& j) {
  DatasetRecord r;
  r.id = j.at("id").get<std::string>();
  r.scene_file = j.at("scene").get<std::string>();
  r.target = j.at("target").get<std::string>();
  r.category = j.at("category").get<std::string>();
  r.action = j.at("action").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.placements = j.value("placements", Json::object());
  r.motion_file = j.at("motion").get<std::string>();
  r.trajectory_file = j.at("trajectory").get<std::string>();
  r.forced_motion_file = j.value("forced_motion", std::string());
  r.forced_trajectory_file = j.value("forced_trajectory", std::string());
  r.fps = j.value("fps", 30.0);
  r.contact = j.value("contact_frame", 0);
  r.release = j.value("release_frame", 0);
  const Json& f = j.at("filters");
  r.report = {filter_result_from_json(f.at("foot")), filter_result_from_json(f.at("bounds")),
              filter_result_from_json(f.at("collision"))};
  return r;
}

inline Json to_json(const DatasetManifest& m) {
  Json records = Json::array();
  for (const auto& r : m.records) records.push_back(to_json(r));
  return {{"version", kManifestVersion}, {"seed", m.seed}, {"records", records}, {"stats", to_json(m.stats)}};
}

inline DatasetManifest manifest_from_json(const Json& j) {
  DatasetManifest m;
  const int version = j.at("version").get<int>();
  require(version == kManifestVersion, "unsupported manifest version " + std::to_string(version));
  m.seed = j.value("seed", std::uint64_t{0});
  for (const auto& r : j.at("records")) m.records.push_back(record_from_json(r));
  const Json& s = j.at("stats");
  m.stats.attempted = s.at("attempted").get<int>();
  m.stats.emitted = s.at("emitted").get<int>();
  m.stats.rejected_by = s.at("rejected_by").get<std::map<std::string, int>>();
  m.stats.failures = s.at("failures").get<std::map<std::string, int>>();
  return m;
}

inline DatasetManifest read_manifest(const std::string& dir) {
  const std::string path = (std::filesystem::path(dir) / "manifest.json").string();
  const Json j = read_json(path);
  return with_json_errors(path, [&] { return manifest_from_json(j); });
}

inline DatasetManifest write_dataset(const std::string& dir, const SynthesisResult& result, std::uint64_t seed) {
  namespace fs = std::filesystem;
  DatasetManifest m;
  m.seed = seed;
  m.stats = result.stats;
  for (const auto& s : result.samples) {
    DatasetRecord r;
    r.id = s.id;
    r.scene_file = "scenes/" + s.id + ".json";
    r.target = s.target;
    r.category = s.aligned.category;
    r.action = s.aligned.action;
    r.text = s.text;
    r.placements = Json::object();
    for (const auto& o : s.scene.objects) {
      if (o.movable) r.placements[o.id] = to_json(o.pose);
    }
    r.motion_file = "motions/" + s.id + ".motion.imar";
    r.trajectory_file = "motions/" + s.id + ".object.imar";
    r.forced_motion_file = "forced/" + s.id + ".motion.imar";
    r.forced_trajectory_file = "forced/" + s.id + ".object.imar";
    r.fps = s.aligned.motion.fps;
    r.contact = s.contact;
    r.release = s.release;
    r.report = s.report;
    write_scene((fs::path(dir) / r.scene_file).string(), s.scene);
    write_array((fs::path(dir) / r.motion_file).string(), motion_array(s.aligned.motion));
    write_array((fs::path(dir) / r.trajectory_file).string(), trajectory_array(s.aligned.object));
    write_array((fs::path(dir) / r.forced_motion_file).string(), motion_array(s.forced.motion));
    write_array((fs::path(dir) / r.forced_trajectory_file).string(), trajectory_array(s.forced.object));
    m.records.push_back(std::move(r));
  }
  write_json((fs::path(dir) / "manifest.json").string(), to_json(m));
  return m;
}

// One record loaded back into memory.
struct LoadedRecord {
  DatasetRecord record;
  SceneGraph scene;
  HOISequence sequence;
  std::optional<HOISequence> forced;
};

inline LoadedRecord load_record(const std::string& dir, const DatasetRecord& r) {
  namespace fs = std::filesystem;
  LoadedRecord out;
  out.record = r;
  out.scene = read_scene((fs::path(dir) / r.scene_file).string());
  const SceneObject& target = out.scene.at(r.target);
  auto load = [&](const std::string& motion, const std::string& traj) {
    HOISequence s;
    s.motion = motion_from_array(read_array((fs::path(dir) / motion).string()), Skeleton::biped(), r.fps);
    s.object = trajectory_from_array(read_array((fs::path(dir) / traj).string()));
    s.action = r.action;
    s.category = r.category;
    s.geometry = target.geometry;
    s.rest_height = target.support ? out.scene.surfaces[*target.support].height : 0.0;
    validate_hoi(s);
    return s;
  };
  out.sequence = load(r.motion_file, r.trajectory_file);
  if (!r.forced_motion_file.empty()) out.forced = load(r.forced_motion_file, r.forced_trajectory_file);
  return out;
}

// ---------------------------------------------------------------------------
// Export for external viewers: Wavefront OBJ meshes and CSV tables

inline std::string format_number(double v) {
  std::ostringstream ss;
  ss.imbue(std::locale::classic());
  ss.precision(9);
  ss << v;
  return ss.str();
}

inline TriMesh object_mesh(const SceneObject& o) {
  if (const auto* box = std::get_if<BoxShape>(&o.geometry)) return make_box_mesh(box->half_extent).transformed(o.pose);
  if (const auto* mesh = std::get_if<TriMesh>(&o.geometry)) return mesh->transformed(o.pose);
  return {};
}

// One OBJ group per object; point-cloud objects contribute vertices only.
inline std::string scene_obj(const SceneGraph& s) {
  std::string out = "# interactmove scene\n";
  std::size_t base = 1;
  for (const auto& o : s.objects) {
    out += "g " + o.id + "\n";
    if (const auto* cloud = std::get_if<PointCloud>(&o.geometry)) {
      for (const auto& p : cloud->transformed(o.pose).points) {
        out += "v " + format_number(p.x()) + " " + format_number(p.y()) + " " + format_number(p.z()) + "\n";
      }
      base += cloud->size();
      continue;
    }
    const TriMesh m = object_mesh(o);
    for (const auto& p : m.vertices) out += "v " + format_number(p.x()) + " " + format_number(p.y()) + " " + format_number(p.z()) + "\n";
    for (const auto& f : m.faces) {
      out += "f " + std::to_string(base + static_cast<std::size_t>(f[0])) + " " + std::to_string(base + static_cast<std::size_t>(f[1])) + " " +
             std::to_string(base + static_cast<std::size_t>(f[2])) + "\n";
    }
    base += m.vertices.size();
  }
  return out;
}

inline std::string trajectory_csv(const ObjectTrajectory& t) {
  std::string out = "frame,tx,ty,tz,r00,r01,r02,r10,r11,r12,r20,r21,r22\n";
  for (std::size_t f = 0; f < t.frame_count(); ++f) {
    const auto& p = t.poses[f];
    out += std::to_string(f);
    for (int k = 0; k < 3; ++k) out += "," + format_number(p.translation[k]);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out += "," + format_number(p.rotation(r, c));
    out += "\n";
  }
  return out;
}

inline std::string joints_csv(const MotionSequence& m) {
  std::string out = "frame,joint,x,y,z\n";
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    for (std::size_t j = 0; j < m.frames[f].size(); ++j) {
      const Vec3& p = m.frames[f][j];
      out += std::to_string(f) + "," + m.skeleton.names[j] + "," + format_number(p.x()) + "," + format_number(p.y()) + "," +
             format_number(p.z()) + "\n";
    }
  }
  return out;
}

}  // namespace interactmove
