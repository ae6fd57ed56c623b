#include "isokit/smooth_map.hpp"

#include "map_nodes.hpp"

#include <map>
#include <mutex>

namespace isokit {

namespace nodes {

Json vec_to_json(const Vec& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Vec vec_from_json(const Json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i];
  return v;
}

Json mat_to_json(const Mat& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    j.push_back(row);
  }
  return j;
}

Mat mat_from_json(const Json& j) {
  const auto rows = j.size();
  const auto cols = rows ? j[0].size() : 0;
  Mat m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c];
    }
  }
  return m;
}

Json IdentityNode::to_json() const { return Json{{"type", "identity"}, {"dim", dim_}}; }

Json MotionNode::to_json() const {
  return Json{{"type", "motion"},
              {"linear", mat_to_json(motion_.linear)},
              {"translation", vec_to_json(motion_.translation)}};
}

Json SlideNode::to_json() const {
  return Json{{"type", "slide"}, {"field", field_.to_json()}};
}

Json SlowTwistNode::to_json() const {
  Json blocks = Json::array();
  for (const TwistBlock& b : blocks_) {
    blocks.push_back(Json{{"axis0", b.axis0},
                          {"axis1", b.axis1},
                          {"angle", b.angle.to_json()}});
  }
  return Json{{"type", "slow_twist"}, {"frame", mat_to_json(frame_)}, {"blocks", blocks}};
}

Json CompositeNode::to_json() const {
  Json maps = Json::array();
  for (const SmoothMap& m : maps_) maps.push_back(m.node().to_json());
  return Json{{"type", "composite"}, {"maps", maps}};
}

Json PatchedUnionNode::to_json() const {
  Json regions = Json::array();
  for (const PatchRegion& r : regions_) {
    regions.push_back(Json{{"center", vec_to_json(r.center)},
                           {"radius", r.radius},
                           {"inner", r.inner.node().to_json()}});
  }
  return Json{{"type", "patched_union"},
              {"regions", regions},
              {"outer", outer_.node().to_json()}};
}

Json PointMoverNode::to_json() const {
  return Json{{"type", "point_mover"},
              {"from", vec_to_json(from_)},
              {"to", vec_to_json(to_)},
              {"c6", c6_},
              {"c7", c7_},
              {"epsilon", epsilon_}};
}

}  // namespace nodes

namespace {

std::map<std::string, NodeFactory>& factory_registry() {
  static std::map<std::string, NodeFactory> registry;
  return registry;
}

std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

void register_node_factory(const std::string& type, NodeFactory factory) {
  std::lock_guard<std::mutex> lock(registry_mutex());
  factory_registry()[type] = std::move(factory);
}

std::shared_ptr<const MapNode> node_from_json(const Json& j) {
  nodes::ensure_builtin_nodes_registered();
  ensure_whitney_node_registered();
  const std::string type = j.at("type");
  NodeFactory factory;
  {
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto it = factory_registry().find(type);
    if (it == factory_registry().end()) {
      throw ParseError("unknown map node type '" + type + "'");
    }
    factory = it->second;
  }
  return factory(j);
}

Json SmoothMap::to_json() const {
  return Json{{"schemaVersion", 1},
              {"claimed_epsilon", claimed_epsilon_},
              {"map", node_->to_json()}};
}

SmoothMap SmoothMap::from_json(const Json& j) {
  if (j.contains("type")) return SmoothMap(node_from_json(j), 0.0);
  if (j.contains("map")) {
    // wrapper (possibly nested inside a result document)
    SmoothMap inner = from_json(j.at("map"));
    if (j.contains("claimed_epsilon")) {
      return inner.with_claimed_epsilon(j.at("claimed_epsilon"));
    }
    return inner;
  }
  throw ParseError("not a map description (no 'type' or 'map' key)");
}

SmoothMap make_identity(int dim) {
  return SmoothMap(std::make_shared<nodes::IdentityNode>(dim), 0.0);
}

SmoothMap make_motion(const EuclideanMotion& motion) {
  return SmoothMap(std::make_shared<nodes::MotionNode>(motion), 0.0);
}

SmoothMap make_composite(std::vector<SmoothMap> maps) {
  if (maps.empty()) throw Error("composite needs at least one map");
  if (maps.size() == 1) return maps.front();
  double eps = 0.0;
  for (const SmoothMap& m : maps) eps += m.claimed_epsilon();
  return SmoothMap(std::make_shared<nodes::CompositeNode>(std::move(maps)), eps);
}

SmoothMap make_patched_union(std::vector<PatchRegion> regions, SmoothMap outer,
                             bool verify_boundaries, int boundary_samples,
                             double tol) {
  double eps = outer.claimed_epsilon();
  for (const PatchRegion& r : regions) {
    eps = std::max(eps, r.inner.claimed_epsilon());
  }
  if (verify_boundaries) {
    std::mt19937_64 rng(0x150c1e5u);
    for (std::size_t k = 0; k < regions.size(); ++k) {
      const PatchRegion& r = regions[k];
      const double scale = std::max(r.radius, 1.0);
      for (int s = 0; s < boundary_samples; ++s) {
        const Vec dir = sample_unit_sphere(rng, static_cast<int>(r.center.size()));
        const Vec x = r.center + r.radius * dir;
        // The point may fall in an earlier region; dispatch handles that.
        bool shadowed = false;
        for (std::size_t q = 0; q < k; ++q) {
          if ((x - regions[q].center).norm() <= regions[q].radius) {
            shadowed = true;
            break;
          }
        }
        if (shadowed) continue;
        const double gap = (r.inner.evaluate(x) - outer.evaluate(x)).norm();
        if (gap > tol * scale) {
          throw GlueMismatch("inner/outer disagree by " + std::to_string(gap) +
                             " at a boundary sample of region " + std::to_string(k));
        }
      }
    }
  }
  return SmoothMap(
      std::make_shared<nodes::PatchedUnionNode>(std::move(regions), std::move(outer)),
      eps);
}

}  // namespace isokit
