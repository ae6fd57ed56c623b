#ifndef ISOKIT_SMOOTH_MAP_HPP
#define ISOKIT_SMOOTH_MAP_HPP

#include "isokit/procrustes.hpp"

#include <nlohmann/json_fwd.hpp>

#include <memory>

namespace isokit {

using Json = nlohmann::json;

// One node of a composable analytic map of R^D.  Nodes are immutable after
// construction; evaluation and differentiation are pure.
class MapNode {
 public:
  virtual ~MapNode() = default;
  virtual int dim() const = 0;
  virtual Vec evaluate(const Vec& x) const = 0;
  virtual Mat jacobian(const Vec& x) const = 0;
  virtual std::string type() const = 0;
  virtual Json to_json() const = 0;
};

// Value-semantics handle to an immutable map tree.
class SmoothMap {
 public:
  SmoothMap() = default;
  explicit SmoothMap(std::shared_ptr<const MapNode> node, double claimed_epsilon = 0.0)
      : node_(std::move(node)), claimed_epsilon_(claimed_epsilon) {}

  bool valid() const { return node_ != nullptr; }
  int dim() const { return node_->dim(); }
  Vec operator()(const Vec& x) const { return node_->evaluate(x); }
  Vec evaluate(const Vec& x) const { return node_->evaluate(x); }
  Mat jacobian(const Vec& x) const { return node_->jacobian(x); }
  double claimed_epsilon() const { return claimed_epsilon_; }
  SmoothMap with_claimed_epsilon(double eps) const {
    return SmoothMap(node_, eps);
  }
  const MapNode& node() const { return *node_; }
  std::shared_ptr<const MapNode> node_ptr() const { return node_; }

  Json to_json() const;
  static SmoothMap from_json(const Json& j);

 private:
  std::shared_ptr<const MapNode> node_;
  double claimed_epsilon_ = 0.0;
};

// --- concrete nodes -------------------------------------------------------

SmoothMap make_identity(int dim);
SmoothMap make_motion(const EuclideanMotion& motion);

// sequence applied first-to-last: x -> maps.back()(... maps.front()(x) ...)
SmoothMap make_composite(std::vector<SmoothMap> maps);

struct PatchRegion {
  Vec center;
  double radius = 0.0;
  SmoothMap inner;
};

// Region-dispatched map: first region containing x wins, otherwise `outer`.
// Construction verifies inner/outer agreement on sampled region boundaries.
SmoothMap make_patched_union(std::vector<PatchRegion> regions, SmoothMap outer,
                             bool verify_boundaries = true, int boundary_samples = 32,
                             double tol = 1e-7);

// --- node registry (for deserialization; Whitney blend registers itself) --

using NodeFactory = std::function<std::shared_ptr<const MapNode>(const Json&)>;
void register_node_factory(const std::string& type, NodeFactory factory);
std::shared_ptr<const MapNode> node_from_json(const Json& j);

}  // namespace isokit

#endif  // ISOKIT_SMOOTH_MAP_HPP
