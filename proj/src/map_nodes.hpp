#ifndef ISOKIT_MAP_NODES_HPP
#define ISOKIT_MAP_NODES_HPP

// Internal node classes shared by smooth_map.cpp and distortion.cpp.

#include "isokit/distortion.hpp"

#include <nlohmann/json.hpp>

namespace isokit::nodes {

class IdentityNode final : public MapNode {
 public:
  explicit IdentityNode(int dim) : dim_(dim) {}
  int dim() const override { return dim_; }
  Vec evaluate(const Vec& x) const override { return x; }
  Mat jacobian(const Vec& x) const override {
    (void)x;
    return Mat::Identity(dim_, dim_);
  }
  std::string type() const override { return "identity"; }
  Json to_json() const override;

 private:
  int dim_;
};

class MotionNode final : public MapNode {
 public:
  explicit MotionNode(EuclideanMotion motion) : motion_(std::move(motion)) {}
  int dim() const override { return motion_.dim(); }
  Vec evaluate(const Vec& x) const override { return motion_.apply(x); }
  Mat jacobian(const Vec&) const override { return motion_.linear; }
  std::string type() const override { return "motion"; }
  Json to_json() const override;
  const EuclideanMotion& motion() const { return motion_; }

 private:
  EuclideanMotion motion_;
};

class SlowTwistNode final : public MapNode {
 public:
  SlowTwistNode(Mat frame, std::vector<TwistBlock> blocks);
  int dim() const override { return static_cast<int>(frame_.rows()); }
  Vec evaluate(const Vec& x) const override;
  Mat jacobian(const Vec& x) const override;
  std::string type() const override { return "slow_twist"; }
  Json to_json() const override;
  const std::vector<TwistBlock>& blocks() const { return blocks_; }
  const Mat& frame() const { return frame_; }

 private:
  Mat st_matrix(double r) const;
  Mat st_deriv(double r) const;
  Mat frame_;  // map is frame^T * St(|x|) * frame * x
  std::vector<TwistBlock> blocks_;
};

class SlideNode final : public MapNode {
 public:
  explicit SlideNode(DisplacementField field) : field_(std::move(field)) {}
  int dim() const override { return field_.dim(); }
  Vec evaluate(const Vec& x) const override { return x + field_.value(x); }
  Mat jacobian(const Vec& x) const override {
    return Mat::Identity(dim(), dim()) + field_.jacobian(x);
  }
  std::string type() const override { return "slide"; }
  Json to_json() const override;
  const DisplacementField& field() const { return field_; }

 private:
  DisplacementField field_;
};

class CompositeNode final : public MapNode {
 public:
  explicit CompositeNode(std::vector<SmoothMap> maps) : maps_(std::move(maps)) {}
  int dim() const override { return maps_.front().dim(); }
  Vec evaluate(const Vec& x) const override {
    Vec y = x;
    for (const SmoothMap& m : maps_) y = m.evaluate(y);
    return y;
  }
  Mat jacobian(const Vec& x) const override {
    Vec y = x;
    Mat j = Mat::Identity(dim(), dim());
    for (const SmoothMap& m : maps_) {
      j = m.jacobian(y) * j;
      y = m.evaluate(y);
    }
    return j;
  }
  std::string type() const override { return "composite"; }
  Json to_json() const override;
  const std::vector<SmoothMap>& maps() const { return maps_; }

 private:
  std::vector<SmoothMap> maps_;  // applied first-to-last
};

class PatchedUnionNode final : public MapNode {
 public:
  PatchedUnionNode(std::vector<PatchRegion> regions, SmoothMap outer)
      : regions_(std::move(regions)), outer_(std::move(outer)) {}
  int dim() const override { return outer_.dim(); }
  Vec evaluate(const Vec& x) const override {
    for (const PatchRegion& r : regions_) {
      if ((x - r.center).norm() <= r.radius) return r.inner.evaluate(x);
    }
    return outer_.evaluate(x);
  }
  Mat jacobian(const Vec& x) const override {
    for (const PatchRegion& r : regions_) {
      if ((x - r.center).norm() <= r.radius) return r.inner.jacobian(x);
    }
    return outer_.jacobian(x);
  }
  std::string type() const override { return "patched_union"; }
  Json to_json() const override;
  const std::vector<PatchRegion>& regions() const { return regions_; }
  const SmoothMap& outer() const { return outer_; }

 private:
  std::vector<PatchRegion> regions_;
  SmoothMap outer_;
};

// Stores the mover parameters for serialization; behaves as the composite
// built by point_mover().
class PointMoverNode final : public MapNode {
 public:
  PointMoverNode(Vec from, Vec to, double c6, double c7, double epsilon,
                 SmoothMap impl)
      : from_(std::move(from)),
        to_(std::move(to)),
        c6_(c6),
        c7_(c7),
        epsilon_(epsilon),
        impl_(std::move(impl)) {}
  int dim() const override { return static_cast<int>(from_.size()); }
  Vec evaluate(const Vec& x) const override { return impl_.evaluate(x); }
  Mat jacobian(const Vec& x) const override { return impl_.jacobian(x); }
  std::string type() const override { return "point_mover"; }
  Json to_json() const override;

 private:
  Vec from_, to_;
  double c6_, c7_, epsilon_;
  SmoothMap impl_;
};

Json vec_to_json(const Vec& v);
Vec vec_from_json(const Json& j);
Json mat_to_json(const Mat& m);
Mat mat_from_json(const Json& j);

// Built-in factory registration; idempotent, called lazily.
void ensure_builtin_nodes_registered();

}  // namespace isokit::nodes

// Defined in whitney.cpp; registers the whitney_blend node factory.
namespace isokit {
void ensure_whitney_node_registered();
}

#endif  // ISOKIT_MAP_NODES_HPP
