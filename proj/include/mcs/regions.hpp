#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "mcs/types.hpp"

namespace mcs {

// {y : y_k >= c_k for all k}
struct Orthant {
  Vector cutoffs;
};

// {y : ||y - center||_2 <= radius}
struct Ball {
  Vector center;
  double radius;
};

// {y : ||y - center||_2 >= radius}
struct BallComplement {
  Vector center;
  double radius;
};

// Closure of {y : y_k < c_k for some k}, i.e. {y : y_k <= c_k for some k}.
struct OrthantComplement {
  Vector cutoffs;
};

// Univariate [cutoff, +inf).
struct HalfLine {
  double cutoff;
};

enum class Norm { L1, L2, Linf };

// A closed target region in response space. Membership is decided with
// exact floating-point comparisons; the boundary always belongs to the region.
class TargetRegion {
 public:
  using Variant = std::variant<Orthant, Ball, BallComplement, OrthantComplement, HalfLine>;

  static TargetRegion orthant(Vector cutoffs);
  static TargetRegion ball(Vector center, double radius);
  static TargetRegion ball_complement(Vector center, double radius);
  static TargetRegion orthant_complement(Vector cutoffs);
  static TargetRegion half_line(double cutoff);

  std::size_t dimension() const;
  const Variant& shape() const { return shape_; }
  std::string kind() const;

 private:
  explicit TargetRegion(Variant shape) : shape_(std::move(shape)) {}
  Variant shape_;
};

bool contains(const TargetRegion& region, const Eigen::Ref<const Vector>& y);
bool interior_contains(const TargetRegion& region, const Eigen::Ref<const Vector>& y);

// inf over s in the complement of ||z - s||_p. Zero on the complement and on the boundary.
// Ball variants only support the Euclidean norm.
double dist_to_complement(const TargetRegion& region, const Eigen::Ref<const Vector>& z,
                          Norm norm = Norm::L2);

// Fixed point of the boundary used in place of unobserved test responses.
Vector boundary_point(const TargetRegion& region);

Norm parse_norm(std::string_view text);
std::string to_string(Norm norm);

// Text format, one key=value per line (or separated by ';'):
//   kind=orthant|ball|ball_complement|orthant_complement|halfline
//   cutoffs=v1,v2,...   (orthant, orthant_complement, halfline)
//   center=v1,v2,...    radius=r   (ball, ball_complement)
TargetRegion parse_region(std::string_view text);
std::string format_region(const TargetRegion& region);

}  // namespace mcs
