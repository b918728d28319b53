#include "mcs/regions.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "mcs/format.hpp"

namespace mcs {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_dim(const TargetRegion& region, Eigen::Index n) {
  if (static_cast<std::size_t>(n) != region.dimension()) {
    throw DimensionMismatch("region has dimension " + std::to_string(region.dimension()) +
                            ", point has dimension " + std::to_string(n));
  }
}

void require_finite(const Vector& v, const char* what) {
  if (v.size() == 0) throw std::invalid_argument(std::string(what) + " must be nonempty");
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + " must be finite");
}

void require_radius(double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("radius must be positive");
}

double pnorm(const Vector& v, Norm norm) {
  switch (norm) {
    case Norm::L1:
      return v.lpNorm<1>();
    case Norm::L2:
      return v.norm();
    case Norm::Linf:
      return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
  }
  return 0.0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_double(std::string_view s, const std::string& key) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw std::invalid_argument("region: bad number '" + std::string(s) + "' for key " + key);
  }
  return v;
}

Vector parse_list(std::string_view s, const std::string& key) {
  std::vector<double> values;
  while (true) {
    auto comma = s.find(',');
    values.push_back(parse_double(s.substr(0, comma), key));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return Eigen::Map<Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string join(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

}  // namespace

TargetRegion TargetRegion::orthant(Vector cutoffs) {
  require_finite(cutoffs, "cutoffs");
  return TargetRegion(Orthant{std::move(cutoffs)});
}

TargetRegion TargetRegion::ball(Vector center, double radius) {
  require_finite(center, "center");
  require_radius(radius);
  return TargetRegion(Ball{std::move(center), radius});
}

TargetRegion TargetRegion::ball_complement(Vector center, double radius) {
  require_finite(center, "center");
  require_radius(radius);
  return TargetRegion(BallComplement{std::move(center), radius});
}

TargetRegion TargetRegion::orthant_complement(Vector cutoffs) {
  require_finite(cutoffs, "cutoffs");
  return TargetRegion(OrthantComplement{std::move(cutoffs)});
}

TargetRegion TargetRegion::half_line(double cutoff) {
  if (!std::isfinite(cutoff)) throw std::invalid_argument("cutoff must be finite");
  return TargetRegion(HalfLine{cutoff});
}

std::size_t TargetRegion::dimension() const {
  return std::visit(Overloaded{
                        [](const Orthant& r) { return static_cast<std::size_t>(r.cutoffs.size()); },
                        [](const Ball& r) { return static_cast<std::size_t>(r.center.size()); },
                        [](const BallComplement& r) { return static_cast<std::size_t>(r.center.size()); },
                        [](const OrthantComplement& r) { return static_cast<std::size_t>(r.cutoffs.size()); },
                        [](const HalfLine&) { return std::size_t{1}; },
                    },
                    shape_);
}

std::string TargetRegion::kind() const {
  return std::visit(Overloaded{
                        [](const Orthant&) { return std::string("orthant"); },
                        [](const Ball&) { return std::string("ball"); },
                        [](const BallComplement&) { return std::string("ball_complement"); },
                        [](const OrthantComplement&) { return std::string("orthant_complement"); },
                        [](const HalfLine&) { return std::string("halfline"); },
                    },
                    shape_);
}

bool contains(const TargetRegion& region, const Eigen::Ref<const Vector>& y) {
  require_dim(region, y.size());
  return std::visit(Overloaded{
                        [&](const Orthant& r) { return (y.array() >= r.cutoffs.array()).all(); },
                        [&](const Ball& r) { return (y - r.center).norm() <= r.radius; },
                        [&](const BallComplement& r) { return (y - r.center).norm() >= r.radius; },
                        [&](const OrthantComplement& r) { return (y.array() <= r.cutoffs.array()).any(); },
                        [&](const HalfLine& r) { return y[0] >= r.cutoff; },
                    },
                    region.shape());
}

bool interior_contains(const TargetRegion& region, const Eigen::Ref<const Vector>& y) {
  require_dim(region, y.size());
  return std::visit(Overloaded{
                        [&](const Orthant& r) { return (y.array() > r.cutoffs.array()).all(); },
                        [&](const Ball& r) { return (y - r.center).norm() < r.radius; },
                        [&](const BallComplement& r) { return (y - r.center).norm() > r.radius; },
                        [&](const OrthantComplement& r) { return (y.array() < r.cutoffs.array()).any(); },
                        [&](const HalfLine& r) { return y[0] > r.cutoff; },
                    },
                    region.shape());
}

double dist_to_complement(const TargetRegion& region, const Eigen::Ref<const Vector>& z, Norm norm) {
  require_dim(region, z.size());
  auto euclidean_only = [norm](const char* kind) {
    if (norm != Norm::L2) {
      throw std::invalid_argument(std::string(kind) + " regions only support the Euclidean norm");
    }
  };
  return std::visit(Overloaded{
                        // The nearest complement point moves a single coordinate below its cutoff,
                        // so the distance is the same under every p-norm.
                        [&](const Orthant& r) {
                          return std::max(0.0, (z - r.cutoffs).minCoeff());
                        },
                        [&](const Ball& r) {
                          euclidean_only("ball");
                          return std::max(0.0, r.radius - (z - r.center).norm());
                        },
                        [&](const BallComplement& r) {
                          euclidean_only("ball_complement");
                          return std::max(0.0, (z - r.center).norm() - r.radius);
                        },
                        [&](const OrthantComplement& r) {
                          Vector gap = (r.cutoffs - z).cwiseMax(0.0);
                          return pnorm(gap, norm);
                        },
                        [&](const HalfLine& r) { return std::max(0.0, z[0] - r.cutoff); },
                    },
                    region.shape());
}

// center + radius * e1, nudged by ulps to the side that keeps it out of the interior:
// distance >= radius for a ball, <= radius for a ball complement. Exactly on the
// sphere whenever rounding allows it.
static Vector sphere_point(const Vector& center, double radius, bool outward) {
  Vector p = center;
  p[0] += radius;
  const double inf = std::numeric_limits<double>::infinity();
  auto dist = [&](const Vector& v) { return (v - center).norm(); };
  if (outward) {
    for (int step = 0; step < 256 && dist(p) < radius; ++step) p[0] = std::nextafter(p[0], inf);
  } else {
    for (int step = 0; step < 256 && dist(p) > radius; ++step) p[0] = std::nextafter(p[0], -inf);
  }
  return p;
}

Vector boundary_point(const TargetRegion& region) {
  return std::visit(Overloaded{
                        [](const Orthant& r) -> Vector { return r.cutoffs; },
                        [](const Ball& r) -> Vector { return sphere_point(r.center, r.radius, true); },
                        [](const BallComplement& r) -> Vector { return sphere_point(r.center, r.radius, false); },
                        [](const OrthantComplement& r) -> Vector { return r.cutoffs; },
                        [](const HalfLine& r) -> Vector { return Vector::Constant(1, r.cutoff); },
                    },
                    region.shape());
}

Norm parse_norm(std::string_view text) {
  text = trim(text);
  if (text == "1" || text == "l1") return Norm::L1;
  if (text == "2" || text == "l2") return Norm::L2;
  if (text == "inf" || text == "linf") return Norm::Linf;
  throw std::invalid_argument("unsupported norm '" + std::string(text) + "' (expected 1, 2 or inf)");
}

std::string to_string(Norm norm) {
  switch (norm) {
    case Norm::L1:
      return "1";
    case Norm::L2:
      return "2";
    case Norm::Linf:
      return "inf";
  }
  return "2";
}

TargetRegion parse_region(std::string_view text) {
  std::map<std::string, std::string, std::less<>> kv;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find_first_of("\n;", start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("region: expected key=value, got '" + std::string(line) + "'");
    }
    std::string key(trim(line.substr(0, eq)));
    if (kv.count(key)) throw std::invalid_argument("region: duplicate key " + key);
    kv[key] = std::string(trim(line.substr(eq + 1)));
  }

  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::invalid_argument("region: missing key " + key);
    return it->second;
  };
  const std::string& kind = need("kind");
  std::size_t expected_keys = 0;
  TargetRegion region = [&] {
    if (kind == "orthant" || kind == "orthant_complement" || kind == "halfline") {
      expected_keys = 2;
      Vector cutoffs = parse_list(need("cutoffs"), "cutoffs");
      if (kind == "orthant") return TargetRegion::orthant(std::move(cutoffs));
      if (kind == "orthant_complement") return TargetRegion::orthant_complement(std::move(cutoffs));
      if (cutoffs.size() != 1) throw std::invalid_argument("region: halfline takes a single cutoff");
      return TargetRegion::half_line(cutoffs[0]);
    }
    if (kind == "ball" || kind == "ball_complement") {
      expected_keys = 3;
      Vector center = parse_list(need("center"), "center");
      double radius = parse_double(need("radius"), "radius");
      if (kind == "ball") return TargetRegion::ball(std::move(center), radius);
      return TargetRegion::ball_complement(std::move(center), radius);
    }
    throw std::invalid_argument("region: unknown kind '" + kind + "'");
  }();
  if (kv.size() != expected_keys) throw std::invalid_argument("region: unexpected keys for kind " + kind);
  return region;
}

std::string format_region(const TargetRegion& region) {
  std::ostringstream out;
  out << "kind=" << region.kind() << '\n';
  std::visit(Overloaded{
                 [&](const Orthant& r) { out << "cutoffs=" << join(r.cutoffs) << '\n'; },
                 [&](const Ball& r) {
                   out << "center=" << join(r.center) << '\n' << "radius=" << format_double(r.radius) << '\n';
                 },
                 [&](const BallComplement& r) {
                   out << "center=" << join(r.center) << '\n' << "radius=" << format_double(r.radius) << '\n';
                 },
                 [&](const OrthantComplement& r) { out << "cutoffs=" << join(r.cutoffs) << '\n'; },
                 [&](const HalfLine& r) { out << "cutoffs=" << format_double(r.cutoff) << '\n'; },
             },
             region.shape());
  return out.str();
}

}  // namespace mcs
