#pragma once

// Empirical decay measurements on closed-form or P1 fields: Morrey energy decay,
// V-excess decay and oscillation over shrinking balls.

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "singell/mesh.hpp"
#include "singell/tensor.hpp"

namespace singell {

struct FieldSampler {
  std::string name;
  std::function<Vec2(const Vec2&)> value;
  std::function<Mat2(const Vec2&)> grad;
  /// False where the field is not defined (the origin for x/|x|).
  std::function<bool(const Vec2&)> defined;
};

FieldSampler singular_sampler();
/// w(x) = m x + b.
FieldSampler linear_sampler(const Mat2& m, const Vec2& b);
FieldSampler constant_sampler(const Vec2& c);
/// P1 interpolation on `mesh`; the sampler keeps its own copies.
FieldSampler p1_sampler(const DiskMesh& mesh, const DiscreteField& field);

struct DecayTable {
  std::string quantity;
  Vec2 center = Vec2::Zero();
  std::vector<double> radii;   // decreasing
  std::vector<double> values;
  double slope = 0.0;          // least-squares slope of log2 value against log2 radius
  double fit_residual = 0.0;   // RMS residual of that fit
  /// A slope is asserted only when all values are positive and fit_residual <= 0.1.
  bool slope_assertable = false;
  /// Oscillation only: "continuous" or "discontinuous" (heuristic: osc fails to halve).
  std::string verdict;

  std::vector<double> running_slopes() const;
  /// 2 - slope, the Morrey deficit.
  double mu() const { return 2.0 - slope; }
};

struct ProbeOptions {
  double p = 1.5;         // exponent of the V-function
  int quad_n_r = 200;
  int quad_n_theta = 64;
  int net_rings = 8;
  int net_angles = 32;
};

/// rho_max * 2^{-k}, k = 0..count-1.
std::vector<double> geometric_radii(double rho_max, int count);

/// int_{B_rho(x0)} (1 + |V(Dw)|^2) dx. Throws UsageError if a ball leaves the unit
/// disk, radii are not decreasing, or fewer than 4 radii are given.
DecayTable morrey_decay(const FieldSampler& w, const Vec2& x0, const std::vector<double>& radii,
                        const ProbeOptions& options = {});

/// int_{B_rho(x0)} |V(Dw) - (V(Dw))_{B_rho}|^2 dx.
DecayTable excess_decay(const FieldSampler& w, const Vec2& x0, const std::vector<double>& radii,
                        const ProbeOptions& options = {});

/// max |w(a) - w(b)| over a polar net of B_rho(x0).
DecayTable oscillation_probe(const FieldSampler& w, const Vec2& x0, const std::vector<double>& radii,
                             const ProbeOptions& options = {});

/// Net used by oscillation_probe: center (if defined) plus rings j/rings, angles 2 pi k/angles.
std::vector<Vec2> oscillation_net(const Vec2& x0, double rho, int rings, int angles);

/// Brute-force max pairwise distance of the field values over `points`.
double oscillation(const FieldSampler& w, const std::vector<Vec2>& points);

/// CSV "radius,value,running_slope".
void write_decay_csv(std::ostream& out, const DecayTable& table);

}  // namespace singell
