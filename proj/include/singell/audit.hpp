#pragma once

// Sampling-based certification of the growth and ellipticity conditions for the
// integrand f and the coefficients a. A report is "no counterexample found"
// together with the extremal empirical quotients, not a proof.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "singell/integrand.hpp"

namespace singell {

struct SampleCloud {
  std::size_t count = 100'000;
  double u_max = 3.0;
  double z_max = 50.0;
  std::uint64_t seed = 20240611;
};

struct Sample {
  Vec2 x;      // unit vector (f depends on x only through x/|x|)
  Vec2 u;
  Vec2 u_bar;  // partner for the u-continuity check
  Mat2 z;
};

/// Deterministic sample list. The first entries are the forced corners
/// z = 0, |z| = 1 (cutoff edge) and |z| = z_max.
std::vector<Sample> generate_samples(const SampleCloud& cloud);

/// One audited inequality. For a lower bound nu * w <= Q the per-sample quotient
/// is Q / w and the margin is the quotient itself; for an upper bound Q <= L * w
/// the margin is w / Q. A check passes iff its minimum margin is strictly positive.
struct ConditionCheck {
  std::string name;        // e.g. "GV-f3 lower"
  std::string inequality;  // human-readable statement
  double quotient_min = 0.0;
  double quotient_max = 0.0;
  double margin_min = 0.0;
  double margin_median = 0.0;
  std::size_t worst_sample = 0;
  bool pass = false;
};

struct AuditReport {
  std::string subject;  // "integrand" or "coefficients"
  double p = 0.0;
  double m_g = 0.0;
  std::size_t samples = 0;
  std::vector<ConditionCheck> checks;
  double nu_hat = 0.0;
  double L_hat = 0.0;
  /// Fitted u-Hoelder exponent of a (coefficients only; 1 means Lipschitz).
  double u_exponent = 0.0;
  /// Minimum over 32 fixed + 32 random directions of the ellipticity quotient
  /// (integrand only); never below the eigenvalue-based nu from GV-f3.
  double direction_nu = 0.0;

  bool pass() const;
  double ratio() const { return L_hat / nu_hat; }
  const ConditionCheck& check(const std::string& name) const;
};

/// Checks GV-f1..3 for f plus the 0-homogeneity of f in x. Throws UsageError on an empty cloud.
AuditReport audit_integrand(const IntegrandParams& params, const SampleCloud& cloud);

/// Checks GV1..4 for a (alpha = 1). Throws UsageError on an empty cloud.
AuditReport audit_coefficients(const IntegrandParams& params, const SampleCloud& cloud);

/// Per-sample ellipticity quotients used to compare the two audits at matched
/// samples: lambda_min(D_zz f) / (p m_g (1+|z|)^{p-2}) and
/// lambda_min(sym D_z a) / (1+|z|)^{p-2}.
struct MatchedEllipticity {
  std::vector<double> integrand;
  std::vector<double> coefficients;
};
MatchedEllipticity matched_ellipticity(const IntegrandParams& params, const SampleCloud& cloud);

struct RatioRow {
  double p = 0.0;
  double m_g = 0.0;
  double nu_hat = 0.0;
  double L_hat = 0.0;
  double ratio = 0.0;
};

/// L_hat / nu_hat of the coefficients along an increasing grid in (1, 2).
/// Throws DomainError if a grid point leaves (1, 2), UsageError if not increasing.
std::vector<RatioRow> ratio_curve(const std::vector<double>& p_grid, const SampleCloud& cloud);

/// True iff the ratio is strictly increasing on the last three rows (vacuous below 3 rows).
bool ratio_tail_increasing(const std::vector<RatioRow>& rows);

/// CSV "subject,p,condition,quotient_min,quotient_max,margin_min,margin_median,worst_sample,pass".
void write_audit_csv(std::ostream& out, const std::vector<AuditReport>& reports, bool header = true);
void write_ratio_csv(std::ostream& out, const std::vector<RatioRow>& rows);
void write_audit_summary(std::ostream& out, const AuditReport& report);

}  // namespace singell
