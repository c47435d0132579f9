#pragma once

#include <limits>
#include <span>
#include <string>
#include <vector>

namespace winf {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x <= hi; }
};

enum class PieceKind { constant, power, polynomial };

// One analytic piece of a density on [span.lo, span.hi].
//   constant:   coefficient
//   power:      coefficient * |x - center|^exponent, exponent > -1
//   polynomial: sum_k poly[k] * x^k
struct Piece {
  Interval span;
  PieceKind kind = PieceKind::constant;
  double coefficient = 0.0;
  double center = 0.0;
  double exponent = 0.0;
  std::vector<double> poly;

  static Piece constant(Interval span, double value);
  static Piece power(Interval span, double coefficient, double center, double exponent);
  static Piece polynomial(Interval span, std::vector<double> coefficients);

  double value(double x) const;
  // Integral of the piece from span.lo to x (x clamped into the span).
  double primitive(double x) const;
  // Integral of t * value(t) from span.lo to x.
  double first_moment(double x) const;
  // Infimum / supremum of the piece over [u, v] (sup may be +inf).
  double infimum(double u, double v) const;
  double supremum(double u, double v) const;
};

// A zero x_i of order k_i with the two-sided power envelope
//   lower * |x - x_i|^k <= rho(x) <= upper * |x - x_i|^k  on (x_i - radius, x_i + radius).
struct ZeroPoint {
  double location = 0.0;
  int order = 1;
  double lower_constant = 0.0;
  double upper_constant = 0.0;
  double radius = 0.0;

  Interval neighborhood() const { return {location - radius, location + radius}; }
};

struct SingularPoint {
  double location = 0.0;
  double exponent = 0.0;
  double coefficient = 0.0;
};

// Unnormalized user description of a density. Envelope constants of zeros and
// singular coefficients are expressed in the same (unnormalized) scale as the
// pieces and are rescaled together with them.
struct DensitySpec {
  std::string id;
  std::vector<Piece> pieces;
  std::vector<ZeroPoint> zeros;
  std::vector<SingularPoint> singulars;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Normalized piecewise-analytic probability density on (0,1).
class DensityModel {
 public:
  // Checks tiling and sign, integrates the shape and folds the normalization
  // into every coefficient. Throws structural_error on malformed input.
  static DensityModel build(DensitySpec spec);

  const std::string& id() const { return id_; }
  std::span<const Piece> pieces() const { return pieces_; }
  std::span<const ZeroPoint> zeros() const { return zeros_; }
  // Declared singular points (after normalization).
  std::span<const SingularPoint> singulars() const { return singulars_; }
  // Singular points implied by the pieces (power pieces with negative exponent
  // whose center lies in the closed span).
  std::span<const SingularPoint> implied_singulars() const { return implied_singulars_; }

  // Factor the user shape was divided by.
  double normalization() const { return normalization_; }
  // inf / sup of rho over (0,1); upper_bound() is +inf for singular densities.
  double lower_bound() const { return lower_bound_; }
  double upper_bound() const { return upper_bound_; }
  // inf of rho over (0,1) minus the declared zero neighborhoods.
  double lower_bound_outside_zeros() const { return lower_bound_outside_; }
  // True when rho vanishes identically on some piece of positive length.
  bool vanishes_on_interval() const { return vanishes_on_interval_; }

  double density(double x) const;
  // Index of the piece containing x (the left one at a shared breakpoint).
  std::size_t piece_index(double x) const;

  // inf of rho over [u, v] computed piecewise.
  double infimum(double u, double v) const;
  double supremum(double u, double v) const;

 private:
  std::string id_;
  std::vector<Piece> pieces_;
  std::vector<ZeroPoint> zeros_;
  std::vector<SingularPoint> singulars_;
  std::vector<SingularPoint> implied_singulars_;
  double normalization_ = 1.0;
  double lower_bound_ = 0.0;
  double upper_bound_ = 0.0;
  double lower_bound_outside_ = 0.0;
  bool vanishes_on_interval_ = false;
};

struct ZeroCheck {
  double location = 0.0;
  int order = 0;
  bool inside_domain = true;
  bool vanishes_at_location = true;
  bool envelope_holds = true;
  // Extremes of rho(x) / |x - x_i|^k over the check grid.
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

struct ValidationReport {
  bool bounded_below_regime = false;    // rho >= lambda > 0
  bool bounded_zero_regime = false;     // bounded, finitely many declared zeros with envelopes
  bool singular_zero_regime = false;    // zeros with envelopes, upper bound not required
  bool no_convergence_regime = false;   // rho = 0 on a set of positive measure
  double lambda = 0.0;
  double Lambda = 0.0;
  double lambda_outside_zeros = 0.0;
  std::vector<ZeroCheck> zeros;
  std::vector<std::string> violations;

  // At least one of the convergence results covers the model.
  bool passes() const { return bounded_below_regime || bounded_zero_regime || singular_zero_regime; }
};

// Grid points per zero neighborhood used for the envelope check.
inline constexpr int kEnvelopeGridPoints = 10000;

ValidationReport validate_model(const DensityModel& model);

// CDF F, generalized inverse F^{-1} and interval masses of a model. Immutable
// after construction; safe for concurrent reads.
class CdfEvaluator {
 public:
  explicit CdfEvaluator(DensityModel model);

  // Validates first and throws assumption_error unless the model passes or
  // force_accept is set.
  static CdfEvaluator accept(DensityModel model, bool force_accept);

  const DensityModel& model() const { return model_; }

  double cdf(double x) const;
  // inf{x : F(x) >= y}; quantile(0) = 0, quantile(1) = 1.
  double quantile(double y) const;
  // inf{x : F(x) > y}. Equal to quantile(y) except where F is flat at level y.
  double quantile_upper(double y) const;
  // F(b) - F(a).
  double mass(double a, double b) const;
  // Integral of t * rho(t) over (0, x).
  double partial_moment(double x) const;
  double density(double x) const { return model_.density(x); }

  // [inf{x : F(x) > 0}, inf{x : F(x) >= 1}], the closed hull of the support.
  Interval support() const { return support_; }

  // Masses accumulated at the right end of each piece.
  std::span<const double> cumulative() const { return cumulative_; }

 private:
  double cdf_unchecked(double x) const;
  double invert_in_piece(std::size_t k, double y) const;

  DensityModel model_;
  std::vector<double> cumulative_;  // cumulative_[k] = F(pieces[k].span.hi)
  std::vector<double> moments_;     // partial moment at each piece end
  Interval support_{0.0, 1.0};
};

// Distance in probability within which a quantile argument is treated as
// sitting exactly on a piece breakpoint.
inline constexpr double kBreakpointSnap = 1e-14;

}  // namespace winf
