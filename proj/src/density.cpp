#include "winf/density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "winf/error.hpp"

namespace winf {

namespace {

constexpr double kTilingTolerance = 1e-12;
constexpr int kPolynomialScan = 1024;
constexpr int kMaxRootIterations = 200;

double sign(double v) { return v < 0.0 ? -1.0 : (v > 0.0 ? 1.0 : 0.0); }

double horner(std::span<const double> c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

// sum_k c_k x^{k+shift} / (k+shift)
double horner_integral(std::span<const double> c, double x, int shift) {
  double acc = 0.0;
  for (std::size_t k = c.size(); k-- > 0;) {
    acc = acc * x + c[k] / static_cast<double>(k + shift);
  }
  return acc * std::pow(x, shift);
}

// Antiderivative of |t - s|^p, continuous across s.
double power_primitive(double t, double s, double p) {
  const double u = t - s;
  return sign(u) * std::pow(std::abs(u), p + 1.0) / (p + 1.0);
}

// Antiderivative of |t - s|^p * (t - s).
double power_moment(double t, double s, double p) {
  return std::pow(std::abs(t - s), p + 2.0) / (p + 2.0);
}

std::string describe(const Interval& iv) {
  std::ostringstream os;
  os.precision(17);
  os << "[" << iv.lo << ", " << iv.hi << "]";
  return os.str();
}

}  // namespace

Piece Piece::constant(Interval span, double value) {
  Piece p;
  p.span = span;
  p.kind = PieceKind::constant;
  p.coefficient = value;
  return p;
}

Piece Piece::power(Interval span, double coefficient, double center, double exponent) {
  Piece p;
  p.span = span;
  p.kind = PieceKind::power;
  p.coefficient = coefficient;
  p.center = center;
  p.exponent = exponent;
  return p;
}

Piece Piece::polynomial(Interval span, std::vector<double> coefficients) {
  Piece p;
  p.span = span;
  p.kind = PieceKind::polynomial;
  p.poly = std::move(coefficients);
  return p;
}

double Piece::value(double x) const {
  switch (kind) {
    case PieceKind::constant:
      return coefficient;
    case PieceKind::power: {
      const double d = std::abs(x - center);
      if (d == 0.0) return exponent < 0.0 ? kInfinity : (exponent == 0.0 ? coefficient : 0.0);
      return coefficient * std::pow(d, exponent);
    }
    case PieceKind::polynomial:
      return horner(poly, x);
  }
  return 0.0;
}

double Piece::primitive(double x) const {
  x = std::clamp(x, span.lo, span.hi);
  switch (kind) {
    case PieceKind::constant:
      return coefficient * (x - span.lo);
    case PieceKind::power:
      return coefficient *
             (power_primitive(x, center, exponent) - power_primitive(span.lo, center, exponent));
    case PieceKind::polynomial:
      return horner_integral(poly, x, 1) - horner_integral(poly, span.lo, 1);
  }
  return 0.0;
}

double Piece::first_moment(double x) const {
  x = std::clamp(x, span.lo, span.hi);
  switch (kind) {
    case PieceKind::constant:
      return coefficient * 0.5 * (x * x - span.lo * span.lo);
    case PieceKind::power: {
      // t = (t - s) + s
      const double a = power_moment(x, center, exponent) - power_moment(span.lo, center, exponent);
      const double b =
          power_primitive(x, center, exponent) - power_primitive(span.lo, center, exponent);
      return coefficient * (a + center * b);
    }
    case PieceKind::polynomial:
      return horner_integral(poly, x, 2) - horner_integral(poly, span.lo, 2);
  }
  return 0.0;
}

double Piece::infimum(double u, double v) const {
  u = std::max(u, span.lo);
  v = std::min(v, span.hi);
  switch (kind) {
    case PieceKind::constant:
      return coefficient;
    case PieceKind::power: {
      if (coefficient == 0.0) return 0.0;
      const double dmin = (u <= center && center <= v)
                              ? 0.0
                              : std::min(std::abs(u - center), std::abs(v - center));
      const double dmax = std::max(std::abs(u - center), std::abs(v - center));
      if (exponent > 0.0) return coefficient * std::pow(dmin, exponent);
      if (exponent < 0.0) return coefficient * std::pow(dmax, exponent);
      return coefficient;
    }
    case PieceKind::polynomial: {
      double m = std::min(horner(poly, u), horner(poly, v));
      for (int i = 1; i < kPolynomialScan; ++i) {
        m = std::min(m, horner(poly, u + (v - u) * i / kPolynomialScan));
      }
      return m;
    }
  }
  return 0.0;
}

double Piece::supremum(double u, double v) const {
  u = std::max(u, span.lo);
  v = std::min(v, span.hi);
  switch (kind) {
    case PieceKind::constant:
      return coefficient;
    case PieceKind::power: {
      if (coefficient == 0.0) return 0.0;
      const double dmin = (u <= center && center <= v)
                              ? 0.0
                              : std::min(std::abs(u - center), std::abs(v - center));
      const double dmax = std::max(std::abs(u - center), std::abs(v - center));
      if (exponent > 0.0) return coefficient * std::pow(dmax, exponent);
      if (exponent < 0.0) return dmin == 0.0 ? kInfinity : coefficient * std::pow(dmin, exponent);
      return coefficient;
    }
    case PieceKind::polynomial: {
      double m = std::max(horner(poly, u), horner(poly, v));
      for (int i = 1; i < kPolynomialScan; ++i) {
        m = std::max(m, horner(poly, u + (v - u) * i / kPolynomialScan));
      }
      return m;
    }
  }
  return 0.0;
}

DensityModel DensityModel::build(DensitySpec spec) {
  if (spec.pieces.empty()) throw structural_error("density has no pieces");

  auto& pieces = spec.pieces;
  if (std::abs(pieces.front().span.lo) > kTilingTolerance) {
    throw structural_error("first piece must start at 0, got " + describe(pieces.front().span));
  }
  if (std::abs(pieces.back().span.hi - 1.0) > kTilingTolerance) {
    throw structural_error("last piece must end at 1, got " + describe(pieces.back().span));
  }
  pieces.front().span.lo = 0.0;
  pieces.back().span.hi = 1.0;
  for (std::size_t k = 0; k < pieces.size(); ++k) {
    auto& p = pieces[k];
    if (!(p.span.lo < p.span.hi)) throw structural_error("empty piece " + describe(p.span));
    if (k + 1 < pieces.size()) {
      const double next = pieces[k + 1].span.lo;
      if (next > p.span.hi + kTilingTolerance) {
        throw structural_error("gap between pieces at " + describe({p.span.hi, next}));
      }
      if (next < p.span.hi - kTilingTolerance) {
        throw structural_error("overlapping pieces at " + describe({next, p.span.hi}));
      }
      pieces[k + 1].span.lo = p.span.hi;
    }
    switch (p.kind) {
      case PieceKind::constant:
        if (!(p.coefficient >= 0.0) || !std::isfinite(p.coefficient)) {
          throw structural_error("negative or non-finite constant on " + describe(p.span));
        }
        break;
      case PieceKind::power:
        if (!(p.exponent > -1.0)) {
          throw structural_error("power exponent must exceed -1 on " + describe(p.span));
        }
        if (!(p.coefficient >= 0.0) || !std::isfinite(p.coefficient)) {
          throw structural_error("negative power coefficient on " + describe(p.span));
        }
        break;
      case PieceKind::polynomial:
        if (p.poly.empty() || p.poly.size() > 9) {
          throw structural_error("polynomial degree must be in [0, 8] on " + describe(p.span));
        }
        if (p.infimum(p.span.lo, p.span.hi) < -1e-14) {
          throw structural_error("polynomial piece is negative on " + describe(p.span));
        }
        break;
    }
  }

  double total = 0.0;
  for (const auto& p : pieces) total += p.primitive(p.span.hi);
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw structural_error("density has zero or non-finite total mass");
  }

  for (const auto& z : spec.zeros) {
    if (z.order < 1) throw structural_error("zero order must be a positive integer");
    if (!(z.lower_constant > 0.0) || !(z.lower_constant <= z.upper_constant)) {
      throw structural_error("zero envelope constants must satisfy 0 < lower <= upper");
    }
    if (!(z.radius > 0.0)) throw structural_error("zero neighborhood radius must be positive");
  }
  for (const auto& s : spec.singulars) {
    if (!(s.exponent > -1.0 && s.exponent < 0.0)) {
      throw structural_error("singular exponent must lie in (-1, 0)");
    }
    if (!(s.coefficient > 0.0)) throw structural_error("singular coefficient must be positive");
    if (!(s.location >= 0.0 && s.location <= 1.0)) {
      throw structural_error("singular location must lie in [0, 1]");
    }
  }

  DensityModel m;
  m.id_ = std::move(spec.id);
  m.normalization_ = total;
  for (auto& p : pieces) {
    p.coefficient /= total;
    for (auto& c : p.poly) c /= total;
  }
  m.pieces_ = std::move(pieces);
  m.zeros_ = std::move(spec.zeros);
  std::sort(m.zeros_.begin(), m.zeros_.end(),
            [](const ZeroPoint& a, const ZeroPoint& b) { return a.location < b.location; });
  for (auto& z : m.zeros_) {
    z.lower_constant /= total;
    z.upper_constant /= total;
  }
  m.singulars_ = std::move(spec.singulars);
  for (auto& s : m.singulars_) s.coefficient /= total;

  m.lower_bound_ = kInfinity;
  m.upper_bound_ = 0.0;
  for (const auto& p : m.pieces_) {
    m.lower_bound_ = std::min(m.lower_bound_, p.infimum(p.span.lo, p.span.hi));
    const double sup = p.supremum(p.span.lo, p.span.hi);
    m.upper_bound_ = std::max(m.upper_bound_, sup);
    if (sup == 0.0) m.vanishes_on_interval_ = true;
    if (p.kind == PieceKind::power && p.exponent < 0.0 && p.coefficient > 0.0 &&
        p.span.contains(p.center)) {
      m.implied_singulars_.push_back({p.center, p.exponent, p.coefficient});
    }
  }

  // inf over the closed complement of the (open) zero neighborhoods.
  m.lower_bound_outside_ = kInfinity;
  std::vector<Interval> outside;
  double cursor = 0.0;
  for (const auto& z : m.zeros_) {
    const auto b = z.neighborhood();
    if (b.lo > cursor) outside.push_back({cursor, b.lo});
    cursor = std::max(cursor, b.hi);
  }
  if (cursor < 1.0) outside.push_back({cursor, 1.0});
  for (const auto& iv : outside) {
    m.lower_bound_outside_ = std::min(m.lower_bound_outside_, m.infimum(iv.lo, iv.hi));
  }
  return m;
}

std::size_t DensityModel::piece_index(double x) const {
  auto it = std::lower_bound(pieces_.begin(), pieces_.end(), x,
                             [](const Piece& p, double v) { return p.span.hi < v; });
  if (it == pieces_.end()) return pieces_.size() - 1;
  return static_cast<std::size_t>(it - pieces_.begin());
}

double DensityModel::density(double x) const {
  if (x < 0.0 || x > 1.0) return 0.0;
  return pieces_[piece_index(x)].value(x);
}

double DensityModel::infimum(double u, double v) const {
  double m = kInfinity;
  for (const auto& p : pieces_) {
    if (p.span.hi < u || p.span.lo > v) continue;
    m = std::min(m, p.infimum(u, v));
  }
  return m;
}

double DensityModel::supremum(double u, double v) const {
  double m = 0.0;
  for (const auto& p : pieces_) {
    if (p.span.hi < u || p.span.lo > v) continue;
    m = std::max(m, p.supremum(u, v));
  }
  return m;
}

ValidationReport validate_model(const DensityModel& model) {
  ValidationReport r;
  r.lambda = model.lower_bound();
  r.Lambda = model.upper_bound();
  r.lambda_outside_zeros = model.lower_bound_outside_zeros();
  r.no_convergence_regime = model.vanishes_on_interval();
  if (r.no_convergence_regime) {
    r.violations.push_back("density vanishes on a set of positive measure (no-convergence regime)");
  }

  bool zeros_ok = true;
  const auto zeros = model.zeros();
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    const auto& z = zeros[i];
    ZeroCheck c;
    c.location = z.location;
    c.order = z.order;
    const auto b = z.neighborhood();
    c.inside_domain = b.lo >= 0.0 && b.hi <= 1.0;
    if (!c.inside_domain) {
      r.violations.push_back("zero neighborhood " + describe(b) + " leaves (0,1)");
    }
    if (i + 1 < zeros.size() && b.hi > zeros[i + 1].neighborhood().lo) {
      zeros_ok = false;
      r.violations.push_back("zero neighborhoods " + describe(b) + " and " +
                             describe(zeros[i + 1].neighborhood()) + " overlap");
    }
    c.vanishes_at_location = model.density(z.location) <= 1e-12;
    if (!c.vanishes_at_location) {
      std::ostringstream os;
      os.precision(17);
      os << "declared zero at " << z.location << " has positive density";
      r.violations.push_back(os.str());
    }
    c.min_ratio = kInfinity;
    c.max_ratio = 0.0;
    const double lo = std::max(b.lo, 0.0);
    const double hi = std::min(b.hi, 1.0);
    for (int m = 0; m < kEnvelopeGridPoints; ++m) {
      const double x = lo + (hi - lo) * (m + 0.5) / kEnvelopeGridPoints;
      const double d = std::abs(x - z.location);
      if (d == 0.0) continue;
      const double ratio = model.density(x) / std::pow(d, z.order);
      c.min_ratio = std::min(c.min_ratio, ratio);
      c.max_ratio = std::max(c.max_ratio, ratio);
    }
    c.envelope_holds = c.min_ratio >= z.lower_constant * (1.0 - 1e-9) &&
                       c.max_ratio <= z.upper_constant * (1.0 + 1e-9);
    if (!c.envelope_holds) {
      std::ostringstream os;
      os.precision(6);
      os << "envelope fails at zero " << z.location << ": rho/|x-x_i|^k ranges over ["
         << c.min_ratio << ", " << c.max_ratio << "], declared [" << z.lower_constant << ", "
         << z.upper_constant << "]";
      r.violations.push_back(os.str());
    }
    zeros_ok = zeros_ok && c.inside_domain && c.vanishes_at_location && c.envelope_holds;
    r.zeros.push_back(c);
  }

  if (!r.no_convergence_regime && r.lambda_outside_zeros <= 0.0) {
    zeros_ok = false;
    r.violations.push_back("density vanishes outside the declared zero neighborhoods");
  }

  for (const auto& s : model.singulars()) {
    const auto implied = model.implied_singulars();
    const bool found = std::any_of(implied.begin(), implied.end(), [&](const SingularPoint& q) {
      return std::abs(q.location - s.location) <= 1e-12 && std::abs(q.exponent - s.exponent) <= 1e-12;
    });
    if (!found) {
      std::ostringstream os;
      os.precision(17);
      os << "declared singular point at " << s.location << " is not produced by any power piece";
      r.violations.push_back(os.str());
      zeros_ok = false;
    }
  }

  r.bounded_below_regime = !r.no_convergence_regime && r.lambda > 0.0 && zeros.empty();
  r.singular_zero_regime = !r.no_convergence_regime && zeros_ok;
  r.bounded_zero_regime = r.singular_zero_regime && std::isfinite(r.Lambda) && !zeros.empty();
  return r;
}

CdfEvaluator::CdfEvaluator(DensityModel model) : model_(std::move(model)) {
  const auto pieces = model_.pieces();
  cumulative_.reserve(pieces.size());
  moments_.reserve(pieces.size());
  double acc = 0.0;
  double mom = 0.0;
  for (const auto& p : pieces) {
    acc += p.primitive(p.span.hi);
    mom += p.first_moment(p.span.hi);
    cumulative_.push_back(acc);
    moments_.push_back(mom);
  }
  support_.lo = quantile_upper(0.0);
  for (std::size_t k = pieces.size(); k-- > 0;) {
    if (pieces[k].supremum(pieces[k].span.lo, pieces[k].span.hi) > 0.0) {
      support_.hi = pieces[k].span.hi;
      break;
    }
  }
}

CdfEvaluator CdfEvaluator::accept(DensityModel model, bool force_accept) {
  if (!force_accept) {
    const auto report = validate_model(model);
    if (!report.passes()) {
      std::string msg = "model '" + model.id() + "' fails validation";
      for (const auto& v : report.violations) msg += "; " + v;
      throw assumption_error(msg);
    }
  }
  return CdfEvaluator(std::move(model));
}

double CdfEvaluator::cdf_unchecked(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const std::size_t k = model_.piece_index(x);
  const double base = k == 0 ? 0.0 : cumulative_[k - 1];
  return std::min(1.0, base + model_.pieces()[k].primitive(x));
}

double CdfEvaluator::cdf(double x) const {
  if (!(x >= 0.0 && x <= 1.0)) throw domain_error("cdf argument outside [0,1]");
  return cdf_unchecked(x);
}

double CdfEvaluator::invert_in_piece(std::size_t k, double target) const {
  const Piece& p = model_.pieces()[k];
  switch (p.kind) {
    case PieceKind::constant:
      return std::clamp(p.span.lo + target / p.coefficient, p.span.lo, p.span.hi);
    case PieceKind::power: {
      const double q = p.exponent + 1.0;
      const double g = power_primitive(p.span.lo, p.center, p.exponent) + target / p.coefficient;
      const double x = p.center + sign(g) * std::pow(std::abs(g) * q, 1.0 / q);
      return std::clamp(x, p.span.lo, p.span.hi);
    }
    case PieceKind::polynomial: {
      // Newton inside a shrinking bracket; falls back to bisection where the
      // density is too small for a reliable Newton step.
      double lo = p.span.lo;
      double hi = p.span.hi;
      double x = lo + (hi - lo) * target / p.primitive(hi);
      for (int it = 0; it < kMaxRootIterations; ++it) {
        const double f = p.primitive(x) - target;
        if (std::abs(f) <= 1e-14) break;
        if (f < 0.0) lo = x; else hi = x;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, hi)) break;
        const double rho = p.value(x);
        double next = 0.5 * (lo + hi);
        if (rho >= 1e-6) {
          const double newton = x - f / rho;
          if (newton > lo && newton < hi) next = newton;
        }
        x = next;
      }
      return x;
    }
  }
  return p.span.lo;
}

double CdfEvaluator::quantile(double y) const {
  if (!(y >= 0.0 && y <= 1.0)) throw domain_error("quantile argument outside [0,1]");
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), y - kBreakpointSnap);
  if (it == cumulative_.end()) return 1.0;
  const auto k = static_cast<std::size_t>(it - cumulative_.begin());
  const Piece& p = model_.pieces()[k];
  if (*it - y <= kBreakpointSnap) return p.span.hi;
  const double base = k == 0 ? 0.0 : cumulative_[k - 1];
  return invert_in_piece(k, y - base);
}

double CdfEvaluator::quantile_upper(double y) const {
  if (!(y >= 0.0 && y <= 1.0)) throw domain_error("quantile argument outside [0,1]");
  if (y >= 1.0) return 1.0;
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), y + kBreakpointSnap);
  if (it == cumulative_.end()) return 1.0;
  const auto k = static_cast<std::size_t>(it - cumulative_.begin());
  const Piece& p = model_.pieces()[k];
  const double base = k == 0 ? 0.0 : cumulative_[k - 1];
  if (y - base <= kBreakpointSnap) return p.span.lo;
  return invert_in_piece(k, y - base);
}

double CdfEvaluator::mass(double a, double b) const {
  if (!(a >= 0.0 && b <= 1.0)) throw domain_error("interval endpoints outside [0,1]");
  if (a > b) throw domain_error("interval with a > b");
  return std::max(0.0, cdf_unchecked(b) - cdf_unchecked(a));
}

double CdfEvaluator::partial_moment(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return moments_.back();
  const std::size_t k = model_.piece_index(x);
  const double base = k == 0 ? 0.0 : moments_[k - 1];
  return base + model_.pieces()[k].first_moment(x);
}

}  // namespace winf
