#include "winf/construction.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "winf/bounds.hpp"
#include "winf/error.hpp"
#include "winf/model_io.hpp"
#include "winf/transport.hpp"

namespace winf {

double region_length(const Region& r) {
  double total = 0.0;
  for (const auto& iv : r) total += iv.length();
  return total;
}

double region_diameter(const Region& r) { return r.empty() ? 0.0 : r.back().hi - r.front().lo; }

namespace {

double region_mass(const CdfEvaluator& F, const Region& r) {
  double total = 0.0;
  for (const auto& iv : r) total += F.mass(iv.lo, iv.hi);
  return total;
}

std::size_t region_count(const EmpiricalMeasure& em, const Region& r) {
  std::size_t total = 0;
  for (const auto& iv : r) total += em.count_in(iv.lo, iv.hi);
  return total;
}

std::vector<double> region_atoms(const EmpiricalMeasure& em, const Region& r) {
  std::vector<double> out;
  const auto s = em.samples();
  for (const auto& iv : r) {
    auto first = std::lower_bound(s.begin(), s.end(), iv.lo);
    auto last = std::lower_bound(s.begin(), s.end(), iv.hi);
    out.insert(out.end(), first, last);
  }
  return out;
}

Region intersect(const Region& r, double lo, double hi) {
  Region out;
  for (const auto& iv : r) {
    const double a = std::max(iv.lo, lo);
    const double b = std::min(iv.hi, hi);
    if (b > a) out.push_back({a, b});
  }
  return out;
}

void append_merged(Region& r, Interval iv) {
  if (!r.empty() && r.back().hi >= iv.lo) {
    r.back().hi = std::max(r.back().hi, iv.hi);
  } else {
    r.push_back(iv);
  }
}

std::vector<WeightedSegment> segments_of(const Region& r, double weight) {
  std::vector<WeightedSegment> out;
  out.reserve(r.size());
  for (const auto& iv : r) out.push_back({iv, weight});
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

WeightedRestriction::WeightedRestriction(const CdfEvaluator& F,
                                         std::vector<WeightedSegment> segments)
    : F_(&F) {
  std::erase_if(segments, [](const WeightedSegment& s) { return !(s.span.hi > s.span.lo); });
  std::sort(segments.begin(), segments.end(),
            [](const WeightedSegment& a, const WeightedSegment& b) { return a.span.lo < b.span.lo; });
  double total = 0.0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight)) {
      throw domain_error("restriction weights must be finite and nonnegative");
    }
    if (k > 0 && s.span.lo < segments[k - 1].span.hi) {
      throw domain_error("restriction segments overlap");
    }
    base_.push_back(F.cdf(s.span.lo));
    total += s.weight * F.mass(s.span.lo, s.span.hi);
    cumulative_.push_back(total);
  }
  segments_ = std::move(segments);

  std::size_t first = segments_.size();
  std::size_t last = 0;
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const double prev = k ? cumulative_[k - 1] : 0.0;
    if (cumulative_[k] > prev) {
      first = std::min(first, k);
      last = k;
    }
  }
  if (first < segments_.size()) {
    const auto& a = segments_[first].span;
    const auto& b = segments_[last].span;
    support_.lo = std::clamp(F.quantile_upper(base_[first]), a.lo, a.hi);
    support_.hi = std::clamp(F.quantile(F.cdf(b.hi)), b.lo, b.hi);
  } else if (!segments_.empty()) {
    support_ = {segments_.front().span.lo, segments_.back().span.hi};
  }
}

double WeightedRestriction::quantile(double m) const {
  if (cumulative_.empty() || m <= 0.0) return support_.lo;
  if (m >= mass()) return support_.hi;
  const auto k = static_cast<std::size_t>(
      std::lower_bound(cumulative_.begin(), cumulative_.end(), m) - cumulative_.begin());
  const double prev = k ? cumulative_[k - 1] : 0.0;
  const auto& s = segments_[k];
  const double y = std::min(1.0, base_[k] + (m - prev) / s.weight);
  return std::clamp(F_->quantile(y), s.span.lo, s.span.hi);
}

double WeightedRestriction::quantile_upper(double m) const {
  if (cumulative_.empty()) return support_.lo;
  if (m < 0.0) return support_.lo;
  if (m >= mass()) return support_.hi;
  const auto k = static_cast<std::size_t>(
      std::upper_bound(cumulative_.begin(), cumulative_.end(), m) - cumulative_.begin());
  const double prev = k ? cumulative_[k - 1] : 0.0;
  const auto& s = segments_[k];
  const double y = std::min(1.0, base_[k] + (m - prev) / s.weight);
  return std::clamp(F_->quantile_upper(y), s.span.lo, s.span.hi);
}

std::vector<double> WeightedRestriction::breakpoints() const {
  std::vector<double> out;
  const auto pieces = F_->model().pieces();
  for (std::size_t k = 0; k < segments_.size(); ++k) {
    const auto& s = segments_[k];
    const double prev = k ? cumulative_[k - 1] : 0.0;
    for (const auto& p : pieces) {
      if (p.span.hi > s.span.lo && p.span.hi < s.span.hi) {
        out.push_back(prev + s.weight * (F_->cdf(p.span.hi) - base_[k]));
      }
    }
    out.push_back(cumulative_[k]);
  }
  return out;
}

double winf_between(const WeightedRestriction& a, const WeightedRestriction& b) {
  const double m = std::min(a.mass(), b.mass());
  if (!(m > 0.0)) return 0.0;

  std::vector<double> cuts{0.0, m};
  for (double y : a.breakpoints()) cuts.push_back(std::clamp(y, 0.0, m));
  for (double y : b.breakpoints()) cuts.push_back(std::clamp(y, 0.0, m));
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto gap = [&](double y) { return std::abs(a.quantile(y) - b.quantile(y)); };
  auto gap_upper = [&](double y) { return std::abs(a.quantile_upper(y) - b.quantile_upper(y)); };

  // Both quantiles are smooth between consecutive cuts; scan a grid and polish
  // the best grid point with a golden-section search.
  constexpr int kGrid = 32;
  constexpr int kGoldenIterations = 60;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;

  double best = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c];
    const double hi = cuts[c + 1];
    best = std::max({best, gap_upper(lo), gap(hi)});
    const double h = (hi - lo) / kGrid;
    int arg = 0;
    double arg_value = -1.0;
    for (int s = 1; s < kGrid; ++s) {
      const double v = gap(lo + h * s);
      if (v > arg_value) {
        arg_value = v;
        arg = s;
      }
    }
    best = std::max(best, arg_value);
    double x0 = lo + h * (arg - 1);
    double x3 = lo + h * (arg + 1);
    double x1 = x3 - invphi * (x3 - x0);
    double x2 = x0 + invphi * (x3 - x0);
    double f1 = gap(x1);
    double f2 = gap(x2);
    for (int it = 0; it < kGoldenIterations && x3 - x0 > 1e-17; ++it) {
      if (f1 > f2) {
        x3 = x2;
        x2 = x1;
        f2 = f1;
        x1 = x3 - invphi * (x3 - x0);
        f1 = gap(x1);
      } else {
        x0 = x1;
        x1 = x2;
        f1 = f2;
        x2 = x0 + invphi * (x3 - x0);
        f2 = gap(x2);
      }
    }
    best = std::max({best, f1, f2});
  }
  return best;
}

double winf_to_atoms(const WeightedRestriction& a, std::span<const double> atoms,
                     double atom_mass) {
  double best = 0.0;
  const std::size_t c = atoms.size();
  for (std::size_t i = 0; i < c; ++i) {
    const double left = i == 0 ? a.support().lo : a.quantile_upper(atom_mass * static_cast<double>(i));
    const double right =
        i + 1 == c ? a.support().hi : a.quantile(atom_mass * static_cast<double>(i + 1));
    best = std::max({best, std::abs(atoms[i] - left), std::abs(atoms[i] - right)});
  }
  return best;
}

// ---------------------------------------------------------------------------

int layer_cutoff(std::size_t n, int order, double beta) {
  const double nn = static_cast<double>(n);
  const double exponent = order / (2.0 * beta * (order + 1.0));
  return static_cast<int>(std::floor(std::pow(nn / std::log(nn), exponent))) - 1;
}

namespace {

constexpr int kScanCells = 4096;
constexpr int kBisectionSteps = 200;
constexpr int kMaxLayers = 256;

double level(int j, double beta) { return std::pow(static_cast<double>(j), -beta); }

// Scan points of a block: a uniform grid plus the zero and piece breakpoints.
std::vector<double> scan_points(const CdfEvaluator& F, Interval block, double zero) {
  std::vector<double> pts;
  pts.reserve(kScanCells + 8);
  for (int s = 0; s <= kScanCells; ++s) {
    pts.push_back(block.lo + block.length() * s / kScanCells);
  }
  pts.back() = block.hi;
  pts.push_back(zero);
  for (const auto& p : F.model().pieces()) {
    if (p.span.hi > block.lo && p.span.hi < block.hi) pts.push_back(p.span.hi);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

// Points in the block where rho crosses the level L, located by bisection on
// every scan cell whose end values straddle L.
void add_crossings(const CdfEvaluator& F, const std::vector<double>& pts,
                   const std::vector<double>& rho, double L, std::vector<double>& out) {
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const bool a_above = rho[s] > L;
    const bool b_above = rho[s + 1] > L;
    if (a_above == b_above) continue;
    double lo = pts[s];
    double hi = pts[s + 1];
    for (int it = 0; it < kBisectionSteps && hi - lo > 0.0; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if ((F.density(mid) > L) == a_above) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
}

// Sub-level set {rho <= L} of the block as a sorted union of intervals.
Region sublevel(const CdfEvaluator& F, Interval block, const std::vector<double>& pts,
                const std::vector<double>& rho, double L) {
  std::vector<double> cuts = pts;
  add_crossings(F, pts, rho, L, cuts);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  Region out;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c];
    const double b = cuts[c + 1];
    if (!(b > a) || a < block.lo || b > block.hi) continue;
    if (F.density(0.5 * (a + b)) <= L) append_merged(out, {a, b});
  }
  return out;
}

}  // namespace

PartitionScheme build_partition(const CdfEvaluator& F, const EmpiricalMeasure& em, double beta) {
  if (!(beta > 2.0) || !std::isfinite(beta)) throw domain_error("Choose beta > 2");
  const std::size_t n = em.size();
  if (n < kMinConstructionSamples) throw domain_error("construction needs n >= 16");
  const double nn = static_cast<double>(n);
  const double log_n = std::log(nn);

  PartitionScheme scheme;
  scheme.beta = beta;
  scheme.n = n;

  const auto zeros = F.model().zeros();
  std::vector<Interval> spans;
  for (std::size_t z = 0; z < zeros.size(); ++z) {
    const auto nb = zeros[z].neighborhood();
    const Interval span{std::max(0.0, nb.lo), std::min(1.0, nb.hi)};
    if (!spans.empty() && span.lo < spans.back().hi) {
      throw structural_error("zero neighborhoods overlap");
    }
    spans.push_back(span);
  }

  for (std::size_t z = 0; z < zeros.size(); ++z) {
    const Interval span = spans[z];
    Block block;
    block.region = {span};
    block.zero_block = true;
    block.zero_index = z;
    block.order = zeros[z].order;
    block.nu_mass = F.mass(span.lo, span.hi);
    block.J0 = layer_cutoff(n, block.order, beta);

    const auto pts = scan_points(F, span, zeros[z].location);
    std::vector<double> rho(pts.size());
    std::transform(pts.begin(), pts.end(), rho.begin(), [&](double x) { return F.density(x); });

    // Layers up to J - 1 are kept separately; {rho <= J^-beta} becomes the
    // tail once it is expected to hold at most one sample.
    int J = std::max(1, block.J0);
    while (J < kMaxLayers && nn * region_mass(F, sublevel(F, span, pts, rho, level(J, beta))) > 1.0) {
      ++J;
    }

    std::vector<double> cuts = pts;
    for (int j = 1; j <= J; ++j) add_crossings(F, pts, rho, level(j, beta), cuts);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    // Class of a point: 0..J-1 for the layers, J for the tail.
    auto classify = [&](double r) {
      if (r > 1.0) return 0;
      if (r <= level(J, beta)) return J;
      int j = static_cast<int>(std::floor(std::pow(r, -1.0 / beta)));
      j = std::clamp(j, 1, J - 1);
      while (j > 1 && r > level(j, beta)) --j;
      while (j + 1 < J && r <= level(j + 1, beta)) ++j;
      return j;
    };
    std::vector<Region> by_class(static_cast<std::size_t>(J) + 1);
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double a = cuts[c];
      const double b = cuts[c + 1];
      if (!(b > a)) continue;
      append_merged(by_class[static_cast<std::size_t>(classify(F.density(0.5 * (a + b))))], {a, b});
    }

    const std::size_t block_index = scheme.blocks.size();
    for (int j = 0; j <= J; ++j) {
      auto& region = by_class[static_cast<std::size_t>(j)];
      if (region.empty()) continue;
      Layer layer;
      layer.block = block_index;
      layer.index = j;
      layer.tail = j == J;
      layer.region = std::move(region);
      layer.level_low = layer.tail ? 0.0 : level(j + 1, beta);
      layer.level_high = j == 0 ? kInfinity : level(j, beta);
      layer.nu_mass = region_mass(F, layer.region);
      layer.diameter = region_diameter(layer.region);
      layer.depth_raw = layer.nu_mass > 0.0
                            ? std::log2(nn * layer.nu_mass / (10.0 * log_n))
                            : -kInfinity;
      layer.depth = std::max(0, static_cast<int>(std::floor(layer.depth_raw)));
      layer.uses_dyadic = !layer.tail && j < block.J0 && layer.depth >= 1;
      block.layers.push_back(scheme.layers.size());
      scheme.layers.push_back(std::move(layer));
    }
    scheme.blocks.push_back(std::move(block));
  }

  // D minus the zero neighborhoods, one block per connected component so no
  // stage has to move mass across a neighborhood.
  Region rest;
  double cursor = 0.0;
  for (const auto& s : spans) {
    if (s.lo > cursor) rest.push_back({cursor, s.lo});
    cursor = std::max(cursor, s.hi);
  }
  if (cursor < 1.0) rest.push_back({cursor, 1.0});
  for (const auto& iv : rest) {
    Block b;
    b.region = {iv};
    b.nu_mass = F.mass(iv.lo, iv.hi);
    scheme.blocks.push_back(std::move(b));
  }
  return scheme;
}

std::vector<DyadicCell> dyadic_family(const Layer& layer, const CdfEvaluator& F,
                                      const EmpiricalMeasure& em, int depth) {
  if (depth < 0 || depth > layer.depth) {
    throw domain_error("dyadic depth " + std::to_string(depth) + " outside [0, " +
                       std::to_string(layer.depth) + "]");
  }
  const std::size_t cells = std::size_t{1} << depth;
  const WeightedRestriction nu_j(F, segments_of(layer.region, 1.0));
  const double m = nu_j.mass();
  std::vector<double> ends(cells + 1);
  ends.front() = layer.region.front().lo;
  ends.back() = layer.region.back().hi;
  // i / 2^k is exact, so the cuts of depth k reappear verbatim at depth k + 1.
  for (std::size_t i = 1; i < cells; ++i) {
    ends[i] = nu_j.quantile(m * (static_cast<double>(i) / static_cast<double>(cells)));
  }
  std::vector<DyadicCell> out(cells);
  for (std::size_t i = 0; i < cells; ++i) {
    out[i].region = intersect(layer.region, ends[i], ends[i + 1]);
    out[i].nu_mass = region_mass(F, out[i].region);
    out[i].count = region_count(em, out[i].region);
  }
  return out;
}

TiltedMeasures build_tilted_measures(const PartitionScheme& scheme, const CdfEvaluator& F,
                                     const EmpiricalMeasure& em) {
  if (em.size() != scheme.n) throw domain_error("sample size differs from the partition's n");
  const double nn = static_cast<double>(em.size());
  TiltedMeasures t;
  for (const auto& b : scheme.blocks) {
    const std::size_t count = region_count(em, b.region);
    double eps = 0.0;
    if (region_length(b.region) > 0.0) {
      if (!(b.nu_mass > 0.0)) throw certification_error("degenerate block: nu(B_i) = 0");
      eps = static_cast<double>(count) / nn / b.nu_mass - 1.0;
    }
    t.block_epsilon.push_back(eps);
    t.block_counts.push_back(count);
  }
  for (std::size_t l = 0; l < scheme.layers.size(); ++l) {
    const auto& layer = scheme.layers[l];
    if (!(layer.nu_mass > 0.0)) throw certification_error("degenerate layer: nu(A_j) = 0");
    const std::size_t count = region_count(em, layer.region);
    t.layer_delta.push_back(static_cast<double>(count) / nn / layer.nu_mass - 1.0);
    t.layer_counts.push_back(count);
    if (layer.uses_dyadic) {
      DyadicTable table;
      table.layer = l;
      for (int k = 0; k <= layer.depth; ++k) table.depths.push_back(dyadic_family(layer, F, em, k));
      t.dyadic.push_back(std::move(table));
    }
  }
  return t;
}

// ---------------------------------------------------------------------------

namespace {

double cell_weight(const DyadicCell& c, double n) {
  return c.nu_mass > 0.0 ? static_cast<double>(c.count) / n / c.nu_mass : 0.0;
}

}  // namespace

TransportCertificate assemble_certificate(const PartitionScheme& scheme,
                                          const TiltedMeasures& tilted, const CdfEvaluator& F,
                                          const EmpiricalMeasure& em, double rate_constant) {
  if (F.model().vanishes_on_interval()) {
    throw certification_error(
        "density vanishes on an interval: a zero-mass layer separates the blocks");
  }
  if (em.size() != scheme.n || tilted.block_epsilon.size() != scheme.blocks.size() ||
      tilted.layer_delta.size() != scheme.layers.size()) {
    throw domain_error("certificate inputs come from different instances");
  }
  const std::size_t n = em.size();
  const double nn = static_cast<double>(n);
  const double atom = 1.0 / nn;
  const double log_n = std::log(nn);

  TransportCertificate cert;
  cert.n = n;
  cert.beta = scheme.beta;
  cert.rate_constant = rate_constant;

  auto note_mass = [&](double a, double b) {
    cert.mass_defect = std::max(cert.mass_defect, std::abs(a - b));
  };
  auto hull = [](const Region& r) {
    return r.empty() ? Interval{} : Interval{r.front().lo, r.back().hi};
  };
  auto record = [&](std::string stage, int block, int layer, int depth, std::size_t cell,
                    const Region& r, double src, double dst, double d) {
    const Interval h = hull(r);
    cert.cells.push_back({std::move(stage), block, layer, depth, cell, h.lo, h.hi, src, dst, d});
  };

  // nu -> nu_tilde over the whole domain.
  std::vector<WeightedSegment> tilde_segments;
  for (std::size_t b = 0; b < scheme.blocks.size(); ++b) {
    for (const auto& iv : scheme.blocks[b].region) {
      tilde_segments.push_back({iv, 1.0 + tilted.block_epsilon[b]});
    }
  }
  const WeightedRestriction nu(F, {{{0.0, 1.0}, 1.0}});
  const WeightedRestriction nu_tilde(F, tilde_segments);
  note_mass(nu.mass(), nu_tilde.mass());
  cert.nu_to_tilde = winf_between(nu, nu_tilde);
  record("nu_to_tilde", -1, -1, -1, 0, {{0.0, 1.0}}, nu.mass(), nu_tilde.mass(), cert.nu_to_tilde);
  cert.tilde_to_empirical = winf_to_atoms(nu_tilde, em.samples(), atom);

  double inner = 0.0;
  for (std::size_t b = 0; b < scheme.blocks.size(); ++b) {
    const Block& block = scheme.blocks[b];
    const double eps = tilted.block_epsilon[b];
    const double block_target = static_cast<double>(tilted.block_counts[b]) * atom;
    const WeightedRestriction tilde_b(F, segments_of(block.region, 1.0 + eps));
    note_mass(tilde_b.mass(), block_target);

    if (!block.zero_block) {
      const auto atoms = region_atoms(em, block.region);
      const double d = winf_to_atoms(tilde_b, atoms, atom);
      record("complement_to_empirical", static_cast<int>(b), -1, -1, 0, block.region,
             tilde_b.mass(), block_target, d);
      cert.complement_to_empirical = std::max(cert.complement_to_empirical, d);
      inner = std::max(inner, d);
      continue;
    }

    // nu_tilde|B_i -> nu_bar|B_i.
    std::vector<WeightedSegment> bar_segments;
    for (std::size_t l : block.layers) {
      for (const auto& iv : scheme.layers[l].region) {
        bar_segments.push_back({iv, 1.0 + tilted.layer_delta[l]});
      }
    }
    const WeightedRestriction bar_b(F, bar_segments);
    note_mass(tilde_b.mass(), bar_b.mass());
    const double s2 = winf_between(tilde_b, bar_b);
    cert.tilde_to_bar.push_back(s2);
    record("tilde_to_bar", static_cast<int>(b), -1, -1, 0, block.region, tilde_b.mass(),
           bar_b.mass(), s2);
    cert.bar_to_empirical.push_back(winf_to_atoms(bar_b, region_atoms(em, block.region), atom));

    // nu_bar|A_j -> nu_n|A_j, directly or through the dyadic chain.
    double worst_layer = 0.0;
    double worst_direct = 0.0;
    for (std::size_t l : block.layers) {
      const Layer& layer = scheme.layers[l];
      const int j = layer.index;
      LayerStages st;
      st.layer = l;
      const WeightedRestriction bar_j(F, segments_of(layer.region, 1.0 + tilted.layer_delta[l]));
      const double layer_target = static_cast<double>(tilted.layer_counts[l]) * atom;
      note_mass(bar_j.mass(), layer_target);
      st.direct = winf_to_atoms(bar_j, region_atoms(em, layer.region), atom);
      worst_direct = std::max(worst_direct, st.direct);

      const auto table = std::find_if(tilted.dyadic.begin(), tilted.dyadic.end(),
                                      [&](const DyadicTable& t) { return t.layer == l; });
      if (table == tilted.dyadic.end()) {
        st.charged = st.direct;
        record("bar_to_empirical", static_cast<int>(b), j, -1, 0, layer.region, bar_j.mass(),
               layer_target, st.direct);
      } else {
        const auto& depths = table->depths;
        const int depth = static_cast<int>(depths.size()) - 1;
        for (int k = 0; k < depth; ++k) {
          const auto& parents = depths[static_cast<std::size_t>(k)];
          const auto& children = depths[static_cast<std::size_t>(k) + 1];
          double step = 0.0;
          for (std::size_t c = 0; c < parents.size(); ++c) {
            const auto& q = parents[c];
            const auto& c0 = children[2 * c];
            const auto& c1 = children[2 * c + 1];
            const WeightedRestriction from(F, segments_of(q.region, cell_weight(q, nn)));
            auto to_segments = segments_of(c0.region, cell_weight(c0, nn));
            const auto more = segments_of(c1.region, cell_weight(c1, nn));
            to_segments.insert(to_segments.end(), more.begin(), more.end());
            const WeightedRestriction to(F, std::move(to_segments));
            note_mass(from.mass(), to.mass());
            note_mass(from.mass(), static_cast<double>(q.count) * atom);
            const double d = winf_between(from, to);
            record("dyadic_step", static_cast<int>(b), j, k, c, q.region, from.mass(), to.mass(), d);
            step = std::max(step, d);
          }
          st.depth_steps.push_back(step);
          const double scale = std::pow(j + 1.0, scheme.beta) *
                               std::sqrt(layer.nu_mass * log_n / (std::ldexp(1.0, k) * nn));
          st.implied_constants.push_back(step / scale);
        }
        const auto& finest = depths.back();
        for (std::size_t c = 0; c < finest.size(); ++c) {
          const auto& q = finest[c];
          const WeightedRestriction from(F, segments_of(q.region, cell_weight(q, nn)));
          const double target = static_cast<double>(q.count) * atom;
          note_mass(from.mass(), target);
          const double d = winf_to_atoms(from, region_atoms(em, q.region), atom);
          record("cell_to_empirical", static_cast<int>(b), j, depth, c, q.region, from.mass(),
                 target, d);
          st.final_step = std::max(st.final_step, d);
        }
        st.charged = st.final_step;
        for (double d : st.depth_steps) st.charged += d;
      }
      worst_layer = std::max(worst_layer, st.charged);
      cert.layers.push_back(std::move(st));
    }
    cert.max_layer_direct.push_back(worst_direct);
    inner = std::max(inner, s2 + worst_layer);

    const double scale =
        std::pow(log_n / nn, 1.0 / (2.0 * (block.order + 1.0)));
    double tail_diam = 0.0;
    for (std::size_t l : block.layers) {
      const Layer& layer = scheme.layers[l];
      if (layer.tail || layer.index >= block.J0) tail_diam = std::max(tail_diam, layer.diameter);
    }
    cert.tail_diameter_ratio.push_back(tail_diam / scale);
  }

  cert.max_displacement = cert.nu_to_tilde + inner;
  if (cert.mass_defect > kMassTolerance) {
    throw certification_error("stage masses disagree by " + std::to_string(cert.mass_defect));
  }

  cert.exact_winf = winf_empirical(F, em).w_infinity;
  std::vector<int> orders;
  for (const auto& z : F.model().zeros()) orders.push_back(z.order);
  if (orders.empty()) orders.push_back(0);
  cert.theoretical_rate = thm2_rate(n, orders, rate_constant);

  const auto& model = F.model();
  if (model.lower_bound() > 0.0 && std::isfinite(model.upper_bound())) {
    double norm = 0.0;
    double lambda = model.lower_bound();
    for (std::size_t b = 0; b < scheme.blocks.size(); ++b) {
      for (const auto& iv : scheme.blocks[b].region) {
        const double eps = tilted.block_epsilon[b];
        norm = std::max(norm, std::abs(eps) * model.supremum(iv.lo, iv.hi));
        lambda = std::min(lambda, (1.0 + eps) * model.infimum(iv.lo, iv.hi));
      }
    }
    if (norm > 0.0 && lambda > 0.0) cert.smoothing_ratio = cert.nu_to_tilde * lambda / norm;
  }
  return cert;
}

// ---------------------------------------------------------------------------

namespace {

nlohmann::json region_json(const Region& r) {
  auto out = nlohmann::json::array();
  for (const auto& iv : r) out.push_back({iv.lo, iv.hi});
  return out;
}

}  // namespace

nlohmann::json to_json(const PartitionScheme& scheme) {
  nlohmann::json j;
  j["beta"] = scheme.beta;
  j["n"] = scheme.n;
  auto blocks = nlohmann::json::array();
  for (const auto& b : scheme.blocks) {
    nlohmann::json jb{{"region", region_json(b.region)},
                      {"zero_block", b.zero_block},
                      {"nu_mass", b.nu_mass}};
    if (b.zero_block) {
      jb["zero_index"] = b.zero_index;
      jb["order"] = b.order;
      jb["J0"] = b.J0;
      jb["layers"] = b.layers;
    }
    blocks.push_back(std::move(jb));
  }
  j["blocks"] = std::move(blocks);
  auto layers = nlohmann::json::array();
  for (const auto& l : scheme.layers) {
    layers.push_back({{"block", l.block},
                      {"j", l.index},
                      {"tail", l.tail},
                      {"region", region_json(l.region)},
                      {"level_low", l.level_low},
                      {"level_high", json_number(l.level_high)},
                      {"nu_mass", l.nu_mass},
                      {"diameter", l.diameter},
                      {"depth_raw", json_number(l.depth_raw)},
                      {"depth", l.depth},
                      {"uses_dyadic", l.uses_dyadic}});
  }
  j["layers"] = std::move(layers);
  return j;
}

nlohmann::json to_json(const TransportCertificate& cert) {
  nlohmann::json j;
  j["n"] = cert.n;
  j["beta"] = cert.beta;
  j["max_displacement"] = cert.max_displacement;
  j["exact_winf"] = cert.exact_winf;
  j["theoretical_rate"] = cert.theoretical_rate;
  j["rate_constant"] = cert.rate_constant;
  j["mass_defect"] = cert.mass_defect;
  nlohmann::json stages;
  stages["nu_to_tilde"] = cert.nu_to_tilde;
  stages["tilde_to_bar"] = cert.tilde_to_bar;
  stages["complement_to_empirical"] = cert.complement_to_empirical;
  auto layers = nlohmann::json::array();
  for (const auto& l : cert.layers) {
    layers.push_back({{"layer", l.layer},
                      {"direct", l.direct},
                      {"depth_steps", l.depth_steps},
                      {"final_step", l.final_step},
                      {"implied_constants", l.implied_constants},
                      {"charged", l.charged}});
  }
  stages["layers"] = std::move(layers);
  j["stages"] = std::move(stages);
  j["checks"] = {{"tilde_to_empirical", cert.tilde_to_empirical},
                 {"bar_to_empirical", cert.bar_to_empirical},
                 {"max_layer_direct", cert.max_layer_direct},
                 {"tail_diameter_ratio", cert.tail_diameter_ratio},
                 {"smoothing_ratio", cert.smoothing_ratio ? nlohmann::json(*cert.smoothing_ratio)
                                                          : nlohmann::json(nullptr)}};
  j["cell_count"] = cert.cells.size();
  return j;
}

void write_cells_csv(std::ostream& out, const TransportCertificate& cert) {
  out << "stage,block,layer,depth,cell,lo,hi,source_mass,target_mass,displacement\n";
  char buf[256];
  for (const auto& c : cert.cells) {
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  c.stage.c_str(), c.block, c.layer, c.depth, c.cell, c.lo, c.hi, c.source_mass,
                  c.target_mass, c.displacement);
    out << buf;
  }
}

}  // namespace winf
