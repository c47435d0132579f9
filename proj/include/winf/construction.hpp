#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "winf/density.hpp"
#include "winf/sampling.hpp"

// Executable form of the partition-and-transport argument for densities with
// polynomial zeros: zero neighborhoods B_i, density layers A_j inside them,
// block/layer tilted measures, dyadic equal-mass families, and a feasible
// transport plan whose largest displacement bounds W_inf(nu, nu_n) from above.
namespace winf {

using Region = std::vector<Interval>;

double region_length(const Region& r);
// Largest minus smallest point of the region.
double region_diameter(const Region& r);

// Measure with density weight * rho on each segment. Segments are disjoint and
// sorted; the evaluator must outlive the restriction.
struct WeightedSegment {
  Interval span;
  double weight = 1.0;
};

class WeightedRestriction {
 public:
  WeightedRestriction(const CdfEvaluator& F, std::vector<WeightedSegment> segments);

  double mass() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  // inf{x : G(x) >= m}; m <= 0 gives the bottom of the support.
  double quantile(double m) const;
  // inf{x : G(x) > m}; m >= mass gives the top of the support.
  double quantile_upper(double m) const;
  // Hull of the positive-mass segments.
  Interval support() const { return support_; }
  // Masses at which either quantile may kink: segment ends and model piece
  // breakpoints inside segments.
  std::vector<double> breakpoints() const;
  std::span<const WeightedSegment> segments() const { return segments_; }

 private:
  const CdfEvaluator* F_;
  std::vector<WeightedSegment> segments_;
  std::vector<double> base_;        // F(lo) of each segment
  std::vector<double> cumulative_;  // mass up to each segment end
  Interval support_{0.0, 0.0};
};

// sup over the common mass range of |G1^{-1} - G2^{-1}| for two restrictions
// of equal mass: grid scan between breakpoints plus golden-section refinement.
double winf_between(const WeightedRestriction& a, const WeightedRestriction& b);

// Exact W_inf between a restriction and equal-mass atoms (each of mass
// atom_mass); the sup over each atom's quantile cell sits at a cell end.
double winf_to_atoms(const WeightedRestriction& a, std::span<const double> atoms, double atom_mass);

// ---------------------------------------------------------------------------

struct Layer {
  std::size_t block = 0;
  int index = 0;           // j; the tail layer carries the first level it covers
  bool tail = false;       // {rho <= (J+1)^-beta} merged around the zero
  Region region;
  double level_low = 0.0;  // (j+1)^-beta (0 for the tail)
  double level_high = 0.0; // j^-beta (+inf for j = 0)
  double nu_mass = 0.0;
  double diameter = 0.0;
  double depth_raw = 0.0;  // log2(n nu(A_j) / (10 log n))
  int depth = 0;           // max(0, floor(depth_raw))
  bool uses_dyadic = false;  // j < J0 and depth >= 1
};

struct Block {
  Region region;
  // B_1..B_N come first; the components of D minus their union follow.
  bool zero_block = false;
  std::size_t zero_index = 0;
  int order = 0;
  double nu_mass = 0.0;
  int J0 = 0;
  std::vector<std::size_t> layers;  // indices into PartitionScheme::layers
};

struct PartitionScheme {
  double beta = 3.0;
  std::size_t n = 0;
  std::vector<Block> blocks;
  std::vector<Layer> layers;
};

inline constexpr double kDefaultBeta = 3.0;
inline constexpr std::size_t kMinConstructionSamples = 16;

// J0 = floor((n / log n)^{k / (2 beta (k + 1))}) - 1.
int layer_cutoff(std::size_t n, int order, double beta);

PartitionScheme build_partition(const CdfEvaluator& F, const EmpiricalMeasure& em,
                                double beta = kDefaultBeta);

struct DyadicCell {
  Region region;
  double nu_mass = 0.0;
  std::size_t count = 0;
};

// F_{k,j} for k = 0..depth; depths[k] holds 2^k cells.
struct DyadicTable {
  std::size_t layer = 0;
  std::vector<std::vector<DyadicCell>> depths;
};

struct TiltedMeasures {
  std::vector<double> block_epsilon;  // nu_n(B_i) / nu(B_i) - 1
  std::vector<std::size_t> block_counts;
  std::vector<double> layer_delta;    // nu_n(A_j) / nu(A_j) - 1
  std::vector<std::size_t> layer_counts;
  std::vector<DyadicTable> dyadic;    // one per layer that uses dyadic refinement
};

TiltedMeasures build_tilted_measures(const PartitionScheme& scheme, const CdfEvaluator& F,
                                     const EmpiricalMeasure& em);

// 2^depth cells of equal nu-mass (hence equal tilted mass) nested under the
// depth-1 family. Throws domain_error when depth exceeds the layer's k_n.
std::vector<DyadicCell> dyadic_family(const Layer& layer, const CdfEvaluator& F,
                                      const EmpiricalMeasure& em, int depth);

struct CellRecord {
  std::string stage;
  int block = -1;
  int layer = -1;
  int depth = -1;
  std::size_t cell = 0;
  double lo = 0.0;
  double hi = 0.0;
  double source_mass = 0.0;
  double target_mass = 0.0;
  double displacement = 0.0;
};

struct LayerStages {
  std::size_t layer = 0;
  // Direct W_inf(nu_bar|A_j, nu_n|A_j).
  double direct = 0.0;
  // Per dyadic step k -> k+1 (max over cells) and the final cell-to-atoms step.
  std::vector<double> depth_steps;
  double final_step = 0.0;
  // Empirical constant implied by each dyadic step against
  // (j+1)^beta sqrt(nu(A_j) log n / (2^k n)).
  std::vector<double> implied_constants;
  // Displacement charged to this layer in the composed plan.
  double charged = 0.0;
};

struct TransportCertificate {
  std::size_t n = 0;
  double beta = kDefaultBeta;
  double nu_to_tilde = 0.0;                 // W_inf(nu, nu_tilde)
  std::vector<double> tilde_to_bar;         // per zero block
  std::vector<LayerStages> layers;
  double complement_to_empirical = 0.0;     // max over components of D minus the B_i
  double max_displacement = 0.0;
  double mass_defect = 0.0;

  double exact_winf = 0.0;
  double theoretical_rate = 0.0;
  double rate_constant = 1.0;

  // Quantities behind the triangle and partition inequalities.
  double tilde_to_empirical = 0.0;          // W_inf(nu_tilde, nu_n)
  std::vector<double> bar_to_empirical;     // W_inf(nu_bar|B_i, nu_n|B_i)
  std::vector<double> max_layer_direct;     // max_j W_inf(nu_bar|A_j, nu_n|A_j) per zero block
  std::vector<double> tail_diameter_ratio;  // max_{j >= J0} diam(A_j) / (log n / n)^{1/(2(k+1))}
  std::optional<double> smoothing_ratio;    // W_inf(nu, nu_tilde) lambda / ||rho_tilde - rho||

  std::vector<CellRecord> cells;
};

inline constexpr double kMassTolerance = 1e-8;

TransportCertificate assemble_certificate(const PartitionScheme& scheme,
                                          const TiltedMeasures& tilted, const CdfEvaluator& F,
                                          const EmpiricalMeasure& em, double rate_constant = 1.0);

nlohmann::json to_json(const PartitionScheme& scheme);
nlohmann::json to_json(const TransportCertificate& cert);
void write_cells_csv(std::ostream& out, const TransportCertificate& cert);

}  // namespace winf
