#pragma once

#include <complex>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "coordtune/random.hpp"

namespace coordtune {

using Complex = std::complex<double>;

/// Square M-QAM with unit average energy. Point i sits at column i % sqrt(M),
/// row i / sqrt(M) of the level grid {-(L-1), ..., -1, 1, ..., L-1}.
class Constellation {
 public:
  Constellation(int order, std::vector<Complex> points);

  int order() const noexcept { return order_; }
  const std::vector<Complex>& points() const noexcept { return points_; }
  const Complex& operator[](int index) const { return points_.at(static_cast<std::size_t>(index)); }
  double average_energy() const;

 private:
  int order_;
  std::vector<Complex> points_;
};

/// M must be an even power of two (4, 16, 64, ...).
Constellation qam_constellation(int order);

/// Normalized fourth and sixth moments E|c|^4/(E|c|^2)^2 and E|c|^6/(E|c|^2)^3.
struct ModulationMoments {
  double mu4 = 1.0;
  double mu6 = 1.0;
};

ModulationMoments constellation_moments(const Constellation& constellation);

struct SymbolBatch {
  int order = 0;
  std::vector<int> indices;
  std::vector<Complex> mapped;

  std::size_t size() const noexcept { return indices.size(); }
  /// (n x M) matrix with a single 1 per row.
  Eigen::MatrixXd onehot() const;
};

/// Uniform i.i.d. symbol indices and their constellation points.
SymbolBatch generate_symbols(Rng& rng, const Constellation& constellation, std::size_t n);

/// Fraction of positions where predicted and true indices differ.
double ser(std::span<const int> predicted, std::span<const int> truth);

/// Minimum-distance decision; exact ties go to the lower index.
std::vector<int> ml_baseline_detect(std::span<const Complex> received, const Constellation& constellation);

/// Row-wise argmax of a score matrix; ties go to the lower column.
std::vector<int> argmax_rows(const Eigen::MatrixXd& scores);

/// CSV with header "index,re,im".
void write_constellation_csv(std::ostream& out, const Constellation& constellation);

}  // namespace coordtune
