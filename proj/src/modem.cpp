#include "coordtune/modem.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace coordtune {

Constellation::Constellation(int order, std::vector<Complex> points) : order_(order), points_(std::move(points)) {
  if (order_ < 2 || static_cast<std::size_t>(order_) != points_.size()) {
    throw std::invalid_argument("constellation order must match its point count");
  }
}

double Constellation::average_energy() const {
  double e = 0.0;
  for (const auto& c : points_) e += std::norm(c);
  return e / static_cast<double>(points_.size());
}

Constellation qam_constellation(int order) {
  int side = 0;
  while (side * side < order) ++side;
  const bool power_of_two = order >= 4 && (order & (order - 1)) == 0;
  if (!power_of_two || side * side != order) {
    throw std::invalid_argument("unsupported QAM order " + std::to_string(order) +
                                " (need a square power of two: 4, 16, 64, ...)");
  }
  // E|c|^2 of the unnormalized square grid is 2 (M - 1) / 3.
  const double scale = 1.0 / std::sqrt(2.0 * (order - 1) / 3.0);
  std::vector<Complex> points;
  points.reserve(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    const int col = i % side;
    const int row = i / side;
    points.emplace_back((2 * col - (side - 1)) * scale, (2 * row - (side - 1)) * scale);
  }
  return Constellation(order, std::move(points));
}

ModulationMoments constellation_moments(const Constellation& constellation) {
  double m2 = 0.0, m4 = 0.0, m6 = 0.0;
  for (const auto& c : constellation.points()) {
    const double e = std::norm(c);
    m2 += e;
    m4 += e * e;
    m6 += e * e * e;
  }
  const auto n = static_cast<double>(constellation.order());
  m2 /= n;
  m4 /= n;
  m6 /= n;
  return {m4 / (m2 * m2), m6 / (m2 * m2 * m2)};
}

Eigen::MatrixXd SymbolBatch::onehot() const {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(indices.size()), order);
  for (std::size_t i = 0; i < indices.size(); ++i) out(static_cast<Eigen::Index>(i), indices[i]) = 1.0;
  return out;
}

SymbolBatch generate_symbols(Rng& rng, const Constellation& constellation, std::size_t n) {
  if (n == 0) throw std::invalid_argument("generate_symbols: n must be >= 1");
  SymbolBatch batch;
  batch.order = constellation.order();
  batch.indices.resize(n);
  batch.mapped.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto idx = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(constellation.order())));
    batch.indices[i] = idx;
    batch.mapped[i] = constellation[idx];
  }
  return batch;
}

double ser(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw std::invalid_argument("ser: " + std::to_string(predicted.size()) + " predictions for " +
                                std::to_string(truth.size()) + " symbols");
  }
  if (truth.empty()) throw std::invalid_argument("ser: empty input");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) errors += predicted[i] != truth[i] ? 1 : 0;
  return static_cast<double>(errors) / static_cast<double>(truth.size());
}

std::vector<int> ml_baseline_detect(std::span<const Complex> received, const Constellation& constellation) {
  std::vector<int> out(received.size());
  const auto& pts = constellation.points();
  for (std::size_t i = 0; i < received.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const double d = std::norm(received[i] - pts[k]);
      if (d < best) {
        best = d;
        arg = static_cast<int>(k);
      }
    }
    out[i] = arg;
  }
  return out;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index arg = 0;
    for (Eigen::Index c = 1; c < scores.cols(); ++c) {
      if (scores(r, c) > scores(r, arg)) arg = c;
    }
    out[static_cast<std::size_t>(r)] = static_cast<int>(arg);
  }
  return out;
}

void write_constellation_csv(std::ostream& out, const Constellation& constellation) {
  out << "index,re,im\n";
  out.precision(17);
  for (int i = 0; i < constellation.order(); ++i) {
    out << i << ',' << constellation[i].real() << ',' << constellation[i].imag() << '\n';
  }
}

}  // namespace coordtune
