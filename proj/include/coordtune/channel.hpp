#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "coordtune/modem.hpp"
#include "coordtune/random.hpp"

namespace coordtune {

// ---------------------------------------------------------------- FSO

struct FsoLinkGeometry {
  double cn2 = 1e-14;            ///< refractive-index structure parameter, m^(-2/3)
  double wavelength = 1550e-9;   ///< m
  double link_length = 2000.0;   ///< m
};

struct GammaGammaParams {
  double sigma_r2 = 0.0;  ///< Rytov variance
  double alpha = 0.0;
  double beta = 0.0;
};

/// Rytov variance 1.23 cn2 k^(7/6) L^(11/6) and the Gamma-Gamma shape/scale
/// parameters it implies (plane-wave closed forms).
GammaGammaParams rytov_and_gg_params(const FsoLinkGeometry& geometry);
/// alpha and beta for a given Rytov variance (> 0).
GammaGammaParams gg_params_from_rytov(double sigma_r2);

/// Gamma-Gamma density of the normalized irradiance; throws std::domain_error for i <= 0.
double gg_pdf(double i, double alpha, double beta);
/// CDF by adaptive quadrature of gg_pdf; 0 for x <= 0.
double gg_cdf(double x, double alpha, double beta);

/// Tabulated CDF for repeated evaluation (KS tests). Piecewise cubic Hermite in
/// u = sqrt(I) with exact node values from quadrature and node slopes from the pdf.
class GammaGammaCdf {
 public:
  GammaGammaCdf(double alpha, double beta, double upper, int nodes = 4096);
  double operator()(double x) const;

 private:
  double alpha_, beta_, du_;
  std::vector<double> cdf_;
  std::vector<double> slope_;
};

/// I = X * Y with X ~ Gamma(alpha, 1/alpha), Y ~ Gamma(beta, 1/beta): unit mean.
std::vector<double> gg_sample(Rng& rng, double alpha, double beta, std::size_t n);

/// Kolmogorov-Smirnov distance between `samples` and the Gamma-Gamma law.
double gg_ks_statistic(std::vector<double> samples, double alpha, double beta);

enum class FadeMode { intensity, sqrt_intensity };

struct FsoParams {
  double alpha = 4.2;
  double beta = 1.4;
  double es_n0_db = 0.0;
  FadeMode fade = FadeMode::intensity;
  /// false replaces the fade by 1 (pure AWGN at the same Es/N0).
  bool turbulence = true;

  void validate() const;
};

/// r = h s + n with h = I (or sqrt(I)) and per-component noise variance
/// 1 / (2 * 10^(EsN0/10)). An infinite Es/N0 adds no noise.
std::vector<Complex> fso_apply(std::span<const Complex> symbols, const FsoParams& params, Rng& rng);

// ---------------------------------------------------------------- Fiber

/// Long-haul link abstracted as ASE + NLIN additive Gaussian noise.
/// chi1/chi2 are the NLIN system coefficients (1/W^2). They are configuration
/// inputs; the defaults are a calibration that puts the default link at about
/// 15 dB effective SNR, not measured values.
struct FiberParams {
  int n_spans = 20;
  double span_length_km = 100.0;
  double alpha_db_per_km = 0.2;
  double gamma_nl = 1.3;               ///< 1/W/km
  double carrier_frequency = 1.9341e14;  ///< Hz
  double planck = 6.6261e-34;          ///< J s
  double noise_figure_db = 5.0;
  double baud_rate = 32e9;             ///< Hz
  double channel_spacing = 50e9;       ///< Hz, recorded only
  double dispersion = 16.4640;         ///< D, recorded only
  double beta2 = 21.0;                 ///< recorded only
  double pre_dispersion = 0.0;         ///< ps^2, recorded only
  double launch_power_dbm = 2.0;
  double mu4 = 1.32;
  double mu6 = 1.96;                   ///< carried, unused by the NLIN closure
  double chi1 = 6800.0;
  double chi2 = 1000.0;

  void validate() const;
  double launch_power_w() const;
};

struct FiberNoise {
  double ase = 0.0;           ///< W
  double nlin = 0.0;          ///< W
  double total = 0.0;         ///< W
  double launch_power = 0.0;  ///< W
  /// total / launch_power: noise variance seen by a unit-energy constellation.
  double normalized = 0.0;
  double snr_eff() const { return launch_power / total; }
};

/// sigma_ASE^2 = N_spans (G - 1) h f_c NF B, G = 10^(alpha L_span / 10);
/// sigma_NLIN^2 = P0^3 (chi1 + chi2 (mu4 - 2)).
FiberNoise fiber_noise_variance(const FiberParams& params);

/// r = s + n with complex noise variance 1 / SNR_eff.
std::vector<Complex> fiber_apply(std::span<const Complex> symbols, const FiberParams& params, Rng& rng);

// ---------------------------------------------------------------- AWGN

struct AwgnParams {
  /// Total complex noise variance (N0 for unit-energy symbols).
  double noise_variance = 1.0;

  static AwgnParams from_es_n0_db(double es_n0_db);
  void validate() const;
};

std::vector<Complex> awgn_apply(std::span<const Complex> symbols, const AwgnParams& params, Rng& rng);

// ---------------------------------------------------------------- model

using ChannelModel = std::variant<FsoParams, FiberParams, AwgnParams>;

std::string channel_type(const ChannelModel& model);
void validate(const ChannelModel& model);
std::vector<Complex> apply_channel(const ChannelModel& model, std::span<const Complex> symbols, Rng& rng);

/// {"type": "fso"|"fiber"|"awgn", ...fields}. Unknown fields are rejected.
nlohmann::ordered_json channel_to_json(const ChannelModel& model);
ChannelModel channel_from_json(const nlohmann::ordered_json& doc);

}  // namespace coordtune
