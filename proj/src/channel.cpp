#include "coordtune/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "coordtune/quadrature.hpp"

namespace coordtune {

namespace {

using Json = nlohmann::ordered_json;

void require_shape(double alpha, double beta) {
  if (!(alpha > 0.0 && std::isfinite(alpha)) || !(beta > 0.0 && std::isfinite(beta))) {
    throw std::invalid_argument("Gamma-Gamma alpha and beta must be finite and > 0");
  }
}

double log_gg_norm(double alpha, double beta) {
  return std::log(2.0) + 0.5 * (alpha + beta) * std::log(alpha * beta) - std::lgamma(alpha) - std::lgamma(beta);
}

// Density of u = sqrt(I): 2u f(u^2). Finite at u = 0 whenever min(alpha, beta) >= 1/2.
double gg_pdf_sqrt(double u, double alpha, double beta, double log_norm) {
  if (u <= 0.0) return 0.0;
  const double i = u * u;
  const double k = std::cyl_bessel_k(std::abs(alpha - beta), 2.0 * std::sqrt(alpha * beta * i));
  if (!(k > 0.0)) return 0.0;
  return 2.0 * u * std::exp(log_norm + (0.5 * (alpha + beta) - 1.0) * std::log(i) + std::log(k));
}

double segment_mass(double lo, double hi, double alpha, double beta, double log_norm) {
  return integrate([&](double u) { return gg_pdf_sqrt(u, alpha, beta, log_norm); }, lo, hi, 1e-15, 1e-12);
}

void check_keys(const Json& doc, std::initializer_list<const char*> allowed, const std::string& what) {
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : doc.items()) {
    if (!ok.count(key)) throw std::invalid_argument(what + ": unknown field '" + key + "'");
  }
}

template <typename T>
void read_opt(const Json& doc, const char* key, T& out) {
  if (doc.contains(key)) {
    try {
      out = doc.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw std::invalid_argument(std::string("channel field '") + key + "' has the wrong type");
    }
  }
}

// JSON has no infinity; "inf" is accepted as a string.
double read_db(const Json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const auto& v = doc.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string() && (v.get<std::string>() == "inf" || v.get<std::string>() == "Infinity")) {
    return std::numeric_limits<double>::infinity();
  }
  throw std::invalid_argument(std::string("channel field '") + key + "' must be a number or \"inf\"");
}

Json db_to_json(double v) { return std::isinf(v) ? Json("inf") : Json(v); }

std::vector<Complex> add_noise(std::vector<Complex> out, double component_variance, Rng& rng) {
  if (component_variance <= 0.0) return out;
  std::normal_distribution<double> n(0.0, std::sqrt(component_variance));
  for (auto& r : out) r += Complex(n(rng), n(rng));
  return out;
}

}  // namespace

GammaGammaParams gg_params_from_rytov(double sigma_r2) {
  if (!(sigma_r2 > 0.0) || !std::isfinite(sigma_r2)) throw std::invalid_argument("Rytov variance must be > 0");
  const double s125 = std::pow(sigma_r2, 6.0 / 5.0);  // sigma_R^(12/5)
  GammaGammaParams p;
  p.sigma_r2 = sigma_r2;
  p.alpha = 1.0 / std::expm1(0.49 * sigma_r2 / std::pow(1.0 + 1.11 * s125, 7.0 / 6.0));
  p.beta = 1.0 / std::expm1(0.51 * sigma_r2 / std::pow(1.0 + 0.69 * s125, 5.0 / 6.0));
  return p;
}

GammaGammaParams rytov_and_gg_params(const FsoLinkGeometry& g) {
  if (!(g.cn2 > 0.0) || !(g.wavelength > 0.0) || !(g.link_length > 0.0)) {
    throw std::invalid_argument("FSO geometry: cn2, wavelength and link_length must be > 0");
  }
  const double k = 2.0 * std::numbers::pi / g.wavelength;
  return gg_params_from_rytov(1.23 * g.cn2 * std::pow(k, 7.0 / 6.0) * std::pow(g.link_length, 11.0 / 6.0));
}

double gg_pdf(double i, double alpha, double beta) {
  require_shape(alpha, beta);
  if (!(i > 0.0) || !std::isfinite(i)) throw std::domain_error("gg_pdf: irradiance must be finite and > 0");
  const double k = std::cyl_bessel_k(std::abs(alpha - beta), 2.0 * std::sqrt(alpha * beta * i));
  if (!(k > 0.0)) return 0.0;
  return std::exp(log_gg_norm(alpha, beta) + (0.5 * (alpha + beta) - 1.0) * std::log(i) + std::log(k));
}

double gg_cdf(double x, double alpha, double beta) {
  require_shape(alpha, beta);
  if (!(x > 0.0)) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double ln = log_gg_norm(alpha, beta);
  const double u = std::sqrt(x);
  // Split at the unit-mean scale so the integrand peak is resolved on both sides.
  double mass = 0.0;
  double lo = 0.0;
  for (double edge : {0.25, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    if (edge >= u) break;
    mass += segment_mass(lo, edge, alpha, beta, ln);
    lo = edge;
  }
  mass += segment_mass(lo, u, alpha, beta, ln);
  return std::clamp(mass, 0.0, 1.0);
}

GammaGammaCdf::GammaGammaCdf(double alpha, double beta, double upper, int nodes)
    : alpha_(alpha), beta_(beta), du_(0.0) {
  require_shape(alpha, beta);
  if (!(upper > 0.0) || !std::isfinite(upper)) throw std::invalid_argument("GammaGammaCdf: upper must be > 0");
  if (nodes < 2) throw std::invalid_argument("GammaGammaCdf: need at least 2 nodes");
  const double ln = log_gg_norm(alpha, beta);
  du_ = std::sqrt(upper) / (nodes - 1);
  cdf_.resize(static_cast<std::size_t>(nodes));
  slope_.resize(static_cast<std::size_t>(nodes));
  double acc = 0.0;
  for (int j = 0; j < nodes; ++j) {
    const double u = j * du_;
    if (j > 0) acc += segment_mass(u - du_, u, alpha, beta, ln);
    cdf_[static_cast<std::size_t>(j)] = acc;
    slope_[static_cast<std::size_t>(j)] = gg_pdf_sqrt(u, alpha, beta, ln);
  }
}

double GammaGammaCdf::operator()(double x) const {
  if (!(x > 0.0)) return 0.0;
  const double u = std::sqrt(x);
  const double t_all = u / du_;
  const auto last = cdf_.size() - 1;
  if (t_all >= static_cast<double>(last)) return gg_cdf(x, alpha_, beta_);
  const auto j = static_cast<std::size_t>(t_all);
  const double t = t_all - static_cast<double>(j);
  const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
  const double h10 = t * (1 - t) * (1 - t);
  const double h01 = t * t * (3 - 2 * t);
  const double h11 = t * t * (t - 1);
  const double v = h00 * cdf_[j] + h10 * du_ * slope_[j] + h01 * cdf_[j + 1] + h11 * du_ * slope_[j + 1];
  return std::clamp(v, 0.0, 1.0);
}

std::vector<double> gg_sample(Rng& rng, double alpha, double beta, std::size_t n) {
  require_shape(alpha, beta);
  std::gamma_distribution<double> x(alpha, 1.0 / alpha);
  std::gamma_distribution<double> y(beta, 1.0 / beta);
  std::vector<double> out(n);
  for (auto& v : out) {
    const double a = x(rng);
    v = a * y(rng);
  }
  return out;
}

double gg_ks_statistic(std::vector<double> samples, double alpha, double beta) {
  if (samples.empty()) throw std::invalid_argument("gg_ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const GammaGammaCdf cdf(alpha, beta, std::max(samples.back(), 1.0));
  const auto n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return d;
}

void FsoParams::validate() const {
  require_shape(alpha, beta);
  if (std::isnan(es_n0_db) || es_n0_db == -std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("FSO es_n0_db must be a number or +inf");
  }
}

std::vector<Complex> fso_apply(std::span<const Complex> symbols, const FsoParams& params, Rng& rng) {
  params.validate();
  std::vector<Complex> out(symbols.begin(), symbols.end());
  if (params.turbulence) {
    std::gamma_distribution<double> x(params.alpha, 1.0 / params.alpha);
    std::gamma_distribution<double> y(params.beta, 1.0 / params.beta);
    for (auto& r : out) {
      const double a = x(rng);
      const double i = a * y(rng);
      r *= params.fade == FadeMode::intensity ? i : std::sqrt(i);
    }
  }
  if (std::isinf(params.es_n0_db)) return out;
  return add_noise(std::move(out), 0.5 / std::pow(10.0, params.es_n0_db / 10.0), rng);
}

void FiberParams::validate() const {
  if (n_spans < 1) throw std::invalid_argument("fiber n_spans must be >= 1");
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string("fiber ") + name + " must be > 0");
  };
  positive(span_length_km, "span_length_km");
  positive(carrier_frequency, "carrier_frequency");
  positive(planck, "planck");
  positive(baud_rate, "baud_rate");
  if (!(alpha_db_per_km >= 0.0)) throw std::invalid_argument("fiber alpha_db_per_km must be >= 0");
  if (!std::isfinite(launch_power_dbm)) throw std::invalid_argument("fiber launch_power_dbm must be finite");
  if (!std::isfinite(noise_figure_db)) throw std::invalid_argument("fiber noise_figure_db must be finite");
  if (!(chi1 >= 0.0) || !std::isfinite(chi2)) throw std::invalid_argument("fiber chi1 must be >= 0 and chi2 finite");
  if (!(mu4 >= 1.0) || !(mu6 >= 1.0) || !std::isfinite(mu4) || !std::isfinite(mu6)) {
    throw std::invalid_argument("fiber mu4 and mu6 must be finite and >= 1");
  }
}

double FiberParams::launch_power_w() const { return std::pow(10.0, launch_power_dbm / 10.0) * 1e-3; }

FiberNoise fiber_noise_variance(const FiberParams& p) {
  p.validate();
  FiberNoise n;
  const double gain = std::pow(10.0, p.alpha_db_per_km * p.span_length_km / 10.0);
  const double nf = std::pow(10.0, p.noise_figure_db / 10.0);
  n.ase = p.n_spans * (gain - 1.0) * p.planck * p.carrier_frequency * nf * p.baud_rate;
  n.launch_power = p.launch_power_w();
  n.nlin = std::pow(n.launch_power, 3) * (p.chi1 + p.chi2 * (p.mu4 - 2.0));
  if (n.nlin < 0.0) throw std::invalid_argument("fiber NLIN variance is negative for these chi1/chi2/mu4");
  n.total = n.ase + n.nlin;
  n.normalized = n.total / n.launch_power;
  return n;
}

std::vector<Complex> fiber_apply(std::span<const Complex> symbols, const FiberParams& params, Rng& rng) {
  const auto noise = fiber_noise_variance(params);
  return add_noise({symbols.begin(), symbols.end()}, 0.5 * noise.normalized, rng);
}

AwgnParams AwgnParams::from_es_n0_db(double es_n0_db) { return {std::pow(10.0, -es_n0_db / 10.0)}; }

void AwgnParams::validate() const {
  if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance)) {
    throw std::invalid_argument("awgn noise_variance must be finite and >= 0");
  }
}

std::vector<Complex> awgn_apply(std::span<const Complex> symbols, const AwgnParams& params, Rng& rng) {
  params.validate();
  return add_noise({symbols.begin(), symbols.end()}, 0.5 * params.noise_variance, rng);
}

std::string channel_type(const ChannelModel& model) {
  static const char* names[] = {"fso", "fiber", "awgn"};
  return names[model.index()];
}

void validate(const ChannelModel& model) {
  std::visit([](const auto& p) { p.validate(); }, model);
}

std::vector<Complex> apply_channel(const ChannelModel& model, std::span<const Complex> symbols, Rng& rng) {
  if (const auto* f = std::get_if<FsoParams>(&model)) return fso_apply(symbols, *f, rng);
  if (const auto* f = std::get_if<FiberParams>(&model)) return fiber_apply(symbols, *f, rng);
  return awgn_apply(symbols, std::get<AwgnParams>(model), rng);
}

Json channel_to_json(const ChannelModel& model) {
  Json j;
  j["type"] = channel_type(model);
  if (const auto* f = std::get_if<FsoParams>(&model)) {
    j["alpha"] = f->alpha;
    j["beta"] = f->beta;
    j["es_n0_db"] = db_to_json(f->es_n0_db);
    j["fade_on_amplitude"] = f->fade == FadeMode::intensity ? "intensity" : "sqrt_intensity";
    j["turbulence"] = f->turbulence;
  } else if (const auto* p = std::get_if<FiberParams>(&model)) {
    j["n_spans"] = p->n_spans;
    j["span_length_km"] = p->span_length_km;
    j["alpha_db_per_km"] = p->alpha_db_per_km;
    j["gamma_nl"] = p->gamma_nl;
    j["carrier_frequency"] = p->carrier_frequency;
    j["planck"] = p->planck;
    j["noise_figure_db"] = p->noise_figure_db;
    j["baud_rate"] = p->baud_rate;
    j["channel_spacing"] = p->channel_spacing;
    j["dispersion"] = p->dispersion;
    j["beta2"] = p->beta2;
    j["pre_dispersion"] = p->pre_dispersion;
    j["launch_power_dbm"] = p->launch_power_dbm;
    j["mu4"] = p->mu4;
    j["mu6"] = p->mu6;
    j["chi1"] = p->chi1;
    j["chi2"] = p->chi2;
  } else {
    j["noise_variance"] = std::get<AwgnParams>(model).noise_variance;
  }
  return j;
}

ChannelModel channel_from_json(const Json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("channel config must be a JSON object");
  if (!doc.contains("type") || !doc.at("type").is_string()) {
    throw std::invalid_argument("channel config needs a string field 'type'");
  }
  const auto type = doc.at("type").get<std::string>();
  ChannelModel model;
  if (type == "fso") {
    check_keys(doc, {"type", "alpha", "beta", "es_n0_db", "fade_on_amplitude", "turbulence", "cn2", "wavelength", "link_length"},
               "fso channel");
    FsoParams f;
    // Geometry, when given, determines alpha/beta unless they are set explicitly.
    if (doc.contains("cn2") || doc.contains("wavelength") || doc.contains("link_length")) {
      FsoLinkGeometry g;
      read_opt(doc, "cn2", g.cn2);
      read_opt(doc, "wavelength", g.wavelength);
      read_opt(doc, "link_length", g.link_length);
      const auto gg = rytov_and_gg_params(g);
      f.alpha = gg.alpha;
      f.beta = gg.beta;
    }
    read_opt(doc, "alpha", f.alpha);
    read_opt(doc, "beta", f.beta);
    f.es_n0_db = read_db(doc, "es_n0_db", f.es_n0_db);
    if (doc.contains("fade_on_amplitude")) {
      const auto fade = doc.at("fade_on_amplitude").get<std::string>();
      if (fade == "intensity") f.fade = FadeMode::intensity;
      else if (fade == "sqrt_intensity") f.fade = FadeMode::sqrt_intensity;
      else throw std::invalid_argument("fso fade_on_amplitude must be 'intensity' or 'sqrt_intensity', got '" + fade + "'");
    }
    read_opt(doc, "turbulence", f.turbulence);
    model = f;
  } else if (type == "fiber") {
    check_keys(doc,
               {"type", "n_spans", "span_length_km", "alpha_db_per_km", "gamma_nl", "carrier_frequency", "planck",
                "noise_figure_db", "baud_rate", "channel_spacing", "dispersion", "beta2", "pre_dispersion",
                "launch_power_dbm", "mu4", "mu6", "chi1", "chi2"},
               "fiber channel");
    FiberParams p;
    read_opt(doc, "n_spans", p.n_spans);
    read_opt(doc, "span_length_km", p.span_length_km);
    read_opt(doc, "alpha_db_per_km", p.alpha_db_per_km);
    read_opt(doc, "gamma_nl", p.gamma_nl);
    read_opt(doc, "carrier_frequency", p.carrier_frequency);
    read_opt(doc, "planck", p.planck);
    read_opt(doc, "noise_figure_db", p.noise_figure_db);
    read_opt(doc, "baud_rate", p.baud_rate);
    read_opt(doc, "channel_spacing", p.channel_spacing);
    read_opt(doc, "dispersion", p.dispersion);
    read_opt(doc, "beta2", p.beta2);
    read_opt(doc, "pre_dispersion", p.pre_dispersion);
    read_opt(doc, "launch_power_dbm", p.launch_power_dbm);
    read_opt(doc, "mu4", p.mu4);
    read_opt(doc, "mu6", p.mu6);
    read_opt(doc, "chi1", p.chi1);
    read_opt(doc, "chi2", p.chi2);
    model = p;
  } else if (type == "awgn") {
    check_keys(doc, {"type", "noise_variance", "es_n0_db"}, "awgn channel");
    AwgnParams a;
    if (doc.contains("es_n0_db")) a = AwgnParams::from_es_n0_db(read_db(doc, "es_n0_db", 0.0));
    read_opt(doc, "noise_variance", a.noise_variance);
    model = a;
  } else {
    throw std::invalid_argument("channel type must be 'fso', 'fiber' or 'awgn', got '" + type + "'");
  }
  validate(model);
  return model;
}

}  // namespace coordtune
