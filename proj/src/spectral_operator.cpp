#include "fracwave/spectral_operator.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "json.hpp"

#include "fracwave/errors.hpp"

namespace fracwave {

namespace {

constexpr int kSchemaVersion = 1;

std::string describe_mode(std::size_t j, const Mode& md) {
  std::ostringstream os;
  os << "mode " << j << " (id " << md.id << ", m=" << md.m << ", w=" << md.w
     << ")";
  return os.str();
}

}  // namespace

SpectralGrid::SpectralGrid(std::vector<Mode> modes, double m0,
                           std::string label,
                           std::optional<DirichletBasis> basis)
    : modes_(std::move(modes)),
      m0_(m0),
      total_weight_(0.0),
      label_(std::move(label)),
      basis_(basis),
      base_m0_(m0) {
  if (modes_.empty()) {
    throw ValidationError(0, "spectral grid needs at least one mode");
  }
  if (!(m0_ > 0.0) || !std::isfinite(m0_)) {
    std::ostringstream os;
    os << "m0 must be finite and > 0, got " << m0_;
    throw ValidationError(0, os.str());
  }
  base_m_.reserve(modes_.size());
  for (std::size_t j = 0; j < modes_.size(); ++j) {
    const Mode& md = modes_[j];
    if (!std::isfinite(md.m) || md.m < m0_) {
      throw ValidationError(j, describe_mode(j, md) + ": eigenvalue below m0=" +
                                   std::to_string(m0_));
    }
    if (!(md.w > 0.0) || !std::isfinite(md.w)) {
      throw ValidationError(j, describe_mode(j, md) + ": weight must be > 0");
    }
    total_weight_ += md.w;
    base_m_.push_back(md.m);
  }
  if (!std::isfinite(total_weight_)) {
    throw ValidationError(0, "total spectral weight is not finite");
  }
}

std::vector<double> SpectralGrid::eigenvalues() const {
  std::vector<double> m(modes_.size());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = modes_[j].m;
  return m;
}

GridFunction::GridFunction(GridPtr g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)) {
  if (!grid) throw Error(ErrorKind::Validation, "grid function without grid");
  if (values.size() != grid->size()) {
    std::ostringstream os;
    os << "grid function has " << values.size() << " values but grid '"
       << grid->label() << "' has " << grid->size() << " modes";
    throw ValidationError(std::min(values.size(), grid->size()), os.str());
  }
}

GridFunction GridFunction::zeros(GridPtr g) {
  const std::size_t n = g->size();
  return GridFunction(std::move(g), std::vector<double>(n, 0.0));
}

GridPtr build_dirichlet_laplacian(double length, int n_modes) {
  if (!(length > 0.0) || n_modes < 1) {
    throw Error(ErrorKind::ParameterDomain,
                "Dirichlet Laplacian needs length > 0 and n_modes >= 1");
  }
  std::vector<Mode> modes;
  modes.reserve(n_modes);
  for (int k = 1; k <= n_modes; ++k) {
    const double root = k * std::numbers::pi / length;
    modes.push_back({k, root * root, 1.0});
  }
  const double m0 = modes.front().m;
  std::ostringstream label;
  label << "dirichlet-laplacian(L=" << length << ",N=" << n_modes << ")";
  return std::make_shared<SpectralGrid>(std::move(modes), m0, label.str(),
                                        DirichletBasis{length});
}

GridPtr build_fractional_power(const SpectralGrid& g, double s) {
  if (!(s > 0.0 && s <= 1.0)) {
    throw Error(ErrorKind::ParameterDomain,
                "fractional power needs s in (0, 1]");
  }
  if (s == 1.0) return std::make_shared<SpectralGrid>(g);
  std::vector<Mode> modes = g.modes();
  for (auto& md : modes) md.m = std::pow(md.m, s);
  std::ostringstream label;
  label << g.label() << "^" << s;
  return std::make_shared<SpectralGrid>(std::move(modes), std::pow(g.m0(), s),
                                        label.str(), g.dirichlet_basis());
}

GridPtr build_harmonic_oscillator(int n_modes) {
  if (n_modes < 1) {
    throw Error(ErrorKind::ParameterDomain,
                "harmonic oscillator needs n_modes >= 1");
  }
  std::vector<Mode> modes;
  modes.reserve(n_modes);
  for (int k = 0; k < n_modes; ++k) modes.push_back({k, 2.0 * k + 1.0, 1.0});
  return std::make_shared<SpectralGrid>(
      std::move(modes), 1.0,
      "harmonic-oscillator(N=" + std::to_string(n_modes) + ")");
}

GridPtr shift(const SpectralGrid& g, double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) {
    throw Error(ErrorKind::ParameterDomain, "shift needs c >= 0");
  }
  auto out = std::make_shared<SpectralGrid>(g);
  if (c == 0.0) return out;
  out->offset_ = g.offset_ + c;
  for (std::size_t j = 0; j < out->modes_.size(); ++j) {
    out->modes_[j].m = out->base_m_[j] + out->offset_;
  }
  out->m0_ = out->base_m0_ + out->offset_;
  std::ostringstream label;
  label << g.label() << "+" << c;
  out->label_ = label.str();
  return out;
}

GridPtr load_spectral_measure(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Validation,
                std::string("spectral measure: ") + e.what());
  }
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!doc.contains(key)) {
      throw Error(ErrorKind::Validation,
                  std::string("spectral measure: missing field '") + key + "'");
    }
    return doc.at(key);
  };
  try {
    if (doc.contains("schema_version") &&
        doc.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorKind::Validation,
                  "spectral measure: unsupported schema_version");
    }
    const double m0 = require("m0").get<double>();
    const double declared_total = require("total_weight").get<double>();
    const std::string label =
        doc.contains("label") ? doc.at("label").get<std::string>() : "measure";
    const auto& arr = require("modes");
    if (!arr.is_array() || arr.empty()) {
      throw ValidationError(0, "spectral measure: modes must be a non-empty "
                               "array of [m, w] pairs");
    }
    std::vector<Mode> modes;
    modes.reserve(arr.size());
    for (std::size_t j = 0; j < arr.size(); ++j) {
      const auto& e = arr[j];
      if (!e.is_array() || e.size() != 2) {
        throw ValidationError(j, "spectral measure: mode " +
                                     std::to_string(j) + " is not an [m, w] pair");
      }
      modes.push_back({static_cast<long>(j), e[0].get<double>(),
                       e[1].get<double>()});
    }
    auto grid = std::make_shared<SpectralGrid>(std::move(modes), m0, label);
    const double total = grid->total_weight();
    if (std::abs(total - declared_total) > 1e-9 * std::max(1.0, total)) {
      std::ostringstream os;
      os << "spectral measure: declared total_weight " << declared_total
         << " differs from the sum of weights " << total;
      throw Error(ErrorKind::Validation, os.str());
    }
    return grid;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Validation,
                std::string("spectral measure: ") + e.what());
  }
}

GridPtr load_spectral_measure_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Validation, "cannot open spectral measure " + path);
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return load_spectral_measure(buf.str());
}

std::string spectral_measure_document(const SpectralGrid& g) {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["label"] = g.label();
  doc["m0"] = g.m0();
  doc["total_weight"] = g.total_weight();
  auto modes = nlohmann::json::array();
  for (const auto& md : g.modes()) modes.push_back({md.m, md.w});
  doc["modes"] = std::move(modes);
  return doc.dump(2);
}

double norm_V(const SpectralGrid& g, std::span<const double> v,
              FractionalIndex idx) {
  if (v.size() != g.size()) {
    throw Error(ErrorKind::Validation, "norm_V: length does not match grid");
  }
  double s = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (v[j] == 0.0) continue;
    const double a = std::pow(g.eigenvalue(j), idx.gamma) * v[j];
    s += g.weight(j) * a * a;
  }
  return std::sqrt(s);
}

double norm_V(const GridFunction& v, FractionalIndex idx) {
  return norm_V(*v.grid, v.values, idx);
}

std::vector<double> synthesize_dirichlet(const SpectralGrid& g,
                                         std::span<const double> coeffs,
                                         std::span<const double> x) {
  const auto& basis = g.dirichlet_basis();
  if (!basis) {
    throw Error(ErrorKind::Capability,
                "grid '" + g.label() + "' has no Dirichlet sine basis");
  }
  if (coeffs.size() != g.size()) {
    throw Error(ErrorKind::Validation, "synthesis: length does not match grid");
  }
  const double L = basis->length;
  const double norm = std::sqrt(2.0 / L);
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < coeffs.size(); ++j) {
      s += coeffs[j] * std::sin(g.mode(j).id * std::numbers::pi * x[i] / L);
    }
    out[i] = norm * s;
  }
  return out;
}

}  // namespace fracwave
