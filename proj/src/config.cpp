#include "sdeinfer/config.hpp"

#include "sdeinfer/errors.hpp"
#include "sdeinfer/model.hpp"
#include "text_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sdeinfer {

namespace pt = boost::property_tree;

namespace {

std::string strip_comment(const std::string& line) {
  const std::string t = io::trim(line);
  if (t.empty() || t.front() == '#' || t.front() == ';') return {};
  std::size_t cut = std::string::npos;
  bool quoted = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '"') quoted = !quoted;
    if (!quoted && (t[i] == '#' || t[i] == ';') && i > 0 && (t[i - 1] == ' ' || t[i - 1] == '\t')) {
      cut = i;
      break;
    }
  }
  return io::trim(t.substr(0, cut));
}

std::string unquote(std::string v) {
  v = io::trim(v);
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') v = v.substr(1, v.size() - 2);
  return v;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& path) const {
    const auto node = tree_.get_optional<std::string>(pt::ptree::path_type(path, '/'));
    if (!node) return std::nullopt;
    return unquote(*node);
  }

  std::string require(const std::string& path) const {
    auto v = get(path);
    if (!v || v->empty()) throw ConfigError("missing required key '" + display(path) + "'");
    return *v;
  }

  double number(const std::string& path) const { return to_number(path, require(path)); }

  double number_or(const std::string& path, double fallback) const {
    const auto v = get(path);
    return v ? to_number(path, *v) : fallback;
  }

  std::uint64_t integer(const std::string& path) const { return to_integer(path, require(path)); }

  std::uint64_t integer_or(const std::string& path, std::uint64_t fallback) const {
    const auto v = get(path);
    return v ? to_integer(path, *v) : fallback;
  }

  static std::string display(const std::string& path) {
    std::string out = path;
    for (char& c : out)
      if (c == '/') c = '.';
    return out;
  }

  static double to_number(const std::string& path, const std::string& text) {
    try {
      return io::parse_double(text);
    } catch (const ArgumentError&) {
      throw ConfigError("key '" + display(path) + "': expected a number, got '" + text + "'");
    }
  }

  static std::uint64_t to_integer(const std::string& path, const std::string& text) {
    const std::string t = io::trim(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
      throw ConfigError("key '" + display(path) + "': expected a non-negative integer, got '" + text + "'");
    }
    return v;
  }

 private:
  const pt::ptree& tree_;
};

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  const std::string t = io::trim(text);
  std::vector<double> out;
  if (t.empty()) return out;
  if (t.find(':') != std::string::npos) {
    const auto parts = io::split(t, ':');
    if (parts.size() != 3) throw ConfigError("range must be start:step:stop, got '" + t + "'");
    const double start = Reader::to_number("range", parts[0]);
    const double step = Reader::to_number("range", parts[1]);
    const double stop = Reader::to_number("range", parts[2]);
    if (!(step > 0.0) || stop < start) throw ConfigError("range '" + t + "' is empty or has step <= 0");
    const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t k = 0; k < count; ++k) {
      // Snap to 12 significant digits so 0.01:0.01:0.5 yields 0.3, not 0.30000000000000004.
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.12g", start + static_cast<double>(k) * step);
      out.push_back(io::parse_double(buf));
    }
    return out;
  }
  for (const auto& cell : io::split(t, ',')) out.push_back(Reader::to_number("list", cell));
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  std::istringstream raw(text);
  std::ostringstream cleaned;
  for (std::string line; std::getline(raw, line);) cleaned << strip_comment(line) << '\n';

  pt::ptree tree;
  try {
    std::istringstream in(cleaned.str());
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.message() + " (line " +
                      std::to_string(e.line()) + ")");
  }
  const Reader r(tree);

  ExperimentConfig c;
  c.source_text = text;
  c.name = r.get("name").value_or("experiment");
  c.seed = r.integer_or("seed", 0);
  c.epsilon = r.number("epsilon");
  c.h = r.number("h");
  c.stride = static_cast<std::size_t>(r.integer_or("stride", 1));
  c.phi = r.require("phi");
  c.basis = r.require("basis");

  const std::string theta = r.get("theta_true").value_or("auto");
  if (theta == "auto") {
    c.theta_source = ThetaSource::kAuto;
  } else if (theta == "none") {
    c.theta_source = ThetaSource::kNone;
  } else {
    c.theta_source = ThetaSource::kExplicit;
    const auto values = parse_number_list(theta);
    c.theta_true = Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
  }
  if (const auto tol = r.get("rank_tol"); tol && *tol != "auto") c.rank_tol = Reader::to_number("rank_tol", *tol);

  c.system_type = r.require("system/type");
  if (c.system_type == "fast_ou") {
    FastOuParams p;
    p.A = r.number("system/A");
    p.B = r.number_or("system/B", 0.0);
    p.sigma_a = r.get("system/sigma_a") ? r.number("system/sigma_a") : r.number("system/varsigma");
    p.sigma_b = r.number_or("system/sigma_b", 0.0);
    c.system = p;
  } else if (c.system_type == "langevin2d") {
    const auto entries = parse_number_list(r.require("system/M"));
    if (entries.size() != 4) throw ConfigError("system.M needs 4 entries (row-major 2x2)");
    Langevin2dParams p;
    p.M = Matrix(2, 2);
    p.M << entries[0], entries[1], entries[2], entries[3];
    p.sigma = r.number("system/sigma");
    c.system = p;
  } else if (c.system_type == "langevin1d") {
    c.system = Langevin1dParams{r.number("system/alpha"), r.number("system/sigma")};
  } else {
    // Left for validate_config to report as a registry miss.
    c.system = FastOuParams{};
  }

  const std::string kind = r.require("design/kind");
  if (kind == "ensemble") {
    c.design = DesignKind::kEnsemble;
    c.members = static_cast<std::size_t>(r.integer("design/N"));
  } else if (kind == "series") {
    c.design = DesignKind::kSeries;
    c.T_total = r.number("design/T_total");
    c.burn_in = r.number_or("design/burn_in", 10.0);
    if (const auto bw = r.get("design/bandwidth"); bw && *bw != "auto") {
      c.bandwidth = Reader::to_number("design.bandwidth", *bw);
    }
  } else {
    throw ConfigError("design.kind must be 'ensemble' or 'series', got '" + kind + "'");
  }
  c.m = static_cast<std::size_t>(r.integer("design/m"));
  c.t_max = r.number("design/t_max");

  if (const auto grid = r.get("sweep/t_grid")) {
    c.t_grid = parse_number_list(*grid);
  } else {
    c.t_grid = {c.t_max};
  }

  c.mle.v_prime = r.get("mle/v_prime").value_or("x");
  if (const auto strides = r.get("mle/strides")) {
    c.mle.strides.clear();
    for (double s : parse_number_list(*strides)) {
      if (s < 1.0 || s != std::floor(s)) throw ConfigError("mle.strides must be positive integers");
      c.mle.strides.push_back(static_cast<std::size_t>(s));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::size_t observed_dim(const ExperimentConfig& config) {
  return std::holds_alternative<Langevin2dParams>(config.system) ? 2 : 1;
}

SdeSystem make_system(const ExperimentConfig& config) {
  if (config.system_type == "fast_ou") {
    return make_fast_ou_system(std::get<FastOuParams>(config.system), config.epsilon);
  }
  if (config.system_type == "langevin2d") {
    const auto& p = std::get<Langevin2dParams>(config.system);
    return make_langevin_2d_system(p.M, p.sigma, config.epsilon);
  }
  if (config.system_type == "langevin1d") {
    const auto& p = std::get<Langevin1dParams>(config.system);
    return make_langevin_1d_system(p.alpha, p.sigma, config.epsilon);
  }
  throw RegistryError("unknown system type '" + config.system_type + "'");
}

std::optional<Vector> resolve_theta_true(const ExperimentConfig& config) {
  if (config.theta_source == ThetaSource::kNone) return std::nullopt;
  if (config.theta_source == ThetaSource::kExplicit) return config.theta_true;

  if (config.system_type == "fast_ou") {
    const auto& p = std::get<FastOuParams>(config.system);
    if (config.basis == "ou2" && p.B == 0.0 && p.sigma_b == 0.0) return Vector{{p.A, p.sigma_a}};
    if (config.basis == "cubic4") return Vector{{p.A, p.B, p.sigma_a, p.sigma_b}};
  } else if (config.system_type == "langevin2d" && config.basis == "linear2d6") {
    const auto& p = std::get<Langevin2dParams>(config.system);
    const Homogenized2d hom = homogenized_2d_coefficients(p.M, p.sigma);
    return Vector{{hom.drift(0, 0), hom.drift(0, 1), hom.drift(1, 0), hom.drift(1, 1),
                   hom.diffusion(0, 0), hom.diffusion(1, 1)}};
  } else if (config.system_type == "langevin1d" && config.basis == "ou2") {
    const auto& p = std::get<Langevin1dParams>(config.system);
    const auto hom = homogenized_langevin_coefficients(p.alpha, p.sigma, 2.0 * std::numbers::pi,
                                                       [](double y) { return std::cos(y); });
    return Vector{{-hom.A, hom.Sigma}};
  }
  return std::nullopt;
}

ConfigReport validate_config(const ExperimentConfig& c) {
  ConfigReport report;
  auto invalid = [&](std::string msg) {
    report.violations.push_back({ConfigViolation::Kind::kInvalid, std::move(msg)});
  };
  auto missing = [&](std::string msg) {
    report.violations.push_back({ConfigViolation::Kind::kRegistry, std::move(msg)});
  };

  const bool known_system =
      c.system_type == "fast_ou" || c.system_type == "langevin2d" || c.system_type == "langevin1d";
  if (!known_system) missing("unknown system type '" + c.system_type + "'");
  const std::size_t d = observed_dim(c);
  if (known_system) report.resolved.push_back("system = " + c.system_type + " (observed d = " + std::to_string(d) + ")");

  std::optional<std::size_t> n_params;
  try {
    const ParametrizedModel model = registry::make_basis(c.basis);
    n_params = model.n_params();
    report.resolved.push_back("basis = " + c.basis + " (d = " + std::to_string(model.dim()) +
                              ", n = " + std::to_string(model.n_params()) + ")");
    if (known_system && model.dim() != d) {
      invalid("basis '" + c.basis + "' has dimension " + std::to_string(model.dim()) +
              " but the system is observed in dimension " + std::to_string(d));
    }
  } catch (const RegistryError& e) {
    missing(e.what());
  }
  const auto phis = registry::phi_names();
  if (std::find(phis.begin(), phis.end(), c.phi) == phis.end()) {
    missing("unknown phi '" + c.phi + "'");
  } else if (!registry::phi_supports_dim(c.phi, d)) {
    invalid("phi '" + c.phi + "' is not defined in dimension " + std::to_string(d));
  } else {
    report.resolved.push_back("phi = " + c.phi);
  }

  if (!(c.epsilon > 0.0)) invalid("epsilon must be positive");
  if (!(c.h > 0.0)) invalid("h must be positive");
  if (c.stride == 0) invalid("stride must be >= 1");
  if (c.m == 0) invalid("design.m must be >= 1");
  if (c.design == DesignKind::kEnsemble && c.members == 0) invalid("design.N must be >= 1");

  if (std::holds_alternative<FastOuParams>(c.system) && c.system_type == "fast_ou") {
    const auto& p = std::get<FastOuParams>(c.system);
    if (!(p.sigma_a > 0.0) || p.sigma_b < 0.0) invalid("fast_ou needs sigma_a > 0 and sigma_b >= 0");
  }
  if (const auto* p = std::get_if<Langevin2dParams>(&c.system)) {
    if (std::abs(p->M(0, 1) - p->M(1, 0)) > 1e-12 || Eigen::LLT<Matrix>(p->M).info() != Eigen::Success) {
      invalid("system.M must be symmetric positive definite");
    }
    if (!(p->sigma > 0.0)) invalid("system.sigma must be positive");
  }
  if (const auto* p = std::get_if<Langevin1dParams>(&c.system)) {
    if (!(p->sigma > 0.0)) invalid("system.sigma must be positive");
  }

  const double delta = c.delta();
  auto multiple_of_delta = [&](double t) {
    if (!(delta > 0.0)) return false;
    const double ratio = t / delta;
    return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio) && std::round(ratio) >= 1.0;
  };
  if (!(c.t_max > 0.0) || !multiple_of_delta(c.t_max)) {
    invalid("t_max = " + io::format_double(c.t_max) + " is not a positive multiple of delta = " +
            io::format_double(delta));
  } else {
    const auto n_delta = static_cast<std::size_t>(std::llround(c.t_max / delta));
    report.derived.push_back("delta = " + io::format_double(delta));
    report.derived.push_back("n_t = " + std::to_string(n_delta * c.stride));
    report.derived.push_back("n_delta = " + std::to_string(n_delta));
    if (c.design == DesignKind::kSeries && c.h > 0.0) {
      const auto samples = static_cast<long long>(std::llround(c.T_total / c.h));
      const long long usable = samples - static_cast<long long>(n_delta * c.stride);
      report.derived.push_back("series samples = " + std::to_string(samples));
      report.derived.push_back("usable kernel window = " + std::to_string(usable));
      if (usable < 2) invalid("series too short for t_max");
    }
  }
  if (c.design == DesignKind::kSeries) {
    if (!(c.T_total > 0.0)) invalid("design.T_total must be positive");
    if (c.burn_in < 0.0 || !(c.burn_in < c.T_total)) invalid("design.burn_in must lie in [0, T_total)");
    if (c.bandwidth && !(*c.bandwidth > 0.0)) invalid("design.bandwidth must be positive");
  }

  if (c.t_grid.empty()) invalid("sweep.t_grid is empty");
  for (double t : c.t_grid) {
    if (!multiple_of_delta(t)) {
      invalid("t_grid entry " + io::format_double(t) + " is not a positive multiple of delta");
    } else if (t > c.t_max * (1.0 + 1e-12)) {
      invalid("t_grid entry " + io::format_double(t) + " exceeds t_max");
    }
  }

  if (c.theta_source == ThetaSource::kExplicit && n_params &&
      static_cast<std::size_t>(c.theta_true.size()) != *n_params) {
    invalid("theta_true has " + std::to_string(c.theta_true.size()) + " entries, basis needs " +
            std::to_string(*n_params));
  }
  if (c.theta_source == ThetaSource::kAuto && known_system && n_params) {
    bool ok = false;
    try {
      ok = resolve_theta_true(c).has_value();
    } catch (const std::exception&) {
    }
    if (!ok) invalid("theta_true = auto has no closed form for this system/basis pair");
  }
  if (c.mle.v_prime != "x") missing("unknown mle.v_prime '" + c.mle.v_prime + "'");
  return report;
}

}  // namespace sdeinfer
