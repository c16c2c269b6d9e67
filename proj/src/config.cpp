#include "lrtcone/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "lrtcone/error.hpp"

namespace lrtcone {

namespace {

[[noreturn]] void config_error(const std::string &what) {
  throw LrtError(ErrorCode::ConfigError, what);
}

std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return "";
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

const ConfigKey *find_key(const std::string &key) {
  for (const auto &k : config_schema()) {
    if (k.key == key) {
      return &k;
    }
  }
  return nullptr;
}

template <typename T>
bool parse_number(const std::string &text, T &out) {
  const char *begin = text.data();
  const char *end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::uint64_t as_u64(const CliConfig &c, const std::string &key) {
  std::uint64_t v = 0;
  if (!parse_number(c.get(key), v)) {
    config_error(key + ": expected a nonnegative integer, got '" + c.get(key) +
                 "'");
  }
  return v;
}

long long as_positive(const CliConfig &c, const std::string &key) {
  const std::uint64_t v = as_u64(c, key);
  if (v == 0) {
    config_error(key + ": must be positive");
  }
  return static_cast<long long>(v);
}

double as_real(const CliConfig &c, const std::string &key) {
  double v = 0.0;
  if (!parse_number(c.get(key), v) || !std::isfinite(v)) {
    config_error(key + ": expected a real number, got '" + c.get(key) + "'");
  }
  return v;
}

bool as_bool(const CliConfig &c, const std::string &key) {
  std::string v = c.get(key);
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") {
    return true;
  }
  if (v == "false" || v == "0" || v == "no" || v == "off") {
    return false;
  }
  config_error(key + ": expected true or false, got '" + c.get(key) + "'");
}

Eigen::VectorXd as_list(const CliConfig &c, const std::string &key) {
  std::vector<double> values;
  std::stringstream ss(c.get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!parse_number(trim(item), v) || !std::isfinite(v)) {
      config_error(key + ": bad list entry '" + trim(item) + "'");
    }
    values.push_back(v);
  }
  if (values.empty()) {
    config_error(key + ": empty list");
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

std::string format_list(const Eigen::VectorXd &v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += (i == 0 ? "" : ", ") + format_real(v[i]);
  }
  return out;
}

void check_value(const CliConfig &c, const ConfigKey &k) {
  switch (k.type) {
  case ValueType::String:
    if (c.get(k.key).empty()) {
      config_error(k.key + ": empty value");
    }
    break;
  case ValueType::Integer:
    as_u64(c, k.key);
    break;
  case ValueType::Real:
    as_real(c, k.key);
    break;
  case ValueType::Boolean:
    as_bool(c, k.key);
    break;
  case ValueType::RealList:
    as_list(c, k.key);
    break;
  }
}

void require_family(const CliConfig &c, const std::string &key, bool ok,
                    const std::string &scenario) {
  if (c.has(key) && !ok) {
    config_error(key + ": not a parameter of scenario " + scenario);
  }
}

} // namespace

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void CliConfig::set(const std::string &key, const std::string &value) {
  values_[key] = value;
}

bool CliConfig::has(const std::string &key) const {
  return values_.count(key) > 0;
}

const std::string &CliConfig::get(const std::string &key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    config_error("missing required key " + key);
  }
  return it->second;
}

void CliConfig::merge(const CliConfig &overrides) {
  for (const auto &[k, v] : overrides.values_) {
    values_[k] = v;
  }
}

void CliConfig::write_ini(std::ostream &out) const {
  std::string section;
  for (const auto &[key, value] : values_) {
    const auto dot = key.find('.');
    const std::string s = key.substr(0, dot);
    if (s != section) {
      out << (section.empty() ? "" : "\n") << '[' << s << "]\n";
      section = s;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
}

const std::vector<ConfigKey> &config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"experiment.scenario", ValueType::String,
       "efa_1a, efa_1b, ifa_2a, ifa_2b or re_3"},
      {"experiment.n_obs", ValueType::Integer,
       "observations (groups for re_3); 2000, 5000 with full_scale, 200 for "
       "re_3"},
      {"experiment.n_reps", ValueType::Integer,
       "replications; 500, 5000 with full_scale"},
      {"experiment.n_items", ValueType::Integer,
       "group size for re_3 (20); factor models take J from the truth"},
      {"experiment.seed", ValueType::Integer, "master seed (0)"},
      {"experiment.workers", ValueType::Integer,
       "worker threads (LRTCONE_WORKERS or hardware threads)"},
      {"experiment.full_scale", ValueType::Boolean,
       "full sizes: R = 5000, N = 5000 (false)"},
      {"experiment.fisher_diagnostic", ValueType::Boolean,
       "also write eigen_spectrum.csv (false)"},
      {"experiment.out_dir", ValueType::String, "output directory (out)"},
      {"refdist.wilks", ValueType::Boolean, "chi-square reference (true)"},
      {"refdist.cone", ValueType::Boolean, "tangent-cone reference (true)"},
      {"refdist.bootstrap", ValueType::Integer,
       "parametric bootstrap size B, 0 disables (0)"},
      {"refdist.n_draws", ValueType::Integer,
       "Monte Carlo draws for the cone reference (10000)"},
      {"optim.n_starts", ValueType::Integer, "optimizer starts (10)"},
      {"optim.max_iter", ValueType::Integer, "iterations per start (500)"},
      {"optim.grad_tol", ValueType::Real, "gradient tolerance (1e-6)"},
      {"cone.n_starts", ValueType::Integer,
       "random starts per cone projection (31)"},
      {"cone.max_iter", ValueType::Integer, "iterations per start (200)"},
      {"cone.grad_tol", ValueType::Real, "gradient tolerance (1e-9)"},
      {"truth.loadings", ValueType::RealList, "EFA loadings"},
      {"truth.uniquenesses", ValueType::RealList, "EFA uniquenesses"},
      {"truth.easiness", ValueType::RealList, "IFA easiness d"},
      {"truth.discrimination", ValueType::RealList, "IFA discrimination a1"},
      {"truth.beta0", ValueType::Real, "random intercept mean (0)"},
      {"truth.sigma2_sq", ValueType::Real, "within-group variance (1)"},
  };
  return schema;
}

CliConfig parse_config(std::istream &in, const std::string &origin) {
  CliConfig config;
  std::string line;
  std::string section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') {
      continue;
    }
    const std::string where = origin + ":" + std::to_string(line_no);
    if (t.front() == '[') {
      if (t.back() != ']') {
        config_error(where + ": malformed section header");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      config_error(where + ": expected key = value");
    }
    if (section.empty()) {
      config_error(where + ": key outside a section");
    }
    const std::string key = section + "." + trim(t.substr(0, eq));
    if (find_key(key) == nullptr) {
      config_error(where + ": unknown key " + key);
    }
    config.set(key, trim(t.substr(eq + 1)));
  }
  return config;
}

CliConfig parse_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) {
    config_error("cannot read config file " + path);
  }
  return parse_config(in, path);
}

void validate_config(const CliConfig &config) {
  for (const auto &[key, value] : config.values()) {
    const ConfigKey *k = find_key(key);
    if (k == nullptr) {
      config_error("unknown key " + key);
    }
    check_value(config, *k);
  }
}

ExperimentSpec spec_from_config(const CliConfig &c) {
  validate_config(c);
  if (!c.has("experiment.scenario")) {
    config_error("missing required key scenario (experiment.scenario)");
  }
  const std::string name = c.get("experiment.scenario");
  const auto scenario = parse_scenario(name);
  if (!scenario) {
    config_error("experiment.scenario: unknown scenario '" + name + "'");
  }
  const bool full = c.has("experiment.full_scale") &&
                    as_bool(c, "experiment.full_scale");
  ExperimentSpec spec = default_spec(*scenario, full);

  if (c.has("experiment.n_obs")) {
    spec.n_obs = as_positive(c, "experiment.n_obs");
  }
  if (c.has("experiment.n_reps")) {
    spec.n_reps = static_cast<std::size_t>(as_positive(c, "experiment.n_reps"));
  }
  if (c.has("experiment.seed")) {
    spec.master_seed = as_u64(c, "experiment.seed");
  }
  if (c.has("experiment.workers")) {
    spec.workers = static_cast<std::size_t>(as_positive(c, "experiment.workers"));
  }
  if (c.has("experiment.fisher_diagnostic")) {
    spec.fisher_diagnostic = as_bool(c, "experiment.fisher_diagnostic");
  }
  if (c.has("refdist.wilks")) {
    spec.refs.wilks = as_bool(c, "refdist.wilks");
  }
  if (c.has("refdist.cone")) {
    spec.refs.cone = as_bool(c, "refdist.cone");
  }
  if (c.has("refdist.bootstrap")) {
    const std::uint64_t b = as_u64(c, "refdist.bootstrap");
    if (b > 1000000) {
      config_error("refdist.bootstrap: too large");
    }
    spec.refs.bootstrap_b = static_cast<int>(b);
  }
  if (c.has("refdist.n_draws")) {
    spec.n_draws = static_cast<std::size_t>(as_positive(c, "refdist.n_draws"));
  }
  if (c.has("optim.n_starts")) {
    spec.optim.n_starts = static_cast<int>(as_positive(c, "optim.n_starts"));
  }
  if (c.has("optim.max_iter")) {
    spec.optim.max_iter = static_cast<int>(as_positive(c, "optim.max_iter"));
  }
  if (c.has("optim.grad_tol")) {
    spec.optim.grad_tol = as_real(c, "optim.grad_tol");
  }
  if (c.has("cone.n_starts")) {
    spec.cone.n_starts = static_cast<int>(as_u64(c, "cone.n_starts"));
  }
  if (c.has("cone.max_iter")) {
    spec.cone.max_iter = static_cast<int>(as_positive(c, "cone.max_iter"));
  }
  if (c.has("cone.grad_tol")) {
    spec.cone.grad_tol = as_real(c, "cone.grad_tol");
  }

  const bool efa = std::holds_alternative<EfaParams>(spec.truth);
  const bool ifa = std::holds_alternative<IfaParams>(spec.truth);
  const bool re = !efa && !ifa;
  require_family(c, "truth.loadings", efa, name);
  require_family(c, "truth.uniquenesses", efa, name);
  require_family(c, "truth.easiness", ifa, name);
  require_family(c, "truth.discrimination", ifa, name);
  require_family(c, "truth.beta0", re, name);
  require_family(c, "truth.sigma2_sq", re, name);
  require_family(c, "experiment.n_items", re, name);

  if (auto *p = std::get_if<EfaParams>(&spec.truth)) {
    if (c.has("truth.loadings")) {
      p->loadings_1 = as_list(c, "truth.loadings");
    }
    if (c.has("truth.uniquenesses")) {
      p->uniquenesses = as_list(c, "truth.uniquenesses");
    }
    if (p->uniquenesses.size() != p->loadings_1.size()) {
      config_error("truth.uniquenesses: length differs from truth.loadings");
    }
    if ((p->uniquenesses.array() <= 0.0).any()) {
      config_error("truth.uniquenesses: entries must be positive");
    }
    spec.n_items = p->n_items();
  } else if (auto *q = std::get_if<IfaParams>(&spec.truth)) {
    if (c.has("truth.easiness")) {
      q->easiness = as_list(c, "truth.easiness");
    }
    if (c.has("truth.discrimination")) {
      q->discrimination_1 = as_list(c, "truth.discrimination");
    }
    if (q->easiness.size() != q->discrimination_1.size()) {
      config_error("truth.discrimination: length differs from truth.easiness");
    }
    spec.n_items = q->n_items();
  } else {
    auto &r = std::get<RandomEffectsParams>(spec.truth);
    if (c.has("truth.beta0")) {
      r.beta0 = as_real(c, "truth.beta0");
    }
    if (c.has("truth.sigma2_sq")) {
      r.var_within = as_real(c, "truth.sigma2_sq");
      if (r.var_within <= 0.0) {
        config_error("truth.sigma2_sq: must be positive");
      }
    }
    if (c.has("experiment.n_items")) {
      spec.n_items = static_cast<int>(as_positive(c, "experiment.n_items"));
    }
  }

  try {
    spec.validate();
  } catch (const LrtError &e) {
    config_error(std::string("invalid experiment: ") + e.what());
  }
  return spec;
}

CliConfig echo_config(const ExperimentSpec &spec) {
  CliConfig echo;
  echo.set("experiment.scenario", to_string(spec.scenario));
  echo.set("experiment.n_obs", std::to_string(spec.n_obs));
  echo.set("experiment.n_reps", std::to_string(spec.n_reps));
  echo.set("experiment.seed", std::to_string(spec.master_seed));
  echo.set("experiment.fisher_diagnostic",
           spec.fisher_diagnostic ? "true" : "false");
  echo.set("refdist.wilks", spec.refs.wilks ? "true" : "false");
  echo.set("refdist.cone", spec.refs.cone ? "true" : "false");
  echo.set("refdist.bootstrap", std::to_string(spec.refs.bootstrap_b));
  echo.set("refdist.n_draws", std::to_string(spec.n_draws));
  echo.set("optim.n_starts", std::to_string(spec.optim.n_starts));
  echo.set("optim.max_iter", std::to_string(spec.optim.max_iter));
  echo.set("optim.grad_tol", format_real(spec.optim.grad_tol));
  echo.set("cone.n_starts", std::to_string(spec.cone.n_starts));
  echo.set("cone.max_iter", std::to_string(spec.cone.max_iter));
  echo.set("cone.grad_tol", format_real(spec.cone.grad_tol));
  if (const auto *p = std::get_if<EfaParams>(&spec.truth)) {
    echo.set("truth.loadings", format_list(p->loadings_1));
    echo.set("truth.uniquenesses", format_list(p->uniquenesses));
  } else if (const auto *q = std::get_if<IfaParams>(&spec.truth)) {
    echo.set("truth.easiness", format_list(q->easiness));
    echo.set("truth.discrimination", format_list(q->discrimination_1));
  } else {
    const auto &r = std::get<RandomEffectsParams>(spec.truth);
    echo.set("experiment.n_items", std::to_string(spec.n_items));
    echo.set("truth.beta0", format_real(r.beta0));
    echo.set("truth.sigma2_sq", format_real(r.var_within));
  }
  return echo;
}

} // namespace lrtcone
