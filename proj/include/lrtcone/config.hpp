#ifndef LRTCONE_CONFIG_HPP_
#define LRTCONE_CONFIG_HPP_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "lrtcone/harness.hpp"

namespace lrtcone {

/*
 * Flat key/value settings addressed as "section.key". The text form is
 *
 *   [experiment]
 *   scenario = efa_1a
 *   n_reps = 500
 *
 * with '#' or ';' starting a comment line. Only keys listed in
 * config_schema() are accepted.
 */
class CliConfig {
public:
  void set(const std::string &key, const std::string &value);
  bool has(const std::string &key) const;
  const std::string &get(const std::string &key) const;
  const std::map<std::string, std::string> &values() const { return values_; }

  /// Later sources win: parse a file first, then apply flag overrides.
  void merge(const CliConfig &overrides);

  void write_ini(std::ostream &out) const;

private:
  std::map<std::string, std::string> values_;
};

enum class ValueType { String, Integer, Real, Boolean, RealList };

struct ConfigKey {
  std::string key;
  ValueType type;
  std::string help;
};

const std::vector<ConfigKey> &config_schema();

/// Throws ConfigError naming the offending key or line.
CliConfig parse_config(std::istream &in, const std::string &origin = "config");
CliConfig parse_config_file(const std::string &path);

/// Checks every key against the schema and every value against its type.
void validate_config(const CliConfig &config);

/*
 * Resolves an experiment spec: scenario defaults first, then the config.
 * Requires experiment.scenario.
 */
ExperimentSpec spec_from_config(const CliConfig &config);

/*
 * Every setting that determines the results, fully resolved, so that running
 * from the echo reproduces the experiment. Worker count is left out because
 * results do not depend on it.
 */
CliConfig echo_config(const ExperimentSpec &spec);

std::string format_real(double value);

} // namespace lrtcone

#endif /* LRTCONE_CONFIG_HPP_ */
