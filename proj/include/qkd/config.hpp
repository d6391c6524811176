#ifndef QKD_CONFIG_HPP
#define QKD_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "qkd/detection_model.hpp"
#include "qkd/errors.hpp"
#include "qkd/source_optics.hpp"

namespace qkd {

// Aggregated run configuration: physics parameters plus command options.
// Populated from defaults, then a flat key = value file, then --set
// overrides; validated once before any computation.
struct RunConfig {
  SourceConfig source;  // mu, t, lambda_threshold, omega
  ChannelConfig channel; // alpha, distance, eta_B, epsilon_B, q_eff, f_ec

  double d_min = 0.0;
  double d_max = 200.0;
  double d_step = 5.0;
  std::string variant = "passive2"; // passive2 | passive_inf | active_inf | all
  long mc_samples = 1000000;
  std::uint64_t seed = 12345;
  bool theta_lambda_free = false;
  int grid_n = 40;
  double cutoff_tol = 0.02; // km
  std::string out_path;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& v, double& out) {
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

inline bool parse_bool(const std::string& v, bool& out) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") {
    out = true;
    return true;
  }
  if (v == "0" || v == "false" || v == "no" || v == "off") {
    out = false;
    return true;
  }
  return false;
}

template <class Int>
inline bool parse_integer(const std::string& v, Int& out) {
  const char* first = v.data();
  const char* last = v.data() + v.size();
  auto [p, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && p == last;
}

} // namespace detail

// Applies one key = value assignment; appends a diagnostic to errors on an
// unknown key or an unparsable value.
inline void apply_setting(RunConfig& rc, const std::string& key,
                          const std::string& value,
                          std::vector<std::string>& errors) {
  auto bad_value = [&](const char* expected) {
    errors.push_back("key '" + key + "': cannot parse '" + value + "' as " +
                     expected);
  };
  auto set_d = [&](double& field) {
    double d;
    if (detail::parse_double(value, d))
      field = d;
    else
      bad_value("a number");
  };

  if (key == "mu") set_d(rc.source.mu);
  else if (key == "t") set_d(rc.source.t);
  else if (key == "lambda_threshold") set_d(rc.source.lambda_threshold);
  else if (key == "omega") set_d(rc.source.omega);
  else if (key == "alpha") set_d(rc.channel.alpha);
  else if (key == "distance") set_d(rc.channel.distance);
  else if (key == "eta_B") set_d(rc.channel.eta_B);
  else if (key == "epsilon_B") set_d(rc.channel.epsilon_B);
  else if (key == "q_eff") set_d(rc.channel.q_eff);
  else if (key == "f_ec") set_d(rc.channel.f_ec);
  else if (key == "d_min") set_d(rc.d_min);
  else if (key == "d_max") set_d(rc.d_max);
  else if (key == "d_step") set_d(rc.d_step);
  else if (key == "cutoff_tol") set_d(rc.cutoff_tol);
  else if (key == "variant") rc.variant = value;
  else if (key == "out") rc.out_path = value;
  else if (key == "mc_samples") {
    long n;
    if (detail::parse_integer(value, n)) rc.mc_samples = n;
    else bad_value("an integer");
  } else if (key == "seed") {
    std::uint64_t s;
    if (detail::parse_integer(value, s)) rc.seed = s;
    else bad_value("an unsigned integer");
  } else if (key == "grid_n") {
    int g;
    if (detail::parse_integer(value, g)) rc.grid_n = g;
    else bad_value("an integer");
  } else if (key == "theta_lambda_free") {
    bool b;
    if (detail::parse_bool(value, b)) rc.theta_lambda_free = b;
    else bad_value("a boolean (true/false/1/0)");
  } else {
    errors.push_back("unknown key '" + key + "'");
  }
}

// Parses "key=value" (as used by --set); whitespace around either side is
// ignored.
inline void apply_assignment(RunConfig& rc, const std::string& assignment,
                             std::vector<std::string>& errors) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    errors.push_back("override '" + assignment + "' is not of the form key=value");
    return;
  }
  const std::string key = detail::trim(assignment.substr(0, eq));
  const std::string value = detail::trim(assignment.substr(eq + 1));
  if (key.empty()) {
    errors.push_back("override '" + assignment + "' has an empty key");
    return;
  }
  apply_setting(rc, key, value, errors);
}

// Loads a flat key = value file ('#' comments, blank lines ignored).
inline void load_config_file(RunConfig& rc, const std::string& path,
                             std::vector<std::string>& errors) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      errors.push_back(path + ":" + std::to_string(line_no) +
                       ": expected key = value");
      continue;
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    apply_setting(rc, key, value, errors);
  }
}

// Full validation; throws config_error listing every violation at once.
inline void validate(const RunConfig& rc) {
  std::vector<std::string> errors;
  try {
    validate(rc.source);
  } catch (const config_error& e) {
    errors.push_back(e.what());
  }
  try {
    validate(rc.channel);
  } catch (const config_error& e) {
    errors.push_back(e.what());
  }
  if (!(rc.d_step > 0.0)) errors.push_back("d_step must be > 0");
  if (!(rc.d_min >= 0.0)) errors.push_back("d_min must be >= 0");
  if (!(rc.d_max >= rc.d_min)) errors.push_back("d_max must be >= d_min");
  if (rc.variant != "passive2" && rc.variant != "passive_inf" &&
      rc.variant != "active_inf" && rc.variant != "all")
    errors.push_back("variant must be one of passive2, passive_inf, "
                     "active_inf, all (got '" + rc.variant + "')");
  if (rc.mc_samples < 1) errors.push_back("mc_samples must be >= 1");
  if (rc.grid_n < 2) errors.push_back("grid_n must be >= 2");
  if (!(rc.cutoff_tol > 0.0)) errors.push_back("cutoff_tol must be > 0");
  if (!errors.empty()) {
    std::string msg = "configuration invalid:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw config_error(msg);
  }
}

} // namespace qkd

#endif
