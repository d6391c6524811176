// Command-line surface for the passive decoy-state BB84 rate calculator.
//
//   qkd rate|sweep|optimize|cutoff|montecarlo --config <file>
//       [--set key=value]... [--out <path>]
//
// Exit codes: 0 success, 2 configuration, 3 numerical failure, 4 I/O,
// 5 Monte Carlo mismatch (|z| > 5).

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "qkd/config.hpp"
#include "qkd/decoy_bounds.hpp"
#include "qkd/detection_model.hpp"
#include "qkd/errors.hpp"
#include "qkd/key_rate.hpp"
#include "qkd/mc_oracle.hpp"
#include "qkd/optimizer.hpp"
#include "qkd/photon_statistics.hpp"
#include "qkd/source_optics.hpp"

namespace {

// %.17g-style formatting via to_chars: locale-independent and sufficient to
// round-trip doubles exactly.
std::string fmt(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v,
                           std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string fmt_log10_rate(double rate) {
  if (!(rate > 0.0)) return "-inf";
  return fmt(std::log10(rate));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw qkd::io_error("cannot open output file '" + path + "'");
  f << content;
  f.flush();
  if (!f) throw qkd::io_error("failed writing output file '" + path + "'");
}

// Inserts _suffix before the extension: sweep.csv -> sweep_passive2.csv.
std::string with_suffix(const std::string& path, const std::string& suffix) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_" + suffix;
  return path.substr(0, dot) + "_" + suffix + path.substr(dot);
}

qkd::Variant parse_variant(const std::string& name) {
  if (name == "passive2") return qkd::Variant::passive2;
  if (name == "passive_inf") return qkd::Variant::passive_inf;
  return qkd::Variant::active_inf;
}

std::vector<std::string> selected_variants(const qkd::RunConfig& rc) {
  if (rc.variant == "all") return {"passive2", "passive_inf", "active_inf"};
  return {rc.variant};
}

qkd::OptimizerOptions optimizer_options(const qkd::RunConfig& rc) {
  qkd::OptimizerOptions opt;
  opt.grid_n = rc.grid_n;
  opt.theta_lambda_free = rc.theta_lambda_free;
  opt.cutoff_tol_km = rc.cutoff_tol;
  return opt;
}

// Source configuration equivalent to an optimizer point (the optimizer works
// in (mu*t, omega, theta_lambda) space at fixed tap transmittance).
qkd::SourceConfig source_from_point(double mu_t, double omega,
                                    double theta_lambda_val) {
  qkd::SourceConfig src;
  src.t = 0.01;
  src.mu = mu_t / src.t;
  src.lambda_threshold =
      2.0 * src.mu * (1.0 - src.t) * (1.0 + std::cos(theta_lambda_val));
  src.omega = omega;
  return src;
}

int cmd_rate(const qkd::RunConfig& rc) {
  const qkd::SourceConfig& src = rc.source;
  const qkd::ChannelConfig& ch = rc.channel;
  const qkd::PhotonStats st = qkd::build_stats(src, 12);

  std::ostringstream os;
  os << "distance_km = " << fmt(ch.distance) << "\n";
  os << "eta_sys = " << fmt(qkd::eta_sys(ch)) << "\n";
  os << "theta_lambda = " << fmt(st.theta_lambda) << "\n";
  os << "p_s = " << fmt(st.p_s) << "\n";
  os << "p_acc = " << fmt(qkd::p_acc(src.omega)) << "\n";
  for (int n = 0; n <= 2; ++n) {
    os << "p" << n << "_s = " << fmt(st.p_signal[n]) << "\n";
    os << "p" << n << "_d = " << fmt(st.p_decoy[n]) << "\n";
  }
  os << "tail_bound = " << fmt(st.tail_bound) << "\n";

  if (qkd::p_acc(src.omega) <= 0.0) {
    // Zero acceptance: nothing is ever post-selected, the rate is 0 by
    // construction and no error statistics exist.
    os << "rate = 0\n";
    std::cout << os.str();
    if (!rc.out_path.empty()) write_file(rc.out_path, os.str());
    return 0;
  }

  qkd::ObservedStats obs;
  obs.q_signal = qkd::gain_numeric(qkd::Interval::signal, src, ch);
  obs.q_decoy = qkd::gain_numeric(qkd::Interval::decoy, src, ch);
  // Authoritative error-rate path; at theta_lambda = pi/2 this also runs the
  // closed-form consistency check.
  obs.e_signal = qkd::qber_interval(qkd::Interval::signal, src, ch);
  obs.e_decoy = qkd::qber_interval(qkd::Interval::decoy, src, ch);

  const qkd::DecoyBounds bounds = qkd::build_bounds(st, obs);
  const qkd::RateResult rr = qkd::total_rate(st, obs, bounds, ch, src.omega);

  os << "Q_s = " << fmt(obs.q_signal) << "\n";
  os << "Q_d = " << fmt(obs.q_decoy) << "\n";
  os << "E_s = " << fmt(obs.e_signal) << "\n";
  os << "E_d = " << fmt(obs.e_decoy) << "\n";
  os << "Y0_L = " << fmt(bounds.y0_lower) << "\n";
  os << "Y0_U = " << fmt(bounds.y0_upper) << "\n";
  os << "Y1_L = " << fmt(bounds.y1_lower) << "\n";
  os << "e1_U = " << fmt(bounds.e1_upper) << "\n";
  os << "combined_s = " << fmt(bounds.combined_signal) << "\n";
  os << "combined_d = " << fmt(bounds.combined_decoy) << "\n";
  os << "rate_signal = " << fmt(rr.rate_signal) << "\n";
  os << "rate_decoy = " << fmt(rr.rate_decoy) << "\n";
  os << "rate = " << fmt(rr.rate_total) << "\n";
  os << "log10_rate = " << fmt_log10_rate(rr.rate_total) << "\n";
  for (const auto& note : bounds.notes) os << "note = " << note << "\n";

  std::cout << os.str();
  if (!rc.out_path.empty()) write_file(rc.out_path, os.str());
  return 0;
}

const char* kCsvHeader =
    "distance_km,rate,log10_rate,mu_t,omega,theta_lambda,"
    "Q_s,Q_d,E_s,E_d,Y1_L,e1_U\n";

std::string sweep_csv(const qkd::RunConfig& rc, const std::string& variant_name) {
  const qkd::Variant variant = parse_variant(variant_name);
  const qkd::OptimizerOptions opt = optimizer_options(rc);

  std::vector<double> grid;
  for (double d = rc.d_min; d <= rc.d_max + 1e-9; d += rc.d_step)
    grid.push_back(d);

  const auto rows = qkd::distance_sweep(grid, rc.channel, variant, opt);
  std::ostringstream os;
  os << kCsvHeader;
  for (const auto& [d, res] : rows) {
    qkd::ChannelConfig ch = rc.channel;
    ch.distance = d;
    double q_s = 0.0, q_d = 0.0, e_s = 0.0, e_d = 0.0, y1 = 0.0, e1 = 0.0;
    if (variant == qkd::Variant::passive2) {
      try {
        const qkd::SourceConfig src = source_from_point(
            res.best_mu_t, res.best_omega, res.best_theta_lambda);
        const qkd::PhotonStats st = qkd::build_stats(src, 2);
        const qkd::ObservedStats obs = qkd::observe(src, ch);
        q_s = obs.q_signal;
        q_d = obs.q_decoy;
        e_s = obs.e_signal;
        e_d = obs.e_decoy;
        const qkd::DecoyBounds b = qkd::build_bounds(st, obs);
        y1 = b.y1_lower;
        e1 = b.e1_upper;
      } catch (const qkd::error&) {
        // Beyond the cutoff the optimizer may sit on a degenerate corner of
        // the box; the rate is 0 there and the diagnostics stay blank.
      }
    } else if (variant == qkd::Variant::passive_inf) {
      const auto det = qkd::asymptotic_passive_detail(2.0 * res.best_mu_t,
                                                      res.best_omega, ch);
      q_s = det.q_gain;
      e_s = det.e_mu;
      y1 = det.y1;
      e1 = det.e1;
    } else {
      const auto det = qkd::active_infinite_decoy_detail(res.best_mu_t, ch);
      q_s = det.q_mu;
      e_s = det.e_mu;
      y1 = det.y1;
      e1 = det.e1;
    }
    os << fmt(d) << ',' << fmt(res.best_rate) << ','
       << fmt_log10_rate(res.best_rate) << ',' << fmt(res.best_mu_t) << ','
       << fmt(res.best_omega) << ',' << fmt(res.best_theta_lambda) << ','
       << fmt(q_s) << ',' << fmt(q_d) << ',' << fmt(e_s) << ',' << fmt(e_d)
       << ',' << fmt(y1) << ',' << fmt(e1) << '\n';
  }
  return os.str();
}

int cmd_sweep(const qkd::RunConfig& rc) {
  const auto variants = selected_variants(rc);
  const bool multi = variants.size() > 1;
  for (const auto& v : variants) {
    const std::string csv = sweep_csv(rc, v);
    if (rc.out_path.empty()) {
      if (multi) std::cout << "# variant: " << v << "\n";
      std::cout << csv;
    } else {
      const std::string path =
          multi ? with_suffix(rc.out_path, v) : rc.out_path;
      write_file(path, csv);
      std::cout << "wrote " << v << " sweep to " << path << "\n";
    }
  }
  return 0;
}

int cmd_optimize(const qkd::RunConfig& rc) {
  std::ostringstream os;
  for (const auto& v : selected_variants(rc)) {
    const auto res =
        qkd::optimize_at_distance(rc.channel.distance, rc.channel,
                                  parse_variant(v), optimizer_options(rc));
    os << "variant = " << v << "\n";
    os << "distance_km = " << fmt(rc.channel.distance) << "\n";
    os << "best_mu_t = " << fmt(res.best_mu_t) << "\n";
    os << "best_omega = " << fmt(res.best_omega) << "\n";
    os << "best_theta_lambda = " << fmt(res.best_theta_lambda) << "\n";
    os << "best_rate = " << fmt(res.best_rate) << "\n";
    os << "log10_rate = " << fmt_log10_rate(res.best_rate) << "\n";
    os << "evaluations = " << res.evaluations << "\n";
    os << "converged = " << (res.converged ? "true" : "false") << "\n";
  }
  std::cout << os.str();
  if (!rc.out_path.empty()) write_file(rc.out_path, os.str());
  return 0;
}

int cmd_cutoff(const qkd::RunConfig& rc) {
  std::ostringstream os;
  for (const auto& v : selected_variants(rc)) {
    const double km =
        qkd::find_cutoff(rc.channel, parse_variant(v), optimizer_options(rc));
    os << "variant = " << v << "\n";
    os << "cutoff_km = " << fmt(km) << "\n";
  }
  std::cout << os.str();
  if (!rc.out_path.empty()) write_file(rc.out_path, os.str());
  return 0;
}

struct McLine {
  std::string name;
  double analytic;
  qkd::McEstimate mc;
};

int cmd_montecarlo(const qkd::RunConfig& rc) {
  const qkd::SourceConfig& src = rc.source;
  const qkd::ChannelConfig& ch = rc.channel;
  const auto rep = qkd::run_detection_mc(src, ch, rc.mc_samples, rc.seed);

  const qkd::PhotonStats st = qkd::build_stats(src, 12);
  const qkd::ObservedStats obs = qkd::observe(src, ch);

  std::vector<McLine> lines;
  lines.push_back({"p_acc", qkd::p_acc(src.omega), rep.p_acc_hat});
  lines.push_back({"p_signal_interval", st.p_s, rep.interval_prob_hat[0]});
  lines.push_back({"p_decoy_interval", st.p_d, rep.interval_prob_hat[1]});
  for (int n = 0; n <= 4; ++n) {
    lines.push_back({"p" + std::to_string(n) + "_s", st.p_signal[n],
                     rep.pn_hat[0][n]});
    lines.push_back({"p" + std::to_string(n) + "_d", st.p_decoy[n],
                     rep.pn_hat[1][n]});
  }
  lines.push_back({"Q_s", obs.q_signal, rep.q_hat[0]});
  lines.push_back({"Q_d", obs.q_decoy, rep.q_hat[1]});
  lines.push_back({"E_s", obs.e_signal, rep.e_hat[0]});
  lines.push_back({"E_d", obs.e_decoy, rep.e_hat[1]});

  std::ostringstream os;
  os << "n_samples = " << rep.n_samples << "\n";
  os << "seed = " << rep.seed << "\n";
  os << "generator = " << rep.generator << "\n";
  os << "quantity,analytic,estimate,stderr,z\n";
  double max_abs_z = 0.0;
  for (const auto& l : lines) {
    double z = 0.0;
    if (l.mc.se > 0.0)
      z = (l.mc.value - l.analytic) / l.mc.se;
    else if (l.mc.value != l.analytic)
      z = std::numeric_limits<double>::infinity();
    max_abs_z = std::max(max_abs_z, std::abs(z));
    os << l.name << ',' << fmt(l.analytic) << ',' << fmt(l.mc.value) << ','
       << fmt(l.mc.se) << ',' << fmt(z) << '\n';
  }
  os << "max_abs_z = " << fmt(max_abs_z) << "\n";

  std::cout << os.str();
  if (!rc.out_path.empty()) write_file(rc.out_path, os.str());
  if (max_abs_z > 5.0) {
    std::cerr << "monte carlo mismatch: max |z| = " << fmt(max_abs_z)
              << " exceeds 5\n";
    return 5;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive decoy-state BB84 secret-key-rate calculator"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_path;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"rate", "Evaluate the key rate and all intermediates at one point"},
      {"sweep", "Optimized rate vs distance, CSV output"},
      {"optimize", "Optimize free parameters at one distance"},
      {"cutoff", "Locate the largest distance with positive rate"},
      {"montecarlo", "Event-level simulation vs analytic values"}};
  for (const auto& [name, desc] : commands) {
    auto* sc = app.add_subcommand(name, desc);
    sc->add_option("--config", config_path, "key = value parameter file");
    sc->add_option("--set", overrides, "override, key=value (repeatable)");
    sc->add_option("--out", out_path, "output file path");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    qkd::RunConfig rc;
    std::vector<std::string> errors;
    if (!config_path.empty()) qkd::load_config_file(rc, config_path, errors);
    for (const auto& s : overrides) qkd::apply_assignment(rc, s, errors);
    if (!out_path.empty()) rc.out_path = out_path;
    if (!errors.empty()) {
      std::string msg = "configuration invalid:";
      for (const auto& e : errors) msg += "\n  - " + e;
      throw qkd::config_error(msg);
    }
    qkd::validate(rc);

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "rate") return cmd_rate(rc);
    if (cmd == "sweep") return cmd_sweep(rc);
    if (cmd == "optimize") return cmd_optimize(rc);
    if (cmd == "cutoff") return cmd_cutoff(rc);
    return cmd_montecarlo(rc);
  } catch (const qkd::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const qkd::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const qkd::numeric_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
