#ifndef QKD_SOURCE_OPTICS_HPP
#define QKD_SOURCE_OPTICS_HPP

#include <cmath>
#include <complex>
#include <string>

#include "qkd/errors.hpp"

namespace qkd {

inline constexpr double pi = 3.14159265358979323846;

// Transmitter configuration: two phase-randomized coherent pulses of mean
// photon number mu interfere; a tap BS of transmittance t sends the bright
// output to Bob while the 1-t port is monitored classically against the
// intensity threshold lambda_threshold.  omega is the half-width parameter
// of the polarization acceptance arcs (arcs have half-width pi/4 - omega).
struct SourceConfig {
  double mu = 17.5;
  double t = 0.01;
  double lambda_threshold = 34.65; // = 2*mu*(1-t) -> theta_lambda = pi/2
  double omega = 0.393;

  double mu_t() const { return mu * t; }
};

// Validates the fields that the optical model itself requires.  Throws
// config_error naming every violated field (aggregated diagnostic).
inline void validate(const SourceConfig& cfg) {
  std::string msg;
  auto add = [&msg](const std::string& s) {
    if (!msg.empty()) msg += "; ";
    msg += s;
  };
  if (!(cfg.mu > 0.0)) add("mu must be > 0 (got " + std::to_string(cfg.mu) + ")");
  if (!(cfg.t > 0.0 && cfg.t < 1.0))
    add("t must be in (0,1) (got " + std::to_string(cfg.t) + ")");
  if (cfg.mu > 0.0 && cfg.t > 0.0 && cfg.t < 1.0) {
    const double hi = 4.0 * cfg.mu * (1.0 - cfg.t);
    if (!(cfg.lambda_threshold > 0.0 && cfg.lambda_threshold < hi))
      add("lambda_threshold must be in (0, 4*mu*(1-t)) = (0, " +
          std::to_string(hi) + ") (got " + std::to_string(cfg.lambda_threshold) +
          ")");
  }
  if (!(cfg.omega >= 0.0 && cfg.omega <= pi / 4.0))
    add("omega must be in [0, pi/4] (got " + std::to_string(cfg.omega) + ")");
  if (!msg.empty()) throw config_error("invalid source configuration: " + msg);
}

// Polarization label of a single coherent mode.  Modes c3/d3 produced by the
// network are superpositions (|+45> + e^{i psi} |-45>)/sqrt(2); those carry a
// separate psi value and use plus45 as the reference component label.
enum class Pol { plus45, minus45, H, V, L, R };

struct CoherentAmplitude {
  std::complex<double> amplitude; // |amplitude|^2 = mean photon number
  Pol polarization = Pol::plus45;
  std::string mode;
};

// Intensity of the interfered pulse before the tap BS.
inline double zeta(double theta, double mu) {
  if (!(mu > 0.0)) throw config_error("zeta: mu must be > 0");
  return 2.0 * mu * (1.0 + std::cos(theta));
}

// Intensity of the pulse sent to Bob (after the tap BS).
inline double gamma(double theta, const SourceConfig& cfg) {
  return cfg.t * zeta(theta, cfg.mu);
}

// Phase angle at which the monitored intensity (1-t)*zeta crosses the
// classification threshold.  In (0, pi) for a valid threshold.
inline double theta_lambda(const SourceConfig& cfg) {
  const double hi = 4.0 * cfg.mu * (1.0 - cfg.t);
  if (!(cfg.lambda_threshold > 0.0 && cfg.lambda_threshold < hi))
    throw config_error("theta_lambda: lambda_threshold outside (0, 4*mu*(1-t))");
  return std::acos(cfg.lambda_threshold / (2.0 * cfg.mu * (1.0 - cfg.t)) - 1.0);
}

// Complete-conversion sum-frequency generation with a classical undepleted
// pump: the signal amplitude is transferred to the up-converted mode with a
// factor -e^{i pump_phase}; magnitude is preserved.  pump_sqrt_intensity only
// sets the conversion time and does not enter the map at complete conversion.
inline CoherentAmplitude sfg_complete_conversion(const CoherentAmplitude& signal,
                                                 double pump_phase,
                                                 double /*pump_sqrt_intensity*/) {
  CoherentAmplitude out;
  out.amplitude = -std::exp(std::complex<double>(0.0, pump_phase)) *
                  signal.amplitude;
  out.polarization = signal.polarization;
  out.mode = signal.mode + "_sfg";
  return out;
}

struct NetworkOutput {
  CoherentAmplitude c3; // to Bob, intensity t*zeta(theta)
  CoherentAmplitude d3; // monitored, intensity (1-t)*zeta(theta)
  double psi = 0.0;     // relative phase of the -45 component, in [0, 2*pi)
  double phi = 0.0;     // global phase of the +45 component
};

namespace detail {

inline double wrap_2pi(double x) {
  const double two_pi = 2.0 * pi;
  double r = std::fmod(x, two_pi);
  if (r < 0.0) r += two_pi;
  return r;
}

} // namespace detail

// Stepwise amplitude propagation through the transmitter network:
// 50:50 BS (interference of the two pulses) -> 50:50 BS (split of the bright
// output, second input in vacuum) -> SFG stages pumped with phases theta3 and
// theta4 -> polarization rotator to -45 on the second arm -> PBS recombination
// -> tap BS of transmittance t.  Deliberately does NOT use the closed-form
// result; tests compare the two.
inline NetworkOutput propagate_pure_network(double theta1, double theta2,
                                            double theta3, double theta4,
                                            double mu, double t) {
  if (!(mu > 0.0)) throw config_error("propagate_pure_network: mu must be > 0");
  if (!(t > 0.0 && t < 1.0))
    throw config_error("propagate_pure_network: t must be in (0,1)");

  using cplx = std::complex<double>;
  const cplx i_unit(0.0, 1.0);
  const double amp0 = std::sqrt(2.0 * mu);
  const cplx a0 = amp0 * std::exp(i_unit * theta1); // input pulse 1, +45
  const cplx b0 = amp0 * std::exp(i_unit * theta2); // input pulse 2, +45

  // First 50:50 BS: (a+b)/sqrt2 and (a-b)/sqrt2.
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  const cplx a1 = (a0 + b0) * inv_sqrt2;
  // Second output (a0-b0)/sqrt2 is discarded.

  // Second 50:50 BS splits a1 against vacuum.
  const cplx c1 = a1 * inv_sqrt2;
  const cplx d1 = a1 * inv_sqrt2;

  // SFG at complete conversion on each arm.
  CoherentAmplitude c1_amp{c1, Pol::plus45, "c1"};
  CoherentAmplitude d1_amp{d1, Pol::plus45, "d1"};
  const double pump_sqrt = std::sqrt(mu);
  const CoherentAmplitude c2 = sfg_complete_conversion(c1_amp, theta3, pump_sqrt);
  CoherentAmplitude d2 = sfg_complete_conversion(d1_amp, theta4, pump_sqrt);

  // Rotator: +45 -> -45 on the d arm (amplitude unchanged).
  d2.polarization = Pol::minus45;

  // PBS recombination: one spatial mode carrying the two polarization
  // components (alpha_plus, alpha_minus).
  const cplx alpha_plus = c2.amplitude;
  const cplx alpha_minus = d2.amplitude;
  const double intensity = std::norm(alpha_plus) + std::norm(alpha_minus);

  double phi, psi;
  if (std::abs(alpha_plus) > 0.0) {
    phi = std::arg(alpha_plus);
    psi = detail::wrap_2pi(std::arg(alpha_minus) - std::arg(alpha_plus));
  } else {
    phi = 0.0; // destructive interference: phases are immaterial
    psi = 0.0;
  }

  // Tap BS: sqrt(t) to Bob (c3), sqrt(1-t) to the classical monitor (d3).
  // Amplitudes are quoted for the normalized psi-superposition mode.
  const cplx unit_phase = std::exp(cplx(0.0, phi));
  NetworkOutput out;
  out.c3 = {std::sqrt(t * intensity) * unit_phase, Pol::plus45, "c3"};
  out.d3 = {std::sqrt((1.0 - t) * intensity) * unit_phase, Pol::plus45, "d3"};
  out.psi = psi;
  out.phi = phi;
  return out;
}

} // namespace qkd

#endif
