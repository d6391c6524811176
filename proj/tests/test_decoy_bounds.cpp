#include "catch2/catch_amalgamated.hpp"

#include <cmath>
#include <utility>

#include "qkd/decoy_bounds.hpp"
#include "qkd/detection_model.hpp"
#include "qkd/errors.hpp"
#include "qkd/photon_statistics.hpp"

using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

qkd::SourceConfig source_for_zeta(double zeta_val) {
  qkd::SourceConfig cfg;
  cfg.t = 0.01;
  cfg.mu = zeta_val / (2.0 * cfg.t);
  cfg.lambda_threshold = 2.0 * cfg.mu * (1.0 - cfg.t);
  return cfg;
}

qkd::ChannelConfig channel_at(double d) {
  qkd::ChannelConfig ch;
  ch.distance = d;
  return ch;
}

// Channel-model truths for the bracketing checks, built from first
// principles rather than the bound formulas.
double y0_truth(const qkd::ChannelConfig& ch) {
  const double e = ch.epsilon_B;
  return e * (2.0 - e); // click probability on vacuum: 1 - (1-eps)^2
}

double y1_truth(const qkd::ChannelConfig& ch) {
  const double e = ch.epsilon_B;
  return 1.0 - (1.0 - e) * (1.0 - e) * (1.0 - qkd::eta_sys(ch));
}

// Acceptance-averaged single-photon error rate: the photon reaches the
// correct arm with probability (1 + cos psi)/2, dark counts fire per arm,
// and double clicks contribute half an error.
double e1_truth(const qkd::ChannelConfig& ch, double omega) {
  const double eta = qkd::eta_sys(ch);
  const double e = ch.epsilon_B;
  const double hw = kPi / 4.0 - omega;
  const double mean_wrong = 0.5 * (1.0 - std::sin(hw) / hw); // <(1-cos)/2>
  const double num = eta * (0.5 * e + (1.0 - e) * mean_wrong) +
                     (1.0 - eta) * 0.5 * y0_truth(ch);
  return num / y1_truth(ch);
}

qkd::PhotonStats swapped(const qkd::PhotonStats& st) {
  qkd::PhotonStats out = st;
  std::swap(out.p_signal, out.p_decoy);
  std::swap(out.p_s, out.p_d);
  return out;
}

qkd::ObservedStats swapped(const qkd::ObservedStats& obs) {
  qkd::ObservedStats out = obs;
  std::swap(out.q_signal, out.q_decoy);
  std::swap(out.e_signal, out.e_decoy);
  return out;
}

} // namespace

TEST_CASE("validity conditions hold at the reference point", "[decoy]") {
  const auto st = qkd::build_stats(source_for_zeta(0.35), 12);
  REQUIRE_NOTHROW(qkd::check_conditions(st));

  // The determinant ratio entering the combined bound, pinned once.
  const auto p = qkd::detail::first_three(st);
  const double den21 = p.p2d * p.p1s - p.p2s * p.p1d;
  const double den20 = p.p2d * p.p0s - p.p2s * p.p0d;
  const double den10 = p.p1d * p.p0s - p.p1s * p.p0d;
  REQUIRE(den21 < 0.0);
  REQUIRE(den20 < 0.0);
  REQUIRE(den10 < 0.0);
  REQUIRE_THAT(den20 / den21, WithinRel(12.487482087946278, 1e-9));
  // Y0 coefficients of the combined bound must be non-positive so that
  // substituting Y0 <= Y0^U keeps the bound a lower bound.
  REQUIRE_THAT(p.p0s - p.p1s * den20 / den21,
               WithinRel(-3.4062313469244256, 1e-8));
  REQUIRE_THAT(p.p0d - p.p1d * den20 / den21,
               WithinRel(-0.3962752242806742, 1e-8));
}

TEST_CASE("validity conditions hold across intensities", "[decoy]") {
  for (double z : {0.002, 0.1, 0.35, 0.7, 1.4}) {
    INFO("zeta=" << z);
    REQUIRE_NOTHROW(
        qkd::check_conditions(qkd::build_stats(source_for_zeta(z), 12)));
  }
}

TEST_CASE("bounds bracket the channel-model truths", "[decoy]") {
  const auto src = source_for_zeta(0.35);
  const auto st = qkd::build_stats(src, 12);
  for (double d = 0.0; d <= 180.0 + 1e-9; d += 5.0) {
    const auto ch = channel_at(d);
    const auto obs = qkd::observe(src, ch);
    const auto b = qkd::build_bounds(st, obs);
    const double y0 = y0_truth(ch);
    const double y1 = y1_truth(ch);
    const double e1 = e1_truth(ch, src.omega);
    INFO("d=" << d);
    REQUIRE(b.y0_lower <= y0 + 1e-15);
    REQUIRE(b.y0_upper >= y0 - 1e-15);
    REQUIRE(b.y1_lower <= y1 + 1e-15);
    REQUIRE(b.y1_lower > 0.0);
    REQUIRE(b.e1_upper >= e1 - 1e-12);
    // The combined bound must stay below the true key volume.
    const auto p = qkd::detail::first_three(st);
    REQUIRE(b.combined_signal <= p.p1s * y1 + p.p0s * y0 + 1e-15);
    REQUIRE(b.combined_decoy <= p.p1d * y1 + p.p0d * y0 + 1e-15);
  }
}

TEST_CASE("bounds bracket the truths at a brighter setting", "[decoy]") {
  const auto src = source_for_zeta(0.7);
  const auto st = qkd::build_stats(src, 12);
  for (double d : {0.0, 60.0, 120.0, 180.0}) {
    const auto ch = channel_at(d);
    const auto b = qkd::build_bounds(st, qkd::observe(src, ch));
    INFO("d=" << d);
    REQUIRE(b.y0_lower <= y0_truth(ch) + 1e-15);
    REQUIRE(b.y0_upper >= y0_truth(ch) - 1e-15);
    REQUIRE(b.y1_lower <= y1_truth(ch) + 1e-15);
    REQUIRE(b.e1_upper >= e1_truth(ch, src.omega) - 1e-12);
  }
}

TEST_CASE("reference point bound values", "[decoy]") {
  const auto src = source_for_zeta(0.35);
  const auto st = qkd::build_stats(src, 12);
  const auto b = qkd::build_bounds(st, qkd::observe(src, channel_at(0.0)));
  REQUIRE_THAT(b.y0_upper, WithinRel(0.0001644910937383475, 1e-9));
  REQUIRE_THAT(b.y1_lower, WithinRel(0.039640948933598923, 1e-9));
  REQUIRE_THAT(b.e1_upper, WithinRel(0.017899254342749239, 1e-9));
}

TEST_CASE("estimation is symmetric under interval relabeling", "[decoy]") {
  const auto src = source_for_zeta(0.35);
  const auto st = qkd::build_stats(src, 12);
  const auto st2 = swapped(st);
  REQUIRE_NOTHROW(qkd::check_conditions(st2));
  for (double d : {0.0, 100.0, 180.0}) {
    const auto obs = qkd::observe(src, channel_at(d));
    const auto obs2 = swapped(obs);
    const auto b = qkd::build_bounds(st, obs);
    const auto b2 = qkd::build_bounds(st2, obs2);
    INFO("d=" << d);
    // Relabeling the intervals only renames the inputs; every bound must
    // come out bit-identical, with the combined pair exchanged.
    REQUIRE(b2.y0_upper == b.y0_upper);
    REQUIRE(b2.y0_lower == b.y0_lower);
    REQUIRE(b2.y1_lower == b.y1_lower);
    REQUIRE(b2.e1_upper == b.e1_upper);
    REQUIRE(b2.combined_signal == b.combined_decoy);
    REQUIRE(b2.combined_decoy == b.combined_signal);
  }
}

TEST_CASE("degenerate statistics are rejected", "[decoy]") {
  auto st = qkd::build_stats(source_for_zeta(0.35), 12);
  st.p_decoy = st.p_signal;
  REQUIRE_THROWS_AS(qkd::check_conditions(st), qkd::numeric_error);
}

TEST_CASE("a broken likelihood ratio is rejected", "[decoy]") {
  auto st = qkd::build_stats(source_for_zeta(0.35), 12);
  // Depress one tail weight so r_7 < r_6 while the n <= 2 block (and with
  // it the determinant checks) stays untouched.
  st.p_signal[7] =
      st.p_signal[6] * st.p_decoy[7] / st.p_decoy[6] * 0.999;
  REQUIRE_THROWS_AS(qkd::check_conditions(st), qkd::numeric_error);
}

TEST_CASE("e1_upper requires a positive single-photon yield", "[decoy]") {
  const auto src = source_for_zeta(0.35);
  const auto st = qkd::build_stats(src, 12);
  const auto obs = qkd::observe(src, channel_at(0.0));
  REQUIRE_THROWS_AS(qkd::e1_upper(st, obs, 0.0, 0.0), qkd::numeric_error);
}

TEST_CASE("inconsistent observations trigger the credit-zero sentinel",
          "[decoy]") {
  // A decoy gain far below anything the model allows drives the Y1 bound
  // negative; the estimate must clamp to zero and disable the credit
  // rather than produce a negative yield.
  const auto st = qkd::build_stats(source_for_zeta(0.35), 12);
  qkd::ObservedStats obs;
  obs.q_signal = 0.01;
  obs.q_decoy = 0.0001;
  obs.e_signal = 0.01;
  obs.e_decoy = 0.01;
  const auto b = qkd::build_bounds(st, obs);
  REQUIRE(b.y1_lower == 0.0);
  REQUIRE(b.e1_upper == 0.5);
  bool found = false;
  for (const auto& n : b.notes)
    found = found || n.find("single-photon credit zeroed") != std::string::npos;
  REQUIRE(found);
}

TEST_CASE("background error rate constant", "[decoy]") {
  REQUIRE(qkd::e0_background == 0.5);
}
