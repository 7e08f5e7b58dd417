#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "icguard/config.hpp"
#include "icguard/types.hpp"

namespace icguard {

// One per-step record of the closed-loop run: plant state, inputs, injected
// corruption, innovation, detector interval, filtered switching signal, and
// the held alarm flags.
struct RunRow {
  double t;
  double p0, v0, a0;  // leader
  double p1, v1, a1;  // follower
  double u0, u1;
  double du_attack;
  Vec4 ey;
  Vec4 e2up;
  Vec4 e2lo;
  Vec4 nufil;
  int alarm_novel;
  int alarm_eoi;
};

struct AlarmEvent {
  enum class Detector { kNovel, kEoi };
  Detector detector;
  int channel;     // 0-based measurement channel
  double time;     // rising edge of the alarm streak
  bool persisted;  // streak went on to span the dwell
};

struct RunMetrics {
  bool crashed = false;
  double crash_time = 0.0;  // valid only when crashed
  double trigger_time = -1.0;  // observer engagement; -1 when never engaged
  double attack_onset = -1.0;  // first nonzero injected value; -1 when clean
  bool novel_fired = false;
  double novel_first = -1.0;
  double novel_persistent = -1.0;
  bool eoi_fired = false;
  double eoi_first = -1.0;
  double eoi_persistent = -1.0;
  double settled_gap = 0.0;         // final bumper-to-bumper gap
  double final_speed_error = 0.0;   // final v_f - v_l
  double delta_u_hat_final = 0.0;   // injection estimate at the last instant
  double estimate_accuracy_bound = 0.0;
  double eta_max_abs = 0.0;  // largest lag-mismatch signal seen in the run
  bool gain_check_pass = false;
};

// Per-step traces used by the validation harness but not exported to CSV.
struct RunExtras {
  std::vector<double> t;
  std::vector<Eigen::Vector2d> e1_true;   // hidden observer error
  std::vector<Eigen::Vector2d> e1_upper;  // analytic healthy envelope
  std::vector<Vec4> e2_true;              // measured-block observer error
  std::vector<Eigen::Vector2d> r_delta;   // hidden response to the injection
  std::vector<double> eta;                // lag-mismatch signal
  Vec4 slide_onset;  // first innovation sign change per channel, -1 if none
};

struct RunResult {
  std::vector<RunRow> rows;
  RunMetrics metrics;
  std::vector<AlarmEvent> events;
  RunExtras extras;  // filled only when requested
};

// Closed-loop simulation of one scenario with the given noise seed.
// Classical fourth-order integration at cfg.dt with the communicated input,
// measurement noise, and the switching injection held over each step; the
// run stops early at the first crash instant.
RunResult run_scenario(const ScenarioConfig& cfg, const ModelBundle& bundle,
                       std::uint64_t seed, bool collect_extras = false);

struct MonteCarloSummary {
  int runs = 0;
  int crashes = 0;
  int novel_persistent_count = 0;
  int eoi_persistent_count = 0;
  int novel_before_eoi = 0;    // runs where both persisted, novel first
  int novel_before_crash = 0;  // crashed runs with a prior persistent alarm
  std::vector<std::uint64_t> seeds;
  std::vector<RunMetrics> per_run;
};

// Repeated runs of the same scenario with seeds seed_base, seed_base+1, ...
// The model bundle is built once and shared.
MonteCarloSummary monte_carlo(const ScenarioConfig& cfg,
                              const ModelBundle& bundle, int runs,
                              std::uint64_t seed_base);

// CSV export, header first, shortest round-trippable float formatting.
void export_csv(const std::vector<RunRow>& rows, const std::string& path);

std::string metrics_to_json(const RunMetrics& m);
std::string summary_to_json(const MonteCarloSummary& s);

}  // namespace icguard
