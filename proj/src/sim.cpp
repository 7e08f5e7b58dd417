#include "icguard/sim.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "json.hpp"

#include "icguard/detect.hpp"
#include "icguard/errors.hpp"
#include "icguard/kernels.hpp"
#include "icguard/vehicle.hpp"

namespace icguard {
namespace {

// Packed integration state: plant (p0 v0 a0 p1 v1 a1), follower commanded
// input u1, hidden estimate (2), measured-block estimate (4).
constexpr int kPacked = 13;

// Observer matrices flattened to plain arrays for the integration loop.
struct HotModel {
  double a11[2][2];
  double a12[2][4];
  double a21[4][2];
  double a22[4][4];
  double a22ns[4][4];  // A22 - A22s
  double b1[2][2];
  double b2[4][2];
};

HotModel flatten(const CanonicalModel& cm, const ObserverGains& g) {
  HotModel h{};
  const Eigen::Matrix4d a22ns = cm.A22 - g.A22s;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      h.a11[i][j] = cm.A11(i, j);
      h.b1[i][j] = cm.B1(i, j);
    }
    for (int j = 0; j < 4; ++j) h.a12[i][j] = cm.A12(i, j);
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 2; ++j) {
      h.a21[i][j] = cm.A21(i, j);
      h.b2[i][j] = cm.B2(i, j);
    }
    for (int j = 0; j < 4; ++j) {
      h.a22[i][j] = cm.A22(i, j);
      h.a22ns[i][j] = a22ns(i, j);
    }
  }
  return h;
}

// Values held constant over one integration step: the communicated input,
// the noise draw entering the innovation, and the switching injection.
struct StepInputs {
  double t;
  double u_recv;
  const double* zeta;
  const double* nu;
  bool engaged;
};

void derivative(const double* s, const StepInputs& in, double t_stage,
                const HotModel& hm, const ScenarioConfig& cfg, double* d) {
  const VehicleState leader{s[0], s[1], s[2]};
  const VehicleState follower{s[3], s[4], s[5]};
  const double u0s = cfg.leader_profile.value_at(t_stage);
  const VehicleState dl = car_derivative(leader, u0s, cfg.leader);
  const VehicleState df = car_derivative(follower, s[6], cfg.follower);
  d[0] = dl.p;
  d[1] = dl.v;
  d[2] = dl.a;
  d[3] = df.p;
  d[4] = df.v;
  d[5] = df.a;
  if (!in.engaged) {
    for (int i = 6; i < kPacked; ++i) d[i] = 0.0;
    return;
  }
  d[6] = cacc_control(follower, leader, s[6], in.u_recv, cfg.controller,
                      cfg.leader.length);
  // Innovation at the stage state with the held noise draw.
  const double cx[4] = {s[3] - s[0], s[4] - s[1], s[4], s[5]};
  double ey[4];
  for (int i = 0; i < 4; ++i) ey[i] = s[9 + i] - cx[i] - in.zeta[i];
  for (int i = 0; i < 2; ++i) {
    double acc = hm.a11[i][0] * s[7] + hm.a11[i][1] * s[8];
    for (int j = 0; j < 4; ++j) acc += hm.a12[i][j] * (s[9 + j] - ey[j]);
    acc += hm.b1[i][0] * in.u_recv + hm.b1[i][1] * s[6];
    d[7 + i] = acc;
  }
  for (int i = 0; i < 4; ++i) {
    double acc = hm.a21[i][0] * s[7] + hm.a21[i][1] * s[8];
    for (int j = 0; j < 4; ++j) {
      acc += hm.a22[i][j] * s[9 + j] - hm.a22ns[i][j] * ey[j];
    }
    acc += hm.b2[i][0] * in.u_recv + hm.b2[i][1] * s[6] + in.nu[i];
    d[9 + i] = acc;
  }
}

void rk4_step(double* s, const StepInputs& in, const HotModel& hm,
              const ScenarioConfig& cfg) {
  const kern::Backend& kb = kern::active_backend();
  double k1[kPacked], k2[kPacked], k3[kPacked], k4[kPacked], tmp[kPacked];
  derivative(s, in, in.t, hm, cfg, k1);
  kb.stage_combine(kPacked, s, cfg.dt * 0.5, k1, tmp);
  derivative(tmp, in, in.t + cfg.dt * 0.5, hm, cfg, k2);
  kb.stage_combine(kPacked, s, cfg.dt * 0.5, k2, tmp);
  derivative(tmp, in, in.t + cfg.dt * 0.5, hm, cfg, k3);
  kb.stage_combine(kPacked, s, cfg.dt, k3, tmp);
  derivative(tmp, in, in.t + cfg.dt, hm, cfg, k4);
  double next[kPacked];
  kb.rk4_combine(kPacked, s, cfg.dt, k1, k2, k3, k4, next);
  for (int i = 0; i < kPacked; ++i) s[i] = next[i];
}

double first_nonzero_time(const AttackSignal& a) {
  switch (a.kind) {
    case AttackSignal::Kind::kNone:
      return -1.0;
    case AttackSignal::Kind::kStep:
      return a.magnitude != 0.0 ? a.onset : -1.0;
    case AttackSignal::Kind::kPiecewise:
      for (const auto& [t, v] : a.samples) {
        if (v != 0.0) return t;
      }
      return -1.0;
  }
  return -1.0;
}

nlohmann::json metrics_json(const RunMetrics& m) {
  nlohmann::json j;
  j["crashed"] = m.crashed;
  j["crash_time"] = m.crashed ? nlohmann::json(m.crash_time)
                              : nlohmann::json(nullptr);
  auto opt = [](double v) {
    return v >= 0.0 ? nlohmann::json(v) : nlohmann::json(nullptr);
  };
  j["trigger_time"] = opt(m.trigger_time);
  j["attack_onset"] = opt(m.attack_onset);
  j["novel"] = {{"fired", m.novel_fired},
                {"first_alarm", opt(m.novel_first)},
                {"first_persistent", opt(m.novel_persistent)}};
  j["eoi"] = {{"fired", m.eoi_fired},
              {"first_alarm", opt(m.eoi_first)},
              {"first_persistent", opt(m.eoi_persistent)}};
  j["settled_gap"] = m.settled_gap;
  j["final_speed_error"] = m.final_speed_error;
  j["delta_u_hat"] = m.delta_u_hat_final;
  j["estimate_accuracy_bound"] = m.estimate_accuracy_bound;
  j["eta_max_abs"] = m.eta_max_abs;
  j["gain_check_pass"] = m.gain_check_pass;
  return j;
}

}  // namespace

RunResult run_scenario(const ScenarioConfig& cfg, const ModelBundle& bundle,
                       std::uint64_t seed, bool collect_extras) {
  const kern::Backend& kb = kern::active_backend();
  const HotModel hm = flatten(bundle.canonical, cfg.observer);
  const int n_steps = static_cast<int>(std::floor(cfg.duration / cfg.dt + 1e-9));
  const int spm = cfg.steps_per_measurement();
  const Eigen::Matrix<double, 2, 6> n_rows =
      bundle.canonical.T.topRows<2>();
  const Vec4& zbar = bundle.uncertain.zeta_bound;

  NoiseSampler noise(cfg.noise, seed);
  NovelDetectorState det;
  E1EnvelopeStepper env(bundle.bounds, cfg.dt);
  AttackConvolution conv(bundle.canonical, cfg.dt);

  Vec4 filter_decay;
  for (int i = 0; i < 4; ++i) {
    filter_decay[i] = std::exp(-cfg.observer.k_diag[i] * cfg.dt);
  }

  double s[kPacked] = {cfg.leader_init.p,   cfg.leader_init.v,
                       cfg.leader_init.a,   cfg.follower_init.p,
                       cfg.follower_init.v, cfg.follower_init.a,
                       cfg.follower_init.a, 0.0,
                       0.0,                 0.0,
                       0.0,                 0.0,
                       0.0};

  bool engaged = false;
  int k_trig = 0;
  Vec4 nufil{};
  Vec4 rate_up_prev{}, rate_lo_prev{};
  const double dwell = cfg.alarm_dwell;
  AlarmTracker novel_run(dwell), eoi_run(dwell);
  std::array<AlarmTracker, 4> novel_ch{AlarmTracker(dwell), AlarmTracker(dwell),
                                       AlarmTracker(dwell), AlarmTracker(dwell)};
  std::array<AlarmTracker, 4> eoi_ch{AlarmTracker(dwell), AlarmTracker(dwell),
                                     AlarmTracker(dwell), AlarmTracker(dwell)};
  std::array<bool, 4> prev_novel{}, prev_eoi{};
  bool held_novel = false, held_eoi = false;

  RunResult out;
  out.rows.reserve(static_cast<std::size_t>(n_steps) + 1);
  out.extras.slide_onset.fill(-1.0);
  Vec4 prev_ey_sign{};
  RunMetrics& m = out.metrics;
  m.attack_onset = first_nonzero_time(cfg.attack);
  m.gain_check_pass = bundle.gain_check.pass;

  for (int k = 0;; ++k) {
    const double t = k * cfg.dt;
    const Vec4 zeta = noise.draw();

    if (!engaged && s[0] >= -cfg.ic_trigger_distance &&
        s[3] >= -cfg.ic_trigger_distance) {
      engaged = true;
      k_trig = k;
      m.trigger_time = t;
      // Hidden estimate starts at zero, measured-block estimate at the
      // offset-corrected measurement, so the innovation starts at zero.
      const double cx0[4] = {s[3] - s[0], s[4] - s[1], s[4], s[5]};
      for (int i = 0; i < 4; ++i) s[9 + i] = cx0[i] + zeta[i];
      s[7] = 0.0;
      s[8] = 0.0;
      nufil.fill(0.0);
      rate_up_prev = bundle.bounds.rate_upper_from(env.value());
      rate_lo_prev = bundle.bounds.rate_lower_from(env.value());
    }

    const double du_att = cfg.attack.value_at(t);
    const double du_net = du_att - cfg.compensation.value_at(t);
    const double u0_now = cfg.leader_profile.value_at(t);
    const double u_recv = u0_now + du_net;

    Vec4 ey{};
    Vec4 nu{};
    if (engaged) {
      const double cx[4] = {s[3] - s[0], s[4] - s[1], s[4], s[5]};
      kb.sub3_4(&s[9], cx, zeta.data(), ey.data());
      kb.sign_switch4(ey.data(), cfg.observer.m_diag.data(), nu.data());

      for (int i = 0; i < 4; ++i) {
        const double sg = (ey[i] > 0.0) ? 1.0 : (ey[i] < 0.0 ? -1.0 : 0.0);
        if (sg != 0.0) {
          if (prev_ey_sign[i] != 0.0 && sg != prev_ey_sign[i] &&
              out.extras.slide_onset[i] < 0.0) {
            out.extras.slide_onset[i] = t;
          }
          prev_ey_sign[i] = sg;
        }
      }

      if ((k - k_trig) % spm == 0) {
        reset_bounds_at_measurement(det, ey, zbar, t);
        const NovelCheck nc = check_novel_detection(det);
        const EoiCheck ec = eoi_threshold_check(nufil, bundle.eoi_thresholds);
        novel_run.update(t, nc.any);
        eoi_run.update(t, ec.any);
        for (int i = 0; i < 4; ++i) {
          novel_ch[i].update(t, nc.channel[i]);
          if (nc.channel[i] && !prev_novel[i]) {
            out.events.push_back(
                {AlarmEvent::Detector::kNovel, i, t, false});
          }
          prev_novel[i] = nc.channel[i];
          eoi_ch[i].update(t, ec.channel[i]);
          if (ec.channel[i] && !prev_eoi[i]) {
            out.events.push_back({AlarmEvent::Detector::kEoi, i, t, false});
          }
          prev_eoi[i] = ec.channel[i];
        }
        held_novel = nc.any;
        held_eoi = ec.any;
      }
    }

    RunRow row;
    row.t = t;
    row.p0 = s[0];
    row.v0 = s[1];
    row.a0 = s[2];
    row.p1 = s[3];
    row.v1 = s[4];
    row.a1 = s[5];
    row.u0 = u0_now;
    row.u1 = s[6];
    row.du_attack = du_att;
    row.ey = ey;
    row.e2up = det.initialized ? det.cur_up : Vec4{};
    row.e2lo = det.initialized ? det.cur_lo : Vec4{};
    row.nufil = nufil;
    row.alarm_novel = held_novel ? 1 : 0;
    row.alarm_eoi = held_eoi ? 1 : 0;
    out.rows.push_back(row);

    if (collect_extras && engaged) {
      Eigen::Matrix<double, 6, 1> x;
      x << s[0], s[1], s[2], s[3], s[4], s[5];
      const Eigen::Vector2d z1 = n_rows * x;
      out.extras.t.push_back(t);
      out.extras.e1_true.push_back(Eigen::Vector2d(s[7] - z1(0), s[8] - z1(1)));
      out.extras.e1_upper.push_back(env.value());
      Vec4 e2t;
      const double cx[4] = {s[3] - s[0], s[4] - s[1], s[4], s[5]};
      for (int i = 0; i < 4; ++i) e2t[i] = s[9 + i] - cx[i];
      out.extras.e2_true.push_back(e2t);
      out.extras.r_delta.push_back(conv.r_delta());
      out.extras.eta.push_back((cfg.r_tau - 1.0) * (u0_now - s[2]));
    }

    const double eta_now = std::abs((cfg.r_tau - 1.0) * (u0_now - s[2]));
    if (eta_now > m.eta_max_abs) m.eta_max_abs = eta_now;

    if (crash_predicate(s[3], s[0], cfg.leader.length)) {
      m.crashed = true;
      m.crash_time = t;
      break;
    }
    if (k == n_steps) break;

    StepInputs in{t, u_recv, zeta.data(), nu.data(), engaged};
    rk4_step(s, in, hm, cfg);
    for (int i = 0; i < kPacked; ++i) {
      if (!std::isfinite(s[i])) {
        throw SimulationError("state diverged at t = " + std::to_string(t));
      }
    }

    if (engaged) {
      kb.exp_filter4(nu.data(), filter_decay.data(), nufil.data());
      env.advance();
      const Vec4 up_now = bundle.bounds.rate_upper_from(env.value());
      const Vec4 lo_now = bundle.bounds.rate_lower_from(env.value());
      propagate_bounds(det, ey, rate_up_prev, up_now, rate_lo_prev, lo_now,
                       cfg.dt * 0.5);
      rate_up_prev = up_now;
      rate_lo_prev = lo_now;
      conv.advance(du_net);
    }
  }

  auto opt_time = [](const AlarmTracker& tr, bool persistent) {
    if (persistent) {
      return tr.is_persistent() ? tr.first_persistent() : -1.0;
    }
    return tr.has_fired() ? tr.first_alarm() : -1.0;
  };
  m.novel_fired = novel_run.has_fired();
  m.novel_first = opt_time(novel_run, false);
  m.novel_persistent = opt_time(novel_run, true);
  m.eoi_fired = eoi_run.has_fired();
  m.eoi_first = opt_time(eoi_run, false);
  m.eoi_persistent = opt_time(eoi_run, true);
  m.settled_gap = s[0] - s[3] - cfg.leader.length;
  m.final_speed_error = s[4] - s[1];
  const AttackEstimate est = estimate_attack(nufil, bundle.canonical);
  m.delta_u_hat_final = est.delta_u_hat;
  m.estimate_accuracy_bound = est.accuracy_bound;

  auto mark_persisted = [&out](AlarmEvent::Detector d, int ch, double tp) {
    for (AlarmEvent& e : out.events) {
      if (e.detector == d && e.channel == ch && e.time == tp) {
        e.persisted = true;
        return;
      }
    }
  };
  for (int i = 0; i < 4; ++i) {
    if (novel_ch[i].is_persistent()) {
      mark_persisted(AlarmEvent::Detector::kNovel, i,
                     novel_ch[i].first_persistent());
    }
    if (eoi_ch[i].is_persistent()) {
      mark_persisted(AlarmEvent::Detector::kEoi, i,
                     eoi_ch[i].first_persistent());
    }
  }
  return out;
}

MonteCarloSummary monte_carlo(const ScenarioConfig& cfg,
                              const ModelBundle& bundle, int runs,
                              std::uint64_t seed_base) {
  MonteCarloSummary s;
  s.runs = runs;
  s.seeds.reserve(runs);
  s.per_run.reserve(runs);
  for (int i = 0; i < runs; ++i) {
    const std::uint64_t seed = seed_base + static_cast<std::uint64_t>(i);
    const RunResult r = run_scenario(cfg, bundle, seed);
    s.seeds.push_back(seed);
    s.per_run.push_back(r.metrics);
    const RunMetrics& m = r.metrics;
    if (m.crashed) ++s.crashes;
    if (m.novel_persistent >= 0.0) ++s.novel_persistent_count;
    if (m.eoi_persistent >= 0.0) ++s.eoi_persistent_count;
    if (m.novel_persistent >= 0.0 && m.eoi_persistent >= 0.0 &&
        m.novel_persistent < m.eoi_persistent) {
      ++s.novel_before_eoi;
    }
    if (m.crashed && m.novel_persistent >= 0.0 &&
        m.novel_persistent < m.crash_time) {
      ++s.novel_before_crash;
    }
  }
  return s;
}

void export_csv(const std::vector<RunRow>& rows, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (f == nullptr) {
    throw SimulationError("cannot open output file: " + path);
  }
  std::fputs(
      "t,p0,v0,a0,p1,v1,a1,u0,u1,du_attack,"
      "ey_1,ey_2,ey_3,ey_4,e2up_1,e2up_2,e2up_3,e2up_4,"
      "e2lo_1,e2lo_2,e2lo_3,e2lo_4,nufil_1,nufil_2,nufil_3,nufil_4,"
      "alarm_novel,alarm_eoi\n",
      f);
  char buf[40];
  auto put = [&](double v, char sep) {
    std::snprintf(buf, sizeof buf, "%.17g%c", v, sep);
    std::fputs(buf, f);
  };
  for (const RunRow& r : rows) {
    put(r.t, ',');
    put(r.p0, ',');
    put(r.v0, ',');
    put(r.a0, ',');
    put(r.p1, ',');
    put(r.v1, ',');
    put(r.a1, ',');
    put(r.u0, ',');
    put(r.u1, ',');
    put(r.du_attack, ',');
    for (int i = 0; i < 4; ++i) put(r.ey[i], ',');
    for (int i = 0; i < 4; ++i) put(r.e2up[i], ',');
    for (int i = 0; i < 4; ++i) put(r.e2lo[i], ',');
    for (int i = 0; i < 4; ++i) put(r.nufil[i], ',');
    std::fprintf(f, "%d,%d\n", r.alarm_novel, r.alarm_eoi);
  }
  const bool bad = std::ferror(f) != 0;
  std::fclose(f);
  if (bad) {
    throw SimulationError("write failure on output file: " + path);
  }
}

std::string metrics_to_json(const RunMetrics& m) {
  return metrics_json(m).dump(2) + "\n";
}

std::string summary_to_json(const MonteCarloSummary& s) {
  nlohmann::json j;
  j["runs"] = s.runs;
  j["crashes"] = s.crashes;
  j["novel_persistent_count"] = s.novel_persistent_count;
  j["eoi_persistent_count"] = s.eoi_persistent_count;
  j["novel_before_eoi"] = s.novel_before_eoi;
  j["novel_before_crash"] = s.novel_before_crash;
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < s.per_run.size(); ++i) {
    nlohmann::json r = metrics_json(s.per_run[i]);
    r["seed"] = s.seeds[i];
    runs.push_back(std::move(r));
  }
  j["per_run"] = std::move(runs);
  return j.dump(2) + "\n";
}

}  // namespace icguard
