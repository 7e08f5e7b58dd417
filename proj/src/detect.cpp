#include "icguard/detect.hpp"

#include <cmath>
#include <limits>

#include "icguard/kernels.hpp"

namespace icguard {
namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
}  // namespace

void propagate_bounds(NovelDetectorState& s, const Vec4& ey_step,
                      const Vec4& up_prev, const Vec4& up_now,
                      const Vec4& lo_prev, const Vec4& lo_now,
                      double half_dt) {
  for (int i = 0; i < 4; ++i) {
    if (ey_step[i] > 0.0) {
      s.sign_held[i] = 1.0;
    } else if (ey_step[i] < 0.0) {
      s.sign_held[i] = -1.0;
    }
    // An exact zero keeps the previous direction.
  }
  Vec4 step_up{};
  Vec4 step_lo{};
  const kern::Backend& k = kern::active_backend();
  k.trapezoid4(half_dt, up_prev.data(), up_now.data(), step_up.data());
  k.trapezoid4(half_dt, lo_prev.data(), lo_now.data(), step_lo.data());
  k.bound_propagate4(s.sign_held.data(), s.cur_up.data(), s.cur_lo.data(),
                     step_up.data(), step_lo.data(), s.cur_up.data(),
                     s.cur_lo.data());
}

void reset_bounds_at_measurement(NovelDetectorState& s, const Vec4& ey,
                                 const Vec4& zeta_bound, double t) {
  if (!s.initialized) {
    s.cur_up.fill(kInf);
    s.cur_lo.fill(-kInf);
    s.sign_held.fill(0.0);
    s.initialized = true;
  }
  const kern::Backend& k = kern::active_backend();
  k.bound_combine4(ey.data(), zeta_bound.data(), s.cur_up.data(),
                   s.cur_lo.data());
  s.last_measurement_time = t;
}

NovelCheck check_novel_detection(const NovelDetectorState& s) {
  NovelCheck out;
  for (int i = 0; i < 4; ++i) {
    out.channel[i] = s.cur_lo[i] > s.cur_up[i];
    out.any = out.any || out.channel[i];
  }
  return out;
}

EoiCheck eoi_threshold_check(const Vec4& nu_fil, const Vec4& thresholds) {
  EoiCheck out;
  for (int i = 0; i < 4; ++i) {
    out.channel[i] = std::abs(nu_fil[i]) > thresholds[i];
    out.any = out.any || out.channel[i];
  }
  return out;
}

AlarmTracker::AlarmTracker(double dwell_seconds)
    : dwell_(dwell_seconds), streak_start_(kNan), first_alarm_(kNan),
      first_persistent_(kNan) {}

void AlarmTracker::update(double t, bool active) {
  if (active) {
    if (!active_) {
      streak_start_ = t;
      if (std::isnan(first_alarm_)) first_alarm_ = t;
    }
    // Sample times are step multiples stored in binary floating point, so a
    // span that nominally equals the dwell can come out a few ulp short; the
    // slack is far below any sampling grid of interest.
    constexpr double kGridSlack = 1e-9;
    if (std::isnan(first_persistent_) && t - streak_start_ >= dwell_ - kGridSlack) {
      first_persistent_ = streak_start_;
    }
  }
  active_ = active;
}

bool AlarmTracker::has_fired() const { return !std::isnan(first_alarm_); }

bool AlarmTracker::is_persistent() const {
  return !std::isnan(first_persistent_);
}

double AlarmTracker::first_alarm() const { return first_alarm_; }

double AlarmTracker::first_persistent() const { return first_persistent_; }

}  // namespace icguard
