#pragma once

#include <array>

#include "icguard/types.hpp"

namespace icguard {

// On-line interval for the measured-block observer error. Between
// measurement clips the interval drifts with the healthy rate band in the
// direction the switching term is currently pushing the true error: while
// the output error is negative the error can only grow, so both edges move
// up (upper edge at the fast rate, lower at the slow one); a positive output
// error mirrors this downward. Each fresh measurement then clips the
// interval against where the error can actually be (at most one noise bound
// from the output error, and inside the noise band once sliding holds).
// Because the drift rates dominate the true error rate over every interval
// on which the switching direction is held, a healthy error stays inside the
// interval, so an empty interval - lower edge strictly above upper - can
// only be produced by non-healthy inputs, which is exactly the alarm.
struct NovelDetectorState {
  Vec4 cur_up{};     // running interval edges
  Vec4 cur_lo{};
  Vec4 sign_held{};  // switching direction in force; a zero output-error
                     // sample keeps the previous nonzero direction
  bool initialized = false;
  double last_measurement_time = 0.0;
};

struct NovelCheck {
  std::array<bool, 4> channel{};
  bool any = false;
};

// Advance the interval across one integration step: latch the switching
// direction from the output error that drove the step (zero keeps the
// previous direction; with no direction yet the edges hold), then add the
// trapezoid integral of the healthy rate band in that direction.
void propagate_bounds(NovelDetectorState& s, const Vec4& ey_step,
                      const Vec4& up_prev, const Vec4& up_now,
                      const Vec4& lo_prev, const Vec4& lo_now, double half_dt);

// Measurement update at time t: clip the interval against the fresh output
// error, never widening it. The first call initializes the interval from the
// measurement alone.
void reset_bounds_at_measurement(NovelDetectorState& s, const Vec4& ey,
                                 const Vec4& zeta_bound, double t);

// Alarm when the interval is empty on any channel (strict inequality).
NovelCheck check_novel_detection(const NovelDetectorState& s);

// Alarm when a filtered switching-signal magnitude strictly exceeds its
// settled healthy threshold.
struct EoiCheck {
  std::array<bool, 4> channel{};
  bool any = false;
};
EoiCheck eoi_threshold_check(const Vec4& nu_fil, const Vec4& thresholds);

// Rising-edge and dwell bookkeeping for one boolean alarm stream sampled at
// the measurement instants. A streak becomes persistent once it has lasted
// at least the dwell; the reported time is the streak start.
class AlarmTracker {
 public:
  explicit AlarmTracker(double dwell_seconds);
  void update(double t, bool active);
  bool has_fired() const;
  bool is_persistent() const;
  double first_alarm() const;       // NaN until the first rising edge
  double first_persistent() const;  // NaN until a streak spans the dwell

 private:
  double dwell_;
  bool active_ = false;
  double streak_start_;
  double first_alarm_;
  double first_persistent_;
};

}  // namespace icguard
