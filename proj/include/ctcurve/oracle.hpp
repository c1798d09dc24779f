#pragma once

// Direct integration of the Frenet system; the ground truth the closed form is
// checked against.

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctcurve/dopri5.hpp"
#include "ctcurve/error.hpp"
#include "ctcurve/frenet.hpp"

namespace ctcurve {

namespace detail {

using FrenetVector = std::array<double, 12>;

inline FrenetVector pack(const FrenetState& s) {
  return {s.point.x, s.point.y, s.point.z, s.T.x, s.T.y, s.T.z,
          s.N.x,     s.N.y,     s.N.z,     s.B.x, s.B.y, s.B.z};
}

inline FrenetState unpack(const FrenetVector& v) {
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, {v[9], v[10], v[11]}};
}

}  // namespace detail

/// Dense solution of the Frenet system around params.t0, covering
/// [t_lo, t_hi] (widened to contain t0). Frames are the raw integrated
/// vectors; nothing is re-orthonormalized during integration.
class FrenetOracle {
 public:
  using Stepper = DormandPrince5<12>;

  FrenetOracle(const CurveParams& params, const FrenetState& init, double t_lo, double t_hi, double tol,
               long max_steps = 2'000'000)
      : params_(params), init_(init) {
    params.validate();
    if (!(t_lo > 0.0 && t_hi < 1.0 && t_lo <= t_hi))
      throw Error(ErrorCode::domain, "integrate_oracle: t range must satisfy 0 < lo <= hi < 1");
    if (!(tol > 0.0)) throw Error(ErrorCode::config, "integrate_oracle: tolerance must be positive");
    if (!init.is_valid()) throw Error(ErrorCode::domain, "integrate_oracle: initial frame is not orthonormal");

    Stepper::Options opt;
    opt.rtol = tol;
    opt.atol = tol;
    opt.max_steps = max_steps;
    auto rhs = [this](double t, const detail::FrenetVector& y) {
      return detail::pack(ode_rhs(params_, t, detail::unpack(y)));
    };
    const auto y0 = detail::pack(init);
    const double t0 = params.t0;
    forward_ = Stepper::integrate(rhs, t0, y0, std::max(t_hi, t0), opt);
    backward_ = Stepper::integrate(rhs, t0, y0, std::min(t_lo, t0), opt);

    requested_lo_ = t_lo;
    requested_hi_ = t_hi;
    achieved_lo_ = std::max(t_lo, backward_.t_reached);
    achieved_hi_ = std::min(t_hi, forward_.t_reached);
    if (!forward_.complete || !backward_.complete) {
      Truncation tr;
      tr.requested_lo = t_lo;
      tr.requested_hi = t_hi;
      tr.achieved_lo = achieved_lo_;
      tr.achieved_hi = achieved_hi_;
      tr.reason = !backward_.complete ? "lower end: " + backward_.failure : "upper end: " + forward_.failure;
      if (!backward_.complete && !forward_.complete) tr.reason += "; upper end: " + forward_.failure;
      truncation_ = tr;
    }
  }

  const CurveParams& params() const noexcept { return params_; }
  double achieved_lo() const noexcept { return achieved_lo_; }
  double achieved_hi() const noexcept { return achieved_hi_; }
  const std::optional<Truncation>& truncation() const noexcept { return truncation_; }
  std::size_t steps() const noexcept { return forward_.segments.size() + backward_.segments.size(); }

  bool covers(double t) const noexcept {
    return t == params_.t0 || (t >= backward_.t_reached && t <= forward_.t_reached &&
                               (t >= params_.t0 ? !forward_.segments.empty() : !backward_.segments.empty()));
  }

  /// Raw integrated state at t (dense output). Exact at t0.
  FrenetState state_at(double t) const {
    if (t == params_.t0) return init_;
    if (!covers(t)) throw Error(ErrorCode::integration_failure, "oracle: t outside the integrated range", t);
    const auto& segs = t > params_.t0 ? forward_.segments : backward_.segments;
    const bool increasing = t > params_.t0;
    // first segment whose far end reaches t
    auto it = std::lower_bound(segs.begin(), segs.end(), t, [increasing](const auto& seg, double x) {
      return increasing ? seg.t_end() < x : seg.t_end() > x;
    });
    if (it == segs.end()) it = std::prev(segs.end());
    return detail::unpack(it->eval(t));
  }

  /// Samples at the requested parameters that lie in the achieved range.
  SampledCurve sample(std::span<const double> ts) const {
    SampledCurve out;
    out.params = params_;
    out.source = CurveSource::ode_oracle;
    out.truncation = truncation_;
    for (double t : ts) {
      if (!covers(t)) {
        if (!out.truncation) {
          Truncation tr{requested_lo_, requested_hi_, achieved_lo_, achieved_hi_, "sample outside integrated range"};
          out.truncation = tr;
        }
        continue;
      }
      const FrenetState st = state_at(t);
      out.samples.push_back({t, s_of_t(params_, t), st.point, st.frame().reorthonormalized()});
    }
    return out;
  }

 private:
  CurveParams params_;
  FrenetState init_;
  Stepper::Result forward_;
  Stepper::Result backward_;
  double requested_lo_ = 0.0, requested_hi_ = 0.0;
  double achieved_lo_ = 0.0, achieved_hi_ = 0.0;
  std::optional<Truncation> truncation_;
};

/// Integrates from params.t0 across t_range and samples at `ts`.
inline SampledCurve integrate_oracle(const CurveParams& params, const FrenetState& init,
                                     std::pair<double, double> t_range, double tol,
                                     std::span<const double> ts) {
  const FrenetOracle oracle(params, init, t_range.first, t_range.second, tol);
  return oracle.sample(ts);
}

}  // namespace ctcurve
