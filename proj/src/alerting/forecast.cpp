/*
    Copyright (c) 2026 The miniops Authors
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at
        http://www.apache.org/licenses/LICENSE-2.0
    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/

#include "miniops/alerting/forecast.hpp"

#include <cmath>
#include <limits>

#include "miniops/common/error.hpp"

namespace miniops::alerting {

Trend fit_trend(std::span<const Sample> window) {
  if (window.size() < 2) throw Error(Errc::invalid_argument, "degenerate window: fewer than 2 samples");
  // Center on the first sample so the day offsets stay small before averaging.
  const EpochMs t0 = window.front().ts;
  double t_sum = 0, y_sum = 0;
  for (const auto& s : window) {
    t_sum += to_days(s.ts - t0);
    y_sum += s.value;
  }
  const double n = static_cast<double>(window.size());
  const double t_bar = t_sum / n, y_bar = y_sum / n;
  double sxy = 0, sxx = 0;
  for (const auto& s : window) {
    const double dt = to_days(s.ts - t0) - t_bar;
    sxy += dt * (s.value - y_bar);
    sxx += dt * dt;
  }
  if (sxx == 0) throw Error(Errc::invalid_argument, "degenerate window: all timestamps equal");
  Trend fit;
  fit.slope = sxy / sxx;
  fit.t_mean = to_days(t0) + t_bar;
  fit.y_mean = y_bar;
  fit.intercept = y_bar - fit.slope * fit.t_mean;
  return fit;
}

double days_to_saturation(const Trend& fit, EpochMs now, double bound, double epsilon) {
  const double y = fit.at(to_days(now));
  const double gap = bound - y;
  if (gap == 0) return 0.0;
  if (std::fabs(fit.slope) <= epsilon || fit.slope * gap < 0) return std::numeric_limits<double>::infinity();
  return gap / fit.slope;
}

double OlsForecaster::days_to_saturation(std::span<const Sample> window, EpochMs now, double bound) const {
  return alerting::days_to_saturation(fit_trend(window), now, bound, epsilon_);
}

}  // namespace miniops::alerting
