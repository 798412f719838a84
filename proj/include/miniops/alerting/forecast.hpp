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

#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "miniops/common/clock.hpp"

namespace miniops::alerting {

struct Sample {
  EpochMs ts = 0;
  double value = 0.0;
};

inline double to_days(EpochMs ts) { return static_cast<double>(ts) / static_cast<double>(kMsPerDay); }

/// y = intercept + slope * t, t in days since the epoch. The means are kept so
/// predictions near the window stay accurate when t is large.
struct Trend {
  double slope = 0.0;
  double intercept = 0.0;
  double t_mean = 0.0;
  double y_mean = 0.0;

  double at(double days) const { return y_mean + slope * (days - t_mean); }
};

// Ordinary least squares. Needs two distinct timestamps, else Error(invalid_argument).
Trend fit_trend(std::span<const Sample> window);

inline constexpr double kDefaultSlopeEpsilon = 1e-9;

// Days until the trend reaches bound from its value at now. Infinite unless the
// slope points toward the bound and exceeds epsilon in magnitude; 0 at the bound.
double days_to_saturation(const Trend& fit, EpochMs now, double bound, double epsilon = kDefaultSlopeEpsilon);

class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual std::string name() const = 0;
  // Throws Error(invalid_argument) for a window it cannot fit.
  virtual double days_to_saturation(std::span<const Sample> window, EpochMs now, double bound) const = 0;
};

class OlsForecaster final : public Forecaster {
 public:
  explicit OlsForecaster(double epsilon = kDefaultSlopeEpsilon) : epsilon_(epsilon) {}
  std::string name() const override { return "ols"; }
  double days_to_saturation(std::span<const Sample> window, EpochMs now, double bound) const override;

 private:
  double epsilon_;
};

}  // namespace miniops::alerting
