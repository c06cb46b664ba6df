#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "collabperf/dataset.hpp"

namespace collabperf {

/// Box for the sigmoidal curve parameters.
struct CurveBounds {
  double w_min = 0.5, w_max = 2.0;
  double b_min = -10.0, b_max = -3.0;
};

/// score(C) = sigmoid(w * ln C + b), C = parameter count in millions.
struct ScalingCurve {
  double w = 0.0;
  double b = 0.0;
  double residual = 0.0;  // sum of squared logit-space residuals
  std::size_t n_points = 0;
  std::string family;
  std::string task;
};

struct CurvePoint {
  double compute = 0.0;  // C > 0
  double score = 0.0;
};

/// Clip used before taking logits of observed scores.
inline constexpr double kScoreClip = 1e-4;

/// Bounded least squares of logit(S) against ln C. Throws FitError with
/// fewer than two points and DegenerateError when every C is equal.
ScalingCurve fit_curve(std::span<const CurvePoint> points, const CurveBounds& bounds = {});

double predict_curve(const ScalingCurve& curve, double compute);

/// Fits the curve on same-family models with fewer parameters than `target`
/// that have an observed score on `task`, then evaluates at the target size.
/// Throws CoverageError when fewer than two usable points exist.
double scaling_predict_for_model(const ModelRecord& target, const Dataset& data, const ScoreMatrix& train,
                                 std::size_t task, ScalingCurve* fitted = nullptr, const CurveBounds& bounds = {});

void write_curves_csv(std::span<const ScalingCurve> curves, std::ostream& out);

}  // namespace collabperf
