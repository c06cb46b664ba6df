#include "collabperf/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "collabperf/csv.hpp"
#include "collabperf/error.hpp"

namespace collabperf {

namespace {

double logit(double s) {
  s = std::clamp(s, kScoreClip, 1.0 - kScoreClip);
  return std::log(s / (1.0 - s));
}

struct Moments {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;

  // Sum of squared residuals of y - (w x + b).
  double sse(double w, double b) const {
    return syy - 2 * w * sxy - 2 * b * sy + w * w * sxx + 2 * w * b * sx + b * b * n;
  }
  // argmin over b for fixed w, and over w for fixed b.
  double best_b(double w) const { return (sy - w * sx) / n; }
  double best_w(double b) const { return (sxy - b * sx) / sxx; }
};

}  // namespace

ScalingCurve fit_curve(std::span<const CurvePoint> points, const CurveBounds& bounds) {
  if (points.size() < 2) throw FitError("sigmoid fit needs at least 2 points, got " + std::to_string(points.size()));
  Moments mo;
  for (const auto& p : points) {
    if (!(p.compute > 0.0)) throw DomainError("sigmoid fit: compute must be positive");
    const double x = std::log(p.compute);
    const double y = logit(p.score);
    mo.n += 1;
    mo.sx += x;
    mo.sy += y;
    mo.sxx += x * x;
    mo.sxy += x * y;
    mo.syy += y * y;
  }
  // Centered spread of x; zero when every compute value coincides.
  double spread = 0.0;
  {
    const double mean = mo.sx / mo.n;
    for (const auto& p : points) spread += (std::log(p.compute) - mean) * (std::log(p.compute) - mean);
  }
  if (!(spread > 0.0)) throw DegenerateError("sigmoid fit: all compute values are identical");

  const double mean_x = mo.sx / mo.n;
  const double mean_y = mo.sy / mo.n;
  double cov = 0.0;
  for (const auto& p : points) cov += (std::log(p.compute) - mean_x) * (logit(p.score) - mean_y);
  double w = cov / spread;
  double b = mean_y - w * mean_x;

  const bool inside = w >= bounds.w_min && w <= bounds.w_max && b >= bounds.b_min && b <= bounds.b_max;
  if (!inside) {
    // Convex quadratic on a box: the optimum lies on an edge. Each edge is a
    // 1-D convex quadratic, minimized in closed form and clamped.
    struct Candidate {
      double w, b;
    };
    std::vector<Candidate> cands;
    for (double wf : {bounds.w_min, bounds.w_max})
      cands.push_back({wf, std::clamp(mo.best_b(wf), bounds.b_min, bounds.b_max)});
    for (double bf : {bounds.b_min, bounds.b_max})
      cands.push_back({std::clamp(mo.best_w(bf), bounds.w_min, bounds.w_max), bf});
    auto best = std::min_element(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& c) {
      return mo.sse(a.w, a.b) < mo.sse(c.w, c.b);
    });
    w = best->w;
    b = best->b;
  }

  ScalingCurve curve;
  curve.w = w;
  curve.b = b;
  curve.n_points = points.size();
  double r = 0.0;
  for (const auto& p : points) {
    const double e = logit(p.score) - (w * std::log(p.compute) + b);
    r += e * e;
  }
  curve.residual = r;
  return curve;
}

double predict_curve(const ScalingCurve& curve, double compute) {
  if (!(compute > 0.0)) throw DomainError("predict_curve: compute must be positive");
  return 1.0 / (1.0 + std::exp(-(curve.w * std::log(compute) + curve.b)));
}

double scaling_predict_for_model(const ModelRecord& target, const Dataset& data, const ScoreMatrix& train,
                                 std::size_t task, ScalingCurve* fitted, const CurveBounds& bounds) {
  if (!target.has_params() || target.params_m() <= 0.0)
    throw CoverageError("'" + target.identifier + "' has no parameter count");
  if (target.factors[model_factor::family].category.empty())
    throw CoverageError("'" + target.identifier + "' has no model family");
  std::vector<CurvePoint> pts;
  for (std::size_t u = 0; u < data.models.size(); ++u) {
    const auto& rec = data.models[u];
    if (rec.identifier == target.identifier || rec.family() != target.family()) continue;
    if (!rec.has_params() || rec.params_m() <= 0.0 || rec.params_m() >= target.params_m()) continue;
    auto s = train.score(u, task);
    if (s) pts.push_back({rec.params_m(), *s});
  }
  bool distinct = false;
  for (const auto& p : pts) distinct |= p.compute != pts.front().compute;
  if (pts.size() < 2 || !distinct)
    throw CoverageError("family '" + target.family() + "' has " + std::to_string(pts.size()) +
                        " smaller model(s) scored on '" + train.tasks().name(task) + "'");
  ScalingCurve curve = fit_curve(pts, bounds);
  curve.family = target.family();
  curve.task = train.tasks().name(task);
  if (fitted) *fitted = curve;
  return predict_curve(curve, target.params_m());
}

void write_curves_csv(std::span<const ScalingCurve> curves, std::ostream& out) {
  out << "family,task,w,b,residual,n_points\n";
  for (const auto& c : curves)
    csv::write_row(out, {c.family, c.task, csv::format_double(c.w), csv::format_double(c.b),
                         csv::format_double(c.residual), std::to_string(c.n_points)});
}

}  // namespace collabperf
