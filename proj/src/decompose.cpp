#include "relumo/decompose.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "relumo/color.hpp"
#include "relumo/error.hpp"
#include "relumo/resample.hpp"

namespace relumo {

namespace {

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

const double kLogitLow = std::log((kShadowEpsilon / kShadowKappa) /
                                  (1.0 - kShadowEpsilon / kShadowKappa));
const double kLogitHigh = std::log(1.0 / (kShadowKappa - 1.0));

Eigen::Vector3d vec3(std::span<const double> v) { return {v[0], v[1], v[2]}; }

ShVector flat(const Eigen::Matrix<double, 3, 9>& m) {
  ShVector v;
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < 9; ++j) v[c * 9 + j] = m(c, j);
  return v;
}

std::string trace_tail(const std::vector<double>& trace) {
  std::ostringstream os;
  os.precision(10);
  const std::size_t from = trace.size() > 10 ? trace.size() - 10 : 0;
  for (std::size_t i = from; i < trace.size(); ++i)
    os << (i == from ? "" : ", ") << "[" << i << "] " << trace[i];
  return os.str();
}

}  // namespace

Eigen::Vector2d normal_to_stereo(const Eigen::Vector3d& n) {
  const double d = 1.0 + n.z();
  return {n.x() / d, n.y() / d};
}

Eigen::Vector3d stereo_to_normal(const Eigen::Vector2d& pq) {
  const double r2 = pq.squaredNorm();
  return Eigen::Vector3d(2.0 * pq.x(), 2.0 * pq.y(), 1.0 - r2) / (1.0 + r2);
}

Eigen::Matrix<double, 3, 2> stereo_jacobian(const Eigen::Vector2d& pq) {
  const double p = pq.x();
  const double q = pq.y();
  const double d = 1.0 + p * p + q * q;
  const double d2 = d * d;
  Eigen::Matrix<double, 3, 2> j;
  j << 2.0 * (d - 2.0 * p * p) / d2, -4.0 * p * q / d2,
      -4.0 * p * q / d2, 2.0 * (d - 2.0 * q * q) / d2,
      -4.0 * p / d2, -4.0 * q / d2;
  return j;
}

double shadow_from_logit(double u) {
  return std::clamp(kShadowKappa * logistic(u), kShadowEpsilon, 1.0);
}

double shadow_logit_derivative(double u) {
  const double s = logistic(u);
  return kShadowKappa * s * (1.0 - s);
}

double shadow_to_logit(double s) {
  if (s >= 1.0) return kLogitHigh;
  if (s <= kShadowEpsilon) return kLogitLow;
  const double t = s / kShadowKappa;
  return std::clamp(std::log(t / (1.0 - t)), kLogitLow, kLogitHigh);
}

void validate(const OptimizerConfig& cfg) {
  const auto& w = cfg.weights;
  for (double v : {w.appearance, w.albedo_consistency, w.cross_render,
                   w.albedo_smoothness, w.shadow_prior})
    if (!(v >= 0.0)) throw Error("loss weights must be non-negative");
  if (cfg.iterations < 0) throw Error("iterations must be non-negative");
  if (!(cfg.learning_rate > 0.0)) throw Error("learning rate must be positive");
  if (cfg.decay_every < 1) throw Error("decay interval must be at least 1");
  if (!(cfg.tv_epsilon > 0.0)) throw Error("tv epsilon must be positive");
  if (cfg.pyramid_levels < 1) throw Error("pyramid levels must be at least 1");
}

OptimizerConfig single_view_config() {
  OptimizerConfig cfg;
  cfg.weights.albedo_smoothness = 0.05;
  cfg.weights.shadow_prior = 0.01;
  cfg.pyramid_levels = 3;
  return cfg;
}

Objective::Objective(const Image& img, const Mask& mask, const OptimizerConfig& cfg,
                     std::vector<AlbedoTarget> albedo_targets,
                     std::vector<CrossRenderTarget> render_targets)
    : img_(img),
      mask_(mask),
      cfg_(cfg),
      subspace_(cfg.subspace ? *cfg.subspace : ShSubspace::identity()),
      albedo_targets_(std::move(albedo_targets)),
      render_targets_(std::move(render_targets)) {
  validate(cfg_);
  require_same_size(img_, mask_, "objective");
}

Parameters Objective::parameters_from(const Decomposition& d) const {
  Parameters x;
  x.albedo = d.albedo.with_space(ColorSpace::Scalar);
  for (double& a : x.albedo.data()) a = std::clamp(a, 0.0, 1.0);
  x.stereo = img_.like(2, ColorSpace::Scalar);
  x.logit = img_.like(1, ColorSpace::Scalar);
  for (std::size_t p = 0; p < img_.pixel_count(); ++p) {
    Eigen::Vector3d n = vec3(d.normals.pixel(p));
    if (!(n.norm() > 0.0) || n.z() <= -1.0 + 1e-9) n = Eigen::Vector3d::UnitZ();
    const Eigen::Vector2d pq = normal_to_stereo(n.normalized());
    x.stereo.pixel(p)[0] = pq.x();
    x.stereo.pixel(p)[1] = pq.y();
    x.logit.pixel(p)[0] = shadow_to_logit(d.shadow.pixel(p)[0]);
  }
  const ShVector v = d.lighting.flatten();
  x.lighting = subspace_.basis.transpose() * (v - subspace_.mean);
  return x;
}

Decomposition Objective::layers(const Parameters& x) const {
  Decomposition d;
  d.mask = mask_;
  d.albedo = x.albedo.with_space(ColorSpace::LinearRGB);
  d.normals = img_.like(3, ColorSpace::Scalar);
  d.shadow = img_.like(1, ColorSpace::Scalar);
  for (std::size_t p = 0; p < img_.pixel_count(); ++p) {
    const Eigen::Vector3d n =
        stereo_to_normal({x.stereo.pixel(p)[0], x.stereo.pixel(p)[1]});
    for (int c = 0; c < 3; ++c) d.normals.pixel(p)[c] = n[c];
    d.shadow.pixel(p)[0] = shadow_from_logit(x.logit.pixel(p)[0]);
  }
  const ShVector v = subspace_.mean + subspace_.basis * x.lighting;
  d.lighting = ShLighting::from_flat(v);
  return d;
}

double Objective::evaluate(const Parameters& x, Parameters* grad,
                           LossBreakdown* parts) const {
  const Decomposition d = layers(x);
  const bool g = grad != nullptr;
  const auto& w = cfg_.weights;
  LossBreakdown b;

  Image g_albedo = img_.like(3, ColorSpace::Scalar);
  Image g_normals = img_.like(3, ColorSpace::Scalar);
  Image g_shadow = img_.like(1, ColorSpace::Scalar);
  Eigen::Matrix<double, 3, 9> g_light = Eigen::Matrix<double, 3, 9>::Zero();
  auto accumulate = [](Image& dst, const Image& src, double k) {
    if (src.empty() || k == 0.0) return;
    auto out = dst.data();
    auto in = src.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += k * in[i];
  };

  const LossValue app = appearance_loss(img_, d, g);
  b.appearance = app.value;
  if (g) {
    accumulate(g_albedo, app.gradient.albedo, w.appearance);
    accumulate(g_normals, app.gradient.normals, w.appearance);
    accumulate(g_shadow, app.gradient.shadow, w.appearance);
    g_light += w.appearance * app.gradient.lighting;
  }
  if (w.albedo_smoothness > 0.0) {
    const LossValue tv = albedo_tv_loss(d.albedo, mask_, cfg_.tv_epsilon, g);
    b.albedo_smoothness = tv.value;
    if (g) accumulate(g_albedo, tv.gradient.albedo, w.albedo_smoothness);
  }
  if (w.shadow_prior > 0.0) {
    const LossValue sp = shadow_prior_loss(d.shadow, mask_, g);
    b.shadow_prior = sp.value;
    if (g) accumulate(g_shadow, sp.gradient.shadow, w.shadow_prior);
  }
  if (w.albedo_consistency > 0.0)
    for (const auto& t : albedo_targets_) {
      const LossValue ac = albedo_consistency_term(d.albedo, t, g);
      b.albedo_consistency += cfg_.lab_scale * ac.value;
      if (g)
        accumulate(g_albedo, ac.gradient.albedo,
                   w.albedo_consistency * cfg_.lab_scale);
    }
  if (w.cross_render > 0.0)
    for (const auto& t : render_targets_) {
      const LossValue cr = cross_render_term(d.albedo, d.normals, t, g);
      b.cross_render += cfg_.lab_scale * cr.value;
      if (g) {
        const double k = w.cross_render * cfg_.lab_scale;
        accumulate(g_albedo, cr.gradient.albedo, k);
        accumulate(g_normals, cr.gradient.normals, k);
      }
    }
  b.total = w.appearance * b.appearance + w.albedo_smoothness * b.albedo_smoothness +
            w.shadow_prior * b.shadow_prior +
            w.albedo_consistency * b.albedo_consistency +
            w.cross_render * b.cross_render;
  if (parts) *parts = b;

  if (g) {
    grad->albedo = std::move(g_albedo);
    grad->stereo = img_.like(2, ColorSpace::Scalar);
    grad->logit = img_.like(1, ColorSpace::Scalar);
    for (std::size_t p = 0; p < img_.pixel_count(); ++p) {
      const Eigen::Vector2d pq(x.stereo.pixel(p)[0], x.stereo.pixel(p)[1]);
      const Eigen::Vector2d gpq =
          stereo_jacobian(pq).transpose() * vec3(g_normals.pixel(p));
      grad->stereo.pixel(p)[0] = gpq.x();
      grad->stereo.pixel(p)[1] = gpq.y();
      grad->logit.pixel(p)[0] =
          g_shadow.pixel(p)[0] * shadow_logit_derivative(x.logit.pixel(p)[0]);
    }
    grad->lighting = subspace_.basis.transpose() * flat(g_light);
  }
  return b.total;
}

namespace {

struct AdamBlock {
  std::vector<double> m;
  std::vector<double> v;
};

// One Adam proposal for a parameter block; `lo`/`hi` project the result.
void adam_propose(std::span<const double> x, std::span<const double> g,
                  const AdamBlock& state, AdamBlock& next, std::span<double> out,
                  double step, double b1, double b2, double eps, int t, double lo,
                  double hi) {
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  next.m.resize(x.size());
  next.v.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    next.m[i] = b1 * state.m[i] + (1.0 - b1) * g[i];
    next.v[i] = b2 * state.v[i] + (1.0 - b2) * g[i] * g[i];
    const double mh = next.m[i] / c1;
    const double vh = next.v[i] / c2;
    out[i] = std::clamp(x[i] - step * mh / (std::sqrt(vh) + eps), lo, hi);
  }
}

std::span<double> span_of(Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

Image initial_normals(const Image& img, const DecomposeInit& init) {
  if (init.normals) {
    require_same_size(img, *init.normals, "decompose init normals");
    return init.normals->with_space(ColorSpace::Scalar);
  }
  if (init.camera && init.camera->has_depth()) {
    require_same_size(img, init.camera->depth, "decompose camera depth");
    return normals_from_depth(*init.camera);
  }
  Image n = img.like(3, ColorSpace::Scalar);
  for (std::size_t p = 0; p < n.pixel_count(); ++p) n.pixel(p)[2] = 1.0;
  return n;
}

// Nearest-neighbour 2x upsampling onto a w x h raster; the rows and columns
// dropped by downscale() copy their closest coarse pixel.
Image upsample2(const Image& coarse, int w, int h, ColorSpace space) {
  Image out(w, h, coarse.channels(), space);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int cx = std::min(x / 2, coarse.width() - 1);
      const int cy = std::min(y / 2, coarse.height() - 1);
      for (int c = 0; c < coarse.channels(); ++c) out.at(x, y, c) = coarse.at(cx, cy, c);
    }
  return out;
}

Image downscale_normals(const Image& normals, const Mask& mask) {
  Image n = downscale(normals, mask, 2).image;
  for (std::size_t p = 0; p < n.pixel_count(); ++p) {
    auto v = n.pixel(p);
    Eigen::Vector3d m = vec3(v);
    m = m.norm() > 1e-9 ? m.normalized() : Eigen::Vector3d::UnitZ();
    for (int c = 0; c < 3; ++c) v[c] = m[c];
  }
  return n;
}

Decomposition initial_layers(const Image& img, const Mask& mask,
                             const DecomposeInit& init, const OptimizerConfig& cfg,
                             bool& estimated) {
  Decomposition d;
  d.mask = mask;
  d.normals = initial_normals(img, init);
  if (init.shadow) {
    require_same_size(img, *init.shadow, "decompose init shadow");
    d.shadow = init.shadow->with_space(ColorSpace::Scalar);
  } else {
    d.shadow = img.like(1, ColorSpace::Scalar, 1.0);
  }

  estimated = false;
  if (init.lighting) {
    d.lighting = *init.lighting;
  } else {
    const Image ones = img.like(3, ColorSpace::LinearRGB, 1.0);
    try {
      d.lighting =
          estimate_lighting(img, ones, d.normals, d.shadow, mask, cfg.subspace)
              .lighting;
    } catch (const NumericalError&) {
      Eigen::Vector3d mean = Eigen::Vector3d::Zero();
      for (std::size_t p = 0; p < img.pixel_count(); ++p)
        if (mask[p]) mean += vec3(img.pixel(p));
      mean /= static_cast<double>(mask.count());
      d.lighting = ShLighting::ambient(mean[0], mean[1], mean[2]);
    }
    estimated = true;
  }
  if (estimated && cfg.fix_gauge) {
    const Image sh = shade(d.normals, d.lighting);
    double sum = 0.0;
    for (std::size_t p = 0; p < sh.pixel_count(); ++p)
      if (mask[p]) sum += luminance(sh.pixel(p)[0], sh.pixel(p)[1], sh.pixel(p)[2]);
    const double mean = sum / static_cast<double>(mask.count());
    if (mean > 0.0) d.lighting = (1.0 / mean) * d.lighting;
  }

  if (init.albedo) {
    require_same_size(img, *init.albedo, "decompose init albedo");
    d.albedo = init.albedo->with_space(ColorSpace::LinearRGB);
  } else {
    const Image sh = shade(d.normals, d.lighting);
    d.albedo = img.like(3, ColorSpace::LinearRGB);
    for (std::size_t p = 0; p < img.pixel_count(); ++p) {
      if (!mask[p]) continue;
      const double s = std::max(d.shadow.pixel(p)[0], kShadowEpsilon);
      for (int c = 0; c < 3; ++c)
        d.albedo.pixel(p)[c] = std::clamp(
            img.pixel(p)[c] / (s * std::max(sh.pixel(p)[c], 0.05)), 0.0, 1.0);
    }
  }
  return d;
}

// Albedo and lighting trade a common scale without changing the rendering;
// report the pair with mean foreground shading luminance 1.
void normalize_gauge(Decomposition& d) {
  double sum = 0.0;
  for (std::size_t p = 0; p < d.normals.pixel_count(); ++p) {
    if (!d.mask[p]) continue;
    const Eigen::Vector3d sh = d.lighting.coeffs * sh_basis_unchecked(vec3(d.normals.pixel(p)));
    sum += luminance(sh[0], sh[1], sh[2]);
  }
  const double k = sum / static_cast<double>(d.mask.count());
  if (!(k > 0.0) || !std::isfinite(k)) return;
  d.lighting = (1.0 / k) * d.lighting;
  for (double& a : d.albedo.data()) a = std::min(1.0, a * k);
}

Decomposition finalize(const Image& img, Decomposition d) {
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    auto n = d.normals.pixel(p);
    if (!d.mask[p]) {
      for (int c = 0; c < 3; ++c) d.albedo.pixel(p)[c] = 0.0;
      d.shadow.pixel(p)[0] = 1.0;
      n[0] = 0.0;
      n[1] = 0.0;
      n[2] = 1.0;
      continue;
    }
    const Eigen::Vector3d v = vec3(n).normalized();
    for (int c = 0; c < 3; ++c) n[c] = v[c];
  }
  d.residual = residual_of(img, lambertian(d));
  return d;
}

std::vector<double> camera_key(const NeighborView& nb) {
  std::vector<double> key;
  const auto& c = nb.camera;
  key.insert(key.end(), c.rotation.data(), c.rotation.data() + 9);
  key.insert(key.end(), c.translation.data(), c.translation.data() + 3);
  key.insert(key.end(), {c.intrinsics.fx, c.intrinsics.fy, c.intrinsics.cx,
                         c.intrinsics.cy});
  return key;
}

// Canonical neighbour order, independent of how the caller listed them.
std::vector<std::size_t> canonical_order(const std::vector<NeighborView>& nbs) {
  std::vector<std::size_t> idx(nbs.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto ka = camera_key(nbs[a]);
    const auto kb = camera_key(nbs[b]);
    if (ka != kb) return ka < kb;
    const auto da = nbs[a].image.data();
    const auto db = nbs[b].image.data();
    return std::lexicographical_compare(da.begin(), da.end(), db.begin(), db.end());
  });
  return idx;
}


DecomposeResult run_level(const Image& img, const Mask& mask,
                          const DecomposeInit& init, const OptimizerConfig& cfg,
                          const std::vector<NeighborView>& neighbors,
                          bool lighting_free) {
  DecomposeResult result;
  std::vector<AlbedoTarget> albedo_targets;
  std::vector<CrossRenderTarget> render_targets;
  if (!neighbors.empty()) {
    if (!init.camera || !init.camera->has_depth())
      throw Error("decompose: multi-view terms need a camera with depth");
    Decomposition shape;
    shape.mask = mask;
    shape.albedo = img.like(3, ColorSpace::LinearRGB);
    OptimizerConfig single = cfg;
    single.weights.albedo_consistency = 0.0;
    single.weights.cross_render = 0.0;
    for (std::size_t i : canonical_order(neighbors)) {
      const NeighborView& nb = neighbors[i];
      Decomposition dn;
      if (nb.decomposition) {
        dn = *nb.decomposition;
      } else {
        DecomposeInit ni;
        ni.camera = nb.camera;
        dn = decompose(nb.image, nb.mask, ni, single).decomposition;
      }
      const ViewPair views{*init.camera, nb.camera, {}};
      try {
        albedo_targets.push_back(make_albedo_target(shape, dn, views));
        render_targets.push_back(make_cross_render_target(
            shape, nb.image, dn.shadow, nb.mask, dn.lighting,
            relative_rotation(*init.camera, nb.camera), views));
        ++result.neighbors_used;
      } catch (const NoOverlapError&) {
        if (albedo_targets.size() > render_targets.size()) albedo_targets.pop_back();
      }
    }
  }

  bool estimated = false;
  const Decomposition start = initial_layers(img, mask, init, cfg, estimated);
  const Objective objective(img, mask, cfg, std::move(albedo_targets),
                            std::move(render_targets));
  Parameters x = objective.parameters_from(start);
  Parameters grad;
  LossBreakdown parts;
  double f = objective.evaluate(x, &grad, &parts);
  if (!std::isfinite(f))
    throw NumericalError("decompose: initial loss is not finite");

  AdamBlock sa{std::vector<double>(x.albedo.data().size(), 0.0),
               std::vector<double>(x.albedo.data().size(), 0.0)};
  AdamBlock sn{std::vector<double>(x.stereo.data().size(), 0.0),
               std::vector<double>(x.stereo.data().size(), 0.0)};
  AdamBlock ss{std::vector<double>(x.logit.data().size(), 0.0),
               std::vector<double>(x.logit.data().size(), 0.0)};
  AdamBlock sl{std::vector<double>(x.lighting.size(), 0.0),
               std::vector<double>(x.lighting.size(), 0.0)};
  AdamBlock na, nn, ns, nl;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  double scale = 1.0;
  int t = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const double lr =
        cfg.learning_rate * std::pow(cfg.decay, it / cfg.decay_every) * scale;
    Parameters y = x;
    const int tn = t + 1;
    if (cfg.optimize_albedo)
      adam_propose(x.albedo.data(), grad.albedo.data(), sa, na, y.albedo.data(), lr,
                   cfg.beta1, cfg.beta2, cfg.adam_epsilon, tn, 0.0, 1.0);
    if (cfg.optimize_normals)
      adam_propose(x.stereo.data(), grad.stereo.data(), sn, nn, y.stereo.data(), lr,
                   cfg.beta1, cfg.beta2, cfg.adam_epsilon, tn, -kInf, kInf);
    if (cfg.optimize_shadow)
      adam_propose(x.logit.data(), grad.logit.data(), ss, ns, y.logit.data(), lr,
                   cfg.beta1, cfg.beta2, cfg.adam_epsilon, tn, kLogitLow, kLogitHigh);
    if (cfg.optimize_lighting)
      adam_propose({x.lighting.data(), static_cast<std::size_t>(x.lighting.size())},
                   {grad.lighting.data(), static_cast<std::size_t>(grad.lighting.size())}, sl, nl,
                   span_of(y.lighting), lr, cfg.beta1, cfg.beta2,
                   cfg.adam_epsilon, tn, -kInf, kInf);

    Parameters gy;
    LossBreakdown py;
    const double fy = objective.evaluate(y, &gy, &py);
    if (!std::isfinite(fy)) {
      result.loss_trace.push_back(fy);
      throw NumericalError("decompose diverged at iteration " + std::to_string(it) +
                           "; loss trace: " + trace_tail(result.loss_trace));
    }
    if (fy <= f) {
      x = std::move(y);
      grad = std::move(gy);
      parts = py;
      f = fy;
      t = tn;
      if (cfg.optimize_albedo) std::swap(sa, na);
      if (cfg.optimize_normals) std::swap(sn, nn);
      if (cfg.optimize_shadow) std::swap(ss, ns);
      if (cfg.optimize_lighting) std::swap(sl, nl);
      scale = std::min(1.0, scale * 1.2);
      ++result.accepted_steps;
    } else {
      // Stale momentum may no longer point downhill; restart it so the next
      // proposal follows the preconditioned gradient.
      scale *= 0.5;
      for (AdamBlock* b : {&sa, &sn, &ss, &sl}) std::fill(b->m.begin(), b->m.end(), 0.0);
    }
    result.loss_trace.push_back(f);
    result.iterations = it + 1;
    if (scale < cfg.min_step_scale) {
      result.converged = true;
      break;
    }
    if (cfg.tolerance > 0.0 && it >= cfg.patience) {
      const double before = result.loss_trace[it - cfg.patience];
      if (before - f <= cfg.tolerance * std::max(std::abs(before), 1e-300)) {
        result.converged = true;
        break;
      }
    }
  }

  result.final_loss = parts;
  Decomposition d = objective.layers(x);
  if ((estimated || lighting_free) && cfg.fix_gauge && !cfg.subspace) normalize_gauge(d);
  result.decomposition = finalize(img, std::move(d));
  return result;
}

}  // namespace

DecomposeResult decompose(const Image& img, const Mask& mask,
                          const DecomposeInit& init, const OptimizerConfig& cfg,
                          const std::vector<NeighborView>& neighbors) {
  if (img.channels() != 3) throw Error("decompose: RGB image required");
  validate(img);
  require_same_size(img, mask, "decompose mask");
  if (mask.count() == 0) throw Error("decompose: empty mask");
  validate(cfg);

  const bool coarse_start = cfg.pyramid_levels > 1 && neighbors.empty() &&
                            img.width() >= 16 && img.height() >= 16;
  if (!coarse_start) return run_level(img, mask, init, cfg, neighbors, false);

  const Image normals = initial_normals(img, init);
  const MaskedImage coarse = downscale(img, mask, 2);
  DecomposeInit ci;
  ci.normals = downscale_normals(normals, mask);
  ci.lighting = init.lighting;
  if (init.albedo) ci.albedo = downscale(*init.albedo, mask, 2).image;
  if (init.shadow) ci.shadow = downscale(*init.shadow, mask, 2).image;
  OptimizerConfig cc = cfg;
  cc.pyramid_levels = cfg.pyramid_levels - 1;
  const Decomposition c = decompose(coarse.image, coarse.mask, ci, cc).decomposition;

  DecomposeInit fi;
  fi.normals = init.normals || (init.camera && init.camera->has_depth())
                   ? normals
                   : upsample2(c.normals, img.width(), img.height(), ColorSpace::Scalar);
  fi.albedo = upsample2(c.albedo, img.width(), img.height(), ColorSpace::LinearRGB);
  fi.shadow = upsample2(c.shadow, img.width(), img.height(), ColorSpace::Scalar);
  fi.lighting = c.lighting;
  return run_level(img, mask, fi, cfg, {}, !init.lighting);
}

}  // namespace relumo
