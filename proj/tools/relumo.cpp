// relumo: decompose, relight, fit-envmap, cross-project, evaluate, serve.
#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>

#include "relumo/camera.hpp"
#include "relumo/decompose.hpp"
#include "relumo/envmap.hpp"
#include "relumo/error.hpp"
#include "relumo/evaluate.hpp"
#include "relumo/image_io.hpp"
#include "relumo/parallel.hpp"
#include "relumo/relight.hpp"
#include "relumo/service.hpp"

namespace fs = std::filesystem;
using namespace relumo;

namespace {

struct DecomposeArgs {
  fs::path image, mask, cameras, out;
  int view = -1;
  std::vector<int> neighbors;
  int iters = 2000;
  double lr = 1e-2;
  double lambda_albedo = -1.0;
  double lambda_shadow = -1.0;
  std::uint64_t seed = 0;
};

struct RelightArgs {
  fs::path decomp, sh, envmap, align, cameras, out;
  int view = -1;
  std::string shadow = "keep_original";
  std::string sky = "flat_color";
  bool use_residual = false;
};

struct EnvmapArgs {
  fs::path envmap, align, out;
  int samples = 2000;
};

struct CrossArgs {
  fs::path src, cameras, out, mask_out;
  int from = 0, to = 1;
  double tolerance = 0.01;
};

struct EvalArgs {
  fs::path scene, outputs, out;
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  fs::path storage;
  int iters = 500;
};

nlohmann::json config_json(const OptimizerConfig& c) {
  return {{"iterations", c.iterations},
          {"learning_rate", c.learning_rate},
          {"decay", c.decay},
          {"decay_every", c.decay_every},
          {"weights",
           {{"appearance", c.weights.appearance},
            {"albedo_consistency", c.weights.albedo_consistency},
            {"cross_render", c.weights.cross_render},
            {"albedo_smoothness", c.weights.albedo_smoothness},
            {"shadow_prior", c.weights.shadow_prior}}},
          {"seed", c.seed}};
}

int run_decompose(const DecomposeArgs& a) {
  const Image img = load_image(a.image);
  const Mask mask = load_mask(a.mask);
  DecomposeInit init;
  std::vector<NeighborView> neighbors;
  OptimizerConfig cfg = a.neighbors.empty() ? single_view_config() : OptimizerConfig{};
  if (!a.cameras.empty()) {
    const auto records = load_camera_records(a.cameras);
    auto record = [&](int k) -> const CameraRecord& {
      if (k < 0 || k >= static_cast<int>(records.size()))
        throw Error("view index " + std::to_string(k) + " out of range");
      return records[k];
    };
    if (a.view >= 0) init.camera = load_camera(record(a.view));
    for (int k : a.neighbors) {
      const CameraRecord& r = record(k);
      NeighborView nb;
      nb.image = load_image(r.image);
      nb.mask = r.mask.empty() ? full_mask(nb.image) : load_mask(r.mask);
      nb.camera = load_camera(r);
      neighbors.push_back(std::move(nb));
    }
  } else if (!a.neighbors.empty() || a.view >= 0) {
    throw Error("--view and --neighbors need --cameras");
  }
  cfg.iterations = a.iters;
  cfg.learning_rate = a.lr;
  cfg.seed = a.seed;
  if (a.lambda_albedo >= 0.0) cfg.weights.albedo_smoothness = a.lambda_albedo;
  if (a.lambda_shadow >= 0.0) cfg.weights.shadow_prior = a.lambda_shadow;

  const DecomposeResult r = decompose(img, mask, init, cfg, neighbors);
  nlohmann::json manifest = {
      {"image", a.image.filename().string()},
      {"config", config_json(cfg)},
      {"iterations", r.iterations},
      {"accepted_steps", r.accepted_steps},
      {"converged", r.converged},
      {"neighbors_used", r.neighbors_used},
      {"final_loss",
       {{"total", r.final_loss.total},
        {"appearance", r.final_loss.appearance},
        {"albedo_smoothness", r.final_loss.albedo_smoothness},
        {"shadow_prior", r.final_loss.shadow_prior},
        {"albedo_consistency", r.final_loss.albedo_consistency},
        {"cross_render", r.final_loss.cross_render}}},
      {"loss_trace", r.loss_trace}};
  save_decomposition(r.decomposition, a.out, manifest);
  std::cout << "decomposed " << a.image.string() << ": " << r.iterations
            << " iterations, final loss " << r.final_loss.total << "\n";
  return 0;
}

int run_relight(const RelightArgs& a) {
  if (a.sh.empty() == a.envmap.empty()) throw Error("give exactly one of --sh and --envmap");
  const Decomposition d = load_decomposition(a.decomp);
  RelightOptions options;
  options.use_residual = a.use_residual;
  options.shadow_mode = parse_shadow_mode(a.shadow);
  options.sky_fill = parse_sky_fill(a.sky);
  ShLighting target;
  if (!a.sh.empty()) {
    target = load_lighting(a.sh);
  } else {
    EnvMap env{load_image(a.envmap), Eigen::Matrix3d::Identity()};
    if (!a.align.empty()) env.alignment = load_rotation(a.align);
    target = fit_envmap_lighting_aligned(env);
  }
  std::optional<CameraView> cam;
  if (!a.cameras.empty()) {
    const auto records = load_camera_records(a.cameras);
    if (a.view < 0 || a.view >= static_cast<int>(records.size()))
      throw Error("--view must index a view of --cameras");
    cam = load_camera(records[a.view]);
  }
  if (options.shadow_mode == ShadowMode::Geometric && !cam) options.cast_shadows = false;
  save_image(relight(d, target, options, cam ? &*cam : nullptr), a.out);
  return 0;
}

int run_fit_envmap(const EnvmapArgs& a) {
  EnvMap env{load_image(a.envmap), Eigen::Matrix3d::Identity()};
  if (!a.align.empty()) env.alignment = load_rotation(a.align);
  save_lighting(fit_envmap_lighting_aligned(env, a.samples), a.out);
  return 0;
}

int run_cross_project(const CrossArgs& a) {
  const auto records = load_camera_records(a.cameras);
  const int n = static_cast<int>(records.size());
  if (a.from < 0 || a.from >= n || a.to < 0 || a.to >= n)
    throw Error("--from/--to must index views of --cameras");
  const Image src = load_image(a.src.empty() ? records[a.from].image : a.src);
  CrossProjectOptions opts;
  opts.depth_tolerance = a.tolerance;
  const Projection p =
      cross_project(src, load_camera(records[a.from]), load_camera(records[a.to]), opts);
  save_image(p.image, a.out);
  if (!a.mask_out.empty()) save_mask(p.mask, a.mask_out);
  return 0;
}

int run_evaluate(const EvalArgs& a) {
  const EvalTable t = evaluate_cross_relighting(a.scene, a.outputs);
  const std::string csv = to_csv(t);
  if (a.out.empty()) {
    std::cout << csv;
  } else {
    std::ofstream out(a.out);
    if (!out) throw IoError("cannot write '" + a.out.string() + "'");
    out << csv;
  }
  for (const auto& m : t.missing) std::cerr << "missing output: " << m << "\n";
  return 0;
}

Service* g_service = nullptr;

int run_serve(const ServeArgs& a) {
  ServiceOptions opts;
  opts.storage = a.storage;
  opts.config.iterations = a.iters;
  Service service(opts);
  if (!service.bind(a.host, a.port))
    throw Error("cannot bind " + a.host + ":" + std::to_string(a.port));
  g_service = &service;
  std::signal(SIGINT, [](int) {
    if (g_service) g_service->stop();
  });
  std::cout << "listening on http://" << a.host << ":" << a.port << std::endl;
  service.listen();
  g_service = nullptr;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  configure_threads_from_env();
  CLI::App app{"relumo: intrinsic decomposition and relighting of outdoor photographs"};
  app.require_subcommand(1);

  DecomposeArgs da;
  auto* dc = app.add_subcommand("decompose", "Decompose an image into intrinsic layers");
  dc->add_option("--image", da.image, "Input photograph (PNG/PFM/HDR)")->required()->check(CLI::ExistingFile);
  dc->add_option("--mask", da.mask, "Foreground (non-sky) mask PNG")->required()->check(CLI::ExistingFile);
  dc->add_option("--cameras", da.cameras, "cameras.json of the scene")->check(CLI::ExistingFile);
  dc->add_option("--view", da.view, "Index of this image in --cameras");
  dc->add_option("--neighbors", da.neighbors, "Indices of overlapping views in --cameras");
  dc->add_option("--out", da.out, "Output directory")->required();
  dc->add_option("--iters", da.iters, "Optimiser iterations")->check(CLI::NonNegativeNumber);
  dc->add_option("--lr", da.lr, "Initial step size")->check(CLI::PositiveNumber);
  dc->add_option("--lambda-albedo", da.lambda_albedo, "Albedo smoothness weight")->check(CLI::NonNegativeNumber);
  dc->add_option("--lambda-shadow", da.lambda_shadow, "Shadow prior weight")->check(CLI::NonNegativeNumber);
  dc->add_option("--seed", da.seed, "Recorded seed (the optimiser is deterministic)");

  RelightArgs ra;
  auto* rl = app.add_subcommand("relight", "Relight a decomposition");
  rl->add_option("--decomp", ra.decomp, "Decomposition directory")->required()->check(CLI::ExistingDirectory);
  rl->add_option("--sh", ra.sh, "Target lighting.json")->check(CLI::ExistingFile);
  rl->add_option("--envmap", ra.envmap, "Target environment map (HDR/PFM)")->check(CLI::ExistingFile);
  rl->add_option("--align", ra.align, "Env-map alignment rotation JSON")->check(CLI::ExistingFile);
  rl->add_option("--shadow", ra.shadow, "none | geometric | keep_original");
  rl->add_option("--sky", ra.sky, "black | original | flat_color");
  rl->add_flag("--use-residual", ra.use_residual, "Add the residual map");
  rl->add_option("--cameras", ra.cameras, "cameras.json (depth for cast shadows)")->check(CLI::ExistingFile);
  rl->add_option("--view", ra.view, "Index of the decomposed view in --cameras");
  rl->add_option("--out", ra.out, "Output image (.png/.pfm/.hdr)")->required();

  EnvmapArgs ea;
  auto* fe = app.add_subcommand("fit-envmap", "Fit SH lighting to an environment map");
  fe->add_option("--envmap", ea.envmap, "Equirectangular map (HDR/PFM/PNG)")->required()->check(CLI::ExistingFile);
  fe->add_option("--align", ea.align, "Alignment rotation JSON")->check(CLI::ExistingFile);
  fe->add_option("--samples", ea.samples, "Fit normals (>= 1000)");
  fe->add_option("--out", ea.out, "Output lighting.json")->required();

  CrossArgs ca;
  auto* cp = app.add_subcommand("cross-project", "Warp one view into another");
  cp->add_option("--cameras", ca.cameras, "cameras.json")->required()->check(CLI::ExistingFile);
  cp->add_option("--from", ca.from, "Source view index")->required();
  cp->add_option("--to", ca.to, "Destination view index")->required();
  cp->add_option("--src", ca.src, "Image to warp (default: the source view photo)")->check(CLI::ExistingFile);
  cp->add_option("--tolerance", ca.tolerance, "Relative depth tolerance");
  cp->add_option("--out", ca.out, "Output image")->required();
  cp->add_option("--mask-out", ca.mask_out, "Validity mask PNG");

  EvalArgs va;
  auto* ev = app.add_subcommand("evaluate", "Score relit outputs against cross-projected ground truth");
  ev->add_option("--scene", va.scene, "cameras.json with per-view condition")->required()->check(CLI::ExistingFile);
  ev->add_option("--outputs", va.outputs, "Directory of <stem>_to_<k> outputs")->required()->check(CLI::ExistingDirectory);
  ev->add_option("--out", va.out, "CSV path (default stdout)");

  ServeArgs sa;
  auto* sv = app.add_subcommand("serve", "Run the HTTP service");
  sv->add_option("--host", sa.host, "Bind address");
  sv->add_option("--port", sa.port, "Port");
  sv->add_option("--storage", sa.storage, "Session directory");
  sv->add_option("--iters", sa.iters, "Decomposition iterations per session");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*dc) return run_decompose(da);
    if (*rl) return run_relight(ra);
    if (*fe) return run_fit_envmap(ea);
    if (*cp) return run_cross_project(ca);
    if (*ev) return run_evaluate(va);
    if (*sv) return run_serve(sa);
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
