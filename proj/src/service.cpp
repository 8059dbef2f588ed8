#include "relumo/service.hpp"

#include <httplib.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "relumo/error.hpp"
#include "relumo/image_io.hpp"
#include "relumo/relight.hpp"
#include "relumo/rotation.hpp"

namespace relumo {

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Running: return "running";
    case SessionState::Ready: return "ready";
    case SessionState::Failed: return "failed";
  }
  return "?";
}

SessionStore::SessionStore(ServiceOptions options)
    : options_(std::move(options)), rng_(std::random_device{}()) {
  if (options_.storage.empty())
    options_.storage = std::filesystem::temp_directory_path() / "relumo-sessions";
  std::filesystem::create_directories(options_.storage);
}

SessionStore::~SessionStore() {
  for (auto& t : workers_)
    if (t.joinable()) t.join();
}

std::string SessionStore::next_id() {
  std::ostringstream os;
  os << std::hex << ++counter_ << "-" << rng_();
  return os.str();
}

std::string SessionStore::create(Image image, Mask mask) {
  if (image.pixel_count() > options_.max_pixels) throw Error("image too large");
  if (image.channels() != 3) throw Error("image must have 3 channels");
  require_same_size(image, mask, "session mask");
  if (mask.count() == 0) throw Error("mask has no foreground pixels");
  std::lock_guard lock(mutex_);
  const std::string id = next_id();
  SessionInfo info;
  info.id = id;
  info.directory = options_.storage / id;
  sessions_.emplace(id, info);
  workers_.emplace_back([this, id, dir = info.directory,
                         image = std::move(image), mask = std::move(mask)] {
    try {
      const DecomposeResult r = decompose(image, mask, {}, options_.config);
      nlohmann::json manifest = {{"iterations", r.iterations},
                                 {"loss_trace", r.loss_trace}};
      save_decomposition(r.decomposition, dir, manifest);
      finish(id, std::make_shared<const Decomposition>(load_decomposition(dir)), "");
    } catch (const std::exception& e) {
      finish(id, nullptr, e.what());
    }
  });
  return id;
}

std::string SessionStore::create_ready(const Decomposition& d) {
  std::lock_guard lock(mutex_);
  const std::string id = next_id();
  SessionInfo info;
  info.id = id;
  info.directory = options_.storage / id;
  save_decomposition(d, info.directory, {{"source", "preloaded"}});
  info.decomposition = std::make_shared<const Decomposition>(load_decomposition(info.directory));
  info.state = SessionState::Ready;
  sessions_.emplace(id, std::move(info));
  return id;
}

void SessionStore::finish(const std::string& id, std::shared_ptr<const Decomposition> d,
                          std::string error) {
  {
    std::lock_guard lock(mutex_);
    SessionInfo& info = sessions_.at(id);
    info.decomposition = std::move(d);
    info.error = std::move(error);
    info.state = info.decomposition ? SessionState::Ready : SessionState::Failed;
  }
  changed_.notify_all();
}

std::optional<SessionInfo> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second;
}

std::optional<SessionInfo> SessionStore::wait(const std::string& id) const {
  std::unique_lock lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  changed_.wait(lock, [&] { return it->second.state != SessionState::Running; });
  return it->second;
}

std::vector<LightingPreset> lighting_presets() {
  auto sun = [](double azimuth_deg, double elevation_deg) {
    const double az = azimuth_deg * std::numbers::pi / 180.0;
    const double el = elevation_deg * std::numbers::pi / 180.0;
    return Eigen::Vector3d(std::cos(el) * std::sin(az), std::sin(el),
                           std::cos(el) * std::cos(az));
  };
  return {
      {"overcast", directional_lighting(Eigen::Vector3d::UnitY(), {0.3, 0.3, 0.32},
                                        {0.6, 0.6, 0.62})},
      {"noon", directional_lighting(sun(0.0, 75.0), {1.0, 0.97, 0.9}, {0.25, 0.28, 0.35})},
      {"morning-left", directional_lighting(sun(-70.0, 20.0), {1.0, 0.8, 0.6},
                                            {0.2, 0.22, 0.3})},
      {"evening-right", directional_lighting(sun(70.0, 12.0), {1.0, 0.65, 0.4},
                                             {0.18, 0.18, 0.28})},
      {"backlit", directional_lighting(sun(180.0, 30.0), {0.9, 0.9, 0.85},
                                       {0.35, 0.37, 0.42})},
  };
}

namespace {

using json = nlohmann::json;

void send_error(httplib::Response& res, int status, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", message}}.dump(), "application/json");
}

void send_png(httplib::Response& res, const Bytes& png) {
  res.set_content(std::string(png.begin(), png.end()), "image/png");
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Resolves the session for a request, or answers with 404/409/500.
std::shared_ptr<const Decomposition> ready_session(const SessionStore& store,
                                                   const std::string& id,
                                                   httplib::Response& res) {
  const auto info = store.find(id);
  if (!info) {
    send_error(res, 404, "unknown session '" + id + "'");
    return nullptr;
  }
  if (info->state == SessionState::Running) {
    send_error(res, 409, "decomposition still running");
    return nullptr;
  }
  if (info->state == SessionState::Failed) {
    send_error(res, 500, "decomposition failed: " + info->error);
    return nullptr;
  }
  return info->decomposition;
}

RelightOptions options_from_json(const json& j) {
  RelightOptions o;
  o.use_residual = true;
  o.shadow_mode = ShadowMode::KeepOriginal;
  o.sky_fill = SkyFill::Original;
  o.cast_shadows = false;  // sessions carry no depth
  if (j.contains("use_residual")) o.use_residual = j.at("use_residual").get<bool>();
  if (j.contains("shadow_mode"))
    o.shadow_mode = parse_shadow_mode(j.at("shadow_mode").get<std::string>());
  if (j.contains("sky_fill")) o.sky_fill = parse_sky_fill(j.at("sky_fill").get<std::string>());
  return o;
}

Image layer_preview(const Decomposition& d, const std::string& layer) {
  if (layer == "albedo") return d.albedo;
  if (layer == "shadow") return d.shadow;
  if (layer == "original") return reconstruct(d);
  if (layer == "normals") {
    Image out = d.normals.with_space(ColorSpace::Scalar);
    for (double& v : out.data()) v = 0.5 * (v + 1.0);
    return out;
  }
  if (layer == "residual") {
    Image out = d.residual.with_space(ColorSpace::Scalar);
    for (double& v : out.data()) v = 0.5 + v;
    return out;
  }
  throw Error("unknown layer '" + layer + "'");
}

}  // namespace

Service::Service(ServiceOptions options)
    : store_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

int Service::bind_any_port(const std::string& host) {
  return server_->bind_to_any_port(host);
}

bool Service::bind(const std::string& host, int port) {
  return server_->bind_to_port(host, port);
}

bool Service::listen() { return server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

void Service::install_routes() {
  auto& srv = *server_;
  SessionStore& store = store_;

  srv.Post("/sessions", [&store](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_file("image")) return send_error(res, 400, "missing 'image' part");
    try {
      Image img = decode_image(as_bytes(req.get_file_value("image").content));
      if (img.channels() == 1) throw Error("image must be RGB");
      Mask mask = req.has_file("mask")
                      ? decode_mask(as_bytes(req.get_file_value("mask").content))
                      : full_mask(img);
      const std::string id = store.create(std::move(img), std::move(mask));
      res.status = 202;
      res.set_content(json{{"id", id}, {"status", "running"}}.dump(), "application/json");
    } catch (const std::exception& e) {
      send_error(res, 400, e.what());
    }
  });

  srv.Get(R"(/sessions/([^/]+))", [&store](const httplib::Request& req,
                                           httplib::Response& res) {
    const auto info = store.find(req.matches[1]);
    if (!info) return send_error(res, 404, "unknown session");
    json j = {{"id", info->id}, {"status", to_string(info->state)}};
    if (info->state == SessionState::Failed) j["error"] = info->error;
    res.set_content(j.dump(), "application/json");
  });

  srv.Get(R"(/sessions/([^/]+)/lighting)", [&store](const httplib::Request& req,
                                                    httplib::Response& res) {
    const auto d = ready_session(store, req.matches[1], res);
    if (!d) return;
    res.set_content(lighting_to_json(d->lighting).dump(), "application/json");
  });

  srv.Get(R"(/sessions/([^/]+)/decomposition/([^/]+))",
          [&store](const httplib::Request& req, httplib::Response& res) {
            const auto d = ready_session(store, req.matches[1], res);
            if (!d) return;
            try {
              send_png(res, encode_png(layer_preview(*d, req.matches[2]), 8));
            } catch (const Error& e) {
              send_error(res, 404, e.what());
            }
          });

  srv.Post(R"(/sessions/([^/]+)/relight)", [&store](const httplib::Request& req,
                                                    httplib::Response& res) {
    const auto d = ready_session(store, req.matches[1], res);
    if (!d) return;
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception& e) {
      return send_error(res, 400, std::string("invalid JSON: ") + e.what());
    }
    ShLighting target;
    RelightOptions options;
    try {
      if (!body.is_object() || !body.contains("sh")) throw Error("missing \"sh\" array");
      target = lighting_from_json(json{{"sh", body.at("sh")}});
      options = options_from_json(body);
    } catch (const std::exception& e) {
      return send_error(res, 422, e.what());
    }
    try {
      send_png(res, encode_png(relight(*d, target, options), 8));
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  srv.Post(R"(/sessions/([^/]+)/relight-envmap)", [&store](const httplib::Request& req,
                                                           httplib::Response& res) {
    const auto d = ready_session(store, req.matches[1], res);
    if (!d) return;
    if (!req.has_file("envmap")) return send_error(res, 400, "missing 'envmap' part");
    EnvMap env;
    RelightOptions options;
    try {
      env.radiance = decode_image(as_bytes(req.get_file_value("envmap").content));
      if (req.has_file("align"))
        env.alignment = rotation_from_json(json::parse(req.get_file_value("align").content));
      options = options_from_json(
          req.has_file("options") ? json::parse(req.get_file_value("options").content)
                                  : json::object());
      validate(env);
    } catch (const std::exception& e) {
      return send_error(res, 422, e.what());
    }
    try {
      send_png(res, encode_png(relight(*d, fit_envmap_lighting_aligned(env), options), 8));
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });

  srv.Get("/presets", [](const httplib::Request&, httplib::Response& res) {
    json list = json::array();
    for (const auto& p : lighting_presets()) {
      json j = lighting_to_json(p.lighting);
      j["name"] = p.name;
      list.push_back(j);
    }
    res.set_content(json{{"presets", list}}.dump(), "application/json");
  });
}

}  // namespace relumo
