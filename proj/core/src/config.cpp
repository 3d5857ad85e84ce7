#include "bem/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "bem/error.hpp"

namespace bem {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Reads optional keys from one JSON object and rejects any key nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j_.is_object(), ErrorKind::invalid_config, where_ + " must be a JSON object");
  }

  ~ObjectReader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items())
      require(used_.count(key) > 0, ErrorKind::invalid_config,
              "unknown key '" + key + "' in " + where_);
  }

  template <typename T>
  void get(const char* key, T& out) {
    used_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::invalid_config, where_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    used_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const char* key) const { return where_ + "." + key; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::invalid_config, std::string("config is not valid JSON: ") + e.what());
  }
}

BetaParams beta_from(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number(),
          ErrorKind::invalid_config, where + " must be [a, b]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Box box_from(const json& j, const std::string& where) {
  require(j.is_array() && j.size() == 4, ErrorKind::invalid_config, where + " must be [x1,y1,x2,y2]");
  for (const json& v : j) require(v.is_number(), ErrorKind::invalid_config, where + " must hold numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

CountSchedule::Kind schedule_kind(const std::string& s) {
  if (s == "constant") return CountSchedule::Kind::constant;
  if (s == "ramp") return CountSchedule::Kind::ramp;
  if (s == "sinusoid") return CountSchedule::Kind::sinusoid;
  fail(ErrorKind::invalid_config, "unknown schedule kind '" + s + "'");
}

std::string schedule_name(CountSchedule::Kind k) {
  switch (k) {
    case CountSchedule::Kind::constant: return "constant";
    case CountSchedule::Kind::ramp: return "ramp";
    case CountSchedule::Kind::sinusoid: return "sinusoid";
  }
  return "constant";
}

}  // namespace

PipelineConfig pipeline_config_from_json(const std::string& text) {
  const json doc = parse_document(text);
  PipelineConfig cfg;
  {
    ObjectReader r(doc, "pipeline");
    r.get("window", cfg.window);
    r.get("memory", cfg.memory);
    r.get("mask_threshold", cfg.mask_threshold);
    r.get("mask_dilation", cfg.mask_dilation);
    r.get("memory_enabled", cfg.memory_enabled);
    r.get("similarity_bins", cfg.similarity_bins);
    std::string extractor = cfg.extractor.to_string();
    r.get("extractor", extractor);
    cfg.extractor = ExtractorSpec::parse(extractor);
    if (const json* j = r.child("rescore")) {
      ObjectReader s(*j, r.path("rescore"));
      s.get("alpha", cfg.rescore.alpha);
      s.get("gamma", cfg.rescore.gamma);
      s.get("delta", cfg.rescore.delta);
      std::string mode = to_string(cfg.rescore.rank_mode);
      s.get("rank_mode", mode);
      cfg.rescore.rank_mode = parse_rank_mode(mode);
    }
    if (const json* j = r.child("calibration")) {
      ObjectReader s(*j, r.path("calibration"));
      std::string mode = to_string(cfg.calibration.mode);
      s.get("mode", mode);
      cfg.calibration.mode = parse_calibration_mode(mode);
      s.get("clip_epsilon", cfg.calibration.clip_epsilon);
      s.get("temperature", cfg.calibration.temperature);
    }
    if (const json* j = r.child("quality")) {
      ObjectReader s(*j, r.path("quality"));
      s.get("ghost_threshold", cfg.quality.ghost_threshold);
      s.get("mae_weight", cfg.quality.mae_weight);
      s.get("ghost_weight", cfg.quality.ghost_weight);
    }
    if (const json* j = r.child("pauc")) {
      ObjectReader s(*j, r.path("pauc"));
      std::string grid = "uniform";
      s.get("grid", grid);
      require(grid == "uniform" || grid == "score-quantile", ErrorKind::invalid_config,
              "pauc.grid must be uniform or score-quantile");
      cfg.pauc.grid = grid == "uniform" ? PAucConfig::Grid::uniform : PAucConfig::Grid::score_quantile;
      s.get("points", cfg.pauc.points);
      s.get("empty_precision", cfg.pauc.empty_precision);
    }
    if (const json* j = r.child("paths")) {
      ObjectReader s(*j, r.path("paths"));
      s.get("frames", cfg.frames_dir);
      s.get("detections", cfg.detections_path);
      s.get("ground_truth", cfg.ground_truth_path);
      s.get("output", cfg.output_dir);
    }
  }
  return cfg;
}

std::string to_json(const PipelineConfig& cfg, int indent) {
  ordered_json j;
  j["window"] = cfg.window;
  j["memory"] = cfg.memory_capacity();
  j["mask_threshold"] = cfg.mask_threshold;
  j["mask_dilation"] = cfg.mask_dilation;
  j["memory_enabled"] = cfg.memory_enabled;
  j["similarity_bins"] = cfg.similarity_bins;
  j["extractor"] = cfg.extractor.to_string();
  j["rescore"] = {{"alpha", cfg.rescore.alpha},
                  {"gamma", cfg.rescore.gamma},
                  {"delta", cfg.rescore.delta},
                  {"rank_mode", to_string(cfg.rescore.rank_mode)}};
  j["calibration"] = {{"mode", to_string(cfg.calibration.mode)},
                      {"clip_epsilon", cfg.calibration.clip_epsilon},
                      {"temperature", cfg.calibration.temperature}};
  j["quality"] = {{"ghost_threshold", cfg.quality.ghost_threshold},
                  {"mae_weight", cfg.quality.mae_weight},
                  {"ghost_weight", cfg.quality.ghost_weight}};
  j["pauc"] = {{"grid", cfg.pauc.grid == PAucConfig::Grid::uniform ? "uniform" : "score-quantile"},
               {"points", cfg.pauc.points},
               {"empty_precision", cfg.pauc.empty_precision}};
  j["paths"] = {{"frames", cfg.frames_dir},
                {"detections", cfg.detections_path},
                {"ground_truth", cfg.ground_truth_path},
                {"output", cfg.output_dir}};
  return j.dump(indent);
}

SimulationConfig simulation_config_from_json(const std::string& text) {
  const json doc = parse_document(text);
  SimulationConfig cfg;
  ObjectReader top(doc, "simulation");
  if (const json* j = top.child("scene")) {
    SceneConfig& s = cfg.scene;
    ObjectReader r(*j, "scene");
    r.get("seed", s.seed);
    r.get("width", s.width);
    r.get("height", s.height);
    r.get("channels", s.channels);
    r.get("frame_count", s.frame_count);
    std::string bg = to_string(s.background);
    r.get("background", bg);
    require(bg == "gradient" || bg == "tiled-noise", ErrorKind::invalid_config,
            "scene.background must be gradient or tiled-noise");
    s.background = bg == "gradient" ? BackgroundKind::gradient : BackgroundKind::tiled_noise;
    r.get("background_low", s.background_low);
    r.get("background_high", s.background_high);
    r.get("tile_size", s.tile_size);
    r.get("object_min_size", s.object_min_size);
    r.get("object_max_size", s.object_max_size);
    r.get("object_speed", s.object_speed);
    r.get("noise_sigma", s.noise_sigma);
    r.get("contrast_margin", s.contrast_margin);
    if (const json* sj = r.child("schedule")) {
      ObjectReader q(*sj, "scene.schedule");
      std::string kind = schedule_name(s.schedule.kind);
      q.get("kind", kind);
      s.schedule.kind = schedule_kind(kind);
      q.get("count", s.schedule.count);
      q.get("from", s.schedule.ramp_from);
      q.get("to", s.schedule.ramp_to);
      q.get("mean", s.schedule.mean);
      q.get("amplitude", s.schedule.amplitude);
      q.get("period", s.schedule.period);
    }
    if (const json* pj = r.child("patches")) {
      require(pj->is_array(), ErrorKind::invalid_config, "scene.patches must be an array");
      for (const json& item : *pj) {
        ObjectReader q(item, "scene.patches[]");
        PeriodicPatch p;
        if (const json* b = q.child("box")) p.box = box_from(*b, "scene.patches[].box");
        q.get("intensity", p.intensity);
        q.get("period", p.period);
        q.get("phase", p.phase);
        q.get("duration", p.duration);
        s.patches.push_back(p);
      }
    }
  }
  if (const json* j = top.child("detector")) {
    SynthDetectorConfig& d = cfg.detector;
    ObjectReader r(*j, "detector");
    r.get("seed", d.seed);
    r.get("tp_recall", d.tp_recall);
    if (const json* b = r.child("tp_score")) d.tp_score = beta_from(*b, "detector.tp_score");
    if (const json* b = r.child("fp_score")) d.fp_score = beta_from(*b, "detector.fp_score");
    r.get("fp_rate_per_frame", d.fp_rate_per_frame);
    r.get("fp_rate_per_object", d.fp_rate_per_object);
    r.get("fp_density_exponent", d.fp_density_exponent);
    std::string placement = to_string(d.fp_placement);
    r.get("fp_placement", placement);
    require(placement == "background-only" || placement == "uniform", ErrorKind::invalid_config,
            "detector.fp_placement must be background-only or uniform");
    d.fp_placement = placement == "uniform" ? FpPlacement::uniform : FpPlacement::background_only;
    r.get("box_jitter_sigma", d.box_jitter_sigma);
    r.get("fp_min_size", d.fp_min_size);
    r.get("fp_max_size", d.fp_max_size);
  }
  return cfg;
}

std::string to_json(const SimulationConfig& cfg, int indent) {
  const SceneConfig& s = cfg.scene;
  const SynthDetectorConfig& d = cfg.detector;
  ordered_json scene;
  scene["seed"] = s.seed;
  scene["width"] = s.width;
  scene["height"] = s.height;
  scene["channels"] = s.channels;
  scene["frame_count"] = s.frame_count;
  scene["background"] = to_string(s.background);
  scene["background_low"] = s.background_low;
  scene["background_high"] = s.background_high;
  scene["tile_size"] = s.tile_size;
  scene["schedule"] = {{"kind", schedule_name(s.schedule.kind)},
                       {"count", s.schedule.count},
                       {"from", s.schedule.ramp_from},
                       {"to", s.schedule.ramp_to},
                       {"mean", s.schedule.mean},
                       {"amplitude", s.schedule.amplitude},
                       {"period", s.schedule.period}};
  scene["object_min_size"] = s.object_min_size;
  scene["object_max_size"] = s.object_max_size;
  scene["object_speed"] = s.object_speed;
  scene["noise_sigma"] = s.noise_sigma;
  scene["contrast_margin"] = s.contrast_margin;
  ordered_json patches = ordered_json::array();
  for (const PeriodicPatch& p : s.patches)
    patches.push_back({{"box", {p.box.x1, p.box.y1, p.box.x2, p.box.y2}},
                       {"intensity", p.intensity},
                       {"period", p.period},
                       {"phase", p.phase},
                       {"duration", p.duration}});
  scene["patches"] = std::move(patches);

  ordered_json det;
  det["seed"] = d.seed;
  det["tp_recall"] = d.tp_recall;
  det["tp_score"] = {d.tp_score.a, d.tp_score.b};
  det["fp_score"] = {d.fp_score.a, d.fp_score.b};
  det["fp_rate_per_frame"] = d.fp_rate_per_frame;
  det["fp_rate_per_object"] = d.fp_rate_per_object;
  det["fp_density_exponent"] = d.fp_density_exponent;
  det["fp_placement"] = to_string(d.fp_placement);
  det["box_jitter_sigma"] = d.box_jitter_sigma;
  det["fp_min_size"] = d.fp_min_size;
  det["fp_max_size"] = d.fp_max_size;

  ordered_json j;
  j["scene"] = std::move(scene);
  j["detector"] = std::move(det);
  return j.dump(indent);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::data, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::data, "cannot write " + path);
  out << text;
  require(static_cast<bool>(out), ErrorKind::data, "short write to " + path);
}

}  // namespace bem
