#include "gentle/config.hpp"

#include <functional>
#include <set>
#include <sstream>

#include "gentle/errors.hpp"

namespace gentle {

using nlohmann::json;

const char* to_string(Backbone b) {
  switch (b) {
    case Backbone::dense: return "dense";
    case Backbone::residual: return "residual";
    case Backbone::plain: return "plain";
  }
  return "dense";
}

Backbone backbone_from_string(const std::string& s) {
  if (s == "dense") return Backbone::dense;
  if (s == "residual") return Backbone::residual;
  if (s == "plain") return Backbone::plain;
  throw ConfigError("model.backbone", "unknown backbone '" + s + "'");
}

std::string to_string(const Modalities& m) {
  std::string out;
  auto add = [&](const char* name) {
    if (!out.empty()) out += ',';
    out += name;
  };
  if (m.vision) add("vision");
  if (m.touch) add("touch");
  if (m.action) add("action");
  return out;
}

Modalities modalities_from_string(const std::string& s) {
  if (s == "full") return {true, true, true};
  if (s == "no_action" || s == "vision_touch") return {true, true, false};
  if (s == "vision_action") return {true, false, true};
  if (s == "action") return {false, false, true};
  if (s == "vision") return {true, false, false};
  Modalities m{false, false, false};
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item == "vision") m.vision = true;
    else if (item == "touch") m.touch = true;
    else if (item == "action") m.action = true;
    else throw ConfigError("model.modalities", "unknown modality '" + item + "'");
  }
  if (!m.any()) throw ConfigError("model.modalities", "at least one modality must be enabled");
  return m;
}

namespace {

// Walks one JSON object, rejecting keys nobody asked for.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key), "expected a number");
      out = v->get<double>();
    }
  }

  void angle_deg(const std::string& key, double& out_rad) {
    double deg = rad_to_deg(out_rad);
    number(key, deg);
    out_rad = deg_to_rad(deg);
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key), "expected an integer");
      out = v->get<Int>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected a boolean");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key), "expected a string");
      out = v->get<std::string>();
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) out = number_list(*v, field(key));
  }

  void integers(const std::string& key, std::vector<int>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key), "expected an array of integers");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(field(key), "expected an array of integers");
        out.push_back(e.get<int>());
      }
    }
  }

  void range(const std::string& key, Range& out, double scale = 1.0) {
    if (const json* v = find(key)) {
      auto xs = number_list(*v, field(key));
      if (xs.size() != 2) throw ConfigError(field(key), "expected [lo, hi]");
      out = {xs[0] * scale, xs[1] * scale};
    }
  }

  void pose(const std::string& key, ActivePose& out) {
    if (const json* v = find(key)) {
      Reader r(*v, field(key));
      r.numbers("thumb", out.thumb);
      r.numbers("middle", out.middle);
      r.finish();
    }
  }

  void section(const std::string& key, const std::function<void(Reader&)>& fn) {
    if (const json* v = find(key)) {
      Reader r(*v, field(key));
      fn(r);
      r.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError(field(it.key()), "unknown field");
    }
  }

 private:
  static std::vector<double> number_list(const json& v, const std::string& path) {
    if (!v.is_array()) throw ConfigError(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path, "expected an array of numbers");
      out.push_back(e.get<double>());
    }
    return out;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json range_json(const Range& r, double scale = 1.0) { return json::array({r.lo * scale, r.hi * scale}); }

json pose_json(const ActivePose& p) { return {{"thumb", p.thumb}, {"middle", p.middle}}; }

void read_hand(Reader& r, HandConfig& h) {
  r.section("link_lengths_mm", [&](Reader& s) {
    s.numbers("thumb", h.thumb_links_mm);
    s.numbers("middle", h.middle_links_mm);
  });
  r.number("base_separation_mm", h.base_separation_mm);
  r.number("palm_offset_mm", h.palm_offset_mm);
  r.section("active_joints", [&](Reader& s) {
    s.integers("thumb", h.thumb_joints);
    s.integers("middle", h.middle_joints);
  });
  r.range("joint_limits_rad", h.joint_limits_rad);
  r.number("inactive_joint_rad", h.inactive_joint_rad);
}

json hand_json(const HandConfig& h) {
  return {
      {"link_lengths_mm", {{"thumb", h.thumb_links_mm}, {"middle", h.middle_links_mm}}},
      {"base_separation_mm", h.base_separation_mm},
      {"palm_offset_mm", h.palm_offset_mm},
      {"active_joints", {{"thumb", h.thumb_joints}, {"middle", h.middle_joints}}},
      {"joint_limits_rad", range_json(h.joint_limits_rad)},
      {"inactive_joint_rad", h.inactive_joint_rad},
  };
}

void read_world(Reader& r, WorldConfig& w) {
  r.range("x_range_mm", w.x_range_mm);
  r.range("y_range_mm", w.y_range_mm);
  r.number("object_radius_mm", w.object_radius_mm);
  r.number("upright_height_mm", w.upright_height_mm);
  r.number("lying_semi_major_mm", w.lying_semi_major_mm);
  r.number("lying_semi_minor_mm", w.lying_semi_minor_mm);
  r.number("lying_height_mm", w.lying_height_mm);
  r.number("lying_probability", w.lying_probability);
  r.number("stiffness_n_per_mm", w.stiffness_n_per_mm);
  r.number("compliance", w.compliance);
  r.number("sound_force_threshold_n", w.sound_force_threshold_n);
  r.number("min_lift_force_n", w.min_lift_force_n);
  r.number("max_center_offset_mm", w.max_center_offset_mm);
  r.number("collision_force_n", w.collision_force_n);
  r.number("collision_clearance_mm", w.collision_clearance_mm);
  r.number("wrist_compliance_mm", w.wrist_compliance_mm);
  r.number("actuator_noise_per_rad", w.actuator_noise_per_rad);
  r.number("actuator_travel_threshold_rad", w.actuator_travel_threshold_rad);
  r.number("detection_noise_mm", w.detection_noise_mm);
  r.number("lying_detection_bias_x_mm", w.lying_detection_bias_x_mm);
  r.number("lying_detection_bias_y_mm", w.lying_detection_bias_y_mm);
  r.number("initial_perturbation_mm", w.initial_perturbation_mm);
  r.range("initial_z_mm", w.initial_z_mm);
  r.range("initial_yaw_deg", w.initial_yaw_rad, deg_to_rad(1.0));
  r.number("min_hand_z_mm", w.min_hand_z_mm);
  r.number("height_clearance_mm", w.height_clearance_mm);
  r.number("max_translation_mm", w.max_translation_mm);
  r.angle_deg("max_rotation_deg", w.max_rotation_rad);
  r.number("joint_span_rad", w.joint_span_rad);
  r.pose("joint_min_pose_rad", w.joint_min_pose);
  r.pose("open_pose_rad", w.open_pose);
  r.pose("initial_pose_rad", w.initial_pose);
}

json world_json(const WorldConfig& w) {
  return {
      {"x_range_mm", range_json(w.x_range_mm)},
      {"y_range_mm", range_json(w.y_range_mm)},
      {"object_radius_mm", w.object_radius_mm},
      {"upright_height_mm", w.upright_height_mm},
      {"lying_semi_major_mm", w.lying_semi_major_mm},
      {"lying_semi_minor_mm", w.lying_semi_minor_mm},
      {"lying_height_mm", w.lying_height_mm},
      {"lying_probability", w.lying_probability},
      {"stiffness_n_per_mm", w.stiffness_n_per_mm},
      {"compliance", w.compliance},
      {"sound_force_threshold_n", w.sound_force_threshold_n},
      {"min_lift_force_n", w.min_lift_force_n},
      {"max_center_offset_mm", w.max_center_offset_mm},
      {"collision_force_n", w.collision_force_n},
      {"collision_clearance_mm", w.collision_clearance_mm},
      {"wrist_compliance_mm", w.wrist_compliance_mm},
      {"actuator_noise_per_rad", w.actuator_noise_per_rad},
      {"actuator_travel_threshold_rad", w.actuator_travel_threshold_rad},
      {"detection_noise_mm", w.detection_noise_mm},
      {"lying_detection_bias_x_mm", w.lying_detection_bias_x_mm},
      {"lying_detection_bias_y_mm", w.lying_detection_bias_y_mm},
      {"initial_perturbation_mm", w.initial_perturbation_mm},
      {"initial_z_mm", range_json(w.initial_z_mm)},
      {"initial_yaw_deg", range_json(w.initial_yaw_rad, rad_to_deg(1.0))},
      {"min_hand_z_mm", w.min_hand_z_mm},
      {"height_clearance_mm", w.height_clearance_mm},
      {"max_translation_mm", w.max_translation_mm},
      {"max_rotation_deg", rad_to_deg(w.max_rotation_rad)},
      {"joint_span_rad", w.joint_span_rad},
      {"joint_min_pose_rad", pose_json(w.joint_min_pose)},
      {"open_pose_rad", pose_json(w.open_pose)},
      {"initial_pose_rad", pose_json(w.initial_pose)},
  };
}

void read_sensing(Reader& r, SensingConfig& s) {
  r.integer("render_size", s.render_size);
  r.integer("crop_size", s.crop_size);
  r.integer("channels", s.channels);
  r.number("noise_sigma", s.noise_sigma);
  r.number("noise_truncation", s.noise_truncation);
  r.number("tactile_px_per_mm", s.tactile_px_per_mm);
  r.number("force_saturation_n", s.force_saturation_n);
  r.number("blob_sigma_px", s.blob_sigma_px);
  r.number("blob_sigma_px_per_mm", s.blob_sigma_px_per_mm);
  r.number("visual_background", s.visual_background);
  r.number("visual_finger_intensity", s.visual_finger_intensity);
  r.number("finger_width_mm", s.finger_width_mm);
  r.integer("supersample", s.supersample);
}

json sensing_json(const SensingConfig& s) {
  return {
      {"render_size", s.render_size},
      {"crop_size", s.crop_size},
      {"channels", s.channels},
      {"noise_sigma", s.noise_sigma},
      {"noise_truncation", s.noise_truncation},
      {"tactile_px_per_mm", s.tactile_px_per_mm},
      {"force_saturation_n", s.force_saturation_n},
      {"blob_sigma_px", s.blob_sigma_px},
      {"blob_sigma_px_per_mm", s.blob_sigma_px_per_mm},
      {"visual_background", s.visual_background},
      {"visual_finger_intensity", s.visual_finger_intensity},
      {"finger_width_mm", s.finger_width_mm},
      {"supersample", s.supersample},
  };
}

void read_labeling(Reader& r, LabelConfig& l) {
  r.number("sound_threshold", l.sound_threshold);
  r.number("logistic_l2", l.logistic_l2);
  r.integer("supervised_episodes", l.supervised_episodes);
  r.integer("refit_every", l.refit_every);
  r.string("stability_source", l.stability_source);
}

json labeling_json(const LabelConfig& l) {
  return {
      {"sound_threshold", l.sound_threshold},
      {"logistic_l2", l.logistic_l2},
      {"supervised_episodes", l.supervised_episodes},
      {"refit_every", l.refit_every},
      {"stability_source", l.stability_source},
  };
}

void read_model(Reader& r, ModelConfig& m) {
  if (const json* v = r.find("modalities")) {
    if (!v->is_string()) throw ConfigError(r.field("modalities"), "expected a string");
    m.modalities = modalities_from_string(v->get<std::string>());
  }
  if (const json* v = r.find("backbone")) {
    if (!v->is_string()) throw ConfigError(r.field("backbone"), "expected a string");
    m.backbone = backbone_from_string(v->get<std::string>());
  }
  r.integers("conv_channels", m.conv_channels);
  r.integer("image_feature_size", m.image_feature_size);
  r.integer("action_hidden", m.action_hidden);
  r.integer("fusion_hidden", m.fusion_hidden);
  r.number("dropout", m.dropout);
  r.number("threshold", m.threshold);
  r.integer("input_size", m.input_size);
  r.integer("channels", m.channels);
  r.boolean("zero_init_head", m.zero_init_head);
}

void read_train(Reader& r, TrainConfig& t) {
  r.integer("batch_size", t.batch_size);
  r.integer("epochs", t.epochs);
  r.number("learning_rate", t.learning_rate);
  r.number("decay", t.decay);
  r.number("momentum", t.momentum);
  r.number("weight_decay", t.weight_decay);
  r.integer("seed", t.seed);
}

void read_optimizer(Reader& r, OptimizerConfig& o) {
  r.number("t_gentle", o.t_gentle);
  r.number("t_success", o.t_success);
  r.integer("candidates", o.candidates);
  r.number("zero_motion_fraction", o.zero_motion_fraction);
  r.integer("max_regrasps", o.max_regrasps);
}

json optimizer_json(const OptimizerConfig& o) {
  return {
      {"t_gentle", o.t_gentle},
      {"t_success", o.t_success},
      {"candidates", o.candidates},
      {"zero_motion_fraction", o.zero_motion_fraction},
      {"max_regrasps", o.max_regrasps},
  };
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

}  // namespace

json to_json(const ModelConfig& m) {
  return {
      {"modalities", to_string(m.modalities)},
      {"backbone", to_string(m.backbone)},
      {"conv_channels", m.conv_channels},
      {"image_feature_size", m.image_feature_size},
      {"action_hidden", m.action_hidden},
      {"fusion_hidden", m.fusion_hidden},
      {"dropout", m.dropout},
      {"threshold", m.threshold},
      {"input_size", m.input_size},
      {"channels", m.channels},
      {"zero_init_head", m.zero_init_head},
  };
}

ModelConfig model_config_from_json(const json& j, ModelConfig base) {
  Reader r(j, "model");
  read_model(r, base);
  r.finish();
  return base;
}

json to_json(const TrainConfig& t) {
  return {
      {"batch_size", t.batch_size},
      {"epochs", t.epochs},
      {"learning_rate", t.learning_rate},
      {"decay", t.decay},
      {"momentum", t.momentum},
      {"weight_decay", t.weight_decay},
      {"seed", t.seed},
  };
}

RunConfig preset(Scale scale) {
  RunConfig c;
  c.scale = scale;
  if (scale == Scale::desk) {
    c.episodes = 500;
    c.sensing.render_size = 64;
    c.sensing.crop_size = 56;
    c.model.input_size = 56;
    c.model.action_hidden = 128;
    c.model.fusion_hidden = 128;
    c.train.epochs = 30;
    c.train.learning_rate = 1e-2;
    c.optimizer.candidates = 1000;
  } else {
    c.episodes = 1500;
    c.sensing.render_size = 256;
    c.sensing.crop_size = 224;
    c.sensing.tactile_px_per_mm = 10.0;
    c.sensing.blob_sigma_px = 12.0;
    c.sensing.blob_sigma_px_per_mm = 1.2;
    c.model.input_size = 224;
    c.model.action_hidden = 1024;
    c.model.fusion_hidden = 1024;
    c.train.epochs = 500;
    c.train.learning_rate = 1e-4;
    c.optimizer.candidates = 100000;
  }
  return c;
}

RunConfig config_from_json(const json& j, RunConfig base) {
  Reader r(j, "");
  if (const json* v = r.find("scale")) {
    if (!v->is_string()) throw ConfigError("scale", "expected \"desk\" or \"paper\"");
    const auto s = v->get<std::string>();
    if (s != "desk" && s != "paper") throw ConfigError("scale", "expected \"desk\" or \"paper\"");
    base.scale = s == "desk" ? Scale::desk : Scale::paper;
  }
  r.integer("seed", base.seed);
  r.integer("episodes", base.episodes);
  r.integer("workers", base.workers);
  r.string("out_dir", base.out_dir);
  r.section("hand", [&](Reader& s) { read_hand(s, base.hand); });
  r.section("world", [&](Reader& s) { read_world(s, base.world); });
  r.section("sensing", [&](Reader& s) { read_sensing(s, base.sensing); });
  r.section("labeling", [&](Reader& s) { read_labeling(s, base.labeling); });
  r.section("model", [&](Reader& s) { read_model(s, base.model); });
  r.section("train", [&](Reader& s) { read_train(s, base.train); });
  r.section("optimizer", [&](Reader& s) { read_optimizer(s, base.optimizer); });
  r.finish();
  validate(base);
  return base;
}

json to_json(const RunConfig& c) {
  return {
      {"scale", c.scale == Scale::desk ? "desk" : "paper"},
      {"seed", c.seed},
      {"episodes", c.episodes},
      {"workers", c.workers},
      {"out_dir", c.out_dir},
      {"hand", hand_json(c.hand)},
      {"world", world_json(c.world)},
      {"sensing", sensing_json(c.sensing)},
      {"labeling", labeling_json(c.labeling)},
      {"model", to_json(c.model)},
      {"train", to_json(c.train)},
      {"optimizer", optimizer_json(c.optimizer)},
  };
}

json world_section_json(const RunConfig& c) {
  return {
      {"hand", hand_json(c.hand)},
      {"world", world_json(c.world)},
      {"sensing", sensing_json(c.sensing)},
      {"labeling", labeling_json(c.labeling)},
  };
}

void validate(const RunConfig& c) {
  const auto& w = c.world;
  require(w.x_range_mm.lo <= w.x_range_mm.hi, "world.x_range_mm", "empty range");
  require(w.y_range_mm.lo <= w.y_range_mm.hi, "world.y_range_mm", "empty range");
  require(w.initial_z_mm.lo <= w.initial_z_mm.hi, "world.initial_z_mm", "empty range");
  require(w.initial_yaw_rad.lo <= w.initial_yaw_rad.hi, "world.initial_yaw_deg", "empty range");
  require(w.object_radius_mm > 0, "world.object_radius_mm", "must be > 0");
  require(w.lying_semi_major_mm > 0 && w.lying_semi_minor_mm > 0, "world.lying_semi_major_mm",
          "semi-axes must be > 0");
  require(w.stiffness_n_per_mm > 0, "world.stiffness_n_per_mm", "must be > 0");
  require(w.compliance > 0, "world.compliance", "must be > 0");
  require(w.sound_force_threshold_n > 0, "world.sound_force_threshold_n", "must be > 0");
  require(w.min_lift_force_n > 0, "world.min_lift_force_n", "must be > 0");
  require(w.max_center_offset_mm > 0, "world.max_center_offset_mm", "must be > 0");
  require(w.collision_force_n > 0, "world.collision_force_n", "must be > 0");
  require(w.detection_noise_mm >= 0, "world.detection_noise_mm", "must be >= 0");
  require(w.lying_probability >= 0 && w.lying_probability <= 1, "world.lying_probability",
          "must be in [0, 1]");
  require(w.joint_span_rad > 0, "world.joint_span_rad", "must be > 0");
  require(w.max_translation_mm >= 0, "world.max_translation_mm", "must be >= 0");
  require(w.max_rotation_rad >= 0, "world.max_rotation_deg", "must be >= 0");

  const auto& h = c.hand;
  require(h.thumb_links_mm.size() == h.thumb_joints.size(), "hand.active_joints.thumb",
          "one joint per thumb link required");
  require(h.middle_links_mm.size() == h.middle_joints.size(), "hand.active_joints.middle",
          "one joint per middle-finger link required");
  for (double l : h.thumb_links_mm) require(l > 0, "hand.link_lengths_mm.thumb", "lengths must be > 0");
  for (double l : h.middle_links_mm) require(l > 0, "hand.link_lengths_mm.middle", "lengths must be > 0");
  std::set<int> joints;
  for (int j : h.thumb_joints) joints.insert(j);
  for (int j : h.middle_joints) joints.insert(j);
  require(joints.size() == h.thumb_joints.size() + h.middle_joints.size(), "hand.active_joints",
          "joint indices must be distinct");
  require(*joints.begin() >= 0 && *joints.rbegin() < 16, "hand.active_joints", "indices must lie in [0, 16)");
  require(h.joint_limits_rad.lo < h.joint_limits_rad.hi, "hand.joint_limits_rad", "empty range");

  auto check_pose = [&](const ActivePose& p, const char* name) {
    const std::string field = std::string("world.") + name;
    require(p.thumb.size() == h.thumb_joints.size(), field + ".thumb", "wrong number of angles");
    require(p.middle.size() == h.middle_joints.size(), field + ".middle", "wrong number of angles");
  };
  check_pose(w.joint_min_pose, "joint_min_pose_rad");
  check_pose(w.open_pose, "open_pose_rad");
  check_pose(w.initial_pose, "initial_pose_rad");

  const auto& s = c.sensing;
  require(s.render_size > 0, "sensing.render_size", "must be > 0");
  require(s.crop_size > 0 && s.crop_size <= s.render_size, "sensing.crop_size", "must be in (0, render_size]");
  require(s.channels >= 1, "sensing.channels", "must be >= 1");
  require(s.noise_sigma >= 0, "sensing.noise_sigma", "must be >= 0");
  require(s.force_saturation_n > 0, "sensing.force_saturation_n", "must be > 0");
  require(s.supersample >= 1, "sensing.supersample", "must be >= 1");

  const auto& l = c.labeling;
  require(l.sound_threshold >= 0, "labeling.sound_threshold", "must be >= 0");
  require(l.logistic_l2 >= 0, "labeling.logistic_l2", "must be >= 0");
  require(l.refit_every > 0, "labeling.refit_every", "must be > 0");
  require(l.stability_source == "ground_truth" || l.stability_source == "logistic",
          "labeling.stability_source", "expected \"ground_truth\" or \"logistic\"");

  const auto& m = c.model;
  require(m.modalities.any(), "model.modalities", "at least one modality must be enabled");
  require(m.dropout >= 0 && m.dropout < 1, "model.dropout", "must be in [0, 1)");
  require(m.action_hidden > 0 && m.fusion_hidden > 0, "model.action_hidden", "hidden sizes must be > 0");
  require(!m.conv_channels.empty(), "model.conv_channels", "at least one block required");
  require(m.input_size == s.crop_size, "model.input_size", "must equal sensing.crop_size");
  require(m.channels == s.channels, "model.channels", "must equal sensing.channels");

  const auto& t = c.train;
  require(t.batch_size > 0, "train.batch_size", "must be > 0");
  require(t.epochs >= 0, "train.epochs", "must be >= 0");
  require(t.learning_rate > 0, "train.learning_rate", "must be > 0");
  require(t.decay > 0 && t.decay <= 1, "train.decay", "must be in (0, 1]");
  require(t.momentum >= 0 && t.momentum < 1, "train.momentum", "must be in [0, 1)");
  require(t.weight_decay >= 0, "train.weight_decay", "must be >= 0");

  const auto& o = c.optimizer;
  require(o.candidates > 0, "optimizer.candidates", "must be > 0");
  require(o.zero_motion_fraction >= 0 && o.zero_motion_fraction <= 1, "optimizer.zero_motion_fraction",
          "must be in [0, 1]");
  require(o.max_regrasps >= 1, "optimizer.max_regrasps", "must be >= 1");

  require(c.episodes >= 0, "episodes", "must be >= 0");
  require(c.workers >= 1, "workers", "must be >= 1");
}

}  // namespace gentle
