#pragma once

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gentle {

inline constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

struct Range {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Values for the active joints only, grouped per finger in chain order.
struct ActivePose {
  std::vector<double> thumb;
  std::vector<double> middle;
};

/// Planar hand geometry. The pinch point (end-effector origin) sits at the
/// hand-frame origin; both finger bases lie `palm_offset_mm` behind it.
struct HandConfig {
  std::vector<double> thumb_links_mm{50.0, 40.0};
  std::vector<double> middle_links_mm{50.0, 25.0, 15.0};
  double base_separation_mm = 80.0;
  double palm_offset_mm = 88.0;
  std::vector<int> thumb_joints{14, 15};
  std::vector<int> middle_joints{5, 6, 7};
  Range joint_limits_rad{-0.6, 1.6};
  /// Angle held by every inactive joint.
  double inactive_joint_rad = 0.0;
};

struct WorldConfig {
  Range x_range_mm{450.0, 650.0};
  Range y_range_mm{-200.0, 200.0};

  double object_radius_mm = 25.0;
  double upright_height_mm = 60.0;
  double lying_semi_major_mm = 35.0;
  double lying_semi_minor_mm = 18.0;
  double lying_height_mm = 36.0;
  /// Probability that a collection episode places the object lying down.
  double lying_probability = 0.5;

  double stiffness_n_per_mm = 0.5;
  double compliance = 1.0;
  double sound_force_threshold_n = 3.0;
  double min_lift_force_n = 1.5;
  double max_center_offset_mm = 16.0;
  double collision_force_n = 30.0;
  double collision_clearance_mm = 16.0;
  /// Passive wrist travel along the hand x axis that balances finger forces.
  double wrist_compliance_mm = 20.0;
  /// Sound amplitude per radian of summed joint travel beyond the threshold.
  double actuator_noise_per_rad = 1.0;
  double actuator_travel_threshold_rad = 2.7;

  double detection_noise_mm = 2.0;
  double lying_detection_bias_x_mm = 6.0;
  double lying_detection_bias_y_mm = 0.0;
  double initial_perturbation_mm = 5.0;
  Range initial_z_mm{5.0, 30.0};
  Range initial_yaw_rad{deg_to_rad(-30.0), deg_to_rad(30.0)};
  double min_hand_z_mm = 2.0;
  /// Fingers pass over the object once the hand is this close to its top.
  double height_clearance_mm = 3.0;

  // Regrasp sampling box.
  double max_translation_mm = 10.0;
  double max_rotation_rad = deg_to_rad(15.0);
  double joint_span_rad = 0.3;
  ActivePose joint_min_pose{{0.017, 0.017}, {0.0, 0.0, 0.0}};
  ActivePose open_pose{{-0.3, -0.3}, {-0.3, -0.3, -0.3}};
  ActivePose initial_pose{{0.167, 0.167}, {0.15, 0.15, 0.15}};
};

struct SensingConfig {
  int render_size = 64;
  int crop_size = 56;
  int channels = 1;
  double noise_sigma = 0.02;
  /// Sensor noise is truncated at this many standard deviations.
  double noise_truncation = 2.0;

  double tactile_px_per_mm = 2.5;
  double force_saturation_n = 8.0;
  double blob_sigma_px = 3.0;
  double blob_sigma_px_per_mm = 0.3;

  double visual_background = 0.1;
  double visual_finger_intensity = 0.45;
  double finger_width_mm = 8.0;
  int supersample = 3;
};

struct LabelConfig {
  double sound_threshold = 0.5;
  double logistic_l2 = 1e-3;
  int supervised_episodes = 50;
  int refit_every = 100;
  /// "ground_truth" or "logistic".
  std::string stability_source = "ground_truth";
};

enum class Backbone { dense, residual, plain };

const char* to_string(Backbone b);
Backbone backbone_from_string(const std::string& s);

struct Modalities {
  bool vision = true;
  bool touch = true;
  bool action = true;

  bool any() const { return vision || touch || action; }
  bool operator==(const Modalities&) const = default;
};

std::string to_string(const Modalities& m);
/// Parses "vision,touch,action" style lists and the preset names
/// full, no_action, vision_action, vision_touch, action, vision.
Modalities modalities_from_string(const std::string& s);

struct ModelConfig {
  Modalities modalities;
  Backbone backbone = Backbone::dense;
  std::vector<int> conv_channels{8, 16, 32};
  int image_feature_size = 64;
  int action_hidden = 1024;
  int fusion_hidden = 1024;
  double dropout = 0.25;
  double threshold = 0.5;
  int input_size = 56;
  int channels = 1;
  bool zero_init_head = true;
};

struct TrainConfig {
  int batch_size = 8;
  int epochs = 500;
  double learning_rate = 1e-4;
  double decay = 0.98;
  double momentum = 0.9;
  /// L2 penalty added to every parameter gradient.
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
};

struct OptimizerConfig {
  double t_gentle = 0.95;
  double t_success = 0.95;
  int candidates = 1000;
  double zero_motion_fraction = 0.05;
  int max_regrasps = 5;
};

enum class Scale { desk, paper };

struct RunConfig {
  Scale scale = Scale::desk;
  std::uint64_t seed = 0;
  int episodes = 500;
  int workers = 1;
  std::string out_dir = "out";

  WorldConfig world;
  HandConfig hand;
  SensingConfig sensing;
  LabelConfig labeling;
  ModelConfig model;
  TrainConfig train;
  OptimizerConfig optimizer;
};

/// Preset magnitudes for a scale; everything else keeps its default.
RunConfig preset(Scale scale);

/// Overlays `j` onto `base`. Unknown keys and type mismatches raise
/// ConfigError naming the offending field.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base);
nlohmann::json to_json(const RunConfig& c);

/// Semantic checks (nonempty ranges, positive thresholds, ...).
void validate(const RunConfig& c);

/// Section of the configuration that determines simulated data.
nlohmann::json world_section_json(const RunConfig& c);

nlohmann::json to_json(const ModelConfig& m);
ModelConfig model_config_from_json(const nlohmann::json& j, ModelConfig base = {});
nlohmann::json to_json(const TrainConfig& t);

}  // namespace gentle
