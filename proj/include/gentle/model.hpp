#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gentle/config.hpp"
#include "gentle/dataset.hpp"
#include "gentle/nn/ops.hpp"
#include "gentle/sensing.hpp"
#include "gentle/world.hpp"

namespace gentle {

using Var = nn::Var<float>;
using Tensor = nn::Tensor<float>;

/// (f_s, f_g).
struct PredictedOutcome {
  double stability = 0.5;
  double gentleness = 0.5;
  bool operator==(const PredictedOutcome&) const = default;
};

/// Strictly greater than the threshold is positive.
inline GraspOutcome classify(const PredictedOutcome& p, double threshold = 0.5) {
  return {static_cast<std::uint8_t>(p.stability > threshold), static_cast<std::uint8_t>(p.gentleness > threshold)};
}

inline constexpr int kMotionInputs = 4;
inline constexpr int kPoseInputs = kJointCount;
inline constexpr int kActionInputs = kMotionInputs + kPoseInputs;

/// Per-value affine map applied to RegraspAction::values() before the MLPs.
struct ActionNormalization {
  std::array<float, kActionInputs> mean{};
  std::array<float, kActionInputs> scale = filled(1.0f);

  /// Standardization over the given actions; constant values keep scale 1.
  static ActionNormalization fit(const std::vector<RegraspAction>& actions);
  bool operator==(const ActionNormalization&) const = default;

 private:
  static std::array<float, kActionInputs> filled(float v) {
    std::array<float, kActionInputs> a;
    a.fill(v);
    return a;
  }
};

/// One batch of network inputs. Images are {1, N, S, S}; vision is centered
/// at 0.5 and tactile images are background-subtracted then centered.
/// `actions` holds raw RegraspAction values, one column per sample.
struct ModelInput {
  int batch = 0;
  Tensor vision;
  Tensor touch_left;
  Tensor touch_right;
  Eigen::MatrixXf actions;  // kActionInputs x N
};

/// Preprocessed images of a whole dataset, gathered into batches by index.
struct PreparedSet {
  int size = 0;
  int image_size = 0;
  std::vector<float> vision;
  std::vector<float> touch_left;
  std::vector<float> touch_right;
  Eigen::MatrixXf actions;  // kActionInputs x size
  std::vector<GraspOutcome> outcomes;
  std::vector<std::uint32_t> episodes;
  std::vector<ForceMetrics> metrics;

  ModelInput gather(const std::vector<std::size_t>& indices) const;
};

/// Center-crops to `input_size` when the images are larger.
PreparedSet prepare(const Dataset& dataset, int input_size);
ModelInput make_input(const std::vector<const SensoryState*>& states, const std::vector<RegraspAction>& actions,
                      int input_size);

struct NamedParameter {
  std::string name;
  Var value;
};

/// Image features of one sensory state, reused across candidate actions.
struct StateEncoding {
  Eigen::VectorXf features;
};

/// Action-conditional two-head predictor. Enabled modalities contribute
/// branches in the order vision, left touch, right touch, motion MLP, pose
/// MLP; their outputs are concatenated into one fusion layer and a sigmoid
/// head.
class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);
  // Parameters are shared graph nodes; a copy would alias them.
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  int branch_count() const;
  std::vector<NamedParameter>& parameters() { return params_; }
  const std::vector<NamedParameter>& parameters() const { return params_; }
  std::size_t parameter_count() const;
  void zero_grad();

  ActionNormalization normalization;

  /// Probabilities {2, N}: row 0 stability, row 1 gentleness. Training mode
  /// applies dropout drawn from `rng`.
  Var forward(const ModelInput& input, bool training, Rng* rng = nullptr) const;

  /// Eval mode, no graph.
  std::vector<PredictedOutcome> predict(const ModelInput& input) const;
  PredictedOutcome predict(const SensoryState& state, const RegraspAction& action) const;

  StateEncoding encode(const SensoryState& state) const;
  /// Same values as predict() on (state, action) pairs, with the image
  /// branches evaluated once.
  std::vector<PredictedOutcome> predict_actions(const StateEncoding& encoding,
                                                const std::vector<RegraspAction>& actions) const;

 private:
  struct Conv {
    Var w, b;
  };
  struct Dense {
    Var w, b;
  };
  struct ConvNet {
    std::vector<Conv> convs;    // main path, two per residual block
    std::vector<Conv> skips;    // residual 1x1 projections
    Dense project;
  };

  Conv make_conv(const std::string& name, int in, int out, int k, Rng& rng);
  Dense make_dense(const std::string& name, int in, int out, Rng& rng, bool zero = false);
  ConvNet make_backbone(const std::string& name, Rng& rng);
  Var run_backbone(const ConvNet& net, const Var& image) const;
  Var image_features(const ModelInput& input) const;
  Var action_features(const Eigen::MatrixXf& actions, bool training, Rng* rng) const;
  Var fuse(const Var& image, const Var& action, bool training, Rng* rng) const;
  Var mlp(const Dense& a, const Dense& b, const Var& x, bool training, Rng* rng) const;
  int backbone_output_size() const;

  ModelConfig config_;
  std::uint64_t seed_;
  std::vector<NamedParameter> params_;
  std::vector<ConvNet> backbones_;  // enabled image branches in order
  Dense motion1_, motion2_, pose1_, pose2_;
  Dense fusion_, head_;
};

void save_model(const Model& model, const std::filesystem::path& path);
/// Throws FormatError on bad magic, version, layout or size.
Model load_model(const std::filesystem::path& path);

}  // namespace gentle
