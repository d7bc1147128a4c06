#include "gentle/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gentle/errors.hpp"

namespace gentle {

namespace {

constexpr char kModelMagic[4] = {'G', 'G', 'M', '1'};
constexpr std::uint32_t kModelVersion = 1;

// Writes one sample's image (center-cropped to `size`) into a {C, N, S, S} buffer.
void place_image(const Image& img, int size, int n, int batch, float* dst, bool tactile, const Image* ref) {
  if (img.width < size || img.height < size)
    throw DomainError("model input: image " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                      " is smaller than the network input " + std::to_string(size));
  const CropOffset at{(img.width - size) / 2, (img.height - size) / 2};
  const Image cropped = (img.width == size && img.height == size) ? img : crop(img, at, size, size);
  const Image src = tactile ? background_subtract(cropped, (ref->width == size && ref->height == size)
                                                               ? *ref
                                                               : crop(*ref, at, size, size))
                            : cropped;
  const Eigen::Index plane = Eigen::Index(size) * size;
  for (int c = 0; c < src.channels; ++c) {
    float* out = dst + (Eigen::Index(c) * batch + n) * plane;
    const float* in = src.pixels.data() + c * plane;
    for (Eigen::Index p = 0; p < plane; ++p) out[p] = in[p] - 0.5f;
  }
}

Tensor action_block(const Eigen::MatrixXf& normalized, int first, int count) {
  const int N = static_cast<int>(normalized.cols());
  Tensor t({count, N});
  for (int d = 0; d < count; ++d)
    for (int n = 0; n < N; ++n) t.data(Eigen::Index(d) * N + n) = normalized(first + d, n);
  return t;
}

std::vector<PredictedOutcome> to_outcomes(const Var& probs) {
  const int N = probs.shape()[1];
  std::vector<PredictedOutcome> out(static_cast<std::size_t>(N));
  for (int n = 0; n < N; ++n) out[n] = {probs.data()(n), probs.data()(N + n)};
  return out;
}

}  // namespace

ActionNormalization ActionNormalization::fit(const std::vector<RegraspAction>& actions) {
  ActionNormalization norm;
  if (actions.empty()) return norm;
  for (int d = 0; d < kActionInputs; ++d) {
    double sum = 0.0, sq = 0.0;
    for (const auto& a : actions) sum += a.values()[d];
    const double mean = sum / double(actions.size());
    for (const auto& a : actions) sq += (a.values()[d] - mean) * (a.values()[d] - mean);
    const double sd = std::sqrt(sq / double(actions.size()));
    norm.mean[d] = static_cast<float>(mean);
    norm.scale[d] = sd > 1e-9 ? static_cast<float>(sd) : 1.0f;
  }
  return norm;
}

ModelInput PreparedSet::gather(const std::vector<std::size_t>& indices) const {
  ModelInput in;
  in.batch = static_cast<int>(indices.size());
  const Eigen::Index plane = Eigen::Index(image_size) * image_size;
  auto copy = [&](const std::vector<float>& from, Tensor& to) {
    to = Tensor({1, in.batch, image_size, image_size});
    for (int n = 0; n < in.batch; ++n)
      std::memcpy(to.data.data() + n * plane, from.data() + Eigen::Index(indices[n]) * plane, plane * sizeof(float));
  };
  copy(vision, in.vision);
  copy(touch_left, in.touch_left);
  copy(touch_right, in.touch_right);
  in.actions.resize(kActionInputs, in.batch);
  for (int n = 0; n < in.batch; ++n) in.actions.col(n) = actions.col(Eigen::Index(indices[n]));
  return in;
}

PreparedSet prepare(const Dataset& dataset, int input_size) {
  if (dataset.dims.channels != 1) throw DomainError("prepare: only single-channel images are supported");
  PreparedSet set;
  set.size = static_cast<int>(dataset.size());
  set.image_size = input_size;
  const std::size_t plane = std::size_t(input_size) * input_size;
  set.vision.resize(plane * set.size);
  set.touch_left.resize(plane * set.size);
  set.touch_right.resize(plane * set.size);
  set.actions.resize(kActionInputs, set.size);
  set.outcomes.reserve(set.size);
  set.episodes.reserve(set.size);
  set.metrics.reserve(set.size);
  for (int i = 0; i < set.size; ++i) {
    const Sample& s = dataset.samples[i];
    // A single-sample "batch" per slot keeps the plane offset at i * plane.
    place_image(s.state.visual, input_size, 0, 1, set.vision.data() + i * plane, false, nullptr);
    place_image(s.state.tactile_left, input_size, 0, 1, set.touch_left.data() + i * plane, true,
                &s.state.tactile_left_ref);
    place_image(s.state.tactile_right, input_size, 0, 1, set.touch_right.data() + i * plane, true,
                &s.state.tactile_right_ref);
    const auto v = s.action.values();
    for (int d = 0; d < kActionInputs; ++d) set.actions(d, i) = static_cast<float>(v[d]);
    set.outcomes.push_back(s.outcome);
    set.episodes.push_back(s.provenance.episode);
    set.metrics.push_back(s.metrics);
  }
  return set;
}

ModelInput make_input(const std::vector<const SensoryState*>& states, const std::vector<RegraspAction>& actions,
                      int input_size) {
  if (states.size() != actions.size()) throw DomainError("make_input: state and action counts differ");
  ModelInput in;
  in.batch = static_cast<int>(states.size());
  const int channels = in.batch ? states.front()->visual.channels : 1;
  in.vision = Tensor({channels, in.batch, input_size, input_size});
  in.touch_left = Tensor({channels, in.batch, input_size, input_size});
  in.touch_right = Tensor({channels, in.batch, input_size, input_size});
  in.actions.resize(kActionInputs, in.batch);
  for (int n = 0; n < in.batch; ++n) {
    const SensoryState& s = *states[n];
    if (!s.consistent()) throw DomainError("make_input: sensory state images differ in shape");
    place_image(s.visual, input_size, n, in.batch, in.vision.data.data(), false, nullptr);
    place_image(s.tactile_left, input_size, n, in.batch, in.touch_left.data.data(), true, &s.tactile_left_ref);
    place_image(s.tactile_right, input_size, n, in.batch, in.touch_right.data.data(), true, &s.tactile_right_ref);
    const auto v = actions[n].values();
    for (int d = 0; d < kActionInputs; ++d) in.actions(d, n) = static_cast<float>(v[d]);
  }
  return in;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config), seed_(seed) {
  if (!config.modalities.any()) throw ConfigError("model.modalities", "at least one modality must be enabled");
  if (config.dropout < 0.0 || config.dropout >= 1.0) throw ConfigError("model.dropout", "must be in [0,1)");
  if (config.conv_channels.empty()) throw ConfigError("model.conv_channels", "at least one block required");
  if (config.input_size < 2) throw ConfigError("model.input_size", "must be at least 2");

  Rng rng(seed);
  const auto& m = config.modalities;
  if (m.vision) backbones_.push_back(make_backbone("vision", rng));
  if (m.touch) {
    backbones_.push_back(make_backbone("touch_left", rng));
    backbones_.push_back(make_backbone("touch_right", rng));
  }
  int fused = static_cast<int>(backbones_.size()) * config.image_feature_size;
  if (m.action) {
    motion1_ = make_dense("motion.fc1", kMotionInputs, config.action_hidden, rng);
    motion2_ = make_dense("motion.fc2", config.action_hidden, config.action_hidden, rng);
    pose1_ = make_dense("pose.fc1", kPoseInputs, config.action_hidden, rng);
    pose2_ = make_dense("pose.fc2", config.action_hidden, config.action_hidden, rng);
    fused += 2 * config.action_hidden;
  }
  fusion_ = make_dense("fusion", fused, config.fusion_hidden, rng);
  head_ = make_dense("head", config.fusion_hidden, 2, rng, config.zero_init_head);
}

Model::Conv Model::make_conv(const std::string& name, int in, int out, int k, Rng& rng) {
  const double limit = std::sqrt(6.0 / double(in * k * k));
  Tensor w({out, in, k, k});
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data(i) = static_cast<float>(rng.uniform(-limit, limit));
  Conv c{Var::parameter(std::move(w)), Var::parameter(Tensor({out}))};
  params_.push_back({name + ".w", c.w});
  params_.push_back({name + ".b", c.b});
  return c;
}

Model::Dense Model::make_dense(const std::string& name, int in, int out, Rng& rng, bool zero) {
  const double limit = std::sqrt(6.0 / double(in));
  Tensor w({in, out});
  if (!zero)
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data(i) = static_cast<float>(rng.uniform(-limit, limit));
  Dense d{Var::parameter(std::move(w)), Var::parameter(Tensor({out}))};
  params_.push_back({name + ".w", d.w});
  params_.push_back({name + ".b", d.b});
  return d;
}

Model::ConvNet Model::make_backbone(const std::string& name, Rng& rng) {
  ConvNet net;
  int in = config_.channels;
  int accumulated = config_.channels;
  for (std::size_t b = 0; b < config_.conv_channels.size(); ++b) {
    const int out = config_.conv_channels[b];
    const std::string block = name + ".block" + std::to_string(b);
    switch (config_.backbone) {
      case Backbone::plain:
        net.convs.push_back(make_conv(block + ".conv", in, out, 3, rng));
        in = out;
        break;
      case Backbone::residual:
        net.convs.push_back(make_conv(block + ".conv1", in, out, 3, rng));
        net.convs.push_back(make_conv(block + ".conv2", out, out, 3, rng));
        net.skips.push_back(make_conv(block + ".skip", in, out, 1, rng));
        in = out;
        break;
      case Backbone::dense:
        net.convs.push_back(make_conv(block + ".conv", accumulated, out, 3, rng));
        accumulated += out;
        break;
    }
  }
  net.project = make_dense(name + ".project", backbone_output_size(), config_.image_feature_size, rng);
  return net;
}

int Model::backbone_output_size() const {
  int side = config_.input_size / 2;
  for (std::size_t b = 0; b + 1 < config_.conv_channels.size(); ++b) side /= 2;
  if (side < 1) throw ConfigError("model.input_size", "too small for the number of pooling stages");
  int channels = config_.conv_channels.back();
  if (config_.backbone == Backbone::dense) {
    channels = config_.channels;
    for (int c : config_.conv_channels) channels += c;
  }
  return channels * side * side;
}

int Model::branch_count() const {
  return static_cast<int>(backbones_.size()) + (config_.modalities.action ? 2 : 0);
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += std::size_t(p.value.value().size());
  return n;
}

void Model::zero_grad() {
  for (auto& p : params_) p.value.zero_grad();
}

Var Model::run_backbone(const ConvNet& net, const Var& image) const {
  using nn::add, nn::concat, nn::conv2d, nn::dense, nn::dropout, nn::flatten, nn::max_pool2d, nn::relu, nn::sigmoid;
  Var x = max_pool2d(image, 2);
  const std::size_t blocks = config_.conv_channels.size();
  for (std::size_t b = 0; b < blocks; ++b) {
    switch (config_.backbone) {
      case Backbone::plain:
        x = relu(conv2d(x, net.convs[b].w, net.convs[b].b, 1, 1));
        break;
      case Backbone::residual: {
        const Var h = relu(conv2d(x, net.convs[2 * b].w, net.convs[2 * b].b, 1, 1));
        const Var main = conv2d(h, net.convs[2 * b + 1].w, net.convs[2 * b + 1].b, 1, 1);
        x = relu(add(main, conv2d(x, net.skips[b].w, net.skips[b].b, 1, 0)));
        break;
      }
      case Backbone::dense:
        x = concat<float>({x, relu(conv2d(x, net.convs[b].w, net.convs[b].b, 1, 1))});
        break;
    }
    if (b + 1 < blocks) x = max_pool2d(x, 2);
  }
  return relu(dense(flatten(x), net.project.w, net.project.b));
}

Var Model::image_features(const ModelInput& input) const {
  std::vector<Var> parts;
  std::size_t next = 0;
  if (config_.modalities.vision) parts.push_back(run_backbone(backbones_[next++], Var::constant(input.vision)));
  if (config_.modalities.touch) {
    parts.push_back(run_backbone(backbones_[next++], Var::constant(input.touch_left)));
    parts.push_back(run_backbone(backbones_[next++], Var::constant(input.touch_right)));
  }
  if (parts.empty()) return {};
  return parts.size() == 1 ? parts.front() : nn::concat(parts);
}

Var Model::mlp(const Dense& a, const Dense& b, const Var& x, bool training, Rng* rng) const {
  using nn::add, nn::concat, nn::conv2d, nn::dense, nn::dropout, nn::flatten, nn::max_pool2d, nn::relu, nn::sigmoid;
  const double rate = config_.dropout;
  Var h = relu(dense(x, a.w, a.b));
  if (training) h = dropout(h, rate, *rng, true);
  h = relu(dense(h, b.w, b.b));
  if (training) h = dropout(h, rate, *rng, true);
  return h;
}

Var Model::action_features(const Eigen::MatrixXf& actions, bool training, Rng* rng) const {
  if (!config_.modalities.action) return {};
  Eigen::MatrixXf normalized = actions;
  for (int d = 0; d < kActionInputs; ++d)
    normalized.row(d) = (normalized.row(d).array() - normalization.mean[d]) / normalization.scale[d];
  const Var motion = mlp(motion1_, motion2_, Var::constant(action_block(normalized, 0, kMotionInputs)), training, rng);
  const Var pose = mlp(pose1_, pose2_, Var::constant(action_block(normalized, kMotionInputs, kPoseInputs)), training, rng);
  return nn::concat<float>({motion, pose});
}

Var Model::fuse(const Var& image, const Var& action, bool training, Rng* rng) const {
  using nn::add, nn::concat, nn::conv2d, nn::dense, nn::dropout, nn::flatten, nn::max_pool2d, nn::relu, nn::sigmoid;
  Var z;
  if (image && action)
    z = concat<float>({image, action});
  else
    z = image ? image : action;
  Var h = relu(dense(z, fusion_.w, fusion_.b));
  if (training) h = dropout(h, config_.dropout, *rng, true);
  return sigmoid(dense(h, head_.w, head_.b));
}

Var Model::forward(const ModelInput& input, bool training, Rng* rng) const {
  if (training && !rng) throw DomainError("Model::forward: training mode needs an rng for dropout");
  if (input.actions.cols() != input.batch) throw ShapeError("Model::forward: action batch differs from image batch");
  // Branch order fixes the dropout draw order: images carry no dropout,
  // then motion, pose, fusion.
  const Var image = image_features(input);
  const Var action = action_features(input.actions, training, rng);
  return fuse(image, action, training, rng);
}

std::vector<PredictedOutcome> Model::predict(const ModelInput& input) const {
  nn::NoGradGuard guard;
  return to_outcomes(forward(input, false));
}

PredictedOutcome Model::predict(const SensoryState& state, const RegraspAction& action) const {
  return predict(make_input({&state}, {action}, config_.input_size)).front();
}

StateEncoding Model::encode(const SensoryState& state) const {
  nn::NoGradGuard guard;
  StateEncoding enc;
  const Var f = image_features(make_input({&state}, {RegraspAction{}}, config_.input_size));
  if (f) enc.features = f.data().matrix();
  return enc;
}

std::vector<PredictedOutcome> Model::predict_actions(const StateEncoding& encoding,
                                                     const std::vector<RegraspAction>& actions) const {
  nn::NoGradGuard guard;
  const int N = static_cast<int>(actions.size());
  if (N == 0) return {};
  Var image;
  if (encoding.features.size()) {
    const int F = static_cast<int>(encoding.features.size());
    Tensor t({F, N});
    for (int f = 0; f < F; ++f) t.data.segment(Eigen::Index(f) * N, N).setConstant(encoding.features(f));
    image = Var::constant(std::move(t));
  }
  Eigen::MatrixXf raw(kActionInputs, N);
  for (int n = 0; n < N; ++n) {
    const auto v = actions[n].values();
    for (int d = 0; d < kActionInputs; ++d) raw(d, n) = static_cast<float>(v[d]);
  }
  return to_outcomes(fuse(image, action_features(raw, false, nullptr), false, nullptr));
}

void save_model(const Model& model, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "GGM1";
  header["version"] = kModelVersion;
  header["config"] = to_json(model.config());
  header["seed"] = model.seed();
  header["normalization"] = {{"mean", model.normalization.mean}, {"scale", model.normalization.scale}};
  for (const auto& p : model.parameters()) header["parameters"].push_back({{"name", p.name}, {"shape", p.value.shape()}});
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  const auto length = static_cast<std::uint32_t>(text.size());
  out.write(kModelMagic, 4);
  out.write(reinterpret_cast<const char*>(&length), 4);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& p : model.parameters())
    out.write(reinterpret_cast<const char*>(p.value.data().data()),
              static_cast<std::streamsize>(p.value.data().size() * sizeof(float)));
  if (!out) throw FormatError(FormatErrc::io, "write failed: " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  char magic[4] = {};
  std::uint32_t length = 0;
  in.read(magic, 4);
  if (in.gcount() == 4 && std::memcmp(magic, kModelMagic, 4) != 0)
    throw FormatError(FormatErrc::bad_magic, path.string() + " is not a GGM1 model");
  in.read(reinterpret_cast<char*>(&length), 4);
  if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": header truncated");
  std::string text(length, '\0');
  in.read(text.data(), length);
  if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": header truncated");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(FormatErrc::inconsistent, path.string() + ": malformed header: " + e.what());
  }
  if (header.value("format", "") != "GGM1" || header.value("version", 0u) != kModelVersion)
    throw FormatError(FormatErrc::version_mismatch, path.string() + ": unsupported model version");

  Model model(model_config_from_json(header.at("config")), header.at("seed").get<std::uint64_t>());
  model.normalization.mean = header.at("normalization").at("mean").get<std::array<float, kActionInputs>>();
  model.normalization.scale = header.at("normalization").at("scale").get<std::array<float, kActionInputs>>();
  const auto& listed = header.at("parameters");
  auto& params = model.parameters();
  if (listed.size() != params.size())
    throw FormatError(FormatErrc::inconsistent, path.string() + ": parameter list does not match the config");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (listed[i].at("name").get<std::string>() != params[i].name ||
        listed[i].at("shape").get<nn::Shape>() != params[i].value.shape())
      throw FormatError(FormatErrc::inconsistent, path.string() + ": parameter " + params[i].name + " differs");
    auto& data = params[i].value.value().data;
    in.read(reinterpret_cast<char*>(data.data()), static_cast<std::streamsize>(data.size() * sizeof(float)));
    if (!in) throw FormatError(FormatErrc::truncated, path.string() + ": parameter data truncated");
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError(FormatErrc::inconsistent, path.string() + ": trailing bytes");
  return model;
}

}  // namespace gentle
