#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>

#include <zlib.h>

#include "gentle/config.hpp"
#include "gentle/errors.hpp"
#include "gentle/parallel.hpp"
#include "gentle/png.hpp"
#include "gentle/rng.hpp"

using namespace gentle;
using nlohmann::json;

namespace {

std::string field_of(const json& j, RunConfig base = preset(Scale::desk)) {
  try {
    config_from_json(j, base);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

std::uint32_t be32(const std::string& s, std::size_t at) {
  return std::uint32_t(std::uint8_t(s[at])) << 24 | std::uint32_t(std::uint8_t(s[at + 1])) << 16 |
         std::uint32_t(std::uint8_t(s[at + 2])) << 8 | std::uint32_t(std::uint8_t(s[at + 3]));
}

}  // namespace

TEST_CASE("scale presets") {
  const RunConfig desk = preset(Scale::desk);
  CHECK(desk.sensing.render_size == 64);
  CHECK(desk.optimizer.candidates == 1000);
  CHECK(desk.train.epochs == 30);
  CHECK(desk.episodes == 500);
  CHECK(desk.optimizer.t_gentle == 0.95);
  CHECK(desk.optimizer.t_success == 0.95);
  CHECK(desk.optimizer.max_regrasps == 5);
  CHECK(std::lround(desk.optimizer.candidates * desk.optimizer.zero_motion_fraction) == 50);

  const RunConfig paper = preset(Scale::paper);
  CHECK(paper.episodes == 1500);
  CHECK(paper.optimizer.candidates == 100000);
  CHECK(paper.sensing.crop_size == 224);
  CHECK(paper.model.input_size == 224);
  CHECK(paper.train.epochs == 500);
  CHECK(paper.train.learning_rate == 1e-4);
  CHECK(paper.train.decay == 0.98);
  CHECK(paper.train.batch_size == 8);
  CHECK(paper.model.action_hidden == 1024);
  CHECK_NOTHROW(validate(desk));
  CHECK_NOTHROW(validate(paper));
}

TEST_CASE("configuration round-trips through JSON") {
  for (Scale s : {Scale::desk, Scale::paper}) {
    RunConfig c = preset(s);
    c.seed = 77;
    c.world.max_rotation_rad = deg_to_rad(12.0);
    c.model.modalities = modalities_from_string("vision_action");
    c.model.backbone = Backbone::residual;
    const json j = to_json(c);
    const RunConfig back = config_from_json(j, RunConfig{});
    CHECK(to_json(back) == j);
    CHECK(back.seed == 77);
    CHECK(back.world.max_rotation_rad == doctest::Approx(deg_to_rad(12.0)).epsilon(1e-14));
    CHECK(back.model.modalities == c.model.modalities);
  }
}

TEST_CASE("overlays change only what they name") {
  const RunConfig base = preset(Scale::desk);
  const RunConfig c = config_from_json({{"train", {{"epochs", 3}}}, {"optimizer", {{"t_gentle", 0.8}}}}, base);
  CHECK(c.train.epochs == 3);
  CHECK(c.optimizer.t_gentle == 0.8);
  CHECK(c.train.learning_rate == base.train.learning_rate);
  json a = to_json(c), b = to_json(base);
  a["train"].erase("epochs");
  b["train"].erase("epochs");
  a["optimizer"].erase("t_gentle");
  b["optimizer"].erase("t_gentle");
  CHECK(a == b);
}

TEST_CASE("schema violations name the offending field") {
  CHECK(field_of({{"model", {{"bogus", 1}}}}) == "model.bogus");
  CHECK(field_of({{"nonsense", true}}) == "nonsense");
  CHECK(field_of({{"train", {{"epochs", "many"}}}}) == "train.epochs");
  CHECK(field_of({{"train", {{"epochs", 2.5}}}}) == "train.epochs");
  CHECK(field_of({{"world", {{"x_range_mm", {1, 2, 3}}}}}) == "world.x_range_mm");
  CHECK(field_of({{"scale", "huge"}}) == "scale");
  CHECK(field_of({{"sensing", {{"crop_size", 80}}}}) == "sensing.crop_size");
  CHECK(field_of({{"model", {{"input_size", 40}}}}) == "model.input_size");
  CHECK(field_of({{"optimizer", {{"max_regrasps", 0}}}}) == "optimizer.max_regrasps");
  CHECK(field_of({{"labeling", {{"stability_source", "vibes"}}}}) == "labeling.stability_source");
  CHECK(field_of({{"model", {{"dropout", 1.0}}}}) == "model.dropout");
  CHECK(field_of({{"world", {{"y_range_mm", {5, -5}}}}}) == "world.y_range_mm");
  CHECK(field_of({{"workers", 0}}) == "workers");
  CHECK(field_of({{"train", 3}}) == "train");
  CHECK(field_of(json::object()) == "");
}

TEST_CASE("modality and backbone names") {
  CHECK(modalities_from_string("full") == Modalities{true, true, true});
  CHECK(modalities_from_string("no_action") == Modalities{true, true, false});
  CHECK(modalities_from_string("vision_action") == Modalities{true, false, true});
  CHECK(modalities_from_string("touch,action") == Modalities{false, true, true});
  CHECK(to_string(Modalities{true, false, true}) == "vision,action");
  CHECK(modalities_from_string(to_string(Modalities{false, true, false})) == Modalities{false, true, false});
  CHECK_THROWS_AS(modalities_from_string(""), ConfigError);
  CHECK_THROWS_AS(modalities_from_string("smell"), ConfigError);
  for (Backbone b : {Backbone::dense, Backbone::residual, Backbone::plain})
    CHECK(backbone_from_string(to_string(b)) == b);
  CHECK_THROWS_AS(backbone_from_string("vgg"), ConfigError);
}

TEST_CASE("random streams") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  const Rng root(9);
  Rng f1 = root.fork(1), f1_again = root.fork(1), f2 = root.fork(2);
  CHECK(f1.next_u64() == f1_again.next_u64());
  CHECK(f1.next_u64() != f2.next_u64());
  CHECK(derive_seed(1, 2) != derive_seed(2, 1));

  Rng r(11);
  std::array<int, 7> hist{};
  double sum = 0.0;
  for (int i = 0; i < 70000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
    ++hist[r.index(7)];
  }
  CHECK(sum / 70000 == doctest::Approx(0.5).epsilon(0.01));
  for (int h : hist) CHECK(std::abs(h - 10000) < 400);
}

TEST_CASE("parallel_for visits each index once and rethrows") {
  std::vector<std::atomic<int>> hits(1000);
  parallel_for(hits.size(), 4, [&](std::size_t i) { ++hits[i]; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                    if (i == 7) throw DomainError("boom");
                  }),
                  DomainError);
}

TEST_CASE("PNG export") {
  Image img(5, 3);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 5; ++x) img.at(x, y) = float(x) / 4.0f;
  img.at(0, 0) = -1.0f;
  const auto path = std::filesystem::temp_directory_path() / "gentle_config_test.png";
  write_png(img, path);
  std::ifstream in(path, std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  REQUIRE(bytes.size() > 33);
  CHECK(bytes.substr(0, 8) == std::string("\x89PNG\r\n\x1a\n", 8));
  CHECK(bytes.substr(12, 4) == "IHDR");
  CHECK(be32(bytes, 16) == 5);
  CHECK(be32(bytes, 20) == 3);
  CHECK(bytes[24] == 8);  // bit depth
  CHECK(bytes[25] == 0);  // grayscale

  // Walk the chunks, checking CRCs and inflating the image data.
  std::size_t at = 8;
  std::string idat;
  while (at < bytes.size()) {
    const std::uint32_t len = be32(bytes, at);
    const std::string type = bytes.substr(at + 4, 4);
    const auto crc = crc32(crc32(0, nullptr, 0), reinterpret_cast<const Bytef*>(bytes.data() + at + 4), len + 4);
    CHECK(crc == be32(bytes, at + 8 + len));
    if (type == "IDAT") idat += bytes.substr(at + 8, len);
    at += 12 + len;
  }
  CHECK(at == bytes.size());
  std::vector<unsigned char> raw(3 * 6);
  uLongf raw_len = raw.size();
  REQUIRE(uncompress(raw.data(), &raw_len, reinterpret_cast<const Bytef*>(idat.data()), idat.size()) == Z_OK);
  CHECK(raw_len == raw.size());
  CHECK(raw[0] == 0);  // filter byte
  CHECK(raw[1] == 0);  // clamped
  CHECK(raw[5] == 255);
  CHECK(raw[6 + 3] == 128);
}
