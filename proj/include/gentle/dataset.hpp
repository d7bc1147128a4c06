#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gentle/config.hpp"
#include "gentle/rng.hpp"
#include "gentle/sensing.hpp"
#include "gentle/sim.hpp"

namespace gentle {

inline constexpr std::uint32_t kDatasetVersion = 1;
inline constexpr int kCropsPerMoment = 2;
inline constexpr int kSamplesPerEpisode = 3 * kCropsPerMoment;

using ConfigHash = std::array<std::uint8_t, 32>;

struct Provenance {
  std::uint32_t episode = 0;
  Moment moment = Moment::initial;
  std::uint8_t crop_index = 0;
  CropOffset crop;
  bool operator==(const Provenance&) const = default;
};

struct Sample {
  SensoryState state;
  RegraspAction action;
  GraspOutcome outcome;
  Provenance provenance;
  ForceMetrics metrics;
  bool operator==(const Sample&) const = default;
};

struct ImageDims {
  int width = 0;
  int height = 0;
  int channels = 1;
  bool operator==(const ImageDims&) const = default;
};

struct Dataset {
  ImageDims dims;
  ConfigHash config_hash{};
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool operator==(const Dataset&) const = default;
};

struct DatasetManifest {
  std::uint32_t version = kDatasetVersion;
  std::uint32_t count = 0;
  ImageDims dims;
  ConfigHash config_hash{};
  std::uint64_t sample_bytes = 0;
  /// Byte offset of every sample record.
  std::vector<std::uint64_t> offsets;
};

/// SHA-256 of the data-generating configuration section.
ConfigHash config_hash(const RunConfig& config);
std::string to_hex(const ConfigHash& h);

/// Three observation moments times two random crops. Both crops of a moment
/// share the episode outcome and differ in offset whenever the source admits
/// more than one window.
std::vector<Sample> augment(const EpisodeRecord& episode, Rng& rng, int crop_size);

/// Augments every episode with a crop stream derived from its seed.
Dataset build_dataset(const std::vector<EpisodeRecord>& episodes, int crop_size, const ConfigHash& hash,
                      int workers = 1);

/// Augmentation with the crop stream derived from the episode seed.
std::vector<Sample> augment_episode(const EpisodeRecord& episode, int crop_size);

/// Streams the augmented episodes to `path`; same bytes as build_dataset
/// followed by write_dataset, without holding every sample in memory.
std::uint32_t write_augmented(const std::vector<EpisodeRecord>& episodes, int crop_size, const ConfigHash& hash,
                              const std::filesystem::path& path);

/// Bytes of one serialized sample (including its CRC32).
std::uint64_t sample_record_bytes(const ImageDims& dims);

/// Streams samples to disk; the count in the header is patched on finalize.
class DatasetWriter {
 public:
  DatasetWriter(const std::filesystem::path& path, const ImageDims& dims, const ConfigHash& hash);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void append(const Sample& sample);
  void finalize();
  std::uint32_t count() const { return count_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  ImageDims dims_;
  std::uint32_t count_ = 0;
  bool finalized_ = false;
  std::vector<std::uint8_t> buffer_;
};

void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Sequential reader; the header and file size are validated on open.
class DatasetReader {
 public:
  explicit DatasetReader(const std::filesystem::path& path);

  const DatasetManifest& manifest() const { return manifest_; }
  /// Reads sample `next_index()`; throws FormatError on checksum failure.
  Sample next();
  bool done() const { return index_ >= manifest_.count; }
  std::uint32_t next_index() const { return index_; }

 private:
  std::ifstream in_;
  DatasetManifest manifest_;
  std::uint32_t index_ = 0;
  std::vector<std::uint8_t> buffer_;
};

/// Throws FormatError with a distinct code per failure class.
Dataset read_dataset(const std::filesystem::path& path);

/// Header, size and offsets without loading images.
DatasetManifest inspect_dataset(const std::filesystem::path& path);

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
};

/// Episode-grouped k-fold split: episodes are shuffled with `seed` and dealt
/// round-robin, so all samples of an episode share a fold.
std::vector<Fold> split_kfold(const std::vector<std::uint32_t>& episode_ids, int k, std::uint64_t seed);
std::vector<Fold> split_kfold(const Dataset& dataset, int k, std::uint64_t seed);

/// Counts indexed by GraspOutcome::class_index.
struct ClassCounts {
  std::array<std::size_t, 4> counts{};

  std::size_t at(int stability, int gentleness) const {
    return counts[GraspOutcome{static_cast<std::uint8_t>(stability), static_cast<std::uint8_t>(gentleness)}.class_index()];
  }
  std::size_t total() const { return counts[0] + counts[1] + counts[2] + counts[3]; }
};

ClassCounts class_distribution(const std::vector<GraspOutcome>& outcomes);
ClassCounts class_distribution(const Dataset& dataset);

nlohmann::json to_json(const ClassCounts& c);
nlohmann::json to_json(const DatasetManifest& m, bool with_offsets = false);

}  // namespace gentle
