#include "gentle/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>
#include <set>

#include <openssl/evp.h>
#include <zlib.h>

#include "gentle/errors.hpp"
#include "gentle/parallel.hpp"

namespace gentle {

static_assert(std::endian::native == std::endian::little, "the GGL1 codec assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'G', 'G', 'L', '1'};
constexpr std::uint64_t kHeaderBytes = 4 + 4 + 4 + 2 + 2 + 2 + 32;
constexpr std::uint64_t kCountOffset = 8;
constexpr std::uint64_t kProvenanceBytes = 4 + 1 + 1 + 2 + 2;
constexpr int kImagesPerSample = 5;

template <typename T>
void put(std::vector<std::uint8_t>& buf, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  buf.insert(buf.end(), p, p + sizeof(T));
}

template <typename T>
T get(const std::uint8_t*& p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  p += sizeof(T);
  return value;
}

void put_image(std::vector<std::uint8_t>& buf, const Image& img) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(img.pixels.data());
  buf.insert(buf.end(), p, p + img.pixels.size() * sizeof(float));
}

Image get_image(const std::uint8_t*& p, const ImageDims& d) {
  Image img(d.width, d.height, d.channels);
  const std::size_t bytes = static_cast<std::size_t>(img.pixels.size()) * sizeof(float);
  std::memcpy(img.pixels.data(), p, bytes);
  p += bytes;
  return img;
}

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (n > 0) {
    const uInt chunk = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

void encode_sample(std::vector<std::uint8_t>& buf, const Sample& s, const ImageDims& dims) {
  for (const Image* img : {&s.state.visual, &s.state.tactile_left, &s.state.tactile_right, &s.state.tactile_left_ref,
                           &s.state.tactile_right_ref}) {
    if (img->width != dims.width || img->height != dims.height || img->channels != dims.channels)
      throw FormatError(FormatErrc::inconsistent, "sample image shape differs from the dataset dimensions");
  }
  buf.clear();
  put<std::uint32_t>(buf, s.provenance.episode);
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(s.provenance.moment));
  put<std::uint8_t>(buf, s.provenance.crop_index);
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(s.provenance.crop.x));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(s.provenance.crop.y));
  for (double v : s.action.values()) put<double>(buf, v);
  put<std::uint8_t>(buf, s.outcome.stability);
  put<std::uint8_t>(buf, s.outcome.gentleness);
  put<double>(buf, s.metrics.displacement);
  put<double>(buf, s.metrics.position_error);
  put<double>(buf, s.metrics.tactile_differential);
  put_image(buf, s.state.visual);
  put_image(buf, s.state.tactile_left);
  put_image(buf, s.state.tactile_right);
  put_image(buf, s.state.tactile_left_ref);
  put_image(buf, s.state.tactile_right_ref);
  put<std::uint32_t>(buf, crc32_of(buf.data(), buf.size()));
}

Sample decode_sample(const std::vector<std::uint8_t>& buf, const ImageDims& dims, std::size_t index) {
  const std::size_t body = buf.size() - 4;
  std::uint32_t stored;
  std::memcpy(&stored, buf.data() + body, 4);
  if (crc32_of(buf.data(), body) != stored)
    throw FormatError(FormatErrc::checksum, "checksum mismatch in sample " + std::to_string(index), index);

  const std::uint8_t* p = buf.data();
  Sample s;
  s.provenance.episode = get<std::uint32_t>(p);
  const auto moment = get<std::uint8_t>(p);
  if (moment > 2)
    throw FormatError(FormatErrc::inconsistent, "invalid moment in sample " + std::to_string(index), index);
  s.provenance.moment = static_cast<Moment>(moment);
  s.provenance.crop_index = get<std::uint8_t>(p);
  s.provenance.crop.x = get<std::uint16_t>(p);
  s.provenance.crop.y = get<std::uint16_t>(p);
  std::array<double, RegraspAction::kValues> values;
  for (double& v : values) v = get<double>(p);
  s.action = RegraspAction::from_values(values);
  s.outcome.stability = get<std::uint8_t>(p);
  s.outcome.gentleness = get<std::uint8_t>(p);
  s.metrics.displacement = get<double>(p);
  s.metrics.position_error = get<double>(p);
  s.metrics.tactile_differential = get<double>(p);
  s.state.visual = get_image(p, dims);
  s.state.tactile_left = get_image(p, dims);
  s.state.tactile_right = get_image(p, dims);
  s.state.tactile_left_ref = get_image(p, dims);
  s.state.tactile_right_ref = get_image(p, dims);
  return s;
}

std::vector<std::uint8_t> encode_header(const ImageDims& dims, const ConfigHash& hash, std::uint32_t count) {
  std::vector<std::uint8_t> buf(kMagic, kMagic + 4);
  put<std::uint32_t>(buf, kDatasetVersion);
  put<std::uint32_t>(buf, count);
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(dims.width));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(dims.height));
  put<std::uint16_t>(buf, static_cast<std::uint16_t>(dims.channels));
  buf.insert(buf.end(), hash.begin(), hash.end());
  return buf;
}

void check_dims(const ImageDims& d) {
  if (d.width <= 0 || d.height <= 0 || d.channels <= 0 || d.width > 65535 || d.height > 65535 || d.channels > 65535)
    throw FormatError(FormatErrc::inconsistent, "image dimensions must fit in u16 and be positive");
}

// Reads and validates the header, leaving the stream at the first sample.
DatasetManifest read_header(std::ifstream& in, const std::filesystem::path& path) {
  if (!in) throw FormatError(FormatErrc::io, "cannot open " + path.string());
  std::vector<std::uint8_t> head(kHeaderBytes);
  in.read(reinterpret_cast<char*>(head.data()), static_cast<std::streamsize>(head.size()));
  const auto got = static_cast<std::uint64_t>(in.gcount());
  if (got >= 4 && std::memcmp(head.data(), kMagic, 4) != 0)
    throw FormatError(FormatErrc::bad_magic, path.string() + " is not a GGL1 dataset");
  if (got < kHeaderBytes) throw FormatError(FormatErrc::truncated, path.string() + ": header truncated");

  const std::uint8_t* p = head.data() + 4;
  DatasetManifest m;
  m.version = get<std::uint32_t>(p);
  if (m.version != kDatasetVersion)
    throw FormatError(FormatErrc::version_mismatch, "dataset version " + std::to_string(m.version) +
                                                        " is not supported (expected " +
                                                        std::to_string(kDatasetVersion) + ")");
  m.count = get<std::uint32_t>(p);
  m.dims.width = get<std::uint16_t>(p);
  m.dims.height = get<std::uint16_t>(p);
  m.dims.channels = get<std::uint16_t>(p);
  std::memcpy(m.config_hash.data(), p, 32);
  m.sample_bytes = sample_record_bytes(m.dims);

  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec) throw FormatError(FormatErrc::io, "cannot stat " + path.string());
  const std::uint64_t expected = kHeaderBytes + m.sample_bytes * m.count;
  if (size < expected)
    throw FormatError(FormatErrc::truncated, path.string() + ": " + std::to_string(size) + " bytes, expected " +
                                                 std::to_string(expected));
  if (size > expected)
    throw FormatError(FormatErrc::inconsistent, path.string() + ": trailing bytes after the last sample");
  m.offsets.resize(m.count);
  for (std::uint32_t i = 0; i < m.count; ++i) m.offsets[i] = kHeaderBytes + m.sample_bytes * i;
  return m;
}

}  // namespace

ConfigHash config_hash(const RunConfig& config) {
  const std::string text = world_section_json(config).dump();
  ConfigHash out{};
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size())
    throw std::runtime_error("SHA-256 digest failed");
  return out;
}

std::string to_hex(const ConfigHash& h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  for (auto b : h) {
    s += digits[b >> 4];
    s += digits[b & 15];
  }
  return s;
}

std::vector<Sample> augment(const EpisodeRecord& episode, Rng& rng, int crop_size) {
  std::vector<Sample> out;
  out.reserve(kSamplesPerEpisode);
  for (int m = 0; m < 3; ++m) {
    const Observation& obs = episode.moments[m];
    if (!obs.state.consistent() || obs.state.visual.width == 0)
      throw DomainError("episode " + std::to_string(episode.episode_id) + " is missing observation moment " +
                        to_string(static_cast<Moment>(m)));
    const Image& ref = obs.state.visual;
    const bool room = ref.width > crop_size || ref.height > crop_size;
    CropOffset previous{-1, -1};
    for (int c = 0; c < kCropsPerMoment; ++c) {
      CropOffset at = random_crop_offset(rng, ref, crop_size, crop_size);
      while (room && at == previous) at = random_crop_offset(rng, ref, crop_size, crop_size);
      previous = at;
      Sample s;
      s.state = crop(obs.state, at, crop_size, crop_size);
      s.action = obs.action;
      s.outcome = episode.outcome;
      s.provenance = {episode.episode_id, static_cast<Moment>(m), static_cast<std::uint8_t>(c), at};
      s.metrics = episode.metrics;
      out.push_back(std::move(s));
    }
  }
  return out;
}

Dataset build_dataset(const std::vector<EpisodeRecord>& episodes, int crop_size, const ConfigHash& hash,
                      int workers) {
  Dataset d;
  d.dims = {crop_size, crop_size, episodes.empty() ? 1 : episodes.front().moments[0].state.visual.channels};
  d.config_hash = hash;
  d.samples.resize(episodes.size() * kSamplesPerEpisode);
  parallel_for(episodes.size(), workers, [&](std::size_t i) {
    auto samples = augment_episode(episodes[i], crop_size);
    std::move(samples.begin(), samples.end(), d.samples.begin() + static_cast<std::ptrdiff_t>(i * kSamplesPerEpisode));
  });
  return d;
}

std::vector<Sample> augment_episode(const EpisodeRecord& episode, int crop_size) {
  Rng rng(derive_seed(episode.seed, 0xc209));
  return augment(episode, rng, crop_size);
}

std::uint32_t write_augmented(const std::vector<EpisodeRecord>& episodes, int crop_size, const ConfigHash& hash,
                              const std::filesystem::path& path) {
  const int channels = episodes.empty() ? 1 : episodes.front().moments[0].state.visual.channels;
  DatasetWriter writer(path, {crop_size, crop_size, channels}, hash);
  for (const auto& e : episodes)
    for (const auto& s : augment_episode(e, crop_size)) writer.append(s);
  writer.finalize();
  return writer.count();
}

std::uint64_t sample_record_bytes(const ImageDims& dims) {
  const std::uint64_t pixels = std::uint64_t(dims.width) * dims.height * dims.channels;
  return kProvenanceBytes + RegraspAction::kValues * 8 + 2 + 3 * 8 + kImagesPerSample * pixels * 4 + 4;
}

DatasetWriter::DatasetWriter(const std::filesystem::path& path, const ImageDims& dims, const ConfigHash& hash)
    : path_(path), dims_(dims) {
  check_dims(dims);
  out_.open(path, std::ios::binary | std::ios::trunc);
  if (!out_) throw FormatError(FormatErrc::io, "cannot create " + path.string());
  const auto header = encode_header(dims, hash, 0);
  out_.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
}

DatasetWriter::~DatasetWriter() {
  if (!finalized_) {
    try {
      finalize();
    } catch (...) {
    }
  }
}

void DatasetWriter::append(const Sample& sample) {
  if (finalized_) throw FormatError(FormatErrc::io, "append after finalize");
  if (count_ == UINT32_MAX) throw FormatError(FormatErrc::inconsistent, "too many samples");
  encode_sample(buffer_, sample, dims_);
  out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (!out_) throw FormatError(FormatErrc::io, "write failed: " + path_.string());
  ++count_;
}

void DatasetWriter::finalize() {
  if (finalized_) return;
  finalized_ = true;
  std::vector<std::uint8_t> count;
  put<std::uint32_t>(count, count_);
  out_.seekp(static_cast<std::streamoff>(kCountOffset));
  out_.write(reinterpret_cast<const char*>(count.data()), 4);
  out_.close();
  if (!out_) throw FormatError(FormatErrc::io, "write failed: " + path_.string());
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  DatasetWriter w(path, dataset.dims, dataset.config_hash);
  for (const auto& s : dataset.samples) w.append(s);
  w.finalize();
}

DatasetReader::DatasetReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
  manifest_ = read_header(in_, path);
  buffer_.resize(manifest_.sample_bytes);
}

Sample DatasetReader::next() {
  if (done()) throw FormatError(FormatErrc::inconsistent, "read past the last sample");
  in_.read(reinterpret_cast<char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  if (static_cast<std::uint64_t>(in_.gcount()) != buffer_.size())
    throw FormatError(FormatErrc::truncated, "sample " + std::to_string(index_) + " truncated", index_);
  return decode_sample(buffer_, manifest_.dims, index_++);
}

Dataset read_dataset(const std::filesystem::path& path) {
  DatasetReader reader(path);
  Dataset d;
  d.dims = reader.manifest().dims;
  d.config_hash = reader.manifest().config_hash;
  d.samples.reserve(reader.manifest().count);
  while (!reader.done()) d.samples.push_back(reader.next());
  return d;
}

DatasetManifest inspect_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return read_header(in, path);
}

std::vector<Fold> split_kfold(const std::vector<std::uint32_t>& episode_ids, int k, std::uint64_t seed) {
  if (k < 2) throw DomainError("split_kfold: k must be at least 2");
  std::vector<std::uint32_t> episodes(episode_ids.begin(), episode_ids.end());
  std::sort(episodes.begin(), episodes.end());
  episodes.erase(std::unique(episodes.begin(), episodes.end()), episodes.end());
  if (episodes.size() < static_cast<std::size_t>(k))
    throw DomainError("split_kfold: " + std::to_string(episodes.size()) + " episodes cannot fill " +
                      std::to_string(k) + " folds");
  Rng rng(seed);
  for (std::size_t i = episodes.size(); i > 1; --i) std::swap(episodes[i - 1], episodes[rng.index(i)]);

  std::vector<int> fold_of_rank(episodes.size());
  std::vector<std::pair<std::uint32_t, int>> assignment;
  assignment.reserve(episodes.size());
  for (std::size_t i = 0; i < episodes.size(); ++i) assignment.emplace_back(episodes[i], static_cast<int>(i % k));
  std::sort(assignment.begin(), assignment.end());

  std::vector<Fold> folds(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < episode_ids.size(); ++i) {
    const auto it = std::lower_bound(assignment.begin(), assignment.end(), std::make_pair(episode_ids[i], -1));
    const int f = it->second;
    for (int j = 0; j < k; ++j) (j == f ? folds[j].validation : folds[j].train).push_back(i);
  }
  return folds;
}

std::vector<Fold> split_kfold(const Dataset& dataset, int k, std::uint64_t seed) {
  std::vector<std::uint32_t> ids;
  ids.reserve(dataset.size());
  for (const auto& s : dataset.samples) ids.push_back(s.provenance.episode);
  return split_kfold(ids, k, seed);
}

ClassCounts class_distribution(const std::vector<GraspOutcome>& outcomes) {
  ClassCounts c;
  for (const auto& o : outcomes) ++c.counts[o.class_index()];
  return c;
}

ClassCounts class_distribution(const Dataset& dataset) {
  ClassCounts c;
  for (const auto& s : dataset.samples) ++c.counts[s.outcome.class_index()];
  return c;
}

nlohmann::json to_json(const ClassCounts& c) {
  return {{"(1,1)", c.at(1, 1)}, {"(1,0)", c.at(1, 0)}, {"(0,1)", c.at(0, 1)}, {"(0,0)", c.at(0, 0)},
          {"total", c.total()}};
}

nlohmann::json to_json(const DatasetManifest& m, bool with_offsets) {
  nlohmann::json j = {{"format", "GGL1"},
                      {"version", m.version},
                      {"count", m.count},
                      {"width", m.dims.width},
                      {"height", m.dims.height},
                      {"channels", m.dims.channels},
                      {"config_hash", to_hex(m.config_hash)},
                      {"sample_bytes", m.sample_bytes}};
  if (with_offsets) j["offsets"] = m.offsets;
  return j;
}

}  // namespace gentle
