#ifndef PHONOPROBE_REPRSTORE_HPP
#define PHONOPROBE_REPRSTORE_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "phonoprobe/phonepatterns.hpp"

namespace phonoprobe {

// .prst layout, all integers and floats little-endian:
//
//   "PRST"                 4 bytes magic
//   version                u32 (currently 1)
//   model_id               u32 byte length + UTF-8 bytes
//   layer_id               i32
//   dim                    u32
//   hop_s                  f64
//   offset_s               f64
//   utterance count        u64
//   header crc32           u32 over every preceding byte
//   per utterance:
//     id                   u32 byte length + UTF-8 bytes
//     n_frames             u32
//     frames               n_frames * dim binary32, row-major

inline constexpr std::uint32_t kStoreVersion = 1;

using FrameMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct StoreHeader {
  std::string model_id;
  std::int32_t layer_id = 0;
  std::uint32_t dim = 0;
  double hop_s = 0.02;
  double offset_s = 0.0;

  bool operator==(const StoreHeader&) const = default;
};

struct StoreRecord {
  std::string utterance_id;
  FrameMatrix frames; // n_frames x dim

  bool operator==(const StoreRecord& o) const {
    return utterance_id == o.utterance_id && frames.rows() == o.frames.rows() &&
           frames.cols() == o.frames.cols() && frames == o.frames;
  }
};

/// Per-layer frame representations of every utterance.
class LayerStore {
public:
  LayerStore() = default;
  LayerStore(StoreHeader header, std::vector<StoreRecord> records);

  const StoreHeader& header() const { return header_; }
  const std::vector<StoreRecord>& records() const { return records_; }
  const StoreRecord* find(const std::string& utterance_id) const;

  /// [start, end) of frame t in seconds.
  double frame_start(std::size_t t) const { return header_.offset_s + t * header_.hop_s; }

  bool operator==(const LayerStore& o) const {
    return header_ == o.header_ && records_ == o.records_;
  }

private:
  StoreHeader header_;
  std::vector<StoreRecord> records_;
  std::map<std::string, std::size_t> index_;
};

std::vector<std::uint8_t> encode_store(const LayerStore& store);
LayerStore decode_store(const std::vector<std::uint8_t>& bytes);

void write_store(const LayerStore& store, const std::filesystem::path& path);
LayerStore read_store(const std::filesystem::path& path);
/// Reads only the header; cheap way to validate a config's layer files.
StoreHeader read_store_header(const std::filesystem::path& path);

/// Frames [first, last) of an utterance overlapping a phone interval with
/// positive measure.
struct FrameSpan {
  std::size_t first = 0;
  std::size_t last = 0;
  std::size_t size() const { return last - first; }
};

/// Overlapping frame range; empty span when the phone misses every frame.
FrameSpan overlapping_frames(const StoreHeader& header, std::size_t n_frames, double start_s,
                             double end_s);

struct PhoneVector {
  Eigen::VectorXd values;
  std::int32_t layer_id = 0;
  std::size_t n_frames_pooled = 0;
};

struct PoolSkip {
  std::string reason;
};

using PoolResult = std::variant<PhoneVector, PoolSkip>;

/// Mean of the frames overlapping the token. A token whose utterance is
/// missing throws; a token that overlaps no frame yields PoolSkip.
PoolResult pool(const LayerStore& store, const PhoneToken& token);

struct DataMatrix {
  Eigen::MatrixXd rows;    // n x D
  std::vector<int> labels; // class index per row
  std::vector<TargetToken> tokens;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return static_cast<std::size_t>(rows.cols()); }
};

struct SkippedToken {
  TargetToken target;
  std::string reason;
};

struct Assembly {
  DataMatrix matrix;
  std::vector<SkippedToken> skipped;
};

/// Pools every target in order; throws ErrorKind::data if all are skipped.
Assembly assemble(const LayerStore& store, const std::vector<TargetToken>& targets);

/// utterance_id -> source audio path, as written by the extractor.
using Manifest = std::map<std::string, std::string>;

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);

} // namespace phonoprobe

#endif
