#include "phonoprobe/reprstore.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <zlib.h>

#include "phonoprobe/error.hpp"
#include "text.hpp"

namespace phonoprobe {

namespace {

constexpr char kMagic[4] = {'P', 'R', 'S', 'T'};

class ByteWriter {
public:
  template <class T>
  void put(T value) {
    static_assert(std::is_arithmetic_v<T>);
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    auto bits = std::bit_cast<U>(value);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bytes_.push_back(static_cast<std::uint8_t>(bits & 0xFFu));
      bits = static_cast<U>(bits >> 8);
    }
  }

  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  void put_raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }

  std::size_t size() const { return bytes_.size(); }
  const std::vector<std::uint8_t>& bytes() const { return bytes_; }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <class T>
  T get(const char* what) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t,
                                 std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint8_t>>;
    need(sizeof(T), what);
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<U>(bytes_[pos_ + i]) << (8 * i));
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorKind::corruption,
                  fmt::format("store truncated at byte offset {} while reading {} ({} bytes "
                              "needed, {} available)",
                              pos_, what, n, bytes_.size() - pos_));
    }
  }

  std::size_t pos() const { return pos_; }
  const std::uint8_t* here() const { return bytes_.data() + pos_; }
  void skip(std::size_t n) { pos_ += n; }
  bool at_end() const { return pos_ == bytes_.size(); }

private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(0L, data, static_cast<uInt>(n)));
}

void write_header(ByteWriter& w, const StoreHeader& h, std::uint64_t count) {
  w.put_raw(kMagic, 4);
  w.put(kStoreVersion);
  w.put_string(h.model_id);
  w.put(h.layer_id);
  w.put(h.dim);
  w.put(h.hop_s);
  w.put(h.offset_s);
  w.put(count);
  w.put(crc_of(w.bytes().data(), w.size()));
}

StoreHeader read_header(ByteReader& r, std::uint64_t& count) {
  r.need(4, "magic");
  if (std::memcmp(r.here(), kMagic, 4) != 0) {
    throw Error(ErrorKind::format, "not a .prst store (bad magic)");
  }
  r.skip(4);
  const auto version = r.get<std::uint32_t>("version");
  if (version != kStoreVersion) {
    throw Error(ErrorKind::format,
                fmt::format("unsupported .prst version {} (expected {})", version, kStoreVersion));
  }
  StoreHeader h;
  h.model_id = r.get_string("model_id");
  h.layer_id = r.get<std::int32_t>("layer_id");
  h.dim = r.get<std::uint32_t>("dim");
  h.hop_s = r.get<double>("hop_s");
  h.offset_s = r.get<double>("offset_s");
  count = r.get<std::uint64_t>("utterance count");
  const std::size_t header_end = r.pos();
  const auto stored_crc = r.get<std::uint32_t>("header checksum");
  if (crc_of(r.here() - header_end - 4, header_end) != stored_crc) {
    throw Error(ErrorKind::format, "header checksum mismatch");
  }
  if (h.dim == 0 || !(h.hop_s > 0.0) || !(h.offset_s >= 0.0) || !std::isfinite(h.hop_s) ||
      !std::isfinite(h.offset_s)) {
    throw Error(ErrorKind::format, "invalid header geometry");
  }
  return h;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open store '{}'", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double snap(double u) {
  const double r = std::round(u);
  return std::abs(u - r) < 1e-9 ? r : u;
}

} // namespace

LayerStore::LayerStore(StoreHeader header, std::vector<StoreRecord> records)
    : header_(std::move(header)), records_(std::move(records)) {
  if (header_.dim == 0) throw Error(ErrorKind::contract, "store dim must be positive");
  if (!(header_.hop_s > 0.0) || !(header_.offset_s >= 0.0)) {
    throw Error(ErrorKind::contract, "store needs hop_s > 0 and offset_s >= 0");
  }
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (r.frames.rows() < 1) {
      throw Error(ErrorKind::contract,
                  fmt::format("utterance '{}' has no frames", r.utterance_id));
    }
    if (r.frames.cols() != static_cast<Eigen::Index>(header_.dim)) {
      throw Error(ErrorKind::contract,
                  fmt::format("utterance '{}' has dim {} but the store dim is {}", r.utterance_id,
                              r.frames.cols(), header_.dim));
    }
    if (!index_.emplace(r.utterance_id, i).second) {
      throw Error(ErrorKind::contract,
                  fmt::format("duplicate utterance '{}' in store", r.utterance_id));
    }
  }
}

const StoreRecord* LayerStore::find(const std::string& utterance_id) const {
  const auto it = index_.find(utterance_id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

std::vector<std::uint8_t> encode_store(const LayerStore& store) {
  ByteWriter w;
  write_header(w, store.header(), store.records().size());
  for (const auto& rec : store.records()) {
    w.put_string(rec.utterance_id);
    w.put(static_cast<std::uint32_t>(rec.frames.rows()));
    const float* data = rec.frames.data();
    for (Eigen::Index i = 0; i < rec.frames.size(); ++i) w.put(data[i]);
  }
  return w.take();
}

LayerStore decode_store(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes);
  std::uint64_t count = 0;
  auto header = read_header(r, count);
  std::vector<StoreRecord> records;
  for (std::uint64_t u = 0; u < count; ++u) {
    StoreRecord rec;
    rec.utterance_id = r.get_string("utterance id");
    const auto n_frames = r.get<std::uint32_t>("n_frames");
    if (n_frames == 0) {
      throw Error(ErrorKind::corruption,
                  fmt::format("utterance '{}' has zero frames (byte offset {})", rec.utterance_id,
                              r.pos() - 4));
    }
    const std::size_t n_values = static_cast<std::size_t>(n_frames) * header.dim;
    r.need(n_values * 4, "frame payload");
    rec.frames.resize(n_frames, header.dim);
    float* data = rec.frames.data();
    for (std::size_t i = 0; i < n_values; ++i) data[i] = r.get<float>("frame payload");
    records.push_back(std::move(rec));
  }
  if (!r.at_end()) {
    throw Error(ErrorKind::corruption,
                fmt::format("trailing bytes after the last utterance at byte offset {}", r.pos()));
  }
  try {
    return LayerStore(std::move(header), std::move(records));
  } catch (const Error& e) {
    throw Error(ErrorKind::corruption, e.what());
  }
}

void write_store(const LayerStore& store, const std::filesystem::path& path) {
  const auto bytes = encode_store(store);
  // Written to a sibling temp file first so readers never see a partial store.
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, fmt::format("cannot write store '{}'", path.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, fmt::format("short write to '{}'", path.string()));
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::io, fmt::format("cannot move store into '{}'", path.string()));
}

LayerStore read_store(const std::filesystem::path& path) {
  try {
    return decode_store(slurp(path));
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

StoreHeader read_store_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open store '{}'", path.string()));
  // model ids are short; 64 KiB comfortably covers any header.
  std::vector<std::uint8_t> bytes(1 << 16);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  bytes.resize(static_cast<std::size_t>(in.gcount()));
  try {
    ByteReader r(bytes);
    std::uint64_t count = 0;
    return read_header(r, count);
  } catch (const Error& e) {
    rethrow_with_context(e, path.string());
  }
}

FrameSpan overlapping_frames(const StoreHeader& header, std::size_t n_frames, double start_s,
                             double end_s) {
  const double u_start = snap((start_s - header.offset_s) / header.hop_s);
  const double u_end = snap((end_s - header.offset_s) / header.hop_s);
  if (!(u_end > 0.0)) return {};
  // Frame t overlaps iff t < u_end and t + 1 > u_start.
  const double first = std::max(0.0, std::floor(u_start));
  const double last = std::min(static_cast<double>(n_frames), std::ceil(u_end));
  if (!(first < last)) return {};
  return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
}

PoolResult pool(const LayerStore& store, const PhoneToken& token) {
  const auto* rec = store.find(token.utterance_id);
  if (!rec) {
    throw Error(ErrorKind::contract,
                fmt::format("utterance '{}' is not in store {}/{}", token.utterance_id,
                            store.header().model_id, store.header().layer_id));
  }
  const auto n_frames = static_cast<std::size_t>(rec->frames.rows());
  const auto span = overlapping_frames(store.header(), n_frames, token.start_s, token.end_s);
  if (span.size() == 0) {
    const bool before = token.end_s <= store.header().offset_s;
    return PoolSkip{fmt::format("phone '{}' [{}, {}) of '{}' lies {} the {} stored frames",
                                token.label, token.start_s, token.end_s, token.utterance_id,
                                before ? "before" : "beyond", n_frames)};
  }
  PhoneVector pv;
  pv.layer_id = store.header().layer_id;
  pv.n_frames_pooled = span.size();
  pv.values = rec->frames.middleRows(static_cast<Eigen::Index>(span.first),
                                     static_cast<Eigen::Index>(span.size()))
                  .cast<double>()
                  .colwise()
                  .sum()
                  .transpose() /
              static_cast<double>(span.size());
  return pv;
}

Assembly assemble(const LayerStore& store, const std::vector<TargetToken>& targets) {
  if (targets.empty()) throw Error(ErrorKind::contract, "no targets to assemble");
  Assembly out;
  std::vector<Eigen::VectorXd> rows;
  for (const auto& t : targets) {
    auto result = pool(store, t.token);
    if (auto* skip = std::get_if<PoolSkip>(&result)) {
      out.skipped.push_back({t, std::move(skip->reason)});
      continue;
    }
    rows.push_back(std::move(std::get<PhoneVector>(result).values));
    out.matrix.labels.push_back(static_cast<int>(t.label));
    out.matrix.tokens.push_back(t);
  }
  if (rows.empty()) {
    throw Error(ErrorKind::data,
                fmt::format("all {} targets were skipped while pooling", targets.size()));
  }
  out.matrix.rows.resize(static_cast<Eigen::Index>(rows.size()), store.header().dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.matrix.rows.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  }
  return out;
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open manifest '{}'", path.string()));
  Manifest m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != "utterance_id,audio_path") {
        throw Error(ErrorKind::parse,
                    fmt::format("{}:1: expected header 'utterance_id,audio_path'", path.string()));
      }
      continue;
    }
    if (text::trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || comma == 0) {
      throw Error(ErrorKind::parse, fmt::format("{}:{}: expected 'utterance_id,audio_path'",
                                                path.string(), line_no));
    }
    if (!m.emplace(line.substr(0, comma), line.substr(comma + 1)).second) {
      throw Error(ErrorKind::validation, fmt::format("{}:{}: duplicate utterance '{}'",
                                                     path.string(), line_no,
                                                     line.substr(0, comma)));
    }
  }
  return m;
}

void write_manifest(const Manifest& manifest, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, fmt::format("cannot write manifest '{}'", path.string()));
  out << "utterance_id,audio_path\n";
  for (const auto& [id, audio] : manifest) {
    if (id.find(',') != std::string::npos) {
      throw Error(ErrorKind::contract, fmt::format("utterance id '{}' contains a comma", id));
    }
    out << id << ',' << audio << '\n';
  }
}

} // namespace phonoprobe
